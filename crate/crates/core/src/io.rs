//! On-disk formats.
//!
//! Binary files are little-endian:
//!
//! * feature file: `"CNNFEAT1"`, u32 layer tag, u32 frame count N, u32 dimension D,
//!   u32 dtype (0 = f32, 1 = u16), then N x D values row-major;
//! * confusion matrix: `"CONFMAT1"`, u32 R, u32 T, then R x T f32 row-major;
//! * renders: binary PGM (`P5`, maxval 255).
//!
//! Text files are comma separated with a header line.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{FormatError, Result, VprError};
use crate::eval::GeoTag;
use crate::features::{Dtype, FeatureSet, FeatureVector, Image};
use crate::filters::{FinalMatch, LinearFit};
use crate::matching::ConfusionMatrix;
use crate::numfmt::fmt_sig;

pub const FEATURE_MAGIC: &[u8; 8] = b"CNNFEAT1";
pub const CONFUSION_MAGIC: &[u8; 8] = b"CONFMAT1";
const FEATURE_HEADER_LEN: usize = 24;
const CONFUSION_HEADER_LEN: usize = 16;

pub const GROUND_TRUTH_HEADER: &str = "test_index,train_index";
pub const GEOTAG_HEADER: &str = "frame_index,lat_deg,lon_deg";
pub const FINAL_MATCHES_HEADER: &str =
    "test_index,predicted_train_index,alpha,beta,plausible,accepted,distance";

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| VprError::io(path, e))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| VprError::io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(bytes)
        .and_then(|_| w.flush())
        .map_err(|e| VprError::io(path, e))
}

fn u32_at(bytes: &[u8], offset: usize) -> u32 {
    u32::from_le_bytes(bytes[offset..offset + 4].try_into().unwrap())
}

fn check_magic(bytes: &[u8], magic: &[u8; 8], header_len: usize) -> Result<(), FormatError> {
    let head = &bytes[..bytes.len().min(8)];
    if head != magic {
        return Err(FormatError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(head).into_owned(),
        });
    }
    if bytes.len() < header_len {
        return Err(FormatError::Header(format!(
            "header is {header_len} bytes, file has {}",
            bytes.len()
        )));
    }
    Ok(())
}

fn narrow(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| VprError::invalid(format!("{what} {v} does not fit in u32")))
}

pub fn encode_feature_set(fs: &FeatureSet) -> Result<Vec<u8>> {
    let width = match fs.dtype() {
        Dtype::Float32 => 4,
        Dtype::Uint16 => 2,
    };
    let mut out = Vec::with_capacity(FEATURE_HEADER_LEN + fs.len() * fs.dim() * width);
    out.extend_from_slice(FEATURE_MAGIC);
    out.extend_from_slice(&fs.layer_tag().to_le_bytes());
    out.extend_from_slice(&narrow(fs.len(), "frame count")?.to_le_bytes());
    out.extend_from_slice(&narrow(fs.dim(), "dimension")?.to_le_bytes());
    out.extend_from_slice(&fs.dtype().code().to_le_bytes());
    for frame in fs.frames() {
        match fs.dtype() {
            Dtype::Float32 => frame
                .as_slice()
                .iter()
                .for_each(|v| out.extend_from_slice(&v.to_le_bytes())),
            // FeatureSet guarantees integral values in range
            Dtype::Uint16 => frame
                .as_slice()
                .iter()
                .for_each(|v| out.extend_from_slice(&(*v as u16).to_le_bytes())),
        }
    }
    Ok(out)
}

/// Classifies a payload whose size disagrees with the header.
fn payload_error(frames: usize, dim: usize, found_values: u64) -> FormatError {
    let expected = (frames * dim) as u64;
    let whole_frames_of_other_dim = frames > 0 && found_values.is_multiple_of(frames as u64);
    if found_values < expected {
        if !found_values.is_multiple_of(dim as u64) && whole_frames_of_other_dim {
            FormatError::DimMismatch {
                header: dim,
                found: (found_values / frames as u64) as usize,
            }
        } else {
            FormatError::Truncated {
                expected,
                found: found_values,
            }
        }
    } else if whole_frames_of_other_dim {
        FormatError::DimMismatch {
            header: dim,
            found: (found_values / frames as u64) as usize,
        }
    } else {
        FormatError::TrailingBytes {
            extra: found_values - expected,
        }
    }
}

pub fn decode_feature_set(bytes: &[u8], label: &str) -> Result<FeatureSet, FormatError> {
    check_magic(bytes, FEATURE_MAGIC, FEATURE_HEADER_LEN)?;
    let layer_tag = u32_at(bytes, 8);
    let frames = u32_at(bytes, 12) as usize;
    let dim = u32_at(bytes, 16) as usize;
    let dtype_code = u32_at(bytes, 20);
    let dtype = Dtype::from_code(dtype_code).ok_or(FormatError::UnknownDtype(dtype_code))?;
    if dim == 0 {
        return Err(FormatError::Header("dimension is zero".into()));
    }
    let width = match dtype {
        Dtype::Float32 => 4,
        Dtype::Uint16 => 2,
    };
    let payload = &bytes[FEATURE_HEADER_LEN..];
    if !payload.len().is_multiple_of(width) {
        return Err(FormatError::Truncated {
            expected: (frames * dim) as u64,
            found: (payload.len() / width) as u64,
        });
    }
    let found = (payload.len() / width) as u64;
    if found != (frames * dim) as u64 {
        return Err(payload_error(frames, dim, found));
    }
    let mut vectors = Vec::with_capacity(frames);
    for (i, chunk) in payload.chunks_exact(dim * width).enumerate() {
        let values: Vec<f32> = match dtype {
            Dtype::Float32 => chunk
                .chunks_exact(4)
                .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
                .collect(),
            Dtype::Uint16 => chunk
                .chunks_exact(2)
                .map(|b| u16::from_le_bytes(b.try_into().unwrap()) as f32)
                .collect(),
        };
        let v = FeatureVector::new(values).map_err(|e| FormatError::Header(format!("frame {i}: {e}")))?;
        vectors.push(v);
    }
    FeatureSet::new(layer_tag, dtype, dim, vectors, label).map_err(|e| FormatError::Header(e.to_string()))
}

pub fn save_feature_set(fs: &FeatureSet, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_feature_set(fs)?)
}

/// Loads a binary feature file; the source label becomes the path.
pub fn load_feature_set(path: impl AsRef<Path>) -> Result<FeatureSet> {
    let path = path.as_ref();
    let bytes = read_file(path)?;
    decode_feature_set(&bytes, &path.display().to_string()).map_err(|k| VprError::format(path, k))
}

/// One frame per line, comma-separated values. Blank lines and `#` comments are skipped.
pub fn parse_feature_csv(text: &str, layer_tag: u32, label: &str) -> Result<FeatureSet, FormatError> {
    let mut frames = Vec::new();
    let mut dim = None;
    for (n, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split(',')
            .map(|t| t.trim().parse::<f32>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| FormatError::Parse {
                line: n + 1,
                message: e.to_string(),
            })?;
        match dim {
            None => dim = Some(values.len()),
            Some(d) if d != values.len() => {
                return Err(FormatError::DimMismatch {
                    header: d,
                    found: values.len(),
                })
            }
            _ => {}
        }
        frames.push(FeatureVector::new(values).map_err(|e| FormatError::Parse {
            line: n + 1,
            message: e.to_string(),
        })?);
    }
    let dim = dim.ok_or_else(|| FormatError::Header("no feature rows".into()))?;
    FeatureSet::new(layer_tag, Dtype::Float32, dim, frames, label)
        .map_err(|e| FormatError::Header(e.to_string()))
}

pub fn load_feature_csv(path: impl AsRef<Path>, layer_tag: u32) -> Result<FeatureSet> {
    let path = path.as_ref();
    let text = read_text(path)?;
    parse_feature_csv(&text, layer_tag, &path.display().to_string())
        .map_err(|k| VprError::format(path, k))
}

pub fn encode_confusion_matrix(cm: &ConfusionMatrix) -> Result<Vec<u8>> {
    let mut out = Vec::with_capacity(CONFUSION_HEADER_LEN + cm.as_slice().len() * 4);
    out.extend_from_slice(CONFUSION_MAGIC);
    out.extend_from_slice(&narrow(cm.train_len(), "row count")?.to_le_bytes());
    out.extend_from_slice(&narrow(cm.test_len(), "column count")?.to_le_bytes());
    for d in cm.as_slice() {
        out.extend_from_slice(&d.to_le_bytes());
    }
    Ok(out)
}

pub fn decode_confusion_matrix(bytes: &[u8]) -> Result<ConfusionMatrix, FormatError> {
    check_magic(bytes, CONFUSION_MAGIC, CONFUSION_HEADER_LEN)?;
    let rows = u32_at(bytes, 8) as usize;
    let cols = u32_at(bytes, 12) as usize;
    let payload = &bytes[CONFUSION_HEADER_LEN..];
    let expected = (rows * cols) as u64;
    let found = (payload.len() / 4) as u64;
    if !payload.len().is_multiple_of(4) || found < expected {
        return Err(FormatError::Truncated { expected, found });
    }
    if found > expected {
        return Err(FormatError::TrailingBytes {
            extra: (payload.len() - rows * cols * 4) as u64,
        });
    }
    let distances = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()))
        .collect();
    ConfusionMatrix::new(rows, cols, distances).map_err(|e| FormatError::Header(e.to_string()))
}

pub fn save_confusion_matrix(cm: &ConfusionMatrix, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_confusion_matrix(cm)?)
}

pub fn load_confusion_matrix(path: impl AsRef<Path>) -> Result<ConfusionMatrix> {
    let path = path.as_ref();
    decode_confusion_matrix(&read_file(path)?).map_err(|k| VprError::format(path, k))
}

/// Binary PGM of a single-channel image.
pub fn encode_pgm(img: &Image) -> Result<Vec<u8>> {
    if img.channels() != 1 {
        return Err(VprError::invalid("PGM output needs a single-channel image"));
    }
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.pixels());
    Ok(out)
}

pub fn decode_pgm(bytes: &[u8]) -> Result<Image, FormatError> {
    if bytes.len() < 2 || &bytes[..2] != b"P5" {
        return Err(FormatError::BadMagic {
            expected: "P5".into(),
            found: String::from_utf8_lossy(&bytes[..bytes.len().min(2)]).into_owned(),
        });
    }
    let mut pos = 2;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        loop {
            match bytes.get(pos) {
                Some(b'#') => {
                    while bytes.get(pos).is_some_and(|&b| b != b'\n') {
                        pos += 1;
                    }
                }
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                _ => break,
            }
        }
        let start = pos;
        while bytes.get(pos).is_some_and(u8::is_ascii_digit) {
            pos += 1;
        }
        *field = std::str::from_utf8(&bytes[start..pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| FormatError::Header("malformed PGM header".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(FormatError::Header(format!("unsupported maxval {maxval}")));
    }
    if !bytes.get(pos).is_some_and(u8::is_ascii_whitespace) {
        return Err(FormatError::Header("missing separator after PGM header".into()));
    }
    let data = &bytes[pos + 1..];
    let expected = (width * height) as u64;
    if (data.len() as u64) < expected {
        return Err(FormatError::Truncated {
            expected,
            found: data.len() as u64,
        });
    }
    if data.len() as u64 > expected {
        return Err(FormatError::TrailingBytes {
            extra: data.len() as u64 - expected,
        });
    }
    Image::gray(width, height, data.to_vec()).map_err(|e| FormatError::Header(e.to_string()))
}

pub fn write_pgm(img: &Image, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &encode_pgm(img)?)
}

pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    decode_pgm(&read_file(path)?).map_err(|k| VprError::format(path, k))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| VprError::io(path, e))
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    write_file(path.as_ref(), text.as_bytes())
}

/// Data rows of a CSV with the given header, split into trimmed fields.
fn csv_rows<'a>(
    text: &'a str,
    header: &'a str,
) -> impl Iterator<Item = Result<(usize, Vec<&'a str>), FormatError>> + 'a {
    let columns = header.split(',').count();
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .enumerate()
        .filter(move |(k, (_, l))| !(*k == 0 && l.trim() == header))
        .map(move |(_, (n, l))| {
            let fields: Vec<&str> = l.split(',').map(str::trim).collect();
            if fields.len() != columns {
                return Err(FormatError::Parse {
                    line: n + 1,
                    message: format!("expected {columns} fields, found {}", fields.len()),
                });
            }
            Ok((n + 1, fields))
        })
}

fn parse_field<T: std::str::FromStr>(line: usize, name: &str, s: &str) -> Result<T, FormatError>
where
    T::Err: std::fmt::Display,
{
    s.parse().map_err(|e: T::Err| FormatError::Parse {
        line,
        message: format!("{name} {s:?}: {e}"),
    })
}

/// Parses `test_index,train_index` rows into a per-test-frame table.
pub fn parse_ground_truth_csv(text: &str) -> Result<Vec<Option<usize>>, FormatError> {
    let mut table: Vec<Option<usize>> = Vec::new();
    for row in csv_rows(text, GROUND_TRUTH_HEADER) {
        let (line, f) = row?;
        let test: usize = parse_field(line, "test_index", f[0])?;
        let train: usize = parse_field(line, "train_index", f[1])?;
        if table.len() <= test {
            table.resize(test + 1, None);
        }
        if table[test].replace(train).is_some() {
            return Err(FormatError::Parse {
                line,
                message: format!("duplicate entry for test frame {test}"),
            });
        }
    }
    Ok(table)
}

pub fn load_ground_truth_csv(path: impl AsRef<Path>) -> Result<Vec<Option<usize>>> {
    let path = path.as_ref();
    parse_ground_truth_csv(&read_text(path)?).map_err(|k| VprError::format(path, k))
}

pub fn ground_truth_csv(train_index: &[usize]) -> String {
    let mut s = format!("{GROUND_TRUTH_HEADER}\n");
    for (j, i) in train_index.iter().enumerate() {
        s.push_str(&format!("{j},{i}\n"));
    }
    s
}

pub fn parse_geotag_csv(text: &str) -> Result<Vec<Option<GeoTag>>, FormatError> {
    let mut table: Vec<Option<GeoTag>> = Vec::new();
    for row in csv_rows(text, GEOTAG_HEADER) {
        let (line, f) = row?;
        let frame: usize = parse_field(line, "frame_index", f[0])?;
        let tag = GeoTag {
            lat_deg: parse_field(line, "lat_deg", f[1])?,
            lon_deg: parse_field(line, "lon_deg", f[2])?,
        };
        if table.len() <= frame {
            table.resize(frame + 1, None);
        }
        if table[frame].replace(tag).is_some() {
            return Err(FormatError::Parse {
                line,
                message: format!("duplicate entry for frame {frame}"),
            });
        }
    }
    Ok(table)
}

pub fn load_geotag_csv(path: impl AsRef<Path>) -> Result<Vec<Option<GeoTag>>> {
    let path = path.as_ref();
    parse_geotag_csv(&read_text(path)?).map_err(|k| VprError::format(path, k))
}

/// One row per testing frame; `alpha`/`beta` are empty for frames without a fit.
pub fn final_matches_csv(matches: &[FinalMatch]) -> String {
    let mut s = format!("{FINAL_MATCHES_HEADER}\n");
    for m in matches {
        let (alpha, beta) = m
            .fit
            .map(|f| (fmt_sig(f.alpha), fmt_sig(f.beta)))
            .unwrap_or_default();
        s.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            m.test_index,
            m.predicted_train_index,
            alpha,
            beta,
            m.plausible,
            m.accepted,
            fmt_sig(m.distance as f64)
        ));
    }
    s
}

/// Parses a final-matches CSV. Residuals are not stored, so fits come back with `residual_rms = 0`.
pub fn parse_final_matches_csv(text: &str) -> Result<Vec<FinalMatch>, FormatError> {
    let mut out = Vec::new();
    for row in csv_rows(text, FINAL_MATCHES_HEADER) {
        let (line, f) = row?;
        let fit = match (f[2], f[3]) {
            ("", "") => None,
            (a, b) => Some(LinearFit {
                alpha: parse_field(line, "alpha", a)?,
                beta: parse_field(line, "beta", b)?,
                residual_rms: 0.0,
            }),
        };
        out.push(FinalMatch {
            test_index: parse_field(line, "test_index", f[0])?,
            predicted_train_index: parse_field(line, "predicted_train_index", f[1])?,
            fit,
            plausible: parse_field(line, "plausible", f[4])?,
            accepted: parse_field(line, "accepted", f[5])?,
            distance: parse_field(line, "distance", f[6])?,
        });
    }
    Ok(out)
}

pub fn load_final_matches_csv(path: impl AsRef<Path>) -> Result<Vec<FinalMatch>> {
    let path = path.as_ref();
    parse_final_matches_csv(&read_text(path)?).map_err(|k| VprError::format(path, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_set(dtype: Dtype) -> FeatureSet {
        let frames = (0..3)
            .map(|i| FeatureVector::new((0..5).map(|k| (i * 5 + k) as f32 * 1.5f32.powi(i)).map(f32::round).collect()).unwrap())
            .collect();
        FeatureSet::new(10, dtype, 5, frames, "small").unwrap()
    }

    #[test]
    fn feature_round_trip_both_dtypes() {
        let dir = tempfile::tempdir().unwrap();
        for dtype in [Dtype::Float32, Dtype::Uint16] {
            let fs = small_set(dtype);
            let path = dir.path().join("f.bin");
            save_feature_set(&fs, &path).unwrap();
            let back = load_feature_set(&path).unwrap();
            assert_eq!(back.with_source_label("small"), fs);
        }
    }

    #[test]
    fn feature_header_layout() {
        let bytes = encode_feature_set(&small_set(Dtype::Uint16)).unwrap();
        assert_eq!(&bytes[..8], b"CNNFEAT1");
        assert_eq!(&bytes[8..24], &[10, 0, 0, 0, 3, 0, 0, 0, 5, 0, 0, 0, 1, 0, 0, 0]);
        assert_eq!(bytes.len(), 24 + 3 * 5 * 2);
    }

    #[test]
    fn feature_format_errors() {
        let good = encode_feature_set(&small_set(Dtype::Float32)).unwrap();

        let mut bad_magic = good.clone();
        bad_magic[..8].copy_from_slice(b"NOTFEAT1");
        match decode_feature_set(&bad_magic, "x") {
            Err(FormatError::BadMagic { found, .. }) => assert_eq!(found, "NOTFEAT1"),
            other => panic!("{other:?}"),
        }

        // header claims 3 frames, payload holds 2
        let truncated = &good[..good.len() - 5 * 4];
        assert_eq!(
            decode_feature_set(truncated, "x").unwrap_err(),
            FormatError::Truncated { expected: 15, found: 10 }
        );

        // header claims D=4 for a 3x5 payload
        let mut dim = good.clone();
        dim[16..20].copy_from_slice(&4u32.to_le_bytes());
        assert_eq!(
            decode_feature_set(&dim, "x").unwrap_err(),
            FormatError::DimMismatch { header: 4, found: 5 }
        );

        let mut dtype = good.clone();
        dtype[20..24].copy_from_slice(&7u32.to_le_bytes());
        assert_eq!(decode_feature_set(&dtype, "x").unwrap_err(), FormatError::UnknownDtype(7));

        let mut extra = good.clone();
        extra.extend_from_slice(&[0, 0, 0, 0]);
        assert_eq!(
            decode_feature_set(&extra, "x").unwrap_err(),
            FormatError::TrailingBytes { extra: 1 }
        );

        assert!(matches!(decode_feature_set(&good[..12], "x"), Err(FormatError::Header(_))));
    }

    #[test]
    fn load_reports_path() {
        let err = load_feature_set("/nonexistent/dir/f.bin").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir/f.bin"));
    }

    #[test]
    fn csv_import() {
        let fs = parse_feature_csv("# two frames\n1, 2, 3\n\n4,5,6.5\n", 0, "csv").unwrap();
        assert_eq!((fs.len(), fs.dim()), (2, 3));
        assert_eq!(fs.frame(1).as_slice(), &[4.0, 5.0, 6.5]);
        assert_eq!(
            parse_feature_csv("1,2\n3\n", 0, "").unwrap_err(),
            FormatError::DimMismatch { header: 2, found: 1 }
        );
        assert!(matches!(parse_feature_csv("1,x\n", 0, ""), Err(FormatError::Parse { line: 1, .. })));
        assert!(parse_feature_csv("", 0, "").is_err());
    }

    #[test]
    fn confusion_round_trip_and_errors() {
        let cm = ConfusionMatrix::new(2, 3, vec![0.0, 1.5, 2.25, 3.0, 4.0, 1e-7]).unwrap();
        let bytes = encode_confusion_matrix(&cm).unwrap();
        assert_eq!(&bytes[..8], b"CONFMAT1");
        assert_eq!(decode_confusion_matrix(&bytes).unwrap(), cm);
        assert!(matches!(
            decode_confusion_matrix(&bytes[..bytes.len() - 4]),
            Err(FormatError::Truncated { expected: 6, found: 5 })
        ));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_confusion_matrix(&bad), Err(FormatError::BadMagic { .. })));
    }

    #[test]
    fn pgm_round_trip() {
        let img = Image::gray(3, 2, vec![0, 10, 20, 30, 40, 255]).unwrap();
        let bytes = encode_pgm(&img).unwrap();
        assert!(bytes.starts_with(b"P5\n3 2\n255\n"));
        assert_eq!(decode_pgm(&bytes).unwrap(), img);
        let commented = b"P5 # c\n3 2\n# another\n255\n\x00\x0a\x14\x1e\x28\xff";
        assert_eq!(decode_pgm(commented).unwrap(), img);
        assert!(decode_pgm(&bytes[..bytes.len() - 1]).is_err());
    }

    #[test]
    fn ground_truth_csv_parsing() {
        let gt = parse_ground_truth_csv("test_index,train_index\n0,4\n2,6\n").unwrap();
        assert_eq!(gt, [Some(4), None, Some(6)]);
        assert_eq!(parse_ground_truth_csv(&ground_truth_csv(&[3, 4])).unwrap(), [Some(3), Some(4)]);
        assert!(parse_ground_truth_csv("0,1\n0,2\n").is_err());
        assert!(parse_ground_truth_csv("0,1,2\n").is_err());
    }

    #[test]
    fn geotag_csv_parsing() {
        let tags = parse_geotag_csv("frame_index,lat_deg,lon_deg\n1,51.5,-1.25\n").unwrap();
        assert_eq!(tags, [None, Some(GeoTag { lat_deg: 51.5, lon_deg: -1.25 })]);
    }

    #[test]
    fn final_matches_csv_round_trip() {
        let matches = vec![
            FinalMatch {
                test_index: 0,
                predicted_train_index: 3,
                fit: None,
                plausible: false,
                accepted: false,
                distance: 1.25,
            },
            FinalMatch {
                test_index: 1,
                predicted_train_index: 8,
                fit: Some(LinearFit { alpha: 1.0, beta: 7.0, residual_rms: 0.0 }),
                plausible: true,
                accepted: true,
                distance: 0.5,
            },
        ];
        let text = final_matches_csv(&matches);
        assert_eq!(
            text,
            "test_index,predicted_train_index,alpha,beta,plausible,accepted,distance\n\
             0,3,,,false,false,1.25\n1,8,1,7,true,true,0.5\n"
        );
        assert_eq!(parse_final_matches_csv(&text).unwrap(), matches);
    }
}
