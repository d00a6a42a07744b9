use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use vpr_core::eval::{phi_range, EvalReport, ReportParams};
use vpr_core::harness::{bench_matching_on, generate_synthetic, random_references, SynthConfig};
use vpr_core::{io, pipeline, FeatureSet, FilterParams, GroundTruth, Image, Metric};

use crate::{Cli, Command, FilterArgs, TruthArgs};

pub enum Failure {
    Usage(String),
    Data(anyhow::Error),
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure::Data(e.into())
    }
}

type CmdResult = Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

pub fn run(cli: Cli) -> CmdResult {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(usage("--threads must be >= 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| anyhow!("thread pool: {e}"))?;
    }
    match cli.command {
        Command::Preprocess { input, output } => preprocess(&input, &output),
        Command::Describe {
            images,
            out,
            side,
            no_preprocess,
        } => describe(&images, &out, side, !no_preprocess),
        Command::Match {
            train,
            test,
            out,
            metric,
            max_offset,
        } => {
            let metric = parse_metric(&metric, max_offset)?;
            let train = load_features(&train)?;
            let test = load_features(&test)?;
            let cm = vpr_core::build_confusion_matrix_with(&train, &test, metric)?;
            io::save_confusion_matrix(&cm, &out)?;
            Ok(())
        }
        Command::Filter { conf, out, filter } => {
            let params = filter_params(&filter)?;
            let cm = io::load_confusion_matrix(&conf)?;
            let finals = pipeline::final_matches(&cm, &params)?;
            io::write_text(&out, &io::final_matches_csv(&finals))?;
            Ok(())
        }
        Command::Eval {
            final_matches,
            truth,
            filter,
            out,
        } => {
            let params = filter_params(&filter)?;
            let gt = ground_truth(&truth)?;
            let finals = io::load_final_matches_csv(&final_matches)?;
            let mut point = vpr_core::precision_recall(&finals, &gt)?;
            point.phi = Some(params.phi);
            let report = EvalReport::from_curve(
                ReportParams {
                    epsilon: params.epsilon,
                    window: params.window,
                    sigma: params.sigma,
                    phi_values: vec![params.phi],
                },
                vec![point],
            );
            emit(out.as_deref(), &report.to_json())
        }
        Command::Sweep {
            conf,
            truth,
            filter,
            phi_min,
            phi_max,
            phi_steps,
            phi_values,
            out,
        } => {
            let params = filter_params(&filter)?;
            let phis = match phi_values {
                Some(v) => v,
                None => phi_range(phi_min, phi_max, phi_steps).map_err(|e| usage(e.to_string()))?,
            };
            let gt = ground_truth(&truth)?;
            let cm = io::load_confusion_matrix(&conf)?;
            let report = pipeline::sweep_matrix(&cm, &params, &gt, &phis)?;
            emit(out.as_deref(), &report.to_json())
        }
        Command::Render { conf, out } => {
            let cm = io::load_confusion_matrix(&conf)?;
            io::write_pgm(&vpr_core::eval::confusion_to_image(&cm), &out)?;
            Ok(())
        }
        Command::Synth {
            frames,
            ratio,
            noise,
            dim,
            basis,
            seed,
            out_dir,
        } => {
            let cfg = SynthConfig {
                train_frames: frames,
                velocity_ratio: ratio,
                dim,
                noise_sigma: noise,
                basis_count: basis,
                seed,
            };
            let ds = generate_synthetic(&cfg).map_err(|e| usage(e.to_string()))?;
            fs::create_dir_all(&out_dir)
                .with_context(|| format!("creating {}", out_dir.display()))?;
            io::save_feature_set(&ds.train, out_dir.join("train.bin"))?;
            io::save_feature_set(&ds.test, out_dir.join("test.bin"))?;
            io::write_text(out_dir.join("gt.csv"), &io::ground_truth_csv(&ds.truth))?;
            Ok(())
        }
        Command::Bench {
            dim,
            refs,
            reps,
            seed,
            mode,
            out,
        } => {
            let modes: &[bool] = match mode.as_str() {
                "single" => &[false],
                "multi" => &[true],
                "both" => &[false, true],
                other => return Err(usage(format!("unknown bench mode {other:?}"))),
            };
            if dim == 0 || refs == 0 || reps == 0 {
                return Err(usage("--dim, --refs and --reps must be >= 1"));
            }
            let (query, data) = random_references(dim, refs, seed);
            let reports = modes
                .iter()
                .map(|&parallel| bench_matching_on(&query, &data, reps, parallel).map(|r| r.0))
                .collect::<vpr_core::Result<Vec<_>>>()?;
            let mut text = serde_json::to_string_pretty(&reports)?;
            text.push('\n');
            emit(out.as_deref(), &text)
        }
    }
}

fn parse_metric(name: &str, max_offset: usize) -> Result<Metric, Failure> {
    match name {
        "l2" => Ok(Metric::L2),
        "sad" => Ok(Metric::Sad),
        "sad-offset" => Ok(Metric::SadOffset { max_offset }),
        other => Err(usage(format!(
            "unknown metric {other:?} (expected l2, sad or sad-offset)"
        ))),
    }
}

fn filter_params(args: &FilterArgs) -> Result<FilterParams, Failure> {
    let params = FilterParams {
        epsilon: args.epsilon,
        window: args.window,
        sigma: args.sigma,
        phi: args.phi,
    };
    params.validate().map_err(|e| usage(e.to_string()))?;
    Ok(params)
}

fn ground_truth(args: &TruthArgs) -> Result<GroundTruth, Failure> {
    match (&args.gt, &args.train_geo, &args.test_geo) {
        (Some(gt), None, None) => {
            let table = io::load_ground_truth_csv(gt)?;
            GroundTruth::sparse_frames(table, args.tolerance).map_err(|e| usage(e.to_string()))
        }
        (None, Some(train), Some(test)) => {
            let train = io::load_geotag_csv(train)?;
            let test = io::load_geotag_csv(test)?;
            GroundTruth::geo(train, test, args.tolerance_m).map_err(|e| usage(e.to_string()))
        }
        _ => Err(usage("ground truth needs --gt, or both --train-geo and --test-geo")),
    }
}

fn load_features(path: &Path) -> anyhow::Result<FeatureSet> {
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
    Ok(if is_csv {
        io::load_feature_csv(path, 0)?
    } else {
        io::load_feature_set(path)?
    })
}

fn emit(out: Option<&Path>, text: &str) -> CmdResult {
    match out {
        Some(path) => io::write_text(path, text)?,
        None => print!("{text}"),
    }
    Ok(())
}

fn read_image(path: &Path) -> anyhow::Result<Image> {
    let decoded = image::open(path).with_context(|| format!("reading image {}", path.display()))?;
    let img = if decoded.color().has_color() {
        let rgb = decoded.into_rgb8();
        let (w, h) = rgb.dimensions();
        Image::new(w as usize, h as usize, 3, rgb.into_raw())?
    } else {
        let gray = decoded.into_luma8();
        let (w, h) = gray.dimensions();
        Image::gray(w as usize, h as usize, gray.into_raw())?
    };
    Ok(img)
}

fn is_image(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| {
                ["png", "jpg", "jpeg", "pgm", "ppm", "pnm"].contains(&e.to_ascii_lowercase().as_str())
            })
}

/// Image files of a directory in lexicographic filename order.
fn list_images(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("listing {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .with_context(|| format!("listing {}", dir.display()))?;
    paths.retain(|p| is_image(p));
    paths.sort();
    if paths.is_empty() {
        anyhow::bail!("{}: no image files found", dir.display());
    }
    Ok(paths)
}

fn preprocess(input: &Path, output: &Path) -> CmdResult {
    if input.is_dir() {
        fs::create_dir_all(output).with_context(|| format!("creating {}", output.display()))?;
        for path in list_images(input)? {
            let img = vpr_core::preprocess_image(&read_image(&path)?)?;
            let name = path.file_stem().expect("listed files have names");
            io::write_pgm(&img, output.join(name).with_extension("pgm"))?;
        }
    } else {
        let img = vpr_core::preprocess_image(&read_image(input)?)?;
        io::write_pgm(&img, output)?;
    }
    Ok(())
}

fn describe(images: &Path, out: &Path, side: usize, preprocess: bool) -> CmdResult {
    let mut frames = Vec::new();
    for path in list_images(images)? {
        let mut img = read_image(&path)?;
        if preprocess {
            img = vpr_core::preprocess_image(&img)?;
        } else if img.channels() != 1 {
            return Err(anyhow!("{}: expected a single-channel image", path.display()).into());
        }
        frames.push(
            vpr_core::pixel_descriptor(&img, side)
                .with_context(|| format!("describing {}", path.display()))?,
        );
    }
    let set = FeatureSet::from_frames(0, frames, images.display().to_string())?;
    io::save_feature_set(&set, out)?;
    Ok(())
}

