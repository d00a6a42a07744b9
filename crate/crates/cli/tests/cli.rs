use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use vpr_core::harness::oracle_pipeline;
use vpr_core::{io, pipeline, FilterParams, GroundTruth};

fn vpr(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vpr"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = vpr(args);
    assert!(
        out.status.success(),
        "vpr {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synth(dir: &Path, extra: &[&str]) {
    let mut opts = vec![("--frames", "200"), ("--ratio", "1.0"), ("--noise", "0.05"), ("--seed", "7")];
    for pair in extra.chunks(2) {
        match opts.iter_mut().find(|(k, _)| *k == pair[0]) {
            Some(slot) => slot.1 = pair[1],
            None => opts.push((pair[0], pair[1])),
        }
    }
    let mut args = vec!["synth", "--out-dir", p(dir)];
    args.extend(opts.iter().flat_map(|(k, v)| [*k, *v]));
    ok(&args);
}

#[test]
fn end_to_end_matches_oracle() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &[]);
    let (train, test, gt, conf, fin, rep) = (
        d.join("train.bin"),
        d.join("test.bin"),
        d.join("gt.csv"),
        d.join("conf.bin"),
        d.join("final.csv"),
        d.join("report.json"),
    );
    ok(&["match", "--train", p(&train), "--test", p(&test), "--out", p(&conf)]);
    ok(&["filter", "--conf", p(&conf), "--out", p(&fin)]);
    ok(&["eval", "--final", p(&fin), "--gt", p(&gt), "--tolerance", "1", "--out", p(&rep)]);

    let report: vpr_core::EvalReport = serde_json::from_str(&fs::read_to_string(&rep).unwrap()).unwrap();
    let train = io::load_feature_set(&train).unwrap();
    let test = io::load_feature_set(&test).unwrap();
    let truth = GroundTruth::sparse_frames(io::load_ground_truth_csv(&gt).unwrap(), 1.0).unwrap();
    let params = FilterParams::default();
    let oracle = oracle_pipeline(&train, &test, &params, &truth, &[params.phi]).unwrap();
    assert_eq!(report.curve.len(), 1);
    let (a, b) = (&report.curve[0], &oracle.curve[0]);
    assert_eq!((a.tp, a.fp, a.reported, a.total), (b.tp, b.fp, b.reported, b.total));
    assert!((a.precision - b.precision).abs() <= 1e-6 * b.precision.max(1e-12));
    assert!((a.recall - b.recall).abs() <= 1e-6 * b.recall.max(1e-12));
    assert!((report.best_f1 - oracle.best_f1).abs() <= 1e-6);
    assert!(a.recall > 0.9, "low-noise synthetic run should be recovered: {a:?}");
}

#[test]
fn filter_defaults_are_table_values() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &["--noise", "0.5"]);
    let conf = d.join("conf.bin");
    ok(&["match", "--train", p(&d.join("train.bin")), "--test", p(&d.join("test.bin")), "--out", p(&conf)]);
    ok(&["filter", "--conf", p(&conf), "--out", p(&d.join("a.csv"))]);
    ok(&[
        "filter", "--conf", p(&conf), "--out", p(&d.join("b.csv")),
        "--epsilon", "3", "--window", "5", "--sigma", "0.7853981633974483",
    ]);
    let a = fs::read(d.join("a.csv")).unwrap();
    assert_eq!(a, fs::read(d.join("b.csv")).unwrap());
    let cm = io::load_confusion_matrix(&conf).unwrap();
    let lib = pipeline::final_matches(&cm, &FilterParams::default()).unwrap();
    assert_eq!(String::from_utf8(a).unwrap(), io::final_matches_csv(&lib));
}

#[test]
fn missing_file_is_a_data_error() {
    let out = vpr(&["render", "--conf", "missing.bin", "--out", "x.pgm"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.bin"));
}

#[test]
fn usage_errors_exit_one() {
    let out = vpr(&["render", "--bogus"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    let out = vpr(&["match", "--train", "a", "--test", "b", "--out", "c", "--metric", "cosine"]);
    assert_eq!(out.status.code(), Some(1));
    let out = vpr(&["sweep", "--conf", "x.bin"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(vpr(&["--help"]).status.code(), Some(0));
    assert_eq!(vpr(&["sweep", "--help"]).status.code(), Some(0));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(&d.join("a"), &["--noise", "0.8"]);
    synth(&d.join("b"), &["--noise", "0.8"]);
    for f in ["train.bin", "test.bin", "gt.csv"] {
        assert_eq!(fs::read(d.join("a").join(f)).unwrap(), fs::read(d.join("b").join(f)).unwrap(), "{f}");
    }
    let conf = d.join("conf.bin");
    ok(&["match", "--train", p(&d.join("a/train.bin")), "--test", p(&d.join("a/test.bin")), "--out", p(&conf)]);
    let sweep = |name: &str, threads: &str| {
        let out = d.join(name);
        ok(&["--threads", threads, "sweep", "--conf", p(&conf), "--gt", p(&d.join("a/gt.csv")), "--tolerance", "1", "--out", p(&out)]);
        fs::read(out).unwrap()
    };
    let first = sweep("s1.json", "1");
    assert_eq!(first, sweep("s2.json", "2"));
    let stdout = ok(&["sweep", "--conf", p(&conf), "--gt", p(&d.join("a/gt.csv")), "--tolerance", "1"]).stdout;
    assert_eq!(first, stdout);
    let report: serde_json::Value = serde_json::from_slice(&first).unwrap();
    assert_eq!(report["curve"].as_array().unwrap().len(), 81);
}

#[test]
fn render_writes_pgm() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    synth(d, &["--frames", "50"]);
    let conf = d.join("conf.bin");
    ok(&["match", "--train", p(&d.join("train.bin")), "--test", p(&d.join("test.bin")), "--out", p(&conf)]);
    ok(&["render", "--conf", p(&conf), "--out", p(&d.join("c.pgm"))]);
    let img = io::read_pgm(d.join("c.pgm")).unwrap();
    assert_eq!((img.width(), img.height()), (50, 50));
    // near-exact traverse: the diagonal is the brightest pixel in each column
    for j in 0..50 {
        let col: Vec<u8> = (0..50).map(|i| img.at(j, i)).collect();
        assert_eq!(col[j], *col.iter().max().unwrap());
    }
}

#[test]
fn images_to_descriptors_to_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let (train_dir, test_dir) = (d.join("train"), d.join("test"));
    fs::create_dir_all(&train_dir).unwrap();
    fs::create_dir_all(&test_dir).unwrap();
    // a gradient whose phase moves with the frame index
    for k in 0..8u32 {
        let img = image::RgbImage::from_fn(80, 60, |x, y| {
            let v = ((x * 3 + y + k * 29) % 256) as u8;
            image::Rgb([v, v / 2, 255 - v])
        });
        img.save(train_dir.join(format!("{k:03}.png"))).unwrap();
        img.save(test_dir.join(format!("{k:03}.png"))).unwrap();
    }
    fs::write(train_dir.join("notes.txt"), "ignored").unwrap();

    ok(&["preprocess", "--input", p(&train_dir.join("003.png")), "--output", p(&d.join("one.pgm"))]);
    let one = io::read_pgm(d.join("one.pgm")).unwrap();
    assert_eq!((one.width(), one.height()), (256, 256));
    ok(&["preprocess", "--input", p(&train_dir), "--output", p(&d.join("pre"))]);
    assert_eq!(fs::read_dir(d.join("pre")).unwrap().count(), 8);

    ok(&["describe", "--images", p(&train_dir), "--out", p(&d.join("train.bin")), "--side", "16"]);
    ok(&["describe", "--images", p(&test_dir), "--out", p(&d.join("test.bin")), "--side", "16"]);
    let feats = io::load_feature_set(d.join("train.bin")).unwrap();
    assert_eq!((feats.len(), feats.dim(), feats.layer_tag()), (8, 256, 0));

    for metric in ["l2", "sad", "sad-offset"] {
        let conf = d.join(format!("{metric}.bin"));
        ok(&["match", "--train", p(&d.join("train.bin")), "--test", p(&d.join("test.bin")), "--out", p(&conf), "--metric", metric]);
        let cm = io::load_confusion_matrix(&conf).unwrap();
        let best = vpr_core::best_matches(&cm);
        assert!(best.iter().all(|m| m.train_index == m.test_index), "{metric}");
    }
}

#[test]
fn csv_features_and_geo_truth() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    let rows: String = (0..12).map(|i| format!("{},{},{}\n", i, i * 2, 100 - i)).collect();
    fs::write(d.join("f.csv"), &rows).unwrap();
    let conf = d.join("conf.bin");
    ok(&["match", "--train", p(&d.join("f.csv")), "--test", p(&d.join("f.csv")), "--out", p(&conf)]);
    let geo: String = std::iter::once("frame_index,lat_deg,lon_deg\n".to_string())
        .chain((0..12).map(|i| format!("{i},51.0,{}\n", -1.0 + i as f64 * 0.001)))
        .collect();
    fs::write(d.join("geo.csv"), geo).unwrap();
    let out = ok(&[
        "sweep", "--conf", p(&conf), "--train-geo", p(&d.join("geo.csv")), "--test-geo", p(&d.join("geo.csv")),
        "--phi-values", "0,0.1",
    ]);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // self-matching: every frame with a full window is accepted at phi = 0
    assert_eq!(report["curve"][0]["recall"].as_f64().unwrap(), vpr_core::numfmt::round_sig(7.0 / 12.0));
    assert_eq!(report["curve"][0]["precision"].as_f64().unwrap(), 1.0);
    assert_eq!(report["max_recall_at_full_precision"].as_f64().unwrap(), vpr_core::numfmt::round_sig(7.0 / 12.0));
}

#[test]
fn bench_emits_reports() {
    let out = ok(&["bench", "--dim", "64", "--refs", "10", "--reps", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = v.as_array().unwrap();
    assert_eq!(reports.len(), 2);
    assert_eq!(reports[0]["threads"], 1);
    assert_eq!(reports[0]["dim"], 64);
    assert!(reports[1]["values_per_second"].as_f64().unwrap() > 0.0);
    assert_eq!(vpr(&["bench", "--reps", "0"]).status.code(), Some(1));
}
