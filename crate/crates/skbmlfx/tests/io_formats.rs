use std::fs;

use skbmlfx::io::{self, IoError};
use skbmlfx_core::data::{generate, SynthConfig};
use skbmlfx_core::extractor::ClassId;
use skbmlfx_core::linalg::Matrix;
use skbmlfx_core::planner::{random_instance, solve_cccp, CccpConfig};

fn max_rel(a: &Matrix, b: &Matrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y).abs() / y.abs().max(1e-300))
        .fold(0.0, f64::max)
}

#[test]
fn world_round_trips_through_csv() {
    let world = generate(&SynthConfig { seed: 5, ..SynthConfig::default() }).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("nested/tx.csv");
    let d_s = world.config.d_s;
    io::save_features(&path, world.tx_train.visual(), world.tx_train.labels(), d_s).unwrap();
    let back = io::load_features(&path).unwrap();
    assert_eq!(back.labels, world.tx_train.labels());
    assert_eq!(back.d_s, d_s);
    assert!(max_rel(&back.visual, world.tx_train.visual()) <= 1e-15);

    let ppath = dir.path().join("protos.csv");
    io::save_prototypes(&ppath, &world.prototypes).unwrap();
    let protos = io::load_prototypes(&ppath).unwrap();
    assert_eq!(protos.class_ids(), world.prototypes.class_ids());
    assert!(max_rel(protos.vectors(), world.prototypes.vectors()) <= 1e-15);
}

#[test]
fn instance_round_trip_is_exact() {
    let inst = random_instance(7, 3);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("inst.csv");
    io::save_instance(&path, &inst).unwrap();
    assert_eq!(io::load_instance(&path).unwrap(), inst);
}

#[test]
fn report_json_has_expected_fields() {
    let inst = random_instance(5, 1);
    let r = solve_cccp(&inst, &CccpConfig::default()).unwrap();
    let v: serde_json::Value = serde_json::from_str(&io::report_to_json(&r)).unwrap();
    for key in ["assignment", "avg_loss", "avg_latency", "feasible", "converged"] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["avg_loss"].as_f64().unwrap(), r.avg_loss);
}

fn write_tmp(text: &str) -> (tempfile::TempDir, std::path::PathBuf) {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    fs::write(&path, text).unwrap();
    (dir, path)
}

#[test]
fn malformed_headers_are_rejected() {
    for text in [
        "",
        "0,1.0,2.0\n",
        "# dv=2 n=1\n0,1.0,2.0\n",
        "# dv=x ds=1 n=1\n0,1.0,2.0\n",
        "# dv=3 ds=1 n=1\n0,1.0,2.0\n",
        "# dv=2 ds=1 n=2\n0,1.0,2.0\n",
    ] {
        let (_d, path) = write_tmp(text);
        assert!(
            matches!(io::load_features(&path), Err(IoError::MalformedHeader { .. })),
            "accepted {text:?}"
        );
    }
    let (_d, path) = write_tmp("# ds=2 c=1\n");
    assert!(matches!(io::load_prototypes(&path), Err(IoError::MalformedHeader { .. })));
}

#[test]
fn bad_rows_and_missing_files_are_reported() {
    let (_d, path) = write_tmp("# dv=2 ds=1 n=1\n0,1.0,abc\n");
    assert!(io::load_features(&path).is_err());
    let (_d, path) = write_tmp("# dv=2 ds=1 n=1\n0,1.0,inf\n");
    assert!(io::load_features(&path).is_err());
    let (_d, path) = write_tmp("# ds=2 c=1\n0,1.0\n");
    assert!(matches!(io::load_prototypes(&path), Err(IoError::DimensionMismatch { .. })));
    let missing = std::path::Path::new("/nonexistent/skbmlfx/x.csv");
    assert!(matches!(io::load_instance(missing), Err(IoError::IoFailure { .. })));
}

#[test]
fn reals_are_shortest_round_trip_and_locale_free() {
    for x in [0.1, -2.5e-300, 1.0 / 3.0, 123456789.0, 0.0] {
        let s = io::fmt_real(x);
        assert!(!s.contains(','));
        assert_eq!(s.parse::<f64>().unwrap(), x);
    }
    let labels = [ClassId(3)];
    let text = io::features_to_string(&Matrix::from_rows(&[[0.5]]).unwrap(), &labels, 4);
    assert_eq!(text, "# dv=1 ds=4 n=1\n3,5e-1\n");
}
