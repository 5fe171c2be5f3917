use std::io::Cursor;

use uanet::absorption::{absorb_loop, cf_check, AbsorptionConfig, SqannBuilder, TnnBuilder};
use uanet::data::{fit_min_max, InputScaling};
use uanet::io::{load_model, read_csv, save_model, Column, Model};
use uanet::sqann::{build_sqann, SqannConfig};
use uanet::tnn::{fit_tnn, DummyDeltaRule};

const TABLE: &str =
    "a,b,target\n0.1,0.9,1.5\n0.4,0.2,0.3\n0.8,0.5,-0.7\n0.3,0.3,0.0\n0.9,0.1,2.0\n0.2,0.6,-1.1\n";

#[test]
fn csv_to_scaled_sqann_to_disk_and_back() {
    let d = read_csv(Cursor::new(TABLE), &[Column::Name("target".into())], true).unwrap();
    let scaling = InputScaling::MinMax(fit_min_max(&d));
    let scaled = scaling.apply_dataset(&d).unwrap();
    let (m, _) = build_sqann(&scaled, &SqannConfig::default()).unwrap();

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.json");
    save_model(&Model::Sqann(m.clone()), Some(scaling.clone()), &path).unwrap();
    let (loaded, file) = load_model(&path).unwrap();
    assert_eq!(file.scaling, Some(scaling.clone()));
    let Model::Sqann(loaded) = loaded else {
        panic!("kind changed")
    };
    for s in d.samples() {
        let x = scaling.apply(&s.x).unwrap();
        assert_eq!(loaded.predict(&x).unwrap().y, s.y);
    }
}

#[test]
fn split_absorb_keeps_the_first_part() {
    let d = read_csv(Cursor::new(TABLE), &[Column::Last], true).unwrap();
    let (fit, ext) = d.split_at(3).unwrap();
    let cfg = AbsorptionConfig::new(0.05, 4);
    let out = absorb_loop(&SqannBuilder::default(), &fit, &ext, &cfg).unwrap();
    let before = build_sqann(&fit, &SqannConfig::default()).unwrap().0;
    assert!(cf_check(&before, &out.model, &fit, 0.0).unwrap());
    assert!(out.report.converged);
    assert_eq!(out.fitting.len(), 3 + out.report.total_absorbed());
}

#[test]
fn tnn_absorption_on_a_scalar_column() {
    let text = "x,y\n0.0,1.0\n0.5,-1.0\n1.0,0.5\n0.25,0.8\n0.75,0.0\n";
    let d = read_csv(Cursor::new(text), &[Column::Index(1)], true).unwrap();
    let (fit, ext) = d.split_at(3).unwrap();
    let base = fit_tnn(&fit, 5.0, DummyDeltaRule::default()).unwrap();
    let cfg = AbsorptionConfig::new(0.01, 3);
    let out = absorb_loop(&TnnBuilder::default(), &fit, &ext, &cfg).unwrap();
    assert!(out.model.a >= base.a);
    for s in d.samples() {
        assert!((out.model.predict(s.x[0])[0] - s.y[0]).abs() < 0.01);
    }
}
