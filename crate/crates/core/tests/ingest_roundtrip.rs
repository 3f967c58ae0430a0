use std::fmt::Write as _;

use loglaplace::ingest::{ingest_csv, IngestSpec, ReturnKind};
use loglaplace::model::NoiseKind;
use loglaplace::series::{format_f64, SeriesBundle};
use loglaplace::simulate::{simulate_sv, ArSpec};

#[test]
fn exported_series_ingests_to_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate_sv(&ArSpec::ar5(0.3).unwrap(), 500, NoiseKind::Laplace, 12);
    let h = b.h_true.as_ref().unwrap();
    let (mut eps, mut cov) = (String::from("t,value\n"), String::from("t,value\n"));
    for t in 0..b.len() {
        writeln!(eps, "{t},{}", format_f64(b.epsilon[t])).unwrap();
        writeln!(cov, "{t},{}", format_f64(h[t].exp())).unwrap();
    }
    std::fs::write(dir.path().join("eps.csv"), eps).unwrap();
    std::fs::write(dir.path().join("vol.csv"), cov).unwrap();
    let mut spec = IngestSpec::new(dir.path().join("eps.csv"));
    spec.date_column = "t".into();
    spec.value_column = "value".into();
    spec.return_kind = ReturnKind::Raw;
    spec.covariate_files.insert("vol".into(), dir.path().join("vol.csv"));
    let r = ingest_csv(&spec).unwrap();
    assert_eq!(r.bundle.epsilon, b.epsilon);
    for (got, want) in r.bundle.covariate("vol").unwrap().iter().zip(h) {
        assert!((got - want).abs() <= 1e-15 * want.abs().max(1.0));
    }
}

#[test]
fn bundle_csv_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let mut b = simulate_sv(&ArSpec::ar2(0.25).unwrap(), 300, NoiseKind::Gaussian, 13);
    b.add_covariate("x", b.epsilon.iter().map(|e| e.abs().sqrt()).collect()).unwrap();
    let path = dir.path().join("bundle.csv");
    b.save_csv(&path).unwrap();
    assert_eq!(SeriesBundle::load_csv(&path).unwrap(), b);
}

#[test]
fn prices_give_log_returns() {
    let dir = tempfile::tempdir().unwrap();
    let b = simulate_sv(&ArSpec::ar2(0.2).unwrap(), 200, NoiseKind::Gaussian, 14);
    let mut text = String::from("date,close\n");
    let mut p = 50.0f64;
    let day = |i: i64| (chrono::NaiveDate::from_ymd_opt(2010, 1, 1).unwrap() + chrono::Duration::days(i)).to_string();
    writeln!(text, "{},{}", day(0), format_f64(p)).unwrap();
    for (i, e) in b.epsilon.iter().enumerate() {
        p *= (0.01 * e).exp();
        writeln!(text, "{},{}", day(i as i64 + 1), format_f64(p)).unwrap();
    }
    std::fs::write(dir.path().join("p.csv"), text).unwrap();
    let r = ingest_csv(&IngestSpec::new(dir.path().join("p.csv"))).unwrap();
    for (got, e) in r.bundle.epsilon.iter().zip(&b.epsilon) {
        assert!((got - 0.01 * e).abs() < 1e-12);
    }
    assert_eq!(r.bundle.index[0], "2010-01-02");
}
