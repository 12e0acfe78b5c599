use qscond::experiments::*;
use qscond::Precision;

fn config(generator: Generator, n: usize, m: usize, rhs: RhsKind, seed: u64) -> ExperimentConfig {
    ExperimentConfig { generator, n, m, rhs, seed, trials: 20, precision: Precision::Extended }
}

#[test]
fn gv_rows_satisfy_chains() {
    let t = run_table(&config(Generator::RandomGv, 60, 20, RhsKind::Dense, 8)).unwrap();
    assert_eq!(t.rows.len(), 20);
    for r in &t.rows {
        assert!(check_chains(&r.report).is_empty(), "{:?}", check_chains(&r.report));
        assert!(r.report.k_gv.is_some());
    }
}

#[test]
fn illscaled_sparse_regime() {
    let t = run_table(&config(Generator::IllscaledQs, 40, 20, RhsKind::Sparse { rho: 0.3 }, 9)).unwrap();
    assert!(t.aborted.is_empty(), "{:?}", t.aborted);
    let hits = t.rows.iter().filter(|r| r.report.ratio() >= 1e4).count();
    assert!(hits >= 18, "{hits}/20");
    assert!(t.rows.iter().all(|r| check_chains(&r.report).is_empty()));
}

#[test]
fn illscaled_median_ratio() {
    let t = run_table(&config(Generator::IllscaledQs, 20, 10, RhsKind::Dense, 10)).unwrap();
    let mut ratios: Vec<f64> = t.rows.iter().map(|r| r.report.ratio()).collect();
    ratios.sort_by(f64::total_cmp);
    assert!(ratios[ratios.len() / 2] > 1e6, "{ratios:?}");
}

#[test]
fn same_seed_same_table() {
    let c = config(Generator::IllscaledQs, 20, 5, RhsKind::Sparse { rho: 0.5 }, 11);
    let a = run_table(&c).unwrap();
    let b = run_table(&c).unwrap();
    assert_eq!(a.to_csv(), b.to_csv());
    let bits = |t: &Table| t.rows.iter().map(|r| r.report.k_qs.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn worked_example_rows() {
    let rows = example1_rows(Precision::Extended).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].report.rhs_mode, "sparse");
    assert_eq!(rows[1].report.rhs_mode, "dense");
    let t = run_table(&ExperimentConfig {
        generator: Generator::Example1Fixed,
        n: 5,
        m: 2,
        rhs: RhsKind::Dense,
        seed: 0,
        trials: 1,
        precision: Precision::Extended,
    })
    .unwrap();
    assert_eq!(t.rows.len(), 2);
    assert!(t.to_markdown().starts_with("| rhs | K_unstructured | K_eff | K_qs |"));
}

#[test]
fn layouts() {
    let mut c = config(Generator::RandomGv, 10, 3, RhsKind::Dense, 12);
    c.trials = 2;
    let t = run_table(&c).unwrap();
    assert!(t.to_markdown().starts_with("| m | rho | K_gv | K_qs | K_eff | K_unstructured |"));
    let csv = t.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("n,m,rho,seed,k_unstructured,k_eff,k_qs,k_gv,ratio"));
    assert_eq!(lines.count(), 2);
}

#[test]
fn invalid_configs() {
    let mut c = config(Generator::RandomGv, 2, 3, RhsKind::Dense, 1);
    assert!(c.validate().is_err());
    c.n = 10;
    c.rhs = RhsKind::Sparse { rho: 0.0 };
    assert!(c.validate().is_err());
    c.rhs = RhsKind::Dense;
    c.trials = 0;
    assert_eq!(c.validate().unwrap_err().to_string(), "invalid configuration: no trials");
}
