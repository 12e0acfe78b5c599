//! Instance generators and table drivers for the three worked examples.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::condnum::{cond_report, CondReport, MatrixSource, Rhs, SparseRhs, SparseTerm};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::qsrep::{qs_from_dense, GvTangentParams, QsParams};
use crate::scalar::Precision;

/// Componentwise backward error above which a trial is discarded.
pub const BACKWARD_ERROR_LIMIT: f64 = 1e-8;

/// The 5x5 worked example: `(A, B1, B2)` as printed.
pub fn example1_fixture() -> (DenseMatrix, DenseMatrix, DenseMatrix) {
    let a = DenseMatrix::from_rows(&[
        vec![1.0, -2.9442, 0.0, 0.0, 0.0],
        vec![7.2688e4, 1.0, 1.4383e1, 0.0, 0.0],
        vec![-2.6958e6, -3.0344e2, 1.0, 3.2519e-1, 0.0],
        vec![-2.9947e9, -3.3709e5, 2.9387e2, 1.0, -7.5493e-1],
        vec![-8.5754e12, -9.6526e8, 8.4150e5, -7.8728e2, 1.0],
    ])
    .expect("fixture");
    let b1 = DenseMatrix::from_rows(&[
        vec![1.0933, 0.0],
        vec![1.1093, 0.0],
        vec![-8.6365e-1, 0.0],
        vec![0.0, 7.7359e-2],
        vec![0.0, -1.2141],
    ])
    .expect("fixture");
    let b2 = DenseMatrix::from_rows(&[vec![1.0e-3, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0], vec![1.0, 1.0]])
        .expect("fixture");
    (a, b1, b2)
}

/// Entrywise tolerance for rebuilding the worked example's generators: the
/// matrix is printed to five significant figures, so its lower blocks are
/// rank one only to about 2e-5.
pub const EXAMPLE1_TOL: f64 = 5e-4;

pub fn example1_params() -> QsParams {
    qs_from_dense(&example1_fixture().0, EXAMPLE1_TOL).expect("worked example is quasiseparable to print precision")
}

fn normals(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

/// Tangent generators with i.i.d. standard normal entries.
pub fn gen_random_gv(n: usize, seed: u64) -> Result<GvTangentParams> {
    if n < 3 {
        return Err(Error::Config(format!("tangent representation needs n >= 3, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = normals(&mut rng, n - 2);
    let v = normals(&mut rng, n - 1);
    let d = normals(&mut rng, n);
    let w = normals(&mut rng, n - 1);
    let u = normals(&mut rng, n - 2);
    GvTangentParams::new(n, l, v, d, w, u)
}

/// Quasiseparable generators with i.i.d. standard normal entries.
pub fn gen_random_qs(n: usize, seed: u64) -> Result<QsParams> {
    if n < 2 {
        return Err(Error::Config(format!("order must be at least 2, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    QsParams::new(
        n,
        normals(&mut rng, n - 1),
        normals(&mut rng, n - 2),
        normals(&mut rng, n - 1),
        normals(&mut rng, n),
        normals(&mut rng, n - 1),
        normals(&mut rng, n - 2),
        normals(&mut rng, n - 1),
    )
}

/// `(l1, l2)` for order `n`: 30% of the `p` and `a` indices, rounded down.
pub fn illscaled_counts(n: usize) -> (usize, usize) {
    (3 * (n - 1) / 10, 3 * (n - 2) / 10)
}

/// Exponents `alpha_k = 1 + (k-1) * 4 / (l1 - 1)`, `k = 1..=l1`.
pub fn illscaled_alpha(l1: usize) -> Vec<f64> {
    (1..=l1).map(|k| 1.0 + (k - 1) as f64 * 4.0 / (l1 - 1) as f64).collect()
}

/// Normal generators with a few `p` and `a` entries blown up by
/// `10^(alpha+3)`, `d` shrunk by `1e-3` and `g` grown by `1e3`.
pub fn gen_illscaled_qs(n: usize, seed: u64) -> Result<QsParams> {
    if n < 8 {
        return Err(Error::Config(format!("ill-scaled generator needs n >= 8, got {n}")));
    }
    let mut params = gen_random_qs(n, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let (l1, l2) = illscaled_counts(n);
    let alpha = illscaled_alpha(l1);
    let mut ip = sample(&mut rng, n - 1, l1).into_vec();
    ip.sort_unstable();
    let mut ia = sample(&mut rng, n - 2, l2).into_vec();
    ia.sort_unstable();
    for (k, &z) in ip.iter().enumerate() {
        params.p[z] *= 10f64.powf(alpha[k] + 3.0);
    }
    for (k, &z) in ia.iter().enumerate() {
        // beta_k = alpha_{l2 - k + 1} (1-based)
        params.a[z] *= 10f64.powf(alpha[l2 - 1 - k] + 3.0);
    }
    params.d.iter_mut().for_each(|x| *x *= 1e-3);
    params.g.iter_mut().for_each(|x| *x *= 1e3);
    params.validate()?;
    Ok(params)
}

/// Each entry nonzero with probability `rho`, values uniform on (0, 1), one
/// single-entry term per nonzero in row-major order.
pub fn gen_sparse_rhs(n: usize, m: usize, rho: f64, seed: u64) -> Result<SparseRhs> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::Config(format!("density {rho} outside (0, 1]")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut terms = Vec::new();
    for i in 0..n {
        for j in 0..m {
            if rng.random::<f64>() < rho {
                let v = loop {
                    let v: f64 = rng.random();
                    if v > 0.0 {
                        break v;
                    }
                };
                terms.push(SparseTerm { entries: vec![(i, j)], omega: v });
            }
        }
    }
    SparseRhs::new(n, m, terms)
}

pub fn gen_dense_rhs(n: usize, m: usize, seed: u64) -> DenseMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let v = normals(&mut rng, n * m);
    DenseMatrix::from_vec(n, m, v).expect("finite normals")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Generator {
    Example1Fixed,
    RandomGv,
    IllscaledQs,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RhsKind {
    Dense,
    Sparse { rho: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub generator: Generator,
    pub n: usize,
    pub m: usize,
    pub rhs: RhsKind,
    pub seed: u64,
    pub trials: usize,
    pub precision: Precision,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("no trials".into()));
        }
        if let RhsKind::Sparse { rho } = self.rhs {
            if !(rho > 0.0 && rho <= 1.0) {
                return Err(Error::Config(format!("density {rho} outside (0, 1]")));
            }
        }
        let min_n = match self.generator {
            Generator::Example1Fixed => return Ok(()),
            Generator::RandomGv => 3,
            Generator::IllscaledQs => 8,
        };
        if self.n < min_n {
            return Err(Error::Config(format!("n = {} too small for this generator (need >= {min_n})", self.n)));
        }
        if self.m == 0 {
            return Err(Error::Config("m must be positive".into()));
        }
        Ok(())
    }

    pub fn rho(&self) -> Option<f64> {
        match self.rhs {
            RhsKind::Dense => None,
            RhsKind::Sparse { rho } => Some(rho),
        }
    }
}

/// Deterministic per-trial seed (splitmix64 of the base seed and stream).
pub fn trial_seed(seed: u64, trial: usize, stream: u64) -> u64 {
    let mut z = seed
        .wrapping_add((trial as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
        .wrapping_add(stream.wrapping_mul(0xd1b5_4a32_d192_ed03));
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub trial: usize,
    /// `"B1"` / `"B2"` for the worked example, empty otherwise.
    pub label: String,
    pub rho: Option<f64>,
    pub report: CondReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Aborted {
    pub trial: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub config: ExperimentConfig,
    pub rows: Vec<TableRow>,
    pub aborted: Vec<Aborted>,
}

/// Build, solve and evaluate one trial.
pub fn run_trial(config: &ExperimentConfig, trial: usize) -> Result<CondReport> {
    let mseed = trial_seed(config.seed, trial, 0);
    let rseed = trial_seed(config.seed, trial, 1);
    let (source, n) = match config.generator {
        Generator::RandomGv => (MatrixSource::Gv(gen_random_gv(config.n, mseed)?), config.n),
        Generator::IllscaledQs => (MatrixSource::Qs(gen_illscaled_qs(config.n, mseed)?), config.n),
        Generator::Example1Fixed => return Err(Error::Config("the worked example has no random trials".into())),
    };
    let rhs = match config.rhs {
        RhsKind::Dense => Rhs::Dense(gen_dense_rhs(n, config.m, rseed)),
        RhsKind::Sparse { rho } => Rhs::Sparse(gen_sparse_rhs(n, config.m, rho, rseed)?),
    };
    let report = cond_report(&source, &rhs, Some(mseed), config.precision)?;
    if report.backward_error.is_nan() || report.backward_error > BACKWARD_ERROR_LIMIT {
        return Err(Error::Unreliable(report.backward_error));
    }
    Ok(report)
}

/// The worked example's two rows (sparse `B1`, dense `B2`).
pub fn example1_rows(precision: Precision) -> Result<Vec<TableRow>> {
    let (_, b1, b2) = example1_fixture();
    let src = MatrixSource::Qs(example1_params());
    let r1 = cond_report(&src, &Rhs::Sparse(SparseRhs::from_nonzeros(&b1)), None, precision)?;
    let r2 = cond_report(&src, &Rhs::Dense(b2), None, precision)?;
    Ok(vec![
        TableRow { trial: 0, label: "B1".into(), rho: Some(0.5), report: r1 },
        TableRow { trial: 1, label: "B2".into(), rho: None, report: r2 },
    ])
}

/// Run every trial (in parallel) and collect rows in trial order.
pub fn run_table(config: &ExperimentConfig) -> Result<Table> {
    config.validate()?;
    if config.generator == Generator::Example1Fixed {
        return Ok(Table { config: config.clone(), rows: example1_rows(config.precision)?, aborted: vec![] });
    }
    let results: Vec<(usize, Result<CondReport>)> =
        (0..config.trials).into_par_iter().map(|t| (t, run_trial(config, t))).collect();
    let mut rows = Vec::new();
    let mut aborted = Vec::new();
    for (trial, r) in results {
        match r {
            Ok(report) => rows.push(TableRow { trial, label: String::new(), rho: config.rho(), report }),
            Err(e @ (Error::Unreliable(_) | Error::Singular | Error::ZeroSolution)) => {
                aborted.push(Aborted { trial, reason: e.to_string() })
            }
            Err(e) => return Err(e),
        }
    }
    Ok(Table { config: config.clone(), rows, aborted })
}

/// One failed inequality.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub check: String,
    pub lhs: f64,
    pub rhs: f64,
}

/// The comparison chains between the computed numbers, with no slack.
pub fn check_chains(r: &CondReport) -> Vec<Violation> {
    let n = r.n as f64;
    let mut out = Vec::new();
    let mut le = |name: &str, lhs: f64, rhs: f64| {
        if lhs.is_nan() || rhs.is_nan() || lhs > rhs {
            out.push(Violation { check: name.to_string(), lhs, rhs });
        }
    };
    le("k_qs <= n k_unstructured", r.k_qs, n * r.k_unstructured_rhs());
    le("k_eff <= k_qs", r.k_eff, r.k_qs);
    le("k_qs <= (n-1) k_eff", r.k_qs, (n - 1.0) * r.k_eff);
    if let Some(gv) = r.k_gv {
        le("k_gv <= k_qs", gv, r.k_qs);
        le("k_qs <= (3n-2) k_gv", r.k_qs, (3.0 * n - 2.0) * gv);
    }
    out
}

/// Whether the tighter constant `3(n-2)` would also hold.
pub fn tight_gv_bound_holds(r: &CondReport) -> Option<bool> {
    r.k_gv.map(|gv| r.k_qs <= 3.0 * (r.n as f64 - 2.0) * gv)
}

fn fmt(x: f64) -> String {
    format!("{x:.4e}")
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = String::from(CondReport::CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.report.csv_row(r.rho));
            s.push('\n');
        }
        s
    }

    /// Markdown laid out like the published tables for each example.
    pub fn to_markdown(&self) -> String {
        let mut s = String::new();
        match self.config.generator {
            Generator::Example1Fixed => {
                s.push_str("| rhs | K_unstructured | K_eff | K_qs |\n|---|---|---|---|\n");
                for r in &self.rows {
                    let k = &r.report;
                    s.push_str(&format!("| {} | {} | {} | {} |\n", r.label, fmt(k.k_unstructured_rhs()), fmt(k.k_eff), fmt(k.k_qs)));
                }
            }
            Generator::RandomGv => {
                s.push_str("| m | rho | K_gv | K_qs | K_eff | K_unstructured |\n|---|---|---|---|---|---|\n");
                for r in &self.rows {
                    let k = &r.report;
                    s.push_str(&format!(
                        "| {} | {} | {} | {} | {} | {} |\n",
                        k.m,
                        r.rho.map(|x| x.to_string()).unwrap_or_default(),
                        k.k_gv.map(fmt).unwrap_or_default(),
                        fmt(k.k_qs),
                        fmt(k.k_eff),
                        fmt(k.k_unstructured_rhs())
                    ));
                }
            }
            Generator::IllscaledQs => {
                s.push_str("| n | m | rho | ratio | K_unstructured | K_eff |\n|---|---|---|---|---|---|\n");
                for r in &self.rows {
                    let k = &r.report;
                    s.push_str(&format!(
                        "| {} | {} | {} | {} | {} | {} |\n",
                        k.n,
                        k.m,
                        r.rho.map(|x| x.to_string()).unwrap_or_default(),
                        fmt(k.ratio()),
                        fmt(k.k_unstructured_rhs()),
                        fmt(k.k_eff)
                    ));
                }
            }
        }
        for a in &self.aborted {
            s.push_str(&format!("\ntrial {} aborted: {}\n", a.trial, a.reason));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_entries() {
        let (a, b1, b2) = example1_fixture();
        assert_eq!(a[(0, 1)], -2.9442);
        assert_eq!(b1[(3, 0)], 0.0);
        assert_eq!(b1[(3, 1)], 7.7359e-2);
        assert_eq!(b2[(0, 0)], 1.0e-3);
    }

    #[test]
    fn gv_lengths_and_determinism() {
        let g = gen_random_gv(60, 3).unwrap();
        assert_eq!((g.l.len(), g.v.len(), g.d.len(), g.w.len(), g.u.len()), (58, 59, 60, 59, 58));
        assert_eq!(g, gen_random_gv(60, 3).unwrap());
        assert_ne!(g, gen_random_gv(60, 4).unwrap());
    }

    #[test]
    fn normal_mean() {
        let g = gen_random_gv(10_000, 11).unwrap();
        let mean = g.d.iter().sum::<f64>() / g.d.len() as f64;
        assert!(mean.abs() < 0.05, "{mean}");
    }

    #[test]
    fn illscaled_arithmetic() {
        assert_eq!(illscaled_counts(20), (5, 5));
        let a = illscaled_alpha(5);
        assert_eq!(a[0], 1.0);
        assert_eq!(a[4], 5.0);
        assert!(gen_illscaled_qs(7, 0).is_err());
    }

    #[test]
    fn illscaled_selected_weights() {
        let base = gen_random_qs(20, 5).unwrap();
        let ill = gen_illscaled_qs(20, 5).unwrap();
        let mut ratios: Vec<f64> = ill.p.iter().zip(&base.p).map(|(x, y)| (x / y).log10()).collect();
        let big: Vec<f64> = ratios.iter().copied().filter(|r| *r > 1.0).collect();
        assert_eq!(big.len(), 5);
        // ascending index order gets ascending exponents 4..8
        for (k, r) in big.iter().enumerate() {
            assert!((r - (4.0 + k as f64)).abs() < 1e-12);
        }
        ratios = ill.a.iter().zip(&base.a).map(|(x, y)| (x / y).log10()).filter(|r| *r > 1.0).collect();
        for (k, r) in ratios.iter().enumerate() {
            assert!((r - (8.0 - k as f64)).abs() < 1e-12);
        }
        assert!(ill.d.iter().zip(&base.d).all(|(x, y)| (x / y - 1e-3).abs() < 1e-15));
        assert!(ill.g.iter().zip(&base.g).all(|(x, y)| (x / y - 1e3).abs() < 1e-9));
        assert_eq!(ill.q, base.q);
    }

    #[test]
    fn sparse_rhs_counts() {
        assert_eq!(gen_sparse_rhs(7, 3, 1.0, 1).unwrap().len(), 21);
        assert_eq!(gen_sparse_rhs(7, 3, 0.4, 9).unwrap(), gen_sparse_rhs(7, 3, 0.4, 9).unwrap());
        let s = gen_sparse_rhs(100, 100, 0.1, 2).unwrap();
        assert!((s.len() as f64 - 1000.0).abs() <= 90.0, "{}", s.len());
        assert!(s.terms.iter().all(|t| t.omega > 0.0 && t.omega < 1.0));
        assert!(gen_sparse_rhs(3, 3, 0.0, 1).is_err());
    }

    #[test]
    fn zero_trials_rejected() {
        let c = ExperimentConfig {
            generator: Generator::RandomGv,
            n: 10,
            m: 2,
            rhs: RhsKind::Dense,
            seed: 1,
            trials: 0,
            precision: Precision::Double,
        };
        assert!(matches!(run_table(&c), Err(Error::Config(m)) if m == "no trials"));
    }
}
