//! Randomized self-check: closed forms against the enumeration oracle on
//! tiny instances, plus the comparison chains.

use serde::Serialize;
use twofloat::TwoFloat;

use crate::condnum::{
    cond_eff, cond_gv, cond_qs, cond_report, cond_unstructured_a_sparse_b_natural, cond_unstructured_natural, MatrixSource, Rhs,
    Solved, SparseRhs, WeightSpec,
};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::experiments::{check_chains, gen_dense_rhs, gen_random_gv, gen_random_qs, trial_seed, Violation};
use crate::oracle::{gv_problem, linearized_sup_oracle, qs_problem, unstructured_problem, ENUMERATION_BUDGET};
use crate::qsrep::{gv_materialize, qs_materialize};
use crate::scalar::Precision;
use crate::sensitivity::{ParamKind, QS_ORDER};

/// Relative agreement demanded between a closed form and the oracle.
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub n: usize,
    pub m: usize,
    pub trials: usize,
    pub seed: u64,
    /// Relative corruption applied to every closed form; 0 in normal use.
    pub fault: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub name: &'static str,
    pub comparisons: usize,
    pub max_deviation: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerifySummary {
    pub checks: Vec<CheckSummary>,
    pub chain_violations: Vec<Violation>,
    pub passed: bool,
}

/// Dense `b` if it fits the enumeration budget next to `count` matrix
/// parameters, else its leading entries as a sparse rhs.
fn fit_rhs(count: usize, b: &DenseMatrix) -> Rhs {
    if count + b.rows() * b.cols() <= ENUMERATION_BUDGET {
        return Rhs::Dense(b.clone());
    }
    let mut sp = SparseRhs::trivial(b);
    sp.terms.truncate(ENUMERATION_BUDGET.saturating_sub(count).max(1));
    Rhs::Sparse(sp)
}

fn deviation(closed: f64, oracle: f64) -> f64 {
    if closed == oracle {
        0.0
    } else {
        (closed - oracle).abs() / closed.abs().max(oracle.abs())
    }
}

pub fn run_verification(cfg: &VerifyConfig) -> Result<VerifySummary> {
    if cfg.trials == 0 {
        return Err(Error::Config("no trials".into()));
    }
    if !(2..=4).contains(&cfg.n) {
        return Err(Error::Config(format!("oracle mode needs 2 <= n <= 4, got {}", cfg.n)));
    }
    if cfg.m == 0 || cfg.m > 2 {
        return Err(Error::Config(format!("oracle mode needs 1 <= m <= 2, got {}", cfg.m)));
    }
    let (n, m) = (cfg.n, cfg.m);
    let corrupt = |v: f64| v * (1.0 + cfg.fault);
    let names = ["unstructured", "qs", "eff", "gv"];
    let mut checks: Vec<CheckSummary> = names.iter().map(|&name| CheckSummary { name, comparisons: 0, max_deviation: 0.0 }).collect();
    let mut record = |k: usize, closed: f64, oracle: f64| {
        checks[k].comparisons += 1;
        checks[k].max_deviation = checks[k].max_deviation.max(deviation(corrupt(closed), oracle));
    };
    let mut chain_violations = Vec::new();
    for t in 0..cfg.trials {
        let qs = gen_random_qs(n, trial_seed(cfg.seed, t, 0))?;
        let b = gen_dense_rhs(n, m, trial_seed(cfg.seed, t, 1));
        let a = qs_materialize(&qs);

        let rhs = fit_rhs(n * n, &b);
        let s: Solved<TwoFloat> = Solved::new(&a, &rhs.materialize())?;
        let closed = match &rhs {
            Rhs::Dense(_) => cond_unstructured_natural(&s)?,
            Rhs::Sparse(sp) => cond_unstructured_a_sparse_b_natural(&s, sp)?,
        };
        record(0, closed, linearized_sup_oracle(&unstructured_problem(&a, &rhs))?.value);

        let rhs = fit_rhs(qs.param_count(), &b);
        let s: Solved<TwoFloat> = Solved::new(&a, &rhs.materialize())?;
        record(1, cond_qs(&qs, &s, &rhs, &WeightSpec::Natural)?, linearized_sup_oracle(&qs_problem(&qs, &rhs, &QS_ORDER))?.value);

        let kinds = [ParamKind::P, ParamKind::Q, ParamKind::D, ParamKind::G, ParamKind::H];
        let rhs = fit_rhs(5 * n - 4, &b);
        let s: Solved<TwoFloat> = Solved::new(&a, &rhs.materialize())?;
        record(2, cond_eff(&qs, &s, &rhs)?, linearized_sup_oracle(&qs_problem(&qs, &rhs, &kinds))?.value);

        chain_violations.extend(check_chains(&cond_report(&MatrixSource::Qs(qs), &Rhs::Dense(b.clone()), None, Precision::Extended)?));

        if n >= 3 {
            let gv = gen_random_gv(n, trial_seed(cfg.seed, t, 2))?;
            let rhs = fit_rhs(gv.param_count(), &b);
            let s: Solved<TwoFloat> = Solved::new(&gv_materialize(&gv), &rhs.materialize())?;
            record(3, cond_gv(&gv, &s, &rhs, &WeightSpec::Natural)?, linearized_sup_oracle(&gv_problem(&gv, &rhs))?.value);
            chain_violations.extend(check_chains(&cond_report(&MatrixSource::Gv(gv), &Rhs::Dense(b), None, Precision::Extended)?));
        }
    }
    checks.retain(|c| c.comparisons > 0);
    let passed = chain_violations.is_empty() && checks.iter().all(|c| c.max_deviation <= ORACLE_TOL);
    Ok(VerifySummary { checks, chain_violations, passed })
}
