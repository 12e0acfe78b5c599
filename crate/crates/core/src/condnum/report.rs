use serde::{Deserialize, Serialize};
use twofloat::TwoFloat;

use super::*;
use crate::qsrep::{gv_materialize, gv_to_qs, qs_from_dense, qs_materialize};
use crate::scalar::Precision;

#[derive(Clone, Debug)]
pub enum MatrixSource {
    Qs(QsParams),
    Gv(GvTangentParams),
    /// Dense input; a quasiseparable representation is rebuilt with the
    /// given entrywise relative tolerance.
    Dense { matrix: DenseMatrix, tol: f64 },
}

impl MatrixSource {
    fn qs(&self) -> Result<QsParams> {
        match self {
            MatrixSource::Qs(p) => Ok(p.clone()),
            MatrixSource::Gv(g) => Ok(gv_to_qs(g)),
            MatrixSource::Dense { matrix, tol } => qs_from_dense(matrix, *tol),
        }
    }
}

/// Natural-weight condition numbers of one instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondReport {
    pub n: usize,
    pub m: usize,
    pub seed: Option<u64>,
    pub rhs_mode: String,
    pub precision: Precision,
    /// `|A^-1||A||X| + |A^-1||B|`
    pub k_unstructured: f64,
    /// Unstructured `A` with the sparse right-hand side model, if sparse.
    pub k_unstructured_sparse_b: Option<f64>,
    pub k_qs: f64,
    pub k_gv: Option<f64>,
    pub k_eff: f64,
    /// `||A X - B||_max / ||B||_max` of the solve.
    pub relative_residual: f64,
    /// Componentwise backward error of the solve.
    pub backward_error: f64,
}

impl CondReport {
    /// The unstructured value matching the right-hand side model.
    pub fn k_unstructured_rhs(&self) -> f64 {
        self.k_unstructured_sparse_b.unwrap_or(self.k_unstructured)
    }

    /// Unstructured over effective.
    pub fn ratio(&self) -> f64 {
        self.k_unstructured_rhs() / self.k_eff
    }

    pub const CSV_HEADER: &'static str = "n,m,rho,seed,k_unstructured,k_eff,k_qs,k_gv,ratio";

    pub fn csv_row(&self, rho: Option<f64>) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x:.6e}")).unwrap_or_default();
        format!(
            "{},{},{},{},{:.6e},{:.6e},{:.6e},{},{:.6e}",
            self.n,
            self.m,
            rho.map(|r| r.to_string()).unwrap_or_default(),
            self.seed.map(|s| s.to_string()).unwrap_or_default(),
            self.k_unstructured_rhs(),
            self.k_eff,
            self.k_qs,
            opt(self.k_gv),
            self.ratio()
        )
    }
}

fn report_in<T: Scalar>(source: &MatrixSource, rhs: &Rhs, seed: Option<u64>, precision: Precision) -> Result<CondReport> {
    let qs = source.qs()?;
    let a = match source {
        MatrixSource::Gv(g) => gv_materialize(g),
        _ => qs_materialize(&qs),
    };
    let b = rhs.materialize();
    let s = Solved::<T>::new(&a, &b)?;
    let k_unstructured = cond_unstructured_natural(&s)?;
    let k_unstructured_sparse_b = match rhs {
        Rhs::Sparse(sp) => Some(cond_unstructured_a_sparse_b_natural(&s, sp)?),
        Rhs::Dense(_) => None,
    };
    let k_qs = cond_qs(&qs, &s, rhs, &WeightSpec::Natural)?;
    let k_gv = match source {
        MatrixSource::Gv(g) => Some(cond_gv(g, &s, rhs, &WeightSpec::Natural)?),
        _ => None,
    };
    let k_eff = cond_eff(&qs, &s, rhs)?;
    Ok(CondReport {
        n: s.n(),
        m: s.m(),
        seed,
        rhs_mode: rhs.mode().to_string(),
        precision,
        k_unstructured,
        k_unstructured_sparse_b,
        k_qs,
        k_gv,
        k_eff,
        relative_residual: s.relative_residual(),
        backward_error: s.backward_error(),
    })
}

/// All applicable natural-weight condition numbers for one instance.
pub fn cond_report(source: &MatrixSource, rhs: &Rhs, seed: Option<u64>, precision: Precision) -> Result<CondReport> {
    match precision {
        Precision::Double => report_in::<f64>(source, rhs, seed, precision),
        Precision::Extended => report_in::<TwoFloat>(source, rhs, seed, precision),
    }
}
