use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// One pattern matrix `S_k` (0-based entry list) with its parameter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseTerm {
    pub entries: Vec<(usize, usize)>,
    pub omega: f64,
}

/// `B = sum_k omega_k S_k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparseRhs {
    pub n: usize,
    pub m: usize,
    pub terms: Vec<SparseTerm>,
}

impl SparseRhs {
    pub fn new(n: usize, m: usize, terms: Vec<SparseTerm>) -> Result<Self> {
        let s = SparseRhs { n, m, terms };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        for (k, t) in self.terms.iter().enumerate() {
            if !t.omega.is_finite() {
                return Err(Error::InvalidParams(format!("term {k}: omega is not finite")));
            }
            let mut seen = std::collections::HashSet::new();
            for &(i, j) in &t.entries {
                if i >= self.n || j >= self.m {
                    return Err(Error::Dimension(format!("term {k}: entry ({i}, {j}) outside {}x{}", self.n, self.m)));
                }
                if !seen.insert((i, j)) {
                    return Err(Error::InvalidParams(format!("term {k}: repeated entry ({i}, {j})")));
                }
            }
        }
        Ok(())
    }

    /// One single-entry term per nonzero of `b`, row-major.
    pub fn from_nonzeros(b: &DenseMatrix) -> Self {
        Self::from_entries(b, |v| v != 0.0)
    }

    /// One single-entry term per entry of `b`, zeros included.
    pub fn trivial(b: &DenseMatrix) -> Self {
        Self::from_entries(b, |_| true)
    }

    fn from_entries(b: &DenseMatrix, keep: impl Fn(f64) -> bool) -> Self {
        let mut terms = Vec::new();
        for i in 0..b.rows() {
            for j in 0..b.cols() {
                if keep(b[(i, j)]) {
                    terms.push(SparseTerm { entries: vec![(i, j)], omega: b[(i, j)] });
                }
            }
        }
        SparseRhs { n: b.rows(), m: b.cols(), terms }
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn omegas(&self) -> Vec<f64> {
        self.terms.iter().map(|t| t.omega).collect()
    }

    pub fn pattern(&self, k: usize) -> DenseMatrix {
        let mut s = DenseMatrix::zeros(self.n, self.m);
        for &(i, j) in &self.terms[k].entries {
            s[(i, j)] = 1.0;
        }
        s
    }

    pub fn materialize(&self) -> DenseMatrix {
        let mut b = DenseMatrix::zeros(self.n, self.m);
        for t in &self.terms {
            for &(i, j) in &t.entries {
                b[(i, j)] += t.omega;
            }
        }
        b
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Rhs {
    Dense(DenseMatrix),
    Sparse(SparseRhs),
}

impl Rhs {
    pub fn materialize(&self) -> DenseMatrix {
        match self {
            Rhs::Dense(b) => b.clone(),
            Rhs::Sparse(s) => s.materialize(),
        }
    }

    pub fn mode(&self) -> &'static str {
        match self {
            Rhs::Dense(_) => "dense",
            Rhs::Sparse(_) => "sparse",
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        match self {
            Rhs::Dense(b) => (b.rows(), b.cols()),
            Rhs::Sparse(s) => (s.n, s.m),
        }
    }
}

/// Perturbation weights for the right-hand side.
#[derive(Clone, Debug, PartialEq)]
pub enum RhsWeights {
    /// Entrywise bound `F` for a dense `B`.
    Dense(DenseMatrix),
    /// One weight per sparse term.
    Sparse(Vec<f64>),
}

pub(crate) fn check_weights(name: &str, w: &[f64]) -> Result<()> {
    if let Some(k) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::BadWeights(format!("{name}[{k}] = {}", w[k])));
    }
    Ok(())
}

/// `|A^{-1}| F` or `sum_k |A^{-1} S_k| f_k`.
pub(crate) fn rhs_contribution<T: Scalar>(
    a_inv: &DenseMatrix<T>,
    m: usize,
    rhs: &Rhs,
    weights: Option<&RhsWeights>,
) -> Result<DenseMatrix<T>> {
    let n = a_inv.rows();
    match (rhs, weights) {
        (Rhs::Dense(b), None) => a_inv.abs().matmul(&b.abs().convert()),
        (Rhs::Dense(b), Some(RhsWeights::Dense(f))) => {
            if f.rows() != b.rows() || f.cols() != b.cols() {
                return Err(Error::Dimension("rhs weight matrix shape differs from B".into()));
            }
            check_weights("F", f.as_slice())?;
            a_inv.abs().matmul(&f.convert())
        }
        (Rhs::Sparse(s), w) => {
            let f: Vec<f64> = match w {
                None => s.omegas().iter().map(|x| x.abs()).collect(),
                Some(RhsWeights::Sparse(f)) => {
                    if f.len() != s.len() {
                        return Err(Error::CountMismatch(format!("{} rhs weights for {} terms", f.len(), s.len())));
                    }
                    check_weights("f", f)?;
                    f.clone()
                }
                Some(RhsWeights::Dense(_)) => {
                    return Err(Error::InvalidParams("dense rhs weights given for a sparse right-hand side".into()))
                }
            };
            let mut out = DenseMatrix::zeros(n, m);
            let mut col = vec![T::zero(); n];
            for (t, &fk) in s.terms.iter().zip(&f) {
                if fk == 0.0 {
                    continue;
                }
                let fk = T::from_f64(fk);
                let mut cols: Vec<usize> = t.entries.iter().map(|e| e.1).collect();
                cols.sort_unstable();
                cols.dedup();
                for c in cols {
                    col.iter_mut().for_each(|x| *x = T::zero());
                    for &(i, _) in t.entries.iter().filter(|e| e.1 == c) {
                        for (r, x) in col.iter_mut().enumerate() {
                            *x += a_inv[(r, i)];
                        }
                    }
                    for (r, x) in col.iter().enumerate() {
                        out[(r, c)] += x.abs() * fk;
                    }
                }
            }
            Ok(out)
        }
        (Rhs::Dense(_), Some(RhsWeights::Sparse(_))) => {
            Err(Error::InvalidParams("sparse rhs weights given for a dense right-hand side".into()))
        }
    }
}
