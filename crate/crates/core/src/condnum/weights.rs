use serde::{Deserialize, Serialize};

use super::rhs::{check_weights, RhsWeights};
use crate::error::{Error, Result};
use crate::qsrep::{GvTangentParams, QsParams};

/// Weights laid out like [`QsParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsWeights {
    pub p: Vec<f64>,
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    pub d: Vec<f64>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    pub h: Vec<f64>,
}

/// Weights laid out like [`GvTangentParams`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvWeights {
    pub l: Vec<f64>,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
}

impl QsWeights {
    pub fn natural(p: &QsParams) -> Self {
        let f = |v: &[f64]| v.iter().map(|x| x.abs()).collect();
        QsWeights { p: f(&p.p), a: f(&p.a), q: f(&p.q), d: f(&p.d), g: f(&p.g), b: f(&p.b), h: f(&p.h) }
    }

    pub fn check(&self, p: &QsParams) -> Result<()> {
        for (name, w, v) in [
            ("p", &self.p, &p.p),
            ("a", &self.a, &p.a),
            ("q", &self.q, &p.q),
            ("d", &self.d, &p.d),
            ("g", &self.g, &p.g),
            ("b", &self.b, &p.b),
            ("h", &self.h, &p.h),
        ] {
            if w.len() != v.len() {
                return Err(Error::CountMismatch(format!("{name}: {} weights for {} parameters", w.len(), v.len())));
            }
            check_weights(name, w)?;
        }
        Ok(())
    }
}

impl GvWeights {
    pub fn natural(p: &GvTangentParams) -> Self {
        let f = |v: &[f64]| v.iter().map(|x| x.abs()).collect();
        GvWeights { l: f(&p.l), v: f(&p.v), d: f(&p.d), w: f(&p.w), u: f(&p.u) }
    }

    pub fn check(&self, p: &GvTangentParams) -> Result<()> {
        for (name, w, v) in
            [("l", &self.l, &p.l), ("v", &self.v, &p.v), ("d", &self.d, &p.d), ("w", &self.w, &p.w), ("u", &self.u, &p.u)]
        {
            if w.len() != v.len() {
                return Err(Error::CountMismatch(format!("{name}: {} weights for {} parameters", w.len(), v.len())));
            }
            check_weights(name, w)?;
        }
        Ok(())
    }
}

/// Natural weights (`|Omega|`, `|B|`) or explicit ones.
#[derive(Clone, Debug, PartialEq)]
pub enum WeightSpec<W> {
    Natural,
    Explicit { params: W, rhs: RhsWeights },
}

/// `|e / omega|` for one generator. In natural mode this is 1, zero
/// parameters included. In explicit mode `0/0` is 0 and `e/0` is an error.
pub(crate) fn ratio(natural: bool, e: f64, omega: f64, what: impl FnOnce() -> String) -> Result<f64> {
    if natural {
        return Ok(1.0);
    }
    if e == 0.0 {
        Ok(0.0)
    } else if omega == 0.0 {
        Err(Error::RatioUndefined(what()))
    } else {
        Ok((e / omega).abs())
    }
}
