//! Quasiseparable and tangent Givens-vector parameterizations of
//! {1;1}-quasiseparable matrices.
//!
//! Parameter vectors are stored zero-based. The 1-based index ranges are:
//!
//! | field | indices  | storage          |
//! |-------|----------|------------------|
//! | `p`   | 2..=n    | `p[i-2]`         |
//! | `a`   | 2..=n-1  | `a[i-2]`         |
//! | `q`   | 1..=n-1  | `q[i-1]`         |
//! | `d`   | 1..=n    | `d[i-1]`         |
//! | `g`   | 1..=n-1  | `g[i-1]`         |
//! | `b`   | 2..=n-1  | `b[i-2]`         |
//! | `h`   | 2..=n    | `h[i-2]`         |
//!
//! The tangent form uses `l`, `u` at 2..=n-1 and `v`, `w` at 1..=n-1.

use serde::{Deserialize, Serialize};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QsParams {
    pub n: usize,
    pub p: Vec<f64>,
    pub a: Vec<f64>,
    pub q: Vec<f64>,
    pub d: Vec<f64>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    pub h: Vec<f64>,
}

fn check_len(name: &str, v: &[f64], want: usize) -> Result<()> {
    if v.len() != want {
        return Err(Error::InvalidParams(format!("`{name}` has length {}, expected {want}", v.len())));
    }
    if let Some(k) = v.iter().position(|x| !x.is_finite()) {
        return Err(Error::InvalidParams(format!("`{name}`[{k}] is not finite")));
    }
    Ok(())
}

impl QsParams {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n: usize,
        p: Vec<f64>,
        a: Vec<f64>,
        q: Vec<f64>,
        d: Vec<f64>,
        g: Vec<f64>,
        b: Vec<f64>,
        h: Vec<f64>,
    ) -> Result<Self> {
        let s = QsParams { n, p, a, q, d, g, b, h };
        s.validate()?;
        Ok(s)
    }

    /// Diagonal matrix (all generators zero).
    pub fn diagonal(d: Vec<f64>) -> Result<Self> {
        let n = d.len();
        if n < 2 {
            return Err(Error::InvalidParams("order must be at least 2".into()));
        }
        Self::new(n, vec![0.0; n - 1], vec![0.0; n - 2], vec![0.0; n - 1], d, vec![0.0; n - 1], vec![0.0; n - 2], vec![0.0; n - 1])
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 2 {
            return Err(Error::InvalidParams(format!("order n = {n} must be at least 2")));
        }
        check_len("p", &self.p, n - 1)?;
        check_len("a", &self.a, n - 2)?;
        check_len("q", &self.q, n - 1)?;
        check_len("d", &self.d, n)?;
        check_len("g", &self.g, n - 1)?;
        check_len("b", &self.b, n - 2)?;
        check_len("h", &self.h, n - 1)
    }

    pub fn param_count(&self) -> usize {
        self.p.len() + self.a.len() + self.q.len() + self.d.len() + self.g.len() + self.b.len() + self.h.len()
    }

    // 1-based accessors
    pub fn p_at(&self, i: usize) -> f64 {
        self.p[i - 2]
    }
    pub fn a_at(&self, i: usize) -> f64 {
        self.a[i - 2]
    }
    pub fn q_at(&self, j: usize) -> f64 {
        self.q[j - 1]
    }
    pub fn d_at(&self, i: usize) -> f64 {
        self.d[i - 1]
    }
    pub fn g_at(&self, i: usize) -> f64 {
        self.g[i - 1]
    }
    pub fn b_at(&self, i: usize) -> f64 {
        self.b[i - 2]
    }
    pub fn h_at(&self, j: usize) -> f64 {
        self.h[j - 2]
    }

    /// Entry `(i, j)` (1-based) evaluated as an explicit product.
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        use std::cmp::Ordering::*;
        match i.cmp(&j) {
            Equal => self.d_at(i),
            Greater => {
                let mut v = self.p_at(i);
                for k in (j + 1..i).rev() {
                    v *= self.a_at(k);
                }
                v * self.q_at(j)
            }
            Less => {
                let mut v = self.g_at(i);
                for k in i + 1..j {
                    v *= self.b_at(k);
                }
                v * self.h_at(j)
            }
        }
    }
}

pub fn qs_materialize(params: &QsParams) -> DenseMatrix {
    let n = params.n;
    let mut m = DenseMatrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = params.d[i];
    }
    // lower, column by column: t = a_{i-1} ... a_{j+1} q_j
    for j in 1..n {
        let mut t = params.q_at(j);
        for i in j + 1..=n {
            m[(i - 1, j - 1)] = params.p_at(i) * t;
            if i < n {
                t *= params.a_at(i);
            }
        }
    }
    for i in 1..n {
        let mut t = params.g_at(i);
        for j in i + 1..=n {
            m[(i - 1, j - 1)] = t * params.h_at(j);
            if j < n {
                t *= params.b_at(j);
            }
        }
    }
    m
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GvTangentParams {
    pub n: usize,
    pub l: Vec<f64>,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
    pub u: Vec<f64>,
}

impl GvTangentParams {
    pub fn new(n: usize, l: Vec<f64>, v: Vec<f64>, d: Vec<f64>, w: Vec<f64>, u: Vec<f64>) -> Result<Self> {
        let s = GvTangentParams { n, l, v, d, w, u };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.n;
        if n < 3 {
            return Err(Error::InvalidParams(format!("tangent representation needs n >= 3, got {n}")));
        }
        check_len("l", &self.l, n - 2)?;
        check_len("v", &self.v, n - 1)?;
        check_len("d", &self.d, n)?;
        check_len("w", &self.w, n - 1)?;
        check_len("u", &self.u, n - 2)
    }

    pub fn param_count(&self) -> usize {
        self.l.len() + self.v.len() + self.d.len() + self.w.len() + self.u.len()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GvTrigParams {
    pub n: usize,
    pub c: Vec<f64>,
    pub s: Vec<f64>,
    pub r: Vec<f64>,
    pub t: Vec<f64>,
    pub v: Vec<f64>,
    pub d: Vec<f64>,
    pub w: Vec<f64>,
}

impl GvTrigParams {
    /// Max deviation of `c^2 + s^2` and `r^2 + t^2` from one, in ulps of 1.
    pub fn pythagoras_ulps(&self) -> f64 {
        let dev = |x: &[f64], y: &[f64]| {
            x.iter().zip(y).map(|(a, b)| (a * a + b * b - 1.0).abs()).fold(0.0, f64::max)
        };
        dev(&self.c, &self.s).max(dev(&self.r, &self.t)) / f64::EPSILON
    }
}

/// `(cos, sin)` of the rotation with tangent `x`.
pub fn tangent_to_cs(x: f64) -> (f64, f64) {
    // hypot avoids overflow of 1 + x^2 for huge tangents
    let hyp = 1.0f64.hypot(x);
    (1.0 / hyp, x / hyp)
}

pub fn gv_tangent_to_trig(params: &GvTangentParams) -> GvTrigParams {
    let (c, s) = params.l.iter().map(|&x| tangent_to_cs(x)).unzip();
    let (r, t) = params.u.iter().map(|&x| tangent_to_cs(x)).unzip();
    GvTrigParams { n: params.n, c, s, r, t, v: params.v.clone(), d: params.d.clone(), w: params.w.clone() }
}

/// Dense matrix of the Givens-vector form, entry by entry.
pub fn gv_materialize(params: &GvTangentParams) -> DenseMatrix {
    let tr = gv_tangent_to_trig(params);
    let n = params.n;
    // 1-based helpers
    let c = |i: usize| tr.c[i - 2];
    let s = |i: usize| tr.s[i - 2];
    let r = |i: usize| tr.r[i - 2];
    let t = |i: usize| tr.t[i - 2];
    DenseMatrix::from_fn(n, n, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        if i == j {
            tr.d[i - 1]
        } else if i > j {
            let mut val = if i < n { c(i) } else { 1.0 };
            for k in (j + 1..i).rev() {
                val *= s(k);
            }
            val * tr.v[j - 1]
        } else {
            let mut val = tr.w[i - 1];
            for k in i + 1..j {
                val *= t(k);
            }
            val * if j < n { r(j) } else { 1.0 }
        }
    })
}

pub fn gv_to_qs(params: &GvTangentParams) -> QsParams {
    let tr = gv_tangent_to_trig(params);
    let mut p = tr.c.clone();
    p.push(1.0);
    let mut h = tr.r.clone();
    h.push(1.0);
    QsParams { n: params.n, p, a: tr.s, q: tr.v, d: tr.d, g: tr.w, b: tr.t, h }
}

/// Rebuild a quasiseparable representation from a dense matrix with nonzero
/// first sub- and superdiagonals, normalizing `p = h = 1`. `tol` bounds the
/// entrywise relative reconstruction error.
pub fn qs_from_dense(a: &DenseMatrix, tol: f64) -> Result<QsParams> {
    if !a.is_square() || a.rows() < 2 {
        return Err(Error::Dimension(format!("need a square matrix of order >= 2, got {}x{}", a.rows(), a.cols())));
    }
    let n = a.rows();
    // 1-based view
    let at = |i: usize, j: usize| a[(i - 1, j - 1)];
    for k in 1..n {
        if at(k + 1, k) == 0.0 {
            return Err(Error::ChainBroken(format!("subdiagonal entry ({}, {k})", k + 1)));
        }
        if at(k, k + 1) == 0.0 {
            return Err(Error::ChainBroken(format!("superdiagonal entry ({k}, {})", k + 1)));
        }
    }
    let d = (1..=n).map(|i| at(i, i)).collect();
    let q = (1..n).map(|j| at(j + 1, j)).collect();
    let g = (1..n).map(|j| at(j, j + 1)).collect();
    let av = (2..n).map(|i| at(i + 1, i - 1) / at(i, i - 1)).collect();
    let bv = (2..n).map(|i| at(i - 1, i + 1) / at(i - 1, i)).collect();
    let params = QsParams::new(n, vec![1.0; n - 1], av, q, d, g, bv, vec![1.0; n - 1])?;
    let rec = qs_materialize(&params);
    let residual = entrywise_relative_error(&rec, a);
    if residual.is_nan() || residual > tol {
        return Err(Error::NotQuasiseparable { residual, tol });
    }
    Ok(params)
}

/// `max |X - Y| / |Y|` entrywise; an exact zero in `Y` must be matched exactly.
pub fn entrywise_relative_error(x: &DenseMatrix, y: &DenseMatrix) -> f64 {
    x.as_slice()
        .iter()
        .zip(y.as_slice())
        .map(|(&u, &v)| {
            let diff = (u - v).abs();
            if diff == 0.0 {
                0.0
            } else if v == 0.0 {
                f64::INFINITY
            } else {
                diff / v.abs()
            }
        })
        .fold(0.0, f64::max)
}

/// `A x` in linear time from the generators.
pub fn qs_matvec(params: &QsParams, x: &[f64]) -> Result<Vec<f64>> {
    let n = params.n;
    if x.len() != n {
        return Err(Error::Dimension(format!("vector of length {} for order {n}", x.len())));
    }
    let mut y: Vec<f64> = params.d.iter().zip(x).map(|(d, x)| d * x).collect();
    // sigma_k = a_k sigma_{k-1} + q_k x_k; y_{k+1} += p_{k+1} sigma_k
    let mut sigma = 0.0;
    for k in 1..n {
        sigma = if k == 1 { 0.0 } else { params.a_at(k) * sigma } + params.q_at(k) * x[k - 1];
        y[k] += params.p_at(k + 1) * sigma;
    }
    // tau_k = b_k tau_{k+1} + h_k x_k; y_{k-1} += g_{k-1} tau_k
    let mut tau = 0.0;
    for k in (2..=n).rev() {
        tau = if k == n { 0.0 } else { params.b_at(k) * tau } + params.h_at(k) * x[k - 1];
        y[k - 2] += params.g_at(k - 1) * tau;
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ex_gv3() -> GvTangentParams {
        GvTangentParams::new(3, vec![1.0], vec![1.0, 1.0], vec![0.0; 3], vec![1.0, 1.0], vec![1.0]).unwrap()
    }

    #[test]
    fn ones_2x2() {
        let p = QsParams::new(2, vec![1.0], vec![], vec![1.0], vec![1.0, 1.0], vec![1.0], vec![], vec![1.0]).unwrap();
        let m = qs_materialize(&p);
        assert!(m.as_slice().iter().all(|&x| x == 1.0));
        assert_eq!(p.param_count(), 7 * 2 - 8);
    }

    #[test]
    fn diagonal_case() {
        let p = QsParams::diagonal(vec![2.0, 3.0, 4.0]).unwrap();
        let m = qs_materialize(&p);
        assert_eq!(m.to_rows(), vec![vec![2.0, 0.0, 0.0], vec![0.0, 3.0, 0.0], vec![0.0, 0.0, 4.0]]);
    }

    #[test]
    fn length_checks() {
        let e = QsParams::new(3, vec![1.0], vec![1.0], vec![1.0; 2], vec![1.0; 3], vec![1.0; 2], vec![1.0], vec![1.0; 2]);
        assert!(matches!(e, Err(Error::InvalidParams(m)) if m.contains("`p`")));
        assert!(GvTangentParams::new(2, vec![], vec![1.0], vec![1.0; 2], vec![1.0], vec![]).is_err());
    }

    #[test]
    fn trig_values() {
        let g = GvTangentParams::new(4, vec![0.0, 1.0], vec![0.0; 3], vec![0.0; 4], vec![0.0; 3], vec![3.0, -2.0]).unwrap();
        let tr = gv_tangent_to_trig(&g);
        assert_eq!((tr.c[0], tr.s[0]), (1.0, 0.0));
        assert!((tr.c[1] - std::f64::consts::FRAC_1_SQRT_2).abs() <= 2.0 * f64::EPSILON);
        assert!((tr.s[1] - std::f64::consts::FRAC_1_SQRT_2).abs() <= 2.0 * f64::EPSILON);
        assert!((tr.r[0] - 0.316227766016838).abs() < 1e-15);
        assert!((tr.t[0] - 0.948683298050514).abs() < 1e-15);
        assert!(tr.pythagoras_ulps() <= 4.0);
    }

    #[test]
    fn gv_hand_entries() {
        let m = gv_materialize(&ex_gv3());
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!((m[(2, 0)] - h).abs() <= 2.0 * f64::EPSILON);
        assert!((m[(1, 0)] - h).abs() <= 2.0 * f64::EPSILON); // c2 v1
        assert!((m[(0, 2)] - h).abs() <= 2.0 * f64::EPSILON); // w1 t2
        let q = gv_to_qs(&ex_gv3());
        assert!((q.p[0] - h).abs() <= 2.0 * f64::EPSILON);
        assert_eq!(q.p[1], 1.0);
        assert!((q.a[0] - h).abs() <= 2.0 * f64::EPSILON);
        assert_eq!(q.q, vec![1.0, 1.0]);
    }

    #[test]
    fn gv_identity() {
        let g = GvTangentParams::new(4, vec![0.0; 2], vec![0.0; 3], vec![1.0; 4], vec![0.0; 3], vec![0.0; 2]).unwrap();
        assert_eq!(gv_materialize(&g), DenseMatrix::identity(4));
        assert_eq!(qs_materialize(&gv_to_qs(&g)), DenseMatrix::identity(4));
    }

    #[test]
    fn from_dense_tridiagonal() {
        let a = DenseMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0, 0.0],
            vec![-1.0, 2.0, 3.0, 0.0],
            vec![0.0, 4.0, 2.0, 5.0],
            vec![0.0, 0.0, 6.0, 2.0],
        ])
        .unwrap();
        let p = qs_from_dense(&a, 1e-12).unwrap();
        assert!(p.a.iter().chain(&p.b).all(|&x| x == 0.0));
        assert_eq!(qs_materialize(&p), a);
    }

    #[test]
    fn from_dense_chain_broken() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 1.0, 0.0], vec![0.0, 1.0, 1.0], vec![0.0, 1.0, 1.0]]).unwrap();
        assert!(matches!(qs_from_dense(&a, 1e-12), Err(Error::ChainBroken(_))));
    }

    #[test]
    fn from_dense_rejects_full_rank_blocks() {
        let a = DenseMatrix::from_rows(&[
            vec![1.0, 2.0, 3.0, 4.0],
            vec![5.0, 1.0, 7.0, 8.0],
            vec![9.0, 1.5, 1.0, 2.0],
            vec![3.0, 4.0, 5.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(qs_from_dense(&a, 1e-12), Err(Error::NotQuasiseparable { .. })));
    }

    #[test]
    fn matvec_diagonal() {
        let p = QsParams::diagonal(vec![2.0, -1.0, 0.5]).unwrap();
        assert_eq!(qs_matvec(&p, &[1.0, 2.0, 4.0]).unwrap(), vec![2.0, -2.0, 2.0]);
        assert!(qs_matvec(&p, &[1.0]).is_err());
    }

    #[test]
    fn entry_helper_matches_materialize() {
        let p = QsParams::new(
            4,
            vec![1.5, -2.0, 0.5],
            vec![3.0, 0.25],
            vec![1.0, 2.0, -1.0],
            vec![1.0; 4],
            vec![0.5, 1.0, 2.0],
            vec![-1.0, 4.0],
            vec![2.0, 3.0, 5.0],
        )
        .unwrap();
        let m = qs_materialize(&p);
        for i in 1..=4 {
            for j in 1..=4 {
                assert!((m[(i - 1, j - 1)] - p.entry(i, j)).abs() <= 1e-15 * m.max_norm());
            }
        }
        // (4,1) = p4 a3 a2 q1
        assert_eq!(m[(3, 0)], 0.5 * 0.25 * 3.0 * 1.0);
    }
}
