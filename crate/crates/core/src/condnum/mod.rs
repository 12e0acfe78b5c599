//! Componentwise condition numbers under the max norm.

mod report;
mod rhs;
mod weights;

pub use report::{cond_report, CondReport, MatrixSource};
pub use rhs::{Rhs, RhsWeights, SparseRhs, SparseTerm};
pub use weights::{GvWeights, QsWeights, WeightSpec};

use crate::dense::{DenseMatrix, Lu};
use crate::error::{Error, Result};
use crate::qsrep::{gv_tangent_to_trig, GvTangentParams, QsParams};
use crate::scalar::Scalar;
use rhs::{check_weights, rhs_contribution};
use weights::ratio;

/// A factored system `A X = B` with `A^{-1}` formed explicitly.
#[derive(Clone, Debug)]
pub struct Solved<T = f64> {
    pub a: DenseMatrix<T>,
    pub b: DenseMatrix<T>,
    pub a_inv: DenseMatrix<T>,
    pub x: DenseMatrix<T>,
    x_max: f64,
}

impl<T: Scalar> Solved<T> {
    pub fn new(a: &DenseMatrix, b: &DenseMatrix) -> Result<Self> {
        if !a.is_square() || a.rows() != b.rows() {
            return Err(Error::Dimension(format!(
                "A is {}x{}, B is {}x{}",
                a.rows(),
                a.cols(),
                b.rows(),
                b.cols()
            )));
        }
        let a: DenseMatrix<T> = a.convert();
        let b: DenseMatrix<T> = b.convert();
        let lu = Lu::factor(&a)?;
        let x = lu.solve(&b)?;
        let a_inv = lu.inverse();
        let x_max = x.max_norm();
        if !x_max.is_finite() || !a_inv.max_norm().is_finite() {
            return Err(Error::Singular);
        }
        if x_max == 0.0 {
            return Err(Error::ZeroSolution);
        }
        Ok(Solved { a, b, a_inv, x, x_max })
    }

    pub fn n(&self) -> usize {
        self.a.rows()
    }

    pub fn m(&self) -> usize {
        self.x.cols()
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    /// `||A X - B||_max / ||B||_max`, evaluated in the working precision.
    pub fn relative_residual(&self) -> f64 {
        let r = self.a.matmul(&self.x).and_then(|ax| ax.sub(&self.b)).expect("conformable");
        let bn = self.b.max_norm();
        if bn == 0.0 {
            r.max_norm()
        } else {
            r.max_norm() / bn
        }
    }

    /// Componentwise backward error `max |AX - B| / (|A||X| + |B|)`, with
    /// 0/0 read as 0. Unlike the normwise residual this stays meaningful when
    /// `|A||X|` dwarfs `B`, as it does for strongly graded matrices.
    pub fn backward_error(&self) -> f64 {
        let r = self.a.matmul(&self.x).and_then(|ax| ax.sub(&self.b)).expect("conformable");
        let scale = self.a.abs().matmul(&self.x.abs()).and_then(|s| s.add(&self.b.abs())).expect("conformable");
        let mut worst = 0.0f64;
        for (ri, si) in r.as_slice().iter().zip(scale.as_slice()) {
            let (ri, si) = (ri.abs().to_f64(), si.to_f64());
            if ri == 0.0 {
                continue;
            }
            worst = worst.max(if si == 0.0 { f64::INFINITY } else { ri / si });
        }
        worst
    }

    fn finish(&self, acc: &DenseMatrix<T>) -> f64 {
        acc.max_norm() / self.x_max
    }
}

/// `diag(w) M`.
fn scale_rows<T: Scalar>(m: &DenseMatrix<T>, w: &[f64]) -> DenseMatrix<T> {
    DenseMatrix::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)] * T::from_f64(w[i]))
}

fn add_into<T: Scalar>(acc: &mut DenseMatrix<T>, m: &DenseMatrix<T>) {
    acc.axpy(T::one(), m).expect("same shape");
}

fn add_scaled_abs<T: Scalar>(acc: &mut DenseMatrix<T>, m: &DenseMatrix<T>, w: f64) {
    if w != 0.0 {
        acc.axpy(T::from_f64(w), &m.abs()).expect("same shape");
    }
}

/// `A^{-1}(:, r0..) Y(r0.., :)` for a `Y` whose rows before `r0` and from
/// `r1` on are zero.
fn inv_times_rows<T: Scalar>(a_inv: &DenseMatrix<T>, y: &DenseMatrix<T>, r0: usize, r1: usize) -> DenseMatrix<T> {
    let (n, m) = (a_inv.rows(), y.cols());
    let mut out = DenseMatrix::zeros(n, m);
    for i in 0..n {
        for k in r0..r1 {
            let a = a_inv[(i, k)];
            for j in 0..m {
                out[(i, j)] += a * y[(k, j)];
            }
        }
    }
    out
}

/// `|| |A^{-1}| E |X| + |A^{-1}| F ||_max / ||X||_max`.
pub fn cond_unstructured<T: Scalar>(s: &Solved<T>, e: &DenseMatrix, f: &DenseMatrix) -> Result<f64> {
    let n = s.n();
    if e.rows() != n || e.cols() != n || f.rows() != n || f.cols() != s.m() {
        return Err(Error::Dimension("weight matrices do not match the system".into()));
    }
    check_weights("E", e.as_slice())?;
    check_weights("F", f.as_slice())?;
    let ai = s.a_inv.abs();
    let mut acc = ai.matmul(&e.convert::<T>().matmul(&s.x.abs())?)?;
    add_into(&mut acc, &ai.matmul(&f.convert())?);
    Ok(s.finish(&acc))
}

/// Natural weights `E = |A|`, `F = |B|`.
pub fn cond_unstructured_natural<T: Scalar>(s: &Solved<T>) -> Result<f64> {
    cond_unstructured(s, &s.a.to_f64().abs(), &s.b.to_f64().abs())
}

fn check_derivs(n: usize, m: usize, da: &[DenseMatrix], db: &[DenseMatrix]) -> Result<()> {
    for (k, d) in da.iter().enumerate() {
        if d.rows() != n || d.cols() != n {
            return Err(Error::Dimension(format!("dA[{k}] is {}x{}, expected {n}x{n}", d.rows(), d.cols())));
        }
    }
    for (k, d) in db.iter().enumerate() {
        if d.rows() != n || d.cols() != m {
            return Err(Error::Dimension(format!("dB[{k}] is {}x{}, expected {n}x{m}", d.rows(), d.cols())));
        }
    }
    Ok(())
}

/// General parameterized form. `da` holds `dA/domega_k` for the `N` matrix
/// parameters and `db` holds `dB/domega_k` for the `M` right-hand-side
/// parameters; the first `shared` of each refer to the same parameters.
/// `e` weighs all `N` matrix parameters, `f` the `M - shared` rhs-only ones.
pub fn cond_param_general<T: Scalar>(
    s: &Solved<T>,
    da: &[DenseMatrix],
    db: &[DenseMatrix],
    shared: usize,
    e: &[f64],
    f: &[f64],
) -> Result<f64> {
    if shared > da.len() || shared > db.len() {
        return Err(Error::CountMismatch(format!("{shared} shared parameters but {} / {} derivatives", da.len(), db.len())));
    }
    if e.len() != da.len() || f.len() != db.len() - shared {
        return Err(Error::CountMismatch(format!(
            "{} + {} weights for {} matrix and {} rhs-only parameters",
            e.len(),
            f.len(),
            da.len(),
            db.len() - shared
        )));
    }
    check_derivs(s.n(), s.m(), da, db)?;
    check_weights("e", e)?;
    check_weights("f", f)?;
    let mut acc = DenseMatrix::zeros(s.n(), s.m());
    for k in 0..da.len() {
        if e[k] == 0.0 {
            continue;
        }
        let mut t = s.a_inv.matmul(&da[k].convert::<T>().matmul(&s.x)?)?;
        if k < shared {
            t = t.sub(&s.a_inv.matmul(&db[k].convert())?)?;
        }
        add_scaled_abs(&mut acc, &t, e[k]);
    }
    for k in shared..db.len() {
        add_scaled_abs(&mut acc, &s.a_inv.matmul(&db[k].convert())?, f[k - shared]);
    }
    Ok(s.finish(&acc))
}

fn matrix_param_sum<T: Scalar>(s: &Solved<T>, da: &[DenseMatrix], e: &[f64]) -> Result<DenseMatrix<T>> {
    if e.len() != da.len() {
        return Err(Error::CountMismatch(format!("{} weights for {} matrix parameters", e.len(), da.len())));
    }
    check_derivs(s.n(), s.m(), da, &[])?;
    check_weights("e", e)?;
    let mut acc = DenseMatrix::zeros(s.n(), s.m());
    for (d, &w) in da.iter().zip(e) {
        if w != 0.0 {
            add_scaled_abs(&mut acc, &s.a_inv.matmul(&d.convert::<T>().matmul(&s.x)?)?, w);
        }
    }
    Ok(acc)
}

/// Matrix parameters plus every entry of `B` as an independent parameter.
pub fn cond_param_dense_b<T: Scalar>(s: &Solved<T>, da: &[DenseMatrix], e: &[f64], f: &DenseMatrix) -> Result<f64> {
    let mut acc = matrix_param_sum(s, da, e)?;
    let rhs = rhs_contribution(&s.a_inv, s.m(), &Rhs::Dense(s.b.to_f64()), Some(&RhsWeights::Dense(f.clone())))?;
    add_into(&mut acc, &rhs);
    Ok(s.finish(&acc))
}

/// Matrix parameters plus a sparse right-hand side `sum omega_k S_k`.
pub fn cond_param_sparse_b<T: Scalar>(
    s: &Solved<T>,
    da: &[DenseMatrix],
    e: &[f64],
    rhs: &SparseRhs,
    f: &[f64],
) -> Result<f64> {
    let mut acc = matrix_param_sum(s, da, e)?;
    let r = rhs_contribution(&s.a_inv, s.m(), &Rhs::Sparse(rhs.clone()), Some(&RhsWeights::Sparse(f.to_vec())))?;
    add_into(&mut acc, &r);
    Ok(s.finish(&acc))
}

/// Unstructured `A` (entry weights `E`) with a sparse right-hand side.
pub fn cond_unstructured_a_sparse_b<T: Scalar>(s: &Solved<T>, e: &DenseMatrix, rhs: &SparseRhs, f: &[f64]) -> Result<f64> {
    if e.rows() != s.n() || e.cols() != s.n() {
        return Err(Error::Dimension("weight matrix E does not match A".into()));
    }
    check_weights("E", e.as_slice())?;
    let mut acc = s.a_inv.abs().matmul(&e.convert::<T>().matmul(&s.x.abs())?)?;
    let r = rhs_contribution(&s.a_inv, s.m(), &Rhs::Sparse(rhs.clone()), Some(&RhsWeights::Sparse(f.to_vec())))?;
    add_into(&mut acc, &r);
    Ok(s.finish(&acc))
}

pub fn cond_unstructured_a_sparse_b_natural<T: Scalar>(s: &Solved<T>, rhs: &SparseRhs) -> Result<f64> {
    let f: Vec<f64> = rhs.omegas().iter().map(|x| x.abs()).collect();
    cond_unstructured_a_sparse_b(s, &s.a.to_f64().abs(), rhs, &f)
}

/// Per-row/column multipliers for the quasiseparable formula.
struct QsRatios {
    d: Vec<f64>,
    p: Vec<f64>,
    q: Vec<f64>,
    g: Vec<f64>,
    h: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
}

fn qs_ratios(params: &QsParams, w: Option<&QsWeights>) -> Result<QsRatios> {
    let n = params.n;
    let natural = w.is_none();
    let nat = QsWeights::natural(params);
    let w = w.unwrap_or(&nat);
    w.check(params)?;
    let r = |name: &'static str, e: &[f64], v: &[f64], first: usize| -> Result<Vec<f64>> {
        e.iter()
            .zip(v)
            .enumerate()
            .map(|(k, (&e, &v))| ratio(natural, e, v, || format!("{name}_{}", k + first)))
            .collect()
    };
    // pad to length n so that entry k multiplies row/column k (0-based)
    let mut p = vec![0.0];
    p.extend(r("p", &w.p, &params.p, 2)?);
    let mut q = r("q", &w.q, &params.q, 1)?;
    q.push(0.0);
    let mut g = r("g", &w.g, &params.g, 1)?;
    g.push(0.0);
    let mut h = vec![0.0];
    h.extend(r("h", &w.h, &params.h, 2)?);
    debug_assert!(p.len() == n && q.len() == n);
    Ok(QsRatios {
        d: w.d.clone(),
        p,
        q,
        g,
        h,
        a: r("a", &w.a, &params.a, 2)?,
        b: r("b", &w.b, &params.b, 2)?,
    })
}

fn rhs_part<T: Scalar, W>(s: &Solved<T>, rhs: &Rhs, spec: &WeightSpec<W>) -> Result<DenseMatrix<T>> {
    check_rhs(s, rhs)?;
    match spec {
        WeightSpec::Natural => rhs_contribution(&s.a_inv, s.m(), rhs, None),
        WeightSpec::Explicit { rhs: rw, .. } => rhs_contribution(&s.a_inv, s.m(), rhs, Some(rw)),
    }
}

fn check_rhs<T: Scalar>(s: &Solved<T>, rhs: &Rhs) -> Result<()> {
    if rhs.dims() != (s.n(), s.m()) {
        return Err(Error::Dimension(format!("rhs is {:?}, system is {}x{}", rhs.dims(), s.n(), s.m())));
    }
    Ok(())
}

/// Terms shared by the quasiseparable and effective formulas:
/// `|A^-1||D_d||X| + |A^-1||D_p||A_L X| + |A^-1 A_L||D_q||X|
///  + |A^-1||D_g||A_U X| + |A^-1 A_U||D_h||X|`.
fn qs_diagonal_terms<T: Scalar>(s: &Solved<T>, r: &QsRatios, acc: &mut DenseMatrix<T>) -> Result<()> {
    let (l, _, u) = s.a.split_lower_diag_upper()?;
    let ai = s.a_inv.abs();
    let ax = s.x.abs();
    add_into(acc, &ai.matmul(&scale_rows(&ax, &r.d))?);
    add_into(acc, &ai.matmul(&scale_rows(&l.matmul(&s.x)?.abs(), &r.p))?);
    add_into(acc, &s.a_inv.matmul(&l)?.abs().matmul(&scale_rows(&ax, &r.q))?);
    add_into(acc, &ai.matmul(&scale_rows(&u.matmul(&s.x)?.abs(), &r.g))?);
    add_into(acc, &s.a_inv.matmul(&u)?.abs().matmul(&scale_rows(&ax, &r.h))?);
    Ok(())
}

/// Running `sum_{c < k} A(:, c) X(c, :)` and `sum_{c >= k} A(:, c) X(c, :)`.
fn accumulate_column<T: Scalar>(acc: &mut DenseMatrix<T>, a: &DenseMatrix<T>, x: &DenseMatrix<T>, c: usize) {
    for r in 0..a.rows() {
        let v = a[(r, c)];
        if v.is_zero() {
            continue;
        }
        for j in 0..x.cols() {
            acc[(r, j)] += v * x[(c, j)];
        }
    }
}

/// Structured condition number for the quasiseparable representation.
/// `s` must be the solve of `qs_materialize(params) X = rhs`.
pub fn cond_qs<T: Scalar>(params: &QsParams, s: &Solved<T>, rhs: &Rhs, spec: &WeightSpec<QsWeights>) -> Result<f64> {
    params.validate()?;
    let n = params.n;
    let w = match spec {
        WeightSpec::Natural => None,
        WeightSpec::Explicit { params: w, .. } => Some(w),
    };
    let r = qs_ratios(params, w)?;
    let mut acc = rhs_part(s, rhs, spec)?;
    qs_diagonal_terms(s, &r, &mut acc)?;
    let (a, x) = (&s.a, &s.x);
    // a_i block: rows i+1..n, cols 1..i-1 (1-based)
    let mut prefix = DenseMatrix::zeros(n, s.m());
    for i in 2..n {
        accumulate_column(&mut prefix, a, x, i - 2);
        let w = r.a[i - 2];
        if w != 0.0 {
            add_scaled_abs(&mut acc, &inv_times_rows(&s.a_inv, &prefix, i, n), w);
        }
    }
    // b_i block: rows 1..i-1, cols i+1..n
    let mut suffix = DenseMatrix::zeros(n, s.m());
    for i in (2..n).rev() {
        accumulate_column(&mut suffix, a, x, i);
        let w = r.b[i - 2];
        if w != 0.0 {
            add_scaled_abs(&mut acc, &inv_times_rows(&s.a_inv, &suffix, 0, i - 1), w);
        }
    }
    Ok(s.finish(&acc))
}

/// Effective condition number: the quasiseparable formula with natural
/// weights and without the per-index `a`/`b` sums.
pub fn cond_eff<T: Scalar>(params: &QsParams, s: &Solved<T>, rhs: &Rhs) -> Result<f64> {
    params.validate()?;
    let r = qs_ratios(params, None)?;
    let mut acc = rhs_part::<T, QsWeights>(s, rhs, &WeightSpec::Natural)?;
    qs_diagonal_terms(s, &r, &mut acc)?;
    Ok(s.finish(&acc))
}

/// Structured condition number for the tangent Givens-vector representation.
/// `s` must be the solve of `gv_materialize(params) X = rhs`.
pub fn cond_gv<T: Scalar>(params: &GvTangentParams, s: &Solved<T>, rhs: &Rhs, spec: &WeightSpec<GvWeights>) -> Result<f64> {
    params.validate()?;
    let n = params.n;
    let natural = matches!(spec, WeightSpec::Natural);
    let nat = GvWeights::natural(params);
    let w = match spec {
        WeightSpec::Natural => &nat,
        WeightSpec::Explicit { params: w, .. } => w,
    };
    w.check(params)?;
    let ratios = |name: &'static str, e: &[f64], v: &[f64], first: usize| -> Result<Vec<f64>> {
        e.iter()
            .zip(v)
            .enumerate()
            .map(|(k, (&e, &v))| ratio(natural, e, v, || format!("{name}_{}", k + first)))
            .collect()
    };
    let mut rv = ratios("v", &w.v, &params.v, 1)?;
    rv.push(0.0);
    let mut rw = ratios("w", &w.w, &params.w, 1)?;
    rw.push(0.0);
    let rl = ratios("l", &w.l, &params.l, 2)?;
    let ru = ratios("u", &w.u, &params.u, 2)?;
    let tr = gv_tangent_to_trig(params);

    let mut acc = rhs_part(s, rhs, spec)?;
    let (l, _, u) = s.a.split_lower_diag_upper()?;
    let ai = s.a_inv.abs();
    let ax = s.x.abs();
    add_into(&mut acc, &ai.matmul(&scale_rows(&ax, &w.d))?);
    add_into(&mut acc, &s.a_inv.matmul(&l)?.abs().matmul(&scale_rows(&ax, &rv))?);
    add_into(&mut acc, &ai.matmul(&scale_rows(&u.matmul(&s.x)?.abs(), &rw))?);

    let (a, x) = (&s.a, &s.x);
    let m = s.m();
    // l_i: row i times -s_i^2 and rows i+1..n times c_i^2, cols 1..i-1
    let mut prefix = DenseMatrix::zeros(n, m);
    for i in 2..n {
        accumulate_column(&mut prefix, a, x, i - 2);
        let wt = rl[i - 2];
        if wt == 0.0 {
            continue;
        }
        let (c, sn) = (tr.c[i - 2], tr.s[i - 2]);
        let (fs, fc) = (T::from_f64(-sn * sn), T::from_f64(c * c));
        let y = DenseMatrix::from_fn(n, m, |r, j| {
            if r + 1 == i {
                fs * prefix[(r, j)]
            } else if r + 1 > i {
                fc * prefix[(r, j)]
            } else {
                T::zero()
            }
        });
        add_scaled_abs(&mut acc, &inv_times_rows(&s.a_inv, &y, i - 1, n), wt);
    }
    // u_i: column i times -t_i^2 and cols i+1..n times r_i^2, rows 1..i-1
    let mut suffix = DenseMatrix::zeros(n, m);
    for i in (2..n).rev() {
        accumulate_column(&mut suffix, a, x, i);
        let wt = ru[i - 2];
        if wt == 0.0 {
            continue;
        }
        let (rc, ts) = (tr.r[i - 2], tr.t[i - 2]);
        let (ft, fr) = (T::from_f64(-ts * ts), T::from_f64(rc * rc));
        let y = DenseMatrix::from_fn(n, m, |r, j| {
            if r + 1 < i {
                ft * a[(r, i - 1)] * x[(i - 1, j)] + fr * suffix[(r, j)]
            } else {
                T::zero()
            }
        });
        add_scaled_abs(&mut acc, &inv_times_rows(&s.a_inv, &y, 0, i - 1), wt);
    }
    Ok(s.finish(&acc))
}
