//! Brute-force checks for the closed forms: vertex enumeration of the
//! linearized perturbation problem, and finite perturbation sampling.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use twofloat::TwoFloat;

use crate::condnum::{Rhs, SparseRhs};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::qsrep::{gv_materialize, qs_materialize, GvTangentParams, QsParams};
use crate::scalar::Scalar;
use crate::sensitivity::{gv_param_list, gv_partial, qs_param_list, qs_partial, ParamKind};

pub const ENUMERATION_BUDGET: usize = 22;

const RESYNC: u64 = 1 << 10;

/// Gauss-Jordan inverse with complete pivoting. Deliberately separate from
/// the LU used by the closed forms.
pub fn gj_inverse<T: Scalar>(a: &DenseMatrix<T>) -> Result<DenseMatrix<T>> {
    let n = a.rows();
    if !a.is_square() {
        return Err(Error::Dimension("inverse of a non-square matrix".into()));
    }
    let mut m = a.clone();
    let mut inv = DenseMatrix::<T>::identity(n);
    let mut colperm: Vec<usize> = (0..n).collect();
    let scale = a.max_norm();
    for k in 0..n {
        let (mut pr, mut pc, mut best) = (k, k, 0.0);
        for i in k..n {
            for j in k..n {
                let v = m[(i, j)].to_f64().abs();
                if v > best {
                    best = v;
                    pr = i;
                    pc = j;
                }
            }
        }
        if best.is_nan() || best <= 1e3 * T::epsilon() * scale {
            return Err(Error::Singular);
        }
        for j in 0..n {
            let t = m[(k, j)];
            m[(k, j)] = m[(pr, j)];
            m[(pr, j)] = t;
            let t = inv[(k, j)];
            inv[(k, j)] = inv[(pr, j)];
            inv[(pr, j)] = t;
        }
        for i in 0..n {
            let t = m[(i, k)];
            m[(i, k)] = m[(i, pc)];
            m[(i, pc)] = t;
        }
        colperm.swap(k, pc);
        let piv = m[(k, k)];
        for j in 0..n {
            m[(k, j)] = m[(k, j)].quot(piv);
            inv[(k, j)] = inv[(k, j)].quot(piv);
        }
        for i in 0..n {
            if i == k {
                continue;
            }
            let f = m[(i, k)];
            if f.is_zero() {
                continue;
            }
            for j in 0..n {
                m[(i, j)] = m[(i, j)] - f * m[(k, j)];
                inv[(i, j)] = inv[(i, j)] - f * inv[(k, j)];
            }
        }
    }
    // undo the column permutation: rows of the inverse follow it
    let mut out = DenseMatrix::zeros(n, n);
    for k in 0..n {
        for j in 0..n {
            out[(colperm[k], j)] = inv[(k, j)];
        }
    }
    Ok(out)
}

/// Unweighted derivative data for a parameterized system.
#[derive(Clone, Debug)]
pub struct LinearizedProblem {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    /// `dA/domega_k` for the matrix parameters (shared ones first).
    pub da: Vec<DenseMatrix>,
    /// `dB/domega_k` for the rhs parameters (shared ones first).
    pub db: Vec<DenseMatrix>,
    pub shared: usize,
    /// Weights of the `da.len()` matrix parameters.
    pub e: Vec<f64>,
    /// Weights of the `db.len() - shared` rhs-only parameters.
    pub f: Vec<f64>,
}

impl LinearizedProblem {
    pub fn param_count(&self) -> usize {
        self.da.len() + self.db.len() - self.shared
    }
}

#[derive(Clone, Debug)]
pub struct OracleResult {
    pub value: f64,
    /// Maximizing sign vector, matrix parameters first then rhs-only ones.
    pub signs: Vec<f64>,
    /// `max_ij sum_k |T_k(i, j)|`, which must equal `value`.
    pub abs_sum: f64,
}

/// Weighted first-order solution changes `T_k`, in f64.
fn perturbation_matrices(p: &LinearizedProblem) -> Result<(Vec<DenseMatrix>, f64)> {
    let (n, m) = (p.a.rows(), p.b.cols());
    if p.shared > p.da.len() || p.shared > p.db.len() || p.e.len() != p.da.len() || p.f.len() != p.db.len() - p.shared {
        return Err(Error::CountMismatch("oracle weights do not match derivative counts".into()));
    }
    let inv = gj_inverse(&p.a.convert::<TwoFloat>())?;
    let x = inv.matmul(&p.b.convert())?;
    let xmax = x.max_norm();
    if xmax == 0.0 {
        return Err(Error::ZeroSolution);
    }
    let mut ts = Vec::with_capacity(p.param_count());
    for (k, d) in p.da.iter().enumerate() {
        let mut t = inv.matmul(&d.convert::<TwoFloat>().matmul(&x)?)?.scale(TwoFloat::from(-1.0));
        if k < p.shared {
            t = t.add(&inv.matmul(&p.db[k].convert())?)?;
        }
        ts.push(t.scale(TwoFloat::from(p.e[k])).to_f64());
    }
    for k in p.shared..p.db.len() {
        ts.push(inv.matmul(&p.db[k].convert())?.scale(TwoFloat::from(p.f[k - p.shared])).to_f64());
    }
    debug_assert!(ts.iter().all(|t| t.rows() == n && t.cols() == m));
    Ok((ts, xmax))
}

/// Sup of `|| sum_k sigma_k T_k ||_max / ||X||_max` over all sign vectors,
/// by Gray-code enumeration (the first sign is fixed by symmetry).
pub fn linearized_sup_oracle(p: &LinearizedProblem) -> Result<OracleResult> {
    let count = p.param_count();
    if count > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded { count, budget: ENUMERATION_BUDGET });
    }
    let (ts, xmax) = perturbation_matrices(p)?;
    let (n, m) = (p.a.rows(), p.b.cols());
    if ts.is_empty() {
        return Ok(OracleResult { value: 0.0, signs: vec![], abs_sum: 0.0 });
    }
    let mut signs = vec![1.0; count];
    let mut sum = DenseMatrix::zeros(n, m);
    for t in &ts {
        sum.axpy(1.0, t)?;
    }
    let mut best = sum.max_norm();
    let mut best_signs = signs.clone();
    let free = count - 1;
    for g in 1u64..(1u64 << free) {
        // flip the bit that changes between gray(g-1) and gray(g)
        let k = 1 + g.trailing_zeros() as usize;
        signs[k] = -signs[k];
        if g % RESYNC == 0 {
            // rebuild from scratch so rounding in the running sum cannot drift
            sum = DenseMatrix::zeros(n, m);
            for (t, &sg) in ts.iter().zip(&signs) {
                sum.axpy(sg, t)?;
            }
        } else {
            sum.axpy(2.0 * signs[k], &ts[k])?;
        }
        let v = sum.max_norm();
        if v > best {
            best = v;
            best_signs.clone_from(&signs);
        }
    }
    let mut abs_sum = 0.0f64;
    for i in 0..n {
        for j in 0..m {
            abs_sum = abs_sum.max(ts.iter().map(|t| t[(i, j)].abs()).sum());
        }
    }
    Ok(OracleResult { value: best / xmax, signs: best_signs, abs_sum: abs_sum / xmax })
}

fn rhs_derivatives(rhs: &Rhs) -> (Vec<DenseMatrix>, Vec<f64>) {
    match rhs {
        Rhs::Dense(b) => {
            let sp = SparseRhs::trivial(b);
            ((0..sp.len()).map(|k| sp.pattern(k)).collect(), sp.omegas().iter().map(|x| x.abs()).collect())
        }
        Rhs::Sparse(sp) => ((0..sp.len()).map(|k| sp.pattern(k)).collect(), sp.omegas().iter().map(|x| x.abs()).collect()),
    }
}

/// Quasiseparable generators with natural weights, restricted to `kinds`.
/// The derivatives come from the product structure of each entry.
pub fn qs_problem(params: &QsParams, rhs: &Rhs, kinds: &[ParamKind]) -> LinearizedProblem {
    let list: Vec<_> = qs_param_list(params).into_iter().filter(|(k, _, _)| kinds.contains(k)).collect();
    let (db, f) = rhs_derivatives(rhs);
    LinearizedProblem {
        a: qs_materialize(params),
        b: rhs.materialize(),
        da: list.iter().map(|&(k, i, _)| qs_partial(params, k, i)).collect(),
        e: list.iter().map(|&(_, _, v)| v.abs()).collect(),
        db,
        shared: 0,
        f,
    }
}

pub fn gv_problem(params: &GvTangentParams, rhs: &Rhs) -> LinearizedProblem {
    let list = gv_param_list(params);
    let (db, f) = rhs_derivatives(rhs);
    LinearizedProblem {
        a: gv_materialize(params),
        b: rhs.materialize(),
        da: list.iter().map(|&(k, i, _)| gv_partial(params, k, i)).collect(),
        e: list.iter().map(|&(_, _, v)| v.abs()).collect(),
        db,
        shared: 0,
        f,
    }
}

/// Every entry of `A` as a parameter with weight `|a_ij|`.
pub fn unstructured_problem(a: &DenseMatrix, rhs: &Rhs) -> LinearizedProblem {
    let n = a.rows();
    let mut da = Vec::new();
    let mut e = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let mut d = DenseMatrix::zeros(n, n);
            d[(i, j)] = 1.0;
            da.push(d);
            e.push(a[(i, j)].abs());
        }
    }
    let (db, f) = rhs_derivatives(rhs);
    LinearizedProblem { a: a.clone(), b: rhs.materialize(), da, db, shared: 0, e, f }
}

/// A system whose matrix and right-hand side depend on a parameter vector.
pub trait ParamProblem: Sync {
    fn values(&self) -> Vec<f64>;
    fn build(&self, omega: &[f64]) -> (DenseMatrix, DenseMatrix);
}

/// Quasiseparable generators followed by the sparse rhs parameters.
pub struct QsSystem {
    pub params: QsParams,
    pub rhs: SparseRhs,
}

impl ParamProblem for QsSystem {
    fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = qs_param_list(&self.params).iter().map(|t| t.2).collect();
        v.extend(self.rhs.omegas());
        v
    }
    fn build(&self, omega: &[f64]) -> (DenseMatrix, DenseMatrix) {
        let mut p = self.params.clone();
        let list = qs_param_list(&p);
        for (z, &(k, i, _)) in list.iter().enumerate() {
            *crate::sensitivity::qs_param_mut(&mut p, k, i) = omega[z];
        }
        let mut r = self.rhs.clone();
        for (t, &w) in r.terms.iter_mut().zip(&omega[list.len()..]) {
            t.omega = w;
        }
        (qs_materialize(&p), r.materialize())
    }
}

/// Tangent generators followed by the sparse rhs parameters.
pub struct GvSystem {
    pub params: GvTangentParams,
    pub rhs: SparseRhs,
}

impl ParamProblem for GvSystem {
    fn values(&self) -> Vec<f64> {
        let mut v: Vec<f64> = gv_param_list(&self.params).iter().map(|t| t.2).collect();
        v.extend(self.rhs.omegas());
        v
    }
    fn build(&self, omega: &[f64]) -> (DenseMatrix, DenseMatrix) {
        let mut p = self.params.clone();
        let list = gv_param_list(&p);
        for (z, &(k, i, _)) in list.iter().enumerate() {
            *crate::sensitivity::gv_param_mut(&mut p, k, i) = omega[z];
        }
        let mut r = self.rhs.clone();
        for (t, &w) in r.terms.iter_mut().zip(&omega[list.len()..]) {
            t.omega = w;
        }
        (gv_materialize(&p), r.materialize())
    }
}

#[derive(Clone, Debug)]
pub struct SampleResult {
    pub value: f64,
    pub samples: usize,
    pub skipped: usize,
}

/// Largest observed `||X(omega + d) - X(omega)||_max / (eta ||X||_max)` over
/// random sign patterns `d_k = +-eta * weight_k`. `inject` is tried first.
pub fn sampled_ratio_lower_bound(
    problem: &dyn ParamProblem,
    weights: &[f64],
    eta: f64,
    trials: usize,
    seed: u64,
    inject: Option<&[f64]>,
) -> Result<SampleResult> {
    if !(eta > 0.0 && eta <= 1e-4) {
        return Err(Error::Config(format!("eta = {eta} outside (0, 1e-4]")));
    }
    if trials == 0 {
        return Err(Error::Config("no trials".into()));
    }
    let omega = problem.values();
    if weights.len() != omega.len() {
        return Err(Error::CountMismatch(format!("{} weights for {} parameters", weights.len(), omega.len())));
    }
    let solve = |om: &[f64]| -> Result<DenseMatrix<TwoFloat>> {
        let (a, b) = problem.build(om);
        gj_inverse(&a.convert::<TwoFloat>())?.matmul(&b.convert())
    };
    let x0 = solve(&omega)?;
    let xmax = x0.max_norm();
    if xmax == 0.0 {
        return Err(Error::ZeroSolution);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best = 0.0f64;
    let mut skipped = 0;
    for t in 0..trials {
        let signs: Vec<f64> = match (t, inject) {
            (0, Some(s)) => s.to_vec(),
            _ => (0..omega.len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect(),
        };
        let pert: Vec<f64> = omega.iter().zip(weights).zip(&signs).map(|((w, e), s)| w + s * eta * e).collect();
        match solve(&pert) {
            Ok(x) => best = best.max(x.sub(&x0)?.max_norm() / (eta * xmax)),
            Err(Error::Singular) => skipped += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(SampleResult { value: best, samples: trials - skipped, skipped })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gj_inverse_matches_identity() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 2.0, 1.0], vec![1.0, 0.0, 3.0], vec![4.0, -1.0, 0.5]]).unwrap();
        let inv = gj_inverse(&a).unwrap();
        assert!(a.matmul(&inv).unwrap().sub(&DenseMatrix::identity(3)).unwrap().max_norm() < 1e-14);
    }

    #[test]
    fn single_parameter_is_abs() {
        let a = DenseMatrix::from_rows(&[vec![2.0, 0.0], vec![0.0, 4.0]]).unwrap();
        let b = DenseMatrix::from_rows(&[vec![2.0], vec![-8.0]]).unwrap();
        let mut d = DenseMatrix::zeros(2, 2);
        d[(1, 1)] = 1.0;
        let p = LinearizedProblem { a, b, da: vec![d], db: vec![], shared: 0, e: vec![0.5], f: vec![] };
        let r = linearized_sup_oracle(&p).unwrap();
        // X = (1, -2); A^-1 dA X = (0, -0.5); times 0.5, over 2
        assert!((r.value - 0.125).abs() < 1e-15);
        assert_eq!(r.value, r.abs_sum);
    }

    #[test]
    fn budget_is_enforced() {
        let a = DenseMatrix::identity(5);
        let rhs = Rhs::Dense(DenseMatrix::from_fn(5, 1, |_, _| 1.0));
        let p = unstructured_problem(&a, &rhs);
        assert!(matches!(linearized_sup_oracle(&p), Err(Error::BudgetExceeded { count: 30, .. })));
    }

    #[test]
    fn zero_weights_give_zero_sample() {
        let params = QsParams::diagonal(vec![1.0, 2.0]).unwrap();
        let rhs = SparseRhs::from_nonzeros(&DenseMatrix::from_rows(&[vec![1.0], vec![1.0]]).unwrap());
        let sys = QsSystem { params, rhs };
        let w = vec![0.0; sys.values().len()];
        let r = sampled_ratio_lower_bound(&sys, &w, 1e-8, 5, 1, None).unwrap();
        assert_eq!(r.value, 0.0);
        assert!(sampled_ratio_lower_bound(&sys, &w, 1e-3, 5, 1, None).is_err());
    }
}
