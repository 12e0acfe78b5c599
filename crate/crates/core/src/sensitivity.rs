//! Derivatives of the matrix entries with respect to the generators, and the
//! first-order solution change they induce.

use serde::ser::SerializeStruct;
use serde::{Deserialize, Serialize, Serializer};

use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::qsrep::{gv_materialize, gv_tangent_to_trig, gv_to_qs, qs_materialize, GvTangentParams, QsParams};
use crate::scalar::Scalar;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParamKind {
    D,
    P,
    A,
    Q,
    G,
    B,
    H,
    L,
    V,
    W,
    U,
}

impl ParamKind {
    pub fn name(self) -> &'static str {
        match self {
            ParamKind::D => "d",
            ParamKind::P => "p",
            ParamKind::A => "a",
            ParamKind::Q => "q",
            ParamKind::G => "g",
            ParamKind::B => "b",
            ParamKind::H => "h",
            ParamKind::L => "l",
            ParamKind::V => "v",
            ParamKind::W => "w",
            ParamKind::U => "u",
        }
    }

    /// First 1-based index of the family.
    pub fn first_index(self) -> usize {
        match self {
            ParamKind::D | ParamKind::Q | ParamKind::G | ParamKind::V | ParamKind::W => 1,
            _ => 2,
        }
    }

    /// The families whose derivative terms are stored unweighted.
    pub fn is_unweighted(self) -> bool {
        self == ParamKind::D
    }
}

/// Layouts of the concatenated parameter vectors.
pub const QS_ORDER: [ParamKind; 7] =
    [ParamKind::P, ParamKind::A, ParamKind::Q, ParamKind::D, ParamKind::G, ParamKind::B, ParamKind::H];
pub const GV_ORDER: [ParamKind; 5] = [ParamKind::L, ParamKind::V, ParamKind::D, ParamKind::W, ParamKind::U];

fn qs_slice(params: &QsParams, kind: ParamKind) -> &Vec<f64> {
    match kind {
        ParamKind::P => &params.p,
        ParamKind::A => &params.a,
        ParamKind::Q => &params.q,
        ParamKind::D => &params.d,
        ParamKind::G => &params.g,
        ParamKind::B => &params.b,
        ParamKind::H => &params.h,
        k => panic!("`{}` is not a quasiseparable generator", k.name()),
    }
}

fn qs_slice_mut(params: &mut QsParams, kind: ParamKind) -> &mut Vec<f64> {
    match kind {
        ParamKind::P => &mut params.p,
        ParamKind::A => &mut params.a,
        ParamKind::Q => &mut params.q,
        ParamKind::D => &mut params.d,
        ParamKind::G => &mut params.g,
        ParamKind::B => &mut params.b,
        ParamKind::H => &mut params.h,
        k => panic!("`{}` is not a quasiseparable generator", k.name()),
    }
}

fn gv_slice(params: &GvTangentParams, kind: ParamKind) -> &Vec<f64> {
    match kind {
        ParamKind::L => &params.l,
        ParamKind::V => &params.v,
        ParamKind::D => &params.d,
        ParamKind::W => &params.w,
        ParamKind::U => &params.u,
        k => panic!("`{}` is not a tangent generator", k.name()),
    }
}

fn gv_slice_mut(params: &mut GvTangentParams, kind: ParamKind) -> &mut Vec<f64> {
    match kind {
        ParamKind::L => &mut params.l,
        ParamKind::V => &mut params.v,
        ParamKind::D => &mut params.d,
        ParamKind::W => &mut params.w,
        ParamKind::U => &mut params.u,
        k => panic!("`{}` is not a tangent generator", k.name()),
    }
}

/// `(kind, 1-based index, value)` for every generator, in [`QS_ORDER`].
pub fn qs_param_list(params: &QsParams) -> Vec<(ParamKind, usize, f64)> {
    QS_ORDER
        .iter()
        .flat_map(|&k| qs_slice(params, k).iter().enumerate().map(move |(z, &v)| (k, z + k.first_index(), v)))
        .collect()
}

pub fn gv_param_list(params: &GvTangentParams) -> Vec<(ParamKind, usize, f64)> {
    GV_ORDER
        .iter()
        .flat_map(|&k| gv_slice(params, k).iter().enumerate().map(move |(z, &v)| (k, z + k.first_index(), v)))
        .collect()
}

pub fn qs_param(params: &QsParams, kind: ParamKind, index: usize) -> f64 {
    qs_slice(params, kind)[index - kind.first_index()]
}

pub fn gv_param(params: &GvTangentParams, kind: ParamKind, index: usize) -> f64 {
    gv_slice(params, kind)[index - kind.first_index()]
}

pub fn qs_param_mut(params: &mut QsParams, kind: ParamKind, index: usize) -> &mut f64 {
    &mut qs_slice_mut(params, kind)[index - kind.first_index()]
}

pub fn gv_param_mut(params: &mut GvTangentParams, kind: ParamKind, index: usize) -> &mut f64 {
    &mut gv_slice_mut(params, kind)[index - kind.first_index()]
}

/// One derivative term. For `d` the matrix is `dA/dd_i`; for every other
/// family it is `omega * dA/domega`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeTerm {
    pub kind: ParamKind,
    pub index: usize,
    pub matrix: DenseMatrix,
}

impl DerivativeTerm {
    /// Bounding box `(r0, r1, c0, c1)` of the nonzeros, half-open, 0-based.
    pub fn support(&self) -> Option<(usize, usize, usize, usize)> {
        let m = &self.matrix;
        let mut bb: Option<(usize, usize, usize, usize)> = None;
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                if m[(i, j)] != 0.0 {
                    bb = Some(match bb {
                        None => (i, i + 1, j, j + 1),
                        Some((a, b, c, d)) => (a.min(i), b.max(i + 1), c.min(j), d.max(j + 1)),
                    });
                }
            }
        }
        bb
    }
}

impl Serialize for DerivativeTerm {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        let (r0, r1, c0, c1) = self.support().unwrap_or((0, 0, 0, 0));
        let block: Vec<Vec<f64>> = (r0..r1).map(|i| (c0..c1).map(|j| self.matrix[(i, j)]).collect()).collect();
        let mut st = ser.serialize_struct("DerivativeTerm", 5)?;
        st.serialize_field("kind", &self.kind)?;
        st.serialize_field("index", &self.index)?;
        st.serialize_field("row_offset", &r0)?;
        st.serialize_field("col_offset", &c0)?;
        st.serialize_field("block", &block)?;
        st.end()
    }
}

fn unit(n: usize, i: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(n, n);
    m[(i, i)] = 1.0;
    m
}

/// All `7n - 8` terms in [`QS_ORDER`], read off the materialized matrix.
pub fn qs_weighted_derivatives(params: &QsParams) -> Vec<DerivativeTerm> {
    let n = params.n;
    let a = qs_materialize(params);
    let mut out = Vec::with_capacity(params.param_count());
    let mut push = |kind, index, matrix| out.push(DerivativeTerm { kind, index, matrix });
    // 0-based block bounds below; paper-style 1-based index `i`
    for i in 2..=n {
        push(ParamKind::P, i, a.masked_block(i - 1, i, 0, i - 1));
    }
    for i in 2..n {
        push(ParamKind::A, i, a.masked_block(i, n, 0, i - 1));
    }
    for i in 1..n {
        push(ParamKind::Q, i, a.masked_block(i, n, i - 1, i));
    }
    for i in 1..=n {
        push(ParamKind::D, i, unit(n, i - 1));
    }
    for i in 1..n {
        push(ParamKind::G, i, a.masked_block(i - 1, i, i, n));
    }
    for i in 2..n {
        push(ParamKind::B, i, a.masked_block(0, i - 1, i, n));
    }
    for i in 2..=n {
        push(ParamKind::H, i, a.masked_block(0, i - 1, i - 1, i));
    }
    out
}

/// All `5n - 6` terms in [`GV_ORDER`].
pub fn gv_weighted_derivatives(params: &GvTangentParams) -> Vec<DerivativeTerm> {
    let n = params.n;
    let a = gv_materialize(params);
    let tr = gv_tangent_to_trig(params);
    let mut out = Vec::with_capacity(params.param_count());
    for i in 2..n {
        out.push(DerivativeTerm { kind: ParamKind::L, index: i, matrix: gv_l_term(&a, tr.c[i - 2], tr.s[i - 2], i) });
    }
    for i in 1..n {
        out.push(DerivativeTerm { kind: ParamKind::V, index: i, matrix: a.masked_block(i, n, i - 1, i) });
    }
    for i in 1..=n {
        out.push(DerivativeTerm { kind: ParamKind::D, index: i, matrix: unit(n, i - 1) });
    }
    for i in 1..n {
        out.push(DerivativeTerm { kind: ParamKind::W, index: i, matrix: a.masked_block(i - 1, i, i, n) });
    }
    for i in 2..n {
        out.push(DerivativeTerm { kind: ParamKind::U, index: i, matrix: gv_u_term(&a, tr.r[i - 2], tr.t[i - 2], i) });
    }
    out
}

/// `l_i dA/dl_i`: row `i` left of the diagonal times `-s_i^2`, the block
/// below it times `c_i^2`.
pub fn gv_l_term<T: Scalar>(a: &DenseMatrix<T>, c: f64, s: f64, i: usize) -> DenseMatrix<T> {
    let n = a.rows();
    let (ws, wc) = (T::from_f64(-s * s), T::from_f64(c * c));
    DenseMatrix::from_fn(n, n, |r, col| {
        if col + 1 >= i {
            T::zero()
        } else if r + 1 == i {
            ws * a[(r, col)]
        } else if r + 1 > i {
            wc * a[(r, col)]
        } else {
            T::zero()
        }
    })
}

/// `u_i dA/du_i`: column `i` above the diagonal times `-t_i^2`, the block to
/// its right times `r_i^2`.
pub fn gv_u_term<T: Scalar>(a: &DenseMatrix<T>, r: f64, t: f64, i: usize) -> DenseMatrix<T> {
    let n = a.rows();
    let (wt, wr) = (T::from_f64(-t * t), T::from_f64(r * r));
    DenseMatrix::from_fn(n, n, |row, col| {
        if row + 1 >= i {
            T::zero()
        } else if col + 1 == i {
            wt * a[(row, col)]
        } else if col + 1 > i {
            wr * a[(row, col)]
        } else {
            T::zero()
        }
    })
}

/// Alternative reading of the `u_i` term in which the `-t_i^2` factor applies
/// to the trailing block `A(1:i-1, i+1:n)` instead of column `i`. Kept only so
/// the finite-difference tests can rule it out.
pub fn gv_u_term_trailing_variant(a: &DenseMatrix, r: f64, t: f64, i: usize) -> DenseMatrix {
    let n = a.rows();
    a.masked_block(0, i - 1, i, n).scale(r * r - t * t)
}

/// Position of the generator inside one entry's product, if it occurs.
fn qs_entry_uses(kind: ParamKind, k: usize, i: usize, j: usize) -> bool {
    use ParamKind::*;
    match kind {
        D => i == j && k == i,
        P => i > j && k == i,
        A => i > j && k > j && k < i,
        Q => i > j && k == j,
        G => i < j && k == i,
        B => i < j && k > i && k < j,
        H => i < j && k == j,
        _ => false,
    }
}

/// Unweighted `dA/domega` for the quasiseparable generator `(kind, index)`.
/// Every entry is a monomial in which each generator occurs at most once, so
/// the partial is that monomial with the generator removed.
pub fn qs_partial(params: &QsParams, kind: ParamKind, index: usize) -> DenseMatrix {
    let n = params.n;
    let mut reduced = params.clone();
    *qs_param_mut(&mut reduced, kind, index) = 1.0;
    DenseMatrix::from_fn(n, n, |i0, j0| {
        let (i, j) = (i0 + 1, j0 + 1);
        if qs_entry_uses(kind, index, i, j) {
            reduced.entry(i, j)
        } else {
            0.0
        }
    })
}

/// Unweighted `dA/domega` for a tangent generator, by the chain rule through
/// the quasiseparable form `p_i = c_i, a_i = s_i, b_i = t_i, h_i = r_i`.
pub fn gv_partial(params: &GvTangentParams, kind: ParamKind, index: usize) -> DenseMatrix {
    let qs = gv_to_qs(params);
    match kind {
        ParamKind::L | ParamKind::U => {
            let x = gv_slice(params, kind)[index - 2];
            let c = 1.0 / 1.0f64.hypot(x);
            let c3 = c * c * c;
            let (cos_kind, sin_kind) =
                if kind == ParamKind::L { (ParamKind::P, ParamKind::A) } else { (ParamKind::H, ParamKind::B) };
            let mut m = qs_partial(&qs, cos_kind, index).scale(-x * c3);
            m.axpy(c3, &qs_partial(&qs, sin_kind, index)).expect("same shape");
            m
        }
        ParamKind::V => qs_partial(&qs, ParamKind::Q, index),
        ParamKind::W => qs_partial(&qs, ParamKind::G, index),
        ParamKind::D => qs_partial(&qs, ParamKind::D, index),
        k => panic!("`{}` is not a tangent generator", k.name()),
    }
}

/// `-A^{-1} dA X + A^{-1} dB`.
pub fn solution_directional_derivative<T: Scalar>(
    a_inv: &DenseMatrix<T>,
    x: &DenseMatrix<T>,
    da: &DenseMatrix<T>,
    db: &DenseMatrix<T>,
) -> Result<DenseMatrix<T>> {
    if da.rows() != a_inv.cols() || da.cols() != x.rows() || db.rows() != a_inv.cols() || db.cols() != x.cols() {
        return Err(Error::Dimension("solution derivative operands are not conformable".into()));
    }
    let lhs = a_inv.matmul(&da.matmul(x)?)?;
    a_inv.matmul(db)?.sub(&lhs)
}

pub fn fd_step(value: f64) -> f64 {
    1e-6 * value.abs().max(1.0)
}

/// Central difference of the quasiseparable materialization in one generator.
pub fn qs_finite_difference(params: &QsParams, kind: ParamKind, index: usize) -> DenseMatrix {
    let v = qs_param(params, kind, index);
    let h = fd_step(v);
    let mut plus = params.clone();
    *qs_param_mut(&mut plus, kind, index) = v + h;
    let mut minus = params.clone();
    *qs_param_mut(&mut minus, kind, index) = v - h;
    qs_materialize(&plus).sub(&qs_materialize(&minus)).expect("same shape").scale(0.5 / h)
}

pub fn gv_finite_difference(params: &GvTangentParams, kind: ParamKind, index: usize) -> DenseMatrix {
    let v = gv_param(params, kind, index);
    let h = fd_step(v);
    let mut plus = params.clone();
    *gv_param_mut(&mut plus, kind, index) = v + h;
    let mut minus = params.clone();
    *gv_param_mut(&mut minus, kind, index) = v - h;
    gv_materialize(&plus).sub(&gv_materialize(&minus)).expect("same shape").scale(0.5 / h)
}

/// Divide a weighted term back to `dA/domega`.
pub fn unweight(term: &DerivativeTerm, value: f64) -> DenseMatrix {
    if term.kind.is_unweighted() {
        term.matrix.clone()
    } else {
        term.matrix.scale(1.0 / value)
    }
}

/// `max |X - Y| / max(||Y||_max, floor)`.
pub fn max_relative_error(x: &DenseMatrix, y: &DenseMatrix, floor: f64) -> f64 {
    x.sub(y).expect("same shape").max_norm() / y.max_norm().max(floor)
}
