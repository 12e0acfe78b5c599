//! File formats: generator JSON, dense CSV/JSON, sparse rhs JSON, weights.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::condnum::{GvWeights, QsWeights, Rhs, RhsWeights, SparseRhs, SparseTerm};
use crate::dense::DenseMatrix;
use crate::error::{Error, Result};
use crate::qsrep::{GvTangentParams, QsParams};

#[derive(Clone, Debug, PartialEq)]
pub enum ParamsFile {
    Qs(QsParams),
    Gv(GvTangentParams),
}

fn parse_json(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Parse(format!("JSON syntax at line {}, column {}: {e}", e.line(), e.column())))
}

/// Generators in either representation; the schema decides which.
pub fn parse_params(text: &str) -> Result<ParamsFile> {
    let v = parse_json(text)?;
    let obj = v.as_object().ok_or_else(|| Error::Parse("parameter file must be a JSON object".into()))?;
    let is_gv = obj.contains_key("l") || obj.contains_key("u");
    let field_err = |e: serde_json::Error| Error::Parse(format!("parameter file: {e}"));
    if is_gv {
        let p: GvTangentParams = serde_json::from_value(v).map_err(field_err)?;
        p.validate()?;
        Ok(ParamsFile::Gv(p))
    } else {
        let p: QsParams = serde_json::from_value(v).map_err(field_err)?;
        p.validate()?;
        Ok(ParamsFile::Qs(p))
    }
}

pub fn params_to_json(p: &ParamsFile) -> String {
    match p {
        ParamsFile::Qs(q) => serde_json::to_string_pretty(q),
        ParamsFile::Gv(g) => serde_json::to_string_pretty(g),
    }
    .expect("serializable")
}

/// Dense matrix as CSV (one row per line) or as JSON nested arrays.
pub fn parse_dense(text: &str) -> Result<DenseMatrix> {
    let t = text.trim_start();
    if t.starts_with('[') {
        let rows: Vec<Vec<f64>> =
            serde_json::from_str(t).map_err(|e| Error::Parse(format!("matrix JSON at line {}, column {}: {e}", e.line(), e.column())))?;
        return DenseMatrix::from_rows(&rows);
    }
    let mut rows = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row = line
            .split(',')
            .enumerate()
            .map(|(f, s)| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}, field {}: `{}`: {e}", ln + 1, f + 1, s.trim())))
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::Parse("empty matrix".into()));
    }
    DenseMatrix::from_rows(&rows).map_err(|e| Error::Parse(format!("matrix rows: {e}")))
}

pub fn dense_to_csv(m: &DenseMatrix) -> String {
    let mut s = String::new();
    for i in 0..m.rows() {
        let row: Vec<String> = m.row(i).iter().map(|x| format!("{x}")).collect();
        s.push_str(&row.join(","));
        s.push('\n');
    }
    s
}

pub fn dense_to_json(m: &DenseMatrix) -> String {
    serde_json::to_string(&m.to_rows()).expect("serializable")
}

#[derive(Serialize, Deserialize)]
struct SparseFile {
    n: usize,
    m: usize,
    terms: Vec<SparseFileTerm>,
}

#[derive(Serialize, Deserialize)]
struct SparseFileTerm {
    /// 1-based `(row, col)` pairs
    entries: Vec<[usize; 2]>,
    omega: f64,
}

/// `{"n", "m", "terms": [{"entries": [[i, j], ...], "omega"}]}`, 1-based.
pub fn parse_sparse(text: &str) -> Result<SparseRhs> {
    let f: SparseFile = serde_json::from_value(parse_json(text)?).map_err(|e| Error::Parse(format!("sparse rhs: {e}")))?;
    let mut terms = Vec::with_capacity(f.terms.len());
    for (k, t) in f.terms.into_iter().enumerate() {
        let mut entries = Vec::with_capacity(t.entries.len());
        for [i, j] in t.entries {
            if i == 0 || j == 0 {
                return Err(Error::Parse(format!("sparse rhs: terms[{k}] uses 0 in a 1-based index")));
            }
            entries.push((i - 1, j - 1));
        }
        terms.push(SparseTerm { entries, omega: t.omega });
    }
    SparseRhs::new(f.n, f.m, terms)
}

pub fn sparse_to_json(s: &SparseRhs) -> String {
    let f = SparseFile {
        n: s.n,
        m: s.m,
        terms: s
            .terms
            .iter()
            .map(|t| SparseFileTerm { entries: t.entries.iter().map(|&(i, j)| [i + 1, j + 1]).collect(), omega: t.omega })
            .collect(),
    };
    serde_json::to_string_pretty(&f).expect("serializable")
}

/// Sparse JSON when the text is an object with `terms`, dense otherwise.
pub fn parse_rhs(text: &str) -> Result<Rhs> {
    let t = text.trim_start();
    if t.starts_with('{') {
        Ok(Rhs::Sparse(parse_sparse(t)?))
    } else {
        Ok(Rhs::Dense(parse_dense(t)?))
    }
}

pub enum WeightsFile {
    Qs(QsWeights, RhsWeights),
    Gv(GvWeights, RhsWeights),
}

fn nonneg(name: &str, v: &[f64]) -> Result<()> {
    if let Some(k) = v.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return Err(Error::BadWeights(format!("weights must be nonnegative: {name}[{k}] = {}", v[k])));
    }
    Ok(())
}

/// `{"params": {...same keys as the generators...}, "rhs": [..] | [[..]]}`.
pub fn parse_weights(text: &str) -> Result<WeightsFile> {
    let v = parse_json(text)?;
    let params = v.get("params").cloned().ok_or_else(|| Error::Parse("weights: missing field `params`".into()))?;
    let rhs = v.get("rhs").cloned().ok_or_else(|| Error::Parse("weights: missing field `rhs`".into()))?;
    let rhs = if rhs.get(0).is_some_and(|x| x.is_array()) {
        let rows: Vec<Vec<f64>> = serde_json::from_value(rhs).map_err(|e| Error::Parse(format!("weights.rhs: {e}")))?;
        rows.iter().try_for_each(|r| nonneg("rhs", r))?;
        RhsWeights::Dense(DenseMatrix::from_rows(&rows)?)
    } else {
        let f: Vec<f64> = serde_json::from_value(rhs).map_err(|e| Error::Parse(format!("weights.rhs: {e}")))?;
        nonneg("rhs", &f)?;
        RhsWeights::Sparse(f)
    };
    let is_gv = params.get("l").is_some() || params.get("u").is_some();
    if is_gv {
        let w: GvWeights = serde_json::from_value(params).map_err(|e| Error::Parse(format!("weights.params: {e}")))?;
        for (n, x) in [("l", &w.l), ("v", &w.v), ("d", &w.d), ("w", &w.w), ("u", &w.u)] {
            nonneg(n, x)?;
        }
        Ok(WeightsFile::Gv(w, rhs))
    } else {
        let w: QsWeights = serde_json::from_value(params).map_err(|e| Error::Parse(format!("weights.params: {e}")))?;
        for (n, x) in [("p", &w.p), ("a", &w.a), ("q", &w.q), ("d", &w.d), ("g", &w.g), ("b", &w.b), ("h", &w.h)] {
            nonneg(n, x)?;
        }
        Ok(WeightsFile::Qs(w, rhs))
    }
}
