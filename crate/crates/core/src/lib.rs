//! Structured componentwise condition numbers for linear systems `A X = B`
//! whose coefficient matrix is {1;1}-quasiseparable.
//!
//! ```
//! use qscond::{condnum, experiments, Precision};
//!
//! let gv = experiments::gen_random_gv(8, 7).unwrap();
//! let rhs = condnum::Rhs::Sparse(experiments::gen_sparse_rhs(8, 3, 0.5, 7).unwrap());
//! let src = condnum::MatrixSource::Gv(gv);
//! let r = condnum::cond_report(&src, &rhs, Some(7), Precision::Extended).unwrap();
//! assert!(r.k_gv.unwrap() <= r.k_qs * (1.0 + 1e-12));
//! ```

pub mod condnum;
pub mod dense;
pub mod error;
pub mod experiments;
pub mod io;
pub mod oracle;
pub mod qsrep;
pub mod scalar;
pub mod sensitivity;
pub mod verify;

pub use dense::DenseMatrix;
pub use error::{Error, Result};
pub use qsrep::{GvTangentParams, QsParams};
pub use scalar::{Precision, Scalar};
