//! Coded task assignment and transmission design for distributed computation
//! of linearly separable functions over prime fields.
//!
//! A user wants `L` linear combinations (rows of a demand matrix `D`) of `K`
//! subfunction outputs. Each of `N` servers may compute at most `M` of them
//! and sends linear combinations of what it computed. A design is a
//! factorization `D = C · A` where every row of `A` is supported inside the
//! sending server's assignment; the number of rows of `A` is the rate.

pub mod bounds;
pub mod curves;
pub mod design;
pub mod error;
pub mod gf;
pub mod io;
pub mod matfq;
pub mod model;
pub mod par;
pub mod scheme1;
pub mod scheme2;
pub mod sim;
pub mod tradeoff;

pub use error::{Error, Result};
pub use gf::{FieldSpec, Fq};
pub use matfq::{MatrixFq, RrefResult};
pub use model::{
    CodingSolution, DemandMatrix, ProblemInstance, TaskAssignment, VerificationReport,
};
pub use par::Exec;
