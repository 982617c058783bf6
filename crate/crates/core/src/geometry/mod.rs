//! Parameterizations of the classical varieties, their tangent frames and
//! contracted Hessians, and closed-form rank statistics.
//!
//! Coordinate orders:
//! - products: Kronecker product of the factors, first factor outermost;
//!   inside a factor, monomials in `(1, t_1, ..., t_m)` by lexicographically
//!   decreasing exponent vector (`1, x, y, x^2, xy, y^2`);
//! - Grassmann: maximal minors of `[I | T]` over column subsets in
//!   lexicographic order;
//! - Gaussian moments: `m_0, ..., m_d`.

mod frames;
mod jet;
mod model;
mod spec;
mod stats;

use thiserror::Error;

pub use frames::{contracted_hessian, embed, sample_point, tangent_frame, ParamPoint, PointJets, TangentFrame};
pub use jet::{Jet, JetRing};
pub use model::{binomial, VarietyModel, MAX_AMBIENT_COORDS};
pub use spec::{Factor, VarietySpec};
pub use stats::{
    is_special, rank_stats, closed_form_bound, closed_form_candidates, sv12_r, BoundRecord, Hypothesis, RankStats,
};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GeometryError {
    #[error("invalid variety: {0}")]
    InvalidSpec(String),
    #[error("cannot parse variety: {0}")]
    Parse(String),
    #[error("arity mismatch: expected {expected} values, got {got}")]
    Arity { expected: usize, got: usize },
    #[error("functional is not tangent at the point (does not annihilate the frame)")]
    NotTangent,
    #[error("cone scale must be nonzero")]
    ZeroScale,
    #[error("variety {0} has too many ambient coordinates to materialize")]
    TooLarge(String),
    #[error("rank statistic of {0} does not fit in 64 bits")]
    Overflow(String),
}
