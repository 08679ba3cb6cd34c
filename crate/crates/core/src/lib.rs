//! Type calculus of higher-order quantum maps.
//!
//! * [`typelang`] parses and renders type expressions.
//! * [`signature`] computes each type's normalisation constant and the
//!   bit-string cells spanning its deterministic directions.
//! * [`combs`] holds comb-specific constructions and exact theorem checks.
//! * [`linops`] is the dense complex operator kernel (partial traces, Choi
//!   isomorphism, cell projectors).
//! * [`membership`] decides whether concrete Choi operators are
//!   deterministic events or events of a type.

pub mod combs;
pub mod error;
pub mod linops;
pub mod membership;
pub mod signature;
pub mod typelang;

pub use error::{Error, Result};
pub use linops::{Decomposition, DenseOp, C64};
pub use membership::MembershipReport;
pub use signature::{
    arrow_sig, bar_equivalent, bar_sig, cap_sig, delta_dim, signature_of, tensor_sig, types_equal,
    BitString, Lambda, Signature,
};
pub use typelang::{desugar, desugar_comb, parse, render, SystemLabel, TypeExpr};

/// Parses, desugars and computes the signature of `text`.
pub fn signature_of_text(text: &str) -> Result<Signature> {
    signature_of(&parse(text)?)
}
