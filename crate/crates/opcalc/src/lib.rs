//! Exact-arithmetic calculator for operadic algebra at bounded arity and
//! homological degree.
//!
//! The crate is organized bottom-up:
//!
//! * [`field`] — exact scalars (arbitrary-precision rationals and prime
//!   fields) with dense and sparse linear algebra: kernels, images, ranks,
//!   quotient bases.
//! * [`graded`] — graded vector spaces with ordered labeled bases, chain
//!   complexes with checked differentials, homology, shifts, tensor
//!   products, linear duals.
//! * [`symseq`] — symmetric sequences of chain complexes inside an explicit
//!   finite window, the arity-indexed composition product, truncations,
//!   operadic shifts, norm maps, free algebras.
//! * [`operad`] — operads and cooperads given by unit and partial
//!   compositions, axiom checking, built-in families, presentations by
//!   generators and relations via free operads on rooted trees.
//! * [`koszul`] — two-sided bar complexes on normalized surjection chains,
//!   relative composition homology, bar duality with the double-dual
//!   comparison, truncation towers with norm diagnostics.
//! * [`hopf`] — degree-truncated graded Hopf algebras: tensor algebras,
//!   primitives, enveloping algebras of graded Lie presentations, the
//!   primitive/indecomposable comparison, restricted-primitive tables in
//!   prime characteristic, the symmetric-algebra exponential law.
//!
//! Everything is deterministic: bases are ordered, maps are matrices over an
//! explicit field, and equal inputs produce byte-identical outputs.

pub mod field;
pub mod graded;
pub mod hopf;
pub mod koszul;
pub mod operad;
pub mod symseq;
