//! Exact-arithmetic cohomology and deformation engine for invariant-form
//! models of compact complex manifolds.
//!
//! Everything is computed over Q(i) (or truncated polynomial rings over it):
//! Dolbeault / Bott-Chern / Aeppli cohomology, del-delbar-lemma variants,
//! Kuranishi families of Beltrami differentials, d-closed extensions of
//! (p,q)-forms along a deformation, Hodge-number scans, and the p-Kahler
//! stability pipeline. No floating point anywhere; every asserted identity
//! is an exact statement in a finite ring.

pub mod calculus;
pub mod deform;
pub mod endo;
pub mod extend;
pub mod form;
pub mod hodge;
pub mod identities;
pub mod linalg;
pub mod model;
pub mod par;
pub mod rng;
pub mod scalar;
pub mod series;

pub use calculus::{Beltrami, DiffKind};
pub use form::{Form, Generator, Monomial};
pub use model::{catalog, load_model, parse_model, ComplexModel, ModelError};
pub use scalar::GaussRational;
pub use series::Series;
