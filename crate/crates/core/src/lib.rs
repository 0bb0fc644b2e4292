//! Observer-based stabilization of homogeneous networks of identical LTI
//! agents through generalized frequency variables.
//!
//! A network of `N` copies of an agent `(A_h, B_h, C_h)` wired by a
//! structure `(A, B, C)` is stable exactly when every eigenvalue of `A` lies
//! in the agent's stability region `Λ_s = {λ : A_h + λ B_h C_h Hurwitz}`.
//! Distributive gains `K ⊗ C_h` and `L ⊗ B_h` reduce controller and observer
//! design to placing the spectra of `A - BK` and `A - LC` inside that region.

pub mod agents;
pub mod analysis;
pub mod design;
pub mod error;
pub mod export;
pub mod matrixkit;
pub mod network;
pub mod model_file;
pub mod region;
pub mod sim;

mod serde_complex;

pub use error::{Error, Result};
