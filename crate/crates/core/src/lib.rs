//! Random orthonormal matrices from the matrix von Mises-Fisher and
//! Bingham–von Mises-Fisher families, `p(X) ∝ etr(CᵀX + B XᵀAX)` on the
//! Stiefel manifold, and a latent eigenmodel for binary networks built on them.
//!
//! - [`mf`]: exact vector and matrix von Mises-Fisher samplers and a Gibbs sampler.
//! - [`bmf`]: Gibbs samplers for the Bingham and Bingham–von Mises-Fisher families.
//! - [`eigenmodel`]: probit latent eigenmodel for symmetric networks.
//!
//! All samplers take an explicit RNG; [`rng::stream_rng`] gives independent
//! reproducible streams.

pub mod bmf;
pub mod eigenmodel;
pub mod error;
pub mod io;
pub mod linalg;
pub mod mf;
pub mod network;
pub mod rng;
pub mod special;
pub mod stats;
pub mod theta;
pub mod truncnorm;

pub use bmf::{BMFParams, BmfGibbs, Rotation2, SweepStats, VectorBmf};
pub use eigenmodel::{ChainOutput, EigenmodelConfig, EigenmodelState, Init};
pub use error::{Error, Result};
pub use linalg::{SpectralDecomp, StiefelMatrix, SvdDecomp, SymmetricMatrix};
pub use mf::{MFParams, VmfParams};
pub use network::{NetworkData, Unlisted};
pub use rng::{stream_rng, SimRng};
pub use special::BesselOrder;
pub use theta::{ThetaDensityParams, ThetaSampler};
