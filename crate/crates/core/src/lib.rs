//! Graph root distributions (GRDs) for exchangeable random graphs.
//!
//! A GRD is a distribution on a Kreĭn space `R^{p1} ⊕ R^{p2}` with the
//! indefinite inner product `<x, x'> - <y, y'>`; two independent draws connect
//! with probability equal to their inner product. This crate provides
//!
//! - Kreĭn-space vectors, discrete GRDs and their canonical form ([`krein`]);
//! - exact GRDs of block models and step graphons ([`models`]);
//! - dense and sparse graph sampling ([`sampling`]);
//! - the adjacency spectral estimator with dimension selection
//!   ([`spectral`]);
//! - Wasserstein, orthogonal Wasserstein and cut-norm computations
//!   ([`transport`]);
//! - the simulation and embedding pipeline behind the `grd` CLI
//!   ([`pipeline`]).

pub mod error;
pub mod krein;
pub mod linalg;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod sampling;
pub mod spectral;
pub mod transport;

pub use error::{GrdError, Result};
pub use krein::{canonicalize, gram_matrix, krein_inner, truncate_grd, truncate_prob, DiscreteGrd, KreinVector, OrthogonalPair};
pub use models::{grd_from_sbm, spectral_factorize, DcbmSpec, GrdSampler, MmbmSpec, SbmSpec, StepGraphon, Theta};
pub use sampling::{sample_adjacency, sample_from_graphon, sample_nodes, AdjacencyMatrix, SamplingConfig};
pub use spectral::{choose_dims, embed, signed_eigendecompose, Embedding, SignedSpectrum};
pub use transport::{orthogonal_wasserstein, wasserstein, wasserstein_distance, TransportPlan};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
