//! Geometry-aware word meta-embeddings.
//!
//! Two embedding sources `X` and `Z` over a shared vocabulary are mapped into
//! a common latent space by orthogonal rotations `U`, `V` and a Mahalanobis
//! metric `B ≻ 0`, learned by minimizing
//! `‖XᵀUᵀBVZ − I‖²_F + c‖B‖²_F` with Riemannian conjugate gradient. Words are
//! then represented by averaging or concatenating `B^{1/2}Ux` and `B^{1/2}Vz`.
//!
//! ```no_run
//! use geometa::{embio, meta, objective, optimizer};
//!
//! let x = embio::load_embeddings("glove.txt", Some(100_000))?;
//! let z = embio::load_embeddings("fasttext.txt", Some(100_000))?;
//! let opts = embio::PreprocessOptions::default();
//! let pair = embio::intersect_vocab(&embio::preprocess(&x, opts).0, &embio::preprocess(&z, opts).0)?;
//! let cache = objective::build_gram_cache(&pair);
//! let (point, _trace) = optimizer::solve(&cache, &optimizer::SolverConfig::default(), None)?;
//! let map = meta::make_latent_map(&point)?;
//! let table = meta::build_meta(&pair, Some(&map), meta::MetaMode::GeoConc)?;
//! embio::save_embeddings(&table, "meta.txt", true)?;
//! # Ok::<(), geometa::Error>(())
//! ```

pub mod embio;
mod error;
pub mod eval;
pub mod manifold;
pub mod meta;
pub mod objective;
pub mod optimizer;
pub mod params;

pub use embio::{AlignedPair, EmbeddingTable, PreprocessOptions};
pub use error::{Error, Result};
pub use eval::{EvalReport, Task};
pub use manifold::{OrthogonalPoint, ProductPoint, SpdPoint, TangentVector};
pub use meta::{LatentMap, MetaMode};
pub use objective::{GramCache, RegWeight};
pub use optimizer::{SolveTrace, SolverConfig, Termination};
pub use params::ParamsFile;
