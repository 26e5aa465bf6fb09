//! Meta-embeddings: plain averaging/concatenation and their counterparts in
//! the learned latent space, where word `i` of source x maps to `S·U·x_i`
//! and of source z to `S·V·z_i`, with `S = B^{1/2}`.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::embio::{AlignedPair, EmbeddingTable};
use crate::manifold::{sqrt_spd, ManifoldError, ProductPoint};

#[derive(Debug, Error)]
pub enum MetaError {
    #[error("mode {0} needs a latent map")]
    MissingMap(MetaMode),
    #[error("latent map has dimension {map}, embeddings have dimension {data}")]
    DimensionMismatch { map: usize, data: usize },
    #[error("unknown meta-embedding mode {0:?} (expected avg, conc, geo-avg or geo-conc)")]
    UnknownMode(String),
    #[error("meta-embedding produced non-finite values")]
    NonFinite,
    #[error(transparent)]
    Manifold(#[from] ManifoldError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MetaMode {
    Avg,
    Conc,
    GeoAvg,
    GeoConc,
}

impl MetaMode {
    pub const ALL: [MetaMode; 4] = [MetaMode::Avg, MetaMode::Conc, MetaMode::GeoAvg, MetaMode::GeoConc];

    pub fn as_str(self) -> &'static str {
        match self {
            MetaMode::Avg => "avg",
            MetaMode::Conc => "conc",
            MetaMode::GeoAvg => "geo-avg",
            MetaMode::GeoConc => "geo-conc",
        }
    }

    pub fn is_geometric(self) -> bool {
        matches!(self, MetaMode::GeoAvg | MetaMode::GeoConc)
    }

    pub fn output_dim(self, d: usize) -> usize {
        match self {
            MetaMode::Avg | MetaMode::GeoAvg => d,
            MetaMode::Conc | MetaMode::GeoConc => 2 * d,
        }
    }
}

impl fmt::Display for MetaMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MetaMode {
    type Err = MetaError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        MetaMode::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| MetaError::UnknownMode(s.to_string()))
    }
}

/// The composed per-source transforms `S·U` and `S·V`.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentMap {
    pub s: DMatrix<f64>,
    pub u_map: DMatrix<f64>,
    pub v_map: DMatrix<f64>,
}

impl LatentMap {
    pub fn dim(&self) -> usize {
        self.s.nrows()
    }

    fn x_transform(&self) -> DMatrix<f64> {
        &self.s * &self.u_map
    }

    fn z_transform(&self) -> DMatrix<f64> {
        &self.s * &self.v_map
    }
}

pub fn make_latent_map(p: &ProductPoint) -> Result<LatentMap, MetaError> {
    let s = sqrt_spd(&p.b)?;
    Ok(LatentMap {
        s: s.matrix().clone(),
        u_map: p.u.matrix().clone(),
        v_map: p.v.matrix().clone(),
    })
}

/// Builds the meta-embedding table for the pair's shared vocabulary.
pub fn build_meta(
    pair: &AlignedPair,
    map: Option<&LatentMap>,
    mode: MetaMode,
) -> Result<EmbeddingTable, MetaError> {
    let d = pair.dim();
    let n = pair.len();
    let (x, z) = if mode.is_geometric() {
        let map = map.ok_or(MetaError::MissingMap(mode))?;
        if map.dim() != d {
            return Err(MetaError::DimensionMismatch {
                map: map.dim(),
                data: d,
            });
        }
        (
            map.x_transform() * pair.x().vectors(),
            map.z_transform() * pair.z().vectors(),
        )
    } else {
        (pair.x().vectors().clone(), pair.z().vectors().clone())
    };

    let vectors = match mode {
        MetaMode::Avg | MetaMode::GeoAvg => (x + z) * 0.5,
        MetaMode::Conc | MetaMode::GeoConc => {
            let mut out = DMatrix::zeros(2 * d, n);
            out.rows_mut(0, d).copy_from(&x);
            out.rows_mut(d, d).copy_from(&z);
            out
        }
    };
    EmbeddingTable::new(pair.words().to_vec(), vectors).map_err(|_| MetaError::NonFinite)
}

/// Scales every nonzero vector to unit length.
pub fn renormalize(t: &EmbeddingTable) -> EmbeddingTable {
    crate::embio::preprocess(
        t,
        crate::embio::PreprocessOptions {
            unit_normalize: true,
            mean_center: false,
        },
    )
    .0
}
