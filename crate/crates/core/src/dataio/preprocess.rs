//! Per-feature scaling fitted on training data only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PreprocessingKind {
    None,
    #[default]
    Standardize,
    MinMax,
}

impl std::str::FromStr for PreprocessingKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Self::None),
            "standardize" => Ok(Self::Standardize),
            "minmax" => Ok(Self::MinMax),
            other => Err(Error::Unknown {
                kind: "preprocessing",
                name: other.to_owned(),
            }),
        }
    }
}

/// Fitted affine map `x -> (x - offset) / scale`, per feature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub kind: PreprocessingKind,
    pub offset: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Preprocessing {
    pub fn identity(n_features: usize) -> Self {
        Self {
            kind: PreprocessingKind::None,
            offset: vec![0.0; n_features],
            scale: vec![1.0; n_features],
        }
    }

    pub fn fit(kind: PreprocessingKind, rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.first().map(Vec::len).ok_or_else(|| Error::Data("no rows to fit preprocessing on".into()))?;
        match kind {
            PreprocessingKind::None => Ok(Self::identity(m)),
            PreprocessingKind::Standardize => Ok(standardize_fit(rows)),
            PreprocessingKind::MinMax => Ok(minmax_fit(rows)),
        }
    }

    pub fn n_features(&self) -> usize {
        self.offset.len()
    }

    pub fn apply(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.offset.len() {
            return Err(Error::DimensionMismatch {
                expected: self.offset.len(),
                got: x.len(),
            });
        }
        Ok(x.iter()
            .zip(self.offset.iter().zip(&self.scale))
            .map(|(v, (o, s))| (v - o) / s)
            .collect())
    }

    pub fn apply_all(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.apply(r)).collect()
    }
}

/// Z-score statistics (population standard deviation). Constant features
/// keep scale 1.
pub fn standardize_fit(rows: &[Vec<f64>]) -> Preprocessing {
    let m = rows[0].len();
    let n = rows.len() as f64;
    let mean: Vec<f64> = (0..m).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n).collect();
    let scale = (0..m)
        .map(|j| {
            let var = rows.iter().map(|r| (r[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    Preprocessing {
        kind: PreprocessingKind::Standardize,
        offset: mean,
        scale,
    }
}

/// Maps each feature's training range onto `[0, 1]`. A zero-range feature
/// maps to 0.
pub fn minmax_fit(rows: &[Vec<f64>]) -> Preprocessing {
    let m = rows[0].len();
    let (offset, scale) = (0..m)
        .map(|j| {
            let lo = rows.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min);
            let hi = rows.iter().map(|r| r[j]).fold(f64::NEG_INFINITY, f64::max);
            let range = hi - lo;
            (lo, if range > 0.0 { range } else { 1.0 })
        })
        .unzip();
    Preprocessing {
        kind: PreprocessingKind::MinMax,
        offset,
        scale,
    }
}
