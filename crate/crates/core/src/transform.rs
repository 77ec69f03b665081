//! Training-data transformation into the latent space.
//!
//! Each training point `x` of class `y(x)` is sent to
//!
//! ```text
//! f(x) = alpha * A(x) * p_{y(x)} + sum_{y != y(x)} beta * R(x, y) * (-p_y)
//! ```
//!
//! where the attraction `A(x)` is the reciprocal mean distance to the
//! `k_alpha` nearest own-class neighbors and the repulsion `R(x, y)` is the
//! mean distance to the `k_beta` nearest class-`y` neighbors. Distances come
//! from a pluggable [`Semimetric`].

use std::collections::HashMap;
use std::sync::{Arc, OnceLock, RwLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::SimplexGeometry;
use crate::par;

/// Symmetric, nonnegative pairwise distance with `d(x, x') = 0` iff `x = x'`.
/// The triangle inequality is not required.
pub trait Semimetric: Send + Sync {
    fn name(&self) -> &str;
    fn distance(&self, a: &[f64], b: &[f64]) -> f64;
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Euclidean;

impl Semimetric for Euclidean {
    fn name(&self) -> &str {
        "euclidean"
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct Taxicab;

impl Semimetric for Taxicab {
    fn name(&self) -> &str {
        "taxicab"
    }

    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
    }
}

type Registry = RwLock<HashMap<String, Arc<dyn Semimetric>>>;

fn registry() -> &'static Registry {
    static REGISTRY: OnceLock<Registry> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut m: HashMap<String, Arc<dyn Semimetric>> = HashMap::new();
        m.insert("euclidean".into(), Arc::new(Euclidean));
        m.insert("taxicab".into(), Arc::new(Taxicab));
        RwLock::new(m)
    })
}

/// Registers a user-supplied semimetric under its [`Semimetric::name`].
/// Built-in names cannot be overridden.
pub fn register_semimetric(metric: Arc<dyn Semimetric>) -> Result<()> {
    let name = metric.name().to_owned();
    if name == "euclidean" || name == "taxicab" {
        return Err(Error::InvalidConfig(format!(
            "semimetric name `{name}` is reserved"
        )));
    }
    registry().write().expect("semimetric registry poisoned").insert(name, metric);
    Ok(())
}

/// Resolves a semimetric by name. A `plugin:` prefix is accepted and ignored.
pub fn semimetric(name: &str) -> Result<Arc<dyn Semimetric>> {
    let key = name.strip_prefix("plugin:").unwrap_or(name);
    registry()
        .read()
        .expect("semimetric registry poisoned")
        .get(key)
        .cloned()
        .ok_or_else(|| Error::Unknown {
            kind: "semimetric",
            name: name.to_owned(),
        })
}

/// Feature vectors with zero-based class indices `0..n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    features: Vec<Vec<f64>>,
    labels: Vec<usize>,
    n_classes: usize,
}

impl LabeledDataset {
    /// Builds a dataset whose classes are `0..n_classes`, each nonempty.
    pub fn new(features: Vec<Vec<f64>>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if features.len() != labels.len() {
            return Err(Error::Data(format!(
                "{} feature rows but {} labels",
                features.len(),
                labels.len()
            )));
        }
        if let Some(first) = features.first() {
            let m = first.len();
            if let Some(bad) = features.iter().position(|r| r.len() != m) {
                return Err(Error::Data(format!(
                    "row {bad} has {} features, expected {m}",
                    features[bad].len()
                )));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::Data(format!(
                "class index {bad} out of range for {n_classes} classes"
            )));
        }
        let mut counts = vec![0usize; n_classes];
        for &l in &labels {
            counts[l] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::Data(format!("class {empty} has no members")));
        }
        Ok(Self {
            features,
            labels,
            n_classes,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn n_features(&self) -> usize {
        self.features.first().map_or(0, Vec::len)
    }

    pub fn features(&self) -> &[Vec<f64>] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Indices of the members of each class, in dataset order.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            members[l].push(i);
        }
        members
    }

    /// Rows at `indices`, keeping the class count. Fails if a class vanishes.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        Self::new(
            indices.iter().map(|&i| self.features[i].clone()).collect(),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.n_classes,
        )
    }

    pub fn with_features(&self, features: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(features, self.labels.clone(), self.n_classes)
    }
}

/// Parameters of the training-data transformation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransformConfig {
    pub alpha: f64,
    pub beta: f64,
    pub k_alpha: usize,
    pub k_beta: usize,
    /// Name of a registered semimetric.
    pub metric: String,
}

impl Default for TransformConfig {
    fn default() -> Self {
        Self {
            alpha: 0.0,
            beta: 1.0,
            k_alpha: 1,
            k_beta: 1,
            metric: "euclidean".into(),
        }
    }
}

impl TransformConfig {
    /// One-parameter family `beta = gamma`, `alpha = 1 - gamma`.
    pub fn from_gamma(gamma: f64, k_alpha: usize, k_beta: usize, metric: &str) -> Result<Self> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(Error::InvalidConfig(format!(
                "gamma must lie in [0, 1], got {gamma}"
            )));
        }
        let cfg = Self {
            alpha: 1.0 - gamma,
            beta: gamma,
            k_alpha,
            k_beta,
            metric: metric.to_owned(),
        };
        cfg.validate_weights()?;
        Ok(cfg)
    }

    fn validate_weights(&self) -> Result<()> {
        let finite = self.alpha.is_finite() && self.beta.is_finite();
        if !finite || self.alpha < 0.0 || self.beta < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "alpha and beta must be nonnegative, got alpha={} beta={}",
                self.alpha, self.beta
            )));
        }
        if self.alpha + self.beta <= 0.0 {
            return Err(Error::InvalidConfig(
                "alpha + beta must be positive".into(),
            ));
        }
        if self.k_alpha == 0 || self.k_beta == 0 {
            return Err(Error::InvalidConfig(
                "k_alpha and k_beta must be positive".into(),
            ));
        }
        Ok(())
    }

    /// Checks `alpha + beta > 0`, `k_alpha <= c - 1` and `k_beta <= c`, where
    /// `c` is the smallest class size.
    pub fn validate(&self, smallest_class: usize) -> Result<()> {
        self.validate_weights()?;
        if self.k_alpha + 1 > smallest_class {
            return Err(Error::InvalidConfig(format!(
                "constraint k_alpha <= c - 1 violated: k_alpha = {}, smallest class size c = {smallest_class}",
                self.k_alpha
            )));
        }
        if self.k_beta > smallest_class {
            return Err(Error::InvalidConfig(format!(
                "constraint k_beta <= c violated: k_beta = {}, smallest class size c = {smallest_class}",
                self.k_beta
            )));
        }
        Ok(())
    }
}

/// Dense pairwise distances, computed row-parallel.
#[derive(Debug, Clone)]
pub struct DistanceMatrix {
    n: usize,
    values: Vec<f64>,
}

impl DistanceMatrix {
    pub fn compute(points: &[Vec<f64>], metric: &dyn Semimetric) -> Self {
        let n = points.len();
        let rows = par::map_indexed(n, |i| {
            (0..n)
                .map(|j| if i == j { 0.0 } else { metric.distance(&points[i], &points[j]) })
                .collect::<Vec<f64>>()
        });
        Self {
            n,
            values: rows.into_iter().flatten().collect(),
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Multiplies every distance by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            n: self.n,
            values: self.values.iter().map(|v| v * factor).collect(),
        }
    }
}

/// Mean distance from `query` to its `k` nearest members of `pool`.
///
/// The query itself and every pool member at distance exactly zero from it
/// are not candidates.
pub fn mean_knn_distance(
    query: usize,
    pool: &[usize],
    k: usize,
    dists: &DistanceMatrix,
) -> Result<f64> {
    let mut candidates: Vec<f64> = pool
        .iter()
        .filter(|&&j| j != query)
        .map(|&j| dists.get(query, j))
        .filter(|&d| d != 0.0)
        .collect();
    if k == 0 || candidates.len() < k {
        return Err(Error::InsufficientPool {
            query,
            available: candidates.len(),
            k,
        });
    }
    candidates.sort_by(f64::total_cmp);
    Ok(candidates[..k].iter().sum::<f64>() / k as f64)
}

/// Image of the training set under the transformation, row-aligned with it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentDataset {
    pub points: Vec<Vec<f64>>,
}

/// Evaluates the transformation for one dataset and configuration.
pub struct Transformer<'a> {
    data: &'a LabeledDataset,
    cfg: &'a TransformConfig,
    dists: DistanceMatrix,
    members: Vec<Vec<usize>>,
}

impl<'a> Transformer<'a> {
    /// Validates `cfg` against the class sizes and computes all distances.
    pub fn new(data: &'a LabeledDataset, cfg: &'a TransformConfig) -> Result<Self> {
        let metric = semimetric(&cfg.metric)?;
        let dists = DistanceMatrix::compute(data.features(), metric.as_ref());
        Self::with_distances(data, cfg, dists)
    }

    /// Uses precomputed distances instead of the configured semimetric.
    pub fn with_distances(
        data: &'a LabeledDataset,
        cfg: &'a TransformConfig,
        dists: DistanceMatrix,
    ) -> Result<Self> {
        if dists.len() != data.len() {
            return Err(Error::DimensionMismatch {
                expected: data.len(),
                got: dists.len(),
            });
        }
        let smallest = data.class_counts().into_iter().min().unwrap_or(0);
        cfg.validate(smallest)?;
        Ok(Self {
            data,
            cfg,
            dists,
            members: data.class_members(),
        })
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dists
    }

    /// Reciprocal mean distance to the `k_alpha` nearest own-class neighbors.
    pub fn attraction(&self, query: usize) -> Result<f64> {
        let own = &self.members[self.data.labels()[query]];
        Ok(1.0 / mean_knn_distance(query, own, self.cfg.k_alpha, &self.dists)?)
    }

    /// Mean distance to the `k_beta` nearest members of `foreign`.
    pub fn repulsion(&self, query: usize, foreign: usize) -> Result<f64> {
        if foreign == self.data.labels()[query] {
            return Err(Error::Domain(format!(
                "class {foreign} is the own class of point {query}"
            )));
        }
        let pool = &self.members[foreign];
        if pool.iter().any(|&j| self.dists.get(query, j) == 0.0) {
            log::warn!(
                "point {query} coincides with a member of class {foreign}; coincident points are ignored"
            );
        }
        mean_knn_distance(query, pool, self.cfg.k_beta, &self.dists)
    }

    /// Latent image of training point `query`.
    pub fn transform_point(&self, query: usize, g: &SimplexGeometry) -> Result<Vec<f64>> {
        let own = self.data.labels()[query];
        let mut z = vec![0.0; g.dim()];
        if self.cfg.alpha > 0.0 {
            let a = self.cfg.alpha * self.attraction(query)?;
            axpy(&mut z, a, g.vertex(own));
        }
        if self.cfg.beta > 0.0 {
            for y in (0..g.n()).filter(|&y| y != own) {
                let r = self.cfg.beta * self.repulsion(query, y)?;
                axpy(&mut z, -r, g.vertex(y));
            }
        }
        Ok(z)
    }

    /// Coefficients of `f(x)` over the mirrored foreign vertices:
    /// `alpha * A(x) + beta * R(x, y)` for each `y != y(x)`.
    pub fn cone_weights(&self, query: usize) -> Result<Vec<f64>> {
        let own = self.data.labels()[query];
        let a = if self.cfg.alpha > 0.0 {
            self.cfg.alpha * self.attraction(query)?
        } else {
            0.0
        };
        (0..self.data.n_classes())
            .filter(|&y| y != own)
            .map(|y| {
                let r = if self.cfg.beta > 0.0 {
                    self.cfg.beta * self.repulsion(query, y)?
                } else {
                    0.0
                };
                Ok(a + r)
            })
            .collect()
    }

    /// Transforms every point, in parallel when enabled.
    pub fn transform_all(&self, g: &SimplexGeometry) -> Result<LatentDataset> {
        if g.n() != self.data.n_classes() {
            return Err(Error::DimensionMismatch {
                expected: self.data.n_classes(),
                got: g.n(),
            });
        }
        let points = par::try_map_indexed(self.data.len(), |i| {
            self.transform_point(i, g).map_err(|e| Error::AtPoint {
                index: i,
                source: Box::new(e),
            })
        })?;
        Ok(LatentDataset { points })
    }
}

/// Transforms a whole dataset.
pub fn transform_dataset(
    data: &LabeledDataset,
    cfg: &TransformConfig,
    g: &SimplexGeometry,
) -> Result<LatentDataset> {
    Transformer::new(data, cfg)?.transform_all(g)
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
