//! The calibrated simplex-mapping classifier.
//!
//! Fitting runs in two steps: the training set is mapped into the latent
//! space, then a regression backend is fitted on `(x_i, f(x_i))`. A new point
//! is labeled by the segment of its predicted latent mean. Its class
//! probabilities are the predictive density's mass on each segment: in closed
//! form for two classes, by seeded Monte Carlo otherwise.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use libm::erfc;

use crate::dataio::{LabelMap, Preprocessing, PreprocessingKind};
use crate::error::{Error, Result};
use crate::geometry::SimplexGeometry;
use crate::par;
use crate::regression::{FittedRegressor, PredictiveDensity, RegressionBackend};
use crate::rng::{substream, Purpose};
use crate::transform::{LabeledDataset, TransformConfig, Transformer};

pub const DEFAULT_MC_SAMPLES: usize = 10_000;
pub const MIN_MC_SAMPLES: usize = 100;

/// Monte-Carlo settings for class probabilities with more than two classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct McConfig {
    pub sample_count: usize,
    pub seed: u64,
}

impl McConfig {
    pub fn new(sample_count: usize, seed: u64) -> Result<Self> {
        if sample_count < MIN_MC_SAMPLES {
            return Err(Error::InvalidConfig(format!(
                "at least {MIN_MC_SAMPLES} Monte-Carlo samples are required, got {sample_count}"
            )));
        }
        Ok(Self { sample_count, seed })
    }

    pub fn with_seed(seed: u64) -> Self {
        Self {
            sample_count: DEFAULT_MC_SAMPLES,
            seed,
        }
    }
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Class probabilities implied by a diagonal normal latent density.
///
/// For two classes the first segment is the half-line `[0, inf)` and its
/// probability is `Phi(mu / sigma)`. Otherwise `mc.sample_count` draws from
/// the stream `(mc.seed, point)` are labeled by nearest vertex and counted.
pub fn class_probabilities(
    geometry: &SimplexGeometry,
    density: &PredictiveDensity,
    mc: &McConfig,
    point: u64,
) -> Result<Vec<f64>> {
    let dim = geometry.dim();
    if density.mean.len() != dim || density.std.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: density.mean.len(),
        });
    }
    if geometry.n() == 2 {
        let p = normal_cdf(density.mean[0] / density.std[0]);
        return Ok(vec![p, 1.0 - p]);
    }
    if mc.sample_count < MIN_MC_SAMPLES {
        return Err(Error::InvalidConfig(format!(
            "at least {MIN_MC_SAMPLES} Monte-Carlo samples are required, got {}",
            mc.sample_count
        )));
    }
    let mut rng = substream(mc.seed, Purpose::MonteCarlo, point);
    let mut counts = vec![0u64; geometry.n()];
    let mut z = vec![0.0; dim];
    for _ in 0..mc.sample_count {
        for ((zi, m), s) in z.iter_mut().zip(&density.mean).zip(&density.std) {
            let e: f64 = StandardNormal.sample(&mut rng);
            *zi = m + s * e;
        }
        counts[geometry.nearest_vertex(&z)] += 1;
    }
    let total = mc.sample_count as f64;
    Ok(counts.into_iter().map(|c| c as f64 / total).collect())
}

/// Options for [`CasimacModel::fit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitOptions {
    pub transform: TransformConfig,
    pub preprocessing: PreprocessingKind,
}

impl Default for FitOptions {
    fn default() -> Self {
        Self {
            transform: TransformConfig::default(),
            preprocessing: PreprocessingKind::Standardize,
        }
    }
}

/// A trained classifier.
#[derive(Debug, Clone)]
pub struct CasimacModel {
    pub(crate) geometry: SimplexGeometry,
    pub(crate) transform: TransformConfig,
    pub(crate) labels: LabelMap,
    pub(crate) preprocessing: Preprocessing,
    pub(crate) regressor: Arc<dyn FittedRegressor>,
    pub(crate) backend: String,
    pub(crate) seed: u64,
    /// Preprocessed training inputs.
    pub(crate) train_inputs: Vec<Vec<f64>>,
    /// Latent images `f(x_i)` of the training points.
    pub(crate) train_latent: Vec<Vec<f64>>,
    pub(crate) train_labels: Vec<usize>,
}

impl CasimacModel {
    /// Fits on features with original labels; label indices follow first
    /// appearance.
    pub fn fit_labeled<S: AsRef<str>>(
        features: Vec<Vec<f64>>,
        labels: &[S],
        options: &FitOptions,
        backend: &dyn RegressionBackend,
        seed: u64,
    ) -> Result<Self> {
        let (map, idx) = LabelMap::from_labels(labels);
        let data = LabeledDataset::new(features, idx, map.len())?;
        Self::fit(&data, map, options, backend, seed)
    }

    /// Fits preprocessing, transforms the training set and fits the backend.
    pub fn fit(
        data: &LabeledDataset,
        labels: LabelMap,
        options: &FitOptions,
        backend: &dyn RegressionBackend,
        seed: u64,
    ) -> Result<Self> {
        if labels.len() != data.n_classes() {
            return Err(Error::Data(format!(
                "label map has {} labels but the dataset has {} classes",
                labels.len(),
                data.n_classes()
            )));
        }
        if data.n_classes() < 2 {
            return Err(Error::Data("classification needs at least two classes".into()));
        }
        let preprocessing =
            Preprocessing::fit(options.preprocessing, data.features()).map_err(|e| e.at_stage("preprocessing"))?;
        let inputs = preprocessing.apply_all(data.features()).map_err(|e| e.at_stage("preprocessing"))?;
        let prepared = data.with_features(inputs)?;
        let geometry = SimplexGeometry::new(data.n_classes())?;
        let latent = Transformer::new(&prepared, &options.transform)
            .and_then(|t| t.transform_all(&geometry))
            .map_err(|e| e.at_stage("transform"))?;
        let regressor = backend
            .fit(prepared.features(), &latent.points, seed)
            .map_err(|e| e.at_stage("regression"))?;
        Ok(Self {
            geometry,
            transform: options.transform.clone(),
            labels,
            preprocessing,
            regressor,
            backend: backend.name().to_owned(),
            seed,
            train_inputs: prepared.features().to_vec(),
            train_latent: latent.points,
            train_labels: data.labels().to_vec(),
        })
    }

    pub fn n_classes(&self) -> usize {
        self.geometry.n()
    }

    pub fn n_features(&self) -> usize {
        self.preprocessing.n_features()
    }

    pub fn geometry(&self) -> &SimplexGeometry {
        &self.geometry
    }

    pub fn label_map(&self) -> &LabelMap {
        &self.labels
    }

    pub fn transform_config(&self) -> &TransformConfig {
        &self.transform
    }

    pub fn preprocessing(&self) -> &Preprocessing {
        &self.preprocessing
    }

    pub fn regressor(&self) -> &Arc<dyn FittedRegressor> {
        &self.regressor
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn train_latent(&self) -> &[Vec<f64>] {
        &self.train_latent
    }

    pub fn train_labels(&self) -> &[usize] {
        &self.train_labels
    }

    /// Predicted latent means of the training points.
    pub fn training_latent_means(&self) -> Result<Vec<Vec<f64>>> {
        par::map_slice(&self.train_inputs, |x| self.regressor.predict_mean(x)).into_iter().collect()
    }

    fn prepare(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.preprocessing.apply(x)
    }

    /// Predicted latent mean.
    pub fn predict_latent_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.regressor.predict_mean(&self.prepare(x)?)
    }

    /// Predictive density over the latent space.
    pub fn predict_latent(&self, x: &[f64]) -> Result<PredictiveDensity> {
        self.regressor.predict_density(&self.prepare(x)?)
    }

    /// Predicted class index.
    pub fn predict_index(&self, x: &[f64]) -> Result<usize> {
        Ok(self.geometry.nearest_vertex(&self.predict_latent_mean(x)?))
    }

    /// Predicted original label.
    pub fn predict(&self, x: &[f64]) -> Result<&str> {
        Ok(self.labels.label(self.predict_index(x)?))
    }

    /// Class probabilities of `x`, indexed like the label map. `point` keys
    /// the Monte-Carlo stream.
    pub fn predict_proba(&self, x: &[f64], mc: &McConfig, point: u64) -> Result<Vec<f64>> {
        let density = self.predict_latent(x)?;
        class_probabilities(&self.geometry, &density, mc, point)
    }

    /// Predicted class indices for many points.
    pub fn predict_batch(&self, xs: &[Vec<f64>]) -> Result<Vec<usize>> {
        par::map_slice(xs, |x| self.predict_index(x)).into_iter().collect()
    }

    /// Class probabilities for many points; row `i` uses stream `i`.
    pub fn predict_proba_batch(&self, xs: &[Vec<f64>], mc: &McConfig) -> Result<Vec<Vec<f64>>> {
        par::try_map_indexed(xs.len(), |i| self.predict_proba(&xs[i], mc, i as u64))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regression::{GprBackend, GprConfig};
    use approx::assert_abs_diff_eq;

    fn density(mean: &[f64], std: &[f64]) -> PredictiveDensity {
        PredictiveDensity {
            mean: mean.to_vec(),
            std: std.to_vec(),
        }
    }

    /// Phi(x) by Simpson quadrature of the standard normal density.
    fn phi_quadrature(x: f64) -> f64 {
        let n = 20_000;
        let h = x / n as f64;
        let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let s: f64 = (0..=n)
            .map(|i| {
                let w = if i == 0 || i == n { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                w * pdf(i as f64 * h)
            })
            .sum();
        0.5 + s * h / 3.0
    }

    #[test]
    fn normal_cdf_matches_quadrature() {
        for x in [-2.5, -1.0, 0.0, 0.3, 1.0, 3.0] {
            assert_abs_diff_eq!(normal_cdf(x), phi_quadrature(x), epsilon = 1e-12);
        }
        assert_abs_diff_eq!(normal_cdf(1.0), 0.841345, epsilon = 1e-6);
    }

    #[test]
    fn binary_symmetric_density() {
        let g = SimplexGeometry::new(2).unwrap();
        let p = class_probabilities(&g, &density(&[0.0], &[0.7]), &McConfig::with_seed(0), 0).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        let p = class_probabilities(&g, &density(&[1.0], &[1.0]), &McConfig::with_seed(0), 0).unwrap();
        assert_abs_diff_eq!(p[0], phi_quadrature(1.0), epsilon = 1e-12);
    }

    #[test]
    fn binary_ignores_sample_count() {
        let g = SimplexGeometry::new(2).unwrap();
        let d = density(&[0.4], &[0.9]);
        let a = class_probabilities(&g, &d, &McConfig { sample_count: 5, seed: 1 }, 0).unwrap();
        let b = class_probabilities(&g, &d, &McConfig { sample_count: 50_000, seed: 9 }, 3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn ternary_centered_density_is_uniform() {
        let g = SimplexGeometry::new(3).unwrap();
        let s = 40_000;
        let p = class_probabilities(&g, &density(&[0.0, 0.0], &[0.8, 0.8]), &McConfig { sample_count: s, seed: 3 }, 0)
            .unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() <= 4.0 / (s as f64).sqrt(), "{p:?}");
        }
        assert_abs_diff_eq!(p.iter().sum::<f64>(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn mc_is_deterministic_per_stream() {
        let g = SimplexGeometry::new(4).unwrap();
        let d = density(&[0.2, -0.1, 0.4], &[0.5, 0.3, 0.6]);
        let mc = McConfig { sample_count: 1000, seed: 42 };
        let a = class_probabilities(&g, &d, &mc, 7).unwrap();
        assert_eq!(a, class_probabilities(&g, &d, &mc, 7).unwrap());
        assert_ne!(a, class_probabilities(&g, &d, &mc, 8).unwrap());
    }

    #[test]
    fn mc_config_floor() {
        assert!(McConfig::new(99, 0).is_err());
        assert!(McConfig::new(100, 0).is_ok());
        let g = SimplexGeometry::new(3).unwrap();
        let d = density(&[0.0, 0.0], &[1.0, 1.0]);
        assert!(class_probabilities(&g, &d, &McConfig { sample_count: 10, seed: 0 }, 0).is_err());
    }

    #[derive(Debug)]
    struct Constant(Vec<f64>);
    impl FittedRegressor for Constant {
        fn input_dim(&self) -> usize {
            1
        }
        fn output_dim(&self) -> usize {
            self.0.len()
        }
        fn predict_mean(&self, _: &[f64]) -> Result<Vec<f64>> {
            Ok(self.0.clone())
        }
        fn predict_density(&self, _: &[f64]) -> Result<PredictiveDensity> {
            Ok(density(&self.0, &vec![0.25; self.0.len()]))
        }
    }
    struct ConstantBackend(Vec<f64>);
    impl RegressionBackend for ConstantBackend {
        fn name(&self) -> &str {
            "constant"
        }
        fn fit(&self, _: &[Vec<f64>], _: &[Vec<f64>], _: u64) -> Result<Arc<dyn FittedRegressor>> {
            Ok(Arc::new(Constant(self.0.clone())))
        }
    }

    fn toy() -> (Vec<Vec<f64>>, Vec<&'static str>) {
        let x = vec![vec![0.0], vec![0.1], vec![1.0], vec![1.1], vec![2.0], vec![2.2]];
        let y = vec!["c", "c", "a", "a", "b", "b"];
        (x, y)
    }

    #[test]
    fn origin_mean_predicts_first_label() {
        let (x, y) = toy();
        let m = CasimacModel::fit_labeled(x, &y, &FitOptions::default(), &ConstantBackend(vec![0.0, 0.0]), 0).unwrap();
        assert_eq!(m.predict(&[5.0]).unwrap(), "c");
        assert_eq!(m.predict_latent_mean(&[5.0]).unwrap(), vec![0.0, 0.0]);
        assert_eq!(m.predict_latent(&[5.0]).unwrap().std, vec![0.25, 0.25]);
    }

    #[test]
    fn schema_mismatch() {
        let (x, y) = toy();
        let m = CasimacModel::fit_labeled(x, &y, &FitOptions::default(), &ConstantBackend(vec![0.0, 0.0]), 0).unwrap();
        assert!(matches!(m.predict(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn missing_density_is_reported() {
        #[derive(Debug)]
        struct NoDensity;
        impl FittedRegressor for NoDensity {
            fn input_dim(&self) -> usize {
                1
            }
            fn output_dim(&self) -> usize {
                2
            }
            fn predict_mean(&self, _: &[f64]) -> Result<Vec<f64>> {
                Ok(vec![0.0, 0.0])
            }
        }
        struct B;
        impl RegressionBackend for B {
            fn name(&self) -> &str {
                "no-density"
            }
            fn fit(&self, _: &[Vec<f64>], _: &[Vec<f64>], _: u64) -> Result<Arc<dyn FittedRegressor>> {
                Ok(Arc::new(NoDensity))
            }
        }
        let (x, y) = toy();
        let m = CasimacModel::fit_labeled(x, &y, &FitOptions::default(), &B, 0).unwrap();
        assert!(m.predict(&[0.5]).is_ok());
        assert!(matches!(
            m.predict_proba(&[0.5], &McConfig::with_seed(0), 0),
            Err(Error::MissingDensity(_))
        ));
    }

    #[test]
    fn transform_errors_carry_stage() {
        let (x, y) = toy();
        let opts = FitOptions {
            transform: TransformConfig { k_beta: 3, ..TransformConfig::default() },
            ..FitOptions::default()
        };
        let err = CasimacModel::fit_labeled(x, &y, &opts, &GprBackend::default(), 0).unwrap_err();
        assert!(err.to_string().starts_with("transform:"), "{err}");
    }

    #[test]
    fn noise_free_gpr_reconstructs_training_labels() {
        let (x, y) = toy();
        let backend = GprBackend::new(GprConfig::noise_free());
        let m = CasimacModel::fit_labeled(x.clone(), &y, &FitOptions::default(), &backend, 1).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_eq!(m.predict(xi).unwrap(), *yi);
        }
        for (xi, zi) in x.iter().zip(m.train_latent()) {
            let mean = m.predict_latent_mean(xi).unwrap();
            for (a, b) in mean.iter().zip(zi) {
                assert_abs_diff_eq!(a, b, epsilon = 1e-5);
            }
            assert!(m.predict_latent(xi).unwrap().std.iter().all(|&s| s > 0.0));
        }
    }
}
