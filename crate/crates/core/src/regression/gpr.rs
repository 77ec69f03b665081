//! Gaussian-process regression with a Matérn plus white-noise kernel.
//!
//! Each output dimension gets its own zero-mean GP with kernel
//! `signal_variance * M_nu(r / length_scale) + noise_variance * delta`, whose
//! three hyperparameters maximize the log marginal likelihood in log space.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::kernel::MaternNu;
use super::optimize::{minimize_box, Options};
use super::{FittedRegressor, PredictiveDensity, RegressionBackend, RegressorSnapshot};
use crate::error::{Error, Result};
use crate::par;
use crate::rng::{substream, Purpose};

/// Predictive variances are floored here.
pub const VARIANCE_FLOOR: f64 = 1e-12;

/// How many times the jitter is multiplied by ten before a fit gives up.
const JITTER_RETRIES: usize = 3;

/// Initial value and admissible interval of a positive hyperparameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounded {
    pub init: f64,
    pub lower: f64,
    pub upper: f64,
}

impl Bounded {
    pub const fn new(init: f64, lower: f64, upper: f64) -> Self {
        Self { init, lower, upper }
    }

    /// A parameter held at `value`.
    pub const fn fixed(value: f64) -> Self {
        Self::new(value, value, value)
    }

    fn validate(&self, name: &str) -> Result<()> {
        let ok = self.lower > 0.0
            && self.lower <= self.init
            && self.init <= self.upper
            && self.upper.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!(
                "{name}: bounds [{}, {}] must be positive and contain the initial value {}",
                self.lower, self.upper, self.init
            )))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GprConfig {
    pub nu: MaternNu,
    pub length_scale: Bounded,
    pub signal_variance: Bounded,
    pub noise_variance: Bounded,
    /// Extra optimizer starts beyond the initial values.
    pub restarts: usize,
    pub jitter: f64,
}

impl Default for GprConfig {
    fn default() -> Self {
        Self {
            nu: MaternNu::FiveHalves,
            length_scale: Bounded::new(1.0, 1e-2, 1e3),
            signal_variance: Bounded::new(1.0, 1e-3, 1e3),
            noise_variance: Bounded::new(1e-2, 1e-10, 1e1),
            restarts: 4,
            jitter: 1e-10,
        }
    }
}

impl GprConfig {
    /// Default configuration with the white-noise variance pinned at `1e-10`,
    /// which makes the posterior mean interpolate the training targets.
    pub fn noise_free() -> Self {
        Self {
            noise_variance: Bounded::fixed(1e-10),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.length_scale.validate("length_scale")?;
        self.signal_variance.validate("signal_variance")?;
        self.noise_variance.validate("noise_variance")?;
        if !(self.jitter > 0.0 && self.jitter.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "jitter must be a small positive number, got {}",
                self.jitter
            )));
        }
        Ok(())
    }

    fn log_bounds(&self) -> ([f64; 3], [f64; 3]) {
        let b = [self.length_scale, self.signal_variance, self.noise_variance];
        (b.map(|p| p.lower.ln()), b.map(|p| p.upper.ln()))
    }

    fn initial(&self) -> Hyperparameters {
        Hyperparameters {
            length_scale: self.length_scale.init,
            signal_variance: self.signal_variance.init,
            noise_variance: self.noise_variance.init,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperparameters {
    pub length_scale: f64,
    pub signal_variance: f64,
    pub noise_variance: f64,
}

impl Hyperparameters {
    pub fn to_log(self) -> [f64; 3] {
        [
            self.length_scale.ln(),
            self.signal_variance.ln(),
            self.noise_variance.ln(),
        ]
    }

    pub fn from_log(theta: &[f64]) -> Self {
        Self {
            length_scale: theta[0].exp(),
            signal_variance: theta[1].exp(),
            noise_variance: theta[2].exp(),
        }
    }

    /// Prior variance of a noisy observation.
    pub fn prior_variance(&self) -> f64 {
        self.signal_variance + self.noise_variance
    }
}

/// Pairwise Euclidean distances between the rows of `inputs`.
pub fn pairwise_distances(inputs: &[Vec<f64>]) -> DMatrix<f64> {
    let n = inputs.len();
    DMatrix::from_fn(n, n, |i, j| euclidean(&inputs[i], &inputs[j]))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn kernel_matrix(dists: &DMatrix<f64>, nu: MaternNu, h: &Hyperparameters, extra_diag: f64) -> DMatrix<f64> {
    let n = dists.nrows();
    let mut k = DMatrix::from_fn(n, n, |i, j| {
        h.signal_variance * nu.correlation(dists[(i, j)] / h.length_scale)
    });
    for i in 0..n {
        k[(i, i)] += h.noise_variance + extra_diag;
    }
    k
}

/// Log marginal likelihood of one output column and its gradient with respect
/// to `(ln length_scale, ln signal_variance, ln noise_variance)`.
///
/// `jitter` is added to the diagonal on top of the noise variance.
pub fn log_marginal_likelihood_with_distances(
    h: &Hyperparameters,
    nu: MaternNu,
    dists: &DMatrix<f64>,
    targets: &[f64],
    jitter: f64,
) -> Result<(f64, [f64; 3])> {
    let n = targets.len();
    if dists.nrows() != n {
        return Err(Error::DimensionMismatch {
            expected: dists.nrows(),
            got: n,
        });
    }
    let k = kernel_matrix(dists, nu, h, jitter);
    let chol = k.cholesky().ok_or(Error::NotPositiveDefinite { jitter })?;
    let y = DVector::from_column_slice(targets);
    let alpha = chol.solve(&y);
    let l = chol.l_dirty();
    let log_det: f64 = 2.0 * (0..n).map(|i| l[(i, i)].ln()).sum::<f64>();
    let value = -0.5 * y.dot(&alpha) - 0.5 * log_det - 0.5 * n as f64 * (2.0 * PI).ln();

    // d/dtheta = 1/2 tr((alpha alpha^T - K^-1) dK/dtheta)
    let k_inv = chol.inverse();
    let mut grad = [0.0; 3];
    for i in 0..n {
        for j in 0..n {
            let w = alpha[i] * alpha[j] - k_inv[(i, j)];
            let u = dists[(i, j)] / h.length_scale;
            grad[0] += w * h.signal_variance * nu.dlog_length(u);
            grad[1] += w * h.signal_variance * nu.correlation(u);
        }
        grad[2] += (alpha[i] * alpha[i] - k_inv[(i, i)]) * h.noise_variance;
    }
    grad.iter_mut().for_each(|g| *g *= 0.5);
    Ok((value, grad))
}

/// Log marginal likelihood for raw inputs and one target column.
pub fn log_marginal_likelihood(
    h: &Hyperparameters,
    nu: MaternNu,
    inputs: &[Vec<f64>],
    targets: &[f64],
    jitter: f64,
) -> Result<(f64, [f64; 3])> {
    log_marginal_likelihood_with_distances(h, nu, &pairwise_distances(inputs), targets, jitter)
}

/// Log marginal likelihood before and after one optimizer run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RestartTrace {
    pub start: Hyperparameters,
    pub start_lml: f64,
    pub end: Hyperparameters,
    pub end_lml: f64,
}

/// One output dimension after fitting.
#[derive(Debug, Clone)]
pub struct GpOutput {
    pub hyper: Hyperparameters,
    pub jitter: f64,
    pub restarts: Vec<RestartTrace>,
    l: DMatrix<f64>,
    weights: DVector<f64>,
}

impl GpOutput {
    fn factorize(
        dists: &DMatrix<f64>,
        targets: &[f64],
        nu: MaternNu,
        hyper: Hyperparameters,
        base_jitter: f64,
    ) -> Result<Self> {
        let mut jitter = base_jitter;
        for attempt in 0..=JITTER_RETRIES {
            if attempt > 0 {
                jitter *= 10.0;
                log::debug!("kernel matrix not positive definite; retrying with jitter {jitter:e}");
            }
            if let Some(chol) = kernel_matrix(dists, nu, &hyper, jitter).cholesky() {
                let weights = chol.solve(&DVector::from_column_slice(targets));
                return Ok(Self {
                    hyper,
                    jitter,
                    restarts: Vec::new(),
                    l: chol.unpack(),
                    weights,
                });
            }
        }
        Err(Error::NotPositiveDefinite { jitter })
    }
}

/// Trained per-dimension GP regressor.
#[derive(Debug, Clone)]
pub struct FittedGpr {
    config: GprConfig,
    inputs: Vec<Vec<f64>>,
    outputs: Vec<GpOutput>,
}

fn check_shapes(inputs: &[Vec<f64>], targets: &[Vec<f64>]) -> Result<(usize, usize)> {
    if inputs.is_empty() {
        return Err(Error::Data("regression needs at least one training point".into()));
    }
    if inputs.len() != targets.len() {
        return Err(Error::DimensionMismatch {
            expected: inputs.len(),
            got: targets.len(),
        });
    }
    let m = inputs[0].len();
    let out = targets[0].len();
    if let Some(bad) = inputs.iter().find(|r| r.len() != m) {
        return Err(Error::DimensionMismatch { expected: m, got: bad.len() });
    }
    if let Some(bad) = targets.iter().find(|r| r.len() != out) {
        return Err(Error::DimensionMismatch { expected: out, got: bad.len() });
    }
    if inputs.iter().flatten().chain(targets.iter().flatten()).any(|v| !v.is_finite()) {
        return Err(Error::Data("non-finite regression input or target".into()));
    }
    Ok((m, out))
}

fn column(targets: &[Vec<f64>], d: usize) -> Vec<f64> {
    targets.iter().map(|t| t[d]).collect()
}

/// Fits one independent GP per target column.
pub fn fit_gpr(inputs: &[Vec<f64>], targets: &[Vec<f64>], cfg: &GprConfig, seed: u64) -> Result<FittedGpr> {
    cfg.validate()?;
    let (_, out_dim) = check_shapes(inputs, targets)?;
    let dists = pairwise_distances(inputs);
    let (lower, upper) = cfg.log_bounds();
    let outputs = par::try_map_indexed(out_dim, |d| {
        let y = column(targets, d);
        let starts: Vec<[f64; 3]> = std::iter::once(cfg.initial().to_log())
            .chain((0..cfg.restarts).map(|r| {
                let mut rng = substream(seed, Purpose::GprRestart, ((d as u64) << 32) | r as u64);
                std::array::from_fn(|i| {
                    let u: f64 = rng.random();
                    lower[i] + u * (upper[i] - lower[i])
                })
            }))
            .collect();
        let objective = |theta: &[f64]| {
            log_marginal_likelihood_with_distances(&Hyperparameters::from_log(theta), cfg.nu, &dists, &y, cfg.jitter)
                .ok()
                .map(|(v, g)| (-v, g.iter().map(|x| -x).collect()))
        };
        let runs = par::map_slice(&starts, |x0| {
            minimize_box(objective, x0, &lower, &upper, Options::default()).map(|m| RestartTrace {
                start: Hyperparameters::from_log(&clamped(x0, &lower, &upper)),
                start_lml: -m.start_value,
                end: Hyperparameters::from_log(&m.x),
                end_lml: -m.value,
            })
        });
        let traces: Vec<RestartTrace> = runs.into_iter().flatten().collect();
        // first strictly better run wins, so ties keep the earliest start
        let best = traces
            .iter()
            .fold(None::<&RestartTrace>, |best, t| match best {
                Some(b) if b.end_lml >= t.end_lml => Some(b),
                _ => Some(t),
            })
            .ok_or(Error::NotPositiveDefinite { jitter: cfg.jitter })?;
        let mut out = GpOutput::factorize(&dists, &y, cfg.nu, best.end, cfg.jitter)?;
        out.restarts = traces;
        Ok::<_, Error>(out)
    })?;
    Ok(FittedGpr {
        config: cfg.clone(),
        inputs: inputs.to_vec(),
        outputs,
    })
}

fn clamped(x: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    x.iter().zip(lower.iter().zip(upper)).map(|(v, (lo, hi))| v.clamp(*lo, *hi)).collect()
}

impl FittedGpr {
    /// Refactorizes a GP from stored hyperparameters without optimizing.
    pub fn from_hyperparameters(
        config: GprConfig,
        inputs: &[Vec<f64>],
        targets: &[Vec<f64>],
        hypers: &[Hyperparameters],
    ) -> Result<Self> {
        config.validate()?;
        let (_, out_dim) = check_shapes(inputs, targets)?;
        if hypers.len() != out_dim {
            return Err(Error::DimensionMismatch {
                expected: out_dim,
                got: hypers.len(),
            });
        }
        let dists = pairwise_distances(inputs);
        let outputs = (0..out_dim)
            .map(|d| GpOutput::factorize(&dists, &column(targets, d), config.nu, hypers[d], config.jitter))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            inputs: inputs.to_vec(),
            outputs,
        })
    }

    pub fn config(&self) -> &GprConfig {
        &self.config
    }

    pub fn outputs(&self) -> &[GpOutput] {
        &self.outputs
    }

    pub fn hyperparameters(&self) -> Vec<Hyperparameters> {
        self.outputs.iter().map(|o| o.hyper).collect()
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        let m = self.inputs[0].len();
        if x.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: x.len() });
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<PredictiveDensity> {
        self.check_input(x)?;
        let r: Vec<f64> = self.inputs.iter().map(|xi| euclidean(x, xi)).collect();
        let mut mean = Vec::with_capacity(self.outputs.len());
        let mut std = Vec::with_capacity(self.outputs.len());
        for out in &self.outputs {
            let h = &out.hyper;
            let kstar = DVector::from_iterator(
                r.len(),
                r.iter().map(|&ri| h.signal_variance * self.config.nu.correlation(ri / h.length_scale)),
            );
            mean.push(kstar.dot(&out.weights));
            let v = out
                .l
                .solve_lower_triangular(&kstar)
                .ok_or_else(|| Error::Singular("Cholesky factor".into()))?;
            let var = (h.prior_variance() - v.dot(&v)).max(VARIANCE_FLOOR);
            std.push(var.sqrt());
        }
        Ok(PredictiveDensity { mean, std })
    }
}

impl FittedRegressor for FittedGpr {
    fn input_dim(&self) -> usize {
        self.inputs[0].len()
    }

    fn output_dim(&self) -> usize {
        self.outputs.len()
    }

    fn predict_mean(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let r: Vec<f64> = self.inputs.iter().map(|xi| euclidean(x, xi)).collect();
        Ok(self
            .outputs
            .iter()
            .map(|out| {
                let h = &out.hyper;
                r.iter()
                    .zip(out.weights.iter())
                    .map(|(&ri, w)| h.signal_variance * self.config.nu.correlation(ri / h.length_scale) * w)
                    .sum()
            })
            .collect())
    }

    fn predict_density(&self, x: &[f64]) -> Result<PredictiveDensity> {
        self.predict(x)
    }

    fn snapshot(&self) -> Option<RegressorSnapshot> {
        Some(RegressorSnapshot::Gpr {
            config: self.config.clone(),
            hyperparameters: self.hyperparameters(),
        })
    }
}

/// The built-in GP backend.
#[derive(Debug, Clone, Default)]
pub struct GprBackend {
    pub config: GprConfig,
}

impl GprBackend {
    pub fn new(config: GprConfig) -> Self {
        Self { config }
    }
}

impl RegressionBackend for GprBackend {
    fn name(&self) -> &str {
        "gpr"
    }

    fn fit(&self, inputs: &[Vec<f64>], targets: &[Vec<f64>], seed: u64) -> Result<Arc<dyn FittedRegressor>> {
        Ok(Arc::new(fit_gpr(inputs, targets, &self.config, seed)?))
    }
}
