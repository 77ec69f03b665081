//! Grid search over transform and kernel settings by stratified k-fold
//! cross-validation, scored by validation log-loss.

use serde::{Deserialize, Serialize};

use crate::classifier::{CasimacModel, FitOptions, McConfig};
use crate::dataio::{stratified_folds, LabelMap, PreprocessingKind};
use crate::error::{Error, Result};
use crate::metrics::log_loss;
use crate::par;
use crate::regression::{GprBackend, GprConfig, MaternNu};
use crate::transform::{LabeledDataset, TransformConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub gammas: Vec<f64>,
    pub k_alphas: Vec<usize>,
    pub k_betas: Vec<usize>,
    pub metrics: Vec<String>,
    pub nus: Vec<MaternNu>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            gammas: vec![0.0, 0.25, 0.5, 0.75, 1.0],
            k_alphas: vec![1, 2, 3],
            k_betas: vec![1, 2, 3],
            metrics: vec!["euclidean".into()],
            nus: vec![MaternNu::FiveHalves],
        }
    }
}

impl Grid {
    /// Grid points in a fixed nested order: gamma, k_alpha, k_beta, metric, nu.
    pub fn candidates(&self) -> Vec<Candidate> {
        let mut out = Vec::new();
        for &gamma in &self.gammas {
            for &k_alpha in &self.k_alphas {
                for &k_beta in &self.k_betas {
                    for metric in &self.metrics {
                        for &nu in &self.nus {
                            out.push(Candidate { gamma, k_alpha, k_beta, metric: metric.clone(), nu });
                        }
                    }
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub gamma: f64,
    pub k_alpha: usize,
    pub k_beta: usize,
    pub metric: String,
    pub nu: MaternNu,
}

impl Candidate {
    pub fn transform(&self) -> Result<TransformConfig> {
        TransformConfig::from_gamma(self.gamma, self.k_alpha, self.k_beta, &self.metric)
    }

    pub fn gpr(&self, base: &GprConfig) -> GprConfig {
        GprConfig { nu: self.nu, ..base.clone() }
    }
}

#[derive(Debug, Clone)]
pub struct TuneOptions {
    pub folds: usize,
    pub seed: u64,
    pub mc: McConfig,
    pub gpr: GprConfig,
    pub preprocessing: PreprocessingKind,
}

impl Default for TuneOptions {
    fn default() -> Self {
        Self {
            folds: 5,
            seed: 0,
            mc: McConfig::with_seed(0),
            gpr: GprConfig::default(),
            preprocessing: PreprocessingKind::Standardize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidateScore {
    pub candidate: Candidate,
    /// `None` when the candidate was skipped.
    pub mean_log_loss: Option<f64>,
    pub fold_log_loss: Vec<f64>,
    pub skipped: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuneReport {
    pub best_index: usize,
    pub best: Candidate,
    pub scores: Vec<CandidateScore>,
}

/// Scores every admissible grid point and picks the lowest mean validation
/// log-loss; ties go to the earlier grid point.
///
/// Points whose neighbour counts do not fit the smallest class of some
/// training fold, or whose fit fails, are skipped with a warning.
pub fn grid_search_cv(data: &LabeledDataset, grid: &Grid, opts: &TuneOptions) -> Result<TuneReport> {
    let candidates = grid.candidates();
    if candidates.is_empty() {
        return Err(Error::InvalidConfig("empty tuning grid".into()));
    }
    let folds = stratified_folds(data, opts.folds, opts.seed)?;
    let n = data.n_classes();
    let names = LabelMap::new((0..n).map(|k| k.to_string()).collect()).expect("distinct labels");

    let train_sets: Vec<Vec<usize>> = (0..folds.len())
        .map(|f| folds.iter().enumerate().filter(|&(g, _)| g != f).flat_map(|(_, v)| v.iter().copied()).collect())
        .collect();
    let mut smallest = usize::MAX;
    for train in &train_sets {
        let mut counts = vec![0usize; n];
        for &i in train {
            counts[data.labels()[i]] += 1;
        }
        smallest = smallest.min(counts.into_iter().min().unwrap_or(0));
    }

    let admissible: Vec<std::result::Result<TransformConfig, String>> = candidates
        .iter()
        .map(|c| {
            c.transform()
                .and_then(|t| t.validate(smallest).map(|_| t))
                .map_err(|e| e.to_string())
        })
        .collect();

    let tasks: Vec<(usize, usize)> = (0..candidates.len())
        .filter(|&c| admissible[c].is_ok())
        .flat_map(|c| (0..folds.len()).map(move |f| (c, f)))
        .collect();

    let losses = par::map_slice(&tasks, |&(c, f)| -> Result<f64> {
        let transform = admissible[c].clone().expect("filtered");
        let train = data.subset(&train_sets[f])?;
        let options = FitOptions { transform, preprocessing: opts.preprocessing };
        let backend = GprBackend::new(candidates[c].gpr(&opts.gpr));
        let model = CasimacModel::fit(&train, names.clone(), &options, &backend, opts.seed)?;
        let truth: Vec<usize> = folds[f].iter().map(|&i| data.labels()[i]).collect();
        let probs = folds[f]
            .iter()
            .map(|&i| model.predict_proba(&data.features()[i], &opts.mc, i as u64))
            .collect::<Result<Vec<_>>>()?;
        log_loss(&truth, &probs)
    });

    let mut scores: Vec<CandidateScore> = candidates
        .iter()
        .zip(&admissible)
        .map(|(c, a)| CandidateScore {
            candidate: c.clone(),
            mean_log_loss: None,
            fold_log_loss: Vec::new(),
            skipped: a.as_ref().err().cloned(),
        })
        .collect();
    for (&(c, _), loss) in tasks.iter().zip(losses) {
        let s = &mut scores[c];
        if s.skipped.is_some() {
            continue;
        }
        match loss {
            Ok(v) => s.fold_log_loss.push(v),
            Err(e) => s.skipped = Some(e.to_string()),
        }
    }

    let mut best: Option<(usize, f64)> = None;
    for (i, s) in scores.iter_mut().enumerate() {
        if let Some(reason) = &s.skipped {
            log::warn!("skipping grid point {:?}: {reason}", s.candidate);
            s.fold_log_loss.clear();
            continue;
        }
        let mean = s.fold_log_loss.iter().sum::<f64>() / s.fold_log_loss.len() as f64;
        s.mean_log_loss = Some(mean);
        if best.is_none_or(|(_, b)| mean < b) {
            best = Some((i, mean));
        }
    }
    let (best_index, _) =
        best.ok_or_else(|| Error::InvalidConfig("no grid point is admissible for this dataset".into()))?;
    Ok(TuneReport { best_index, best: scores[best_index].candidate.clone(), scores })
}
