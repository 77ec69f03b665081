use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use casimac::classifier::FitOptions;
use casimac::dataio::{
    grid_search_cv, load_model, read_csv, save_model, synth_quadrants, write_csv, Grid, Table, TuneOptions,
    TuneReport, FORMAT_VERSION,
};
use casimac::metrics::{area_deviation, calibration_curve, EvaluationReport};
use casimac::regression::{GprBackend, GprConfig, MaternNu};
use casimac::{CasimacModel, Error, McConfig, Result, TransformConfig, VERSION};
use serde::Serialize;

use crate::{CalibrateArgs, EvaluateArgs, McArgs, PredictArgs, SynthArgs, TrainArgs, TuneArgs, VizArgs};

fn header(seed: u64) -> Vec<String> {
    vec![format!("casimac {VERSION}"), format!("seed {seed}")]
}

/// JSON documents carry the same metadata as CSV comment headers.
#[derive(Serialize)]
struct Envelope<'a, T: Serialize> {
    format_version: u32,
    tool_version: &'a str,
    seed: u64,
    #[serde(flatten)]
    body: T,
}

fn write_json<T: Serialize>(path: &Path, seed: u64, body: T) -> Result<()> {
    let doc = Envelope { format_version: FORMAT_VERSION, tool_version: VERSION, seed, body };
    let mut text = serde_json::to_string_pretty(&doc)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| io_error(path, e))
}

fn io_error(path: &Path, e: std::io::Error) -> Error {
    Error::Io { path: path.to_owned(), source: e }
}

fn read_table(path: &Path, label_col: Option<&str>) -> Result<Table> {
    let file = File::open(path).map_err(|e| io_error(path, e))?;
    let table = read_csv(file, path, label_col)?;
    if table.features.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }
    Ok(table)
}

/// Labels of `table` as class indices of `model`.
fn true_indices(model: &CasimacModel, table: &Table) -> Result<Vec<usize>> {
    let labels = table.labels.as_ref().ok_or_else(|| Error::Data("table has no label column".into()))?;
    labels
        .iter()
        .map(|l| {
            model
                .label_map()
                .index_of(l)
                .ok_or_else(|| Error::Data(format!("label `{l}` is unknown to the model")))
        })
        .collect()
}

fn mc_config(args: &McArgs) -> Result<McConfig> {
    McConfig::new(args.mc_samples, args.seed)
}

fn csv_writer(path: &Path, comments: &[String]) -> Result<csv::Writer<BufWriter<File>>> {
    let file = File::create(path).map_err(|e| io_error(path, e))?;
    let mut out = BufWriter::new(file);
    for c in comments {
        writeln!(out, "# {c}").map_err(|e| io_error(path, e))?;
    }
    Ok(csv::Writer::from_writer(out))
}

fn finish(path: &Path, w: csv::Writer<BufWriter<File>>) -> Result<()> {
    w.into_inner()
        .map_err(|e| Error::Data(e.to_string()))?
        .flush()
        .map_err(|e| io_error(path, e))
}

pub fn train(a: &TrainArgs) -> Result<()> {
    let table = read_table(&a.data.data, Some(&a.data.label_col))?;
    let (data, labels) = table.to_dataset()?;
    let transform = match (a.gamma, a.alpha, a.beta) {
        (Some(g), _, _) => TransformConfig::from_gamma(g, a.k_alpha, a.k_beta, &a.metric)?,
        (None, Some(alpha), Some(beta)) => {
            TransformConfig { alpha, beta, k_alpha: a.k_alpha, k_beta: a.k_beta, metric: a.metric.clone() }
        }
        _ => TransformConfig { k_alpha: a.k_alpha, k_beta: a.k_beta, metric: a.metric.clone(), ..Default::default() },
    };
    let base = if a.noise_free { GprConfig::noise_free() } else { GprConfig::default() };
    let gpr = GprConfig { nu: MaternNu::try_from(a.nu)?, restarts: a.restarts, ..base };
    gpr.validate()?;
    let options = FitOptions { transform, preprocessing: a.preprocessing.parse()? };
    let model = CasimacModel::fit(&data, labels, &options, &GprBackend::new(gpr), a.seed)?;
    save_model(&a.out, &model)
}

pub fn predict(a: &PredictArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let table = read_table(&a.data, a.label_col.as_deref())?;
    let predicted = model.predict_batch(&table.features)?;
    let probs = if a.proba { Some(model.predict_proba_batch(&table.features, &mc_config(&a.mc)?)?) } else { None };

    let mut comments = header(a.mc.seed);
    if a.proba {
        comments.push(format!("mc_samples {}", a.mc.mc_samples));
    }
    let mut w = csv_writer(&a.out, &comments)?;
    let mut head = vec!["row".to_owned(), "predicted".to_owned()];
    if a.proba {
        head.extend(model.label_map().labels().iter().map(|l| format!("proba_{l}")));
    }
    w.write_record(&head)?;
    for (i, &k) in predicted.iter().enumerate() {
        let mut rec = vec![i.to_string(), model.label_map().label(k).to_owned()];
        if let Some(p) = &probs {
            rec.extend(p[i].iter().map(f64::to_string));
        }
        w.write_record(&rec)?;
    }
    finish(&a.out, w)
}

#[derive(Serialize)]
struct EvaluationDocument<'a> {
    mc_samples: usize,
    labels: &'a [String],
    report: EvaluationReport,
}

pub fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let table = read_table(&a.data.data, Some(&a.data.label_col))?;
    let truth = true_indices(&model, &table)?;
    let predicted = model.predict_batch(&table.features)?;
    let probs = model.predict_proba_batch(&table.features, &mc_config(&a.mc)?)?;
    let report = EvaluationReport::compute(&truth, &predicted, &probs, model.n_classes(), &a.top_k)?;
    let doc = EvaluationDocument { mc_samples: a.mc.mc_samples, labels: model.label_map().labels(), report };
    write_json(&a.out, a.mc.seed, doc)
}

pub fn calibrate(a: &CalibrateArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    if model.n_classes() != 2 {
        return Err(Error::InvalidConfig(format!(
            "calibration curves need a binary model, this one has {} classes",
            model.n_classes()
        )));
    }
    let positive = match &a.positive {
        Some(l) => model
            .label_map()
            .index_of(l)
            .ok_or_else(|| Error::InvalidConfig(format!("label `{l}` is unknown to the model")))?,
        None => 0,
    };
    let table = read_table(&a.data.data, Some(&a.data.label_col))?;
    let truth: Vec<bool> = true_indices(&model, &table)?.into_iter().map(|k| k == positive).collect();
    let probs = model.predict_proba_batch(&table.features, &mc_config(&a.mc)?)?;
    let predicted: Vec<f64> = probs.iter().map(|p| p[positive]).collect();
    let curve = calibration_curve(&truth, &predicted)?;

    let mut comments = header(a.mc.seed);
    comments.push(format!("positive {}", model.label_map().label(positive)));
    comments.push(format!("area_deviation {}", area_deviation(&curve)));
    let mut w = csv_writer(&a.out, &comments)?;
    w.write_record(["lower", "upper", "mean_predicted", "true_fraction", "count"])?;
    for b in &curve.bins {
        w.write_record([
            b.lower.to_string(),
            b.upper.to_string(),
            b.mean_predicted.to_string(),
            b.true_fraction.to_string(),
            b.count.to_string(),
        ])?;
    }
    finish(&a.out, w)
}

#[derive(Serialize)]
struct TuneDocument<'a> {
    folds: usize,
    mc_samples: usize,
    labels: &'a [String],
    #[serde(flatten)]
    report: TuneReport,
}

pub fn tune(a: &TuneArgs) -> Result<()> {
    let table = read_table(&a.data.data, Some(&a.data.label_col))?;
    let (data, labels) = table.to_dataset()?;
    let grid = Grid {
        gammas: a.gammas.clone(),
        k_alphas: a.k_alphas.clone(),
        k_betas: a.k_betas.clone(),
        metrics: a.metrics.clone(),
        nus: a.nus.iter().map(|&v| MaternNu::try_from(v)).collect::<Result<_>>()?,
    };
    let opts = TuneOptions {
        folds: a.folds,
        seed: a.mc.seed,
        mc: mc_config(&a.mc)?,
        gpr: GprConfig::default(),
        preprocessing: a.preprocessing.parse()?,
    };
    let report = grid_search_cv(&data, &grid, &opts)?;
    let doc = TuneDocument { folds: a.folds, mc_samples: a.mc.mc_samples, labels: labels.labels(), report };
    write_json(&a.out, a.mc.seed, doc)
}

pub fn synth(a: &SynthArgs) -> Result<()> {
    let data = synth_quadrants(a.count, a.seed)?;
    let table = Table {
        feature_names: vec!["x1".into(), "x2".into()],
        features: data.features().to_vec(),
        label_name: Some("label".into()),
        // quadrants are numbered from 1
        labels: Some(data.labels().iter().map(|k| (k + 1).to_string()).collect()),
    };
    write_csv(&a.out, &table, &header(a.seed))
}

pub fn viz(a: &VizArgs) -> Result<()> {
    let model = load_model(&a.model)?;
    let g = model.geometry();
    let (means, images, truth) = if a.use_transform {
        let means = model.training_latent_means()?;
        (means, model.train_latent().to_vec(), Some(model.train_labels().to_vec()))
    } else {
        let path = a.data.as_deref().expect("clap requires --data without --use-transform");
        let table = read_table(path, a.label_col.as_deref())?;
        let means = table.features.iter().map(|x| model.predict_latent_mean(x)).collect::<Result<Vec<_>>>()?;
        let truth = table.labels.as_ref().map(|_| true_indices(&model, &table)).transpose()?;
        (means.clone(), means, truth)
    };

    let mut w = csv_writer(&a.out, &header(model.seed()))?;
    let d = g.dim();
    let mut head = vec!["row".to_owned()];
    head.extend((1..=d).map(|i| format!("latent_{i}")));
    head.extend((1..=d).map(|i| format!("compressed_{i}")));
    head.extend(model.label_map().labels().iter().map(|l| format!("bary_{l}")));
    if truth.is_some() {
        head.push("true".into());
    }
    head.push("predicted".into());
    w.write_record(&head)?;
    for (i, (mean, image)) in means.iter().zip(&images).enumerate() {
        let c = g.compress(image);
        let mut rec = vec![i.to_string()];
        rec.extend(mean.iter().map(f64::to_string));
        rec.extend(c.iter().map(f64::to_string));
        rec.extend(g.barycentric(&c).iter().map(f64::to_string));
        if let Some(t) = &truth {
            rec.push(model.label_map().label(t[i]).to_owned());
        }
        rec.push(model.label_map().label(g.nearest_vertex(mean)).to_owned());
        w.write_record(&rec)?;
    }
    finish(&a.out, w)
}
