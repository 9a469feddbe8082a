use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use floodxai::dataset::{
    impute_missing, load_csv, monthly_means, split, CsvSchema, ImputeStrategy, ImputedCell,
};
use floodxai::lime::{compare_explanations, AgreementReport, Condition, LimeConfig, LimeExplainer};
use floodxai::metrics::{evaluate, render_table, MetricsReport};
use floodxai::models::{Hyperparameters, ModelDocument, TrainingMetadata};
use floodxai::render::{bar_chart, svg_bars, two_sided_chart};
use floodxai::shap::{global_importance, kernel_shap, Background, CoalitionBudget, GlobalImportance, ShapConfig};
use floodxai::{BlackBoxModel, Dataset, ModelKind, SplitDataset, TrainedModel, MONTHS};
use serde::Serialize;
use serde_json::json;
use sha2::{Digest, Sha256};

use crate::args::{
    BackgroundChoice, DataArgs, EvaluateArgs, ExplainArgs, Mode, Partition, SummaryArgs, TrainArgs,
};
use crate::error::{CliError, CliResult, Context};
use crate::report::{commit, now, stage, DatasetInfo, Emit, ModelRef, Report, RunManifest};

const DEFAULT_LABEL: &str = "FLOODS";

struct Loaded {
    data: Dataset,
    raw_missing: usize,
    info: DatasetInfo,
}

fn load(path: &Path, label: &str, impute: ImputeStrategy) -> CliResult<Loaded> {
    let schema = CsvSchema::default().with_label(label);
    let raw = load_csv(path, &schema).context(&format!("cannot load {}", path.display()))?;
    let data = impute_missing(&raw, impute).context(&format!("cannot impute {}", path.display()))?;
    Ok(Loaded {
        raw_missing: raw.missing_count(),
        info: DatasetInfo {
            path: path.display().to_string(),
            fingerprint: raw.fingerprint(),
            records: raw.len(),
            label_column: label.to_string(),
            impute: impute.to_string(),
        },
        data,
    })
}

fn data_settings(args: &DataArgs, meta: Option<&TrainingMetadata>) -> (String, ImputeStrategy) {
    let label = args
        .label_column
        .clone()
        .or_else(|| meta.map(|m| m.label_column.clone()))
        .unwrap_or_else(|| DEFAULT_LABEL.to_string());
    let impute = args
        .impute
        .map(ImputeStrategy::from)
        .or_else(|| meta.map(|m| m.impute))
        .unwrap_or(ImputeStrategy::ColumnMean);
    (label, impute)
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn year_range(data: &Dataset) -> String {
    let years = data.years();
    match (years.iter().min(), years.iter().max()) {
        (Some(lo), Some(hi)) => format!("{lo}-{hi} ({} records)", years.len()),
        _ => "none".to_string(),
    }
}

// ---------------------------------------------------------------- summary

#[derive(Debug, Serialize)]
struct MonthMean {
    month: String,
    mean_mm: f64,
}

#[derive(Debug, Serialize)]
struct SummaryBody {
    records: usize,
    first_year: i32,
    last_year: i32,
    floods: usize,
    no_floods: usize,
    missing_cells: usize,
    imputed: Vec<ImputedCell>,
    annual_mismatches: Vec<i32>,
    monthly_means: Vec<MonthMean>,
}

fn provenance_log(cells: &[ImputedCell]) -> String {
    let mut out = String::from("year,month,value,strategy\n");
    for c in cells {
        let _ = writeln!(out, "{c}");
    }
    out
}

pub fn summary(args: &SummaryArgs) -> CliResult<()> {
    let started = now();
    let (label, impute) = data_settings(&args.data, None);
    let loaded = load(&args.data.data, &label, impute)?;
    let data = &loaded.data;
    let means = monthly_means(data).context("cannot compute monthly means")?;
    let years = data.years();
    let floods = data.labels().iter().filter(|&&l| l == 1).count();
    let body = SummaryBody {
        records: data.len(),
        first_year: years.iter().copied().min().unwrap_or_default(),
        last_year: years.iter().copied().max().unwrap_or_default(),
        floods,
        no_floods: data.len() - floods,
        missing_cells: loaded.raw_missing,
        imputed: data.imputed().to_vec(),
        annual_mismatches: data.annual_mismatches(),
        monthly_means: data
            .feature_names()
            .iter()
            .zip(means)
            .map(|(m, v)| MonthMean {
                month: m.clone(),
                mean_mm: v,
            })
            .collect(),
    };

    let bars: Vec<(String, f64)> = body
        .monthly_means
        .iter()
        .map(|m| (m.month.clone(), m.mean_mm))
        .collect();
    let mut text = String::new();
    let _ = writeln!(
        text,
        "{} records, {}-{}: {} flood years, {} without",
        body.records, body.first_year, body.last_year, body.floods, body.no_floods
    );
    let _ = writeln!(text, "missing cells: {} (imputed: {impute})", body.missing_cells);
    for cell in &body.imputed {
        let _ = writeln!(text, "  {cell}");
    }
    if !body.annual_mismatches.is_empty() {
        let _ = writeln!(
            text,
            "annual total differs from the monthly sum in: {:?}",
            body.annual_mismatches
        );
    }
    let _ = writeln!(text, "\nmean monthly rainfall (mm)");
    text.push_str(&bar_chart(&bars, 50, 1));

    let mut manifest = RunManifest::new("summary", loaded.info, started);
    manifest.finish();
    let report = Report::new("summary", manifest, body);
    let mut extra = Vec::new();
    if let Some(path) = &args.provenance {
        extra.push(stage(path, provenance_log(data.imputed()).as_bytes())?);
    }
    Emit {
        json: args.output.json,
        out: args.out.as_deref(),
        svg: args.output.svg.as_deref(),
    }
    .emit(
        &report,
        &text,
        Some(svg_bars("Mean monthly rainfall (mm)", &bars)),
        extra,
    )
}

// ------------------------------------------------------------------ train

#[derive(Debug, Serialize)]
struct TrainBody {
    model_path: String,
    kind: ModelKind,
    n_train: usize,
    n_test: usize,
    train_metrics: MetricsReport,
}

fn hyperparameters(args: &TrainArgs) -> CliResult<Hyperparameters> {
    let mut hp = Hyperparameters::default();
    if let Some(k) = args.k {
        hp.knn.k = k;
    }
    if let Some(d) = args.max_depth {
        hp.tree.max_depth = d;
    }
    if let Some(m) = args.min_samples_leaf {
        hp.tree.min_samples_leaf = m;
    }
    if let Some(c) = args.c {
        hp.svm.c = c;
    }
    if let Some(l2) = args.l2 {
        hp.logistic.l2 = l2;
    }
    match args.model {
        ModelKind::Logistic => {
            if let Some(lr) = args.lr {
                hp.logistic.learning_rate = lr;
            }
            if let Some(e) = args.epochs {
                hp.logistic.epochs = e;
            }
        }
        ModelKind::Svm => {
            if let Some(lr) = args.lr {
                hp.svm.learning_rate = lr;
            }
            if let Some(e) = args.epochs {
                hp.svm.epochs = e;
            }
        }
        kind => {
            if args.lr.is_some() || args.epochs.is_some() {
                log::warn!("--lr and --epochs have no effect on {kind}");
            }
        }
    }
    hp.validate().context("")?;
    Ok(hp)
}

/// `model.json` -> `model.manifest.json`.
pub fn manifest_path(model_path: &Path) -> PathBuf {
    model_path.with_extension("manifest.json")
}

pub fn train(args: &TrainArgs) -> CliResult<()> {
    let started = now();
    let hp = hyperparameters(args)?;
    let (label, impute) = data_settings(&args.data, None);
    let loaded = load(&args.data.data, &label, impute)?;
    let parts = split(&loaded.data, args.split, args.seed).context("invalid --split")?;
    let model = TrainedModel::fit(args.model, &parts.train, &hp).context("cannot train")?;
    let train_metrics = evaluate(&model, args.model.display_name(), &parts.train, "train")
        .context("cannot score the training partition")?;
    let metadata = TrainingMetadata {
        seed: args.seed,
        train_fraction: args.split,
        impute,
        label_column: label,
        dataset_fingerprint: loaded.info.fingerprint.clone(),
        n_train: parts.train.len(),
        feature_names: loaded.data.feature_names().to_vec(),
    };
    let doc = ModelDocument::new(model, &hp, metadata);
    let mut model_json = doc
        .to_json()
        .map_err(|e| CliError::runtime(format!("cannot serialise model: {e}")))?;
    model_json.push('\n');

    let mut manifest = RunManifest::new("train", loaded.info, started);
    manifest.seeds.split = Some(args.seed);
    manifest.train_fraction = Some(args.split);
    manifest.hyperparameters = json!(doc.hyperparameters);
    manifest.models.push(ModelRef {
        path: args.out.display().to_string(),
        kind: args.model.to_string(),
        sha256: sha256_hex(model_json.as_bytes()),
    });
    manifest.finish();
    let body = TrainBody {
        model_path: args.out.display().to_string(),
        kind: args.model,
        n_train: parts.train.len(),
        n_test: parts.test.len(),
        train_metrics,
    };
    let report = Report::new("train", manifest, body);
    let report_json = report.to_json()?;
    let sidecar = manifest_path(&args.out);
    commit(vec![
        stage(&args.out, model_json.as_bytes())?,
        stage(&sidecar, report_json.as_bytes())?,
    ])?;

    if args.json {
        print!("{report_json}");
    } else {
        let m = &report.body.train_metrics;
        println!(
            "trained {} on {} of {} records (seed {}, split {})",
            args.model.display_name(),
            report.body.n_train,
            report.body.n_train + report.body.n_test,
            args.seed,
            args.split
        );
        match m.scores.accuracy {
            Some(a) => println!("training accuracy {a:.4}"),
            None => println!("training accuracy n/a"),
        }
        println!("wrote {} and {}", args.out.display(), sidecar.display());
    }
    Ok(())
}

// --------------------------------------------------------------- evaluate

struct LoadedModel {
    path: PathBuf,
    doc: ModelDocument,
    sha256: String,
}

fn load_model(path: &Path) -> CliResult<LoadedModel> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("cannot read model {}: {e}", path.display())))?;
    let doc = ModelDocument::from_json(&text).context(&format!("cannot load model {}", path.display()))?;
    Ok(LoadedModel {
        path: path.to_path_buf(),
        sha256: sha256_hex(text.as_bytes()),
        doc,
    })
}

fn check_compatible(model: &LoadedModel, loaded: &Loaded) -> CliResult<()> {
    let names = loaded.data.feature_names();
    let width = model.doc.model.n_features();
    if width != MONTHS || model.doc.metadata.feature_names != names {
        return Err(CliError::usage(format!(
            "feature mismatch: model {} expects {} features {:?}, dataset has {} {:?}",
            model.path.display(),
            width,
            model.doc.metadata.feature_names,
            names.len(),
            names
        )));
    }
    if model.doc.metadata.dataset_fingerprint != loaded.info.fingerprint {
        log::warn!(
            "model {} was trained on a different dataset (fingerprint {}); split partitions may not match",
            model.path.display(),
            model.doc.metadata.dataset_fingerprint
        );
    }
    Ok(())
}

fn model_ref(m: &LoadedModel) -> ModelRef {
    ModelRef {
        path: m.path.display().to_string(),
        kind: m.doc.kind.to_string(),
        sha256: m.sha256.clone(),
    }
}

#[derive(Debug, Serialize)]
struct EvaluateBody {
    partition: String,
    n_rows: usize,
    results: Vec<MetricsReport>,
}

/// Resolve one setting shared by several models, with an optional override.
fn agreed<T: PartialEq + Copy + std::fmt::Debug>(
    flag: &str,
    override_value: Option<T>,
    models: &[LoadedModel],
    get: impl Fn(&TrainingMetadata) -> T,
) -> CliResult<T> {
    if let Some(v) = override_value {
        return Ok(v);
    }
    let first = get(&models[0].doc.metadata);
    for m in &models[1..] {
        let v = get(&m.doc.metadata);
        if v != first {
            return Err(CliError::usage(format!(
                "models disagree on {flag} ({first:?} in {}, {v:?} in {}); pass --{flag} explicitly",
                models[0].path.display(),
                m.path.display()
            )));
        }
    }
    Ok(first)
}

pub fn evaluate_cmd(args: &EvaluateArgs) -> CliResult<()> {
    let started = now();
    let models = args
        .model
        .iter()
        .map(|p| load_model(p))
        .collect::<CliResult<Vec<_>>>()?;
    let seed = agreed("seed", args.seed, &models, |m| m.seed)?;
    let fraction = agreed("split", args.split, &models, |m| m.train_fraction)?;
    let first = &models[0].doc.metadata;
    let (label, impute) = data_settings(&args.data, Some(first));
    let loaded = load(&args.data.data, &label, impute)?;
    for m in &models {
        check_compatible(m, &loaded)?;
    }
    let parts = split(&loaded.data, fraction, seed).context("invalid --split")?;
    let (partition, rows) = match args.partition {
        Partition::Test => ("test", &parts.test),
        Partition::Train => ("train", &parts.train),
    };
    let results = models
        .iter()
        .map(|m| {
            evaluate(&m.doc.model, m.doc.kind.display_name(), rows, partition)
                .context(&format!("cannot evaluate {}", m.path.display()))
        })
        .collect::<CliResult<Vec<_>>>()?;

    let mut text = String::new();
    if args.partition == Partition::Train {
        let _ = writeln!(
            text,
            "scores on the TRAINING partition ({} rows); these are optimistic",
            rows.len()
        );
    } else {
        let _ = writeln!(text, "scores on the test partition ({} rows)", rows.len());
    }
    text.push_str(&render_table(&results));

    let mut manifest = RunManifest::new("evaluate", loaded.info, started);
    manifest.seeds.split = Some(seed);
    manifest.train_fraction = Some(fraction);
    manifest.hyperparameters = json!(models.iter().map(|m| m.doc.hyperparameters).collect::<Vec<_>>());
    manifest.models = models.iter().map(model_ref).collect();
    manifest.finish();
    let body = EvaluateBody {
        partition: partition.to_string(),
        n_rows: rows.len(),
        results,
    };
    Emit {
        json: args.output.json,
        out: args.out.as_deref(),
        svg: args.output.svg.as_deref(),
    }
    .emit(&Report::new("evaluate", manifest, body), &text, None, Vec::new())
}

// ---------------------------------------------------------------- explain

#[derive(Debug, Serialize)]
struct FeatureImportance {
    feature: String,
    importance: f64,
    mean_phi: f64,
}

fn importance_rows(g: &GlobalImportance) -> Vec<FeatureImportance> {
    g.ranking
        .iter()
        .map(|&j| FeatureImportance {
            feature: g.feature_names[j].clone(),
            importance: g.importance[j],
            mean_phi: g.mean_phi[j],
        })
        .collect()
}

#[derive(Debug, Serialize)]
struct FeatureAttribution {
    feature: String,
    value: f64,
    phi: f64,
}

#[derive(Debug, Serialize)]
struct GlobalShapBody {
    mode: &'static str,
    rows: usize,
    ranking: Vec<String>,
    features: Vec<FeatureImportance>,
    max_abs_residual: f64,
}

#[derive(Debug, Serialize)]
struct LocalShapBody {
    mode: &'static str,
    year: i32,
    observed_flood: u8,
    predicted_class: u8,
    base_value: f64,
    model_output: f64,
    additivity_residual: f64,
    coalitions: usize,
    features: Vec<FeatureAttribution>,
}

#[derive(Debug, Serialize)]
struct LimeBody {
    mode: &'static str,
    year: i32,
    observed_flood: u8,
    predicted_class: u8,
    probability: f64,
    intercept: f64,
    local_fidelity: f64,
    n_samples: usize,
    conditions: Vec<Condition>,
}

#[derive(Debug, Serialize)]
struct CompareBody {
    mode: &'static str,
    year: i32,
    agreement: AgreementReport,
    global: Vec<FeatureImportance>,
    lime: Vec<Condition>,
    local_shap: Vec<FeatureAttribution>,
}

struct ExplainContext<'a> {
    args: &'a ExplainArgs,
    model: &'a TrainedModel,
    data: &'a Dataset,
    parts: SplitDataset,
    names: Vec<String>,
}

impl ExplainContext<'_> {
    fn instance(&self) -> CliResult<(i32, Vec<f64>, u8)> {
        let year = self.args.year.ok_or_else(|| {
            CliError::usage(format!(
                "--mode {} requires --year; available years {}",
                mode_name(self.args.mode),
                year_range(self.data)
            ))
        })?;
        let record = self.data.record_for_year(year).ok_or_else(|| {
            CliError::usage(format!(
                "year {year} is not in the dataset; available years {}",
                year_range(self.data)
            ))
        })?;
        Ok((year, record.monthly_mm.to_vec(), record.flood))
    }

    fn shap_config(&self) -> CliResult<ShapConfig> {
        let config = ShapConfig {
            budget: self.args.samples,
            seed: self.args.seed,
        };
        config.validate(self.names.len()).context("")?;
        Ok(config)
    }

    fn background(&self) -> CliResult<Background> {
        let rows = self.parts.train.features().context("")?;
        match self.args.background {
            BackgroundChoice::Trainset => Background::from_rows(rows),
            BackgroundChoice::Mean => Background::mean_of(&rows),
        }
        .context("cannot build the SHAP background")
    }

    fn global(&self) -> CliResult<GlobalImportance> {
        let rows = self.data.features().context("")?;
        global_importance(self.model, &rows, &self.background()?, &self.shap_config()?, &self.names)
            .context("global SHAP failed")
    }

    fn local_shap(&self, x: &[f64]) -> CliResult<(floodxai::shap::ShapExplanation, Vec<FeatureAttribution>)> {
        let e = kernel_shap(self.model, x, &self.background()?, &self.shap_config()?).context("SHAP failed")?;
        let features = e
            .ranking()
            .into_iter()
            .map(|j| FeatureAttribution {
                feature: self.names[j].clone(),
                value: x[j],
                phi: e.phi[j],
            })
            .collect();
        Ok((e, features))
    }

    fn lime(&self, x: &[f64]) -> CliResult<floodxai::lime::LimeExplanation> {
        let mut config = LimeConfig::for_features(self.names.len());
        config.n_perturbations = self.args.perturbations;
        config.n_bins = self.args.bins;
        config.n_selected_features = self.args.top_features;
        config.seed = self.args.seed;
        if let Some(w) = self.args.kernel_width {
            config.kernel_width = w;
        }
        let train = self.parts.train.features().context("")?;
        let explainer = LimeExplainer::new(&train, &self.names, config).context("")?;
        explainer.explain(self.model, x).context("LIME failed")
    }

    fn explainer_manifest(&self) -> serde_json::Value {
        let a = self.args;
        let mut v = json!({ "mode": mode_name(a.mode), "year": a.year, "seed": a.seed });
        let shap = json!({
            "background": match a.background {
                BackgroundChoice::Trainset => "trainset",
                BackgroundChoice::Mean => "mean",
            },
            "samples": match a.samples {
                CoalitionBudget::Exhaustive => json!("exhaustive"),
                CoalitionBudget::Samples(n) => json!(n),
            },
        });
        let lime = json!({
            "perturbations": a.perturbations,
            "bins": a.bins,
            "kernel_width": a.kernel_width.unwrap_or(LimeConfig::for_features(self.names.len()).kernel_width),
            "top_features": a.top_features,
        });
        match a.mode {
            Mode::GlobalShap | Mode::LocalShap => v["shap"] = shap,
            Mode::LocalLime => v["lime"] = lime,
            Mode::Compare => {
                v["shap"] = shap;
                v["lime"] = lime;
                v["top_k"] = json!(a.top_k);
            }
        }
        v
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::GlobalShap => "global-shap",
        Mode::LocalShap => "local-shap",
        Mode::LocalLime => "local-lime",
        Mode::Compare => "compare",
    }
}

pub fn explain(args: &ExplainArgs) -> CliResult<()> {
    let started = now();
    let model = load_model(&args.model)?;
    let meta = &model.doc.metadata;
    let (label, impute) = data_settings(&args.data, Some(meta));
    let loaded = load(&args.data.data, &label, impute)?;
    check_compatible(&model, &loaded)?;
    let parts = split(&loaded.data, meta.train_fraction, meta.seed).context("cannot recreate the split")?;
    let ctx = ExplainContext {
        args,
        model: &model.doc.model,
        data: &loaded.data,
        parts,
        names: loaded.data.feature_names().to_vec(),
    };

    let mut manifest = RunManifest::new("explain", loaded.info.clone(), started);
    manifest.seeds.split = Some(meta.seed);
    manifest.seeds.explainer = Some(args.seed);
    manifest.train_fraction = Some(meta.train_fraction);
    manifest.hyperparameters = json!(model.doc.hyperparameters);
    manifest.explainer = ctx.explainer_manifest();
    manifest.models.push(model_ref(&model));
    let emit = Emit {
        json: args.output.json,
        out: args.out.as_deref(),
        svg: args.output.svg.as_deref(),
    };
    let kind = model.doc.kind.display_name();
    let mut text = String::new();

    match args.mode {
        Mode::GlobalShap => {
            let g = ctx.global()?;
            let features = importance_rows(&g);
            let bars: Vec<(String, f64)> = features.iter().map(|f| (f.feature.clone(), f.importance)).collect();
            let _ = writeln!(text, "{kind}: mean |SHAP value| over {} years", g.rows);
            text.push_str(&bar_chart(&bars, 50, 4));
            let _ = writeln!(text, "largest additivity residual {:.2e}", g.max_abs_residual);
            let svg = svg_bars(&format!("{kind}: mean |SHAP value|"), &bars);
            manifest.finish();
            let body = GlobalShapBody {
                mode: "global-shap",
                rows: g.rows,
                ranking: features.iter().map(|f| f.feature.clone()).collect(),
                features,
                max_abs_residual: g.max_abs_residual,
            };
            emit.emit(&Report::new("explain", manifest, body), &text, Some(svg), Vec::new())
        }
        Mode::LocalShap => {
            let (year, x, observed) = ctx.instance()?;
            let (e, features) = ctx.local_shap(&x)?;
            let bars: Vec<(String, f64)> = features.iter().map(|f| (f.feature.clone(), f.phi)).collect();
            let predicted = ctx.model.predict(&x);
            let _ = writeln!(
                text,
                "{kind}, {year}: f(x) = {:.4} (class {predicted}, observed {observed}), base value {:.4}",
                e.model_output, e.base_value
            );
            text.push_str(&two_sided_chart(&bars, 25));
            let _ = writeln!(
                text,
                "base + sum(phi) - f(x) = {:.2e} over {} coalitions",
                e.additivity_residual, e.coalitions
            );
            let svg = svg_bars(&format!("{kind}: SHAP values for {year}"), &bars);
            manifest.finish();
            let body = LocalShapBody {
                mode: "local-shap",
                year,
                observed_flood: observed,
                predicted_class: predicted,
                base_value: e.base_value,
                model_output: e.model_output,
                additivity_residual: e.additivity_residual,
                coalitions: e.coalitions,
                features,
            };
            emit.emit(&Report::new("explain", manifest, body), &text, Some(svg), Vec::new())
        }
        Mode::LocalLime => {
            let (year, x, observed) = ctx.instance()?;
            let e = ctx.lime(&x)?;
            let bars: Vec<(String, f64)> = e.conditions.iter().map(|c| (c.condition.clone(), c.weight)).collect();
            let _ = writeln!(
                text,
                "{kind}, {year}: P(flood) = {:.4}, predicted class {} (observed {observed})",
                e.probability, e.predicted_class
            );
            text.push_str(&two_sided_chart(&bars, 25));
            let _ = writeln!(text, "feature values");
            for c in &e.conditions {
                let _ = writeln!(text, "  {} = {:.1}", c.feature, c.value);
            }
            let _ = writeln!(
                text,
                "local fidelity (weighted R^2) {:.4}, {} samples",
                e.local_fidelity, e.n_samples
            );
            let svg = svg_bars(&format!("{kind}: LIME explanation for {year}"), &bars);
            manifest.finish();
            let body = LimeBody {
                mode: "local-lime",
                year,
                observed_flood: observed,
                predicted_class: e.predicted_class,
                probability: e.probability,
                intercept: e.intercept,
                local_fidelity: e.local_fidelity,
                n_samples: e.n_samples,
                conditions: e.conditions,
            };
            emit.emit(&Report::new("explain", manifest, body), &text, Some(svg), Vec::new())
        }
        Mode::Compare => {
            let (year, x, _) = ctx.instance()?;
            let g = ctx.global()?;
            let (local, local_rows) = ctx.local_shap(&x)?;
            let lime = ctx.lime(&x)?;
            let agreement = compare_explanations(&g, &lime, Some(&local), args.top_k);
            let _ = writeln!(text, "{kind}, {year}: global SHAP vs local LIME");
            let _ = writeln!(text, "SHAP top {}: {}", agreement.top_k, agreement.shap_top.join(", "));
            let _ = writeln!(text, "LIME features: {}", agreement.lime_features.join(", "));
            let _ = writeln!(text, "shared: {}", agreement.shared.join(", "));
            let _ = writeln!(text, "overlap {:.2}", agreement.overlap);
            match agreement.sign_agreement {
                Some(s) => {
                    let _ = writeln!(text, "sign agreement with local SHAP {s:.2}");
                }
                None => {
                    let _ = writeln!(text, "sign agreement with local SHAP: n/a");
                }
            }
            for f in &agreement.features {
                let phi = f.shap_phi.map_or("n/a".to_string(), |p| format!("{p:+.4}"));
                let _ = writeln!(
                    text,
                    "  {:<4} LIME {:+.4}  SHAP {phi}{}",
                    f.feature,
                    f.lime_weight,
                    if f.in_shap_top { "  (top)" } else { "" }
                );
            }
            manifest.finish();
            let body = CompareBody {
                mode: "compare",
                year,
                agreement,
                global: importance_rows(&g),
                lime: lime.conditions,
                local_shap: local_rows,
            };
            let _ = local;
            emit.emit(&Report::new("explain", manifest, body), &text, None, Vec::new())
        }
    }
}
