//! Command implementations behind the CLI front end.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use matchcast_core::autocorr::autocorrelation;
use matchcast_core::data::{build_seasons, SeasonDataset};
use matchcast_core::eval::{CvReport, CvRun, EvalError, EvalOptions, FoldOutcome};
use matchcast_core::features::{
    build_feature_table, fixture_row, FeatureRow, FeatureSet, FeatureSetSpec, FeatureTable,
};
use matchcast_core::model::{
    apply_feature_stats, feature_stats, train_model, BaseModel, ModelConfig, ModelKind,
    TrainedModel,
};
use matchcast_core::outcome::{OutcomeDistribution, Target};
use matchcast_core::poisson::FitMethod;
use matchcast_core::synth::{generate, GeneratorConfig};

use crate::io::{parse_matches_file, write_autocorr_csv, write_feature_csv, write_matches_csv};
use crate::model_io::{load_model, save_model, ModelFile};
use crate::report::{summary_csv, write_reports};

/// Parses all input files and groups them into season datasets. Warnings go
/// to the error stream.
fn load_datasets(inputs: &[PathBuf]) -> Result<(Vec<SeasonDataset>, usize)> {
    if inputs.is_empty() {
        bail!("at least one --input file is required");
    }
    let mut records = Vec::new();
    let mut skipped = 0;
    for path in inputs {
        let outcome = parse_matches_file(path)
            .with_context(|| format!("parsing {}", path.display()))?;
        records.extend(outcome.records);
        skipped += outcome.skipped_blank_lines;
    }
    let map = build_seasons(records);
    for warning in &map.warnings {
        eprintln!("warning: {warning}");
    }
    Ok((map.into_datasets(), skipped))
}

fn write_output(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => {
            if let Some(parent) = path.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent)?;
                }
            }
            std::fs::write(path, bytes)
                .with_context(|| format!("writing {}", path.display()))
        }
        None => {
            std::io::stdout().write_all(bytes)?;
            Ok(())
        }
    }
}

pub fn parse_feature_set(name: &str) -> Result<FeatureSet> {
    FeatureSet::parse(name).ok_or_else(|| {
        anyhow!(
            "unknown feature set '{name}'; expected one of: {}",
            FeatureSet::ALL_NAMES.join(", ")
        )
    })
}

pub fn parse_model_kind(name: &str) -> Result<ModelKind> {
    ModelKind::parse(name).ok_or_else(|| {
        anyhow!(
            "unknown model '{name}'; expected one of: {}",
            ModelKind::ALL_NAMES.join(", ")
        )
    })
}

pub fn parse_target(name: &str) -> Result<Target> {
    Target::parse(name)
        .ok_or_else(|| anyhow!("unknown target '{name}'; expected one of: diff, total"))
}

pub fn parse_fit_method(name: &str) -> Result<FitMethod> {
    match name {
        "ols" => Ok(FitMethod::LeastSquares),
        "mle" => Ok(FitMethod::PoissonMle),
        _ => bail!("unknown fit method '{name}'; expected one of: ols, mle"),
    }
}

// --- ingest -----------------------------------------------------------------

#[derive(Serialize)]
struct SeasonSummary {
    season: String,
    n_matches: usize,
    n_teams: usize,
    n_rounds: usize,
    complete: bool,
}

#[derive(Serialize)]
struct LeagueSummary {
    league: String,
    seasons: Vec<SeasonSummary>,
}

#[derive(Serialize)]
struct IngestSummary {
    n_matches: usize,
    skipped_blank_lines: usize,
    leagues: Vec<LeagueSummary>,
    warnings: Vec<String>,
}

pub fn cmd_ingest(inputs: &[PathBuf], out: Option<&Path>) -> Result<()> {
    if inputs.is_empty() {
        bail!("at least one --input file is required");
    }
    let mut records = Vec::new();
    let mut skipped = 0;
    for path in inputs {
        let outcome = parse_matches_file(path)
            .with_context(|| format!("parsing {}", path.display()))?;
        records.extend(outcome.records);
        skipped += outcome.skipped_blank_lines;
    }
    let map = build_seasons(records);

    let mut leagues: BTreeMap<String, Vec<SeasonSummary>> = BTreeMap::new();
    let mut n_matches = 0;
    for ds in map.seasons.values() {
        n_matches += ds.matches.len();
        leagues
            .entry(ds.league.clone())
            .or_default()
            .push(SeasonSummary {
                season: ds.season.clone(),
                n_matches: ds.matches.len(),
                n_teams: ds.n_teams,
                n_rounds: ds.n_rounds,
                complete: ds.complete,
            });
    }
    let summary = IngestSummary {
        n_matches,
        skipped_blank_lines: skipped,
        leagues: leagues
            .into_iter()
            .map(|(league, seasons)| LeagueSummary { league, seasons })
            .collect(),
        warnings: map.warnings.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&summary)?;
    bytes.push(b'\n');
    write_output(out, &bytes)
}

// --- synth -------------------------------------------------------------------

pub fn cmd_synth(config: &GeneratorConfig, out: Option<&Path>) -> Result<()> {
    let output = generate(config)?;
    let mut bytes = Vec::new();
    write_matches_csv(&mut bytes, &output.records)?;
    write_output(out, &bytes)
}

// --- autocorr ----------------------------------------------------------------

pub fn cmd_autocorr(
    inputs: &[PathBuf],
    max_lag: usize,
    home_adjust: bool,
    normalize: bool,
    out: Option<&Path>,
) -> Result<()> {
    let (datasets, _) = load_datasets(inputs)?;
    let refs: Vec<&SeasonDataset> = datasets.iter().collect();
    let mut series = autocorrelation(&refs, max_lag, home_adjust)?;
    if normalize {
        series = series.normalized();
    }
    if let Some((slope, se)) = series.flatness_slope() {
        eprintln!("slope vs lag: {slope:.6} +- {se:.6} (weighted least squares)");
    }
    let mut bytes = Vec::new();
    write_autocorr_csv(&mut bytes, &series)?;
    write_output(out, &bytes)
}

// --- features ------------------------------------------------------------------

pub fn cmd_features(
    inputs: &[PathBuf],
    set: FeatureSet,
    home_adjust: bool,
    out: Option<&Path>,
) -> Result<()> {
    let (datasets, _) = load_datasets(inputs)?;
    let refs: Vec<&SeasonDataset> = datasets.iter().collect();
    let spec = FeatureSetSpec {
        set,
        home_adjust,
        standardize: false,
    };
    let table = build_feature_table(&refs, &spec)?;
    let mut bytes = Vec::new();
    write_feature_csv(&mut bytes, &table)?;
    write_output(out, &bytes)
}

// --- evaluate ------------------------------------------------------------------

pub struct EvaluateParams {
    pub inputs: Vec<PathBuf>,
    pub model: ModelKind,
    pub features: FeatureSet,
    pub target: Target,
    pub fit_method: FitMethod,
    pub home_adjust: bool,
    pub standardize: bool,
    pub per_league: bool,
    pub options: EvalOptions,
    pub jobs: usize,
    pub out: PathBuf,
}

/// Runs the folds of one cross-validation, in parallel when jobs != 1.
/// Per-fold seeds derive from the master seed, so the aggregated report is
/// identical however many workers run.
fn run_folds(run: &CvRun, jobs: usize) -> Result<Vec<FoldOutcome>> {
    let rounds: Vec<u32> = run.rounds().to_vec();
    let fold = |round: u32| {
        run.run_fold(round).map_err(|e| EvalError::FoldFailed {
            round,
            message: e.to_string(),
        })
    };
    let outcomes: Result<Vec<FoldOutcome>, EvalError> = if jobs == 1 {
        rounds.iter().map(|&r| fold(r)).collect()
    } else {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(jobs) // 0 lets the pool pick the core count
            .build()
            .context("building worker pool")?;
        pool.install(|| rounds.par_iter().map(|&r| fold(r)).collect())
    };
    Ok(outcomes?)
}

/// Unfloored empirical class distribution of the evaluation rows.
pub fn empirical_distribution(rows: &[FeatureRow], target: Target) -> OutcomeDistribution {
    let range = target.class_range();
    if rows.is_empty() {
        return OutcomeDistribution::uniform(range);
    }
    let mut weights = vec![0.0; range.len()];
    for row in rows {
        weights[range.index(row.label(target)).expect("clipped label")] += 1.0;
    }
    OutcomeDistribution::from_weights(range, weights)
}

fn evaluate_group(
    datasets: &[&SeasonDataset],
    params: &EvaluateParams,
    league: Option<&str>,
) -> Result<(CvReport, OutcomeDistribution)> {
    let mut config = ModelConfig::new(params.model);
    config.poisson_method = params.fit_method;
    let spec = FeatureSetSpec {
        set: params.features,
        home_adjust: params.home_adjust,
        standardize: params.standardize,
    };
    let run = CvRun::new(datasets, config, spec, params.target, params.options)?;
    let outcomes = run_folds(&run, params.jobs)?;
    let mut report = run.aggregate(outcomes);
    report.league = league.map(str::to_string);
    let empirical = empirical_distribution(&run.table().rows, params.target);
    Ok((report, empirical))
}

pub fn cmd_evaluate(params: &EvaluateParams) -> Result<()> {
    let (datasets, _) = load_datasets(&params.inputs)?;
    let refs: Vec<&SeasonDataset> = datasets.iter().collect();

    let reports = if params.per_league {
        let mut by_league: BTreeMap<&str, Vec<&SeasonDataset>> = BTreeMap::new();
        for ds in &refs {
            by_league.entry(ds.league.as_str()).or_default().push(ds);
        }
        let mut reports = Vec::new();
        for (league, group) in by_league {
            reports.push(evaluate_group(&group, params, Some(league))?);
        }
        reports
    } else {
        vec![evaluate_group(&refs, params, None)?]
    };

    write_reports(&params.out, &reports)?;
    let summaries: Vec<CvReport> = reports.iter().map(|(r, _)| r.clone()).collect();
    print!("{}", summary_csv(&summaries));
    eprintln!("report written to {}", params.out.display());
    Ok(())
}

// --- predict -------------------------------------------------------------------

pub struct PredictParams {
    pub inputs: Vec<PathBuf>,
    pub model: ModelKind,
    pub features: FeatureSet,
    pub target: Target,
    pub fit_method: FitMethod,
    pub home_adjust: bool,
    pub standardize: bool,
    pub seed: u64,
    pub league: Option<String>,
    pub season: Option<String>,
    pub home: String,
    pub away: String,
    pub load_model: Option<PathBuf>,
    pub save_model: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Serialize)]
struct Prediction {
    league: String,
    season: String,
    home_team: String,
    away_team: String,
    model: String,
    features: String,
    target: String,
    classes: Vec<i32>,
    probs: Vec<f64>,
}

pub fn cmd_predict(params: &PredictParams) -> Result<()> {
    let (datasets, _) = load_datasets(&params.inputs)?;
    let ds = select_season(&datasets, params.league.as_deref(), params.season.as_deref())?;

    let (spec, target, model, table) = match &params.load_model {
        Some(path) => {
            let file = load_model(path)?;
            eprintln!(
                "loaded {} model (features {}, target {}) from {}",
                file.model.kind().as_str(),
                file.features.set.as_str(),
                file.target.as_str(),
                path.display()
            );
            let refs: Vec<&SeasonDataset> = datasets.iter().collect();
            let table = build_feature_table(&refs, &file.features)?;
            (file.features, file.target, file.model, table)
        }
        None => {
            let spec = FeatureSetSpec {
                set: params.features,
                home_adjust: params.home_adjust,
                standardize: params.standardize,
            };
            let refs: Vec<&SeasonDataset> = datasets.iter().collect();
            let table = build_feature_table(&refs, &spec)?;
            let model = train_on_table(&table, params, spec)?;
            (spec, params.target, model, table)
        }
    };

    let mut fixture = fixture_row(ds, &params.home, &params.away, &spec, table.id_vocab.as_ref())?;
    if spec.standardize {
        let all: Vec<usize> = (0..table.rows.len()).collect();
        let (mean, sd) = feature_stats(&table.rows, &all);
        fixture = apply_feature_stats(&fixture, &mean, &sd);
    }
    let dist = model.predict(&fixture)?;
    let model_kind = model.kind();

    if let Some(path) = &params.save_model {
        save_model(path, &ModelFile::new(spec, target, model))?;
        eprintln!("model saved to {}", path.display());
    }

    let prediction = Prediction {
        league: ds.league.clone(),
        season: ds.season.clone(),
        home_team: params.home.clone(),
        away_team: params.away.clone(),
        model: model_kind.as_str().to_string(),
        features: spec.set.as_str().to_string(),
        target: target.as_str().to_string(),
        classes: dist.range.classes().collect(),
        probs: dist.probs.clone(),
    };
    let mut bytes = serde_json::to_vec_pretty(&prediction)?;
    bytes.push(b'\n');
    write_output(params.out.as_deref(), &bytes)
}

fn train_on_table(
    table: &FeatureTable,
    params: &PredictParams,
    spec: FeatureSetSpec,
) -> Result<TrainedModel> {
    let mut config = ModelConfig::new(params.model);
    config.poisson_method = params.fit_method;
    let rows: Vec<FeatureRow> = if spec.standardize {
        let all: Vec<usize> = (0..table.rows.len()).collect();
        matchcast_core::model::standardize_rows(&table.rows, &all)
    } else {
        table.rows.clone()
    };
    let refs: Vec<&FeatureRow> = rows.iter().collect();
    let base = BaseModel::fit(&refs, params.target, config.prob_floor);
    Ok(train_model(
        &config,
        table,
        &refs,
        params.target,
        params.seed,
        &base,
    )?)
}

fn select_season<'a>(
    datasets: &'a [SeasonDataset],
    league: Option<&str>,
    season: Option<&str>,
) -> Result<&'a SeasonDataset> {
    let matching: Vec<&SeasonDataset> = datasets
        .iter()
        .filter(|ds| league.is_none_or(|l| ds.league == l))
        .filter(|ds| season.is_none_or(|s| ds.season == s))
        .collect();
    match matching.len() {
        0 => bail!("no season matches the given --league/--season"),
        1 => Ok(matching[0]),
        n => bail!("{n} seasons match; disambiguate with --league and --season"),
    }
}
