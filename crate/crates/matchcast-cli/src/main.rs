//! Command-line front end for season match-result modeling.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use matchcast_cli::commands::{
    self, EvaluateParams, PredictParams,
};
use matchcast_core::eval::EvalOptions;
use matchcast_core::synth::GeneratorConfig;

#[derive(Parser)]
#[command(
    name = "matchcast",
    version,
    about = "Match-result models over season data: ingest, simulate, analyze, evaluate, predict"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InputArgs {
    /// Match CSV file; repeat to merge several files
    #[arg(long = "input", value_name = "FILE", required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct ModelArgs {
    /// Model family: poisson, nn, rf or base
    #[arg(long, default_value = "poisson")]
    model: String,

    /// Feature set: dg_ab, dg_a_dg_b, dg_sg, dg_sg_ids or raw4
    #[arg(long, default_value = "dg_ab")]
    features: String,

    /// Prediction target: diff or total
    #[arg(long, default_value = "diff")]
    target: String,

    /// Poisson coefficient fit: ols or mle
    #[arg(long = "fit-method", default_value = "ols")]
    fit_method: String,

    /// Adjust scoring rates for the season home advantage
    #[arg(long = "home-adjust")]
    home_adjust: bool,

    /// z-score features with training-fold statistics
    #[arg(long)]
    standardize: bool,

    /// Master seed for weight init, batching and bootstrap draws
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Validate match CSV files and print a dataset summary
    Ingest {
        #[command(flatten)]
        input: InputArgs,
        /// Write the JSON summary here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic seasons with known team strengths
    Synth {
        /// Teams per season (even)
        #[arg(long, default_value_t = 18)]
        teams: usize,
        /// Number of seasons
        #[arg(long, default_value_t = 1)]
        seasons: usize,
        /// League identifier in the emitted records
        #[arg(long, default_value = "SYN")]
        league: String,
        /// Expected goals per team against an equal opponent
        #[arg(long = "base-rate", default_value_t = 1.35)]
        base_rate: f64,
        /// Standard deviation of the attack and defense offsets
        #[arg(long, default_value_t = 0.25)]
        spread: f64,
        /// Correlation between a team's attack and defense offsets
        #[arg(long, default_value_t = 1.0)]
        correlation: f64,
        /// Home advantage in goals
        #[arg(long = "home-advantage", default_value_t = 0.3)]
        home_advantage: f64,
        /// Redraw strengths at the season midpoint
        #[arg(long)]
        redraw: bool,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Autocorrelation of per-team goal differences against the game lag
    Autocorr {
        #[command(flatten)]
        input: InputArgs,
        /// Largest game lag to evaluate
        #[arg(long = "dn-max", value_parser = clap::value_parser!(u64).range(1..))]
        dn_max: u64,
        /// Apply the season home-advantage correction
        #[arg(long = "home-adjust")]
        home_adjust: bool,
        /// Divide the series by its lag-pooled mean
        #[arg(long)]
        normalize: bool,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Matchday cross-validation with metrics, confusion matrix and averaged predictions
    Evaluate {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// Hold five seeded-random seasons out of the folds
        #[arg(long = "holdout-seed")]
        holdout_seed: Option<u64>,
        /// Exclude the whole test round from every feature average
        #[arg(long = "strict-leakage")]
        strict_leakage: bool,
        /// Fit the base model per training fold instead of once
        #[arg(long = "per-fold-base")]
        per_fold_base: bool,
        /// Train and report one model per league
        #[arg(long = "per-league")]
        per_league: bool,
        /// Worker threads for fold evaluation (0 = all cores, 1 = sequential)
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Output directory for report.json, summary.csv and plot data
        #[arg(long)]
        out: PathBuf,
    },
    /// Outcome probabilities for one fixture
    Predict {
        #[command(flatten)]
        input: InputArgs,
        #[command(flatten)]
        model: ModelArgs,
        /// League of the fixture (optional when unambiguous)
        #[arg(long)]
        league: Option<String>,
        /// Season of the fixture (optional when unambiguous)
        #[arg(long)]
        season: Option<String>,
        /// Home team identifier
        #[arg(long)]
        home: String,
        /// Away team identifier
        #[arg(long)]
        away: String,
        /// Reuse a saved model instead of training
        #[arg(long = "load-model", value_name = "FILE")]
        load_model: Option<PathBuf>,
        /// Save the trained model as JSON
        #[arg(long = "save-model", value_name = "FILE")]
        save_model: Option<PathBuf>,
        /// Write the prediction JSON here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export leave-one-out feature rows as CSV
    Features {
        #[command(flatten)]
        input: InputArgs,
        /// Feature set: dg_ab, dg_a_dg_b, dg_sg, dg_sg_ids or raw4
        #[arg(long, default_value = "dg_sg")]
        features: String,
        /// Adjust scoring rates for the season home advantage
        #[arg(long = "home-adjust")]
        home_adjust: bool,
        /// Write the CSV here instead of standard output
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn run() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Ingest { input, out } => commands::cmd_ingest(&input.inputs, out.as_deref()),
        Command::Synth {
            teams,
            seasons,
            league,
            base_rate,
            spread,
            correlation,
            home_advantage,
            redraw,
            seed,
            out,
        } => {
            let config = GeneratorConfig {
                league,
                n_teams: teams,
                n_seasons: seasons,
                base_rate,
                attack_spread: spread,
                defense_spread: spread,
                strength_correlation: correlation,
                home_advantage,
                midseason_redraw: redraw,
                seed,
                ..GeneratorConfig::default()
            };
            commands::cmd_synth(&config, out.as_deref())
        }
        Command::Autocorr {
            input,
            dn_max,
            home_adjust,
            normalize,
            out,
        } => commands::cmd_autocorr(
            &input.inputs,
            dn_max as usize,
            home_adjust,
            normalize,
            out.as_deref(),
        ),
        Command::Evaluate {
            input,
            model,
            holdout_seed,
            strict_leakage,
            per_fold_base,
            per_league,
            jobs,
            out,
        } => commands::cmd_evaluate(&EvaluateParams {
            inputs: input.inputs,
            model: commands::parse_model_kind(&model.model)?,
            features: commands::parse_feature_set(&model.features)?,
            target: commands::parse_target(&model.target)?,
            fit_method: commands::parse_fit_method(&model.fit_method)?,
            home_adjust: model.home_adjust,
            standardize: model.standardize,
            per_league,
            options: EvalOptions {
                seed: model.seed,
                holdout_seed,
                strict_leakage,
                per_fold_base,
            },
            jobs,
            out,
        }),
        Command::Predict {
            input,
            model,
            league,
            season,
            home,
            away,
            load_model,
            save_model,
            out,
        } => commands::cmd_predict(&PredictParams {
            inputs: input.inputs,
            model: commands::parse_model_kind(&model.model)?,
            features: commands::parse_feature_set(&model.features)?,
            target: commands::parse_target(&model.target)?,
            fit_method: commands::parse_fit_method(&model.fit_method)?,
            home_adjust: model.home_adjust,
            standardize: model.standardize,
            seed: model.seed,
            league,
            season,
            home,
            away,
            load_model,
            save_model,
            out,
        }),
        Command::Features {
            input,
            features,
            home_adjust,
            out,
        } => commands::cmd_features(
            &input.inputs,
            commands::parse_feature_set(&features)?,
            home_adjust,
            out.as_deref(),
        ),
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
