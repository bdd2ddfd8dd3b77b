//! Independent-Poisson score model.
//!
//! For each match the expected goals of the home and away side are linear
//! superpositions of the pairwise features (`x_dg_ab`, `x_sg_ab`): three
//! coefficients per side, fitted on all training matches against the actual
//! goal counts. Goals of the two teams are treated as uncorrelated, so the
//! joint score distribution is a product of two Poisson pmfs on a truncated
//! grid, which marginalizes to goal-difference and total-goals distributions.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureRow, PairwiseFeatures};
use crate::outcome::{OutcomeDistribution, Target};

/// Per-team grid size: goals 0..=G_MAX are enumerated per side.
pub const DEFAULT_G_MAX: usize = 20;
/// Smallest allowed expected-goals value; keeps the pmf non-degenerate when
/// the linear superposition goes non-positive.
pub const DEFAULT_LAMBDA_FLOOR: f64 = 0.05;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoissonError {
    NonPositiveLambda,
    SingularDesign,
    TooFewRows { have: usize, need: usize },
}

impl fmt::Display for PoissonError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PoissonError::NonPositiveLambda => write!(f, "lambda must be positive"),
            PoissonError::SingularDesign => {
                write!(f, "normal equations are rank-deficient; features are collinear")
            }
            PoissonError::TooFewRows { have, need } => {
                write!(f, "{have} fitting rows given but at least {need} are required")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for PoissonError {}

/// Poisson probability mass `P(G) = λ^G e^{-λ} / G!`, evaluated in log space
/// so large goal counts stay stable.
pub fn poisson_pmf(lambda: f64, goals: u32) -> Result<f64, PoissonError> {
    if !(lambda > 0.0) {
        return Err(PoissonError::NonPositiveLambda);
    }
    let g = goals as f64;
    let log_p = g * libm::log(lambda) - lambda - libm::lgamma(g + 1.0);
    Ok(libm::exp(log_p))
}

/// One side's linear coefficients: goals ≈ a_diff·x_dg + a_sum·x_sg + a_0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CoefficientTriple {
    pub a_diff: f64,
    pub a_sum: f64,
    pub a_0: f64,
}

/// Fitted coefficients for home and away goals. The away fit sees the goal
/// difference feature with flipped sign (the away team's perspective).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoissonCoefficients {
    pub home: CoefficientTriple,
    pub away: CoefficientTriple,
}

/// How the coefficients are estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitMethod {
    /// Ordinary least squares of the superposition against raw goal counts.
    LeastSquares,
    /// Poisson maximum likelihood with identity link (Fisher scoring),
    /// started from the least-squares solution.
    PoissonMle,
}

/// One fitting observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitSample {
    pub x_dg_ab: f64,
    pub x_sg_ab: f64,
    pub home_goals: f64,
    pub away_goals: f64,
}

impl FitSample {
    pub fn from_row(row: &FeatureRow) -> Self {
        FitSample {
            x_dg_ab: row.pairwise.x_dg_ab,
            x_sg_ab: row.pairwise.x_sg_ab,
            home_goals: row.home_goals as f64,
            away_goals: row.away_goals as f64,
        }
    }
}

/// Fits home and away coefficient triples.
///
/// With `use_sum_term = false` the total-goals feature is dropped and its
/// coefficient fixed at zero (the single-feature model variant).
pub fn fit_coefficients(
    samples: &[FitSample],
    use_sum_term: bool,
    method: FitMethod,
) -> Result<PoissonCoefficients, PoissonError> {
    let k = if use_sum_term { 3 } else { 2 };
    if samples.len() < k {
        return Err(PoissonError::TooFewRows {
            have: samples.len(),
            need: k,
        });
    }
    let home = fit_side(samples, use_sum_term, method, false)?;
    let away = fit_side(samples, use_sum_term, method, true)?;
    Ok(PoissonCoefficients { home, away })
}

fn design(sample: &FitSample, use_sum_term: bool, away: bool) -> ([f64; 3], f64) {
    let sign = if away { -1.0 } else { 1.0 };
    let x = if use_sum_term {
        [sign * sample.x_dg_ab, sample.x_sg_ab, 1.0]
    } else {
        [sign * sample.x_dg_ab, 1.0, 0.0]
    };
    let y = if away {
        sample.away_goals
    } else {
        sample.home_goals
    };
    (x, y)
}

fn fit_side(
    samples: &[FitSample],
    use_sum_term: bool,
    method: FitMethod,
    away: bool,
) -> Result<CoefficientTriple, PoissonError> {
    let k = if use_sum_term { 3 } else { 2 };
    let mut xtx = [[0.0f64; 3]; 3];
    let mut xty = [0.0f64; 3];
    for s in samples {
        let (x, y) = design(s, use_sum_term, away);
        for i in 0..k {
            for j in 0..k {
                xtx[i][j] += x[i] * x[j];
            }
            xty[i] += x[i] * y;
        }
    }
    let mut coef = solve(xtx, xty, k)?;

    if method == FitMethod::PoissonMle {
        coef = fisher_scoring(samples, use_sum_term, away, coef, k)?;
    }

    Ok(pack(coef, use_sum_term))
}

fn pack(coef: [f64; 3], use_sum_term: bool) -> CoefficientTriple {
    if use_sum_term {
        CoefficientTriple {
            a_diff: coef[0],
            a_sum: coef[1],
            a_0: coef[2],
        }
    } else {
        CoefficientTriple {
            a_diff: coef[0],
            a_sum: 0.0,
            a_0: coef[1],
        }
    }
}

/// Identity-link Poisson scoring iterations; the rate is floored at
/// `DEFAULT_LAMBDA_FLOOR` inside the weights so near-zero predictions cannot
/// blow up the working weights.
fn fisher_scoring(
    samples: &[FitSample],
    use_sum_term: bool,
    away: bool,
    start: [f64; 3],
    k: usize,
) -> Result<[f64; 3], PoissonError> {
    let mut coef = start;
    for _ in 0..100 {
        let mut info = [[0.0f64; 3]; 3];
        let mut score = [0.0f64; 3];
        for s in samples {
            let (x, y) = design(s, use_sum_term, away);
            let mut lambda = 0.0;
            for i in 0..k {
                lambda += coef[i] * x[i];
            }
            let lambda = lambda.max(DEFAULT_LAMBDA_FLOOR);
            for i in 0..k {
                score[i] += x[i] * (y - lambda) / lambda;
                for j in 0..k {
                    info[i][j] += x[i] * x[j] / lambda;
                }
            }
        }
        let step = solve(info, score, k)?;
        let mut max_step = 0.0f64;
        for i in 0..k {
            coef[i] += step[i];
            max_step = max_step.max(step[i].abs());
        }
        if max_step < 1e-10 {
            break;
        }
    }
    Ok(coef)
}

/// Solves a k×k (k ≤ 3) linear system by Gaussian elimination with partial
/// pivoting.
fn solve(mut a: [[f64; 3]; 3], mut b: [f64; 3], k: usize) -> Result<[f64; 3], PoissonError> {
    let mut scale = 0.0f64;
    for row in a.iter().take(k) {
        for v in row.iter().take(k) {
            scale = scale.max(v.abs());
        }
    }
    if scale == 0.0 {
        return Err(PoissonError::SingularDesign);
    }
    for col in 0..k {
        let mut pivot = col;
        for row in col + 1..k {
            if a[row][col].abs() > a[pivot][col].abs() {
                pivot = row;
            }
        }
        if a[pivot][col].abs() <= 1e-12 * scale {
            return Err(PoissonError::SingularDesign);
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..k {
            let factor = a[row][col] / a[col][col];
            for j in col..k {
                a[row][j] -= factor * a[col][j];
            }
            b[row] -= factor * b[col];
        }
    }
    let mut x = [0.0f64; 3];
    for col in (0..k).rev() {
        let mut sum = b[col];
        for j in col + 1..k {
            sum -= a[col][j] * x[j];
        }
        x[col] = sum / a[col][col];
    }
    Ok(x)
}

/// Truncated joint distribution of the two sides' goals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreDistribution {
    pub lambda_home: f64,
    pub lambda_away: f64,
    pub g_max: usize,
    /// Row-major grid: `joint[gh * (g_max + 1) + ga]`, renormalized over the
    /// truncated support.
    pub joint: Vec<f64>,
}

impl ScoreDistribution {
    pub fn prob(&self, home_goals: usize, away_goals: usize) -> f64 {
        self.joint[home_goals * (self.g_max + 1) + away_goals]
    }
}

/// Evaluates both expected-goals superpositions for a match and builds the
/// joint score grid. Non-positive predictions are clamped to `lambda_floor`.
pub fn predict_score_distribution(
    coefficients: &PoissonCoefficients,
    pairwise: &PairwiseFeatures,
    g_max: usize,
    lambda_floor: f64,
) -> ScoreDistribution {
    let h = &coefficients.home;
    let a = &coefficients.away;
    let lambda_home =
        (h.a_diff * pairwise.x_dg_ab + h.a_sum * pairwise.x_sg_ab + h.a_0).max(lambda_floor);
    let lambda_away =
        (a.a_diff * -pairwise.x_dg_ab + a.a_sum * pairwise.x_sg_ab + a.a_0).max(lambda_floor);
    score_grid(lambda_home, lambda_away, g_max)
}

/// Joint grid for known rates.
pub fn score_grid(lambda_home: f64, lambda_away: f64, g_max: usize) -> ScoreDistribution {
    let n = g_max + 1;
    let pmf = |lambda: f64| -> Vec<f64> {
        (0..n as u32)
            .map(|g| poisson_pmf(lambda, g).expect("lambda is positive"))
            .collect()
    };
    let home = pmf(lambda_home);
    let away = pmf(lambda_away);
    let mut joint = vec![0.0; n * n];
    let mut total = 0.0;
    for gh in 0..n {
        for ga in 0..n {
            let p = home[gh] * away[ga];
            joint[gh * n + ga] = p;
            total += p;
        }
    }
    for p in &mut joint {
        *p /= total;
    }
    ScoreDistribution {
        lambda_home,
        lambda_away,
        g_max,
        joint,
    }
}

/// Marginal distribution of the goal difference (home − away), with mass
/// beyond ±10 folded onto the boundary classes.
pub fn marginalize_diff(sd: &ScoreDistribution) -> OutcomeDistribution {
    let range = Target::GoalDiff.class_range();
    let mut probs = vec![0.0; range.len()];
    let n = sd.g_max + 1;
    for gh in 0..n {
        for ga in 0..n {
            let class = range.clip(gh as i64 - ga as i64);
            probs[range.index(class).expect("clipped into range")] += sd.joint[gh * n + ga];
        }
    }
    OutcomeDistribution { range, probs }
}

/// Marginal distribution of the total number of goals, with mass beyond 16
/// folded onto the top class.
pub fn marginalize_total(sd: &ScoreDistribution) -> OutcomeDistribution {
    let range = Target::TotalGoals.class_range();
    let mut probs = vec![0.0; range.len()];
    let n = sd.g_max + 1;
    for gh in 0..n {
        for ga in 0..n {
            let class = range.clip(gh as i64 + ga as i64);
            probs[range.index(class).expect("clipped into range")] += sd.joint[gh * n + ga];
        }
    }
    OutcomeDistribution { range, probs }
}

/// A fitted Poisson score model ready to predict one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonModel {
    pub coefficients: PoissonCoefficients,
    pub use_sum_term: bool,
    pub method: FitMethod,
    pub g_max: usize,
    pub lambda_floor: f64,
    pub target: Target,
}

impl PoissonModel {
    pub fn fit(
        rows: &[&FeatureRow],
        target: Target,
        use_sum_term: bool,
        method: FitMethod,
    ) -> Result<Self, PoissonError> {
        let samples: Vec<FitSample> = rows.iter().map(|r| FitSample::from_row(r)).collect();
        let coefficients = fit_coefficients(&samples, use_sum_term, method)?;
        Ok(PoissonModel {
            coefficients,
            use_sum_term,
            method,
            g_max: DEFAULT_G_MAX,
            lambda_floor: DEFAULT_LAMBDA_FLOOR,
            target,
        })
    }

    pub fn predict(&self, row: &FeatureRow) -> OutcomeDistribution {
        let sd = predict_score_distribution(
            &self.coefficients,
            &row.pairwise,
            self.g_max,
            self.lambda_floor,
        );
        match self.target {
            Target::GoalDiff => marginalize_diff(&sd),
            Target::TotalGoals => marginalize_total(&sd),
        }
    }
}
