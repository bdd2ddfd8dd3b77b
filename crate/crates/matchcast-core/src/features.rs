//! Per-match leave-one-out features.
//!
//! For a match i between home team A and away team B, the base features are
//! the average goals scored and conceded by each team over all of its other
//! games of the season (the match itself is excluded, games before and after
//! count equally). These rates combine into per-team expected-goal-difference
//! and total-goals estimators and into the pairwise match-level combinations
//! used by the Poisson score model.
//!
//! Rates can optionally be adjusted for home advantage: half of the season's
//! home advantage is removed from goals scored at home and added to goals
//! scored away (conceded goals oppositely), which removes the effect of how
//! often a team has already played at home.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

use crate::data::SeasonDataset;
use crate::outcome::Target;

/// Leave-one-out scoring/conceding rates for the two teams of one match.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateVector {
    pub x_plus_a: f64,
    pub x_minus_a: f64,
    pub x_plus_b: f64,
    pub x_minus_b: f64,
}

/// Combinations of the rate vector: per-team goal-difference and total-goals
/// rates plus the pairwise match-level estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CombinedFeatures {
    pub x_dg_a: f64,
    pub x_dg_b: f64,
    pub x_sg_a: f64,
    pub x_sg_b: f64,
    /// Expected goal difference of the match: `x_dg_a - x_dg_b`.
    pub x_dg_ab: f64,
    /// Expected total goals of the match: `x_sg_a + x_sg_b - mean_goals`.
    pub x_sg_ab: f64,
    /// Season mean of goals per match over the included games.
    pub mean_goals: f64,
}

/// Season-level home advantage: mean of (home goals − away goals).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HomeAdvantage {
    pub value: f64,
    pub league: String,
    pub season: String,
    /// Match excluded from the average, if any.
    pub excluded_match: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum FeatureError {
    InsufficientGames {
        team: String,
        have: usize,
        need: usize,
    },
    EmptySeason,
    UnknownTeam(String),
}

impl fmt::Display for FeatureError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FeatureError::InsufficientGames { team, have, need } => write!(
                f,
                "team '{team}' has {have} usable games but {need} are required"
            ),
            FeatureError::EmptySeason => write!(f, "season has no included matches"),
            FeatureError::UnknownTeam(team) => write!(f, "unknown team '{team}'"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for FeatureError {}

/// Named feature selections for model training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureSet {
    /// Single pairwise combination `x_dg_ab`.
    PairwiseDiff,
    /// Per-team goal-difference rates `x_dg_a`, `x_dg_b`.
    PerTeamDiff,
    /// Per-team difference and total rates (4 values).
    PerTeamDiffTotal,
    /// As `PerTeamDiffTotal` plus team and season identity codes.
    PerTeamDiffTotalIds,
    /// The four raw scoring/conceding rates.
    RawRates,
}

impl FeatureSet {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "dg_ab" => Some(FeatureSet::PairwiseDiff),
            "dg_a_dg_b" => Some(FeatureSet::PerTeamDiff),
            "dg_sg" => Some(FeatureSet::PerTeamDiffTotal),
            "dg_sg_ids" => Some(FeatureSet::PerTeamDiffTotalIds),
            "raw4" => Some(FeatureSet::RawRates),
            _ => None,
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            FeatureSet::PairwiseDiff => "dg_ab",
            FeatureSet::PerTeamDiff => "dg_a_dg_b",
            FeatureSet::PerTeamDiffTotal => "dg_sg",
            FeatureSet::PerTeamDiffTotalIds => "dg_sg_ids",
            FeatureSet::RawRates => "raw4",
        }
    }

    pub const ALL_NAMES: &'static [&'static str] =
        &["dg_ab", "dg_a_dg_b", "dg_sg", "dg_sg_ids", "raw4"];

    /// Names of the continuous feature columns, in row order.
    pub fn feature_names(&self) -> Vec<&'static str> {
        match self {
            FeatureSet::PairwiseDiff => alloc::vec!["x_dg_ab"],
            FeatureSet::PerTeamDiff => alloc::vec!["x_dg_a", "x_dg_b"],
            FeatureSet::PerTeamDiffTotal | FeatureSet::PerTeamDiffTotalIds => {
                alloc::vec!["x_dg_a", "x_dg_b", "x_sg_a", "x_sg_b"]
            }
            FeatureSet::RawRates => {
                alloc::vec!["x_plus_a", "x_minus_a", "x_plus_b", "x_minus_b"]
            }
        }
    }

    pub fn uses_ids(&self) -> bool {
        matches!(self, FeatureSet::PerTeamDiffTotalIds)
    }
}

/// Full feature configuration: which columns, whether rates are adjusted for
/// home advantage, and whether continuous columns are z-scored per training
/// fold during evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureSetSpec {
    pub set: FeatureSet,
    pub home_adjust: bool,
    pub standardize: bool,
}

impl FeatureSetSpec {
    pub fn new(set: FeatureSet) -> Self {
        FeatureSetSpec {
            set,
            home_adjust: false,
            standardize: false,
        }
    }
}

/// Pairwise match-level estimators consumed by the Poisson score model.
/// Always computed from home-advantage-adjusted rates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairwiseFeatures {
    pub x_dg_ab: f64,
    pub x_sg_ab: f64,
}

/// Team and season identity codes (indices into [`IdVocab`]).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdFeatures {
    pub home: u32,
    pub away: u32,
    pub season: u32,
}

/// One featurized match with its outcome labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRow {
    pub league: String,
    pub season: String,
    pub round: u32,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
    /// Continuous feature values in the order given by
    /// `FeatureSet::feature_names`.
    pub features: Vec<f64>,
    pub pairwise: PairwiseFeatures,
    /// Clipped goal-difference class, home perspective.
    pub label_diff: i32,
    /// Clipped total-goals class.
    pub label_total: i32,
    pub ids: Option<IdFeatures>,
}

impl FeatureRow {
    pub fn label(&self, target: Target) -> i32 {
        match target {
            Target::GoalDiff => self.label_diff,
            Target::TotalGoals => self.label_total,
        }
    }
}

/// Category encodings shared by all rows of a feature table. Team codes are
/// keyed by (league, team) so the same club keeps one code across seasons;
/// season codes are keyed by the season string.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdVocab {
    pub teams: Vec<(String, String)>,
    pub seasons: Vec<String>,
}

impl IdVocab {
    fn build(datasets: &[&SeasonDataset]) -> Self {
        let mut teams: Vec<(String, String)> = Vec::new();
        let mut seasons: Vec<String> = Vec::new();
        for ds in datasets {
            for t in &ds.teams {
                let key = (ds.league.clone(), t.clone());
                if let Err(pos) = teams.binary_search(&key) {
                    teams.insert(pos, key);
                }
            }
            if let Err(pos) = seasons.binary_search(&ds.season) {
                seasons.insert(pos, ds.season.clone());
            }
        }
        IdVocab { teams, seasons }
    }

    pub fn team_code(&self, league: &str, team: &str) -> Option<u32> {
        self.teams
            .binary_search_by(|(l, t)| (l.as_str(), t.as_str()).cmp(&(league, team)))
            .ok()
            .map(|i| i as u32)
    }

    pub fn season_code(&self, season: &str) -> Option<u32> {
        self.seasons
            .binary_search_by(|s| s.as_str().cmp(season))
            .ok()
            .map(|i| i as u32)
    }

    pub fn n_teams(&self) -> usize {
        self.teams.len()
    }

    pub fn n_seasons(&self) -> usize {
        self.seasons.len()
    }
}

/// All feature rows for a set of seasons, plus the metadata needed to encode
/// them for a model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTable {
    pub spec: FeatureSetSpec,
    pub feature_names: Vec<String>,
    pub rows: Vec<FeatureRow>,
    pub id_vocab: Option<IdVocab>,
}

// --- rate computation ------------------------------------------------------

/// A team's games within one season, precomputed for repeated exclusion scans.
struct TeamGames {
    /// (match index, round, is_home, goals_for, goals_against)
    games: Vec<(usize, u32, bool, u32, u32)>,
}

fn collect_team_games(ds: &SeasonDataset) -> BTreeMap<&str, TeamGames> {
    let mut map: BTreeMap<&str, TeamGames> = BTreeMap::new();
    for (i, m) in ds.matches.iter().enumerate() {
        map.entry(m.home_team.as_str())
            .or_insert_with(|| TeamGames { games: Vec::new() })
            .games
            .push((i, m.round, true, m.home_goals, m.away_goals));
        map.entry(m.away_team.as_str())
            .or_insert_with(|| TeamGames { games: Vec::new() })
            .games
            .push((i, m.round, false, m.away_goals, m.home_goals));
    }
    map
}

/// Which matches to leave out of an average.
#[derive(Clone, Copy, Default)]
struct Exclusion {
    match_index: Option<usize>,
    round: Option<u32>,
}

impl Exclusion {
    fn excludes(&self, match_index: usize, round: u32) -> bool {
        self.match_index == Some(match_index) || self.round == Some(round)
    }
}

/// Sums a team's goals for/against over its non-excluded games, optionally
/// shifting each game by ±HA/2 depending on venue.
fn team_rates(
    team: &str,
    games: &TeamGames,
    excl: Exclusion,
    home_advantage: Option<f64>,
) -> Result<(f64, f64), FeatureError> {
    let mut sum_for = 0.0;
    let mut sum_against = 0.0;
    let mut n = 0usize;
    for &(idx, round, is_home, gf, ga) in &games.games {
        if excl.excludes(idx, round) {
            continue;
        }
        let (mut f, mut a) = (gf as f64, ga as f64);
        if let Some(ha) = home_advantage {
            let shift = ha / 2.0;
            if is_home {
                f -= shift;
                a += shift;
            } else {
                f += shift;
                a -= shift;
            }
        }
        sum_for += f;
        sum_against += a;
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::InsufficientGames {
            team: team.to_string(),
            have: games.games.len(),
            need: if excl.match_index.is_some() { 2 } else { 1 },
        });
    }
    Ok((sum_for / n as f64, sum_against / n as f64))
}

fn rate_vector(
    ds: &SeasonDataset,
    match_index: usize,
    excl: Exclusion,
    home_advantage: Option<f64>,
) -> Result<RateVector, FeatureError> {
    let games = collect_team_games(ds);
    let m = &ds.matches[match_index];
    let (x_plus_a, x_minus_a) = team_rates(
        &m.home_team,
        &games[m.home_team.as_str()],
        excl,
        home_advantage,
    )?;
    let (x_plus_b, x_minus_b) = team_rates(
        &m.away_team,
        &games[m.away_team.as_str()],
        excl,
        home_advantage,
    )?;
    Ok(RateVector {
        x_plus_a,
        x_minus_a,
        x_plus_b,
        x_minus_b,
    })
}

/// Leave-one-out scoring/conceding rates for match `match_index`.
///
/// Each component averages the team's goals over all of its other games of
/// the season; the denominator is the team's game count minus one. Whether a
/// game lies before or after the excluded match is irrelevant.
pub fn compute_rates(ds: &SeasonDataset, match_index: usize) -> Result<RateVector, FeatureError> {
    rate_vector(
        ds,
        match_index,
        Exclusion {
            match_index: Some(match_index),
            round: None,
        },
        None,
    )
}

/// Home-advantage-adjusted leave-one-out rates for match `match_index`.
///
/// Goals scored at home are reduced by HA/2 and away goals increased by HA/2
/// (conceded goals oppositely) before averaging; the home advantage itself is
/// computed with match `match_index` excluded.
pub fn adjusted_rates(ds: &SeasonDataset, match_index: usize) -> Result<RateVector, FeatureError> {
    let excl = Exclusion {
        match_index: Some(match_index),
        round: None,
    };
    let ha = home_advantage(ds, Some(match_index))?;
    rate_vector(ds, match_index, excl, Some(ha.value))
}

/// Season home advantage: mean of (home goals − away goals) over all matches
/// except the optionally excluded one.
pub fn home_advantage(
    ds: &SeasonDataset,
    excluded: Option<usize>,
) -> Result<HomeAdvantage, FeatureError> {
    let value = mean_over_matches(ds, Exclusion {
        match_index: excluded,
        round: None,
    })?
    .0;
    Ok(HomeAdvantage {
        value,
        league: ds.league.clone(),
        season: ds.season.clone(),
        excluded_match: excluded,
    })
}

/// Season mean of total goals per match, excluding the given match.
pub fn mean_goals(ds: &SeasonDataset, excluded: Option<usize>) -> Result<f64, FeatureError> {
    Ok(mean_over_matches(ds, Exclusion {
        match_index: excluded,
        round: None,
    })?
    .1)
}

/// (mean goal difference, mean total goals) over non-excluded matches.
fn mean_over_matches(ds: &SeasonDataset, excl: Exclusion) -> Result<(f64, f64), FeatureError> {
    let mut diff_sum = 0i64;
    let mut goal_sum = 0u64;
    let mut n = 0usize;
    for (i, m) in ds.matches.iter().enumerate() {
        if excl.excludes(i, m.round) {
            continue;
        }
        diff_sum += m.goal_diff() as i64;
        goal_sum += m.total_goals() as u64;
        n += 1;
    }
    if n == 0 {
        return Err(FeatureError::EmptySeason);
    }
    Ok((diff_sum as f64 / n as f64, goal_sum as f64 / n as f64))
}

/// Combines a rate vector into per-team and pairwise estimators.
pub fn combine(rates: &RateVector, mean_goals: f64) -> CombinedFeatures {
    let x_dg_a = rates.x_plus_a - rates.x_minus_a;
    let x_dg_b = rates.x_plus_b - rates.x_minus_b;
    let x_sg_a = rates.x_plus_a + rates.x_minus_a;
    let x_sg_b = rates.x_plus_b + rates.x_minus_b;
    CombinedFeatures {
        x_dg_a,
        x_dg_b,
        x_sg_a,
        x_sg_b,
        x_dg_ab: x_dg_a - x_dg_b,
        x_sg_ab: x_sg_a + x_sg_b - mean_goals,
        mean_goals,
    }
}

// --- feature table construction ---------------------------------------------

/// Builds one feature row per match across all given seasons.
pub fn build_feature_table(
    datasets: &[&SeasonDataset],
    spec: &FeatureSetSpec,
) -> Result<FeatureTable, FeatureError> {
    build_feature_table_excluding(datasets, spec, None)
}

/// As [`build_feature_table`], but every average additionally excludes all
/// matches of `exclude_round` (strict leakage mode: features used around a
/// test matchday must not see any of its results).
pub fn build_feature_table_excluding(
    datasets: &[&SeasonDataset],
    spec: &FeatureSetSpec,
    exclude_round: Option<u32>,
) -> Result<FeatureTable, FeatureError> {
    let id_vocab = spec.set.uses_ids().then(|| IdVocab::build(datasets));
    let mut rows = Vec::new();
    for ds in datasets {
        let games = collect_team_games(ds);
        for (i, m) in ds.matches.iter().enumerate() {
            let excl = Exclusion {
                match_index: Some(i),
                round: exclude_round,
            };
            let (ha_value, mg) = {
                let (d, g) = mean_over_matches(ds, excl)?;
                (d, g)
            };
            let home_games = &games[m.home_team.as_str()];
            let away_games = &games[m.away_team.as_str()];
            let pair_rates = |ha: Option<f64>| -> Result<RateVector, FeatureError> {
                let (x_plus_a, x_minus_a) = team_rates(&m.home_team, home_games, excl, ha)?;
                let (x_plus_b, x_minus_b) = team_rates(&m.away_team, away_games, excl, ha)?;
                Ok(RateVector {
                    x_plus_a,
                    x_minus_a,
                    x_plus_b,
                    x_minus_b,
                })
            };
            let raw = pair_rates(None)?;
            let adjusted = pair_rates(Some(ha_value))?;

            let pairwise_combined = combine(&adjusted, mg);
            let base_rates = if spec.home_adjust { &adjusted } else { &raw };
            let combined = combine(base_rates, mg);

            let features = match spec.set {
                FeatureSet::PairwiseDiff => alloc::vec![combined.x_dg_ab],
                FeatureSet::PerTeamDiff => alloc::vec![combined.x_dg_a, combined.x_dg_b],
                FeatureSet::PerTeamDiffTotal | FeatureSet::PerTeamDiffTotalIds => alloc::vec![
                    combined.x_dg_a,
                    combined.x_dg_b,
                    combined.x_sg_a,
                    combined.x_sg_b
                ],
                FeatureSet::RawRates => alloc::vec![
                    base_rates.x_plus_a,
                    base_rates.x_minus_a,
                    base_rates.x_plus_b,
                    base_rates.x_minus_b
                ],
            };

            let ids = id_vocab.as_ref().map(|v| IdFeatures {
                home: v.team_code(&ds.league, &m.home_team).expect("team in vocab"),
                away: v.team_code(&ds.league, &m.away_team).expect("team in vocab"),
                season: v.season_code(&ds.season).expect("season in vocab"),
            });

            rows.push(FeatureRow {
                league: ds.league.clone(),
                season: ds.season.clone(),
                round: m.round,
                home_team: m.home_team.clone(),
                away_team: m.away_team.clone(),
                home_goals: m.home_goals,
                away_goals: m.away_goals,
                features,
                pairwise: PairwiseFeatures {
                    x_dg_ab: pairwise_combined.x_dg_ab,
                    x_sg_ab: pairwise_combined.x_sg_ab,
                },
                label_diff: Target::GoalDiff.label(m.home_goals, m.away_goals),
                label_total: Target::TotalGoals.label(m.home_goals, m.away_goals),
                ids,
            });
        }
    }
    Ok(FeatureTable {
        spec: *spec,
        feature_names: spec
            .set
            .feature_names()
            .into_iter()
            .map(|s| s.to_string())
            .collect(),
        rows,
        id_vocab,
    })
}

/// Features for a hypothetical fixture between two teams of a season.
///
/// Unlike played matches nothing is excluded: rates average over all of each
/// team's games and the season means use every match. Goal and label fields
/// are placeholders (the row is a prediction input, not a training sample).
pub fn fixture_row(
    ds: &SeasonDataset,
    home_team: &str,
    away_team: &str,
    spec: &FeatureSetSpec,
    id_vocab: Option<&IdVocab>,
) -> Result<FeatureRow, FeatureError> {
    let games = collect_team_games(ds);
    for team in [home_team, away_team] {
        if !games.contains_key(team) {
            return Err(FeatureError::UnknownTeam(team.to_string()));
        }
    }
    let excl = Exclusion::default();
    let (ha_value, mg) = mean_over_matches(ds, excl)?;

    let rates_for = |ha: Option<f64>| -> Result<RateVector, FeatureError> {
        let (f, a) = team_rates(home_team, &games[home_team], excl, ha)?;
        let (f2, a2) = team_rates(away_team, &games[away_team], excl, ha)?;
        Ok(RateVector {
            x_plus_a: f,
            x_minus_a: a,
            x_plus_b: f2,
            x_minus_b: a2,
        })
    };
    let raw = rates_for(None)?;
    let adjusted = rates_for(Some(ha_value))?;
    let pairwise_combined = combine(&adjusted, mg);
    let base_rates = if spec.home_adjust { &adjusted } else { &raw };
    let combined = combine(base_rates, mg);

    let features = match spec.set {
        FeatureSet::PairwiseDiff => alloc::vec![combined.x_dg_ab],
        FeatureSet::PerTeamDiff => alloc::vec![combined.x_dg_a, combined.x_dg_b],
        FeatureSet::PerTeamDiffTotal | FeatureSet::PerTeamDiffTotalIds => alloc::vec![
            combined.x_dg_a,
            combined.x_dg_b,
            combined.x_sg_a,
            combined.x_sg_b
        ],
        FeatureSet::RawRates => alloc::vec![
            base_rates.x_plus_a,
            base_rates.x_minus_a,
            base_rates.x_plus_b,
            base_rates.x_minus_b
        ],
    };

    let ids = match (spec.set.uses_ids(), id_vocab) {
        (true, Some(v)) => Some(IdFeatures {
            home: v
                .team_code(&ds.league, home_team)
                .ok_or_else(|| FeatureError::UnknownTeam(home_team.to_string()))?,
            away: v
                .team_code(&ds.league, away_team)
                .ok_or_else(|| FeatureError::UnknownTeam(away_team.to_string()))?,
            season: v
                .season_code(&ds.season)
                .ok_or(FeatureError::EmptySeason)?,
        }),
        _ => None,
    };

    Ok(FeatureRow {
        league: ds.league.clone(),
        season: ds.season.clone(),
        round: 0,
        home_team: home_team.to_string(),
        away_team: away_team.to_string(),
        home_goals: 0,
        away_goals: 0,
        features,
        pairwise: PairwiseFeatures {
            x_dg_ab: pairwise_combined.x_dg_ab,
            x_sg_ab: pairwise_combined.x_sg_ab,
        },
        label_diff: 0,
        label_total: 0,
        ids,
    })
}
