//! Match records, per-season datasets and per-team game sequences.
//!
//! All types are immutable after construction and safe to share across
//! parallel workers.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use serde::{Deserialize, Serialize};

/// One played match.
///
/// `date` is an optional ISO-8601 calendar date (`YYYY-MM-DD`); because the
/// format is lexicographically ordered, string comparison gives chronological
/// order. `round` is the scheduled matchday, starting at 1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchRecord {
    pub league: String,
    pub season: String,
    pub round: u32,
    pub date: Option<String>,
    pub home_team: String,
    pub away_team: String,
    pub home_goals: u32,
    pub away_goals: u32,
}

impl MatchRecord {
    /// Validates the record-level invariants: distinct teams and a positive
    /// round number. Goal counts are non-negative by type.
    pub fn validate(&self) -> Result<(), DataError> {
        if self.home_team == self.away_team {
            return Err(DataError::InvalidRecord {
                reason: format!("home and away team are both '{}'", self.home_team),
            });
        }
        if self.round == 0 {
            return Err(DataError::InvalidRecord {
                reason: "round must be a positive integer".to_string(),
            });
        }
        Ok(())
    }

    /// Goal difference from the home team's perspective.
    pub fn goal_diff(&self) -> i32 {
        self.home_goals as i32 - self.away_goals as i32
    }

    pub fn total_goals(&self) -> u32 {
        self.home_goals + self.away_goals
    }
}

/// All matches of one (league, season), with derived season structure.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SeasonDataset {
    pub league: String,
    pub season: String,
    /// Matches in input order.
    pub matches: Vec<MatchRecord>,
    /// Sorted team identifiers.
    pub teams: Vec<String>,
    pub n_teams: usize,
    /// Scheduled length of a complete double round robin: 2·(n_teams − 1).
    pub n_rounds: usize,
    /// True when every ordered team pair appears exactly once.
    pub complete: bool,
}

impl SeasonDataset {
    pub fn key(&self) -> (String, String) {
        (self.league.clone(), self.season.clone())
    }

    pub fn team_index(&self, team: &str) -> Option<usize> {
        self.teams.binary_search_by(|t| t.as_str().cmp(team)).ok()
    }
}

/// One entry in a team's own ordered game sequence.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeamGameEntry {
    /// Position in the team's own played sequence, starting at 1. This is not
    /// necessarily the scheduled round: postponed games count where they were
    /// actually played.
    pub game_number: usize,
    /// Index into `SeasonDataset::matches`.
    pub match_index: usize,
    pub is_home: bool,
    /// Goal difference from this team's perspective.
    pub goal_diff: i32,
    pub goals_for: u32,
    pub goals_against: u32,
    pub opponent: String,
}

/// A team's games in playing order.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TeamGameIndex {
    pub team: String,
    pub entries: Vec<TeamGameEntry>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DataError {
    UnknownTeam(String),
    InvalidRecord { reason: String },
}

impl fmt::Display for DataError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DataError::UnknownTeam(team) => write!(f, "unknown team '{team}'"),
            DataError::InvalidRecord { reason } => write!(f, "invalid match record: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for DataError {}

/// Result of grouping records into per-season datasets.
#[derive(Debug, Clone)]
pub struct SeasonMap {
    /// Keyed by (league, season); BTreeMap so iteration order is stable.
    pub seasons: BTreeMap<(String, String), SeasonDataset>,
    /// Human-readable notes about incomplete seasons; grouping never fails.
    pub warnings: Vec<String>,
}

impl SeasonMap {
    pub fn datasets(&self) -> Vec<&SeasonDataset> {
        self.seasons.values().collect()
    }

    pub fn into_datasets(self) -> Vec<SeasonDataset> {
        self.seasons.into_values().collect()
    }
}

/// Groups records by (league, season) and derives season structure.
///
/// Incomplete seasons (a canceled second half, a mini fixture list) are
/// accepted and flagged in `warnings`; downstream averages always use the
/// actual game counts.
pub fn build_seasons(records: Vec<MatchRecord>) -> SeasonMap {
    let mut grouped: BTreeMap<(String, String), Vec<MatchRecord>> = BTreeMap::new();
    for rec in records {
        grouped
            .entry((rec.league.clone(), rec.season.clone()))
            .or_default()
            .push(rec);
    }

    let mut seasons = BTreeMap::new();
    let mut warnings = Vec::new();
    for ((league, season), matches) in grouped {
        let mut teams: Vec<String> = Vec::new();
        for m in &matches {
            for t in [&m.home_team, &m.away_team] {
                if let Err(pos) = teams.binary_search(t) {
                    teams.insert(pos, t.clone());
                }
            }
        }
        let n_teams = teams.len();
        let n_rounds = if n_teams > 1 { 2 * (n_teams - 1) } else { 0 };
        let expected_matches = n_teams * n_teams.saturating_sub(1);
        let complete = matches.len() == expected_matches;
        if !complete {
            warnings.push(format!(
                "{league} {season}: {} of {expected_matches} matches present; treated as incomplete",
                matches.len()
            ));
        }
        seasons.insert(
            (league.clone(), season.clone()),
            SeasonDataset {
                league,
                season,
                matches,
                teams,
                n_teams,
                n_rounds,
                complete,
            },
        );
    }
    SeasonMap { seasons, warnings }
}

/// Builds the ordered game sequence of one team.
///
/// Games are sorted by date when every one of the team's games carries a
/// date, otherwise by scheduled round; a team plays at most once per round,
/// so the round ordering has no ties.
pub fn team_game_index(ds: &SeasonDataset, team: &str) -> Result<TeamGameIndex, DataError> {
    if ds.team_index(team).is_none() {
        return Err(DataError::UnknownTeam(team.to_string()));
    }
    let mut games: Vec<(usize, &MatchRecord)> = ds
        .matches
        .iter()
        .enumerate()
        .filter(|(_, m)| m.home_team == team || m.away_team == team)
        .collect();

    let all_dated = games.iter().all(|(_, m)| m.date.is_some());
    if all_dated {
        games.sort_by(|(_, a), (_, b)| a.date.cmp(&b.date).then(a.round.cmp(&b.round)));
    } else {
        games.sort_by_key(|(_, m)| m.round);
    }

    let entries = games
        .iter()
        .enumerate()
        .map(|(pos, (match_index, m))| {
            let is_home = m.home_team == team;
            let (goals_for, goals_against) = if is_home {
                (m.home_goals, m.away_goals)
            } else {
                (m.away_goals, m.home_goals)
            };
            TeamGameEntry {
                game_number: pos + 1,
                match_index: *match_index,
                is_home,
                goal_diff: goals_for as i32 - goals_against as i32,
                goals_for,
                goals_against,
                opponent: if is_home {
                    m.away_team.clone()
                } else {
                    m.home_team.clone()
                },
            }
        })
        .collect();

    Ok(TeamGameIndex {
        team: team.to_string(),
        entries,
    })
}
