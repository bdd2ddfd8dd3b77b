//! Shared fixtures for unit tests.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

use crate::data::MatchRecord;

pub(crate) fn rec(
    league: &str,
    season: &str,
    round: u32,
    home: &str,
    away: &str,
    hg: u32,
    ag: u32,
) -> MatchRecord {
    MatchRecord {
        league: league.to_string(),
        season: season.to_string(),
        round,
        date: None,
        home_team: home.to_string(),
        away_team: away.to_string(),
        home_goals: hg,
        away_goals: ag,
    }
}

/// 4-team double round robin: 6 rounds, 12 matches, 27 goals.
pub(crate) fn small_season() -> Vec<MatchRecord> {
    vec![
        rec("L", "S", 1, "A", "B", 2, 0),
        rec("L", "S", 1, "C", "D", 1, 1),
        rec("L", "S", 2, "A", "C", 1, 1),
        rec("L", "S", 2, "D", "B", 0, 2),
        rec("L", "S", 3, "A", "D", 3, 2),
        rec("L", "S", 3, "B", "C", 1, 0),
        rec("L", "S", 4, "B", "A", 1, 0),
        rec("L", "S", 4, "D", "C", 2, 2),
        rec("L", "S", 5, "C", "A", 0, 1),
        rec("L", "S", 5, "B", "D", 3, 1),
        rec("L", "S", 6, "D", "A", 0, 0),
        rec("L", "S", 6, "C", "B", 2, 1),
    ]
}
