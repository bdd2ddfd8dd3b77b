//! Seeded synthetic season generator with known ground truth.
//!
//! Every season is a double round robin built with the circle method. Each
//! team draws an attack and a defense offset once per season; the home side
//! of a match scores Poisson goals with rate
//! `max(floor, base + attack_home − defense_away + HA/2)` and the away side
//! with `max(floor, base + attack_away − defense_home − HA/2)`, sampled
//! independently. The attack/defense draws can be correlated: at correlation
//! one a team that scores more also concedes less, which leaves the expected
//! total goals of a match constant across pairings (goal difference stays
//! team-specific, total goals do not).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::MatchRecord;
use crate::rng::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub league: String,
    pub n_teams: usize,
    pub n_seasons: usize,
    /// Expected goals per team against an equal opponent at a neutral venue.
    pub base_rate: f64,
    /// Standard deviation of the per-team attack offsets.
    pub attack_spread: f64,
    /// Standard deviation of the per-team defense offsets.
    pub defense_spread: f64,
    /// Correlation between a team's attack and defense offsets, in [-1, 1].
    pub strength_correlation: f64,
    /// Season home advantage in goals (mean home minus away).
    pub home_advantage: f64,
    /// Lower clamp for every sampled rate.
    pub lambda_floor: f64,
    /// Redraw all strengths after the first half of each season.
    pub midseason_redraw: bool,
    pub seed: u64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            league: String::from("SYN"),
            n_teams: 18,
            n_seasons: 1,
            base_rate: 1.35,
            attack_spread: 0.25,
            defense_spread: 0.25,
            strength_correlation: 1.0,
            home_advantage: 0.3,
            lambda_floor: 0.05,
            midseason_redraw: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthError {
    InvalidConfig(String),
}

impl fmt::Display for SynthError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SynthError::InvalidConfig(reason) => write!(f, "invalid generator config: {reason}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for SynthError {}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TeamStrength {
    pub attack: f64,
    pub defense: f64,
}

impl TeamStrength {
    /// Expected goal difference per game against an average opponent at a
    /// neutral venue, up to a league-wide constant.
    pub fn quality(&self) -> f64 {
        self.attack + self.defense
    }
}

/// Ground truth of one generated season.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeasonTruth {
    pub season: String,
    pub teams: Vec<String>,
    pub strengths: Vec<TeamStrength>,
    /// Strengths in effect for the second half, when the redraw flag is set.
    pub second_half: Option<Vec<TeamStrength>>,
    pub home_advantage: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthOutput {
    pub records: Vec<MatchRecord>,
    pub truth: Vec<SeasonTruth>,
}

fn validate(config: &GeneratorConfig) -> Result<(), SynthError> {
    let fail = |reason: &str| Err(SynthError::InvalidConfig(String::from(reason)));
    if config.n_teams < 2 || config.n_teams % 2 != 0 {
        return fail("n_teams must be an even number of at least 2");
    }
    if config.n_seasons == 0 {
        return fail("n_seasons must be positive");
    }
    if !(config.base_rate > 0.0) {
        return fail("base_rate must be positive");
    }
    if config.attack_spread < 0.0 || config.defense_spread < 0.0 {
        return fail("spreads must be non-negative");
    }
    if !(config.strength_correlation >= -1.0 && config.strength_correlation <= 1.0) {
        return fail("strength_correlation must lie in [-1, 1]");
    }
    if !(config.lambda_floor > 0.0) {
        return fail("lambda_floor must be positive");
    }
    if !config.home_advantage.is_finite() {
        return fail("home_advantage must be finite");
    }
    Ok(())
}

/// Circle-method double round robin: rounds 1..=n-1 pair everyone once,
/// rounds n..=2(n-1) mirror them with venues flipped.
fn schedule(n_teams: usize) -> Vec<(u32, usize, usize)> {
    let m = n_teams - 1;
    let mut fixtures = Vec::with_capacity(n_teams * m);
    for r in 0..m {
        let rot = |i: usize| (r + i) % m;
        let mut pairs = Vec::with_capacity(n_teams / 2);
        // Fixed last team against the rotating head.
        if r % 2 == 0 {
            pairs.push((n_teams - 1, rot(0)));
        } else {
            pairs.push((rot(0), n_teams - 1));
        }
        for k in 1..n_teams / 2 {
            let (a, b) = (rot(k), rot(m - k));
            if (r + k) % 2 == 0 {
                pairs.push((a, b));
            } else {
                pairs.push((b, a));
            }
        }
        for (home, away) in &pairs {
            fixtures.push((r as u32 + 1, *home, *away));
        }
        for (home, away) in &pairs {
            fixtures.push((r as u32 + 1 + m as u32, *away, *home));
        }
    }
    fixtures.sort_by_key(|&(round, _, _)| round);
    fixtures
}

pub fn generate(config: &GeneratorConfig) -> Result<SynthOutput, SynthError> {
    validate(config)?;
    let fixtures = schedule(config.n_teams);
    let teams: Vec<String> = (0..config.n_teams)
        .map(|i| format!("T{:02}", i + 1))
        .collect();
    let unit = Normal::new(0.0, 1.0).expect("unit normal is valid");
    let rho = config.strength_correlation;
    let rho_rest = libm::sqrt(1.0 - rho * rho);

    let mut records = Vec::new();
    let mut truth = Vec::new();
    for s in 0..config.n_seasons {
        let season = format!("S{:02}", s + 1);
        let mut rng = ChaCha12Rng::seed_from_u64(derive_seed(config.seed, s as u64));
        let draw_strengths = |rng: &mut ChaCha12Rng| -> Vec<TeamStrength> {
            (0..config.n_teams)
                .map(|_| {
                    let z1 = unit.sample(rng);
                    let z2 = unit.sample(rng);
                    TeamStrength {
                        attack: config.attack_spread * z1,
                        defense: config.defense_spread * (rho * z1 + rho_rest * z2),
                    }
                })
                .collect()
        };
        let strengths = draw_strengths(&mut rng);
        let second_half = config.midseason_redraw.then(|| draw_strengths(&mut rng));

        let half = (config.n_teams - 1) as u32;
        for &(round, home, away) in &fixtures {
            let active = match &second_half {
                Some(late) if round > half => late,
                _ => &strengths,
            };
            let lambda_home = (config.base_rate + active[home].attack - active[away].defense
                + config.home_advantage / 2.0)
                .max(config.lambda_floor);
            let lambda_away = (config.base_rate + active[away].attack - active[home].defense
                - config.home_advantage / 2.0)
                .max(config.lambda_floor);
            let home_goals = Poisson::new(lambda_home)
                .expect("rate is positive")
                .sample(&mut rng) as u32;
            let away_goals = Poisson::new(lambda_away)
                .expect("rate is positive")
                .sample(&mut rng) as u32;
            records.push(MatchRecord {
                league: config.league.clone(),
                season: season.clone(),
                round,
                date: None,
                home_team: teams[home].clone(),
                away_team: teams[away].clone(),
                home_goals,
                away_goals,
            });
        }
        truth.push(SeasonTruth {
            season,
            teams: teams.clone(),
            strengths,
            second_half,
            home_advantage: config.home_advantage,
        });
    }
    Ok(SynthOutput { records, truth })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::collections::BTreeSet;

    #[test]
    fn schedule_is_a_double_round_robin() {
        for n in [4usize, 6, 18] {
            let fixtures = schedule(n);
            assert_eq!(fixtures.len(), n * (n - 1));
            let mut seen = BTreeSet::new();
            let mut per_round_team: alloc::collections::BTreeMap<u32, BTreeSet<usize>> =
                alloc::collections::BTreeMap::new();
            for (round, home, away) in fixtures {
                assert!(seen.insert((home, away)), "ordered pair repeated");
                assert!((1..=2 * (n as u32 - 1)).contains(&round));
                let teams = per_round_team.entry(round).or_default();
                assert!(teams.insert(home), "team plays twice in round {round}");
                assert!(teams.insert(away), "team plays twice in round {round}");
            }
            assert_eq!(seen.len(), n * (n - 1));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let config = GeneratorConfig {
            n_teams: 6,
            n_seasons: 2,
            ..GeneratorConfig::default()
        };
        let a = generate(&config).unwrap();
        let b = generate(&config).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.truth, b.truth);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let base = GeneratorConfig::default();
        for bad in [
            GeneratorConfig { n_teams: 5, ..base.clone() },
            GeneratorConfig { n_seasons: 0, ..base.clone() },
            GeneratorConfig { base_rate: 0.0, ..base.clone() },
            GeneratorConfig { attack_spread: -0.1, ..base.clone() },
            GeneratorConfig { strength_correlation: 1.5, ..base.clone() },
            GeneratorConfig { lambda_floor: 0.0, ..base.clone() },
        ] {
            assert!(matches!(generate(&bad), Err(SynthError::InvalidConfig(_))));
        }
    }

    #[test]
    fn flat_league_total_goals_concentrate_around_twice_base() {
        // 18 teams, 33 seasons: 10,098 matches; spread and HA zero.
        let config = GeneratorConfig {
            n_seasons: 33,
            attack_spread: 0.0,
            defense_spread: 0.0,
            home_advantage: 0.0,
            seed: 11,
            ..GeneratorConfig::default()
        };
        let out = generate(&config).unwrap();
        assert_eq!(out.records.len(), 10_098);
        let mean_total: f64 = out
            .records
            .iter()
            .map(|m| m.total_goals() as f64)
            .sum::<f64>()
            / out.records.len() as f64;
        // 3 sigma of the mean of ~Poisson(2.7) samples.
        let three_sigma = 3.0 * libm::sqrt(2.7 / out.records.len() as f64);
        assert!(
            (mean_total - 2.7).abs() < three_sigma,
            "mean total {mean_total} vs 2.7 ± {three_sigma}"
        );
    }

    #[test]
    fn home_advantage_shows_up_in_the_goal_difference() {
        let config = GeneratorConfig {
            n_seasons: 33,
            attack_spread: 0.0,
            defense_spread: 0.0,
            home_advantage: 0.4,
            seed: 12,
            ..GeneratorConfig::default()
        };
        let out = generate(&config).unwrap();
        let mean_diff: f64 = out
            .records
            .iter()
            .map(|m| m.goal_diff() as f64)
            .sum::<f64>()
            / out.records.len() as f64;
        let three_sigma = 3.0 * libm::sqrt(2.7 / out.records.len() as f64);
        assert!(
            (mean_diff - 0.4).abs() < three_sigma,
            "mean diff {mean_diff} vs 0.4 ± {three_sigma}"
        );
    }

    #[test]
    fn redraw_changes_second_half_strengths() {
        let config = GeneratorConfig {
            n_teams: 6,
            midseason_redraw: true,
            ..GeneratorConfig::default()
        };
        let out = generate(&config).unwrap();
        let t = &out.truth[0];
        let late = t.second_half.as_ref().unwrap();
        assert_ne!(&t.strengths, late);
    }
}
