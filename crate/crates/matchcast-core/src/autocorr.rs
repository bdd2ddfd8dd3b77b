//! League-averaged autocorrelation of goal differences.
//!
//! For every team the signed goal difference of its n-th played game is
//! paired with the one `lag` games later; the mean of those products over all
//! leagues, teams and time offsets measures whether team performance drifts
//! within a season. Three corrections matter: pairs meeting the same opponent
//! twice are dropped (a rematch correlates through the opponent, not through
//! own form), each goal difference is shifted by the season's home advantage,
//! and game numbers follow each team's own played order rather than the
//! scheduled round.

use alloc::vec::Vec;
use serde::{Deserialize, Serialize};

use crate::data::{team_game_index, SeasonDataset};
use crate::features::{home_advantage, FeatureError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrPoint {
    pub lag: usize,
    pub corr: f64,
    pub n_terms: usize,
    pub std_err: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrSeries {
    pub points: Vec<AutocorrPoint>,
    pub home_adjusted: bool,
}

impl AutocorrSeries {
    /// Divides every value by the lag-pooled mean (plotting convenience, not
    /// meaningful when the pooled mean is zero).
    pub fn normalized(&self) -> AutocorrSeries {
        let total: f64 = self
            .points
            .iter()
            .map(|p| p.corr * p.n_terms as f64)
            .sum();
        let terms: usize = self.points.iter().map(|p| p.n_terms).sum();
        let pooled = total / terms as f64;
        AutocorrSeries {
            points: self
                .points
                .iter()
                .map(|p| AutocorrPoint {
                    lag: p.lag,
                    corr: p.corr / pooled,
                    n_terms: p.n_terms,
                    std_err: p.std_err / pooled,
                })
                .collect(),
            home_adjusted: self.home_adjusted,
        }
    }

    /// Weighted least-squares slope of corr against lag (weights 1/se²) and
    /// its standard error. `None` with fewer than two points.
    pub fn flatness_slope(&self) -> Option<(f64, f64)> {
        if self.points.len() < 2 {
            return None;
        }
        let mut sw = 0.0;
        let mut swx = 0.0;
        let mut swy = 0.0;
        let mut swxx = 0.0;
        let mut swxy = 0.0;
        for p in &self.points {
            let se = p.std_err.max(1e-12);
            let w = 1.0 / (se * se);
            let x = p.lag as f64;
            sw += w;
            swx += w * x;
            swy += w * p.corr;
            swxx += w * x * x;
            swxy += w * x * p.corr;
        }
        let det = sw * swxx - swx * swx;
        if det <= 0.0 {
            return None;
        }
        let slope = (sw * swxy - swx * swy) / det;
        let se_slope = libm::sqrt(sw / det);
        Some((slope, se_slope))
    }
}

/// Autocorrelation with the rematch exclusion active.
pub fn autocorrelation(
    datasets: &[&SeasonDataset],
    max_lag: usize,
    home_adjust: bool,
) -> Result<AutocorrSeries, FeatureError> {
    autocorrelation_with_options(datasets, max_lag, home_adjust, true)
}

/// As [`autocorrelation`]; `exclude_rematches = false` keeps same-opponent
/// pairs in the sum (useful to quantify what the exclusion removes).
pub fn autocorrelation_with_options(
    datasets: &[&SeasonDataset],
    max_lag: usize,
    home_adjust: bool,
    exclude_rematches: bool,
) -> Result<AutocorrSeries, FeatureError> {
    // (sum of products, sum of squared products, count) per lag.
    let mut acc = alloc::vec![(0.0f64, 0.0f64, 0usize); max_lag];

    for ds in datasets {
        let ha = if home_adjust {
            home_advantage(ds, None)?.value
        } else {
            0.0
        };
        for team in &ds.teams {
            let idx = team_game_index(ds, team).expect("team is in the dataset");
            if idx.entries.len() < max_lag + 1 {
                return Err(FeatureError::InsufficientGames {
                    team: team.clone(),
                    have: idx.entries.len(),
                    need: max_lag + 1,
                });
            }
            let seq: Vec<(f64, &str)> = idx
                .entries
                .iter()
                .map(|e| {
                    let adj = if e.is_home {
                        e.goal_diff as f64 - ha
                    } else {
                        e.goal_diff as f64 + ha
                    };
                    (adj, e.opponent.as_str())
                })
                .collect();
            for lag in 1..=max_lag {
                for n in 0..seq.len() - lag {
                    if exclude_rematches && seq[n].1 == seq[n + lag].1 {
                        continue;
                    }
                    let product = seq[n].0 * seq[n + lag].0;
                    let slot = &mut acc[lag - 1];
                    slot.0 += product;
                    slot.1 += product * product;
                    slot.2 += 1;
                }
            }
        }
    }

    let points = acc
        .iter()
        .enumerate()
        .filter(|(_, (_, _, count))| *count > 0)
        .map(|(i, &(sum, sumsq, count))| {
            let corr = sum / count as f64;
            let std_err = if count > 1 {
                let var = (sumsq - count as f64 * corr * corr) / (count as f64 - 1.0);
                libm::sqrt(var.max(0.0) / count as f64)
            } else {
                0.0
            };
            AutocorrPoint {
                lag: i + 1,
                corr,
                n_terms: count,
                std_err,
            }
        })
        .collect();

    Ok(AutocorrSeries {
        points,
        home_adjusted: home_adjust,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_seasons;
    use crate::testutil::{rec, small_season};
    use alloc::vec::Vec;
    use approx::assert_abs_diff_eq;

    fn season() -> SeasonDataset {
        build_seasons(small_season()).into_datasets().remove(0)
    }

    #[test]
    fn goalless_season_has_zero_signal() {
        let records: Vec<_> = small_season()
            .into_iter()
            .map(|mut m| {
                m.home_goals = 0;
                m.away_goals = 0;
                m
            })
            .collect();
        let ds = build_seasons(records).into_datasets().remove(0);
        let series = autocorrelation(&[&ds], 2, true).unwrap();
        for p in &series.points {
            assert_eq!(p.corr, 0.0);
            assert_eq!(p.std_err, 0.0);
        }
    }

    #[test]
    fn rematch_pairs_are_excluded() {
        let ds = season();
        // In a 4-team double round robin each team meets opponents in the
        // pattern X,Y,Z,X,Y,Z, so every lag-3 pair is a rematch.
        let with = autocorrelation(&[&ds], 2, false).unwrap();
        let without = autocorrelation_with_options(&[&ds], 2, false, false).unwrap();
        // Independent count of same-opponent pairs per lag.
        for lag in 1..=2usize {
            let mut rematches = 0;
            for team in &ds.teams {
                let idx = team_game_index(&ds, team).unwrap();
                for n in 0..idx.entries.len() - lag {
                    if idx.entries[n].opponent == idx.entries[n + lag].opponent {
                        rematches += 1;
                    }
                }
            }
            let p_with = with.points.iter().find(|p| p.lag == lag).unwrap();
            let p_without = without.points.iter().find(|p| p.lag == lag).unwrap();
            assert_eq!(p_without.n_terms - p_with.n_terms, rematches, "lag {lag}");
        }

        // At lag 3 every pair is a rematch: the corrected series reports no
        // point there.
        let series = autocorrelation(&[&ds], 3, false).unwrap();
        assert!(series.points.iter().all(|p| p.lag != 3));
        let uncorrected = autocorrelation_with_options(&[&ds], 3, false, false).unwrap();
        assert!(uncorrected.points.iter().any(|p| p.lag == 3));
    }

    #[test]
    fn zero_home_advantage_makes_adjustment_a_no_op() {
        let records = alloc::vec![
            rec("L", "S", 1, "A", "B", 2, 1),
            rec("L", "S", 2, "B", "A", 2, 1),
            rec("L", "S", 3, "A", "C", 0, 1),
            rec("L", "S", 4, "C", "A", 0, 1),
            rec("L", "S", 5, "B", "C", 1, 1),
            rec("L", "S", 6, "C", "B", 1, 1),
        ];
        let ds = build_seasons(records).into_datasets().remove(0);
        assert_eq!(home_advantage(&ds, None).unwrap().value, 0.0);
        let adjusted = autocorrelation(&[&ds], 2, true).unwrap();
        let plain = autocorrelation(&[&ds], 2, false).unwrap();
        for (a, b) in adjusted.points.iter().zip(&plain.points) {
            assert_eq!(a.corr, b.corr);
            assert_eq!(a.n_terms, b.n_terms);
        }
    }

    #[test]
    fn reversed_sequences_give_the_same_series() {
        let ds = season();
        let max_round = 6;
        let reversed: Vec<_> = small_season()
            .into_iter()
            .map(|mut m| {
                m.round = max_round + 1 - m.round;
                m
            })
            .collect();
        let ds_rev = build_seasons(reversed).into_datasets().remove(0);
        let a = autocorrelation(&[&ds], 2, true).unwrap();
        let b = autocorrelation(&[&ds_rev], 2, true).unwrap();
        for (x, y) in a.points.iter().zip(&b.points) {
            assert_eq!(x.n_terms, y.n_terms);
            assert_abs_diff_eq!(x.corr, y.corr, epsilon = 1e-12);
        }
    }

    #[test]
    fn too_short_sequences_are_rejected() {
        let ds = season();
        assert!(matches!(
            autocorrelation(&[&ds], 6, false),
            Err(FeatureError::InsufficientGames { .. })
        ));
        assert!(autocorrelation(&[&ds], 5, false).is_ok());
    }

    #[test]
    fn normalization_divides_by_pooled_mean() {
        let ds = season();
        let series = autocorrelation(&[&ds], 2, false).unwrap();
        let normalized = series.normalized();
        let total: f64 = series.points.iter().map(|p| p.corr * p.n_terms as f64).sum();
        let n: usize = series.points.iter().map(|p| p.n_terms).sum();
        let pooled = total / n as f64;
        for (raw, norm) in series.points.iter().zip(&normalized.points) {
            assert_abs_diff_eq!(norm.corr, raw.corr / pooled, epsilon = 1e-12);
        }
    }

    #[test]
    fn flatness_fit_recovers_a_constant_series() {
        let series = AutocorrSeries {
            points: (1..=10)
                .map(|lag| AutocorrPoint {
                    lag,
                    corr: 0.25,
                    n_terms: 100,
                    std_err: 0.05,
                })
                .collect(),
            home_adjusted: false,
        };
        let (slope, se) = series.flatness_slope().unwrap();
        assert_abs_diff_eq!(slope, 0.0, epsilon = 1e-12);
        assert!(se > 0.0);

        let sloped = AutocorrSeries {
            points: (1..=10)
                .map(|lag| AutocorrPoint {
                    lag,
                    corr: 0.1 * lag as f64,
                    n_terms: 100,
                    std_err: 0.05,
                })
                .collect(),
            home_adjusted: false,
        };
        let (slope, _) = sloped.flatness_slope().unwrap();
        assert_abs_diff_eq!(slope, 0.1, epsilon = 1e-10);
    }
}
