//! Evaluation report files.
//!
//! One evaluate run writes into its output directory:
//! `report.json` (full CvReport), `summary.csv` (one Table-style row per
//! report), `confusion.csv` and `avg_distribution.csv` (plot-ready), and
//! `fingerprint.json` (the exact configuration). Outputs contain no
//! timestamps, so a rerun with identical inputs and seeds is byte-identical.

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use matchcast_core::eval::CvReport;
use matchcast_core::metrics::ConfusionMatrix;
use matchcast_core::outcome::OutcomeDistribution;

fn to_pretty_json<T: serde::Serialize>(value: &T) -> Result<Vec<u8>> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub fn summary_csv(reports: &[CvReport]) -> String {
    let mut out = String::from(
        "model,features,target,league,n_matches,cross_entropy,cross_entropy_se,rps,rps_se\n",
    );
    for r in reports {
        out.push_str(&format!(
            "{},{},{},{},{},{:.6},{:.6},{:.6},{:.6}\n",
            r.model,
            r.features,
            r.target,
            r.league.as_deref().unwrap_or(""),
            r.n_matches,
            r.cross_entropy.value,
            r.cross_entropy.std_err,
            r.rps.value,
            r.rps.std_err,
        ));
    }
    out
}

pub fn confusion_csv(confusion: &ConfusionMatrix) -> String {
    let mut out = String::from("predicted");
    for class in confusion.range.classes() {
        out.push_str(&format!(",true_{class}"));
    }
    out.push('\n');
    for pred in confusion.range.classes() {
        out.push_str(&pred.to_string());
        for truth in confusion.range.classes() {
            out.push_str(&format!(",{}", confusion.get(pred, truth)));
        }
        out.push('\n');
    }
    out
}

/// Averaged predicted distribution next to the empirical class frequencies.
pub fn distribution_csv(
    predicted: &OutcomeDistribution,
    empirical: &OutcomeDistribution,
) -> String {
    let mut out = String::from("class,predicted,empirical\n");
    for class in predicted.range.classes() {
        out.push_str(&format!(
            "{class},{:.8},{:.8}\n",
            predicted.prob_of_class(class).unwrap(),
            empirical.prob_of_class(class).unwrap(),
        ));
    }
    out
}

/// Writes all files for a run; each report comes with the empirical class
/// distribution of its evaluation matches. With several reports (per-league
/// mode) the per-report files carry the league tag in their name; the
/// summary is one shared file.
pub fn write_reports(out_dir: &Path, reports: &[(CvReport, OutcomeDistribution)]) -> Result<()> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("creating output directory {}", out_dir.display()))?;
    let tag = |r: &CvReport| -> String {
        r.league
            .as_ref()
            .map(|l| format!("_{l}"))
            .unwrap_or_default()
    };
    for (report, empirical) in reports {
        let t = tag(report);
        fs::write(
            out_dir.join(format!("report{t}.json")),
            to_pretty_json(report)?,
        )?;
        fs::write(
            out_dir.join(format!("confusion{t}.csv")),
            confusion_csv(&report.confusion),
        )?;
        fs::write(
            out_dir.join(format!("avg_distribution{t}.csv")),
            distribution_csv(&report.averaged_prediction, empirical),
        )?;
    }
    let summaries: Vec<CvReport> = reports.iter().map(|(r, _)| r.clone()).collect();
    fs::write(out_dir.join("summary.csv"), summary_csv(&summaries))?;
    fs::write(
        out_dir.join("fingerprint.json"),
        to_pretty_json(&reports[0].0.fingerprint)?,
    )?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use matchcast_core::outcome::ClassRange;

    #[test]
    fn confusion_csv_shape() {
        let m = ConfusionMatrix::new(ClassRange::total_goals());
        let text = confusion_csv(&m);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 18); // header + 17 classes
        assert!(lines[0].starts_with("predicted,true_0,true_1"));
        assert_eq!(lines[1].split(',').count(), 18);
    }

    #[test]
    fn distribution_csv_lists_every_class() {
        let d = OutcomeDistribution::uniform(ClassRange::goal_diff());
        let text = distribution_csv(&d, &d);
        assert_eq!(text.lines().count(), 22);
        assert!(text.starts_with("class,predicted,empirical\n-10,"));
    }
}
