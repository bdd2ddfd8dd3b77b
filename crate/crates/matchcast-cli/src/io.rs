//! CSV ingestion and emission.
//!
//! The match format is one header row then one match per line:
//! `league,season,round,date,home_team,away_team,home_goals,away_goals`.
//! The `date` column is optional (column or value may be absent); everything
//! else is required. Quoting follows RFC 4180 via the `csv` crate.

use std::collections::HashSet;
use std::io::Write;
use std::path::Path;

use matchcast_core::autocorr::AutocorrSeries;
use matchcast_core::data::MatchRecord;
use matchcast_core::features::FeatureTable;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("line {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error("line {line}: fixture {home} vs {away} appears twice in {league} {season}")]
    DuplicateFixture {
        line: usize,
        league: String,
        season: String,
        home: String,
        away: String,
    },
    #[error("missing required column '{0}'")]
    MissingColumn(&'static str),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone)]
pub struct ParseOutcome {
    pub records: Vec<MatchRecord>,
    pub skipped_blank_lines: usize,
}

/// Parses match records from CSV bytes. Row order is preserved; blank lines
/// are skipped and counted.
pub fn parse_matches(bytes: &[u8]) -> Result<ParseOutcome, IoError> {
    let skipped_blank_lines = count_blank_lines(bytes);

    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(bytes);

    let headers = reader.headers()?.clone();
    let find = |name: &'static str| -> Result<usize, IoError> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or(IoError::MissingColumn(name))
    };
    let league_i = find("league")?;
    let season_i = find("season")?;
    let round_i = find("round")?;
    let home_i = find("home_team")?;
    let away_i = find("away_team")?;
    let hg_i = find("home_goals")?;
    let ag_i = find("away_goals")?;
    let date_i = headers.iter().position(|h| h == "date");

    let mut records = Vec::new();
    let mut seen: HashSet<(String, String, String, String)> = HashSet::new();
    for row in reader.records() {
        let row = row?;
        let line = row.position().map_or(0, |p| p.line() as usize);
        let field = |i: usize, name: &str| -> Result<&str, IoError> {
            match row.get(i) {
                Some(v) if !v.is_empty() => Ok(v),
                _ => Err(IoError::MalformedRow {
                    line,
                    reason: format!("missing value for column '{name}'"),
                }),
            }
        };

        let league = field(league_i, "league")?.to_string();
        let season = field(season_i, "season")?.to_string();
        let round = parse_count(field(round_i, "round")?, "round", line)?;
        if round == 0 {
            return Err(IoError::MalformedRow {
                line,
                reason: "round must be a positive integer".to_string(),
            });
        }
        let home_team = field(home_i, "home_team")?.to_string();
        let away_team = field(away_i, "away_team")?.to_string();
        let home_goals = parse_count(field(hg_i, "home_goals")?, "home_goals", line)?;
        let away_goals = parse_count(field(ag_i, "away_goals")?, "away_goals", line)?;
        let date = match date_i.and_then(|i| row.get(i)) {
            None | Some("") => None,
            Some(raw) => {
                validate_iso_date(raw).map_err(|reason| IoError::MalformedRow { line, reason })?;
                Some(raw.to_string())
            }
        };

        let record = MatchRecord {
            league,
            season,
            round,
            date,
            home_team,
            away_team,
            home_goals,
            away_goals,
        };
        record
            .validate()
            .map_err(|e| IoError::MalformedRow {
                line,
                reason: e.to_string(),
            })?;

        let key = (
            record.league.clone(),
            record.season.clone(),
            record.home_team.clone(),
            record.away_team.clone(),
        );
        if !seen.insert(key) {
            return Err(IoError::DuplicateFixture {
                line,
                league: record.league,
                season: record.season,
                home: record.home_team,
                away: record.away_team,
            });
        }
        records.push(record);
    }
    Ok(ParseOutcome {
        records,
        skipped_blank_lines,
    })
}

pub fn parse_matches_file(path: &Path) -> Result<ParseOutcome, IoError> {
    let bytes = std::fs::read(path)?;
    parse_matches(&bytes)
}

fn parse_count(raw: &str, name: &str, line: usize) -> Result<u32, IoError> {
    let value: i64 = raw.parse().map_err(|_| IoError::MalformedRow {
        line,
        reason: format!("column '{name}' must be an integer, got '{raw}'"),
    })?;
    if !(0..=u32::MAX as i64).contains(&value) {
        return Err(IoError::MalformedRow {
            line,
            reason: format!("column '{name}' must be non-negative, got '{raw}'"),
        });
    }
    Ok(value as u32)
}

fn validate_iso_date(raw: &str) -> Result<(), String> {
    let bad = || format!("date '{raw}' is not an ISO-8601 calendar date (YYYY-MM-DD)");
    let bytes = raw.as_bytes();
    if bytes.len() != 10 || bytes[4] != b'-' || bytes[7] != b'-' {
        return Err(bad());
    }
    let digits = |s: &str| s.chars().all(|c| c.is_ascii_digit());
    let (y, m, d) = (&raw[0..4], &raw[5..7], &raw[8..10]);
    if !digits(y) || !digits(m) || !digits(d) {
        return Err(bad());
    }
    let month: u32 = m.parse().map_err(|_| bad())?;
    let day: u32 = d.parse().map_err(|_| bad())?;
    if !(1..=12).contains(&month) || !(1..=31).contains(&day) {
        return Err(bad());
    }
    Ok(())
}

/// Interior blank lines within the data section (a trailing newline is not a
/// blank line).
fn count_blank_lines(bytes: &[u8]) -> usize {
    let text = String::from_utf8_lossy(bytes);
    let mut lines: Vec<&str> = text.split('\n').collect();
    if let Some(last) = lines.last() {
        if last.trim().is_empty() {
            lines.pop();
        }
    }
    lines
        .iter()
        .skip(1) // header
        .filter(|l| l.trim().is_empty())
        .count()
}

/// Writes records in the same format `parse_matches` reads.
pub fn write_matches_csv<W: Write>(writer: W, records: &[MatchRecord]) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record([
        "league",
        "season",
        "round",
        "date",
        "home_team",
        "away_team",
        "home_goals",
        "away_goals",
    ])?;
    for r in records {
        w.write_record([
            r.league.as_str(),
            r.season.as_str(),
            &r.round.to_string(),
            r.date.as_deref().unwrap_or(""),
            r.home_team.as_str(),
            r.away_team.as_str(),
            &r.home_goals.to_string(),
            &r.away_goals.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Autocorrelation series as plot-ready CSV with the columns
/// `dn,corr,n_terms,std_err`.
pub fn write_autocorr_csv<W: Write>(writer: W, series: &AutocorrSeries) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["dn", "corr", "n_terms", "std_err"])?;
    for p in &series.points {
        w.write_record([
            p.lag.to_string(),
            format!("{:.8}", p.corr),
            p.n_terms.to_string(),
            format!("{:.8}", p.std_err),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Feature rows with a header naming each feature column.
pub fn write_feature_csv<W: Write>(writer: W, table: &FeatureTable) -> Result<(), IoError> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = vec![
        "league".into(),
        "season".into(),
        "round".into(),
        "home_team".into(),
        "away_team".into(),
        "home_goals".into(),
        "away_goals".into(),
    ];
    header.extend(table.feature_names.iter().cloned());
    header.extend(["x_dg_ab".into(), "x_sg_ab".into()]);
    header.extend(["label_diff".into(), "label_total".into()]);
    if table.id_vocab.is_some() {
        header.extend(["id_home".into(), "id_away".into(), "id_season".into()]);
    }
    w.write_record(&header)?;
    for row in &table.rows {
        let mut out: Vec<String> = vec![
            row.league.clone(),
            row.season.clone(),
            row.round.to_string(),
            row.home_team.clone(),
            row.away_team.clone(),
            row.home_goals.to_string(),
            row.away_goals.to_string(),
        ];
        out.extend(row.features.iter().map(|v| format!("{v:.8}")));
        out.push(format!("{:.8}", row.pairwise.x_dg_ab));
        out.push(format!("{:.8}", row.pairwise.x_sg_ab));
        out.push(row.label_diff.to_string());
        out.push(row.label_total.to_string());
        if let Some(ids) = row.ids {
            out.push(ids.home.to_string());
            out.push(ids.away.to_string());
            out.push(ids.season.to_string());
        }
        w.write_record(&out)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = "league,season,round,home_team,away_team,home_goals,away_goals\n\
        D1,2014-2015,1,FCB,VFB,2,0\n\
        D1,2014-2015,1,BVB,S04,1,1\n";

    #[test]
    fn parses_minimal_csv() {
        let out = parse_matches(SAMPLE.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped_blank_lines, 0);
        let m = &out.records[0];
        assert_eq!(m.league, "D1");
        assert_eq!(m.round, 1);
        assert_eq!(m.home_goals, 2);
        assert_eq!(m.away_goals, 0);
        assert_eq!(m.date, None);
    }

    #[test]
    fn empty_data_section_is_fine() {
        let out =
            parse_matches(b"league,season,round,home_team,away_team,home_goals,away_goals\n")
                .unwrap();
        assert!(out.records.is_empty());
    }

    #[test]
    fn blank_lines_are_counted() {
        // One interior blank line and one blank line before EOF; the final
        // newline itself is not a blank line.
        let text = "league,season,round,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,A,B,1,0\n\
            \n\
            D1,S,1,C,D,0,0\n\
            \n";
        let out = parse_matches(text.as_bytes()).unwrap();
        assert_eq!(out.records.len(), 2);
        assert_eq!(out.skipped_blank_lines, 2);
    }

    #[test]
    fn negative_goals_are_malformed() {
        let text = "league,season,round,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,A,B,-1,0\n";
        match parse_matches(text.as_bytes()) {
            Err(IoError::MalformedRow { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("home_goals"), "{reason}");
            }
            other => panic!("expected MalformedRow, got {other:?}"),
        }
    }

    #[test]
    fn non_integer_goals_are_malformed() {
        let text = "league,season,round,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,A,B,two,0\n";
        assert!(matches!(
            parse_matches(text.as_bytes()),
            Err(IoError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn missing_column_is_reported() {
        let text = "league,season,round,home_team,away_team,home_goals\nD1,S,1,A,B,1\n";
        assert!(matches!(
            parse_matches(text.as_bytes()),
            Err(IoError::MissingColumn("away_goals"))
        ));
    }

    #[test]
    fn repeated_ordered_pair_is_a_duplicate() {
        let text = "league,season,round,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,A,B,1,0\n\
            D1,S,8,A,B,2,2\n";
        assert!(matches!(
            parse_matches(text.as_bytes()),
            Err(IoError::DuplicateFixture { line: 3, .. })
        ));
        // The reversed pair is the second leg and fine.
        let text = "league,season,round,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,A,B,1,0\n\
            D1,S,8,B,A,2,2\n";
        assert!(parse_matches(text.as_bytes()).is_ok());
    }

    #[test]
    fn dates_are_validated_when_present() {
        let good = "league,season,round,date,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,2021-05-01,A,B,1,0\n";
        let out = parse_matches(good.as_bytes()).unwrap();
        assert_eq!(out.records[0].date.as_deref(), Some("2021-05-01"));

        let bad = "league,season,round,date,home_team,away_team,home_goals,away_goals\n\
            D1,S,1,05/01/2021,A,B,1,0\n";
        assert!(matches!(
            parse_matches(bad.as_bytes()),
            Err(IoError::MalformedRow { line: 2, .. })
        ));
    }

    #[test]
    fn quoted_fields_round_trip() {
        let records = vec![MatchRecord {
            league: "L,1".to_string(),
            season: "S".to_string(),
            round: 3,
            date: Some("2020-01-02".to_string()),
            home_team: "Team \"A\"".to_string(),
            away_team: "B".to_string(),
            home_goals: 4,
            away_goals: 2,
        }];
        let mut buf = Vec::new();
        write_matches_csv(&mut buf, &records).unwrap();
        let out = parse_matches(&buf).unwrap();
        assert_eq!(out.records, records);
    }
}
