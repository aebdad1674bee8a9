//! Raw season-file ingestion. Each season ships as one delimited text
//! file, and the column order changed between years, so every file is
//! matched against a configured column layout before its rows are read.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use chrono::NaiveDate;
use serde::Deserialize;

use crate::dataset::normalize::fold;
use crate::dataset::{Category, Round, Surface};
use crate::error::{Error, Result};

/// Date formats tried in order when a layout does not pin one down.
const DEFAULT_DATE_FORMATS: &[&str] = &["%Y-%m-%d", "%d/%m/%Y", "%d/%m/%y", "%m/%d/%Y"];

/// Round label as it appears in a source file, before per-tournament
/// resolution. Numbered rounds ("1st Round") cannot be mapped to a
/// fixed round without knowing the draw size, so they stay relative
/// until the whole tournament has been read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum RoundLabel {
    Absolute(Round),
    Numbered(u8),
}

impl RoundLabel {
    fn parse(code: &str) -> Option<RoundLabel> {
        if let Some(rest) = code.strip_prefix('N') {
            let n: u8 = rest.parse().ok()?;
            if (1..=4).contains(&n) {
                return Some(RoundLabel::Numbered(n));
            }
            return None;
        }
        code.parse::<Round>().ok().map(RoundLabel::Absolute)
    }
}

/// Column map for one detected header shape. Field values are the
/// column names as they appear in the header; matching is
/// case-insensitive. A file matches the first layout whose required
/// columns are all present.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnLayout {
    pub name: String,
    pub tournament: String,
    pub series: String,
    pub date: String,
    pub surface: String,
    pub round: String,
    pub winner: String,
    pub loser: String,
    #[serde(default)]
    pub date_formats: Vec<String>,
    #[serde(default)]
    pub location: Option<String>,
    #[serde(default)]
    pub court: Option<String>,
    #[serde(default)]
    pub best_of: Option<String>,
    #[serde(default)]
    pub winner_rank: Option<String>,
    #[serde(default)]
    pub loser_rank: Option<String>,
    #[serde(default)]
    pub winner_set_games: Vec<String>,
    #[serde(default)]
    pub loser_set_games: Vec<String>,
    #[serde(default)]
    pub comment: Option<String>,
    /// Candidate odds columns; the first one present in the header wins.
    #[serde(default)]
    pub odds_winner: Vec<String>,
    #[serde(default)]
    pub odds_loser: Vec<String>,
}

impl ColumnLayout {
    fn matches_header(&self, header: &[String]) -> bool {
        [
            &self.tournament,
            &self.series,
            &self.date,
            &self.surface,
            &self.round,
            &self.winner,
            &self.loser,
        ]
        .iter()
        .all(|col| find_column(header, col).is_some())
    }
}

/// Ingestion configuration: column layouts plus the alias tables that
/// map historical labels onto the closed enums.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IngestConfig {
    #[serde(default)]
    pub layouts: Vec<ColumnLayout>,
    /// Keys are folded case-insensitively on lookup.
    #[serde(default)]
    pub series_aliases: BTreeMap<String, Category>,
    /// Values are round codes: R128..R16, QF, SF, F, RR, or N1..N4 for
    /// draw-size-relative numbered rounds.
    #[serde(default)]
    pub round_aliases: BTreeMap<String, String>,
    #[serde(default)]
    pub surface_aliases: BTreeMap<String, Surface>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        IngestConfig {
            layouts: vec![default_layout()],
            series_aliases: default_series_aliases(),
            round_aliases: default_round_aliases(),
            surface_aliases: default_surface_aliases(),
        }
    }
}

impl IngestConfig {
    /// User-supplied tables extend (and may override) the built-in
    /// defaults; user layouts are tried before the default layout.
    pub fn merged_over_defaults(self) -> IngestConfig {
        let mut merged = IngestConfig::default();
        let mut layouts = self.layouts;
        layouts.append(&mut merged.layouts);
        merged.layouts = layouts;
        merged.series_aliases.extend(self.series_aliases);
        merged.round_aliases.extend(self.round_aliases);
        merged.surface_aliases.extend(self.surface_aliases);
        merged
    }

    pub(crate) fn resolve_surface(&self, label: &str) -> Result<Surface> {
        lookup_folded(&self.surface_aliases, label)
            .copied()
            .ok_or_else(|| Error::UnknownSurface {
                label: label.trim().to_string(),
            })
    }

    pub(crate) fn resolve_round(&self, label: &str) -> Result<RoundLabel> {
        let code =
            lookup_folded(&self.round_aliases, label).ok_or_else(|| Error::UnknownRound {
                label: label.trim().to_string(),
            })?;
        RoundLabel::parse(code).ok_or_else(|| Error::UnknownRound {
            label: format!(
                "{} (bad round code {:?} in alias table)",
                label.trim(),
                code
            ),
        })
    }
}

fn lookup_folded<'a, V>(map: &'a BTreeMap<String, V>, label: &str) -> Option<&'a V> {
    let key = fold(label);
    map.iter().find(|(k, _)| fold(k) == key).map(|(_, v)| v)
}

pub(crate) fn default_series_aliases() -> BTreeMap<String, Category> {
    let pairs = [
        ("Grand Slam", Category::GrandSlam),
        ("International", Category::ATP250),
        ("International Series", Category::ATP250),
        ("International Gold", Category::ATP500),
        ("International Series Gold", Category::ATP500),
        ("Masters", Category::Masters1000),
        ("Masters 1000", Category::Masters1000),
        ("Masters1000", Category::Masters1000),
        ("ATP250", Category::ATP250),
        ("ATP 250", Category::ATP250),
        ("ATP500", Category::ATP500),
        ("ATP 500", Category::ATP500),
        ("Masters Cup", Category::MastersCup),
        ("Tour Finals", Category::MastersCup),
    ];
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn default_round_aliases() -> BTreeMap<String, String> {
    let pairs = [
        ("1st Round", "N1"),
        ("2nd Round", "N2"),
        ("3rd Round", "N3"),
        ("4th Round", "N4"),
        ("Quarterfinals", "QF"),
        ("Quarter-Finals", "QF"),
        ("Semifinals", "SF"),
        ("Semi-Finals", "SF"),
        ("The Final", "F"),
        ("Final", "F"),
        ("Round Robin", "RR"),
        ("R128", "R128"),
        ("R64", "R64"),
        ("R32", "R32"),
        ("R16", "R16"),
        ("QF", "QF"),
        ("SF", "SF"),
        ("F", "F"),
        ("RR", "RR"),
    ];
    pairs
        .iter()
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

fn default_surface_aliases() -> BTreeMap<String, Surface> {
    let pairs = [
        ("Hard", Surface::Hard),
        ("Clay", Surface::Clay),
        ("Grass", Surface::Grass),
        // Carpet events disappeared from the calendar in 2009; they are
        // closest to indoor hard for weighting purposes.
        ("Carpet", Surface::Hard),
    ];
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn default_layout() -> ColumnLayout {
    ColumnLayout {
        name: "standard".to_string(),
        tournament: "Tournament".to_string(),
        series: "Series".to_string(),
        date: "Date".to_string(),
        surface: "Surface".to_string(),
        round: "Round".to_string(),
        winner: "Winner".to_string(),
        loser: "Loser".to_string(),
        date_formats: Vec::new(),
        location: Some("Location".to_string()),
        court: Some("Court".to_string()),
        best_of: Some("Best of".to_string()),
        winner_rank: Some("WRank".to_string()),
        loser_rank: Some("LRank".to_string()),
        winner_set_games: ["W1", "W2", "W3", "W4", "W5"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        loser_set_games: ["L1", "L2", "L3", "L4", "L5"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        comment: Some("Comment".to_string()),
        odds_winner: ["B365W", "PSW", "AvgW", "CBW", "IWW"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
        odds_loser: ["B365L", "PSL", "AvgL", "CBL", "IWL"]
            .iter()
            .map(|s| s.to_string())
            .collect(),
    }
}

/// One data row straight from a season file: fields aligned to the
/// matched layout and typed, entities not yet normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMatchRow {
    pub source_file: String,
    pub line: u64,
    pub tournament: String,
    pub series: String,
    pub location: Option<String>,
    pub court: Option<String>,
    pub surface: String,
    pub round: String,
    pub best_of: Option<u8>,
    pub date: NaiveDate,
    pub winner: String,
    pub loser: String,
    pub winner_rank: Option<u32>,
    pub loser_rank: Option<u32>,
    pub set_scores: Vec<(u8, u8)>,
    pub comment: Option<String>,
    pub odds_winner: Option<f64>,
    pub odds_loser: Option<f64>,
}

fn find_column(header: &[String], name: &str) -> Option<usize> {
    let target = fold(name);
    header.iter().position(|h| fold(h) == target)
}

fn detect_delimiter(first_line: &str) -> u8 {
    let commas = first_line.matches(',').count();
    let semis = first_line.matches(';').count();
    if semis > commas {
        b';'
    } else {
        b','
    }
}

struct ResolvedLayout<'a> {
    layout: &'a ColumnLayout,
    tournament: usize,
    series: usize,
    date: usize,
    surface: usize,
    round: usize,
    winner: usize,
    loser: usize,
    location: Option<usize>,
    court: Option<usize>,
    best_of: Option<usize>,
    winner_rank: Option<usize>,
    loser_rank: Option<usize>,
    winner_sets: Vec<usize>,
    loser_sets: Vec<usize>,
    comment: Option<usize>,
    odds_winner: Option<usize>,
    odds_loser: Option<usize>,
}

fn resolve_layout<'a>(layout: &'a ColumnLayout, header: &[String]) -> ResolvedLayout<'a> {
    let req = |name: &str| find_column(header, name).expect("required column checked");
    let opt = |name: &Option<String>| name.as_deref().and_then(|n| find_column(header, n));
    let first_present = |names: &[String]| names.iter().find_map(|n| find_column(header, n));
    let mut winner_sets = Vec::new();
    let mut loser_sets = Vec::new();
    for (w, l) in layout
        .winner_set_games
        .iter()
        .zip(layout.loser_set_games.iter())
    {
        if let (Some(wi), Some(li)) = (find_column(header, w), find_column(header, l)) {
            winner_sets.push(wi);
            loser_sets.push(li);
        }
    }
    ResolvedLayout {
        layout,
        tournament: req(&layout.tournament),
        series: req(&layout.series),
        date: req(&layout.date),
        surface: req(&layout.surface),
        round: req(&layout.round),
        winner: req(&layout.winner),
        loser: req(&layout.loser),
        location: opt(&layout.location),
        court: opt(&layout.court),
        best_of: opt(&layout.best_of),
        winner_rank: opt(&layout.winner_rank),
        loser_rank: opt(&layout.loser_rank),
        winner_sets,
        loser_sets,
        comment: opt(&layout.comment),
        odds_winner: first_present(&layout.odds_winner),
        odds_loser: first_present(&layout.odds_loser),
    }
}

fn get(record: &csv::StringRecord, idx: usize) -> &str {
    record.get(idx).unwrap_or("").trim()
}

fn get_opt(record: &csv::StringRecord, idx: Option<usize>) -> Option<String> {
    idx.map(|i| get(record, i))
        .filter(|s| !s.is_empty())
        .map(|s| s.to_string())
}

fn parse_date(raw: &str, formats: &[String]) -> Option<NaiveDate> {
    if formats.is_empty() {
        DEFAULT_DATE_FORMATS
            .iter()
            .find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
    } else {
        formats
            .iter()
            .find_map(|f| NaiveDate::parse_from_str(raw, f).ok())
    }
}

/// Optional positive integer; "N/A" and friends read as absent.
fn parse_rank(raw: &str) -> Option<u32> {
    let n: f64 = raw.parse().ok()?;
    if n.fract() == 0.0 && n >= 1.0 && n <= u32::MAX as f64 {
        Some(n as u32)
    } else {
        None
    }
}

fn parse_games(raw: &str) -> Option<u8> {
    let n: f64 = raw.parse().ok()?;
    if n.fract() == 0.0 && (0.0..=99.0).contains(&n) {
        Some(n as u8)
    } else {
        None
    }
}

fn parse_odds(raw: &str) -> Option<f64> {
    let n: f64 = raw.parse().ok()?;
    if n.is_finite() && n >= 1.0 {
        Some(n)
    } else {
        None
    }
}

fn parse_file(path: &Path, config: &IngestConfig) -> Result<Vec<RawMatchRow>> {
    let file_name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let first_line = content.lines().next().unwrap_or("");
    let delimiter = detect_delimiter(first_line);

    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(content.as_bytes());
    let header: Vec<String> = reader
        .headers()
        .map_err(|e| Error::MalformedRow {
            file: file_name.clone(),
            line: 1,
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.to_string())
        .collect();

    let layout = config
        .layouts
        .iter()
        .find(|l| l.matches_header(&header))
        .ok_or_else(|| Error::UnmappedLayout {
            file: file_name.clone(),
            header: header.join(", "),
        })?;
    let cols = resolve_layout(layout, &header);

    let malformed = |line: u64, message: String| Error::MalformedRow {
        file: file_name.clone(),
        line,
        message,
    };

    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| malformed(0, e.to_string()))?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(rows.len() as u64 + 2);
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let raw_date = get(&record, cols.date);
        let date = parse_date(raw_date, &cols.layout.date_formats)
            .ok_or_else(|| malformed(line, format!("unparseable date {raw_date:?}")))?;
        let winner = get(&record, cols.winner).to_string();
        let loser = get(&record, cols.loser).to_string();
        if winner.is_empty() || loser.is_empty() {
            return Err(malformed(line, "missing winner or loser name".to_string()));
        }
        let tournament = get(&record, cols.tournament).to_string();
        if tournament.is_empty() {
            return Err(malformed(line, "missing tournament name".to_string()));
        }

        let mut set_scores = Vec::new();
        for (wi, li) in cols.winner_sets.iter().zip(cols.loser_sets.iter()) {
            let (w, l) = (get(&record, *wi), get(&record, *li));
            if let (Some(w), Some(l)) = (parse_games(w), parse_games(l)) {
                set_scores.push((w, l));
            }
        }

        rows.push(RawMatchRow {
            source_file: file_name.clone(),
            line,
            tournament,
            series: get(&record, cols.series).to_string(),
            location: get_opt(&record, cols.location),
            court: get_opt(&record, cols.court),
            surface: get(&record, cols.surface).to_string(),
            round: get(&record, cols.round).to_string(),
            best_of: cols
                .best_of
                .and_then(|i| get(&record, i).parse::<u8>().ok())
                .filter(|b| *b == 3 || *b == 5),
            date,
            winner,
            loser,
            winner_rank: cols.winner_rank.and_then(|i| parse_rank(get(&record, i))),
            loser_rank: cols.loser_rank.and_then(|i| parse_rank(get(&record, i))),
            set_scores,
            comment: get_opt(&record, cols.comment),
            odds_winner: cols.odds_winner.and_then(|i| parse_odds(get(&record, i))),
            odds_loser: cols.odds_loser.and_then(|i| parse_odds(get(&record, i))),
        });
    }
    Ok(rows)
}

/// Parse every season file in `directory`, aligning each file's columns
/// through the configured layouts. Files are visited in name order so
/// repeated runs see identical row order.
pub fn parse_raw_files(directory: &Path, config: &IngestConfig) -> Result<Vec<RawMatchRow>> {
    let mut paths: Vec<_> = fs::read_dir(directory)
        .map_err(|e| Error::io(directory, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(directory, e))?
        .into_iter()
        .map(|entry| entry.path())
        .filter(|p| {
            p.is_file()
                && matches!(
                    p.extension().and_then(|e| e.to_str()),
                    Some("csv") | Some("txt") | Some("tsv")
                )
        })
        .collect();
    paths.sort();

    let mut rows = Vec::new();
    for path in paths {
        rows.extend(parse_file(&path, config)?);
    }
    Ok(rows)
}
