//! Store assembly and persistence. The canonical store is three
//! tab-separated tables (players, tournaments, matches) plus in-memory
//! indexes; it is immutable once built and safe to share across
//! threads.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate};

use crate::dataset::normalize::{fold, unify_tournament, NameResolver};
use crate::dataset::parse::RoundLabel;
use crate::dataset::{
    Category, IngestConfig, MatchId, MatchRecord, Player, PlayerId, RawMatchRow, Round, Surface,
    Tournament, TournamentId,
};
use crate::error::{Error, Result};

pub const PLAYERS_FILE: &str = "players.tsv";
pub const TOURNAMENTS_FILE: &str = "tournaments.tsv";
pub const MATCHES_FILE: &str = "matches.tsv";

const PLAYERS_HEADER: &str = "player_id\tcanonical_name";
const TOURNAMENTS_HEADER: &str =
    "tournament_id\tname\tyear\tweek\tsurface\tbest_of\tcategory\tlocation\tindoor";
const MATCHES_HEADER: &str = "match_id\ttournament_id\tround\tdate\twinner_id\tloser_id\t\
     official_rank_winner\tofficial_rank_loser\tset_scores\tcompleted\todds_winner\todds_loser";

/// The three-table store. Matches are kept sorted by `(date, match_id)`
/// so time-window queries are range scans.
#[derive(Debug, Clone)]
pub struct MatchStore {
    players: Vec<Player>,
    tournaments: Vec<Tournament>,
    matches: Vec<MatchRecord>,
    player_index: HashMap<PlayerId, usize>,
    tournament_index: HashMap<TournamentId, usize>,
    by_year_week: BTreeMap<(i32, u32), Vec<TournamentId>>,
    start_dates: HashMap<TournamentId, NaiveDate>,
    matches_by_tournament: HashMap<TournamentId, Vec<usize>>,
}

impl MatchStore {
    fn assemble(
        players: Vec<Player>,
        tournaments: Vec<Tournament>,
        mut matches: Vec<MatchRecord>,
    ) -> Result<MatchStore> {
        matches.sort_by_key(|m| (m.date, m.match_id));
        let player_index: HashMap<_, _> = players
            .iter()
            .enumerate()
            .map(|(i, p)| (p.player_id, i))
            .collect();
        let tournament_index: HashMap<_, _> = tournaments
            .iter()
            .enumerate()
            .map(|(i, t)| (t.tournament_id, i))
            .collect();

        let mut by_year_week: BTreeMap<(i32, u32), Vec<TournamentId>> = BTreeMap::new();
        for t in &tournaments {
            by_year_week
                .entry((t.year, t.week))
                .or_default()
                .push(t.tournament_id);
        }
        let mut start_dates = HashMap::new();
        let mut matches_by_tournament: HashMap<TournamentId, Vec<usize>> = HashMap::new();
        for (idx, m) in matches.iter().enumerate() {
            matches_by_tournament
                .entry(m.tournament_id)
                .or_default()
                .push(idx);
            let entry = start_dates.entry(m.tournament_id).or_insert(m.date);
            if m.date < *entry {
                *entry = m.date;
            }
        }

        let store = MatchStore {
            players,
            tournaments,
            matches,
            player_index,
            tournament_index,
            by_year_week,
            start_dates,
            matches_by_tournament,
        };
        store.check_integrity()?;
        Ok(store)
    }

    fn check_integrity(&self) -> Result<()> {
        let mut names: HashMap<String, PlayerId> = HashMap::new();
        for p in &self.players {
            if p.canonical_name.trim().is_empty() {
                return Err(Error::integrity(format!(
                    "player {} has empty name",
                    p.player_id
                )));
            }
            if let Some(prev) = names.insert(fold(&p.canonical_name), p.player_id) {
                return Err(Error::integrity(format!(
                    "players {} and {} share name {:?}",
                    prev, p.player_id, p.canonical_name
                )));
            }
        }
        let mut editions: HashMap<(String, i32), TournamentId> = HashMap::new();
        for t in &self.tournaments {
            if let Some(prev) = editions.insert((fold(&t.name), t.year), t.tournament_id) {
                return Err(Error::integrity(format!(
                    "tournaments {} and {} share edition ({}, {})",
                    prev, t.tournament_id, t.name, t.year
                )));
            }
        }
        for m in &self.matches {
            if m.winner_id == m.loser_id {
                return Err(Error::integrity(format!(
                    "match {} has winner == loser ({})",
                    m.match_id, m.winner_id
                )));
            }
            if !self.player_index.contains_key(&m.winner_id)
                || !self.player_index.contains_key(&m.loser_id)
            {
                return Err(Error::integrity(format!(
                    "match {} references a missing player",
                    m.match_id
                )));
            }
            let t = self
                .tournament_index
                .get(&m.tournament_id)
                .map(|i| &self.tournaments[*i])
                .ok_or_else(|| {
                    Error::integrity(format!(
                        "match {} references missing tournament {}",
                        m.match_id, m.tournament_id
                    ))
                })?;
            if m.date.year() != t.year {
                return Err(Error::integrity(format!(
                    "match {} dated {} outside tournament year {}",
                    m.match_id, m.date, t.year
                )));
            }
            if m.completed {
                let need = (t.best_of / 2 + 1) as usize;
                if !m.set_scores.is_empty() && m.sets_won_by_winner() < need {
                    return Err(Error::integrity(format!(
                        "match {} flagged complete with only {} sets won",
                        m.match_id,
                        m.sets_won_by_winner()
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn players(&self) -> &[Player] {
        &self.players
    }

    pub fn tournaments(&self) -> &[Tournament] {
        &self.tournaments
    }

    /// All matches, sorted by `(date, match_id)`.
    pub fn matches(&self) -> &[MatchRecord] {
        &self.matches
    }

    pub fn player(&self, id: PlayerId) -> Option<&Player> {
        self.player_index.get(&id).map(|i| &self.players[*i])
    }

    pub fn player_name(&self, id: PlayerId) -> &str {
        self.player(id)
            .map(|p| p.canonical_name.as_str())
            .unwrap_or("?")
    }

    pub fn tournament(&self, id: TournamentId) -> Option<&Tournament> {
        self.tournament_index
            .get(&id)
            .map(|i| &self.tournaments[*i])
    }

    pub fn find_tournament(&self, name: &str, year: i32) -> Option<&Tournament> {
        let key = fold(name);
        self.tournaments
            .iter()
            .find(|t| t.year == year && fold(&t.name) == key)
    }

    /// Tournament ids grouped by `(year, ISO week)`.
    pub fn by_year_week(&self) -> &BTreeMap<(i32, u32), Vec<TournamentId>> {
        &self.by_year_week
    }

    /// Date of the tournament's earliest match.
    pub fn tournament_start(&self, id: TournamentId) -> Option<NaiveDate> {
        self.start_dates.get(&id).copied()
    }

    /// Matches of one tournament in `(date, match_id)` order.
    pub fn tournament_matches(&self, id: TournamentId) -> impl Iterator<Item = &MatchRecord> {
        self.matches_by_tournament
            .get(&id)
            .into_iter()
            .flatten()
            .map(move |idx| &self.matches[*idx])
    }

    /// Tournaments of the given years in `(year, week, id)` order.
    pub fn tournaments_in_years(&self, years: &[i32]) -> Vec<TournamentId> {
        let mut ids: Vec<_> = self
            .tournaments
            .iter()
            .filter(|t| years.contains(&t.year))
            .map(|t| (t.year, t.week, t.tournament_id))
            .collect();
        ids.sort_unstable();
        ids.into_iter().map(|(_, _, id)| id).collect()
    }

    /// Completed matches dated strictly before the target tournament's
    /// first match and within `age_years * 52` weeks of it, in
    /// `(date, match_id)` order.
    pub fn query_window(&self, target: TournamentId, age_years: u32) -> Result<Vec<&MatchRecord>> {
        if age_years == 0 {
            return Err(Error::invalid("age_years must be at least 1"));
        }
        let start = self
            .tournament_start(target)
            .ok_or_else(|| Error::UnknownTournament {
                name: format!("id {target}"),
            })?;
        let cutoff = start - Duration::weeks(52 * age_years as i64);
        let hi = self.matches.partition_point(|m| m.date < start);
        let lo = self.matches.partition_point(|m| m.date < cutoff);
        Ok(self.matches[lo..hi]
            .iter()
            .filter(|m| m.completed)
            .collect())
    }
}

#[derive(Debug)]
struct TournamentBuilder {
    id: TournamentId,
    name: String,
    year: i32,
    category: Category,
    surface: Surface,
    best_of: Option<u8>,
    location: Option<String>,
    indoor: Option<bool>,
    earliest: NaiveDate,
    max_numbered: u8,
}

struct PendingMatch {
    match_id: MatchId,
    tournament_key: (String, i32),
    round: RoundLabel,
    date: NaiveDate,
    winner_id: PlayerId,
    loser_id: PlayerId,
    winner_rank: Option<u32>,
    loser_rank: Option<u32>,
    set_scores: Vec<(u8, u8)>,
    comment_completed: bool,
    odds_winner: Option<f64>,
    odds_loser: Option<f64>,
    source: (String, u64),
}

/// Resolve a draw-size-relative round. `max_numbered` is the highest
/// numbered round seen in the tournament; numbered rounds count down to
/// the round of 16, after which source files switch to named rounds.
fn resolve_numbered(n: u8, max_numbered: u8) -> Option<Round> {
    const LADDER: [Round; 4] = [Round::R128, Round::R64, Round::R32, Round::R16];
    let idx = 3 + n as i32 - max_numbered as i32;
    if (0..4).contains(&idx) {
        Some(LADDER[idx as usize])
    } else {
        None
    }
}

/// Build the canonical store from raw rows: normalize entities,
/// deduplicate players and tournament editions, resolve rounds, flag
/// incomplete matches, and verify referential integrity.
pub fn build_store(rows: &[RawMatchRow], config: &IngestConfig) -> Result<MatchStore> {
    let mut resolver = NameResolver::new();
    let mut players: Vec<Player> = Vec::new();
    let mut player_ids: HashMap<String, PlayerId> = HashMap::new();
    let mut tournaments: HashMap<(String, i32), TournamentBuilder> = HashMap::new();
    let mut tournament_order: Vec<(String, i32)> = Vec::new();
    let mut pending: Vec<PendingMatch> = Vec::new();

    let intern_player = |resolver: &mut NameResolver,
                         players: &mut Vec<Player>,
                         player_ids: &mut HashMap<String, PlayerId>,
                         raw: &str|
     -> Result<PlayerId> {
        let canonical = resolver.resolve(raw)?;
        if let Some(id) = player_ids.get(&canonical) {
            return Ok(*id);
        }
        let id = players.len() as PlayerId + 1;
        players.push(Player {
            player_id: id,
            canonical_name: canonical.clone(),
        });
        player_ids.insert(canonical, id);
        Ok(id)
    };

    for (i, row) in rows.iter().enumerate() {
        let match_id = i as MatchId + 1;
        let winner_id = intern_player(&mut resolver, &mut players, &mut player_ids, &row.winner)?;
        let loser_id = intern_player(&mut resolver, &mut players, &mut player_ids, &row.loser)?;

        let (name, category) = unify_tournament(
            &row.tournament,
            &row.series,
            row.date.year(),
            &config.series_aliases,
        )?;
        let surface = config.resolve_surface(&row.surface)?;
        let round = config.resolve_round(&row.round)?;
        let key = (fold(&name), row.date.year());
        let builder = tournaments.entry(key.clone()).or_insert_with(|| {
            tournament_order.push(key.clone());
            TournamentBuilder {
                id: tournament_order.len() as TournamentId,
                name,
                year: row.date.year(),
                category,
                surface,
                best_of: None,
                location: None,
                indoor: None,
                earliest: row.date,
                max_numbered: 0,
            }
        });
        if row.date < builder.earliest {
            builder.earliest = row.date;
        }
        if builder.best_of.is_none() {
            builder.best_of = row.best_of;
        }
        if builder.location.is_none() {
            builder.location = row.location.clone();
        }
        if builder.indoor.is_none() {
            builder.indoor = row.court.as_deref().map(|c| fold(c) == "indoor");
        }
        if let RoundLabel::Numbered(n) = round {
            builder.max_numbered = builder.max_numbered.max(n);
        }

        let comment_completed = row
            .comment
            .as_deref()
            .map(|c| fold(c) == "completed")
            .unwrap_or(true);

        pending.push(PendingMatch {
            match_id,
            tournament_key: key,
            round,
            date: row.date,
            winner_id,
            loser_id,
            winner_rank: row.winner_rank,
            loser_rank: row.loser_rank,
            set_scores: row.set_scores.clone(),
            comment_completed,
            odds_winner: row.odds_winner,
            odds_loser: row.odds_loser,
            source: (row.source_file.clone(), row.line),
        });
    }

    let tournaments_final: Vec<Tournament> = tournament_order
        .iter()
        .map(|key| {
            let b = &tournaments[key];
            Tournament {
                tournament_id: b.id,
                name: b.name.clone(),
                year: b.year,
                week: b.earliest.iso_week().week(),
                surface: b.surface,
                best_of: b.best_of.unwrap_or(match b.category {
                    Category::GrandSlam => 5,
                    _ => 3,
                }),
                category: b.category,
                location: b.location.clone().unwrap_or_default(),
                indoor: b.indoor.unwrap_or(false),
            }
        })
        .collect();

    let mut matches = Vec::with_capacity(pending.len());
    for pm in pending {
        let builder = &tournaments[&pm.tournament_key];
        let round = match pm.round {
            RoundLabel::Absolute(r) => r,
            RoundLabel::Numbered(n) => {
                resolve_numbered(n, builder.max_numbered).ok_or_else(|| Error::MalformedRow {
                    file: pm.source.0.clone(),
                    line: pm.source.1,
                    message: format!(
                        "cannot place numbered round {} in a draw with {} numbered rounds",
                        n, builder.max_numbered
                    ),
                })?
            }
        };
        if pm.winner_id == pm.loser_id {
            return Err(Error::integrity(format!(
                "{}:{}: winner and loser normalize to the same player",
                pm.source.0, pm.source.1
            )));
        }
        let best_of = tournaments_final[(builder.id - 1) as usize].best_of;
        let need = (best_of / 2 + 1) as usize;
        let sets_won = pm.set_scores.iter().filter(|(w, l)| w > l).count();
        let completed = pm.comment_completed && (pm.set_scores.is_empty() || sets_won >= need);

        matches.push(MatchRecord {
            match_id: pm.match_id,
            tournament_id: builder.id,
            round,
            date: pm.date,
            winner_id: pm.winner_id,
            loser_id: pm.loser_id,
            official_rank_winner: pm.winner_rank,
            official_rank_loser: pm.loser_rank,
            set_scores: pm.set_scores,
            completed,
            odds_winner: pm.odds_winner,
            odds_loser: pm.odds_loser,
        });
    }

    MatchStore::assemble(players, tournaments_final, matches)
}

fn opt_str<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(|x| x.to_string()).unwrap_or_default()
}

fn format_sets(sets: &[(u8, u8)]) -> String {
    sets.iter()
        .map(|(w, l)| format!("{w}-{l}"))
        .collect::<Vec<_>>()
        .join(",")
}

fn parse_sets(s: &str) -> Result<Vec<(u8, u8)>> {
    if s.is_empty() {
        return Ok(Vec::new());
    }
    s.split(',')
        .map(|pair| {
            let (w, l) = pair
                .split_once('-')
                .ok_or_else(|| Error::integrity(format!("bad set score {pair:?}")))?;
            Ok((
                w.parse()
                    .map_err(|_| Error::integrity(format!("bad games {w:?}")))?,
                l.parse()
                    .map_err(|_| Error::integrity(format!("bad games {l:?}")))?,
            ))
        })
        .collect()
}

impl MatchStore {
    /// Write the three tables under `dir`. Output is byte-deterministic
    /// for a given store.
    pub fn write(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let write_file = |name: &str, content: String| -> Result<()> {
            let path = dir.join(name);
            let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            f.write_all(content.as_bytes())
                .map_err(|e| Error::io(&path, e))
        };

        let mut players = String::from(PLAYERS_HEADER);
        players.push('\n');
        for p in &self.players {
            players.push_str(&format!("{}\t{}\n", p.player_id, p.canonical_name));
        }
        write_file(PLAYERS_FILE, players)?;

        let mut tournaments = String::from(TOURNAMENTS_HEADER);
        tournaments.push('\n');
        for t in &self.tournaments {
            tournaments.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                t.tournament_id,
                t.name,
                t.year,
                t.week,
                t.surface,
                t.best_of,
                t.category,
                t.location,
                t.indoor
            ));
        }
        write_file(TOURNAMENTS_FILE, tournaments)?;

        let mut matches = String::from(MATCHES_HEADER);
        matches.push('\n');
        for m in &self.matches {
            matches.push_str(&format!(
                "{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\t{}\n",
                m.match_id,
                m.tournament_id,
                m.round,
                m.date.format("%Y-%m-%d"),
                m.winner_id,
                m.loser_id,
                opt_str(&m.official_rank_winner),
                opt_str(&m.official_rank_loser),
                format_sets(&m.set_scores),
                m.completed,
                opt_str(&m.odds_winner),
                opt_str(&m.odds_loser),
            ));
        }
        write_file(MATCHES_FILE, matches)
    }
}

fn read_table(path: &Path, expected_header: &str) -> Result<Vec<Vec<String>>> {
    let content = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = content.lines();
    let header = lines.next().unwrap_or_default();
    if header != expected_header {
        return Err(Error::integrity(format!(
            "{}: unexpected header {header:?}",
            path.display()
        )));
    }
    Ok(lines
        .filter(|l| !l.is_empty())
        .map(|l| l.split('\t').map(|f| f.to_string()).collect())
        .collect())
}

fn field<'a>(row: &'a [String], idx: usize, path: &Path) -> Result<&'a str> {
    row.get(idx)
        .map(|s| s.as_str())
        .ok_or_else(|| Error::integrity(format!("{}: truncated row", path.display())))
}

fn parse_field<T: FromStr>(row: &[String], idx: usize, path: &Path) -> Result<T> {
    let raw = field(row, idx, path)?;
    raw.parse()
        .map_err(|_| Error::integrity(format!("{}: bad field {raw:?}", path.display())))
}

fn parse_opt_field<T: FromStr>(row: &[String], idx: usize, path: &Path) -> Result<Option<T>> {
    let raw = field(row, idx, path)?;
    if raw.is_empty() {
        return Ok(None);
    }
    raw.parse()
        .map(Some)
        .map_err(|_| Error::integrity(format!("{}: bad field {raw:?}", path.display())))
}

/// Load a store previously written with [`MatchStore::write`];
/// re-validates integrity.
pub fn load_store(dir: &Path) -> Result<MatchStore> {
    let players_path = dir.join(PLAYERS_FILE);
    let players = read_table(&players_path, PLAYERS_HEADER)?
        .iter()
        .map(|row| {
            Ok(Player {
                player_id: parse_field(row, 0, &players_path)?,
                canonical_name: field(row, 1, &players_path)?.to_string(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let tournaments_path = dir.join(TOURNAMENTS_FILE);
    let tournaments = read_table(&tournaments_path, TOURNAMENTS_HEADER)?
        .iter()
        .map(|row| {
            Ok(Tournament {
                tournament_id: parse_field(row, 0, &tournaments_path)?,
                name: field(row, 1, &tournaments_path)?.to_string(),
                year: parse_field(row, 2, &tournaments_path)?,
                week: parse_field(row, 3, &tournaments_path)?,
                surface: parse_field(row, 4, &tournaments_path)?,
                best_of: parse_field(row, 5, &tournaments_path)?,
                category: parse_field(row, 6, &tournaments_path)?,
                location: field(row, 7, &tournaments_path)?.to_string(),
                indoor: parse_field(row, 8, &tournaments_path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let matches_path = dir.join(MATCHES_FILE);
    let matches = read_table(&matches_path, MATCHES_HEADER)?
        .iter()
        .map(|row| {
            let date_raw: String = parse_field(row, 3, &matches_path)?;
            let date = NaiveDate::parse_from_str(&date_raw, "%Y-%m-%d").map_err(|_| {
                Error::integrity(format!("{}: bad date {date_raw:?}", matches_path.display()))
            })?;
            Ok(MatchRecord {
                match_id: parse_field(row, 0, &matches_path)?,
                tournament_id: parse_field(row, 1, &matches_path)?,
                round: parse_field(row, 2, &matches_path)?,
                date,
                winner_id: parse_field(row, 4, &matches_path)?,
                loser_id: parse_field(row, 5, &matches_path)?,
                official_rank_winner: parse_opt_field(row, 6, &matches_path)?,
                official_rank_loser: parse_opt_field(row, 7, &matches_path)?,
                set_scores: parse_sets(field(row, 8, &matches_path)?)?,
                completed: parse_field(row, 9, &matches_path)?,
                odds_winner: parse_opt_field(row, 10, &matches_path)?,
                odds_loser: parse_opt_field(row, 11, &matches_path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    MatchStore::assemble(players, tournaments, matches)
}
