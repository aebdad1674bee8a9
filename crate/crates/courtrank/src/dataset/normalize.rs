//! Entity normalization: player names to one canonical "Surname F.M."
//! form, historical tournament series labels to the closed category set.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::dataset::Category;
use crate::error::{Error, Result};

/// Surname particles kept with the family name when splitting a
/// natural-order full name ("Juan Martin Del Potro" -> "Del Potro").
const PARTICLES: &[&str] = &[
    "de", "del", "della", "di", "da", "dos", "van", "von", "der", "den", "la", "le", "los", "el",
];

/// Replacement for one Latin character with a diacritic; `None` means
/// the character passes through unchanged.
fn fold_char(c: char) -> Option<&'static str> {
    Some(match c {
        'á' | 'à' | 'â' | 'ä' | 'ã' | 'å' | 'ā' | 'ă' | 'ą' => "a",
        'Á' | 'À' | 'Â' | 'Ä' | 'Ã' | 'Å' | 'Ā' | 'Ă' | 'Ą' => "A",
        'é' | 'è' | 'ê' | 'ë' | 'ē' | 'ė' | 'ę' | 'ě' => "e",
        'É' | 'È' | 'Ê' | 'Ë' | 'Ē' | 'Ė' | 'Ę' | 'Ě' => "E",
        'í' | 'ì' | 'î' | 'ï' | 'ī' | 'į' => "i",
        'Í' | 'Ì' | 'Î' | 'Ï' | 'Ī' | 'Į' => "I",
        'ó' | 'ò' | 'ô' | 'ö' | 'õ' | 'ø' | 'ō' | 'ő' => "o",
        'Ó' | 'Ò' | 'Ô' | 'Ö' | 'Õ' | 'Ø' | 'Ō' | 'Ő' => "O",
        'ú' | 'ù' | 'û' | 'ü' | 'ū' | 'ů' | 'ű' => "u",
        'Ú' | 'Ù' | 'Û' | 'Ü' | 'Ū' | 'Ů' | 'Ű' => "U",
        'ñ' | 'ń' | 'ň' => "n",
        'Ñ' | 'Ń' | 'Ň' => "N",
        'ç' | 'ć' | 'č' => "c",
        'Ç' | 'Ć' | 'Č' => "C",
        'š' | 'ś' | 'ş' => "s",
        'Š' | 'Ś' | 'Ş' => "S",
        'ž' | 'ź' | 'ż' => "z",
        'Ž' | 'Ź' | 'Ż' => "Z",
        'ý' | 'ÿ' => "y",
        'Ý' => "Y",
        'đ' | 'ď' => "d",
        'Đ' | 'Ď' => "D",
        'ğ' => "g",
        'Ğ' => "G",
        'ł' => "l",
        'Ł' => "L",
        'ŕ' | 'ř' => "r",
        'Ŕ' | 'Ř' => "R",
        'ť' => "t",
        'Ť' => "T",
        'ß' => "ss",
        'æ' => "ae",
        'Æ' => "Ae",
        'œ' => "oe",
        'Œ' => "Oe",
        _ => return None,
    })
}

/// Lowercase, strip diacritics, and collapse whitespace. Used as the
/// comparison key for both player and tournament names.
pub(crate) fn fold(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for part in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in part.chars() {
            match fold_char(c) {
                Some(rep) => out.extend(rep.chars().flat_map(|r| r.to_lowercase())),
                None => out.extend(c.to_lowercase()),
            }
        }
    }
    out
}

/// Collapse whitespace and strip diacritics while keeping case.
fn clean_display(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for part in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        for c in part.chars() {
            match fold_char(c) {
                Some(rep) => out.push_str(rep),
                None => out.push(c),
            }
        }
    }
    out
}

/// Title-case one word: first alphabetic character uppercased, the rest
/// lowercased. Hyphenated segments are cased independently.
fn title_word(word: &str) -> String {
    word.split('-')
        .map(|seg| {
            let mut out = String::with_capacity(seg.len());
            let mut first = true;
            for c in seg.chars() {
                if first && c.is_alphabetic() {
                    out.extend(c.to_uppercase());
                    first = false;
                } else {
                    out.extend(c.to_lowercase());
                }
            }
            out
        })
        .collect::<Vec<_>>()
        .join("-")
}

fn title_case(s: &str) -> String {
    s.split_whitespace()
        .map(title_word)
        .collect::<Vec<_>>()
        .join(" ")
}

/// A parsed name: surname words plus given-name initials, if any.
#[derive(Debug, Clone)]
struct ParsedName {
    surname: String,
    initials: Vec<char>,
    /// True when the input already carried explicit initials rather
    /// than full given names.
    canonical_shape: bool,
}

/// True for tokens made of single letters and periods: "R.", "J.M.",
/// "J.M", bare "J". "Ro." is not one.
fn is_initial_token(tok: &str) -> bool {
    let stripped = tok.strip_suffix('.').unwrap_or(tok);
    if stripped.is_empty() {
        return false;
    }
    stripped
        .split('.')
        .all(|p| p.chars().count() == 1 && p.chars().all(|c| c.is_alphabetic()))
}

fn initials_of(tok: &str) -> Vec<char> {
    tok.split('.')
        .filter(|p| !p.is_empty())
        .filter_map(|p| p.chars().next())
        .flat_map(|c| c.to_uppercase())
        .collect()
}

/// Initials contributed by one given-name token: expanded when the
/// token is itself an initial group, else its first letter.
fn given_initials(tok: &str) -> Vec<char> {
    if is_initial_token(tok) {
        initials_of(tok)
    } else {
        tok.chars()
            .next()
            .into_iter()
            .flat_map(|c| c.to_uppercase())
            .collect()
    }
}

fn parse_name(cleaned: &str) -> ParsedName {
    let tokens: Vec<&str> = cleaned.split_whitespace().collect();
    // Trailing run of initial tokens: "Del Potro J.M." shape.
    let mut split = tokens.len();
    while split > 1 && is_initial_token(tokens[split - 1]) {
        split -= 1;
    }
    if split < tokens.len() {
        let initials = tokens[split..]
            .iter()
            .flat_map(|t| initials_of(t))
            .collect();
        return ParsedName {
            surname: tokens[..split].join(" "),
            initials,
            canonical_shape: true,
        };
    }
    if tokens.len() == 1 {
        return ParsedName {
            surname: tokens[0].to_string(),
            initials: Vec::new(),
            canonical_shape: true,
        };
    }
    // Natural order: given names first, surname last, particles kept
    // with the surname. Covers "J.M Del Potro" too, where the given
    // part is already an initial group.
    let mut start = tokens.len() - 1;
    while start > 1 && PARTICLES.contains(&fold(tokens[start - 1]).as_str()) {
        start -= 1;
    }
    let initials = tokens[..start]
        .iter()
        .flat_map(|t| given_initials(t))
        .collect();
    ParsedName {
        surname: tokens[start..].join(" "),
        initials,
        canonical_shape: false,
    }
}

fn canonical_form(parsed: &ParsedName) -> String {
    let surname = title_case(&parsed.surname);
    if parsed.initials.is_empty() {
        return surname;
    }
    let initials: String = parsed.initials.iter().map(|c| format!("{c}.")).collect();
    format!("{surname} {initials}")
}

/// Incremental resolver used by store construction: keeps an index of
/// admitted canonical names so lookups stay cheap over large inputs.
#[derive(Debug, Default)]
pub struct NameResolver {
    by_fold: HashMap<String, String>,
    by_key: BTreeMap<(String, char), BTreeSet<String>>,
}

impl NameResolver {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_known<'a>(known: impl IntoIterator<Item = &'a str>) -> Self {
        let mut resolver = Self::new();
        for name in known {
            resolver.admit(name.to_string());
        }
        resolver
    }

    fn admit(&mut self, canonical: String) {
        let parsed = parse_name(&clean_display(&canonical));
        if let Some(first) = parsed.initials.first() {
            self.by_key
                .entry((fold(&parsed.surname), *first))
                .or_default()
                .insert(canonical.clone());
        }
        self.by_fold.insert(fold(&canonical), canonical);
    }

    fn candidates(&self, surname: &str, initial: char) -> Option<&BTreeSet<String>> {
        self.by_key.get(&(fold(surname), initial))
    }

    /// Resolve `name` to an existing canonical name, or admit it as a
    /// new one. Errors when two distinct known names both match.
    pub fn resolve(&mut self, name: &str) -> Result<String> {
        let cleaned = clean_display(name);
        if cleaned.is_empty() {
            return Err(Error::invalid("empty player name"));
        }
        if let Some(existing) = self.by_fold.get(&fold(&cleaned)) {
            return Ok(existing.clone());
        }
        let parsed = parse_name(&cleaned);
        let mut matches: BTreeSet<String> = BTreeSet::new();
        if parsed.canonical_shape {
            if let Some(first) = parsed.initials.first() {
                if let Some(set) = self.candidates(&parsed.surname, *first) {
                    matches.extend(set.iter().cloned());
                }
            }
        } else {
            // The surname may span several words; try every split.
            let tokens: Vec<&str> = cleaned.split_whitespace().collect();
            let first_initial = parsed.initials.first().copied();
            if let Some(initial) = first_initial {
                for k in 1..tokens.len() {
                    let surname = tokens[k..].join(" ");
                    if let Some(set) = self.candidates(&surname, initial) {
                        matches.extend(set.iter().cloned());
                    }
                }
            }
        }
        match matches.len() {
            0 => {
                let admitted = canonical_form(&parsed);
                self.admit(admitted.clone());
                Ok(admitted)
            }
            1 => Ok(matches.into_iter().next().unwrap()),
            _ => {
                let mut iter = matches.into_iter();
                Err(Error::AmbiguousPlayer {
                    name: name.to_string(),
                    first: iter.next().unwrap(),
                    second: iter.next().unwrap(),
                })
            }
        }
    }
}

/// Normalize one player name against a set of known canonical names.
///
/// Collapses whitespace, case, and diacritics; maps variant forms (full
/// given names vs. initials) onto a known canonical name when exactly
/// one candidate matches on surname plus first initial; otherwise the
/// cleaned name itself is admitted in canonical form.
pub fn normalize_player(name: &str, known: &BTreeSet<String>) -> Result<String> {
    let mut resolver = NameResolver::with_known(known.iter().map(|s| s.as_str()));
    resolver.resolve(name)
}

/// Map a raw tournament name and historical series label to a trimmed
/// display name and its category. Alias keys are compared
/// case-insensitively; an unknown label is an error so that new labels
/// are added deliberately rather than guessed.
pub fn unify_tournament(
    raw_name: &str,
    raw_series: &str,
    _year: i32,
    series_aliases: &BTreeMap<String, Category>,
) -> Result<(String, Category)> {
    let name = title_case(&clean_display(raw_name));
    if name.is_empty() {
        return Err(Error::invalid("empty tournament name"));
    }
    let key = fold(raw_series);
    let category = series_aliases
        .iter()
        .find(|(alias, _)| fold(alias) == key)
        .map(|(_, category)| *category)
        .ok_or_else(|| Error::UnknownSeries {
            label: raw_series.trim().to_string(),
        })?;
    Ok((name, category))
}
