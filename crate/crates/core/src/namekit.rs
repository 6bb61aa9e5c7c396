//! Spanish personal-name normalization and search-variant generation.
//!
//! All comparisons happen in folded space (lowercase, tildes and ñ removed),
//! so matching never depends on how complete the accent lexicon is. The
//! lexicon only adds accented spellings to the set of API queries.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::roster::Researcher;

/// Lexicon shipped with the crate (`data/accents.csv`).
pub const DEFAULT_LEXICON: &str = include_str!("../../../data/accents.csv");

/// Surname particles that glue to the following token. Multi-word particles
/// are listed as token sequences.
const PARTICLES: [&[&str]; 6] = [&["de", "la"], &["de", "los"], &["de"], &["del"], &["van"], &["von"]];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum NameError {
    #[error("name `{0}` is empty after normalization")]
    Invalid(String),
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("lexicon line {line}: key `{folded}` is not the folded form of `{accented}`")]
    Inconsistent { line: u64, folded: String, accented: String },
    #[error("lexicon schema error: missing column `{0}`")]
    MissingColumn(&'static str),
    #[error("malformed lexicon: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot read lexicon {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Folds the Spanish accented vowels and ñ to ASCII, preserving case.
/// Every other character passes through untouched.
pub fn fold_accents(s: &str) -> String {
    s.chars().map(fold_char).collect()
}

fn fold_char(c: char) -> char {
    match c {
        'á' => 'a',
        'é' => 'e',
        'í' => 'i',
        'ó' => 'o',
        'ú' | 'ü' => 'u',
        'ñ' => 'n',
        'Á' => 'A',
        'É' => 'E',
        'Í' => 'I',
        'Ó' => 'O',
        'Ú' | 'Ü' => 'U',
        'Ñ' => 'N',
        other => other,
    }
}

/// Canonical folded form of a personal name.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalizedName {
    pub text: String,
    pub tokens: Vec<String>,
}

impl NormalizedName {
    fn from_tokens(tokens: Vec<String>) -> Self {
        NormalizedName { text: tokens.join(" "), tokens }
    }
}

/// Lowercases, folds accents, turns hyphens and apostrophes into spaces,
/// drops other punctuation and collapses whitespace. A period survives only
/// directly after a single-letter token (an initial), so `"J.M."` becomes
/// `"j. m."`.
pub fn normalize(raw: &str) -> Result<NormalizedName, NameError> {
    let tokens = normalized_tokens(raw);
    if tokens.is_empty() {
        return Err(NameError::Invalid(raw.to_string()));
    }
    Ok(NormalizedName::from_tokens(tokens))
}

fn normalized_tokens(raw: &str) -> Vec<String> {
    let mut cleaned = String::with_capacity(raw.len());
    for c in fold_accents(&raw.to_lowercase()).chars() {
        if c.is_alphabetic() || c == '.' {
            cleaned.push(c);
        } else {
            // hyphens, apostrophes, commas, digits and any other symbol
            cleaned.push(' ');
        }
    }
    let mut tokens = Vec::new();
    for word in cleaned.split_whitespace() {
        let mut rest = word;
        while !rest.is_empty() {
            let (segment, had_period, tail) = match rest.find('.') {
                Some(i) => (&rest[..i], true, &rest[i + 1..]),
                None => (rest, false, ""),
            };
            if !segment.is_empty() {
                if had_period && segment.chars().count() == 1 {
                    tokens.push(format!("{segment}."));
                } else {
                    tokens.push(segment.to_string());
                }
            }
            rest = tail;
        }
    }
    tokens
}

fn is_initial(token: &str) -> bool {
    let mut chars = token.chars();
    matches!((chars.next(), chars.next(), chars.next()), (Some(_), None, _) | (Some(_), Some('.'), None))
}

fn initial_of(token: &str) -> String {
    let first = token.chars().next().unwrap_or(' ');
    format!("{first}.")
}

/// Folded-token → accented-token dictionary used to restore tildes that the
/// roster omitted.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AccentLexicon {
    entries: BTreeMap<String, String>,
}

impl AccentLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn bundled() -> Self {
        Self::parse(DEFAULT_LEXICON).expect("bundled lexicon is well formed")
    }

    pub fn load(path: &Path) -> Result<Self, LexiconError> {
        let raw = std::fs::read_to_string(path)
            .map_err(|source| LexiconError::Io { path: path.display().to_string(), source })?;
        Self::parse(&raw)
    }

    /// Parses `folded,accented` rows. Keys are checked against the folded
    /// form of their value.
    pub fn parse(raw: &str) -> Result<Self, LexiconError> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).comment(Some(b'#')).from_reader(raw.as_bytes());
        let headers = reader.headers()?.clone();
        let folded_col = headers.iter().position(|h| h == "folded").ok_or(LexiconError::MissingColumn("folded"))?;
        let accented_col =
            headers.iter().position(|h| h == "accented").ok_or(LexiconError::MissingColumn("accented"))?;
        let mut lex = AccentLexicon::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            let folded = record.get(folded_col).unwrap_or("").to_lowercase();
            let accented = record.get(accented_col).unwrap_or("").to_lowercase();
            if folded.is_empty() && accented.is_empty() {
                continue;
            }
            if fold_accents(&accented) != folded || folded.is_empty() {
                return Err(LexiconError::Inconsistent { line, folded, accented });
            }
            lex.entries.insert(folded, accented);
        }
        Ok(lex)
    }

    /// Inserts an accented token, keyed by its folded form.
    pub fn insert(&mut self, accented: &str) {
        let accented = accented.to_lowercase();
        self.entries.insert(fold_accents(&accented), accented);
    }

    pub fn restore(&self, folded_token: &str) -> Option<&str> {
        self.entries.get(folded_token).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VariantKind {
    AsGiven,
    AccentFolded,
    AccentRestored,
    InitialsGiven,
    FirstGivenOnly,
    FirstSurnameOnly,
    PrepositionJoined,
}

/// One query form of a researcher's name. `given_tokens` records how many
/// leading normalized tokens belong to the given names, which lets matching
/// treat given names and surnames differently.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NameVariant {
    pub text: String,
    pub kind: VariantKind,
    pub given_tokens: usize,
}

/// Key under which variants are deduplicated: lowercase with collapsed
/// whitespace. Accents are kept so that accented and unaccented query forms
/// both survive.
pub fn variant_key(text: &str) -> String {
    text.to_lowercase().split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Groups surname tokens so that particles stick to the token after them:
/// `de la cruz ibarra` → `["de la cruz", "ibarra"]`.
fn surname_groups(tokens: &[String]) -> Vec<(Vec<String>, bool)> {
    let mut groups = Vec::new();
    let mut i = 0;
    while i < tokens.len() {
        let mut group = Vec::new();
        let mut glued = false;
        'particles: while i < tokens.len() {
            for particle in PARTICLES {
                let end = i + particle.len();
                // a particle needs a following non-particle token to glue to
                if end < tokens.len() && tokens[i..end].iter().zip(particle.iter()).all(|(t, p)| t == p) {
                    group.extend(tokens[i..end].iter().cloned());
                    glued = true;
                    i = end;
                    continue 'particles;
                }
            }
            break;
        }
        if i < tokens.len() {
            group.push(tokens[i].clone());
            i += 1;
        }
        groups.push((group, glued));
    }
    groups
}

/// Builds the ordered, deduplicated set of query forms for a researcher.
///
/// Order: as given, accent-folded, accent-restored, initials of the given
/// names, first given name only, first surname group only. The first entry
/// is always the as-given form.
pub fn generate_variants(r: &Researcher, lex: &AccentLexicon) -> Vec<NameVariant> {
    let given = normalized_tokens(&r.given_names);
    let surnames = normalized_tokens(&r.surnames);
    let mut out: Vec<NameVariant> = Vec::new();
    let mut seen = HashSet::new();
    let mut push = |text: String, kind: VariantKind, given_tokens: usize| {
        let text = variant_key(&text);
        if !text.is_empty() && seen.insert(text.clone()) {
            out.push(NameVariant { text, kind, given_tokens });
        }
    };

    let as_given = format!("{} {}", r.given_names, r.surnames);
    push(as_given, VariantKind::AsGiven, given.len());

    let joined = |g: &[String], s: &[String]| g.iter().chain(s.iter()).cloned().collect::<Vec<_>>().join(" ");
    push(joined(&given, &surnames), VariantKind::AccentFolded, given.len());

    let restore = |tokens: &[String]| -> Vec<String> {
        tokens.iter().map(|t| lex.restore(t).map(str::to_string).unwrap_or_else(|| t.clone())).collect()
    };
    push(joined(&restore(&given), &restore(&surnames)), VariantKind::AccentRestored, given.len());

    if !given.is_empty() {
        let initials: Vec<String> = given.iter().map(|t| initial_of(t)).collect();
        push(joined(&initials, &surnames), VariantKind::InitialsGiven, given.len());
    }

    if given.len() >= 2 {
        push(joined(&given[..1], &surnames), VariantKind::FirstGivenOnly, 1);
    }

    let groups = surname_groups(&surnames);
    if groups.len() >= 2 {
        let (first, glued) = &groups[0];
        let kind = if *glued { VariantKind::PrepositionJoined } else { VariantKind::FirstSurnameOnly };
        push(joined(&given, first), kind, given.len());
    }

    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub matched: bool,
    pub variant: Option<NameVariant>,
}

impl MatchVerdict {
    fn hit(v: &NameVariant) -> Self {
        MatchVerdict { matched: true, variant: Some(v.clone()) }
    }

    fn miss() -> Self {
        MatchVerdict { matched: false, variant: None }
    }
}

fn tokens_compatible(a: &str, b: &str) -> bool {
    if a == b {
        return true;
    }
    let first = |t: &str| t.chars().next();
    (is_initial(a) || is_initial(b)) && first(a) == first(b)
}

/// True when the candidate's trailing tokens are exactly the variant's
/// surnames and its leading tokens pair up with the variant's given names,
/// either side allowed to abbreviate a given name to its initial.
fn initials_compatible(candidate: &NormalizedName, variant: &NormalizedName, given_tokens: usize) -> bool {
    let given_tokens = given_tokens.min(variant.tokens.len());
    if candidate.tokens.len() != variant.tokens.len() {
        return false;
    }
    let (cand_given, cand_surnames) = candidate.tokens.split_at(given_tokens);
    let (var_given, var_surnames) = variant.tokens.split_at(given_tokens);
    cand_surnames == var_surnames && cand_given.iter().zip(var_given).all(|(a, b)| tokens_compatible(a, b))
}

/// Decides whether an API display name denotes the researcher. Exact
/// equality with any variant (in folded space) wins first; failing that, a
/// variant whose given names agree up to initials is accepted. The witness
/// is the earliest variant in generation order under each rule.
pub fn names_match(candidate_display_name: &str, r: &Researcher, lex: &AccentLexicon) -> MatchVerdict {
    let Ok(candidate) = normalize(candidate_display_name) else {
        return MatchVerdict::miss();
    };
    let variants = generate_variants(r, lex);
    let normalized: Vec<Option<NormalizedName>> = variants.iter().map(|v| normalize(&v.text).ok()).collect();

    for (v, n) in variants.iter().zip(&normalized) {
        if n.as_ref().is_some_and(|n| n.text == candidate.text) {
            return MatchVerdict::hit(v);
        }
    }
    for (v, n) in variants.iter().zip(&normalized) {
        if n.as_ref().is_some_and(|n| initials_compatible(&candidate, n, v.given_tokens)) {
            return MatchVerdict::hit(v);
        }
    }
    MatchVerdict::miss()
}
