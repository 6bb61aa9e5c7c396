//! Seeded synthetic world: a roster, the author entities and works an API
//! would return for it, and a ground-truth manifest saying which entities
//! really belong to each researcher and how each work should classify.

use std::collections::{BTreeMap, BTreeSet};
use std::ops::RangeInclusive;
use std::path::Path;
use std::sync::Arc;

use chrono::{Datelike, NaiveDate};
use oa_monitor::harvester::SimulatedClock;
use oa_monitor::namekit::{generate_variants, names_match, AccentLexicon};
use oa_monitor::pipeline::{Pipeline, RunConfig, Source};
use oa_monitor::roster::{parse_roster, Area, Researcher};
use oa_monitor::testing::{author_json, MockApi, MockWork};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone)]
pub struct SynthSpec {
    pub seed: u64,
    pub researchers: usize,
    /// Works on the first researcher's profile; 0 draws from `works_per_entity`.
    pub prolific_works: usize,
    pub works_per_entity: RangeInclusive<usize>,
    /// Extra deposit probability from the law date on.
    pub jump: f64,
    pub homonyms: bool,
}

/// The bundled fixture under `fixtures/synthetic`.
pub fn fixture_spec() -> SynthSpec {
    SynthSpec { seed: 2022, researchers: 25, prolific_works: 230, works_per_entity: 5..=18, jump: 0.05, homonyms: true }
}

/// Roughly 20,000 works, for recovering the planted jump end to end.
pub fn large_spec() -> SynthSpec {
    SynthSpec { seed: 7, researchers: 40, prolific_works: 0, works_per_entity: 750..=800, jump: 0.05, homonyms: false }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    /// The researcher's own profile.
    Profile,
    /// Same name, mostly foreign affiliations.
    ForeignHomonym,
    /// Same name, no affiliation country on any work.
    Uncountried,
    /// Surfaces in search but the name is someone else's.
    OtherName,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthWork {
    pub id: String,
    pub date: Option<String>,
    pub year: Option<i32>,
    pub work_type: String,
    /// gold, green, bronze, hybrid, closed or unknown.
    pub status: String,
    pub oa_status_raw: Option<String>,
    pub doi: Option<String>,
    pub host_url: Option<String>,
    pub location_urls: Vec<String>,
    pub countries: Vec<String>,
    pub argentine_repo: bool,
    pub international_repo: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthEntity {
    pub id: String,
    pub display_name: String,
    pub role: Role,
    pub works: Vec<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TruthResearcher {
    pub id: String,
    pub given_names: String,
    pub surnames: String,
    /// As written in the roster; may be empty or unrecognised.
    pub area: String,
    pub discipline: String,
    pub declared_articles: u64,
    pub entities: Vec<TruthEntity>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Truth {
    pub seed: u64,
    pub researchers: Vec<TruthResearcher>,
    pub works: BTreeMap<String, TruthWork>,
}

pub struct World {
    pub truth: Truth,
    pub roster_csv: String,
    pub api: MockApi,
}

const GIVEN: [&str; 25] = [
    "María José",
    "Juan Pablo",
    "Ana",
    "Lucía",
    "Martín",
    "Sofía",
    "Nicolás",
    "José Luis",
    "Verónica",
    "Sebastián",
    "Inés",
    "Raúl",
    "Mónica",
    "Andrés",
    "Belén",
    "Julián",
    "Rocío",
    "Héctor",
    "Agustín",
    "Ángela",
    "Tomás",
    "Begoña",
    "Iñaki",
    "Óscar",
    "Valentín",
];
const SURNAMES: [&str; 25] = [
    "García",
    "Pérez",
    "Fernández",
    "López",
    "Rodríguez Peña",
    "Ibáñez",
    "Muñoz",
    "Gómez",
    "Díaz",
    "Sánchez",
    "Martínez",
    "Núñez",
    "Suárez",
    "Giménez",
    "Castañeda",
    "Domínguez",
    "Benítez",
    "Aráoz",
    "Chávez",
    "Vázquez",
    "Ramírez",
    "Hernández",
    "Méndez",
    "Gutiérrez",
    "Calderón",
];
const OTHER_GIVEN: [&str; 6] = ["Pedro", "Carlos", "Federico", "Gabriela", "Esteban", "Ulises"];
const AREAS: [&str; 4] = ["CAIM", "CBS", "CEN", "CSH"];
const DISCIPLINES: [[&str; 2]; 4] =
    [["Ingeniería", "Agronomía"], ["Medicina", "Biología"], ["Física", "Química"], ["Historia, Geografía", "Economía"]];
const FOREIGN: [&str; 5] = ["BR", "ES", "MX", "US", "CL"];
const OTHER_TYPES: [&str; 4] = ["book-chapter", "dataset", "proceedings-article", "review"];
const STATUS_WEIGHTS: [(&str, f64); 6] =
    [("gold", 0.18), ("green", 0.14), ("bronze", 0.10), ("hybrid", 0.05), ("closed", 0.38), ("unknown", 0.15)];

pub fn fold(s: &str) -> String {
    oa_monitor::namekit::fold_accents(s)
}

fn window_start() -> NaiveDate {
    NaiveDate::from_ymd_opt(2006, 1, 1).unwrap()
}

fn law_date() -> NaiveDate {
    NaiveDate::from_ymd_opt(2014, 1, 1).unwrap()
}

#[derive(Clone, Copy, PartialEq)]
enum Kind {
    Profile,
    Foreign,
    Uncountried,
}

struct Gen<'a> {
    rng: ChaCha8Rng,
    spec: &'a SynthSpec,
    next_work: usize,
    next_author: usize,
    works: BTreeMap<String, TruthWork>,
}

impl Gen<'_> {
    fn author_id(&mut self) -> String {
        self.next_author += 1;
        format!("A{:05}", self.next_author)
    }

    fn status(&mut self) -> (String, Option<String>) {
        let mut u: f64 = self.rng.gen();
        let mut label = "unknown";
        for (s, w) in STATUS_WEIGHTS {
            if u < w {
                label = s;
                break;
            }
            u -= w;
        }
        let raw = match label {
            "unknown" => self.rng.gen_bool(0.4).then(|| "diamond".to_string()),
            s => Some(match self.rng.gen_range(0..3) {
                0 => s.to_string(),
                1 => s.to_ascii_uppercase(),
                _ => format!("{}{}", s[..1].to_ascii_uppercase(), &s[1..]),
            }),
        };
        (label.to_string(), raw)
    }

    fn work(&mut self, kind: Kind) -> String {
        self.next_work += 1;
        let id = format!("W{:06}", self.next_work);
        let n = self.next_work * 7919 % 100_000;
        let rng = &mut self.rng;

        let r: f64 = rng.gen();
        let year = if r < 0.82 {
            rng.gen_range(2006..=2020)
        } else if r < 0.94 {
            rng.gen_range(1995..=2005)
        } else {
            2021
        };
        let month = rng.gen_range(1..=12u32);
        let last_day = NaiveDate::from_ymd_opt(year + i32::from(month == 12), month % 12 + 1, 1)
            .unwrap()
            .pred_opt()
            .unwrap()
            .day();
        let day = rng.gen_range(1..=last_day);
        let form: f64 = rng.gen();
        let (date, year_field, when) = if form < 0.80 {
            (Some(format!("{year:04}-{month:02}-{day:02}")), None, NaiveDate::from_ymd_opt(year, month, day))
        } else if form < 0.92 {
            (None, Some(year), NaiveDate::from_ymd_opt(year, 7, 1))
        } else if form < 0.97 || kind != Kind::Profile {
            (Some(format!("{year:04}-{month:02}")), None, NaiveDate::from_ymd_opt(year, month, 1))
        } else if rng.gen_bool(0.3) {
            // no year at all: the harvester skips it
            (None, None, None)
        } else {
            (Some(format!("{year:04}-{month:02}-{day:02}")), None, NaiveDate::from_ymd_opt(year, month, day))
        };

        let p_deposit = match when {
            Some(d) if d >= window_start() && year <= 2020 => {
                let t = (d - window_start()).num_days() / 7;
                0.08 + 0.0002 * t as f64 + if d >= law_date() { self.spec.jump } else { 0.0 }
            }
            Some(d) if d < window_start() => 0.08,
            _ => 0.30,
        };
        let argentine = rng.gen::<f64>() < p_deposit;
        let international = rng.gen::<f64>() < 0.2;

        let t: f64 = rng.gen();
        let work_type = if t < 0.86 {
            "journal-article".to_string()
        } else if t < 0.91 {
            "article".to_string()
        } else {
            OTHER_TYPES[rng.gen_range(0..OTHER_TYPES.len())].to_string()
        };
        let doi = rng.gen_bool(0.85).then(|| format!("10.5555/{}", id.to_ascii_lowercase()));

        let c: f64 = rng.gen();
        let foreign = FOREIGN[rng.gen_range(0..FOREIGN.len())].to_string();
        let countries = match kind {
            Kind::Profile if c < 0.82 => {
                let mut v = vec!["AR".to_string()];
                if rng.gen_bool(0.2) {
                    v.push(foreign);
                }
                v
            }
            Kind::Profile if c < 0.92 => Vec::new(),
            Kind::Profile => vec![foreign],
            Kind::Foreign if c < 0.8 => vec![foreign],
            Kind::Foreign if c < 0.9 => vec!["AR".to_string()],
            Kind::Foreign | Kind::Uncountried => Vec::new(),
        };

        let mut host_url = rng.gen_bool(0.75).then(|| {
            let journals = [
                format!("https://www.sciencedirect.com/science/article/pii/S{n}"),
                format!("https://link.springer.com/article/10.1007/{n}"),
                format!("https://journals.plos.org/plosone/article?id={n}"),
                format!("https://www.mdpi.com/2073-4395/{n}"),
            ];
            journals[rng.gen_range(0..journals.len())].clone()
        });
        let mut locations = Vec::new();
        if argentine {
            let national = [
                format!("https://ri.conicet.gov.ar/handle/11336/{n}"),
                format!("http://sedici.unlp.edu.ar/handle/10915/{n}"),
                format!("https://repositorio.uba.ar/items/{n}"),
                format!("https://repositoriosdigitales.mincyt.gob.ar/vufind/Record/{n}"),
            ];
            if rng.gen_bool(0.15) {
                // a journal on a national domain counts as well
                host_url = Some(format!("https://revistas.unc.edu.ar/index.php/rev/article/view/{n}"));
            } else {
                locations.push(national[rng.gen_range(0..national.len())].clone());
            }
        }
        if international {
            let intl = [
                format!("https://arxiv.org/abs/{n}"),
                format!("https://zenodo.org/record/{n}"),
                format!("https://europepmc.org/article/MED/{n}"),
                format!("https://www.ncbi.nlm.nih.gov/pmc/articles/PMC{n}"),
                format!("https://www.biorxiv.org/content/10.1101/{n}"),
            ];
            locations.push(intl[rng.gen_range(0..intl.len())].clone());
        }
        let noise = [
            format!("https://doi.org/10.5555/{n}"),
            format!("https://www.ncbi.nlm.nih.gov/pubmed/{n}"),
            "not a url".to_string(),
            format!("https://arxiv.org.mirror.example.com/abs/{n}"),
            format!("http://www.scielo.br/scielo.php?pid={n}"),
        ];
        for _ in 0..rng.gen_range(0..=2) {
            locations.push(noise[rng.gen_range(0..noise.len())].clone());
        }
        locations.shuffle(rng);

        let (status, oa_status_raw) = self.status();
        let w = TruthWork {
            id: id.clone(),
            date,
            year: year_field,
            work_type,
            status,
            oa_status_raw,
            doi,
            host_url,
            location_urls: locations,
            countries,
            argentine_repo: argentine,
            international_repo: international,
        };
        self.works.insert(id.clone(), w);
        id
    }
}

impl TruthWork {
    /// Year the harvester sees; `None` means the work is skipped.
    pub fn effective_year(&self) -> Option<i32> {
        self.year.or_else(|| self.date.as_deref().and_then(|d| d[..4].parse().ok()))
    }

    pub fn is_article(&self) -> bool {
        self.work_type == "journal-article" || self.work_type == "article"
    }

    pub fn to_json(&self) -> serde_json::Value {
        MockWork {
            id: self.id.clone(),
            doi: self.doi.clone(),
            date: self.date.clone(),
            year: self.year,
            work_type: self.work_type.clone(),
            oa_status: self.oa_status_raw.clone(),
            host_url: self.host_url.clone(),
            location_urls: self.location_urls.clone(),
            countries: self.countries.clone(),
        }
        .to_json()
    }
}

fn share_ar(ids: &[String], works: &BTreeMap<String, TruthWork>) -> (usize, usize) {
    let seen: Vec<&TruthWork> = ids.iter().map(|i| &works[i]).filter(|w| w.effective_year().is_some()).collect();
    let considered = seen.iter().filter(|w| !w.countries.is_empty()).count();
    let ar = seen.iter().filter(|w| w.countries.iter().any(|c| c == "AR")).count();
    (ar, considered)
}

/// Search strings for a name, written with or without accents.
fn variant_texts(given: &str, surnames: &str, lex: &AccentLexicon) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    for (g, s) in [(given.to_string(), surnames.to_string()), (fold(given), fold(surnames))] {
        let r = Researcher {
            id: String::new(),
            given_names: g,
            surnames: s,
            area: Area::Unspecified,
            discipline: None,
            declared_articles: 0,
        };
        out.extend(generate_variants(&r, lex).into_iter().map(|v| fold(&v.text).to_lowercase()));
    }
    out
}

fn csv_field(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

pub fn generate(spec: &SynthSpec) -> World {
    let mut g =
        Gen { rng: ChaCha8Rng::seed_from_u64(spec.seed), spec, next_work: 0, next_author: 0, works: BTreeMap::new() };
    let n = spec.researchers;
    let lex = AccentLexicon::bundled();
    let mut taken = BTreeSet::new();
    let mut researchers = Vec::with_capacity(n);
    for i in 0..n {
        let given = GIVEN[i % GIVEN.len()];
        // the first free combination whose search strings no one else uses
        let surnames = (0..SURNAMES.len() * SURNAMES.len())
            .map(|k| {
                if i < SURNAMES.len() && k == 0 {
                    SURNAMES[i].to_string()
                } else {
                    let a = (i + k) % SURNAMES.len();
                    format!("{} {}", SURNAMES[a], SURNAMES[(a + 1 + k / SURNAMES.len()) % SURNAMES.len()])
                }
            })
            .find(|s| {
                let texts = variant_texts(given, s, &lex);
                if texts.is_disjoint(&taken) {
                    taken.extend(texts);
                    true
                } else {
                    false
                }
            })
            .expect("a free surname combination");
        let (area, discipline) = if i == n - 3 {
            (String::new(), String::new())
        } else {
            let a = i % AREAS.len();
            let d = if i % 7 == 5 { String::new() } else { DISCIPLINES[a][(i / AREAS.len()) % 2].to_string() };
            (AREAS[a].to_string(), d)
        };
        let full = format!("{given} {surnames}");
        let initials: String =
            given.split_whitespace().map(|t| format!("{}. ", t.chars().next().unwrap())).collect::<String>()
                + &surnames;
        let first_only = format!("{} {surnames}", given.split_whitespace().next().unwrap());

        let mut entities = Vec::new();
        let unfound = n >= 5 && i >= n - 2;
        if !unfound {
            let profiles = if i == 0 && spec.prolific_works > 0 || !g.rng.gen_bool(0.3) { 1 } else { 2 };
            for p in 0..profiles {
                let count = if i == 0 && spec.prolific_works > 0 {
                    spec.prolific_works
                } else {
                    g.rng.gen_range(spec.works_per_entity.clone()) / profiles.max(1) + usize::from(p == 0)
                };
                let forms = [full.clone(), fold(&full), initials.clone(), first_only.clone(), full.to_uppercase()];
                let display_name = forms[g.rng.gen_range(0..forms.len())].clone();
                let id = g.author_id();
                let works = (0..count).map(|_| g.work(Kind::Profile)).collect();
                entities.push(TruthEntity { id, display_name, role: Role::Profile, works });
            }
            if spec.homonyms && g.rng.gen_bool(0.5) {
                let id = g.author_id();
                let count = g.rng.gen_range(3..=10);
                let works = (0..count).map(|_| g.work(Kind::Foreign)).collect();
                entities.push(TruthEntity { id, display_name: full.clone(), role: Role::ForeignHomonym, works });
            }
            if spec.homonyms && g.rng.gen_bool(0.15) {
                let id = g.author_id();
                let count = g.rng.gen_range(2..=4);
                let works = (0..count).map(|_| g.work(Kind::Uncountried)).collect();
                entities.push(TruthEntity { id, display_name: fold(&full), role: Role::Uncountried, works });
            }
            if spec.homonyms && g.rng.gen_bool(0.5) {
                let initials: BTreeSet<char> =
                    given.split_whitespace().map(|t| fold(t).chars().next().unwrap()).collect();
                let other = OTHER_GIVEN.iter().find(|o| !initials.contains(&o.chars().next().unwrap())).unwrap();
                let id = g.author_id();
                entities.push(TruthEntity {
                    id,
                    display_name: format!("{other} {surnames}"),
                    role: Role::OtherName,
                    works: Vec::new(),
                });
            }
        }
        // national rosters often drop accents
        let (roster_given, roster_surnames) =
            if g.rng.gen_bool(0.5) { (fold(given), fold(&surnames)) } else { (given.to_string(), surnames.clone()) };
        researchers.push(TruthResearcher {
            id: format!("r{:02}", i + 1),
            given_names: roster_given,
            surnames: roster_surnames,
            area,
            discipline,
            declared_articles: 0,
            entities,
        });
    }

    // co-authored works between researchers, and between split profiles
    let with_profile: Vec<usize> = (0..n).filter(|&i| !researchers[i].entities.is_empty()).collect();
    if with_profile.len() >= 2 {
        for _ in 0..(n * 3 / 5) {
            let a = *with_profile.choose(&mut g.rng).unwrap();
            let b = *with_profile.choose(&mut g.rng).unwrap();
            if a == b {
                continue;
            }
            let from = &researchers[a].entities[0].works;
            let w = from[g.rng.gen_range(0..from.len())].clone();
            let to = &mut researchers[b].entities[0].works;
            if !to.contains(&w) {
                to.push(w);
            }
        }
    }
    for r in &mut researchers {
        let profiles: Vec<usize> = (0..r.entities.len()).filter(|&e| r.entities[e].role == Role::Profile).collect();
        if profiles.len() == 2 {
            let w = r.entities[profiles[0]].works[0].clone();
            r.entities[profiles[1]].works.push(w);
        }
    }

    // settle country shares well clear of the 0.5 threshold
    for r in &researchers {
        for e in &r.entities {
            match e.role {
                Role::Profile => loop {
                    let (ar, considered) = share_ar(&e.works, &g.works);
                    if considered > 0 && ar * 10 >= considered * 6 {
                        break;
                    }
                    let id = e
                        .works
                        .iter()
                        .map(|w| &g.works[w])
                        .find(|w| w.effective_year().is_some() && !w.countries.iter().any(|c| c == "AR"))
                        .map(|w| w.id.clone())
                        .unwrap();
                    let id = &id;
                    g.works.get_mut(id).unwrap().countries = vec!["AR".into()];
                },
                Role::ForeignHomonym => loop {
                    let (ar, considered) = share_ar(&e.works, &g.works);
                    if considered > 0 && ar * 10 <= considered * 4 {
                        break;
                    }
                    let id = e
                        .works
                        .iter()
                        .map(|w| &g.works[w])
                        .find(|w| {
                            w.effective_year().is_some()
                                && (w.countries.is_empty() || w.countries.iter().any(|c| c == "AR"))
                        })
                        .map(|w| w.id.clone())
                        .unwrap();
                    let id = &id;
                    g.works.get_mut(id).unwrap().countries = vec!["ES".into()];
                },
                Role::Uncountried | Role::OtherName => {}
            }
        }
    }

    // declared counts: most within the depuration band, some far off
    for (i, r) in researchers.iter_mut().enumerate() {
        let mut articles = BTreeSet::new();
        for e in r.entities.iter().filter(|e| e.role == Role::Profile) {
            for w in &e.works {
                let tw = &g.works[w];
                if tw.effective_year().is_some() && tw.is_article() {
                    articles.insert(w.clone());
                }
            }
        }
        let rec = articles.len() as u64;
        r.declared_articles = if rec == 0 {
            if i == n - 1 {
                0
            } else {
                4
            }
        } else if g.rng.gen_bool(0.8) {
            ((rec as f64 * g.rng.gen_range(0.7..1.6)).round() as u64).max(1)
        } else if rec >= 6 && g.rng.gen_bool(0.5) {
            rec / 3
        } else {
            3 * rec + 4
        };
    }

    let mut roster_csv = String::from("id,given_names,surnames,area,discipline,declared_articles\n");
    for r in &researchers {
        roster_csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.id,
            r.given_names,
            r.surnames,
            r.area,
            csv_field(&r.discipline),
            r.declared_articles
        ));
    }

    let roster = parse_roster(&roster_csv).expect("generated roster parses");
    let mut api = MockApi::new();
    let mut claimed: BTreeMap<String, String> = BTreeMap::new();
    for (tr, r) in researchers.iter().zip(&roster) {
        for e in &tr.entities {
            let matched = names_match(&e.display_name, r, &lex).matched;
            assert_eq!(matched, e.role != Role::OtherName, "{} vs {}", e.display_name, tr.id);
            let works: Vec<_> = e.works.iter().map(|w| g.works[w].to_json()).collect();
            if !works.is_empty() {
                api.add_works(&e.id, works);
            }
        }
        let mut listed: Vec<&TruthEntity> = tr.entities.iter().filter(|e| e.role != Role::OtherName).collect();
        listed.shuffle(&mut g.rng);
        for (k, v) in generate_variants(r, &lex).iter().enumerate() {
            if let Some(owner) = claimed.insert(v.text.clone(), tr.id.clone()) {
                assert_eq!(owner, tr.id, "variant {} shared by two researchers", v.text);
            }
            let mut hits: Vec<_> =
                listed.iter().map(|e| author_json(&e.id, &e.display_name, e.works.len() as u64)).collect();
            if k == 0 {
                for e in tr.entities.iter().filter(|e| e.role == Role::OtherName) {
                    hits.push(author_json(&e.id, &e.display_name, 12));
                }
            }
            api.add_search(&v.text, hits);
        }
    }

    World { truth: Truth { seed: spec.seed, researchers, works: g.works }, roster_csv, api }
}

/// Writes `roster.csv` and `truth.json` into `dir` and records every API
/// response a harvest needs into `dir/api`.
pub fn record(world: World, dir: &Path) {
    std::fs::create_dir_all(dir).unwrap();
    let roster = dir.join("roster.csv");
    std::fs::write(&roster, &world.roster_csv).unwrap();
    let mut truth = serde_json::to_string_pretty(&world.truth).unwrap();
    truth.push('\n');
    std::fs::write(dir.join("truth.json"), truth).unwrap();

    let scratch = tempfile::tempdir().unwrap();
    let cfg = RunConfig {
        roster_path: roster,
        source: Source::Live { cache_dir: Some(dir.join("api")) },
        output_dir: scratch.path().join("out"),
        concurrency: 1,
        ..Default::default()
    };
    Pipeline::new(cfg)
        .with_transport(Arc::new(world.api))
        .with_clock(Arc::new(SimulatedClock::new()))
        .harvest()
        .expect("recording harvest succeeds");
}
