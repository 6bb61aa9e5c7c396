//! Brute-force recount of the expected reports straight from the truth
//! manifest. Shares only the output formats with the library: which
//! entities count, how works classify and how weeks are counted all come
//! from the manifest and the plain calendar arithmetic below.

use std::collections::{BTreeMap, BTreeSet};

use nalgebra::{DMatrix, DVector};
use serde_json::{json, Value};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::synth::{Role, Truth, TruthResearcher, TruthWork};

const AREA_ORDER: [&str; 5] = ["CAIM", "CBS", "CEN", "CSH", "Unspecified"];
const STATUSES: [&str; 6] = ["gold", "green", "bronze", "hybrid", "closed", "unknown"];
const PERIODS: [(i32, i32); 4] = [(1953, 2021), (2006, 2013), (2014, 2021), (2006, 2021)];

/// Files compared byte for byte, relative to the output directory.
pub const GOLDEN_FILES: [&str; 8] = [
    "reports/coverage.csv",
    "reports/status_by_year.csv",
    "reports/repos_by_year.csv",
    "reports/totals.csv",
    "reports/by_area.csv",
    "reports/by_discipline.csv",
    "impact/impact_report.json",
    "impact/weekly_series.csv",
];

/// Days since 0000-03-01, proleptic Gregorian.
pub fn day_number(y: i64, m: i64, d: i64) -> i64 {
    let (y, m) = if m <= 2 { (y - 1, m + 9) } else { (y, m - 3) };
    365 * y + y / 4 - y / 100 + y / 400 + (153 * m + 2) / 5 + d - 1
}

fn area_of(r: &TruthResearcher) -> &'static str {
    AREA_ORDER[..4].iter().find(|a| a.eq_ignore_ascii_case(r.area.trim())).copied().unwrap_or("Unspecified")
}

fn area_rank(a: &str) -> usize {
    AREA_ORDER.iter().position(|x| *x == a).unwrap()
}

/// Tenths of a percent, half-up, printed with one decimal.
fn pct(num: u64, den: u64) -> String {
    let tenths = if den == 0 { 0 } else { (2000 * num + den) / (2 * den) };
    format!("{}.{}", tenths / 10, tenths % 10)
}

fn frac(num: u64, den: u64) -> String {
    format!("{:.6}", if den == 0 { 0.0 } else { num as f64 / den as f64 })
}

fn quote(s: &str) -> String {
    if s.contains(',') {
        format!("\"{s}\"")
    } else {
        s.to_string()
    }
}

fn sig6(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    json!(format!("{x:.5e}").parse::<f64>().unwrap())
}

struct Kept<'a> {
    /// researcher index -> recovered article ids
    recovered: Vec<BTreeSet<&'a str>>,
    kept: Vec<bool>,
    /// unique kept works with the indices of their kept authors
    works: BTreeMap<&'a str, Vec<usize>>,
}

fn depurate(truth: &Truth) -> Kept<'_> {
    let mut recovered = Vec::new();
    let mut kept = Vec::new();
    let mut works: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, r) in truth.researchers.iter().enumerate() {
        let mine: BTreeSet<&str> = r
            .entities
            .iter()
            .filter(|e| e.role == Role::Profile)
            .flat_map(|e| e.works.iter())
            .map(|id| &truth.works[id])
            .filter(|w| w.effective_year().is_some() && w.is_article())
            .map(|w| w.id.as_str())
            .collect();
        let d = r.declared_articles;
        let n = mine.len() as u64;
        let keep = if d == 0 { n == 0 } else { 2 * d.abs_diff(n) <= d };
        if keep {
            for w in &mine {
                works.entry(w).or_default().push(i);
            }
        }
        recovered.push(mine);
        kept.push(keep);
    }
    Kept { recovered, kept, works }
}

fn status_counts<'a>(ws: impl Iterator<Item = &'a TruthWork>) -> [u64; 6] {
    let mut c = [0u64; 6];
    for w in ws {
        c[STATUSES.iter().position(|s| *s == w.status).unwrap()] += 1;
    }
    c
}

fn share_cols(c: &[u64; 6]) -> String {
    let n: u64 = c.iter().sum();
    c.iter().map(|x| frac(*x, n)).collect::<Vec<_>>().join(",")
}

fn coverage(truth: &Truth, k: &Kept) -> String {
    let mut out = String::from("area,researchers_informed,articles_informed,researchers_recovered,pct_researchers_recovered,articles_recovered,pct_articles_recovered,researchers_kept,pct_researchers_kept,articles_kept,pct_articles_kept\n");
    let mut total = [0u64; 6];
    let row = |label: &str, v: [u64; 6], out: &mut String| {
        out.push_str(&format!(
            "{label},{},{},{},{},{},{},{},{},{},{}\n",
            v[0],
            v[1],
            v[2],
            pct(v[2], v[0]),
            v[3],
            pct(v[3], v[1]),
            v[4],
            pct(v[4], v[0]),
            v[5],
            pct(v[5], v[1])
        ));
    };
    for area in AREA_ORDER {
        let members: Vec<usize> =
            (0..truth.researchers.len()).filter(|&i| area_of(&truth.researchers[i]) == area).collect();
        if members.is_empty() {
            continue;
        }
        let mut v = [0u64; 6];
        for i in members {
            let got = k.recovered[i].len() as u64;
            let kept = if k.kept[i] { got } else { 0 };
            v[0] += 1;
            v[1] += truth.researchers[i].declared_articles;
            v[2] += u64::from(got > 0);
            v[3] += got;
            v[4] += u64::from(kept > 0);
            v[5] += kept;
        }
        for j in 0..6 {
            total[j] += v[j];
        }
        row(area, v, &mut out);
    }
    if total[0] > 0 {
        row("Total", total, &mut out);
    }
    out
}

fn year_of(w: &TruthWork) -> i32 {
    w.effective_year().unwrap()
}

fn by_year(truth: &Truth, k: &Kept) -> (String, String) {
    let mut years: BTreeMap<i32, Vec<&TruthWork>> = BTreeMap::new();
    for id in k.works.keys() {
        let w = &truth.works[*id];
        if (2006..=2021).contains(&year_of(w)) {
            years.entry(year_of(w)).or_default().push(w);
        }
    }
    let mut status = String::from("year,n,gold,green,bronze,hybrid,closed,unknown\n");
    let mut repos = String::from("year,n,argentine_share,international_share,any_repo_share\n");
    for (y, ws) in &years {
        let n = ws.len() as u64;
        status.push_str(&format!("{y},{n},{}\n", share_cols(&status_counts(ws.iter().copied()))));
        let ar = ws.iter().filter(|w| w.argentine_repo).count() as u64;
        let intl = ws.iter().filter(|w| w.international_repo).count() as u64;
        let any = ws.iter().filter(|w| w.argentine_repo || w.international_repo).count() as u64;
        repos.push_str(&format!("{y},{n},{},{},{}\n", frac(ar, n), frac(intl, n), frac(any, n)));
    }
    (status, repos)
}

fn totals(truth: &Truth, k: &Kept) -> String {
    let mut out = String::from("period,n,gold,green,bronze,hybrid,closed,unknown,open,gold_share,green_share,bronze_share,hybrid_share,closed_share,unknown_share,open_share,unknown_without_doi\n");
    for (a, b) in PERIODS {
        let ws: Vec<&TruthWork> =
            k.works.keys().map(|id| &truth.works[*id]).filter(|w| (a..=b).contains(&year_of(w))).collect();
        if ws.is_empty() {
            continue;
        }
        let c = status_counts(ws.iter().copied());
        let n = ws.len() as u64;
        let open = c[0] + c[1] + c[2] + c[3];
        let no_doi = ws.iter().filter(|w| w.status == "unknown" && w.doi.is_none()).count();
        let counts: Vec<String> = c.iter().map(u64::to_string).collect();
        out.push_str(&format!(
            "{a}-{b},{n},{},{open},{},{},{no_doi}\n",
            counts.join(","),
            share_cols(&c),
            frac(open, n)
        ));
    }
    out
}

fn breakdowns(truth: &Truth, k: &Kept) -> (String, String) {
    let mut by_area = String::from("period,area,n,gold,green,bronze,hybrid,closed,unknown\n");
    let mut by_disc = String::from("period,area,discipline,n,gold,green,bronze,hybrid,closed,unknown\n");
    for (a, b) in PERIODS {
        let mut areas: BTreeMap<(usize, &str), Vec<&TruthWork>> = BTreeMap::new();
        let mut discs: BTreeMap<(usize, &str, String), Vec<&TruthWork>> = BTreeMap::new();
        for (id, authors) in &k.works {
            let w = &truth.works[*id];
            if !(a..=b).contains(&year_of(w)) {
                continue;
            }
            let mut seen_a = BTreeSet::new();
            let mut seen_d = BTreeSet::new();
            for &i in authors {
                let r = &truth.researchers[i];
                let area = area_of(r);
                let disc = if r.discipline.is_empty() { "Unspecified".to_string() } else { r.discipline.clone() };
                if seen_a.insert(area) {
                    areas.entry((area_rank(area), area)).or_default().push(w);
                }
                if seen_d.insert((area, disc.clone())) {
                    discs.entry((area_rank(area), area, disc)).or_default().push(w);
                }
            }
        }
        for ((_, area), ws) in &areas {
            let c = status_counts(ws.iter().copied());
            by_area.push_str(&format!("{a}-{b},{area},{},{}\n", ws.len(), share_cols(&c)));
        }
        for ((_, area, disc), ws) in &discs {
            let c = status_counts(ws.iter().copied());
            by_disc.push_str(&format!("{a}-{b},{area},{},{},{}\n", quote(disc), ws.len(), share_cols(&c)));
        }
    }
    (by_area, by_disc)
}

struct Obs {
    y: f64,
    t: i64,
    post: bool,
    p: i64,
    month: i64,
}

/// (year, month, day, imputed) with July 1 for year-only and the 1st for
/// year-month dates.
fn calendar(w: &TruthWork) -> (i64, i64, i64, bool) {
    match w.date.as_deref() {
        Some(d) => {
            let parts: Vec<i64> = d.split('-').map(|p| p.parse().unwrap()).collect();
            match parts.as_slice() {
                [y, m, d] => (*y, *m, *d, false),
                [y, m] => (*y, *m, 1, true),
                _ => panic!("odd date {d}"),
            }
        }
        None => (i64::from(w.year.unwrap()), 7, 1, true),
    }
}

fn fit(obs: &[Obs], months: bool) -> Value {
    let mut names = vec!["intercept".to_string(), "t_weeks".into(), "d_post".into(), "p_weeks".into()];
    if months {
        names.extend((2..=12).map(|m| format!("month_{m:02}")));
    }
    let k = names.len();
    let n = obs.len();
    let x = DMatrix::from_fn(n, k, |i, j| {
        let o = &obs[i];
        match j {
            0 => 1.0,
            1 => o.t as f64,
            2 => f64::from(u8::from(o.post)),
            3 => o.p as f64,
            m => f64::from(u8::from(o.month == m as i64 - 2)),
        }
    });
    let y = DVector::from_iterator(n, obs.iter().map(|o| o.y));
    let xtx = x.transpose() * &x;
    let chol = xtx.cholesky().expect("full-rank design");
    let beta = chol.solve(&(x.transpose() * &y));
    let inv = chol.inverse();
    let resid = &y - &x * &beta;
    let rss = resid.norm_squared();
    let df = n - k;
    let sigma2 = rss / df as f64;
    let mean = y.mean();
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let dist = StudentsT::new(0.0, 1.0, df as f64).unwrap();
    let mut coefs = serde_json::Map::new();
    for (j, name) in names.iter().enumerate() {
        let se = (sigma2 * inv[(j, j)]).sqrt();
        let t = beta[j] / se;
        let p = (2.0 * dist.sf(t.abs())).min(1.0);
        coefs.insert(
            name.clone(),
            json!({"estimate": sig6(beta[j]), "std_error": sig6(se), "t_stat": sig6(t), "p_value": sig6(p)}),
        );
    }
    json!({"coefficients": coefs, "n_obs": n, "df": df, "r_squared": sig6(1.0 - rss / tss)})
}

fn impact(truth: &Truth, k: &Kept) -> (String, String) {
    let origin = day_number(2006, 1, 1);
    let law = day_number(2014, 1, 1);
    let end = day_number(2020, 12, 31);
    let mut obs = Vec::new();
    let mut imputed = 0;
    for id in k.works.keys() {
        let w = &truth.works[*id];
        let (y, m, d, guessed) = calendar(w);
        let dn = day_number(y, m, d);
        if dn < origin || dn > end {
            continue;
        }
        imputed += usize::from(guessed);
        obs.push(Obs {
            y: f64::from(u8::from(w.argentine_repo)),
            t: (dn - origin) / 7,
            post: dn >= law,
            p: if dn >= law { (dn - law) / 7 } else { 0 },
            month: m,
        });
    }
    let deposited = obs.iter().filter(|o| o.y == 1.0).count();
    let report = json!({
        "window": {"window_start": "2006-01-01", "law_date": "2014-01-01", "cutoff": "2020-12-31"},
        "flags": {"include_month_effects": true, "covariance": "classical"},
        "primary_model": "month_effects",
        "n_works": k.works.len(),
        "n_obs": obs.len(),
        "imputed_dates": imputed,
        "excluded_outside_window": k.works.len() - obs.len(),
        "deposited": deposited,
        "models": {"no_month_effects": fit(&obs, false), "month_effects": fit(&obs, true)},
    });
    let mut json = serde_json::to_string_pretty(&report).unwrap();
    json.push('\n');

    let mut weeks: BTreeMap<i64, (u64, u64)> = BTreeMap::new();
    for o in &obs {
        let e = weeks.entry(o.t).or_default();
        e.0 += 1;
        e.1 += o.y as u64;
    }
    let mut weekly = String::from("t_weeks,n,deposited,proportion\n");
    for (t, (n, dep)) in weeks {
        weekly.push_str(&format!("{t},{n},{dep},{}\n", frac(dep, n)));
    }
    (json, weekly)
}

/// Expected contents of every file in [`GOLDEN_FILES`].
pub fn expected_outputs(truth: &Truth) -> BTreeMap<String, String> {
    let k = depurate(truth);
    let (status, repos) = by_year(truth, &k);
    let (by_area, by_disc) = breakdowns(truth, &k);
    let (impact_json, weekly) = impact(truth, &k);
    let contents = [coverage(truth, &k), status, repos, totals(truth, &k), by_area, by_disc, impact_json, weekly];
    GOLDEN_FILES.iter().map(|f| f.to_string()).zip(contents).collect()
}

/// Status counts of the totals table per period, for coherence checks.
pub fn period_totals(truth: &Truth) -> Vec<(String, [u64; 6])> {
    let k = depurate(truth);
    PERIODS
        .iter()
        .map(|(a, b)| {
            let ws = k.works.keys().map(|id| &truth.works[*id]).filter(|w| (*a..=*b).contains(&year_of(w)));
            (format!("{a}-{b}"), status_counts(ws))
        })
        .filter(|(_, c)| c.iter().sum::<u64>() > 0)
        .collect()
}
