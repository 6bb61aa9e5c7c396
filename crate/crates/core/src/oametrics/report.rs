//! CSV renderings of the metrics. Headers are fixed, rows sorted, fractions
//! printed with six decimals and percentages with one.

use crate::corpus::PeriodSlice;

use super::{Breakdown, CoverageRow, OAStatus, StatusCounts, StatusTotals, YearlyRepoShares, YearlyStatusShares};

pub const COVERAGE_HEADER: &str = "area,researchers_informed,articles_informed,researchers_recovered,pct_researchers_recovered,articles_recovered,pct_articles_recovered,researchers_kept,pct_researchers_kept,articles_kept,pct_articles_kept";
pub const STATUS_BY_YEAR_HEADER: &str = "year,n,gold,green,bronze,hybrid,closed,unknown";
pub const REPOS_BY_YEAR_HEADER: &str = "year,n,argentine_share,international_share,any_repo_share";
pub const TOTALS_HEADER: &str = "period,n,gold,green,bronze,hybrid,closed,unknown,open,gold_share,green_share,bronze_share,hybrid_share,closed_share,unknown_share,open_share,unknown_without_doi";
pub const BY_AREA_HEADER: &str = "period,area,n,gold,green,bronze,hybrid,closed,unknown";
pub const BY_DISCIPLINE_HEADER: &str = "period,area,discipline,n,gold,green,bronze,hybrid,closed,unknown";

pub fn frac(x: f64) -> String {
    format!("{x:.6}")
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn document(header: &str, rows: impl IntoIterator<Item = String>) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    out
}

fn shares(c: &StatusCounts) -> String {
    OAStatus::ALL.iter().map(|s| frac(c.share(*s))).collect::<Vec<_>>().join(",")
}

pub fn coverage_csv(rows: &[CoverageRow]) -> String {
    document(
        COVERAGE_HEADER,
        rows.iter().map(|r| {
            format!(
                "{},{},{},{},{},{},{},{},{},{},{}",
                r.label(),
                r.researchers_informed,
                r.articles_informed,
                r.researchers_recovered,
                r.pct_researchers_recovered(),
                r.articles_recovered,
                r.pct_articles_recovered(),
                r.researchers_kept,
                r.pct_researchers_kept(),
                r.articles_kept,
                r.pct_articles_kept(),
            )
        }),
    )
}

pub fn status_by_year_csv(series: &[YearlyStatusShares]) -> String {
    document(STATUS_BY_YEAR_HEADER, series.iter().map(|y| format!("{},{},{}", y.year, y.n(), shares(&y.counts))))
}

pub fn repos_by_year_csv(series: &[YearlyRepoShares]) -> String {
    document(
        REPOS_BY_YEAR_HEADER,
        series.iter().map(|y| {
            format!(
                "{},{},{},{},{}",
                y.year,
                y.n,
                frac(y.argentine_share()),
                frac(y.international_share()),
                frac(y.any_repo_share())
            )
        }),
    )
}

/// One row per period with at least one work.
pub fn totals_csv(totals: &[(PeriodSlice, StatusTotals)]) -> String {
    document(
        TOTALS_HEADER,
        totals.iter().filter(|(_, t)| t.n() > 0).map(|(p, t)| {
            let c = &t.counts;
            let counts: Vec<String> = OAStatus::ALL.iter().map(|s| c.get(*s).to_string()).collect();
            format!(
                "{},{},{},{},{},{},{}",
                p,
                t.n(),
                counts.join(","),
                c.open(),
                shares(c),
                frac(c.open_share()),
                t.unknown_without_doi
            )
        }),
    )
}

pub fn by_area_csv(period: &PeriodSlice, b: &Breakdown) -> String {
    document(
        BY_AREA_HEADER,
        b.by_area.iter().map(|(area, c)| format!("{},{},{},{}", period, area, c.total(), shares(c))),
    )
}

pub fn by_discipline_csv(period: &PeriodSlice, b: &Breakdown) -> String {
    document(
        BY_DISCIPLINE_HEADER,
        b.by_discipline
            .iter()
            .map(|((area, d), c)| format!("{},{},{},{},{}", period, area, csv_field(d), c.total(), shares(c))),
    )
}
