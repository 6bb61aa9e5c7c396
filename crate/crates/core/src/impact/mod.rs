//! Segmented regression of weekly repository deposits around the mandate
//! date: `y = b0 + b1 T + b2 D + b3 P (+ month effects)`, fitted as a linear
//! probability model on one observation per work.

mod ols;

use std::collections::BTreeMap;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};
use thiserror::Error;

use crate::oametrics::{repo_presence, RepoRules};
use crate::records::WorkRecord;

pub use ols::{ols_solve, ols_solve_with, CovarianceKind, Matrix, OlsError, OlsSolution, RANK_TOLERANCE};

pub const BASE_COLUMNS: [&str; 4] = ["intercept", "t_weeks", "d_post", "p_weeks"];

#[derive(Debug, Error)]
pub enum ImpactError {
    #[error("invalid impact window: {0}")]
    Config(String),
    #[error("insufficient data: {n_obs} observations for {params} parameters")]
    InsufficientData { n_obs: usize, params: usize },
    #[error("singular design: collinear columns {}", columns.join(", "))]
    SingularDesign { columns: Vec<String> },
    #[error(transparent)]
    Ols(#[from] OlsError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImpactWindow {
    pub window_start: NaiveDate,
    pub law_date: NaiveDate,
    pub cutoff: NaiveDate,
}

impl Default for ImpactWindow {
    fn default() -> Self {
        ImpactWindow {
            window_start: NaiveDate::from_ymd_opt(2006, 1, 1).expect("valid date"),
            law_date: NaiveDate::from_ymd_opt(2014, 1, 1).expect("valid date"),
            cutoff: NaiveDate::from_ymd_opt(2020, 12, 31).expect("valid date"),
        }
    }
}

impl ImpactWindow {
    pub fn validate(&self) -> Result<(), ImpactError> {
        if self.window_start >= self.law_date {
            return Err(ImpactError::Config(format!(
                "window start {} must precede law date {}",
                self.window_start, self.law_date
            )));
        }
        if self.law_date > self.cutoff {
            return Err(ImpactError::Config(format!("law date {} is after cutoff {}", self.law_date, self.cutoff)));
        }
        Ok(())
    }

    /// Observation for a work dated `date`, or `None` outside the window.
    pub fn observe(&self, date: NaiveDate, deposited: bool, imputed: bool) -> Option<RegressionObservation> {
        if date < self.window_start || date > self.cutoff {
            return None;
        }
        let weeks = |from: NaiveDate| ((date - from).num_days() / 7) as u32;
        let post = date >= self.law_date;
        Some(RegressionObservation {
            y: u8::from(deposited),
            t_weeks: weeks(self.window_start),
            d_post: u8::from(post),
            p_weeks: if post { weeks(self.law_date) } else { 0 },
            month_index: date.month(),
            imputed_date: imputed,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RegressionObservation {
    pub y: u8,
    pub t_weeks: u32,
    pub d_post: u8,
    pub p_weeks: u32,
    pub month_index: u32,
    /// Month or day was missing and the date was set to July 1.
    pub imputed_date: bool,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ObservationSet {
    pub observations: Vec<RegressionObservation>,
    pub imputed: usize,
    pub excluded: usize,
}

/// One observation per work dated inside the window, in input order.
pub fn build_observations<F>(
    works: &[WorkRecord],
    deposited: F,
    window: &ImpactWindow,
) -> Result<ObservationSet, ImpactError>
where
    F: Fn(&WorkRecord) -> bool + Sync,
{
    window.validate()?;
    let observed: Vec<Option<RegressionObservation>> = works
        .par_iter()
        .map(|w| {
            let date = w.publication_date.to_naive_or_midyear()?;
            window.observe(date, deposited(w), !w.publication_date.is_complete())
        })
        .collect();
    let excluded = observed.iter().filter(|o| o.is_none()).count();
    let observations: Vec<_> = observed.into_iter().flatten().collect();
    let imputed = observations.iter().filter(|o| o.imputed_date).count();
    Ok(ObservationSet { observations, imputed, excluded })
}

/// `y = 1` when any URL of the work points to a national repository.
pub fn build_observations_with_rules(
    works: &[WorkRecord],
    rules: &RepoRules,
    window: &ImpactWindow,
) -> Result<ObservationSet, ImpactError> {
    build_observations(works, |w| repo_presence(w, rules).argentine, window)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FitOptions {
    pub month_effects: bool,
    pub covariance: CovarianceKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegressionFit {
    pub names: Vec<String>,
    pub coefficients: Vec<f64>,
    pub standard_errors: Vec<f64>,
    pub t_stats: Vec<f64>,
    pub p_values: Vec<f64>,
    pub n_obs: usize,
    pub df: usize,
    pub r_squared: f64,
    pub covariance: CovarianceKind,
}

impl RegressionFit {
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn beta(&self, i: usize) -> f64 {
        self.coefficients[i]
    }

    pub fn se(&self, i: usize) -> f64 {
        self.standard_errors[i]
    }

    pub fn p(&self, i: usize) -> f64 {
        self.p_values[i]
    }

    /// Month coefficients (February to December), empty without month effects.
    pub fn month_effects(&self) -> &[f64] {
        &self.coefficients[BASE_COLUMNS.len()..]
    }
}

pub fn column_names(month_effects: bool) -> Vec<String> {
    let mut names: Vec<String> = BASE_COLUMNS.iter().map(|s| s.to_string()).collect();
    if month_effects {
        names.extend((2..=12).map(|m| format!("month_{m:02}")));
    }
    names
}

pub fn design_matrix(obs: &[RegressionObservation], month_effects: bool) -> (Matrix, Vec<f64>) {
    let k = column_names(month_effects).len();
    let mut x = Matrix::zeros(obs.len(), k);
    for (i, o) in obs.iter().enumerate() {
        x[(i, 0)] = 1.0;
        x[(i, 1)] = f64::from(o.t_weeks);
        x[(i, 2)] = f64::from(o.d_post);
        x[(i, 3)] = f64::from(o.p_weeks);
        if month_effects && o.month_index >= 2 {
            x[(i, 2 + o.month_index as usize)] = 1.0;
        }
    }
    (x, obs.iter().map(|o| f64::from(o.y)).collect())
}

/// Two-sided p-value of a t statistic.
pub fn two_sided_p(t: f64, df: usize) -> f64 {
    if t.is_nan() || df == 0 {
        return f64::NAN;
    }
    let dist = StudentsT::new(0.0, 1.0, df as f64).expect("positive degrees of freedom");
    (2.0 * dist.sf(t.abs())).clamp(0.0, 1.0)
}

pub fn fit_segmented(obs: &[RegressionObservation], opts: FitOptions) -> Result<RegressionFit, ImpactError> {
    let names = column_names(opts.month_effects);
    let k = names.len();
    if obs.len() < k + 1 {
        return Err(ImpactError::InsufficientData { n_obs: obs.len(), params: k });
    }
    let (x, y) = design_matrix(obs, opts.month_effects);
    let sol = ols_solve_with(&x, &y, opts.covariance).map_err(|e| match e {
        OlsError::Singular { columns } => {
            ImpactError::SingularDesign { columns: columns.into_iter().map(|c| names[c].clone()).collect() }
        }
        other => ImpactError::Ols(other),
    })?;
    let se = sol.standard_errors();
    let t_stats: Vec<f64> =
        sol.coefficients.iter().zip(&se).map(|(b, s)| if *s == 0.0 && *b == 0.0 { 0.0 } else { b / s }).collect();
    let p_values = t_stats.iter().map(|t| two_sided_p(*t, sol.df)).collect();
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tss: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let r_squared = if tss > 0.0 { 1.0 - sol.rss / tss } else { 0.0 };
    Ok(RegressionFit {
        names,
        coefficients: sol.coefficients,
        standard_errors: se,
        t_stats,
        p_values,
        n_obs: obs.len(),
        df: sol.df,
        r_squared,
        covariance: opts.covariance,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WeeklyPoint {
    pub t_weeks: u32,
    pub n: u64,
    pub deposited: u64,
}

impl WeeklyPoint {
    pub fn proportion(&self) -> f64 {
        self.deposited as f64 / self.n as f64
    }
}

/// Deposit proportion per week; weeks without works are omitted.
pub fn weekly_deposit_series(obs: &[RegressionObservation]) -> Vec<WeeklyPoint> {
    let mut weeks: BTreeMap<u32, (u64, u64)> = BTreeMap::new();
    for o in obs {
        let e = weeks.entry(o.t_weeks).or_default();
        e.0 += 1;
        e.1 += u64::from(o.y);
    }
    weeks.into_iter().map(|(t_weeks, (n, deposited))| WeeklyPoint { t_weeks, n, deposited }).collect()
}

pub fn weekly_series_csv(series: &[WeeklyPoint]) -> String {
    let mut out = String::from("t_weeks,n,deposited,proportion\n");
    for p in series {
        out.push_str(&format!("{},{},{},{:.6}\n", p.t_weeks, p.n, p.deposited, p.proportion()));
    }
    out
}
