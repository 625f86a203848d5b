//! Threshold sweeps, log-log rate fits and bound checks.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::density::Conditioned;
use crate::distances::{excess_report, hellinger_sq, DistanceReport, MetricSet};
use crate::error::{Error, Result};
use crate::excess::{density_ratio_sup, ExcessModel, Recenter};
use crate::family::Family;
use crate::limit::GpModel;
use crate::output::ser_real;
use crate::quad::QuadOptions;

/// Minimum number of grid points in a sweep.
pub const MIN_GRID: usize = 5;
/// A sweep with more failed points than this is itself a failure.
pub const MAX_FAILURES: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    Log,
    Lin,
}

/// Tail-level grid `start:stop:log|lin:count`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VGrid {
    pub start: f64,
    pub stop: f64,
    pub spacing: Spacing,
    pub count: usize,
}

impl Default for VGrid {
    fn default() -> Self {
        Self {
            start: 1e2,
            stop: 1e6,
            spacing: Spacing::Log,
            count: 9,
        }
    }
}

impl VGrid {
    pub fn new(start: f64, stop: f64, spacing: Spacing, count: usize) -> Result<Self> {
        if !(start > 1.0) || !(stop > start) || !stop.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "v-grid needs 1 < start < stop < inf, got {start}:{stop}"
            )));
        }
        if count < 2 {
            return Err(Error::InvalidArgument("v-grid needs at least 2 points".into()));
        }
        Ok(Self {
            start,
            stop,
            spacing,
            count,
        })
    }

    pub fn values(&self) -> Vec<f64> {
        let n = self.count - 1;
        (0..self.count)
            .map(|i| {
                let f = i as f64 / n as f64;
                if i == n {
                    return self.stop;
                }
                match self.spacing {
                    Spacing::Log => self.start * (self.stop / self.start).powf(f),
                    Spacing::Lin => self.start + f * (self.stop - self.start),
                }
            })
            .collect()
    }
}

impl FromStr for VGrid {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidArgument(format!("v-grid must look like 1e2:1e6:log:9, got `{s}`"));
        let parts: Vec<&str> = s.split(':').map(str::trim).collect();
        let [start, stop, spacing, count] = parts[..] else {
            return Err(bad());
        };
        let start: f64 = start.parse().map_err(|_| bad())?;
        let stop: f64 = stop.parse().map_err(|_| bad())?;
        let spacing = match spacing.to_ascii_lowercase().as_str() {
            "log" => Spacing::Log,
            "lin" => Spacing::Lin,
            _ => return Err(bad()),
        };
        let count: usize = count.parse().map_err(|_| bad())?;
        Self::new(start, stop, spacing, count)
    }
}

/// One threshold of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct GridPoint {
    #[serde(serialize_with = "ser_real")]
    pub v: f64,
    #[serde(serialize_with = "ser_real")]
    pub t: f64,
    #[serde(serialize_with = "ser_real")]
    pub s_t: f64,
    #[serde(serialize_with = "ser_real")]
    pub c_t: f64,
    #[serde(serialize_with = "ser_real")]
    pub mu_t: f64,
    #[serde(serialize_with = "ser_real")]
    pub abs_a: f64,
    #[serde(serialize_with = "ser_real")]
    pub endpoint: f64,
    #[serde(serialize_with = "crate::output::ser_opt_real")]
    pub ratio_sup: Option<f64>,
    pub report: Option<DistanceReport>,
    /// Failure tag when the point's quadrature did not succeed.
    pub failure: Option<String>,
}

impl GridPoint {
    pub fn ok(&self) -> bool {
        self.failure.is_none()
    }

    pub fn metric(&self, name: &str) -> Option<f64> {
        self.report.as_ref()?.get(name)
    }

    pub fn error(&self, name: &str) -> f64 {
        self.report.as_ref().map_or(0.0, |r| r.error(name))
    }
}

/// Ordinary least squares fit of `ln(metric)` on `ln|A|`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub points: usize,
}

/// Least squares line through `(x, y)`; `None` with fewer than 3 points or no spread in `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Option<Fit> {
    let n = x.len();
    if n < 3 || n != y.len() {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { (sxy * sxy / (sxx * syy)).clamp(0.0, 1.0) } else { 1.0 };
    Some(Fit {
        slope,
        intercept: my - slope * mx,
        r_squared,
        points: n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictStatus {
    Pass,
    Fail,
    NotApplicable,
}

impl fmt::Display for VerdictStatus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            VerdictStatus::Pass => "pass",
            VerdictStatus::Fail => "fail",
            VerdictStatus::NotApplicable => "n/a",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub name: String,
    pub status: VerdictStatus,
    pub details: String,
}

impl Verdict {
    pub fn new(name: impl Into<String>, pass: bool, details: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: if pass { VerdictStatus::Pass } else { VerdictStatus::Fail },
            details: details.into(),
        }
    }

    pub fn not_applicable(name: impl Into<String>, details: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            status: VerdictStatus::NotApplicable,
            details: details.into(),
        }
    }

    pub fn passed(&self) -> bool {
        self.status != VerdictStatus::Fail
    }
}

/// A threshold sweep with its fits and verdicts.
#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub family: Family,
    pub recenter: Recenter,
    pub recentered: bool,
    pub metrics: MetricSet,
    pub grid: Vec<GridPoint>,
    pub fitted: BTreeMap<String, Fit>,
    pub verdicts: Vec<Verdict>,
}

/// Names of the fitted quantities, in output order.
pub fn fit_names(metrics: &MetricSet) -> Vec<String> {
    let mut out = Vec::new();
    for name in metrics.names() {
        if name == "h2" {
            out.push("h2".to_string());
            out.push("h".to_string());
        } else {
            out.push(name.clone());
        }
    }
    out
}

impl SweepResult {
    /// Points that succeeded.
    pub fn good(&self) -> impl Iterator<Item = &GridPoint> {
        self.grid.iter().filter(|p| p.ok())
    }

    pub fn failures(&self) -> usize {
        self.grid.iter().filter(|p| !p.ok()).count()
    }

    /// Fit `ln(metric)` on `ln|A|` over the successful points with a positive finite value.
    pub fn fit(&self, metric: &str) -> Option<Fit> {
        let (x, y): (Vec<f64>, Vec<f64>) = self
            .good()
            .filter_map(|p| {
                let m = p.metric(metric)?;
                (m > 0.0 && m.is_finite() && p.abs_a > 0.0).then(|| (p.abs_a.ln(), m.ln()))
            })
            .unzip();
        ols(&x, &y)
    }

    pub fn refit(&mut self) {
        self.fitted = fit_names(&self.metrics)
            .into_iter()
            .filter_map(|name| self.fit(&name).map(|f| (name, f)))
            .collect();
    }

    /// Drop the smallest-`v` point and refit.
    pub fn without_first(&self) -> SweepResult {
        let mut s = self.clone();
        s.grid.remove(0);
        s.refit();
        s
    }

    /// True if `metric` never increases by more than `noise` across points with `v >= from_v`.
    pub fn monotone(&self, metric: &str, from_v: f64, noise: f64) -> bool {
        let vals: Vec<f64> = self
            .good()
            .filter(|p| p.v >= from_v)
            .filter_map(|p| p.metric(metric))
            .collect();
        vals.windows(2).all(|w| w[1] <= w[0] + noise)
    }
}

/// Build the excess model at each `v`, compute the metrics and fit slopes.
pub fn sweep(
    family: &Family,
    v_grid: &[f64],
    recenter: Recenter,
    metrics: &MetricSet,
    opts: &QuadOptions,
) -> Result<SweepResult> {
    if family.degenerate_rate() {
        return Err(Error::DegenerateRate(family.spec()));
    }
    if v_grid.len() < MIN_GRID {
        return Err(Error::InvalidArgument(format!(
            "a sweep needs at least {MIN_GRID} grid points, got {}",
            v_grid.len()
        )));
    }
    if v_grid.windows(2).any(|w| !(w[1] > w[0])) || !(v_grid[0] > 1.0) {
        return Err(Error::InvalidArgument(
            "v-grid must be strictly increasing and above 1".into(),
        ));
    }
    let grid = v_grid
        .par_iter()
        .map(|&v| {
            let point = evaluate_point(family, v, recenter, metrics, opts)?;
            if !(point.abs_a > 0.0) {
                return Err(Error::DegenerateRate(family.spec()));
            }
            Ok(point)
        })
        .collect::<Result<Vec<_>>>()?;
    let failed = grid.iter().filter(|p| !p.ok()).count();
    if failed > MAX_FAILURES {
        return Err(Error::SweepFailed {
            failed,
            total: grid.len(),
        });
    }
    let mut sr = SweepResult {
        family: family.clone(),
        recenter,
        recentered: recenter.resolve(family.gamma()),
        metrics: metrics.clone(),
        grid,
        fitted: BTreeMap::new(),
        verdicts: Vec::new(),
    };
    sr.refit();
    sr.verdicts = standard_verdicts(&sr);
    Ok(sr)
}

/// Model diagnostics and metric panel at one tail level. Quadrature failures
/// are recorded on the point rather than returned.
pub fn evaluate_point(
    family: &Family,
    v: f64,
    recenter: Recenter,
    metrics: &MetricSet,
    opts: &QuadOptions,
) -> Result<GridPoint> {
    let model = ExcessModel::new(family, v, recenter)?;
    let abs_a = model.abs_rate()?;
    let mut point = GridPoint {
        v,
        t: model.t,
        s_t: model.s_t,
        c_t: model.c_t,
        mu_t: model.mu_t,
        abs_a,
        endpoint: model.endpoint,
        ratio_sup: Some(density_ratio_sup(&model)),
        report: None,
        failure: None,
    };
    match excess_report(&model, metrics, opts) {
        Ok(r) => point.report = Some(r),
        Err(e) if e.is_numerical() => point.failure = Some(e.to_string()),
        Err(e) => return Err(e),
    }
    Ok(point)
}

/// Checks that apply to any sweep, given what it computed.
pub fn standard_verdicts(sr: &SweepResult) -> Vec<Verdict> {
    let mut out = vec![check_sandwich(sr), check_theorem1(sr)];
    if sr.metrics.contains("kl") {
        out.push(check_kl_corollary(sr));
    }
    out
}

/// `H^2 <= 2 TV <= 2 H` at every point, with slack twice the quadrature error.
pub fn check_sandwich(sr: &SweepResult) -> Verdict {
    const NAME: &str = "sandwich";
    if !(sr.metrics.contains("h2") && sr.metrics.contains("tv")) {
        return Verdict::not_applicable(NAME, "needs h2 and tv");
    }
    let mut worst: Option<String> = None;
    let mut checked = 0;
    for p in sr.good() {
        let (Some(h2), Some(h), Some(tv)) = (p.metric("h2"), p.metric("h"), p.metric("tv")) else {
            continue;
        };
        checked += 1;
        let slack = 2.0 * (p.error("h2") + p.error("tv"));
        if !(h2 <= 2.0 * tv + slack && 2.0 * tv <= 2.0 * h + slack) {
            worst.get_or_insert(format!("v={:e}: H2={h2:e} 2TV={:e} 2H={:e}", p.v, 2.0 * tv, 2.0 * h));
        }
    }
    match worst {
        None => Verdict::new(NAME, checked > 0, format!("{checked} points")),
        Some(w) => Verdict::new(NAME, false, w),
    }
}

/// `R(v) = H^2 / |A|^2` stays bounded: over the upper half of the grid, `max R <= 2 min R`.
pub fn check_theorem1(sr: &SweepResult) -> Verdict {
    const NAME: &str = "theorem1";
    if sr.family.gamma() < 0.0 && !sr.recentered {
        return Verdict::not_applicable(NAME, "bound concerns the recentred excess for gamma < 0");
    }
    if !sr.metrics.contains("h2") {
        return Verdict::not_applicable(NAME, "needs h2");
    }
    let r: Vec<f64> = sr
        .good()
        .filter_map(|p| Some(p.metric("h2")? / (p.abs_a * p.abs_a)))
        .collect();
    if r.len() < 2 {
        return Verdict::new(NAME, false, "too few points");
    }
    let top = &r[r.len() / 2..];
    let max = top.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = top.iter().copied().fold(f64::INFINITY, f64::min);
    Verdict::new(
        NAME,
        max.is_finite() && min > 0.0 && max <= 2.0 * min,
        format!("H2/|A|^2 over upper half in [{min:.6e}, {max:.6e}]"),
    )
}

/// Slope of `ln metric` on `ln|A|` lies in `[lo, hi]`, optionally with a minimum R^2.
pub fn check_slope(sr: &SweepResult, metric: &str, lo: f64, hi: f64, min_r2: Option<f64>) -> Verdict {
    let name = format!("slope_{metric}");
    match sr.fit(metric) {
        None => Verdict::new(name, false, format!("no fit for {metric}")),
        Some(f) => {
            let pass = f.slope >= lo && f.slope <= hi && min_r2.is_none_or(|r| f.r_squared >= r);
            let r2 = min_r2.map_or(String::new(), |r| format!(", R2 {:.6} (>= {r})", f.r_squared));
            Verdict::new(name, pass, format!("slope {:.4} in [{lo}, {hi}]{r2}", f.slope))
        }
    }
}

/// Hellinger distance between `h_gamma` and its shift by `-|mu|`, conditioned back to the half-line.
pub fn shift_hellinger(gamma: f64, mu: f64, opts: &QuadOptions) -> Result<f64> {
    let h = GpModel::standard(gamma);
    let shifted = Conditioned::new(GpModel::new(gamma, -mu.abs(), 1.0)?, 0.0, f64::INFINITY)?;
    Ok(hellinger_sq(&h, &shifted, opts)?.value.max(0.0).sqrt())
}

/// Exponent of `H(h_gamma, h_gamma(. - mu_t))` in `|A|` lies in
/// `[min(1, -1/(2 gamma)) - 0.1, -1/(2 gamma) + 0.1]`.
pub fn check_prop1(gamma: f64, mu_abs_a: &[(f64, f64)], opts: &QuadOptions) -> Result<Verdict> {
    const NAME: &str = "prop1";
    if !(gamma < 0.0) {
        return Ok(Verdict::not_applicable(NAME, "needs gamma < 0"));
    }
    if mu_abs_a.iter().all(|(mu, _)| *mu == 0.0) {
        return Ok(Verdict::not_applicable(NAME, "all shifts vanish"));
    }
    let mut x = Vec::new();
    let mut y = Vec::new();
    for &(mu, a) in mu_abs_a {
        let h = shift_hellinger(gamma, mu, opts)?;
        if h > 0.0 && a > 0.0 {
            x.push(a.ln());
            y.push(h.ln());
        }
    }
    let e = -1.0 / (2.0 * gamma);
    let (lo, hi) = (e.min(1.0) - 0.1, e + 0.1);
    Ok(match ols(&x, &y) {
        None => Verdict::new(NAME, false, "too few positive distances"),
        Some(f) => Verdict::new(
            NAME,
            f.slope >= lo && f.slope <= hi,
            format!("slope {:.4} in [{lo:.2}, {hi:.2}]", f.slope),
        ),
    })
}

/// `KL <= 2 M H^2`, `D_p <= 2 p! M H^2` pointwise and KL slope `2 +- 0.2`.
/// For gamma = 0 the bound `M <= exp(exp(-t))` on the density ratio is checked too.
pub fn check_kl_corollary(sr: &SweepResult) -> Verdict {
    const NAME: &str = "kl_corollary";
    if sr.family.rho().is_none() {
        return Verdict::not_applicable(NAME, "needs rho < 0");
    }
    if sr.family.gamma() < 0.0 && !sr.recentered {
        return Verdict::not_applicable(NAME, "bound concerns the recentred excess for gamma < 0");
    }
    if !(sr.metrics.contains("kl") && sr.metrics.contains("h2")) {
        return Verdict::not_applicable(NAME, "needs kl and h2");
    }
    let mut problems = Vec::new();
    for p in sr.good() {
        let (Some(kl), Some(h2), Some(m)) = (p.metric("kl"), p.metric("h2"), p.ratio_sup) else {
            continue;
        };
        let slack = 2.0 * (p.error("kl") + p.error("h2"));
        if !(kl <= 2.0 * m * h2 + slack) {
            problems.push(format!("v={:e}: KL {kl:e} > 2 M H2 {:e}", p.v, 2.0 * m * h2));
        }
        for order in sr.metrics.dp_orders() {
            let Some(d) = p.metric(&format!("d{order}")) else {
                continue;
            };
            let fact: f64 = (1..=order).map(f64::from).product();
            let bound = 2.0 * fact * m * h2 + 2.0 * (p.error(&format!("d{order}")) + p.error("h2"));
            if !(d <= bound) {
                problems.push(format!("v={:e}: D{order} {d:e} > {bound:e}", p.v));
            }
        }
        if sr.family.gamma() == 0.0 {
            let cap = (-p.t).exp().exp() + 1e-6;
            if !(m <= cap) {
                problems.push(format!("v={:e}: M {m} > exp(exp(-t)) {cap}", p.v));
            }
        }
    }
    let slope = sr.fit("kl");
    let slope_ok = slope.is_some_and(|f| (f.slope - 2.0).abs() <= 0.2);
    let slope_txt = slope.map_or("no fit".to_string(), |f| format!("KL slope {:.4}", f.slope));
    if problems.is_empty() {
        Verdict::new(NAME, slope_ok, slope_txt)
    } else {
        Verdict::new(NAME, false, format!("{slope_txt}; {}", problems.join("; ")))
    }
}

#[cfg(test)]
mod tests;
