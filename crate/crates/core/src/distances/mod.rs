//! Divergences between two densities on interval supports.
//!
//! The union of both supports is cut at every support endpoint, so each
//! panel has singular behaviour at its ends only. Panels covered by one
//! density alone contribute that density's exact mass; shared panels are
//! integrated by double-exponential quadrature, with densities whose upper
//! end is the panel end evaluated from the distance to that end.

mod metrics;

use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::density::Density;
use crate::error::{Error, Result};
use crate::excess::ExcessModel;
use crate::output::{ser_opt_real, ser_real_map};
use crate::quad::{integrate, Node, QuadOptions, QuadResult};

pub use metrics::{Hellinger, HigherOrder, KullbackLeibler, TotalVariation};

/// Support ends closer than this (relative) are treated as equal.
pub const SUPPORT_TOL: f64 = 1e-12;

/// Relative rounding level of a density evaluation.
pub const ROUNDING: f64 = 64.0 * f64::EPSILON;

/// Points per panel in the sign-change scan for total variation.
pub const TV_SCAN_POINTS: usize = 512;

fn same_point(a: f64, b: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= SUPPORT_TOL * a.abs().max(b.abs()).max(1.0)
}

/// One piece `(a, b)` of the panel decomposition.
#[derive(Debug, Clone, Copy)]
pub struct Panel {
    pub a: f64,
    pub b: f64,
    pub in_p: bool,
    pub in_q: bool,
    /// Upper support end of p (resp. q) coincides with `b`.
    p_ends: bool,
    q_ends: bool,
}

impl Panel {
    pub fn shared(&self) -> bool {
        self.in_p && self.in_q
    }
}

/// A density pair together with its panel decomposition.
pub struct Pair<'a> {
    pub p: &'a dyn Density,
    pub q: &'a dyn Density,
    pub panels: Vec<Panel>,
}

impl<'a> Pair<'a> {
    pub fn new(p: &'a dyn Density, q: &'a dyn Density) -> Self {
        let (plo, phi) = p.support();
        let (qlo, qhi) = q.support();
        let mut cuts: Vec<f64> = vec![plo, phi, qlo, qhi];
        cuts.sort_by(f64::total_cmp);
        // merge clusters, keeping the smallest member
        let mut points: Vec<f64> = Vec::with_capacity(4);
        for c in cuts {
            match points.last() {
                Some(&last) if same_point(last, c) => {}
                _ => points.push(c),
            }
        }
        let covers = |lo: f64, hi: f64, a: f64, b: f64| {
            (lo <= a || same_point(lo, a)) && (hi >= b || same_point(hi, b))
        };
        let panels = points
            .windows(2)
            .filter_map(|w| {
                let (a, b) = (w[0], w[1]);
                let in_p = covers(plo, phi, a, b);
                let in_q = covers(qlo, qhi, a, b);
                (in_p || in_q).then_some(Panel {
                    a,
                    b,
                    in_p,
                    in_q,
                    p_ends: b.is_finite() && same_point(phi, b),
                    q_ends: b.is_finite() && same_point(qhi, b),
                })
            })
            .collect();
        Self { p, q, panels }
    }

    /// p and q at `x`, where `to_b` is the exact distance from `x` to the panel end.
    pub fn eval(&self, panel: &Panel, x: f64, to_b: f64) -> (f64, f64) {
        let near = to_b < 0.5 * (panel.b - panel.a);
        let one = |d: &dyn Density, ends: bool| {
            if ends && near {
                d.pdf_below_upper(to_b + (d.support().1 - panel.b))
            } else {
                d.pdf(x)
            }
        };
        (one(self.p, panel.p_ends), one(self.q, panel.q_ends))
    }

    /// Integrate `f(p, q)` over the sub-interval `lo..hi` of a panel, both
    /// given as `(x, distance to panel end)`.
    ///
    /// `noise` is the integrand's rounding level per unit of probability mass;
    /// the absolute tolerance is never set below `noise` times the mass of
    /// both densities on the span, so integrands that vanish up to rounding
    /// still converge.
    pub fn integrate_span<F>(
        &self,
        panel: &Panel,
        lo: (f64, f64),
        hi: (f64, f64),
        opts: &QuadOptions,
        noise: f64,
        f: F,
    ) -> Result<QuadResult>
    where
        F: Fn(f64, f64) -> f64,
    {
        let offset = hi.1;
        let mass = self.p.mass(lo.0, hi.0) + self.q.mass(lo.0, hi.0);
        let opts = QuadOptions {
            abs_tol: opts.abs_tol.max(noise * mass),
            ..*opts
        };
        integrate(
            |n: Node| {
                let to_b = n.from_hi + offset;
                let (p, q) = self.eval(panel, n.x, to_b);
                f(p, q)
            },
            lo.0,
            hi.0,
            &opts,
        )
    }

    pub fn integrate_panel<F>(&self, panel: &Panel, opts: &QuadOptions, noise: f64, f: F) -> Result<QuadResult>
    where
        F: Fn(f64, f64) -> f64,
    {
        self.integrate_span(panel, (panel.a, panel.b - panel.a), (panel.b, 0.0), opts, noise, f)
    }

    /// Points of a panel where `p - q` changes sign, as `(x, distance to end)`.
    pub fn crossings(&self, panel: &Panel) -> Vec<(f64, f64)> {
        let at = |t: f64| scan_point(panel, t);
        let sign = |t: f64| {
            let (x, d) = at(t);
            let (p, q) = self.eval(panel, x, d);
            // differences at rounding level carry no sign
            if (p - q).abs() <= ROUNDING * (p + q) {
                0.0
            } else {
                (p - q).signum()
            }
        };
        let span = if panel.b.is_finite() { 3.0 } else { 4.0 };
        let n = TV_SCAN_POINTS;
        let ts: Vec<f64> = (0..n)
            .map(|i| -span + 2.0 * span * i as f64 / (n - 1) as f64)
            .collect();
        let signs: Vec<f64> = ts.iter().map(|&t| sign(t)).collect();
        let mut out = Vec::new();
        let mut last = (ts[0], signs[0]);
        for (&t, &s) in ts.iter().zip(&signs).skip(1) {
            if s == 0.0 {
                continue;
            }
            if last.1 != 0.0 && s != last.1 {
                let (mut lo, mut hi) = (last.0, t);
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    if sign(mid) == last.1 {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                out.push(at(0.5 * (lo + hi)));
            }
            last = (t, s);
        }
        out
    }
}

/// Point of a panel at double-exponential parameter `t`, as `(x, distance to end)`.
fn scan_point(panel: &Panel, t: f64) -> (f64, f64) {
    let s = FRAC_PI_2 * t.sinh();
    if panel.b.is_finite() {
        let w = panel.b - panel.a;
        let from_lo = w / (1.0 + (2.0 * s).exp());
        let from_hi = w / (1.0 + (-2.0 * s).exp());
        if t < 0.0 {
            (panel.a + from_lo, from_hi)
        } else {
            (panel.b - from_hi, from_hi)
        }
    } else {
        (panel.a + s.exp(), f64::INFINITY)
    }
}

/// A divergence between two densities.
pub trait Divergence: Send + Sync {
    /// Metric key, e.g. `h2` or `d3`.
    fn name(&self) -> String;

    /// Value and absolute quadrature error estimate; `+inf` is a valid value.
    fn compute(&self, pair: &Pair<'_>, opts: &QuadOptions) -> Result<QuadResult>;
}

type MetricBuilder = Box<dyn Fn(&str) -> Option<Box<dyn Divergence>> + Send + Sync>;

/// Name-keyed metric lookup.
pub struct MetricRegistry {
    builders: Vec<MetricBuilder>,
}

impl Default for MetricRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl MetricRegistry {
    pub fn empty() -> Self {
        Self { builders: Vec::new() }
    }

    /// `h2`, `tv`, `kl` and `d<p>` for integer `p >= 2`.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register(|name| (name == "h2").then(|| Box::new(Hellinger) as Box<dyn Divergence>));
        r.register(|name| (name == "tv").then(|| Box::new(TotalVariation) as Box<dyn Divergence>));
        r.register(|name| (name == "kl").then(|| Box::new(KullbackLeibler) as Box<dyn Divergence>));
        r.register(|name| {
            let order: u32 = name.strip_prefix('d')?.parse().ok()?;
            (order >= 2).then(|| Box::new(HigherOrder(order)) as Box<dyn Divergence>)
        });
        r
    }

    pub fn register<F>(&mut self, builder: F)
    where
        F: Fn(&str) -> Option<Box<dyn Divergence>> + Send + Sync + 'static,
    {
        self.builders.push(Box::new(builder));
    }

    pub fn get(&self, name: &str) -> Result<Box<dyn Divergence>> {
        self.builders
            .iter()
            .find_map(|b| b(name))
            .ok_or_else(|| Error::UnknownMetric(name.to_string()))
    }
}

/// An ordered, duplicate-free selection of metric names.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MetricSet(Vec<String>);

impl std::str::FromStr for MetricSet {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::parse(s)
    }
}

impl Default for MetricSet {
    fn default() -> Self {
        Self::parse("h2,tv,kl,d2,d3").expect("default metric list is valid")
    }
}

impl MetricSet {
    /// Parse a comma-separated list against the standard registry.
    pub fn parse(list: &str) -> Result<Self> {
        let registry = MetricRegistry::standard();
        let mut names = Vec::new();
        for name in list.split(',').map(|s| s.trim().to_ascii_lowercase()) {
            if name.is_empty() {
                continue;
            }
            registry.get(&name)?;
            if !names.contains(&name) {
                names.push(name);
            }
        }
        if names.is_empty() {
            return Err(Error::InvalidArgument("metric list is empty".into()));
        }
        Ok(Self(names))
    }

    pub fn names(&self) -> &[String] {
        &self.0
    }

    pub fn contains(&self, name: &str) -> bool {
        self.0.iter().any(|n| n == name)
    }

    /// Orders of the requested `d<p>` metrics.
    pub fn dp_orders(&self) -> Vec<u32> {
        self.0
            .iter()
            .filter_map(|n| n.strip_prefix('d')?.parse().ok())
            .collect()
    }

    pub fn needs_ratio_sup(&self) -> bool {
        self.0.iter().any(|n| n == "kl" || n.starts_with('d'))
    }
}

/// One threshold's divergence panel.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct DistanceReport {
    #[serde(serialize_with = "ser_opt_real")]
    pub v: Option<f64>,
    pub recentered: bool,
    #[serde(serialize_with = "ser_opt_real")]
    pub hellinger_sq: Option<f64>,
    #[serde(serialize_with = "ser_opt_real")]
    pub hellinger: Option<f64>,
    #[serde(serialize_with = "ser_opt_real")]
    pub tv: Option<f64>,
    #[serde(serialize_with = "ser_opt_real")]
    pub kl: Option<f64>,
    #[serde(serialize_with = "ser_real_map")]
    pub dp: BTreeMap<u32, f64>,
    /// Absolute error estimate per metric name.
    #[serde(serialize_with = "ser_real_map")]
    pub quad_error: BTreeMap<String, f64>,
}

impl DistanceReport {
    fn record(&mut self, name: &str, r: QuadResult) {
        match name {
            "h2" => {
                let h2 = r.value.clamp(0.0, 2.0);
                self.hellinger_sq = Some(h2);
                self.hellinger = Some(h2.sqrt());
            }
            "tv" => self.tv = Some(r.value.clamp(0.0, 1.0)),
            "kl" => self.kl = Some(r.value.max(0.0)),
            other => {
                if let Some(order) = other.strip_prefix('d').and_then(|p| p.parse().ok()) {
                    self.dp.insert(order, r.value.max(0.0));
                }
            }
        }
        self.quad_error.insert(name.to_string(), r.error);
    }

    /// Value of a metric by name (`h2`, `h`, `tv`, `kl`, `d<p>`).
    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "h2" => self.hellinger_sq,
            "h" => self.hellinger,
            "tv" => self.tv,
            "kl" => self.kl,
            other => other
                .strip_prefix('d')
                .and_then(|p| p.parse().ok())
                .and_then(|p: u32| self.dp.get(&p).copied()),
        }
    }

    pub fn error(&self, name: &str) -> f64 {
        let key = if name == "h" { "h2" } else { name };
        self.quad_error.get(key).copied().unwrap_or(0.0)
    }
}

/// Compute the selected metrics of `p` against `q`.
pub fn compare(
    p: &dyn Density,
    q: &dyn Density,
    metrics: &MetricSet,
    opts: &QuadOptions,
) -> Result<DistanceReport> {
    let registry = MetricRegistry::standard();
    let pair = Pair::new(p, q);
    let mut report = DistanceReport::default();
    for name in metrics.names() {
        let r = registry.get(name)?.compute(&pair, opts)?;
        report.record(name, r);
    }
    Ok(report)
}

/// Metrics of an excess model against its limit `h_gamma`.
pub fn excess_report(
    model: &ExcessModel,
    metrics: &MetricSet,
    opts: &QuadOptions,
) -> Result<DistanceReport> {
    let limit = model.limit();
    let mut report = compare(model, &limit, metrics, opts)?;
    report.v = Some(model.v);
    report.recentered = model.recentered;
    Ok(report)
}

pub fn hellinger_sq(p: &dyn Density, q: &dyn Density, opts: &QuadOptions) -> Result<QuadResult> {
    Hellinger.compute(&Pair::new(p, q), opts)
}

pub fn total_variation(p: &dyn Density, q: &dyn Density, opts: &QuadOptions) -> Result<QuadResult> {
    TotalVariation.compute(&Pair::new(p, q), opts)
}

pub fn kl_div(p: &dyn Density, q: &dyn Density, opts: &QuadOptions) -> Result<QuadResult> {
    KullbackLeibler.compute(&Pair::new(p, q), opts)
}

pub fn dp_div(p: &dyn Density, q: &dyn Density, order: u32, opts: &QuadOptions) -> Result<QuadResult> {
    HigherOrder(order).compute(&Pair::new(p, q), opts)
}
