//! The acceptance checks, grouped into suites.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::distances::{excess_report, MetricSet};
use crate::error::{Error, Result};
use crate::excess::{density_ratio_sup, eta_diag, ExcessModel, Recenter};
use crate::family::Family;
use crate::montecarlo::{mc_hellinger_sq, mc_tv, McEstimate};
use crate::output::{cell, ser_real, sweep_csv, to_json};
use crate::quad::QuadOptions;
use crate::rates::{check_kl_corollary, check_prop1, check_sandwich, check_slope, sweep, SweepResult, VGrid, Verdict};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Core,
    Rates,
    Mc,
    All,
}

impl Suite {
    pub fn criteria(self) -> Vec<u8> {
        match self {
            Suite::Core => vec![1, 11],
            Suite::Rates => (2..=9).collect(),
            Suite::Mc => vec![10],
            Suite::All => (1..=12).collect(),
        }
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "core" => Ok(Suite::Core),
            "rates" => Ok(Suite::Rates),
            "mc" => Ok(Suite::Mc),
            "all" => Ok(Suite::All),
            other => Err(Error::InvalidArgument(format!(
                "unknown suite `{other}` (expected core, rates, mc or all)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct VerifyConfig {
    pub seed: u64,
    /// Monte Carlo sample size.
    pub n: usize,
    pub opts: QuadOptions,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_601,
            n: 1_000_000,
            opts: QuadOptions::default(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionResult {
    pub id: u8,
    pub title: String,
    pub passed: bool,
    pub verdicts: Vec<Verdict>,
}

impl fmt::Display for CriterionResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} [{}] {}",
            self.id,
            if self.passed { "pass" } else { "FAIL" },
            self.title
        )?;
        for v in &self.verdicts {
            write!(f, "\n    {} {}: {}", v.status, v.name, v.details)?;
        }
        Ok(())
    }
}

/// Criteria results plus the files to write, keyed by file name.
#[derive(Debug, Clone, Default)]
pub struct VerifyOutput {
    pub criteria: Vec<CriterionResult>,
    pub artifacts: BTreeMap<String, String>,
}

impl VerifyOutput {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }
}

/// Sweeps shared between criteria, on the default grid.
pub const SWEEPS: [(&str, &str, Recenter); 6] = [
    ("burr", "burr:c=2,k=1", Recenter::Auto),
    ("gumbel", "gumbel", Recenter::Auto),
    ("revburr_k1_off", "revburr:c=1,k=1,xstar=0", Recenter::Off),
    ("revburr_k1_on", "revburr:c=1,k=1,xstar=0", Recenter::On),
    ("revburr_k4_off", "revburr:c=1,k=4,xstar=0", Recenter::Off),
    ("revburr_k4_on", "revburr:c=1,k=4,xstar=0", Recenter::On),
];

/// Monte Carlo configurations: family, v, recenter.
pub const MC_CONFIGS: [(&str, f64, Recenter); 20] = [
    ("burr:c=2,k=1", 1e2, Recenter::Auto),
    ("burr:c=2,k=1", 1e4, Recenter::Auto),
    ("burr:c=2,k=1", 1e6, Recenter::Auto),
    ("burr:c=0.5,k=2", 1e3, Recenter::Auto),
    ("burr:c=4,k=0.5", 1e3, Recenter::Auto),
    ("gumbel", 1e2, Recenter::Auto),
    ("gumbel", 1e3, Recenter::Auto),
    ("gumbel", 1e5, Recenter::Auto),
    ("revburr:c=1,k=1,xstar=0", 1e2, Recenter::Off),
    ("revburr:c=1,k=1,xstar=0", 1e3, Recenter::Off),
    ("revburr:c=1,k=1,xstar=0", 1e3, Recenter::On),
    ("revburr:c=1,k=1,xstar=0", 1e5, Recenter::On),
    ("revburr:c=1,k=4,xstar=0", 1e3, Recenter::Off),
    ("revburr:c=1,k=4,xstar=0", 1e3, Recenter::On),
    ("revburr:c=1,k=4,xstar=0", 1e4, Recenter::On),
    ("revburr:c=0.5,k=1,xstar=1.5", 1e3, Recenter::On),
    ("revburr:c=0.5,k=1,xstar=1.5", 1e3, Recenter::Off),
    ("revburr:c=2,k=1,xstar=0", 1e4, Recenter::On),
    ("burr:c=3,k=1", 1e3, Recenter::Auto),
    ("revburr:c=1,k=2,xstar=0", 1e3, Recenter::On),
];

fn title(id: u8) -> &'static str {
    match id {
        1 => "exact GP baseline: H2, TV, KL <= 1e-10",
        2 => "H2 <= 2 TV <= 2 H on every sweep",
        3 => "Burr(2,1): H slope 1 +- 0.1, R2 >= 0.999",
        4 => "Gumbel: H slope 1 +- 0.1, ratio sup at t=2 <= exp(exp(-2))",
        5 => "reversed Burr(1,1,0) without recentring: H slope 0.5 +- 0.1",
        6 => "reversed Burr(1,1,0) recentred: H slope 1 +- 0.1, below un-recentred H for v >= 1e3",
        7 => "reversed Burr(1,4,0) without recentring: H slope >= 0.9",
        8 => "shifted-limit Hellinger exponents for gamma = -1, -0.25",
        9 => "KL <= 2 M H2, D_p <= 2 p! M H2, KL slope 2 +- 0.2",
        10 => "Monte Carlo agrees with quadrature within 3 standard errors",
        11 => "von Mises diagnostics and eta",
        12 => "determinism across worker counts and total runtime",
        _ => "unknown",
    }
}

/// One Monte Carlo comparison.
#[derive(Debug, Clone, Serialize)]
pub struct McCheck {
    pub family: String,
    #[serde(serialize_with = "ser_real")]
    pub v: f64,
    pub recenter: Recenter,
    pub metric: &'static str,
    #[serde(serialize_with = "ser_real")]
    pub quadrature: f64,
    #[serde(serialize_with = "ser_real")]
    pub quad_error: f64,
    pub mc: McEstimate,
    pub agree: bool,
}

/// Quadrature against Monte Carlo for H2 and TV at one configuration.
pub fn mc_check(
    family: &Family,
    v: f64,
    recenter: Recenter,
    n: usize,
    seed: u64,
    opts: &QuadOptions,
) -> Result<Vec<McCheck>> {
    let model = ExcessModel::new(family, v, recenter)?;
    let report = excess_report(&model, &MetricSet::parse("h2,tv")?, opts)?;
    let estimates = [
        ("h2", mc_hellinger_sq(&model, n, seed)?),
        ("tv", mc_tv(&model, n, seed.wrapping_add(1))?),
    ];
    Ok(estimates
        .into_iter()
        .map(|(metric, mc)| {
            let quadrature = report.get(metric).unwrap_or(f64::NAN);
            let quad_error = report.error(metric);
            McCheck {
                family: family.spec(),
                v,
                recenter,
                metric,
                quadrature,
                quad_error,
                agree: (quadrature - mc.value).abs() <= 3.0 * mc.std_error + quad_error,
                mc,
            }
        })
        .collect())
}

pub fn mc_checks_csv(checks: &[McCheck]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::InvalidArgument(format!("csv output: {e}"));
    w.write_record(["family", "v", "recenter", "metric", "quadrature", "quad_error", "mc", "mc_std_error", "n", "seed", "agree"])
        .map_err(io)?;
    for c in checks {
        w.write_record([
            c.family.clone(),
            cell(c.v),
            c.recenter.to_string(),
            c.metric.to_string(),
            cell(c.quadrature),
            cell(c.quad_error),
            cell(c.mc.value),
            cell(c.mc.std_error),
            c.mc.n.to_string(),
            c.mc.seed.to_string(),
            c.agree.to_string(),
        ])
        .map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

struct Runner {
    cfg: VerifyConfig,
    sweeps: BTreeMap<&'static str, SweepResult>,
    mc: Option<Vec<McCheck>>,
}

impl Runner {
    fn sweep(&mut self, key: &'static str) -> Result<&SweepResult> {
        if !self.sweeps.contains_key(key) {
            let (_, spec, rc) = SWEEPS.iter().find(|s| s.0 == key).expect("known sweep key");
            let sr = run_sweep(spec, *rc, &self.cfg.opts)?;
            self.sweeps.insert(key, sr);
        }
        Ok(&self.sweeps[key])
    }

    fn mc(&mut self) -> Result<&[McCheck]> {
        if self.mc.is_none() {
            self.mc = Some(run_mc(&self.cfg)?);
        }
        Ok(self.mc.as_deref().expect("just computed"))
    }

    fn criterion(&mut self, id: u8, started: Instant) -> Result<Vec<Verdict>> {
        let opts = self.cfg.opts;
        let local = Instant::now();
        let mut verdicts = match id {
            1 => criterion1(&opts)?,
            2 => {
                let mut out = Vec::new();
                for (key, _, _) in SWEEPS {
                    let mut v = check_sandwich(self.sweep(key)?);
                    v.name = format!("sandwich_{key}");
                    out.push(v);
                }
                out
            }
            3 => vec![check_slope(self.sweep("burr")?, "h", 0.9, 1.1, Some(0.999))],
            4 => {
                let slope = check_slope(self.sweep("gumbel")?, "h", 0.9, 1.1, None);
                let m = ExcessModel::at_threshold(&Family::gumbel(), 2.0, Recenter::Auto)?;
                let sup = density_ratio_sup(&m);
                let cap = (-2f64).exp().exp();
                vec![
                    slope,
                    Verdict::new("ratio_sup_t2", sup <= cap + 1e-6, format!("M = {sup:.9} <= {cap:.9}")),
                ]
            }
            5 => vec![check_slope(self.sweep("revburr_k1_off")?, "h", 0.4, 0.6, None)],
            6 => {
                let slope = check_slope(self.sweep("revburr_k1_on")?, "h", 0.9, 1.1, None);
                let off = self.sweep("revburr_k1_off")?.clone();
                let on = self.sweep("revburr_k1_on")?;
                let mut worse = Vec::new();
                let mut compared = 0;
                for (a, b) in off.grid.iter().zip(&on.grid).filter(|(a, _)| a.v >= 1e3) {
                    match (a.metric("h"), b.metric("h")) {
                        (Some(h_off), Some(h_on)) => {
                            compared += 1;
                            if !(h_on < h_off) {
                                worse.push(format!("v={:e}", a.v));
                            }
                        }
                        _ => worse.push(format!("v={:e} missing", a.v)),
                    }
                }
                let detail = if worse.is_empty() {
                    format!("recentred H smaller at all {compared} points")
                } else {
                    format!("not smaller at {}", worse.join(", "))
                };
                vec![slope, Verdict::new("recentring_improves", worse.is_empty() && compared > 0, detail)]
            }
            7 => vec![check_slope(self.sweep("revburr_k4_off")?, "h", 0.9, f64::INFINITY, None)],
            8 => {
                let mut out = Vec::new();
                for key in ["revburr_k1_on", "revburr_k4_on"] {
                    let sr = self.sweep(key)?;
                    let pairs: Vec<(f64, f64)> = sr.good().map(|p| (p.mu_t, p.abs_a)).collect();
                    let mut v = check_prop1(sr.family.gamma(), &pairs, &opts)?;
                    v.name = format!("prop1_gamma_{}", sr.family.gamma());
                    out.push(v);
                }
                out
            }
            9 => {
                let mut out = Vec::new();
                for key in ["burr", "revburr_k1_on"] {
                    let mut v = check_kl_corollary(self.sweep(key)?);
                    v.name = format!("kl_corollary_{key}");
                    out.push(v);
                }
                out
            }
            10 => {
                let checks = self.mc()?;
                let bad: Vec<String> = checks
                    .iter()
                    .filter(|c| !c.agree)
                    .map(|c| {
                        format!(
                            "{} v={:e} {} {}: quad {:e} mc {:e} se {:e}",
                            c.family, c.v, c.recenter, c.metric, c.quadrature, c.mc.value, c.mc.std_error
                        )
                    })
                    .collect();
                let detail = if bad.is_empty() {
                    format!("{} comparisons agree", checks.len())
                } else {
                    bad.join("; ")
                };
                vec![Verdict::new("mc_agreement", bad.is_empty(), detail)]
            }
            11 => criterion11()?,
            12 => {
                let reproduced = self.reproduce_single_threaded()?;
                let elapsed = started.elapsed();
                vec![
                    Verdict::new(
                        "worker_count_independent",
                        reproduced,
                        "sweep and Monte Carlo outputs on one worker match the parallel run",
                    ),
                    Verdict::new("runtime", elapsed < Duration::from_secs(600), "total runtime under 10 minutes"),
                ]
            }
            _ => return Err(Error::InvalidArgument(format!("unknown criterion {id}"))),
        };
        let budget = match id {
            2 => Some(120),
            10 => Some(300),
            _ => None,
        };
        if let Some(secs) = budget {
            verdicts.push(Verdict::new(
                "runtime",
                local.elapsed() < Duration::from_secs(secs),
                format!("under {secs} s"),
            ));
        }
        Ok(verdicts)
    }

    /// Recompute the artifacts on a one-thread pool and compare bytes.
    fn reproduce_single_threaded(&mut self) -> Result<bool> {
        for (key, _, _) in SWEEPS {
            self.sweep(key)?;
        }
        self.mc()?;
        let reference = self.artifacts()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        let cfg = self.cfg;
        let fresh = pool.install(|| -> Result<BTreeMap<String, String>> {
            let mut r = Runner {
                cfg,
                sweeps: BTreeMap::new(),
                mc: None,
            };
            for (key, _, _) in SWEEPS {
                r.sweep(key)?;
            }
            r.mc()?;
            r.artifacts()
        })?;
        Ok(fresh == reference)
    }

    fn artifacts(&self) -> Result<BTreeMap<String, String>> {
        let mut out = BTreeMap::new();
        for (key, sr) in &self.sweeps {
            out.insert(format!("sweep_{key}.csv"), sweep_csv(sr)?);
            out.insert(format!("sweep_{key}.json"), to_json(sr)?);
        }
        if let Some(mc) = &self.mc {
            out.insert("mc_check.csv".into(), mc_checks_csv(mc)?);
            out.insert("mc_check.json".into(), to_json(mc)?);
        }
        Ok(out)
    }
}

fn run_sweep(spec: &str, recenter: Recenter, opts: &QuadOptions) -> Result<SweepResult> {
    sweep(
        &Family::parse(spec)?,
        &VGrid::default().values(),
        recenter,
        &MetricSet::default(),
        opts,
    )
}

fn run_mc(cfg: &VerifyConfig) -> Result<Vec<McCheck>> {
    let mut out = Vec::new();
    for (i, (spec, v, rc)) in MC_CONFIGS.iter().enumerate() {
        let seed = cfg.seed.wrapping_add(1000 * i as u64);
        out.extend(mc_check(&Family::parse(spec)?, *v, *rc, cfg.n, seed, &cfg.opts)?);
    }
    Ok(out)
}

fn criterion1(opts: &QuadOptions) -> Result<Vec<Verdict>> {
    let start = Instant::now();
    let metrics = MetricSet::parse("h2,tv,kl")?;
    let mut worst: f64 = 0.0;
    let mut problems = Vec::new();
    for gamma in [-1.5, -1.0, -0.5, 0.0, 0.5, 1.0] {
        let fam = Family::exact_gp(gamma)?;
        for v in [1e2, 1e4, 1e6] {
            let model = ExcessModel::new(&fam, v, Recenter::Auto)?;
            let r = excess_report(&model, &metrics, opts)?;
            for m in ["h2", "tv", "kl"] {
                let x = r.get(m).unwrap_or(f64::NAN);
                worst = worst.max(x);
                if !(x <= 1e-10) {
                    problems.push(format!("gamma={gamma} v={v:e} {m}={x:e}"));
                }
            }
        }
    }
    let fast = start.elapsed() < Duration::from_secs(5);
    Ok(vec![
        Verdict::new(
            "exact_baseline",
            problems.is_empty(),
            if problems.is_empty() {
                "18 models, all metrics <= 1e-10".to_string()
            } else {
                problems.join("; ")
            },
        ),
        Verdict::new("runtime", fast, "under 5 s"),
    ])
}

fn criterion11() -> Result<Vec<Verdict>> {
    let b = Family::burr(2.0, 1.0)?;
    let x = 1e4;
    let vm_b = x * b.pdf(x) / b.sf(x);
    let rb = Family::reversed_burr(1.0, 1.0, 0.0)?;
    let y = 1e-4;
    let vm_rb = y * rb.pdf_below_endpoint(y) / rb.sf_below_endpoint(y);
    let eta = eta_diag(&b, 10.0)?;
    Ok(vec![
        Verdict::new(
            "von_mises_burr",
            (vm_b - 2.0).abs() <= 1e-3,
            format!("x f/(1-F) at 1e4 = {vm_b:.9}"),
        ),
        Verdict::new(
            "von_mises_revburr",
            (vm_rb - 1.0).abs() <= 1e-3,
            format!("(x*-x) f/(1-F) at gap 1e-4 = {vm_rb:.9}"),
        ),
        Verdict::new(
            "eta_burr",
            (eta - 19.0 / 101.0).abs() <= 1e-12,
            format!("eta(10) = {eta:.15}"),
        ),
    ])
}

/// Run a suite. Artifacts hold the sweeps and Monte Carlo tables that were computed.
pub fn run(suite: Suite, cfg: &VerifyConfig) -> Result<VerifyOutput> {
    run_with(suite, cfg, |_| {})
}

/// As [`run`], reporting each criterion as soon as it is decided.
pub fn run_with(suite: Suite, cfg: &VerifyConfig, mut progress: impl FnMut(&CriterionResult)) -> Result<VerifyOutput> {
    let started = Instant::now();
    let mut runner = Runner {
        cfg: *cfg,
        sweeps: BTreeMap::new(),
        mc: None,
    };
    let mut criteria = Vec::new();
    for id in suite.criteria() {
        let verdicts = runner.criterion(id, started)?;
        let result = CriterionResult {
            id,
            title: title(id).to_string(),
            passed: verdicts.iter().all(Verdict::passed),
            verdicts,
        };
        progress(&result);
        criteria.push(result);
    }
    let mut artifacts = runner.artifacts()?;
    artifacts.insert("verdicts.json".into(), to_json(&criteria)?);
    Ok(VerifyOutput { criteria, artifacts })
}
