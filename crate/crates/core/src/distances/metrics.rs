use super::{Divergence, Pair, Panel, ROUNDING};
use crate::error::Result;
use crate::quad::{QuadOptions, QuadResult};

// A density below this whose partner underflows to zero contributes nothing representable.
const NEGLIGIBLE: f64 = 1e-200;
// Rounding level of integrands quadratic in p - q.
const QUADRATIC_NOISE: f64 = ROUNDING * ROUNDING;

fn zero() -> QuadResult {
    QuadResult {
        value: 0.0,
        error: 0.0,
        evaluations: 0,
    }
}

fn infinite() -> QuadResult {
    QuadResult {
        value: f64::INFINITY,
        ..zero()
    }
}

fn add(acc: &mut QuadResult, r: QuadResult) {
    acc.value += r.value;
    acc.error += r.error;
    acc.evaluations += r.evaluations;
}

/// Mass of the density covering an unshared panel.
fn lone_mass(pair: &Pair<'_>, panel: &Panel) -> f64 {
    if panel.in_p {
        pair.p.mass(panel.a, panel.b)
    } else {
        pair.q.mass(panel.a, panel.b)
    }
}

/// `ln(p / q)` without cancellation near `p = q` or underflow of the ratio.
fn log_ratio(p: f64, q: f64) -> f64 {
    let d = (p - q) / q;
    if d.abs() < 0.5 {
        d.ln_1p()
    } else {
        p.ln() - q.ln()
    }
}

/// `r ln r - r + 1` at `r = 1 + d`.
fn phi(d: f64) -> f64 {
    if d <= -1.0 {
        1.0
    } else if d.abs() < 1e-2 {
        // sum_{n>=2} (-d)^n / (n (n-1))
        let mut term = d * d;
        let mut sum = 0.0;
        for n in 2..12 {
            sum += term / (n * (n - 1)) as f64;
            term *= -d;
        }
        sum
    } else {
        (1.0 + d) * d.ln_1p() - d
    }
}

/// Squared Hellinger distance `int (sqrt p - sqrt q)^2`.
#[derive(Debug, Clone, Copy)]
pub struct Hellinger;

impl Divergence for Hellinger {
    fn name(&self) -> String {
        "h2".into()
    }

    fn compute(&self, pair: &Pair<'_>, opts: &QuadOptions) -> Result<QuadResult> {
        let mut acc = zero();
        for panel in &pair.panels {
            if !panel.shared() {
                acc.value += lone_mass(pair, panel);
                continue;
            }
            // (p - q)^2 / (sqrt p + sqrt q)^2 avoids cancelling the square roots
            let r = pair.integrate_panel(panel, opts, QUADRATIC_NOISE, |p, q| {
                let s = p.sqrt() + q.sqrt();
                if s == 0.0 {
                    0.0
                } else {
                    let d = (p - q) / s;
                    d * d
                }
            })?;
            add(&mut acc, r);
        }
        Ok(acc)
    }
}

/// Total variation `1/2 int |p - q|`.
#[derive(Debug, Clone, Copy)]
pub struct TotalVariation;

impl Divergence for TotalVariation {
    fn name(&self) -> String {
        "tv".into()
    }

    fn compute(&self, pair: &Pair<'_>, opts: &QuadOptions) -> Result<QuadResult> {
        let mut acc = zero();
        for panel in &pair.panels {
            if !panel.shared() {
                acc.value += lone_mass(pair, panel);
                continue;
            }
            let mut cuts = vec![(panel.a, panel.b - panel.a)];
            cuts.extend(pair.crossings(panel));
            cuts.push((panel.b, 0.0));
            for w in cuts.windows(2) {
                let r = pair.integrate_span(panel, w[0], w[1], opts, ROUNDING, |p, q| (p - q).abs())?;
                add(&mut acc, r);
            }
        }
        acc.value *= 0.5;
        acc.error *= 0.5;
        Ok(acc)
    }
}

/// Kullback-Leibler divergence `int p ln(p/q)`, `+inf` unless supp p lies in supp q.
#[derive(Debug, Clone, Copy)]
pub struct KullbackLeibler;

impl Divergence for KullbackLeibler {
    fn name(&self) -> String {
        "kl".into()
    }

    fn compute(&self, pair: &Pair<'_>, opts: &QuadOptions) -> Result<QuadResult> {
        let mut acc = zero();
        for panel in &pair.panels {
            if !panel.shared() {
                let mass = lone_mass(pair, panel);
                if panel.in_p && mass > 0.0 {
                    return Ok(infinite());
                }
                acc.value += mass;
                continue;
            }
            // int_S p ln(p/q) = int_S q phi(p/q) + q-mass outside S
            let r = pair.integrate_panel(panel, opts, QUADRATIC_NOISE, |p, q| {
                if q == 0.0 && p < NEGLIGIBLE {
                    0.0
                } else if q == 0.0 {
                    f64::INFINITY
                } else if p == 0.0 {
                    q
                } else if (p - q).abs() < 0.5 * q {
                    q * phi((p - q) / q)
                } else {
                    p * log_ratio(p, q) - p + q
                }
            })?;
            add(&mut acc, r);
        }
        Ok(acc)
    }
}

/// Higher-order divergence `int |ln(p/q)|^order p`.
#[derive(Debug, Clone, Copy)]
pub struct HigherOrder(pub u32);

impl Divergence for HigherOrder {
    fn name(&self) -> String {
        format!("d{}", self.0)
    }

    fn compute(&self, pair: &Pair<'_>, opts: &QuadOptions) -> Result<QuadResult> {
        let order = self.0 as i32;
        let mut acc = zero();
        for panel in &pair.panels {
            if !panel.shared() {
                if panel.in_p && lone_mass(pair, panel) > 0.0 {
                    return Ok(infinite());
                }
                continue;
            }
            let r = pair.integrate_panel(panel, opts, QUADRATIC_NOISE, |p, q| {
                if p == 0.0 || (q == 0.0 && p < NEGLIGIBLE) {
                    0.0
                } else if q == 0.0 {
                    f64::INFINITY
                } else {
                    log_ratio(p, q).abs().powi(order) * p
                }
            })?;
            add(&mut acc, r);
        }
        Ok(acc)
    }
}
