//! Rescaled threshold excesses.
//!
//! For a threshold `t = U(v)` and scaling `s = (1 - F(t)) / f(t)` the excess
//! density on `(0, (x* - t)/s)` is `l_t(x) = s f(s x + t) / (1 - F(t))`.
//! For `gamma < 0` the recentred model shifts by `c(t) = x* - t + s/gamma`,
//! i.e. it is the excess over `t + c(t)` rescaled by the same `s`; its upper
//! end is exactly `-1/gamma`, the upper end of `h_gamma`. Since `c(t) < 0` the
//! conditioning event `X > t + c(t)` has probability `1 - F(t + c(t))`, which
//! is the normaliser used below, so both variants are probability densities
//! on `(0, endpoint)`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};
use crate::family::Family;
use crate::limit::GpModel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Recenter {
    On,
    Off,
    /// On iff `gamma < 0`.
    Auto,
}

impl Recenter {
    pub fn resolve(self, gamma: f64) -> bool {
        match self {
            Recenter::On => true,
            Recenter::Off => false,
            Recenter::Auto => gamma < 0.0,
        }
    }
}

impl FromStr for Recenter {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "on" => Ok(Recenter::On),
            "off" => Ok(Recenter::Off),
            "auto" => Ok(Recenter::Auto),
            other => Err(Error::InvalidArgument(format!(
                "recenter must be on, off or auto, got `{other}`"
            ))),
        }
    }
}

impl fmt::Display for Recenter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Recenter::On => "on",
            Recenter::Off => "off",
            Recenter::Auto => "auto",
        })
    }
}

/// Exceedance law at one threshold.
#[derive(Debug, Clone, Serialize)]
pub struct ExcessModel {
    pub family: Family,
    pub v: f64,
    pub t: f64,
    pub s_t: f64,
    pub c_t: f64,
    pub mu_t: f64,
    /// Upper end of the excess support.
    pub endpoint: f64,
    pub recentered: bool,
    /// `x* - (t + c_t)` for a finite right endpoint.
    #[serde(skip)]
    anchor_gap: f64,
    /// `1 - F(t + c_t)`.
    #[serde(skip)]
    anchor_sf: f64,
}

impl ExcessModel {
    /// Build the model at tail level `v`, i.e. threshold `t = U(v)`.
    pub fn new(family: &Family, v: f64, recenter: Recenter) -> Result<Self> {
        let t = family.quantile_u(v)?;
        let gap = family.endpoint_gap(v);
        Self::build(family, v, t, gap, recenter)
    }

    /// Build the model at an explicit threshold `t < x*`.
    pub fn at_threshold(family: &Family, t: f64, recenter: Recenter) -> Result<Self> {
        let xstar = family.xstar();
        if !(t < xstar) {
            return Err(Error::InvalidArgument(format!(
                "threshold {t} must lie below the right endpoint {xstar}"
            )));
        }
        let (gap, sf) = if xstar.is_finite() {
            (xstar - t, family.sf_below_endpoint(xstar - t))
        } else {
            (f64::INFINITY, family.sf(t))
        };
        if !(sf > 0.0) || !(sf < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "threshold {t} is outside the interior of the support"
            )));
        }
        Self::build(family, 1.0 / sf, t, gap, recenter)
    }

    fn build(family: &Family, v: f64, t: f64, gap: f64, recenter: Recenter) -> Result<Self> {
        let gamma = family.gamma();
        let recentered = recenter.resolve(gamma);
        if gap.is_finite() {
            let sf_t = family.sf_below_endpoint(gap);
            let f_t = family.pdf_below_endpoint(gap);
            if !(f_t > 0.0) || !(sf_t > 0.0) {
                return Err(Error::ZeroDensity(t));
            }
            let s = sf_t / f_t;
            let (c, endpoint) = if recentered && gamma < 0.0 {
                (gap + s / gamma, -1.0 / gamma)
            } else {
                (0.0, gap / s)
            };
            let anchor_gap = s * endpoint;
            let anchor_sf = if c == 0.0 {
                sf_t
            } else {
                family.sf_below_endpoint(anchor_gap)
            };
            Ok(Self {
                family: family.clone(),
                v,
                t,
                s_t: s,
                c_t: c,
                mu_t: c / s,
                endpoint,
                recentered,
                anchor_gap,
                anchor_sf,
            })
        } else {
            let s = family.scaling(t)?;
            Ok(Self {
                family: family.clone(),
                v,
                t,
                s_t: s,
                c_t: 0.0,
                mu_t: 0.0,
                endpoint: f64::INFINITY,
                recentered,
                anchor_gap: f64::INFINITY,
                anchor_sf: family.sf(t),
            })
        }
    }

    pub fn gamma(&self) -> f64 {
        self.family.gamma()
    }

    /// The limit `h_gamma`.
    pub fn limit(&self) -> GpModel {
        GpModel::standard(self.gamma())
    }

    /// `|A(v)|`.
    pub fn abs_rate(&self) -> Result<f64> {
        Ok(self.family.rate(self.v)?.abs())
    }

    /// Tail level of the conditioning event, `1 / (1 - F(t + c_t))`.
    pub fn anchor_level(&self) -> f64 {
        1.0 / self.anchor_sf
    }

    /// Upper end of the un-recentred excess support, `(x* - t) / s_t`.
    pub fn raw_endpoint(&self) -> f64 {
        if self.anchor_gap.is_finite() {
            (self.anchor_gap - self.c_t) / self.s_t
        } else {
            f64::INFINITY
        }
    }

    fn finite(&self) -> bool {
        self.anchor_gap.is_finite()
    }

    /// Excess survival function `P(excess > x)`.
    pub fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        if x >= self.endpoint {
            return 0.0;
        }
        let tail = if self.finite() {
            self.family.sf_below_endpoint(self.s_t * (self.endpoint - x))
        } else {
            self.family.sf(self.t + self.s_t * x)
        };
        (tail / self.anchor_sf).clamp(0.0, 1.0)
    }

    /// Map a tail level `V >= anchor_level()` to the rescaled excess of `U(V)`.
    pub fn excess_of_level(&self, level: f64) -> f64 {
        if self.finite() {
            self.endpoint - self.family.endpoint_gap(level) / self.s_t
        } else {
            (self.family.u(level) - self.t) / self.s_t
        }
    }
}

impl Density for ExcessModel {
    fn support(&self) -> (f64, f64) {
        (0.0, self.endpoint)
    }

    fn pdf(&self, x: f64) -> f64 {
        if !(x >= 0.0) || x > self.endpoint {
            return 0.0;
        }
        if self.finite() {
            self.pdf_below_upper(self.endpoint - x)
        } else {
            self.s_t * self.family.pdf(self.t + self.s_t * x) / self.anchor_sf
        }
    }

    fn pdf_below_upper(&self, d: f64) -> f64 {
        if self.finite() {
            if d < 0.0 || d > self.endpoint {
                return 0.0;
            }
            self.s_t * self.family.pdf_below_endpoint(self.s_t * d) / self.anchor_sf
        } else {
            f64::NAN
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        let a = a.max(0.0);
        let b = b.min(self.endpoint);
        if b <= a {
            return 0.0;
        }
        (self.sf(a) - self.sf(b)).max(0.0)
    }
}

/// Tail diagnostic: `eta(t) = (1 + gamma t) f(t)/(1 - F(t)) - 1` for `gamma > 0`,
/// `eta~(1/(x* - t))` for `gamma < 0`.
pub fn eta_diag(family: &Family, t: f64) -> Result<f64> {
    let g = family.gamma();
    if g == 0.0 {
        return Err(Error::GammaZero);
    }
    if g > 0.0 {
        let sf = family.sf(t);
        let f = family.pdf(t);
        if !(sf > 0.0) {
            return Err(Error::InvalidArgument(format!("t = {t} is beyond the support")));
        }
        Ok((1.0 + g * t) * f / sf - 1.0)
    } else {
        let gap = family.xstar() - t;
        if !(gap > 0.0) {
            return Err(Error::InvalidArgument(format!("t = {t} is not below x*")));
        }
        eta_tilde(family, 1.0 / gap)
    }
}

/// `eta~(y) = (1 - gamma y) f(x* - 1/y) / ([1 - F(x* - 1/y)] y^2) - 1`, `gamma < 0`.
pub fn eta_tilde(family: &Family, y: f64) -> Result<f64> {
    let g = family.gamma();
    if !(g < 0.0) {
        return Err(Error::InvalidArgument("eta~ is defined for gamma < 0".into()));
    }
    if !(y > 0.0) {
        return Err(Error::InvalidArgument(format!("y must be positive, got {y}")));
    }
    let gap = 1.0 / y;
    let f = family.pdf_below_endpoint(gap);
    let sf = family.sf_below_endpoint(gap);
    Ok((1.0 - g * y) * f / (sf * y * y) - 1.0)
}

/// Ratios beyond this are reported as an unbounded supremum.
pub const RATIO_CAP: f64 = 1e12;
const RATIO_GRID: usize = 2048;

/// `sup l~_t(x) / h_gamma(x)` over `0 < x < min(endpoint, -1/gamma)`.
///
/// Coarse grid (geometric towards both ends) followed by golden-section
/// refinement around the best grid point. Returns `+inf` when the excess
/// puts mass beyond the upper end of `h_gamma` or the ratio exceeds
/// [`RATIO_CAP`].
pub fn density_ratio_sup(model: &ExcessModel) -> f64 {
    let limit = model.limit();
    let h_hi = limit.upper();
    let tol = 1e-12 * h_hi.abs().max(1.0);
    if model.endpoint > h_hi + tol {
        return f64::INFINITY;
    }
    let b = model.endpoint.min(h_hi);

    // A point is (x, distance to b); ratio evaluated from the distance on the upper half.
    // Ratios of densities this small are dominated by underflow and are skipped.
    const FLOOR: f64 = 1e-250;
    let ratio = |x: f64, d_top: f64| -> f64 {
        let (l, h) = if b.is_finite() && d_top < 0.5 * b {
            (
                model.pdf_below_upper(d_top + (model.endpoint - b)),
                limit.pdf_below_upper(d_top + (h_hi - b)),
            )
        } else {
            (model.pdf(x), limit.pdf(x))
        };
        if h > FLOOR || (h > 0.0 && l > FLOOR) {
            l / h
        } else if l > FLOOR {
            f64::INFINITY
        } else {
            0.0
        }
    };

    // Parameter lambda < 0 encodes the upper half by distance -lambda; lambda > 0 is x itself.
    let point = |lambda: f64| -> (f64, f64) {
        if lambda < 0.0 {
            (b + lambda, -lambda)
        } else {
            (lambda, b - lambda)
        }
    };
    let mut params: Vec<f64> = Vec::with_capacity(RATIO_GRID);
    if b.is_finite() {
        let half = RATIO_GRID / 2;
        for i in 0..half {
            let frac = 10f64.powf(-14.0 + 14.0 * i as f64 / (half - 1) as f64);
            params.push(0.5 * b * frac);
        }
        for i in (0..half).rev() {
            let frac = 10f64.powf(-14.0 + 14.0 * i as f64 / (half - 1) as f64);
            params.push(-0.5 * b * frac * (1.0 - 1e-12));
        }
    } else {
        for i in 0..RATIO_GRID {
            params.push(10f64.powf(-14.0 + 28.0 * i as f64 / (RATIO_GRID - 1) as f64));
        }
    }
    let eval = |lambda: f64| {
        let (x, d) = point(lambda);
        ratio(x, d)
    };
    let values: Vec<f64> = params.iter().map(|&p| eval(p)).collect();
    if values.iter().any(|r| !(r.is_finite()) || *r > RATIO_CAP) {
        return f64::INFINITY;
    }
    let (best, &best_val) = values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid is non-empty");
    if best == 0 || best == values.len() - 1 {
        return best_val;
    }
    let (lo, hi) = (params[best - 1], params[best + 1]);
    // the bracket may straddle the two halves; refine within the half holding the best point
    let (lo, hi) = if lo > 0.0 && hi < 0.0 {
        if params[best] > 0.0 {
            (lo, 0.5 * b)
        } else {
            (-0.5 * b, hi)
        }
    } else {
        (lo, hi)
    };
    best_val.max(golden_max(&eval, lo, hi))
}

fn golden_max(f: &dyn Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if (b - a).abs() <= 1e-15 * (a.abs() + b.abs()) {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    fc.max(fd)
}

#[cfg(test)]
mod tests;
