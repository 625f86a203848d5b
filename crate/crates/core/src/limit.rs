//! Generalised Pareto and generalised extreme value limit laws.

use serde::{Deserialize, Serialize};

use crate::density::Density;
use crate::error::{Error, Result};

/// Below this |gamma| the exponential (gamma = 0) forms are used.
pub const GAMMA_ZERO_THRESHOLD: f64 = 1e-8;

/// `ln(1 + gamma z) / gamma`, continuous through gamma = 0.
fn log_kernel(gamma: f64, z: f64) -> f64 {
    if gamma.abs() < GAMMA_ZERO_THRESHOLD {
        z
    } else {
        (gamma * z).ln_1p() / gamma
    }
}

/// The GP density kernel `(1 + gamma z)^(-1/gamma - 1)` on `{1 + gamma z > 0}`,
/// without the `z >= 0` restriction. `g_gamma = G_gamma * kernel`.
pub fn gp_kernel(gamma: f64, z: f64) -> f64 {
    if gamma.abs() < GAMMA_ZERO_THRESHOLD {
        return (-z).exp();
    }
    let base = 1.0 + gamma * z;
    if base <= 0.0 {
        return if gamma < -1.0 && base == 0.0 {
            f64::INFINITY
        } else if gamma == -1.0 && base == 0.0 {
            1.0
        } else {
            0.0
        };
    }
    (-(1.0 + gamma) * log_kernel(gamma, z)).exp()
}

/// Generalised Pareto law with optional location and scale.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GpModel {
    pub gamma: f64,
    pub location: f64,
    pub scale: f64,
}

impl GpModel {
    pub fn new(gamma: f64, location: f64, scale: f64) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() || !gamma.is_finite() || !location.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "GP model needs finite gamma/location and scale > 0 (got gamma={gamma}, location={location}, scale={scale})"
            )));
        }
        Ok(Self {
            gamma,
            location,
            scale,
        })
    }

    /// Standard `H_gamma`.
    pub fn standard(gamma: f64) -> Self {
        Self {
            gamma,
            location: 0.0,
            scale: 1.0,
        }
    }

    fn z(&self, x: f64) -> f64 {
        (x - self.location) / self.scale
    }

    /// Right end of the support; `+inf` for `gamma >= 0`.
    pub fn upper(&self) -> f64 {
        if self.gamma < 0.0 && self.gamma.abs() >= GAMMA_ZERO_THRESHOLD {
            self.location - self.scale / self.gamma
        } else {
            f64::INFINITY
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        if !(z > 0.0) {
            return 0.0;
        }
        if x >= self.upper() {
            return 1.0;
        }
        (-(-log_kernel(self.gamma, z)).exp_m1()).clamp(0.0, 1.0)
    }

    /// `1 - cdf(x)` computed without cancellation.
    pub fn sf(&self, x: f64) -> f64 {
        let z = self.z(x);
        if !(z > 0.0) {
            return 1.0;
        }
        if x >= self.upper() {
            return 0.0;
        }
        (-log_kernel(self.gamma, z)).exp().clamp(0.0, 1.0)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let z = self.z(x);
        if z < 0.0 || z.is_nan() {
            return 0.0;
        }
        let upper = self.upper();
        if x > upper {
            return 0.0;
        }
        if x == upper {
            return self.pdf_below_upper_dist(0.0);
        }
        gp_kernel(self.gamma, z) / self.scale
    }

    /// Density at `upper() - d` for `gamma < 0`, evaluated from the distance.
    fn pdf_below_upper_dist(&self, d: f64) -> f64 {
        let u = -self.gamma * d / self.scale; // = 1 + gamma z
        if u <= 0.0 {
            return if self.gamma < -1.0 {
                f64::INFINITY
            } else if self.gamma == -1.0 {
                1.0 / self.scale
            } else {
                0.0
            };
        }
        u.powf(-1.0 / self.gamma - 1.0) / self.scale
    }

    /// Survival probability at `upper() - d` for `gamma < 0`.
    pub fn sf_below_upper(&self, d: f64) -> f64 {
        if d <= 0.0 {
            return 0.0;
        }
        let u = -self.gamma * d / self.scale;
        u.powf(-1.0 / self.gamma).min(1.0)
    }

    pub fn quantile(&self, p: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&p) {
            return Err(Error::InvalidArgument(format!(
                "quantile level must lie in [0, 1), got {p}"
            )));
        }
        let log_sf = -(-p).ln_1p(); // -ln(1-p) >= 0
        let z = if self.gamma.abs() < GAMMA_ZERO_THRESHOLD {
            log_sf
        } else {
            (self.gamma * log_sf).exp_m1() / self.gamma
        };
        Ok(self.location + self.scale * z)
    }
}

impl Density for GpModel {
    fn support(&self) -> (f64, f64) {
        (self.location, self.upper())
    }

    fn pdf(&self, x: f64) -> f64 {
        GpModel::pdf(self, x)
    }

    fn pdf_below_upper(&self, d: f64) -> f64 {
        if self.upper().is_finite() {
            self.pdf_below_upper_dist(d)
        } else {
            f64::NAN
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        let (lo, hi) = self.support();
        let a = a.max(lo);
        let b = b.min(hi);
        if b <= a {
            return 0.0;
        }
        let upper_part = if b.is_finite() && hi.is_finite() {
            self.sf_below_upper(hi - b)
        } else {
            self.sf(b)
        };
        (self.sf(a) - upper_part).max(0.0)
    }
}

/// Generalised extreme value law `G_gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GevModel {
    pub gamma: f64,
}

impl GevModel {
    pub fn new(gamma: f64) -> Self {
        Self { gamma }
    }

    /// `(cdf, pdf)` at `x`; `pdf = cdf * (1 + gamma x)^(-1/gamma - 1)` on the support.
    pub fn eval(&self, x: f64) -> (f64, f64) {
        let g = self.gamma;
        if g.abs() < GAMMA_ZERO_THRESHOLD {
            let cdf = (-(-x).exp()).exp();
            let pdf = (-x - (-x).exp()).exp();
            return (cdf, pdf);
        }
        let base = 1.0 + g * x;
        if base <= 0.0 {
            // below the support for gamma > 0, at/above the upper end for gamma < 0
            return if g > 0.0 { (0.0, 0.0) } else { (1.0, 0.0) };
        }
        let tail = (-log_kernel(g, x)).exp(); // (1 + g x)^(-1/g)
        let cdf = (-tail).exp();
        (cdf, cdf * gp_kernel(g, x))
    }
}
