use crate::error::{Error, Result};
use crate::family::TailFamily;
use crate::limit::{GpModel, GAMMA_ZERO_THRESHOLD};

/// The limit law itself: `F = H_gamma`, so `A` vanishes identically.
#[derive(Debug, Clone, Copy)]
pub struct ExactGp {
    model: GpModel,
}

impl ExactGp {
    pub fn new(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() {
            return Err(Error::InvalidArgument(format!("gamma must be finite, got {gamma}")));
        }
        Ok(Self {
            model: GpModel::standard(gamma),
        })
    }

    fn g(&self) -> f64 {
        self.model.gamma
    }

    fn is_zero(&self) -> bool {
        self.g().abs() < GAMMA_ZERO_THRESHOLD
    }
}

impl TailFamily for ExactGp {
    fn kind(&self) -> &'static str {
        "gp"
    }

    fn spec(&self) -> String {
        format!("gp:gamma={}", self.g())
    }

    fn gamma(&self) -> f64 {
        self.g()
    }

    fn rho(&self) -> Option<f64> {
        None
    }

    fn xstar(&self) -> f64 {
        self.model.upper()
    }

    fn cdf(&self, x: f64) -> f64 {
        self.model.cdf(x)
    }

    fn sf(&self, x: f64) -> f64 {
        self.model.sf(x)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.model.pdf(x)
    }

    fn sf_below_endpoint(&self, y: f64) -> f64 {
        self.model.sf_below_upper(y)
    }

    fn pdf_below_endpoint(&self, y: f64) -> f64 {
        crate::density::Density::pdf_below_upper(&self.model, y)
    }

    fn u(&self, v: f64) -> f64 {
        if self.is_zero() {
            v.ln()
        } else {
            (self.g() * v.ln()).exp_m1() / self.g()
        }
    }

    fn u1(&self, v: f64) -> f64 {
        ((self.g() - 1.0) * v.ln()).exp()
    }

    fn u2(&self, v: f64) -> f64 {
        (self.g() - 1.0) * ((self.g() - 2.0) * v.ln()).exp()
    }

    fn endpoint_gap(&self, v: f64) -> f64 {
        if self.xstar().is_finite() {
            -(self.g() * v.ln()).exp() / self.g()
        } else {
            f64::INFINITY
        }
    }

    fn rate_a(&self, _v: f64) -> f64 {
        0.0
    }

    fn degenerate_rate(&self) -> bool {
        true
    }
}
