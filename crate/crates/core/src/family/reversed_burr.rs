use crate::error::{Error, Result};
use crate::family::{positive, TailFamily};

/// Reversed Burr: `F(x) = 1 - (1 + (x* - x)^(-c))^(-k)`, `x < x*`;
/// `gamma = -1/(ck)`, `rho = -1/k`.
///
/// With `y = x* - x` and `z = y^c` the tail is `(z / (1 + z))^k` and the
/// density `c k z^k / (y (1 + z)^(k+1))`, both free of overflow as `y -> 0`.
#[derive(Debug, Clone, Copy)]
pub struct ReversedBurr {
    c: f64,
    k: f64,
    xstar: f64,
}

impl ReversedBurr {
    pub fn new(c: f64, k: f64, xstar: f64) -> Result<Self> {
        if !xstar.is_finite() {
            return Err(Error::InvalidArgument(format!("xstar must be finite, got {xstar}")));
        }
        Ok(Self {
            c: positive("c", c)?,
            k: positive("k", k)?,
            xstar,
        })
    }

    fn wm1(&self, v: f64) -> f64 {
        (v.ln() / self.k).exp_m1()
    }

    fn log_u1_slope(&self, v: f64) -> f64 {
        let w = (v.ln() / self.k).exp();
        (-1.0 / self.c - 1.0) * w / (self.k * v * self.wm1(v)) + 1.0 / (self.k * v) - 1.0 / v
    }

    fn log_sf_at_gap(&self, y: f64) -> f64 {
        let z = (self.c * y.ln()).exp();
        if z > 1.0 {
            -self.k * (1.0 / z).ln_1p()
        } else {
            self.k * (self.c * y.ln() - z.ln_1p())
        }
    }
}

impl TailFamily for ReversedBurr {
    fn kind(&self) -> &'static str {
        "revburr"
    }

    fn spec(&self) -> String {
        format!("revburr:c={},k={},xstar={}", self.c, self.k, self.xstar)
    }

    fn gamma(&self) -> f64 {
        -1.0 / (self.c * self.k)
    }

    fn rho(&self) -> Option<f64> {
        Some(-1.0 / self.k)
    }

    fn xstar(&self) -> f64 {
        self.xstar
    }

    fn cdf(&self, x: f64) -> f64 {
        let y = self.xstar - x;
        if y <= 0.0 {
            return 1.0;
        }
        -self.log_sf_at_gap(y).exp_m1()
    }

    fn sf(&self, x: f64) -> f64 {
        self.sf_below_endpoint(self.xstar - x)
    }

    fn pdf(&self, x: f64) -> f64 {
        self.pdf_below_endpoint(self.xstar - x)
    }

    fn sf_below_endpoint(&self, y: f64) -> f64 {
        if y <= 0.0 {
            return 0.0;
        }
        if y == f64::INFINITY {
            return 1.0;
        }
        self.log_sf_at_gap(y).exp()
    }

    fn pdf_below_endpoint(&self, y: f64) -> f64 {
        if !(y > 0.0) || y == f64::INFINITY {
            return 0.0;
        }
        let ly = y.ln();
        let z = (self.c * ly).exp();
        let log_pdf = if z > 1.0 {
            // c k z^k / (y (1+z)^(k+1)) = c k / (y z (1 + 1/z)^(k+1))
            (self.c * self.k).ln() - ly - self.c * ly - (self.k + 1.0) * (1.0 / z).ln_1p()
        } else {
            (self.c * self.k).ln() + self.k * self.c * ly - ly - (self.k + 1.0) * z.ln_1p()
        };
        log_pdf.exp()
    }

    fn u(&self, v: f64) -> f64 {
        self.xstar - self.endpoint_gap(v)
    }

    fn u1(&self, v: f64) -> f64 {
        let w = (v.ln() / self.k).exp();
        self.wm1(v).powf(-1.0 / self.c - 1.0) * w / (self.c * self.k * v)
    }

    fn u2(&self, v: f64) -> f64 {
        self.u1(v) * self.log_u1_slope(v)
    }

    fn endpoint_gap(&self, v: f64) -> f64 {
        self.wm1(v).powf(-1.0 / self.c)
    }

    fn rate_a(&self, v: f64) -> f64 {
        // v U''/U' + 1 - gamma, simplified to avoid cancelling O(1) terms
        -(1.0 + self.c) / (self.c * self.k * self.wm1(v))
    }
}
