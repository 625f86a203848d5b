use crate::error::Result;
use crate::family::{positive, TailFamily};

/// Burr XII: `F(x) = 1 - (1 + x^c)^(-k)`, `x > 0`; `gamma = 1/(ck)`, `rho = -1/k`.
#[derive(Debug, Clone, Copy)]
pub struct Burr {
    c: f64,
    k: f64,
}

impl Burr {
    pub fn new(c: f64, k: f64) -> Result<Self> {
        Ok(Self {
            c: positive("c", c)?,
            k: positive("k", k)?,
        })
    }

    /// `v^(1/k) - 1`
    fn wm1(&self, v: f64) -> f64 {
        (v.ln() / self.k).exp_m1()
    }

    /// `d ln U' / dv`
    fn log_u1_slope(&self, v: f64) -> f64 {
        let w = (v.ln() / self.k).exp();
        (1.0 / self.c - 1.0) * w / (self.k * v * self.wm1(v)) + 1.0 / (self.k * v) - 1.0 / v
    }
}

impl TailFamily for Burr {
    fn kind(&self) -> &'static str {
        "burr"
    }

    fn spec(&self) -> String {
        format!("burr:c={},k={}", self.c, self.k)
    }

    fn gamma(&self) -> f64 {
        1.0 / (self.c * self.k)
    }

    fn rho(&self) -> Option<f64> {
        if self.c == 1.0 {
            None
        } else {
            Some(-1.0 / self.k)
        }
    }

    fn xstar(&self) -> f64 {
        f64::INFINITY
    }

    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 0.0;
        }
        -(-self.k * x.powf(self.c).ln_1p()).exp_m1()
    }

    fn sf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            return 1.0;
        }
        (-self.k * x.powf(self.c).ln_1p()).exp()
    }

    fn pdf(&self, x: f64) -> f64 {
        if x <= 0.0 || x.is_nan() {
            return 0.0;
        }
        let lx = x.ln();
        let xc = (self.c * lx).exp();
        ((self.k * self.c).ln() + (self.c - 1.0) * lx - (self.k + 1.0) * xc.ln_1p()).exp()
    }

    fn u(&self, v: f64) -> f64 {
        self.wm1(v).powf(1.0 / self.c)
    }

    fn u1(&self, v: f64) -> f64 {
        let w = (v.ln() / self.k).exp();
        self.wm1(v).powf(1.0 / self.c - 1.0) * w / (self.c * self.k * v)
    }

    fn u2(&self, v: f64) -> f64 {
        self.u1(v) * self.log_u1_slope(v)
    }

    fn endpoint_gap(&self, _v: f64) -> f64 {
        f64::INFINITY
    }

    fn rate_a(&self, v: f64) -> f64 {
        // v U''/U' + 1 - gamma, simplified to avoid cancelling O(1) terms
        (1.0 - self.c) / (self.c * self.k * self.wm1(v))
    }

    fn degenerate_rate(&self) -> bool {
        self.c == 1.0
    }
}
