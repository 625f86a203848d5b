use crate::family::TailFamily;

/// `F(x) = exp(-exp(-x))` on the real line; `gamma = 0`, `rho = -1`.
#[derive(Debug, Clone, Copy)]
pub struct Gumbel;

impl Gumbel {
    /// `L(v) = -ln(1 - 1/v)`, so `U = -ln L`.
    fn l(v: f64) -> f64 {
        -(-1.0 / v).ln_1p()
    }

    fn log_u1_slope(v: f64) -> f64 {
        -1.0 / v - 1.0 / (v - 1.0) + 1.0 / (v * (v - 1.0) * Self::l(v))
    }
}

impl TailFamily for Gumbel {
    fn kind(&self) -> &'static str {
        "gumbel"
    }

    fn spec(&self) -> String {
        "gumbel".into()
    }

    fn gamma(&self) -> f64 {
        0.0
    }

    fn rho(&self) -> Option<f64> {
        Some(-1.0)
    }

    fn xstar(&self) -> f64 {
        f64::INFINITY
    }

    fn cdf(&self, x: f64) -> f64 {
        (-(-x).exp()).exp()
    }

    fn sf(&self, x: f64) -> f64 {
        -(-(-x).exp()).exp_m1()
    }

    fn pdf(&self, x: f64) -> f64 {
        if x.is_nan() {
            return 0.0;
        }
        (-x - (-x).exp()).exp()
    }

    fn u(&self, v: f64) -> f64 {
        -Self::l(v).ln()
    }

    fn u1(&self, v: f64) -> f64 {
        1.0 / (v * (v - 1.0) * Self::l(v))
    }

    fn u2(&self, v: f64) -> f64 {
        self.u1(v) * Self::log_u1_slope(v)
    }

    fn endpoint_gap(&self, _v: f64) -> f64 {
        f64::INFINITY
    }

    fn rate_a(&self, v: f64) -> f64 {
        // (1/L - v) / (v - 1); the difference cancels for large v, so use its series there
        let diff = if v > 1e3 {
            let u = 1.0 / v;
            -0.5 - u * (1.0 / 12.0 + u * (1.0 / 24.0 + u * (19.0 / 720.0 + u * (3.0 / 160.0))))
        } else {
            1.0 / Self::l(v) - v
        };
        diff / (v - 1.0)
    }
}
