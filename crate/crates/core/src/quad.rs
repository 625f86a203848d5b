//! Double-exponential quadrature.
//!
//! Finite panels use the tanh-sinh map `x = (a+b)/2 + (b-a)/2 tanh(pi/2 sinh t)`
//! and semi-infinite panels the exp-sinh map `x = a + exp(pi/2 sinh t)`.
//! Step sizes are halved level by level, reusing every previous node, until
//! two successive estimates agree.
//!
//! Integrands receive a [`Node`] carrying the distances to both panel ends,
//! computed without cancellation. Densities with a power-law singularity at a
//! finite endpoint use those distances instead of `x` so the last few
//! hundred nodes next to the endpoint are still resolved.

use std::f64::consts::FRAC_PI_2;

use crate::error::{Error, Result};

/// A quadrature abscissa together with its exact distances to the panel ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Node {
    pub x: f64,
    /// `x - a`.
    pub from_lo: f64,
    /// `b - x`; `+inf` on a semi-infinite panel.
    pub from_hi: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Maximum number of step halvings after the initial level.
    pub max_levels: u32,
}

impl Default for QuadOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 0.0,
            max_levels: 12,
        }
    }
}

impl QuadOptions {
    pub fn with_rel_tol(rel_tol: f64) -> Self {
        Self {
            rel_tol,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: f64,
    /// Difference between the last two refinement levels.
    pub error: f64,
    pub evaluations: usize,
}

// Levels below this are never accepted; early agreement of coarse grids can be a coincidence.
const MIN_LEVELS: u32 = 3;
// Nodes whose weight falls below this contribute nothing representable.
const TINY_WEIGHT: f64 = 1e-290;

/// Integrate `f` over `(a, b)`, `b` possibly `+inf`, without evaluating the endpoints.
pub fn quad<F>(f: F, a: f64, b: f64, rel_tol: f64) -> Result<QuadResult>
where
    F: Fn(f64) -> f64,
{
    let opts = QuadOptions::with_rel_tol(rel_tol);
    integrate(
        |n: Node| {
            if n.x <= a || n.x >= b {
                0.0
            } else {
                f(n.x)
            }
        },
        a,
        b,
        &opts,
    )
}

/// Integrate a node-aware integrand over `(a, b)`.
pub fn integrate<F>(f: F, a: f64, b: f64, opts: &QuadOptions) -> Result<QuadResult>
where
    F: Fn(Node) -> f64,
{
    if !a.is_finite() || b.is_nan() || b == f64::NEG_INFINITY {
        return Err(Error::InvalidArgument(format!(
            "integration limits must satisfy a finite, b finite or +inf (got [{a}, {b}])"
        )));
    }
    if b <= a {
        return Ok(QuadResult {
            value: 0.0,
            error: 0.0,
            evaluations: 0,
        });
    }
    let rule: Box<dyn Fn(f64) -> Option<(Node, f64)>> = if b.is_finite() {
        Box::new(move |t| tanh_sinh_node(a, b, t))
    } else {
        Box::new(move |t| exp_sinh_node(a, t))
    };
    refine(&f, &*rule, a, b, opts)
}

fn refine<F>(
    f: &F,
    rule: &dyn Fn(f64) -> Option<(Node, f64)>,
    a: f64,
    b: f64,
    opts: &QuadOptions,
) -> Result<QuadResult>
where
    F: Fn(Node) -> f64,
{
    let mut sum = 0.0;
    let mut abs_sum = 0.0;
    let mut evaluations = 0usize;
    let mut prev = f64::NAN;

    let mut eval = |t: f64, sum: &mut f64, abs_sum: &mut f64| -> Result<bool> {
        match rule(t) {
            None => Ok(false),
            Some((node, w)) => {
                let y = f(node);
                evaluations += 1;
                let c = w * y;
                if !c.is_finite() {
                    return Err(Error::NonFiniteIntegrand(node.x));
                }
                *sum += c;
                *abs_sum += c.abs();
                Ok(true)
            }
        }
    };

    // Level 0 walks t = 0, +-1, +-2, ... ; later levels add the odd multiples of h.
    for level in 0..=opts.max_levels {
        let h = 0.5f64.powi(level as i32);
        if level == 0 {
            eval(0.0, &mut sum, &mut abs_sum)?;
            for sign in [1.0, -1.0] {
                let mut k = 1u64;
                while eval(sign * k as f64, &mut sum, &mut abs_sum)? {
                    k += 1;
                }
            }
        } else {
            for sign in [1.0, -1.0] {
                let mut k = 1u64;
                while eval(sign * k as f64 * h, &mut sum, &mut abs_sum)? {
                    k += 2;
                }
            }
        }
        let estimate = h * sum;
        if level >= MIN_LEVELS {
            let error = (estimate - prev).abs();
            let roundoff = 64.0 * f64::EPSILON * h * abs_sum;
            let tol = (opts.rel_tol * estimate.abs()).max(opts.abs_tol).max(roundoff);
            if error <= tol {
                return Ok(QuadResult {
                    value: estimate,
                    error,
                    evaluations,
                });
            }
            if level == opts.max_levels {
                return Err(Error::QuadratureNotConverged {
                    a,
                    b,
                    value: estimate,
                    error,
                });
            }
        }
        prev = estimate;
    }
    unreachable!("loop returns at max_levels")
}

/// Tanh-sinh abscissa and weight (including the Jacobian) for parameter `t`.
fn tanh_sinh_node(a: f64, b: f64, t: f64) -> Option<(Node, f64)> {
    let width = b - a;
    let q = FRAC_PI_2 * t.sinh();
    // e = exp(-2|q|), so tanh|q| = (1-e)/(1+e) and cosh^-2 q = 4e/(1+e)^2.
    let e = (-2.0 * q.abs()).exp();
    let weight = FRAC_PI_2 * t.cosh() * 4.0 * e / ((1.0 + e) * (1.0 + e)) * 0.5 * width;
    let near = width * e / (1.0 + e);
    let far = width / (1.0 + e);
    if weight < TINY_WEIGHT || near <= 0.0 {
        return None;
    }
    let node = if q >= 0.0 {
        Node {
            x: b - near,
            from_lo: far,
            from_hi: near,
        }
    } else {
        Node {
            x: a + near,
            from_lo: near,
            from_hi: far,
        }
    };
    Some((node, weight))
}

/// Exp-sinh abscissa and weight for `(a, inf)`.
fn exp_sinh_node(a: f64, t: f64) -> Option<(Node, f64)> {
    let q = FRAC_PI_2 * t.sinh();
    if q > 700.0 {
        return None;
    }
    let d = q.exp();
    let weight = FRAC_PI_2 * t.cosh() * d;
    if d <= 0.0 || weight < TINY_WEIGHT {
        return None;
    }
    Some((
        Node {
            x: a + d,
            from_lo: d,
            from_hi: f64::INFINITY,
        },
        weight,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_on_half_line() {
        let r = quad(|x| (-x).exp(), 0.0, f64::INFINITY, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-12, "{r:?}");
    }

    #[test]
    fn inverse_sqrt_singularity() {
        let r = quad(|x| x.powf(-0.5), 0.0, 1.0, 1e-12).unwrap();
        assert!((r.value - 2.0).abs() <= 1e-10, "{r:?}");
    }

    #[test]
    fn gp_density_with_finite_endpoint() {
        // h_{-1/2}(x) = (1 - x/2) on (0, 2)
        let r = quad(|x| 1.0 - 0.5 * x, 0.0, 2.0, 1e-12).unwrap();
        assert!((r.value - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn singular_upper_endpoint_through_node_distance() {
        // (1-x)^(-1/2) on (0,1) = 2 needs the distance to b, not b - x.
        let r = integrate(
            |n: Node| n.from_hi.powf(-0.5),
            0.0,
            1.0,
            &QuadOptions::default(),
        )
        .unwrap();
        assert!((r.value - 2.0).abs() <= 1e-10, "{r:?}");
    }

    #[test]
    fn never_touches_endpoints() {
        let r = quad(
            |x| {
                assert!(x > 0.0 && x < 1.0);
                x.ln().abs()
            },
            0.0,
            1.0,
            1e-10,
        )
        .unwrap();
        assert!((r.value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn error_estimate_bounds_true_error() {
        for (f, exact) in [
            (Box::new(|x: f64| x.cos()) as Box<dyn Fn(f64) -> f64>, 1f64.sin()),
            (Box::new(|x: f64| 1.0 / (1.0 + x * x)), std::f64::consts::FRAC_PI_4),
            (Box::new(|x: f64| (1.0 - x * x).sqrt()), std::f64::consts::FRAC_PI_4),
        ] {
            let r = quad(f, 0.0, 1.0, 1e-8).unwrap();
            assert!((r.value - exact).abs() <= r.error.max(1e-15), "{r:?} vs {exact}");
        }
    }

    #[test]
    fn reports_non_convergence() {
        let opts = QuadOptions {
            rel_tol: 1e-14,
            abs_tol: 0.0,
            max_levels: 3,
        };
        let err = integrate(|n: Node| (50.0 * n.x).sin().abs(), 0.0, 10.0, &opts).unwrap_err();
        assert!(matches!(err, Error::QuadratureNotConverged { .. }));
    }

    #[test]
    fn empty_interval_is_zero() {
        let r = quad(|_| 1.0, 1.0, 1.0, 1e-10).unwrap();
        assert_eq!(r.value, 0.0);
    }
}
