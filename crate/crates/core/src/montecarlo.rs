//! Sampling oracle for the quadrature distances.
//!
//! Excesses are simulated exactly through the tail quantile function. The
//! distance estimators instead sample `Z ~ h_gamma` and average the ratio
//! integrand `(sqrt(l/h) - 1)^2` (resp. `|l/h - 1|`) over the shared support;
//! mass of either density outside it is added exactly. Samples are drawn in
//! fixed shards with their own seeds, so estimates do not depend on the
//! number of worker threads.

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::density::Density;
use crate::distances::SUPPORT_TOL;
use crate::error::{Error, Result};
use crate::excess::ExcessModel;
use crate::output::ser_real;

/// Samples per shard.
pub const SHARD_SIZE: usize = 1 << 16;
/// Seed increment between shards.
pub const SEED_STRIDE: u64 = 0x9E37_79B9;
/// Smallest sample size accepted by the distance estimators.
pub const MIN_ESTIMATOR_N: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McEstimate {
    #[serde(serialize_with = "ser_real")]
    pub value: f64,
    #[serde(serialize_with = "ser_real")]
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

pub fn shard_seed(seed: u64, shard: usize) -> u64 {
    seed.wrapping_add((shard as u64).wrapping_mul(SEED_STRIDE))
}

/// Run `draw` on each shard's generator and concatenate in shard order.
fn sharded<T, F>(n: usize, seed: u64, draw: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, usize) -> Vec<T> + Sync,
{
    let shards = n.div_ceil(SHARD_SIZE);
    let parts: Vec<Vec<T>> = (0..shards)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(seed, i));
            let len = SHARD_SIZE.min(n - i * SHARD_SIZE);
            draw(&mut rng, len)
        })
        .collect();
    parts.into_iter().flatten().collect()
}

/// Exact draws of the rescaled excess: `W` uniform, level `V = v / (1 - W)`.
pub fn sample_excesses(model: &ExcessModel, n: usize, seed: u64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidArgument("sample size must be >= 1".into()));
    }
    let level = model.anchor_level();
    Ok(sharded(n, seed, |rng, len| {
        (0..len)
            .map(|_| {
                let w: f64 = rng.sample(Open01);
                model.excess_of_level(level / (1.0 - w))
            })
            .collect()
    }))
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0 {
            return o;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * o.n as f64 / n as f64,
            m2: self.m2 + o.m2 + d * d * (self.n as f64 * o.n as f64) / n as f64,
        }
    }

    fn std_error(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        (self.m2 / (self.n - 1) as f64).sqrt() / (self.n as f64).sqrt()
    }
}

/// `E_h[g(l/h) 1_S] + lone-mass * weight`, `S` the shared support.
fn ratio_estimate(
    model: &ExcessModel,
    n: usize,
    seed: u64,
    g: impl Fn(f64) -> f64 + Sync,
    mass_weight: f64,
) -> Result<McEstimate> {
    if n < MIN_ESTIMATOR_N {
        return Err(Error::InvalidArgument(format!(
            "Monte Carlo estimators need n >= {MIN_ESTIMATOR_N}, got {n}"
        )));
    }
    let gamma = model.gamma();
    let h = model.limit();
    let h_hi = h.upper();
    let l_hi = model.endpoint;
    let hi = h_hi.min(l_hi);
    let same_end = hi.is_finite()
        && (h_hi - l_hi).abs() <= SUPPORT_TOL * h_hi.abs().max(l_hi.abs()).max(1.0);

    let parts: Vec<Moments> = sharded(n, seed, |rng, len| {
        let mut m = Moments::default();
        for _ in 0..len {
            let w: f64 = rng.sample(Open01);
            let tail = 1.0 - w;
            let (z, hz, lz) = if h_hi.is_finite() {
                // distance to the upper end of h: (1-W)^(-gamma) / (-gamma)
                let d = tail.powf(-gamma) / -gamma;
                let z = h_hi - d;
                let lz = if same_end {
                    model.pdf_below_upper(d + (l_hi - h_hi))
                } else {
                    model.pdf(z)
                };
                (z, h.pdf_below_upper(d), lz)
            } else {
                let z = h.quantile(w).expect("w lies in (0, 1)");
                (z, h.pdf(z), model.pdf(z))
            };
            let inside = z > 0.0 && (z < hi || same_end);
            m.push(if inside && hz > 0.0 { g(lz / hz) } else { 0.0 });
        }
        vec![m]
    });
    let moments = parts.into_iter().fold(Moments::default(), Moments::merge);
    let lone = if same_end || !hi.is_finite() {
        0.0
    } else {
        h.mass(hi, f64::INFINITY) + model.mass(hi, f64::INFINITY)
    };
    Ok(McEstimate {
        value: moments.mean + mass_weight * lone,
        std_error: moments.std_error(),
        n,
        seed,
    })
}

/// Squared Hellinger distance between the excess and `h_gamma`.
pub fn mc_hellinger_sq(model: &ExcessModel, n: usize, seed: u64) -> Result<McEstimate> {
    ratio_estimate(
        model,
        n,
        seed,
        |r| {
            let d = r.sqrt() - 1.0;
            d * d
        },
        1.0,
    )
}

/// Total variation between the excess and `h_gamma`.
pub fn mc_tv(model: &ExcessModel, n: usize, seed: u64) -> Result<McEstimate> {
    ratio_estimate(model, n, seed, |r| 0.5 * (r - 1.0).abs(), 0.5)
}
