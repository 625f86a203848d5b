//! Univariate densities with known support, as consumed by the divergence code.

use crate::error::{Error, Result};

/// A probability density on an interval support.
pub trait Density: Send + Sync {
    /// `(lo, hi)`; `hi` may be `+inf`, `lo` is finite.
    fn support(&self) -> (f64, f64);

    fn pdf(&self, x: f64) -> f64;

    /// Density at `hi - d` for a finite upper end, evaluated from the distance `d`
    /// so that power-law behaviour at the endpoint is resolved.
    fn pdf_below_upper(&self, d: f64) -> f64 {
        let (_, hi) = self.support();
        self.pdf(hi - d)
    }

    /// Probability mass of `(a, b)`.
    fn mass(&self, a: f64, b: f64) -> f64;
}

impl<D: Density + ?Sized> Density for &D {
    fn support(&self) -> (f64, f64) {
        (**self).support()
    }
    fn pdf(&self, x: f64) -> f64 {
        (**self).pdf(x)
    }
    fn pdf_below_upper(&self, d: f64) -> f64 {
        (**self).pdf_below_upper(d)
    }
    fn mass(&self, a: f64, b: f64) -> f64 {
        (**self).mass(a, b)
    }
}

/// `inner` conditioned on the window `(lo, hi)` and renormalised.
#[derive(Debug, Clone)]
pub struct Conditioned<D> {
    inner: D,
    lo: f64,
    hi: f64,
    norm: f64,
}

impl<D: Density> Conditioned<D> {
    pub fn new(inner: D, lo: f64, hi: f64) -> Result<Self> {
        let (ilo, ihi) = inner.support();
        let lo = lo.max(ilo);
        let hi = hi.min(ihi);
        let norm = inner.mass(lo, hi);
        if !(hi > lo) || !(norm > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "conditioning window ({lo}, {hi}) carries no mass"
            )));
        }
        Ok(Self {
            inner,
            lo,
            hi,
            norm,
        })
    }

    /// Mass of the window under the unconditioned density.
    pub fn window_mass(&self) -> f64 {
        self.norm
    }

    pub fn inner(&self) -> &D {
        &self.inner
    }
}

impl<D: Density> Density for Conditioned<D> {
    fn support(&self) -> (f64, f64) {
        (self.lo, self.hi)
    }

    fn pdf(&self, x: f64) -> f64 {
        if x < self.lo || x > self.hi {
            0.0
        } else {
            self.inner.pdf(x) / self.norm
        }
    }

    fn pdf_below_upper(&self, d: f64) -> f64 {
        let (_, ihi) = self.inner.support();
        if ihi == self.hi {
            self.inner.pdf_below_upper(d) / self.norm
        } else {
            self.pdf(self.hi - d)
        }
    }

    fn mass(&self, a: f64, b: f64) -> f64 {
        self.inner.mass(a.max(self.lo), b.min(self.hi)) / self.norm
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit::GpModel;
    use approx::assert_relative_eq;

    #[test]
    fn conditioned_gp_is_threshold_stable() {
        // GP(gamma) shifted left by m and conditioned on x > 0 is GP with scale 1 + gamma m.
        let g = -0.25;
        let m = 0.3;
        let shifted = GpModel::new(g, -m, 1.0).unwrap();
        let cond = Conditioned::new(shifted, 0.0, f64::INFINITY).unwrap();
        let expect = GpModel::new(g, 0.0, 1.0 + g * m).unwrap();
        for x in [0.01, 0.5, 1.0, 2.0, 3.5] {
            assert_relative_eq!(cond.pdf(x), expect.pdf(x), max_relative = 1e-13);
        }
        assert_relative_eq!(cond.mass(0.0, f64::INFINITY), 1.0, epsilon = 1e-15);
        assert_relative_eq!(cond.support().1, expect.upper(), max_relative = 1e-15);
        assert_relative_eq!(cond.pdf_below_upper(1e-3), expect.pdf_below_upper(1e-3), max_relative = 1e-12);
    }

    #[test]
    fn empty_window_rejected() {
        let gp = GpModel::standard(-1.0);
        assert!(Conditioned::new(gp, 2.0, 3.0).is_err());
    }
}
