//! Distribution families with closed-form tail quantile functions.
//!
//! Every family implements [`TailFamily`] and is registered by name in a
//! [`FamilyRegistry`]; the CLI selects one from a spec string such as
//! `burr:c=2,k=1`, `revburr:c=1,k=1,xstar=0`, `gumbel` or `gp:gamma=0.5`.

mod burr;
mod exact_gp;
mod gumbel;
mod reversed_burr;

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use rand::distributions::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Serialize, Serializer};

pub use burr::Burr;
pub use exact_gp::ExactGp;
pub use gumbel::Gumbel;
pub use reversed_burr::ReversedBurr;

use crate::error::{Error, Result};

/// A distribution family satisfying the second-order tail condition.
///
/// `U(v) = F^{<-}(1 - 1/v)` and its first two derivatives are analytic.
/// Families with a finite right endpoint `x*` also evaluate their tail from
/// the distance `y = x* - x`, which is what the excess model uses near `x*`.
pub trait TailFamily: Send + Sync + fmt::Debug {
    /// Registry key.
    fn kind(&self) -> &'static str;

    /// Canonical spec string, parseable by [`FamilyRegistry::parse`].
    fn spec(&self) -> String;

    fn gamma(&self) -> f64;

    /// Second-order parameter; `None` when `A` vanishes identically.
    fn rho(&self) -> Option<f64>;

    /// Right endpoint `x*` (`+inf` when unbounded).
    fn xstar(&self) -> f64;

    fn cdf(&self, x: f64) -> f64;

    /// `1 - F(x)`.
    fn sf(&self, x: f64) -> f64;

    fn pdf(&self, x: f64) -> f64;

    /// `1 - F(x* - y)`.
    fn sf_below_endpoint(&self, y: f64) -> f64 {
        self.sf(self.xstar() - y)
    }

    /// `f(x* - y)`.
    fn pdf_below_endpoint(&self, y: f64) -> f64 {
        self.pdf(self.xstar() - y)
    }

    /// Tail quantile function `U(v)`, `v > 1`.
    fn u(&self, v: f64) -> f64;

    /// `U'(v)`.
    fn u1(&self, v: f64) -> f64;

    /// `U''(v)`.
    fn u2(&self, v: f64) -> f64;

    /// `x* - U(v)` without cancellation.
    fn endpoint_gap(&self, v: f64) -> f64 {
        self.xstar() - self.u(v)
    }

    /// Rate function `A(v) = v U''(v) / U'(v) + 1 - gamma`.
    fn rate_a(&self, v: f64) -> f64 {
        v * self.u2(v) / self.u1(v) + 1.0 - self.gamma()
    }

    /// `A` vanishes identically, so the family is excluded from rate sweeps.
    fn degenerate_rate(&self) -> bool {
        false
    }
}

/// Shared handle to a registered family.
#[derive(Clone)]
pub struct Family(Arc<dyn TailFamily>);

impl fmt::Debug for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Family({})", self.0.spec())
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0.spec())
    }
}

impl Serialize for Family {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.0.spec())
    }
}

impl std::ops::Deref for Family {
    type Target = dyn TailFamily;
    fn deref(&self) -> &Self::Target {
        &*self.0
    }
}

impl Family {
    pub fn new<T: TailFamily + 'static>(family: T) -> Self {
        Self(Arc::new(family))
    }

    /// Parse with the standard registry.
    pub fn parse(spec: &str) -> Result<Self> {
        FamilyRegistry::standard().parse(spec)
    }

    pub fn exact_gp(gamma: f64) -> Result<Self> {
        Ok(Self::new(ExactGp::new(gamma)?))
    }

    pub fn burr(c: f64, k: f64) -> Result<Self> {
        Ok(Self::new(Burr::new(c, k)?))
    }

    pub fn reversed_burr(c: f64, k: f64, xstar: f64) -> Result<Self> {
        Ok(Self::new(ReversedBurr::new(c, k, xstar)?))
    }

    pub fn gumbel() -> Self {
        Self::new(Gumbel)
    }

    fn check_v(v: f64) -> Result<()> {
        if v > 1.0 && v.is_finite() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("tail level v must be finite and > 1, got {v}")))
        }
    }

    /// `U(v)`, rejecting `v <= 1`.
    pub fn quantile_u(&self, v: f64) -> Result<f64> {
        Self::check_v(v)?;
        Ok(self.0.u(v))
    }

    pub fn quantile_u1(&self, v: f64) -> Result<f64> {
        Self::check_v(v)?;
        Ok(self.0.u1(v))
    }

    pub fn quantile_u2(&self, v: f64) -> Result<f64> {
        Self::check_v(v)?;
        Ok(self.0.u2(v))
    }

    /// `A(v)`; errors when `U'(v) = 0`.
    pub fn rate(&self, v: f64) -> Result<f64> {
        Self::check_v(v)?;
        if self.0.degenerate_rate() {
            return Ok(self.0.rate_a(v));
        }
        if self.0.u1(v) == 0.0 {
            return Err(Error::DegenerateDerivative(v));
        }
        Ok(self.0.rate_a(v))
    }

    /// Canonical scaling `s(t) = (1 - F(t)) / f(t)`.
    pub fn scaling(&self, t: f64) -> Result<f64> {
        let (sf, f) = if self.xstar().is_finite() {
            let y = self.xstar() - t;
            (self.sf_below_endpoint(y), self.pdf_below_endpoint(y))
        } else {
            (self.sf(t), self.pdf(t))
        };
        if !(f > 0.0) || !(sf > 0.0) {
            return Err(Error::ZeroDensity(t));
        }
        Ok(sf / f)
    }

    /// Inverse-CDF sample `X_i = U(1 / (1 - W_i))`, `W_i` uniform on `(0, 1)`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::InvalidArgument("sample size must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ok((0..n)
            .map(|_| {
                let w: f64 = rng.sample(Open01);
                self.0.u(1.0 / (1.0 - w))
            })
            .collect())
    }

    pub fn inner(&self) -> &Arc<dyn TailFamily> {
        &self.0
    }
}

/// Parsed `key=value` parameters of a family spec.
#[derive(Debug, Clone, Default)]
pub struct FamilyParams {
    spec: String,
    values: BTreeMap<String, f64>,
}

impl FamilyParams {
    fn error(&self, reason: impl Into<String>) -> Error {
        Error::FamilySpec {
            spec: self.spec.clone(),
            reason: reason.into(),
        }
    }

    pub fn required(&self, key: &str) -> Result<f64> {
        self.values
            .get(key)
            .copied()
            .ok_or_else(|| self.error(format!("missing parameter `{key}`")))
    }

    pub fn optional(&self, key: &str, default: f64) -> f64 {
        self.values.get(key).copied().unwrap_or(default)
    }
}

type Builder = fn(&FamilyParams) -> Result<Family>;

struct Entry {
    keys: &'static [&'static str],
    usage: &'static str,
    build: Builder,
}

/// Name-keyed catalogue of family constructors.
pub struct FamilyRegistry {
    entries: BTreeMap<&'static str, Entry>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        Self::standard()
    }
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self {
            entries: BTreeMap::new(),
        }
    }

    /// The four catalogue families.
    pub fn standard() -> Self {
        let mut r = Self::empty();
        r.register("gp", &["gamma"], "gp:gamma=<real>", |p| {
            Family::exact_gp(p.required("gamma")?)
        });
        r.register("burr", &["c", "k"], "burr:c=<pos>,k=<pos>", |p| {
            Family::burr(p.required("c")?, p.required("k")?)
        });
        r.register(
            "revburr",
            &["c", "k", "xstar"],
            "revburr:c=<pos>,k=<pos>[,xstar=<real>]",
            |p| Family::reversed_burr(p.required("c")?, p.required("k")?, p.optional("xstar", 0.0)),
        );
        r.register("gumbel", &[], "gumbel", |_| Ok(Family::gumbel()));
        r
    }

    pub fn register(
        &mut self,
        name: &'static str,
        keys: &'static [&'static str],
        usage: &'static str,
        build: Builder,
    ) {
        self.entries.insert(name, Entry { keys, usage, build });
    }

    pub fn names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.entries.keys().copied()
    }

    pub fn usage(&self) -> Vec<&'static str> {
        self.entries.values().map(|e| e.usage).collect()
    }

    /// Parse `name[:key=value,...]`. Unknown names and unknown or repeated keys are errors.
    pub fn parse(&self, spec: &str) -> Result<Family> {
        let spec_trim = spec.trim();
        let (name, rest) = match spec_trim.split_once(':') {
            Some((n, r)) => (n.trim(), Some(r)),
            None => (spec_trim, None),
        };
        let mut params = FamilyParams {
            spec: spec_trim.to_string(),
            values: BTreeMap::new(),
        };
        let entry = self.entries.get(name).ok_or_else(|| {
            params.error(format!(
                "unknown family `{name}` (known: {})",
                self.names().collect::<Vec<_>>().join(", ")
            ))
        })?;
        if let Some(rest) = rest {
            for item in rest.split(',').filter(|s| !s.trim().is_empty()) {
                let (k, v) = item
                    .split_once('=')
                    .ok_or_else(|| params.error(format!("expected key=value, got `{item}`")))?;
                let k = k.trim();
                if !entry.keys.contains(&k) {
                    return Err(params.error(format!(
                        "unknown parameter `{k}` (usage: {})",
                        entry.usage
                    )));
                }
                let value: f64 = v
                    .trim()
                    .parse()
                    .map_err(|_| params.error(format!("`{k}` is not a number: `{}`", v.trim())))?;
                if params.values.insert(k.to_string(), value).is_some() {
                    return Err(params.error(format!("parameter `{k}` given twice")));
                }
            }
        }
        (entry.build)(&params).map_err(|e| match e {
            Error::InvalidArgument(reason) => Error::FamilySpec {
                spec: spec_trim.to_string(),
                reason,
            },
            other => other,
        })
    }
}

fn positive(name: &str, value: f64) -> Result<f64> {
    if value > 0.0 && value.is_finite() {
        Ok(value)
    } else {
        Err(Error::InvalidArgument(format!("`{name}` must be finite and > 0, got {value}")))
    }
}

#[cfg(test)]
mod tests;
