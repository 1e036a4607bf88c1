//! Univariate distributions used as error models and as overbound building blocks.

use rand::Rng;
use rand_distr::{Distribution as _, StandardNormal};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{invalid, Result};
use crate::numeric::{invert_cdf, norm_cdf, norm_pdf, norm_quantile, norm_sf, CGCM_K, SQRT_2PI};

/// Anything with a cumulative distribution function.
pub trait Cdf {
    fn cdf(&self, x: f64) -> f64;
    /// Upper-tail probability; override where `1 - cdf` would lose precision.
    fn sf(&self, x: f64) -> f64 {
        1.0 - self.cdf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        invert_cdf(|x| self.cdf(x), |x| self.sf(x), p, -1.0, 1.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Gaussian {
    pub mu: f64,
    pub sigma: f64,
}

impl Gaussian {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite() && mu.is_finite()) {
            return Err(invalid(format!("gaussian needs finite mu and sigma > 0, got ({mu}, {sigma})")));
        }
        Ok(Gaussian { mu, sigma })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        norm_pdf((x - self.mu) / self.sigma) / self.sigma
    }

    pub fn inv_pdf_right(&self, k: f64) -> Option<f64> {
        // Positive offset from mu at which the pdf equals k.
        let arg = k * self.sigma * SQRT_2PI;
        if !(arg > 0.0 && arg <= 1.0) {
            return None;
        }
        Some(self.sigma * (-2.0 * arg.ln()).max(0.0).sqrt())
    }
}

impl Cdf for Gaussian {
    fn cdf(&self, x: f64) -> f64 {
        norm_cdf((x - self.mu) / self.sigma)
    }
    fn sf(&self, x: f64) -> f64 {
        norm_sf((x - self.mu) / self.sigma)
    }
    fn quantile(&self, p: f64) -> f64 {
        self.mu + self.sigma * norm_quantile(p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cauchy {
    pub m: f64,
    pub lambda: f64,
}

impl Cauchy {
    pub fn new(m: f64, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && m.is_finite()) {
            return Err(invalid(format!("cauchy needs finite m and lambda > 0, got ({m}, {lambda})")));
        }
        Ok(Cauchy { m, lambda })
    }

    pub fn pdf(&self, x: f64) -> f64 {
        let u = (x - self.m) / self.lambda;
        1.0 / (PI * self.lambda * (1.0 + u * u))
    }

    /// Positive offset from m at which the pdf equals k.
    pub fn inv_pdf_right(&self, k: f64) -> Option<f64> {
        let r = 1.0 / (PI * self.lambda * k) - 1.0;
        if !(k > 0.0 && r >= 0.0) {
            return None;
        }
        Some(self.lambda * r.sqrt())
    }
}

/// Lower tail of the standard Cauchy, accurate for large |u|.
fn cauchy_lower(u: f64) -> f64 {
    if u < -1.0 {
        (-1.0 / u).atan() / PI
    } else {
        0.5 + u.atan() / PI
    }
}

impl Cdf for Cauchy {
    fn cdf(&self, x: f64) -> f64 {
        cauchy_lower((x - self.m) / self.lambda)
    }
    fn sf(&self, x: f64) -> f64 {
        cauchy_lower(-(x - self.m) / self.lambda)
    }
    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        // tan(pi (p - 1/2)) = -1 / tan(pi p); the second form keeps tail accuracy.
        let t = if p < 0.25 {
            -1.0 / (PI * p).tan()
        } else if p > 0.75 {
            1.0 / (PI * (1.0 - p)).tan()
        } else {
            (PI * (p - 0.5)).tan()
        };
        self.m + self.lambda * t
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Half of a Cauchy-Gaussian core mixture.
///
/// The right half is centred at `+m` with a Gaussian body (scale `k lambda`)
/// below the centre and a Cauchy tail above it; the left half is its mirror
/// image centred at `-m`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgcmHalf {
    pub m: f64,
    pub lambda: f64,
    pub side: Side,
}

impl CgcmHalf {
    pub fn new(m: f64, lambda: f64, side: Side) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite() && m.is_finite()) {
            return Err(invalid(format!("cgcm half needs finite m and lambda > 0, got ({m}, {lambda})")));
        }
        Ok(CgcmHalf { m, lambda, side })
    }

    pub fn center(&self) -> f64 {
        match self.side {
            Side::Right => self.m,
            Side::Left => -self.m,
        }
    }

    fn gaussian(&self) -> Gaussian {
        Gaussian { mu: self.center(), sigma: CGCM_K * self.lambda }
    }

    fn cauchy(&self) -> Cauchy {
        Cauchy { m: self.center(), lambda: self.lambda }
    }

    /// True when `x` falls on the Gaussian piece.
    fn on_gaussian(&self, x: f64) -> bool {
        match self.side {
            Side::Right => x <= self.center(),
            Side::Left => x > self.center(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        if self.on_gaussian(x) {
            self.gaussian().pdf(x)
        } else {
            self.cauchy().pdf(x)
        }
    }
}

impl Cdf for CgcmHalf {
    fn cdf(&self, x: f64) -> f64 {
        if self.on_gaussian(x) {
            self.gaussian().cdf(x)
        } else {
            self.cauchy().cdf(x)
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if self.on_gaussian(x) {
            self.gaussian().sf(x)
        } else {
            self.cauchy().sf(x)
        }
    }
    fn quantile(&self, p: f64) -> f64 {
        let gaussian_side = match self.side {
            Side::Right => p <= 0.5,
            Side::Left => p > 0.5,
        };
        if gaussian_side {
            self.gaussian().quantile(p)
        } else {
            self.cauchy().quantile(p)
        }
    }
}

/// Finite mixture. Weights must be positive and sum to one within 1e-12.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub components: Vec<Distribution>,
}

impl Mixture {
    pub fn new(weights: Vec<f64>, components: Vec<Distribution>) -> Result<Self> {
        let m = Mixture { weights, components };
        m.validate()?;
        Ok(m)
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() || self.weights.len() != self.components.len() {
            return Err(invalid("mixture needs one positive weight per component"));
        }
        if self.weights.iter().any(|w| !(*w > 0.0)) {
            return Err(invalid("mixture weights must be positive"));
        }
        let s: f64 = self.weights.iter().sum();
        if (s - 1.0).abs() > 1e-12 {
            return Err(invalid(format!("mixture weights sum to {s}, not 1")));
        }
        for c in &self.components {
            c.validate()?;
        }
        Ok(())
    }

    /// Two-component Gaussian mixture `p1 N(mu1, s1) + (1 - p1) N(mu2, s2)`.
    pub fn bimodal(p1: f64, mu1: f64, s1: f64, mu2: f64, s2: f64) -> Result<Self> {
        Mixture::new(
            vec![p1, 1.0 - p1],
            vec![
                Distribution::Gaussian(Gaussian::new(mu1, s1)?),
                Distribution::Gaussian(Gaussian::new(mu2, s2)?),
            ],
        )
    }
}

/// Tagged union over the supported distribution families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Distribution {
    Gaussian(Gaussian),
    Cauchy(Cauchy),
    Mixture(Mixture),
    CgcmHalf(CgcmHalf),
}

impl Distribution {
    pub fn validate(&self) -> Result<()> {
        match self {
            Distribution::Gaussian(g) => Gaussian::new(g.mu, g.sigma).map(|_| ()),
            Distribution::Cauchy(c) => Cauchy::new(c.m, c.lambda).map(|_| ()),
            Distribution::CgcmHalf(h) => CgcmHalf::new(h.m, h.lambda, h.side).map(|_| ()),
            Distribution::Mixture(m) => m.validate(),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Gaussian(g) => g.pdf(x),
            Distribution::Cauchy(c) => c.pdf(x),
            Distribution::CgcmHalf(h) => h.pdf(x),
            Distribution::Mixture(m) => m.weights.iter().zip(&m.components).map(|(w, c)| w * c.pdf(x)).sum(),
        }
    }

    pub fn mean(&self) -> Option<f64> {
        match self {
            Distribution::Gaussian(g) => Some(g.mu),
            Distribution::Mixture(m) => {
                let mut s = 0.0;
                for (w, c) in m.weights.iter().zip(&m.components) {
                    s += w * c.mean()?;
                }
                Some(s)
            }
            _ => None,
        }
    }

    /// Second central moment, `None` for heavy-tailed families.
    pub fn variance(&self) -> Option<f64> {
        let mean = self.mean()?;
        Some(self.raw_moment(2, mean)?)
    }

    /// Pearson kurtosis (fourth standardized moment).
    pub fn kurtosis(&self) -> Option<f64> {
        let mean = self.mean()?;
        let v = self.raw_moment(2, mean)?;
        Some(self.raw_moment(4, mean)? / (v * v))
    }

    /// Central moment of order 2 or 4 about `c`.
    fn raw_moment(&self, order: u32, c: f64) -> Option<f64> {
        match self {
            Distribution::Gaussian(g) => {
                let d = g.mu - c;
                let s2 = g.sigma * g.sigma;
                Some(match order {
                    2 => d * d + s2,
                    4 => d.powi(4) + 6.0 * d * d * s2 + 3.0 * s2 * s2,
                    _ => return None,
                })
            }
            Distribution::Mixture(m) => {
                let mut s = 0.0;
                for (w, comp) in m.weights.iter().zip(&m.components) {
                    s += w * comp.raw_moment(order, c)?;
                }
                Some(s)
            }
            _ => None,
        }
    }

    /// A bracket that contains the bulk of the probability mass.
    fn scale_hint(&self) -> (f64, f64) {
        match self {
            Distribution::Gaussian(g) => (g.mu - g.sigma, g.mu + g.sigma),
            Distribution::Cauchy(c) => (c.m - c.lambda, c.m + c.lambda),
            Distribution::CgcmHalf(h) => (h.center() - h.lambda, h.center() + h.lambda),
            Distribution::Mixture(m) => m.components.iter().map(|c| c.scale_hint()).fold(
                (f64::INFINITY, f64::NEG_INFINITY),
                |(a, b), (lo, hi)| (a.min(lo), b.max(hi)),
            ),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Distribution::Gaussian(g) => {
                let z: f64 = StandardNormal.sample(rng);
                g.mu + g.sigma * z
            }
            Distribution::Mixture(m) => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let last = m.components.len() - 1;
                for (i, (w, c)) in m.weights.iter().zip(&m.components).enumerate() {
                    acc += w;
                    if u < acc || i == last {
                        return c.sample(rng);
                    }
                }
                unreachable!()
            }
            _ => {
                // Inverse transform on (0, 1).
                let u: f64 = rng.random();
                let u = u.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
                self.quantile(u)
            }
        }
    }

    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Vec<f64> {
        (0..n).map(|_| self.sample(rng)).collect()
    }
}

impl Cdf for Distribution {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Distribution::Gaussian(g) => g.cdf(x),
            Distribution::Cauchy(c) => c.cdf(x),
            Distribution::CgcmHalf(h) => h.cdf(x),
            Distribution::Mixture(m) => m.weights.iter().zip(&m.components).map(|(w, c)| w * c.cdf(x)).sum(),
        }
    }
    fn sf(&self, x: f64) -> f64 {
        match self {
            Distribution::Gaussian(g) => g.sf(x),
            Distribution::Cauchy(c) => c.sf(x),
            Distribution::CgcmHalf(h) => h.sf(x),
            Distribution::Mixture(m) => m.weights.iter().zip(&m.components).map(|(w, c)| w * c.sf(x)).sum(),
        }
    }
    fn quantile(&self, p: f64) -> f64 {
        match self {
            Distribution::Gaussian(g) => g.quantile(p),
            Distribution::Cauchy(c) => c.quantile(p),
            Distribution::CgcmHalf(h) => h.quantile(p),
            Distribution::Mixture(m) => {
                if p <= 0.0 {
                    return f64::NEG_INFINITY;
                }
                if p >= 1.0 {
                    return f64::INFINITY;
                }
                // The mixture quantile lies between the component quantiles.
                let qs: Vec<f64> = m.components.iter().map(|c| c.quantile(p)).collect();
                let lo = qs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = qs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let (lo, hi) = if lo < hi { (lo, hi) } else { let (a, b) = self.scale_hint(); (lo.min(a), hi.max(b)) };
                if lo == hi {
                    return lo;
                }
                invert_cdf(|x| self.cdf(x), |x| self.sf(x), p, lo, hi)
            }
        }
    }
}

impl<T: Cdf + ?Sized> Cdf for &T {
    fn cdf(&self, x: f64) -> f64 {
        (**self).cdf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        (**self).sf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        (**self).quantile(p)
    }
}
