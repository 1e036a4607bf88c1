//! Serializable bound records shared by the library front ends.

use serde::{Deserialize, Serialize};

use crate::baselines::{NavDenBound, TwoStepBound};
use crate::dist::{Cdf, Gaussian};
use crate::error::Result;
use crate::nsu::{NsuOverbound, NsuPair};
use crate::paired::{analog_single_cdf, analog_single_pdf, PairedBound, RightBound};
use crate::posdom;
use crate::su::SuOverbound;

/// A fitted bound of any supported method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "method", rename_all = "snake_case")]
pub enum BoundRecord {
    CauchyGaussianSu(SuOverbound),
    CauchyGaussianNsu(NsuOverbound),
    SingleGaussian { sigma_o: f64 },
    TwoStep(TwoStepBound),
    Navden(NavDenBound),
}

impl BoundRecord {
    pub fn name(&self) -> &'static str {
        match self {
            BoundRecord::CauchyGaussianSu(_) => "cauchy_gaussian_su",
            BoundRecord::CauchyGaussianNsu(_) => "cauchy_gaussian_nsu",
            BoundRecord::SingleGaussian { .. } => "single_gaussian",
            BoundRecord::TwoStep(_) => "two_step",
            BoundRecord::Navden(_) => "navden",
        }
    }

    /// Check parameters and build the evaluation form.
    pub fn prepare(&self) -> Result<Prepared> {
        Ok(match self {
            BoundRecord::CauchyGaussianSu(b) => {
                b.validate()?;
                Prepared::Su(*b)
            }
            BoundRecord::CauchyGaussianNsu(b) => Prepared::Nsu(b.pair()?),
            BoundRecord::SingleGaussian { sigma_o } => Prepared::Gaussian(Gaussian::new(0.0, *sigma_o)?),
            BoundRecord::TwoStep(b) => {
                b.validate()?;
                Prepared::TwoStep(*b)
            }
            BoundRecord::Navden(b) => Prepared::Navden(b.clone().rebuild()?),
        })
    }
}

/// Evaluation-ready bound. Single-CDF bounds act as their own pair.
#[derive(Debug, Clone)]
pub enum Prepared {
    Su(SuOverbound),
    Gaussian(Gaussian),
    Nsu(NsuPair),
    TwoStep(TwoStepBound),
    Navden(NavDenBound),
}

impl Prepared {
    pub fn is_paired(&self) -> bool {
        !matches!(self, Prepared::Su(_) | Prepared::Gaussian(_))
    }

    pub fn analog_cdf(&self, x: f64) -> f64 {
        analog_single_cdf(self, x)
    }

    pub fn analog_pdf(&self, x: f64) -> f64 {
        analog_single_pdf(self, x)
    }

    /// Vertical protection level with this bound on every satellite.
    pub fn vpl(&self, s_row: &[f64], dt: f64, p_hmi: f64) -> Result<f64> {
        posdom::vpl_shared(self, s_row, dt, p_hmi)
    }
}

impl PairedBound for Prepared {
    fn left_cdf(&self, x: f64) -> f64 {
        match self {
            Prepared::Su(b) => b.cdf(x),
            Prepared::Gaussian(g) => g.cdf(x),
            Prepared::Nsu(p) => p.left_cdf(x),
            Prepared::TwoStep(b) => b.left_cdf(x),
            Prepared::Navden(b) => b.left_cdf(x),
        }
    }
    fn right_cdf(&self, x: f64) -> f64 {
        match self {
            Prepared::Su(b) => b.cdf(x),
            Prepared::Gaussian(g) => g.cdf(x),
            Prepared::Nsu(p) => p.right_cdf(x),
            Prepared::TwoStep(b) => b.right_cdf(x),
            Prepared::Navden(b) => b.right_cdf(x),
        }
    }
    fn right_sf(&self, x: f64) -> f64 {
        match self {
            Prepared::Su(b) => b.sf(x),
            Prepared::Gaussian(g) => g.sf(x),
            Prepared::Nsu(p) => p.right_sf(x),
            Prepared::TwoStep(b) => b.right_sf(x),
            Prepared::Navden(b) => b.right_sf(x),
        }
    }
    fn left_pdf(&self, x: f64) -> f64 {
        match self {
            Prepared::Su(b) => b.pdf(x),
            Prepared::Gaussian(g) => g.pdf(x),
            Prepared::Nsu(p) => p.left_pdf(x),
            Prepared::TwoStep(b) => b.left_pdf(x),
            Prepared::Navden(b) => b.left_pdf(x),
        }
    }
    fn right_pdf(&self, x: f64) -> f64 {
        match self {
            Prepared::Su(b) => b.pdf(x),
            Prepared::Gaussian(g) => g.pdf(x),
            Prepared::Nsu(p) => p.right_pdf(x),
            Prepared::TwoStep(b) => b.right_pdf(x),
            Prepared::Navden(b) => b.right_pdf(x),
        }
    }
    fn location_hint(&self) -> f64 {
        match self {
            Prepared::Nsu(p) => p.location_hint(),
            Prepared::TwoStep(b) => b.location_hint(),
            _ => 0.0,
        }
    }
}

/// The right bound, which carries the position-domain computation.
impl Cdf for Prepared {
    fn cdf(&self, x: f64) -> f64 {
        self.right_cdf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        self.right_sf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        match self {
            Prepared::Su(b) => b.quantile(p),
            Prepared::Gaussian(g) => g.quantile(p),
            Prepared::TwoStep(b) => Gaussian { mu: b.b_f, sigma: b.sigma_f }.quantile(p),
            Prepared::Navden(b) => b.quantile(p),
            Prepared::Nsu(_) => RightBound(self).quantile(p),
        }
    }
}
