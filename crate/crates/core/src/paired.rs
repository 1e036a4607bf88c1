//! Left/right CDF bound pairs and the single-curve view used for plotting.

use crate::dist::Cdf;
use crate::numeric::invert_cdf;

/// A pair of CDFs bracketing the error distribution: `left_cdf >= F_e >= right_cdf`.
pub trait PairedBound: Sync {
    fn left_cdf(&self, x: f64) -> f64;
    fn right_cdf(&self, x: f64) -> f64;
    fn right_sf(&self, x: f64) -> f64 {
        1.0 - self.right_cdf(x)
    }
    fn left_pdf(&self, x: f64) -> f64;
    fn right_pdf(&self, x: f64) -> f64;
    /// A point near the body of the right bound, used to seed quantile searches.
    fn location_hint(&self) -> f64 {
        0.0
    }
}

/// Combine the pair into one CDF: the left bound below 1/2, the right bound
/// above 1/2, and 1/2 in between.
pub fn analog_single_cdf<B: PairedBound + ?Sized>(b: &B, x: f64) -> f64 {
    let l = b.left_cdf(x);
    if l < 0.5 {
        return l;
    }
    let r = b.right_cdf(x);
    if r > 0.5 {
        return r;
    }
    0.5
}

/// Density of [`analog_single_cdf`]; zero on the flat stretch.
pub fn analog_single_pdf<B: PairedBound + ?Sized>(b: &B, x: f64) -> f64 {
    if b.left_cdf(x) < 0.5 {
        return b.left_pdf(x);
    }
    if b.right_cdf(x) > 0.5 {
        return b.right_pdf(x);
    }
    0.0
}

/// The right member of a pair viewed as a distribution in its own right.
pub struct RightBound<'a, B: ?Sized>(pub &'a B);

impl<B: PairedBound + ?Sized> Cdf for RightBound<'_, B> {
    fn cdf(&self, x: f64) -> f64 {
        self.0.right_cdf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        self.0.right_sf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        let h = self.0.location_hint();
        invert_cdf(|x| self.0.right_cdf(x), |x| self.0.right_sf(x), p, h - 1.0, h + 1.0)
    }
}

/// The analog single CDF as a distribution.
pub struct AnalogCdf<'a, B: ?Sized>(pub &'a B);

impl<B: PairedBound + ?Sized> Cdf for AnalogCdf<'_, B> {
    fn cdf(&self, x: f64) -> f64 {
        analog_single_cdf(self.0, x)
    }
    fn sf(&self, x: f64) -> f64 {
        if self.0.right_cdf(x) > 0.5 {
            self.0.right_sf(x)
        } else {
            1.0 - analog_single_cdf(self.0, x)
        }
    }
}
