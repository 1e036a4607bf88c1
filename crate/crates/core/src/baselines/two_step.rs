//! Two-step Gaussian paired overbound.
//!
//! For each side a shift `b` is chosen and a symmetric unimodal distribution
//! centred at `b` is placed below the sample CDF (step one); the Gaussian
//! N(b, sigma) is then required to sit below that intermediate on `x >= b`
//! (step two). The left side is the same construction on the negated sample.
//! The final pair uses the larger shift and the larger sigma of the two sides.
//!
//! Step one is solved exactly on the sample corners: with `V(d)` the
//! intermediate CDF at `b + d`, the corners below `b` demand
//! `V(d) >= 1 - F_e(b - d)` and the corners above demand `V(d) <= F_e(b + d)`.
//! A concave `V` between the Gaussian and these limits exists iff the least
//! concave majorant of the Gaussian and the lower limits stays under the
//! upper limits.
//!
//! Larger shifts let sigma shrink, so the shift is chosen to minimize the
//! single-measurement protection quantile `b + k sigma(b)`, where `k` is the
//! two-sided Gaussian quantile of `p_ref`.

use serde::{Deserialize, Serialize};

use crate::dist::{Cdf, Gaussian};
use crate::empirical::DominanceTarget;
use crate::error::{Error, Result};
use crate::numeric::{bisect_threshold, norm_cdf, norm_quantile};
use crate::paired::PairedBound;
use crate::su::upper_hull;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoStepBound {
    pub b_f: f64,
    pub sigma_f: f64,
}

impl TwoStepBound {
    fn left(&self) -> Gaussian {
        Gaussian { mu: -self.b_f, sigma: self.sigma_f }
    }
    fn right(&self) -> Gaussian {
        Gaussian { mu: self.b_f, sigma: self.sigma_f }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.b_f >= 0.0 && self.sigma_f > 0.0) {
            return Err(Error::InvalidParameter("two-step bound needs b_f >= 0 and sigma_f > 0".into()));
        }
        Ok(())
    }
}

impl PairedBound for TwoStepBound {
    fn left_cdf(&self, x: f64) -> f64 {
        self.left().cdf(x)
    }
    fn right_cdf(&self, x: f64) -> f64 {
        self.right().cdf(x)
    }
    fn right_sf(&self, x: f64) -> f64 {
        self.right().sf(x)
    }
    fn left_pdf(&self, x: f64) -> f64 {
        self.left().pdf(x)
    }
    fn right_pdf(&self, x: f64) -> f64 {
        self.right().pdf(x)
    }
    fn location_hint(&self) -> f64 {
        self.b_f
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TwoStepConfig {
    /// Integrity risk whose single-measurement quantile `b + k sigma` picks the shift.
    pub p_ref: f64,
    /// Shift candidates per scan level.
    pub grid: usize,
    /// Extra abscissae on which the Gaussian curve enters the concave majorant.
    pub curve_points: usize,
}

impl Default for TwoStepConfig {
    fn default() -> Self {
        TwoStepConfig { p_ref: 1e-9, grid: 24, curve_points: 2000 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoStepReport {
    pub b_left: f64,
    pub sigma_left: f64,
    pub b_right: f64,
    pub sigma_right: f64,
}

/// Relative improvement of `b + k sigma` needed before a larger shift is preferred.
const SHIFT_GAIN: f64 = 1e-3;

/// One side of the construction on target corners sorted by abscissa.
struct Side<'a> {
    t: &'a DominanceTarget,
    curve_points: usize,
}

impl Side<'_> {
    /// Upper limits `(d, F_e((b+d)-))` and lower limits `(d, 1 - F_e((b-d)-))`.
    fn limits(&self, b: f64) -> (Vec<(f64, f64)>, Vec<(f64, f64)>) {
        let t = self.t;
        let split = t.x.partition_point(|&x| x < b);
        let upper: Vec<(f64, f64)> = (split..t.x.len()).map(|j| (t.x[j] - b, t.lower[j])).collect();
        // A corner at probability zero would demand V = 1; it is excluded.
        let lower: Vec<(f64, f64)> =
            (0..split).rev().filter(|&j| t.lower[j] > 0.0).map(|j| (b - t.x[j], 1.0 - t.lower[j])).collect();
        (upper, lower)
    }

    /// Is there an s.u. intermediate for these limits that the Gaussian of
    /// width `sigma` (`None` = flat at 1/2) stays under?
    fn feasible(&self, sigma: Option<f64>, upper: &[(f64, f64)], lower: &[(f64, f64)]) -> bool {
        if upper.iter().any(|&(_, v)| v < 0.5) {
            return false;
        }
        let dmax = upper.last().map_or(0.0, |p| p.0).max(lower.last().map_or(0.0, |p| p.0));
        let curve = |d: f64| sigma.map_or(0.5, |s| norm_cdf(d / s));
        let mut pts: Vec<(f64, f64)> = Vec::with_capacity(upper.len() + lower.len() + self.curve_points + 1);
        pts.push((0.0, 0.5));
        pts.extend(upper.iter().map(|&(d, _)| (d, curve(d))));
        pts.extend(lower.iter().copied());
        if sigma.is_some() {
            for i in 1..=self.curve_points {
                let d = dmax * i as f64 / self.curve_points as f64;
                pts.push((d, curve(d)));
            }
        }
        pts.sort_by(|a, c| a.0.total_cmp(&c.0).then(a.1.total_cmp(&c.1)));
        let (hx, hy) = upper_hull(&pts);
        // Evaluate the majorant at each upper-limit abscissa.
        let mut k = 0;
        for &(d, u) in upper {
            while k + 1 < hx.len() && hx[k + 1] < d {
                k += 1;
            }
            let m = if k + 1 < hx.len() && hx[k + 1] > hx[k] {
                let t = ((d - hx[k]) / (hx[k + 1] - hx[k])).clamp(0.0, 1.0);
                hy[k] + t * (hy[k + 1] - hy[k])
            } else {
                hy[k]
            };
            if m > u + 1e-14 {
                return false;
            }
        }
        true
    }

    fn sigma_at(&self, b: f64) -> Option<f64> {
        let (upper, lower) = self.limits(b);
        if !self.feasible(None, &upper, &lower) {
            return None;
        }
        let ok = |s: f64| self.feasible(Some(s), &upper, &lower);
        let x = &self.t.x;
        let spread = (x[x.len() - 1] - x[0]).max(1e-12);
        let mut hi = spread;
        let mut tries = 0;
        while !ok(hi) {
            hi *= 2.0;
            tries += 1;
            if tries > 60 {
                return None;
            }
        }
        let mut lo = hi * 0.5;
        while ok(lo) {
            lo *= 0.5;
            if lo < 1e-12 * spread {
                return Some(lo);
            }
        }
        Some(bisect_threshold(lo, hi, 1e-7 * hi, ok))
    }

    fn fit(&self, cfg: &TwoStepConfig) -> Result<(f64, f64)> {
        let k = norm_quantile(1.0 - 0.5 * cfg.p_ref);
        let x = &self.t.x;
        let (xmin, xmax) = (x[0], x[x.len() - 1]);
        // Admissibility of the flat intermediate is monotone in b.
        let admissible = |b: f64| {
            let (u, l) = self.limits(b);
            self.feasible(None, &u, &l)
        };
        if !admissible(xmax) {
            return Err(Error::Infeasible("no admissible two-step shift".into()));
        }
        let lo0 = xmin.min(0.0);
        let b_min = if admissible(lo0) {
            lo0
        } else {
            bisect_threshold(lo0, xmax, 1e-9 * (xmax - xmin).max(1.0), admissible)
        };
        let b_min = b_min.max(0.0);
        let mut seen: Vec<(f64, f64, f64)> = Vec::new();
        let g = cfg.grid.max(2);
        let mut lo = b_min;
        let mut hi = b_min + (xmax - xmin) / 8.0;
        for _level in 0..3 {
            for i in 0..=g {
                let b = lo + (hi - lo) * i as f64 / g as f64;
                if let Some(s) = self.sigma_at(b) {
                    seen.push((b + k * s, b, s));
                }
            }
            let best = seen.iter().min_by(|a, c| a.0.total_cmp(&c.0));
            let (_, bb, _) = best.ok_or_else(|| Error::Infeasible("two-step scan found no feasible shift".into()))?;
            let w = (hi - lo) / g as f64;
            lo = (bb - w).max(b_min);
            hi = bb + w;
        }
        // A shift that buys less than SHIFT_GAIN of the quantile is not worth taking.
        let best = seen.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
        let (_, b, s) = seen
            .iter()
            .filter(|p| p.0 <= best * (1.0 + SHIFT_GAIN))
            .min_by(|a, c| a.1.total_cmp(&c.1))
            .copied()
            .expect("scan found a point");
        Ok((b, s))
    }
}

/// Smallest Gaussian width at each candidate shift on the right side of the
/// target; `None` where no s.u. intermediate exists.
pub fn sigma_profile(target: &DominanceTarget, shifts: &[f64], cfg: &TwoStepConfig) -> Vec<Option<f64>> {
    let side = Side { t: target, curve_points: cfg.curve_points };
    shifts.iter().map(|&b| side.sigma_at(b)).collect()
}

/// Fit the two-step Gaussian paired bound to a dominance target.
pub fn fit_two_step(target: &DominanceTarget, cfg: &TwoStepConfig) -> Result<(TwoStepBound, TwoStepReport)> {
    if !(cfg.p_ref > 0.0 && cfg.p_ref < 1.0) {
        return Err(Error::InvalidParameter(format!("p_ref must be in (0, 1), got {}", cfg.p_ref)));
    }
    if target.len() < 10 {
        return Err(Error::Input(format!("two-step fit needs at least 10 target points, got {}", target.len())));
    }
    let (b_right, sigma_right) = Side { t: target, curve_points: cfg.curve_points }.fit(cfg)?;
    let mirrored = target.mirrored();
    let (b_left, sigma_left) = Side { t: &mirrored, curve_points: cfg.curve_points }.fit(cfg)?;
    let bound = TwoStepBound { b_f: b_left.abs().max(b_right.abs()), sigma_f: sigma_left.max(sigma_right) };
    Ok((bound, TwoStepReport { b_left, sigma_left, b_right, sigma_right }))
}
