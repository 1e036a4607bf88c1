//! Discrete centrosymmetric envelope with a Gaussian-like core and flared tails.
//!
//! Bounds live on a grid of spacing `delta`; all tilde quantities are in grid
//! units. The left bound is a step CDF taking the value `Phi(q * G_k)` on
//! `[delta * l_k, delta * l_{k+1})`; the right bound is its reflection.

use serde::{Deserialize, Serialize};

use crate::dist::Cdf;
use crate::empirical::DominanceTarget;
use crate::error::{Error, Result};
use crate::numeric::{norm_cdf, norm_quantile, norm_sf};
use crate::paired::PairedBound;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavDenParams {
    pub delta: f64,
    pub x_tilde_max: f64,
    pub x_tilde_min: f64,
    #[serde(rename = "B_tilde")]
    pub b_tilde: f64,
    #[serde(rename = "C_tilde")]
    pub c_tilde: f64,
    pub k_tr: i64,
    pub k_max: i64,
    pub k_min: i64,
    pub k_bias: i64,
}

impl Default for NavDenParams {
    /// The urban-dataset reference values.
    fn default() -> Self {
        NavDenParams {
            delta: 0.2,
            x_tilde_max: 42.0,
            x_tilde_min: -42.0,
            b_tilde: 50.0,
            c_tilde: 130.0,
            k_tr: 8,
            k_max: 32,
            k_min: -33,
            k_bias: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Region {
    K1,
    K2,
    K3,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NavDenRow {
    pub k: i64,
    pub region: Region,
    /// Normalized left bound; `-inf` at `k_min`.
    pub l_tilde: f64,
    pub l_m: f64,
    pub g_tilde: f64,
}

impl NavDenParams {
    pub const FIELDS: &'static str = "delta, x_tilde_max, x_tilde_min, B_tilde, C_tilde, k_tr, k_max, k_min, k_bias";

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(format!("navden: {m}")));
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return bad("delta must be positive");
        }
        if !(self.k_min < -self.k_tr && self.k_tr > 0 && self.k_tr < self.k_max) {
            return bad("indices must satisfy k_min < -k_tr < 0 < k_tr < k_max");
        }
        if !(self.b_tilde > 0.0 && self.c_tilde > 0.0) {
            return bad("B_tilde and C_tilde must be positive");
        }
        if !(self.x_tilde_min.is_finite() && self.x_tilde_max.is_finite()) {
            return bad("asymptotes must be finite");
        }
        let rows = self.table_unchecked();
        if rows.windows(2).any(|w| w[1].l_tilde < w[0].l_tilde) {
            return bad("left bounds are not nondecreasing in k");
        }
        if rows.windows(2).any(|w| w[1].g_tilde < w[0].g_tilde) {
            return bad("quantiles are not nondecreasing in k");
        }
        Ok(())
    }

    pub fn region(&self, k: i64) -> Result<Region> {
        if k < self.k_min || k > self.k_max {
            return Err(Error::InvalidParameter(format!("index {k} outside [{}, {}]", self.k_min, self.k_max)));
        }
        Ok(if k < -self.k_tr {
            Region::K1
        } else if k <= self.k_tr {
            Region::K2
        } else {
            Region::K3
        })
    }

    fn l_tilde_raw(&self, k: i64, region: Region) -> f64 {
        let (kf, tr, bias) = (k as f64, self.k_tr as f64, self.k_bias as f64);
        match region {
            Region::K1 => {
                let kmin = self.k_min as f64;
                // ln(0) at k_min: the lowest envelope extends to -inf.
                (self.c_tilde * (1.0 - (kf + tr) / (kmin + tr)).ln() - tr - bias).floor()
            }
            Region::K2 => kf - bias,
            Region::K3 => (self.x_tilde_max - bias - (self.x_tilde_max - tr) * (2.0 * (tr - kf) / self.b_tilde).exp()).floor(),
        }
    }

    fn g_tilde_raw(&self, k: i64, region: Region) -> f64 {
        let (kf, tr) = (k as f64, self.k_tr as f64);
        match region {
            Region::K1 => {
                let psi1 = (self.x_tilde_min + tr) / (self.k_min as f64 + tr);
                -tr + psi1 * (kf + tr)
            }
            Region::K2 => kf,
            Region::K3 => {
                let psi2 = (self.x_tilde_max - tr) / (self.k_max as f64 - tr);
                tr + psi2 * (kf - tr)
            }
        }
    }

    /// Normalized left bound of envelope `k`.
    pub fn l_tilde(&self, k: i64) -> Result<f64> {
        Ok(self.l_tilde_raw(k, self.region(k)?))
    }

    /// Left bound in meters.
    pub fn left_bound(&self, k: i64) -> Result<f64> {
        Ok(self.delta * self.l_tilde(k)?)
    }

    /// Gaussian-quantile form of the probability at envelope `k`.
    pub fn quantile(&self, k: i64) -> Result<f64> {
        Ok(self.g_tilde_raw(k, self.region(k)?))
    }

    fn table_unchecked(&self) -> Vec<NavDenRow> {
        (self.k_min..=self.k_max)
            .map(|k| {
                let region = self.region(k).expect("k in range");
                let l_tilde = self.l_tilde_raw(k, region);
                NavDenRow { k, region, l_tilde, l_m: self.delta * l_tilde, g_tilde: self.g_tilde_raw(k, region) }
            })
            .collect()
    }

    pub fn table(&self) -> Result<Vec<NavDenRow>> {
        self.validate()?;
        Ok(self.table_unchecked())
    }
}

/// Parameters plus the probability scale.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NavDenBound {
    #[serde(flatten)]
    pub params: NavDenParams,
    pub q_scale: f64,
    #[serde(skip)]
    rows: Vec<(f64, f64)>,
}

impl NavDenBound {
    pub fn new(params: NavDenParams, q_scale: f64) -> Result<Self> {
        if !(q_scale > 0.0 && q_scale.is_finite()) {
            return Err(Error::InvalidParameter(format!("q_scale must be positive, got {q_scale}")));
        }
        let rows = params.table()?.iter().map(|r| (r.l_m, r.g_tilde)).collect();
        Ok(NavDenBound { params, q_scale, rows })
    }

    /// Rebuild the cached table after deserialization.
    pub fn rebuild(self) -> Result<Self> {
        Self::new(self.params, self.q_scale)
    }

    /// Largest `q_scale` for which the pair bounds `target`.
    ///
    /// Each corner constraint reads `Phi(q * G) >= v` for one fixed step `G`,
    /// so the feasible set is an interval in `q` and its top end is exact.
    pub fn fit(params: NavDenParams, target: &DominanceTarget) -> Result<Self> {
        let probe = Self::new(params, 1.0)?;
        let mut q_hi = f64::INFINITY;
        let mut q_lo: f64 = 0.0;
        let mut check = |g: f64, v: f64| -> Result<()> {
            if v <= 0.0 {
                return Ok(());
            }
            if v >= 1.0 {
                return Err(Error::Infeasible("navden envelope cannot reach probability 1".into()));
            }
            let z = norm_quantile(v);
            if g < 0.0 {
                q_hi = q_hi.min(z / g);
            } else if g > 0.0 {
                q_lo = q_lo.max(z / g);
            } else if z > 0.0 {
                return Err(Error::Infeasible(format!("navden zero-quantile step lies below target value {v}")));
            }
            Ok(())
        };
        for i in 0..target.x.len() {
            // Left bound above the upper corner; mirrored, left bound at -x above 1 - lower.
            if target.upper[i] < 1.0 {
                check(probe.step_g(target.x[i]), target.upper[i])?;
            }
            if target.lower[i] > 0.0 {
                check(probe.step_g(-target.x[i]), 1.0 - target.lower[i])?;
            }
        }
        if !q_hi.is_finite() {
            return Err(Error::Infeasible("navden scale is unconstrained by the target".into()));
        }
        if q_lo > q_hi * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!("navden shape cannot bound the target (q in [{q_lo}, {q_hi}])")));
        }
        Self::new(params, q_hi)
    }

    fn step_g(&self, x: f64) -> f64 {
        // l at k_min is -inf, so the search always lands on a row.
        let i = self.rows.partition_point(|r| r.0 <= x);
        self.rows[i.max(1) - 1].1
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }
}

impl PairedBound for NavDenBound {
    fn left_cdf(&self, x: f64) -> f64 {
        norm_cdf(self.q_scale * self.step_g(x))
    }
    fn right_cdf(&self, x: f64) -> f64 {
        norm_sf(self.q_scale * self.step_g(-x))
    }
    fn right_sf(&self, x: f64) -> f64 {
        norm_cdf(self.q_scale * self.step_g(-x))
    }
    fn left_pdf(&self, _x: f64) -> f64 {
        0.0
    }
    fn right_pdf(&self, _x: f64) -> f64 {
        0.0
    }
}

/// The right bound as a distribution for position-domain use.
impl Cdf for NavDenBound {
    fn cdf(&self, x: f64) -> f64 {
        self.right_cdf(x)
    }
    fn sf(&self, x: f64) -> f64 {
        self.right_sf(x)
    }
    fn quantile(&self, p: f64) -> f64 {
        // Atoms sit at -l_k; return the smallest atom whose CDF reaches p.
        let mut atoms: Vec<f64> = self.rows.iter().map(|r| -r.0).filter(|a| a.is_finite()).collect();
        atoms.sort_by(|a, b| a.total_cmp(b));
        atoms.dedup();
        for &a in &atoms {
            // F_R is left-continuous at its atoms; compare the right limit.
            if self.cdf(a + 1e-9 * a.abs().max(1.0)) >= p {
                return a;
            }
        }
        f64::INFINITY
    }
}
