//! Single-CDF (symmetric unimodal) Cauchy-Gaussian overbound.
//!
//! The fit runs in three stages: the smallest zero-mean Gaussian that
//! overbounds the target, the smallest zero-median Cauchy (capped at the
//! scale where its peak density equals the Gaussian's), and a tangent line
//! that joins the Cauchy core to the Gaussian tail.

use serde::{Deserialize, Serialize};

use crate::dist::{Cauchy, Cdf, Gaussian};
use crate::empirical::{DominanceTarget, Ecdf, TargetKind};
use crate::error::{Error, Result};
use crate::numeric::{bisect_threshold, brent, SQRT_2PI};

/// Feasibility slack absorbing last-bit rounding of the CDF evaluations.
pub const FEAS_TOL: f64 = 1e-14;

/// sqrt(2 / pi): Cauchy scale at which the Cauchy and Gaussian peaks coincide.
pub const LAMBDA_CAP_RATIO: f64 = 0.797_884_560_802_865_4;

/// Zero-centred symmetric unimodal candidate, evaluated on `r >= 0`.
pub trait SymmetricCandidate {
    /// P(X <= -r).
    fn tail(&self, r: f64) -> f64;
    fn density(&self, r: f64) -> f64;
    /// Smallest `r >= 0` where the density drops to `k` (0 when `k >= density(0)`).
    fn inv_density(&self, k: f64) -> f64;

    fn cdf_at(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.tail(-x)
        } else {
            1.0 - self.tail(x)
        }
    }
}

impl SymmetricCandidate for Gaussian {
    fn tail(&self, r: f64) -> f64 {
        self.cdf(-r)
    }
    fn density(&self, r: f64) -> f64 {
        self.pdf(r)
    }
    fn inv_density(&self, k: f64) -> f64 {
        if k <= 0.0 {
            return f64::INFINITY;
        }
        self.inv_pdf_right(k).unwrap_or(0.0)
    }
}

impl SymmetricCandidate for Cauchy {
    fn tail(&self, r: f64) -> f64 {
        self.cdf(-r)
    }
    fn density(&self, r: f64) -> f64 {
        self.pdf(r)
    }
    fn inv_density(&self, k: f64) -> f64 {
        if k <= 0.0 {
            return f64::INFINITY;
        }
        self.inv_pdf_right(k).unwrap_or(0.0)
    }
}

/// What a symmetric overbound has to dominate.
#[derive(Debug, Clone)]
pub enum SuTarget {
    /// Continuous target sampled on a probability grid.
    Analytic { x: Vec<f64>, v: Vec<f64> },
    /// Concave envelope of the folded sample distribution.
    ///
    /// `r` holds the hull vertices (first one at 0) and `folded` the envelope
    /// value P(|X| < r) there; the overbound must keep
    /// `tail(r) >= (1 - folded(r)) / 2` along the whole envelope.
    Envelope { r: Vec<f64>, folded: Vec<f64>, shift: f64, n: usize },
}

impl SuTarget {
    /// Grid target for a zero-median continuous distribution.
    pub fn from_distribution<D: Cdf>(dist: &D, n: usize, tail_prob: f64) -> Result<Self> {
        let med = dist.quantile(0.5);
        let spread = dist.quantile(0.75) - dist.quantile(0.25);
        if med.abs() > 1e-9 * spread.max(1e-300) {
            return Err(Error::Input(format!(
                "target median {med} is not zero; use the paired (non-symmetric) fit"
            )));
        }
        let t = DominanceTarget::analytic(dist, n, tail_prob)?;
        Ok(SuTarget::Analytic { x: t.x, v: t.upper })
    }

    /// Envelope target from samples whose mean is within `bias_tol` of zero.
    ///
    /// `bias_tol = None` uses three standard errors of the mean. The accepted
    /// bias is removed before folding and reported as `shift`.
    pub fn from_samples(samples: &[f64], bias_tol: Option<f64>) -> Result<Self> {
        let e = Ecdf::new(samples)?;
        let n = e.len();
        if n < 2 {
            return Err(Error::Input("need at least two samples".into()));
        }
        let mean = e.mean();
        let tol = bias_tol.unwrap_or(3.0 * e.std() / (n as f64).sqrt());
        if mean.abs() > tol {
            return Err(Error::Input(format!(
                "sample bias {mean:.6} exceeds tolerance {tol:.6}; use the paired (non-symmetric) fit"
            )));
        }
        let mut folded: Vec<f64> = samples.iter().map(|x| (x - mean).abs()).collect();
        folded.sort_by(|a, b| a.total_cmp(b));
        let (r, f) = folded_envelope(&folded);
        Ok(SuTarget::Envelope { r, folded: f, shift: mean, n })
    }

    pub fn kind(&self) -> TargetKind {
        match self {
            SuTarget::Analytic { .. } => TargetKind::Analytic,
            SuTarget::Envelope { .. } => TargetKind::Empirical,
        }
    }

    pub fn shift(&self) -> f64 {
        match self {
            SuTarget::Analytic { .. } => 0.0,
            SuTarget::Envelope { shift, .. } => *shift,
        }
    }

    pub fn n_constraints(&self) -> usize {
        match self {
            SuTarget::Analytic { x, .. } => x.len(),
            SuTarget::Envelope { r, .. } => 2 * r.len(),
        }
    }

    /// Largest |x| the target reaches.
    pub fn extent(&self) -> f64 {
        match self {
            SuTarget::Analytic { x, .. } => x.iter().fold(0.0f64, |a, b| a.max(b.abs())),
            SuTarget::Envelope { r, .. } => *r.last().unwrap_or(&0.0),
        }
    }

    /// Most negative dominance slack of a symmetric candidate.
    pub fn margin<C: SymmetricCandidate + ?Sized>(&self, c: &C) -> f64 {
        match self {
            SuTarget::Analytic { x, v } => {
                let mut worst = f64::INFINITY;
                for (&xi, &vi) in x.iter().zip(v) {
                    let s = if vi <= 0.5 {
                        // Lower half: need F_ob(x) >= F_e(x).
                        if xi <= 0.0 { c.tail(-xi) - vi } else { (1.0 - c.tail(xi)) - vi }
                    } else if xi >= 0.0 {
                        // Upper half: need 1 - F_ob(x) >= 1 - F_e(x).
                        c.tail(xi) - (1.0 - vi)
                    } else {
                        vi - c.tail(-xi)
                    };
                    worst = worst.min(s);
                }
                worst
            }
            SuTarget::Envelope { r, folded, .. } => {
                let mut worst = f64::INFINITY;
                for (&ri, &fi) in r.iter().zip(folded) {
                    worst = worst.min(c.tail(ri) - 0.5 * (1.0 - fi));
                }
                // Between vertices the slack is convex in r; its minimum sits
                // where the candidate density equals half the segment slope.
                for i in 0..r.len().saturating_sub(1) {
                    let (a, b) = (r[i], r[i + 1]);
                    if b <= a {
                        continue;
                    }
                    let s = (folded[i + 1] - folded[i]) / (b - a);
                    let rs = c.inv_density(0.5 * s);
                    if rs > a && rs < b {
                        let env = folded[i] + s * (rs - a);
                        worst = worst.min(c.tail(rs) - 0.5 * (1.0 - env));
                    }
                }
                worst
            }
        }
    }

    pub fn dominated_by<C: SymmetricCandidate + ?Sized>(&self, c: &C) -> bool {
        self.margin(c) >= -FEAS_TOL
    }
}

/// Least concave majorant of the folded ECDF left-limit corners.
///
/// Input is the sorted |x_i|; the corner at each distinct value is
/// P(|X| < r) = (j - 1) / n, together with the origin.
pub(crate) fn folded_envelope(sorted_abs: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = sorted_abs.len() as f64;
    let mut pts: Vec<(f64, f64)> = vec![(0.0, 0.0)];
    for (j, &r) in sorted_abs.iter().enumerate() {
        if j > 0 && sorted_abs[j - 1] == r {
            continue;
        }
        let p = (r, j as f64 / n);
        if p.0 == 0.0 {
            continue;
        }
        pts.push(p);
    }
    upper_hull(&pts)
}

/// Upper concave hull of points sorted by abscissa (Andrew's monotone chain).
pub(crate) fn upper_hull(pts: &[(f64, f64)]) -> (Vec<f64>, Vec<f64>) {
    let mut h: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &p in pts {
        while h.len() >= 2 {
            let (a, b) = (h[h.len() - 2], h[h.len() - 1]);
            let cross = (b.0 - a.0) * (p.1 - a.1) - (b.1 - a.1) * (p.0 - a.0);
            if cross >= 0.0 {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p);
    }
    h.into_iter().unzip()
}

/// Smallest Gaussian standard deviation whose zero-mean CDF overbounds the target.
pub fn fit_single_gaussian(target: &SuTarget) -> Result<f64> {
    let ok = |s: f64| target.dominated_by(&Gaussian { mu: 0.0, sigma: s });
    let mut hi = target.extent().max(1e-6);
    let mut tries = 0;
    while !ok(hi) {
        hi *= 2.0;
        tries += 1;
        if tries > 200 || !hi.is_finite() {
            return Err(Error::Infeasible("no Gaussian overbounds the target".into()));
        }
    }
    let mut lo = hi * 0.5;
    while ok(lo) {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Numeric("gaussian scale collapsed to zero".into()));
        }
    }
    Ok(bisect_threshold(lo, hi, 1e-12 * hi, ok))
}

/// Smallest zero-median Cauchy scale overbounding the target, restricted to
/// `lambda <= sqrt(2/pi) sigma_o`. `None` means no admissible Cauchy exists and
/// the overbound degenerates to the Gaussian.
pub fn fit_single_cauchy(target: &SuTarget, sigma_o: f64) -> Result<Option<f64>> {
    if !(sigma_o > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_o must be positive, got {sigma_o}")));
    }
    let cap = LAMBDA_CAP_RATIO * sigma_o;
    let ok = |l: f64| target.dominated_by(&Cauchy { m: 0.0, lambda: l });
    if !ok(cap) {
        return Ok(None);
    }
    let mut lo = cap * 0.5;
    while ok(lo) {
        lo *= 0.5;
        if lo < 1e-300 {
            return Err(Error::Numeric("cauchy scale collapsed to zero".into()));
        }
    }
    let l = bisect_threshold(lo, cap, 1e-12 * cap, ok);
    if l >= cap {
        return Ok(None);
    }
    Ok(Some(l))
}

/// Common tangent of the Cauchy CDF (at x1) and the Gaussian CDF (at x2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tangent {
    pub k: f64,
    pub x1: f64,
    pub x2: f64,
}

/// Residual of the tangent condition as a function of the slope `k`.
fn tangent_residual(g: &Gaussian, c: &Cauchy, k: f64) -> f64 {
    let x1 = c.inv_density(k);
    let x2 = g.inv_density(k);
    // F_G(x2) - F_C(x1) written with upper tails to keep digits.
    k * (x2 - x1) - (c.sf(x1) - g.sf(x2))
}

/// Solve for the tangent joining a Cauchy(0, lambda) core to a N(0, sigma) tail.
pub fn solve_tangential_transition(sigma: f64, lambda: f64) -> Result<Tangent> {
    if !(sigma > 0.0 && lambda > 0.0) {
        return Err(Error::InvalidParameter(format!("need positive scales, got sigma={sigma}, lambda={lambda}")));
    }
    if lambda >= LAMBDA_CAP_RATIO * sigma {
        return Err(Error::InvalidParameter(format!(
            "lambda {lambda} must be below sqrt(2/pi) sigma = {}",
            LAMBDA_CAP_RATIO * sigma
        )));
    }
    let g = Gaussian { mu: 0.0, sigma };
    let c = Cauchy { m: 0.0, lambda };
    let k_hi = 1.0 / (sigma * SQRT_2PI);
    let mut k_lo = k_hi * 1e-3;
    while tangent_residual(&g, &c, k_lo) >= 0.0 {
        k_lo *= 1e-3;
        if k_lo < 1e-300 {
            return Err(Error::Numeric("tangent bracket not found".into()));
        }
    }
    let f = |t: f64| tangent_residual(&g, &c, t.exp());
    let t = brent(f, k_lo.ln(), k_hi.ln(), 1e-15, 500).ok_or_else(|| Error::Numeric("tangent solve failed".into()))?;
    let k = t.exp();
    let tan = Tangent { k, x1: c.inv_density(k), x2: g.inv_density(k) };
    let res = tangent_residual(&g, &c, k);
    if !(res.abs() < 1e-10) || !(tan.x1 < tan.x2) {
        return Err(Error::Numeric(format!("tangent residual {res:e} with x1={}, x2={}", tan.x1, tan.x2)));
    }
    Ok(tan)
}

/// Symmetric Cauchy-Gaussian overbound: Cauchy core, linear transition, Gaussian tail.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SuOverbound {
    pub sigma_o: f64,
    pub lambda_o: f64,
    #[serde(rename = "K")]
    pub k: f64,
    pub x1: f64,
    pub x2: f64,
    pub degenerate_gaussian: bool,
}

impl SuOverbound {
    /// Build the piecewise overbound, or the plain Gaussian when `lambda`
    /// reaches the peak-density cap.
    pub fn synthesize(sigma_o: f64, lambda_o: Option<f64>) -> Result<Self> {
        if !(sigma_o > 0.0 && sigma_o.is_finite()) {
            return Err(Error::InvalidParameter(format!("sigma_o must be positive, got {sigma_o}")));
        }
        match lambda_o {
            Some(l) if l < LAMBDA_CAP_RATIO * sigma_o => {
                let t = solve_tangential_transition(sigma_o, l)?;
                Ok(SuOverbound { sigma_o, lambda_o: l, k: t.k, x1: t.x1, x2: t.x2, degenerate_gaussian: false })
            }
            l => Ok(SuOverbound {
                sigma_o,
                lambda_o: l.unwrap_or(LAMBDA_CAP_RATIO * sigma_o),
                k: 1.0 / (sigma_o * SQRT_2PI),
                x1: 0.0,
                x2: 0.0,
                degenerate_gaussian: true,
            }),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_o > 0.0 && self.lambda_o > 0.0) {
            return Err(Error::InvalidParameter("overbound scales must be positive".into()));
        }
        if !self.degenerate_gaussian && !(0.0 <= self.x1 && self.x1 < self.x2 && self.k > 0.0) {
            return Err(Error::InvalidParameter("overbound transition needs 0 <= x1 < x2 and K > 0".into()));
        }
        Ok(())
    }

    fn gaussian(&self) -> Gaussian {
        Gaussian { mu: 0.0, sigma: self.sigma_o }
    }

    fn cauchy(&self) -> Cauchy {
        Cauchy { m: 0.0, lambda: self.lambda_o }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.density(x.abs())
    }

    /// Value of the max-of-three form for x > 0 (mirrored for x < 0); used as a cross-check.
    pub fn cdf_max_form(&self, x: f64) -> f64 {
        let a = x.abs();
        let fc = self.cauchy().cdf(a);
        let fg = self.gaussian().cdf(a);
        let mut v = fc.max(fg);
        if !self.degenerate_gaussian {
            if a >= self.x1 && a <= self.x2 {
                v = v.max(self.k * (a - self.x1) + fc_at(self, self.x1));
            }
        } else {
            v = fg;
        }
        if x >= 0.0 {
            v
        } else {
            1.0 - v
        }
    }
}

fn fc_at(b: &SuOverbound, x: f64) -> f64 {
    b.cauchy().cdf(x)
}

impl SymmetricCandidate for SuOverbound {
    fn tail(&self, r: f64) -> f64 {
        if self.degenerate_gaussian {
            return self.gaussian().sf(r);
        }
        if r < self.x1 {
            self.cauchy().sf(r)
        } else if r <= self.x2 {
            self.cauchy().sf(self.x1) - self.k * (r - self.x1)
        } else {
            self.gaussian().sf(r)
        }
    }

    fn density(&self, r: f64) -> f64 {
        if self.degenerate_gaussian {
            return self.gaussian().pdf(r);
        }
        if r < self.x1 {
            self.cauchy().pdf(r)
        } else if r <= self.x2 {
            self.k
        } else {
            self.gaussian().pdf(r)
        }
    }

    fn inv_density(&self, k: f64) -> f64 {
        if self.degenerate_gaussian {
            return self.gaussian().inv_density(k);
        }
        if k > self.k {
            self.cauchy().inv_density(k).min(self.x1)
        } else if k == self.k {
            self.x1
        } else {
            self.gaussian().inv_density(k).max(self.x2)
        }
    }
}

impl Cdf for SuOverbound {
    fn cdf(&self, x: f64) -> f64 {
        if x <= 0.0 {
            self.tail(-x)
        } else {
            1.0 - self.tail(x)
        }
    }
    fn sf(&self, x: f64) -> f64 {
        if x >= 0.0 {
            self.tail(x)
        } else {
            1.0 - self.tail(-x)
        }
    }
    fn quantile(&self, p: f64) -> f64 {
        if p <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if p >= 1.0 {
            return f64::INFINITY;
        }
        let (q, sign) = if p < 0.5 { (p, -1.0) } else { (1.0 - p, 1.0) };
        if q == 0.5 {
            return 0.0;
        }
        let r = if self.degenerate_gaussian {
            -self.gaussian().quantile(q)
        } else {
            let t1 = self.cauchy().sf(self.x1);
            let t2 = self.gaussian().sf(self.x2);
            if q >= t1 {
                -self.cauchy().quantile(q)
            } else if q >= t2 {
                self.x1 + (t1 - q) / self.k
            } else {
                -self.gaussian().quantile(q)
            }
        };
        sign * r
    }
}

/// Fit diagnostics returned next to the bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuFitReport {
    pub target_kind: TargetKind,
    /// Bias removed from the samples before folding.
    pub shift: f64,
    pub n_constraints: usize,
    /// Most negative slack of the Gaussian, Cauchy and final bound.
    pub sigma_margin: f64,
    pub lambda_margin: Option<f64>,
    pub bound_margin: f64,
}

#[derive(Debug, Clone)]
pub struct SuFit {
    pub bound: SuOverbound,
    pub report: SuFitReport,
}

/// Full single-CDF fit.
pub fn fit_su(target: &SuTarget) -> Result<SuFit> {
    let sigma_o = fit_single_gaussian(target)?;
    let lambda_o = fit_single_cauchy(target, sigma_o)?;
    let bound = SuOverbound::synthesize(sigma_o, lambda_o)?;
    let bound_margin = target.margin(&bound);
    if bound_margin < -1e-9 {
        return Err(Error::Numeric(format!("synthesized overbound violates the target by {bound_margin:e}")));
    }
    Ok(SuFit {
        bound,
        report: SuFitReport {
            target_kind: target.kind(),
            shift: target.shift(),
            n_constraints: target.n_constraints(),
            sigma_margin: target.margin(&Gaussian { mu: 0.0, sigma: sigma_o }),
            lambda_margin: lambda_o.map(|l| target.margin(&Cauchy { m: 0.0, lambda: l })),
            bound_margin,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Distribution, Mixture};
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Independent tangent oracle: scan x1 on the Cauchy branch, derive x2
    /// from equal densities, and bisect on the secant-minus-slope mismatch.
    fn tangent_oracle(sigma: f64, lambda: f64) -> (f64, f64, f64) {
        let pi = std::f64::consts::PI;
        let fc = |x: f64| 1.0 / (pi * lambda * (1.0 + (x / lambda).powi(2)));
        let cc = |x: f64| 0.5 + (x / lambda).atan() / pi;
        let cg = |x: f64| 0.5 * libm::erfc(-x / (sigma * 2f64.sqrt()));
        let x2_of = |k: f64| sigma * (-2.0 * (k * sigma * (2.0 * pi).sqrt()).ln()).sqrt();
        let g = |x1: f64| {
            let k = fc(x1);
            let x2 = x2_of(k);
            (cg(x2) - cc(x1)) / (x2 - x1) - k
        };
        // x1 grows as K shrinks. Skip the stretch where x2 < x1, then scan
        // for the sign change of secant minus slope.
        let x1_min = lambda * ((sigma * (2.0 * pi).sqrt() / (pi * lambda)) - 1.0).max(0.0).sqrt() * 1.0001;
        let step = 1e-3 * sigma;
        let mut a = x1_min;
        while x2_of(fc(a)) <= a {
            a += step;
        }
        let ga = g(a);
        let mut b = a;
        for _ in 0..10_000_000 {
            b = a + step;
            if g(b).signum() != ga.signum() {
                break;
            }
            a = b;
        }
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if g(m).signum() == ga.signum() { a = m } else { b = m }
        }
        let x1 = 0.5 * (a + b);
        (fc(x1), x1, x2_of(fc(x1)))
    }

    #[test]
    fn tangent_matches_oracle() {
        for &(s, l) in &[(5.0, 1.0), (8.72, 0.83), (1.0, 0.3), (3.0, 2.0)] {
            let t = solve_tangential_transition(s, l).unwrap();
            let (k, x1, x2) = tangent_oracle(s, l);
            assert!((t.k - k).abs() < 1e-9 * k, "{s} {l}: {} vs {k}", t.k);
            assert!((t.x1 - x1).abs() < 1e-7 * x1);
            assert!((t.x2 - x2).abs() < 1e-7 * x2);
        }
    }

    #[test]
    fn tangent_frozen_values() {
        // Frozen from the oracle above.
        let t = solve_tangential_transition(5.0, 1.0).unwrap();
        assert!((t.k - 7.7153e-3).abs() < 1e-7);
        assert!((t.x1 - 6.3449).abs() < 1e-4);
        assert!((t.x2 - 10.8078).abs() < 1e-4);
    }

    #[test]
    fn tangent_rejects_large_lambda() {
        assert!(solve_tangential_transition(1.0, 0.8).is_err());
        assert!(solve_tangential_transition(1.0, 0.0).is_err());
    }

    #[test]
    fn degenerate_when_cauchy_capped() {
        let b = SuOverbound::synthesize(2.0, Some(LAMBDA_CAP_RATIO * 2.0)).unwrap();
        assert!(b.degenerate_gaussian);
        let g = Gaussian { mu: 0.0, sigma: 2.0 };
        for &x in &[-5.0, -0.3, 0.0, 1.7] {
            assert!((b.cdf(x) - g.cdf(x)).abs() < 1e-15);
        }
    }

    #[test]
    fn gaussian_target_fits_itself() {
        let g = Gaussian { mu: 0.0, sigma: 1.5 };
        let t = SuTarget::from_distribution(&g, 2001, 1e-6).unwrap();
        let s = fit_single_gaussian(&t).unwrap();
        assert!((s - 1.5).abs() < 1e-9, "{s}");
        // The Cauchy at its cap bounds a Gaussian; anything below fails at the core.
        assert!(fit_single_cauchy(&t, s).unwrap().is_none() || fit_single_cauchy(&t, s).unwrap().unwrap() > 0.99 * LAMBDA_CAP_RATIO * s);
    }

    #[test]
    fn cauchy_target_fits_itself() {
        let c = Cauchy { m: 0.0, lambda: 0.5 };
        let t = SuTarget::from_distribution(&c, 2001, 1e-4).unwrap();
        let s = fit_single_gaussian(&t).unwrap();
        let l = fit_single_cauchy(&t, s).unwrap().unwrap();
        assert!((l - 0.5).abs() < 1e-9, "{l}");
    }

    #[test]
    fn biased_samples_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = Distribution::Gaussian(Gaussian { mu: 0.5, sigma: 1.0 });
        let xs = g.sample_n(&mut rng, 10_000);
        let err = SuTarget::from_samples(&xs, None).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    #[test]
    fn standard_normal_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let g = Distribution::Gaussian(Gaussian { mu: 0.0, sigma: 1.0 });
        let xs = g.sample_n(&mut rng, 10_000);
        let t = SuTarget::from_samples(&xs, None).unwrap();
        let fit = fit_su(&t).unwrap();
        assert!(fit.bound.sigma_o >= 1.0 && fit.bound.sigma_o <= 1.15, "{}", fit.bound.sigma_o);
        assert!(fit.report.bound_margin >= -FEAS_TOL);
    }

    #[test]
    fn envelope_is_concave_and_majorizes() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let d = Distribution::Mixture(Mixture::bimodal(0.9, 0.0, 1.0, 0.0, 10.0).unwrap());
        let mut xs: Vec<f64> = d.sample_n(&mut rng, 5_000).iter().map(|x| x.abs()).collect();
        xs.sort_by(|a, b| a.total_cmp(b));
        let (r, f) = folded_envelope(&xs);
        let slopes: Vec<f64> = r.windows(2).zip(f.windows(2)).map(|(a, b)| (b[1] - b[0]) / (a[1] - a[0])).collect();
        assert!(slopes.windows(2).all(|w| w[1] <= w[0] + 1e-12));
        let n = xs.len() as f64;
        for (j, &x) in xs.iter().enumerate() {
            let i = r.partition_point(|&v| v <= x).max(1) - 1;
            let env = if i + 1 < r.len() { f[i] + (f[i + 1] - f[i]) * (x - r[i]) / (r[i + 1] - r[i]) } else { f[i] };
            assert!(env >= j as f64 / n - 1e-12);
        }
    }

    #[test]
    fn piecewise_equals_max_form() {
        let b = SuOverbound::synthesize(8.72, Some(0.83)).unwrap();
        for i in -400..=400 {
            let x = i as f64 * 0.1;
            assert!((b.cdf(x) - b.cdf_max_form(x)).abs() < 1e-12, "{x}");
        }
    }

    proptest! {
        #[test]
        fn bound_is_symmetric_unimodal(s in 0.5..20.0f64, frac in 0.05..0.95f64) {
            let l = frac * LAMBDA_CAP_RATIO * s;
            let b = SuOverbound::synthesize(s, Some(l)).unwrap();
            prop_assert!(b.x1 < b.x2);
            let mut prev = f64::INFINITY;
            for i in 0..2000 {
                let x = i as f64 * (b.x2 * 1.5) / 2000.0;
                let p = b.pdf(x);
                prop_assert!(p <= prev * (1.0 + 1e-12));
                prev = p;
                prop_assert!((b.cdf(x) + b.cdf(-x) - 1.0).abs() < 1e-14);
            }
        }

        #[test]
        fn lower_half_sits_below_both_components(s in 0.5..20.0f64, frac in 0.05..0.95f64, u in 0.0..1.0f64) {
            // On x <= 0 the bound is the lower envelope of Cauchy, tangent line and Gaussian,
            // and equals the smaller component outside the transition.
            let l = frac * LAMBDA_CAP_RATIO * s;
            let b = SuOverbound::synthesize(s, Some(l)).unwrap();
            let x = -u * 3.0 * b.x2;
            let fg = Gaussian { mu: 0.0, sigma: s }.cdf(x);
            let fc = Cauchy { m: 0.0, lambda: l }.cdf(x);
            prop_assert!(b.cdf(x) <= fg.min(fc) + 1e-15);
            if -x < b.x1 || -x > b.x2 {
                prop_assert!((b.cdf(x) - fg.min(fc)).abs() <= 1e-15);
            }
        }

        #[test]
        fn quantile_round_trip(s in 0.5..20.0f64, frac in 0.05..0.95f64, p in 1e-10..(1.0 - 1e-10f64)) {
            let b = SuOverbound::synthesize(s, Some(frac * LAMBDA_CAP_RATIO * s)).unwrap();
            let x = b.quantile(p);
            prop_assert!((b.cdf(x) - p).abs() < 1e-12);
        }
    }
}
