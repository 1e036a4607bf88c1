//! Paired (non-symmetric, non-unimodal) Cauchy-Gaussian overbound.
//!
//! A paired CGCM and a paired Gaussian are each fitted by derivative-free
//! search on the summed CDF gap to the target, subject to dominance at every
//! step corner. The final pair takes the tighter member pointwise: the lower
//! of the two left bounds and the higher of the two right bounds.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dfo::{minimize, Evaluation, Problem, SearchConfig, StopReason};
use crate::dist::{Cdf, CgcmHalf, Gaussian, Side};
use crate::empirical::{DominanceTarget, TargetKind};
use crate::error::{Error, Result};
use crate::paired::PairedBound;

/// Dominance slack for the paired constraints.
pub const PAIRED_TOL: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CgcmParams {
    pub m_o: f64,
    pub lambda_o: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mu_o: f64,
    pub sigma_o: f64,
}

/// Paired CGCM: right half centred at +m, left half at -m.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedCgcm {
    pub left: CgcmHalf,
    pub right: CgcmHalf,
}

impl PairedCgcm {
    pub fn new(m: f64, lambda: f64) -> Result<Self> {
        if m < 0.0 {
            return Err(Error::InvalidParameter(format!("cgcm shift must be >= 0, got {m}")));
        }
        Ok(PairedCgcm { left: CgcmHalf::new(m, lambda, Side::Left)?, right: CgcmHalf::new(m, lambda, Side::Right)? })
    }
}

impl PairedBound for PairedCgcm {
    fn left_cdf(&self, x: f64) -> f64 {
        self.left.cdf(x)
    }
    fn right_cdf(&self, x: f64) -> f64 {
        self.right.cdf(x)
    }
    fn right_sf(&self, x: f64) -> f64 {
        self.right.sf(x)
    }
    fn left_pdf(&self, x: f64) -> f64 {
        self.left.pdf(x)
    }
    fn right_pdf(&self, x: f64) -> f64 {
        self.right.pdf(x)
    }
    fn location_hint(&self) -> f64 {
        self.right.m
    }
}

/// Paired Gaussian: N(-mu, sigma) on the left, N(mu, sigma) on the right.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedGaussian {
    pub left: Gaussian,
    pub right: Gaussian,
}

impl PairedGaussian {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if mu < 0.0 {
            return Err(Error::InvalidParameter(format!("gaussian shift must be >= 0, got {mu}")));
        }
        Ok(PairedGaussian { left: Gaussian::new(-mu, sigma)?, right: Gaussian::new(mu, sigma)? })
    }
}

impl PairedBound for PairedGaussian {
    fn left_cdf(&self, x: f64) -> f64 {
        self.left.cdf(x)
    }
    fn right_cdf(&self, x: f64) -> f64 {
        self.right.cdf(x)
    }
    fn right_sf(&self, x: f64) -> f64 {
        self.right.sf(x)
    }
    fn left_pdf(&self, x: f64) -> f64 {
        self.left.pdf(x)
    }
    fn right_pdf(&self, x: f64) -> f64 {
        self.right.pdf(x)
    }
    fn location_hint(&self) -> f64 {
        self.right.mu
    }
}

/// Synthesized paired overbound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NsuOverbound {
    pub cgcm: CgcmParams,
    pub gaussian: GaussianParams,
}

impl NsuOverbound {
    pub fn validate(&self) -> Result<()> {
        self.members().map(|_| ())
    }

    pub fn members(&self) -> Result<(PairedCgcm, PairedGaussian)> {
        Ok((
            PairedCgcm::new(self.cgcm.m_o, self.cgcm.lambda_o)?,
            PairedGaussian::new(self.gaussian.mu_o, self.gaussian.sigma_o)?,
        ))
    }

    /// Evaluation-ready form.
    pub fn pair(&self) -> Result<NsuPair> {
        let (cgcm, gaussian) = self.members()?;
        Ok(NsuPair { cgcm, gaussian })
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NsuPair {
    pub cgcm: PairedCgcm,
    pub gaussian: PairedGaussian,
}

impl PairedBound for NsuPair {
    fn left_cdf(&self, x: f64) -> f64 {
        self.cgcm.left_cdf(x).min(self.gaussian.left_cdf(x))
    }
    fn right_cdf(&self, x: f64) -> f64 {
        self.cgcm.right_cdf(x).max(self.gaussian.right_cdf(x))
    }
    fn right_sf(&self, x: f64) -> f64 {
        self.cgcm.right_sf(x).min(self.gaussian.right_sf(x))
    }
    fn left_pdf(&self, x: f64) -> f64 {
        if self.cgcm.left_cdf(x) <= self.gaussian.left_cdf(x) {
            self.cgcm.left_pdf(x)
        } else {
            self.gaussian.left_pdf(x)
        }
    }
    fn right_pdf(&self, x: f64) -> f64 {
        if self.cgcm.right_cdf(x) >= self.gaussian.right_cdf(x) {
            self.cgcm.right_pdf(x)
        } else {
            self.gaussian.right_pdf(x)
        }
    }
    fn location_hint(&self) -> f64 {
        self.cgcm.right.m
    }
}

/// Does the pair bracket every corner of the target?
pub fn pair_is_valid<B: PairedBound + ?Sized>(target: &DominanceTarget, b: &B, tol: f64) -> bool {
    target.left_ok(|x| b.left_cdf(x), tol) && target.right_ok(|x| b.right_cdf(x), tol)
}

/// Sum over target points of |F_L - F_e| + |F_R - F_e|.
pub fn paired_objective<B: PairedBound + ?Sized>(target: &DominanceTarget, b: &B) -> f64 {
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = target
        .x
        .par_chunks(CHUNK)
        .zip(target.upper.par_chunks(CHUNK))
        .map(|(xs, vs)| {
            xs.iter().zip(vs).map(|(&x, &v)| (b.left_cdf(x) - v).abs() + (b.right_cdf(x) - v).abs()).sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairedFamily {
    Cgcm,
    Gaussian,
}

impl PairedFamily {
    fn build(&self, p: &[f64]) -> Option<Box<dyn PairedBound>> {
        match self {
            PairedFamily::Cgcm => PairedCgcm::new(p[0], p[1]).ok().map(|b| Box::new(b) as Box<dyn PairedBound>),
            PairedFamily::Gaussian => PairedGaussian::new(p[0], p[1]).ok().map(|b| Box::new(b) as Box<dyn PairedBound>),
        }
    }
}

struct FitProblem<'a> {
    target: &'a DominanceTarget,
    family: PairedFamily,
    spread: f64,
}

impl Problem for FitProblem<'_> {
    fn dim(&self) -> usize {
        2
    }
    fn feasible(&self, x: &[f64]) -> bool {
        if !(x[0] >= 0.0 && x[1] > 0.0) {
            return false;
        }
        match self.family.build(x) {
            Some(b) => pair_is_valid(self.target, b.as_ref(), PAIRED_TOL),
            None => false,
        }
    }
    fn objective(&self, x: &[f64]) -> f64 {
        match self.family.build(x) {
            Some(b) => paired_objective(self.target, b.as_ref()),
            None => f64::INFINITY,
        }
    }
    /// Push the pair outwards: a larger shift moves both halves away from the data.
    fn restore(&self, x: &[f64]) -> Option<Vec<f64>> {
        let shift = (2.0 * x[0]).max(0.25 * self.spread);
        if shift > 1e6 * self.spread {
            return None;
        }
        Some(vec![shift, x[1]])
    }
}

/// Smallest shift making the pair valid at a fixed scale; feasibility is monotone in the shift.
fn min_feasible_shift(problem: &FitProblem, scale: f64) -> Option<f64> {
    let ok = |m: f64| problem.feasible(&[m, scale]);
    if ok(0.0) {
        return Some(0.0);
    }
    let mut hi = problem.spread;
    while !ok(hi) {
        hi *= 2.0;
        if hi > 1e6 * problem.spread {
            return None;
        }
    }
    let m = crate::numeric::bisect_threshold(0.0, hi, 1e-10 * hi, ok);
    Some(m)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct NsuConfig {
    pub budget: usize,
    pub min_mesh: f64,
    pub seed: u64,
}

impl Default for NsuConfig {
    fn default() -> Self {
        NsuConfig { budget: 5000, min_mesh: 1e-5, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct FamilyFit {
    pub family: PairedFamily,
    /// (shift, scale)
    pub params: [f64; 2],
    pub objective: f64,
    pub evaluations: usize,
    pub stop: StopReason,
    pub trace: Vec<Evaluation>,
}

fn target_spread(target: &DominanceTarget) -> f64 {
    // Robust scale from the corner quantiles.
    let q = |p: f64| {
        let i = target.upper.partition_point(|&v| v < p).min(target.len() - 1);
        target.x[i]
    };
    (q(0.75) - q(0.25)).max(1e-12)
}

/// Fit one paired family by derivative-free search.
pub fn fit_paired_family(target: &DominanceTarget, family: PairedFamily, cfg: &NsuConfig) -> Result<FamilyFit> {
    if target.len() < 2 {
        return Err(Error::Input("need at least two distinct target points".into()));
    }
    let spread = target_spread(target);
    // IQR of a Gaussian is 1.349 sigma, of a Cauchy 2 lambda.
    let scale0 = match family {
        PairedFamily::Gaussian => spread / 1.349,
        PairedFamily::Cgcm => spread / 2.0,
    };
    let problem = FitProblem { target, family, spread };
    // Start from the best of a coarse scale scan, each at its smallest feasible shift.
    let mut start = vec![0.0, scale0];
    let mut best = f64::INFINITY;
    for i in 0..12 {
        let scale = scale0 * 2f64.powf(i as f64 * 0.5 - 1.0);
        if let Some(shift) = min_feasible_shift(&problem, scale) {
            let v = problem.objective(&[shift, scale]);
            if v < best {
                best = v;
                start = vec![shift, scale];
            }
        }
    }
    let (shift0, scale0) = (start[0], start[1]);
    let mesh0 = vec![0.25 * shift0.max(0.1 * scale0), 0.25 * scale0];
    let mut search = SearchConfig::new(start, mesh0);
    search.budget = cfg.budget;
    search.min_mesh = cfg.min_mesh;
    search.seed = cfg.seed;
    search.lower_bounds = vec![0.0, 1e-12];
    let r = minimize(&problem, &search)?;
    Ok(FamilyFit {
        family,
        params: [r.point[0], r.point[1]],
        objective: r.value,
        evaluations: r.evaluations,
        stop: r.stop,
        trace: r.trace,
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NsuFitReport {
    pub target_kind: TargetKind,
    pub n_points: usize,
    pub cgcm_objective: f64,
    pub gaussian_objective: f64,
    pub cgcm_evaluations: usize,
    pub gaussian_evaluations: usize,
    pub cgcm_stop: StopReason,
    pub gaussian_stop: StopReason,
    pub left_margin: f64,
    pub right_margin: f64,
}

#[derive(Debug, Clone)]
pub struct NsuFit {
    pub bound: NsuOverbound,
    pub report: NsuFitReport,
    pub cgcm: FamilyFit,
    pub gaussian: FamilyFit,
}

/// Fit both paired families and combine them.
pub fn fit_nsu(target: &DominanceTarget, cfg: &NsuConfig) -> Result<NsuFit> {
    let cgcm = fit_paired_family(target, PairedFamily::Cgcm, cfg)?;
    let gaussian = fit_paired_family(target, PairedFamily::Gaussian, cfg)?;
    let bound = NsuOverbound {
        cgcm: CgcmParams { m_o: cgcm.params[0], lambda_o: cgcm.params[1] },
        gaussian: GaussianParams { mu_o: gaussian.params[0], sigma_o: gaussian.params[1] },
    };
    let pair = bound.pair()?;
    let left_margin = target.left_margin(|x| pair.left_cdf(x));
    let right_margin = target.right_margin(|x| pair.right_cdf(x));
    if left_margin < -PAIRED_TOL || right_margin < -PAIRED_TOL {
        return Err(Error::Numeric("combined pair fails dominance".into()));
    }
    Ok(NsuFit {
        bound,
        report: NsuFitReport {
            target_kind: target.kind,
            n_points: target.len(),
            cgcm_objective: cgcm.objective,
            gaussian_objective: gaussian.objective,
            cgcm_evaluations: cgcm.evaluations,
            gaussian_evaluations: gaussian.evaluations,
            cgcm_stop: cgcm.stop,
            gaussian_stop: gaussian.stop,
            left_margin,
            right_margin,
        },
        cgcm,
        gaussian,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Distribution, Mixture};
    use crate::empirical::Ecdf;
    use crate::paired::analog_single_cdf;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_target(seed: u64, n: usize) -> DominanceTarget {
        let d = Distribution::Mixture(Mixture::bimodal(0.9, 0.0, 1.0, 1.0, 3.0).unwrap());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Ecdf::new(&d.sample_n(&mut rng, n)).unwrap().corners()
    }

    #[test]
    fn fit_is_valid_and_locally_optimal() {
        let t = sample_target(1, 3000);
        let fit = fit_nsu(&t, &NsuConfig::default()).unwrap();
        let pair = fit.bound.pair().unwrap();
        assert!(pair_is_valid(&t, &pair, PAIRED_TOL));
        // No feasible neighbour on a small cross does better.
        for (fam, f) in [(PairedFamily::Cgcm, &fit.cgcm), (PairedFamily::Gaussian, &fit.gaussian)] {
            let p = f.params;
            for (dm, ds) in [(1e-3, 0.0), (-1e-3, 0.0), (0.0, 1e-3), (0.0, -1e-3)] {
                let q = [p[0] + dm, p[1] + ds];
                if let Some(b) = fam.build(&q) {
                    if q[0] >= 0.0 && pair_is_valid(&t, b.as_ref(), PAIRED_TOL) {
                        assert!(paired_objective(&t, b.as_ref()) >= f.objective - 1e-9 * f.objective);
                    }
                }
            }
        }
    }

    #[test]
    fn combined_pair_is_at_least_as_tight_as_members() {
        let t = sample_target(2, 2000);
        let fit = fit_nsu(&t, &NsuConfig::default()).unwrap();
        let pair = fit.bound.pair().unwrap();
        for i in -200..=200 {
            let x = i as f64 * 0.1;
            assert!(pair.left_cdf(x) <= pair.cgcm.left_cdf(x).min(pair.gaussian.left_cdf(x)) + 0.0);
            assert!(pair.right_cdf(x) >= pair.cgcm.right_cdf(x).max(pair.gaussian.right_cdf(x)) - 0.0);
            assert!(pair.left_cdf(x) >= pair.right_cdf(x));
        }
    }

    #[test]
    fn analog_cdf_is_flat_between_centres() {
        let b = PairedGaussian::new(1.0, 1.0).unwrap();
        assert_eq!(analog_single_cdf(&b, 0.0), 0.5);
        assert_eq!(analog_single_cdf(&b, -1.0), 0.5);
        assert!(analog_single_cdf(&b, -1.5) < 0.5);
        assert!(analog_single_cdf(&b, 1.5) > 0.5);
    }

    #[test]
    fn rejects_negative_shift() {
        assert!(PairedCgcm::new(-0.1, 1.0).is_err());
        assert!(PairedGaussian::new(-0.1, 1.0).is_err());
    }

    #[test]
    fn serde_layout() {
        let b = NsuOverbound { cgcm: CgcmParams { m_o: 0.04, lambda_o: 0.79 }, gaussian: GaussianParams { mu_o: 10.5, sigma_o: 6.7 } };
        let v = serde_json::to_value(b).unwrap();
        assert_eq!(v["cgcm"]["m_o"], 0.04);
        assert_eq!(v["gaussian"]["sigma_o"], 6.7);
    }

    proptest! {
        #[test]
        fn paired_members_are_ordered(m in 0.0..3.0f64, l in 0.05..5.0f64, x in -30.0..30.0f64) {
            let c = PairedCgcm::new(m, l).unwrap();
            prop_assert!(c.left_cdf(x) >= c.right_cdf(x));
            // Mirror symmetry of the pair.
            prop_assert!((c.right_cdf(x) - (1.0 - c.left_cdf(-x))).abs() < 1e-14);
            let g = PairedGaussian::new(m, l).unwrap();
            prop_assert!(g.left_cdf(x) >= g.right_cdf(x));
        }
    }
}
