//! Position-domain bounds by discretized convolution.
//!
//! Each range-domain bound is scaled by the magnitude of its projection
//! coefficient, discretized on a common grid, and convolved. The protection
//! level is read off the right tail of the result.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dist::{Cdf, Distribution};
use crate::error::{Error, Result};

/// Probability left outside the discretized support on each side.
pub const TRUNCATION: f64 = 1e-12;

/// Coefficients below this magnitude drop out of the convolution.
pub const MIN_COEFF: f64 = 1e-12;

/// Densities on a uniform grid. Cell `k` is centred at `origin + k dt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscretePdf {
    pub origin: f64,
    pub dt: f64,
    /// Density per cell; `mass[k] * dt` is the cell probability.
    pub mass: Vec<f64>,
}

impl DiscretePdf {
    pub fn t(&self, k: usize) -> f64 {
        self.origin + k as f64 * self.dt
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum::<f64>() * self.dt
    }

    /// Cumulative probability through cell `k`.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.mass
            .iter()
            .map(|m| {
                acc += m * self.dt;
                acc
            })
            .collect()
    }

    /// Probability strictly to the right of each cell, summed from the far end.
    pub fn right_tails(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.mass.len()];
        let mut acc = 0.0;
        for k in (0..self.mass.len()).rev() {
            out[k] = acc;
            acc += self.mass[k] * self.dt;
        }
        out
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["T", "mass"])?;
        for (k, m) in self.mass.iter().enumerate() {
            wtr.write_record([format!("{}", self.t(k)), format!("{m}")])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn check_dt(dt: f64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter(format!("grid step must be positive, got {dt}")));
    }
    Ok(())
}

/// Discretize the distribution of `scale * X` with `X ~ src`.
///
/// Cells are centred on multiples of `dt`; the mass beyond the truncation
/// quantiles is folded into the outermost cells.
pub fn discretize_scaled<C: Cdf + ?Sized>(src: &C, scale: f64, dt: f64) -> Result<DiscretePdf> {
    check_dt(dt)?;
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let lo = scale * src.quantile(TRUNCATION);
    let hi = scale * src.quantile(1.0 - TRUNCATION);
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::Numeric("bound has no finite truncation quantiles".into()));
    }
    let k_lo = (lo / dt).floor() as i64 - 1;
    let k_hi = (hi / dt).ceil() as i64 + 1;
    let cells = (k_hi - k_lo + 1) as usize;
    if cells > 50_000_000 {
        return Err(Error::InvalidParameter(format!("grid of {cells} cells is too fine for this bound")));
    }
    let med = scale * src.quantile(0.5);
    let edge = |j: usize| ((k_lo + j as i64) as f64 - 0.5) * dt;
    // Lower CDF below the median and survival function above it keep the
    // tail cells accurate.
    let mut mass = Vec::with_capacity(cells);
    for j in 0..cells {
        let (a, b) = (edge(j) / scale, edge(j + 1) / scale);
        let p = if edge(j) >= med { src.sf(a) - src.sf(b) } else { src.cdf(b) - src.cdf(a) };
        mass.push(p.max(0.0));
    }
    mass[0] += src.cdf(edge(0) / scale);
    mass[cells - 1] += src.sf(edge(cells) / scale);
    let total: f64 = mass.iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("discretized bound carries no mass".into()));
    }
    for m in &mut mass {
        *m /= total * dt;
    }
    Ok(DiscretePdf { origin: k_lo as f64 * dt, dt, mass })
}

pub fn discretize<C: Cdf + ?Sized>(src: &C, dt: f64) -> Result<DiscretePdf> {
    discretize_scaled(src, 1.0, dt)
}

fn same_grid(terms: &[DiscretePdf]) -> Result<f64> {
    let dt = terms.first().ok_or_else(|| Error::InvalidParameter("nothing to convolve".into()))?.dt;
    if terms.iter().any(|t| (t.dt - dt).abs() > 1e-12 * dt || t.is_empty()) {
        return Err(Error::InvalidParameter("all terms must share one grid step".into()));
    }
    Ok(dt)
}

/// Direct O(n m) convolution, kept as a reference for the FFT path.
pub fn convolve_naive(terms: &[DiscretePdf]) -> Result<DiscretePdf> {
    let dt = same_grid(terms)?;
    let mut acc = terms[0].clone();
    for t in &terms[1..] {
        let mut out = vec![0.0; acc.len() + t.len() - 1];
        for (i, a) in acc.mass.iter().enumerate() {
            for (j, b) in t.mass.iter().enumerate() {
                out[i + j] += a * b * dt;
            }
        }
        acc = DiscretePdf { origin: acc.origin + t.origin, dt, mass: out };
    }
    Ok(acc)
}

/// Convolution of all terms through one FFT product.
pub fn convolve_fft(terms: &[DiscretePdf]) -> Result<DiscretePdf> {
    let dt = same_grid(terms)?;
    if terms.len() == 1 {
        return Ok(terms[0].clone());
    }
    let out_len: usize = terms.iter().map(|t| t.len()).sum::<usize>() - (terms.len() - 1);
    let n = out_len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let mut prod = vec![Complex::new(1.0, 0.0); n];
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    for t in terms {
        buf.iter_mut().for_each(|c| *c = Complex::new(0.0, 0.0));
        for (b, m) in buf.iter_mut().zip(&t.mass) {
            *b = Complex::new(m * dt, 0.0);
        }
        fwd.process(&mut buf);
        for (p, b) in prod.iter_mut().zip(&buf) {
            *p *= b;
        }
    }
    inv.process(&mut prod);
    // Back to densities; round-off below zero is noise.
    let norm = 1.0 / (n as f64 * dt);
    let mut mass: Vec<f64> = prod[..out_len].iter().map(|c| (c.re * norm).max(0.0)).collect();
    let total: f64 = mass.iter().sum::<f64>() * dt;
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Numeric(format!("convolution lost mass: total {total}")));
    }
    mass.iter_mut().for_each(|m| *m /= total);
    let origin = terms.iter().map(|t| t.origin).sum();
    Ok(DiscretePdf { origin, dt, mass })
}

/// Protection level: centre of the first cell whose cumulative mass exceeds `1 - p_hmi / 2`.
pub fn vpl_from_pdf(pdf: &DiscretePdf, p_hmi: f64) -> Result<f64> {
    if !(p_hmi > 0.0 && p_hmi < 1.0) {
        return Err(Error::InvalidParameter(format!("integrity risk must be in (0, 1), got {p_hmi}")));
    }
    let tails = pdf.right_tails();
    let k = tails
        .iter()
        .position(|&t| t < 0.5 * p_hmi)
        .ok_or_else(|| Error::Numeric("protection level beyond the grid".into()))?;
    Ok(pdf.t(k))
}

/// Vertical error bound: convolution of `|s_i| X_i` over all terms with
/// non-negligible coefficient.
pub fn vertical_pdf<C: Cdf + Sync>(bounds: &[C], s_row: &[f64], dt: f64) -> Result<DiscretePdf> {
    if bounds.len() != s_row.len() {
        return Err(Error::InvalidParameter(format!("{} bounds for {} coefficients", bounds.len(), s_row.len())));
    }
    let terms = bounds
        .iter()
        .zip(s_row)
        .filter(|(_, s)| s.abs() >= MIN_COEFF)
        .map(|(b, s)| discretize_scaled(b, s.abs(), dt))
        .collect::<Result<Vec<_>>>()?;
    if terms.is_empty() {
        return Err(Error::InvalidParameter("all projection coefficients are negligible".into()));
    }
    convolve_fft(&terms)
}

/// Vertical protection level with one bound shared by every satellite.
pub fn vpl_shared<C: Cdf + Sync>(bound: &C, s_row: &[f64], dt: f64, p_hmi: f64) -> Result<f64> {
    let bounds: Vec<&C> = s_row.iter().map(|_| bound).collect();
    vpl_from_pdf(&vertical_pdf(&bounds, s_row, dt)?, p_hmi)
}

/// Index of the worst-case source: largest variance, then largest kurtosis,
/// then lowest index.
pub fn select_worst_case(sources: &[Distribution]) -> Result<usize> {
    if sources.is_empty() {
        return Err(Error::InvalidParameter("no error sources".into()));
    }
    let mut best = 0usize;
    let mut key = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for (i, s) in sources.iter().enumerate() {
        let v = s.variance().ok_or_else(|| Error::InvalidParameter(format!("source {i} has no finite variance")))?;
        let k = s.kurtosis().unwrap_or(f64::NEG_INFINITY);
        let tol = 1e-12 * v.abs().max(key.0.abs());
        let better = v > key.0 + tol || ((v - key.0).abs() <= tol && k > key.1 * (1.0 + 1e-12));
        if better {
            best = i;
            key = (v, k);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::{Gaussian, Mixture};
    use crate::numeric::norm_quantile;
    use proptest::prelude::*;

    #[test]
    fn discretization_preserves_mass_and_moments() {
        let g = Gaussian { mu: 0.0, sigma: 2.0 };
        let d = discretize(&g, 0.01).unwrap();
        assert!((d.total() - 1.0).abs() < 1e-12);
        let mean: f64 = d.mass.iter().enumerate().map(|(k, m)| d.t(k) * m * d.dt).sum();
        let var: f64 = d.mass.iter().enumerate().map(|(k, m)| (d.t(k) - mean).powi(2) * m * d.dt).sum();
        assert!(mean.abs() < 1e-12);
        // Sheppard's correction: grid variance is sigma^2 + dt^2 / 12.
        assert!((var - 4.0 - 1e-4 / 12.0).abs() < 1e-8, "{var}");
        // Grid points are multiples of dt.
        assert!(((d.origin / d.dt).round() * d.dt - d.origin).abs() < 1e-12);
    }

    #[test]
    fn standard_normal_vpl() {
        let g = Gaussian { mu: 0.0, sigma: 1.0 };
        let v = vpl_from_pdf(&discretize(&g, 0.01).unwrap(), 1e-9).unwrap();
        let exact = norm_quantile(1.0 - 5e-10);
        assert!((v - exact).abs() <= 0.01, "{v} vs {exact}");
    }

    #[test]
    fn gaussian_convolution_matches_closed_form() {
        // Sum of scaled Gaussians is Gaussian with sigma * ||s||.
        let g = Gaussian { mu: 0.0, sigma: 1.5 };
        let s = [0.3, -0.7, 0.5, 0.1];
        let pdf = vertical_pdf(&[g, g, g, g], &s, 0.005).unwrap();
        let sv = 1.5 * s.iter().map(|a| a * a).sum::<f64>().sqrt();
        let oracle = Gaussian { mu: 0.0, sigma: (sv * sv + 4.0 * 0.005f64.powi(2) / 12.0).sqrt() };
        let cum = pdf.cumulative();
        for k in (0..pdf.len()).step_by(37) {
            let edge = pdf.t(k) + 0.5 * pdf.dt;
            assert!((cum[k] - oracle.cdf(edge)).abs() < 2e-5, "{k}");
        }
        let v = vpl_from_pdf(&pdf, 1e-7).unwrap();
        assert!((v - sv * norm_quantile(1.0 - 5e-8)).abs() < 0.01);
    }

    #[test]
    fn fft_equals_naive() {
        let m = Distribution::Mixture(Mixture::bimodal(0.9, 0.0, 1.0, 0.0, 3.0).unwrap());
        let a = discretize_scaled(&m, 0.6, 0.05).unwrap();
        let b = discretize_scaled(&m, 0.8, 0.05).unwrap();
        let c = discretize_scaled(&m, 0.3, 0.05).unwrap();
        let f = convolve_fft(&[a.clone(), b.clone(), c.clone()]).unwrap();
        let n = convolve_naive(&[a, b, c]).unwrap();
        assert_eq!(f.len(), n.len());
        assert!((f.origin - n.origin).abs() < 1e-12);
        let (cf, cn) = (f.cumulative(), n.cumulative());
        let sup = cf.iter().zip(&cn).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
        assert!(sup < 1e-9, "{sup}");
    }

    #[test]
    fn worst_case_selection() {
        let g = |s: f64| Distribution::Gaussian(Gaussian { mu: 0.0, sigma: s });
        assert_eq!(select_worst_case(&[g(1.0), g(2.0), g(1.5)]).unwrap(), 1);
        // Equal variance: the heavier-tailed mixture wins.
        let heavy = Distribution::Mixture(Mixture::bimodal(0.5, 0.0, 1.0, 0.0, 7f64.sqrt()).unwrap());
        assert_eq!(select_worst_case(&[g(2.0), heavy.clone()]).unwrap(), 1);
        // Full tie: lowest index.
        assert_eq!(select_worst_case(&[g(2.0), g(2.0)]).unwrap(), 0);
        assert!(select_worst_case(&[]).is_err());
    }

    #[test]
    fn rejects_bad_grid() {
        let g = Gaussian { mu: 0.0, sigma: 1.0 };
        assert!(discretize(&g, 0.0).is_err());
        assert!(discretize(&g, -1.0).is_err());
        let a = discretize(&g, 0.1).unwrap();
        let b = discretize(&g, 0.2).unwrap();
        assert!(convolve_fft(&[a, b]).is_err());
    }

    #[test]
    fn csv_layout() {
        let d = DiscretePdf { origin: -0.5, dt: 0.5, mass: vec![0.5, 1.0, 0.5] };
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "T,mass\n-0.5,0.5\n0,1\n0.5,0.5\n");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn vpl_grows_with_integrity_requirement(s in 0.5..5.0f64, a in 0.1..1.0f64, b in 0.1..1.0f64) {
            let g = Gaussian { mu: 0.0, sigma: s };
            let pdf = vertical_pdf(&[g, g], &[a, -b], 0.02).unwrap();
            prop_assert!((pdf.total() - 1.0).abs() < 1e-9);
            let v1 = vpl_from_pdf(&pdf, 1e-5).unwrap();
            let v2 = vpl_from_pdf(&pdf, 1e-9).unwrap();
            prop_assert!(v2 >= v1);
        }
    }
}
