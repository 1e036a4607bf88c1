//! Empirical CDFs and the point sets that overbounds are checked against.

use serde::{Deserialize, Serialize};
use std::path::Path;

use crate::dist::Cdf;
use crate::error::{Error, Result};

/// Right-continuous empirical CDF of a sample.
#[derive(Debug, Clone)]
pub struct Ecdf {
    sorted: Vec<f64>,
    /// Distinct sample values.
    unique: Vec<f64>,
    /// Number of samples `<= unique[i]`.
    counts: Vec<usize>,
}

impl Ecdf {
    pub fn new(samples: &[f64]) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::Input("empty sample".into()));
        }
        if let Some(bad) = samples.iter().find(|x| !x.is_finite()) {
            return Err(Error::Input(format!("non-finite sample value {bad}")));
        }
        let mut sorted = samples.to_vec();
        sorted.sort_by(|a, b| a.total_cmp(b));
        let mut unique = Vec::new();
        let mut counts = Vec::new();
        for (i, &x) in sorted.iter().enumerate() {
            if unique.last() == Some(&x) {
                *counts.last_mut().unwrap() = i + 1;
            } else {
                unique.push(x);
                counts.push(i + 1);
            }
        }
        Ok(Ecdf { sorted, unique, counts })
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn unique(&self) -> &[f64] {
        &self.unique
    }

    /// F_e(x) = #{x_i <= x} / n.
    pub fn value(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&s| s <= x);
        k as f64 / self.len() as f64
    }

    /// F_e(x-) = #{x_i < x} / n.
    pub fn left_limit(&self, x: f64) -> f64 {
        let k = self.sorted.partition_point(|&s| s < x);
        k as f64 / self.len() as f64
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.len() as f64
    }

    /// Sample standard deviation (n - 1 denominator).
    pub fn std(&self) -> f64 {
        let n = self.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        (self.sorted.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    /// Step corners at every distinct sample value.
    pub fn corners(&self) -> DominanceTarget {
        let n = self.len() as f64;
        let mut lower = Vec::with_capacity(self.unique.len());
        let mut upper = Vec::with_capacity(self.unique.len());
        let mut prev = 0usize;
        for &c in &self.counts {
            lower.push(prev as f64 / n);
            upper.push(c as f64 / n);
            prev = c;
        }
        DominanceTarget { x: self.unique.clone(), lower, upper, kind: TargetKind::Empirical }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    Empirical,
    Analytic,
}

/// Abscissae with the lowest and highest CDF value the target takes there.
///
/// For an ECDF `lower` is the left limit and `upper` the value at the step;
/// for a continuous target both are equal. A left (upper) bound must satisfy
/// `F_L(x) >= upper`, a right (lower) bound `F_R(x) <= lower`.
#[derive(Debug, Clone)]
pub struct DominanceTarget {
    pub x: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub kind: TargetKind,
}

impl DominanceTarget {
    /// Probability-spaced grid of `n` points covering `[tail_prob, 1 - tail_prob]`.
    pub fn analytic<D: Cdf>(dist: &D, n: usize, tail_prob: f64) -> Result<Self> {
        if n < 2 || !(tail_prob > 0.0 && tail_prob < 0.5) {
            return Err(Error::InvalidParameter(format!("analytic grid needs n >= 2 and 0 < tail_prob < 0.5, got {n}, {tail_prob}")));
        }
        let mut x = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let p = tail_prob + (1.0 - 2.0 * tail_prob) * i as f64 / (n - 1) as f64;
            let xi = dist.quantile(p);
            if !xi.is_finite() {
                return Err(Error::Numeric(format!("quantile at p={p} is not finite")));
            }
            x.push(xi);
            v.push(dist.cdf(xi));
        }
        Ok(DominanceTarget { x, lower: v.clone(), upper: v, kind: TargetKind::Analytic })
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    /// The target of the negated variable, `x -> -x`.
    pub fn mirrored(&self) -> Self {
        let rev = |v: &[f64]| v.iter().rev().map(|p| 1.0 - p).collect::<Vec<_>>();
        DominanceTarget {
            x: self.x.iter().rev().map(|x| -x).collect(),
            lower: rev(&self.upper),
            upper: rev(&self.lower),
            kind: self.kind,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Most negative slack of a candidate left bound; corners at probability one are skipped.
    pub fn left_margin(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut worst = f64::INFINITY;
        for (x, u) in self.x.iter().zip(&self.upper) {
            if *u >= 1.0 {
                continue;
            }
            worst = worst.min(cdf(*x) - u);
        }
        worst
    }

    /// Most negative slack of a candidate right bound; corners at probability zero are skipped.
    pub fn right_margin(&self, cdf: impl Fn(f64) -> f64) -> f64 {
        let mut worst = f64::INFINITY;
        for (x, l) in self.x.iter().zip(&self.lower) {
            if *l <= 0.0 {
                continue;
            }
            worst = worst.min(l - cdf(*x));
        }
        worst
    }

    /// Early-exit check that a left bound dominates every corner.
    pub fn left_ok(&self, cdf: impl Fn(f64) -> f64, tol: f64) -> bool {
        self.x.iter().zip(&self.upper).all(|(x, u)| *u >= 1.0 || cdf(*x) >= u - tol)
    }

    /// Early-exit check that a right bound stays below every corner.
    pub fn right_ok(&self, cdf: impl Fn(f64) -> f64, tol: f64) -> bool {
        self.x.iter().zip(&self.lower).all(|(x, l)| *l <= 0.0 || cdf(*x) <= l + tol)
    }
}

/// Read one numeric column from a headed CSV file.
pub fn read_samples_csv(path: &Path, column: &str) -> Result<Vec<f64>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    let idx = headers
        .iter()
        .position(|h| h.trim() == column)
        .ok_or_else(|| Error::Input(format!("column '{column}' not found in {}", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec.get(idx).unwrap_or("").trim();
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Input(format!("row {}: cannot parse '{field}' as a number", line + 2)))?;
        if !v.is_finite() {
            return Err(Error::Input(format!("row {}: non-finite value", line + 2)));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Input(format!("no samples in {}", path.display())));
    }
    Ok(out)
}
