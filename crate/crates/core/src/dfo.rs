//! Mesh adaptive direct search with an extreme barrier.
//!
//! Each iteration polls several positive spanning sets, each built from a randomly
//! rotated orthogonal basis (Householder reflection of a seeded random direction).
//! Infeasible or non-finite points are rejected outright. The mesh doubles
//! after a successful poll and halves after a failed one; the search stops
//! when the mesh falls below `min_mesh` or the evaluation budget runs out.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Black-box problem handed to [`minimize`].
pub trait Problem: Sync {
    fn dim(&self) -> usize;
    fn feasible(&self, x: &[f64]) -> bool;
    /// Only called on feasible points.
    fn objective(&self, x: &[f64]) -> f64;
    /// Move an infeasible start towards feasibility; `None` gives up.
    fn restore(&self, _x: &[f64]) -> Option<Vec<f64>> {
        None
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SearchConfig {
    pub initial_point: Vec<f64>,
    /// Per-parameter starting step.
    pub initial_mesh: Vec<f64>,
    pub budget: usize,
    /// Stop once the mesh size (parameter units) drops below this.
    pub min_mesh: f64,
    /// Points below these are treated as infeasible.
    pub lower_bounds: Vec<f64>,
    pub seed: u64,
}

impl SearchConfig {
    pub fn new(initial_point: Vec<f64>, initial_mesh: Vec<f64>) -> Self {
        let n = initial_point.len();
        SearchConfig {
            initial_point,
            initial_mesh,
            budget: 5000,
            min_mesh: 1e-5,
            lower_bounds: vec![f64::NEG_INFINITY; n],
            seed: 0,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.initial_point.len();
        if n == 0 || self.initial_mesh.len() != n || self.lower_bounds.len() != n {
            return Err(Error::InvalidParameter("search dimensions do not match".into()));
        }
        if self.budget == 0 {
            return Err(Error::InvalidParameter("evaluation budget must be positive".into()));
        }
        if !(self.min_mesh > 0.0) || self.initial_mesh.iter().any(|m| !(*m > self.min_mesh)) {
            return Err(Error::InvalidParameter("initial mesh must exceed min_mesh > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub iteration: usize,
    pub point: Vec<f64>,
    /// +inf for rejected points.
    pub value: f64,
    pub feasible: bool,
    pub mesh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    MeshConverged,
    BudgetExhausted,
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub point: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub stop: StopReason,
    pub trace: Vec<Evaluation>,
}

/// Rotated spanning sets polled per iteration.
const POLL_SETS: usize = 4;

fn poll_directions(rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let norm = v.iter().map(|a| a * a).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|a| *a /= norm);
    } else {
        v[0] = 1.0;
    }
    // Columns of H = I - 2 v v^T form an orthonormal basis.
    let mut dirs = Vec::with_capacity(2 * n);
    for j in 0..n {
        let col: Vec<f64> = (0..n).map(|i| f64::from(u8::from(i == j)) - 2.0 * v[i] * v[j]).collect();
        dirs.push(col.iter().map(|a| -a).collect());
        dirs.push(col);
    }
    dirs
}

/// Minimize `problem` from `config.initial_point`.
pub fn minimize<P: Problem>(problem: &P, config: &SearchConfig) -> Result<SearchResult> {
    config.validate()?;
    let n = config.initial_point.len();
    if problem.dim() != n {
        return Err(Error::InvalidParameter(format!("problem has {} parameters, start has {n}", problem.dim())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut trace = Vec::new();
    let scale_max = config.initial_mesh.iter().cloned().fold(0.0, f64::max);
    let scales: Vec<f64> = config.initial_mesh.iter().map(|m| m / scale_max).collect();
    let mut mesh = scale_max;
    let max_mesh = scale_max * 64.0;

    let in_bounds = |x: &[f64]| x.iter().zip(&config.lower_bounds).all(|(a, b)| a.is_finite() && a >= b);
    let evaluate = |x: &[f64]| -> (bool, f64) {
        if !in_bounds(x) || !problem.feasible(x) {
            return (false, f64::INFINITY);
        }
        let v = problem.objective(x);
        if v.is_finite() {
            (true, v)
        } else {
            (false, f64::INFINITY)
        }
    };

    // Feasibility restoration.
    let mut x = config.initial_point.clone();
    let (mut ok, mut fx) = evaluate(&x);
    trace.push(Evaluation { iteration: 0, point: x.clone(), value: fx, feasible: ok, mesh });
    while !ok {
        if trace.len() >= config.budget {
            return Err(Error::Infeasible("no feasible point found within the evaluation budget".into()));
        }
        x = problem
            .restore(&x)
            .ok_or_else(|| Error::Infeasible("initial point infeasible and cannot be restored".into()))?;
        let r = evaluate(&x);
        ok = r.0;
        fx = r.1;
        trace.push(Evaluation { iteration: 0, point: x.clone(), value: fx, feasible: ok, mesh });
    }

    let mut iteration = 0;
    let mut last_step: Option<Vec<f64>> = None;
    let stop = loop {
        if mesh < config.min_mesh {
            break StopReason::MeshConverged;
        }
        if trace.len() >= config.budget {
            break StopReason::BudgetExhausted;
        }
        iteration += 1;
        let mut candidates: Vec<Vec<f64>> = Vec::new();
        // Search step: repeat the last successful move.
        if let Some(step) = &last_step {
            candidates.push(x.iter().zip(step).map(|(a, s)| a + s).collect());
        }
        let mut dirs = Vec::with_capacity(2 * n * POLL_SETS);
        for _ in 0..POLL_SETS {
            dirs.extend(poll_directions(&mut rng, n));
        }
        for d in dirs {
            candidates.push(x.iter().zip(&d).zip(&scales).map(|((a, di), s)| a + mesh * s * di).collect());
        }
        let room = config.budget - trace.len();
        candidates.truncate(room);
        let results: Vec<(bool, f64)> = candidates.par_iter().map(|c| evaluate(c)).collect();
        let mut best: Option<usize> = None;
        for (i, (c, &(feas, v))) in candidates.iter().zip(&results).enumerate() {
            trace.push(Evaluation { iteration, point: c.clone(), value: v, feasible: feas, mesh });
            if feas && v < fx && best.is_none_or(|b| v < results[b].1) {
                best = Some(i);
            }
        }
        match best {
            Some(i) => {
                let step: Vec<f64> = candidates[i].iter().zip(&x).map(|(a, b)| a - b).collect();
                x = candidates[i].clone();
                fx = results[i].1;
                last_step = Some(step);
                mesh = (mesh * 2.0).min(max_mesh);
            }
            None => {
                last_step = None;
                mesh *= 0.5;
            }
        }
    };
    Ok(SearchResult { point: x, value: fx, evaluations: trace.len(), stop, trace })
}

/// Write a trace as CSV with columns iteration, point, value, feasible, mesh.
/// Points are `;`-separated inside one column.
pub fn write_trace_csv<W: std::io::Write>(trace: &[Evaluation], w: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["iteration", "point", "value", "feasible", "mesh"])?;
    for e in trace {
        let p: Vec<String> = e.point.iter().map(|v| format!("{v}")).collect();
        wtr.write_record([
            e.iteration.to_string(),
            p.join(";"),
            format!("{}", e.value),
            e.feasible.to_string(),
            format!("{}", e.mesh),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    struct Quadratic {
        c: Vec<f64>,
    }

    impl Problem for Quadratic {
        fn dim(&self) -> usize {
            self.c.len()
        }
        fn feasible(&self, _x: &[f64]) -> bool {
            true
        }
        fn objective(&self, x: &[f64]) -> f64 {
            x.iter().zip(&self.c).map(|(a, b)| (a - b) * (a - b)).sum()
        }
    }

    /// Minimum on the constraint boundary x + y >= 1.
    struct Constrained;

    impl Problem for Constrained {
        fn dim(&self) -> usize {
            2
        }
        fn feasible(&self, x: &[f64]) -> bool {
            x[0] + x[1] >= 1.0
        }
        fn objective(&self, x: &[f64]) -> f64 {
            x[0] * x[0] + 2.0 * x[1] * x[1]
        }
        fn restore(&self, x: &[f64]) -> Option<Vec<f64>> {
            Some(x.iter().map(|a| a + 1.0).collect())
        }
    }

    #[test]
    fn converges_on_quadratic() {
        let p = Quadratic { c: vec![1.5, -0.25] };
        let cfg = SearchConfig::new(vec![0.0, 0.0], vec![0.5, 0.5]);
        let r = minimize(&p, &cfg).unwrap();
        assert_eq!(r.stop, StopReason::MeshConverged);
        assert!(r.value < 1e-8, "{}", r.value);
    }

    #[test]
    fn handles_active_constraint_and_restoration() {
        let mut cfg = SearchConfig::new(vec![-2.0, -2.0], vec![0.5, 0.5]);
        cfg.min_mesh = 1e-7;
        let r = minimize(&Constrained, &cfg).unwrap();
        // Optimum at (2/3, 1/3) with value 2/3.
        assert!((r.value - 2.0 / 3.0).abs() < 1e-4, "{}", r.value);
        assert!(r.trace.iter().take(3).any(|e| !e.feasible));
    }

    #[test]
    fn respects_lower_bounds_and_budget() {
        let p = Quadratic { c: vec![-3.0] };
        let mut cfg = SearchConfig::new(vec![1.0], vec![0.5]);
        cfg.lower_bounds = vec![0.0];
        cfg.budget = 40;
        let r = minimize(&p, &cfg).unwrap();
        assert!(r.point[0] >= 0.0);
        assert!(r.trace.len() <= 40);
        assert!(r.point[0] < 1e-3 || r.stop == StopReason::BudgetExhausted);
    }

    #[test]
    fn same_seed_same_trace() {
        let p = Quadratic { c: vec![0.3, 0.7, -1.0] };
        let cfg = SearchConfig::new(vec![0.0; 3], vec![1.0; 3]);
        let a = minimize(&p, &cfg).unwrap();
        let b = minimize(&p, &cfg).unwrap();
        assert_eq!(a.trace, b.trace);
    }

    #[test]
    fn rejects_bad_config() {
        let p = Quadratic { c: vec![0.0] };
        let mut cfg = SearchConfig::new(vec![0.0], vec![1e-9]);
        assert!(minimize(&p, &cfg).is_err());
        cfg.initial_mesh = vec![1.0];
        cfg.budget = 0;
        assert!(minimize(&p, &cfg).is_err());
    }

    #[test]
    fn trace_csv_has_header() {
        let p = Quadratic { c: vec![0.0, 1.0] };
        let r = minimize(&p, &SearchConfig::new(vec![0.0, 0.0], vec![1.0, 1.0])).unwrap();
        let mut buf = Vec::new();
        write_trace_csv(&r.trace, &mut buf).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.starts_with("iteration,point,value,feasible,mesh\n"));
        assert_eq!(s.lines().count(), r.trace.len() + 1);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn incumbent_never_worsens(c0 in -5.0..5.0f64, c1 in -5.0..5.0f64, seed in 0u64..1000) {
            let p = Quadratic { c: vec![c0, c1] };
            let mut cfg = SearchConfig::new(vec![0.0, 0.0], vec![1.0, 1.0]);
            cfg.seed = seed;
            let r = minimize(&p, &cfg).unwrap();
            let mut best = f64::INFINITY;
            for e in &r.trace {
                if e.feasible {
                    best = best.min(e.value);
                }
            }
            prop_assert_eq!(best, r.value);
            prop_assert!(r.value < 1e-6);
        }
    }
}
