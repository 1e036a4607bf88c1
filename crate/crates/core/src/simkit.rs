//! Synthetic DGNSS experiments: sky geometry, vertical projection, error
//! injection and per-epoch protection levels for several bounding methods.

use std::collections::BTreeMap;
use std::io::{Read, Write};

use nalgebra::{DMatrix, Matrix4};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_two_step, NavDenBound, NavDenParams, TwoStepConfig};
use crate::dist::Distribution;
use crate::empirical::Ecdf;
use crate::error::{Error, Result};
use crate::nsu::{fit_nsu, NsuConfig};
use crate::numeric::sorted_quantile;
use crate::record::BoundRecord;
use crate::su::{fit_single_gaussian, fit_su, SuTarget};

/// Largest accepted condition number of the normal matrix.
pub const MAX_CONDITION: f64 = 1e10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Satellite {
    pub azimuth_deg: f64,
    pub elevation_deg: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Epoch {
    pub id: usize,
    pub sats: Vec<Satellite>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SkyConfig {
    pub epochs: usize,
    pub satellites: usize,
    pub spacing_s: f64,
}

impl Default for SkyConfig {
    fn default() -> Self {
        SkyConfig { epochs: 100, satellites: 16, spacing_s: 100.0 }
    }
}

const RINGS: [f64; 4] = [30.0, 45.0, 60.0, 75.0];

/// Satellites on four elevation rings whose azimuths advance at different
/// rates. Each satellite also swings +-15 degrees about its ring with its own
/// period; with fixed elevations the vertical row barely changes.
pub fn synthetic_sky(cfg: &SkyConfig) -> Result<Vec<Epoch>> {
    if cfg.satellites < 5 {
        return Err(Error::InvalidParameter(format!("synthetic sky needs at least 5 satellites, got {}", cfg.satellites)));
    }
    if !(cfg.spacing_s > 0.0) {
        return Err(Error::InvalidParameter("epoch spacing must be positive".into()));
    }
    // Degrees per second, one rate per ring.
    let rates = [0.042, -0.031, 0.025, -0.017];
    let golden = 137.507_764;
    Ok((0..cfg.epochs)
        .map(|e| {
            let t = e as f64 * cfg.spacing_s;
            let sats = (0..cfg.satellites)
                .map(|i| {
                    let ring = i % RINGS.len();
                    let period = 6.0 * 3600.0 * (1.0 + 0.3 * (i % 5) as f64);
                    let phase = (golden * i as f64).to_radians();
                    let swing = 15.0 * (std::f64::consts::TAU * t / period + phase).sin();
                    Satellite {
                        azimuth_deg: (golden * i as f64 + rates[ring] * t).rem_euclid(360.0),
                        elevation_deg: RINGS[ring] + swing,
                    }
                })
                .collect();
            Epoch { id: e, sats }
        })
        .collect())
}

#[derive(Debug, Serialize, Deserialize)]
struct GeometryRow {
    epoch_id: usize,
    sat_id: usize,
    azimuth_deg: f64,
    elevation_deg: f64,
}

pub fn write_geometry_csv<W: Write>(epochs: &[Epoch], w: W) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for e in epochs {
        for (i, s) in e.sats.iter().enumerate() {
            out.serialize(GeometryRow { epoch_id: e.id, sat_id: i, azimuth_deg: s.azimuth_deg, elevation_deg: s.elevation_deg })?;
        }
    }
    out.flush()?;
    Ok(())
}

/// Read `epoch_id, sat_id, azimuth_deg, elevation_deg` rows; epochs come back sorted by id.
pub fn read_geometry_csv<R: Read>(r: R) -> Result<Vec<Epoch>> {
    let mut by_epoch: BTreeMap<usize, Vec<(usize, Satellite)>> = BTreeMap::new();
    for row in csv::Reader::from_reader(r).deserialize() {
        let row: GeometryRow = row?;
        if !(row.elevation_deg > 0.0 && row.elevation_deg <= 90.0) {
            return Err(Error::Input(format!("epoch {} sat {}: elevation {} outside (0, 90]", row.epoch_id, row.sat_id, row.elevation_deg)));
        }
        by_epoch
            .entry(row.epoch_id)
            .or_default()
            .push((row.sat_id, Satellite { azimuth_deg: row.azimuth_deg, elevation_deg: row.elevation_deg }));
    }
    if by_epoch.is_empty() {
        return Err(Error::Input("geometry file has no rows".into()));
    }
    Ok(by_epoch
        .into_iter()
        .map(|(id, mut v)| {
            v.sort_by_key(|p| p.0);
            Epoch { id, sats: v.into_iter().map(|p| p.1).collect() }
        })
        .collect())
}

/// Line-of-sight geometry matrix, one `[-cos e sin a, -cos e cos a, -sin e, 1]` row per satellite.
pub fn geometry_matrix(sats: &[Satellite]) -> DMatrix<f64> {
    DMatrix::from_fn(sats.len(), 4, |i, j| {
        let (e, a) = (sats[i].elevation_deg.to_radians(), sats[i].azimuth_deg.to_radians());
        match j {
            0 => -e.cos() * a.sin(),
            1 => -e.cos() * a.cos(),
            2 => -e.sin(),
            _ => 1.0,
        }
    })
}

/// Full projection matrix `S = (H^T W H)^-1 H^T W`.
pub fn projection(sats: &[Satellite], weights: Option<&[f64]>) -> Result<DMatrix<f64>> {
    if sats.len() < 4 {
        return Err(Error::Input(format!("positioning needs at least 4 satellites, got {}", sats.len())));
    }
    let h = geometry_matrix(sats);
    let mut hw = h.transpose();
    if let Some(w) = weights {
        if w.len() != sats.len() || w.iter().any(|v| !(*v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidParameter("weights must be positive, one per satellite".into()));
        }
        for (j, wj) in w.iter().enumerate() {
            hw.column_mut(j).scale_mut(*wj);
        }
    }
    let normal: Matrix4<f64> = (&hw * &h).fixed_view::<4, 4>(0, 0).into_owned();
    let sv = normal.singular_values();
    let cond = sv.max() / sv.min();
    if !(cond <= MAX_CONDITION) {
        return Err(Error::Input(format!("geometry is rank deficient (condition number {cond:.3e})")));
    }
    let inv = normal.try_inverse().ok_or_else(|| Error::Input("geometry is rank deficient".into()))?;
    let inv = DMatrix::from_iterator(4, 4, inv.iter().copied());
    Ok(inv * hw)
}

/// Vertical row of the projection matrix.
pub fn vertical_row(sats: &[Satellite], weights: Option<&[f64]>) -> Result<Vec<f64>> {
    Ok(projection(sats, weights)?.row(2).iter().copied().collect())
}

/// Vertical position error for one set of range errors.
pub fn vpe(s_row: &[f64], errors: &[f64]) -> f64 {
    s_row.iter().zip(errors).map(|(s, e)| s * e).sum()
}

/// Draw one error per satellite and project it.
pub fn run_epoch(s_row: &[f64], model: &Distribution, seed: u64) -> (f64, Vec<f64>) {
    let draws = model.sample_n(&mut ChaCha8Rng::seed_from_u64(seed), s_row.len());
    (vpe(s_row, &draws), draws)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Su,
    Nsu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    CauchyGaussian,
    SingleGaussian,
    TwoStep,
    Navden,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::CauchyGaussian => "cauchy_gaussian",
            Method::SingleGaussian => "single_gaussian",
            Method::TwoStep => "two_step",
            Method::Navden => "navden",
        }
    }
}

/// Settings shared by every fit.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    /// Bias accepted by the single-CDF fits, in standard errors of the mean.
    pub bias_tol_se: Option<f64>,
    pub nsu: NsuConfig,
    pub two_step: TwoStepConfig,
    pub navden: Option<NavDenParams>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FittedMethod {
    pub method: Method,
    pub record: BoundRecord,
    pub report: serde_json::Value,
}

fn bias_tol(samples: &[f64], se: Option<f64>) -> Result<Option<f64>> {
    Ok(match se {
        None => None,
        Some(k) => {
            let e = Ecdf::new(samples)?;
            Some(k * e.std() / (e.len() as f64).sqrt())
        }
    })
}

/// Fit one method to samples.
pub fn fit_method(method: Method, mode: Mode, samples: &[f64], s: &FitSettings) -> Result<FittedMethod> {
    let (record, report) = match (method, mode) {
        (Method::CauchyGaussian, Mode::Su) => {
            let t = SuTarget::from_samples(samples, bias_tol(samples, s.bias_tol_se)?)?;
            let fit = fit_su(&t)?;
            (BoundRecord::CauchyGaussianSu(fit.bound), serde_json::to_value(fit.report)?)
        }
        (Method::SingleGaussian, _) => {
            let t = SuTarget::from_samples(samples, bias_tol(samples, s.bias_tol_se)?)?;
            let sigma_o = fit_single_gaussian(&t)?;
            (BoundRecord::SingleGaussian { sigma_o }, serde_json::json!({ "shift": t.shift(), "n_constraints": t.n_constraints() }))
        }
        (Method::CauchyGaussian, Mode::Nsu) => {
            let fit = fit_nsu(&Ecdf::new(samples)?.corners(), &s.nsu)?;
            (BoundRecord::CauchyGaussianNsu(fit.bound), serde_json::to_value(fit.report)?)
        }
        (Method::TwoStep, _) => {
            let (b, rep) = fit_two_step(&Ecdf::new(samples)?.corners(), &s.two_step)?;
            (BoundRecord::TwoStep(b), serde_json::to_value(rep)?)
        }
        (Method::Navden, _) => {
            let params = s.navden.ok_or_else(|| {
                Error::Input(format!("navden needs a parameter file with fields: {}", NavDenParams::FIELDS))
            })?;
            let b = NavDenBound::fit(params, &Ecdf::new(samples)?.corners())?;
            let q = b.q_scale;
            (BoundRecord::Navden(b), serde_json::json!({ "q_scale": q }))
        }
    };
    Ok(FittedMethod { method, record, report })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub mode: Mode,
    pub seed: u64,
    pub n_samples: usize,
    pub p_hmi: f64,
    pub dt: f64,
    pub methods: Vec<Method>,
    pub error_model: Distribution,
    pub sky: SkyConfig,
    pub fit: FitSettings,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            mode: Mode::Su,
            seed: 0,
            n_samples: 100_000,
            p_hmi: 1e-9,
            dt: 0.01,
            methods: vec![Method::CauchyGaussian, Method::SingleGaussian],
            error_model: Distribution::Mixture(
                crate::dist::Mixture::bimodal(0.9, 0.0, 1.0, 0.0, 10.0).expect("valid default mixture"),
            ),
            sky: SkyConfig::default(),
            fit: FitSettings::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        self.error_model.validate()?;
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods to compare".into()));
        }
        if self.n_samples < 10 {
            return Err(Error::InvalidParameter("n_samples must be at least 10".into()));
        }
        if !(self.p_hmi > 0.0 && self.p_hmi < 1.0) || !(self.dt > 0.0) {
            return Err(Error::InvalidParameter("p_hmi must be in (0, 1) and dt positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochResult {
    pub epoch_id: usize,
    pub n_sats: usize,
    pub vpe: f64,
    pub vpl: BTreeMap<Method, f64>,
}

/// Distribution summary in the mean/max/min/quartile layout.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub q1: f64,
    pub q2: f64,
    pub q3: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Result<Self> {
        if values.is_empty() || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("summary needs finite values".into()));
        }
        let mut v = values.to_vec();
        v.sort_by(|a, b| a.total_cmp(b));
        Ok(Summary {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            max: v[v.len() - 1],
            min: v[0],
            q1: sorted_quantile(&v, 0.25),
            q2: sorted_quantile(&v, 0.5),
            q3: sorted_quantile(&v, 0.75),
        })
    }
}

/// Per-epoch reduction of `ours` against `baseline`, in percent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub ours: Method,
    pub baseline: Method,
    pub reduction_pct: Summary,
    /// Reduction of the average VPL, in percent.
    pub average_reduction_pct: f64,
    pub ours_always_lower: bool,
}

pub fn compare(epochs: &[EpochResult], ours: Method, baseline: Method) -> Result<Comparison> {
    let pairs: Vec<(f64, f64)> = epochs
        .iter()
        .map(|e| match (e.vpl.get(&ours), e.vpl.get(&baseline)) {
            (Some(a), Some(b)) => Ok((*a, *b)),
            _ => Err(Error::InvalidParameter(format!("missing VPL for {} or {}", ours.as_str(), baseline.as_str()))),
        })
        .collect::<Result<_>>()?;
    let red: Vec<f64> = pairs.iter().map(|(a, b)| 100.0 * (1.0 - a / b)).collect();
    let ma = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
    let mb = pairs.iter().map(|p| p.1).sum::<f64>() / pairs.len() as f64;
    Ok(Comparison {
        ours,
        baseline,
        reduction_pct: Summary::of(&red)?,
        average_reduction_pct: 100.0 * (1.0 - ma / mb),
        ours_always_lower: pairs.iter().all(|(a, b)| a < b),
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ExperimentReport {
    pub fits: Vec<FittedMethod>,
    pub epochs: Vec<EpochResult>,
    pub vpl_summary: BTreeMap<Method, Summary>,
    pub comparisons: Vec<Comparison>,
}

impl ExperimentReport {
    pub fn write_epochs_csv<W: Write>(&self, w: W) -> Result<()> {
        let methods: Vec<Method> = self.fits.iter().map(|f| f.method).collect();
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["epoch_id".to_string(), "n_sats".into(), "vpe".into()];
        header.extend(methods.iter().map(|m| format!("vpl_{}", m.as_str())));
        out.write_record(&header)?;
        for e in &self.epochs {
            let mut row = vec![e.epoch_id.to_string(), e.n_sats.to_string(), e.vpe.to_string()];
            row.extend(methods.iter().map(|m| e.vpl[m].to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Fit every method once on a pooled sample, then evaluate all epochs.
///
/// The first listed method is compared against each of the others.
pub fn run_experiment(cfg: &ExperimentConfig, sky: &[Epoch]) -> Result<ExperimentReport> {
    cfg.validate()?;
    let samples = cfg.error_model.sample_n(&mut ChaCha8Rng::seed_from_u64(cfg.seed), cfg.n_samples);
    let fits = cfg
        .methods
        .iter()
        .map(|m| fit_method(*m, cfg.mode, &samples, &cfg.fit))
        .collect::<Result<Vec<_>>>()?;
    let prepared = fits.iter().map(|f| f.record.prepare()).collect::<Result<Vec<_>>>()?;
    let epochs = sky
        .par_iter()
        .map(|ep| {
            let s = vertical_row(&ep.sats, None)?;
            // Epoch draws use their own stream so results do not depend on scheduling.
            let (v, _) = run_epoch(&s, &cfg.error_model, cfg.seed.wrapping_add(1).wrapping_add(ep.id as u64) ^ 0x9E37_79B9);
            let mut vpl = BTreeMap::new();
            for (f, p) in fits.iter().zip(&prepared) {
                vpl.insert(f.method, p.vpl(&s, cfg.dt, cfg.p_hmi)?);
            }
            Ok(EpochResult { epoch_id: ep.id, n_sats: ep.sats.len(), vpe: v, vpl })
        })
        .collect::<Result<Vec<_>>>()?;
    let mut vpl_summary = BTreeMap::new();
    for f in &fits {
        let v: Vec<f64> = epochs.iter().map(|e| e.vpl[&f.method]).collect();
        vpl_summary.insert(f.method, Summary::of(&v)?);
    }
    let comparisons = cfg.methods[1..]
        .iter()
        .map(|b| compare(&epochs, cfg.methods[0], *b))
        .collect::<Result<Vec<_>>>()?;
    Ok(ExperimentReport { fits, epochs, vpl_summary, comparisons })
}

/// Replace the weight of the first component of a two-component mixture.
pub fn with_first_weight(model: &Distribution, p1: f64) -> Result<Distribution> {
    match model {
        Distribution::Mixture(m) if m.components.len() == 2 => {
            let mix = crate::dist::Mixture::new(vec![p1, 1.0 - p1], m.components.clone())?;
            Ok(Distribution::Mixture(mix))
        }
        _ => Err(Error::Input("a p1 sweep needs a two-component mixture error model".into())),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepPoint {
    pub p1: f64,
    pub report: ExperimentReport,
}

/// Run the experiment once per first-component weight.
pub fn run_sweep(cfg: &ExperimentConfig, sky: &[Epoch], p1s: &[f64]) -> Result<Vec<SweepPoint>> {
    p1s.iter()
        .map(|&p1| {
            let c = ExperimentConfig { error_model: with_first_weight(&cfg.error_model, p1)?, ..cfg.clone() };
            Ok(SweepPoint { p1, report: run_experiment(&c, sky)? })
        })
        .collect()
}
