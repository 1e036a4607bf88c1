use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use overbound::dfo::write_trace_csv;
use overbound::empirical::{read_samples_csv, Ecdf};
use overbound::nsu::fit_nsu;
use overbound::numeric::norm_quantile;
use overbound::posdom::vpl_shared;
use overbound::record::BoundRecord;
use overbound::simkit::{
    fit_method, read_geometry_csv, run_experiment, run_sweep, synthetic_sky, vertical_row, Epoch, ExperimentConfig,
    ExperimentReport, FitSettings, Method, Mode, SkyConfig,
};
use overbound::{Error, Result};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::io::{ensure_dir, label, read_navden_params, read_structured, sink, Curve};
use crate::{CurvesArgs, ExperimentArgs, FitArgs, NavdenTableArgs, SkyArgs, VplArgs};

fn write_json(out: Option<&Path>, v: &Value) -> Result<()> {
    let mut w = sink(out)?;
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Record fields with the fit report alongside.
fn record_json(record: &BoundRecord, report: Value, extra: &[(&str, Value)]) -> Result<Value> {
    let mut v = serde_json::to_value(record)?;
    let obj = v.as_object_mut().expect("records serialize as objects");
    obj.insert("report".into(), report);
    for (k, x) in extra {
        obj.insert((*k).into(), x.clone());
    }
    Ok(v)
}

pub fn fit(a: FitArgs) -> Result<()> {
    let samples = read_samples_csv(&a.samples, &a.column)?;
    let mode: Mode = a.mode.into();
    let method: Method = a.method.into();
    let mut settings = FitSettings {
        bias_tol_se: a.bias_tol_se,
        navden: read_navden_params(a.navden_params.as_deref())?,
        ..FitSettings::default()
    };
    settings.nsu.seed = a.seed;
    if let Some(b) = a.budget {
        settings.nsu.budget = b;
    }
    let extra = [("seed", json!(a.seed)), ("n_samples", json!(samples.len()))];

    // Paired fits go through the family fitter directly so the optimizer traces are available.
    if method == Method::CauchyGaussian && mode == Mode::Nsu {
        let fit = fit_nsu(&Ecdf::new(&samples)?.corners(), &settings.nsu)?;
        if let Some(dir) = &a.trace_dir {
            ensure_dir(dir)?;
            write_trace_csv(&fit.cgcm.trace, File::create(dir.join("trace_cgcm.csv"))?)?;
            write_trace_csv(&fit.gaussian.trace, File::create(dir.join("trace_gaussian.csv"))?)?;
        }
        let rec = BoundRecord::CauchyGaussianNsu(fit.bound);
        return write_json(a.out.as_deref(), &record_json(&rec, serde_json::to_value(&fit.report)?, &extra)?);
    }
    if a.trace_dir.is_some() {
        return Err(Error::Input("--trace-dir applies to --mode nsu --method cauchy-gaussian only".into()));
    }
    let fitted = fit_method(method, mode, &samples, &settings).map_err(|e| match e {
        Error::Input(m) if mode == Mode::Su && m.contains("bias") => Error::Input(format!("{m} (--mode nsu)")),
        e => e,
    })?;
    write_json(a.out.as_deref(), &record_json(&fitted.record, fitted.report, &extra)?)
}

pub fn curves(a: CurvesArgs) -> Result<()> {
    if !(a.x_min.is_finite() && a.x_max.is_finite() && a.x_min < a.x_max) {
        return Err(Error::Input("need finite --x-min < --x-max".into()));
    }
    if a.points < 2 {
        return Err(Error::Input("--points must be at least 2".into()));
    }
    let c = Curve::read(&a.bound)?;
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    w.write_record(["x", "cdf", "pdf", "quantile_scale_cdf", "folded_cdf", "left_cdf", "right_cdf"])?;
    let step = (a.x_max - a.x_min) / (a.points - 1) as f64;
    for i in 0..a.points {
        let x = if i + 1 == a.points { a.x_max } else { a.x_min + step * i as f64 };
        let f = c.cdf(x);
        let folded = f.min(c.sf(x));
        let (l, r) = c.halves(x);
        let row = [x, f, c.pdf(x), norm_quantile(f), folded, l, r];
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

fn load_sky(args: &SkyArgs, base: SkyConfig, file: Option<&Path>) -> Result<Vec<Epoch>> {
    match args.geometry.as_deref().or(file) {
        Some(p) => {
            if args.epochs.is_some() || args.satellites.is_some() {
                return Err(Error::Input("--epochs/--satellites apply to the synthetic sky only".into()));
            }
            let f = File::open(p).map_err(|e| Error::Input(format!("{}: {e}", p.display())))?;
            read_geometry_csv(f)
        }
        None => {
            let cfg = SkyConfig {
                epochs: args.epochs.unwrap_or(base.epochs),
                satellites: args.satellites.unwrap_or(base.satellites),
                ..base
            };
            synthetic_sky(&cfg)
        }
    }
}

pub fn vpl(a: VplArgs) -> Result<()> {
    let bounds = a.bounds.iter().map(|p| Ok((label(p), Curve::read(p)?))).collect::<Result<Vec<_>>>()?;
    let sky = load_sky(&a.sky, SkyConfig::default(), None)?;
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    w.write_record(["epoch_id", "bound", "method", "vpl"])?;
    for ep in &sky {
        let s = vertical_row(&ep.sats, None).map_err(|e| Error::Input(format!("epoch {}: {e}", ep.id)))?;
        for (name, c) in &bounds {
            let v = vpl_shared(c, &s, a.dt, a.p_hmi)?;
            w.write_record([ep.id.to_string(), name.clone(), c.method().to_string(), v.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Deserialize)]
struct ExperimentFile {
    #[serde(flatten)]
    config: ExperimentConfig,
    /// Weights of the first mixture component; a sweep when present.
    #[serde(default)]
    sweep_p1: Option<Vec<f64>>,
    /// Geometry CSV, relative to the config file.
    #[serde(default)]
    geometry_file: Option<PathBuf>,
}

fn summary_json(r: &ExperimentReport) -> Value {
    json!({
        "fits": r.fits,
        "vpl_summary": r.vpl_summary,
        "comparisons": r.comparisons,
    })
}

pub fn experiment(a: ExperimentArgs) -> Result<()> {
    let file: ExperimentFile = read_structured(&a.config)?;
    let mut cfg = file.config;
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let geometry = file.geometry_file.map(|g| match a.config.parent() {
        Some(dir) if g.is_relative() => dir.join(g),
        _ => g,
    });
    let sky = load_sky(&a.sky, cfg.sky.clone(), geometry.as_deref())?;
    let out = ensure_dir(&a.out)?;
    let mut summary = json!({ "seed": cfg.seed, "epochs": sky.len(), "config": cfg });
    match &file.sweep_p1 {
        None => {
            let r = run_experiment(&cfg, &sky)?;
            r.write_epochs_csv(File::create(out.join("epochs.csv"))?)?;
            summary["result"] = summary_json(&r);
        }
        Some(p1s) => {
            let points = run_sweep(&cfg, &sky, p1s)?;
            let mut sweep = Vec::new();
            for p in &points {
                p.report.write_epochs_csv(File::create(out.join(format!("epochs_p1_{}.csv", p.p1)))?)?;
                let mut s = summary_json(&p.report);
                s["p1"] = json!(p.p1);
                sweep.push(s);
            }
            summary["sweep"] = Value::Array(sweep);
        }
    }
    write_json(Some(&out.join("summary.json")), &summary)
}

pub fn navden_table(a: NavdenTableArgs) -> Result<()> {
    let params = read_navden_params(a.params.as_deref())?.unwrap_or_default();
    let rows = params.table()?;
    let mut w = csv::Writer::from_writer(sink(a.out.as_deref())?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
