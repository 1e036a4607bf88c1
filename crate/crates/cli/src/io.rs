//! File helpers: parameter files, bound files and output sinks.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use overbound::baselines::NavDenParams;
use overbound::dist::{Cdf, Distribution};
use overbound::record::{BoundRecord, Prepared};
use overbound::{Error, Result};
use serde::de::DeserializeOwned;

pub fn sink(out: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match out {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn read_to_string(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| Error::Input(format!("{}: {e}", path.display())))
}

/// TOML unless the extension says JSON.
pub fn read_structured<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = read_to_string(path)?;
    if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json")) {
        Ok(serde_json::from_str(&text)?)
    } else {
        Ok(toml::from_str(&text)?)
    }
}

pub fn read_navden_params(path: Option<&Path>) -> Result<Option<NavDenParams>> {
    path.map(|p| {
        read_structured::<NavDenParams>(p).map_err(|e| {
            Error::Input(format!("{}: {e}; required fields: {}", p.display(), NavDenParams::FIELDS))
        })
    })
    .transpose()
}

/// A bound file: a fitted record (tagged by `method`) or a plain distribution (tagged by `type`).
pub enum Curve {
    Bound(&'static str, Prepared),
    Dist(Distribution),
}

impl Curve {
    pub fn read(path: &Path) -> Result<Self> {
        let v: serde_json::Value = serde_json::from_str(&read_to_string(path)?)?;
        if v.get("method").is_some() {
            let r: BoundRecord = serde_json::from_value(v)?;
            Ok(Curve::Bound(r.name(), r.prepare()?))
        } else if v.get("type").is_some() {
            let d: Distribution = serde_json::from_value(v)?;
            d.validate()?;
            Ok(Curve::Dist(d))
        } else {
            Err(Error::Input(format!("{}: neither a bound record (\"method\") nor a distribution (\"type\")", path.display())))
        }
    }

    pub fn method(&self) -> &'static str {
        match self {
            Curve::Bound(name, _) => name,
            Curve::Dist(_) => "distribution",
        }
    }

    /// Single-curve CDF: the analog single CDF of a pair.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Curve::Bound(_, b) => b.analog_cdf(x),
            Curve::Dist(d) => d.cdf(x),
        }
    }

    pub fn sf(&self, x: f64) -> f64 {
        match self {
            Curve::Bound(_, b) => 1.0 - b.analog_cdf(x),
            Curve::Dist(d) => d.sf(x),
        }
    }

    pub fn pdf(&self, x: f64) -> f64 {
        match self {
            Curve::Bound(_, b) => b.analog_pdf(x),
            Curve::Dist(d) => d.pdf(x),
        }
    }

    pub fn halves(&self, x: f64) -> (f64, f64) {
        use overbound::paired::PairedBound;
        match self {
            Curve::Bound(_, b) => (b.left_cdf(x), b.right_cdf(x)),
            Curve::Dist(d) => (d.cdf(x), d.cdf(x)),
        }
    }
}

/// Position-domain view: the right bound of a record, or the distribution itself.
impl Cdf for Curve {
    fn cdf(&self, x: f64) -> f64 {
        match self {
            Curve::Bound(_, b) => b.cdf(x),
            Curve::Dist(d) => d.cdf(x),
        }
    }
    fn sf(&self, x: f64) -> f64 {
        match self {
            Curve::Bound(_, b) => b.sf(x),
            Curve::Dist(d) => d.sf(x),
        }
    }
    fn quantile(&self, p: f64) -> f64 {
        match self {
            Curve::Bound(_, b) => b.quantile(p),
            Curve::Dist(d) => d.quantile(p),
        }
    }
}

pub fn label(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| path.display().to_string())
}

pub fn ensure_dir(dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir)?;
    Ok(dir.to_path_buf())
}
