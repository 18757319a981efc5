use std::fs::File;
use std::io::Write;
use std::path::{Path, PathBuf};

use lambda_scope::{Error, Result};
use serde::Serialize;

/// CSV file whose first line declares the unit of every column.
pub struct Table {
    path: PathBuf,
    writer: csv::Writer<File>,
}

impl Table {
    /// `notes` become further `#` lines between the units line and the header.
    pub fn create(dir: &Path, name: &str, columns: &[(&str, &str)], notes: &[String]) -> Result<Self> {
        let path = dir.join(name);
        let mut file = File::create(&path)?;
        let units: Vec<String> = columns.iter().map(|(c, u)| format!("{c} [{u}]")).collect();
        writeln!(file, "# units: {}", units.join(", "))?;
        for n in notes {
            writeln!(file, "# {n}")?;
        }
        let mut writer = csv::Writer::from_writer(file);
        writer.write_record(columns.iter().map(|(c, _)| *c)).map_err(csv_err)?;
        Ok(Table { path, writer })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        self.writer.write_record(values.iter().map(|v| v.to_string())).map_err(csv_err)
    }

    /// Row where `None` leaves the field empty.
    pub fn sparse_row(&mut self, values: &[Option<f64>]) -> Result<()> {
        self.writer
            .write_record(values.iter().map(|v| v.map(|x| x.to_string()).unwrap_or_default()))
            .map_err(csv_err)
    }

    pub fn finish(mut self) -> Result<PathBuf> {
        self.writer.flush()?;
        Ok(self.path)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// A headline number with the band it is judged against.
#[derive(Clone, Debug, Serialize)]
pub struct Headline {
    pub name: String,
    pub value: Option<f64>,
    pub tolerance: String,
    pub within: Option<bool>,
}

impl Headline {
    pub fn band(name: impl Into<String>, value: f64, target: f64, tol: f64) -> Self {
        Headline {
            name: name.into(),
            value: Some(value),
            tolerance: format!("{target} ± {tol}"),
            within: Some((value - target).abs() <= tol),
        }
    }

    pub fn at_least(name: impl Into<String>, value: f64, min: f64) -> Self {
        Headline {
            name: name.into(),
            value: Some(value),
            tolerance: format!(">= {min}"),
            within: Some(value >= min),
        }
    }

    pub fn at_most(name: impl Into<String>, value: f64, max: f64) -> Self {
        Headline {
            name: name.into(),
            value: Some(value),
            tolerance: format!("<= {max}"),
            within: Some(value <= max),
        }
    }

    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Headline {
            name: name.into(),
            value: Some(if ok { 1.0 } else { 0.0 }),
            tolerance: "true".into(),
            within: Some(ok),
        }
    }

    /// A number reported without a band.
    pub fn info(name: impl Into<String>, value: Option<f64>) -> Self {
        Headline {
            name: name.into(),
            value,
            tolerance: "none".into(),
            within: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct FigureReport {
    pub command: &'static str,
    pub csv: Vec<PathBuf>,
    pub headlines: Vec<Headline>,
    pub wall_seconds: f64,
    pub dt_ns: f64,
    pub n_a_max: usize,
    pub n_b_max: usize,
    pub workers: usize,
    pub notes: Vec<String>,
}

impl FigureReport {
    pub fn write(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join(format!("{}.summary.json", self.command));
        std::fs::write(&path, serde_json::to_string_pretty(self)?)?;
        Ok(path)
    }
}
