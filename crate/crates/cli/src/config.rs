use std::path::{Path, PathBuf};

use lambda_scope::{BareParams, Error, Result};
use serde::Deserialize;

/// Run configuration. Every grid is optional and falls back to the
/// defaults of the subcommand that reads it.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Inline device parameters.
    pub params: Option<BareParams>,
    /// Device parameters in a separate JSON file, relative to the config.
    pub params_file: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub workers: Option<usize>,
    pub dt: Option<f64>,
    pub n_a_max: Option<usize>,
    pub n_b_max: Option<usize>,

    #[serde(rename = "omega_d_GHz")]
    pub omega_d: Option<Vec<f64>>,
    #[serde(rename = "Omega_d_MHz")]
    pub rabi: Option<Vec<f64>>,
    #[serde(rename = "omega_s_GHz")]
    pub omega_s: Option<Vec<f64>>,
    #[serde(rename = "l_ns")]
    pub lengths: Option<Vec<f64>>,
    #[serde(rename = "Delta_t_ns")]
    pub windows: Option<Vec<f64>>,
    pub n_b: Option<Vec<f64>>,
    #[serde(rename = "Gamma_inv_us")]
    pub lifetimes: Option<Vec<f64>>,
    /// Simulated time after the pulse center for pulse-response (ns).
    #[serde(rename = "t_end_ns")]
    pub t_end: Option<f64>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        if let Some(p) = &cfg.params_file {
            if p.is_relative() {
                cfg.params_file = Some(path.parent().unwrap_or(Path::new(".")).join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.params.is_some() && self.params_file.is_some() {
            return Err(Error::Config("give either params or params_file, not both".into()));
        }
        let grids = [
            ("omega_d_GHz", &self.omega_d),
            ("Omega_d_MHz", &self.rabi),
            ("omega_s_GHz", &self.omega_s),
            ("l_ns", &self.lengths),
            ("Delta_t_ns", &self.windows),
            ("n_b", &self.n_b),
            ("Gamma_inv_us", &self.lifetimes),
        ];
        for (name, grid) in grids {
            if let Some(g) = grid {
                if g.is_empty() {
                    return Err(Error::Config(format!("grid {name} is empty")));
                }
                if g.iter().any(|x| !x.is_finite()) {
                    return Err(Error::Config(format!("grid {name} has a non-finite entry")));
                }
            }
        }
        Ok(())
    }

    /// Device parameters with truncation overrides applied and validated.
    pub fn bare(&self) -> Result<BareParams> {
        let mut bare = match (&self.params, &self.params_file) {
            (Some(p), _) => p.clone(),
            (None, Some(f)) => {
                BareParams::from_json_file(f).map_err(|e| Error::Config(format!("{}: {e}", f.display())))?
            }
            (None, None) => BareParams::default(),
        };
        if let Some(n) = self.n_a_max {
            bare.n_a_max = n;
        }
        if let Some(n) = self.n_b_max {
            bare.n_b_max = n;
        }
        bare.validate()?;
        Ok(bare)
    }

    pub fn dt(&self) -> f64 {
        self.dt.unwrap_or(0.1)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    pub fn out_dir(&self) -> PathBuf {
        self.out.clone().unwrap_or_else(|| PathBuf::from("out"))
    }
}

/// Evenly spaced grid from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![start];
    }
    (0..n).map(|k| start + (stop - start) * k as f64 / (n - 1) as f64).collect()
}
