//! Settings file and flag merging. Flags win over the file, the file over defaults.

use std::fmt::Display;
use std::path::Path;

use serde::Deserialize;

use conical::Error;

/// Every key a settings file may set. Names match the long flags with `_` for `-`.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub solver: Option<String>,
    pub noise: Option<f64>,
    pub readout: Option<f64>,
    pub seed: Option<u64>,
    pub trotter: Option<String>,
    pub eta: Option<f64>,
    pub cqe_max_iter: Option<usize>,
    pub out: Option<String>,

    pub mode: Option<String>,
    pub r: Option<f64>,
    pub r_min: Option<f64>,
    pub r_max: Option<f64>,
    pub steps: Option<usize>,
    pub rho: Option<f64>,
    pub rho_min: Option<f64>,
    pub rho_max: Option<f64>,
    pub theta: Option<f64>,
    pub theta_min: Option<f64>,
    pub theta_max: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub nx: Option<usize>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub ny: Option<usize>,
    pub gap_tol: Option<f64>,

    pub free: Option<Vec<String>>,
    pub lambda0: Option<f64>,
    pub step: Option<f64>,
    pub fd_step: Option<f64>,
    pub max_iter: Option<usize>,

    pub cx: Option<f64>,
    pub cy: Option<f64>,
    pub radius: Option<f64>,
    pub points: Option<usize>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, Error> {
        let Some(path) = path else { return Ok(Self::default()) };
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidConfig(format!("cannot read {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::InvalidConfig(format!("{}: {e}", path.display())))
    }
}

/// Collects the effective value of every setting for the output header.
#[derive(Debug, Default)]
pub struct Effective {
    pub lines: Vec<String>,
}

impl Effective {
    /// Flag, then file, then default; records the winner.
    pub fn pick<T: Clone + Display>(&mut self, key: &str, flag: Option<T>, file: Option<T>, default: T) -> T {
        let v = flag.or(file).unwrap_or(default);
        self.lines.push(format!("{key} = {v}"));
        v
    }

    /// Like [`Effective::pick`] with no default.
    pub fn require<T: Clone + Display>(&mut self, key: &str, flag: Option<T>, file: Option<T>) -> Result<T, Error> {
        match flag.or(file) {
            Some(v) => {
                self.lines.push(format!("{key} = {v}"));
                Ok(v)
            }
            None => Err(Error::InvalidConfig(format!("missing required setting --{}", key.replace('_', "-")))),
        }
    }

    pub fn note(&mut self, line: impl Into<String>) {
        self.lines.push(line.into());
    }
}
