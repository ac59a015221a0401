//! Experiment configuration, read from TOML and overridden by flags.
//!
//! ```toml
//! output_dir = "out"
//! workers = 4
//!
//! [experiment]
//! problem = "emden:n=3,nu=1"
//! y0 = [1.0, 0.0]
//! methods = ["runge2", "heun3", "tuned3"]
//! step_sizes = [0.0005]
//! t_end = 2000.0
//! stride = 40            # method steps between samples
//! reference_method = "rk4"
//! reference_h = 1e-4
//! plot = true
//! fit_window = [50.0, 1000.0]
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};
use crate::problem::ProblemSpec;

/// Top level of a config file. Every key is optional.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub output_dir: Option<PathBuf>,
    pub workers: Option<usize>,
    #[serde(default)]
    pub experiment: ExperimentFile,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentFile {
    pub problem: Option<String>,
    pub y0: Option<[f64; 2]>,
    pub methods: Option<Vec<String>>,
    pub step_sizes: Option<Vec<f64>>,
    pub t_end: Option<f64>,
    pub stride: Option<usize>,
    pub reference_method: Option<String>,
    pub reference_h: Option<f64>,
    pub plot: Option<bool>,
    pub fit_window: Option<[f64; 2]>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config { path: path.display().to_string(), message: e.to_string() })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub problem: ProblemSpec,
    pub y0: [f64; 2],
    pub methods: Vec<String>,
    pub step_sizes: Vec<f64>,
    pub t_end: f64,
    /// Method steps between samples; by default about one sample per 0.02 time units.
    pub stride: Option<usize>,
    pub reference_method: String,
    pub reference_h: f64,
    pub output_dir: PathBuf,
    pub plot: bool,
    pub fit_window: [f64; 2],
    pub workers: usize,
}

impl Default for ExperimentConfig {
    /// Runge2, Heun3 and the tuned method at `h = 1/2000` up to `t = 2000`.
    fn default() -> Self {
        ExperimentConfig {
            problem: ProblemSpec::default(),
            y0: [1.0, 0.0],
            methods: vec!["runge2".into(), "heun3".into(), "tuned3".into()],
            step_sizes: vec![5e-4],
            t_end: 2000.0,
            stride: None,
            reference_method: "rk4".into(),
            reference_h: 1e-4,
            output_dir: PathBuf::from("."),
            plot: true,
            fit_window: [50.0, 1000.0],
            workers: default_workers(),
        }
    }
}

pub fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

impl ExperimentConfig {
    /// Defaults overlaid with a config file.
    pub fn from_file(file: &FileConfig) -> Result<Self> {
        let mut c = ExperimentConfig::default();
        let e = &file.experiment;
        if let Some(p) = &e.problem {
            c.problem = p.parse()?;
        }
        macro_rules! take {
            ($($field:ident),*) => { $( if let Some(v) = &e.$field { c.$field = v.clone(); } )* };
        }
        take!(y0, methods, step_sizes, t_end, reference_method, reference_h, plot, fit_window);
        c.stride = e.stride.or(c.stride);
        if let Some(d) = &file.output_dir {
            c.output_dir = d.clone();
        }
        if let Some(w) = file.workers {
            c.workers = w;
        }
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(CliError::Usage(m));
        if !(self.t_end > 0.0) || !self.t_end.is_finite() {
            return bad(format!("t_end must be positive, got {}", self.t_end));
        }
        if let Some(h) = self.step_sizes.iter().find(|h| !(**h > 0.0) || !h.is_finite()) {
            return bad(format!("step sizes must be positive, got {h}"));
        }
        if !(self.reference_h > 0.0) {
            return bad(format!("reference step must be positive, got {}", self.reference_h));
        }
        if self.stride == Some(0) {
            return bad("stride must be at least 1".into());
        }
        if self.workers == 0 {
            return bad("workers must be at least 1".into());
        }
        if !(self.fit_window[0] < self.fit_window[1]) {
            return bad(format!("fit window {:?} is empty", self.fit_window));
        }
        for m in self.methods.iter().chain([&self.reference_method]) {
            oscerr::rk::builtin(m)?;
        }
        Ok(())
    }

    /// The sampling stride used for step size `h`.
    pub fn stride_for(&self, h: f64) -> usize {
        self.stride.unwrap_or_else(|| ((0.02 / h).round() as usize).max(1))
    }
}
