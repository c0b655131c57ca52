//! A resolved run: config, scheme list, axis and output files.

use std::path::{Path, PathBuf};

use crate::config::SystemConfig;
use crate::error::{param, Result};
use crate::pipeline::{learning_curve, parse_schemes, run_sweep, Scheme, SweepAxis, SweepSpec};
use crate::presets::{ExperimentPreset, PresetKind, DEFAULT_TRIALS};
use crate::report::{emit_results, sidecar_path, write_learning_csv, write_manifest, RunManifest};

/// Schemes swept when neither a preset nor `--schemes` names any.
pub const DEFAULT_SCHEMES: &str = "MMSE+OPA+LS,MMSE+APA+LS,MMSE+UPA+LS,ZF+OPA+LS,ZF+UPA+LS,CB+OPA+LS,CB+UPA+LS";

#[derive(Debug, Clone)]
pub struct Experiment {
    pub preset: Option<&'static str>,
    pub kind: PresetKind,
    pub config: SystemConfig,
    pub schemes: Vec<Scheme>,
    pub axis: SweepAxis,
    pub trials: usize,
    pub ber: bool,
}

/// Command-line style overrides applied after the preset.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub trials: Option<usize>,
    pub seed: Option<u64>,
    pub schemes: Option<String>,
}

impl Experiment {
    /// Layers `base <- preset <- overrides`.
    pub fn resolve(base: SystemConfig, preset: Option<&ExperimentPreset>, overrides: &Overrides) -> Result<Self> {
        let mut config = base;
        let mut exp = match preset {
            Some(p) => {
                p.apply(&mut config);
                Experiment {
                    preset: Some(p.name),
                    kind: p.kind,
                    config: SystemConfig::default(),
                    schemes: p.schemes.clone(),
                    axis: p.axis.clone(),
                    trials: p.trials,
                    ber: p.ber,
                }
            }
            None => Experiment {
                preset: None,
                kind: PresetKind::Sweep,
                config: SystemConfig::default(),
                schemes: parse_schemes(DEFAULT_SCHEMES)?,
                axis: SweepAxis::Snr,
                trials: DEFAULT_TRIALS,
                ber: false,
            },
        };
        if let Some(seed) = overrides.seed {
            config.rng_seed = seed;
        }
        if let Some(trials) = overrides.trials {
            exp.trials = trials;
        }
        if let Some(list) = &overrides.schemes {
            exp.schemes = parse_schemes(list)?;
        }
        if exp.trials == 0 {
            return Err(param("trials", "must be at least 1"));
        }
        if exp.schemes.is_empty() {
            return Err(param("schemes", "at least one scheme is required"));
        }
        config.validate()?;
        exp.config = config;
        Ok(exp)
    }

    pub fn seed(&self) -> u64 {
        self.config.rng_seed
    }

    /// Runs the experiment and writes the CSV at `out` plus its sidecar JSON.
    pub fn run(&self, out: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
        let out = out.as_ref();
        if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir)?;
        }
        let manifest = RunManifest {
            preset: self.preset,
            kind: match self.kind {
                PresetKind::Sweep => "sweep",
                PresetKind::Learning => "learning",
            },
            schemes: self.schemes.iter().map(Scheme::label).collect(),
            axis: &self.axis,
            trials: self.trials,
            seed: self.seed(),
            ber: self.ber,
            config: &self.config,
        };
        match self.kind {
            PresetKind::Sweep => {
                let spec = SweepSpec {
                    schemes: self.schemes.clone(),
                    axis: self.axis.clone(),
                    trials: self.trials,
                    seed: self.seed(),
                    ber: self.ber,
                };
                let table = run_sweep(&self.config, &spec)?;
                let sidecar = emit_results(&table.rows, &manifest, out)?;
                Ok(vec![out.to_path_buf(), sidecar])
            }
            PresetKind::Learning => {
                let rows = learning_curve(&self.config, &self.schemes, self.trials, self.seed())?;
                if rows.is_empty() {
                    return Err(param("schemes", "learning curves need at least one APA scheme"));
                }
                write_learning_csv(&rows, out)?;
                let sidecar = sidecar_path(out);
                write_manifest(&manifest, &sidecar)?;
                Ok(vec![out.to_path_buf(), sidecar])
            }
        }
    }
}
