//! Named experiment setups: a config override, scheme list, sweep axis and trial count.

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::pipeline::{Scheme, Selection, SweepAxis};
use crate::power::AllocationKind;
use crate::precoding::PrecoderKind;

/// Default Monte-Carlo trials per preset.
pub const DEFAULT_TRIALS: usize = 120;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PresetKind {
    /// Sum-rate / min-SINR / BER table over an axis.
    Sweep,
    /// Per-iteration cost of the stochastic-gradient allocation.
    Learning,
}

#[derive(Debug, Clone)]
pub struct ExperimentPreset {
    pub name: &'static str,
    pub description: &'static str,
    pub kind: PresetKind,
    overrides: fn(&mut SystemConfig),
    pub schemes: Vec<Scheme>,
    pub axis: SweepAxis,
    pub trials: usize,
    pub ber: bool,
}

impl ExperimentPreset {
    /// Writes the preset's scenario constants over `cfg`.
    pub fn apply(&self, cfg: &mut SystemConfig) {
        (self.overrides)(cfg);
    }

    /// Defaults with the preset applied.
    pub fn config(&self) -> SystemConfig {
        let mut cfg = SystemConfig::default();
        self.apply(&mut cfg);
        cfg
    }
}

fn combos(precoders: &[PrecoderKind], allocations: &[AllocationKind], selections: &[Selection]) -> Vec<Scheme> {
    let mut out = Vec::new();
    for &p in precoders {
        for &a in allocations {
            for &s in selections {
                if let Ok(scheme) = Scheme::new(p, a, s) {
                    out.push(scheme);
                }
            }
        }
    }
    out
}

fn scheme(label: &str) -> Scheme {
    label.parse().expect("preset scheme labels are valid")
}

fn tiny(cfg: &mut SystemConfig) {
    cfg.num_aps = 5;
    cfg.antennas_per_ap = 1;
    cfg.selected_aps = 3;
    cfg.num_users = 2;
    cfg.csi_quality = 0.99;
}

fn large(cfg: &mut SystemConfig) {
    cfg.num_aps = 128;
    cfg.antennas_per_ap = 1;
    cfg.selected_aps = 64;
    cfg.num_users = 16;
    cfg.csi_quality = 0.99;
}

fn multi_antenna(cfg: &mut SystemConfig) {
    cfg.num_aps = 24;
    cfg.antennas_per_ap = 4;
    cfg.selected_aps = 12;
    cfg.num_users = 8;
    cfg.csi_quality = 1.0;
}

/// Every shipped preset, in listing order.
pub fn presets() -> Vec<ExperimentPreset> {
    use AllocationKind::*;
    use PrecoderKind::*;
    use Selection::*;
    let baselines = [Mmse, ZeroForcing, ConjugateBeamforming];
    vec![
        ExperimentPreset {
            name: "fig-learning",
            description: "APA cost per iteration; L=24, N=4, S=12, K=8, n=1, 25 dB, mu=0.25",
            kind: PresetKind::Learning,
            overrides: |cfg| {
                multi_antenna(cfg);
                cfg.snr_grid_db = vec![25.0];
                cfg.apa_step = 0.25;
                cfg.apa_iterations = 5;
            },
            schemes: vec![scheme("MMSE+APA+LS")],
            axis: SweepAxis::Snr,
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-tiny-opa",
            description: "sum-rate vs SNR with OPA/UPA and ES/LS/no selection; L=5, N=1, S=3, K=2, n=0.99",
            kind: PresetKind::Sweep,
            overrides: tiny,
            schemes: [
                combos(&baselines, &[Optimal, Uniform], &[None, Exhaustive, LargeScale]),
                vec![scheme("MMSE-CONV+UPA+NS")],
            ]
            .concat(),
            axis: SweepAxis::Snr,
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-tiny-apa",
            description: "sum-rate vs SNR with APA against UPA and ZF; L=5, N=1, S=3, K=2, n=0.99",
            kind: PresetKind::Sweep,
            overrides: tiny,
            schemes: [
                combos(&[Mmse], &[Adaptive, Uniform], &[None, Exhaustive, LargeScale]),
                combos(&[ZeroForcing], &[Optimal, Uniform], &[None, Exhaustive, LargeScale]),
                vec![scheme("MMSE-CONV+UPA+NS")],
            ]
            .concat(),
            axis: SweepAxis::Snr,
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-large-minsinr",
            description: "minimum SINR vs SNR with LS selection; L=128, N=1, S=64, K=16, n=0.99",
            kind: PresetKind::Sweep,
            overrides: large,
            schemes: combos(&baselines, &[Optimal, Adaptive, Uniform], &[LargeScale]),
            axis: SweepAxis::Snr,
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-large-sumrate",
            description: "sum-rate vs SNR with and without LS selection; L=128, N=1, S=64, K=16, n=0.99",
            kind: PresetKind::Sweep,
            overrides: large,
            schemes: [
                combos(&baselines, &[Optimal, Adaptive, Uniform], &[None, LargeScale]),
                combos(&[MmseConventional], &[Uniform], &[None, LargeScale]),
            ]
            .concat(),
            axis: SweepAxis::Snr,
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-selection-fraction",
            description: "sum-rate vs fraction of selected APs, MMSE+UPA+LS; L=128, N=1, K=16, n=1",
            kind: PresetKind::Sweep,
            overrides: |cfg| {
                large(cfg);
                cfg.csi_quality = 1.0;
            },
            schemes: vec![scheme("MMSE+UPA+LS")],
            axis: SweepAxis::SelectionFraction(vec![0.05, 0.1, 0.25, 0.5, 0.75, 1.0]),
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-antenna-split",
            description: "sum-rate vs antennas per AP at M=256, S=L/2, MMSE+UPA+LS; K=16, n=0.99",
            kind: PresetKind::Sweep,
            overrides: |cfg| {
                cfg.num_aps = 256;
                cfg.antennas_per_ap = 1;
                cfg.selected_aps = 128;
                cfg.num_users = 16;
                cfg.csi_quality = 0.99;
            },
            schemes: vec![scheme("MMSE+UPA+LS")],
            axis: SweepAxis::AntennasPerAp(vec![1, 2, 4, 8, 16]),
            trials: DEFAULT_TRIALS,
            ber: false,
        },
        ExperimentPreset {
            name: "fig-ber",
            description: "QPSK BER vs SNR with LS selection; L=24, N=4, S=12, K=8, n=1, 100 symbols per packet",
            kind: PresetKind::Sweep,
            overrides: |cfg| {
                multi_antenna(cfg);
                cfg.symbols_per_packet = 100;
            },
            schemes: combos(&baselines, &[Optimal, Adaptive, Uniform], &[LargeScale]),
            axis: SweepAxis::Snr,
            trials: DEFAULT_TRIALS,
            ber: true,
        },
    ]
}

pub fn preset_names() -> Vec<&'static str> {
    presets().iter().map(|p| p.name).collect()
}

pub fn find_preset(name: &str) -> Result<ExperimentPreset> {
    presets().into_iter().find(|p| p.name == name).ok_or_else(|| Error::Unknown {
        kind: "preset",
        name: name.to_string(),
        valid: preset_names().join(", "),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eight_presets_with_unique_names() {
        let mut names = preset_names();
        assert_eq!(names.len(), 8);
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), 8);
    }

    #[test]
    fn every_preset_validates() {
        for p in presets() {
            p.config().validate().unwrap_or_else(|e| panic!("{}: {e}", p.name));
            assert!(!p.schemes.is_empty());
        }
    }

    #[test]
    fn captions_are_honoured() {
        let cfg = find_preset("fig-learning").unwrap().config();
        assert_eq!((cfg.num_aps, cfg.antennas_per_ap, cfg.selected_aps, cfg.num_users), (24, 4, 12, 8));
        assert_eq!(cfg.csi_quality, 1.0);
        assert_eq!(cfg.snr_grid_db, vec![25.0]);
        let cfg = find_preset("fig-large-sumrate").unwrap().config();
        assert_eq!((cfg.num_aps, cfg.selected_aps, cfg.num_users), (128, 64, 16));
        let cfg = find_preset("fig-antenna-split").unwrap().config();
        assert_eq!(cfg.total_antennas(), 256);
    }

    #[test]
    fn unknown_preset_lists_names() {
        let msg = find_preset("fig-nope").unwrap_err().to_string();
        assert!(msg.contains("fig-ber") && msg.contains("fig-learning"), "{msg}");
    }
}
