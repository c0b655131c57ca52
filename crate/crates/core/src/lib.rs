//! Cell-free massive MIMO downlink simulator.
//!
//! The chain for one coherence block is: draw a [`ChannelRealization`],
//! choose which access points serve which user ([`aps`]), form a precoder
//! ([`precoding`]), allocate per-user power under per-antenna constraints
//! ([`power`]), re-form the precoder with that allocation and allocate
//! again, then score the result ([`metrics`]). [`pipeline`] wires the
//! stages together and averages them over Monte-Carlo sweeps.
//!
//! Numerical kernels are generic over [`Real`] (`f32` or `f64`). The
//! physical pipeline deals with path gains around `1e-20`, whose squares
//! underflow single precision, so sweeps run in `f64`; the aliases below
//! name the common instantiations.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aps;
pub mod config;
pub mod error;
pub mod experiment;
pub mod metrics;
pub mod pipeline;
pub mod power;
pub mod precoding;
pub mod presets;
pub mod report;
pub mod rng;
pub mod scalar;
pub mod topology;

pub use aps::{apply_mask, es_aps, ls_aps, MaskedChannel, SelectionMask};
pub use config::{load_config, SystemConfig};
pub use error::{Error, Result};
pub use experiment::{Experiment, Overrides};
pub use metrics::{analytic_sinr, ber_qpsk, rates, sinr_coefficients, snr_to_rho_f, LinkMetrics};
pub use pipeline::{run_sweep, run_trial, PipelineResult, Scheme, Selection, SweepAxis, SweepSpec, SweepTable};
pub use power::{
    apa_sgd, compute_delta, opa_bisection, sinr_feasible, upa, AllocationKind, AllocationResult, SinrCoefficients,
};
pub use precoding::{
    cb_precoder, conventional_mmse_precoder, mmse_precoder, zf_precoder, LinkBudget, PrecoderKind, PrecoderOutput,
};
pub use presets::{find_preset, presets, ExperimentPreset};
pub use scalar::{CMatrix, RMatrix, Real};
pub use topology::ChannelRealization;

/// Double-precision complex matrix.
pub type CMatrix64 = CMatrix<f64>;
/// Single-precision complex matrix.
pub type CMatrix32 = CMatrix<f32>;
pub type ChannelRealization64 = ChannelRealization<f64>;
pub type ChannelRealization32 = ChannelRealization<f32>;
pub type PrecoderOutput64 = PrecoderOutput<f64>;
pub type PrecoderOutput32 = PrecoderOutput<f32>;
pub type AllocationResult64 = AllocationResult<f64>;
pub type AllocationResult32 = AllocationResult<f32>;
pub type SinrCoefficients64 = SinrCoefficients<f64>;
pub type SinrCoefficients32 = SinrCoefficients<f32>;
pub type LinkBudget64 = LinkBudget<f64>;
pub type LinkBudget32 = LinkBudget<f32>;
pub type PipelineResult64 = PipelineResult<f64>;
