//! The two-pass chain (precode with `N = I`, allocate, re-form, allocate
//! again) and Monte-Carlo sweeps over it.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::aps::{apply_mask, es_aps, ls_aps, MaskedChannel, SelectionMask};
use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::metrics::{ber_qpsk, db_to_linear, linear_to_db, rates, sinr_coefficients, snr_to_rho_f, BerSetup, LinkMetrics};
use crate::power::{apa_sgd, opa_bisection, upa, AllocationKind, AllocationResult, BisectionParams, GradientParams};
use crate::precoding::{initial_precoder, LinkBudget, PrecoderKind, PrecoderOutput};
use crate::rng::{stream_rng, Stream};
use crate::scalar::Real;
use crate::topology::ChannelRealization;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Selection {
    /// Every AP serves every user.
    None,
    LargeScale,
    Exhaustive,
}

impl Selection {
    pub const ALL: [Selection; 3] = [Selection::None, Selection::LargeScale, Selection::Exhaustive];

    pub fn label(self) -> &'static str {
        match self {
            Selection::None => "NS",
            Selection::LargeScale => "LS",
            Selection::Exhaustive => "ES",
        }
    }
}

/// One precoder / allocation / selection combination, written `MMSE+OPA+LS`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Scheme {
    pub precoder: PrecoderKind,
    pub allocation: AllocationKind,
    pub selection: Selection,
}

impl Scheme {
    pub fn new(precoder: PrecoderKind, allocation: AllocationKind, selection: Selection) -> Result<Self> {
        let scheme = Self { precoder, allocation, selection };
        if precoder == PrecoderKind::ConjugateBeamforming
            && allocation == AllocationKind::Optimal
            && selection == Selection::Exhaustive
        {
            return Err(Error::UnsupportedScheme {
                scheme: scheme.label(),
                reason: "joint selection with max-min conjugate beamforming is a mixed-integer problem",
            });
        }
        if allocation == AllocationKind::Adaptive
            && matches!(precoder, PrecoderKind::ZeroForcing | PrecoderKind::ConjugateBeamforming)
        {
            return Err(Error::UnsupportedScheme {
                scheme: scheme.label(),
                reason: "the gradient allocation is derived from the MMSE cost and needs its normalization f",
            });
        }
        Ok(scheme)
    }

    pub fn label(&self) -> String {
        format!("{}+{}+{}", self.precoder.label(), self.allocation.label(), self.selection.label())
    }

    /// Every supported combination, in a stable order.
    pub fn all() -> Vec<Scheme> {
        let mut out = Vec::new();
        for p in PrecoderKind::ALL {
            for a in AllocationKind::ALL {
                for s in Selection::ALL {
                    if let Ok(scheme) = Scheme::new(p, a, s) {
                        out.push(scheme);
                    }
                }
            }
        }
        out
    }

    fn unknown(name: &str) -> Error {
        Error::Unknown {
            kind: "scheme",
            name: name.to_string(),
            valid: format!(
                "PRECODER+ALLOCATION[+SELECTION] with precoder in {{{}}}, allocation in {{{}}}, selection in {{{}}} (default NS)",
                PrecoderKind::ALL.map(|k| k.label()).join(", "),
                AllocationKind::ALL.map(|k| k.label()).join(", "),
                Selection::ALL.map(|k| k.label()).join(", ")
            ),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.trim().split('+').map(str::trim).collect();
        if !(2..=3).contains(&parts.len()) {
            return Err(Scheme::unknown(s));
        }
        let precoder = parts[0].parse::<PrecoderKind>().map_err(|_| Scheme::unknown(s))?;
        let allocation = parts[1].parse::<AllocationKind>().map_err(|_| Scheme::unknown(s))?;
        let selection = match parts.get(2) {
            None => Selection::None,
            Some(tag) => Selection::ALL
                .into_iter()
                .find(|k| k.label().eq_ignore_ascii_case(tag))
                .ok_or_else(|| Scheme::unknown(s))?,
        };
        Scheme::new(precoder, allocation, selection)
    }
}

/// Parses a comma-separated scheme list.
pub fn parse_schemes(list: &str) -> Result<Vec<Scheme>> {
    list.split(',').filter(|s| !s.trim().is_empty()).map(str::parse).collect()
}

/// What one trial did, for diagnostics.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StageTrace {
    pub precoder_formations: usize,
    pub allocation_solves: usize,
    /// Solver iterations of the first and second allocation pass.
    pub allocation_iterations: [usize; 2],
    pub es_candidates: u128,
    pub timings: Vec<(&'static str, Duration)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineResult<T: Real> {
    pub scheme: Scheme,
    pub mask: SelectionMask,
    pub budget: LinkBudget<T>,
    /// Precoder re-formed with the first-pass allocation.
    pub precoder: PrecoderOutput<T>,
    pub n_first: AllocationResult<T>,
    pub n_final: AllocationResult<T>,
    pub metrics: LinkMetrics<T>,
    pub trace: StageTrace,
}

/// Extra work a trial may do beyond the closed-form metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TrialOptions {
    pub ber: bool,
    /// Salt for the symbol stream, so different sweep points draw independently.
    pub ber_salt: u64,
}

/// Link budget for a realization at `snr_db`; `rho_f` comes from the full
/// (unmasked) estimate.
pub fn link_budget<T: Real>(cfg: &SystemConfig, real: &ChannelRealization<T>, snr_db: T) -> Result<LinkBudget<T>> {
    let noise = T::lit(cfg.noise_power());
    let rho_f = snr_to_rho_f(db_to_linear(snr_db), &real.g_hat, noise)?;
    Ok(LinkBudget::per_antenna(rho_f, real.num_antennas(), noise, T::lit(cfg.symbol_power)))
}

fn allocate<T: Real>(
    kind: AllocationKind,
    cfg: &SystemConfig,
    precoder: &PrecoderOutput<T>,
    masked: &MaskedChannel<T>,
    budget: &LinkBudget<T>,
) -> Result<AllocationResult<T>> {
    match kind {
        AllocationKind::Uniform => upa(&precoder.delta),
        AllocationKind::Optimal => {
            let coeffs = sinr_coefficients(&precoder.p, &masked.g_hat, &masked.error_variance(), budget)?;
            opa_bisection(&coeffs, &precoder.delta, &BisectionParams::new(cfg.opa_iterations, T::lit(cfg.opa_tol)))
        }
        AllocationKind::Adaptive => apa_sgd(
            precoder,
            &masked.g_hat,
            budget,
            &GradientParams { step: T::lit(cfg.apa_step), iterations: cfg.apa_iterations },
        ),
    }
}

/// Runs the two-pass chain on a fixed mask.
pub fn evaluate_mask<T: Real>(
    cfg: &SystemConfig,
    real: &ChannelRealization<T>,
    mask: &SelectionMask,
    scheme: Scheme,
    budget: &LinkBudget<T>,
) -> Result<PipelineResult<T>> {
    let mut trace = StageTrace::default();
    let mut clock = Instant::now();
    let mut lap = |trace: &mut StageTrace, name: &'static str| {
        trace.timings.push((name, clock.elapsed()));
        clock = Instant::now();
    };

    let masked = apply_mask(mask, real)?;
    let first_precoder = initial_precoder(scheme.precoder, &masked.g_hat, budget)?;
    trace.precoder_formations += 1;
    lap(&mut trace, "precoder");

    let n_first = allocate(scheme.allocation, cfg, &first_precoder, &masked, budget)?;
    trace.allocation_solves += 1;
    trace.allocation_iterations[0] = n_first.iterations;
    lap(&mut trace, "allocation 1");

    let precoder = first_precoder.with_allocation(&n_first.n_diag())?;
    trace.precoder_formations += 1;
    lap(&mut trace, "re-form");

    let n_final = allocate(scheme.allocation, cfg, &precoder, &masked, budget)?;
    trace.allocation_solves += 1;
    trace.allocation_iterations[1] = n_final.iterations;
    lap(&mut trace, "allocation 2");

    let coeffs = sinr_coefficients(&precoder.p, &masked.g_hat, &masked.error_variance(), budget)?;
    let metrics = rates(&coeffs.sinr(&n_final.eta));
    lap(&mut trace, "metrics");

    Ok(PipelineResult { scheme, mask: mask.clone(), budget: *budget, precoder, n_first, n_final, metrics, trace })
}

/// Selects APs for `scheme` and runs the chain on the chosen mask.
pub fn run_on_realization<T: Real>(
    cfg: &SystemConfig,
    real: &ChannelRealization<T>,
    scheme: Scheme,
    budget: &LinkBudget<T>,
) -> Result<PipelineResult<T>> {
    let (l, n, k) = (real.num_aps(), real.antennas_per_ap, real.num_users());
    match scheme.selection {
        Selection::None => evaluate_mask(cfg, real, &SelectionMask::all(l, n, k), scheme, budget),
        Selection::LargeScale => {
            let mask = ls_aps(&real.beta, cfg.selected_aps, n)?;
            evaluate_mask(cfg, real, &mask, scheme, budget)
        }
        Selection::Exhaustive => {
            let (mask, _) = es_aps(l, n, k, cfg.selected_aps, cfg.es_budget, |mask| {
                // candidates the chain cannot handle are skipped, not fatal
                Ok(evaluate_mask(cfg, real, mask, scheme, budget).map_or(T::lit(f64::NAN), |r| r.metrics.min_sinr))
            })?;
            let mut result = evaluate_mask(cfg, real, &mask, scheme, budget)?;
            result.trace.es_candidates = crate::aps::es_candidate_count(l, cfg.selected_aps, k);
            Ok(result)
        }
    }
}

/// One Monte-Carlo trial: draws realization `trial` of `seed`, runs the
/// chain at `snr_db`, and optionally simulates BER.
pub fn run_trial<T: Real>(
    cfg: &SystemConfig,
    scheme: Scheme,
    snr_db: T,
    seed: u64,
    trial: u64,
    options: &TrialOptions,
) -> Result<PipelineResult<T>> {
    let real = ChannelRealization::<T>::generate(cfg, seed, trial);
    run_trial_on(cfg, &real, scheme, snr_db, seed, trial, options)
}

fn run_trial_on<T: Real>(
    cfg: &SystemConfig,
    real: &ChannelRealization<T>,
    scheme: Scheme,
    snr_db: T,
    seed: u64,
    trial: u64,
    options: &TrialOptions,
) -> Result<PipelineResult<T>> {
    let budget = link_budget(cfg, real, snr_db)?;
    let mut result = run_on_realization(cfg, real, scheme, &budget)?;
    if options.ber {
        let masked = apply_mask(&result.mask, real)?;
        let setup = BerSetup {
            p: &result.precoder.p,
            eta: &result.n_final.eta,
            g: &real.g,
            g_hat: &masked.g_hat,
            rho_f: budget.rho_f,
            noise_var: budget.noise_var,
            symbols_per_packet: cfg.symbols_per_packet,
            packets: cfg.packets_per_trial,
        };
        let mut rng = stream_rng(seed, trial, Stream::Symbols, options.ber_salt);
        result.metrics.ber = Some(ber_qpsk(&setup, &mut rng)?.ber);
    }
    Ok(result)
}

/// The quantity swept along the horizontal axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// The config's SNR grid.
    Snr,
    /// `S / L` values; `S` is rounded and kept in `1..=L`.
    SelectionFraction(Vec<f64>),
    /// `N` values at fixed `M = L * N`; the selected fraction `S / L` is kept.
    AntennasPerAp(Vec<usize>),
}

impl SweepAxis {
    pub fn name(&self) -> &'static str {
        match self {
            SweepAxis::Snr => "snr_db",
            SweepAxis::SelectionFraction(_) => "selection_fraction",
            SweepAxis::AntennasPerAp(_) => "antennas_per_ap",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepSpec {
    pub schemes: Vec<Scheme>,
    pub axis: SweepAxis,
    pub trials: usize,
    pub seed: u64,
    pub ber: bool,
}

impl Serialize for Scheme {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.label())
    }
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

impl Estimate {
    /// Sums in slice order so the result is reproducible bit for bit.
    pub fn from_samples(samples: &[f64]) -> Self {
        let n = samples.len() as f64;
        if samples.is_empty() {
            return Self { mean: f64::NAN, se: f64::NAN };
        }
        let mean = samples.iter().sum::<f64>() / n;
        if samples.len() < 2 {
            return Self { mean, se: 0.0 };
        }
        let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
        Self { mean, se: (var / n).sqrt() }
    }
}

/// One (scheme, axis value) point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub scheme: String,
    pub axis_name: String,
    pub axis_value: f64,
    pub sum_rate: Estimate,
    /// Mean of the per-trial minimum SINR in dB.
    pub min_sinr_db: Estimate,
    pub ber: Option<Estimate>,
    pub trials: usize,
    pub seed: u64,
}

/// Per-trial values behind every row, kept for paired comparisons.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrialSamples {
    pub sum_rate: Vec<f64>,
    pub min_sinr_db: Vec<f64>,
    pub ber: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Parallel to `rows`.
    pub samples: Vec<TrialSamples>,
}

impl SweepTable {
    pub fn row(&self, scheme: &str, axis_value: f64) -> Option<(&SweepRow, &TrialSamples)> {
        self.rows
            .iter()
            .zip(&self.samples)
            .find(|(r, _)| r.scheme == scheme && r.axis_value == axis_value)
    }
}

#[derive(Debug, Clone, Copy)]
struct Sample {
    sum_rate: f64,
    min_sinr_db: f64,
    ber: Option<f64>,
}

struct Point {
    cfg: SystemConfig,
    axis_value: f64,
}

fn sweep_points(cfg: &SystemConfig, axis: &SweepAxis) -> Result<Vec<Point>> {
    let fraction = cfg.selected_aps as f64 / cfg.num_aps as f64;
    let clamp_s = |f: f64, l: usize| ((f * l as f64).round() as usize).clamp(1, l);
    let points = match axis {
        SweepAxis::Snr => vec![Point { cfg: cfg.clone(), axis_value: f64::NAN }],
        SweepAxis::SelectionFraction(fracs) => fracs
            .iter()
            .map(|&f| {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(crate::error::param("selection_fraction", format!("{f} is outside (0, 1]")));
                }
                let cfg = SystemConfig { selected_aps: clamp_s(f, cfg.num_aps), ..cfg.clone() };
                Ok(Point { cfg, axis_value: f })
            })
            .collect::<Result<_>>()?,
        SweepAxis::AntennasPerAp(ns) => {
            let m = cfg.total_antennas();
            ns.iter()
                .map(|&n| {
                    if n == 0 || !m.is_multiple_of(n) {
                        return Err(crate::error::param("antennas_per_ap", format!("{n} does not divide M = {m}")));
                    }
                    let l = m / n;
                    let cfg =
                        SystemConfig { num_aps: l, antennas_per_ap: n, selected_aps: clamp_s(fraction, l), ..cfg.clone() };
                    Ok(Point { cfg, axis_value: n as f64 })
                })
                .collect::<Result<_>>()?
        }
    };
    for p in &points {
        p.cfg.validate()?;
    }
    Ok(points)
}

fn snr_suffix(snr: f64) -> String {
    format!("@{snr}dB")
}

/// Averages every scheme over `spec.trials` realizations at each axis point.
///
/// Realization `t` depends only on `(seed, t)` and the point's geometry, so
/// all schemes and SNRs see the same channels. Trials run in parallel; the
/// reduction walks them in index order.
pub fn run_sweep(cfg: &SystemConfig, spec: &SweepSpec) -> Result<SweepTable> {
    cfg.validate()?;
    if spec.trials == 0 {
        return Err(crate::error::param("trials", "must be at least 1"));
    }
    if spec.schemes.is_empty() {
        return Err(crate::error::param("schemes", "at least one scheme is required"));
    }
    let points = sweep_points(cfg, &spec.axis)?;
    let snrs = cfg.snr_grid_db.clone();
    let per_point = snrs.len() * spec.schemes.len();

    let run_one = |trial: usize| -> Result<Vec<Sample>> {
        let mut out = Vec::with_capacity(points.len() * per_point);
        for (pi, point) in points.iter().enumerate() {
            let real = ChannelRealization::<f64>::generate(&point.cfg, spec.seed, trial as u64);
            for (si, &snr) in snrs.iter().enumerate() {
                for scheme in &spec.schemes {
                    let options = TrialOptions { ber: spec.ber, ber_salt: (pi * snrs.len() + si) as u64 };
                    let r = run_trial_on(&point.cfg, &real, *scheme, snr, spec.seed, trial as u64, &options)?;
                    out.push(Sample {
                        sum_rate: r.metrics.sum_rate,
                        min_sinr_db: linear_to_db(r.metrics.min_sinr.max(f64::MIN_POSITIVE)),
                        ber: r.metrics.ber,
                    });
                }
            }
        }
        Ok(out)
    };

    let per_trial: Vec<Vec<Sample>> = (0..spec.trials)
        .into_par_iter()
        .map(|t| {
            let r = run_one(t);
            log::debug!("trial {t} done");
            r
        })
        .collect::<Result<_>>()?;
    log::info!("{} trials x {} points x {} SNRs x {} schemes", spec.trials, points.len(), snrs.len(), spec.schemes.len());

    let mut table = SweepTable::default();
    let axis_name = spec.axis.name();
    for (ci, scheme) in spec.schemes.iter().enumerate() {
        for (si, &snr) in snrs.iter().enumerate() {
            for (pi, point) in points.iter().enumerate() {
                let idx = pi * per_point + si * spec.schemes.len() + ci;
                let pick = |f: fn(&Sample) -> Option<f64>| -> Vec<f64> {
                    per_trial.iter().filter_map(|samples| f(&samples[idx])).collect()
                };
                let samples = TrialSamples {
                    sum_rate: pick(|s| Some(s.sum_rate)),
                    min_sinr_db: pick(|s| Some(s.min_sinr_db)),
                    ber: pick(|s| s.ber),
                };
                let (scheme_label, axis_value) = match spec.axis {
                    SweepAxis::Snr => (scheme.label(), snr),
                    _ if snrs.len() > 1 => (format!("{}{}", scheme.label(), snr_suffix(snr)), point.axis_value),
                    _ => (scheme.label(), point.axis_value),
                };
                table.rows.push(SweepRow {
                    scheme: scheme_label,
                    axis_name: axis_name.to_string(),
                    axis_value,
                    sum_rate: Estimate::from_samples(&samples.sum_rate),
                    min_sinr_db: Estimate::from_samples(&samples.min_sinr_db),
                    ber: spec.ber.then(|| Estimate::from_samples(&samples.ber)),
                    trials: spec.trials,
                    seed: spec.seed,
                });
                table.samples.push(samples);
            }
        }
    }
    Ok(table)
}

/// Mean stochastic-gradient cost per iteration (first allocation pass).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LearningRow {
    pub scheme: String,
    pub iteration: usize,
    pub cost: Estimate,
    pub trials: usize,
    pub seed: u64,
}

/// Per-trial cost traces of the adaptive allocation at the first SNR of the grid.
pub fn learning_traces(cfg: &SystemConfig, scheme: Scheme, trials: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
    cfg.validate()?;
    if scheme.allocation != AllocationKind::Adaptive {
        return Err(Error::UnsupportedScheme {
            scheme: scheme.label(),
            reason: "learning curves need the stochastic-gradient allocation",
        });
    }
    let snr = cfg.snr_grid_db[0];
    (0..trials)
        .into_par_iter()
        .map(|t| {
            let r = run_trial::<f64>(cfg, scheme, snr, seed, t as u64, &TrialOptions::default())?;
            Ok(r.n_first.cost_trace)
        })
        .collect()
}

/// Averages [`learning_traces`] per iteration for every adaptive scheme in `schemes`.
pub fn learning_curve(cfg: &SystemConfig, schemes: &[Scheme], trials: usize, seed: u64) -> Result<Vec<LearningRow>> {
    if trials == 0 {
        return Err(crate::error::param("trials", "must be at least 1"));
    }
    let mut rows = Vec::new();
    for scheme in schemes.iter().filter(|s| s.allocation == AllocationKind::Adaptive) {
        let traces = learning_traces(cfg, *scheme, trials, seed)?;
        for iteration in 0..=cfg.apa_iterations {
            let column: Vec<f64> = traces.iter().map(|t| t[iteration]).collect();
            rows.push(LearningRow {
                scheme: scheme.label(),
                iteration,
                cost: Estimate::from_samples(&column),
                trials,
                seed,
            });
        }
    }
    Ok(rows)
}
