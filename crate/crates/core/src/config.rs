//! Scenario configuration: flat `key = value` TOML with physical defaults.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Boltzmann constant in J/K, at the precision used for the noise floor.
pub const BOLTZMANN: f64 = 1.381e-23;

/// Every constant that defines one simulated scenario.
///
/// Missing keys take the defaults from [`SystemConfig::default`]. The
/// total transmit budget is always `E_tr = M * rho_f`, so it has no key.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    /// Number of access points `L`.
    pub num_aps: usize,
    /// Antennas per access point `N`.
    pub antennas_per_ap: usize,
    /// Single-antenna users `K`.
    pub num_users: usize,
    /// Access points selected per user `S`.
    pub selected_aps: usize,
    /// Side of the square deployment area in meters.
    pub area_side: f64,
    pub carrier_freq_mhz: f64,
    pub ap_height: f64,
    pub user_height: f64,
    /// Log-normal shadowing standard deviation in dB.
    pub shadow_sigma_db: f64,
    /// Inner break distance of the three-slope model, meters.
    pub d0: f64,
    /// Outer break distance; shadowing applies beyond it.
    pub d1: f64,
    /// Noise temperature in Kelvin.
    pub noise_temp: f64,
    pub bandwidth_hz: f64,
    pub noise_figure_db: f64,
    /// Symbol energy `E|s_k|^2`.
    pub symbol_power: f64,
    /// Fraction of the channel variance captured by the estimate.
    pub csi_quality: f64,
    pub snr_grid_db: Vec<f64>,
    pub rng_seed: u64,
    /// Bisection halvings for max-min allocation.
    pub opa_iterations: usize,
    /// Relative interval width at which bisection stops early.
    pub opa_tol: f64,
    /// Step size of the stochastic-gradient allocation.
    pub apa_step: f64,
    pub apa_iterations: usize,
    /// Upper bound on candidates enumerated by exhaustive selection.
    pub es_budget: u64,
    pub symbols_per_packet: usize,
    pub packets_per_trial: usize,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            num_aps: 128,
            antennas_per_ap: 1,
            num_users: 16,
            selected_aps: 64,
            area_side: 1000.0,
            carrier_freq_mhz: 1900.0,
            ap_height: 15.0,
            user_height: 1.65,
            shadow_sigma_db: 8.0,
            d0: 10.0,
            d1: 50.0,
            noise_temp: 290.0,
            bandwidth_hz: 20e6,
            noise_figure_db: 9.0,
            symbol_power: 1.0,
            csi_quality: 0.99,
            snr_grid_db: vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0],
            rng_seed: 1,
            opa_iterations: 30,
            opa_tol: 1e-6,
            apa_step: 0.25,
            apa_iterations: 5,
            es_budget: 1_000_000,
            symbols_per_packet: 100,
            packets_per_trial: 10,
        }
    }
}

impl SystemConfig {
    /// Total antenna count `M = L * N`.
    pub fn total_antennas(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }

    /// Receiver noise power `T0 * k_B * B * NF` in watts.
    pub fn noise_power(&self) -> f64 {
        self.noise_temp * BOLTZMANN * self.bandwidth_hz * 10f64.powf(self.noise_figure_db / 10.0)
    }

    pub fn validate(&self) -> Result<()> {
        fn fail(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::Validation { field, reason: reason.into() })
        }
        if self.num_aps == 0 {
            return fail("num_aps", "must be positive");
        }
        if self.antennas_per_ap == 0 {
            return fail("antennas_per_ap", "must be positive");
        }
        if self.num_users == 0 {
            return fail("num_users", "must be positive");
        }
        if self.total_antennas() <= self.num_users {
            return fail(
                "num_users",
                format!("need M = L*N = {} > K = {}", self.total_antennas(), self.num_users),
            );
        }
        if self.selected_aps == 0 || self.selected_aps > self.num_aps {
            return fail("selected_aps", format!("must lie in 1..={}", self.num_aps));
        }
        if !(self.area_side >= 0.0 && self.area_side.is_finite()) {
            return fail("area_side", "must be a finite non-negative length");
        }
        if !(self.carrier_freq_mhz > 0.0) {
            return fail("carrier_freq_mhz", "must be positive");
        }
        if !(self.ap_height > 0.0) {
            return fail("ap_height", "must be positive");
        }
        if !(self.user_height >= 0.0) {
            return fail("user_height", "must be non-negative");
        }
        if !(self.shadow_sigma_db >= 0.0) {
            return fail("shadow_sigma_db", "must be non-negative");
        }
        if !(self.d0 > 0.0) {
            return fail("d0", "must be positive");
        }
        if !(self.d0 < self.d1) {
            return fail("d1", "must exceed d0");
        }
        if !(self.noise_temp > 0.0) {
            return fail("noise_temp", "must be positive");
        }
        if !(self.bandwidth_hz > 0.0) {
            return fail("bandwidth_hz", "must be positive");
        }
        if !self.noise_figure_db.is_finite() {
            return fail("noise_figure_db", "must be finite");
        }
        if !(self.symbol_power > 0.0) {
            return fail("symbol_power", "must be positive");
        }
        if !(0.0..=1.0).contains(&self.csi_quality) {
            return fail("csi_quality", "must lie in [0, 1]");
        }
        if self.snr_grid_db.is_empty() || self.snr_grid_db.iter().any(|s| !s.is_finite()) {
            return fail("snr_grid_db", "must be a non-empty list of finite dB values");
        }
        if i64::try_from(self.rng_seed).is_err() {
            return fail("rng_seed", format!("must be at most {} (TOML integers are signed)", i64::MAX));
        }
        if self.opa_iterations == 0 {
            return fail("opa_iterations", "must be at least 1");
        }
        if !(self.opa_tol >= 0.0) {
            return fail("opa_tol", "must be non-negative");
        }
        if !(self.apa_step >= 0.0 && self.apa_step.is_finite()) {
            return fail("apa_step", "must be finite and non-negative");
        }
        if self.apa_iterations == 0 {
            return fail("apa_iterations", "must be at least 1");
        }
        if self.es_budget == 0 {
            return fail("es_budget", "must be at least 1");
        }
        if self.symbols_per_packet == 0 {
            return fail("symbols_per_packet", "must be at least 1");
        }
        if self.packets_per_trial == 0 {
            return fail("packets_per_trial", "must be at least 1");
        }
        Ok(())
    }

    /// Parses and validates config text. An empty document yields the defaults.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: SystemConfig = toml::from_str(text).map_err(|e| {
            let line = e
                .span()
                .map(|span| text[..span.start.min(text.len())].matches('\n').count() + 1)
                .unwrap_or(0);
            Error::ConfigParse { line, message: e.message().to_string() }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config is always serializable")
    }
}

pub fn load_config(path: impl AsRef<Path>) -> Result<SystemConfig> {
    let text = std::fs::read_to_string(path)?;
    SystemConfig::from_toml_str(&text)
}
