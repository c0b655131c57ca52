//! Closed-form SINR and rate, the SNR <-> `rho_f` mapping, and QPSK BER by
//! symbol-level simulation.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{param, Error, Result};
use crate::power::SinrCoefficients;
use crate::precoding::LinkBudget;
use crate::rng::SimRng;
use crate::scalar::{norm_sqr, CMatrix, RMatrix, Real};

/// Builds `psi`, `phi` and `gamma` for precoder `p` on the (masked) estimate.
///
/// `error_var` is the `M x K` diagonal of the CSI-error covariance,
/// `(1 - n) beta'` entrywise.
pub fn sinr_coefficients<T: Real>(
    p: &CMatrix<T>,
    g_hat: &CMatrix<T>,
    error_var: &RMatrix<T>,
    budget: &LinkBudget<T>,
) -> Result<SinrCoefficients<T>> {
    if p.shape() != g_hat.shape() || error_var.shape() != g_hat.shape() {
        return Err(Error::Dimension(format!(
            "precoder {:?}, estimate {:?}, error variance {:?}",
            p.shape(),
            g_hat.shape(),
            error_var.shape()
        )));
    }
    let k_count = g_hat.ncols();
    // h[(k, i)] = g_hat_k^T p_i
    let h = g_hat.transpose() * p;
    let powers = h.map(norm_sqr);
    let delta = p.map(norm_sqr);
    let gamma = error_var.transpose() * &delta;
    let mut phi = powers.clone();
    for k in 0..k_count {
        phi[(k, k)] = T::zero();
    }
    Ok(SinrCoefficients {
        psi: (0..k_count).map(|k| powers[(k, k)]).collect(),
        phi,
        gamma,
        rho_f: budget.rho_f,
        noise_var: budget.noise_var,
        symbol_power: budget.symbol_power,
    })
}

/// Per-user SINR:
/// `rho eta_k psi_k / (sigma^2 + rho sum_{i!=k} eta_i phi_ki + rho sum_i eta_i gamma_ki)`,
/// with `rho` multiplied by the symbol energy.
pub fn analytic_sinr<T: Real>(coeffs: &SinrCoefficients<T>, eta: &[T]) -> Vec<T> {
    coeffs.sinr(eta)
}

/// Per-user and aggregate link quality.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkMetrics<T> {
    pub per_user_sinr: Vec<T>,
    /// `log2(1 + sinr)` in bits/s/Hz.
    pub per_user_rate: Vec<T>,
    pub sum_rate: T,
    pub min_sinr: T,
    pub ber: Option<T>,
}

pub fn rates<T: Real>(per_user_sinr: &[T]) -> LinkMetrics<T> {
    let per_user_rate: Vec<T> = per_user_sinr.iter().map(|&s| (T::one() + s).log2()).collect();
    let sum_rate = per_user_rate.iter().fold(T::zero(), |a, &b| a + b);
    let min_sinr = per_user_sinr.iter().copied().reduce(|a, b| a.min(b)).unwrap_or_else(T::zero);
    LinkMetrics { per_user_sinr: per_user_sinr.to_vec(), per_user_rate, sum_rate, min_sinr, ber: None }
}

pub fn db_to_linear<T: Real>(db: T) -> T {
    T::lit(10.0).powf(db / T::lit(10.0))
}

pub fn linear_to_db<T: Real>(x: T) -> T {
    T::lit(10.0) * x.log10()
}

/// `rho_f = SNR * K * sigma_w^2 / tr(G_hat G_hat^H)` for a linear SNR.
pub fn snr_to_rho_f<T: Real>(snr_linear: T, g_hat: &CMatrix<T>, noise_var: T) -> Result<T> {
    let energy = g_hat.iter().fold(T::zero(), |acc, z| acc + norm_sqr(*z));
    if !(energy > T::zero()) {
        return Err(param("g_hat", "channel estimate is identically zero"));
    }
    Ok(snr_linear * T::lit(g_hat.ncols() as f64) * noise_var / energy)
}

/// Inverse of [`snr_to_rho_f`]: `rho_f tr(G_hat G_hat^H) / (K sigma_w^2)`.
pub fn rho_f_to_snr<T: Real>(rho_f: T, g_hat: &CMatrix<T>, noise_var: T) -> T {
    let energy = g_hat.iter().fold(T::zero(), |acc, z| acc + norm_sqr(*z));
    rho_f * energy / (T::lit(g_hat.ncols() as f64) * noise_var)
}

/// Inputs of a BER simulation for one realization.
#[derive(Debug, Clone, Copy)]
pub struct BerSetup<'a, T: Real> {
    /// Final precoder.
    pub p: &'a CMatrix<T>,
    /// Final power coefficients.
    pub eta: &'a [T],
    /// True channel the symbols travel through.
    pub g: &'a CMatrix<T>,
    /// Estimate the receiver gain is derived from.
    pub g_hat: &'a CMatrix<T>,
    pub rho_f: T,
    pub noise_var: T,
    pub symbols_per_packet: usize,
    pub packets: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BerOutcome<T> {
    pub ber: T,
    pub bit_errors: u64,
    pub bits: u64,
    /// Users whose effective gain vanished; their bits count as coin flips.
    pub flagged_users: Vec<usize>,
}

/// Effective gains below this fraction of the strongest are treated as zero.
pub const GAIN_FLOOR: f64 = 1e-12;

/// Gray-mapped unit-energy QPSK through `y = sqrt(rho_f) G^T P N s + w`.
///
/// Each user divides by `a_k = sqrt(rho_f) g_hat_k^T p_k sqrt(eta_k)` and
/// slices to the nearest constellation point.
pub fn ber_qpsk<T: Real>(setup: &BerSetup<'_, T>, rng: &mut SimRng) -> Result<BerOutcome<T>> {
    let BerSetup { p, eta, g, g_hat, rho_f, noise_var, symbols_per_packet, packets } = *setup;
    let (m_count, k_count) = p.shape();
    if g.shape() != (m_count, k_count) || g_hat.shape() != (m_count, k_count) || eta.len() != k_count {
        return Err(Error::Dimension(format!(
            "precoder {:?}, channel {:?}, estimate {:?}, {} coefficients",
            p.shape(),
            g.shape(),
            g_hat.shape(),
            eta.len()
        )));
    }
    if !(noise_var >= T::zero()) || !(rho_f > T::zero()) {
        return Err(param("noise_var", "noise must be non-negative and rho_f positive"));
    }
    let amp = rho_f.sqrt();
    let weights: Vec<T> = eta.iter().map(|e| e.max(T::zero()).sqrt()).collect();
    // effective precoder W = sqrt(rho) P diag(sqrt(eta)); users see G^T W
    let mut w = p.clone();
    for (k, &wk) in weights.iter().enumerate() {
        w.column_mut(k).iter_mut().for_each(|z| *z *= nalgebra::Complex::new(amp * wk, T::zero()));
    }
    let through = g.transpose() * &w;
    let gains: Vec<nalgebra::Complex<T>> =
        (0..k_count).map(|k| (g_hat.column(k).transpose() * w.column(k))[(0, 0)]).collect();
    let peak = gains.iter().fold(T::zero(), |a, z| a.max(norm_sqr(*z).sqrt()));
    let floor = peak * T::lit(GAIN_FLOOR);
    let flagged_users: Vec<usize> = (0..k_count).filter(|&k| !(norm_sqr(gains[k]).sqrt() > floor)).collect();

    let noise_scale = (noise_var / T::lit(2.0)).sqrt();
    let half = T::lit(std::f64::consts::FRAC_1_SQRT_2);
    let total_symbols = (symbols_per_packet * packets) as u64;
    let mut bit_errors = 0u64;
    let mut bits_tx = vec![[false; 2]; k_count];
    let mut s = vec![nalgebra::Complex::new(T::zero(), T::zero()); k_count];
    for _ in 0..total_symbols {
        for k in 0..k_count {
            let b0: bool = rng.random();
            let b1: bool = rng.random();
            bits_tx[k] = [b0, b1];
            // Gray map: bit 0 -> +, bit 1 -> -
            let re = if b0 { -half } else { half };
            let im = if b1 { -half } else { half };
            s[k] = nalgebra::Complex::new(re, im);
        }
        for k in 0..k_count {
            let nr: f64 = rng.sample(StandardNormal);
            let ni: f64 = rng.sample(StandardNormal);
            if flagged_users.contains(&k) {
                continue;
            }
            let mut y = nalgebra::Complex::new(T::lit(nr) * noise_scale, T::lit(ni) * noise_scale);
            for i in 0..k_count {
                y += through[(k, i)] * s[i];
            }
            let z = y / gains[k];
            bit_errors += u64::from((z.re < T::zero()) != bits_tx[k][0]);
            bit_errors += u64::from((z.im < T::zero()) != bits_tx[k][1]);
        }
    }
    // coin-flip users contribute exactly half their bits
    bit_errors += flagged_users.len() as u64 * total_symbols;
    let bits = 2 * k_count as u64 * total_symbols;
    if !flagged_users.is_empty() {
        log::debug!("users {flagged_users:?} have vanishing effective gain; counted as BER 0.5");
    }
    let ber = if bits == 0 { T::zero() } else { T::lit(bit_errors as f64 / bits as f64) };
    Ok(BerOutcome { ber, bit_errors, bits, flagged_users })
}
