//! Deployment layout, large-scale fading and small-scale channel draws.
//!
//! Distances and large-scale coefficients are computed per access point and
//! replicated over its `N` antennas, so every `M x K` matrix here is
//! constant on each block of `N` consecutive rows.

use nalgebra::Complex;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::config::SystemConfig;
use crate::error::{Error, Result};
use crate::rng::{stream_rng, SimRng, Stream};
use crate::scalar::{norm_sqr, CMatrix, RMatrix, Real};

/// Access point and user coordinates in meters.
#[derive(Debug, Clone, PartialEq)]
pub struct Topology<T> {
    pub ap_positions: Vec<[T; 2]>,
    pub user_positions: Vec<[T; 2]>,
}

impl<T: Real> Topology<T> {
    /// `L x K` matrix of horizontal AP-user distances.
    pub fn ap_user_distances(&self) -> RMatrix<T> {
        RMatrix::from_fn(self.ap_positions.len(), self.user_positions.len(), |l, k| {
            let [ax, ay] = self.ap_positions[l];
            let [ux, uy] = self.user_positions[k];
            ((ax - ux) * (ax - ux) + (ay - uy) * (ay - uy)).sqrt()
        })
    }
}

/// One coherence block of the downlink channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization<T: Real> {
    pub antennas_per_ap: usize,
    pub topology: Topology<T>,
    /// `M x K` distances, replicated over each AP's antennas.
    pub distances: RMatrix<T>,
    /// Large-scale fading, linear scale.
    pub beta: RMatrix<T>,
    /// Variance of the channel estimate, `n * beta`.
    pub alpha: RMatrix<T>,
    pub g: CMatrix<T>,
    pub g_hat: CMatrix<T>,
    pub g_tilde: CMatrix<T>,
}

impl<T: Real> ChannelRealization<T> {
    /// Draws the full realization for Monte-Carlo trial `trial`. Topology,
    /// shadowing and fading come from separate streams.
    pub fn generate(cfg: &SystemConfig, seed: u64, trial: u64) -> Self {
        let topology = generate_topology(cfg, &mut stream_rng(seed, trial, Stream::Topology, 0));
        let (distances, beta) =
            large_scale_coeffs(&topology, cfg, &mut stream_rng(seed, trial, Stream::Shadowing, 0));
        let small = realize_channel(&beta, cfg.csi_quality, &mut stream_rng(seed, trial, Stream::Fading, 0));
        Self {
            antennas_per_ap: cfg.antennas_per_ap,
            topology,
            distances,
            beta,
            alpha: small.alpha,
            g: small.g,
            g_hat: small.g_hat,
            g_tilde: small.g_tilde,
        }
    }

    pub fn num_antennas(&self) -> usize {
        self.beta.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.beta.ncols()
    }

    pub fn num_aps(&self) -> usize {
        self.num_antennas() / self.antennas_per_ap
    }

    /// Diagonal of `E[g~* g~^T]` per user: `(beta - alpha)` entrywise.
    pub fn error_variance(&self) -> RMatrix<T> {
        &self.beta - &self.alpha
    }
}

/// Places `L` access points and `K` users i.i.d. uniformly on the square.
pub fn generate_topology<T: Real>(cfg: &SystemConfig, rng: &mut SimRng) -> Topology<T> {
    let side = cfg.area_side;
    let point = |rng: &mut SimRng| -> [T; 2] {
        let x: f64 = rng.random::<f64>() * side;
        let y: f64 = rng.random::<f64>() * side;
        [T::lit(x), T::lit(y)]
    };
    let ap_positions = (0..cfg.num_aps).map(|_| point(rng)).collect();
    let user_positions = (0..cfg.num_users).map(|_| point(rng)).collect();
    Topology { ap_positions, user_positions }
}

/// Frequency/height-dependent offset of the three-slope model, in dB.
pub fn path_loss_constant(cfg: &SystemConfig) -> f64 {
    let lf = cfg.carrier_freq_mhz.log10();
    46.3 + 33.9 * lf - 13.82 * cfg.ap_height.log10() - (1.1 * lf - 0.7) * cfg.user_height
        + (1.56 * lf - 0.8)
}

/// Three-slope path loss in dB (a negative number) at horizontal distance `d`.
///
/// The branches are evaluated exactly as written; they need not meet at
/// `d0` and `d1`.
pub fn path_loss_db<T: Real>(d: T, cfg: &SystemConfig) -> T {
    let l = T::lit(path_loss_constant(cfg));
    let d0 = T::lit(cfg.d0);
    let d1 = T::lit(cfg.d1);
    let inner = -l - T::lit(15.0) * d1.log10();
    if d > d1 {
        -l - T::lit(35.0) * d.log10()
    } else if d > d0 {
        inner - T::lit(20.0) * d.log10()
    } else {
        inner - T::lit(20.0) * d0.log10()
    }
}

/// Linear large-scale gain for a link at distance `d`, given a standard
/// normal draw `z`. Shadowing applies only beyond `d1`.
pub fn large_scale_gain<T: Real>(d: T, z: T, cfg: &SystemConfig) -> T {
    let mut db = path_loss_db(d, cfg);
    if d > T::lit(cfg.d1) {
        db += T::lit(cfg.shadow_sigma_db) * z;
    }
    T::lit(10.0).powf(db / T::lit(10.0))
}

/// Distances and large-scale coefficients, both `M x K`.
///
/// One shadowing draw per AP-user pair (drawn even when unused, so stream
/// positions do not depend on geometry), replicated over the AP's antennas.
pub fn large_scale_coeffs<T: Real>(
    topology: &Topology<T>,
    cfg: &SystemConfig,
    rng: &mut SimRng,
) -> (RMatrix<T>, RMatrix<T>) {
    let per_ap = topology.ap_user_distances();
    let (l_count, k_count) = per_ap.shape();
    let n = cfg.antennas_per_ap;
    let mut gains = RMatrix::zeros(l_count, k_count);
    for l in 0..l_count {
        for k in 0..k_count {
            let z: f64 = rng.sample(StandardNormal);
            gains[(l, k)] = large_scale_gain(per_ap[(l, k)], T::lit(z), cfg);
        }
    }
    let distances = RMatrix::from_fn(l_count * n, k_count, |m, k| per_ap[(m / n, k)]);
    let beta = RMatrix::from_fn(l_count * n, k_count, |m, k| gains[(m / n, k)]);
    (distances, beta)
}

/// Small-scale part of a realization.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallScale<T: Real> {
    pub alpha: RMatrix<T>,
    pub g: CMatrix<T>,
    pub g_hat: CMatrix<T>,
    pub g_tilde: CMatrix<T>,
}

/// Draws a circularly-symmetric complex Gaussian with the given variance.
pub fn complex_gaussian<T: Real>(variance: T, rng: &mut SimRng) -> Complex<T> {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    let s = (variance / T::lit(2.0)).sqrt();
    Complex::new(T::lit(x) * s, T::lit(y) * s)
}

/// Draws `g_hat ~ CN(0, n*beta)` and an independent `g_tilde ~ CN(0, (1-n)*beta)`.
pub fn realize_channel<T: Real>(beta: &RMatrix<T>, csi_quality: f64, rng: &mut SimRng) -> SmallScale<T> {
    let n = T::lit(csi_quality);
    let alpha = beta.map(|b| n * b);
    let (rows, cols) = beta.shape();
    let mut g_hat = CMatrix::zeros(rows, cols);
    let mut g_tilde = CMatrix::zeros(rows, cols);
    // column-major traversal keeps the draw order independent of storage tricks
    for k in 0..cols {
        for m in 0..rows {
            g_hat[(m, k)] = complex_gaussian(alpha[(m, k)], rng);
            g_tilde[(m, k)] = complex_gaussian(beta[(m, k)] - alpha[(m, k)], rng);
        }
    }
    let g = &g_hat + &g_tilde;
    SmallScale { alpha, g, g_hat, g_tilde }
}

/// Unitary DFT pilot book: column `k` of a `tau x tau` DFT, unit norm.
pub fn dft_pilots<T: Real>(tau: usize, num_users: usize) -> CMatrix<T> {
    let scale = T::one() / T::lit(tau as f64).sqrt();
    CMatrix::from_fn(tau, num_users, |t, k| {
        let angle = -T::two_pi() * T::lit((t * k) as f64) / T::lit(tau as f64);
        Complex::new(angle.cos() * scale, angle.sin() * scale)
    })
}

/// Estimate variance produced by pilot training: `rho_r tau beta^2 / (1 + rho_r tau beta)`.
pub fn pilot_alpha<T: Real>(beta: T, uplink_power: T, tau: usize) -> T {
    let snr = uplink_power * T::lit(tau as f64);
    snr * beta * beta / (T::one() + snr * beta)
}

/// MMSE channel estimate from uplink training with mutually orthogonal pilots.
///
/// Simulates `y_m = sqrt(rho_r tau) sum_k g_mk Pi_k + w_m` for every antenna
/// and projects it back onto each pilot.
pub fn mmse_pilot_estimate<T: Real>(
    g: &CMatrix<T>,
    beta: &RMatrix<T>,
    pilots: &CMatrix<T>,
    uplink_power: T,
    rng: &mut SimRng,
) -> Result<CMatrix<T>> {
    let (m_count, k_count) = g.shape();
    let tau = pilots.nrows();
    if pilots.ncols() != k_count || beta.shape() != g.shape() {
        return Err(Error::Dimension(format!(
            "channel {m_count}x{k_count}, beta {:?}, pilots {tau}x{}",
            beta.shape(),
            pilots.ncols()
        )));
    }
    let gram = pilots.adjoint() * pilots;
    let deviation = gram
        .iter()
        .enumerate()
        .map(|(idx, z)| {
            let target = if idx % k_count == idx / k_count { T::one() } else { T::zero() };
            (norm_sqr(*z - Complex::new(target, T::zero()))).sqrt().to_f64_lossy()
        })
        .fold(0.0, f64::max);
    if tau < k_count || deviation > 1e-9 {
        return Err(Error::NonOrthogonalPilots(deviation));
    }

    let amp = (uplink_power * T::lit(tau as f64)).sqrt();
    let snr = uplink_power * T::lit(tau as f64);
    let mut g_hat = CMatrix::zeros(m_count, k_count);
    for m in 0..m_count {
        let mut y = nalgebra::DVector::from_fn(tau, |_, _| complex_gaussian(T::one(), rng));
        for k in 0..k_count {
            y += pilots.column(k) * (g[(m, k)] * Complex::new(amp, T::zero()));
        }
        for k in 0..k_count {
            let b = beta[(m, k)];
            let coeff = amp * b / (T::one() + snr * b);
            let proj = pilots.column(k).dotc(&y);
            g_hat[(m, k)] = proj * Complex::new(coeff, T::zero());
        }
    }
    Ok(g_hat)
}
