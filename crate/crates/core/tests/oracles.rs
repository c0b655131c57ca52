//! Library routines checked against independently computed answers.

use cellfree::aps::{apply_mask, combinations, es_candidate_count};
use cellfree::metrics::{ber_qpsk, BerSetup};
use cellfree::pipeline::{evaluate_mask, link_budget, run_on_realization};
use cellfree::power::{antenna_load, apa_cost, apa_gradient, upa};
use cellfree::rng::{stream_rng, SimRng, Stream};
use cellfree::topology::complex_gaussian;
use cellfree::{
    cb_precoder, compute_delta, ls_aps, zf_precoder, CMatrix, ChannelRealization, LinkBudget, RMatrix, Scheme,
    SelectionMask, SystemConfig,
};
use nalgebra::Complex;
use rand::Rng;
use statrs::distribution::{ContinuousCDF, Normal};

fn random_channel(m: usize, k: usize, rng: &mut SimRng) -> CMatrix<f64> {
    CMatrix::from_fn(m, k, |_, _| complex_gaussian(1.0, rng))
}

#[test]
fn zf_matches_pseudo_inverse() {
    let mut rng = stream_rng(1, 0, Stream::Fading, 0);
    for _ in 0..10 {
        let g = random_channel(4, 2, &mut rng);
        // minimum-norm solution of G^T P = I via SVD
        let oracle = g.transpose().pseudo_inverse(1e-12).unwrap();
        let p = zf_precoder(&g).unwrap().p;
        assert!((&p - &oracle).norm() / oracle.norm() < 1e-10);
        assert!((g.transpose() * &p - CMatrix::identity(2, 2)).norm() < 1e-9);
    }
}

#[test]
fn cb_loadings_are_squared_estimates() {
    let mut rng = stream_rng(2, 0, Stream::Fading, 0);
    let g = random_channel(5, 3, &mut rng);
    let out = cb_precoder(&g).unwrap();
    for m in 0..5 {
        for k in 0..3 {
            let z = g[(m, k)];
            assert_eq!(out.p[(m, k)], Complex::new(z.re, -z.im));
            assert!((out.delta[(m, k)] - (z.re * z.re + z.im * z.im)).abs() < 1e-15);
        }
    }
    let single = cb_precoder(&CMatrix::from_element(1, 1, Complex::new(1.0, 2.0))).unwrap();
    assert_eq!(single.p[(0, 0)], Complex::new(1.0, -2.0));
}

#[test]
fn delta_examples() {
    assert_eq!(compute_delta(&CMatrix::<f64>::identity(3, 3)), RMatrix::identity(3, 3));
    let p = CMatrix::from_element(1, 1, Complex::new(3.0, 4.0));
    assert_eq!(compute_delta(&p)[(0, 0)], 25.0);
}

#[test]
fn uniform_allocation_binds_one_antenna() {
    let mut rng = stream_rng(3, 0, Stream::Fading, 0);
    for _ in 0..20 {
        let delta = RMatrix::from_fn(4, 2, |_, _| rng.random_range(0.0..3.0));
        let eta = upa(&delta).unwrap().eta;
        assert_eq!(eta[0], eta[1]);
        let peak = (0..4).map(|m| eta[0] * (delta[(m, 0)] + delta[(m, 1)])).fold(0.0, f64::max);
        assert!((peak - 1.0).abs() < 1e-12);
        assert!((antenna_load(&delta, &eta) - 1.0).abs() < 1e-12);
    }
}

#[test]
fn mask_is_an_elementwise_product() {
    let cfg = SystemConfig { num_aps: 5, antennas_per_ap: 2, selected_aps: 2, num_users: 3, ..SystemConfig::default() };
    let real = ChannelRealization::<f64>::generate(&cfg, 4, 0);
    let mask = SelectionMask::from_selected(5, 2, vec![vec![0, 3], vec![4], vec![]]).unwrap();
    let q = mask.to_matrix();
    let masked = apply_mask(&mask, &real).unwrap();
    for m in 0..10 {
        for k in 0..3 {
            let qf = f64::from(q[(m, k)]);
            assert_eq!(masked.g_hat[(m, k)], real.g_hat[(m, k)] * qf);
            assert_eq!(masked.g_tilde[(m, k)], real.g_tilde[(m, k)] * qf);
            assert_eq!(masked.beta[(m, k)], real.beta[(m, k)] * qf);
            assert_eq!(masked.alpha[(m, k)], real.alpha[(m, k)] * qf);
        }
    }
    assert!(masked.g_hat.column(2).iter().all(|z| *z == Complex::new(0.0, 0.0)));
}

#[test]
fn ls_ranks_antenna_blocks() {
    let beta = RMatrix::from_column_slice(6, 1, &[5.0, 5.0, 9.0, 9.0, 1.0, 1.0]);
    let mask = ls_aps(&beta, 1, 2).unwrap();
    assert_eq!(mask.to_matrix().as_slice(), &[0, 0, 1, 1, 0, 0]);
}

/// A three-AP, one-user realization where AP 1 is nearly disconnected.
fn weak_middle_ap() -> (SystemConfig, ChannelRealization<f64>) {
    let cfg = SystemConfig {
        num_aps: 3,
        antennas_per_ap: 1,
        selected_aps: 2,
        num_users: 1,
        csi_quality: 1.0,
        ..SystemConfig::default()
    };
    let mut real = ChannelRealization::<f64>::generate(&cfg, 9, 0);
    let gains = [1e-10, 1e-22, 2e-10];
    real.beta = RMatrix::from_column_slice(3, 1, &gains);
    real.alpha = real.beta.clone();
    real.g_hat = CMatrix::from_fn(3, 1, |m, _| Complex::new(gains[m].sqrt(), 0.0));
    real.g_tilde = CMatrix::zeros(3, 1);
    real.g = real.g_hat.clone();
    (cfg, real)
}

#[test]
fn exhaustive_selection_matches_brute_force() {
    let (cfg, real) = weak_middle_ap();
    assert_eq!(es_candidate_count(3, 2, 1), 3);
    let budget = link_budget(&cfg, &real, 10.0).unwrap();
    for label in ["MMSE+UPA+ES", "MMSE+OPA+ES", "ZF+OPA+ES"] {
        let scheme: Scheme = label.parse().unwrap();
        let es = run_on_realization(&cfg, &real, scheme, &budget).unwrap();
        assert_eq!(es.mask.selected_aps(0), &[0, 2], "{label}");
        // brute force: rerun the chain on each candidate ourselves
        let best = combinations(3, 2)
            .into_iter()
            .map(|aps| {
                let mask = SelectionMask::from_selected(3, 1, vec![aps]).unwrap();
                evaluate_mask(&cfg, &real, &mask, scheme, &budget).unwrap().metrics.min_sinr
            })
            .fold(f64::NEG_INFINITY, f64::max);
        assert_eq!(es.metrics.min_sinr, best, "{label}");
    }
}

#[test]
fn gradient_matches_finite_differences() {
    let mut rng = stream_rng(5, 0, Stream::Fading, 0);
    for _ in 0..5 {
        let (m, k) = (6, 3);
        let g = random_channel(m, k, &mut rng);
        let p = random_channel(m, k, &mut rng);
        let h = g.transpose() * &p;
        let n = random_channel(k, k, &mut rng);
        let budget = LinkBudget::<f64>::per_antenna(rng.random_range(0.5..4.0), m, 0.3, 1.0);
        let f = rng.random_range(0.5..2.0);
        let grad = apa_gradient(&h, &n, f, &budget);
        let step = 1e-6;
        for i in 0..k {
            for j in 0..k {
                let mut d = [0.0; 2];
                for (part, dir) in [Complex::new(step, 0.0), Complex::new(0.0, step)].into_iter().enumerate() {
                    let (mut up, mut down) = (n.clone(), n.clone());
                    up[(i, j)] += dir;
                    down[(i, j)] -= dir;
                    d[part] = (apa_cost(&h, &up, f, &budget) - apa_cost(&h, &down, f, &budget)) / (2.0 * step);
                }
                let fd = Complex::new(d[0] / 2.0, d[1] / 2.0);
                assert!((fd - grad[(i, j)]).norm() <= 1e-5 * grad.norm(), "entry ({i},{j}): {fd} vs {}", grad[(i, j)]);
            }
        }
    }
}

#[test]
fn cost_matches_sample_average() {
    // C(N) = E||s - y / f||^2 with y = sqrt(rho) G^T P N s + w
    let mut rng = stream_rng(6, 0, Stream::Fading, 0);
    let (m, k) = (5, 2);
    let g = random_channel(m, k, &mut rng);
    let p = random_channel(m, k, &mut rng) * Complex::new(0.4, 0.0);
    let h = g.transpose() * &p;
    let n = CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![Complex::new(0.8, 0.0), Complex::new(1.3, 0.0)]));
    let budget = LinkBudget::<f64>::per_antenna(2.0, m, 0.5, 1.0);
    let f = 1.7;
    let draws = 200_000;
    let mut sum = 0.0;
    let mut sample_rng = stream_rng(6, 0, Stream::Symbols, 0);
    for _ in 0..draws {
        let s = nalgebra::DVector::from_fn(k, |_, _| complex_gaussian(1.0, &mut sample_rng));
        let w = nalgebra::DVector::from_fn(k, |_, _| complex_gaussian(budget.noise_var, &mut sample_rng));
        let y = (&h * &n * &s) * Complex::new(budget.rho_f.sqrt(), 0.0) + w;
        sum += (&s - y / Complex::new(f, 0.0)).norm_squared();
    }
    let empirical = sum / draws as f64;
    let analytic = apa_cost(&h, &n, f, &budget);
    assert!((empirical / analytic - 1.0).abs() < 0.02, "{empirical} vs {analytic}");
}

#[test]
fn single_user_ber_matches_gaussian_tail() {
    // K = 1, conjugate beamforming, perfect CSI: each QPSK branch sees SNR = SINR
    let mut rng = stream_rng(7, 0, Stream::Fading, 0);
    let g = random_channel(4, 1, &mut rng);
    let p = cb_precoder(&g).unwrap().p;
    let psi = (g.transpose() * &p)[(0, 0)].norm_sqr();
    let (rho, eta, sinr) = (1.0, 1.0, 4.0);
    let noise = rho * eta * psi / sinr;
    let setup = BerSetup {
        p: &p,
        eta: &[eta],
        g: &g,
        g_hat: &g,
        rho_f: rho,
        noise_var: noise,
        symbols_per_packet: 1000,
        packets: 20,
    };
    let out = ber_qpsk(&setup, &mut stream_rng(7, 0, Stream::Symbols, 0)).unwrap();
    let expected = 1.0 - Normal::standard().cdf(sinr.sqrt());
    let sd = (expected * (1.0 - expected) / out.bits as f64).sqrt();
    assert!((out.ber - expected).abs() < 3.0 * sd, "BER {} vs Q(2) = {expected} (sd {sd})", out.ber);
}
