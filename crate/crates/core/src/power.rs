//! Per-user power coefficients `eta` under per-antenna constraints
//! `sum_i eta_i delta_{m,i} <= 1`.
//!
//! * UPA: one common coefficient that drives the most loaded antenna to full power.
//! * OPA: max-min SINR by bisection on the target `t`. Each feasibility test
//!   solves the SINR constraints at equality; the interference coupling is a
//!   nonnegative matrix, so a positive solution exists exactly when the
//!   target is reachable without a power cap, and it is then the
//!   componentwise-smallest admissible `eta`. Feasibility reduces to
//!   checking that vector against the antenna constraints.
//! * APA: stochastic-gradient descent on the MSE cost over the diagonal
//!   allocation matrix, rescaled into the constraint set after each step.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::precoding::{LinkBudget, PrecoderOutput};
use crate::scalar::{c, norm_sqr, CMatrix, RMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum AllocationKind {
    Optimal,
    Adaptive,
    Uniform,
}

impl AllocationKind {
    pub const ALL: [AllocationKind; 3] = [AllocationKind::Optimal, AllocationKind::Adaptive, AllocationKind::Uniform];

    pub fn label(self) -> &'static str {
        match self {
            AllocationKind::Optimal => "OPA",
            AllocationKind::Adaptive => "APA",
            AllocationKind::Uniform => "UPA",
        }
    }
}

impl fmt::Display for AllocationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for AllocationKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.label().eq_ignore_ascii_case(s)).ok_or_else(|| Error::Unknown {
            kind: "power allocation",
            name: s.to_string(),
            valid: Self::ALL.map(|k| k.label()).join(", "),
        })
    }
}

/// Closed-form SINR ingredients for a fixed precoder.
///
/// `phi[(k, i)]` is the leakage of user `i`'s beam into user `k`
/// (diagonal unused); `gamma[(k, i)]` is the CSI-error power user `k`
/// receives from beam `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SinrCoefficients<T: Real> {
    pub psi: Vec<T>,
    pub phi: RMatrix<T>,
    pub gamma: RMatrix<T>,
    pub rho_f: T,
    pub noise_var: T,
    pub symbol_power: T,
}

impl<T: Real> SinrCoefficients<T> {
    pub fn num_users(&self) -> usize {
        self.psi.len()
    }

    /// Per-user SINR for coefficients `eta`.
    pub fn sinr(&self, eta: &[T]) -> Vec<T> {
        let k_count = self.num_users();
        let gain = self.rho_f * self.symbol_power;
        (0..k_count)
            .map(|k| {
                let mut interference = T::zero();
                let mut error = T::zero();
                for i in 0..k_count {
                    if i != k {
                        interference += eta[i] * self.phi[(k, i)];
                    }
                    error += eta[i] * self.gamma[(k, i)];
                }
                let num = gain * eta[k] * self.psi[k];
                if num == T::zero() {
                    return T::zero();
                }
                num / (self.noise_var + gain * interference + gain * error)
            })
            .collect()
    }

    pub fn min_sinr(&self, eta: &[T]) -> T {
        self.sinr(eta).into_iter().fold(T::max_value().unwrap(), |a, b| a.min(b))
    }
}

/// Outcome of a power-allocation scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationResult<T: Real> {
    pub kind: AllocationKind,
    pub eta: Vec<T>,
    /// Largest target proven feasible (bisection only).
    pub achieved_t: Option<T>,
    /// Upper end of the final bisection interval.
    pub t_upper: Option<T>,
    pub iterations: usize,
    pub feasible: bool,
    /// MSE cost before the first update and after each update (APA only).
    pub cost_trace: Vec<T>,
}

impl<T: Real> AllocationResult<T> {
    /// Diagonal of `N`: `sqrt(eta)`.
    pub fn n_diag(&self) -> Vec<T> {
        self.eta.iter().map(|e| e.sqrt()).collect()
    }
}

/// `delta_{m,i} = |P_{m,i}|^2`.
pub fn compute_delta<T: Real>(p: &CMatrix<T>) -> RMatrix<T> {
    p.map(norm_sqr)
}

/// `max_m sum_i eta_i delta_{m,i}`: one means some antenna is at full power.
pub fn antenna_load<T: Real>(delta: &RMatrix<T>, eta: &[T]) -> T {
    (0..delta.nrows())
        .map(|m| (0..delta.ncols()).fold(T::zero(), |acc, i| acc + eta[i] * delta[(m, i)]))
        .fold(T::zero(), |a, b| a.max(b))
}

/// Uniform allocation: `eta_k = 1 / max_m sum_i delta_{m,i}` for all users.
pub fn upa<T: Real>(delta: &RMatrix<T>) -> Result<AllocationResult<T>> {
    let k_count = delta.ncols();
    let load = antenna_load(delta, &vec![T::one(); k_count]);
    if !(load > T::zero()) || !load.is_finite() {
        return Err(Error::DegeneratePrecoder("all per-antenna loadings are zero"));
    }
    Ok(AllocationResult {
        kind: AllocationKind::Uniform,
        eta: vec![T::one() / load; k_count],
        achieved_t: None,
        t_upper: None,
        iterations: 1,
        feasible: true,
        cost_trace: Vec::new(),
    })
}

/// Result of one feasibility test.
#[derive(Debug, Clone, PartialEq)]
pub struct Feasibility<T> {
    pub feasible: bool,
    /// Smallest `eta` meeting every SINR target, when the target is feasible.
    pub eta: Option<Vec<T>>,
}

/// Decides whether `min_k SINR_k(eta) >= t` is attainable within the
/// per-antenna constraints, returning the componentwise-minimal `eta`.
pub fn sinr_feasible<T: Real>(t: T, coeffs: &SinrCoefficients<T>, delta: &RMatrix<T>) -> Feasibility<T> {
    let k_count = coeffs.num_users();
    if !(t > T::zero()) {
        return Feasibility { feasible: true, eta: Some(vec![T::zero(); k_count]) };
    }
    let infeasible = Feasibility { feasible: false, eta: None };
    let gain = coeffs.rho_f * coeffs.symbol_power;
    if !(coeffs.noise_var > T::zero()) || !(gain > T::zero()) {
        return infeasible;
    }
    // (diag(psi) - t B) eta = t sigma^2 / (rho sigma_s^2) 1
    let system = DMatrix::from_fn(k_count, k_count, |k, i| {
        let coupling = coeffs.gamma[(k, i)] + if i == k { T::zero() } else { coeffs.phi[(k, i)] };
        let diag = if i == k { coeffs.psi[k] } else { T::zero() };
        diag - t * coupling
    });
    let rhs = DVector::from_element(k_count, t * coeffs.noise_var / gain);
    let Some(eta) = system.lu().solve(&rhs) else {
        return infeasible;
    };
    if eta.iter().any(|&e| !(e > T::zero()) || !e.is_finite()) {
        return infeasible;
    }
    let eta: Vec<T> = eta.iter().copied().collect();
    if antenna_load(delta, &eta) <= T::one() {
        Feasibility { feasible: true, eta: Some(eta) }
    } else {
        infeasible
    }
}

/// Bisection settings for [`opa_bisection`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BisectionParams<T> {
    pub t_lo: T,
    /// Initial upper end; `None` uses twice the best interference-free SINR.
    pub t_hi: Option<T>,
    pub iterations: usize,
    /// Stop once `t_hi - t_lo <= tol * t_hi`.
    pub tol: T,
    /// How many times an unbracketing `t_hi` may be doubled.
    pub max_doublings: usize,
}

impl<T: Real> BisectionParams<T> {
    pub fn new(iterations: usize, tol: T) -> Self {
        Self { t_lo: T::zero(), t_hi: None, iterations, tol, max_doublings: 64 }
    }
}

/// `2 * max_k rho sigma_s^2 psi_k / (sigma_w^2 max_m delta_{m,k})`, finite users only.
pub fn interference_free_bound<T: Real>(coeffs: &SinrCoefficients<T>, delta: &RMatrix<T>) -> Option<T> {
    let gain = coeffs.rho_f * coeffs.symbol_power;
    (0..coeffs.num_users())
        .filter_map(|k| {
            let peak = delta.column(k).iter().fold(T::zero(), |a, &b| a.max(b));
            let bound = gain * coeffs.psi[k] / (coeffs.noise_var * peak);
            (bound.is_finite() && bound > T::zero()).then_some(bound)
        })
        .reduce(|a, b| a.max(b))
        .map(|b| b * T::lit(2.0))
}

/// Max-min SINR allocation by bisection on the epigraph target.
///
/// The `eta` of the last feasible midpoint is scaled up uniformly until an
/// antenna reaches full power; uniform scaling never lowers any SINR.
pub fn opa_bisection<T: Real>(
    coeffs: &SinrCoefficients<T>,
    delta: &RMatrix<T>,
    params: &BisectionParams<T>,
) -> Result<AllocationResult<T>> {
    if params.iterations == 0 {
        return Err(crate::error::param("opa_iterations", "must be at least 1"));
    }
    if !(coeffs.noise_var > T::zero()) {
        return Err(crate::error::param("noise_var", "max-min allocation needs positive noise"));
    }
    let mut lo = params.t_lo.max(T::zero());
    let Some(mut hi) = params.t_hi.or_else(|| interference_free_bound(coeffs, delta)) else {
        // no user can be served at all
        let mut fallback = upa(delta)?;
        fallback.kind = AllocationKind::Optimal;
        fallback.feasible = false;
        fallback.achieved_t = Some(T::zero());
        return Ok(fallback);
    };

    let mut doublings = 0;
    while sinr_feasible(hi, coeffs, delta).feasible {
        if doublings == params.max_doublings {
            return Err(crate::error::param("t_hi", "upper bisection bound stays feasible"));
        }
        log::warn!("bisection upper bound {hi} is feasible; doubling");
        lo = hi;
        hi *= T::lit(2.0);
        doublings += 1;
    }

    let mut best = sinr_feasible(lo, coeffs, delta).eta.filter(|e| e.iter().any(|&v| v > T::zero()));
    let mut iterations = 0;
    while iterations < params.iterations && hi - lo > params.tol * hi {
        let mid = (lo + hi) / T::lit(2.0);
        let test = sinr_feasible(mid, coeffs, delta);
        if test.feasible {
            lo = mid;
            best = test.eta;
        } else {
            hi = mid;
        }
        iterations += 1;
    }

    let eta = match best {
        Some(eta) => {
            let load = antenna_load(delta, &eta);
            let scale = if load > T::zero() { T::one() / load } else { T::one() };
            eta.into_iter().map(|e| e * scale).collect()
        }
        None => upa(delta)?.eta,
    };
    Ok(AllocationResult {
        kind: AllocationKind::Optimal,
        eta,
        achieved_t: Some(lo),
        t_upper: Some(hi),
        iterations,
        feasible: true,
        cost_trace: Vec::new(),
    })
}

/// Step settings for [`apa_sgd`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientParams<T> {
    pub step: T,
    pub iterations: usize,
}

/// Eta above which the gradient recursion is declared divergent.
pub const APA_DIVERGENCE_LIMIT: f64 = 1e6;
/// Starting coefficient for every user.
pub const APA_INITIAL_ETA: f64 = 1e-3;

/// MSE cost `E||s - f^{-1} y||^2` for a (possibly non-diagonal) allocation
/// matrix, with the precoder and normalization held fixed.
pub fn apa_cost<T: Real>(
    effective: &CMatrix<T>,
    n: &CMatrix<T>,
    normalization: T,
    budget: &LinkBudget<T>,
) -> T {
    let k = T::lit(effective.ncols() as f64);
    let inv_f = T::one() / normalization;
    let hn = effective * n;
    let cross = hn.trace().re;
    let quad = hn.iter().fold(T::zero(), |acc, z| acc + norm_sqr(*z));
    k * budget.symbol_power + inv_f * inv_f * k * budget.noise_var
        - T::lit(2.0) * inv_f * budget.rho_f.sqrt() * budget.symbol_power * cross
        + inv_f * inv_f * budget.rho_f * budget.symbol_power * quad
}

/// Wirtinger gradient of [`apa_cost`] with respect to `N^*`:
/// `-f^{-1} sqrt(rho) H^H C_s + f^{-2} rho H^H H N C_s` with `H = G_hat'^T P`.
pub fn apa_gradient<T: Real>(
    effective: &CMatrix<T>,
    n: &CMatrix<T>,
    normalization: T,
    budget: &LinkBudget<T>,
) -> CMatrix<T> {
    let inv_f = T::one() / normalization;
    let h_adj = effective.adjoint();
    let linear = &h_adj * c(-inv_f * budget.rho_f.sqrt() * budget.symbol_power);
    let quadratic = &h_adj * effective * n * c(inv_f * inv_f * budget.rho_f * budget.symbol_power);
    linear + quadratic
}

fn diag_from_eta<T: Real>(eta: &[T]) -> CMatrix<T> {
    let k = eta.len();
    CMatrix::from_fn(k, k, |i, j| if i == j { c(eta[i].sqrt()) } else { c(T::zero()) })
}

/// Stochastic-gradient allocation: `N <- Re(diag(N - mu grad))`,
/// `eta = |N_kk|^2`, then uniform down-scaling into the constraint set.
///
/// Runs exactly `params.iterations` updates starting from `eta = 1e-3`.
pub fn apa_sgd<T: Real>(
    precoder: &PrecoderOutput<T>,
    g_hat: &CMatrix<T>,
    budget: &LinkBudget<T>,
    params: &GradientParams<T>,
) -> Result<AllocationResult<T>> {
    if !(params.step >= T::zero()) {
        return Err(crate::error::param("apa_step", "must be non-negative"));
    }
    if params.iterations == 0 {
        return Err(crate::error::param("apa_iterations", "must be at least 1"));
    }
    let k_count = g_hat.ncols();
    let effective = g_hat.transpose() * &precoder.p;
    let f = precoder.normalization;
    let limit = T::lit(APA_DIVERGENCE_LIMIT);

    let mut eta = vec![T::lit(APA_INITIAL_ETA); k_count];
    let mut trace = vec![apa_cost(&effective, &diag_from_eta(&eta), f, budget)];
    for iteration in 0..params.iterations {
        let n = diag_from_eta(&eta);
        let step = &n - apa_gradient(&effective, &n, f, budget) * c(params.step);
        for (k, e) in eta.iter_mut().enumerate() {
            let nk = step[(k, k)].re;
            *e = nk * nk;
            if !(*e <= limit) {
                return Err(Error::StepSize { iteration, eta: e.to_f64_lossy() });
            }
        }
        let load = antenna_load(&precoder.delta, &eta);
        if load > T::one() {
            let scale = T::one() / load;
            eta.iter_mut().for_each(|e| *e *= scale);
        }
        trace.push(apa_cost(&effective, &diag_from_eta(&eta), f, budget));
    }
    Ok(AllocationResult {
        kind: AllocationKind::Adaptive,
        eta,
        achieved_t: None,
        t_upper: None,
        iterations: params.iterations,
        feasible: true,
        cost_trace: trace,
    })
}
