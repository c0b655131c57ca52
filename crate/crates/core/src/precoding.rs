//! Linear precoders: the power-allocation-aware MMSE design and the
//! conjugate-beamforming / zero-forcing baselines.
//!
//! Channel matrices are `M x K` with column `k` holding user `k`'s
//! coefficients, so the users see `G^T P`. Throughout, `A = conj(G_hat')`.

use std::fmt;
use std::str::FromStr;

use nalgebra::{Cholesky, Complex, Dyn};

use crate::error::{param, Error, Result};
use crate::power::compute_delta;
use crate::scalar::{c, conj, frobenius_sqr, CMatrix, RMatrix, Real};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PrecoderKind {
    /// MMSE design that carries the power-allocation matrix and is re-formed
    /// after the first allocation pass.
    Mmse,
    /// Same filter with `N = I`, never re-formed.
    MmseConventional,
    ZeroForcing,
    ConjugateBeamforming,
}

impl PrecoderKind {
    pub const ALL: [PrecoderKind; 4] = [
        PrecoderKind::Mmse,
        PrecoderKind::MmseConventional,
        PrecoderKind::ZeroForcing,
        PrecoderKind::ConjugateBeamforming,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PrecoderKind::Mmse => "MMSE",
            PrecoderKind::MmseConventional => "MMSE-CONV",
            PrecoderKind::ZeroForcing => "ZF",
            PrecoderKind::ConjugateBeamforming => "CB",
        }
    }

    /// Whether the precoder depends on the allocation matrix `N`.
    pub fn depends_on_allocation(self) -> bool {
        matches!(self, PrecoderKind::Mmse)
    }
}

impl fmt::Display for PrecoderKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for PrecoderKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|k| k.label().eq_ignore_ascii_case(s)).ok_or_else(|| Error::Unknown {
            kind: "precoder",
            name: s.to_string(),
            valid: Self::ALL.map(|k| k.label()).join(", "),
        })
    }
}

/// Per-realization transmit constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkBudget<T> {
    /// Maximum transmit power per antenna.
    pub rho_f: T,
    /// Total transmit energy `E_tr`.
    pub total_energy: T,
    /// Noise variance `sigma_w^2` per user.
    pub noise_var: T,
    /// Symbol energy; the symbol covariance is `symbol_power * I_K`.
    pub symbol_power: T,
}

impl<T: Real> LinkBudget<T> {
    /// Budget with `E_tr = M * rho_f`.
    pub fn per_antenna(rho_f: T, num_antennas: usize, noise_var: T, symbol_power: T) -> Self {
        Self { rho_f, total_energy: T::lit(num_antennas as f64) * rho_f, noise_var, symbol_power }
    }

    /// MMSE regularizer `tr(C_w) / E_tr = K sigma_w^2 / E_tr`.
    pub fn regularizer(&self, num_users: usize) -> T {
        T::lit(num_users as f64) * self.noise_var / self.total_energy
    }

    fn check(&self) -> Result<()> {
        if !(self.total_energy > T::zero()) {
            return Err(param("total_energy", "must be positive"));
        }
        if !(self.rho_f > T::zero()) {
            return Err(param("rho_f", "must be positive"));
        }
        if !(self.noise_var >= T::zero()) {
            return Err(param("noise_var", "must be non-negative"));
        }
        if !(self.symbol_power > T::zero()) {
            return Err(param("symbol_power", "must be positive"));
        }
        Ok(())
    }
}

/// A precoding matrix together with what is needed to re-form it.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecoderOutput<T: Real> {
    pub kind: PrecoderKind,
    /// `M x K` precoder `P`.
    pub p: CMatrix<T>,
    /// Normalization `f`; one for the baselines.
    pub normalization: T,
    /// Per-antenna loadings `|P_{m,i}|^2`.
    pub delta: RMatrix<T>,
    /// `(f / sqrt(rho_f)) P~` for MMSE, `P` otherwise.
    base: CMatrix<T>,
}

impl<T: Real> PrecoderOutput<T> {
    fn new(kind: PrecoderKind, base: CMatrix<T>, normalization: T, allocation: &[T]) -> Result<Self> {
        let p = scale_columns_inv(&base, allocation)?;
        let delta = compute_delta(&p);
        Ok(Self { kind, p, normalization, delta, base })
    }

    /// The allocation-free factor `(f / sqrt(rho_f)) P~` (or `P` for the baselines).
    pub fn base(&self) -> &CMatrix<T> {
        &self.base
    }

    /// Re-forms `P` for the allocation matrix `diag(n)`. Baselines ignore `n`.
    pub fn with_allocation(&self, n: &[T]) -> Result<Self> {
        if !self.kind.depends_on_allocation() {
            return Ok(self.clone());
        }
        Self::new(self.kind, self.base.clone(), self.normalization, n)
    }
}

fn scale_columns_inv<T: Real>(base: &CMatrix<T>, n: &[T]) -> Result<CMatrix<T>> {
    if n.len() != base.ncols() {
        return Err(Error::Dimension(format!("allocation has {} entries for {} users", n.len(), base.ncols())));
    }
    if let Some(bad) = n.iter().find(|&&v| !(v > T::zero()) || !v.is_finite()) {
        return Err(param("allocation", format!("diagonal must be positive and finite, got {bad}")));
    }
    let mut p = base.clone();
    for (k, &nk) in n.iter().enumerate() {
        let inv = c(T::one() / nk);
        p.column_mut(k).iter_mut().for_each(|z| *z *= inv);
    }
    Ok(p)
}

/// How the regularized system is solved.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveForm {
    /// `(A A^H + eps I_M)^{-1} A`, an `M x M` factorization.
    Primal,
    /// `A (A^H A + eps I_K)^{-1}`, a `K x K` factorization.
    Dual,
    /// Dual when `M > K`, primal otherwise.
    Auto,
}

fn add_diagonal<T: Real>(mut m: CMatrix<T>, eps: T) -> CMatrix<T> {
    for i in 0..m.nrows() {
        m[(i, i)] += c(eps);
    }
    m
}

/// Auxiliary MMSE filter `P~ = (G^* G^T + eps I)^{-1} G^*`.
pub fn mmse_auxiliary<T: Real>(g_hat: &CMatrix<T>, eps: T, form: SolveForm) -> Result<CMatrix<T>> {
    if !(eps > T::zero()) {
        return Err(param("regularizer", "must be positive"));
    }
    let a = conj(g_hat);
    let (m, k) = a.shape();
    let dual = match form {
        SolveForm::Primal => false,
        SolveForm::Dual => true,
        SolveForm::Auto => m > k,
    };
    if dual {
        let gram = add_diagonal(a.adjoint() * &a, eps);
        let chol: Cholesky<Complex<T>, Dyn> = Cholesky::new(gram).ok_or(Error::Singular("A^H A + eps I"))?;
        Ok(chol.solve(&a.adjoint()).adjoint())
    } else {
        let outer = add_diagonal(&a * a.adjoint(), eps);
        let chol = Cholesky::new(outer).ok_or(Error::Singular("A A^H + eps I"))?;
        Ok(chol.solve(&a))
    }
}

/// MMSE precoder for allocation `diag(n)`:
/// `P = (f / sqrt(rho_f)) P~ N^{-1}` with `f = sqrt(E_tr / tr(P~ C_s P~^H))`.
pub fn mmse_precoder<T: Real>(g_hat: &CMatrix<T>, n: &[T], budget: &LinkBudget<T>) -> Result<PrecoderOutput<T>> {
    mmse_with_form(g_hat, n, budget, SolveForm::Auto, PrecoderKind::Mmse)
}

pub fn mmse_with_form<T: Real>(
    g_hat: &CMatrix<T>,
    n: &[T],
    budget: &LinkBudget<T>,
    form: SolveForm,
    kind: PrecoderKind,
) -> Result<PrecoderOutput<T>> {
    budget.check()?;
    let eps = budget.regularizer(g_hat.ncols());
    let aux = mmse_auxiliary(g_hat, eps, form)?;
    let power = budget.symbol_power * frobenius_sqr(&aux);
    if !(power > T::zero()) {
        return Err(Error::DegeneratePrecoder("MMSE filter is identically zero"));
    }
    let f = (budget.total_energy / power).sqrt();
    let base = aux * c(f / budget.rho_f.sqrt());
    PrecoderOutput::new(kind, base, f, n)
}

/// The MMSE filter with `N = I`, used without re-forming.
pub fn conventional_mmse_precoder<T: Real>(g_hat: &CMatrix<T>, budget: &LinkBudget<T>) -> Result<PrecoderOutput<T>> {
    let ones = vec![T::one(); g_hat.ncols()];
    mmse_with_form(g_hat, &ones, budget, SolveForm::Auto, PrecoderKind::MmseConventional)
}

/// Zero forcing on the estimate: `P = G^* (G^T G^*)^{-1}`, so `G^T P = I`.
pub fn zf_precoder<T: Real>(g_hat: &CMatrix<T>) -> Result<PrecoderOutput<T>> {
    let a = conj(g_hat);
    let k = a.ncols();
    let gram = a.adjoint() * &a;
    let chol = Cholesky::new(gram).ok_or(Error::Singular("G^T G^*"))?;
    let p = chol.solve(&a.adjoint()).adjoint();
    let residual = (g_hat.transpose() * &p - CMatrix::identity(k, k)).norm();
    let tol = T::default_epsilon().sqrt() * T::lit(k as f64);
    if !(residual <= tol) {
        return Err(Error::Singular("G^T G^* (zero-forcing residual too large)"));
    }
    let ones = vec![T::one(); k];
    PrecoderOutput::new(PrecoderKind::ZeroForcing, p, T::one(), &ones)
}

/// Conjugate beamforming: `P = G^*`.
pub fn cb_precoder<T: Real>(g_hat: &CMatrix<T>) -> Result<PrecoderOutput<T>> {
    let ones = vec![T::one(); g_hat.ncols()];
    PrecoderOutput::new(PrecoderKind::ConjugateBeamforming, conj(g_hat), T::one(), &ones)
}

/// Precoder of the given kind with `N = I`.
pub fn initial_precoder<T: Real>(
    kind: PrecoderKind,
    g_hat: &CMatrix<T>,
    budget: &LinkBudget<T>,
) -> Result<PrecoderOutput<T>> {
    match kind {
        PrecoderKind::Mmse => mmse_precoder(g_hat, &vec![T::one(); g_hat.ncols()], budget),
        PrecoderKind::MmseConventional => conventional_mmse_precoder(g_hat, budget),
        PrecoderKind::ZeroForcing => zf_precoder(g_hat),
        PrecoderKind::ConjugateBeamforming => cb_precoder(g_hat),
    }
}
