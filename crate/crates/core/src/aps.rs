//! Access-point selection: the binary mask `Q` and its application.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scalar::{CMatrix, RMatrix, Real};
use crate::topology::ChannelRealization;

/// Which access points serve each user.
///
/// Stored per user as a sorted list of AP indices; the `M x K` view repeats
/// each AP's entry over its `N` antennas, so block structure holds by
/// construction.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SelectionMask {
    num_aps: usize,
    antennas_per_ap: usize,
    selected: Vec<Vec<usize>>,
}

impl SelectionMask {
    /// Every AP serves every user.
    pub fn all(num_aps: usize, antennas_per_ap: usize, num_users: usize) -> Self {
        Self { num_aps, antennas_per_ap, selected: vec![(0..num_aps).collect(); num_users] }
    }

    pub fn from_selected(num_aps: usize, antennas_per_ap: usize, mut selected: Vec<Vec<usize>>) -> Result<Self> {
        for (k, aps) in selected.iter_mut().enumerate() {
            aps.sort_unstable();
            aps.dedup();
            if aps.last().is_some_and(|&l| l >= num_aps) {
                return Err(Error::Dimension(format!("user {k} selects AP beyond {num_aps}")));
            }
        }
        Ok(Self { num_aps, antennas_per_ap, selected })
    }

    pub fn num_users(&self) -> usize {
        self.selected.len()
    }

    pub fn num_antennas(&self) -> usize {
        self.num_aps * self.antennas_per_ap
    }

    /// Sorted AP indices serving user `k`.
    pub fn selected_aps(&self, k: usize) -> &[usize] {
        &self.selected[k]
    }

    /// Whether antenna `m` serves user `k`.
    pub fn contains(&self, m: usize, k: usize) -> bool {
        self.selected[k].binary_search(&(m / self.antennas_per_ap)).is_ok()
    }

    /// Dense 0/1 matrix `Q`.
    pub fn to_matrix(&self) -> RMatrix<u8> {
        RMatrix::from_fn(self.num_antennas(), self.num_users(), |m, k| u8::from(self.contains(m, k)))
    }

    /// Number of ones in column `k`, i.e. `S * N` for a well-formed mask.
    pub fn column_sum(&self, k: usize) -> usize {
        self.selected[k].len() * self.antennas_per_ap
    }
}

/// Channel quantities after masking (the primed parameters).
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedChannel<T: Real> {
    pub beta: RMatrix<T>,
    pub alpha: RMatrix<T>,
    pub g_hat: CMatrix<T>,
    pub g_tilde: CMatrix<T>,
}

impl<T: Real> MaskedChannel<T> {
    /// Diagonal of the masked error covariance, `(1 - n) * beta'` per entry.
    pub fn error_variance(&self) -> RMatrix<T> {
        &self.beta - &self.alpha
    }
}

/// Hadamard product of `Q` with `beta`, `alpha`, `G_hat` and `G_tilde`.
///
/// Selected entries are copied rather than multiplied by one, so an
/// all-ones mask reproduces the inputs bit for bit.
pub fn apply_mask<T: Real>(mask: &SelectionMask, real: &ChannelRealization<T>) -> Result<MaskedChannel<T>> {
    if real.beta.shape() != (mask.num_antennas(), mask.num_users()) {
        return Err(Error::Dimension(format!(
            "mask is {}x{}, channel is {:?}",
            mask.num_antennas(),
            mask.num_users(),
            real.beta.shape()
        )));
    }
    let keep_r = |src: &RMatrix<T>| {
        RMatrix::from_fn(src.nrows(), src.ncols(), |m, k| if mask.contains(m, k) { src[(m, k)] } else { T::zero() })
    };
    let keep_c = |src: &CMatrix<T>| {
        CMatrix::from_fn(src.nrows(), src.ncols(), |m, k| {
            if mask.contains(m, k) {
                src[(m, k)]
            } else {
                nalgebra::Complex::new(T::zero(), T::zero())
            }
        })
    };
    Ok(MaskedChannel {
        beta: keep_r(&real.beta),
        alpha: keep_r(&real.alpha),
        g_hat: keep_c(&real.g_hat),
        g_tilde: keep_c(&real.g_tilde),
    })
}

/// Large-scale-fading selection: each user keeps the `S` APs with the
/// largest `beta`. Ties go to the lower AP index.
pub fn ls_aps<T: Real>(beta: &RMatrix<T>, selected_aps: usize, antennas_per_ap: usize) -> Result<SelectionMask> {
    let (m_count, k_count) = beta.shape();
    if antennas_per_ap == 0 || m_count % antennas_per_ap != 0 {
        return Err(Error::Dimension(format!("{m_count} rows are not a multiple of N = {antennas_per_ap}")));
    }
    let num_aps = m_count / antennas_per_ap;
    if selected_aps == 0 || selected_aps > num_aps {
        return Err(crate::error::param("selected_aps", format!("must lie in 1..={num_aps}")));
    }
    let selected = (0..k_count)
        .map(|k| {
            let mut order: Vec<usize> = (0..num_aps).collect();
            order.sort_by(|&a, &b| {
                let (ba, bb) = (beta[(a * antennas_per_ap, k)], beta[(b * antennas_per_ap, k)]);
                bb.partial_cmp(&ba).unwrap_or(std::cmp::Ordering::Equal).then(a.cmp(&b))
            });
            order.truncate(selected_aps);
            order
        })
        .collect();
    SelectionMask::from_selected(num_aps, antennas_per_ap, selected)
}

/// All `S`-subsets of `0..n` in lexicographic order.
pub fn combinations(n: usize, s: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if s > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        out.push(idx.clone());
        let Some(pos) = (0..s).rev().find(|&i| idx[i] != i + n - s) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..s {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

fn binomial(n: usize, k: usize) -> u128 {
    let k = k.min(n - k);
    (0..k).fold(1u128, |acc, i| acc * (n - i) as u128 / (i + 1) as u128)
}

/// Number of masks exhaustive search visits: `C(L, S)^K`.
pub fn es_candidate_count(num_aps: usize, selected_aps: usize, num_users: usize) -> u128 {
    let per_user = binomial(num_aps, selected_aps);
    (0..num_users).try_fold(1u128, |acc, _| acc.checked_mul(per_user)).unwrap_or(u128::MAX)
}

/// The `index`-th mask in enumeration order: user 0 is the most significant digit.
pub fn es_candidate(
    combos: &[Vec<usize>],
    num_aps: usize,
    antennas_per_ap: usize,
    num_users: usize,
    mut index: u128,
) -> SelectionMask {
    let radix = combos.len() as u128;
    let mut selected = vec![Vec::new(); num_users];
    for k in (0..num_users).rev() {
        selected[k] = combos[(index % radix) as usize].clone();
        index /= radix;
    }
    SelectionMask { num_aps, antennas_per_ap, selected }
}

/// Exhaustive selection: evaluates every mask with `evaluate` (which should
/// run the whole precoding and allocation chain and return the minimum
/// SINR) and keeps the best. Ties go to the earliest candidate.
pub fn es_aps<T, F>(
    num_aps: usize,
    antennas_per_ap: usize,
    num_users: usize,
    selected_aps: usize,
    budget: u64,
    evaluate: F,
) -> Result<(SelectionMask, T)>
where
    T: Real,
    F: Fn(&SelectionMask) -> Result<T> + Sync,
{
    if selected_aps == 0 || selected_aps > num_aps {
        return Err(crate::error::param("selected_aps", format!("must lie in 1..={num_aps}")));
    }
    let required = es_candidate_count(num_aps, selected_aps, num_users);
    if required > budget as u128 {
        return Err(Error::EnumerationBudget { required, budget });
    }
    let combos = combinations(num_aps, selected_aps);
    let scores: Vec<Result<T>> = (0..required as u64)
        .into_par_iter()
        .map(|i| evaluate(&es_candidate(&combos, num_aps, antennas_per_ap, num_users, i as u128)))
        .collect();

    let mut best: Option<(u64, T)> = None;
    for (i, score) in scores.into_iter().enumerate() {
        let score = score?;
        // NaN marks a candidate the chain could not evaluate
        if score.partial_cmp(&score).is_none() {
            continue;
        }
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((i as u64, score));
        }
    }
    let (index, score) = best.unwrap_or((0, T::zero()));
    Ok((es_candidate(&combos, num_aps, antennas_per_ap, num_users, index as u128), score))
}
