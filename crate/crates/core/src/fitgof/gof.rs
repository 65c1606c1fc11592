use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_copula, pseudo_observations, FitError, PseudoObservations};
use crate::copula::{BivariateCdf, CopulaModel, Family};
use crate::scalar::Scalar;

/// Smallest bootstrap accepted by [`bootstrap_pvalue`].
pub const MIN_BOOTSTRAP: usize = 99;

/// `Ĉ(u, v) = #{k : U_k ≤ u, V_k ≤ v} / n`.
#[derive(Debug, Clone)]
pub struct EmpiricalCopula<T> {
    pairs: Vec<(T, T)>,
}

impl<T: Scalar> EmpiricalCopula<T> {
    pub fn new(u: &PseudoObservations<T>) -> Self {
        EmpiricalCopula { pairs: u.pairs() }
    }
}

impl<T: Scalar> BivariateCdf<T> for EmpiricalCopula<T> {
    fn cdf(&self, u: T, v: T) -> T {
        let k = self.pairs.iter().filter(|p| p.0 <= u && p.1 <= v).count();
        T::from_usize(k).expect("count") / T::from_usize(self.pairs.len()).expect("count")
    }
}

/// `Ĉ` at every sample point in `O(n log n)`: sweep in `u`, Fenwick tree over the ranks of `v`.
pub fn empirical_at_points<T: Scalar>(pairs: &[(T, T)]) -> Vec<T> {
    let n = pairs.len();
    let mut vs: Vec<T> = pairs.iter().map(|p| p.1).collect();
    vs.sort_by(|a, b| a.partial_cmp(b).expect("no NaN"));
    vs.dedup();
    let slot = |v: T| vs.partition_point(|&w| w <= v);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| pairs[a].0.partial_cmp(&pairs[b].0).expect("no NaN"));
    let mut tree = vec![0usize; vs.len() + 1];
    let mut counts = vec![0usize; n];
    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && pairs[order[j + 1]].0 == pairs[order[i]].0 {
            j += 1;
        }
        for &k in &order[i..=j] {
            let mut p = slot(pairs[k].1);
            while p < tree.len() {
                tree[p] += 1;
                p += p & p.wrapping_neg();
            }
        }
        for &k in &order[i..=j] {
            let mut p = slot(pairs[k].1);
            let mut c = 0;
            while p > 0 {
                c += tree[p];
                p -= p & p.wrapping_neg();
            }
            counts[k] = c;
        }
        i = j + 1;
    }
    let nn = T::from_usize(n).expect("count");
    counts.into_iter().map(|c| T::from_usize(c).expect("count") / nn).collect()
}

/// `S_n = Σ_i (Ĉ(U_i) - C(U_i))²` over the pseudo-observations.
pub fn cvm_statistic<T: Scalar, C: BivariateCdf<T> + ?Sized>(u: &PseudoObservations<T>, c: &C) -> T {
    let pairs = u.pairs();
    let emp = empirical_at_points(&pairs);
    let mut s = T::zero();
    for (&(a, b), e) in pairs.iter().zip(emp) {
        let d = e - c.cdf(a, b);
        s = s + d * d;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct GofReport<T> {
    pub copula: CopulaModel<T>,
    pub statistic: T,
    pub p_value: T,
    pub bootstrap_reps: usize,
    pub failed_reps: usize,
    pub seed: u64,
}

pub(crate) fn p_value<T: Scalar>(exceed: usize, reps: usize) -> T {
    (T::from_usize(exceed).expect("count") + T::lit(0.5)) / T::from_usize(reps + 1).expect("count")
}

/// Parametric bootstrap of the CvM statistic for `family`, fitted on `u`.
pub fn bootstrap_pvalue<T: Scalar>(u: &PseudoObservations<T>, family: Family, b: usize, seed: u64) -> Result<GofReport<T>, FitError> {
    if b < MIN_BOOTSTRAP {
        return Err(FitError::TooFewReplicates { b, min: MIN_BOOTSTRAP });
    }
    let fit = fit_copula(u, family)?;
    let statistic = cvm_statistic(u, &fit.copula);
    bootstrap_from(u.len(), fit.copula, statistic, b, seed)
}

/// Replicate `i` draws `n` points from `copula` with seed `seed + i`, re-ranks,
/// refits and recomputes the statistic.
pub(crate) fn bootstrap_from<T: Scalar>(
    n: usize,
    copula: CopulaModel<T>,
    statistic: T,
    b: usize,
    seed: u64,
) -> Result<GofReport<T>, FitError> {
    if b < MIN_BOOTSTRAP {
        return Err(FitError::TooFewReplicates { b, min: MIN_BOOTSTRAP });
    }
    let family = copula.family();
    let reps: Vec<Option<T>> = (0..b)
        .into_par_iter()
        .map(|i| {
            let run = || -> Result<T, FitError> {
                let draw = copula.sample(n, seed.wrapping_add(i as u64))?;
                let cols = vec![draw.iter().map(|p| p.0).collect(), draw.iter().map(|p| p.1).collect()];
                let ub = pseudo_observations(&cols)?;
                let refit = fit_copula(&ub, family)?;
                Ok(cvm_statistic(&ub, &refit.copula))
            };
            match run() {
                Ok(s) if s.is_finite() => Some(s),
                Ok(_) => None,
                Err(e) => {
                    log::debug!("bootstrap replicate {i} for {family}: {e}");
                    None
                }
            }
        })
        .collect();
    let failed = reps.iter().filter(|r| r.is_none()).count();
    if failed * 10 > b {
        return Err(FitError::BootstrapFailures { failed, b });
    }
    let exceed = reps.iter().flatten().filter(|&&s| s >= statistic).count();
    Ok(GofReport {
        copula,
        statistic,
        p_value: p_value(exceed, b - failed),
        bootstrap_reps: b,
        failed_reps: failed,
        seed,
    })
}
