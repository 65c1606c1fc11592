use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{Component, GaussianMixture, MixtureError};
use crate::rng::seeded;
use crate::scalar::Scalar;

/// Floor on component variances during the M-step.
pub const VARIANCE_FLOOR: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmInit {
    /// Largest 10% absolute deviations from the median seed the tail regime.
    QuantileSplit,
    RandomResponsibility,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmConfig {
    pub components: usize,
    pub max_iter: usize,
    /// Stop once the log-likelihood gains less than this.
    pub tol: f64,
    pub n_restarts: usize,
    pub seed: u64,
    pub init: EmInit,
}

impl Default for EmConfig {
    fn default() -> Self {
        EmConfig {
            components: 2,
            max_iter: 2000,
            tol: 1e-10,
            n_restarts: 4,
            seed: 42,
            init: EmInit::QuantileSplit,
        }
    }
}

impl EmConfig {
    fn validate(&self) -> Result<(), MixtureError> {
        if self.max_iter < 1 {
            return Err(MixtureError::InvalidConfig("max_iter must be at least 1".into()));
        }
        if !(self.tol > 0.0) {
            return Err(MixtureError::InvalidConfig("tol must be positive".into()));
        }
        if self.components < 1 {
            return Err(MixtureError::InvalidConfig("need at least one component".into()));
        }
        if self.n_restarts < 1 {
            return Err(MixtureError::InvalidConfig("need at least one restart".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitDiagnostics<T> {
    pub loglik: T,
    pub iterations: usize,
    pub converged: bool,
    pub restarts_used: usize,
    pub best_restart: usize,
    pub failed_restarts: usize,
    /// Log-likelihood after every iteration of the winning restart.
    pub loglik_trace: Vec<T>,
}

struct RunOutcome<T> {
    mixture: GaussianMixture<T>,
    loglik: T,
    iterations: usize,
    converged: bool,
    trace: Vec<T>,
}

/// Fits a `cfg.components`-component mixture by expectation–maximization.
///
/// Restart `i` uses seed `cfg.seed + i`; restart 0 uses `cfg.init`, the
/// others random responsibilities. The best likelihood wins, ties going to
/// the lowest index, so the result does not depend on thread scheduling.
pub fn fit_em<T: Scalar>(data: &[T], cfg: &EmConfig) -> Result<(GaussianMixture<T>, FitDiagnostics<T>), MixtureError> {
    cfg.validate()?;
    if data.len() < 10 {
        return Err(MixtureError::TooFewObservations { n: data.len(), min: 10 });
    }
    let runs: Vec<Option<RunOutcome<T>>> = (0..cfg.n_restarts)
        .into_par_iter()
        .map(|i| {
            let init = if i == 0 { cfg.init } else { EmInit::RandomResponsibility };
            run_once(data, cfg, init, cfg.seed.wrapping_add(i as u64))
        })
        .collect();
    let failed = runs.iter().filter(|r| r.is_none()).count();
    let (best_restart, best) = runs
        .into_iter()
        .enumerate()
        .filter_map(|(i, r)| r.map(|r| (i, r)))
        .fold(None::<(usize, RunOutcome<T>)>, |acc, (i, r)| match acc {
            Some((j, b)) if b.loglik >= r.loglik => Some((j, b)),
            _ => Some((i, r)),
        })
        .ok_or(MixtureError::AllRestartsFailed { restarts: cfg.n_restarts })?;
    let diag = FitDiagnostics {
        loglik: best.loglik,
        iterations: best.iterations,
        converged: best.converged,
        restarts_used: cfg.n_restarts,
        best_restart,
        failed_restarts: failed,
        loglik_trace: best.trace,
    };
    Ok((best.mixture.sorted_by_sigma(), diag))
}

fn initial_responsibilities<T: Scalar>(data: &[T], k: usize, init: EmInit, seed: u64) -> Vec<Vec<T>> {
    let n = data.len();
    let mut resp = vec![vec![T::zero(); k]; n];
    match init {
        EmInit::QuantileSplit if k == 2 => {
            let mut sorted: Vec<T> = data.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let median = sorted[n / 2];
            let mut dev: Vec<(T, usize)> = data.iter().enumerate().map(|(i, &x)| ((x - median).abs(), i)).collect();
            dev.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
            let tail = (n / 10).max(2);
            for (rank, &(_, i)) in dev.iter().enumerate() {
                resp[i][if rank < tail { 1 } else { 0 }] = T::one();
            }
        }
        EmInit::QuantileSplit => {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| data[a].partial_cmp(&data[b]).unwrap());
            for (rank, &i) in order.iter().enumerate() {
                resp[i][(rank * k / n).min(k - 1)] = T::one();
            }
        }
        EmInit::RandomResponsibility => {
            let mut rng = seeded(seed);
            for row in resp.iter_mut() {
                let draws: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
                let s: f64 = draws.iter().sum();
                for (r, d) in row.iter_mut().zip(draws) {
                    *r = T::lit(d / s);
                }
            }
        }
    }
    resp
}

/// M-step. Returns `None` when a component collapses.
fn maximize<T: Scalar>(data: &[T], resp: &[Vec<T>], k: usize) -> Option<Vec<Component<T>>> {
    let n = T::from_usize(data.len()).unwrap();
    let floor = T::lit(VARIANCE_FLOOR);
    let mut comps = Vec::with_capacity(k);
    for j in 0..k {
        let nk: T = resp.iter().map(|r| r[j]).sum();
        if !(nk > T::lit(1e-10)) {
            return None;
        }
        let mu = resp.iter().zip(data).map(|(r, &x)| r[j] * x).sum::<T>() / nk;
        let var = resp.iter().zip(data).map(|(r, &x)| r[j] * (x - mu) * (x - mu)).sum::<T>() / nk;
        if !(var > floor) {
            return None;
        }
        comps.push(Component::new(nk / n, mu, var.sqrt()));
    }
    // renormalize against rounding drift
    let s: T = comps.iter().map(|c| c.p).sum();
    for c in comps.iter_mut() {
        c.p = c.p / s;
    }
    Some(comps)
}

/// E-step: fills responsibilities and returns the log-likelihood.
fn expect<T: Scalar>(data: &[T], comps: &[Component<T>], resp: &mut [Vec<T>]) -> T {
    let half = T::lit(0.5);
    let ln_tau = T::TAU().ln();
    let consts: Vec<T> = comps.iter().map(|c| c.p.ln() - c.sigma.ln() - half * ln_tau).collect();
    let mut ll = T::zero();
    let mut lw = vec![T::zero(); comps.len()];
    for (row, &x) in resp.iter_mut().zip(data) {
        for ((w, c), k) in lw.iter_mut().zip(comps).zip(&consts) {
            let z = (x - c.mu) / c.sigma;
            *w = *k - half * z * z;
        }
        let m = lw.iter().copied().fold(T::neg_infinity(), T::max);
        let s: T = lw.iter().map(|&w| (w - m).exp()).sum();
        let lse = m + s.ln();
        for (r, &w) in row.iter_mut().zip(&lw) {
            *r = (w - lse).exp();
        }
        ll = ll + lse;
    }
    ll
}

fn run_once<T: Scalar>(data: &[T], cfg: &EmConfig, init: EmInit, seed: u64) -> Option<RunOutcome<T>> {
    let k = cfg.components;
    let mut resp = initial_responsibilities(data, k, init, seed);
    let mut comps = maximize(data, &resp, k)?;
    let mut ll = expect(data, &comps, &mut resp);
    let mut trace = vec![ll];
    let tol = T::lit(cfg.tol);
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        iterations += 1;
        comps = maximize(data, &resp, k)?;
        let next = expect(data, &comps, &mut resp);
        if !next.is_finite() {
            return None;
        }
        // EM cannot decrease the likelihood beyond rounding
        debug_assert!(
            next >= ll - T::tol(1e-9) * (T::one() + ll.abs()),
            "EM log-likelihood decreased: {ll} -> {next}"
        );
        trace.push(next);
        let gain = next - ll;
        ll = next;
        if gain.abs() < tol {
            converged = true;
            break;
        }
    }
    let mixture = GaussianMixture::new(comps).ok()?;
    Some(RunOutcome { mixture, loglik: ll, iterations, converged, trace })
}
