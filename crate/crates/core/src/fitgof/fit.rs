use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{check_shape, FitError, PseudoObservations};
use crate::copula::{sample_kendall_tau, student_t_ln_density_at, CopulaModel, Family};
use crate::mixture::{fit_em, EmConfig, FitDiagnostics, GaussianMixture};
use crate::optim::brent_minimize;
use crate::scalar::Scalar;
use crate::special::t_quantile;

/// Smallest sample accepted by [`fit_ifm`].
pub const MIN_IFM_LEN: usize = 50;

const XTOL: f64 = 1e-8;
const MAX_ITER: usize = 500;
const T_ROUNDS: usize = 30;
const NU_MIN: f64 = 0.5;
const NU_MAX: f64 = 100.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CopulaFit<T> {
    pub copula: CopulaModel<T>,
    pub loglik: T,
    /// The optimum sits on an edge of the search domain.
    pub boundary: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct IfmResult<T> {
    pub margins: Vec<GaussianMixture<T>>,
    pub margin_diagnostics: Vec<FitDiagnostics<T>>,
    pub copula: CopulaModel<T>,
    /// Copula log-likelihood at the fitted margins.
    pub loglik: T,
    pub boundary: bool,
    pub evaluations: usize,
}

/// Search interval in `s` and the map back to the natural parameter.
struct Domain {
    lo: f64,
    hi: f64,
    map: fn(f64) -> f64,
}

fn domain(family: Family) -> Option<Domain> {
    let d = match family {
        Family::Gaussian => Domain { lo: -8.0, hi: 8.0, map: f64::tanh },
        Family::Clayton => Domain { lo: 1e-4_f64.ln(), hi: 50_f64.ln(), map: f64::exp },
        Family::Frank => Domain { lo: 1e-4_f64.ln(), hi: 100_f64.ln(), map: f64::exp },
        Family::Gumbel => Domain { lo: 1e-6_f64.ln(), hi: 49_f64.ln(), map: |s| 1.0 + s.exp() },
        Family::Galambos | Family::HuslerReiss => Domain { lo: 1e-3_f64.ln(), hi: 50_f64.ln(), map: f64::exp },
        Family::Tawn => Domain { lo: 0.0, hi: 1.0, map: |s| s },
        _ => return None,
    };
    Some(d)
}

fn at_edge(x: f64, lo: f64, hi: f64) -> bool {
    let slack = 1e-5 * (hi - lo);
    x - lo < slack || hi - x < slack
}

/// Sequential sum so that the value does not depend on thread scheduling.
fn loglik<T: Scalar>(c: &CopulaModel<T>, pairs: &[(T, T)]) -> T {
    let mut acc = T::zero();
    for &(u, v) in pairs {
        match c.ln_density(u, v) {
            Ok(l) if !l.is_nan() => acc = acc + l,
            _ => return T::nan(),
        }
    }
    acc
}

fn penalised<T: Scalar>(ll: T) -> T {
    if ll.is_finite() {
        -ll
    } else {
        T::infinity()
    }
}

/// Maximum-likelihood copula parameter on points of the unit square.
pub fn fit_copula<T: Scalar>(u: &PseudoObservations<T>, family: Family) -> Result<CopulaFit<T>, FitError> {
    u.require_bivariate()?;
    let pairs = u.pairs();
    if pairs.len() < 2 {
        return Err(FitError::TooFew { n: pairs.len(), min: 2 });
    }
    if family == Family::StudentT {
        return fit_student_t(&pairs);
    }
    let dom = domain(family).ok_or(FitError::NotEstimable(family))?;
    let build = |s: T| CopulaModel::with_theta(family, T::lit((dom.map)(s.as_f64())));
    let objective = |s: T| match build(s) {
        Ok(c) => penalised(loglik(&c, &pairs)),
        Err(_) => T::infinity(),
    };
    let m = brent_minimize(objective, T::lit(dom.lo), T::lit(dom.hi), T::lit(XTOL), MAX_ITER);
    let copula = build(m.x)?;
    if !m.fx.is_finite() {
        return Err(FitError::NonFinite { family });
    }
    Ok(CopulaFit {
        copula,
        loglik: -m.fx,
        boundary: at_edge(m.x.as_f64(), dom.lo, dom.hi),
        evaluations: m.evaluations,
    })
}

/// Coordinate descent over `(atanh ρ, ln ν)`; quantiles are shared by every
/// ρ step at a fixed ν.
fn fit_student_t<T: Scalar>(pairs: &[(T, T)]) -> Result<CopulaFit<T>, FitError> {
    let family = Family::StudentT;
    let quantiles = |nu: T| -> Vec<(T, T)> { pairs.iter().map(|&(u, v)| (t_quantile(u, nu), t_quantile(v, nu))).collect() };
    let ll_at = |rho: T, nu: T, q: &[(T, T)]| {
        let mut acc = T::zero();
        for &(x, y) in q {
            acc = acc + student_t_ln_density_at(rho, nu, x, y);
        }
        acc
    };
    let (s_lo, s_hi) = (-8.0, 8.0);
    let (l_lo, l_hi) = (NU_MIN.ln(), NU_MAX.ln());

    let tau = sample_kendall_tau(pairs).as_f64();
    let mut s = T::lit((std::f64::consts::FRAC_PI_2 * tau).sin().clamp(-0.999, 0.999).atanh());
    let mut l = T::lit(8_f64.ln());
    let mut best = T::neg_infinity();
    let mut evaluations = 0;
    for _ in 0..T_ROUNDS {
        let nu = l.exp();
        let q = quantiles(nu);
        let ms = brent_minimize(|s: T| penalised(ll_at(s.tanh(), nu, &q)), T::lit(s_lo), T::lit(s_hi), T::lit(XTOL), MAX_ITER);
        s = ms.x;
        let rho = s.tanh();
        let ml = brent_minimize(
            |l: T| penalised(ll_at(rho, l.exp(), &quantiles(l.exp()))),
            T::lit(l_lo),
            T::lit(l_hi),
            T::lit(XTOL),
            MAX_ITER,
        );
        l = ml.x;
        evaluations += ms.evaluations + ml.evaluations;
        let ll = -ml.fx;
        if !ll.is_finite() {
            return Err(FitError::NonFinite { family });
        }
        let gain = ll - best;
        best = best.max(ll);
        if gain.abs() < T::tol(1e-10) * (T::one() + ll.abs()) {
            break;
        }
    }
    let copula = CopulaModel::student_t(s.tanh(), l.exp())?;
    let boundary = at_edge(s.as_f64(), s_lo, s_hi) || at_edge(l.as_f64(), l_lo, l_hi);
    Ok(CopulaFit { copula, loglik: best, boundary, evaluations })
}

/// Fits a mixture to each column and maps the data through the fitted cdfs.
pub(crate) fn fit_margins<T: Scalar>(
    x: &[Vec<T>],
    em: &EmConfig,
) -> Result<(Vec<GaussianMixture<T>>, Vec<FitDiagnostics<T>>, PseudoObservations<T>), FitError> {
    let n = check_shape(x)?;
    if n < MIN_IFM_LEN {
        return Err(FitError::TooFew { n, min: MIN_IFM_LEN });
    }
    let fits: Vec<_> = x.par_iter().map(|col| fit_em(col, em)).collect::<Result<_, _>>()?;
    let eps = T::tol(1e-12);
    let hi = T::one() - eps;
    let cols = fits
        .iter()
        .zip(x)
        .map(|((m, _), col)| col.iter().map(|&v| m.cdf(v).max(eps).min(hi)).collect())
        .collect();
    let u = PseudoObservations::new(cols)?;
    let (margins, diags) = fits.into_iter().unzip();
    Ok((margins, diags, u))
}

/// Inference functions for margins: mixture margins first, then the copula
/// on the fitted probability transforms.
pub fn fit_ifm<T: Scalar>(x: &[Vec<T>], family: Family, em: &EmConfig) -> Result<IfmResult<T>, FitError> {
    if x.len() != 2 {
        return Err(FitError::Columns { expected: 2, got: x.len() });
    }
    let (margins, margin_diagnostics, u) = fit_margins(x, em)?;
    let fit = fit_copula(&u, family)?;
    Ok(IfmResult {
        margins,
        margin_diagnostics,
        copula: fit.copula,
        loglik: fit.loglik,
        boundary: fit.boundary,
        evaluations: fit.evaluations,
    })
}
