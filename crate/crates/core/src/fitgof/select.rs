use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::fit_margins;
use super::gof::bootstrap_from;
use super::{cvm_statistic, fit_copula, information_criteria, pseudo_observations, FitError, PseudoObservations};
use crate::copula::Family;
use crate::mixture::{EmConfig, GaussianMixture};
use crate::report::sig6;
use crate::scalar::Scalar;

/// How the copula is fitted: on mixture-margin transforms or on ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MarginMethod {
    #[default]
    Ifm,
    Ranks,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub margins: MarginMethod,
    pub em: EmConfig,
    /// Bootstrap replicates for p-values; none skips the bootstrap.
    pub bootstrap: Option<usize>,
    pub seed: u64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig { margins: MarginMethod::Ifm, em: EmConfig::default(), bootstrap: None, seed: 42 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FamilySummary<T> {
    pub params: Vec<T>,
    pub loglik: T,
    pub aic: T,
    pub bic: T,
    /// CvM statistic on the rank pseudo-observations.
    pub statistic: T,
    pub p_value: Option<T>,
    pub failed_reps: Option<usize>,
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FamilyOutcome<T> {
    pub family: Family,
    pub fit: Option<FamilySummary<T>>,
    pub error: Option<String>,
}

/// Families ordered best first; failed fits trail in input order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rankings {
    pub statistic: Vec<Family>,
    pub aic: Vec<Family>,
    pub bic: Vec<Family>,
    pub loglik: Vec<Family>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct SelectionReport<T> {
    pub n: usize,
    pub config: SelectionConfig,
    pub margins: Option<Vec<GaussianMixture<T>>>,
    pub families: Vec<FamilyOutcome<T>>,
    pub rankings: Rankings,
}

fn summarise<T: Scalar>(
    family: Family,
    fit_u: &PseudoObservations<T>,
    rank_u: &PseudoObservations<T>,
    cfg: &SelectionConfig,
) -> Result<FamilySummary<T>, FitError> {
    let fit = fit_copula(fit_u, family)?;
    let n = rank_u.len();
    let (aic, bic) = information_criteria(fit.loglik, family.n_params(), n);
    let statistic = cvm_statistic(rank_u, &fit.copula);
    let (p_value, failed_reps) = match cfg.bootstrap {
        Some(b) => {
            let g = bootstrap_from(n, fit.copula.clone(), statistic, b, cfg.seed)?;
            (Some(g.p_value), Some(g.failed_reps))
        }
        None => (None, None),
    };
    Ok(FamilySummary {
        params: fit.copula.params().to_vec(),
        loglik: fit.loglik,
        aic,
        bic,
        statistic,
        p_value,
        failed_reps,
        boundary: fit.boundary,
    })
}

fn rank_by<T: Scalar>(results: &[FamilyOutcome<T>], key: impl Fn(&FamilySummary<T>) -> T) -> Vec<Family> {
    let mut ok: Vec<(Family, T)> = results.iter().filter_map(|r| r.fit.as_ref().map(|f| (r.family, key(f)))).collect();
    ok.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
    let mut out: Vec<Family> = ok.into_iter().map(|p| p.0).collect();
    out.extend(results.iter().filter(|r| r.fit.is_none()).map(|r| r.family));
    out
}

/// Fits every family to the pair of series `x` and ranks them by CvM, AIC, BIC and likelihood.
pub fn select_copula<T: Scalar>(x: &[Vec<T>], families: &[Family], cfg: &SelectionConfig) -> Result<SelectionReport<T>, FitError> {
    if families.len() < 2 {
        return Err(FitError::TooFewFamilies(families.len()));
    }
    if x.len() != 2 {
        return Err(FitError::Columns { expected: 2, got: x.len() });
    }
    let rank_u = pseudo_observations(x)?;
    let (margins, fit_u) = match cfg.margins {
        MarginMethod::Ifm => {
            let (m, _, u) = fit_margins(x, &cfg.em)?;
            (Some(m), u)
        }
        MarginMethod::Ranks => (None, rank_u.clone()),
    };
    let results: Vec<FamilyOutcome<T>> = families
        .par_iter()
        .map(|&family| match summarise(family, &fit_u, &rank_u, cfg) {
            Ok(s) => FamilyOutcome { family, fit: Some(s), error: None },
            Err(e) => FamilyOutcome { family, fit: None, error: Some(e.to_string()) },
        })
        .collect();
    let rankings = Rankings {
        statistic: rank_by(&results, |f| f.statistic),
        aic: rank_by(&results, |f| f.aic),
        bic: rank_by(&results, |f| f.bic),
        loglik: rank_by(&results, |f| -f.loglik),
    };
    Ok(SelectionReport { n: rank_u.len(), config: *cfg, margins, families: results, rankings })
}

impl<T: Scalar> SelectionReport<T> {
    pub fn get(&self, family: Family) -> Option<&FamilySummary<T>> {
        self.families.iter().find(|r| r.family == family).and_then(|r| r.fit.as_ref())
    }

    /// One column per family; rows parameter, statistic, p-value, lnL, AIC, BIC.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for r in &self.families {
            out.push(',');
            out.push_str(r.family.label());
        }
        out.push('\n');
        type Cell<T> = fn(&FamilySummary<T>) -> String;
        let rows: [(&str, Cell<T>); 6] = [
            ("parameter", |f| f.params.iter().map(|p| sig6(p.as_f64())).collect::<Vec<_>>().join(";")),
            ("statistic", |f| sig6(f.statistic.as_f64())),
            ("p-value", |f| f.p_value.map_or("NA".to_string(), |p| sig6(p.as_f64()))),
            ("lnL", |f| sig6(f.loglik.as_f64())),
            ("AIC", |f| sig6(f.aic.as_f64())),
            ("BIC", |f| sig6(f.bic.as_f64())),
        ];
        for (name, cell) in rows {
            out.push_str(name);
            for r in &self.families {
                out.push(',');
                out.push_str(&r.fit.as_ref().map_or("NA".to_string(), cell));
            }
            out.push('\n');
        }
        out
    }
}
