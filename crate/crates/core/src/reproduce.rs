//! The bundled Atos / Dassault reference case and the price tables it yields.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::copula::{CopulaModel, Family};
use crate::fitgof::information_criteria;
use crate::mixture::GaussianMixture;
use crate::pricing::{price_reference, simulate, Asset, MarketModel, OptionKind, OptionSpec, PriceRow, PriceTable};
use crate::report::sig6;
use crate::risk_neutral::{calibrate_sdf, risk_neutralize, SdfParams};
use crate::Error;

const REFERENCE_JSON: &str = include_str!("../data/reference_case.json");

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regime {
    pub p: f64,
    pub mu: f64,
    pub sigma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentSet {
    pub mean: f64,
    pub sd: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceAsset {
    pub name: String,
    pub regimes: Vec<Regime>,
    /// Reported moments of the fitted mixture.
    pub moments: MomentSet,
    pub empirical: MomentSet,
    pub alpha: f64,
    pub beta: f64,
}

impl ReferenceAsset {
    /// The two-regime mixture; the second weight is `1 - p₁` because the
    /// reported weights do not sum to one exactly.
    pub fn mixture(&self) -> Result<GaussianMixture<f64>, Error> {
        let (a, b) = (self.regimes[0], self.regimes[1]);
        Ok(GaussianMixture::two(a.p, a.mu, a.sigma, b.mu, b.sigma)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCopula {
    pub family: Family,
    pub param: f64,
    pub statistic: f64,
    pub p_value: f64,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
}

impl ReferenceCopula {
    pub fn model(&self) -> Result<CopulaModel<f64>, Error> {
        Ok(CopulaModel::with_theta(self.family, self.param)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub strikes: Vec<f64>,
    pub printed: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceTable {
    pub kind: OptionKind,
    pub title: String,
    pub spots: Vec<f64>,
    pub rows: Vec<ReferenceRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceCase {
    pub basket: String,
    pub rate: f64,
    pub n_returns: usize,
    pub assets: Vec<ReferenceAsset>,
    pub copulas: Vec<ReferenceCopula>,
    pub price_columns: Vec<Family>,
    pub tables: Vec<ReferenceTable>,
}

impl ReferenceCase {
    pub fn copula(&self, family: Family) -> Option<&ReferenceCopula> {
        self.copulas.iter().find(|c| c.family == family)
    }
}

pub fn reference_case() -> ReferenceCase {
    serde_json::from_str(REFERENCE_JSON).expect("bundled reference case parses")
}

/// Which discount-factor exponent drives the risk-neutral margins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphaSource {
    /// The reported values, taken as given.
    #[default]
    Printed,
    /// Solved from the no-arbitrage identities.
    Solved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReproduceConfig {
    pub n: usize,
    pub seed: u64,
    pub alpha: AlphaSource,
    /// Relative deviation from a reported cell counted as a match.
    pub tolerance: f64,
}

impl Default for ReproduceConfig {
    fn default() -> Self {
        ReproduceConfig { n: 100_000, seed: 20_240_611, alpha: AlphaSource::Printed, tolerance: 0.05 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentCheck {
    pub asset: String,
    pub reported: MomentSet,
    pub closed_form: MomentSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SdfCheck {
    pub asset: String,
    pub printed_alpha: f64,
    pub printed_beta: f64,
    pub solved: SdfParams<f64>,
    /// `E*[e^X]` under each exponent; `e^r` when arbitrage-free.
    pub growth_printed: f64,
    pub growth_solved: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriteriaCheck {
    pub family: Family,
    pub loglik: f64,
    pub aic: f64,
    pub bic: f64,
    pub reported_aic: f64,
    pub reported_bic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub mc: f64,
    pub std_error: f64,
    /// Quadrature, or the closed form for the digital.
    pub reference: f64,
    pub printed: Option<f64>,
    pub relative_deviation: Option<f64>,
}

impl Cell {
    pub fn mc_agrees(&self) -> bool {
        (self.mc - self.reference).abs() <= 3.0 * self.std_error + 1e-12
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableReport {
    pub kind: OptionKind,
    pub title: String,
    pub spots: Vec<f64>,
    pub columns: Vec<Family>,
    pub row_labels: Vec<String>,
    pub strikes: Vec<Vec<f64>>,
    /// `cells[row][column]`.
    pub cells: Vec<Vec<Cell>>,
}

impl TableReport {
    fn table(&self, suffix: &str, pick: impl Fn(&Cell) -> Option<f64>) -> PriceTable<f64> {
        PriceTable {
            title: format!("{} ({suffix})", self.title),
            columns: self.columns.iter().map(|f| f.label().to_string()).collect(),
            rows: self
                .row_labels
                .iter()
                .zip(&self.cells)
                .map(|(label, row)| PriceRow { label: label.clone(), cells: row.iter().map(&pick).collect() })
                .collect(),
        }
    }

    pub fn monte_carlo(&self) -> PriceTable<f64> {
        self.table("monte carlo", |c| Some(c.mc))
    }

    pub fn std_errors(&self) -> PriceTable<f64> {
        self.table("standard error", |c| Some(c.std_error))
    }

    pub fn reference(&self) -> PriceTable<f64> {
        self.table("reference", |c| Some(c.reference))
    }

    pub fn printed(&self) -> PriceTable<f64> {
        self.table("reported", |c| c.printed)
    }

    pub fn deviations(&self) -> PriceTable<f64> {
        self.table("relative deviation", |c| c.relative_deviation)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reproduction {
    pub config: ReproduceConfig,
    pub rate: f64,
    pub assets: Vec<String>,
    pub alphas_used: Vec<f64>,
    pub copulas: Vec<CopulaModel<f64>>,
    pub moments: Vec<MomentCheck>,
    pub sdf: Vec<SdfCheck>,
    pub criteria: Vec<CriteriaCheck>,
    pub tables: Vec<TableReport>,
}

impl Reproduction {
    pub fn table(&self, kind: OptionKind) -> Option<&TableReport> {
        self.tables.iter().find(|t| t.kind == kind)
    }

    /// Cells with a reported value, and how many fall inside the tolerance.
    pub fn soft_matches(&self) -> (usize, usize) {
        let devs: Vec<f64> = self.tables.iter().flat_map(|t| t.cells.iter().flatten()).filter_map(|c| c.relative_deviation).collect();
        (devs.iter().filter(|d| d.abs() <= self.config.tolerance).count(), devs.len())
    }

    /// Every section as CSV, separated by blank lines and headed `# title`.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# parameters\n");
        out.push_str(&format!("n,{}\nseed,{}\nalpha,{}\nrate,{}\n", self.config.n, self.config.seed, tag(self.config.alpha), sig6(self.rate)));
        for (a, alpha) in self.assets.iter().zip(&self.alphas_used) {
            out.push_str(&format!("alpha {a},{}\n", sig6(*alpha)));
        }
        for c in &self.copulas {
            let p: Vec<String> = c.params().iter().map(|x| sig6(*x)).collect();
            out.push_str(&format!("{},{}\n", c.family().label(), p.join(";")));
        }
        out.push_str("\n# discount factor\n,printed alpha,solved alpha,printed beta,solved beta,growth printed,growth solved\n");
        for s in &self.sdf {
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                s.asset,
                sig6(s.printed_alpha),
                sig6(s.solved.alpha),
                sig6(s.printed_beta),
                sig6(s.solved.beta),
                sig6(s.growth_printed),
                sig6(s.growth_solved)
            ));
        }
        out.push_str("\n# information criteria\n");
        for c in &self.criteria {
            out.push(',');
            out.push_str(c.family.label());
        }
        out.push('\n');
        type Pick = fn(&CriteriaCheck) -> f64;
        let rows: [(&str, Pick); 5] = [
            ("lnL", |c| c.loglik),
            ("AIC", |c| c.aic),
            ("BIC", |c| c.bic),
            ("reported AIC", |c| c.reported_aic),
            ("reported BIC", |c| c.reported_bic),
        ];
        for (name, pick) in rows {
            out.push_str(name);
            for c in &self.criteria {
                out.push(',');
                out.push_str(&sig6(pick(c)));
            }
            out.push('\n');
        }
        for t in &self.tables {
            for table in [t.monte_carlo(), t.std_errors(), t.reference(), t.printed(), t.deviations()] {
                out.push_str(&format!("\n# {}\n", table.title));
                out.push_str(&table.to_csv());
            }
        }
        out
    }
}

fn tag(a: AlphaSource) -> &'static str {
    match a {
        AlphaSource::Printed => "printed",
        AlphaSource::Solved => "solved",
    }
}

/// Moment, discount-factor and information-criteria checks plus every price
/// table, priced by Monte Carlo and by the deterministic reference.
pub fn reproduce_tables(case: &ReferenceCase, cfg: &ReproduceConfig) -> Result<Reproduction, Error> {
    let r = case.rate;
    let mixtures: Vec<GaussianMixture<f64>> = case.assets.iter().map(|a| a.mixture()).collect::<Result<_, _>>()?;

    let moments = case
        .assets
        .iter()
        .zip(&mixtures)
        .map(|(a, m)| {
            let c = m.moments();
            MomentCheck {
                asset: a.name.clone(),
                reported: a.moments,
                closed_form: MomentSet { mean: c.mean, sd: c.sd, skewness: c.skewness, kurtosis: c.kurtosis },
            }
        })
        .collect();

    let mut sdf = Vec::new();
    for (a, m) in case.assets.iter().zip(&mixtures) {
        let solved = calibrate_sdf(m, r)?;
        sdf.push(SdfCheck {
            asset: a.name.clone(),
            printed_alpha: a.alpha,
            printed_beta: a.beta,
            growth_printed: risk_neutralize(m, a.alpha, r)?.expected_growth(),
            growth_solved: risk_neutralize(m, solved.alpha, r)?.expected_growth(),
            solved,
        });
    }
    let alphas_used: Vec<f64> = match cfg.alpha {
        AlphaSource::Printed => case.assets.iter().map(|a| a.alpha).collect(),
        AlphaSource::Solved => sdf.iter().map(|s| s.solved.alpha).collect(),
    };
    let rn: Vec<_> = mixtures.iter().zip(&alphas_used).map(|(m, &al)| risk_neutralize(m, al, r)).collect::<Result<_, _>>()?;

    let criteria = case
        .copulas
        .iter()
        .map(|c| {
            let (aic, bic) = information_criteria(c.loglik, c.family.n_params(), case.n_returns);
            CriteriaCheck { family: c.family, loglik: c.loglik, aic, bic, reported_aic: c.aic, reported_bic: c.bic }
        })
        .collect();

    let copulas: Vec<CopulaModel<f64>> = case
        .price_columns
        .iter()
        .map(|&f| case.copula(f).ok_or(crate::copula::CopulaError::Singular(f)).map_err(Error::from).and_then(|c| c.model()))
        .collect::<Result<_, _>>()?;

    let jobs: Vec<(usize, usize)> = (0..case.tables.len()).flat_map(|t| (0..copulas.len()).map(move |c| (t, c))).collect();
    let columns: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|&(t, c)| -> Result<Vec<Cell>, Error> {
            let table = &case.tables[t];
            let assets = rn.iter().zip(&table.spots).map(|(q, &spot)| Asset { spot, rn: q.clone() }).collect();
            let market = MarketModel::new(assets, copulas[c].clone(), r)?;
            let sims = simulate(&market, cfg.n, cfg.seed)?;
            table
                .rows
                .iter()
                .map(|row| {
                    let o = OptionSpec::new(table.kind, row.strikes.clone())?;
                    let mc = sims.price(&o)?;
                    let reference = price_reference(&market, &o)?.price;
                    let printed = row.printed.get(c).copied().flatten();
                    Ok(Cell {
                        mc: mc.price,
                        std_error: mc.std_error,
                        reference,
                        printed,
                        relative_deviation: printed.map(|p| (mc.price - p) / p),
                    })
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;

    let tables = case
        .tables
        .iter()
        .enumerate()
        .map(|(t, table)| {
            let cols = &columns[t * copulas.len()..(t + 1) * copulas.len()];
            TableReport {
                kind: table.kind,
                title: table.title.clone(),
                spots: table.spots.clone(),
                columns: case.price_columns.clone(),
                row_labels: table.rows.iter().map(|r| r.label.clone()).collect(),
                strikes: table.rows.iter().map(|r| r.strikes.clone()).collect(),
                cells: (0..table.rows.len()).map(|i| cols.iter().map(|col| col[i].clone()).collect()).collect(),
            }
        })
        .collect();

    Ok(Reproduction {
        config: *cfg,
        rate: r,
        assets: case.assets.iter().map(|a| a.name.clone()).collect(),
        alphas_used,
        copulas,
        moments,
        sdf,
        criteria,
        tables,
    })
}
