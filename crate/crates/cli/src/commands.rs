use std::path::Path;

use rainbow::copula::{CopulaModel, Family};
use rainbow::fitgof::{fit_ifm, information_criteria, select_copula, SelectionConfig};
use rainbow::market_data::{align_pair, load_price_csv, log_returns, summary_of, PriceSeries, SummaryStats};
use rainbow::mixture::{fit_em, EmConfig, FitDiagnostics, GaussianMixture};
use rainbow::pricing::{price_mc, price_reference, Asset, MarketModel, OptionKind, OptionSpec, PricingResult};
use rainbow::report::sig6;
use rainbow::reproduce::{reference_case, reproduce_tables, AlphaSource, ReferenceCase, ReproduceConfig};
use rainbow::risk_neutral::{calibrate_sdf, risk_neutralize, RiskNeutralMixture, SdfParams};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Cli, Command, Format, RunConfig};
use crate::error::{usage, CliError};

/// A finished report, ready to be written.
pub struct Report {
    pub json: Value,
    pub csv: String,
}

impl Report {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.json).expect("reports serialise");
                s.push('\n');
                s
            }
            Format::Csv => self.csv.clone(),
        }
    }
}

pub fn run(cli: &Cli, cfg: &mut RunConfig) -> Result<Report, CliError> {
    match cfg.command {
        Command::Ingest => ingest(cfg),
        Command::FitMargins => fit_margins(cfg),
        Command::Calibrate => calibrate(cli, cfg),
        Command::FitCopula => fit_copula(cfg),
        Command::Gof => gof(cfg),
        Command::Select => select(cfg),
        Command::Price => price(cli, cfg),
        Command::ReproduceTables => reproduce(cli, cfg),
    }
}

fn config_csv(cfg: &RunConfig) -> String {
    let v = serde_json::to_value(cfg).expect("config serialises");
    let mut out = String::from("# config\n");
    if let Value::Object(map) = v {
        for (k, v) in map {
            let text = match v {
                Value::String(s) => s,
                Value::Array(xs) => xs.iter().map(|x| x.as_str().map_or_else(|| x.to_string(), str::to_string)).collect::<Vec<_>>().join(";"),
                Value::Null => "none".to_string(),
                other => other.to_string(),
            };
            out.push_str(&format!("{k},{text}\n"));
        }
    }
    out.push('\n');
    out
}

fn report(cfg: &RunConfig, body: Value, csv_body: String) -> Report {
    let mut json = json!({ "config": cfg });
    if let (Value::Object(top), Value::Object(rest)) = (&mut json, body) {
        top.extend(rest);
    }
    Report { json, csv: config_csv(cfg) + &csv_body }
}

struct Returns {
    names: Vec<String>,
    prices: Vec<PriceSeries<f64>>,
    columns: Vec<Vec<f64>>,
    dropped: usize,
}

fn load_returns(cfg: &RunConfig, want: usize) -> Result<Returns, CliError> {
    if cfg.input.is_empty() {
        return Err(usage(format!("{} needs --input with {want} price file(s)", cfg.command.name())));
    }
    if cfg.input.len() != cfg.assets.len() {
        return Err(usage(format!("{} input files but {} asset names", cfg.input.len(), cfg.assets.len())));
    }
    if want == 2 && cfg.input.len() != 2 {
        return Err(usage(format!("{} needs exactly two price files, got {}", cfg.command.name(), cfg.input.len())));
    }
    let mut prices = cfg
        .input
        .iter()
        .zip(&cfg.assets)
        .map(|(p, a)| load_price_csv::<f64>(p, a))
        .collect::<Result<Vec<_>, _>>()?;
    let mut dropped = 0;
    if prices.len() == 2 {
        let (a, b, d) = align_pair(&prices[0], &prices[1])?;
        prices = vec![a, b];
        dropped = d;
    }
    let columns = prices.iter().map(|p| log_returns(p).map(|r| r.values)).collect::<Result<Vec<_>, _>>()?;
    Ok(Returns { names: cfg.assets.clone(), prices, columns, dropped })
}

fn em_config(cfg: &RunConfig) -> EmConfig {
    EmConfig { seed: cfg.seed, ..EmConfig::default() }
}

fn ingest(cfg: &RunConfig) -> Result<Report, CliError> {
    let r = load_returns(cfg, 1)?;
    let stats = r.columns.iter().map(|c| summary_of(c)).collect::<Result<Vec<_>, _>>()?;
    let mut csv = String::from("asset,closes,first,last,returns,mean,sd,skewness,kurtosis\n");
    let mut assets = Vec::new();
    for ((name, p), s) in r.names.iter().zip(&r.prices).zip(&stats) {
        csv.push_str(&format!(
            "{name},{},{},{},{},{},{},{},{}\n",
            p.len(),
            p.dates[0],
            p.dates[p.len() - 1],
            s.n,
            sig6(s.mean),
            sig6(s.sd),
            sig6(s.skewness),
            sig6(s.kurtosis)
        ));
        assets.push(json!({
            "asset": name,
            "closes": p.len(),
            "first": p.dates[0],
            "last": p.dates[p.len() - 1],
            "last_close": p.last_close(),
            "summary": s,
        }));
    }
    Ok(report(cfg, json!({ "dropped_dates": r.dropped, "assets": assets }), csv))
}

#[derive(Serialize)]
struct MarginFit {
    asset: String,
    mixture: GaussianMixture<f64>,
    diagnostics: FitDiagnostics<f64>,
    empirical: SummaryStats<f64>,
    mixture_moments: rainbow::mixture::Moments<f64>,
}

fn fit_all_margins(cfg: &RunConfig, r: &Returns) -> Result<Vec<MarginFit>, CliError> {
    let em = em_config(cfg);
    r.names
        .iter()
        .zip(&r.columns)
        .map(|(name, x)| {
            let (mixture, diagnostics) = fit_em(x, &em)?;
            Ok(MarginFit {
                asset: name.clone(),
                mixture_moments: mixture.moments(),
                mixture,
                diagnostics,
                empirical: summary_of(x)?,
            })
        })
        .collect()
}

fn mixture_csv_header() -> String {
    String::from("asset,p1,mu1,sigma1,p2,mu2,sigma2")
}

fn mixture_csv_cells(m: &GaussianMixture<f64>) -> String {
    m.components().iter().map(|c| format!("{},{},{}", sig6(c.p), sig6(c.mu), sig6(c.sigma))).collect::<Vec<_>>().join(",")
}

fn fit_margins(cfg: &RunConfig) -> Result<Report, CliError> {
    let r = load_returns(cfg, 1)?;
    let fits = fit_all_margins(cfg, &r)?;
    let mut csv = mixture_csv_header() + ",loglik,iterations,converged,mean,sd,skewness,kurtosis\n";
    for f in &fits {
        let m = &f.mixture_moments;
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            f.asset,
            mixture_csv_cells(&f.mixture),
            sig6(f.diagnostics.loglik),
            f.diagnostics.iterations,
            f.diagnostics.converged,
            sig6(m.mean),
            sig6(m.sd),
            sig6(m.skewness),
            sig6(m.kurtosis)
        ));
    }
    Ok(report(cfg, json!({ "margins": fits }), csv))
}

/// Asset names, their physical margins, and the case they came from if any.
type Margins = (Vec<String>, Vec<GaussianMixture<f64>>, Option<ReferenceCase>);

/// Physical margins: fitted to `--input` when given, else the reference case.
fn physical_margins(cli: &Cli, cfg: &mut RunConfig) -> Result<Margins, CliError> {
    if cfg.input.is_empty() {
        let case = load_case(cli)?;
        let ms = case.assets.iter().map(|a| a.mixture()).collect::<Result<Vec<_>, _>>()?;
        cfg.assets = case.assets.iter().map(|a| a.name.clone()).collect();
        if cli.rate.is_none() {
            cfg.rate = case.rate;
        }
        Ok((cfg.assets.clone(), ms, Some(case)))
    } else {
        let r = load_returns(cfg, 1)?;
        let fits = fit_all_margins(cfg, &r)?;
        Ok((r.names, fits.into_iter().map(|f| f.mixture).collect(), None))
    }
}

fn load_case(cli: &Cli) -> Result<ReferenceCase, CliError> {
    match &cli.params {
        None => Ok(reference_case()),
        Some(p) => read_json(p),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Result<T, CliError> {
    let path = p.display().to_string();
    let text = std::fs::read_to_string(p).map_err(|source| CliError::Io { path: path.clone(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Json { path, source })
}

#[derive(Serialize)]
struct Calibrated {
    asset: String,
    mixture: GaussianMixture<f64>,
    sdf: SdfParams<f64>,
    alpha_used: f64,
    risk_neutral: RiskNeutralMixture<f64>,
    bond_residual: f64,
    underlying_residual: f64,
    expected_growth: f64,
}

fn risk_neutral_margins(cli: &Cli, cfg: &mut RunConfig) -> Result<Vec<Calibrated>, CliError> {
    let (names, ms, case) = physical_margins(cli, cfg)?;
    if case.is_none() && cfg.alpha == AlphaSource::Printed {
        return Err(usage("--alpha printed needs the reference case; fitted margins only have solved exponents"));
    }
    let r = cfg.rate;
    names
        .into_iter()
        .zip(ms)
        .enumerate()
        .map(|(i, (asset, m))| {
            let sdf = calibrate_sdf(&m, r)?;
            let alpha_used = match (&case, cfg.alpha) {
                (Some(c), AlphaSource::Printed) => c.assets[i].alpha,
                _ => sdf.alpha,
            };
            let q = risk_neutralize(&m, alpha_used, r)?;
            let (bond_residual, underlying_residual) = sdf.residuals(&m);
            Ok(Calibrated {
                asset,
                expected_growth: q.expected_growth(),
                mixture: m,
                sdf,
                alpha_used,
                risk_neutral: q,
                bond_residual,
                underlying_residual,
            })
        })
        .collect()
}

fn calibrate(cli: &Cli, cfg: &mut RunConfig) -> Result<Report, CliError> {
    let cal = risk_neutral_margins(cli, cfg)?;
    let mut csv = String::from("asset,alpha,beta,alpha used,bond residual,underlying residual,expected growth,rn means,rn sds,rn weights\n");
    for c in &cal {
        let join = |xs: &[f64]| xs.iter().map(|x| sig6(*x)).collect::<Vec<_>>().join(";");
        csv.push_str(&format!(
            "{},{},{},{},{:e},{:e},{},{},{},{}\n",
            c.asset,
            sig6(c.sdf.alpha),
            sig6(c.sdf.beta),
            sig6(c.alpha_used),
            c.bond_residual,
            c.underlying_residual,
            sig6(c.expected_growth),
            join(&c.risk_neutral.means),
            join(&c.risk_neutral.sds),
            join(&c.risk_neutral.weights)
        ));
    }
    Ok(report(cfg, json!({ "assets": cal }), csv))
}

fn fit_copula(cfg: &RunConfig) -> Result<Report, CliError> {
    let r = load_returns(cfg, 2)?;
    let em = em_config(cfg);
    let n = r.columns[0].len();
    let mut csv = String::from("family,parameters,loglik,aic,bic,boundary\n");
    let mut fits = Vec::new();
    let mut margins = None;
    for &family in &cfg.families {
        let fit = fit_ifm(&r.columns, family, &em)?;
        let (aic, bic) = information_criteria(fit.loglik, fit.copula.params().len(), n);
        let params: Vec<String> = fit.copula.params().iter().map(|p| sig6(*p)).collect();
        csv.push_str(&format!("{},{},{},{},{},{}\n", family.label(), params.join(";"), sig6(fit.loglik), sig6(aic), sig6(bic), fit.boundary));
        fits.push(json!({
            "family": family,
            "copula": fit.copula,
            "loglik": fit.loglik,
            "aic": aic,
            "bic": bic,
            "boundary": fit.boundary,
            "evaluations": fit.evaluations,
        }));
        margins.get_or_insert(fit.margins);
    }
    Ok(report(cfg, json!({ "n": n, "dropped_dates": r.dropped, "margins": margins, "fits": fits }), csv))
}

fn selection(cfg: &RunConfig) -> Result<(Returns, rainbow::fitgof::SelectionReport<f64>), CliError> {
    let r = load_returns(cfg, 2)?;
    let sel = SelectionConfig { em: em_config(cfg), bootstrap: cfg.bootstrap, seed: cfg.seed, ..SelectionConfig::default() };
    let rep = select_copula(&r.columns, &cfg.families, &sel)?;
    Ok((r, rep))
}

fn gof(cfg: &RunConfig) -> Result<Report, CliError> {
    let (r, rep) = selection(cfg)?;
    let mut csv = String::from("family,parameters,statistic,p-value,bootstrap,failed replicates,error\n");
    let mut rows = Vec::new();
    for o in &rep.families {
        match &o.fit {
            Some(f) => {
                let params: Vec<String> = f.params.iter().map(|p| sig6(*p)).collect();
                csv.push_str(&format!(
                    "{},{},{},{},{},{},\n",
                    o.family.label(),
                    params.join(";"),
                    sig6(f.statistic),
                    f.p_value.map_or("NA".into(), sig6),
                    cfg.bootstrap.unwrap_or(0),
                    f.failed_reps.unwrap_or(0)
                ));
                rows.push(json!({
                    "family": o.family,
                    "params": f.params,
                    "statistic": f.statistic,
                    "p_value": f.p_value,
                    "failed_reps": f.failed_reps,
                }));
            }
            None => {
                let e = o.error.clone().unwrap_or_default();
                csv.push_str(&format!("{},NA,NA,NA,{},NA,{}\n", o.family.label(), cfg.bootstrap.unwrap_or(0), e.replace(',', ";")));
                rows.push(json!({ "family": o.family, "error": e }));
            }
        }
    }
    Ok(report(cfg, json!({ "n": rep.n, "dropped_dates": r.dropped, "tests": rows }), csv))
}

fn select(cfg: &RunConfig) -> Result<Report, CliError> {
    let (r, rep) = selection(cfg)?;
    let csv = rep.to_csv();
    let mut body = serde_json::to_value(&rep).expect("selection serialises");
    if let Value::Object(m) = &mut body {
        m.insert("dropped_dates".into(), json!(r.dropped));
        m.insert("selection_config".into(), m.get("config").cloned().unwrap_or(Value::Null));
        m.remove("config");
    }
    Ok(report(cfg, body, csv))
}

fn price(cli: &Cli, cfg: &mut RunConfig) -> Result<Report, CliError> {
    let kind = cfg.kind.ok_or_else(|| usage("price needs --kind (spread, call-max, call-min, digital)"))?;
    if cfg.strikes.is_empty() {
        return Err(usage("price needs --strike"));
    }
    let family = *cfg.families.first().ok_or_else(|| usage("price needs one copula family"))?;
    let market = match &cli.model {
        Some(p) => {
            let m: MarketModel<f64> = read_json(p)?;
            m.validate()?;
            cfg.rate = m.r;
            cfg.families = vec![m.copula.family()];
            cfg.spots = m.assets.iter().map(|a| a.spot).collect();
            m
        }
        None => build_market(cli, cfg, family)?,
    };
    let strikes = if kind == OptionKind::Digital && cfg.strikes.len() == 1 {
        vec![cfg.strikes[0]; market.dim()]
    } else {
        cfg.strikes.clone()
    };
    let spec = OptionSpec::new(kind, strikes)?;
    let mc = price_mc(&market, &spec, cfg.n, cfg.seed)?;
    let reference = price_reference(&market, &spec)?;
    let gap = (mc.price - reference.price) / mc.std_error.max(f64::MIN_POSITIVE);
    let mut csv = String::from("method,price,std error,n,seed\n");
    let line = |r: &PricingResult<f64>| {
        format!("{},{},{},{},{}\n", r.method, sig6(r.price), sig6(r.std_error), r.n, r.seed.map_or("NA".into(), |s| s.to_string()))
    };
    csv.push_str(&line(&mc));
    csv.push_str(&line(&reference));
    Ok(report(
        cfg,
        json!({
            "option": spec,
            "model": market,
            "monte_carlo": mc,
            "reference": reference,
            "mc_minus_reference_in_se": gap,
        }),
        csv,
    ))
}

fn build_market(cli: &Cli, cfg: &mut RunConfig, family: Family) -> Result<MarketModel<f64>, CliError> {
    let copula = if cfg.input.is_empty() {
        let case = load_case(cli)?;
        let c = case.copula(family).ok_or_else(|| usage(format!("the reference case has no {family} copula; pass --input or --model")))?;
        c.model()?
    } else {
        let r = load_returns(cfg, 2)?;
        if cfg.spots.is_empty() {
            cfg.spots = r.prices.iter().map(|p| p.last_close()).collect();
        }
        fit_ifm(&r.columns, family, &em_config(cfg))?.copula
    };
    let cal = risk_neutral_margins(cli, cfg)?;
    if cfg.spots.len() != cal.len() {
        return Err(usage(format!("need {} spots in asset order ({}), got {}", cal.len(), cfg.assets.join(", "), cfg.spots.len())));
    }
    let copula: CopulaModel<f64> = copula;
    let assets = cal.into_iter().zip(&cfg.spots).map(|(c, &spot)| Asset { spot, rn: c.risk_neutral }).collect();
    Ok(MarketModel::new(assets, copula, cfg.rate)?)
}

fn reproduce(cli: &Cli, cfg: &mut RunConfig) -> Result<Report, CliError> {
    let mut case = load_case(cli)?;
    match cli.rate {
        Some(r) => case.rate = r,
        None => cfg.rate = case.rate,
    }
    cfg.assets = case.assets.iter().map(|a| a.name.clone()).collect();
    cfg.families = case.price_columns.clone();
    let rc = ReproduceConfig { n: cfg.n, seed: cfg.seed, alpha: cfg.alpha, ..ReproduceConfig::default() };
    let rep = reproduce_tables(&case, &rc)?;

    // echo every input taken from the case file
    let mut csv = String::from("# inputs\n");
    csv.push_str(&format!("basket,{}\nrate,{}\nreturns,{}\n", case.basket, sig6(case.rate), case.n_returns));
    for a in &case.assets {
        for (j, g) in a.regimes.iter().enumerate() {
            csv.push_str(&format!("{} regime {},{},{},{}\n", a.name, j + 1, sig6(g.p), sig6(g.mu), sig6(g.sigma)));
        }
        csv.push_str(&format!("{} printed alpha,{}\n{} printed beta,{}\n", a.name, sig6(a.alpha), a.name, sig6(a.beta)));
    }
    for c in &case.copulas {
        csv.push_str(&format!("{} parameter,{}\n", c.family.label(), sig6(c.param)));
    }
    for t in &case.tables {
        let spots: Vec<String> = t.spots.iter().map(|s| sig6(*s)).collect();
        csv.push_str(&format!("{} spots,{}\n", t.kind, spots.join(";")));
        for row in &t.rows {
            let ks: Vec<String> = row.strikes.iter().map(|k| sig6(*k)).collect();
            csv.push_str(&format!("{} {} strikes,{}\n", t.kind, row.label, ks.join(";")));
        }
    }
    csv.push('\n');
    csv.push_str(&rep.to_csv());
    let (good, total) = rep.soft_matches();
    Ok(report(cfg, json!({ "case": case, "reproduction": rep, "reported_cells_within_tolerance": [good, total] }), csv))
}
