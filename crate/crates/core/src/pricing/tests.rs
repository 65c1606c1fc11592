use super::*;
use crate::copula::Family;
use crate::quad::{integrate, QuadConfig};
use crate::risk_neutral::{calibrate_sdf, risk_neutralize};

const R: f64 = 0.025;

fn atos() -> GaussianMixture<f64> {
    GaussianMixture::two(0.07845771, -0.0072328, 0.0603574, 0.000764489, 0.013530408).unwrap()
}

fn dassault() -> GaussianMixture<f64> {
    GaussianMixture::two(0.83729906, 0.00110506, 0.01014017, -0.00101651, 0.03315738).unwrap()
}

fn asset(m: &GaussianMixture<f64>, spot: f64) -> Asset<f64> {
    let sdf = calibrate_sdf(m, R).unwrap();
    Asset { spot, rn: RiskNeutralMixture::from_sdf(m, &sdf).unwrap() }
}

fn market(copula: CopulaModel<f64>, s1: f64, s2: f64) -> MarketModel<f64> {
    MarketModel::new(vec![asset(&atos(), s1), asset(&dassault(), s2)], copula, R).unwrap()
}

fn families() -> Vec<CopulaModel<f64>> {
    vec![
        CopulaModel::gaussian(0.2822).unwrap(),
        CopulaModel::with_theta(Family::Clayton, 0.1766).unwrap(),
        CopulaModel::with_theta(Family::Gumbel, 1.344).unwrap(),
        CopulaModel::with_theta(Family::Frank, 2.3166).unwrap(),
        CopulaModel::with_theta(Family::Tawn, 0.6868).unwrap(),
        CopulaModel::with_theta(Family::Galambos, 0.5995).unwrap(),
        CopulaModel::with_theta(Family::HuslerReiss, 0.9798).unwrap(),
    ]
}

fn within_3se(mc: &PricingResult<f64>, reference: f64) -> bool {
    (mc.price - reference).abs() <= 3.0 * mc.std_error + 1e-12
}

#[test]
fn sure_digital_pays_the_discount_factor() {
    let m = market(CopulaModel::gaussian(0.3).unwrap(), 120.0, 130.0);
    let o = OptionSpec::digital(vec![1e-9, 1e-9]).unwrap();
    let closed = price_digital_closed(&m, &o).unwrap();
    assert!((closed.price - (-R).exp()).abs() < 1e-12);
    assert!((closed.price - 0.975310).abs() < 1e-6);
    let mc = price_mc(&m, &o, 1000, 1).unwrap();
    assert!((mc.price - (-R).exp()).abs() < 1e-12 && mc.std_error == 0.0);
    let never = OptionSpec::digital(vec![1e9, 1e9]).unwrap();
    assert_eq!(price_digital_closed(&m, &never).unwrap().price, 0.0);
}

#[test]
fn single_asset_call_max_is_the_mixture_call() {
    let a = asset(&atos(), 120.0);
    let m = MarketModel::new(vec![a.clone()], CopulaModel::independence(), R).unwrap();
    for k in [110.0, 120.0, 130.0] {
        let mc = price_mc(&m, &OptionSpec::call_max(k).unwrap(), 100_000, 3).unwrap();
        let exact = 120.0 * a.rn.call(k / 120.0);
        assert!(within_3se(&mc, exact), "K = {k}: {} ± {} vs {exact}", mc.price, mc.std_error);
    }
}

/// `e^{-r} ∫∫ payoff(S₁e^x, S₂e^y) f*₁(x) f*₂(y) dx dy` by nested adaptive quadrature.
fn product_density_price(m: &MarketModel<f64>, o: &OptionSpec<f64>) -> f64 {
    let cfg = QuadConfig { abs_tol: 1e-10, rel_tol: 1e-10, max_intervals: 4000 };
    let (a1, a2) = (&m.assets[0], &m.assets[1]);
    let range = |a: &Asset<f64>| {
        let q = a.rn.to_mixture().unwrap();
        (q.quantile(1e-13).unwrap(), q.quantile(1.0 - 1e-13).unwrap())
    };
    let (lo1, hi1) = range(a1);
    let (lo2, hi2) = range(a2);
    let inner = |x: f64| {
        let s1 = a1.spot * x.exp();
        let g = |y: f64| o.payoff(&[s1, a2.spot * y.exp()]) * a2.rn.pdf(y);
        // split at the kink where the second level crosses the first
        let kink = (s1 / a2.spot).ln().clamp(lo2, hi2);
        a1.rn.pdf(x) * (integrate(g, lo2, kink, &cfg).unwrap().value + integrate(g, kink, hi2, &cfg).unwrap().value)
    };
    m.discount() * integrate(inner, lo1, hi1, &cfg).unwrap().value
}

#[test]
fn call_max_under_independence_matches_the_double_integral() {
    let m = market(CopulaModel::independence(), 120.0, 120.0);
    for k in [110.0, 130.0] {
        let o = OptionSpec::call_max(k).unwrap();
        let q = price_quadrature(&m, &o).unwrap().price;
        let oracle = product_density_price(&m, &o);
        assert!((q - oracle).abs() < 1e-4, "K = {k}: {q} vs {oracle}");
    }
}

#[test]
fn comonotone_call_min_of_twins_is_the_single_call() {
    let a = asset(&atos(), 120.0);
    let m = MarketModel::new(vec![a.clone(), a.clone()], CopulaModel::comonotone(), R).unwrap();
    for k in [100.0, 120.0, 135.0] {
        let q = price_quadrature(&m, &OptionSpec::call_min(k).unwrap()).unwrap().price;
        let single = 120.0 * a.rn.call(k / 120.0);
        assert!((q - single).abs() < 1e-6, "K = {k}: {q} vs {single}");
    }
}

#[test]
fn far_out_of_the_money_spread_is_worthless() {
    let m = market(CopulaModel::gaussian(0.2822).unwrap(), 100.0, 120.0);
    let p = price_quadrature(&m, &OptionSpec::spread(1200.0).unwrap()).unwrap().price;
    assert!(p < 1e-4, "{p}");
}

#[test]
fn monte_carlo_agrees_with_the_references() {
    for c in [CopulaModel::gaussian(0.2822).unwrap(), CopulaModel::with_theta(Family::Gumbel, 1.344).unwrap()] {
        let m = market(c.clone(), 120.0, 120.0);
        let sims = simulate(&m, 100_000, 11).unwrap();
        for o in [OptionSpec::call_max(120.0).unwrap(), OptionSpec::call_min(120.0).unwrap(), OptionSpec::digital(vec![120.0, 120.0]).unwrap()] {
            let mc = sims.price(&o).unwrap();
            let reference = price_reference(&m, &o).unwrap().price;
            assert!(within_3se(&mc, reference), "{c} {:?}: {} ± {} vs {reference}", o.kind, mc.price, mc.std_error);
        }
        let m = market(c.clone(), 100.0, 120.0);
        let o = OptionSpec::spread(20.0).unwrap();
        let mc = price_mc(&m, &o, 100_000, 12).unwrap();
        let reference = price_quadrature(&m, &o).unwrap().price;
        assert!(within_3se(&mc, reference), "{c} spread: {} ± {} vs {reference}", mc.price, mc.std_error);
    }
}

#[test]
fn max_dominates_single_calls_which_dominate_min() {
    for c in families() {
        let m = market(c.clone(), 120.0, 120.0);
        for k in [110.0, 120.0, 130.0] {
            let max = price_quadrature(&m, &OptionSpec::call_max(k).unwrap()).unwrap().price;
            let min = price_quadrature(&m, &OptionSpec::call_min(k).unwrap()).unwrap().price;
            for a in &m.assets {
                let single = a.spot * a.rn.call(k / a.spot);
                assert!(max >= single - 1e-8 && single >= min - 1e-8, "{c} K = {k}: {max} {single} {min}");
            }
        }
    }
}

#[test]
fn prices_do_not_increase_with_strike() {
    for c in families() {
        let m = market(c.clone(), 120.0, 120.0);
        let spread = market(c.clone(), 100.0, 120.0);
        let strikes: Vec<f64> = (0..10).map(|i| 100.0 + 4.0 * i as f64).collect();
        for kind in OptionKind::ALL {
            let prices: Vec<f64> = strikes
                .iter()
                .map(|&k| match kind {
                    OptionKind::Spread => price_quadrature(&spread, &OptionSpec::spread(k - 90.0).unwrap()).unwrap().price,
                    OptionKind::Digital => price_digital_closed(&m, &OptionSpec::digital(vec![k, k]).unwrap()).unwrap().price,
                    _ => price_quadrature(&m, &OptionSpec::new(kind, vec![k]).unwrap()).unwrap().price,
                })
                .collect();
            assert!(prices.windows(2).all(|w| w[1] <= w[0] + 1e-9), "{c} {kind}: {prices:?}");
        }
    }
}

#[test]
fn monte_carlo_prices_fall_with_strike_within_noise() {
    let m = market(CopulaModel::with_theta(Family::Tawn, 0.6868).unwrap(), 120.0, 120.0);
    let sims = simulate(&m, 20_000, 4).unwrap();
    let results: Vec<PricingResult<f64>> = (0..10).map(|i| sims.price(&OptionSpec::call_min(100.0 + 4.0 * i as f64).unwrap()).unwrap()).collect();
    for w in results.windows(2) {
        assert!(w[1].price <= w[0].price + 3.0 * w[0].std_error);
    }
}

#[test]
fn digital_prices_stay_in_range_and_follow_dependence() {
    let disc = (-R).exp();
    let mut bounded = families();
    bounded.extend([CopulaModel::independence(), CopulaModel::comonotone(), CopulaModel::countermonotone()]);
    for c in bounded {
        let m = market(c, 120.0, 130.0);
        for k in [1.0, 110.0, 120.0, 130.0, 150.0, 1e4] {
            let p = price_digital_closed(&m, &OptionSpec::digital(vec![k, k]).unwrap()).unwrap().price;
            assert!((0.0..=disc).contains(&p));
        }
    }
    for k in [100.0, 120.0, 125.0, 140.0] {
        let o = OptionSpec::digital(vec![k, k]).unwrap();
        let p = |c: CopulaModel<f64>| price_digital_closed(&market(c, 120.0, 130.0), &o).unwrap().price;
        let (up, ind, down) = (p(CopulaModel::comonotone()), p(CopulaModel::independence()), p(CopulaModel::countermonotone()));
        assert!(up >= ind && ind >= down, "K = {k}: {up} {ind} {down}");
    }
}

#[test]
fn in_the_money_tawn_digital() {
    let m = market(CopulaModel::with_theta(Family::Tawn, 0.6868).unwrap(), 120.0, 130.0);
    let o = OptionSpec::digital(vec![110.0, 130.0 * 110.0 / 120.0]).unwrap();
    let closed = price_digital_closed(&m, &o).unwrap().price;
    assert!((closed - 0.9751964).abs() < 0.002, "{closed}");
    let mc = price_mc(&m, &o, 100_000, 8).unwrap();
    assert!(within_3se(&mc, closed));
}

#[test]
fn discounted_levels_are_martingales() {
    let mut all = families();
    all.push(CopulaModel::student_t(0.3, 6.0).unwrap());
    for c in all {
        let m = market(c.clone(), 100.0, 120.0);
        let sims = simulate(&m, 100_000, 21).unwrap();
        for (i, a) in m.assets.iter().enumerate() {
            let r = sims.discounted_mean(|s| s[i]);
            assert!((r.price - a.spot).abs() <= 3.0 * r.std_error, "{c} asset {i}: {} ± {}", r.price, r.std_error);
        }
    }
}

#[test]
fn simulation_is_reproducible_and_sharded() {
    let m = market(CopulaModel::with_theta(Family::Clayton, 2.0).unwrap(), 100.0, 120.0);
    let o = OptionSpec::spread(10.0).unwrap();
    let a = price_mc(&m, &o, 10_000, 5).unwrap();
    let b = price_mc(&m, &o, 10_000, 5).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.shards, Some(ShardPlan { shard_size: SHARD_SIZE, shards: 3 }));
    assert_ne!(a.price, price_mc(&m, &o, 10_000, 6).unwrap().price);
    assert!(matches!(price_mc(&m, &o, 99, 5), Err(PricingError::TooFewSamples { .. })));
}

#[test]
fn bad_inputs_are_rejected() {
    assert!(OptionSpec::call_max(0.0).is_err());
    assert!(OptionSpec::new(OptionKind::Spread, vec![1.0, 2.0]).is_err());
    let m = market(CopulaModel::independence(), 100.0, 120.0);
    assert!(price_digital_closed(&m, &OptionSpec::digital(vec![1.0]).unwrap()).is_err());
    assert!(matches!(price_quadrature(&m, &OptionSpec::digital(vec![1.0, 1.0]).unwrap()), Err(PricingError::Unsupported { .. })));
    let mut bad = m.clone();
    bad.assets[0].spot = -1.0;
    assert!(bad.validate().is_err());
    let wrong_rate = risk_neutralize(&atos(), 10.0, 0.05).unwrap();
    assert!(MarketModel::new(vec![Asset { spot: 1.0, rn: wrong_rate }], CopulaModel::independence(), R).is_err());
}

#[test]
fn result_json_shape() {
    let m = market(CopulaModel::independence(), 100.0, 120.0);
    let r = price_mc(&m, &OptionSpec::call_max(120.0).unwrap(), 200, 9).unwrap();
    let v: serde_json::Value = serde_json::to_value(&r).unwrap();
    for key in ["price", "std_error", "n", "seed", "method"] {
        assert!(v.get(key).is_some(), "{key}");
    }
    assert_eq!(v["method"], "mc");
    let q = serde_json::to_value(price_quadrature(&m, &OptionSpec::call_max(120.0).unwrap()).unwrap()).unwrap();
    assert_eq!(q["method"], "quadrature");
    assert_eq!(q["std_error"], 0.0);
}

#[test]
fn table_csv_layout() {
    let t = PriceTable {
        title: "t".into(),
        columns: vec!["Normal".into(), "Clayton".into()],
        rows: vec![PriceRow { label: "ATM".into(), cells: vec![Some(7.328), None] }],
    };
    assert_eq!(t.to_csv(), ",Normal,Clayton\nATM,7.32800,NA\n");
}

#[test]
fn single_precision_tracks_double() {
    let a32 = |m: &GaussianMixture<f64>, spot: f32| {
        let c = m.components();
        let m32 = GaussianMixture::<f32>::two(c[0].p as f32, c[0].mu as f32, c[0].sigma as f32, c[1].mu as f32, c[1].sigma as f32).unwrap();
        let sdf = calibrate_sdf(&m32, 0.025_f32).unwrap();
        Asset { spot, rn: RiskNeutralMixture::from_sdf(&m32, &sdf).unwrap() }
    };
    let m32 = MarketModel::new(vec![a32(&atos(), 120.0), a32(&dassault(), 130.0)], CopulaModel::<f32>::gaussian(0.2822).unwrap(), 0.025).unwrap();
    let m64 = market(CopulaModel::gaussian(0.2822).unwrap(), 120.0, 130.0);
    let p32 = price_digital_closed(&m32, &OptionSpec::digital(vec![120.0, 130.0]).unwrap()).unwrap().price;
    let p64 = price_digital_closed(&m64, &OptionSpec::digital(vec![120.0, 130.0]).unwrap()).unwrap().price;
    assert!((p32 as f64 - p64).abs() < 1e-4, "{p32} vs {p64}");
}
