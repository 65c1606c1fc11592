//! Writes two simulated `date,close` files shaped like the reference basket:
//! mixture margins from the bundled regimes, Gumbel dependence.
//!
//! cargo run -p rainbow-core --example simulate_basket -- data

use std::fs;
use std::path::PathBuf;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rainbow::copula::{CopulaModel, Family};
use rainbow::reproduce::reference_case;

const DAYS: usize = 1533;
const SEED: u64 = 1533;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "data".into()));
    fs::create_dir_all(&dir)?;
    let case = reference_case();
    let theta = case.copula(Family::Gumbel).map_or(1.344, |c| c.param);
    let u = CopulaModel::with_theta(Family::Gumbel, theta)?.sample(DAYS, SEED)?;

    let mut dates = Vec::with_capacity(DAYS + 1);
    let mut d = NaiveDate::from_ymd_opt(2007, 1, 2).unwrap();
    while dates.len() <= DAYS {
        if !matches!(d.weekday(), Weekday::Sat | Weekday::Sun) {
            dates.push(d);
        }
        d += Duration::days(1);
    }

    for (i, (asset, start)) in case.assets.iter().zip([100.0, 120.0]).enumerate() {
        let m = asset.mixture()?;
        let mut close: f64 = start;
        let mut out = String::from("date,close\n");
        out.push_str(&format!("{},{close:.4}\n", dates[0]));
        for (t, pair) in u.iter().enumerate() {
            let p = if i == 0 { pair.0 } else { pair.1 };
            close *= m.quantile(p)?.exp();
            out.push_str(&format!("{},{close:.4}\n", dates[t + 1]));
        }
        let path = dir.join(format!("sim_{}.csv", asset.name.to_lowercase()));
        fs::write(&path, out)?;
        println!("{}: {} closes", path.display(), DAYS + 1);
    }
    Ok(())
}
