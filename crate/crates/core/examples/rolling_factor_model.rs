//! Expanding-window residual tests on the synthetic five-factor fixture.

use renyi_changepoint::app::fixture::{FactorFixture, FACTORS};
use renyi_changepoint::app::{rolling, RollingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fx = FactorFixture::standard(1);
    let table = fx.generate()?;
    let last = table.len() - 1;
    println!("{} rows, intercept shift {} from row {:?}", table.len(), fx.intercept_shift, fx.break_at);

    let cfg = RollingConfig::new("ret", FACTORS.map(String::from).to_vec(), 0, last - 20, last);
    let res = rolling(&cfg, &table)?;
    println!("{:>5} {:>10} {:>10} {:>10}", "end", "renyi p", "cusum p", "de p");
    for row in &res.rows {
        let p: Vec<String> =
            row.stats.iter().map(|s| s.as_ref().map_or("-".into(), |s| format!("{:.2e}", s.p_value))).collect();
        println!("{:>5} {:>10} {:>10} {:>10}", row.end_label, p[0], p[1], p[2]);
    }
    for &s in &res.statistics {
        match res.first_crossing(s, cfg.alpha) {
            Some(end) => println!("{} first rejects at end {end}", s.name()),
            None => println!("{} never rejects", s.name()),
        }
    }
    Ok(())
}
