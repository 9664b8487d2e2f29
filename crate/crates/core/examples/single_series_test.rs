//! Run all three tests on one AR(1) series with a break after 5% of the sample.
//!
//! `cargo run --example single_series_test -- [delta] [seed]`

use renyi_changepoint::dgp::{simulate, ChangeRule, DgpSpec, ErrorModel};
use renyi_changepoint::{run_test, Statistic, TrimSpec, VarianceConfig};

fn main() -> renyi_changepoint::Result<()> {
    let mut args = std::env::args().skip(1);
    let delta: f64 = args.next().map_or(1.5, |a| a.parse().expect("delta"));
    let seed: u64 = args.next().map_or(7, |a| a.parse().expect("seed"));

    let spec = DgpSpec::new(ErrorModel::ar1_default(), 500, seed).with_change(delta, ChangeRule::FivePercent);
    let x = simulate(&spec)?;
    println!("AR(1), T = 500, break of {delta} after t* = {}", ChangeRule::FivePercent.resolve(500));

    let trim = TrimSpec::default();
    for vcfg in [VarianceConfig::split(), VarianceConfig::kernel()] {
        println!("\nvariance: {:?}", vcfg.kind);
        for stat in Statistic::ALL {
            let out = run_test(&x, stat, &trim, &vcfg)?;
            println!(
                "  {:<13} scaled {:>8.4}  p {:.4e}  argmax {:>3}  {}",
                stat.name(),
                out.scaled,
                out.p_value,
                out.argmax,
                if out.rejects(0.05) { "reject" } else { "-" }
            );
        }
    }
    Ok(())
}
