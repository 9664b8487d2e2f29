//! Critical values of the four limit laws, checked against Monte Carlo paths.

use renyi_changepoint::limit::{ks_distance, mc_sample_limit_refined};
use renyi_changepoint::LimitLaw;

fn main() -> renyi_changepoint::Result<()> {
    let laws = [
        ("max-two sup|W|", LimitLaw::max_two_sup_wiener()),
        ("sup |bridge|", LimitLaw::sup_brownian_bridge()),
        ("Gumbel (DE)", LimitLaw::gumbel_de()),
        ("sup W", LimitLaw::sup_wiener()),
    ];
    println!("{:<16} {:>9} {:>9} {:>9}", "law", "q0.90", "q0.95", "q0.99");
    for (name, law) in &laws {
        let q = |p| law.quantile(p).map(|v| format!("{v:9.4}"));
        println!("{name:<16} {} {} {}", q(0.90)?, q(0.95)?, q(0.99)?);
    }

    println!("\nKolmogorov distance, 4000 paths of 1000 steps:");
    for (name, law) in &laws[..2] {
        let sample = mc_sample_limit_refined(law, 4000, 1000, 11)?;
        println!("  {name:<16} {:.4}", ks_distance(&sample, |x| law.cdf(x)));
    }
    Ok(())
}
