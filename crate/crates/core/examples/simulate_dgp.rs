//! Simulate each error process and summarize the draws.

use renyi_changepoint::dgp::{simulate, ChangeRule, DgpSpec, ErrorModel};

fn main() -> renyi_changepoint::Result<()> {
    let models = [
        ErrorModel::IidNormal,
        ErrorModel::Rademacher,
        ErrorModel::garch_default(),
        ErrorModel::ar1_default(),
        ErrorModel::arma22_default(),
    ];
    let len = 100_000;
    println!("{:<12} {:>9} {:>11} {:>11} {:>9}", "errors", "mean", "var", "stationary", "lrv");
    for m in models {
        let x = simulate(&DgpSpec::new(m, len, 1))?;
        let v = x.as_slice();
        let mean = x.mean();
        let var = v.iter().map(|a| (a - mean).powi(2)).sum::<f64>() / len as f64;
        println!("{:<12} {mean:>9.4} {var:>11.4} {:>11.4} {:>9.4}", m.name(), m.stationary_variance(), m.true_lrv());
    }

    let spec = DgpSpec::new(ErrorModel::garch_default(), 40, 2).with_change(3.0, ChangeRule::Fixed(5));
    println!("\nspec file for a GARCH series with a break:\n{}", spec.to_kv());
    let x = simulate(&spec)?;
    let tail: Vec<String> = x.as_slice()[30..].iter().map(|v| format!("{v:.2}")).collect();
    println!("last ten values: {}", tail.join(" "));
    Ok(())
}
