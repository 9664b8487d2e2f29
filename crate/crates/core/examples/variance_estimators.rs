//! Split and kernel variance estimates against the true long-run variance.

use renyi_changepoint::dgp::{gen_errors_rep, DgpSpec, ErrorModel};
use renyi_changepoint::variance::{andrews_bandwidth, demean_split, kernel_lrv, split_variance};
use renyi_changepoint::VarianceConfig;

fn main() -> renyi_changepoint::Result<()> {
    let models = [
        ErrorModel::IidNormal,
        ErrorModel::garch_default(),
        ErrorModel::ar1_default(),
        ErrorModel::arma22_default(),
    ];
    let (len, reps) = (2000, 200);
    let cfg = VarianceConfig::kernel();
    println!("T = {len}, split at T/2, {reps} replications");
    println!("{:<12} {:>8} {:>10} {:>10} {:>10}", "errors", "true", "split", "kernel", "bandwidth");
    for m in models {
        let spec = DgpSpec::new(m, len, 3);
        let (mut s, mut k, mut h) = (0.0, 0.0, 0.0);
        for rep in 0..reps {
            let e = gen_errors_rep(&spec, rep)?;
            s += split_variance(&e, len / 2)?;
            k += kernel_lrv(&e, len / 2, &cfg)?;
            h += andrews_bandwidth(&demean_split(&e, len / 2)?)?;
        }
        let n = reps as f64;
        println!("{:<12} {:>8.4} {:>10.4} {:>10.4} {:>10.2}", m.name(), m.true_lrv(), s / n, k / n, h / n);
    }
    Ok(())
}
