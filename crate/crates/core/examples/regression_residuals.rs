//! Change-point tests on OLS, NLS and GMM residuals.

use renyi_changepoint::dgp::{gen_errors, DgpSpec, ErrorModel};
use renyi_changepoint::regression::{
    gmm_fit, gmm_moment_series, nls_fit, nls_residuals, ols_fit, ols_residuals, residual_change_test, DesignMatrix,
    GmmProblem, NlsProblem,
};
use renyi_changepoint::{RealSeries, TrimSpec, VarianceConfig};

fn report(label: &str, e: &RealSeries) -> renyi_changepoint::Result<()> {
    let out = residual_change_test(e, &TrimSpec::default(), &VarianceConfig::split())?;
    println!("  {label:<5} scaled {:>7.3}  p {:.3e}  argmax {}", out.scaled, out.p_value, out.argmax);
    Ok(())
}

fn main() -> renyi_changepoint::Result<()> {
    let n = 300;
    let u = gen_errors(&DgpSpec::new(ErrorModel::IidNormal, n, 21))?.into_vec();
    let x: Vec<f64> = (0..n).map(|t| ((t % 37) as f64) / 37.0).collect();
    // Intercept moves by 1.5 over the last 15 observations.
    let shift = |t: usize| if t >= n - 15 { 1.5 } else { 0.0 };

    let y: Vec<f64> = (0..n).map(|t| 1.0 + 2.0 * x[t] + 0.5 * u[t] + shift(t)).collect();
    let z = DesignMatrix::with_intercept(&[x.clone()])?;
    let y = RealSeries::new(y)?;
    println!("OLS  θ̂ = {:?}", ols_fit(&z, &y)?);
    report("ols", &ols_residuals(&z, &y)?)?;

    let ye: Vec<f64> = (0..n).map(|t| (0.8 * x[t]).exp() + 0.2 * u[t] + shift(t)).collect();
    let p = NlsProblem::exponential(&x, ye, (-5.0, 5.0))?;
    let th = nls_fit(&p)?;
    println!("NLS  θ̂ = {th:?}");
    report("nls", &nls_residuals(&p, &th)?)?;

    let w: Vec<f64> = (0..n).map(|t| 3.0 + u[t] + shift(t)).collect();
    let g = GmmProblem::mean(&w, (-100.0, 100.0))?;
    let th = gmm_fit(&g)?;
    println!("GMM  θ̂ = {th:.4}");
    report("gmm", &gmm_moment_series(&g, th)?)?;
    Ok(())
}
