//! Remove the overfitting bias from one fit using only the data, then
//! compare ML and de-biased estimates against the truth.
//!
//! ```text
//! cargo run --release --example debias_dataset
//! ```

use cox_overfit::cox::{fit_cox, overfit_markers_identity, FitOptions};
use cox_overfit::debias::{debias_solve, debiased_cumhaz, DebiasOptions};
use cox_overfit::rng_stream;
use cox_overfit::survival::{first_axis_beta, generate_dataset, CensoringSpec, HazardSpec};

fn main() -> cox_overfit::Result<()> {
    let (n, p, signal) = (400, 120, 1.0);
    let hazard = HazardSpec::log_logistic();
    let beta0 = first_axis_beta(p, signal);
    let data = generate_dataset(
        n,
        p,
        &beta0,
        &hazard,
        &CensoringSpec::uniform(4.0),
        &mut rng_stream(11, 0),
    )?;
    let fit = fit_cox(&data, &FitOptions::default())?;

    let res = debias_solve(&data, &fit, &DebiasOptions::default())?;
    println!(
        "S* = {:.3} (true {signal}), kappa* = {:.3}, v* = {:.3}, {} evaluations",
        res.s_star,
        res.kappa_star,
        res.v_star,
        res.diagnostics.trace.len()
    );

    let before = overfit_markers_identity(&fit.beta_hat, &beta0, data.covariates())?;
    let after = overfit_markers_identity(&res.beta_tilde, &beta0, data.covariates())?;
    println!(
        "kappa_hat: ML {:.3}, de-biased {:.3}",
        before.kappa_hat, after.kappa_hat
    );
    println!(
        "beta_1:    ML {:.3}, de-biased {:.3}",
        fit.beta_hat[0], res.beta_tilde[0]
    );

    let (frailty, rescaled) = debiased_cumhaz(&res, &fit);
    println!("\n    t   Lambda0  Breslow  frailty  Breslow/kappa*");
    for t in [0.5, 1.0, 2.0, 3.0] {
        println!(
            "{t:5.2}  {:7.4}  {:7.4}  {:7.4}  {:7.4}",
            hazard.cumulative(t),
            fit.breslow.eval(t),
            frailty.eval(t),
            rescaled.eval(t)
        );
    }
    Ok(())
}
