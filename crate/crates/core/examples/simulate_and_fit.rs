//! Simulate one overfitted dataset, fit the Cox model and compare the
//! Breslow estimator against the true cumulative hazard.
//!
//! ```text
//! cargo run --release --example simulate_and_fit -- [n] [p]
//! ```

use cox_overfit::cox::{fit_cox, overfit_markers_identity, FitOptions};
use cox_overfit::rng_stream;
use cox_overfit::survival::{first_axis_beta, generate_dataset, nelson_aalen, CensoringSpec, HazardSpec};

fn main() -> cox_overfit::Result<()> {
    let mut args = std::env::args()
        .skip(1)
        .map(|a| a.parse::<usize>().expect("integer argument"));
    let n = args.next().unwrap_or(400);
    let p = args.next().unwrap_or(100);

    let hazard = HazardSpec::log_logistic();
    let beta0 = first_axis_beta(p, 1.0);
    let data = generate_dataset(
        n,
        p,
        &beta0,
        &hazard,
        &CensoringSpec::uniform(4.0),
        &mut rng_stream(7, 0),
    )?;
    println!(
        "n = {n}, p = {p}, zeta = {:.3}, events {:.1}%",
        p as f64 / n as f64,
        100.0 * data.event_fraction()
    );

    let fit = fit_cox(&data, &FitOptions::default())?;
    if fit.separation_detected {
        println!("separation: the ML estimator does not exist for this draw");
        return Ok(());
    }
    println!(
        "Newton: converged = {}, {} iterations, |grad| = {:.1e}",
        fit.converged, fit.iterations, fit.final_gradient_norm
    );

    let m = overfit_markers_identity(&fit.beta_hat, &beta0, data.covariates())?;
    println!("kappa_hat = {:.4} (1 means unbiased)", m.kappa_hat);
    println!("v_hat     = {:.4} (0 means no noise)", m.v_hat);

    // covariate-free Nelson-Aalen for contrast
    let na = nelson_aalen(&data);
    println!("\n    t   Lambda0  Breslow  Nelson-Aalen");
    for t in [0.25, 0.5, 1.0, 2.0, 3.0] {
        println!(
            "{t:5.2}  {:7.4}  {:7.4}  {:7.4}",
            hazard.cumulative(t),
            fit.breslow.eval(t),
            na.eval(t)
        );
    }
    Ok(())
}
