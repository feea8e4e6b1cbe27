//! Solve the replica-symmetric equations over a grid of `ζ = p/n` and print
//! the predicted bias `κ` and noise `v` of the ML estimator.
//!
//! ```text
//! cargo run --release --example rs_solve
//! ```

use cox_overfit::rs::{rs_predicted_curve, solve_rs, RsOptions};
use cox_overfit::survival::{CensoringSpec, HazardSpec};

fn main() -> cox_overfit::Result<()> {
    let hazard = HazardSpec::log_logistic();
    let censoring = CensoringSpec::uniform(4.0);
    let opts = RsOptions::default();
    let m = 50_000;

    println!("zeta   kappa    v        w        u        sweeps");
    let mut last = None;
    for zeta in [0.1, 0.2, 0.3, 0.4] {
        let sol = solve_rs(zeta, 1.0, &hazard, &censoring, m, &opts)?;
        println!(
            "{zeta:.1}   {:.4}   {:.4}   {:.4}   {:.4}   {}",
            sol.kappa, sol.v, sol.w, sol.u, sol.sweeps
        );
        last = Some(sol);
    }

    let sol = last.expect("grid is non-empty");
    let curve = rs_predicted_curve(&sol, &hazard);
    println!("\nzeta = {}: inferred against true cumulative hazard", sol.zeta);
    let step = (curve.len() / 8).max(1);
    for (l0, l) in curve.iter().step_by(step) {
        println!("  Lambda0 {l0:.4}  ->  {l:.4}");
    }
    Ok(())
}
