//! A small overlap experiment: simulated markers against the RS prediction,
//! written as plot-ready CSV files.
//!
//! ```text
//! cargo run --release --example small_experiment -- [out_dir]
//! ```

use cox_overfit::experiment::{emit_plotdata, run_experiment, ExperimentConfig};

const CONFIG: &str = "
scenario = figure2_overlaps
n = 200
zetas = 0.1, 0.2, 0.3
replicates = 20
m = 20000
rs_repeats = 2
seed = 3
";

fn main() -> cox_overfit::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "small_experiment_out".into());
    let cfg = ExperimentConfig::parse(CONFIG)?;
    let bundle = run_experiment(&cfg)?;

    println!("zeta   kappa_hat (± se)     kappa*   v_hat (± se)       v*");
    for b in &bundle.blocks {
        let k = b.summary(|d| Some(d.markers.kappa_hat));
        let v = b.summary(|d| Some(d.markers.v_hat));
        match &b.rs {
            Some(Ok(rs)) => println!(
                "{:.1}    {:.4} ± {:.4}      {:.4}   {:.4} ± {:.4}    {:.4}",
                b.zeta, k.mean, k.se, rs.kappa, v.mean, v.se, rs.v
            ),
            Some(Err(e)) => println!("{:.1}    RS failed: {e}", b.zeta),
            None => {}
        }
        if b.failed() > 0 {
            println!("       {} replicate(s) failed", b.failed());
        }
    }

    let manifest = emit_plotdata(&bundle, std::path::Path::new(&out))?;
    for f in &manifest.files {
        println!("{out}/{}: {} rows", f.file, f.rows);
    }
    Ok(())
}
