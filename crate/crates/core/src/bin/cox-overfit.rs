//! Command-line front end: simulate data, fit, solve the RS equations,
//! de-bias a fit and run whole experiments.
//!
//! Exit codes: 0 success, 2 when some replicates of an experiment failed,
//! 1 on any fatal error (including separation in `fit`).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use cox_overfit::cox::{fit_cox, overfit_markers_identity, FitOptions};
use cox_overfit::debias::{debias_solve, DebiasOptions, InnerSolver};
use cox_overfit::experiment::{emit_plotdata, run_experiment, ExperimentConfig, Scenario};
use cox_overfit::rs::{solve_rs, AtomOptions, RsOptions};
use cox_overfit::survival::io::{read_column, read_dataset, write_column, write_dataset, write_step};
use cox_overfit::survival::{first_axis_beta, generate_dataset, CensoringSpec, HazardSpec};
use cox_overfit::{rng_stream, Error, Result};

#[derive(Parser)]
#[command(
    name = "cox-overfit",
    version,
    about = "Overfitting analysis and bias removal for Cox regression"
)]
struct Cli {
    /// Master random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads for replicate-level parallelism (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Publication scale: 500 replicates and RS populations of 10^6.
    #[arg(long, global = true)]
    paper_scale: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ModelArgs {
    /// Base hazard: log_logistic or weibull_like.
    #[arg(long, default_value = "log_logistic")]
    hazard: String,
    /// Censoring times are uniform on [0, t_max].
    #[arg(long, default_value_t = 4.0)]
    t_max: f64,
    /// Signal strength S.
    #[arg(long, default_value_t = 1.0)]
    signal: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with beta0 = S e1.
    Simulate {
        #[arg(long, default_value_t = 400)]
        n: usize,
        #[arg(long, default_value_t = 100)]
        p: usize,
        #[command(flatten)]
        model: ModelArgs,
        /// File name inside the output directory.
        #[arg(long, default_value = "data.csv")]
        name: String,
    },
    /// Maximum partial-likelihood fit and Breslow estimator.
    Fit {
        /// Dataset CSV (time,event,z1,...,zp).
        data: PathBuf,
    },
    /// Solve the RS order-parameter equations.
    RsSolve {
        #[arg(long)]
        zeta: f64,
        #[command(flatten)]
        model: ModelArgs,
        /// Population size (default 1e5, or 1e6 with --paper-scale).
        #[arg(long)]
        m: Option<usize>,
        #[arg(long, default_value_t = 0.5)]
        damping: f64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
        #[arg(long, default_value_t = 500)]
        max_sweeps: usize,
        /// integration_by_parts, mean_y_xi or scaled_mean_y_xi.
        #[arg(long, default_value = "integration_by_parts")]
        w_update: String,
    },
    /// Infer S from the data and de-bias the ML estimators.
    Debias {
        data: PathBuf,
        /// Optional true association vector (one value per row) for diagnostics.
        #[arg(long)]
        beta0: Option<PathBuf>,
        #[arg(long, default_value_t = 16)]
        ny: usize,
        #[arg(long, default_value_t = 8)]
        nz: usize,
        #[arg(long, default_value_t = 0.05)]
        s_lo: f64,
        #[arg(long, default_value_t = 5.0)]
        s_hi: f64,
        #[arg(long, default_value_t = 1e-3)]
        s_tol: f64,
    },
    /// Run a configured experiment and write its plot data.
    Experiment {
        /// Flat key = value configuration file.
        #[arg(long, conflicts_with = "scenario")]
        config: Option<PathBuf>,
        /// Run a named scenario with its defaults instead of a file.
        #[arg(long)]
        scenario: Option<String>,
        /// Override the replicate count.
        #[arg(long)]
        replicates: Option<usize>,
    },
}

fn out_dir(cli: &Cli) -> Result<PathBuf> {
    let dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    Ok(dir)
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Parse(e.to_string()))?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

fn run(cli: &Cli) -> Result<ExitCode> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Error::Argument(e.to_string()))?;
    }
    let seed = cli.seed.unwrap_or(1);
    match &cli.command {
        Command::Simulate { n, p, model, name } => {
            let dir = out_dir(cli)?;
            let hazard = HazardSpec::from_name(&model.hazard)?;
            let data = generate_dataset(
                *n,
                *p,
                &first_axis_beta(*p, model.signal),
                &hazard,
                &CensoringSpec::uniform(model.t_max),
                &mut rng_stream(seed, 0),
            )?;
            let path = dir.join(name);
            write_dataset(&path, &data)?;
            println!(
                "wrote {} (n = {n}, p = {p}, event fraction {:.4})",
                path.display(),
                data.event_fraction()
            );
        }
        Command::Fit { data } => {
            let dir = out_dir(cli)?;
            let ds = read_dataset(data)?;
            let fit = fit_cox(&ds, &FitOptions::default())?;
            write_column(&dir.join("beta_hat.csv"), "beta_hat", &fit.beta_hat)?;
            write_step(&dir.join("breslow.csv"), &fit.breslow, "cumhaz")?;
            let mut summary = json!({
                "converged": fit.converged,
                "iterations": fit.iterations,
                "log_likelihood": fit.log_likelihood,
                "final_gradient_norm": fit.final_gradient_norm,
                "separation_detected": fit.separation_detected,
            });
            if let Some(beta0) = ds.meta().map(|m| m.beta0.clone()) {
                let m = overfit_markers_identity(&fit.beta_hat, &beta0, ds.covariates())?;
                summary["markers"] = serde_json::to_value(m).map_err(|e| Error::Parse(e.to_string()))?;
            }
            write_json(&dir.join("fit.json"), &summary)?;
            if fit.separation_detected {
                eprintln!("separation detected: the ML estimator does not exist for these data");
                return Ok(ExitCode::from(1));
            }
            if !fit.converged {
                eprintln!("fit did not converge in {} iterations", fit.iterations);
                return Ok(ExitCode::from(1));
            }
            println!("converged in {} iterations", fit.iterations);
        }
        Command::RsSolve {
            zeta,
            model,
            m,
            damping,
            tol,
            max_sweeps,
            w_update: wu,
        } => {
            let dir = out_dir(cli)?;
            let hazard = HazardSpec::from_name(&model.hazard)?;
            let m = m.unwrap_or(if cli.paper_scale { 1_000_000 } else { 100_000 });
            let opts = RsOptions {
                damping: *damping,
                tol: *tol,
                max_sweeps: *max_sweeps,
                w_update: wu.parse()?,
                seed,
            };
            let sol = solve_rs(
                *zeta,
                model.signal,
                &hazard,
                &CensoringSpec::uniform(model.t_max),
                m,
                &opts,
            )?;
            write_json(
                &dir.join("rs_solution.json"),
                &json!({
                    "zeta": sol.zeta,
                    "signal": sol.signal,
                    "m": m,
                    "u": sol.u,
                    "v": sol.v,
                    "w": sol.w,
                    "kappa": sol.kappa,
                    "mean_xi_sq": sol.mean_xi_sq(),
                    "sweeps": sol.sweeps,
                    "residuals": sol.residuals,
                    "residual_history": sol.history,
                }),
            )?;
            let path = dir.join("rs_lambda.csv");
            let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let io = |e: csv::Error| Error::Parse(format!("{}: {e}", path.display()));
            w.write_record(["t", "Lambda0", "LambdaRS"]).map_err(io)?;
            let l = &sol.lambda_rs;
            for (&t, &v) in l.jump_times().iter().zip(l.values()) {
                w.write_record([t.to_string(), hazard.cumulative(t).to_string(), v.to_string()])
                    .map_err(io)?;
            }
            w.flush().map_err(|e| Error::io(&path, e))?;
            println!(
                "u = {:.6}, v = {:.6}, w = {:.6}, kappa = {:.6} after {} sweeps",
                sol.u, sol.v, sol.w, sol.kappa, sol.sweeps
            );
        }
        Command::Debias {
            data,
            beta0,
            ny,
            nz,
            s_lo,
            s_hi,
            s_tol,
        } => {
            let dir = out_dir(cli)?;
            let ds = read_dataset(data)?;
            let fit = fit_cox(&ds, &FitOptions::default())?;
            let opts = DebiasOptions {
                inner: InnerSolver::Quadrature(AtomOptions { ny: *ny, nz: *nz }),
                bracket: (*s_lo, *s_hi),
                s_tol: *s_tol,
                ..DebiasOptions::default()
            };
            let res = debias_solve(&ds, &fit, &opts)?;
            let mut report = json!({
                "s_star": res.s_star,
                "u_star": res.u_star,
                "v_star": res.v_star,
                "w_star": res.w_star,
                "kappa_star": res.kappa_star,
                "predicted_sd": res.predicted_sd,
                "diagnostics": serde_json::to_value(&res.diagnostics).map_err(|e| Error::Parse(e.to_string()))?,
            });
            let truth = match beta0 {
                Some(path) => Some(read_column(path)?),
                None => ds.meta().map(|m| m.beta0.clone()),
            };
            if let Some(b0) = truth {
                let before = overfit_markers_identity(&fit.beta_hat, &b0, ds.covariates())?;
                let after = overfit_markers_identity(&res.beta_tilde, &b0, ds.covariates())?;
                report["evaluation"] = json!({
                    "kappa_hat_ml": before.kappa_hat,
                    "kappa_hat_debiased": after.kappa_hat,
                    "v_hat_ml": before.v_hat,
                    "v_hat_debiased": after.v_hat,
                });
            }
            write_json(&dir.join("debias.json"), &report)?;
            write_column(&dir.join("beta_tilde.csv"), "beta_tilde", &res.beta_tilde)?;
            write_step(&dir.join("lambda_tilde.csv"), &res.lambda_tilde, "cumhaz")?;
            write_step(&dir.join("lambda_c.csv"), &res.lambda_c_tilde, "cumhaz")?;
            println!(
                "S* = {:.4}, kappa* = {:.4}, v* = {:.4}",
                res.s_star, res.kappa_star, res.v_star
            );
        }
        Command::Experiment {
            config,
            scenario,
            replicates,
        } => {
            let mut cfg = match (config, scenario) {
                (Some(path), _) => ExperimentConfig::from_file(path)?,
                (None, Some(name)) => ExperimentConfig::new(name.parse::<Scenario>()?),
                (None, None) => return Err(Error::Argument("experiment needs --config or --scenario".into())),
            };
            if cli.paper_scale {
                cfg = cfg.paper_scale();
            }
            if let Some(r) = replicates {
                cfg.replicates = *r;
            }
            if let Some(s) = cli.seed {
                cfg.seed = s;
            }
            if let Some(o) = &cli.out {
                cfg.out = o.clone();
            }
            let bundle = run_experiment(&cfg)?;
            let manifest = emit_plotdata(&bundle, &cfg.out)?;
            println!(
                "{}: wrote {} files to {}",
                cfg.scenario.name(),
                manifest.files.len(),
                cfg.out.display()
            );
            if bundle.failures() > 0 {
                eprintln!(
                    "{} replicate(s) or RS solve(s) failed; see replicates.csv",
                    bundle.failures()
                );
                return Ok(ExitCode::from(2));
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
