use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::run::{ReplicateData, ReportBundle, ZetaBlock};
use super::stats::histogram;
use crate::survival::io::csv_error;
use crate::{Error, Result};

/// One emitted file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the output directory.
    pub file: String,
    /// Data rows, header excluded.
    pub rows: usize,
    pub columns: Vec<String>,
    pub description: String,
}

/// Index of everything [`emit_plotdata`] wrote, saved as `manifest.json`.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Manifest {
    pub scenario: Option<String>,
    pub replicates_failed: usize,
    pub files: Vec<ManifestEntry>,
}

struct Emitter {
    dir: PathBuf,
    manifest: Manifest,
}

impl Emitter {
    fn table(&mut self, file: String, description: &str, columns: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
        let path = self.dir.join(&file);
        let mut w = csv::Writer::from_path(&path).map_err(|e| csv_error(&path, e))?;
        w.write_record(columns).map_err(|e| csv_error(&path, e))?;
        for row in &rows {
            w.write_record(row).map_err(|e| csv_error(&path, e))?;
        }
        w.flush().map_err(|e| Error::io(&path, e))?;
        self.manifest.files.push(ManifestEntry {
            file,
            rows: rows.len(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            description: description.to_string(),
        });
        Ok(())
    }
}

fn f(x: f64) -> String {
    format!("{x}")
}

/// Per-replicate numeric columns, in file order.
const MARKER_COLUMNS: [&str; 7] = [
    "kappa_hat",
    "v_hat",
    "second_moment",
    "event_fraction",
    "beta_hat_1",
    "beta_hat_2",
    "zero_sd_hat",
];

const DEBIAS_COLUMNS: [&str; 10] = [
    "s_star",
    "kappa_star",
    "u_star",
    "v_star",
    "w_star",
    "predicted_sd",
    "beta_tilde_1",
    "beta_tilde_2",
    "zero_sd_tilde",
    "evaluations",
];

/// Value of a named per-replicate column; `None` when the replicate lacks it.
pub fn replicate_value(d: &ReplicateData, column: &str) -> Option<f64> {
    let m = &d.markers;
    let db = d.debias.as_ref();
    Some(match column {
        "kappa_hat" => m.kappa_hat,
        "v_hat" => m.v_hat,
        "second_moment" => m.second_moment,
        "event_fraction" => d.event_fraction,
        "beta_hat_1" => d.beta_hat_1,
        "beta_hat_2" => d.beta_hat_2,
        "zero_sd_hat" => d.zero_sd_hat,
        "s_star" => db?.s_star,
        "kappa_star" => db?.kappa_star,
        "u_star" => db?.u_star,
        "v_star" => db?.v_star,
        "w_star" => db?.w_star,
        "predicted_sd" => db?.predicted_sd,
        "beta_tilde_1" => db?.beta_tilde_1,
        "beta_tilde_2" => db?.beta_tilde_2,
        "zero_sd_tilde" => db?.zero_sd_tilde,
        "evaluations" => db?.evaluations as f64,
        _ => return None,
    })
}

fn has_debias(bundle: &ReportBundle) -> bool {
    bundle.blocks.iter().any(|b| b.debiased().next().is_some())
}

fn numeric_columns(bundle: &ReportBundle) -> Vec<&'static str> {
    let mut cols = MARKER_COLUMNS.to_vec();
    if has_debias(bundle) {
        cols.extend(DEBIAS_COLUMNS);
    }
    cols
}

fn replicates_table(e: &mut Emitter, bundle: &ReportBundle) -> Result<()> {
    let numeric = numeric_columns(bundle);
    let mut columns = vec!["zeta", "p", "replicate", "status"];
    columns.extend(&numeric);
    columns.push("error");
    let mut rows = Vec::new();
    for b in &bundle.blocks {
        for r in &b.replicates {
            let mut row = vec![f(b.zeta), b.p.to_string(), r.replicate.to_string()];
            match &r.outcome {
                Ok(d) => {
                    row.push("ok".into());
                    row.extend(numeric.iter().map(|c| replicate_value(d, c).map(f).unwrap_or_default()));
                    row.push(String::new());
                }
                Err(msg) => {
                    row.push("failed".into());
                    row.extend(numeric.iter().map(|_| String::new()));
                    row.push(msg.clone());
                }
            }
            rows.push(row);
        }
    }
    e.table(
        "replicates.csv".into(),
        "one row per replicate; failed replicates carry the error and empty values",
        &columns,
        rows,
    )
}

fn summary_table(e: &mut Emitter, bundle: &ReportBundle) -> Result<()> {
    let numeric = numeric_columns(bundle);
    let mut rows = Vec::new();
    for b in &bundle.blocks {
        for c in &numeric {
            let s = b.summary(|d| replicate_value(d, c));
            rows.push(vec![
                f(b.zeta),
                b.p.to_string(),
                c.to_string(),
                s.count.to_string(),
                b.failed().to_string(),
                f(s.mean),
                f(s.sd),
                f(s.se),
            ]);
        }
    }
    e.table(
        "summary.csv".into(),
        "mean, sample sd and standard error of each replicate column over successful replicates",
        &["zeta", "p", "metric", "count", "failed", "mean", "sd", "se"],
        rows,
    )
}

fn rs_table(e: &mut Emitter, bundle: &ReportBundle) -> Result<()> {
    let mut rows = Vec::new();
    for b in &bundle.blocks {
        match &b.rs {
            None => {}
            Some(Ok(r)) => {
                for s in &r.solutions {
                    rows.push(vec![
                        f(b.zeta),
                        s.seed.to_string(),
                        "ok".into(),
                        f(s.u),
                        f(s.v),
                        f(s.w),
                        f(s.kappa),
                        s.sweeps.to_string(),
                        f(s.residual),
                        f(s.mean_xi_sq),
                        String::new(),
                    ]);
                }
            }
            Some(Err(msg)) => {
                let mut row = vec![f(b.zeta), String::new(), "failed".into()];
                row.extend(std::iter::repeat_n(String::new(), 7));
                row.push(msg.clone());
                rows.push(row);
            }
        }
    }
    if rows.is_empty() {
        return Ok(());
    }
    e.table(
        "rs.csv".into(),
        "RS order parameters per zeta, one row per reseeded population",
        &[
            "zeta",
            "seed",
            "status",
            "u",
            "v",
            "w",
            "kappa",
            "sweeps",
            "residual",
            "mean_xi_sq",
            "error",
        ],
        rows,
    )
}

fn overlaps_table(e: &mut Emitter, bundle: &ReportBundle) -> Result<()> {
    let mut rows = Vec::new();
    for b in &bundle.blocks {
        let Some(Ok(rs)) = &b.rs else { continue };
        let k = b.summary(|d| Some(d.markers.kappa_hat));
        let v = b.summary(|d| Some(d.markers.v_hat));
        rows.push(vec![
            f(b.zeta),
            k.count.to_string(),
            b.failed().to_string(),
            f(k.mean),
            f(k.sd),
            f(k.se),
            f(rs.kappa),
            f(rs.kappa_se),
            f(v.mean),
            f(v.sd),
            f(v.se),
            f(rs.v),
            f(rs.v_se),
        ]);
    }
    if rows.is_empty() {
        return Ok(());
    }
    e.table(
        "figure2_overlaps.csv".into(),
        "simulated markers (mean, sd, se) against the RS prediction averaged over reseeded populations",
        &[
            "zeta",
            "n_ok",
            "n_failed",
            "mean_kappa_hat",
            "sd_kappa_hat",
            "se_kappa_hat",
            "kappa_star",
            "se_kappa_star",
            "mean_v_hat",
            "sd_v_hat",
            "se_v_hat",
            "v_star",
            "se_v_star",
        ],
        rows,
    )
}

fn curve_tables(e: &mut Emitter, b: &ZetaBlock, lambda0: &dyn Fn(f64) -> f64) -> Result<()> {
    let z = f(b.zeta);
    let debiased = b.debiased().any(|d| d.lambda_frailty.is_some());
    let mut rows = Vec::new();
    for r in &b.replicates {
        let Ok(d) = &r.outcome else { continue };
        let Some(br) = &d.breslow else { continue };
        let extra = d
            .debias
            .as_ref()
            .and_then(|x| Some((x.lambda_frailty.as_ref()?, x.lambda_rescaled.as_ref()?)));
        for (&t, &l) in br.jump_times().iter().zip(br.values()) {
            let mut row = vec![r.replicate.to_string(), f(lambda0(t)), f(l)];
            if debiased {
                match extra {
                    Some((a, c)) => row.extend([f(a.eval(t)), f(c.eval(t)), f(t)]),
                    None => row.extend([String::new(), String::new(), f(t)]),
                }
            }
            rows.push(row);
        }
    }
    if !rows.is_empty() {
        if debiased {
            e.table(
                format!("figure3_debias_cumhaz_zeta{z}.csv"),
                "per replicate, at each event time: true, Breslow, frailty fixed point and rescaled Breslow cumulative hazards",
                &["replicate", "Lambda0", "LambdaBreslow", "LambdaFrailty", "LambdaRescaled", "t"],
                rows,
            )?;
        } else {
            e.table(
                format!("figure1_cumhaz_zeta{z}.csv"),
                "Breslow staircases: true against estimated cumulative hazard at each event time",
                &["replicate", "Lambda0", "LambdaBreslow"],
                rows,
            )?;
        }
    }
    if let Some(Ok(rs)) = &b.rs {
        if !rs.curve.is_empty() {
            let rows = rs.curve.iter().map(|&(a, l)| vec![f(a), f(l)]).collect();
            e.table(
                format!("figure1_theory_zeta{z}.csv"),
                "RS prediction of the Breslow estimator as a function of the true cumulative hazard",
                &["Lambda0", "LambdaRS"],
                rows,
            )?;
        }
    }
    Ok(())
}

fn debias_tables(e: &mut Emitter, b: &ZetaBlock, bin_width: f64) -> Result<()> {
    if b.debiased().next().is_none() {
        return Ok(());
    }
    let z = f(b.zeta);
    let s: Vec<f64> = b.debiased().map(|d| d.s_star).collect();
    let rows = histogram(&s, bin_width)
        .into_iter()
        .map(|bin| vec![f(bin.lo), f(bin.hi), bin.count.to_string()])
        .collect();
    e.table(
        format!("figure4_S_hist_zeta{z}.csv"),
        "histogram of the inferred signal strength, bins centred on multiples of the width",
        &["bin_lo", "bin_hi", "count"],
        rows,
    )?;
    let rows = b
        .replicates
        .iter()
        .filter_map(|r| {
            let d = r.outcome.as_ref().ok()?;
            let x = d.debias.as_ref()?;
            Some(vec![
                r.replicate.to_string(),
                f(d.beta_hat_1),
                f(x.beta_tilde_1),
                f(d.beta_hat_2),
                f(x.beta_tilde_2),
                f(x.predicted_sd),
            ])
        })
        .collect();
    e.table(
        format!("figure56_beta_zeta{z}.csv"),
        "ML and de-biased estimates of a signal component (1) and a zero component (2)",
        &[
            "replicate",
            "beta_hat_1",
            "beta_tilde_1",
            "beta_hat_2",
            "beta_tilde_2",
            "predicted_sd",
        ],
        rows,
    )
}

/// Writes the per-figure CSV files and `manifest.json` into `dir` (created
/// if missing) and returns the manifest. An empty bundle produces a
/// manifest with no entries.
pub fn emit_plotdata(bundle: &ReportBundle, dir: &Path) -> Result<Manifest> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut e = Emitter {
        dir: dir.to_path_buf(),
        manifest: Manifest {
            scenario: bundle.config.as_ref().map(|c| c.scenario.name().to_string()),
            replicates_failed: bundle.failures(),
            files: Vec::new(),
        },
    };
    if !bundle.blocks.is_empty() {
        replicates_table(&mut e, bundle)?;
        summary_table(&mut e, bundle)?;
        rs_table(&mut e, bundle)?;
        overlaps_table(&mut e, bundle)?;
        let bin_width = bundle.config.as_ref().map_or(0.1, |c| c.bin_width);
        for b in &bundle.blocks {
            let hazard = bundle.config.as_ref().map(|c| c.hazard.clone());
            let lambda0 = |t: f64| hazard.as_ref().map_or(f64::NAN, |h| h.cumulative(t));
            curve_tables(&mut e, b, &lambda0)?;
            debias_tables(&mut e, b, bin_width)?;
        }
    }
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&e.manifest).map_err(|err| Error::Parse(err.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|err| Error::io(&path, err))?;
    Ok(e.manifest)
}
