use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::rs::{AtomOptions, RsOptions};
use crate::survival::{CensoringSpec, HazardSpec};
use crate::{Error, Result};

/// Which figure-shaped experiment to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// Breslow staircases against `Λ₀` with the RS curve.
    Figure1Cumhaz,
    /// Markers `κ̂, v̂` over a `ζ` grid against `κ★, v★`.
    Figure2Overlaps,
    /// De-biased cumulative hazards against `Λ₀`.
    Figure3DebiasCumhaz,
    /// Histogram of the inferred signal strength `S★`.
    Figure4SHist,
    /// ML and de-biased association components.
    Figure56BetaHist,
    /// Stages chosen by the `stages` key.
    Custom,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Figure1Cumhaz => "figure1_cumhaz",
            Scenario::Figure2Overlaps => "figure2_overlaps",
            Scenario::Figure3DebiasCumhaz => "figure3_debias_cumhaz",
            Scenario::Figure4SHist => "figure4_S_hist",
            Scenario::Figure56BetaHist => "figure56_beta_hist",
            Scenario::Custom => "custom",
        }
    }

    /// Stages run by the named scenarios.
    pub fn default_stages(self) -> Stages {
        match self {
            Scenario::Figure1Cumhaz => Stages {
                rs: true,
                curves: true,
                debias: false,
            },
            Scenario::Figure2Overlaps => Stages {
                rs: true,
                curves: false,
                debias: false,
            },
            Scenario::Figure3DebiasCumhaz => Stages {
                rs: false,
                curves: true,
                debias: true,
            },
            Scenario::Figure4SHist | Scenario::Figure56BetaHist | Scenario::Custom => Stages {
                rs: false,
                curves: false,
                debias: true,
            },
        }
    }

    fn default_zetas(self) -> Vec<f64> {
        match self {
            Scenario::Figure1Cumhaz => vec![0.25, 0.5],
            Scenario::Figure2Overlaps => vec![0.1, 0.2, 0.3, 0.4, 0.5],
            Scenario::Figure3DebiasCumhaz => vec![0.3],
            Scenario::Figure4SHist | Scenario::Figure56BetaHist => vec![0.3, 0.4],
            Scenario::Custom => vec![0.25],
        }
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "figure1_cumhaz" => Scenario::Figure1Cumhaz,
            "figure2_overlaps" => Scenario::Figure2Overlaps,
            "figure3_debias_cumhaz" => Scenario::Figure3DebiasCumhaz,
            "figure4_S_hist" | "figure4_s_hist" => Scenario::Figure4SHist,
            "figure56_beta_hist" => Scenario::Figure56BetaHist,
            "custom" => Scenario::Custom,
            other => return Err(Error::Parse(format!("unknown scenario `{other}`"))),
        })
    }
}

/// Work done besides generate → fit → markers, which always runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Stages {
    /// One RS solve per `ζ`.
    pub rs: bool,
    /// Keep each replicate's Breslow (and de-biased) staircases.
    pub curves: bool,
    /// Debias every replicate.
    pub debias: bool,
}

/// Full description of an experiment.
///
/// Read from flat `key = value` text; `#` starts a comment. Keys:
///
/// | key | meaning | default |
/// |---|---|---|
/// | `scenario` | one of the [`Scenario`] names | required |
/// | `n` | sample size | 400 |
/// | `p` | covariate count (single `ζ = p/n`) | unset |
/// | `zetas` | comma-separated `ζ` grid, used when `p` is unset | per scenario |
/// | `hazard` | `log_logistic` or `weibull_like` | `log_logistic` |
/// | `t_max` | uniform censoring interval | 4 |
/// | `signal` | `S`, with `β₀ = S e₁` | 1 |
/// | `replicates` | datasets per `ζ` | 100 |
/// | `seed` | master seed | 1 |
/// | `m` | RS population size | 100000 |
/// | `rs_repeats` | reseeded RS solves averaged per `ζ` | 5 |
/// | `rs_damping`, `rs_tol`, `rs_max_sweeps`, `w_update` | RS solver options | solver defaults |
/// | `atoms_ny`, `atoms_nz` | debias quadrature nodes | 16, 8 |
/// | `s_lo`, `s_hi`, `s_tol` | debias search interval and tolerance | 0.05, 5, 1e-3 |
/// | `bin_width` | `S★` histogram bin width | 0.1 |
/// | `stages` | for `custom`: any of `rs,curves,debias` | `debias` |
/// | `out` | output directory | `out` |
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub n: usize,
    pub zetas: Vec<f64>,
    pub hazard: HazardSpec,
    pub t_max: f64,
    pub signal: f64,
    pub replicates: usize,
    pub seed: u64,
    pub m: usize,
    /// RS solves with seeds `seed, seed + 1, ...`, averaged to reduce the
    /// Monte-Carlo error of the prediction.
    pub rs_repeats: usize,
    pub rs: RsOptions,
    pub atoms: AtomOptions,
    pub s_bracket: (f64, f64),
    pub s_tol: f64,
    pub bin_width: f64,
    pub stages: Stages,
    pub out: PathBuf,
}

impl ExperimentConfig {
    /// Desk-scale defaults for `scenario`.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            n: 400,
            zetas: scenario.default_zetas(),
            hazard: HazardSpec::log_logistic(),
            t_max: 4.0,
            signal: 1.0,
            replicates: 100,
            seed: 1,
            m: 100_000,
            rs_repeats: 5,
            rs: RsOptions::default(),
            atoms: AtomOptions::default(),
            s_bracket: (0.05, 5.0),
            s_tol: 1e-3,
            bin_width: 0.1,
            stages: scenario.default_stages(),
            out: PathBuf::from("out"),
        }
    }

    /// Publication scale: 500 replicates and RS populations of 10⁶.
    pub fn paper_scale(mut self) -> Self {
        self.replicates = 500;
        self.m = 1_000_000;
        self
    }

    pub fn censoring(&self) -> CensoringSpec {
        CensoringSpec::uniform(self.t_max)
    }

    /// Covariate count for a grid point, `round(ζ n)`.
    pub fn p_for(&self, zeta: f64) -> usize {
        (zeta * self.n as f64).round() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if self.replicates < 1 {
            return Err(Error::Argument("replicates must be at least 1".into()));
        }
        if self.n < 2 {
            return Err(Error::Argument(format!("n must be at least 2, got {}", self.n)));
        }
        if self.zetas.is_empty() {
            return Err(Error::Argument("the zeta grid is empty".into()));
        }
        for &z in &self.zetas {
            if !(z > 0.0 && z < 1.0) {
                return Err(Error::Argument(format!("zeta must lie in (0, 1), got {z}")));
            }
            if self.p_for(z) < 1 {
                return Err(Error::Argument(format!("zeta = {z} gives p = 0 at n = {}", self.n)));
            }
        }
        if !self.hazard.is_closed_form() {
            return Err(Error::Argument("experiments need a closed-form hazard".into()));
        }
        self.hazard.validate()?;
        self.censoring().validate()?;
        if !(self.signal > 0.0 && self.signal.is_finite()) {
            return Err(Error::Argument(format!("signal must be positive, got {}", self.signal)));
        }
        if self.rs_repeats < 1 {
            return Err(Error::Argument("rs_repeats must be at least 1".into()));
        }
        if !(self.bin_width > 0.0) {
            return Err(Error::Argument("bin_width must be positive".into()));
        }
        Ok(())
    }

    /// Parses the flat `key = value` format and validates the result.
    pub fn parse(text: &str) -> Result<Self> {
        let mut pairs = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `key = value`, got `{line}`", k + 1)))?;
            pairs.push((k + 1, key.trim().to_string(), value.trim().to_string()));
        }
        let scenario = pairs
            .iter()
            .find(|(_, k, _)| k == "scenario")
            .ok_or_else(|| Error::Parse("missing key `scenario`".into()))?
            .2
            .parse::<Scenario>()?;
        let mut cfg = Self::new(scenario);
        let mut p = None;
        for (line, key, value) in pairs {
            let bad = |e: String| Error::Parse(format!("line {line}: `{key}`: {e}"));
            match key.as_str() {
                "scenario" => {}
                "n" => cfg.n = num(&value).map_err(bad)?,
                "p" => p = Some(num::<usize>(&value).map_err(bad)?),
                "zetas" => {
                    cfg.zetas = value
                        .split(',')
                        .map(|s| num::<f64>(s.trim()))
                        .collect::<std::result::Result<_, _>>()
                        .map_err(bad)?
                }
                "hazard" => cfg.hazard = HazardSpec::from_name(&value)?,
                "t_max" => cfg.t_max = num(&value).map_err(bad)?,
                "signal" => cfg.signal = num(&value).map_err(bad)?,
                "replicates" => cfg.replicates = num(&value).map_err(bad)?,
                "seed" => cfg.seed = num(&value).map_err(bad)?,
                "m" => cfg.m = num(&value).map_err(bad)?,
                "rs_repeats" => cfg.rs_repeats = num(&value).map_err(bad)?,
                "rs_damping" => cfg.rs.damping = num(&value).map_err(bad)?,
                "rs_tol" => cfg.rs.tol = num(&value).map_err(bad)?,
                "rs_max_sweeps" => cfg.rs.max_sweeps = num(&value).map_err(bad)?,
                "w_update" => cfg.rs.w_update = value.parse()?,
                "atoms_ny" => cfg.atoms.ny = num(&value).map_err(bad)?,
                "atoms_nz" => cfg.atoms.nz = num(&value).map_err(bad)?,
                "s_lo" => cfg.s_bracket.0 = num(&value).map_err(bad)?,
                "s_hi" => cfg.s_bracket.1 = num(&value).map_err(bad)?,
                "s_tol" => cfg.s_tol = num(&value).map_err(bad)?,
                "bin_width" => cfg.bin_width = num(&value).map_err(bad)?,
                "stages" => cfg.stages = stages(&value).map_err(bad)?,
                "out" => cfg.out = PathBuf::from(value),
                _ => return Err(Error::Parse(format!("line {line}: unknown key `{key}`"))),
            }
        }
        if let Some(p) = p {
            cfg.zetas = vec![p as f64 / cfg.n as f64];
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn num<T: FromStr>(s: &str) -> std::result::Result<T, String>
where
    T::Err: std::fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("cannot parse `{s}`: {e}"))
}

fn stages(s: &str) -> std::result::Result<Stages, String> {
    let mut out = Stages {
        rs: false,
        curves: false,
        debias: false,
    };
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part {
            "rs" => out.rs = true,
            "curves" => out.curves = true,
            "debias" => out.debias = true,
            _ => return Err(format!("unknown stage `{part}`")),
        }
    }
    Ok(out)
}
