use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::special::QuadratureRule;
use crate::survival::{draw_outcome, CensoringSpec, HazardSpec, StepFunction, TailPolicy};
use crate::{Error, Result};

/// Smallest population [`build_population`] accepts by default.
pub const MIN_POPULATION: usize = 10_000;

/// One member `(t, Δ, y, z, ξ)` with its weight.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Member {
    pub t: f64,
    pub delta: bool,
    pub y: f64,
    pub z: f64,
    pub xi: f64,
    /// Probability mass; `1/m` for a sampled population.
    pub weight: f64,
}

/// A weighted sample representing the joint law of `(t, Δ, y, z)` under the
/// order-parameter equations.
///
/// A Monte-Carlo population has `m` equally weighted members drawn from
/// `Dy Dz p(t, Δ | S y)`. A quadrature population places members on the
/// atoms of step hazards crossed with Gauss–Hermite nodes in `y` and `z`, with
/// the exact cell probabilities as weights. The solver treats both alike.
///
/// Members are kept sorted by time and grouped by distinct time; the
/// inferred cumulative hazard is stored per group.
#[derive(Debug, Clone, PartialEq)]
pub struct RsPopulation {
    pub(crate) t: Vec<f64>,
    pub(crate) delta: Vec<f64>,
    pub(crate) y: Vec<f64>,
    pub(crate) z: Vec<f64>,
    pub(crate) xi: Vec<f64>,
    /// Normalised to sum 1.
    pub(crate) weight: Vec<f64>,
    /// `Λ₀(t_ℓ) e^{S y_ℓ}` when the true hazard is known, else NaN.
    pub(crate) true_hazard: Vec<f64>,
    /// Last Lambert-W value per member, used as a warm start.
    pub(crate) w_cache: Vec<f64>,
    pub(crate) group_of: Vec<u32>,
    /// Half-open member ranges sharing one time.
    pub(crate) groups: Vec<(usize, usize)>,
    pub(crate) signal: f64,
}

impl RsPopulation {
    /// Equally weighted population from raw records; `ξ` starts at 0.
    pub fn from_members(times: Vec<f64>, events: Vec<bool>, y: Vec<f64>, z: Vec<f64>) -> Result<Self> {
        let m = times.len();
        let weight = vec![1.0 / m.max(1) as f64; m];
        Self::assemble(times, events, y, z, weight, vec![f64::NAN; m], f64::NAN)
    }

    pub(crate) fn assemble(
        times: Vec<f64>,
        events: Vec<bool>,
        y: Vec<f64>,
        z: Vec<f64>,
        weight: Vec<f64>,
        true_hazard: Vec<f64>,
        signal: f64,
    ) -> Result<Self> {
        let m = times.len();
        if m == 0 {
            return Err(Error::Argument("population must not be empty".into()));
        }
        if events.len() != m || y.len() != m || z.len() != m || weight.len() != m || true_hazard.len() != m {
            return Err(Error::Argument("population columns differ in length".into()));
        }
        if times.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::Argument(
                "population times must be finite and non-negative".into(),
            ));
        }
        if weight.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::Argument(
                "population weights must be finite and non-negative".into(),
            ));
        }
        let total: f64 = weight.iter().sum();
        if !(total > 0.0) {
            return Err(Error::Argument("population has zero total weight".into()));
        }
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&a, &b| times[a].total_cmp(&times[b]).then_with(|| events[b].cmp(&events[a])));
        let pick = |v: &[f64]| order.iter().map(|&i| v[i]).collect::<Vec<f64>>();
        let t = pick(&times);
        let mut groups = Vec::new();
        let mut group_of = vec![0u32; m];
        let mut start = 0;
        while start < m {
            let mut end = start;
            while end < m && t[end] == t[start] {
                group_of[end] = groups.len() as u32;
                end += 1;
            }
            groups.push((start, end));
            start = end;
        }
        Ok(Self {
            delta: order.iter().map(|&i| if events[i] { 1.0 } else { 0.0 }).collect(),
            y: pick(&y),
            z: pick(&z),
            xi: vec![0.0; m],
            weight: order.iter().map(|&i| weight[i] / total).collect(),
            true_hazard: pick(&true_hazard),
            w_cache: vec![0.0; m],
            t,
            group_of,
            groups,
            signal,
        })
    }

    /// Number of members.
    pub fn m(&self) -> usize {
        self.t.len()
    }

    pub fn is_empty(&self) -> bool {
        self.t.is_empty()
    }

    /// Signal strength the population was built with (NaN if unknown).
    pub fn signal(&self) -> f64 {
        self.signal
    }

    pub fn member(&self, i: usize) -> Member {
        Member {
            t: self.t[i],
            delta: self.delta[i] == 1.0,
            y: self.y[i],
            z: self.z[i],
            xi: self.xi[i],
            weight: self.weight[i],
        }
    }

    /// Members in ascending time order.
    pub fn members(&self) -> impl Iterator<Item = Member> + '_ {
        (0..self.m()).map(|i| self.member(i))
    }

    pub fn xi(&self) -> &[f64] {
        &self.xi
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    /// Weighted fraction of events.
    pub fn event_fraction(&self) -> f64 {
        self.weight.iter().zip(&self.delta).map(|(w, d)| w * d).sum()
    }

    /// Weighted mean of `f` over members.
    pub fn mean<F: Fn(Member) -> f64>(&self, f: F) -> f64 {
        self.members().map(|mb| mb.weight * f(mb)).sum()
    }

    /// Distinct times at which at least one event occurs.
    pub(crate) fn event_group_times(&self) -> Vec<(usize, f64)> {
        self.groups
            .iter()
            .enumerate()
            .filter(|(_, &(a, b))| self.delta[a..b].iter().any(|&d| d > 0.0))
            .map(|(g, &(a, _))| (g, self.t[a]))
            .collect()
    }

    pub(crate) fn n_groups(&self) -> usize {
        self.groups.len()
    }

    pub(crate) fn group_time(&self, g: usize) -> f64 {
        self.t[self.groups[g].0]
    }
}

/// Monte-Carlo population of size `m ≥` [`MIN_POPULATION`]: `y, z` standard
/// normal and `(t, Δ)` drawn with linear predictor `S y`.
pub fn build_population<R: Rng + ?Sized>(
    m: usize,
    signal: f64,
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    rng: &mut R,
) -> Result<RsPopulation> {
    build_population_with_floor(m, MIN_POPULATION, signal, hazard, censoring, rng)
}

/// [`build_population`] with an explicit minimum size.
pub fn build_population_with_floor<R: Rng + ?Sized>(
    m: usize,
    floor: usize,
    signal: f64,
    hazard: &HazardSpec,
    censoring: &CensoringSpec,
    rng: &mut R,
) -> Result<RsPopulation> {
    if m < floor.max(1) {
        return Err(Error::Argument(format!(
            "population size {m} is below the floor {floor}"
        )));
    }
    if !(signal >= 0.0 && signal.is_finite()) {
        return Err(Error::Argument(format!(
            "signal must be finite and non-negative, got {signal}"
        )));
    }
    hazard.validate()?;
    censoring.validate()?;
    let mut times = Vec::with_capacity(m);
    let mut events = Vec::with_capacity(m);
    let mut ys = Vec::with_capacity(m);
    let mut zs = Vec::with_capacity(m);
    let mut th = Vec::with_capacity(m);
    for _ in 0..m {
        let y: f64 = StandardNormal.sample(rng);
        let z: f64 = StandardNormal.sample(rng);
        let (t, d) = draw_outcome(signal * y, hazard, censoring, TailPolicy::Flatten, rng)?;
        times.push(t);
        events.push(d);
        ys.push(y);
        zs.push(z);
        th.push(hazard.cumulative(t) * (signal * y).exp());
    }
    RsPopulation::assemble(times, events, ys, zs, vec![1.0; m], th, signal)
}

/// Node counts for a quadrature population.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtomOptions {
    /// Gauss–Hermite nodes for the true linear predictor `y`.
    pub ny: usize,
    /// Gauss–Hermite nodes for the overfitting noise `z`.
    pub nz: usize,
}

impl Default for AtomOptions {
    fn default() -> Self {
        Self { ny: 16, nz: 8 }
    }
}

/// Quadrature population for step hazards `Λ₀` (events) and `Λ_c`
/// (censoring).
///
/// Atoms are the union of both jump sets. Given `h = S y`, the discrete
/// inverse-transform model assigns
///
/// - `P(t = a_k, Δ = 1) = (e^{−A_{k−1} e^h} − e^{−A_k e^h}) e^{−B_k}`
/// - `P(t = a_k, Δ = 0) = (e^{−B_{k−1}} − e^{−B_k}) e^{−A_{k−1} e^h}`
///
/// with `A_k = Λ₀(a_k)`, `B_k = Λ_c(a_k)`. A tie between event and censoring
/// counts as censored. The mass of never failing and never being censored is
/// placed on the last atom with `Δ = 0`, matching [`TailPolicy::Flatten`].
pub fn build_atom_population(
    signal: f64,
    lambda0: &StepFunction,
    lambda_c: &StepFunction,
    options: &AtomOptions,
) -> Result<RsPopulation> {
    if !(signal >= 0.0 && signal.is_finite()) {
        return Err(Error::Argument(format!(
            "signal must be finite and non-negative, got {signal}"
        )));
    }
    if lambda0.is_empty() {
        return Err(Error::Argument("event hazard has no jumps".into()));
    }
    let mut atoms: Vec<f64> = lambda0
        .jump_times()
        .iter()
        .chain(lambda_c.jump_times())
        .copied()
        .collect();
    atoms.sort_by(f64::total_cmp);
    atoms.dedup();
    let a: Vec<f64> = atoms.iter().map(|&t| lambda0.eval(t)).collect();
    let b: Vec<f64> = atoms.iter().map(|&t| lambda_c.eval(t)).collect();
    let ry = QuadratureRule::hermite(options.ny)?;
    let rz = QuadratureRule::hermite(options.nz)?;
    let (yn, yw) = ry.gaussian_nodes();
    let (zn, zw) = rz.gaussian_nodes();

    let cap = atoms.len() * yn.len() * zn.len();
    let (mut times, mut events, mut ys, mut zs, mut ws, mut th) = (
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
        Vec::with_capacity(cap),
    );
    let last = atoms.len() - 1;
    for (&y, &wy) in yn.iter().zip(yw) {
        let eh = (signal * y).exp();
        let mut a_prev: f64 = 0.0;
        let mut b_prev: f64 = 0.0;
        for k in 0..atoms.len() {
            let surv_prev = (-a_prev * eh).exp();
            let surv = (-a[k] * eh).exp();
            let pe = (surv_prev - surv) * (-b[k]).exp();
            let mut pc = ((-b_prev).exp() - (-b[k]).exp()) * surv_prev;
            if k == last {
                pc += surv * (-b[k]).exp();
            }
            for (delta, mass) in [(true, pe), (false, pc)] {
                let cell = wy * mass;
                if cell > 1e-15 {
                    for (&z, &wz) in zn.iter().zip(zw) {
                        times.push(atoms[k]);
                        events.push(delta);
                        ys.push(y);
                        zs.push(z);
                        ws.push(cell * wz);
                        th.push(a[k] * eh);
                    }
                }
            }
            a_prev = a[k];
            b_prev = b[k];
        }
    }
    RsPopulation::assemble(times, events, ys, zs, ws, th, signal)
}
