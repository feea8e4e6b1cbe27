use super::{StepFunction, SurvivalDataset};

/// Groups of subjects sharing one time, in ascending time order, as
/// `(time, members, number of events)`.
pub(crate) fn time_groups(data: &SurvivalDataset) -> Vec<(f64, Vec<usize>, usize)> {
    let order = data.time_order();
    let mut out: Vec<(f64, Vec<usize>, usize)> = Vec::new();
    for i in order {
        let t = data.times()[i];
        let d = data.events()[i] as usize;
        match out.last_mut() {
            Some((s, members, events)) if *s == t => {
                members.push(i);
                *events += d;
            }
            _ => out.push((t, vec![i], d)),
        }
    }
    out
}

/// Cumulative hazard `Σ_{t_g ≤ t} d_g / Σ_{t_j ≥ t_g} r_j` over the given
/// groups with per-subject risk weights `r` (one value per group).
pub(crate) fn weighted_cumhaz_on_groups(groups: &[(f64, Vec<usize>, usize)], r: &[f64]) -> Vec<f64> {
    let mut risk = vec![0.0; groups.len()];
    let mut acc = 0.0;
    for g in (0..groups.len()).rev() {
        for &j in &groups[g].1 {
            acc += r[j];
        }
        risk[g] = acc;
    }
    let mut lam = vec![0.0; groups.len()];
    let mut acc = 0.0;
    for g in 0..groups.len() {
        if groups[g].2 > 0 {
            acc += groups[g].2 as f64 / risk[g];
        }
        lam[g] = acc;
    }
    lam
}

/// Step function through the event groups.
pub(crate) fn step_on_event_groups(groups: &[(f64, Vec<usize>, usize)], lam: &[f64]) -> StepFunction {
    let (t, v): (Vec<f64>, Vec<f64>) = groups
        .iter()
        .zip(lam)
        .filter(|((_, _, d), _)| *d > 0)
        .map(|((t, _, _), &l)| (*t, l))
        .unzip();
    StepFunction::new(t, v).expect("event groups are increasing and values cumulative")
}

/// Nelson–Aalen estimator `Σ_{t_i ≤ t} Δ_i / |{j : t_j ≥ t_i}|`.
pub fn nelson_aalen(data: &SurvivalDataset) -> StepFunction {
    let groups = time_groups(data);
    let lam = weighted_cumhaz_on_groups(&groups, &vec![1.0; data.n()]);
    step_on_event_groups(&groups, &lam)
}
