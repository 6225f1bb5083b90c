//! Evaluation of the selected probes on one realization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{KernelKind, Probe, SweepPlan, Task};
use crate::conductance::{
    check_dec_hall, hall_double_commutator, hall_position_local, hall_switch, hall_switch_integral, EdgeSetup, EdgeTraces,
    TraceValue, TraceWindow,
};
use crate::error::Result;
use crate::lattice::build_model;
use crate::localization::{central_site, projector_kernel_decay, EnergyBump, MomentProbe};
use crate::spectral::{self, switch_matrix, SwitchProfile, TimeAverageKernel};

/// Result payload of one task.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TaskResult {
    pub values: BTreeMap<String, f64>,
    /// Imaginary residuals above tolerance, near-degenerate projectors, ...
    pub flags: Vec<String>,
}

impl TaskResult {
    fn put(&mut self, name: &str, v: f64) {
        self.values.insert(name.to_string(), v);
    }

    fn put_trace(&mut self, name: &str, v: TraceValue) {
        if v.flagged() {
            self.flags.push(format!("{name}: imaginary part {:.3e}", v.imag));
        }
        self.put(name, v.value);
    }
}

fn kernel(kind: KernelKind, t: f64) -> TimeAverageKernel {
    match kind {
        KernelKind::Uniform => TimeAverageKernel::UniformWindow { t },
        KernelKind::Exponential => TimeAverageKernel::Exponential { t },
    }
}

/// Evaluates every task of a group that shares one realization (same seed,
/// `W` and `L`). Any setup failure is reported for all tasks of the group.
pub(super) fn evaluate_group(plan: &SweepPlan, tasks: &[&Task]) -> Vec<Result<TaskResult>> {
    match evaluate_group_inner(plan, tasks) {
        Ok(v) => v,
        Err(e) => {
            let msg = e.to_string();
            tasks.iter().map(|_| Err(crate::Error::Numerical(msg.clone()))).collect()
        }
    }
}

fn evaluate_group_inner(plan: &SweepPlan, tasks: &[&Task]) -> Result<Vec<Result<TaskResult>>> {
    let s = &plan.settings;
    let has = |p: Probe| plan.probes.contains(&p);
    let first = &tasks[0].point;
    let g = SwitchProfile::window(s.window.lo, s.window.hi, s.smoothness);
    let unit = SwitchProfile::new(0.0, s.switch_half_width, s.smoothness);

    let needs_bulk = has(Probe::Hall) || has(Probe::Moments) || has(Probe::Decay) || has(Probe::Diagnostics);
    let bulk = if needs_bulk {
        let spec = plan.bulk_model(first);
        let hm = build_model(&spec)?;
        let sd = spectral::diagonalize(&hm)?;
        let l1 = switch_matrix(&unit, 0, &hm.geometry)?;
        let l2 = switch_matrix(&unit, 1, &hm.geometry)?;
        let window = TraceWindow::crossing_box(&hm.geometry, (0.0, 0.0));
        Some((hm, sd, l1, l2, window))
    } else {
        None
    };

    let hall_window = match (&bulk, has(Probe::Hall)) {
        (Some((_, sd, l1, l2, w)), true) => Some(hall_switch_integral(sd, &g, l1, l2, w, s.quadrature_nodes)?),
        _ => None,
    };

    // One edge diagonalization per wall position.
    let mut edges: BTreeMap<u64, EdgeTraces> = BTreeMap::new();
    if has(Probe::Edge) {
        let setup = EdgeSetup {
            g: g.clone(),
            lambda1: unit.clone(),
            lambda2: unit.clone(),
            scheme: plan.edge.as_ref().map(|e| e.scheme.clone()).expect("validated"),
        };
        for t in tasks {
            let a = t.point.a.unwrap_or_default().to_bits();
            if edges.contains_key(&a) {
                continue;
            }
            let spec = plan.edge_model(&t.point).expect("validated");
            let hm = build_model(&spec)?;
            let sd = spectral::diagonalize(&hm)?;
            edges.insert(a, EdgeTraces::new(&hm, &sd, &setup)?);
        }
    }

    let mut out = Vec::with_capacity(tasks.len());
    for t in tasks {
        out.push((|| -> Result<TaskResult> {
            let p = &t.point;
            let mut r = TaskResult::default();
            let k = kernel(s.kernel, p.horizon);
            if let Some((hm, sd, l1, l2, w)) = &bulk {
                if has(Probe::Hall) {
                    let proj = sd.fermi_projector(p.energy);
                    if proj.near_degenerate {
                        r.flags.push(format!("eigenvalue within tolerance of E = {}", p.energy));
                    }
                    let pm = proj.matrix.as_ref();
                    r.put_trace("sigma_hall", hall_switch(pm, l1, l2, w)?);
                    r.put_trace("sigma_hall_alt1", hall_double_commutator(pm, l1, l2, w)?);
                    let pos = hall_position_local(pm, &hm.geometry, s.position_half)?;
                    if pos.touches_boundary {
                        r.flags.push("position window touches the lattice boundary".into());
                    }
                    r.put("sigma_hall_alt2", pos.value);
                    r.put("dec_hall_residual", check_dec_hall(pm, l1, l2)?);
                    r.put("rank", proj.rank as f64);
                    if let Some(hw) = hall_window {
                        r.put_trace("sigma_hall_window", hw);
                    }
                }
                if has(Probe::Moments) {
                    let probe = MomentProbe {
                        m: s.moment_m,
                        zeta: s.moment_zeta,
                        bump: EnergyBump::new(s.window.lo, s.window.hi),
                        chi0: vec![central_site(&hm.geometry)],
                    };
                    r.put("moment_avg", probe.averaged(sd, &hm.geometry, &[p.horizon])?[0]);
                }
                if has(Probe::Decay) {
                    let proj = sd.fermi_projector(p.energy);
                    let (fit, _) = projector_kernel_decay(proj.matrix.as_ref(), &hm.geometry, &s.decay)?;
                    r.put("decay_rate", fit.rate);
                    r.put("decay_prefactor", fit.prefactor);
                    r.put("decay_zeta", fit.zeta);
                    r.put("decay_residual", fit.fit_residual);
                }
                if has(Probe::Diagnostics) {
                    let (res, orth) = sd.residuals(hm.matrix.as_ref());
                    r.put("eig_residual", res);
                    r.put("orth_residual", orth);
                    let gap = sd.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
                    r.put("min_level_spacing", gap);
                }
            }
            if let Some(tr) = edges.get(&p.a.unwrap_or_default().to_bits()) {
                let reg = tr.regularized(k);
                r.put_trace("sigma_edge_reg", reg);
                r.put_trace("sigma_edge_unreg", tr.unregularized());
                r.put_trace("remainder", tr.remainder(k));
                r.put_trace("commutator_term", tr.commutator_term(k));
                r.put("zero_trace", tr.zero_trace());
                if let Some(hw) = hall_window {
                    r.put("abs_diff_edge_hall", (reg.value - hw.value).abs());
                }
            }
            Ok(r)
        })());
    }
    Ok(out)
}
