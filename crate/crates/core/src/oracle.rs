//! Brute-force mesh optimizers used to cross-check the closed-form solvers.
//!
//! The oracles evaluate candidate allocations purely through the
//! [`crate::system_model`] primitives (power inversion, energy accounting,
//! feasibility checks), never through the solver algebra they are meant to
//! verify. They scan a uniform mesh over the decision box, skip infeasible
//! points, and reduce deterministically: strictly smaller value wins, ties
//! go to the smaller flat mesh index regardless of thread count.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::system_model::{
    check_feasible_p1, check_feasible_p2, energy_breakdown, helper_ap_rate, invert_powers,
    noma_rates, Allocation, ChannelGains, SystemParams,
};
use crate::{Error, Result};

/// Mesh resolution. `points_per_axis` applies to every decision axis;
/// `alpha_points` to the slot-split axis of the energy problem.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeshSpec {
    pub points_per_axis: usize,
    pub alpha_points: usize,
}

impl MeshSpec {
    /// Default energy-minimization mesh: 60 points per bit axis, 101 slot
    /// splits (seconds of work at desk scale).
    pub fn p1_default() -> Self {
        MeshSpec { points_per_axis: 60, alpha_points: 101 }
    }

    /// Default data-maximization mesh: 400×400 over the power split and the
    /// user slot.
    pub fn p2_default() -> Self {
        MeshSpec { points_per_axis: 400, alpha_points: 1 }
    }
}

/// Result of a mesh scan: best value, the mesh point attaining it, and a
/// local mesh-resolution error estimate (largest objective step to an
/// adjacent feasible point along any axis).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OracleOutcome {
    pub value: f64,
    pub allocation: Allocation,
    pub mesh_error: f64,
    pub feasible_points: u64,
    pub total_points: u64,
}

/// Named mesh axes for the energy problem, in scan order. The bit axes
/// cover the feasible box implied by task sizes, the helper's receive
/// window, and the server budget.
pub fn p1_axes(p: &SystemParams) -> [(&'static str, f64, f64); 4] {
    let t = &p.task;
    let c = &p.caps;
    [
        ("ell_uh", 0.0, t.l_u.min(p.deadline * c.f_h / t.c_u)),
        ("ell_ua", 0.0, t.l_u.min(c.f_cap / t.c_u)),
        ("ell_ha", 0.0, t.l_h.min(c.f_cap / t.c_h)),
        ("alpha", 0.0, 1.0),
    ]
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n <= 1 || hi <= lo {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Weighted energy of the mesh point, or `None` when any constraint fails.
/// Evaluation goes bits → powers → energies through the model primitives.
fn eval_p1_point(
    p: &SystemParams,
    gains: &ChannelGains,
    ell_uh: f64,
    ell_ua: f64,
    ell_ha: f64,
    alpha: f64,
) -> Option<(f64, Allocation)> {
    let t_u = alpha * p.deadline;
    let t_h = p.deadline - t_u;
    let (p_uh, p_ua, p_ha) = invert_powers(gains, ell_uh, ell_ua, ell_ha, t_u, t_h, p.bandwidth).ok()?;
    let a = Allocation { p_uh, p_ua, p_ha, ell_uh, ell_ua, ell_ha, t_u, t_h };
    if !check_feasible_p1(p, &a).is_empty() {
        return None;
    }
    let eb = energy_breakdown(p, &a).ok()?;
    Some((eb.weighted_total, a))
}

/// Exhaustive reference for the energy-minimization problem.
///
/// When the channel ordering needed for superposition does not hold, the
/// relay axis collapses to zero bits; with `ell_uh = 0` the inversion is
/// independent of `h_uh`, so the scan substitutes `h_uh := h_ua` to keep
/// the primitive applicable. Errors with [`Error::AllInfeasible`] when no
/// mesh point passes the checks.
pub fn oracle_p1(p: &SystemParams, mesh: &MeshSpec) -> Result<OracleOutcome> {
    p.validate()?;
    let coop = p.channels.noma_order_ok();
    let gains = if coop {
        p.channels
    } else {
        ChannelGains { h_uh: p.channels.h_ua, ..p.channels }
    };
    let axes = p1_axes(p);
    let uh = if coop {
        linspace(axes[0].1, axes[0].2, mesh.points_per_axis)
    } else {
        vec![0.0]
    };
    let ua = linspace(axes[1].1, axes[1].2, mesh.points_per_axis);
    let ha = linspace(axes[2].1, axes[2].2, mesh.points_per_axis);
    let al = linspace(0.0, 1.0, mesh.alpha_points);

    // One task per slot split; each scans its bit box and reports the best
    // (value, flat index) so the final reduction is index-ordered.
    let per_alpha: Vec<(f64, u64, u64)> = al
        .par_iter()
        .map(|&alpha| {
            let mut best = (f64::INFINITY, u64::MAX);
            let mut feasible = 0u64;
            let mut flat = 0u64;
            for &x_uh in &uh {
                for &x_ua in &ua {
                    for &x_ha in &ha {
                        if let Some((v, _)) = eval_p1_point(p, &gains, x_uh, x_ua, x_ha, alpha) {
                            feasible += 1;
                            if v < best.0 {
                                best = (v, flat);
                            }
                        }
                        flat += 1;
                    }
                }
            }
            (best.0, best.1, feasible)
        })
        .collect();

    let mut value = f64::INFINITY;
    let mut at = (usize::MAX, u64::MAX);
    let mut feasible_points = 0u64;
    for (ia, &(v, flat, feas)) in per_alpha.iter().enumerate() {
        feasible_points += feas;
        if v < value {
            value = v;
            at = (ia, flat);
        }
    }
    let total = (uh.len() * ua.len() * ha.len() * al.len()) as u64;
    if !value.is_finite() {
        return Err(Error::AllInfeasible);
    }

    let (ia, flat) = at;
    let i_uh = (flat / (ua.len() * ha.len()) as u64) as usize;
    let i_ua = (flat / ha.len() as u64 % ua.len() as u64) as usize;
    let i_ha = (flat % ha.len() as u64) as usize;
    let (_, alloc) = eval_p1_point(p, &gains, uh[i_uh], ua[i_ua], ha[i_ha], al[ia])
        .expect("argmin re-evaluates");

    // Local resolution estimate: objective step to adjacent feasible points.
    let mut mesh_error = 0.0f64;
    let idx = [i_uh as isize, i_ua as isize, i_ha as isize, ia as isize];
    let lens = [uh.len(), ua.len(), ha.len(), al.len()];
    for axis in 0..4 {
        for dir in [-1isize, 1] {
            let mut j = idx;
            j[axis] += dir;
            if j[axis] < 0 || j[axis] >= lens[axis] as isize {
                continue;
            }
            if let Some((v, _)) = eval_p1_point(
                p,
                &gains,
                uh[j[0] as usize],
                ua[j[1] as usize],
                ha[j[2] as usize],
                al[j[3] as usize],
            ) {
                mesh_error = mesh_error.max((v - value).abs());
            }
        }
    }

    Ok(OracleOutcome { value, allocation: alloc, mesh_error, feasible_points, total_points: total })
}

/// Weighted offloaded bits of a `(beta, t_u)` mesh point, or `None` when
/// infeasible. Powers are fixed at the caps with the user's share split by
/// `beta`; bits follow from the rate formulas.
fn eval_p2_point(p: &SystemParams, beta: f64, t_u: f64) -> Option<(f64, Allocation)> {
    let p_uh = beta * p.caps.p_bar_u;
    let p_ua = (1.0 - beta) * p.caps.p_bar_u;
    let p_ha = p.caps.p_bar_h;
    let (r_uh, r_ua) = noma_rates(&p.channels, p_uh, p_ua).ok()?;
    let r_ha = helper_ap_rate(p.channels.h_ha, p_ha).ok()?;
    let t_h = p.deadline - t_u;
    let a = Allocation {
        p_uh,
        p_ua,
        p_ha,
        ell_uh: t_u * p.bandwidth * r_uh,
        ell_ua: t_u * p.bandwidth * r_ua,
        ell_ha: t_h * p.bandwidth * r_ha,
        t_u,
        t_h,
    };
    if !check_feasible_p2(p, &a).is_empty() {
        return None;
    }
    Some((p.w_u * (a.ell_uh + a.ell_ua) + p.w_h * a.ell_ha, a))
}

/// Exhaustive reference for the data-maximization problem: a scan over the
/// user power split `beta` and the user slot `t_u` at full transmit powers.
pub fn oracle_p2(p: &SystemParams, mesh: &MeshSpec) -> Result<OracleOutcome> {
    p.validate()?;
    let k = mesh.points_per_axis;
    let betas = if p.channels.noma_order_ok() { linspace(0.0, 1.0, k) } else { vec![0.0] };
    let ts = linspace(0.0, p.deadline, k);

    let per_beta: Vec<(f64, u64, u64)> = betas
        .par_iter()
        .map(|&beta| {
            let mut best = (f64::NEG_INFINITY, u64::MAX);
            let mut feasible = 0u64;
            for (j, &t_u) in ts.iter().enumerate() {
                if let Some((v, _)) = eval_p2_point(p, beta, t_u) {
                    feasible += 1;
                    if v > best.0 {
                        best = (v, j as u64);
                    }
                }
            }
            (best.0, best.1, feasible)
        })
        .collect();

    let mut value = f64::NEG_INFINITY;
    let mut at = (usize::MAX, usize::MAX);
    let mut feasible_points = 0u64;
    for (ib, &(v, j, feas)) in per_beta.iter().enumerate() {
        feasible_points += feas;
        if v > value {
            value = v;
            at = (ib, j as usize);
        }
    }
    if !value.is_finite() {
        return Err(Error::AllInfeasible);
    }
    let (ib, jt) = at;
    let (_, alloc) = eval_p2_point(p, betas[ib], ts[jt]).expect("argmax re-evaluates");

    let mut mesh_error = 0.0f64;
    for (di, dj) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
        let (i, j) = (ib as isize + di, jt as isize + dj);
        if i < 0 || i >= betas.len() as isize || j < 0 || j >= ts.len() as isize {
            continue;
        }
        if let Some((v, _)) = eval_p2_point(p, betas[i as usize], ts[j as usize]) {
            mesh_error = mesh_error.max((v - value).abs());
        }
    }

    Ok(OracleOutcome {
        value,
        allocation: alloc,
        mesh_error,
        feasible_points,
        total_points: (betas.len() * ts.len()) as u64,
    })
}


#[cfg(test)]
impl SystemParams {
    /// Weighted all-local energy, used by oracle sanity tests.
    pub(crate) fn norm_all_local_for_tests(&self) -> f64 {
        self.norm().all_local_energy()
    }
}
