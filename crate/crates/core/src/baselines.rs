//! Non-cooperative benchmark schemes. None of them relay user bits through
//! the helper: `ell_uh = 0` and `p_uh = 0` in every returned allocation.
//!
//! Two access disciplines are covered for each problem:
//!
//! * `tdma`: the user and the helper transmit in disjoint slots. For energy
//!   minimization this is the cooperative solver with the relay stream
//!   pinned to zero (a strict restriction, so it can never beat the
//!   cooperative optimum); for throughput it is a bang-bang slot split.
//! * `noma`: both transmit simultaneously over the whole frame and the
//!   access point separates them by successive decoding. The returned
//!   allocation records the shared window as `t_u = T, t_h = 0`; the
//!   helper's bits and transmit energy still refer to the full frame, and
//!   the reported value accounts for them directly.

use serde::Serialize;

use crate::energy_min::solve_p1_with_mode;
use crate::numerics::{bcd2, grid_min};
use crate::system_model::{snr_for_rate, Allocation, Norm, SystemParams, LN2};
use crate::{Error, Result};

/// Outcome of one benchmark scheme.
#[derive(Debug, Clone, Serialize)]
pub struct BaselineReport {
    /// Access discipline: `"tdma"` or `"noma"`.
    pub scheme: &'static str,
    /// `"energy-min"` or `"data-max"`.
    pub problem: &'static str,
    /// Weighted energy (J) or weighted delivered bits, matching `problem`.
    pub value: f64,
    pub allocation: Allocation,
    /// Decoding order for the `noma` schemes, empty otherwise.
    pub note: &'static str,
}

/// Energy minimization without relaying: the user offloads only directly to
/// the access point; slots are disjoint.
pub fn tdma_energy_min(p: &SystemParams, alpha_grid: usize) -> Result<BaselineReport> {
    let r = solve_p1_with_mode(p, alpha_grid, false)?;
    Ok(BaselineReport {
        scheme: "tdma",
        problem: "energy-min",
        value: r.weighted_energy,
        allocation: r.allocation,
        note: "",
    })
}

/// Throughput without relaying under disjoint slots: whoever offers more
/// weighted rate at full power takes the whole frame; ties go to the helper.
pub fn tdma_data_max(p: &SystemParams) -> Result<BaselineReport> {
    p.validate()?;
    let n = p.norm();
    let r1 = (1.0 + n.p_bar_u * n.h_ua).log2();
    let r2 = (1.0 + n.p_bar_h * n.h_ha).log2();
    let user_wins = n.w_u * r1 > n.w_h * r2;
    let allocation = if user_wins {
        Allocation {
            p_ua: n.p_bar_u,
            ell_ua: n.t * n.b * r1,
            t_u: n.t,
            ..Allocation::ZERO
        }
    } else {
        Allocation {
            p_ha: n.p_bar_h,
            ell_ha: n.t * n.b * r2,
            t_h: n.t,
            ..Allocation::ZERO
        }
    };
    Ok(BaselineReport {
        scheme: "tdma",
        problem: "data-max",
        value: n.t * n.b * (n.w_u * r1).max(n.w_h * r2),
        allocation,
        note: "",
    })
}

/// Which node the access point decodes first in a shared-window scheme; the
/// other node's signal is received clean after cancellation.
#[derive(Clone, Copy, PartialEq, Eq)]
enum DecodeOrder {
    HelperFirst,
    UserFirst,
}

impl DecodeOrder {
    fn label(self) -> &'static str {
        match self {
            DecodeOrder::HelperFirst => "helper-decoded-first",
            DecodeOrder::UserFirst => "user-decoded-first",
        }
    }
}

/// Throughput with both nodes transmitting over the whole frame.
///
/// The node decoded second runs at full power (its power never hurts the
/// other stream); the first-decoded node's rate sees the second's signal as
/// interference, so the second's power is the only free variable. Both
/// decoding orders are evaluated and the better one returned.
pub fn noma_data_max(p: &SystemParams) -> Result<BaselineReport> {
    p.validate()?;
    let n = p.norm();
    let helper_first = shared_window_rates(&n, DecodeOrder::HelperFirst);
    let user_first = shared_window_rates(&n, DecodeOrder::UserFirst);
    let (order, (value, r_user, r_helper)) =
        if helper_first.0 >= user_first.0 {
            (DecodeOrder::HelperFirst, helper_first)
        } else {
            (DecodeOrder::UserFirst, user_first)
        };
    let p_ua = if order == DecodeOrder::HelperFirst {
        snr_for_rate(r_user) / n.h_ua
    } else {
        n.p_bar_u
    };
    let p_ha = if order == DecodeOrder::HelperFirst {
        n.p_bar_h
    } else {
        snr_for_rate(r_helper) / n.h_ha
    };
    Ok(BaselineReport {
        scheme: "noma",
        problem: "data-max",
        value,
        allocation: Allocation {
            p_ua,
            p_ha,
            ell_ua: n.t * n.b * r_user,
            ell_ha: n.t * n.b * r_helper,
            t_u: n.t,
            t_h: 0.0,
            ..Allocation::ZERO
        },
        note: order.label(),
    })
}

/// Best weighted sum rate for one decoding order; returns
/// `(weighted bits, user rate, helper rate)`.
///
/// With the first-decoded node at rate `log2(1 + b q / (1 + a x))` and the
/// clean node at `log2(1 + a x)`, the derivative in the clean node's power
/// `x` changes sign at most once from negative to positive, so the maximum
/// sits at an endpoint or, failing a bracket, on a dense grid.
fn shared_window_rates(n: &Norm, order: DecodeOrder) -> (f64, f64, f64) {
    // `a`: clean node's gain and power cap and weight; `bq`: interfered
    // node's received SNR at full power and its weight.
    let (a, x_cap, w_clean, bq, w_first) = match order {
        DecodeOrder::HelperFirst => {
            (n.h_ua, n.p_bar_u, n.w_u, n.h_ha * n.p_bar_h, n.w_h)
        }
        DecodeOrder::UserFirst => {
            (n.h_ha, n.p_bar_h, n.w_h, n.h_ua * n.p_bar_u, n.w_u)
        }
    };
    let rate_pair = |x: f64| {
        let clean = (1.0 + a * x).log2();
        let first = (1.0 + bq / (1.0 + a * x)).log2();
        (clean, first)
    };
    let weighted = |x: f64| {
        let (clean, first) = rate_pair(x);
        w_clean * clean + w_first * first
    };
    let mut candidates = vec![0.0, x_cap];
    // Sign change of the derivative bracket w_clean - w_first bq/(1+ax+bq):
    // it can only go negative-to-positive, so interior roots are minima and
    // the endpoints carry the maxima. A dense scan backs up the analysis.
    let bracket = |x: f64| w_clean - w_first * bq / (1.0 + a * x + bq);
    if w_clean > 0.0 && bracket(0.0) < 0.0 && bracket(x_cap) > 0.0 {
        let root = ((w_first * bq / w_clean - 1.0 - bq) / a).clamp(0.0, x_cap);
        candidates.push(root);
    }
    let (grid_best, _) = grid_min(|x| -weighted(x), 0.0, x_cap, 1001);
    if grid_best.is_finite() {
        candidates.push(grid_best);
    }
    let best = candidates
        .into_iter()
        .max_by(|x, y| weighted(*x).total_cmp(&weighted(*y)))
        .unwrap();
    let (clean, first) = rate_pair(best);
    let value = n.t * n.b * weighted(best);
    match order {
        DecodeOrder::HelperFirst => (value, clean, first),
        DecodeOrder::UserFirst => (value, first, clean),
    }
}

/// Energy minimization with both nodes transmitting over the whole frame.
///
/// Decision variables are the offloaded bits `x` (user) and `y` (helper).
/// Rate inversion under successive decoding makes the transmit energy
/// jointly convex in `(x, y)`, so alternating exact scalar updates from the
/// best seed on a coarse grid converge; a sweep along the server-budget face
/// guards the one coupled constraint. Both decoding orders are evaluated.
pub fn noma_energy_min(p: &SystemParams) -> Result<BaselineReport> {
    p.validate()?;
    if p.w_u <= 0.0 {
        return Err(Error::InvalidParams(
            "w_u must be positive for energy minimization".into(),
        ));
    }
    let n = p.norm();
    let x_lo = n.need_user_bits();
    let y_lo = (n.l_h - n.f_h * n.t / n.c_u).max(0.0);
    if x_lo > n.l_u * (1.0 + 1e-12)
        || y_lo > n.l_h * (1.0 + 1e-12)
        || x_lo * n.c_u + y_lo * n.c_h > n.f_cap * (1.0 + 1e-12)
    {
        return Err(Error::Infeasible(
            "offload floors exceed the task sizes or the server budget".into(),
        ));
    }

    let helper_first = shared_window_energy(&n, DecodeOrder::HelperFirst, x_lo, y_lo);
    let user_first = shared_window_energy(&n, DecodeOrder::UserFirst, x_lo, y_lo);
    let (order, (value, x, y)) = if helper_first.0 <= user_first.0 {
        (DecodeOrder::HelperFirst, helper_first)
    } else {
        (DecodeOrder::UserFirst, user_first)
    };

    // Powers from rate inversion for the chosen order.
    let (p_ua, p_ha) = match order {
        DecodeOrder::HelperFirst => {
            let p_ua = snr_for_rate(x / n.t) / n.h_ua;
            let p_ha = snr_for_rate(y / n.t) * (x / n.t).exp2() / n.h_ha;
            (p_ua, p_ha)
        }
        DecodeOrder::UserFirst => {
            let p_ha = snr_for_rate(y / n.t) / n.h_ha;
            let p_ua = snr_for_rate(x / n.t) * (y / n.t).exp2() / n.h_ua;
            (p_ua, p_ha)
        }
    };
    Ok(BaselineReport {
        scheme: "noma",
        problem: "energy-min",
        value,
        allocation: Allocation {
            p_ua,
            p_ha,
            ell_ua: x * n.b,
            ell_ha: y * n.b,
            t_u: n.t,
            t_h: 0.0,
            ..Allocation::ZERO
        },
        note: order.label(),
    })
}

/// Minimize weighted energy for one decoding order; returns
/// `(weighted energy J, user bits, helper bits)` in normalized bits.
fn shared_window_energy(
    n: &Norm,
    order: DecodeOrder,
    x_lo: f64,
    y_lo: f64,
) -> (f64, f64, f64) {
    let t = n.t;
    // Transmit-power cost coefficients per node.
    let cu = n.w_u * t / n.h_ua;
    let ch = n.w_h * t / n.h_ha;
    let energy = |x: f64, y: f64| {
        let tx = match order {
            DecodeOrder::HelperFirst => {
                cu * snr_for_rate(x / t) + ch * snr_for_rate(y / t) * (x / t).exp2()
            }
            DecodeOrder::UserFirst => {
                cu * snr_for_rate(x / t) * (y / t).exp2() + ch * snr_for_rate(y / t)
            }
        };
        tx + n.w_u * n.e_u * (n.l_u - x) + n.w_h * n.e_h * (n.l_h - y)
    };
    let x_hi_at = |y: f64| n.l_u.min((n.f_cap - y * n.c_h) / n.c_u).max(0.0);
    let y_hi_at = |x: f64| n.l_h.min((n.f_cap - x * n.c_u) / n.c_h).max(0.0);

    // Exact scalar minimizers over the current intervals.
    let update_x = |y: &f64| {
        let y = *y;
        let denom = match order {
            DecodeOrder::HelperFirst => {
                LN2 * (n.w_u / n.h_ua + n.w_h / n.h_ha * snr_for_rate(y / t))
            }
            DecodeOrder::UserFirst => LN2 * (n.w_u / n.h_ua) * (y / t).exp2(),
        };
        let arg = n.w_u * n.e_u / denom;
        let stat = if arg > 0.0 { (t * arg.log2()).max(0.0) } else { 0.0 };
        stat.clamp(x_lo, x_hi_at(y).max(x_lo))
    };
    let update_y = |x: &f64| {
        let x = *x;
        let denom = match order {
            DecodeOrder::HelperFirst => LN2 * (n.w_h / n.h_ha) * (x / t).exp2(),
            DecodeOrder::UserFirst => {
                LN2 * (n.w_h / n.h_ha + n.w_u / n.h_ua * snr_for_rate(x / t))
            }
        };
        let arg = n.w_h * n.e_h / denom;
        let stat = if arg > 0.0 { (t * arg.log2()).max(0.0) } else { 0.0 };
        stat.clamp(y_lo, y_hi_at(x).max(y_lo))
    };

    // Seed: best feasible point of a coarse grid.
    let mut seed = (x_lo, y_lo);
    let mut seed_val = energy(x_lo, y_lo);
    let k = 31;
    for i in 0..k {
        let x = x_lo + (n.l_u - x_lo) * i as f64 / (k - 1) as f64;
        for j in 0..k {
            let y = y_lo + (n.l_h - y_lo) * j as f64 / (k - 1) as f64;
            if x * n.c_u + y * n.c_h > n.f_cap {
                continue;
            }
            let v = energy(x, y);
            if v < seed_val {
                seed_val = v;
                seed = (x, y);
            }
        }
    }

    let tol = 1e-13 * n.all_local_energy().max(1e-12);
    let (x, y, _) = bcd2(seed.0, seed.1, update_x, update_y, |x, y| energy(*x, *y), tol, 200);
    let mut best = (energy(x, y), x, y);

    // Server-budget face: x c_u + y c_h = F, one-dimensional in x.
    if x * n.c_u + y * n.c_h >= n.f_cap * (1.0 - 1e-9) {
        let x_min = x_lo.max((n.f_cap - n.l_h * n.c_h) / n.c_u).max(0.0);
        let x_max = x_hi_at(y_lo).max(x_min);
        let (xf, vf) = grid_min(
            |x| {
                let y = ((n.f_cap - x * n.c_u) / n.c_h).clamp(y_lo, n.l_h);
                energy(x, y)
            },
            x_min,
            x_max,
            1001,
        );
        if vf < best.0 {
            let yf = ((n.f_cap - xf * n.c_u) / n.c_h).clamp(y_lo, n.l_h);
            best = (vf, xf, yf);
        }
    }
    (best.0, best.1, best.2)
}
