//! Weighted throughput maximization over one slot frame.
//!
//! Both sources always have data to send: the score is
//! `w_u (ell_uh + ell_ua) + w_h ell_ha`, the bits delivered inside the frame.
//! The user transmits for `t_u` under the power cap `P̄_u`, splitting power
//! between the relayed stream (fraction `beta`) and the direct stream; the
//! helper uses the remaining `T - t_u` at `P̄_h` for its own data. Relayed
//! bits must be processed by the helper before the frame ends and within its
//! relay energy budget `E'_h`.
//!
//! At the optimum both transmitters run at their power caps and the frame is
//! fully used, so only `(beta, t_u)` remain. For each `t_u` the best `beta`
//! sits where a relay constraint binds (or at `beta = 1`), which collapses
//! the search to three scalar concave cases solved in closed form; the best
//! feasible case wins.

use serde::{Deserialize, Serialize};

use crate::numerics::{bisect, BracketMode};
use crate::system_model::{
    helper_ap_rate, noma_rates, snr_for_rate, Allocation, Norm, SystemParams,
};
use crate::{Error, Result};

/// Which structure produced a throughput solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CaseId {
    /// All user power on the relayed stream (`beta = 1`); slot length capped
    /// by the tighter of the helper's processing deadline and energy budget.
    BetaOne,
    /// The helper's processing deadline binds; `beta` follows from it.
    TimeBinding,
    /// The helper's relay energy budget binds; `beta` follows from it.
    EnergyBinding,
    /// Closed-form limit for very strong channels: no relaying, bang-bang
    /// slot assignment.
    HighSnr,
    /// Channel ordering ruled out relaying; direct-only bang-bang slot.
    OrderFallback,
}

/// Outcome of one case's scalar optimization.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CaseEvaluation {
    pub case_id: CaseId,
    /// Optimal user slot within this case (s).
    pub t_u: f64,
    /// Relay power fraction at the optimum, in `[0, 1]`.
    pub beta: f64,
    /// Weighted delivered bits.
    pub value: f64,
    /// Helper relay-energy slack at the optimum (J); zero when that budget
    /// binds.
    pub e_margin: f64,
    /// Upper end of the admissible `t_u` interval for this case (s).
    pub slot_ceiling: f64,
    /// False when the case's admissible interval is empty; `value` is then
    /// meaningless (negative infinity internally).
    pub feasible: bool,
}

/// Result of one throughput-maximization solve.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct P2Report {
    pub allocation: Allocation,
    /// `w_u (ell_uh + ell_ua) + w_h ell_ha` of the returned allocation.
    pub weighted_bits: f64,
    pub winning_case: CaseId,
    /// Relay power fraction of the winner.
    pub beta_star: f64,
    /// All evaluated cases (empty for the fallback and limit solvers).
    pub cases: Vec<CaseEvaluation>,
}

struct Ctx {
    n: Norm,
    /// Direct-stream ceiling `log2(1 + P̄_u h_ua)`.
    r1: f64,
    /// Helper's own rate at full power `log2(1 + P̄_h h_ha)`.
    r2: f64,
    /// Relay-stream ceiling `log2(1 + P̄_u h_uh)`.
    ru: f64,
    /// Gain ratio `h_ua / h_uh ≤ 1`.
    r: f64,
}

impl Ctx {
    fn new(n: Norm) -> Self {
        let r1 = (1.0 + n.p_bar_u * n.h_ua).log2();
        let r2 = (1.0 + n.p_bar_h * n.h_ha).log2();
        let ru = (1.0 + n.p_bar_u * n.h_uh).log2();
        let r = n.h_ua / n.h_uh;
        Ctx { n, r1, r2, ru, r }
    }

    /// Interference factor `1 - r + r 2^x = 1 + h_ua p_uh` when the relay
    /// stream runs at spectral efficiency `x`.
    fn phi(&self, x: f64) -> f64 {
        1.0 - self.r + self.r * x.exp2()
    }

    /// Power fraction that puts the relay stream at spectral efficiency `x`.
    fn beta_for(&self, x: f64) -> f64 {
        (snr_for_rate(x) / (self.n.p_bar_u * self.n.h_uh)).clamp(0.0, 1.0)
    }

    fn beta_one(&self) -> CaseEvaluation {
        let n = &self.n;
        let gain = n.w_u * self.ru - n.w_h * self.r2;
        let t_latency = n.t * n.f_h / (n.f_h + n.c_u * self.ru);
        let t_energy = n.e_prime_h / (n.e_h * self.ru);
        let ceiling = t_latency.min(t_energy);
        let t_u = if gain > 0.0 { ceiling } else { 0.0 };
        let value = n.b * (n.w_h * n.t * self.r2 + gain.max(0.0) * ceiling);
        CaseEvaluation {
            case_id: CaseId::BetaOne,
            t_u,
            beta: 1.0,
            value,
            e_margin: n.e_prime_h - n.e_h * t_u * self.ru,
            slot_ceiling: ceiling,
            feasible: true,
        }
    }

    /// Relay spectral efficiency when the processing deadline binds: the
    /// helper's compute window `T - t_u` exactly absorbs the relayed bits.
    fn rate_deadline(&self, t_u: f64) -> f64 {
        self.n.f_h * (self.n.t - t_u) / (self.n.c_u * t_u)
    }

    /// Admissible `t_u` interval of the deadline-binding case: relay power
    /// within cap on the left, positive slot on the right.
    fn deadline_interval(&self) -> (f64, f64) {
        let n = &self.n;
        let t_lat = n.t * n.f_h / (n.f_h + n.c_u * self.ru); // beta ≤ 1
        let t_en = n.t - n.e_prime_h * n.c_u / (n.e_h * n.f_h); // energy slack
        (t_lat.max(t_en), n.t)
    }

    fn deadline_objective(&self, t_u: f64) -> f64 {
        let n = &self.n;
        let g = self.rate_deadline(t_u);
        n.b * (t_u * (n.w_u * self.r1 - n.w_u * n.f_h / n.c_u - n.w_h * self.r2)
            + n.t * (n.w_u * n.f_h / n.c_u + n.w_h * self.r2)
            - n.w_u * t_u * self.phi(g).log2())
    }

    fn time_binding(&self) -> CaseEvaluation {
        let n = &self.n;
        let (lo, hi) = self.deadline_interval();
        if lo > hi {
            return infeasible(CaseId::TimeBinding, hi);
        }
        let objective = |t_u: f64| self.deadline_objective(t_u);
        let slope = |t_u: f64| {
            let g = self.rate_deadline(t_u);
            let growth = g.exp2();
            n.w_u * self.r1 - n.w_h * self.r2 - n.w_u * n.f_h / n.c_u
                - n.w_u * self.phi(g).log2()
                + n.w_u * n.t * n.f_h * n.h_ua * growth
                    / (n.c_u * t_u * (n.h_uh - n.h_ua + n.h_ua * growth))
        };
        let t_u = bisect(slope, lo, hi, 1e-13 * n.t, BracketMode::Monotone)
            .expect("monotone bisection cannot fail");
        let relayed = self.rate_deadline(t_u).max(0.0);
        CaseEvaluation {
            case_id: CaseId::TimeBinding,
            t_u,
            beta: self.beta_for(relayed),
            value: objective(t_u),
            e_margin: n.e_prime_h - n.e_h * (n.t - t_u) * n.f_h / n.c_u,
            slot_ceiling: hi,
            feasible: true,
        }
    }

    /// Relay spectral efficiency when the energy budget binds.
    fn rate_energy(&self, t_u: f64) -> f64 {
        self.n.e_prime_h / (self.n.e_h * t_u)
    }

    /// Admissible `t_u` interval of the budget-binding case: relay power
    /// within cap on the left, helper processing fits on the right.
    fn energy_interval(&self) -> (f64, f64) {
        let n = &self.n;
        let lo = n.e_prime_h / (n.e_h * self.ru); // beta ≤ 1
        let hi = n.t.min(n.t - n.e_prime_h * n.c_u / (n.e_h * n.f_h)); // processing fits
        (lo, hi)
    }

    fn energy_objective(&self, t_u: f64) -> f64 {
        let n = &self.n;
        let q = self.rate_energy(t_u);
        n.b * (n.w_u * n.e_prime_h / n.e_h + n.w_h * n.t * self.r2
            + t_u * (n.w_u * self.r1 - n.w_h * self.r2)
            - n.w_u * t_u * self.phi(q).log2())
    }

    fn energy_binding(&self) -> CaseEvaluation {
        let n = &self.n;
        let (lo, hi) = self.energy_interval();
        if lo > hi {
            return infeasible(CaseId::EnergyBinding, hi);
        }
        let objective = |t_u: f64| self.energy_objective(t_u);
        let slope = |t_u: f64| {
            let q = self.rate_energy(t_u);
            let growth = q.exp2();
            n.w_u * self.r1 - n.w_h * self.r2 - n.w_u * self.phi(q).log2()
                + n.w_u * n.e_prime_h * n.h_ua * growth
                    / (n.e_h * t_u * (n.h_uh - n.h_ua + n.h_ua * growth))
        };
        let t_u = bisect(slope, lo, hi, 1e-13 * n.t, BracketMode::Monotone)
            .expect("monotone bisection cannot fail");
        CaseEvaluation {
            case_id: CaseId::EnergyBinding,
            t_u,
            beta: self.beta_for(self.rate_energy(t_u)),
            value: objective(t_u),
            e_margin: 0.0,
            slot_ceiling: hi,
            feasible: true,
        }
    }

    /// Allocation realizing a case outcome: both transmitters at their caps,
    /// frame fully used, bits from the exact rate expressions.
    fn recover(&self, t_u: f64, beta: f64, p: &SystemParams) -> Result<Allocation> {
        let n = &self.n;
        let t_h = n.t - t_u;
        let (p_uh, p_ua) = if t_u > 0.0 {
            (beta * n.p_bar_u, (1.0 - beta) * n.p_bar_u)
        } else {
            (0.0, 0.0)
        };
        let p_ha = if t_h > 0.0 { n.p_bar_h } else { 0.0 };
        let (r_uh, r_ua) = noma_rates(&p.channels, p_uh, p_ua)?;
        let r_ha = helper_ap_rate(p.channels.h_ha, p_ha)?;
        Ok(Allocation {
            p_uh,
            p_ua,
            p_ha,
            ell_uh: t_u * n.b * r_uh,
            ell_ua: t_u * n.b * r_ua,
            ell_ha: t_h * n.b * r_ha,
            t_u,
            t_h,
        })
    }
}

fn infeasible(case_id: CaseId, ceiling: f64) -> CaseEvaluation {
    CaseEvaluation {
        case_id,
        t_u: 0.0,
        beta: 0.0,
        value: f64::NEG_INFINITY,
        e_margin: 0.0,
        slot_ceiling: ceiling,
        feasible: false,
    }
}

fn weighted_bits(p: &SystemParams, a: &Allocation) -> f64 {
    p.w_u * (a.ell_uh + a.ell_ua) + p.w_h * a.ell_ha
}

/// Best throughput with all user power on the relayed stream.
pub fn solve_case_beta_one(p: &SystemParams) -> Result<CaseEvaluation> {
    p.validate()?;
    require_order(p)?;
    Ok(Ctx::new(p.norm()).beta_one())
}

/// Best throughput with the helper's processing deadline binding.
pub fn solve_case_time_binding(p: &SystemParams) -> Result<CaseEvaluation> {
    p.validate()?;
    require_order(p)?;
    Ok(Ctx::new(p.norm()).time_binding())
}

/// Best throughput with the helper's relay energy budget binding.
pub fn solve_case_energy_binding(p: &SystemParams) -> Result<CaseEvaluation> {
    p.validate()?;
    require_order(p)?;
    Ok(Ctx::new(p.norm()).energy_binding())
}

/// Weighted-bits landscape of one case along the user slot.
///
/// Returns `None` when `t_u` lies outside the case's admissible interval
/// (and always for the two closed-form cases, which have no landscape to
/// sample). Exposed so callers can audit the shape the scalar searches rely
/// on: the two binding-case objectives are concave in `t_u`.
pub fn case_slot_objective(p: &SystemParams, case: CaseId, t_u: f64) -> Result<Option<f64>> {
    p.validate()?;
    require_order(p)?;
    let ctx = Ctx::new(p.norm());
    let (lo, hi) = match case {
        CaseId::BetaOne => (0.0, ctx.beta_one().slot_ceiling),
        CaseId::TimeBinding => ctx.deadline_interval(),
        CaseId::EnergyBinding => ctx.energy_interval(),
        CaseId::HighSnr | CaseId::OrderFallback => return Ok(None),
    };
    if !(lo..=hi).contains(&t_u) {
        return Ok(None);
    }
    Ok(Some(match case {
        CaseId::BetaOne => {
            let n = &ctx.n;
            let gain = n.w_u * ctx.ru - n.w_h * ctx.r2;
            n.b * (n.w_h * n.t * ctx.r2 + gain * t_u)
        }
        CaseId::TimeBinding => ctx.deadline_objective(t_u),
        CaseId::EnergyBinding => ctx.energy_objective(t_u),
        _ => unreachable!(),
    }))
}

fn require_order(p: &SystemParams) -> Result<()> {
    if !p.channels.noma_order_ok() {
        return Err(Error::NomaOrderViolated);
    }
    Ok(())
}

/// Direct-only bang-bang split used when relaying is unavailable: whoever
/// offers more weighted rate takes the whole frame; ties go to the helper.
fn order_fallback(p: &SystemParams, case: CaseId) -> Result<P2Report> {
    let ctx = Ctx::new(p.norm());
    let t_u = if p.w_u * ctx.r1 > p.w_h * ctx.r2 { p.deadline } else { 0.0 };
    let allocation = ctx.recover(t_u, 0.0, p)?;
    Ok(P2Report {
        weighted_bits: weighted_bits(p, &allocation),
        allocation,
        winning_case: case,
        beta_star: 0.0,
        cases: Vec::new(),
    })
}

/// Maximize weighted delivered bits over the relay power split and the slot
/// split.
///
/// Evaluates the three binding-structure cases and returns the best feasible
/// one (ties prefer the earlier case in the reported order). Scenarios that
/// violate the decoding order fall back to a direct-only bang-bang split.
pub fn solve_p2(p: &SystemParams) -> Result<P2Report> {
    p.validate()?;
    if !p.channels.noma_order_ok() {
        return order_fallback(p, CaseId::OrderFallback);
    }
    let ctx = Ctx::new(p.norm());
    let cases = vec![ctx.beta_one(), ctx.time_binding(), ctx.energy_binding()];
    let winner = cases
        .iter()
        .filter(|c| c.feasible)
        .fold(None::<&CaseEvaluation>, |best, c| match best {
            Some(b) if c.value <= b.value => Some(b),
            _ => Some(c),
        })
        .copied()
        .ok_or(Error::AllInfeasible)?;
    let allocation = ctx.recover(winner.t_u, winner.beta, p)?;
    Ok(P2Report {
        weighted_bits: weighted_bits(p, &allocation),
        allocation,
        winning_case: winner.case_id,
        beta_star: winner.beta,
        cases,
    })
}

/// Strong-channel limit of [`solve_p2`]: relaying power vanishes and the
/// frame goes entirely to one side.
///
/// Relaying still pays off through the decoding-gain term
/// `log2(h_uh / h_ua)`, so the user wins the frame when
/// `w_u (log2(h_uh / h_ua) + r1) > w_h r2`; ties go to the helper. The
/// reported value is the limit of the winning side's weighted rate.
/// `allocation` realizes the limiting protocol shape with the relay split
/// already at zero, so on the user branch its delivered bits sit below
/// `weighted_bits` by exactly the decoding-gain term; the gap closes only
/// as the split tends to zero with the channels growing.
pub fn solve_p2_high_snr(p: &SystemParams) -> Result<P2Report> {
    p.validate()?;
    if !p.channels.noma_order_ok() {
        return order_fallback(p, CaseId::OrderFallback);
    }
    let ctx = Ctx::new(p.norm());
    let user_side = p.w_u * ((p.channels.h_uh / p.channels.h_ua).log2() + ctx.r1);
    let helper_side = p.w_h * ctx.r2;
    let t_u = if user_side > helper_side { p.deadline } else { 0.0 };
    let allocation = ctx.recover(t_u, 0.0, p)?;
    Ok(P2Report {
        weighted_bits: user_side.max(helper_side) * p.deadline * p.bandwidth,
        allocation,
        winning_case: CaseId::HighSnr,
        beta_star: 0.0,
        cases: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{oracle_p2, MeshSpec};
    use crate::system_model::{check_feasible_p2, ChannelGains, DeviceCaps, TaskLoad};

    /// Small integer-friendly scenario: ru = 2, r1 = 1, r2 = 1, e_h = 4.
    fn unit_scenario() -> SystemParams {
        SystemParams {
            channels: ChannelGains { h_uh: 3.0, h_ua: 1.0, h_ha: 1.0 },
            task: TaskLoad { l_u: 0.0, l_h: 0.0, c_u: 1.0, c_h: 1.0 },
            caps: DeviceCaps {
                f_u: 1.0,
                f_h: 2.0,
                kappa: 1.0,
                p_bar_u: 1.0,
                p_bar_h: 1.0,
                e_prime_h: 2.0,
                f_cap: 1e9,
            },
            deadline: 1.0,
            w_u: 1.0,
            w_h: 1.0,
            bandwidth: 1.0,
        }
    }

    fn radio_scenario() -> SystemParams {
        SystemParams {
            channels: ChannelGains { h_uh: 2.915e6, h_ua: 2.963e5, h_ha: 1.953125e6 },
            task: TaskLoad { l_u: 8e4, l_h: 8e4, c_u: 1.0, c_h: 1.0 },
            caps: DeviceCaps {
                f_u: 3e9,
                f_h: 1e9,
                kappa: 1e-26,
                p_bar_u: 0.4,
                p_bar_h: 0.8,
                e_prime_h: 1e-3,
                f_cap: 1e5,
            },
            deadline: 5e-3,
            w_u: 1.0,
            w_h: 1.0,
            bandwidth: 1e6,
        }
    }

    #[test]
    fn beta_one_hand_values() {
        // ru = log2(4) = 2, r2 = 1: gain = 1. Latency ceiling
        // T f_h/(f_h + c_u ru) = 2/4 = 0.5; energy ceiling
        // E'_h/(e_h ru) = 2/8 = 0.25. Value = r2 T + gain * 0.25 = 1.25.
        let c = solve_case_beta_one(&unit_scenario()).unwrap();
        assert!(c.feasible);
        assert!((c.t_u - 0.25).abs() < 1e-12);
        assert!((c.value - 1.25).abs() < 1e-12);
        assert!((c.slot_ceiling - 0.25).abs() < 1e-12);
        assert!(c.e_margin.abs() < 1e-12); // energy bound tight
        assert_eq!(c.beta, 1.0);
    }

    #[test]
    fn beta_one_keeps_slot_zero_without_gain() {
        // Raise the helper's own rate so relaying the user loses.
        let mut p = unit_scenario();
        p.channels.h_ha = 255.0; // r2 = 8 > ru w_u
        let c = solve_case_beta_one(&p).unwrap();
        assert_eq!(c.t_u, 0.0);
        assert!((c.value - 8.0).abs() < 1e-12);
    }

    #[test]
    fn time_binding_slot_saturates_processing() {
        // Plenty of relay energy: only the deadline can bind.
        let mut p = unit_scenario();
        p.caps.e_prime_h = 100.0;
        let c = solve_case_time_binding(&p).unwrap();
        assert!(c.feasible);
        // The helper's processing window absorbs the relayed bits exactly.
        let relayed = (p.deadline - c.t_u) * p.caps.f_h / p.task.c_u;
        let from_beta = c.t_u * (1.0 + c.beta * p.caps.p_bar_u * p.channels.h_uh).log2();
        assert!((relayed - from_beta).abs() < 1e-9 * relayed.max(1.0));
        assert!(c.e_margin > 0.0);
    }

    #[test]
    fn energy_binding_interval_empty_when_budget_huge() {
        let mut p = unit_scenario();
        p.caps.e_prime_h = 8.0; // lower end t = 1 > upper end
        let c = solve_case_energy_binding(&p).unwrap();
        assert!(!c.feasible);
        assert_eq!(c.value, f64::NEG_INFINITY);
    }

    #[test]
    fn case_boundary_continuity() {
        // At the deadline-driven lower end of the time-binding interval the
        // relay rate hits its cap, so the value matches the beta-one line
        // evaluated at that same slot.
        let mut p = unit_scenario();
        p.caps.e_prime_h = 100.0;
        let ctx = Ctx::new(p.norm());
        assert!(ctx.time_binding().feasible);
        let t_lo = p.deadline * p.caps.f_h / (p.caps.f_h + p.task.c_u * ctx.ru);
        let g = ctx.rate_deadline(t_lo);
        assert!((g - ctx.ru).abs() < 1e-12);
        let beta_one_line = p.w_h * p.deadline * ctx.r2 + (p.w_u * ctx.ru - p.w_h * ctx.r2) * t_lo;
        // Evaluate the deadline-binding objective at t_lo directly.
        let time_val = p.bandwidth
            * (t_lo * (p.w_u * ctx.r1 - p.w_u * p.caps.f_h / p.task.c_u - p.w_h * ctx.r2)
                + p.deadline * (p.w_u * p.caps.f_h / p.task.c_u + p.w_h * ctx.r2)
                - p.w_u * t_lo * ctx.phi(g).log2());
        assert!((time_val - beta_one_line).abs() < 1e-9 * beta_one_line.abs().max(1.0));
    }

    #[test]
    fn objectives_are_concave_in_slot() {
        let p = radio_scenario();
        let ctx = Ctx::new(p.norm());
        // Second differences of both scalar objectives on their intervals.
        let check = |f: &dyn Fn(f64) -> f64, lo: f64, hi: f64| {
            let k = 400;
            let step = (hi - lo) / (k as f64 + 1.0);
            for i in 1..=k {
                let t = lo + step * i as f64;
                let second = f(t - step) - 2.0 * f(t) + f(t + step);
                assert!(second <= 1e-7 * f(t).abs().max(1.0), "second diff {second} at {t}");
            }
        };
        let n = &ctx.n;
        let lo_tb = (n.t * n.f_h / (n.f_h + n.c_u * ctx.ru))
            .max(n.t - n.e_prime_h * n.c_u / (n.e_h * n.f_h));
        check(
            &|t: f64| {
                let g = ctx.rate_deadline(t);
                t * (n.w_u * ctx.r1 - n.w_u * n.f_h / n.c_u - n.w_h * ctx.r2)
                    - n.w_u * t * ctx.phi(g).log2()
            },
            lo_tb.max(1e-6 * n.t),
            n.t,
        );
        let lo_eb = n.e_prime_h / (n.e_h * ctx.ru);
        let hi_eb = n.t - n.e_prime_h * n.c_u / (n.e_h * n.f_h);
        if lo_eb < hi_eb {
            check(
                &|t: f64| {
                    let q = ctx.rate_energy(t);
                    t * (n.w_u * ctx.r1 - n.w_h * ctx.r2) - n.w_u * t * ctx.phi(q).log2()
                },
                lo_eb,
                hi_eb,
            );
        }
    }

    #[test]
    fn solver_reproduces_case_value_through_rates() {
        for p in [unit_scenario(), radio_scenario()] {
            let r = solve_p2(&p).unwrap();
            let recomputed = p.w_u * (r.allocation.ell_uh + r.allocation.ell_ua)
                + p.w_h * r.allocation.ell_ha;
            assert!(
                (recomputed - r.weighted_bits).abs() <= 1e-9 * r.weighted_bits.max(1.0),
                "identity broke: {recomputed} vs {}",
                r.weighted_bits
            );
            let row = r.cases.iter().find(|c| c.case_id == r.winning_case).unwrap();
            assert!((row.value - r.weighted_bits).abs() <= 1e-6 * r.weighted_bits.max(1.0));
            assert!(check_feasible_p2(&p, &r.allocation).is_empty());
        }
    }

    #[test]
    fn full_power_and_full_frame_at_optimum() {
        let r = solve_p2(&radio_scenario()).unwrap();
        let p = radio_scenario();
        let a = &r.allocation;
        assert!((a.t_u + a.t_h - p.deadline).abs() <= 1e-12 * p.deadline);
        if a.t_u > 0.0 {
            assert!((a.p_uh + a.p_ua - p.caps.p_bar_u).abs() <= 1e-9 * p.caps.p_bar_u);
        }
        if a.t_h > 0.0 {
            assert!((a.p_ha - p.caps.p_bar_h).abs() <= 1e-9 * p.caps.p_bar_h);
        }
    }

    #[test]
    fn sandwich_against_mesh_reference() {
        for p in [radio_scenario(), unit_scenario()] {
            let r = solve_p2(&p).unwrap();
            let o = oracle_p2(&p, &MeshSpec::p2_default()).unwrap();
            assert!(
                r.weighted_bits >= o.value - 1e-9 * o.value.abs().max(1.0),
                "solver below mesh: {} vs {}",
                r.weighted_bits,
                o.value
            );
            assert!(
                r.weighted_bits <= o.value + o.mesh_error + 1e-9 * o.value.abs(),
                "solver above mesh + error: {} vs {} + {}",
                r.weighted_bits,
                o.value,
                o.mesh_error
            );
        }
    }

    #[test]
    fn zero_user_weight_gives_helper_the_frame() {
        let mut p = radio_scenario();
        p.w_u = 0.0;
        let r = solve_p2(&p).unwrap();
        let expect = p.deadline
            * p.bandwidth
            * (1.0 + p.caps.p_bar_h * p.channels.h_ha).log2()
            * p.w_h;
        assert!((r.weighted_bits - expect).abs() <= 1e-9 * expect);
        assert_eq!(r.allocation.t_u, 0.0);
    }

    #[test]
    fn tied_gains_converge_to_helper_only_value() {
        // With h_uh = h_ua relaying brings no decoding gain; with a huge
        // helper channel the frame goes to the helper.
        let mut p = radio_scenario();
        p.channels.h_uh = p.channels.h_ua;
        p.channels.h_ha *= 1e6;
        let r = solve_p2(&p).unwrap();
        let helper_only = p.w_h * p.deadline * p.bandwidth
            * (1.0 + p.caps.p_bar_h * p.channels.h_ha).log2();
        assert!(
            (r.weighted_bits - helper_only).abs() <= 1e-2 * helper_only,
            "{} vs {helper_only}",
            r.weighted_bits
        );
    }

    #[test]
    fn high_snr_rule_hand_values() {
        // log2(h_uh/h_ua) = 4, r1 = 8, r2 = 13: 12 < 13 keeps the user out.
        let p = SystemParams {
            channels: ChannelGains { h_uh: 4080.0, h_ua: 255.0, h_ha: 8191.0 },
            task: TaskLoad { l_u: 0.0, l_h: 0.0, c_u: 1.0, c_h: 1.0 },
            caps: DeviceCaps {
                f_u: 1.0,
                f_h: 1.0,
                kappa: 1.0,
                p_bar_u: 1.0,
                p_bar_h: 1.0,
                e_prime_h: 1.0,
                f_cap: 1.0,
            },
            deadline: 1.0,
            w_u: 1.0,
            w_h: 1.0,
            bandwidth: 1.0,
        };
        let r = solve_p2_high_snr(&p).unwrap();
        assert_eq!(r.allocation.t_u, 0.0);
        assert!((r.weighted_bits - 13.0).abs() < 1e-9);
        let mut p2 = p;
        p2.w_u = 2.0; // 24 > 13: user takes the frame
        let r = solve_p2_high_snr(&p2).unwrap();
        assert_eq!(r.allocation.t_u, p2.deadline);
        // Limit value keeps the decoding-gain term; the zero-split
        // allocation itself carries only the direct stream.
        assert!((r.weighted_bits - 24.0).abs() < 1e-9);
        assert!((p2.w_u * r.allocation.ell_ua - 16.0).abs() < 1e-9);
    }

    #[test]
    fn order_violation_uses_direct_fallback() {
        let mut p = radio_scenario();
        std::mem::swap(&mut p.channels.h_uh, &mut p.channels.h_ua);
        let r = solve_p2(&p).unwrap();
        assert_eq!(r.winning_case, CaseId::OrderFallback);
        assert_eq!(r.beta_star, 0.0);
        assert_eq!(r.allocation.ell_uh, 0.0);
        assert!(check_feasible_p2(&p, &r.allocation).is_empty());
    }
}
