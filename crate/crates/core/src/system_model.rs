//! Scenario types and the physical-layer formulas shared by every solver:
//! NOMA uplink rates, power inversion, energy accounting, helper latency,
//! and feasibility checks.
//!
//! Conventions. All public quantities are SI: bits, seconds, watts, joules,
//! hertz, cycles. Channel gains are normalized by the noise power, so `h · p`
//! is a receive SNR. The helper decodes the user's relayed bits; the access
//! point decodes the user's superposed signal by first removing the part
//! intended for the helper (SIC), which requires `h_uh ≥ h_ua`.
//!
//! Internally the solvers divide bit quantities by the bandwidth `B` so that
//! `bits / slot` is a spectral efficiency and the closed-form expressions
//! stay free of stray `B` factors. [`Norm`] carries the scenario with the
//! coefficients compensated accordingly; conversion happens only at module
//! boundaries.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Relative slack applied by feasibility checks and equality recovery.
pub const REL_TOL: f64 = 1e-9;

pub(crate) const LN2: f64 = std::f64::consts::LN_2;

/// `2^x - 1`: SNR needed for a spectral efficiency of `x`.
#[inline]
pub(crate) fn snr_for_rate(x: f64) -> f64 {
    x.exp2() - 1.0
}

/// `lhs > rhs` beyond the shared relative slack.
#[inline]
pub(crate) fn exceeds(lhs: f64, rhs: f64) -> bool {
    lhs - rhs > REL_TOL * lhs.abs().max(rhs.abs())
}

// ---------------------------------------------------------------------------
// scenario types
// ---------------------------------------------------------------------------

/// Channel-gain-to-noise ratios (1/W) of the three links.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGains {
    /// User → helper.
    pub h_uh: f64,
    /// User → access point.
    pub h_ua: f64,
    /// Helper → access point.
    pub h_ha: f64,
}

impl ChannelGains {
    pub fn new(h_uh: f64, h_ua: f64, h_ha: f64) -> Result<Self> {
        let g = Self { h_uh, h_ua, h_ha };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("h_uh", self.h_uh), ("h_ua", self.h_ua), ("h_ha", self.h_ha)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Whether the decoding order assumed by the cooperative solvers holds.
    pub fn noma_order_ok(&self) -> bool {
        self.h_uh >= self.h_ua
    }
}

/// Task sizes and computation intensities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TaskLoad {
    /// User input-data size (bits).
    #[serde(rename = "L_u")]
    pub l_u: f64,
    /// Helper input-data size (bits).
    #[serde(rename = "L_h")]
    pub l_h: f64,
    /// Cycles per bit of user data.
    #[serde(rename = "C_u")]
    pub c_u: f64,
    /// Cycles per bit of helper data, charged against the server budget.
    #[serde(rename = "C_h")]
    pub c_h: f64,
}

impl TaskLoad {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("L_u", self.l_u), ("L_h", self.l_h)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        for (name, v) in [("C_u", self.c_u), ("C_h", self.c_h)] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// Device capabilities and budgets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeviceCaps {
    /// User CPU frequency (cycles/s).
    pub f_u: f64,
    /// Helper CPU frequency (cycles/s).
    pub f_h: f64,
    /// Switched-capacitance coefficient: computing one bit at clock `f`
    /// costs `kappa f²` joules.
    pub kappa: f64,
    /// User transmit power cap (W); binds only in data maximization.
    #[serde(rename = "P_bar_u")]
    pub p_bar_u: f64,
    /// Helper transmit power cap (W); binds only in data maximization.
    #[serde(rename = "P_bar_h")]
    pub p_bar_h: f64,
    /// Helper energy budget for relayed computing (J); data maximization only.
    #[serde(rename = "E_prime_h")]
    pub e_prime_h: f64,
    /// Edge-server cycle budget per slot frame (cycles).
    #[serde(rename = "F")]
    pub f_cap: f64,
}

impl DeviceCaps {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("f_u", self.f_u),
            ("f_h", self.f_h),
            ("kappa", self.kappa),
            ("P_bar_u", self.p_bar_u),
            ("P_bar_h", self.p_bar_h),
            ("E_prime_h", self.e_prime_h),
            ("F", self.f_cap),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }
}

/// A complete scenario: channels, tasks, capabilities, deadline, weights,
/// bandwidth. Serializes to/from JSON with these exact field names.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    pub channels: ChannelGains,
    pub task: TaskLoad,
    pub caps: DeviceCaps,
    /// Slot-frame deadline (s).
    #[serde(rename = "T")]
    pub deadline: f64,
    /// Weight on user energy / user bits.
    pub w_u: f64,
    /// Weight on helper energy / helper bits.
    pub w_h: f64,
    /// Uplink bandwidth (Hz).
    #[serde(rename = "B")]
    pub bandwidth: f64,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        self.channels.validate()?;
        self.task.validate()?;
        self.caps.validate()?;
        if !self.deadline.is_finite() || self.deadline <= 0.0 {
            return Err(Error::InvalidParams(format!("T must be positive, got {}", self.deadline)));
        }
        if !self.bandwidth.is_finite() || self.bandwidth <= 0.0 {
            return Err(Error::InvalidParams(format!("B must be positive, got {}", self.bandwidth)));
        }
        for (name, v) in [("w_u", self.w_u), ("w_h", self.w_h)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidParams(format!("{name} must be non-negative, got {v}")));
            }
        }
        if self.w_u + self.w_h <= 0.0 {
            return Err(Error::InvalidParams("w_u + w_h must be positive".into()));
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let p: SystemParams = serde_json::from_str(text)
            .map_err(|e| Error::InvalidParams(format!("scenario JSON: {e}")))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub(crate) fn norm(&self) -> Norm {
        let b = self.bandwidth;
        Norm {
            h_uh: self.channels.h_uh,
            h_ua: self.channels.h_ua,
            h_ha: self.channels.h_ha,
            l_u: self.task.l_u / b,
            l_h: self.task.l_h / b,
            c_u: self.task.c_u * b,
            c_h: self.task.c_h * b,
            f_u: self.caps.f_u,
            f_h: self.caps.f_h,
            e_u: self.caps.kappa * self.caps.f_u * self.caps.f_u * b,
            e_h: self.caps.kappa * self.caps.f_h * self.caps.f_h * b,
            p_bar_u: self.caps.p_bar_u,
            p_bar_h: self.caps.p_bar_h,
            e_prime_h: self.caps.e_prime_h,
            f_cap: self.caps.f_cap,
            t: self.deadline,
            w_u: self.w_u,
            w_h: self.w_h,
            b,
        }
    }
}

/// Bandwidth-normalized scenario. Bit quantities carry units of bits/Hz, so
/// `bits / slot` is a spectral efficiency; `c_*` is cycles per normalized
/// bit and `e_*` is local-computing energy per normalized bit.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Norm {
    pub h_uh: f64,
    pub h_ua: f64,
    pub h_ha: f64,
    pub l_u: f64,
    pub l_h: f64,
    pub c_u: f64,
    pub c_h: f64,
    pub f_u: f64,
    pub f_h: f64,
    pub e_u: f64,
    pub e_h: f64,
    pub p_bar_u: f64,
    pub p_bar_h: f64,
    pub e_prime_h: f64,
    pub f_cap: f64,
    pub t: f64,
    pub w_u: f64,
    pub w_h: f64,
    pub b: f64,
}

impl Norm {
    /// Bits the user must offload so that local computing meets the deadline.
    pub fn need_user_bits(&self) -> f64 {
        (self.l_u - self.f_u * self.t / self.c_u).max(0.0)
    }

    /// Receive cap: bits the helper can still compute for the user after its
    /// receiving slot of length `alpha·T` ends.
    pub fn cap_uh(&self, alpha: f64) -> f64 {
        (1.0 - alpha) * self.t * self.f_h / self.c_u
    }

    /// Weighted energy of computing both tasks entirely locally (J).
    pub fn all_local_energy(&self) -> f64 {
        self.w_u * self.e_u * self.l_u + self.w_h * self.e_h * self.l_h
    }
}

// ---------------------------------------------------------------------------
// allocation and energy accounting
// ---------------------------------------------------------------------------

/// A resource allocation: transmit powers (W), offloaded bits (bits), and
/// slot lengths (s). `t_u` is the user's transmission slot, `t_h` the
/// helper's forwarding slot; `t_u + t_h ≤ T` for every slotted scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    pub p_uh: f64,
    pub p_ua: f64,
    pub p_ha: f64,
    pub ell_uh: f64,
    pub ell_ua: f64,
    pub ell_ha: f64,
    pub t_u: f64,
    pub t_h: f64,
}

impl Allocation {
    pub const ZERO: Allocation = Allocation {
        p_uh: 0.0,
        p_ua: 0.0,
        p_ha: 0.0,
        ell_uh: 0.0,
        ell_ua: 0.0,
        ell_ha: 0.0,
        t_u: 0.0,
        t_h: 0.0,
    };
}

/// Energy decomposition of an allocation (J). Every component is
/// non-negative for an in-budget allocation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    /// User transmit energy `t_u (p_uh + p_ua)`.
    pub e_off_u: f64,
    /// Helper transmit energy `t_h p_ha`.
    pub e_off_h: f64,
    /// User local-computing energy for the bits it keeps.
    pub e_loc_u: f64,
    /// Helper local-computing energy for its own remainder plus relayed bits.
    pub e_loc_h: f64,
    /// `w_u (e_off_u + e_loc_u) + w_h (e_off_h + e_loc_h)`.
    pub weighted_total: f64,
}

// ---------------------------------------------------------------------------
// rates and power inversion
// ---------------------------------------------------------------------------

/// Spectral efficiencies (bits/s/Hz) of the user's superposed uplink.
///
/// The helper decodes the stream carrying `p_uh`; the access point first
/// decodes and removes that stream, then decodes the stream carrying `p_ua`
/// with the residual interference `h_ua p_uh` still present at the moment
/// the helper's stream is detected.
///
/// Returns `(r_uh, r_ua)` with
/// `r_uh = log2(1 + h_uh p_uh)` and `r_ua = log2(1 + h_ua p_ua / (1 + h_ua p_uh))`.
pub fn noma_rates(g: &ChannelGains, p_uh: f64, p_ua: f64) -> Result<(f64, f64)> {
    if p_uh < 0.0 || p_ua < 0.0 {
        return Err(Error::InvalidParams(format!(
            "powers must be non-negative, got p_uh={p_uh}, p_ua={p_ua}"
        )));
    }
    let r_uh = (1.0 + g.h_uh * p_uh).log2();
    let r_ua = (1.0 + g.h_ua * p_ua / (1.0 + g.h_ua * p_uh)).log2();
    Ok((r_uh, r_ua))
}

/// Helper → access point spectral efficiency `log2(1 + h_ha p_ha)`.
pub fn helper_ap_rate(h_ha: f64, p_ha: f64) -> Result<f64> {
    if p_ha < 0.0 {
        return Err(Error::InvalidParams(format!("p_ha must be non-negative, got {p_ha}")));
    }
    Ok((1.0 + h_ha * p_ha).log2())
}

/// Recover the transmit powers that deliver the given bits in the given
/// slots over bandwidth `b`. Inverse of [`noma_rates`] / [`helper_ap_rate`]
/// scaled by slot length and bandwidth.
///
/// Requires `h_uh ≥ h_ua` (the superposition coefficient `1/h_ua - 1/h_uh`
/// turns negative otherwise) and positive slots wherever bits are positive.
pub fn invert_powers(
    g: &ChannelGains,
    ell_uh: f64,
    ell_ua: f64,
    ell_ha: f64,
    t_u: f64,
    t_h: f64,
    b: f64,
) -> Result<(f64, f64, f64)> {
    if ell_uh < 0.0 || ell_ua < 0.0 || ell_ha < 0.0 {
        return Err(Error::InvalidParams("offloaded bits must be non-negative".into()));
    }
    if g.h_uh < g.h_ua {
        return Err(Error::NomaOrderViolated);
    }
    let user_bits = (ell_uh + ell_ua) / b;
    let helper_bits = ell_ha / b;
    let (p_uh, p_ua) = if user_bits > 0.0 {
        if t_u <= 0.0 {
            return Err(Error::ZeroSlot("t_u"));
        }
        let r_uh = ell_uh / (b * t_u);
        let r_ua = ell_ua / (b * t_u);
        let p_uh = snr_for_rate(r_uh) / g.h_uh;
        let p_ua = (snr_for_rate(r_uh + r_ua) - snr_for_rate(r_uh)) / g.h_uh
            + (1.0 / g.h_ua - 1.0 / g.h_uh) * snr_for_rate(r_ua);
        (p_uh, p_ua)
    } else {
        (0.0, 0.0)
    };
    let p_ha = if helper_bits > 0.0 {
        if t_h <= 0.0 {
            return Err(Error::ZeroSlot("t_h"));
        }
        snr_for_rate(ell_ha / (b * t_h)) / g.h_ha
    } else {
        0.0
    };
    Ok((p_uh, p_ua, p_ha))
}

/// Energy decomposition of an allocation under a scenario.
///
/// Rejects allocations that offload more bits than the source task holds:
/// `ell_uh + ell_ua ≤ L_u` and `ell_ha ≤ L_h` (within the shared slack).
pub fn energy_breakdown(p: &SystemParams, a: &Allocation) -> Result<EnergyBreakdown> {
    if exceeds(a.ell_uh + a.ell_ua, p.task.l_u) {
        return Err(Error::BitOverflow("ell_uh + ell_ua > L_u"));
    }
    if exceeds(a.ell_ha, p.task.l_h) {
        return Err(Error::BitOverflow("ell_ha > L_h"));
    }
    let per_cycle_u = p.caps.kappa * p.caps.f_u * p.caps.f_u;
    let per_cycle_h = p.caps.kappa * p.caps.f_h * p.caps.f_h;
    let e_off_u = a.t_u * (a.p_uh + a.p_ua);
    let e_off_h = a.t_h * a.p_ha;
    let e_loc_u = (p.task.l_u - a.ell_uh - a.ell_ua).max(0.0) * per_cycle_u;
    let e_loc_h = (p.task.l_h - a.ell_ha + a.ell_uh).max(0.0) * per_cycle_h;
    Ok(EnergyBreakdown {
        e_off_u,
        e_off_h,
        e_loc_u,
        e_loc_h,
        weighted_total: p.w_u * (e_off_u + e_loc_u) + p.w_h * (e_off_h + e_loc_h),
    })
}

/// The helper's completion time: it computes its own remainder while
/// receiving, but can start on the user's relayed bits only after the
/// user's slot ends.
///
/// `max(t_u, (L_h - ell_ha) C_u / f_h) + ell_uh C_u / f_h`
pub fn helper_latency(p: &SystemParams, a: &Allocation) -> f64 {
    let own = (p.task.l_h - a.ell_ha) * p.task.c_u / p.caps.f_h;
    a.t_u.max(own) + a.ell_uh * p.task.c_u / p.caps.f_h
}

// ---------------------------------------------------------------------------
// feasibility
// ---------------------------------------------------------------------------

/// A violated constraint reported by the feasibility checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Violation {
    /// User local computing misses the deadline.
    UserLatency,
    /// Helper completion time exceeds the deadline.
    HelperLatency,
    /// Slot lengths exceed the frame: `t_u + t_h > T`.
    TimeBudget,
    /// Edge-server cycle budget exceeded: `ell_ua C_u + ell_ha C_h > F`.
    ApCapacity,
    /// Helper offloads more bits than its task holds: `ell_ha > L_h`.
    HelperBitsExceedTask,
    /// `p_uh + p_ua > P̄_u`.
    UserPowerCap,
    /// `p_ha > P̄_h`.
    HelperPowerCap,
    /// Helper energy spent computing relayed bits exceeds `E'_h`.
    HelperEnergyBudget,
    /// A power, bit, or slot field is negative.
    NegativeField,
}

fn negative_fields(a: &Allocation) -> bool {
    [a.p_uh, a.p_ua, a.p_ha, a.ell_uh, a.ell_ua, a.ell_ha, a.t_u, a.t_h]
        .iter()
        .any(|&v| v < -REL_TOL * v.abs().max(1e-300) || !v.is_finite())
}

/// Constraint check for the energy-minimization problem. Powers are
/// unbounded there, so no power-cap entries. Boundary equality passes.
pub fn check_feasible_p1(p: &SystemParams, a: &Allocation) -> Vec<Violation> {
    let mut out = Vec::new();
    if negative_fields(a) {
        out.push(Violation::NegativeField);
    }
    let user_local = (p.task.l_u - a.ell_uh - a.ell_ua).max(0.0) * p.task.c_u / p.caps.f_u;
    if exceeds(user_local, p.deadline) {
        out.push(Violation::UserLatency);
    }
    if exceeds(helper_latency(p, a), p.deadline) {
        out.push(Violation::HelperLatency);
    }
    if exceeds(a.t_u + a.t_h, p.deadline) {
        out.push(Violation::TimeBudget);
    }
    if exceeds(a.ell_ua * p.task.c_u + a.ell_ha * p.task.c_h, p.caps.f_cap) {
        out.push(Violation::ApCapacity);
    }
    if exceeds(a.ell_ha, p.task.l_h) {
        out.push(Violation::HelperBitsExceedTask);
    }
    out
}

/// Constraint check for the data-maximization problem: power caps, helper
/// relay-computing energy budget, helper receive latency, slot budget.
pub fn check_feasible_p2(p: &SystemParams, a: &Allocation) -> Vec<Violation> {
    let mut out = Vec::new();
    if negative_fields(a) {
        out.push(Violation::NegativeField);
    }
    if exceeds(a.p_uh + a.p_ua, p.caps.p_bar_u) {
        out.push(Violation::UserPowerCap);
    }
    if exceeds(a.p_ha, p.caps.p_bar_h) {
        out.push(Violation::HelperPowerCap);
    }
    let relay_energy = p.caps.kappa * p.caps.f_h * p.caps.f_h * a.ell_uh;
    if exceeds(relay_energy, p.caps.e_prime_h) {
        out.push(Violation::HelperEnergyBudget);
    }
    if exceeds(a.t_u + a.ell_uh * p.task.c_u / p.caps.f_h, p.deadline) {
        out.push(Violation::HelperLatency);
    }
    if exceeds(a.t_u + a.t_h, p.deadline) {
        out.push(Violation::TimeBudget);
    }
    out
}
