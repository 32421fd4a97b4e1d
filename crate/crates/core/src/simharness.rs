//! Monte-Carlo instrument: fading channel draws, a registry of named
//! parameter sweeps, and a deterministic runner that aggregates solver and
//! benchmark outputs into CSV.
//!
//! Determinism contract: one master seed fully determines every channel
//! draw. Each (axis point, realization) pair gets its own counter-based RNG
//! stream, draws are aggregated in realization order, and the runner's
//! output is byte-identical regardless of how many worker threads execute
//! it.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{
    noma_data_max, noma_energy_min, tdma_data_max, tdma_energy_min, BaselineReport,
};
use crate::data_max::{solve_p2, P2Report};
use crate::energy_min::{solve_p1, P1Report};
use crate::system_model::{ChannelGains, DeviceCaps, SystemParams, TaskLoad};
use crate::{Error, Result};

/// Distance-based fading model: the gain-to-noise ratio of a link at
/// distance `d` is `path_loss_ref · d^(-exponent) · X / noise_power` with
/// `X` standard-exponential (Rayleigh fading in power).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChannelModel {
    /// Path loss at one meter.
    #[serde(default = "defaults::path_loss_ref")]
    pub path_loss_ref: f64,
    /// Path-loss exponent.
    #[serde(default = "defaults::exponent")]
    pub exponent: f64,
    /// Receiver noise power (W).
    #[serde(default = "defaults::noise_power")]
    pub noise_power: f64,
    /// User → helper distance (m).
    #[serde(default = "defaults::d_uh")]
    pub d_uh: f64,
    /// User → access-point distance (m).
    #[serde(default = "defaults::d_ua")]
    pub d_ua: f64,
    /// Helper → access-point distance (m).
    #[serde(default = "defaults::d_ha")]
    pub d_ha: f64,
}

mod defaults {
    pub fn path_loss_ref() -> f64 {
        1e-3
    }
    pub fn exponent() -> f64 {
        3.0
    }
    pub fn noise_power() -> f64 {
        1e-15
    }
    pub fn d_uh() -> f64 {
        70.0
    }
    pub fn d_ua() -> f64 {
        150.0
    }
    pub fn d_ha() -> f64 {
        80.0
    }
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            path_loss_ref: defaults::path_loss_ref(),
            exponent: defaults::exponent(),
            noise_power: defaults::noise_power(),
            d_uh: defaults::d_uh(),
            d_ua: defaults::d_ua(),
            d_ha: defaults::d_ha(),
        }
    }
}

impl ChannelModel {
    /// Mean gain-to-noise ratio of a link at distance `d`.
    pub fn mean_gain(&self, d: f64) -> f64 {
        self.path_loss_ref * d.powf(-self.exponent) / self.noise_power
    }

    /// One fading draw for all three links, in the fixed order
    /// user→helper, user→AP, helper→AP.
    pub fn draw(&self, rng: &mut ChaCha8Rng) -> ChannelGains {
        let mut fade = || loop {
            let x: f64 = Exp1.sample(rng);
            if x > 0.0 {
                break x;
            }
        };
        ChannelGains {
            h_uh: self.mean_gain(self.d_uh) * fade(),
            h_ua: self.mean_gain(self.d_ua) * fade(),
            h_ha: self.mean_gain(self.d_ha) * fade(),
        }
    }
}

/// Channel draw for one (axis point, realization) cell, reproducible from
/// the master seed alone: the cell index selects a dedicated RNG stream.
pub fn gen_channels(
    model: &ChannelModel,
    master_seed: u64,
    axis_idx: u32,
    realization: u32,
) -> ChannelGains {
    let mut rng = ChaCha8Rng::seed_from_u64(master_seed);
    rng.set_stream(((axis_idx as u64) << 32) | realization as u64);
    model.draw(&mut rng)
}

/// Reference scenario used as the sweep template and for generated test
/// scenarios: 80 Kbit tasks, 5 ms frame, gains at the default distances
/// without fading.
pub fn default_scenario() -> SystemParams {
    let m = ChannelModel::default();
    SystemParams {
        channels: ChannelGains {
            h_uh: m.mean_gain(m.d_uh),
            h_ua: m.mean_gain(m.d_ua),
            h_ha: m.mean_gain(m.d_ha),
        },
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

/// The reference scenario with freshly faded channels.
pub fn random_scenario(seed: u64) -> SystemParams {
    let mut p = default_scenario();
    p.channels = gen_channels(&ChannelModel::default(), seed, 0, 0);
    p
}

// ---------------------------------------------------------------------------
// figure registry
// ---------------------------------------------------------------------------

/// Quantity extracted from one channel realization for one output row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Metric {
    EnergyProposed,
    EnergyTdma,
    EnergyNoma,
    EnergyLocal,
    /// Fraction of the best baseline's energy saved by the proposed
    /// scheme: `(best_baseline - proposed) / best_baseline`.
    EnergyGain,
    /// Relay share of the user's transmit power in the energy solution.
    RelayPowerShare,
    BitsProposed,
    BitsTdma,
    BitsNoma,
    /// Relay power fraction of the throughput solution.
    BetaStar,
    UserBits(Scheme),
    HelperBits(Scheme),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Scheme {
    Proposed,
    Tdma,
    Noma,
}

/// How an axis value is applied to the sweep template.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum AxisKind {
    /// User task size, axis in Kbits.
    UserTaskKbits,
    /// Frame length, axis in milliseconds.
    DeadlineMillis,
    /// User power cap, axis in watts.
    UserPowerCap,
    /// User → helper distance in meters; the helper sits on the line to the
    /// AP, so `d_ha = max(d_ua - d_uh, 1)`.
    HelperDistance,
    /// Helper weight `w_h` with `w_u = 1`.
    HelperWeight,
}

/// A named sweep: axis, row set, and how the axis mutates the scenario.
#[derive(Debug, Clone)]
pub struct FigureSpec {
    pub id: &'static str,
    pub axis_name: &'static str,
    pub axis: &'static [f64],
    rows: &'static [(&'static str, Metric)],
    axis_kind: AxisKind,
}

impl FigureSpec {
    pub fn row_labels(&self) -> Vec<&'static str> {
        self.rows.iter().map(|(l, _)| *l).collect()
    }
}

const ENERGY_ROWS: &[(&str, Metric)] = &[
    ("proposed", Metric::EnergyProposed),
    ("tdma", Metric::EnergyTdma),
    ("noma", Metric::EnergyNoma),
    ("local", Metric::EnergyLocal),
];
const BITS_ROWS: &[(&str, Metric)] = &[
    ("proposed", Metric::BitsProposed),
    ("tdma", Metric::BitsTdma),
    ("noma", Metric::BitsNoma),
];
const GAIN_ROWS: &[(&str, Metric)] = &[("gain", Metric::EnergyGain)];
const BETA_ROWS: &[(&str, Metric)] = &[("beta", Metric::BetaStar)];
const DISTANCE_SPLIT_ROWS: &[(&str, Metric)] = &[
    ("p2-beta", Metric::BetaStar),
    ("p1-relay-share", Metric::RelayPowerShare),
];
const REGION_ROWS: &[(&str, Metric)] = &[
    ("proposed:user", Metric::UserBits(Scheme::Proposed)),
    ("proposed:helper", Metric::HelperBits(Scheme::Proposed)),
    ("tdma:user", Metric::UserBits(Scheme::Tdma)),
    ("tdma:helper", Metric::HelperBits(Scheme::Tdma)),
    ("noma:user", Metric::UserBits(Scheme::Noma)),
    ("noma:helper", Metric::HelperBits(Scheme::Noma)),
];
const WEIGHT_ROWS: &[(&str, Metric)] = &[
    ("p1-proposed", Metric::EnergyProposed),
    ("p1-tdma", Metric::EnergyTdma),
    ("p1-noma", Metric::EnergyNoma),
    ("p2-proposed", Metric::BitsProposed),
    ("p2-tdma", Metric::BitsTdma),
    ("p2-noma", Metric::BitsNoma),
];

static FIGURES: &[FigureSpec] = &[
    FigureSpec {
        id: "energy-vs-Lu",
        axis_name: "L_u_kbits",
        axis: &[10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 70.0, 80.0, 90.0, 100.0],
        rows: ENERGY_ROWS,
        axis_kind: AxisKind::UserTaskKbits,
    },
    FigureSpec {
        id: "gain-vs-Lu",
        axis_name: "L_u_kbits",
        axis: &[80.0, 200.0, 300.0, 400.0, 500.0, 600.0],
        rows: GAIN_ROWS,
        axis_kind: AxisKind::UserTaskKbits,
    },
    FigureSpec {
        id: "energy-vs-T",
        axis_name: "T_ms",
        axis: &[2.0, 3.5, 5.0, 6.5, 8.0],
        rows: ENERGY_ROWS,
        axis_kind: AxisKind::DeadlineMillis,
    },
    FigureSpec {
        id: "data-vs-T",
        axis_name: "T_ms",
        axis: &[2.0, 3.5, 5.0, 6.5, 8.0],
        rows: BITS_ROWS,
        axis_kind: AxisKind::DeadlineMillis,
    },
    FigureSpec {
        id: "data-vs-Pu",
        axis_name: "P_bar_u",
        axis: &[0.05, 0.2, 0.35, 0.5, 0.65, 0.8],
        rows: BITS_ROWS,
        axis_kind: AxisKind::UserPowerCap,
    },
    FigureSpec {
        id: "beta-vs-Pu",
        axis_name: "P_bar_u",
        axis: &[0.05, 0.2, 0.35, 0.5, 0.65, 0.8],
        rows: BETA_ROWS,
        axis_kind: AxisKind::UserPowerCap,
    },
    FigureSpec {
        id: "data-vs-distance",
        axis_name: "d_uh",
        axis: &[10.0, 30.0, 50.0, 70.0, 90.0, 110.0, 130.0, 150.0],
        rows: BITS_ROWS,
        axis_kind: AxisKind::HelperDistance,
    },
    FigureSpec {
        id: "beta-vs-distance",
        axis_name: "d_uh",
        axis: &[10.0, 30.0, 50.0, 70.0, 90.0, 110.0, 130.0, 150.0],
        rows: DISTANCE_SPLIT_ROWS,
        axis_kind: AxisKind::HelperDistance,
    },
    FigureSpec {
        id: "data-region",
        axis_name: "w_h",
        axis: &[0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0],
        rows: REGION_ROWS,
        axis_kind: AxisKind::HelperWeight,
    },
    FigureSpec {
        id: "perf-vs-weight",
        axis_name: "w_h",
        axis: &[0.25, 0.5, 1.0, 2.0, 4.0],
        rows: WEIGHT_ROWS,
        axis_kind: AxisKind::HelperWeight,
    },
];

pub fn figure_registry() -> &'static [FigureSpec] {
    FIGURES
}

pub fn figure_spec(id: &str) -> Option<&'static FigureSpec> {
    FIGURES.iter().find(|f| f.id == id)
}

// ---------------------------------------------------------------------------
// sweep runner
// ---------------------------------------------------------------------------

/// Sweep request, usually read from JSON.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SweepConfig {
    pub figure_id: String,
    /// Channel realizations per axis point.
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Scenario template; the figure's axis and the channel draws override
    /// their respective fields. Defaults to [`default_scenario`].
    #[serde(default)]
    pub template: Option<SystemParams>,
    /// Fading model override.
    #[serde(default)]
    pub channel: Option<ChannelModel>,
}

fn default_realizations() -> usize {
    2000
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig = serde_json::from_str(text)
            .map_err(|e| Error::InvalidConfig(format!("sweep config JSON: {e}")))?;
        Ok(cfg)
    }
}

/// One aggregated output row: a (axis point, scheme) pair.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub axis: f64,
    pub scheme: &'static str,
    pub mean: f64,
    pub stderr: f64,
    /// Realizations contributing to the mean.
    pub n: usize,
    /// Realizations where this row's quantity had no feasible value.
    pub infeasible: usize,
    /// Draws at this axis point where the relay channel was weaker than the
    /// direct one (`h_uh < h_ua`).
    pub order_violations: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub figure_id: String,
    pub axis_name: &'static str,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Fixed-layout CSV; the exact header and row order are part of the
    /// determinism contract.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("axis,scheme,mean,stderr,n,infeasible,order_violations\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{:.12e},{:.12e},{},{},{}\n",
                r.axis, r.scheme, r.mean, r.stderr, r.n, r.infeasible, r.order_violations
            ));
        }
        out
    }
}

fn apply_axis(
    kind: AxisKind,
    axis: f64,
    mut p: SystemParams,
    mut model: ChannelModel,
) -> (SystemParams, ChannelModel) {
    match kind {
        AxisKind::UserTaskKbits => p.task.l_u = axis * 1e3,
        AxisKind::DeadlineMillis => p.deadline = axis * 1e-3,
        AxisKind::UserPowerCap => p.caps.p_bar_u = axis,
        AxisKind::HelperDistance => {
            model.d_uh = axis;
            // Helper between user and AP; clamp to keep a physical distance.
            model.d_ha = (model.d_ua - axis).max(1.0);
        }
        AxisKind::HelperWeight => {
            p.w_u = 1.0;
            p.w_h = axis;
        }
    }
    (p, model)
}

/// Solver outputs one realization can contribute; computed at most once.
struct DrawOutputs {
    p1: Option<P1Report>,
    tdma1: Option<BaselineReport>,
    noma1: Option<BaselineReport>,
    p2: Option<P2Report>,
    tdma2: Option<BaselineReport>,
    noma2: Option<BaselineReport>,
}

fn needs(metrics: &[Metric], pred: impl Fn(&Metric) -> bool) -> bool {
    metrics.iter().any(pred)
}

fn eval_draw(metrics: &[Metric], p: &SystemParams) -> Vec<Option<f64>> {
    use Metric::*;
    let need_p1 = needs(metrics, |m| {
        matches!(m, EnergyProposed | EnergyGain | RelayPowerShare)
    });
    let need_tdma1 = needs(metrics, |m| matches!(m, EnergyTdma | EnergyGain));
    let need_noma1 = needs(metrics, |m| matches!(m, EnergyNoma | EnergyGain));
    let need_p2 = needs(metrics, |m| {
        matches!(
            m,
            BitsProposed | BetaStar | UserBits(Scheme::Proposed) | HelperBits(Scheme::Proposed)
        )
    });
    let need_tdma2 = needs(metrics, |m| {
        matches!(m, BitsTdma | UserBits(Scheme::Tdma) | HelperBits(Scheme::Tdma))
    });
    let need_noma2 = needs(metrics, |m| {
        matches!(m, BitsNoma | UserBits(Scheme::Noma) | HelperBits(Scheme::Noma))
    });

    let out = DrawOutputs {
        p1: if need_p1 { solve_p1(p, 201).ok() } else { None },
        tdma1: if need_tdma1 { tdma_energy_min(p, 201).ok() } else { None },
        noma1: if need_noma1 { noma_energy_min(p).ok() } else { None },
        p2: if need_p2 { solve_p2(p).ok() } else { None },
        tdma2: if need_tdma2 { tdma_data_max(p).ok() } else { None },
        noma2: if need_noma2 { noma_data_max(p).ok() } else { None },
    };

    metrics
        .iter()
        .map(|m| match m {
            EnergyProposed => out.p1.as_ref().map(|r| r.weighted_energy),
            EnergyTdma => out.tdma1.as_ref().map(|r| r.value),
            EnergyNoma => out.noma1.as_ref().map(|r| r.value),
            EnergyLocal => Some(p.norm().all_local_energy()),
            EnergyGain => {
                let proposed = out.p1.as_ref().map(|r| r.weighted_energy)?;
                let base = match (&out.tdma1, &out.noma1) {
                    (Some(a), Some(b)) => a.value.min(b.value),
                    (Some(a), None) => a.value,
                    (None, Some(b)) => b.value,
                    (None, None) => return None,
                };
                if base > 0.0 {
                    Some((base - proposed) / base)
                } else {
                    None
                }
            }
            RelayPowerShare => out.p1.as_ref().map(|r| {
                let total = r.allocation.p_uh + r.allocation.p_ua;
                if total > 0.0 {
                    r.allocation.p_uh / total
                } else {
                    0.0
                }
            }),
            BitsProposed => out.p2.as_ref().map(|r| r.weighted_bits),
            BitsTdma => out.tdma2.as_ref().map(|r| r.value),
            BitsNoma => out.noma2.as_ref().map(|r| r.value),
            BetaStar => out.p2.as_ref().map(|r| r.beta_star),
            UserBits(s) => {
                let a = match s {
                    Scheme::Proposed => out.p2.as_ref().map(|r| &r.allocation),
                    Scheme::Tdma => out.tdma2.as_ref().map(|r| &r.allocation),
                    Scheme::Noma => out.noma2.as_ref().map(|r| &r.allocation),
                };
                a.map(|a| a.ell_uh + a.ell_ua)
            }
            HelperBits(s) => {
                let a = match s {
                    Scheme::Proposed => out.p2.as_ref().map(|r| &r.allocation),
                    Scheme::Tdma => out.tdma2.as_ref().map(|r| &r.allocation),
                    Scheme::Noma => out.noma2.as_ref().map(|r| &r.allocation),
                };
                a.map(|a| a.ell_ha)
            }
        })
        .collect()
}

fn mean_stderr(vals: &[f64]) -> (f64, f64) {
    let n = vals.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = vals.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Run one registered sweep. Realizations are evaluated in parallel but
/// aggregated in index order, so the result is independent of thread count.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    let spec = figure_spec(&cfg.figure_id).ok_or_else(|| {
        Error::InvalidConfig(format!(
            "unknown figure id {:?}; known: {}",
            cfg.figure_id,
            FIGURES.iter().map(|f| f.id).collect::<Vec<_>>().join(", ")
        ))
    })?;
    if cfg.realizations == 0 {
        return Err(Error::InvalidConfig("realizations must be at least 1".into()));
    }
    let template = cfg.template.unwrap_or_else(default_scenario);
    template.validate()?;
    let base_model = cfg.channel.clone().unwrap_or_default();
    let metrics: Vec<Metric> = spec.rows.iter().map(|(_, m)| *m).collect();

    let mut rows = Vec::with_capacity(spec.axis.len() * spec.rows.len());
    for (ai, &axis) in spec.axis.iter().enumerate() {
        let (p_axis, model) = apply_axis(spec.axis_kind, axis, template, base_model.clone());
        let draws: Vec<ChannelGains> = (0..cfg.realizations)
            .map(|j| gen_channels(&model, cfg.seed, ai as u32, j as u32))
            .collect();
        let order_violations = draws.iter().filter(|g| g.h_uh < g.h_ua).count();
        let per_draw: Vec<Vec<Option<f64>>> = draws
            .par_iter()
            .map(|g| {
                let mut p = p_axis;
                p.channels = *g;
                eval_draw(&metrics, &p)
            })
            .collect();
        for (ri, (label, _)) in spec.rows.iter().enumerate() {
            let vals: Vec<f64> = per_draw.iter().filter_map(|v| v[ri]).collect();
            let (mean, stderr) = mean_stderr(&vals);
            rows.push(SweepRow {
                axis,
                scheme: label,
                mean,
                stderr,
                n: vals.len(),
                infeasible: cfg.realizations - vals.len(),
                order_violations,
            });
        }
    }
    Ok(SweepResult { figure_id: spec.id.to_string(), axis_name: spec.axis_name, rows })
}
