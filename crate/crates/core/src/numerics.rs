//! Small numerical kernels used by the solvers: scalar bisection, a deep-cut
//! ellipsoid method for low-dimensional concave duals, exhaustive grid
//! search, and two-block coordinate descent.
//!
//! Everything here is deterministic: no internal randomness, no
//! parallelism-dependent reduction order.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// How [`bisect`] treats a bracket without a sign change.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BracketMode {
    /// Require `f(lo)` and `f(hi)` to differ in sign; error otherwise.
    Strict,
    /// Monotone convention: when both endpoints share a sign, return the
    /// endpoint closer to a root (smaller `|f|`).
    Monotone,
}

/// Root of a continuous scalar function on `[lo, hi]` by bisection.
///
/// Stops when the bracket width drops below `tol`; the iteration count is
/// at most `ceil(log2((hi - lo) / tol))`.
pub fn bisect(
    f: impl Fn(f64) -> f64,
    lo: f64,
    hi: f64,
    tol: f64,
    mode: BracketMode,
) -> Result<f64> {
    assert!(lo <= hi && tol > 0.0, "bad bracket or tolerance");
    let f_lo = f(lo);
    let f_hi = f(hi);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return match mode {
            BracketMode::Strict => Err(Error::NoBracket { lo, hi }),
            BracketMode::Monotone => Ok(if f_lo.abs() <= f_hi.abs() { lo } else { hi }),
        };
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut f_lo = f_lo;
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break; // bracket at floating-point resolution
        }
        let f_mid = f(mid);
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Exhaustive minimum of `f` over `K` uniformly spaced points on `[lo, hi]`
/// (endpoints included). Ties resolve to the smallest abscissa. Points where
/// `f` returns non-finite values are skipped.
pub fn grid_min(f: impl Fn(f64) -> f64, lo: f64, hi: f64, k: usize) -> (f64, f64) {
    assert!(k >= 2 && hi >= lo, "need at least two grid points");
    let mut best = (f64::NAN, f64::INFINITY);
    for i in 0..k {
        let x = lo + (hi - lo) * i as f64 / (k - 1) as f64;
        let v = f(x);
        if v.is_finite() && v < best.1 {
            best = (x, v);
        }
    }
    best
}

/// Convergence summary shared by the iterative kernels.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub iterations: usize,
    /// Ellipsoid: remaining volume ratio. Coordinate descent: last objective
    /// improvement. At or below the configured tolerance when `converged`.
    pub final_gap: f64,
    pub converged: bool,
}

/// Configuration for [`ellipsoid_max`].
#[derive(Debug, Clone, Copy)]
pub struct EllipsoidConfig {
    pub initial_center: [f64; 3],
    /// Radius of the initial ball around `initial_center`.
    pub initial_radius: f64,
    /// Stop once the volume has shrunk to this fraction of the initial one.
    pub tol: f64,
    pub max_iters: usize,
}

/// Maximize a concave function over the non-negative orthant of R³ by the
/// ellipsoid method.
///
/// `g` returns the objective value and a supergradient at the query point;
/// it is only called at non-negative points. Negative coordinates at the
/// ellipsoid center are handled with deep feasibility cuts; feasible centers
/// produce central objective cuts from the supergradient. The best feasible
/// iterate is returned, not the last center.
pub fn ellipsoid_max(
    mut g: impl FnMut(&[f64; 3]) -> (f64, [f64; 3]),
    cfg: &EllipsoidConfig,
) -> (f64, [f64; 3], ConvergenceReport) {
    let r2 = cfg.initial_radius * cfg.initial_radius;
    let mut c = cfg.initial_center;
    let mut p = [[r2, 0.0, 0.0], [0.0, r2, 0.0], [0.0, 0.0, r2]];
    // Volume ratio tracked through log det P; each cut scales det P by
    // delta^3 (1 - sigma).
    let mut log_vol_ratio = 0.0f64;
    let mut best_val = f64::NEG_INFINITY;
    let mut best_x = [0.0; 3];
    let mut iters = 0;
    let mut converged = false;

    for it in 0..cfg.max_iters {
        iters = it + 1;
        // Cut selection: feasibility first, then objective.
        let (a, depth) = match (0..3).find(|&i| c[i] < 0.0) {
            Some(i) => {
                let mut a = [0.0; 3];
                a[i] = -1.0;
                (a, -c[i]) // keep {x_i >= 0}; center violates by c[i]
            }
            None => {
                let x = [c[0].max(0.0), c[1].max(0.0), c[2].max(0.0)];
                let (val, grad) = g(&x);
                if val > best_val {
                    best_val = val;
                    best_x = x;
                }
                // Maximizer satisfies grad . (x - c) >= 0.
                ([-grad[0], -grad[1], -grad[2]], 0.0)
            }
        };

        let pa = mat_vec(&p, &a);
        let s = dot(&a, &pa);
        if s <= 0.0 || !s.is_finite() {
            converged = true; // ellipsoid degenerate along the cut direction
            break;
        }
        let sn = s.sqrt();
        let alpha = depth / sn;
        if alpha >= 1.0 {
            converged = true; // feasible set has empty intersection: done
            break;
        }
        // Zero-gradient objective cut: current center is optimal.
        if depth == 0.0 && a == [0.0, 0.0, 0.0] {
            converged = true;
            break;
        }

        let n = 3.0;
        let tau = (1.0 + n * alpha) / (n + 1.0);
        let delta = (n * n / (n * n - 1.0)) * (1.0 - alpha * alpha);
        let sigma = 2.0 * (1.0 + n * alpha) / ((n + 1.0) * (1.0 + alpha));
        for i in 0..3 {
            c[i] -= tau * pa[i] / sn;
        }
        for i in 0..3 {
            for j in 0..3 {
                p[i][j] = delta * (p[i][j] - sigma * pa[i] * pa[j] / s);
            }
        }
        log_vol_ratio += 0.5 * (3.0 * delta.ln() + (1.0 - sigma).ln());
        if log_vol_ratio <= cfg.tol.ln() {
            converged = true;
            break;
        }
    }

    if best_val == f64::NEG_INFINITY {
        // Never saw a feasible center; evaluate the projected final center.
        let x = [c[0].max(0.0), c[1].max(0.0), c[2].max(0.0)];
        let (val, _) = g(&x);
        best_val = val;
        best_x = x;
    }
    let report = ConvergenceReport {
        iterations: iters,
        final_gap: log_vol_ratio.exp(),
        converged,
    };
    (best_val, best_x, report)
}

fn mat_vec(m: &[[f64; 3]; 3], v: &[f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Two-block coordinate descent with exact block updates.
///
/// `update_a` minimizes the objective over the first block with the second
/// fixed; `update_b` the reverse. The objective sequence is non-increasing
/// when the updates are exact minimizers. Stops when one round improves the
/// objective by less than `tol`.
pub fn bcd2<A: Clone, B: Clone>(
    mut a: A,
    mut b: B,
    update_a: impl Fn(&B) -> A,
    update_b: impl Fn(&A) -> B,
    objective: impl Fn(&A, &B) -> f64,
    tol: f64,
    max_iters: usize,
) -> (A, B, ConvergenceReport) {
    let mut value = objective(&a, &b);
    let mut iters = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;
    for it in 0..max_iters {
        iters = it + 1;
        a = update_a(&b);
        b = update_b(&a);
        let next = objective(&a, &b);
        gap = value - next;
        value = next;
        if gap.abs() < tol {
            converged = true;
            break;
        }
    }
    (a, b, ConvergenceReport { iterations: iters, final_gap: gap, converged })
}
