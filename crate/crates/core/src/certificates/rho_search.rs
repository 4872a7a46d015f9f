//! Search for the largest gain with `C2(rho) < 1`.

use serde::{Deserialize, Serialize};

use super::constants::gain_limit;

pub const BISECTION_TOL: f64 = 1e-10;
const SAMPLES: usize = 400;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rho1Search {
    pub rho1: Option<f64>,
    /// `1 / (T^{1/p} M)`.
    pub limit: f64,
    /// `C2 - 1` changed sign at most once over the samples.
    pub single_crossing: bool,
    pub diagnostics: String,
}

/// `c2_fn(rho)` should return `C2` for gains strictly inside `(0, limit)`.
/// Samples a geometric grid, then bisects the first bracket where `C2` reaches 1.
pub fn search_rho1(c2_fn: impl Fn(f64) -> f64, m: f64, horizon: f64, p: f64) -> Rho1Search {
    let raw = gain_limit(m, horizon, p);
    let unbounded = !raw.is_finite();
    // with M = 0 every gain is admissible; probe a wide but finite window
    let limit = if unbounded { 1e12 } else { raw };
    let lo_end = limit * 1e-12;
    let hi_end = limit * (1.0 - 1e-9);
    let ratio = (hi_end / lo_end).powf(1.0 / (SAMPLES - 1) as f64);
    let grid: Vec<f64> = (0..SAMPLES)
        .map(|k| lo_end * ratio.powi(k as i32))
        .collect();
    let values: Vec<f64> = grid.iter().map(|&r| c2_fn(r)).collect();
    let bad = |v: f64| !(v < 1.0);
    let flips = values.windows(2).filter(|w| bad(w[0]) != bad(w[1])).count();
    let single_crossing = flips <= 1;
    let report_limit = raw;
    let Some(first_bad) = values.iter().position(|&v| bad(v)) else {
        let diagnostics = if unbounded {
            "C2 < 1 on every sampled gain and M = 0: no finite upper end".to_string()
        } else {
            "C2 < 1 up to the gain limit".to_string()
        };
        return Rho1Search {
            rho1: Some(hi_end),
            limit: report_limit,
            single_crossing,
            diagnostics,
        };
    };
    if first_bad == 0 {
        return Rho1Search {
            rho1: None,
            limit: report_limit,
            single_crossing,
            diagnostics: format!(
                "C2 >= 1 already at rho = {:e} (C2 = {}); no certified gain",
                grid[0], values[0]
            ),
        };
    }
    let (mut lo, mut hi) = (grid[first_bad - 1], grid[first_bad]);
    // absolute tolerance, tightened for very small gains
    let tol = BISECTION_TOL.min(1e-6 * hi);
    for _ in 0..400 {
        if hi - lo <= tol {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if bad(c2_fn(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Rho1Search {
        rho1: Some(lo),
        limit: report_limit,
        single_crossing,
        diagnostics: format!("bracket [{lo:e}, {hi:e}] after bisection"),
    }
}
