//! Transmitted power versus input power, with stability labels and knees.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::{drift_matrix, stability, Stability};
use crate::params::SystemParams;
use crate::steady::{solve_transmitted_power, steady_state_from_ptrans};

/// Relative width below which knee bisection stops.
pub const KNEE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchRoot {
    pub p_trans: f64,
    pub multiplicity: u8,
    pub stability: Stability,
    pub max_real_part: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub input_power: f64,
    /// Ascending in `p_trans`.
    pub roots: Vec<BranchRoot>,
}

/// Input power at which the number of steady states changes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Knee {
    pub input_power: f64,
    pub roots_below: usize,
    pub roots_above: usize,
}

impl Knee {
    /// True where extra branches appear with growing input.
    pub fn opens(&self) -> bool {
        self.roots_above > self.roots_below
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BistabilityCurve {
    pub rocking: f64,
    pub points: Vec<CurvePoint>,
    pub knees: Vec<Knee>,
}

impl BistabilityCurve {
    /// `(opening, closing)` input powers of the first multi-root window.
    pub fn window(&self) -> Option<(f64, f64)> {
        let open = self.knees.iter().find(|k| k.opens())?;
        let close = self
            .knees
            .iter()
            .find(|k| !k.opens() && k.input_power > open.input_power)?;
        Some((open.input_power, close.input_power))
    }

    /// Branch index of each root at grid point `i`: roots inside a
    /// multi-root region count from 0 upwards; a lone root is lower (0)
    /// before the window and upper (2) after it.
    pub fn branch_indices(&self, i: usize) -> Vec<usize> {
        let point = &self.points[i];
        if point.roots.len() != 1 {
            return (0..point.roots.len()).collect();
        }
        match self.window() {
            Some((_, close)) if point.input_power > close => vec![2],
            _ => vec![0],
        }
    }

    pub fn is_bistable(&self) -> bool {
        self.points.iter().any(|p| p.roots.len() == 3)
    }
}

fn root_count(params: &SystemParams, input_power: f64, rocking: f64) -> Result<usize> {
    Ok(solve_transmitted_power(params, input_power.sqrt(), rocking)?.len())
}

fn evaluate_point(params: &SystemParams, input_power: f64, rocking: f64) -> Result<CurvePoint> {
    let eta0 = input_power.sqrt();
    let roots = solve_transmitted_power(params, eta0, rocking)?
        .into_iter()
        .map(|r| {
            let steady = steady_state_from_ptrans(params, eta0, rocking, r.value)?;
            let report = stability(&drift_matrix(params, &steady));
            Ok(BranchRoot {
                p_trans: r.value,
                multiplicity: r.multiplicity,
                stability: report.verdict,
                max_real_part: report.max_real_part,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(CurvePoint { input_power, roots })
}

/// Bisects on the root count between two grid points whose counts differ.
fn refine_knee(
    params: &SystemParams,
    rocking: f64,
    mut lo: f64,
    mut hi: f64,
    below: usize,
    above: usize,
) -> Result<Knee> {
    while hi - lo > KNEE_TOL * hi.abs().max(1.0) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if root_count(params, mid, rocking)? == below {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Knee {
        input_power: 0.5 * (lo + hi),
        roots_below: below,
        roots_above: above,
    })
}

/// Samples the steady-state curve over `input_grid` (values of eta0^2).
pub fn bistability_curve(
    params: &SystemParams,
    input_grid: &[f64],
    rocking: f64,
) -> Result<BistabilityCurve> {
    if input_grid.len() < 2 {
        return Err(Error::DegenerateGrid(format!(
            "input grid needs at least 2 points, got {}",
            input_grid.len()
        )));
    }
    if input_grid.iter().any(|v| !v.is_finite() || *v < 0.0)
        || input_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(Error::DegenerateGrid(
            "input grid must be finite, non-negative and strictly ascending".into(),
        ));
    }
    params.validate()?;

    let points = input_grid
        .par_iter()
        .map(|&x| evaluate_point(params, x, rocking))
        .collect::<Result<Vec<_>>>()?;

    let mut knees = Vec::new();
    for w in points.windows(2) {
        let (below, above) = (w[0].roots.len(), w[1].roots.len());
        // A tangent root sampled exactly on the grid counts as a knee of its own.
        if below != above && below != 2 && above != 2 {
            knees.push(refine_knee(params, rocking, w[0].input_power, w[1].input_power, below, above)?);
        } else if below == 2 && above != 2 {
            knees.push(Knee {
                input_power: w[0].input_power,
                roots_below: if above == 3 { 1 } else { 3 },
                roots_above: above,
            });
        }
    }
    Ok(BistabilityCurve {
        rocking,
        points,
        knees,
    })
}
