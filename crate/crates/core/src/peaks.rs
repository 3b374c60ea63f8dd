//! Peak detection by topographic prominence.

use serde::{Deserialize, Serialize};

/// Minimum prominence, as a fraction of the global maximum, for a local
/// maximum to count as a peak.
pub const MIN_RELATIVE_PROMINENCE: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    pub index: usize,
    pub position: f64,
    pub height: f64,
    pub prominence: f64,
    /// Full width at half prominence, linearly interpolated.
    pub width: f64,
}

/// Interior local maxima of `y(x)` with prominence at least
/// `rel_prominence * max(y)`, ordered by position.
///
/// Flat tops are reported at their middle sample. Endpoints are never
/// peaks. An empty or flat series yields no peaks.
pub fn find_peaks(x: &[f64], y: &[f64], rel_prominence: f64) -> Vec<Peak> {
    assert_eq!(x.len(), y.len(), "abscissa and ordinate lengths differ");
    let n = y.len();
    if n < 3 {
        return Vec::new();
    }
    let global_max = y.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let global_min = y.iter().copied().fold(f64::INFINITY, f64::min);
    if !(global_max > global_min) {
        return Vec::new();
    }
    let threshold = rel_prominence * global_max.abs();

    let mut peaks = Vec::new();
    let mut i = 1;
    while i < n - 1 {
        if y[i] > y[i - 1] {
            // Walk across a possible plateau.
            let mut j = i;
            while j + 1 < n && y[j + 1] == y[i] {
                j += 1;
            }
            if j + 1 < n && y[j + 1] < y[i] {
                let index = (i + j) / 2;
                let prominence = prominence_at(y, i, j);
                if prominence >= threshold && prominence > 0.0 {
                    peaks.push(Peak {
                        index,
                        position: x[index],
                        height: y[index],
                        prominence,
                        width: width_at(x, y, index, y[index] - 0.5 * prominence),
                    });
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}

/// Prominence of the plateau `y[lo..=hi]`.
fn prominence_at(y: &[f64], lo: usize, hi: usize) -> f64 {
    let h = y[lo];
    let mut left_min = h;
    for k in (0..lo).rev() {
        if y[k] > h {
            break;
        }
        left_min = left_min.min(y[k]);
    }
    let mut right_min = h;
    for &v in &y[hi + 1..] {
        if v > h {
            break;
        }
        right_min = right_min.min(v);
    }
    h - left_min.max(right_min)
}

fn width_at(x: &[f64], y: &[f64], peak: usize, level: f64) -> f64 {
    let mut left = x[0];
    for k in (0..peak).rev() {
        if y[k] <= level {
            left = interpolate(x[k], y[k], x[k + 1], y[k + 1], level);
            break;
        }
    }
    let mut right = x[x.len() - 1];
    for k in peak + 1..y.len() {
        if y[k] <= level {
            right = interpolate(x[k - 1], y[k - 1], x[k], y[k], level);
            break;
        }
    }
    right - left
}

fn interpolate(x0: f64, y0: f64, x1: f64, y1: f64, level: f64) -> f64 {
    if y1 == y0 {
        return x0;
    }
    x0 + (level - y0) * (x1 - x0) / (y1 - y0)
}
