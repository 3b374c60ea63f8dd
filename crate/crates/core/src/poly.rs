//! Real roots of polynomials of degree at most three.
//!
//! Roots are located by splitting the real line at the critical points of the
//! polynomial, bracketing a sign change on every monotone piece and refining
//! with safeguarded Newton. A critical point where the polynomial vanishes to
//! within [`TANGENCY_TOL`] (relative to the magnitude of its terms) is
//! reported as a multiple root; this is the discriminant-zero case.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Roots closer than this (relative to `max(1, |root|)`) are merged.
pub const MERGE_TOL: f64 = 1e-8;

/// Relative size of the polynomial at a critical point below which the
/// critical point is treated as a double root.
pub const TANGENCY_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RealRoot {
    pub value: f64,
    pub multiplicity: u8,
}

/// Polynomial with coefficients in descending order, `c[0] x^3 + ... + c[3]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cubic(pub [f64; 4]);

impl Cubic {
    pub fn eval(&self, x: f64) -> f64 {
        let [c3, c2, c1, c0] = self.0;
        ((c3 * x + c2) * x + c1) * x + c0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let [c3, c2, c1, _] = self.0;
        (3.0 * c3 * x + 2.0 * c2) * x + c1
    }

    /// Sum of the absolute values of the individual terms at `x`.
    fn term_scale(&self, x: f64) -> f64 {
        let [c3, c2, c1, c0] = self.0;
        let ax = x.abs();
        ((c3.abs() * ax + c2.abs()) * ax + c1.abs()) * ax + c0.abs()
    }

    fn degree(&self) -> Option<usize> {
        self.0.iter().position(|&c| c != 0.0).map(|i| 3 - i)
    }

    /// All real roots, ascending, with multiplicities.
    pub fn real_roots(&self) -> Result<Vec<RealRoot>> {
        if self.0.iter().any(|c| !c.is_finite()) {
            return Err(Error::DegenerateModel(format!(
                "non-finite polynomial coefficients {:?}",
                self.0
            )));
        }
        let degree = self
            .degree()
            .ok_or_else(|| Error::DegenerateModel("all polynomial coefficients vanish".into()))?;
        let [_, _, c1, c0] = self.0;
        let roots = match degree {
            0 => Vec::new(),
            1 => vec![RealRoot {
                value: -c0 / c1,
                multiplicity: 1,
            }],
            _ => self.roots_by_monotone_pieces(),
        };
        Ok(merge_close(roots))
    }

    /// Critical points (roots of the derivative), ascending.
    fn critical_points(&self) -> Vec<f64> {
        let [c3, c2, c1, _] = self.0;
        let (a, b, c) = (3.0 * c3, 2.0 * c2, c1);
        if a == 0.0 {
            return if b != 0.0 { vec![-c / b] } else { Vec::new() };
        }
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Vec::new();
        }
        if disc == 0.0 {
            return vec![-b / (2.0 * a)];
        }
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        let (mut x1, mut x2) = if q == 0.0 {
            let r = (-c / a).sqrt();
            (-r, r)
        } else {
            (q / a, c / q)
        };
        if x1 > x2 {
            std::mem::swap(&mut x1, &mut x2);
        }
        vec![x1, x2]
    }

    fn is_tangent_at(&self, x: f64) -> bool {
        self.eval(x).abs() <= TANGENCY_TOL * self.term_scale(x)
    }

    fn roots_by_monotone_pieces(&self) -> Vec<RealRoot> {
        let crit = self.critical_points();
        let mut roots = Vec::new();
        let tangent: Vec<bool> = crit.iter().map(|&x| self.is_tangent_at(x)).collect();
        for (&x, &t) in crit.iter().zip(&tangent) {
            if t {
                roots.push(RealRoot {
                    value: x,
                    multiplicity: 2,
                });
            }
        }

        // Monotone pieces: (-inf, x1], [x1, x2], ..., [xn, inf).
        let anchor = crit.first().copied().unwrap_or(0.0);
        let mut edges: Vec<Edge> = Vec::with_capacity(crit.len() + 2);
        edges.push(Edge::MinusInf);
        edges.extend(crit.iter().zip(&tangent).map(|(&x, &t)| Edge::Finite(x, t)));
        edges.push(Edge::PlusInf);

        for pair in edges.windows(2) {
            let bracket = match (pair[0], pair[1]) {
                (Edge::MinusInf, Edge::PlusInf) => {
                    // Monotone on the whole line: walk towards the side whose
                    // limiting sign differs from the sign at the anchor.
                    let dir = if self.eval(anchor).signum() != self.sign_at_infinity(1.0) {
                        1.0
                    } else {
                        -1.0
                    };
                    self.expand(anchor, dir).map(|x| (anchor, x))
                }
                (Edge::MinusInf, Edge::Finite(x, false)) => self.expand(x, -1.0).map(|lo| (lo, x)),
                (Edge::Finite(x, false), Edge::PlusInf) => self.expand(x, 1.0).map(|hi| (x, hi)),
                (Edge::Finite(a, false), Edge::Finite(b, false)) => Some((a, b)),
                _ => None,
            };
            if let Some(r) = bracket.and_then(|(lo, hi)| self.refine(lo, hi)) {
                roots.push(RealRoot {
                    value: r,
                    multiplicity: 1,
                });
            }
        }
        roots.sort_by(|a, b| a.value.total_cmp(&b.value));
        roots
    }

    /// Sign of the polynomial as x -> dir * infinity.
    fn sign_at_infinity(&self, dir: f64) -> f64 {
        let degree = self.degree().unwrap_or(0);
        let lead = self.0[3 - degree];
        if degree % 2 == 1 {
            lead.signum() * dir.signum()
        } else {
            lead.signum()
        }
    }

    /// Walks away from `x0` in direction `dir` until the sign of the
    /// polynomial differs from its sign at `x0`.
    fn expand(&self, x0: f64, dir: f64) -> Option<f64> {
        let s0 = self.eval(x0).signum();
        if s0 == self.sign_at_infinity(dir) {
            return None;
        }
        let mut step = x0.abs().max(1.0);
        for _ in 0..2100 {
            let x = x0 + dir * step;
            let fx = self.eval(x);
            if !fx.is_finite() {
                return None;
            }
            if fx.signum() != s0 {
                return Some(x);
            }
            step *= 2.0;
        }
        None
    }

    /// Safeguarded Newton on a bracket; `None` if there is no sign change.
    fn refine(&self, lo: f64, hi: f64) -> Option<f64> {
        let (mut lo, mut hi) = (lo, hi);
        let (flo, fhi) = (self.eval(lo), self.eval(hi));
        if flo == 0.0 {
            return Some(lo);
        }
        if fhi == 0.0 {
            return Some(hi);
        }
        if flo.signum() == fhi.signum() {
            return None;
        }
        // Orient so that f(lo) < 0.
        if flo > 0.0 {
            std::mem::swap(&mut lo, &mut hi);
        }
        let mut x = 0.5 * (lo + hi);
        let mut dx_old = (hi - lo).abs();
        let mut dx = dx_old;
        for _ in 0..300 {
            let f = self.eval(x);
            if f == 0.0 {
                return Some(x);
            }
            if f < 0.0 {
                lo = x;
            } else {
                hi = x;
            }
            let df = self.derivative(x);
            let newton = x - f / df;
            let in_bracket = (newton - lo) * (newton - hi) < 0.0;
            if df != 0.0 && in_bracket && (2.0 * f).abs() < (dx_old * df).abs() {
                dx_old = dx;
                dx = f / df;
                x = newton;
            } else {
                dx_old = dx;
                dx = 0.5 * (hi - lo);
                x = lo + dx;
            }
            if dx.abs() <= 2.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
                return Some(x);
            }
        }
        Some(x)
    }
}

#[derive(Debug, Clone, Copy)]
enum Edge {
    MinusInf,
    Finite(f64, bool),
    PlusInf,
}

fn merge_close(mut roots: Vec<RealRoot>) -> Vec<RealRoot> {
    roots.sort_by(|a, b| a.value.total_cmp(&b.value));
    let mut out: Vec<RealRoot> = Vec::with_capacity(roots.len());
    for r in roots {
        if let Some(last) = out.last_mut() {
            if (r.value - last.value).abs() <= MERGE_TOL * last.value.abs().max(1.0) {
                // Keep the value of the higher-multiplicity representative.
                if r.multiplicity > last.multiplicity {
                    last.value = r.value;
                }
                last.multiplicity = (last.multiplicity + r.multiplicity).min(3);
                continue;
            }
        }
        out.push(r);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn values(c: [f64; 4]) -> Vec<(f64, u8)> {
        Cubic(c)
            .real_roots()
            .unwrap()
            .into_iter()
            .map(|r| (r.value, r.multiplicity))
            .collect()
    }

    #[test]
    fn three_simple_roots() {
        // (x-1)(x-2)(x-3)
        let r = values([1.0, -6.0, 11.0, -6.0]);
        assert_eq!(r.len(), 3);
        for (got, want) in r.iter().zip([1.0, 2.0, 3.0]) {
            assert!((got.0 - want).abs() < 1e-14);
            assert_eq!(got.1, 1);
        }
    }

    #[test]
    fn one_real_root_with_complex_pair() {
        // (x-2)(x^2+1)
        let r = values([1.0, -2.0, 1.0, -2.0]);
        assert_eq!(r.len(), 1);
        assert!((r[0].0 - 2.0).abs() < 1e-14);
    }

    #[test]
    fn double_root_is_merged() {
        // (x-1)^2 (x+2)
        let r = values([1.0, 0.0, -3.0, 2.0]);
        assert_eq!(r.len(), 2);
        assert!((r[0].0 + 2.0).abs() < 1e-14);
        assert!((r[1].0 - 1.0).abs() < 1e-12);
        assert_eq!(r[1].1, 2);
    }

    #[test]
    fn lower_degrees() {
        assert_eq!(values([0.0, 0.0, 2.0, -4.0]), vec![(2.0, 1)]);
        let q = values([0.0, 1.0, 0.0, -4.0]);
        assert_eq!(q.len(), 2);
        assert!((q[0].0 + 2.0).abs() < 1e-14 && (q[1].0 - 2.0).abs() < 1e-14);
        assert!(values([0.0, 0.0, 0.0, 3.0]).is_empty());
        assert!(matches!(
            Cubic([0.0; 4]).real_roots(),
            Err(Error::DegenerateModel(_))
        ));
    }

    #[test]
    fn tiny_leading_coefficient_keeps_small_roots_accurate() {
        // 1e-12 x^3 + (x - 0.5)(x - 0.25) ~ roots near 0.25, 0.5 and -1e12
        let c = [1e-12, 1.0, -0.75, 0.125];
        let r = values(c);
        assert_eq!(r.len(), 3);
        let cubic = Cubic(c);
        for (x, _) in &r {
            assert!(cubic.eval(*x).abs() <= 1e-12 * cubic.term_scale(*x));
        }
        assert!((r[1].0 - 0.25).abs() < 1e-9);
        assert!((r[2].0 - 0.5).abs() < 1e-9);
    }

    proptest! {
        #[test]
        fn recovers_planted_roots(
            a in -10.0f64..10.0,
            gap1 in 0.01f64..5.0,
            gap2 in 0.01f64..5.0,
            lead in prop_oneof![0.1f64..10.0, -10.0f64..-0.1],
        ) {
            let (r1, r2, r3) = (a, a + gap1, a + gap1 + gap2);
            let c = [
                lead,
                -lead * (r1 + r2 + r3),
                lead * (r1 * r2 + r1 * r3 + r2 * r3),
                -lead * r1 * r2 * r3,
            ];
            let got = values(c);
            prop_assert_eq!(got.len(), 3);
            for (g, w) in got.iter().zip([r1, r2, r3]) {
                prop_assert!((g.0 - w).abs() < 1e-8 * w.abs().max(1.0), "{:?} vs {}", g, w);
            }
        }

        #[test]
        fn roots_are_zeros(c in proptest::array::uniform4(-5.0f64..5.0)) {
            prop_assume!(c[0].abs() > 1e-3);
            let cubic = Cubic(c);
            let roots = cubic.real_roots().unwrap();
            // Odd degree: at least one real root.
            prop_assert!(!roots.is_empty());
            for r in roots {
                prop_assert!(cubic.eval(r.value).abs() <= 1e-9 * cubic.term_scale(r.value).max(1.0));
            }
        }
    }
}
