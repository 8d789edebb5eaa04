//! Affine exponent recursions `t ↦ a·t + b` (optionally capped) appearing in
//! the bootstrap arguments for the supersolution and detachment exponents.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecursionSpec {
    pub a: f64,
    pub b: f64,
    pub start: f64,
    /// Ceiling applied after every step: `t ← min(a·t + b, cap)`.
    pub cap: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecursionResult {
    pub limit: f64,
    pub iterations: usize,
    pub trace: Vec<f64>,
}

const MAX_STEPS: usize = 10_000;
const DIVERGENCE: f64 = 1e9;

impl RecursionSpec {
    pub fn new(a: f64, b: f64, start: f64) -> Self {
        RecursionSpec { a, b, start, cap: None }
    }

    pub fn with_cap(mut self, cap: f64) -> Self {
        self.cap = Some(cap);
        self
    }

    /// `γ_k = 1 + γ_{k−1}/6` from `7/6`; the supersolution exponent is `γ − 1`.
    pub fn supersolution() -> Self {
        Self::new(1.0 / 6.0, 1.0, 7.0 / 6.0)
    }

    /// `β_k = (β_{k−1} + 2)/3` from `0`.
    pub fn annulus() -> Self {
        Self::new(1.0 / 3.0, 2.0 / 3.0, 0.0)
    }

    /// `b_k = b_{k−1}/2 + 2/3` from `1/5`.
    pub fn equivalence() -> Self {
        Self::new(0.5, 2.0 / 3.0, 0.2)
    }

    /// `γ_k = min(3γ_{k−1}/2 − 2/3, 1/3)` from the suboptimal exponent `1/5`,
    /// taken literally. The uncapped map has the repelling fixed point `4/3`
    /// and decreases from any start below it; the cap sits below `4/3`, so the
    /// iteration diverges from every start.
    pub fn gradient_condition() -> Self {
        Self::new(1.5, -2.0 / 3.0, 0.2).with_cap(1.0 / 3.0)
    }

    fn step(&self, t: f64) -> f64 {
        let next = self.a * t + self.b;
        match self.cap {
            Some(c) => next.min(c),
            None => next,
        }
    }
}

/// Iterates until the contraction bound on the distance to the fixed point
/// drops below `1e-15·max(1, |t|)` or the map returns the same float. A
/// contraction with `|a| ≤ 0.9` then sits within `1e-12` of `b/(1−a)`.
pub fn recursion_fixed_point(r: &RecursionSpec) -> Result<RecursionResult> {
    if !(r.a.abs() < 1.0) && r.cap.is_none() {
        return Err(Error::Domain(format!("|a| = {} is not a contraction and no cap is set", r.a.abs())));
    }
    let mut trace = vec![r.start];
    let mut t = r.start;
    for k in 1..=MAX_STEPS {
        let next = r.step(t);
        if !next.is_finite() || next.abs() > DIVERGENCE {
            return Err(Error::Divergence { iterations: k, last: next });
        }
        trace.push(next);
        // For a contraction the distance to the fixed point is at most
        // |a|/(1−|a|) times the last step.
        let factor = if r.a.abs() < 1.0 { r.a.abs() / (1.0 - r.a.abs()) } else { 1.0 };
        if next == t || factor.max(1.0) * (next - t).abs() <= 1e-15 * next.abs().max(1.0) {
            return Ok(RecursionResult { limit: next, iterations: k, trace });
        }
        t = next;
    }
    if r.a.abs() < 1.0 {
        return Ok(RecursionResult { limit: t, iterations: MAX_STEPS, trace });
    }
    Err(Error::Divergence { iterations: MAX_STEPS, last: t })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_recursions() {
        let r = recursion_fixed_point(&RecursionSpec::supersolution()).unwrap();
        assert!((r.limit - 1.2).abs() < 1e-12);
        let r = recursion_fixed_point(&RecursionSpec::annulus()).unwrap();
        assert!((r.limit - 1.0).abs() < 1e-12);
        let r = recursion_fixed_point(&RecursionSpec::equivalence()).unwrap();
        assert!((r.limit - 4.0 / 3.0).abs() < 1e-12);
        assert!(r.iterations <= MAX_STEPS);
    }

    #[test]
    fn capped_expanding_map_reaches_cap() {
        let r = recursion_fixed_point(&RecursionSpec::new(1.5, -2.0 / 3.0, 1.0).with_cap(1.0 / 3.0)).unwrap_err();
        assert!(matches!(r, Error::Divergence { .. }));
        let r = recursion_fixed_point(&RecursionSpec::new(1.5, 0.1, 1.0).with_cap(2.0)).unwrap();
        assert_eq!(r.limit, 2.0);
    }

    #[test]
    fn expanding_map_diverges() {
        let r = recursion_fixed_point(&RecursionSpec::new(2.0, 1.0, 1.0).with_cap(f64::INFINITY));
        assert!(matches!(r, Err(Error::Divergence { .. })));
    }
}
