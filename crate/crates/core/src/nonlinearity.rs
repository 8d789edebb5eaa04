//! The reaction term `g` on `[0, |Ω|]` and the hypothesis checks performed on it.

use crate::error::{Error, Result};
use crate::quad::bisect;

/// How `params` are interpreted by [`Nonlinearity::eval`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NonlinearityKind {
    /// `g(s) = a·s + b` with `params = [a, b]`.
    Affine,
    /// `g(s) = c·sign(s−α)·|s−α|^p` with `params = [c, p]` and the shift `α`
    /// taken from the `shift` field.
    Power,
    /// Piecewise-linear interpolation of knots `params = [s0, g0, s1, g1, …]`,
    /// constant beyond the first and last knot.
    Tabulated,
}

impl NonlinearityKind {
    pub fn name(self) -> &'static str {
        match self {
            NonlinearityKind::Affine => "affine",
            NonlinearityKind::Power => "power",
            NonlinearityKind::Tabulated => "tabulated",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "affine" => Some(NonlinearityKind::Affine),
            "power" => Some(NonlinearityKind::Power),
            "tabulated" => Some(NonlinearityKind::Tabulated),
            _ => None,
        }
    }
}

/// Which structural hypothesis `g` satisfies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HypothesisCase {
    /// `g > 0` on `[0, |Ω|]`: no dead core.
    H1,
    /// `g(0) ≤ 0` with a unique sign change at `α`.
    H2,
    Neither,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HypothesisReport {
    pub case: HypothesisCase,
    pub alpha: Option<f64>,
}

/// Samples used for the dense-grid checks.
const CHECK_SAMPLES: usize = 1000;

#[derive(Debug, Clone, PartialEq)]
pub struct Nonlinearity {
    pub kind: NonlinearityKind,
    pub params: Vec<f64>,
    /// Root shift used by [`NonlinearityKind::Power`]; zero otherwise.
    pub shift: f64,
    /// `|Ω|`, the right end of the domain of `g`.
    pub domain_measure: f64,
    /// Root of `g` in `[0, |Ω|)` when the sign change is unique.
    pub alpha: Option<f64>,
    /// Largest difference quotient on the check grid.
    pub lipschitz: f64,
    /// Declared monotonicity; verified by [`check_hypotheses`].
    pub monotone: bool,
}

impl Nonlinearity {
    pub fn new(kind: NonlinearityKind, params: Vec<f64>, shift: f64, domain_measure: f64) -> Result<Self> {
        if !(domain_measure > 0.0 && domain_measure.is_finite()) {
            return Err(Error::Domain(format!("|Ω| must be positive, got {domain_measure}")));
        }
        if params.iter().any(|p| !p.is_finite()) || !shift.is_finite() {
            return Err(Error::Domain("non-finite nonlinearity parameter".into()));
        }
        match kind {
            NonlinearityKind::Affine if params.len() != 2 => {
                return Err(Error::Domain("affine g needs params [slope, offset]".into()))
            }
            NonlinearityKind::Power if params.len() != 2 || params[1] <= 0.0 => {
                return Err(Error::Domain("power g needs params [c, p] with p > 0".into()))
            }
            NonlinearityKind::Tabulated => {
                if params.len() < 4 || !params.len().is_multiple_of(2) {
                    return Err(Error::Domain("tabulated g needs at least two (s, g) knots".into()));
                }
                if params.chunks(2).zip(params.chunks(2).skip(1)).any(|(a, b)| b[0] <= a[0]) {
                    return Err(Error::Domain("tabulated knots must have increasing abscissae".into()));
                }
            }
            _ => {}
        }
        let mut nl = Nonlinearity { kind, params, shift, domain_measure, alpha: None, lipschitz: 0.0, monotone: true };
        let grid = nl.check_grid();
        let vals: Vec<f64> = grid.iter().map(|&s| nl.raw(s)).collect();
        nl.lipschitz = grid
            .windows(2)
            .zip(vals.windows(2))
            .map(|(s, g)| ((g[1] - g[0]) / (s[1] - s[0])).abs())
            .fold(0.0, f64::max);
        nl.monotone = vals.windows(2).all(|w| w[1] >= w[0]);
        nl.alpha = nl.find_roots().ok().flatten();
        Ok(nl)
    }

    /// `g(s) = slope·(s − α)`.
    pub fn affine_with_root(slope: f64, alpha: f64, domain_measure: f64) -> Result<Self> {
        Self::new(NonlinearityKind::Affine, vec![slope, -slope * alpha], 0.0, domain_measure)
    }

    /// `g ≡ c`.
    pub fn constant(c: f64, domain_measure: f64) -> Result<Self> {
        Self::new(NonlinearityKind::Affine, vec![0.0, c], 0.0, domain_measure)
    }

    pub fn tabulated(knots: &[(f64, f64)], domain_measure: f64) -> Result<Self> {
        let params = knots.iter().flat_map(|&(s, g)| [s, g]).collect();
        Self::new(NonlinearityKind::Tabulated, params, 0.0, domain_measure)
    }

    /// Overrides the declared monotonicity flag.
    pub fn with_monotone_flag(mut self, monotone: bool) -> Self {
        self.monotone = monotone;
        self
    }

    fn raw(&self, s: f64) -> f64 {
        let p = &self.params;
        match self.kind {
            NonlinearityKind::Affine => p[0] * s + p[1],
            NonlinearityKind::Power => {
                let d = s - self.shift;
                p[0] * d.signum() * d.abs().powf(p[1])
            }
            NonlinearityKind::Tabulated => {
                let n = p.len() / 2;
                if s <= p[0] {
                    return p[1];
                }
                if s >= p[2 * (n - 1)] {
                    return p[2 * n - 1];
                }
                let mut lo = 0;
                let mut hi = n - 1;
                while hi - lo > 1 {
                    let mid = (lo + hi) / 2;
                    if p[2 * mid] <= s {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let (s0, g0, s1, g1) = (p[2 * lo], p[2 * lo + 1], p[2 * hi], p[2 * hi + 1]);
                g0 + (g1 - g0) * (s - s0) / (s1 - s0)
            }
        }
    }

    /// Evaluates `g`, clamping arguments that stray outside `[0, |Ω|]` by at
    /// most `1e-9·|Ω|`.
    pub fn eval(&self, s: f64) -> Result<f64> {
        self.eval_with_tolerance(s, 1e-9 * self.domain_measure)
    }

    /// Evaluates `g`, clamping arguments outside `[0, |Ω|]` by at most `tol`
    /// (typically one cell volume).
    pub fn eval_with_tolerance(&self, s: f64, tol: f64) -> Result<f64> {
        if !s.is_finite() || s < -tol || s > self.domain_measure + tol {
            return Err(Error::Domain(format!("g evaluated at s = {s}, outside [0, {}]", self.domain_measure)));
        }
        Ok(self.raw(s.clamp(0.0, self.domain_measure)))
    }

    /// Evaluates `g` at a clamped argument; for internal use on measures that
    /// are already known to lie in `[0, |Ω|]` up to rounding.
    pub fn eval_clamped(&self, s: f64) -> f64 {
        self.raw(s.clamp(0.0, self.domain_measure))
    }

    /// `max(g, 0)`, the reaction actually seen by a solution (the dead core
    /// absorbs all measure below `α`).
    pub fn eval_positive_part(&self, s: f64) -> f64 {
        self.eval_clamped(s).max(0.0)
    }

    /// `sup |g|` over the check grid.
    pub fn sup_abs(&self) -> f64 {
        self.check_grid().iter().map(|&s| self.raw(s).abs()).fold(0.0, f64::max)
    }

    fn check_grid(&self) -> Vec<f64> {
        let mut grid: Vec<f64> =
            (0..=CHECK_SAMPLES).map(|i| self.domain_measure * i as f64 / CHECK_SAMPLES as f64).collect();
        if self.kind == NonlinearityKind::Tabulated {
            grid.extend(self.params.chunks(2).map(|c| c[0]).filter(|&s| s > 0.0 && s < self.domain_measure));
            grid.sort_by(f64::total_cmp);
            grid.dedup();
        }
        grid
    }

    /// Locates sign changes of `g` on the check grid. `Ok(Some(α))` for a
    /// unique change from `≤ 0` to `> 0`, `Ok(None)` when `g` never changes
    /// sign, `Err(NonUniqueRoot)` otherwise.
    fn find_roots(&self) -> Result<Option<f64>> {
        let grid = self.check_grid();
        let vals: Vec<f64> = grid.iter().map(|&s| self.raw(s)).collect();
        let mut changes = Vec::new();
        for i in 0..grid.len() - 1 {
            let (a, b) = (vals[i], vals[i + 1]);
            if (a <= 0.0 && b > 0.0) || (a > 0.0 && b <= 0.0) {
                changes.push(i);
            }
        }
        match changes.len() {
            0 => Ok(None),
            1 => {
                let i = changes[0];
                if vals[i] > 0.0 {
                    return Err(Error::NonUniqueRoot(vec![grid[i]]));
                }
                let a = grid[i];
                let b = grid[i + 1];
                // The rightmost point where g ≤ 0: bisection on the predicate.
                let root = if vals[i] == 0.0 {
                    a
                } else {
                    bisect(|s| if self.raw(s) > 0.0 { 1.0 } else { -1.0 }, a, b, 1e-15 * self.domain_measure)
                        .unwrap_or(a)
                };
                // Affine and power roots are known in closed form.
                let root = match self.kind {
                    NonlinearityKind::Affine if self.params[0] != 0.0 => -self.params[1] / self.params[0],
                    NonlinearityKind::Power => self.shift,
                    _ => root,
                };
                Ok(Some(root.clamp(0.0, self.domain_measure)))
            }
            _ => {
                let roots = changes.iter().map(|&i| 0.5 * (grid[i] + grid[i + 1])).collect();
                Err(Error::NonUniqueRoot(roots))
            }
        }
    }
}

/// Classifies `g` as (H1), (H2) or neither.
///
/// Checks the declared monotonicity first, then counts sign changes on a
/// dense grid and refines a unique root by bisection.
pub fn check_hypotheses(nl: &Nonlinearity) -> Result<HypothesisReport> {
    let grid = nl.check_grid();
    let vals: Vec<f64> = grid.iter().map(|&s| nl.raw(s)).collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::Domain("g is not finite on [0, |Ω|]".into()));
    }
    if nl.monotone {
        if let Some(i) = (0..vals.len() - 1).find(|&i| vals[i + 1] < vals[i]) {
            return Err(Error::ContractViolation(format!("g declared monotone but decreases near s = {}", grid[i])));
        }
    }
    let root = nl.find_roots()?;
    let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
    if min > 0.0 {
        return Ok(HypothesisReport { case: HypothesisCase::H1, alpha: None });
    }
    match root {
        Some(alpha) if vals[0] <= 0.0 && alpha < nl.domain_measure => {
            Ok(HypothesisReport { case: HypothesisCase::H2, alpha: Some(alpha) })
        }
        _ => Ok(HypothesisReport { case: HypothesisCase::Neither, alpha: None }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn case_a() -> Nonlinearity {
        Nonlinearity::affine_with_root(1.0, PI / 4.0, PI).unwrap()
    }

    #[test]
    fn affine_values() {
        let g = case_a();
        assert!(g.eval(PI / 4.0).unwrap().abs() < 1e-15);
        assert!((g.eval(PI).unwrap() - 0.75 * PI).abs() < 1e-15);
        assert!((g.lipschitz - 1.0).abs() < 1e-9);
        assert!(g.monotone);
    }

    #[test]
    fn tabulated_interpolates_linearly() {
        let g = Nonlinearity::tabulated(&[(0.0, -1.0), (1.0, 0.0), (2.0, 1.0)], 2.0).unwrap();
        assert!((g.eval(0.5).unwrap() + 0.5).abs() < 1e-15);
        assert_eq!(g.alpha, Some(1.0));
    }

    #[test]
    fn out_of_domain_is_rejected() {
        let g = case_a();
        assert!(matches!(g.eval(-0.1), Err(Error::Domain(_))));
        assert!(matches!(g.eval(PI + 1.0), Err(Error::Domain(_))));
        assert_eq!(g.eval_with_tolerance(-1e-3, 1e-2).unwrap(), -PI / 4.0);
    }

    #[test]
    fn hypothesis_cases() {
        let r = check_hypotheses(&Nonlinearity::constant(1.0, PI).unwrap()).unwrap();
        assert_eq!(r, HypothesisReport { case: HypothesisCase::H1, alpha: None });
        let r = check_hypotheses(&case_a()).unwrap();
        assert_eq!(r.case, HypothesisCase::H2);
        assert!((r.alpha.unwrap() - PI / 4.0).abs() < 1e-14);
        let knots: Vec<(f64, f64)> = (0..=2000)
            .map(|i| {
                let s = PI * i as f64 / 2000.0;
                (s, (4.0 * s).sin() - 0.5)
            })
            .collect();
        let g = Nonlinearity::tabulated(&knots, PI).unwrap().with_monotone_flag(false);
        assert!(matches!(check_hypotheses(&g), Err(Error::NonUniqueRoot(_))));
        let g = Nonlinearity::tabulated(&knots, PI).unwrap().with_monotone_flag(true);
        assert!(matches!(check_hypotheses(&g), Err(Error::ContractViolation(_))));
    }

    #[test]
    fn power_root_is_shift() {
        let g = Nonlinearity::new(NonlinearityKind::Power, vec![2.0, 0.5], 0.3, 1.0).unwrap();
        let r = check_hypotheses(&g).unwrap();
        assert_eq!(r.case, HypothesisCase::H2);
        assert_eq!(r.alpha, Some(0.3));
        assert!((g.eval(0.39).unwrap() - 2.0 * 0.09f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn nonpositive_g_is_neither() {
        let g = Nonlinearity::constant(-1.0, 1.0).unwrap();
        assert_eq!(check_hypotheses(&g).unwrap().case, HypothesisCase::Neither);
    }
}
