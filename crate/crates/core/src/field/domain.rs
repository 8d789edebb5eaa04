use std::f64::consts::PI;
use std::fmt;

use crate::error::{Error, Result};

/// Analytic domains. Balls, annuli and ellipses are centred at the origin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    Interval { a: f64, b: f64 },
    Ball { radius: f64 },
    Annulus { r1: f64, r2: f64 },
    Rectangle { x0: f64, y0: f64, x1: f64, y1: f64 },
    Ellipse { a: f64, b: f64 },
}

impl DomainSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            DomainSpec::Interval { a, b } => a < b,
            DomainSpec::Ball { radius } => radius > 0.0,
            DomainSpec::Annulus { r1, r2 } => r1 > 0.0 && r1 < r2,
            DomainSpec::Rectangle { x0, y0, x1, y1 } => x0 < x1 && y0 < y1,
            DomainSpec::Ellipse { a, b } => a > 0.0 && b > 0.0,
        };
        let finite = self.params().iter().all(|p| p.is_finite());
        if ok && finite {
            Ok(())
        } else {
            Err(Error::Grid(format!("invalid domain {self}")))
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            DomainSpec::Interval { .. } => "interval",
            DomainSpec::Ball { .. } => "ball",
            DomainSpec::Annulus { .. } => "annulus",
            DomainSpec::Rectangle { .. } => "rectangle",
            DomainSpec::Ellipse { .. } => "ellipse",
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match *self {
            DomainSpec::Interval { a, b } => vec![a, b],
            DomainSpec::Ball { radius } => vec![radius],
            DomainSpec::Annulus { r1, r2 } => vec![r1, r2],
            DomainSpec::Rectangle { x0, y0, x1, y1 } => vec![x0, y0, x1, y1],
            DomainSpec::Ellipse { a, b } => vec![a, b],
        }
    }

    pub fn from_parts(kind: &str, p: &[f64]) -> Result<Self> {
        let d = match (kind, p.len()) {
            ("interval", 2) => DomainSpec::Interval { a: p[0], b: p[1] },
            ("ball", 1) => DomainSpec::Ball { radius: p[0] },
            ("annulus", 2) => DomainSpec::Annulus { r1: p[0], r2: p[1] },
            ("rectangle", 4) => DomainSpec::Rectangle { x0: p[0], y0: p[1], x1: p[2], y1: p[3] },
            ("ellipse", 2) => DomainSpec::Ellipse { a: p[0], b: p[1] },
            _ => return Err(Error::Grid(format!("unknown domain '{kind}' with {} parameters", p.len()))),
        };
        d.validate()?;
        Ok(d)
    }

    pub fn dim(&self) -> usize {
        match self {
            DomainSpec::Interval { .. } => 1,
            _ => 2,
        }
    }

    /// Exact Lebesgue measure.
    pub fn measure(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Ball { radius } => PI * radius * radius,
            DomainSpec::Annulus { r1, r2 } => PI * (r2 * r2 - r1 * r1),
            DomainSpec::Rectangle { x0, y0, x1, y1 } => (x1 - x0) * (y1 - y0),
            DomainSpec::Ellipse { a, b } => PI * a * b,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Ball { radius } => 2.0 * radius,
            DomainSpec::Annulus { r2, .. } => 2.0 * r2,
            DomainSpec::Rectangle { x0, y0, x1, y1 } => (x1 - x0).hypot(y1 - y0),
            DomainSpec::Ellipse { a, b } => 2.0 * a.max(b),
        }
    }

    /// Smallest geometric feature (used for the `h ≤ feature/8` guard).
    pub fn feature_size(&self) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => b - a,
            DomainSpec::Ball { radius } => radius,
            DomainSpec::Annulus { r1, r2 } => (r2 - r1).min(r1),
            DomainSpec::Rectangle { x0, y0, x1, y1 } => (x1 - x0).min(y1 - y0),
            DomainSpec::Ellipse { a, b } => a.min(b),
        }
    }

    /// `[xmin, xmax, ymin, ymax]`; the y-range is `[0, 0]` in 1-D.
    pub fn bounding_box(&self) -> [f64; 4] {
        match *self {
            DomainSpec::Interval { a, b } => [a, b, 0.0, 0.0],
            DomainSpec::Ball { radius } => [-radius, radius, -radius, radius],
            DomainSpec::Annulus { r2, .. } => [-r2, r2, -r2, r2],
            DomainSpec::Rectangle { x0, y0, x1, y1 } => [x0, x1, y0, y1],
            DomainSpec::Ellipse { a, b } => [-a, a, -b, b],
        }
    }

    pub fn is_rotation_invariant(&self) -> bool {
        matches!(self, DomainSpec::Ball { .. } | DomainSpec::Annulus { .. })
    }

    /// Negative inside, positive outside; the true signed distance except for
    /// the ellipse, where a scaled implicit function is used.
    pub fn level(&self, x: f64, y: f64) -> f64 {
        match *self {
            DomainSpec::Interval { a, b } => (a - x).max(x - b),
            DomainSpec::Ball { radius } => x.hypot(y) - radius,
            DomainSpec::Annulus { r1, r2 } => {
                let r = x.hypot(y);
                (r1 - r).max(r - r2)
            }
            DomainSpec::Rectangle { x0, y0, x1, y1 } => (x0 - x).max(x - x1).max(y0 - y).max(y - y1),
            DomainSpec::Ellipse { a, b } => ((x / a).hypot(y / b) - 1.0) * a.min(b),
        }
    }

    /// Distance from `(x, y)` along the unit axis direction `(dx, dy)` to the
    /// first boundary crossing, if it occurs within `max`.
    pub fn ray_hit(&self, x: f64, y: f64, dx: f64, dy: f64, max: f64) -> Option<f64> {
        let mut best = f64::INFINITY;
        let mut consider = |s: f64| {
            if s > 0.0 && s < best {
                best = s;
            }
        };
        // Roots of the quadratic |(x, y) + s(dx, dy)|²_M = 1 with M = diag(1/a², 1/b²).
        let conic = |a: f64, b: f64, out: &mut dyn FnMut(f64)| {
            let qa = dx * dx / (a * a) + dy * dy / (b * b);
            let qb = 2.0 * (x * dx / (a * a) + y * dy / (b * b));
            let qc = x * x / (a * a) + y * y / (b * b) - 1.0;
            let disc = qb * qb - 4.0 * qa * qc;
            if disc >= 0.0 {
                let sq = disc.sqrt();
                // Numerically stable pair of roots.
                let q = -0.5 * (qb + qb.signum() * sq);
                if q != 0.0 {
                    out(q / qa);
                    out(qc / q);
                } else {
                    out(0.0);
                }
            }
        };
        match *self {
            DomainSpec::Interval { a, b } => {
                if dx != 0.0 {
                    consider((a - x) / dx);
                    consider((b - x) / dx);
                }
            }
            DomainSpec::Ball { radius } => conic(radius, radius, &mut consider),
            DomainSpec::Annulus { r1, r2 } => {
                conic(r1, r1, &mut consider);
                conic(r2, r2, &mut consider);
            }
            DomainSpec::Rectangle { x0, y0, x1, y1 } => {
                if dx != 0.0 {
                    consider((x0 - x) / dx);
                    consider((x1 - x) / dx);
                }
                if dy != 0.0 {
                    consider((y0 - y) / dy);
                    consider((y1 - y) / dy);
                }
            }
            DomainSpec::Ellipse { a, b } => conic(a, b, &mut consider),
        }
        (best <= max).then_some(best)
    }
}

impl fmt::Display for DomainSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.kind_name())?;
        for p in self.params() {
            write!(f, " {p:?}")?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_hits() {
        let d = DomainSpec::Ball { radius: 1.0 };
        assert!((d.ray_hit(0.5, 0.0, 1.0, 0.0, 1.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(d.ray_hit(0.0, 0.0, 1.0, 0.0, 0.5).is_none());
        let a = DomainSpec::Annulus { r1: 0.5, r2: 1.5 };
        assert!((a.ray_hit(0.75, 0.0, -1.0, 0.0, 1.0).unwrap() - 0.25).abs() < 1e-15);
        let e = DomainSpec::Ellipse { a: 1.0, b: 0.7 };
        assert!((e.ray_hit(0.0, 0.6, 0.0, 1.0, 1.0).unwrap() - 0.1).abs() < 1e-14);
    }

    #[test]
    fn validation() {
        assert!(DomainSpec::Annulus { r1: 1.0, r2: 0.5 }.validate().is_err());
        assert!(DomainSpec::Ellipse { a: 1.0, b: 0.0 }.validate().is_err());
        assert!(DomainSpec::from_parts("ball", &[1.0]).is_ok());
        assert!(DomainSpec::from_parts("torus", &[1.0]).is_err());
    }
}
