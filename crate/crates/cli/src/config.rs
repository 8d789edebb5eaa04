//! Flat INI-style experiment configuration.
//!
//! ```text
//! # comment
//! [solver]
//! h = 1/256
//! damping = 0.5
//! g.kind = affine        # dotted keys work outside sections too
//! ```
//!
//! Numbers accept products and quotients of literals and `pi`, e.g.
//! `pi/4` or `1/256`. Lists are comma separated.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use gmlab_core::analysis::AnalysisConfig;
use gmlab_core::field::DomainSpec;
use gmlab_core::nonlinearity::{Nonlinearity, NonlinearityKind};
use gmlab_core::profile::Profile;
use gmlab_core::solver::{Init, SolverConfig};

/// Where a value came from, for error messages.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Origin {
    pub source: String,
    pub line: usize,
    pub column: usize,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}:{}", self.source, self.line, self.column)
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{origin}: {message}")]
pub struct ConfigError {
    pub origin: Origin,
    pub message: String,
}

impl ConfigError {
    fn at(origin: &Origin, message: impl Into<String>) -> Self {
        ConfigError { origin: origin.clone(), message: message.into() }
    }

    /// An error not tied to a particular line.
    pub fn general(source: &str, message: impl Into<String>) -> Self {
        ConfigError { origin: Origin { source: source.into(), line: 0, column: 0 }, message: message.into() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub value: String,
    pub origin: Origin,
}

/// Every accepted key with a short description.
pub const KEYS: &[(&str, &str)] = &[
    ("domain.kind", "interval | ball | annulus | rectangle | ellipse"),
    ("domain.params", "geometry: [a, b] | [R] | [R1, R2] | [x0, y0, x1, y1] | [a, b]"),
    ("g.kind", "affine | power | tabulated | constant"),
    (
        "g.params",
        "affine [slope, offset] or [slope] with g.alpha; power [c, p]; tabulated [s0, g0, s1, g1, …]; constant [c]",
    ),
    ("g.alpha", "root of g (affine with one parameter, shift of power)"),
    ("solver.h", "grid spacing"),
    ("solver.tol_outer", "outer tolerance"),
    ("solver.tol_inner", "inner tolerance"),
    ("solver.cg_tol", "relative CG tolerance"),
    ("solver.max_outer", "outer iteration cap"),
    ("solver.max_inner", "inner iteration cap"),
    ("solver.max_cg", "CG iteration cap"),
    ("solver.damping", "damping θ in (0, 1]"),
    ("solver.init", "zero | poisson_g0 | file:PATH"),
    ("analysis.c_eps", "ε-rule constant"),
    ("analysis.s", "refined gradient exponent in (0, 1)"),
    ("analysis.gamma", "Alt-Phillips exponent in (1, 2)"),
    ("analysis.band_lo_cells", "detachment band start in cells"),
    ("analysis.band_hi_fraction", "detachment band end as a fraction of the diameter"),
    ("analysis.min_band_nodes", "minimum nodes in the detachment band"),
    ("analysis.near_fb_fraction", "near free boundary window as a fraction of max v"),
    ("analysis.k_max", "number of perimeter levels"),
    ("analysis.q_list", "supersolution exponents"),
    ("analysis.integrability_p", "integrability exponents"),
    ("profile.kind", "power | table | empirical"),
    ("profile.c", "coefficient of the power profile"),
    ("profile.p", "exponent of the power profile"),
    ("profile.t_max", "largest argument of the profile"),
    ("profile.t", "table abscissae"),
    ("profile.f", "table values"),
    ("radial.n", "space dimension"),
    ("radial.nodes", "quadrature nodes"),
    ("annulus.n", "space dimension"),
    ("annulus.nodes", "radial nodes"),
    ("annulus.tol", "fixed point tolerance"),
    ("annulus.max_iter", "fixed point iteration cap"),
    ("barriers.r", "inner radius"),
    ("barriers.n", "space dimension"),
    ("barriers.scale", "barrier normalization m with U(κ) = m"),
    ("barriers.nodes", "radial nodes"),
    ("input.field", "GMF1 field analyzed instead of a fresh solve"),
    ("output.dir", "output directory"),
];

/// Raw key/value pairs in a fixed (sorted) order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawConfig {
    pub entries: BTreeMap<String, Entry>,
}

fn known(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

fn is_ident(s: &str) -> bool {
    !s.is_empty() && s.split('.').all(|p| !p.is_empty() && p.chars().all(|c| c.is_ascii_alphanumeric() || c == '_'))
}

impl RawConfig {
    pub fn parse(text: &str, source: &str) -> Result<Self, ConfigError> {
        let mut raw = RawConfig::default();
        let mut section: Option<String> = None;
        for (i, line) in text.lines().enumerate() {
            let line_no = i + 1;
            let body = match line.find(['#', ';']) {
                Some(p) => &line[..p],
                None => line,
            };
            let indent = body.len() - body.trim_start().len();
            let trimmed = body.trim();
            if trimmed.is_empty() {
                continue;
            }
            let origin = |col: usize| Origin { source: source.into(), line: line_no, column: col + 1 };
            if let Some(rest) = trimmed.strip_prefix('[') {
                let Some(name) = rest.strip_suffix(']') else {
                    return Err(ConfigError::at(
                        &origin(indent + trimmed.len()),
                        "expected ']' to close the section header",
                    ));
                };
                let name = name.trim();
                if !is_ident(name) {
                    return Err(ConfigError::at(&origin(indent + 1), format!("invalid section name '{name}'")));
                }
                section = Some(name.to_string());
                continue;
            }
            let Some(eq) = trimmed.find('=') else {
                return Err(ConfigError::at(&origin(indent + trimmed.len()), "expected 'key = value'"));
            };
            let key = trimmed[..eq].trim();
            if !is_ident(key) {
                return Err(ConfigError::at(&origin(indent), format!("invalid key '{key}'")));
            }
            let value = trimmed[eq + 1..].trim();
            let value_col = indent + eq + 1 + (trimmed[eq + 1..].len() - trimmed[eq + 1..].trim_start().len());
            let full = match &section {
                Some(s) => format!("{s}.{key}"),
                None => key.to_string(),
            };
            raw.insert(full, value, origin(indent), origin(value_col), false)?;
        }
        Ok(raw)
    }

    fn insert(
        &mut self,
        key: String,
        value: &str,
        key_origin: Origin,
        value_origin: Origin,
        replace: bool,
    ) -> Result<(), ConfigError> {
        if !known(&key) {
            return Err(ConfigError::at(&key_origin, format!("unknown key '{key}'")));
        }
        if let Some(prev) = self.entries.get(&key) {
            if !replace && prev.origin.source == value_origin.source {
                return Err(ConfigError::at(
                    &key_origin,
                    format!("duplicate key '{key}' (first set at {})", prev.origin),
                ));
            }
        }
        self.entries.insert(key, Entry { value: value.to_string(), origin: value_origin });
        Ok(())
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let source = path.display().to_string();
        let text =
            std::fs::read_to_string(path).map_err(|e| ConfigError::general(&source, format!("cannot read: {e}")))?;
        Self::parse(&text, &source)
    }

    /// Applies `key=value` overrides; later ones win.
    pub fn apply_overrides(&mut self, overrides: &[String]) -> Result<(), ConfigError> {
        for (i, o) in overrides.iter().enumerate() {
            let origin = |col: usize| Origin { source: "--set".into(), line: i + 1, column: col + 1 };
            let Some(eq) = o.find('=') else {
                return Err(ConfigError::at(&origin(o.len()), format!("override '{o}' is not key=value")));
            };
            let key = o[..eq].trim();
            if !is_ident(key) {
                return Err(ConfigError::at(&origin(0), format!("invalid key '{key}'")));
            }
            let lead = o[eq + 1..].len() - o[eq + 1..].trim_start().len();
            self.insert(key.to_string(), o[eq + 1..].trim(), origin(0), origin(eq + 1 + lead), true)?;
        }
        Ok(())
    }

    /// Entries of `other` replace those here.
    pub fn merge(&mut self, other: RawConfig) {
        self.entries.extend(other.entries);
    }

    pub fn has_section(&self, section: &str) -> bool {
        let prefix = format!("{section}.");
        self.entries.keys().any(|k| k.starts_with(&prefix))
    }

    fn get(&self, key: &str) -> Option<&Entry> {
        self.entries.get(key)
    }

    fn num(&self, key: &str) -> Result<Option<f64>, ConfigError> {
        self.get(key)
            .map(|e| parse_number(&e.value).map_err(|m| ConfigError::at(&e.origin, format!("{key}: {m}"))))
            .transpose()
    }

    fn count(&self, key: &str) -> Result<Option<usize>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => e.value.parse::<usize>().map(Some).map_err(|_| {
                ConfigError::at(&e.origin, format!("{key}: expected a non-negative integer, got '{}'", e.value))
            }),
        }
    }

    fn list(&self, key: &str) -> Result<Option<Vec<f64>>, ConfigError> {
        match self.get(key) {
            None => Ok(None),
            Some(e) => {
                let mut out = Vec::new();
                let mut col = 0;
                for item in e.value.split(',') {
                    let lead = item.len() - item.trim_start().len();
                    let at = Origin { column: e.origin.column + col + lead, ..e.origin.clone() };
                    out.push(parse_number(item.trim()).map_err(|m| ConfigError::at(&at, format!("{key}: {m}")))?);
                    col += item.len() + 1;
                }
                Ok(Some(out))
            }
        }
    }

    fn text(&self, key: &str) -> Option<&str> {
        self.get(key).map(|e| e.value.as_str())
    }

    fn origin_of(&self, key: &str) -> Origin {
        self.get(key).map(|e| e.origin.clone()).unwrap_or(Origin { source: "config".into(), line: 0, column: 0 })
    }

    fn require(&self, key: &str, what: &str) -> Result<&Entry, ConfigError> {
        self.get(key).ok_or_else(|| ConfigError::general("config", format!("missing '{key}' ({what})")))
    }
}

/// Parses a product/quotient of decimal literals and `pi`, with an optional
/// leading sign.
pub fn parse_number(s: &str) -> Result<f64, String> {
    let s = s.trim();
    if s.is_empty() {
        return Err("expected a number".into());
    }
    let (sign, body) = match s.strip_prefix('-') {
        Some(rest) => (-1.0, rest),
        None => (1.0, s.strip_prefix('+').unwrap_or(s)),
    };
    let mut value = sign;
    let mut op = '*';
    let mut term = String::new();
    let apply = |term: &str, op: char, value: &mut f64| -> Result<(), String> {
        let t = term.trim();
        let x = if t.eq_ignore_ascii_case("pi") {
            PI
        } else {
            t.parse::<f64>().map_err(|_| format!("cannot parse '{t}' as a number"))?
        };
        match op {
            '*' => *value *= x,
            _ => *value /= x,
        }
        Ok(())
    };
    for c in body.chars() {
        if c == '*' || c == '/' {
            apply(&term, op, &mut value)?;
            term.clear();
            op = c;
        } else {
            term.push(c);
        }
    }
    apply(&term, op, &mut value)?;
    if !value.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(value)
}

/// How the reaction `g` is given, before `|Ω|` is known.
#[derive(Debug, Clone, PartialEq)]
pub struct GSpec {
    pub kind: String,
    pub params: Vec<f64>,
    pub alpha: Option<f64>,
}

impl GSpec {
    pub fn build(&self, domain_measure: f64) -> gmlab_core::Result<Nonlinearity> {
        use gmlab_core::Error;
        match (self.kind.as_str(), self.params.as_slice(), self.alpha) {
            ("constant", [c], None) => Nonlinearity::constant(*c, domain_measure),
            ("affine", [a], Some(alpha)) => Nonlinearity::affine_with_root(*a, alpha, domain_measure),
            ("affine", [_, _], None) => {
                Nonlinearity::new(NonlinearityKind::Affine, self.params.clone(), 0.0, domain_measure)
            }
            ("power", [_, _], alpha) => {
                Nonlinearity::new(NonlinearityKind::Power, self.params.clone(), alpha.unwrap_or(0.0), domain_measure)
            }
            ("tabulated", _, None) => {
                Nonlinearity::new(NonlinearityKind::Tabulated, self.params.clone(), 0.0, domain_measure)
            }
            (kind, p, a) => Err(Error::Domain(format!(
                "g.kind = {kind} does not take {} parameter(s){}",
                p.len(),
                if a.is_some() { " with g.alpha" } else { "" }
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ProfileSpec {
    Power {
        c: f64,
        p: f64,
        t_max: f64,
    },
    Table {
        t: Vec<f64>,
        f: Vec<f64>,
    },
    /// Built from the field's own reaction.
    Empirical,
}

impl ProfileSpec {
    pub fn build(&self) -> gmlab_core::Result<Option<Profile>> {
        match self {
            ProfileSpec::Power { c, p, t_max } => Profile::power(*c, *p, *t_max).map(Some),
            ProfileSpec::Table { t, f } => Profile::table(t.clone(), f.clone()).map(Some),
            ProfileSpec::Empirical => Ok(None),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RadialSettings {
    pub n: usize,
    pub nodes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnnulusSettings {
    pub n: usize,
    pub nodes: usize,
    pub tol: f64,
    pub max_iter: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BarrierSettings {
    pub r: f64,
    pub n: usize,
    pub scale: f64,
    pub nodes: usize,
}

/// A fully typed configuration. Blocks absent from the input stay `None`
/// and are demanded by the subcommands that need them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub domain: Option<DomainSpec>,
    pub g: Option<GSpec>,
    pub solver: SolverConfig,
    pub analysis: AnalysisConfig,
    pub profile: Option<ProfileSpec>,
    pub radial: RadialSettings,
    pub annulus: AnnulusSettings,
    pub barriers: Option<BarrierSettings>,
    pub input_field: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
}

fn range(raw: &RawConfig, key: &str, ok: bool, expect: &str) -> Result<(), ConfigError> {
    if ok {
        Ok(())
    } else {
        Err(ConfigError::at(&raw.origin_of(key), format!("{key} out of range: expected {expect}")))
    }
}

impl ExperimentConfig {
    pub fn from_raw(raw: &RawConfig) -> Result<Self, ConfigError> {
        let domain = if raw.has_section("domain") {
            let kind = raw.require("domain.kind", "domain kind")?;
            let params =
                raw.list("domain.params")?.ok_or_else(|| ConfigError::general("config", "missing 'domain.params'"))?;
            Some(
                DomainSpec::from_parts(&kind.value, &params)
                    .map_err(|e| ConfigError::at(&kind.origin, format!("domain: {e}")))?,
            )
        } else {
            None
        };

        let g = if raw.has_section("g") {
            let kind = raw.require("g.kind", "nonlinearity kind")?;
            if !matches!(kind.value.as_str(), "affine" | "power" | "tabulated" | "constant") {
                return Err(ConfigError::at(&kind.origin, format!("unknown g.kind '{}'", kind.value)));
            }
            let params = raw.list("g.params")?.ok_or_else(|| ConfigError::general("config", "missing 'g.params'"))?;
            Some(GSpec { kind: kind.value.clone(), params, alpha: raw.num("g.alpha")? })
        } else {
            None
        };

        let mut solver = SolverConfig::default();
        macro_rules! set {
            ($target:expr, $getter:ident, $key:literal) => {
                if let Some(v) = raw.$getter($key)? {
                    $target = v;
                }
            };
        }
        set!(solver.h, num, "solver.h");
        set!(solver.tol_outer, num, "solver.tol_outer");
        set!(solver.tol_inner, num, "solver.tol_inner");
        set!(solver.cg_tol, num, "solver.cg_tol");
        set!(solver.max_outer, count, "solver.max_outer");
        set!(solver.max_inner, count, "solver.max_inner");
        set!(solver.max_cg, count, "solver.max_cg");
        set!(solver.damping, num, "solver.damping");
        if let Some(s) = raw.text("solver.init") {
            solver.init = Init::parse(s).ok_or_else(|| {
                ConfigError::at(
                    &raw.origin_of("solver.init"),
                    format!("unknown init '{s}' (zero | poisson_g0 | file:PATH)"),
                )
            })?;
        }
        range(raw, "solver.h", solver.h > 0.0 && solver.h <= 1.0, "0 < h ≤ 1")?;
        range(raw, "solver.damping", solver.damping > 0.0 && solver.damping <= 1.0, "θ in (0, 1]")?;
        for key in ["solver.tol_outer", "solver.tol_inner", "solver.cg_tol"] {
            if let Some(v) = raw.num(key)? {
                range(raw, key, v > 0.0 && v < 1.0, "a tolerance in (0, 1)")?;
            }
        }
        for key in ["solver.max_outer", "solver.max_inner", "solver.max_cg"] {
            range(raw, key, raw.count(key)?.is_none_or(|v| v > 0), "a positive count")?;
        }

        let mut analysis = AnalysisConfig::default();
        set!(analysis.c_eps, num, "analysis.c_eps");
        set!(analysis.s, num, "analysis.s");
        set!(analysis.gamma, num, "analysis.gamma");
        set!(analysis.band_lo_cells, num, "analysis.band_lo_cells");
        set!(analysis.band_hi_fraction, num, "analysis.band_hi_fraction");
        set!(analysis.min_band_nodes, count, "analysis.min_band_nodes");
        set!(analysis.near_fb_fraction, num, "analysis.near_fb_fraction");
        set!(analysis.k_max, count, "analysis.k_max");
        set!(analysis.q_list, list, "analysis.q_list");
        set!(analysis.integrability_p, list, "analysis.integrability_p");
        range(raw, "analysis.c_eps", analysis.c_eps > 0.0, "c_eps > 0")?;
        range(raw, "analysis.s", analysis.s > 0.0 && analysis.s < 1.0, "s in (0, 1)")?;
        range(raw, "analysis.gamma", analysis.gamma > 1.0 && analysis.gamma < 2.0, "γ in (1, 2)")?;
        range(raw, "analysis.band_lo_cells", analysis.band_lo_cells > 0.0, "a positive cell count")?;
        range(
            raw,
            "analysis.band_hi_fraction",
            analysis.band_hi_fraction > 0.0 && analysis.band_hi_fraction <= 1.0,
            "a fraction in (0, 1]",
        )?;
        range(
            raw,
            "analysis.near_fb_fraction",
            analysis.near_fb_fraction > 0.0 && analysis.near_fb_fraction <= 1.0,
            "a fraction in (0, 1]",
        )?;
        range(raw, "analysis.k_max", (1..=60).contains(&analysis.k_max), "1 ≤ k_max ≤ 60")?;
        range(raw, "analysis.q_list", analysis.q_list.iter().all(|&q| q > 0.0 && q < 1.0), "exponents in (0, 1)")?;
        range(
            raw,
            "analysis.integrability_p",
            analysis.integrability_p.iter().all(|&p| p > 0.0),
            "positive exponents",
        )?;

        let profile = if raw.has_section("profile") {
            let kind = raw.require("profile.kind", "profile kind")?;
            Some(match kind.value.as_str() {
                "power" => {
                    let c = raw.num("profile.c")?.unwrap_or(1.0);
                    let p =
                        raw.num("profile.p")?.ok_or_else(|| ConfigError::general("config", "missing 'profile.p'"))?;
                    let t_max = raw.num("profile.t_max")?.unwrap_or(10.0);
                    range(raw, "profile.c", c > 0.0, "c > 0")?;
                    range(raw, "profile.p", p > 0.0, "p > 0")?;
                    range(raw, "profile.t_max", t_max > 0.0, "t_max > 0")?;
                    ProfileSpec::Power { c, p, t_max }
                }
                "table" => {
                    let t =
                        raw.list("profile.t")?.ok_or_else(|| ConfigError::general("config", "missing 'profile.t'"))?;
                    let f =
                        raw.list("profile.f")?.ok_or_else(|| ConfigError::general("config", "missing 'profile.f'"))?;
                    range(
                        raw,
                        "profile.f",
                        t.len() == f.len() && t.len() >= 2,
                        "as many values as profile.t (at least two)",
                    )?;
                    ProfileSpec::Table { t, f }
                }
                "empirical" => ProfileSpec::Empirical,
                other => return Err(ConfigError::at(&kind.origin, format!("unknown profile.kind '{other}'"))),
            })
        } else {
            None
        };

        let radial = RadialSettings {
            n: raw.count("radial.n")?.unwrap_or(2),
            nodes: raw.count("radial.nodes")?.unwrap_or(4096),
        };
        range(raw, "radial.n", (1..=10).contains(&radial.n), "1 ≤ n ≤ 10")?;
        range(raw, "radial.nodes", radial.nodes >= 16, "at least 16 nodes")?;
        let annulus = AnnulusSettings {
            n: raw.count("annulus.n")?.unwrap_or(2),
            nodes: raw.count("annulus.nodes")?.unwrap_or(4000),
            tol: raw.num("annulus.tol")?.unwrap_or(1e-12),
            max_iter: raw.count("annulus.max_iter")?.unwrap_or(200_000),
        };
        range(raw, "annulus.n", (1..=10).contains(&annulus.n), "1 ≤ n ≤ 10")?;
        range(raw, "annulus.nodes", annulus.nodes >= 16, "at least 16 nodes")?;
        range(raw, "annulus.tol", annulus.tol > 0.0, "tol > 0")?;
        range(raw, "annulus.max_iter", annulus.max_iter > 0, "a positive count")?;

        let barriers = if raw.has_section("barriers") {
            let b = BarrierSettings {
                r: raw.num("barriers.r")?.unwrap_or(0.5),
                n: raw.count("barriers.n")?.unwrap_or(2),
                scale: raw.num("barriers.scale")?.unwrap_or(1.0),
                nodes: raw.count("barriers.nodes")?.unwrap_or(2000),
            };
            range(raw, "barriers.r", b.r > 0.0, "r > 0")?;
            range(raw, "barriers.n", (1..=10).contains(&b.n), "1 ≤ n ≤ 10")?;
            range(raw, "barriers.scale", b.scale > 0.0, "scale > 0")?;
            range(raw, "barriers.nodes", b.nodes >= 16, "at least 16 nodes")?;
            Some(b)
        } else {
            None
        };

        Ok(ExperimentConfig {
            domain,
            g,
            solver,
            analysis,
            profile,
            radial,
            annulus,
            barriers,
            input_field: raw.text("input.field").map(PathBuf::from),
            output_dir: raw.text("output.dir").map(PathBuf::from),
        })
    }

    pub fn require_domain(&self) -> Result<DomainSpec, ConfigError> {
        self.domain.ok_or_else(|| ConfigError::general("config", "this subcommand needs a [domain] block"))
    }

    pub fn require_g(&self) -> Result<&GSpec, ConfigError> {
        self.g.as_ref().ok_or_else(|| ConfigError::general("config", "this subcommand needs a [g] block"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers() {
        assert_eq!(parse_number("1/256").unwrap(), 1.0 / 256.0);
        assert_eq!(parse_number("pi/4").unwrap(), PI / 4.0);
        assert_eq!(parse_number("-2*pi").unwrap(), -2.0 * PI);
        assert_eq!(parse_number(" 1e-3 ").unwrap(), 1e-3);
        assert!(parse_number("1/0").is_err());
        assert!(parse_number("two").is_err());
        assert!(parse_number("").is_err());
    }

    #[test]
    fn sections_and_dotted_keys_agree() {
        let a = RawConfig::parse("[g]\nkind = affine\n", "a").unwrap();
        let b = RawConfig::parse("g.kind = affine\n", "b").unwrap();
        assert_eq!(a.entries["g.kind"].value, b.entries["g.kind"].value);
    }

    #[test]
    fn errors_carry_line_and_column() {
        let e = RawConfig::parse("[solver]\n  dampin = 0.5\n", "x.ini").unwrap_err();
        assert_eq!((e.origin.line, e.origin.column), (2, 3));
        let e = RawConfig::parse("[solver\n", "x.ini").unwrap_err();
        assert_eq!(e.origin.line, 1);
        let e = RawConfig::parse("[solver]\nh 0.1\n", "x.ini").unwrap_err();
        assert_eq!(e.origin.line, 2);
        let raw = RawConfig::parse("[solver]\nh = 1/x\n", "x.ini").unwrap();
        let e = ExperimentConfig::from_raw(&raw).unwrap_err();
        assert_eq!((e.origin.line, e.origin.column), (2, 5));
    }

    #[test]
    fn damping_range_is_enforced() {
        let raw = RawConfig::parse("[solver]\ndamping = 1.5\n", "x.ini").unwrap();
        let e = ExperimentConfig::from_raw(&raw).unwrap_err();
        assert!(e.message.contains("damping"), "{e}");
        let raw = RawConfig::parse("[solver]\ndamping = 1\n", "x.ini").unwrap();
        assert_eq!(ExperimentConfig::from_raw(&raw).unwrap().solver.damping, 1.0);
    }

    #[test]
    fn overrides_replace_file_values() {
        let mut raw = RawConfig::parse("[solver]\nh = 0.1\n", "x.ini").unwrap();
        raw.apply_overrides(&["solver.h=1/64".into()]).unwrap();
        assert_eq!(ExperimentConfig::from_raw(&raw).unwrap().solver.h, 1.0 / 64.0);
        assert!(raw.apply_overrides(&["solver.nope=1".into()]).is_err());
        assert!(raw.apply_overrides(&["solver.h".into()]).is_err());
    }

    #[test]
    fn duplicate_keys_are_rejected() {
        assert!(RawConfig::parse("[solver]\nh = 0.1\nh = 0.2\n", "x.ini").is_err());
    }
}
