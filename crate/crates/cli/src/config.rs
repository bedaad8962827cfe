//! Run configuration: a flat `key = value` file with `[section]` headers.
//!
//! Grammar (UTF-8):
//!
//! ```text
//! file    := line*
//! line    := blank | comment | header | entry
//! comment := '#' anything                      (also after a value, preceded by whitespace)
//! header  := '[' name ']'
//! entry   := key '=' value                     (key and value trimmed; value may be empty)
//! ```
//!
//! Every entry belongs to the most recent header. Unknown sections, unknown
//! keys, duplicate keys and entries before the first header are errors, and
//! they are reported before any computation starts. Lists are
//! comma-separated.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::str::FromStr;

use ymvac::invariance::{parse_battery, SuiteConfig};
use ymvac::lattice::{Geometry, Symmetry};
use ymvac::lie::GroupKind;
use ymvac::minimizer::{Direction, MinimizerConfig, Start};

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

type Sections = BTreeMap<String, BTreeMap<String, (usize, String)>>;

/// Raw sections with line numbers, before typing.
pub fn parse_sections(text: &str) -> Result<Sections, ConfigError> {
    let mut out: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = strip_comment(raw).trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| ConfigError(format!("line {lineno}: unterminated section header")))?
                .trim();
            if name.is_empty() {
                return Err(ConfigError(format!("line {lineno}: empty section name")));
            }
            out.entry(name.to_string()).or_default();
            current = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| ConfigError(format!("line {lineno}: expected key = value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(ConfigError(format!("line {lineno}: empty key")));
        }
        let section = current
            .as_ref()
            .ok_or_else(|| ConfigError(format!("line {lineno}: key {key:?} outside any section")))?;
        let map = out.get_mut(section).expect("section inserted at its header");
        if map.insert(key.to_string(), (lineno, value.trim().to_string())).is_some() {
            return Err(ConfigError(format!("line {lineno}: duplicate key {section}.{key}")));
        }
    }
    Ok(out)
}

fn strip_comment(line: &str) -> &str {
    if line.trim_start().starts_with('#') {
        return "";
    }
    let bytes = line.as_bytes();
    for i in 1..bytes.len() {
        if bytes[i] == b'#' && bytes[i - 1].is_ascii_whitespace() {
            return &line[..i];
        }
    }
    line
}

/// Boundary datum selection.
#[derive(Debug, Clone, PartialEq)]
pub enum DatumSpec {
    Flat,
    SingleMode { mode: [i64; 3], amplitude: f64, polarization: usize },
    LocalizedBump { center: [f64; 3], width: f64, amplitude: f64 },
    RandomSmooth { max_log: f64 },
    /// `t = 0` slice of a stored field.
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QmConfig {
    pub lambda: f64,
    pub h: f64,
    pub x_min: f64,
    pub x_max: f64,
    /// Finite-difference order, 2 or 4.
    pub order: u32,
    /// Also run at `2h` and `4h` and fit the convergence order.
    pub study: bool,
    pub tolerance: f64,
}

impl Default for QmConfig {
    fn default() -> Self {
        QmConfig { lambda: 1.0, h: 1e-3, x_min: -5.0, x_max: 5.0, order: 2, study: true, tolerance: 1e-5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Bumps,
    Gradient,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxwellConfig {
    pub n: usize,
    pub a: f64,
    pub fields: usize,
    pub sigma: f64,
    pub kind: FieldKind,
    pub kernel: bool,
    pub boost: bool,
    pub kernel_tolerance: f64,
    pub boost_tolerance: f64,
}

impl Default for MaxwellConfig {
    fn default() -> Self {
        MaxwellConfig {
            n: 24,
            a: 1.0,
            fields: 1,
            sigma: 0.1,
            kind: FieldKind::Bumps,
            kernel: true,
            boost: true,
            kernel_tolerance: 0.05,
            boost_tolerance: 0.02,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct OutputConfig {
    pub report: Option<PathBuf>,
    pub field: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub geometry: Geometry,
    pub group: GroupKind,
    pub datum: DatumSpec,
    pub seed: u64,
    pub minimizer: MinimizerConfig,
    pub suite: SuiteConfig,
    pub qm: QmConfig,
    pub maxwell: MaxwellConfig,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            geometry: Geometry::new(16, 8, 8, 8, 1.0).expect("valid default geometry"),
            group: GroupKind::U1,
            datum: DatumSpec::SingleMode { mode: [1, 0, 0], amplitude: 0.01, polarization: 1 },
            seed: 0,
            minimizer: MinimizerConfig::default(),
            suite: SuiteConfig::default(),
            qm: QmConfig::default(),
            maxwell: MaxwellConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

/// Typed reader that consumes entries so leftovers can be reported.
struct Reader {
    sections: Sections,
}

impl Reader {
    fn take(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.sections.get_mut(section).and_then(|m| m.remove(key))
    }

    fn parse<T: FromStr>(&mut self, section: &str, key: &str, target: &mut T) -> Result<(), ConfigError>
    where
        T::Err: std::fmt::Display,
    {
        if let Some((line, v)) = self.take(section, key) {
            *target = v
                .parse()
                .map_err(|e| ConfigError(format!("line {line}: {section}.{key} = {v:?}: {e}")))?;
        }
        Ok(())
    }

    fn raw(&mut self, section: &str, key: &str) -> Option<(usize, String)> {
        self.take(section, key)
    }

    fn leftovers(self) -> Result<(), ConfigError> {
        for (section, keys) in &self.sections {
            if !KNOWN_SECTIONS.contains(&section.as_str()) {
                return Err(ConfigError(format!("unknown section [{section}]")));
            }
            if let Some((key, (line, _))) = keys.iter().next() {
                return Err(ConfigError(format!("line {line}: unknown key {section}.{key}")));
            }
        }
        Ok(())
    }
}

const KNOWN_SECTIONS: [&str; 9] = ["run", "geometry", "model", "datum", "minimizer", "suite", "qm", "maxwell", "output"];

fn list<T: FromStr, const N: usize>(line: usize, key: &str, v: &str) -> Result<[T; N], ConfigError>
where
    T::Err: std::fmt::Display,
{
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != N {
        return Err(ConfigError(format!("line {line}: {key} needs {N} comma-separated values, got {v:?}")));
    }
    let parsed: Vec<T> = parts
        .iter()
        .map(|p| p.parse::<T>().map_err(|e| ConfigError(format!("line {line}: {key}: {p:?}: {e}"))))
        .collect::<Result<_, _>>()?;
    parsed
        .try_into()
        .map_err(|_| ConfigError(format!("line {line}: {key}: wrong length")))
}

fn axis(line: usize, v: &str) -> Result<usize, ConfigError> {
    match v {
        "x" | "0" => Ok(0),
        "y" | "1" => Ok(1),
        "z" | "2" => Ok(2),
        _ => Err(ConfigError(format!("line {line}: polarization must be x, y, z or 0..2, got {v:?}"))),
    }
}

fn symmetry(line: usize, v: &str) -> Result<Symmetry, ConfigError> {
    let bad = || ConfigError(format!("line {line}: symmetry {v:?}; use rot:FROM:TO or shift:DX:DY:DZ"));
    let parts: Vec<&str> = v.split(':').map(str::trim).collect();
    match parts.as_slice() {
        ["rot", from, to] => Ok(Symmetry::Rotate90 {
            from: from.parse().map_err(|_| bad())?,
            to: to.parse().map_err(|_| bad())?,
        }),
        ["shift", dx, dy, dz] => Ok(Symmetry::Translate([
            dx.parse().map_err(|_| bad())?,
            dy.parse().map_err(|_| bad())?,
            dz.parse().map_err(|_| bad())?,
        ])),
        _ => Err(bad()),
    }
}

fn bool_value(line: usize, key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(ConfigError(format!("line {line}: {key} must be a boolean, got {v:?}"))),
    }
}

impl RunConfig {
    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut r = Reader { sections: parse_sections(text)? };
        let mut c = RunConfig::default();

        r.parse("run", "seed", &mut c.seed)?;

        let g = c.geometry;
        let (mut n_t, mut n_x, mut n_y, mut n_z, mut a) = (g.n_t, g.n_x, g.n_y, g.n_z, g.a);
        r.parse("geometry", "n_t", &mut n_t)?;
        r.parse("geometry", "n_x", &mut n_x)?;
        r.parse("geometry", "n_y", &mut n_y)?;
        r.parse("geometry", "n_z", &mut n_z)?;
        r.parse("geometry", "a", &mut a)?;
        c.geometry = Geometry::new(n_t, n_x, n_y, n_z, a).map_err(|e| ConfigError(format!("[geometry]: {e}")))?;

        if let Some((line, v)) = r.raw("model", "group") {
            c.group = v.parse().map_err(|e| ConfigError(format!("line {line}: {e}")))?;
        }

        c.datum = Self::datum(&mut r)?;

        let m = &mut c.minimizer;
        r.parse("minimizer", "max_iters", &mut m.max_iters)?;
        r.parse("minimizer", "grad_tol", &mut m.grad_tol)?;
        r.parse("minimizer", "initial_step", &mut m.initial_step)?;
        r.parse("minimizer", "backtrack", &mut m.backtrack)?;
        r.parse("minimizer", "armijo", &mut m.armijo)?;
        r.parse("minimizer", "memory", &mut m.memory)?;
        r.parse("minimizer", "max_link_step", &mut m.max_link_step)?;
        r.parse("minimizer", "seed", &mut m.seed)?;
        if let Some((line, v)) = r.raw("minimizer", "weyl_gauge") {
            m.weyl_gauge = bool_value(line, "weyl_gauge", &v)?;
        }
        if let Some((line, v)) = r.raw("minimizer", "direction") {
            m.direction = match v.as_str() {
                "lbfgs" => Direction::Lbfgs,
                "steepest" => Direction::Steepest,
                _ => return Err(ConfigError(format!("line {line}: direction must be lbfgs or steepest"))),
            };
        }
        if let Some((line, v)) = r.raw("minimizer", "start") {
            m.start = match v.as_str() {
                "extended" => Start::Extended,
                "damped" => Start::Damped,
                _ => return Err(ConfigError(format!("line {line}: start must be extended or damped"))),
            };
        }
        m.validate().map_err(|e| ConfigError(format!("[minimizer]: {e}")))?;

        let s = &mut c.suite;
        if let Some((line, v)) = r.raw("suite", "battery") {
            s.battery = parse_battery(&v).map_err(|e| ConfigError(format!("line {line}: {e}")))?;
        }
        r.parse("suite", "gauge_draws", &mut s.gauge_draws)?;
        r.parse("suite", "deriv_directions", &mut s.deriv_directions)?;
        r.parse("suite", "deriv_eps", &mut s.deriv_eps)?;
        r.parse("suite", "deriv_scale", &mut s.deriv_scale)?;
        if let Some((line, v)) = r.raw("suite", "symmetries") {
            s.symmetries = v
                .split(',')
                .map(str::trim)
                .filter(|p| !p.is_empty())
                .map(|p| symmetry(line, p))
                .collect::<Result<_, _>>()?;
        }
        for (key, slot) in [("hje_tolerance", &mut s.hje_tolerance), ("deriv_tolerance", &mut s.deriv_tolerance)] {
            if let Some((line, v)) = r.raw("suite", key) {
                *slot = Some(v.parse().map_err(|e| ConfigError(format!("line {line}: suite.{key}: {e}")))?);
            }
        }

        let q = &mut c.qm;
        r.parse("qm", "lambda", &mut q.lambda)?;
        r.parse("qm", "h", &mut q.h)?;
        r.parse("qm", "x_min", &mut q.x_min)?;
        r.parse("qm", "x_max", &mut q.x_max)?;
        r.parse("qm", "order", &mut q.order)?;
        r.parse("qm", "tolerance", &mut q.tolerance)?;
        if let Some((line, v)) = r.raw("qm", "study") {
            q.study = bool_value(line, "study", &v)?;
        }

        let w = &mut c.maxwell;
        r.parse("maxwell", "n", &mut w.n)?;
        r.parse("maxwell", "a", &mut w.a)?;
        r.parse("maxwell", "fields", &mut w.fields)?;
        r.parse("maxwell", "sigma", &mut w.sigma)?;
        r.parse("maxwell", "kernel_tolerance", &mut w.kernel_tolerance)?;
        r.parse("maxwell", "boost_tolerance", &mut w.boost_tolerance)?;
        if let Some((line, v)) = r.raw("maxwell", "kind") {
            w.kind = match v.as_str() {
                "bumps" => FieldKind::Bumps,
                "gradient" => FieldKind::Gradient,
                _ => return Err(ConfigError(format!("line {line}: maxwell.kind must be bumps or gradient"))),
            };
        }
        for (key, slot) in [("kernel", &mut w.kernel), ("boost", &mut w.boost)] {
            if let Some((line, v)) = r.raw("maxwell", key) {
                *slot = bool_value(line, key, &v)?;
            }
        }

        for (key, slot) in [
            ("report", &mut c.output.report),
            ("field", &mut c.output.field),
            ("csv", &mut c.output.csv),
        ] {
            if let Some((_, v)) = r.raw("output", key) {
                *slot = Some(PathBuf::from(v));
            }
        }

        r.leftovers()?;
        Ok(c)
    }

    fn datum(r: &mut Reader) -> Result<DatumSpec, ConfigError> {
        let Some((line, kind)) = r.raw("datum", "kind") else {
            // Keys without a kind would be silently ignored; refuse them.
            if let Some(keys) = r.sections.get("datum") {
                if let Some((key, (line, _))) = keys.iter().next() {
                    return Err(ConfigError(format!("line {line}: datum.{key} given without datum.kind")));
                }
            }
            return Ok(RunConfig::default().datum);
        };
        let mut amplitude = 0.01;
        r.parse("datum", "amplitude", &mut amplitude)?;
        let spec = match kind.as_str() {
            "flat" => DatumSpec::Flat,
            "single-mode" => {
                let mode = match r.raw("datum", "mode") {
                    Some((l, v)) => list::<i64, 3>(l, "datum.mode", &v)?,
                    None => [1, 0, 0],
                };
                let polarization = match r.raw("datum", "polarization") {
                    Some((l, v)) => axis(l, &v)?,
                    None => 1,
                };
                DatumSpec::SingleMode { mode, amplitude, polarization }
            }
            "localized-bump" => {
                let center = match r.raw("datum", "center") {
                    Some((l, v)) => list::<f64, 3>(l, "datum.center", &v)?,
                    None => return Err(ConfigError(format!("line {line}: localized-bump needs datum.center"))),
                };
                let mut width = 1.0;
                r.parse("datum", "width", &mut width)?;
                DatumSpec::LocalizedBump { center, width, amplitude }
            }
            "random-smooth" => {
                let mut max_log = 0.05;
                r.parse("datum", "max_log", &mut max_log)?;
                DatumSpec::RandomSmooth { max_log }
            }
            "file" => match r.raw("datum", "path") {
                Some((_, p)) => DatumSpec::File(PathBuf::from(p)),
                None => return Err(ConfigError(format!("line {line}: datum kind file needs datum.path"))),
            },
            other => {
                return Err(ConfigError(format!(
                    "line {line}: datum.kind {other:?}; use flat, single-mode, localized-bump, random-smooth or file"
                )))
            }
        };
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_gives_defaults() {
        assert_eq!(RunConfig::from_text("").unwrap(), RunConfig::default());
        assert_eq!(RunConfig::from_text("# only a comment\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn full_example_parses() {
        let text = "
            [run]
            seed = 7
            [geometry]
            n_t = 8   # short
            n_x = 6
            n_y = 6
            n_z = 6
            a = 0.5
            [model]
            group = su2
            [datum]
            kind = single-mode
            mode = 0, 1, 0
            amplitude = 0.02
            polarization = z
            [minimizer]
            grad_tol = 1e-8
            direction = steepest
            start = damped
            [suite]
            battery = gauss,hje
            symmetries = rot:0:1, shift:1:0:0
            hje_tolerance = 0.2
            [output]
            report = out/report.json
        ";
        let c = RunConfig::from_text(text).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.geometry, Geometry::new(8, 6, 6, 6, 0.5).unwrap());
        assert_eq!(c.group, GroupKind::Su2);
        assert_eq!(c.datum, DatumSpec::SingleMode { mode: [0, 1, 0], amplitude: 0.02, polarization: 2 });
        assert_eq!(c.minimizer.grad_tol, 1e-8);
        assert_eq!(c.minimizer.direction, Direction::Steepest);
        assert_eq!(c.minimizer.start, Start::Damped);
        assert_eq!(c.suite.battery.len(), 2);
        assert_eq!(c.suite.symmetries.len(), 2);
        assert_eq!(c.suite.hje_tolerance, Some(0.2));
        assert_eq!(c.output.report, Some(PathBuf::from("out/report.json")));
    }

    #[test]
    fn strictness() {
        for bad in [
            "[geometry]\nn_q = 3\n",
            "[nonsense]\n",
            "n_t = 3\n",
            "[geometry]\nn_t = 8\nn_t = 9\n",
            "[geometry\n",
            "[geometry]\njust words\n",
            "[geometry]\nn_t = 2\n",
            "[model]\ngroup = su3\n",
            "[datum]\namplitude = 0.1\n",
            "[datum]\nkind = localized-bump\n",
            "[datum]\nkind = single-mode\nmode = 1,0\n",
            "[minimizer]\nbacktrack = 1.5\n",
            "[suite]\nbattery = gauge,boost\n",
            "[suite]\nsymmetries = spin:1\n",
            "[maxwell]\nkernel = maybe\n",
        ] {
            assert!(RunConfig::from_text(bad).is_err(), "{bad:?} accepted");
        }
    }

    #[test]
    fn hash_inside_a_value_is_kept() {
        let c = RunConfig::from_text("[output]\nreport = run#1.json\n").unwrap();
        assert_eq!(c.output.report, Some(PathBuf::from("run#1.json")));
    }
}
