//! Battery of checks run against minimizer output: gauge invariance,
//! lattice rotations and translations, the Gauss constraint, the
//! zero-energy Hamilton-Jacobi balance and the functional derivative.
//!
//! Every check yields an [`InvarianceReport`] with `pass ⇔ rel_gap ≤
//! tolerance`. A check whose computation fails (non-convergence, branch
//! cut) is reported as failed with the error text; the other checks of
//! the battery still run.

use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::{random_gauge, BoundaryData, Geometry, Symmetry};
use crate::lie::{Algebra, GroupKind, LieGroup};
use crate::minimizer::{
    functional_derivative_check, gauss_residual, hje_residual, minimize, MinimizeReport, MinimizerConfig,
    EPS_FLOOR,
};

/// What a report was computed from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputsDigest {
    pub seed: u64,
    pub group: GroupKind,
    pub geometry: Geometry,
    /// CRC-32 of the datum's link words, hex.
    pub datum: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub check: String,
    pub inputs: InputsDigest,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
    pub tolerance: f64,
    pub pass: bool,
    /// Error text when the check could not be computed.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl InvarianceReport {
    fn new(check: impl Into<String>, inputs: &InputsDigest, lhs: f64, rhs: f64, rel_gap: f64, tolerance: f64) -> Self {
        InvarianceReport {
            check: check.into(),
            inputs: inputs.clone(),
            lhs,
            rhs,
            rel_gap,
            tolerance,
            pass: rel_gap <= tolerance,
            error: None,
        }
    }

    fn failed(check: impl Into<String>, inputs: &InputsDigest, tolerance: f64, err: &Error) -> Self {
        InvarianceReport {
            check: check.into(),
            inputs: inputs.clone(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            rel_gap: f64::NAN,
            tolerance,
            pass: false,
            error: Some(err.to_string()),
        }
    }
}

pub fn datum_digest<G: LieGroup>(bd: &BoundaryData<G>) -> String {
    let mut words = Vec::with_capacity(bd.links().len() * 4);
    for u in bd.links() {
        u.write_raw(&mut words);
    }
    let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    format!("{:08x}", crc32fast::hash(&bytes))
}

fn digest<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry, seed: u64) -> InputsDigest {
    InputsDigest { seed, group: G::KIND, geometry: *geom, datum: datum_digest(bd) }
}

fn rel(lhs: f64, rhs: f64) -> f64 {
    (lhs - rhs).abs() / lhs.abs().max(EPS_FLOOR)
}

fn converged_s<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry, cfg: &MinimizerConfig) -> Result<f64> {
    let r = minimize(bd, geom, cfg, None)?;
    if !r.converged {
        return Err(Error::NonConvergence(format!(
            "gradient {:.3e} after {} iterations ({:?})",
            r.grad_norm, r.iterations, r.stop
        )));
    }
    Ok(r.s)
}

pub const GAUGE_TOLERANCE: f64 = 1e-10;
pub const SYMMETRY_TOLERANCE: f64 = 1e-10;

/// `S(bd)` against `S(bd^g)` for an explicit slice transformation `g`.
pub fn check_gauge_transform<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    g: &[G],
    base_s: Option<f64>,
    seed: u64,
) -> Result<InvarianceReport> {
    let s0 = match base_s {
        Some(s) => s,
        None => converged_s(bd, geom, cfg)?,
    };
    let s1 = converged_s(&bd.gauge_transform(g)?, geom, cfg)?;
    Ok(InvarianceReport::new("gauge", &digest(bd, geom, seed), s0, s1, rel(s0, s1), GAUGE_TOLERANCE))
}

/// Gauge invariance under a slice transformation drawn from `seed`.
pub fn check_gauge_invariance<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    seed: u64,
) -> Result<InvarianceReport> {
    let g: Vec<G> = random_gauge(&mut ChaCha8Rng::seed_from_u64(seed), geom.spatial_volume());
    check_gauge_transform(bd, geom, cfg, &g, None, seed)
}

/// `S` of the datum against `S` of its image under a lattice symmetry.
pub fn check_euclidean_symmetry<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    op: Symmetry,
) -> Result<InvarianceReport> {
    check_symmetry_with_base(bd, geom, cfg, op, None, cfg.seed)
}

fn symmetry_name(op: Symmetry) -> String {
    match op {
        Symmetry::Translate(v) => format!("translate({},{},{})", v[0], v[1], v[2]),
        Symmetry::Rotate90 { from, to } => format!("rotate90({from},{to})"),
    }
}

fn check_symmetry_with_base<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    op: Symmetry,
    base_s: Option<f64>,
    seed: u64,
) -> Result<InvarianceReport> {
    let moved = op.apply_boundary(bd)?;
    let s0 = match base_s {
        Some(s) => s,
        None => converged_s(bd, geom, cfg)?,
    };
    let s1 = converged_s(&moved, geom, cfg)?;
    let name = format!("symmetry:{}", symmetry_name(op));
    Ok(InvarianceReport::new(name, &digest(bd, geom, seed), s0, s1, rel(s0, s1), SYMMETRY_TOLERANCE))
}

/// Largest covariant divergence of `E`; the tolerance is `10 × grad_tol`
/// and `rel_gap` carries the absolute residual.
pub fn check_gauss_residual<G: LieGroup>(report: &MinimizeReport<G>) -> InvarianceReport {
    let f = &report.final_field;
    let bd = f.slice(0);
    let worst = gauss_residual(report).iter().map(|v| v.max_abs()).fold(0.0, f64::max);
    let inputs = digest(&bd, f.geometry(), 0);
    InvarianceReport::new("gauss", &inputs, worst, 0.0, worst, 10.0 * report.grad_tol)
}

/// Default Hamilton-Jacobi tolerance: 5% for U(1), 10% for SU(2).
pub fn default_hje_tolerance(kind: GroupKind) -> f64 {
    match kind {
        GroupKind::U1 => 0.05,
        GroupKind::Su2 => 0.10,
    }
}

/// Default derivative tolerance: 1% for U(1), 3% for SU(2).
pub fn default_deriv_tolerance(kind: GroupKind) -> f64 {
    match kind {
        GroupKind::U1 => 0.01,
        GroupKind::Su2 => 0.03,
    }
}

pub fn check_hje<G: LieGroup>(report: &MinimizeReport<G>, tolerance: f64) -> Result<InvarianceReport> {
    let h = hje_residual(report)?;
    let f = &report.final_field;
    Ok(InvarianceReport::new("hje", &digest(&f.slice(0), f.geometry(), 0), h.lhs, h.rhs, h.rel_gap, tolerance))
}

/// Directional derivative of `S` against `−Σ a³⟨E, h⟩`; `lhs` is the
/// momentum side, `rhs` the central difference.
pub fn check_derivative<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    h: &[G::Alg],
    eps: f64,
    tolerance: f64,
) -> Result<InvarianceReport> {
    let d = functional_derivative_check(bd, geom, cfg, h, eps)?;
    Ok(InvarianceReport::new("deriv", &digest(bd, geom, cfg.seed), d.analytic, d.numeric, d.rel_gap, tolerance))
}

/// Named checks of the battery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Gauge,
    Symmetry,
    Gauss,
    Hje,
    Deriv,
}

impl Check {
    pub const ALL: [Check; 5] = [Check::Gauge, Check::Symmetry, Check::Gauss, Check::Hje, Check::Deriv];
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "gauge" => Ok(Check::Gauge),
            "symmetry" => Ok(Check::Symmetry),
            "gauss" => Ok(Check::Gauss),
            "hje" => Ok(Check::Hje),
            "deriv" => Ok(Check::Deriv),
            other => Err(Error::InvalidArgument(format!("unknown check {other:?}"))),
        }
    }
}

/// Parses a comma-separated battery; `"default"` expands to every check
/// and the empty string to no check.
pub fn parse_battery(spec: &str) -> Result<Vec<Check>> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(Vec::new());
    }
    if spec == "default" {
        return Ok(Check::ALL.to_vec());
    }
    spec.split(',').map(Check::from_str).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub battery: Vec<Check>,
    /// Seeds the gauge draws and derivative directions.
    pub seed: u64,
    pub gauge_draws: usize,
    pub symmetries: Vec<Symmetry>,
    pub deriv_directions: usize,
    pub deriv_eps: f64,
    /// Coefficient bound of the random derivative directions.
    pub deriv_scale: f64,
    /// `None` selects the per-group default.
    pub hje_tolerance: Option<f64>,
    pub deriv_tolerance: Option<f64>,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig {
            battery: Check::ALL.to_vec(),
            seed: 0,
            gauge_draws: 2,
            symmetries: vec![Symmetry::Rotate90 { from: 0, to: 1 }, Symmetry::Translate([1, 0, 0])],
            deriv_directions: 2,
            deriv_eps: 1e-3,
            deriv_scale: 0.05,
            hje_tolerance: None,
            deriv_tolerance: None,
        }
    }
}

/// Runs the battery on `bd`.
///
/// The principal functional of `bd` comes from `base` when given (for
/// instance a stored field re-evaluated with [`crate::minimizer::evaluate`]);
/// otherwise `bd` is minimized once and that run serves every check. The
/// output order follows `suite.battery` and is deterministic.
pub fn run_suite<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    suite: &SuiteConfig,
    base: Option<MinimizeReport<G>>,
) -> Vec<InvarianceReport> {
    if suite.battery.is_empty() {
        return Vec::new();
    }
    let inputs = digest(bd, geom, suite.seed);
    let base = match base {
        Some(b) => Ok(b),
        None => minimize(bd, geom, cfg, None),
    };
    let base_s = match &base {
        Ok(r) if r.converged || r.iterations == 0 => Ok(r.s),
        Ok(r) => Err(Error::NonConvergence(format!("base run: gradient {:.3e}", r.grad_norm))),
        Err(e) => Err(Error::InvalidArgument(format!("base run: {e}"))),
    };
    let hje_tol = suite.hje_tolerance.unwrap_or(default_hje_tolerance(G::KIND));
    let deriv_tol = suite.deriv_tolerance.unwrap_or(default_deriv_tolerance(G::KIND));
    let mut rng = ChaCha8Rng::seed_from_u64(suite.seed);
    let mut out = Vec::new();
    for check in &suite.battery {
        match check {
            Check::Gauge => {
                for k in 0..suite.gauge_draws {
                    let g: Vec<G> = random_gauge(&mut rng, geom.spatial_volume());
                    let r = base_s
                        .as_ref()
                        .map_err(clone_err)
                        .and_then(|s| check_gauge_transform(bd, geom, cfg, &g, Some(*s), suite.seed));
                    out.push(r.unwrap_or_else(|e| InvarianceReport::failed(format!("gauge#{k}"), &inputs, GAUGE_TOLERANCE, &e)));
                }
            }
            Check::Symmetry => {
                for op in &suite.symmetries {
                    let r = base_s
                        .as_ref()
                        .map_err(clone_err)
                        .and_then(|s| check_symmetry_with_base(bd, geom, cfg, *op, Some(*s), suite.seed));
                    let name = format!("symmetry:{}", symmetry_name(*op));
                    out.push(r.unwrap_or_else(|e| InvarianceReport::failed(name, &inputs, SYMMETRY_TOLERANCE, &e)));
                }
            }
            Check::Gauss => out.push(match &base {
                Ok(r) => check_gauss_residual(r),
                Err(e) => InvarianceReport::failed("gauss", &inputs, 10.0 * cfg.grad_tol, e),
            }),
            Check::Hje => out.push(match &base {
                Ok(r) => check_hje(r, hje_tol).unwrap_or_else(|e| InvarianceReport::failed("hje", &inputs, hje_tol, &e)),
                Err(e) => InvarianceReport::failed("hje", &inputs, hje_tol, e),
            }),
            Check::Deriv => {
                for k in 0..suite.deriv_directions {
                    let h: Vec<G::Alg> = (0..bd.links().len()).map(|_| G::random_alg(&mut rng, suite.deriv_scale)).collect();
                    let r = check_derivative(bd, geom, cfg, &h, suite.deriv_eps, deriv_tol);
                    out.push(r.unwrap_or_else(|e| InvarianceReport::failed(format!("deriv#{k}"), &inputs, deriv_tol, &e)));
                }
            }
        }
    }
    out
}

fn clone_err(e: &Error) -> Error {
    Error::InvalidArgument(e.to_string())
}

/// True when every report passed.
pub fn all_pass(reports: &[InvarianceReport]) -> bool {
    reports.iter().all(|r| r.pass)
}
