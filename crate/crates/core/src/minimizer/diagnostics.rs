//! Identities checked on minimizer output.

use serde::Serialize;

use super::{minimize, MinimizeReport, MinimizerConfig, EPS_FLOOR};
use crate::error::{Error, Result};
use crate::lattice::{plaquette_logs, BoundaryData, Geometry, SliceGeometry};
use crate::lie::{Algebra, LieGroup};
use crate::par::Exec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HjeResidual {
    /// `Σ a³ |E|²` over the `t = 0` slice.
    pub lhs: f64,
    /// `Σ a³ |B|²` over the `t = 0` slice, plaquette magnetic field.
    pub rhs: f64,
    pub rel_gap: f64,
}

/// Zero-energy Hamilton-Jacobi balance `∫|δS/δA|² = ∫|B|²` at `t = 0`.
pub fn hje_residual<G: LieGroup>(report: &MinimizeReport<G>) -> Result<HjeResidual> {
    let f = &report.final_field;
    let a3 = f.geometry().a.powi(3);
    let lhs: f64 = report.e.iter().map(|e| e.norm_sq()).sum::<f64>() * a3;
    let b = f.slice(0).plaquette_magnetic_field()?;
    let rhs: f64 = b.iter().map(|v| v.norm_sq()).sum::<f64>() * a3;
    Ok(HjeResidual { lhs, rhs, rel_gap: (lhs - rhs).abs() / rhs.max(EPS_FLOOR) })
}

/// Discrete covariant divergence `Σ_i [E_i(x) − U_i(x−î)⁻¹ E_i(x−î) U_i(x−î)]/a`.
pub fn gauss_residual<G: LieGroup>(report: &MinimizeReport<G>) -> Vec<G::Alg> {
    let f = &report.final_field;
    let g = f.geometry().slice_geometry();
    let mut out = vec![G::Alg::zero(); g.volume()];
    for (x, d) in out.iter_mut().enumerate() {
        for i in 1..4 {
            let xm = g.shift(x, i - 1, -1);
            let back = f.link(xm, i).adjoint_inv(&report.e[xm * 3 + i - 1]);
            *d += (report.e[x * 3 + i - 1] - back) * (1.0 / g.a);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivativeCheck {
    /// Central difference of `S` along the tangential perturbation.
    pub numeric: f64,
    /// `−Σ a³ ⟨E, h⟩`.
    pub analytic: f64,
    pub rel_gap: f64,
    pub s: f64,
}

/// Compares `(S(e^{εah}·bd) − S(e^{−εah}·bd))/2ε` with the momentum.
///
/// `h` is a potential perturbation (one algebra element per `t = 0`
/// spatial link, layout as the datum). The momentum enters with a minus
/// sign: the decaying extremal has `Ȧ = −|k|A` while `S` grows with `|A|`.
pub fn functional_derivative_check<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    h: &[G::Alg],
    eps: f64,
) -> Result<DerivativeCheck> {
    if !(1e-4..=1e-2).contains(&eps) {
        return Err(Error::InvalidArgument(format!("eps {eps} outside [1e-4, 1e-2]")));
    }
    if h.len() != bd.links().len() {
        return Err(Error::InvalidArgument("perturbation size mismatch".into()));
    }
    if h.iter().any(|v| !(v.max_abs() <= 0.1)) {
        return Err(Error::InvalidArgument("perturbation exceeds 0.1".into()));
    }
    let centre = minimize(bd, geom, cfg, None)?;
    require_converged(&centre)?;
    let a = geom.a;
    let analytic = -a.powi(3) * centre.e.iter().zip(h).map(|(e, v)| e.dot(v)).sum::<f64>();
    let side = |sign: f64| -> Result<f64> {
        let b = bd.perturb(h, sign * eps * a)?;
        let warm = centre.final_field.clone().with_boundary(&b)?;
        let r = minimize(&b, geom, cfg, Some(&warm))?;
        require_converged(&r)?;
        Ok(r.s)
    };
    let numeric = (side(1.0)? - side(-1.0)?) / (2.0 * eps);
    let rel_gap = (numeric - analytic).abs() / analytic.abs().max(EPS_FLOOR);
    Ok(DerivativeCheck { numeric, analytic, rel_gap, s: centre.s })
}

fn require_converged<G: LieGroup>(r: &MinimizeReport<G>) -> Result<()> {
    if r.converged {
        Ok(())
    } else {
        Err(Error::NonConvergence(format!("gradient {:.3e} after {} iterations", r.grad_norm, r.iterations)))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DecayFit {
    /// Log-log slope of the shell maxima of `|F|`.
    pub p_f: f64,
    /// Log-log slope of the shell maxima of `|A|` (link logs over `a`).
    pub p_a: f64,
    /// `(r, max |F|, max |A|)` per shell used in the fit.
    pub shells: Vec<(f64, f64, f64)>,
    pub centroid: [f64; 3],
}

/// Weighted circular mean of the datum's `|log U|²` per axis.
fn datum_centroid<G: LieGroup>(bd: &BoundaryData<G>) -> Result<[f64; 3]> {
    let g = bd.geometry();
    let mut cs = [(0.0f64, 0.0f64); 3];
    let mut total = 0.0;
    for x in 0..g.volume() {
        let w: f64 = (1..4).map(|i| bd.link(x, i).log().map(|l| l.norm_sq())).sum::<Result<f64>>()?;
        total += w;
        let c = g.coords(x);
        for ax in 0..3 {
            let th = 2.0 * std::f64::consts::PI * c[ax] as f64 / g.dims[ax] as f64;
            cs[ax].0 += w * th.cos();
            cs[ax].1 += w * th.sin();
        }
    }
    if total == 0.0 {
        return Err(Error::DiagnosticUnavailable("datum is flat".into()));
    }
    Ok(std::array::from_fn(|ax| {
        let th = cs[ax].1.atan2(cs[ax].0).rem_euclid(2.0 * std::f64::consts::PI);
        th * g.dims[ax] as f64 / (2.0 * std::f64::consts::PI)
    }))
}

fn fit_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>() / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>()
}

/// Fits the fall-off of `|F|` and `|A|` with distance from the datum.
///
/// Distance is measured in the half-space from the datum's centroid on
/// the `t = 0` slice; shells of width `a/2` between 25% and 75% of the
/// box radius (half the smallest spatial extent) are kept.
pub fn decay_diagnostic<G: LieGroup>(report: &MinimizeReport<G>) -> Result<DecayFit> {
    let f = &report.final_field;
    let geom = *f.geometry();
    let sg: SliceGeometry = geom.slice_geometry();
    let centroid = datum_centroid(&f.slice(0))?;
    let radius = *sg.dims.iter().min().expect("three dims") as f64 * geom.a / 2.0;
    let (r_lo, r_hi) = (0.25 * radius, 0.75 * radius);
    let width = geom.a / 2.0;
    let n_shells = ((r_hi - r_lo) / width).floor() as usize;
    let mut max_f = vec![0.0f64; n_shells];
    let mut max_a = vec![0.0f64; n_shells];
    let logs = plaquette_logs(f, Exec::default())?;
    let inv_a2 = 1.0 / (geom.a * geom.a);
    for s in 0..geom.volume() {
        let c = geom.coords(s);
        let d = sg.min_image(centroid, [c[1] as f64, c[2] as f64, c[3] as f64]);
        let r = (c[0] as f64 * c[0] as f64 + d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt() * geom.a;
        if r < r_lo || r >= r_lo + n_shells as f64 * width {
            continue;
        }
        let k = ((r - r_lo) / width) as usize;
        let fs = logs[s * 6..s * 6 + 6].iter().map(|l| l.norm_sq()).sum::<f64>().sqrt() * inv_a2;
        let mut am: f64 = 0.0;
        for mu in 0..4 {
            am = am.max(f.link(s, mu).log()?.norm() / geom.a);
        }
        max_f[k] = max_f[k].max(fs);
        max_a[k] = max_a[k].max(am);
    }
    let shells: Vec<(f64, f64, f64)> = (0..n_shells)
        .filter(|&k| max_f[k] > 0.0 && max_a[k] > 0.0)
        .map(|k| (r_lo + (k as f64 + 0.5) * width, max_f[k], max_a[k]))
        .collect();
    if shells.len() < 4 {
        return Err(Error::DiagnosticUnavailable(format!("{} nonzero shells", shells.len())));
    }
    let pf: Vec<(f64, f64)> = shells.iter().map(|s| (s.0.ln(), s.1.ln())).collect();
    let pa: Vec<(f64, f64)> = shells.iter().map(|s| (s.0.ln(), s.2.ln())).collect();
    Ok(DecayFit { p_f: fit_slope(&pf), p_a: fit_slope(&pa), shells, centroid })
}
