//! Divergence gauge on a spatial slice.
//!
//! Minimizes `Φ = ½ Σ |log U_i(x)|²` over slice gauge transformations.
//! Rotating the frame at `x` by `e^{εX}` changes `Φ` by `−ε a ⟨div(x), X⟩`
//! with `div(x) = Σ_i (log U_i(x) − log U_i(x−î))/a`, so stationary points
//! are exactly the divergence-free configurations. Sites are relaxed in
//! even/odd order with an over-relaxed local step.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::lattice::BoundaryData;
use crate::lie::{Algebra, LieGroup};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GaugeFixConfig {
    /// Target `‖div‖∞`.
    pub tol: f64,
    pub max_sweeps: usize,
    /// Over-relaxation factor in `(0, 2)`.
    pub omega: f64,
}

impl Default for GaugeFixConfig {
    fn default() -> Self {
        GaugeFixConfig { tol: 1e-8, max_sweeps: 20_000, omega: 1.7 }
    }
}

#[derive(Debug, Clone)]
pub struct GaugeFixResult<G: LieGroup> {
    pub fixed: BoundaryData<G>,
    /// `fixed = bd` transformed by this function.
    pub transform: Vec<G>,
    pub sweeps: usize,
    pub divergence: f64,
}

fn divergence_at<G: LieGroup>(bd: &BoundaryData<G>, logs: &[G::Alg], x: usize) -> G::Alg {
    let g = bd.geometry();
    let mut d = G::Alg::zero();
    for i in 0..3 {
        d += logs[x * 3 + i] - logs[g.shift(x, i, -1) * 3 + i];
    }
    d
}

/// `‖div‖∞` of the link logs, in units of `1/a`.
pub fn max_divergence<G: LieGroup>(bd: &BoundaryData<G>) -> Result<f64> {
    let logs: Vec<G::Alg> = bd.links().iter().map(|u| u.log()).collect::<Result<_>>()?;
    let a = bd.geometry().a;
    Ok((0..bd.geometry().volume()).map(|x| divergence_at(bd, &logs, x).max_abs()).fold(0.0, f64::max) / a)
}

pub fn fix_spatial_gauge<G: LieGroup>(bd: &BoundaryData<G>, cfg: &GaugeFixConfig) -> Result<GaugeFixResult<G>> {
    if !(cfg.omega > 0.0 && cfg.omega < 2.0) || !(cfg.tol > 0.0) {
        return Err(Error::InvalidArgument("gauge fixing needs tol > 0 and omega in (0, 2)".into()));
    }
    let g = *bd.geometry();
    let mut work = bd.clone();
    let mut logs: Vec<G::Alg> = work.links().iter().map(|u| u.log()).collect::<Result<_>>()?;
    let mut transform = vec![G::identity(); g.volume()];
    let parity = |x: usize| g.coords(x).iter().sum::<usize>() % 2;
    let mut sweeps = 0;
    let mut div = max_divergence(&work)?;
    while div > cfg.tol && sweeps < cfg.max_sweeps {
        for colour in 0..2 {
            for x in (0..g.volume()).filter(|&x| parity(x) == colour) {
                let step = divergence_at(&work, &logs, x) * (cfg.omega / 6.0);
                let h = G::exp(&step);
                let hi = h.inverse();
                for i in 1..4 {
                    let u = hi.mul(&work.link(x, i)).renormalize();
                    work.set_link(x, i, u);
                    logs[x * 3 + i - 1] = u.log()?;
                    let xm = g.shift(x, i - 1, -1);
                    let v = work.link(xm, i).mul(&h).renormalize();
                    work.set_link(xm, i, v);
                    logs[xm * 3 + i - 1] = v.log()?;
                }
                transform[x] = transform[x].mul(&h).renormalize();
            }
        }
        sweeps += 1;
        div = max_divergence(&work)?;
    }
    let fixed = bd.gauge_transform(&transform)?;
    let divergence = max_divergence(&fixed)?;
    if divergence > cfg.tol {
        return Err(Error::NonConvergence(format!(
            "divergence {divergence:.3e} after {sweeps} sweeps"
        )));
    }
    Ok(GaugeFixResult { fixed, transform, sweeps, divergence })
}
