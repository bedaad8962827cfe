//! Discrete Dirichlet problem: minimize the lattice action over the links
//! off the `t = 0` slice, with the `t = 0` spatial links held fixed.
//!
//! Descent works in left-trivialized coordinates: a step along `D`
//! replaces every free link by `exp(η D_ℓ) U_ℓ`. Directions come from
//! limited-memory BFGS on the algebra coordinates (or plain steepest
//! descent), and every step passes an Armijo backtracking test, so the
//! recorded action sequence strictly decreases.

mod diagnostics;
mod gauge_fix;

pub use diagnostics::{
    decay_diagnostic, functional_derivative_check, gauss_residual, hje_residual, DecayFit,
    DerivativeCheck, HjeResidual,
};
pub use gauge_fix::{fix_spatial_gauge, GaugeFixConfig, GaugeFixResult};

use std::collections::VecDeque;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lattice::{
    action_and_gradient, action_density, electric_from_gradient, plaquette_logs, BoundaryData,
    GaugeField, Geometry,
};
use crate::lie::{Algebra, LieGroup};
use crate::par::{self, Exec};

/// Floor used in relative gaps.
pub const EPS_FLOOR: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Lbfgs,
    Steepest,
}

/// Initial field used when no warm start is given.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Start {
    /// Datum repeated on every slice; see [`extended_start`].
    #[default]
    Extended,
    /// Datum damped toward the identity; see [`damped_start`].
    Damped,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MinimizerConfig {
    pub max_iters: usize,
    /// Stop when the largest free-link gradient coefficient is below this.
    pub grad_tol: f64,
    /// First trial step of steepest descent.
    pub initial_step: f64,
    /// Step shrink factor in backtracking.
    pub backtrack: f64,
    /// Sufficient-decrease constant.
    pub armijo: f64,
    pub weyl_gauge: bool,
    /// Seed for randomized starts.
    pub seed: u64,
    pub direction: Direction,
    /// Number of stored correction pairs for limited-memory BFGS.
    pub memory: usize,
    /// Largest algebra norm of a single link update.
    pub max_link_step: f64,
    pub start: Start,
    #[serde(skip)]
    pub exec: Exec,
}

impl Default for MinimizerConfig {
    fn default() -> Self {
        MinimizerConfig {
            max_iters: 20_000,
            grad_tol: 1e-9,
            initial_step: 0.1,
            backtrack: 0.5,
            armijo: 1e-4,
            weyl_gauge: true,
            seed: 0,
            direction: Direction::Lbfgs,
            memory: 12,
            max_link_step: 0.5,
            start: Start::Extended,
            exec: Exec::default(),
        }
    }
}

impl MinimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidArgument(m.to_string()));
        if !(self.grad_tol > 0.0) {
            return bad("grad_tol must be > 0");
        }
        if !(self.initial_step > 0.0) {
            return bad("initial_step must be > 0");
        }
        if !(self.backtrack > 0.0 && self.backtrack < 1.0) {
            return bad("backtrack must lie in (0, 1)");
        }
        if !(self.armijo > 0.0 && self.armijo < 1.0) {
            return bad("armijo must lie in (0, 1)");
        }
        if !(self.max_link_step > 0.0 && self.max_link_step < 3.0) {
            return bad("max_link_step must lie in (0, 3)");
        }
        if self.direction == Direction::Lbfgs && self.memory == 0 {
            return bad("memory must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct MinimizeReport<G: LieGroup> {
    pub final_field: GaugeField<G>,
    /// Principal functional: the action of `final_field`.
    pub s: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    /// `(iteration, S)` at the start and after every accepted step; later
    /// entries are the initial action plus the accumulated decrements.
    pub action_trace: Vec<(usize, f64)>,
    /// Change of the action at every accepted step, summed site by site
    /// so that it resolves decreases far below the rounding of `S`.
    pub decrements: Vec<f64>,
    /// Momentum on the `t = 0` slice, `e[x·3 + (i−1)]`.
    pub e: Vec<G::Alg>,
    pub converged: bool,
    /// Why the iteration stopped.
    pub stop: StopReason,
    pub grad_tol: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    GradientTolerance,
    MaxIterations,
    LineSearchFailed,
}

impl<G: LieGroup> MinimizeReport<G> {
    pub fn to_json(&self) -> Value {
        let g = self.final_field.geometry();
        let flat: Vec<f64> =
            self.e.iter().flat_map(|v| (0..G::Alg::DIM).map(move |c| v.coeff(c))).collect();
        json!({
            "group": G::KIND.name(),
            "geometry": g,
            "S": self.s,
            "grad_norm": self.grad_norm,
            "grad_tol": self.grad_tol,
            "iterations": self.iterations,
            "converged": self.converged,
            "stop": self.stop,
            "action_trace": self.action_trace,
            "decrements": self.decrements,
            "E": {
                "shape": [g.n_x, g.n_y, g.n_z, 3, G::Alg::DIM],
                "data": flat,
            },
        })
    }
}

/// Mask of links varied by the minimizer.
fn free_links(geom: &Geometry, weyl: bool) -> Vec<bool> {
    (0..geom.volume() * 4)
        .map(|l| {
            let (s, mu) = (l / 4, l % 4);
            let t = geom.time_of(s);
            if mu == 0 {
                !weyl && t + 1 < geom.n_t
            } else {
                t > 0
            }
        })
        .collect()
}

/// Datum extended constant in time and damped toward the identity with
/// `e^{−t/τ}`, `τ = n_t a / 4`; time links are the identity.
///
/// Not gauge covariant: for data far from the identity (a random gauge
/// rotation of a small datum, say) the damping can trap the descent in
/// a different local minimum, notably for U(1).
pub fn damped_start<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry) -> Result<GaugeField<G>> {
    bd.check_compatible(geom)?;
    let logs: Vec<G::Alg> = bd.links().iter().map(|u| u.log()).collect::<Result<_>>()?;
    let mut f = GaugeField::identity(*geom);
    let vs = geom.spatial_volume();
    for t in 1..geom.n_t {
        let damp = (-4.0 * t as f64 / geom.n_t as f64).exp();
        for x in 0..vs {
            for i in 1..4 {
                f.set_link(t * vs + x, i, G::exp(&(logs[x * 3 + i - 1] * damp)));
            }
        }
    }
    f.with_boundary(bd)
}

/// Datum copied onto every time slice, time links the identity.
///
/// A slice gauge transformation of the datum, extended constant in time,
/// maps this start to the start of the transformed datum, so the whole
/// descent is gauge covariant.
pub fn extended_start<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry) -> Result<GaugeField<G>> {
    bd.check_compatible(geom)?;
    let mut f = GaugeField::identity(*geom);
    let vs = geom.spatial_volume();
    for t in 0..geom.n_t {
        for x in 0..vs {
            for i in 1..4 {
                f.set_link(t * vs + x, i, bd.link(x, i));
            }
        }
    }
    Ok(f)
}

pub fn cold_start<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry, start: Start) -> Result<GaugeField<G>> {
    match start {
        Start::Extended => extended_start(bd, geom),
        Start::Damped => damped_start(bd, geom),
    }
}

/// Extended start with every free link rotated by a random algebra
/// element of norm scale `scale`.
pub fn random_start<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry, seed: u64, scale: f64, weyl: bool) -> Result<GaugeField<G>> {
    let mut f = extended_start(bd, geom)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mask = free_links(geom, weyl);
    for (l, u) in f.links_mut().iter_mut().enumerate() {
        if mask[l] {
            *u = G::exp(&G::random_alg(&mut rng, scale)).mul(u);
        }
    }
    Ok(f)
}

fn dot<A: Algebra>(exec: Exec, x: &[A], y: &[A]) -> f64 {
    par::sum(exec, x.len(), |i| x[i].dot(&y[i]))
}

fn max_abs<A: Algebra>(exec: Exec, x: &[A]) -> f64 {
    par::max(exec, x.len(), |i| x[i].max_abs())
}

struct History<A> {
    pairs: VecDeque<(Vec<A>, Vec<A>, f64)>,
    cap: usize,
}

impl<A: Algebra> History<A> {
    fn push(&mut self, s: Vec<A>, y: Vec<A>, sy: f64) {
        if self.pairs.len() == self.cap {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion: returns `−H g`.
    fn direction(&self, exec: Exec, g: &[A]) -> Vec<A> {
        let mut q = g.to_vec();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(exec, s, &q);
            par::for_each_mut(exec, &mut q, |i, v| *v -= y[i] * a);
            alpha.push(a);
        }
        if let Some((s, y, _)) = self.pairs.back() {
            let gamma = dot(exec, s, y) / dot(exec, y, y);
            par::for_each_mut(exec, &mut q, |_, v| *v = *v * gamma);
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.into_iter().rev()) {
            let b = rho * dot(exec, y, &q);
            par::for_each_mut(exec, &mut q, |i, v| *v += s[i] * (a - b));
        }
        par::for_each_mut(exec, &mut q, |_, v| *v = -*v);
        q
    }
}

fn retract<G: LieGroup>(field: &GaugeField<G>, d: &[G::Alg], eta: f64, exec: Exec) -> GaugeField<G> {
    let mut out = field.clone();
    let src = field.links();
    par::fill(exec, out.links_mut(), |l| {
        if d[l] == G::Alg::zero() {
            src[l]
        } else {
            G::exp(&(d[l] * eta)).mul(&src[l]).renormalize()
        }
    });
    out
}

/// Solves the Dirichlet problem for `bd` on `geom`.
///
/// A warm start must carry `bd` on its `t = 0` spatial links bit for bit,
/// and identity time links when `cfg.weyl_gauge` is set.
pub fn minimize<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    warm_start: Option<&GaugeField<G>>,
) -> Result<MinimizeReport<G>> {
    cfg.validate()?;
    bd.check_compatible(geom)?;
    let mut field = match warm_start {
        Some(w) => {
            if w.geometry() != geom {
                return Err(Error::InvalidArgument("warm start geometry differs".into()));
            }
            if w.slice(0) != *bd {
                return Err(Error::InvalidArgument("warm start does not carry the datum at t = 0".into()));
            }
            if cfg.weyl_gauge && !w.is_weyl() {
                return Err(Error::InvalidArgument("warm start is not in Weyl gauge".into()));
            }
            w.clone()
        }
        None => cold_start(bd, geom, cfg.start)?,
    };
    run(&mut field, cfg)
}

fn run<G: LieGroup>(field: &mut GaugeField<G>, cfg: &MinimizerConfig) -> Result<MinimizeReport<G>> {
    let exec = cfg.exec;
    let geom = *field.geometry();
    let mask = free_links(&geom, cfg.weyl_gauge);
    let masked = |grad: &[G::Alg]| -> Vec<G::Alg> {
        let mut g = grad.to_vec();
        par::for_each_mut(exec, &mut g, |l, v| {
            if !mask[l] {
                *v = G::Alg::zero();
            }
        });
        g
    };

    let mut ag = action_and_gradient(field, exec)?;
    let mut g = masked(&ag.grad);
    let mut s = ag.action;
    let mut trace = vec![(0usize, s)];
    let mut decrements = Vec::new();
    let mut history = History { pairs: VecDeque::new(), cap: cfg.memory.max(1) };
    let mut eta_sd = cfg.initial_step;
    let mut iter = 0usize;
    let mut fallback = false;

    let stop = loop {
        let gnorm = max_abs(exec, &g);
        if gnorm <= cfg.grad_tol {
            break StopReason::GradientTolerance;
        }
        if iter >= cfg.max_iters {
            break StopReason::MaxIterations;
        }
        let quasi = cfg.direction == Direction::Lbfgs && !fallback && !history.pairs.is_empty();
        let mut d = if quasi {
            history.direction(exec, &g)
        } else {
            g.iter().map(|v| -*v).collect()
        };
        let mut slope = dot(exec, &g, &d);
        if !(slope < 0.0) {
            history.pairs.clear();
            d = g.iter().map(|v| -*v).collect();
            slope = dot(exec, &g, &d);
        }
        let dmax = par::max(exec, d.len(), |i| d[i].norm());
        let mut eta = if quasi { 1.0 } else { eta_sd };
        if eta * dmax > cfg.max_link_step {
            eta = cfg.max_link_step / dmax;
        }

        let mut accepted = None;
        for _ in 0..80 {
            let trial = retract(field, &d, eta, exec);
            match plaquette_logs(&trial, exec) {
                Ok(logs) => {
                    let dens = action_density(&trial, &logs, exec);
                    let cur = &ag.density;
                    let delta = par::sum(exec, dens.len(), |i| dens[i] - cur[i]);
                    if delta < 0.0 && delta <= cfg.armijo * eta * slope {
                        accepted = Some((trial, delta));
                        break;
                    }
                    eta *= cfg.backtrack;
                }
                Err(Error::BranchCut { .. }) => eta *= cfg.backtrack,
                Err(e) => return Err(e),
            }
        }
        let Some((trial, delta)) = accepted else {
            if quasi || !history.pairs.is_empty() {
                // Retry once from steepest descent with a fresh memory.
                history.pairs.clear();
                fallback = true;
                continue;
            }
            break StopReason::LineSearchFailed;
        };
        fallback = false;
        iter += 1;
        if !quasi {
            eta_sd = (eta / cfg.backtrack).min(1e6);
        }
        *field = trial;
        s += delta;
        trace.push((iter, s));
        decrements.push(delta);
        let new_ag = action_and_gradient(field, exec)?;
        let new_g = masked(&new_ag.grad);
        if cfg.direction == Direction::Lbfgs {
            let step: Vec<G::Alg> = d.iter().map(|v| *v * eta).collect();
            let y: Vec<G::Alg> = new_g.iter().zip(&g).map(|(a, b)| *a - *b).collect();
            let sy = dot(exec, &step, &y);
            if sy > 1e-300 {
                history.push(step, y, sy);
            }
        }
        ag = new_ag;
        g = new_g;
    };

    let grad_norm = max_abs(exec, &g);
    let e = electric_from_gradient(field, &ag.grad);
    Ok(MinimizeReport {
        final_field: field.clone(),
        s: ag.action,
        grad_norm,
        iterations: iter,
        action_trace: trace,
        decrements,
        e,
        converged: stop == StopReason::GradientTolerance,
        stop,
        grad_tol: cfg.grad_tol,
    })
}

/// Report for `field` as it stands: action, gradient, momentum and the
/// convergence verdict at `cfg.grad_tol`, without taking any step.
pub fn evaluate<G: LieGroup>(field: &GaugeField<G>, cfg: &MinimizerConfig) -> Result<MinimizeReport<G>> {
    cfg.validate()?;
    if cfg.weyl_gauge && !field.is_weyl() {
        return Err(Error::InvalidArgument("field is not in Weyl gauge".into()));
    }
    let mut f = field.clone();
    run(&mut f, &MinimizerConfig { max_iters: 0, ..*cfg })
}

/// Principal functional `S(A)`; errors when the minimizer does not converge.
pub fn principal_functional<G: LieGroup>(bd: &BoundaryData<G>, geom: &Geometry, cfg: &MinimizerConfig) -> Result<f64> {
    let r = minimize(bd, geom, cfg, None)?;
    if !r.converged {
        return Err(Error::NonConvergence(format!(
            "gradient {:.3e} after {} iterations ({:?})",
            r.grad_norm, r.iterations, r.stop
        )));
    }
    Ok(r.s)
}

/// Minima from several randomized starts.
#[derive(Debug, Clone)]
pub struct MultiStartReport<G: LieGroup> {
    pub best: MinimizeReport<G>,
    /// `(seed, S, converged)` per start.
    pub runs: Vec<(u64, f64, bool)>,
    pub min: f64,
    /// `max S − min S` over converged runs.
    pub spread: f64,
}

/// Runs the minimizer from the cold start rotated by random algebra
/// elements of norm scale `scale`, one start per seed.
pub fn multistart<G: LieGroup>(
    bd: &BoundaryData<G>,
    geom: &Geometry,
    cfg: &MinimizerConfig,
    seeds: &[u64],
    scale: f64,
) -> Result<MultiStartReport<G>> {
    if seeds.is_empty() {
        return Err(Error::InvalidArgument("no seeds".into()));
    }
    let mut best: Option<MinimizeReport<G>> = None;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        cfg.validate()?;
        bd.check_compatible(geom)?;
        let mut start = random_start(bd, geom, seed, scale, cfg.weyl_gauge)?;
        let r = run(&mut start, cfg)?;
        runs.push((seed, r.s, r.converged));
        if best.as_ref().map_or(true, |b| r.s < b.s) {
            best = Some(r);
        }
    }
    let conv: Vec<f64> = runs.iter().filter(|r| r.2).map(|r| r.1).collect();
    let spread = if conv.is_empty() {
        f64::NAN
    } else {
        conv.iter().cloned().fold(f64::MIN, f64::max) - conv.iter().cloned().fold(f64::MAX, f64::min)
    };
    let best = best.expect("at least one seed");
    Ok(MultiStartReport { min: best.s, best, runs, spread })
}
