//! Plaquettes, the discrete action and its link gradient.
//!
//! Time-space plaquettes enter with weight one. The spatial curvature is
//! interpolated linearly in time between neighboring slices (transported
//! by the time link) and that interpolant is integrated exactly over each
//! time interval, so the magnetic energy of the interval `[t, t+1]` is
//! `(|L_t|² + ⟨L_t, W L_{t+1} W⁻¹⟩ + |L_{t+1}|²)/3` with `L = log P`.
//! The pairing term is averaged over the four corners of the plaquette,
//! each corner using its own time link `W`, which keeps the action
//! invariant under the lattice rotations in the nonabelian case.

use std::sync::Mutex;

use super::{GaugeField, Geometry};
use crate::error::{Error, Result};
use crate::lie::{Algebra, LieGroup};
use crate::par::{self, Exec};

/// Oriented planes `(µ, ν)`, `µ < ν`; the first three contain time.
pub const PLANES: [(usize, usize); 6] = [(0, 1), (0, 2), (0, 3), (1, 2), (1, 3), (2, 3)];

pub(crate) fn plane_index(mu: usize, nu: usize) -> usize {
    debug_assert!(mu < nu);
    match (mu, nu) {
        (0, 1) => 0,
        (0, 2) => 1,
        (0, 3) => 2,
        (1, 2) => 3,
        (1, 3) => 4,
        _ => 5,
    }
}

fn plane_valid(geom: &Geometry, t: usize, p: usize) -> bool {
    p >= 3 || t + 1 < geom.n_t
}

/// Number of time intervals touching slice `t`.
fn intervals(geom: &Geometry, t: usize) -> usize {
    (t > 0) as usize + (t + 1 < geom.n_t) as usize
}

/// `U_µ(n) U_ν(n+µ̂) U_µ(n+ν̂)⁻¹ U_ν(n)⁻¹`.
pub fn plaquette<G: LieGroup>(field: &GaugeField<G>, s: usize, mu: usize, nu: usize) -> Result<G> {
    let geom = field.geometry();
    if s >= geom.volume() || mu > 3 || nu > 3 {
        return Err(Error::InvalidArgument(format!("site {s} or direction ({mu},{nu}) out of range")));
    }
    let e_mu = geom
        .shift(s, mu, 1)
        .ok_or_else(|| Error::Boundary(format!("site {s} has no neighbor along {mu}")))?;
    let e_nu = geom
        .shift(s, nu, 1)
        .ok_or_else(|| Error::Boundary(format!("site {s} has no neighbor along {nu}")))?;
    Ok(raw_plaquette(field, s, mu, nu, e_mu, e_nu))
}

fn raw_plaquette<G: LieGroup>(
    field: &GaugeField<G>,
    s: usize,
    mu: usize,
    nu: usize,
    e_mu: usize,
    e_nu: usize,
) -> G {
    field
        .link(s, mu)
        .mul(&field.link(e_mu, nu))
        .mul(&field.link(e_nu, mu).inverse())
        .mul(&field.link(s, nu).inverse())
}

/// `log P` for every site and plane, `out[s·6 + p]`; zero where the
/// plaquette would leave the lattice.
pub fn plaquette_logs<G: LieGroup>(field: &GaugeField<G>, exec: Exec) -> Result<Vec<G::Alg>> {
    let geom = *field.geometry();
    let mut out = vec![G::Alg::zero(); geom.volume() * 6];
    let failure: Mutex<Option<Error>> = Mutex::new(None);
    par::for_each_chunk_mut(exec, &mut out, 6, |s, chunk| {
        let t = geom.time_of(s);
        for (p, &(mu, nu)) in PLANES.iter().enumerate() {
            if !plane_valid(&geom, t, p) {
                continue;
            }
            let e_mu = geom.shift(s, mu, 1).expect("valid plane");
            let e_nu = geom.shift(s, nu, 1).expect("valid plane");
            match raw_plaquette(field, s, mu, nu, e_mu, e_nu).log() {
                Ok(l) => chunk[p] = l,
                Err(e) => {
                    let mut f = failure.lock().unwrap_or_else(|p| p.into_inner());
                    if f.is_none() {
                        *f = Some(e);
                    }
                }
            }
        }
    });
    match failure.into_inner().unwrap_or_else(|p| p.into_inner()) {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Paths from the base corner of the spatial plaquette `(i, j)` at `s` to
/// its four corners, and the corner sites. Corner logs are `Ad⁻¹_h L`.
fn corner_frame<G: LieGroup>(field: &GaugeField<G>, s: usize, i: usize, j: usize) -> ([G; 4], [usize; 4]) {
    let geom = field.geometry();
    let si = geom.shift(s, i, 1).expect("spatial");
    let sj = geom.shift(s, j, 1).expect("spatial");
    let sij = geom.shift(si, j, 1).expect("spatial");
    let ui = field.link(s, i);
    let h = [G::identity(), ui, ui.mul(&field.link(si, j)), field.link(s, j)];
    (h, [s, si, sij, sj])
}

/// Corner-averaged pairing of the spatial plaquette logs at `s` and `s + 0̂`.
fn cross_term<G: LieGroup>(field: &GaugeField<G>, logs: &[G::Alg], s: usize, p: usize) -> f64 {
    let (i, j) = PLANES[p];
    let up = s + field.geometry().spatial_volume();
    let (h, c) = corner_frame(field, s, i, j);
    let (hu, _) = corner_frame(field, up, i, j);
    let (l, lu) = (logs[s * 6 + p], logs[up * 6 + p]);
    let mut acc = 0.0;
    for k in 0..4 {
        let x = h[k].adjoint_inv(&l);
        let y = field.link(c[k], 0).adjoint(&hu[k].adjoint_inv(&lu));
        acc += x.dot(&y);
    }
    acc / 24.0
}

/// Action density per site: the plaquettes based at the site, with the
/// time-interpolated magnetic terms of the interval above it.
pub fn action_density<G: LieGroup>(field: &GaugeField<G>, logs: &[G::Alg], exec: Exec) -> Vec<f64> {
    let geom = *field.geometry();
    let mut out = vec![0.0; geom.volume()];
    par::fill(exec, &mut out, |s| {
        let t = geom.time_of(s);
        let l = &logs[s * 6..s * 6 + 6];
        let mut acc = 0.0;
        if t + 1 < geom.n_t {
            acc += 0.5 * (l[0].norm_sq() + l[1].norm_sq() + l[2].norm_sq());
            for p in 3..6 {
                acc += cross_term(field, logs, s, p);
            }
        }
        let w_self = intervals(&geom, t) as f64 / 3.0;
        for lp in &l[3..6] {
            acc += 0.5 * w_self * lp.norm_sq();
        }
        acc
    });
    out
}

/// Action from precomputed plaquette logs.
pub fn action_from_logs<G: LieGroup>(field: &GaugeField<G>, logs: &[G::Alg], exec: Exec) -> f64 {
    let d = action_density(field, logs, exec);
    par::sum(exec, d.len(), |s| d[s])
}

/// Dimensionless lattice action `S ≥ 0`.
pub fn euclidean_action<G: LieGroup>(field: &GaugeField<G>, exec: Exec) -> Result<f64> {
    let logs = plaquette_logs(field, exec)?;
    Ok(action_from_logs(field, &logs, exec))
}

/// Action together with the left-trivialized gradient on every link:
/// `S(e^{εX_ℓ} U_ℓ) = S + ε Σ_ℓ ⟨grad_ℓ, X_ℓ⟩ + O(ε²)`.
#[derive(Debug, Clone)]
pub struct ActionGradient<A> {
    pub action: f64,
    /// Per-site terms summing to `action`.
    pub density: Vec<f64>,
    /// `grad[s·4 + µ]`.
    pub grad: Vec<A>,
}

/// Per-site intermediate of the gradient: plaquette gradients, and the
/// contributions of the corner transports of each spatial plaquette to
/// `U_i(s)`, `U_j(s+î)`, `U_j(s)` and to the four corner time links.
#[derive(Clone, Copy, Default)]
struct SiteTerms<A> {
    plaq: [A; 6],
    first: [A; 3],
    second: [A; 3],
    side: [A; 3],
    time: [[A; 4]; 3],
}

fn site_terms<G: LieGroup>(field: &GaugeField<G>, logs: &[G::Alg], s: usize) -> SiteTerms<G::Alg> {
    let geom = field.geometry();
    let vs = geom.spatial_volume();
    let t = geom.time_of(s);
    let l = &logs[s * 6..s * 6 + 6];
    let mut out = SiteTerms::<G::Alg>::default();
    if t + 1 < geom.n_t {
        out.plaq[..3].copy_from_slice(&l[..3]);
    }
    let w_self = intervals(geom, t) as f64 / 3.0;
    for p in 3..6 {
        let q = p - 3;
        let (i, j) = PLANES[p];
        let (h, c) = corner_frame(field, s, i, j);
        let ui = field.link(s, i);
        let mut m = G::Alg::zero();
        let spread = |k: usize, kk: G::Alg, out: &mut SiteTerms<G::Alg>| {
            let pg = G::bracket(&l[p], &kk) * (-1.0 / 24.0);
            match k {
                1 => out.first[q] += pg,
                2 => {
                    out.first[q] += pg;
                    out.second[q] += ui.adjoint_inv(&pg);
                }
                3 => out.side[q] += pg,
                _ => {}
            }
        };
        if t + 1 < geom.n_t {
            let up = s + vs;
            let (hu, _) = corner_frame(field, up, i, j);
            let lu = logs[up * 6 + p];
            for k in 0..4 {
                let w = field.link(c[k], 0);
                let wy = w.adjoint(&hu[k].adjoint_inv(&lu));
                let kk = h[k].adjoint(&wy);
                m += kk * 0.25;
                spread(k, kk, &mut out);
                out.time[q][k] = G::bracket(&wy, &h[k].adjoint_inv(&l[p])) * (1.0 / 24.0);
            }
        }
        if t > 0 {
            let lo = s - vs;
            let (hl, cl) = corner_frame(field, lo, i, j);
            let ll = logs[lo * 6 + p];
            for k in 0..4 {
                let w = field.link(cl[k], 0);
                let kk = h[k].adjoint(&w.adjoint_inv(&hl[k].adjoint_inv(&ll)));
                m += kk * 0.25;
                spread(k, kk, &mut out);
            }
        }
        out.plaq[p] = l[p] * w_self + G::dlog_transpose(&l[p], &m) * (1.0 / 6.0);
    }
    out
}

pub fn action_and_gradient<G: LieGroup>(
    field: &GaugeField<G>,
    exec: Exec,
) -> Result<ActionGradient<G::Alg>> {
    let geom = *field.geometry();
    let logs = plaquette_logs(field, exec)?;
    let density = action_density(field, &logs, exec);
    let action = par::sum(exec, density.len(), |s| density[s]);

    let mut terms = vec![SiteTerms::<G::Alg>::default(); geom.volume()];
    par::fill(exec, &mut terms, |s| site_terms(field, &logs, s));

    let mut grad = vec![G::Alg::zero(); geom.volume() * 4];
    par::for_each_chunk_mut(exec, &mut grad, 4, |s, out| {
        let t = geom.time_of(s);
        for (mu, slot) in out.iter_mut().enumerate() {
            let mut g = G::Alg::zero();
            for nu in 0..4 {
                if nu == mu {
                    continue;
                }
                let back = geom.shift(s, nu, -1);
                if mu < nu {
                    let p = plane_index(mu, nu);
                    if plane_valid(&geom, t, p) {
                        g += terms[s].plaq[p];
                    }
                    if let Some(m) = back {
                        if plane_valid(&geom, geom.time_of(m), p) {
                            let pm = G::exp(&logs[m * 6 + p]);
                            let gm = terms[m].plaq[p];
                            g -= field.link(m, nu).adjoint_inv(&pm.adjoint_inv(&gm));
                        }
                    }
                    if mu > 0 {
                        g += terms[s].first[p - 3];
                    }
                } else {
                    let p = plane_index(nu, mu);
                    if let Some(m) = back {
                        if plane_valid(&geom, geom.time_of(m), p) {
                            g += field.link(m, nu).adjoint_inv(&terms[m].plaq[p]);
                        }
                        if nu > 0 {
                            g += terms[m].second[p - 3];
                        }
                    }
                    if plane_valid(&geom, t, p) {
                        let ps = G::exp(&logs[s * 6 + p]);
                        g -= ps.adjoint_inv(&terms[s].plaq[p]);
                    }
                    if nu > 0 {
                        g += terms[s].side[p - 3];
                    }
                }
            }
            if mu == 0 && t + 1 < geom.n_t {
                for p in 3..6 {
                    let (i, j) = PLANES[p];
                    let si = geom.shift(s, i, -1).expect("spatial");
                    let sj = geom.shift(s, j, -1).expect("spatial");
                    let sij = geom.shift(si, j, -1).expect("spatial");
                    let tw = &terms;
                    g += tw[s].time[p - 3][0] + tw[si].time[p - 3][1] + tw[sij].time[p - 3][2] + tw[sj].time[p - 3][3];
                }
            }
            *slot = g;
        }
    });
    Ok(ActionGradient { action, density, grad })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::random_gauge;
    use crate::lie::{Su2, U1Alg, U1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn geom() -> Geometry {
        Geometry::new(4, 4, 4, 4, 1.0).unwrap()
    }

    fn random_field<G: LieGroup>(seed: u64, scale: f64) -> GaugeField<G> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = Geometry::new(5, 4, 4, 4, 1.0).unwrap();
        let links = (0..g.volume() * 4).map(|_| G::exp(&G::random_alg(&mut rng, scale))).collect();
        GaugeField::from_links(g, links).unwrap()
    }

    #[test]
    fn identity_field_has_identity_plaquettes_and_zero_action() {
        let f = GaugeField::<Su2>::identity(geom());
        assert_eq!(plaquette(&f, 0, 1, 2).unwrap(), Su2::identity());
        assert_eq!(euclidean_action(&f, Exec::Sequential).unwrap(), 0.0);
    }

    #[test]
    fn plaquette_past_open_edge_is_a_boundary_error() {
        let f = GaugeField::<U1>::identity(geom());
        let last = f.geometry().index([3, 0, 0, 0]);
        assert!(matches!(plaquette(&f, last, 0, 1), Err(Error::Boundary(_))));
        assert!(plaquette(&f, last, 1, 2).is_ok());
    }

    #[test]
    fn u1_plaquette_phase_is_the_oriented_sum() {
        let f = random_field::<U1>(3, 0.3);
        let g = *f.geometry();
        for s in [0, 17, 99, 200] {
            for (mu, nu) in PLANES {
                let (em, en) = (g.shift(s, mu, 1).unwrap(), g.shift(s, nu, 1).unwrap());
                let direct = f.link(s, mu).phase() + f.link(em, nu).phase()
                    - f.link(en, mu).phase()
                    - f.link(s, nu).phase();
                let p = plaquette(&f, s, mu, nu).unwrap().log().unwrap().0;
                assert!((p - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn pure_gauge_is_flat() {
        let g = geom();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let gf: Vec<Su2> = random_gauge(&mut rng, g.volume());
        let f = GaugeField::identity(g).gauge_transform(&gf).unwrap();
        for (mu, nu) in PLANES {
            let p = plaquette(&f, 0, mu, nu).unwrap();
            assert!(p.distance_to(&Su2::identity()) < 1e-12);
        }
        assert!(euclidean_action(&f, Exec::Sequential).unwrap() < 1e-24);
    }

    #[test]
    fn isolated_u1_plaquette_contribution_matches_direct_sum() {
        // A single spatial link excites four spatial plaquettes and, through
        // the interpolation weights, their neighbors in time.
        let g = Geometry::new(6, 4, 4, 4, 1.0).unwrap();
        let mut f = GaugeField::<U1>::identity(g);
        let phi = 0.2;
        let s = g.index([2, 1, 1, 1]);
        f.set_link(s, 1, U1::exp(&U1Alg(phi)));
        // Time-space plaquettes (0,1) at t=1 and t=2 see the link; spatial
        // (1,2) and (1,3) at t=2 see it twice each with weight 2/3.
        let expected = 0.5 * phi * phi * 2.0 + 0.5 * (2.0 / 3.0) * phi * phi * 4.0;
        let got = euclidean_action(&f, Exec::Sequential).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    fn check_gradient<G: LieGroup>(seed: u64) {
        let f = random_field::<G>(seed, 0.4);
        let ag = action_and_gradient(&f, Exec::Sequential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
        let dirs: Vec<G::Alg> = (0..f.links().len()).map(|_| G::random_alg(&mut rng, 1.0)).collect();
        let eps = 1e-5;
        let shifted = |sign: f64| {
            let mut h = f.clone();
            for (u, d) in h.links_mut().iter_mut().zip(&dirs) {
                *u = G::exp(&(*d * (sign * eps))).mul(u);
            }
            euclidean_action(&h, Exec::Sequential).unwrap()
        };
        let numeric = (shifted(1.0) - shifted(-1.0)) / (2.0 * eps);
        let analytic: f64 = ag.grad.iter().zip(&dirs).map(|(g, d)| g.dot(d)).sum();
        assert!(
            (numeric - analytic).abs() <= 1e-6 * analytic.abs().max(1.0),
            "{numeric} vs {analytic}"
        );
    }

    #[test]
    fn gradient_matches_finite_difference_su2() {
        check_gradient::<Su2>(11);
        check_gradient::<Su2>(12);
    }

    #[test]
    fn gradient_matches_finite_difference_u1() {
        check_gradient::<U1>(13);
    }

    #[test]
    fn gradient_per_link_matches_finite_difference() {
        let f = random_field::<Su2>(21, 0.5);
        let g = *f.geometry();
        let ag = action_and_gradient(&f, Exec::Sequential).unwrap();
        let eps = 1e-6;
        for &(c, mu) in &[([0, 1, 2, 3], 1), ([1, 0, 0, 0], 0), ([3, 2, 1, 0], 0), ([4, 3, 3, 3], 2)] {
            let s = g.index(c);
            for a in 0..3 {
                let mut e = [0.0; 3];
                e[a] = 1.0;
                let x = <Su2 as LieGroup>::Alg::from_coeffs(&e);
                let at = |sign: f64| {
                    let mut h = f.clone();
                    h.set_link(s, mu, Su2::exp(&(x * (sign * eps))).mul(&f.link(s, mu)));
                    euclidean_action(&h, Exec::Sequential).unwrap()
                };
                let numeric = (at(1.0) - at(-1.0)) / (2.0 * eps);
                assert!((numeric - ag.grad[s * 4 + mu].coeff(a)).abs() < 1e-7);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree_bitwise() {
        let f = random_field::<Su2>(31, 0.5);
        let a = action_and_gradient(&f, Exec::Sequential).unwrap();
        let b = action_and_gradient(&f, Exec::Parallel).unwrap();
        assert_eq!(a.action.to_bits(), b.action.to_bits());
        assert_eq!(a.grad, b.grad);
    }

    #[test]
    fn gauge_invariance_of_action() {
        let f = random_field::<Su2>(41, 0.6);
        let s0 = euclidean_action(&f, Exec::Sequential).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            let gf: Vec<Su2> = random_gauge(&mut rng, f.geometry().volume());
            let s1 = euclidean_action(&f.gauge_transform(&gf).unwrap(), Exec::Sequential).unwrap();
            assert!((s1 - s0).abs() <= 1e-12 * s0);
        }
    }

    #[test]
    fn u1_small_field_action_scales_quadratically() {
        let f = random_field::<U1>(51, 1.0);
        let logs: Vec<f64> = f.links().iter().map(|u| u.phase()).collect();
        let eps = [1e-3, 1e-2, 1e-1];
        let pts: Vec<(f64, f64)> = eps
            .iter()
            .map(|&e| {
                let links = logs.iter().map(|&p| U1::exp(&U1Alg(e * p))).collect();
                let h = GaugeField::from_links(*f.geometry(), links).unwrap();
                (e.ln(), euclidean_action(&h, Exec::Sequential).unwrap().ln())
            })
            .collect();
        let n = pts.len() as f64;
        let (mx, my) = (pts.iter().map(|p| p.0).sum::<f64>() / n, pts.iter().map(|p| p.1).sum::<f64>() / n);
        let slope = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum::<f64>()
            / pts.iter().map(|p| (p.0 - mx).powi(2)).sum::<f64>();
        assert!((slope - 2.0).abs() <= 0.01, "slope {slope}");
    }
}
