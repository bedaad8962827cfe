//! Pointwise field strength, magnetic and electric fields.
//!
//! Slice arrays are laid out as `out[x·3 + (i−1)]` for spatial site `x`
//! and direction `i ∈ {1, 2, 3}`.

use super::action::action_and_gradient;
use super::{BoundaryData, GaugeField};
use crate::error::{Error, Result};
use crate::lie::{Algebra, LieGroup};
use crate::par::Exec;

/// Product along a closed path of unit steps `(direction, ±1)` from `s`;
/// `None` if the path leaves the lattice in time.
fn path_product<G: LieGroup>(field: &GaugeField<G>, s: usize, steps: &[(usize, isize)]) -> Option<G> {
    let geom = field.geometry();
    let mut x = s;
    let mut u = G::identity();
    for &(d, sign) in steps {
        if sign > 0 {
            let next = geom.shift(x, d, 1)?;
            u = u.mul(&field.link(x, d));
            x = next;
        } else {
            x = geom.shift(x, d, -1)?;
            u = u.mul(&field.link(x, d).inverse());
        }
    }
    Some(u)
}

/// Clover-averaged `F_{µν}(n)` in lattice units of inverse area: the mean
/// of the logs of the available leaves around `n`, divided by `a²`.
pub fn field_strength<G: LieGroup>(field: &GaugeField<G>, s: usize, mu: usize, nu: usize) -> Result<G::Alg> {
    let geom = field.geometry();
    if s >= geom.volume() || mu > 3 || nu > 3 {
        return Err(Error::InvalidArgument(format!("site {s} or plane ({mu},{nu}) out of range")));
    }
    if mu == nu {
        return Ok(G::Alg::zero());
    }
    let leaves = [
        [(mu, 1), (nu, 1), (mu, -1), (nu, -1)],
        [(nu, 1), (mu, -1), (nu, -1), (mu, 1)],
        [(mu, -1), (nu, -1), (mu, 1), (nu, 1)],
        [(nu, -1), (mu, 1), (nu, 1), (mu, -1)],
    ];
    let mut acc = G::Alg::zero();
    let mut count = 0usize;
    for leaf in &leaves {
        if let Some(q) = path_product(field, s, leaf) {
            acc += q.log()?;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::Boundary(format!("no plaquette around site {s} in plane ({mu},{nu})")));
    }
    Ok(acc * (1.0 / (count as f64 * geom.a * geom.a)))
}

fn check_slice<G: LieGroup>(field: &GaugeField<G>, t: usize) -> Result<()> {
    if t >= field.geometry().n_t {
        return Err(Error::Boundary(format!("time slice {t} out of range")));
    }
    Ok(())
}

/// `B^i = ½ ε^{ijk} F̂_{jk}` on slice `t`, from the clover field strength.
pub fn magnetic_field<G: LieGroup>(field: &GaugeField<G>, t: usize) -> Result<Vec<G::Alg>> {
    check_slice(field, t)?;
    let geom = field.geometry();
    let mut out = Vec::with_capacity(geom.spatial_volume() * 3);
    for x in 0..geom.spatial_volume() {
        let s = geom.slice_site(t, x);
        out.push(field_strength(field, s, 2, 3)?);
        out.push(field_strength(field, s, 3, 1)?);
        out.push(field_strength(field, s, 1, 2)?);
    }
    Ok(out)
}

/// `B^i = ½ ε^{ijk} log P_{jk} / a²` from the forward plaquettes of slice `t`.
pub fn plaquette_magnetic_field<G: LieGroup>(field: &GaugeField<G>, t: usize) -> Result<Vec<G::Alg>> {
    check_slice(field, t)?;
    field.slice(t).plaquette_magnetic_field()
}

impl<G: LieGroup> BoundaryData<G> {
    /// Forward-plaquette magnetic field of the slice.
    pub fn plaquette_magnetic_field(&self) -> Result<Vec<G::Alg>> {
        let g = self.geom;
        let inv_a2 = 1.0 / (g.a * g.a);
        let plaq = |x: usize, i: usize, j: usize| -> Result<G::Alg> {
            let xi = g.shift(x, i - 1, 1);
            let xj = g.shift(x, j - 1, 1);
            let p = self
                .link(x, i)
                .mul(&self.link(xi, j))
                .mul(&self.link(xj, i).inverse())
                .mul(&self.link(x, j).inverse());
            Ok(p.log()? * inv_a2)
        };
        let mut out = Vec::with_capacity(g.volume() * 3);
        for x in 0..g.volume() {
            out.push(plaq(x, 2, 3)?);
            out.push(-plaq(x, 1, 3)?);
            out.push(plaq(x, 1, 2)?);
        }
        Ok(out)
    }
}

fn require_weyl<G: LieGroup>(field: &GaugeField<G>) -> Result<()> {
    if !field.is_weyl() {
        return Err(Error::InvalidArgument("electric field requires time links = identity".into()));
    }
    Ok(())
}

/// Momentum conjugate to the `t = 0` links: `E_i(x) = −(1/a²)·∂S/∂U_i(0,x)`.
///
/// To leading order this is the forward time difference of the link logs;
/// the first slab's magnetic energy adds an `O(a)` correction that makes
/// `δS = −Σ a³⟨E, δA⟩` exact for the discrete action.
pub fn electric_field<G: LieGroup>(field: &GaugeField<G>, exec: Exec) -> Result<Vec<G::Alg>> {
    require_weyl(field)?;
    let ag = action_and_gradient(field, exec)?;
    Ok(electric_from_gradient(field, &ag.grad))
}

pub(crate) fn electric_from_gradient<G: LieGroup>(field: &GaugeField<G>, grad: &[G::Alg]) -> Vec<G::Alg> {
    let geom = field.geometry();
    let scale = -1.0 / (geom.a * geom.a);
    let mut out = Vec::with_capacity(geom.spatial_volume() * 3);
    for x in 0..geom.spatial_volume() {
        for i in 1..4 {
            out.push(grad[x * 4 + i] * scale);
        }
    }
    out
}

/// Plain one-sided difference `(log U_i(a, x) − log U_i(0, x))/a`.
pub fn electric_field_forward<G: LieGroup>(field: &GaugeField<G>) -> Result<Vec<G::Alg>> {
    require_weyl(field)?;
    let geom = field.geometry();
    let vs = geom.spatial_volume();
    let mut out = Vec::with_capacity(vs * 3);
    for x in 0..vs {
        for i in 1..4 {
            let d = field.link(x + vs, i).log()? - field.link(x, i).log()?;
            out.push(d * (1.0 / geom.a));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Geometry;
    use crate::lie::{Su2, U1Alg, U1};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    #[test]
    fn flat_field_has_zero_strength() {
        let f = GaugeField::<Su2>::identity(Geometry::new(4, 4, 4, 4, 0.5).unwrap());
        assert_eq!(field_strength(&f, 10, 0, 2).unwrap(), Default::default());
        assert!(magnetic_field(&f, 0).unwrap().iter().all(|b| b.norm() == 0.0));
    }

    #[test]
    fn u1_plaquette_phase_spreads_a_quarter_to_each_corner() {
        let g = Geometry::new(6, 6, 6, 6, 0.5).unwrap();
        let mut f = GaugeField::<U1>::identity(g);
        let phi = 0.3;
        let n = [2, 2, 2, 2];
        f.set_link(g.index(n), 1, U1::exp(&U1Alg(phi)));
        // In plane (1,2) this link excites P_12(n) with phase +φ and
        // P_12(n−2̂) with phase −φ; every corner averages its four leaves.
        let f_at = |c: [usize; 4]| field_strength(&f, g.index(c), 1, 2).unwrap().0;
        let q = phi / (4.0 * g.a * g.a);
        assert!((f_at([2, 2, 3, 2]) - q).abs() < 1e-14);
        assert!((f_at([2, 3, 3, 2]) - q).abs() < 1e-14);
        assert!((f_at([2, 2, 1, 2]) + q).abs() < 1e-14);
        assert!((f_at([2, 3, 1, 2]) + q).abs() < 1e-14);
        assert!(f_at([2, 2, 2, 2]).abs() < 1e-14);
        assert!(f_at([2, 2, 4, 2]).abs() < 1e-14);
    }

    #[test]
    fn field_strength_is_antisymmetric() {
        let g = Geometry::new(5, 4, 4, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let links = (0..g.volume() * 4).map(|_| Su2::exp(&Su2::random_alg(&mut rng, 0.4))).collect();
        let f = GaugeField::from_links(g, links).unwrap();
        for s in [0, 77, 150, g.volume() - 1] {
            for mu in 0..4 {
                for nu in 0..4 {
                    let a = field_strength(&f, s, mu, nu).unwrap();
                    let b = field_strength(&f, s, nu, mu).unwrap();
                    assert!((a + b).max_abs() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn u1_plane_wave_magnetic_field_is_the_curl() {
        // A_y = ε sin(k x): B_z = ∂_x A_y = ε k cos(k x).
        let n = 32;
        let a = 0.25;
        let g = Geometry::new(4, n, 4, 4, a).unwrap();
        let k = 2.0 * PI / (n as f64 * a);
        let eps = 1e-3;
        let bd = BoundaryData::<U1>::from_algebra(g.slice_geometry(), |c, i| {
            let x = c[0] as f64 * a;
            // The y-link spans [y, y+a] at fixed x.
            U1Alg(if i == 2 { a * eps * (k * x).sin() } else { 0.0 })
        });
        let f = GaugeField::identity(g).with_boundary(&bd).unwrap();
        let b = magnetic_field(&f, 0).unwrap();
        let sg = g.slice_geometry();
        for x in 0..sg.volume() {
            let cx = sg.coords(x)[0] as f64 * a;
            let exact = eps * k * (k * cx).cos();
            // Clover is a centred difference at the site: O(a²) relative.
            assert!((b[x * 3 + 2].0 - exact).abs() <= 0.02 * eps * k, "{} vs {exact}", b[x * 3 + 2].0);
            assert!(b[x * 3].0.abs() < 1e-15 && b[x * 3 + 1].0.abs() < 1e-15);
        }
    }

    #[test]
    fn magnetic_field_flips_with_the_field() {
        let g = Geometry::new(4, 4, 4, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bd = BoundaryData::<U1>::from_algebra(g.slice_geometry(), |_, _| U1Alg(0.0));
        let phases: Vec<f64> = (0..bd.links().len()).map(|_| U1::random_alg(&mut rng, 0.2).0).collect();
        let mk = |sign: f64| {
            let sg = g.slice_geometry();
            let links = phases.iter().map(|&p| U1::exp(&U1Alg(sign * p))).collect();
            let b = BoundaryData::from_links(sg, links).unwrap();
            magnetic_field(&GaugeField::identity(g).with_boundary(&b).unwrap(), 0).unwrap()
        };
        for (p, m) in mk(1.0).iter().zip(mk(-1.0)) {
            assert!((p.0 + m.0).abs() < 1e-14);
        }
    }

    #[test]
    fn static_field_has_zero_forward_electric_field() {
        let g = Geometry::new(4, 4, 4, 4, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut f = GaugeField::<Su2>::identity(g);
        let vs = g.spatial_volume();
        for x in 0..vs {
            for i in 1..4 {
                let u = Su2::exp(&Su2::random_alg(&mut rng, 0.3));
                for t in 0..g.n_t {
                    f.set_link(t * vs + x, i, u);
                }
            }
        }
        assert!(electric_field_forward(&f).unwrap().iter().all(|e| e.norm() == 0.0));
    }

    #[test]
    fn electric_field_requires_weyl_gauge() {
        let g = Geometry::new(4, 4, 4, 4, 1.0).unwrap();
        let mut f = GaugeField::<U1>::identity(g);
        f.set_link(0, 0, U1::exp(&U1Alg(0.1)));
        assert!(electric_field(&f, Exec::Sequential).is_err());
        assert!(electric_field_forward(&f).is_err());
    }

    #[test]
    fn electric_field_is_linear_for_small_u1_data() {
        let g = Geometry::new(6, 4, 4, 4, 1.0).unwrap();
        let vs = g.spatial_volume();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mut draw = || -> Vec<f64> { (0..g.volume() * 4).map(|_| U1::random_alg(&mut rng, 1e-4).0).collect() };
        let (p, q) = (draw(), draw());
        let field = |ph: &dyn Fn(usize) -> f64| {
            let mut f = GaugeField::<U1>::identity(g);
            for s in 0..g.volume() {
                for mu in 1..4 {
                    f.set_link(s, mu, U1::exp(&U1Alg(ph(s * 4 + mu))));
                }
            }
            electric_field(&f, Exec::Sequential).unwrap()
        };
        let ep = field(&|i| p[i]);
        let eq = field(&|i| q[i]);
        let es = field(&|i| p[i] + q[i]);
        for j in 0..vs * 3 {
            assert!((es[j].0 - ep[j].0 - eq[j].0).abs() < 1e-8);
        }
    }
}
