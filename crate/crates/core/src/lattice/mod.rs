//! Link-variable discretization of connections on the half-space
//! `t ≥ 0` × periodic 3-torus.
//!
//! Sites are ordered `((t·n_x + x)·n_y + y)·n_z + z`; each site owns four
//! links `U_µ(n)`, `µ = 0` the time direction. Time is open: the slice
//! `t = 0` carries the Dirichlet datum and the last slice is free.

mod action;
pub mod datum;
mod fields;
mod io;
mod symmetry;

pub use action::{
    action_and_gradient, action_density, action_from_logs, euclidean_action, plaquette, plaquette_logs,
    ActionGradient, PLANES,
};
pub use fields::{
    electric_field, electric_field_forward, field_strength, magnetic_field,
    plaquette_magnetic_field,
};
pub(crate) use fields::electric_from_gradient;
pub use io::{load_field, load_field_any, save_field, save_field_any, FIELD_MAGIC, FIELD_VERSION};
pub use symmetry::Symmetry;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lie::{Algebra, GroupKind, LieGroup, Su2, U1};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Geometry {
    pub n_t: usize,
    pub n_x: usize,
    pub n_y: usize,
    pub n_z: usize,
    /// Lattice spacing.
    pub a: f64,
}

impl Geometry {
    pub fn new(n_t: usize, n_x: usize, n_y: usize, n_z: usize, a: f64) -> Result<Self> {
        if n_t < 4 {
            return Err(Error::InvalidArgument(format!("n_t = {n_t} < 4")));
        }
        if n_x < 4 || n_y < 4 || n_z < 4 {
            return Err(Error::InvalidArgument(format!(
                "spatial extents {n_x}x{n_y}x{n_z} must all be >= 4"
            )));
        }
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!("spacing {a} must be > 0")));
        }
        Ok(Geometry { n_t, n_x, n_y, n_z, a })
    }

    pub fn dims(&self) -> [usize; 4] {
        [self.n_t, self.n_x, self.n_y, self.n_z]
    }

    pub fn spatial_dims(&self) -> [usize; 3] {
        [self.n_x, self.n_y, self.n_z]
    }

    pub fn volume(&self) -> usize {
        self.n_t * self.spatial_volume()
    }

    pub fn spatial_volume(&self) -> usize {
        self.n_x * self.n_y * self.n_z
    }

    pub fn index(&self, c: [usize; 4]) -> usize {
        ((c[0] * self.n_x + c[1]) * self.n_y + c[2]) * self.n_z + c[3]
    }

    pub fn coords(&self, s: usize) -> [usize; 4] {
        let z = s % self.n_z;
        let r = s / self.n_z;
        let y = r % self.n_y;
        let r = r / self.n_y;
        let x = r % self.n_x;
        [r / self.n_x, x, y, z]
    }

    pub fn time_of(&self, s: usize) -> usize {
        s / self.spatial_volume()
    }

    /// Neighbor `s ± µ̂`; `None` past the open time edges.
    pub fn shift(&self, s: usize, mu: usize, step: isize) -> Option<usize> {
        let dims = self.dims();
        let mut c = self.coords(s);
        if mu == 0 {
            let t = c[0] as isize + step;
            if t < 0 || t >= self.n_t as isize {
                return None;
            }
            c[0] = t as usize;
        } else {
            let n = dims[mu] as isize;
            c[mu] = (c[mu] as isize + step).rem_euclid(n) as usize;
        }
        Some(self.index(c))
    }

    /// Site of spatial index `x` (ordered `(x·n_y + y)·n_z + z`) on slice `t`.
    pub fn slice_site(&self, t: usize, x: usize) -> usize {
        t * self.spatial_volume() + x
    }

    pub fn slice_geometry(&self) -> SliceGeometry {
        SliceGeometry { dims: self.spatial_dims(), a: self.a }
    }
}

/// Geometry of a periodic spatial slice.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceGeometry {
    pub dims: [usize; 3],
    pub a: f64,
}

impl SliceGeometry {
    pub fn volume(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn index(&self, c: [usize; 3]) -> usize {
        (c[0] * self.dims[1] + c[1]) * self.dims[2] + c[2]
    }

    pub fn coords(&self, x: usize) -> [usize; 3] {
        let z = x % self.dims[2];
        let r = x / self.dims[2];
        [r / self.dims[1], r % self.dims[1], z]
    }

    /// Periodic neighbor along spatial axis `i` (0-based).
    pub fn shift(&self, x: usize, i: usize, step: isize) -> usize {
        let mut c = self.coords(x);
        c[i] = (c[i] as isize + step).rem_euclid(self.dims[i] as isize) as usize;
        self.index(c)
    }

    /// Minimal-image displacement components, in lattice units.
    pub fn min_image(&self, from: [f64; 3], to: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|i| {
            let n = self.dims[i] as f64;
            let d = to[i] - from[i];
            d - n * (d / n).round()
        })
    }
}

/// Link variables on the full lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField<G: LieGroup> {
    geom: Geometry,
    links: Vec<G>,
}

impl<G: LieGroup> GaugeField<G> {
    pub fn identity(geom: Geometry) -> Self {
        GaugeField { geom, links: vec![G::identity(); geom.volume() * 4] }
    }

    pub fn from_links(geom: Geometry, links: Vec<G>) -> Result<Self> {
        if links.len() != geom.volume() * 4 {
            return Err(Error::InvalidArgument(format!(
                "expected {} links, got {}",
                geom.volume() * 4,
                links.len()
            )));
        }
        Ok(GaugeField { geom, links })
    }

    pub fn geometry(&self) -> &Geometry {
        &self.geom
    }

    pub fn links(&self) -> &[G] {
        &self.links
    }

    pub fn links_mut(&mut self) -> &mut [G] {
        &mut self.links
    }

    pub fn link(&self, s: usize, mu: usize) -> G {
        self.links[s * 4 + mu]
    }

    pub fn set_link(&mut self, s: usize, mu: usize, u: G) {
        self.links[s * 4 + mu] = u;
    }

    pub fn kind(&self) -> GroupKind {
        G::KIND
    }

    /// Spatial links of slice `t`.
    pub fn slice(&self, t: usize) -> BoundaryData<G> {
        let sg = self.geom.slice_geometry();
        let mut links = Vec::with_capacity(sg.volume() * 3);
        for x in 0..sg.volume() {
            let s = self.geom.slice_site(t, x);
            for i in 1..4 {
                links.push(self.link(s, i));
            }
        }
        BoundaryData { geom: sg, links }
    }

    /// True when every time link is exactly the identity.
    pub fn is_weyl(&self) -> bool {
        let id = G::identity();
        (0..self.geom.volume()).all(|s| self.link(s, 0) == id)
    }

    /// Largest unitarity defect over all links.
    pub fn max_unitarity_defect(&self) -> f64 {
        self.links.iter().map(|u| u.unitarity_defect()).fold(0.0, f64::max)
    }

    /// Applies `U_µ(n) ↦ g(n)⁻¹ U_µ(n) g(n+µ̂)`; time links off the last
    /// slice have no far end and are left as they are.
    pub fn gauge_transform(&self, g: &[G]) -> Result<Self> {
        if g.len() != self.geom.volume() {
            return Err(Error::InvalidArgument("gauge function size mismatch".into()));
        }
        let mut out = self.clone();
        for s in 0..self.geom.volume() {
            let gi = g[s].inverse();
            for mu in 0..4 {
                if let Some(e) = self.geom.shift(s, mu, 1) {
                    out.links[s * 4 + mu] = gi.mul(&self.link(s, mu)).mul(&g[e]);
                }
            }
        }
        Ok(out)
    }

    /// Extends a slice gauge function constantly in time and applies it.
    pub fn slice_gauge_transform(&self, g: &[G]) -> Result<Self> {
        let vs = self.geom.spatial_volume();
        if g.len() != vs {
            return Err(Error::InvalidArgument("slice gauge function size mismatch".into()));
        }
        let full: Vec<G> = (0..self.geom.volume()).map(|s| g[s % vs]).collect();
        self.gauge_transform(&full)
    }

    /// Replaces the `t = 0` spatial links by `bd`.
    pub fn with_boundary(mut self, bd: &BoundaryData<G>) -> Result<Self> {
        bd.check_compatible(&self.geom)?;
        for x in 0..bd.geom.volume() {
            for i in 1..4 {
                self.links[x * 4 + i] = bd.link(x, i);
            }
        }
        Ok(self)
    }

    pub fn max_link_log(&self) -> Result<f64> {
        let mut m: f64 = 0.0;
        for u in &self.links {
            m = m.max(u.log()?.norm());
        }
        Ok(m)
    }
}

/// Fixed tangential links on the `t = 0` slice.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryData<G: LieGroup> {
    geom: SliceGeometry,
    /// `links[x·3 + (i−1)]` is `U_i(0, x)`.
    links: Vec<G>,
}

impl<G: LieGroup> BoundaryData<G> {
    pub fn identity(geom: SliceGeometry) -> Self {
        BoundaryData { geom, links: vec![G::identity(); geom.volume() * 3] }
    }

    pub fn from_links(geom: SliceGeometry, links: Vec<G>) -> Result<Self> {
        if links.len() != geom.volume() * 3 {
            return Err(Error::InvalidArgument("boundary link count mismatch".into()));
        }
        Ok(BoundaryData { geom, links })
    }

    /// Builds links from algebra values `A(x, i)` given in link-angle units.
    pub fn from_algebra<F>(geom: SliceGeometry, f: F) -> Self
    where
        F: Fn([usize; 3], usize) -> G::Alg,
    {
        let mut links = Vec::with_capacity(geom.volume() * 3);
        for x in 0..geom.volume() {
            let c = geom.coords(x);
            for i in 1..4 {
                links.push(G::exp(&f(c, i)));
            }
        }
        BoundaryData { geom, links }
    }

    pub fn geometry(&self) -> &SliceGeometry {
        &self.geom
    }

    pub fn kind(&self) -> GroupKind {
        G::KIND
    }

    /// `U_i(0, x)` for `i` in 1..=3.
    pub fn link(&self, x: usize, i: usize) -> G {
        self.links[x * 3 + i - 1]
    }

    pub fn set_link(&mut self, x: usize, i: usize, u: G) {
        self.links[x * 3 + i - 1] = u;
    }

    pub fn links(&self) -> &[G] {
        &self.links
    }

    pub fn check_compatible(&self, geom: &Geometry) -> Result<()> {
        if self.geom.dims != geom.spatial_dims() {
            return Err(Error::InvalidArgument(format!(
                "boundary dims {:?} do not match lattice {:?}",
                self.geom.dims,
                geom.spatial_dims()
            )));
        }
        if self.geom.a != geom.a {
            return Err(Error::InvalidArgument("boundary spacing differs from lattice".into()));
        }
        Ok(())
    }

    /// `U_i(x) ↦ g(x)⁻¹ U_i(x) g(x+î)`.
    pub fn gauge_transform(&self, g: &[G]) -> Result<Self> {
        if g.len() != self.geom.volume() {
            return Err(Error::InvalidArgument("gauge function size mismatch".into()));
        }
        let mut out = self.clone();
        for x in 0..self.geom.volume() {
            for i in 1..4 {
                let e = self.geom.shift(x, i - 1, 1);
                out.set_link(x, i, g[x].inverse().mul(&self.link(x, i)).mul(&g[e]));
            }
        }
        Ok(out)
    }

    /// Left-multiplies every link: `U_i(x) ↦ exp(h_i(x)) U_i(x)`.
    pub fn perturb(&self, h: &[G::Alg], eps: f64) -> Result<Self> {
        if h.len() != self.links.len() {
            return Err(Error::InvalidArgument("perturbation size mismatch".into()));
        }
        let links = self.links.iter().zip(h).map(|(u, d)| G::exp(&(*d * eps)).mul(u)).collect();
        Ok(BoundaryData { geom: self.geom, links })
    }

    pub fn max_link_log(&self) -> Result<f64> {
        let mut m: f64 = 0.0;
        for u in &self.links {
            m = m.max(u.log()?.norm());
        }
        Ok(m)
    }

    /// Sum over slice plaquettes of `½|log P|²` (dimensionless).
    pub fn magnetic_action(&self) -> Result<f64> {
        let mut s = 0.0;
        for x in 0..self.geom.volume() {
            for (i, j) in [(1, 2), (1, 3), (2, 3)] {
                let xi = self.geom.shift(x, i - 1, 1);
                let xj = self.geom.shift(x, j - 1, 1);
                let p = self
                    .link(x, i)
                    .mul(&self.link(xi, j))
                    .mul(&self.link(xj, i).inverse())
                    .mul(&self.link(x, j).inverse());
                s += 0.5 * p.log()?.norm_sq();
            }
        }
        Ok(s)
    }
}

/// Random gauge function, one element per site.
pub fn random_gauge<G: LieGroup, R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<G> {
    (0..n).map(|_| G::random(rng)).collect()
}

/// Runtime-tagged field.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyField {
    U1(GaugeField<U1>),
    Su2(GaugeField<Su2>),
}

impl AnyField {
    pub fn kind(&self) -> GroupKind {
        match self {
            AnyField::U1(_) => GroupKind::U1,
            AnyField::Su2(_) => GroupKind::Su2,
        }
    }

    pub fn geometry(&self) -> &Geometry {
        match self {
            AnyField::U1(f) => f.geometry(),
            AnyField::Su2(f) => f.geometry(),
        }
    }
}
