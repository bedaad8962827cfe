//! Lattice translations and 90° rotations of the spatial torus.

use super::{BoundaryData, GaugeField, SliceGeometry};
use crate::error::{Error, Result};
use crate::lie::LieGroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Symmetry {
    /// Periodic shift by whole lattice steps along x, y, z.
    Translate([isize; 3]),
    /// Quarter turn taking spatial axis `from` to axis `to` (0-based) and
    /// `to` to minus `from`.
    Rotate90 { from: usize, to: usize },
}

impl Symmetry {
    fn validate(&self, g: &SliceGeometry) -> Result<()> {
        if let Symmetry::Rotate90 { from, to } = *self {
            if from > 2 || to > 2 || from == to {
                return Err(Error::InvalidArgument(format!("bad rotation plane ({from},{to})")));
            }
            if g.dims[from] != g.dims[to] {
                return Err(Error::InvalidArgument("rotation plane must be square".into()));
            }
        }
        Ok(())
    }

    fn map_site(&self, g: &SliceGeometry, x: usize) -> usize {
        let c = g.coords(x);
        let mut out = c;
        match *self {
            Symmetry::Translate(v) => {
                for i in 0..3 {
                    out[i] = (c[i] as isize + v[i]).rem_euclid(g.dims[i] as isize) as usize;
                }
            }
            Symmetry::Rotate90 { from, to } => {
                out[to] = c[from];
                out[from] = (g.dims[from] - c[to]) % g.dims[from];
            }
        }
        g.index(out)
    }

    /// Image of spatial axis `i` as `(axis, orientation)`.
    fn map_axis(&self, i: usize) -> (usize, bool) {
        match *self {
            Symmetry::Rotate90 { from, to } if i == from => (to, true),
            Symmetry::Rotate90 { from, to } if i == to => (from, false),
            _ => (i, true),
        }
    }

    /// Moves a slice of spatial links; `get(x, i)` reads and `set(x, i, u)` writes.
    fn apply_slice<G: LieGroup>(
        &self,
        g: &SliceGeometry,
        get: impl Fn(usize, usize) -> G,
        mut set: impl FnMut(usize, usize, G),
    ) {
        for x in 0..g.volume() {
            let y = self.map_site(g, x);
            for i in 0..3 {
                let u = get(x, i + 1);
                let (j, positive) = self.map_axis(i);
                if positive {
                    set(y, j + 1, u);
                } else {
                    set(g.shift(y, j, -1), j + 1, u.inverse());
                }
            }
        }
    }

    pub fn apply_boundary<G: LieGroup>(&self, bd: &BoundaryData<G>) -> Result<BoundaryData<G>> {
        let g = *bd.geometry();
        self.validate(&g)?;
        let mut out = bd.clone();
        self.apply_slice(&g, |x, i| bd.link(x, i), |x, i, u| out.set_link(x, i, u));
        Ok(out)
    }

    pub fn apply_field<G: LieGroup>(&self, field: &GaugeField<G>) -> Result<GaugeField<G>> {
        let geom = *field.geometry();
        let g = geom.slice_geometry();
        self.validate(&g)?;
        let mut out = field.clone();
        for t in 0..geom.n_t {
            let base = t * g.volume();
            self.apply_slice(
                &g,
                |x, i| field.link(base + x, i),
                |x, i, u| out.set_link(base + x, i, u),
            );
            for x in 0..g.volume() {
                out.set_link(base + self.map_site(&g, x), 0, field.link(base + x, 0));
            }
        }
        Ok(out)
    }
}
