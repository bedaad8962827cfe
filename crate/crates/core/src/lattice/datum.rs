//! Dirichlet data generators.

use std::f64::consts::PI;

use rand::Rng;

use super::{BoundaryData, SliceGeometry};
use crate::error::{Error, Result};
use crate::lie::{Algebra, LieGroup, U1};
use crate::maxwell::VectorFieldGrid;

/// `A_pol(x) = α cos(k·x)` with `k = 2π m / (n a)` per axis, as U(1)
/// links `exp(i a A_pol)`.
pub fn single_mode_u1(geom: SliceGeometry, amplitude: f64, mode: [i64; 3], pol: usize) -> Result<BoundaryData<U1>> {
    single_mode(geom, amplitude, mode, pol)
}

/// Single Fourier mode along the last algebra basis direction (`T_3` for
/// SU(2)), an abelian embedding of [`single_mode_u1`].
pub fn single_mode<G: LieGroup>(geom: SliceGeometry, amplitude: f64, mode: [i64; 3], pol: usize) -> Result<BoundaryData<G>> {
    if pol > 2 {
        return Err(Error::InvalidArgument(format!("polarization axis {pol}")));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidArgument(format!("amplitude {amplitude}")));
    }
    let k: [f64; 3] = std::array::from_fn(|i| 2.0 * PI * mode[i] as f64 / (geom.dims[i] as f64 * geom.a));
    if k[pol] != 0.0 {
        return Err(Error::InvalidArgument("polarization must be transverse to the mode".into()));
    }
    let mut unit = vec![0.0; G::Alg::DIM];
    unit[G::Alg::DIM - 1] = 1.0;
    let dir = G::Alg::from_coeffs(&unit);
    Ok(BoundaryData::from_algebra(geom, |c, i| {
        let phase: f64 = (0..3).map(|j| k[j] * c[j] as f64 * geom.a).sum();
        if i == pol + 1 {
            dir * (geom.a * amplitude * phase.cos())
        } else {
            G::Alg::zero()
        }
    }))
}

/// Continuum potential `A_i = θ_i / a` of U(1) links on a cubic slice.
pub fn u1_vector_field(bd: &BoundaryData<U1>) -> Result<VectorFieldGrid> {
    let g = bd.geometry();
    let n = g.dims[0];
    if g.dims.iter().any(|&d| d != n) {
        return Err(Error::InvalidArgument("vector-field view needs a cubic slice".into()));
    }
    VectorFieldGrid::from_fn(n, g.a, |c| {
        let x = g.index(c);
        std::array::from_fn(|i| bd.link(x, i + 1).phase() / g.a)
    })
}

/// Gaussian bump `A_i(x) = α e^{−r²/2σ²} p_i` around `center` (lattice
/// coordinates, minimal image), with unit algebra directions `p_i` drawn
/// from `rng`.
pub fn localized_bump<G: LieGroup, R: Rng + ?Sized>(
    geom: SliceGeometry,
    center: [f64; 3],
    sigma: f64,
    amplitude: f64,
    rng: &mut R,
) -> Result<BoundaryData<G>> {
    if !(sigma > 0.0) {
        return Err(Error::InvalidArgument(format!("width {sigma}")));
    }
    let pol: Vec<G::Alg> = (0..3)
        .map(|_| {
            let p = G::random_alg(rng, 1.0);
            p * (1.0 / p.norm().max(f64::MIN_POSITIVE))
        })
        .collect();
    Ok(BoundaryData::from_algebra(geom, |c, i| {
        let pos = [c[0] as f64, c[1] as f64, c[2] as f64];
        let d = geom.min_image(center, pos);
        let r2 = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]) * geom.a * geom.a;
        pol[i - 1] * (geom.a * amplitude * (-r2 / (2.0 * sigma * sigma)).exp())
    }))
}

/// Smooth random datum built from the lowest Fourier modes along each
/// axis, rescaled so that the largest link log has norm `max_log`.
pub fn random_smooth<G: LieGroup, R: Rng + ?Sized>(geom: SliceGeometry, max_log: f64, rng: &mut R) -> Result<BoundaryData<G>> {
    if !(max_log > 0.0 && max_log < PI) {
        return Err(Error::InvalidArgument(format!("max_log {max_log}")));
    }
    // For each link direction: a constant plus cos/sin of the first mode
    // along each axis, each with a random algebra coefficient.
    let coeffs: Vec<[G::Alg; 7]> = (0..3).map(|_| std::array::from_fn(|_| G::random_alg(rng, 1.0))).collect();
    let raw = |c: [usize; 3], i: usize| -> G::Alg {
        let cf = &coeffs[i - 1];
        let mut v = cf[0] * 0.2;
        for ax in 0..3 {
            let ph = 2.0 * PI * c[ax] as f64 / geom.dims[ax] as f64;
            v += cf[1 + 2 * ax] * ph.cos() + cf[2 + 2 * ax] * ph.sin();
        }
        v
    };
    let mut peak: f64 = 0.0;
    for x in 0..geom.volume() {
        for i in 1..4 {
            peak = peak.max(raw(geom.coords(x), i).norm());
        }
    }
    let scale = max_log / peak.max(f64::MIN_POSITIVE);
    Ok(BoundaryData::from_algebra(geom, |c, i| raw(c, i) * scale))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie::Su2;
    use crate::maxwell::wheeler_s_spectral;
    use crate::par::Exec;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sg() -> SliceGeometry {
        SliceGeometry { dims: [8, 8, 8], a: 1.0 }
    }

    #[test]
    fn single_mode_round_trips_to_vector_field() {
        let bd = single_mode_u1(sg(), 0.01, [1, 0, 0], 1).unwrap();
        let v = u1_vector_field(&bd).unwrap();
        let k = 2.0 * PI / 8.0;
        let expected = 0.5 * k * 0.01f64.powi(2) * 512.0 / 2.0;
        assert!((wheeler_s_spectral(&v, Exec::Sequential) - expected).abs() < 1e-12 * expected);
        assert!(single_mode_u1(sg(), 0.01, [1, 0, 0], 0).is_err());
    }

    #[test]
    fn random_smooth_respects_the_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let bd = random_smooth::<Su2, _>(sg(), 0.05, &mut rng).unwrap();
        let m = bd.max_link_log().unwrap();
        assert!(m <= 0.05 + 1e-12 && m > 0.04);
    }

    #[test]
    fn bump_is_centred() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let bd = localized_bump::<U1, _>(sg(), [4.0, 4.0, 4.0], 1.0, 0.1, &mut rng).unwrap();
        let g = bd.geometry();
        let centre = bd.link(g.index([4, 4, 4]), 1).phase().abs();
        let far = bd.link(g.index([0, 0, 0]), 1).phase().abs();
        assert!(centre > 1e3 * far);
    }
}
