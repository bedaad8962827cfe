//! Abelian sector in closed form.
//!
//! Fields are sampled at the sites of a periodic `n³` grid with spacing
//! `a`; site `(x, y, z)` is stored at `(x·n + y)·n + z`. The DFT is forward
//! unnormalized and inverse `1/n³`, so `Σ_x |f(x)|² a³ = (a³/n³) Σ_k |f̃(k)|²`.
//! Wavevectors are `2π m/(n a)` with `m` folded into `(−n/2, n/2]`.

mod fft;

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

pub use fft::{fft3_forward, fft3_inverse};

use crate::error::{Error, FormatError, Result};
use crate::par::{self, Exec};

/// Cell average of `1/|r|²` over the unit cube centred at the origin.
pub const CELL_AVERAGE_INV_R2: f64 = 7.674124222443731;

#[derive(Debug, Clone, PartialEq)]
pub struct VectorFieldGrid {
    n: usize,
    a: f64,
    comps: [Vec<f64>; 3],
}

impl VectorFieldGrid {
    pub fn zeros(n: usize, a: f64) -> Result<Self> {
        if n < 2 || !(a.is_finite() && a > 0.0) {
            return Err(Error::InvalidArgument(format!("grid n = {n}, a = {a}")));
        }
        let v = vec![0.0; n * n * n];
        Ok(VectorFieldGrid { n, a, comps: [v.clone(), v.clone(), v] })
    }

    pub fn from_fn(n: usize, a: f64, f: impl Fn([usize; 3]) -> [f64; 3]) -> Result<Self> {
        let mut g = Self::zeros(n, a)?;
        for s in 0..n * n * n {
            let v = f(g.coords(s));
            for i in 0..3 {
                g.comps[i][s] = v[i];
            }
        }
        Ok(g)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.a
    }

    pub fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn component(&self, i: usize) -> &[f64] {
        &self.comps[i]
    }

    pub fn component_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.comps[i]
    }

    pub fn coords(&self, s: usize) -> [usize; 3] {
        [s / (self.n * self.n), (s / self.n) % self.n, s % self.n]
    }

    pub fn at(&self, s: usize) -> [f64; 3] {
        [self.comps[0][s], self.comps[1][s], self.comps[2][s]]
    }

    pub fn is_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }

    /// Wavevector of the flat spectral index `s`.
    pub fn wavevector(&self, s: usize) -> [f64; 3] {
        let c = self.coords(s);
        std::array::from_fn(|i| {
            let m = if c[i] > self.n / 2 { c[i] as f64 - self.n as f64 } else { c[i] as f64 };
            2.0 * PI * m / (self.n as f64 * self.a)
        })
    }

    /// Wavevector used by first-derivative operators: as [`Self::wavevector`]
    /// but with Nyquist components set to zero, so that projections and
    /// curls map real fields to real fields.
    pub fn derivative_wavevector(&self, s: usize) -> [f64; 3] {
        let c = self.coords(s);
        let mut k = self.wavevector(s);
        for i in 0..3 {
            if self.n % 2 == 0 && c[i] == self.n / 2 {
                k[i] = 0.0;
            }
        }
        k
    }

    pub fn spectrum(&self, exec: Exec) -> [Vec<Complex64>; 3] {
        std::array::from_fn(|i| {
            let mut c: Vec<Complex64> = self.comps[i].iter().map(|&v| Complex64::new(v, 0.0)).collect();
            fft3_forward(&mut c, self.n, exec);
            c
        })
    }

    fn from_spectrum(n: usize, a: f64, mut spec: [Vec<Complex64>; 3], exec: Exec) -> Self {
        let comps = std::array::from_fn(|i| {
            fft3_inverse(&mut spec[i], n, exec);
            spec[i].iter().map(|c| c.re).collect()
        });
        VectorFieldGrid { n, a, comps }
    }

    /// Largest `|A|` in the band within 10% of the box faces, relative to
    /// the global maximum. Fields centred in the box with small values
    /// here are insensitive to the periodic wrap.
    pub fn edge_fraction(&self) -> f64 {
        let band = ((self.n as f64) * 0.1).ceil() as usize;
        let mut edge: f64 = 0.0;
        let mut all: f64 = 0.0;
        for s in 0..self.len() {
            let v = self.at(s);
            let m = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            all = all.max(m);
            if self.coords(s).iter().any(|&c| c < band || c >= self.n - band) {
                edge = edge.max(m);
            }
        }
        if all == 0.0 {
            0.0
        } else {
            edge / all
        }
    }

    pub fn is_localized(&self) -> bool {
        self.edge_fraction() <= LOCALIZATION_THRESHOLD
    }

    /// `∇×A` by fourth-order central differences.
    pub fn curl(&self) -> VectorFieldGrid {
        let n = self.n;
        let a = self.a;
        let d = |f: &[f64], s: usize, axis: usize| -> f64 {
            let c = self.coords(s);
            let at = |off: isize| {
                let mut cc = c;
                cc[axis] = (c[axis] as isize + off).rem_euclid(n as isize) as usize;
                f[(cc[0] * n + cc[1]) * n + cc[2]]
            };
            (8.0 * (at(1) - at(-1)) - (at(2) - at(-2))) / (12.0 * a)
        };
        let [ax, ay, az] = &self.comps;
        let comps = [
            (0..self.len()).map(|s| d(az, s, 1) - d(ay, s, 2)).collect(),
            (0..self.len()).map(|s| d(ax, s, 2) - d(az, s, 0)).collect(),
            (0..self.len()).map(|s| d(ay, s, 0) - d(ax, s, 1)).collect(),
        ];
        VectorFieldGrid { n, a, comps }
    }

    /// Writes a text header line `VFGRID 1 <n> <a>` followed by the three
    /// components as little-endian f64, component-major.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = Vec::with_capacity(64 + self.len() * 24);
        writeln!(out, "VFGRID 1 {} {:e}", self.n, self.a)?;
        for c in &self.comps {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        let nl = bytes
            .iter()
            .position(|&b| b == b'\n')
            .ok_or_else(|| FormatError::Header("missing header line".into()))?;
        let header = std::str::from_utf8(&bytes[..nl]).map_err(|e| FormatError::Header(e.to_string()))?;
        let parts: Vec<&str> = header.split_whitespace().collect();
        if parts.len() != 4 || parts[0] != "VFGRID" {
            return Err(FormatError::Header(header.to_string()).into());
        }
        let version: u32 = parts[1].parse().map_err(|_| FormatError::Header(header.to_string()))?;
        if version != 1 {
            return Err(FormatError::Version(version).into());
        }
        let n: usize = parts[2].parse().map_err(|_| FormatError::Header(header.to_string()))?;
        let a: f64 = parts[3].parse().map_err(|_| FormatError::Header(header.to_string()))?;
        let mut g = Self::zeros(n, a)?;
        let body = &bytes[nl + 1..];
        let expected = g.len() * 24;
        if body.len() != expected {
            return Err(FormatError::Truncated { expected, found: body.len() }.into());
        }
        let len = g.len();
        for (k, w) in body.chunks_exact(8).enumerate() {
            g.comps[k / len][k % len] = f64::from_le_bytes(w.try_into().expect("8 bytes"));
        }
        Ok(g)
    }
}

/// Edge-to-peak ratio above which a field counts as delocalized.
pub const LOCALIZATION_THRESHOLD: f64 = 0.05;

/// Spectral components with `k·Ã(k) = 0` on every nonzero mode.
#[derive(Debug, Clone)]
pub struct TransverseField {
    n: usize,
    a: f64,
    spec: [Vec<Complex64>; 3],
}

impl TransverseField {
    pub fn spectrum(&self) -> &[Vec<Complex64>; 3] {
        &self.spec
    }

    pub fn to_grid(&self, exec: Exec) -> VectorFieldGrid {
        VectorFieldGrid::from_spectrum(self.n, self.a, self.spec.clone(), exec)
    }

    /// Largest `|k̂·Ã(k)|` relative to `|Ã(k)|` over nonzero modes.
    pub fn max_longitudinal(&self) -> f64 {
        let shape = VectorFieldGrid { n: self.n, a: self.a, comps: Default::default() };
        (1..self.spec[0].len())
            .map(|s| {
                let k = shape.derivative_wavevector(s);
                let kn = (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt();
                let dot: Complex64 = (0..3).map(|i| self.spec[i][s] * k[i]).sum();
                let mag = (0..3).map(|i| self.spec[i][s].norm_sqr()).sum::<f64>().sqrt();
                if mag == 0.0 || kn == 0.0 {
                    0.0
                } else {
                    dot.norm() / (kn * mag)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// Removes `k̂(k̂·Ã)` from every nonzero mode; the zero mode is kept.
pub fn transverse_project(field: &VectorFieldGrid, exec: Exec) -> TransverseField {
    let mut spec = field.spectrum(exec);
    for s in 1..field.len() {
        let k = field.derivative_wavevector(s);
        let k2 = k[0] * k[0] + k[1] * k[1] + k[2] * k[2];
        if k2 == 0.0 {
            continue;
        }
        let dot: Complex64 = (0..3).map(|i| spec[i][s] * k[i]).sum::<Complex64>() / k2;
        for i in 0..3 {
            spec[i][s] -= dot * k[i];
        }
    }
    TransverseField { n: field.n, a: field.a, spec }
}

fn knorm(field: &VectorFieldGrid, s: usize) -> f64 {
    let k = field.wavevector(s);
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]).sqrt()
}

fn spectral_sum(field: &VectorFieldGrid, weight: impl Fn(f64) -> f64 + Sync + Send, exec: Exec) -> f64 {
    let t = transverse_project(field, exec);
    let n3 = field.len() as f64;
    let a3 = field.a.powi(3);
    let sum = par::sum(exec, field.len(), |s| {
        if s == 0 {
            return 0.0;
        }
        let p: f64 = (0..3).map(|i| t.spec[i][s].norm_sqr()).sum();
        weight(knorm(field, s)) * p
    });
    0.5 * a3 / n3 * sum
}

/// `S = ½ (a³/n³) Σ_{k≠0} |k| |Ã_T(k)|²`.
pub fn wheeler_s_spectral(field: &VectorFieldGrid, exec: Exec) -> f64 {
    spectral_sum(field, |k| k, exec)
}

/// Per-mode Euclidean decay oracle. With `t_extent = Some(T)` each mode
/// carries the factor `tanh(|k| T)` of an extremal with a free end at `T`.
pub fn abelian_mode_oracle(datum: &VectorFieldGrid, t_extent: Option<f64>, exec: Exec) -> f64 {
    match t_extent {
        None => wheeler_s_spectral(datum, exec),
        Some(t) => spectral_sum(datum, |k| k * (k * t).tanh(), exec),
    }
}

/// Position-space value with its localization flag.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelValue {
    pub s: f64,
    pub delocalized: bool,
}

fn kernel_grid(n: usize, a: f64) -> Vec<f64> {
    let fold = |c: usize| c.min(n - c) as f64;
    (0..n * n * n)
        .map(|s| {
            let c = [s / (n * n), (s / n) % n, s % n];
            let r2 = (fold(c[0]).powi(2) + fold(c[1]).powi(2) + fold(c[2]).powi(2)) * a * a;
            if r2 > 0.0 {
                1.0 / r2
            } else {
                CELL_AVERAGE_INV_R2 / (a * a)
            }
        })
        .collect()
}

/// `(1/4π²) Σ_x Σ_y a⁶ B(x)·B(y)/|x−y|²`, minimal-image distances, the
/// diagonal replaced by the cell average; evaluated as an FFT convolution.
pub fn wheeler_s_kernel(field: &VectorFieldGrid, exec: Exec) -> KernelValue {
    let b = field.curl();
    let n = field.n;
    let mut k: Vec<Complex64> = kernel_grid(n, field.a).into_iter().map(|v| Complex64::new(v, 0.0)).collect();
    fft3_forward(&mut k, n, exec);
    let bs = b.spectrum(exec);
    let total = par::sum(exec, field.len(), |s| k[s].re * (0..3).map(|i| bs[i][s].norm_sqr()).sum::<f64>());
    let s = field.a.powi(6) / (4.0 * PI * PI) * total / field.len() as f64;
    KernelValue { s, delocalized: !field.is_localized() }
}

/// The same double sum evaluated pair by pair.
pub fn wheeler_s_kernel_direct(field: &VectorFieldGrid) -> f64 {
    let b = field.curl();
    let n = field.n;
    let kern = kernel_grid(n, field.a);
    let mut total = 0.0;
    for x in 0..field.len() {
        let cx = field.coords(x);
        let bx = b.at(x);
        for y in 0..field.len() {
            let cy = field.coords(y);
            let d = [(cx[0] + n - cy[0]) % n, (cx[1] + n - cy[1]) % n, (cx[2] + n - cy[2]) % n];
            let by = b.at(y);
            total += kern[(d[0] * n + d[1]) * n + d[2]] * (bx[0] * by[0] + bx[1] * by[1] + bx[2] * by[2]);
        }
    }
    field.a.powi(6) / (4.0 * PI * PI) * total
}

/// `∇×A` with the exact spectral derivative `ik`.
pub fn spectral_curl(field: &VectorFieldGrid, exec: Exec) -> VectorFieldGrid {
    let a = field.spectrum(exec);
    let mut b: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![Complex64::default(); field.len()]);
    let i = Complex64::new(0.0, 1.0);
    for s in 0..field.len() {
        let k = field.derivative_wavevector(s);
        b[0][s] = i * (k[1] * a[2][s] - k[2] * a[1][s]);
        b[1][s] = i * (k[2] * a[0][s] - k[0] * a[2][s]);
        b[2][s] = i * (k[0] * a[1][s] - k[1] * a[0][s]);
    }
    VectorFieldGrid::from_spectrum(field.n, field.a, b, exec)
}

/// `δS/δA`: the field whose modes are `|k| Ã_T(k)`.
pub fn wheeler_gradient(field: &VectorFieldGrid, exec: Exec) -> VectorFieldGrid {
    let mut t = transverse_project(field, exec);
    for s in 0..field.len() {
        let kn = knorm(field, s);
        for i in 0..3 {
            t.spec[i][s] *= kn;
        }
    }
    t.to_grid(exec)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoostCheck {
    pub axis: usize,
    pub lhs: f64,
    pub rhs: f64,
    pub rel_gap: f64,
    pub delocalized: bool,
}

/// First moments `Σ x^i |δS/δA|² a³` and `Σ x^i |∇×A|² a³`, with `x^i`
/// measured from the grid centre; the gap is relative to `Σ |x^i| |B|² a³`.
pub fn boost_identity_check(field: &VectorFieldGrid, axis: usize, exec: Exec) -> Result<BoostCheck> {
    if axis > 2 {
        return Err(Error::InvalidArgument(format!("axis {axis} out of range")));
    }
    let g = wheeler_gradient(field, exec);
    let b = field.curl();
    let a3 = field.a.powi(3);
    let centre = (field.n as f64 - 1.0) / 2.0;
    let (mut lhs, mut rhs, mut den) = (0.0, 0.0, 0.0);
    for s in 0..field.len() {
        let x = (field.coords(s)[axis] as f64 - centre) * field.a;
        let gs: f64 = g.at(s).iter().map(|v| v * v).sum();
        let bs: f64 = b.at(s).iter().map(|v| v * v).sum();
        lhs += x * gs * a3;
        rhs += x * bs * a3;
        den += x.abs() * bs * a3;
    }
    let rel_gap = (lhs - rhs).abs() / den.max(REL_FLOOR);
    Ok(BoostCheck { axis, lhs, rhs, rel_gap, delocalized: !field.is_localized() })
}

/// Floor used in relative gaps to avoid `0/0` on vanishing data.
pub const REL_FLOOR: f64 = 1e-15;

/// Sum of three Gaussian bumps near the box centre with random
/// polarizations; widths `σ_frac·L·U(0.9, 1.1)`, centres offset by at most
/// `0.08 L` per axis.
pub fn localized_bumps<R: Rng + ?Sized>(n: usize, a: f64, sigma_frac: f64, rng: &mut R) -> Result<VectorFieldGrid> {
    let l = n as f64 * a;
    let bumps: Vec<([f64; 3], [f64; 3], f64)> = (0..3)
        .map(|_| {
            let c = std::array::from_fn(|_| rng.gen_range(-0.08..0.08) * l);
            let pol = std::array::from_fn(|_| rng.sample::<f64, _>(StandardNormal));
            let s = sigma_frac * l * rng.gen_range(0.9..1.1);
            (c, pol, s)
        })
        .collect();
    VectorFieldGrid::from_fn(n, a, |c| {
        let x: [f64; 3] = std::array::from_fn(|i| (c[i] as f64 - n as f64 / 2.0) * a);
        let mut v = [0.0; 3];
        for (cen, pol, s) in &bumps {
            let r2: f64 = (0..3).map(|i| (x[i] - cen[i]).powi(2)).sum();
            let g = (-r2 / (2.0 * s * s)).exp();
            for i in 0..3 {
                v[i] += pol[i] * g;
            }
        }
        v
    })
}

/// Pure gradient `A = ∇φ` of a Gaussian `φ` centred near the box
/// centre, width `σ_frac·L`, sampled from the analytic gradient.
pub fn localized_gradient<R: Rng + ?Sized>(n: usize, a: f64, sigma_frac: f64, rng: &mut R) -> Result<VectorFieldGrid> {
    let l = n as f64 * a;
    let cen: [f64; 3] = std::array::from_fn(|_| rng.gen_range(-0.08..0.08) * l);
    let s = sigma_frac * l;
    VectorFieldGrid::from_fn(n, a, |c| {
        let x: [f64; 3] = std::array::from_fn(|i| (c[i] as f64 - n as f64 / 2.0) * a - cen[i]);
        let r2: f64 = x.iter().map(|v| v * v).sum();
        let phi = (-r2 / (2.0 * s * s)).exp();
        std::array::from_fn(|i| -x[i] / (s * s) * phi)
    })
}
