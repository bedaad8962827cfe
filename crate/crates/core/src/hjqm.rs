//! One-dimensional zero-energy Hamilton-Jacobi problem and its ground state.
//!
//! For a potential `V ≥ 0` with a zero at `x*`, the imaginary-time
//! equation `½(S′)² = V` is solved by `S(x) = |∫_{x*}^{x} √(2V)|`, and
//! `ψ = e^{−S}` is annihilated by the ordered Hamiltonian
//! `½(S′ − ∂ₓ)(S′ + ∂ₓ)`. This module computes `S` by quadrature, builds
//! `ψ`, and measures how well the discrete operator annihilates it.

use serde::Serialize;

use crate::error::{Error, Result};

/// Uniform grid `x_j = x_min + j h`, `j = 0..n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid1D {
    pub x_min: f64,
    pub h: f64,
    pub n: usize,
}

impl Grid1D {
    /// Grid covering `[x_min, x_max]` with spacing as close to `h` as an
    /// integer number of cells allows.
    pub fn new(x_min: f64, x_max: f64, h: f64) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidArgument(format!("interval [{x_min}, {x_max}]")));
        }
        if !(h > 0.0 && h <= (x_max - x_min) / 8.0) {
            return Err(Error::InvalidArgument(format!("spacing {h} for [{x_min}, {x_max}]")));
        }
        let cells = ((x_max - x_min) / h).round() as usize;
        Ok(Grid1D { x_min, h: (x_max - x_min) / cells as f64, n: cells + 1 })
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.h
    }

    pub fn x_max(&self) -> f64 {
        self.x(self.n - 1)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }
}

/// Samples of a non-negative potential with a zero at grid node `star`.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialGrid {
    grid: Grid1D,
    v: Vec<f64>,
    star: usize,
}

/// Largest value accepted as the zero of the potential.
pub const ZERO_TOL: f64 = 1e-14;

impl PotentialGrid {
    pub fn from_samples(grid: Grid1D, v: Vec<f64>) -> Result<Self> {
        if v.len() != grid.n {
            return Err(Error::InvalidArgument(format!("{} samples for {} grid points", v.len(), grid.n)));
        }
        if let Some(j) = v.iter().position(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::InvalidPotential(format!("V({}) = {}", grid.x(j), v[j])));
        }
        let star = (0..v.len()).min_by(|&i, &j| v[i].total_cmp(&v[j])).unwrap_or(0);
        if v[star] > ZERO_TOL {
            return Err(Error::InvalidPotential(format!("minimum {} is not a zero", v[star])));
        }
        Ok(PotentialGrid { grid, v, star })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::from_samples(grid, grid.points().into_iter().map(f).collect())
    }

    /// `V = x²/2 + λx⁴/4`; `λ = 0` is the harmonic oscillator.
    pub fn anharmonic(grid: Grid1D, lambda: f64) -> Result<Self> {
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!("lambda {lambda}")));
        }
        Self::from_fn(grid, |x| 0.5 * x * x + 0.25 * lambda * x.powi(4))
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.v
    }

    pub fn star(&self) -> usize {
        self.star
    }

    pub fn x_star(&self) -> f64 {
        self.grid.x(self.star)
    }
}

/// Samples of `S` with `S(x*) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct PrincipalFunction1D {
    grid: Grid1D,
    s: Vec<f64>,
    star: usize,
}

impl PrincipalFunction1D {
    pub fn new(grid: Grid1D, s: Vec<f64>, star: usize) -> Result<Self> {
        if s.len() != grid.n || star >= grid.n {
            return Err(Error::InvalidArgument("principal function does not fit its grid".into()));
        }
        Ok(PrincipalFunction1D { grid, s, star })
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.s
    }

    pub fn star(&self) -> usize {
        self.star
    }
}

/// Cumulative integrals `∫_{t_0}^{t_j} f` for every `j`, fourth order.
fn cumulative(f: &[f64], h: f64) -> Vec<f64> {
    let mut out = vec![0.0; f.len()];
    if f.len() < 2 {
        return out;
    }
    // First cell from the cubic through the first four samples.
    out[1] = if f.len() >= 4 {
        h / 24.0 * (9.0 * f[0] + 19.0 * f[1] - 5.0 * f[2] + f[3])
    } else {
        0.5 * h * (f[0] + f[1])
    };
    let mut even = 0.0;
    for j in 2..f.len() {
        if j % 2 == 0 {
            even += h / 3.0 * (f[j - 2] + 4.0 * f[j - 1] + f[j]);
            out[j] = even;
        } else {
            // Simpson panels up to j − 3, then one 3/8 panel.
            let simpson = if j > 3 { even - h / 3.0 * (f[j - 3] + 4.0 * f[j - 2] + f[j - 1]) } else { 0.0 };
            out[j] = simpson + 3.0 * h / 8.0 * (f[j - 3] + 3.0 * f[j - 2] + 3.0 * f[j - 1] + f[j]);
        }
    }
    out
}

/// Solves `½(S′)² = V` outward from the zero of `V`.
pub fn solve_hje_1d(v: &PotentialGrid) -> PrincipalFunction1D {
    let g = v.grid;
    let speed: Vec<f64> = v.v.iter().map(|x| (2.0 * x).sqrt()).collect();
    let mut s = vec![0.0; g.n];
    let right = cumulative(&speed[v.star..], g.h);
    s[v.star..].copy_from_slice(&right);
    let left_f: Vec<f64> = speed[..=v.star].iter().rev().copied().collect();
    let left = cumulative(&left_f, g.h);
    for (k, val) in left.into_iter().enumerate() {
        s[v.star - k] = val;
    }
    PrincipalFunction1D { grid: g, s, star: v.star }
}

/// Below this `λx²/2` the closed form is evaluated by its series.
pub const SERIES_SWITCH: f64 = 1e-6;

/// Closed-form principal function of the quartic oscillator,
/// `S(x) = (2/3λ)[(1 + λx²/2)^{3/2} − 1]`.
///
/// Evaluated without cancellation; for tiny `λx²` the series
/// `x²/2 + λx⁴/16 − …` is used, which tends to `x²/2` as `λ → 0⁺`.
pub fn anharmonic_s(x: f64, lambda: f64) -> Result<f64> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    if !x.is_finite() {
        return Err(Error::InvalidArgument(format!("x = {x}")));
    }
    if 0.5 * lambda * x * x < SERIES_SWITCH {
        Ok(anharmonic_series(x, lambda))
    } else {
        Ok(anharmonic_closed(x, lambda))
    }
}

fn anharmonic_closed(x: f64, lambda: f64) -> f64 {
    let u = 0.5 * lambda * x * x;
    2.0 / (3.0 * lambda) * (1.5 * u.ln_1p()).exp_m1()
}

/// `(2/3λ)·Σ binom(3/2, k) u^k` for `k = 1..4`, with `u = λx²/2`.
fn anharmonic_series(x: f64, lambda: f64) -> f64 {
    let u = 0.5 * lambda * x * x;
    0.5 * x * x * (1.0 + u / 4.0 - u * u / 24.0 + u * u * u / 64.0)
}

/// Closed-form `S` sampled on `grid`, anchored at the node nearest 0.
pub fn anharmonic_principal(grid: Grid1D, lambda: f64) -> Result<PrincipalFunction1D> {
    let s = grid.points().into_iter().map(|x| anharmonic_s(x, lambda)).collect::<Result<Vec<_>>>()?;
    let star = (0..grid.n).min_by(|&i, &j| grid.x(i).abs().total_cmp(&grid.x(j).abs())).unwrap_or(0);
    PrincipalFunction1D::new(grid, s, star)
}

/// Grid-normalized wavefunction samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Wavefunction {
    grid: Grid1D,
    psi: Vec<f64>,
}

impl Wavefunction {
    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.psi
    }

    /// Trapezoidal `L²` norm.
    pub fn norm(&self) -> f64 {
        trapezoid_sq(&self.psi, self.grid.h).sqrt()
    }
}

fn trapezoid_sq(f: &[f64], h: f64) -> f64 {
    let n = f.len();
    let inner: f64 = f.iter().map(|x| x * x).sum();
    h * (inner - 0.5 * (f[0] * f[0] + f[n - 1] * f[n - 1]))
}

/// `ψ ∝ e^{−w}` normalized on the grid; `w` is shifted by its minimum
/// first so that the exponential cannot overflow.
pub fn wavefunction_from_exponent(grid: Grid1D, w: &[f64]) -> Result<Wavefunction> {
    if w.len() != grid.n {
        return Err(Error::InvalidArgument("exponent does not fit the grid".into()));
    }
    if w.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("non-finite exponent".into()));
    }
    let lo = w.iter().copied().fold(f64::INFINITY, f64::min);
    let mut psi: Vec<f64> = w.iter().map(|x| (lo - x).exp()).collect();
    let norm = trapezoid_sq(&psi, grid.h).sqrt();
    psi.iter_mut().for_each(|p| *p /= norm);
    Ok(Wavefunction { grid, psi })
}

/// Zero-energy ground state `e^{−S}/‖e^{−S}‖`.
pub fn ground_state(s: &PrincipalFunction1D) -> Result<Wavefunction> {
    wavefunction_from_exponent(s.grid, &s.s)
}

/// Central-difference stencil used for derivatives of samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffOrder {
    /// Three-point stencil, error `O(h²)`.
    #[default]
    Second,
    /// Five-point stencil, error `O(h⁴)`.
    Fourth,
}

impl DiffOrder {
    /// Points lost at each end of the grid.
    pub fn width(self) -> usize {
        match self {
            DiffOrder::Second => 1,
            DiffOrder::Fourth => 2,
        }
    }
}

/// Derivative of `f` at every index in `[w, n − w)`; other entries are 0.
fn derivative(f: &[f64], h: f64, order: DiffOrder) -> Vec<f64> {
    let n = f.len();
    let w = order.width();
    let mut d = vec![0.0; n];
    for j in w..n.saturating_sub(w) {
        d[j] = match order {
            DiffOrder::Second => (f[j + 1] - f[j - 1]) / (2.0 * h),
            DiffOrder::Fourth => (f[j - 2] - 8.0 * f[j - 1] + 8.0 * f[j + 1] - f[j + 2]) / (12.0 * h),
        };
    }
    d
}

fn same_grid(a: &Grid1D, b: &Grid1D) -> Result<()> {
    if a != b {
        return Err(Error::InvalidArgument(format!("grid mismatch: {a:?} vs {b:?}")));
    }
    Ok(())
}

/// Pointwise `r = ½(S′ − ∂ₓ)(S′ψ + ψ′)`, zero where the nested stencils
/// do not fit.
pub fn nno_residual_samples(
    v: &PotentialGrid,
    s: &PrincipalFunction1D,
    psi: &Wavefunction,
    order: DiffOrder,
) -> Result<Vec<f64>> {
    same_grid(&v.grid, &s.grid)?;
    same_grid(&v.grid, &psi.grid)?;
    let h = v.grid.h;
    let n = v.grid.n;
    let w = order.width();
    let ds = derivative(&s.s, h, order);
    let dpsi = derivative(&psi.psi, h, order);
    let phi: Vec<f64> = (0..n).map(|j| ds[j] * psi.psi[j] + dpsi[j]).collect();
    let dphi = derivative(&phi, h, order);
    let mut r = vec![0.0; n];
    for j in 2 * w..n.saturating_sub(2 * w) {
        r[j] = 0.5 * (ds[j] * phi[j] - dphi[j]);
    }
    Ok(r)
}

/// `‖r‖₂ / ‖ψ‖₂` for the ordered Hamiltonian applied to `ψ`.
pub fn nno_residual(v: &PotentialGrid, s: &PrincipalFunction1D, psi: &Wavefunction, order: DiffOrder) -> Result<f64> {
    let r = nno_residual_samples(v, s, psi, order)?;
    let h = v.grid.h;
    Ok(trapezoid_sq(&r, h).sqrt() / psi.norm())
}

/// Largest `|½(S′)² − V|` over the nodes where the stencil fits.
pub fn hje_residual_1d(v: &PotentialGrid, s: &PrincipalFunction1D, order: DiffOrder) -> Result<f64> {
    same_grid(&v.grid, &s.grid)?;
    let ds = derivative(&s.s, v.grid.h, order);
    let w = order.width();
    Ok((w..v.grid.n - w).map(|j| (0.5 * ds[j] * ds[j] - v.v[j]).abs()).fold(0.0, f64::max))
}

/// `⟨ψ, (½p̂² + V)ψ⟩ = ½∫(ψ′)² + ∫Vψ²` with the symmetric ordering.
///
/// For the zero-energy state this equals `½⟨S″⟩ > 0`: `e^{−S}` is not an
/// eigenstate of the conventionally ordered Hamiltonian at energy zero.
pub fn conventional_energy(v: &PotentialGrid, psi: &Wavefunction) -> Result<f64> {
    same_grid(&v.grid, &psi.grid)?;
    let h = v.grid.h;
    let p = &psi.psi;
    // Forward differences on cells pair with cell-midpoint quadrature.
    let kinetic: f64 = p.windows(2).map(|w| ((w[1] - w[0]) / h).powi(2)).sum::<f64>() * h;
    let potential: f64 = {
        let f: Vec<f64> = p.iter().zip(&v.v).map(|(a, b)| a * a * b).collect();
        h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[f.len() - 1]))
    };
    Ok(0.5 * kinetic + potential)
}

/// Least-squares slope of `log r` against `log h`.
pub fn convergence_order(hs: &[f64], rs: &[f64]) -> Result<f64> {
    if hs.len() != rs.len() || hs.len() < 2 {
        return Err(Error::InvalidArgument("need at least two (h, r) pairs".into()));
    }
    if hs.iter().chain(rs).any(|x| !(*x > 0.0)) {
        return Err(Error::InvalidArgument("spacings and residuals must be positive".into()));
    }
    let xs: Vec<f64> = hs.iter().map(|h| h.ln()).collect();
    let ys: Vec<f64> = rs.iter().map(|r| r.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    Ok(sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Integral of `f` over `[t_0, t_m]` from equally spaced samples
    /// `f[0..=m]`: composite Simpson, closed with a 3/8 panel when `m` is odd.
    fn panel_integral(f: &[f64], h: f64) -> f64 {
        let m = f.len() - 1;
        match m {
            0 => 0.0,
            _ => {
                let simpson_end = if m % 2 == 0 { m } else { m - 3 };
                let mut acc = 0.0;
                let mut j = 0;
                while j < simpson_end {
                    acc += h / 3.0 * (f[j] + 4.0 * f[j + 1] + f[j + 2]);
                    j += 2;
                }
                if m % 2 == 1 {
                    acc += 3.0 * h / 8.0 * (f[j] + 3.0 * f[j + 1] + 3.0 * f[j + 2] + f[j + 3]);
                }
                acc
            }
        }
    }

    fn grid(h: f64) -> Grid1D {
        Grid1D::new(-5.0, 5.0, h).unwrap()
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(anharmonic_s(0.0, 1.0).unwrap(), 0.0);
        let expected = (2f64.powf(1.5) - 1.0) / 3.0;
        assert!((anharmonic_s(1.0, 2.0).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 0.609476).abs() < 1e-6);
        assert!((anharmonic_s(1.0, 1e-9).unwrap() - 0.5).abs() < 1e-9);
        assert_eq!(anharmonic_s(-1.3, 0.7).unwrap(), anharmonic_s(1.3, 0.7).unwrap());
        assert!(anharmonic_s(1.0, 0.0).is_err());
        assert!(anharmonic_s(1.0, -1.0).is_err());
    }

    #[test]
    fn series_and_closed_form_meet_at_the_switch() {
        let lambda = 1e-3;
        let x = (2.0 * SERIES_SWITCH / lambda).sqrt();
        let series = anharmonic_series(x, lambda);
        let closed = anharmonic_closed(x, lambda);
        assert!((series - closed).abs() < 1e-12 * closed);
        let x = 3.0;
        assert!((anharmonic_series(x, 1e-9) - anharmonic_closed(x, 1e-9)).abs() < 1e-12);
    }

    #[test]
    fn harmonic_quadrature() {
        let g = grid(1e-3);
        let s = solve_hje_1d(&PotentialGrid::anharmonic(g, 0.0).unwrap());
        for (j, v) in s.values().iter().enumerate() {
            assert!((v - 0.5 * g.x(j).powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn zero_potential_gives_zero_s() {
        let g = grid(1e-2);
        let s = solve_hje_1d(&PotentialGrid::from_fn(g, |_| 0.0).unwrap());
        assert!(s.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn invalid_potentials() {
        let g = grid(1e-2);
        assert!(matches!(PotentialGrid::from_fn(g, |x| x), Err(Error::InvalidPotential(_))));
        assert!(matches!(PotentialGrid::from_fn(g, |x| 1.0 + x * x), Err(Error::InvalidPotential(_))));
    }

    #[test]
    fn off_centre_minimum() {
        let g = Grid1D::new(-3.0, 5.0, 1e-3).unwrap();
        let v = PotentialGrid::from_fn(g, |x| 0.5 * (x - 1.0).powi(2)).unwrap();
        assert!((v.x_star() - 1.0).abs() < 1e-12);
        let s = solve_hje_1d(&v);
        for (j, val) in s.values().iter().enumerate() {
            assert!((val - 0.5 * (g.x(j) - 1.0).powi(2)).abs() < 1e-8);
        }
    }

    #[test]
    fn cumulative_matches_full_panels() {
        let f: Vec<f64> = (0..40).map(|j| (0.1 * j as f64).sin()).collect();
        let c = cumulative(&f, 0.1);
        for j in 2..f.len() {
            assert!((c[j] - panel_integral(&f[..=j], 0.1)).abs() < 1e-14);
            assert!((c[j] - (1.0 - (0.1 * j as f64).cos())).abs() < 1e-5);
        }
    }

    #[test]
    fn gaussian_ground_state() {
        let g = grid(1e-3);
        let s = solve_hje_1d(&PotentialGrid::anharmonic(g, 0.0).unwrap());
        let psi = ground_state(&s).unwrap();
        assert!((psi.norm() - 1.0).abs() < 1e-12);
        let c = std::f64::consts::PI.powf(-0.25);
        for (j, p) in psi.values().iter().enumerate() {
            assert!((p - c * (-0.5 * g.x(j).powi(2)).exp()).abs() < 1e-8);
        }
    }

    #[test]
    fn even_potential_gives_even_results() {
        let g = grid(1e-3);
        let v = PotentialGrid::anharmonic(g, 1.0).unwrap();
        let s = solve_hje_1d(&v);
        let psi = ground_state(&s).unwrap();
        let n = g.n;
        for j in 0..n {
            assert!((s.values()[j] - s.values()[n - 1 - j]).abs() < 1e-12);
            assert!((psi.values()[j] - psi.values()[n - 1 - j]).abs() < 1e-12);
        }
        let peak = (0..n).max_by(|&i, &j| psi.values()[i].total_cmp(&psi.values()[j])).unwrap();
        assert_eq!(peak, s.star());
    }

    #[test]
    fn harmonic_annihilation() {
        let g = grid(1e-3);
        let v = PotentialGrid::anharmonic(g, 0.0).unwrap();
        let s = solve_hje_1d(&v);
        let psi = ground_state(&s).unwrap();
        assert!(nno_residual(&v, &s, &psi, DiffOrder::Second).unwrap() <= 1e-5);
    }

    #[test]
    fn anharmonic_annihilation_with_closed_form() {
        let g = grid(1e-3);
        let v = PotentialGrid::anharmonic(g, 1.0).unwrap();
        let s = anharmonic_principal(g, 1.0).unwrap();
        let psi = ground_state(&s).unwrap();
        let r2 = nno_residual(&v, &s, &psi, DiffOrder::Second).unwrap();
        let r4 = nno_residual(&v, &s, &psi, DiffOrder::Fourth).unwrap();
        assert!(r2 <= 1e-5, "{r2}");
        assert!(r4 <= 1e-6, "{r4}");
    }

    #[test]
    fn second_order_convergence() {
        let hs = [4e-3, 2e-3, 1e-3];
        let mut nno = Vec::new();
        let mut hje = Vec::new();
        for h in hs {
            let g = grid(h);
            let v = PotentialGrid::anharmonic(g, 1.0).unwrap();
            let s = solve_hje_1d(&v);
            let psi = ground_state(&s).unwrap();
            nno.push(nno_residual(&v, &s, &psi, DiffOrder::Second).unwrap());
            hje.push(hje_residual_1d(&v, &s, DiffOrder::Second).unwrap());
        }
        let p = convergence_order(&hs, &nno).unwrap();
        assert!((p - 2.0).abs() <= 0.1, "{p}");
        for w in hje.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio / 4.0 - 1.0).abs() <= 0.15, "{ratio}");
        }
    }

    #[test]
    fn wrong_sign_is_not_annihilated() {
        let g = grid(1e-3);
        let v = PotentialGrid::anharmonic(g, 1.0).unwrap();
        let s = anharmonic_principal(g, 1.0).unwrap();
        let neg: Vec<f64> = s.values().iter().map(|x| -x).collect();
        let wrong = wavefunction_from_exponent(g, &neg).unwrap();
        assert!(nno_residual(&v, &s, &wrong, DiffOrder::Second).unwrap() > 0.1);
    }

    #[test]
    fn conventional_ordering_has_positive_energy() {
        let g = grid(1e-3);
        let v = PotentialGrid::anharmonic(g, 1.0).unwrap();
        let psi = ground_state(&solve_hje_1d(&v)).unwrap();
        let e = conventional_energy(&v, &psi).unwrap();
        assert!(e > 0.1, "{e}");
        let harmonic = PotentialGrid::anharmonic(g, 0.0).unwrap();
        let e0 = conventional_energy(&harmonic, &ground_state(&solve_hje_1d(&harmonic)).unwrap()).unwrap();
        assert!((e0 - 0.5).abs() < 1e-5, "{e0}");
    }

    #[test]
    fn grid_mismatch_is_rejected() {
        let v = PotentialGrid::anharmonic(grid(1e-2), 1.0).unwrap();
        let s = anharmonic_principal(grid(2e-2), 1.0).unwrap();
        let psi = ground_state(&s).unwrap();
        assert!(nno_residual(&v, &s, &psi, DiffOrder::Second).is_err());
    }
}
