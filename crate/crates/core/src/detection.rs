//! Interference of two vortex components and the analysis of its density.
//!
//! All densities are transverse (integrated over `z`), in m^-2. Grids are
//! square-celled, centred on the trap axis and stored row-major with `y`
//! increasing by row.

use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::quadrature::{integrate_1d_breaks, QuadratureSpec};
use crate::traps::{HarmonicTrap, ThomasFermiProfile, WavefunctionAnsatz};
use crate::C64;

/// Radial shape used for each charge.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum RadialModel {
    Harmonic(HarmonicTrap),
    ThomasFermi(ThomasFermiProfile),
}

impl RadialModel {
    pub fn l_perp(&self) -> f64 {
        match self {
            RadialModel::Harmonic(t) => t.l_perp(),
            RadialModel::ThomasFermi(p) => p.trap().l_perp(),
        }
    }

    pub fn ansatz(&self, ell: i32) -> Result<WavefunctionAnsatz> {
        match self {
            RadialModel::Harmonic(t) => Ok(WavefunctionAnsatz::harmonic_vortex(*t, ell)),
            RadialModel::ThomasFermi(p) => WavefunctionAnsatz::tf_vortex(*p, ell),
        }
    }

    /// Half-width covering the cloud: `6 L_perp`, or 20% past the outer
    /// Thomas-Fermi radius when that is larger.
    pub fn default_extent(&self) -> f64 {
        let scaled = match self {
            RadialModel::Harmonic(_) => 6.0,
            RadialModel::ThomasFermi(p) => f64::max(6.0, 1.2 * p.radii_scaled().1),
        };
        scaled * self.l_perp()
    }

    /// `<rho^2>` of charge `ell` in units of `L_perp^2`.
    pub fn mean_rho_sq_scaled(&self, ell: i32) -> Result<f64> {
        let psi = self.ansatz(ell)?;
        if let RadialModel::Harmonic(_) = self {
            return Ok(f64::from(ell.unsigned_abs()) + 1.0);
        }
        let spec = QuadratureSpec::with_tolerances(0.0, 1e-10);
        let est = integrate_1d_breaks(
            |r| {
                let v = psi.radial(r);
                2.0 * PI * r * r * r * v * v
            },
            &psi.radial_breakpoints(),
            &spec,
        )?;
        Ok(est.value)
    }
}

/// `alpha |l1> + beta e^{i theta} |l2>` with real amplitudes.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VortexSuperposition {
    alpha: f64,
    beta: f64,
    theta: f64,
    ell1: i32,
    ell2: i32,
    radial: RadialModel,
    psi1: WavefunctionAnsatz,
    psi2: WavefunctionAnsatz,
}

impl VortexSuperposition {
    pub fn new(alpha: f64, beta: f64, theta: f64, ell1: i32, ell2: i32, radial: RadialModel) -> Result<Self> {
        require_finite("theta", theta)?;
        if !(alpha >= 0.0 && beta >= 0.0) {
            return Err(invalid("amplitudes", "alpha and beta must be non-negative"));
        }
        if (alpha * alpha + beta * beta - 1.0).abs() > 1e-12 {
            return Err(invalid("amplitudes", "alpha^2 + beta^2 must equal 1"));
        }
        if ell1 == ell2 {
            return Err(invalid("charges", "the two charges must differ"));
        }
        let psi1 = radial.ansatz(ell1)?;
        let psi2 = radial.ansatz(ell2)?;
        Ok(Self { alpha, beta, theta, ell1, ell2, radial, psi1, psi2 })
    }

    /// `ell` and `-ell` with populations `p_plus : 1 - p_plus`.
    pub fn opposite(p_plus: f64, theta: f64, ell: i32, radial: RadialModel) -> Result<Self> {
        if !(0.0..=1.0).contains(&p_plus) {
            return Err(invalid("p_plus", "must lie in [0, 1]"));
        }
        Self::new(libm::sqrt(p_plus), libm::sqrt(1.0 - p_plus), theta, ell, -ell, radial)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }
    pub fn beta(&self) -> f64 {
        self.beta
    }
    pub fn theta(&self) -> f64 {
        self.theta
    }
    pub fn charges(&self) -> (i32, i32) {
        (self.ell1, self.ell2)
    }
    pub fn radial(&self) -> &RadialModel {
        &self.radial
    }

    /// Fringe order `|l1 - l2|`.
    pub fn fringe_order(&self) -> u32 {
        (self.ell1 - self.ell2).unsigned_abs()
    }

    /// Density in units of `L_perp^-2` at `(rho, phi)` with `rho` in `L_perp`.
    pub fn density_scaled(&self, rho: f64, phi: f64) -> f64 {
        let r1 = self.psi1.radial(rho);
        let r2 = self.psi2.radial(rho);
        let (a, b) = (self.alpha * r1, self.beta * r2);
        let phase = f64::from(self.ell1 - self.ell2) * phi - self.theta;
        f64::max(0.0, a * a + b * b + 2.0 * a * b * libm::cos(phase))
    }

    /// Complex amplitude in oscillator units; its modulus squared is the density.
    pub fn amplitude_scaled(&self, rho: f64, phi: f64) -> C64 {
        C64::from_polar(self.alpha * self.psi1.radial(rho), f64::from(self.ell1) * phi)
            + C64::from_polar(self.beta * self.psi2.radial(rho), f64::from(self.ell2) * phi + self.theta)
    }
}

/// Transverse density (m^-2) at `(rho, phi)`, `rho` in metres.
pub fn interference_density(state: &VortexSuperposition, rho: f64, phi: f64) -> f64 {
    let l = state.radial.l_perp();
    state.density_scaled(rho / l, phi) / (l * l)
}

/// Contrast `2 alpha beta` of the closed form, valid when both charges share
/// a radial profile (`l2 = -l1`).
pub fn visibility_closed_form(state: &VortexSuperposition) -> Result<f64> {
    if state.ell1.unsigned_abs() != state.ell2.unsigned_abs() {
        return Err(Error::Unsupported("closed-form visibility needs |l1| = |l2|".into()));
    }
    Ok(2.0 * state.alpha * state.beta)
}

/// Charge `+1` added to both components by a probe beam.
pub fn probe_shift(state: &VortexSuperposition) -> Result<VortexSuperposition> {
    if state.ell1 != -state.ell2 {
        return Err(invalid("charges", "probe shift expects charges (l, -l)"));
    }
    VortexSuperposition::new(state.alpha, state.beta, state.theta, state.ell1 + 1, state.ell2 + 1, state.radial)
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridGeometry {
    pub nx: usize,
    pub ny: usize,
    /// Half-width in metres; the grid spans `[-extent, extent]` on both axes.
    pub extent: f64,
}

impl GridGeometry {
    pub fn new(nx: usize, ny: usize, extent: f64) -> Result<Self> {
        if nx < 64 || ny < 64 {
            return Err(invalid("grid", "need at least 64 cells per axis"));
        }
        if nx != ny {
            return Err(invalid("grid", "cells must be square, so nx = ny"));
        }
        require_positive("extent", extent)?;
        Ok(Self { nx, ny, extent })
    }

    pub fn cell(&self) -> f64 {
        2.0 * self.extent / self.nx as f64
    }

    pub fn x(&self, i: usize) -> f64 {
        -self.extent + (i as f64 + 0.5) * self.cell()
    }

    pub fn y(&self, j: usize) -> f64 {
        -self.extent + (j as f64 + 0.5) * 2.0 * self.extent / self.ny as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensityGrid {
    pub geometry: GridGeometry,
    /// Row-major, `values[j * nx + i]` at `(x_i, y_j)`.
    pub values: Vec<f64>,
}

/// One row of the density at `y_j`.
pub fn render_row(state: &VortexSuperposition, geometry: &GridGeometry, j: usize) -> Vec<f64> {
    let y = geometry.y(j);
    (0..geometry.nx)
        .map(|i| {
            let x = geometry.x(i);
            interference_density(state, libm::hypot(x, y), libm::atan2(y, x))
        })
        .collect()
}

/// Density sampled at cell centres.
pub fn render_grid(state: &VortexSuperposition, nx: usize, ny: usize, extent: f64) -> Result<DensityGrid> {
    let geometry = GridGeometry::new(nx, ny, extent)?;
    let rows = (0..ny).map(|j| render_row(state, &geometry, j)).collect();
    DensityGrid::from_rows(geometry, rows)
}

impl DensityGrid {
    pub fn from_rows(geometry: GridGeometry, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != geometry.ny || rows.iter().any(|r| r.len() != geometry.nx) {
            return Err(invalid("grid", "row shape does not match the geometry"));
        }
        let values: Vec<f64> = rows.into_iter().flatten().collect();
        if values.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(invalid("grid", "densities must be finite and non-negative"));
        }
        Ok(Self { geometry, values })
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.values[j * self.geometry.nx + i]
    }

    /// Sum of density times cell area.
    pub fn total(&self) -> f64 {
        let h = self.geometry.cell();
        self.values.iter().sum::<f64>() * h * h
    }

    fn require_signal(&self) -> Result<f64> {
        let s: f64 = self.values.iter().sum();
        if !(s > 0.0) {
            return Err(Error::Analysis("grid has no density".into()));
        }
        Ok(s)
    }

    fn cells(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        let g = self.geometry;
        (0..g.ny).flat_map(move |j| (0..g.nx).map(move |i| (g.x(i), g.y(j), self.at(i, j))))
    }

    /// `sum f e^{-i k phi}` over all cells, `k = 0..=kmax`.
    fn azimuthal_moments(&self, kmax: usize) -> Vec<C64> {
        let mut m = alloc::vec![C64::new(0.0, 0.0); kmax + 1];
        for (x, y, f) in self.cells() {
            if f == 0.0 {
                continue;
            }
            let r = libm::hypot(x, y);
            let step = if r > 0.0 { C64::new(x / r, -y / r) } else { C64::new(1.0, 0.0) };
            let mut w = C64::new(f, 0.0);
            for mk in m.iter_mut() {
                *mk += w;
                w *= step;
            }
        }
        m
    }

    /// `<rho^2>` in m^2.
    pub fn mean_rho_sq(&self) -> Result<f64> {
        let s = self.require_signal()?;
        Ok(self.cells().map(|(x, y, f)| f * (x * x + y * y)).sum::<f64>() / s)
    }

    /// Radius (m) of the largest ring-averaged density, from bins one cell wide.
    pub fn peak_ring_radius(&self) -> Result<f64> {
        self.require_signal()?;
        let h = self.geometry.cell();
        let nbins = (self.geometry.extent / h) as usize;
        let mut sum = alloc::vec![0.0; nbins];
        let mut rsum = alloc::vec![0.0; nbins];
        let mut count = alloc::vec![0usize; nbins];
        for (x, y, f) in self.cells() {
            let r = libm::hypot(x, y);
            let b = (r / h) as usize;
            if b < nbins {
                sum[b] += f;
                rsum[b] += r;
                count[b] += 1;
            }
        }
        let best = (0..nbins)
            .filter(|&b| count[b] > 0)
            .max_by(|&a, &b| (sum[a] / count[a] as f64).total_cmp(&(sum[b] / count[b] as f64)))
            .ok_or_else(|| Error::Analysis("no populated radial bins".into()))?;
        Ok(rsum[best] / count[best] as f64)
    }

    /// Bilinear interpolation at `(x, y)` in metres; zero outside the grid.
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let g = self.geometry;
        let h = g.cell();
        let u = (x + g.extent) / h - 0.5;
        let v = (y + g.extent) / h - 0.5;
        if !(u >= 0.0 && v >= 0.0) || u > (g.nx - 1) as f64 || v > (g.ny - 1) as f64 {
            return 0.0;
        }
        let (i, j) = ((u as usize).min(g.nx - 2), (v as usize).min(g.ny - 2));
        let (fu, fv) = (u - i as f64, v - j as f64);
        let row = |jj: usize| self.at(i, jj) * (1.0 - fu) + self.at(i + 1, jj) * fu;
        row(j) * (1.0 - fv) + row(j + 1) * fv
    }

    /// Density on the circle of radius `r` at `n` equally spaced angles from 0.
    pub fn angular_profile(&self, r: f64, n: usize) -> Vec<f64> {
        (0..n)
            .map(|k| {
                let phi = 2.0 * PI * k as f64 / n as f64;
                self.sample(r * libm::cos(phi), r * libm::sin(phi))
            })
            .collect()
    }
}

/// Highest azimuthal harmonic searched for fringes.
const MAX_HARMONIC: usize = 32;

/// Strongest azimuthal harmonic `k >= 1` and its moment, with the `k = 0` sum.
fn dominant_harmonic(grid: &DensityGrid) -> Result<(usize, C64, f64)> {
    grid.require_signal()?;
    let m = grid.azimuthal_moments(MAX_HARMONIC);
    let (k, mk) = m
        .iter()
        .enumerate()
        .skip(1)
        .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
        .map(|(k, v)| (k, *v))
        .expect("at least one harmonic");
    Ok((k, mk, m[0].re))
}

/// Fringe contrast `(I_max - I_min) / (I_max + I_min)` estimated from the
/// grid. Each ring carries `I_0 (1 + V cos(k phi - theta))`, so the extremes
/// follow from the mean and the dominant harmonic of the density,
/// `V = 2 |F_k| / F_0`, with `F_k` the cell sums weighted by `e^{-i k phi}`.
pub fn visibility(grid: &DensityGrid) -> Result<f64> {
    let (_, mk, m0) = dominant_harmonic(grid)?;
    Ok((2.0 * mk.norm() / m0).clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PatternAnalysis {
    pub visibility: f64,
    pub lobe_count: usize,
    /// Pattern rotation relative to a reference, radians.
    pub rotation: f64,
}

/// Samples around the ring when counting lobes.
const RING_SAMPLES: usize = 1440;

/// Number of bright lobes on the ring of peak radial density. A lobe is a
/// run of the angular profile above the midpoint between its minimum and
/// maximum.
pub fn count_lobes(grid: &DensityGrid) -> Result<usize> {
    let r = grid.peak_ring_radius()?;
    let prof = grid.angular_profile(r, RING_SAMPLES);
    let hi = prof.iter().cloned().fold(f64::MIN, f64::max);
    let lo = prof.iter().cloned().fold(f64::MAX, f64::min);
    if !(hi > 0.0) || (hi - lo) / (hi + lo) < 0.1 {
        return Err(Error::Analysis("ring contrast too low to resolve lobes".into()));
    }
    let threshold = 0.5 * (hi + lo);
    let above: Vec<bool> = prof.iter().map(|v| *v > threshold).collect();
    // count rising edges around the circle
    let n = above.len();
    Ok((0..n).filter(|&k| above[k] && !above[(k + n - 1) % n]).count())
}

/// Angle by which `grid` is rotated relative to `reference`, in
/// `[0, 2 pi / k)` for fringe order `k`. The peak of the circular
/// cross-correlation of the two patterns sits at minus the phase of the
/// cross-spectrum in the dominant harmonic divided by `k`.
pub fn pattern_rotation(grid: &DensityGrid, reference: &DensityGrid) -> Result<f64> {
    if grid.geometry != reference.geometry {
        return Err(invalid("grid", "patterns must share a geometry"));
    }
    let (k, mref, m0) = dominant_harmonic(reference)?;
    if 2.0 * mref.norm() / m0 < 1e-3 {
        return Err(Error::Analysis("reference pattern has no fringes".into()));
    }
    let m = grid.azimuthal_moments(k);
    let mk = m[k];
    if 2.0 * mk.norm() / m[0].re < 1e-3 {
        return Err(Error::Analysis("pattern has no fringes".into()));
    }
    let period = 2.0 * PI / k as f64;
    let raw = -(mk * mref.conj()).arg() / k as f64;
    let r = raw - period * libm::floor(raw / period);
    Ok(if period - r < 1e-9 * period { 0.0 } else { r })
}

/// Visibility, lobes and rotation relative to `reference`.
pub fn analyze(grid: &DensityGrid, reference: &DensityGrid) -> Result<PatternAnalysis> {
    Ok(PatternAnalysis {
        visibility: visibility(grid)?,
        lobe_count: count_lobes(grid)?,
        rotation: pattern_rotation(grid, reference)?,
    })
}

/// Result of assigning amplitudes from a visibility and a shifted pattern.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum AmplitudeAssignment {
    /// `alpha = beta`: both readings coincide.
    Symmetric { alpha: f64, beta: f64 },
    /// `alpha` belongs to `+l`, `beta` to `-l`. `mismatch` is the distance of
    /// the measured `<rho^2>` from the chosen reading, `rejected_mismatch`
    /// from the other one, both in `L_perp^2`.
    Assigned { alpha: f64, beta: f64, mismatch: f64, rejected_mismatch: f64 },
}

/// The two solutions `(larger, smaller)` of `a^2 + b^2 = 1`, `2 a b = V`.
pub fn amplitudes_from_visibility(v: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0 + 1e-9).contains(&v) {
        return Err(invalid("visibility", "must lie in [0, 1]"));
    }
    let d = libm::sqrt(f64::max(0.0, 1.0 - v * v));
    Ok((libm::sqrt(0.5 * (1.0 + d)), libm::sqrt(0.5 * (1.0 - d))))
}

/// Decide which amplitude sits on `+l` using the pattern after the probe
/// shift `(l, -l) -> (l + 1, 1 - l)`. The two shifted charges have
/// different radial sizes, so the grid's `<rho^2>` is linear in `alpha^2`.
pub fn disambiguate_amplitudes(
    v_before: f64,
    grid_after: &DensityGrid,
    ell: i32,
    radial: &RadialModel,
) -> Result<AmplitudeAssignment> {
    let (big, small) = amplitudes_from_visibility(v_before)?;
    if big - small < 1e-6 {
        return Ok(AmplitudeAssignment::Symmetric { alpha: big, beta: small });
    }
    let l = radial.l_perp();
    let m1 = radial.mean_rho_sq_scaled(ell + 1)?;
    let m2 = radial.mean_rho_sq_scaled(1 - ell)?;
    let measured = grid_after.mean_rho_sq()? / (l * l);
    let predict = |a: f64| a * a * m1 + (1.0 - a * a) * m2;
    let (d_big, d_small) = ((measured - predict(big)).abs(), (measured - predict(small)).abs());
    Ok(if d_big <= d_small {
        AmplitudeAssignment::Assigned { alpha: big, beta: small, mismatch: d_big, rejected_mismatch: d_small }
    } else {
        AmplitudeAssignment::Assigned { alpha: small, beta: big, mismatch: d_small, rejected_mismatch: d_big }
    })
}
