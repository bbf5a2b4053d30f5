//! Trapping potentials, condensate parameters and trial wavefunctions.
//!
//! Internally everything is expressed in transverse oscillator units:
//! lengths in `L_perp = sqrt(hbar / (m w_perp))`, energies in `hbar w_perp`.
//! Methods with a `_scaled` suffix use those units; the rest are SI.

use alloc::format;
use core::f64::consts::PI;

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::quadrature::{integrate_1d, QuadratureSpec};
use crate::special::ln_factorial;
use crate::units::HBAR;
use crate::C64;

/// Anisotropic harmonic trap `V = m/2 (w_perp^2 rho^2 + w_z^2 z^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct HarmonicTrap {
    pub mass: f64,
    pub omega_perp: f64,
    pub omega_z: f64,
}

impl HarmonicTrap {
    pub fn new(mass: f64, omega_perp: f64, omega_z: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        require_positive("omega_perp", omega_perp)?;
        require_positive("omega_z", omega_z)?;
        Ok(Self { mass, omega_perp, omega_z })
    }

    /// Trap with the given oscillator lengths.
    pub fn from_lengths(mass: f64, l_perp: f64, l_z: f64) -> Result<Self> {
        require_positive("mass", mass)?;
        require_positive("l_perp", l_perp)?;
        require_positive("l_z", l_z)?;
        Self::new(mass, HBAR / (mass * l_perp * l_perp), HBAR / (mass * l_z * l_z))
    }

    pub fn l_perp(&self) -> f64 {
        libm::sqrt(HBAR / (self.mass * self.omega_perp))
    }

    pub fn l_z(&self) -> f64 {
        libm::sqrt(HBAR / (self.mass * self.omega_z))
    }

    /// `L_z / L_perp`.
    pub fn l_z_scaled(&self) -> f64 {
        libm::sqrt(self.omega_perp / self.omega_z)
    }

    /// Tighter along z than in the plane.
    pub fn is_pancake(&self) -> bool {
        self.omega_z > self.omega_perp
    }

    pub fn potential(&self, rho: f64, z: f64) -> f64 {
        0.5 * self.mass * (self.omega_perp * self.omega_perp * rho * rho + self.omega_z * self.omega_z * z * z)
    }

    pub fn potential_scaled(&self, rho: f64, z: f64) -> f64 {
        let k = self.omega_z / self.omega_perp;
        0.5 * (rho * rho + k * k * z * z)
    }
}

/// Ring trap `V = -sigma M rho^2 / 2 + lambda g rho^4 / 4 + m w_z^2 z^2 / 2`
/// with `M = m w_perp^2` and `g = m^2 w_perp^3 / hbar`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MexicanHatTrap {
    pub sigma: f64,
    pub lambda: f64,
    pub mass: f64,
    pub omega_perp: f64,
    pub omega_z: f64,
}

impl MexicanHatTrap {
    pub fn new(sigma: f64, lambda: f64, mass: f64, omega_perp: f64, omega_z: f64) -> Result<Self> {
        require_positive("sigma", sigma)?;
        require_positive("lambda", lambda)?;
        require_positive("mass", mass)?;
        require_positive("omega_perp", omega_perp)?;
        require_positive("omega_z", omega_z)?;
        Ok(Self { sigma, lambda, mass, omega_perp, omega_z })
    }

    pub fn big_m(&self) -> f64 {
        self.mass * self.omega_perp * self.omega_perp
    }

    pub fn g(&self) -> f64 {
        self.mass * self.mass * self.omega_perp * self.omega_perp * self.omega_perp / HBAR
    }

    pub fn l_perp(&self) -> f64 {
        libm::sqrt(HBAR / (self.mass * self.omega_perp))
    }

    pub fn l_z(&self) -> f64 {
        libm::sqrt(HBAR / (self.mass * self.omega_z))
    }

    pub fn l_z_scaled(&self) -> f64 {
        libm::sqrt(self.omega_perp / self.omega_z)
    }

    pub fn potential(&self, rho: f64, z: f64) -> f64 {
        let r2 = rho * rho;
        -0.5 * self.sigma * self.big_m() * r2
            + 0.25 * self.lambda * self.g() * r2 * r2
            + 0.5 * self.mass * self.omega_z * self.omega_z * z * z
    }

    pub fn potential_scaled(&self, rho: f64, z: f64) -> f64 {
        let k = self.omega_z / self.omega_perp;
        let r2 = rho * rho;
        -0.5 * self.sigma * r2 + 0.25 * self.lambda * r2 * r2 + 0.5 * k * k * z * z
    }

    /// Radius of the potential minimum and the minimum value (SI).
    pub fn minimum(&self) -> (f64, f64) {
        let (r, v) = self.minimum_scaled();
        (r * self.l_perp(), v * HBAR * self.omega_perp)
    }

    pub fn minimum_scaled(&self) -> (f64, f64) {
        (libm::sqrt(self.sigma / self.lambda), -self.sigma * self.sigma / (4.0 * self.lambda))
    }
}

/// Either trap, for APIs that accept both.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Trap {
    Harmonic(HarmonicTrap),
    MexicanHat(MexicanHatTrap),
}

impl Trap {
    pub fn mass(&self) -> f64 {
        match self {
            Trap::Harmonic(t) => t.mass,
            Trap::MexicanHat(t) => t.mass,
        }
    }
    pub fn omega_perp(&self) -> f64 {
        match self {
            Trap::Harmonic(t) => t.omega_perp,
            Trap::MexicanHat(t) => t.omega_perp,
        }
    }
    pub fn l_perp(&self) -> f64 {
        libm::sqrt(HBAR / (self.mass() * self.omega_perp()))
    }
    pub fn l_z_scaled(&self) -> f64 {
        match self {
            Trap::Harmonic(t) => t.l_z_scaled(),
            Trap::MexicanHat(t) => t.l_z_scaled(),
        }
    }
    pub fn potential_scaled(&self, rho: f64, z: f64) -> f64 {
        match self {
            Trap::Harmonic(t) => t.potential_scaled(rho, z),
            Trap::MexicanHat(t) => t.potential_scaled(rho, z),
        }
    }
}

/// Potential energy (J) at cylindrical position `(rho, z)` in metres.
pub fn potential_value(trap: &Trap, rho: f64, z: f64) -> f64 {
    match trap {
        Trap::Harmonic(t) => t.potential(rho, z),
        Trap::MexicanHat(t) => t.potential(rho, z),
    }
}

/// Atom number, scattering length and mass of the condensate.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CondensateParams {
    pub n_atoms: f64,
    pub a_sc: f64,
    pub mass: f64,
}

impl CondensateParams {
    pub fn new(n_atoms: f64, a_sc: f64, mass: f64) -> Result<Self> {
        require_positive("n_atoms", n_atoms)?;
        require_finite("a_sc", a_sc)?;
        require_positive("mass", mass)?;
        Ok(Self { n_atoms, a_sc, mass })
    }

    /// Interaction strength `4 pi hbar^2 a N / m` (J m^3).
    pub fn eta(&self) -> f64 {
        4.0 * PI * HBAR * HBAR * self.a_sc * self.n_atoms / self.mass
    }
}

/// `kappa = eta / (4 (2 pi)^{3/2} hbar L_perp^2 L_z)` in rad/s.
pub fn kappa_from_eta(eta: f64, trap: &HarmonicTrap) -> f64 {
    let lp = trap.l_perp();
    eta / (4.0 * libm::pow(2.0 * PI, 1.5) * HBAR * lp * lp * trap.l_z())
}

/// `kappa = pi hbar a N / (m (2 pi)^{3/2} L_perp^2 L_z)` in rad/s.
pub fn kappa_from_scattering_length(cond: &CondensateParams, trap: &HarmonicTrap) -> f64 {
    let lp = trap.l_perp();
    PI * HBAR * cond.a_sc * cond.n_atoms / (cond.mass * libm::pow(2.0 * PI, 1.5) * lp * lp * trap.l_z())
}

/// Both forms of `kappa`, checked against each other.
pub fn kappa_from(cond: &CondensateParams, trap: &HarmonicTrap) -> Result<f64> {
    if (cond.mass - trap.mass).abs() > 1e-12 * trap.mass {
        return Err(invalid("mass", "condensate and trap masses differ"));
    }
    let a = kappa_from_scattering_length(cond, trap);
    let b = kappa_from_eta(cond.eta(), trap);
    if (a - b).abs() > 1e-12 * f64::max(a.abs(), b.abs()) {
        return Err(Error::Analysis(format!("kappa forms disagree: {a:e} vs {b:e}")));
    }
    Ok(a)
}

/// Atom number that gives interaction rate `kappa` (rad/s).
pub fn atoms_for_kappa(kappa: f64, a_sc: f64, trap: &HarmonicTrap) -> Result<f64> {
    require_positive("kappa", kappa)?;
    require_positive("a_sc", a_sc)?;
    let lp = trap.l_perp();
    Ok(kappa * trap.mass * libm::pow(2.0 * PI, 1.5) * lp * lp * trap.l_z() / (PI * HBAR * a_sc))
}

/// Thomas-Fermi radii `(R-, R+)` in metres for chemical potential `mu` (J).
/// `R-` is zero once `mu >= 0` and the hole closes.
pub fn tf_radii(trap: &MexicanHatTrap, mu: f64) -> Result<(f64, f64)> {
    require_finite("mu", mu)?;
    let m = trap.big_m();
    let g = trap.g();
    let disc = trap.sigma * trap.sigma * m * m + 4.0 * trap.lambda * g * mu;
    if disc < 0.0 {
        return Err(Error::NoCondensate { mu, minimum: trap.minimum().1 });
    }
    let root = libm::sqrt(disc);
    let r_plus2 = (trap.sigma * m + root) / (trap.lambda * g);
    let r_minus2 = (trap.sigma * m - root) / (trap.lambda * g);
    Ok((libm::sqrt(f64::max(r_minus2, 0.0)), libm::sqrt(r_plus2)))
}

/// Squared radii in oscillator units for `V = -sigma u / 2 + lambda u^2 / 4`.
pub fn tf_radii_sq_scaled(sigma: f64, lambda: f64, mu: f64) -> Result<(f64, f64)> {
    let disc = sigma * sigma + 4.0 * lambda * mu;
    if disc < 0.0 {
        return Err(Error::NoCondensate { mu, minimum: -sigma * sigma / (4.0 * lambda) });
    }
    let root = libm::sqrt(disc);
    Ok((f64::max((sigma - root) / lambda, 0.0), (sigma + root) / lambda))
}

/// Thomas-Fermi density of the ring trap with its chemical potential.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ThomasFermiProfile {
    trap: MexicanHatTrap,
    eta_scaled: f64,
    mu_scaled: f64,
}

impl ThomasFermiProfile {
    /// Profile normalized to one, with `mu` found by bisection.
    pub fn new(trap: MexicanHatTrap, eta: f64) -> Result<Self> {
        let mu = solve_chemical_potential(&trap, eta)?;
        Self::with_mu(trap, eta, mu)
    }

    /// Profile at a prescribed chemical potential (J); not renormalized.
    pub fn with_mu(trap: MexicanHatTrap, eta: f64, mu: f64) -> Result<Self> {
        require_positive("eta", eta)?;
        require_finite("mu", mu)?;
        let e_unit = HBAR * trap.omega_perp;
        let l = trap.l_perp();
        let mu_scaled = mu / e_unit;
        let (_, vmin) = trap.minimum_scaled();
        if mu_scaled <= vmin {
            return Err(Error::NoCondensate { mu, minimum: vmin * e_unit });
        }
        Ok(Self { trap, eta_scaled: eta / (e_unit * l * l * l), mu_scaled })
    }

    pub fn trap(&self) -> &MexicanHatTrap {
        &self.trap
    }
    pub fn mu(&self) -> f64 {
        self.mu_scaled * HBAR * self.trap.omega_perp
    }
    pub fn mu_scaled(&self) -> f64 {
        self.mu_scaled
    }
    pub fn eta_scaled(&self) -> f64 {
        self.eta_scaled
    }

    /// `(R-, R+)` in metres.
    pub fn radii(&self) -> (f64, f64) {
        let (a, b) = self.radii_scaled();
        let l = self.trap.l_perp();
        (a * l, b * l)
    }

    pub fn radii_scaled(&self) -> (f64, f64) {
        let (a, b) = tf_radii_sq_scaled(self.trap.sigma, self.trap.lambda, self.mu_scaled)
            .expect("mu above the minimum by construction");
        (libm::sqrt(a), libm::sqrt(b))
    }

    /// `max(0, (mu - V(rho, 0)) / eta)` in oscillator units.
    pub fn density_scaled(&self, rho: f64) -> f64 {
        f64::max(0.0, (self.mu_scaled - self.trap.potential_scaled(rho, 0.0)) / self.eta_scaled)
    }

    /// Norm of the ground-state ansatz, `pi^{3/2} / eta int (mu - V(u)) du`.
    pub fn ground_norm(&self) -> f64 {
        ground_norm_scaled(&self.trap, self.eta_scaled, self.mu_scaled)
    }
}

fn ground_norm_scaled(trap: &MexicanHatTrap, eta: f64, mu: f64) -> f64 {
    let Ok((u0, u1)) = tf_radii_sq_scaled(trap.sigma, trap.lambda, mu) else {
        return 0.0;
    };
    let (s, l) = (trap.sigma, trap.lambda);
    let prim = |u: f64| mu * u + 0.25 * s * u * u - l * u * u * u / 12.0;
    libm::pow(PI, 1.5) / eta * (prim(u1) - prim(u0))
}

/// Chemical potential (J) that normalizes the Thomas-Fermi ground state of the
/// ring trap, by bisection on `(V_min, V_min + 1e4 hbar w_perp)`.
pub fn solve_chemical_potential(trap: &MexicanHatTrap, eta: f64) -> Result<f64> {
    require_positive("eta", eta)?;
    let e_unit = HBAR * trap.omega_perp;
    let l = trap.l_perp();
    let eta_s = eta / (e_unit * l * l * l);
    let (_, vmin) = trap.minimum_scaled();
    let mut lo = vmin;
    let mut hi = vmin + 1e4;
    let top = ground_norm_scaled(trap, eta_s, hi);
    if top < 1.0 {
        return Err(Error::ChemicalPotentialBracket { reached: top });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if ground_norm_scaled(trap, eta_s, mid) < 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mu = 0.5 * (lo + hi);
    let n = ground_norm_scaled(trap, eta_s, mu);
    if (n - 1.0).abs() > 1e-8 {
        return Err(Error::Analysis(format!("chemical potential bisection stalled at norm {n}")));
    }
    Ok(mu * e_unit)
}

/// Trial wavefunctions `psi = R(rho) Z(z) e^{i l phi}` used for the overlap
/// integrals. `Z` is the normalized Gaussian of width `L_z`, and `R` is
/// normalized against `2 pi rho d rho`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WavefunctionAnsatz {
    /// Harmonic-oscillator ground state (`ell = 0`) or lowest vortex.
    Harmonic { trap: HarmonicTrap, ell: i32 },
    /// Thomas-Fermi profile times `rho^|ell|`, renormalized by `coeff`.
    ThomasFermi { profile: ThomasFermiProfile, ell: i32, coeff: f64 },
}

impl WavefunctionAnsatz {
    pub fn harmonic_ground(trap: HarmonicTrap) -> Self {
        Self::Harmonic { trap, ell: 0 }
    }

    pub fn harmonic_vortex(trap: HarmonicTrap, ell: i32) -> Self {
        Self::Harmonic { trap, ell }
    }

    pub fn tf_ground(profile: ThomasFermiProfile) -> Result<Self> {
        Self::tf_vortex(profile, 0)
    }

    /// The vortex normalization is found numerically and stored.
    pub fn tf_vortex(profile: ThomasFermiProfile, ell: i32) -> Result<Self> {
        let l = ell.unsigned_abs();
        let norm = if l == 0 {
            profile.ground_norm() / libm::sqrt(PI)
        } else {
            let (u0, u1) = tf_radii_sq_scaled(profile.trap.sigma, profile.trap.lambda, profile.mu_scaled)?;
            let spec = QuadratureSpec::with_tolerances(0.0, 1e-13);
            // int_0^inf rho^{2l} D(rho) 2 pi rho d rho = pi int u^l D(u) du
            let est = integrate_1d(
                |u| {
                    let d = profile.density_scaled(libm::sqrt(u));
                    libm::exp(f64::from(l) * libm::log(u)) * d
                },
                u0,
                u1,
                &spec,
            )?;
            PI * est.value
        };
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::Analysis(format!("vortex norm {norm} is not positive")));
        }
        let coeff = 1.0 / libm::sqrt(norm);
        Ok(Self::ThomasFermi { profile, ell, coeff })
    }

    pub fn charge(&self) -> i32 {
        match self {
            Self::Harmonic { ell, .. } | Self::ThomasFermi { ell, .. } => *ell,
        }
    }

    pub fn trap(&self) -> Trap {
        match self {
            Self::Harmonic { trap, .. } => Trap::Harmonic(*trap),
            Self::ThomasFermi { profile, .. } => Trap::MexicanHat(profile.trap),
        }
    }

    pub fn l_z_scaled(&self) -> f64 {
        self.trap().l_z_scaled()
    }

    /// Radial factor `R(rho)`, oscillator units.
    pub fn radial(&self, rho: f64) -> f64 {
        match self {
            Self::Harmonic { ell, .. } => {
                let l = ell.unsigned_abs();
                if l > 0 && rho == 0.0 {
                    return 0.0;
                }
                let power = if l == 0 { 0.0 } else { f64::from(l) * libm::log(rho) };
                libm::exp(power - 0.5 * rho * rho - 0.5 * (libm::log(PI) + ln_factorial(l)))
            }
            Self::ThomasFermi { profile, ell, coeff } => {
                let d = profile.density_scaled(rho);
                if d == 0.0 {
                    return 0.0;
                }
                coeff * libm::pow(rho, f64::from(ell.unsigned_abs())) * libm::sqrt(d)
            }
        }
    }

    /// `dR/drho`. Only the harmonic states are smooth enough for a kinetic term.
    pub fn radial_derivative(&self, rho: f64) -> Option<f64> {
        match self {
            Self::Harmonic { ell, .. } => {
                let l = f64::from(ell.unsigned_abs());
                if rho == 0.0 {
                    let d0 = if l == 1.0 { 1.0 / libm::sqrt(PI) } else { 0.0 };
                    return Some(d0);
                }
                Some(self.radial(rho) * (l / rho - rho))
            }
            Self::ThomasFermi { .. } => None,
        }
    }

    /// Axial factor `Z(z)`, oscillator units.
    pub fn axial(&self, z: f64) -> f64 {
        let lz = self.l_z_scaled();
        libm::exp(-0.5 * z * z / (lz * lz)) / (libm::pow(PI, 0.25) * libm::sqrt(lz))
    }

    pub fn axial_derivative(&self, z: f64) -> f64 {
        let lz = self.l_z_scaled();
        -z / (lz * lz) * self.axial(z)
    }

    /// Complex value in oscillator units.
    pub fn value_scaled(&self, rho: f64, phi: f64, z: f64) -> C64 {
        C64::from_polar(self.radial(rho) * self.axial(z), f64::from(self.charge()) * phi)
    }

    /// Complex value in SI (m^{-3/2}) at `(rho, phi, z)` in metres.
    pub fn value(&self, rho: f64, phi: f64, z: f64) -> C64 {
        let l = self.trap().l_perp();
        self.value_scaled(rho / l, phi, z / l) / libm::pow(l, 1.5)
    }

    /// Radial breakpoints for quadrature, oscillator units.
    pub fn radial_breakpoints(&self) -> alloc::vec::Vec<f64> {
        match self {
            Self::Harmonic { .. } => alloc::vec![0.0, 3.0, 12.0],
            Self::ThomasFermi { profile, .. } => {
                let (rm, rp) = profile.radii_scaled();
                let mut v = alloc::vec![0.0];
                if rm > 0.0 {
                    v.push(rm);
                }
                v.push(rp);
                v.push(rp + 8.0);
                v
            }
        }
    }
}

/// Harmonic trial state (SI) at `(rho, phi, z)`; `ell = 0` is the ground state.
pub fn harmonic_wavefunction(trap: &HarmonicTrap, ell: i32, rho: f64, phi: f64, z: f64) -> C64 {
    WavefunctionAnsatz::harmonic_vortex(*trap, ell).value(rho, phi, z)
}

/// Thomas-Fermi trial state (SI) at `(rho, phi, z)`.
pub fn tf_wavefunction(profile: &ThomasFermiProfile, ell: i32, rho: f64, phi: f64, z: f64) -> Result<C64> {
    Ok(WavefunctionAnsatz::tf_vortex(*profile, ell)?.value(rho, phi, z))
}
