//! Overlap integrals that fix the coefficients of the rate equations.
//!
//! Energies and interaction rates are stored in rad/s. The light-overlap
//! factors `I^(2l)_gg` and `I^(l)_{g+-}` are dimensionless: the transverse
//! light profile enters as `(sqrt2 rho / w)^l`, so raw radial moments are
//! divided by the matching power of the light waist `w`.

use alloc::format;
use alloc::string::ToString;
use core::f64::consts::{PI, SQRT_2};

use crate::error::{invalid, require_positive, Error, Result};
use crate::quadrature::{integrate_2d, QuadratureSpec};
use crate::traps::{kappa_from_eta, HarmonicTrap, WavefunctionAnsatz};
use crate::units::HBAR;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralSet {
    pub ell: i32,
    /// Light waist (m).
    pub w: f64,
    pub t_g: f64,
    pub v_g: f64,
    /// Shared by both vortex states, which have the same density.
    pub t_pm: f64,
    pub v_pm: f64,
    pub i_gg: f64,
    pub i_gp: f64,
    pub i_gm: f64,
    pub i_pp: f64,
    pub i_mm: f64,
    pub i_pm: f64,
    pub i2l_gg: f64,
    pub il_gp: f64,
    pub il_pg: f64,
    pub il_gm: f64,
    pub il_mg: f64,
}

impl IntegralSet {
    /// Copy with every rate divided by `unit` (rad/s), for integrating in
    /// the dimensionless time `unit * t`.
    pub fn rates_in_units_of(&self, unit: f64) -> Self {
        Self {
            t_g: self.t_g / unit,
            v_g: self.v_g / unit,
            t_pm: self.t_pm / unit,
            v_pm: self.v_pm / unit,
            i_gg: self.i_gg / unit,
            i_gp: self.i_gp / unit,
            i_gm: self.i_gm / unit,
            i_pp: self.i_pp / unit,
            i_mm: self.i_mm / unit,
            i_pm: self.i_pm / unit,
            ..*self
        }
    }

    /// `int |psi_g|^2 rho^{2l}` (m^{2l}), undoing the waist scaling.
    pub fn raw_i2l_gg(&self) -> f64 {
        self.i2l_gg * libm::pow(self.w / SQRT_2, 2.0 * f64::from(self.ell.unsigned_abs()))
    }

    /// `int psi_g rho^l |psi_+|` (m^l), undoing the waist scaling.
    pub fn raw_il_gp(&self) -> f64 {
        self.il_gp * libm::pow(self.w / SQRT_2, f64::from(self.ell.unsigned_abs()))
    }

    /// Every coefficient with its name, in a fixed order.
    pub fn named_values(&self) -> [(&'static str, f64); 15] {
        [
            ("t_g", self.t_g),
            ("v_g", self.v_g),
            ("t_pm", self.t_pm),
            ("v_pm", self.v_pm),
            ("i_gg", self.i_gg),
            ("i_gp", self.i_gp),
            ("i_gm", self.i_gm),
            ("i_pp", self.i_pp),
            ("i_mm", self.i_mm),
            ("i_pm", self.i_pm),
            ("i2l_gg", self.i2l_gg),
            ("il_gp", self.il_gp),
            ("il_pg", self.il_pg),
            ("il_gm", self.il_gm),
            ("il_mg", self.il_mg),
        ]
    }

    /// Largest relative difference over all coefficients, with its name.
    /// Pairs where both sides are zero are skipped.
    pub fn max_relative_difference(&self, other: &Self) -> (&'static str, f64) {
        let mut worst = ("", 0.0);
        for ((name, a), (_, b)) in self.named_values().iter().zip(other.named_values().iter()) {
            let scale = f64::max(a.abs(), b.abs());
            if scale == 0.0 {
                continue;
            }
            let rel = (a - b).abs() / scale;
            if rel > worst.1 || worst.0.is_empty() {
                worst = (name, rel);
            }
        }
        worst
    }
}

/// Closed forms for the harmonic trial states with `|ell| = 2`.
/// `kappa` is the interaction rate in rad/s, `w` the light waist in metres.
pub fn harmonic_analytic_integrals(trap: &HarmonicTrap, kappa: f64, w: f64, ell: i32) -> Result<IntegralSet> {
    if ell.abs() != 2 {
        return Err(Error::Unsupported(format!("closed-form integrals exist only for |ell| = 2, got {ell}")));
    }
    require_positive("w", w)?;
    if !kappa.is_finite() || kappa < 0.0 {
        return Err(invalid("kappa", "must be finite and non-negative"));
    }
    let (wp, wz) = (trap.omega_perp, trap.omega_z);
    let l2 = trap.l_perp() * trap.l_perp();
    let ground = 0.25 * wz + 0.5 * wp;
    let vortex = 0.25 * wz + 1.5 * wp;
    let il = 2.0 * SQRT_2 * l2 / (w * w);
    Ok(IntegralSet {
        ell,
        w,
        t_g: ground,
        v_g: ground,
        t_pm: vortex,
        v_pm: vortex,
        i_gg: 4.0 * kappa,
        i_gp: kappa,
        i_gm: kappa,
        i_pp: 1.5 * kappa,
        i_mm: 1.5 * kappa,
        i_pm: 1.5 * kappa,
        i2l_gg: 8.0 * l2 * l2 / (w * w * w * w),
        il_gp: il,
        il_pg: il,
        il_gm: il,
        il_mg: il,
    })
}

/// Light waist for which both harmonic light overlaps equal one,
/// `w^2 = 2 sqrt2 L_perp^2`.
pub fn unit_overlap_waist(trap: &HarmonicTrap) -> f64 {
    libm::pow(2.0, 0.75) * trap.l_perp()
}

/// Harmonic closed forms with `kappa` computed from `eta`.
pub fn harmonic_analytic_from_eta(trap: &HarmonicTrap, eta: f64, w: f64, ell: i32) -> Result<IntegralSet> {
    harmonic_analytic_integrals(trap, kappa_from_eta(eta, trap), w, ell)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum KineticTerms {
    Include,
    /// Set `T_g` and `T_+-` to zero (Thomas-Fermi profiles have no usable
    /// gradient at their edges).
    Drop,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntegralOptions {
    pub quadrature: QuadratureSpec,
    pub kinetic: KineticTerms,
    /// Multiply the light overlaps by the Gaussian envelope of the beam
    /// (`e^{-2 rho^2/w^2}` and `e^{-rho^2/w^2}`). Off by default.
    pub light_envelope: bool,
}

impl Default for IntegralOptions {
    fn default() -> Self {
        Self { quadrature: QuadratureSpec::default(), kinetic: KineticTerms::Include, light_envelope: false }
    }
}

/// Evaluate every coefficient by 2-D `(rho, z)` quadrature; the azimuthal
/// integral is exact (`2 pi`) because every integrand is phi-independent.
///
/// `eta` is the interaction strength in J m^3 and `w` the light waist in m.
pub fn numeric_integrals(
    ground: &WavefunctionAnsatz,
    vortex_plus: &WavefunctionAnsatz,
    vortex_minus: &WavefunctionAnsatz,
    eta: f64,
    w: f64,
    opts: &IntegralOptions,
) -> Result<IntegralSet> {
    require_positive("w", w)?;
    if !eta.is_finite() || eta < 0.0 {
        return Err(invalid("eta", "must be finite and non-negative"));
    }
    let trap = ground.trap();
    if vortex_plus.trap() != trap || vortex_minus.trap() != trap {
        return Err(Error::InconsistentAnsatz("states live in different traps".to_string()));
    }
    if ground.charge() != 0 {
        return Err(Error::InconsistentAnsatz("ground state carries a vortex".to_string()));
    }
    let ell = vortex_plus.charge();
    if ell == 0 || vortex_minus.charge() != -ell {
        return Err(Error::InconsistentAnsatz(format!(
            "vortex charges must be +l and -l, got {} and {}",
            ell,
            vortex_minus.charge()
        )));
    }
    let kinetic = match opts.kinetic {
        KineticTerms::Include => {
            if ground.radial_derivative(1.0).is_none() {
                return Err(Error::Unsupported(
                    "kinetic terms need a differentiable profile; use KineticTerms::Drop".to_string(),
                ));
            }
            true
        }
        KineticTerms::Drop => false,
    };

    let omega = trap.omega_perp();
    let lp = trap.l_perp();
    let eta_s = eta / (HBAR * omega * lp * lp * lp);
    let w_s = w / lp;
    let lz = trap.l_z_scaled();
    let rho_pts = ground.radial_breakpoints();
    let z_pts = [-10.0 * lz, 0.0, 10.0 * lz];
    let q = &opts.quadrature;
    let cyl = |f: &dyn Fn(f64, f64) -> f64| -> Result<f64> {
        Ok(integrate_2d(|r, z| 2.0 * PI * r * f(r, z), &rho_pts, &z_pts, q)?.value)
    };

    let kinetic_of = |psi: &WavefunctionAnsatz| -> Result<f64> {
        if !kinetic {
            return Ok(0.0);
        }
        let l2 = f64::from(psi.charge()) * f64::from(psi.charge());
        cyl(&|r, z| {
            let rr = psi.radial(r);
            let dr = psi.radial_derivative(r).unwrap_or(0.0);
            let zz = psi.axial(z);
            let dz = psi.axial_derivative(z);
            let centrifugal = if l2 == 0.0 { 0.0 } else { l2 * rr * rr / (r * r) };
            0.5 * ((dr * dr + centrifugal) * zz * zz + rr * rr * dz * dz)
        })
    };
    let potential_of = |psi: &WavefunctionAnsatz| -> Result<f64> {
        cyl(&|r, z| {
            let d = psi.radial(r) * psi.axial(z);
            trap.potential_scaled(r, z) * d * d
        })
    };
    let contact = |a: &WavefunctionAnsatz, b: &WavefunctionAnsatz| -> Result<f64> {
        let v = cyl(&|r, z| {
            let x = a.radial(r) * a.axial(z);
            let y = b.radial(r) * b.axial(z);
            x * x * y * y
        })?;
        Ok(eta_s * v)
    };
    let lf = f64::from(ell.unsigned_abs());
    let envelope = opts.light_envelope;
    let light = |r: f64, power: f64| {
        let base = libm::pow(SQRT_2 * r / w_s, power);
        if envelope {
            base * libm::exp(-power / lf * r * r / (w_s * w_s))
        } else {
            base
        }
    };
    let i2l_gg = cyl(&|r, z| {
        let d = ground.radial(r) * ground.axial(z);
        d * d * light(r, 2.0 * lf)
    })?;
    let il = |v: &WavefunctionAnsatz| {
        cyl(&|r, z| ground.radial(r) * v.radial(r) * ground.axial(z) * v.axial(z) * light(r, lf))
    };
    let il_gp = il(vortex_plus)?;
    let il_gm = il(vortex_minus)?;

    Ok(IntegralSet {
        ell,
        w,
        t_g: kinetic_of(ground)? * omega,
        v_g: potential_of(ground)? * omega,
        t_pm: kinetic_of(vortex_plus)? * omega,
        v_pm: potential_of(vortex_plus)? * omega,
        i_gg: contact(ground, ground)? * omega,
        i_gp: contact(ground, vortex_plus)? * omega,
        i_gm: contact(ground, vortex_minus)? * omega,
        i_pp: contact(vortex_plus, vortex_plus)? * omega,
        i_mm: contact(vortex_minus, vortex_minus)? * omega,
        i_pm: contact(vortex_plus, vortex_minus)? * omega,
        i2l_gg,
        il_gp,
        il_pg: il_gp,
        il_gm,
        il_mg: il_gm,
    })
}

/// Numeric integrals for the harmonic trial states of `trap`.
pub fn harmonic_numeric_integrals(
    trap: &HarmonicTrap,
    eta: f64,
    w: f64,
    ell: i32,
    opts: &IntegralOptions,
) -> Result<IntegralSet> {
    numeric_integrals(
        &WavefunctionAnsatz::harmonic_ground(*trap),
        &WavefunctionAnsatz::harmonic_vortex(*trap, ell),
        &WavefunctionAnsatz::harmonic_vortex(*trap, -ell),
        eta,
        w,
        opts,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traps::{atoms_for_kappa, CondensateParams, MexicanHatTrap, ThomasFermiProfile};
    use crate::units::RB87_MASS;

    fn trap() -> HarmonicTrap {
        HarmonicTrap::from_lengths(RB87_MASS, 2.35e-6, 1.4e-6).unwrap()
    }

    fn eta_for_kappa(trap: &HarmonicTrap, kappa: f64) -> f64 {
        let n = atoms_for_kappa(kappa, 5e-9, trap).unwrap();
        CondensateParams::new(n, 5e-9, trap.mass).unwrap().eta()
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let t = trap();
        let eta = eta_for_kappa(&t, 1700.0);
        let w = unit_overlap_waist(&t);
        let exact = harmonic_analytic_integrals(&t, 1700.0, w, 2).unwrap();
        let num = harmonic_numeric_integrals(&t, eta, w, 2, &IntegralOptions::default()).unwrap();
        let (name, rel) = exact.max_relative_difference(&num);
        assert!(rel < 1e-8, "{name}: {rel:e}");
        assert!((exact.i2l_gg - 1.0).abs() < 1e-12);
        assert!((exact.il_gp - 1.0).abs() < 1e-12);
    }

    #[test]
    fn raw_moments() {
        let t = trap();
        let w = 3.1e-6;
        let s = harmonic_analytic_integrals(&t, 1.0, w, 2).unwrap();
        let l = t.l_perp();
        assert!((s.raw_i2l_gg() - 2.0 * l * l * l * l).abs() < 1e-12 * l.powi(4));
        assert!((s.raw_il_gp() - SQRT_2 * l * l).abs() < 1e-12 * l * l);
    }

    #[test]
    fn other_charges_are_unsupported() {
        let t = trap();
        assert!(matches!(harmonic_analytic_integrals(&t, 1.0, 1e-6, 1), Err(Error::Unsupported(_))));
        assert!(harmonic_analytic_integrals(&t, 1.0, 1e-6, -2).is_ok());
    }

    #[test]
    fn numeric_ell_one_and_three_follow_oscillator_energies() {
        let t = trap();
        let w = unit_overlap_waist(&t);
        for ell in [1, 3] {
            let s = harmonic_numeric_integrals(&t, 0.0, w, ell, &IntegralOptions::default()).unwrap();
            let want = 0.25 * t.omega_z + 0.5 * (f64::from(ell) + 1.0) * t.omega_perp;
            assert!((s.t_pm - want).abs() < 1e-8 * want);
            assert!((s.v_pm - want).abs() < 1e-8 * want);
        }
    }

    #[test]
    fn contact_integrals_scale_linearly_with_eta() {
        let t = trap();
        let w = unit_overlap_waist(&t);
        let o = IntegralOptions::default();
        let a = harmonic_numeric_integrals(&t, 1e-50, w, 2, &o).unwrap();
        let b = harmonic_numeric_integrals(&t, 3e-50, w, 2, &o).unwrap();
        for (x, y) in [(a.i_gg, b.i_gg), (a.i_gp, b.i_gp), (a.i_pm, b.i_pm)] {
            assert!((3.0 * x - y).abs() < 1e-9 * y);
        }
        assert_eq!(a.t_g, b.t_g);
    }

    #[test]
    fn envelope_reduces_light_overlaps() {
        let t = trap();
        let w = unit_overlap_waist(&t);
        let plain = harmonic_numeric_integrals(&t, 0.0, w, 2, &IntegralOptions::default()).unwrap();
        let opts = IntegralOptions { light_envelope: true, ..IntegralOptions::default() };
        let env = harmonic_numeric_integrals(&t, 0.0, w, 2, &opts).unwrap();
        assert!(env.i2l_gg < plain.i2l_gg && env.il_gp < plain.il_gp);
        // closed form with the envelope: int rho^5 e^{-rho^2 (1 + 2/w^2)} ...
        let a = 1.0 + 2.0 / (w / t.l_perp()).powi(2);
        let want = 4.0 / (w / t.l_perp()).powi(4) * 2.0 / (a * a * a);
        assert!((env.i2l_gg - want).abs() < 1e-8 * want);
    }

    #[test]
    fn mismatched_states_rejected() {
        let t = trap();
        let g = WavefunctionAnsatz::harmonic_ground(t);
        let p = WavefunctionAnsatz::harmonic_vortex(t, 2);
        let m = WavefunctionAnsatz::harmonic_vortex(t, -1);
        let o = IntegralOptions::default();
        assert!(matches!(numeric_integrals(&g, &p, &m, 0.0, 1e-6, &o), Err(Error::InconsistentAnsatz(_))));
        let other = HarmonicTrap::new(t.mass, 2.0 * t.omega_perp, t.omega_z).unwrap();
        let m2 = WavefunctionAnsatz::harmonic_vortex(other, -2);
        assert!(matches!(numeric_integrals(&g, &p, &m2, 0.0, 1e-6, &o), Err(Error::InconsistentAnsatz(_))));
        assert!(numeric_integrals(&p, &p, &m, 0.0, 1e-6, &o).is_err());
    }

    #[test]
    fn thomas_fermi_requires_dropping_kinetic_terms() {
        let h = trap();
        let ring = MexicanHatTrap::new(2.0, 0.005, h.mass, h.omega_perp, h.omega_z).unwrap();
        let eta = CondensateParams::new(1e5, 5e-9, h.mass).unwrap().eta();
        let prof = ThomasFermiProfile::new(ring, eta).unwrap();
        let g = WavefunctionAnsatz::tf_ground(prof).unwrap();
        let p = WavefunctionAnsatz::tf_vortex(prof, 2).unwrap();
        let m = WavefunctionAnsatz::tf_vortex(prof, -2).unwrap();
        let w = 1e-6;
        let err = numeric_integrals(&g, &p, &m, eta, w, &IntegralOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Unsupported(_)));
        let opts = IntegralOptions { kinetic: KineticTerms::Drop, ..IntegralOptions::default() };
        let s = numeric_integrals(&g, &p, &m, eta, w, &opts).unwrap();
        assert_eq!(s.t_g, 0.0);
        // rho^l times the ground profile: Cauchy-Schwarz holds with equality
        assert!((s.il_gp * s.il_gp - s.i2l_gg).abs() < 1e-8 * s.i2l_gg);
        assert!(s.v_g < 0.0);
    }
}
