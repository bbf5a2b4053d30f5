//! Laguerre-Gaussian beams, beam splitters and the Mach-Zehnder interferometer
//! that prepares an OAM superposition `a+ |l> + a- |-l>` from a pure `|l>` beam.

use alloc::collections::BTreeMap;
use alloc::format;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::special::{assoc_laguerre, ln_factorial};
use crate::C64;

const UNITARITY_TOL: f64 = 1e-12;

/// Parameters of a single Laguerre-Gaussian mode `LG_p^l` at its waist.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LgModeParams {
    pub ell: i32,
    pub p: u32,
    /// Beam waist, in the same length unit as `rho`.
    pub w0: f64,
}

impl LgModeParams {
    pub fn new(ell: i32, p: u32, w0: f64) -> Result<Self> {
        require_positive("w0", w0)?;
        Ok(Self { ell, p, w0 })
    }
}

/// Complex field of `LG_p^l` at `(rho, phi)` in the waist plane, normalized so
/// that `int |u|^2 rho d rho d phi = 1`.
pub fn lg_mode_amplitude(params: &LgModeParams, rho: f64, phi: f64) -> Result<C64> {
    require_positive("w0", params.w0)?;
    if !(rho.is_finite() && rho >= 0.0) {
        return Err(invalid("rho", "must be finite and non-negative"));
    }
    require_finite("phi", phi)?;
    let l = params.ell.unsigned_abs();
    let p = params.p;
    let w0 = params.w0;
    let x = 2.0 * rho * rho / (w0 * w0);
    let lag = assoc_laguerre(i64::from(p), i64::from(l), x)?;
    if lag == 0.0 || (rho == 0.0 && l > 0) {
        return Ok(C64::new(0.0, 0.0));
    }
    // log of sqrt(2 p! / (pi (|l|+p)!)) * (sqrt2 rho / w0)^|l| * exp(-rho^2/w0^2)
    let ln_norm = 0.5 * (core::f64::consts::LN_2 + ln_factorial(p) - libm::log(PI) - ln_factorial(l + p));
    let ln_radial = if l == 0 { 0.0 } else { f64::from(l) * libm::log(core::f64::consts::SQRT_2 * rho / w0) };
    let mag = libm::exp(ln_norm + ln_radial - rho * rho / (w0 * w0)) * lag / w0;
    Ok(C64::from_polar(1.0, f64::from(params.ell) * phi) * mag)
}

/// Complex amplitudes indexed by OAM charge. May be empty or unnormalized;
/// used for the contents of one interferometer port.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ModeVector {
    pub modes: BTreeMap<i32, C64>,
}

impl ModeVector {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn single(ell: i32, amplitude: C64) -> Self {
        let mut modes = BTreeMap::new();
        modes.insert(ell, amplitude);
        Self { modes }
    }

    pub fn amplitude(&self, ell: i32) -> C64 {
        self.modes.get(&ell).copied().unwrap_or_default()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.modes.values().map(|c| c.norm_sqr()).sum()
    }

    pub fn scaled(&self, factor: C64) -> Self {
        Self { modes: self.modes.iter().map(|(&l, &c)| (l, c * factor)).collect() }
    }

    /// `self * a + other * b`, mode by mode.
    pub fn combine(&self, a: C64, other: &Self, b: C64) -> Self {
        let mut modes = BTreeMap::new();
        for (&l, &c) in &self.modes {
            *modes.entry(l).or_insert(C64::new(0.0, 0.0)) += c * a;
        }
        for (&l, &c) in &other.modes {
            *modes.entry(l).or_insert(C64::new(0.0, 0.0)) += c * b;
        }
        Self { modes }
    }

    /// Relabel every charge through `map`, adding amplitudes that collide.
    pub fn map_charges(&self, map: impl Fn(i32) -> i32) -> Self {
        let mut modes = BTreeMap::new();
        for (&l, &c) in &self.modes {
            *modes.entry(map(l)).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Self { modes }
    }

    /// Largest component-wise distance to `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.modes
            .keys()
            .chain(other.modes.keys())
            .map(|&l| (self.amplitude(l) - other.amplitude(l)).norm())
            .fold(0.0, f64::max)
    }
}

/// A non-empty OAM superposition `sum_l c_l |l>`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OamSuperposition {
    modes: ModeVector,
}

impl OamSuperposition {
    pub fn new(modes: BTreeMap<i32, C64>) -> Result<Self> {
        if modes.is_empty() {
            return Err(Error::EmptySuperposition);
        }
        if modes.values().any(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(invalid("amplitudes", "must be finite"));
        }
        Ok(Self { modes: ModeVector { modes } })
    }

    pub fn from_pairs(pairs: &[(i32, C64)]) -> Result<Self> {
        let mut modes = BTreeMap::new();
        for &(l, c) in pairs {
            *modes.entry(l).or_insert(C64::new(0.0, 0.0)) += c;
        }
        Self::new(modes)
    }

    pub fn from_mode_vector(v: ModeVector) -> Result<Self> {
        Self::new(v.modes)
    }

    pub fn modes(&self) -> &ModeVector {
        &self.modes
    }

    pub fn amplitude(&self, ell: i32) -> C64 {
        self.modes.amplitude(ell)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.modes.norm_sqr()
    }

    pub fn normalized(&self) -> Result<Self> {
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(Self { modes: self.modes.scaled(C64::new(1.0 / libm::sqrt(n), 0.0)) })
    }

    /// Expectation value of the OAM charge, per unit norm.
    pub fn mean_charge(&self) -> Result<f64> {
        let n = self.norm_sqr();
        if n == 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(self.modes.modes.iter().map(|(&l, c)| f64::from(l) * c.norm_sqr()).sum::<f64>() / n)
    }
}

/// Dove prism: `|l> -> |-l>`.
pub fn dove_prism(state: &OamSuperposition) -> OamSuperposition {
    OamSuperposition { modes: state.modes.map_charges(|l| -l) }
}

/// Ideal forked hologram: adds `charge` to every component.
pub fn hologram(modes: &ModeVector, charge: i32) -> ModeVector {
    modes.map_charges(|l| l + charge)
}

/// Lossless two-port beam splitter
/// `(out1, out2) = [[r, t'], [t, r']] (in1, in2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BeamSplitter {
    r: C64,
    t: C64,
    r_prime: C64,
    t_prime: C64,
}

impl BeamSplitter {
    /// Build from all four coefficients; fails unless the matrix is unitary
    /// with `r' = conj(r)` and `t' = -conj(t)`.
    pub fn new(r: C64, t: C64, r_prime: C64, t_prime: C64) -> Result<Self> {
        let dev = [(r.norm_sqr() + t.norm_sqr() - 1.0).abs(), (r_prime - r.conj()).norm(), (t_prime + t.conj()).norm()]
            .into_iter()
            .fold(0.0, f64::max);
        if !(dev <= UNITARITY_TOL) {
            return Err(Error::NonUnitary { deviation: dev });
        }
        Ok(Self { r, t, r_prime, t_prime })
    }

    /// General splitter from the first column.
    pub fn from_column(r: C64, t: C64) -> Result<Self> {
        Self::new(r, t, r.conj(), -t.conj())
    }

    /// Symmetric splitter with real reflection `r~ >= 0` and transmission
    /// `i t~` (`t~ >= 0`).
    pub fn symmetric(r_tilde: f64, t_tilde: f64) -> Result<Self> {
        if !(r_tilde >= 0.0 && t_tilde >= 0.0) {
            return Err(invalid("beam_splitter", "r~ and t~ must be non-negative"));
        }
        let dev = (r_tilde * r_tilde + t_tilde * t_tilde - 1.0).abs();
        if !(dev <= UNITARITY_TOL) {
            return Err(Error::NonUnitary { deviation: dev });
        }
        let r = C64::new(r_tilde, 0.0);
        let t = C64::new(0.0, t_tilde);
        Ok(Self { r, t, r_prime: r, t_prime: t })
    }

    /// Symmetric splitter with mixing angle `theta`: `r~ = cos theta`, `t~ = sin theta`.
    pub fn symmetric_from_angle(theta: f64) -> Result<Self> {
        if !(0.0..=core::f64::consts::FRAC_PI_2).contains(&theta) {
            return Err(invalid("theta", "must lie in [0, pi/2]"));
        }
        Self::symmetric(libm::cos(theta), libm::sin(theta))
    }

    pub fn fifty_fifty() -> Self {
        Self::symmetric(FRAC_1_SQRT_2, FRAC_1_SQRT_2).expect("50/50 splitter is unitary")
    }

    pub fn identity() -> Self {
        let one = C64::new(1.0, 0.0);
        let zero = C64::new(0.0, 0.0);
        Self { r: one, t: zero, r_prime: one, t_prime: zero }
    }

    pub fn r(&self) -> C64 {
        self.r
    }
    pub fn t(&self) -> C64 {
        self.t
    }
    pub fn r_prime(&self) -> C64 {
        self.r_prime
    }
    pub fn t_prime(&self) -> C64 {
        self.t_prime
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        [[self.r, self.t_prime], [self.t, self.r_prime]]
    }
}

/// Amplitudes in the two ports of an interferometer.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TwoPortState {
    pub port1: ModeVector,
    pub port2: ModeVector,
}

impl TwoPortState {
    pub fn new(port1: ModeVector, port2: ModeVector) -> Self {
        Self { port1, port2 }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.port1.norm_sqr() + self.port2.norm_sqr()
    }

    pub fn port1_superposition(&self) -> Result<OamSuperposition> {
        OamSuperposition::from_mode_vector(self.port1.clone())
    }

    pub fn port2_superposition(&self) -> Result<OamSuperposition> {
        OamSuperposition::from_mode_vector(self.port2.clone())
    }
}

pub fn beam_splitter_apply(bs: &BeamSplitter, state: &TwoPortState) -> TwoPortState {
    TwoPortState {
        port1: state.port1.combine(bs.r, &state.port2, bs.t_prime),
        port2: state.port1.combine(bs.t, &state.port2, bs.r_prime),
    }
}

/// Mach-Zehnder: splitter `bs1`, Dove prism in port 1, phase `e^{i phase}` in
/// port 2, then a 50/50 splitter. Input is `u0 |ell>` in port 1.
///
/// With a symmetric `bs1` and `phase = pi`, port 1 leaves as
/// `(u0 / sqrt2) (t~ |ell> + r~ |-ell>)`.
pub fn mach_zehnder(bs1: &BeamSplitter, phase: f64, input_ell: i32, u0: C64) -> Result<TwoPortState> {
    require_finite("phase", phase)?;
    let input = TwoPortState::new(ModeVector::single(input_ell, u0), ModeVector::new());
    let split = beam_splitter_apply(bs1, &input);
    let arms =
        TwoPortState { port1: split.port1.map_charges(|l| -l), port2: split.port2.scaled(C64::from_polar(1.0, phase)) };
    Ok(beam_splitter_apply(&BeamSplitter::fifty_fifty(), &arms))
}

/// Variant for unequal charges: a Gaussian `u0 |0>` enters, forked holograms
/// imprint `ell_port1` and `ell_port2` in the two arms (no Dove prism), giving
/// `(u0 / sqrt2) (t~ |ell_port2> + r~ |ell_port1>)` in port 1 at `phase = pi`.
pub fn mach_zehnder_holograms(
    bs1: &BeamSplitter,
    phase: f64,
    ell_port1: i32,
    ell_port2: i32,
    u0: C64,
) -> Result<TwoPortState> {
    require_finite("phase", phase)?;
    let input = TwoPortState::new(ModeVector::single(0, u0), ModeVector::new());
    let split = beam_splitter_apply(bs1, &input);
    let arms = TwoPortState {
        port1: hologram(&split.port1, ell_port1),
        port2: hologram(&split.port2, ell_port2).scaled(C64::from_polar(1.0, phase)),
    };
    Ok(beam_splitter_apply(&BeamSplitter::fifty_fifty(), &arms))
}

/// The superposition `a+ |ell> + a- |-ell>` from port 1 of [`mach_zehnder`]
/// at `phase = pi`, renormalized to unit norm, as `(a+, a-)`.
pub fn prepared_amplitudes(bs1: &BeamSplitter, ell: i32) -> Result<(C64, C64)> {
    if ell == 0 {
        return Err(invalid("ell", "a vortex needs a non-zero charge"));
    }
    let out = mach_zehnder(bs1, PI, ell, C64::new(1.0, 0.0))?;
    let sup = out
        .port1_superposition()?
        .normalized()
        .map_err(|_| Error::Analysis(format!("port 1 is dark for r = {}, t = {}", bs1.r, bs1.t)))?;
    Ok((sup.amplitude(ell), sup.amplitude(-ell)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate_2d, QuadratureSpec};
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    #[test]
    fn lg_modes_orthonormal() {
        let spec = QuadratureSpec::with_tolerances(1e-12, 1e-9);
        let w0 = 1.3;
        for l1 in -3..=3 {
            for l2 in -3..=3 {
                let m1 = LgModeParams::new(l1, 0, w0).unwrap();
                let m2 = LgModeParams::new(l2, 0, w0).unwrap();
                let overlap = |part: usize| {
                    integrate_2d(
                        |rho, phi| {
                            let z = lg_mode_amplitude(&m1, rho, phi).unwrap().conj()
                                * lg_mode_amplitude(&m2, rho, phi).unwrap();
                            rho * if part == 0 { z.re } else { z.im }
                        },
                        &[0.0, 8.0 * w0],
                        &[0.0, 2.0 * PI],
                        &spec,
                    )
                    .unwrap()
                    .value
                };
                let want = if l1 == l2 { 1.0 } else { 0.0 };
                assert!((overlap(0) - want).abs() < 1e-8, "<{l1}|{l2}>");
                assert!(overlap(1).abs() < 1e-8, "<{l1}|{l2}>");
            }
        }
    }

    #[test]
    fn lg_radial_modes_orthonormal() {
        let spec = QuadratureSpec::with_tolerances(1e-13, 1e-10);
        for l in [0, 2] {
            for p1 in 0..3 {
                for p2 in 0..3 {
                    let m1 = LgModeParams::new(l, p1, 1.0).unwrap();
                    let m2 = LgModeParams::new(l, p2, 1.0).unwrap();
                    let v = crate::quadrature::integrate_1d(
                        |rho| {
                            2.0 * PI
                                * rho
                                * (lg_mode_amplitude(&m1, rho, 0.0).unwrap().conj()
                                    * lg_mode_amplitude(&m2, rho, 0.0).unwrap())
                                .re
                        },
                        0.0,
                        10.0,
                        &spec,
                    )
                    .unwrap()
                    .value;
                    let want = if p1 == p2 { 1.0 } else { 0.0 };
                    assert!((v - want).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn lg_mode_rejects_bad_geometry() {
        assert!(LgModeParams::new(1, 0, 0.0).is_err());
        let m = LgModeParams { ell: 1, p: 0, w0: -1.0 };
        assert!(lg_mode_amplitude(&m, 1.0, 0.0).is_err());
        let m = LgModeParams::new(1, 0, 1.0).unwrap();
        assert!(lg_mode_amplitude(&m, -1.0, 0.0).is_err());
    }

    #[test]
    fn lg_mode_large_charge_is_finite() {
        let m = LgModeParams::new(120, 40, 1.0).unwrap();
        let v = lg_mode_amplitude(&m, 8.0, 0.3).unwrap();
        assert!(v.re.is_finite() && v.im.is_finite());
    }

    #[test]
    fn fifty_fifty_matrix() {
        let bs = BeamSplitter::fifty_fifty();
        let m = bs.matrix();
        let s = FRAC_1_SQRT_2;
        assert!((m[0][0] - c(s, 0.0)).norm() < 1e-15);
        assert!((m[0][1] - c(0.0, s)).norm() < 1e-15);
        assert!((m[1][0] - c(0.0, s)).norm() < 1e-15);
        assert!((m[1][1] - c(s, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn symmetric_phase_lemma() {
        for k in 1..10 {
            let th = 0.15 * k as f64;
            let bs = BeamSplitter::symmetric_from_angle(th).unwrap();
            assert_eq!(bs.t().arg() - bs.r().arg(), core::f64::consts::FRAC_PI_2);
        }
    }

    #[test]
    fn non_unitary_rejected() {
        assert!(matches!(BeamSplitter::symmetric(0.8, 0.8), Err(Error::NonUnitary { .. })));
        assert!(BeamSplitter::new(c(1.0, 0.0), c(0.0, 0.0), c(1.0, 0.0), c(0.1, 0.0)).is_err());
        assert!(BeamSplitter::symmetric(-0.6, 0.8).is_err());
    }

    #[test]
    fn empty_superposition_rejected() {
        assert_eq!(OamSuperposition::new(BTreeMap::new()).unwrap_err(), Error::EmptySuperposition);
        let zero = OamSuperposition::from_pairs(&[(1, c(0.0, 0.0))]).unwrap();
        assert_eq!(zero.normalized().unwrap_err(), Error::ZeroNorm);
    }

    #[test]
    fn mach_zehnder_output_formula() {
        let ell = 2;
        let u0 = c(0.7, -0.2);
        for k in 0..=8 {
            let th = core::f64::consts::FRAC_PI_2 * k as f64 / 8.0;
            let (rt, tt) = (libm::cos(th), libm::sin(th));
            let bs = BeamSplitter::symmetric(rt, tt).unwrap();
            for phase in [0.0, 0.4, PI, 5.0] {
                let out = mach_zehnder(&bs, phase, ell, u0).unwrap();
                let e = C64::from_polar(1.0, phase);
                let p1 = out.port1.amplitude(-ell) * core::f64::consts::SQRT_2;
                let q1 = out.port1.amplitude(ell) * core::f64::consts::SQRT_2;
                assert!((p1 - u0 * rt).norm() < 1e-14);
                assert!((q1 + u0 * tt * e).norm() < 1e-14);
                let p2 = out.port2.amplitude(-ell) * core::f64::consts::SQRT_2;
                let q2 = out.port2.amplitude(ell) * core::f64::consts::SQRT_2;
                assert!((p2 - c(0.0, 1.0) * u0 * rt).norm() < 1e-14);
                assert!((q2 - c(0.0, 1.0) * u0 * tt * e).norm() < 1e-14);
                assert!((out.norm_sqr() - u0.norm_sqr()).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn prepared_amplitudes_follow_splitter() {
        let bs = BeamSplitter::symmetric(0.6, 0.8).unwrap();
        let (ap, am) = prepared_amplitudes(&bs, 2).unwrap();
        assert!((ap - c(0.8, 0.0)).norm() < 1e-14);
        assert!((am - c(0.6, 0.0)).norm() < 1e-14);
    }

    #[test]
    fn hologram_variant() {
        let bs = BeamSplitter::symmetric(0.6, 0.8).unwrap();
        let out = mach_zehnder_holograms(&bs, PI, 1, 3, c(1.0, 0.0)).unwrap();
        let s = core::f64::consts::SQRT_2;
        assert!((out.port1.amplitude(1) * s - c(0.6, 0.0)).norm() < 1e-14);
        assert!((out.port1.amplitude(3) * s - c(0.8, 0.0)).norm() < 1e-14);
        assert!(out.port1.amplitude(0).norm() < 1e-14);
    }

    fn arb_splitter() -> impl Strategy<Value = BeamSplitter> {
        (0.0f64..core::f64::consts::FRAC_PI_2, -PI..PI, -PI..PI).prop_map(|(th, a, b)| {
            BeamSplitter::from_column(C64::from_polar(libm::cos(th), a), C64::from_polar(libm::sin(th), b)).unwrap()
        })
    }

    fn arb_modes() -> impl Strategy<Value = ModeVector> {
        proptest::collection::vec((-6i32..=6, -1.0f64..1.0, -1.0f64..1.0), 0..6).prop_map(|v| {
            let mut m = ModeVector::new();
            for (l, re, im) in v {
                *m.modes.entry(l).or_insert(c(0.0, 0.0)) += c(re, im);
            }
            m
        })
    }

    proptest! {
        #[test]
        fn splitter_preserves_total_norm(bs in arb_splitter(), a in arb_modes(), b in arb_modes()) {
            let s = TwoPortState::new(a, b);
            let out = beam_splitter_apply(&bs, &s);
            prop_assert!((out.norm_sqr() - s.norm_sqr()).abs() <= 1e-12 * (1.0 + s.norm_sqr()));
        }

        #[test]
        fn dove_prism_is_an_involution(a in arb_modes()) {
            prop_assume!(!a.modes.is_empty());
            let s = OamSuperposition::from_mode_vector(a).unwrap();
            prop_assert_eq!(dove_prism(&dove_prism(&s)), s);
        }

        #[test]
        fn splitter_commutes_with_global_phase(bs in arb_splitter(), a in arb_modes(), b in arb_modes(), ph in -PI..PI) {
            let e = C64::from_polar(1.0, ph);
            let s = TwoPortState::new(a.clone(), b.clone());
            let rotated = TwoPortState::new(a.scaled(e), b.scaled(e));
            let x = beam_splitter_apply(&bs, &rotated);
            let y = beam_splitter_apply(&bs, &s);
            prop_assert!(x.port1.max_abs_diff(&y.port1.scaled(e)) < 1e-12);
            prop_assert!(x.port2.max_abs_diff(&y.port2.scaled(e)) < 1e-12);
        }

        #[test]
        fn mach_zehnder_conserves_norm(th in 0.0f64..core::f64::consts::FRAC_PI_2, ph in -PI..PI, ell in -5i32..=5) {
            prop_assume!(ell != 0);
            let bs = BeamSplitter::symmetric_from_angle(th).unwrap();
            let out = mach_zehnder(&bs, ph, ell, c(1.0, 0.0)).unwrap();
            prop_assert!((out.norm_sqr() - 1.0).abs() < 1e-12);
        }
    }
}
