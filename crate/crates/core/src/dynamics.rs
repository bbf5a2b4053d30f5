//! Rate equations for the non-rotating state `alpha` and the vortex states
//! `beta` (`+l`) and `gamma` (`-l`), plus the experiments built on them.
//!
//! Right-hand sides return `d/dt` of the amplitudes, i.e. `-i H psi`.
//! Every rate passed in must use the same time unit; the experiments work in
//! the dimensionless time `tau = Omega_0 t` and divide all rates by `Omega_0`.

use alloc::vec::Vec;
use core::f64::consts::SQRT_2;

use crate::error::{invalid, require_finite, require_positive, Error, Result};
use crate::integrals::{harmonic_analytic_integrals, numeric_integrals, IntegralOptions, IntegralSet, KineticTerms};
use crate::ode::{dopri5, linspace, OdeOptions};
use crate::traps::{CondensateParams, HarmonicTrap, MexicanHatTrap, ThomasFermiProfile, WavefunctionAnsatz};
use crate::units::{HBAR, RB87_MASS};
use crate::C64;

const I: C64 = C64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SpinorAmplitudes {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
}

impl SpinorAmplitudes {
    pub fn new(alpha: C64, beta: C64, gamma: C64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// All population in the non-rotating state.
    pub fn ground() -> Self {
        Self::new(C64::new(1.0, 0.0), C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.alpha.norm_sqr() + self.beta.norm_sqr() + self.gamma.norm_sqr()
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.alpha.norm_sqr(), self.beta.norm_sqr(), self.gamma.norm_sqr()]
    }

    pub fn to_array(&self) -> [f64; 6] {
        [self.alpha.re, self.alpha.im, self.beta.re, self.beta.im, self.gamma.re, self.gamma.im]
    }

    pub fn from_array(y: &[f64; 6]) -> Self {
        Self::new(C64::new(y[0], y[1]), C64::new(y[2], y[3]), C64::new(y[4], y[5]))
    }
}

/// Three ground-manifold amplitudes plus the two excited states reached by
/// the `+l` and `-l` light components.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct FiveLevelAmplitudes {
    pub alpha: C64,
    pub beta: C64,
    pub gamma: C64,
    pub excited_plus: C64,
    pub excited_minus: C64,
}

impl FiveLevelAmplitudes {
    pub fn from_spinor(s: &SpinorAmplitudes) -> Self {
        Self {
            alpha: s.alpha,
            beta: s.beta,
            gamma: s.gamma,
            excited_plus: C64::new(0.0, 0.0),
            excited_minus: C64::new(0.0, 0.0),
        }
    }

    pub fn spinor(&self) -> SpinorAmplitudes {
        SpinorAmplitudes::new(self.alpha, self.beta, self.gamma)
    }

    pub fn excited_population(&self) -> f64 {
        self.excited_plus.norm_sqr() + self.excited_minus.norm_sqr()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.spinor().norm_sqr() + self.excited_population()
    }

    pub fn to_array(&self) -> [f64; 10] {
        let z = [self.alpha, self.beta, self.gamma, self.excited_plus, self.excited_minus];
        let mut y = [0.0; 10];
        for (i, c) in z.iter().enumerate() {
            y[2 * i] = c.re;
            y[2 * i + 1] = c.im;
        }
        y
    }

    pub fn from_array(y: &[f64; 10]) -> Self {
        let c = |i: usize| C64::new(y[2 * i], y[2 * i + 1]);
        Self { alpha: c(0), beta: c(1), gamma: c(2), excited_plus: c(3), excited_minus: c(4) }
    }
}

/// `F = |alpha|^2 - |beta|^2 - |gamma|^2`: `+1` before, `-1` after full transfer.
pub fn transfer_function(s: &SpinorAmplitudes) -> f64 {
    s.alpha.norm_sqr() - s.beta.norm_sqr() - s.gamma.norm_sqr()
}

/// Optical drive. `omega0` is the Rabi frequency of the OAM beam, the
/// coupling beam has `omega_c_ratio * omega0`, and `delta_big` is the
/// single-photon detuning. `(a_plus, a_minus)` is the OAM superposition.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DriveConfig {
    pub omega0: f64,
    pub omega_c_ratio: f64,
    pub delta_big: f64,
    pub a_plus: C64,
    pub a_minus: C64,
    pub ell: i32,
}

impl DriveConfig {
    pub fn new(omega0: f64, omega_c_ratio: f64, delta_big: f64, a_plus: C64, a_minus: C64, ell: i32) -> Result<Self> {
        require_positive("omega0", omega0)?;
        require_finite("omega_c_ratio", omega_c_ratio)?;
        require_finite("delta_big", delta_big)?;
        if delta_big == 0.0 {
            return Err(invalid("delta_big", "single-photon detuning must be non-zero"));
        }
        let n = a_plus.norm_sqr() + a_minus.norm_sqr();
        if !((n - 1.0).abs() <= 1e-10) {
            return Err(invalid("amplitudes", "|a+|^2 + |a-|^2 must equal 1"));
        }
        if ell == 0 {
            return Err(invalid("ell", "must be non-zero"));
        }
        Ok(Self { omega0, omega_c_ratio, delta_big, a_plus, a_minus, ell })
    }

    /// Same drive with every frequency divided by `unit`.
    pub fn in_units_of(&self, unit: f64) -> Self {
        Self { omega0: self.omega0 / unit, delta_big: self.delta_big / unit, ..*self }
    }
}

/// Gaussian pulse envelopes: `f` multiplies the OAM beam and peaks at `t1`,
/// `g` multiplies the coupling beam and peaks at `t2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PulseProfile {
    pub f0: f64,
    pub g0: f64,
    pub t1: f64,
    pub t2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl PulseProfile {
    pub fn new(f0: f64, g0: f64, t1: f64, t2: f64, sigma1: f64, sigma2: f64) -> Result<Self> {
        require_finite("f0", f0)?;
        require_finite("g0", g0)?;
        require_finite("t1", t1)?;
        require_finite("t2", t2)?;
        require_positive("sigma1", sigma1)?;
        require_positive("sigma2", sigma2)?;
        Ok(Self { f0, g0, t1, t2, sigma1, sigma2 })
    }

    pub fn f(&self, t: f64) -> f64 {
        let x = (t - self.t1) / self.sigma1;
        self.f0 * libm::exp(-x * x)
    }

    pub fn g(&self, t: f64) -> f64 {
        let x = (t - self.t2) / self.sigma2;
        self.g0 * libm::exp(-x * x)
    }

    /// Same pulses with centre separation `t1 - t2 = separation` and the
    /// midpoint kept fixed.
    pub fn with_separation(&self, separation: f64) -> Self {
        let mid = 0.5 * (self.t1 + self.t2);
        Self { t1: mid + 0.5 * separation, t2: mid - 0.5 * separation, ..*self }
    }

    /// Integration window covering both pulses out to `pad` widths.
    pub fn window(&self, pad: f64) -> (f64, f64) {
        let lo = f64::min(self.t1 - pad * self.sigma1, self.t2 - pad * self.sigma2);
        let hi = f64::max(self.t1 + pad * self.sigma1, self.t2 + pad * self.sigma2);
        (lo, hi)
    }

    pub fn shortest_width(&self) -> f64 {
        f64::min(self.sigma1, self.sigma2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Envelope {
    Continuous,
    Pulsed(PulseProfile),
}

impl Envelope {
    /// `(f(t), g(t))`.
    pub fn factors(&self, t: f64) -> (f64, f64) {
        match self {
            Envelope::Continuous => (1.0, 1.0),
            Envelope::Pulsed(p) => (p.f(t), p.g(t)),
        }
    }
}

/// Linear sweep of the two-photon detuning, `delta(t) = c (1 - rate t)`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChirpSchedule {
    pub c_const: f64,
    pub rate: f64,
}

impl ChirpSchedule {
    pub fn detuning(&self, t: f64) -> f64 {
        self.c_const * (1.0 - self.rate * t)
    }

    /// Time at which the sweep crosses `delta = value`.
    pub fn crossing(&self, value: f64) -> f64 {
        (1.0 - value / self.c_const) / self.rate
    }
}

/// Harmonic trap, `|l| = 2`, waist chosen so the light overlaps are one,
/// after removing the common phase: the chirped equations.
pub fn rhs_chirp(
    s: &SpinorAmplitudes,
    kappa: f64,
    omega_perp: f64,
    delta: f64,
    a_plus: C64,
    a_minus: C64,
) -> SpinorAmplitudes {
    let bg = s.beta.norm_sqr() + s.gamma.norm_sqr();
    let da =
        3.0 * kappa * s.alpha.norm_sqr() * s.alpha + omega_perp * (a_plus.conj() * s.beta + a_minus.conj() * s.gamma);
    let vortex = delta + 2.0 * omega_perp + 0.5 * kappa * bg;
    let db = vortex * s.beta + omega_perp * a_plus * s.alpha;
    let dc = vortex * s.gamma + omega_perp * a_minus * s.alpha;
    SpinorAmplitudes::new(-I * da, -I * db, -I * dc)
}

/// Same reduction for pulsed light at two-photon resonance, with Stark
/// coefficient `omega0^2 / delta_big` taken from `drive`.
pub fn rhs_stirap(
    s: &SpinorAmplitudes,
    kappa: f64,
    omega_perp: f64,
    drive: &DriveConfig,
    pulses: &PulseProfile,
    t: f64,
) -> SpinorAmplitudes {
    let stark = drive.omega0 * drive.omega0 / drive.delta_big;
    let (f, g) = (pulses.f(t), pulses.g(t));
    let bg = s.beta.norm_sqr() + s.gamma.norm_sqr();
    let fg = stark * f * g;
    let da = (stark * f * f + 3.0 * kappa * s.alpha.norm_sqr()) * s.alpha
        + fg * (drive.a_plus.conj() * s.beta + drive.a_minus.conj() * s.gamma);
    let vortex = 2.0 * omega_perp + 0.5 * kappa * bg + stark * g * g;
    let db = vortex * s.beta + fg * drive.a_plus * s.alpha;
    let dc = vortex * s.gamma + fg * drive.a_minus * s.alpha;
    SpinorAmplitudes::new(-I * da, -I * db, -I * dc)
}

/// Zero of energy for the general equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum EnergyReference {
    Absolute,
    /// Subtract `T_g + V_g + I_g+ N` from every level. This is a global
    /// phase and leaves all populations unchanged.
    GroundMode,
}

/// The general rate equations for arbitrary trap integrals.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneralModel {
    pub integrals: IntegralSet,
    pub drive: DriveConfig,
    pub envelope: Envelope,
    /// Two-photon detuning.
    pub delta: f64,
    pub reference: EnergyReference,
}

impl GeneralModel {
    fn offset(&self, norm: f64) -> f64 {
        match self.reference {
            EnergyReference::Absolute => 0.0,
            EnergyReference::GroundMode => self.integrals.t_g + self.integrals.v_g + self.integrals.i_gp * norm,
        }
    }

    /// `(Omega_0(t), Omega_c(t))`.
    fn rabi(&self, t: f64) -> (f64, f64) {
        let (f, g) = self.envelope.factors(t);
        (self.drive.omega0 * f, self.drive.omega0 * self.drive.omega_c_ratio * g)
    }

    fn diagonal(&self, s: &SpinorAmplitudes) -> [f64; 3] {
        let k = &self.integrals;
        let [pa, pb, pc] = s.populations();
        let shift = self.offset(pa + pb + pc);
        [
            k.t_g + k.v_g + k.i_gg * pa + k.i_gp * pb + k.i_gm * pc - shift,
            k.t_pm + k.v_pm + self.delta + k.i_gp * pa + k.i_pp * pb + k.i_pm * pc - shift,
            k.t_pm + k.v_pm + self.delta + k.i_gm * pa + k.i_pm * pb + k.i_mm * pc - shift,
        ]
    }

    pub fn rhs(&self, s: &SpinorAmplitudes, t: f64) -> SpinorAmplitudes {
        let k = &self.integrals;
        let d = &self.drive;
        let (o0, oc) = self.rabi(t);
        let inv = 1.0 / d.delta_big;
        let [ea, eb, ec] = self.diagonal(s);
        let cross = o0 * oc * inv;
        let da = (ea + o0 * o0 * inv * k.i2l_gg) * s.alpha
            + cross * (k.il_gp * d.a_plus.conj() * s.beta + k.il_gm * d.a_minus.conj() * s.gamma);
        let stark_c = oc * oc * inv;
        let db = (eb + stark_c) * s.beta + cross * k.il_pg * d.a_plus * s.alpha;
        let dc = (ec + stark_c) * s.gamma + cross * k.il_mg * d.a_minus * s.alpha;
        SpinorAmplitudes::new(-I * da, -I * db, -I * dc)
    }

    /// Before eliminating the excited states: they carry only the `-Delta`
    /// detuning and couple through the same light overlaps.
    pub fn rhs_five(&self, s: &FiveLevelAmplitudes, t: f64) -> FiveLevelAmplitudes {
        let k = &self.integrals;
        let d = &self.drive;
        let (o0, oc) = self.rabi(t);
        let g = s.spinor();
        let [ea, eb, ec] = self.diagonal(&g);
        // the excited states get the same scalar shift, so it stays a global phase
        let shift = self.offset(g.norm_sqr());
        let cp = d.a_plus * o0 * k.il_pg;
        let cm = d.a_minus * o0 * k.il_mg;
        let cc = C64::new(oc, 0.0);
        let da = ea * s.alpha + cp.conj() * s.excited_plus + cm.conj() * s.excited_minus;
        let db = eb * s.beta + cc.conj() * s.excited_plus;
        let dc = ec * s.gamma + cc.conj() * s.excited_minus;
        let dp = (-d.delta_big - shift) * s.excited_plus + cc * s.beta + cp * s.alpha;
        let dm = (-d.delta_big - shift) * s.excited_minus + cc * s.gamma + cm * s.alpha;
        FiveLevelAmplitudes {
            alpha: -I * da,
            beta: -I * db,
            gamma: -I * dc,
            excited_plus: -I * dp,
            excited_minus: -I * dm,
        }
    }
}

/// General rate equations on the absolute energy scale.
pub fn rhs_general(
    s: &SpinorAmplitudes,
    integrals: &IntegralSet,
    drive: &DriveConfig,
    envelope: &Envelope,
    delta: f64,
    t: f64,
) -> SpinorAmplitudes {
    GeneralModel {
        integrals: *integrals,
        drive: *drive,
        envelope: *envelope,
        delta,
        reference: EnergyReference::Absolute,
    }
    .rhs(s, t)
}

/// Five-level equations on the absolute energy scale.
pub fn rhs_five_level(
    s: &FiveLevelAmplitudes,
    integrals: &IntegralSet,
    drive: &DriveConfig,
    envelope: &Envelope,
    delta: f64,
    t: f64,
) -> FiveLevelAmplitudes {
    GeneralModel {
        integrals: *integrals,
        drive: *drive,
        envelope: *envelope,
        delta,
        reference: EnergyReference::Absolute,
    }
    .rhs_five(s, t)
}

/// Sampled solution. `tau` is the integration variable; `time_unit` converts
/// it to seconds.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Trajectory {
    pub tau: Vec<f64>,
    pub time_unit: f64,
    pub states: Vec<SpinorAmplitudes>,
    /// Excited amplitudes of a five-level run, empty otherwise.
    pub excited: Vec<[C64; 2]>,
    pub max_norm_drift: f64,
    pub accepted_steps: usize,
    pub rejected_steps: usize,
}

impl Trajectory {
    pub fn t_seconds(&self, i: usize) -> f64 {
        self.tau[i] * self.time_unit
    }

    pub fn transfer_values(&self) -> Vec<f64> {
        self.states.iter().map(transfer_function).collect()
    }

    pub fn final_state(&self) -> SpinorAmplitudes {
        *self.states.last().expect("trajectory has samples")
    }

    pub fn final_transfer(&self) -> f64 {
        transfer_function(&self.final_state())
    }

    /// `|beta|^2 / (|beta|^2 + |gamma|^2)` at the end.
    pub fn final_plus_fraction(&self) -> f64 {
        let [_, b, c] = self.final_state().populations();
        b / (b + c)
    }

    pub fn max_excited_population(&self) -> f64 {
        self.excited.iter().map(|e| e[0].norm_sqr() + e[1].norm_sqr()).fold(0.0, f64::max)
    }

    /// Time between `F` first dropping below `+level` and first dropping below
    /// `-level`, by linear interpolation between samples.
    pub fn transfer_timescale(&self, level: f64) -> Option<f64> {
        let f = self.transfer_values();
        let cross = |target: f64| -> Option<f64> {
            for i in 1..f.len() {
                if f[i - 1] > target && f[i] <= target {
                    let s = (f[i - 1] - target) / (f[i - 1] - f[i]);
                    return Some(self.tau[i - 1] + s * (self.tau[i] - self.tau[i - 1]));
                }
            }
            None
        };
        Some(cross(-level)? - cross(level)?)
    }
}

/// Integrate three-level equations from `initial` over `t_span`, sampling
/// `samples` equally spaced times (both ends included).
pub fn integrate<F>(
    mut rhs: F,
    initial: SpinorAmplitudes,
    t_span: (f64, f64),
    samples: usize,
    opts: &OdeOptions,
) -> Result<Trajectory>
where
    F: FnMut(f64, &SpinorAmplitudes) -> SpinorAmplitudes,
{
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let ts = linspace(t_span.0, t_span.1, samples);
    let sol = dopri5(
        |t, y: &[f64; 6]| rhs(t, &SpinorAmplitudes::from_array(y)).to_array(),
        t_span.0,
        initial.to_array(),
        t_span.1,
        &ts,
        opts,
    )?;
    let states: Vec<SpinorAmplitudes> = sol.states.iter().map(SpinorAmplitudes::from_array).collect();
    let n0 = initial.norm_sqr();
    let drift = states.iter().map(|s| (s.norm_sqr() - n0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        tau: sol.times,
        time_unit: 1.0,
        states,
        excited: Vec::new(),
        max_norm_drift: drift,
        accepted_steps: sol.accepted,
        rejected_steps: sol.rejected,
    })
}

/// Five-level counterpart of [`integrate`].
pub fn integrate_five<F>(
    mut rhs: F,
    initial: FiveLevelAmplitudes,
    t_span: (f64, f64),
    samples: usize,
    opts: &OdeOptions,
) -> Result<Trajectory>
where
    F: FnMut(f64, &FiveLevelAmplitudes) -> FiveLevelAmplitudes,
{
    if samples < 2 {
        return Err(invalid("samples", "need at least two samples"));
    }
    let ts = linspace(t_span.0, t_span.1, samples);
    let sol = dopri5(
        |t, y: &[f64; 10]| rhs(t, &FiveLevelAmplitudes::from_array(y)).to_array(),
        t_span.0,
        initial.to_array(),
        t_span.1,
        &ts,
        opts,
    )?;
    let full: Vec<FiveLevelAmplitudes> = sol.states.iter().map(FiveLevelAmplitudes::from_array).collect();
    let n0 = initial.norm_sqr();
    let drift = full.iter().map(|s| (s.norm_sqr() - n0).abs()).fold(0.0, f64::max);
    Ok(Trajectory {
        tau: sol.times,
        time_unit: 1.0,
        states: full.iter().map(FiveLevelAmplitudes::spinor).collect(),
        excited: full.iter().map(|s| [s.excited_plus, s.excited_minus]).collect(),
        max_norm_drift: drift,
        accepted_steps: sol.accepted,
        rejected_steps: sol.rejected,
    })
}

/// `(sqrt 0.6, sqrt 0.4)`: the 60:40 superposition used in the figures.
pub fn sixty_forty() -> (C64, C64) {
    (C64::new(libm::sqrt(0.6), 0.0), C64::new(libm::sqrt(0.4), 0.0))
}

/// Harmonic trap of the chirp figure: `w_perp = 132 rad/s` and `w_z` from the
/// quoted `L_z = 1.4 um` for rubidium-87.
pub fn figure_trap() -> HarmonicTrap {
    let l_z = 1.4e-6;
    HarmonicTrap::new(RB87_MASS, 132.0, HBAR / (RB87_MASS * l_z * l_z)).expect("valid trap")
}

/// Relative tolerance `1e-9` for the pulsed runs.
pub fn default_ode() -> OdeOptions {
    OdeOptions { rtol: 1e-9, atol: 1e-12, ..OdeOptions::default() }
}

/// The chirp takes ~1e5 steps through fast detuning phases; at `1e-9` its
/// norm drifts by ~5e-8, so it runs ten times tighter.
pub fn chirp_ode() -> OdeOptions {
    OdeOptions { rtol: 1e-10, atol: 1e-12, ..OdeOptions::default() }
}

/// Chirped transfer through two-photon resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChirpExperiment {
    /// rad/s
    pub omega_perp: f64,
    /// rad/s
    pub kappa: f64,
    pub schedule: ChirpSchedule,
    pub a_plus: C64,
    pub a_minus: C64,
    /// Sweep runs over `tau = rate * t` in `[0, tau_end]`.
    pub tau_end: f64,
    pub samples: usize,
    pub ode: OdeOptions,
}

impl ChirpExperiment {
    /// `C = 6000 s^-1` swept at `3 s^-1`, so resonance (`delta = -2 w_perp`)
    /// is crossed near `tau = 1.04` inside `tau in [0, 1.5]`.
    pub fn figure() -> Self {
        let (a_plus, a_minus) = sixty_forty();
        Self {
            omega_perp: 132.0,
            kappa: 1700.0,
            schedule: ChirpSchedule { c_const: 6000.0, rate: 3.0 },
            a_plus,
            a_minus,
            tau_end: 1.5,
            samples: 1501,
            ode: chirp_ode(),
        }
    }

    /// The same sweep run backwards in detuning, `delta = -C (1 - rate t)`.
    pub fn reversed(&self) -> Self {
        Self { schedule: ChirpSchedule { c_const: -self.schedule.c_const, ..self.schedule }, ..*self }
    }

    pub fn validate(&self) -> Result<()> {
        require_positive("omega_perp", self.omega_perp)?;
        require_finite("kappa", self.kappa)?;
        require_finite("chirp.c_const", self.schedule.c_const)?;
        require_positive("chirp.rate", self.schedule.rate)?;
        require_positive("tau_end", self.tau_end)?;
        let n = self.a_plus.norm_sqr() + self.a_minus.norm_sqr();
        if !((n - 1.0).abs() <= 1e-10) {
            return Err(invalid("amplitudes", "|a+|^2 + |a-|^2 must equal 1"));
        }
        Ok(())
    }

    pub fn run(&self) -> Result<Trajectory> {
        self.validate()?;
        let r = self.schedule.rate;
        let (k, w) = (self.kappa / r, self.omega_perp / r);
        let c = self.schedule.c_const / r;
        let (ap, am) = (self.a_plus, self.a_minus);
        let ode = OdeOptions { max_step: f64::min(self.ode.max_step, self.tau_end / 100.0), ..self.ode };
        let mut traj = integrate(
            |tau, s| rhs_chirp(s, k, w, c * (1.0 - tau), ap, am),
            SpinorAmplitudes::ground(),
            (0.0, self.tau_end),
            self.samples,
            &ode,
        )?;
        traj.time_unit = 1.0 / r;
        Ok(traj)
    }
}

/// Stimulated Raman adiabatic passage in the harmonic trap with `|l| = 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StirapExperiment {
    pub trap: HarmonicTrap,
    /// rad/s
    pub kappa: f64,
    /// rad/s
    pub omega0: f64,
    /// rad/s
    pub delta_big: f64,
    /// Times in units of `1 / omega0`.
    pub pulses: PulseProfile,
    pub a_plus: C64,
    pub a_minus: C64,
    pub pad_sigmas: f64,
    pub samples: usize,
    pub ode: OdeOptions,
}

impl StirapExperiment {
    /// `Omega_0 = 2e5 rad/s`, `Delta = 10 Omega_0`, pulses of width 0.25 at
    /// `t1 = 1` (OAM beam) and `t2 = 0.5` (coupling beam), `f0 / g0 = 1/2`.
    pub fn figure() -> Self {
        let (a_plus, a_minus) = sixty_forty();
        Self {
            trap: figure_trap(),
            kappa: 1700.0,
            omega0: 2e5,
            delta_big: 2e6,
            pulses: PulseProfile { f0: 150.0, g0: 300.0, t1: 1.0, t2: 0.5, sigma1: 0.25, sigma2: 0.25 },
            a_plus,
            a_minus,
            pad_sigmas: 6.0,
            samples: 1201,
            ode: default_ode(),
        }
    }

    pub fn with_separation(&self, separation: f64) -> Self {
        Self { pulses: self.pulses.with_separation(separation), ..*self }
    }

    /// Pulses swapped: OAM beam first.
    pub fn intuitive(&self) -> Self {
        Self { pulses: PulseProfile { t1: self.pulses.t2, t2: self.pulses.t1, ..self.pulses }, ..*self }
    }

    pub fn window(&self) -> (f64, f64) {
        self.pulses.window(self.pad_sigmas)
    }

    /// Drive in `tau` units.
    pub fn drive(&self) -> Result<DriveConfig> {
        DriveConfig::new(1.0, 1.0, self.delta_big / self.omega0, self.a_plus, self.a_minus, 2)
    }

    fn validate(&self) -> Result<()> {
        require_positive("omega0", self.omega0)?;
        require_finite("kappa", self.kappa)?;
        require_positive("pad_sigmas", self.pad_sigmas)?;
        PulseProfile::new(
            self.pulses.f0,
            self.pulses.g0,
            self.pulses.t1,
            self.pulses.t2,
            self.pulses.sigma1,
            self.pulses.sigma2,
        )?;
        self.drive().map(|_| ())
    }

    fn ode(&self) -> OdeOptions {
        OdeOptions { max_step: f64::min(self.ode.max_step, self.pulses.shortest_width() / 8.0), ..self.ode }
    }

    /// Reduced equations in `tau`.
    pub fn run(&self) -> Result<Trajectory> {
        self.validate()?;
        let drive = self.drive()?;
        let (k, w) = (self.kappa / self.omega0, self.trap.omega_perp / self.omega0);
        let p = self.pulses;
        let mut traj = integrate(
            |tau, s| rhs_stirap(s, k, w, &drive, &p, tau),
            SpinorAmplitudes::ground(),
            self.window(),
            self.samples,
            &self.ode(),
        )?;
        traj.time_unit = 1.0 / self.omega0;
        Ok(traj)
    }

    /// General model built from the harmonic closed forms at the unit-overlap
    /// waist, in `tau` units.
    pub fn general_model(&self, reference: EnergyReference) -> Result<GeneralModel> {
        let w = crate::integrals::unit_overlap_waist(&self.trap);
        let integrals = harmonic_analytic_integrals(&self.trap, self.kappa, w, 2)?.rates_in_units_of(self.omega0);
        Ok(GeneralModel {
            integrals,
            drive: self.drive()?,
            envelope: Envelope::Pulsed(self.pulses),
            delta: 0.0,
            reference,
        })
    }

    pub fn run_general(&self) -> Result<Trajectory> {
        self.validate()?;
        let model = self.general_model(EnergyReference::GroundMode)?;
        let mut traj =
            integrate(|t, s| model.rhs(s, t), SpinorAmplitudes::ground(), self.window(), self.samples, &self.ode())?;
        traj.time_unit = 1.0 / self.omega0;
        Ok(traj)
    }

    pub fn run_five_level(&self) -> Result<Trajectory> {
        self.validate()?;
        let model = self.general_model(EnergyReference::GroundMode)?;
        let ode = OdeOptions {
            max_step: f64::min(self.ode().max_step, 0.5 / (self.delta_big / self.omega0).abs()),
            ..self.ode()
        };
        let mut traj = integrate_five(
            |t, s| model.rhs_five(s, t),
            FiveLevelAmplitudes::from_spinor(&SpinorAmplitudes::ground()),
            self.window(),
            self.samples,
            &ode,
        )?;
        traj.time_unit = 1.0 / self.omega0;
        Ok(traj)
    }
}

/// Final `F` for each pulse separation, in input order.
pub fn overlap_sweep(base: &StirapExperiment, separations: &[f64]) -> Result<Vec<(f64, f64)>> {
    separations.iter().map(|&s| Ok((s, base.with_separation(s).run()?.final_transfer()))).collect()
}

/// Comparison of the five-level equations with their eliminated form.
#[derive(Debug, Clone, PartialEq)]
pub struct FiveLevelComparison {
    pub three: Trajectory,
    pub five: Trajectory,
    /// Largest difference in any of the three ground-manifold populations.
    pub max_population_difference: f64,
    pub max_excited_population: f64,
}

pub fn compare_five_level(exp: &StirapExperiment) -> Result<FiveLevelComparison> {
    let three = exp.run_general()?;
    let five = exp.run_five_level()?;
    let mut diff: f64 = 0.0;
    for (a, b) in three.states.iter().zip(&five.states) {
        for (x, y) in a.populations().iter().zip(b.populations().iter()) {
            diff = diff.max((x - y).abs());
        }
    }
    let max_excited_population = five.max_excited_population();
    Ok(FiveLevelComparison { three, five, max_population_difference: diff, max_excited_population })
}

/// How the light waist is fixed for a non-harmonic trap.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum WaistChoice {
    /// A fixed waist in metres.
    Fixed(f64),
    /// The waist at which `I^(l)_{g+} = 1`, the analogue of the harmonic
    /// scaling `w^2 = 2 sqrt2 L_perp^2`.
    UnitOverlap,
}

/// STIRAP in the ring trap with Thomas-Fermi states, general equations.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct MexicanHatExperiment {
    pub trap: MexicanHatTrap,
    pub condensate: CondensateParams,
    pub ell: i32,
    pub omega0: f64,
    pub delta_big: f64,
    pub pulses: PulseProfile,
    pub a_plus: C64,
    pub a_minus: C64,
    pub waist: WaistChoice,
    pub integral_options: IntegralOptions,
    pub pad_sigmas: f64,
    pub samples: usize,
    pub ode: OdeOptions,
}

/// Outcome of a ring-trap run.
#[derive(Debug, Clone, PartialEq)]
pub struct MexicanHatOutcome {
    pub trajectory: Trajectory,
    pub integrals: IntegralSet,
    pub profile: ThomasFermiProfile,
}

impl MexicanHatExperiment {
    /// `sigma = 2`, `lambda = 0.005` in the chirp-figure trap, 1e5 atoms with
    /// `a = 5 nm`, `Omega_0 = 1000 rad/s`, `Delta = 100 Omega_0`, harmonic
    /// pulse shapes.
    pub fn figure() -> Self {
        let h = figure_trap();
        let (a_plus, a_minus) = sixty_forty();
        Self {
            trap: MexicanHatTrap::new(2.0, 0.005, h.mass, h.omega_perp, h.omega_z).expect("valid trap"),
            condensate: CondensateParams::new(1e5, 5e-9, h.mass).expect("valid condensate"),
            ell: 2,
            omega0: 1000.0,
            delta_big: 1e5,
            pulses: StirapExperiment::figure().pulses,
            a_plus,
            a_minus,
            waist: WaistChoice::UnitOverlap,
            integral_options: IntegralOptions { kinetic: KineticTerms::Drop, ..IntegralOptions::default() },
            pad_sigmas: 6.0,
            samples: 1201,
            ode: default_ode(),
        }
    }

    pub fn profile(&self) -> Result<ThomasFermiProfile> {
        if (self.condensate.mass - self.trap.mass).abs() > 1e-12 * self.trap.mass {
            return Err(invalid("mass", "condensate and trap masses differ"));
        }
        ThomasFermiProfile::new(self.trap, self.condensate.eta())
    }

    /// Numeric integrals with the waist fixed per [`WaistChoice`].
    pub fn integrals(&self) -> Result<(IntegralSet, ThomasFermiProfile)> {
        let profile = self.profile()?;
        let g = WavefunctionAnsatz::tf_ground(profile)?;
        let p = WavefunctionAnsatz::tf_vortex(profile, self.ell)?;
        let m = WavefunctionAnsatz::tf_vortex(profile, -self.ell)?;
        let eta = self.condensate.eta();
        let set = match self.waist {
            WaistChoice::Fixed(w) => numeric_integrals(&g, &p, &m, eta, w, &self.integral_options)?,
            WaistChoice::UnitOverlap => {
                if self.integral_options.light_envelope {
                    return Err(Error::Unsupported(
                        "the unit-overlap waist is defined without the beam envelope".into(),
                    ));
                }
                let w0 = SQRT_2 * self.trap.l_perp();
                let raw = numeric_integrals(&g, &p, &m, eta, w0, &self.integral_options)?;
                let l = f64::from(self.ell.unsigned_abs());
                let w = w0 * libm::pow(raw.il_gp, 1.0 / l);
                let s = libm::pow(w0 / w, l);
                IntegralSet {
                    w,
                    i2l_gg: raw.i2l_gg * s * s,
                    il_gp: raw.il_gp * s,
                    il_pg: raw.il_pg * s,
                    il_gm: raw.il_gm * s,
                    il_mg: raw.il_mg * s,
                    ..raw
                }
            }
        };
        Ok((set, profile))
    }

    pub fn drive(&self) -> Result<DriveConfig> {
        DriveConfig::new(1.0, 1.0, self.delta_big / self.omega0, self.a_plus, self.a_minus, self.ell)
    }

    pub fn window(&self) -> (f64, f64) {
        self.pulses.window(self.pad_sigmas)
    }

    pub fn run(&self) -> Result<MexicanHatOutcome> {
        let (integrals, profile) = self.integrals()?;
        let trajectory = self.run_with(&integrals)?;
        Ok(MexicanHatOutcome { trajectory, integrals, profile })
    }

    /// Integrate with precomputed integrals (rates in rad/s).
    pub fn run_with(&self, integrals: &IntegralSet) -> Result<Trajectory> {
        require_positive("omega0", self.omega0)?;
        let model = GeneralModel {
            integrals: integrals.rates_in_units_of(self.omega0),
            drive: self.drive()?,
            envelope: Envelope::Pulsed(self.pulses),
            delta: 0.0,
            reference: EnergyReference::GroundMode,
        };
        let ode = OdeOptions { max_step: f64::min(self.ode.max_step, self.pulses.shortest_width() / 8.0), ..self.ode };
        let mut traj =
            integrate(|t, s| model.rhs(s, t), SpinorAmplitudes::ground(), self.window(), self.samples, &ode)?;
        traj.time_unit = 1.0 / self.omega0;
        Ok(traj)
    }
}
