//! Experiment configs: TOML with explicit unit suffixes, checked field by
//! field before anything runs.

use std::fmt;
use std::path::PathBuf;

use oamvortex_core::detection::RadialModel;
use oamvortex_core::dynamics::{
    chirp_ode, default_ode, figure_trap, ChirpExperiment, ChirpSchedule, MexicanHatExperiment, PulseProfile,
    StirapExperiment, WaistChoice,
};
use oamvortex_core::integrals::{unit_overlap_waist, IntegralOptions, KineticTerms};
use oamvortex_core::ode::OdeOptions;
use oamvortex_core::optics::BeamSplitter;
use oamvortex_core::quadrature::QuadratureSpec;
use oamvortex_core::traps::{
    kappa_from_eta, kappa_from_scattering_length, CondensateParams, HarmonicTrap, MexicanHatTrap, ThomasFermiProfile,
};
use oamvortex_core::units::{HBAR, RB87_MASS};
use oamvortex_core::C64;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::quantity::{parse, Dimension, Scalar};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub experiment: Option<String>,
    pub trap: Option<RawTrap>,
    pub condensate: Option<RawCondensate>,
    pub drive: Option<RawDrive>,
    pub pulses: Option<RawPulses>,
    pub chirp: Option<RawChirp>,
    pub stirap: Option<RawStirap>,
    pub sweep: Option<RawSweep>,
    pub interferometer: Option<RawInterferometer>,
    pub integrals: Option<RawIntegrals>,
    pub detect: Option<RawDetect>,
    pub numerics: Option<RawNumerics>,
    pub output: Option<RawOutput>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTrap {
    pub kind: Option<String>,
    pub mass: Option<Scalar>,
    pub omega_perp: Option<Scalar>,
    pub omega_z: Option<Scalar>,
    pub l_perp: Option<Scalar>,
    pub l_z: Option<Scalar>,
    pub sigma: Option<Scalar>,
    pub lambda: Option<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawCondensate {
    pub kappa: Option<Scalar>,
    pub n_atoms: Option<Scalar>,
    pub scattering_length: Option<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDrive {
    pub omega0: Option<Scalar>,
    pub delta_big: Option<Scalar>,
    pub omega_c_ratio: Option<Scalar>,
    pub p_plus: Option<Scalar>,
    pub relative_phase: Option<Scalar>,
    pub ell: Option<i32>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPulses {
    pub f0: Option<Scalar>,
    pub g0: Option<Scalar>,
    pub t1: Option<Scalar>,
    pub t2: Option<Scalar>,
    pub sigma1: Option<Scalar>,
    pub sigma2: Option<Scalar>,
    pub pad_sigmas: Option<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawChirp {
    pub c_const: Option<Scalar>,
    pub clock: Option<Scalar>,
    pub tau_end: Option<Scalar>,
    pub reversed: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawStirap {
    pub model: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawSweep {
    pub separations: Option<Vec<f64>>,
    pub start: Option<f64>,
    pub stop: Option<f64>,
    pub count: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawInterferometer {
    pub ell: Option<i32>,
    pub reflectivity: Option<Scalar>,
    pub phase: Option<Scalar>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawIntegrals {
    pub ell: Option<i32>,
    pub waist: Option<Scalar>,
    pub kinetic: Option<String>,
    pub rel_tol: Option<f64>,
    pub light_envelope: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawDetect {
    pub radial: Option<String>,
    pub ell: Option<i32>,
    pub cells: Option<usize>,
    pub extent: Option<Scalar>,
    pub panel: Option<Vec<RawPanel>>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawPanel {
    pub name: Option<String>,
    pub p_plus: Option<Scalar>,
    pub theta: Option<Scalar>,
    pub probe: Option<bool>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawNumerics {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub samples: Option<usize>,
    pub max_steps: Option<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawOutput {
    pub dir: Option<String>,
    pub stem: Option<String>,
    pub formats: Option<Vec<String>>,
}

/// Problem found while checking a config, tied to a dotted field path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FieldIssue {
    pub path: String,
    pub message: String,
}

impl fmt::Display for FieldIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub struct ConfigErrors(pub Vec<FieldIssue>);

impl fmt::Display for ConfigErrors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let lines: Vec<String> = self.0.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", lines.join("\n"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum StirapModel {
    Reduced,
    General,
    FiveLevel,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub name: String,
    pub p_plus: f64,
    pub theta: f64,
    pub probe: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectSetup {
    pub radial: RadialModel,
    pub ell: i32,
    pub cells: usize,
    pub extent: f64,
    pub panels: Vec<Panel>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IntegralCheck {
    pub trap: HarmonicTrap,
    pub eta: f64,
    pub kappa: f64,
    pub w: f64,
    pub ell: i32,
    pub options: IntegralOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MzPrepare {
    pub bs1: BeamSplitter,
    pub phase: f64,
    pub ell: i32,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    MzPrepare(MzPrepare),
    Chirp(ChirpExperiment),
    Stirap { experiment: StirapExperiment, model: StirapModel },
    OverlapSweep { base: StirapExperiment, separations: Vec<f64> },
    MexicanHat(MexicanHatExperiment),
    Detect(DetectSetup),
    ValidateIntegrals(IntegralCheck),
    FiveLevelCheck(StirapExperiment),
}

pub const EXPERIMENTS: [&str; 8] = [
    "mz-prepare",
    "chirp",
    "stirap",
    "overlap-sweep",
    "mexican-hat",
    "detect",
    "validate-integrals",
    "five-level-check",
];

#[derive(Debug, Clone, PartialEq)]
pub struct OutputSpec {
    pub dir: PathBuf,
    pub stem: String,
    pub formats: Vec<Format>,
}

/// A checked config ready to run.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub name: String,
    pub experiment: Experiment,
    pub output: OutputSpec,
    /// Effective parameters, output block excluded; this is what gets hashed.
    pub parameters: RawConfig,
    pub hash: String,
    pub notes: Vec<String>,
    pub warnings: Vec<FieldIssue>,
}

/// Command-line values that replace config fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub output_dir: Option<PathBuf>,
    pub tolerance: Option<f64>,
    pub samples: Option<usize>,
    pub format: Option<Format>,
}

pub fn parse_raw(text: &str) -> Result<RawConfig, ConfigErrors> {
    toml::from_str(text).map_err(|e| {
        let msg = e.message().to_string();
        let path = e.span().map(|s| locate(text, s.start)).unwrap_or_else(|| "config".to_string());
        ConfigErrors(vec![FieldIssue { path, message: msg }])
    })
}

/// `line N` for a byte offset, used when the TOML itself is malformed.
fn locate(text: &str, offset: usize) -> String {
    let line = text[..offset.min(text.len())].matches('\n').count() + 1;
    format!("line {line}")
}

/// Hex SHA-256 of the effective parameters.
pub fn config_hash(parameters: &RawConfig) -> String {
    let bytes = serde_json::to_vec(parameters).expect("config serializes");
    Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect()
}

struct Checker {
    errors: Vec<FieldIssue>,
    warnings: Vec<FieldIssue>,
}

impl Checker {
    fn error(&mut self, path: &str, message: impl Into<String>) {
        self.errors.push(FieldIssue { path: path.to_string(), message: message.into() });
    }

    fn warn(&mut self, path: &str, message: impl Into<String>) {
        self.warnings.push(FieldIssue { path: path.to_string(), message: message.into() });
    }

    fn block<'a, T>(&mut self, path: &str, block: &'a Option<T>) -> Option<&'a T> {
        if block.is_none() {
            self.error(path, "missing required section");
        }
        block.as_ref()
    }

    fn quantity(&mut self, path: &str, value: Option<&Scalar>, dim: Dimension) -> Option<f64> {
        match value {
            None => {
                self.error(path, "missing required field");
                None
            }
            Some(v) => self.parse_at(path, v, dim),
        }
    }

    fn optional(&mut self, path: &str, value: Option<&Scalar>, dim: Dimension, default: f64) -> Option<f64> {
        match value {
            None => Some(default),
            Some(v) => self.parse_at(path, v, dim),
        }
    }

    fn parse_at(&mut self, path: &str, v: &Scalar, dim: Dimension) -> Option<f64> {
        match parse(v, dim) {
            Ok(x) => Some(x),
            Err(m) => {
                self.error(path, format!("{m} (got {v})"));
                None
            }
        }
    }

    fn positive(&mut self, path: &str, v: Option<f64>) -> Option<f64> {
        match v {
            Some(x) if x > 0.0 => Some(x),
            Some(x) => {
                self.error(path, format!("must be positive (got {x})"));
                None
            }
            None => None,
        }
    }
}

fn section_path(section: &str, field: &str) -> String {
    format!("{section}.{field}")
}

impl RawConfig {
    /// Apply command-line overrides.
    pub fn with_overrides(mut self, o: &Overrides) -> Self {
        if o.tolerance.is_some() || o.samples.is_some() {
            let n = self.numerics.get_or_insert_with(RawNumerics::default);
            if let Some(t) = o.tolerance {
                n.rtol = Some(t);
            }
            if let Some(s) = o.samples {
                n.samples = Some(s);
            }
        }
        if o.output_dir.is_some() || o.format.is_some() {
            let out = self.output.get_or_insert_with(RawOutput::default);
            if let Some(d) = &o.output_dir {
                out.dir = Some(d.to_string_lossy().into_owned());
            }
            if let Some(f) = o.format {
                out.formats = Some(vec![match f {
                    Format::Csv => "csv".into(),
                    Format::Json => "json".into(),
                }]);
            }
        }
        self
    }
}

/// Check every field and build the experiment; all problems are reported
/// together.
pub fn build(raw: RawConfig) -> Result<Config, ConfigErrors> {
    let mut c = Checker { errors: Vec::new(), warnings: Vec::new() };
    let mut notes = Vec::new();
    let name = match raw.experiment.as_deref() {
        None => {
            c.error("experiment", format!("missing required field; one of {}", EXPERIMENTS.join(", ")));
            String::new()
        }
        Some(n) if !EXPERIMENTS.contains(&n) => {
            c.error("experiment", format!("unknown experiment `{n}`; one of {}", EXPERIMENTS.join(", ")));
            String::new()
        }
        Some(n) => n.to_string(),
    };
    let experiment = match name.as_str() {
        "mz-prepare" => mz_prepare(&mut c, &raw).map(Experiment::MzPrepare),
        "chirp" => {
            notes.push(
                "The chirp uses the simplified equations in which the two-photon coupling equals w_perp; \
                 the quoted Rabi frequency and detuning are not simultaneously consistent with that \
                 simplification, and only C and the sweep clock enter here."
                    .to_string(),
            );
            chirp(&mut c, &raw).map(Experiment::Chirp)
        }
        "stirap" => {
            let model = stirap_model(&mut c, &raw);
            stirap(&mut c, &raw).zip(model).map(|(experiment, model)| Experiment::Stirap { experiment, model })
        }
        "overlap-sweep" => {
            let seps = separations(&mut c, &raw);
            stirap(&mut c, &raw).zip(seps).map(|(base, separations)| Experiment::OverlapSweep { base, separations })
        }
        "five-level-check" => stirap(&mut c, &raw).map(Experiment::FiveLevelCheck),
        "mexican-hat" => {
            notes.push(
                "Particle number, scattering length and waist are not fixed by the source figure; \
                 the values used are recorded in the parameters."
                    .to_string(),
            );
            mexican_hat(&mut c, &raw).map(Experiment::MexicanHat)
        }
        "detect" => detect(&mut c, &raw).map(Experiment::Detect),
        "validate-integrals" => integral_check(&mut c, &raw).map(Experiment::ValidateIntegrals),
        _ => None,
    };
    let output = output(&mut c, &raw, &name);
    if !c.errors.is_empty() {
        return Err(ConfigErrors(c.errors));
    }
    let (experiment, output) = match (experiment, output) {
        (Some(e), Some(o)) => (e, o),
        _ => return Err(ConfigErrors(vec![FieldIssue { path: "config".into(), message: "invalid".into() }])),
    };
    let parameters = RawConfig { output: None, ..raw };
    let hash = config_hash(&parameters);
    Ok(Config { name, experiment, output, parameters, hash, notes, warnings: c.warnings })
}

fn output(c: &mut Checker, raw: &RawConfig, name: &str) -> Option<OutputSpec> {
    let o = raw.output.clone().unwrap_or_default();
    let mut formats = Vec::new();
    for f in o.formats.unwrap_or_else(|| vec!["csv".into(), "json".into()]) {
        match f.as_str() {
            "csv" => formats.push(Format::Csv),
            "json" => formats.push(Format::Json),
            other => c.error("output.formats", format!("unknown format `{other}`; use csv or json")),
        }
    }
    if formats.is_empty() {
        c.error("output.formats", "at least one format is needed");
    }
    let stem = o.stem.unwrap_or_else(|| name.to_string());
    if stem.is_empty() || stem.contains(['/', '\\']) {
        c.error("output.stem", "must be a plain file name");
    }
    Some(OutputSpec { dir: PathBuf::from(o.dir.unwrap_or_else(|| "out".into())), stem, formats })
}

fn ode(c: &mut Checker, raw: &RawConfig, base: OdeOptions) -> (OdeOptions, Option<usize>) {
    let n = raw.numerics.clone().unwrap_or_default();
    let mut o = base;
    if let Some(r) = n.rtol {
        if r > 0.0 && r < 1e-2 {
            o.rtol = r;
        } else {
            c.error("numerics.rtol", format!("must lie in (0, 1e-2) (got {r})"));
        }
    }
    if let Some(a) = n.atol {
        if a > 0.0 {
            o.atol = a;
        } else {
            c.error("numerics.atol", format!("must be positive (got {a})"));
        }
    }
    if let Some(m) = n.max_steps {
        o.max_steps = m;
    }
    if let Some(s) = n.samples {
        if s < 2 {
            c.error("numerics.samples", "need at least two samples");
        }
    }
    (o, n.samples)
}

fn harmonic_trap(c: &mut Checker, raw: &RawConfig) -> Option<HarmonicTrap> {
    let t = c.block("trap", &raw.trap)?;
    if let Some(kind) = t.kind.as_deref() {
        if kind != "harmonic" {
            c.error("trap.kind", format!("this experiment needs a harmonic trap (got `{kind}`)"));
            return None;
        }
    }
    let mass = c.optional("trap.mass", t.mass.as_ref(), Dimension::Mass, RB87_MASS);
    let mass = c.positive("trap.mass", mass)?;
    let freq = |c: &mut Checker, omega: &Option<Scalar>, len: &Option<Scalar>, name: &str| -> Option<f64> {
        let (wp, lp) = (format!("trap.omega_{name}"), format!("trap.l_{name}"));
        match (omega, len) {
            (Some(w), None) => {
                let w = c.parse_at(&wp, w, Dimension::Rate);
                c.positive(&wp, w)
            }
            (None, Some(l)) => {
                let l = c.parse_at(&lp, l, Dimension::Length);
                c.positive(&lp, l).map(|l| HBAR / (mass * l * l))
            }
            (Some(_), Some(_)) => {
                c.error(&wp, format!("give either {wp} or {lp}, not both"));
                None
            }
            (None, None) => {
                c.error(&wp, format!("missing required field (or give {lp})"));
                None
            }
        }
    };
    let wp = freq(c, &t.omega_perp, &t.l_perp, "perp");
    let wz = freq(c, &t.omega_z, &t.l_z, "z");
    let trap = HarmonicTrap::new(mass, wp?, wz?).ok();
    if let Some(tr) = trap {
        if !tr.is_pancake() {
            c.warn("trap.omega_z", "omega_z < omega_perp: the pancake ansatz assumes a tight axis");
        }
    }
    trap
}

fn ring_trap(c: &mut Checker, raw: &RawConfig) -> Option<MexicanHatTrap> {
    let t = c.block("trap", &raw.trap)?;
    if t.kind.as_deref() != Some("mexican-hat") {
        c.error("trap.kind", "this experiment needs kind = \"mexican-hat\"");
        return None;
    }
    let mass = c.optional("trap.mass", t.mass.as_ref(), Dimension::Mass, RB87_MASS);
    let mass = c.positive("trap.mass", mass);
    let wp = c.quantity("trap.omega_perp", t.omega_perp.as_ref(), Dimension::Rate);
    let wp = c.positive("trap.omega_perp", wp);
    let wz = match (&t.omega_z, &t.l_z) {
        (Some(w), None) => {
            let w = c.parse_at("trap.omega_z", w, Dimension::Rate);
            c.positive("trap.omega_z", w)
        }
        (None, Some(l)) => {
            let l = c.parse_at("trap.l_z", l, Dimension::Length);
            c.positive("trap.l_z", l).zip(mass).map(|(l, m)| HBAR / (m * l * l))
        }
        _ => {
            c.error("trap.omega_z", "give exactly one of trap.omega_z or trap.l_z");
            None
        }
    };
    let sigma = c.quantity("trap.sigma", t.sigma.as_ref(), Dimension::Dimensionless);
    let sigma = c.positive("trap.sigma", sigma);
    let lambda = c.quantity("trap.lambda", t.lambda.as_ref(), Dimension::Dimensionless);
    let lambda = c.positive("trap.lambda", lambda);
    MexicanHatTrap::new(sigma?, lambda?, mass?, wp?, wz?).ok()
}

fn condensate_params(c: &mut Checker, k: &RawCondensate, mass: f64) -> Option<CondensateParams> {
    let n = c.quantity("condensate.n_atoms", k.n_atoms.as_ref(), Dimension::Dimensionless);
    let n = c.positive("condensate.n_atoms", n);
    let a = c.quantity("condensate.scattering_length", k.scattering_length.as_ref(), Dimension::Length);
    let a = c.positive("condensate.scattering_length", a);
    CondensateParams::new(n?, a?, mass).ok()
}

/// `(kappa, eta)` for a harmonic trap, from `kappa` or from atoms and
/// scattering length.
fn harmonic_interaction(c: &mut Checker, raw: &RawConfig, trap: &HarmonicTrap) -> Option<(f64, f64)> {
    let k = c.block("condensate", &raw.condensate)?;
    let per_eta = kappa_from_eta(1.0, trap);
    match &k.kappa {
        Some(v) => {
            if k.n_atoms.is_some() || k.scattering_length.is_some() {
                c.error("condensate.kappa", "give either kappa or n_atoms with scattering_length");
                return None;
            }
            let kappa = c.parse_at("condensate.kappa", v, Dimension::Rate)?;
            if kappa < 0.0 {
                c.error("condensate.kappa", "must be non-negative");
                return None;
            }
            Some((kappa, kappa / per_eta))
        }
        None => {
            let p = condensate_params(c, k, trap.mass)?;
            Some((kappa_from_scattering_length(&p, trap), p.eta()))
        }
    }
}

fn amplitudes(c: &mut Checker, d: &RawDrive) -> Option<(C64, C64)> {
    let p = c.quantity("drive.p_plus", d.p_plus.as_ref(), Dimension::Dimensionless);
    let phase = c.optional("drive.relative_phase", d.relative_phase.as_ref(), Dimension::Dimensionless, 0.0);
    let p = p?;
    if !(0.0..=1.0).contains(&p) {
        c.error("drive.p_plus", format!("must lie in [0, 1] (got {p})"));
        return None;
    }
    Some((C64::new(p.sqrt(), 0.0), C64::from_polar((1.0 - p).sqrt(), phase?)))
}

fn pulses(c: &mut Checker, raw: &RawConfig) -> Option<(PulseProfile, f64)> {
    let p = c.block("pulses", &raw.pulses)?;
    let d = Dimension::Dimensionless;
    let f0 = c.quantity("pulses.f0", p.f0.as_ref(), d);
    let g0 = c.quantity("pulses.g0", p.g0.as_ref(), d);
    let t1 = c.quantity("pulses.t1", p.t1.as_ref(), d);
    let t2 = c.quantity("pulses.t2", p.t2.as_ref(), d);
    let s1 = c.quantity("pulses.sigma1", p.sigma1.as_ref(), d);
    let s1 = c.positive("pulses.sigma1", s1);
    let s2 = c.quantity("pulses.sigma2", p.sigma2.as_ref(), d);
    let s2 = c.positive("pulses.sigma2", s2);
    let pad = c.optional("pulses.pad_sigmas", p.pad_sigmas.as_ref(), d, 6.0);
    let pad = c.positive("pulses.pad_sigmas", pad);
    Some((PulseProfile::new(f0?, g0?, t1?, t2?, s1?, s2?).ok()?, pad?))
}

/// `(omega0, delta_big, omega_c_ratio, a+, a-, ell)` with the far-detuning check.
#[allow(clippy::type_complexity)]
fn drive(c: &mut Checker, raw: &RawConfig) -> Option<(f64, f64, f64, C64, C64, i32)> {
    let d = c.block("drive", &raw.drive)?;
    let o = c.quantity("drive.omega0", d.omega0.as_ref(), Dimension::Rate);
    let o = c.positive("drive.omega0", o);
    let big = c.quantity("drive.delta_big", d.delta_big.as_ref(), Dimension::Rate);
    let ratio = c.optional("drive.omega_c_ratio", d.omega_c_ratio.as_ref(), Dimension::Dimensionless, 1.0);
    let amps = amplitudes(c, d);
    let ell = d.ell.unwrap_or(2);
    if ell == 0 {
        c.error("drive.ell", "must be non-zero");
    }
    if let (Some(o), Some(b)) = (o, big) {
        if b == 0.0 {
            c.error("drive.delta_big", "must be non-zero");
        } else if b.abs() < 5.0 * o {
            c.warn("drive.delta_big", "|Delta| < 5 Omega_0: adiabatic elimination questionable");
        }
    }
    let (ap, am) = amps?;
    Some((o?, big?, ratio?, ap, am, ell))
}

fn stirap_model(c: &mut Checker, raw: &RawConfig) -> Option<StirapModel> {
    match raw.stirap.as_ref().and_then(|s| s.model.as_deref()) {
        None | Some("reduced") => Some(StirapModel::Reduced),
        Some("general") => Some(StirapModel::General),
        Some("five-level") => Some(StirapModel::FiveLevel),
        Some(other) => {
            c.error("stirap.model", format!("unknown model `{other}`; use reduced, general or five-level"));
            None
        }
    }
}

fn stirap(c: &mut Checker, raw: &RawConfig) -> Option<StirapExperiment> {
    let trap = harmonic_trap(c, raw);
    let inter = trap.and_then(|t| harmonic_interaction(c, raw, &t));
    let dr = drive(c, raw);
    let pl = pulses(c, raw);
    let (ode, samples) = ode(c, raw, default_ode());
    let (omega0, delta_big, ratio, a_plus, a_minus, ell) = dr?;
    if ell.abs() != 2 {
        c.error("drive.ell", "harmonic runs use the |l| = 2 closed-form integrals");
        return None;
    }
    if ratio != 1.0 {
        c.error("drive.omega_c_ratio", "the harmonic runs fold both Rabi peaks into f0 and g0; keep it at 1");
        return None;
    }
    let (pulses, pad) = pl?;
    let base = StirapExperiment::figure();
    Some(StirapExperiment {
        trap: trap?,
        kappa: inter?.0,
        omega0,
        delta_big,
        pulses,
        a_plus,
        a_minus,
        pad_sigmas: pad,
        samples: samples.unwrap_or(base.samples),
        ode,
    })
}

fn separations(c: &mut Checker, raw: &RawConfig) -> Option<Vec<f64>> {
    let s = c.block("sweep", &raw.sweep)?;
    match (&s.separations, s.start, s.stop, s.count) {
        (Some(list), None, None, None) => {
            if list.is_empty() || list.iter().any(|x| !x.is_finite()) {
                c.error("sweep.separations", "need a non-empty list of finite values");
                return None;
            }
            Some(list.clone())
        }
        (None, Some(a), Some(b), Some(n)) => {
            if n < 2 || !(a.is_finite() && b.is_finite()) {
                c.error("sweep.count", "need count >= 2 and finite start and stop");
                return None;
            }
            Some((0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect())
        }
        _ => {
            c.error("sweep", "give either separations = [...] or start, stop and count");
            None
        }
    }
}

fn chirp(c: &mut Checker, raw: &RawConfig) -> Option<ChirpExperiment> {
    let trap = c.block("trap", &raw.trap);
    let wp = trap.and_then(|t| {
        let w = c.quantity("trap.omega_perp", t.omega_perp.as_ref(), Dimension::Rate);
        c.positive("trap.omega_perp", w)
    });
    let kappa = c.block("condensate", &raw.condensate).and_then(|k| {
        if k.n_atoms.is_some() || k.scattering_length.is_some() {
            c.error("condensate", "the chirp takes kappa directly");
        }
        c.quantity("condensate.kappa", k.kappa.as_ref(), Dimension::Rate)
    });
    let amps = c.block("drive", &raw.drive).and_then(|d| amplitudes(c, d));
    let ch = c.block("chirp", &raw.chirp);
    let (cc, clock, tau_end, reversed) = match ch {
        Some(ch) => {
            let cc = c.quantity("chirp.c_const", ch.c_const.as_ref(), Dimension::Rate);
            let clock = c.quantity("chirp.clock", ch.clock.as_ref(), Dimension::Rate);
            let clock = c.positive("chirp.clock", clock);
            let tau = c.quantity("chirp.tau_end", ch.tau_end.as_ref(), Dimension::Dimensionless);
            let tau = c.positive("chirp.tau_end", tau);
            (cc, clock, tau, ch.reversed.unwrap_or(false))
        }
        None => (None, None, None, false),
    };
    let (ode, samples) = ode(c, raw, chirp_ode());
    let (a_plus, a_minus) = amps?;
    let base = ChirpExperiment::figure();
    let exp = ChirpExperiment {
        omega_perp: wp?,
        kappa: kappa?,
        schedule: ChirpSchedule { c_const: cc?, rate: clock? },
        a_plus,
        a_minus,
        tau_end: tau_end?,
        samples: samples.unwrap_or(base.samples),
        ode,
    };
    Some(if reversed { exp.reversed() } else { exp })
}

fn integral_options(
    c: &mut Checker,
    raw: &RawConfig,
    default_kinetic: KineticTerms,
) -> (IntegralOptions, Option<Scalar>, i32) {
    let i = raw.integrals.clone().unwrap_or_default();
    let mut opts = IntegralOptions { kinetic: default_kinetic, ..IntegralOptions::default() };
    match i.kinetic.as_deref() {
        None => {}
        Some("include") => opts.kinetic = KineticTerms::Include,
        Some("drop") => opts.kinetic = KineticTerms::Drop,
        Some(other) => c.error("integrals.kinetic", format!("unknown value `{other}`; use include or drop")),
    }
    if let Some(r) = i.rel_tol {
        if r > 0.0 && r < 1e-2 {
            opts.quadrature = QuadratureSpec::with_tolerances(opts.quadrature.abs_tol, r);
        } else {
            c.error("integrals.rel_tol", format!("must lie in (0, 1e-2) (got {r})"));
        }
    }
    opts.light_envelope = i.light_envelope.unwrap_or(false);
    let ell = i.ell.unwrap_or(2);
    if ell == 0 {
        c.error("integrals.ell", "must be non-zero");
    }
    (opts, i.waist, ell)
}

fn mexican_hat(c: &mut Checker, raw: &RawConfig) -> Option<MexicanHatExperiment> {
    let trap = ring_trap(c, raw);
    let cond = c
        .block("condensate", &raw.condensate)
        .and_then(|k| {
            if k.kappa.is_some() {
                c.error("condensate.kappa", "the ring trap needs n_atoms and scattering_length instead");
            }
            trap.map(|t| (k, t.mass))
        })
        .and_then(|(k, m)| condensate_params(c, k, m));
    let dr = drive(c, raw);
    let pl = pulses(c, raw);
    let (opts, waist, _) = integral_options(c, raw, KineticTerms::Drop);
    if opts.kinetic == KineticTerms::Include {
        c.error("integrals.kinetic", "Thomas-Fermi states carry no kinetic term; use drop");
    }
    let waist = match waist {
        None => Some(WaistChoice::UnitOverlap),
        Some(Scalar::Text(s)) if s == "unit-overlap" => Some(WaistChoice::UnitOverlap),
        Some(v) => {
            let w = c.parse_at("integrals.waist", &v, Dimension::Length);
            c.positive("integrals.waist", w).map(WaistChoice::Fixed)
        }
    };
    if waist == Some(WaistChoice::UnitOverlap) && opts.light_envelope {
        c.error("integrals.light_envelope", "the unit-overlap waist is defined without the envelope");
    }
    let (ode, samples) = ode(c, raw, default_ode());
    let (omega0, delta_big, ratio, a_plus, a_minus, ell) = dr?;
    if ratio != 1.0 {
        c.error("drive.omega_c_ratio", "fold both Rabi peaks into f0 and g0; keep it at 1");
        return None;
    }
    let (pulses, pad) = pl?;
    let (trap, condensate) = (trap?, cond?);
    if let Err(e) = ThomasFermiProfile::new(trap, condensate.eta()) {
        c.error("condensate", format!("no Thomas-Fermi profile: {e}"));
        return None;
    }
    let base = MexicanHatExperiment::figure();
    Some(MexicanHatExperiment {
        trap,
        condensate,
        ell,
        omega0,
        delta_big,
        pulses,
        a_plus,
        a_minus,
        waist: waist?,
        integral_options: opts,
        pad_sigmas: pad,
        samples: samples.unwrap_or(base.samples),
        ode,
    })
}

fn integral_check(c: &mut Checker, raw: &RawConfig) -> Option<IntegralCheck> {
    let trap = harmonic_trap(c, raw);
    let inter = trap.and_then(|t| harmonic_interaction(c, raw, &t));
    let (options, waist, ell) = integral_options(c, raw, KineticTerms::Include);
    let trap = trap?;
    let w = match waist {
        None => Some(unit_overlap_waist(&trap)),
        Some(Scalar::Text(s)) if s == "unit-overlap" => Some(unit_overlap_waist(&trap)),
        Some(v) => {
            let w = c.parse_at("integrals.waist", &v, Dimension::Length);
            c.positive("integrals.waist", w)
        }
    };
    if ell.abs() != 2 {
        c.error("integrals.ell", "closed forms exist for |l| = 2 only");
    }
    let (kappa, eta) = inter?;
    Some(IntegralCheck { trap, eta, kappa, w: w?, ell, options })
}

fn mz_prepare(c: &mut Checker, raw: &RawConfig) -> Option<MzPrepare> {
    let m = c.block("interferometer", &raw.interferometer)?;
    let refl = c.quantity("interferometer.reflectivity", m.reflectivity.as_ref(), Dimension::Dimensionless);
    let phase = c.optional("interferometer.phase", m.phase.as_ref(), Dimension::Dimensionless, std::f64::consts::PI);
    let ell = m.ell.unwrap_or(2);
    if ell == 0 {
        c.error("interferometer.ell", "must be non-zero");
    }
    let refl = refl?;
    if !(0.0..=1.0).contains(&refl) {
        c.error("interferometer.reflectivity", format!("must lie in [0, 1] (got {refl})"));
        return None;
    }
    let bs1 = BeamSplitter::symmetric(refl.sqrt(), (1.0 - refl).sqrt()).ok()?;
    Some(MzPrepare { bs1, phase: phase?, ell })
}

/// The six interference panels: equal weights, 0.1 : 0.9 both ways, a pi
/// phase, and the two unequal states after the probe shift.
pub fn default_panels() -> Vec<Panel> {
    let pi = std::f64::consts::PI;
    let p = |name: &str, p_plus: f64, theta: f64, probe: bool| Panel { name: name.into(), p_plus, theta, probe };
    vec![
        p("a", 0.5, 0.0, false),
        p("b", 0.1, 0.0, false),
        p("c", 0.9, 0.0, false),
        p("d", 0.5, pi, false),
        p("e", 0.1, 0.0, true),
        p("f", 0.9, 0.0, true),
    ]
}

fn detect(c: &mut Checker, raw: &RawConfig) -> Option<DetectSetup> {
    let d = raw.detect.clone().unwrap_or_default();
    let radial = match d.radial.as_deref() {
        None | Some("harmonic") => match &raw.trap {
            None => Some(RadialModel::Harmonic(figure_trap())),
            Some(_) => harmonic_trap(c, raw).map(RadialModel::Harmonic),
        },
        Some("thomas-fermi") => {
            let trap = ring_trap(c, raw);
            let cond =
                c.block("condensate", &raw.condensate).zip(trap).and_then(|(k, t)| condensate_params(c, k, t.mass));
            let (trap, cond) = (trap?, cond?);
            match ThomasFermiProfile::new(trap, cond.eta()) {
                Ok(p) => Some(RadialModel::ThomasFermi(p)),
                Err(e) => {
                    c.error("condensate", format!("no Thomas-Fermi profile: {e}"));
                    None
                }
            }
        }
        Some(other) => {
            c.error("detect.radial", format!("unknown profile `{other}`; use harmonic or thomas-fermi"));
            None
        }
    };
    let ell = d.ell.unwrap_or(3);
    if ell <= 0 {
        c.error("detect.ell", "must be positive");
    }
    let cells = d.cells.unwrap_or(512);
    if cells < 64 {
        c.error("detect.cells", "need at least 64 cells per axis");
    }
    let extent = match &d.extent {
        None => None,
        Some(v) => {
            let e = c.parse_at("detect.extent", v, Dimension::Length);
            c.positive("detect.extent", e)
        }
    };
    let panels = match d.panel {
        None => default_panels(),
        Some(list) => {
            let mut out = Vec::new();
            for (k, p) in list.iter().enumerate() {
                let path = |f: &str| section_path(&format!("detect.panel[{k}]"), f);
                let pp = c.quantity(&path("p_plus"), p.p_plus.as_ref(), Dimension::Dimensionless);
                let th = c.optional(&path("theta"), p.theta.as_ref(), Dimension::Dimensionless, 0.0);
                if let Some(x) = pp {
                    if !(0.0..=1.0).contains(&x) {
                        c.error(&path("p_plus"), format!("must lie in [0, 1] (got {x})"));
                    }
                }
                if let (Some(pp), Some(th)) = (pp, th) {
                    let name = p.name.clone().unwrap_or_else(|| format!("panel{k}"));
                    out.push(Panel { name, p_plus: pp, theta: th, probe: p.probe.unwrap_or(false) });
                }
            }
            if list.is_empty() {
                c.error("detect.panel", "need at least one panel");
            }
            out
        }
    };
    let radial = radial?;
    Some(DetectSetup { radial, ell, cells, extent: extent.unwrap_or_else(|| radial.default_extent()), panels })
}

#[cfg(test)]
mod tests {
    use super::*;

    const STIRAP: &str = r#"
experiment = "stirap"
[trap]
omega_perp = "132 s^-1"
l_z = "1.4 um"
[condensate]
kappa = "1700 s^-1"
[drive]
omega0 = "200 krad/s"
delta_big = "2000 krad/s"
p_plus = 0.6
[pulses]
f0 = 150
g0 = 300
t1 = 1.0
t2 = 0.5
sigma1 = 0.25
sigma2 = 0.25
"#;

    #[test]
    fn stirap_config_matches_library_figure() {
        let cfg = build(parse_raw(STIRAP).unwrap()).unwrap();
        match cfg.experiment {
            Experiment::Stirap { experiment, model } => {
                assert_eq!(model, StirapModel::Reduced);
                let fig = StirapExperiment::figure();
                assert!((experiment.trap.omega_z - fig.trap.omega_z).abs() < 1e-9 * fig.trap.omega_z);
                assert_eq!(experiment.pulses, fig.pulses);
                assert!((experiment.a_plus - fig.a_plus).norm() < 1e-15);
                assert_eq!(experiment.delta_big, fig.delta_big);
            }
            other => panic!("{other:?}"),
        }
        assert!(cfg.warnings.is_empty());
    }

    #[test]
    fn missing_field_names_its_path() {
        let text = STIRAP.replace("delta_big = \"2000 krad/s\"\n", "");
        let err = build(parse_raw(&text).unwrap()).unwrap_err();
        assert!(err.0.iter().any(|e| e.path == "drive.delta_big"), "{err}");
    }

    #[test]
    fn unknown_field_rejected() {
        let text = STIRAP.replace("p_plus = 0.6", "p_plus = 0.6\nbogus = 1");
        let err = parse_raw(&text).unwrap_err();
        assert!(err.to_string().contains("bogus"), "{err}");
    }

    #[test]
    fn units_are_required() {
        let text = STIRAP.replace("\"132 s^-1\"", "132");
        let err = build(parse_raw(&text).unwrap()).unwrap_err();
        assert!(err.0.iter().any(|e| e.path == "trap.omega_perp" && e.message.contains("unit")), "{err}");
    }

    #[test]
    fn small_detuning_warns() {
        let text = STIRAP.replace("2000 krad/s", "200 krad/s");
        let cfg = build(parse_raw(&text).unwrap()).unwrap();
        assert!(cfg.warnings.iter().any(|w| w.message.contains("adiabatic elimination questionable")));
    }

    #[test]
    fn hash_tracks_parameters_not_output() {
        let a = build(parse_raw(STIRAP).unwrap()).unwrap();
        let b = build(parse_raw(&STIRAP.replace("g0 = 300", "g0 = 301")).unwrap()).unwrap();
        let o = Overrides { output_dir: Some("elsewhere".into()), ..Overrides::default() };
        let c = build(parse_raw(STIRAP).unwrap().with_overrides(&o)).unwrap();
        assert_ne!(a.hash, b.hash);
        assert_eq!(a.hash, c.hash);
        assert_eq!(c.output.dir, PathBuf::from("elsewhere"));
        let t = build(
            parse_raw(STIRAP).unwrap().with_overrides(&Overrides { tolerance: Some(1e-10), ..Overrides::default() }),
        )
        .unwrap();
        assert_ne!(a.hash, t.hash);
    }

    #[test]
    fn negative_ring_sigma_rejected() {
        let text = r#"
experiment = "mexican-hat"
[trap]
kind = "mexican-hat"
omega_perp = "132 s^-1"
l_z = "1.4 um"
sigma = -2.0
lambda = 0.005
[condensate]
n_atoms = 1e5
scattering_length = "5 nm"
[drive]
omega0 = "1 krad/s"
delta_big = "100 krad/s"
p_plus = 0.6
[pulses]
f0 = 150
g0 = 300
t1 = 1.0
t2 = 0.5
sigma1 = 0.25
sigma2 = 0.25
"#;
        let err = build(parse_raw(text).unwrap()).unwrap_err();
        assert!(err.0.iter().any(|e| e.path == "trap.sigma"), "{err}");
    }

    #[test]
    fn unknown_experiment() {
        let err = build(parse_raw("experiment = \"fig9\"").unwrap()).unwrap_err();
        assert_eq!(err.0[0].path, "experiment");
    }
}
