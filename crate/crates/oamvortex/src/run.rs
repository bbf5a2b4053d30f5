//! Running a checked config and turning the results into files.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use oamvortex_core::detection::{
    count_lobes, disambiguate_amplitudes, pattern_rotation, probe_shift, render_row, visibility,
    visibility_closed_form, AmplitudeAssignment, DensityGrid, GridGeometry, VortexSuperposition,
};
use oamvortex_core::dynamics::{compare_five_level, Trajectory};
use oamvortex_core::integrals::{harmonic_analytic_integrals, harmonic_numeric_integrals, IntegralSet};
use oamvortex_core::optics::mach_zehnder;
use oamvortex_core::{Error as CoreError, C64};
use rayon::prelude::*;
use serde_json::{json, Map, Value};

use crate::config::{
    build, parse_raw, Config, ConfigErrors, DetectSetup, Experiment, Format, IntegralCheck, MzPrepare, Overrides,
    RawConfig, StirapModel,
};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum AppError {
    #[error("invalid config:\n{0}")]
    Config(#[from] ConfigErrors),
    #[error(transparent)]
    Core(#[from] CoreError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl AppError {
    /// 1 for IO, 2 for bad input, 3 when the numerics could not meet their
    /// tolerances or the analysis could not resolve a pattern.
    pub fn exit_code(&self) -> i32 {
        match self {
            AppError::Io { .. } => 1,
            AppError::Config(_) => 2,
            AppError::Core(e) => match e {
                CoreError::Accuracy { .. }
                | CoreError::StepSizeUnderflow { .. }
                | CoreError::StepBudget { .. }
                | CoreError::Analysis(_)
                | CoreError::ChemicalPotentialBracket { .. } => 3,
                _ => 2,
            },
        }
    }
}

/// One output file, held in memory until every computation has succeeded.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Artifact {
    pub file_name: String,
    pub bytes: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub artifacts: Vec<Artifact>,
    /// Headline numbers, also embedded in the JSON artifact.
    pub summary: Value,
    /// Norm drift of every integration in the run.
    pub norm_drifts: Vec<f64>,
}

/// Read, override and check a config file.
pub fn load(path: &Path, overrides: &Overrides) -> Result<Config, AppError> {
    let text = fs::read_to_string(path).map_err(|source| AppError::Io { path: path.to_path_buf(), source })?;
    let raw: RawConfig = parse_raw(&text)?;
    Ok(build(raw.with_overrides(overrides))?)
}

/// Write artifacts into `dir`, each through a temporary file renamed into
/// place so that a crash never leaves a truncated file behind.
pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<Vec<PathBuf>, AppError> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| AppError::Io { path, source }
    };
    fs::create_dir_all(dir).map_err(io(dir))?;
    let mut out = Vec::new();
    for a in artifacts {
        let target = dir.join(&a.file_name);
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io(dir))?;
        tmp.write_all(&a.bytes).map_err(io(&target))?;
        tmp.as_file().sync_all().map_err(io(&target))?;
        tmp.persist(&target).map_err(|e| AppError::Io { path: target.clone(), source: e.error })?;
        out.push(target);
    }
    Ok(out)
}

fn num(x: f64) -> String {
    format!("{x:.15e}")
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    fn to_csv(&self, cfg: &Config) -> Vec<u8> {
        let mut buf = format!("# oamvortex {VERSION} experiment={} config_hash={}\n", cfg.name, cfg.hash).into_bytes();
        {
            let mut w = csv::Writer::from_writer(&mut buf);
            w.write_record(&self.header).expect("in-memory write");
            for r in &self.rows {
                w.write_record(r).expect("in-memory write");
            }
            w.flush().expect("in-memory write");
        }
        buf
    }
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let five = !traj.excited.is_empty();
    let mut cols = vec![
        "tau",
        "t_seconds",
        "re_alpha",
        "im_alpha",
        "re_beta",
        "im_beta",
        "re_gamma",
        "im_gamma",
        "pop_ground",
        "pop_plus",
        "pop_minus",
        "F",
    ];
    if five {
        cols.push("pop_excited");
    }
    let mut t = Table::new(&cols);
    let f = traj.transfer_values();
    for (i, s) in traj.states.iter().enumerate() {
        let p = s.populations();
        let mut row = vec![num(traj.tau[i]), num(traj.t_seconds(i))];
        for c in [s.alpha, s.beta, s.gamma] {
            row.push(num(c.re));
            row.push(num(c.im));
        }
        row.extend(p.iter().map(|x| num(*x)));
        row.push(num(f[i]));
        if five {
            let e = traj.excited[i];
            row.push(num(e[0].norm_sqr() + e[1].norm_sqr()));
        }
        t.push(row);
    }
    t
}

fn trajectory_summary(traj: &Trajectory) -> Value {
    let p = traj.final_state().populations();
    json!({
        "final_F": traj.final_transfer(),
        "final_populations": { "ground": p[0], "plus": p[1], "minus": p[2] },
        "final_plus_fraction": traj.final_plus_fraction(),
        "transfer_time_tau_0_9": traj.transfer_timescale(0.9),
        "max_norm_drift": traj.max_norm_drift,
        "accepted_steps": traj.accepted_steps,
        "rejected_steps": traj.rejected_steps,
        "time_unit_seconds": traj.time_unit,
    })
}

fn trajectory_data(traj: &Trajectory) -> Value {
    let pops: Vec<[f64; 3]> = traj.states.iter().map(|s| s.populations()).collect();
    let mut m = Map::new();
    m.insert("tau".into(), json!(traj.tau));
    m.insert("t_seconds".into(), json!((0..traj.tau.len()).map(|i| traj.t_seconds(i)).collect::<Vec<_>>()));
    m.insert("F".into(), json!(traj.transfer_values()));
    m.insert("pop_ground".into(), json!(pops.iter().map(|p| p[0]).collect::<Vec<_>>()));
    m.insert("pop_plus".into(), json!(pops.iter().map(|p| p[1]).collect::<Vec<_>>()));
    m.insert("pop_minus".into(), json!(pops.iter().map(|p| p[2]).collect::<Vec<_>>()));
    if !traj.excited.is_empty() {
        let e: Vec<f64> = traj.excited.iter().map(|e| e[0].norm_sqr() + e[1].norm_sqr()).collect();
        m.insert("pop_excited".into(), json!(e));
    }
    Value::Object(m)
}

fn integral_rows(set: &IntegralSet) -> Value {
    let mut m = Map::new();
    m.insert("w".into(), json!(set.w));
    for (k, v) in set.named_values() {
        m.insert(k.into(), json!(v));
    }
    Value::Object(m)
}

/// Everything a run produces before formats are applied.
struct Results {
    tables: Vec<(String, Table)>,
    summary: Value,
    data: Value,
    drifts: Vec<f64>,
}

impl Results {
    fn single(cfg: &Config, table: Table, summary: Value, data: Value, drifts: Vec<f64>) -> Self {
        Self { tables: vec![(cfg.output.stem.clone(), table)], summary, data, drifts }
    }
}

/// Run the experiment; nothing is written to disk.
pub fn execute(cfg: &Config) -> Result<RunOutput, AppError> {
    let res = match &cfg.experiment {
        Experiment::MzPrepare(m) => mz(cfg, m)?,
        Experiment::Chirp(e) => {
            let traj = e.run()?;
            let mut s = trajectory_summary(&traj);
            s["resonance_tau"] = json!(e.schedule.crossing(-2.0 * e.omega_perp) * e.schedule.rate);
            Results::single(cfg, trajectory_table(&traj), s, trajectory_data(&traj), vec![traj.max_norm_drift])
        }
        Experiment::Stirap { experiment, model } => {
            let traj = match model {
                StirapModel::Reduced => experiment.run()?,
                StirapModel::General => experiment.run_general()?,
                StirapModel::FiveLevel => experiment.run_five_level()?,
            };
            let mut s = trajectory_summary(&traj);
            if *model == StirapModel::FiveLevel {
                s["max_excited_population"] = json!(traj.max_excited_population());
            }
            Results::single(cfg, trajectory_table(&traj), s, trajectory_data(&traj), vec![traj.max_norm_drift])
        }
        Experiment::OverlapSweep { base, separations } => {
            let runs: Vec<Result<(f64, Trajectory), CoreError>> =
                separations.par_iter().map(|&s| base.with_separation(s).run().map(|t| (s, t))).collect();
            let mut t =
                Table::new(&["separation", "t_coupling", "t_oam", "final_F", "final_plus_fraction", "max_norm_drift"]);
            let (mut seps, mut fs, mut drifts) = (Vec::new(), Vec::new(), Vec::new());
            for r in runs {
                let (s, traj) = r?;
                let p = base.pulses.with_separation(s);
                t.push(vec![
                    num(s),
                    num(p.t2),
                    num(p.t1),
                    num(traj.final_transfer()),
                    num(traj.final_plus_fraction()),
                    num(traj.max_norm_drift),
                ]);
                seps.push(s);
                fs.push(traj.final_transfer());
                drifts.push(traj.max_norm_drift);
            }
            let best = fs.iter().cloned().fold(f64::INFINITY, f64::min);
            let summary = json!({ "points": seps.len(), "min_final_F": best });
            let data = json!({ "separation": seps, "final_F": fs });
            Results::single(cfg, t, summary, data, drifts)
        }
        Experiment::FiveLevelCheck(e) => {
            let cmp = compare_five_level(e)?;
            let mut t = Table::new(&[
                "tau",
                "pop_ground_3",
                "pop_plus_3",
                "pop_minus_3",
                "pop_ground_5",
                "pop_plus_5",
                "pop_minus_5",
                "pop_excited",
            ]);
            for i in 0..cmp.three.tau.len() {
                let a = cmp.three.states[i].populations();
                let b = cmp.five.states[i].populations();
                let ex = cmp.five.excited[i];
                let mut row = vec![num(cmp.three.tau[i])];
                row.extend(a.iter().chain(b.iter()).map(|x| num(*x)));
                row.push(num(ex[0].norm_sqr() + ex[1].norm_sqr()));
                t.push(row);
            }
            let summary = json!({
                "max_population_difference": cmp.max_population_difference,
                "max_excited_population": cmp.max_excited_population,
                "final_F_eliminated": cmp.three.final_transfer(),
                "final_F_five_level": cmp.five.final_transfer(),
                "max_norm_drift": [cmp.three.max_norm_drift, cmp.five.max_norm_drift],
            });
            let drifts = vec![cmp.three.max_norm_drift, cmp.five.max_norm_drift];
            Results::single(
                cfg,
                t,
                summary,
                json!({ "eliminated": trajectory_data(&cmp.three), "five_level": trajectory_data(&cmp.five) }),
                drifts,
            )
        }
        Experiment::MexicanHat(e) => {
            let out = e.run()?;
            let traj = &out.trajectory;
            let mut s = trajectory_summary(traj);
            let (r_minus, r_plus) = out.profile.radii();
            s["chemical_potential_joules"] = json!(out.profile.mu());
            s["thomas_fermi_radii_m"] = json!([r_minus, r_plus]);
            s["integrals"] = integral_rows(&out.integrals);
            let mut it = Table::new(&["name", "value"]);
            it.push(vec!["w".into(), num(out.integrals.w)]);
            for (k, v) in out.integrals.named_values() {
                it.push(vec![k.into(), num(v)]);
            }
            Results {
                tables: vec![
                    (cfg.output.stem.clone(), trajectory_table(traj)),
                    (format!("{}_integrals", cfg.output.stem), it),
                ],
                summary: s,
                data: trajectory_data(traj),
                drifts: vec![traj.max_norm_drift],
            }
        }
        Experiment::ValidateIntegrals(c) => integral_check(cfg, c)?,
        Experiment::Detect(d) => detect(cfg, d)?,
    };
    let mut artifacts = Vec::new();
    if cfg.output.formats.contains(&Format::Csv) {
        for (stem, t) in &res.tables {
            artifacts.push(Artifact { file_name: format!("{stem}.csv"), bytes: t.to_csv(cfg) });
        }
    }
    if cfg.output.formats.contains(&Format::Json) {
        let mut notes: Vec<String> = cfg.notes.clone();
        notes.extend(cfg.warnings.iter().map(|w| format!("warning: {w}")));
        let doc = json!({
            "tool": "oamvortex",
            "version": VERSION,
            "experiment": cfg.name,
            "config_hash": cfg.hash,
            "parameters": cfg.parameters,
            "resolved": resolved(&cfg.experiment),
            "summary": res.summary,
            "notes": notes,
            "data": res.data,
        });
        let mut bytes = serde_json::to_vec_pretty(&doc).expect("json serializes");
        bytes.push(b'\n');
        artifacts.push(Artifact { file_name: format!("{}.json", cfg.output.stem), bytes });
    }
    Ok(RunOutput { artifacts, summary: res.summary, norm_drifts: res.drifts })
}

/// Parameters after unit conversion, in SI.
fn resolved(e: &Experiment) -> Value {
    match e {
        Experiment::MzPrepare(m) => {
            json!({ "bs1": { "r": m.bs1.r(), "t": m.bs1.t() }, "phase": m.phase, "ell": m.ell })
        }
        Experiment::Chirp(c) => json!(c),
        Experiment::Stirap { experiment, .. } => json!(experiment),
        Experiment::OverlapSweep { base, .. } => json!(base),
        Experiment::FiveLevelCheck(e) => json!(e),
        Experiment::MexicanHat(e) => json!(e),
        Experiment::ValidateIntegrals(c) => {
            json!({ "trap": c.trap, "eta": c.eta, "kappa": c.kappa, "w": c.w, "ell": c.ell, "options": c.options })
        }
        Experiment::Detect(d) => json!({ "radial": d.radial, "ell": d.ell, "cells": d.cells, "extent": d.extent }),
    }
}

fn mz(cfg: &Config, m: &MzPrepare) -> Result<Results, AppError> {
    let out = mach_zehnder(&m.bs1, m.phase, m.ell, C64::new(1.0, 0.0))?;
    let mut t = Table::new(&["port", "ell", "re", "im", "probability"]);
    for (port, modes) in [(1, &out.port1), (2, &out.port2)] {
        for (ell, a) in &modes.modes {
            t.push(vec![port.to_string(), ell.to_string(), num(a.re), num(a.im), num(a.norm_sqr())]);
        }
    }
    let p1 = out.port1.norm_sqr();
    let (ap, am) = if p1 > 0.0 {
        let s = out.port1_superposition()?.normalized()?;
        (s.amplitude(m.ell), s.amplitude(-m.ell))
    } else {
        (C64::new(0.0, 0.0), C64::new(0.0, 0.0))
    };
    let summary = json!({
        "port1_probability": p1,
        "port2_probability": out.port2.norm_sqr(),
        "a_plus": [ap.re, ap.im],
        "a_minus": [am.re, am.im],
        "p_plus": ap.norm_sqr(),
    });
    Ok(Results::single(cfg, t, summary, Value::Null, Vec::new()))
}

fn integral_check(cfg: &Config, c: &IntegralCheck) -> Result<Results, AppError> {
    let analytic = harmonic_analytic_integrals(&c.trap, c.kappa, c.w, c.ell)?;
    let numeric = harmonic_numeric_integrals(&c.trap, c.eta, c.w, c.ell, &c.options)?;
    let mut t = Table::new(&["name", "closed_form", "quadrature", "relative_difference"]);
    let mut worst = ("", 0.0_f64);
    for ((k, a), (_, n)) in analytic.named_values().iter().zip(numeric.named_values().iter()) {
        let rel = if *a == 0.0 { n.abs() } else { ((n - a) / a).abs() };
        if rel > worst.1 {
            worst = (k, rel);
        }
        t.push(vec![k.to_string(), num(*a), num(*n), num(rel)]);
    }
    let summary = json!({ "max_relative_difference": worst.1, "worst_coefficient": worst.0, "waist_m": c.w });
    let data = json!({ "closed_form": integral_rows(&analytic), "quadrature": integral_rows(&numeric) });
    Ok(Results::single(cfg, t, summary, data, Vec::new()))
}

struct PanelResult {
    state: VortexSuperposition,
    grid: DensityGrid,
}

fn render(state: &VortexSuperposition, geom: &GridGeometry) -> Result<DensityGrid, CoreError> {
    let rows: Vec<Vec<f64>> = (0..geom.ny).into_par_iter().map(|j| render_row(state, geom, j)).collect();
    DensityGrid::from_rows(*geom, rows)
}

fn detect(cfg: &Config, d: &DetectSetup) -> Result<Results, AppError> {
    let geom = GridGeometry::new(d.cells, d.cells, d.extent)?;
    let mut panels = Vec::new();
    for p in &d.panels {
        let base = VortexSuperposition::opposite(p.p_plus, p.theta, d.ell, d.radial)?;
        let state = if p.probe { probe_shift(&base)? } else { base };
        panels.push(PanelResult { state, grid: render(&state, &geom)? });
    }
    let reference = &panels[0].grid;
    let mut table = Table::new(&[
        "panel",
        "p_plus",
        "theta",
        "probe",
        "ell1",
        "ell2",
        "visibility_closed_form",
        "visibility",
        "lobes",
        "rotation",
        "assigned_alpha",
        "assigned_beta",
    ]);
    let mut list = Vec::new();
    let mut tables = Vec::new();
    let mut measured_v: Vec<Option<f64>> = Vec::new();
    for (k, (p, r)) in d.panels.iter().zip(&panels).enumerate() {
        let v_closed = visibility_closed_form(&r.state).ok();
        let v = visibility(&r.grid).ok();
        let lobes = count_lobes(&r.grid).ok();
        let rot = pattern_rotation(&r.grid, reference).ok();
        measured_v.push(v);
        // a probe panel is read against the unshifted panel with the same state
        let partner = d.panels[..k].iter().position(|q| !q.probe && q.p_plus == p.p_plus && q.theta == p.theta);
        let assigned = match (p.probe, partner.and_then(|i| measured_v[i])) {
            (true, Some(v0)) => Some(disambiguate_amplitudes(v0, &r.grid, d.ell, &d.radial)?),
            _ => None,
        };
        let (aa, ab) = match assigned {
            Some(AmplitudeAssignment::Symmetric { alpha, beta }) => (Some(alpha), Some(beta)),
            Some(AmplitudeAssignment::Assigned { alpha, beta, .. }) => (Some(alpha), Some(beta)),
            None => (None, None),
        };
        let opt = |x: Option<f64>| x.map(num).unwrap_or_default();
        let (l1, l2) = r.state.charges();
        table.push(vec![
            p.name.clone(),
            num(p.p_plus),
            num(p.theta),
            p.probe.to_string(),
            l1.to_string(),
            l2.to_string(),
            opt(v_closed),
            opt(v),
            lobes.map(|n| n.to_string()).unwrap_or_default(),
            opt(rot),
            opt(aa),
            opt(ab),
        ]);
        list.push(json!({
            "name": p.name,
            "p_plus": p.p_plus,
            "theta": p.theta,
            "probe": p.probe,
            "charges": [l1, l2],
            "visibility_closed_form": v_closed,
            "visibility": v,
            "lobes": lobes,
            "rotation": rot,
            "assignment": assigned,
            "total_density": r.grid.total(),
        }));
        let mut g = Table::new(&["x", "y", "density"]);
        for j in 0..geom.ny {
            for i in 0..geom.nx {
                g.push(vec![num(geom.x(i)), num(geom.y(j)), num(r.grid.at(i, j))]);
            }
        }
        tables.push((format!("{}_{}", cfg.output.stem, p.name), g));
    }
    tables.insert(0, (cfg.output.stem.clone(), table));
    let summary = json!({ "panels": list });
    let data = json!({ "grid": { "nx": geom.nx, "ny": geom.ny, "extent_m": geom.extent, "cell_m": geom.cell(),
        "layout": "row-major, y outer, x inner; values in per-panel CSV files" } });
    Ok(Results { tables, summary, data, drifts: Vec::new() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_raw;

    #[test]
    fn mz_half_splitter_gives_equal_weights() {
        let text = "experiment = \"mz-prepare\"\n[interferometer]\nreflectivity = 0.5\n";
        let cfg = build(parse_raw(text).unwrap()).unwrap();
        let out = execute(&cfg).unwrap();
        assert!((out.summary["p_plus"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        // the output splitter sends half the light to each port
        assert!((out.summary["port1_probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert!((out.summary["port2_probability"].as_f64().unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(out.artifacts.len(), 2);
    }

    #[test]
    fn exit_codes() {
        assert_eq!(AppError::Core(CoreError::StepBudget { t: 0.0, max_steps: 1 }).exit_code(), 3);
        assert_eq!(AppError::Core(CoreError::ZeroNorm).exit_code(), 2);
        assert_eq!(AppError::Config(ConfigErrors(Vec::new())).exit_code(), 2);
    }

    #[test]
    fn csv_header_carries_hash() {
        let text =
            "experiment = \"mz-prepare\"\n[interferometer]\nreflectivity = 0.36\n[output]\nformats = [\"csv\"]\n";
        let cfg = build(parse_raw(text).unwrap()).unwrap();
        let out = execute(&cfg).unwrap();
        let s = String::from_utf8(out.artifacts[0].bytes.clone()).unwrap();
        assert!(s.starts_with(&format!("# oamvortex {VERSION} experiment=mz-prepare config_hash={}", cfg.hash)));
    }
}
