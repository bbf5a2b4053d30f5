//! Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fail.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use oamvortex::config::{DetectSetup, Experiment, Overrides};
use oamvortex::{execute, load, Config};
use oamvortex_core::detection::{
    count_lobes, pattern_rotation, probe_shift, render_grid, visibility, visibility_closed_form, VortexSuperposition,
};
use oamvortex_core::dynamics::{
    compare_five_level, default_ode, integrate, rhs_chirp, rhs_stirap, transfer_function, ChirpExperiment,
    EnergyReference, SpinorAmplitudes, StirapExperiment, Trajectory,
};
use oamvortex_core::integrals::{harmonic_analytic_integrals, harmonic_numeric_integrals};
use oamvortex_core::optics::{dove_prism, mach_zehnder, BeamSplitter, OamSuperposition};
use oamvortex_core::C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn config(name: &str) -> Result<Config, String> {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs").join(name);
    load(&path, &Overrides::default()).map_err(|e| format!("{name}: {e}"))
}

fn check(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn within(elapsed: Duration, limit: f64) -> Result<(), String> {
    check(elapsed.as_secs_f64() < limit, format!("took {:.2} s, limit {limit} s", elapsed.as_secs_f64()))
}

fn split(t: &Trajectory) -> (f64, f64) {
    let [_, b, c] = t.final_state().populations();
    (b, c)
}

fn integrals() -> Outcome {
    let start = Instant::now();
    let cfg = config("validate_integrals.toml")?;
    let Experiment::ValidateIntegrals(c) = &cfg.experiment else { return Err("wrong experiment".into()) };
    let closed = harmonic_analytic_integrals(&c.trap, c.kappa, c.w, c.ell).map_err(|e| e.to_string())?;
    let quad = harmonic_numeric_integrals(&c.trap, c.eta, c.w, c.ell, &c.options).map_err(|e| e.to_string())?;
    let (name, worst) = closed.max_relative_difference(&quad);
    within(start.elapsed(), 5.0)?;
    check(worst <= 1e-6, format!("{name} differs by {worst:.2e}"))?;
    Ok(format!("worst relative difference {worst:.1e} ({name})"))
}

fn chirp() -> Outcome {
    let start = Instant::now();
    let cfg = config("fig3_chirp.toml")?;
    let Experiment::Chirp(e) = &cfg.experiment else { return Err("wrong experiment".into()) };
    let t = e.run().map_err(|e| e.to_string())?;
    within(start.elapsed(), 10.0)?;
    let f0 = t.transfer_values()[0];
    let (b, c) = split(&t);
    check((f0 - 1.0).abs() < 1e-12, format!("F(0) = {f0}"))?;
    check(t.final_transfer() <= -0.9, format!("final F = {:.4}", t.final_transfer()))?;
    check((b - 0.6).abs() <= 0.05 && (c - 0.4).abs() <= 0.05, format!("split {b:.4}:{c:.4}"))?;
    Ok(format!("F {f0} -> {:.4}, |beta|^2 = {b:.4}, |gamma|^2 = {c:.4}", t.final_transfer()))
}

fn stirap() -> Outcome {
    let start = Instant::now();
    let cfg = config("fig5_stirap.toml")?;
    let Experiment::Stirap { experiment, .. } = &cfg.experiment else { return Err("wrong experiment".into()) };
    let t = experiment.run().map_err(|e| e.to_string())?;
    within(start.elapsed(), 10.0)?;
    let (b, c) = split(&t);
    check(t.final_transfer() <= -0.9, format!("final F = {:.4}", t.final_transfer()))?;
    check((b - 0.6).abs() <= 0.05 && (c - 0.4).abs() <= 0.05, format!("split {b:.4}:{c:.4}"))?;
    Ok(format!("final F = {:.6}, |beta|^2 = {b:.4}, |gamma|^2 = {c:.4}", t.final_transfer()))
}

fn overlap() -> Outcome {
    let start = Instant::now();
    let cfg = config("fig6_overlap.toml")?;
    let out = execute(&cfg).map_err(|e| e.to_string())?;
    within(start.elapsed(), 60.0)?;
    let Experiment::OverlapSweep { separations, .. } = &cfg.experiment else { return Err("wrong experiment".into()) };
    check(separations.len() == 21, format!("{} points", separations.len()))?;
    // read the values back from the CSV the run produced
    let csv = out.artifacts.iter().find(|a| a.file_name.ends_with(".csv")).ok_or("no csv")?;
    let text = String::from_utf8(csv.bytes.clone()).map_err(|e| e.to_string())?;
    let mut points = Vec::new();
    for line in text.lines().skip(2) {
        let cols: Vec<f64> = line.split(',').map(|x| x.parse().unwrap_or(f64::NAN)).collect();
        points.push((cols[0], cols[3]));
    }
    let at = |s: f64| points.iter().find(|p| (p.0 - s).abs() < 1e-9).map(|p| p.1).ok_or(format!("no point at {s}"));
    for s in [0.3, 0.4, 0.5] {
        let f = at(s)?;
        check(f <= -0.95, format!("separation {s}: F = {f:.4}"))?;
    }
    let (f0, f2) = (at(0.0)?, at(2.0)?);
    check(f0 > -0.5, format!("separation 0: F = {f0:.4}"))?;
    check(f2 > 0.8, format!("separation 2: F = {f2:.4}"))?;
    let worst =
        points.iter().filter(|p| (0.3 - 1e-9..=0.5 + 1e-9).contains(&p.0)).map(|p| p.1).fold(f64::MIN, f64::max);
    Ok(format!("max F on [0.3, 0.5] = {worst:.4}, F(0) = {f0:.4}, F(2) = {f2:.4}"))
}

fn ring() -> Outcome {
    let start = Instant::now();
    let cfg = config("fig8_mexican_hat.toml")?;
    let Experiment::MexicanHat(e) = &cfg.experiment else { return Err("wrong experiment".into()) };
    let out = e.run().map_err(|e| e.to_string())?;
    within(start.elapsed(), 60.0)?;
    let t = &out.trajectory;
    let (b, c) = split(t);
    let (pb, pc) = (b / (b + c), c / (b + c));
    check(t.final_transfer() <= -0.9, format!("transfer incomplete, F = {:.4}", t.final_transfer()))?;
    check((pb - 0.6).abs() <= 0.05 && (pc - 0.4).abs() <= 0.05, format!("split {pb:.4}:{pc:.4}"))?;
    let harmonic = config("fig5_stirap.toml")?;
    let Experiment::Stirap { experiment, .. } = &harmonic.experiment else { return Err("wrong experiment".into()) };
    let th = experiment.run().map_err(|e| e.to_string())?;
    // each in its own 1 / Omega_0, the unit the pulse shapes are given in
    let ring_tau = t.transfer_timescale(0.9).ok_or("ring transfer time undefined")?;
    let harm_tau = th.transfer_timescale(0.9).ok_or("harmonic transfer time undefined")?;
    let ratio = ring_tau / harm_tau;
    check((1.0 / 3.0..=3.0).contains(&ratio), format!("timescale ratio {ratio:.3}"))?;
    Ok(format!("F = {:.6}, split {pb:.4}:{pc:.4}, timescale ratio {ratio:.3}", t.final_transfer()))
}

fn detection() -> Outcome {
    let start = Instant::now();
    let cfg = config("fig7_detect.toml")?;
    let Experiment::Detect(DetectSetup { radial, ell, cells, extent, .. }) = cfg.experiment else {
        return Err("wrong experiment".into());
    };
    let err = |e: oamvortex_core::Error| e.to_string();
    let state = |p: f64, theta: f64| VortexSuperposition::opposite(p, theta, ell, radial).map_err(err);
    let grid = |s: &VortexSuperposition| render_grid(s, cells, cells, extent).map_err(err);
    let mut worst: f64 = 0.0;
    let mut grids = Vec::new();
    for p in [0.5, 0.1, 0.9] {
        let s = state(p, 0.0)?;
        let g = grid(&s)?;
        let d = (visibility(&g).map_err(err)? - visibility_closed_form(&s).map_err(err)?).abs();
        worst = worst.max(d);
        grids.push(g);
    }
    check(worst <= 1e-3, format!("visibility off by {worst:.2e}"))?;
    let lobes = count_lobes(&grids[0]).map_err(err)?;
    check(lobes == 6, format!("{lobes} lobes for the equal superposition"))?;
    let shifted = probe_shift(&state(0.5, 0.0)?).map_err(err)?;
    check(shifted.charges() == (4, -2), format!("probe gave charges {:?}", shifted.charges()))?;
    let probe_lobes = count_lobes(&grid(&shifted)?).map_err(err)?;
    check(probe_lobes == 6, format!("{probe_lobes} lobes after the probe shift"))?;
    let rot = pattern_rotation(&grid(&state(0.5, std::f64::consts::PI)?)?, &grids[0]).map_err(err)?;
    let want = std::f64::consts::PI / 6.0;
    check((rot - want).abs() <= 0.01 * want, format!("rotation {rot:.6}, want {want:.6}"))?;
    within(start.elapsed(), 10.0)?;
    Ok(format!(
        "max |V - 2 alpha beta| = {worst:.1e}, lobes {lobes}/{probe_lobes}, rotation {rot:.6} (pi/6 = {want:.6})"
    ))
}

fn properties() -> Outcome {
    // norm drift of every shipped dynamics config
    let mut drift: f64 = 0.0;
    for name in [
        "fig3_chirp.toml",
        "fig5_stirap.toml",
        "fig6_overlap.toml",
        "fig8_mexican_hat.toml",
        "five_level_check.toml",
        "five_level_fig5.toml",
    ] {
        let out = execute(&config(name)?).map_err(|e| e.to_string())?;
        let d = out.norm_drifts.iter().cloned().fold(0.0, f64::max);
        check(d <= 1e-8, format!("{name}: norm drift {d:.2e}"))?;
        drift = drift.max(d);
    }

    // global and relative phases leave populations alone
    let base = ChirpExperiment::figure();
    let ref_run = base.run().map_err(|e| e.to_string())?;
    let phase = C64::from_polar(1.0, 0.7);
    let global = ChirpExperiment { a_plus: base.a_plus * phase, a_minus: base.a_minus * phase, ..base };
    let relative = ChirpExperiment { a_minus: base.a_minus * phase, ..base };
    let mut phase_dev: f64 = 0.0;
    for other in [global, relative] {
        let t = other.run().map_err(|e| e.to_string())?;
        for (x, y) in ref_run.states.iter().zip(&t.states) {
            for (p, q) in x.populations().iter().zip(y.populations().iter()) {
                phase_dev = phase_dev.max((p - q).abs());
            }
        }
    }
    check(phase_dev < 1e-7, format!("phase changed populations by {phase_dev:.2e}"))?;

    // exchanging a+ and a- exchanges beta and gamma
    let st = StirapExperiment::figure();
    let a = st.run().map_err(|e| e.to_string())?;
    let b = StirapExperiment { a_plus: st.a_minus, a_minus: st.a_plus, ..st }.run().map_err(|e| e.to_string())?;
    let swap_dev = a
        .states
        .iter()
        .zip(&b.states)
        .map(|(x, y)| (x.beta - y.gamma).norm().max((x.gamma - y.beta).norm()))
        .fold(0.0, f64::max);
    check(swap_dev < 1e-9, format!("exchange symmetry broken by {swap_dev:.2e}"))?;

    // general equations with harmonic integrals reduce to the STIRAP ones
    let mut rng = StdRng::seed_from_u64(7);
    let model = st.general_model(EnergyReference::GroundMode).map_err(|e| e.to_string())?;
    let drive = st.drive().map_err(|e| e.to_string())?;
    let (k, w) = (st.kappa / st.omega0, st.trap.omega_perp / st.omega0);
    let mut reduce_dev: f64 = 0.0;
    for _ in 0..100 {
        let mut z = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let s = SpinorAmplitudes::new(z(), z(), z());
        let t = rng.gen_range(-1.0..3.0);
        let (g, r) = (model.rhs(&s, t), rhs_stirap(&s, k, w, &drive, &st.pulses, t));
        let scale = 1.0 + g.norm_sqr().sqrt();
        let d =
            [(g.alpha - r.alpha), (g.beta - r.beta), (g.gamma - r.gamma)].iter().map(|c| c.norm()).fold(0.0, f64::max);
        reduce_dev = reduce_dev.max(d / scale);
    }
    check(reduce_dev < 1e-12, format!("general vs reduced right-hand side differ by {reduce_dev:.2e}"))?;

    // random splitters are unitary and the interferometer keeps the norm
    let mut unit_dev: f64 = 0.0;
    let mut mz_dev: f64 = 0.0;
    for _ in 0..100 {
        let p: f64 = rng.gen_range(0.0..1.0);
        let r = C64::from_polar(p.sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
        let t = C64::from_polar((1.0 - p).sqrt(), rng.gen_range(0.0..std::f64::consts::TAU));
        let bs = BeamSplitter::from_column(r, t).map_err(|e| e.to_string())?;
        let m = bs.matrix();
        for i in 0..2 {
            for j in 0..2 {
                let dot = m[0][i].conj() * m[0][j] + m[1][i].conj() * m[1][j];
                let want = if i == j { 1.0 } else { 0.0 };
                unit_dev = unit_dev.max((dot - want).norm());
            }
        }
        let u0 = C64::new(rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0));
        let ell = rng.gen_range(1..6);
        let out = mach_zehnder(&bs, rng.gen_range(0.0..std::f64::consts::TAU), ell, u0).map_err(|e| e.to_string())?;
        mz_dev = mz_dev.max((out.norm_sqr() - u0.norm_sqr()).abs() / u0.norm_sqr());
    }
    check(unit_dev < 1e-12, format!("splitter unitarity off by {unit_dev:.2e}"))?;
    check(mz_dev < 1e-12, format!("interferometer norm off by {mz_dev:.2e}"))?;

    // the Dove prism undoes itself
    let sup =
        OamSuperposition::from_pairs(&[(2, C64::new(0.3, 0.4)), (-2, C64::new(0.0, 0.5)), (5, C64::new(0.7, 0.0))])
            .map_err(|e| e.to_string())?;
    check(dove_prism(&dove_prism(&sup)) == sup, "Dove prism is not an involution".into())?;

    // two levels coupled at w: |beta|^2 = sin^2(w t)
    let w = 1.7;
    let traj = integrate(
        |_, s| rhs_chirp(s, 0.0, w, -2.0 * w, C64::new(1.0, 0.0), C64::new(0.0, 0.0)),
        SpinorAmplitudes::ground(),
        (0.0, 10.0),
        201,
        &default_ode(),
    )
    .map_err(|e| e.to_string())?;
    let rabi_dev = traj
        .tau
        .iter()
        .zip(&traj.states)
        .map(|(t, s)| (s.beta.norm_sqr() - (w * t).sin().powi(2)).abs())
        .fold(0.0, f64::max);
    check(rabi_dev < 1e-6, format!("Rabi oscillation off by {rabi_dev:.2e}"))?;
    let f_end = transfer_function(&traj.final_state());
    check(f_end.is_finite(), "non-finite transfer".into())?;

    Ok(format!(
        "drift {drift:.1e}, phase {phase_dev:.1e}, exchange {swap_dev:.1e}, reduction {reduce_dev:.1e}, \
         unitarity {unit_dev:.1e}, interferometer {mz_dev:.1e}, Rabi {rabi_dev:.1e}"
    ))
}

fn elimination() -> Outcome {
    let far = config("five_level_check.toml")?;
    let Experiment::FiveLevelCheck(e) = &far.experiment else { return Err("wrong experiment".into()) };
    check((e.delta_big / e.omega0 - 1e4).abs() < 1e-6, format!("Delta / Omega_0 = {}", e.delta_big / e.omega0))?;
    let cmp = compare_five_level(e).map_err(|e| e.to_string())?;
    check(
        cmp.max_population_difference < 1e-4,
        format!("Delta = 1e4 Omega_0: populations differ by {:.2e}", cmp.max_population_difference),
    )?;
    let near = config("five_level_fig5.toml")?;
    let Experiment::FiveLevelCheck(n) = &near.experiment else { return Err("wrong experiment".into()) };
    check((n.delta_big / n.omega0 - 10.0).abs() < 1e-9, format!("Delta / Omega_0 = {}", n.delta_big / n.omega0))?;
    let near_cmp = compare_five_level(n).map_err(|e| e.to_string())?;
    check(
        near_cmp.max_excited_population < 0.01,
        format!("Delta = 10 Omega_0: excited population {:.2e}", near_cmp.max_excited_population),
    )?;
    Ok(format!(
        "Delta = 1e4 Omega_0: difference {:.1e} (F {:.3} -> {:.3}); Delta = 10 Omega_0: max excited {:.1e}",
        cmp.max_population_difference,
        cmp.three.transfer_values()[0],
        cmp.three.final_transfer(),
        near_cmp.max_excited_population
    ))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("overlap integrals: quadrature vs closed forms", integrals),
        ("chirped transfer, 60:40", chirp),
        ("STIRAP transfer, 60:40", stirap),
        ("pulse-overlap sweep", overlap),
        ("ring-trap STIRAP", ring),
        ("interference detection", detection),
        ("property suite", properties),
        ("adiabatic elimination", elimination),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = f();
        let secs = start.elapsed().as_secs_f64();
        match result {
            Ok(detail) => println!("PASS {} {name} [{secs:.2} s]: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL {} {name} [{secs:.2} s]: {why}", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
