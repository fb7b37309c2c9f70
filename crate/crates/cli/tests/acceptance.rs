//! Acceptance suite: one PASS/FAIL line per criterion, with wall time
//! against the criterion's budget. Run with `cargo test --test acceptance`.

#[path = "../../core/tests/support/mod.rs"]
mod support;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use qhyst_core::annealer::{anneal, convergence_check, AnnealSchedule, ChainState, FnObjective, ProposalWidth};
use qhyst_core::dimer::*;
use qhyst_core::hysteresis::*;
use qhyst_core::sweep::{label_legs, piecewise_linear, Direction};
use qhyst_core::wavefunction::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use support::*;

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;
const RANDOM_CASES: usize = 1000;

fn dimer_cycle(amplitude: f64, step: f64) -> Vec<f64> {
    let n = (2.0 * amplitude / step).round() as usize;
    piecewise_linear(&[amplitude, -amplitude, amplitude], n).unwrap()
}

fn linear_box(v0: f64) -> EnergyModel {
    EnergyModel::new(-1.0, 0.0, v0, BoxSpec::default()).unwrap()
}

fn criterion_1() -> Check {
    let schedule = AnnealSchedule::default();
    let mut worst_numeric: f64 = 0.0;
    let mut worst_scan: f64 = 0.0;
    for i in 0..=15 {
        let ratio = i as f64 / 10.0;
        let p = DimerParams::symmetric(ratio, 1.0).map_err(err)?;
        let exact = if ratio < 1.0 { (1.0 - ratio * ratio).sqrt() } else { 0.0 };
        let closed = ground_state_closed_form(&p).map_err(err)?;
        ensure((closed - exact).abs() < 1e-12, || format!("closed form at t/U = {ratio}: {closed}"))?;
        let numeric = asymmetry(&ground_state_numeric(&p, &schedule).map_err(err)?);
        let scan = dimer_asymmetry_by_scan(ratio, 1.0);
        worst_numeric = worst_numeric.max((numeric - exact).abs());
        worst_scan = worst_scan.max((scan - exact).abs());
    }
    ensure(worst_numeric < 1e-2, || format!("annealed S off by {worst_numeric:.2e}"))?;
    ensure(worst_scan < 1e-6, || format!("grid minimization off by {worst_scan:.2e}"))?;
    Ok(format!("max |dS| annealed {worst_numeric:.1e}, grid scan {worst_scan:.1e}"))
}

fn criterion_2() -> Check {
    let step = 0.01;
    let p = DimerParams::symmetric(0.0, 1.0).map_err(err)?;
    let trace = bias_sweep(&p, &dimer_cycle(3.0, step), &DimerSweepConfig::default()).map_err(err)?;
    let s = extract_thresholds(&trace, DIMER_JUMP_MIN).map_err(err)?;
    let (down, up) = match (s.threshold_down, s.threshold_up) {
        (Some(d), Some(u)) => (d, u),
        _ => return Err(format!("missing threshold: {s:?}")),
    };
    ensure((down + 2.0).abs() <= step && (up - 2.0).abs() <= step, || {
        format!("thresholds ({down}, {up}) not within {step} of (-2, 2)")
    })?;

    let mut oracle_gap: f64 = 0.0;
    for ratio in [0.0, 0.2, 0.5, 0.9] {
        let (fwd, bwd) = spinodal_thresholds(&DimerParams::symmetric(ratio, 1.0).map_err(err)?).map_err(err)?;
        let oracle = spinodal_by_scan(ratio, 1.0);
        oracle_gap = oracle_gap.max((fwd - oracle).abs()).max((bwd + oracle).abs());
    }
    ensure(oracle_gap < 1e-3, || format!("spinodal vs brute-force scan off by {oracle_gap:.2e}"))?;

    let mut widths = Vec::new();
    for (ratio, step) in [(0.2, 0.01), (0.5, 0.01), (0.9, 0.002)] {
        let p = DimerParams::symmetric(ratio, 1.0).map_err(err)?;
        let amplitude = 1.2 * astroid_half_width(ratio, 1.0) + 0.1;
        let trace = bias_sweep(&p, &dimer_cycle(amplitude, step), &DimerSweepConfig::default()).map_err(err)?;
        widths.push(extract_thresholds(&trace, DIMER_JUMP_MIN).map_err(err)?.coercive_width());
    }
    ensure(widths.windows(2).all(|w| w[1] < w[0]), || format!("widths not shrinking: {widths:?}"))?;
    Ok(format!(
        "thresholds ({down}, {up}), oracle gap {oracle_gap:.1e}, widths {:.3}/{:.3}/{:.3}",
        widths[0], widths[1], widths[2]
    ))
}

fn criterion_3() -> Check {
    let schedule = AnnealSchedule::linear(20, 500, 1);
    let (_, sol) = BoxProblem { model: linear_box(0.0) }.anneal(DEFAULT_M, &schedule).map_err(err)?;
    let (e_fd, _) = fd_linear_ground_state(-1.0, 0.0, 0.5, 400);
    let rel_exact = (sol.energy / FOUR_PI_SQ - 1.0).abs();
    let rel_fd = (sol.energy / e_fd - 1.0).abs();
    ensure(rel_exact < 1e-2, || format!("E = {} vs 4 pi^2", sol.energy))?;
    ensure(rel_fd < 2e-2, || format!("E = {} vs grid oracle {e_fd}", sol.energy))?;

    let x_at = |v0: f64| -> Result<f64, String> {
        Ok(BoxProblem { model: linear_box(v0) }
            .anneal(DEFAULT_M, &AnnealSchedule::linear(20, 500, 2))
            .map_err(err)?
            .1
            .observable)
    };
    let dv = 20.0;
    let slope = (x_at(dv)? - x_at(-dv)?) / (2.0 * dv);
    let oracle = {
        let (_, xp) = fd_linear_ground_state(-1.0, dv, 0.5, 400);
        let (_, xm) = fd_linear_ground_state(-1.0, -dv, 0.5, 400);
        (xp - xm) / (2.0 * dv)
    };
    let slope_err = (slope / oracle - 1.0).abs();
    ensure(slope_err < 0.05, || format!("slope {slope} vs oracle {oracle}"))?;

    let fields = [0.0, 100.0, 200.0, 400.0, 800.0];
    let xs = fields.iter().map(|&v| x_at(v)).collect::<Result<Vec<_>, _>>()?;
    ensure(xs.windows(2).all(|w| w[1] > w[0]), || format!("response not monotone: {xs:?}"))?;
    ensure(xs[2] - xs[1] < xs[1] - xs[0] && xs[4] < 0.5, || format!("response not saturating: {xs:?}"))?;

    let experiment = CycleExperiment {
        model: linear_box(0.0),
        n_coeffs: DEFAULT_M,
        prep: AnnealSchedule::linear(20, 200, 0),
        cycle: CycleSchedule::new(100.0),
        start_side: Side::Left,
    };
    let trace = experiment.run(4, false).map_err(err)?;
    let mut branch_gap: f64 = 0.0;
    for d in trace.points.iter().filter(|p| p.leg == 1) {
        if let Some(u) = trace.points.iter().find(|p| p.leg == 2 && p.v0 == d.v0) {
            branch_gap = branch_gap.max((u.x_mean - d.x_mean).abs());
        }
    }
    ensure(branch_gap < 0.05, || format!("branches differ by {branch_gap}"))?;
    Ok(format!(
        "E = {:.4} ({:.1e} from 4 pi^2, {:.1e} from grid), slope err {:.1e}, branch gap {:.1e}",
        sol.energy, rel_exact, rel_fd, slope_err, branch_gap
    ))
}

fn criterion_4() -> Check {
    let rec = CalibrationRecord::bundled().map_err(err)?;
    let strong = rec.strong_beta().map_err(err)?;
    let seed = rec.seeds[0];
    let experiment = rec.experiment(strong).map_err(err)?;
    let trace = experiment.run(seed, false).map_err(err)?;
    let s = extract_thresholds(&trace, DEFAULT_JUMP_MIN).map_err(err)?;
    let linear = extract_thresholds(&experiment.with_beta(0.0).run(seed, false).map_err(err)?, DEFAULT_JUMP_MIN)
        .map_err(err)?;
    let (up, down) = match (s.threshold_up, s.threshold_down) {
        (Some(u), Some(d)) => (u, d),
        _ => return Err(format!("beta = {strong}: thresholds missing: {s:?}")),
    };
    ensure(up > down, || format!("thresholds up {up} <= down {down}"))?;
    ensure(s.loop_area > 10.0 * linear.loop_area.abs(), || {
        format!("area {} vs linear {}", s.loop_area, linear.loop_area)
    })?;

    let mirror = experiment.run(seed, true).map_err(err)?;
    let exact = trace.points.len() == mirror.points.len()
        && trace
            .points
            .iter()
            .zip(&mirror.points)
            .all(|(p, q)| q.x_mean == -p.x_mean && q.v0 == -p.v0);
    ensure(exact, || "mirrored run is not the exact negation".into())?;
    Ok(format!(
        "beta = {strong}: thresholds {up}/{down}, area {:.1} vs linear {:.2}, mirror exact",
        s.loop_area, linear.loop_area
    ))
}

fn criterion_5() -> Check {
    let rec = CalibrationRecord::bundled().map_err(err)?;
    let strong = rec.strong_beta().map_err(err)?;
    let betas = [strong, 0.5 * strong, 0.0];
    let entries = beta_scan(&rec.experiment(strong).map_err(err)?, &betas, &rec.seeds[..1], DEFAULT_JUMP_MIN)
        .map_err(err)?;
    let mut widths = Vec::new();
    for e in &entries {
        let s = e.summary.as_ref().map_err(|x| format!("beta = {}: {x}", e.beta))?;
        widths.push(s.coercive_width());
    }
    ensure(widths[0] > widths[1] && widths[1] > widths[2], || format!("widths not ordered: {widths:?}"))?;
    let zero = entries[2].summary.as_ref().map_err(err)?;
    ensure(!zero.jumped(), || format!("beta = 0 jumped: {zero:?}"))?;
    Ok(format!("betas {betas:?} -> widths {widths:?}, beta = 0 without jumps"))
}

fn criterion_6() -> Check {
    let schedule = AnnealSchedule::linear(20, 500, 5);
    let linear = convergence_check(&BoxProblem { model: linear_box(0.0) }, &schedule, DEFAULT_M).map_err(err)?;
    let rec = CalibrationRecord::bundled().map_err(err)?;
    let strong = rec.strong_beta().map_err(err)?;
    let model = rec.experiment(strong).map_err(err)?.model.with_v0(rec.probe.v_max);
    let nonlinear = convergence_check(&BoxProblem { model }, &schedule, rec.n_coeffs).map_err(err)?;
    for (name, r) in [("linear", &linear), ("calibrated", &nonlinear)] {
        ensure(r.relative_delta < 2e-2, || format!("{name}: {r:?}"))?;
    }
    Ok(format!(
        "linear dE {:.1e} dx {:.1e}; calibrated dE {:.1e} dx {:.1e}",
        linear.energy_delta, linear.observable_delta, nonlinear.energy_delta, nonlinear.observable_delta
    ))
}

fn qhyst(args: &[&str], out: &Path) -> Result<(), String> {
    let status = Command::new(env!("CARGO_BIN_EXE_qhyst"))
        .args(args)
        .arg("--out-dir")
        .arg(out)
        .env_remove("QHYST_OUT_DIR")
        .output()
        .map_err(err)?;
    ensure(status.status.success(), || {
        format!("qhyst {args:?}: {}", String::from_utf8_lossy(&status.stderr))
    })
}

fn criterion_7() -> Check {
    let runs: &[&[&str]] = &[
        &["dimer-ground", "--preset", "fig1"],
        &["dimer-hysteresis", "--preset", "fig2"],
        &["dimer-hysteresis", "--preset", "fig2", "--mirrored"],
        &["dimer-hysteresis", "--preset", "linear"],
        &["box-anneal", "--preset", "fig3", "--cycles-per-temp", "200"],
        &["box-anneal", "--preset", "linear", "--cycles-per-temp", "200", "--doubling"],
        &["box-anneal", "--preset", "fig3-calibrated", "--cycles-per-temp", "100"],
        &["box-hysteresis", "--preset", "fig3", "--svg"],
        &["box-hysteresis", "--preset", "linear", "--svg"],
        &["box-hysteresis", "--preset", "fig3-calibrated", "--svg"],
        &["beta-scan", "--preset", "fig4"],
        &["beta-scan", "--preset", "fig3-calibrated"],
    ];
    let mut files = 0;
    for args in runs {
        let first = tempfile::tempdir().map_err(err)?;
        let again = tempfile::tempdir().map_err(err)?;
        qhyst(args, first.path())?;
        let manifest = first.path().join(format!("{}.manifest.json", args[0]));
        let text = std::fs::read_to_string(&manifest).map_err(err)?;
        let outputs: Vec<String> = text
            .split("\"outputs\": [")
            .nth(1)
            .and_then(|rest| rest.split(']').next())
            .ok_or("manifest lists no outputs")?
            .split(',')
            .map(|s| s.trim().trim_matches('"').to_string())
            .filter(|s| !s.is_empty())
            .collect();
        let status = Command::new(env!("CARGO_BIN_EXE_qhyst"))
            .args(["replay", manifest.to_str().unwrap(), "--out-dir", again.path().to_str().unwrap()])
            .output()
            .map_err(err)?;
        ensure(status.status.success(), || format!("replay of {args:?} failed"))?;
        ensure(!outputs.is_empty(), || format!("{args:?}: no outputs"))?;
        for name in &outputs {
            let a = std::fs::read(first.path().join(name)).map_err(err)?;
            let b = std::fs::read(again.path().join(name)).map_err(err)?;
            ensure(a == b, || format!("{args:?}: {name} differs after replay"))?;
            files += 1;
        }
    }
    Ok(format!("{} preset runs, {files} files byte-identical after replay", runs.len()))
}

fn random_amplitudes(rng: &mut ChaCha8Rng) -> DimerAmplitudes {
    loop {
        let z1 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        let z2 = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        if z1.norm_sqr() + z2.norm_sqr() > 1e-6 {
            return DimerAmplitudes::normalized(z1, z2).unwrap();
        }
    }
}

/// Random coefficients with `1..=max_m` per family.
fn random_coeffs(rng: &mut ChaCha8Rng, max_m: usize) -> FourierCoefficients {
    let m = rng.random_range(1..=max_m);
    let flat: Vec<f64> = (0..2 * m).map(|_| rng.random_range(-1.0..1.0)).collect();
    FourierCoefficients::from_flat(&flat).unwrap()
}

fn random_loop(rng: &mut ChaCha8Rng) -> Vec<LoopPoint> {
    let v = rng.random_range(0.5..5.0);
    let values = piecewise_linear(&[0.0, v, -v, v], rng.random_range(2..30)).unwrap();
    let mut x: f64 = 0.0;
    label_legs(&values)
        .into_iter()
        .map(|cp| {
            x = (x + rng.random_range(-0.3..0.3)).clamp(-0.5, 0.5);
            LoopPoint {
                control: cp.value,
                observable: x,
                leg: cp.leg,
                direction: cp.direction,
            }
        })
        .collect()
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

fn criterion_8() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let b = BoxSpec::default();
    let mut names = Vec::new();
    let mut check = |name: &'static str, f: &mut dyn FnMut(&mut ChaCha8Rng) -> Result<(), String>| {
        for case in 0..RANDOM_CASES {
            f(&mut rng).map_err(|e| format!("{name}, case {case}: {e}"))?;
        }
        names.push(name);
        Ok::<(), String>(())
    };

    check("dimer normalization and gauge", &mut |rng| {
        let a = random_amplitudes(rng);
        ensure((a.n1() + a.n2() - 1.0).abs() < 1e-12, || format!("n1 + n2 = {}", a.n1() + a.n2()))?;
        ensure(a.z1().im == 0.0 && a.z1().re >= 0.0, || format!("z1 = {}", a.z1()))
    })?;
    check("dimer site-swap parity", &mut |rng| {
        let p = DimerParams::new(
            rng.random_range(-5.0..5.0),
            rng.random_range(-5.0..5.0),
            rng.random_range(0.0..3.0),
            rng.random_range(0.0..3.0),
        )
        .map_err(err)?;
        let a = random_amplitudes(rng);
        let (e, es) = (dimer_energy(&p, &a), dimer_energy(&p.swapped(), &a.swapped()));
        ensure((e - es).abs() < 1e-12, || format!("{e} vs {es}"))?;
        let phase = Complex64::from_polar(1.0, rng.random_range(0.0..std::f64::consts::TAU));
        let rotated = DimerAmplitudes::normalized(a.z1() * phase, a.z2() * phase).map_err(err)?;
        ensure((asymmetry(&a) - asymmetry(&rotated)).abs() < 1e-12, || "phase changes S".into())?;
        ensure((asymmetry(&a) - asymmetry(&a.swapped())).abs() < 1e-12, || "swap changes S".into())
    })?;
    check("box boundary", &mut |rng| {
        let c = random_coeffs(rng, 64);
        let (l, r) = (evaluate(&c, &b, -b.half()).map_err(err)?, evaluate(&c, &b, b.half()).map_err(err)?);
        ensure(l.abs() < 1e-12 && r.abs() < 1e-12, || format!("psi(-a/2) = {l}, psi(a/2) = {r}"))
    })?;
    check("box normalization", &mut |rng| {
        let c = random_coeffs(rng, 64);
        let field = to_grid(&c, &b).map_err(err)?;
        let norm = field.norm_integral(&b);
        ensure((norm - 1.0).abs() < 1e-9, || format!("norm {norm}"))?;
        let x = expectation_x(&field, &b);
        ensure(x.abs() <= 0.5, || format!("<x>/a = {x}"))
    })?;
    check("box scale invariance", &mut |rng| {
        let c = random_coeffs(rng, 32);
        let model = EnergyModel::new(-1.0, rng.random_range(-200.0..0.0), rng.random_range(-400.0..400.0), b)
            .map_err(err)?;
        let e = energy(&c, &model).map_err(err)?;
        for lambda in [-1.0, 0.5, 10.0] {
            let es = energy(&c.scaled(lambda).map_err(err)?, &model).map_err(err)?;
            ensure(close(e, es, 1e-12), || format!("lambda {lambda}: {e} vs {es}"))?;
        }
        Ok(())
    })?;
    check("box mirror parity", &mut |rng| {
        let c = random_coeffs(rng, 32);
        let v0 = rng.random_range(-400.0..400.0);
        let model = EnergyModel::new(-1.0, rng.random_range(-200.0..0.0), v0, b).map_err(err)?;
        let e = energy(&c, &model).map_err(err)?;
        let em = energy(&c.mirrored(), &model.with_v0(-v0)).map_err(err)?;
        ensure(close(e, em, 1e-12), || format!("{e} vs {em}"))
    })?;
    check("T = 0 monotonicity", &mut |rng| {
        let model = EnergyModel::new(-1.0, rng.random_range(-200.0..0.0), rng.random_range(-400.0..400.0), b)
            .map_err(err)?;
        let objective = BoxObjective::new(model, 8).map_err(err)?;
        let start: Vec<f64> = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut state = ChainState::new(&objective, start, ProposalWidth::default(), rng.random(), 0).map_err(err)?;
        let mut last = state.energy();
        for _ in 0..50 {
            state.metropolis_step(&objective, 0.0).map_err(err)?;
            ensure(state.energy() <= last, || format!("energy rose from {last} to {}", state.energy()))?;
            last = state.energy();
        }
        Ok(())
    })?;
    check("annealer determinism", &mut |rng| {
        let centre: Vec<f64> = (0..3).map(|_| rng.random_range(-2.0..2.0)).collect();
        let f = FnObjective::new(3, |x: &[f64]| x.iter().zip(&centre).map(|(a, c)| (a - c) * (a - c)).sum());
        let schedule = AnnealSchedule::linear(3, 5, rng.random());
        let run = || {
            let state = ChainState::new(&f, vec![0.0; 3], schedule.proposal(), schedule.seed, 0).unwrap();
            anneal(&f, state, &schedule).unwrap().params().to_vec()
        };
        let (p, q) = (run(), run());
        ensure(p.iter().zip(&q).all(|(a, b)| a.to_bits() == b.to_bits()), || "trajectories differ".into())
    })?;
    check("loop parity", &mut |rng| {
        let trace = random_loop(rng);
        let mirror: Vec<LoopPoint> = trace
            .iter()
            .map(|p| LoopPoint {
                control: -p.control,
                observable: -p.observable,
                leg: p.leg,
                direction: match p.direction {
                    Direction::Up => Direction::Down,
                    Direction::Down => Direction::Up,
                },
            })
            .collect();
        let s = extract_thresholds(&trace, DEFAULT_JUMP_MIN).map_err(err)?;
        let m = extract_thresholds(&mirror, DEFAULT_JUMP_MIN).map_err(err)?;
        ensure(m.threshold_up == s.threshold_down.map(|v| -v), || format!("{s:?} vs {m:?}"))?;
        ensure(m.threshold_down == s.threshold_up.map(|v| -v), || format!("{s:?} vs {m:?}"))?;
        ensure(close(s.loop_area, m.loop_area, 1e-12), || format!("area {} vs {}", s.loop_area, m.loop_area))
    })?;
    check("loop reindexing", &mut |rng| {
        let trace = random_loop(rng);
        let offset = rng.random_range(1..1000);
        let shifted: Vec<LoopPoint> = trace.iter().map(|p| LoopPoint { leg: p.leg + offset, ..*p }).collect();
        let s = extract_thresholds(&trace, DEFAULT_JUMP_MIN).map_err(err)?;
        let r = extract_thresholds(&shifted, DEFAULT_JUMP_MIN).map_err(err)?;
        ensure(s == r, || format!("{s:?} vs {r:?}"))
    })?;
    Ok(format!("{} properties x {RANDOM_CASES} random inputs", names.len()))
}

fn main() {
    let criteria: [(&str, Duration, fn() -> Check); 8] = [
        ("dimer closed form", Duration::from_secs(10), criterion_1),
        ("dimer hysteresis", Duration::from_secs(30), criterion_2),
        ("linear box ground state", Duration::from_secs(60), criterion_3),
        ("hysteresis existence", Duration::from_secs(300), criterion_4),
        ("coercive-field ordering", Duration::from_secs(600), criterion_5),
        ("coefficient doubling", Duration::MAX, criterion_6),
        ("manifest replay", Duration::MAX, criterion_7),
        ("invariant suite", Duration::MAX, criterion_8),
    ];
    let mut failed = 0;
    for (i, (name, budget, run)) in criteria.into_iter().enumerate() {
        let started = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|_| Err("panicked".into()));
        let elapsed = started.elapsed();
        let outcome = match outcome {
            Ok(_) if elapsed > budget => Err(format!("took {elapsed:.1?}, budget {budget:.0?}")),
            other => other,
        };
        let secs = elapsed.as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {}: PASS  {name} ({secs:.1} s): {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {}: FAIL  {name} ({secs:.1} s): {detail}", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} of 8 criteria failed");
        std::process::exit(1);
    }
    println!("all 8 criteria passed");
}
