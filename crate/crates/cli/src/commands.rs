//! The experiments behind each subcommand, with their defaults and presets.

use std::collections::BTreeMap;

use anyhow::Context;
use qhyst_core::annealer::{convergence_check, AnnealSchedule, ProposalWidth};
use qhyst_core::dimer::{
    asymmetry, bias_sweep, dimer_energy, ground_state_closed_form, ground_state_numeric, DimerParams, DimerSweepConfig,
    Site,
};
use qhyst_core::hysteresis::{
    beta_scan, bifurcation_scan, extract_thresholds, BifurcationScan, BoxProblem, CalibrationRecord, CycleExperiment,
    CycleSchedule, LoopSummary, Side,
};
use qhyst_core::sweep::piecewise_linear;
use qhyst_core::wavefunction::{self, BoxObjective, BoxSpec, EnergyModel, FourierCoefficients};

use crate::output::{num, opt_num, svg_polyline, Outputs, Table};
use crate::params::{fmt_f64, fmt_list, usage, ParamSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    DimerGround,
    DimerHysteresis,
    BoxAnneal,
    BoxEval,
    BoxHysteresis,
    BetaScan,
    Calibrate,
}

pub const ALL: [Command; 7] = [
    Command::DimerGround,
    Command::DimerHysteresis,
    Command::BoxAnneal,
    Command::BoxEval,
    Command::BoxHysteresis,
    Command::BetaScan,
    Command::Calibrate,
];

fn pairs(items: &[(&str, &str)]) -> BTreeMap<String, String> {
    items.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

const MODEL: &[(&str, &str)] = &[
    ("gamma", "-1"),
    ("beta", "0"),
    ("box-a", "0.5"),
    ("n-grid", "512"),
    ("n-coeffs", "20"),
];

const CYCLE: &[(&str, &str)] = &[
    ("v-max", "100"),
    ("steps-per-leg", "50"),
    ("sweeps-per-step", "200"),
    ("t0", "0.05"),
    ("pattern", "0,1,-1,1"),
    ("sigma0", "0.1"),
    ("sigma-floor", "0.001"),
    ("temps", "20"),
    ("cycles-per-temp", "1000"),
    ("seed", "0"),
    ("jump-min", "0.2"),
];

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::DimerGround => "dimer-ground",
            Command::DimerHysteresis => "dimer-hysteresis",
            Command::BoxAnneal => "box-anneal",
            Command::BoxEval => "box-eval",
            Command::BoxHysteresis => "box-hysteresis",
            Command::BetaScan => "beta-scan",
            Command::Calibrate => "calibrate",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ALL.into_iter().find(|c| c.name() == name)
    }

    pub fn defaults(self) -> ParamSet {
        let mut m = BTreeMap::new();
        let mut add = |items: &[(&str, &str)]| m.extend(pairs(items));
        match self {
            Command::DimerGround => add(&[
                ("u", "1"),
                ("ratios", "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1,1.1,1.2,1.3,1.4,1.5"),
                ("temps", "20"),
                ("cycles-per-temp", "10000"),
                ("sigma0", "0.1"),
                ("sigma-floor", "0.001"),
                ("seed", "0"),
            ]),
            Command::DimerHysteresis => add(&[
                ("u", "1"),
                ("t", "0"),
                ("eps1", "0"),
                ("eps2-max", "3"),
                ("eps2-step", "0.01"),
                ("t0", "1e-6"),
                ("sweeps-per-step", "200"),
                ("sigma0", "0.1"),
                ("sigma-floor", "0.01"),
                ("temps", "20"),
                ("cycles-per-temp", "500"),
                ("mirrored", "false"),
                ("seed", "0"),
                ("jump-min", "0.5"),
            ]),
            Command::BoxAnneal => {
                add(MODEL);
                add(&[
                    ("v0", "0"),
                    ("temps", "20"),
                    ("cycles-per-temp", "10000"),
                    ("sigma0", "0.1"),
                    ("sigma-floor", "0.001"),
                    ("seed", "0"),
                    ("doubling", "false"),
                ]);
            }
            Command::BoxEval => {
                add(MODEL);
                add(&[("v0", "0"), ("coeffs", "")]);
            }
            Command::BoxHysteresis => {
                add(MODEL);
                add(CYCLE);
                add(&[("beta", "-0.1"), ("start-side", "left"), ("mirrored", "false"), ("svg", "false")]);
            }
            Command::BetaScan => {
                add(MODEL);
                add(CYCLE);
                add(&[("betas", "-0.1,-0.05,0")]);
            }
            Command::Calibrate => {
                add(MODEL);
                add(CYCLE);
                add(&[
                    ("v-max", "400"),
                    ("steps-per-leg", "10"),
                    ("sweeps-per-step", "2000"),
                    ("sigma-floor", "0.01"),
                    ("cycles-per-temp", "200"),
                    ("betas", "0,-25,-50,-75,-100,-125,-150,-175,-200"),
                    ("seeds", "1,2"),
                    ("area-floor", "100"),
                ]);
                m.remove("beta");
                m.remove("jump-min");
                m.remove("seed");
            }
        }
        ParamSet::from_map(m)
    }

    /// Parameter overrides of a named preset for this command.
    pub fn preset(self, name: &str) -> anyhow::Result<BTreeMap<String, String>> {
        let none = || usage(format!("--preset: `{name}` is not defined for {}", self.name()));
        match (name, self) {
            ("fig1", Command::DimerGround) => Ok(BTreeMap::new()),
            ("fig2", Command::DimerHysteresis) => Ok(pairs(&[("u", "1"), ("t", "0"), ("eps1", "0")])),
            ("fig3", Command::BoxHysteresis | Command::BoxAnneal | Command::BoxEval) => Ok(pairs(&[("gamma", "-1"), ("beta", "-0.1"), ("box-a", "0.5")])),
            ("fig4", Command::BetaScan) => Ok(pairs(&[("gamma", "-1"), ("betas", "-0.1,-0.05,0"), ("box-a", "0.5")])),
            ("linear", Command::BoxAnneal | Command::BoxEval | Command::BoxHysteresis) => Ok(pairs(&[("beta", "0")])),
            ("linear", Command::DimerHysteresis) => Ok(pairs(&[("u", "0"), ("t", "0.1"), ("eps1", "0")])),
            ("fig3-calibrated", Command::BoxHysteresis | Command::BetaScan | Command::BoxAnneal) => {
                calibrated_preset(self)
            }
            _ => Err(none()),
        }
    }

    pub fn execute(self, p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
        match self {
            Command::DimerGround => dimer_ground(p, out),
            Command::DimerHysteresis => dimer_hysteresis(p, out),
            Command::BoxAnneal => box_anneal(p, out),
            Command::BoxEval => box_eval(p, out),
            Command::BoxHysteresis => box_hysteresis(p, out),
            Command::BetaScan => run_beta_scan(p, out),
            Command::Calibrate => calibrate(p, out),
        }
    }
}

fn calibrated_preset(cmd: Command) -> anyhow::Result<BTreeMap<String, String>> {
    let rec = CalibrationRecord::bundled()?;
    let strong = rec.strong_beta()?;
    let probe = &rec.probe;
    let mut m = pairs(&[]);
    let mut set = |k: &str, v: String| {
        m.insert(k.to_string(), v);
    };
    set("gamma", fmt_f64(rec.gamma));
    set("box-a", fmt_f64(rec.box_a));
    set("n-grid", rec.n_grid.to_string());
    set("n-coeffs", rec.n_coeffs.to_string());
    match cmd {
        Command::BoxAnneal => {
            // the field pins the soliton so that <x>/a is well defined
            set("beta", fmt_f64(strong));
            set("v0", fmt_f64(probe.v_max));
            set("doubling", "true".into());
            set("cycles-per-temp", "500".into());
        }
        _ => {
            set("v-max", fmt_f64(probe.v_max));
            set("steps-per-leg", probe.steps_per_leg.to_string());
            set("sweeps-per-step", probe.sweeps_per_step.to_string());
            set("t0", fmt_f64(probe.t0));
            set("pattern", fmt_list(&probe.pattern));
            set("sigma0", fmt_f64(probe.proposal.sigma0));
            set("sigma-floor", fmt_f64(probe.proposal.floor));
            set("temps", fmt_list(&rec.prep.temps));
            set("cycles-per-temp", rec.prep.cycles_per_temp.to_string());
            set("seed", rec.seeds[0].to_string());
            if cmd == Command::BetaScan {
                set("betas", fmt_list(&[strong, 0.5 * strong, 0.0]));
            } else {
                set("beta", fmt_f64(strong));
            }
        }
    }
    Ok(m)
}

/// `--temps` is either a count (linear ladder 1 -> 0) or an explicit list.
fn schedule(p: &ParamSet, seed: u64) -> anyhow::Result<AnnealSchedule> {
    let cycles: usize = p.get("cycles-per-temp")?;
    let raw = p.raw("temps");
    let mut s = if raw.contains(',') {
        AnnealSchedule {
            temps: p.list("temps")?,
            cycles_per_temp: cycles,
            seed,
            ..AnnealSchedule::default()
        }
    } else {
        let n: usize = p.get("temps")?;
        if n < 2 {
            return Err(usage("--temps: a ladder needs at least 2 temperatures"));
        }
        AnnealSchedule::linear(n, cycles, seed)
    };
    s.proposal_sigma0 = p.get("sigma0")?;
    s.sigma_floor = p.get("sigma-floor")?;
    s.validate().map_err(|e| usage(format!("--temps/--cycles-per-temp: {e}")))?;
    Ok(s)
}

fn model(p: &ParamSet, beta: f64, v0: f64) -> anyhow::Result<EnergyModel> {
    let box_spec = BoxSpec::new(p.get("box-a")?, p.get("n-grid")?).map_err(flag_error)?;
    EnergyModel::new(p.get("gamma")?, beta, v0, box_spec).map_err(flag_error)
}

fn n_coeffs(p: &ParamSet) -> anyhow::Result<usize> {
    let m: usize = p.get("n-coeffs")?;
    if m == 0 {
        return Err(usage("--n-coeffs: must be at least 1"));
    }
    Ok(m)
}

/// Core validation errors become usage errors naming the offending flag.
fn flag_error(e: qhyst_core::Error) -> anyhow::Error {
    match e {
        qhyst_core::Error::Validation { field, reason } => usage(format!("--{}: {reason}", field.replace('_', "-"))),
        other => other.into(),
    }
}

fn cycle(p: &ParamSet) -> anyhow::Result<CycleSchedule> {
    let c = CycleSchedule {
        v_max: p.get("v-max")?,
        steps_per_leg: p.get("steps-per-leg")?,
        pattern: p.list("pattern")?,
        sweeps_per_step: p.get("sweeps-per-step")?,
        t0: p.get("t0")?,
        proposal: ProposalWidth {
            sigma0: p.get("sigma0")?,
            floor: p.get("sigma-floor")?,
        },
    };
    c.validate().map_err(flag_error)?;
    Ok(c)
}

fn experiment(p: &ParamSet, beta: f64, seed: u64) -> anyhow::Result<CycleExperiment> {
    let mut prep = schedule(p, seed)?;
    prep.proposal_sigma0 = ProposalWidth::default().sigma0;
    prep.sigma_floor = ProposalWidth::default().floor;
    Ok(CycleExperiment {
        model: model(p, beta, 0.0)?,
        n_coeffs: n_coeffs(p)?,
        prep,
        cycle: cycle(p)?,
        start_side: Side::Left,
    })
}

fn summary_footer(t: &mut Table, s: &LoopSummary) {
    t.footer("threshold_up", opt_num(s.threshold_up));
    t.footer("threshold_down", opt_num(s.threshold_down));
    t.footer("coercive_width", num(s.coercive_width()));
    t.footer("loop_area", num(s.loop_area));
    t.footer("jumped_up", s.jumped_up);
    t.footer("jumped_down", s.jumped_down);
    t.footer("ambiguous_up", s.ambiguous_up);
    t.footer("ambiguous_down", s.ambiguous_down);
}

fn dimer_ground(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let u: f64 = p.get("u")?;
    let mut ratios: Vec<f64> = p.list("ratios")?;
    if ratios.is_empty() {
        return Err(usage("--ratios: empty grid"));
    }
    if ratios.iter().any(|r| !(*r >= 0.0) || !r.is_finite()) {
        return Err(usage("--ratios: values must be finite and >= 0"));
    }
    if !(u > 0.0) {
        return Err(usage("--u: must be > 0 for a t/U grid"));
    }
    ratios.sort_by(f64::total_cmp);
    let schedule = schedule(p, p.get("seed")?)?;
    let mut t = Table::new(&["t_over_u", "s_closed_form", "s_numeric", "energy"]);
    for r in ratios {
        let params = DimerParams::symmetric(r * u, u).map_err(flag_error)?;
        let amps = ground_state_numeric(&params, &schedule)?;
        t.row(vec![
            num(r),
            num(ground_state_closed_form(&params)?),
            num(asymmetry(&amps)),
            num(dimer_energy(&params, &amps)),
        ]);
    }
    out.write("dimer_ground.csv", &t.to_bytes()?)
}

fn dimer_hysteresis(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let params = DimerParams::new(p.get("eps1")?, 0.0, p.get("t")?, p.get("u")?).map_err(flag_error)?;
    let amp: f64 = p.get("eps2-max")?;
    let step: f64 = p.get("eps2-step")?;
    if !(amp > 0.0) || !amp.is_finite() {
        return Err(usage("--eps2-max: must be > 0"));
    }
    if !(step > 0.0) || step > amp {
        return Err(usage("--eps2-step: must be in (0, eps2-max]"));
    }
    let mirrored = p.flag("mirrored")?;
    let n = (2.0 * amp / step).round() as usize;
    let sign = if mirrored { -1.0 } else { 1.0 };
    let values = piecewise_linear(&[sign * amp, -sign * amp, sign * amp], n.max(2)).map_err(flag_error)?;
    let values: Vec<f64> = values.into_iter().map(|v| params.eps1 + v).collect();
    let config = DimerSweepConfig {
        t0: p.get("t0")?,
        sweeps_per_step: p.get("sweeps-per-step")?,
        proposal: ProposalWidth {
            sigma0: p.get("sigma0")?,
            floor: p.get("sigma-floor")?,
        },
        prep: AnnealSchedule::linear(p.get("temps")?, p.get("cycles-per-temp")?, 0),
        start_site: if mirrored { Site::Acceptor } else { Site::Donor },
        mirrored,
        seed: p.get("seed")?,
    };
    config.prep.validate().map_err(flag_error)?;
    let trace = bias_sweep(&params, &values, &config).map_err(flag_error)?;
    let summary = extract_thresholds(&trace, p.get("jump-min")?).map_err(flag_error)?;
    let mut t = Table::new(&["eps2", "s_signed", "energy", "leg"]);
    for pt in &trace.points {
        t.row(vec![num(pt.eps2), num(pt.s), num(pt.energy), pt.leg.to_string()]);
    }
    summary_footer(&mut t, &summary);
    out.write("dimer_hysteresis.csv", &t.to_bytes()?)
}

fn box_anneal(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let model = model(p, p.get("beta")?, p.get("v0")?)?;
    let m = n_coeffs(p)?;
    let schedule = schedule(p, p.get("seed")?)?;
    let problem = BoxProblem { model };
    let (coeffs, sol) = problem.anneal(m, &schedule)?;
    let mut t = Table::new(&["final_energy", "x_mean"]);
    t.row(vec![num(sol.energy), num(sol.observable)]);
    if p.flag("doubling")? {
        if m < 4 {
            return Err(usage("--n-coeffs: the doubling check needs at least 4"));
        }
        let r = convergence_check(&problem, &schedule, m)?;
        t.footer("m_small", r.m_small);
        t.footer("m_large", r.m_large);
        t.footer("e_small", num(r.e_small));
        t.footer("e_large", num(r.e_large));
        t.footer("observable_small", num(r.observable_small));
        t.footer("observable_large", num(r.observable_large));
        t.footer("energy_delta", num(r.energy_delta));
        t.footer("observable_delta", num(r.observable_delta));
        t.footer("relative_delta", num(r.relative_delta));
    }
    out.write("box_anneal.csv", &t.to_bytes()?)?;
    out.write("coefficients.csv", &coefficient_dump(&coeffs)?)
}

pub fn coefficient_dump(c: &FourierCoefficients) -> anyhow::Result<Vec<u8>> {
    let mut t = Table::new(&["family", "n", "value"]);
    for (family, values) in [("cos", c.cos()), ("sin", c.sin())] {
        for (n, v) in values.iter().enumerate() {
            t.row(vec![family.to_string(), n.to_string(), num(*v)]);
        }
    }
    t.to_bytes()
}

pub fn read_coefficient_dump(bytes: &[u8]) -> anyhow::Result<FourierCoefficients> {
    let mut r = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(bytes);
    let (mut cos, mut sin) = (BTreeMap::new(), BTreeMap::new());
    for rec in r.records() {
        let rec = rec?;
        let n: usize = rec.get(1).unwrap_or("").parse().context("coefficient index")?;
        let v: f64 = rec.get(2).unwrap_or("").parse().context("coefficient value")?;
        match rec.get(0) {
            Some("cos") => cos.insert(n, v),
            Some("sin") => sin.insert(n, v),
            other => return Err(usage(format!("--coeffs: unknown family {other:?}"))),
        };
    }
    let dense = |m: BTreeMap<usize, f64>| -> anyhow::Result<Vec<f64>> {
        if m.keys().copied().ne(0..m.len()) {
            return Err(usage("--coeffs: indices must run 0..M without gaps"));
        }
        Ok(m.into_values().collect())
    };
    FourierCoefficients::new(dense(cos)?, dense(sin)?).map_err(flag_error)
}

fn box_eval(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let path = p.raw("coeffs");
    if path.is_empty() {
        return Err(usage("--coeffs: a coefficient dump is required"));
    }
    let bytes = std::fs::read(path).map_err(|e| usage(format!("--coeffs: cannot read {path}: {e}")))?;
    let coeffs = read_coefficient_dump(&bytes)?;
    let model = model(p, p.get("beta")?, p.get("v0")?)?;
    let energy = wavefunction::energy(&coeffs, &model)?;
    let objective = BoxObjective::new(model, coeffs.m())?;
    let x = {
        use qhyst_core::annealer::Objective;
        objective.expectation_x(&objective.prepare(&coeffs.to_flat())?.0)
    };
    let mut t = Table::new(&["final_energy", "x_mean"]);
    t.row(vec![num(energy), num(x)]);
    out.write("box_eval.csv", &t.to_bytes()?)
}

fn box_hysteresis(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let seed: u64 = p.get("seed")?;
    let mut exp = experiment(p, p.get("beta")?, seed)?;
    exp.start_side = match p.raw("start-side") {
        "left" => Side::Left,
        "right" => Side::Right,
        other => return Err(usage(format!("--start-side: expected left or right, got `{other}`"))),
    };
    let trace = exp.run(seed, p.flag("mirrored")?)?;
    let summary = extract_thresholds(&trace, p.get("jump-min")?).map_err(flag_error)?;
    let mut t = Table::new(&["step", "v0", "x_mean", "energy", "acceptance", "leg"]);
    for pt in &trace.points {
        t.row(vec![
            pt.step.to_string(),
            num(pt.v0),
            num(pt.x_mean),
            num(pt.energy),
            num(pt.acceptance),
            pt.leg.to_string(),
        ]);
    }
    summary_footer(&mut t, &summary);
    out.write("box_hysteresis.csv", &t.to_bytes()?)?;
    if p.flag("svg")? {
        let pts: Vec<(f64, f64)> = trace.points.iter().map(|q| (q.v0, q.x_mean)).collect();
        out.write("box_hysteresis.svg", svg_polyline(&pts, "V0", "&lt;x&gt;/a", (-0.5, 0.5)).as_bytes())?;
    }
    Ok(())
}

fn run_beta_scan(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let betas: Vec<f64> = p.list("betas")?;
    if betas.is_empty() {
        return Err(usage("--betas: empty list"));
    }
    if let Some(b) = betas.iter().find(|b| !(**b <= 0.0)) {
        return Err(usage(format!("--betas: values must be <= 0, got {b}")));
    }
    let seed: u64 = p.get("seed")?;
    let exp = experiment(p, 0.0, seed)?;
    let entries = beta_scan(&exp, &betas, &[seed], p.get("jump-min")?).map_err(flag_error)?;
    let mut t = Table::new(&["beta", "threshold_up", "threshold_down", "loop_area", "jumped"]);
    let mut failures = Vec::new();
    for e in &entries {
        match &e.summary {
            Ok(s) => t.row(vec![
                num(e.beta),
                opt_num(s.threshold_up),
                opt_num(s.threshold_down),
                num(s.loop_area),
                s.jumped().to_string(),
            ]),
            Err(err) => failures.push(format!("beta {}: {err}", e.beta)),
        }
    }
    for f in &failures {
        t.footer("error", f);
    }
    out.write("beta_scan.csv", &t.to_bytes()?)?;
    if !failures.is_empty() {
        anyhow::bail!("{} of {} scan entries failed: {}", failures.len(), entries.len(), failures.join("; "));
    }
    Ok(())
}

fn calibrate(p: &ParamSet, out: &mut Outputs) -> anyhow::Result<()> {
    let betas: Vec<f64> = p.list("betas")?;
    let seeds: Vec<u64> = p.list("seeds")?;
    let mut prep = schedule(p, 0)?;
    prep.proposal_sigma0 = ProposalWidth::default().sigma0;
    prep.sigma_floor = ProposalWidth::default().floor;
    let scan = BifurcationScan {
        gamma: p.get("gamma")?,
        box_spec: BoxSpec::new(p.get("box-a")?, p.get("n-grid")?).map_err(flag_error)?,
        n_coeffs: n_coeffs(p)?,
        prep,
        probe: cycle(p)?,
        seeds,
        area_floor: p.get("area-floor")?,
    };
    let rec = bifurcation_scan(&scan, &betas).map_err(flag_error)?;
    out.write("calibration.toml", rec.to_toml()?.as_bytes())
}
