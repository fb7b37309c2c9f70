//! Field cycles over the box model, loop analysis and nonlinearity scans.
//!
//! A cycle prepares a localized ground state by annealing under a small
//! transient bias, then steps `V0` through the cycle pattern. At every step
//! the chain is held at the probe temperature `t0` starting from the
//! previous state, and `<x>/a`, the energy and the acceptance rate of the
//! hold are recorded.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::annealer::{self, AnnealSchedule, ChainState, Objective, ProposalWidth, Refinable, Solution};
use crate::dimer::DimerSweepTrace;
use crate::error::{Error, Result};
use crate::sweep::{label_legs, piecewise_linear, Direction};
use crate::wavefunction::{BoxObjective, BoxSpec, EnergyModel, FourierCoefficients};

/// Calibration file shipped with the crate (regenerated by `qhyst calibrate`).
pub const BUNDLED_CALIBRATION: &str = include_str!("../calibration/box.toml");

/// Default jump threshold on `<x>/a` (fraction of its full-scale range).
pub const DEFAULT_JUMP_MIN: f64 = 0.2;

/// Jump threshold on the dimer's signed occupation difference.
pub const DIMER_JUMP_MIN: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    pub fn other(self) -> Self {
        match self {
            Side::Left => Side::Right,
            Side::Right => Side::Left,
        }
    }

    /// Sign of a field that pulls the particle toward this side.
    fn field_sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

/// Field cycle: `V0` follows `pattern * v_max` piecewise linearly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSchedule {
    pub v_max: f64,
    pub steps_per_leg: usize,
    /// Waypoints in units of `v_max`.
    pub pattern: Vec<f64>,
    pub sweeps_per_step: usize,
    pub t0: f64,
    pub proposal: ProposalWidth,
}

impl CycleSchedule {
    /// `0 -> +v_max -> -v_max -> +v_max`, 50 steps per leg, 200 sweeps per
    /// step, `t0 = 0.05`.
    pub fn new(v_max: f64) -> Self {
        CycleSchedule {
            v_max,
            steps_per_leg: 50,
            pattern: vec![0.0, 1.0, -1.0, 1.0],
            sweeps_per_step: 200,
            t0: 0.05,
            proposal: ProposalWidth::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > 0.0) || !self.v_max.is_finite() {
            return Err(Error::invalid("v_max", format!("must be > 0, got {}", self.v_max)));
        }
        if self.steps_per_leg < 2 {
            return Err(Error::invalid("steps_per_leg", format!("must be >= 2, got {}", self.steps_per_leg)));
        }
        if self.sweeps_per_step == 0 {
            return Err(Error::invalid("sweeps_per_step", "must be at least 1"));
        }
        if !(self.t0 > 0.0) || !self.t0.is_finite() {
            return Err(Error::invalid("t0", format!("must be > 0, got {}", self.t0)));
        }
        if self.pattern.len() < 2 {
            return Err(Error::invalid("pattern", "need at least two waypoints"));
        }
        Ok(())
    }

    /// The `V0` value of every step, in order.
    pub fn values(&self) -> Result<Vec<f64>> {
        self.validate()?;
        let waypoints: Vec<f64> = self.pattern.iter().map(|p| p * self.v_max).collect();
        piecewise_linear(&waypoints, self.steps_per_leg)
    }

    /// Same cycle with the pattern negated.
    pub fn negated(&self) -> Self {
        CycleSchedule {
            pattern: self.pattern.iter().map(|p| -p).collect(),
            ..self.clone()
        }
    }

    /// Field change between consecutive steps on the widest leg.
    pub fn step_width(&self) -> f64 {
        self.pattern
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
            * self.v_max
            / self.steps_per_leg as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub step: usize,
    pub v0: f64,
    pub x_mean: f64,
    pub energy: f64,
    pub acceptance: f64,
    pub leg: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTrace {
    pub points: Vec<SweepPoint>,
    pub seed: u64,
    pub model: EnergyModel,
    pub n_coeffs: usize,
    pub mirrored: bool,
}

/// A cycle that stopped early; `partial` holds the steps completed so far.
#[derive(Debug, Clone)]
pub struct CycleAborted {
    pub partial: SweepTrace,
    pub error: Error,
}

impl fmt::Display for CycleAborted {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "cycle aborted after {} steps: {}", self.partial.points.len(), self.error)
    }
}

impl std::error::Error for CycleAborted {}

impl From<CycleAborted> for Error {
    fn from(c: CycleAborted) -> Self {
        c.error
    }
}

/// Anneals a ground state at `v0 + 0.01 v_max` toward `side`, starting from
/// the lowest cosine mode. The transient bias is not part of the returned
/// state; callers continue at `v0`.
pub fn prepare_initial_state(
    model: &EnergyModel,
    n_coeffs: usize,
    v_max: f64,
    side: Side,
    schedule: &AnnealSchedule,
    mirrored: bool,
) -> Result<FourierCoefficients> {
    let bias = 0.01 * v_max * side.field_sign();
    let objective = BoxObjective::new(model.with_v0(model.v0 + bias), n_coeffs)?;
    let start = FourierCoefficients::ground_cosine(n_coeffs).to_flat();
    let state = ChainState::new(&objective, start, schedule.proposal(), schedule.seed, 1)?.mirrored(mirrored);
    let state = annealer::anneal(&objective, state, schedule)?;
    FourierCoefficients::from_flat(state.params())
}

/// Steps the field through `cycle`, holding at `t0` after every step.
pub fn run_cycle(
    model: &EnergyModel,
    coeffs_init: &FourierCoefficients,
    cycle: &CycleSchedule,
    seed: u64,
    mirrored: bool,
) -> std::result::Result<SweepTrace, CycleAborted> {
    let mut trace = SweepTrace {
        points: Vec::new(),
        seed,
        model: *model,
        n_coeffs: coeffs_init.m(),
        mirrored,
    };
    let abort = |trace: &SweepTrace, error| CycleAborted {
        partial: trace.clone(),
        error,
    };
    let values = match cycle.values() {
        Ok(v) => v,
        Err(e) => return Err(abort(&trace, e)),
    };
    let base = match BoxObjective::new(model.with_v0(values[0]), coeffs_init.m()) {
        Ok(o) => o,
        Err(e) => return Err(abort(&trace, e)),
    };
    let mut state = match ChainState::new(&base, coeffs_init.to_flat(), cycle.proposal, seed, 0) {
        Ok(s) => s.mirrored(mirrored),
        Err(e) => return Err(abort(&trace, e)),
    };
    for (step, cp) in label_legs(&values).into_iter().enumerate() {
        let objective = base.at_v0(cp.value);
        let held = state
            .rebind(&objective)
            .and_then(|_| {
                state.reset_counters();
                annealer::hold_in_place(&objective, &mut state, cycle.t0, cycle.sweeps_per_step)
            });
        if let Err(e) = held {
            return Err(abort(&trace, e));
        }
        trace.points.push(SweepPoint {
            step,
            v0: cp.value,
            x_mean: objective.expectation_x(state.cache()),
            energy: state.energy(),
            acceptance: state.acceptance_rate(),
            leg: cp.leg,
            direction: cp.direction,
        });
    }
    Ok(trace)
}

/// Full experiment setup shared by cycles, scans and the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleExperiment {
    pub model: EnergyModel,
    pub n_coeffs: usize,
    pub prep: AnnealSchedule,
    pub cycle: CycleSchedule,
    pub start_side: Side,
}

impl CycleExperiment {
    /// Prepares the starting state at the first `V0` of the cycle and runs
    /// it. `seed` drives both the preparation and the cycle; `mirrored`
    /// runs the parity image (start side swapped, pattern negated,
    /// proposals mirrored).
    pub fn run(&self, seed: u64, mirrored: bool) -> Result<SweepTrace> {
        let (cycle, side) = if mirrored {
            (self.cycle.negated(), self.start_side.other())
        } else {
            (self.cycle.clone(), self.start_side)
        };
        let first = cycle.values()?[0];
        let prep = self.prep.clone().with_seed(seed);
        let init = prepare_initial_state(&self.model.with_v0(first), self.n_coeffs, cycle.v_max, side, &prep, mirrored)?;
        Ok(run_cycle(&self.model, &init, &cycle, seed, mirrored)?)
    }

    pub fn with_beta(&self, beta: f64) -> Self {
        CycleExperiment {
            model: self.model.with_beta(beta),
            ..self.clone()
        }
    }
}

/// Control value, observable and leg label of one trace point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LoopPoint {
    pub control: f64,
    pub observable: f64,
    pub leg: usize,
    pub direction: Direction,
}

/// Anything that can be read as a hysteresis loop.
pub trait LoopTrace {
    fn loop_points(&self) -> Vec<LoopPoint>;
}

impl LoopTrace for SweepTrace {
    fn loop_points(&self) -> Vec<LoopPoint> {
        self.points
            .iter()
            .map(|p| LoopPoint {
                control: p.v0,
                observable: p.x_mean,
                leg: p.leg,
                direction: p.direction,
            })
            .collect()
    }
}

impl LoopTrace for DimerSweepTrace {
    fn loop_points(&self) -> Vec<LoopPoint> {
        self.points
            .iter()
            .map(|p| LoopPoint {
                control: p.eps2,
                observable: p.s,
                leg: p.leg,
                direction: p.direction,
            })
            .collect()
    }
}

impl LoopTrace for [LoopPoint] {
    fn loop_points(&self) -> Vec<LoopPoint> {
        self.to_vec()
    }
}

impl LoopTrace for Vec<LoopPoint> {
    fn loop_points(&self) -> Vec<LoopPoint> {
        self.clone()
    }
}

/// Switching fields and loop area of the last complete up/down legs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LoopSummary {
    /// Switching field on the rising branch.
    pub threshold_up: Option<f64>,
    /// Switching field on the falling branch.
    pub threshold_down: Option<f64>,
    /// `int (x_down - x_up) dV` over the range both branches cover.
    pub loop_area: f64,
    pub jumped_up: bool,
    pub jumped_down: bool,
    /// More than one separate jump on the branch; its threshold is left unset.
    pub ambiguous_up: bool,
    pub ambiguous_down: bool,
}

impl LoopSummary {
    pub fn jumped(&self) -> bool {
        self.jumped_up || self.jumped_down
    }

    /// `threshold_up - threshold_down` when both branches switched cleanly,
    /// zero otherwise.
    pub fn coercive_width(&self) -> f64 {
        match (self.threshold_up, self.threshold_down) {
            (Some(up), Some(down)) => up - down,
            _ => 0.0,
        }
    }
}

struct Branch {
    threshold: Option<f64>,
    jumped: bool,
    ambiguous: bool,
    /// (control, observable) including the turnaround point before the leg.
    curve: Vec<(f64, f64)>,
}

fn analyse_leg(points: &[LoopPoint], leg: usize, jump_min: f64) -> Branch {
    let start = points.iter().position(|p| p.leg == leg).unwrap_or(points.len());
    let end = points.iter().rposition(|p| p.leg == leg).map_or(start, |i| i + 1);
    let from = start.saturating_sub(1);
    let seg = &points[from..end];

    // consecutive jump steps of the same sign form one event
    let mut events: Vec<(usize, usize)> = Vec::new();
    let mut last_sign = 0.0;
    for i in 1..seg.len() {
        let d = seg[i].observable - seg[i - 1].observable;
        if d.abs() > jump_min {
            match events.last_mut() {
                Some(ev) if ev.1 == i - 1 && d.signum() == last_sign => ev.1 = i,
                _ => events.push((i - 1, i)),
            }
            last_sign = d.signum();
        }
    }
    let threshold = match events.as_slice() {
        [(a, b)] => Some(0.5 * (seg[*a].control + seg[*b].control)),
        _ => None,
    };
    Branch {
        threshold,
        jumped: !events.is_empty(),
        ambiguous: events.len() > 1,
        curve: seg.iter().map(|p| (p.control, p.observable)).collect(),
    }
}

fn integrate(curve: &[(f64, f64)], lo: f64, hi: f64) -> f64 {
    let mut pts = curve.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    let interp = |x: f64| -> f64 {
        let i = pts.partition_point(|p| p.0 < x);
        if i == 0 {
            return pts[0].1;
        }
        if i >= pts.len() {
            return pts[pts.len() - 1].1;
        }
        let (x0, y0) = pts[i - 1];
        let (x1, y1) = pts[i];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    };
    let mut xs: Vec<f64> = vec![lo];
    xs.extend(pts.iter().map(|p| p.0).filter(|&x| x > lo && x < hi));
    xs.push(hi);
    xs.windows(2)
        .map(|w| 0.5 * (w[1] - w[0]) * (interp(w[0]) + interp(w[1])))
        .sum()
}

/// Locates jumps (`|d observable| > jump_min` between consecutive steps) on
/// the last rising and last falling legs and integrates the loop between
/// them. A run of consecutive jump steps counts as one jump whose threshold
/// is the midpoint of the control values bracketing the run.
pub fn extract_thresholds<T: LoopTrace + ?Sized>(trace: &T, jump_min: f64) -> Result<LoopSummary> {
    let points = trace.loop_points();
    if points.is_empty() {
        return Err(Error::invalid("trace", "empty trace"));
    }
    if !(jump_min > 0.0) {
        return Err(Error::invalid("jump_min", "must be > 0"));
    }
    let last_leg = |dir| points.iter().filter(|p| p.direction == dir).map(|p| p.leg).max();
    let up = last_leg(Direction::Up).map(|l| analyse_leg(&points, l, jump_min));
    let down = last_leg(Direction::Down).map(|l| analyse_leg(&points, l, jump_min));

    let loop_area = match (&up, &down) {
        (Some(u), Some(d)) if u.curve.len() > 1 && d.curve.len() > 1 => {
            let range = |c: &[(f64, f64)]| {
                c.iter()
                    .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.0), hi.max(p.0)))
            };
            let (ul, uh) = range(&u.curve);
            let (dl, dh) = range(&d.curve);
            let (lo, hi) = (ul.max(dl), uh.min(dh));
            if hi > lo {
                integrate(&d.curve, lo, hi) - integrate(&u.curve, lo, hi)
            } else {
                0.0
            }
        }
        _ => 0.0,
    };
    let unpack = |b: &Option<Branch>| b.as_ref().map_or((None, false, false), |b| (b.threshold, b.jumped, b.ambiguous));
    let (threshold_up, jumped_up, ambiguous_up) = unpack(&up);
    let (threshold_down, jumped_down, ambiguous_down) = unpack(&down);
    Ok(LoopSummary {
        threshold_up,
        threshold_down,
        loop_area,
        jumped_up,
        jumped_down,
        ambiguous_up,
        ambiguous_down,
    })
}

/// One row of a nonlinearity scan.
#[derive(Debug, Clone, PartialEq)]
pub struct BetaScanEntry {
    pub beta: f64,
    pub seed: u64,
    pub summary: Result<LoopSummary>,
}

/// Runs the same cycle for every `beta` (and every seed), in parallel,
/// returning entries in input order (beta-major). Failures are kept per
/// entry.
pub fn beta_scan(experiment: &CycleExperiment, betas: &[f64], seeds: &[u64], jump_min: f64) -> Result<Vec<BetaScanEntry>> {
    if betas.is_empty() {
        return Err(Error::invalid("betas", "empty beta list"));
    }
    if let Some(b) = betas.iter().find(|b| !(**b <= 0.0)) {
        return Err(Error::invalid("betas", format!("all betas must be <= 0, got {b}")));
    }
    if seeds.is_empty() {
        return Err(Error::invalid("seeds", "need at least one seed"));
    }
    experiment.cycle.validate()?;
    let jobs: Vec<(f64, u64)> = betas.iter().flat_map(|&b| seeds.iter().map(move |&s| (b, s))).collect();
    Ok(jobs
        .par_iter()
        .map(|&(beta, seed)| BetaScanEntry {
            beta,
            seed,
            summary: experiment
                .with_beta(beta)
                .run(seed, false)
                .and_then(|trace| extract_thresholds(&trace, jump_min)),
        })
        .collect())
}

/// Localization and probe-loop measurements at one nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BifurcationPoint {
    pub beta: f64,
    /// Mean `|<x>/a|` of ground states annealed at `V0 = 0` from random
    /// starts.
    pub order_parameter: f64,
    /// Mean loop area of the probe cycle.
    pub probe_area: f64,
    /// Mean coercive width of the probe cycle.
    pub probe_width: f64,
}

/// Versioned calibration of the bistable working point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub version: u32,
    pub gamma: f64,
    pub box_a: f64,
    pub n_grid: usize,
    pub n_coeffs: usize,
    pub area_floor: f64,
    pub seeds: Vec<u64>,
    /// Weakest scanned beta whose probe loop area exceeds the floor.
    pub strong_beta: Option<f64>,
    pub prep: AnnealSchedule,
    pub probe: CycleSchedule,
    pub points: Vec<BifurcationPoint>,
}

impl CalibrationRecord {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::invalid("calibration", e.to_string()))
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::invalid("calibration", e.to_string()))
    }

    pub fn bundled() -> Result<Self> {
        Self::from_toml(BUNDLED_CALIBRATION)
    }

    /// The probe cycle of this record at nonlinearity `beta`.
    pub fn experiment(&self, beta: f64) -> Result<CycleExperiment> {
        let box_spec = BoxSpec::new(self.box_a, self.n_grid)?;
        Ok(CycleExperiment {
            model: EnergyModel::new(self.gamma, beta, 0.0, box_spec)?,
            n_coeffs: self.n_coeffs,
            prep: self.prep.clone(),
            cycle: self.probe.clone(),
            start_side: Side::Left,
        })
    }

    pub fn strong_beta(&self) -> Result<f64> {
        self.strong_beta
            .ok_or_else(|| Error::NotFound("no scanned beta produced a loop above the area floor".into()))
    }
}

/// Settings for [`bifurcation_scan`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BifurcationScan {
    pub gamma: f64,
    pub box_spec: BoxSpec,
    pub n_coeffs: usize,
    pub prep: AnnealSchedule,
    pub probe: CycleSchedule,
    pub seeds: Vec<u64>,
    pub area_floor: f64,
}

/// Scans `beta_range` (ordered toward stronger nonlinearity). For each
/// beta it anneals at `V0 = 0` from random starts to measure localization,
/// and runs the probe cycle to measure the loop area. The first beta whose
/// mean area exceeds `area_floor` is recorded as the calibrated strong beta.
pub fn bifurcation_scan(scan: &BifurcationScan, beta_range: &[f64]) -> Result<CalibrationRecord> {
    if beta_range.is_empty() {
        return Err(Error::invalid("betas", "empty beta range"));
    }
    if beta_range.iter().any(|b| !(*b <= 0.0)) {
        return Err(Error::invalid("betas", "all betas must be <= 0"));
    }
    if beta_range.windows(2).any(|w| w[1] > w[0]) {
        return Err(Error::invalid("betas", "range must be ordered toward stronger nonlinearity"));
    }
    if scan.seeds.is_empty() {
        return Err(Error::invalid("seeds", "need at least one seed"));
    }
    scan.probe.validate()?;
    scan.prep.validate()?;
    let base = EnergyModel::new(scan.gamma, 0.0, 0.0, scan.box_spec)?;
    let experiment = CycleExperiment {
        model: base,
        n_coeffs: scan.n_coeffs,
        prep: scan.prep.clone(),
        cycle: scan.probe.clone(),
        start_side: Side::Left,
    };
    let jobs: Vec<(f64, u64)> = beta_range
        .iter()
        .flat_map(|&b| scan.seeds.iter().map(move |&s| (b, s)))
        .collect();
    let results: Vec<Result<(f64, f64, f64)>> = jobs
        .par_iter()
        .map(|&(beta, seed)| {
            let model = base.with_beta(beta);
            let order = random_start_ground_state(&model, scan.n_coeffs, &scan.prep.clone().with_seed(seed))?
                .observable
                .abs();
            let trace = experiment.with_beta(beta).run(seed, false)?;
            let summary = extract_thresholds(&trace, DEFAULT_JUMP_MIN)?;
            Ok((order, summary.loop_area, summary.coercive_width()))
        })
        .collect();
    let mut points = Vec::with_capacity(beta_range.len());
    let per = scan.seeds.len() as f64;
    for (i, &beta) in beta_range.iter().enumerate() {
        let chunk = &results[i * scan.seeds.len()..(i + 1) * scan.seeds.len()];
        let mut acc = (0.0, 0.0, 0.0);
        for r in chunk {
            let (o, a, w) = r.clone()?;
            acc = (acc.0 + o, acc.1 + a, acc.2 + w);
        }
        points.push(BifurcationPoint {
            beta,
            order_parameter: acc.0 / per,
            probe_area: acc.1 / per,
            probe_width: acc.2 / per,
        });
    }
    let strong_beta = points.iter().find(|p| p.probe_area > scan.area_floor).map(|p| p.beta);
    Ok(CalibrationRecord {
        version: 1,
        gamma: scan.gamma,
        box_a: scan.box_spec.a,
        n_grid: scan.box_spec.n_grid,
        n_coeffs: scan.n_coeffs,
        area_floor: scan.area_floor,
        seeds: scan.seeds.clone(),
        strong_beta,
        prep: scan.prep.clone(),
        probe: scan.probe.clone(),
        points,
    })
}

/// Anneals from random coefficients drawn from the schedule's seed.
pub fn random_start_ground_state(model: &EnergyModel, n_coeffs: usize, schedule: &AnnealSchedule) -> Result<Solution> {
    let objective = BoxObjective::new(*model, n_coeffs)?;
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(2);
    let mut start: Vec<f64> = (0..2 * n_coeffs).map(|_| rng.random_range(-1.0..1.0)).collect();
    objective.renormalize(&mut start);
    let state = ChainState::new(&objective, start, schedule.proposal(), schedule.seed, 3)?;
    let state = annealer::anneal(&objective, state, schedule)?;
    Ok(Solution {
        energy: state.energy(),
        observable: objective.expectation_x(state.cache()),
    })
}

/// Annealed box ground state for the coefficient-doubling check. The
/// annealer starts from the lowest cosine mode, so matched seeds at
/// different basis sizes start from the same function.
#[derive(Debug, Clone, Copy)]
pub struct BoxProblem {
    pub model: EnergyModel,
}

impl BoxProblem {
    pub fn anneal(&self, n_coeffs: usize, schedule: &AnnealSchedule) -> Result<(FourierCoefficients, Solution)> {
        let objective = BoxObjective::new(self.model, n_coeffs)?;
        let start = FourierCoefficients::ground_cosine(n_coeffs).to_flat();
        let state = ChainState::new(&objective, start, schedule.proposal(), schedule.seed, 0)?;
        let state = annealer::anneal(&objective, state, schedule)?;
        let solution = Solution {
            energy: state.energy(),
            observable: objective.expectation_x(state.cache()),
        };
        Ok((FourierCoefficients::from_flat(state.params())?, solution))
    }
}

impl Refinable for BoxProblem {
    fn solve(&self, basis_size: usize, schedule: &AnnealSchedule) -> Result<Solution> {
        Ok(self.anneal(basis_size, schedule)?.1)
    }
}
