//! Two-site nonlinear Hubbard dimer.
//!
//! Mean-field energy of a normalized two-component state `(z1, z2)`:
//!
//! ```text
//! E = eps1 n1 + eps2 n2 + 2 t Re(conj(z1) z2) - U (n1^2 + n2^2),   n_i = |z_i|^2
//! ```
//!
//! With the optimal relative phase the energy depends only on the signed
//! occupation difference `s = n1 - n2`, which is what the closed form, the
//! spinodal scan and the sweep traces report.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::annealer::{self, AnnealSchedule, ChainState, Objective, ProposalWidth, Refinable, Solution};
use crate::error::{Error, Result};
use crate::sweep::{label_legs, Direction};

const NORM_TOL: f64 = 1e-12;

/// Grid size used by [`spinodal_thresholds`] when scanning `E(s)`.
pub const SPINODAL_GRID: usize = 100_001;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerParams {
    pub eps1: f64,
    pub eps2: f64,
    /// Hopping magnitude.
    pub t: f64,
    /// Self-trapping strength.
    pub u: f64,
}

impl DimerParams {
    pub fn new(eps1: f64, eps2: f64, t: f64, u: f64) -> Result<Self> {
        let p = DimerParams { eps1, eps2, t, u };
        p.validate()?;
        Ok(p)
    }

    pub fn symmetric(t: f64, u: f64) -> Result<Self> {
        DimerParams::new(0.0, 0.0, t, u)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("eps1", self.eps1), ("eps2", self.eps2), ("t", self.t), ("u", self.u)] {
            if !v.is_finite() {
                return Err(Error::invalid(name, format!("must be finite, got {v}")));
            }
        }
        if self.t < 0.0 {
            return Err(Error::invalid("t", "hopping is stored as a magnitude (>= 0)"));
        }
        if self.u < 0.0 {
            return Err(Error::invalid("u", "self-trapping strength must be >= 0"));
        }
        Ok(())
    }

    pub fn with_eps2(self, eps2: f64) -> Self {
        DimerParams { eps2, ..self }
    }

    /// Site-exchanged parameters.
    pub fn swapped(self) -> Self {
        DimerParams {
            eps1: self.eps2,
            eps2: self.eps1,
            ..self
        }
    }
}

/// Normalized, gauge-fixed two-site amplitudes: `z1` real and `>= 0`, or
/// `z2` real and `>= 0` when `z1` vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DimerAmplitudes {
    z1: Complex64,
    z2: Complex64,
}

impl DimerAmplitudes {
    /// Accepts amplitudes already normalized to within 1e-12 and removes the
    /// global phase.
    pub fn new(z1: Complex64, z2: Complex64) -> Result<Self> {
        let norm = z1.norm_sqr() + z2.norm_sqr();
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::invalid("amplitudes", format!("|z1|^2 + |z2|^2 = {norm}, expected 1")));
        }
        Ok(Self::gauge_fixed(z1, z2))
    }

    /// Normalizes arbitrary non-zero amplitudes.
    pub fn normalized(z1: Complex64, z2: Complex64) -> Result<Self> {
        let norm = (z1.norm_sqr() + z2.norm_sqr()).sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::invalid("amplitudes", "cannot normalize a zero or non-finite state"));
        }
        Self::new(z1 / norm, z2 / norm)
    }

    /// Reads the `[Re z1, Im z1, Re z2, Im z2]` layout used by the annealer.
    pub fn from_params(p: &[f64]) -> Result<Self> {
        if p.len() != 4 {
            return Err(Error::invalid("parameters", "dimer state has four real components"));
        }
        Self::normalized(Complex64::new(p[0], p[1]), Complex64::new(p[2], p[3]))
    }

    /// Fully localized on one site.
    pub fn localized(site: Site) -> Self {
        match site {
            Site::Donor => DimerAmplitudes {
                z1: Complex64::new(1.0, 0.0),
                z2: Complex64::new(0.0, 0.0),
            },
            Site::Acceptor => DimerAmplitudes {
                z1: Complex64::new(0.0, 0.0),
                z2: Complex64::new(1.0, 0.0),
            },
        }
    }

    fn gauge_fixed(z1: Complex64, z2: Complex64) -> Self {
        let r1 = z1.norm();
        if r1 > 0.0 {
            let phase = z1.conj() / r1;
            DimerAmplitudes {
                z1: Complex64::new(r1, 0.0),
                z2: z2 * phase,
            }
        } else {
            DimerAmplitudes {
                z1: Complex64::new(0.0, 0.0),
                z2: Complex64::new(z2.norm(), 0.0),
            }
        }
    }

    pub fn z1(&self) -> Complex64 {
        self.z1
    }

    pub fn z2(&self) -> Complex64 {
        self.z2
    }

    pub fn n1(&self) -> f64 {
        self.z1.norm_sqr()
    }

    pub fn n2(&self) -> f64 {
        self.z2.norm_sqr()
    }

    /// Signed occupation difference `n1 - n2`.
    pub fn signed_difference(&self) -> f64 {
        self.n1() - self.n2()
    }

    pub fn swapped(&self) -> Self {
        Self::gauge_fixed(self.z2, self.z1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Site {
    Donor,
    Acceptor,
}

impl Site {
    pub fn other(self) -> Self {
        match self {
            Site::Donor => Site::Acceptor,
            Site::Acceptor => Site::Donor,
        }
    }
}

fn energy_raw(p: &DimerParams, z1: Complex64, z2: Complex64) -> f64 {
    let n1 = z1.norm_sqr();
    let n2 = z2.norm_sqr();
    p.eps1 * n1 + p.eps2 * n2 + 2.0 * p.t * (z1.conj() * z2).re - p.u * (n1 * n1 + n2 * n2)
}

/// Mean-field energy of a normalized state.
pub fn dimer_energy(params: &DimerParams, amps: &DimerAmplitudes) -> f64 {
    energy_raw(params, amps.z1, amps.z2)
}

/// Energy at signed occupation difference `s` with the optimal relative
/// phase, `Re(conj(z1) z2) = -sqrt(n1 n2)`.
pub fn energy_at_difference(params: &DimerParams, s: f64) -> f64 {
    let n1 = 0.5 * (1.0 + s);
    let n2 = 0.5 * (1.0 - s);
    params.eps1 * n1 + params.eps2 * n2 - 2.0 * params.t * (n1 * n2).max(0.0).sqrt() - params.u * (n1 * n1 + n2 * n2)
}

/// `S = | |z1|^2 - |z2|^2 |`.
pub fn asymmetry(amps: &DimerAmplitudes) -> f64 {
    amps.signed_difference().abs()
}

/// Ground-state asymmetry of the symmetric dimer: `sqrt(1 - (t/U)^2)` below
/// `t/U = 1`, zero above.
pub fn ground_state_closed_form(params: &DimerParams) -> Result<f64> {
    params.validate()?;
    if params.eps1 != params.eps2 {
        return Err(Error::invalid("eps2", "closed form requires eps1 == eps2"));
    }
    if params.t == 0.0 && params.u == 0.0 {
        return Err(Error::Degenerate("t = U = 0: every state is a ground state".into()));
    }
    if params.u == 0.0 {
        return Ok(0.0);
    }
    let r = params.t / params.u;
    Ok(if r < 1.0 { (1.0 - r * r).sqrt() } else { 0.0 })
}

/// The dimer energy as an annealer objective over `[Re z1, Im z1, Re z2, Im z2]`.
/// The state is normalized inside the energy, so any non-zero vector is valid.
#[derive(Debug, Clone, Copy)]
pub struct DimerObjective {
    pub params: DimerParams,
}

impl DimerObjective {
    pub fn new(params: DimerParams) -> Self {
        DimerObjective { params }
    }

    fn eval(&self, p: &[f64]) -> f64 {
        let norm = p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3];
        if !(norm > 0.0) {
            return f64::NAN;
        }
        let inv = 1.0 / norm.sqrt();
        let z1 = Complex64::new(p[0] * inv, p[1] * inv);
        let z2 = Complex64::new(p[2] * inv, p[3] * inv);
        energy_raw(&self.params, z1, z2)
    }
}

impl Objective for DimerObjective {
    type Cache = ();

    fn dimension(&self) -> usize {
        4
    }

    fn prepare(&self, params: &[f64]) -> Result<((), f64)> {
        Ok(((), self.eval(params)))
    }

    fn trial_energy(&self, _: &(), params: &[f64], index: usize, delta: f64) -> f64 {
        let mut p = [params[0], params[1], params[2], params[3]];
        p[index] += delta;
        self.eval(&p)
    }

    fn commit(&self, _: &mut (), params: &mut [f64], index: usize, delta: f64) {
        params[index] += delta;
    }

    /// Unit norm plus a swap-symmetric gauge: the global phase is rotated
    /// so that `z1 z2` becomes real and non-negative. Without this the free
    /// global phase couples every single-component move to the relative
    /// phase, which freezes the chain on flat directions of `E(s)`.
    fn renormalize(&self, params: &mut [f64]) {
        let z1 = Complex64::new(params[0], params[1]);
        let z2 = Complex64::new(params[2], params[3]);
        let w = (z1 * z2).sqrt();
        let rot = if w.norm() > 0.0 {
            w.conj() / w.norm()
        } else if z1.norm() > 0.0 {
            z1.conj() / z1.norm()
        } else if z2.norm() > 0.0 {
            z2.conj() / z2.norm()
        } else {
            return;
        };
        let norm = (z1.norm_sqr() + z2.norm_sqr()).sqrt();
        let (a, b) = (z1 * rot / norm, z2 * rot / norm);
        params.copy_from_slice(&[a.re, a.im, b.re, b.im]);
    }

    /// Site exchange: component `i` of site 1 maps to component `i` of site 2.
    fn mirror_proposal(&self, index: usize, delta: f64) -> (usize, f64) {
        ((index + 2) % 4, delta)
    }
}

fn site_params(site: Site) -> Vec<f64> {
    match site {
        Site::Donor => vec![1.0, 0.0, 0.0, 0.0],
        Site::Acceptor => vec![0.0, 0.0, 1.0, 0.0],
    }
}

/// Ground state by simulated annealing in `(z1, z2)` space from a random
/// start drawn from the schedule's seed.
pub fn ground_state_numeric(params: &DimerParams, schedule: &AnnealSchedule) -> Result<DimerAmplitudes> {
    params.validate()?;
    schedule.validate()?;
    let objective = DimerObjective::new(*params);
    let mut rng = ChaCha8Rng::seed_from_u64(schedule.seed);
    rng.set_stream(1);
    let mut start: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
    objective.renormalize(&mut start);
    let state = ChainState::new(&objective, start, schedule.proposal(), schedule.seed, 0)?;
    let state = annealer::anneal(&objective, state, schedule)?;
    DimerAmplitudes::from_params(state.params())
}

/// Left-to-right and right-to-left switching values of `eps2`.
///
/// `forward` is where the minimum with the electron on site 1 (`s > 0`)
/// disappears as `eps2` is lowered; `backward` is where the site-2 minimum
/// disappears as `eps2` is raised. Each is located by bisection in `eps2`
/// over a dense scan of `E(s)` with the optimal phase.
pub fn spinodal_thresholds(params: &DimerParams) -> Result<(f64, f64)> {
    params.validate()?;
    if params.u == 0.0 {
        return Ok((params.eps1, params.eps1));
    }
    if params.t >= params.u {
        return Ok((params.eps1, params.eps1));
    }
    let grid: Vec<f64> = (0..SPINODAL_GRID)
        .map(|i| -1.0 + 2.0 * i as f64 / (SPINODAL_GRID - 1) as f64)
        .collect();
    let has_min = |eps2: f64, positive: bool| -> bool {
        let p = params.with_eps2(eps2);
        let e: Vec<f64> = grid.iter().map(|&s| energy_at_difference(&p, s)).collect();
        let n = e.len();
        (0..n).any(|i| {
            let s = grid[i];
            if positive != (s > 0.0) || s == 0.0 {
                return false;
            }
            let left_ok = i == 0 || e[i] < e[i - 1];
            let right_ok = i == n - 1 || e[i] < e[i + 1];
            left_ok && right_ok
        })
    };
    let span = 2.0 * params.u + 1.0;
    // site-1 minimum survives for eps2 above the forward threshold
    let forward = bisect(params.eps1 - span, params.eps1, |e| has_min(e, true));
    // site-2 minimum survives for eps2 below the backward threshold
    let backward = bisect(params.eps1 + span, params.eps1, |e| has_min(e, false));
    Ok((forward, backward))
}

/// Boundary between `bad` (predicate false) and `good` (predicate true).
fn bisect(mut bad: f64, mut good: f64, pred: impl Fn(f64) -> bool) -> f64 {
    for _ in 0..60 {
        let mid = 0.5 * (bad + good);
        if pred(mid) {
            good = mid;
        } else {
            bad = mid;
        }
        if (good - bad).abs() < 1e-9 {
            break;
        }
    }
    0.5 * (bad + good)
}

/// Settings for the adiabatic bias sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerSweepConfig {
    /// Hold temperature between bias steps (> 0).
    pub t0: f64,
    pub sweeps_per_step: usize,
    pub proposal: ProposalWidth,
    /// Anneal used to prepare the localized starting state.
    pub prep: AnnealSchedule,
    pub start_site: Site,
    /// Mirror every proposal through the site exchange.
    pub mirrored: bool,
    pub seed: u64,
}

impl Default for DimerSweepConfig {
    fn default() -> Self {
        DimerSweepConfig {
            t0: 1e-6,
            sweeps_per_step: 200,
            proposal: ProposalWidth {
                sigma0: 0.1,
                floor: 0.01,
            },
            prep: AnnealSchedule::linear(20, 500, 0),
            start_site: Site::Donor,
            mirrored: false,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DimerSweepPoint {
    pub eps2: f64,
    /// Signed occupation difference `n1 - n2`.
    pub s: f64,
    pub energy: f64,
    pub acceptance: f64,
    pub leg: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimerSweepTrace {
    pub params: DimerParams,
    pub points: Vec<DimerSweepPoint>,
}

/// Adiabatic bias sweep: prepare a state localized on `start_site` at the
/// first `eps2` (with a transient pre-bias of `0.01 U` on that site), then
/// at every `eps2` in order hold at `t0` for `sweeps_per_step` sweeps
/// starting from the previous state.
pub fn bias_sweep(params: &DimerParams, eps2_schedule: &[f64], config: &DimerSweepConfig) -> Result<DimerSweepTrace> {
    params.validate()?;
    if eps2_schedule.is_empty() {
        return Err(Error::invalid("eps2_schedule", "empty schedule"));
    }
    if eps2_schedule.iter().any(|e| !e.is_finite()) {
        return Err(Error::invalid("eps2_schedule", "values must be finite"));
    }
    if !(config.t0 > 0.0) {
        return Err(Error::invalid("t0", format!("hold temperature must be > 0, got {}", config.t0)));
    }
    if config.sweeps_per_step == 0 {
        return Err(Error::invalid("sweeps_per_step", "must be at least 1"));
    }

    let first = params.with_eps2(eps2_schedule[0]);
    let bias = 0.01 * params.u;
    let mut biased = first;
    match config.start_site {
        Site::Donor => biased.eps1 -= bias,
        Site::Acceptor => biased.eps2 -= bias,
    }
    let prep_objective = DimerObjective::new(biased);
    let state = ChainState::new(
        &prep_objective,
        site_params(config.start_site),
        config.prep.proposal(),
        config.seed,
        0,
    )?
    .mirrored(config.mirrored);
    let mut state = annealer::anneal(&prep_objective, state, &config.prep)?;
    state.set_proposal(config.proposal);

    let labels = label_legs(eps2_schedule);
    let mut points = Vec::with_capacity(eps2_schedule.len());
    for cp in labels {
        let objective = DimerObjective::new(params.with_eps2(cp.value));
        state.rebind(&objective)?;
        state.reset_counters();
        annealer::hold_in_place(&objective, &mut state, config.t0, config.sweeps_per_step)?;
        let amps = DimerAmplitudes::from_params(state.params())?;
        points.push(DimerSweepPoint {
            eps2: cp.value,
            s: amps.signed_difference(),
            energy: state.energy(),
            acceptance: state.acceptance_rate(),
            leg: cp.leg,
            direction: cp.direction,
        });
    }
    Ok(DimerSweepTrace { params: *params, points })
}

/// Symmetric ground-state problem for the coefficient-doubling check. The
/// dimer has a fixed two-site basis, so both halves of the report agree.
#[derive(Debug, Clone, Copy)]
pub struct DimerProblem {
    pub params: DimerParams,
}

impl Refinable for DimerProblem {
    fn fixed_dimension(&self) -> bool {
        true
    }

    fn solve(&self, _basis_size: usize, schedule: &AnnealSchedule) -> Result<Solution> {
        let amps = ground_state_numeric(&self.params, schedule)?;
        Ok(Solution {
            energy: dimer_energy(&self.params, &amps),
            observable: asymmetry(&amps),
        })
    }
}
