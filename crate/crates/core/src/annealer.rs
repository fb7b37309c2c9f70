//! Metropolis simulated annealing over real parameter vectors.
//!
//! The engine is generic over an [`Objective`], which owns whatever cache it
//! needs to price a single-coordinate proposal cheaply. A chain proposes a
//! Gaussian kick to one uniformly chosen coordinate, with width
//! `max(sigma0 * T, floor)`, and accepts it with probability
//! `min(1, exp(-dE / T))`; at `T = 0` only strictly downhill moves pass.
//!
//! One sweep is one proposal per coordinate. After every sweep the objective
//! may rescale the parameters (both objectives in this crate are invariant
//! under uniform rescaling) and the cache is rebuilt from scratch, which
//! bounds incremental round-off drift.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An energy function over a real parameter vector with incremental pricing.
pub trait Objective: Sync {
    type Cache: Clone + Send;

    fn dimension(&self) -> usize;

    /// Builds the cache for `params` and returns it with the energy.
    fn prepare(&self, params: &[f64]) -> Result<(Self::Cache, f64)>;

    /// Energy after adding `delta` to `params[index]`, without committing.
    fn trial_energy(&self, cache: &Self::Cache, params: &[f64], index: usize, delta: f64) -> f64;

    /// Applies the move to both the parameters and the cache.
    fn commit(&self, cache: &mut Self::Cache, params: &mut [f64], index: usize, delta: f64);

    /// Gauge/scale fix applied between sweeps. Must not change the energy.
    fn renormalize(&self, _params: &mut [f64]) {}

    /// Image of a proposal under the objective's mirror symmetry.
    fn mirror_proposal(&self, index: usize, delta: f64) -> (usize, f64) {
        (index, delta)
    }
}

/// Temperature-dependent proposal width `max(sigma0 * T, floor)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProposalWidth {
    pub sigma0: f64,
    pub floor: f64,
}

impl ProposalWidth {
    pub fn at(&self, temperature: f64) -> f64 {
        (self.sigma0 * temperature).max(self.floor)
    }
}

impl Default for ProposalWidth {
    fn default() -> Self {
        ProposalWidth {
            sigma0: 0.1,
            floor: 1e-3,
        }
    }
}

/// Artificial-temperature ladder plus proposal policy and seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnealSchedule {
    pub temps: Vec<f64>,
    pub cycles_per_temp: usize,
    pub proposal_sigma0: f64,
    pub sigma_floor: f64,
    pub seed: u64,
}

impl Default for AnnealSchedule {
    /// 20 temperatures from 1 down to 0, 10^4 sweeps each.
    fn default() -> Self {
        AnnealSchedule::linear(20, 10_000, 0)
    }
}

impl AnnealSchedule {
    /// `n_temps` equally spaced temperatures from 1 to 0 inclusive.
    pub fn linear(n_temps: usize, cycles_per_temp: usize, seed: u64) -> Self {
        let temps = match n_temps {
            0 => Vec::new(),
            1 => vec![0.0],
            n => (0..n)
                .map(|i| 1.0 - i as f64 / (n - 1) as f64)
                .collect(),
        };
        let width = ProposalWidth::default();
        AnnealSchedule {
            temps,
            cycles_per_temp,
            proposal_sigma0: width.sigma0,
            sigma_floor: width.floor,
            seed,
        }
    }

    /// Geometric ladder from `t_start` to `t_end` (both > 0) with a final
    /// zero-temperature stage appended.
    pub fn geometric(t_start: f64, t_end: f64, n_temps: usize, cycles_per_temp: usize, seed: u64) -> Self {
        let mut schedule = AnnealSchedule::linear(0, cycles_per_temp, seed);
        if n_temps >= 2 {
            let ratio = (t_end / t_start).powf(1.0 / (n_temps - 2).max(1) as f64);
            let mut t = t_start;
            for _ in 0..n_temps - 1 {
                schedule.temps.push(t);
                t *= ratio;
            }
        }
        schedule.temps.push(0.0);
        schedule
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_proposal(mut self, width: ProposalWidth) -> Self {
        self.proposal_sigma0 = width.sigma0;
        self.sigma_floor = width.floor;
        self
    }

    pub fn proposal(&self) -> ProposalWidth {
        ProposalWidth {
            sigma0: self.proposal_sigma0,
            floor: self.sigma_floor,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.temps.is_empty() {
            return Err(Error::invalid("temps", "temperature ladder is empty"));
        }
        if self.cycles_per_temp == 0 {
            return Err(Error::invalid("cycles_per_temp", "must be at least 1"));
        }
        if self.temps.iter().any(|t| !t.is_finite() || *t < 0.0) {
            return Err(Error::invalid("temps", "temperatures must be finite and >= 0"));
        }
        if self.temps.windows(2).any(|w| w[1] > w[0]) {
            return Err(Error::invalid("temps", "ladder must be non-increasing"));
        }
        if !(self.sigma_floor > 0.0) || !(self.proposal_sigma0 >= 0.0) {
            return Err(Error::invalid("proposal", "sigma0 must be >= 0 and sigma_floor > 0"));
        }
        Ok(())
    }

    pub fn total_sweeps(&self) -> usize {
        self.temps.len() * self.cycles_per_temp
    }
}

/// Metropolis acceptance for an energy change `delta_e` at temperature `t`,
/// given a uniform draw `u` in [0, 1).
pub fn metropolis_accept(delta_e: f64, t: f64, u: f64) -> bool {
    if t <= 0.0 {
        delta_e < 0.0
    } else {
        delta_e <= 0.0 || u < (-delta_e / t).exp()
    }
}

/// A single Markov chain: parameters, cached energy, counters and generator.
#[derive(Debug, Clone)]
pub struct ChainState<C> {
    params: Vec<f64>,
    energy: f64,
    cache: C,
    accepted: u64,
    proposed: u64,
    rng: ChaCha8Rng,
    proposal: ProposalWidth,
    mirrored: bool,
}

impl<C: Clone + Send> ChainState<C> {
    /// Starts a chain at `params`. Chains sharing a seed but differing in
    /// `stream` draw from independent generator streams.
    pub fn new<O>(objective: &O, params: Vec<f64>, proposal: ProposalWidth, seed: u64, stream: u64) -> Result<Self>
    where
        O: Objective<Cache = C>,
    {
        if params.len() != objective.dimension() {
            return Err(Error::invalid(
                "parameters",
                format!("expected {} entries, got {}", objective.dimension(), params.len()),
            ));
        }
        let (cache, energy) = objective.prepare(&params)?;
        if !energy.is_finite() {
            return Err(Error::NonFinite {
                step: 0,
                index: 0,
                delta: 0.0,
                value: energy,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(ChainState {
            params,
            energy,
            cache,
            accepted: 0,
            proposed: 0,
            rng,
            proposal,
            mirrored: false,
        })
    }

    /// Maps every proposal through the objective's mirror symmetry. Two
    /// chains with the same seed, one mirrored, visit mirror-image states.
    pub fn mirrored(mut self, mirrored: bool) -> Self {
        self.mirrored = mirrored;
        self
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn energy(&self) -> f64 {
        self.energy
    }

    pub fn cache(&self) -> &C {
        &self.cache
    }

    pub fn accepted(&self) -> u64 {
        self.accepted
    }

    pub fn proposed(&self) -> u64 {
        self.proposed
    }

    pub fn proposal(&self) -> ProposalWidth {
        self.proposal
    }

    pub fn set_proposal(&mut self, proposal: ProposalWidth) {
        self.proposal = proposal;
    }

    pub fn is_mirrored(&self) -> bool {
        self.mirrored
    }

    pub fn acceptance_rate(&self) -> f64 {
        if self.proposed == 0 {
            0.0
        } else {
            self.accepted as f64 / self.proposed as f64
        }
    }

    pub fn reset_counters(&mut self) {
        self.accepted = 0;
        self.proposed = 0;
    }

    /// Re-targets the chain at a new objective (e.g. after a control
    /// parameter changed), keeping parameters, counters and generator.
    pub fn rebind<O>(&mut self, objective: &O) -> Result<()>
    where
        O: Objective<Cache = C>,
    {
        let (cache, energy) = objective.prepare(&self.params)?;
        if !energy.is_finite() {
            return Err(Error::NonFinite {
                step: self.proposed,
                index: 0,
                delta: 0.0,
                value: energy,
            });
        }
        self.cache = cache;
        self.energy = energy;
        Ok(())
    }

    /// One Metropolis proposal at temperature `t`. Returns whether it was
    /// accepted.
    pub fn metropolis_step<O>(&mut self, objective: &O, t: f64) -> Result<bool>
    where
        O: Objective<Cache = C>,
    {
        let dim = self.params.len();
        let sigma = self.proposal.at(t);
        let index = self.rng.random_range(0..dim);
        let z: f64 = self.rng.sample(StandardNormal);
        // drawn unconditionally so mirrored and plain chains stay aligned
        let u: f64 = self.rng.random();
        let (index, delta) = if self.mirrored {
            objective.mirror_proposal(index, sigma * z)
        } else {
            (index, sigma * z)
        };

        self.proposed += 1;
        let trial = objective.trial_energy(&self.cache, &self.params, index, delta);
        if !trial.is_finite() {
            return Err(Error::NonFinite {
                step: self.proposed,
                index,
                delta,
                value: trial,
            });
        }
        if metropolis_accept(trial - self.energy, t, u) {
            objective.commit(&mut self.cache, &mut self.params, index, delta);
            self.energy = trial;
            self.accepted += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }

    /// One proposal per coordinate, then renormalize and rebuild the cache.
    pub fn sweep<O>(&mut self, objective: &O, t: f64) -> Result<()>
    where
        O: Objective<Cache = C>,
    {
        for _ in 0..self.params.len() {
            self.metropolis_step(objective, t)?;
        }
        objective.renormalize(&mut self.params);
        self.rebind(objective)
    }
}

/// Runs `cycles_per_temp` sweeps at each temperature of the ladder in order.
///
/// The chain's own generator is used; `schedule.seed` is consumed by the
/// callers that build the initial state.
pub fn anneal<O: Objective>(
    objective: &O,
    mut state: ChainState<O::Cache>,
    schedule: &AnnealSchedule,
) -> Result<ChainState<O::Cache>> {
    schedule.validate()?;
    state.set_proposal(schedule.proposal());
    for &t in &schedule.temps {
        for _ in 0..schedule.cycles_per_temp {
            state.sweep(objective, t)?;
        }
    }
    Ok(state)
}

/// Runs `sweeps` sweeps at the fixed probe temperature `t0 > 0`.
pub fn hold<O: Objective>(
    objective: &O,
    mut state: ChainState<O::Cache>,
    t0: f64,
    sweeps: usize,
) -> Result<ChainState<O::Cache>> {
    hold_in_place(objective, &mut state, t0, sweeps)?;
    Ok(state)
}

pub(crate) fn hold_in_place<O: Objective>(
    objective: &O,
    state: &mut ChainState<O::Cache>,
    t0: f64,
    sweeps: usize,
) -> Result<()> {
    if !(t0 > 0.0) || !t0.is_finite() {
        return Err(Error::invalid("t0", format!("hold temperature must be > 0, got {t0}")));
    }
    for _ in 0..sweeps {
        state.sweep(objective, t0)?;
    }
    Ok(())
}

/// Wraps a plain closure as an [`Objective`]. Every trial re-evaluates the
/// whole function, so this is meant for small or test problems.
pub struct FnObjective<F> {
    f: F,
    dim: usize,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnObjective { f, dim }
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    type Cache = ();

    fn dimension(&self) -> usize {
        self.dim
    }

    fn prepare(&self, params: &[f64]) -> Result<((), f64)> {
        Ok(((), (self.f)(params)))
    }

    fn trial_energy(&self, _: &(), params: &[f64], index: usize, delta: f64) -> f64 {
        let mut trial = params.to_vec();
        trial[index] += delta;
        (self.f)(&trial)
    }

    fn commit(&self, _: &mut (), params: &mut [f64], index: usize, delta: f64) {
        params[index] += delta;
    }
}

/// Converged energy and observable of one annealed solve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub energy: f64,
    pub observable: f64,
}

/// A problem that can be solved at a chosen basis size.
pub trait Refinable: Sync {
    /// Whether the basis size is fixed (e.g. the two-site dimer); such
    /// problems are solved once and reported as two equal halves.
    fn fixed_dimension(&self) -> bool {
        false
    }

    fn solve(&self, basis_size: usize, schedule: &AnnealSchedule) -> Result<Solution>;
}

/// Outcome of solving the same problem with `m` and `2m` basis functions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub m_small: usize,
    pub m_large: usize,
    pub e_small: f64,
    pub e_large: f64,
    pub observable_small: f64,
    pub observable_large: f64,
    /// `|e_large - e_small| / |e_large|`.
    pub energy_delta: f64,
    /// Observable change as a fraction of its full-scale range (1 for both
    /// `<x>/a` and `S`).
    pub observable_delta: f64,
    /// Larger of the two deltas above.
    pub relative_delta: f64,
}

/// Solves at `m_small` and `2 m_small` with matched seeds (concurrently) and
/// compares the results.
pub fn convergence_check<P: Refinable>(problem: &P, schedule: &AnnealSchedule, m_small: usize) -> Result<ConvergenceReport> {
    if m_small < 4 {
        return Err(Error::invalid("m_small", format!("must be >= 4, got {m_small}")));
    }
    schedule.validate()?;
    let m_large = 2 * m_small;
    let (small, large) = if problem.fixed_dimension() {
        let s = problem.solve(m_small, schedule)?;
        (s, s)
    } else {
        let (a, b) = rayon::join(|| problem.solve(m_small, schedule), || problem.solve(m_large, schedule));
        (a?, b?)
    };
    let energy_delta = (large.energy - small.energy).abs() / large.energy.abs().max(f64::MIN_POSITIVE);
    let observable_delta = (large.observable - small.observable).abs();
    Ok(ConvergenceReport {
        m_small,
        m_large,
        e_small: small.energy,
        e_large: large.energy,
        observable_small: small.observable,
        observable_large: large.observable,
        energy_delta,
        observable_delta,
        relative_delta: energy_delta.max(observable_delta),
    })
}
