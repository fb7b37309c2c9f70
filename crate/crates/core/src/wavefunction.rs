//! Fourier representation of the box wavefunction and the energy functional
//! of the nonlinear Schrödinger particle in a box.
//!
//! ```text
//! psi(x) = sqrt((2/a) / sum(a_n^2 + b_n^2)) * sum[a_n cos(kc_n x) + b_n sin(ks_n x)]
//! kc_n = (2 pi / a)(n + 1/2),   ks_n = (2 pi / a)(n + 1),   x in [-a/2, a/2]
//!
//! E[psi] = |gamma| int psi'^2 + (beta/2) int psi^4 + int V psi^2,   V(x) = -2 V0 x / a
//! ```
//!
//! Every basis function vanishes at both walls and the family is orthogonal
//! with norm `a/2`, so the prefactor normalizes exactly and the kinetic term
//! has the closed form `sum(c^2 k^2) / sum(c^2)`. The quartic and potential
//! terms use the composite trapezoid rule on a uniform grid.
//!
//! Grid tables are built mirror-exact (`x[n-1-i] == -x[i]`, cosine columns
//! even, sine columns odd) and all quadratures pair `i` with `n-1-i`, so a
//! parity-mirrored state in a mirrored field gives bit-identical energies.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::annealer::Objective;
use crate::error::{Error, Result};

/// Default quadrature size.
pub const DEFAULT_N_GRID: usize = 512;
/// Default coefficient count per family (cosine and sine).
pub const DEFAULT_M: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSpec {
    /// Box length; the box spans `[-a/2, a/2]`.
    pub a: f64,
    /// Quadrature nodes including both walls (power of two, >= 64).
    pub n_grid: usize,
}

impl BoxSpec {
    pub fn new(a: f64, n_grid: usize) -> Result<Self> {
        let b = BoxSpec { a, n_grid };
        b.validate()?;
        Ok(b)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::invalid("box_a", format!("box length must be > 0, got {}", self.a)));
        }
        if self.n_grid < 64 || !self.n_grid.is_power_of_two() {
            return Err(Error::invalid(
                "n_grid",
                format!("must be a power of two >= 64, got {}", self.n_grid),
            ));
        }
        Ok(())
    }

    pub fn half(&self) -> f64 {
        0.5 * self.a
    }

    pub fn spacing(&self) -> f64 {
        self.a / (self.n_grid - 1) as f64
    }

    /// Uniform nodes from `-a/2` to `a/2`, mirror-exact.
    pub fn nodes(&self) -> Vec<f64> {
        let n = self.n_grid;
        let h = self.spacing();
        let mut x = vec![0.0; n];
        for i in 0..n / 2 {
            let xi = -self.half() + i as f64 * h;
            x[i] = xi;
            x[n - 1 - i] = -xi;
        }
        x
    }

    /// Trapezoid weights.
    pub fn weights(&self) -> Vec<f64> {
        let h = self.spacing();
        let mut w = vec![h; self.n_grid];
        w[0] = 0.5 * h;
        w[self.n_grid - 1] = 0.5 * h;
        w
    }

    /// `sum_i f(i)` accumulated in mirror pairs `(i, n-1-i)`.
    pub(crate) fn pair_sum(&self, f: impl Fn(usize) -> f64) -> f64 {
        let n = self.n_grid;
        (0..n / 2).map(|i| f(i) + f(n - 1 - i)).sum()
    }
}

impl Default for BoxSpec {
    fn default() -> Self {
        BoxSpec {
            a: 0.5,
            n_grid: DEFAULT_N_GRID,
        }
    }
}

/// Parameters of the energy functional.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyModel {
    /// Kinetic coefficient, < 0.
    pub gamma: f64,
    /// Nonlinear coefficient, <= 0 (self-trapping sign).
    pub beta: f64,
    /// Field amplitude; positive values pull the particle toward `+a/2`.
    pub v0: f64,
    pub box_spec: BoxSpec,
}

impl EnergyModel {
    pub fn new(gamma: f64, beta: f64, v0: f64, box_spec: BoxSpec) -> Result<Self> {
        let m = EnergyModel {
            gamma,
            beta,
            v0,
            box_spec,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        self.box_spec.validate()?;
        if !(self.gamma < 0.0) || !self.gamma.is_finite() {
            return Err(Error::invalid("gamma", format!("must be < 0, got {}", self.gamma)));
        }
        if !(self.beta <= 0.0) || !self.beta.is_finite() {
            return Err(Error::invalid("beta", format!("must be <= 0, got {}", self.beta)));
        }
        if !self.v0.is_finite() {
            return Err(Error::invalid("v0", "must be finite"));
        }
        Ok(())
    }

    pub fn with_v0(self, v0: f64) -> Self {
        EnergyModel { v0, ..self }
    }

    pub fn with_beta(self, beta: f64) -> Self {
        EnergyModel { beta, ..self }
    }
}

/// Cosine (`a_n`) and sine (`b_n`) coefficients, `M` of each.
///
/// Flat index `j < M` addresses `a_j`; `j >= M` addresses `b_{j-M}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FourierCoefficients {
    cos: Vec<f64>,
    sin: Vec<f64>,
}

impl FourierCoefficients {
    pub fn new(cos: Vec<f64>, sin: Vec<f64>) -> Result<Self> {
        if cos.is_empty() || cos.len() != sin.len() {
            return Err(Error::invalid(
                "coefficients",
                format!("need equal non-empty families, got {} cosine / {} sine", cos.len(), sin.len()),
            ));
        }
        if cos.iter().chain(&sin).any(|c| !c.is_finite()) {
            return Err(Error::invalid("coefficients", "must be finite"));
        }
        if cos.iter().chain(&sin).all(|&c| c == 0.0) {
            return Err(Error::invalid("coefficients", "all coefficients are zero"));
        }
        Ok(FourierCoefficients { cos, sin })
    }

    /// Builds from the flat `[a_0..a_{M-1}, b_0..b_{M-1}]` layout.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if flat.len() % 2 != 0 {
            return Err(Error::invalid("coefficients", "flat layout must have even length"));
        }
        let m = flat.len() / 2;
        Self::new(flat[..m].to_vec(), flat[m..].to_vec())
    }

    /// Only `a_0 = 1`: the lowest even mode.
    pub fn ground_cosine(m: usize) -> Self {
        let mut cos = vec![0.0; m.max(1)];
        cos[0] = 1.0;
        FourierCoefficients {
            sin: vec![0.0; cos.len()],
            cos,
        }
    }

    pub fn m(&self) -> usize {
        self.cos.len()
    }

    pub fn cos(&self) -> &[f64] {
        &self.cos
    }

    pub fn sin(&self) -> &[f64] {
        &self.sin
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.cos.iter().chain(&self.sin).copied().collect()
    }

    pub fn get(&self, index: usize) -> f64 {
        if index < self.m() {
            self.cos[index]
        } else {
            self.sin[index - self.m()]
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.cos.iter().chain(&self.sin).map(|c| c * c).sum()
    }

    /// Parity image `x -> -x`: sine coefficients change sign.
    pub fn mirrored(&self) -> Self {
        FourierCoefficients {
            cos: self.cos.clone(),
            sin: self.sin.iter().map(|b| -b).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::new(
            self.cos.iter().map(|c| c * factor).collect(),
            self.sin.iter().map(|c| c * factor).collect(),
        )
    }

    /// Zero-pads (or truncates) each family to `m` coefficients.
    pub fn resized(&self, m: usize) -> Result<Self> {
        let fit = |v: &[f64]| {
            let mut out = v[..v.len().min(m)].to_vec();
            out.resize(m, 0.0);
            out
        };
        Self::new(fit(&self.cos), fit(&self.sin))
    }
}

/// Wavenumber of flat basis index `j` for `m` coefficients per family.
pub fn wavenumber(a: f64, m: usize, j: usize) -> f64 {
    let unit = 2.0 * PI / a;
    if j < m {
        unit * (j as f64 + 0.5)
    } else {
        unit * ((j - m) as f64 + 1.0)
    }
}

fn basis_value(a: f64, m: usize, j: usize, x: f64) -> f64 {
    let k = wavenumber(a, m, j);
    if j < m {
        (k * x).cos()
    } else {
        (k * x).sin()
    }
}

/// Grid column of basis function `j`, exactly zero at the walls.
pub fn basis_column(box_spec: &BoxSpec, m: usize, j: usize) -> Vec<f64> {
    let n = box_spec.n_grid;
    let x = box_spec.nodes();
    let odd = j >= m;
    let mut col = vec![0.0; n];
    for i in 1..n / 2 {
        let v = basis_value(box_spec.a, m, j, x[i]);
        col[i] = v;
        col[n - 1 - i] = if odd { -v } else { v };
    }
    col
}

/// Normalized series value at `x`.
pub fn evaluate(coeffs: &FourierCoefficients, box_spec: &BoxSpec, x: f64) -> Result<f64> {
    let half = box_spec.half();
    if !(x.abs() <= half) {
        return Err(Error::Domain { x, half });
    }
    let m = coeffs.m();
    let raw: f64 = (0..2 * m).map(|j| coeffs.get(j) * basis_value(box_spec.a, m, j, x)).sum();
    Ok(raw * ((2.0 / box_spec.a) / coeffs.norm_sqr()).sqrt())
}

/// Precomputed grid tables for `m` coefficients per family.
#[derive(Debug, Clone)]
pub struct Basis {
    box_spec: BoxSpec,
    m: usize,
    x: Vec<f64>,
    weights: Vec<f64>,
    /// `2m` columns of length `n_grid`, column-major.
    table: Vec<f64>,
    k2: Vec<f64>,
}

impl Basis {
    pub fn new(box_spec: BoxSpec, m: usize) -> Result<Self> {
        box_spec.validate()?;
        if m == 0 {
            return Err(Error::invalid("n_coeffs", "need at least one coefficient per family"));
        }
        let table = (0..2 * m).flat_map(|j| basis_column(&box_spec, m, j)).collect();
        let k2 = (0..2 * m)
            .map(|j| wavenumber(box_spec.a, m, j).powi(2))
            .collect();
        Ok(Basis {
            box_spec,
            m,
            x: box_spec.nodes(),
            weights: box_spec.weights(),
            table,
            k2,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn box_spec(&self) -> &BoxSpec {
        &self.box_spec
    }

    pub fn nodes(&self) -> &[f64] {
        &self.x
    }

    pub fn column(&self, j: usize) -> &[f64] {
        let n = self.box_spec.n_grid;
        &self.table[j * n..(j + 1) * n]
    }

    fn check(&self, coeffs: &FourierCoefficients) -> Result<()> {
        if coeffs.m() != self.m {
            return Err(Error::invalid(
                "coefficients",
                format!("basis has {} per family, coefficients have {}", self.m, coeffs.m()),
            ));
        }
        Ok(())
    }

    fn raw_field(&self, flat: &[f64]) -> Vec<f64> {
        let mut raw = vec![0.0; self.box_spec.n_grid];
        for (j, &c) in flat.iter().enumerate() {
            for (r, &b) in raw.iter_mut().zip(self.column(j)) {
                *r += c * b;
            }
        }
        raw
    }

    pub fn to_grid(&self, coeffs: &FourierCoefficients) -> Result<GridField> {
        self.check(coeffs)?;
        let norm = coeffs.norm_sqr();
        if !(norm > 0.0) {
            return Err(Error::invalid("coefficients", "all coefficients are zero"));
        }
        Ok(GridField::from_raw(self.raw_field(&coeffs.to_flat()), norm, self.box_spec.a))
    }

    /// Closed-form `sum(c^2 k^2)` for the flat coefficients.
    fn kinetic_numerator(&self, flat: &[f64]) -> f64 {
        flat.iter().zip(&self.k2).map(|(c, k2)| c * c * k2).sum()
    }
}

/// The wavefunction sampled on the quadrature grid.
///
/// Stores the un-normalized series sum and `sum(a_n^2 + b_n^2)`, so a
/// single-coefficient update is one axpy over the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    raw: Vec<f64>,
    norm_accum: f64,
    scale: f64,
}

impl GridField {
    fn from_raw(raw: Vec<f64>, norm_accum: f64, a: f64) -> Self {
        GridField {
            raw,
            norm_accum,
            scale: ((2.0 / a) / norm_accum).sqrt(),
        }
    }

    /// Normalized `psi` at the grid nodes.
    pub fn values(&self) -> Vec<f64> {
        self.raw.iter().map(|r| r * self.scale).collect()
    }

    pub fn value(&self, i: usize) -> f64 {
        self.raw[i] * self.scale
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    pub fn norm_accum(&self) -> f64 {
        self.norm_accum
    }

    /// Trapezoidal `int psi^2 dx`.
    pub fn norm_integral(&self, box_spec: &BoxSpec) -> f64 {
        let w = box_spec.weights();
        let s2 = self.scale * self.scale;
        box_spec.pair_sum(|i| w[i] * self.raw[i] * self.raw[i]) * s2
    }
}

/// Samples the normalized wavefunction on the box grid.
pub fn to_grid(coeffs: &FourierCoefficients, box_spec: &BoxSpec) -> Result<GridField> {
    Basis::new(*box_spec, coeffs.m())?.to_grid(coeffs)
}

/// `<x>/a` by trapezoidal quadrature.
pub fn expectation_x(field: &GridField, box_spec: &BoxSpec) -> f64 {
    let x = box_spec.nodes();
    let w = box_spec.weights();
    let s2 = field.scale * field.scale;
    box_spec.pair_sum(|i| w[i] * x[i] * field.raw[i] * field.raw[i]) * s2 / box_spec.a
}

/// Energy of the state described by `coeffs` under `model`.
pub fn energy(coeffs: &FourierCoefficients, model: &EnergyModel) -> Result<f64> {
    model.validate()?;
    let objective = BoxObjective::new(*model, coeffs.m())?;
    Ok(objective.prepare(&coeffs.to_flat())?.1)
}

/// Adds `delta` to basis coefficient `index` and updates the grid in
/// O(n_grid).
pub fn apply_coefficient_delta(
    field: &GridField,
    coeffs: &FourierCoefficients,
    box_spec: &BoxSpec,
    index: usize,
    delta: f64,
) -> Result<(GridField, FourierCoefficients)> {
    let m = coeffs.m();
    if index >= 2 * m {
        return Err(Error::invalid("index", format!("basis index {index} out of range 0..{}", 2 * m)));
    }
    if field.len() != box_spec.n_grid {
        return Err(Error::invalid("field", "grid size does not match box"));
    }
    if delta == 0.0 {
        return Ok((field.clone(), coeffs.clone()));
    }
    let mut flat = coeffs.to_flat();
    let old = flat[index];
    flat[index] += delta;
    let updated = FourierCoefficients::from_flat(&flat)?;
    let col = basis_column(box_spec, m, index);
    let raw: Vec<f64> = field.raw.iter().zip(&col).map(|(r, b)| r + delta * b).collect();
    let norm = field.norm_accum + delta * (2.0 * old + delta);
    Ok((GridField::from_raw(raw, norm, box_spec.a), updated))
}

/// Energy functional as an annealer objective over the flat coefficients.
#[derive(Debug, Clone)]
pub struct BoxObjective {
    model: EnergyModel,
    basis: Arc<Basis>,
    potential: Vec<f64>,
}

/// Incremental state for [`BoxObjective`].
#[derive(Debug, Clone)]
pub struct BoxCache {
    raw: Vec<f64>,
    norm: f64,
    kinetic: f64,
}

impl BoxCache {
    pub fn field(&self, a: f64) -> GridField {
        GridField::from_raw(self.raw.clone(), self.norm, a)
    }
}

impl BoxObjective {
    pub fn new(model: EnergyModel, m: usize) -> Result<Self> {
        model.validate()?;
        let basis = Arc::new(Basis::new(model.box_spec, m)?);
        Ok(Self::with_basis(model, basis))
    }

    /// Shares an existing basis table (its box must match the model's).
    pub fn with_basis(model: EnergyModel, basis: Arc<Basis>) -> Self {
        let a = model.box_spec.a;
        let potential = basis.x.iter().map(|&x| (-2.0 * model.v0 * x) / a).collect();
        BoxObjective {
            model,
            basis,
            potential,
        }
    }

    /// Same basis, different field amplitude.
    pub fn at_v0(&self, v0: f64) -> Self {
        Self::with_basis(self.model.with_v0(v0), Arc::clone(&self.basis))
    }

    pub fn model(&self) -> &EnergyModel {
        &self.model
    }

    pub fn basis(&self) -> &Arc<Basis> {
        &self.basis
    }

    pub fn m(&self) -> usize {
        self.basis.m
    }

    fn total(&self, kinetic: f64, norm: f64, quartic: f64, potential: f64) -> f64 {
        let a = self.model.box_spec.a;
        let p = (2.0 / a) / norm;
        -self.model.gamma * kinetic / norm + 0.5 * self.model.beta * p * p * quartic + p * potential
    }

    fn integrals(&self, raw: &[f64]) -> (f64, f64) {
        let w = &self.basis.weights;
        let v = &self.potential;
        let n = raw.len();
        let mut quartic = 0.0;
        let mut pot = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let (ri, rj) = (raw[i] * raw[i], raw[j] * raw[j]);
            quartic += w[i] * ri * ri + w[j] * rj * rj;
            pot += w[i] * v[i] * ri + w[j] * v[j] * rj;
        }
        (quartic, pot)
    }

    /// `<x>/a` of a cached state.
    pub fn expectation_x(&self, cache: &BoxCache) -> f64 {
        let a = self.model.box_spec.a;
        let w = &self.basis.weights;
        let x = &self.basis.x;
        let s = self.model.box_spec.pair_sum(|i| w[i] * x[i] * cache.raw[i] * cache.raw[i]);
        s * (2.0 / a) / cache.norm / a
    }
}

impl Objective for BoxObjective {
    type Cache = BoxCache;

    fn dimension(&self) -> usize {
        2 * self.basis.m
    }

    fn prepare(&self, params: &[f64]) -> Result<(BoxCache, f64)> {
        if params.len() != self.dimension() {
            return Err(Error::invalid("coefficients", "length does not match basis"));
        }
        let norm: f64 = params.iter().map(|c| c * c).sum();
        if !(norm > 0.0) {
            return Err(Error::invalid("coefficients", "all coefficients are zero"));
        }
        let raw = self.basis.raw_field(params);
        let kinetic = self.basis.kinetic_numerator(params);
        let (quartic, pot) = self.integrals(&raw);
        let e = self.total(kinetic, norm, quartic, pot);
        Ok((BoxCache { raw, norm, kinetic }, e))
    }

    fn trial_energy(&self, cache: &BoxCache, params: &[f64], index: usize, delta: f64) -> f64 {
        let c = params[index];
        let dn = delta * (2.0 * c + delta);
        let norm = cache.norm + dn;
        if !(norm > 0.0) {
            return f64::NAN;
        }
        let kinetic = cache.kinetic + dn * self.basis.k2[index];
        let col = self.basis.column(index);
        let w = &self.basis.weights;
        let v = &self.potential;
        let raw = &cache.raw;
        let n = raw.len();
        let mut quartic = 0.0;
        let mut pot = 0.0;
        for i in 0..n / 2 {
            let j = n - 1 - i;
            let ri = raw[i] + delta * col[i];
            let rj = raw[j] + delta * col[j];
            let (ri, rj) = (ri * ri, rj * rj);
            quartic += w[i] * ri * ri + w[j] * rj * rj;
            pot += w[i] * v[i] * ri + w[j] * v[j] * rj;
        }
        self.total(kinetic, norm, quartic, pot)
    }

    fn commit(&self, cache: &mut BoxCache, params: &mut [f64], index: usize, delta: f64) {
        let c = params[index];
        let dn = delta * (2.0 * c + delta);
        cache.norm += dn;
        cache.kinetic += dn * self.basis.k2[index];
        for (r, b) in cache.raw.iter_mut().zip(self.basis.column(index)) {
            *r += delta * b;
        }
        params[index] += delta;
    }

    fn renormalize(&self, params: &mut [f64]) {
        let norm = params.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 0.0 {
            params.iter_mut().for_each(|c| *c /= norm);
        }
    }

    /// Parity `x -> -x` flips the sign of sine-coefficient moves.
    fn mirror_proposal(&self, index: usize, delta: f64) -> (usize, f64) {
        if index >= self.basis.m {
            (index, -delta)
        } else {
            (index, delta)
        }
    }
}
