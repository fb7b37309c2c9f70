//! Independent reference solutions shared by the integration tests. Nothing
//! here calls into the crate's solvers.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};

/// Half width of the dimer hysteresis loop at coupling `t`:
/// `2U (1 - (t/U)^(2/3))^(3/2)` for `t < U`.
pub fn astroid_half_width(t: f64, u: f64) -> f64 {
    if u <= 0.0 || t >= u {
        return 0.0;
    }
    2.0 * u * (1.0 - (t / u).powf(2.0 / 3.0)).powf(1.5)
}

/// Symmetric dimer energy at occupation difference `s` with the optimal
/// relative phase.
fn dimer_energy_of_s(t: f64, u: f64, s: f64) -> f64 {
    let (n1, n2) = (0.5 * (1.0 + s), 0.5 * (1.0 - s));
    -2.0 * t * (n1 * n2).max(0.0).sqrt() - u * (n1 * n1 + n2 * n2)
}

/// `|s|` of the symmetric dimer ground state by a dense grid scan on
/// `[0, 1]` followed by golden-section refinement.
pub fn dimer_asymmetry_by_scan(t: f64, u: f64) -> f64 {
    let n = 200_000;
    let f = |s: f64| dimer_energy_of_s(t, u, s);
    let mut best = 0;
    for i in 1..=n {
        if f(i as f64 / n as f64) < f(best as f64 / n as f64) {
            best = i;
        }
    }
    let h = 1.0 / n as f64;
    let (mut lo, mut hi) = (((best as f64) - 1.0) * h, ((best as f64) + 1.0) * h);
    lo = lo.max(0.0);
    hi = hi.min(1.0);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f(x1) <= f(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    0.5 * (lo + hi)
}

/// Lowest eigenpair of `-|gamma| d2/dx2 - 2 v0 x / a` on `(-a/2, a/2)` with
/// Dirichlet walls, second-order finite differences on `n` interior points.
/// Returns the energy and `<x>/a`.
pub fn fd_linear_ground_state(gamma: f64, v0: f64, a: f64, n: usize) -> (f64, f64) {
    let h = a / (n + 1) as f64;
    let x: Vec<f64> = (1..=n).map(|i| -0.5 * a + i as f64 * h).collect();
    let k = gamma.abs() / (h * h);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 2.0 * k - 2.0 * v0 * x[i] / a;
        if i + 1 < n {
            m[(i, i + 1)] = -k;
            m[(i + 1, i)] = -k;
        }
    }
    let eig = SymmetricEigen::new(m);
    let (idx, e) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let v = eig.eigenvectors.column(idx);
    let norm: f64 = v.iter().map(|c| c * c).sum();
    let xm: f64 = v.iter().zip(&x).map(|(c, xi)| c * c * xi).sum::<f64>() / norm;
    (e, xm / a)
}

/// `<x>/a` of the normalized `c0 cos(k0 x) + s0 sin(k1 x)` on the box by a
/// midpoint rule with `n` cells.
pub fn two_mode_expectation(c0: f64, s0: f64, a: f64, n: usize) -> f64 {
    let k0 = std::f64::consts::PI / a;
    let k1 = 2.0 * std::f64::consts::PI / a;
    let h = a / n as f64;
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..n {
        let x = -0.5 * a + (i as f64 + 0.5) * h;
        let psi = c0 * (k0 * x).cos() + s0 * (k1 * x).sin();
        num += x * psi * psi;
        den += psi * psi;
    }
    num / den / a
}

fn dimer_energy_biased(eps2: f64, t: f64, u: f64, s: f64) -> f64 {
    let n2 = 0.5 * (1.0 - s);
    eps2 * n2 + dimer_energy_of_s(t, u, s)
}

/// Whether `E(s)` at bias `eps2` has a local minimum with `s > 0`, on a
/// uniform grid of `n` intervals over `[-1, 1]`.
fn donor_minimum_exists(eps2: f64, t: f64, u: f64, n: usize) -> bool {
    let e: Vec<f64> = (0..=n)
        .map(|i| dimer_energy_biased(eps2, t, u, -1.0 + 2.0 * i as f64 / n as f64))
        .collect();
    if e[n] < e[n - 1] {
        return true;
    }
    (n / 2 + 1..n).any(|i| e[i] < e[i - 1] && e[i] <= e[i + 1])
}

/// Bias `eps2 < 0` at which the donor-side minimum of the symmetric dimer
/// disappears, by bisection over a 10^5-point scan of `E(s)`.
pub fn spinodal_by_scan(t: f64, u: f64) -> f64 {
    let n = 100_000;
    let (mut lo, mut hi) = (-4.0 * u - 1.0, 0.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if donor_minimum_exists(mid, t, u, n) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}
