//! Control-parameter schedules shared by the dimer and box sweep drivers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    pub fn as_str(&self) -> &'static str {
        match self {
            Direction::Up => "up",
            Direction::Down => "down",
        }
    }
}

/// One control value with the leg it belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ControlPoint {
    pub value: f64,
    pub leg: usize,
    pub direction: Direction,
}

/// Piecewise-linear path through `waypoints`, `steps_per_leg` steps per
/// segment. The first waypoint is included once; every segment contributes
/// its end point but not its start, so waypoints appear exactly.
pub fn piecewise_linear(waypoints: &[f64], steps_per_leg: usize) -> Result<Vec<f64>> {
    if waypoints.len() < 2 {
        return Err(Error::invalid("pattern", "need at least two waypoints"));
    }
    if steps_per_leg < 2 {
        return Err(Error::invalid("steps_per_leg", format!("must be >= 2, got {steps_per_leg}")));
    }
    if waypoints.iter().any(|w| !w.is_finite()) {
        return Err(Error::invalid("pattern", "waypoints must be finite"));
    }
    let mut values = vec![waypoints[0]];
    for pair in waypoints.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        for j in 1..=steps_per_leg {
            let v = if j == steps_per_leg {
                to
            } else {
                from + (to - from) * j as f64 / steps_per_leg as f64
            };
            values.push(v);
        }
    }
    Ok(values)
}

/// Labels each value with a leg index and direction. A new leg starts
/// wherever the direction of travel reverses; the first point inherits the
/// direction of the first move.
pub fn label_legs(values: &[f64]) -> Vec<ControlPoint> {
    let mut out = Vec::with_capacity(values.len());
    let mut leg = 0;
    let mut current: Option<Direction> = None;
    for (i, &value) in values.iter().enumerate() {
        let step_dir = if i == 0 {
            values.get(1).and_then(|&next| direction_of(value, next))
        } else {
            direction_of(values[i - 1], value)
        };
        let dir = step_dir.or(current).unwrap_or(Direction::Up);
        if let Some(prev) = current {
            if prev != dir {
                leg += 1;
            }
        }
        current = Some(dir);
        out.push(ControlPoint {
            value,
            leg,
            direction: dir,
        });
    }
    out
}

fn direction_of(from: f64, to: f64) -> Option<Direction> {
    if to > from {
        Some(Direction::Up)
    } else if to < from {
        Some(Direction::Down)
    } else {
        None
    }
}
