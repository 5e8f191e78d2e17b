//! HSF configurations that steer reflections toward the base station.
//!
//! The ceiling is split into subunits `i = 0..=I` and the candidate user
//! positions into `j = 0..=J`, spaced `tx_step` apart. A [`Schedule`] assigns
//! one position index to every subunit; [`materialize_normals`] turns that
//! assignment into virtual normals, each aiming the reflection of a ray from
//! user position `j` through subunit `i` at the receiver.
//!
//! Three assignment policies exist:
//!
//! * **static** – every subunit serves the sensed position `j = 0`;
//! * **unbiased** – subunit `i` serves `i mod (J + 1)`;
//! * **biased** – every `Δi`-th subunit serves the favoured position `j_c`,
//!   the rest cycle round-robin over the other positions in ascending order.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::geometry::Vec2;
use crate::scene::{HsfPanel, Scene};

/// Assignment policy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SteeringMode {
    Static,
    Unbiased,
    Biased { bias_p: f64, j_c: usize },
}

impl SteeringMode {
    pub fn label(&self) -> &'static str {
        match self {
            SteeringMode::Static => "static",
            SteeringMode::Unbiased => "unbiased",
            SteeringMode::Biased { .. } => "biased",
        }
    }

    pub fn bias_p(&self) -> Option<f64> {
        match *self {
            SteeringMode::Biased { bias_p, .. } => Some(bias_p),
            _ => None,
        }
    }
}

/// Discretization of the candidate user positions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionGrid {
    /// `Δx_Tx`, m.
    pub tx_step: f64,
    /// Largest dislocation the grid must cover, m.
    pub max_dislocation: f64,
}

impl PositionGrid {
    pub fn new(tx_step: f64, max_dislocation: f64) -> Result<Self> {
        if !(tx_step > 0.0 && tx_step.is_finite()) {
            return Err(Error::invalid("tx_step", format!("{tx_step} must be > 0")));
        }
        if !(max_dislocation >= 0.0 && max_dislocation.is_finite()) {
            return Err(Error::invalid(
                "max_dislocation",
                format!("{max_dislocation} must be >= 0"),
            ));
        }
        Ok(Self {
            tx_step,
            max_dislocation,
        })
    }

    /// Grid whose last index is exactly `j_max`.
    pub fn with_last_index(tx_step: f64, j_max: usize) -> Result<Self> {
        Self::new(tx_step, j_max as f64 * tx_step)
    }

    /// `J = ceil(max_dislocation / tx_step)`.
    pub fn last_index(&self) -> usize {
        // Absorb representation error: 0.004 / 0.002 must give 2, not 3.
        ((self.max_dislocation / self.tx_step) - 1e-9).ceil().max(0.0) as usize
    }

    /// Dislocation of candidate position `j`.
    pub fn position(&self, j: usize) -> f64 {
        j as f64 * self.tx_step
    }
}

/// Per-subunit position assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub assignment: Vec<usize>,
    pub tx_step: f64,
    pub max_dislocation: f64,
    pub mode: SteeringMode,
}

impl Schedule {
    pub fn grid(&self) -> PositionGrid {
        PositionGrid {
            tx_step: self.tx_step,
            max_dislocation: self.max_dislocation,
        }
    }
}

/// Subunit spacing between consecutive favoured slots for bias `p`:
/// `max(1, round(1/p))`.
pub fn bias_stride(bias_p: f64) -> usize {
    (1.0 / bias_p).round().max(1.0) as usize
}

/// Build the assignment for subunits `0..=last_subunit`.
pub fn build_schedule(
    mode: SteeringMode,
    last_subunit: usize,
    grid: PositionGrid,
) -> Result<Schedule> {
    let positions = grid.last_index() + 1;
    let slots = last_subunit + 1;
    let assignment = match mode {
        SteeringMode::Static => vec![0; slots],
        SteeringMode::Unbiased => (0..slots).map(|i| i % positions).collect(),
        SteeringMode::Biased { bias_p, j_c } => {
            if !(bias_p > 0.0 && bias_p < 1.0) {
                return Err(Error::invalid("bias_p", format!("{bias_p} outside (0, 1)")));
            }
            if j_c >= positions {
                return Err(Error::IndexOutOfRange {
                    index: j_c,
                    max: positions - 1,
                });
            }
            let stride = bias_stride(bias_p);
            let others: Vec<usize> = (0..positions).filter(|&j| j != j_c).collect();
            let mut cursor = 0;
            (0..slots)
                .map(|i| {
                    if i % stride == 0 || others.is_empty() {
                        j_c
                    } else {
                        let j = others[cursor % others.len()];
                        cursor += 1;
                        j
                    }
                })
                .collect()
        }
    };
    Ok(Schedule {
        assignment,
        tx_step: grid.tx_step,
        max_dislocation: grid.max_dislocation,
        mode,
    })
}

/// Unit normal that reflects the ray from `user_pos` hitting `hsf_point`
/// toward `rx_target`: the normalized difference of the outgoing and
/// incoming directions.
pub fn optimal_normal(hsf_point: Vec2, user_pos: Vec2, rx_target: Vec2) -> Result<Vec2> {
    if !(hsf_point.y > user_pos.y) {
        return Err(Error::DegenerateGeometry(format!(
            "HSF point ({}, {}) is not above the user ({}, {})",
            hsf_point.x, hsf_point.y, user_pos.x, user_pos.y
        )));
    }
    let incident = (hsf_point - user_pos)
        .normalized()
        .ok_or_else(|| Error::DegenerateGeometry("user coincides with HSF point".into()))?;
    let outgoing = (rx_target - hsf_point)
        .normalized()
        .ok_or_else(|| Error::DegenerateGeometry("receiver coincides with HSF point".into()))?;
    let half = outgoing - incident;
    if half.norm() < 1e-12 {
        return Err(Error::DegenerateGeometry(
            "outgoing direction equals incident direction".into(),
        ));
    }
    let n = half * (1.0 / half.norm());
    if !(n.y < 0.0) {
        return Err(Error::DegenerateGeometry(format!(
            "required normal ({}, {}) does not face the floor",
            n.x, n.y
        )));
    }
    Ok(n)
}

/// Panel with per-subunit normals realizing `schedule` in `scene`.
pub fn materialize_normals(schedule: &Schedule, scene: &Scene) -> Result<HsfPanel> {
    let panel = &scene.ceiling;
    if schedule.assignment.len() != panel.len() {
        return Err(Error::invalid(
            "schedule",
            format!(
                "{} entries for a panel of {} subunits",
                schedule.assignment.len(),
                panel.len()
            ),
        ));
    }
    let grid = schedule.grid();
    let rx = scene.rx_position();
    let normals = schedule
        .assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| {
            let user = scene.user_position(grid.position(j));
            optimal_normal(panel.subunit_center(i)?, user, rx)
        })
        .collect::<Result<Vec<_>>>()?;
    panel.with_normals(normals)
}

/// Occurrence count of every position index.
pub fn schedule_stats(schedule: &Schedule) -> BTreeMap<usize, usize> {
    let mut counts = BTreeMap::new();
    for &j in &schedule.assignment {
        *counts.entry(j).or_insert(0) += 1;
    }
    counts
}
