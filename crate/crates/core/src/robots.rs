//! Robot state machines.
//!
//! A robot is anonymous and oblivious of `n`, `k` and its own position. Its
//! whole persistent memory is [`RobotState`]; each round the engine hands it a
//! [`View`] captured during Look and applies one of the pure `compute_*`
//! functions below.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ring::GlobalDirection;

/// A port label in the robot's private frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum LocalDirection {
    #[default]
    Left,
    Right,
}

impl LocalDirection {
    pub fn opposite(self) -> Self {
        match self {
            LocalDirection::Left => LocalDirection::Right,
            LocalDirection::Right => LocalDirection::Left,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            LocalDirection::Left => 'l',
            LocalDirection::Right => 'r',
        }
    }
}

/// Fixed mapping from a robot's local labels to the global orientation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Chirality {
    pub right_is_cw: bool,
}

impl Chirality {
    pub const RIGHT_IS_CW: Chirality = Chirality { right_is_cw: true };
    pub const RIGHT_IS_CCW: Chirality = Chirality { right_is_cw: false };
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "pef3plus")]
    Pef3Plus,
    #[serde(rename = "pef2")]
    Pef2,
    #[serde(rename = "pef1")]
    Pef1,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Pef3Plus => "pef3plus",
            Algorithm::Pef2 => "pef2",
            Algorithm::Pef1 => "pef1",
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "pef3plus" | "pef3+" | "pef_3+" => Ok(Algorithm::Pef3Plus),
            "pef2" | "pef_2" => Ok(Algorithm::Pef2),
            "pef1" | "pef_1" => Ok(Algorithm::Pef1),
            other => Err(format!(
                "unknown algorithm `{other}` (expected pef3plus, pef2 or pef1)"
            )),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct RobotState {
    pub dir: LocalDirection,
    /// Only read by PEF_3+.
    pub has_moved_previous_step: bool,
    pub chirality: Chirality,
    pub algorithm: Algorithm,
}

impl RobotState {
    pub fn initial(algorithm: Algorithm, chirality: Chirality) -> Self {
        RobotState {
            dir: LocalDirection::Left,
            has_moved_previous_step: false,
            chirality,
            algorithm,
        }
    }

    pub fn global_dir(&self) -> GlobalDirection {
        local_to_global(self.dir, self.chirality)
    }

    pub fn compute(&self, view: View) -> RobotState {
        match self.algorithm {
            Algorithm::Pef3Plus => compute_pef3plus(*self, view),
            Algorithm::Pef2 => compute_pef2(*self, view),
            Algorithm::Pef1 => compute_pef1(*self, view),
        }
    }
}

/// Look-phase snapshot, relative to the robot's `dir` at Look time.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct View {
    pub exists_edge_dir: bool,
    pub exists_edge_opp: bool,
    pub others_on_node: bool,
}

impl View {
    /// Presence of the edge behind `d`, for a robot that looked while holding `looked_with`.
    fn exists_edge(&self, looked_with: LocalDirection, d: LocalDirection) -> bool {
        if d == looked_with {
            self.exists_edge_dir
        } else {
            self.exists_edge_opp
        }
    }
}

pub fn local_to_global(d: LocalDirection, c: Chirality) -> GlobalDirection {
    match (d, c.right_is_cw) {
        (LocalDirection::Right, true) | (LocalDirection::Left, false) => GlobalDirection::Cw,
        (LocalDirection::Right, false) | (LocalDirection::Left, true) => GlobalDirection::Ccw,
    }
}

/// Turn back after arriving on an occupied node, otherwise keep going.
pub fn compute_pef3plus(s: RobotState, v: View) -> RobotState {
    let mut next = s;
    if s.has_moved_previous_step && v.others_on_node {
        next.dir = s.dir.opposite();
    }
    next.has_moved_previous_step = v.exists_edge(s.dir, next.dir);
    next
}

/// An isolated robot seeing exactly one edge points to it.
pub fn compute_pef2(s: RobotState, v: View) -> RobotState {
    let mut next = s;
    if !v.others_on_node && !v.exists_edge_dir && v.exists_edge_opp {
        next.dir = s.dir.opposite();
    }
    next
}

/// Point to a present edge, preferring the current direction.
pub fn compute_pef1(s: RobotState, v: View) -> RobotState {
    let mut next = s;
    if !v.exists_edge_dir && v.exists_edge_opp {
        next.dir = s.dir.opposite();
    }
    next
}
