use crate::error::SimError;
use crate::rail::{Cell, DirSet, Direction, RailGrid, State};
use serde::{Deserialize, Serialize};
use std::fmt;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
#[repr(u8)]
pub enum Action {
    #[default]
    DoNothing = 0,
    MoveLeft = 1,
    MoveForward = 2,
    MoveRight = 3,
    Stop = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::DoNothing,
        Action::MoveLeft,
        Action::MoveForward,
        Action::MoveRight,
        Action::Stop,
    ];

    pub fn is_move(self) -> bool {
        matches!(self, Action::MoveLeft | Action::MoveForward | Action::MoveRight)
    }
}

impl TryFrom<u8> for Action {
    type Error = String;
    fn try_from(v: u8) -> Result<Self, Self::Error> {
        Action::ALL
            .get(v as usize)
            .copied()
            .ok_or_else(|| format!("invalid action code {v}"))
    }
}

impl From<Action> for u8 {
    fn from(a: Action) -> u8 {
        a as u8
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Action::DoNothing => "DO_NOTHING",
            Action::MoveLeft => "MOVE_LEFT",
            Action::MoveForward => "MOVE_FORWARD",
            Action::MoveRight => "MOVE_RIGHT",
            Action::Stop => "STOP",
        };
        f.write_str(s)
    }
}

/// Exit heading selected by a move action, or `None` if the action is not
/// valid in this state. A forward move follows the track when there is a
/// single exit, curves included.
pub fn exit_for_action(exits: DirSet, heading: Direction, action: Action) -> Option<Direction> {
    match action {
        Action::MoveForward => exits.single().or_else(|| exits.contains(heading).then_some(heading)),
        Action::MoveLeft => exits.contains(heading.left()).then_some(heading.left()),
        Action::MoveRight => exits.contains(heading.right()).then_some(heading.right()),
        Action::DoNothing | Action::Stop => None,
    }
}

/// The move action that takes a train in `state` out through `exit`.
pub fn action_for_exit(grid: &RailGrid, state: State, exit: Direction) -> Option<Action> {
    let exits = grid.code(state.cell).exits(state.heading);
    if !exits.contains(exit) {
        return None;
    }
    if exits.len() == 1 || exit == state.heading {
        Some(Action::MoveForward)
    } else if exit == state.heading.left() {
        Some(Action::MoveLeft)
    } else if exit == state.heading.right() {
        Some(Action::MoveRight)
    } else {
        None
    }
}

/// The move action that takes a train in `from` to the state `to`.
pub fn action_between(grid: &RailGrid, from: State, to: State) -> Option<Action> {
    if grid.neighbor(from.cell, to.heading) != Some(to.cell) {
        return None;
    }
    action_for_exit(grid, from, to.heading)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AgentSpec {
    pub origin: Cell,
    pub direction: Direction,
    pub target: Cell,
}

impl AgentSpec {
    pub fn start_state(&self) -> State {
        State::new(self.origin, self.direction)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    OffGrid,
    OnGrid,
    Done,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentState {
    pub phase: Phase,
    /// Cell and heading while on the grid.
    pub position: Option<State>,
    /// Whether the train keeps moving under a no-op.
    pub moving: bool,
    pub malfunction_remaining: u32,
    pub deadlocked: bool,
    pub reward: i64,
    pub arrived_at: Option<u32>,
}

impl AgentState {
    pub(crate) fn fresh() -> AgentState {
        AgentState {
            phase: Phase::OffGrid,
            position: None,
            moving: false,
            malfunction_remaining: 0,
            deadlocked: false,
            reward: 0,
            arrived_at: None,
        }
    }

    pub fn cell(&self) -> Option<Cell> {
        self.position.map(|s| s.cell)
    }

    pub fn is_done(&self) -> bool {
        self.phase == Phase::Done
    }

    pub fn is_malfunctioning(&self) -> bool {
        self.malfunction_remaining > 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MalfunctionParams {
    /// Per-agent, per-step probability of a breakdown.
    pub rate: f64,
    pub min_duration: u32,
    pub max_duration: u32,
}

impl Default for MalfunctionParams {
    fn default() -> Self {
        MalfunctionParams { rate: 0.0, min_duration: 20, max_duration: 50 }
    }
}

impl MalfunctionParams {
    pub fn with_rate(rate: f64) -> Self {
        MalfunctionParams { rate, ..Default::default() }
    }

    pub fn validate(&self) -> Result<(), SimError> {
        if !(0.0..=1.0).contains(&self.rate) || self.rate.is_nan() {
            return Err(SimError::InvalidMalfunction(format!("rate {} not in [0, 1]", self.rate)));
        }
        if self.min_duration > self.max_duration {
            return Err(SimError::InvalidMalfunction(format!(
                "duration range [{}, {}] is empty",
                self.min_duration, self.max_duration
            )));
        }
        Ok(())
    }
}

/// Where an environment came from in the test schedule.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnvOrigin {
    pub test: u32,
    pub env: u32,
    pub seed: u64,
}

/// A complete problem instance: rail grid, agents, city count and breakdown
/// parameters. This is the grid+agents JSON file format.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub grid: RailGrid,
    pub agents: Vec<AgentSpec>,
    pub n_cities: u32,
    #[serde(default)]
    pub malfunction: MalfunctionParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub origin: Option<EnvOrigin>,
}

impl Environment {
    pub fn new(grid: RailGrid, agents: Vec<AgentSpec>, n_cities: u32) -> Environment {
        Environment { grid, agents, n_cities, malfunction: MalfunctionParams::default(), origin: None }
    }

    pub fn t_max(&self) -> u32 {
        compute_t_max(
            self.grid.width(),
            self.grid.height(),
            self.agents.len() as u32,
            self.n_cities.max(1),
        )
    }
}

/// Episode step limit `floor(8 * (w + h + n / c))`, exact in integers.
pub fn compute_t_max(width: u32, height: u32, n_agents: u32, n_cities: u32) -> u32 {
    let c = n_cities.max(1) as u64;
    ((8 * (width as u64 + height as u64) * c + 8 * n_agents as u64) / c) as u32
}
