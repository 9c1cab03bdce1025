use super::PriorityHandles;
use crate::error::ObsError;
use crate::rail::{Direction, State};
use crate::sim::{Phase, Simulation};
use crate::solver::PlanningContext;
use serde::{Deserialize, Serialize};

/// Which per-edge features a tree carries, in this column order:
///
/// | # | feature | in |
/// |---|---------|----|
/// | 0 | corridor length | all |
/// | 1 | distance to target from the far node | all |
/// | 2 | target on this branch | all |
/// | 3 | opposing agents on the branch | all |
/// | 4 | nearest opposing agent distance | standard, rich |
/// | 5 | deadlocked agent on the branch | standard, rich |
/// | 6 | same-direction agents on the branch | standard, rich |
/// | 7 | min priority handle on the branch | rich |
/// | 8 | max priority handle on the branch | rich |
/// | 9 | malfunctioning agents on the branch | rich |
/// | 10 | far node is a junction | rich |
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum FeatureSet {
    #[serde(rename = "minimal-4")]
    Minimal4,
    #[serde(rename = "standard-7")]
    Standard7,
    #[default]
    #[serde(rename = "rich-11")]
    Rich11,
}

impl FeatureSet {
    pub fn len(self) -> usize {
        match self {
            FeatureSet::Minimal4 => 4,
            FeatureSet::Standard7 => 7,
            FeatureSet::Rich11 => 11,
        }
    }

    pub fn is_empty(self) -> bool {
        false
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "minimal-4" => Some(FeatureSet::Minimal4),
            "standard-7" => Some(FeatureSet::Standard7),
            "rich-11" => Some(FeatureSet::Rich11),
            _ => None,
        }
    }
}

/// Columns holding distances; padding marks them unreachable instead of -1.
const DISTANCE_COLUMNS: [usize; 2] = [1, 4];

/// Branch summaries in breadth-first order, two slots per node, so a tree
/// of depth `D` always has `2^(D+1) - 2` rows. Unreachable distances are
/// `f64::INFINITY` (serialized as `null`); padded rows hold -1 elsewhere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TreeObservation {
    pub depth: u32,
    pub features: FeatureSet,
    pub rows: Vec<Vec<f64>>,
}

impl TreeObservation {
    pub fn n_rows(depth: u32) -> usize {
        (1usize << (depth + 1)) - 2
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows.len(), self.features.len())
    }

    pub fn flatten(&self) -> Vec<f64> {
        self.rows.concat()
    }

    pub fn is_padding(&self, row: usize) -> bool {
        self.rows[row][0] < 0.0
    }
}

fn padding(features: FeatureSet) -> Vec<f64> {
    (0..features.len()).map(|k| if DISTANCE_COLUMNS.contains(&k) { f64::INFINITY } else { -1.0 }).collect()
}

/// Exits of `s` in left, forward, right order, at most two.
fn branch_exits(ctx: &PlanningContext, s: State) -> Vec<Direction> {
    let exits = ctx.grid().code(s.cell).exits(s.heading);
    if let Some(only) = exits.single() {
        return vec![only];
    }
    [s.heading.left(), s.heading, s.heading.right()].into_iter().filter(|&d| exits.contains(d)).take(2).collect()
}

struct Walk {
    row: Vec<f64>,
    end: Option<State>,
}

fn walk(
    ctx: &PlanningContext,
    sim: &Simulation,
    agent: usize,
    from: State,
    exit: Direction,
    offset: u32,
    handles: &PriorityHandles,
    features: FeatureSet,
) -> Walk {
    let grid = ctx.grid();
    let target = ctx.target(agent);
    let dist = ctx.dist(agent);
    let Some(cell) = grid.neighbor(from.cell, exit) else {
        return Walk { row: padding(features), end: None };
    };
    let mut s = State::new(cell, exit);
    let mut len = 0u32;
    let (mut same, mut opp, mut broken, mut dead) = (0.0, 0.0, 0.0, 0.0);
    let mut nearest = f64::INFINITY;
    let (mut pmin, mut pmax) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut on_target = false;
    let cap = grid.cell_count() as u32;
    loop {
        len += 1;
        if let Some(j) = sim.occupant(s.cell).filter(|&j| j != agent) {
            let a = sim.agent(j);
            let h = a.position.map(|p| p.heading);
            if h == Some(s.heading) {
                same += 1.0;
            } else {
                opp += 1.0;
                nearest = nearest.min((offset + len) as f64);
            }
            if a.is_malfunctioning() {
                broken += 1.0;
            }
            if a.deadlocked {
                dead = 1.0;
            }
            pmin = pmin.min(handles.get(j));
            pmax = pmax.max(handles.get(j));
        }
        if s.cell == target {
            on_target = true;
            break;
        }
        let exits = grid.code(s.cell).exits(s.heading);
        if exits.len() != 1 || len >= cap {
            break;
        }
        let d = exits.single().expect("single exit");
        match grid.neighbor(s.cell, d) {
            Some(n) => s = State::new(n, d),
            None => break,
        }
    }
    let far = if on_target { Some(0.0) } else { dist.get(s).map(f64::from) };
    let mut row = vec![
        len as f64,
        far.unwrap_or(f64::INFINITY),
        if on_target { 1.0 } else { 0.0 },
        opp,
        nearest,
        dead,
        same,
        if pmin.is_finite() { pmin } else { -1.0 },
        if pmax.is_finite() { pmax } else { -1.0 },
        broken,
        if grid.code(s.cell).transition_count() >= 3 { 1.0 } else { 0.0 },
    ];
    row.truncate(features.len());
    let end = (!on_target && !grid.code(s.cell).exits(s.heading).is_empty()).then_some(s);
    Walk { row, end }
}

/// Depth-limited tree of corridors ahead of `agent`. Each level follows the
/// exits at the next junction; a branch stops early at the target or a dead
/// end and its subtree is padded.
pub fn tree_observe(
    ctx: &PlanningContext,
    sim: &Simulation,
    agent: usize,
    depth: u32,
    features: FeatureSet,
    handles: &PriorityHandles,
) -> Result<TreeObservation, ObsError> {
    if !(1..=3).contains(&depth) {
        return Err(ObsError::Depth(depth));
    }
    let a = sim.agent(agent);
    let root = match a.phase {
        Phase::Done => return Err(ObsError::Finished(agent)),
        Phase::OnGrid => a.position.expect("on grid"),
        Phase::OffGrid => ctx.agent(agent).start_state(),
    };
    let mut rows = Vec::with_capacity(TreeObservation::n_rows(depth));
    // (node state, distance travelled to reach it)
    let mut level: Vec<Option<(State, u32)>> = vec![Some((root, 0))];
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * 2);
        for node in &level {
            let exits = node.map(|(s, _)| branch_exits(ctx, s)).unwrap_or_default();
            for slot in 0..2 {
                match (node, exits.get(slot)) {
                    (Some((s, off)), Some(&e)) => {
                        let w = walk(ctx, sim, agent, *s, e, *off, handles, features);
                        let len = w.row[0] as u32;
                        rows.push(w.row);
                        next.push(w.end.map(|st| (st, off + len)));
                    }
                    _ => {
                        rows.push(padding(features));
                        next.push(None);
                    }
                }
            }
        }
        level = next;
    }
    Ok(TreeObservation { depth, features, rows })
}
