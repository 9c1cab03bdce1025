//! Observation builders and reward shaping for agent development.
//!
//! Builders only read a simulation snapshot, so all agents can be observed
//! in parallel against one state.

mod junction;
mod masked;
mod reward;
mod tree;

pub use junction::{junction_observe, JunctionObservation, JunctionObserver, JUNCTION_FEATURES, JUNCTION_SLOTS};
pub use masked::{AgentPolicy, MaskedPolicy};
pub use reward::{agent_distance, shaped_reward, shaped_terms, ShapedRewardConfig};
pub use tree::{tree_observe, FeatureSet, TreeObservation};

use crate::sim::Simulation;
use crate::solver::PlanningContext;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::io::{self, Write};

/// Per-agent constant in `[0, 1)`, drawn once per episode from the seed.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PriorityHandles(Vec<f64>);

impl PriorityHandles {
    /// Stream kept apart from the simulator's own draws.
    const STREAM: u64 = 0x7072_696f;

    pub fn from_seed(n_agents: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(Self::STREAM);
        PriorityHandles((0..n_agents).map(|_| rng.gen::<f64>()).collect())
    }

    pub fn get(&self, agent: usize) -> f64 {
        self.0[agent]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

#[derive(Serialize)]
struct DumpLine<'a> {
    t: u32,
    agent: usize,
    tree: Option<&'a TreeObservation>,
    junction: Option<Vec<f64>>,
}

/// Writes one JSON line per unfinished agent with its tree observation and,
/// at decision points, its junction observation.
pub fn dump_observations<W: Write>(
    out: &mut W,
    ctx: &PlanningContext,
    sim: &Simulation,
    handles: &PriorityHandles,
    junctions: &JunctionObserver,
    depth: u32,
    features: FeatureSet,
) -> io::Result<()> {
    for i in 0..sim.n_agents() {
        if sim.agent(i).is_done() {
            continue;
        }
        let tree = tree_observe(ctx, sim, i, depth, features, handles).ok();
        let junction = junctions.observe(ctx, sim, i).ok().map(|j| j.flatten());
        let line = DumpLine { t: sim.t(), agent: i, tree: tree.as_ref(), junction };
        serde_json::to_writer(&mut *out, &line)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
