use crate::rail::{cluster_index, find_clusters, Cell, Cluster, RailGrid};
use crate::sim::Simulation;
use std::collections::BTreeMap;

/// Light state of one junction cluster.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ClusterLight {
    pub occupant: Option<usize>,
    /// Entry cell and agent currently allowed in.
    pub green: Option<(Cell, usize)>,
    /// Waiting agent per entry cell, with the step it started waiting.
    pub waiting: BTreeMap<Cell, (usize, u32)>,
}

/// Admits at most one train at a time into each junction cluster.
#[derive(Clone, Debug)]
pub struct TrafficLights {
    clusters: Vec<Cluster>,
    index: Vec<Option<usize>>,
    width: u32,
    lights: Vec<ClusterLight>,
}

impl TrafficLights {
    pub fn new(grid: &RailGrid) -> Self {
        let clusters = find_clusters(grid);
        let index = cluster_index(grid, &clusters);
        let lights = vec![ClusterLight::default(); clusters.len()];
        TrafficLights { clusters, index, width: grid.width(), lights }
    }

    pub fn clusters(&self) -> &[Cluster] {
        &self.clusters
    }

    pub fn light(&self, k: usize) -> &ClusterLight {
        &self.lights[k]
    }

    pub fn cluster_of(&self, c: Cell) -> Option<usize> {
        self.index[(c.row * self.width + c.col) as usize]
    }

    /// `wants[i]` is the cell agent `i` is about to enter this step, if any.
    /// Returns whether each such move may go ahead; agents entering a
    /// cluster without a green light must stop.
    pub fn control(&mut self, sim: &Simulation, wants: &[Option<Cell>]) -> Vec<bool> {
        let t = sim.t();
        let mut inside: Vec<Vec<usize>> = vec![Vec::new(); self.clusters.len()];
        for (i, a) in sim.agents().iter().enumerate() {
            if let Some(k) = a.cell().and_then(|c| self.cluster_of(c)) {
                inside[k].push(i);
            }
        }
        let mut allowed = vec![true; wants.len()];
        let mut requests: Vec<Vec<(Cell, usize)>> = vec![Vec::new(); self.clusters.len()];
        for (i, w) in wants.iter().enumerate() {
            let Some(next) = *w else { continue };
            let Some(k) = self.cluster_of(next) else { continue };
            let here = sim.agent(i).cell();
            if here.and_then(|c| self.cluster_of(c)) == Some(k) {
                continue;
            }
            allowed[i] = false;
            requests[k].push((here.unwrap_or(next), i));
        }
        for (k, light) in self.lights.iter_mut().enumerate() {
            light.occupant = inside[k].first().copied();
            // forget agents that no longer ask
            light.waiting.retain(|_, (i, _)| requests[k].iter().any(|&(_, j)| j == *i));
            for &(entry, i) in &requests[k] {
                light.waiting.entry(entry).or_insert((i, t));
            }
            if light.green.is_some_and(|(_, g)| inside[k].contains(&g) || !requests[k].iter().any(|&(_, j)| j == g)) {
                light.green = None;
            }
            if !inside[k].is_empty() {
                light.green = None;
                continue;
            }
            if light.green.is_none() {
                light.green = light
                    .waiting
                    .iter()
                    .min_by_key(|(entry, (_, since))| (*since, **entry))
                    .map(|(&entry, &(i, _))| (entry, i));
            }
            if let Some((_, g)) = light.green {
                allowed[g] = true;
            }
        }
        allowed
    }
}
