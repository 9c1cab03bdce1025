use crate::error::GenError;
use serde::{Deserialize, Serialize};

pub const N_TESTS: u32 = 41;
pub const ENVS_PER_TEST: u32 = 10;
pub const MIN_MALFUNCTION_INTERVAL: u32 = 250;
pub const MAX_RAILS_IN_CITY: u32 = 4;
pub const MAX_RAILS_BETWEEN_CITIES: u32 = 2;

/// Parameters of one environment slot in the difficulty schedule.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestParams {
    pub test: u32,
    pub env: u32,
    pub n_agents: u32,
    pub n_cities: u32,
    pub x_dim: u32,
    pub y_dim: u32,
    /// Mean steps between breakdowns per agent; 0 disables them.
    pub malfunction_interval: u32,
    pub max_rails_in_city: u32,
    pub max_rails_between_cities: u32,
    pub min_malfunction_duration: u32,
    pub max_malfunction_duration: u32,
}

impl TestParams {
    pub fn malfunction_rate(&self) -> f64 {
        if self.malfunction_interval == 0 {
            0.0
        } else {
            1.0 / self.malfunction_interval as f64
        }
    }
}

fn agents_at(k: u32) -> u32 {
    let mut n = 1u32;
    for _ in 0..k {
        let p = 10u32.pow(n.ilog10());
        // ceil(0.75 * p) for p a power of ten
        n += (3 * p).div_ceil(4);
    }
    n
}

fn ceil_sqrt(m: u64) -> u64 {
    let r = m.isqrt();
    if r * r == m {
        r
    } else {
        r + 1
    }
}

/// The `l`-independent parameters of test `k` (returned with `env = 0`).
pub fn schedule(k: u32) -> Result<TestParams, GenError> {
    if k >= N_TESTS {
        return Err(GenError::TestOutOfRange(k));
    }
    let n_agents = agents_at(k);
    let n_cities = n_agents / 10 + 2;
    let half = MAX_RAILS_IN_CITY.div_ceil(2) as u64;
    let area = 6 * (half + 3) * (half + 3) * n_cities as u64;
    let x_dim = ceil_sqrt(area) as u32 + 7;
    Ok(TestParams {
        test: k,
        env: 0,
        n_agents,
        n_cities,
        x_dim,
        y_dim: x_dim,
        malfunction_interval: 0,
        max_rails_in_city: MAX_RAILS_IN_CITY,
        max_rails_between_cities: MAX_RAILS_BETWEEN_CITIES,
        min_malfunction_duration: 20,
        max_malfunction_duration: 50,
    })
}

/// Breakdown probability per agent and step for environment index `l`.
pub fn malfunction_rate(l: u32) -> Result<f64, GenError> {
    if l >= ENVS_PER_TEST {
        return Err(GenError::EnvOutOfRange(l));
    }
    Ok(if l == 0 { 0.0 } else { 1.0 / (l * MIN_MALFUNCTION_INTERVAL) as f64 })
}

pub fn test_params(k: u32, l: u32) -> Result<TestParams, GenError> {
    malfunction_rate(l)?;
    let mut p = schedule(k)?;
    p.env = l;
    p.malfunction_interval = l * MIN_MALFUNCTION_INTERVAL;
    Ok(p)
}

/// All 41 x 10 slots, test-major.
pub fn full_schedule() -> Vec<TestParams> {
    (0..N_TESTS)
        .flat_map(|k| (0..ENVS_PER_TEST).map(move |l| test_params(k, l).expect("in range")))
        .collect()
}
