//! Difficulty schedule and procedural environment generation.
//!
//! Cities are blocks of parallel tracks joined by switch fans at both ends.
//! They are placed by rejection sampling and linked into one ring, ordered
//! by angle around the grid centre, with corridors found by a turn-averse
//! shortest-path search that may cross existing rail only at right angles.

mod layout;
mod schedule;

pub use layout::{generate, generate_with_cities, City, GenConfig};
pub use schedule::{
    full_schedule, malfunction_rate, schedule, test_params, TestParams, ENVS_PER_TEST, MAX_RAILS_BETWEEN_CITIES,
    MAX_RAILS_IN_CITY, MIN_MALFUNCTION_INTERVAL, N_TESTS,
};
