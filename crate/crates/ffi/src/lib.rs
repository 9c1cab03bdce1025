//! C interface to the `railmapf` library.
//!
//! Every function returns an [`RmStatus`]; results are written through out
//! pointers. Objects are opaque handles released with the matching
//! `*_free` function. Strings returned to the caller are owned by the
//! caller and must be released with [`rm_string_free`]. After a failure,
//! [`rm_last_error_message`] describes it; the message belongs to the
//! calling thread and stays valid until its next failing call.

use railmapf::gen::{generate, test_params, GenConfig};
use railmapf::sim::{Action, Environment, Phase, Simulation};
use railmapf::solver::{lns_improve, prioritized_plan, LnsConfig, Ordering, PlanningContext, Solution};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    ParseError = 3,
    /// The episode has already ended.
    Terminated = 4,
    NotFound = 5,
    Internal = 6,
}

pub struct RmEnv(Arc<Environment>);
pub struct RmSim(Simulation);
pub struct RmPlan(Solution);

/// Parameters of one slot of the test schedule.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RmTestParams {
    pub test: u32,
    pub env: u32,
    pub n_agents: u32,
    pub n_cities: u32,
    pub x_dim: u32,
    pub y_dim: u32,
    pub malfunction_interval: u32,
    pub max_rails_in_city: u32,
    pub max_rails_between_cities: u32,
}

/// Snapshot of one agent. `phase` is 0 off the grid, 1 on it, 2 done.
/// `row`, `col` and `direction` (0 N, 1 E, 2 S, 3 W) are -1 off the grid.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RmAgentState {
    pub phase: u32,
    pub row: i64,
    pub col: i64,
    pub direction: i32,
    pub malfunction_remaining: u32,
    pub deadlocked: bool,
    /// Arrival step, or -1.
    pub arrived_at: i64,
}

/// Planner choice for [`rm_solve`].
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RmPlanner {
    Prioritized = 0,
    Lns = 1,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn fail(status: RmStatus, msg: impl Into<String>) -> RmStatus {
    let msg = CString::new(msg.into().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
    status
}

fn guard(f: impl FnOnce() -> RmStatus) -> RmStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(RmStatus::Internal, "panic inside railmapf"))
}

macro_rules! deref {
    ($p:expr) => {
        match unsafe { $p.as_ref() } {
            Some(v) => v,
            None => return fail(RmStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

macro_rules! deref_mut {
    ($p:expr) => {
        match unsafe { $p.as_mut() } {
            Some(v) => v,
            None => return fail(RmStatus::NullPointer, concat!(stringify!($p), " is null")),
        }
    };
}

fn put<T>(out: *mut *mut T, v: T) -> RmStatus {
    if out.is_null() {
        return fail(RmStatus::NullPointer, "out is null");
    }
    unsafe { *out = Box::into_raw(Box::new(v)) };
    RmStatus::Ok
}

fn put_string(out: *mut *mut c_char, s: String) -> RmStatus {
    if out.is_null() {
        return fail(RmStatus::NullPointer, "out is null");
    }
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            RmStatus::Ok
        }
        Err(e) => fail(RmStatus::Internal, e.to_string()),
    }
}

fn write<T>(out: *mut T, v: T) -> RmStatus {
    if out.is_null() {
        return fail(RmStatus::NullPointer, "out is null");
    }
    unsafe { *out = v };
    RmStatus::Ok
}

/// Message for the last failure on this thread; empty if none.
#[no_mangle]
pub extern "C" fn rm_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Schedule parameters of environment `env` of test `test`.
#[no_mangle]
pub extern "C" fn rm_schedule(test: u32, env: u32, out: *mut RmTestParams) -> RmStatus {
    guard(|| match test_params(test, env) {
        Ok(p) => write(
            out,
            RmTestParams {
                test: p.test,
                env: p.env,
                n_agents: p.n_agents,
                n_cities: p.n_cities,
                x_dim: p.x_dim,
                y_dim: p.y_dim,
                malfunction_interval: p.malfunction_interval,
                max_rails_in_city: p.max_rails_in_city,
                max_rails_between_cities: p.max_rails_between_cities,
            },
        ),
        Err(e) => fail(RmStatus::InvalidArgument, e.to_string()),
    })
}

/// Generates the environment for a schedule slot.
#[no_mangle]
pub extern "C" fn rm_env_generate(test: u32, env: u32, seed: u64, out: *mut *mut RmEnv) -> RmStatus {
    guard(|| {
        let params = match test_params(test, env) {
            Ok(p) => p,
            Err(e) => return fail(RmStatus::InvalidArgument, e.to_string()),
        };
        match generate(&params, &GenConfig::new(seed)) {
            Ok(e) => put(out, RmEnv(Arc::new(e))),
            Err(e) => fail(RmStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `json` must be a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn rm_env_from_json(json: *const c_char, out: *mut *mut RmEnv) -> RmStatus {
    guard(|| {
        if json.is_null() {
            return fail(RmStatus::NullPointer, "json is null");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(e) => return fail(RmStatus::ParseError, e.to_string()),
        };
        match serde_json::from_str::<Environment>(text) {
            Ok(e) => put(out, RmEnv(Arc::new(e))),
            Err(e) => fail(RmStatus::ParseError, e.to_string()),
        }
    })
}

/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_env_to_json(env: *const RmEnv, out: *mut *mut c_char) -> RmStatus {
    guard(|| {
        let env = deref!(env);
        match serde_json::to_string(&*env.0) {
            Ok(s) => put_string(out, s),
            Err(e) => fail(RmStatus::Internal, e.to_string()),
        }
    })
}

/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_env_n_agents(env: *const RmEnv, out: *mut u32) -> RmStatus {
    guard(|| write(out, deref!(env).0.agents.len() as u32))
}

/// Episode step limit of an environment.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_t_max(env: *const RmEnv, out: *mut u32) -> RmStatus {
    guard(|| write(out, deref!(env).0.t_max()))
}

/// # Safety
/// `env` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_env_free(env: *mut RmEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Starts an episode. The environment handle may be freed afterwards.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_new(env: *const RmEnv, seed: u64, out: *mut *mut RmSim) -> RmStatus {
    guard(|| match Simulation::reset(deref!(env).0.clone(), seed) {
        Ok(s) => put(out, RmSim(s)),
        Err(e) => fail(RmStatus::InvalidArgument, e.to_string()),
    })
}

/// Advances one step. `actions` holds one code per agent: 0 do nothing,
/// 1 left, 2 forward, 3 right, 4 stop.
///
/// # Safety
/// `sim` must be a live handle and `actions` must point to `n` bytes.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_step(sim: *mut RmSim, actions: *const u8, n: usize) -> RmStatus {
    guard(|| {
        let sim = deref_mut!(sim);
        if sim.0.is_terminated() {
            return fail(RmStatus::Terminated, "episode has ended");
        }
        if actions.is_null() && n > 0 {
            return fail(RmStatus::NullPointer, "actions is null");
        }
        let raw = if n == 0 { &[][..] } else { std::slice::from_raw_parts(actions, n) };
        let parsed: Result<Vec<Action>, _> = raw.iter().map(|&a| Action::try_from(a)).collect();
        let parsed = match parsed {
            Ok(p) => p,
            Err(e) => return fail(RmStatus::InvalidArgument, e.to_string()),
        };
        match sim.0.step(&parsed) {
            Ok(_) => RmStatus::Ok,
            Err(e) => fail(RmStatus::InvalidArgument, e.to_string()),
        }
    })
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_t(sim: *const RmSim, out: *mut u32) -> RmStatus {
    guard(|| write(out, deref!(sim).0.t()))
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_is_terminated(sim: *const RmSim, out: *mut bool) -> RmStatus {
    guard(|| write(out, deref!(sim).0.is_terminated()))
}

/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_agent_state(sim: *const RmSim, agent: u32, out: *mut RmAgentState) -> RmStatus {
    guard(|| {
        let sim = deref!(sim);
        if agent as usize >= sim.0.n_agents() {
            return fail(RmStatus::NotFound, format!("no agent {agent}"));
        }
        let a = sim.0.agent(agent as usize);
        let (row, col, direction) = match a.position {
            Some(s) => (s.cell.row as i64, s.cell.col as i64, s.heading as i32),
            None => (-1, -1, -1),
        };
        let phase = match a.phase {
            Phase::OffGrid => 0,
            Phase::OnGrid => 1,
            Phase::Done => 2,
        };
        write(
            out,
            RmAgentState {
                phase,
                row,
                col,
                direction,
                malfunction_remaining: a.malfunction_remaining,
                deadlocked: a.deadlocked,
                arrived_at: a.arrived_at.map_or(-1, i64::from),
            },
        )
    })
}

/// Normalized score of the episode so far.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_score(sim: *const RmSim, out: *mut f64) -> RmStatus {
    guard(|| write(out, deref!(sim).0.score()))
}

/// # Safety
/// `sim` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_sim_free(sim: *mut RmSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Plans paths for every agent. `iterations` and `seed` only matter for
/// [`RmPlanner::Lns`].
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_solve(env: *const RmEnv, planner: RmPlanner, iterations: u32, seed: u64, out: *mut *mut RmPlan) -> RmStatus {
    guard(|| {
        let ctx = PlanningContext::new(deref!(env).0.clone());
        let mut sol = prioritized_plan(&ctx, &Ordering::default());
        if planner == RmPlanner::Lns {
            let cfg = LnsConfig { iterations, seed, ..LnsConfig::default() };
            sol = lns_improve(&ctx, sol, &cfg, None).0;
        }
        put(out, RmPlan(sol))
    })
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_plan_to_json(plan: *const RmPlan, out: *mut *mut c_char) -> RmStatus {
    guard(|| put_string(out, deref!(plan).0.to_json()))
}

/// Sum of arrival times over planned agents.
///
/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_plan_cost(plan: *const RmPlan, out: *mut u64) -> RmStatus {
    guard(|| write(out, deref!(plan).0.cost()))
}

/// # Safety
/// `plan` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn rm_plan_planned(plan: *const RmPlan, out: *mut u32) -> RmStatus {
    guard(|| write(out, deref!(plan).0.planned() as u32))
}

/// # Safety
/// `plan` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn rm_plan_free(plan: *mut RmPlan) {
    if !plan.is_null() {
        drop(Box::from_raw(plan));
    }
}
