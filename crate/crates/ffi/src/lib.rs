//! C ABI over [`cmgym::CmEnv`].
//!
//! Handles are opaque. Every fallible call returns a [`CmgymStatus`]; on
//! failure `cmgym_last_error` describes the most recent error on the calling
//! thread. Panics never cross the boundary.

use std::cell::RefCell;
use std::collections::BTreeMap;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use cmgym::{Action, AgentId, CmEnv, Error, Observation, SimConfig, TerminalKind};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmgymStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Config = 3,
    /// Called out of order, e.g. step before reset.
    Lifecycle = 4,
    UnknownAgent = 5,
    BadAction = 6,
    /// The caller's buffer is too small; the required length was written.
    BufferTooSmall = 7,
    Internal = 8,
    Panic = 9,
}

/// Per-agent outcome of the last step.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CmgymAgentResult {
    pub agent_id: u64,
    pub reward: f64,
    pub done: bool,
    /// -1 while flying; otherwise 0 energy depleted, 1 nav lost, 2 touchdown.
    pub terminal: i32,
    /// Vertiport index landed at, or -1.
    pub landed_vertiport: i64,
}

/// Opaque environment handle.
pub struct CmgymEnv {
    env: CmEnv,
    obs: BTreeMap<AgentId, Observation>,
    results: Vec<CmgymAgentResult>,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).expect("nul bytes removed"));
}

fn fail(status: CmgymStatus, msg: impl Into<String>) -> CmgymStatus {
    set_error(msg);
    status
}

fn from_error(e: Error) -> CmgymStatus {
    let status = match &e {
        Error::Config(_) | Error::Parse { .. } | Error::Io { .. } => CmgymStatus::Config,
        Error::Lifecycle(_) => CmgymStatus::Lifecycle,
        Error::UnknownAgent(_) => CmgymStatus::UnknownAgent,
        Error::Range(_) => CmgymStatus::BadAction,
    };
    fail(status, e.to_string())
}

fn guard(f: impl FnOnce() -> CmgymStatus) -> CmgymStatus {
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(CmgymStatus::Panic, "panic inside cmgym"))
}

fn terminal_code(t: Option<TerminalKind>) -> i32 {
    match t {
        None => -1,
        Some(TerminalKind::EnergyDepleted) => 0,
        Some(TerminalKind::NavLost) => 1,
        Some(TerminalKind::Touchdown) => 2,
    }
}

/// Message for the last failed call on this thread. Valid until the next
/// call on the same thread; never NULL.
#[no_mangle]
pub extern "C" fn cmgym_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds an environment from TOML text (NULL or "" for defaults).
///
/// # Safety
/// `config_toml` must be NULL or a nul-terminated string; `out` must be a
/// valid pointer.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_new(config_toml: *const c_char, out: *mut *mut CmgymEnv) -> CmgymStatus {
    guard(|| {
        if out.is_null() {
            return fail(CmgymStatus::NullPointer, "out is NULL");
        }
        *out = ptr::null_mut();
        let text = if config_toml.is_null() {
            ""
        } else {
            match CStr::from_ptr(config_toml).to_str() {
                Ok(s) => s,
                Err(_) => return fail(CmgymStatus::InvalidUtf8, "config is not UTF-8"),
            }
        };
        let env = match SimConfig::from_toml_str(text).and_then(CmEnv::new) {
            Ok(e) => e,
            Err(e) => return from_error(e),
        };
        *out = Box::into_raw(Box::new(CmgymEnv {
            env,
            obs: BTreeMap::new(),
            results: vec![],
        }));
        CmgymStatus::Ok
    })
}

/// # Safety
/// `env` must be NULL or a handle from `cmgym_env_new` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_free(env: *mut CmgymEnv) {
    if !env.is_null() {
        drop(Box::from_raw(env));
    }
}

/// Length of every observation vector.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_observation_len(env: *const CmgymEnv) -> usize {
    env.as_ref().map_or(0, |h| h.env.observation_len())
}

/// Starts a new episode; writes the number of live agents to `n_agents`
/// (may be NULL).
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_reset(env: *mut CmgymEnv, seed: u64, n_agents: *mut usize) -> CmgymStatus {
    guard(|| {
        let Some(h) = env.as_mut() else {
            return fail(CmgymStatus::NullPointer, "env is NULL");
        };
        match h.env.reset(seed) {
            Ok(obs) => {
                h.obs = obs;
                h.results.clear();
                if !n_agents.is_null() {
                    *n_agents = h.obs.len();
                }
                CmgymStatus::Ok
            }
            Err(e) => from_error(e),
        }
    })
}

/// Simulation clock in seconds.
///
/// # Safety
/// `env` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_time(env: *const CmgymEnv) -> f64 {
    env.as_ref().map_or(0.0, |h| h.env.time())
}

/// Copies the live agent ids, ascending, into `buf`. `len` receives the
/// count; if it exceeds `cap`, nothing is copied and BufferTooSmall returned.
///
/// # Safety
/// `buf` must hold `cap` elements (may be NULL when `cap` is 0); `len` valid.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_agent_ids(
    env: *const CmgymEnv,
    buf: *mut u64,
    cap: usize,
    len: *mut usize,
) -> CmgymStatus {
    guard(|| {
        let (Some(h), false) = (env.as_ref(), len.is_null()) else {
            return fail(CmgymStatus::NullPointer, "env or len is NULL");
        };
        *len = h.obs.len();
        if h.obs.len() > cap {
            return fail(CmgymStatus::BufferTooSmall, format!("{} agents, buffer holds {cap}", h.obs.len()));
        }
        if !h.obs.is_empty() && buf.is_null() {
            return fail(CmgymStatus::NullPointer, "buf is NULL");
        }
        for (i, id) in h.obs.keys().enumerate() {
            *buf.add(i) = *id;
        }
        CmgymStatus::Ok
    })
}

/// Copies agent `id`'s latest observation into `buf`, which must hold
/// `cmgym_env_observation_len` values.
///
/// # Safety
/// `buf` must hold `cap` doubles.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_observation(
    env: *const CmgymEnv,
    id: u64,
    buf: *mut f64,
    cap: usize,
) -> CmgymStatus {
    guard(|| {
        let (Some(h), false) = (env.as_ref(), buf.is_null()) else {
            return fail(CmgymStatus::NullPointer, "env or buf is NULL");
        };
        let Some(o) = h.obs.get(&id) else {
            return fail(CmgymStatus::UnknownAgent, format!("no live agent {id}"));
        };
        if o.0.len() > cap {
            return fail(CmgymStatus::BufferTooSmall, format!("observation has {} values, buffer holds {cap}", o.0.len()));
        }
        ptr::copy_nonoverlapping(o.0.as_ptr(), buf, o.0.len());
        CmgymStatus::Ok
    })
}

/// Advances one decision interval. `actions[i]` (an index into the action
/// list) applies to `ids[i]`; agents not listed take NO_ALERT. `n_results`
/// (may be NULL) receives the number of per-agent results.
///
/// # Safety
/// `ids` and `actions` must hold `n` elements each (may be NULL if `n` is 0).
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_step(
    env: *mut CmgymEnv,
    ids: *const u64,
    actions: *const u32,
    n: usize,
    n_results: *mut usize,
) -> CmgymStatus {
    guard(|| {
        let Some(h) = env.as_mut() else {
            return fail(CmgymStatus::NullPointer, "env is NULL");
        };
        if n > 0 && (ids.is_null() || actions.is_null()) {
            return fail(CmgymStatus::NullPointer, "ids or actions is NULL");
        }
        let mut map = BTreeMap::new();
        for i in 0..n {
            let a = match Action::from_index(*actions.add(i) as usize) {
                Ok(a) => a,
                Err(e) => return fail(CmgymStatus::BadAction, e.to_string()),
            };
            map.insert(*ids.add(i), a);
        }
        let result = match h.env.step(&map) {
            Ok(r) => r,
            Err(e) => return from_error(e),
        };
        h.results.clear();
        for (id, s) in result.agents {
            h.results.push(CmgymAgentResult {
                agent_id: id,
                reward: s.reward,
                done: s.done,
                terminal: terminal_code(s.info.terminal),
                landed_vertiport: s.info.landed_vertiport.map_or(-1, |v| v as i64),
            });
            if s.done {
                h.obs.remove(&id);
            } else {
                h.obs.insert(id, s.observation);
            }
        }
        h.obs.extend(result.spawned);
        if !n_results.is_null() {
            *n_results = h.results.len();
        }
        CmgymStatus::Ok
    })
}

/// Copies the last step's per-agent results, ascending by agent id.
///
/// # Safety
/// `buf` must hold `cap` elements; `len` must be valid.
#[no_mangle]
pub unsafe extern "C" fn cmgym_env_step_results(
    env: *const CmgymEnv,
    buf: *mut CmgymAgentResult,
    cap: usize,
    len: *mut usize,
) -> CmgymStatus {
    guard(|| {
        let (Some(h), false) = (env.as_ref(), len.is_null()) else {
            return fail(CmgymStatus::NullPointer, "env or len is NULL");
        };
        *len = h.results.len();
        if h.results.len() > cap {
            return fail(CmgymStatus::BufferTooSmall, format!("{} results, buffer holds {cap}", h.results.len()));
        }
        if !h.results.is_empty() && buf.is_null() {
            return fail(CmgymStatus::NullPointer, "buf is NULL");
        }
        ptr::copy_nonoverlapping(h.results.as_ptr(), buf, h.results.len());
        CmgymStatus::Ok
    })
}
