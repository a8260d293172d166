//! C ABI over `pinet-core`.
//!
//! Every function returns a [`PinetStatus`]; on failure the message is kept
//! per thread and read with [`pinet_last_error`]. Scenarios are opaque
//! handles created by `pinet_scenario_load*` and released with
//! [`pinet_scenario_free`]. Strings handed out by the library are released
//! with [`pinet_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pinet_core::lp::export_lp;
use pinet_core::scenario::{load_scenario, load_scenario_file, Scenario, ScenarioError};
use pinet_core::{solve_exact, HubTimes, Objective, SolveStatus, SolverOptions};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PinetStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidScenario = 4,
    UnknownObjective = 5,
    Infeasible = 6,
    /// A solve stopped at the node limit before finding any assignment.
    NodeLimit = 7,
    Internal = 8,
}

/// Opaque scenario handle.
pub struct PinetScenario {
    scenario: Scenario,
}

/// Solver settings. Start from [`pinet_solver_options_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct PinetSolverOptions {
    pub per_module_destinations: bool,
    /// 0 searches until optimality is proven.
    pub node_limit: u64,
}

/// KPI values of one solve, in reporting units (modules, hours, currency, hours).
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct PinetKpis {
    pub kpi1: f64,
    pub kpi2: f64,
    pub kpi3: f64,
    pub kpi4: f64,
    pub objective_value: f64,
    /// True when the search finished; false when it stopped at the node limit.
    pub proven_optimal: bool,
    pub explored: u64,
    pub modules: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn fail(status: PinetStatus, message: impl Into<String>) -> PinetStatus {
    let text = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
    status
}

fn guard(f: impl FnOnce() -> PinetStatus) -> PinetStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|_| fail(PinetStatus::Internal, "panic inside pinet"))
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Result<&'a str, PinetStatus> {
    if p.is_null() {
        return Err(fail(PinetStatus::NullArgument, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| fail(PinetStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

fn scenario_error(e: ScenarioError) -> PinetStatus {
    let status = match e {
        ScenarioError::Io { .. } => PinetStatus::Io,
        _ => PinetStatus::InvalidScenario,
    };
    let mut message = e.to_string();
    if let ScenarioError::Invalid(violations) = &e {
        for v in violations {
            message.push_str(&format!("\n{v}"));
        }
    }
    fail(status, message)
}

fn objective(name: &str) -> Result<Objective, PinetStatus> {
    name.parse::<Objective>()
        .ok()
        .or_else(|| Objective::from_configuration(name))
        .ok_or_else(|| fail(PinetStatus::UnknownObjective, format!("unknown objective `{name}`")))
}

fn options(o: *const PinetSolverOptions) -> SolverOptions {
    let mut out = SolverOptions::default();
    if let Some(o) = unsafe { o.as_ref() } {
        out.per_module_destinations = o.per_module_destinations;
        out.node_limit = (o.node_limit > 0).then_some(o.node_limit);
    }
    out
}

fn hand_out(out: *mut *mut PinetScenario, scenario: Scenario) {
    unsafe { *out = Box::into_raw(Box::new(PinetScenario { scenario })) };
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pinet_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next call on the same thread.
#[no_mangle]
pub extern "C" fn pinet_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

#[no_mangle]
pub extern "C" fn pinet_solver_options_default() -> PinetSolverOptions {
    let d = SolverOptions::default();
    PinetSolverOptions { per_module_destinations: d.per_module_destinations, node_limit: d.node_limit.unwrap_or(0) }
}

/// Loads and validates a TOML scenario file.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pinet_scenario_load_file(path: *const c_char, out: *mut *mut PinetScenario) -> PinetStatus {
    guard(|| {
        if out.is_null() {
            return fail(PinetStatus::NullArgument, "out is null");
        }
        let path = match text(path, "path") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_scenario_file(path) {
            Ok(sc) => {
                hand_out(out, sc);
                PinetStatus::Ok
            }
            Err(e) => scenario_error(e),
        }
    })
}

/// Parses and validates a scenario from TOML text.
///
/// # Safety
/// `toml` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn pinet_scenario_load_str(toml: *const c_char, out: *mut *mut PinetScenario) -> PinetStatus {
    guard(|| {
        if out.is_null() {
            return fail(PinetStatus::NullArgument, "out is null");
        }
        let body = match text(toml, "toml") {
            Ok(p) => p,
            Err(s) => return s,
        };
        match load_scenario(body) {
            Ok(sc) => {
                hand_out(out, sc);
                PinetStatus::Ok
            }
            Err(e) => scenario_error(e),
        }
    })
}

/// # Safety
/// `scenario` must be null or a handle from `pinet_scenario_load*` not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pinet_scenario_free(scenario: *mut PinetScenario) {
    if !scenario.is_null() {
        drop(Box::from_raw(scenario));
    }
}

/// Number of modules over all shipments.
///
/// # Safety
/// `scenario` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn pinet_scenario_module_count(scenario: *const PinetScenario) -> usize {
    scenario.as_ref().map_or(0, |s| s.scenario.network.module_total())
}

/// Solves the routing problem for `objective` ("J1".."J4" or "C1".."C4") at
/// nominal hub times. `options` may be null for the defaults.
///
/// # Safety
/// `scenario` must be a live handle, `objective` a NUL-terminated string,
/// `options` null or readable, and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn pinet_solve(
    scenario: *const PinetScenario,
    objective_name: *const c_char,
    options_ptr: *const PinetSolverOptions,
    out: *mut PinetKpis,
) -> PinetStatus {
    guard(|| {
        let (Some(sc), false) = (scenario.as_ref(), out.is_null()) else {
            return fail(PinetStatus::NullArgument, "scenario or out is null");
        };
        let obj = match text(objective_name, "objective").and_then(objective) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let net = &sc.scenario.network;
        let sol = match solve_exact(net, obj, &HubTimes::nominal(net), &options(options_ptr)) {
            Ok(s) => s,
            Err(e) => return fail(PinetStatus::Internal, e.to_string()),
        };
        if sol.choices.is_empty() && net.module_total() > 0 {
            return match sol.status {
                SolveStatus::NodeLimit => fail(PinetStatus::NodeLimit, "node limit reached before any assignment"),
                _ => fail(PinetStatus::Infeasible, format!("no feasible assignment for {obj}")),
            };
        }
        let [kpi1, kpi2, kpi3, kpi4] = sol.kpis.values();
        *out = PinetKpis {
            kpi1,
            kpi2,
            kpi3,
            kpi4,
            objective_value: sol.objective_f64(),
            proven_optimal: sol.status == SolveStatus::Optimal,
            explored: sol.explored,
            modules: sol.choices.len(),
        };
        PinetStatus::Ok
    })
}

/// Writes the mixed-integer model for `objective` in LP format into a new
/// string owned by the caller.
///
/// # Safety
/// Same as [`pinet_solve`]; `out` receives a string for [`pinet_string_free`].
#[no_mangle]
pub unsafe extern "C" fn pinet_export_lp(
    scenario: *const PinetScenario,
    objective_name: *const c_char,
    options_ptr: *const PinetSolverOptions,
    out: *mut *mut c_char,
) -> PinetStatus {
    guard(|| {
        let (Some(sc), false) = (scenario.as_ref(), out.is_null()) else {
            return fail(PinetStatus::NullArgument, "scenario or out is null");
        };
        let obj = match text(objective_name, "objective").and_then(objective) {
            Ok(o) => o,
            Err(s) => return s,
        };
        let net = &sc.scenario.network;
        match export_lp(net, obj, &HubTimes::nominal(net), &options(options_ptr)) {
            Ok(lp) => match CString::new(lp) {
                Ok(c) => {
                    *out = c.into_raw();
                    PinetStatus::Ok
                }
                Err(_) => fail(PinetStatus::Internal, "LP text holds a NUL byte"),
            },
            Err(e) => fail(PinetStatus::InvalidScenario, e.to_string()),
        }
    })
}

/// # Safety
/// `s` must be null or a string returned by this library, not yet freed.
#[no_mangle]
pub unsafe extern "C" fn pinet_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
