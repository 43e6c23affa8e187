//! C ABI over `netbandit`.
//!
//! Every fallible function returns an [`NbStatus`] and writes its result
//! through an out-pointer. On failure a description is kept per thread and
//! can be read with [`nb_last_error`]. Handles are opaque; each `*_new` or
//! loader has a matching `*_free`. Panics never cross the boundary; they are
//! reported as [`NbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;
use std::sync::Arc;

use netbandit::config::{parse_config, parse_config_str};
use netbandit::harness::{run_many, AggregateResult, ExperimentConfig};
use netbandit::instances::{generate_circulant, generate_mixed_signal, SignalModelParams};
use netbandit::model::{instantaneous_regret, oracle_action, ActionVector, InterferenceInstance};
use netbandit::output::emit_csv;

/// Status code returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Config = 3,
    Runtime = 4,
    Io = 5,
    BufferTooSmall = 6,
    Panic = 7,
}

/// A ground-truth interference matrix.
pub struct NbInstance {
    inner: Arc<InterferenceInstance>,
}

/// A list of experiment cells, one per (experiment, policy).
pub struct NbExperiment {
    cells: Vec<ExperimentConfig>,
}

/// Aggregated regret curves of one cell.
pub struct NbResult {
    inner: AggregateResult,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    let c = CString::new(msg).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Failure(NbStatus, String);

type FfiResult<T> = Result<T, Failure>;

fn fail<T>(status: NbStatus, msg: impl Into<String>) -> FfiResult<T> {
    Err(Failure(status, msg.into()))
}

fn guard(f: impl FnOnce() -> FfiResult<()>) -> NbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            NbStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref()
        .map_or_else(|| fail(NbStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn borrow_mut<'a, T>(p: *mut T, what: &str) -> FfiResult<&'a mut T> {
    p.as_mut()
        .map_or_else(|| fail(NbStatus::NullPointer, format!("{what} is null")), Ok)
}

unsafe fn c_str<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return fail(NbStatus::NullPointer, format!("{what} is null"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| fail(NbStatus::InvalidArgument, format!("{what} is not valid UTF-8")))
}

unsafe fn copy_out(src: &[f64], buf: *mut f64, len: usize) -> FfiResult<()> {
    if buf.is_null() {
        return fail(NbStatus::NullPointer, "buffer is null");
    }
    if len < src.len() {
        return fail(
            NbStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", src.len()),
        );
    }
    ptr::copy_nonoverlapping(src.as_ptr(), buf, src.len());
    Ok(())
}

unsafe fn put<T>(out: *mut T, v: T) -> FfiResult<()> {
    if out.is_null() {
        return fail(NbStatus::NullPointer, "output pointer is null");
    }
    out.write(v);
    Ok(())
}

/// Message of the last failed call on this thread, or null. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn nb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn nb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

fn new_instance(inst: InterferenceInstance) -> *mut NbInstance {
    Box::into_raw(Box::new(NbInstance { inner: Arc::new(inst) }))
}

/// Random mixed-signal instance.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_mixed_signal(
    d: usize,
    beta: f64,
    s0: f64,
    seed: u64,
    out: *mut *mut NbInstance,
) -> NbStatus {
    guard(|| {
        if out.is_null() {
            return fail(NbStatus::NullPointer, "out is null");
        }
        let inst = generate_mixed_signal(&SignalModelParams::new(d, beta, s0, seed))
            .or_else(|e| fail(NbStatus::InvalidArgument, e.to_string()))?;
        put(out, new_instance(inst))
    })
}

/// Circulant instance with `s` entries of `delta` per row.
///
/// # Safety
/// `out` must be null or valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_circulant(d: usize, s: usize, delta: f64, out: *mut *mut NbInstance) -> NbStatus {
    guard(|| {
        if out.is_null() {
            return fail(NbStatus::NullPointer, "out is null");
        }
        let inst = generate_circulant(d, s, delta).or_else(|e| fail(NbStatus::InvalidArgument, e.to_string()))?;
        put(out, new_instance(inst))
    })
}

/// Instance from a row-major `d x d` effect matrix.
///
/// # Safety
/// `effects` must point to `d * d` readable doubles; `out` must be null or
/// valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_from_effects(d: usize, effects: *const f64, out: *mut *mut NbInstance) -> NbStatus {
    guard(|| {
        if effects.is_null() || out.is_null() {
            return fail(NbStatus::NullPointer, "effects or out is null");
        }
        let n = d
            .checked_mul(d)
            .map_or_else(|| fail(NbStatus::InvalidArgument, "d * d overflows"), Ok)?;
        let rows: Vec<Vec<f64>> = std::slice::from_raw_parts(effects, n)
            .chunks(d.max(1))
            .map(<[f64]>::to_vec)
            .collect();
        let inst = InterferenceInstance::from_rows(&rows).or_else(|e| fail(NbStatus::InvalidArgument, e.to_string()))?;
        put(out, new_instance(inst))
    })
}

/// # Safety
/// `inst` must be null or a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_dim(inst: *const NbInstance, out: *mut usize) -> NbStatus {
    guard(|| put(out, borrow(inst, "instance")?.inner.dim()))
}

/// Copies the column sums `theta` into `buf` (length at least `d`).
///
/// # Safety
/// `inst` must be null or a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_theta(inst: *const NbInstance, buf: *mut f64, len: usize) -> NbStatus {
    guard(|| copy_out(&borrow(inst, "instance")?.inner.theta().0, buf, len))
}

/// Writes the optimal action `sign(theta)` (entries +1/-1) into `buf`.
///
/// # Safety
/// `inst` must be null or a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_oracle_action(inst: *const NbInstance, buf: *mut i8, len: usize) -> NbStatus {
    guard(|| {
        let inst = borrow(inst, "instance")?;
        let a = oracle_action(inst.inner.theta());
        if buf.is_null() {
            return fail(NbStatus::NullPointer, "buffer is null");
        }
        if len < a.len() {
            return fail(NbStatus::BufferTooSmall, format!("buffer holds {len} values, {} needed", a.len()));
        }
        ptr::copy_nonoverlapping(a.as_slice().as_ptr(), buf, a.len());
        Ok(())
    })
}

/// Instantaneous regret of playing `action` (length `len`, entries +1/-1).
///
/// # Safety
/// `inst` must be null or a live handle; `action` readable for `len` values;
/// `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_regret(
    inst: *const NbInstance,
    action: *const i8,
    len: usize,
    out: *mut f64,
) -> NbStatus {
    guard(|| {
        let inst = borrow(inst, "instance")?;
        if action.is_null() {
            return fail(NbStatus::NullPointer, "action is null");
        }
        if len != inst.inner.dim() {
            return fail(
                NbStatus::InvalidArgument,
                format!("action has length {len}, instance dimension is {}", inst.inner.dim()),
            );
        }
        let a = ActionVector::new(std::slice::from_raw_parts(action, len).to_vec())
            .or_else(|e| fail(NbStatus::InvalidArgument, e.to_string()))?;
        put(out, instantaneous_regret(&inst.inner, &a))
    })
}

/// # Safety
/// `inst` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn nb_instance_free(inst: *mut NbInstance) {
    if !inst.is_null() {
        drop(Box::from_raw(inst));
    }
}

fn new_experiment(cells: Vec<ExperimentConfig>) -> *mut NbExperiment {
    Box::into_raw(Box::new(NbExperiment { cells }))
}

/// Loads an experiment file or preset name.
///
/// # Safety
/// `path_or_preset` must be null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_experiment_load(path_or_preset: *const c_char, out: *mut *mut NbExperiment) -> NbStatus {
    guard(|| {
        if out.is_null() {
            return fail(NbStatus::NullPointer, "out is null");
        }
        let name = c_str(path_or_preset, "path_or_preset")?;
        let cells = parse_config(name).or_else(|e| fail(NbStatus::Config, e.to_string()))?;
        put(out, new_experiment(cells))
    })
}

/// Parses experiment TOML text; relative paths resolve against the working
/// directory.
///
/// # Safety
/// `text` must be null or NUL-terminated; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_experiment_parse(text: *const c_char, out: *mut *mut NbExperiment) -> NbStatus {
    guard(|| {
        if out.is_null() {
            return fail(NbStatus::NullPointer, "out is null");
        }
        let text = c_str(text, "text")?;
        let cells = parse_config_str(text, "<string>", Path::new(""))
            .or_else(|e| fail(NbStatus::Config, e.to_string()))?;
        put(out, new_experiment(cells))
    })
}

/// Number of cells.
///
/// # Safety
/// `exp` must be null or a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_experiment_cell_count(exp: *const NbExperiment, out: *mut usize) -> NbStatus {
    guard(|| put(out, borrow(exp, "experiment")?.cells.len()))
}

/// Overrides replicate count, horizon and base seed of every cell. A zero
/// `runs` or `horizon` leaves that field unchanged; so does a null `seed`.
///
/// # Safety
/// `exp` must be null or a live handle; `seed` null or readable.
#[no_mangle]
pub unsafe extern "C" fn nb_experiment_override(
    exp: *mut NbExperiment,
    runs: usize,
    horizon: usize,
    seed: *const u64,
) -> NbStatus {
    guard(|| {
        let exp = borrow_mut(exp, "experiment")?;
        let seed = seed.as_ref().copied();
        for c in &mut exp.cells {
            if runs > 0 {
                c.n_runs = runs;
            }
            if horizon > 0 {
                c.horizon = horizon;
            }
            if let Some(s) = seed {
                c.base_seed = s;
            }
        }
        Ok(())
    })
}

/// Runs cell `index` and returns its aggregated result.
///
/// # Safety
/// `exp` must be null or a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_experiment_run(exp: *const NbExperiment, index: usize, out: *mut *mut NbResult) -> NbStatus {
    guard(|| {
        if out.is_null() {
            return fail(NbStatus::NullPointer, "out is null");
        }
        let exp = borrow(exp, "experiment")?;
        let cell = exp.cells.get(index).map_or_else(
            || fail(NbStatus::InvalidArgument, format!("cell {index} out of range ({} cells)", exp.cells.len())),
            Ok,
        )?;
        let r = run_many(cell).or_else(|e| fail(NbStatus::Runtime, e.to_string()))?;
        put(out, Box::into_raw(Box::new(NbResult { inner: r })))
    })
}

/// # Safety
/// `exp` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn nb_experiment_free(exp: *mut NbExperiment) {
    if !exp.is_null() {
        drop(Box::from_raw(exp));
    }
}

/// Number of rounds in each curve.
///
/// # Safety
/// `res` must be null or a live handle; `out` valid for writes.
#[no_mangle]
pub unsafe extern "C" fn nb_result_horizon(res: *const NbResult, out: *mut usize) -> NbStatus {
    guard(|| put(out, borrow(res, "result")?.inner.horizon()))
}

/// Mean cumulative regret per round.
///
/// # Safety
/// `res` must be null or a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nb_result_mean(res: *const NbResult, buf: *mut f64, len: usize) -> NbStatus {
    guard(|| copy_out(&borrow(res, "result")?.inner.mean, buf, len))
}

/// Standard deviation of cumulative regret per round.
///
/// # Safety
/// `res` must be null or a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nb_result_std(res: *const NbResult, buf: *mut f64, len: usize) -> NbStatus {
    guard(|| copy_out(&borrow(res, "result")?.inner.std, buf, len))
}

/// Mean per-individual cumulative regret per round.
///
/// # Safety
/// `res` must be null or a live handle; `buf` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn nb_result_per_individual(res: *const NbResult, buf: *mut f64, len: usize) -> NbStatus {
    guard(|| copy_out(&borrow(res, "result")?.inner.per_individual_mean, buf, len))
}

/// Writes the result as CSV, keeping every `stride`-th round.
///
/// # Safety
/// `res` must be null or a live handle; `path` null or NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn nb_result_write_csv(res: *const NbResult, path: *const c_char, stride: usize) -> NbStatus {
    guard(|| {
        let res = borrow(res, "result")?;
        let path = c_str(path, "path")?;
        emit_csv(std::slice::from_ref(&res.inner), Path::new(path), stride)
            .or_else(|e| fail(NbStatus::Io, e.to_string()))
    })
}

/// # Safety
/// `res` must be null or a handle not freed before.
#[no_mangle]
pub unsafe extern "C" fn nb_result_free(res: *mut NbResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}
