//! C ABI over the solver: script/theory parsing, model counting, solution
//! files and the partitioned counting procedure, behind an opaque handle.
//!
//! Conventions: every function returns a [`TbaStatus`]; results travel
//! through out-parameters. Strings returned to the caller are heap
//! allocations to release with [`tba_string_free`]; handles with
//! [`tba_solver_free`]. On any non-OK status, [`tba_last_error_message`]
//! returns a description of the most recent error on the calling thread.
//! The header `include/tba.h` is generated at build time.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tba::bitengine::{EngineOptions, MAX_SUPPORTED_VARS};
use tba::boolcore::Assignment;
use tba::countlab::{tba_count, CountError};
use tba::fol::PropTheory;
use tba::shell::{
    expand_script, looks_like_theory, parse_script, parse_theory, Backend, ShellError,
    SolvePipeline,
};

/// Result of every FFI call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum TbaStatus {
    /// Success.
    Ok = 0,
    /// A required pointer argument was null.
    NullPointer = 1,
    /// Input text was not valid UTF-8.
    InvalidUtf8 = 2,
    /// The input failed to parse or was otherwise malformed.
    ParseError = 3,
    /// The free-variable feasibility cap was exceeded.
    CapExceeded = 4,
    /// Filesystem failure while writing solutions.
    IoError = 5,
    /// Unexpected internal failure.
    InternalError = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).ok();
    });
}

fn status_of(err: &ShellError) -> TbaStatus {
    match err.exit_code() {
        2 => TbaStatus::CapExceeded,
        _ => match err {
            ShellError::Io(_) => TbaStatus::IoError,
            ShellError::Parse(_) | ShellError::BadInput(_) | ShellError::Usage(_) => {
                TbaStatus::ParseError
            }
            _ => TbaStatus::InternalError,
        },
    }
}

fn fail(err: &ShellError) -> TbaStatus {
    set_error(&err.to_string());
    status_of(err)
}

/// Opaque solver handle: a prepared problem plus engine settings.
pub struct TbaSolver {
    pipeline: SolvePipeline,
    theory: Option<(PropTheory, Option<tba::countlab::GoodPartitionSpec>)>,
    opts: EngineOptions,
    naive: bool,
}

fn guarded<F: FnOnce() -> TbaStatus>(f: F) -> TbaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            TbaStatus::InternalError
        }
    }
}

unsafe fn text_arg<'a>(ptr: *const c_char) -> Result<&'a str, TbaStatus> {
    if ptr.is_null() {
        set_error("null text pointer");
        return Err(TbaStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        set_error("text is not valid UTF-8");
        TbaStatus::InvalidUtf8
    })
}

fn build_solver(text: &str) -> Result<TbaSolver, ShellError> {
    if looks_like_theory(text) {
        let file = parse_theory(text)?;
        let (theory, spec) = file.ground()?;
        let pipeline = SolvePipeline::new(
            &theory.theta(),
            &theory.assumptions,
            theory.letters().to_vec(),
        )?;
        Ok(TbaSolver {
            pipeline,
            theory: Some((theory, spec)),
            opts: EngineOptions::default(),
            naive: false,
        })
    } else {
        let script = parse_script(text)?;
        let (theta, assumptions, namespace) = expand_script(&script)?;
        let pipeline = SolvePipeline::new(&theta, &assumptions, namespace.letters())?;
        Ok(TbaSolver {
            pipeline,
            theory: None,
            opts: EngineOptions::default(),
            naive: false,
        })
    }
}

/// Parses a script or theory file (auto-detected) into a solver handle.
///
/// # Safety
/// `text` must be a valid NUL-terminated string; `out` must be a valid
/// pointer to receive the handle.
#[no_mangle]
pub unsafe extern "C" fn tba_solver_new(
    text: *const c_char,
    out: *mut *mut TbaSolver,
) -> TbaStatus {
    guarded(|| {
        if out.is_null() {
            set_error("null output pointer");
            return TbaStatus::NullPointer;
        }
        let text = match text_arg(text) {
            Ok(t) => t,
            Err(status) => return status,
        };
        match build_solver(text) {
            Ok(solver) => {
                *out = Box::into_raw(Box::new(solver));
                TbaStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Sets the log2 chunk size used by the engine.
///
/// # Safety
/// `solver` must be a live handle from [`tba_solver_new`].
#[no_mangle]
pub unsafe extern "C" fn tba_solver_set_chunk_bits(solver: *mut TbaSolver, bits: u32) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        solver.opts.chunk_log2 = bits.min(28);
        TbaStatus::Ok
    })
}

/// Sets the worker count; 0 uses all cores.
///
/// # Safety
/// `solver` must be a live handle from [`tba_solver_new`].
#[no_mangle]
pub unsafe extern "C" fn tba_solver_set_jobs(solver: *mut TbaSolver, jobs: u32) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        solver.opts.workers = jobs as usize;
        TbaStatus::Ok
    })
}

/// Sets the feasibility cap on free variables (at most 40).
///
/// # Safety
/// `solver` must be a live handle from [`tba_solver_new`].
#[no_mangle]
pub unsafe extern "C" fn tba_solver_set_max_vars(solver: *mut TbaSolver, cap: u32) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        if cap == 0 || cap > MAX_SUPPORTED_VARS {
            set_error("cap must be between 1 and 40");
            return TbaStatus::ParseError;
        }
        solver.opts.max_vars = cap;
        TbaStatus::Ok
    })
}

/// Selects the naive oracle backend (nonzero) or the word-parallel engine.
///
/// # Safety
/// `solver` must be a live handle from [`tba_solver_new`].
#[no_mangle]
pub unsafe extern "C" fn tba_solver_set_naive(solver: *mut TbaSolver, naive: u32) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        solver.naive = naive != 0;
        TbaStatus::Ok
    })
}

/// Number of letters left free after assumptions.
///
/// # Safety
/// `solver` must be a live handle from [`tba_solver_new`].
#[no_mangle]
pub unsafe extern "C" fn tba_solver_free_letters(solver: *const TbaSolver) -> u32 {
    match solver.as_ref() {
        Some(s) => s.pipeline.free_letters().len() as u32,
        None => 0,
    }
}

fn backend(solver: &TbaSolver) -> Backend {
    if solver.naive {
        Backend::Naive
    } else {
        Backend::BitParallel
    }
}

/// Counts the models; the count is returned as a decimal string to release
/// with [`tba_string_free`].
///
/// # Safety
/// `solver` must be a live handle; `count_out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn tba_solver_count(
    solver: *mut TbaSolver,
    count_out: *mut *mut c_char,
) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        if count_out.is_null() {
            set_error("null output pointer");
            return TbaStatus::NullPointer;
        }
        match solver.pipeline.count(&solver.opts, backend(solver)) {
            Ok((count, _)) => {
                let s = CString::new(count.to_string()).expect("digits");
                *count_out = s.into_raw();
                TbaStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Writes the solution file to `path` (same format as the CLI).
///
/// # Safety
/// `solver` must be a live handle; `path` a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tba_solver_write_solutions(
    solver: *mut TbaSolver,
    path: *const c_char,
) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        let path = match text_arg(path) {
            Ok(p) => p,
            Err(status) => return status,
        };
        let run = || -> Result<(), ShellError> {
            let file = std::fs::File::create(path)?;
            let mut out = std::io::BufWriter::new(file);
            solver
                .pipeline
                .write_solutions(&solver.opts, backend(solver), &mut out, |_| Ok(()))?;
            use std::io::Write;
            out.flush()?;
            Ok(())
        };
        match run() {
            Ok(()) => TbaStatus::Ok,
            Err(e) => fail(&e),
        }
    })
}

/// Runs the partitioned counting procedure of a theory handle; labeled and
/// unlabeled totals come back as decimal strings.
///
/// # Safety
/// `solver` must be a live handle built from a theory file with a partition
/// block; the out pointers must be valid.
#[no_mangle]
pub unsafe extern "C" fn tba_solver_count_partitions(
    solver: *mut TbaSolver,
    labeled_out: *mut *mut c_char,
    unlabeled_out: *mut *mut c_char,
) -> TbaStatus {
    guarded(|| {
        let Some(solver) = solver.as_mut() else {
            set_error("null solver");
            return TbaStatus::NullPointer;
        };
        if labeled_out.is_null() || unlabeled_out.is_null() {
            set_error("null output pointer");
            return TbaStatus::NullPointer;
        }
        let Some((theory, Some(spec))) = solver.theory.as_ref() else {
            set_error("handle was not built from a theory file with a partition block");
            return TbaStatus::ParseError;
        };
        match tba_count(theory, spec, &Assignment::new(), &solver.opts) {
            Ok(report) => {
                *labeled_out = CString::new(report.labeled_total.to_string())
                    .expect("digits")
                    .into_raw();
                *unlabeled_out = CString::new(report.unlabeled_total.to_string())
                    .expect("digits")
                    .into_raw();
                TbaStatus::Ok
            }
            Err(CountError::PartitionCapExceeded { .. }) => {
                set_error("a partition exceeded the feasibility cap");
                TbaStatus::CapExceeded
            }
            Err(e) => {
                set_error(&e.to_string());
                TbaStatus::InternalError
            }
        }
    })
}

/// The most recent error message on this thread, as a fresh allocation to
/// release with [`tba_string_free`]; null when no error was recorded.
#[no_mangle]
pub extern "C" fn tba_last_error_message() -> *mut c_char {
    LAST_ERROR.with(|slot| match &*slot.borrow() {
        Some(msg) => msg.clone().into_raw(),
        None => ptr::null_mut(),
    })
}

/// Releases a string returned by this library.
///
/// # Safety
/// `s` must have been returned by a tba function and not freed before.
#[no_mangle]
pub unsafe extern "C" fn tba_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Releases a solver handle.
///
/// # Safety
/// `solver` must have been returned by [`tba_solver_new`] and not freed
/// before.
#[no_mangle]
pub unsafe extern "C" fn tba_solver_free(solver: *mut TbaSolver) {
    if !solver.is_null() {
        drop(Box::from_raw(solver));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(text: &str) -> CString {
        CString::new(text).unwrap()
    }

    unsafe fn take_string(p: *mut c_char) -> String {
        let s = CStr::from_ptr(p).to_str().unwrap().to_string();
        tba_string_free(p);
        s
    }

    #[test]
    fn script_count_round_trip() {
        unsafe {
            let text = c("e1 = x ^ y ^ ~z ^ u\ne2 = ~((x | y & z) ^ u)\n");
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(tba_solver_new(text.as_ptr(), &mut solver), TbaStatus::Ok);
            assert_eq!(tba_solver_free_letters(solver), 4);
            let mut count: *mut c_char = ptr::null_mut();
            assert_eq!(tba_solver_count(solver, &mut count), TbaStatus::Ok);
            assert_eq!(take_string(count), "3");
            tba_solver_free(solver);
        }
    }

    #[test]
    fn parse_errors_surface() {
        unsafe {
            let text = c("f = A[i:S] p(i)\n");
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(
                tba_solver_new(text.as_ptr(), &mut solver),
                TbaStatus::ParseError
            );
            let msg = tba_last_error_message();
            assert!(!msg.is_null());
            let msg = take_string(msg);
            assert!(msg.contains("not defined"), "{msg}");
        }
    }

    #[test]
    fn null_arguments_are_rejected() {
        unsafe {
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(
                tba_solver_new(ptr::null(), &mut solver),
                TbaStatus::NullPointer
            );
            assert_eq!(
                tba_solver_count(ptr::null_mut(), ptr::null_mut()),
                TbaStatus::NullPointer
            );
        }
    }

    #[test]
    fn invalid_utf8_is_rejected() {
        unsafe {
            let bytes = [0xFFu8, 0xFE, 0x00];
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(
                tba_solver_new(bytes.as_ptr() as *const c_char, &mut solver),
                TbaStatus::InvalidUtf8
            );
        }
    }

    #[test]
    fn cap_exceeded_status() {
        unsafe {
            // 6 of the 36 letters get killed; 30 free letters over cap 8.
            let text = c("\
n= 6
S= range(n)
S2= perm(range(n),2)
f1= A[i,j:S2] (~p(i,j) | ~p(j,i))
assumptions= {p(i,i): 1 for i in S}
");
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(tba_solver_new(text.as_ptr(), &mut solver), TbaStatus::Ok);
            assert_eq!(tba_solver_set_max_vars(solver, 8), TbaStatus::Ok);
            let mut count: *mut c_char = ptr::null_mut();
            assert_eq!(tba_solver_count(solver, &mut count), TbaStatus::CapExceeded);
            tba_solver_free(solver);
        }
    }

    #[test]
    fn theory_partition_counts() {
        unsafe {
            let text = c(include_str!(
                "../../tba/tests/fixtures/bounded_orders_n4.thy"
            ));
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(tba_solver_new(text.as_ptr(), &mut solver), TbaStatus::Ok);
            let mut labeled: *mut c_char = ptr::null_mut();
            let mut unlabeled: *mut c_char = ptr::null_mut();
            assert_eq!(
                tba_solver_count_partitions(solver, &mut labeled, &mut unlabeled),
                TbaStatus::Ok
            );
            assert_eq!(take_string(labeled), "36");
            assert_eq!(take_string(unlabeled), "2");
            tba_solver_free(solver);
        }
    }

    #[test]
    fn write_solutions_matches_cli_format() {
        unsafe {
            let text = c("e1 = x | y\n");
            let mut solver: *mut TbaSolver = ptr::null_mut();
            assert_eq!(tba_solver_new(text.as_ptr(), &mut solver), TbaStatus::Ok);
            let dir = std::env::temp_dir().join("tba_ffi_test_out.txt");
            let path = c(dir.to_str().unwrap());
            assert_eq!(
                tba_solver_write_solutions(solver, path.as_ptr()),
                TbaStatus::Ok
            );
            let text = std::fs::read_to_string(&dir).unwrap();
            assert_eq!(
                text,
                "# tba-solutions v1\n# letters: x y\n# free: x y\n# count: 3\n01\n10\n11\n"
            );
            std::fs::remove_file(&dir).ok();
            tba_solver_free(solver);
        }
    }
}
