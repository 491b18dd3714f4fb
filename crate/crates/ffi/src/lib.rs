//! C ABI over the beliefdiag engine.
//!
//! Diagrams and reports are opaque handles owned by the caller and released
//! with their `_free` function. Every call returns a [`BdStatus`]; on
//! failure [`bd_last_error_message`] describes the error for the calling
//! thread. Strings returned through `char **` are released with
//! [`bd_string_free`]. No panic crosses the boundary.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use beliefdiag::marginals::MarginalsError;
use beliefdiag::netio::{export_dot, load_network, write_network};
use beliefdiag::scheduler::{run, RunOptions, SchedulerError, Strategy};
use beliefdiag::transform::{EvidenceAssertion, TransformError};
use beliefdiag::{BeliefDiagram, NodeId, PosteriorReport};

/// Result of every call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BdStatus {
    Ok = 0,
    NullArgument = 1,
    InvalidUtf8 = 2,
    ParseError = 3,
    InvalidDiagram = 4,
    UnknownNode = 5,
    UnknownOutcome = 6,
    OutOfRange = 7,
    ImpossibleEvidence = 8,
    NotSinglyConnected = 9,
    NotAForest = 10,
    InferenceError = 11,
    Panic = 12,
}

/// Evidence propagation followed by probability propagation.
pub const BD_STRATEGY_BATCH: u32 = 0;
/// Message passing on a forest, one assertion at a time.
pub const BD_STRATEGY_MESSAGE: u32 = 1;
/// Message passing on a forest, all assertions at once.
pub const BD_STRATEGY_PRIORITY: u32 = 2;

/// A parsed diagram plus the evidence asserted on it so far.
pub struct BdDiagram {
    diagram: BeliefDiagram,
    evidence: Vec<EvidenceAssertion>,
}

/// Posterior marginals from [`bd_query`].
pub struct BdReport {
    report: PosteriorReport,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn fail(status: BdStatus, msg: impl Into<String>) -> BdStatus {
    set_error(msg);
    status
}

fn guard(f: impl FnOnce() -> BdStatus) -> BdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => {
            if status == BdStatus::Ok {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => fail(BdStatus::Panic, "internal error"),
    }
}

unsafe fn c_str<'a>(p: *const c_char) -> Result<&'a str, BdStatus> {
    if p.is_null() {
        return Err(fail(BdStatus::NullArgument, "null string argument"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| fail(BdStatus::InvalidUtf8, "string is not valid UTF-8"))
}

fn out_string(s: String, out: *mut *mut c_char) -> BdStatus {
    match CString::new(s) {
        Ok(c) => {
            unsafe { *out = c.into_raw() };
            BdStatus::Ok
        }
        Err(_) => fail(BdStatus::InferenceError, "output contains a NUL byte"),
    }
}

fn scheduler_status(e: &SchedulerError) -> BdStatus {
    match e {
        SchedulerError::NotAForest => BdStatus::NotAForest,
        SchedulerError::Transform(TransformError::ImpossibleEvidence)
        | SchedulerError::Marginals(MarginalsError::ImpossibleEvidence) => {
            BdStatus::ImpossibleEvidence
        }
        SchedulerError::Marginals(MarginalsError::NotSinglyConnected) => {
            BdStatus::NotSinglyConnected
        }
        _ => BdStatus::InferenceError,
    }
}

/// Last error message on this thread, or NULL after a successful call. The
/// pointer stays valid until the next call on this thread.
#[no_mangle]
pub extern "C" fn bd_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Parses a network document. Evidence in the document's evidence block is
/// recorded on the handle.
///
/// # Safety
/// `text` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_parse(
    text: *const c_char,
    out: *mut *mut BdDiagram,
) -> BdStatus {
    guard(|| {
        if out.is_null() {
            return fail(BdStatus::NullArgument, "null output pointer");
        }
        *out = ptr::null_mut();
        let src = match c_str(text) {
            Ok(s) => s,
            Err(status) => return status,
        };
        let loaded = match load_network(src) {
            Ok(l) => l,
            Err(e) => return fail(BdStatus::ParseError, e.to_string()),
        };
        if let Some(diag) = loaded.diagram.validate().first() {
            return fail(
                BdStatus::InvalidDiagram,
                format!("{}: {}", loaded.diagram.name(diag.node), diag.kind),
            );
        }
        *out = Box::into_raw(Box::new(BdDiagram {
            diagram: loaded.diagram,
            evidence: loaded.evidence,
        }));
        BdStatus::Ok
    })
}

/// Releases a diagram. NULL is ignored.
///
/// # Safety
/// `d` must come from [`bd_diagram_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_free(d: *mut BdDiagram) {
    if !d.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(d))));
    }
}

/// # Safety
/// `d` must be a live diagram handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_node_count(d: *const BdDiagram, out: *mut usize) -> BdStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        *out = d.diagram.len();
        BdStatus::Ok
    })
}

/// Index of the node called `name`; indices run from 0 in declaration order.
///
/// # Safety
/// `d` must be a live diagram handle, `name` a NUL-terminated string and
/// `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_node_index(
    d: *const BdDiagram,
    name: *const c_char,
    out: *mut usize,
) -> BdStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        let name = match c_str(name) {
            Ok(s) => s,
            Err(status) => return status,
        };
        match d.diagram.id_of(name) {
            Ok(id) => {
                *out = id.0;
                BdStatus::Ok
            }
            Err(e) => fail(BdStatus::UnknownNode, e.to_string()),
        }
    })
}

/// Number of outcomes of node `node`.
///
/// # Safety
/// `d` must be a live diagram handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_outcome_count(
    d: *const BdDiagram,
    node: usize,
    out: *mut usize,
) -> BdStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        match d.diagram.node(NodeId(node)) {
            Ok(n) => {
                *out = n.card();
                BdStatus::Ok
            }
            Err(e) => fail(BdStatus::OutOfRange, e.to_string()),
        }
    })
}

/// Records the assertion `node = outcome` for later queries.
///
/// # Safety
/// `d` must be a live diagram handle; `node` and `outcome` NUL-terminated
/// strings.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_observe(
    d: *mut BdDiagram,
    node: *const c_char,
    outcome: *const c_char,
) -> BdStatus {
    guard(|| {
        let Some(d) = d.as_mut() else {
            return fail(BdStatus::NullArgument, "null diagram");
        };
        let (node, outcome) = match (c_str(node), c_str(outcome)) {
            (Ok(n), Ok(o)) => (n, o),
            (Err(s), _) | (_, Err(s)) => return s,
        };
        let id = match d.diagram.id_of(node) {
            Ok(id) => id,
            Err(e) => return fail(BdStatus::UnknownNode, e.to_string()),
        };
        let Some(idx) = d
            .diagram
            .node(id)
            .ok()
            .and_then(|n| n.outcome_index(outcome))
        else {
            return fail(
                BdStatus::UnknownOutcome,
                format!("node `{node}` has no outcome `{outcome}`"),
            );
        };
        d.evidence.retain(|e| e.node != id);
        d.evidence.push(EvidenceAssertion::new(id, idx));
        BdStatus::Ok
    })
}

/// Forgets every recorded assertion.
///
/// # Safety
/// `d` must be a live diagram handle.
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_clear_evidence(d: *mut BdDiagram) -> BdStatus {
    guard(|| {
        let Some(d) = d.as_mut() else {
            return fail(BdStatus::NullArgument, "null diagram");
        };
        d.evidence.clear();
        BdStatus::Ok
    })
}

/// Posterior marginals given the recorded evidence. The diagram itself is
/// left unchanged. `strategy` is one of the `BD_STRATEGY_*` constants.
///
/// # Safety
/// `d` must be a live diagram handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_query(
    d: *const BdDiagram,
    strategy: u32,
    allow_fallback: bool,
    out: *mut *mut BdReport,
) -> BdStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        *out = ptr::null_mut();
        let strategy = match strategy {
            BD_STRATEGY_BATCH => Strategy::Batch,
            BD_STRATEGY_MESSAGE => Strategy::MessagePassing,
            BD_STRATEGY_PRIORITY => Strategy::Priority,
            other => return fail(BdStatus::OutOfRange, format!("unknown strategy {other}")),
        };
        let opts = RunOptions {
            allow_fallback,
            ..RunOptions::default()
        };
        let mut work = d.diagram.clone();
        match run(strategy, &mut work, &d.evidence, &opts) {
            Ok(outcome) => {
                *out = Box::into_raw(Box::new(BdReport {
                    report: outcome.report,
                }));
                BdStatus::Ok
            }
            Err(e) => fail(scheduler_status(&e), e.to_string()),
        }
    })
}

/// Posterior probability of outcome `outcome` of node `node`.
///
/// # Safety
/// `r` must be a live report handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn bd_report_marginal(
    r: *const BdReport,
    node: usize,
    outcome: usize,
    out: *mut f64,
) -> BdStatus {
    guard(|| {
        let (Some(r), false) = (r.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        match r.report.marginal(NodeId(node)).and_then(|m| m.get(outcome)) {
            Some(&p) => {
                *out = p;
                BdStatus::Ok
            }
            None => fail(
                BdStatus::OutOfRange,
                format!("no outcome {outcome} for node {node}"),
            ),
        }
    })
}

/// Releases a report. NULL is ignored.
///
/// # Safety
/// `r` must come from [`bd_query`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bd_report_free(r: *mut BdReport) {
    if !r.is_null() {
        let _ = catch_unwind(AssertUnwindSafe(|| drop(Box::from_raw(r))));
    }
}

/// The diagram in the network text format.
///
/// # Safety
/// `d` must be a live diagram handle and `out` a valid pointer. Free the
/// result with [`bd_string_free`].
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_write(d: *const BdDiagram, out: *mut *mut c_char) -> BdStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        out_string(write_network(&d.diagram), out)
    })
}

/// The diagram as Graphviz DOT.
///
/// # Safety
/// As [`bd_diagram_write`].
#[no_mangle]
pub unsafe extern "C" fn bd_diagram_dot(d: *const BdDiagram, out: *mut *mut c_char) -> BdStatus {
    guard(|| {
        let (Some(d), false) = (d.as_ref(), out.is_null()) else {
            return fail(BdStatus::NullArgument, "null argument");
        };
        out_string(export_dot(&d.diagram), out)
    })
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bd_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}
