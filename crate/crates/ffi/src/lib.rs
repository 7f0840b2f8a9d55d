//! C ABI for the nilpiece toolkit: opaque handles, status codes, and
//! JSON-returning entry points, so other languages can drive classification
//! and censuses without reimplementing the exact arithmetic.
//!
//! Ownership rules: every `*mut` handle returned through an out-parameter is
//! owned by the caller and must be released with the matching `_free`
//! function; strings returned through out-parameters are released with
//! `np_string_free`. The pointer returned by `np_last_error_message` borrows
//! thread-local storage and is valid until the next failing call on the same
//! thread.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};

use nilpiece::census::{self, CensusOptions};
use nilpiece::formspace::{FormedSpace, SpaceKind};
use nilpiece::gradings::PieceLabel;
use nilpiece::matrix::Matrix;
use nilpiece::recovery::{classify_nilpotent, classify_unipotent};
use nilpiece::Error;

/// Status code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum NpStatus {
    Ok = 0,
    ErrNullPointer = 1,
    ErrInvalidArgument = 2,
    ErrParse = 3,
    ErrPrecondition = 4,
    ErrInfeasible = 5,
    ErrVerdict = 6,
    ErrInternal = 7,
}

/// Opaque handle to a formed space.
pub struct NpSpace {
    inner: FormedSpace,
}

/// Opaque handle to a matrix over a finite field.
pub struct NpMatrix {
    inner: Matrix,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::new("").unwrap());
}

fn set_error(msg: &str) {
    let cleaned: String = msg.chars().filter(|&c| c != '\0').collect();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(cleaned).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> NpStatus {
    match err {
        Error::FieldMismatch | Error::DimensionMismatch { .. } | Error::InvalidArgument(_) => {
            NpStatus::ErrInvalidArgument
        }
        Error::Parse(_) => NpStatus::ErrParse,
        Error::Precondition(_) => NpStatus::ErrPrecondition,
        Error::Infeasible { .. } => NpStatus::ErrInfeasible,
        Error::Verdict(_) => NpStatus::ErrVerdict,
        Error::Internal(_) => NpStatus::ErrInternal,
    }
}

fn fail(err: Error) -> NpStatus {
    set_error(&err.to_string());
    status_of(&err)
}

fn kind_of(code: i32) -> Result<SpaceKind, Error> {
    match code {
        0 => Ok(SpaceKind::Gl),
        1 => Ok(SpaceKind::Sp),
        2 => Ok(SpaceKind::O),
        other => Err(Error::InvalidArgument(format!("unknown kind code {other} (0=GL, 1=Sp, 2=O)"))),
    }
}

unsafe fn cstr_in<'a>(ptr: *const c_char) -> Result<&'a str, Error> {
    if ptr.is_null() {
        return Err(Error::InvalidArgument("null string".into()));
    }
    unsafe { CStr::from_ptr(ptr) }
        .to_str()
        .map_err(|_| Error::Parse("string is not valid UTF-8".into()))
}

fn string_out(out: *mut *mut c_char, s: String) -> NpStatus {
    match CString::new(s) {
        Ok(cs) => {
            unsafe { *out = cs.into_raw() };
            NpStatus::Ok
        }
        Err(_) => fail(Error::Internal("output contained an interior NUL".into())),
    }
}

/// Message describing the most recent failure on this thread.
#[no_mangle]
pub extern "C" fn np_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Builds the standard split space of a kind (0 = GL, 1 = Sp, 2 = O) over
/// F_{p^k}.
#[no_mangle]
pub unsafe extern "C" fn np_space_split(
    kind: i32,
    dim: usize,
    p: u32,
    k: u32,
    out: *mut *mut NpSpace,
) -> NpStatus {
    if out.is_null() {
        return NpStatus::ErrNullPointer;
    }
    let build = || -> Result<FormedSpace, Error> {
        let kind = kind_of(kind)?;
        let field = nilpiece::Field::new(p as u16, k)?;
        FormedSpace::split(kind, dim, field)
    };
    match build() {
        Ok(space) => {
            unsafe { *out = Box::into_raw(Box::new(NpSpace { inner: space })) };
            NpStatus::Ok
        }
        Err(e) => fail(e),
    }
}

/// Parses a space descriptor (`kind dim p k` plus optional form blocks).
#[no_mangle]
pub unsafe extern "C" fn np_space_from_descriptor(
    text: *const c_char,
    out: *mut *mut NpSpace,
) -> NpStatus {
    if out.is_null() {
        return NpStatus::ErrNullPointer;
    }
    let build = || -> Result<FormedSpace, Error> {
        let text = unsafe { cstr_in(text) }?;
        FormedSpace::from_descriptor(text)
    };
    match build() {
        Ok(space) => {
            unsafe { *out = Box::into_raw(Box::new(NpSpace { inner: space })) };
            NpStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn np_space_free(space: *mut NpSpace) {
    if !space.is_null() {
        drop(unsafe { Box::from_raw(space) });
    }
}

/// Parses a matrix in the text format `rows cols p k` plus entries.
#[no_mangle]
pub unsafe extern "C" fn np_matrix_from_text(
    text: *const c_char,
    out: *mut *mut NpMatrix,
) -> NpStatus {
    if out.is_null() {
        return NpStatus::ErrNullPointer;
    }
    let build = || -> Result<Matrix, Error> {
        let text = unsafe { cstr_in(text) }?;
        Matrix::from_text(text)
    };
    match build() {
        Ok(m) => {
            unsafe { *out = Box::into_raw(Box::new(NpMatrix { inner: m })) };
            NpStatus::Ok
        }
        Err(e) => fail(e),
    }
}

#[no_mangle]
pub unsafe extern "C" fn np_matrix_free(matrix: *mut NpMatrix) {
    if !matrix.is_null() {
        drop(unsafe { Box::from_raw(matrix) });
    }
}

/// Classifies a nilpotent (unipotent when `unipotent != 0`) element;
/// on success writes a JSON document describing label, subpiece, and
/// filtration steps.
#[no_mangle]
pub unsafe extern "C" fn np_classify_json(
    space: *const NpSpace,
    elem: *const NpMatrix,
    unipotent: i32,
    out: *mut *mut c_char,
) -> NpStatus {
    if space.is_null() || elem.is_null() || out.is_null() {
        return NpStatus::ErrNullPointer;
    }
    let space = unsafe { &(*space).inner };
    let elem = unsafe { &(*elem).inner };
    let run = || -> Result<String, Error> {
        let classified = if unipotent != 0 {
            classify_unipotent(space, elem)?
        } else {
            classify_nilpotent(space, elem)?
        };
        Ok(classified.to_json().to_string())
    };
    match run() {
        Ok(json) => string_out(out, json),
        Err(e) => fail(e),
    }
}

/// Runs a full census and writes the JSON report. Returns a verdict error if
/// any verification fails.
#[no_mangle]
pub unsafe extern "C" fn np_census_json(
    kind: i32,
    dim: usize,
    q: usize,
    workers: usize,
    out: *mut *mut c_char,
) -> NpStatus {
    if out.is_null() {
        return NpStatus::ErrNullPointer;
    }
    let run = || -> Result<(String, bool), Error> {
        let kind = kind_of(kind)?;
        let opts = CensusOptions { workers: workers.max(1), budget: nilpiece::element_budget() };
        let report = census::run_census(kind, dim, q, opts)?;
        Ok((serde_json::to_string(&report).unwrap(), report.all_ok()))
    };
    match run() {
        Ok((json, all_ok)) => {
            let status = string_out(out, json);
            if status != NpStatus::Ok {
                return status;
            }
            if all_ok {
                NpStatus::Ok
            } else {
                set_error("census verdicts failed; see the report");
                NpStatus::ErrVerdict
            }
        }
        Err(e) => fail(e),
    }
}

/// Piece labels of a kind and dimension as a JSON array of partitions.
#[no_mangle]
pub unsafe extern "C" fn np_labels_json(kind: i32, dim: usize, out: *mut *mut c_char) -> NpStatus {
    if out.is_null() {
        return NpStatus::ErrNullPointer;
    }
    let run = || -> Result<String, Error> {
        let kind = kind_of(kind)?;
        let labels: Vec<Vec<usize>> =
            PieceLabel::enumerate(kind, dim).into_iter().map(|l| l.parts).collect();
        Ok(serde_json::to_string(&labels).unwrap())
    };
    match run() {
        Ok(json) => string_out(out, json),
        Err(e) => fail(e),
    }
}

/// Releases a string returned by any `_json` entry point.
#[no_mangle]
pub unsafe extern "C" fn np_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(unsafe { CString::from_raw(s) });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_classify_roundtrip() {
        unsafe {
            let mut space: *mut NpSpace = std::ptr::null_mut();
            assert_eq!(np_space_split(0, 2, 2, 1, &mut space), NpStatus::Ok);
            let text = CString::new("2 2 2 1\n0 1\n0 0\n").unwrap();
            let mut elem: *mut NpMatrix = std::ptr::null_mut();
            assert_eq!(np_matrix_from_text(text.as_ptr(), &mut elem), NpStatus::Ok);
            let mut out: *mut c_char = std::ptr::null_mut();
            assert_eq!(np_classify_json(space, elem, 0, &mut out), NpStatus::Ok);
            let json = CStr::from_ptr(out).to_str().unwrap();
            let value: serde_json::Value = serde_json::from_str(json).unwrap();
            assert_eq!(value["label"]["parts"], serde_json::json!([2]));
            np_string_free(out);
            np_matrix_free(elem);
            np_space_free(space);
        }
    }

    #[test]
    fn census_and_labels() {
        unsafe {
            let mut out: *mut c_char = std::ptr::null_mut();
            assert_eq!(np_labels_json(1, 4, &mut out), NpStatus::Ok);
            let json = CStr::from_ptr(out).to_str().unwrap();
            assert_eq!(json, "[[4],[2,2],[2,1,1],[1,1,1,1]]");
            np_string_free(out);

            let mut out: *mut c_char = std::ptr::null_mut();
            assert_eq!(np_census_json(1, 4, 2, 2, &mut out), NpStatus::Ok);
            let report: serde_json::Value =
                serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
            assert_eq!(report["nilpotent_total"], 256);
            np_string_free(out);
        }
    }

    #[test]
    fn errors_set_message() {
        unsafe {
            let mut space: *mut NpSpace = std::ptr::null_mut();
            assert_eq!(np_space_split(9, 2, 2, 1, &mut space), NpStatus::ErrInvalidArgument);
            let msg = CStr::from_ptr(np_last_error_message()).to_str().unwrap();
            assert!(msg.contains("unknown kind"));
            assert_eq!(
                np_space_split(1, 3, 2, 1, &mut space),
                NpStatus::ErrInvalidArgument
            );
        }
    }
}
