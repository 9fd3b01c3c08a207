//! C ABI over the koenigs library.
//!
//! Maps are opaque handles created by [`koenigs_map_parse`] and released with
//! [`koenigs_map_free`]. Every fallible call returns a [`KoenigsStatus`]; on failure the
//! message and byte offset are available from [`koenigs_last_error_message`] and
//! [`koenigs_last_error_offset`] on the same thread.

use koenigs::dynamics::{classify, step_decide, step_sequences, DwKind, StepDecision, TypeLabel};
use koenigs::linearize::{slc_estimate, SlcMethod};
use koenigs::metric::dist_disc;
use koenigs::{Error, MapExpr, C64};
use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

/// Opaque parsed map.
pub struct KoenigsMap(MapExpr);

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoenigsComplex {
    pub re: f64,
    pub im: f64,
}

impl From<C64> for KoenigsComplex {
    fn from(z: C64) -> Self {
        KoenigsComplex { re: z.re, im: z.im }
    }
}

impl From<KoenigsComplex> for C64 {
    fn from(z: KoenigsComplex) -> Self {
        C64::new(z.re, z.im)
    }
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KoenigsStatus {
    Ok = 0,
    Syntax = 1,
    UnknownIdentifier = 2,
    MalformedLiteral = 3,
    Domain = 4,
    Overflow = 5,
    Instability = 6,
    Ambiguity = 7,
    Inconclusive = 8,
    Degenerate = 9,
    Precondition = 10,
    Corpus = 11,
    Io = 12,
    Usage = 13,
    NullPointer = 20,
    Panic = 21,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KoenigsType {
    Identity = 0,
    Elliptic = 1,
    EllipticAutomorphism = 2,
    Hyperbolic = 3,
    Parabolic = 4,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KoenigsStep {
    Zero = 0,
    Positive = 1,
    Inconclusive = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoenigsDwReport {
    pub location: KoenigsComplex,
    pub multiplier: f64,
    pub multiplier_error: f64,
    pub kind: KoenigsType,
    /// 1 when the point is inside the disc.
    pub interior: u8,
    pub automorphism: u8,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoenigsStepReport {
    pub decision: KoenigsStep,
    pub q_decision: KoenigsStep,
    pub distortion_last: f64,
    pub q_last: f64,
    /// Orbit length actually computed.
    pub length: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KoenigsSlc {
    pub c: KoenigsComplex,
    pub disagreement: f64,
    /// 1 when the partner is the identity.
    pub identity: u8,
}

struct LastError {
    message: CString,
    offset: i64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<LastError>> = const { RefCell::new(None) };
}

fn status_of(e: &Error) -> KoenigsStatus {
    match e {
        Error::Syntax { .. } => KoenigsStatus::Syntax,
        Error::UnknownIdentifier { .. } => KoenigsStatus::UnknownIdentifier,
        Error::MalformedLiteral { .. } => KoenigsStatus::MalformedLiteral,
        Error::Domain(_) => KoenigsStatus::Domain,
        Error::Overflow(_) => KoenigsStatus::Overflow,
        Error::Instability { .. } => KoenigsStatus::Instability,
        Error::Ambiguity(_) => KoenigsStatus::Ambiguity,
        Error::Inconclusive(_) => KoenigsStatus::Inconclusive,
        Error::Degenerate(_) => KoenigsStatus::Degenerate,
        Error::Precondition(_) => KoenigsStatus::Precondition,
        Error::Corpus(_) => KoenigsStatus::Corpus,
        Error::Io(_) => KoenigsStatus::Io,
        Error::Usage(_) => KoenigsStatus::Usage,
    }
}

fn set_error(message: String, offset: Option<usize>) {
    let message = CString::new(message.replace('\0', " ")).expect("interior NULs removed");
    let offset = offset.map_or(-1, |o| o as i64);
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(LastError { message, offset }));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn guard(f: impl FnOnce() -> Result<(), KoenigsStatus>) -> KoenigsStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => KoenigsStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("internal panic".into(), None);
            KoenigsStatus::Panic
        }
    }
}

fn fail(e: Error) -> KoenigsStatus {
    set_error(e.to_string(), e.offset());
    status_of(&e)
}

fn null(what: &str) -> KoenigsStatus {
    set_error(format!("{what} is null"), None);
    KoenigsStatus::NullPointer
}

unsafe fn map_ref<'a>(p: *const KoenigsMap, what: &str) -> Result<&'a MapExpr, KoenigsStatus> {
    // SAFETY: non-null handles come from koenigs_map_parse and stay valid until freed.
    unsafe { p.as_ref() }.map(|m| &m.0).ok_or_else(|| null(what))
}

unsafe fn write<T>(out: *mut T, v: T, what: &str) -> Result<(), KoenigsStatus> {
    if out.is_null() {
        return Err(null(what));
    }
    // SAFETY: caller provides a writable pointer.
    unsafe { out.write(v) };
    Ok(())
}

/// Parses a NUL-terminated map expression into a new handle stored in `*out`.
///
/// # Safety
/// `src` must be a valid C string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn koenigs_map_parse(src: *const c_char, out: *mut *mut KoenigsMap) -> KoenigsStatus {
    guard(|| {
        if src.is_null() {
            return Err(null("src"));
        }
        if out.is_null() {
            return Err(null("out"));
        }
        // SAFETY: checked non-null; caller guarantees termination.
        let bytes = unsafe { CStr::from_ptr(src) }.to_bytes();
        let map = koenigs::dsl::parse_map_bytes(bytes).map_err(fail)?;
        // SAFETY: checked non-null.
        unsafe { out.write(Box::into_raw(Box::new(KoenigsMap(map)))) };
        Ok(())
    })
}

/// Releases a handle; null is ignored.
///
/// # Safety
/// `map` must come from [`koenigs_map_parse`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn koenigs_map_free(map: *mut KoenigsMap) {
    if !map.is_null() {
        // SAFETY: ownership returns from the caller.
        drop(unsafe { Box::from_raw(map) });
    }
}

/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn koenigs_map_eval(map: *const KoenigsMap, z: KoenigsComplex, out: *mut KoenigsComplex) -> KoenigsStatus {
    guard(|| {
        let m = unsafe { map_ref(map, "map") }?;
        let v = m.eval(z.into()).map_err(fail)?;
        unsafe { write(out, v.into(), "out") }
    })
}

/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn koenigs_map_deriv(map: *const KoenigsMap, z: KoenigsComplex, out: *mut KoenigsComplex) -> KoenigsStatus {
    guard(|| {
        let m = unsafe { map_ref(map, "map") }?;
        let v = m.deriv(z.into()).map_err(fail)?;
        unsafe { write(out, v.into(), "out") }
    })
}

fn type_code(t: TypeLabel) -> KoenigsType {
    match t {
        TypeLabel::Identity => KoenigsType::Identity,
        TypeLabel::Elliptic => KoenigsType::Elliptic,
        TypeLabel::EllipticAutomorphism => KoenigsType::EllipticAutomorphism,
        TypeLabel::Hyperbolic => KoenigsType::Hyperbolic,
        TypeLabel::Parabolic => KoenigsType::Parabolic,
    }
}

fn step_code(s: StepDecision) -> KoenigsStep {
    match s {
        StepDecision::Zero => KoenigsStep::Zero,
        StepDecision::Positive => KoenigsStep::Positive,
        StepDecision::Inconclusive => KoenigsStep::Inconclusive,
    }
}

/// Denjoy-Wolff point, multiplier and type with default options.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn koenigs_classify(map: *const KoenigsMap, out: *mut KoenigsDwReport) -> KoenigsStatus {
    guard(|| {
        let m = unsafe { map_ref(map, "map") }?;
        let r = classify(m).map_err(fail)?;
        let report = KoenigsDwReport {
            location: r.location.into(),
            multiplier: r.multiplier,
            multiplier_error: r.multiplier_error,
            kind: type_code(r.type_label),
            interior: u8::from(r.kind == DwKind::Interior),
            automorphism: u8::from(r.automorphism),
        };
        unsafe { write(out, report, "out") }
    })
}

/// Hyperbolic step decision along the orbit of `z0` with at most `n` steps.
///
/// # Safety
/// `map` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn koenigs_step(map: *const KoenigsMap, z0: KoenigsComplex, n: usize, out: *mut KoenigsStepReport) -> KoenigsStatus {
    guard(|| {
        let m = unsafe { map_ref(map, "map") }?;
        let r = step_sequences(m, z0.into(), n).map_err(fail)?;
        let report = KoenigsStepReport {
            decision: step_code(step_decide(&r)),
            q_decision: step_code(r.q_decision),
            distortion_last: r.distortion_seq.last().copied().unwrap_or(f64::NAN),
            q_last: r.q_seq.last().copied().unwrap_or(f64::NAN),
            length: r.distortion_seq.len() - 1,
        };
        unsafe { write(out, report, "out") }
    })
}

/// Pseudo-hyperbolic and hyperbolic distance in the disc.
///
/// # Safety
/// Both output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn koenigs_dist_disc(z: KoenigsComplex, w: KoenigsComplex, pseudo: *mut f64, hyperbolic: *mut f64) -> KoenigsStatus {
    guard(|| {
        let d = dist_disc(z.into(), w.into()).map_err(fail)?;
        unsafe { write(pseudo, d.pseudo, "pseudo") }?;
        unsafe { write(hyperbolic, d.hyperbolic, "hyperbolic") }
    })
}

/// Simultaneous linearization coefficient of `psi` with respect to `phi`, all methods.
///
/// # Safety
/// Both handles must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn koenigs_slc(phi: *const KoenigsMap, psi: *const KoenigsMap, out: *mut KoenigsSlc) -> KoenigsStatus {
    guard(|| {
        let f = unsafe { map_ref(phi, "phi") }?;
        let g = unsafe { map_ref(psi, "psi") }?;
        let r = slc_estimate(f, g, SlcMethod::All).map_err(fail)?;
        let v = KoenigsSlc { c: r.c.into(), disagreement: r.disagreement, identity: u8::from(r.identity) };
        unsafe { write(out, v, "out") }
    })
}

/// Message of the last failure on this thread, or null. Valid until the next call.
#[no_mangle]
pub extern "C" fn koenigs_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null(), |x| x.message.as_ptr()))
}

/// Byte offset of the last parse failure on this thread, or −1.
#[no_mangle]
pub extern "C" fn koenigs_last_error_offset() -> i64 {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(-1, |x| x.offset))
}

/// Library version as a static C string.
#[no_mangle]
pub extern "C" fn koenigs_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}
