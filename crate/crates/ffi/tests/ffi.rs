use koenigs_ffi::*;
use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

fn parse(src: &str) -> *mut KoenigsMap {
    let s = CString::new(src).unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { koenigs_map_parse(s.as_ptr(), &mut out) }, KoenigsStatus::Ok);
    assert!(!out.is_null());
    out
}

fn z(re: f64, im: f64) -> KoenigsComplex {
    KoenigsComplex { re, im }
}

#[test]
fn eval_and_deriv() {
    let m = parse("(1+z^2)/2");
    let mut out = z(0.0, 0.0);
    assert_eq!(unsafe { koenigs_map_eval(m, z(0.5, 0.0), &mut out) }, KoenigsStatus::Ok);
    assert_eq!(out, z(0.625, 0.0));
    assert_eq!(unsafe { koenigs_map_deriv(m, z(0.5, 0.0), &mut out) }, KoenigsStatus::Ok);
    assert_eq!(out, z(0.5, 0.0));
    unsafe { koenigs_map_free(m) };
}

#[test]
fn parse_errors_carry_offset() {
    let s = CString::new("z^").unwrap();
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { koenigs_map_parse(s.as_ptr(), &mut out) }, KoenigsStatus::Syntax);
    assert!(out.is_null());
    assert_eq!(koenigs_last_error_offset(), 2);
    let msg = unsafe { CStr::from_ptr(koenigs_last_error_message()) }.to_str().unwrap();
    assert!(msg.contains("byte 2"));
    let s = CString::new("q+1").unwrap();
    assert_eq!(unsafe { koenigs_map_parse(s.as_ptr(), &mut out) }, KoenigsStatus::UnknownIdentifier);
}

#[test]
fn errors_reset_on_success() {
    let s = CString::new("(").unwrap();
    let mut out = ptr::null_mut();
    unsafe { koenigs_map_parse(s.as_ptr(), &mut out) };
    assert!(!koenigs_last_error_message().is_null());
    let m = parse("z/2");
    assert!(koenigs_last_error_message().is_null());
    assert_eq!(koenigs_last_error_offset(), -1);
    unsafe { koenigs_map_free(m) };
}

#[test]
fn null_pointers_rejected() {
    let mut out = z(0.0, 0.0);
    assert_eq!(unsafe { koenigs_map_eval(ptr::null(), z(0.0, 0.0), &mut out) }, KoenigsStatus::NullPointer);
    let m = parse("z");
    assert_eq!(unsafe { koenigs_map_eval(m, z(0.0, 0.0), ptr::null_mut()) }, KoenigsStatus::NullPointer);
    assert_eq!(unsafe { koenigs_map_parse(ptr::null(), ptr::null_mut()) }, KoenigsStatus::NullPointer);
    unsafe { koenigs_map_free(m) };
    unsafe { koenigs_map_free(ptr::null_mut()) };
}

#[test]
fn domain_errors_mapped() {
    let m = parse("1/z");
    let mut out = z(0.0, 0.0);
    assert_eq!(unsafe { koenigs_map_eval(m, z(0.0, 0.0), &mut out) }, KoenigsStatus::Domain);
    unsafe { koenigs_map_free(m) };
    let (mut p, mut h) = (0.0, 0.0);
    assert_eq!(unsafe { koenigs_dist_disc(z(2.0, 0.0), z(0.0, 0.0), &mut p, &mut h) }, KoenigsStatus::Domain);
}

#[test]
fn classify_and_step() {
    let m = parse("(z+1)/2");
    let mut r = std::mem::MaybeUninit::<KoenigsDwReport>::uninit();
    assert_eq!(unsafe { koenigs_classify(m, r.as_mut_ptr()) }, KoenigsStatus::Ok);
    let r = unsafe { r.assume_init() };
    assert_eq!(r.kind, KoenigsType::Hyperbolic);
    assert!((r.multiplier - 0.5).abs() < 1e-6);
    assert_eq!((r.interior, r.automorphism), (0, 0));
    let mut s = std::mem::MaybeUninit::<KoenigsStepReport>::uninit();
    assert_eq!(unsafe { koenigs_step(m, z(0.0, 0.0), 1024, s.as_mut_ptr()) }, KoenigsStatus::Ok);
    assert_eq!(unsafe { s.assume_init() }.decision, KoenigsStep::Positive);
    unsafe { koenigs_map_free(m) };
}

#[test]
fn distances() {
    let (mut p, mut h) = (0.0, 0.0);
    assert_eq!(unsafe { koenigs_dist_disc(z(0.0, 0.0), z(0.5, 0.0), &mut p, &mut h) }, KoenigsStatus::Ok);
    assert!((p - 0.5).abs() < 1e-16);
    assert!((h - 3f64.ln() / 2.0).abs() < 1e-15);
}

#[test]
fn slc_of_slit_pair() {
    let phi = parse("compose(compose(icayley(tau=1, to=RH), sqrt(z)), ((1+z)/(1-z))^2 + 1)");
    let psi = parse("compose(compose(icayley(tau=1, to=RH), sqrt(z)), ((1+z)/(1-z))^2 + 2.5)");
    let mut out = std::mem::MaybeUninit::<KoenigsSlc>::uninit();
    assert_eq!(unsafe { koenigs_slc(phi, psi, out.as_mut_ptr()) }, KoenigsStatus::Ok);
    let out = unsafe { out.assume_init() };
    assert!((out.c.re - 2.5).abs() < 1e-5 && out.c.im.abs() < 1e-5);
    assert!(out.disagreement < 1e-3);
    assert_eq!(out.identity, 0);
    let quad = parse("(z+1)/2");
    let mut o2 = std::mem::MaybeUninit::<KoenigsSlc>::uninit();
    assert_eq!(unsafe { koenigs_slc(quad, psi, o2.as_mut_ptr()) }, KoenigsStatus::Precondition);
    unsafe {
        koenigs_map_free(phi);
        koenigs_map_free(psi);
        koenigs_map_free(quad);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(koenigs_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_declares_api() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/koenigs.h")).unwrap();
    for name in [
        "koenigs_map_parse",
        "koenigs_map_free",
        "koenigs_map_eval",
        "koenigs_map_deriv",
        "koenigs_classify",
        "koenigs_step",
        "koenigs_dist_disc",
        "koenigs_slc",
        "koenigs_last_error_message",
        "koenigs_last_error_offset",
        "typedef struct KoenigsMap KoenigsMap",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

/// Compiles and runs a C program against the header and the static library.
#[test]
fn c_program_links() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    let exe = std::env::current_exe().unwrap();
    let profile_dir = exe.parent().and_then(|p| p.parent()).unwrap();
    let lib = profile_dir.join("libkoenigs_ffi.a");
    assert!(lib.exists(), "{} not built", lib.display());
    let tmp = tempfile::tempdir().unwrap();
    let bin = tmp.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg(dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&bin)
        .status();
    let status = match status {
        Ok(s) => s,
        Err(e) => {
            eprintln!("C compiler `{cc}` unavailable ({e}); link check not run");
            return;
        }
    };
    assert!(status.success(), "C compilation failed");
    let out = Command::new(&bin).output().unwrap();
    assert!(out.status.success(), "smoke program exited {:?}", out.status.code());
    assert!(String::from_utf8_lossy(&out.stdout).contains("byte 2"));
}
