use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use qnm_ffi::*;

fn last_error() -> String {
    let p = qnm_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn double_pole() -> *mut QnmModel {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qnm_model_double_pole(1.0, &mut m) }, QnmStatus::Ok);
    assert!(!m.is_null());
    m
}

#[test]
fn wronskian_vanishes_at_the_double_pole() {
    let m = double_pole();
    let g = qnm_core::model::double_pole_gamma(1.0);
    let mut w = QnmComplex::default();
    let st = unsafe { qnm_wronskian(m, QnmComplex { re: 0.0, im: -g }, &mut w) };
    assert_eq!(st, QnmStatus::Ok);
    assert!(w.re.hypot(w.im) < 1e-12);
    unsafe { qnm_model_free(m) };
}

#[test]
fn spectrum_and_block_round_trip() {
    let m = double_pole();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { qnm_spectrum(m, -1.0, 1.0, -3.0, -1.0, &mut s) }, QnmStatus::Ok);
    assert_eq!(unsafe { qnm_spectrum_len(s) }, 1);
    let mut z = QnmZero::default();
    assert_eq!(unsafe { qnm_spectrum_zero(s, 0, &mut z) }, QnmStatus::Ok);
    assert_eq!(z.multiplicity, 2);

    let mut b = ptr::null_mut();
    assert_eq!(unsafe { qnm_block_new(m, z.omega, 2, &mut b) }, QnmStatus::Ok);
    assert_eq!(unsafe { qnm_block_size(b) }, 2);
    let mut omega = QnmComplex::default();
    let mut w = QnmComplex::default();
    assert_eq!(unsafe { qnm_block_info(b, &mut omega, &mut w) }, QnmStatus::Ok);
    // Preferred scale: W_M = −2ω.
    assert!((w.re + 2.0 * omega.re).abs() + (w.im + 2.0 * omega.im).abs() < 1e-12);

    let mut f = QnmComplex::default();
    let mut fp = QnmComplex::default();
    assert_eq!(unsafe { qnm_block_field(b, 0, 0.0, &mut f, &mut fp) }, QnmStatus::Ok);
    assert_eq!(f, QnmComplex::default());
    assert!(fp.re.hypot(fp.im) > 0.0);
    assert_eq!(unsafe { qnm_block_field(b, 2, 0.5, &mut f, &mut fp) }, QnmStatus::InvalidInput);

    let mut small = [QnmComplex::default(); 3];
    assert_eq!(unsafe { qnm_block_products(b, small.as_mut_ptr(), 3) }, QnmStatus::InvalidInput);
    assert!(last_error().contains("4 needed"));

    unsafe {
        qnm_block_free(b);
        qnm_spectrum_free(s);
        qnm_model_free(m);
    }
}

#[test]
fn errors_carry_status_and_message() {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qnm_model_double_pole(-1.0, &mut m) }, QnmStatus::InvalidInput);
    assert!(m.is_null());
    assert!(last_error().contains("K must be positive"));

    let path = CString::new("/nonexistent/model.cfg").unwrap();
    assert_eq!(unsafe { qnm_model_from_file(path.as_ptr(), &mut m) }, QnmStatus::InvalidInput);

    assert_eq!(unsafe { qnm_model_from_str(ptr::null(), &mut m) }, QnmStatus::NullPointer);
    assert_eq!(unsafe { qnm_wronskian(ptr::null(), QnmComplex::default(), ptr::null_mut()) }, QnmStatus::NullPointer);

    let dp = double_pole();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { qnm_spectrum(dp, 1.0, -1.0, -1.0, 0.0, &mut s) }, QnmStatus::InvalidInput);
    let mut b = ptr::null_mut();
    let g = qnm_core::model::double_pole_gamma(1.0);
    let st = unsafe { qnm_block_new(dp, QnmComplex { re: 0.0, im: -g }, 1, &mut b) };
    assert_eq!(st, QnmStatus::Numerical);
    assert!(b.is_null());
    unsafe { qnm_model_free(dp) };
}

#[test]
fn null_handles_are_harmless() {
    unsafe {
        qnm_model_free(ptr::null_mut());
        qnm_spectrum_free(ptr::null_mut());
        qnm_block_free(ptr::null_mut());
        assert_eq!(qnm_spectrum_len(ptr::null()), 0);
        assert_eq!(qnm_block_size(ptr::null()), 0);
    }
}

#[test]
fn model_text_round_trip() {
    let text = CString::new("kind = \"wave\"\ndomain_left = 0.0\na = 1.0\nsegments = [[0.0, 1.0, 4.0]]\ndeltas = []\n").unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { qnm_model_from_str(text.as_ptr(), &mut m) }, QnmStatus::Ok);
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { qnm_spectrum(m, 0.0, 3.0, -1.0, -0.01, &mut s) }, QnmStatus::Ok);
    assert_eq!(unsafe { qnm_spectrum_len(s) }, 2);
    unsafe {
        qnm_spectrum_free(s);
        qnm_model_free(m);
    }
}

#[test]
fn pt_critical_point() {
    let mut v0 = 0.0;
    let mut w = QnmComplex::default();
    assert_eq!(unsafe { qnm_pt_critical_point(5.0, &mut v0, &mut w) }, QnmStatus::Ok);
    assert!((v0 - 0.252279109).abs() < 1e-6);
    assert!((w.im + 0.511109).abs() < 1e-5);
    assert_eq!(unsafe { qnm_pt_critical_point(0.0, &mut v0, &mut w) }, QnmStatus::InvalidInput);
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(qnm_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn target_dir() -> PathBuf {
    // tests live in <target>/<profile>/deps
    std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_the_static_library() {
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = crate_dir.join("include/qnm.h");
    assert!(header.exists(), "header not generated");
    let lib = target_dir().join("libqnm_ffi.a");
    assert!(lib.exists(), "static library missing at {}", lib.display());
    let out = tempfile::tempdir().unwrap();
    let exe = out.path().join("smoke");
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .arg("-std=c99")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(crate_dir.join("tests/c/smoke.c"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .expect("C compiler runs");
    assert!(status.success());
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
