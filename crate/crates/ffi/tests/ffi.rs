use std::ffi::{CStr, CString};
use std::ptr;

use bergman_lab_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    unsafe { bk_last_error(buf.as_mut_ptr(), buf.len(), ptr::null_mut()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn space(model: BkModel, p: u32) -> *mut BkSectionSpace {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { bk_section_space_new(model as i32, p, &mut s) }, BkStatus::Ok);
    s
}

#[test]
fn version_is_a_c_string() {
    let v = unsafe { CStr::from_ptr(bk_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn dimensions_and_kernel_match_closed_forms() {
    let s = space(BkModel::Cp2O2LevelHalf, 4);
    let (mut dim, mut inv) = (0usize, 0usize);
    assert_eq!(unsafe { bk_section_space_dims(s, &mut dim, &mut inv) }, BkStatus::Ok);
    // sections of O(8) on the plane, and the invariant weight p + 1
    assert_eq!((dim, inv), (45, 5));

    let u = [0.3, -0.1, 0.2, 0.4];
    let v = [-0.5, 0.2, 0.1, 0.0];
    let mut k = [0.0; 2];
    assert_eq!(unsafe { bk_bergman_kernel(s, BkSelector::Full as i32, 0, u.as_ptr(), v.as_ptr(), 2, k.as_mut_ptr()) }, BkStatus::Ok);
    // (k+n)!/(2^n k!) (1 + <u, v>)^k with k = 8, n = 2, times the frame norms (1 + 0.3)^{-4} at each point
    let w = num_complex::Complex64::new(1.0, 0.0)
        + num_complex::Complex64::new(0.3, -0.1) * num_complex::Complex64::new(-0.5, -0.2)
        + num_complex::Complex64::new(0.2, 0.4) * num_complex::Complex64::new(0.1, 0.0);
    let exact = w.powi(8) * (90.0 / 4.0) / 1.3f64.powi(8);
    assert!((num_complex::Complex64::new(k[0], k[1]) - exact).norm() < 1e-12 * exact.norm(), "{k:?} {exact}");

    let mut g = [0.0; 2];
    let mut inv_k = [0.0; 2];
    assert_eq!(unsafe { bk_group_average_kernel(s, u.as_ptr(), v.as_ptr(), 2, 64, g.as_mut_ptr()) }, BkStatus::Ok);
    assert_eq!(unsafe { bk_bergman_kernel(s, BkSelector::Invariant as i32, 0, u.as_ptr(), v.as_ptr(), 2, inv_k.as_mut_ptr()) }, BkStatus::Ok);
    assert!((g[0] - inv_k[0]).abs() + (g[1] - inv_k[1]).abs() < 1e-10 * (inv_k[0].abs() + inv_k[1].abs()));
    unsafe { bk_section_space_free(s) };
}

#[test]
fn errors_carry_codes_and_messages() {
    let s = space(BkModel::Cp1O2, 3);
    let u = [0.1, 0.1];
    let mut out = [0.0; 2];
    assert_eq!(unsafe { bk_bergman_kernel(s, BkSelector::Weight as i32, 7, u.as_ptr(), u.as_ptr(), 1, out.as_mut_ptr()) }, BkStatus::EmptySubspace);
    assert!(last_error().contains("empty"));
    assert_eq!(unsafe { bk_bergman_kernel(s, 9, 0, u.as_ptr(), u.as_ptr(), 1, out.as_mut_ptr()) }, BkStatus::InvalidArgument);
    assert_eq!(unsafe { bk_bergman_kernel(s, 0, 0, u.as_ptr(), u.as_ptr(), 2, out.as_mut_ptr()) }, BkStatus::InvalidArgument);
    assert_eq!(unsafe { bk_bergman_kernel(s, 0, 0, ptr::null(), u.as_ptr(), 1, out.as_mut_ptr()) }, BkStatus::NullPointer);
    assert_eq!(unsafe { bk_bergman_kernel(ptr::null(), 0, 0, u.as_ptr(), u.as_ptr(), 1, out.as_mut_ptr()) }, BkStatus::NullPointer);
    unsafe { bk_section_space_free(s) };
    unsafe { bk_section_space_free(ptr::null_mut()) };

    let mut h = ptr::null_mut();
    assert_eq!(unsafe { bk_section_space_new(5, 3, &mut h) }, BkStatus::InvalidArgument);
    assert!(h.is_null());
    let mut x = 0.0;
    assert_eq!(unsafe { bk_rescaled_diagonal(BkModel::Cp2O2LevelHalf as i32, 10, ptr::null(), 0, &mut x) }, BkStatus::InvalidArgument);
}

#[test]
fn second_coefficient_of_the_sphere() {
    let (mut e, mut c) = ([0.0; 2], [0.0; 2]);
    assert_eq!(unsafe { bk_cp1_second_coefficient(e.as_mut_ptr(), c.as_mut_ptr()) }, BkStatus::Ok);
    let target = 3.0 * 2f64.sqrt() / 8.0;
    assert!((e[0] - target).abs() < 1e-10 && e[1].abs() < 1e-10);
    assert!((c[0] - target).abs() < 1e-10);
    let mut d = 0.0;
    assert_eq!(unsafe { bk_rescaled_diagonal(BkModel::Cp1O2 as i32, 800, ptr::null(), 0, &mut d) }, BkStatus::Ok);
    assert!((d - 2f64.sqrt()).abs() < 1e-3);
}

#[test]
fn experiment_report_round_trip() {
    let cfg = CString::new(r#"{"experiment":"dimensions","model":"CP2_O2_level_half","p_grid":[1,2,3]}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bk_run_experiment(cfg.as_ptr(), &mut r) }, BkStatus::Ok);
    let (mut rows, mut passed) = (0usize, 0i32);
    assert_eq!(unsafe { bk_report_summary(r, &mut rows, &mut passed) }, BkStatus::Ok);
    assert_eq!((rows, passed), (4, 1));

    let mut needed = 0usize;
    assert_eq!(unsafe { bk_report_write(r, 0, ptr::null_mut(), 0, &mut needed) }, BkStatus::BufferTooSmall);
    let mut buf = vec![0 as std::ffi::c_char; needed];
    assert_eq!(unsafe { bk_report_write(r, 0, buf.as_mut_ptr(), buf.len(), ptr::null_mut()) }, BkStatus::Ok);
    let csv = unsafe { CStr::from_ptr(buf.as_ptr()) }.to_str().unwrap();
    assert_eq!(csv.lines().count(), 5);
    assert!(csv.starts_with("experiment,model,p,quantity,value,target,tolerance,verdict\n"));
    unsafe { bk_report_free(r) };

    let bad = CString::new(r#"{"experiment":"missing"}"#).unwrap();
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { bk_run_experiment(bad.as_ptr(), &mut r) }, BkStatus::Config);
    assert!(r.is_null());
    assert!(last_error().contains("missing"));
}
