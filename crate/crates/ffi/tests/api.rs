use std::ffi::{CStr, CString};
use std::ptr;

use beas_ffi::*;

fn last_error() -> String {
    let p = beas_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn disk(size: usize, cx: f64, cy: f64, r: f64) -> Vec<f64> {
    (0..size * size)
        .map(|i| {
            let (y, x) = ((i / size) as f64, (i % size) as f64);
            (((x - cx).powi(2) + (y - cy).powi(2)) < r * r) as u8 as f64
        })
        .collect()
}

#[test]
fn open_edit_step_read_back() {
    let size = 96;
    let img = disk(size, 48.0, 48.0, 20.0);
    let mut s = ptr::null_mut();
    let status = unsafe { beas_session_open(img.as_ptr(), img.as_ptr(), size, size, ptr::null(), &mut s) };
    assert_eq!(status, BeasStatus::Ok);
    let n = unsafe { beas_session_n_knots(s) };
    assert_eq!(n, 32);
    let mut origin = [0.0; 2];
    assert_eq!(unsafe { beas_session_origin(s, origin.as_mut_ptr()) }, BeasStatus::Ok);
    assert!((origin[0] - 48.0).abs() < 1.0 && (origin[1] - 48.0).abs() < 1.0);

    let mut id = 0;
    let status = unsafe { beas_session_add_anchor(s, origin[0] + 26.0, origin[1], &mut id) };
    assert_eq!(status, BeasStatus::Ok);
    let mut out = BeasStepOutcome::default();
    for _ in 0..5 {
        assert_eq!(unsafe { beas_session_step(s, &mut out) }, BeasStatus::Ok);
    }
    let mut coefs = vec![0.0; n];
    assert_eq!(unsafe { beas_session_coefficients(s, coefs.as_mut_ptr(), n) }, BeasStatus::Ok);
    assert!(coefs[0] > 22.0, "{coefs:?}");

    let mut small = [0.0; 4];
    assert_eq!(
        unsafe { beas_session_coefficients(s, small.as_mut_ptr(), 4) },
        BeasStatus::InputShape
    );
    let mut mask = vec![0u8; size * size];
    assert_eq!(unsafe { beas_session_mask(s, mask.as_mut_ptr(), mask.len()) }, BeasStatus::Ok);
    assert!(mask.iter().all(|&v| v == 0 || v == 255));
    assert_eq!(mask[48 * size + 48], 255);

    assert_eq!(unsafe { beas_session_remove_anchor(s, id) }, BeasStatus::Ok);
    assert_eq!(unsafe { beas_session_remove_anchor(s, id) }, BeasStatus::AnchorNotFound);
    assert!(last_error().contains("ANCHOR_NOT_FOUND"));
    assert_eq!(unsafe { beas_session_set_weights(s, -1.0, 0.0, 0.0) }, BeasStatus::Config);
    assert_eq!(unsafe { beas_session_reset(s) }, BeasStatus::Ok);

    let json = unsafe { beas_session_contour_json(s) };
    let text = unsafe { CStr::from_ptr(json) }.to_str().unwrap().to_owned();
    unsafe { beas_string_free(json) };
    let doc = beas::io::ContourDocument::from_json(&text).unwrap();
    assert_eq!(doc.n_knots, 32);
    unsafe { beas_session_free(s) };
}

#[test]
fn errors_map_to_status_codes() {
    let empty = vec![0.0; 32 * 32];
    let mut s = ptr::null_mut();
    let status = unsafe { beas_session_open(empty.as_ptr(), empty.as_ptr(), 32, 32, ptr::null(), &mut s) };
    assert_eq!(status, BeasStatus::Initialization);
    assert!(s.is_null());
    assert!(last_error().contains("initialization"));

    let bad = vec![2.0; 32 * 32];
    let status = unsafe { beas_session_open(bad.as_ptr(), bad.as_ptr(), 32, 32, ptr::null(), &mut s) };
    assert_eq!(status, BeasStatus::InputRange);

    let cfg = CString::new(r#"{"knots": 3}"#).unwrap();
    let img = disk(32, 16.0, 16.0, 8.0);
    let status = unsafe { beas_session_open(img.as_ptr(), img.as_ptr(), 32, 32, cfg.as_ptr(), &mut s) };
    assert_eq!(status, BeasStatus::Config);

    assert_eq!(unsafe { beas_session_step(ptr::null_mut(), ptr::null_mut()) }, BeasStatus::NullPointer);
    assert_eq!(unsafe { beas_session_n_knots(ptr::null()) }, 0);
    assert!(unsafe { beas_session_contour_json(ptr::null()) }.is_null());
    unsafe { beas_session_free(ptr::null_mut()) };
}

#[test]
fn phantom_session_matches_library() {
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { beas_session_open_phantom(11, 1, 0, &mut s) }, BeasStatus::Ok);
    let cfg = beas::Config::default();
    let p = beas::phantom::generate_phantom(11, 1, &cfg.phantom).unwrap();
    let expect = beas::smooth(&p.prob_map, &cfg).unwrap();
    let mut coefs = vec![0.0; 32];
    unsafe { beas_session_coefficients(s, coefs.as_mut_ptr(), 32) };
    assert_eq!(coefs, expect.contour.coefficients());
    unsafe { beas_session_free(s) };
}

#[test]
fn version_is_crate_version() {
    let v = unsafe { CStr::from_ptr(beas_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
