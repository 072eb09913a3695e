use std::ffi::{CStr, CString};
use std::ptr;

use ssd_core::assurance::{freq_power, two_prior_assurance, PriorSize};
use ssd_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ssd_last_error()) }.to_string_lossy().into_owned()
}

fn scenario(json: &str) -> *mut SsdScenario {
    let text = CString::new(json).unwrap();
    let mut out = ptr::null_mut();
    let s = unsafe { ssd_scenario_from_json(text.as_ptr(), &mut out) };
    assert_eq!(s, SsdStatus::Ok, "{}", last_error());
    out
}

#[test]
fn scalar_functions_match_core() {
    let mut v = 0.0;
    unsafe {
        assert_eq!(ssd_freq_power(0.4, 1.0, 34.0, 0.05, &mut v), SsdStatus::Ok);
        assert_eq!(v, freq_power(0.4, 1.0, 34.0, 0.05).unwrap());
        assert_eq!(ssd_two_prior_assurance(0.4, 1.0, 34.0, 2.0, f64::INFINITY, 0.05, &mut v), SsdStatus::Ok);
        assert_eq!(v, two_prior_assurance(0.4, 1.0, 34.0, 2.0, PriorSize::Infinite, 0.05).unwrap());
        assert_eq!(ssd_std_normal_quantile(0.975, &mut v), SsdStatus::Ok);
        assert!((v - 1.959963984540054).abs() < 1e-14);
        assert_eq!(ssd_freq_power(0.4, -1.0, 34.0, 0.05, &mut v), SsdStatus::InvalidArgument);
    }
    assert!(last_error().contains("sigma"), "{}", last_error());
}

#[test]
fn frequentist_size_is_34() {
    let scn = scenario(r#"{"scenario": "scalar", "delta": 0.4, "alpha": 0.05, "gamma": 0.75, "grid": {"min": 10, "max": 100, "step": 10}}"#);
    let mut res = ptr::null_mut();
    let mut n = 0usize;
    unsafe {
        assert_eq!(ssd_scenario_size(scn, 1, &mut res), SsdStatus::Ok);
        assert_eq!(ssd_sizing_n_star(res, &mut n), SsdStatus::Ok);
        assert_eq!(ssd_sizing_curve_len(res), 10);
        let mut pt = SsdCurvePoint::default();
        assert_eq!(ssd_sizing_curve_point(res, 2, &mut pt), SsdStatus::Ok);
        assert_eq!(pt.n, 30);
        assert_eq!(pt.assurance, freq_power(0.4, 1.0, 30.0, 0.05).unwrap());
        assert!(ssd_sizing_refinement_len(res) > 0);
        assert_eq!(ssd_sizing_curve_point(res, 10, &mut pt), SsdStatus::OutOfRange);
        ssd_sizing_free(res);
        ssd_scenario_free(scn);
    }
    assert_eq!(n, 34);
}

#[test]
fn unreachable_target_keeps_handle() {
    let scn = scenario(r#"{"scenario": "scalar", "delta": 0.4, "gamma": 0.99, "grid": {"min": 1, "max": 20, "step": 1}}"#);
    let mut res = ptr::null_mut();
    let (mut n, mut max) = (0usize, 0.0);
    unsafe {
        assert_eq!(ssd_scenario_size(scn, 1, &mut res), SsdStatus::NotAchieved);
        assert!(!res.is_null());
        assert_eq!(ssd_sizing_n_star(res, &mut n), SsdStatus::NotAchieved);
        assert_eq!(ssd_sizing_max_assurance(res, &mut max), SsdStatus::Ok);
        ssd_sizing_free(res);
        ssd_scenario_free(scn);
    }
    assert_eq!(max, freq_power(0.4, 1.0, 20.0, 0.05).unwrap());
}

#[test]
fn monte_carlo_is_seeded() {
    let scn = scenario(r#"{"scenario": "costeff", "K": 10000, "replicates": 400}"#);
    let (mut a, mut b, mut se) = (0.0, 0.0, 0.0);
    unsafe {
        assert_eq!(ssd_scenario_assurance(scn, 382, 9, &mut a, &mut se), SsdStatus::Ok);
        assert_eq!(ssd_scenario_assurance(scn, 382, 9, &mut b, ptr::null_mut()), SsdStatus::Ok);
        ssd_scenario_free(scn);
    }
    assert_eq!(a, b);
    assert!(se > 0.0 && se < 0.05);
}

#[test]
fn bad_scenarios_are_rejected() {
    let mut out = ptr::null_mut();
    let text = CString::new(r#"{"scenario": "costeff"}"#).unwrap();
    assert_eq!(unsafe { ssd_scenario_from_json(text.as_ptr(), &mut out) }, SsdStatus::InvalidArgument);
    assert!(out.is_null());
    assert!(last_error().contains("`K`"));
    let bad = [0xffu8, 0];
    assert_eq!(unsafe { ssd_scenario_from_json(bad.as_ptr().cast(), &mut out) }, SsdStatus::InvalidUtf8);
    assert_eq!(unsafe { ssd_scenario_from_json(ptr::null(), &mut out) }, SsdStatus::NullPointer);
    unsafe {
        ssd_scenario_free(ptr::null_mut());
        ssd_sizing_free(ptr::null_mut());
        assert_eq!(ssd_sizing_curve_len(ptr::null()), 0);
    }
}

#[test]
fn version_is_the_package_version() {
    let v = unsafe { CStr::from_ptr(ssd_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
