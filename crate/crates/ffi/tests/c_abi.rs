use std::ffi::{CStr, CString};
use std::process::Command;
use std::ptr;

use wolffkit_ffi::*;

fn last_error() -> String {
    let p = wk_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dirac_wolff_matches_closed_form() {
    unsafe {
        let mut params = ptr::null_mut();
        assert_eq!(wk_params_new(3, 1.0, 2.0, 5.0, &mut params), WkStatus::Ok);
        let json = CString::new(r#"{"type":"points","atoms":[{"x":[0,0,0],"m":1}]}"#).unwrap();
        let mut mu = ptr::null_mut();
        assert_eq!(wk_measure_from_json(json.as_ptr(), 3, &mut mu), WkStatus::Ok);
        let x = [2.0, 0.0, 0.0];
        let mut v = 0.0;
        assert_eq!(wk_wolff_truncated(mu, params, x.as_ptr(), 3, f64::INFINITY, &mut v), WkStatus::Ok);
        assert!((v - 0.5).abs() < 1e-14);
        let mut mass = 0.0;
        assert_eq!(wk_measure_total_mass(mu, &mut mass), WkStatus::Ok);
        assert_eq!(mass, 1.0);
        let mut c = 0.0;
        let mut e = 0.0;
        assert_eq!(wk_radial_plap_solution(params, &mut c, &mut e), WkStatus::Ok);
        assert!((c - 0.5f64.sqrt()).abs() < 1e-12);
        wk_measure_free(mu);
        wk_params_free(params);
    }
}

#[test]
fn error_codes_and_messages() {
    unsafe {
        let mut params = ptr::null_mut();
        assert_eq!(wk_params_new(3, 1.0, 2.0, 0.5, &mut params), WkStatus::Regime);
        assert!(params.is_null());
        assert!(last_error().contains("q"));
        let bad = CString::new(r#"{"type":"points","atoms":[{"x":[0],"m":"x"}]}"#).unwrap();
        let mut mu = ptr::null_mut();
        assert_eq!(wk_measure_from_json(bad.as_ptr(), 0, &mut mu), WkStatus::Parse);
        assert!(last_error().contains("/atoms/0/m"));
        assert_eq!(wk_measure_from_json(ptr::null(), 0, &mut mu), WkStatus::NullPointer);
        let mut out = 0.0;
        assert_eq!(
            wk_wolff_truncated(ptr::null(), ptr::null(), ptr::null(), 0, 1.0, &mut out),
            WkStatus::NullPointer
        );
        wk_params_free(ptr::null_mut());
        wk_measure_free(ptr::null_mut());
        wk_string_free(ptr::null_mut());
    }
}

#[test]
fn iteration_constants_and_cp() {
    unsafe {
        let descr = CString::new("n=3,p=2,q=2").unwrap();
        let mut params = ptr::null_mut();
        assert_eq!(wk_params_parse(descr.as_ptr(), &mut params), WkStatus::Ok);
        let (mut eps, mut x0) = (0.0, 0.0);
        assert_eq!(wk_iteration_constants(params, 1.0, &mut eps, &mut x0), WkStatus::Ok);
        assert!((eps - 0.5).abs() < 1e-12 && (x0 - 1.0).abs() < 1e-12);
        assert_eq!(wk_cp(2.0), 1.0);
        assert_eq!(wk_cp(1.5), 2.0);
        wk_params_free(params);
    }
}

#[test]
fn pointwise_liouville_and_solve() {
    unsafe {
        let descr = CString::new("n=3,p=2,q=2").unwrap();
        let mut params = ptr::null_mut();
        assert_eq!(wk_params_parse(descr.as_ptr(), &mut params), WkStatus::Ok);
        let json = CString::new(r#"{"type":"points","atoms":[{"x":[0,0,0],"m":1}]}"#).unwrap();
        let mut mu = ptr::null_mut();
        assert_eq!(wk_measure_from_json(json.as_ptr(), 3, &mut mu), WkStatus::Ok);
        let xs = [1.0, 0.0, 0.0, 0.0, 2.0, 0.0];
        let mut c = 0.0;
        assert_eq!(wk_pointwise_condition(mu, params, xs.as_ptr(), 2, f64::INFINITY, &mut c), WkStatus::Ok);
        assert!(c.is_infinite());
        wk_measure_free(mu);
        wk_params_free(params);

        let descr = CString::new("n=1,alpha=0.4,p=2,q=3").unwrap();
        let mut params = ptr::null_mut();
        assert_eq!(wk_params_parse(descr.as_ptr(), &mut params), WkStatus::Ok);
        let mut values = vec![0.0; 64];
        values[20] = 1.0;
        let f = serde_json::json!({"box": {"generation": 0, "index": [0]}, "generation": -6, "values": values});
        let f = CString::new(f.to_string()).unwrap();
        let mut out = ptr::null_mut();
        assert_eq!(wk_solve(f.as_ptr(), params, -6, 0, &mut out), WkStatus::Ok);
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(out).to_str().unwrap()).unwrap();
        assert_eq!(doc["certificate"]["monotone"], serde_json::Value::Bool(true));
        wk_string_free(out);
        wk_params_free(params);
    }
}

#[test]
fn header_compiles_as_c() {
    let header = concat!(env!("CARGO_MANIFEST_DIR"), "/include/wolffkit.h");
    let Ok(status) = Command::new("cc").args(["-fsyntax-only", "-x", "c", "-std=c99", header]).status() else {
        return;
    };
    assert!(status.success());
    let text = std::fs::read_to_string(header).unwrap();
    for name in ["wk_params_new", "wk_measure_from_json", "wk_wolff_truncated", "wk_solve", "wk_last_error"] {
        assert!(text.contains(name), "{name} missing from header");
    }
}
