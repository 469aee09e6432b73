use rkrd_wasm::{audit_text_json, calibrate_json, gaussian_curve_json};
use serde_json::Value;

fn parse(s: &str) -> Value {
    serde_json::from_str(s).unwrap()
}

#[test]
fn calibration_reports_lambda0_and_references() {
    let v = parse(&calibrate_json(1.0, 0.005, 10.0).unwrap());
    assert!((v["lambda0"].as_f64().unwrap() - 1.8394e-3).abs() < 1e-7);
    let sigma = v["sigma"].as_f64().unwrap();
    assert!(v["classic_sigma"].as_f64().unwrap() >= sigma);
    let r = v["renyi"].as_array().unwrap();
    assert_eq!(r.len(), 3);
    let expect = 12.0 * 100.0 / (2.0 * sigma * sigma);
    assert!((r[2]["renyi"].as_f64().unwrap() - expect).abs() < 1e-12);
    assert!(calibrate_json(-1.0, 0.005, 10.0).is_err());
}

#[test]
fn curve_is_non_increasing_in_lambda() {
    let v = parse(&gaussian_curve_json(10.0, 6.0669, 5, 60, 6.0, 8, 1).unwrap());
    let vals: Vec<f64> = v["value"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(vals.len(), 8);
    assert!(vals.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{vals:?}");
    assert!((v["renyi"].as_f64().unwrap() - 8.1506).abs() < 1e-4);
    assert_eq!(v, parse(&gaussian_curve_json(10.0, 6.0669, 5, 60, 6.0, 8, 1).unwrap()));
}

#[test]
fn curve_limits() {
    assert!(gaussian_curve_json(10.0, 1.0, 2, 5000, 2.0, 8, 0).is_err());
    assert!(gaussian_curve_json(10.0, 1.0, 2, 50, 2.0, 1, 0).is_err());
}

#[test]
fn audit_of_identical_text_fails_to_reject() {
    let text = "a,b\n0.1,0.2\n0.4,-0.3\n1.0,0.5\n-0.7,0.9\n0.3,0.3\n";
    let v = parse(&audit_text_json(text, text, 1.0, 0.005, 2.0, 0.0).unwrap());
    assert_eq!(v["decision"], "fail_to_reject");
    assert!(v["statistic"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn audit_reports_parse_errors_by_side() {
    let e = audit_text_json("1,2\n3,x\n", "1,2\n", 1.0, 0.005, 2.0, 0.0).unwrap_err();
    assert!(e.starts_with("first sample set") && e.contains("line 2"), "{e}");
}
