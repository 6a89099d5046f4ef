use morrey_web::{classify_json, profile_json, region_csv};
use serde_json::Value;

#[test]
fn classify_reports_verdict() {
    let out = classify_json("N:s=2,u=2,p=1,q=1,d=1", "N:s=0,u=4,p=2,q=1,d=1").unwrap();
    let v: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["verdict"]["nuclear"], "yes");
    assert_eq!(v["verdict"]["threshold_nuclear"], "1");
    assert!(classify_json("N:s=2", "bmo:d=1").is_err());
}

#[test]
fn region_has_one_row_per_node() {
    let csv = region_csv(
        "N:s=2,u=2,p=1,q=1,d=1",
        "N:s=sweep(0..2,3),u=isweep(1/4..1/2,2),p=2,q=1,d=1",
    )
    .unwrap();
    assert_eq!(csv.lines().count(), 1 + 6);
    assert!(csv.starts_with("x,y,compact,nuclear"));
}

#[test]
fn profile_levels_are_sandwiched() {
    let out = profile_json("2", "2", "4", "1", 1, 3).unwrap();
    let v: Value = serde_json::from_str(&out).unwrap();
    let levels = v["levels"].as_array().unwrap();
    assert_eq!(levels.len(), 4);
    for l in levels {
        let (lo, hi) = (
            l["nuclear_lower"].as_f64().unwrap(),
            l["nuclear_upper"].as_f64().unwrap(),
        );
        assert!(lo <= hi * (1.0 + 1e-9));
    }
    assert!(profile_json("2", "4", "4", "1", 1, 3).is_err());
    assert!(profile_json("2", "2", "4", "1", 1, 9).is_err());
}
