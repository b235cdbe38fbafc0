use std::path::PathBuf;

use hexrotor::scenario::{presets, Scenario};
use hexrotor::wrench::{build_actuation_matrix, DesignConfig};
use hexrotor::Error;
use serde_json::Value;

fn read(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name);
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

/// Structural equality with a relative tolerance on numbers.
fn close(a: &Value, b: &Value) -> bool {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap(), y.as_f64().unwrap());
            (x - y).abs() <= 1e-9 * (1.0 + x.abs().max(y.abs()))
        }
        (Value::Array(x), Value::Array(y)) => {
            x.len() == y.len() && x.iter().zip(y).all(|(x, y)| close(x, y))
        }
        (Value::Object(x), Value::Object(y)) => {
            x.len() == y.len() && x.iter().all(|(k, v)| y.get(k).is_some_and(|w| close(v, w)))
        }
        _ => a == b,
    }
}

#[test]
fn scenario_fixtures_match_presets() {
    let cases = [
        ("position_step.json", presets::position_step()),
        ("attitude_step.json", presets::attitude_step()),
        ("waypoint_mission.json", presets::waypoint_mission(1)),
        ("noload_mission.json", presets::noload_mission(1)),
        ("payload_mission.json", presets::payload_mission(1)),
    ];
    for (name, preset) in cases {
        let text = read(name);
        let loaded = Scenario::from_json(&text).unwrap();
        let fixture: Value = serde_json::from_str(&text).unwrap();
        let expected: Value = serde_json::from_str(&preset.to_json()).unwrap();
        assert!(close(&fixture, &expected), "{name} differs from its preset");
        assert!(close(
            &serde_json::from_str(&loaded.to_json()).unwrap(),
            &expected
        ));
    }
}

#[test]
fn design_fixtures() {
    let selected: DesignConfig = serde_json::from_str(&read("selected_design.json")).unwrap();
    assert_eq!(selected, DesignConfig::selected(1.0, 0.01));
    let limits = build_actuation_matrix(&selected).unwrap().limits().unwrap();
    assert!((limits.force - 2.0).abs() < 0.01);

    let singular: DesignConfig = serde_json::from_str(&read("singular_design.json")).unwrap();
    assert!(matches!(
        build_actuation_matrix(&singular),
        Err(Error::SingularDesign { .. })
    ));
}
