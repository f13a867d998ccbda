//! Regenerates the `solve` fixtures in tests/fixtures and the shipped
//! tableIII.json.
//!
//!     cargo run -p arcpose-cli --example make_fixture

use std::path::Path;

use arcpose::frames::rotation_to_euler;
use arcpose::harness::ExperimentConfig;
use arcpose::sim::{generate_sample, Scenario};
use serde_json::json;

fn write(path: &Path, value: &serde_json::Value) {
    std::fs::write(path, serde_json::to_string_pretty(value).unwrap() + "\n").unwrap();
    println!("wrote {}", path.display());
}

fn main() {
    let root = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = root.join("tests/fixtures");
    std::fs::create_dir_all(&dir).unwrap();

    let cfg = ExperimentConfig {
        sigma: 0.0,
        scenario: Scenario::CompleteSemicircle,
        ..Default::default()
    };
    let sim = cfg.sample_config();
    let sample = generate_sample(&sim, 0, 0).unwrap();
    let truth = sample.truth.pose;
    let [roll, pitch, yaw] = rotation_to_euler(&truth.rotation).unwrap().to_degrees();
    let t = truth.translation;

    write(&dir.join("scene.json"), &serde_json::to_value(&sim.scene).unwrap());
    write(
        &dir.join("observations_seed0.json"),
        &json!({ "schema_version": 1, "camera": sim.intrinsics, "observations": sample.observations }),
    );
    write(
        &dir.join("truth_seed0.json"),
        &json!({ "roll_deg": roll, "pitch_deg": pitch, "yaw_deg": yaw, "x_m": t.x, "y_m": t.y, "z_m": t.z }),
    );
    write(
        &dir.join("one_observation.json"),
        &json!({ "schema_version": 1, "camera": sim.intrinsics, "observations": &sample.observations[..1] }),
    );

    let table = arcpose_config_json();
    write(&root.join("../../tableIII.json"), &table);
}

/// Default experiment, spelled out in full.
fn arcpose_config_json() -> serde_json::Value {
    let e = ExperimentConfig::default();
    json!({
        "schema_version": 1,
        "scene": e.scene,
        "camera": e.intrinsics,
        "sigma_px": e.sigma,
        "radius_m": e.radius,
        "arc_mode": e.scenario,
        "capture": e.capture,
        "pose": {
            "height_m": e.constraint.height,
            "max_tilt_deg": e.constraint.max_tilt.to_degrees(),
            "min_visible": e.constraint.min_visible,
            "visible_fraction": e.constraint.visible_fraction,
        },
        "samples": e.samples,
        "algorithms": e.algorithms,
        "seed": e.seed,
        "sweep": {
            "sigma_px": [0.0, 1.0, 2.0, 3.0, 4.0],
            "radius_m": [0.06, 0.08, 0.10, 0.12, 0.14, 0.16],
        },
    })
}
