//! Named scenario presets: complete run configurations for the worked
//! systems, expressed through the same schema a config file uses.

use triflow::presets;

use crate::config::{
    domain_to_config, group_to_config, BallConfig, CovarianceConfig, FieldConfig,
    IntegrateConfig, PendulumConfig, ReebConfig, RunConfig,
};
use crate::CliError;

pub const SCENARIOS: [&str; 5] =
    ["example3", "pendulum", "figure8", "reeb-genus2", "heegaard-s3"];

/// The scaling lattice group with the quadratic field of the worked
/// hyperbolic run: H1(q) = q + (1/2 + sqrt(3)/2 i + 5 j), H2 = 1.
fn example3() -> RunConfig {
    let s = 3.0f64.sqrt();
    RunConfig {
        scenario: Some("example3".to_string()),
        group: Some(group_to_config(&presets::lattice_scaling_group())),
        domain: Some(domain_to_config(&presets::lattice_scaling_domain())),
        field: Some(FieldConfig {
            m: 2,
            ball_radius: 2,
            h1: vec![[0.5, s / 2.0, 5.0, 0.0], [1.0, 0.0, 0.0, 0.0]],
            h2: vec![[1.0, 0.0, 0.0, 0.0]],
            points: None,
        }),
        covariance: Some(CovarianceConfig::default()),
        integrate: Some(IntegrateConfig::default()),
        ..RunConfig::default()
    }
}

fn pendulum() -> RunConfig {
    RunConfig {
        scenario: Some("pendulum".to_string()),
        pendulum: Some(PendulumConfig::default()),
        ..RunConfig::default()
    }
}

fn figure8() -> RunConfig {
    RunConfig {
        scenario: Some("figure8".to_string()),
        ball: Some(BallConfig::default()),
        ..RunConfig::default()
    }
}

fn reeb_genus2() -> RunConfig {
    RunConfig {
        scenario: Some("reeb-genus2".to_string()),
        reeb: Some(ReebConfig { system: "genus2".to_string(), ..ReebConfig::default() }),
        ..RunConfig::default()
    }
}

fn heegaard_s3() -> RunConfig {
    RunConfig {
        scenario: Some("heegaard-s3".to_string()),
        reeb: Some(ReebConfig {
            system: "torus".to_string(),
            genus: 1,
            psi: [[0, 1], [1, 0]],
            ..ReebConfig::default()
        }),
        ..RunConfig::default()
    }
}

pub fn preset(name: &str) -> Result<RunConfig, CliError> {
    match name {
        "example3" => Ok(example3()),
        "pendulum" => Ok(pendulum()),
        "figure8" => Ok(figure8()),
        "reeb-genus2" => Ok(reeb_genus2()),
        "heegaard-s3" => Ok(heegaard_s3()),
        other => Err(CliError::Config(format!(
            "unknown scenario {other:?} (available: {})",
            SCENARIOS.join(", ")
        ))),
    }
}
