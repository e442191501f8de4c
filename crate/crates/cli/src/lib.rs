//! Scenario runner and check suites for the moyal-core workbench.

pub mod analyses;
pub mod fields;
pub mod registry;
pub mod report;
pub mod run;
pub mod scenario;
pub mod suites;
pub mod svg;

pub use registry::Registry;
pub use run::{run_scenario, RunError, RunOptions};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Scenarios shipped with the binary, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("classical-limit", include_str!("../scenarios/classical-limit.scenario")),
    ("clifford-demo", include_str!("../scenarios/clifford-demo.scenario")),
    ("coherent", include_str!("../scenarios/coherent.scenario")),
    ("shadow-cat", include_str!("../scenarios/shadow-cat.scenario")),
    ("shadow-gaussian", include_str!("../scenarios/shadow-gaussian.scenario")),
    ("two-slit", include_str!("../scenarios/two-slit.scenario")),
    ("wigner-cat", include_str!("../scenarios/wigner-cat.scenario")),
];

pub fn bundled(name: &str) -> Option<&'static str> {
    let name = name.strip_suffix(".scenario").unwrap_or(name);
    BUNDLED.iter().find(|(n, _)| *n == name).map(|(_, t)| *t)
}
