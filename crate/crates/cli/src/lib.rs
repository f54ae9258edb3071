//! Library surface of the `srlab` binary: scenario configuration, the
//! scenario runner, and the JSON run report. Kept as a library so
//! integration tests can exercise the same types the binary uses.

pub mod report;
pub mod runner;
pub mod scenario;

/// The scenario files bundled with the binary, written out by
/// `srlab emit-goldens`.
pub const GOLDEN_SCENARIOS: [(&str, &str); 6] = [
    ("sphere-hemisphere", include_str!("../scenarios/sphere-hemisphere.toml")),
    ("chf-1", include_str!("../scenarios/chf-1.toml")),
    ("qhf-1", include_str!("../scenarios/qhf-1.toml")),
    ("heisenberg-ball", include_str!("../scenarios/heisenberg-ball.toml")),
    ("martinet-box", include_str!("../scenarios/martinet-box.toml")),
    ("spherical-band", include_str!("../scenarios/spherical-band.toml")),
];
