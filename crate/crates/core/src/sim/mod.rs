//! Scenario generators, univariate balance diagnostics, and the power-study driver.

mod diagnostics;
mod power;
mod scenario;

pub use diagnostics::{
    univariate_diagnostics, CovariateFunction, DiagnosticRow, UnivariateBalance,
};
pub use power::{
    generate, pooled_se, power_study, replicate_test_seed, MethodSpec, PowerCell, PowerFailure,
    PowerOptions, PowerRow, PowerTable, POWER_CSV_HEADER,
};
pub use scenario::{
    gen_gaussian_scenario, gen_motivating, motivating_probabilities, replicate_stream,
    MotivatingDraw, ScenarioConfig, ScenarioKind, MAX_REDRAWS,
};
