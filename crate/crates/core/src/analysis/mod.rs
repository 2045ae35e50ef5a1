//! Validation and counterfactual studies built on the two models.
//!
//! - [`probability_correction_test`] checks live against hindsight coding probabilities.
//! - [`yy_binning`], [`predictor_correlations`] and [`project_correlation_study`]
//!   measure how well SCH tracks coding time.
//! - [`beta_grid_search`] weighs deleted against added lines.
//! - [`file_spread_counterfactual`] and [`token_swap_cost`] edit features and
//!   re-ask the standard coder.

mod correction;
mod counterfactual;
mod validation;

pub use correction::{
    decile_of, probability_correction_test, CorrectionConfig, CorrectionReport, DecileCorrection, DEFAULT_FLAG_COUNTS,
    REFERENCE_FALSE_POSITIVE_RATE,
};
pub use counterfactual::{
    file_spread_counterfactual, token_swap_cost, CostReport, FileSpreadReport, SpreadLevel, SpreadStep, TokenSwapReport,
};
pub use validation::{
    beta_grid, beta_grid_search, main_contributors, predictor_correlations, project_correlation_study, yy_binning,
    BetaSearch, ChangeOutcome, PredictorCorrelation, ProjectCommit, ProjectRow, ProjectStudy, YyBin, YyReport,
};

/// Reference magnitudes reported at full scale in the original study; recorded, never asserted.
pub mod reference {
    pub const YY_R_SQUARED: f64 = 0.99;
    pub const PROJECT_PEARSON: f64 = 0.80;
    pub const PROJECT_SLOPE: f64 = 0.98;
    pub const LOC_BASELINE_PEARSON: f64 = 0.25;
    pub const CHURN_BASELINE_PEARSON: f64 = 0.21;
    pub const SECONDS_PER_EXTRA_FILE: f64 = 32.0;
    pub const BEST_BETA: f64 = -0.005;

    /// Spearman against expected coding time and against the standard coder prediction.
    pub const TABLE1: [(&str, f64, f64); 6] = [
        ("files touched", 0.136, 0.325),
        ("spaces", 0.146, 0.409),
        ("tokens", 0.157, 0.428),
        ("lines added + deleted", 0.175, 0.457),
        ("lines added", 0.192, 0.496),
        ("standard coder prediction", 0.390, 1.000),
    ];

    /// Java token swaps: from, to, cost in seconds.
    pub const TOKEN_SWAP_SECONDS: [(&str, &str, f64); 16] = [
        ("private", "public", 83.0),
        ("public", "private", -54.0),
        ("private", "protected", 22.0),
        ("protected", "private", -33.0),
        ("protected", "public", 24.0),
        ("public", "protected", -50.0),
        ("<=", "<", 34.0),
        ("<", "<=", -125.0),
        (">=", ">", 80.0),
        (">", ">=", -216.0),
        ("==", "!=", 20.0),
        ("!=", "==", -10.0),
        ("interface", "class", -38.0),
        ("class", "interface", -8.0),
        ("implements", "extends", -4.0),
        ("extends", "implements", 8.0),
    ];
}
