//! The panel measurement pipeline: ROI extraction, intensity statistics,
//! full parameter sweeps, run aggregation and grouped/trend reports.

pub mod aggregate;
pub mod io;
pub mod report;
pub mod roi;
pub mod stats;
pub mod sweep;

pub use aggregate::{aggregate_runs, AggregatedRecord};
pub use report::{group_compare, plot_series, trend_check, GroupSummary, Grouping, PaintTrend, PlotPoint, TrendReport};
pub use roi::{extract_panel_roi, DEFAULT_ROI_MARGIN};
pub use stats::{intensity_stats, IntensityStats};
pub use sweep::{run_sweep, ExperimentRecord, SweepCell, SweepGrid, SweepOptions, SweepResult, SweepSettings};

/// Cells with fewer ROI points than this are flagged unreliable.
pub const MIN_POINTS_THRESHOLD: usize = 10;

/// Intensity slack for monotonicity checks.
pub const MONOTONE_SLACK: f64 = 1.0;
