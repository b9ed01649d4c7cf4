//! Simulation studies: grids of generative models, replicate graphs and
//! chains, with results written as CSV.

mod plan;
mod plot;
mod runner;
pub mod seeds;

pub use plan::{
    CrpGrid, EpsilonGrid, ErGrid, ExperimentPlan, HeatmapGrid, Protocol, ScaleCounts, SingleRunGrid,
};
pub use plot::{emit_plot_script, PlotKind, PlotScript};
pub use runner::{
    estimate_cost, grid_points, parse_list, realize_model, run_experiment, write_csv, CostEstimate,
    GridPoint, PointModel, Row, RunOptions, COLUMNS,
};
