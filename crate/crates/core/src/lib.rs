//! Morse graphs of time series on cubical grids and the shift-averaged
//! transition vector field built from them.
//!
//! The pipeline: [`Dataset`] -> [`GridSpec`] -> [`count_transitions`] ->
//! [`build_multivalued_map`] -> [`morse_decomposition`] -> [`run_mgstd`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod error;
pub mod field;
pub mod graph;
pub mod grid;
pub mod sde;
pub mod select;
pub mod transitions;

pub use dataset::{
    ingest_csv, pca_project, read_binary, read_csv, reindex_interleave, standardize,
    transition_pairs, write_binary, write_csv, Dataset, Series, TransitionPair,
};
pub use error::{Error, Result};
pub use field::{
    canonical_average, edge_vectors, run_mgstd, run_shift, shift_field, shift_lattice, ArrowSet,
    EdgeVector, FieldCell, Interpolation, MgstdParams, MgstdRun, ShiftRun, VectorField,
};
pub use graph::{
    combinatorial_attractors, condensation_reachability, export_dot, morse_decomposition,
    morse_set_name, scc, transitive_reduction, MorseDecomposition, MorseGraph, MorseNode,
};
pub use grid::{barycenter, build_grid, CellIndex, GridSpec};
pub use sde::{
    double_well_1d, saddle_2d, simulate, srk2_step, BuiltinModel, Preset, SdeModel, SimConfig,
    SimulationSpec,
};
pub use select::{
    grid_coverage, ratio_curve, recommend_h, select_mu_star, select_mu_star_averaged,
    select_mu_star_from_counts, AveragedMuStar, GridRecommendation, MuStarSelection,
    SweepSettings, COVERAGE_N_MAX,
};
pub use transitions::{
    build_deterministic_map, build_multivalued_map, classify_pair, count_transitions,
    transition_probability, Digraph, Direction, TransitionCounts,
};
