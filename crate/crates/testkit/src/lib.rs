//! Brute-force references for the `dsa-hotspot` algorithms plus seeded
//! instance generators.
//!
//! Everything here is written from the definitions, without calling the
//! production algorithms, and is only meant for small inputs.

pub mod geometry;
pub mod instances;
pub mod matching;
pub mod partition;
pub mod setcover;

pub use geometry::{brute_components, brute_conflicts, brute_group_edges, is_legal_template};
pub use instances::{
    doubling_family, library_from_layout, micro_instance, random_eliminators, random_gridded,
    random_small_layout,
};
pub use matching::{oracle_match, realized_hotspots, OracleMatch};
pub use partition::{oracle_decompose, OracleProblem, OracleSolution};
pub use setcover::{oracle_setcover, OracleCover};
