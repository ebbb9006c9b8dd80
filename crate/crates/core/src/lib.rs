//! Hotspot-aware DSA grouping and multiple-patterning mask assignment for
//! via and contact layers.
//!
//! The flow is: build the conflict/grouping hypergraph of a layout, find
//! windows where a library hotspot could appear, choose a small set of added
//! conflict edges and forced templates that kill those windows (greedy set
//! cover over a bucket list), then group and color each connected component
//! and audit the result.

pub mod cover;
pub mod decompose;
pub mod error;
pub mod experiment;
pub mod graph;
pub mod hotspot;
pub mod layout;
pub mod matcher;
pub mod pipeline;
pub mod render;
pub mod tech;
pub mod verify;

pub use error::{Error, Result};
pub use graph::{build_graph, ConflictEdge, EdgeOrigin, GroupEdge, LayoutGraph};
pub use hotspot::{
    gen_random_patterns, load_library, HotspotLibrary, HotspotPattern, PatternGenSpec,
};
pub use layout::{
    gen_random_layout, load_layout, validate_layout, GridSpec, Layout, LayoutFormat, Via, ViaId,
};
pub use matcher::{
    enumerate_eliminators, find_potential_hotspots, Eliminator, EliminatorKind, PotentialHotspot,
};
pub use tech::TechParams;
