//! Reference spaces: lattices, trees, and a catalog of examples with known facts.

mod catalog;
mod lattice;
mod sequence;
mod tree;

pub use catalog::{
    build_example, build_example_with, noext, parse_example_spec, two_type_bp, BinaryDriftChain, CatalogEntry,
    DriftChain, ExampleDescriptor, Expected, GrowingDriftChain, KnownFact, NoExt, NoExtVariant, CATALOG_IDS,
};
pub use lattice::lattice_zd;
pub use sequence::{sequence_condition_check, SequenceCheck, SeriesVerdict};
pub use tree::{homogeneous_tree, radial_tree, Decoration};
