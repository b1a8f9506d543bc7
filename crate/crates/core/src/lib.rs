//! School internet-connectivity mapping from open geospatial data.
//!
//! The crate covers the full tabular pipeline:
//!
//! 1. [`geodata`] - core geographic types plus parsers for ASCII grid
//!    rasters, school CSVs, and GeoJSON vector layers.
//! 2. [`cleaning`] - the four-stage record-cleaning cascade (keyword
//!    filter, proximity dedup, fuzzy name dedup, settlement filter).
//! 3. [`features`] - zonal statistics over circular buffers, nearest
//!    transmission-line / speed-test-tile features, administrative-zone
//!    one-hot encoding, and optional precomputed embedding columns.
//! 4. [`preprocess`] - min-max scaling, Pearson correlation pruning, and
//!    seeded stratified train/validation/test splitting.
//! 5. [`models`] - six classifier families trained from scratch plus
//!    k-fold grid-search selection.
//! 6. [`eval`] - confusion-matrix metrics, repeated-run aggregation,
//!    feature importance, and GeoJSON prediction-map export.
//! 7. [`synthlab`] - seeded synthetic rasters and school sets with
//!    planted signal, used as oracles by the test suite.
//!
//! Every source of randomness flows through [`rng::SplitMix64`], so a run
//! is a pure function of its inputs and one root seed.

pub mod cleaning;
pub mod eval;
pub mod features;
pub mod geodata;
pub mod models;
pub mod preprocess;
pub mod rng;
pub mod synthlab;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
