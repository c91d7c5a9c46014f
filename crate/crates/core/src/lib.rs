//! Exact representation of compact geometric patterns over the binary cube.
//!
//! A pattern is given as clusters of singletons and finite graphs. The
//! library assigns each cluster and each arc a cone (a cylinder fixing
//! finitely many named coordinates), encodes arc parameters as binary digit
//! streams along a shared position axis, and can run the whole construction
//! backwards: locate the image of an address, cut the cube at a finite
//! depth, and check that the resulting cell complex reproduces the
//! pattern's combinatorial shape.
//!
//! Layout:
//! - [`index`], [`cone`]: named coordinates and the cone algebra.
//! - [`codec`]: exact binary encoding of parameters in `[0, 1]`.
//! - [`model`]: input patterns (graphs and singletons) and point paths.
//! - [`rep`]: the builder, fibers of points, and the address-to-point map.
//! - [`verify`]: brute-force finite-depth checks.
//!
//! All arithmetic is exact; there is no floating point anywhere.

pub mod codec;
pub mod cone;
pub mod error;
pub mod index;
pub mod model;
pub mod rep;
mod unionfind;
pub mod verify;

pub use codec::{
    approximate_param, classify, decode_spec, encode_param, first_disagreement, parse_param,
    AddressSpec, Decoded, DyadicInterval, FiberSpec, Param, ParamClass, TailPattern,
};
pub use cone::{covering_basis, partition, refine, BitString, CompiledCone, Cone};
pub use error::{Error, Result};
pub use index::{Index, IndexAllocator, Scope, Tier};
pub use model::{Arc, Cluster, GeometricModel, PointLoc, PointRef, TopologyInvariants};
pub use rep::{
    build_polycrystal, ArcConeEntry, CellEntry, CellRegistry, Located, Manifest, Polycrystal,
    RegistryCell, RegistryCellKind, Representation,
};
pub use verify::{
    check_fiber_separation, check_partition, check_refinement, diameter_profile,
    quotient_complex, verify_suite, Cell, CellImage, CheckResult, PairSeparation, PartitionMode,
    PartitionReport, QuotientComplex, RefinementReport, SeparationReport, SuiteReport,
    VerifyOptions, DEFAULT_MAX_ENUM_DEPTH,
};
