//! Density monotonicity for sliding minimal sets: exact test sets, Hausdorff
//! measures with error bars, the boundary-corrected density `F`, the
//! retraction competitor and a discrete area minimizer.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod competitor;
pub mod error;
pub mod functionals;
pub mod geom;
pub mod measures;
pub mod mesh;
pub mod monotone;
pub mod plateau;
pub mod quadrature;
pub mod zoo;

pub use error::{Error, Result};
pub use geom::{axis, pt, AffineFlat, Ball, BoundaryPiece, Multiplicity, Point, ShadeRegion, Similarity};
pub use measures::{MeasureResult, MeasuredSet, Method};
pub use mesh::{SimplicialSet, VertexTag};
pub use zoo::{AnalyticSet, SetKind, Slab};
pub use functionals::{BoundaryConfig, GaugeFunction};
pub use monotone::{FunctionalProfile, Mode, MonotoneVerdict};
pub use competitor::{DeformationParams, Deformation, Retraction};
pub use plateau::{SolveReport, SolverOptions};
