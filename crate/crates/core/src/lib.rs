//! Motion estimation and compensation for equisolid fisheye video.
//!
//! Three block-matching estimators are provided:
//!
//! * **TMC**: plain translational block matching in the fisheye image.
//! * **PTMC**: motion vectors live on a single forward-facing perspective plane;
//!   block pixels are reprojected through it before sampling the reference.
//! * **VA-PTMC**: like PTMC, but each block may also pick the bottom/top or
//!   left/right viewport, realizing motion planes of different orientation.
//!   Pixels whose rays fall behind a viewport are handled on its virtual image
//!   plane so that both halves of an opposite viewport pair are mapped exactly.
//!
//! The geometry and interpolation kernels are generic over [`Real`]; the
//! estimation pipeline runs in `f64`.

pub mod geometry;
pub mod metrics;
pub mod motion;
pub mod sampling;
pub mod scalar;
pub mod sideinfo;
pub mod synth;

pub use geometry::{ImagePlane, MotionVector, Viewport};
pub use metrics::CircularMask;
pub use motion::{BlockEstimate, Cost, Method, MotionField, SearchConfig, Strategy};
pub use sampling::{Frame, SubpelGrid};
pub use scalar::Real;

pub type FisheyeCamera = geometry::FisheyeCamera<f64>;
pub type FisheyeCamera32 = geometry::FisheyeCamera<f32>;
pub type UnitDirection = geometry::UnitDirection<f64>;
pub type UnitDirection32 = geometry::UnitDirection<f32>;
pub type PlanePoint = geometry::PlanePoint<f64>;
pub type PlanePoint32 = geometry::PlanePoint<f32>;
pub type PixelCoord = geometry::PixelCoord<f64>;
pub type PixelCoord32 = geometry::PixelCoord<f32>;
