//! Panoramic data-generation toolkit.
//!
//! The crate renders analytic 3D scenes into six cube faces, stitches them
//! into equirectangular (ERP) frames with pixel-aligned depth, semantic and
//! entity ground truth, plans dynamically feasible minimum-snap UAV
//! trajectories, simulates interacting pedestrians with exported 3D
//! keypoints, and evaluates the standard panoramic metric families
//! (depth, segmentation, pedestrian distance, navigation).
//!
//! Modules:
//! - [`sphere`]: ERP / direction / cube-face coordinate conversions.
//! - [`scene`]: analytic ray-cast renderer (cube faces and direct ERP).
//! - [`stitch`]: cube-to-ERP resampling with slant-range depth.
//! - [`traj`]: minimum-snap trajectory planning and route generation.
//! - [`ped`]: seeded pedestrian world with keypoint export.
//! - [`metrics`]: depth / segmentation / MPDE / VLN evaluation kernels.
//! - [`io`]: PFM, PNG, palette, and manifest file formats.
//!
//! ## Example
//! ```
//! use omni360::scene::{render_cube, CameraPose, Scene, ScenePrimitive, Shape};
//! use omni360::stitch::stitch;
//!
//! let scene = Scene::new(vec![ScenePrimitive {
//!     shape: Shape::Sphere { center: [0.0, 0.0, 5.0], radius: 1.0 },
//!     albedo: [200, 40, 40],
//!     semantic_id: 1,
//!     entity_id: 1,
//! }])?;
//! let cube = render_cube(&scene, &CameraPose::identity(), 64)?;
//! let erp = stitch(&cube, 32)?;
//! assert_eq!((erp.width(), erp.height()), (64, 32));
//! # Ok::<(), omni360::Error>(())
//! ```

mod error;

pub mod io;
pub mod metrics;
pub mod ped;
pub mod raster;
pub mod scene;
pub mod sphere;
pub mod stitch;
pub mod traj;

pub use error::{Error, Result};
