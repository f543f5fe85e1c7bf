//! Point clouds, rigid transforms and PLY I/O.

mod cloud;
mod error;
pub mod ply;
mod transform;

pub use cloud::PointCloud;
pub use error::GeometryError;
pub use ply::{decode_ply, encode_ply, read_ply, write_ply, PlyFormat};
pub use transform::{transform_points, RigidTransform, ROTATION_TOLERANCE};
