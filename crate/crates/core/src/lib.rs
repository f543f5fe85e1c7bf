pub mod tensor;
pub mod image;
pub mod imgproc;
pub mod io;
pub mod geometry;
pub mod icp;
