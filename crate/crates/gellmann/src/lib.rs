pub mod halfint;
pub mod linalg;
pub mod so3;
pub mod so4;
pub mod so5;
pub mod repspace;
pub mod shear;
pub mod son;
pub mod verify;
