pub mod dpp;
pub mod eigen;
pub mod gaps;
pub mod gaudin;
pub mod gue;
pub mod pb;
pub mod hermite;
pub mod minor_kernel;
pub mod quadrature;
pub mod semicircle;
