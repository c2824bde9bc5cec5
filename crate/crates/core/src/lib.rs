pub mod geom;
pub mod integrand;
pub mod surface;
pub mod rng;
pub mod energy;
pub mod analysis;
pub mod goodtetra;
pub mod minimize;
pub mod cli;
