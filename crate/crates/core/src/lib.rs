//! Exploration of the AC-OPF feasible space: sequential max-distance data
//! collection, partitioned exhaustive sampling, and Hausdorff-distance
//! evaluation of the candidate objective functions that drive both.
//!
//! Everything numeric is generic over [`scalar::Scalar`] (any `num_traits`
//! float); the aliases below fix `f64` for ordinary use.

pub mod acpf;
pub mod case_model;
pub mod exhaustive_sampler;
pub mod fd;
pub mod linalg;
pub mod nlp_solver;
pub mod objective_catalog;
pub mod opf_problem;
pub mod persist;
pub mod scalar;
pub mod sequential_collector;
pub mod set_metrics;

pub use scalar::{real, Scalar};

pub type Network64 = case_model::Network<f64>;
pub type Admittance64 = case_model::Admittance<f64>;
pub type OperatingPoint64 = acpf::OperatingPoint<f64>;
