//! Construction of compactly supported orthogonal wavelets as a nonconvex
//! feasibility problem, solved with Douglas–Rachford and centering methods.
//!
//! All numeric types are generic over [`Real`] (`f32` or `f64`); the `*64`
//! aliases below fix the double-precision instantiation used by the harness
//! and the command-line tool.

pub mod algebra;
pub mod constraints;
pub mod ensemble;
pub mod error;
pub mod harness;
pub mod scalar;
pub mod solvers;
pub mod wavelet;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Mat2F64 = algebra::Mat2<f64>;
pub type HPointF64 = algebra::HPoint<f64>;
pub type EnsembleF64 = ensemble::Ensemble<f64>;
pub type CoeffSeqF64 = ensemble::CoeffSeq<f64>;
pub type ProductPointF64 = ensemble::ProductPoint<f64>;
pub type ProblemSpecF64 = constraints::ProblemSpec<f64>;
pub type WaveletSetsF64 = constraints::WaveletSets<f64>;
pub type SolveConfigF64 = solvers::SolveConfig<f64>;
pub type FilterPairF64 = wavelet::FilterPair<f64>;
pub type ResidualReportF64 = wavelet::ResidualReport<f64>;
pub type RunRecordF64 = solvers::RunRecord<f64>;
pub type BenchConfigF64 = harness::BenchConfig<f64>;
pub type BenchReportF64 = harness::BenchReport<f64>;

pub type Mat2F32 = algebra::Mat2<f32>;
pub type EnsembleF32 = ensemble::Ensemble<f32>;
pub type ProblemSpecF32 = constraints::ProblemSpec<f32>;
pub type WaveletSetsF32 = constraints::WaveletSets<f32>;
