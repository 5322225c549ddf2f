//! Numerical toolkit for state-programmable quantum devices.
//!
//! A programmable gate is a fixed joint unitary `V` on system ⊗ ancilla that realizes
//! the channel `rho -> Tr_2[V (rho ⊗ sigma) V^dag]` for a program state `sigma`. A
//! programmable detector is a fixed joint observable `F` yielding the system POVM
//! `Tr_2[(I ⊗ sigma) F_i]`. The crate evaluates these objects, the closed-form
//! optimum for qubit gates, and two detector constructions (covering nets and the
//! SU(2)-covariant scheme).
//!
//! Everything numeric is generic over [`Real`] (`f32` or `f64`); the `*64` aliases
//! below fix the scalar to `f64`, which is what the validation suites use.

pub mod cartan;
pub mod channels;
pub mod covariant;
pub mod covering;
mod error;
pub mod linalg;
pub mod povm;
pub mod report;
mod scalar;
pub mod search;

pub use error::{Error, Result};
pub use scalar::{Real, C};

pub type ComplexMatrix64 = linalg::ComplexMatrix<f64>;
pub type UnitaryOp64 = linalg::UnitaryOp<f64>;
pub type DensityState64 = linalg::DensityState<f64>;
pub type KrausChannel64 = channels::KrausChannel<f64>;
pub type ProgrammableGate64 = channels::ProgrammableGate<f64>;
pub type Povm64 = povm::Povm<f64>;
pub type ProgrammableDetector64 = povm::ProgrammableDetector<f64>;
pub type SpinRep64 = covariant::SpinRep<f64>;
pub type UnitaryNet64 = covering::UnitaryNet;
pub type ComplexMatrix32 = linalg::ComplexMatrix<f32>;
pub type UnitaryOp32 = linalg::UnitaryOp<f32>;
pub type DensityState32 = linalg::DensityState<f32>;
