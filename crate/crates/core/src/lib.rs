//! Classical simulation of frequency-domain response properties of
//! two-orbital fermionic models, computed the way a four-qubit device would:
//! LCU transition-amplitude circuits over a native {CZ, CS, CS†, iToffoli}
//! gate set, noisy density-matrix execution with randomized compiling, and
//! tomography plus McWeeny purification feeding spectral and
//! density-density response functions.

pub mod circuit;
pub mod error;
pub mod math;
pub mod model;
pub mod pauli;
pub mod rc;
pub mod response;
pub mod sim;
pub mod tomo;

pub use circuit::{Circuit, CircuitCensus, DecompositionChoice, Gate};
pub use error::Error;
pub use model::{EigenSystem, PrepUnitary, QubitHamiltonian};
pub use pauli::{FermionKind, FermionOp, Pauli, PauliString, Phase, Spin, SymmetrySector};
pub use response::{FrequencySeries, TransitionAmplitudes};
pub use sim::{Channel, DensityMatrix, NoiseModel, StateVector};
pub use tomo::{ConditionalState, MeasurementRecord};
