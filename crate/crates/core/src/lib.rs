//! Moments, asymptotics and Monte Carlo estimators for cost concentration of
//! alternated disentangled unitary coupled-cluster ansätze.

pub mod asymptotics;
pub mod combin;
pub mod error;
pub mod estimators;
pub mod hamiltonian;
pub mod moment;
pub mod quad;
pub mod rotations;
pub mod sector;

pub use error::{Error, Result};
pub use hamiltonian::{ElectronicHamiltonian, ObservableTerm, TermKind};
pub use rotations::{build_ansatz, AnsatzClass, AnsatzSpec, ParameterVector, Rotation, RotationKind};
pub use sector::{BasisState, Sector, SectorVector};
