//! Probabilistic toolkit for joint measurements: information states and
//! stochastic-kernel observables, quantum states and POV measures, Bell- and
//! CHSH-form inequality checkers with their sufficient conditions, plus
//! violation search and seeded Monte-Carlo simulation.

pub mod inequalities;
pub mod info;
pub mod linalg;
pub mod quantum;
pub mod search;
pub mod sim;

pub use inequalities::{ChshCoefficients, ConstraintClass, InequalityReport, Sign};
pub use info::{
    GeneralizedObservable, InfoError, InformationState, JointObservable, OutcomeSet, Provenance,
    Side,
};
pub use linalg::{ComplexMatrix, HermitianSpectrum, LinalgError};
pub use quantum::{
    DensityOperator, JointPov, JointPovForm, PovMeasure, QuantumError, SeparableDecomposition,
};
pub use search::{BoundResult, Method, QubitSetting, SearchBudget, SearchError, Witness};
pub use sim::{SampleBatch, SimError, StatCheck, StatReport};
