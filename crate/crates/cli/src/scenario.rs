//! Scenario file schema and construction of the typed model objects.
//!
//! Scenario files are UTF-8 JSON. Complex matrices are nested arrays of
//! `[re, im]` pairs in row-major order; kernels and probability vectors are
//! plain number arrays; settings are string-keyed maps. Parsing only maps
//! the JSON shape - every object still goes through the library
//! constructors, so invariant violations surface with the same messages as
//! programmatic use.

use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use locreal::inequalities::{ChshCoefficients, ConstraintClass, Sign};
use locreal::info::{GeneralizedObservable, InformationState, JointObservable, OutcomeSet};
use locreal::linalg::ComplexMatrix;
use locreal::quantum::{DensityOperator, JointPov, PovMeasure, SeparableDecomposition};
use locreal::search::{qubit_projective_pov, QubitSetting, SearchBudget};

use crate::RunError;

/// Row-major complex matrix as `[re, im]` pairs.
pub type MatrixSpec = Vec<Vec<[f64; 2]>>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Info,
    Quantum,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Report tolerance; defaults to 1e-9.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    /// Outcome sets shared by all observables in the scenario; both sides
    /// default to {+1, -1} with bound 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub outcomes: Option<OutcomesSpec>,
    /// States keyed by label. Info states carry `theta` + `pi`, quantum
    /// states carry `matrix`.
    pub states: BTreeMap<String, StateSpec>,
    /// Info-kind joint observables keyed by setting label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub observables: BTreeMap<String, ObservableSpec>,
    /// Quantum-kind single-side POV measures keyed by setting label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub povs: BTreeMap<String, PovSpec>,
    /// Quantum-kind explicit joint POVs keyed by setting label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub joint_povs: BTreeMap<String, JointPovSpec>,
    /// Separable decompositions keyed by label.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub decompositions: BTreeMap<String, DecompositionSpec>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<CheckSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub simulation: Option<SimulationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub search: Option<SearchSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomesSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side1: Option<OutcomeSetSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub side2: Option<OutcomeSetSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeSetSpec {
    pub values: Vec<f64>,
    #[serde(default = "default_bound")]
    pub bound: f64,
}

fn default_bound() -> f64 {
    1.0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateSpec {
    /// Info kind: point labels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<String>>,
    /// Info kind: probability weights.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pi: Option<Vec<f64>>,
    /// Quantum kind: density matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObservableSpec {
    Image {
        f1: Vec<f64>,
        f2: Vec<f64>,
    },
    Product {
        p1: Vec<Vec<f64>>,
        p2: Vec<Vec<f64>>,
    },
    Factorizable {
        nu: Vec<f64>,
        components: Vec<ComponentSpec>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        support: Option<Vec<usize>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        off_support_rows: Option<Vec<Vec<f64>>>,
    },
    Opaque {
        kernel: Vec<Vec<f64>>,
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub p1: Vec<Vec<f64>>,
    pub p2: Vec<Vec<f64>>,
}

/// Either an explicit element list or a qubit Bloch shorthand.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PovSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bloch: Option<[f64; 3]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub visibility: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub elements: Option<Vec<MatrixSpec>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointPovSpec {
    pub dims: [usize; 2],
    /// Elements in lambda-1-major order over the outcome grid.
    pub elements: Vec<MatrixSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values1: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub values2: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecompositionSpec {
    pub weights: Vec<f64>,
    pub pairs: Vec<[MatrixSpec; 2]>,
    #[serde(default = "default_true")]
    pub symmetrized: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientsSpec {
    pub gamma: [[f64; 2]; 2],
    pub constraint_class: ConstraintClass,
}

impl CoefficientsSpec {
    pub fn build(&self) -> Result<ChshCoefficients, RunError> {
        ChshCoefficients::new(self.gamma, self.constraint_class)
            .map_err(|e| RunError::Validation(format!("coefficients: {e}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "check", rename_all = "snake_case", deny_unknown_fields)]
pub enum CheckSpec {
    /// Four-setting CHSH-form check. Info scenarios reference a 2x2 grid of
    /// joint observables; quantum scenarios reference two POV labels per
    /// side.
    ExtendedChsh {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observables: Option<[[String; 2]; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alice: Option<[String; 2]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bob: Option<[String; 2]>,
        coefficients: CoefficientsSpec,
        #[serde(default)]
        symmetrized: bool,
    },
    /// Three-setting Bell check; `sign` is the marginal-match condition
    /// sign, the evaluated bound is 1 - sign * E(b1, b2).
    Bell {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observables: Option<[String; 3]>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        a: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b1: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        b2: Option<String>,
        sign: Sign,
    },
    /// Marginal-match condition extracted from the provenance of the
    /// (a, b1) and (b1, b2) joints.
    ConditionMarginalMatch {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<String>,
        observables: [String; 2],
        sign: Sign,
    },
    /// Perfect-correlation restriction on the (b1, b1) joint.
    BellCorrelationRestriction {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<String>,
        observable: String,
        sign: Sign,
    },
    /// Marginals must depend only on their own setting, across a full grid.
    LocalRealism {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        observables: Option<Vec<Vec<String>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        alice: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bob: Option<Vec<String>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        joints: Option<Vec<Vec<String>>>,
        #[serde(default)]
        symmetrized: bool,
    },
    /// Quantum Bell analog for a symmetric state with a separable
    /// representation; the same POV label serves both sides of b1.
    QuantumBellAnalog {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<String>,
        decomposition: String,
        a: String,
        b1: String,
        b2: String,
    },
    /// Bell check for a genuinely separable state with its decomposition.
    SeparableBell {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        state: Option<String>,
        decomposition: String,
        a: String,
        b1: String,
        b2: String,
    },
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSpec {
    pub n: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSpec {
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficients: Option<CoefficientsSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<SearchBudget>,
}

/// Fully constructed scenario objects.
pub struct BuiltScenario {
    pub kind: Kind,
    pub tolerance: f64,
    pub info_states: BTreeMap<String, InformationState>,
    pub observables: BTreeMap<String, JointObservable>,
    pub quantum_states: BTreeMap<String, DensityOperator>,
    pub povs: BTreeMap<String, PovMeasure>,
    pub joint_povs: BTreeMap<String, JointPov>,
    pub decompositions: BTreeMap<String, SeparableDecomposition>,
}

impl BuiltScenario {
    pub fn info_state(&self, label: Option<&str>) -> Result<&InformationState, RunError> {
        single_or_lookup(&self.info_states, label, "state")
    }

    pub fn quantum_state(&self, label: Option<&str>) -> Result<&DensityOperator, RunError> {
        single_or_lookup(&self.quantum_states, label, "state")
    }

    pub fn observable(&self, label: &str) -> Result<&JointObservable, RunError> {
        lookup(&self.observables, label, "observable")
    }

    pub fn pov(&self, label: &str) -> Result<&PovMeasure, RunError> {
        lookup(&self.povs, label, "pov")
    }

    pub fn joint_pov(&self, label: &str) -> Result<&JointPov, RunError> {
        lookup(&self.joint_povs, label, "joint_pov")
    }

    pub fn decomposition(&self, label: &str) -> Result<&SeparableDecomposition, RunError> {
        lookup(&self.decompositions, label, "decomposition")
    }
}

fn lookup<'a, T>(map: &'a BTreeMap<String, T>, label: &str, what: &str) -> Result<&'a T, RunError> {
    map.get(label)
        .ok_or_else(|| RunError::Validation(format!("unknown {what} label `{label}`")))
}

fn single_or_lookup<'a, T>(
    map: &'a BTreeMap<String, T>,
    label: Option<&str>,
    what: &str,
) -> Result<&'a T, RunError> {
    match label {
        Some(l) => lookup(map, l, what),
        None if map.len() == 1 => Ok(map.values().next().expect("len == 1")),
        None => Err(RunError::Validation(format!(
            "check must name a {what}: the scenario defines {}",
            map.len()
        ))),
    }
}

fn build_matrix(spec: &MatrixSpec, what: &str) -> Result<ComplexMatrix, RunError> {
    let rows = spec.len();
    let cols = spec.first().map(|r| r.len()).unwrap_or(0);
    if rows == 0 || cols == 0 || spec.iter().any(|r| r.len() != cols) {
        return Err(RunError::Validation(format!(
            "{what}: matrix rows must be non-empty and rectangular"
        )));
    }
    let entries = spec
        .iter()
        .flatten()
        .map(|&[re, im]| Complex64::new(re, im))
        .collect();
    ComplexMatrix::new(rows, cols, entries)
        .map_err(|e| RunError::Validation(format!("{what}: {e}")))
}

fn build_outcome_set(spec: Option<&OutcomeSetSpec>, what: &str) -> Result<OutcomeSet, RunError> {
    match spec {
        None => Ok(OutcomeSet::pm_one()),
        Some(s) => OutcomeSet::new(s.values.clone(), s.bound)
            .map_err(|e| RunError::Validation(format!("{what}: {e}"))),
    }
}

impl ScenarioFile {
    pub fn build(&self) -> Result<BuiltScenario, RunError> {
        let tolerance = self.tolerance.unwrap_or(1e-9);
        let side1 = build_outcome_set(
            self.outcomes.as_ref().and_then(|o| o.side1.as_ref()),
            "outcomes.side1",
        )?;
        let side2 = build_outcome_set(
            self.outcomes.as_ref().and_then(|o| o.side2.as_ref()),
            "outcomes.side2",
        )?;

        let mut built = BuiltScenario {
            kind: self.kind,
            tolerance,
            info_states: BTreeMap::new(),
            observables: BTreeMap::new(),
            quantum_states: BTreeMap::new(),
            povs: BTreeMap::new(),
            joint_povs: BTreeMap::new(),
            decompositions: BTreeMap::new(),
        };

        if self.states.is_empty() {
            return Err(RunError::Validation("scenario defines no states".into()));
        }

        match self.kind {
            Kind::Info => {
                for (label, spec) in &self.states {
                    let theta = spec.theta.as_ref().ok_or_else(|| {
                        RunError::Validation(format!("states.{label}: info state needs `theta`"))
                    })?;
                    let pi = spec.pi.as_ref().ok_or_else(|| {
                        RunError::Validation(format!("states.{label}: info state needs `pi`"))
                    })?;
                    let state = InformationState::new(theta.clone(), pi)
                        .map_err(|e| RunError::Validation(format!("states.{label}: {e}")))?;
                    built.info_states.insert(label.clone(), state);
                }
                for (label, spec) in &self.observables {
                    let joint = build_observable(spec, &side1, &side2)
                        .map_err(|e| e.prefix(&format!("observables.{label}")))?;
                    built.observables.insert(label.clone(), joint);
                }
            }
            Kind::Quantum => {
                for (label, spec) in &self.states {
                    let matrix_spec = spec.matrix.as_ref().ok_or_else(|| {
                        RunError::Validation(format!(
                            "states.{label}: quantum state needs `matrix`"
                        ))
                    })?;
                    let matrix = build_matrix(matrix_spec, &format!("states.{label}"))?;
                    let rho = DensityOperator::new(matrix)
                        .map_err(|e| RunError::Validation(format!("states.{label}: {e}")))?;
                    built.quantum_states.insert(label.clone(), rho);
                }
                for (label, spec) in &self.povs {
                    let pov = build_pov(spec).map_err(|e| e.prefix(&format!("povs.{label}")))?;
                    built.povs.insert(label.clone(), pov);
                }
                for (label, spec) in &self.joint_povs {
                    let joint = build_joint_pov(spec)
                        .map_err(|e| e.prefix(&format!("joint_povs.{label}")))?;
                    built.joint_povs.insert(label.clone(), joint);
                }
                for (label, spec) in &self.decompositions {
                    let dec = build_decomposition(spec)
                        .map_err(|e| e.prefix(&format!("decompositions.{label}")))?;
                    built.decompositions.insert(label.clone(), dec);
                }
            }
        }
        Ok(built)
    }
}

fn build_observable(
    spec: &ObservableSpec,
    side1: &OutcomeSet,
    side2: &OutcomeSet,
) -> Result<JointObservable, RunError> {
    let validation = |e: locreal::info::InfoError| RunError::Validation(e.to_string());
    match spec {
        ObservableSpec::Image { f1, f2 } => {
            JointObservable::image(side1.clone(), side2.clone(), f1, f2).map_err(validation)
        }
        ObservableSpec::Product { p1, p2 } => {
            let p1 = GeneralizedObservable::new(side1.clone(), p1.clone()).map_err(validation)?;
            let p2 = GeneralizedObservable::new(side2.clone(), p2.clone()).map_err(validation)?;
            JointObservable::product(&p1, &p2).map_err(validation)
        }
        ObservableSpec::Factorizable {
            nu,
            components,
            support,
            off_support_rows,
        } => {
            let comps = components
                .iter()
                .map(|c| {
                    Ok((
                        GeneralizedObservable::new(side1.clone(), c.p1.clone())
                            .map_err(validation)?,
                        GeneralizedObservable::new(side2.clone(), c.p2.clone())
                            .map_err(validation)?,
                    ))
                })
                .collect::<Result<Vec<_>, RunError>>()?;
            match support {
                None => JointObservable::factorizable(&comps, nu).map_err(validation),
                Some(sup) => {
                    JointObservable::factorizable_on(&comps, nu, sup, off_support_rows.clone())
                        .map_err(validation)
                }
            }
        }
        ObservableSpec::Opaque { kernel } => {
            JointObservable::opaque(side1.clone(), side2.clone(), kernel.clone())
                .map_err(validation)
        }
    }
}

fn build_pov(spec: &PovSpec) -> Result<PovMeasure, RunError> {
    match (&spec.bloch, &spec.elements) {
        (Some(bloch), None) => {
            let setting = QubitSetting::new(*bloch, spec.visibility.unwrap_or(1.0))
                .map_err(|e| RunError::Validation(e.to_string()))?;
            qubit_projective_pov(&setting).map_err(|e| RunError::Validation(e.to_string()))
        }
        (None, Some(elements)) => {
            let values = spec.values.clone().ok_or_else(|| {
                RunError::Validation("explicit POV elements need `values`".into())
            })?;
            let outcomes = OutcomeSet::new(values, spec.bound.unwrap_or(1.0))
                .map_err(|e| RunError::Validation(e.to_string()))?;
            let mats = elements
                .iter()
                .enumerate()
                .map(|(i, m)| build_matrix(m, &format!("element {i}")))
                .collect::<Result<Vec<_>, _>>()?;
            PovMeasure::new(outcomes, mats).map_err(|e| RunError::Validation(e.to_string()))
        }
        _ => Err(RunError::Validation(
            "a POV needs either `bloch` (qubit shorthand) or `elements` + `values`".into(),
        )),
    }
}

fn build_joint_pov(spec: &JointPovSpec) -> Result<JointPov, RunError> {
    let n1 = spec.values1.clone().unwrap_or_else(|| vec![1.0, -1.0]);
    let n2 = spec.values2.clone().unwrap_or_else(|| vec![1.0, -1.0]);
    let outcomes1 = OutcomeSet::new(n1, 1.0).map_err(|e| RunError::Validation(e.to_string()))?;
    let outcomes2 = OutcomeSet::new(n2, 1.0).map_err(|e| RunError::Validation(e.to_string()))?;
    let mats = spec
        .elements
        .iter()
        .enumerate()
        .map(|(i, m)| build_matrix(m, &format!("element {i}")))
        .collect::<Result<Vec<_>, _>>()?;
    JointPov::opaque((spec.dims[0], spec.dims[1]), outcomes1, outcomes2, mats)
        .map_err(|e| RunError::Validation(e.to_string()))
}

fn build_decomposition(spec: &DecompositionSpec) -> Result<SeparableDecomposition, RunError> {
    let pairs = spec
        .pairs
        .iter()
        .enumerate()
        .map(|(i, [tau, tau_tilde])| {
            let tau = DensityOperator::new(build_matrix(tau, &format!("pair {i} tau"))?)
                .map_err(|e| RunError::Validation(format!("pair {i}: {e}")))?;
            let tilde = DensityOperator::new(build_matrix(tau_tilde, &format!("pair {i} tau~"))?)
                .map_err(|e| RunError::Validation(format!("pair {i}: {e}")))?;
            Ok((tau, tilde))
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    SeparableDecomposition::new(&spec.weights, pairs, spec.symmetrized)
        .map_err(|e| RunError::Validation(e.to_string()))
}
