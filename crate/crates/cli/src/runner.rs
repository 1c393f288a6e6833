//! Check, search and simulation execution over a built scenario.

use serde::Serialize;
use thiserror::Error;

use locreal::inequalities::{
    check_bell_correlation_restriction, check_bell_info, check_bell_quantum,
    check_condition_marginal_match_joints, check_extended_chsh_info, check_extended_chsh_quantum,
    check_local_realism_info, check_local_realism_quantum, check_quantum_bell_analog,
    check_separable_bell, ChshCoefficients, IneqError, InequalityReport, LocalRealismReport,
};
use locreal::info::InfoError;
use locreal::quantum::{JointPov, QuantumError};
use locreal::search::{
    evaluate_settings_witness, search_settings, BoundResult, SearchError, Witness,
};
use locreal::sim::{
    sample_info_joint, sample_quantum_joint, setting_seed, test_inequality, SampleBatch, SimError,
    StatCheck, StatReport,
};

use crate::scenario::{BuiltScenario, CheckSpec, Kind, ScenarioFile};

/// Execution error with the documented exit code classification:
/// 1 = input/validation, 2 = inequality hypothesis unmet, 3 = internal
/// invariant breach.
#[derive(Debug, Error)]
pub enum RunError {
    #[error("io: {0}")]
    Io(String),

    #[error("parse: {0}")]
    Parse(String),

    #[error("validation: {0}")]
    Validation(String),

    #[error("hypothesis: {0}")]
    Hypothesis(String),

    #[error("internal invariant breach: {0}")]
    Internal(String),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Io(_) | RunError::Parse(_) | RunError::Validation(_) => 1,
            RunError::Hypothesis(_) => 2,
            RunError::Internal(_) => 3,
        }
    }

    pub fn prefix(self, context: &str) -> Self {
        match self {
            RunError::Io(m) => RunError::Io(format!("{context}: {m}")),
            RunError::Parse(m) => RunError::Parse(format!("{context}: {m}")),
            RunError::Validation(m) => RunError::Validation(format!("{context}: {m}")),
            RunError::Hypothesis(m) => RunError::Hypothesis(format!("{context}: {m}")),
            RunError::Internal(m) => RunError::Internal(format!("{context}: {m}")),
        }
    }
}

fn classify_info(e: InfoError) -> RunError {
    match e {
        InfoError::ExpectationBoundBreach { .. } => RunError::Internal(e.to_string()),
        other => RunError::Validation(other.to_string()),
    }
}

fn classify_quantum(e: QuantumError) -> RunError {
    match e {
        QuantumError::ProbabilityOutOfRange { .. }
        | QuantumError::DistributionNotNormalized { .. } => RunError::Internal(e.to_string()),
        QuantumError::Info(inner) => classify_info(inner),
        other => RunError::Validation(other.to_string()),
    }
}

fn classify_ineq(e: IneqError) -> RunError {
    match e {
        IneqError::UnconstrainedCoefficients { .. }
        | IneqError::NotCheckable { .. }
        | IneqError::HypothesisUnmet { .. }
        | IneqError::InconclusiveGrid { .. } => RunError::Hypothesis(e.to_string()),
        IneqError::BoundBreachUnderCondition { .. }
        | IneqError::CorrelationOutOfRange { .. }
        | IneqError::Linalg(_) => RunError::Internal(e.to_string()),
        IneqError::CoefficientOutOfRange { .. } | IneqError::ConstraintViolated { .. } => {
            RunError::Validation(e.to_string())
        }
        IneqError::Info(inner) => classify_info(inner),
        IneqError::Quantum(inner) => classify_quantum(inner),
    }
}

fn classify_sim(e: SimError) -> RunError {
    match e {
        SimError::InvalidSampleCount => RunError::Validation(e.to_string()),
        SimError::Info(inner) => classify_info(inner),
        SimError::Quantum(inner) => classify_quantum(inner),
        SimError::Ineq(inner) => classify_ineq(inner),
    }
}

fn classify_search(e: SearchError) -> RunError {
    match e {
        SearchError::NonUnitBloch { .. }
        | SearchError::InvalidVisibility { .. }
        | SearchError::UnsupportedDimension { .. } => RunError::Validation(e.to_string()),
        SearchError::Linalg(inner) => RunError::Internal(inner.to_string()),
        SearchError::Quantum(inner) => classify_quantum(inner),
        SearchError::Ineq(inner) => classify_ineq(inner),
    }
}

/// One executed check.
#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum CheckOutcome {
    Inequality {
        report: InequalityReport,
    },
    Condition {
        name: String,
        held: bool,
        #[serde(skip_serializing_if = "Option::is_none")]
        value: Option<f64>,
    },
    LocalRealism {
        report: LocalRealismReport,
    },
}

/// Run every check in the scenario, in order.
pub fn run_checks(
    file: &ScenarioFile,
    built: &BuiltScenario,
    tol_override: Option<f64>,
) -> Result<Vec<CheckOutcome>, RunError> {
    let tol = tol_override.unwrap_or(built.tolerance);
    let mut outcomes = Vec::new();
    for (index, check) in file.checks.iter().enumerate() {
        let context = format!("checks[{index}]");
        let mut produced = run_one_check(check, built, tol).map_err(|e| e.prefix(&context))?;
        outcomes.append(&mut produced);
    }
    Ok(outcomes)
}

fn run_one_check(
    check: &CheckSpec,
    built: &BuiltScenario,
    tol: f64,
) -> Result<Vec<CheckOutcome>, RunError> {
    match check {
        CheckSpec::ExtendedChsh {
            state,
            observables,
            alice,
            bob,
            coefficients,
            symmetrized,
        } => {
            let coeffs = coefficients.build()?;
            let report = match built.kind {
                Kind::Info => {
                    let grid = observables.as_ref().ok_or_else(|| {
                        RunError::Validation(
                            "info scenario needs `observables` (2x2 grid of labels)".into(),
                        )
                    })?;
                    let o = |k: usize, m: usize| built.observable(&grid[k][m]);
                    let refs = [[o(0, 0)?, o(0, 1)?], [o(1, 0)?, o(1, 1)?]];
                    let st = built.info_state(state.as_deref())?;
                    check_extended_chsh_info(&refs, st, &coeffs, tol).map_err(classify_ineq)?
                }
                Kind::Quantum => {
                    let alice = alice.as_ref().ok_or_else(|| {
                        RunError::Validation("quantum scenario needs `alice` labels".into())
                    })?;
                    let bob = bob.as_ref().ok_or_else(|| {
                        RunError::Validation("quantum scenario needs `bob` labels".into())
                    })?;
                    let rho = built.quantum_state(state.as_deref())?;
                    check_extended_chsh_quantum(
                        rho,
                        &[built.pov(&alice[0])?, built.pov(&alice[1])?],
                        &[built.pov(&bob[0])?, built.pov(&bob[1])?],
                        &coeffs,
                        *symmetrized,
                        tol,
                    )
                    .map_err(classify_ineq)?
                }
            };
            Ok(vec![CheckOutcome::Inequality { report }])
        }
        CheckSpec::Bell {
            state,
            observables,
            a,
            b1,
            b2,
            sign,
        } => {
            let report = match built.kind {
                Kind::Info => {
                    let labels = observables.as_ref().ok_or_else(|| {
                        RunError::Validation(
                            "info scenario needs `observables` = [ab1, ab2, b1b2]".into(),
                        )
                    })?;
                    let st = built.info_state(state.as_deref())?;
                    check_bell_info(
                        built.observable(&labels[0])?,
                        built.observable(&labels[1])?,
                        built.observable(&labels[2])?,
                        st,
                        *sign,
                        tol,
                    )
                    .map_err(classify_ineq)?
                }
                Kind::Quantum => {
                    let need = |o: &Option<String>, name: &str| {
                        o.clone().ok_or_else(|| {
                            RunError::Validation(format!("quantum bell check needs `{name}`"))
                        })
                    };
                    let (a, b1, b2) = (need(a, "a")?, need(b1, "b1")?, need(b2, "b2")?);
                    let rho = built.quantum_state(state.as_deref())?;
                    check_bell_quantum(
                        rho,
                        built.pov(&a)?,
                        built.pov(&b1)?,
                        built.pov(&b1)?,
                        built.pov(&b2)?,
                        *sign,
                        tol,
                    )
                    .map_err(classify_ineq)?
                }
            };
            Ok(vec![CheckOutcome::Inequality { report }])
        }
        CheckSpec::ConditionMarginalMatch {
            state,
            observables,
            sign,
        } => {
            let st = built.info_state(state.as_deref())?;
            let held = check_condition_marginal_match_joints(
                built.observable(&observables[0])?,
                built.observable(&observables[1])?,
                st,
                *sign,
            )
            .map_err(classify_ineq)?;
            Ok(vec![CheckOutcome::Condition {
                name: format!("marginal-match({})", sign.symbol()),
                held,
                value: None,
            }])
        }
        CheckSpec::BellCorrelationRestriction {
            state,
            observable,
            sign,
        } => {
            let st = built.info_state(state.as_deref())?;
            let e_b1b1 = built
                .observable(observable)?
                .expectation_values(st)
                .map_err(classify_info)?
                .e12;
            let held = check_bell_correlation_restriction(e_b1b1, *sign);
            Ok(vec![CheckOutcome::Condition {
                name: format!("correlation-restriction({})", sign.symbol()),
                held,
                value: Some(e_b1b1),
            }])
        }
        CheckSpec::LocalRealism {
            observables,
            alice,
            bob,
            joints,
            symmetrized,
        } => {
            let report = match built.kind {
                Kind::Info => {
                    let grid_labels = observables.as_ref().ok_or_else(|| {
                        RunError::Validation(
                            "info scenario needs `observables` (grid of labels)".into(),
                        )
                    })?;
                    let (a_labels, b_labels) = grid_axis_labels(alice, bob, grid_labels)?;
                    let grid = grid_labels
                        .iter()
                        .map(|row| {
                            row.iter()
                                .map(|l| built.observable(l))
                                .collect::<Result<Vec<_>, _>>()
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    check_local_realism_info(&grid, &a_labels, &b_labels, tol)
                        .map_err(classify_ineq)?
                }
                Kind::Quantum => {
                    if let Some(joint_labels) = joints {
                        let (a_labels, b_labels) = grid_axis_labels(alice, bob, joint_labels)?;
                        let grid = joint_labels
                            .iter()
                            .map(|row| {
                                row.iter()
                                    .map(|l| built.joint_pov(l))
                                    .collect::<Result<Vec<_>, _>>()
                            })
                            .collect::<Result<Vec<_>, _>>()?;
                        check_local_realism_quantum(&grid, &a_labels, &b_labels, tol)
                            .map_err(classify_ineq)?
                    } else {
                        let a_labels = alice.clone().ok_or_else(|| {
                            RunError::Validation("quantum local realism needs `alice`".into())
                        })?;
                        let b_labels = bob.clone().ok_or_else(|| {
                            RunError::Validation("quantum local realism needs `bob`".into())
                        })?;
                        let mut grid_owned: Vec<Vec<JointPov>> = Vec::new();
                        for a in &a_labels {
                            let mut row = Vec::new();
                            for b in &b_labels {
                                let joint = if *symmetrized {
                                    JointPov::symmetrized(built.pov(a)?, built.pov(b)?)
                                } else {
                                    JointPov::tensor(built.pov(a)?, built.pov(b)?)
                                }
                                .map_err(classify_quantum)?;
                                row.push(joint);
                            }
                            grid_owned.push(row);
                        }
                        let grid: Vec<Vec<&JointPov>> =
                            grid_owned.iter().map(|r| r.iter().collect()).collect();
                        check_local_realism_quantum(&grid, &a_labels, &b_labels, tol)
                            .map_err(classify_ineq)?
                    }
                }
            };
            Ok(vec![CheckOutcome::LocalRealism { report }])
        }
        CheckSpec::QuantumBellAnalog {
            state,
            decomposition,
            a,
            b1,
            b2,
        } => {
            let rho = built.quantum_state(state.as_deref())?;
            let report = check_quantum_bell_analog(
                rho,
                built.decomposition(decomposition)?,
                built.pov(a)?,
                built.pov(b1)?,
                built.pov(b1)?,
                built.pov(b2)?,
                tol,
            )
            .map_err(classify_ineq)?;
            Ok(vec![CheckOutcome::Inequality { report }])
        }
        CheckSpec::SeparableBell {
            state,
            decomposition,
            a,
            b1,
            b2,
        } => {
            let rho = built.quantum_state(state.as_deref())?;
            let reports = check_separable_bell(
                rho,
                built.decomposition(decomposition)?,
                built.pov(a)?,
                built.pov(b1)?,
                built.pov(b2)?,
                tol,
            )
            .map_err(classify_ineq)?;
            Ok(reports
                .into_iter()
                .map(|report| CheckOutcome::Inequality { report })
                .collect())
        }
    }
}

fn grid_axis_labels(
    alice: &Option<Vec<String>>,
    bob: &Option<Vec<String>>,
    grid: &[Vec<String>],
) -> Result<(Vec<String>, Vec<String>), RunError> {
    let rows = grid.len();
    let cols = grid.first().map(|r| r.len()).unwrap_or(0);
    let a = alice
        .clone()
        .unwrap_or_else(|| (0..rows).map(|i| format!("a{}", i + 1)).collect());
    let b = bob
        .clone()
        .unwrap_or_else(|| (0..cols).map(|j| format!("b{}", j + 1)).collect());
    if a.len() != rows || b.len() != cols {
        return Err(RunError::Validation(
            "axis labels do not match the observable grid shape".into(),
        ));
    }
    Ok((a, b))
}

/// Search output: the bound plus an independent re-evaluation of its
/// witness through the POV pipeline.
#[derive(Debug, Clone, Serialize)]
pub struct SearchOutput {
    #[serde(flatten)]
    pub result: BoundResult,
    pub witness_reevaluation: f64,
}

pub fn run_search(
    file: &ScenarioFile,
    built: &BuiltScenario,
    seed_override: Option<u64>,
) -> Result<SearchOutput, RunError> {
    let spec = file
        .search
        .as_ref()
        .ok_or_else(|| RunError::Validation("scenario has no `search` block".into()))?;
    if built.kind != Kind::Quantum {
        return Err(RunError::Validation(
            "setting search requires a quantum scenario".into(),
        ));
    }
    let rho = built.quantum_state(spec.state.as_deref())?;
    let coeffs = match &spec.coefficients {
        Some(c) => c.build()?,
        None => ChshCoefficients::standard(),
    };
    let budget = spec.budget.unwrap_or_default();
    let seed = seed_override.unwrap_or(spec.seed);
    let result = search_settings(rho, &coeffs, &budget, seed).map_err(classify_search)?;
    let witness_reevaluation = match &result.witness {
        Witness::Settings { alice, bob } => {
            evaluate_settings_witness(rho, &coeffs, alice, bob).map_err(classify_search)?
        }
        _ => result.value,
    };
    if (witness_reevaluation - result.value).abs() > 1e-9 {
        return Err(RunError::Internal(format!(
            "search witness re-evaluates to {witness_reevaluation}, not {}",
            result.value
        )));
    }
    Ok(SearchOutput {
        result,
        witness_reevaluation,
    })
}

/// Simulate the sampleable checks (the CHSH-form and Bell-form ones).
pub fn run_simulation(
    file: &ScenarioFile,
    built: &BuiltScenario,
    seed_override: Option<u64>,
) -> Result<Vec<StatReport>, RunError> {
    let spec = file
        .simulation
        .ok_or_else(|| RunError::Validation("scenario has no `simulation` block".into()))?;
    let base_seed = seed_override.unwrap_or(spec.seed);
    let n = spec.n;

    let mut reports = Vec::new();
    for (check_index, check) in file.checks.iter().enumerate() {
        let stream = |slot: u64| setting_seed(base_seed, (check_index as u64) * 8 + slot);
        match check {
            CheckSpec::ExtendedChsh {
                state,
                observables,
                alice,
                bob,
                coefficients,
                symmetrized,
            } => {
                let coeffs = coefficients.build()?;
                let mut batches: Vec<SampleBatch> = Vec::with_capacity(4);
                for (slot, (k, m)) in [(0, 0), (0, 1), (1, 0), (1, 1)].iter().enumerate() {
                    let batch = match built.kind {
                        Kind::Info => {
                            let grid = observables.as_ref().ok_or_else(|| {
                                RunError::Validation(
                                    "info scenario needs `observables` grid".into(),
                                )
                            })?;
                            let joint = built.observable(&grid[*k][*m])?;
                            let st = built.info_state(state.as_deref())?;
                            sample_info_joint(joint, st, n, stream(slot as u64))
                                .map_err(classify_sim)?
                        }
                        Kind::Quantum => {
                            let alice = alice.as_ref().ok_or_else(|| {
                                RunError::Validation("quantum scenario needs `alice`".into())
                            })?;
                            let bob = bob.as_ref().ok_or_else(|| {
                                RunError::Validation("quantum scenario needs `bob`".into())
                            })?;
                            let joint = if *symmetrized {
                                JointPov::symmetrized(built.pov(&alice[*k])?, built.pov(&bob[*m])?)
                            } else {
                                JointPov::tensor(built.pov(&alice[*k])?, built.pov(&bob[*m])?)
                            }
                            .map_err(classify_quantum)?;
                            let rho = built.quantum_state(state.as_deref())?;
                            sample_quantum_joint(rho, &joint, n, stream(slot as u64))
                                .map_err(classify_sim)?
                        }
                    };
                    batches.push(batch);
                }
                let report = test_inequality(&StatCheck::Chsh {
                    batches: [[&batches[0], &batches[1]], [&batches[2], &batches[3]]],
                    coeffs,
                })
                .map_err(classify_sim)?;
                reports.push(report);
            }
            CheckSpec::Bell {
                state,
                observables,
                a,
                b1,
                b2,
                sign,
            } => {
                let mut batches: Vec<SampleBatch> = Vec::with_capacity(3);
                match built.kind {
                    Kind::Info => {
                        let labels = observables.as_ref().ok_or_else(|| {
                            RunError::Validation(
                                "info scenario needs `observables` = [ab1, ab2, b1b2]".into(),
                            )
                        })?;
                        let st = built.info_state(state.as_deref())?;
                        for (slot, label) in labels.iter().enumerate() {
                            batches.push(
                                sample_info_joint(
                                    built.observable(label)?,
                                    st,
                                    n,
                                    stream(slot as u64),
                                )
                                .map_err(classify_sim)?,
                            );
                        }
                    }
                    Kind::Quantum => {
                        let need = |o: &Option<String>, name: &str| {
                            o.clone().ok_or_else(|| {
                                RunError::Validation(format!("quantum bell check needs `{name}`"))
                            })
                        };
                        let (a, b1, b2) = (need(a, "a")?, need(b1, "b1")?, need(b2, "b2")?);
                        let rho = built.quantum_state(state.as_deref())?;
                        let settings = [(a.clone(), b1.clone()), (a, b2.clone()), (b1, b2)];
                        for (slot, (first, second)) in settings.iter().enumerate() {
                            let joint = JointPov::tensor(built.pov(first)?, built.pov(second)?)
                                .map_err(classify_quantum)?;
                            batches.push(
                                sample_quantum_joint(rho, &joint, n, stream(slot as u64))
                                    .map_err(classify_sim)?,
                            );
                        }
                    }
                }
                let report = test_inequality(&StatCheck::Bell {
                    ab1: &batches[0],
                    ab2: &batches[1],
                    b1b2: &batches[2],
                    sign: *sign,
                })
                .map_err(classify_sim)?;
                reports.push(report);
            }
            _ => {}
        }
    }
    if reports.is_empty() {
        return Err(RunError::Validation(
            "scenario has no sampleable checks (chsh or bell)".into(),
        ));
    }
    Ok(reports)
}

/// Validation summary for the `validate` command.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationSummary {
    pub kind: Kind,
    pub states: usize,
    pub observables: usize,
    pub povs: usize,
    pub joint_povs: usize,
    pub decompositions: usize,
    pub checks: usize,
    pub valid: bool,
}

pub fn summarize(file: &ScenarioFile, built: &BuiltScenario) -> ValidationSummary {
    ValidationSummary {
        kind: built.kind,
        states: built.info_states.len() + built.quantum_states.len(),
        observables: built.observables.len(),
        povs: built.povs.len(),
        joint_povs: built.joint_povs.len(),
        decompositions: built.decompositions.len(),
        checks: file.checks.len(),
        valid: true,
    }
}
