//! Quantum states and measurements: density operators, POV measures,
//! Alice/Bob joint POVs (plain and symmetrized tensor forms), separable
//! decompositions and their residual representations.

use num_complex::Complex64;
use thiserror::Error;

use crate::info::{OutcomeSet, Side};
use crate::linalg::{
    is_positive_semidefinite, is_swap_symmetric, operator_norm, symmetrize_bipartite,
    tensor_product, trace_norm, ComplexMatrix, LinalgError,
};

/// Hard cap on separable decomposition size.
pub const MAX_DECOMPOSITION_TERMS: usize = 1024;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-9;
const POV_SUM_TOL: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("operator is not Hermitian within {HERMITIAN_TOL:.1e} (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("operator is not positive semidefinite")]
    NotPositive,

    #[error("trace must be 1, got {trace}")]
    TraceNotOne { trace: f64 },

    #[error("dimension mismatch: {context} expects {expected}, got {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("POV needs one element per outcome: {outcomes} outcomes, {elements} elements")]
    OutcomeElementMismatch { outcomes: usize, elements: usize },

    #[error(
        "POV elements must sum to the identity within {POV_SUM_TOL:.1e} entrywise \
             (max deviation {deviation:.3e})"
    )]
    ElementsDontSumToIdentity { deviation: f64 },

    #[error("symmetrized form requires equal factor dimensions, got {d1} and {d2}")]
    SymmetrizedNeedsEqualDims { d1: usize, d2: usize },

    #[error("state is not symmetric under the factor swap (deviation {deviation:.3e})")]
    NotSwapSymmetric { deviation: f64 },

    #[error("decomposition weights must be positive and sum to 1 (got sum {sum})")]
    InvalidWeights { sum: f64 },

    #[error("decomposition has {terms} terms, more than the cap {MAX_DECOMPOSITION_TERMS}")]
    TooManyTerms { terms: usize },

    #[error("outcome bound must not exceed 1 for the correlation operator, got {bound}")]
    BoundExceedsOne { bound: f64 },

    #[error("probability {value} falls outside [0, 1] beyond tolerance")]
    ProbabilityOutOfRange { value: f64 },

    #[error("outcome probabilities sum to {sum}, not 1 within {TRACE_TOL:.1e}")]
    DistributionNotNormalized { sum: f64 },

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Info(#[from] crate::info::InfoError),
}

/// A density operator: Hermitian, positive semidefinite, unit trace.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityOperator {
    matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn new(matrix: ComplexMatrix) -> Result<Self, QuantumError> {
        let dev = matrix.hermitian_deviation();
        if dev > HERMITIAN_TOL {
            return Err(QuantumError::NotHermitian { deviation: dev });
        }
        if !is_positive_semidefinite(&matrix)? {
            return Err(QuantumError::NotPositive);
        }
        let trace = matrix.trace()?;
        if (trace.re - 1.0).abs() > TRACE_TOL || trace.im.abs() > TRACE_TOL {
            return Err(QuantumError::TraceNotOne { trace: trace.re });
        }
        Ok(Self { matrix })
    }

    /// Pure state |psi><psi| from a normalized amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, QuantumError> {
        let norm_sqr: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if (norm_sqr - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::TraceNotOne { trace: norm_sqr });
        }
        Self::new(ComplexMatrix::outer(amplitudes))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        Self {
            matrix: ComplexMatrix::identity(dim).scale(1.0 / dim as f64),
        }
    }

    /// Convex mixture of density operators; statistics of a quantum
    /// information state depend only on this barycenter.
    pub fn mixture(weights: &[f64], states: &[DensityOperator]) -> Result<Self, QuantumError> {
        if weights.len() != states.len() || states.is_empty() {
            return Err(QuantumError::DimensionMismatch {
                context: "mixture",
                expected: states.len().max(1),
                found: weights.len(),
            });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| w < 0.0) || (sum - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::InvalidWeights { sum });
        }
        let dim = states[0].dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, s) in weights.iter().zip(states) {
            acc = acc.add(&s.matrix.scale(w / sum))?;
        }
        Self::new(acc)
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Swap symmetry over two equal factors (only meaningful when the
    /// dimension is a perfect square).
    pub fn is_symmetric(&self, tol: f64) -> Result<bool, QuantumError> {
        let d = (self.dim() as f64).sqrt().round() as usize;
        Ok(is_swap_symmetric(&self.matrix, d, tol)?)
    }
}

/// Pauli sigma-x.
pub fn pauli_x() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[0.0, 1.0, 1.0, 0.0]).expect("static entries")
}

/// Pauli sigma-y.
pub fn pauli_y() -> ComplexMatrix {
    ComplexMatrix::new(
        2,
        2,
        vec![
            Complex64::new(0.0, 0.0),
            Complex64::new(0.0, -1.0),
            Complex64::new(0.0, 1.0),
            Complex64::new(0.0, 0.0),
        ],
    )
    .expect("static entries")
}

/// Pauli sigma-z.
pub fn pauli_z() -> ComplexMatrix {
    ComplexMatrix::from_real(2, 2, &[1.0, 0.0, 0.0, -1.0]).expect("static entries")
}

/// Spin observable n . sigma for a real 3-vector n.
pub fn bloch_operator(n: [f64; 3]) -> ComplexMatrix {
    let x = pauli_x().scale(n[0]);
    let y = pauli_y().scale(n[1]);
    let z = pauli_z().scale(n[2]);
    x.add(&y).and_then(|m| m.add(&z)).expect("2x2 shapes agree")
}

/// The two-qubit singlet state (|01> - |10>) / sqrt(2).
pub fn singlet() -> DensityOperator {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    DensityOperator::pure(&[
        Complex64::new(0.0, 0.0),
        Complex64::new(s, 0.0),
        Complex64::new(-s, 0.0),
        Complex64::new(0.0, 0.0),
    ])
    .expect("singlet amplitudes are normalized")
}

/// Werner interpolation p * singlet + (1 - p) * I/4 for p in [0, 1].
pub fn werner(p: f64) -> Result<DensityOperator, QuantumError> {
    if !(0.0..=1.0).contains(&p) {
        return Err(QuantumError::ProbabilityOutOfRange { value: p });
    }
    let mixed = singlet()
        .matrix()
        .scale(p)
        .add(&ComplexMatrix::identity(4).scale((1.0 - p) / 4.0))?;
    DensityOperator::new(mixed)
}

/// A positive operator-valued measure over a finite real outcome set.
#[derive(Debug, Clone, PartialEq)]
pub struct PovMeasure {
    outcomes: OutcomeSet,
    elements: Vec<ComplexMatrix>,
}

impl PovMeasure {
    pub fn new(outcomes: OutcomeSet, elements: Vec<ComplexMatrix>) -> Result<Self, QuantumError> {
        if outcomes.len() != elements.len() {
            return Err(QuantumError::OutcomeElementMismatch {
                outcomes: outcomes.len(),
                elements: elements.len(),
            });
        }
        let dim = elements[0].rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for element in &elements {
            if element.rows() != dim || element.cols() != dim {
                return Err(QuantumError::DimensionMismatch {
                    context: "POV element",
                    expected: dim,
                    found: element.rows(),
                });
            }
            let dev = element.hermitian_deviation();
            if dev > HERMITIAN_TOL {
                return Err(QuantumError::NotHermitian { deviation: dev });
            }
            if !is_positive_semidefinite(element)? {
                return Err(QuantumError::NotPositive);
            }
            sum = sum.add(element)?;
        }
        let deviation = sum
            .sub(&ComplexMatrix::identity(dim))
            .expect("same shape")
            .max_abs();
        if deviation > POV_SUM_TOL {
            return Err(QuantumError::ElementsDontSumToIdentity { deviation });
        }
        Ok(Self { outcomes, elements })
    }

    /// Projective measurement of the computational basis with values from
    /// the outcome set (one value per basis vector).
    pub fn computational(outcomes: OutcomeSet, dim: usize) -> Result<Self, QuantumError> {
        if outcomes.len() != dim {
            return Err(QuantumError::OutcomeElementMismatch {
                outcomes: outcomes.len(),
                elements: dim,
            });
        }
        let elements = (0..dim)
            .map(|i| {
                let mut v = vec![Complex64::new(0.0, 0.0); dim];
                v[i] = Complex64::new(1.0, 0.0);
                ComplexMatrix::outer(&v)
            })
            .collect();
        Self::new(outcomes, elements)
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.outcomes
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn element(&self, index: usize) -> &ComplexMatrix {
        &self.elements[index]
    }

    /// Probability of one outcome: tr[rho M(outcome)].
    pub fn outcome_probability(
        &self,
        rho: &DensityOperator,
        index: usize,
    ) -> Result<f64, QuantumError> {
        element_probability(rho, &self.elements[index])
    }

    /// Full outcome distribution, validated to sum to 1.
    pub fn outcome_distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>, QuantumError> {
        let probs: Vec<f64> = self
            .elements
            .iter()
            .map(|e| element_probability(rho, e))
            .collect::<Result<_, _>>()?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::DistributionNotNormalized { sum });
        }
        Ok(probs)
    }
}

/// Structural form of a joint POV measure.
#[derive(Debug, Clone, PartialEq)]
pub enum JointPovForm {
    /// Plain Alice/Bob tensor elements M1 (x) M2.
    Tensor { m1: PovMeasure, m2: PovMeasure },
    /// Swap-averaged elements (M1 (x) M2 + M2 (x) M1) / 2 on identical
    /// sub-systems.
    Symmetrized { m1: PovMeasure, m2: PovMeasure },
    /// Explicit elements without structural information.
    Opaque,
}

/// A POV measure over a product outcome grid, lambda-1 major.
#[derive(Debug, Clone, PartialEq)]
pub struct JointPov {
    dims: (usize, usize),
    outcomes: (OutcomeSet, OutcomeSet),
    elements: Vec<ComplexMatrix>,
    form: JointPovForm,
}

impl JointPov {
    /// Plain Alice/Bob joint measurement M1 (x) M2.
    pub fn tensor(m1: &PovMeasure, m2: &PovMeasure) -> Result<Self, QuantumError> {
        let elements = product_elements(m1, m2, false)?;
        Ok(Self {
            dims: (m1.dim(), m2.dim()),
            outcomes: (m1.outcomes().clone(), m2.outcomes().clone()),
            elements,
            form: JointPovForm::Tensor {
                m1: m1.clone(),
                m2: m2.clone(),
            },
        })
    }

    /// Symmetrized Alice/Bob joint measurement on identical sub-systems.
    pub fn symmetrized(m1: &PovMeasure, m2: &PovMeasure) -> Result<Self, QuantumError> {
        if m1.dim() != m2.dim() {
            return Err(QuantumError::SymmetrizedNeedsEqualDims {
                d1: m1.dim(),
                d2: m2.dim(),
            });
        }
        let elements = product_elements(m1, m2, true)?;
        Ok(Self {
            dims: (m1.dim(), m2.dim()),
            outcomes: (m1.outcomes().clone(), m2.outcomes().clone()),
            elements,
            form: JointPovForm::Symmetrized {
                m1: m1.clone(),
                m2: m2.clone(),
            },
        })
    }

    /// Joint POV from explicit elements (validated as a POV on the product
    /// space) with no structural information.
    pub fn opaque(
        dims: (usize, usize),
        outcomes1: OutcomeSet,
        outcomes2: OutcomeSet,
        elements: Vec<ComplexMatrix>,
    ) -> Result<Self, QuantumError> {
        let expected = outcomes1.len() * outcomes2.len();
        if elements.len() != expected {
            return Err(QuantumError::OutcomeElementMismatch {
                outcomes: expected,
                elements: elements.len(),
            });
        }
        let full = dims.0 * dims.1;
        if elements
            .iter()
            .any(|e| e.rows() != full || e.cols() != full)
        {
            return Err(QuantumError::DimensionMismatch {
                context: "joint POV element",
                expected: full,
                found: elements[0].rows(),
            });
        }
        // Reuse the POV validation on the flattened grid.
        let grid = OutcomeSet::new(
            (0..expected).map(|i| i as f64 / expected as f64).collect(),
            1.0,
        )?;
        PovMeasure::new(grid, elements.clone())?;
        Ok(Self {
            dims,
            outcomes: (outcomes1, outcomes2),
            elements,
            form: JointPovForm::Opaque,
        })
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }

    pub fn outcomes(&self) -> (&OutcomeSet, &OutcomeSet) {
        (&self.outcomes.0, &self.outcomes.1)
    }

    pub fn form(&self) -> &JointPovForm {
        &self.form
    }

    pub fn element(&self, i1: usize, i2: usize) -> &ComplexMatrix {
        &self.elements[i1 * self.outcomes.1.len() + i2]
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    /// Probability of the outcome pair (i1, i2).
    pub fn outcome_probability(
        &self,
        rho: &DensityOperator,
        i1: usize,
        i2: usize,
    ) -> Result<f64, QuantumError> {
        element_probability(rho, self.element(i1, i2))
    }

    /// Flattened (lambda-1 major) outcome distribution, validated.
    pub fn outcome_distribution(&self, rho: &DensityOperator) -> Result<Vec<f64>, QuantumError> {
        let probs: Vec<f64> = self
            .elements
            .iter()
            .map(|e| element_probability(rho, e))
            .collect::<Result<_, _>>()?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::DistributionNotNormalized { sum });
        }
        Ok(probs)
    }

    /// Partial sums of the elements over the other side's outcomes, on the
    /// full product space. These are what the local-realism condition
    /// compares across settings.
    pub fn partial_sum_elements(&self, side: Side) -> Vec<ComplexMatrix> {
        let (n1, n2) = (self.outcomes.0.len(), self.outcomes.1.len());
        let full = self.dims.0 * self.dims.1;
        match side {
            Side::One => (0..n1)
                .map(|i1| {
                    let mut acc = ComplexMatrix::zeros(full, full);
                    for i2 in 0..n2 {
                        acc = acc.add(self.element(i1, i2)).expect("same shape");
                    }
                    acc
                })
                .collect(),
            Side::Two => (0..n2)
                .map(|i2| {
                    let mut acc = ComplexMatrix::zeros(full, full);
                    for i1 in 0..n1 {
                        acc = acc.add(self.element(i1, i2)).expect("same shape");
                    }
                    acc
                })
                .collect(),
        }
    }

    /// Marginal POV measure for one side.
    ///
    /// Tensor forms recover the stored factor exactly (the identity factor
    /// strips off); symmetrized and opaque forms return the partial sums on
    /// the full product space.
    pub fn marginal(&self, side: Side) -> Result<PovMeasure, QuantumError> {
        match (&self.form, side) {
            (JointPovForm::Tensor { m1, .. }, Side::One) => Ok(m1.clone()),
            (JointPovForm::Tensor { m2, .. }, Side::Two) => Ok(m2.clone()),
            _ => {
                let outcomes = match side {
                    Side::One => self.outcomes.0.clone(),
                    Side::Two => self.outcomes.1.clone(),
                };
                PovMeasure::new(outcomes, self.partial_sum_elements(side))
            }
        }
    }
}

fn product_elements(
    m1: &PovMeasure,
    m2: &PovMeasure,
    symmetrized: bool,
) -> Result<Vec<ComplexMatrix>, QuantumError> {
    let mut elements = Vec::with_capacity(m1.outcomes().len() * m2.outcomes().len());
    for e1 in m1.elements() {
        for e2 in m2.elements() {
            let plain = tensor_product(e1, e2)?;
            if symmetrized {
                elements.push(symmetrize_bipartite(&plain, m1.dim())?);
            } else {
                elements.push(plain);
            }
        }
    }
    Ok(elements)
}

fn element_probability(
    rho: &DensityOperator,
    element: &ComplexMatrix,
) -> Result<f64, QuantumError> {
    if element.rows() != rho.dim() {
        return Err(QuantumError::DimensionMismatch {
            context: "outcome probability",
            expected: rho.dim(),
            found: element.rows(),
        });
    }
    let value = rho.matrix().matmul(element)?.trace()?;
    let p = value.re;
    if !(-TRACE_TOL..=1.0 + TRACE_TOL).contains(&p) || value.im.abs() > TRACE_TOL {
        return Err(QuantumError::ProbabilityOutOfRange { value: p });
    }
    Ok(p.clamp(0.0, 1.0))
}

/// First-moment operator A = sum_lambda lambda * M(lambda) of a POV with
/// real outcome values bounded by 1. Hermitian with operator norm <= bound.
pub fn correlation_operator(m: &PovMeasure) -> Result<ComplexMatrix, QuantumError> {
    let bound = m.outcomes().bound();
    if bound > 1.0 + TRACE_TOL {
        return Err(QuantumError::BoundExceedsOne { bound });
    }
    let dim = m.dim();
    let mut acc = ComplexMatrix::zeros(dim, dim);
    for (element, &value) in m.elements().iter().zip(m.outcomes().values()) {
        acc = acc.add(&element.scale(value))?;
    }
    debug_assert!(operator_norm(&acc)? <= bound + TRACE_TOL);
    Ok(acc)
}

/// Product-outcome expectation tr[rho (A1 (x) A2)]; with `symmetrized` the
/// swap-averaged operator is used instead, which agrees with the plain form
/// on swap-symmetric states.
pub fn correlation(
    rho: &DensityOperator,
    m1: &PovMeasure,
    m2: &PovMeasure,
    symmetrized: bool,
) -> Result<f64, QuantumError> {
    let expected = m1.dim() * m2.dim();
    if rho.dim() != expected {
        return Err(QuantumError::DimensionMismatch {
            context: "correlation",
            expected,
            found: rho.dim(),
        });
    }
    let a1 = correlation_operator(m1)?;
    let a2 = correlation_operator(m2)?;
    let mut w = tensor_product(&a1, &a2)?;
    if symmetrized {
        if m1.dim() != m2.dim() {
            return Err(QuantumError::SymmetrizedNeedsEqualDims {
                d1: m1.dim(),
                d2: m2.dim(),
            });
        }
        w = symmetrize_bipartite(&w, m1.dim())?;
    }
    let value = rho.matrix().matmul(&w)?.trace()?;
    debug_assert!(value.im.abs() < 1e-9);
    Ok(value.re)
}

/// A separable decomposition: positive weights and pairs of density
/// operators on a common factor dimension.
#[derive(Debug, Clone)]
pub struct SeparableDecomposition {
    weights: Vec<f64>,
    pairs: Vec<(DensityOperator, DensityOperator)>,
    symmetrized: bool,
}

impl SeparableDecomposition {
    pub fn new(
        weights: &[f64],
        pairs: Vec<(DensityOperator, DensityOperator)>,
        symmetrized: bool,
    ) -> Result<Self, QuantumError> {
        if pairs.is_empty() || weights.len() != pairs.len() {
            return Err(QuantumError::DimensionMismatch {
                context: "decomposition",
                expected: pairs.len().max(1),
                found: weights.len(),
            });
        }
        if pairs.len() > MAX_DECOMPOSITION_TERMS {
            return Err(QuantumError::TooManyTerms { terms: pairs.len() });
        }
        let sum: f64 = weights.iter().sum();
        if weights.iter().any(|&w| !w.is_finite() || w <= 0.0) || (sum - 1.0).abs() > TRACE_TOL {
            return Err(QuantumError::InvalidWeights { sum });
        }
        let dim = pairs[0].0.dim();
        for (tau, tau_tilde) in &pairs {
            if tau.dim() != dim || tau_tilde.dim() != dim {
                return Err(QuantumError::DimensionMismatch {
                    context: "decomposition pair",
                    expected: dim,
                    found: tau.dim().max(tau_tilde.dim()),
                });
            }
        }
        let weights = weights.iter().map(|w| w / sum).collect();
        Ok(Self {
            weights,
            pairs,
            symmetrized,
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn pairs(&self) -> &[(DensityOperator, DensityOperator)] {
        &self.pairs
    }

    pub fn symmetrized(&self) -> bool {
        self.symmetrized
    }

    pub fn factor_dim(&self) -> usize {
        self.pairs[0].0.dim()
    }

    /// Whether every pair has tau~ equal to tau, entrywise within `tol`.
    pub fn pairs_coincide(&self, tol: f64) -> bool {
        self.pairs
            .iter()
            .all(|(tau, tau_tilde)| tau.matrix().approx_eq(tau_tilde.matrix(), tol))
    }

    /// The separable operator the decomposition assembles to: the
    /// swap-average of the pair products when symmetrized, the plain
    /// weighted sum otherwise.
    pub fn assemble(&self) -> Result<DensityOperator, QuantumError> {
        let dim = self.factor_dim() * self.factor_dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, (tau, tau_tilde)) in self.weights.iter().zip(&self.pairs) {
            let forward = tensor_product(tau.matrix(), tau_tilde.matrix())?;
            let term = if self.symmetrized {
                let backward = tensor_product(tau_tilde.matrix(), tau.matrix())?;
                forward.add(&backward)?.scale(0.5)
            } else {
                forward
            };
            acc = acc.add(&term.scale(*w))?;
        }
        DensityOperator::new(acc)
    }

    /// The companion operator with both factors taken from the same family:
    /// (sum_j w_j (tau_j (x) tau_j + tau~_j (x) tau~_j)) / 2.
    pub fn companion(&self) -> Result<DensityOperator, QuantumError> {
        let dim = self.factor_dim() * self.factor_dim();
        let mut acc = ComplexMatrix::zeros(dim, dim);
        for (w, (tau, tau_tilde)) in self.weights.iter().zip(&self.pairs) {
            let same = tensor_product(tau.matrix(), tau.matrix())?;
            let tilde = tensor_product(tau_tilde.matrix(), tau_tilde.matrix())?;
            acc = acc.add(&same.add(&tilde)?.scale(0.5 * w))?;
        }
        DensityOperator::new(acc)
    }
}

/// Residual data of a separable representation rho = eta + sigma.
#[derive(Debug, Clone)]
pub struct RepresentationResidual {
    /// rho - eta as a matrix.
    pub sigma: ComplexMatrix,
    pub sigma_trace_norm: f64,
    /// Bound constant 1 + ||sigma||_1 * ||A2(b1) - A2(b2)||.
    pub gamma: f64,
    /// Whether gamma <= 1 + 2 ||sigma||_1 (always true since the operator
    /// gap is at most 2; recorded for reporting).
    pub gamma_within_twice_residual: bool,
    /// The assembled separable operator eta.
    pub eta: DensityOperator,
    /// The companion operator used on the right-hand side of the quantum
    /// Bell analog.
    pub eta_tilde: DensityOperator,
}

/// Decompose `rho = eta + sigma` against an assembled separable operator and
/// derive the bound constant from Bob's two measurement operators.
pub fn representation_residual(
    rho: &DensityOperator,
    decomposition: &SeparableDecomposition,
    bob_b1: &PovMeasure,
    bob_b2: &PovMeasure,
) -> Result<RepresentationResidual, QuantumError> {
    let d = decomposition.factor_dim();
    if rho.dim() != d * d {
        return Err(QuantumError::DimensionMismatch {
            context: "residual representation",
            expected: d * d,
            found: rho.dim(),
        });
    }
    if bob_b1.dim() != d || bob_b2.dim() != d {
        return Err(QuantumError::DimensionMismatch {
            context: "residual measurement",
            expected: d,
            found: bob_b1.dim().max(bob_b2.dim()),
        });
    }
    if decomposition.symmetrized() {
        let s = crate::linalg::swap_operator(d);
        let swapped = s.matmul(rho.matrix())?.matmul(&s)?;
        let deviation = rho.matrix().sub(&swapped).expect("same shape").max_abs();
        if deviation > TRACE_TOL {
            return Err(QuantumError::NotSwapSymmetric { deviation });
        }
    }

    let eta = decomposition.assemble()?;
    let sigma = rho.matrix().sub(eta.matrix())?;
    let sigma_trace_norm = trace_norm(&sigma)?;
    let a_b1 = correlation_operator(bob_b1)?;
    let a_b2 = correlation_operator(bob_b2)?;
    let gap = operator_norm(&a_b1.sub(&a_b2)?)?;
    let gamma = 1.0 + sigma_trace_norm * gap;
    let gamma_within_twice_residual = gamma <= 1.0 + 2.0 * sigma_trace_norm + TRACE_TOL;
    let eta_tilde = decomposition.companion()?;
    Ok(RepresentationResidual {
        sigma,
        sigma_trace_norm,
        gamma,
        gamma_within_twice_residual,
        eta,
        eta_tilde,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn basis_projector(dim: usize, index: usize) -> DensityOperator {
        let mut v = vec![c(0.0, 0.0); dim];
        v[index] = c(1.0, 0.0);
        DensityOperator::pure(&v).unwrap()
    }

    fn random_density(rng: &mut ChaCha8Rng, dim: usize) -> DensityOperator {
        let entries: Vec<Complex64> = (0..dim * dim)
            .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
            .collect();
        let g = ComplexMatrix::new(dim, dim, entries).unwrap();
        let psd = g.matmul(&g.adjoint()).unwrap();
        let trace = psd.trace().unwrap().re;
        DensityOperator::new(psd.scale(1.0 / trace)).unwrap()
    }

    fn projective_pm(direction: [f64; 3]) -> PovMeasure {
        let a = bloch_operator(direction);
        let plus = ComplexMatrix::identity(2).add(&a).unwrap().scale(0.5);
        let minus = ComplexMatrix::identity(2).sub(&a).unwrap().scale(0.5);
        PovMeasure::new(OutcomeSet::pm_one(), vec![plus, minus]).unwrap()
    }

    #[test]
    fn density_constructor_rejects_invalid_operators() {
        let non_hermitian = ComplexMatrix::new(
            2,
            2,
            vec![c(0.5, 0.0), c(0.1, 0.0), c(0.0, 0.0), c(0.5, 0.0)],
        )
        .unwrap();
        assert!(matches!(
            DensityOperator::new(non_hermitian),
            Err(QuantumError::NotHermitian { .. })
        ));
        let indefinite = ComplexMatrix::diagonal(&[1.5, -0.5]);
        assert!(matches!(
            DensityOperator::new(indefinite),
            Err(QuantumError::NotPositive)
        ));
        let wrong_trace = ComplexMatrix::diagonal(&[0.7, 0.7]);
        assert!(matches!(
            DensityOperator::new(wrong_trace),
            Err(QuantumError::TraceNotOne { .. })
        ));
    }

    #[test]
    fn pov_constructor_enforces_normalization_and_positivity() {
        let half = ComplexMatrix::identity(2).scale(0.5);
        assert!(PovMeasure::new(OutcomeSet::pm_one(), vec![half.clone(), half.clone()]).is_ok());
        assert!(matches!(
            PovMeasure::new(OutcomeSet::pm_one(), vec![half.clone(), half.scale(0.5)]),
            Err(QuantumError::ElementsDontSumToIdentity { .. })
        ));
        let indefinite = ComplexMatrix::diagonal(&[1.5, -0.5]);
        let complement = ComplexMatrix::identity(2).sub(&indefinite).unwrap();
        assert!(matches!(
            PovMeasure::new(OutcomeSet::pm_one(), vec![indefinite, complement]),
            Err(QuantumError::NotPositive)
        ));
    }

    #[test]
    fn maximally_mixed_gives_uniform_projective_probabilities() {
        let rho = DensityOperator::maximally_mixed(2);
        let m = PovMeasure::computational(OutcomeSet::pm_one(), 2).unwrap();
        let probs = m.outcome_distribution(&rho).unwrap();
        assert!((probs[0] - 0.5).abs() < 1e-12 && (probs[1] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn pure_state_projective_probabilities() {
        let rho = basis_projector(2, 0);
        let m = PovMeasure::computational(OutcomeSet::pm_one(), 2).unwrap();
        let probs = m.outcome_distribution(&rho).unwrap();
        assert!((probs[0] - 1.0).abs() < 1e-12 && probs[1].abs() < 1e-12);
    }

    #[test]
    fn singlet_equal_axis_probabilities_are_anticorrelated() {
        let joint = JointPov::tensor(
            &projective_pm([0.0, 0.0, 1.0]),
            &projective_pm([0.0, 0.0, 1.0]),
        )
        .unwrap();
        let probs = joint.outcome_distribution(&singlet()).unwrap();
        let expected = [0.0, 0.5, 0.5, 0.0];
        for (p, e) in probs.iter().zip(expected) {
            assert!((p - e).abs() < 1e-12);
        }
    }

    #[test]
    fn outcome_probability_is_convex_linear_in_the_state() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = projective_pm([0.6, 0.48, 0.64]);
        for _ in 0..20 {
            let r1 = random_density(&mut rng, 2);
            let r2 = random_density(&mut rng, 2);
            let p: f64 = rng.random_range(0.0..1.0);
            let mixed = DensityOperator::mixture(&[p, 1.0 - p], &[r1.clone(), r2.clone()]).unwrap();
            for k in 0..2 {
                let direct = m.outcome_probability(&mixed, k).unwrap();
                let convex = p * m.outcome_probability(&r1, k).unwrap()
                    + (1.0 - p) * m.outcome_probability(&r2, k).unwrap();
                assert!((direct - convex).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn tensor_joint_of_computational_povs_is_basis_projective() {
        let m = PovMeasure::computational(OutcomeSet::pm_one(), 2).unwrap();
        let joint = JointPov::tensor(&m, &m).unwrap();
        for i1 in 0..2 {
            for i2 in 0..2 {
                let mut v = vec![c(0.0, 0.0); 4];
                v[i1 * 2 + i2] = c(1.0, 0.0);
                assert!(joint
                    .element(i1, i2)
                    .approx_eq(&ComplexMatrix::outer(&v), 1e-14));
            }
        }
    }

    #[test]
    fn symmetrized_joint_with_distinct_povs_is_a_valid_pov() {
        let m1 = projective_pm([0.0, 0.0, 1.0]);
        let m2 = projective_pm([1.0, 0.0, 0.0]);
        let joint = JointPov::symmetrized(&m1, &m2).unwrap();
        let mut sum = ComplexMatrix::zeros(4, 4);
        for e in joint.elements() {
            sum = sum.add(e).unwrap();
            // Element equals the swap average of the two tensor orders.
            assert!(is_positive_semidefinite(e).unwrap());
        }
        assert!(sum.approx_eq(&ComplexMatrix::identity(4), 1e-10));
    }

    #[test]
    fn symmetrized_rejects_unequal_dims() {
        let m1 = projective_pm([0.0, 0.0, 1.0]);
        let m4 =
            PovMeasure::computational(OutcomeSet::new(vec![1.0, 0.5, -0.5, -1.0], 1.0).unwrap(), 4)
                .unwrap();
        assert!(matches!(
            JointPov::symmetrized(&m1, &m4),
            Err(QuantumError::SymmetrizedNeedsEqualDims { .. })
        ));
    }

    #[test]
    fn tensor_marginals_recover_factors_and_ignore_the_other_setting() {
        let m1 = projective_pm([0.0, 0.0, 1.0]);
        let m2a = projective_pm([1.0, 0.0, 0.0]);
        let m2b = projective_pm([0.0, 1.0, 0.0]);
        let ja = JointPov::tensor(&m1, &m2a).unwrap();
        let jb = JointPov::tensor(&m1, &m2b).unwrap();
        assert_eq!(ja.marginal(Side::One).unwrap(), m1);
        assert_eq!(ja.marginal(Side::Two).unwrap(), m2a);
        // Partial sums on side 1 do not depend on Bob's choice.
        let pa = ja.partial_sum_elements(Side::One);
        let pb = jb.partial_sum_elements(Side::One);
        for (x, y) in pa.iter().zip(&pb) {
            assert!(x.approx_eq(y, 1e-12));
        }
        // And they equal M1 (x) I.
        let i2 = ComplexMatrix::identity(2);
        for (k, x) in pa.iter().enumerate() {
            let oracle = tensor_product(m1.element(k), &i2).unwrap();
            assert!(x.approx_eq(&oracle, 1e-12));
        }
    }

    #[test]
    fn symmetrized_marginal_is_the_swap_averaged_partial_sum() {
        let m1 = projective_pm([0.0, 0.0, 1.0]);
        let m2 = projective_pm([1.0, 0.0, 0.0]);
        let joint = JointPov::symmetrized(&m1, &m2).unwrap();
        let marginal = joint.marginal(Side::One).unwrap();
        let i2 = ComplexMatrix::identity(2);
        for (k, e) in marginal.elements().iter().enumerate() {
            let oracle = tensor_product(m1.element(k), &i2)
                .unwrap()
                .add(&tensor_product(&i2, m1.element(k)).unwrap())
                .unwrap()
                .scale(0.5);
            assert!(e.approx_eq(&oracle, 1e-12));
        }
    }

    #[test]
    fn opaque_joint_matches_tensor_partial_sums() {
        let m1 = projective_pm([0.0, 0.0, 1.0]);
        let m2 = projective_pm([1.0, 0.0, 0.0]);
        let tensor = JointPov::tensor(&m1, &m2).unwrap();
        let opaque = JointPov::opaque(
            (2, 2),
            OutcomeSet::pm_one(),
            OutcomeSet::pm_one(),
            tensor.elements().to_vec(),
        )
        .unwrap();
        let a = tensor.partial_sum_elements(Side::One);
        let b = opaque.partial_sum_elements(Side::One);
        for (x, y) in a.iter().zip(&b) {
            assert!(x.approx_eq(y, 1e-14));
        }
        // The opaque marginal keeps the full product dimension.
        assert_eq!(opaque.marginal(Side::One).unwrap().dim(), 4);
    }

    #[test]
    fn correlation_operator_examples() {
        let m = projective_pm([0.0, 0.0, 1.0]);
        assert!(correlation_operator(&m)
            .unwrap()
            .approx_eq(&pauli_z(), 1e-12));

        let coin = PovMeasure::new(
            OutcomeSet::pm_one(),
            vec![
                ComplexMatrix::identity(2).scale(0.5),
                ComplexMatrix::identity(2).scale(0.5),
            ],
        )
        .unwrap();
        assert!(correlation_operator(&coin)
            .unwrap()
            .approx_eq(&ComplexMatrix::zeros(2, 2), 1e-14));

        // Noisy projective measurement: A = v * (n . sigma).
        let v = 0.7;
        let n = [0.6, 0.0, 0.8];
        let a = bloch_operator(n).scale(v);
        let plus = ComplexMatrix::identity(2).add(&a).unwrap().scale(0.5);
        let minus = ComplexMatrix::identity(2).sub(&a).unwrap().scale(0.5);
        let noisy = PovMeasure::new(OutcomeSet::pm_one(), vec![plus, minus]).unwrap();
        assert!(correlation_operator(&noisy).unwrap().approx_eq(&a, 1e-12));
    }

    #[test]
    fn correlation_factorizes_on_product_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let tau = random_density(&mut rng, 2);
        let tau_tilde = random_density(&mut rng, 2);
        let product =
            DensityOperator::new(tensor_product(tau.matrix(), tau_tilde.matrix()).unwrap())
                .unwrap();
        let m1 = projective_pm([0.0, 0.0, 1.0]);
        let m2 = projective_pm([1.0, 0.0, 0.0]);
        let joint = correlation(&product, &m1, &m2, false).unwrap();
        let t1 = tau
            .matrix()
            .matmul(&correlation_operator(&m1).unwrap())
            .unwrap()
            .trace()
            .unwrap()
            .re;
        let t2 = tau_tilde
            .matrix()
            .matmul(&correlation_operator(&m2).unwrap())
            .unwrap()
            .trace()
            .unwrap()
            .re;
        assert!((joint - t1 * t2).abs() < 1e-12);
    }

    #[test]
    fn singlet_correlation_is_minus_cosine_of_the_angle() {
        for (a, b) in [(0.0, 1.0), (0.25, 0.75), (0.5, 0.125)] {
            let na = [
                f64::sin(a * std::f64::consts::PI),
                0.0,
                f64::cos(a * std::f64::consts::PI),
            ];
            let nb = [
                f64::sin(b * std::f64::consts::PI),
                0.0,
                f64::cos(b * std::f64::consts::PI),
            ];
            let e = correlation(&singlet(), &projective_pm(na), &projective_pm(nb), false).unwrap();
            let angle = (a - b) * std::f64::consts::PI;
            assert!((e + angle.cos()).abs() < 1e-10);
        }
    }

    #[test]
    fn maximally_mixed_correlations_of_traceless_observables_vanish() {
        let rho = DensityOperator::maximally_mixed(4);
        let e = correlation(
            &rho,
            &projective_pm([0.0, 0.0, 1.0]),
            &projective_pm([1.0, 0.0, 0.0]),
            false,
        )
        .unwrap();
        assert!(e.abs() < 1e-12);
    }

    #[test]
    fn symmetrized_correlation_agrees_on_symmetric_states() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..20 {
            let raw = random_density(&mut rng, 4);
            let s = crate::linalg::swap_operator(2);
            let swapped = s.matmul(raw.matrix()).unwrap().matmul(&s).unwrap();
            let sym = DensityOperator::new(raw.matrix().add(&swapped).unwrap().scale(0.5)).unwrap();
            let m1 = projective_pm([0.6, 0.48, 0.64]);
            let m2 = projective_pm([0.0, 0.8, -0.6]);
            let plain = correlation(&sym, &m1, &m2, false).unwrap();
            let averaged = correlation(&sym, &m1, &m2, true).unwrap();
            assert!((plain - averaged).abs() < 1e-10);
        }
    }

    #[test]
    fn assemble_single_pair_is_the_product_state() {
        let tau = basis_projector(2, 0);
        let dec =
            SeparableDecomposition::new(&[1.0], vec![(tau.clone(), tau.clone())], true).unwrap();
        let eta = dec.assemble().unwrap();
        let oracle = tensor_product(tau.matrix(), tau.matrix()).unwrap();
        assert!(eta.matrix().approx_eq(&oracle, 1e-14));
    }

    #[test]
    fn assemble_symmetrized_cross_pairs() {
        let p0 = basis_projector(2, 0);
        let p1 = basis_projector(2, 1);
        let dec = SeparableDecomposition::new(
            &[0.5, 0.5],
            vec![(p0.clone(), p1.clone()), (p1.clone(), p0.clone())],
            true,
        )
        .unwrap();
        let eta = dec.assemble().unwrap();
        let oracle = ComplexMatrix::diagonal(&[0.0, 0.5, 0.5, 0.0]);
        assert!(eta.matrix().approx_eq(&oracle, 1e-14));
    }

    #[test]
    fn maximally_mixed_assembles_from_uniform_basis_pairs() {
        let pairs: Vec<_> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (basis_projector(2, i), basis_projector(2, j))))
            .collect();
        let dec = SeparableDecomposition::new(&[0.25; 4], pairs, true).unwrap();
        let eta = dec.assemble().unwrap();
        assert!(eta
            .matrix()
            .approx_eq(DensityOperator::maximally_mixed(4).matrix(), 1e-14));
    }

    #[test]
    fn decomposition_rejects_invalid_weights() {
        let tau = basis_projector(2, 0);
        assert!(matches!(
            SeparableDecomposition::new(
                &[0.4, 0.4],
                vec![(tau.clone(), tau.clone()), (tau.clone(), tau.clone())],
                true
            ),
            Err(QuantumError::InvalidWeights { .. })
        ));
        assert!(matches!(
            SeparableDecomposition::new(
                &[1.0, 0.0],
                vec![(tau.clone(), tau.clone()), (tau.clone(), tau.clone())],
                true
            ),
            Err(QuantumError::InvalidWeights { .. })
        ));
    }

    #[test]
    fn residual_vanishes_when_rho_is_the_assembled_operator() {
        let p0 = basis_projector(2, 0);
        let p1 = basis_projector(2, 1);
        let dec = SeparableDecomposition::new(
            &[0.5, 0.5],
            vec![(p0.clone(), p1.clone()), (p1, p0)],
            true,
        )
        .unwrap();
        let rho = dec.assemble().unwrap();
        let b1 = projective_pm([0.0, 0.0, 1.0]);
        let b2 = projective_pm([1.0, 0.0, 0.0]);
        let res = representation_residual(&rho, &dec, &b1, &b2).unwrap();
        assert!(res.sigma_trace_norm < 1e-12);
        assert!((res.gamma - 1.0).abs() < 1e-12);
        assert!(res.gamma_within_twice_residual);
    }

    #[test]
    fn residual_of_singlet_against_maximally_mixed() {
        let pairs: Vec<_> = (0..2)
            .flat_map(|i| (0..2).map(move |j| (basis_projector(2, i), basis_projector(2, j))))
            .collect();
        let dec = SeparableDecomposition::new(&[0.25; 4], pairs, true).unwrap();
        let b1 = projective_pm([0.0, 0.0, 1.0]);
        let b2 = projective_pm([1.0, 0.0, 0.0]);
        let res = representation_residual(&singlet(), &dec, &b1, &b2).unwrap();
        assert!((res.sigma_trace_norm - 1.5).abs() < 1e-10);

        // Werner scaling of the same spectrum.
        for p in [0.2, 0.5, 0.9] {
            let res = representation_residual(&werner(p).unwrap(), &dec, &b1, &b2).unwrap();
            assert!((res.sigma_trace_norm - 1.5 * p).abs() < 1e-9);
        }
    }

    #[test]
    fn residual_rejects_asymmetric_states_for_symmetrized_decompositions() {
        let p0 = basis_projector(2, 0);
        let p1 = basis_projector(2, 1);
        let asym = DensityOperator::new(tensor_product(p0.matrix(), p1.matrix()).unwrap()).unwrap();
        let dec =
            SeparableDecomposition::new(&[1.0], vec![(p0.clone(), p0.clone())], true).unwrap();
        let b = projective_pm([0.0, 0.0, 1.0]);
        assert!(matches!(
            representation_residual(&asym, &dec, &b, &b),
            Err(QuantumError::NotSwapSymmetric { .. })
        ));
    }
}
