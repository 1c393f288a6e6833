//! Finite information states and generalized observables.
//!
//! An experiment on a system described by a finite point set Theta is
//! represented by a stochastic kernel: one outcome distribution per point.
//! Joint observables carry a provenance tag (image, product, factorizable,
//! opaque) so that inequality checkers can tell which sufficient conditions
//! are even addressable.

use thiserror::Error;

use crate::inequalities::{InequalityReport, Sign};

/// Tolerance for probability normalization; rows deviating by more than this
/// are rejected, rows within it are renormalized exactly.
pub const STOCHASTIC_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum InfoError {
    #[error("state needs at least one point")]
    EmptyDomain,

    #[error("lengths disagree: {context} expects {expected} entries, got {found}")]
    LengthMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("probability {value} at index {index} is outside [0, 1]")]
    NotAProbability { index: usize, value: f64 },

    #[error("probabilities sum to {sum}, more than {tol:.1e} away from 1")]
    NotNormalized { sum: f64, tol: f64 },

    #[error("outcome bound must be positive and finite, got {bound}")]
    InvalidBound { bound: f64 },

    #[error("outcome value {value} exceeds the bound {bound}")]
    OutcomeOutOfBound { value: f64, bound: f64 },

    #[error("value {value} does not appear in the outcome set")]
    ValueNotInOutcomeSet { value: f64 },

    #[error("point-set size mismatch: expected {expected}, found {found}")]
    ThetaMismatch { expected: usize, found: usize },

    #[error("outcome sets of the components disagree")]
    OutcomeSetMismatch,

    #[error("support index {index} is out of range for {len} points")]
    SupportOutOfRange { index: usize, len: usize },

    #[error("expected {expected} off-support rows, got {found}")]
    OffSupportRowCount { expected: usize, found: usize },

    #[error(
        "expectation bound breached: |{name}| = {value} exceeds {bound} beyond tolerance \
         (inputs are corrupt)"
    )]
    ExpectationBoundBreach {
        name: &'static str,
        value: f64,
        bound: f64,
    },

    #[error("pair bound precondition breached: |{value}| exceeds C1*C2 = {bound}")]
    PairBoundPrecondition { value: f64, bound: f64 },
}

/// Validate probabilities and renormalize the near-unit sum exactly.
fn normalized_probabilities(values: &[f64], context: &'static str) -> Result<Vec<f64>, InfoError> {
    if values.is_empty() {
        return Err(InfoError::LengthMismatch {
            context,
            expected: 1,
            found: 0,
        });
    }
    for (index, &value) in values.iter().enumerate() {
        if !value.is_finite() || !(0.0..=1.0).contains(&value) {
            return Err(InfoError::NotAProbability { index, value });
        }
    }
    let sum: f64 = values.iter().sum();
    if (sum - 1.0).abs() > STOCHASTIC_TOL {
        return Err(InfoError::NotNormalized {
            sum,
            tol: STOCHASTIC_TOL,
        });
    }
    Ok(values.iter().map(|v| (v / sum).clamp(0.0, 1.0)).collect())
}

/// A finite information state: labelled points with probability weights.
#[derive(Debug, Clone, PartialEq)]
pub struct InformationState {
    labels: Vec<String>,
    pi: Vec<f64>,
}

impl InformationState {
    pub fn new(labels: Vec<String>, pi: &[f64]) -> Result<Self, InfoError> {
        if labels.is_empty() {
            return Err(InfoError::EmptyDomain);
        }
        if labels.len() != pi.len() {
            return Err(InfoError::LengthMismatch {
                context: "information state",
                expected: labels.len(),
                found: pi.len(),
            });
        }
        let pi = normalized_probabilities(pi, "information state")?;
        Ok(Self { labels, pi })
    }

    pub fn uniform(labels: Vec<String>) -> Result<Self, InfoError> {
        let n = labels.len();
        if n == 0 {
            return Err(InfoError::EmptyDomain);
        }
        let pi = vec![1.0 / n as f64; n];
        Self::new(labels, &pi)
    }

    pub fn len(&self) -> usize {
        self.pi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pi.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn weights(&self) -> &[f64] {
        &self.pi
    }

    pub fn weight(&self, theta: usize) -> f64 {
        self.pi[theta]
    }

    /// Indices carrying strictly positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.pi.len()).filter(|&i| self.pi[i] > 0.0).collect()
    }
}

/// A bounded finite set of real outcome values.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeSet {
    values: Vec<f64>,
    bound: f64,
}

impl OutcomeSet {
    pub fn new(values: Vec<f64>, bound: f64) -> Result<Self, InfoError> {
        if !bound.is_finite() || bound <= 0.0 {
            return Err(InfoError::InvalidBound { bound });
        }
        if values.is_empty() {
            return Err(InfoError::LengthMismatch {
                context: "outcome set",
                expected: 1,
                found: 0,
            });
        }
        for &value in &values {
            if !value.is_finite() || value.abs() > bound {
                return Err(InfoError::OutcomeOutOfBound { value, bound });
            }
        }
        Ok(Self { values, bound })
    }

    /// The default two-outcome set {+1, -1} with bound 1.
    pub fn pm_one() -> Self {
        Self {
            values: vec![1.0, -1.0],
            bound: 1.0,
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    pub fn bound(&self) -> f64 {
        self.bound
    }

    pub fn index_of(&self, value: f64) -> Option<usize> {
        self.values.iter().position(|&v| v == value)
    }
}

impl Default for OutcomeSet {
    fn default() -> Self {
        Self::pm_one()
    }
}

/// A generalized observable as a finite stochastic kernel: row theta is the
/// outcome distribution when the system property is theta.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneralizedObservable {
    outcomes: OutcomeSet,
    kernel: Vec<Vec<f64>>,
}

impl GeneralizedObservable {
    pub fn new(outcomes: OutcomeSet, kernel: Vec<Vec<f64>>) -> Result<Self, InfoError> {
        if kernel.is_empty() {
            return Err(InfoError::EmptyDomain);
        }
        let mut rows = Vec::with_capacity(kernel.len());
        for row in &kernel {
            if row.len() != outcomes.len() {
                return Err(InfoError::LengthMismatch {
                    context: "kernel row",
                    expected: outcomes.len(),
                    found: row.len(),
                });
            }
            rows.push(normalized_probabilities(row, "kernel row")?);
        }
        Ok(Self {
            outcomes,
            kernel: rows,
        })
    }

    /// Deterministic kernel mapping each point to a single outcome value.
    pub fn deterministic(outcomes: OutcomeSet, values: &[f64]) -> Result<Self, InfoError> {
        if values.is_empty() {
            return Err(InfoError::EmptyDomain);
        }
        let mut kernel = Vec::with_capacity(values.len());
        for &value in values {
            let index = outcomes
                .index_of(value)
                .ok_or(InfoError::ValueNotInOutcomeSet { value })?;
            let mut row = vec![0.0; outcomes.len()];
            row[index] = 1.0;
            kernel.push(row);
        }
        Self::new(outcomes, kernel)
    }

    /// Constant-row observable: the outcome distribution ignores theta.
    pub fn trivial(
        outcomes: OutcomeSet,
        distribution: &[f64],
        theta_count: usize,
    ) -> Result<Self, InfoError> {
        if theta_count == 0 {
            return Err(InfoError::EmptyDomain);
        }
        let kernel = vec![distribution.to_vec(); theta_count];
        Self::new(outcomes, kernel)
    }

    pub fn theta_count(&self) -> usize {
        self.kernel.len()
    }

    pub fn outcomes(&self) -> &OutcomeSet {
        &self.outcomes
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    pub fn row(&self, theta: usize) -> &[f64] {
        &self.kernel[theta]
    }

    /// Mean outcome value at a point: f(theta) = sum_lambda lambda * p.
    pub fn mean_value(&self, theta: usize) -> f64 {
        self.kernel[theta]
            .iter()
            .zip(self.outcomes.values())
            .map(|(p, v)| p * v)
            .sum()
    }

    /// Outcome distribution induced by an information state.
    pub fn outcome_distribution(&self, state: &InformationState) -> Result<Vec<f64>, InfoError> {
        check_theta(self.theta_count(), state)?;
        let mut mu = vec![0.0; self.outcomes.len()];
        for (theta, row) in self.kernel.iter().enumerate() {
            let w = state.weight(theta);
            for (m, p) in mu.iter_mut().zip(row) {
                *m += w * p;
            }
        }
        Ok(mu)
    }
}

/// How a joint observable was constructed; checkers rely on this to decide
/// which sufficient conditions are addressable.
#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    /// Deterministic joint kernel induced by two point functions.
    Image { f1: Vec<f64>, f2: Vec<f64> },
    /// Pointwise product of two marginal kernels.
    Product {
        p1: Box<GeneralizedObservable>,
        p2: Box<GeneralizedObservable>,
    },
    /// Mixture of product kernels over a latent finite set, valid on
    /// `support`; rows off the support are whatever the caller installed.
    Factorizable {
        nu: Vec<f64>,
        components: Vec<(GeneralizedObservable, GeneralizedObservable)>,
        support: Vec<usize>,
    },
    /// No structural information.
    Opaque,
}

/// Which side of a joint observable.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    One,
    Two,
}

/// A joint observable over a product outcome grid, stored row-major in the
/// lambda-1-major column order.
#[derive(Debug, Clone, PartialEq)]
pub struct JointObservable {
    outcomes: (OutcomeSet, OutcomeSet),
    kernel: Vec<Vec<f64>>,
    provenance: Provenance,
}

impl JointObservable {
    /// Joint observable with no structural information.
    pub fn opaque(
        outcomes1: OutcomeSet,
        outcomes2: OutcomeSet,
        kernel: Vec<Vec<f64>>,
    ) -> Result<Self, InfoError> {
        Self::with_provenance(outcomes1, outcomes2, kernel, Provenance::Opaque)
    }

    /// Deterministic joint kernel putting mass 1 on (f1(theta), f2(theta)).
    pub fn image(
        outcomes1: OutcomeSet,
        outcomes2: OutcomeSet,
        f1: &[f64],
        f2: &[f64],
    ) -> Result<Self, InfoError> {
        if f1.len() != f2.len() {
            return Err(InfoError::LengthMismatch {
                context: "image observable",
                expected: f1.len(),
                found: f2.len(),
            });
        }
        if f1.is_empty() {
            return Err(InfoError::EmptyDomain);
        }
        let n2 = outcomes2.len();
        let mut kernel = Vec::with_capacity(f1.len());
        for (&v1, &v2) in f1.iter().zip(f2) {
            let i1 = outcomes1
                .index_of(v1)
                .ok_or(InfoError::ValueNotInOutcomeSet { value: v1 })?;
            let i2 = outcomes2
                .index_of(v2)
                .ok_or(InfoError::ValueNotInOutcomeSet { value: v2 })?;
            let mut row = vec![0.0; outcomes1.len() * n2];
            row[i1 * n2 + i2] = 1.0;
            kernel.push(row);
        }
        Self::with_provenance(
            outcomes1,
            outcomes2,
            kernel,
            Provenance::Image {
                f1: f1.to_vec(),
                f2: f2.to_vec(),
            },
        )
    }

    /// Product joint kernel: row theta is the outer product of the rows of
    /// the two marginal observables.
    pub fn product(
        p1: &GeneralizedObservable,
        p2: &GeneralizedObservable,
    ) -> Result<Self, InfoError> {
        if p1.theta_count() != p2.theta_count() {
            return Err(InfoError::ThetaMismatch {
                expected: p1.theta_count(),
                found: p2.theta_count(),
            });
        }
        let kernel = (0..p1.theta_count())
            .map(|theta| outer_row(p1.row(theta), p2.row(theta)))
            .collect();
        Self::with_provenance(
            p1.outcomes().clone(),
            p2.outcomes().clone(),
            kernel,
            Provenance::Product {
                p1: Box::new(p1.clone()),
                p2: Box::new(p2.clone()),
            },
        )
    }

    /// Mixture of product kernels over latent components, valid everywhere.
    pub fn factorizable(
        components: &[(GeneralizedObservable, GeneralizedObservable)],
        nu: &[f64],
    ) -> Result<Self, InfoError> {
        let theta_count = components
            .first()
            .map(|(p1, _)| p1.theta_count())
            .unwrap_or(0);
        let support: Vec<usize> = (0..theta_count).collect();
        Self::factorizable_on(components, nu, &support, None)
    }

    /// Mixture of product kernels valid on `support`; rows off the support
    /// default to the same mixture unless explicit stochastic rows are
    /// supplied (in ascending theta order of the complement).
    pub fn factorizable_on(
        components: &[(GeneralizedObservable, GeneralizedObservable)],
        nu: &[f64],
        support: &[usize],
        off_support_rows: Option<Vec<Vec<f64>>>,
    ) -> Result<Self, InfoError> {
        if components.is_empty() {
            return Err(InfoError::LengthMismatch {
                context: "factorizable components",
                expected: 1,
                found: 0,
            });
        }
        let nu = normalized_probabilities(nu, "mixing weights")?;
        if nu.len() != components.len() {
            return Err(InfoError::LengthMismatch {
                context: "mixing weights",
                expected: components.len(),
                found: nu.len(),
            });
        }
        let (first1, first2) = &components[0];
        let theta_count = first1.theta_count();
        for (p1, p2) in components {
            if p1.theta_count() != theta_count || p2.theta_count() != theta_count {
                return Err(InfoError::ThetaMismatch {
                    expected: theta_count,
                    found: p1.theta_count().max(p2.theta_count()),
                });
            }
            if p1.outcomes() != first1.outcomes() || p2.outcomes() != first2.outcomes() {
                return Err(InfoError::OutcomeSetMismatch);
            }
        }
        let mut in_support = vec![false; theta_count];
        for &index in support {
            if index >= theta_count {
                return Err(InfoError::SupportOutOfRange {
                    index,
                    len: theta_count,
                });
            }
            in_support[index] = true;
        }
        let support_sorted: Vec<usize> = (0..theta_count).filter(|&i| in_support[i]).collect();

        let mixture_row = |theta: usize| -> Vec<f64> {
            let cols = first1.outcomes().len() * first2.outcomes().len();
            let mut row = vec![0.0; cols];
            for ((p1, p2), &w) in components.iter().zip(&nu) {
                let outer = outer_row(p1.row(theta), p2.row(theta));
                for (r, o) in row.iter_mut().zip(&outer) {
                    *r += w * o;
                }
            }
            row
        };

        let off_count = theta_count - support_sorted.len();
        if let Some(rows) = &off_support_rows {
            if rows.len() != off_count {
                return Err(InfoError::OffSupportRowCount {
                    expected: off_count,
                    found: rows.len(),
                });
            }
        }

        let mut kernel = Vec::with_capacity(theta_count);
        let mut off_iter = off_support_rows.unwrap_or_default().into_iter();
        for (theta, &supported) in in_support.iter().enumerate() {
            if supported {
                kernel.push(mixture_row(theta));
            } else if let Some(row) = off_iter.next() {
                kernel.push(row);
            } else {
                kernel.push(mixture_row(theta));
            }
        }
        Self::with_provenance(
            first1.outcomes().clone(),
            first2.outcomes().clone(),
            kernel,
            Provenance::Factorizable {
                nu,
                components: components.to_vec(),
                support: support_sorted,
            },
        )
    }

    fn with_provenance(
        outcomes1: OutcomeSet,
        outcomes2: OutcomeSet,
        kernel: Vec<Vec<f64>>,
        provenance: Provenance,
    ) -> Result<Self, InfoError> {
        if kernel.is_empty() {
            return Err(InfoError::EmptyDomain);
        }
        let cols = outcomes1.len() * outcomes2.len();
        let mut rows = Vec::with_capacity(kernel.len());
        for row in &kernel {
            if row.len() != cols {
                return Err(InfoError::LengthMismatch {
                    context: "joint kernel row",
                    expected: cols,
                    found: row.len(),
                });
            }
            rows.push(normalized_probabilities(row, "joint kernel row")?);
        }
        Ok(Self {
            outcomes: (outcomes1, outcomes2),
            kernel: rows,
            provenance,
        })
    }

    pub fn theta_count(&self) -> usize {
        self.kernel.len()
    }

    pub fn outcomes(&self) -> (&OutcomeSet, &OutcomeSet) {
        (&self.outcomes.0, &self.outcomes.1)
    }

    pub fn kernel(&self) -> &[Vec<f64>] {
        &self.kernel
    }

    pub fn row(&self, theta: usize) -> &[f64] {
        &self.kernel[theta]
    }

    pub fn provenance(&self) -> &Provenance {
        &self.provenance
    }

    /// Column index of the outcome pair (i1, i2).
    pub fn column(&self, i1: usize, i2: usize) -> usize {
        i1 * self.outcomes.1.len() + i2
    }

    /// Whether the provenance guarantees factorizability everywhere the
    /// state puts weight.
    pub fn provenance_covers_support(&self, state: &InformationState) -> bool {
        match &self.provenance {
            Provenance::Image { .. } | Provenance::Product { .. } => true,
            Provenance::Factorizable { support, .. } => {
                state.support().iter().all(|i| support.contains(i))
            }
            Provenance::Opaque => false,
        }
    }

    /// Mixing weights of the latent component distribution, when the
    /// provenance exposes one (image and product count as a single
    /// deterministic component).
    pub fn effective_mixing_weights(&self) -> Option<Vec<f64>> {
        match &self.provenance {
            Provenance::Image { .. } | Provenance::Product { .. } => Some(vec![1.0]),
            Provenance::Factorizable { nu, .. } => Some(nu.clone()),
            Provenance::Opaque => None,
        }
    }

    /// Marginal observable obtained by summing out the other side.
    pub fn marginal(&self, side: Side) -> GeneralizedObservable {
        let (n1, n2) = (self.outcomes.0.len(), self.outcomes.1.len());
        let (outcomes, len) = match side {
            Side::One => (self.outcomes.0.clone(), n1),
            Side::Two => (self.outcomes.1.clone(), n2),
        };
        let kernel = self
            .kernel
            .iter()
            .map(|row| {
                let mut out = vec![0.0; len];
                for i1 in 0..n1 {
                    for i2 in 0..n2 {
                        let p = row[i1 * n2 + i2];
                        match side {
                            Side::One => out[i1] += p,
                            Side::Two => out[i2] += p,
                        }
                    }
                }
                out
            })
            .collect();
        GeneralizedObservable::new(outcomes, kernel)
            .expect("marginal rows of a stochastic kernel are stochastic")
    }

    /// Outcome distribution over the product grid induced by a state.
    pub fn outcome_distribution(&self, state: &InformationState) -> Result<Vec<f64>, InfoError> {
        check_theta(self.theta_count(), state)?;
        let cols = self.outcomes.0.len() * self.outcomes.1.len();
        let mut mu = vec![0.0; cols];
        for (theta, row) in self.kernel.iter().enumerate() {
            let w = state.weight(theta);
            for (m, p) in mu.iter_mut().zip(row) {
                *m += w * p;
            }
        }
        Ok(mu)
    }

    /// Expectation values of the outcomes and their product, together with
    /// the per-point mean functions they integrate.
    pub fn expectation_values(&self, state: &InformationState) -> Result<Expectations, InfoError> {
        check_theta(self.theta_count(), state)?;
        let marg1 = self.marginal(Side::One);
        let marg2 = self.marginal(Side::Two);
        let (c1, c2) = (self.outcomes.0.bound(), self.outcomes.1.bound());
        let n2 = self.outcomes.1.len();

        let mut f1 = Vec::with_capacity(self.theta_count());
        let mut f2 = Vec::with_capacity(self.theta_count());
        let mut f_joint = Vec::with_capacity(self.theta_count());
        for theta in 0..self.theta_count() {
            let v1 = marg1.mean_value(theta);
            let v2 = marg2.mean_value(theta);
            let mut vj = 0.0;
            for (i1, &l1) in self.outcomes.0.values().iter().enumerate() {
                for (i2, &l2) in self.outcomes.1.values().iter().enumerate() {
                    vj += l1 * l2 * self.kernel[theta][i1 * n2 + i2];
                }
            }
            check_bound("f1", v1, c1)?;
            check_bound("f2", v2, c2)?;
            check_bound("f_joint", vj, c1 * c2)?;
            f1.push(v1);
            f2.push(v2);
            f_joint.push(vj);
        }

        let weigh = |f: &[f64]| -> f64 {
            f.iter()
                .zip(state.weights())
                .map(|(v, w)| v * w)
                .sum::<f64>()
        };
        let (e1, e2, e12) = (weigh(&f1), weigh(&f2), weigh(&f_joint));
        check_bound("E1", e1, c1)?;
        check_bound("E2", e2, c2)?;
        check_bound("E12", e12, c1 * c2)?;
        Ok(Expectations {
            e1,
            e2,
            e12,
            f1,
            f2,
            f_joint,
        })
    }
}

/// Expectation values of a joint measurement together with the underlying
/// per-point mean functions.
#[derive(Debug, Clone)]
pub struct Expectations {
    pub e1: f64,
    pub e2: f64,
    pub e12: f64,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub f_joint: Vec<f64>,
}

/// Bound on a pair of product expectations from two joint measurements on
/// the same state: `|E1 s E2| <= C1*C2 + s * E1*E2 / (C1*C2)` with the same
/// sign `s` on both sides. Holds for any valid inputs; a violated report
/// therefore signals corrupt inputs.
pub fn general_pair_bound(
    e12_first: f64,
    e12_second: f64,
    c1: f64,
    c2: f64,
    sign: Sign,
    tol: f64,
) -> Result<InequalityReport, InfoError> {
    if !c1.is_finite() || !c2.is_finite() || c1 <= 0.0 || c2 <= 0.0 {
        return Err(InfoError::InvalidBound {
            bound: if c1 <= 0.0 { c1 } else { c2 },
        });
    }
    let cap = c1 * c2;
    for value in [e12_first, e12_second] {
        if !value.is_finite() || value.abs() > cap + STOCHASTIC_TOL {
            return Err(InfoError::PairBoundPrecondition { value, bound: cap });
        }
    }
    let s = sign.value();
    let lhs = (e12_first + s * e12_second).abs();
    let rhs = cap + s * e12_first * e12_second / cap;
    Ok(InequalityReport::new(
        format!("general-pair-bound({})", sign.symbol()),
        lhs,
        rhs,
        tol,
    ))
}

fn check_theta(expected: usize, state: &InformationState) -> Result<(), InfoError> {
    if expected != state.len() {
        return Err(InfoError::ThetaMismatch {
            expected,
            found: state.len(),
        });
    }
    Ok(())
}

fn check_bound(name: &'static str, value: f64, bound: f64) -> Result<(), InfoError> {
    if value.abs() > bound + STOCHASTIC_TOL {
        return Err(InfoError::ExpectationBoundBreach { name, value, bound });
    }
    Ok(())
}

fn outer_row(row1: &[f64], row2: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(row1.len() * row2.len());
    for &p1 in row1 {
        for &p2 in row2 {
            out.push(p1 * p2);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("t{i}")).collect()
    }

    fn obs(rows: &[&[f64]]) -> GeneralizedObservable {
        GeneralizedObservable::new(
            OutcomeSet::pm_one(),
            rows.iter().map(|r| r.to_vec()).collect(),
        )
        .unwrap()
    }

    #[test]
    fn state_constructor_validates_and_normalizes() {
        let s = InformationState::new(labels(2), &[0.5, 0.5 + 4e-10]).unwrap();
        assert!((s.weights().iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert!(matches!(
            InformationState::new(labels(2), &[0.7, 0.1]),
            Err(InfoError::NotNormalized { .. })
        ));
        assert!(matches!(
            InformationState::new(labels(2), &[1.2, -0.2]),
            Err(InfoError::NotAProbability { .. })
        ));
        assert_eq!(
            InformationState::new(labels(3), &[0.5, 0.0, 0.5])
                .unwrap()
                .support(),
            vec![0, 2]
        );
    }

    #[test]
    fn outcome_set_enforces_bound() {
        assert!(matches!(
            OutcomeSet::new(vec![2.0], 1.0),
            Err(InfoError::OutcomeOutOfBound { .. })
        ));
        assert!(matches!(
            OutcomeSet::new(vec![0.5], 0.0),
            Err(InfoError::InvalidBound { .. })
        ));
        let set = OutcomeSet::new(vec![0.25, -0.75], 1.0).unwrap();
        assert_eq!(set.index_of(-0.75), Some(1));
        assert_eq!(set.index_of(0.5), None);
    }

    #[test]
    fn image_single_point_puts_mass_on_the_pair() {
        let j = JointObservable::image(OutcomeSet::pm_one(), OutcomeSet::pm_one(), &[1.0], &[-1.0])
            .unwrap();
        // Column order is lambda-1 major over values [+1, -1].
        assert_eq!(j.row(0), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn image_rejects_values_outside_outcome_set() {
        assert!(matches!(
            JointObservable::image(OutcomeSet::pm_one(), OutcomeSet::pm_one(), &[0.5], &[1.0]),
            Err(InfoError::ValueNotInOutcomeSet { .. })
        ));
    }

    #[test]
    fn perfectly_correlated_image_has_unit_product_expectation() {
        let f = [1.0, -1.0];
        let j = JointObservable::image(OutcomeSet::pm_one(), OutcomeSet::pm_one(), &f, &f).unwrap();
        let state = InformationState::uniform(labels(2)).unwrap();
        let e = j.expectation_values(&state).unwrap();
        assert!((e.e12 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn image_expectation_matches_direct_summation() {
        let f1 = [1.0, -1.0, -1.0, 1.0];
        let f2 = [-1.0, -1.0, 1.0, 1.0];
        let pi = [0.1, 0.2, 0.3, 0.4];
        let j =
            JointObservable::image(OutcomeSet::pm_one(), OutcomeSet::pm_one(), &f1, &f2).unwrap();
        let state = InformationState::new(labels(4), &pi).unwrap();
        let e = j.expectation_values(&state).unwrap();
        let oracle: f64 = (0..4).map(|t| pi[t] * f1[t] * f2[t]).sum();
        assert!((e.e12 - oracle).abs() < 1e-15);
        for t in 0..4 {
            assert!((e.f_joint[t] - f1[t] * f2[t]).abs() < 1e-15);
        }
    }

    #[test]
    fn product_of_deterministic_kernels_equals_image() {
        let f1 = [1.0, -1.0];
        let f2 = [-1.0, -1.0];
        let p1 = GeneralizedObservable::deterministic(OutcomeSet::pm_one(), &f1).unwrap();
        let p2 = GeneralizedObservable::deterministic(OutcomeSet::pm_one(), &f2).unwrap();
        let product = JointObservable::product(&p1, &p2).unwrap();
        let image =
            JointObservable::image(OutcomeSet::pm_one(), OutcomeSet::pm_one(), &f1, &f2).unwrap();
        assert_eq!(product.kernel(), image.kernel());
    }

    #[test]
    fn product_joint_rows_are_outer_products() {
        let p1 = obs(&[&[0.3, 0.7], &[0.9, 0.1]]);
        let p2 = obs(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let j = JointObservable::product(&p1, &p2).unwrap();
        // Hand multiplication for theta = 1.
        let expected = [0.9 * 0.25, 0.9 * 0.75, 0.1 * 0.25, 0.1 * 0.75];
        for (a, b) in j.row(1).iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn product_rejects_theta_mismatch() {
        let p1 = obs(&[&[0.3, 0.7]]);
        let p2 = obs(&[&[0.5, 0.5], &[0.25, 0.75]]);
        assert!(matches!(
            JointObservable::product(&p1, &p2),
            Err(InfoError::ThetaMismatch { .. })
        ));
    }

    #[test]
    fn marginals_recover_product_factors() {
        let p1 = obs(&[&[0.3, 0.7], &[0.9, 0.1]]);
        let p2 = obs(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let j = JointObservable::product(&p1, &p2).unwrap();
        let m1 = j.marginal(Side::One);
        let m2 = j.marginal(Side::Two);
        for theta in 0..2 {
            for k in 0..2 {
                assert!((m1.row(theta)[k] - p1.row(theta)[k]).abs() < 1e-12);
                assert!((m2.row(theta)[k] - p2.row(theta)[k]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn marginal_of_image_is_deterministic_in_the_projected_function() {
        let f1 = [1.0, -1.0];
        let f2 = [-1.0, 1.0];
        let j =
            JointObservable::image(OutcomeSet::pm_one(), OutcomeSet::pm_one(), &f1, &f2).unwrap();
        let expected = GeneralizedObservable::deterministic(OutcomeSet::pm_one(), &f2).unwrap();
        assert_eq!(j.marginal(Side::Two).kernel(), expected.kernel());
    }

    #[test]
    fn factorizable_single_component_equals_product() {
        let p1 = obs(&[&[0.3, 0.7], &[0.9, 0.1]]);
        let p2 = obs(&[&[0.5, 0.5], &[0.25, 0.75]]);
        let f = JointObservable::factorizable(&[(p1.clone(), p2.clone())], &[1.0]).unwrap();
        let product = JointObservable::product(&p1, &p2).unwrap();
        for theta in 0..2 {
            for (a, b) in f.row(theta).iter().zip(product.row(theta)) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn factorizable_mixture_averages_product_kernels() {
        let p1a = obs(&[&[0.3, 0.7]]);
        let p2a = obs(&[&[0.5, 0.5]]);
        let p1b = obs(&[&[0.8, 0.2]]);
        let p2b = obs(&[&[0.1, 0.9]]);
        let f = JointObservable::factorizable(
            &[(p1a.clone(), p2a.clone()), (p1b.clone(), p2b.clone())],
            &[0.5, 0.5],
        )
        .unwrap();
        let ja = JointObservable::product(&p1a, &p2a).unwrap();
        let jb = JointObservable::product(&p1b, &p2b).unwrap();
        for ((x, a), b) in f.row(0).iter().zip(ja.row(0)).zip(jb.row(0)) {
            assert!((x - 0.5 * (a + b)).abs() < 1e-15);
        }
        // Two equal components collapse to either product.
        let same = JointObservable::factorizable(
            &[(p1a.clone(), p2a.clone()), (p1a.clone(), p2a.clone())],
            &[0.4, 0.6],
        )
        .unwrap();
        for (x, a) in same.row(0).iter().zip(ja.row(0)) {
            assert!((x - a).abs() < 1e-15);
        }
    }

    #[test]
    fn factorizable_marginal_mixes_component_marginals() {
        let p1a = obs(&[&[0.3, 0.7]]);
        let p2a = obs(&[&[0.5, 0.5]]);
        let p1b = obs(&[&[0.8, 0.2]]);
        let p2b = obs(&[&[0.1, 0.9]]);
        let f =
            JointObservable::factorizable(&[(p1a.clone(), p2a), (p1b.clone(), p2b)], &[0.25, 0.75])
                .unwrap();
        let m1 = f.marginal(Side::One);
        for k in 0..2 {
            let oracle = 0.25 * p1a.row(0)[k] + 0.75 * p1b.row(0)[k];
            assert!((m1.row(0)[k] - oracle).abs() < 1e-12);
        }
    }

    #[test]
    fn factorizable_validates_weights_and_shapes() {
        let p1 = obs(&[&[0.3, 0.7]]);
        let p2 = obs(&[&[0.5, 0.5]]);
        assert!(matches!(
            JointObservable::factorizable(&[(p1.clone(), p2.clone())], &[0.8]),
            Err(InfoError::NotNormalized { .. })
        ));
        let mismatched = obs(&[&[0.5, 0.5], &[0.5, 0.5]]);
        assert!(matches!(
            JointObservable::factorizable(
                &[(p1.clone(), p2.clone()), (p1, mismatched)],
                &[0.5, 0.5]
            ),
            Err(InfoError::ThetaMismatch { .. })
        ));
    }

    #[test]
    fn off_support_rows_are_kept_verbatim() {
        let p1 = obs(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let p2 = obs(&[&[1.0, 0.0], &[1.0, 0.0]]);
        let off = vec![vec![0.25, 0.25, 0.25, 0.25]];
        let f = JointObservable::factorizable_on(&[(p1, p2)], &[1.0], &[0], Some(off)).unwrap();
        assert_eq!(f.row(0), &[1.0, 0.0, 0.0, 0.0]);
        assert_eq!(f.row(1), &[0.25, 0.25, 0.25, 0.25]);
        let state_on = InformationState::new(labels(2), &[1.0, 0.0]).unwrap();
        let state_off = InformationState::new(labels(2), &[0.5, 0.5]).unwrap();
        assert!(f.provenance_covers_support(&state_on));
        assert!(!f.provenance_covers_support(&state_off));
    }

    #[test]
    fn trivial_observable_distribution_ignores_the_state() {
        let mu0 = [0.3, 0.7];
        let g = GeneralizedObservable::trivial(OutcomeSet::pm_one(), &mu0, 3).unwrap();
        for pi in [[1.0, 0.0, 0.0], [0.2, 0.5, 0.3]] {
            let state = InformationState::new(labels(3), &pi).unwrap();
            let mu = g.outcome_distribution(&state).unwrap();
            assert!((mu[0] - 0.3).abs() < 1e-15 && (mu[1] - 0.7).abs() < 1e-15);
        }
    }

    #[test]
    fn outcome_distribution_examples() {
        let g = GeneralizedObservable::deterministic(OutcomeSet::pm_one(), &[1.0, -1.0]).unwrap();
        let state = InformationState::uniform(labels(2)).unwrap();
        assert_eq!(g.outcome_distribution(&state).unwrap(), vec![0.5, 0.5]);

        let g = obs(&[&[0.2, 0.8], &[0.6, 0.4]]);
        let state = InformationState::new(labels(2), &[0.25, 0.75]).unwrap();
        let mu = g.outcome_distribution(&state).unwrap();
        assert!((mu[0] - 0.5).abs() < 1e-15 && (mu[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn outcome_distribution_rejects_theta_mismatch() {
        let g = obs(&[&[0.2, 0.8]]);
        let state = InformationState::uniform(labels(2)).unwrap();
        assert!(matches!(
            g.outcome_distribution(&state),
            Err(InfoError::ThetaMismatch { .. })
        ));
    }

    #[test]
    fn independent_constant_rows_factorize_the_expectation() {
        let mu1 = [0.3, 0.7];
        let mu2 = [0.6, 0.4];
        let row: Vec<f64> = mu1
            .iter()
            .flat_map(|&a| mu2.iter().map(move |&b| a * b))
            .collect();
        let j = JointObservable::opaque(
            OutcomeSet::pm_one(),
            OutcomeSet::pm_one(),
            vec![row.clone(), row],
        )
        .unwrap();
        let state = InformationState::new(labels(2), &[0.35, 0.65]).unwrap();
        let e = j.expectation_values(&state).unwrap();
        assert!((e.e12 - e.e1 * e.e2).abs() < 1e-12);
    }

    #[test]
    fn product_expectation_matches_double_summation_oracle() {
        let p1 = obs(&[&[0.2, 0.8], &[0.5, 0.5], &[0.9, 0.1]]);
        let p2 = obs(&[&[0.6, 0.4], &[0.3, 0.7], &[0.4, 0.6]]);
        let pi = [0.2, 0.5, 0.3];
        let j = JointObservable::product(&p1, &p2).unwrap();
        let state = InformationState::new(labels(3), &pi).unwrap();
        let e = j.expectation_values(&state).unwrap();
        let oracle: f64 = (0..3)
            .map(|t| pi[t] * p1.mean_value(t) * p2.mean_value(t))
            .sum();
        assert!((e.e12 - oracle).abs() < 1e-14);
        // Product observables factor the per-point mean of the product.
        for t in 0..3 {
            assert!((e.f_joint[t] - e.f1[t] * e.f2[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn general_pair_bound_examples() {
        let r = general_pair_bound(0.0, 0.0, 1.0, 1.0, Sign::Plus, 1e-9).unwrap();
        assert!(r.satisfied && (r.rhs - 1.0).abs() < 1e-15);

        let r = general_pair_bound(1.0, -1.0, 1.0, 1.0, Sign::Minus, 1e-9).unwrap();
        assert!(r.satisfied);
        assert!(r.margin.abs() < 1e-15);

        let r = general_pair_bound(0.6, -0.2, 1.0, 1.0, Sign::Minus, 1e-9).unwrap();
        assert!((r.lhs - 0.8).abs() < 1e-15);
        assert!((r.rhs - 1.12).abs() < 1e-15);
        assert!(r.satisfied);

        assert!(matches!(
            general_pair_bound(1.5, 0.0, 1.0, 1.0, Sign::Plus, 1e-9),
            Err(InfoError::PairBoundPrecondition { .. })
        ));
    }

    proptest! {
        /// Mixing two states mixes the outcome distributions affinely.
        #[test]
        fn outcome_distribution_is_affine_in_the_state(
            raw_a in proptest::collection::vec(0.05f64..1.0, 3),
            raw_b in proptest::collection::vec(0.05f64..1.0, 3),
            raw_rows in proptest::collection::vec(proptest::collection::vec(0.05f64..1.0, 4), 3),
            t in 0.0f64..1.0,
        ) {
            let norm = |v: &[f64]| -> Vec<f64> {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            };
            let pi_a = norm(&raw_a);
            let pi_b = norm(&raw_b);
            let rows: Vec<Vec<f64>> = raw_rows.iter().map(|r| norm(r)).collect();
            let j = JointObservable::opaque(OutcomeSet::pm_one(), OutcomeSet::pm_one(), rows)
                .unwrap();
            let mixed: Vec<f64> = pi_a
                .iter()
                .zip(&pi_b)
                .map(|(a, b)| t * a + (1.0 - t) * b)
                .collect();
            let sa = InformationState::new(labels(3), &pi_a).unwrap();
            let sb = InformationState::new(labels(3), &pi_b).unwrap();
            let sm = InformationState::new(labels(3), &mixed).unwrap();
            let da = j.outcome_distribution(&sa).unwrap();
            let db = j.outcome_distribution(&sb).unwrap();
            let dm = j.outcome_distribution(&sm).unwrap();
            for i in 0..dm.len() {
                prop_assert!((dm[i] - (t * da[i] + (1.0 - t) * db[i])).abs() < 1e-9);
            }
        }

        /// Every constructed joint observable has stochastic marginals and
        /// bounded expectations.
        #[test]
        fn marginals_are_stochastic_and_expectations_bounded(
            raw_rows in proptest::collection::vec(proptest::collection::vec(0.01f64..1.0, 6), 4),
            raw_pi in proptest::collection::vec(0.05f64..1.0, 4),
        ) {
            let norm = |v: &[f64]| -> Vec<f64> {
                let s: f64 = v.iter().sum();
                v.iter().map(|x| x / s).collect()
            };
            let rows: Vec<Vec<f64>> = raw_rows.iter().map(|r| norm(r)).collect();
            let o1 = OutcomeSet::new(vec![1.0, -0.5, 0.25], 1.0).unwrap();
            let j = JointObservable::opaque(o1, OutcomeSet::pm_one(), rows).unwrap();
            for side in [Side::One, Side::Two] {
                let m = j.marginal(side);
                for theta in 0..m.theta_count() {
                    let sum: f64 = m.row(theta).iter().sum();
                    prop_assert!((sum - 1.0).abs() < 1e-9);
                }
            }
            let state = InformationState::new(labels(4), &norm(&raw_pi)).unwrap();
            let e = j.expectation_values(&state).unwrap();
            prop_assert!(e.e1.abs() <= 1.0 + 1e-9);
            prop_assert!(e.e2.abs() <= 1.0 + 1e-9);
            prop_assert!(e.e12.abs() <= 1.0 + 1e-9);
        }
    }
}
