//! Seeded Monte-Carlo sampling of joint measurements and statistical
//! inequality tests on the resulting batches.
//!
//! Sampling is inverse-CDF over explicitly computed finite distributions, so
//! batches are bit-identical for identical (inputs, seed, n).

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inequalities::{ChshCoefficients, IneqError, Sign};
use crate::info::{InfoError, InformationState, JointObservable, Provenance};
use crate::quantum::{DensityOperator, JointPov, QuantumError};

/// Stream split stride: setting k samples with seed `base + k * STRIDE`.
pub const SETTING_STREAM_STRIDE: u64 = 0x9E37_79B9_7F4A_7C15;

/// Seed for the RNG stream of one setting in a multi-setting experiment.
pub fn setting_seed(base: u64, setting_index: u64) -> u64 {
    base.wrapping_add(setting_index.wrapping_mul(SETTING_STREAM_STRIDE))
}

#[derive(Debug, Error)]
pub enum SimError {
    #[error("sample count must be at least 1")]
    InvalidSampleCount,

    #[error(transparent)]
    Info(#[from] InfoError),

    #[error(transparent)]
    Quantum(#[from] QuantumError),

    #[error(transparent)]
    Ineq(#[from] IneqError),
}

/// Accumulated outcome sums of one sampling run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub n: u64,
    pub sum1: f64,
    pub sum2: f64,
    pub sum12: f64,
    pub sumsq1: f64,
    pub sumsq2: f64,
    pub sumsq12: f64,
    pub seed: u64,
}

impl SampleBatch {
    fn empty(seed: u64) -> Self {
        Self {
            n: 0,
            sum1: 0.0,
            sum2: 0.0,
            sum12: 0.0,
            sumsq1: 0.0,
            sumsq2: 0.0,
            sumsq12: 0.0,
            seed,
        }
    }

    fn push(&mut self, lambda1: f64, lambda2: f64) {
        let product = lambda1 * lambda2;
        self.n += 1;
        self.sum1 += lambda1;
        self.sum2 += lambda2;
        self.sum12 += product;
        self.sumsq1 += lambda1 * lambda1;
        self.sumsq2 += lambda2 * lambda2;
        self.sumsq12 += product * product;
    }

    /// An analytic-limit batch whose means equal the supplied expectations
    /// exactly and whose spread is zero.
    pub fn from_exact(n: u64, e1: f64, e2: f64, e12: f64) -> Self {
        let nf = n as f64;
        Self {
            n,
            sum1: nf * e1,
            sum2: nf * e2,
            sum12: nf * e12,
            sumsq1: nf * e1 * e1,
            sumsq2: nf * e2 * e2,
            sumsq12: nf * e12 * e12,
            seed: 0,
        }
    }

    /// Associative accumulator merge; the left seed is kept.
    pub fn merge(&self, other: &Self) -> Self {
        Self {
            n: self.n + other.n,
            sum1: self.sum1 + other.sum1,
            sum2: self.sum2 + other.sum2,
            sum12: self.sum12 + other.sum12,
            sumsq1: self.sumsq1 + other.sumsq1,
            sumsq2: self.sumsq2 + other.sumsq2,
            sumsq12: self.sumsq12 + other.sumsq12,
            seed: self.seed,
        }
    }

    pub fn mean1(&self) -> f64 {
        self.sum1 / self.n as f64
    }

    pub fn mean2(&self) -> f64 {
        self.sum2 / self.n as f64
    }

    pub fn mean12(&self) -> f64 {
        self.sum12 / self.n as f64
    }

    /// Population variance of the product outcomes.
    pub fn variance12(&self) -> f64 {
        let mean = self.mean12();
        (self.sumsq12 / self.n as f64 - mean * mean).max(0.0)
    }

    /// Standard error of the product-outcome mean.
    pub fn standard_error12(&self) -> f64 {
        (self.variance12() / self.n as f64).sqrt()
    }
}

/// Inverse-CDF lookup over a cumulative distribution.
fn sample_index(cdf: &[f64], u: f64) -> usize {
    cdf.partition_point(|&c| c <= u).min(cdf.len() - 1)
}

fn cumulative(probabilities: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    probabilities
        .iter()
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Sample a joint kernel-model measurement.
///
/// Each draw picks theta from the state; factorizable observables then draw
/// a latent component and both outcomes independently from its marginals
/// (on the declared support), anything else draws the outcome pair straight
/// from the kernel row.
pub fn sample_info_joint(
    joint: &JointObservable,
    state: &InformationState,
    n: u64,
    seed: u64,
) -> Result<SampleBatch, SimError> {
    if n == 0 {
        return Err(SimError::InvalidSampleCount);
    }
    if joint.theta_count() != state.len() {
        return Err(InfoError::ThetaMismatch {
            expected: joint.theta_count(),
            found: state.len(),
        }
        .into());
    }

    let theta_cdf = cumulative(state.weights());
    let (out1, out2) = joint.outcomes();
    let n2 = out2.len();
    let row_cdfs: Vec<Vec<f64>> = joint.kernel().iter().map(|r| cumulative(r)).collect();

    // Component-path tables for factorizable provenance.
    struct FactorTables {
        nu_cdf: Vec<f64>,
        // [omega][theta] marginal CDFs per side.
        side1: Vec<Vec<Vec<f64>>>,
        side2: Vec<Vec<Vec<f64>>>,
        on_support: Vec<bool>,
    }
    let factor = match joint.provenance() {
        Provenance::Factorizable {
            nu,
            components,
            support,
        } => {
            let mut on_support = vec![false; joint.theta_count()];
            for &i in support {
                on_support[i] = true;
            }
            Some(FactorTables {
                nu_cdf: cumulative(nu),
                side1: components
                    .iter()
                    .map(|(p1, _)| p1.kernel().iter().map(|r| cumulative(r)).collect())
                    .collect(),
                side2: components
                    .iter()
                    .map(|(_, p2)| p2.kernel().iter().map(|r| cumulative(r)).collect())
                    .collect(),
                on_support,
            })
        }
        _ => None,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = SampleBatch::empty(seed);
    for _ in 0..n {
        let theta = sample_index(&theta_cdf, rng.random::<f64>());
        let (i1, i2) = match &factor {
            Some(tables) if tables.on_support[theta] => {
                let omega = sample_index(&tables.nu_cdf, rng.random::<f64>());
                let i1 = sample_index(&tables.side1[omega][theta], rng.random::<f64>());
                let i2 = sample_index(&tables.side2[omega][theta], rng.random::<f64>());
                (i1, i2)
            }
            _ => {
                let flat = sample_index(&row_cdfs[theta], rng.random::<f64>());
                (flat / n2, flat % n2)
            }
        };
        batch.push(out1.value(i1), out2.value(i2));
    }
    Ok(batch)
}

/// Sample a joint quantum measurement: the full outcome distribution is
/// computed once (validated to sum to 1), then n i.i.d. inverse-CDF draws.
pub fn sample_quantum_joint(
    rho: &DensityOperator,
    joint: &JointPov,
    n: u64,
    seed: u64,
) -> Result<SampleBatch, SimError> {
    if n == 0 {
        return Err(SimError::InvalidSampleCount);
    }
    let distribution = joint.outcome_distribution(rho)?;
    let cdf = cumulative(&distribution);
    let (out1, out2) = joint.outcomes();
    let n2 = out2.len();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut batch = SampleBatch::empty(seed);
    for _ in 0..n {
        let flat = sample_index(&cdf, rng.random::<f64>());
        batch.push(out1.value(flat / n2), out2.value(flat % n2));
    }
    Ok(batch)
}

/// Which inequality to test on empirical correlations.
#[derive(Debug, Clone)]
pub enum StatCheck<'a> {
    /// CHSH-form functional over batches indexed [alice][bob].
    Chsh {
        batches: [[&'a SampleBatch; 2]; 2],
        coeffs: ChshCoefficients,
    },
    /// Three-setting Bell form with the marginal-match sign convention.
    Bell {
        ab1: &'a SampleBatch,
        ab2: &'a SampleBatch,
        b1b2: &'a SampleBatch,
        sign: Sign,
    },
}

/// Statistical test report: the inequality evaluated on empirical
/// correlations, with the margin's standard error from independent-batch
/// error propagation and a z-score for "violation > 0".
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct StatReport {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub standard_error: f64,
    /// (lhs - rhs) / se; `None` when the batches carry no spread.
    pub z_violation: Option<f64>,
    pub n_total: u64,
}

#[allow(clippy::needless_range_loop)]
pub fn test_inequality(check: &StatCheck) -> Result<StatReport, SimError> {
    match check {
        StatCheck::Chsh { batches, coeffs } => {
            let mut functional = 0.0;
            let mut variance = 0.0;
            let mut n_total = 0;
            for k in 0..2 {
                for m in 0..2 {
                    let b = batches[k][m];
                    let g = coeffs.gamma[k][m];
                    functional += g * b.mean12();
                    let se = b.standard_error12();
                    variance += g * g * se * se;
                    n_total += b.n;
                }
            }
            let lhs = functional.abs();
            let rhs = 2.0;
            Ok(stat_report("chsh", lhs, rhs, variance.sqrt(), n_total))
        }
        StatCheck::Bell {
            ab1,
            ab2,
            b1b2,
            sign,
        } => {
            let lhs = (ab1.mean12() - ab2.mean12()).abs();
            let rhs = 1.0 - sign.value() * b1b2.mean12();
            let variance = [ab1, ab2, b1b2]
                .iter()
                .map(|b| {
                    let se = b.standard_error12();
                    se * se
                })
                .sum::<f64>();
            let n_total = ab1.n + ab2.n + b1b2.n;
            Ok(stat_report(
                &format!("bell({})", sign.symbol()),
                lhs,
                rhs,
                variance.sqrt(),
                n_total,
            ))
        }
    }
}

fn stat_report(name: &str, lhs: f64, rhs: f64, se: f64, n_total: u64) -> StatReport {
    let violation = lhs - rhs;
    let z_violation = if se > 0.0 { Some(violation / se) } else { None };
    StatReport {
        name: name.to_string(),
        lhs,
        rhs,
        margin: rhs - lhs,
        standard_error: se,
        z_violation,
        n_total,
    }
}
