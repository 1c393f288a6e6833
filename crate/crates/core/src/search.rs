//! Numerical bounds on CHSH-form functionals: exhaustive deterministic
//! strategy enumeration, Bell-operator spectral analysis, and measurement
//! setting optimization for a fixed two-qubit state.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inequalities::{bell_operator, ChshCoefficients, IneqError};
use crate::linalg::{hermitian_eigen, tensor_product, ComplexMatrix, LinalgError};
use crate::quantum::{bloch_operator, DensityOperator, PovMeasure, QuantumError};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("Bloch vector must be unit length, got norm {norm}")]
    NonUnitBloch { norm: f64 },

    #[error("visibility must lie in [0, 1], got {value}")]
    InvalidVisibility { value: f64 },

    #[error("setting search supports two-qubit states only, got dimension {dim}")]
    UnsupportedDimension { dim: usize },

    #[error(transparent)]
    Linalg(#[from] LinalgError),

    #[error(transparent)]
    Quantum(#[from] QuantumError),

    #[error(transparent)]
    Ineq(#[from] IneqError),
}

/// A qubit measurement direction with optional depolarizing visibility.
/// Built through [`QubitSetting::new`] so the unit-norm invariant holds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QubitSetting {
    pub bloch: [f64; 3],
    pub visibility: f64,
}

impl QubitSetting {
    pub fn new(bloch: [f64; 3], visibility: f64) -> Result<Self, SearchError> {
        let norm = (bloch[0] * bloch[0] + bloch[1] * bloch[1] + bloch[2] * bloch[2]).sqrt();
        if !norm.is_finite() || (norm - 1.0).abs() > 1e-12 {
            return Err(SearchError::NonUnitBloch { norm });
        }
        if !(0.0..=1.0).contains(&visibility) {
            return Err(SearchError::InvalidVisibility { value: visibility });
        }
        Ok(Self { bloch, visibility })
    }

    /// Unit direction from polar angle theta (from +z) and azimuth phi.
    pub fn from_angles(theta: f64, phi: f64) -> Self {
        Self {
            bloch: [
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ],
            visibility: 1.0,
        }
    }
}

/// Two-outcome qubit POV {(I + v n.sigma)/2, (I - v n.sigma)/2} with values
/// {+1, -1}; projective when v = 1.
pub fn qubit_projective_pov(setting: &QubitSetting) -> Result<PovMeasure, SearchError> {
    QubitSetting::new(setting.bloch, setting.visibility)?;
    let a = bloch_operator(setting.bloch).scale(setting.visibility);
    let plus = ComplexMatrix::identity(2).add(&a)?.scale(0.5);
    let minus = ComplexMatrix::identity(2).sub(&a)?.scale(0.5);
    Ok(PovMeasure::new(
        crate::info::OutcomeSet::pm_one(),
        vec![plus, minus],
    )?)
}

/// How a bound was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Enumeration,
    Spectral,
    Seesaw,
}

/// The argmax that realizes a bound.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    /// Deterministic +-1 assignments per setting.
    Strategy { alice: [f64; 2], bob: [f64; 2] },
    /// Extremal state attaining the spectral value, as (re, im) amplitudes.
    Eigenvector { amplitudes: Vec<[f64; 2]> },
    /// Measurement directions found by the setting search.
    Settings {
        alice: [[f64; 3]; 2],
        bob: [[f64; 3]; 2],
    },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BoundResult {
    pub value: f64,
    pub witness: Witness,
    pub method: Method,
}

/// Maximum of |sum_km gamma_km a_k b_m| over the 16 deterministic +-1
/// strategies. With a constraint-satisfying coefficient matrix this never
/// exceeds 2.
pub fn classical_lhv_bound(coeffs: &ChshCoefficients) -> BoundResult {
    let mut best = f64::NEG_INFINITY;
    let mut witness = ([1.0, 1.0], [1.0, 1.0]);
    for code in 0..16u8 {
        let pick = |bit: u8| if code >> bit & 1 == 0 { 1.0 } else { -1.0 };
        let (a1, a2, b1, b2) = (pick(0), pick(1), pick(2), pick(3));
        let value = (coeffs.gamma[0][0] * a1 * b1
            + coeffs.gamma[0][1] * a1 * b2
            + coeffs.gamma[1][0] * a2 * b1
            + coeffs.gamma[1][1] * a2 * b2)
            .abs();
        if value > best {
            best = value;
            witness = ([a1, a2], [b1, b2]);
        }
    }
    BoundResult {
        value: best,
        witness: Witness::Strategy {
            alice: witness.0,
            bob: witness.1,
        },
        method: Method::Enumeration,
    }
}

/// Largest eigenvalue magnitude of the Bell operator for fixed POV settings,
/// maximizing the CHSH-form functional over all states.
pub fn quantum_max_value(
    coeffs: &ChshCoefficients,
    alice: &[&PovMeasure; 2],
    bob: &[&PovMeasure; 2],
) -> Result<BoundResult, SearchError> {
    let operator = bell_operator(coeffs, alice, bob)?;
    let spectrum = hermitian_eigen(&operator)?;
    let dim = spectrum.eigenvalues.len();
    let (index, value) = spectrum
        .eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (i, l.abs()))
        .fold((0, f64::NEG_INFINITY), |acc, item| {
            if item.1 > acc.1 {
                item
            } else {
                acc
            }
        });
    let amplitudes = (0..dim)
        .map(|row| {
            let z = spectrum.eigenvectors.get(row, index);
            [z.re, z.im]
        })
        .collect();
    Ok(BoundResult {
        value,
        witness: Witness::Eigenvector { amplitudes },
        method: Method::Spectral,
    })
}

/// Budget knobs for the setting search.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SearchBudget {
    /// Polar subdivisions of the Bob-direction grid.
    pub polar: usize,
    /// Azimuthal subdivisions of the Bob-direction grid.
    pub azimuthal: usize,
    /// Maximum coordinate-ascent rounds per start.
    pub ascent_rounds: usize,
    /// Extra seeded random starts besides the grid optimum.
    pub restarts: usize,
    /// Stop ascending once a full round gains less than this.
    pub convergence_tol: f64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        Self {
            polar: 12,
            azimuthal: 12,
            ascent_rounds: 200,
            restarts: 4,
            convergence_tol: 1e-10,
        }
    }
}

type Vec3 = [f64; 3];

fn dot(a: Vec3, b: Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: Vec3) -> f64 {
    dot(a, a).sqrt()
}

fn normalize_or(a: Vec3, fallback: Vec3) -> Vec3 {
    let n = norm(a);
    if n < 1e-12 {
        fallback
    } else {
        [a[0] / n, a[1] / n, a[2] / n]
    }
}

/// 3x3 correlation matrix T_ij = tr[rho (sigma_i (x) sigma_j)].
fn correlation_matrix(rho: &DensityOperator) -> Result<[[f64; 3]; 3], SearchError> {
    let paulis = [
        crate::quantum::pauli_x(),
        crate::quantum::pauli_y(),
        crate::quantum::pauli_z(),
    ];
    let mut t = [[0.0; 3]; 3];
    for (i, si) in paulis.iter().enumerate() {
        for (j, sj) in paulis.iter().enumerate() {
            let w = tensor_product(si, sj)?;
            t[i][j] = rho.matrix().matmul(&w)?.trace()?.re;
        }
    }
    Ok(t)
}

fn apply(t: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [
        t[0][0] * v[0] + t[0][1] * v[1] + t[0][2] * v[2],
        t[1][0] * v[0] + t[1][1] * v[1] + t[1][2] * v[2],
        t[2][0] * v[0] + t[2][1] * v[1] + t[2][2] * v[2],
    ]
}

fn apply_transpose(t: &[[f64; 3]; 3], v: Vec3) -> Vec3 {
    [
        t[0][0] * v[0] + t[1][0] * v[1] + t[2][0] * v[2],
        t[0][1] * v[0] + t[1][1] * v[1] + t[2][1] * v[2],
        t[0][2] * v[0] + t[1][2] * v[1] + t[2][2] * v[2],
    ]
}

fn axpy(alpha: f64, x: Vec3, beta: f64, y: Vec3) -> Vec3 {
    [
        alpha * x[0] + beta * y[0],
        alpha * x[1] + beta * y[1],
        alpha * x[2] + beta * y[2],
    ]
}

/// Maximize |sum_km gamma_km <n_ak, T n_bm>| over four unit directions by a
/// Bob-pair grid scan (with Alice closed-form) followed by coordinate ascent.
///
/// Deterministic given the seed; the grid reduction breaks ties toward the
/// lexicographically smallest pair index, so results do not depend on the
/// number of worker threads.
pub fn search_settings(
    rho: &DensityOperator,
    coeffs: &ChshCoefficients,
    budget: &SearchBudget,
    seed: u64,
) -> Result<BoundResult, SearchError> {
    if rho.dim() != 4 {
        return Err(SearchError::UnsupportedDimension { dim: rho.dim() });
    }
    let t = correlation_matrix(rho)?;
    let g = coeffs.gamma;

    // Candidate Bob directions.
    let mut directions: Vec<Vec3> = Vec::with_capacity(budget.polar * budget.azimuthal);
    for i in 0..budget.polar.max(1) {
        let theta =
            std::f64::consts::PI * (2.0 * i as f64 + 1.0) / (2.0 * budget.polar.max(1) as f64);
        for j in 0..budget.azimuthal.max(1) {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / budget.azimuthal.max(1) as f64;
            directions.push([
                theta.sin() * phi.cos(),
                theta.sin() * phi.sin(),
                theta.cos(),
            ]);
        }
    }
    let images: Vec<Vec3> = directions.iter().map(|&d| apply(&t, d)).collect();

    // With Bob fixed, the optimal Alice directions are closed-form and the
    // score is |w1| + |w2|.
    let pair_score = |u1: Vec3, u2: Vec3| -> f64 {
        let w1 = axpy(g[0][0], u1, g[0][1], u2);
        let w2 = axpy(g[1][0], u1, g[1][1], u2);
        norm(w1) + norm(w2)
    };

    let n = directions.len();
    let best_pair = (0..n * n)
        .into_par_iter()
        .map(|code| {
            let (i, j) = (code / n, code % n);
            (pair_score(images[i], images[j]), code)
        })
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| {
                if b.0 > a.0 || (b.0 == a.0 && b.1 < a.1) {
                    b
                } else {
                    a
                }
            },
        );

    let mut starts: Vec<(Vec3, Vec3)> = Vec::with_capacity(1 + budget.restarts);
    if best_pair.1 != usize::MAX {
        starts.push((directions[best_pair.1 / n], directions[best_pair.1 % n]));
    }
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..budget.restarts {
        let mut draw = || -> Vec3 {
            let z: f64 = rng.random_range(-1.0..1.0);
            let phi: f64 = rng.random_range(0.0..2.0 * std::f64::consts::PI);
            let r = (1.0 - z * z).max(0.0).sqrt();
            [r * phi.cos(), r * phi.sin(), z]
        };
        starts.push((draw(), draw()));
    }

    let mut best_value = f64::NEG_INFINITY;
    let mut best_settings = (
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0],
        [0.0, 0.0, 1.0],
    );
    for (nb1_0, nb2_0) in starts {
        let mut nb1 = nb1_0;
        let mut nb2 = nb2_0;
        let mut na1 = normalize_or(
            axpy(g[0][0], apply(&t, nb1), g[0][1], apply(&t, nb2)),
            [0.0, 0.0, 1.0],
        );
        let mut na2 = normalize_or(
            axpy(g[1][0], apply(&t, nb1), g[1][1], apply(&t, nb2)),
            [0.0, 0.0, 1.0],
        );
        let score = |na1: Vec3, na2: Vec3, nb1: Vec3, nb2: Vec3| -> f64 {
            g[0][0] * dot(na1, apply(&t, nb1))
                + g[0][1] * dot(na1, apply(&t, nb2))
                + g[1][0] * dot(na2, apply(&t, nb1))
                + g[1][1] * dot(na2, apply(&t, nb2))
        };
        let mut current = score(na1, na2, nb1, nb2);
        for _ in 0..budget.ascent_rounds {
            na1 = normalize_or(axpy(g[0][0], apply(&t, nb1), g[0][1], apply(&t, nb2)), na1);
            na2 = normalize_or(axpy(g[1][0], apply(&t, nb1), g[1][1], apply(&t, nb2)), na2);
            nb1 = normalize_or(
                axpy(
                    g[0][0],
                    apply_transpose(&t, na1),
                    g[1][0],
                    apply_transpose(&t, na2),
                ),
                nb1,
            );
            nb2 = normalize_or(
                axpy(
                    g[0][1],
                    apply_transpose(&t, na1),
                    g[1][1],
                    apply_transpose(&t, na2),
                ),
                nb2,
            );
            let next = score(na1, na2, nb1, nb2);
            let gain = next - current;
            debug_assert!(gain >= -1e-12, "coordinate ascent must not decrease");
            current = next;
            if gain < budget.convergence_tol {
                break;
            }
        }
        if current > best_value {
            best_value = current;
            best_settings = (na1, na2, nb1, nb2);
        }
    }

    Ok(BoundResult {
        value: best_value.abs(),
        witness: Witness::Settings {
            alice: [best_settings.0, best_settings.1],
            bob: [best_settings.2, best_settings.3],
        },
        method: Method::Seesaw,
    })
}

/// Re-evaluate a settings witness through the full POV / trace pipeline,
/// independent of the Bloch-vector fast path used by the search.
#[allow(clippy::needless_range_loop)]
pub fn evaluate_settings_witness(
    rho: &DensityOperator,
    coeffs: &ChshCoefficients,
    alice: &[[f64; 3]; 2],
    bob: &[[f64; 3]; 2],
) -> Result<f64, SearchError> {
    let pov = |n: [f64; 3]| qubit_projective_pov(&QubitSetting::new(n, 1.0)?);
    let mut total = 0.0;
    for k in 0..2 {
        for m in 0..2 {
            let e = crate::quantum::correlation(rho, &pov(alice[k])?, &pov(bob[m])?, false)?;
            total += coeffs.gamma[k][m] * e;
        }
    }
    Ok(total.abs())
}
