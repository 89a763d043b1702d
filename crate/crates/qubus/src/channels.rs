//! Closed-form superoperators for the dispersive qubit–probe coupling.
//!
//! The model is `H = -chi * a†a * Λ` with probe amplitude damping at rate
//! `gamma`. Four elementary operations suffice to express every sequence in
//! this crate: unconditional/conditional displacements, conditional
//! rotations, pure loss segments, and the lossy interaction itself. Each one
//! maps the branch representation of [`HybridState`] to itself exactly, so a
//! sequence of steps is evaluated with no integrator in the loop.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{QubusError, Result};
use crate::state::{overlap_exponent, HybridState, STRUCT_TOL};

/// Below this, `gamma` is treated as exactly zero and the interaction is the
/// unitary conditional rotation (the closed form divides by `gamma`).
const GAMMA_FLOOR: f64 = 1e-300;

/// Which coupling operator `Λ` enters `H = -chi a†a Λ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LambdaKind {
    /// `Λ = Z` on the interaction's target qubit. Engine steps require this
    /// kind; scalar coherence formulas evaluate it on the off-diagonal
    /// eigenvalue pair (+1, -1).
    PauliZ,
    /// Explicit integer eigenvalue pair `(λ_n, λ_m)` for scalar evaluation
    /// of `ζ_{nm}` — e.g. Fock labels when `Λ` is the number operator.
    Pair(i32, i32),
}

impl LambdaKind {
    /// Eigenvalue pair `(λ_n, λ_m)` used by the scalar formulas.
    pub fn eigenvalues(self) -> (f64, f64) {
        match self {
            LambdaKind::PauliZ => (1.0, -1.0),
            LambdaKind::Pair(n, m) => (n as f64, m as f64),
        }
    }

    pub fn delta(self) -> f64 {
        let (n, m) = self.eigenvalues();
        n - m
    }
}

/// Parameters of one dispersive interaction window.
#[derive(Clone, Copy, Debug)]
pub struct CouplingSpec {
    /// Coupling strength (rad / time).
    pub chi: f64,
    /// Probe amplitude damping rate (1 / time).
    pub gamma: f64,
    /// Duration (time).
    pub t: f64,
    pub lambda: LambdaKind,
}

impl CouplingSpec {
    pub fn pauli_z(chi: f64, gamma: f64, t: f64) -> Self {
        Self { chi, gamma, t, lambda: LambdaKind::PauliZ }
    }

    pub fn pair(chi: f64, gamma: f64, t: f64, n: i32, m: i32) -> Self {
        Self { chi, gamma, t, lambda: LambdaKind::Pair(n, m) }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.chi.is_finite() {
            return Err(QubusError::InvalidParameter(format!(
                "coupling chi must be finite, got {}",
                self.chi
            )));
        }
        if !self.gamma.is_finite() || self.gamma < 0.0 {
            return Err(QubusError::InvalidParameter(format!(
                "damping rate gamma must be finite and nonnegative, got {}",
                self.gamma
            )));
        }
        if !self.t.is_finite() || self.t < 0.0 {
            return Err(QubusError::InvalidParameter(format!(
                "duration t must be finite and nonnegative, got {}",
                self.t
            )));
        }
        Ok(())
    }
}

/// Exponent `f_{nm}` with `ζ_{nm} = exp(f_{nm})`, for a common probe
/// amplitude `alpha` on both sides of the dyad.
///
/// Evaluating in the exponent and exponentiating once is deliberate:
/// `|alpha|^2` can reach 1e8 and the cancellation between the two terms must
/// happen before `exp`. The two terms are arranged so they cancel *exactly*
/// when `λ_n = λ_m` or `gamma = 0`, making `ζ_{nn} = 1` an identity rather
/// than an approximation.
fn coherence_exponent_common(alpha: Complex64, spec: &CouplingSpec) -> Complex64 {
    let (ln, lm) = spec.lambda.eigenvalues();
    if spec.gamma < GAMMA_FLOOR {
        return Complex64::new(0.0, 0.0);
    }
    let a2 = alpha.norm_sqr();
    let delta = ln - lm;
    let m2gt = -2.0 * spec.gamma * spec.t;
    let q = 1.0 - m2gt.exp();
    let w = Complex64::new(m2gt, delta * spec.chi * spec.t);
    let denom = Complex64::new(1.0, -delta * spec.chi / (2.0 * spec.gamma));
    let decay = (Complex64::new(1.0, 0.0) - w.exp()) / denom;
    Complex64::new(-a2 * q, 0.0) + decay * a2
}

/// Coherence parameter
/// `ζ_{nm} = exp[-|α|²(1 - e^{-2γt} - (1 - e^{(-2γ + iΔχ)t})/(1 - iΔχ/2γ))]`
/// with `Δ = λ_n - λ_m`: the factor a lossy interaction window applies to
/// the `(n, m)` dyad of the signal.
///
/// `ζ_{nn} = 1` and the lossless value are exact, and `ζ_{nm} = conj(ζ_{mn})`
/// holds bitwise.
pub fn coherence_parameter(alpha: Complex64, spec: &CouplingSpec) -> Result<Complex64> {
    spec.validate()?;
    Ok(coherence_exponent_common(alpha, spec).exp())
}

/// Long-time floor of the coherence modulus,
/// `|ζ|_∞ = exp[-|α|²Δ²/(4(γ/χ)² + Δ²)]`.
///
/// Unlike plain dephasing, the lossy dispersive channel does not erase
/// coherence completely: the probe decays toward vacuum faster than it can
/// keep distinguishing the signal branches.
pub fn coherence_limit(alpha: Complex64, gamma_over_chi: f64, delta: f64) -> Result<f64> {
    if gamma_over_chi <= 0.0 || !gamma_over_chi.is_finite() {
        return Err(QubusError::InvalidParameter(format!(
            "gamma/chi must be positive and finite, got {gamma_over_chi}"
        )));
    }
    let d2 = delta * delta;
    Ok((-alpha.norm_sqr() * d2 / (4.0 * gamma_over_chi * gamma_over_chi + d2)).exp())
}

/// Splits the coherence exponent `f_{nm}` into its real part (decay of the
/// off-diagonal dyads) and imaginary part (a deterministic single-qubit
/// phase), for the `Λ = Z` coupling.
///
/// `exp(Re + i·Im)` reproduces [`coherence_parameter`] to 1e-12; the real
/// part tends to the `coherence_limit` exponent as `t → ∞`.
pub fn coherence_split(alpha: Complex64, spec: &CouplingSpec) -> Result<(f64, f64)> {
    spec.validate()?;
    let (ln, lm) = spec.lambda.eigenvalues();
    if ln.abs() != 1.0 || lm.abs() != 1.0 {
        return Err(QubusError::InvalidParameter(format!(
            "decay/phase split is defined for Z eigenvalues ±1, got ({ln}, {lm})"
        )));
    }
    let (chi, gamma, t) = (spec.chi, spec.gamma, spec.t);
    let g2c2 = gamma * gamma + chi * chi;
    if g2c2 == 0.0 {
        return Ok((0.0, 0.0));
    }
    let a2 = alpha.norm_sqr();
    let e2 = (-2.0 * gamma * t).exp();
    let sin_ct = (chi * t).sin();
    let sin_2ct = (2.0 * chi * t).sin();
    let cos_2ct = (2.0 * chi * t).cos();
    let re = -(a2 / (2.0 * g2c2))
        * (chi * chi * (1.0 - e2) - 2.0 * gamma * gamma * e2 * sin_ct * sin_ct
            - chi * gamma * e2 * sin_2ct)
        * (1.0 - ln * lm);
    let im = (gamma * a2 / (2.0 * g2c2))
        * (chi * (1.0 - e2 * cos_2ct) - gamma * e2 * sin_2ct)
        * (ln - lm);
    Ok((re, im))
}

/// One elementary operation on the joint state.
#[derive(Clone, Copy, Debug)]
pub enum Step {
    /// `D(βZ_target)`, or the unconditional `D(β)` when `target` is `None`.
    Displace { target: Option<usize>, beta: Complex64 },
    /// Conditional rotation `R(θ Z_target) = exp(iθ a†a Z_target)`.
    Rotate { target: usize, theta: f64 },
    /// Pure damping segment with amplitude factor `e^{-l}`.
    Loss { l: f64 },
    /// Lossy dispersive interaction window on `target` (requires `Λ = Z`).
    Interact { target: usize, spec: CouplingSpec },
}

impl Step {
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        let check_target = |target: usize| {
            if target >= n_qubits {
                Err(QubusError::TargetOutOfRange { target, n_qubits })
            } else {
                Ok(())
            }
        };
        match *self {
            Step::Displace { target, beta } => {
                if !beta.re.is_finite() || !beta.im.is_finite() {
                    return Err(QubusError::InvalidParameter(format!(
                        "displacement amplitude must be finite, got {beta}"
                    )));
                }
                target.map_or(Ok(()), check_target)
            }
            Step::Rotate { target, theta } => {
                if !theta.is_finite() {
                    return Err(QubusError::InvalidParameter(format!(
                        "rotation angle must be finite, got {theta}"
                    )));
                }
                check_target(target)
            }
            Step::Loss { l } => {
                if !l.is_finite() || l < 0.0 {
                    return Err(QubusError::InvalidParameter(format!(
                        "loss parameter must be finite and nonnegative, got {l}"
                    )));
                }
                Ok(())
            }
            Step::Interact { target, spec } => {
                spec.validate()?;
                if spec.lambda != LambdaKind::PauliZ {
                    return Err(QubusError::InvalidParameter(
                        "interaction steps act with Z on the target; eigenvalue pairs are for scalar evaluation only".into(),
                    ));
                }
                check_target(target)
            }
        }
    }
}

/// An ordered list of steps, applied left to right.
#[derive(Clone, Debug, Default)]
pub struct SequenceSpec {
    pub steps: Vec<Step>,
}

impl SequenceSpec {
    pub fn new(steps: Vec<Step>) -> Self {
        Self { steps }
    }

    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        for (index, step) in self.steps.iter().enumerate() {
            step.validate(n_qubits).map_err(|e| QubusError::InvalidStep {
                index,
                source: Box::new(e),
            })?;
        }
        Ok(())
    }
}

/// Displacement `D(βZ)` (or unconditional `D(β)`): shifts each branch
/// amplitude by `β z` and applies the composition phase
/// `e^{i Im(conj(amp)·βz)}` per side. The two sides enter as a difference,
/// so diagonal branches pick up no phase at all.
pub fn apply_displacement(
    mut state: HybridState,
    beta: Complex64,
    target: Option<usize>,
) -> Result<HybridState> {
    Step::Displace { target, beta }.validate(state.n_qubits())?;
    let n = state.n_qubits();
    for b in state.branches_mut() {
        let zk = target.map_or(1.0, |q| b.ket.z(q, n));
        let zb = target.map_or(1.0, |q| b.bra.z(q, n));
        let angle = zk * (b.ket_amp.conj() * beta).im - zb * (b.bra_amp.conj() * beta).im;
        b.coeff *= Complex64::cis(angle);
        b.ket_amp += beta * zk;
        b.bra_amp += beta * zb;
    }
    Ok(state)
}

/// Conditional rotation `R(θZ)`: each side's amplitude rotates by `e^{iθz}`;
/// coefficients are untouched.
pub fn apply_rotation(mut state: HybridState, theta: f64, target: usize) -> Result<HybridState> {
    Step::Rotate { target, theta }.validate(state.n_qubits())?;
    let n = state.n_qubits();
    for b in state.branches_mut() {
        b.ket_amp *= Complex64::cis(theta * b.ket.z(target, n));
        b.bra_amp *= Complex64::cis(theta * b.bra.z(target, n));
    }
    Ok(state)
}

/// Pure loss: `|A><B| → <B|A>^η |Ae^{-l}><Be^{-l}|` with `η = 1 - e^{-2l}`,
/// the overlap taken at the pre-damping amplitudes.
pub fn apply_loss(mut state: HybridState, l: f64) -> Result<HybridState> {
    Step::Loss { l }.validate(state.n_qubits())?;
    let eta = -(-2.0 * l).exp_m1();
    let damp = (-l).exp();
    for b in state.branches_mut() {
        b.coeff *= (overlap_exponent(b.ket_amp, b.bra_amp) * eta).exp();
        b.ket_amp *= damp;
        b.bra_amp *= damp;
    }
    Ok(state)
}

/// Lossy dispersive interaction on `target` for a window `(chi, gamma, t)`:
/// multiplies each branch coefficient by the coherence factor for its pair
/// of Z values and damps/rotates the amplitudes by `e^{(-γ + izχ)t}`.
///
/// The coefficient uses the dyad form of the exponent,
/// `-(|A|² + |B|²)/2 · (1 - e^{-2γt}) + A·conj(B) (1 - e^{(-2γ+iΔχ)t})/(1 - iΔχ/2γ)`,
/// which reduces to the common-amplitude coherence parameter when `A = B`
/// and stays exact when earlier rotations have left the two sides with
/// different phases. Branches are still required to carry equal moduli —
/// true for every sequence this crate builds — as a guard against states
/// this closed form was never checked against.
pub fn apply_interaction(
    mut state: HybridState,
    spec: &CouplingSpec,
    target: usize,
) -> Result<HybridState> {
    Step::Interact { target, spec: *spec }.validate(state.n_qubits())?;
    for b in state.branches() {
        if (b.ket_amp.norm() - b.bra_amp.norm()).abs() > STRUCT_TOL {
            return Err(QubusError::InvalidState(format!(
                "branch ({}, {}) carries amplitudes of unequal modulus ({} vs {}); \
                 the interaction closed form is not validated there",
                b.ket.index(),
                b.bra.index(),
                b.ket_amp.norm(),
                b.bra_amp.norm()
            )));
        }
    }
    let n = state.n_qubits();
    let lossless = spec.gamma < GAMMA_FLOOR;
    let m2gt = -2.0 * spec.gamma * spec.t;
    let q = 1.0 - m2gt.exp();
    for b in state.branches_mut() {
        let zk = b.ket.z(target, n);
        let zb = b.bra.z(target, n);
        if !lossless {
            let delta = zk - zb;
            let w = Complex64::new(m2gt, delta * spec.chi * spec.t);
            let denom = Complex64::new(1.0, -delta * spec.chi / (2.0 * spec.gamma));
            let decay = (Complex64::new(1.0, 0.0) - w.exp()) / denom;
            let expo = Complex64::new(
                -0.5 * (b.ket_amp.norm_sqr() + b.bra_amp.norm_sqr()) * q,
                0.0,
            ) + b.ket_amp * b.bra_amp.conj() * decay;
            b.coeff *= expo.exp();
        }
        b.ket_amp *= Complex64::new(-spec.gamma * spec.t, zk * spec.chi * spec.t).exp();
        b.bra_amp *= Complex64::new(-spec.gamma * spec.t, zb * spec.chi * spec.t).exp();
    }
    Ok(state)
}

pub fn apply_step(state: HybridState, step: &Step) -> Result<HybridState> {
    match *step {
        Step::Displace { target, beta } => apply_displacement(state, beta, target),
        Step::Rotate { target, theta } => apply_rotation(state, theta, target),
        Step::Loss { l } => apply_loss(state, l),
        Step::Interact { target, spec } => apply_interaction(state, &spec, target),
    }
}

/// Folds the steps over the state left to right. The first failing step
/// aborts the run and reports its position.
pub fn run_sequence(state: HybridState, seq: &SequenceSpec) -> Result<HybridState> {
    seq.steps
        .iter()
        .enumerate()
        .try_fold(state, |st, (index, step)| {
            apply_step(st, step).map_err(|e| QubusError::InvalidStep {
                index,
                source: Box::new(e),
            })
        })
}

/// The phase-flip channel equivalent to elementwise decay `e^{-ε(1 - z_n z_m)}`
/// on a single qubit: keep with probability `(1 + e^{-2ε})/2`, apply `Z`
/// otherwise.
#[derive(Clone, Copy, Debug)]
pub struct PhaseFlipChannel {
    pub epsilon: f64,
    pub p_keep: f64,
    pub p_flip: f64,
}

impl PhaseFlipChannel {
    /// `p_keep ρ + p_flip ZρZ` on a 2x2 density matrix.
    pub fn apply(&self, rho: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
        if rho.shape() != (2, 2) {
            return Err(QubusError::DimensionMismatch(format!(
                "phase-flip channel acts on one qubit (2x2), got {}x{}",
                rho.nrows(),
                rho.ncols()
            )));
        }
        let one = Complex64::new(1.0, 0.0);
        let z = DMatrix::from_diagonal(&DVector::from_vec(vec![one, -one]));
        let flipped = &z * rho * &z;
        Ok(rho * Complex64::new(self.p_keep, 0.0) + flipped * Complex64::new(self.p_flip, 0.0))
    }
}

/// Decomposes a dephasing exponent `ε` into the phase-flip probabilities,
/// `p_flip = (1 - e^{-2ε})/2`.
pub fn phase_flip_decompose(epsilon: f64) -> Result<PhaseFlipChannel> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(QubusError::InvalidParameter(format!(
            "dephasing exponent must be finite and nonnegative, got {epsilon}"
        )));
    }
    let p_flip = 0.5 * -(-2.0 * epsilon).exp_m1();
    Ok(PhaseFlipChannel {
        epsilon,
        p_keep: 1.0 - p_flip,
        p_flip,
    })
}
