//! Gate constants, ±1 observables and projective measurement.
//!
//! Measurements never divide by a vanishing norm: a branch whose
//! conditional probability is below [`IMPOSSIBLE_P`] is either skipped
//! (enumeration) or reported as [`Error::ImpossibleBranch`] (explicit
//! projection).

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::error::{Error, Result};
use crate::qcore::{c, DensityOp, Kron, Operator, QState, ALGEBRAIC_TOL, C64};

/// Conditional probabilities below this are treated as impossible.
pub const IMPOSSIBLE_P: f64 = 1e-14;

/// Pauli σx.
pub fn pauli_x() -> Operator {
    Operator::from_rows(&[vec![c(0., 0.), c(1., 0.)], vec![c(1., 0.), c(0., 0.)]])
        .expect("2x2")
}

/// Pauli σy.
pub fn pauli_y() -> Operator {
    Operator::from_rows(&[vec![c(0., 0.), c(0., -1.)], vec![c(0., 1.), c(0., 0.)]])
        .expect("2x2")
}

/// Pauli σz.
pub fn pauli_z() -> Operator {
    Operator::diag(&[c(1., 0.), c(-1., 0.)])
}

/// The SU(2) NOT tactic `[[0, i], [i, 0]]`.
pub fn not_gate() -> Operator {
    Operator::from_rows(&[vec![c(0., 0.), c(0., 1.)], vec![c(0., 1.), c(0., 0.)]])
        .expect("2x2")
}

/// The SU(2) Hadamard `(i/√2)[[1, 1], [1, −1]]`.
pub fn hadamard() -> Operator {
    let s = FRAC_1_SQRT_2;
    Operator::from_rows(&[vec![c(0., s), c(0., s)], vec![c(0., s), c(0., -s)]]).expect("2x2")
}

/// The Hermitian Hadamard `(1/√2)[[1, 1], [1, −1]]`; equals [`hadamard`]
/// up to the global phase `i`.
pub fn hadamard_std() -> Operator {
    let s = FRAC_1_SQRT_2;
    Operator::from_rows(&[vec![c(s, 0.), c(s, 0.)], vec![c(s, 0.), c(-s, 0.)]]).expect("2x2")
}

/// Phase shift `diag(1, (1+i)/√2)`.
pub fn t_gate() -> Operator {
    Operator::diag(&[c(1., 0.), c(FRAC_1_SQRT_2, FRAC_1_SQRT_2)])
}

pub fn t_inverse() -> Operator {
    Operator::diag(&[c(1., 0.), c(FRAC_1_SQRT_2, -FRAC_1_SQRT_2)])
}

fn proj0() -> Operator {
    Operator::diag(&[c(1., 0.), c(0., 0.)])
}

fn proj1() -> Operator {
    Operator::diag(&[c(0., 0.), c(1., 0.)])
}

/// `|0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ target`.
pub fn controlled(target: &Operator) -> Operator {
    let a = proj0().tensor(&Operator::identity(target.dim())).expect("small");
    let b = proj1().tensor(target).expect("small");
    &a + &b
}

/// The alliance: controlled [`not_gate`].
pub fn cnot_alliance() -> Operator {
    controlled(&not_gate())
}

/// Textbook CNOT with σx on the target.
pub fn cnot_std() -> Operator {
    controlled(&pauli_x())
}

/// Two-valued circuit breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Switch {
    Identity,
    Not,
}

impl Switch {
    pub fn gate(self) -> Operator {
        match self {
            Switch::Identity => Operator::identity(2),
            Switch::Not => not_gate(),
        }
    }

    /// Uniform draw from `{I, NOT}`.
    pub fn sample<R: Rng + ?Sized>(rng: &mut R) -> Self {
        if rng.gen::<bool>() {
            Switch::Not
        } else {
            Switch::Identity
        }
    }
}

/// The fixed gate constants used throughout the crate.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSet {
    pub not: Operator,
    pub h: Operator,
    pub t: Operator,
    pub cnot_alliance: Operator,
}

impl Default for GateSet {
    fn default() -> Self {
        Self {
            not: not_gate(),
            h: hadamard(),
            t: t_gate(),
            cnot_alliance: cnot_alliance(),
        }
    }
}

impl GateSet {
    pub fn breaker(&self, switch: Switch) -> Operator {
        match switch {
            Switch::Identity => Operator::identity(2),
            Switch::Not => self.not.clone(),
        }
    }

    /// `H·M·H⁻¹`.
    pub fn h_conjugate(&self, m: &Operator) -> Operator {
        let h_inv = self.h.adjoint();
        Operator::product(&[&self.h, m, &h_inv]).expect("2x2")
    }
}

/// Outcome of a ±1-valued measurement. `Plus` reports as bit 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub const BOTH: [Sign; 2] = [Sign::Plus, Sign::Minus];

    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }

    pub fn bit(self) -> u8 {
        match self {
            Sign::Plus => 0,
            Sign::Minus => 1,
        }
    }

    pub fn from_bit(bit: u8) -> Self {
        if bit & 1 == 0 {
            Sign::Plus
        } else {
            Sign::Minus
        }
    }

    pub fn times(self, other: Sign) -> Sign {
        Sign::from_bit(self.bit() ^ other.bit())
    }
}

impl fmt::Display for Sign {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sign::Plus => "+1",
            Sign::Minus => "-1",
        })
    }
}

/// Single-qubit observables of the measurement calculus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Named {
    /// σx
    X,
    /// σz
    XPrime,
    /// σy
    XDoublePrime,
    /// (σz + σy)/√2
    G,
}

impl Named {
    pub fn label(self) -> &'static str {
        match self {
            Named::X => "X",
            Named::XPrime => "X'",
            Named::XDoublePrime => "X''",
            Named::G => "G",
        }
    }
}

/// Hermitian involution with its ±1 eigenprojectors.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    label: String,
    matrix: Operator,
    plus: Operator,
    minus: Operator,
}

impl Observable {
    /// Validates `matrix` as a Hermitian involution.
    pub fn from_matrix(label: impl Into<String>, matrix: Operator) -> Result<Self> {
        let herm = matrix.hermitian_deviation();
        if herm > ALGEBRAIC_TOL {
            return Err(Error::NotHermitian { deviation: herm });
        }
        let id = Operator::identity(matrix.dim());
        let inv = (&matrix * &matrix).max_abs_diff(&id);
        if inv > ALGEBRAIC_TOL {
            return Err(Error::NotInvolution { deviation: inv });
        }
        let half = c(0.5, 0.);
        let plus = (&id + &matrix).scale(half);
        let minus = (&id - &matrix).scale(half);
        Ok(Self {
            label: label.into(),
            matrix,
            plus,
            minus,
        })
    }

    pub fn named(name: Named) -> Self {
        let m = match name {
            Named::X => pauli_x(),
            Named::XPrime => pauli_z(),
            Named::XDoublePrime => pauli_y(),
            Named::G => (&pauli_z() + &pauli_y()).scale(c(FRAC_1_SQRT_2, 0.)),
        };
        Self::from_matrix(name.label(), m).expect("named observables are involutions")
    }

    /// `self ⊗ other`, acting on the concatenated target lists.
    pub fn tensor(&self, other: &Observable) -> Result<Self> {
        Self::from_matrix(
            format!("{}⊗{}", self.label, other.label),
            self.matrix.tensor(&other.matrix)?,
        )
    }

    /// `U·M·U†`; eigenprojectors transform the same way.
    pub fn conjugated(&self, u: &Operator, label: impl Into<String>) -> Result<Self> {
        let m = Operator::product(&[u, &self.matrix, &u.adjoint()])?;
        Self::from_matrix(label, m)
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn matrix(&self) -> &Operator {
        &self.matrix
    }

    pub fn projector(&self, sign: Sign) -> &Operator {
        match sign {
            Sign::Plus => &self.plus,
            Sign::Minus => &self.minus,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.matrix.n_qubits().unwrap_or(0)
    }
}

/// `observable(X)`, `observable(G)`, ...
pub fn observable(name: Named) -> Observable {
    Observable::named(name)
}

/// One recorded measurement result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub targets: Vec<usize>,
    pub sign: Sign,
}

/// One measurement trajectory: outcomes so far, their joint probability
/// and the renormalized post-measurement state.
#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    pub state: QState,
}

/// Enumerate every branch, or draw one with Born probabilities.
pub enum Mode<'a> {
    Enumerate,
    Sample(&'a mut dyn RngCore),
}

impl Branch {
    pub fn root(state: QState) -> Self {
        Self {
            outcomes: Vec::new(),
            probability: 1.0,
            state,
        }
    }

    pub fn signs(&self) -> Vec<Sign> {
        self.outcomes.iter().map(|o| o.sign).collect()
    }

    /// Outcome bits, `+1 → 0`, `−1 → 1`.
    pub fn bits(&self) -> String {
        self.outcomes
            .iter()
            .map(|o| if o.sign == Sign::Plus { '0' } else { '1' })
            .collect()
    }

    fn check_width(obs: &Observable, targets: &[usize]) -> Result<()> {
        if obs.n_qubits() != targets.len() {
            return Err(Error::DimensionMismatch {
                expected: 1usize << targets.len(),
                found: obs.matrix().dim(),
            });
        }
        Ok(())
    }

    fn conditional(&self, obs: &Observable, targets: &[usize], sign: Sign) -> Result<(f64, Vec<C64>)> {
        let v = self.state.apply_raw(obs.projector(sign), targets)?;
        let p = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
        Ok((p, v))
    }

    fn extend(&self, obs: &Observable, targets: &[usize], sign: Sign, p: f64, v: Vec<C64>) -> Result<Self> {
        let mut outcomes = self.outcomes.clone();
        outcomes.push(Outcome {
            label: obs.label().to_string(),
            targets: targets.to_vec(),
            sign,
        });
        Ok(Self {
            outcomes,
            probability: self.probability * p,
            state: QState::from_amplitudes(v)?,
        })
    }

    /// Post-selects outcome `sign`.
    pub fn project(&self, obs: &Observable, targets: &[usize], sign: Sign) -> Result<Self> {
        Self::check_width(obs, targets)?;
        let (p, v) = self.conditional(obs, targets, sign)?;
        if p < IMPOSSIBLE_P {
            return Err(Error::ImpossibleBranch {
                outcome: format!("{}={}", obs.label(), sign),
                probability: p,
            });
        }
        self.extend(obs, targets, sign, p, v)
    }

    /// All possible outcomes, `+1` first.
    pub fn measure_all(&self, obs: &Observable, targets: &[usize]) -> Result<Vec<Self>> {
        Self::check_width(obs, targets)?;
        let mut out = Vec::with_capacity(2);
        for sign in Sign::BOTH {
            let (p, v) = self.conditional(obs, targets, sign)?;
            if p >= IMPOSSIBLE_P {
                out.push(self.extend(obs, targets, sign, p, v)?);
            }
        }
        Ok(out)
    }

    pub fn measure_sample(&self, obs: &Observable, targets: &[usize], rng: &mut dyn RngCore) -> Result<Self> {
        Self::check_width(obs, targets)?;
        let (p_plus, v_plus) = self.conditional(obs, targets, Sign::Plus)?;
        let u: f64 = rng.gen();
        if u < p_plus && p_plus >= IMPOSSIBLE_P {
            return self.extend(obs, targets, Sign::Plus, p_plus, v_plus);
        }
        let (p_minus, v_minus) = self.conditional(obs, targets, Sign::Minus)?;
        if p_minus < IMPOSSIBLE_P {
            return self.extend(obs, targets, Sign::Plus, p_plus, v_plus);
        }
        self.extend(obs, targets, Sign::Minus, p_minus, v_minus)
    }

    pub fn measure(&self, obs: &Observable, targets: &[usize], mode: &mut Mode<'_>) -> Result<Vec<Self>> {
        match mode {
            Mode::Enumerate => self.measure_all(obs, targets),
            Mode::Sample(rng) => Ok(vec![self.measure_sample(obs, targets, &mut **rng)?]),
        }
    }

    pub fn apply(&self, gate: &Operator, targets: &[usize]) -> Result<Self> {
        Ok(Self {
            outcomes: self.outcomes.clone(),
            probability: self.probability,
            state: self.state.apply(gate, targets)?,
        })
    }
}

/// Measures `obs` on `targets`.
pub fn measure(state: &QState, obs: &Observable, targets: &[usize], mut mode: Mode<'_>) -> Result<Vec<Branch>> {
    Branch::root(state.clone()).measure(obs, targets, &mut mode)
}

pub fn measure_enumerate(state: &QState, obs: &Observable, targets: &[usize]) -> Result<Vec<Branch>> {
    measure(state, obs, targets, Mode::Enumerate)
}

pub fn measure_sample(state: &QState, obs: &Observable, targets: &[usize], rng: &mut dyn RngCore) -> Result<Branch> {
    Branch::root(state.clone()).measure_sample(obs, targets, rng)
}

pub fn apply_gate(state: &QState, gate: &Operator, targets: &[usize]) -> Result<QState> {
    state.apply(gate, targets)
}

/// Result of the generalized yes/no measurement.
#[derive(Debug, Clone)]
pub struct YesNo {
    pub p_plus: f64,
    pub p_minus: f64,
    /// `None` when `p_plus` is below [`IMPOSSIBLE_P`].
    pub rho_plus: Option<DensityOp>,
    pub rho_minus: Option<DensityOp>,
}

/// `ρ± ∝ f(γGt) ρ f(γGt)` with `f = cos` / `sin`, `P± = tr(f²(γGt) ρ)`.
pub fn interface_yes_no(rho: &DensityOp, g: &Operator, gamma_t: f64) -> Result<YesNo> {
    if g.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: g.dim(),
        });
    }
    let cos = g.matfun_hermitian(|x| (gamma_t * x).cos())?;
    let sin = g.matfun_hermitian(|x| (gamma_t * x).sin())?;
    let sandwich = |k: &Operator| Operator::product(&[k, rho.operator(), k]);
    let raw_plus = sandwich(&cos)?;
    let raw_minus = sandwich(&sin)?;
    let p_plus = raw_plus.trace().re;
    let p_minus = raw_minus.trace().re;
    let finish = |raw: Operator, p: f64| -> Result<Option<DensityOp>> {
        if p < IMPOSSIBLE_P {
            Ok(None)
        } else {
            DensityOp::from_unnormalized(raw).map(Some)
        }
    };
    Ok(YesNo {
        p_plus,
        p_minus,
        rho_plus: finish(raw_plus, p_plus)?,
        rho_minus: finish(raw_minus, p_minus)?,
    })
}

/// Max deviation of `T⁻¹·X·T` from `(X − X'')/√2`; fails when the X''
/// convention does not hold.
pub fn check_conventions() -> Result<f64> {
    let lhs = Operator::product(&[&t_inverse(), &pauli_x(), &t_gate()])?;
    let rhs = (&pauli_x() - observable(Named::XDoublePrime).matrix()).scale(c(FRAC_1_SQRT_2, 0.));
    let dev = lhs.max_abs_diff(&rhs);
    if dev > 1e-15 {
        return Err(Error::invalid(format!(
            "X'' convention violated: |T⁻¹XT − (X−X'')/√2| = {dev:e}"
        )));
    }
    Ok(dev)
}
