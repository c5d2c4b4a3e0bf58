//! Measurement-only implementations of σH, σ, σT and CNOT.
//!
//! Every construction is a fixed sequence of ±1 measurements (and, for one
//! σT route, a single H). Each outcome branch realizes the target gate up
//! to a Pauli byproduct that is computed from the outcome signs alone:
//!
//! | construction | outcome signs (bits)  | byproduct               |
//! |--------------|-----------------------|-------------------------|
//! | σH           | a, m, k               | X^m Z^(a⊕k)             |
//! | σH, swapped  | a, m, k               | X^(a⊕k) Z^m             |
//! | σ, σT        | a, m, k               | X^m Z^(a⊕k)             |
//! | CNOT         | a, m1, m2, m3         | Z^(m1⊕m3) ⊗ X^(a⊕m2)    |
//!
//! Here `a` is the ancilla preparation outcome and `k` the final
//! measurement on the discarded wire. Byproducts are reported modulo phase.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;

use crate::circuits::{
    check_conventions, cnot_std, hadamard_std, observable, pauli_x, pauli_y, pauli_z, t_gate,
    t_inverse, Branch, GateSet, Mode, Named, Observable, Outcome, Sign,
};
use crate::error::{Error, Result};
use crate::exec::{substream, Exec};
use crate::qcore::{
    c, fidelity, validate_targets, Kron, Operator, QState, CIRCUIT_TOL,
};

/// Single-qubit Pauli: I, X, X' (= σz) or X'' (= σy).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Z,
    Y,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Z, Pauli::Y];

    /// `X^x Z^z` modulo phase.
    pub fn from_xz(x: u8, z: u8) -> Self {
        match (x & 1, z & 1) {
            (0, 0) => Pauli::I,
            (1, 0) => Pauli::X,
            (0, 1) => Pauli::Z,
            _ => Pauli::Y,
        }
    }

    pub fn matrix(self) -> Operator {
        match self {
            Pauli::I => Operator::identity(2),
            Pauli::X => pauli_x(),
            Pauli::Z => pauli_z(),
            Pauli::Y => pauli_y(),
        }
    }

    /// `self · rhs = i^phase · result`.
    pub fn compose(self, rhs: Pauli) -> (Pauli, u8) {
        use Pauli::*;
        match (self, rhs) {
            (I, p) | (p, I) => (p, 0),
            (a, b) if a == b => (I, 0),
            (X, Y) => (Z, 1),
            (Y, X) => (Z, 3),
            (Y, Z) => (X, 1),
            (Z, Y) => (X, 3),
            (Z, X) => (Y, 1),
            (X, Z) => (Y, 3),
            _ => unreachable!(),
        }
    }

    /// `H_std · self · H_std = i^phase · result`.
    pub fn h_conjugate(self) -> (Pauli, u8) {
        match self {
            Pauli::I => (Pauli::I, 0),
            Pauli::X => (Pauli::Z, 0),
            Pauli::Z => (Pauli::X, 0),
            Pauli::Y => (Pauli::Y, 2),
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pauli {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Pauli::I => "I",
            Pauli::X => "X",
            Pauli::Z => "X'",
            Pauli::Y => "X''",
        })
    }
}

/// Tensor product of Paulis with a global phase `i^phase`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PauliTag {
    pub ops: Vec<Pauli>,
    pub phase: u8,
}

impl PauliTag {
    pub fn identity(n: usize) -> Self {
        Self {
            ops: vec![Pauli::I; n],
            phase: 0,
        }
    }

    pub fn single(p: Pauli) -> Self {
        Self {
            ops: vec![p],
            phase: 0,
        }
    }

    pub fn new(ops: Vec<Pauli>) -> Self {
        Self { ops, phase: 0 }
    }

    /// Qubit-wise product with phases tracked mod 4.
    pub fn compose(&self, rhs: &PauliTag) -> Result<PauliTag> {
        if self.ops.len() != rhs.ops.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ops.len(),
                found: rhs.ops.len(),
            });
        }
        let mut phase = self.phase + rhs.phase;
        let ops = self
            .ops
            .iter()
            .zip(&rhs.ops)
            .map(|(a, b)| {
                let (p, ph) = a.compose(*b);
                phase += ph;
                p
            })
            .collect();
        Ok(PauliTag {
            ops,
            phase: phase % 4,
        })
    }

    /// Conjugation by `H_std` on every qubit.
    pub fn h_conjugate(&self) -> PauliTag {
        let mut phase = self.phase;
        let ops = self
            .ops
            .iter()
            .map(|p| {
                let (q, ph) = p.h_conjugate();
                phase += ph;
                q
            })
            .collect();
        PauliTag {
            ops,
            phase: phase % 4,
        }
    }

    pub fn eq_mod_phase(&self, other: &PauliTag) -> bool {
        self.ops == other.ops
    }

    /// Phase-free normal form.
    pub fn normalized(&self) -> PauliTag {
        PauliTag {
            ops: self.ops.clone(),
            phase: 0,
        }
    }

    pub fn matrix(&self) -> Operator {
        let base = self
            .ops
            .iter()
            .map(|p| p.matrix())
            .reduce(|a, b| a.tensor(&b).expect("small"))
            .unwrap_or_else(|| Operator::identity(1));
        let ph = [c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)][(self.phase % 4) as usize];
        base.scale(ph)
    }
}

impl fmt::Display for PauliTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.ops.iter().map(|p| p.to_string()).collect();
        f.write_str(&parts.join("⊗"))
    }
}

/// One branch of a measurement-based construction.
#[derive(Debug, Clone)]
pub struct TransferOutcome {
    /// Outcomes, joint probability and the register after discarding the
    /// consumed wire.
    pub branch: Branch,
    pub byproduct: PauliTag,
    /// Byproduct times target gate, acting on `output_qubits`.
    pub realized: Operator,
    pub output_qubits: Vec<usize>,
}

impl TransferOutcome {
    /// `1 − |⟨out|realized·input⟩|²` when the ancilla was appended after
    /// the input register.
    pub fn deviation(&self, input: &QState) -> Result<f64> {
        let expect = input.apply(&self.realized, &self.output_qubits)?;
        Ok(1.0 - fidelity(&self.branch.state, &expect)?)
    }
}

/// Order in which supply and demand measurements enter a transfer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransferBasis {
    /// X on the ancilla, X⊗X' on (src, anc), X' on src.
    Standard,
    /// The same sequence with X and X' exchanged.
    Swapped,
}

/// Which of the two equivalent σT sequences to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TRoute {
    /// X on anc, X'⊗X' on (src, anc), T⁻¹XT on src.
    Direct,
    /// X on anc, H on src, X⊗X' on (src, anc), G on src.
    HConjugated,
}

/// Same-side composite measurement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Side {
    /// X⊗X, realized as (I⊗H)(X⊗X')(I⊗H).
    Demand,
    /// X'⊗X', realized as (H⊗I)(X⊗X')(H⊗I).
    Supply,
}

impl Side {
    pub fn composite(self) -> Observable {
        let (a, b) = match self {
            Side::Demand => (Named::X, Named::X),
            Side::Supply => (Named::XPrime, Named::XPrime),
        };
        observable(a).tensor(&observable(b)).expect("2 qubits")
    }
}

enum Step {
    Measure(Observable, Vec<usize>),
    Apply(Operator, Vec<usize>),
}

fn obs2(a: Named, b: Named) -> Observable {
    observable(a).tensor(&observable(b)).expect("2 qubits")
}

fn run_steps(state: &QState, steps: &[Step], mode: &mut Mode<'_>) -> Result<Vec<Branch>> {
    let mut branches = vec![Branch::root(state.clone())];
    for step in steps {
        let mut next = Vec::with_capacity(branches.len() * 2);
        for b in &branches {
            match step {
                Step::Measure(obs, t) => next.extend(b.measure(obs, t, mode)?),
                Step::Apply(g, t) => next.push(b.apply(g, t)?),
            }
        }
        branches = next;
    }
    Ok(branches)
}

fn check_fresh(state: &QState, anc: usize) -> Result<()> {
    let p1 = Branch::root(state.clone())
        .project(&observable(Named::XPrime), &[anc], Sign::Minus)
        .map(|b| b.probability)
        .unwrap_or(0.0);
    if p1 > 1e-12 {
        return Err(Error::invalid(format!("ancilla {anc} is not in |0⟩")));
    }
    Ok(())
}

fn check_wires(state: &QState, wires: &[usize], anc: usize) -> Result<()> {
    validate_targets(wires, state.n_qubits())
        .map_err(|e| Error::invalid(format!("wire collision or range error: {e}")))?;
    check_fresh(state, anc)
}

/// Moves the output from `anc` into `consumed`'s slot and drops `consumed`.
/// Returns the new register and the index the output now occupies.
fn hand_over(state: &QState, consumed: usize, anc: usize) -> Result<(QState, usize)> {
    let swapped = state.swap_qubits(consumed, anc)?;
    let (rest, _) = swapped.discard(anc)?;
    let out = if anc < consumed { consumed - 1 } else { consumed };
    Ok((rest, out))
}

fn shifted(q: usize, removed: usize) -> usize {
    if q > removed {
        q - 1
    } else {
        q
    }
}

fn finish_single(
    branches: Vec<Branch>,
    src: usize,
    anc: usize,
    target_gate: &Operator,
    rule: impl Fn(&[Sign]) -> Pauli,
) -> Result<Vec<TransferOutcome>> {
    branches
        .into_iter()
        .map(|b| {
            let signs: Vec<Sign> = b.signs();
            let sigma = rule(&signs);
            let (state, out) = hand_over(&b.state, src, anc)?;
            Ok(TransferOutcome {
                branch: Branch {
                    outcomes: b.outcomes,
                    probability: b.probability,
                    state,
                },
                byproduct: PauliTag::single(sigma),
                realized: &sigma.matrix() * target_gate,
                output_qubits: vec![out],
            })
        })
        .collect()
}

fn bits(signs: &[Sign]) -> Vec<u8> {
    signs.iter().map(|s| s.bit()).collect()
}

/// Transfers the strategy on `src` to the fresh ancilla `anc` (in `|0⟩`)
/// and applies σH. The output occupies `src`'s slot in the returned
/// register; `anc` is removed.
pub fn state_transfer_sigma_h(
    state: &QState,
    src: usize,
    anc: usize,
    basis: TransferBasis,
    mut mode: Mode<'_>,
) -> Result<Vec<TransferOutcome>> {
    check_wires(state, &[src, anc], anc)?;
    let (prep, joint, last) = match basis {
        TransferBasis::Standard => (Named::X, obs2(Named::X, Named::XPrime), Named::XPrime),
        TransferBasis::Swapped => (Named::XPrime, obs2(Named::XPrime, Named::X), Named::X),
    };
    let steps = [
        Step::Measure(observable(prep), vec![anc]),
        Step::Measure(joint, vec![src, anc]),
        Step::Measure(observable(last), vec![src]),
    ];
    let branches = run_steps(state, &steps, &mut mode)?;
    finish_single(branches, src, anc, &hadamard_std(), |s| {
        let b = bits(s);
        match basis {
            TransferBasis::Standard => Pauli::from_xz(b[1], b[0] ^ b[2]),
            TransferBasis::Swapped => Pauli::from_xz(b[0] ^ b[2], b[1]),
        }
    })
}

/// Transfer realizing a bare Pauli σ: X on anc, X'⊗X' on (src, anc), X on
/// src.
pub fn transfer_sigma(state: &QState, src: usize, anc: usize, mut mode: Mode<'_>) -> Result<Vec<TransferOutcome>> {
    check_wires(state, &[src, anc], anc)?;
    let steps = [
        Step::Measure(observable(Named::X), vec![anc]),
        Step::Measure(obs2(Named::XPrime, Named::XPrime), vec![src, anc]),
        Step::Measure(observable(Named::X), vec![src]),
    ];
    let branches = run_steps(state, &steps, &mut mode)?;
    finish_single(branches, src, anc, &Operator::identity(2), |s| {
        let b = bits(s);
        Pauli::from_xz(b[1], b[0] ^ b[2])
    })
}

/// `T⁻¹XT = (X − X'')/√2` as an observable.
pub fn t_conjugated_x() -> Observable {
    let m = Operator::product(&[&t_inverse(), &pauli_x(), &t_gate()]).expect("2x2");
    Observable::from_matrix("T⁻¹XT", m).expect("involution")
}

/// Transfers `src` to `anc` applying σT.
pub fn implement_sigma_t(
    state: &QState,
    src: usize,
    anc: usize,
    route: TRoute,
    mut mode: Mode<'_>,
) -> Result<Vec<TransferOutcome>> {
    check_wires(state, &[src, anc], anc)?;
    let steps = match route {
        TRoute::Direct => vec![
            Step::Measure(observable(Named::X), vec![anc]),
            Step::Measure(obs2(Named::XPrime, Named::XPrime), vec![src, anc]),
            Step::Measure(t_conjugated_x(), vec![src]),
        ],
        TRoute::HConjugated => vec![
            Step::Measure(observable(Named::X), vec![anc]),
            Step::Apply(GateSet::default().h, vec![src]),
            Step::Measure(obs2(Named::X, Named::XPrime), vec![src, anc]),
            Step::Measure(observable(Named::G), vec![src]),
        ],
    };
    let branches = run_steps(state, &steps, &mut mode)?;
    finish_single(branches, src, anc, &t_gate(), |s| {
        let b = bits(s);
        Pauli::from_xz(b[1], b[0] ^ b[2])
    })
}

/// CNOT from `ctrl` to `tgt` using the fresh ancilla `anc`, which is
/// removed from the returned register.
pub fn mbqc_cnot(
    state: &QState,
    ctrl: usize,
    anc: usize,
    tgt: usize,
    mut mode: Mode<'_>,
) -> Result<Vec<TransferOutcome>> {
    check_wires(state, &[ctrl, anc, tgt], anc)?;
    let zx = obs2(Named::XPrime, Named::X);
    let steps = [
        Step::Measure(observable(Named::X), vec![anc]),
        Step::Measure(zx.clone(), vec![anc, tgt]),
        Step::Measure(zx, vec![ctrl, anc]),
        Step::Measure(observable(Named::XPrime), vec![anc]),
    ];
    let branches = run_steps(state, &steps, &mut mode)?;
    let cnot = cnot_std();
    branches
        .into_iter()
        .map(|b| {
            let s = bits(&b.signs());
            let sa = Pauli::from_xz(0, s[1] ^ s[3]);
            let sb = Pauli::from_xz(s[0] ^ s[2], 0);
            let tag = PauliTag::new(vec![sa, sb]);
            let (rest, _) = b.state.discard(anc)?;
            Ok(TransferOutcome {
                branch: Branch {
                    outcomes: b.outcomes,
                    probability: b.probability,
                    state: rest,
                },
                realized: &tag.matrix() * &cnot,
                byproduct: tag,
                output_qubits: vec![shifted(ctrl, anc), shifted(tgt, anc)],
            })
        })
        .collect()
}

/// Same-side composite measurement through H conjugation of X⊗X'. The
/// recorded outcome carries the composite's label.
pub fn composite_same_side(
    state: &QState,
    pair: (usize, usize),
    side: Side,
    mut mode: Mode<'_>,
) -> Result<Vec<Branch>> {
    let (a, b) = pair;
    validate_targets(&[a, b], state.n_qubits())?;
    let h = GateSet::default().h;
    let rotated = match side {
        Side::Demand => b,
        Side::Supply => a,
    };
    let steps = [
        Step::Apply(h.clone(), vec![rotated]),
        Step::Measure(obs2(Named::X, Named::XPrime), vec![a, b]),
        Step::Apply(h, vec![rotated]),
    ];
    let label = side.composite().label().to_string();
    let mut branches = run_steps(state, &steps, &mut mode)?;
    for br in &mut branches {
        if let Some(last) = br.outcomes.last_mut() {
            last.label = label.clone();
        }
    }
    Ok(branches)
}

/// X' on `q` inferred from X on the ancilla followed by X⊗X' on
/// (anc, q). The inferred sign is appended as a final outcome and the
/// ancilla is removed.
pub fn implicit_xprime(state: &QState, q: usize, anc: usize, mut mode: Mode<'_>) -> Result<Vec<Branch>> {
    check_wires(state, &[q, anc], anc)?;
    let steps = [
        Step::Measure(observable(Named::X), vec![anc]),
        Step::Measure(obs2(Named::X, Named::XPrime), vec![anc, q]),
    ];
    run_steps(state, &steps, &mut mode)?
        .into_iter()
        .map(|b| {
            let s = b.signs();
            let (rest, _) = b.state.discard(anc)?;
            let mut outcomes = b.outcomes;
            outcomes.push(Outcome {
                label: "X' (implicit)".into(),
                targets: vec![shifted(q, anc)],
                sign: s[0].times(s[1]),
            });
            Ok(Branch {
                outcomes,
                probability: b.probability,
                state: rest,
            })
        })
        .collect()
}

/// Outcome law `[P(+1), P(−1)]` of the final recorded sign over branches.
pub fn outcome_law(branches: &[Branch]) -> [f64; 2] {
    let mut law = [0.0; 2];
    for b in branches {
        if let Some(o) = b.outcomes.last() {
            law[o.sign.bit() as usize] += b.probability;
        }
    }
    law
}

/// Per-step distribution over Pauli byproducts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WalkModel {
    /// Weights indexed by [`Pauli::index`].
    pub weights: [f64; 4],
}

impl WalkModel {
    pub fn uniform() -> Self {
        Self { weights: [0.25; 4] }
    }

    /// Byproduct law of an even pair of σH transfers, from exhaustive
    /// branch enumeration.
    pub fn from_transfer_pairs() -> Result<Self> {
        Ok(Self {
            weights: transfer_pair_distribution()?,
        })
    }

    fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> Pauli {
        let total: f64 = self.weights.iter().sum();
        let mut u = rng.gen::<f64>() * total;
        for p in Pauli::ALL {
            u -= self.weights[p.index()];
            if u < 0.0 {
                return p;
            }
        }
        Pauli::Y
    }
}

/// Default cap on random-walk length.
pub const WALK_CAP: usize = 10_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Walk {
    pub steps: usize,
    /// Accumulated byproduct, starting with the initial tag.
    pub trace: Vec<Pauli>,
}

/// Composes random byproducts onto `start` until the accumulated Pauli
/// equals `target` modulo phase.
pub fn pauli_random_walk<R: Rng + ?Sized>(
    start: Pauli,
    target: Pauli,
    model: &WalkModel,
    cap: usize,
    rng: &mut R,
) -> Result<Walk> {
    let mut acc = start;
    let mut trace = vec![acc];
    let mut steps = 0;
    while acc != target {
        if steps >= cap {
            return Err(Error::StepCapExceeded { cap });
        }
        acc = model.draw(rng).compose(acc).0;
        trace.push(acc);
        steps += 1;
    }
    Ok(Walk { steps, trace })
}

/// `implement_pauli_randomwalk`: walk from the identity to `target` under
/// the uniform model.
pub fn implement_pauli_randomwalk<R: Rng + ?Sized>(target: Pauli, rng: &mut R) -> Result<Walk> {
    pauli_random_walk(Pauli::I, target, &WalkModel::uniform(), WALK_CAP, rng)
}

/// Empirical survival statistics of the random-walk corrector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurvivalCurve {
    pub trials: usize,
    /// Fraction of walks finishing at step 1.
    pub first_step: f64,
    pub mean_steps: f64,
    /// `survival[n-1]` = fraction still walking after `n` steps.
    pub survival: Vec<f64>,
    /// `(3/4)^n`.
    pub model: Vec<f64>,
}

/// Runs `trials` uniform walks from I to X. Chunk `i` of
/// [`crate::exec::CHUNK`] trials draws from `substream(seed, i)`.
pub fn survival_curve(n_max: usize, trials: usize, seed: u64, exec: Exec) -> Result<SurvivalCurve> {
    if n_max == 0 || trials == 0 {
        return Err(Error::invalid("n_max and trials must be positive"));
    }
    let model = WalkModel::uniform();
    let chunks = crate::exec::chunks(trials);
    let per_chunk: Vec<Result<(Vec<u64>, u64)>> = exec.map_slice(&chunks, |&(idx, len)| {
        let mut rng = substream(seed, idx);
        let mut hist = vec![0u64; n_max + 2];
        let mut total = 0u64;
        for _ in 0..len {
            let w = pauli_random_walk(Pauli::I, Pauli::X, &model, WALK_CAP, &mut rng)?;
            hist[w.steps.min(n_max + 1)] += 1;
            total += w.steps as u64;
        }
        Ok((hist, total))
    });
    let mut hist = vec![0u64; n_max + 2];
    let mut total = 0u64;
    for r in per_chunk {
        let (h, t) = r?;
        for (acc, v) in hist.iter_mut().zip(h) {
            *acc += v;
        }
        total += t;
    }
    let n = trials as f64;
    let mut remaining = trials as u64;
    let mut survival = Vec::with_capacity(n_max);
    for stopped in &hist[1..=n_max] {
        remaining -= stopped;
        survival.push(remaining as f64 / n);
    }
    Ok(SurvivalCurve {
        trials,
        first_step: hist[1] as f64 / n,
        mean_steps: total as f64 / n,
        survival,
        model: (1..=n_max).map(|k| 0.75f64.powi(k as i32)).collect(),
    })
}

/// Byproduct law of two successive σH transfers, `σ₂·H·σ₁·H = σ₂·(Hσ₁H)`,
/// over all 64 branch pairs.
pub fn transfer_pair_distribution() -> Result<[f64; 4]> {
    let input = QState::from_amplitudes(vec![c(0.6, 0.0), c(0.0, 0.8)])?;
    let mut law = [0.0; 4];
    for (b1, b2, _) in transfer_pairs(&input)? {
        let tag = b2.byproduct.compose(&b1.byproduct.h_conjugate())?;
        law[tag.ops[0].index()] += b1.branch.probability * b2.branch.probability;
    }
    Ok(law)
}

/// All 64 branch pairs of two chained σH transfers on a one-qubit input,
/// together with the final output state.
fn transfer_pairs(input: &QState) -> Result<Vec<(TransferOutcome, TransferOutcome, QState)>> {
    let (reg, anc) = input.adjoin_zero()?;
    let mut out = Vec::new();
    for b1 in state_transfer_sigma_h(&reg, 0, anc, TransferBasis::Standard, Mode::Enumerate)? {
        let (reg2, anc2) = b1.branch.state.adjoin_zero()?;
        for b2 in state_transfer_sigma_h(&reg2, 0, anc2, TransferBasis::Standard, Mode::Enumerate)? {
            let s = b2.branch.state.clone();
            out.push((b1.clone(), b2, s));
        }
    }
    Ok(out)
}

/// One entry of the universality ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub max_deviation: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl Check {
    fn new(name: &str, max_deviation: f64, tolerance: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.to_string(),
            passed: max_deviation.is_finite() && max_deviation <= tolerance,
            max_deviation,
            tolerance,
            detail: detail.into(),
        }
    }

    fn failed(name: &str, tolerance: f64, err: Error) -> Self {
        Self {
            name: name.to_string(),
            passed: false,
            max_deviation: f64::INFINITY,
            tolerance,
            detail: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub checks: Vec<Check>,
}

impl UniversalityReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

const VERIFY_SEED: u64 = 0x005E_ED0F_0417;
const EXACT: f64 = 1e-15;

type CheckFn = fn(&GateSet, Exec) -> Check;

/// Names of all checks run by [`verify_universality`], in report order.
pub fn check_names() -> Vec<&'static str> {
    CHECKS.iter().map(|(n, _)| *n).collect()
}

const CHECKS: &[(&str, CheckFn)] = &[
    ("x_double_prime_convention", check_xpp),
    ("hnh", check_hnh),
    ("h_squared", check_h_squared),
    ("xprime_hxh", check_xprime_hxh),
    ("g_from_t_conjugation", check_g_conj),
    ("g_involution", check_g_involution),
    ("alliance_form", check_alliance),
    ("transfer_sigma_h", |g, e| check_transfer(g, e, TransferBasis::Standard)),
    ("transfer_sigma_h_swapped", |g, e| check_transfer(g, e, TransferBasis::Swapped)),
    ("transfer_sigma", check_transfer_sigma),
    ("sigma_t", |g, e| check_sigma_t(g, e, TRoute::Direct)),
    ("sigma_t_h_route", |g, e| check_sigma_t(g, e, TRoute::HConjugated)),
    ("mbqc_cnot", check_cnot),
    ("implicit_xprime", check_implicit),
    ("same_side_demand", |g, e| check_same_side(g, e, Side::Demand)),
    ("same_side_supply", |g, e| check_same_side(g, e, Side::Supply)),
    ("byproduct_algebra", check_byproduct_algebra),
];

/// Runs every identity and branch enumeration and collects a pass/fail
/// ledger. `only` restricts the run to the named checks.
pub fn verify_universality(gates: &GateSet, exec: Exec, only: Option<&[String]>) -> UniversalityReport {
    let checks = CHECKS
        .iter()
        .filter(|(name, _)| only.is_none_or(|o| o.iter().any(|x| x == name)))
        .map(|(_, f)| f(gates, exec))
        .collect();
    UniversalityReport { checks }
}

fn check_xpp(g: &GateSet, _: Exec) -> Check {
    let t_inv = g.t.adjoint();
    let lhs = Operator::product(&[&t_inv, &pauli_x(), &g.t]).expect("2x2");
    let rhs = (&pauli_x() - &pauli_y()).scale(c(FRAC_1_SQRT_2, 0.));
    let dev = lhs.max_abs_diff(&rhs);
    let mut chk = Check::new("x_double_prime_convention", dev, EXACT, "T⁻¹XT = (X − X'')/√2 with X'' = σy");
    if let Err(e) = check_conventions() {
        chk.passed = false;
        chk.detail = e.to_string();
    }
    chk
}

fn check_hnh(g: &GateSet, _: Exec) -> Check {
    let hnh = Operator::product(&[&g.h, &g.not, &g.h]).expect("2x2");
    let dev = hnh.max_abs_diff(&Operator::diag(&[c(0., -1.), c(0., 1.)]));
    Check::new("hnh", dev, EXACT, "H·NOT·H = diag(−i, i)")
}

fn check_h_squared(g: &GateSet, _: Exec) -> Check {
    let dev = (&g.h * &g.h).max_abs_diff(&Operator::identity(2).scale(c(-1., 0.)));
    Check::new("h_squared", dev, EXACT, "H² = −I")
}

fn check_xprime_hxh(g: &GateSet, _: Exec) -> Check {
    let dev = g.h_conjugate(&pauli_x()).max_abs_diff(&pauli_z());
    let literal = Operator::product(&[&g.h, &pauli_x(), &g.h]).expect("2x2");
    let lit = literal.max_abs_diff(&pauli_z().scale(c(-1., 0.)));
    Check::new(
        "xprime_hxh",
        dev,
        EXACT,
        format!("H·X·H⁻¹ = X' (literal H·X·H = −X' within {lit:e})"),
    )
}

fn check_g_conj(g: &GateSet, _: Exec) -> Check {
    let d = (&pauli_x() - &pauli_y()).scale(c(FRAC_1_SQRT_2, 0.));
    let dev = g.h_conjugate(&d).max_abs_diff(observable(Named::G).matrix());
    Check::new("g_from_t_conjugation", dev, EXACT, "H·((X − X'')/√2)·H⁻¹ = G")
}

fn check_g_involution(_: &GateSet, _: Exec) -> Check {
    let gm = observable(Named::G).matrix().clone();
    let dev = (&gm * &gm).max_abs_diff(&Operator::identity(2));
    Check::new("g_involution", dev, EXACT, "G² = I")
}

fn check_alliance(g: &GateSet, _: Exec) -> Check {
    let block = crate::circuits::controlled(&g.not);
    let mut dev = g.cnot_alliance.max_abs_diff(&block);
    for m in 0..2 {
        let input = QState::basis(2, m << 1).expect("2 qubits");
        let copy = QState::basis(2, (m << 1) | m).expect("2 qubits");
        let out = input.apply(&g.cnot_alliance, &[0, 1]);
        let d = match out {
            Ok(o) => 1.0 - fidelity(&o, &copy).unwrap_or(0.0),
            Err(_) => f64::INFINITY,
        };
        dev = dev.max(d);
    }
    Check::new("alliance_form", dev, EXACT, "C = |0⟩⟨0|⊗I + |1⟩⟨1|⊗NOT; C|m⟩|0⟩ ≡ |m⟩|m⟩ up to phase")
}

/// Max over branches of `1 − F` and of `|Σp − 1|` on `count` random
/// inputs, evaluated in parallel.
fn branchwise<F>(name: &str, exec: Exec, inputs: Vec<QState>, tol: f64, detail: &str, run: F) -> Check
where
    F: Fn(&QState) -> Result<Vec<TransferOutcome>> + Sync + Send,
{
    let devs: Vec<Result<f64>> = exec.map_slice(&inputs, |input| {
        let outs = run(input)?;
        let total: f64 = outs.iter().map(|o| o.branch.probability).sum();
        let mut worst = (total - 1.0).abs();
        for o in &outs {
            worst = worst.max(o.deviation(input)?);
        }
        Ok(worst)
    });
    let mut worst = 0.0f64;
    for d in devs {
        match d {
            Ok(v) => worst = worst.max(v),
            Err(e) => return Check::failed(name, tol, e),
        }
    }
    Check::new(name, worst, tol, detail)
}

fn random_inputs(n_qubits: usize, count: usize, stream: u64) -> Vec<QState> {
    let mut rng = substream(VERIFY_SEED, stream);
    (0..count)
        .map(|_| QState::random(n_qubits, &mut rng).expect("small"))
        .collect()
}

fn check_transfer(g: &GateSet, exec: Exec, basis: TransferBasis) -> Check {
    let name = match basis {
        TransferBasis::Standard => "transfer_sigma_h",
        TransferBasis::Swapped => "transfer_sigma_h_swapped",
    };
    let h = g.h.clone();
    branchwise(name, exec, random_inputs(1, 100, 1), CIRCUIT_TOL, "8 branches ≡ σ·H on 100 random inputs", |input| {
        let (reg, anc) = input.adjoin_zero()?;
        let mut outs = state_transfer_sigma_h(&reg, 0, anc, basis, Mode::Enumerate)?;
        for o in &mut outs {
            o.realized = &o.byproduct.matrix() * &h;
        }
        Ok(outs)
    })
}

fn check_transfer_sigma(_: &GateSet, exec: Exec) -> Check {
    branchwise("transfer_sigma", exec, random_inputs(1, 100, 2), CIRCUIT_TOL, "8 branches ≡ σ on 100 random inputs", |input| {
        let (reg, anc) = input.adjoin_zero()?;
        transfer_sigma(&reg, 0, anc, Mode::Enumerate)
    })
}

fn check_sigma_t(g: &GateSet, exec: Exec, route: TRoute) -> Check {
    let name = match route {
        TRoute::Direct => "sigma_t",
        TRoute::HConjugated => "sigma_t_h_route",
    };
    let t = g.t.clone();
    branchwise(name, exec, random_inputs(1, 100, 3), CIRCUIT_TOL, "all branches ≡ σ·T on 100 random inputs", |input| {
        let (reg, anc) = input.adjoin_zero()?;
        let mut outs = implement_sigma_t(&reg, 0, anc, route, Mode::Enumerate)?;
        for o in &mut outs {
            o.realized = &o.byproduct.matrix() * &t;
        }
        Ok(outs)
    })
}

fn check_cnot(_: &GateSet, exec: Exec) -> Check {
    let mut inputs: Vec<QState> = (0..4).map(|i| QState::basis(2, i).expect("2 qubits")).collect();
    inputs.extend(random_inputs(2, 20, 4));
    branchwise("mbqc_cnot", exec, inputs, CIRCUIT_TOL, "16 branches ≡ (σa⊗σb)·CNOT on 4 basis + 20 random inputs", |input| {
        let (reg, anc) = input.adjoin_zero()?;
        let outs = mbqc_cnot(&reg, 0, anc, 1, Mode::Enumerate)?;
        if outs.len() != 16 {
            return Err(Error::invalid(format!("expected 16 branches, got {}", outs.len())));
        }
        Ok(outs)
    })
}

fn direct_law(state: &QState, obs: &Observable, targets: &[usize]) -> Result<[f64; 2]> {
    let b = Branch::root(state.clone()).measure_all(obs, targets)?;
    Ok(outcome_law(&b))
}

fn law_check<F>(name: &str, exec: Exec, inputs: Vec<QState>, detail: &str, f: F) -> Check
where
    F: Fn(&QState) -> Result<f64> + Sync + Send,
{
    let devs = exec.map_slice(&inputs, f);
    let mut worst = 0.0f64;
    for d in devs {
        match d {
            Ok(v) => worst = worst.max(v),
            Err(e) => return Check::failed(name, 1e-12, e),
        }
    }
    Check::new(name, worst, 1e-12, detail)
}

fn check_implicit(_: &GateSet, exec: Exec) -> Check {
    law_check("implicit_xprime", exec, random_inputs(1, 100, 5), "implicit X' law = direct X' law (TV distance)", |s| {
        let (reg, anc) = s.adjoin_zero()?;
        let implicit = outcome_law(&implicit_xprime(&reg, 0, anc, Mode::Enumerate)?);
        let direct = direct_law(s, &observable(Named::XPrime), &[0])?;
        Ok(0.5 * ((implicit[0] - direct[0]).abs() + (implicit[1] - direct[1]).abs()))
    })
}

fn check_same_side(_: &GateSet, exec: Exec, side: Side) -> Check {
    let name = match side {
        Side::Demand => "same_side_demand",
        Side::Supply => "same_side_supply",
    };
    law_check(name, exec, random_inputs(2, 100, 6), "H-conjugated X⊗X' law = direct composite law", |s| {
        let conj = outcome_law(&composite_same_side(s, (0, 1), side, Mode::Enumerate)?);
        let direct = direct_law(s, &side.composite(), &[0, 1])?;
        Ok((conj[0] - direct[0]).abs().max((conj[1] - direct[1]).abs()))
    })
}

fn check_byproduct_algebra(_: &GateSet, exec: Exec) -> Check {
    branchwise("byproduct_algebra", exec, random_inputs(1, 10, 7), CIRCUIT_TOL, "64 transfer pairs: output ≡ σ₂·(Hσ₁H)·input", |input| {
        let pairs = transfer_pairs(input)?;
        if pairs.len() != 64 {
            return Err(Error::invalid(format!("expected 64 branch pairs, got {}", pairs.len())));
        }
        pairs
            .into_iter()
            .map(|(b1, b2, out)| {
                let tag = b2.byproduct.compose(&b1.byproduct.h_conjugate())?;
                let mut joint = b2;
                joint.branch.probability *= b1.branch.probability;
                joint.branch.state = out;
                joint.realized = tag.matrix();
                joint.byproduct = tag;
                Ok(joint)
            })
            .collect()
    })
}

/// `1 − |⟨out|expected⟩|²`: zero iff the states agree up to global phase.
pub fn phase_deviation(out: &QState, expected: &QState) -> Result<f64> {
    Ok(1.0 - fidelity(out, expected)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::hadamard;
    use crate::qcore::{equal_up_to_global_phase, C64};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pauli_table_matches_matrices() {
        let ph = [c(1., 0.), c(0., 1.), c(-1., 0.), c(0., -1.)];
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let (p, k) = a.compose(b);
                let lhs = &a.matrix() * &b.matrix();
                let rhs = p.matrix().scale(ph[k as usize]);
                assert!(lhs.max_abs_diff(&rhs) < 1e-15, "{a}·{b}");
            }
            let (q, k) = a.h_conjugate();
            let lhs = Operator::product(&[&hadamard_std(), &a.matrix(), &hadamard_std()]).unwrap();
            assert!(lhs.max_abs_diff(&q.matrix().scale(ph[k as usize])) < 1e-15);
        }
    }

    #[test]
    fn tag_composition_is_closed() {
        for a in Pauli::ALL {
            for b in Pauli::ALL {
                let ta = PauliTag::new(vec![a, b]);
                let tb = PauliTag::new(vec![b, a]);
                let t = ta.compose(&tb).unwrap();
                assert!((&ta.matrix() * &tb.matrix()).max_abs_diff(&t.matrix()) < 1e-15);
            }
        }
    }

    #[test]
    fn transfer_of_zero_all_plus_is_hadamard() {
        let (reg, anc) = QState::zero(1).unwrap().adjoin_zero().unwrap();
        let outs = state_transfer_sigma_h(&reg, 0, anc, TransferBasis::Standard, Mode::Enumerate).unwrap();
        assert_eq!(outs.len(), 8);
        let all_plus = outs.iter().find(|o| o.branch.bits() == "000").unwrap();
        assert_eq!(all_plus.byproduct, PauliTag::single(Pauli::I));
        let h0 = QState::zero(1).unwrap().apply(&hadamard(), &[0]).unwrap();
        assert!(equal_up_to_global_phase(&all_plus.branch.state, &h0, 1e-12).unwrap().is_some());
        for o in &outs {
            assert!((o.branch.probability - 0.125).abs() < 1e-14);
        }
    }

    #[test]
    fn transfer_rejects_same_wire() {
        let (reg, _) = QState::zero(1).unwrap().adjoin_zero().unwrap();
        assert!(state_transfer_sigma_h(&reg, 1, 1, TransferBasis::Standard, Mode::Enumerate).is_err());
    }

    #[test]
    fn transfer_rejects_used_ancilla() {
        let reg = QState::basis(2, 1).unwrap();
        assert!(transfer_sigma(&reg, 0, 1, Mode::Enumerate).is_err());
    }

    #[test]
    fn sigma_t_on_zero_keeps_zero_up_to_pauli() {
        let zero = QState::zero(1).unwrap();
        let (reg, anc) = zero.adjoin_zero().unwrap();
        for o in implement_sigma_t(&reg, 0, anc, TRoute::Direct, Mode::Enumerate).unwrap() {
            let expect = zero.apply(&o.byproduct.matrix(), &[0]).unwrap();
            assert!(phase_deviation(&o.branch.state, &expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn cnot_on_00_gives_byproducts_only() {
        let (reg, anc) = QState::zero(2).unwrap().adjoin_zero().unwrap();
        let outs = mbqc_cnot(&reg, 0, anc, 1, Mode::Enumerate).unwrap();
        assert_eq!(outs.len(), 16);
        let total: f64 = outs.iter().map(|o| o.branch.probability).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for o in &outs {
            let a = o.byproduct.ops[0].matrix();
            let b = o.byproduct.ops[1].matrix();
            let expect = QState::zero(2).unwrap().apply(&a.tensor(&b).unwrap(), &[0, 1]).unwrap();
            assert!(phase_deviation(&o.branch.state, &expect).unwrap() < 1e-12);
        }
    }

    #[test]
    fn cnot_rejects_collisions() {
        let (reg, anc) = QState::zero(2).unwrap().adjoin_zero().unwrap();
        assert!(mbqc_cnot(&reg, 0, anc, 0, Mode::Enumerate).is_err());
    }

    #[test]
    fn implicit_xprime_examples() {
        let zero = QState::zero(1).unwrap();
        let (reg, anc) = zero.adjoin_zero().unwrap();
        let law = outcome_law(&implicit_xprime(&reg, 0, anc, Mode::Enumerate).unwrap());
        assert!((law[0] - 1.0).abs() < 1e-15 && law[1].abs() < 1e-15);

        let h0 = zero.apply(&hadamard(), &[0]).unwrap();
        let (reg, anc) = h0.adjoin_zero().unwrap();
        let law = outcome_law(&implicit_xprime(&reg, 0, anc, Mode::Enumerate).unwrap());
        assert!((law[0] - 0.5).abs() < 1e-15 && (law[1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn same_side_examples() {
        let h0 = QState::zero(1).unwrap().apply(&hadamard(), &[0]).unwrap();
        let hh = h0.tensor(&h0).unwrap();
        let b = composite_same_side(&hh, (0, 1), Side::Demand, Mode::Enumerate).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcomes[0].sign, Sign::Plus);
        assert!((b[0].probability - 1.0).abs() < 1e-14);
        assert_eq!(b[0].outcomes[0].label, "X⊗X");

        let b = composite_same_side(&QState::zero(2).unwrap(), (0, 1), Side::Supply, Mode::Enumerate).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b[0].outcomes[0].sign, Sign::Plus);
        assert!(composite_same_side(&hh, (1, 1), Side::Supply, Mode::Enumerate).is_err());
    }

    #[test]
    fn walk_examples() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = implement_pauli_randomwalk(Pauli::I, &mut rng).unwrap();
        assert_eq!(w.steps, 0);
        assert_eq!(w.trace, vec![Pauli::I]);
        let w = implement_pauli_randomwalk(Pauli::Y, &mut rng).unwrap();
        assert_eq!(*w.trace.last().unwrap(), Pauli::Y);
        assert_eq!(w.trace.len(), w.steps + 1);
        let stuck = WalkModel { weights: [1.0, 0.0, 0.0, 0.0] };
        assert!(matches!(
            pauli_random_walk(Pauli::I, Pauli::X, &stuck, 50, &mut rng),
            Err(Error::StepCapExceeded { cap: 50 })
        ));
    }

    #[test]
    fn transfer_pairs_are_uniform() {
        let law = transfer_pair_distribution().unwrap();
        for w in law {
            assert!((w - 0.25).abs() < 1e-12);
        }
    }

    #[test]
    fn verify_passes_on_fresh_gates() {
        let r = verify_universality(&GateSet::default(), Exec::Parallel, None);
        for chk in &r.checks {
            assert!(chk.passed, "{} failed: {:e} ({})", chk.name, chk.max_deviation, chk.detail);
        }
        assert_eq!(r.checks.len(), check_names().len());
    }

    #[test]
    fn verify_flags_corrupted_hadamard() {
        let mut g = GateSet::default();
        g.h = g.h.scale(C64::from_polar(1.0, 1e-6));
        let r = verify_universality(&g, Exec::Sequential, None);
        let hnh = r.checks.iter().find(|c| c.name == "hnh").unwrap();
        assert!(!hnh.passed);
        assert!(hnh.max_deviation > 1e-7);
        assert!(r.checks.iter().find(|c| c.name == "x_double_prime_convention").unwrap().passed);
    }

    #[test]
    fn verify_filter() {
        let only = vec!["hnh".to_string()];
        let r = verify_universality(&GateSet::default(), Exec::Sequential, Some(&only));
        assert_eq!(r.checks.len(), 1);
        assert_eq!(r.checks[0].name, "hnh");
    }
}
