//! Discrete game protocols: Newcomb circuits, GVW quantum gambling and
//! quantum finite automata.
//!
//! In the GVW game the particle's box states are `|a⟩ = |0⟩` and
//! `|b⟩ = |1⟩`. Opening box B is an X' measurement (outcome −1 means the
//! particle was found), and Bob's verification projects onto
//! `|ψ₀⟩ = (|a⟩ + |b⟩)/√2`, the +1 eigenstate of X, so outcome −1 detects
//! a cheat. Alice's cheats are restricted to real single-particle states
//! `cos θ|a⟩ + sin θ|b⟩`. The "box A is empty" check after a successful
//! opening is a no-op for such states.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::f64::consts::FRAC_PI_2;

use crate::circuits::{
    hadamard, measure_enumerate, measure_sample, observable, GateSet, Named, Sign, Switch,
};
use crate::error::{Error, Result};
use crate::exec::{chunks, substream, Exec};
use crate::qcore::{c, Operator, QState, ALGEBRAIC_TOL};

/// What Omega wires into the lower line of the Newcomb circuit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Breaker {
    Absent,
    /// The I/NOT circuit breaker, before the alliance.
    Switch(Switch),
    /// A pair of H gates around the alliance.
    Qutrojan,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewcombConfig {
    /// Upper wire: 1 for male tactics, 0 for female tactics.
    pub control: u8,
    pub breaker: Breaker,
}

impl NewcombConfig {
    pub fn new(control: u8, breaker: Breaker) -> Result<Self> {
        if control > 1 {
            return Err(Error::invalid(format!("control must be 0 or 1, got {control}")));
        }
        Ok(Self { control, breaker })
    }
}

/// Exact law of the lower-qubit measurement.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NewcombOutcome {
    pub p0: f64,
    pub p1: f64,
}

fn newcomb_state(cfg: &NewcombConfig) -> Result<QState> {
    let gates = GateSet::default();
    let mut s = QState::basis(2, (cfg.control as usize) << 1)?;
    match cfg.breaker {
        Breaker::Absent => {
            s = s.apply(&gates.cnot_alliance, &[0, 1])?;
        }
        Breaker::Switch(sw) => {
            s = s.apply(&gates.breaker(sw), &[1])?;
            s = s.apply(&gates.cnot_alliance, &[0, 1])?;
        }
        Breaker::Qutrojan => {
            s = s.apply(&hadamard(), &[1])?;
            s = s.apply(&gates.cnot_alliance, &[0, 1])?;
            s = s.apply(&hadamard(), &[1])?;
        }
    }
    Ok(s)
}

pub fn newcomb_run(cfg: &NewcombConfig) -> Result<NewcombOutcome> {
    let NewcombConfig { control, breaker } = *cfg;
    NewcombConfig::new(control, breaker)?;
    let s = newcomb_state(cfg)?;
    let mut out = NewcombOutcome { p0: 0.0, p1: 0.0 };
    for b in measure_enumerate(&s, &observable(Named::XPrime), &[1])? {
        match b.outcomes[0].sign {
            Sign::Plus => out.p0 += b.probability,
            Sign::Minus => out.p1 += b.probability,
        }
    }
    Ok(out)
}

/// Counts from the sampled Newcomb circuit with a random I/NOT breaker.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewcombCounts {
    pub trials: u64,
    /// `[breaker][bit]`, breaker 0 = I, 1 = NOT.
    pub counts: [[u64; 2]; 2],
}

/// Draws the breaker uniformly from {I, NOT} in every trial and samples the
/// lower-qubit measurement.
pub fn newcomb_sample(control: u8, trials: usize, seed: u64, exec: Exec) -> Result<NewcombCounts> {
    let states = [
        newcomb_state(&NewcombConfig::new(control, Breaker::Switch(Switch::Identity))?)?,
        newcomb_state(&NewcombConfig::new(control, Breaker::Switch(Switch::Not))?)?,
    ];
    let xp = observable(Named::XPrime);
    let parts: Vec<Result<[[u64; 2]; 2]>> = exec.map_slice(&chunks(trials), |&(idx, len)| {
        let mut rng = substream(seed, idx);
        let mut counts = [[0u64; 2]; 2];
        for _ in 0..len {
            let sw = Switch::sample(&mut rng) as usize;
            let b = measure_sample(&states[sw], &xp, &[1], &mut rng)?;
            counts[sw][b.outcomes[0].sign.bit() as usize] += 1;
        }
        Ok(counts)
    });
    let mut counts = [[0u64; 2]; 2];
    for p in parts {
        let p = p?;
        for i in 0..2 {
            for j in 0..2 {
                counts[i][j] += p[i][j];
            }
        }
    }
    Ok(NewcombCounts {
        trials: trials as u64,
        counts,
    })
}

/// Configuration of one GVW round.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GambleParams {
    /// Alice prepares `cos θ|a⟩ + sin θ|b⟩`.
    pub theta: f64,
    /// Probability that Bob asks for box A.
    pub p_verify: f64,
    /// Reward for a detected cheat.
    pub reward: f64,
}

impl GambleParams {
    pub fn new(theta: f64, p_verify: f64, reward: f64) -> Result<Self> {
        let p = Self {
            theta,
            p_verify,
            reward,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn honest(p_verify: f64, reward: f64) -> Result<Self> {
        Self::new(std::f64::consts::FRAC_PI_4, p_verify, reward)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.theta.is_finite() {
            return Err(Error::invalid("theta must be finite"));
        }
        if !(0.0..=1.0).contains(&self.p_verify) {
            return Err(Error::invalid(format!(
                "p_verify must lie in [0, 1], got {}",
                self.p_verify
            )));
        }
        if !(self.reward > 0.0 && self.reward.is_finite()) {
            return Err(Error::invalid(format!("reward must be positive, got {}", self.reward)));
        }
        Ok(())
    }

    pub fn state(&self) -> Result<QState> {
        QState::from_amplitudes(vec![c(self.theta.cos(), 0.), c(self.theta.sin(), 0.)])
    }
}

/// Born probabilities of the two measurable events.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EventProbabilities {
    /// Particle found when box B is opened.
    pub found: f64,
    /// Verification finds a state other than `|ψ₀⟩`.
    pub detected: f64,
}

pub fn gvw_event_probabilities(theta: f64) -> Result<EventProbabilities> {
    let params = GambleParams {
        theta,
        p_verify: 0.0,
        reward: 1.0,
    };
    let s = params.state()?;
    let minus = |named: Named| -> Result<f64> {
        Ok(measure_enumerate(&s, &observable(named), &[0])?
            .iter()
            .filter(|b| b.outcomes[0].sign == Sign::Minus)
            .map(|b| b.probability)
            .sum())
    };
    Ok(EventProbabilities {
        found: minus(Named::XPrime)?,
        detected: minus(Named::X)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Payoffs {
    pub bob: f64,
    pub alice: f64,
}

/// Exact expected payoffs from the four events of a round.
pub fn gvw_expected_payoffs(params: &GambleParams) -> Result<Payoffs> {
    params.validate()?;
    let ev = gvw_event_probabilities(params.theta)?;
    let open = ev.found - (1.0 - ev.found);
    let verify = ev.detected * params.reward - (1.0 - ev.detected);
    let bob = (1.0 - params.p_verify) * open + params.p_verify * verify;
    Ok(Payoffs { bob, alice: -bob })
}

/// Monte-Carlo estimate of Bob's payoff.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Simulation {
    pub trials: u64,
    pub found: u64,
    pub empty: u64,
    pub detected: u64,
    pub undetected: u64,
    pub mean_bob: f64,
    pub mean_alice: f64,
    /// Four standard errors of `mean_bob`.
    pub half_width: f64,
}

/// Simulates `trials` rounds. Chunk `i` draws from `substream(seed, i)`,
/// so the result depends only on `(params, trials, seed)`.
pub fn gvw_simulate(params: &GambleParams, trials: usize, seed: u64, exec: Exec) -> Result<Simulation> {
    params.validate()?;
    if trials == 0 {
        return Err(Error::invalid("trials must be at least 1"));
    }
    let ev = gvw_event_probabilities(params.theta)?;
    let p = params.p_verify;
    let parts: Vec<[u64; 4]> = exec.map_slice(&chunks(trials), |&(idx, len)| {
        let mut rng = substream(seed, idx);
        let mut k = [0u64; 4];
        for _ in 0..len {
            if rng.gen::<f64>() < p {
                if rng.gen::<f64>() < ev.detected {
                    k[2] += 1;
                } else {
                    k[3] += 1;
                }
            } else if rng.gen::<f64>() < ev.found {
                k[0] += 1;
            } else {
                k[1] += 1;
            }
        }
        k
    });
    let mut k = [0u64; 4];
    for part in parts {
        for (a, b) in k.iter_mut().zip(part) {
            *a += b;
        }
    }
    let n = trials as f64;
    let r = params.reward;
    let [found, empty, detected, undetected] = k;
    let mean = (found as f64 - empty as f64 - undetected as f64 + r * detected as f64) / n;
    let second = ((found + empty + undetected) as f64 + r * r * detected as f64) / n;
    let var = (second - mean * mean).max(0.0);
    Ok(Simulation {
        trials: trials as u64,
        found,
        empty,
        detected,
        undetected,
        mean_bob: mean,
        mean_alice: -mean,
        half_width: 4.0 * (var / n).sqrt(),
    })
}

/// Golden-section minimization of a unimodal function on `[lo, hi]`.
pub(crate) fn golden_min<F: FnMut(f64) -> f64>(mut f: F, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        }
    }
    // endpoints can win when the minimum sits on the boundary
    let mid = 0.5 * (lo + hi);
    [mid, lo, hi]
        .into_iter()
        .map(|x| (x, f(x)))
        .fold((mid, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0
}

const BRACKET: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BestResponse {
    pub theta: f64,
    pub e_bob: f64,
}

fn bob_payoff(theta: f64, p_verify: f64, reward: f64) -> f64 {
    gvw_expected_payoffs(&GambleParams {
        theta,
        p_verify,
        reward,
    })
    .map(|p| p.bob)
    .unwrap_or(f64::NAN)
}

/// Alice's cheat θ ∈ [0, π/2] minimizing Bob's expected payoff.
pub fn gvw_best_response(p_verify: f64, reward: f64) -> Result<BestResponse> {
    GambleParams::new(0.0, p_verify, reward)?;
    let theta = golden_min(|t| bob_payoff(t, p_verify, reward), 0.0, FRAC_PI_2, BRACKET);
    Ok(BestResponse {
        theta,
        e_bob: bob_payoff(theta, p_verify, reward),
    })
}

/// Value of the game under one move order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrderValue {
    pub p_verify: f64,
    pub theta: f64,
    pub e_bob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GameValues {
    /// Bob commits to `p_verify`, Alice best-responds (max-min).
    pub bob_first: OrderValue,
    /// Alice commits to θ, Bob best-responds (min-max).
    pub alice_first: OrderValue,
}

pub fn gvw_game_values(reward: f64) -> Result<GameValues> {
    GambleParams::new(0.0, 0.0, reward)?;
    let p = golden_min(
        |p| -gvw_best_response(p, reward).map(|b| b.e_bob).unwrap_or(f64::NAN),
        0.0,
        1.0,
        BRACKET,
    );
    let br = gvw_best_response(p, reward)?;
    let bob_first = OrderValue {
        p_verify: p,
        theta: br.theta,
        e_bob: br.e_bob,
    };
    let worst = |t: f64| bob_payoff(t, 0.0, reward).max(bob_payoff(t, 1.0, reward));
    let theta = golden_min(worst, 0.0, FRAC_PI_2, BRACKET);
    let (e0, e1) = (bob_payoff(theta, 0.0, reward), bob_payoff(theta, 1.0, reward));
    let alice_first = OrderValue {
        p_verify: if e1 > e0 { 1.0 } else { 0.0 },
        theta,
        e_bob: e0.max(e1),
    };
    Ok(GameValues {
        bob_first,
        alice_first,
    })
}

/// A `(p_verify, R)` pair whose max-min payoff is within `tol` of zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FairWitness {
    pub reward: f64,
    pub value: OrderValue,
}

/// Scans `R = 10^k`, `k = 0..=12`, for the first reward at which the
/// Bob-first value is within `tol` of zero.
pub fn gvw_fair_witness(tol: f64) -> Result<Option<FairWitness>> {
    for k in 0..=12 {
        let reward = 10f64.powi(k);
        let v = gvw_game_values(reward)?.bob_first;
        if v.e_bob.abs() < tol {
            return Ok(Some(FairWitness { reward, value: v }));
        }
    }
    Ok(None)
}

/// Quantum finite automaton `(S, s₀, α, U)` with an accepting projector.
#[derive(Debug, Clone, PartialEq)]
pub struct Qfa {
    s0: QState,
    transitions: BTreeMap<char, Operator>,
    accept: Operator,
}

impl Qfa {
    pub fn new(s0: QState, transitions: BTreeMap<char, Operator>, accept: Operator) -> Result<Self> {
        let dim = s0.dim();
        for (sym, u) in &transitions {
            if u.dim() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: u.dim(),
                });
            }
            let dev = u.unitary_deviation();
            if dev > ALGEBRAIC_TOL {
                return Err(Error::invalid(format!(
                    "transition for {sym:?} is not unitary (deviation {dev:e})"
                )));
            }
        }
        if accept.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: accept.dim(),
            });
        }
        let idem = (&accept * &accept).max_abs_diff(&accept);
        let herm = accept.hermitian_deviation();
        if idem > ALGEBRAIC_TOL || herm > ALGEBRAIC_TOL {
            return Err(Error::invalid("accepting operator is not a projector"));
        }
        Ok(Self {
            s0,
            transitions,
            accept,
        })
    }

    pub fn alphabet(&self) -> impl Iterator<Item = &char> {
        self.transitions.keys()
    }

    /// `‖P_accept · U_{wₙ} ⋯ U_{w₁} s₀‖²`.
    pub fn run(&self, word: &str) -> Result<f64> {
        let mut v = self.s0.amplitudes().to_vec();
        for sym in word.chars() {
            let u = self.transitions.get(&sym).ok_or(Error::UnknownSymbol(sym))?;
            v = u.apply_vec(&v)?;
        }
        let out = self.accept.apply_vec(&v)?;
        Ok(out.iter().map(|z| z.norm_sqr()).sum())
    }
}

pub fn qfa_run(qfa: &Qfa, word: &str) -> Result<f64> {
    qfa.run(word)
}

/// File form of a [`Qfa`]; complex numbers are `[re, im]` pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QfaSpec {
    pub s0: Vec<[f64; 2]>,
    pub transitions: BTreeMap<char, Vec<Vec<[f64; 2]>>>,
    pub accept: Vec<Vec<[f64; 2]>>,
}

impl QfaSpec {
    pub fn build(&self) -> Result<Qfa> {
        let cx = |p: &[f64; 2]| c(p[0], p[1]);
        let mat = |rows: &Vec<Vec<[f64; 2]>>| {
            Operator::from_rows(&rows.iter().map(|r| r.iter().map(cx).collect()).collect::<Vec<_>>())
        };
        let s0 = QState::from_amplitudes(self.s0.iter().map(cx).collect())?;
        let transitions = self
            .transitions
            .iter()
            .map(|(k, v)| Ok((*k, mat(v)?)))
            .collect::<Result<_>>()?;
        Qfa::new(s0, transitions, mat(&self.accept)?)
    }
}
