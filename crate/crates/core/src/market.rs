//! Continuous-variable market game: trader strategies on a log-price grid,
//! demand/supply distributions, Wigner pseudo-probabilities and the
//! transaction projection.
//!
//! For a trader with log-price offset `E(ln c)`, the demand variable is
//! `q = ln c − E(ln c)` and the supply variable is `p = E(ln c) − ln c`.
//! The momentum representation is
//! `ψ̃(p) = (2πħ)^{-1/2} ∫ e^{ipq/ħ} ψ(q) dq`.

use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use std::io::{Read, Write};
use std::sync::Arc;

use crate::circuits::IMPOSSIBLE_P;
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::qcore::{c, C64};

const MIN_POINTS: usize = 64;
/// Largest amplitude allowed on the first or last grid node.
pub const BOUNDARY_AMPLITUDE: f64 = 1e-12;
/// Mass in the outer sixteenths of the grid above which a Wigner grid is
/// flagged as possibly aliased.
pub const ALIASING_MASS: f64 = 1e-8;

fn default_hbar() -> f64 {
    1.0
}

/// Uniform log-price grid. Nodes are `q_j = q_min + j·Δq` for
/// `j < n_points`, with `Δq = (q_max − q_min)/n_points`; the grid is
/// periodic, so `q_max` itself is not a node. The conjugate grid is
/// `p_k = (k − n/2)·Δp` with `Δp = 2πħ/(n·Δq)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub q_min: f64,
    pub q_max: f64,
    pub n_points: usize,
    #[serde(default = "default_hbar")]
    pub hbar: f64,
}

impl GridSpec {
    pub fn new(q_min: f64, q_max: f64, n_points: usize) -> Result<Self> {
        let g = Self {
            q_min,
            q_max,
            n_points,
            hbar: 1.0,
        };
        g.validate()?;
        Ok(g)
    }

    /// Symmetric grid centred on zero.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    /// Grid with `Δq = Δp` (for ħ = 1), on which the unit Gaussian looks the
    /// same in both representations.
    pub fn self_dual(n_points: usize) -> Result<Self> {
        let dq = (2.0 * PI / n_points as f64).sqrt();
        Self::symmetric(0.5 * n_points as f64 * dq, n_points)
    }

    pub fn with_hbar(mut self, hbar: f64) -> Result<Self> {
        self.hbar = hbar;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.q_min.is_finite() && self.q_max.is_finite() && self.q_min < self.q_max) {
            return Err(Error::invalid("grid needs finite q_min < q_max"));
        }
        if self.n_points < MIN_POINTS || !self.n_points.is_power_of_two() {
            return Err(Error::invalid(format!(
                "n_points must be a power of two ≥ {MIN_POINTS}, got {}",
                self.n_points
            )));
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::invalid("hbar must be positive"));
        }
        Ok(())
    }

    pub fn h_e(&self) -> f64 {
        2.0 * PI * self.hbar
    }

    pub fn dq(&self) -> f64 {
        (self.q_max - self.q_min) / self.n_points as f64
    }

    pub fn dp(&self) -> f64 {
        self.h_e() / (self.n_points as f64 * self.dq())
    }

    pub fn q(&self, j: usize) -> f64 {
        self.q_min + j as f64 * self.dq()
    }

    pub fn p(&self, k: usize) -> f64 {
        (k as f64 - 0.5 * self.n_points as f64) * self.dp()
    }

    pub fn q_nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|j| self.q(j)).collect()
    }

    pub fn p_nodes(&self) -> Vec<f64> {
        (0..self.n_points).map(|k| self.p(k)).collect()
    }

    /// Same range with twice the nodes.
    pub fn refined(&self) -> Self {
        Self {
            n_points: 2 * self.n_points,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    Position,
    Momentum,
}

/// A trader strategy sampled on the q nodes (position basis) or on the
/// p nodes (momentum basis) of its grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveFunction1D {
    pub grid: GridSpec,
    pub basis: Basis,
    /// `E(ln c)` of the trader; prices enter as `ln c − offset`.
    pub offset: f64,
    pub samples: Vec<C64>,
}

fn plans(n: usize) -> (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>) {
    let mut planner = FftPlanner::new();
    (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
}

fn signed_freq(k: usize, n: usize) -> f64 {
    if k <= n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Evaluates the trigonometric interpolant of periodic samples at
/// `x_j + shift·Δ` for every node `j`.
fn spectral_shift(v: &[C64], shift: f64) -> Vec<C64> {
    let n = v.len();
    let (fwd, inv) = plans(n);
    let mut buf = v.to_vec();
    fwd.process(&mut buf);
    for (k, z) in buf.iter_mut().enumerate() {
        let f = if k == n / 2 {
            c((PI * shift).cos(), 0.0)
        } else {
            C64::from_polar(1.0, 2.0 * PI * signed_freq(k, n) * shift / n as f64)
        };
        *z *= f / n as f64;
    }
    inv.process(&mut buf);
    buf
}

/// `∫_{x0}^{x} f` for the trigonometric interpolant of real periodic
/// samples `f` with spacing `step` starting at `x0`.
fn spectral_cumulative(f: &[f64], x0: f64, step: f64, x: f64) -> f64 {
    let n = f.len();
    let period = n as f64 * step;
    let total: f64 = f.iter().sum::<f64>() * step;
    if x <= x0 {
        return 0.0;
    }
    if x >= x0 + period {
        return total;
    }
    let (fwd, _) = plans(n);
    let mut buf: Vec<C64> = f.iter().map(|&v| c(v, 0.0)).collect();
    fwd.process(&mut buf);
    let t = x - x0;
    let mut acc = buf[0].re / n as f64 * t;
    for (k, z) in buf.iter().enumerate().skip(1) {
        let coef = z / n as f64;
        if k == n / 2 {
            let w = PI * n as f64 / period;
            acc += coef.re * (w * t).sin() / w;
            continue;
        }
        let w = 2.0 * PI * signed_freq(k, n) / period;
        let e = C64::from_polar(1.0, w * t) - 1.0;
        acc += (coef * e / c(0.0, w)).re;
    }
    acc
}

impl WaveFunction1D {
    /// Normalizes `samples` so that `Σ|ψ|²·Δ = 1`.
    pub fn from_samples(grid: GridSpec, basis: Basis, samples: Vec<C64>) -> Result<Self> {
        grid.validate()?;
        if samples.len() != grid.n_points {
            return Err(Error::DimensionMismatch {
                expected: grid.n_points,
                found: samples.len(),
            });
        }
        let mut psi = Self {
            grid,
            basis,
            offset: 0.0,
            samples,
        };
        let norm = psi.norm_sqr();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("strategy has zero or non-finite norm"));
        }
        let s = norm.sqrt().recip();
        psi.samples.iter_mut().for_each(|z| *z *= s);
        Ok(psi)
    }

    pub fn from_fn<F: Fn(f64) -> C64>(grid: GridSpec, f: F) -> Result<Self> {
        let samples = grid.q_nodes().into_iter().map(f).collect();
        Self::from_samples(grid, Basis::Position, samples)
    }

    pub fn with_offset(mut self, offset: f64) -> Self {
        self.offset = offset;
        self
    }

    pub fn step(&self) -> f64 {
        match self.basis {
            Basis::Position => self.grid.dq(),
            Basis::Momentum => self.grid.dp(),
        }
    }

    pub fn nodes(&self) -> Vec<f64> {
        match self.basis {
            Basis::Position => self.grid.q_nodes(),
            Basis::Momentum => self.grid.p_nodes(),
        }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.density().iter().sum::<f64>() * self.step()
    }

    pub fn density(&self) -> Vec<f64> {
        self.samples.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Expectation of the basis variable under `|ψ|²`.
    pub fn mean(&self) -> f64 {
        let d = self.density();
        let m: f64 = self.nodes().iter().zip(&d).map(|(x, w)| x * w).sum();
        m / d.iter().sum::<f64>()
    }

    pub fn variance(&self) -> f64 {
        let mu = self.mean();
        let d = self.density();
        let v: f64 = self.nodes().iter().zip(&d).map(|(x, w)| (x - mu).powi(2) * w).sum();
        v / d.iter().sum::<f64>()
    }

    /// Fraction of `|ψ|²` in the outer sixteenth of the grid on each side.
    pub fn boundary_mass(&self) -> f64 {
        let d = self.density();
        let n = d.len();
        let edge = n / 16;
        let outer: f64 = d[..edge].iter().chain(&d[n - edge..]).sum();
        outer / d.iter().sum::<f64>()
    }

    pub fn to_momentum(&self) -> WaveFunction1D {
        if self.basis == Basis::Momentum {
            return self.clone();
        }
        let g = self.grid;
        let n = g.n_points;
        let (_, inv) = plans(n);
        let mut buf: Vec<C64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(j, z)| if j % 2 == 1 { -z } else { *z })
            .collect();
        inv.process(&mut buf);
        let scale = g.dq() / g.h_e().sqrt();
        for (k, z) in buf.iter_mut().enumerate() {
            *z *= C64::from_polar(scale, g.p(k) * g.q_min / g.hbar);
        }
        WaveFunction1D {
            grid: g,
            basis: Basis::Momentum,
            offset: self.offset,
            samples: buf,
        }
    }

    pub fn to_position(&self) -> WaveFunction1D {
        if self.basis == Basis::Position {
            return self.clone();
        }
        let g = self.grid;
        let n = g.n_points;
        let (fwd, _) = plans(n);
        let mut buf: Vec<C64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(k, z)| z * C64::from_polar(1.0, -g.p(k) * g.q_min / g.hbar))
            .collect();
        fwd.process(&mut buf);
        let scale = g.dp() / g.h_e().sqrt();
        for (j, z) in buf.iter_mut().enumerate() {
            *z *= if j % 2 == 1 { -scale } else { scale };
        }
        WaveFunction1D {
            grid: g,
            basis: Basis::Position,
            offset: self.offset,
            samples: buf,
        }
    }

    /// Shifts the strategy so that `E(q) = 0`, moving the shift into
    /// `offset`.
    pub fn recenter(&self) -> WaveFunction1D {
        let pos = self.to_position();
        let mu = pos.mean();
        let samples = spectral_shift(&pos.samples, mu / pos.grid.dq());
        let out = WaveFunction1D {
            samples,
            offset: pos.offset + mu,
            ..pos
        };
        match self.basis {
            Basis::Position => out,
            Basis::Momentum => out.to_momentum(),
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let psi: Self = serde_json::from_str(s)?;
        psi.grid.validate()?;
        if psi.samples.len() != psi.grid.n_points {
            return Err(Error::DimensionMismatch {
                expected: psi.grid.n_points,
                found: psi.samples.len(),
            });
        }
        Ok(psi)
    }

    /// Writes `q,re,im` (or `p,re,im`) rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let var = match self.basis {
            Basis::Position => "q",
            Basis::Momentum => "p",
        };
        wr.write_record([var, "re", "im"])?;
        for (x, z) in self.nodes().iter().zip(&self.samples) {
            wr.write_record([x.to_string(), z.re.to_string(), z.im.to_string()])?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a position-basis table written by [`write_csv`](Self::write_csv),
    /// rebuilding the grid from the node column (ħ = 1).
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        if rd.headers()?.get(0) != Some("q") {
            return Err(Error::invalid("expected a position-basis table with a `q` column"));
        }
        let mut xs = Vec::new();
        let mut samples = Vec::new();
        for rec in rd.deserialize() {
            let (x, re, im): (f64, f64, f64) = rec?;
            xs.push(x);
            samples.push(c(re, im));
        }
        if xs.len() < 2 {
            return Err(Error::invalid("table has fewer than two rows"));
        }
        let dq = xs[1] - xs[0];
        let grid = GridSpec::new(xs[0], xs[0] + dq * xs.len() as f64, xs.len())?;
        Self::from_samples(grid, Basis::Position, samples)
    }
}

/// Normalized Gaussian `ψ ∝ e^{−(q−mean)²/(2·spread²)}`. With `center`,
/// the strategy is built at `q = 0` and `mean` becomes its log-price offset.
pub fn make_gaussian_strategy(mean: f64, spread: f64, grid: &GridSpec, center: bool) -> Result<WaveFunction1D> {
    if !(spread > 0.0 && spread.is_finite()) || !mean.is_finite() {
        return Err(Error::invalid(format!("need finite mean and spread > 0, got {mean}, {spread}")));
    }
    let mu = if center { 0.0 } else { mean };
    let psi = WaveFunction1D::from_fn(*grid, |q| c((-(q - mu).powi(2) / (2.0 * spread * spread)).exp(), 0.0))?;
    check_truncation(&psi)?;
    Ok(if center { psi.with_offset(mean) } else { psi })
}

fn check_truncation(psi: &WaveFunction1D) -> Result<()> {
    for rep in [psi.to_position(), psi.to_momentum()] {
        let s = &rep.samples;
        if s[0].norm().max(s[s.len() - 1].norm()) > BOUNDARY_AMPLITUDE {
            return Err(Error::Truncation {
                boundary_mass: rep.boundary_mass(),
            });
        }
    }
    Ok(())
}

/// Probability that the trader buys at price `c` or lower:
/// `∫_{−∞}^{ln c − offset} |ψ(q)|² dq / ⟨ψ|ψ⟩`.
pub fn demand_cdf(psi: &WaveFunction1D, price: f64) -> Result<f64> {
    check_price(price)?;
    let pos = psi.to_position();
    Ok(cdf(&pos.density(), pos.grid.q_min, pos.grid.dq(), price.ln() - pos.offset))
}

/// Probability that the trader sells at price `c` or higher:
/// `∫_{−∞}^{offset − ln c} |ψ̃(p)|² dp / ⟨ψ|ψ⟩`.
pub fn supply_cdf(psi: &WaveFunction1D, price: f64) -> Result<f64> {
    check_price(price)?;
    let mom = psi.to_momentum();
    Ok(cdf(&mom.density(), mom.grid.p(0), mom.grid.dp(), mom.offset - price.ln()))
}

fn check_price(price: f64) -> Result<()> {
    if price > 0.0 && !price.is_nan() {
        Ok(())
    } else {
        Err(Error::invalid(format!("price must be positive, got {price}")))
    }
}

fn cdf(density: &[f64], x0: f64, step: f64, x: f64) -> f64 {
    let total = density.iter().sum::<f64>() * step;
    (spectral_cumulative(density, x0, step, x) / total).clamp(0.0, 1.0)
}

/// `W(p, q)` on the `n × n` grid, row `k` holding `p_k`, column `j`
/// holding `q_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WignerGrid {
    pub grid: GridSpec,
    pub values: Vec<f64>,
    /// Largest discarded imaginary part.
    pub max_imag: f64,
    /// Set when a source strategy had boundary mass above [`ALIASING_MASS`].
    pub aliasing: bool,
}

impl WignerGrid {
    pub fn h_e(&self) -> f64 {
        self.grid.h_e()
    }

    pub fn n(&self) -> usize {
        self.grid.n_points
    }

    pub fn get(&self, k: usize, j: usize) -> f64 {
        self.values[k * self.n() + j]
    }

    pub fn row(&self, k: usize) -> &[f64] {
        let n = self.n();
        &self.values[k * n..(k + 1) * n]
    }

    pub fn normalization(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.dp() * self.grid.dq()
    }

    /// `∫ W dp` at each `q_j`.
    pub fn q_marginal(&self) -> Vec<f64> {
        let n = self.n();
        let dp = self.grid.dp();
        (0..n).map(|j| (0..n).map(|k| self.get(k, j)).sum::<f64>() * dp).collect()
    }

    /// `∫ W dq` at each `p_k`.
    pub fn p_marginal(&self) -> Vec<f64> {
        let dq = self.grid.dq();
        (0..self.n()).map(|k| self.row(k).iter().sum::<f64>() * dq).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_abs_diff(&self, other: &WignerGrid) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let w: Self = serde_json::from_str(s)?;
        w.grid.validate()?;
        if w.values.len() != w.n() * w.n() {
            return Err(Error::DimensionMismatch {
                expected: w.n() * w.n(),
                found: w.values.len(),
            });
        }
        Ok(w)
    }

    /// Header `p\q,q_0,…`, then one row per `p_k`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        let mut header = vec!["p\\q".to_string()];
        header.extend(self.grid.q_nodes().iter().map(f64::to_string));
        wr.write_record(&header)?;
        for k in 0..self.n() {
            let mut rec = vec![self.grid.p(k).to_string()];
            rec.extend(self.row(k).iter().map(f64::to_string));
            wr.write_record(&rec)?;
        }
        wr.flush()?;
        Ok(())
    }

    /// Reads a table written by [`write_csv`](Self::write_csv); ħ is
    /// recovered from the node spacings.
    pub fn read_csv<R: Read>(r: R) -> Result<Self> {
        let mut rd = csv::Reader::from_reader(r);
        let qs: Vec<f64> = rd
            .headers()?
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>().map_err(|e| Error::invalid(format!("bad q node {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        let n = qs.len();
        let mut ps = Vec::with_capacity(n);
        let mut values = Vec::with_capacity(n * n);
        for rec in rd.deserialize() {
            let row: Vec<f64> = rec?;
            if row.len() != n + 1 {
                return Err(Error::DimensionMismatch {
                    expected: n + 1,
                    found: row.len(),
                });
            }
            ps.push(row[0]);
            values.extend_from_slice(&row[1..]);
        }
        if n < 2 || ps.len() != n {
            return Err(Error::invalid("Wigner table must be square with at least two nodes"));
        }
        let dq = qs[1] - qs[0];
        let dp = ps[1] - ps[0];
        let hbar = n as f64 * dq * dp / (2.0 * PI);
        let grid = GridSpec::new(qs[0], qs[0] + dq * n as f64, n)?.with_hbar(hbar)?;
        Ok(Self {
            grid,
            values,
            max_imag: 0.0,
            aliasing: false,
        })
    }
}

/// `W(p,q) = h⁻¹ ∫ e^{ipx/ħ} ψ(q+x/2) ψ*(q−x/2) dx / ⟨ψ|ψ⟩`.
///
/// The integrand is sampled at `x = mΔq`, `m ∈ [−n, n)`, using a spectral
/// half-step interpolation of ψ, and folded onto the `n` momentum nodes.
pub fn wigner(psi: &WaveFunction1D, exec: Exec) -> Result<WignerGrid> {
    let pos = psi.to_position();
    let g = pos.grid;
    let n = g.n_points;
    let norm = pos.norm_sqr();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::invalid("strategy has zero norm"));
    }
    let half = spectral_shift(&pos.samples, 0.5);
    // fine[i] = ψ(q_min + iΔq/2)
    let fine: Vec<C64> = (0..2 * n).map(|i| if i % 2 == 0 { pos.samples[i / 2] } else { half[i / 2] }).collect();
    let at = |i: i64| -> C64 {
        if (0..2 * n as i64).contains(&i) {
            fine[i as usize]
        } else {
            C64::new(0.0, 0.0)
        }
    };
    let (_, inv) = plans(n);
    let scale = g.dq() / (g.h_e() * norm);
    let cols: Vec<(Vec<f64>, f64)> = exec.map(n, |j| {
        let mut folded = vec![C64::new(0.0, 0.0); n];
        let centre = 2 * j as i64;
        for m in -(n as i64)..(n as i64) {
            let prod = at(centre + m) * at(centre - m).conj();
            folded[m.rem_euclid(n as i64) as usize] += prod;
        }
        for (r, z) in folded.iter_mut().enumerate() {
            if r % 2 == 1 {
                *z = -*z;
            }
        }
        inv.process(&mut folded);
        let max_imag = folded.iter().map(|z| (z.im * scale).abs()).fold(0.0, f64::max);
        (folded.iter().map(|z| z.re * scale).collect(), max_imag)
    });
    let mut values = vec![0.0; n * n];
    let mut max_imag: f64 = 0.0;
    for (j, (col, im)) in cols.into_iter().enumerate() {
        for (k, v) in col.into_iter().enumerate() {
            values[k * n + j] = v;
        }
        max_imag = max_imag.max(im);
    }
    let aliasing = pos.boundary_mass() > ALIASING_MASS || pos.to_momentum().boundary_mass() > ALIASING_MASS;
    Ok(WignerGrid {
        grid: g,
        values,
        max_imag,
        aliasing,
    })
}

/// `ρ(p,q) = Σ wₙ Wₙ(p,q)` with `wₙ ≥ 0`, `Σ wₙ = 1`.
pub fn mix_wigner(components: &[(f64, WaveFunction1D)], exec: Exec) -> Result<WignerGrid> {
    let Some((_, first)) = components.first() else {
        return Err(Error::invalid("mixture needs at least one component"));
    };
    let total: f64 = components.iter().map(|(w, _)| w).sum();
    if components.iter().any(|(w, _)| w.is_nan() || *w < 0.0) || (total - 1.0).abs() > 1e-12 {
        return Err(Error::invalid(format!(
            "mixture weights must be nonnegative and sum to 1, got sum {total}"
        )));
    }
    if components.iter().any(|(_, psi)| psi.grid != first.grid) {
        return Err(Error::invalid("mixture components must share one grid"));
    }
    let grids = components
        .iter()
        .map(|(_, psi)| wigner(psi, exec))
        .collect::<Result<Vec<_>>>()?;
    let mut out = WignerGrid {
        grid: first.grid,
        values: vec![0.0; grids[0].values.len()],
        max_imag: 0.0,
        aliasing: false,
    };
    for ((w, _), wg) in components.iter().zip(&grids) {
        for (o, v) in out.values.iter_mut().zip(&wg.values) {
            *o += w * v;
        }
        out.max_imag = out.max_imag.max(wg.max_imag);
        out.aliasing |= wg.aliasing;
    }
    Ok(out)
}

/// One side of the division σ for a single trader, in that trader's
/// centred variables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Trade {
    /// Buy at `q`, i.e. at price `exp(q + offset)`.
    Buy(f64),
    /// Sell at `p`, i.e. at price `exp(offset − p)`.
    Sell(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transaction {
    pub trade: Trade,
    /// Grid node actually used.
    pub node: f64,
    /// `node − requested value`.
    pub rounding: f64,
    /// `|⟨x|ψ⟩|²·Δx / ⟨ψ|ψ⟩` at the node.
    pub amplitude: f64,
    /// Grid delta `1/√Δx` at the node, in the basis of the trade.
    pub strategy: WaveFunction1D,
}

fn snap(nodes: &[f64], step: f64, x: f64) -> Result<usize> {
    let lo = nodes[0] - 0.5 * step;
    let hi = nodes[nodes.len() - 1] + 0.5 * step;
    if !(lo..=hi).contains(&x) {
        return Err(Error::invalid(format!("price parameter {x} lies outside the grid [{lo}, {hi}]")));
    }
    let i = ((x - nodes[0]) / step).round() as isize;
    Ok(i.clamp(0, nodes.len() as isize - 1) as usize)
}

/// Applies `T_σ`: buyers are projected onto a q node, sellers onto a
/// p node. Off-node values snap to the nearest node.
pub fn transaction_project(traders: &[WaveFunction1D], division: &[Trade], exec: Exec) -> Result<Vec<Transaction>> {
    if traders.len() != division.len() {
        return Err(Error::DimensionMismatch {
            expected: traders.len(),
            found: division.len(),
        });
    }
    exec.map(traders.len(), |i| {
        let (rep, value) = match division[i] {
            Trade::Buy(q) => (traders[i].to_position(), q),
            Trade::Sell(p) => (traders[i].to_momentum(), p),
        };
        let nodes = rep.nodes();
        let step = rep.step();
        let idx = snap(&nodes, step, value)?;
        let amplitude = rep.samples[idx].norm_sqr() * step / rep.norm_sqr();
        if amplitude.is_nan() || amplitude < IMPOSSIBLE_P {
            return Err(Error::ImpossibleTransaction { trader: i, amplitude });
        }
        let mut samples = vec![C64::new(0.0, 0.0); nodes.len()];
        samples[idx] = c(step.sqrt().recip(), 0.0);
        Ok(Transaction {
            trade: division[i],
            node: nodes[idx],
            rounding: nodes[idx] - value,
            amplitude,
            strategy: WaveFunction1D {
                grid: rep.grid,
                basis: rep.basis,
                offset: rep.offset,
                samples,
            },
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> GridSpec {
        GridSpec::symmetric(16.0, 256).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(1.0, 0.0, 64).is_err());
        assert!(GridSpec::new(0.0, 1.0, 100).is_err());
        assert!(GridSpec::new(0.0, 1.0, 32).is_err());
        let g = GridSpec::self_dual(64).unwrap();
        assert!((g.dq() - g.dp()).abs() < 1e-15);
        assert_eq!(g.q(32), 0.0);
        assert_eq!(g.p(32), 0.0);
    }

    #[test]
    fn gaussian_moments() {
        let psi = make_gaussian_strategy(0.0, 1.0, &grid(), true).unwrap();
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        assert!(psi.mean().abs() < 1e-12);
        assert!((psi.variance() - 0.5).abs() < 1e-10);
        for j in 1..128 {
            assert!((psi.samples[128 + j] - psi.samples[128 - j]).norm() < 1e-12);
        }
    }

    #[test]
    fn narrow_grid_is_truncation() {
        let g = GridSpec::symmetric(3.0, 64).unwrap();
        assert!(matches!(
            make_gaussian_strategy(0.0, 1.0, &g, true),
            Err(Error::Truncation { .. })
        ));
    }

    #[test]
    fn centering_moves_mean_into_offset() {
        let psi = make_gaussian_strategy(2.0, 1.0, &grid(), false).unwrap();
        assert!((psi.mean() - 2.0).abs() < 1e-10);
        let centred = psi.recenter();
        assert!(centred.mean().abs() < 1e-8);
        assert!((centred.offset - 2.0).abs() < 1e-10);
        let direct = make_gaussian_strategy(2.0, 1.0, &grid(), true).unwrap();
        for (a, b) in centred.samples.iter().zip(&direct.samples) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn fourier_round_trip_and_parseval() {
        let psi = make_gaussian_strategy(0.7, 1.3, &grid(), false).unwrap();
        let mom = psi.to_momentum();
        assert!((mom.norm_sqr() - 1.0).abs() < 1e-10);
        let back = mom.to_position();
        for (a, b) in psi.samples.iter().zip(&back.samples) {
            assert!((a - b).norm() < 1e-10);
        }
    }

    #[test]
    fn unit_gaussian_is_self_dual() {
        let psi = make_gaussian_strategy(0.0, 1.0, &grid(), true).unwrap();
        let mom = psi.to_momentum();
        let g = grid();
        for k in 0..g.n_points {
            let p = g.p(k);
            let expect = PI.powf(-0.25) * (-p * p / 2.0).exp();
            assert!((mom.samples[k] - c(expect, 0.0)).norm() < 1e-10, "k={k}");
        }
    }

    #[test]
    fn cdf_examples() {
        let psi = make_gaussian_strategy(0.0, 1.0, &grid(), true).unwrap();
        assert!((demand_cdf(&psi, 1.0).unwrap() - 0.5).abs() < 1e-8);
        assert!((supply_cdf(&psi, 1.0).unwrap() - 0.5).abs() < 1e-8);
        assert!(demand_cdf(&psi, 1e-30).unwrap() < 1e-12);
        assert!((demand_cdf(&psi, 1e30).unwrap() - 1.0).abs() < 1e-12);
        assert!(demand_cdf(&psi, 0.0).is_err());
        assert!(supply_cdf(&psi, -1.0).is_err());
    }

    #[test]
    fn wigner_single_component_mix_is_identity() {
        let g = GridSpec::symmetric(12.0, 64).unwrap();
        let psi = make_gaussian_strategy(0.0, 1.0, &g, true).unwrap();
        let w = wigner(&psi, Exec::Sequential).unwrap();
        let m = mix_wigner(&[(1.0, psi.clone())], Exec::Parallel).unwrap();
        assert_eq!(w, m);
        assert!(mix_wigner(&[(0.6, psi.clone()), (0.6, psi.clone())], Exec::Sequential).is_err());
        assert!(mix_wigner(&[(1.5, psi.clone()), (-0.5, psi)], Exec::Sequential).is_err());
    }

    #[test]
    fn transaction_examples() {
        let g = GridSpec::self_dual(64).unwrap();
        let psi = make_gaussian_strategy(0.0, 1.0, &g, true).unwrap();
        let t = transaction_project(&[psi.clone(), psi.clone()], &[Trade::Buy(0.0), Trade::Sell(0.01)], Exec::Sequential)
            .unwrap();
        let peak = psi.density().into_iter().fold(0.0, f64::max);
        assert!((t[0].amplitude - peak * g.dq()).abs() < 1e-15);
        assert!((t[0].amplitude - t[1].amplitude).abs() < 1e-12);
        assert!((t[1].rounding + 0.01).abs() < 1e-15);
        let again = transaction_project(&[t[0].strategy.clone()], &[Trade::Buy(0.0)], Exec::Sequential).unwrap();
        assert!((again[0].amplitude - 1.0).abs() < 1e-12);
        let far = transaction_project(std::slice::from_ref(&psi), &[Trade::Buy(9.0)], Exec::Sequential);
        assert!(matches!(far, Err(Error::ImpossibleTransaction { .. })));
        assert!(transaction_project(&[psi], &[Trade::Buy(100.0)], Exec::Sequential).is_err());
    }

    #[test]
    fn csv_round_trips() {
        let g = GridSpec::symmetric(12.0, 64).unwrap();
        let psi = make_gaussian_strategy(0.0, 1.0, &g, true).unwrap();
        let mut buf = Vec::new();
        psi.write_csv(&mut buf).unwrap();
        let back = WaveFunction1D::read_csv(&buf[..]).unwrap();
        assert_eq!(back.grid.n_points, 64);
        assert!((back.grid.dq() - g.dq()).abs() < 1e-12);
        let w = wigner(&psi, Exec::Sequential).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("p\\q,"));
        let wb = WignerGrid::read_csv(&buf[..]).unwrap();
        assert!(wb.max_abs_diff(&w) == 0.0);
        assert!((wb.grid.hbar - 1.0).abs() < 1e-12);
    }
}
