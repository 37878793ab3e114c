//! Population-inversion matrix `σ̂3(t)`.
//!
//! `σ̂3` obeys `σ̈ + ν̂²σ = F̂(t)` with `F̂ = γÛ_i†ŜÛ_i`, `γ = 4α²β/ħ²`. The
//! solution is a homogeneous cosine/sine part fixed by `σ̂3(0)` and
//! `(2iα/ħ)Ŝσ̂3(0)` plus a particular part built from the double power
//! series `𝓕_XY` of the integrals `∫₀ᵗ X(xξ)Y(wξ)dξ`.
//!
//! The particular solution and the expanded F-matrix products mix operators
//! from both channels (`ω̂1` next to `ω̂2`, `Ĥ2^{1/4}` next to
//! `√(B̂₊T̂†)`). They are evaluated pair by pair: on the pair formed by the
//! upper level `m` and the lower level `m+1` every factor acts as a scalar,
//! with `ω̂1, ω̂2 → ω_m`, `ν̂1, ν̂2 → ν_m` and all quarter powers and root
//! shifts `→ E_{m+1}^{1/4}`. The lower ground level belongs to no pair and
//! never receives a particular contribution.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::evolution::{self, ModeFrequencies};
use crate::model::{Coupling, LadderSpectrum, ShapeInvariantModel};
use crate::oracle::HeisenbergOracle;
use crate::rep::{self, max_abs, DiagonalOperator, Layout, Phase, TwoChannelOperator};
use crate::C64;

const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// `ν̂1 = 2√(ΩĤ2/ħ)` and `ν̂2 = 2√(ΩĤ1/ħ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RabiFrequencies {
    pub nu1: DiagonalOperator,
    pub nu2: DiagonalOperator,
}

impl RabiFrequencies {
    pub fn new(ladder: &LadderSpectrum, coupling: &Coupling) -> Self {
        let f = |e: f64| 2.0 * (coupling.rabi * e / coupling.hbar).sqrt();
        Self {
            nu1: rep::h2(ladder).map(f),
            nu2: rep::h1(ladder).map(f),
        }
    }

    /// `ν` on the full space: upper entries first.
    pub fn full(&self) -> Vec<f64> {
        self.nu1.values().iter().chain(self.nu2.values()).copied().collect()
    }
}

/// `sin(x)/x`, with a series near the origin.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// F-matrix evaluated three ways.
#[derive(Debug, Clone)]
pub struct FMatrix {
    /// `γÛ_i†ŜÛ_i`.
    pub direct: TwoChannelOperator,
    /// Products of the propagator blocks with `T̂B̂₋`, `Ĉ`, `Ĉ†` as dense matrices.
    pub block: TwoChannelOperator,
    /// Quarter-power forms evaluated pair by pair.
    pub reduced: TwoChannelOperator,
    /// `max(|direct − block|, |direct − reduced|)`.
    pub discrepancy: f64,
}

pub fn f_matrix(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
    phase: Phase,
) -> Result<FMatrix> {
    let layout = Layout::of(ladder);
    let gamma = re(coupling.gamma());
    let u = evolution::paper_propagator(ladder, coupling, t, phase)?;
    let s = rep::build_s(ladder);
    let direct_m = u.adjoint().mul(&s).mul(&u).into_matrix() * gamma;
    let direct = TwoChannelOperator::from_matrix(layout, direct_m)?;

    let freqs = ModeFrequencies::new(ladder, coupling);
    let cos1 = freqs.omega1.map(|w| (w * t).cos()).to_matrix();
    let sin1 = freqs.omega1.map(|w| (w * t).sin()).to_matrix();
    let cos2 = freqs.omega2.map(|w| (w * t).cos()).to_matrix();
    let sin2 = freqs.omega2.map(|w| (w * t).sin()).to_matrix();
    let l = rep::build_shift(ladder).block();
    let lt = l.adjoint();
    let cd = rep::build_cd(ladder, phase);
    let (c, ct) = (&cd.c, cd.c.adjoint());
    let f11 = -(&cos1 * &l * &sin2 * &ct + c * &sin2 * &lt * &cos1) * gamma;
    let f12 = (&cos1 * &l * &cos2 - c * &sin2 * &lt * &sin1 * c) * gamma;
    let f21 = (&cos2 * &lt * &cos1 - &ct * &sin1 * &l * &sin2 * &ct) * gamma;
    let f22 = (&ct * &sin1 * &l * &cos2 + &cos2 * &lt * &sin1 * c) * gamma;
    let block = TwoChannelOperator::from_blocks(layout, &f11, &f12, &f21, &f22)?;

    let mut reduced = PairBlocks::zeros(layout);
    let (w1, w2) = (freqs.omega1.values(), freqs.omega2.values());
    for (m, &e) in ladder.upper_energies().iter().enumerate() {
        let q = e.sqrt().sqrt();
        let (c1, s1) = ((w1[m] * t).cos(), (w1[m] * t).sin());
        let (c2, s2) = ((w2[m + 1] * t).cos(), (w2[m + 1] * t).sin());
        reduced.b11[m] = I * gamma * (q * c2 * s1 * q - q * s1 * c2 * q);
        reduced.b12[m] = gamma * (q * c2 * c1 * q + q * s1 * s2 * q);
        reduced.b21[m] = gamma * (q * c1 * c2 * q + q * s2 * s1 * q);
        reduced.b22[m] = I * gamma * (q * c1 * s2 * q - q * s2 * c1 * q);
    }
    let reduced = reduced.to_operator();
    let discrepancy = direct.max_abs_diff(&block).max(direct.max_abs_diff(&reduced));
    Ok(FMatrix {
        direct,
        block,
        reduced,
        discrepancy,
    })
}

/// Largest mismatch between the direct products `y_j F_jk`, `z_j F_jk` and
/// their expansions into sums of trigonometric products.
pub fn product_expansion_residual(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
    phase: Phase,
) -> Result<f64> {
    let f = f_matrix(ladder, coupling, t, phase)?;
    let pairs = PairBlocks::from_operator(&f.direct);
    let freqs = ModeFrequencies::new(ladder, coupling);
    let rabi = RabiFrequencies::new(ladder, coupling);
    let g = re(coupling.gamma() / 2.0);
    let mut worst: f64 = 0.0;
    for (m, &e) in ladder.upper_energies().iter().enumerate() {
        let q2 = e.sqrt();
        let (w1, w2) = (freqs.omega1.values()[m], freqs.omega2.values()[m + 1]);
        let (n1, n2) = (rabi.nu1.values()[m], rabi.nu2.values()[m + 1]);
        let (c1, s1) = ((w1 * t).cos(), (w1 * t).sin());
        let (c2, s2) = ((w2 * t).cos(), (w2 * t).sin());
        let cm = |n: f64, w: f64| ((n - w) * t).cos();
        let cp = |n: f64, w: f64| ((n + w) * t).cos();
        let sm = |n: f64, w: f64| ((n - w) * t).sin();
        let sp = |n: f64, w: f64| ((n + w) * t).sin();
        let (y1, z1) = ((n1 * t).cos(), (n1 * t).sin());
        let (y2, z2) = ((n2 * t).cos(), (n2 * t).sin());

        let expanded = [
            (
                re(y1) * pairs.b11[m],
                I * g * q2 * (cm(n2, w2) * s1 + cp(n2, w2) * s1)
                    + I * g * q2 * (sm(n1, w1) * c2 - sp(n1, w1) * c2),
            ),
            (
                re(y1) * pairs.b12[m],
                g * q2 * (cm(n2, w2) * c1 + cp(n2, w2) * c1)
                    + g * q2 * (sp(n1, w1) * s2 - sm(n1, w1) * s2),
            ),
            (
                re(y2) * pairs.b21[m],
                g * q2 * (cm(n1, w1) * c2 + cp(n1, w1) * c2)
                    + g * q2 * (sp(n2, w2) * s1 - sm(n2, w2) * s1),
            ),
            (
                re(y2) * pairs.b22[m],
                I * g * q2 * (cm(n1, w1) * s2 + cp(n1, w1) * s2)
                    + I * g * q2 * (sm(n2, w2) * c1 - sp(n2, w2) * c1),
            ),
            (
                re(z1) * pairs.b11[m],
                I * g * q2 * (sm(n2, w2) * s1 + sp(n2, w2) * s1)
                    - I * g * q2 * (cm(n1, w1) * c2 - cp(n1, w1) * c2),
            ),
            (
                re(z1) * pairs.b12[m],
                g * q2 * (sm(n2, w2) * c1 + sp(n2, w2) * c1)
                    - g * q2 * (cp(n1, w1) * s2 - cm(n1, w1) * s2),
            ),
            (
                re(z2) * pairs.b21[m],
                g * q2 * (sm(n1, w1) * c2 + sp(n1, w1) * c2)
                    - g * q2 * (cp(n2, w2) * s1 - cm(n2, w2) * s1),
            ),
            (
                re(z2) * pairs.b22[m],
                I * g * q2 * (sm(n1, w1) * s2 + sp(n1, w1) * s2)
                    - I * g * q2 * (cm(n2, w2) * c1 - cp(n2, w2) * c1),
            ),
        ];
        for (lhs, rhs) in expanded {
            worst = worst.max((lhs - rhs).norm());
        }
    }
    Ok(worst)
}

/// The four channel blocks restricted to the pairs: entry `m` of `b11`
/// sits at (upper m, upper m), of `b12` at (upper m, lower m+1), of `b21`
/// at (lower m+1, upper m) and of `b22` at (lower m+1, lower m+1).
#[derive(Debug, Clone, PartialEq)]
pub struct PairBlocks {
    layout: Layout,
    pub b11: Vec<C64>,
    pub b12: Vec<C64>,
    pub b21: Vec<C64>,
    pub b22: Vec<C64>,
}

impl PairBlocks {
    pub fn zeros(layout: Layout) -> Self {
        let z = vec![C64::new(0.0, 0.0); layout.pairs()];
        Self {
            layout,
            b11: z.clone(),
            b12: z.clone(),
            b21: z.clone(),
            b22: z,
        }
    }

    pub fn from_operator(op: &TwoChannelOperator) -> Self {
        let layout = op.layout();
        let m = op.matrix();
        let mut p = Self::zeros(layout);
        for k in 0..layout.pairs() {
            let (u, l) = (layout.up(k), layout.low(k + 1));
            p.b11[k] = m[(u, u)];
            p.b12[k] = m[(u, l)];
            p.b21[k] = m[(l, u)];
            p.b22[k] = m[(l, l)];
        }
        p
    }

    pub fn to_operator(&self) -> TwoChannelOperator {
        let layout = self.layout;
        let mut m = DMatrix::zeros(layout.dim(), layout.dim());
        for k in 0..layout.pairs() {
            let (u, l) = (layout.up(k), layout.low(k + 1));
            m[(u, u)] = self.b11[k];
            m[(u, l)] = self.b12[k];
            m[(l, u)] = self.b21[k];
            m[(l, l)] = self.b22[k];
        }
        TwoChannelOperator::from_matrix(layout, m).expect("layout preserved")
    }

    pub fn max_abs(&self) -> f64 {
        [&self.b11, &self.b12, &self.b21, &self.b22]
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0, |a, z| a.max(z.norm()))
    }
}

/// Integrand type of `𝓕_XY(t; x, w) = ∫₀ᵗ X(xξ) Y(wξ) dξ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SeriesKind {
    CC,
    CS,
    SC,
    SS,
}

impl SeriesKind {
    pub const ALL: [SeriesKind; 4] = [SeriesKind::CC, SeriesKind::CS, SeriesKind::SC, SeriesKind::SS];

    /// Parity offsets of the two factors: 0 for cosine, 1 for sine.
    fn offsets(self) -> (u32, u32) {
        match self {
            SeriesKind::CC => (0, 0),
            SeriesKind::CS => (0, 1),
            SeriesKind::SC => (1, 0),
            SeriesKind::SS => (1, 1),
        }
    }

    pub fn factors(self) -> (crate::oracle::Trig, crate::oracle::Trig) {
        use crate::oracle::Trig;
        let pick = |o| if o == 0 { Trig::Cos } else { Trig::Sin };
        let (a, b) = self.offsets();
        (pick(a), pick(b))
    }
}

/// Series value with a bound on the omitted terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: f64,
    pub tail_bound: f64,
}

/// `(−1)^k z^{2k+a}/(2k+a)!` for `k = 0..=order`.
fn trig_terms(z: f64, a: u32, order: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(order + 1);
    let mut term = if a == 0 { 1.0 } else { z };
    let mut deg = a as f64;
    for _ in 0..=order {
        out.push(term);
        term *= -z * z / ((deg + 1.0) * (deg + 2.0));
        deg += 2.0;
    }
    out
}

/// Scalar `𝓕_XY(t; x, w)` summed over `m + n ≤ order`, i.e. through total
/// degree `2·order + a + b + 1` in `t`.
///
/// The omitted terms all have degree at least `d = 2(order+1) + a + b` and
/// are bounded by `t Σ_{j ≥ d, step 2} s^j/j!` with `s = (|x|+|w|)t`.
pub fn fxy_scalar(kind: SeriesKind, t: f64, x: f64, w: f64, order: usize) -> Result<SeriesValue> {
    if order < 1 {
        return Err(Error::InvalidOrder);
    }
    let (a, b) = kind.offsets();
    let xs = trig_terms(x * t, a, order);
    let ws = trig_terms(w * t, b, order);
    // Neumaier summation: individual terms can exceed the result by many
    // orders of magnitude at large |x|t.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for (m, xm) in xs.iter().enumerate() {
        for (n, wn) in ws.iter().take(order + 1 - m).enumerate() {
            let deg = (2 * m + 2 * n) as f64 + (a + b) as f64;
            let term = xm * wn * t / (deg + 1.0);
            let s = sum + term;
            comp += if sum.abs() >= term.abs() {
                (sum - s) + term
            } else {
                (term - s) + sum
            };
            sum = s;
        }
    }
    Ok(SeriesValue {
        value: sum + comp,
        tail_bound: series_tail(t, (x.abs() + w.abs()) * t, 2 * (order + 1) + (a + b) as usize),
    })
}

fn series_tail(t: f64, s: f64, d: usize) -> f64 {
    if s == 0.0 {
        return 0.0;
    }
    let df = d as f64;
    let ratio = s * s / ((df + 1.0) * (df + 2.0));
    if ratio >= 1.0 {
        return f64::INFINITY;
    }
    // s^d/d! via logs to stay finite
    let mut log = df * s.ln();
    for k in 2..=d {
        log -= (k as f64).ln();
    }
    t.abs() * log.exp() / (1.0 - ratio)
}

/// Operator-valued `𝓕_XY(t; x̂, ŵ)` for commuting diagonal arguments.
#[derive(Debug, Clone, PartialEq)]
pub struct OperatorSeries {
    pub value: DiagonalOperator,
    /// Largest per-entry tail bound.
    pub tail_bound: f64,
}

pub fn fxy_series(
    kind: SeriesKind,
    t: f64,
    x: &DiagonalOperator,
    w: &DiagonalOperator,
    order: usize,
) -> Result<OperatorSeries> {
    if x.len() != w.len() {
        return Err(Error::Dimension(format!(
            "series arguments have sizes {} and {}",
            x.len(),
            w.len()
        )));
    }
    let mut values = Vec::with_capacity(x.len());
    let mut tail: f64 = 0.0;
    for (&xv, &wv) in x.values().iter().zip(w.values()) {
        let s = fxy_scalar(kind, t, xv, wv, order)?;
        values.push(s.value);
        tail = tail.max(s.tail_bound);
    }
    Ok(OperatorSeries {
        value: DiagonalOperator::new(values),
        tail_bound: tail,
    })
}

/// `fxy_series` on dense matrices, which must be real diagonal.
pub fn fxy_series_matrix(
    kind: SeriesKind,
    t: f64,
    x: &DMatrix<C64>,
    w: &DMatrix<C64>,
    order: usize,
) -> Result<OperatorSeries> {
    fxy_series(
        kind,
        t,
        &DiagonalOperator::from_matrix(x)?,
        &DiagonalOperator::from_matrix(w)?,
        order,
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

/// Scalar `𝓖^(±)_XY(t; p, q, r) = 𝓕_XY(t; p−q, r) ± 𝓕_XY(t; p+q, r)`.
pub fn g_scalar(kind: SeriesKind, sign: Sign, t: f64, p: f64, q: f64, r: f64, order: usize) -> Result<SeriesValue> {
    let lo = fxy_scalar(kind, t, p - q, r, order)?;
    let hi = fxy_scalar(kind, t, p + q, r, order)?;
    let value = match sign {
        Sign::Plus => lo.value + hi.value,
        Sign::Minus => lo.value - hi.value,
    };
    Ok(SeriesValue {
        value,
        tail_bound: lo.tail_bound + hi.tail_bound,
    })
}

/// Operator-valued `𝓖^(±)_XY` for commuting diagonal arguments.
pub fn g_aux(
    kind: SeriesKind,
    sign: Sign,
    t: f64,
    p: &DiagonalOperator,
    q: &DiagonalOperator,
    r: &DiagonalOperator,
    order: usize,
) -> Result<OperatorSeries> {
    if p.len() != q.len() || p.len() != r.len() {
        return Err(Error::Dimension("auxiliary function arguments differ in size".into()));
    }
    let mut values = Vec::with_capacity(p.len());
    let mut tail: f64 = 0.0;
    for k in 0..p.len() {
        let g = g_scalar(kind, sign, t, p.values()[k], q.values()[k], r.values()[k], order)?;
        values.push(g.value);
        tail = tail.max(g.tail_bound);
    }
    Ok(OperatorSeries {
        value: DiagonalOperator::new(values),
        tail_bound: tail,
    })
}

/// Signs in the second terms of the particular solution.
///
/// `Derived` integrates the expanded `y_j F_jk`, `z_j F_jk` products through
/// the variation-of-parameters formula. `AsPrinted` is an older sign
/// pattern that differs in the second terms of the 11, 12 and 21 blocks.
/// It does not solve the driven equation and is kept for comparison.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SignTable {
    #[default]
    Derived,
    AsPrinted,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesOptions {
    pub order: usize,
    pub signs: SignTable,
    /// Tail bounds above this raise the warning flag.
    pub tail_tolerance: f64,
}

impl Default for SeriesOptions {
    fn default() -> Self {
        Self {
            order: 40,
            signs: SignTable::Derived,
            tail_tolerance: 1e-10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ParticularSolution {
    pub blocks: PairBlocks,
    /// Bound on the truncation error of any entry.
    pub tail_bound: f64,
    pub tail_warning: bool,
}

impl ParticularSolution {
    pub fn operator(&self) -> TwoChannelOperator {
        self.blocks.to_operator()
    }
}

/// Series form of the particular solution `σ̂P(t)`.
pub fn particular_solution(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
    options: SeriesOptions,
) -> Result<ParticularSolution> {
    coupling.validate()?;
    if options.order < 1 {
        return Err(Error::InvalidOrder);
    }
    let layout = Layout::of(ladder);
    let freqs = ModeFrequencies::new(ladder, coupling);
    let rabi = RabiFrequencies::new(ladder, coupling);
    let gamma = coupling.gamma();
    let mut blocks = PairBlocks::zeros(layout);
    let mut tail: f64 = 0.0;
    let second = match options.signs {
        SignTable::Derived => [1.0, -1.0, -1.0, -1.0, 1.0],
        SignTable::AsPrinted => [-1.0, 1.0, 1.0, 1.0, -1.0],
    };
    use SeriesKind::*;
    for (m, &e) in ladder.upper_energies().iter().enumerate() {
        let q = e.sqrt().sqrt();
        // channel 1 quantities live on upper m, channel 2 on lower m+1
        let (w1, w2) = (freqs.omega1.values()[m], freqs.omega2.values()[m + 1]);
        let (n1, n2) = (rabi.nu1.values()[m], rabi.nu2.values()[m + 1]);
        let (y1, z1) = ((n1 * t).cos(), (n1 * t).sin());
        let (y2, z2) = ((n2 * t).cos(), (n2 * t).sin());
        let mut g = |kind, sign, p, qq, r| -> Result<f64> {
            let v = g_scalar(kind, sign, t, p, qq, r, options.order)?;
            tail = tail.max(gamma.abs() * q * q * v.tail_bound / n1.min(n2));
            Ok(v.value)
        };
        let a1 = gamma / (2.0 * n1);
        let a2 = gamma / (2.0 * n2);

        let p11 = z2 * g(CS, Sign::Plus, n2, w2, w1)? - y2 * g(SS, Sign::Plus, n2, w2, w1)?;
        let s11 = z1 * g(SC, Sign::Minus, n1, w1, w2)? + second[0] * y1 * g(CC, Sign::Minus, n1, w1, w2)?;
        blocks.b11[m] = I * a1 * (q * p11 * q + q * s11 * q);

        let p12 = z2 * g(CC, Sign::Plus, n2, w2, w1)? - y2 * g(SC, Sign::Plus, n2, w2, w1)?;
        let s12 = z1 * g(SS, Sign::Minus, n1, w1, w2)? + y1 * g(CS, Sign::Minus, n1, w1, w2)?;
        blocks.b12[m] = re(a1 * (q * p12 * q + second[1] * q * s12 * q));

        let p21 = z1 * g(CC, Sign::Plus, n1, w1, w2)? - y1 * g(SC, Sign::Plus, n1, w1, w2)?;
        let s21 = second[2] * z2 * g(SS, Sign::Minus, n2, w2, w1)?
            + second[3] * y2 * g(CS, Sign::Minus, n2, w2, w1)?;
        blocks.b21[m] = re(a2 * (q * p21 * q + q * s21 * q));

        let p22 = z1 * g(CS, Sign::Plus, n1, w1, w2)? - y1 * g(SS, Sign::Plus, n1, w1, w2)?;
        let s22 = z2 * g(SC, Sign::Minus, n2, w2, w1)? + second[4] * y2 * g(CC, Sign::Minus, n2, w2, w1)?;
        blocks.b22[m] = I * a2 * (q * p22 * q + q * s22 * q);
    }
    Ok(ParticularSolution {
        blocks,
        tail_bound: tail,
        tail_warning: tail > options.tail_tolerance,
    })
}

/// `γ√E(1 − cos νt)/ν²` in the off-diagonal blocks: the particular
/// solution of `σ̈ + ν²σ = γŜ` with zero initial data.
pub fn particular_closed_form(ladder: &LadderSpectrum, coupling: &Coupling, t: f64) -> PairBlocks {
    let layout = Layout::of(ladder);
    let rabi = RabiFrequencies::new(ladder, coupling);
    let gamma = coupling.gamma();
    let mut p = PairBlocks::zeros(layout);
    for (m, &e) in ladder.upper_energies().iter().enumerate() {
        let nu = rabi.nu1.values()[m];
        let h = nu * t / 2.0;
        // 1 − cos x = 2 sin²(x/2), free of cancellation near t = 0
        let v = gamma * e.sqrt() * 2.0 * h.sin() * h.sin() / (nu * nu);
        p.b12[m] = re(v);
        p.b21[m] = re(v);
    }
    p
}

/// Population-inversion matrix with the bookkeeping of its series part.
#[derive(Debug, Clone)]
pub struct Sigma3Value {
    pub operator: TwoChannelOperator,
    pub tail_bound: f64,
    pub tail_warning: bool,
}

/// `[σ̂3(t)]_ij = cos(ν̂_i t)[σ̂3(0)]_ij + (2iα/ħ) t·sinc(ν̂_i t)[Ŝσ̂3(0)]_ij + σ̂P_ij(t)`.
///
/// `init` defaults to the canonical `σ̂3`.
pub fn sigma3(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
    init: Option<&TwoChannelOperator>,
    options: SeriesOptions,
) -> Result<Sigma3Value> {
    let layout = Layout::of(ladder);
    let canonical;
    let s0 = match init {
        Some(op) => {
            if op.layout() != layout {
                return Err(Error::Dimension("initial σ3 has a different layout".into()));
            }
            op
        }
        None => {
            canonical = rep::sigma3(layout);
            &canonical
        }
    };
    let nu = RabiFrequencies::new(ladder, coupling).full();
    let ss = rep::build_s(ladder).mul(s0);
    let k = C64::new(0.0, 2.0 * coupling.alpha() / coupling.hbar);
    let (a, b) = (s0.matrix(), ss.matrix());
    let hom = DMatrix::from_fn(layout.dim(), layout.dim(), |r, c| {
        a[(r, c)] * (nu[r] * t).cos() + b[(r, c)] * k * (t * sinc(nu[r] * t))
    });
    let (particular, tail_bound, tail_warning) = if coupling.detuning == 0.0 {
        (DMatrix::zeros(layout.dim(), layout.dim()), 0.0, false)
    } else {
        let p = particular_solution(ladder, coupling, t, options)?;
        (p.operator().into_matrix(), p.tail_bound, p.tail_warning)
    };
    Ok(Sigma3Value {
        operator: TwoChannelOperator::from_matrix(layout, hom + particular)?,
        tail_bound,
        tail_warning,
    })
}

/// `𝓚_S(t; p, q, r) = ∫₀ᵗ sin(r(t−ξ)) sin((p+q)ξ) dξ`.
pub fn k_s(t: f64, p: f64, q: f64, r: f64) -> f64 {
    let k = p + q;
    if near_degenerate(r, k) {
        let (u, v) = ((r - k) * t / 2.0, (r + k) * t / 2.0);
        t / 2.0 * (u.cos() * sinc(v) - v.cos() * sinc(u))
    } else {
        (r * (k * t).sin() - k * (r * t).sin()) / (r * r - k * k)
    }
}

/// `𝓚_C(t; p, q, r) = ∫₀ᵗ sin(r(t−ξ)) cos((p+q)ξ) dξ`.
pub fn k_c(t: f64, p: f64, q: f64, r: f64) -> f64 {
    let k = p + q;
    if near_degenerate(r, k) {
        let (u, v) = ((r - k) * t / 2.0, (r + k) * t / 2.0);
        t / 2.0 * (v.sin() * sinc(u) + u.sin() * sinc(v))
    } else {
        r * ((k * t).cos() - (r * t).cos()) / (r * r - k * k)
    }
}

/// Whether `|r² − k²| < 1e−8·max(r², k²)`, where the quotient forms of
/// `𝓚_S`, `𝓚_C` lose accuracy.
pub fn near_degenerate(r: f64, k: f64) -> bool {
    let (r2, k2) = (r * r, k * k);
    (r2 - k2).abs() < 1e-8 * r2.max(k2) || (r2 == 0.0 && k2 == 0.0)
}

/// Harmonic-limit closed form of the particular solution built from
/// `𝓚_S`, `𝓚_C`, with `ω` the mode and `ω_o` the atomic frequency.
pub fn standard_jc_particular(
    omega: f64,
    omega_o: f64,
    rabi: f64,
    hbar: f64,
    t: f64,
    levels: usize,
) -> Result<PairBlocks> {
    let coupling = Coupling::new(rabi, omega - omega_o, hbar)?;
    let ladder = ShapeInvariantModel::harmonic(omega, coupling)?.build_ladder(levels)?;
    let layout = Layout::of(&ladder);
    let freqs = ModeFrequencies::new(&ladder, &coupling);
    let nus = RabiFrequencies::new(&ladder, &coupling);
    let gamma = coupling.gamma();
    let mut p = PairBlocks::zeros(layout);
    for (m, &e) in ladder.upper_energies().iter().enumerate() {
        let q = e.sqrt().sqrt();
        let (w1, w2) = (freqs.omega1.values()[m], freqs.omega2.values()[m + 1]);
        let (n1, n2) = (nus.nu1.values()[m], nus.nu2.values()[m + 1]);
        let a1 = gamma / (2.0 * n1);
        let a2 = gamma / (2.0 * n2);
        let ks = |r| (k_s(t, w2, w1, r), k_s(t, w2, -w1, r));
        let kc = |r| (k_c(t, w2, w1, r), k_c(t, w2, -w1, r));
        let (s2, s1) = (ks(n2), ks(n1));
        let (c2, c1) = (kc(n2), kc(n1));
        p.b11[m] = I * a1 * (q * (s2.0 - s2.1) * q - q * (s1.0 - s1.1) * q);
        p.b12[m] = re(a1 * (q * (c2.0 - c2.1) * q - q * (c1.0 - c1.1) * q));
        p.b21[m] = re(a2 * (q * (c1.0 + c1.1) * q - q * (c2.0 - c2.1) * q));
        p.b22[m] = I * a2 * (q * (s1.0 + s1.1) * q - q * (s2.0 + s2.1) * q);
    }
    Ok(p)
}

/// Which evaluation of `σ̂3(t)` an expectation value uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Closed form with the series particular solution.
    Paper,
    /// Exact Heisenberg conjugation.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InversionSample {
    pub t: f64,
    pub w: f64,
    /// `|Im⟨ψ|σ̂3(t)|ψ⟩|`.
    pub imag_leakage: f64,
    pub tail_bound: f64,
    pub tail_warning: bool,
}

/// Normalization tolerance for initial states.
pub const NORM_TOL: f64 = 1e-12;

/// `W(t) = ⟨ψ|σ̂3(t)|ψ⟩` on a time grid.
pub fn inversion_expectation(
    state: &DVector<C64>,
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t_grid: &[f64],
    method: Method,
    options: SeriesOptions,
) -> Result<Vec<InversionSample>> {
    let layout = Layout::of(ladder);
    if state.len() != layout.dim() {
        return Err(Error::Dimension(format!(
            "state has {} amplitudes, the space has dimension {}",
            state.len(),
            layout.dim()
        )));
    }
    let norm = state.norm();
    if (norm - 1.0).abs() > NORM_TOL {
        return Err(Error::Unnormalized(norm));
    }
    let oracle = match method {
        Method::Oracle => Some(HeisenbergOracle::new(ladder, coupling)?),
        Method::Paper => None,
    };
    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let (op, tail_bound, tail_warning) = match &oracle {
            Some(o) => (o.sigma3(t), 0.0, false),
            None => {
                let s = sigma3(ladder, coupling, t, None, options)?;
                (s.operator, s.tail_bound, s.tail_warning)
            }
        };
        let z = state.dotc(&op.apply(state));
        out.push(InversionSample {
            t,
            w: z.re,
            imag_leakage: z.im.abs(),
            tail_bound,
            tail_warning,
        });
    }
    Ok(out)
}

/// Basis state `(T|level⟩)_up` or `|level⟩_down`.
pub fn basis_state(layout: Layout, upper: bool, level: usize) -> Result<DVector<C64>> {
    let limit = if upper { layout.upper_dim() } else { layout.lower_dim() };
    if level >= limit {
        return Err(Error::Dimension(format!(
            "level {level} outside the {} channel of size {limit}",
            if upper { "upper" } else { "lower" }
        )));
    }
    let mut v = DVector::zeros(layout.dim());
    let k = if upper { layout.up(level) } else { layout.low(level) };
    v[k] = re(1.0);
    Ok(v)
}

/// Largest entry of the paired restriction of `a − b`.
pub fn paired_distance(a: &TwoChannelOperator, b: &TwoChannelOperator) -> f64 {
    max_abs(&(a.paired() - b.paired()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::{self, quadrature, TrigFactor};
    use approx::assert_abs_diff_eq;

    fn harmonic(n: usize) -> LadderSpectrum {
        ShapeInvariantModel::harmonic(1.0, Coupling::resonant(1.0).unwrap())
            .unwrap()
            .build_ladder(n)
            .unwrap()
    }

    #[test]
    fn rabi_zero_mode() {
        let r = RabiFrequencies::new(&harmonic(4), &Coupling::new(0.5, 0.2, 1.0).unwrap());
        assert_eq!(r.nu2.values()[0], 0.0);
        assert!(r.nu1.values().iter().all(|&v| v > 0.0));
    }

    #[test]
    fn series_examples() {
        assert_eq!(fxy_scalar(SeriesKind::CC, 1.7, 0.0, 0.0, 5).unwrap().value, 1.7);
        assert_eq!(fxy_scalar(SeriesKind::SS, 1.7, 0.0, 3.0, 5).unwrap().value, 0.0);
        let v = fxy_scalar(SeriesKind::CS, 1.0, 0.0, 2.0, 40).unwrap().value;
        assert_abs_diff_eq!(v, (1.0 - 2f64.cos()) / 2.0, epsilon = 1e-15);
        assert_eq!(fxy_scalar(SeriesKind::CC, 1.0, 1.0, 1.0, 0), Err(Error::InvalidOrder));
    }

    #[test]
    fn series_matches_quadrature() {
        for kind in SeriesKind::ALL {
            for &(x, w, t) in &[(4.3, -2.2, 1.9), (-5.0, 5.0, 2.0), (0.3, 0.1, 0.05)] {
                let s = fxy_scalar(kind, t, x, w, 40).unwrap();
                let (f1, f2) = kind.factors();
                let q = quadrature(TrigFactor::new(f1, x), TrigFactor::new(f2, w), t).unwrap();
                assert!((s.value - q).abs() < 1e-9, "{kind:?} {x} {w} {t}");
                assert!(s.tail_bound < 1e-12);
            }
        }
    }

    #[test]
    fn tail_bound_is_honest_at_low_order() {
        let (x, w, t) = (2.0, 1.5, 1.2);
        for order in 1..8 {
            let s = fxy_scalar(SeriesKind::CC, t, x, w, order).unwrap();
            let exact = fxy_scalar(SeriesKind::CC, t, x, w, 60).unwrap().value;
            assert!((s.value - exact).abs() <= s.tail_bound);
        }
    }

    #[test]
    fn operator_series_rejects_non_diagonal() {
        let mut x = DMatrix::from_element(2, 2, re(0.0));
        x[(0, 1)] = re(1.0);
        let w = DMatrix::from_element(2, 2, re(0.0));
        assert!(matches!(
            fxy_series_matrix(SeriesKind::CC, 1.0, &x, &w, 5),
            Err(Error::NotDiagonal(_))
        ));
    }

    #[test]
    fn g_substitution_and_zero_time() {
        let p = DiagonalOperator::new(vec![0.7, 1.1]);
        let r = DiagonalOperator::new(vec![0.4, 2.0]);
        let g = g_aux(SeriesKind::CS, Sign::Minus, 1.3, &p, &p, &r, 30).unwrap();
        for k in 0..2 {
            let a = fxy_scalar(SeriesKind::CS, 1.3, 0.0, r.values()[k], 30).unwrap().value;
            let b = fxy_scalar(SeriesKind::CS, 1.3, 2.0 * p.values()[k], r.values()[k], 30).unwrap().value;
            assert_eq!(g.value.values()[k], a - b);
        }
        let z = g_aux(SeriesKind::SS, Sign::Plus, 0.0, &p, &p, &r, 30).unwrap();
        assert!(z.value.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn f_matrix_paths_agree() {
        let l = harmonic(6);
        let c = Coupling::new(1.0, 0.3, 1.0).unwrap();
        for phase in [Phase::PlusI, Phase::MinusI] {
            let f = f_matrix(&l, &c, 0.7, phase).unwrap();
            assert!(f.discrepancy < 1e-10);
            let gs = rep::build_s(&l).into_matrix() * re(c.gamma());
            assert!(max_abs(&(f.direct.matrix() - gs)) < 1e-12);
        }
        let f0 = f_matrix(&l, &c, 0.0, Phase::MinusI).unwrap();
        let gs = rep::build_s(&l).into_matrix() * re(c.gamma());
        assert_eq!(f0.direct.matrix(), &gs);
        let fr = f_matrix(&l, &Coupling::resonant(1.0).unwrap(), 0.9, Phase::MinusI).unwrap();
        assert_eq!(fr.direct.max_abs(), 0.0);
    }

    #[test]
    fn products_expand() {
        let l = harmonic(6);
        let c = Coupling::new(0.8, -0.45, 1.0).unwrap();
        assert!(product_expansion_residual(&l, &c, 1.3, Phase::MinusI).unwrap() < 1e-10);
    }

    #[test]
    fn particular_solution_closed_form() {
        let l = harmonic(6);
        let c = Coupling::new(1.0, 0.2, 1.0).unwrap();
        for t in [0.2, 0.6, 1.0] {
            let p = particular_solution(&l, &c, t, SeriesOptions::default()).unwrap();
            let exact = particular_closed_form(&l, &c, t);
            assert!(p.operator().max_abs_diff(&exact.to_operator()) < 1e-12);
            assert!(!p.tail_warning);
        }
        let p0 = particular_solution(&l, &c, 0.0, SeriesOptions::default()).unwrap();
        assert_eq!(p0.blocks.max_abs(), 0.0);
    }

    #[test]
    fn printed_signs_fail_the_driven_equation() {
        let l = harmonic(4);
        let c = Coupling::new(1.0, 0.2, 1.0).unwrap();
        let opts = SeriesOptions {
            signs: SignTable::AsPrinted,
            ..Default::default()
        };
        let p = particular_solution(&l, &c, 0.8, opts).unwrap();
        let exact = particular_closed_form(&l, &c, 0.8);
        assert!(p.operator().max_abs_diff(&exact.to_operator()) > 1e-3);
    }

    #[test]
    fn particular_solution_vanishes_at_resonance() {
        let p = particular_solution(&harmonic(5), &Coupling::resonant(1.0).unwrap(), 0.8, SeriesOptions::default()).unwrap();
        assert_eq!(p.blocks.max_abs(), 0.0);
    }

    #[test]
    fn ground_never_receives_particular_part() {
        let l = harmonic(5);
        let c = Coupling::new(0.7, 0.4, 1.0).unwrap();
        let p = particular_solution(&l, &c, 0.9, SeriesOptions::default()).unwrap().operator();
        assert_eq!(p.ground_coupling(), 0.0);
        assert_eq!(p.ground_entry(), re(0.0));
    }

    #[test]
    fn sigma3_initial_value() {
        let l = harmonic(5);
        let c = Coupling::new(0.7, 0.4, 1.0).unwrap();
        let s = sigma3(&l, &c, 0.0, None, SeriesOptions::default()).unwrap();
        assert_eq!(s.operator, rep::sigma3(Layout::of(&l)));
    }

    #[test]
    fn sigma3_resonant_matches_oracle() {
        let l = harmonic(6);
        let c = Coupling::resonant(1.0).unwrap();
        let o = HeisenbergOracle::new(&l, &c).unwrap();
        for t in [0.0, 0.9, 3.3, 10.0] {
            let s = sigma3(&l, &c, t, None, SeriesOptions::default()).unwrap();
            assert!(paired_distance(&s.operator, &o.sigma3(t)) < 1e-8);
        }
    }

    #[test]
    fn resonant_down_one() {
        let l = harmonic(4);
        let c = Coupling::resonant(1.0).unwrap();
        let psi = basis_state(Layout::of(&l), false, 1).unwrap();
        let grid = [0.0, 0.5, 1.7, 4.0];
        let w = inversion_expectation(&psi, &l, &c, &grid, Method::Paper, SeriesOptions::default()).unwrap();
        for s in &w {
            assert_abs_diff_eq!(s.w, -(2.0 * s.t).cos(), epsilon = 1e-12);
        }
        assert_eq!(w[0].w, -1.0);
    }

    #[test]
    fn expectation_rejects_unnormalized() {
        let l = harmonic(3);
        let c = Coupling::resonant(1.0).unwrap();
        let psi = basis_state(Layout::of(&l), true, 0).unwrap() * re(1.1);
        assert!(matches!(
            inversion_expectation(&psi, &l, &c, &[0.0], Method::Oracle, SeriesOptions::default()),
            Err(Error::Unnormalized(_))
        ));
        let up = basis_state(Layout::of(&l), true, 1).unwrap();
        let w = inversion_expectation(&up, &l, &c, &[0.0], Method::Oracle, SeriesOptions::default()).unwrap();
        assert_abs_diff_eq!(w[0].w, 1.0, epsilon = 1e-14);
    }

    #[test]
    fn k_functions_match_quadrature() {
        use oracle::Trig;
        let cases = [(1.3, 0.4, 0.3, 2.2), (2.0, 0.9, -0.9, 1.1), (1.5, 0.6, 0.5, 1.1 + 1e-10)];
        for &(t, p, q, r) in &cases {
            let qs = quadrature(TrigFactor::retarded(Trig::Sin, r, t), TrigFactor::new(Trig::Sin, p + q), t).unwrap();
            let qc = quadrature(TrigFactor::retarded(Trig::Sin, r, t), TrigFactor::new(Trig::Cos, p + q), t).unwrap();
            assert!((k_s(t, p, q, r) - qs).abs() < 1e-11);
            assert!((k_c(t, p, q, r) - qc).abs() < 1e-11);
        }
        assert!(near_degenerate(1.1 + 1e-10, 1.1));
        assert_eq!(k_s(0.0, 0.3, 0.2, 0.5), 0.0);
        assert_eq!(k_c(0.0, 0.3, 0.2, 0.5), 0.0);
    }

    #[test]
    fn standard_jc_limit_vanishes_on_resonance() {
        let p = standard_jc_particular(1.0, 1.0, 1.0, 1.0, 0.7, 5).unwrap();
        assert_eq!(p.max_abs(), 0.0);
        let p0 = standard_jc_particular(1.0, 0.6, 1.0, 1.0, 0.0, 5).unwrap();
        assert_eq!(p0.max_abs(), 0.0);
    }
}
