//! Brute-force references: Hermitian eigensolver, exact propagators, exact
//! Heisenberg-picture `σ̂3(t)`, adaptive quadrature and finite differences.
//!
//! Nothing here uses the closed forms of the other modules, so it can serve
//! as their oracle.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::model::{Coupling, LadderSpectrum};
use crate::rep::{self, max_abs, Layout, TwoChannelOperator};
use crate::C64;

/// Eigen-decomposition `H = V Λ V†` with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct EigenDecomposition {
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: DMatrix<C64>,
    pub reconstruction_residual: f64,
}

impl EigenDecomposition {
    /// `max|V†V − 1|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let n = self.eigenvectors.ncols();
        max_abs(&(self.eigenvectors.adjoint() * &self.eigenvectors - rep::complex_identity(n)))
    }

    /// `V f(Λ) V†` for a complex spectral function.
    pub fn spectral_map<F: Fn(f64) -> C64>(&self, f: F) -> DMatrix<C64> {
        let v = &self.eigenvectors;
        let mut scaled = v.clone();
        for (k, &lam) in self.eigenvalues.iter().enumerate() {
            let z = f(lam);
            scaled.column_mut(k).iter_mut().for_each(|e| *e *= z);
        }
        scaled * v.adjoint()
    }
}

/// Diagonalizes a Hermitian two-channel operator.
pub fn diagonalize(h: &TwoChannelOperator) -> Result<EigenDecomposition> {
    diagonalize_matrix(h.matrix())
}

/// Diagonalizes a dense Hermitian matrix. Inputs with
/// `max|H − H†| ≥ 1e−13·max(1, max|H|)` are rejected.
pub fn diagonalize_matrix(h: &DMatrix<C64>) -> Result<EigenDecomposition> {
    if h.nrows() != h.ncols() {
        return Err(Error::Dimension(format!(
            "eigensolver needs a square matrix, got {}×{}",
            h.nrows(),
            h.ncols()
        )));
    }
    let scale = max_abs(h).max(1.0);
    let residual = max_abs(&(h - h.adjoint()));
    let allowed = 1e-13 * scale;
    if residual >= allowed {
        return Err(Error::NotHermitian { residual, allowed });
    }
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..h.nrows()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = DMatrix::from_fn(h.nrows(), h.ncols(), |r, c| eig.eigenvectors[(r, order[c])]);
    let mut d = EigenDecomposition {
        eigenvalues,
        eigenvectors,
        reconstruction_residual: 0.0,
    };
    d.reconstruction_residual = max_abs(&(d.spectral_map(|l| C64::new(l, 0.0)) - h));
    Ok(d)
}

/// `exp(−iHt/ħ)` evaluated repeatedly from one decomposition.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    layout: Layout,
    decomposition: EigenDecomposition,
    hbar: f64,
}

impl SpectralPropagator {
    pub fn new(h: &TwoChannelOperator, hbar: f64) -> Result<Self> {
        Ok(Self {
            layout: h.layout(),
            decomposition: diagonalize(h)?,
            hbar,
        })
    }

    pub fn decomposition(&self) -> &EigenDecomposition {
        &self.decomposition
    }

    /// `U(0)` is the exact identity rather than `VV†`.
    pub fn at(&self, t: f64) -> TwoChannelOperator {
        if t == 0.0 {
            return TwoChannelOperator::identity(self.layout);
        }
        let hbar = self.hbar;
        let m = self
            .decomposition
            .spectral_map(|l| C64::from_polar(1.0, -l * t / hbar));
        TwoChannelOperator::from_matrix(self.layout, m).expect("layout preserved")
    }

    /// Heisenberg picture `U(t)† A U(t)`.
    pub fn heisenberg(&self, a: &TwoChannelOperator, t: f64) -> TwoChannelOperator {
        let u = self.at(t);
        u.adjoint().mul(a).mul(&u)
    }
}

/// `exp(−iHt/ħ)` by eigendecomposition.
pub fn expm_prop(h: &TwoChannelOperator, t: f64, hbar: f64) -> Result<TwoChannelOperator> {
    Ok(SpectralPropagator::new(h, hbar)?.at(t))
}

/// Exact `σ̂3(t) = U†σ̂3U` with `U = exp(−iĤ_int t/ħ)`. The free part
/// commutes with both `Ĥ_int` and `σ̂3`, so it drops out.
pub fn heisenberg_sigma3(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
) -> Result<TwoChannelOperator> {
    let parts = rep::build_hamiltonian(ladder, coupling)?;
    let prop = SpectralPropagator::new(&parts.interaction, coupling.hbar)?;
    Ok(prop.heisenberg(&rep::sigma3(Layout::of(ladder)), t))
}

/// Reusable oracle for `σ̂3(t)` on a time grid.
#[derive(Debug, Clone)]
pub struct HeisenbergOracle {
    propagator: SpectralPropagator,
    sigma3: TwoChannelOperator,
}

impl HeisenbergOracle {
    pub fn new(ladder: &LadderSpectrum, coupling: &Coupling) -> Result<Self> {
        let parts = rep::build_hamiltonian(ladder, coupling)?;
        Ok(Self {
            propagator: SpectralPropagator::new(&parts.interaction, coupling.hbar)?,
            sigma3: rep::sigma3(Layout::of(ladder)),
        })
    }

    pub fn sigma3(&self, t: f64) -> TwoChannelOperator {
        self.propagator.heisenberg(&self.sigma3, t)
    }

    pub fn propagator(&self, t: f64) -> TwoChannelOperator {
        self.propagator.at(t)
    }
}

// Gauss-Kronrod 7/15 abscissae and weights on [−1, 1].
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        kron += WGK[j] * s;
        if j % 2 == 1 {
            gauss += WG[j / 2] * s;
        }
    }
    (kron * h, ((kron - gauss) * h).abs())
}

const MAX_INTERVALS: usize = 4000;

/// Globally adaptive Gauss-Kronrod integration of `f` over `[a, b]` to an
/// absolute error estimate `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut parts = vec![(a, b, gk15(&f, a, b))];
    loop {
        let err: f64 = parts.iter().map(|p| p.2 .1).sum();
        if err <= tol {
            return Ok(parts.iter().map(|p| p.2 .0).sum());
        }
        let (worst, _) = parts
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .2 .1.total_cmp(&y.1 .2 .1))
            .expect("nonempty");
        let (lo, hi, _) = parts.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        if parts.len() + 2 > MAX_INTERVALS || mid <= lo || mid >= hi {
            return Err(Error::Quadrature {
                requested: tol,
                achieved: err,
            });
        }
        parts.push((lo, mid, gk15(&f, lo, mid)));
        parts.push((mid, hi, gk15(&f, mid, hi)));
    }
}

/// Default requested tolerance of the quadrature oracle.
pub const QUADRATURE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trig {
    Sin,
    Cos,
}

impl Trig {
    pub fn eval(self, x: f64) -> f64 {
        match self {
            Trig::Sin => x.sin(),
            Trig::Cos => x.cos(),
        }
    }
}

/// One factor `kind(slope·ξ + offset)` of a trigonometric integrand.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrigFactor {
    pub kind: Trig,
    pub slope: f64,
    pub offset: f64,
}

impl TrigFactor {
    pub fn new(kind: Trig, slope: f64) -> Self {
        Self {
            kind,
            slope,
            offset: 0.0,
        }
    }

    /// `kind(r(t − ξ))`.
    pub fn retarded(kind: Trig, r: f64, t: f64) -> Self {
        Self {
            kind,
            slope: -r,
            offset: r * t,
        }
    }

    pub fn eval(&self, xi: f64) -> f64 {
        self.kind.eval(self.slope * xi + self.offset)
    }
}

/// `∫₀ᵗ f1(ξ) f2(ξ) dξ` for two trigonometric factors.
pub fn quadrature(first: TrigFactor, second: TrigFactor, t: f64) -> Result<f64> {
    integrate(|xi| first.eval(xi) * second.eval(xi), 0.0, t, QUADRATURE_TOL)
}

/// Values a finite-difference stencil can combine linearly.
pub trait FdValue: Sized {
    fn combine(terms: &[(f64, &Self)]) -> Self;
}

impl FdValue for f64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, v)| c * **v).sum()
    }
}

impl FdValue for C64 {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        terms.iter().map(|(c, v)| **v * *c).sum()
    }
}

impl FdValue for DMatrix<C64> {
    fn combine(terms: &[(f64, &Self)]) -> Self {
        let (r, c) = terms[0].1.shape();
        let mut out = DMatrix::zeros(r, c);
        for (k, v) in terms {
            out += *v * C64::new(*k, 0.0);
        }
        out
    }
}

/// Central-difference stencil width.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Stencil {
    #[default]
    ThreePoint,
    FivePoint,
}

fn check_step(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidStep(h))
    }
}

/// Central first derivative of `f` at `t`.
pub fn fd_first<T, F>(f: F, t: f64, h: f64, stencil: Stencil) -> Result<T>
where
    T: FdValue,
    F: Fn(f64) -> Result<T>,
{
    check_step(h)?;
    match stencil {
        Stencil::ThreePoint => {
            let (p, m) = (f(t + h)?, f(t - h)?);
            let s = 0.5 / h;
            Ok(T::combine(&[(s, &p), (-s, &m)]))
        }
        Stencil::FivePoint => {
            let (p2, p1, m1, m2) = (f(t + 2.0 * h)?, f(t + h)?, f(t - h)?, f(t - 2.0 * h)?);
            let s = 1.0 / (12.0 * h);
            Ok(T::combine(&[(-s, &p2), (8.0 * s, &p1), (-8.0 * s, &m1), (s, &m2)]))
        }
    }
}

/// Central second derivative of `f` at `t`.
pub fn fd_second<T, F>(f: F, t: f64, h: f64, stencil: Stencil) -> Result<T>
where
    T: FdValue,
    F: Fn(f64) -> Result<T>,
{
    check_step(h)?;
    match stencil {
        Stencil::ThreePoint => {
            let (p, c, m) = (f(t + h)?, f(t)?, f(t - h)?);
            let s = 1.0 / (h * h);
            Ok(T::combine(&[(s, &p), (-2.0 * s, &c), (s, &m)]))
        }
        Stencil::FivePoint => {
            let (p2, p1, c, m1, m2) = (
                f(t + 2.0 * h)?,
                f(t + h)?,
                f(t)?,
                f(t - h)?,
                f(t - 2.0 * h)?,
            );
            let s = 1.0 / (12.0 * h * h);
            Ok(T::combine(&[
                (-s, &p2),
                (16.0 * s, &p1),
                (-30.0 * s, &c),
                (16.0 * s, &m1),
                (-s, &m2),
            ]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ShapeInvariantModel;
    use approx::assert_abs_diff_eq;

    fn op(m: DMatrix<C64>) -> TwoChannelOperator {
        let n = m.nrows().div_ceil(2);
        TwoChannelOperator::from_matrix(Layout::new(n).unwrap(), m).unwrap()
    }

    #[test]
    fn diagonal_input() {
        let m = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            C64::new(3.0, 0.0),
            C64::new(-1.0, 0.0),
            C64::new(2.0, 0.0),
        ]));
        let d = diagonalize(&op(m)).unwrap();
        assert_eq!(d.eigenvalues, vec![-1.0, 2.0, 3.0]);
        for c in 0..3 {
            let nz: Vec<_> = d.eigenvectors.column(c).iter().map(|z| z.norm()).collect();
            assert_eq!(nz.iter().filter(|&&x| x == 1.0).count(), 1);
        }
    }

    #[test]
    fn two_by_two_closed_form() {
        let (a, b) = (0.8, 0.6);
        let m = DMatrix::from_row_slice(
            2,
            2,
            &[C64::new(a * b, 0.0), C64::new(a, 0.0), C64::new(a, 0.0), C64::new(-a * b, 0.0)],
        );
        let d = diagonalize_matrix(&m).unwrap();
        let r = a * (1.0 + b * b).sqrt();
        assert_abs_diff_eq!(d.eigenvalues[0], -r, epsilon = 1e-15);
        assert_abs_diff_eq!(d.eigenvalues[1], r, epsilon = 1e-15);
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = DMatrix::from_element(3, 3, C64::new(0.0, 0.0));
        m[(0, 1)] = C64::new(1.0, 0.0);
        assert!(matches!(diagonalize(&op(m)), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn propagator_group_property() {
        let ladder = ShapeInvariantModel::morse_class(1.0, 0.1, Coupling::resonant(1.0).unwrap())
            .unwrap()
            .build_ladder(5)
            .unwrap();
        let c = Coupling::new(0.7, 0.3, 1.0).unwrap();
        let h = rep::build_hamiltonian(&ladder, &c).unwrap().total;
        let p = SpectralPropagator::new(&h, 1.0).unwrap();
        assert!(p.at(0.0).max_abs_diff(&TwoChannelOperator::identity(h.layout())) < 1e-13);
        let lhs = p.at(0.4).mul(&p.at(1.3));
        assert!(lhs.max_abs_diff(&p.at(1.7)) < 1e-11);
        let u = p.at(2.5);
        assert!(u.adjoint().mul(&u).max_abs_diff(&TwoChannelOperator::identity(h.layout())) < 1e-12);
    }

    #[test]
    fn heisenberg_trace_and_involution() {
        let ladder = ShapeInvariantModel::harmonic(1.0, Coupling::resonant(1.0).unwrap())
            .unwrap()
            .build_ladder(6)
            .unwrap();
        let c = Coupling::new(1.0, 0.4, 1.0).unwrap();
        let s = heisenberg_sigma3(&ladder, &c, 2.2).unwrap();
        assert_abs_diff_eq!(s.matrix().trace().re, -1.0, epsilon = 1e-10);
        let id = TwoChannelOperator::identity(s.layout());
        assert!(s.mul(&s).max_abs_diff(&id) < 1e-10);
        let s0 = heisenberg_sigma3(&ladder, &c, 0.0).unwrap();
        assert!(s0.max_abs_diff(&rep::sigma3(s.layout())) < 1e-13);
    }

    #[test]
    fn quadrature_examples() {
        let one = quadrature(TrigFactor::new(Trig::Cos, 0.0), TrigFactor::new(Trig::Cos, 0.0), 1.0).unwrap();
        assert_abs_diff_eq!(one, 1.0, epsilon = 1e-14);
        let v = quadrature(TrigFactor::new(Trig::Cos, 0.0), TrigFactor::new(Trig::Sin, 2.0), 1.0).unwrap();
        assert_abs_diff_eq!(v, (1.0 - 2f64.cos()) / 2.0, epsilon = 1e-13);
        let pi = std::f64::consts::PI;
        let s2 = quadrature(TrigFactor::new(Trig::Sin, 1.0), TrigFactor::new(Trig::Sin, 1.0), pi).unwrap();
        assert_abs_diff_eq!(s2, pi / 2.0, epsilon = 1e-13);
    }

    #[test]
    fn quadrature_refinement_is_stable() {
        let f = |x: f64| (3.3 * x).sin() * (0.7 * (2.0 - x)).cos();
        let a = integrate(f, 0.0, 2.0, 1e-11).unwrap();
        let b = integrate(f, 0.0, 2.0, 1e-12).unwrap();
        assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn quadrature_reports_failure() {
        let r = integrate(|x: f64| (1.0 / x).sin(), 0.0, 1.0, 1e-300);
        assert!(matches!(r, Err(Error::Quadrature { .. })));
    }

    #[test]
    fn finite_differences() {
        let sq = |t: f64| Ok(t * t);
        assert_abs_diff_eq!(fd_second(sq, 0.7, 1e-2, Stencil::ThreePoint).unwrap(), 2.0, epsilon = 1e-9);
        let h = 1e-3;
        let d = fd_first(|t: f64| Ok(t.sin()), 0.0, h, Stencil::ThreePoint).unwrap();
        assert!((d - 1.0).abs() < h * h / 6.0);
        assert!(matches!(
            fd_first(|t: f64| Ok(t), 0.0, 0.0, Stencil::ThreePoint),
            Err(Error::InvalidStep(_))
        ));
        assert!(fd_second(|t: f64| Ok(t), 0.0, -1.0, Stencil::FivePoint).is_err());
    }

    #[test]
    fn operator_valued_second_derivative() {
        let w = [0.5, 1.5, 2.5];
        let cosw = |t: f64| -> Result<DMatrix<C64>> {
            Ok(DMatrix::from_fn(3, 3, |r, c| {
                if r == c {
                    C64::new((w[r] * t).cos(), 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            }))
        };
        let t = 0.9;
        let mut errs = Vec::new();
        for h in [1e-2, 5e-3] {
            let d2 = fd_second(cosw, t, h, Stencil::ThreePoint).unwrap();
            let e = (0..3)
                .map(|k| (d2[(k, k)].re + w[k] * w[k] * (w[k] * t).cos()).abs())
                .fold(0.0, f64::max);
            errs.push(e);
        }
        assert!(errs[0] / errs[1] > 3.5);
    }
}
