//! Closed-form interaction-picture evolution matrix and its diagnostics.
//!
//! ```text
//! U_i(t) = [  cos(ω̂1 t)        sin(ω̂1 t) Ĉ ]
//!          [ −sin(ω̂2 t) Ĉ†     cos(ω̂2 t)   ]
//! ```
//!
//! with `ħω̂1 = √(ħΩĤ2 + ħ²Δ²)` and `ħω̂2 = √(ħΩĤ1 + ħ²Δ²)`. At zero
//! detuning and with the `−i` phase this is exactly `exp(−iĤ_int t/ħ)`.
//! Away from resonance it solves the second-order equation and `U(0) = 1`
//! but not the first-order one; the residual is measured, not hidden.

use nalgebra::DMatrix;

use crate::error::Result;
use crate::model::{Coupling, LadderSpectrum};
use crate::oracle::{self, SpectralPropagator, Stencil};
use crate::rep::{self, max_abs, DiagonalOperator, Layout, Phase, TwoChannelOperator};
use crate::C64;

/// `ω̂1` on the upper channel and `ω̂2` on the lower channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeFrequencies {
    pub omega1: DiagonalOperator,
    pub omega2: DiagonalOperator,
}

impl ModeFrequencies {
    pub fn new(ladder: &LadderSpectrum, coupling: &Coupling) -> Self {
        // written as √(ΩE/ħ + Δ²) so that the E = 0 entry is exactly |Δ|
        let f = |e: f64| (coupling.rabi * e / coupling.hbar + coupling.detuning * coupling.detuning).sqrt();
        Self {
            omega1: rep::h2(ladder).map(f),
            omega2: rep::h1(ladder).map(f),
        }
    }

    /// `diag(ω̂1², ω̂2²)` on the full space.
    pub fn squared(&self) -> Vec<f64> {
        self.omega1
            .values()
            .iter()
            .chain(self.omega2.values())
            .map(|w| w * w)
            .collect()
    }
}

/// The closed-form `U_i(t, 0)`.
pub fn paper_propagator(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
    phase: Phase,
) -> Result<TwoChannelOperator> {
    coupling.validate()?;
    let layout = Layout::of(ladder);
    let freqs = ModeFrequencies::new(ladder, coupling);
    let cd = rep::build_cd(ladder, phase);
    Ok(assemble(layout, &freqs, &cd.c, t))
}

fn assemble(layout: Layout, freqs: &ModeFrequencies, c: &DMatrix<C64>, t: f64) -> TwoChannelOperator {
    let cos1 = freqs.omega1.map(|w| (w * t).cos());
    let sin1 = freqs.omega1.map(|w| (w * t).sin());
    let cos2 = freqs.omega2.map(|w| (w * t).cos());
    let sin2 = freqs.omega2.map(|w| (w * t).sin());
    TwoChannelOperator::from_blocks(
        layout,
        &cos1.to_matrix(),
        &sin1.scale_rows(c),
        &-sin2.scale_rows(&c.adjoint()),
        &cos2.to_matrix(),
    )
    .expect("block shapes follow the layout")
}

/// `exp(−iĤ_o t/ħ) U_i(t, 0)`. `Ĥ_o` is diagonal so its exponential is exact.
pub fn full_propagator(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t: f64,
    phase: Phase,
) -> Result<TwoChannelOperator> {
    let ui = paper_propagator(ladder, coupling, t, phase)?;
    let free: Vec<f64> = ladder
        .upper_energies()
        .iter()
        .chain(ladder.energies())
        .copied()
        .collect();
    let hbar = coupling.hbar;
    let m = DMatrix::from_fn(ui.matrix().nrows(), ui.matrix().ncols(), |r, c| {
        ui.matrix()[(r, c)] * C64::from_polar(1.0, -free[r] * t / hbar)
    });
    TwoChannelOperator::from_matrix(ui.layout(), m)
}

/// Lower ground mode, which the closed form evolves as `cos(Δt)` while the
/// exact dynamics gives the phase `exp(iΔt)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundModeSample {
    pub paper: C64,
    pub oracle: C64,
    pub deviation: f64,
}

#[derive(Debug, Clone)]
pub struct PropagatorSample {
    pub t: f64,
    pub u_paper: TwoChannelOperator,
    /// `exp(−iĤ_int t/ħ)`.
    pub u_oracle: TwoChannelOperator,
    /// `max|iħU' − Ĥ_int U|`.
    pub residual_first_order: f64,
    /// `max|U'' + diag(ω̂²) U|`.
    pub residual_second_order: f64,
    /// `max|U†U − 1|` on the paired subspace.
    pub residual_unitarity: f64,
    /// `max|U_paper − U_oracle|` on the paired subspace.
    pub oracle_distance: f64,
    pub ground: GroundModeSample,
}

/// Finite-difference settings for the diagnostics. `stencil` applies to the
/// second derivative; the first derivative always uses five points, since
/// the three-point truncation error at `h = 1e−3` is already about `1e−6`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdSettings {
    pub step: f64,
    pub stencil: Stencil,
}

impl Default for FdSettings {
    fn default() -> Self {
        Self {
            step: 1e-3,
            stencil: Stencil::ThreePoint,
        }
    }
}

/// Evaluates the propagator and its residuals on `t_grid`.
pub fn propagator_diagnostics(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t_grid: &[f64],
    phase: Phase,
    fd: FdSettings,
) -> Result<Vec<PropagatorSample>> {
    coupling.validate()?;
    let layout = Layout::of(ladder);
    let freqs = ModeFrequencies::new(ladder, coupling);
    let cd = rep::build_cd(ladder, phase);
    let parts = rep::build_hamiltonian(ladder, coupling)?;
    let oracle = SpectralPropagator::new(&parts.interaction, coupling.hbar)?;
    let w2 = freqs.squared();
    let u_at = |t: f64| Ok(assemble(layout, &freqs, &cd.c, t).into_matrix());
    let id_paired = rep::complex_identity(layout.dim() - 1);
    let i_hbar = C64::new(0.0, coupling.hbar);
    let g = layout.ground();

    let mut out = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let u = assemble(layout, &freqs, &cd.c, t);
        let du: DMatrix<C64> = oracle::fd_first(u_at, t, fd.step, Stencil::FivePoint)?;
        let d2u: DMatrix<C64> = oracle::fd_second(u_at, t, fd.step, fd.stencil)?;
        let first = du * i_hbar - parts.interaction.matrix() * u.matrix();
        let second = DMatrix::from_fn(d2u.nrows(), d2u.ncols(), |r, c| {
            d2u[(r, c)] + u.matrix()[(r, c)] * w2[r]
        });
        let gram = u.adjoint().mul(&u);
        let exact = oracle.at(t);
        let diff = TwoChannelOperator::from_matrix(layout, u.matrix() - exact.matrix())?;
        let ground = GroundModeSample {
            paper: u.matrix()[(g, g)],
            oracle: exact.matrix()[(g, g)],
            deviation: (u.matrix()[(g, g)] - exact.matrix()[(g, g)]).norm(),
        };
        out.push(PropagatorSample {
            t,
            residual_first_order: max_abs(&first),
            residual_second_order: max_abs(&second),
            residual_unitarity: max_abs(&(gram.paired() - &id_paired)),
            oracle_distance: max_abs(&diff.paired()),
            ground,
            u_paper: u,
            u_oracle: exact,
        });
    }
    Ok(out)
}

/// Second-order residuals at steps `h` and `h/2` and their ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergenceCheck {
    pub coarse: f64,
    pub fine: f64,
    pub ratio: f64,
}

/// Confirms the `O(h²)` behavior of the second-order residual, which is
/// pure truncation error when the closed form solves the equation.
pub fn second_order_convergence(
    ladder: &LadderSpectrum,
    coupling: &Coupling,
    t_grid: &[f64],
    phase: Phase,
    step: f64,
) -> Result<ConvergenceCheck> {
    let run = |h: f64| -> Result<f64> {
        let s = propagator_diagnostics(
            ladder,
            coupling,
            t_grid,
            phase,
            FdSettings {
                step: h,
                stencil: Stencil::ThreePoint,
            },
        )?;
        Ok(s.iter().fold(0.0, |a, x| a.max(x.residual_second_order)))
    };
    let coarse = run(step)?;
    let fine = run(step / 2.0)?;
    Ok(ConvergenceCheck {
        coarse,
        fine,
        ratio: coarse / fine,
    })
}
