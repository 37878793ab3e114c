//! Closed-form eigenvalues and eigenstates of the non-resonant Hamiltonian.
//!
//! Paired level `m` lives in `span{(T|m⟩)_up, |m+1⟩_down}` where the
//! interaction reduces to `α[[β, √E], [√E, −β]]`, `E = E_{m+1}`. The
//! eigenstates are written `(C_up T|m⟩, ±C_low |m+1⟩)` with both amplitudes
//! nonnegative, so the minus branch carries its sign in the lower slot and
//! `C_up⁻ = C_low⁺`, `C_low⁻ = C_up⁺`.

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::model::{Coupling, LadderSpectrum};
use crate::rep::Layout;
use crate::C64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Plus,
    Minus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Plus => 1.0,
            Branch::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRow {
    pub m: usize,
    /// `E_{m+1}`.
    pub level_energy: f64,
    pub e_plus: f64,
    pub e_minus: f64,
    pub lambda_plus: f64,
    pub lambda_minus: f64,
    pub c_up_plus: f64,
    pub c_low_plus: f64,
    pub c_up_minus: f64,
    pub c_low_minus: f64,
}

impl SpectrumRow {
    pub fn amplitudes(&self, branch: Branch) -> (f64, f64) {
        match branch {
            Branch::Plus => (self.c_up_plus, self.c_low_plus),
            Branch::Minus => (self.c_up_minus, self.c_low_minus),
        }
    }

    pub fn energy(&self, branch: Branch) -> f64 {
        match branch {
            Branch::Plus => self.e_plus,
            Branch::Minus => self.e_minus,
        }
    }

    /// `|C_up² + C_low² − 1|` for one branch.
    pub fn normalization_error(&self, branch: Branch) -> f64 {
        let (u, l) = self.amplitudes(branch);
        (u * u + l * l - 1.0).abs()
    }

    /// `|C_up⁺C_up⁻ − C_low⁺C_low⁻|`, the overlap of the two branches.
    pub fn cross_overlap(&self) -> f64 {
        (self.c_up_plus * self.c_up_minus - self.c_low_plus * self.c_low_minus).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumTable {
    pub rows: Vec<SpectrumRow>,
    pub singlet_energy: f64,
}

impl SpectrumTable {
    /// All eigenvalues, paired branches plus the singlet, ascending.
    pub fn sorted_energies(&self) -> Vec<f64> {
        let mut e: Vec<f64> = self
            .rows
            .iter()
            .flat_map(|r| [r.e_plus, r.e_minus])
            .chain(std::iter::once(self.singlet_energy))
            .collect();
        e.sort_by(f64::total_cmp);
        e
    }

    /// Max difference after pairing both multisets in ascending order.
    pub fn pairing_error(&self, ascending: &[f64]) -> Result<f64> {
        let ours = self.sorted_energies();
        if ours.len() != ascending.len() {
            return Err(Error::Dimension(format!(
                "{} analytic eigenvalues against {} reference values",
                ours.len(),
                ascending.len()
            )));
        }
        Ok(ours
            .iter()
            .zip(ascending)
            .fold(0.0, |acc, (a, b)| acc.max((a - b).abs())))
    }

    /// Assigns each analytic eigenvalue its rank partner among `ascending`.
    /// Returns `(plus, minus)` per row and the singlet's partner.
    pub fn match_reference(&self, ascending: &[f64]) -> Result<(Vec<(f64, f64)>, f64)> {
        let n = 2 * self.rows.len() + 1;
        if ascending.len() != n {
            return Err(Error::Dimension(format!(
                "{n} analytic eigenvalues against {} reference values",
                ascending.len()
            )));
        }
        // slot 2m is E_m^+, 2m+1 is E_m^-, the last slot is the singlet
        let mut labeled: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .flat_map(|(m, r)| [(r.e_plus, 2 * m), (r.e_minus, 2 * m + 1)])
            .chain(std::iter::once((self.singlet_energy, n - 1)))
            .collect();
        // + 0.0 folds −0.0 into 0.0 so exact ties fall back to slot order
        labeled.sort_by(|a, b| (a.0 + 0.0).total_cmp(&(b.0 + 0.0)).then(a.1.cmp(&b.1)));
        let mut slots = vec![0.0; n];
        for ((_, slot), &x) in labeled.iter().zip(ascending) {
            slots[*slot] = x;
        }
        let rows = (0..self.rows.len()).map(|m| (slots[2 * m], slots[2 * m + 1])).collect();
        Ok((rows, slots[n - 1]))
    }

    /// `|Ψ_m^(±)⟩` embedded in the full two-channel space.
    pub fn eigenvector(&self, layout: Layout, m: usize, branch: Branch) -> DVector<C64> {
        let (u, l) = self.rows[m].amplitudes(branch);
        let mut v = DVector::zeros(layout.dim());
        v[layout.up(m)] = C64::new(u, 0.0);
        v[layout.low(m + 1)] = C64::new(branch.sign() * l, 0.0);
        v
    }

    /// The singlet `|0⟩_down`.
    pub fn singlet_vector(&self, layout: Layout) -> DVector<C64> {
        let mut v = DVector::zeros(layout.dim());
        v[layout.ground()] = C64::new(1.0, 0.0);
        v
    }
}

/// Normalized `+r` eigenvector of `[[a, b], [b, −a]]`, `b > 0`, both
/// components nonnegative. Each component is taken from whichever formula
/// avoids cancellation.
fn block_amplitudes(a: f64, b: f64) -> (f64, f64) {
    let r = a.hypot(b);
    if a >= 0.0 {
        let up = ((r + a) / (2.0 * r)).sqrt();
        let low = if a == 0.0 {
            up
        } else {
            b / (2.0 * r * up)
        };
        (up, low)
    } else {
        let low = ((r - a) / (2.0 * r)).sqrt();
        (b / (2.0 * r * low), low)
    }
}

/// `E_m^(±) = E_{m+1} ± √(ħΩE_{m+1} + ħ²Δ²)` and the mixing amplitudes.
pub fn analytic_spectrum(ladder: &LadderSpectrum, coupling: &Coupling) -> Result<SpectrumTable> {
    coupling.validate()?;
    let alpha = coupling.alpha();
    let beta = coupling.beta();
    let hd = coupling.hbar * coupling.detuning;
    let hw = coupling.hbar * coupling.rabi;
    let rows = ladder
        .upper_energies()
        .iter()
        .enumerate()
        .map(|(m, &e)| {
            let split = (hw * e + hd * hd).sqrt();
            let lambda = alpha * (e + beta * beta).sqrt();
            let (up, low) = block_amplitudes(alpha * beta, alpha * e.sqrt());
            SpectrumRow {
                m,
                level_energy: e,
                e_plus: e + split,
                e_minus: e - split,
                lambda_plus: lambda,
                lambda_minus: -lambda,
                c_up_plus: up,
                c_low_plus: low,
                c_up_minus: low,
                c_low_minus: up,
            }
        })
        .collect();
    Ok(SpectrumTable {
        rows,
        singlet_energy: -hd,
    })
}

/// The `Δ = 0` table: `E_{m+1} ± √(ħΩE_{m+1})`, all amplitudes `1/√2`.
pub fn resonant_limits(ladder: &LadderSpectrum, coupling: &Coupling) -> Result<SpectrumTable> {
    analytic_spectrum(ladder, &coupling.at_resonance())
}

/// `γ_m^(±)` and `δ_m` of the harmonic limit.
#[derive(Debug, Clone, PartialEq)]
pub struct StandardJCCoefficients {
    pub omega: f64,
    pub omega_o: f64,
    pub delta: Vec<f64>,
    pub gamma_plus: Vec<f64>,
    pub gamma_minus: Vec<f64>,
}

/// Harmonic-mode spectrum written with the field frequency `ω` and the
/// atomic frequency `ω_o`, rows `m = 0..=m_max`.
pub fn standard_jc_spectrum(
    omega: f64,
    omega_o: f64,
    rabi: f64,
    hbar: f64,
    m_max: usize,
) -> Result<(SpectrumTable, StandardJCCoefficients)> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "omega",
            value: omega,
            reason: "mode frequency must be positive and finite",
        });
    }
    Coupling::new(rabi, omega - omega_o, hbar)?;
    let det = omega - omega_o;
    let mut coeffs = StandardJCCoefficients {
        omega,
        omega_o,
        delta: Vec::new(),
        gamma_plus: Vec::new(),
        gamma_minus: Vec::new(),
    };
    let mut rows = Vec::with_capacity(m_max + 1);
    for m in 0..=m_max {
        let k = (m + 1) as f64;
        let delta = det / (k * rabi * omega).sqrt();
        let root = delta.hypot(1.0);
        // the smaller of γ± is evaluated as 1/(root + |δ|) to avoid cancellation
        let (gp, gm) = if delta >= 0.0 {
            (1.0 / (root + delta), root + delta)
        } else {
            (root - delta, 1.0 / (root - delta))
        };
        let split = hbar * (rabi * omega * k + det * det).sqrt();
        let e = k * hbar * omega;
        let np = (1.0 / (1.0 + gp * gp)).sqrt();
        let nm = (1.0 / (1.0 + gm * gm)).sqrt();
        rows.push(SpectrumRow {
            m,
            level_energy: e,
            e_plus: e + split,
            e_minus: e - split,
            lambda_plus: split,
            lambda_minus: -split,
            c_up_plus: np,
            c_low_plus: gp * np,
            c_up_minus: nm,
            c_low_minus: gm * nm,
        });
        coeffs.delta.push(delta);
        coeffs.gamma_plus.push(gp);
        coeffs.gamma_minus.push(gm);
    }
    Ok((
        SpectrumTable {
            rows,
            singlet_energy: -hbar * det,
        },
        coeffs,
    ))
}
