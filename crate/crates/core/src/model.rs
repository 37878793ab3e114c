//! Shape-invariant models as remainder sequences, and their energy ladders.
//!
//! A model never sees a superpotential or a position grid. It is fully
//! described by the scalar chain `R_k = R(a_k)`, `k = 1, 2, ...`, whose
//! partial sums give the bound-state ladder `E_n = R_1 + ... + R_n` of the
//! lower partner Hamiltonian `B₊B₋`.

use crate::error::{Error, Result};

/// Coupling constants of the atom/mode system.
///
/// `rabi` is the coupling strength `Ω` and `detuning` the detuning `Δ`, both
/// in energy/ħ units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coupling {
    pub rabi: f64,
    pub detuning: f64,
    pub hbar: f64,
}

impl Coupling {
    pub fn new(rabi: f64, detuning: f64, hbar: f64) -> Result<Self> {
        let c = Self {
            rabi,
            detuning,
            hbar,
        };
        c.validate()?;
        Ok(c)
    }

    /// Resonant coupling with `ħ = 1`.
    pub fn resonant(rabi: f64) -> Result<Self> {
        Self::new(rabi, 0.0, 1.0)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rabi > 0.0 && self.rabi.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "Omega",
                value: self.rabi,
                reason: "coupling strength must be positive and finite",
            });
        }
        if !self.detuning.is_finite() {
            return Err(Error::InvalidParameter {
                name: "Delta",
                value: self.detuning,
                reason: "detuning must be finite",
            });
        }
        if !(self.hbar > 0.0 && self.hbar.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "hbar",
                value: self.hbar,
                reason: "action constant must be positive and finite",
            });
        }
        Ok(())
    }

    /// `α = √(ħΩ)`.
    pub fn alpha(&self) -> f64 {
        (self.hbar * self.rabi).sqrt()
    }

    /// `β = ħΔ/α`.
    pub fn beta(&self) -> f64 {
        self.hbar * self.detuning / self.alpha()
    }

    /// Source strength of the inversion equation, `4α²β/ħ²`.
    pub fn gamma(&self) -> f64 {
        let a = self.alpha();
        4.0 * a * a * self.beta() / (self.hbar * self.hbar)
    }

    /// The same coupling with zero detuning.
    pub fn at_resonance(&self) -> Self {
        Self {
            detuning: 0.0,
            ..*self
        }
    }
}

/// Catalog of remainder sequences.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModelFamily {
    /// Constant remainder `R_k = ħω`.
    Harmonic { omega: f64 },
    /// Linearly decreasing remainder `R_k = c1 − c2(2k − 1)`; finite ladder when `c2 > 0`.
    MorseClass { c1: f64, c2: f64 },
    /// Geometric remainder `R_k = r1·q^(k−1)`.
    ScalingClass { r1: f64, q: f64 },
}

impl ModelFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ModelFamily::Harmonic { .. } => "harmonic",
            ModelFamily::MorseClass { .. } => "morse_class",
            ModelFamily::ScalingClass { .. } => "scaling_class",
        }
    }

    fn check_parameters(&self) -> Result<()> {
        let bad = |name, value, reason| Err(Error::InvalidParameter {
            name,
            value,
            reason,
        });
        match *self {
            ModelFamily::Harmonic { omega } if !(omega > 0.0 && omega.is_finite()) => {
                bad("omega", omega, "must be positive")
            }
            ModelFamily::MorseClass { c1, .. } if !(c1 > 0.0 && c1.is_finite()) => {
                bad("c1", c1, "must be positive")
            }
            ModelFamily::MorseClass { c2, .. } if !(c2 >= 0.0 && c2.is_finite()) => {
                bad("c2", c2, "must be non-negative")
            }
            ModelFamily::ScalingClass { r1, .. } if !(r1 > 0.0 && r1.is_finite()) => {
                bad("r1", r1, "must be positive")
            }
            ModelFamily::ScalingClass { q, .. } if !(q > 0.0 && q < 1.0) => {
                bad("q", q, "must lie in (0, 1)")
            }
            _ => Ok(()),
        }
    }
}

/// A remainder sequence together with its coupling constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeInvariantModel {
    pub family: ModelFamily,
    pub coupling: Coupling,
}

/// Outcome of [`ShapeInvariantModel::validate`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidityReport {
    pub requested_levels: usize,
    /// First `k` in `1..requested_levels` with `R_k ≤ 0`.
    pub first_bad: Option<usize>,
    /// Largest admissible level count; `None` when the ladder is unbounded.
    pub max_levels: Option<usize>,
}

impl ValidityReport {
    pub fn is_valid(&self) -> bool {
        self.first_bad.is_none()
    }
}

impl ShapeInvariantModel {
    pub fn new(family: ModelFamily, coupling: Coupling) -> Result<Self> {
        family.check_parameters()?;
        coupling.validate()?;
        Ok(Self { family, coupling })
    }

    pub fn harmonic(omega: f64, coupling: Coupling) -> Result<Self> {
        Self::new(ModelFamily::Harmonic { omega }, coupling)
    }

    pub fn morse_class(c1: f64, c2: f64, coupling: Coupling) -> Result<Self> {
        Self::new(ModelFamily::MorseClass { c1, c2 }, coupling)
    }

    pub fn scaling_class(r1: f64, q: f64, coupling: Coupling) -> Result<Self> {
        Self::new(ModelFamily::ScalingClass { r1, q }, coupling)
    }

    fn raw_remainder(&self, k: usize) -> f64 {
        match self.family {
            ModelFamily::Harmonic { omega } => self.coupling.hbar * omega,
            ModelFamily::MorseClass { c1, c2 } => c1 - c2 * (2.0 * k as f64 - 1.0),
            ModelFamily::ScalingClass { r1, q } => r1 * q.powi(k as i32 - 1),
        }
    }

    /// `R_k` for `k ≥ 1`.
    ///
    /// Fails with the first non-positive remainder among `R_1..=R_k`.
    pub fn remainder(&self, k: usize) -> Result<f64> {
        if k == 0 {
            return Err(Error::InvalidParameter {
                name: "k",
                value: 0.0,
                reason: "remainder index starts at 1",
            });
        }
        let report = self.validate(k + 1);
        if let Some(bad) = report.first_bad {
            return Err(Error::NonPositiveRemainder {
                k: bad,
                value: self.raw_remainder(bad),
            });
        }
        Ok(self.raw_remainder(k))
    }

    /// Largest `k` with `R_k > 0`, or `None` if every remainder is positive.
    fn last_positive_index(&self) -> Option<usize> {
        match self.family {
            ModelFamily::MorseClass { c1, c2 } if c2 > 0.0 => {
                // R_k > 0  <=>  k < (c1 + c2) / (2 c2)
                let bound = (c1 + c2) / (2.0 * c2);
                let mut k = (bound.ceil() as usize).saturating_sub(1).max(1);
                while k > 1 && self.raw_remainder(k) <= 0.0 {
                    k -= 1;
                }
                while self.raw_remainder(k + 1) > 0.0 {
                    k += 1;
                }
                Some(k)
            }
            _ => None,
        }
    }

    /// Reports the first non-positive remainder needed by an `levels`-level
    /// ladder and the largest admissible level count.
    pub fn validate(&self, levels: usize) -> ValidityReport {
        let last = self.last_positive_index();
        let mut first_bad = match last {
            Some(k) if levels > k + 1 => Some(k + 1),
            _ => None,
        };
        if first_bad.is_none() {
            // underflow guard for very long geometric ladders
            first_bad = (1..levels).find(|&k| !(self.raw_remainder(k) > 0.0));
        }
        ValidityReport {
            requested_levels: levels,
            first_bad,
            max_levels: last.map(|k| k + 1),
        }
    }

    /// Cumulative-sum ladder `E_0 = 0, E_n = E_{n−1} + R_n` for `n < levels`.
    pub fn build_ladder(&self, levels: usize) -> Result<LadderSpectrum> {
        if levels < 2 {
            return Err(Error::TooFewLevels(levels));
        }
        let report = self.validate(levels);
        if let Some(bad) = report.first_bad {
            return Err(match report.max_levels {
                Some(max_levels) => Error::LadderTooLong {
                    requested: levels,
                    max_levels,
                },
                None => Error::NonPositiveRemainder {
                    k: bad,
                    value: self.raw_remainder(bad),
                },
            });
        }
        let remainders: Vec<f64> = (1..levels).map(|k| self.raw_remainder(k)).collect();
        let mut energies = Vec::with_capacity(levels);
        energies.push(0.0);
        for r in &remainders {
            let prev = *energies.last().unwrap();
            energies.push(prev + r);
        }
        Ok(LadderSpectrum {
            energies,
            remainders,
        })
    }
}

/// Truncated ladder `E_0..E_{N−1}` with its remainders `R_1..R_{N−1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct LadderSpectrum {
    energies: Vec<f64>,
    remainders: Vec<f64>,
}

impl LadderSpectrum {
    /// Builds a ladder from an explicit remainder list.
    pub fn from_remainders(remainders: &[f64]) -> Result<Self> {
        if remainders.is_empty() {
            return Err(Error::TooFewLevels(remainders.len() + 1));
        }
        if let Some((i, &r)) = remainders.iter().enumerate().find(|(_, r)| !(**r > 0.0)) {
            return Err(Error::NonPositiveRemainder { k: i + 1, value: r });
        }
        let mut energies = vec![0.0];
        for r in remainders {
            let prev = *energies.last().unwrap();
            energies.push(prev + r);
        }
        Ok(Self {
            energies,
            remainders: remainders.to_vec(),
        })
    }

    /// Number of levels `N`.
    pub fn levels(&self) -> usize {
        self.energies.len()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    /// `R_1..R_{N−1}`.
    pub fn remainders(&self) -> &[f64] {
        &self.remainders
    }

    pub fn energy(&self, n: usize) -> f64 {
        self.energies[n]
    }

    /// Paired-level energies `E_{m+1}`, `m = 0..N−2`: the spectrum of `Ĥ2`.
    pub fn upper_energies(&self) -> &[f64] {
        &self.energies[1..]
    }
}
