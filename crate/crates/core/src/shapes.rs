//! Admissible stress-energy shapes for a three-dimensional null hypersurface.
//!
//! In an adapted coframe `(θ⁰, θ¹, θ², θ³)` the level-`G` shape is
//!
//! ```text
//! T_G = λ(θ¹⊗θ¹ + θ²⊗θ²) + π θ⁰⊗θ⁰ + σ(θ¹⊗θ² + θ²⊗θ¹)
//!     + ρ₁(θ¹⊗θ⁰ + θ⁰⊗θ¹) + ρ₂(θ²⊗θ⁰ + θ⁰⊗θ²) + ρ₃(θ³⊗θ⁰ + θ⁰⊗θ³)
//! ```
//!
//! `G_I` sets `λ = σ = 0` and `ρ₃ = ½S`; `G_R` keeps only `λ` and `ρ₃`
//! with `ρ₃ − λ = ½S`. The display has six free parameters; the prose
//! count of seven nonzero components is reported alongside but not enforced.

use nalgebra::Matrix4;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::Level;

/// Tolerance for the level constraints of a pattern.
pub const PATTERN_TOL: f64 = 1e-12;

/// Component count stated in prose for the level-`G` shape.
pub const STATED_NONZERO_COMPONENTS: usize = 7;

/// Frame slots that no level allows.
pub const FORBIDDEN_SLOTS: [(usize, usize); 3] = [(1, 3), (2, 3), (3, 3)];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StressEnergyPattern {
    pub level: Level,
    pub lambda: f64,
    pub pi: f64,
    pub sigma: f64,
    pub rho: [f64; 3],
    /// Scalar curvature entering the `ρ₃` constraint.
    pub scalar: f64,
}

impl StressEnergyPattern {
    pub fn zero(level: Level) -> Self {
        Self {
            level,
            lambda: 0.0,
            pi: 0.0,
            sigma: 0.0,
            rho: [0.0; 3],
            scalar: 0.0,
        }
    }

    /// `G_I` pattern: `λ = σ = 0`, `ρ₃ = ½S`.
    pub fn gi(pi: f64, rho1: f64, rho2: f64, scalar: f64) -> Self {
        Self {
            level: Level::GI,
            lambda: 0.0,
            pi,
            sigma: 0.0,
            rho: [rho1, rho2, 0.5 * scalar],
            scalar,
        }
    }

    /// `G_R` pattern: only `λ` and `ρ₃ = λ + ½S`.
    pub fn gr(lambda: f64, scalar: f64) -> Self {
        Self {
            level: Level::GR,
            lambda,
            pi: 0.0,
            sigma: 0.0,
            rho: [0.0, 0.0, lambda + 0.5 * scalar],
            scalar,
        }
    }

    /// Largest violation of the level constraints.
    pub fn constraint_residual(&self) -> f64 {
        let half_s = 0.5 * self.scalar;
        match self.level {
            Level::G => 0.0,
            Level::GI => self.lambda.abs().max(self.sigma.abs()).max((self.rho[2] - half_s).abs()),
            Level::GR => self
                .pi
                .abs()
                .max(self.sigma.abs())
                .max(self.rho[0].abs())
                .max(self.rho[1].abs())
                .max((self.rho[2] - self.lambda - half_s).abs()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = self.constraint_residual();
        if r > PATTERN_TOL {
            return Err(Error::PatternInvariant(format!(
                "{:?} pattern violates its level constraints by {r:e}",
                self.level
            )));
        }
        Ok(())
    }

    /// The same parameters read as a level-`G` pattern.
    pub fn as_g(&self) -> Self {
        Self { level: Level::G, ..*self }
    }

    /// Number of free parameters at this level, with `S` counted as given.
    pub fn free_parameters(level: Level) -> usize {
        match level {
            Level::G => 6,
            Level::GI => 3,
            Level::GR => 1,
        }
    }
}

/// Symmetric 4×4 component matrix in the adapted coframe.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameSymmetricTensor(pub Matrix4<f64>);

impl FrameSymmetricTensor {
    pub fn new(m: Matrix4<f64>) -> Result<Self> {
        let asym = (m - m.transpose()).amax();
        if asym > PATTERN_TOL * m.amax().max(1.0) {
            return Err(Error::NotSymmetric(asym));
        }
        Ok(Self(m))
    }

    pub fn zero() -> Self {
        Self(Matrix4::zeros())
    }

    pub fn from_slice(m: &nalgebra::DMatrix<f64>) -> Result<Self> {
        if m.shape() != (4, 4) {
            return Err(Error::ShapeMismatch(format!("expected 4×4, got {:?}", m.shape())));
        }
        Self::new(Matrix4::from_fn(|i, j| m[(i, j)]))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    /// Number of nonzero entries counted once per unordered slot.
    pub fn nonzero_slots(&self, tol: f64) -> usize {
        (0..4)
            .flat_map(|i| (i..4).map(move |j| (i, j)))
            .filter(|&(i, j)| self.0[(i, j)].abs() > tol)
            .count()
    }
}

pub fn pattern_matrix(p: &StressEnergyPattern) -> Result<FrameSymmetricTensor> {
    p.validate()?;
    let mut m = Matrix4::zeros();
    m[(1, 1)] = p.lambda;
    m[(2, 2)] = p.lambda;
    m[(0, 0)] = p.pi;
    m[(1, 2)] = p.sigma;
    m[(2, 1)] = p.sigma;
    for i in 0..3 {
        m[(i + 1, 0)] = p.rho[i];
        m[(0, i + 1)] = p.rho[i];
    }
    Ok(FrameSymmetricTensor(m))
}

/// Least-squares fit of a level's pattern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Classification {
    pub pattern: StressEnergyPattern,
    /// Max-abs entry of `ricci − pattern_matrix(pattern)`.
    pub residual: f64,
    /// Nonzero slots of the input, counted once per unordered pair.
    pub nonzero_slots: usize,
}

impl Classification {
    pub fn fits(&self, tol: f64) -> bool {
        self.residual <= tol
    }
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// Fits the pattern of `level` to `ricci`.
///
/// When `scalar` is given the `ρ₃` constraint of `G_I` and `G_R` is imposed
/// with that value; otherwise `ρ₃` is fitted freely and `S` is read back
/// from the fit.
pub fn classify(ricci: &FrameSymmetricTensor, level: Level, scalar: Option<f64>) -> Classification {
    let t = |i: usize, j: usize| ricci.0[(i, j)];
    let rho = |i: usize| mean(&[t(0, i), t(i, 0)]);
    let pattern = match level {
        Level::G => StressEnergyPattern {
            level,
            lambda: mean(&[t(1, 1), t(2, 2)]),
            pi: t(0, 0),
            sigma: mean(&[t(1, 2), t(2, 1)]),
            rho: [rho(1), rho(2), rho(3)],
            scalar: scalar.unwrap_or(0.0),
        },
        Level::GI => {
            let s = scalar.unwrap_or(2.0 * rho(3));
            StressEnergyPattern::gi(t(0, 0), rho(1), rho(2), s)
        }
        Level::GR => match scalar {
            Some(s) => {
                let h = 0.5 * s;
                StressEnergyPattern::gr(mean(&[t(1, 1), t(2, 2), t(0, 3) - h, t(3, 0) - h]), s)
            }
            None => {
                let lambda = mean(&[t(1, 1), t(2, 2)]);
                StressEnergyPattern::gr(lambda, 2.0 * (rho(3) - lambda))
            }
        },
    };
    let fitted = pattern_matrix(&pattern).expect("fitted pattern satisfies its constraints").0;
    Classification {
        pattern,
        residual: (ricci.0 - fitted).amax(),
        nonzero_slots: ricci.nonzero_slots(PATTERN_TOL),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_pattern_is_zero_matrix() {
        for level in Level::ALL {
            assert_eq!(pattern_matrix(&StressEnergyPattern::zero(level)).unwrap(), FrameSymmetricTensor::zero());
        }
    }

    #[test]
    fn gi_example() {
        let m = pattern_matrix(&StressEnergyPattern::gi(1.0, 0.0, 0.0, 2.0)).unwrap();
        let mut expected = Matrix4::zeros();
        expected[(0, 0)] = 1.0;
        expected[(0, 3)] = 1.0;
        expected[(3, 0)] = 1.0;
        assert_eq!(m.0, expected);
    }

    #[test]
    fn gr_example() {
        let p = StressEnergyPattern::gr(1.0, 0.0);
        assert_eq!(p.rho[2], 1.0);
        let m = pattern_matrix(&p).unwrap();
        assert_eq!((m.get(1, 1), m.get(2, 2), m.get(0, 3), m.get(3, 0)), (1.0, 1.0, 1.0, 1.0));
        assert_eq!(m.nonzero_slots(0.0), 3);
    }

    #[test]
    fn invalid_patterns_rejected() {
        let mut p = StressEnergyPattern::gi(1.0, 0.0, 0.0, 2.0);
        p.lambda = 0.5;
        assert!(matches!(pattern_matrix(&p), Err(Error::PatternInvariant(_))));
        let mut p = StressEnergyPattern::gr(1.0, 0.0);
        p.rho[2] = 3.0;
        assert!(pattern_matrix(&p).is_err());
    }

    #[test]
    fn classify_zero() {
        for level in Level::ALL {
            let c = classify(&FrameSymmetricTensor::zero(), level, None);
            assert_eq!(c.residual, 0.0);
            assert_eq!(c.pattern, StressEnergyPattern::zero(level));
        }
    }

    #[test]
    fn forbidden_slot_everywhere() {
        for (i, j) in FORBIDDEN_SLOTS {
            let mut m = Matrix4::zeros();
            m[(i, j)] = 1.0;
            m[(j, i)] = 1.0;
            let t = FrameSymmetricTensor::new(m).unwrap();
            for level in Level::ALL {
                assert_eq!(classify(&t, level, None).residual, 1.0);
                assert_eq!(classify(&t, level, Some(0.0)).residual, 1.0);
            }
        }
    }

    #[test]
    fn null_dust_fits_gi() {
        let mut m = Matrix4::zeros();
        m[(0, 0)] = -0.5;
        let t = FrameSymmetricTensor::new(m).unwrap();
        let c = classify(&t, Level::GI, Some(0.0));
        assert_eq!(c.residual, 0.0);
        assert_eq!(c.pattern.pi, -0.5);
        // a null-dust Ricci is not of G_R shape
        assert_eq!(classify(&t, Level::GR, Some(0.0)).residual, 0.5);
    }

    #[test]
    fn gi_pins_rho3_to_scalar() {
        let p = StressEnergyPattern::gi(0.3, 0.1, -0.2, 1.0);
        let t = pattern_matrix(&p).unwrap();
        assert_eq!(classify(&t, Level::GI, Some(1.0)).residual, 0.0);
        assert_eq!(classify(&t, Level::GI, Some(3.0)).residual, 1.0);
    }

    #[test]
    fn asymmetric_input_rejected() {
        let mut m = Matrix4::zeros();
        m[(0, 1)] = 1.0;
        assert!(matches!(FrameSymmetricTensor::new(m), Err(Error::NotSymmetric(_))));
    }
}
