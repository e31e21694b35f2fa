//! Emitter-pair geometry, the dipole-dipole coefficients it implies, and the
//! collective (symmetric/antisymmetric and dressed) structure built on them.
//!
//! All rates and frequencies are in units of the single-atom linewidth Γ and
//! all frequencies are laser-frame detunings.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Whether the emitters interact through the shared radiation field.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Coupling {
    #[default]
    Dipolar,
    /// Forces `δ₁₂ = γ₁₂ = 0`; the control experiment for interaction-induced features.
    Independent,
}

/// Which decay channels of the atom pair are retained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AtomModel {
    /// Full two-atom space with both collective channels.
    #[default]
    Full,
    /// Drops the antisymmetric (subradiant) decay channel, leaving only the
    /// symmetric collective operator. Comparison mode only.
    SymmetricOnly,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitterPairConfig {
    /// Interatomic separation times the transition wavenumber.
    pub kr12: f64,
    /// Cosine of the angle between the dipoles and the interatomic axis.
    pub cos_theta12: f64,
    /// Rabi frequency Ω.
    pub rabi: f64,
    /// Propagation direction of the driving laser.
    pub laser_direction: [f64; 3],
    /// Far-field direction seen by the sensors.
    pub detection_direction: [f64; 3],
    /// Number of emitters, 1 or 2.
    pub atoms: usize,
    pub coupling: Coupling,
    pub model: AtomModel,
}

/// Unit vector along the interatomic axis; atom 1 sits at the origin.
pub const AXIS: [f64; 3] = [0.0, 0.0, 1.0];

pub const MAGIC_COS_THETA: f64 = 0.577_350_269_189_625_8;

impl Default for EmitterPairConfig {
    fn default() -> Self {
        Self {
            kr12: 0.05,
            cos_theta12: MAGIC_COS_THETA,
            rabi: 30.0,
            laser_direction: [1.0, 0.0, 0.0],
            detection_direction: [0.0, 1.0, 0.0],
            atoms: 2,
            coupling: Coupling::Dipolar,
            model: AtomModel::Full,
        }
    }
}

impl EmitterPairConfig {
    pub fn pair(kr12: f64, cos_theta12: f64, rabi: f64) -> Self {
        Self {
            kr12,
            cos_theta12,
            rabi,
            ..Self::default()
        }
    }

    pub fn single_atom(rabi: f64) -> Self {
        Self {
            rabi,
            atoms: 1,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.atoms == 1 || self.atoms == 2) {
            return Err(Error::invalid("atoms", "must be 1 or 2"));
        }
        if !(self.kr12 > 0.0 && self.kr12.is_finite()) {
            return Err(Error::invalid("kr12", format!("must be > 0, got {}", self.kr12)));
        }
        if !(self.cos_theta12.abs() <= 1.0) {
            return Err(Error::invalid(
                "cos_theta12",
                format!("must satisfy |cos θ| ≤ 1, got {}", self.cos_theta12),
            ));
        }
        if !(self.rabi >= 0.0 && self.rabi.is_finite()) {
            return Err(Error::invalid("rabi", format!("must be ≥ 0, got {}", self.rabi)));
        }
        for (name, v) in [
            ("laser_direction", self.laser_direction),
            ("detection_direction", self.detection_direction),
        ] {
            let n = norm3(v);
            if (n - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(name, format!("must be a unit vector, |v| = {n}")));
            }
        }
        Ok(())
    }

    /// Atom positions in units of 1/k.
    pub fn positions(&self) -> Vec<[f64; 3]> {
        let mut p = vec![[0.0; 3]];
        if self.atoms == 2 {
            p.push([AXIS[0] * self.kr12, AXIS[1] * self.kr12, AXIS[2] * self.kr12]);
        }
        p
    }

    /// Coefficients entering the master equation, honouring `coupling`.
    pub fn effective_coefficients(&self) -> Result<DipoleCoefficients> {
        match (self.atoms, self.coupling) {
            (1, _) | (_, Coupling::Independent) => Ok(DipoleCoefficients {
                delta12: 0.0,
                gamma12: 0.0,
            }),
            _ => dipole_coefficients(self),
        }
    }
}

fn norm3(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

pub(crate) fn dot3(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DipoleCoefficients {
    /// Coherent exchange δ₁₂ (units of Γ).
    pub delta12: f64,
    /// Cross-damping γ₁₂ (dimensionless).
    pub gamma12: f64,
}

/// Far-field plus near-field dipole-dipole coefficients for the pair.
///
/// The anisotropic factor `1 − 3cos²θ` is treated as exactly zero when it is
/// at roundoff level, since its bracket grows like `(kr)⁻³`.
pub fn dipole_coefficients(config: &EmitterPairConfig) -> Result<DipoleCoefficients> {
    let x = config.kr12;
    if !(x > 0.0) {
        return Err(Error::invalid("kr12", format!("must be > 0, got {x}")));
    }
    let c2 = config.cos_theta12 * config.cos_theta12;
    let transverse = 1.0 - c2;
    let mut aniso = 1.0 - 3.0 * c2;
    if aniso.abs() <= 4.0 * f64::EPSILON {
        aniso = 0.0;
    }
    let (s, c) = x.sin_cos();
    let x2 = x * x;
    let x3 = x2 * x;

    let mut delta12 = -0.75 * transverse * c / x;
    let mut gamma12 = 1.5 * transverse * s / x;
    if aniso != 0.0 {
        delta12 += 0.75 * aniso * (s / x2 + c / x3);
        gamma12 += 1.5 * aniso * damping_bracket(x, s, c);
    }
    Ok(DipoleCoefficients { delta12, gamma12 })
}

/// `cos x / x² − sin x / x³`, with the leading singular terms cancelled
/// analytically below `x = 0.5`.
fn damping_bracket(x: f64, s: f64, c: f64) -> f64 {
    if x >= 0.5 {
        return c / (x * x) - s / (x * x * x);
    }
    // Σ_{k≥1} (−1)^k 2k x^{2k−2} / (2k+1)!
    let x2 = x * x;
    let mut sum = 0.0;
    let mut power = 1.0;
    let mut factorial = 6.0;
    for k in 1..=12u32 {
        let kf = f64::from(k);
        let sign = if k % 2 == 1 { -1.0 } else { 1.0 };
        sum += sign * 2.0 * kf * power / factorial;
        power *= x2;
        factorial *= (2.0 * kf + 2.0) * (2.0 * kf + 3.0);
    }
    sum
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollectiveModes {
    pub gamma_s: f64,
    pub gamma_a: f64,
    pub delta_s: f64,
    pub delta_a: f64,
}

pub fn collective_modes(coeffs: &DipoleCoefficients) -> CollectiveModes {
    CollectiveModes {
        gamma_s: 1.0 + coeffs.gamma12,
        gamma_a: 1.0 - coeffs.gamma12,
        delta_s: coeffs.delta12,
        delta_a: -coeffs.delta12,
    }
}

/// Eigenstructure of the resonant drive within one excitation manifold,
/// restricted to `{|↑↑⟩, |S⟩, |↓↓⟩}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DressedTriplet {
    /// `E¹ ≥ E² = 0 ≥ E³`.
    pub energies: [f64; 3],
    /// Amplitudes of `|u¹⟩ = a₁|↑↑⟩ + a₂√2|S⟩ + a₁|↓↓⟩`.
    pub a1: f64,
    pub a2: f64,
    pub delta_12: f64,
    pub delta_23: f64,
    pub delta_13: f64,
    /// `Ω² > Γ² + 4δ₁₂²`; the dressed picture is only quantitative when true.
    pub strong_drive: bool,
}

/// Diagonalises `[[0, Ω/√2, 0], [Ω/√2, δ₁₂, Ω/√2], [0, Ω/√2, 0]]`.
///
/// `(|↑↑⟩ − |↓↓⟩)/√2` decouples at zero energy; the remaining 2×2 block in
/// `{(|↑↑⟩ + |↓↓⟩)/√2, |S⟩}` is `[[0, Ω], [Ω, δ₁₂]]`.
pub fn dressed_triplet(config: &EmitterPairConfig, coeffs: &DipoleCoefficients) -> DressedTriplet {
    let omega = config.rabi;
    let delta = coeffs.delta12;
    let root = (0.25 * delta * delta + omega * omega).sqrt();
    let upper = 0.5 * delta + root;
    let lower = 0.5 * delta - root;

    // Eigenvector of the 2×2 block for `upper`: (Ω, upper), normalised.
    let (x, y) = if omega == 0.0 {
        if delta >= 0.0 {
            (0.0, 1.0)
        } else {
            (1.0, 0.0)
        }
    } else {
        let n = (omega * omega + upper * upper).sqrt();
        (omega / n, upper / n)
    };
    let a1 = x / std::f64::consts::SQRT_2;
    let a2 = y / std::f64::consts::SQRT_2;

    let energies = [upper, 0.0, lower];
    DressedTriplet {
        energies,
        a1,
        a2,
        delta_12: energies[0] - energies[1],
        delta_23: energies[1] - energies[2],
        delta_13: energies[0] - energies[2],
        strong_drive: omega * omega > 1.0 + 4.0 * delta * delta,
    }
}

/// The seven one-photon spectral lines `{0, ±Δ₁₂, ±Δ₂₃, ±Δ₁₃}`, ascending.
pub fn sideband_frequencies(triplet: &DressedTriplet) -> [f64; 7] {
    let mut f = [
        0.0,
        triplet.delta_12,
        -triplet.delta_12,
        triplet.delta_23,
        -triplet.delta_23,
        triplet.delta_13,
        -triplet.delta_13,
    ];
    f.sort_by(|a, b| a.total_cmp(b));
    f
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;
    use proptest::prelude::*;

    fn cfg(kr12: f64, cos: f64) -> EmitterPairConfig {
        EmitterPairConfig::pair(kr12, cos, 30.0)
    }

    // Term-by-term evaluation, kept deliberately naive.
    fn eq4_terms(x: f64, cos: f64) -> (f64, f64) {
        let t = 1.0 - cos * cos;
        let a = 1.0 - 3.0 * cos * cos;
        let d = -(3.0 / 4.0) * t * x.cos() / x
            + (3.0 / 4.0) * a * (x.sin() / x.powi(2) + x.cos() / x.powi(3));
        let g = (3.0 / 2.0) * t * x.sin() / x
            + (3.0 / 2.0) * a * (x.cos() / x.powi(2) - x.sin() / x.powi(3));
        (d, g)
    }

    #[test]
    fn far_field_decay() {
        let c = dipole_coefficients(&cfg(1e3, 0.3)).unwrap();
        assert!(c.delta12.abs() < 2e-3 && c.gamma12.abs() < 2e-3);
    }

    #[test]
    fn magic_angle_close_range() {
        let c = dipole_coefficients(&cfg(0.05, MAGIC_COS_THETA)).unwrap();
        let g = 1.5 * (2.0 / 3.0) * 0.05f64.sin() / 0.05;
        let d = -0.75 * (2.0 / 3.0) * 0.05f64.cos() / 0.05;
        assert!((c.gamma12 - g).abs() < 1e-12);
        assert!((c.delta12 - d).abs() < 1e-12);
        assert!(c.delta12 < 0.0);
    }

    #[test]
    fn matches_term_by_term_away_from_magic_angle() {
        for &x in &[0.05, 0.3, 1.0, 4.0] {
            for &cos in &[0.0, 0.2, 0.9, 1.0] {
                let c = dipole_coefficients(&cfg(x, cos)).unwrap();
                let (d, g) = eq4_terms(x, cos);
                assert!((c.delta12 - d).abs() <= 1e-12 * d.abs().max(1.0));
                assert!((c.gamma12 - g).abs() <= 1e-12 * g.abs().max(1.0));
            }
        }
    }

    #[test]
    fn contact_limit_of_cross_damping() {
        for &cos in &[0.0, 0.5, MAGIC_COS_THETA, 1.0] {
            let mut last = f64::INFINITY;
            for &x in &[1e-2, 1e-3, 1e-4] {
                let g = dipole_coefficients(&cfg(x, cos)).unwrap().gamma12;
                let gap = (1.0 - g).abs();
                assert!(gap <= last + 1e-9, "cos={cos} x={x} gap={gap}");
                last = gap;
            }
            assert!(last < 1e-6);
        }
    }

    #[test]
    fn nonpositive_separation_is_rejected() {
        assert!(dipole_coefficients(&cfg(0.0, 0.5)).is_err());
        assert!(dipole_coefficients(&cfg(-1.0, 0.5)).is_err());
    }

    #[test]
    fn collective_mode_identities() {
        let m = collective_modes(&DipoleCoefficients { delta12: 0.0, gamma12: 0.0 });
        assert_eq!((m.gamma_s, m.gamma_a, m.delta_s, m.delta_a), (1.0, 1.0, 0.0, 0.0));
        let m = collective_modes(&DipoleCoefficients { delta12: -10.0, gamma12: 0.9996 });
        assert!((m.gamma_a - 4e-4).abs() < 1e-15);
        assert_eq!((m.delta_s, m.delta_a), (-10.0, 10.0));
    }

    #[test]
    fn triplet_without_interaction_is_equally_spaced() {
        let c = DipoleCoefficients { delta12: 0.0, gamma12: 0.0 };
        let t = dressed_triplet(&cfg(1.0, 0.5), &c);
        assert_eq!(t.energies, [30.0, 0.0, -30.0]);
        assert_eq!(t.delta_12, t.delta_23);
        let f = sideband_frequencies(&t);
        assert_eq!(f, [-60.0, -30.0, -30.0, 0.0, 30.0, 30.0, 60.0]);
    }

    #[test]
    fn triplet_matches_independent_eigensolve() {
        let config = cfg(0.05, MAGIC_COS_THETA);
        let c = dipole_coefficients(&config).unwrap();
        let t = dressed_triplet(&config, &c);
        let w = config.rabi / 2f64.sqrt();
        let m = Mat::<f64>::from_fn(3, 3, |i, j| match (i, j) {
            (1, 1) => c.delta12,
            (0, 1) | (1, 0) | (1, 2) | (2, 1) => w,
            _ => 0.0,
        });
        let mut ev = m.self_adjoint_eigenvalues(faer::Side::Lower).unwrap();
        ev.sort_by(|a, b| b.total_cmp(a));
        for k in 0..3 {
            assert!((ev[k] - t.energies[k]).abs() < 1e-11, "{ev:?} vs {:?}", t.energies);
        }
        assert_eq!(t.energies[1], 0.0);
        assert!(t.delta_12 < t.delta_23);
        assert!((t.a1 * t.a1 + t.a2 * t.a2 - 0.5).abs() < 1e-14);
        assert!(t.strong_drive);
        // Eigenvector check: M u = E¹ u for u = (a1, a2√2, a1).
        let u = [t.a1, t.a2 * 2f64.sqrt(), t.a1];
        for i in 0..3 {
            let mu: f64 = (0..3).map(|j| m[(i, j)] * u[j]).sum();
            assert!((mu - t.energies[0] * u[i]).abs() < 1e-11);
        }
        let distinct = sideband_frequencies(&t);
        for w in distinct.windows(2) {
            assert!(w[1] - w[0] > 1.0);
        }
    }

    #[test]
    fn sideband_set_construction() {
        let t = DressedTriplet {
            energies: [25.0, 0.0, -35.0],
            a1: 0.5,
            a2: 0.5,
            delta_12: 25.0,
            delta_23: 35.0,
            delta_13: 60.0,
            strong_drive: true,
        };
        assert_eq!(sideband_frequencies(&t), [-60.0, -35.0, -25.0, 0.0, 25.0, 35.0, 60.0]);
    }

    #[test]
    fn validation_names_fields() {
        let mut c = EmitterPairConfig::default();
        c.kr12 = -1.0;
        let e = c.validate().unwrap_err().to_string();
        assert!(e.contains("kr12"), "{e}");
        let mut c = EmitterPairConfig::default();
        c.laser_direction = [1.0, 1.0, 0.0];
        assert!(c.validate().is_err());
    }

    proptest! {
        #[test]
        fn cross_damping_is_bounded(x in 1e-3f64..50.0, cos in -1.0f64..1.0) {
            let g = dipole_coefficients(&cfg(x, cos)).unwrap().gamma12;
            prop_assert!(g.abs() <= 1.0 + 1e-9);
        }

        #[test]
        fn triplet_invariants(x in 1e-2f64..5.0, omega in 0.0f64..300.0) {
            let config = EmitterPairConfig::pair(x, MAGIC_COS_THETA, omega);
            let c = dipole_coefficients(&config).unwrap();
            let t = dressed_triplet(&config, &c);
            prop_assert!((t.delta_13 - t.delta_12 - t.delta_23).abs() < 1e-12 * t.delta_13.max(1.0));
            prop_assert!((t.energies.iter().sum::<f64>() - c.delta12).abs() < 1e-12 * t.delta_13.max(1.0));
            prop_assert!((t.a1 * t.a1 + t.a2 * t.a2 - 0.5).abs() < 1e-12);
            prop_assert!(t.energies[0] >= t.energies[1] && t.energies[1] >= t.energies[2]);
        }
    }
}
