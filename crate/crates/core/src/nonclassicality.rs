//! Cauchy-Schwarz and Bell-type tests on sensor-filtered photon pairs, and
//! the leapfrog antidiagonals that organise them.

use serde::{Deserialize, Serialize};

use crate::dipole::{DressedTriplet, EmitterPairConfig};
use crate::error::Result;
use crate::observables::{sensor_g2, Filter, SensorBank};
use crate::operator::C64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsiPoint {
    pub omega1: f64,
    pub omega2: f64,
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
    /// `g12² / (g11 g22)`; above 1 the pair violates the Cauchy-Schwarz inequality.
    pub ratio: f64,
}

/// Cauchy-Schwarz ratio from three two-sensor steady states.
pub fn csi_ratio(config: &EmitterPairConfig, omega1: f64, omega2: f64, filter: Filter) -> Result<CsiPoint> {
    let g11 = sensor_g2(config, omega1, omega1, filter)?.g2;
    let g22 = sensor_g2(config, omega2, omega2, filter)?.g2;
    let g12 = sensor_g2(config, omega1, omega2, filter)?.g2;
    Ok(CsiPoint {
        omega1,
        omega2,
        g11,
        g22,
        g12,
        ratio: g12 * g12 / (g11 * g22),
    })
}

/// The five four-operator moments entering the Bell quantifier.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellTerms {
    pub b1111: C64,
    pub b2222: C64,
    pub b1221: C64,
    pub b1122: C64,
    pub b2211: C64,
}

impl BellTerms {
    pub fn quantifier(&self) -> f64 {
        let num = self.b1111 + self.b2222 - self.b1221 * 4.0 - self.b1122 - self.b2211;
        let den = self.b1111 + self.b2222 + self.b1221 * 2.0;
        std::f64::consts::SQRT_2 * (num / den).norm()
    }

    fn scaled(&self, s: f64) -> Self {
        Self {
            b1111: self.b1111 * s,
            b2222: self.b2222 * s,
            b1221: self.b1221 * s,
            b1122: self.b1122 * s,
            b2211: self.b2211 * s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BellPoint {
    pub omega1: f64,
    pub omega2: f64,
    /// Moments divided by `√(n_a1 n_a2 n_b1 n_b2)`, a single factor shared
    /// by all five so the quantifier is unchanged.
    pub b_terms: BellTerms,
    pub quantifier: f64,
}

/// Bell quantifier from one steady state with sensors `a₁, a₂` at `ω₁` and
/// `b₁, b₂` at `ω₂`.
pub fn bell_quantifier(config: &EmitterPairConfig, omega1: f64, omega2: f64, filter: Filter) -> Result<BellPoint> {
    const A1: usize = 0;
    const A2: usize = 1;
    const B1: usize = 2;
    const B2: usize = 3;
    let bank = SensorBank::solve(
        config,
        &[filter.at(omega1), filter.at(omega1), filter.at(omega2), filter.at(omega2)],
    )?;
    bank.check_populations(&[A1, A2, B1, B2])?;
    let bare = BellTerms {
        b1111: bank.normal_moment(A1, A2, A2, A1)?,
        b2222: bank.normal_moment(B1, B2, B2, B1)?,
        b1221: bank.normal_moment(A1, B1, B1, A1)?,
        b1122: bank.normal_moment(A1, A2, B1, B2)?,
        b2211: bank.normal_moment(B2, B1, A2, A1)?,
    };
    let quantifier = bare.quantifier();
    let p = &bank.populations;
    let b_terms = bare.scaled(1.0 / (p[A1] * p[A2] * p[B1] * p[B2]).sqrt());
    Ok(BellPoint {
        omega1,
        omega2,
        b_terms,
        quantifier,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeapfrogLine {
    /// `ω₁ + ω₂` along the line.
    pub sum_value: f64,
    pub label: String,
}

/// The seven antidiagonals `ω₁ + ω₂ ∈ {0, ±Δ₁₂, ±Δ₂₃, ±Δ₁₃}`.
pub fn leapfrog_lines(triplet: &DressedTriplet) -> Vec<LeapfrogLine> {
    let line = |sum_value: f64, label: &str| LeapfrogLine {
        sum_value,
        label: label.to_string(),
    };
    vec![
        line(-triplet.delta_13, "-D13"),
        line(-triplet.delta_23, "-D23"),
        line(-triplet.delta_12, "-D12"),
        line(0.0, "0"),
        line(triplet.delta_12, "+D12"),
        line(triplet.delta_23, "+D23"),
        line(triplet.delta_13, "+D13"),
    ]
}
