//! Field correlations, one-photon spectra and sensor-filtered two-photon
//! correlations.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dipole::EmitterPairConfig;
use crate::error::{Error, Result};
use crate::liouvillian::{
    field_lowering, stream_correlator, two_time_correlator, DensityMatrix, ModelAssembly,
    SensorSpec, DEFAULT_EPSILON,
};
use crate::operator::{HilbertLayout, SparseComplexMatrix, C64, ZERO};

/// Populations below this make a normalised sensor correlation meaningless.
pub const POPULATION_FLOOR: f64 = 1e-14;

/// Target for `|g¹(τ_max) − g¹(∞)|` in the Fourier spectrum.
pub const COHERENCE_TAIL_TOLERANCE: f64 = 1e-6;

/// Sensor linewidth and coupling shared by every sensor of a measurement.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Filter {
    pub linewidth: f64,
    pub epsilon: f64,
}

impl Filter {
    pub fn new(linewidth: f64) -> Self {
        Self {
            linewidth,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn at(&self, omega: f64) -> SensorSpec {
        SensorSpec::new(omega, self.linewidth).with_epsilon(self.epsilon)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpectrumMethod {
    SensorScan,
    G1Fourier,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumResult {
    pub omega_grid: Vec<f64>,
    /// Normalised to unit maximum.
    pub values: Vec<f64>,
    /// Coherent fraction `|⟨E⟩|² / ⟨E E†⟩`, reported apart from `values`.
    pub elastic_weight: f64,
    /// Unnormalised maximum of the spectrum, i.e. the factor removed from `values`.
    pub peak_value: f64,
    pub method: SpectrumMethod,
    /// Longest delay actually integrated (Fourier method only).
    pub tau_max: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationPoint {
    pub omega1: f64,
    pub omega2: f64,
    pub tau: f64,
    pub g2: f64,
    pub sensor_linewidth: f64,
}

/// Conventional `E†` (lowering operators) for the atoms of `layout`.
pub fn field_operator(config: &EmitterPairConfig, layout: &HilbertLayout) -> Result<SparseComplexMatrix> {
    field_lowering(config, layout)
}

struct FieldModel {
    model: ModelAssembly,
    rho: DensityMatrix,
    e_dag: SparseComplexMatrix,
    e: SparseComplexMatrix,
    intensity: f64,
}

impl FieldModel {
    fn new(config: &EmitterPairConfig) -> Result<Self> {
        let model = ModelAssembly::build(config, &[])?;
        let rho = model.steady_state()?;
        let e_dag = field_lowering(config, &model.layout)?;
        let e = e_dag.adjoint();
        let intensity = rho.expect(&e.multiply(&e_dag)?)?.re;
        if !(intensity > 1e-14) {
            return Err(Error::ZeroIntensity);
        }
        Ok(Self {
            model,
            rho,
            e_dag,
            e,
            intensity,
        })
    }

    fn coherent_fraction(&self) -> Result<f64> {
        Ok(self.rho.expect(&self.e_dag)?.norm_sqr() / self.intensity)
    }
}

/// Normalised first-order coherence `⟨E(t) E†(t+τ)⟩ / ⟨E E†⟩`.
pub fn g1(config: &EmitterPairConfig, tau_grid: &[f64]) -> Result<Vec<C64>> {
    let f = FieldModel::new(config)?;
    let id = SparseComplexMatrix::identity(f.model.dim());
    let raw = two_time_correlator(&f.model.superoperator, &f.rho, &f.e, &f.e_dag, &id, tau_grid)?;
    Ok(raw.into_iter().map(|v| v / f.intensity).collect())
}

/// Frequency-blind intensity correlation of the total radiated field.
pub fn g2_unfiltered(config: &EmitterPairConfig, tau_grid: &[f64]) -> Result<Vec<f64>> {
    let f = FieldModel::new(config)?;
    let middle = f.e.multiply(&f.e_dag)?;
    let raw = two_time_correlator(&f.model.superoperator, &f.rho, &f.e, &middle, &f.e_dag, tau_grid)?;
    let norm = f.intensity * f.intensity;
    Ok(raw.into_iter().map(|v| v.re / norm).collect())
}

/// Default spectral window `±(Δ₁₃ + 10)`, 401 points.
pub fn default_spectrum_grid(config: &EmitterPairConfig) -> Result<Vec<f64>> {
    let span = crate::dipole::dressed_triplet(config, &config.effective_coefficients()?).delta_13 + 10.0;
    Ok(linspace(-span, span, 401))
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => (0..n).map(|k| a + (b - a) * k as f64 / (n - 1) as f64).collect(),
    }
}

/// One-photon spectrum as the Fourier transform of `g¹(τ) − g¹(∞)`.
///
/// The transform is two-sided through `g¹(−τ) = g¹(τ)*` and uses the
/// `e^{+iωτ}` kernel, so a line at laser-frame detuning `ω₀` appears at
/// `+ω₀` just as it does for a sensor tuned to `ω₀`. The delay window is
/// doubled, keeping the step `tau_max / (n_tau − 1)`, until the coherence
/// has settled within [`COHERENCE_TAIL_TOLERANCE`] of its plateau.
pub fn spectrum_fourier(
    config: &EmitterPairConfig,
    omega_grid: &[f64],
    tau_max: f64,
    n_tau: usize,
) -> Result<SpectrumResult> {
    const MAX_DOUBLINGS: u32 = 12;
    if !(tau_max > 0.0) || n_tau < 2 {
        return Err(Error::invalid("tau", "need tau_max > 0 and at least two samples"));
    }
    let f = FieldModel::new(config)?;
    let plateau = f.coherent_fraction()?;
    let dtau = tau_max / (n_tau - 1) as f64;
    let id = SparseComplexMatrix::identity(f.model.dim());

    let rotors: Vec<C64> = omega_grid.iter().map(|w| C64::from_polar(1.0, w * dtau)).collect();
    let mut phases = vec![C64::new(1.0, 0.0); omega_grid.len()];
    let mut sums = vec![ZERO; omega_grid.len()];
    let mut limit = n_tau - 1;
    let mut doublings = 0;
    let mut last_excess = f64::INFINITY;
    let mut previous = ZERO;
    let mut reached = 0usize;

    stream_correlator(&f.model.superoperator, &f.rho, &f.e, &f.e_dag, &id, dtau, |k, raw| {
        let g = raw / f.intensity - plateau;
        // Trapezoid: half weight at both ends of the current window.
        if k > 0 {
            for ((s, p), r) in sums.iter_mut().zip(phases.iter_mut()).zip(&rotors) {
                let next = *p * *r;
                *s += (previous * *p + g * next) * (0.5 * dtau);
                *p = next;
            }
        }
        previous = g;
        reached = k;
        last_excess = g.norm();
        if k < limit {
            return true;
        }
        if last_excess < COHERENCE_TAIL_TOLERANCE || doublings >= MAX_DOUBLINGS {
            return false;
        }
        doublings += 1;
        limit *= 2;
        true
    })?;
    if last_excess >= COHERENCE_TAIL_TOLERANCE {
        return Err(Error::NonDecaying {
            tau_max: reached as f64 * dtau,
            residual: last_excess,
        });
    }

    let raw: Vec<f64> = sums.iter().map(|s| 2.0 * s.re).collect();
    let peak_value = raw.iter().cloned().fold(f64::MIN, f64::max);
    Ok(SpectrumResult {
        omega_grid: omega_grid.to_vec(),
        values: raw.iter().map(|v| v / peak_value).collect(),
        elastic_weight: plateau,
        peak_value,
        method: SpectrumMethod::G1Fourier,
        tau_max: Some(reached as f64 * dtau),
    })
}

/// Steady-state population of one sensor at `omega`, divided by ε².
pub fn sensor_spectrum_point(config: &EmitterPairConfig, omega: f64, filter: Filter) -> Result<f64> {
    let model = ModelAssembly::build(config, &[filter.at(omega)])?;
    let rho = model.steady_state()?;
    let n = rho.expect(&model.sensor_number(0)?)?.re;
    Ok(n / (filter.epsilon * filter.epsilon))
}

/// Steady-state normally ordered intensity `⟨E E†⟩`.
pub fn field_intensity(config: &EmitterPairConfig) -> Result<f64> {
    Ok(FieldModel::new(config)?.intensity)
}

/// Coherent fraction `|⟨E†⟩|² / ⟨E E†⟩` of the radiated intensity.
pub fn elastic_fraction(config: &EmitterPairConfig) -> Result<f64> {
    FieldModel::new(config)?.coherent_fraction()
}

/// Sensor population per frequency, divided by ε².
///
/// The result is the physical spectrum seen through a Lorentzian filter of
/// width Γₛ, elastic line included.
pub fn spectrum_sensor_scan(
    config: &EmitterPairConfig,
    omega_grid: &[f64],
    filter: Filter,
) -> Result<SpectrumResult> {
    let raw: Vec<f64> = omega_grid
        .par_iter()
        .map(|&w| sensor_spectrum_point(config, w, filter))
        .collect::<Result<_>>()?;
    let elastic_weight = elastic_fraction(config)?;
    let peak_value = raw.iter().cloned().fold(f64::MIN, f64::max);
    Ok(SpectrumResult {
        omega_grid: omega_grid.to_vec(),
        values: raw.iter().map(|v| v / peak_value).collect(),
        elastic_weight,
        peak_value,
        method: SpectrumMethod::SensorScan,
        tau_max: None,
    })
}

/// Steady state of the emitters with a given sensor bank, plus the sensor
/// number operators and populations.
pub struct SensorBank {
    pub model: ModelAssembly,
    pub rho: DensityMatrix,
    pub populations: Vec<f64>,
}

impl SensorBank {
    pub fn solve(config: &EmitterPairConfig, sensors: &[SensorSpec]) -> Result<Self> {
        let model = ModelAssembly::build(config, sensors)?;
        let rho = model.steady_state()?;
        let populations = (0..sensors.len())
            .map(|k| Ok(rho.expect(&model.sensor_number(k)?)?.re))
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self {
            model,
            rho,
            populations,
        })
    }

    pub fn check_populations(&self, which: &[usize]) -> Result<()> {
        for &k in which {
            let p = self.populations[k];
            if !(p >= POPULATION_FLOOR) {
                return Err(Error::UndefinedCorrelation { population: p });
            }
        }
        Ok(())
    }

    /// `⟨ξ_{a}† ξ_{b}† ξ_{c} ξ_{d}⟩` over sensor indices.
    pub fn normal_moment(&self, a: usize, b: usize, c: usize, d: usize) -> Result<C64> {
        let xa = self.model.sensor_lowering(a)?.adjoint();
        let xb = self.model.sensor_lowering(b)?.adjoint();
        let xc = self.model.sensor_lowering(c)?;
        let xd = self.model.sensor_lowering(d)?;
        let op = xa.multiply(&xb)?.multiply(&xc)?.multiply(&xd)?;
        self.rho.expect(&op)
    }

    /// Zero-delay `g²` between two distinct sensors.
    pub fn g2(&self, first: usize, second: usize) -> Result<f64> {
        self.check_populations(&[first, second])?;
        let m = self.normal_moment(first, second, second, first)?;
        Ok(m.re / (self.populations[first] * self.populations[second]))
    }
}

/// Zero-delay two-photon frequency-resolved correlation from two sensors.
///
/// Equal frequencies use two distinct sensors at the same resonance, which
/// produces the bunched diagonal of the two-photon map.
pub fn sensor_g2(config: &EmitterPairConfig, omega1: f64, omega2: f64, filter: Filter) -> Result<CorrelationPoint> {
    let (w1, w2) = if (omega1 - omega2).abs() < 1e-9 {
        (omega1, omega1)
    } else {
        (omega1, omega2)
    };
    let bank = SensorBank::solve(config, &[filter.at(w1), filter.at(w2)])?;
    Ok(CorrelationPoint {
        omega1,
        omega2,
        tau: 0.0,
        g2: bank.g2(0, 1)?,
        sensor_linewidth: filter.linewidth,
    })
}

/// Time-resolved `g²ₛ(ω₁, ω₂, τ)`; sensor 1 clicks at `t`, sensor 2 at `t + τ`.
///
/// Negative delays are evaluated as `g²ₛ(ω₂, ω₁, −τ)`.
pub fn sensor_g2_tau(
    config: &EmitterPairConfig,
    omega1: f64,
    omega2: f64,
    filter: Filter,
    tau_grid: &[f64],
) -> Result<Vec<CorrelationPoint>> {
    let bank = SensorBank::solve(config, &[filter.at(omega1), filter.at(omega2)])?;
    bank.check_populations(&[0, 1])?;
    let norm = bank.populations[0] * bank.populations[1];

    let branch = |first: usize, second: usize, taus: &[f64]| -> Result<Vec<f64>> {
        let xi1 = bank.model.sensor_lowering(first)?;
        let n2 = bank.model.sensor_number(second)?;
        let raw = two_time_correlator(
            &bank.model.superoperator,
            &bank.rho,
            &xi1.adjoint(),
            &n2,
            &xi1,
            taus,
        )?;
        Ok(raw.into_iter().map(|v| v.re / norm).collect())
    };

    let mut forward: Vec<(usize, f64)> = Vec::new();
    let mut backward: Vec<(usize, f64)> = Vec::new();
    for (k, &t) in tau_grid.iter().enumerate() {
        if !t.is_finite() {
            return Err(Error::invalid("tau_grid", "delays must be finite"));
        }
        if t >= 0.0 {
            forward.push((k, t));
        } else {
            backward.push((k, -t));
        }
    }
    forward.sort_by(|a, b| a.1.total_cmp(&b.1));
    backward.sort_by(|a, b| a.1.total_cmp(&b.1));

    let mut g = vec![0.0; tau_grid.len()];
    for (set, (first, second)) in [(&forward, (0, 1)), (&backward, (1, 0))] {
        if set.is_empty() {
            continue;
        }
        let taus: Vec<f64> = set.iter().map(|p| p.1).collect();
        for (&(k, _), v) in set.iter().zip(branch(first, second, &taus)?) {
            g[k] = v;
        }
    }
    Ok(tau_grid
        .iter()
        .zip(g)
        .map(|(&tau, g2)| CorrelationPoint {
            omega1,
            omega2,
            tau,
            g2,
            sensor_linewidth: filter.linewidth,
        })
        .collect())
}

/// Indices of local maxima whose height exceeds `min_relative` of the
/// largest value and that stand above both neighbouring minima by at least
/// `min_prominence` (relative to the largest value).
pub fn find_peaks(values: &[f64], min_relative: f64, min_prominence: f64) -> Vec<usize> {
    let n = values.len();
    let top = values.iter().cloned().fold(f64::MIN, f64::max);
    if n < 3 || !(top > 0.0) {
        return Vec::new();
    }
    let mut peaks = Vec::new();
    let mut i = 1;
    while i + 1 < n {
        if values[i] > values[i - 1] {
            // Walk across a flat top.
            let mut j = i;
            while j + 1 < n && values[j + 1] == values[i] {
                j += 1;
            }
            if j + 1 < n && values[j + 1] < values[i] {
                let peak = (i + j) / 2;
                let left_min = values[..=i].iter().rev().scan(f64::MAX, |m, &v| {
                    if v > values[i] {
                        None
                    } else {
                        *m = m.min(v);
                        Some(*m)
                    }
                });
                let left_min = left_min.last().unwrap_or(values[i]);
                let right_min = values[j..].iter().scan(f64::MAX, |m, &v| {
                    if v > values[i] {
                        None
                    } else {
                        *m = m.min(v);
                        Some(*m)
                    }
                });
                let right_min = right_min.last().unwrap_or(values[i]);
                let prominence = values[i] - left_min.max(right_min);
                if values[i] >= min_relative * top && prominence >= min_prominence * top {
                    peaks.push(peak);
                }
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    peaks
}
