//! Master-equation assembly for the emitters plus sensor bank, steady states,
//! time propagation and two-time correlators.
//!
//! # Conventions
//!
//! * Vectorisation is column stacking: `vec(ρ)[i + j·D] = ρ[i, j]`, so that
//!   `vec(A X B) = (Bᵀ ⊗ A) vec(X)`.
//! * The coherent part is `i[ρ, H] = −i(H ρ − ρ H)`.
//! * The field operator follows the emitter literature's labelling, in which
//!   `E†` is built from *lowering* operators, `E† = Σⱼ σⱼ⁻ e^{−ik n̂·rⱼ}`.
//!   `⟨E E†⟩` is therefore the normally ordered intensity. Mind the dagger:
//!   [`field_lowering`] returns this `E†`.
//!
//! # Balanced representation
//!
//! With a sensor coupling `ε ≈ 10⁻⁴`, a density-matrix element whose bra and
//! ket carry `n` sensor excitations in total scales like `εⁿ`. The solvers
//! work on `y = D⁻¹ vec(ρ)` with `D = diag(εⁿ)`, i.e. on the similarity
//! transform `D⁻¹ 𝓛 D`, whose solution entries are all of order one. Every
//! public function takes and returns unscaled operators.

use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::dipole::{dot3, AtomModel, EmitterPairConfig};
use crate::error::{Error, Result};
use crate::linalg;
use crate::operator::{
    embed, excitation, kron, sigma_minus, Accumulator, HilbertLayout, SparseComplexMatrix, C64, I,
    ONE, ZERO,
};

pub const DEFAULT_EPSILON: f64 = 1e-4;

/// Superoperator dimension up to which propagation uses dense exponentials.
pub const DENSE_PROPAGATION_LIMIT: usize = 1024;

/// A weakly coupled two-level frequency filter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorSpec {
    /// Laser-frame resonance ωₛ.
    pub omega: f64,
    /// Linewidth Γₛ.
    pub linewidth: f64,
    /// Coupling ε to the radiated field.
    pub epsilon: f64,
}

impl SensorSpec {
    pub fn new(omega: f64, linewidth: f64) -> Self {
        Self {
            omega,
            linewidth,
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.linewidth > 0.0 && self.linewidth.is_finite()) {
            return Err(Error::invalid("sensor.linewidth", "must be > 0"));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid("sensor.epsilon", "must be ≥ 0"));
        }
        if !self.omega.is_finite() {
            return Err(Error::invalid("sensor.omega", "must be finite"));
        }
        Ok(())
    }

    /// Couplings above this start to perturb the emitters noticeably.
    pub fn is_weak(&self) -> bool {
        self.epsilon <= 1e-2
    }
}

/// A Lindblad channel `(rate/2)(2LρL† − L†Lρ − ρL†L)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CollapseChannel {
    pub label: String,
    pub rate: f64,
    pub operator: SparseComplexMatrix,
}

/// Conventional `E†`: the positive-frequency far field along the
/// detection direction, built from lowering operators.
pub fn field_lowering(config: &EmitterPairConfig, layout: &HilbertLayout) -> Result<SparseComplexMatrix> {
    if layout.atom_count() != config.atoms {
        return Err(Error::invalid(
            "layout",
            format!("expected {} atoms, layout has {}", config.atoms, layout.atom_count()),
        ));
    }
    let dim = layout.dim();
    let mut acc = Accumulator::new(dim, dim);
    for (j, r) in config.positions().into_iter().enumerate() {
        let phase = C64::from_polar(1.0, -dot3(config.detection_direction, r));
        acc.add(&embed(&sigma_minus(), j, layout)?, phase);
    }
    Ok(acc.finish())
}

fn validate_inputs(config: &EmitterPairConfig, sensors: &[SensorSpec]) -> Result<()> {
    config.validate()?;
    sensors.iter().try_for_each(SensorSpec::validate)
}

/// Drive + exchange + sensor detuning + sensor-field coupling.
pub fn build_hamiltonian(config: &EmitterPairConfig, sensors: &[SensorSpec]) -> Result<SparseComplexMatrix> {
    validate_inputs(config, sensors)?;
    let layout = HilbertLayout::new(config.atoms, sensors.len());
    let dim = layout.dim();
    let coeffs = config.effective_coefficients()?;
    let mut acc = Accumulator::new(dim, dim);

    let lowering: Vec<SparseComplexMatrix> = (0..config.atoms)
        .map(|j| embed(&sigma_minus(), j, &layout))
        .collect::<Result<_>>()?;

    for (j, r) in config.positions().into_iter().enumerate() {
        let phase = C64::from_polar(1.0, dot3(config.laser_direction, r));
        let half = 0.5 * config.rabi;
        acc.add(&lowering[j], phase.conj() * half);
        acc.add(&lowering[j].adjoint(), phase * half);
    }

    if config.atoms == 2 && coeffs.delta12 != 0.0 {
        let exchange = lowering[0].adjoint().multiply(&lowering[1])?;
        acc.add(&exchange, C64::new(coeffs.delta12, 0.0));
        acc.add(&exchange.adjoint(), C64::new(coeffs.delta12, 0.0));
    }

    if !sensors.is_empty() {
        let e_dag = field_lowering(config, &layout)?;
        let e = e_dag.adjoint();
        for (k, s) in sensors.iter().enumerate() {
            let site = layout.sensor_site(k);
            let xi = embed(&sigma_minus(), site, &layout)?;
            acc.add(&embed(&excitation(), site, &layout)?, C64::new(s.omega, 0.0));
            let eps = C64::new(s.epsilon, 0.0);
            let coupling = e.multiply(&xi)?;
            acc.add(&coupling, eps);
            acc.add(&coupling.adjoint(), eps);
        }
    }
    Ok(acc.finish())
}

/// Atomic decay through collective channels plus one decay channel per sensor.
///
/// The damping matrix `[[1, γ₁₂], [γ₁₂, 1]]` is diagonalised into the
/// symmetric and antisymmetric modes with rates `1 ± γ₁₂`.
pub fn build_collapse_channels(
    config: &EmitterPairConfig,
    sensors: &[SensorSpec],
) -> Result<Vec<CollapseChannel>> {
    validate_inputs(config, sensors)?;
    let layout = HilbertLayout::new(config.atoms, sensors.len());
    let mut channels = Vec::new();
    if config.atoms == 1 {
        channels.push(CollapseChannel {
            label: "atom".into(),
            rate: 1.0,
            operator: embed(&sigma_minus(), 0, &layout)?,
        });
    } else {
        let gamma12 = config.effective_coefficients()?.gamma12;
        if gamma12.abs() > 1.0 {
            return Err(Error::UnphysicalDamping { gamma12 });
        }
        let s1 = embed(&sigma_minus(), 0, &layout)?;
        let s2 = embed(&sigma_minus(), 1, &layout)?;
        let r = std::f64::consts::FRAC_1_SQRT_2;
        channels.push(CollapseChannel {
            label: "symmetric".into(),
            rate: 1.0 + gamma12,
            operator: s1.add(&s2)?.scale(C64::new(r, 0.0)),
        });
        if config.model == AtomModel::Full {
            channels.push(CollapseChannel {
                label: "antisymmetric".into(),
                rate: 1.0 - gamma12,
                operator: s1.add(&s2.scale(-ONE))?.scale(C64::new(r, 0.0)),
            });
        }
    }
    for (k, s) in sensors.iter().enumerate() {
        channels.push(CollapseChannel {
            label: format!("sensor-{k}"),
            rate: s.linewidth,
            operator: embed(&sigma_minus(), layout.sensor_site(k), &layout)?,
        });
    }
    Ok(channels)
}

/// Column-stacked Liouvillian with `d vec(ρ)/dt = 𝓛 vec(ρ)`.
pub fn vectorize(h: &SparseComplexMatrix, channels: &[CollapseChannel]) -> SparseComplexMatrix {
    let d = h.rows();
    let id = SparseComplexMatrix::identity(d);
    let d2 = d * d;
    let mut acc = Accumulator::new(d2, d2);
    acc.add(&kron(&id, h), -I);
    acc.add(&kron(&h.transpose(), &id), I);
    for ch in channels {
        if ch.rate == 0.0 {
            continue;
        }
        let l = &ch.operator;
        let ldl = l.adjoint().multiply(l).expect("square channel operator");
        let half = C64::new(0.5 * ch.rate, 0.0);
        acc.add(&kron(&l.conj(), l), half * 2.0);
        acc.add(&kron(&id, &ldl), -half);
        acc.add(&kron(&ldl.transpose(), &id), -half);
    }
    acc.finish()
}

/// Liouvillian in both its plain and balanced forms.
#[derive(Clone, Debug)]
pub struct Superoperator {
    dim: usize,
    raw: SparseComplexMatrix,
    balanced: SparseComplexMatrix,
    /// `d_p` of the balancing transform, indexed like `vec(ρ)`.
    scale: Vec<f64>,
    balanced_norm_1: f64,
}

impl Superoperator {
    /// `state_weights[i]` is the expected magnitude of basis state `i`'s amplitude.
    pub fn new(raw: SparseComplexMatrix, state_weights: &[f64]) -> Self {
        let dim = state_weights.len();
        assert_eq!(raw.rows(), dim * dim, "weights do not match superoperator");
        let scale: Vec<f64> = (0..dim * dim)
            .map(|p| state_weights[p % dim] * state_weights[p / dim])
            .collect();
        let balanced = SparseComplexMatrix::from_triplets(
            raw.rows(),
            raw.cols(),
            raw.iter().map(|(r, c, v)| (r, c, v * (scale[c] / scale[r]))),
        );
        let balanced_norm_1 = balanced.norm_1();
        Self {
            dim,
            raw,
            balanced,
            scale,
            balanced_norm_1,
        }
    }

    pub fn unbalanced(raw: SparseComplexMatrix) -> Self {
        let dim = (raw.rows() as f64).sqrt().round() as usize;
        Self::new(raw, &vec![1.0; dim])
    }

    /// Hilbert-space dimension D.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn matrix(&self) -> &SparseComplexMatrix {
        &self.raw
    }

    pub fn balanced(&self) -> &SparseComplexMatrix {
        &self.balanced
    }

    fn to_balanced(&self, x: &Mat<C64>) -> Vec<C64> {
        let d = self.dim;
        (0..d * d).map(|p| x[(p % d, p / d)] / self.scale[p]).collect()
    }

    fn from_balanced(&self, y: &[C64]) -> Mat<C64> {
        let d = self.dim;
        Mat::from_fn(d, d, |i, j| y[i + j * d] * self.scale[i + j * d])
    }

    /// `‖𝓛 vec(ρ)‖₂` evaluated through the balanced form.
    fn residual_of_balanced(&self, y: &[C64]) -> f64 {
        let mut out = vec![ZERO; y.len()];
        self.balanced.matvec(y, &mut out);
        out.iter()
            .zip(&self.scale)
            .map(|(v, s)| (v * s).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    pub fn residual(&self, rho: &Mat<C64>) -> f64 {
        self.residual_of_balanced(&self.to_balanced(rho))
    }
}

/// Per-basis-state weight: product of ε over the excited sensors.
fn state_weights(layout: &HilbertLayout, sensors: &[SensorSpec]) -> Vec<f64> {
    (0..layout.dim())
        .map(|i| {
            sensors
                .iter()
                .enumerate()
                .filter(|(k, _)| layout.local_state(i, layout.sensor_site(*k)) == 1)
                .map(|(_, s)| if s.epsilon > 0.0 { s.epsilon } else { 1.0 })
                .product()
        })
        .collect()
}

/// Everything needed to solve one configuration.
#[derive(Clone, Debug)]
pub struct ModelAssembly {
    pub layout: HilbertLayout,
    pub hamiltonian: SparseComplexMatrix,
    pub collapse_channels: Vec<CollapseChannel>,
    pub superoperator: Superoperator,
    pub sensors: Vec<SensorSpec>,
}

impl ModelAssembly {
    pub fn build(config: &EmitterPairConfig, sensors: &[SensorSpec]) -> Result<Self> {
        let hamiltonian = build_hamiltonian(config, sensors)?;
        let collapse_channels = build_collapse_channels(config, sensors)?;
        let layout = HilbertLayout::new(config.atoms, sensors.len());
        let raw = vectorize(&hamiltonian, &collapse_channels);
        let superoperator = Superoperator::new(raw, &state_weights(&layout, sensors));
        Ok(Self {
            layout,
            hamiltonian,
            collapse_channels,
            superoperator,
            sensors: sensors.to_vec(),
        })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    /// Lowering operator `ξ` of sensor `k`.
    pub fn sensor_lowering(&self, k: usize) -> Result<SparseComplexMatrix> {
        if k >= self.layout.sensor_count() {
            return Err(Error::SiteOutOfRange {
                site: self.layout.atom_count() + k,
                sites: self.layout.site_count(),
            });
        }
        embed(&sigma_minus(), self.layout.sensor_site(k), &self.layout)
    }

    pub fn sensor_number(&self, k: usize) -> Result<SparseComplexMatrix> {
        let xi = self.sensor_lowering(k)?;
        xi.adjoint().multiply(&xi)
    }

    pub fn steady_state(&self) -> Result<DensityMatrix> {
        steady_state(&self.superoperator)
    }
}

/// Steady-state density matrix with its solver residual `‖𝓛 vec(ρ)‖₂`.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    pub data: Mat<C64>,
    pub residual: f64,
}

impl DensityMatrix {
    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.data[(i, i)]).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut m: f64 = 0.0;
        for i in 0..d {
            for j in 0..d {
                m = m.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        m
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(linalg::hermitian_eigenvalues(&self.data)?[0])
    }

    pub fn expect(&self, op: &SparseComplexMatrix) -> Result<C64> {
        crate::operator::expectation(op, self.data.as_ref())
    }
}

/// Unique null vector of `𝓛` normalised to unit trace.
///
/// The population equation of the all-ground state is replaced by the trace
/// condition and the resulting sparse system is solved directly. The result
/// is projected onto its Hermitian part, which removes roundoff amplified
/// along slow (subradiant) modes without raising the residual.
pub fn steady_state(l: &Superoperator) -> Result<DensityMatrix> {
    let d = l.dim;
    let n = d * d;
    let replaced = 0usize;
    let mut entries: Vec<(usize, usize, C64)> =
        l.balanced.iter().filter(|&(r, _, _)| r != replaced).collect();
    for i in 0..d {
        let p = i + i * d;
        entries.push((replaced, p, C64::new(l.scale[p], 0.0)));
    }
    let a = SparseComplexMatrix::from_triplets(n, n, entries);
    let mut b = vec![ZERO; n];
    b[replaced] = ONE;
    let (y, condition_estimate) = linalg::sparse_solve(&a, &b)?;

    let raw = l.from_balanced(&y);
    let data = Mat::from_fn(d, d, |i, j| (raw[(i, j)] + raw[(j, i)].conj()) * 0.5);
    let residual = l.residual(&data);
    let rho = DensityMatrix { data, residual };
    let trace_err = (rho.trace() - ONE).norm();
    if !(residual < 1e-8) || !(trace_err < 1e-8) {
        return Err(Error::SingularSystem {
            condition_estimate,
            residual,
        });
    }
    Ok(rho)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Propagator {
    /// Dense exponentials up to [`DENSE_PROPAGATION_LIMIT`], sparse otherwise.
    Auto,
    Dense,
    Sparse,
}

/// `exp(𝓛τ) X` for every τ of a sorted, nonnegative grid.
pub fn evolve(l: &Superoperator, x0: &Mat<C64>, tau_grid: &[f64]) -> Result<Vec<Mat<C64>>> {
    evolve_with(l, x0, tau_grid, Propagator::Auto)
}

pub fn evolve_with(
    l: &Superoperator,
    x0: &Mat<C64>,
    tau_grid: &[f64],
    method: Propagator,
) -> Result<Vec<Mat<C64>>> {
    let d = l.dim;
    if x0.nrows() != d || x0.ncols() != d {
        return Err(Error::DimensionMismatch {
            op: "evolve",
            left: (d, d),
            right: (x0.nrows(), x0.ncols()),
        });
    }
    if tau_grid.iter().any(|t| !(*t >= 0.0)) || tau_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::invalid("tau_grid", "must be sorted and nonnegative"));
    }
    let dense = match method {
        Propagator::Auto => d * d <= DENSE_PROPAGATION_LIMIT,
        Propagator::Dense => true,
        Propagator::Sparse => false,
    };

    let mut y = l.to_balanced(x0);
    let mut now = 0.0;
    let mut out = Vec::with_capacity(tau_grid.len());
    let mut dense_l: Option<Mat<C64>> = None;
    let mut cached: Option<(f64, Mat<C64>)> = None;
    let mut steps = 0usize;

    for &tau in tau_grid {
        let dt = tau - now;
        if dt > 0.0 {
            if dense {
                let lm = dense_l.get_or_insert_with(|| l.balanced.to_dense());
                let reuse = matches!(&cached, Some((h, _)) if (h - dt).abs() <= 1e-13 * dt);
                if !reuse {
                    let scaled = Mat::from_fn(lm.nrows(), lm.ncols(), |i, j| lm[(i, j)] * dt);
                    cached = Some((dt, linalg::expm(&scaled)?));
                }
                let p = &cached.as_ref().expect("cached propagator").1;
                let mut next = vec![ZERO; y.len()];
                for j in 0..y.len() {
                    let yj = y[j];
                    if yj == ZERO {
                        continue;
                    }
                    let col = p.col(j);
                    for i in 0..y.len() {
                        next[i] += col[i] * yj;
                    }
                }
                y = next;
            } else {
                steps += linalg::expmv(&l.balanced, dt, &mut y, l.balanced_norm_1).map_err(
                    |e| match e {
                        Error::Integrator { message, .. } => Error::Integrator {
                            tau: now,
                            steps,
                            message,
                        },
                        other => other,
                    },
                )?;
            }
            now = tau;
        }
        if now == 0.0 {
            out.push(x0.clone());
        } else {
            out.push(l.from_balanced(&y));
        }
    }
    Ok(out)
}

/// Steady-state `⟨A(t) B(t+τ) C(t)⟩ = Tr[B exp(𝓛τ)(C ρ A)]` for τ ≥ 0.
pub fn two_time_correlator(
    l: &Superoperator,
    rho_ss: &DensityMatrix,
    left: &SparseComplexMatrix,
    middle: &SparseComplexMatrix,
    right: &SparseComplexMatrix,
    tau_grid: &[f64],
) -> Result<Vec<C64>> {
    let x0 = left.dense_mul(right.mul_dense(rho_ss.data.as_ref())?.as_ref())?;
    let states = evolve(l, &x0, tau_grid)?;
    states
        .iter()
        .map(|x| crate::operator::expectation(middle, x.as_ref()))
        .collect()
}

/// Streams `Tr[B exp(𝓛 kΔτ)(C ρ A)]` for `k = 0, 1, 2, …` until `visit`
/// returns `false`. Suited to long uniform grids that should not be stored.
pub fn stream_correlator(
    l: &Superoperator,
    rho_ss: &DensityMatrix,
    left: &SparseComplexMatrix,
    middle: &SparseComplexMatrix,
    right: &SparseComplexMatrix,
    dtau: f64,
    mut visit: impl FnMut(usize, C64) -> bool,
) -> Result<()> {
    if !(dtau > 0.0) {
        return Err(Error::invalid("dtau", "must be > 0"));
    }
    let d = l.dim;
    let x0 = left.dense_mul(right.mul_dense(rho_ss.data.as_ref())?.as_ref())?;
    let mut y = l.to_balanced(&x0);
    // Tr[B X] = Σ_p w_p y_p with w_{i + jD} = B[j, i] d_{i + jD}.
    let mut weights: Vec<(usize, C64)> = middle
        .iter()
        .map(|(r, c, v)| (c + r * d, v * l.scale[c + r * d]))
        .collect();
    weights.sort_by_key(|w| w.0);
    let trace = |y: &[C64]| weights.iter().map(|&(p, w)| w * y[p]).sum::<C64>();

    let dense = d * d <= DENSE_PROPAGATION_LIMIT;
    let propagator = if dense {
        let lm = l.balanced.to_dense();
        Some(linalg::expm(&Mat::from_fn(d * d, d * d, |i, j| lm[(i, j)] * dtau))?)
    } else {
        None
    };
    let mut next = vec![ZERO; y.len()];
    let mut k = 0usize;
    loop {
        if !visit(k, trace(&y)) {
            return Ok(());
        }
        match &propagator {
            Some(p) => {
                next.iter_mut().for_each(|v| *v = ZERO);
                for j in 0..y.len() {
                    let yj = y[j];
                    if yj == ZERO {
                        continue;
                    }
                    let col = p.col(j);
                    for i in 0..y.len() {
                        next[i] += col[i] * yj;
                    }
                }
                std::mem::swap(&mut y, &mut next);
            }
            None => {
                linalg::expmv(&l.balanced, dtau, &mut y, l.balanced_norm_1)?;
            }
        }
        k += 1;
    }
}
