//! Time propagation of the driven interaction-picture Hamiltonian and of its
//! time-independent effective counterpart.
//!
//! The full Hamiltonian `H(t) = e^{iδt} B + e^{−iδt} B†` is integrated with
//! the exponential midpoint rule on a uniform grid of `m` steps per drive
//! period `T = 2π/|δ|`. Because `H` is `T`-periodic and the grid is aligned
//! with the period, the step unitaries repeat every period. They are built
//! once, together with their running products, and whole periods are then
//! crossed with the one-period propagator. Sample times that fall between grid
//! points get one extra midpoint step of the leftover length.

use std::f64::consts::TAU;

use log::warn;
use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::algebra::OperatorExpr;
use crate::effective::{effective_hamiltonian, ChannelSpec};
use crate::error::{Error, Result};
use crate::fock::{realize, DenseOperator, SpaceSpec, StateVector};
use crate::linalg::{unitarity_defect, unitary_step, HermitianEigen};
use crate::params::Params;

/// Fewest grid steps allowed per drive period.
pub const MIN_STEPS_PER_PERIOD: usize = 40;

/// Upper bound on memory used by the cached per-period step products.
const MAX_CACHE_BYTES: usize = 1 << 31;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t_end: f64,
    samples: usize,
}

impl TimeGrid {
    pub fn new(t_end: f64, samples: usize) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidArgument(format!("t_end must be positive (got {t_end})")));
        }
        if samples < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 samples (got {samples})")));
        }
        Ok(Self { t_end, samples })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn times(&self) -> Vec<f64> {
        let last = (self.samples - 1) as f64;
        (0..self.samples).map(|s| self.t_end * s as f64 / last).collect()
    }
}

/// How the full propagator chooses its step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Largest step allowed; the grid uses `max(40, ⌈T/dt_max⌉)` steps per period.
    MaxStep(f64),
    /// Exactly this many steps per period; fewer than 40 is rejected.
    StepsPerPeriod(usize),
}

impl StepControl {
    fn steps_per_period(&self, period: f64) -> Result<usize> {
        match *self {
            StepControl::MaxStep(dt) => {
                if dt.is_nan() || dt <= 0.0 {
                    return Err(Error::InvalidArgument(format!("dt_max must be positive (got {dt})")));
                }
                let m = (period / dt).ceil();
                if m > 1e9 {
                    return Err(Error::InvalidArgument("dt_max is too small for the drive period".into()));
                }
                Ok((m as usize).max(MIN_STEPS_PER_PERIOD))
            }
            StepControl::StepsPerPeriod(m) if m < MIN_STEPS_PER_PERIOD => {
                Err(Error::StepTooLarge { steps_per_period: m, min: MIN_STEPS_PER_PERIOD })
            }
            StepControl::StepsPerPeriod(m) => Ok(m),
        }
    }
}

/// Integrator settings recorded with a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub enum Integrator {
    MidpointExponential {
        steps_per_period: usize,
        step: f64,
        period: f64,
        /// Worst `|U†U − 1|` entry over every step unitary used.
        max_step_defect: f64,
    },
    Eigendecomposition,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
    pub meta: Integrator,
}

impl Trajectory {
    /// Largest `|‖ψ(t)‖ − 1|` over the samples.
    pub fn max_norm_drift(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

fn drive_matrices(spec: &ChannelSpec, params: &Params, space: &SpaceSpec) -> Result<(f64, DMatrix<Complex64>)> {
    for ch in spec.channels() {
        ch.lambda.evaluate_real(params)?;
    }
    let delta = params.get(spec.delta())?;
    if delta == 0.0 || !delta.is_finite() {
        return Err(Error::InvalidArgument(format!("detuning must be finite and nonzero (got {delta})")));
    }
    let b = realize(&spec.drive_operator(), space, params)?.matrix;
    Ok((delta, b))
}

/// Integrates `i dψ/dt = H_I(t) ψ` for the channels of `spec`.
pub fn propagate_full(
    spec: &ChannelSpec,
    params: &Params,
    space: &SpaceSpec,
    psi0: &StateVector,
    grid: &TimeGrid,
    step: StepControl,
) -> Result<Trajectory> {
    let (delta, b) = drive_matrices(spec, params, space)?;
    if psi0.dim() != space.dim() {
        return Err(Error::InvalidArgument("initial state does not match the space".into()));
    }
    let period = TAU / delta.abs();
    let m = step.steps_per_period(period)?;
    let dim = space.dim();
    let bytes = (m + 1).saturating_mul(dim * dim * std::mem::size_of::<Complex64>());
    if bytes > MAX_CACHE_BYTES {
        return Err(Error::InvalidArgument(format!(
            "{m} steps per period on a {dim}-dimensional space needs {bytes} bytes of cache"
        )));
    }
    let h = period / m as f64;
    let bd = b.adjoint();
    let hamiltonian = |t_local: f64| {
        let phase = Complex64::from_polar(1.0, delta * t_local);
        &b * phase + &bd * phase.conj()
    };

    // prefix[j] = U_{j−1} ⋯ U_0, the propagator from the period start to grid point j.
    let mut prefix = Vec::with_capacity(m + 1);
    prefix.push(DMatrix::<Complex64>::identity(dim, dim));
    let mut max_step_defect = 0.0_f64;
    for j in 0..m {
        let u = unitary_step(&hamiltonian((j as f64 + 0.5) * h), h)?;
        max_step_defect = max_step_defect.max(unitarity_defect(&u));
        let next = &u * &prefix[j];
        prefix.push(next);
    }
    // Roundoff in the 'm'-fold product leaves U_T slightly off the unitary
    // group, and that error compounds over thousands of periods. Its polar
    // factor is the nearest unitary.
    let one_period = &nearest_unitary(&prefix[m])?;

    let times = grid.times();
    let mut states = Vec::with_capacity(times.len());
    let mut boundary = psi0.amplitudes.clone();
    let mut periods_done: u64 = 0;
    for &t in &times {
        let mut n = (t / period).floor() as u64;
        let mut local = t - n as f64 * period;
        if local >= period {
            n += 1;
            local -= period;
        }
        let local = local.max(0.0);
        while periods_done < n {
            boundary = one_period * &boundary;
            periods_done += 1;
        }
        let k = ((local / h).floor() as usize).min(m - 1);
        let mut psi = &prefix[k] * &boundary;
        let tau = local - k as f64 * h;
        if tau > 0.0 {
            let u = unitary_step(&hamiltonian(k as f64 * h + tau / 2.0), tau)?;
            max_step_defect = max_step_defect.max(unitarity_defect(&u));
            psi = u * psi;
        }
        if psi.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Numerical(format!("non-finite amplitude at t = {t}")));
        }
        states.push(StateVector::from_unit(psi));
    }
    Ok(Trajectory {
        times,
        states,
        meta: Integrator::MidpointExponential { steps_per_period: m, step: h, period, max_step_defect },
    })
}

fn nearest_unitary(u: &DMatrix<Complex64>) -> Result<DMatrix<Complex64>> {
    // Newton-Schulz iteration X <- X (3 - X†X) / 2 for the polar factor.
    let n = u.nrows();
    let three = DMatrix::<Complex64>::identity(n, n) * Complex64::new(3.0, 0.0);
    let mut x = u.clone();
    for _ in 0..8 {
        if unitarity_defect(&x) < 1e-15 {
            return Ok(x);
        }
        let gram = x.ad_mul(&x);
        x = &x * (&three - gram) * Complex64::new(0.5, 0.0);
    }
    if unitarity_defect(&x) < 1e-13 {
        Ok(x)
    } else {
        Err(Error::Numerical("period propagator is not unitary".into()))
    }
}

/// Propagator of a time-independent Hermitian Hamiltonian, diagonalized once.
#[derive(Debug, Clone)]
pub struct EffectivePropagator {
    eigen: HermitianEigen,
}

impl EffectivePropagator {
    pub fn new(h_eff: &DenseOperator) -> Result<Self> {
        let scale = h_eff.matrix.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let defect = h_eff.hermiticity_defect();
        if defect > 1e-10 * scale {
            return Err(Error::NotHermitian(defect));
        }
        Ok(Self { eigen: HermitianEigen::new(&h_eff.matrix)? })
    }

    /// `exp(−i H t) ψ`; negative `t` runs backwards.
    pub fn evolve(&self, psi: &StateVector, t: f64) -> StateVector {
        StateVector::from_unit(self.eigen.evolve(&psi.amplitudes, t))
    }
}

pub fn propagate_effective(h_eff: &DenseOperator, psi0: &StateVector, grid: &TimeGrid) -> Result<Trajectory> {
    if psi0.dim() != h_eff.dim() {
        return Err(Error::InvalidArgument("initial state does not match the operator".into()));
    }
    let prop = EffectivePropagator::new(h_eff)?;
    let times = grid.times();
    let states = times.iter().map(|&t| if t == 0.0 { psi0.clone() } else { prop.evolve(psi0, t) }).collect();
    Ok(Trajectory { times, states, meta: Integrator::Eigendecomposition })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ObservableSeries {
    pub times: Vec<f64>,
    /// `populations[s][l]`: population of level `l` (declared order) at sample `s`.
    pub populations: Vec<Vec<f64>>,
    pub n_mean: Vec<f64>,
    /// `photon_distribution[s][n]`: probability of `n` photons at sample `s`.
    pub photon_distribution: Vec<Vec<f64>>,
    pub fidelity: Option<Vec<f64>>,
}

impl ObservableSeries {
    pub fn min_fidelity(&self) -> Option<f64> {
        self.fidelity.as_ref().map(|f| f.iter().copied().fold(f64::INFINITY, f64::min))
    }

    pub fn max_infidelity(&self) -> Option<f64> {
        self.min_fidelity().map(|f| (1.0 - f).max(0.0))
    }
}

pub fn observables(traj: &Trajectory, reference: Option<&Trajectory>, space: &SpaceSpec) -> Result<ObservableSeries> {
    if let Some(r) = reference {
        if r.times != traj.times {
            return Err(Error::GridMismatch);
        }
    }
    let fock = space.fock_dim();
    let levels = space.levels().len();
    let mut populations = Vec::with_capacity(traj.states.len());
    let mut n_mean = Vec::with_capacity(traj.states.len());
    let mut photon_distribution = Vec::with_capacity(traj.states.len());
    for psi in &traj.states {
        if psi.dim() != space.dim() {
            return Err(Error::InvalidArgument("state does not match the space".into()));
        }
        let mut pops = vec![0.0; levels];
        let mut dist = vec![0.0; fock];
        for (idx, z) in psi.amplitudes.iter().enumerate() {
            let p = z.norm_sqr();
            pops[idx / fock] += p;
            dist[idx % fock] += p;
        }
        n_mean.push(dist.iter().enumerate().map(|(n, p)| n as f64 * p).sum());
        populations.push(pops);
        photon_distribution.push(dist);
    }
    let fidelity = reference.map(|r| r.states.iter().zip(&traj.states).map(|(a, b)| a.fidelity(b)).collect());
    Ok(ObservableSeries { times: traj.times.clone(), populations, n_mean, photon_distribution, fidelity })
}

/// Settings shared by every run of a dispersive scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanSettings {
    /// Horizon in units of `δ/λ²`, with `λ` the strongest coupling.
    pub horizon: f64,
    pub samples: usize,
    pub step: StepControl,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self { horizon: 10.0, samples: 1001, step: StepControl::StepsPerPeriod(512) }
    }
}

/// `δ/λ` below which a scan refuses to run.
pub const MIN_DISPERSIVE_RATIO: f64 = 5.0;
/// `δ/λ` below which a run is flagged and left out of the slope fit.
pub const WARN_DISPERSIVE_RATIO: f64 = 20.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub delta: f64,
    /// `|δ|/λ_max`; infinite when every coupling vanishes.
    pub ratio: f64,
    pub t_end: f64,
    pub max_infidelity: f64,
    pub warning: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub rows: Vec<ScanRow>,
    /// Least-squares slope of `ln(max_infidelity)` against `ln δ` over the
    /// unflagged rows with nonzero infidelity; needs at least two of them.
    pub slope: Option<f64>,
}

fn max_coupling(spec: &ChannelSpec, params: &Params) -> Result<f64> {
    spec.channels().iter().try_fold(0.0_f64, |acc, ch| Ok(acc.max(ch.lambda.evaluate_real(params)?.abs())))
}

/// Worst infidelity `max_t (1 − F(t))` between the full and effective
/// trajectories of one parameter point. `h_eff` is the symbolic effective
/// Hamiltonian of `spec`.
pub fn compare_with_effective(
    spec: &ChannelSpec,
    h_eff: &OperatorExpr,
    params: &Params,
    space: &SpaceSpec,
    psi0: &StateVector,
    grid: &TimeGrid,
    step: StepControl,
) -> Result<f64> {
    let heff = realize(h_eff, space, params)?;
    let eff = propagate_effective(&heff, psi0, grid)?;
    let full = propagate_full(spec, params, space, psi0, grid, step)?;
    let obs = observables(&full, Some(&eff), space)?;
    Ok(obs.max_infidelity().unwrap_or(0.0))
}

/// Runs the full and effective propagators at each detuning in `deltas` over
/// the horizon `C·δ/λ²` and records the worst infidelity between them.
pub fn dispersive_convergence_scan(
    spec: &ChannelSpec,
    params: &Params,
    space: &SpaceSpec,
    psi0: &StateVector,
    deltas: &[f64],
    settings: &ScanSettings,
) -> Result<ScanReport> {
    if deltas.is_empty() {
        return Err(Error::InvalidArgument("no detunings to scan".into()));
    }
    let lambda = max_coupling(spec, params)?;
    for &d in deltas {
        let ratio = d.abs() / lambda;
        if ratio < MIN_DISPERSIVE_RATIO {
            return Err(Error::InvalidArgument(format!(
                "δ = {d} gives δ/λ = {ratio:.3}, below the dispersive minimum {MIN_DISPERSIVE_RATIO}"
            )));
        }
    }
    let h_eff = effective_hamiltonian(spec);
    let rows = deltas
        .par_iter()
        .map(|&d| {
            let p = params.clone().with(spec.delta(), d);
            let ratio = d.abs() / lambda;
            let warning = ratio < WARN_DISPERSIVE_RATIO;
            if warning {
                warn!("δ/λ = {ratio:.3} at δ = {d} is outside the dispersive regime; excluded from the slope fit");
            }
            let scale = if lambda > 0.0 { lambda * lambda } else { 1.0 };
            let t_end = settings.horizon * d.abs() / scale;
            let grid = TimeGrid::new(t_end, settings.samples)?;
            let max_infidelity = compare_with_effective(spec, &h_eff, &p, space, psi0, &grid, settings.step)?;
            Ok(ScanRow { delta: d, ratio, t_end, max_infidelity, warning })
        })
        .collect::<Result<Vec<_>>>()?;
    let points: Vec<(f64, f64)> = rows
        .iter()
        .filter(|r| !r.warning && r.max_infidelity > 0.0)
        .map(|r| (r.delta.abs(), r.max_infidelity))
        .collect();
    Ok(ScanReport { slope: loglog_slope(&points), rows })
}

/// Least-squares slope of `ln y` against `ln x`.
pub fn loglog_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.ln(), y.ln())).collect();
    let n = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_times_are_uniform() {
        let g = TimeGrid::new(2.0, 5).unwrap();
        assert_eq!(g.times(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(TimeGrid::new(0.0, 5).is_err());
        assert!(TimeGrid::new(1.0, 1).is_err());
    }

    #[test]
    fn step_control() {
        let period = 1.0;
        assert_eq!(StepControl::MaxStep(1.0).steps_per_period(period).unwrap(), 40);
        assert_eq!(StepControl::MaxStep(0.001).steps_per_period(period).unwrap(), 1000);
        assert_eq!(StepControl::StepsPerPeriod(64).steps_per_period(period).unwrap(), 64);
        assert_eq!(
            StepControl::StepsPerPeriod(20).steps_per_period(period),
            Err(Error::StepTooLarge { steps_per_period: 20, min: 40 })
        );
    }

    #[test]
    fn slope_of_power_law() {
        let pts: Vec<_> = [20.0, 50.0, 100.0].iter().map(|&x: &f64| (x, 3.0 * x.powf(-2.0))).collect();
        assert!((loglog_slope(&pts).unwrap() + 2.0).abs() < 1e-12);
        assert_eq!(loglog_slope(&pts[..1]), None);
    }
}
