//! Time evolution: full-space Schrödinger equation, the three-level
//! amplitude equations, and the site-basis dephasing master equation.
//!
//! All three use the same fixed-step RK4 scheme. Full-space evolution runs in
//! a frame shifted by the endpoint energy `-μ` (a global phase), which keeps
//! the slow dark-state manifold near zero frequency.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

use crate::effective::{effective_at, endpoint_overlap};
use crate::lattice::{diagonalize_medium, BoundState};
use crate::ode::{Rk4, StepPlan};
use crate::protocol::{static_hamiltonian, DisorderRealization, ProtocolSpec};
use crate::{Error, Result};

const NORM_TOLERANCE: f64 = 1e-10;
const POSITIVITY_ABORT: f64 = -1e-6;
pub const DEFAULT_SAMPLES: usize = 501;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub amplitudes: Vec<Complex64>,
    pub time: f64,
}

impl StateVector {
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); dim];
        amplitudes[index] = Complex64::new(1.0, 0.0);
        Self {
            amplitudes,
            time: 0.0,
        }
    }

    /// `|A⟩` in the full `[A, 1..N, B]` basis.
    pub fn at_a(spec: &ProtocolSpec) -> Self {
        Self::basis(spec.dim(), 0)
    }

    /// `|B⟩` in the full `[A, 1..N, B]` basis.
    pub fn at_b(spec: &ProtocolSpec) -> Self {
        Self::basis(spec.dim(), spec.dim() - 1)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.amplitudes[index].norm_sqr()
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    pub entries: DMatrix<Complex64>,
    pub time: f64,
}

impl DensityMatrix {
    pub fn pure(psi: &StateVector) -> Self {
        let v = DVector::from_column_slice(&psi.amplitudes);
        Self {
            entries: &v * v.adjoint(),
            time: psi.time,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn trace(&self) -> Complex64 {
        self.entries.trace()
    }

    pub fn population(&self, index: usize) -> f64 {
        self.entries[(index, index)].re
    }

    /// Largest `|ρ_ij − conj(ρ_ji)|`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0_f64;
        for j in 0..n {
            for i in 0..=j {
                worst = worst.max((self.entries[(i, j)] - self.entries[(j, i)].conj()).norm());
            }
        }
        worst
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (&self.entries + self.entries.adjoint()) * Complex64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.min()
    }

    pub fn validate(&self) -> Result<()> {
        if !self.entries.is_square() {
            return Err(Error::InvalidDensityMatrix("not square".into()));
        }
        let herm = self.hermiticity_error();
        if herm > 1e-10 {
            return Err(Error::InvalidDensityMatrix(format!(
                "not Hermitian (error {herm:e})"
            )));
        }
        let tr = self.trace();
        if (tr.re - 1.0).abs() > 1e-9 || tr.im.abs() > 1e-9 {
            return Err(Error::InvalidDensityMatrix(format!("trace {tr}")));
        }
        let min = self.min_eigenvalue();
        if min < -1e-8 {
            return Err(Error::InvalidDensityMatrix(format!(
                "negative eigenvalue {min:e}"
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum FinalState {
    Pure(StateVector),
    Mixed(DensityMatrix),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    /// `[A, 1..N, B]`
    Full,
    /// `[A, λ₀, B]`
    Effective,
}

/// Step-size control shared by all integrators.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepControl {
    /// Upper bound on the step; defaults to `min(0.02/J, t_max/20000)`.
    pub max_step: Option<f64>,
    /// Re-run with half the step and fail if the final B population moves
    /// by more than this.
    pub verify_halving: Option<f64>,
}

impl StepControl {
    pub fn verified(tolerance: f64) -> Self {
        Self {
            max_step: None,
            verify_halving: Some(tolerance),
        }
    }

    fn max_step(&self, spec: &ProtocolSpec) -> f64 {
        self.max_step
            .unwrap_or_else(|| (0.02 / spec.chain.hopping()).min(spec.t_max / 20_000.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub kind: ModelKind,
    pub spec: ProtocolSpec,
    pub times: Vec<f64>,
    pub pop_a: Vec<f64>,
    pub pop_b: Vec<f64>,
    /// Population of the medium bound mode `|λ₀⟩`.
    pub pop_defect: Vec<f64>,
    /// Total population on the medium sites (equal to `pop_defect` for the
    /// three-level model).
    pub pop_medium: Vec<f64>,
    pub final_state: FinalState,
    pub seed: Option<u64>,
    pub delta: f64,
    pub gamma: f64,
    pub step: f64,
    pub n_steps: usize,
    /// Largest `|Tr ρ − 1|` (or `|‖ψ‖² − 1|`) over the samples.
    pub max_norm_drift: f64,
    /// Smallest density-matrix eigenvalue over the samples (mixed runs only).
    pub min_eigenvalue: Option<f64>,
    pub max_hermiticity_error: Option<f64>,
    /// Change of the final B population under step halving, when verified.
    pub halving_change: Option<f64>,
}

impl Trajectory {
    fn new(kind: ModelKind, spec: &ProtocolSpec, plan: &StepPlan, final_state: FinalState) -> Self {
        let n = plan.segments + 1;
        Self {
            kind,
            spec: *spec,
            times: Vec::with_capacity(n),
            pop_a: Vec::with_capacity(n),
            pop_b: Vec::with_capacity(n),
            pop_defect: Vec::with_capacity(n),
            pop_medium: Vec::with_capacity(n),
            final_state,
            seed: None,
            delta: 0.0,
            gamma: 0.0,
            step: plan.dt(),
            n_steps: plan.total_steps(),
            max_norm_drift: 0.0,
            min_eigenvalue: None,
            max_hermiticity_error: None,
            halving_change: None,
        }
    }

    pub fn final_pop_b(&self) -> f64 {
        *self.pop_b.last().expect("trajectory has samples")
    }

    pub fn final_pop_a(&self) -> f64 {
        *self.pop_a.last().expect("trajectory has samples")
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

fn check_samples(n_samples: usize) -> Result<()> {
    if n_samples < 2 {
        return Err(Error::InvalidSpec(format!(
            "need at least 2 samples, got {n_samples}"
        )));
    }
    Ok(())
}

fn check_normalized(psi: &StateVector, dim: usize) -> Result<()> {
    if psi.len() != dim {
        return Err(Error::InvalidSpec(format!(
            "initial state has dimension {}, expected {dim}",
            psi.len()
        )));
    }
    let n = psi.norm_sqr();
    if (n - 1.0).abs() > NORM_TOLERANCE {
        return Err(Error::NotNormalized(n));
    }
    Ok(())
}

fn verify_halving<F>(traj: &mut Trajectory, tolerance: Option<f64>, rerun: F) -> Result<()>
where
    F: FnOnce() -> Result<Trajectory>,
{
    if let Some(tol) = tolerance {
        let fine = rerun()?;
        let change = (fine.final_pop_b() - traj.final_pop_b()).abs();
        traj.halving_change = Some(change);
        if !(change <= tol) {
            return Err(Error::StepSizeFailure {
                metric: "final B population",
                change,
                tolerance: tol,
            });
        }
    }
    Ok(())
}

/// Normalized medium ground state of the clean chain, embedded in the full
/// basis.
fn bound_mode(spec: &ProtocolSpec) -> Vec<f64> {
    let ground = diagonalize_medium(&spec.chain).eigenvector(0);
    let mut v = vec![0.0; spec.dim()];
    v[1..=spec.chain.n_sites()].copy_from_slice(ground.as_slice());
    v
}

pub fn evolve_schrodinger(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
    initial: &StateVector,
    n_samples: usize,
) -> Result<Trajectory> {
    evolve_schrodinger_with(spec, disorder, initial, n_samples, &StepControl::default())
}

pub fn evolve_schrodinger_with(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
    initial: &StateVector,
    n_samples: usize,
    control: &StepControl,
) -> Result<Trajectory> {
    spec.validate()?;
    check_samples(n_samples)?;
    check_normalized(initial, spec.dim())?;
    let plan = StepPlan::new(spec.t_max, n_samples - 1, control.max_step(spec));
    let mut traj = schrodinger_run(spec, disorder, initial, &plan)?;
    verify_halving(&mut traj, control.verify_halving, || {
        schrodinger_run(spec, disorder, initial, &plan.halved())
    })?;
    Ok(traj)
}

fn schrodinger_run(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
    initial: &StateVector,
    plan: &StepPlan,
) -> Result<Trajectory> {
    let dim = spec.dim();
    let mut h = static_hamiltonian(spec, disorder)?;
    let shift = -spec.mu();
    let mode = bound_mode(spec);
    let mut psi = initial.amplitudes.clone();
    let mut rk = Rk4::new(dim);
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        let (ja, jb) = spec.pulses(t);
        h.set_pulses(ja, jb);
        h.apply_schrodinger(shift, y, out);
    };

    let mut traj = Trajectory::new(
        ModelKind::Full,
        spec,
        plan,
        FinalState::Pure(initial.clone()),
    );
    traj.seed = disorder.map(|d| d.seed);
    traj.delta = disorder.map_or(0.0, |d| d.delta);
    let record = |traj: &mut Trajectory, t: f64, psi: &[Complex64]| {
        let norm: f64 = psi.iter().map(|c| c.norm_sqr()).sum();
        let a = psi[0].norm_sqr();
        let b = psi[dim - 1].norm_sqr();
        let overlap: Complex64 = psi.iter().zip(&mode).map(|(c, v)| c * *v).sum();
        traj.times.push(t);
        traj.pop_a.push(a);
        traj.pop_b.push(b);
        traj.pop_defect.push(overlap.norm_sqr());
        traj.pop_medium.push(norm - a - b);
        traj.max_norm_drift = traj.max_norm_drift.max((norm - 1.0).abs());
    };

    record(&mut traj, 0.0, &psi);
    let dt = plan.dt();
    for seg in 0..plan.segments {
        let t0 = plan.sample_time(seg);
        for i in 0..plan.steps_per_segment {
            rk.step(&mut rhs, t0 + i as f64 * dt, dt, &mut psi);
        }
        record(&mut traj, plan.sample_time(seg + 1), &psi);
    }
    traj.final_state = FinalState::Pure(StateVector {
        amplitudes: psi,
        time: spec.t_max,
    });
    Ok(traj)
}

/// Integrates `i ċ_A = −Ω_A c₀`, `i ċ₀ = −Ω_A c_A − Ω_B c_B`,
/// `i ċ_B = −Ω_B c₀` (common `-μ` removed).
pub fn evolve_effective(
    spec: &ProtocolSpec,
    bound: &BoundState,
    initial: &StateVector,
    n_samples: usize,
) -> Result<Trajectory> {
    evolve_effective_with(spec, bound, initial, n_samples, &StepControl::default())
}

pub fn evolve_effective_with(
    spec: &ProtocolSpec,
    bound: &BoundState,
    initial: &StateVector,
    n_samples: usize,
    control: &StepControl,
) -> Result<Trajectory> {
    spec.validate()?;
    check_samples(n_samples)?;
    check_normalized(initial, 3)?;
    let overlap = endpoint_overlap(spec, bound);
    let plan = StepPlan::new(spec.t_max, n_samples - 1, control.max_step(spec));
    let mut traj = effective_run(spec, overlap, initial, &plan);
    verify_halving(&mut traj, control.verify_halving, || {
        Ok(effective_run(spec, overlap, initial, &plan.halved()))
    })?;
    Ok(traj)
}

fn effective_run(
    spec: &ProtocolSpec,
    overlap: f64,
    initial: &StateVector,
    plan: &StepPlan,
) -> Trajectory {
    let mut c = initial.amplitudes.clone();
    let mut rk = Rk4::new(3);
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        let h = effective_at(spec, overlap, t);
        // −i·(−Ω y) = i Ω y
        let i = Complex64::new(0.0, 1.0);
        out[0] = i * (y[1] * h.omega_a);
        out[1] = i * (y[0] * h.omega_a + y[2] * h.omega_b);
        out[2] = i * (y[1] * h.omega_b);
    };
    let mut traj = Trajectory::new(
        ModelKind::Effective,
        spec,
        plan,
        FinalState::Pure(initial.clone()),
    );
    let record = |traj: &mut Trajectory, t: f64, c: &[Complex64]| {
        let norm: f64 = c.iter().map(|x| x.norm_sqr()).sum();
        traj.times.push(t);
        traj.pop_a.push(c[0].norm_sqr());
        traj.pop_defect.push(c[1].norm_sqr());
        traj.pop_medium.push(c[1].norm_sqr());
        traj.pop_b.push(c[2].norm_sqr());
        traj.max_norm_drift = traj.max_norm_drift.max((norm - 1.0).abs());
    };
    record(&mut traj, 0.0, &c);
    let dt = plan.dt();
    for seg in 0..plan.segments {
        let t0 = plan.sample_time(seg);
        for i in 0..plan.steps_per_segment {
            rk.step(&mut rhs, t0 + i as f64 * dt, dt, &mut c);
        }
        record(&mut traj, plan.sample_time(seg + 1), &c);
    }
    traj.final_state = FinalState::Pure(StateVector {
        amplitudes: c,
        time: spec.t_max,
    });
    traj
}

/// Integrates `ρ̇ = −i[H(t), ρ] − Γ(ρ − diag ρ)` with dephasing in the site
/// basis.
pub fn evolve_master(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
    gamma: f64,
    initial: &DensityMatrix,
    n_samples: usize,
) -> Result<Trajectory> {
    evolve_master_with(
        spec,
        disorder,
        gamma,
        initial,
        n_samples,
        &StepControl::default(),
    )
}

pub fn evolve_master_with(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
    gamma: f64,
    initial: &DensityMatrix,
    n_samples: usize,
    control: &StepControl,
) -> Result<Trajectory> {
    spec.validate()?;
    check_samples(n_samples)?;
    if !(gamma >= 0.0) || !gamma.is_finite() {
        return Err(Error::Domain {
            what: "gamma",
            value: gamma,
            range: "[0, ∞)".into(),
        });
    }
    if initial.dim() != spec.dim() {
        return Err(Error::InvalidSpec(format!(
            "initial density matrix has dimension {}, expected {}",
            initial.dim(),
            spec.dim()
        )));
    }
    initial.validate()?;
    let plan = StepPlan::new(spec.t_max, n_samples - 1, control.max_step(spec));
    let mut traj = master_run(spec, disorder, gamma, initial, &plan)?;
    verify_halving(&mut traj, control.verify_halving, || {
        master_run(spec, disorder, gamma, initial, &plan.halved())
    })?;
    Ok(traj)
}

fn master_run(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
    gamma: f64,
    initial: &DensityMatrix,
    plan: &StepPlan,
) -> Result<Trajectory> {
    let n = spec.dim();
    let mut h = static_hamiltonian(spec, disorder)?;
    let mode = bound_mode(spec);
    let mut rho: Vec<Complex64> = initial.entries.as_slice().to_vec();
    let mut rk = Rk4::new(n * n);
    let mut rhs = |t: f64, y: &[Complex64], out: &mut [Complex64]| {
        let (ja, jb) = spec.pulses(t);
        h.set_pulses(ja, jb);
        h.apply_master(gamma, y, out);
    };

    let as_matrix = |rho: &[Complex64], t: f64| DensityMatrix {
        entries: DMatrix::from_column_slice(n, n, rho),
        time: t,
    };
    let mut traj = Trajectory::new(
        ModelKind::Full,
        spec,
        plan,
        FinalState::Mixed(initial.clone()),
    );
    traj.seed = disorder.map(|d| d.seed);
    traj.delta = disorder.map_or(0.0, |d| d.delta);
    traj.gamma = gamma;
    traj.min_eigenvalue = Some(f64::INFINITY);
    traj.max_hermiticity_error = Some(0.0);
    let record = |traj: &mut Trajectory, dm: &DensityMatrix| -> Result<()> {
        let tr = dm.trace().re;
        let a = dm.population(0);
        let b = dm.population(n - 1);
        let mut defect = Complex64::new(0.0, 0.0);
        for j in 1..n - 1 {
            for i in 1..n - 1 {
                defect += dm.entries[(i, j)] * (mode[i] * mode[j]);
            }
        }
        let min = dm.min_eigenvalue();
        traj.times.push(dm.time);
        traj.pop_a.push(a);
        traj.pop_b.push(b);
        traj.pop_defect.push(defect.re);
        traj.pop_medium.push(tr - a - b);
        traj.max_norm_drift = traj.max_norm_drift.max((tr - 1.0).abs());
        traj.min_eigenvalue = traj.min_eigenvalue.map(|m| m.min(min));
        traj.max_hermiticity_error = traj
            .max_hermiticity_error
            .map(|m| m.max(dm.hermiticity_error()));
        if min < POSITIVITY_ABORT {
            return Err(Error::IntegratorFailure {
                time: dm.time,
                reason: format!("density matrix eigenvalue {min:e} below {POSITIVITY_ABORT:e}"),
            });
        }
        Ok(())
    };

    record(&mut traj, &as_matrix(&rho, 0.0))?;
    let dt = plan.dt();
    for seg in 0..plan.segments {
        let t0 = plan.sample_time(seg);
        for i in 0..plan.steps_per_segment {
            rk.step(&mut rhs, t0 + i as f64 * dt, dt, &mut rho);
        }
        record(&mut traj, &as_matrix(&rho, plan.sample_time(seg + 1)))?;
    }
    traj.final_state = FinalState::Mixed(as_matrix(&rho, spec.t_max));
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{bound_state, ChainSpec};
    use std::f64::consts::PI;

    fn spec(t_max: f64) -> ProtocolSpec {
        ProtocolSpec::from_distance(ChainSpec::new(39, 1.0).unwrap(), 5, 0.1, t_max).unwrap()
    }

    #[test]
    fn rejects_bad_initial_states() {
        let p = spec(10.0);
        let mut psi = StateVector::at_a(&p);
        psi.amplitudes[0] = Complex64::new(0.9, 0.0);
        assert!(matches!(
            evolve_schrodinger(&p, None, &psi, 11),
            Err(Error::NotNormalized(_))
        ));
        assert!(evolve_schrodinger(&p, None, &StateVector::basis(3, 0), 11).is_err());
        assert!(evolve_schrodinger(&p, None, &StateVector::at_a(&p), 1).is_err());
    }

    #[test]
    fn decoupled_endpoint_stays_put() {
        let p =
            ProtocolSpec::from_distance(ChainSpec::new(39, 1.0).unwrap(), 5, 0.0, 50.0).unwrap();
        let traj = evolve_schrodinger(&p, None, &StateVector::at_a(&p), 51).unwrap();
        assert!(traj.pop_a.iter().all(|&a| (a - 1.0).abs() < 1e-12));
        assert!(traj.final_pop_b() < 1e-30);
    }

    #[test]
    fn samples_are_uniform_and_increasing() {
        let p = spec(30.0);
        let traj = evolve_schrodinger(&p, None, &StateVector::at_a(&p), 7).unwrap();
        assert_eq!(traj.times.len(), 7);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 30.0);
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert!(traj.step <= 30.0 / 20_000.0);
    }

    #[test]
    fn master_rejects_negative_gamma() {
        let p = spec(10.0);
        let rho = DensityMatrix::pure(&StateVector::at_a(&p));
        assert!(matches!(
            evolve_master(&p, None, -1.0, &rho, 3),
            Err(Error::Domain { what: "gamma", .. })
        ));
    }

    #[test]
    fn master_rejects_invalid_initial() {
        let p = spec(10.0);
        let mut rho = DensityMatrix::pure(&StateVector::at_a(&p));
        rho.entries[(0, 0)] = Complex64::new(2.0, 0.0);
        assert!(matches!(
            evolve_master(&p, None, 0.0, &rho, 3),
            Err(Error::InvalidDensityMatrix(_))
        ));
    }

    #[test]
    fn pure_dephasing_closed_form() {
        // J₀ = 0 and a single-site medium coupling pattern still leaves the
        // chain Hamiltonian; use a state supported on A and B only, where H
        // is diagonal with equal energies, so only dephasing acts.
        let p =
            ProtocolSpec::from_distance(ChainSpec::new(39, 1.0).unwrap(), 5, 0.0, 20.0).unwrap();
        let mut psi = StateVector::basis(p.dim(), 0);
        let r = std::f64::consts::FRAC_1_SQRT_2;
        psi.amplitudes[0] = Complex64::new(r, 0.0);
        psi.amplitudes[40] = Complex64::new(0.0, r);
        let rho0 = DensityMatrix::pure(&psi);
        let gamma = 0.05;
        let traj = evolve_master(&p, None, gamma, &rho0, 5).unwrap();
        let FinalState::Mixed(rho) = &traj.final_state else {
            panic!("mixed state expected")
        };
        let decay = (-gamma * 20.0).exp();
        assert!((rho.entries[(0, 40)] - rho0.entries[(0, 40)] * decay).norm() < 1e-9);
        assert!((rho.population(0) - 0.5).abs() < 1e-12);
        assert!((rho.population(40) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn effective_short_protocol_is_incomplete() {
        let p = spec(10.0 * PI / 0.1);
        let bound = bound_state(&p.chain).unwrap();
        let traj = evolve_effective(&p, &bound, &StateVector::basis(3, 0), 201).unwrap();
        assert!(traj.final_pop_b() < 0.995);
        assert!(traj.max_norm_drift < 1e-9);
    }

    #[test]
    fn effective_slow_protocol_transfers() {
        let p = spec(60.0 * PI / 0.1);
        let bound = bound_state(&p.chain).unwrap();
        let traj = evolve_effective(&p, &bound, &StateVector::basis(3, 0), 201).unwrap();
        assert!(traj.final_pop_b() > 0.999);
    }
}
