//! Figures of merit: transfer fidelity, endpoint reduction, operator
//! fidelity of the three-level reduction, and minimal transfer time.

use nalgebra::Matrix2;
use num_complex::Complex64;

use crate::dynamics::{
    evolve_schrodinger_with, DensityMatrix, FinalState, StateVector, StepControl, Trajectory,
};
use crate::lattice::symmetric_eigen_sorted;
use crate::protocol::{build_total_hamiltonian, ProtocolSpec};
use crate::{Error, Result};

const DEGENERACY_GUARD: f64 = 1e-12;

/// Endpoint block of a single-excitation state after tracing out the medium.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedEndpointOperator {
    /// Basis `{A, B}`.
    pub block: Matrix2<Complex64>,
    /// Probability that the excitation sits in the medium.
    pub vacuum_weight: f64,
}

impl ReducedEndpointOperator {
    /// `⟨φ|ρ_R|φ⟩` for an endpoint vector `φ = (φ_A, φ_B)`.
    pub fn expectation(&self, phi: [Complex64; 2]) -> f64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, pa) in phi.iter().enumerate() {
            for (b, pb) in phi.iter().enumerate() {
                acc += pa.conj() * self.block[(a, b)] * pb;
            }
        }
        acc.re
    }
}

/// `|⟨B|Ψ(t_max)⟩|²` of a pure-state run (full or three-level).
pub fn transfer_fidelity_pure(traj: &Trajectory) -> Result<f64> {
    match &traj.final_state {
        FinalState::Pure(psi) => Ok(psi.population(psi.len() - 1)),
        FinalState::Mixed(_) => Err(Error::WrongMetric),
    }
}

/// `Tr[ρ |B⟩⟨B|]`.
pub fn transfer_fidelity_mixed(rho: &DensityMatrix) -> f64 {
    rho.population(rho.dim() - 1)
}

/// Fidelity of any finished run: pure runs use the final amplitude, mixed
/// runs the final `(B, B)` entry.
pub fn transfer_fidelity(traj: &Trajectory) -> f64 {
    match &traj.final_state {
        FinalState::Pure(psi) => psi.population(psi.len() - 1),
        FinalState::Mixed(rho) => transfer_fidelity_mixed(rho),
    }
}

/// Single-excitation reduction onto the endpoint modes.
pub fn reduce_to_endpoints(psi: &StateVector) -> ReducedEndpointOperator {
    let n = psi.len();
    let c = [psi.amplitudes[0], psi.amplitudes[n - 1]];
    let block = Matrix2::from_fn(|a, b| c[a] * c[b].conj());
    let vacuum_weight = psi.amplitudes[1..n - 1].iter().map(|x| x.norm_sqr()).sum();
    ReducedEndpointOperator {
        block,
        vacuum_weight,
    }
}

/// Overlap of the reduced midpoint first-excited state with the dark state
/// `(|A⟩ − |B⟩)/√2`.
///
/// The target is pure, so the Uhlmann fidelity collapses to
/// `⟨D₀|ρ_R|D₀⟩ = |c_A − c_B|² / 2`.
pub fn operator_fidelity(spec: &ProtocolSpec) -> Result<f64> {
    let psi = midpoint_first_excited(spec)?;
    let reduced = reduce_to_endpoints(&psi);
    let r = std::f64::consts::FRAC_1_SQRT_2;
    Ok(reduced.expectation([Complex64::new(r, 0.0), Complex64::new(-r, 0.0)]))
}

/// Eigenvector of the second-lowest level of the clean Hamiltonian at
/// `t_max / 2`.
pub fn midpoint_first_excited(spec: &ProtocolSpec) -> Result<StateVector> {
    let h = build_total_hamiltonian(spec, 0.5 * spec.t_max, None)?.to_dense();
    let (values, vectors) = symmetric_eigen_sorted(h);
    let gap = (values[1] - values[0]).min(values[2] - values[1]);
    if gap < DEGENERACY_GUARD {
        return Err(Error::AmbiguousEigenstate {
            gap,
            threshold: DEGENERACY_GUARD,
        });
    }
    Ok(StateVector {
        amplitudes: vectors
            .column(1)
            .iter()
            .map(|&x| Complex64::new(x, 0.0))
            .collect(),
        time: 0.5 * spec.t_max,
    })
}

/// Search interval and resolution for [`minimal_transfer_time`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchBounds {
    pub lower: f64,
    pub upper: f64,
    /// Bisection stops once the bracket is this narrow.
    pub resolution: f64,
}

impl SearchBounds {
    /// Bounds given in units of `π/J₀` with the default `0.25 π/J₀`
    /// resolution.
    pub fn in_pi_over_j0(j0: f64, lower: f64, upper: f64) -> Self {
        let unit = std::f64::consts::PI / j0;
        Self {
            lower: lower * unit,
            upper: upper * unit,
            resolution: 0.25 * unit,
        }
    }
}

/// Smallest `t_max` whose full-space transfer fidelity reaches
/// `1 − target_error`.
///
/// The fidelity oscillates at short durations, so a candidate only counts as
/// reaching the target when the point two resolution steps later does too.
pub fn minimal_transfer_time(
    template: &ProtocolSpec,
    target_error: f64,
    bounds: SearchBounds,
    control: &StepControl,
) -> Result<f64> {
    if !(target_error > 0.0 && target_error < 1.0) {
        return Err(Error::Domain {
            what: "target_error",
            value: target_error,
            range: "(0, 1)".into(),
        });
    }
    if !(bounds.lower > 0.0 && bounds.upper > bounds.lower && bounds.resolution > 0.0) {
        return Err(Error::InvalidSpec(format!(
            "invalid search bounds {bounds:?}"
        )));
    }
    let threshold = 1.0 - target_error;
    let mut best = 0.0_f64;
    let mut fidelity = |t: f64| -> Result<f64> {
        let spec = template.with_t_max(t)?;
        let traj = evolve_schrodinger_with(&spec, None, &StateVector::at_a(&spec), 2, control)?;
        let f = transfer_fidelity_pure(&traj)?;
        best = best.max(f);
        Ok(f)
    };
    let step = 2.0 * bounds.resolution;
    let mut passes = |t: f64| -> Result<bool> {
        Ok(fidelity(t)? >= threshold && fidelity(t + step)? >= threshold)
    };

    if passes(bounds.lower)? {
        return Ok(bounds.lower);
    }
    let (mut lo, mut hi) = (bounds.lower, bounds.upper);
    if !passes(hi)? {
        return Err(Error::NotFound {
            best_fidelity: best,
        });
    }
    while hi - lo > bounds.resolution {
        let mid = 0.5 * (lo + hi);
        if passes(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}
