//! First-order three-level model on `{A, λ₀, B}` and its adiabatic
//! diagnostics.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};

use nalgebra::{Matrix3, Vector3};

use crate::lattice::BoundState;
use crate::protocol::ProtocolSpec;
use crate::{Error, Result};

/// `H_eff = -μ·1 - Ω_A(|A⟩⟨λ₀| + h.c.) - Ω_B(|B⟩⟨λ₀| + h.c.)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveHamiltonian {
    pub omega_a: f64,
    pub omega_b: f64,
    pub mu: f64,
}

impl EffectiveHamiltonian {
    pub fn to_matrix(&self) -> Matrix3<f64> {
        let (a, b, m) = (self.omega_a, self.omega_b, self.mu);
        Matrix3::new(
            -m, -a, 0.0, //
            -a, -m, -b, //
            0.0, -b, -m,
        )
    }

    /// `√(Ω_A² + Ω_B²)`.
    pub fn rms_coupling(&self) -> f64 {
        self.omega_a.hypot(self.omega_b)
    }

    /// `θ = arctan(Ω_A / Ω_B)`.
    pub fn mixing_angle(&self) -> f64 {
        self.omega_a.atan2(self.omega_b)
    }
}

/// Instantaneous eigenbasis of the three-level model. Vectors are in the
/// `[A, λ₀, B]` basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdiabaticTriple {
    pub d_minus: Vector3<f64>,
    pub d_zero: Vector3<f64>,
    pub d_plus: Vector3<f64>,
    pub e_minus: f64,
    pub e_zero: f64,
    pub e_plus: f64,
}

impl AdiabaticTriple {
    pub fn pairs(&self) -> [(f64, Vector3<f64>); 3] {
        [
            (self.e_minus, self.d_minus),
            (self.e_zero, self.d_zero),
            (self.e_plus, self.d_plus),
        ]
    }
}

/// Bound-state amplitude seen by both endpoints (the profile is mirror
/// symmetric, so `u₀(N₀ - l) = u₀(N₀ + l)`).
pub(crate) fn endpoint_overlap(spec: &ProtocolSpec, bound: &BoundState) -> f64 {
    bound.amplitude(spec.attachment_sites().0)
}

pub fn effective_hamiltonian(
    spec: &ProtocolSpec,
    bound: &BoundState,
    t: f64,
) -> Result<EffectiveHamiltonian> {
    spec.check_time(t)?;
    Ok(effective_at(spec, endpoint_overlap(spec, bound), t))
}

pub(crate) fn effective_at(spec: &ProtocolSpec, overlap: f64, t: f64) -> EffectiveHamiltonian {
    let (ja, jb) = spec.pulses(t);
    EffectiveHamiltonian {
        omega_a: ja * overlap,
        omega_b: jb * overlap,
        mu: spec.mu(),
    }
}

pub fn adiabatic_triple(h: &EffectiveHamiltonian) -> Result<AdiabaticTriple> {
    let omega = h.rms_coupling();
    if omega == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    let (s, c) = h.mixing_angle().sin_cos();
    let r = FRAC_1_SQRT_2;
    Ok(AdiabaticTriple {
        d_minus: Vector3::new(r * s, -r, r * c),
        d_zero: Vector3::new(c, 0.0, -s),
        d_plus: Vector3::new(r * s, r, r * c),
        e_minus: -h.mu + omega,
        e_zero: -h.mu,
        e_plus: -h.mu - omega,
    })
}

/// Nonadiabatic coupling over squared gap,
/// `|Ω̇_A Ω_B − Ω̇_B Ω_A| / (√2 (Ω_A² + Ω_B²)^{3/2})`.
///
/// For the sine-squared pulses this reduces to
/// `π sin 2φ / (2√2 t_max J₀ u₀ (sin⁴φ + cos⁴φ)^{3/2})` with
/// `φ = πt / 2t_max`, which is finite (zero) at both endpoints.
pub fn adiabaticity(spec: &ProtocolSpec, bound: &BoundState, t: f64) -> Result<f64> {
    spec.check_time(t)?;
    let scale = coupling_scale(spec, bound)?;
    let phi = 0.5 * PI * t / spec.t_max;
    let (s, c) = phi.sin_cos();
    let quartic = s.powi(4) + c.powi(4);
    Ok(PI * (2.0 * phi).sin().abs() / (2.0 * SQRT_2 * spec.t_max * scale * quartic.powf(1.5)))
}

/// Peak adiabaticity at the pulse crossing, `π / (J₀ u₀(N₀ − l) t_max)`.
pub fn max_adiabaticity(spec: &ProtocolSpec, bound: &BoundState) -> Result<f64> {
    Ok(PI / (coupling_scale(spec, bound)? * spec.t_max))
}

/// Duration scale `π / (J₀ u₀(N₀ − l))`; adiabatic transfer needs
/// `t_max` well above it.
pub fn adiabatic_time_scale(spec: &ProtocolSpec, bound: &BoundState) -> Result<f64> {
    Ok(PI / coupling_scale(spec, bound)?)
}

fn coupling_scale(spec: &ProtocolSpec, bound: &BoundState) -> Result<f64> {
    let scale = spec.j0_max * endpoint_overlap(spec, bound);
    if scale == 0.0 {
        return Err(Error::DegenerateSpectrum);
    }
    Ok(scale)
}
