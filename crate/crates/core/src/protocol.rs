//! Pulse schedule, endpoint dots, coupling disorder and the full
//! `(N + 2)`-dimensional Hamiltonian.

use std::f64::consts::FRAC_PI_2;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::lattice::ChainSpec;
use crate::{Error, Result};

/// Which endpoint sends. `AToB` applies the receiver pulse `J_B` first
/// (counter-intuitive order for transfer from A); `BToA` swaps the pulse
/// roles.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TransferDirection {
    #[default]
    AToB,
    BToA,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProtocolSpec {
    pub chain: ChainSpec,
    /// A couples to site `N₀ − l`, B to `N₀ + l`.
    pub l: usize,
    pub j0_max: f64,
    pub t_max: f64,
    /// Overrides the resonant endpoint energy when set.
    pub onsite_mu: Option<f64>,
    pub direction: TransferDirection,
}

impl ProtocolSpec {
    pub fn new(chain: ChainSpec, l: usize, j0_max: f64, t_max: f64) -> Result<Self> {
        let spec = Self {
            chain,
            l,
            j0_max,
            t_max,
            onsite_mu: None,
            direction: TransferDirection::AToB,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same as [`ProtocolSpec::new`] with the attachment given as the
    /// transfer distance `d = 2l + 3`.
    pub fn from_distance(
        chain: ChainSpec,
        distance: usize,
        j0_max: f64,
        t_max: f64,
    ) -> Result<Self> {
        if distance < 5 || distance.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "transfer distance must be odd and at least 5, got {distance}"
            )));
        }
        Self::new(chain, (distance - 3) / 2, j0_max, t_max)
    }

    pub fn validate(&self) -> Result<()> {
        let n0 = self.chain.defect_site();
        if self.l < 1 || self.l + 1 > n0 {
            return Err(Error::InvalidSpec(format!(
                "attachment offset l = {} must lie in [1, {}]",
                self.l,
                n0 - 1
            )));
        }
        // J₀ = 0 is accepted as the decoupled limit.
        if !(self.j0_max >= 0.0) || !self.j0_max.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "peak coupling must be non-negative, got {}",
                self.j0_max
            )));
        }
        if !(self.t_max > 0.0) || !self.t_max.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "protocol duration must be positive, got {}",
                self.t_max
            )));
        }
        if let Some(mu) = self.onsite_mu {
            if !mu.is_finite() {
                return Err(Error::InvalidSpec(format!(
                    "endpoint energy {mu} is not finite"
                )));
            }
        }
        Ok(())
    }

    pub fn with_t_max(mut self, t_max: f64) -> Result<Self> {
        self.t_max = t_max;
        self.validate()?;
        Ok(self)
    }

    pub fn with_onsite_mu(mut self, mu: f64) -> Result<Self> {
        self.onsite_mu = Some(mu);
        self.validate()?;
        Ok(self)
    }

    pub fn with_direction(mut self, direction: TransferDirection) -> Self {
        self.direction = direction;
        self
    }

    pub fn distance(&self) -> usize {
        2 * self.l + 3
    }

    /// 1-based chain sites that A and B attach to.
    pub fn attachment_sites(&self) -> (usize, usize) {
        let n0 = self.chain.defect_site();
        (n0 - self.l, n0 + self.l)
    }

    /// Endpoint on-site energy magnitude `μ`; the Hamiltonian carries `-μ`.
    pub fn mu(&self) -> f64 {
        self.onsite_mu
            .unwrap_or_else(|| resonant_onsite_energy(&self.chain))
    }

    pub fn dim(&self) -> usize {
        self.chain.n_sites() + 2
    }

    pub(crate) fn check_time(&self, t: f64) -> Result<()> {
        if !(0.0..=self.t_max).contains(&t) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                range: format!("[0, {}]", self.t_max),
            });
        }
        Ok(())
    }

    /// `(J_A, J_B)` without the domain check; used inside integrators where
    /// stage times may overshoot `t_max` by rounding.
    pub(crate) fn pulses(&self, t: f64) -> (f64, f64) {
        let phase = FRAC_PI_2 * t / self.t_max;
        let (s, c) = phase.sin_cos();
        let rising = self.j0_max * s * s;
        let falling = self.j0_max * c * c;
        match self.direction {
            TransferDirection::AToB => (rising, falling),
            TransferDirection::BToA => (falling, rising),
        }
    }
}

/// `J_A = J₀ sin²(πt/2t_max)`, `J_B = J₀ cos²(πt/2t_max)` (roles swapped for
/// [`TransferDirection::BToA`]).
pub fn pulse_amplitudes(spec: &ProtocolSpec, t: f64) -> Result<(f64, f64)> {
    spec.check_time(t)?;
    Ok(spec.pulses(t))
}

/// Endpoint energy that makes `|A⟩`, `|λ₀⟩` and `|B⟩` degenerate:
/// `2J√(ξ² + 1)`.
pub fn resonant_onsite_energy(chain: &ChainSpec) -> f64 {
    let xi = chain.xi();
    2.0 * chain.hopping() * (xi * xi + 1.0).sqrt()
}

/// `θ = arctan(J_A / J_B)`, equal to `π/2` where `J_B` vanishes.
pub fn mixing_angle(spec: &ProtocolSpec, t: f64) -> Result<f64> {
    let (ja, jb) = pulse_amplitudes(spec, t)?;
    if ja == 0.0 && jb == 0.0 {
        // J₀ = 0: follow the pulse-shape ratio, which is well defined.
        let probe = ProtocolSpec {
            j0_max: 1.0,
            ..*spec
        };
        let (ja, jb) = probe.pulses(t);
        return Ok(ja.atan2(jb));
    }
    Ok(ja.atan2(jb))
}

/// Quenched relative offsets on the medium hoppings.
#[derive(Debug, Clone, PartialEq)]
pub struct DisorderRealization {
    pub delta: f64,
    /// `ε_j` for the bond between sites `j` and `j + 1`, `j = 1..N-1`.
    pub epsilons: Vec<f64>,
    pub seed: u64,
}

impl DisorderRealization {
    /// Relative hopping factor `1 + δ ε_j` for 0-based bond `bond`.
    pub fn factor(&self, bond: usize) -> f64 {
        1.0 + self.delta * self.epsilons[bond]
    }
}

/// Draws `N − 1` independent offsets uniform on `[-1, 1]`.
///
/// The generator is ChaCha20 (`rand_chacha::ChaCha20Rng`) seeded through
/// `SeedableRng::seed_from_u64`; the same `(delta, seed, N)` always yields the
/// same realization.
pub fn sample_disorder(delta: f64, chain: &ChainSpec, seed: u64) -> Result<DisorderRealization> {
    if !(delta >= 0.0) || !delta.is_finite() {
        return Err(Error::Domain {
            what: "delta",
            value: delta,
            range: "[0, ∞)".into(),
        });
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let epsilons = (0..chain.n_sites() - 1)
        .map(|_| rng.random_range(-1.0..=1.0))
        .collect();
    Ok(DisorderRealization {
        delta,
        epsilons,
        seed,
    })
}

/// Real symmetric Hamiltonian stored by its diagonal and upper-triangle
/// edges. Basis `[A, 1, …, N, B]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SiteHamiltonian {
    diag: Vec<f64>,
    /// `(i, j, value)` with `i < j`.
    edges: Vec<(usize, usize, f64)>,
    coupling_a: usize,
    coupling_b: usize,
}

impl SiteHamiltonian {
    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn edges(&self) -> &[(usize, usize, f64)] {
        &self.edges
    }

    /// Entry `(i, j)`.
    pub fn get(&self, i: usize, j: usize) -> f64 {
        if i == j {
            return self.diag[i];
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        self.edges
            .iter()
            .filter(|e| e.0 == lo && e.1 == hi)
            .map(|e| e.2)
            .sum()
    }

    pub(crate) fn set_pulses(&mut self, ja: f64, jb: f64) {
        self.edges[self.coupling_a].2 = -ja;
        self.edges[self.coupling_b].2 = -jb;
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.diag));
        for &(i, j, v) in &self.edges {
            m[(i, j)] += v;
            m[(j, i)] += v;
        }
        debug_assert_eq!(m.nrows(), n);
        m
    }

    pub fn to_complex_dense(&self) -> DMatrix<Complex64> {
        self.to_dense().map(|x| Complex64::new(x, 0.0))
    }

    /// `out = -i (H - shift) psi`.
    pub(crate) fn apply_schrodinger(&self, shift: f64, psi: &[Complex64], out: &mut [Complex64]) {
        for ((o, p), d) in out.iter_mut().zip(psi).zip(&self.diag) {
            *o = p * (d - shift);
        }
        for &(i, j, v) in &self.edges {
            out[i] += psi[j] * v;
            out[j] += psi[i] * v;
        }
        for o in out.iter_mut() {
            *o = Complex64::new(o.im, -o.re);
        }
    }

    /// `out = -i[H, ρ] - Γ(ρ - diag ρ)` for a column-major `ρ`.
    pub(crate) fn apply_master(&self, gamma: f64, rho: &[Complex64], out: &mut [Complex64]) {
        let n = self.dim();
        // commutator [H, ρ]_ij accumulated in out
        for j in 0..n {
            let dj = self.diag[j];
            for i in 0..n {
                out[i + j * n] = rho[i + j * n] * (self.diag[i] - dj);
            }
        }
        for &(a, b, v) in &self.edges {
            if v == 0.0 {
                continue;
            }
            // (Hρ) rows a and b
            for j in 0..n {
                let ra = rho[a + j * n];
                let rb = rho[b + j * n];
                out[a + j * n] += rb * v;
                out[b + j * n] += ra * v;
            }
            // −(ρH) columns a and b
            for i in 0..n {
                let ra = rho[i + a * n];
                let rb = rho[i + b * n];
                out[i + b * n] -= ra * v;
                out[i + a * n] -= rb * v;
            }
        }
        for j in 0..n {
            for i in 0..n {
                let k = i + j * n;
                let c = out[k];
                out[k] = Complex64::new(c.im, -c.re);
                if i != j {
                    out[k] -= rho[k] * gamma;
                }
            }
        }
    }
}

/// Full Hamiltonian at time `t`: medium chain (optionally with disordered
/// hoppings), endpoint energies `-μ`, and pulse couplings `-J_A(t)`,
/// `-J_B(t)` to the attachment sites.
pub fn build_total_hamiltonian(
    spec: &ProtocolSpec,
    t: f64,
    disorder: Option<&DisorderRealization>,
) -> Result<SiteHamiltonian> {
    spec.validate()?;
    spec.check_time(t)?;
    let mut h = static_hamiltonian(spec, disorder)?;
    let (ja, jb) = spec.pulses(t);
    h.set_pulses(ja, jb);
    Ok(h)
}

/// Time-independent part with both couplings zeroed.
pub(crate) fn static_hamiltonian(
    spec: &ProtocolSpec,
    disorder: Option<&DisorderRealization>,
) -> Result<SiteHamiltonian> {
    let chain = &spec.chain;
    let n = chain.n_sites();
    if let Some(d) = disorder {
        if d.epsilons.len() != n - 1 {
            return Err(Error::InvalidSpec(format!(
                "disorder has {} offsets, chain needs {}",
                d.epsilons.len(),
                n - 1
            )));
        }
    }
    let dim = n + 2;
    let mu = spec.mu();
    let mut diag = vec![0.0; dim];
    diag[0] = -mu;
    diag[dim - 1] = -mu;
    diag[chain.defect_site()] = -chain.defect_energy();

    let mut edges = Vec::with_capacity(n + 1);
    for bond in 0..n - 1 {
        let factor = disorder.map_or(1.0, |d| d.factor(bond));
        edges.push((bond + 1, bond + 2, -chain.hopping() * factor));
    }
    let (site_a, site_b) = spec.attachment_sites();
    let coupling_a = edges.len();
    edges.push((0, site_a, 0.0));
    let coupling_b = edges.len();
    edges.push((site_b, dim - 1, 0.0));
    Ok(SiteHamiltonian {
        diag,
        edges,
        coupling_a,
        coupling_b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_PI_4, PI};

    fn headline() -> ProtocolSpec {
        let chain = ChainSpec::new(39, 1.0).unwrap();
        ProtocolSpec::from_distance(chain, 5, 0.1, 19.0 * PI / 0.1).unwrap()
    }

    #[test]
    fn distance_and_attachment() {
        let p = headline();
        assert_eq!(p.l, 1);
        assert_eq!(p.distance(), 5);
        assert_eq!(p.attachment_sites(), (19, 21));
        assert!(ProtocolSpec::from_distance(p.chain, 6, 0.1, 1.0).is_err());
        assert!(ProtocolSpec::new(p.chain, 0, 0.1, 1.0).is_err());
        assert!(ProtocolSpec::new(p.chain, 20, 0.1, 1.0).is_err());
        assert!(ProtocolSpec::new(p.chain, 19, 0.1, 1.0).is_ok());
        assert!(ProtocolSpec::new(p.chain, 1, 0.1, 0.0).is_err());
        assert!(ProtocolSpec::new(p.chain, 1, -0.1, 1.0).is_err());
    }

    #[test]
    fn pulse_endpoints_and_midpoint() {
        let p = headline();
        assert_eq!(pulse_amplitudes(&p, 0.0).unwrap(), (0.0, 0.1));
        let (a, b) = pulse_amplitudes(&p, p.t_max / 2.0).unwrap();
        assert!((a - 0.05).abs() < 1e-15 && (b - 0.05).abs() < 1e-15);
        let (a, b) = pulse_amplitudes(&p, p.t_max).unwrap();
        assert!((a - 0.1).abs() < 1e-15 && b.abs() < 1e-15);
        assert!(matches!(
            pulse_amplitudes(&p, -1.0),
            Err(Error::Domain { what: "t", .. })
        ));
        assert!(pulse_amplitudes(&p, p.t_max * 1.001).is_err());
    }

    #[test]
    fn resonance_values() {
        let mu = |mu0| resonant_onsite_energy(&ChainSpec::new(39, mu0).unwrap());
        assert!((mu(1.0) - 2.236068).abs() < 1e-6);
        assert!((mu(0.5) - 2.061553).abs() < 1e-6);
        assert_eq!(mu(0.0), 2.0);
    }

    #[test]
    fn mixing_angle_endpoints() {
        let p = headline();
        assert_eq!(mixing_angle(&p, 0.0).unwrap(), 0.0);
        assert!((mixing_angle(&p, p.t_max / 2.0).unwrap() - FRAC_PI_4).abs() < 1e-15);
        assert!((mixing_angle(&p, p.t_max).unwrap() - FRAC_PI_2).abs() < 1e-15);
    }

    #[test]
    fn zero_delta_disorder_is_bitwise_clean() {
        let p = headline();
        let d = sample_disorder(0.0, &p.chain, 1234).unwrap();
        for t in [0.0, p.t_max / 3.0, p.t_max] {
            let clean = build_total_hamiltonian(&p, t, None).unwrap();
            let dirty = build_total_hamiltonian(&p, t, Some(&d)).unwrap();
            assert_eq!(clean, dirty);
        }
    }

    #[test]
    fn disorder_is_deterministic_and_bounded() {
        let chain = ChainSpec::new(39, 1.0).unwrap();
        let a = sample_disorder(0.1, &chain, 7).unwrap();
        let b = sample_disorder(0.1, &chain, 7).unwrap();
        let c = sample_disorder(0.1, &chain, 8).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.epsilons, c.epsilons);
        assert_eq!(a.epsilons.len(), 38);
        assert!(a.epsilons.iter().all(|e| e.abs() <= 1.0));
        assert!(sample_disorder(-0.1, &chain, 7).is_err());
    }

    #[test]
    fn disorder_moments() {
        let chain = ChainSpec::new(39, 1.0).unwrap();
        let mut all = Vec::new();
        let mut seed = 0;
        while all.len() < 10_000 {
            all.extend(sample_disorder(0.1, &chain, seed).unwrap().epsilons);
            seed += 1;
        }
        let n = all.len() as f64;
        let mean = all.iter().sum::<f64>() / n;
        let var = all.iter().map(|e| (e - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 0.02, "mean {mean}");
        assert!((var - 1.0 / 3.0).abs() < 0.02, "variance {var}");
    }

    #[test]
    fn initial_hamiltonian_decouples_a() {
        let p = headline();
        let h = build_total_hamiltonian(&p, 0.0, None).unwrap().to_dense();
        let mu = p.mu();
        assert_eq!(h[(0, 0)], -mu);
        assert!((1..41).all(|j| h[(0, j)] == 0.0 && h[(j, 0)] == 0.0));
        assert_eq!(h[(40, 40)], -mu);
        assert_eq!(h[(21, 40)], -0.1);
        assert_eq!(h[(40, 21)], -0.1);
        assert_eq!(h[(20, 20)], -1.0);
        assert_eq!(h[(5, 6)], -1.0);
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn disordered_hoppings_follow_offsets() {
        let p = headline();
        let d = sample_disorder(0.3, &p.chain, 99).unwrap();
        let h = build_total_hamiltonian(&p, 1.0, Some(&d)).unwrap();
        for bond in 0..38 {
            assert_eq!(h.get(bond + 1, bond + 2), -(1.0 + 0.3 * d.epsilons[bond]));
        }
        // On-site energies and pulses are untouched.
        let clean = build_total_hamiltonian(&p, 1.0, None).unwrap();
        assert_eq!(h.diagonal(), clean.diagonal());
        assert_eq!(h.get(0, 19), clean.get(0, 19));
    }

    #[test]
    fn wrong_disorder_length_is_rejected() {
        let p = headline();
        let d = sample_disorder(0.1, &ChainSpec::new(19, 1.0).unwrap(), 1).unwrap();
        assert!(build_total_hamiltonian(&p, 0.0, Some(&d)).is_err());
    }

    #[test]
    fn reverse_direction_swaps_pulses() {
        let p = headline();
        let r = p.with_direction(TransferDirection::BToA);
        for t in [0.0, 100.0, p.t_max] {
            let (a, b) = p.pulses(t);
            assert_eq!(r.pulses(t), (b, a));
        }
    }
}
