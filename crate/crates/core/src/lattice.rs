//! The medium: an odd-length tight-binding chain with a single diagonal
//! defect at its center.
//!
//! The spectrum is available along two independent routes. The analytic
//! route solves the mirror-symmetric wavevector conditions and the
//! imaginary-wavevector bound state; the numerical route diagonalizes the
//! dense chain Hamiltonian. Each is used to check the other.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::{Error, Result};

/// Static description of the defected medium chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    n_sites: usize,
    hopping: f64,
    defect_energy: f64,
}

impl ChainSpec {
    /// Chain with unit hopping.
    pub fn new(n_sites: usize, defect_energy: f64) -> Result<Self> {
        Self::with_hopping(n_sites, 1.0, defect_energy)
    }

    pub fn with_hopping(n_sites: usize, hopping: f64, defect_energy: f64) -> Result<Self> {
        if n_sites < 3 || n_sites.is_multiple_of(2) {
            return Err(Error::InvalidSpec(format!(
                "n_sites must be odd and at least 3, got {n_sites}"
            )));
        }
        if !(hopping > 0.0) || !hopping.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "hopping must be positive, got {hopping}"
            )));
        }
        if !(defect_energy >= 0.0) || !defect_energy.is_finite() {
            return Err(Error::InvalidSpec(format!(
                "defect energy must be non-negative, got {defect_energy}"
            )));
        }
        Ok(Self {
            n_sites,
            hopping,
            defect_energy,
        })
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hopping(&self) -> f64 {
        self.hopping
    }

    pub fn defect_energy(&self) -> f64 {
        self.defect_energy
    }

    /// 1-based index of the defect site, `(N + 1) / 2`.
    pub fn defect_site(&self) -> usize {
        self.n_sites.div_ceil(2)
    }

    /// Dimensionless defect strength `μ₀ / 2J`.
    pub fn xi(&self) -> f64 {
        self.defect_energy / (2.0 * self.hopping)
    }
}

/// Thermodynamic-limit bound state of the medium.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundState {
    /// Inverse localization length per site.
    pub q: f64,
    pub energy: f64,
    /// `Λ = cosh q / sinh q`.
    pub norm_lambda: f64,
    /// `u₀(j)` for `j = 1..=N`, stored 0-based.
    pub profile: Vec<f64>,
}

impl BoundState {
    /// Profile amplitude at the 1-based site `j`.
    pub fn amplitude(&self, site: usize) -> f64 {
        self.profile[site - 1]
    }

    /// Profile rescaled to unit Euclidean norm on the finite chain.
    pub fn normalized_profile(&self) -> Vec<f64> {
        let norm = self.profile.iter().map(|u| u * u).sum::<f64>().sqrt();
        self.profile.iter().map(|u| u / norm).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Parity {
    /// Antisymmetric about the defect site.
    Odd,
    /// Symmetric about the defect site.
    Even,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Wavevector {
    pub k: f64,
    pub parity: Parity,
    pub energy: f64,
}

/// Real band wavevectors together with the imaginary-branch value `q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WavevectorSet {
    /// Sorted by ascending energy.
    pub roots: Vec<Wavevector>,
    pub bound_q: f64,
}

impl WavevectorSet {
    pub fn energies(&self) -> Vec<f64> {
        self.roots.iter().map(|r| r.energy).collect()
    }
}

/// Dense eigendecomposition of the medium Hamiltonian.
#[derive(Debug, Clone)]
pub struct MediumSpectrum {
    /// Ascending.
    pub eigenvalues: Vec<f64>,
    /// Column `n` pairs with `eigenvalues[n]`; the largest-magnitude entry
    /// of each column is positive.
    pub eigenvectors: DMatrix<f64>,
}

impl MediumSpectrum {
    pub fn eigenvector(&self, n: usize) -> DVector<f64> {
        self.eigenvectors.column(n).into_owned()
    }

    /// Finite-size gap between the two lowest levels.
    pub fn gap(&self) -> f64 {
        self.eigenvalues[1] - self.eigenvalues[0]
    }
}

/// Tridiagonal chain Hamiltonian with `-J` hoppings and `-μ₀` at the defect.
pub fn build_medium_hamiltonian(spec: &ChainSpec) -> DMatrix<f64> {
    let n = spec.n_sites();
    let mut h = DMatrix::zeros(n, n);
    for j in 0..n - 1 {
        h[(j, j + 1)] = -spec.hopping();
        h[(j + 1, j)] = -spec.hopping();
    }
    let d = spec.defect_site() - 1;
    h[(d, d)] = -spec.defect_energy();
    h
}

pub fn bound_state(spec: &ChainSpec) -> Result<BoundState> {
    if spec.defect_energy() == 0.0 {
        return Err(Error::NoBoundState);
    }
    let xi = spec.xi();
    let root = (xi * xi + 1.0).sqrt();
    // ln[ξ + √(ξ²+1)]
    let q = xi.asinh();
    let energy = -2.0 * spec.hopping() * root;
    let norm_lambda = root / xi;
    let center = spec.defect_site() as f64;
    let scale = norm_lambda.powf(-0.5);
    let profile = (1..=spec.n_sites())
        .map(|j| scale * (-q * (center - j as f64).abs()).exp())
        .collect();
    Ok(BoundState {
        q,
        energy,
        norm_lambda,
        profile,
    })
}

/// Gap between the bound state and the band edge in the infinite chain.
pub fn energy_gap(spec: &ChainSpec) -> f64 {
    let xi = spec.xi();
    2.0 * spec.hopping() * ((xi * xi + 1.0).sqrt() - 1.0)
}

const ROOT_TOLERANCE: f64 = 1e-13;

/// Solves the band wavevector conditions of the mirror-symmetric chain.
///
/// Antisymmetric states vanish on the defect site, so `sin(k N₀) = 0` and
/// `k = mπ/N₀`. Symmetric states satisfy `cot(k N₀) sin k = ξ`; each interval
/// between consecutive poles of `cot(k N₀)` holds at most one root, and the
/// first interval loses its root to the bound state whenever `ξ > 1/N₀`.
pub fn solve_wavevectors(spec: &ChainSpec) -> Result<WavevectorSet> {
    if spec.defect_energy() == 0.0 {
        return Err(Error::NoBoundState);
    }
    let n0 = spec.defect_site();
    let n0f = n0 as f64;
    let xi = spec.xi();
    let two_j = 2.0 * spec.hopping();
    let pi = std::f64::consts::PI;

    let mut roots: Vec<Wavevector> = (1..n0)
        .map(|m| {
            let k = m as f64 * pi / n0f;
            Wavevector {
                k,
                parity: Parity::Odd,
                energy: -two_j * k.cos(),
            }
        })
        .collect();

    // g(k) = cot(k N₀) sin k − ξ, decreasing from the left pole to the right.
    let g = |k: f64| (k * n0f).cos() / (k * n0f).sin() * k.sin() - xi;
    for m in 0..n0 {
        let lo = m as f64 * pi / n0f;
        let hi = (m + 1) as f64 * pi / n0f;
        // One-sided limits at the bracket ends.
        let g_lo = if m == 0 {
            1.0 / n0f - xi
        } else {
            f64::INFINITY
        };
        let g_hi = if m + 1 == n0 {
            -1.0 / n0f - xi
        } else {
            f64::NEG_INFINITY
        };
        if !(g_lo > 0.0 && g_hi < 0.0) {
            continue;
        }
        let k = bisect_decreasing(g, lo, hi);
        roots.push(Wavevector {
            k,
            parity: Parity::Even,
            energy: -two_j * k.cos(),
        });
    }

    let expected = spec.n_sites() - 1;
    if roots.len() != expected {
        return Err(Error::SolverFailure {
            found: roots.len(),
            expected,
        });
    }
    roots.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    Ok(WavevectorSet {
        roots,
        bound_q: xi.asinh(),
    })
}

/// Root of a function that is positive just right of `lo` and negative just
/// left of `hi`; the endpoints themselves are never evaluated.
fn bisect_decreasing(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    while hi - lo > ROOT_TOLERANCE {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn diagonalize_medium(spec: &ChainSpec) -> MediumSpectrum {
    let (eigenvalues, eigenvectors) = symmetric_eigen_sorted(build_medium_hamiltonian(spec));
    MediumSpectrum {
        eigenvalues,
        eigenvectors,
    }
}

/// Ascending eigenpairs of a real symmetric matrix with deterministic signs.
pub(crate) fn symmetric_eigen_sorted(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = SymmetricEigen::new(m);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut col = eig.eigenvectors.column(src).into_owned();
        fix_sign(&mut col);
        vectors.set_column(dst, &col);
    }
    (values, vectors)
}

/// Makes the largest-magnitude entry positive. Near-ties (mirror images of
/// each other) resolve to the lowest index.
fn fix_sign(v: &mut DVector<f64>) {
    let max = v.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
    if max == 0.0 {
        return;
    }
    let pivot = v
        .iter()
        .position(|x| x.abs() >= max * (1.0 - 1e-9))
        .unwrap_or(0);
    if v[pivot] < 0.0 {
        v.neg_mut();
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn rejects_even_or_short_chains() {
        assert!(matches!(ChainSpec::new(4, 1.0), Err(Error::InvalidSpec(_))));
        assert!(matches!(ChainSpec::new(1, 1.0), Err(Error::InvalidSpec(_))));
        assert!(ChainSpec::new(0, 1.0).is_err());
        assert!(ChainSpec::new(3, -0.1).is_err());
        assert!(ChainSpec::with_hopping(3, 0.0, 0.1).is_err());
    }

    #[test]
    fn defect_site_is_center() {
        let c = ChainSpec::new(39, 1.0).unwrap();
        assert_eq!(c.defect_site(), 20);
        assert_eq!(c.xi(), 0.5);
    }

    #[test]
    fn three_site_matrices() {
        let h = build_medium_hamiltonian(&ChainSpec::new(3, 0.0).unwrap());
        assert_eq!(h[(0, 1)], -1.0);
        assert_eq!(h[(1, 2)], -1.0);
        assert_eq!(h[(2, 1)], -1.0);
        assert_eq!(h[(0, 2)], 0.0);
        assert!((0..3).all(|i| h[(i, i)] == 0.0));

        let h = build_medium_hamiltonian(&ChainSpec::new(3, 1.0).unwrap());
        assert_eq!(
            (0..3).map(|i| h[(i, i)]).collect::<Vec<_>>(),
            vec![0.0, -1.0, 0.0]
        );
        assert_eq!(h, h.transpose());
    }

    #[test]
    fn three_site_spectrum() {
        let s = diagonalize_medium(&ChainSpec::new(3, 0.0).unwrap());
        let r2 = 2f64.sqrt();
        for (got, want) in s.eigenvalues.iter().zip([-r2, 0.0, r2]) {
            assert!(close(*got, want, 1e-12), "{got} vs {want}");
        }
    }

    #[test]
    fn bound_state_values() {
        let b = bound_state(&ChainSpec::new(39, 1.0).unwrap()).unwrap();
        assert!(close(b.q, 0.481212, 1e-6));
        assert!(close(b.energy, -2.236068, 1e-6));
        assert!(close(b.amplitude(20), 0.668740, 1e-6));

        let b = bound_state(&ChainSpec::new(39, 0.5).unwrap()).unwrap();
        assert!(close(b.q, 0.247466, 1e-6));
        assert!(close(b.energy, -2.061553, 1e-6));
    }

    #[test]
    fn bound_state_limits() {
        assert_eq!(
            bound_state(&ChainSpec::new(39, 0.0).unwrap()),
            Err(Error::NoBoundState)
        );
        let b = bound_state(&ChainSpec::new(39, 1e-9).unwrap()).unwrap();
        assert!(b.q < 1e-9);
        assert!(close(b.energy, -2.0, 1e-12));
        assert!(b.norm_lambda > 1e8);
    }

    #[test]
    fn bound_state_profile_is_mirror_symmetric() {
        let c = ChainSpec::new(39, 0.5).unwrap();
        let b = bound_state(&c).unwrap();
        let n0 = c.defect_site();
        for m in 1..n0 {
            assert_eq!(b.amplitude(n0 - m), b.amplitude(n0 + m));
        }
        let weight: f64 = b.profile.iter().map(|u| u * u).sum();
        assert!(weight <= 1.0);
    }

    #[test]
    fn gap_values() {
        let gap = |mu0| energy_gap(&ChainSpec::new(39, mu0).unwrap());
        assert!(close(gap(1.0), 0.236068, 1e-6));
        assert!(close(gap(0.5), 0.061553, 1e-6));
        assert_eq!(gap(0.0), 0.0);
    }

    #[test]
    fn odd_parity_roots_closed_form() {
        let w = solve_wavevectors(&ChainSpec::new(39, 0.5).unwrap()).unwrap();
        let mut odd: Vec<f64> = w
            .roots
            .iter()
            .filter(|r| r.parity == Parity::Odd)
            .map(|r| r.k)
            .collect();
        odd.sort_by(f64::total_cmp);
        assert_eq!(odd.len(), 19);
        for (m, k) in odd.iter().enumerate() {
            let want = (m + 1) as f64 * std::f64::consts::PI / 20.0;
            assert!(close(*k, want, 1e-15));
        }
    }

    #[test]
    fn even_roots_satisfy_condition() {
        let c = ChainSpec::new(39, 0.5).unwrap();
        let w = solve_wavevectors(&c).unwrap();
        assert_eq!(w.roots.len(), 38);
        for r in w.roots.iter().filter(|r| r.parity == Parity::Even) {
            let lhs = (r.k * 20.0).cos() * r.k.sin() - c.xi() * (r.k * 20.0).sin();
            assert!(lhs.abs() < 1e-11, "residual {lhs} at k = {}", r.k);
            assert!(r.energy > -2.0 && r.energy < 2.0);
        }
    }

    #[test]
    fn strong_defect_roots_approach_poles() {
        let c = ChainSpec::new(19, 1e6).unwrap();
        let w = solve_wavevectors(&c).unwrap();
        let pi = std::f64::consts::PI;
        for r in w.roots.iter().filter(|r| r.parity == Parity::Even) {
            let pole_distance = ((r.k * 10.0 / pi).round() - r.k * 10.0 / pi).abs();
            assert!(pole_distance < 1e-6);
        }
    }

    #[test]
    fn weak_defect_is_a_solver_failure() {
        // ξ below 1/N₀: the finite chain has no state below the band.
        let c = ChainSpec::new(19, 0.1).unwrap();
        assert!(matches!(
            solve_wavevectors(&c),
            Err(Error::SolverFailure { found: 19, .. })
        ));
    }

    #[test]
    fn roots_match_dense_excited_levels() {
        let c = ChainSpec::new(39, 0.5).unwrap();
        let w = solve_wavevectors(&c).unwrap();
        let s = diagonalize_medium(&c);
        for (a, b) in w.energies().iter().zip(&s.eigenvalues[1..]) {
            assert!(close(*a, *b, 1e-9), "{a} vs {b}");
        }
    }

    #[test]
    fn defect_free_spectrum_is_cosine_band() {
        let s = diagonalize_medium(&ChainSpec::new(39, 0.0).unwrap());
        let mut want: Vec<f64> = (0..39)
            .map(|n| -2.0 * ((n + 1) as f64 * std::f64::consts::PI / 40.0).cos())
            .collect();
        want.sort_by(f64::total_cmp);
        for (a, b) in s.eigenvalues.iter().zip(&want) {
            assert!(close(*a, *b, 1e-12));
        }
    }

    #[test]
    fn dense_ground_energy_tracks_bound_formula() {
        let s = diagonalize_medium(&ChainSpec::new(39, 0.5).unwrap());
        assert!(close(s.eigenvalues[0], -2.061553, 1e-3));
        let s = diagonalize_medium(&ChainSpec::new(39, 1.0).unwrap());
        assert!(close(s.eigenvalues[0], -2.236068, 1e-6));
    }

    #[test]
    fn eigenvectors_orthonormal_with_small_residual() {
        let c = ChainSpec::new(39, 1.0).unwrap();
        let h = build_medium_hamiltonian(&c);
        let s = diagonalize_medium(&c);
        let v = &s.eigenvectors;
        let gram = v.transpose() * v;
        let eye = DMatrix::<f64>::identity(39, 39);
        assert!((gram - eye).amax() < 1e-10);
        let hnorm = h.norm();
        for (n, lambda) in s.eigenvalues.iter().enumerate() {
            let col = s.eigenvector(n);
            let r = &h * &col - col * *lambda;
            assert!(r.norm() <= 1e-10 * hnorm);
        }
    }

    #[test]
    fn eigenvectors_are_mirror_symmetric() {
        let c = ChainSpec::new(39, 1.0).unwrap();
        let s = diagonalize_medium(&c);
        let center = c.defect_site() - 1;
        for n in 0..39 {
            let v = s.eigenvector(n);
            let sym = (1..=center).all(|m| (v[center - m] - v[center + m]).abs() < 1e-8);
            let anti = (1..=center).all(|m| (v[center - m] + v[center + m]).abs() < 1e-8);
            assert!(sym || anti, "level {n} breaks mirror symmetry");
            let max = v.amax();
            let pivot = v.iter().find(|x| x.abs() >= max * (1.0 - 1e-9)).unwrap();
            assert!(*pivot > 0.0);
        }
    }
}
