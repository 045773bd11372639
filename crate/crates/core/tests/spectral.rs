use qst_core::{bound_state, diagonalize_medium, energy_gap, solve_wavevectors, ChainSpec};

const SIZES: [usize; 3] = [19, 39, 79];
const DEFECTS: [f64; 3] = [0.25, 0.5, 1.0];

#[test]
fn analytic_spectrum_matches_dense_diagonalization() {
    for n in SIZES {
        for mu0 in DEFECTS {
            let chain = ChainSpec::new(n, mu0).unwrap();
            let roots = solve_wavevectors(&chain).unwrap();
            let bound = bound_state(&chain).unwrap();
            let numeric = diagonalize_medium(&chain);

            assert_eq!(roots.roots.len(), n - 1);
            let n0 = chain.defect_site() as f64;
            let bound_tol = 10.0 * (-2.0 * bound.q * n0).exp();
            assert!(
                (bound.energy - numeric.eigenvalues[0]).abs() <= bound_tol.max(1e-12),
                "N={n} mu0={mu0}: bound {} vs {}",
                bound.energy,
                numeric.eigenvalues[0]
            );

            let band = roots.energies();
            for (a, b) in band.iter().zip(&numeric.eigenvalues[1..]) {
                assert!((a - b).abs() <= 1e-8, "N={n} mu0={mu0}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn bound_profile_overlaps_numeric_ground_state() {
    for n in [39, 79] {
        for mu0 in [0.5, 1.0, 2.0] {
            let chain = ChainSpec::new(n, mu0).unwrap();
            let profile = bound_state(&chain).unwrap().normalized_profile();
            let ground = diagonalize_medium(&chain).eigenvector(0);
            let overlap: f64 = profile.iter().zip(ground.iter()).map(|(a, b)| a * b).sum();
            assert!(overlap * overlap >= 0.999, "N={n} mu0={mu0}: overlap {overlap}");
        }
    }
}

#[test]
fn gap_grows_with_defect_depth() {
    let mut last_analytic = 0.0;
    let mut last_numeric = 0.0;
    for mu0 in [0.25, 0.5, 0.75, 1.0, 1.5, 2.0] {
        let chain = ChainSpec::new(79, mu0).unwrap();
        let analytic = energy_gap(&chain);
        let numeric = diagonalize_medium(&chain).gap();
        assert!(analytic > last_analytic && numeric > last_numeric);
        last_analytic = analytic;
        last_numeric = numeric;
    }
}

#[test]
fn clean_chain_is_cosine_band() {
    let chain = ChainSpec::new(39, 0.0).unwrap();
    let ev = diagonalize_medium(&chain).eigenvalues;
    for (n, e) in ev.iter().enumerate() {
        let expected = -2.0 * ((n + 1) as f64 * std::f64::consts::PI / 40.0).cos();
        assert!((e - expected).abs() < 1e-12);
    }
}
