use num_complex::Complex64;
use saddle_core::dynamics::{build_g_new, build_q, eigenvalues, symmetric_eigenvalues, QuadraticGame};
use saddle_core::problem::generate_matrix;

/// Orders by imaginary part, since every eigenvalue of Q has real part μ.
fn sorted(mut v: Vec<Complex64>) -> Vec<Complex64> {
    v.sort_by(|a, b| a.im.total_cmp(&b.im));
    v
}

#[test]
fn q_spectrum_matches_singular_values() {
    for (i, (m, n)) in [(1, 1), (2, 3), (3, 2), (5, 5), (8, 8), (4, 7)].into_iter().enumerate() {
        let mu = [0.1, 1.0, 3.0][i % 3];
        let a = generate_matrix("gaussian", m, n, 40 + i as u64).unwrap();
        let game = QuadraticGame::new(mu, a.clone()).unwrap();
        let got = sorted(eigenvalues(&build_q(&game), 1e-8).unwrap().eigenvalues);
        // Eigenvalues of the smaller Gram matrix are the squared singular values.
        let gram = if m <= n { &a * a.transpose() } else { a.transpose() * &a };
        let mut want = Vec::new();
        for s in symmetric_eigenvalues(&gram).unwrap() {
            let r = s.max(0.0).sqrt();
            want.push(Complex64::new(mu, r));
            want.push(Complex64::new(mu, -r));
        }
        want.resize(n + m, Complex64::new(mu, 0.0));
        let want = sorted(want);
        assert_eq!(got.len(), want.len());
        for (g, w) in got.iter().zip(&want) {
            assert!((g - w).norm() <= 1e-8, "{m}x{n}: {g} vs {w}");
        }
    }
}

#[test]
fn g_new_spectrum_sits_on_the_shifted_axis() {
    for (i, mu) in [0.2, 1.0, 5.0].into_iter().enumerate() {
        let game = QuadraticGame::new(mu, generate_matrix("gaussian", 3, 4, 70 + i as u64).unwrap()).unwrap();
        let s = eigenvalues(&build_g_new(&game), 1e-8).unwrap();
        assert_eq!(s.eigenvalues.len(), 14);
        assert!(s.eigenvalues.iter().all(|z| (z.re + 1.0).abs() <= 1e-8), "{:?}", s.eigenvalues);
    }
}
