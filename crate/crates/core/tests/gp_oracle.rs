use landscaper::gp::{cov_matrix, eq_kernel, gp_conditional, DiffusionKernelParams};

#[test]
fn two_point_conditional_matches_closed_form() {
    let k = DiffusionKernelParams { sigma_q: 1.3, l: 0.8 };
    let (x1, x2, f1, f2, t) = (-0.4, 0.5, 1.0, -2.0, 0.1);
    let (mean, cov) = gp_conditional(&[x1, x2], &[f1, f2], &[t], &k).unwrap();

    let jitter = cov_matrix(&[x1, x2], &k).unwrap().jitter;
    let (a, b, d) = (eq_kernel(x1, x1, &k) + jitter, eq_kernel(x1, x2, &k), eq_kernel(x2, x2, &k) + jitter);
    let det = a * d - b * b;
    let (k1, k2) = (eq_kernel(t, x1, &k), eq_kernel(t, x2, &k));
    // K⁻¹ = [d −b; −b a] / det
    let w1 = (d * k1 - b * k2) / det;
    let w2 = (a * k2 - b * k1) / det;
    let expected_mean = w1 * f1 + w2 * f2;
    let expected_var = eq_kernel(t, t, &k) - (w1 * k1 + w2 * k2);
    assert!((mean[0] - expected_mean).abs() < 1e-9, "{} vs {expected_mean}", mean[0]);
    assert!((cov[(0, 0)] - expected_var).abs() < 1e-9, "{} vs {expected_var}", cov[(0, 0)]);
}

#[test]
fn conditioning_far_from_data_returns_the_prior() {
    let k = DiffusionKernelParams { sigma_q: 0.7, l: 0.2 };
    let (mean, cov) = gp_conditional(&[0.0, 0.3], &[1.0, 2.0], &[50.0], &k).unwrap();
    assert!(mean[0].abs() < 1e-12);
    assert!((cov[(0, 0)] - 0.49).abs() < 1e-12);
}
