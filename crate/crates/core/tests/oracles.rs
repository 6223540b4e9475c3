//! Independent reference computations, checked against the values frozen in `verify`.

use nalgebra::{DMatrix, DVector};

use coop_spectra::verify::SEPARABLE_SCALAR;

/// `omega phi_t - rho phi_xx - cos(2 pi t) cos(pi x) phi = lambda phi` on `[0, 1]`,
/// Neumann, in the orthonormal cosine basis with `modes` functions; monodromy by RK4.
fn separable_scalar(omega: f64, rho: f64, modes: usize, steps: usize) -> f64 {
    let pi = std::f64::consts::PI;
    let stiff = DMatrix::from_fn(modes, modes, |j, k| if j == k { -rho * (k as f64 * pi).powi(2) } else { 0.0 });
    // <cos(pi x) e_j, e_k> with e_0 = 1, e_k = sqrt(2) cos(k pi x)
    let coupling = DMatrix::from_fn(modes, modes, |j, k| match (j.min(k), j.max(k)) {
        (0, 1) => std::f64::consts::FRAC_1_SQRT_2,
        (a, b) if a >= 1 && b == a + 1 => 0.5,
        _ => 0.0,
    });
    let rhs = |t: f64, y: &DMatrix<f64>| (&stiff + &coupling * (2.0 * pi * t).cos()) * y / omega;
    let dt = 1.0 / steps as f64;
    let mut y = DMatrix::<f64>::identity(modes, modes);
    for m in 0..steps {
        let t = m as f64 * dt;
        let k1 = rhs(t, &y);
        let k2 = rhs(t + 0.5 * dt, &(&y + &k1 * (0.5 * dt)));
        let k3 = rhs(t + 0.5 * dt, &(&y + &k2 * (0.5 * dt)));
        let k4 = rhs(t + dt, &(&y + &k3 * dt));
        y += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
    }
    // dominant multiplier by power iteration from the constant mode
    let mut v = DVector::from_fn(modes, |k, _| if k == 0 { 1.0 } else { 0.0 });
    let mut mu = 0.0;
    for _ in 0..500 {
        let w = &y * &v;
        let next = w.dot(&v) / v.dot(&v);
        v = &w / w.norm();
        if (next - mu).abs() <= 1e-15 * next.abs() {
            mu = next;
            break;
        }
        mu = next;
    }
    -omega * mu.ln()
}

#[test]
fn separable_scalar_reference_values() {
    let mut bad = Vec::new();
    for &(omega, rho, frozen) in SEPARABLE_SCALAR {
        let stiffest = rho * (24.0 * std::f64::consts::PI).powi(2) / omega;
        let steps = ((stiffest / 2.0).ceil() as usize).max(4000);
        let coarse = separable_scalar(omega, rho, 20, steps);
        let fine = separable_scalar(omega, rho, 24, 2 * steps);
        println!("omega {omega} rho {rho}: {fine:.15} (modes/steps change {:.1e})", (fine - coarse).abs());
        assert!((fine - coarse).abs() < 1e-11);
        bad.extend(((fine - frozen).abs() >= 1e-10).then_some((omega, rho, frozen, fine)));
    }
    assert!(bad.is_empty(), "frozen values disagree with the oracle: {bad:?}");
}
