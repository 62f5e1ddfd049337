//! Faddeeva values against direct quadrature of
//! w(z) = (i/π)∫ e^{−t²}/(z − t) dt, valid for Im z > 0.

use num_complex::Complex64;
use rvo_core::faddeeva::faddeeva_w;

#[allow(clippy::too_many_arguments)]
fn simpson<F: Fn(f64) -> Complex64>(f: &F, a: f64, b: f64, fa: Complex64, fm: Complex64, fb: Complex64, whole: Complex64, tol: f64, depth: u32) -> Complex64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + simpson(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

fn quadrature_w(z: Complex64) -> Complex64 {
    let f = |t: f64| (-t * t).exp() / (z - t);
    let (a, b) = (-12.0, 12.0);
    let (fa, fm, fb) = (f(a), f(0.0), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    Complex64::i() / std::f64::consts::PI * simpson(&f, a, b, fa, fm, fb, whole, 1e-14, 40)
}

#[test]
fn one_plus_i_matches_quadrature() {
    let z = Complex64::new(1.0, 1.0);
    let w = faddeeva_w(z).unwrap();
    let q = quadrature_w(z);
    assert!((w - q).norm() / q.norm() < 1e-10, "{w} vs {q}");
    // Tabulated: w(1+i) = 0.304744205256913 + 0.208218938202832i
    assert!((w - Complex64::new(0.304_744_205_256_913, 0.208_218_938_202_832)).norm() < 1e-12);
}

#[test]
fn assorted_points_match_quadrature() {
    for (x, y) in [(0.0, 0.3), (2.5, 0.2), (-3.7, 1.5), (5.9, 0.4), (6.1, 0.4), (8.0, 3.0), (0.5, 7.0)] {
        let z = Complex64::new(x, y);
        let w = faddeeva_w(z).unwrap();
        let q = quadrature_w(z);
        assert!((w - q).norm() / q.norm() < 1e-8, "z={z}: {w} vs {q}");
    }
}

#[test]
fn large_arguments_follow_asymptotic_series() {
    // i/(√π z)·Σ (2k−1)!!/(2z²)^k, truncated after four terms.
    for (x, y) in [(50.0, 1.0), (1e3, 0.01), (-7e3, 30.0), (0.0, 1e4)] {
        let z = Complex64::new(x, y);
        let z2 = z * z;
        let inv = 1.0 / (2.0 * z2);
        let series = Complex64::i() / (std::f64::consts::PI.sqrt() * z)
            * (1.0 + inv + 3.0 * inv * inv + 15.0 * inv * inv * inv);
        let w = faddeeva_w(z).unwrap();
        assert!((w - series).norm() / series.norm() < 1e-6, "z={z}");
    }
}
