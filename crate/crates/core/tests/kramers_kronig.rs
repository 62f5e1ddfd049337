//! Re χ reconstructed from Im χ with a discrete Hilbert transform.
//!
//! Odd-point (Maclaurin) rule: Re χ_i = (2/π)·Σ_{m odd} Im χ_{i+m}/m, evaluated
//! as a zero-padded FFT convolution.

use num_complex::Complex64;
use rustfft::FftPlanner;
use rvo_core::hz_to_rad;
use rvo_core::medium::{Medium, VaporCell};

fn hilbert_real_part(im: &[f64]) -> Vec<f64> {
    let n = im.len();
    let size = (3 * n).next_power_of_two();
    let mut signal: Vec<Complex64> = im.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    signal.resize(size, Complex64::new(0.0, 0.0));
    // Kernel k(d) = −2/(πd) for odd d, stored with wrap-around for negative d.
    let mut kernel = vec![Complex64::new(0.0, 0.0); size];
    for d in (1..n as i64).step_by(2) {
        let v = 2.0 / (std::f64::consts::PI * d as f64);
        kernel[d as usize] = Complex64::new(-v, 0.0);
        kernel[size - d as usize] = Complex64::new(v, 0.0);
    }
    let mut planner = FftPlanner::new();
    let fwd = planner.plan_fft_forward(size);
    let inv = planner.plan_fft_inverse(size);
    fwd.process(&mut signal);
    fwd.process(&mut kernel);
    let mut prod: Vec<Complex64> = signal.iter().zip(&kernel).map(|(a, b)| a * b).collect();
    inv.process(&mut prod);
    prod[..n].iter().map(|c| c.re / size as f64).collect()
}

#[test]
fn real_part_follows_from_imaginary_part() {
    let cell = VaporCell::natural(378.15).unwrap();
    let n = 1 << 17;
    let span = 30e9;
    let grid: Vec<f64> = (0..n).map(|i| -15e9 + span * i as f64 / (n - 1) as f64).collect();
    let chi: Vec<Complex64> = grid.iter().map(|&f| cell.susceptibility(hz_to_rad(f))).collect();
    let im: Vec<f64> = chi.iter().map(|c| c.im).collect();
    let re = hilbert_real_part(&im);
    let scale = chi.iter().map(|c| c.re.abs()).fold(0.0, f64::max);
    let interior = n / 10..n - n / 10;
    let worst = interior
        .map(|i| (re[i] - chi[i].re).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 0.02 * scale, "max error {:.3e} vs scale {:.3e}", worst, scale);
}
