//! Thin wrapper around rustfft for real fields on the torus.
//!
//! Conventions: the forward transform returns torus Fourier coefficients
//! φ̂(k) = ∫ e^{−2πik·x} φ(x) dx approximated by the DFT scaled with hᵈ,
//! indexed by FFT bin (frequency k mod N per axis). The inverse reconstructs
//! values at the cell centers x_j = (j + 1/2)h... note: we place samples at
//! x_j = j·h for the transform pair and treat fields as living on the cell
//! lattice {j·h}; all operators are Fourier multipliers, so the uniform
//! offset convention cancels everywhere it could matter.

use num_complex::Complex64;
use rustfft::FftPlanner;
use std::sync::{Arc, Mutex, OnceLock};

static PLANNER: OnceLock<Mutex<FftPlanner<f64>>> = OnceLock::new();

fn plan(len: usize, inverse: bool) -> Arc<dyn rustfft::Fft<f64>> {
    let planner = PLANNER.get_or_init(|| Mutex::new(FftPlanner::new()));
    let mut guard = planner.lock().expect("fft planner poisoned");
    if inverse {
        guard.plan_fft_inverse(len)
    } else {
        guard.plan_fft_forward(len)
    }
}

/// Forward DFT of a real row-major array (axis length `nax`, `d` axes),
/// scaled by N⁻ᵈ so bin k holds the torus Fourier coefficient.
pub fn forward(values: &[f64], nax: usize, d: usize) -> Vec<Complex64> {
    let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    transform(&mut buf, nax, d, false);
    let scale = 1.0 / (nax.pow(d as u32) as f64);
    for c in &mut buf {
        *c *= scale;
    }
    buf
}

/// Inverse DFT back to real values. The imaginary residue (roundoff for
/// conjugate-even spectra) is dropped.
pub fn inverse_real(spectrum: &[Complex64], nax: usize, d: usize) -> Vec<f64> {
    let mut buf = spectrum.to_vec();
    transform(&mut buf, nax, d, true);
    buf.iter().map(|c| c.re).collect()
}

/// Inverse DFT keeping complex output.
pub fn inverse(spectrum: &[Complex64], nax: usize, d: usize) -> Vec<Complex64> {
    let mut buf = spectrum.to_vec();
    transform(&mut buf, nax, d, true);
    buf
}

fn transform(buf: &mut [Complex64], nax: usize, d: usize, inv: bool) {
    let fft = plan(nax, inv);
    match d {
        1 => {
            debug_assert_eq!(buf.len(), nax);
            fft.process(buf);
        }
        2 => {
            debug_assert_eq!(buf.len(), nax * nax);
            for row in buf.chunks_exact_mut(nax) {
                fft.process(row);
            }
            let mut col = vec![Complex64::default(); nax];
            for j in 0..nax {
                for i in 0..nax {
                    col[i] = buf[i * nax + j];
                }
                fft.process(&mut col);
                for i in 0..nax {
                    buf[i * nax + j] = col[i];
                }
            }
        }
        _ => unreachable!("dimension restricted to 1 or 2"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_1d() {
        let nax = 16;
        let values: Vec<f64> = (0..nax).map(|i| (i as f64 * 0.37).sin() + 0.2).collect();
        let spec = forward(&values, nax, 1);
        let back = inverse_real(&spec, nax, 1);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn round_trip_2d() {
        let nax = 8;
        let values: Vec<f64> = (0..nax * nax).map(|i| (i as f64 * 0.11).cos()).collect();
        let spec = forward(&values, nax, 2);
        let back = inverse_real(&spec, nax, 2);
        for (a, b) in values.iter().zip(&back) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn pure_mode_lands_in_single_bin() {
        let nax = 32;
        let k = 5i64;
        let values: Vec<f64> = (0..nax)
            .map(|j| (2.0 * std::f64::consts::PI * k as f64 * j as f64 / nax as f64).cos())
            .collect();
        let spec = forward(&values, nax, 1);
        // cos splits into bins k and N−k with coefficient 1/2 each
        assert!((spec[k as usize].re - 0.5).abs() < 1e-12);
        assert!((spec[(nax as i64 - k) as usize].re - 0.5).abs() < 1e-12);
        let mass: f64 = spec
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != k as usize && *i != (nax - k as usize))
            .map(|(_, c)| c.norm())
            .sum();
        assert!(mass < 1e-12);
    }
}
