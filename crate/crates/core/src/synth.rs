//! Synthetic test fields: random band-limited functions for calibration
//! corpora and the fixed smooth potentials used by the diffusive regime.

use crate::field::Field;
use crate::grid::TorusGrid;
use crate::rng::{purpose, CounterStream};
use num_complex::Complex64;
use std::f64::consts::PI;

/// Random real field with spectrum supported on Euclidean frequencies
/// |k| ≤ kmax, normalized to sup norm 1. Deterministic in (grid, kmax, seed).
pub fn random_band_limited(grid: TorusGrid, kmax: i64, seed: u64) -> Field {
    let f = random_band_limited_raw(grid, kmax, seed);
    let sup = f.lp_norm(f64::INFINITY);
    if sup > 0.0 {
        f.scale(1.0 / sup)
    } else {
        f
    }
}

/// Same as [`random_band_limited`] without the sup normalization.
pub fn random_band_limited_raw(grid: TorusGrid, kmax: i64, seed: u64) -> Field {
    let stream = CounterStream::from_parts(&[purpose::CALIBRATION, seed]);
    let nax = grid.axis_len();
    let mut spec = vec![Complex64::default(); grid.len()];
    let draw = |ctr: u64| -> f64 {
        // centered uniform; plenty for calibration purposes
        2.0 * stream.u01(ctr) - 1.0
    };
    let mut ctr = 0u64;
    for idx in grid.indices() {
        let k = grid.frequency_vec(idx);
        let k2 = k[0] * k[0] + k[1] * k[1];
        if k2 > kmax * kmax {
            continue;
        }
        // fill each conjugate pair once, from the lexicographically positive side
        if is_canonical(k, nax as i64) {
            let re = draw(ctr);
            let im = if k == [0, 0] { 0.0 } else { draw(ctr + 1) };
            ctr += 2;
            let c = Complex64::new(re, im);
            spec[idx] = c;
            if let Some(conj_idx) = conjugate_index(grid, idx) {
                if conj_idx != idx {
                    spec[conj_idx] = c.conj();
                } else {
                    spec[idx] = Complex64::new(re, 0.0);
                }
            }
        }
    }
    Field::from_spectrum(grid, spec)
}

fn is_canonical(k: [i64; 2], _nax: i64) -> bool {
    if k[0] != 0 {
        k[0] > 0
    } else {
        k[1] >= 0
    }
}

fn conjugate_index(grid: TorusGrid, idx: usize) -> Option<usize> {
    let nax = grid.axis_len() as i64;
    let k = grid.frequency_vec(idx);
    // -k is representable unless a component sits at the Nyquist edge -N/2
    let neg = [-k[0], -k[1]];
    for ax in 0..grid.d() {
        if neg[ax] >= nax / 2 || neg[ax] < -nax / 2 {
            return None;
        }
    }
    let fold = |v: i64| -> usize { v.rem_euclid(nax) as usize };
    Some(match grid.d() {
        1 => fold(neg[0]),
        _ => fold(neg[0]) * nax as usize + fold(neg[1]),
    })
}

/// The fixed smooth potential used by the diffusive regime: a 5-mode
/// trigonometric polynomial with unit sup norm (normalization constant
/// evaluated on a fine reference lattice, independent of the target grid).
pub fn default_smooth_noise(grid: TorusGrid) -> Field {
    let d = grid.d();
    let raw = |p: [f64; 2]| -> f64 {
        let (x, y) = (p[0], p[1]);
        match d {
            1 => {
                (2.0 * PI * x).sin() + 0.7 * (4.0 * PI * x).cos() - 0.5 * (6.0 * PI * x).sin()
                    + 0.3 * (8.0 * PI * x).cos()
                    + 0.2 * (10.0 * PI * x).sin()
            }
            _ => {
                (2.0 * PI * x).sin() + 0.7 * (2.0 * PI * y).cos()
                    - 0.5 * (2.0 * PI * (x + y)).sin()
                    + 0.3 * (2.0 * PI * (2.0 * x - y)).cos()
                    + 0.2 * (4.0 * PI * y).sin()
            }
        }
    };
    let sup = reference_sup(d, raw);
    Field::from_fn(grid, |p| raw(p) / sup)
}

fn reference_sup(d: usize, f: impl Fn([f64; 2]) -> f64) -> f64 {
    let fine = 1024usize;
    let mut sup = 0.0f64;
    match d {
        1 => {
            for i in 0..fine {
                sup = sup.max(f([(i as f64 + 0.5) / fine as f64, 0.0]).abs());
            }
        }
        _ => {
            let fine = 256usize;
            for i in 0..fine {
                for j in 0..fine {
                    sup = sup
                        .max(f([(i as f64 + 0.5) / fine as f64, (j as f64 + 0.5) / fine as f64]).abs());
                }
            }
        }
    }
    sup
}

/// Strictly positive low-frequency bump, amplitude `a`: a·(1 + 0.9·cosine
/// profile). Used as the nonnegative test function of the duality checks.
pub fn positive_bump(grid: TorusGrid, a: f64) -> Field {
    Field::from_fn(grid, |p| match grid.d() {
        1 => a * (1.0 + 0.9 * (2.0 * PI * p[0]).cos()),
        _ => a * (1.0 + 0.45 * (2.0 * PI * p[0]).cos() + 0.45 * (2.0 * PI * p[1]).cos()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn band_limited_respects_band() {
        let g = TorusGrid::new(1, 8, 8).unwrap();
        let f = random_band_limited(g, 5, 1);
        for idx in g.indices() {
            let k = g.frequency_vec(idx);
            if k[0] * k[0] + k[1] * k[1] > 25 {
                assert!(f.spectrum()[idx].norm() < 1e-13);
            }
        }
        assert!((f.lp_norm(f64::INFINITY) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn band_limited_is_real_and_seeded() {
        let g = TorusGrid::new(2, 4, 8).unwrap();
        let f1 = random_band_limited(g, 6, 9);
        let f2 = random_band_limited(g, 6, 9);
        assert!(f1.max_abs_diff(&f2) == 0.0);
        let f3 = random_band_limited(g, 6, 10);
        assert!(f1.max_abs_diff(&f3) > 1e-3);
    }

    #[test]
    fn smooth_noise_has_unit_sup() {
        for d in [1, 2] {
            let g = TorusGrid::new(d, 8, 8).unwrap();
            let xi = default_smooth_noise(g);
            assert!(xi.lp_norm(f64::INFINITY) <= 1.0 + 1e-9);
            assert!(xi.lp_norm(f64::INFINITY) > 0.9);
        }
    }

    #[test]
    fn bump_is_positive() {
        let g = TorusGrid::new(1, 8, 8).unwrap();
        let b = positive_bump(g, 0.5);
        assert!(b.min() > 0.0);
    }
}
