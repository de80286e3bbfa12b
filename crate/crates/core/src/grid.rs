//! Uniform grids on the torus 𝕋ᵈ = ℝᵈ/ℤᵈ, d ∈ {1, 2}.
//!
//! A grid carries the scale parameter `n` (reproduction balls have volume
//! n⁻ᵈ) and an oversampling factor `m`, so each axis holds N = m·n points
//! with spacing h = 1/N. Cell centers sit at (i + 1/2)·h.

use crate::error::CoreError;
use serde::{Deserialize, Serialize};

/// Euclidean radius of the ball of volume n⁻ᵈ.
pub fn ball_radius(d: usize, n: usize) -> f64 {
    match d {
        1 => 1.0 / (2.0 * n as f64),
        2 => 1.0 / (std::f64::consts::PI.sqrt() * n as f64),
        _ => unreachable!("dimension restricted to 1 or 2"),
    }
}

/// Uniform Nᵈ discretization of the torus, N = m·n per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    d: usize,
    n: usize,
    m: usize,
}

impl TorusGrid {
    /// Smallest admissible scale: the ball and the cube of volume n⁻ᵈ must
    /// fit in (−1/2, 1/2)ᵈ, which holds for every n ≥ 2 in d ≤ 2.
    pub const MIN_SCALE: usize = 2;

    pub fn new(d: usize, n: usize, m: usize) -> Result<Self, CoreError> {
        if d != 1 && d != 2 {
            return Err(CoreError::InvalidGrid(format!("dimension {d} not in {{1,2}}")));
        }
        if n < Self::MIN_SCALE {
            return Err(CoreError::InvalidGrid(format!("scale n={n} below minimum {}", Self::MIN_SCALE)));
        }
        if m == 0 || (m * n) % 2 != 0 {
            return Err(CoreError::InvalidGrid(format!("N = m*n = {} must be even and positive", m * n)));
        }
        Ok(Self { d, n, m })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scale(&self) -> usize {
        self.n
    }

    pub fn oversampling(&self) -> usize {
        self.m
    }

    /// Points per axis.
    pub fn axis_len(&self) -> usize {
        self.m * self.n
    }

    /// Total number of grid points Nᵈ.
    pub fn len(&self) -> usize {
        self.axis_len().pow(self.d as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing h = 1/N.
    pub fn spacing(&self) -> f64 {
        1.0 / self.axis_len() as f64
    }

    /// Radius of the reproduction ball Bₙ.
    pub fn ball_radius(&self) -> f64 {
        ball_radius(self.d, self.n)
    }

    /// Ball radius must cover at least two grid spacings so that real-space
    /// averages are meaningful.
    pub fn check_resolution(&self) -> Result<(), CoreError> {
        if self.ball_radius() < 2.0 * self.spacing() {
            return Err(CoreError::ResolutionGuard {
                radius: self.ball_radius(),
                spacing: self.spacing(),
            });
        }
        Ok(())
    }

    /// Cell center coordinate along one axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 + 0.5) * self.spacing()
    }

    /// Position of grid point with flat index `idx`, row-major.
    pub fn point(&self, idx: usize) -> [f64; 2] {
        let nax = self.axis_len();
        match self.d {
            1 => [self.coord(idx), 0.0],
            _ => [self.coord(idx / nax), self.coord(idx % nax)],
        }
    }

    /// Signed frequency for FFT bin `i`: k ∈ {−N/2, …, N/2−1}.
    pub fn frequency(&self, i: usize) -> i64 {
        let nax = self.axis_len() as i64;
        let i = i as i64;
        if i < nax / 2 {
            i
        } else {
            i - nax
        }
    }

    /// Frequency vector of the flat spectral index, row-major.
    pub fn frequency_vec(&self, idx: usize) -> [i64; 2] {
        let nax = self.axis_len();
        match self.d {
            1 => [self.frequency(idx), 0],
            _ => [self.frequency(idx / nax), self.frequency(idx % nax)],
        }
    }

    /// Iterate over all flat indices.
    pub fn indices(&self) -> std::ops::Range<usize> {
        0..self.len()
    }

    /// Torus distance between two points (per-axis minimal image).
    pub fn torus_dist(&self, a: [f64; 2], b: [f64; 2]) -> f64 {
        let mut s = 0.0;
        for ax in 0..self.d {
            let mut delta = (a[ax] - b[ax]).abs();
            if delta > 0.5 {
                delta = 1.0 - delta;
            }
            s += delta * delta;
        }
        s.sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_basics() {
        let g = TorusGrid::new(1, 8, 8).unwrap();
        assert_eq!(g.axis_len(), 64);
        assert_eq!(g.len(), 64);
        assert!((g.spacing() - 1.0 / 64.0).abs() < 1e-15);
        assert!((g.ball_radius() - 1.0 / 16.0).abs() < 1e-15);
        g.check_resolution().unwrap();

        let g2 = TorusGrid::new(2, 8, 4).unwrap();
        assert_eq!(g2.len(), 32 * 32);
        assert!((g2.ball_radius() - 1.0 / (std::f64::consts::PI.sqrt() * 8.0)).abs() < 1e-15);
    }

    #[test]
    fn frequencies_cover_representable_set() {
        let g = TorusGrid::new(1, 4, 2).unwrap();
        let freqs: Vec<i64> = (0..g.axis_len()).map(|i| g.frequency(i)).collect();
        assert_eq!(freqs, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }

    #[test]
    fn rejects_bad_dimensions() {
        assert!(TorusGrid::new(3, 8, 8).is_err());
        assert!(TorusGrid::new(1, 1, 8).is_err());
        // odd N
        assert!(TorusGrid::new(1, 3, 3).is_err());
    }

    #[test]
    fn resolution_guard_fires() {
        // m = 2 in d = 1: ball radius 1/(2n) < 2h = 4/(2n)? h = 1/(2n), radius = 1/(2n) < 2h.
        let g = TorusGrid::new(1, 8, 2).unwrap();
        assert!(g.check_resolution().is_err());
    }

    #[test]
    fn torus_distance_wraps() {
        let g = TorusGrid::new(1, 8, 8).unwrap();
        let dist = g.torus_dist([0.05, 0.0], [0.95, 0.0]);
        assert!((dist - 0.1).abs() < 1e-12);
    }
}
