//! Real-valued functions on a torus grid with a cached spectral twin.

use crate::error::CoreError;
use crate::fft;
use crate::grid::TorusGrid;
use num_complex::Complex64;
use std::sync::OnceLock;

/// A function 𝕋ᵈ → ℝ sampled on the grid, immutable after construction.
/// The Fourier coefficients are computed once on demand and then shared.
#[derive(Debug)]
pub struct Field {
    grid: TorusGrid,
    values: Vec<f64>,
    spectrum: OnceLock<Vec<Complex64>>,
}

impl Clone for Field {
    fn clone(&self) -> Self {
        let f = Field {
            grid: self.grid,
            values: self.values.clone(),
            spectrum: OnceLock::new(),
        };
        if let Some(s) = self.spectrum.get() {
            let _ = f.spectrum.set(s.clone());
        }
        f
    }
}

impl Field {
    pub fn from_values(grid: TorusGrid, values: Vec<f64>) -> Self {
        assert_eq!(values.len(), grid.len(), "value array must match grid size");
        debug_assert!(values.iter().all(|v| v.is_finite()), "field values must be finite");
        Field { grid, values, spectrum: OnceLock::new() }
    }

    pub fn constant(grid: TorusGrid, c: f64) -> Self {
        Self::from_values(grid, vec![c; grid.len()])
    }

    pub fn zero(grid: TorusGrid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn from_fn(grid: TorusGrid, f: impl Fn([f64; 2]) -> f64) -> Self {
        let values = grid.indices().map(|i| f(grid.point(i))).collect();
        Self::from_values(grid, values)
    }

    /// Build from torus Fourier coefficients laid out in FFT bin order.
    pub fn from_spectrum(grid: TorusGrid, spectrum: Vec<Complex64>) -> Self {
        assert_eq!(spectrum.len(), grid.len());
        let values = fft::inverse_real(&spectrum, grid.axis_len(), grid.d());
        let f = Field { grid, values, spectrum: OnceLock::new() };
        let _ = f.spectrum.set(spectrum);
        f
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn spectrum(&self) -> &[Complex64] {
        self.spectrum
            .get_or_init(|| fft::forward(&self.values, self.grid.axis_len(), self.grid.d()))
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Grid inner product ⟨f,g⟩ = hᵈ Σ f_i g_i.
    pub fn inner(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid);
        let cell = self.grid.spacing().powi(self.grid.d() as i32);
        self.values.iter().zip(&other.values).map(|(a, b)| a * b).sum::<f64>() * cell
    }

    /// L² norm under the grid inner product.
    pub fn l2_norm(&self) -> f64 {
        self.inner(self).sqrt()
    }

    /// Lᵖ norm; `p = f64::INFINITY` gives the sup norm.
    pub fn lp_norm(&self, p: f64) -> f64 {
        if p.is_infinite() {
            return self.values.iter().fold(0.0f64, |acc, v| acc.max(v.abs()));
        }
        assert!(p >= 1.0, "p must be in [1, inf]");
        let cell = self.grid.spacing().powi(self.grid.d() as i32);
        (self.values.iter().map(|v| v.abs().powf(p)).sum::<f64>() * cell).powf(1.0 / p)
    }

    /// Mean over the torus ⟨f, 1⟩ (volume 1).
    pub fn mean(&self) -> f64 {
        let cell = self.grid.spacing().powi(self.grid.d() as i32);
        self.values.iter().sum::<f64>() * cell
    }

    pub fn min(&self) -> f64 {
        self.values.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }

    pub fn max(&self) -> f64 {
        self.values.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Field {
        Field::from_values(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &Field, f: impl Fn(f64, f64) -> f64) -> Result<Field, CoreError> {
        if self.grid != other.grid {
            return Err(CoreError::GridMismatch);
        }
        Ok(Field::from_values(
            self.grid,
            self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect(),
        ))
    }

    pub fn add(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a + b).expect("grid mismatch")
    }

    pub fn sub(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a - b).expect("grid mismatch")
    }

    /// Pointwise product on the grid.
    pub fn mul(&self, other: &Field) -> Field {
        self.zip_with(other, |a, b| a * b).expect("grid mismatch")
    }

    pub fn scale(&self, c: f64) -> Field {
        self.map(|v| c * v)
    }

    /// Max absolute difference against another field.
    pub fn max_abs_diff(&self, other: &Field) -> f64 {
        assert_eq!(self.grid, other.grid);
        self.values
            .iter()
            .zip(&other.values)
            .fold(0.0f64, |acc, (a, b)| acc.max((a - b).abs()))
    }
}
