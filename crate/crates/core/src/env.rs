//! Quenched random environments: i.i.d. box variables Zₙ on the cube
//! lattice, the derived selection field sₙ, rescaled noises ξⁿ_e and ξⁿ,
//! the renormalization constant cₙ (d = 2), and the enhanced-noise
//! diagnostics built from the resolvent and resonant product.

use crate::besov::{self};
use crate::error::CoreError;
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::rng::{mix64, purpose, CounterStream};
use crate::spectral::{self, chi_hat, chi_hat_q, theta_n, Multiplier};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Law of the i.i.d. box variables: both satisfy E Z² = 1, |Z| < 2.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ZLaw {
    /// ±1 with equal probability.
    Rademacher,
    /// Uniform on (−√3, √3).
    UniformSqrt3,
}

/// How environments at different scales n relate under one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Coupling {
    /// Fresh i.i.d. draws per (seed, n): levels are independent.
    Independent,
    /// Dyadic conditional-quantile cascade: block sums over every dyadic
    /// rectangle are quantile transforms of uniforms keyed by the spatial
    /// rectangle (not by n), so refinements of one master seed share all
    /// coarse-scale randomness while each level remains exactly i.i.d.
    /// Rademacher. Requires the Rademacher law and n a power of two.
    Hierarchical,
}

/// Noise regime of the selection field.
#[derive(Debug, Clone)]
pub enum Regime {
    /// sₙ = Zₙ − n^{−d/2}cₙ1_{d=2} piecewise on cubes; ξⁿ_e = n^{d/2}sₙ.
    WhiteNoise { law: ZLaw, coupling: Coupling },
    /// sₙ = truncation of n^{−2}ξ̄ to [−1, 1] for a fixed smooth ξ̄.
    Smooth { xi_bar: Field },
}

/// A sampled environment. Immutable; all derived fields are materialized
/// at construction.
#[derive(Debug, Clone)]
pub struct Environment {
    grid: TorusGrid,
    seed: u64,
    law_tag: String,
    z_values: Vec<f64>,
    s_n: Field,
    xi_e: Field,
    xi: Field,
    c_n: f64,
    hash: u64,
}

impl Environment {
    /// Draw an environment. Deterministic in (grid, regime, seed);
    /// `c_n` must be supplied for the white-noise regime in d = 2 (see
    /// [`renormalization_constant`]), ignored otherwise.
    pub fn sample(grid: TorusGrid, regime: &Regime, seed: u64, c_n: f64) -> Result<Self, CoreError> {
        let d = grid.d();
        let n = grid.scale();
        match regime {
            Regime::WhiteNoise { law, coupling } => {
                let z_values = match coupling {
                    Coupling::Independent => sample_iid(grid, *law, seed),
                    Coupling::Hierarchical => {
                        if *law != ZLaw::Rademacher {
                            return Err(CoreError::InvalidEnvironment(
                                "hierarchical coupling is defined for the Rademacher law only".into(),
                            ));
                        }
                        if !n.is_power_of_two() {
                            return Err(CoreError::InvalidEnvironment(format!(
                                "hierarchical coupling needs n to be a power of two, got {n}"
                            )));
                        }
                        sample_cascade(grid, seed)
                    }
                };
                for &z in &z_values {
                    if !(z > -2.0 && z < 2.0) {
                        return Err(CoreError::InvalidEnvironment(format!(
                            "box variable {z} outside (-2, 2)"
                        )));
                    }
                }
                let cshift = if d == 2 { c_n } else { 0.0 };
                let nd2 = (n as f64).powf(d as f64 / 2.0);
                let s_vals = broadcast_boxes(grid, &z_values, |z| z - cshift / nd2);
                let s_n = Field::from_values(grid, s_vals);
                let xi_e = s_n.scale(nd2);
                let xi = xi_e.map(|v| v + cshift);
                let law_tag = format!("white:{law:?}:{coupling:?}");
                Ok(Self::finish(grid, seed, law_tag, z_values, s_n, xi_e, xi, cshift))
            }
            Regime::Smooth { xi_bar } => {
                if xi_bar.grid() != grid {
                    return Err(CoreError::GridMismatch);
                }
                let n2 = (n * n) as f64;
                let s_n = xi_bar.map(|v| (v / n2).clamp(-1.0, 1.0));
                let nd2 = (n as f64).powf(d as f64 / 2.0);
                let xi_e = s_n.scale(nd2);
                let xi = xi_e.clone();
                Ok(Self::finish(grid, seed, "smooth".into(), Vec::new(), s_n, xi_e, xi, 0.0))
            }
        }
    }

    /// Degenerate environment with ξⁿ ≡ 0 but a recorded cₙ, for
    /// diagnostics of the renormalization offset.
    pub fn zero_noise(grid: TorusGrid, c_n: f64) -> Self {
        let z = Field::zero(grid);
        Self::finish(grid, 0, "zero".into(), vec![0.0; grid.scale().pow(grid.d() as u32)], z.clone(), z.clone(), z, c_n)
    }

    fn finish(
        grid: TorusGrid,
        seed: u64,
        law_tag: String,
        z_values: Vec<f64>,
        s_n: Field,
        xi_e: Field,
        xi: Field,
        c_n: f64,
    ) -> Self {
        let mut h = mix64(seed ^ 0x5851F42D4C957F2D);
        h = mix64(h ^ grid.d() as u64);
        h = mix64(h ^ grid.scale() as u64);
        h = mix64(h ^ grid.oversampling() as u64);
        for b in law_tag.bytes() {
            h = mix64(h ^ b as u64);
        }
        for v in s_n.values() {
            h = mix64(h ^ v.to_bits());
        }
        Environment { grid, seed, law_tag, z_values, s_n, xi_e, xi, c_n, hash: h }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn law_tag(&self) -> &str {
        &self.law_tag
    }

    /// Box values Zₙ(x), row-major over the cube lattice ℤₙᵈ.
    pub fn z_values(&self) -> &[f64] {
        &self.z_values
    }

    /// Raw selection field sₙ (piecewise constant on cubes).
    pub fn s_n(&self) -> &Field {
        &self.s_n
    }

    /// ξⁿ_e = n^{d/2} sₙ.
    pub fn xi_e(&self) -> &Field {
        &self.xi_e
    }

    /// ξⁿ = ξⁿ_e + cₙ 1_{d=2}.
    pub fn xi(&self) -> &Field {
        &self.xi
    }

    pub fn c_n(&self) -> f64 {
        self.c_n
    }

    /// Content hash used by cross-module consistency checks.
    pub fn hash(&self) -> u64 {
        self.hash
    }

    /// Value of sₙ on the cube containing a point (piecewise-constant
    /// lookup without touching the grid field).
    pub fn s_at_box(&self, box_idx: usize) -> f64 {
        let n = self.grid.scale();
        let d = self.grid.d();
        if self.z_values.is_empty() {
            // smooth regime: read the first cell of the box
            let m = self.grid.oversampling();
            let nax = self.grid.axis_len();
            let cell = match d {
                1 => box_idx * m,
                _ => (box_idx / n) * m * nax + (box_idx % n) * m,
            };
            self.s_n.values()[cell]
        } else {
            let cshift = if d == 2 { self.c_n } else { 0.0 };
            let nd2 = (n as f64).powf(d as f64 / 2.0);
            self.z_values[box_idx] - cshift / nd2
        }
    }
}

fn sample_iid(grid: TorusGrid, law: ZLaw, seed: u64) -> Vec<f64> {
    let n_boxes = grid.scale().pow(grid.d() as u32);
    let stream = CounterStream::from_parts(&[purpose::ENVIRONMENT, seed]);
    (0..n_boxes)
        .map(|b| draw_z(law, stream.u01(b as u64)))
        .collect()
}

fn draw_z(law: ZLaw, u: f64) -> f64 {
    match law {
        ZLaw::Rademacher => {
            if u < 0.5 {
                -1.0
            } else {
                1.0
            }
        }
        ZLaw::UniformSqrt3 => 3f64.sqrt() * (2.0 * u - 1.0),
    }
}

/// Spread per-box values onto the grid cells of each cube Qₙ(x).
fn broadcast_boxes(grid: TorusGrid, boxes: &[f64], f: impl Fn(f64) -> f64) -> Vec<f64> {
    let n = grid.scale();
    let m = grid.oversampling();
    let nax = grid.axis_len();
    let mut out = vec![0.0; grid.len()];
    match grid.d() {
        1 => {
            for (b, &z) in boxes.iter().enumerate() {
                let v = f(z);
                out[b * m..(b + 1) * m].fill(v);
            }
        }
        _ => {
            for by in 0..n {
                for bx in 0..n {
                    let v = f(boxes[by * n + bx]);
                    for iy in by * m..(by + 1) * m {
                        out[iy * nax + bx * m..iy * nax + (bx + 1) * m].fill(v);
                    }
                }
            }
        }
    }
    out
}

// --- hierarchical cascade -------------------------------------------------

/// Exact i.i.d. Rademacher field whose dyadic block sums are conditional
/// quantile transforms of uniforms keyed by the spatial dyadic rectangle.
/// Sampling order: draw the total number of +1 boxes from Binomial(count,
/// 1/2), then recursively split each rectangle, drawing the left-half
/// count from the exact hypergeometric conditional law.
fn sample_cascade(grid: TorusGrid, seed: u64) -> Vec<f64> {
    let n = grid.scale();
    let d = grid.d();
    let n_boxes = n.pow(d as u32);
    let stream = CounterStream::from_parts(&[purpose::COUPLING_TREE, seed]);

    // rectangle in box coordinates: spans [x0, x0+w) x [y0, y0+h)
    struct Rect {
        x0: usize,
        w: usize,
        y0: usize,
        h: usize,
        plus: usize,
    }

    let u_for = |x0: usize, w: usize, y0: usize, h: usize, n: usize| -> f64 {
        // key by the spatial dyadic rectangle so all levels share draws
        let lx = (n / w).trailing_zeros() as u64;
        let ix = (x0 / w) as u64;
        let (ly, iy) = if d == 2 {
            ((n / h).trailing_zeros() as u64, (y0 / h) as u64)
        } else {
            (0, 0)
        };
        let ctr = mix64(lx ^ mix64(ix.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ mix64(ly ^ iy.wrapping_mul(0xC2B2_AE3D_27D4_EB4F))));
        stream.u01(ctr)
    };

    let total_plus = binomial_half_quantile(n_boxes, u_for(0, n, 0, if d == 2 { n } else { 1 }, n));
    let mut out = vec![0.0f64; n_boxes];
    let mut stack = vec![Rect { x0: 0, w: n, y0: 0, h: if d == 2 { n } else { 1 }, plus: total_plus }];
    while let Some(r) = stack.pop() {
        if r.w == 1 && r.h == 1 {
            let idx = if d == 1 { r.x0 } else { r.y0 * n + r.x0 };
            out[idx] = if r.plus == 1 { 1.0 } else { -1.0 };
            continue;
        }
        // split the coarser dimension; ties split x
        let split_x = r.w >= r.h && r.w > 1;
        let (total, half) = if split_x { (r.w * r.h, r.w / 2 * r.h) } else { (r.w * r.h, r.h / 2 * r.w) };
        let u = if split_x {
            u_for(r.x0, r.w / 2, r.y0, r.h, n)
        } else {
            u_for(r.x0, r.w, r.y0, r.h / 2, n)
        };
        let left_plus = hypergeometric_quantile(total, r.plus, half, u);
        if split_x {
            stack.push(Rect { x0: r.x0, w: r.w / 2, y0: r.y0, h: r.h, plus: left_plus });
            stack.push(Rect { x0: r.x0 + r.w / 2, w: r.w / 2, y0: r.y0, h: r.h, plus: r.plus - left_plus });
        } else {
            stack.push(Rect { x0: r.x0, w: r.w, y0: r.y0, h: r.h / 2, plus: left_plus });
            stack.push(Rect { x0: r.x0, w: r.w, y0: r.y0 + r.h / 2, h: r.h / 2, plus: r.plus - left_plus });
        }
    }
    out
}

/// Quantile of Binomial(n, 1/2) via the unnormalized pmf recurrence.
fn binomial_half_quantile(n: usize, u: f64) -> usize {
    let mut weights = Vec::with_capacity(n + 1);
    let mut w = 1.0f64;
    let mut total = 1.0f64;
    weights.push(w);
    for j in 0..n {
        w *= (n - j) as f64 / (j + 1) as f64;
        weights.push(w);
        total += w;
    }
    let target = u * total;
    let mut acc = 0.0;
    for (j, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return j;
        }
    }
    n
}

/// Quantile of the hypergeometric law: number of +1 boxes falling in a
/// fixed half of size `half` when `plus` of `total` boxes are +1 and all
/// arrangements are equally likely.
fn hypergeometric_quantile(total: usize, plus: usize, half: usize, u: f64) -> usize {
    let minus = total - plus;
    let j_min = half.saturating_sub(minus);
    let j_max = plus.min(half);
    let mut weights = Vec::with_capacity(j_max - j_min + 1);
    let mut w = 1.0f64;
    let mut sum = 1.0f64;
    weights.push(w);
    for j in j_min..j_max {
        // P(j+1)/P(j) for C(plus, j) C(minus, half−j) / C(total, half)
        let num = (plus - j) as f64 * (half - j) as f64;
        let den = (j + 1) as f64 * (minus - (half - j) + 1) as f64;
        w *= num / den;
        weights.push(w);
        sum += w;
    }
    let target = u * sum;
    let mut acc = 0.0;
    for (off, w) in weights.iter().enumerate() {
        acc += w;
        if target < acc {
            return j_min + off;
        }
    }
    j_max
}

// --- renormalization constant ----------------------------------------------

/// Truncated renormalization sum (d = 2 only):
/// cₙ(K) = Σ_{|k|_∞ ≤ K} χ̂²(n⁻¹k)·χ̂_Q(n⁻¹k) / (−ϑₙ(k) + 1).
/// The returned value extends the sum to 2K; the difference between the
/// K- and 2K-truncations serves as the logged tail estimate and must sit
/// below `tol`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RenormalizationConstant {
    pub n: usize,
    pub truncation: i64,
    pub value: f64,
    pub tail_estimate: f64,
}

pub fn renormalization_constant(n: usize, k_max: i64, tol: f64) -> Result<RenormalizationConstant, CoreError> {
    let k2 = 2 * k_max;
    let nf = n as f64;
    // octant sums (0 ≤ ky ≤ kx ≤ 2K) with lattice multiplicities
    let rows: Vec<(f64, f64)> = (0..=k2)
        .into_par_iter()
        .map(|kx| {
            let mut inner = 0.0; // |k|_inf ≤ K part
            let mut outer = 0.0; // full 2K part
            for ky in 0..=kx {
                let mult = if kx == 0 {
                    1.0
                } else if ky == 0 || ky == kx {
                    4.0
                } else {
                    8.0
                };
                let u = [kx as f64 / nf, ky as f64 / nf];
                let c = chi_hat(2, u);
                let q = chi_hat_q(2, u);
                let theta = theta_n(2, [kx, ky], n);
                let term = mult * c * c * q / (-theta + 1.0);
                outer += term;
                if kx <= k_max {
                    inner += term;
                }
            }
            (inner, outer)
        })
        .collect();
    let s_k: f64 = rows.iter().map(|r| r.0).sum();
    let s_2k: f64 = rows.iter().map(|r| r.1).sum();
    let tail_estimate = (s_2k - s_k).abs();
    if tail_estimate > tol {
        return Err(CoreError::TailAboveTolerance { estimate: tail_estimate, tol });
    }
    log::debug!("c_n(n={n}, K={k_max}) = {s_2k} (tail estimate {tail_estimate:.3e})");
    Ok(RenormalizationConstant { n, truncation: k_max, value: s_2k, tail_estimate })
}

/// Default truncation K = 16n. The K → 2K increment of the signed sum is
/// ≈ 2.6·10⁻⁶ at K = 8n for every n (the summand decays like |k|⁻³-class
/// tails, making the shell increment n-independent at K ∝ n), so 8n cannot
/// meet the 10⁻⁶ tail tolerance; 16n lands near 1.7·10⁻⁷.
pub fn default_truncation(n: usize) -> i64 {
    16 * n as i64
}

// --- enhanced noise ---------------------------------------------------------

/// Per-λ components of the enhanced-noise norm.
#[derive(Debug, Clone, Serialize)]
pub struct LambdaDiagnostics {
    pub lambda: f64,
    /// n‖𝒬ₙ X_{n,λ}‖_{L^∞} with X_{n,λ} = (−𝒜ₙ+λ)⁻¹ξⁿ.
    pub qx_sup_scaled: f64,
    /// λ^{−κ/4}‖Y_{n,λ}‖_{C^{−κ/2}} with Y = ξⁿ ⊙ Πₙ²X_{n,λ} − cₙ.
    pub y_norm_scaled: f64,
    /// Resonant product before subtraction, at the grid origin.
    pub resonant_at_origin: f64,
    /// Y_{n,λ} at the grid origin.
    pub y_at_origin: f64,
}

/// Scale-indexed norms of ξⁿ plus the per-λ diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct EnhancedNoiseReport {
    pub kappa: f64,
    /// sup_{ζ∈[0,1]} n^{−ζ}‖ξⁿ‖_{C^{−(1−ζ)−κ/2}} over a ζ lattice.
    pub zeta_sup: f64,
    /// n^{−1}‖ξⁿ‖_{L^∞}.
    pub sup_scaled: f64,
    /// n^{−1−κ}‖ξⁿ‖_{C^κ_{1/(2κ)}}.
    pub holder_scaled: f64,
    pub per_lambda: Vec<LambdaDiagnostics>,
    /// Full enhanced-noise norm (sum of the parts, sup over λ).
    pub total: f64,
}

pub fn enhanced_noise_report(
    env: &Environment,
    lambdas: &[f64],
    kappa: f64,
) -> Result<EnhancedNoiseReport, CoreError> {
    let grid = env.grid();
    if grid.d() != 2 {
        return Err(CoreError::InvalidEnvironment(
            "enhanced-noise diagnostics require d = 2".into(),
        ));
    }
    let n = grid.scale() as f64;
    let xi = env.xi();
    let inf = f64::INFINITY;

    let mut zeta_sup: f64 = 0.0;
    for zeta in [0.0, 0.25, 0.5, 0.75, 1.0] {
        let alpha = -(1.0 - zeta) - kappa / 2.0;
        zeta_sup = zeta_sup.max(n.powf(-zeta) * besov::holder_norm(xi, alpha, inf));
    }
    let sup_scaled = xi.lp_norm(inf) / n;
    let holder_scaled = n.powf(-1.0 - kappa) * besov::holder_norm(xi, kappa, 1.0 / (2.0 * kappa));

    let q = Multiplier::cutoff_q(2, grid.scale());
    let pi2 = Multiplier::ball_average_pow(2, grid.scale(), 2);
    let mut per_lambda = Vec::new();
    let mut lambda_sup: f64 = 0.0;
    for &lambda in lambdas {
        if lambda < 1.0 {
            return Err(CoreError::BadLambda(lambda));
        }
        let x = spectral::resolvent(xi, lambda)?;
        let qx = q.apply(&x)?;
        let resonant = besov::paraproducts(xi, &pi2.apply(&x)?)?.resonant;
        let y = resonant.map(|v| v - env.c_n());
        let diag = LambdaDiagnostics {
            lambda,
            qx_sup_scaled: n * qx.lp_norm(inf),
            y_norm_scaled: lambda.powf(-kappa / 4.0) * besov::holder_norm(&y, -kappa / 2.0, inf),
            resonant_at_origin: resonant.values()[0],
            y_at_origin: y.values()[0],
        };
        lambda_sup = lambda_sup.max(diag.qx_sup_scaled + diag.y_norm_scaled);
        per_lambda.push(diag);
    }

    Ok(EnhancedNoiseReport {
        kappa,
        zeta_sup,
        sup_scaled,
        holder_scaled,
        per_lambda,
        total: zeta_sup + sup_scaled + holder_scaled + lambda_sup,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn wn(law: ZLaw) -> Regime {
        Regime::WhiteNoise { law, coupling: Coupling::Independent }
    }

    #[test]
    fn rademacher_values_and_moment() {
        let g = TorusGrid::new(1, 32, 4).unwrap();
        let env = Environment::sample(g, &wn(ZLaw::Rademacher), 1, 0.0).unwrap();
        let mut m2 = 0.0;
        for &z in env.z_values() {
            assert!(z == 1.0 || z == -1.0);
            m2 += z * z;
        }
        assert_eq!(m2 / env.z_values().len() as f64, 1.0);
    }

    #[test]
    fn uniform_law_respects_bounds() {
        let g = TorusGrid::new(1, 64, 4).unwrap();
        let env = Environment::sample(g, &wn(ZLaw::UniformSqrt3), 5, 0.0).unwrap();
        let s3 = 3f64.sqrt();
        for &z in env.z_values() {
            assert!(z.abs() < s3 + 1e-12);
        }
        let var: f64 =
            env.z_values().iter().map(|z| z * z).sum::<f64>() / env.z_values().len() as f64;
        assert!((var - 1.0).abs() < 0.35, "sample var {var}");
    }

    #[test]
    fn xi_relation_d1() {
        // d=1: ξⁿ = n^{1/2} sₙ with no cₙ shift
        let g = TorusGrid::new(1, 16, 8).unwrap();
        let env = Environment::sample(g, &wn(ZLaw::Rademacher), 9, 0.0).unwrap();
        let expect = env.s_n().scale(4.0);
        assert!(env.xi().max_abs_diff(&expect) < 1e-14);
        assert!(env.xi_e().max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn xi_relation_d2_includes_shift() {
        let g = TorusGrid::new(2, 8, 4).unwrap();
        let c_n = 1.7;
        let env = Environment::sample(g, &wn(ZLaw::Rademacher), 9, c_n).unwrap();
        // ξⁿ = ξⁿ_e + cₙ pointwise
        let expect = env.xi_e().map(|v| v + c_n);
        assert!(env.xi().max_abs_diff(&expect) < 1e-12);
        // and ξⁿ = n^{d/2} Zₙ piecewise: mean of ξⁿ = mean(Z)·n^{d/2}
        let zmean: f64 = env.z_values().iter().sum::<f64>() / env.z_values().len() as f64;
        assert!((env.xi().mean() - 8.0 * zmean).abs() < 1e-10);
    }

    #[test]
    fn piecewise_constant_on_cubes() {
        let g = TorusGrid::new(2, 4, 4).unwrap();
        let env = Environment::sample(g, &wn(ZLaw::UniformSqrt3), 3, 0.5).unwrap();
        let nax = g.axis_len();
        let m = g.oversampling();
        let vals = env.s_n().values();
        for by in 0..4 {
            for bx in 0..4 {
                let v0 = vals[by * m * nax + bx * m];
                for iy in by * m..(by + 1) * m {
                    for ix in bx * m..(bx + 1) * m {
                        assert_eq!(vals[iy * nax + ix], v0);
                    }
                }
                assert!((env.s_at_box(by * 4 + bx) - v0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn reproducible_and_seed_sensitive() {
        let g = TorusGrid::new(1, 16, 8).unwrap();
        let a = Environment::sample(g, &wn(ZLaw::Rademacher), 7, 0.0).unwrap();
        let b = Environment::sample(g, &wn(ZLaw::Rademacher), 7, 0.0).unwrap();
        assert_eq!(a.hash(), b.hash());
        assert_eq!(a.z_values(), b.z_values());
        let c = Environment::sample(g, &wn(ZLaw::Rademacher), 8, 0.0).unwrap();
        assert_ne!(a.hash(), c.hash());
    }

    #[test]
    fn smooth_regime_truncates() {
        let g = TorusGrid::new(1, 8, 8).unwrap();
        let xi_bar = crate::synth::default_smooth_noise(g);
        let env = Environment::sample(g, &Regime::Smooth { xi_bar: xi_bar.clone() }, 0, 0.0).unwrap();
        let expect = xi_bar.map(|v| (v / 64.0).clamp(-1.0, 1.0));
        assert!(env.s_n().max_abs_diff(&expect) < 1e-14);
        assert!(env.s_n().lp_norm(f64::INFINITY) <= 1.0);
    }

    #[test]
    fn spatial_mean_bookkeeping() {
        // mean of ξⁿ equals n^{d/2}·(mean of box values) − adjusted shift
        let g = TorusGrid::new(1, 32, 4).unwrap();
        let env = Environment::sample(g, &wn(ZLaw::Rademacher), 11, 0.0).unwrap();
        let zmean: f64 = env.z_values().iter().sum::<f64>() / 32.0;
        assert!((env.xi().mean() - (32f64).sqrt() * zmean).abs() < 1e-12);
    }

    #[test]
    fn cascade_marginals_are_rademacher_iid() {
        // exact marginals: check mean/covariance over many seeds
        let g = TorusGrid::new(1, 8, 4).unwrap();
        let regime = Regime::WhiteNoise { law: ZLaw::Rademacher, coupling: Coupling::Hierarchical };
        let trials = 4000;
        let mut means = vec![0.0f64; 8];
        let mut cross = 0.0f64;
        for seed in 0..trials {
            let env = Environment::sample(g, &regime, seed, 0.0).unwrap();
            let z = env.z_values();
            for (i, &v) in z.iter().enumerate() {
                assert!(v == 1.0 || v == -1.0);
                means[i] += v;
            }
            cross += z[0] * z[1] + z[2] * z[5] + z[3] * z[7];
        }
        for m in &means {
            let m = m / trials as f64;
            // 3 standard errors of a Rademacher mean ≈ 3/√trials
            assert!(m.abs() < 3.0 / (trials as f64).sqrt() + 0.02, "mean {m}");
        }
        let c = cross / (3.0 * trials as f64);
        assert!(c.abs() < 0.04, "pair correlation {c}");
    }

    #[test]
    fn cascade_couples_block_sums_across_levels() {
        // dyadic block sums at consecutive levels share the same coarse
        // uniforms: normalized half-torus sums must be highly correlated
        let seed_count = 300;
        let mut corr_num = 0.0;
        let mut var_a = 0.0;
        let mut var_b = 0.0;
        for seed in 0..seed_count {
            let ga = TorusGrid::new(1, 32, 4).unwrap();
            let gb = TorusGrid::new(1, 64, 4).unwrap();
            let regime = Regime::WhiteNoise { law: ZLaw::Rademacher, coupling: Coupling::Hierarchical };
            let a = Environment::sample(ga, &regime, seed, 0.0).unwrap();
            let b = Environment::sample(gb, &regime, seed, 0.0).unwrap();
            let sa: f64 = a.z_values()[..16].iter().sum::<f64>() / (16f64).sqrt();
            let sb: f64 = b.z_values()[..32].iter().sum::<f64>() / (32f64).sqrt();
            corr_num += sa * sb;
            var_a += sa * sa;
            var_b += sb * sb;
        }
        let corr = corr_num / (var_a.sqrt() * var_b.sqrt());
        assert!(corr > 0.9, "half-torus sums decorrelated: {corr}");
    }

    #[test]
    fn renormalization_constant_monotone_and_converged() {
        let tol = 1e-6;
        let c8 = renormalization_constant(8, default_truncation(8), tol).unwrap();
        let c16 = renormalization_constant(16, default_truncation(16), tol).unwrap();
        let c32 = renormalization_constant(32, default_truncation(32), tol).unwrap();
        assert!(c8.value < c16.value && c16.value < c32.value, "not monotone: {} {} {}", c8.value, c16.value, c32.value);

        // doubling K beyond the threshold changes the value by < 1e−6
        let c8_wide = renormalization_constant(8, 2 * default_truncation(8), tol).unwrap();
        assert!((c8.value - c8_wide.value).abs() < 1e-6);
    }

    #[test]
    fn enhanced_noise_zero_env() {
        let g = TorusGrid::new(2, 8, 4).unwrap();
        let c_n = 1.25;
        let env = Environment::zero_noise(g, c_n);
        let report = enhanced_noise_report(&env, &[1.0], 0.25).unwrap();
        assert_eq!(report.sup_scaled, 0.0);
        assert_eq!(report.per_lambda[0].qx_sup_scaled, 0.0);
        assert!((report.per_lambda[0].resonant_at_origin).abs() < 1e-14);
        assert!((report.per_lambda[0].y_at_origin + c_n).abs() < 1e-14);
    }

    #[test]
    fn enhanced_noise_wrong_dimension_rejected() {
        let g = TorusGrid::new(1, 8, 8).unwrap();
        let env = Environment::sample(g, &wn(ZLaw::Rademacher), 2, 0.0).unwrap();
        assert!(enhanced_noise_report(&env, &[1.0], 0.25).is_err());
    }
}
