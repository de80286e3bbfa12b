//! Littlewood-Paley blocks, Besov norms, Bony paraproducts and the
//! commutators coupling them to the ball-average calculus.
//!
//! The dyadic partition is built from a C^∞ radial transition ψ (1 below
//! 3/4, 0 above 4/3): ϱ₋₁ = ψ(|k|), ϱⱼ = ψ(2^{−j−1}|k|) − ψ(2^{−j}|k|),
//! and the top block absorbs everything above 2^J, so that the partition
//! telescopes to exactly 1 on every representable frequency. J is chosen
//! with 2^J ≤ N/3 to keep the top annulus inside the Nyquist band.

use crate::error::CoreError;
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::spectral::{self, Multiplier};
use serde::Serialize;

/// C^∞ transition: 1 on [0, 3/4], 0 on [4/3, ∞).
fn psi(t: f64) -> f64 {
    const A: f64 = 0.75;
    const B: f64 = 4.0 / 3.0;
    if t <= A {
        1.0
    } else if t >= B {
        0.0
    } else {
        let g = |u: f64| if u > 0.0 { (-1.0 / u).exp() } else { 0.0 };
        let num = g(B - t);
        num / (num + g(t - A))
    }
}

/// Dyadic partition of unity adapted to a grid.
#[derive(Debug, Clone, Copy)]
pub struct DyadicPartition {
    d: usize,
    jmax: i32,
}

impl DyadicPartition {
    pub fn for_grid(grid: &TorusGrid) -> Self {
        let nax = grid.axis_len();
        let jmax = ((nax as f64 / 3.0).log2().floor() as i32).max(0);
        let nyquist = match grid.d() {
            1 => nax as f64 / 2.0,
            _ => nax as f64 / 2.0 * std::f64::consts::SQRT_2,
        };
        if (1 << (jmax as u32 + 1)) as f64 * (4.0 / 3.0) < nyquist {
            log::warn!(
                "dyadic partition: frequencies above 2^{} folded into the top block (Nyquist {nyquist:.0})",
                jmax
            );
        }
        DyadicPartition { d: grid.d(), jmax }
    }

    pub fn jmax(&self) -> i32 {
        self.jmax
    }

    /// Number of blocks (indices −1..=jmax).
    pub fn block_count(&self) -> usize {
        (self.jmax + 2) as usize
    }

    /// ϱⱼ(k) for j ∈ [−1, jmax].
    pub fn rho(&self, j: i32, k: [i64; 2]) -> f64 {
        let r = match self.d {
            1 => (k[0] as f64).abs(),
            _ => ((k[0] * k[0] + k[1] * k[1]) as f64).sqrt(),
        };
        if j == -1 {
            psi(r)
        } else if j < self.jmax {
            psi(r / (1u64 << (j as u32 + 1)) as f64) - psi(r / (1u64 << j as u32) as f64)
        } else {
            1.0 - psi(r / (1u64 << self.jmax as u32) as f64)
        }
    }

    pub fn block_multiplier(&self, j: i32) -> Multiplier {
        let part = *self;
        Multiplier::from_fn(format!("lp_block(j={j})"), move |k| part.rho(j, k))
    }
}

/// Littlewood-Paley block Δⱼf.
pub fn lp_block(f: &Field, j: i32) -> Result<Field, CoreError> {
    let part = DyadicPartition::for_grid(&f.grid());
    if j < -1 || j > part.jmax() {
        return Err(CoreError::BlockOutOfRange { j, max: part.jmax() });
    }
    part.block_multiplier(j).apply(f)
}

/// All blocks Δ₋₁f, …, Δ_J f in order.
pub fn blocks(f: &Field) -> Vec<Field> {
    let part = DyadicPartition::for_grid(&f.grid());
    (-1..=part.jmax())
        .map(|j| part.block_multiplier(j).apply(f).expect("block symbol finite"))
        .collect()
}

/// Per-block Lᵖ norms with the Besov parameters attached.
#[derive(Debug, Clone, Serialize)]
pub struct BesovProfile {
    pub alpha: f64,
    pub p: f64,
    pub q: f64,
    /// ‖Δⱼf‖_{Lᵖ} for j = −1, 0, …, J.
    pub block_norms: Vec<f64>,
}

impl BesovProfile {
    pub fn of(f: &Field, alpha: f64, p: f64, q: f64) -> Self {
        let block_norms = blocks(f).iter().map(|b| b.lp_norm(p)).collect();
        BesovProfile { alpha, p, q, block_norms }
    }

    /// ℓ^q aggregation of 2^{αj}‖Δⱼf‖ over j ≥ −1.
    pub fn norm(&self) -> f64 {
        let weighted = self
            .block_norms
            .iter()
            .enumerate()
            .map(|(i, nrm)| 2f64.powf(self.alpha * (i as f64 - 1.0)) * nrm);
        if self.q.is_infinite() {
            weighted.fold(0.0, f64::max)
        } else {
            weighted.map(|w| w.powf(self.q)).sum::<f64>().powf(1.0 / self.q)
        }
    }

    /// CSV rows (j, blocknorm).
    pub fn csv_rows(&self) -> Vec<(i32, f64)> {
        self.block_norms
            .iter()
            .enumerate()
            .map(|(i, &v)| (i as i32 - 1, v))
            .collect()
    }
}

/// Besov norm ‖f‖_{B^α_{p,q}}.
pub fn besov_norm(f: &Field, alpha: f64, p: f64, q: f64) -> f64 {
    BesovProfile::of(f, alpha, p, q).norm()
}

/// Hölder-Besov norm ‖f‖_{C^α_p} = ‖f‖_{B^α_{p,∞}}.
pub fn holder_norm(f: &Field, alpha: f64, p: f64) -> f64 {
    besov_norm(f, alpha, p, f64::INFINITY)
}

/// The three Bony components of the pointwise product f·g:
/// low-high (f ⋖ g), resonant (f ⊙ g) and high-low (f ⋗ g).
#[derive(Debug, Clone)]
pub struct BonyDecomposition {
    pub less: Field,
    pub resonant: Field,
    pub greater: Field,
}

impl BonyDecomposition {
    pub fn sum(&self) -> Field {
        self.less.add(&self.resonant).add(&self.greater)
    }
}

/// Block-wise Bony decomposition: f⋖g = Σᵢ S_{i−1}f Δᵢg with
/// S_i = Σ_{j≤i−1} Δⱼ, f⊙g = Σ_{|i−j|≤1} Δⱼf Δᵢg, and f⋗g = g⋖f.
/// The three parts sum to the grid product f·g exactly.
pub fn paraproducts(f: &Field, g: &Field) -> Result<BonyDecomposition, CoreError> {
    if f.grid() != g.grid() {
        return Err(CoreError::GridMismatch);
    }
    let fb = blocks(f);
    let gb = blocks(g);
    let nblocks = fb.len();
    let grid = f.grid();

    // prefix[i] = S_{i-1} relative to block slot i (slot i holds index j = i−1):
    // S_{i-1}f in the paraproduct at block index i means Σ_{j ≤ i−2} Δⱼf.
    let mut less = Field::zero(grid);
    let mut greater = Field::zero(grid);
    let mut resonant = Field::zero(grid);

    let mut prefix_f = Field::zero(grid);
    let mut prefix_g = Field::zero(grid);
    for i in 0..nblocks {
        // at slot i (block index i−1), S_{i−2}·Δ_{i−1}: prefix holds Σ_{slot < i−1}
        if i >= 1 {
            if i >= 2 {
                prefix_f = prefix_f.add(&fb[i - 2]);
                prefix_g = prefix_g.add(&gb[i - 2]);
            }
            less = less.add(&prefix_f.mul(&gb[i]));
            greater = greater.add(&prefix_g.mul(&fb[i]));
        }
        let lo = i.saturating_sub(1);
        let hi = (i + 1).min(nblocks - 1);
        for j in lo..=hi {
            resonant = resonant.add(&fb[j].mul(&gb[i]));
        }
    }
    Ok(BonyDecomposition { less, resonant, greater })
}

/// Averaging commutator C^Π_n(f, g) = Πₙ²(f ⋖ g) − f ⋖ Πₙ²g.
pub fn commutator_pi(f: &Field, g: &Field) -> Result<Field, CoreError> {
    let grid = f.grid();
    grid.check_resolution()?;
    let pi2 = Multiplier::ball_average_pow(grid.d(), grid.scale(), 2);
    let route_a = pi2.apply(&paraproducts(f, g)?.less)?;
    let route_b = paraproducts(f, &pi2.apply(g)?)?.less;
    Ok(route_a.sub(&route_b))
}

/// Resonant commutator C^⊙(f, g, h) = f ⊙ (g ⋖ h) − g·(f ⊙ h).
pub fn commutator_resonant(f: &Field, g: &Field, h: &Field) -> Result<Field, CoreError> {
    let para = paraproducts(g, h)?.less;
    let route_a = paraproducts(f, &para)?.resonant;
    let route_b = g.mul(&paraproducts(f, h)?.resonant);
    Ok(route_a.sub(&route_b))
}

/// Resolvent commutator C_{n,λ}(f, g) = (−𝒜ₙ+λ)⁻¹(f ⋖ g) − f ⋖ (−𝒜ₙ+λ)⁻¹g.
pub fn commutator_resolvent(f: &Field, g: &Field, lambda: f64) -> Result<Field, CoreError> {
    if lambda <= 0.0 {
        return Err(CoreError::BadLambda(lambda));
    }
    let route_a = spectral::resolvent(&paraproducts(f, g)?.less, lambda)?;
    let route_b = paraproducts(f, &spectral::resolvent(g, lambda)?)?.less;
    Ok(route_a.sub(&route_b))
}

/// Sobolev-Slobodeckij norm for ζ ∈ (0,1):
/// ‖f‖_{Lᵖ} + (∬ |f(x)−f(y)|ᵖ / |x−y|^{d+ζp} dx dy)^{1/p},
/// with the double integral evaluated by the grid quadrature and torus
/// distances. Quadratic in the number of grid points; intended for small
/// grids.
pub fn sobolev_slobodeckij_norm(f: &Field, zeta: f64, p: f64) -> f64 {
    assert!(zeta > 0.0 && zeta < 1.0, "zeta must be in (0,1)");
    assert!(p >= 1.0 && p.is_finite());
    let grid = f.grid();
    let d = grid.d() as f64;
    let vals = f.values();
    let cell = grid.spacing().powi(grid.d() as i32);
    let mut acc = 0.0;
    for a in grid.indices() {
        let pa = grid.point(a);
        let va = vals[a];
        for b in (a + 1)..grid.len() {
            let dist = grid.torus_dist(pa, grid.point(b));
            if dist == 0.0 {
                continue;
            }
            let diff = (va - vals[b]).abs();
            if diff == 0.0 {
                continue;
            }
            acc += 2.0 * diff.powf(p) / dist.powf(d + zeta * p);
        }
    }
    f.lp_norm(p) + (acc * cell * cell).powf(1.0 / p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth;

    fn grid1() -> TorusGrid {
        TorusGrid::new(1, 8, 8).unwrap()
    }

    #[test]
    fn partition_sums_to_one_on_grid() {
        for (d, n, m) in [(1usize, 8usize, 8usize), (2, 8, 4)] {
            let g = TorusGrid::new(d, n, m).unwrap();
            let part = DyadicPartition::for_grid(&g);
            for idx in g.indices() {
                let k = g.frequency_vec(idx);
                let total: f64 = (-1..=part.jmax()).map(|j| part.rho(j, k)).sum();
                assert!((total - 1.0).abs() < 1e-12, "k={k:?} total={total}");
            }
        }
    }

    #[test]
    fn blocks_reconstruct_field() {
        let g = grid1();
        let f = synth::random_band_limited(g, 31, 4);
        let sum = blocks(&f)
            .into_iter()
            .fold(Field::zero(g), |acc, b| acc.add(&b));
        assert!(sum.max_abs_diff(&f) < 1e-12);
    }

    #[test]
    fn constant_lands_in_lowest_block() {
        let g = grid1();
        let c = Field::constant(g, 3.0);
        let b = blocks(&c);
        assert!(b[0].max_abs_diff(&c) < 1e-12);
        for blk in &b[1..] {
            assert!(blk.lp_norm(f64::INFINITY) < 1e-12);
        }
        assert!(lp_block(&c, 99).is_err());
    }

    #[test]
    fn pure_mode_scaled_by_rho() {
        let g = TorusGrid::new(1, 16, 8).unwrap();
        let part = DyadicPartition::for_grid(&g);
        let k = 3i64; // 2 < 3 < 4: within block j=2 annulus
        let mode = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * k as f64 * x[0]).cos());
        for j in -1..=part.jmax() {
            let expect = mode.scale(part.rho(j, [k, 0]));
            assert!(lp_block(&mode, j).unwrap().max_abs_diff(&expect) < 1e-12);
        }
    }

    #[test]
    fn block_orthogonality() {
        let g = grid1();
        let f = synth::random_band_limited(g, 31, 5);
        let h = synth::random_band_limited(g, 31, 6);
        let fb = blocks(&f);
        let hb = blocks(&h);
        for i in 1..fb.len() {
            for j in 1..hb.len() {
                if i.abs_diff(j) >= 2 {
                    let ip = fb[i].inner(&hb[j]);
                    assert!(ip.abs() < 1e-12, "blocks {i},{j}: {ip}");
                }
            }
        }
    }

    #[test]
    fn besov_norm_basics() {
        let g = grid1();
        assert_eq!(besov_norm(&Field::zero(g), 0.5, 2.0, f64::INFINITY), 0.0);
        // constant: only the j=−1 block contributes, with weight 2^{−α}
        let c = Field::constant(g, -2.0);
        for alpha in [-1.0, 0.0, 1.5] {
            let got = besov_norm(&c, alpha, f64::INFINITY, f64::INFINITY);
            let expect = 2f64.powf(-alpha) * 2.0;
            assert!((got - expect).abs() < 1e-12);
        }
        // homogeneity
        let f = synth::random_band_limited(g, 20, 8);
        let a = besov_norm(&f.scale(-3.5), 0.7, 4.0, 2.0);
        let b = 3.5 * besov_norm(&f, 0.7, 4.0, 2.0);
        assert!((a - b).abs() < 1e-10 * b.max(1.0));
    }

    #[test]
    fn besov_monotone_in_alpha() {
        let g = grid1();
        let f = synth::random_band_limited(g, 25, 12);
        let hi = besov_norm(&f, 1.0, f64::INFINITY, f64::INFINITY);
        let lo = besov_norm(&f, 0.25, f64::INFINITY, f64::INFINITY);
        assert!(lo <= hi + 1e-12);
    }

    #[test]
    fn besov_embedding_constant_stable() {
        // ‖f‖_{B^{α−d(1/p1−1/p2)}_{p2,q}} ≤ C ‖f‖_{B^α_{p1,q}}, C stable across grids
        let (alpha, p1, p2, q) = (0.8, 2.0, 4.0, f64::INFINITY);
        let shift = 1.0 * (1.0 / p1 - 1.0 / p2);
        let mut worst = Vec::new();
        for n in [8usize, 16, 32] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let mut c: f64 = 0.0;
            for seed in 0..10 {
                let f = synth::random_band_limited(g, (2 * n) as i64, 100 + seed);
                let lhs = besov_norm(&f, alpha - shift, p2, q);
                let rhs = besov_norm(&f, alpha, p1, q);
                c = c.max(lhs / rhs);
            }
            worst.push(c);
        }
        let lo = worst.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = worst.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 2.0, "embedding constant drifts: {worst:?}");
        assert!(hi < 4.0, "embedding constant too large: {worst:?}");
    }

    #[test]
    fn bony_decomposition_is_exact() {
        let g = grid1();
        let f = synth::random_band_limited(g, 20, 31);
        let h = synth::random_band_limited(g, 20, 32);
        let bony = paraproducts(&f, &h).unwrap();
        assert!(bony.sum().max_abs_diff(&f.mul(&h)) < 1e-10);

        let z = paraproducts(&Field::zero(g), &h).unwrap();
        assert!(z.less.lp_norm(f64::INFINITY) < 1e-14);
        assert!(z.resonant.lp_norm(f64::INFINITY) < 1e-14);
        assert!(z.greater.lp_norm(f64::INFINITY) < 1e-14);
    }

    #[test]
    fn paraproduct_bound_stable_across_grids() {
        // ‖f⋖g‖_{C^α_∞} ≤ C ‖f‖_{L^∞} ‖g‖_{C^α_∞}
        let alpha = 0.6;
        let mut consts = Vec::new();
        for n in [8usize, 16, 32] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let mut c: f64 = 0.0;
            for seed in 0..8 {
                let f = synth::random_band_limited(g, (2 * n) as i64, 500 + seed);
                let h = synth::random_band_limited(g, (2 * n) as i64, 600 + seed);
                let lhs = holder_norm(&paraproducts(&f, &h).unwrap().less, alpha, f64::INFINITY);
                let rhs = f.lp_norm(f64::INFINITY) * holder_norm(&h, alpha, f64::INFINITY);
                c = c.max(lhs / rhs);
            }
            consts.push(c);
        }
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = consts.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 2.0, "paraproduct constant drifts: {consts:?}");
    }

    #[test]
    fn resonant_product_regularity() {
        // for α+β>0 the ratio ‖f⊙g‖_{C^{α+β}}/(‖f‖_{C^α}‖g‖_{C^β}) stays bounded
        let (alpha, beta) = (0.6, 0.5);
        let mut consts = Vec::new();
        for n in [8usize, 16, 32] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let mut c: f64 = 0.0;
            for seed in 0..8 {
                let f = synth::random_band_limited(g, (2 * n) as i64, 700 + seed);
                let h = synth::random_band_limited(g, (2 * n) as i64, 800 + seed);
                let lhs = holder_norm(
                    &paraproducts(&f, &h).unwrap().resonant,
                    alpha + beta,
                    f64::INFINITY,
                );
                let rhs = holder_norm(&f, alpha, f64::INFINITY) * holder_norm(&h, beta, f64::INFINITY);
                c = c.max(lhs / rhs);
            }
            consts.push(c);
        }
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = consts.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 2.0, "resonant constant drifts: {consts:?}");
    }

    #[test]
    fn commutator_pi_trivial_cases() {
        let g = grid1();
        let f = synth::random_band_limited(g, 20, 41);
        let zero = commutator_pi(&f, &Field::zero(g)).unwrap();
        assert!(zero.lp_norm(f64::INFINITY) < 1e-14);
        // constant first argument: both routes coincide
        let c = Field::constant(g, 2.0);
        let h = synth::random_band_limited(g, 20, 42);
        assert!(commutator_pi(&c, &h).unwrap().lp_norm(f64::INFINITY) < 1e-10);
    }

    #[test]
    fn commutator_pi_small_scale_decay() {
        // ‖𝒬ₙ C^Π_n(f,g)‖_{C^α_∞} · n^δ bounded across n, δ = 1/2
        let alpha = 0.5;
        let delta = 0.5;
        let mut vals = Vec::new();
        for n in [16usize, 32, 64] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let f = Field::from_fn(g, |x| (2.0 * std::f64::consts::PI * x[0]).sin() + 0.4);
            let h = Field::from_fn(g, |x| {
                (4.0 * std::f64::consts::PI * x[0]).cos() - 0.3 * (2.0 * std::f64::consts::PI * x[0]).sin()
            });
            let comm = commutator_pi(&f, &h).unwrap();
            let q = Multiplier::cutoff_q(1, n).apply(&comm).unwrap();
            vals.push(holder_norm(&q, alpha, f64::INFINITY) * (n as f64).powf(delta));
        }
        let hi = vals.iter().cloned().fold(0.0, f64::max);
        let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min).max(1e-300);
        assert!(
            hi / lo < 10.0 || hi < 1e-8,
            "small-scale commutator fails decay: {vals:?}"
        );
    }

    #[test]
    fn commutator_resonant_cases() {
        let g = grid1();
        let f = synth::random_band_limited(g, 20, 51);
        let h = synth::random_band_limited(g, 20, 52);
        let z = commutator_resonant(&Field::zero(g), &f, &h).unwrap();
        assert!(z.lp_norm(f64::INFINITY) < 1e-14);

        // ψ ≡ 1: definitional identity against the explicit low-block form
        let one = Field::constant(g, 1.0);
        let got = commutator_resonant(&f, &one, &h).unwrap();
        let low = lp_block(&h, -1).unwrap().add(&lp_block(&h, 0).unwrap());
        let expect = paraproducts(&f, &low).unwrap().resonant.scale(-1.0);
        assert!(got.max_abs_diff(&expect) < 1e-10);
    }

    #[test]
    fn commutator_resonant_bound_sweep() {
        let (alpha, beta, gamma) = (0.5, 0.6, 0.4);
        let mut consts = Vec::new();
        for n in [8usize, 16] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let mut c: f64 = 0.0;
            for seed in 0..5 {
                let f = synth::random_band_limited(g, (2 * n) as i64, 900 + seed);
                let h = synth::random_band_limited(g, (2 * n) as i64, 910 + seed);
                let s = synth::random_band_limited(g, (2 * n) as i64, 920 + seed);
                let lhs = holder_norm(
                    &commutator_resonant(&f, &h, &s).unwrap(),
                    alpha + gamma,
                    f64::INFINITY,
                );
                let rhs = holder_norm(&f, alpha, f64::INFINITY)
                    * holder_norm(&h, beta, f64::INFINITY)
                    * holder_norm(&s, gamma, f64::INFINITY);
                c = c.max(lhs / rhs);
            }
            consts.push(c);
        }
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = consts.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 2.5, "resonant commutator constant drifts: {consts:?}");
    }

    #[test]
    fn commutator_resolvent_cases() {
        let g = grid1();
        let f = synth::random_band_limited(g, 20, 61);
        assert!(commutator_resolvent(&f, &Field::zero(g), 2.0)
            .unwrap()
            .lp_norm(f64::INFINITY)
            < 1e-14);
        let c = Field::constant(g, 1.5);
        let h = synth::random_band_limited(g, 20, 62);
        assert!(commutator_resolvent(&c, &h, 2.0).unwrap().lp_norm(f64::INFINITY) < 1e-10);
        assert!(commutator_resolvent(&f, &h, -3.0).is_err());
    }

    #[test]
    fn commutator_resolvent_two_unit_gain() {
        // ‖𝒫ₙ C_{n,λ}(f,g)‖_{C^{α+β+2}_∞} ≤ C‖f‖_{C^α}‖g‖_{C^β} uniformly in n
        let (alpha, beta, lambda) = (0.5, 0.4, 1.0);
        let mut consts = Vec::new();
        for n in [16usize, 32, 64] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let mut c: f64 = 0.0;
            for seed in 0..5 {
                let f = synth::random_band_limited(g, (2 * n) as i64, 1000 + seed);
                let h = synth::random_band_limited(g, (2 * n) as i64, 1100 + seed);
                let comm = commutator_resolvent(&f, &h, lambda).unwrap();
                let p = Multiplier::cutoff_p(1, n).apply(&comm).unwrap();
                let lhs = holder_norm(&p, alpha + beta + 2.0, f64::INFINITY);
                let rhs = holder_norm(&f, alpha, f64::INFINITY) * holder_norm(&h, beta, f64::INFINITY);
                c = c.max(lhs / rhs);
            }
            consts.push(c);
        }
        let lo = consts.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = consts.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 4.0, "resolvent commutator constant drifts: {consts:?}");
    }

    #[test]
    fn sobolev_slobodeckij_basics() {
        let g = grid1();
        let c = Field::constant(g, -3.0);
        assert!((sobolev_slobodeckij_norm(&c, 0.3, 2.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn sobolev_equivalent_to_besov_pp() {
        let g = grid1();
        let (zeta, p) = (0.4, 2.0);
        let mut ratios = Vec::new();
        for seed in 0..6 {
            let f = synth::random_band_limited(g, 10, 1200 + seed);
            let ratio = sobolev_slobodeckij_norm(&f, zeta, p) / besov_norm(&f, zeta, p, p);
            ratios.push(ratio);
        }
        let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = ratios.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 5.0, "norm equivalence band too wide: {ratios:?}");
    }

    #[test]
    fn chi_n_sobolev_scaling() {
        // ‖χₙ‖_{W^ζ_p} · n^{−ζ−d+d/p} bounded across n for ζp < 1
        let (zeta, p) = (0.3, 2.0);
        let mut scaled = Vec::new();
        for n in [8usize, 16, 32] {
            let g = TorusGrid::new(1, n, 8).unwrap();
            let r = g.ball_radius();
            let c0 = [g.coord(0), 0.0];
            let mut vals = vec![0.0; g.len()];
            let mut count = 0usize;
            for idx in g.indices() {
                if g.torus_dist(g.point(idx), c0) < r {
                    vals[idx] = 1.0;
                    count += 1;
                }
            }
            let norm = 1.0 / (count as f64 * g.spacing());
            for v in &mut vals {
                *v *= norm;
            }
            let chi = Field::from_values(g, vals);
            let w = sobolev_slobodeckij_norm(&chi, zeta, p);
            scaled.push(w * (n as f64).powf(-zeta - 1.0 + 1.0 / p));
        }
        let lo = scaled.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = scaled.iter().cloned().fold(0.0, f64::max);
        assert!(hi / lo < 2.0, "χₙ scaling violated: {scaled:?}");
    }
}
