//! The semidiscrete Anderson Hamiltonian ℋₙ = 𝒜ₙ + Πₙ²(ξⁿ − cₙ1_{d=2})Πₙ²,
//! applied matrix-free through FFTs, with a thick-restarted block-Krylov
//! eigensolver, a preconditioned conjugate-gradient resolvent and a
//! rank-r spectral semigroup.

use crate::env::Environment;
use crate::error::CoreError;
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::rng::{purpose, CounterStream};
use crate::spectral::{self, Multiplier};
use nalgebra::{DMatrix, SymmetricEigen};

/// Matrix-free Hamiltonian. The potential is the centered noise
/// ξⁿ − cₙ1_{d=2}, which equals ξⁿ_e for sampled environments.
#[derive(Debug, Clone)]
pub struct Hamiltonian {
    grid: TorusGrid,
    potential: Field,
    theta_table: Vec<f64>,
    chi2_table: Vec<f64>,
    env_hash: Option<u64>,
}

impl Hamiltonian {
    pub fn from_env(env: &Environment) -> Self {
        let mut h = Self::with_potential(env.grid(), env.xi_e().clone());
        h.env_hash = Some(env.hash());
        h
    }

    /// Hamiltonian with an arbitrary centered potential field.
    pub fn with_potential(grid: TorusGrid, potential: Field) -> Self {
        assert_eq!(potential.grid(), grid);
        let theta_table = Multiplier::laplacian(grid.d(), grid.scale())
            .table(&grid)
            .expect("theta symbol finite");
        let chi2_table = Multiplier::ball_average_pow(grid.d(), grid.scale(), 2)
            .table(&grid)
            .expect("chi^2 symbol finite");
        Hamiltonian { grid, potential, theta_table, chi2_table, env_hash: None }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn potential(&self) -> &Field {
        &self.potential
    }

    pub fn env_hash(&self) -> Option<u64> {
        self.env_hash
    }

    /// ℋₙψ = 𝒜ₙψ + Πₙ²((ξⁿ−cₙ)·Πₙ²ψ): one multiplier pass for 𝒜ₙ and two
    /// ball-average passes sandwiching the pointwise multiplication.
    pub fn apply(&self, psi: &Field) -> Result<Field, CoreError> {
        if psi.grid() != self.grid {
            return Err(CoreError::GridMismatch);
        }
        let smoothed = spectral::apply_table(&self.chi2_table, psi);
        let multiplied = smoothed.mul(&self.potential);
        let outer = spectral::apply_table(&self.chi2_table, &multiplied);
        let diffusion = spectral::apply_table(&self.theta_table, psi);
        Ok(diffusion.add(&outer))
    }

    /// Upper bound on the top eigenvalue: ϑₙ ≤ 0 and the smoothed
    /// potential term is bounded by max(potential)₊ in the Rayleigh
    /// quotient (Πₙ² is an L²-contraction).
    pub fn top_eigenvalue_bound(&self) -> f64 {
        self.potential.max().max(0.0)
    }
}

/// One computed eigenpair, sign-normalized so the spatial mean of the
/// vector is nonnegative.
#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub index: usize,
    pub value: f64,
    pub vector: Field,
    pub residual: f64,
    /// Distance to the next Ritz value below (0 for the last one).
    pub gap: f64,
    /// Minimum grid value of the sign-normalized vector; positivity is
    /// expected for the principal eigenfunction only.
    pub min_value: f64,
}

/// Orthonormal set of top eigenpairs, ordered by decreasing eigenvalue.
#[derive(Debug, Clone)]
pub struct EigenBasis {
    pub pairs: Vec<Eigenpair>,
    pub applies_used: usize,
}

impl EigenBasis {
    /// L² coefficients of `phi` on the basis plus the out-of-span L² mass.
    pub fn project(&self, phi: &Field) -> (Vec<f64>, f64) {
        let coeffs: Vec<f64> = self.pairs.iter().map(|p| p.vector.inner(phi)).collect();
        let mut residual = phi.clone();
        for (c, p) in coeffs.iter().zip(&self.pairs) {
            residual = residual.sub(&p.vector.scale(*c));
        }
        (coeffs, residual.l2_norm())
    }

    pub fn reconstruct(&self, coeffs: &[f64]) -> Field {
        let grid = self.pairs[0].vector.grid();
        let mut out = Field::zero(grid);
        for (c, p) in coeffs.iter().zip(&self.pairs) {
            if *c != 0.0 {
                out = out.add(&p.vector.scale(*c));
            }
        }
        out
    }

    pub fn values(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.value).collect()
    }

    /// Group indices whose consecutive gaps fall below `width` into
    /// multiplets (clusters are reported, not resolved).
    pub fn clusters(&self, width: f64) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = Vec::new();
        for (i, p) in self.pairs.iter().enumerate() {
            match out.last_mut() {
                Some(c) if (self.pairs[c[c.len() - 1]].value - p.value).abs() <= width => {
                    c.push(i);
                }
                _ => out.push(vec![i]),
            }
        }
        out
    }
}

/// Top-k eigenpairs by thick-restarted block Krylov iteration with full
/// reorthogonalization. The subspace is expanded with shift-inverted
/// applications (−ℋₙ + λ̄)⁻¹ — the bottom of the spectrum sits at ≈ −2n²,
/// so plain powers of ℋₙ would spend the entire budget amplifying the
/// wrong end — while Ritz values and residuals come from projecting ℋₙ
/// itself. The iteration budget is 200·k basis expansions.
pub fn eigenpairs(h: &Hamiltonian, k: usize, tol: f64) -> Result<EigenBasis, CoreError> {
    if k == 0 || k > 32 {
        return Err(CoreError::EigenNoConvergence(format!("k = {k} outside [1, 32]")));
    }
    let tol = tol.max(1e-14);
    let dim = h.grid().len();
    let k = k.min(dim);
    let budget = 200 * k;
    let block = 2usize.min(dim);
    let max_basis = (4 * k + 24).min(dim);
    let keep = (2 * k + 4).min(max_basis - block);
    let shift = h.top_eigenvalue_bound() + 1.0;
    let inner_tol = (tol * 1e-2).clamp(1e-14, 1e-10);

    let seed_key = h.env_hash.unwrap_or(0) ^ h.potential.values().first().map(|v| v.to_bits()).unwrap_or(0);
    let stream = CounterStream::from_parts(&[purpose::EIGEN_START, seed_key]);
    let mut draw_ctr = 0u64;
    let fresh = |grid: TorusGrid, ctr: &mut u64| -> Field {
        let vals: Vec<f64> = (0..grid.len())
            .map(|i| 2.0 * stream.u01(*ctr + i as u64) - 1.0)
            .collect();
        *ctr += grid.len() as u64;
        Field::from_values(grid, vals)
    };

    let mut basis: Vec<Field> = Vec::new();
    let mut images: Vec<Field> = Vec::new();
    let mut applies = 0usize;

    // orthonormalize `w` against the basis (two Gram-Schmidt passes)
    let orthonormalize = |w: Field, basis: &[Field]| -> Option<Field> {
        let mut w = w;
        for _ in 0..2 {
            for v in basis {
                let c = v.inner(&w);
                if c != 0.0 {
                    w = w.sub(&v.scale(c));
                }
            }
        }
        let nrm = w.l2_norm();
        if nrm < 1e-12 {
            None
        } else {
            Some(w.scale(1.0 / nrm))
        }
    };

    // seed block
    while basis.len() < block {
        let cand = fresh(h.grid(), &mut draw_ctr);
        if let Some(v) = orthonormalize(cand, &basis) {
            images.push(h.apply(&v)?);
            applies += 1;
            basis.push(v);
        }
    }

    let mut last_result: Option<EigenBasis> = None;
    while applies < budget {
        // expand with shift-inverted directions from the newest block
        let start = basis.len().saturating_sub(block);
        let candidates: Vec<Field> = basis[start..]
            .iter()
            .map(|v| pcg_solve(h, v, shift, inner_tol, 600))
            .collect::<Result<_, _>>()?;
        for cand in candidates {
            if basis.len() >= max_basis {
                break;
            }
            let v = match orthonormalize(cand, &basis) {
                Some(v) => v,
                None => match orthonormalize(fresh(h.grid(), &mut draw_ctr), &basis) {
                    Some(v) => v,
                    None => continue,
                },
            };
            images.push(h.apply(&v)?);
            applies += 1;
            basis.push(v);
        }

        // Rayleigh-Ritz on the current basis
        let p = basis.len();
        let mut proj = DMatrix::zeros(p, p);
        for i in 0..p {
            for j in i..p {
                let val = 0.5 * (basis[i].inner(&images[j]) + basis[j].inner(&images[i]));
                proj[(i, j)] = val;
                proj[(j, i)] = val;
            }
        }
        let eig = SymmetricEigen::new(proj);
        let mut order: Vec<usize> = (0..p).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());

        let wanted = k.min(p);
        let mut ritz_vectors = Vec::with_capacity(wanted);
        let mut ritz_images = Vec::with_capacity(wanted);
        let mut pairs = Vec::with_capacity(wanted);
        let mut all_converged = true;
        for (rank, &col) in order.iter().take(wanted).enumerate() {
            let lambda = eig.eigenvalues[col];
            let mut y = Field::zero(h.grid());
            let mut hy = Field::zero(h.grid());
            for i in 0..p {
                let c = eig.eigenvectors[(i, col)];
                if c != 0.0 {
                    y = y.add(&basis[i].scale(c));
                    hy = hy.add(&images[i].scale(c));
                }
            }
            let nrm = y.l2_norm();
            y = y.scale(1.0 / nrm);
            hy = hy.scale(1.0 / nrm);
            let residual = hy.sub(&y.scale(lambda)).l2_norm();
            if residual > tol * (1.0 + lambda.abs()) {
                all_converged = false;
            }
            let gap = if rank + 1 < p {
                lambda - eig.eigenvalues[order[rank + 1]]
            } else {
                0.0
            };
            // sign normalization: nonnegative mean, falling back to the
            // dominant component for mean-free vectors
            let mean = y.mean();
            let sign = if mean.abs() > 1e-10 {
                mean.signum()
            } else {
                let vals = y.values();
                let mut idx = 0;
                for (i, v) in vals.iter().enumerate() {
                    if v.abs() > vals[idx].abs() {
                        idx = i;
                    }
                }
                vals[idx].signum()
            };
            if sign < 0.0 {
                y = y.scale(-1.0);
                hy = hy.scale(-1.0);
            }
            pairs.push(Eigenpair {
                index: rank,
                value: lambda,
                min_value: y.min(),
                vector: y.clone(),
                residual,
                gap,
            });
            ritz_vectors.push(y);
            ritz_images.push(hy);
        }

        let result = EigenBasis { pairs, applies_used: applies };
        if all_converged && result.pairs.len() == k {
            if result.pairs[0].gap.abs() < tol {
                log::warn!(
                    "top eigenvalue gap {} below tolerance; simplicity holds only in the limit",
                    result.pairs[0].gap
                );
            }
            return Ok(result);
        }
        last_result = Some(result);

        // thick restart: keep the leading Ritz vectors as the new basis
        if basis.len() >= max_basis {
            let keep_n = keep.min(order.len());
            let mut new_basis = Vec::with_capacity(keep_n);
            let mut new_images = Vec::with_capacity(keep_n);
            for &col in order.iter().take(keep_n) {
                let mut y = Field::zero(h.grid());
                let mut hy = Field::zero(h.grid());
                for i in 0..basis.len() {
                    let c = eig.eigenvectors[(i, col)];
                    if c != 0.0 {
                        y = y.add(&basis[i].scale(c));
                        hy = hy.add(&images[i].scale(c));
                    }
                }
                let nrm = y.l2_norm();
                if nrm > 1e-12 {
                    new_basis.push(y.scale(1.0 / nrm));
                    new_images.push(hy.scale(1.0 / nrm));
                }
            }
            basis = new_basis;
            images = new_images;
            // inject a fresh direction to keep the Krylov expansion moving
            if basis.len() < max_basis {
                if let Some(v) = orthonormalize(fresh(h.grid(), &mut draw_ctr), &basis) {
                    images.push(h.apply(&v)?);
                    applies += 1;
                    basis.push(v);
                }
            }
        }
    }

    match last_result {
        Some(r) => {
            let worst = r.pairs.iter().map(|p| p.residual).fold(0.0f64, f64::max);
            Err(CoreError::EigenNoConvergence(format!(
                "budget {budget} applies exhausted, worst residual {worst:.3e} (tol {tol:.1e})"
            )))
        }
        None => Err(CoreError::EigenNoConvergence("no Ritz step completed".into())),
    }
}

/// Solve (−ℋₙ + λ)u = φ by conjugate gradients, preconditioned with the
/// exact spectral inverse of (−𝒜ₙ + λ). Requires λ above the top of the
/// spectrum by the configured margin.
pub fn resolvent_solve(
    h: &Hamiltonian,
    phi: &Field,
    lambda: f64,
    tol: f64,
) -> Result<Field, CoreError> {
    let bound = h.top_eigenvalue_bound();
    if lambda < bound + 1.0 {
        // cheap analytic bound first; fall back to a loose eigen estimate
        let est = eigenpairs(h, 1, 1e-6).map(|b| b.pairs[0].value).unwrap_or(bound);
        if lambda < est + 1.0 {
            return Err(CoreError::ShiftInsideSpectrum { lambda, bound: est });
        }
    }
    pcg_solve(h, phi, lambda, tol, 500)
}

/// Preconditioned CG on (−ℋₙ + λ), assuming λ sits above the spectrum.
fn pcg_solve(
    h: &Hamiltonian,
    phi: &Field,
    lambda: f64,
    tol: f64,
    budget: usize,
) -> Result<Field, CoreError> {
    let grid = h.grid();
    let precond = Multiplier::resolvent(grid.d(), grid.scale(), lambda)
        .table(&grid)
        .expect("resolvent symbol finite");
    let apply_a = |u: &Field| -> Result<Field, CoreError> { Ok(u.scale(lambda).sub(&h.apply(u)?)) };

    let bnorm = phi.l2_norm();
    if bnorm == 0.0 {
        return Ok(Field::zero(grid));
    }
    let mut x = Field::zero(grid);
    let mut r = phi.clone();
    let mut z = spectral::apply_table(&precond, &r);
    let mut p = z.clone();
    let mut rz = r.inner(&z);
    for it in 0..budget {
        if r.l2_norm() <= tol * bnorm {
            return Ok(x);
        }
        let ap = apply_a(&p)?;
        let alpha = rz / p.inner(&ap);
        x = x.add(&p.scale(alpha));
        r = r.sub(&ap.scale(alpha));
        if r.l2_norm() <= tol * bnorm {
            return Ok(x);
        }
        z = spectral::apply_table(&precond, &r);
        let rz_new = r.inner(&z);
        let beta = rz_new / rz;
        rz = rz_new;
        p = z.add(&p.scale(beta));
        if it == budget - 1 {
            return Err(CoreError::SolverBudget { residual: r.l2_norm() / bnorm, iters: budget });
        }
    }
    Ok(x)
}

/// Result of the rank-r spectral semigroup e^{tℋₙ}φ.
#[derive(Debug, Clone)]
pub struct ExpmResult {
    pub field: Field,
    /// L² mass of φ outside the computed eigenspan.
    pub projection_remainder: f64,
    /// Bound e^{λ_{r+1}t}·(out-of-span mass) on the dropped contribution,
    /// using the smallest computed eigenvalue as the proxy for λ_{r+1}.
    pub remainder_bound: f64,
}

/// e^{tℋₙ}φ ≈ Σ_{k≤r} e^{λₖt}⟨φ,eₖ⟩eₖ over the computed basis.
pub fn semigroup_expm(
    basis: &EigenBasis,
    phi: &Field,
    t: f64,
    rank: usize,
) -> Result<ExpmResult, CoreError> {
    if t < 0.0 {
        return Err(CoreError::NegativeTime(t));
    }
    if rank > basis.pairs.len() {
        return Err(CoreError::EigenNoConvergence(format!(
            "rank {rank} exceeds computed eigenpair count {}",
            basis.pairs.len()
        )));
    }
    let truncated = EigenBasis { pairs: basis.pairs[..rank].to_vec(), applies_used: 0 };
    let (coeffs, projection_remainder) = truncated.project(phi);
    let evolved: Vec<f64> = coeffs
        .iter()
        .zip(&truncated.pairs)
        .map(|(c, p)| c * (t * p.value).exp())
        .collect();
    let field = truncated.reconstruct(&evolved);
    let lambda_tail = truncated.pairs.last().map(|p| p.value).unwrap_or(0.0);
    Ok(ExpmResult {
        field,
        projection_remainder,
        remainder_bound: (t * lambda_tail).exp() * projection_remainder,
    })
}
