//! Numerical realizations of the scaling-limit objects: the dual PDE of
//! the measure-valued limit (∂ₜU = ℋₙU − ½U², solved in the rank-r
//! eigenbasis with an exponential midpoint rule), the Laplace-duality and
//! first-moment Monte Carlo checks, and the Fisher-KPP solvers for the
//! diffusive regime (deterministic in d=2, with space-time white noise in
//! d=1).

use crate::diagnostics::{mean_se, zscore};
use crate::error::CoreError;
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::hamiltonian::{EigenBasis, Hamiltonian};
use crate::rng::{purpose, SeqRng};
use crate::slfv::SimPath;
use crate::spectral::{self, Multiplier};
use num_complex::Complex64;
use serde::Serialize;

/// Trajectory of the dual equation U_t φ.
#[derive(Debug, Clone)]
pub struct DualSolution {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    /// Step-doubling defect per accepted step (local error estimate).
    pub step_defects: Vec<f64>,
    /// Out-of-span L² mass of the nonlinearity per step.
    pub rank_remainders: Vec<f64>,
    /// L² mass of the initial φ outside the eigenspan.
    pub initial_projection_error: f64,
    pub env_hash: Option<u64>,
}

impl DualSolution {
    /// Field closest to time `t` (the trajectory is stored at every step).
    pub fn at_time(&self, t: f64) -> &Field {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < dist {
                dist = (s - t).abs();
                best = i;
            }
        }
        &self.fields[best]
    }

    pub fn total_defect(&self) -> f64 {
        self.step_defects.iter().sum()
    }
}

/// Solve U_t = e^{tℋₙ}φ − ½∫₀ᵗ e^{(t−s)ℋₙ}U_s² ds in the computed
/// eigenbasis, advancing with two half steps of the exponential midpoint
/// rule and reporting the step-doubling defect.
pub fn dual_solve(
    h: &Hamiltonian,
    basis: &EigenBasis,
    phi: &Field,
    t_end: f64,
    dt: f64,
    rank: usize,
    remainder_tol: f64,
) -> Result<DualSolution, CoreError> {
    // nonnegative up to the dust a rank-r projection of a positive
    // function may carry
    if phi.min() < -1e-9 * phi.lp_norm(f64::INFINITY).max(1e-300) {
        return Err(CoreError::InvalidSimulation("dual test function must be nonnegative".into()));
    }
    if rank > basis.pairs.len() {
        return Err(CoreError::EigenNoConvergence(format!(
            "rank {rank} exceeds computed eigenpair count {}",
            basis.pairs.len()
        )));
    }
    let truncated = EigenBasis { pairs: basis.pairs[..rank].to_vec(), applies_used: 0 };
    let values: Vec<f64> = truncated.values();

    let (mut coeffs, initial_projection_error) = truncated.project(phi);
    let mut fields = vec![truncated.reconstruct(&coeffs)];
    let mut times = vec![0.0];
    let mut step_defects = Vec::new();
    let mut rank_remainders = Vec::new();

    // one exponential-midpoint step in eigencoordinates: an exponential
    // Euler predictor to the midpoint, then the midpoint quadrature of the
    // Duhamel integral (second order)
    let step = |c: &[f64], dt: f64| -> (Vec<f64>, f64) {
        let u0 = truncated.reconstruct(c);
        let (n0, rem0) = truncated.project(&u0.map(|v| -0.5 * v * v));
        let star: Vec<f64> = c
            .iter()
            .zip(&values)
            .zip(&n0)
            .map(|((ci, l), ni)| (ci + 0.5 * dt * ni) * (0.5 * dt * l).exp())
            .collect();
        let u_star = truncated.reconstruct(&star);
        let (n_half, rem1) = truncated.project(&u_star.map(|v| -0.5 * v * v));
        let next: Vec<f64> = c
            .iter()
            .zip(&values)
            .zip(&n_half)
            .map(|((ci, l), ni)| ci * (dt * l).exp() + dt * (0.5 * dt * l).exp() * ni)
            .collect();
        (next, rem0.max(rem1))
    };

    let n_steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / n_steps as f64;
    for k in 0..n_steps {
        let (big, _) = step(&coeffs, dt);
        let (mid, rem_a) = step(&coeffs, dt / 2.0);
        let (fine, rem_b) = step(&mid, dt / 2.0);
        let defect: f64 = big
            .iter()
            .zip(&fine)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        step_defects.push(defect);
        let rem = rem_a.max(rem_b);
        rank_remainders.push(rem);
        if rem > remainder_tol {
            return Err(CoreError::RankRemainder { remainder: rem, tol: remainder_tol });
        }
        coeffs = fine;
        let field = truncated.reconstruct(&coeffs);
        if field.lp_norm(f64::INFINITY) > 1e6 {
            return Err(CoreError::BlowUp(field.lp_norm(f64::INFINITY)));
        }
        times.push((k + 1) as f64 * dt);
        fields.push(field);
    }

    Ok(DualSolution {
        times,
        fields,
        step_defects,
        rank_remainders,
        initial_projection_error,
        env_hash: h.env_hash(),
    })
}

/// Build the duality observables: the rank-projected nonnegative test
/// function φ̃ (for the dual solver) and its ball average Πₙφ̃ (the pairing
/// recorded by the particle simulation). Returns (Πₙφ̃, φ̃, projection
/// error of φ).
pub fn duality_test_function(
    basis: &EigenBasis,
    phi: &Field,
    rank: usize,
) -> Result<(Field, Field, f64), CoreError> {
    let truncated = EigenBasis { pairs: basis.pairs[..rank.min(basis.pairs.len())].to_vec(), applies_used: 0 };
    let (coeffs, err) = truncated.project(phi);
    let projected = truncated.reconstruct(&coeffs);
    let grid = phi.grid();
    let paired = Multiplier::ball_average(grid.d(), grid.scale()).apply(&projected)?;
    Ok((paired, projected, err))
}

/// One checkpoint of a Monte Carlo comparison.
#[derive(Debug, Clone, Serialize)]
pub struct CheckpointStat {
    pub t: f64,
    pub empirical: f64,
    pub se: f64,
    pub target: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ComparisonReport {
    pub checkpoints: Vec<CheckpointStat>,
    pub worst_z: f64,
}

impl ComparisonReport {
    fn from_stats(checkpoints: Vec<CheckpointStat>) -> Self {
        let worst_z = checkpoints.iter().map(|c| c.z.abs()).fold(0.0, f64::max);
        ComparisonReport { checkpoints, worst_z }
    }
}

/// Laplace duality: E[e^{−⟨Yₜ, Πₙφ̃⟩}] vs e^{−⟨Y⁰, Uₜφ̃⟩}, where the paths
/// recorded ⟨Xₜ, Πₙφ̃⟩ as observable `phi_idx` and Y⁰ is the measure
/// `scale`·X₀ dx.
pub fn laplace_duality_check(
    paths: &[SimPath],
    phi_idx: usize,
    dual: &DualSolution,
    x0: &Field,
) -> Result<ComparisonReport, CoreError> {
    if paths.is_empty() {
        return Err(CoreError::InsufficientReplicas { need: 1, got: 0 });
    }
    if let Some(expected) = dual.env_hash {
        for p in paths {
            if p.env_hash != expected {
                return Err(CoreError::EnvHashMismatch { expected, got: p.env_hash });
            }
        }
    }
    let scale = paths[0].observable_scale;
    let mut checkpoints = Vec::new();
    for (c, &t) in paths[0].checkpoint_times.iter().enumerate() {
        let samples: Vec<f64> = paths
            .iter()
            .map(|p| (-scale * p.observables[c][phi_idx]).exp())
            .collect();
        let (mean, se) = mean_se(&samples);
        let u_t = dual.at_time(t);
        let target = (-scale * x0.inner(u_t)).exp();
        checkpoints.push(CheckpointStat { t, empirical: mean, se, target, z: zscore(mean, se, target) });
    }
    Ok(ComparisonReport::from_stats(checkpoints))
}

/// First-moment identity E⟨Yₜ, Πₙeₖ⟩ = e^{λₖt}⟨Y⁰, Πₙeₖ⟩ for eigen test
/// functions; observable k of the paths must hold ⟨Xₜ, Πₙeₖ⟩ with the
/// matching basis order, starting at `first_idx`.
pub fn sbm_first_moment_check(
    paths: &[SimPath],
    basis: &EigenBasis,
    first_idx: usize,
    k_count: usize,
) -> Result<Vec<ComparisonReport>, CoreError> {
    if paths.is_empty() {
        return Err(CoreError::InsufficientReplicas { need: 1, got: 0 });
    }
    let scale = paths[0].observable_scale;
    let mut reports = Vec::new();
    for k in 0..k_count {
        let lambda = basis.pairs[k].value;
        let initial = paths[0].initial_observables[first_idx + k];
        let mut checkpoints = Vec::new();
        for (c, &t) in paths[0].checkpoint_times.iter().enumerate() {
            let samples: Vec<f64> = paths
                .iter()
                .map(|p| scale * p.observables[c][first_idx + k])
                .collect();
            let (mean, se) = mean_se(&samples);
            let target = (lambda * t).exp() * scale * initial;
            checkpoints.push(CheckpointStat { t, empirical: mean, se, target, z: zscore(mean, se, target) });
        }
        reports.push(ComparisonReport::from_stats(checkpoints));
    }
    Ok(reports)
}

/// Fisher-KPP trajectory.
#[derive(Debug, Clone)]
pub struct KppRun {
    pub times: Vec<f64>,
    pub fields: Vec<Field>,
    /// Mass clipped back into [0,1] per recorded time (d=1 noise).
    pub clip_mass: Vec<f64>,
    pub stochastic: bool,
    pub dt: f64,
}

impl KppRun {
    pub fn at_time(&self, t: f64) -> &Field {
        let mut best = 0;
        let mut dist = f64::INFINITY;
        for (i, &s) in self.times.iter().enumerate() {
            if (s - t).abs() < dist {
                dist = (s - t).abs();
                best = i;
            }
        }
        &self.fields[best]
    }
}

/// Solve ∂ₜX = νΔX + ξ̄X(1−X) (+ √(X(1−X)) ξ̃ in d=1) by semi-implicit
/// spectral stepping: explicit reaction (and noise), exact implicit
/// diffusion multiplier. ν = ν₀/2 is the continuum diffusivity of the
/// semidiscrete Laplacian, so particle comparisons are consistent. The
/// up-front stability guard uses the spec'd explicit bound with the full
/// ν₀ (the conservative direction).
pub fn fkpp_solve(
    xi_bar: &Field,
    x0: &Field,
    t_end: f64,
    dt: f64,
    record_every: usize,
    seed: Option<u64>,
) -> Result<KppRun, CoreError> {
    let grid = x0.grid();
    if xi_bar.grid() != grid {
        return Err(CoreError::GridMismatch);
    }
    if x0.min() < 0.0 || x0.max() > 1.0 {
        return Err(CoreError::InvalidSimulation("X0 outside [0,1]".into()));
    }
    let d = grid.d();
    let nax = grid.axis_len();
    let nu0 = spectral::nu0(d);
    let stability = nu0 * dt * (std::f64::consts::PI * nax as f64).powi(2);
    if stability > 1.0 {
        return Err(CoreError::UnstableTimeStep { dt, bound: 1.0 / (nu0 * (std::f64::consts::PI * nax as f64).powi(2)) });
    }
    let nu = spectral::effective_diffusivity(d);
    let stochastic = d == 1;

    // implicit diffusion multiplier 1/(1 + dt·ν·4π²|k|²)
    let implicit: Vec<f64> = grid
        .indices()
        .map(|i| {
            let k = grid.frequency_vec(i);
            let k2 = (k[0] * k[0] + k[1] * k[1]) as f64;
            1.0 / (1.0 + dt * nu * 4.0 * std::f64::consts::PI.powi(2) * k2)
        })
        .collect();

    let mut rng = seed.map(|s| SeqRng::from_parts(&[purpose::SPDE_NOISE, s]));
    if stochastic && rng.is_none() {
        return Err(CoreError::InvalidSimulation("d=1 stochastic run needs a seed".into()));
    }

    let n_steps = (t_end / dt).round().max(1.0) as usize;
    let dt = t_end / n_steps as f64;
    let noise_scale = (dt / grid.spacing().powi(d as i32)).sqrt();

    let mut x = x0.values().to_vec();
    let mut times = vec![0.0];
    let mut fields = vec![Field::from_values(grid, x.clone())];
    let mut clip_mass = vec![0.0];
    let xi = xi_bar.values();
    let cell = grid.spacing().powi(d as i32);

    for step in 1..=n_steps {
        let mut clipped = 0.0;
        // explicit reaction and noise
        let mut staged: Vec<f64> = Vec::with_capacity(x.len());
        for (i, &v) in x.iter().enumerate() {
            let mut nv = v + dt * xi[i] * v * (1.0 - v);
            if stochastic {
                let amp = (v * (1.0 - v)).max(0.0).sqrt();
                nv += amp * noise_scale * rng.as_mut().unwrap().next_normal();
            }
            staged.push(nv);
        }
        // implicit diffusion via the exact spectral multiplier
        let staged_field = Field::from_values(grid, staged);
        let spec: Vec<Complex64> = staged_field
            .spectrum()
            .iter()
            .zip(&implicit)
            .map(|(c, &a)| c * a)
            .collect();
        let mut new_vals = crate::fft::inverse_real(&spec, nax, d);
        for v in &mut new_vals {
            if *v < 0.0 {
                clipped += -*v * cell;
                *v = 0.0;
            } else if *v > 1.0 {
                clipped += (*v - 1.0) * cell;
                *v = 1.0;
            }
        }
        x = new_vals;
        if step % record_every == 0 || step == n_steps {
            times.push(step as f64 * dt);
            fields.push(Field::from_values(grid, x.clone()));
            clip_mass.push(clipped);
        }
    }
    if clip_mass.iter().any(|&c| c > 0.0) {
        log::debug!(
            "kpp solver clipped mass (max per recorded step {:.3e})",
            clip_mass.iter().cloned().fold(0.0, f64::max)
        );
    }
    Ok(KppRun { times, fields, clip_mass, stochastic, dt })
}

/// Band-limited resampling between grids: Fourier coefficients are copied
/// where both grids represent the frequency, zero-padded otherwise.
pub fn spectral_resample(f: &Field, target: TorusGrid) -> Field {
    let src = f.grid();
    assert_eq!(src.d(), target.d());
    let s_nax = src.axis_len() as i64;
    let t_nax = target.axis_len() as i64;
    let spec = f.spectrum();
    let mut out = vec![Complex64::default(); target.len()];
    let fold = |k: i64, nax: i64| -> usize { k.rem_euclid(nax) as usize };
    for idx in target.indices() {
        let k = target.frequency_vec(idx);
        let representable = (0..src.d()).all(|ax| k[ax] >= -s_nax / 2 && k[ax] < s_nax / 2);
        if !representable {
            continue;
        }
        let src_idx = match src.d() {
            1 => fold(k[0], s_nax),
            _ => fold(k[0], s_nax) * s_nax as usize + fold(k[1], s_nax),
        };
        let tgt_idx = match target.d() {
            1 => fold(k[0], t_nax),
            _ => fold(k[0], t_nax) * t_nax as usize + fold(k[1], t_nax),
        };
        out[tgt_idx] = spec[src_idx];
    }
    Field::from_spectrum(target, out)
}

/// Replica-mean L² distance between the ball-averaged particle snapshots
/// and a continuum trajectory at each checkpoint (fields resampled onto
/// the continuum grid).
pub fn field_l2_distance(
    paths: &[SimPath],
    reference: &KppRun,
    target: TorusGrid,
) -> Result<Vec<f64>, CoreError> {
    if paths.is_empty() {
        return Err(CoreError::InsufficientReplicas { need: 1, got: 0 });
    }
    let mut out = Vec::new();
    for (c, &t) in paths[0].checkpoint_times.iter().enumerate() {
        let reference_field = reference.at_time(t);
        let mut dists = Vec::with_capacity(paths.len());
        for p in paths {
            let snaps = p.snapshots.as_ref().ok_or(CoreError::MissingSnapshots)?;
            let smoothed = spectral::pi_n(&snaps[c])?;
            let resampled = spectral_resample(&smoothed, target);
            dists.push(resampled.sub(reference_field).l2_norm());
        }
        let (mean, _) = mean_se(&dists);
        out.push(mean);
    }
    Ok(out)
}
