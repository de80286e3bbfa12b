//! Martingale-problem diagnostics for simulated paths, and the small
//! statistics toolbox (standard errors, z-scores, chi-square tests) used
//! by the Monte Carlo suites.
//!
//! For a test function φ the pairing ⟨Xₜ, φ⟩ satisfies
//!   d⟨Xₜ,φ⟩ = [⟨𝒜ₙXₜ,φ⟩ + n²⟨s(Πₙ³Xₜ − (Πₙ³Xₜ)²), Πₙφ⟩] dt + dM(φ),
//! with the predictable quadratic variation rate
//!   n^{2−d−η}[⟨(1+s)Πₙ³X, (Πφ)² − 2Πφ·Π(Xφ)⟩ + ⟨(Π(Xφ))², 1⟩
//!             − ⟨s(Πₙ³X)², (Πφ)² − 2Πφ·Π(Xφ)⟩],
//! where s is the effective selection coefficient seen by the generator.
//! Both integrands are evaluated from recorded snapshots by the trapezoid
//! rule.

use crate::env::Environment;
use crate::error::CoreError;
use crate::field::Field;
use crate::slfv::{ScalingRegime, SimPath};
use crate::spectral::Multiplier;

/// Sample mean and its standard error.
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// z-score of a sample mean against a target value.
pub fn zscore(sample_mean: f64, se: f64, target: f64) -> f64 {
    if se == 0.0 {
        if sample_mean == target {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (sample_mean - target) / se
    }
}

/// Upper regularized incomplete gamma Q(a, x) by series / continued
/// fraction, good to ~1e-12 for the moderate arguments used here.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0 && x >= 0.0);
    if x == 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        // P(a,x) by series
        let mut ap = a;
        let mut sum = 1.0 / a;
        let mut del = sum;
        for _ in 0..500 {
            ap += 1.0;
            del *= x / ap;
            sum += del;
            if del.abs() < sum.abs() * 1e-15 {
                break;
            }
        }
        1.0 - sum * (-x + a * x.ln() - ln_gamma(a)).exp()
    } else {
        // Q(a,x) by continued fraction (modified Lentz)
        let mut b = x + 1.0 - a;
        let mut c = 1.0 / 1e-300;
        let mut d = 1.0 / b;
        let mut h = d;
        for i in 1..500 {
            let an = -(i as f64) * (i as f64 - a);
            b += 2.0;
            d = an * d + b;
            if d.abs() < 1e-300 {
                d = 1e-300;
            }
            c = b + an / c;
            if c.abs() < 1e-300 {
                c = 1e-300;
            }
            d = 1.0 / d;
            let del = d * c;
            h *= del;
            if (del - 1.0).abs() < 1e-15 {
                break;
            }
        }
        (-x + a * x.ln() - ln_gamma(a)).exp() * h
    }
}

/// ln Γ by the Lanczos approximation.
pub fn ln_gamma(x: f64) -> f64 {
    const COEF: [f64; 6] = [
        76.18009172947146,
        -86.50532032941677,
        24.01409824083091,
        -1.231739572450155,
        0.1208650973866179e-2,
        -0.5395239384953e-5,
    ];
    let mut y = x;
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000000000190015;
    for c in COEF {
        y += 1.0;
        ser += c / y;
    }
    -tmp + (2.5066282746310005 * ser / x).ln()
}

/// Chi-square goodness-of-fit p-value of observed counts against
/// Poisson(λ), pooling bins to expected frequency ≥ 5.
pub fn poisson_chi_square_pvalue(counts: &[u64], lambda: f64) -> f64 {
    let n = counts.len() as f64;
    let max_c = counts.iter().copied().max().unwrap_or(0) as usize;
    // Poisson pmf by recurrence
    let mut pmf = Vec::with_capacity(max_c + 2);
    let mut p = (-lambda).exp();
    pmf.push(p);
    for k in 1..=max_c + 1 {
        p *= lambda / k as f64;
        pmf.push(p);
    }
    let tail: f64 = 1.0 - pmf.iter().sum::<f64>();

    // pool consecutive values into bins of expected count ≥ 5
    let mut bins: Vec<(std::ops::RangeInclusive<usize>, f64)> = Vec::new();
    let mut lo = 0usize;
    let mut acc = 0.0;
    for k in 0..=max_c {
        acc += pmf[k];
        if acc * n >= 5.0 {
            bins.push((lo..=k, acc));
            lo = k + 1;
            acc = 0.0;
        }
    }
    // final bin absorbs the remainder and the analytic tail
    let last_expect = acc + tail.max(0.0);
    if let Some(lastbin) = bins.last_mut() {
        if last_expect * n < 5.0 {
            let (range, e) = lastbin.clone();
            *lastbin = (*range.start()..=usize::MAX, e + last_expect);
        } else {
            bins.push((lo..=usize::MAX, last_expect));
        }
    } else {
        bins.push((0..=usize::MAX, 1.0));
    }

    if bins.len() < 2 {
        return 1.0;
    }
    let mut chi2 = 0.0;
    for (range, prob) in &bins {
        let expected = prob * n;
        let observed = counts
            .iter()
            .filter(|&&c| range.contains(&(c as usize)))
            .count() as f64;
        chi2 += (observed - expected) * (observed - expected) / expected;
    }
    let dof = (bins.len() - 1) as f64;
    gamma_q(dof / 2.0, chi2 / 2.0)
}

/// Per-interval martingale statistics across replicas.
#[derive(Debug, Clone, serde::Serialize)]
pub struct IntervalStats {
    pub t_start: f64,
    pub t_end: f64,
    /// Mean of the compensated increment M = Δ⟨X,φ⟩ − ∫drift.
    pub mart_mean: f64,
    pub mart_se: f64,
    pub z_mean: f64,
    /// Empirical second moment of M vs the mean QV integral.
    pub emp_var: f64,
    pub qv_mean: f64,
    pub var_se: f64,
    pub z_var: f64,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MartingaleReport {
    pub intervals: Vec<IntervalStats>,
    pub replicas: usize,
    /// Largest |z| over all interval means and variances.
    pub worst_z: f64,
}

/// Compare replicated paths against the drift and quadratic variation of
/// the generator. Requires ≥ 1000 replicas with snapshots, all sharing the
/// environment and initial state.
pub fn martingale_diagnostics(
    paths: &[SimPath],
    env: &Environment,
    regime: &ScalingRegime,
    phi: &Field,
) -> Result<MartingaleReport, CoreError> {
    martingale_diagnostics_with_min(paths, env, regime, phi, 1000)
}

/// Same as [`martingale_diagnostics`] with an explicit replica floor
/// (used by cheap smoke tests).
pub fn martingale_diagnostics_with_min(
    paths: &[SimPath],
    env: &Environment,
    regime: &ScalingRegime,
    phi: &Field,
    min_replicas: usize,
) -> Result<MartingaleReport, CoreError> {
    if paths.len() < min_replicas {
        return Err(CoreError::InsufficientReplicas { need: min_replicas, got: paths.len() });
    }
    for p in paths {
        if p.env_hash != env.hash() {
            return Err(CoreError::EnvHashMismatch { expected: env.hash(), got: p.env_hash });
        }
        if p.snapshots.is_none() {
            return Err(CoreError::MissingSnapshots);
        }
    }
    let grid = env.grid();
    if phi.grid() != grid {
        return Err(CoreError::GridMismatch);
    }
    let d = grid.d();
    let n = grid.scale();
    let nf = n as f64;

    let mult = regime.selection_multiplier();
    let s_eff = env.s_n().scale(mult);
    let pi = Multiplier::ball_average(d, n);
    let pi3 = Multiplier::ball_average_pow(d, n, 3);
    let a_phi = Multiplier::laplacian(d, n).apply(phi)?;
    let pi_phi = pi.apply(phi)?;
    let qv_scale = nf.powf(2.0 - d as f64 - regime.eta);

    // drift rate at a state
    let drift_rate = |x: &Field| -> Result<f64, CoreError> {
        let p3 = pi3.apply(x)?;
        let nonlinear = s_eff.mul(&p3.sub(&p3.mul(&p3)));
        Ok(x.inner(&a_phi) + nf * nf * nonlinear.inner(&pi_phi))
    };
    // quadratic variation rate at a state
    let qv_rate = |x: &Field| -> Result<f64, CoreError> {
        let p3 = pi3.apply(x)?;
        let pxphi = pi.apply(&x.mul(phi))?;
        let quad = pi_phi.mul(&pi_phi).sub(&pi_phi.mul(&pxphi).scale(2.0));
        let term1 = s_eff.map(|v| 1.0 + v).mul(&p3).inner(&quad);
        let term2 = pxphi.inner(&pxphi);
        let term3 = s_eff.mul(&p3.mul(&p3)).inner(&quad);
        Ok(qv_scale * (term1 + term2 - term3))
    };

    let k = paths[0].checkpoint_times.len();
    let mut intervals = Vec::with_capacity(k);
    let mut worst_z = 0.0f64;
    for i in 0..k {
        let (t0, t1) = if i == 0 {
            (0.0, paths[0].checkpoint_times[0])
        } else {
            (paths[0].checkpoint_times[i - 1], paths[0].checkpoint_times[i])
        };
        let dt = t1 - t0;
        let mut mart = Vec::with_capacity(paths.len());
        let mut qv = Vec::with_capacity(paths.len());
        for p in paths {
            let snaps = p.snapshots.as_ref().unwrap();
            let (x0, obs0): (&Field, f64) = if i == 0 {
                (p.initial_snapshot.as_ref().ok_or(CoreError::MissingSnapshots)?, p.initial_observables[0])
            } else {
                (&snaps[i - 1], p.observables[i - 1][0])
            };
            let x1 = &snaps[i];
            let obs1 = p.observables[i][0];
            let drift = 0.5 * dt * (drift_rate(x0)? + drift_rate(x1)?);
            mart.push(obs1 - obs0 - drift);
            qv.push(0.5 * dt * (qv_rate(x0)? + qv_rate(x1)?));
        }
        let (m_mean, m_se) = mean_se(&mart);
        let z_mean = zscore(m_mean, m_se, 0.0);
        let squares: Vec<f64> = mart.iter().map(|m| m * m).collect();
        let (emp_var, var_se) = mean_se(&squares);
        let (qv_mean, _) = mean_se(&qv);
        let z_var = zscore(emp_var, var_se, qv_mean);
        worst_z = worst_z.max(z_mean.abs()).max(z_var.abs());
        intervals.push(IntervalStats {
            t_start: t0,
            t_end: t1,
            mart_mean: m_mean,
            mart_se: m_se,
            z_mean,
            emp_var,
            qv_mean,
            var_se,
            z_var,
        });
    }
    Ok(MartingaleReport { intervals, replicas: paths.len(), worst_z })
}
