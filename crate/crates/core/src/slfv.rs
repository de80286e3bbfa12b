//! Exact event-driven simulation of the spatial Λ-Fleming-Viot process
//! with quenched selection.
//!
//! Reproduction events form a space-time Poisson process with total
//! intensity `timefactor = n^{d+2+η}` per unit of macroscopic time
//! (neutral and selective intensities sum to 1 per unit area). Each event
//! picks a ball Bₙ(x), draws parental types from the local double ball
//! average Πₙ²X, and replaces a proportion 𝔲 = n^{−η} of the ball.
//!
//! The engine samples the exact law through a thinning decomposition:
//! an event is "special" (needs parental sampling) with a per-box
//! probability that upper-bounds both the selective intensity and the
//! probability that any parent is of type 𝔞; all other events reduce to
//! the deterministic decay X ← (1−𝔲)X on the ball. In the sparse regime
//! specials are rare, and a lazy d=1 backend aggregates decay events in a
//! difference array of per-cell hit counts, materializing cell values only
//! where a special event or a checkpoint looks. Both backends consume
//! identical random-stream slots, so they produce bit-identical paths.

use crate::env::Environment;
use crate::error::CoreError;
use crate::field::Field;
use crate::grid::TorusGrid;
use crate::rng::{purpose, CounterStream, SeqRng};
use rand::Rng;
use serde::Serialize;

const SLOTS: u64 = 16;
const SLOT_BIN_X: u64 = 0;
const SLOT_BIN_Y: u64 = 1;
const SLOT_BRANCH: u64 = 2;
const SLOT_SUB_X: u64 = 3;
const SLOT_SUB_Y: u64 = 4;
const SLOT_PARENT0: u64 = 5;
const SLOT_PARENT1: u64 = 7;
const SLOT_PAIR: u64 = 9;
const SLOT_WAIT: u64 = 11;

/// Births allowed between refreshes of the thinning bounds.
const REFRESH_BIRTHS: u64 = 64;

/// Scaling regime of the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum RegimeKind {
    /// Rare type 𝔞: X ~ n^{−ϱ}, observables scaled by n^ϱ.
    Sparse { rho: f64 },
    /// Diffusive scaling with smooth selection.
    Diffusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalingRegime {
    pub kind: RegimeKind,
    pub eta: f64,
    d: usize,
    n: usize,
}

impl ScalingRegime {
    pub fn sparse(d: usize, n: usize, rho: f64) -> Result<Self, CoreError> {
        if rho <= 1.5 * d as f64 {
            return Err(CoreError::InvalidRegime(format!(
                "sparse regime needs rho > 3d/2 = {}, got {rho}",
                1.5 * d as f64
            )));
        }
        Ok(ScalingRegime { kind: RegimeKind::Sparse { rho }, eta: rho + 2.0 - d as f64, d, n })
    }

    pub fn diffusive(d: usize, n: usize, eta: f64) -> Result<Self, CoreError> {
        match d {
            1 if eta != 1.0 => {
                return Err(CoreError::InvalidRegime(format!("diffusive d=1 forces eta = 1, got {eta}")))
            }
            2 if eta <= 0.0 => {
                return Err(CoreError::InvalidRegime(format!("diffusive d=2 needs eta > 0, got {eta}")))
            }
            _ => {}
        }
        Ok(ScalingRegime { kind: RegimeKind::Diffusive, eta, d, n })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn scale(&self) -> usize {
        self.n
    }

    pub fn rho(&self) -> Option<f64> {
        match self.kind {
            RegimeKind::Sparse { rho } => Some(rho),
            RegimeKind::Diffusive => None,
        }
    }

    fn pow_n(&self, e: f64) -> f64 {
        let nf = self.n as f64;
        if e.fract() == 0.0 {
            nf.powi(e as i32)
        } else {
            nf.powf(e)
        }
    }

    /// Total event intensity per unit macroscopic time: n^{d+2+η}.
    pub fn time_factor(&self) -> f64 {
        self.pow_n(self.d as f64 + 2.0 + self.eta)
    }

    /// Impact 𝔲 = n^{−η}.
    pub fn impact(&self) -> f64 {
        self.pow_n(-self.eta)
    }

    /// Multiplier turning the environment's raw sₙ into the selection
    /// coefficient fed to the generator: n^{d/2−2} (sparse) or 1
    /// (diffusive, where sₙ is already the truncated n^{−2}ξ̄).
    pub fn selection_multiplier(&self) -> f64 {
        match self.kind {
            RegimeKind::Sparse { .. } => self.pow_n(self.d as f64 / 2.0 - 2.0),
            RegimeKind::Diffusive => 1.0,
        }
    }

    /// Observable scale: n^ϱ for sparse (the measure Yⁿ = n^ϱ Xⁿ), 1 otherwise.
    pub fn observable_scale(&self) -> f64 {
        match self.kind {
            RegimeKind::Sparse { rho } => self.pow_n(rho),
            RegimeKind::Diffusive => 1.0,
        }
    }
}

/// Per-box event intensities.
#[derive(Debug, Clone)]
pub struct EventRates {
    pub total: f64,
    pub neutral: Vec<f64>,
    pub selective: Vec<f64>,
}

/// Total and per-box Poisson intensities (macroscopic time units).
pub fn event_rate(env: &Environment, regime: &ScalingRegime) -> Result<EventRates, CoreError> {
    let sel = effective_selection(env, regime)?;
    let n_boxes = sel.len();
    let box_vol = 1.0 / n_boxes as f64;
    let tf = regime.time_factor();
    let neutral: Vec<f64> = sel.iter().map(|s| (1.0 - s.abs()) * box_vol * tf).collect();
    let selective: Vec<f64> = sel.iter().map(|s| s.abs() * box_vol * tf).collect();
    Ok(EventRates { total: tf, neutral, selective })
}

/// The selection coefficient per box actually used by the jump rates;
/// validates |s| < 1.
fn effective_selection(env: &Environment, regime: &ScalingRegime) -> Result<Vec<f64>, CoreError> {
    let grid = env.grid();
    if grid.d() != regime.d || grid.scale() != regime.n {
        return Err(CoreError::InvalidRegime("regime and environment disagree on (d, n)".into()));
    }
    let mult = regime.selection_multiplier();
    let n_boxes = grid.scale().pow(grid.d() as u32);
    let mut out = Vec::with_capacity(n_boxes);
    for b in 0..n_boxes {
        let s = mult * env.s_at_box(b);
        if s.abs() >= 1.0 {
            return Err(CoreError::InvalidRegime(format!(
                "effective selection |{s}| >= 1 in box {b}; increase n or weaken the environment"
            )));
        }
        out.push(s);
    }
    Ok(out)
}

/// One reproduction event (recorded only in logging mode).
#[derive(Debug, Clone, Serialize)]
pub struct EventRecord {
    pub time: f64,
    pub center: [f64; 2],
    /// 0 neutral, −1 selective with s<0, +1 selective with s>0.
    pub kind: i8,
    pub parents: Vec<[f64; 2]>,
    /// Parental types drawn (true = 𝔞).
    pub parent_types: Vec<bool>,
    pub offspring_a: bool,
    pub touched_cells: usize,
}

/// Checkpointed trajectory of observables.
#[derive(Debug, Clone)]
pub struct SimPath {
    pub checkpoint_times: Vec<f64>,
    /// ⟨X₀, φ_k⟩ at time zero.
    pub initial_observables: Vec<f64>,
    pub initial_snapshot: Option<Field>,
    /// observables[c][k] = ⟨X_{t_c}, φ_k⟩ (the X-scale pairing).
    pub observables: Vec<Vec<f64>>,
    /// Scale factor turning X-observables into measure observables
    /// (n^ϱ in the sparse regime).
    pub observable_scale: f64,
    pub snapshots: Option<Vec<Field>>,
    pub event_counts: Vec<u64>,
    pub total_events: u64,
    pub truncated: bool,
    pub env_hash: u64,
    pub replica: u64,
}

impl SimPath {
    /// ⟨Yₜ, φₖ⟩ = n^ϱ ⟨Xₜ, φₖ⟩ at checkpoint c.
    pub fn measure_observable(&self, c: usize, k: usize) -> f64 {
        self.observable_scale * self.observables[c][k]
    }
}

/// Initial state of the proportion field.
#[derive(Debug, Clone)]
pub enum InitialCondition {
    Constant(f64),
    Field(Field),
    /// X₀ = n^{−ϱ}·1: sparse default of unit measure mass.
    SparseUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackendChoice {
    Auto,
    Direct,
    Lazy,
}

/// Full simulation request.
#[derive(Debug, Clone)]
pub struct SimulationSpec {
    pub regime: ScalingRegime,
    pub initial: InitialCondition,
    pub horizon: f64,
    /// Checkpoint times, strictly increasing, all within (0, horizon].
    pub checkpoints: Vec<f64>,
    pub master_seed: u64,
    pub replica: u64,
    pub snapshots: bool,
    pub event_budget: u64,
    pub backend: BackendChoice,
    pub record_events: bool,
}

impl SimulationSpec {
    pub fn new(regime: ScalingRegime, horizon: f64, n_checkpoints: usize) -> Self {
        let checkpoints = (1..=n_checkpoints)
            .map(|i| horizon * i as f64 / n_checkpoints as f64)
            .collect();
        SimulationSpec {
            regime,
            initial: InitialCondition::SparseUniform,
            horizon,
            checkpoints,
            master_seed: 0,
            replica: 0,
            snapshots: false,
            event_budget: u64::MAX,
            backend: BackendChoice::Auto,
            record_events: false,
        }
    }
}

fn initial_field(grid: TorusGrid, regime: &ScalingRegime, init: &InitialCondition) -> Result<Vec<f64>, CoreError> {
    let vals = match init {
        InitialCondition::Constant(c) => {
            if !(0.0..=1.0).contains(c) {
                return Err(CoreError::InvalidSimulation(format!("X0 = {c} outside [0,1]")));
            }
            vec![*c; grid.len()]
        }
        InitialCondition::Field(f) => {
            if f.grid() != grid {
                return Err(CoreError::GridMismatch);
            }
            if f.min() < 0.0 || f.max() > 1.0 {
                return Err(CoreError::InvalidSimulation("X0 outside [0,1]".into()));
            }
            f.values().to_vec()
        }
        InitialCondition::SparseUniform => {
            let rho = regime
                .rho()
                .ok_or_else(|| CoreError::InvalidSimulation("SparseUniform needs the sparse regime".into()))?;
            vec![(grid.scale() as f64).powf(-rho); grid.len()]
        }
    };
    Ok(vals)
}

// --- per-event random access -------------------------------------------------

#[derive(Clone, Copy)]
struct EventDraws {
    stream: CounterStream,
    base: u64,
}

impl EventDraws {
    #[inline(always)]
    fn word(&self, slot: u64) -> u64 {
        self.stream.word(self.base + slot)
    }

    #[inline(always)]
    fn u01(&self, slot: u64) -> f64 {
        self.stream.u01(self.base + slot)
    }
}

// --- state backends ----------------------------------------------------------

/// Triangle kernel of the double ball average in d=1:
/// (χₙ⋆χₙ)(v) = n(1 − n|v|)₊.
#[inline(always)]
fn tent_weight(n: f64, v: f64) -> f64 {
    let w = 1.0 - n * v.abs();
    if w > 0.0 {
        w
    } else {
        0.0
    }
}

/// Covered cell interval for a d=1 event with half-cell bin index `bin`:
/// the coverage set of the ball depends only on the half-cell containing
/// the center. Returns (first cell, length m). The axis length must be a
/// power of two (mask arithmetic keeps the decay path division-free).
#[inline(always)]
fn coverage_1d(bin: u32, m: u32, nax: u32) -> (u32, u32) {
    let j = bin >> 1;
    let parity = bin & 1;
    let lo = (j + parity).wrapping_sub(m / 2) & (nax - 1);
    (lo, m)
}

struct Direct {
    grid: TorusGrid,
    x: Vec<f64>,
    u: f64,
    /// d=2 disc-overlap kernel table over squared distance.
    kernel2: Vec<f64>,
    kernel2_step: f64,
    reach_cells: i64,
    clamp_warnings: u64,
}

impl Direct {
    fn new(grid: TorusGrid, x: Vec<f64>, u: f64) -> Self {
        let (kernel2, kernel2_step, reach_cells) = if grid.d() == 2 {
            let r = grid.ball_radius();
            let table_len = 4096usize;
            let max_rho2 = (2.0 * r) * (2.0 * r);
            let step = max_rho2 / (table_len - 1) as f64;
            let mut t = Vec::with_capacity(table_len);
            for i in 0..table_len {
                let rho = (i as f64 * step).sqrt();
                // overlap area of two discs of radius r at distance rho
                let a = if rho >= 2.0 * r {
                    0.0
                } else {
                    let q = rho / (2.0 * r);
                    2.0 * r * r * (q.acos() - q * (1.0 - q * q).sqrt())
                };
                t.push(a);
            }
            (t, step, (2.0 * r / grid.spacing()).ceil() as i64)
        } else {
            (Vec::new(), 0.0, 0)
        };
        Direct { grid, x, u, kernel2, kernel2_step, reach_cells, clamp_warnings: 0 }
    }

    #[inline]
    fn pi2_at(&mut self, y: [f64; 2]) -> f64 {
        let nax = self.grid.axis_len() as i64;
        let h = self.grid.spacing();
        let n = self.grid.scale() as f64;
        let mut wsum = 0.0;
        let mut acc = 0.0;
        match self.grid.d() {
            1 => {
                // support (y − 1/n, y + 1/n)
                let m = self.grid.oversampling() as i64;
                let c = (y[0] / h - 0.5).round() as i64;
                for o in -m..=m {
                    let i = (c + o).rem_euclid(nax);
                    let z = (i as f64 + 0.5) * h;
                    let mut v = z - y[0];
                    if v > 0.5 {
                        v -= 1.0;
                    } else if v < -0.5 {
                        v += 1.0;
                    }
                    let w = tent_weight(n, v);
                    wsum += w;
                    acc += w * self.x[i as usize];
                }
            }
            _ => {
                let cy = (y[1] / h - 0.5).round() as i64;
                let cx = (y[0] / h - 0.5).round() as i64;
                for oy in -self.reach_cells..=self.reach_cells {
                    let iy = (cy + oy).rem_euclid(nax);
                    let zy = (iy as f64 + 0.5) * h;
                    let mut vy = zy - y[1];
                    if vy > 0.5 {
                        vy -= 1.0;
                    } else if vy < -0.5 {
                        vy += 1.0;
                    }
                    for ox in -self.reach_cells..=self.reach_cells {
                        let ix = (cx + ox).rem_euclid(nax);
                        let zx = (ix as f64 + 0.5) * h;
                        let mut vx = zx - y[0];
                        if vx > 0.5 {
                            vx -= 1.0;
                        } else if vx < -0.5 {
                            vx += 1.0;
                        }
                        let rho2 = vx * vx + vy * vy;
                        let idx = rho2 / self.kernel2_step;
                        let i0 = idx as usize;
                        if i0 + 1 >= self.kernel2.len() {
                            continue;
                        }
                        let frac = idx - i0 as f64;
                        let w = self.kernel2[i0] * (1.0 - frac) + self.kernel2[i0 + 1] * frac;
                        if w > 0.0 {
                            wsum += w;
                            acc += w * self.x[(iy * nax + ix) as usize];
                        }
                    }
                }
            }
        }
        if wsum <= 0.0 {
            return 0.0;
        }
        let p = acc / wsum;
        // convex combination of values in [0,1]; the guard covers float dust
        if !(0.0..=1.0).contains(&p) {
            if p < -1e-12 || p > 1.0 + 1e-12 {
                self.clamp_warnings += 1;
                if self.clamp_warnings <= 3 {
                    log::warn!("parental probability {p} clamped into [0,1]");
                }
            }
            return p.clamp(0.0, 1.0);
        }
        p
    }

    /// Blend the covered cells with offspring indicator `b`; returns the
    /// number of touched cells.
    #[inline]
    fn blend(&mut self, bins: [u32; 2], sub: [f64; 2], b: bool) -> usize {
        let u = self.u;
        let target = if b { 1.0 } else { 0.0 };
        match self.grid.d() {
            1 => {
                let nax = self.grid.axis_len() as u32;
                let m = self.grid.oversampling() as u32;
                let (lo, len) = coverage_1d(bins[0], m, nax);
                for o in 0..len {
                    let i = ((lo + o) & (nax - 1)) as usize;
                    self.x[i] += u * (target - self.x[i]);
                }
                len as usize
            }
            _ => {
                let nax = self.grid.axis_len() as i64;
                let h = self.grid.spacing();
                let r = self.grid.ball_radius();
                let two_nax = 2 * nax;
                let cx = (bins[0] as f64 + sub[0]) / two_nax as f64;
                let cy = (bins[1] as f64 + sub[1]) / two_nax as f64;
                let ix0 = (cx / h - 0.5).round() as i64;
                let iy0 = (cy / h - 0.5).round() as i64;
                let reach = (r / h).ceil() as i64;
                let mut touched = 0usize;
                for oy in -reach..=reach {
                    let iy = (iy0 + oy).rem_euclid(nax);
                    let zy = (iy as f64 + 0.5) * h;
                    let mut vy = zy - cy;
                    if vy > 0.5 {
                        vy -= 1.0;
                    } else if vy < -0.5 {
                        vy += 1.0;
                    }
                    for ox in -reach..=reach {
                        let ix = (ix0 + ox).rem_euclid(nax);
                        let zx = (ix as f64 + 0.5) * h;
                        let mut vx = zx - cx;
                        if vx > 0.5 {
                            vx -= 1.0;
                        } else if vx < -0.5 {
                            vx += 1.0;
                        }
                        if vx * vx + vy * vy < r * r {
                            let i = (iy * nax + ix) as usize;
                            self.x[i] += u * (target - self.x[i]);
                            touched += 1;
                        }
                    }
                }
                touched
            }
        }
    }

    fn values(&mut self) -> &[f64] {
        &self.x
    }
}

/// Lazy d=1 backend: decay hits accumulate in a difference array; cell
/// values are materialized on demand as X·(1−𝔲)^{hits}.
struct Lazy1 {
    grid: TorusGrid,
    x: Vec<f64>,
    /// per-cell hit count already absorbed into `x`
    applied: Vec<u64>,
    /// difference array of decay-ball coverage counts (length N+1)
    diff: Vec<i64>,
    u: f64,
    log1mu: f64,
    pow_table: Vec<f64>,
    nax_u32: u32,
    m_u32: u32,
    clamp_warnings: u64,
}

impl Lazy1 {
    fn new(grid: TorusGrid, x: Vec<f64>, u: f64) -> Self {
        let nax = grid.axis_len();
        // (1−u)^p for the common pending counts; exp fallback beyond
        let mut pow_table = Vec::with_capacity(4096);
        let mut acc = 1.0f64;
        for _ in 0..4096 {
            pow_table.push(acc);
            acc *= 1.0 - u;
        }
        Lazy1 {
            grid,
            x,
            applied: vec![0; nax],
            diff: vec![0; nax + 1],
            u,
            log1mu: (1.0 - u).ln(),
            pow_table,
            nax_u32: nax as u32,
            m_u32: grid.oversampling() as u32,
            clamp_warnings: 0,
        }
    }

    #[inline(always)]
    fn decay_factor(&self, pending: u64) -> f64 {
        if (pending as usize) < self.pow_table.len() {
            self.pow_table[pending as usize]
        } else {
            (pending as f64 * self.log1mu).exp()
        }
    }

    #[inline(always)]
    fn decay(&mut self, bin: u32) {
        let nax = self.nax_u32;
        let (lo, len) = coverage_1d(bin, self.m_u32, nax);
        let end = lo + len;
        if end <= nax {
            self.diff[lo as usize] += 1;
            self.diff[end as usize] -= 1;
        } else {
            self.diff[lo as usize] += 1;
            self.diff[0] += 1;
            self.diff[(end - nax) as usize] -= 1;
        }
    }

    /// Materialize cells [0, hi] (prefix walk over the difference array).
    fn materialize_to(&mut self, hi: usize) {
        let mut run = 0i64;
        for i in 0..=hi {
            run += self.diff[i];
            let total = run as u64;
            let pending = total - self.applied[i];
            if pending > 0 {
                self.x[i] *= self.decay_factor(pending);
                self.applied[i] = total;
            }
        }
    }

    fn materialize_all(&mut self) {
        let nax = self.grid.axis_len();
        self.materialize_to(nax - 1);
        // fold counters back to zero so they cannot overflow over long runs
        self.diff.fill(0);
        self.applied.fill(0);
    }

    #[inline]
    fn pi2_at(&mut self, y: f64) -> f64 {
        let nax = self.grid.axis_len() as i64;
        let h = self.grid.spacing();
        let n = self.grid.scale() as f64;
        let m = self.grid.oversampling() as i64;
        let c = (y / h - 0.5).round() as i64;
        // materialize the whole window (wrap-aware; prefix walk is O(N))
        let hi = ((c + m).rem_euclid(nax)).max((c - m).rem_euclid(nax)) as usize;
        self.materialize_to(hi.min(nax as usize - 1));
        let mut wsum = 0.0;
        let mut acc = 0.0;
        for o in -m..=m {
            let i = (c + o).rem_euclid(nax);
            let z = (i as f64 + 0.5) * h;
            let mut v = z - y;
            if v > 0.5 {
                v -= 1.0;
            } else if v < -0.5 {
                v += 1.0;
            }
            let w = tent_weight(n, v);
            wsum += w;
            acc += w * self.x[i as usize];
        }
        let p = acc / wsum;
        if !(0.0..=1.0).contains(&p) {
            if p < -1e-12 || p > 1.0 + 1e-12 {
                self.clamp_warnings += 1;
                if self.clamp_warnings <= 3 {
                    log::warn!("parental probability {p} clamped into [0,1]");
                }
            }
            return p.clamp(0.0, 1.0);
        }
        p
    }

    #[inline]
    fn blend(&mut self, bin: u32, b: bool) -> usize {
        let nax = self.grid.axis_len() as u32;
        let m = self.grid.oversampling() as u32;
        let (lo, len) = coverage_1d(bin, m, nax);
        // materialize the touched cells before an exact blend
        let hi_cell = if lo + len <= nax { (lo + len - 1) as usize } else { nax as usize - 1 };
        self.materialize_to(hi_cell);
        let u = self.u;
        let target = if b { 1.0 } else { 0.0 };
        for o in 0..len {
            let i = ((lo + o) & (nax - 1)) as usize;
            self.x[i] += u * (target - self.x[i]);
        }
        len as usize
    }
}

// --- thinning bounds ----------------------------------------------------------

struct Thinning {
    /// u32-scaled special thresholds per box (compared against the low
    /// word of the position draw).
    threshold: Vec<u64>,
    /// Current candidate bound p̄ per box.
    pbar: Vec<f64>,
    /// |effective selection| per box and its sign.
    sel_abs: Vec<f64>,
    sel_sign: Vec<i8>,
    births_since_refresh: u64,
}

impl Thinning {
    fn new(selection: &[f64]) -> Self {
        let n_boxes = selection.len();
        Thinning {
            threshold: vec![0; n_boxes],
            pbar: vec![1.0; n_boxes],
            sel_abs: selection.iter().map(|s| s.abs()).collect(),
            sel_sign: selection.iter().map(|s| if *s < 0.0 { -1 } else { 1 }).collect(),
            births_since_refresh: 0,
        }
    }

    /// Recompute the per-box candidate bounds from materialized values.
    /// The bound for box b covers Πₙ²X at any parental location of an
    /// event centered in b: a window of ±2 boxes, plus the slack for
    /// births allowed until the next refresh.
    fn refresh(&mut self, grid: &TorusGrid, values: &[f64], u: f64) {
        let n = grid.scale();
        let m = grid.oversampling();
        let nax = grid.axis_len();
        let d = grid.d();
        let n_boxes = self.pbar.len();
        let mut box_max = vec![0.0f64; n_boxes];
        match d {
            1 => {
                for b in 0..n {
                    let mut mx: f64 = 0.0;
                    for i in b * m..(b + 1) * m {
                        mx = mx.max(values[i]);
                    }
                    box_max[b] = mx;
                }
            }
            _ => {
                for by in 0..n {
                    for bx in 0..n {
                        let mut mx: f64 = 0.0;
                        for iy in by * m..(by + 1) * m {
                            for ix in bx * m..(bx + 1) * m {
                                mx = mx.max(values[iy * nax + ix]);
                            }
                        }
                        box_max[by * n + bx] = mx;
                    }
                }
            }
        }
        let slack = REFRESH_BIRTHS as f64 * u;
        for b in 0..n_boxes {
            let mut window_max: f64 = 0.0;
            match d {
                1 => {
                    for o in -2i64..=2 {
                        let nb = (b as i64 + o).rem_euclid(n as i64) as usize;
                        window_max = window_max.max(box_max[nb]);
                    }
                }
                _ => {
                    let (by, bx) = (b / n, b % n);
                    for oy in -2i64..=2 {
                        for ox in -2i64..=2 {
                            let ny = (by as i64 + oy).rem_euclid(n as i64) as usize;
                            let nx = (bx as i64 + ox).rem_euclid(n as i64) as usize;
                            window_max = window_max.max(box_max[ny * n + nx]);
                        }
                    }
                }
            }
            let pbar = (window_max + slack).min(1.0);
            let q = self.sel_abs[b];
            let cbar = 1.0 - (1.0 - pbar) * (1.0 - pbar);
            let t = q * cbar + (1.0 - q) * pbar;
            self.pbar[b] = pbar;
            self.threshold[b] = ((t * 4294967296.0).ceil() as u64).min(1 << 32);
        }
        self.births_since_refresh = 0;
    }
}

// --- the engine ----------------------------------------------------------------

struct EngineOut {
    path: SimPath,
    events: Option<Vec<EventRecord>>,
    clamp_warnings: u64,
}

/// Run one replica. Checkpoint event counts are Poisson draws per
/// interval (the total intensity is state-independent, so event times
/// are independent of the state and need not be drawn in bulk mode).
pub fn simulate(
    env: &Environment,
    spec: &SimulationSpec,
    test_functions: &[Field],
) -> Result<(SimPath, Option<Vec<EventRecord>>), CoreError> {
    let grid = env.grid();
    if !grid.axis_len().is_power_of_two() {
        return Err(CoreError::InvalidSimulation(
            "event engine requires a power-of-two axis length".into(),
        ));
    }
    let bad_checkpoints = spec.checkpoints.windows(2).any(|w| w[1] <= w[0])
        || spec.checkpoints.last().map(|&t| t > spec.horizon + 1e-12).unwrap_or(false)
        || spec.checkpoints.first().map(|&t| t <= 0.0).unwrap_or(false);
    if bad_checkpoints {
        return Err(CoreError::InvalidSimulation("checkpoints must be increasing in (0, horizon]".into()));
    }
    for phi in test_functions {
        if phi.grid() != grid {
            return Err(CoreError::GridMismatch);
        }
    }

    let selection = effective_selection(env, &spec.regime)?;
    let x0 = initial_field(grid, &spec.regime, &spec.initial)?;
    let u = spec.regime.impact();

    let use_lazy = match spec.backend {
        BackendChoice::Direct => false,
        BackendChoice::Lazy => {
            if grid.d() != 1 || spec.record_events {
                return Err(CoreError::InvalidSimulation(
                    "lazy backend supports d=1 without event logging".into(),
                ));
            }
            true
        }
        BackendChoice::Auto => grid.d() == 1 && !spec.record_events,
    };

    let out = if use_lazy {
        run_engine(env, spec, test_functions, &selection, Lazy1::new(grid, x0, u), u)?
    } else {
        run_engine(env, spec, test_functions, &selection, Direct::new(grid, x0, u), u)?
    };
    if out.clamp_warnings > 0 {
        log::warn!("{} parental probabilities clamped (discretization guard)", out.clamp_warnings);
    }
    Ok((out.path, out.events))
}

/// Backend abstraction used by the generic event loop.
trait StateBackend {
    fn fast_decay(&mut self, draws: &EventDraws, bins: [u32; 2]);
    fn pi2(&mut self, y: [f64; 2]) -> f64;
    fn apply_blend(&mut self, bins: [u32; 2], sub: [f64; 2], b: bool) -> usize;
    fn materialized(&mut self) -> &[f64];
    fn clamp_warnings(&self) -> u64;
}

impl StateBackend for Direct {
    #[inline(always)]
    fn fast_decay(&mut self, draws: &EventDraws, bins: [u32; 2]) {
        let sub = if self.grid.d() == 2 {
            [draws.u01(SLOT_SUB_X), draws.u01(SLOT_SUB_Y)]
        } else {
            [0.0, 0.0]
        };
        self.blend(bins, sub, false);
    }

    #[inline]
    fn pi2(&mut self, y: [f64; 2]) -> f64 {
        self.pi2_at(y)
    }

    #[inline]
    fn apply_blend(&mut self, bins: [u32; 2], sub: [f64; 2], b: bool) -> usize {
        self.blend(bins, sub, b)
    }

    fn materialized(&mut self) -> &[f64] {
        self.values()
    }

    fn clamp_warnings(&self) -> u64 {
        self.clamp_warnings
    }
}

impl StateBackend for Lazy1 {
    #[inline(always)]
    fn fast_decay(&mut self, _draws: &EventDraws, bins: [u32; 2]) {
        self.decay(bins[0]);
    }

    #[inline]
    fn pi2(&mut self, y: [f64; 2]) -> f64 {
        self.pi2_at(y[0])
    }

    #[inline]
    fn apply_blend(&mut self, bins: [u32; 2], sub: [f64; 2], b: bool) -> usize {
        let _ = sub;
        self.blend(bins[0], b)
    }

    fn materialized(&mut self) -> &[f64] {
        self.materialize_all();
        &self.x
    }

    fn clamp_warnings(&self) -> u64 {
        self.clamp_warnings
    }
}

fn run_engine<B: StateBackend>(
    env: &Environment,
    spec: &SimulationSpec,
    test_functions: &[Field],
    selection: &[f64],
    mut state: B,
    u: f64,
) -> Result<EngineOut, CoreError> {
    let grid = env.grid();
    let d = grid.d();
    let nax = grid.axis_len() as u64;
    let two_nax = 2 * nax;
    let n = grid.scale() as u64;
    let boxes_shift = (two_nax / n).trailing_zeros(); // half-cells per box = 2m

    let stream = CounterStream::from_parts(&[purpose::EVENTS, spec.master_seed, spec.replica]);
    let mut thin = Thinning::new(selection);
    {
        let vals = state.materialized();
        let vals = vals.to_vec();
        thin.refresh(&grid, &vals, u);
    }

    let rate = spec.regime.time_factor();
    let cell = grid.spacing().powi(d as i32);
    let record_observables = |vals: &[f64]| -> Vec<f64> {
        test_functions
            .iter()
            .map(|phi| vals.iter().zip(phi.values()).map(|(a, b)| a * b).sum::<f64>() * cell)
            .collect()
    };

    let mut observables = Vec::with_capacity(spec.checkpoints.len());
    let mut snapshots = if spec.snapshots { Some(Vec::new()) } else { None };
    let mut event_counts = Vec::with_capacity(spec.checkpoints.len());
    let mut events_log = if spec.record_events { Some(Vec::new()) } else { None };

    let (initial_observables, initial_snapshot) = {
        let vals = state.materialized().to_vec();
        let snap = if spec.snapshots { Some(Field::from_values(grid, vals.clone())) } else { None };
        (record_observables(&vals), snap)
    };

    let mut event_idx = 0u64;
    let mut truncated = false;
    let mut t_prev = 0.0f64;
    let mut sim_time = 0.0f64;

    'outer: for (c_idx, &t_c) in spec.checkpoints.iter().enumerate() {
        let dt = t_c - t_prev;
        let interval_events: u64 = if spec.record_events {
            u64::MAX // events draw their own exponential clocks below
        } else {
            let mut rng = SeqRng::from_parts(&[
                purpose::EVENT_COUNTS,
                spec.master_seed,
                spec.replica,
                c_idx as u64,
            ]);
            let lam = rate * dt;
            rng.sample(rand_distr::Poisson::new(lam).map_err(|e| {
                CoreError::InvalidSimulation(format!("poisson intensity: {e}"))
            })?) as u64
        };

        let mut processed_this_interval = 0u64;
        if spec.record_events {
            loop {
                // exponential clock per event, slot-addressed
                let draws = EventDraws { stream, base: event_idx * SLOTS };
                let w = draws.u01(SLOT_WAIT).max(f64::MIN_POSITIVE);
                let dt_ev = -w.ln() / rate;
                if sim_time + dt_ev > t_c {
                    sim_time = t_c;
                    break;
                }
                sim_time += dt_ev;
                if event_idx >= spec.event_budget {
                    truncated = true;
                    log::warn!("event budget {} exhausted at t <= {t_c}", spec.event_budget);
                    break 'outer;
                }
                event_idx += 1;
                processed_this_interval += 1;

                let wx = draws.word(SLOT_BIN_X);
                let bin_x = ((wx >> 32) * two_nax) >> 32;
                let bin_y = if d == 2 {
                    ((draws.word(SLOT_BIN_Y) >> 32) * two_nax) >> 32
                } else {
                    0
                };
                let box_idx = if d == 1 {
                    (bin_x >> boxes_shift) as usize
                } else {
                    ((bin_y >> boxes_shift) * n + (bin_x >> boxes_shift)) as usize
                };
                let handled = handle_special(
                    &mut state,
                    &thin,
                    &draws,
                    grid,
                    [bin_x as u32, bin_y as u32],
                    box_idx,
                    sim_time,
                    events_log.as_mut(),
                );
                if handled {
                    thin.births_since_refresh += 1;
                    if thin.births_since_refresh >= REFRESH_BIRTHS {
                        let vals = state.materialized().to_vec();
                        thin.refresh(&grid, &vals, u);
                    }
                }
            }
        } else {
            // bulk loop: decay events stay on a branch-light fast path
            if event_idx + interval_events >= spec.event_budget {
                truncated = true;
            }
            let todo = interval_events.min(spec.event_budget.saturating_sub(event_idx));
            let key_stream = stream;
            let mut threshold = thin.threshold.clone();
            let mut base = event_idx * SLOTS;
            let mut remaining = todo;
            while remaining > 0 {
                remaining -= 1;
                let wx = key_stream.word(base + SLOT_BIN_X);
                base += SLOTS;
                let bin_x = ((wx >> 32) * two_nax) >> 32;
                let (bin_y, box_idx) = if d == 1 {
                    (0u64, (bin_x >> boxes_shift) as usize)
                } else {
                    let by = ((key_stream.word(base - SLOTS + SLOT_BIN_Y) >> 32) * two_nax) >> 32;
                    (by, ((by >> boxes_shift) * n + (bin_x >> boxes_shift)) as usize)
                };
                if (wx & 0xFFFF_FFFF) >= threshold[box_idx] {
                    let draws = EventDraws { stream: key_stream, base: base - SLOTS };
                    state.fast_decay(&draws, [bin_x as u32, bin_y as u32]);
                    continue;
                }
                let draws = EventDraws { stream: key_stream, base: base - SLOTS };
                let handled = handle_special(
                    &mut state,
                    &thin,
                    &draws,
                    grid,
                    [bin_x as u32, bin_y as u32],
                    box_idx,
                    sim_time,
                    None,
                );
                if handled {
                    thin.births_since_refresh += 1;
                    if thin.births_since_refresh >= REFRESH_BIRTHS {
                        let vals = state.materialized().to_vec();
                        thin.refresh(&grid, &vals, u);
                        // thresholds changed: re-enter with the new table
                        threshold.clone_from(&thin.threshold);
                    }
                }
            }
            event_idx += todo;
            processed_this_interval = todo;
            if truncated {
                log::warn!("event budget {} exhausted at t <= {t_c}", spec.event_budget);
                break 'outer;
            }
        }

        let vals = state.materialized().to_vec();
        debug_assert!(vals.iter().all(|v| (0.0..=1.0 + 1e-12).contains(v)));
        observables.push(record_observables(&vals));
        event_counts.push(processed_this_interval);
        if let Some(s) = snapshots.as_mut() {
            s.push(Field::from_values(grid, vals.clone()));
        }
        thin.refresh(&grid, &vals, u);
        t_prev = t_c;
    }

    // budget truncation: pad remaining checkpoints with the frozen state
    while observables.len() < spec.checkpoints.len() {
        let vals = state.materialized().to_vec();
        observables.push(record_observables(&vals));
        event_counts.push(0);
        if let Some(s) = snapshots.as_mut() {
            s.push(Field::from_values(grid, vals.clone()));
        }
    }

    let clamp_warnings = state.clamp_warnings();
    Ok(EngineOut {
        path: SimPath {
            checkpoint_times: spec.checkpoints.clone(),
            initial_observables,
            initial_snapshot,
            observables,
            observable_scale: spec.regime.observable_scale(),
            snapshots,
            event_counts,
            total_events: event_idx,
            truncated,
            env_hash: env.hash(),
            replica: spec.replica,
        },
        events: events_log,
        clamp_warnings,
    })
}

/// Decode and apply a special (possibly reproducing) event. Returns true
/// when the blend may have raised the local maximum (a type-𝔞 birth).
#[cold]
#[inline(never)]
#[allow(clippy::too_many_arguments)]
fn handle_special<B: StateBackend>(
    state: &mut B,
    thin: &Thinning,
    draws: &EventDraws,
    grid: TorusGrid,
    bins: [u32; 2],
    box_idx: usize,
    sim_time: f64,
    mut log: Option<&mut Vec<EventRecord>>,
) -> bool {
    let d = grid.d();
    let two_nax = 2.0 * grid.axis_len() as f64;
    let r = grid.ball_radius();
    let sub = [draws.u01(SLOT_SUB_X), if d == 2 { draws.u01(SLOT_SUB_Y) } else { 0.0 }];
    let center = [
        (bins[0] as f64 + sub[0]) / two_nax,
        if d == 2 { (bins[1] as f64 + sub[1]) / two_nax } else { 0.0 },
    ];

    let parent_at = |slot: u64| -> [f64; 2] {
        match d {
            1 => {
                let off = (2.0 * draws.u01(slot) - 1.0) * r;
                [(center[0] + off).rem_euclid(1.0), 0.0]
            }
            _ => {
                // uniform in the disc: radius r√u, uniform angle
                let rad = r * draws.u01(slot).sqrt();
                let ang = 2.0 * std::f64::consts::PI * draws.u01(slot + 1);
                [
                    (center[0] + rad * ang.cos()).rem_euclid(1.0),
                    (center[1] + rad * ang.sin()).rem_euclid(1.0),
                ]
            }
        }
    };

    let pbar = thin.pbar[box_idx];
    let q = thin.sel_abs[box_idx];
    let threshold_scale = thin.threshold[box_idx] as f64 / 4294967296.0;
    // branch refinement: v uniform on [0, threshold_scale)
    let v = if log.is_some() {
        // logging mode decodes every event exactly without thinning:
        // v uniform on [0,1) against the plain (selective, neutral) split
        draws.u01(SLOT_BRANCH)
    } else {
        draws.u01(SLOT_BRANCH) * threshold_scale
    };

    let cbar = 1.0 - (1.0 - pbar) * (1.0 - pbar);
    let (is_selective, in_candidate) = if log.is_some() {
        (v < q, true)
    } else if v < q * cbar {
        (true, true)
    } else if v < q * cbar + (1.0 - q) * pbar {
        (false, true)
    } else {
        // ceil slack of the integer threshold: a decay event
        (false, false)
    };

    if !in_candidate {
        state.apply_blend(bins, sub, false);
        return false;
    }

    if is_selective {
        let y0 = parent_at(SLOT_PARENT0);
        let y1 = parent_at(SLOT_PARENT1);
        let p0 = state.pi2(y0);
        let p1 = state.pi2(y1);
        let w = draws.u01(SLOT_PAIR);
        let (t0, t1) = if log.is_some() {
            // plain joint draw
            let waa = p0 * p1;
            let wa_a = p0 * (1.0 - p1);
            let w_aa = (1.0 - p0) * p1;
            if w < waa {
                (true, true)
            } else if w < waa + wa_a {
                (true, false)
            } else if w < waa + wa_a + w_aa {
                (false, true)
            } else {
                (false, false)
            }
        } else {
            // conditioned on the candidacy bound cbar: the (𝔄,𝔄) excess
            // mass (1−p0)(1−p1) − (1−p̄)² stays inside the candidate branch
            let scale = w * cbar;
            let waa = p0 * p1;
            let wa_a = p0 * (1.0 - p1);
            let w_aa = (1.0 - p0) * p1;
            if scale < waa {
                (true, true)
            } else if scale < waa + wa_a {
                (true, false)
            } else if scale < waa + wa_a + w_aa {
                (false, true)
            } else {
                (false, false)
            }
        };
        let positive = thin.sel_sign[box_idx] > 0;
        // sign rule: s<0 keeps 𝔞 only for (𝔞,𝔞); s>0 also for mixed pairs
        let offspring_a = if positive { t0 || t1 } else { t0 && t1 };
        let touched = state.apply_blend(bins, sub, offspring_a);
        if let Some(events) = log.as_deref_mut() {
            events.push(EventRecord {
                time: sim_time,
                center,
                kind: if positive { 1 } else { -1 },
                parents: vec![y0, y1],
                parent_types: vec![t0, t1],
                offspring_a,
                touched_cells: touched,
            });
        }
        offspring_a
    } else {
        let y = parent_at(SLOT_PARENT0);
        let p = state.pi2(y);
        let accept = if log.is_some() {
            draws.u01(SLOT_PAIR) < p
        } else {
            // thinning acceptance: candidate carried probability p̄
            draws.u01(SLOT_PAIR) * pbar < p
        };
        let touched = state.apply_blend(bins, sub, accept);
        if let Some(events) = log.as_deref_mut() {
            events.push(EventRecord {
                time: sim_time,
                center,
                kind: 0,
                parents: vec![y],
                parent_types: vec![accept],
                offspring_a: accept,
                touched_cells: touched,
            });
        }
        accept
    }
}
