//! Stochastic trajectory sampling and the jump filter: trajectory records,
//! the filtering wave-function, the Belavkin jump update, the classical
//! estimate process, the output distribution over observation records, and
//! the law-of-total-probability check at the filter level.
//!
//! Conditional states are kept in a fixed gauge: after every Kraus update
//! the vector is rescaled so its largest-magnitude amplitude is real and
//! positive. Estimates are phase-invariant; the gauge only pins down
//! bit-reproducibility. Between jumps the conditional state is constant
//! (the dynamics has no drift term in this picture); estimates of evolved
//! observables drift through the observables themselves.
//!
//! Trajectory sampling is embarrassingly parallel across `(seed,
//! stream_id)` pairs; reductions here are sequential in stream order so
//! results are bit-reproducible.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;
use rand_core::RngCore;

use crate::cat::{self, CatModelParams};
use crate::chain::{
    marginal_exact, poisson_tail_bound, poisson_weight, Chain, OutcomeChain, TruncationConfig,
    WEIGHT_FLOOR,
};
use crate::dilation::NormalState;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Ket, C64};

/// Reproducible random stream addressed by `(seed, stream_id)`.
///
/// The generator is ChaCha12 keyed by a 32-byte seed derived from
/// `(seed, stream_id)` with the SplitMix64 finalizer: the mixer state is
/// initialized to `seed`, advanced once, XORed with
/// `stream_id * 0x9E3779B97F4A7C15`, and then iterated to fill the key.
/// Uniform doubles take the top 53 bits of `next_u64`, mapped to `(0, 1]`.
/// This choice is fixed; changing it silently would break the
/// reproducibility contract of every recorded run.
#[derive(Debug, Clone)]
pub struct RngStream {
    seed: u64,
    stream_id: u64,
    rng: rand_chacha::ChaCha12Rng,
}

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(GOLDEN);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut state = seed;
        let first = splitmix64(&mut state);
        state = first ^ stream_id.wrapping_mul(GOLDEN);
        let mut key = [0u8; 32];
        for chunk in key.chunks_exact_mut(8) {
            chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
        }
        RngStream {
            seed,
            stream_id,
            rng: <rand_chacha::ChaCha12Rng as rand_core::SeedableRng>::from_seed(key),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream_id(&self) -> u64 {
        self.stream_id
    }

    pub fn next_u64(&mut self) -> u64 {
        self.rng.next_u64()
    }

    /// Uniform double in `(0, 1]` from the top 53 bits.
    pub fn uniform(&mut self) -> f64 {
        let bits = self.rng.next_u64() >> 11;
        (bits + 1) as f64 * (1.0 / 9007199254740992.0)
    }

    /// Exponential variate with the given rate, by inversion.
    pub fn exponential(&mut self, rate: f64) -> f64 {
        debug_assert!(rate > 0.0);
        -self.uniform().ln() / rate
    }
}

/// Named atomic observables tracked by the filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Observable {
    Identity,
    SigmaX,
    SigmaY,
    SigmaZ,
}

impl Observable {
    pub const ALL: [Observable; 4] =
        [Observable::Identity, Observable::SigmaX, Observable::SigmaY, Observable::SigmaZ];

    pub fn matrix(&self) -> CMatrix {
        match self {
            Observable::Identity => CMatrix::identity(2),
            Observable::SigmaX => cat::sigma_x(),
            Observable::SigmaY => cat::sigma_y(),
            Observable::SigmaZ => cat::sigma_z(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Observable::Identity => "I",
            Observable::SigmaX => "sigma_x",
            Observable::SigmaY => "sigma_y",
            Observable::SigmaZ => "sigma_z",
        }
    }
}

/// Rescales so the largest-magnitude amplitude is real and positive
/// (first index wins ties). Estimates are phase-invariant; this gauge
/// exists for bit-reproducibility only.
fn canonical_phase(v: &Ket) -> Ket {
    let mut best = 0usize;
    let mut best_mag = 0.0f64;
    for (i, z) in v.amp().iter().enumerate() {
        let m = z.norm();
        if m > best_mag {
            best_mag = m;
            best = i;
        }
    }
    if best_mag == 0.0 {
        return v.clone();
    }
    let z = v.amp()[best];
    v.scale(z.conj() / best_mag)
}

/// One sampled observation record: the labelled jump chain, the normalized
/// conditional state after each jump, and the accumulated
/// `log |c_{k1..kn}|^2`.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub outcome_chain: OutcomeChain,
    pub conditional_states: Vec<Ket>,
    pub log_weight: f64,
}

impl TrajectoryRecord {
    /// Conditional state in force at time `t` (initial state before the
    /// first jump).
    pub fn state_at(&self, t: f64, params: &CatModelParams) -> Ket {
        let times = self.outcome_chain.chain().times();
        let mut last = None;
        for (i, &tj) in times.iter().enumerate() {
            if tj <= t {
                last = Some(i);
            } else {
                break;
            }
        }
        match last {
            Some(i) => self.conditional_states[i].clone(),
            None => params.psi0(),
        }
    }

    pub fn death_count(&self) -> usize {
        self.outcome_chain.outcomes().iter().filter(|&&k| k == 1).count()
    }
}

/// Samples one trajectory on `[0, t_max]`: jump times from a rate-`nu`
/// Poisson process, outcome `k` at each jump drawn with probability
/// `||V_k(t) psi||^2` (cumulative inversion in label order 0, 1, 2), state
/// updated by the normalized Kraus action.
pub fn sample_trajectory(
    params: &CatModelParams,
    t_max: f64,
    rng: &mut RngStream,
) -> TrajectoryRecord {
    assert!(t_max > 0.0, "sampling horizon must be positive");
    let mut psi = params.psi0();
    let mut t = 0.0f64;
    let mut times = Vec::new();
    let mut outcomes = Vec::new();
    let mut states = Vec::new();
    let mut log_weight = 0.0f64;
    // The interaction-picture phase sits on V_1 alone; it neither moves
    // the outcome weights nor survives the canonical gauge, so the
    // time-zero triple is exact here.
    let triple = cat::kraus_triple(params.p).expect("validated p");
    loop {
        t += rng.exponential(params.nu);
        if t >= t_max {
            break;
        }
        let w = triple.outcome_weights(&psi);
        let u = rng.uniform();
        let mut k = 2usize;
        let mut cum = 0.0;
        for (i, &wi) in w.iter().enumerate() {
            cum += wi;
            if u <= cum {
                k = i;
                break;
            }
        }
        if w[k] <= WEIGHT_FLOOR {
            // Rounding pushed the draw past the total mass; take the
            // heaviest branch.
            k = (0..3).max_by(|&a, &b| w[a].partial_cmp(&w[b]).expect("finite")).expect("3 branches");
        }
        let updated = triple.op(k).apply(&psi);
        let norm = updated.norm();
        psi = canonical_phase(&updated.scale(C64::new(1.0 / norm, 0.0)));
        log_weight += w[k].ln();
        times.push(t);
        outcomes.push(k as u8);
        states.push(psi.clone());
    }
    let chain = Chain::new(times, t_max).expect("sampled times are ordered");
    let outcome_chain = OutcomeChain::new(chain, outcomes).expect("one label per time");
    TrajectoryRecord { outcome_chain, conditional_states: states, log_weight }
}

/// Monte Carlo estimate of the marginal at time `t` with per-entry
/// standard errors (real and imaginary parts separately).
#[derive(Debug, Clone)]
pub struct McMarginal {
    pub mean: CMatrix,
    pub se_re: [[f64; 2]; 2],
    pub se_im: [[f64; 2]; 2],
    pub n_traj: usize,
}

impl McMarginal {
    pub fn state(&self) -> Result<NormalState> {
        NormalState::mixed(self.mean.clone())
    }
}

/// Unravelling average: mean of `psi psi^dag` at time `t` over `n_traj`
/// trajectories on streams `0..n_traj` of the given seed.
pub fn mc_marginal(n_traj: usize, t: f64, params: &CatModelParams, seed: u64) -> McMarginal {
    assert!(n_traj >= 1);
    let mut sum_re = [[0.0f64; 2]; 2];
    let mut sum_im = [[0.0f64; 2]; 2];
    let mut sumsq_re = [[0.0f64; 2]; 2];
    let mut sumsq_im = [[0.0f64; 2]; 2];
    let horizon = if t > 0.0 { t } else { f64::MIN_POSITIVE };
    for stream in 0..n_traj {
        let mut rng = RngStream::new(seed, stream as u64);
        let record = sample_trajectory(params, horizon, &mut rng);
        let psi = record.state_at(t, params);
        let rho = psi.outer(&psi);
        for i in 0..2 {
            for j in 0..2 {
                let z = rho[(i, j)];
                sum_re[i][j] += z.re;
                sum_im[i][j] += z.im;
                sumsq_re[i][j] += z.re * z.re;
                sumsq_im[i][j] += z.im * z.im;
            }
        }
    }
    let n = n_traj as f64;
    let mut mean = CMatrix::zeros(2, 2);
    let mut se_re = [[0.0f64; 2]; 2];
    let mut se_im = [[0.0f64; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            let m_re = sum_re[i][j] / n;
            let m_im = sum_im[i][j] / n;
            mean[(i, j)] = C64::new(m_re, m_im);
            if n_traj > 1 {
                let var_re = ((sumsq_re[i][j] - n * m_re * m_re) / (n - 1.0)).max(0.0);
                let var_im = ((sumsq_im[i][j] - n * m_im * m_im) / (n - 1.0)).max(0.0);
                se_re[i][j] = (var_re / n).sqrt();
                se_im[i][j] = (var_im / n).sqrt();
            }
        }
    }
    McMarginal { mean, se_re, se_im, n_traj }
}

/// Conditional expectation of `x` at time `t` given a full observation
/// record, straight from the Kraus products:
/// `<psi| V^dag .. X(t) .. V |psi> / <psi| V^dag .. V |psi>` with `X(t)`
/// the Heisenberg-evolved observable.
pub fn conditional_expectation_direct(
    x: &CMatrix,
    oc: &OutcomeChain,
    t: f64,
    params: &CatModelParams,
) -> Result<f64> {
    let phi = oc.apply_kraus(params);
    let w = phi.norm().powi(2);
    if w <= WEIGHT_FLOOR {
        return Err(Error::ImpossibleObservation);
    }
    let xt = cat::heisenberg_evolve(x, t, params);
    Ok(phi.expect(&xt).re / w)
}

/// Normalized atomic branch vector of the filtering wave-function on one
/// observation record: `c^-1 V_{kn} .. V_{k1} |psi>` in the canonical
/// gauge. Errors on records with vanishing normalisation factor.
pub fn filtering_wavefunction(oc: &OutcomeChain, params: &CatModelParams) -> Result<Ket> {
    let phi = oc.apply_kraus(params);
    let norm = phi.norm();
    if norm * norm <= WEIGHT_FLOOR {
        return Err(Error::ImpossibleObservation);
    }
    if oc.is_empty() {
        return Ok(params.psi0());
    }
    Ok(canonical_phase(&phi.scale(C64::new(1.0 / norm, 0.0))))
}

/// The running filter: current time, conditional state, counting-process
/// tallies per outcome, and the classical estimates of the tracked
/// evolved observables.
#[derive(Debug, Clone)]
pub struct FilterState {
    pub t: f64,
    pub psi_cond: Ket,
    pub counts: [u64; 3],
    pub estimates: BTreeMap<Observable, f64>,
}

impl FilterState {
    pub fn new(params: &CatModelParams) -> Self {
        let psi = params.psi0();
        let mut estimates = BTreeMap::new();
        for obs in Observable::ALL {
            estimates.insert(obs, psi.expect(&obs.matrix()).re);
        }
        FilterState { t: 0.0, psi_cond: psi, counts: [0; 3], estimates }
    }

    pub fn estimate(&self, obs: Observable) -> f64 {
        self.estimates[&obs]
    }
}

/// Expands a Hermitian 2x2 operator in the evolved frame
/// `{I, sx(t), sy(t), sz(t)}` and contracts with the tracked estimates.
/// This keeps the jump update purely classical in the estimate vector.
fn estimate_of(
    fs: &FilterState,
    op: &CMatrix,
    evolved: &[CMatrix; 4],
) -> f64 {
    let mut acc = 0.0;
    for (obs, basis) in Observable::ALL.iter().zip(evolved) {
        // Orthonormal frame under Tr(A^dag B)/2.
        let coeff = basis.frobenius_inner(op).re / 2.0;
        acc += coeff * fs.estimates[obs];
    }
    acc
}

fn evolved_frame(t: f64, params: &CatModelParams) -> [CMatrix; 4] {
    [
        CMatrix::identity(2),
        cat::heisenberg_evolve(&cat::sigma_x(), t, params),
        cat::heisenberg_evolve(&cat::sigma_y(), t, params),
        cat::heisenberg_evolve(&cat::sigma_z(), t, params),
    ]
}

/// Jump coefficient `kappa_k(X) = e(V_k^dag X V_k)/e(V_k^dag V_k) - e(X)`
/// evaluated classically from the tracked estimates at time `fs.t`.
pub fn kappa_coefficient(
    fs: &FilterState,
    k: usize,
    params: &CatModelParams,
    x: Observable,
) -> Result<f64> {
    let triple = cat::interaction_picture_kraus(fs.t, params);
    let evolved = evolved_frame(fs.t, params);
    let v = triple.op(k);
    let xt = &evolved[Observable::ALL.iter().position(|o| *o == x).expect("tracked")];
    let numerator = v.dagger().mul(xt).mul(v);
    let denominator = v.dagger().mul(v);
    let den = estimate_of(fs, &denominator, &evolved);
    if den <= WEIGHT_FLOOR {
        return Err(Error::ImpossibleObservation);
    }
    let num = estimate_of(fs, &numerator, &evolved);
    Ok(num / den - fs.estimates[&x])
}

/// Internal drift step size: `min(1e-3 / nu, gap / 10)`.
fn drift_substep(dt: f64, params: &CatModelParams) -> f64 {
    (1e-3 / params.nu).min(dt / 10.0)
}

/// Advances the estimate vector by `dt` of free drift
/// (`d e(X(t)) = e(i[H, X(t)]) dt`, integrated with RK4 on the closed
/// linear system for the tracked frame) and, when an outcome arrives at
/// the end of the interval, applies the jump coefficients `kappa_k`.
///
/// Touches only `t` and `estimates`; the conditional state is advanced by
/// [`belavkin_step`]. All tracked observables move together because the
/// drift couples them.
pub fn filter_estimate_step(
    fs: &FilterState,
    dt: f64,
    outcome: Option<usize>,
    params: &CatModelParams,
) -> Result<FilterState> {
    assert!(dt >= 0.0, "cannot step the filter backwards");
    let eps = params.eps();
    let mut m = [
        fs.estimates[&Observable::Identity],
        fs.estimates[&Observable::SigmaX],
        fs.estimates[&Observable::SigmaY],
        fs.estimates[&Observable::SigmaZ],
    ];
    if dt > 0.0 && eps != 0.0 {
        // d m_x = eps m_y dt, d m_y = -eps m_x dt; identity and sz are flat.
        let f = |v: [f64; 4]| [0.0, eps * v[2], -eps * v[1], 0.0];
        let h = drift_substep(dt, params);
        let n_sub = (dt / h).ceil() as usize;
        let h = dt / n_sub as f64;
        for _ in 0..n_sub {
            let k1 = f(m);
            let k2 = f(add4(m, scale4(k1, h / 2.0)));
            let k3 = f(add4(m, scale4(k2, h / 2.0)));
            let k4 = f(add4(m, scale4(k3, h)));
            for i in 0..4 {
                m[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
    }
    let mut next = fs.clone();
    next.t = fs.t + dt;
    for (obs, val) in Observable::ALL.iter().zip(m) {
        next.estimates.insert(*obs, val);
    }
    if let Some(k) = outcome {
        let triple = cat::interaction_picture_kraus(next.t, params);
        let evolved = evolved_frame(next.t, params);
        let v = triple.op(k);
        let denominator = v.dagger().mul(v);
        let den = estimate_of(&next, &denominator, &evolved);
        if den <= WEIGHT_FLOOR {
            return Err(Error::ImpossibleObservation);
        }
        let mut jumped = BTreeMap::new();
        for (obs, xt) in Observable::ALL.iter().zip(&evolved) {
            let numerator = v.dagger().mul(xt).mul(v);
            let num = estimate_of(&next, &numerator, &evolved);
            jumped.insert(*obs, num / den);
        }
        next.estimates = jumped;
    }
    Ok(next)
}

fn add4(a: [f64; 4], b: [f64; 4]) -> [f64; 4] {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2], a[3] + b[3]]
}

fn scale4(a: [f64; 4], s: f64) -> [f64; 4] {
    [a[0] * s, a[1] * s, a[2] * s, a[3] * s]
}

/// Jump update of the conditional state at an observed outcome:
/// `psi -> V_k(t) psi / ||V_k(t) psi||` in the canonical gauge, with the
/// counting tallies advanced. Estimates are left untouched (see
/// [`filter_estimate_step`]). Errors on forbidden outcomes, which also
/// enforces that the death count never exceeds one.
pub fn belavkin_step(
    fs: &FilterState,
    k: usize,
    t_jump: f64,
    params: &CatModelParams,
) -> Result<FilterState> {
    assert!(k < cat::N_OUTCOMES, "outcome label out of range");
    assert!(t_jump >= fs.t, "jumps must move forward in time");
    let triple = cat::interaction_picture_kraus(t_jump, params);
    let updated = triple.op(k).apply(&fs.psi_cond);
    let norm = updated.norm();
    if norm * norm <= WEIGHT_FLOOR {
        return Err(Error::ImpossibleObservation);
    }
    let mut next = fs.clone();
    next.t = t_jump;
    next.psi_cond = canonical_phase(&updated.scale(C64::new(1.0 / norm, 0.0)));
    next.counts[k] += 1;
    Ok(next)
}

/// Drifts the estimates to the jump time, applies the estimate jump, and
/// updates the conditional state; `outcome = None` is a pure drift to
/// `fs.t + dt`.
pub fn advance_filter(
    fs: &FilterState,
    dt: f64,
    outcome: Option<usize>,
    params: &CatModelParams,
) -> Result<FilterState> {
    let stepped = filter_estimate_step(fs, dt, outcome, params)?;
    match outcome {
        Some(k) => belavkin_step(&stepped, k, stepped.t, params),
        None => Ok(stepped),
    }
}

/// Runs the filter along a sampled record, returning the filter state
/// after every jump and the final state drifted to `t_max`.
pub fn integrate_filter_along(
    record: &TrajectoryRecord,
    t_max: f64,
    params: &CatModelParams,
) -> Result<Vec<FilterState>> {
    let mut out = vec![FilterState::new(params)];
    let mut cur = out[0].clone();
    let times = record.outcome_chain.chain().times().to_vec();
    let outcomes = record.outcome_chain.outcomes().to_vec();
    for (tj, k) in times.iter().zip(outcomes) {
        cur = advance_filter(&cur, tj - cur.t, Some(k as usize), params)?;
        out.push(cur.clone());
    }
    if t_max > cur.t {
        cur = advance_filter(&cur, t_max - cur.t, None, params)?;
        out.push(cur);
    }
    Ok(out)
}

/// Depth cap for the exhaustive part of the class enumeration: every
/// label sequence up to this length appears in the output, including
/// impossible ones (probability zero).
const FULL_ENUM_DEPTH: usize = 4;
/// Hard cap on the pruned enumeration depth (the possible-sequence count
/// grows like 2^n).
const ENUM_DEPTH_CAP: usize = 22;

type Amp2 = [C64; 2];

fn apply2(op: &CMatrix, v: Amp2) -> Amp2 {
    [op[(0, 0)] * v[0] + op[(0, 1)] * v[1], op[(1, 0)] * v[0] + op[(1, 1)] * v[1]]
}

fn weight2(v: Amp2) -> f64 {
    v[0].norm_sqr() + v[1].norm_sqr()
}

struct ClassEntry {
    labels: Vec<u8>,
    weight: f64,
}

/// Depth-first enumeration of label sequences with their Kraus weights;
/// zero-weight branches are listed up to `FULL_ENUM_DEPTH` and pruned
/// beyond. Deterministic order: by length, then lexicographic.
fn enumerate_classes(params: &CatModelParams, n_max: usize) -> Vec<ClassEntry> {
    let triple = cat::kraus_triple(params.p).expect("validated p");
    let psi0: Amp2 = [params.psi0().amp()[0], params.psi0().amp()[1]];
    let mut out = Vec::new();
    let mut frontier: Vec<(Vec<u8>, Amp2)> = vec![(Vec::new(), psi0)];
    out.push(ClassEntry { labels: Vec::new(), weight: 1.0 });
    for depth in 1..=n_max {
        let mut next = Vec::new();
        for (labels, phi) in &frontier {
            for k in 0u8..3 {
                let ext = apply2(triple.op(k as usize), *phi);
                let w = weight2(ext);
                let mut lab = labels.clone();
                lab.push(k);
                if w > WEIGHT_FLOOR {
                    out.push(ClassEntry { labels: lab.clone(), weight: w });
                    next.push((lab, ext));
                } else if depth <= FULL_ENUM_DEPTH {
                    out.push(ClassEntry { labels: lab, weight: 0.0 });
                }
            }
        }
        frontier = next;
        if frontier.is_empty() && depth > FULL_ENUM_DEPTH {
            break;
        }
    }
    out
}

/// Output distribution over observation records up to time `t`: each label
/// sequence with its probability `|c|^2 (nu t)^n / n! exp(-nu t)`.
/// Sequences up to length 4 are all listed (impossible ones with
/// probability zero); longer sequences appear only when possible. The
/// listed probabilities total 1 within the certified Poisson tail.
pub fn girsanov_output_distribution(
    t: f64,
    params: &CatModelParams,
    trunc: &TruncationConfig,
) -> Result<Vec<(Vec<u8>, f64)>> {
    assert!(t >= 0.0);
    let lambda = params.nu * t;
    let n_max = trunc.n_max.min(ENUM_DEPTH_CAP);
    let tail = poisson_tail_bound(n_max, lambda);
    if tail > 1e-9 {
        return Err(Error::TruncationInsufficient { tail_bound: tail, requested: 1e-9 });
    }
    let classes = enumerate_classes(params, n_max);
    Ok(classes
        .into_iter()
        .map(|c| {
            let prob = c.weight * poisson_weight(c.labels.len(), lambda);
            (c.labels, prob)
        })
        .collect())
}

/// Empirical label-sequence frequencies over `n_traj` sampled trajectories
/// (streams `0..n_traj` of the seed).
pub fn empirical_class_counts(
    n_traj: usize,
    t: f64,
    params: &CatModelParams,
    seed: u64,
) -> BTreeMap<Vec<u8>, u64> {
    let mut counts: BTreeMap<Vec<u8>, u64> = BTreeMap::new();
    for stream in 0..n_traj {
        let mut rng = RngStream::new(seed, stream as u64);
        let record = sample_trajectory(params, t, &mut rng);
        *counts.entry(record.outcome_chain.outcomes().to_vec()).or_insert(0) += 1;
    }
    counts
}

/// Filter-level law of total probability:
/// `defect = | sum_records prob * e(X(t)|record) - Tr[rho(t) X(t)] |`,
/// the left side from the class enumeration and the right side from the
/// exact truncated marginal.
pub fn ltp_filter_check(
    x: &CMatrix,
    t: f64,
    params: &CatModelParams,
    trunc: &TruncationConfig,
) -> Result<f64> {
    let lambda = params.nu * t;
    let n_max = trunc.n_max.min(ENUM_DEPTH_CAP);
    let tail = poisson_tail_bound(n_max, lambda);
    if tail > 1e-10 {
        return Err(Error::TruncationInsufficient { tail_bound: tail, requested: 1e-10 });
    }
    let xt = cat::heisenberg_evolve(x, t, params);
    let expect2 = |v: Amp2| -> f64 {
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..2 {
            for j in 0..2 {
                acc += v[i].conj() * xt[(i, j)] * v[j];
            }
        }
        acc.re
    };
    // prob * <branch|X|branch>/w = Poisson * <branch|X|branch> summed
    // over possible records of each length; the per-length Poisson weight
    // multiplies the whole layer.
    let triple = cat::kraus_triple(params.p).expect("validated p");
    let psi0: Amp2 = [params.psi0().amp()[0], params.psi0().amp()[1]];
    let mut lhs = poisson_weight(0, lambda) * expect2(psi0);
    let mut frontier: Vec<Amp2> = vec![psi0];
    let mut layer_weight = poisson_weight(0, lambda);
    for depth in 1..=n_max {
        layer_weight *= lambda / depth as f64;
        let mut next = Vec::with_capacity(frontier.len() * 2);
        for phi in &frontier {
            for k in 0..3usize {
                let ext = apply2(triple.op(k), *phi);
                if weight2(ext) > WEIGHT_FLOOR {
                    lhs += layer_weight * expect2(ext);
                    next.push(ext);
                }
            }
        }
        frontier = next;
        if frontier.is_empty() {
            break;
        }
    }
    let rho = marginal_exact(t, params, trunc)?.density();
    let rhs = rho.mul(&xt).trace().re;
    Ok((lhs - rhs).abs())
}
