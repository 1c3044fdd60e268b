//! Exact (deterministic) computation on the truncated chain space:
//! marginal densities, trajectory and class probabilities, counting
//! moments, the sum-integral identity, and the Lindblad integrator.
//!
//! Everything here exploits the interaction-picture fact that the squared
//! Kraus-product amplitudes `|c_{k1..kn}|^2` do not depend on the jump
//! times, so simplex integrals collapse to Poisson weights and label-
//! sequence sums. Summation order is fixed; results are bit-reproducible.

use alloc::vec;
use alloc::vec::Vec;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::cat::{self, CatModelParams};
use crate::dilation::NormalState;
use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Ket, C64, ZERO};

/// Strictly increasing jump times within a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    times: Vec<f64>,
}

impl Chain {
    pub fn new(times: Vec<f64>, horizon: f64) -> Result<Self> {
        for w in times.windows(2) {
            if !(w[0] < w[1]) {
                return Err(Error::ParamOutOfRange { name: "chain times", value: w[1] });
            }
        }
        if let (Some(first), Some(last)) = (times.first(), times.last()) {
            if *first < 0.0 || *last > horizon {
                return Err(Error::ParamOutOfRange { name: "chain horizon", value: *last });
            }
        }
        Ok(Chain { times })
    }

    pub fn empty() -> Self {
        Chain { times: Vec::new() }
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// A chain with one outcome label per time.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeChain {
    chain: Chain,
    outcomes: Vec<u8>,
}

impl OutcomeChain {
    pub fn new(chain: Chain, outcomes: Vec<u8>) -> Result<Self> {
        if chain.len() != outcomes.len() {
            return Err(Error::DimensionMismatch { expected: chain.len(), got: outcomes.len() });
        }
        for &k in &outcomes {
            if k as usize >= cat::N_OUTCOMES {
                return Err(Error::ParamOutOfRange { name: "outcome label", value: k as f64 });
            }
        }
        Ok(OutcomeChain { chain, outcomes })
    }

    pub fn empty() -> Self {
        OutcomeChain { chain: Chain::empty(), outcomes: Vec::new() }
    }

    pub fn chain(&self) -> &Chain {
        &self.chain
    }

    pub fn outcomes(&self) -> &[u8] {
        &self.outcomes
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    /// Unnormalized Kraus-product vector `V_{kn}(t_n) .. V_{k1}(t_1) |psi>`.
    pub fn apply_kraus(&self, params: &CatModelParams) -> Ket {
        let mut v = params.psi0();
        for (&t, &k) in self.chain.times().iter().zip(&self.outcomes) {
            let triple = cat::interaction_picture_kraus(t, params);
            v = triple.op(k as usize).apply(&v);
        }
        v
    }

    /// Squared amplitude `|c|^2` of this record.
    pub fn weight(&self, params: &CatModelParams) -> f64 {
        let v = self.apply_kraus(params);
        let n = v.norm();
        n * n
    }

    /// A record is possible when its weight survives the Kraus products;
    /// this absorbs both the "death cannot repeat" rule and `V_1 |g> = 0`.
    pub fn possible(&self, params: &CatModelParams) -> bool {
        self.weight(params) > WEIGHT_FLOOR
    }
}

/// Weights at or below this floor mark impossible records.
pub const WEIGHT_FLOOR: f64 = 1e-14;

/// Truncation order for chain sums, carrying its certified Poisson tail.
#[derive(Debug, Clone, Copy)]
pub struct TruncationConfig {
    pub n_max: usize,
    pub tail_bound: f64,
}

const N_MAX_CAP: usize = 400;

/// Certified upper bound on `P(N > n)` for `N ~ Poisson(lambda)`:
/// `exp(-lambda) (e lambda / m)^m` at `m = n + 1` for `m > lambda`, else 1.
pub fn poisson_tail_bound(n: usize, lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 0.0;
    }
    let m = (n + 1) as f64;
    if m <= lambda {
        return 1.0;
    }
    (-lambda + m + m * (lambda / m).ln()).exp()
}

impl TruncationConfig {
    /// Smallest order whose certified tail meets the requested accuracy.
    /// Errors when no order up to the cap can certify it.
    pub fn for_accuracy(lambda: f64, accuracy: f64) -> Result<Self> {
        if !(accuracy > 0.0) {
            return Err(Error::ParamOutOfRange { name: "accuracy", value: accuracy });
        }
        for n in 0..=N_MAX_CAP {
            let tail = poisson_tail_bound(n, lambda);
            if tail <= accuracy {
                return Ok(TruncationConfig { n_max: n, tail_bound: tail });
            }
        }
        Err(Error::TruncationInsufficient {
            tail_bound: poisson_tail_bound(N_MAX_CAP, lambda),
            requested: accuracy,
        })
    }

    /// Fixed order with the tail computed for the given intensity.
    pub fn with_order(n_max: usize, lambda: f64) -> Self {
        TruncationConfig { n_max, tail_bound: poisson_tail_bound(n_max, lambda) }
    }
}

/// Poisson weight `(nu t)^n / n! exp(-nu t)`, by the stable recurrence.
/// Partial sums over `n` increase monotonically to 1.
pub fn poisson_weight(n: usize, nu_t: f64) -> f64 {
    assert!(nu_t >= 0.0, "poisson_weight needs a non-negative intensity");
    let mut w = (-nu_t).exp();
    for m in 1..=n {
        w *= nu_t / m as f64;
    }
    w
}

/// Exact marginal by the truncated chain sum
/// `sum_n phi^n(rho0) Poisson(n, nu t)`. The trace deviates from 1 by at
/// most the certified tail; errors if that tail exceeds the structural
/// density tolerance.
pub fn marginal_exact(t: f64, params: &CatModelParams, trunc: &TruncationConfig) -> Result<NormalState> {
    let lambda = params.nu * t;
    let tail = poisson_tail_bound(trunc.n_max, lambda);
    if tail > 1e-10 {
        return Err(Error::TruncationInsufficient { tail_bound: tail, requested: 1e-10 });
    }
    let psi0 = params.psi0();
    let mut term = psi0.outer(&psi0);
    let mut acc = term.scale_re(poisson_weight(0, lambda));
    let mut w = poisson_weight(0, lambda);
    for n in 1..=trunc.n_max {
        term = cat::channel_phi_raw(&term, params.p);
        w *= lambda / n as f64;
        acc = acc.add(&term.scale_re(w));
    }
    NormalState::mixed(acc)
}

/// Closed-form marginal
/// `rho(t) = |psi><psi| exp(-p nu t) + |g><g| (1 - exp(-p nu t))`.
pub fn marginal_analytic(t: f64, params: &CatModelParams) -> NormalState {
    assert!(t >= 0.0);
    let decay = (-params.p * params.nu * t).exp();
    let psi0 = params.psi0();
    let gg = cat::ket_g().outer(&cat::ket_g());
    let rho = psi0.outer(&psi0).scale_re(decay).add(&gg.scale_re(1.0 - decay));
    NormalState::mixed(rho).expect("convex mixture of densities")
}

/// Dynamical picture for the Lindblad right-hand side.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Picture {
    /// Jump dynamics only; the free Hamiltonian is absorbed into
    /// observables. The model's closed forms live here.
    Interaction,
    /// Adds `i[rho, H]` with the diagonal atomic Hamiltonian.
    Schroedinger,
}

/// Generator `nu (phi(rho) - rho)` (plus `i[rho, H]` in the Schroedinger
/// picture). Traceless for any input.
pub fn lindblad_rhs(rho: &CMatrix, params: &CatModelParams, picture: Picture) -> CMatrix {
    let mut out = cat::channel_phi_raw(rho, params.p).sub(rho).scale_re(params.nu);
    if picture == Picture::Schroedinger {
        let h = params.hamiltonian();
        out = out.add(&rho.commutator(&h).scale(C64::new(0.0, 1.0)));
    }
    out
}

/// The same generator from the dilated form
/// `sum_k L_k rho L_k^dag - (1/2){sum_k L_k^dag L_k, rho}` with
/// `L = sqrt(nu) (S - I)|0>`, i.e. `L_0 = sqrt(nu)(V_0 - 1)`,
/// `L_1 = sqrt(nu) V_1`, `L_2 = sqrt(nu) V_2`. Agrees with
/// [`lindblad_rhs`] to machine precision; kept as the independent route.
pub fn lindblad_rhs_dilated(rho: &CMatrix, params: &CatModelParams, picture: Picture) -> CMatrix {
    let triple = cat::kraus_triple(params.p).expect("validated p");
    let id = CMatrix::identity(2);
    let sn = params.nu.sqrt();
    let ls = [
        triple.op(0).sub(&id).scale_re(sn),
        triple.op(1).scale_re(sn),
        triple.op(2).scale_re(sn),
    ];
    let mut jump = CMatrix::zeros(2, 2);
    let mut norm = CMatrix::zeros(2, 2);
    for l in &ls {
        jump = jump.add(&l.mul(rho).mul(&l.dagger()));
        norm = norm.add(&l.dagger().mul(l));
    }
    let mut out = jump.sub(&norm.anticommutator(rho).scale_re(0.5));
    if picture == Picture::Schroedinger {
        let h = params.hamiltonian();
        out = out.add(&rho.commutator(&h).scale(C64::new(0.0, 1.0)));
    }
    out
}

/// Classical RK4 on the Lindblad generator. Returns the sampled time
/// series `(t_i, rho(t_i))` including both endpoints. Every accepted step
/// is checked for Hermiticity, trace drift (rejected beyond 1e-8) and
/// positivity (min eigenvalue >= -1e-9).
pub fn lindblad_integrate(
    rho0: &NormalState,
    t_max: f64,
    dt: f64,
    params: &CatModelParams,
    picture: Picture,
) -> Result<Vec<(f64, NormalState)>> {
    assert!(dt > 0.0, "step size must be positive");
    assert!(t_max >= 0.0);
    let mut rho = rho0.density();
    let mut out = vec![(0.0, NormalState::mixed(rho.clone())?)];
    if t_max == 0.0 {
        return Ok(out);
    }
    let n_steps = (t_max / dt).ceil() as usize;
    let mut t = 0.0f64;
    for step in 0..n_steps {
        let h = if t + dt > t_max { t_max - t } else { dt };
        let k1 = lindblad_rhs(&rho, params, picture);
        let k2 = lindblad_rhs(&rho.add(&k1.scale_re(h / 2.0)), params, picture);
        let k3 = lindblad_rhs(&rho.add(&k2.scale_re(h / 2.0)), params, picture);
        let k4 = lindblad_rhs(&rho.add(&k3.scale_re(h)), params, picture);
        let incr = k1.add(&k2.scale_re(2.0)).add(&k3.scale_re(2.0)).add(&k4).scale_re(h / 6.0);
        rho = rho.add(&incr);
        t = if step + 1 == n_steps { t_max } else { t + h };

        let drift = (rho.trace().re - 1.0).abs();
        if drift > 1e-8 {
            return Err(Error::TraceDrift { drift });
        }
        let herm = rho.hermiticity_defect();
        if herm > 1e-9 {
            return Err(Error::TraceDrift { drift: herm });
        }
        let eig = crate::linalg::eig_hermitian(&rho, 1e-9)?;
        if eig.min_eigenvalue() < -1e-9 {
            return Err(Error::NotDensity {
                detail: "positivity lost during integration",
                defect: -eig.min_eigenvalue(),
            })?;
        }
        out.push((t, NormalState::mixed(rho.clone())?));
    }
    Ok(out)
}

/// Probability density of one fully labelled record at horizon `t`:
/// `nu^n exp(-nu t) |c_{k1..kn}|^2` on the time simplex. Impossible
/// records give zero.
pub fn trajectory_probability(oc: &OutcomeChain, t: f64, params: &CatModelParams) -> f64 {
    assert!(
        oc.chain().times().last().map_or(true, |last| *last <= t),
        "horizon precedes the last jump"
    );
    let w = oc.weight(params);
    if w <= WEIGHT_FLOOR {
        return 0.0;
    }
    params.nu.powi(oc.len() as i32) * (-params.nu * t).exp() * w
}

/// Probability of a label sequence with its jump times integrated over the
/// simplex: `|c|^2 (nu t)^n / n! exp(-nu t)`. The amplitude is evaluated
/// at time zero; in the interaction picture `|c|^2` is time-independent.
pub fn sequence_class_probability(labels: &[u8], t: f64, params: &CatModelParams) -> f64 {
    let triple = cat::kraus_triple(params.p).expect("validated p");
    let mut v = params.psi0();
    for &k in labels {
        v = triple.op(k as usize).apply(&v);
    }
    let w = v.norm().powi(2);
    if w <= WEIGHT_FLOOR {
        return 0.0;
    }
    poisson_weight(labels.len(), params.nu * t) * w
}

/// Aggregate weights of the no-death and death sequence classes after `n`
/// observations, by the survival recursion
/// `(a, b, d) -> (a, q b, d + p b)` started from
/// `(|alpha|^2, |beta|^2, 0)`. `a + b` is the total no-death weight
/// `|alpha|^2 + q^n |beta|^2` and `d` the death weight.
fn survival_triple(n: usize, params: &CatModelParams) -> (f64, f64, f64) {
    let a = params.alpha.norm_sqr();
    let mut b = params.beta.norm_sqr();
    let mut d = 0.0;
    for _ in 0..n {
        d += params.p * b;
        b *= params.q;
    }
    (a, b, d)
}

/// Probabilities of the three fundamental observation classes up to time
/// `t`: no observation, observations without a death, and observations
/// containing the (single) death. They sum to 1 within the certified tail.
#[derive(Debug, Clone, Copy)]
pub struct ClassProbabilities {
    pub p_empty: f64,
    pub p_class0: f64,
    pub p_class1: f64,
    pub tail_bound: f64,
}

pub fn class_probabilities(
    t: f64,
    params: &CatModelParams,
    trunc: &TruncationConfig,
) -> Result<ClassProbabilities> {
    assert!(t >= 0.0);
    let lambda = params.nu * t;
    let tail = poisson_tail_bound(trunc.n_max, lambda);
    if tail > 1e-9 {
        return Err(Error::TruncationInsufficient { tail_bound: tail, requested: 1e-9 });
    }
    let p_empty = poisson_weight(0, lambda);
    let mut p_class0 = 0.0;
    let mut p_class1 = 0.0;
    let mut w = p_empty;
    for n in 1..=trunc.n_max {
        w *= lambda / n as f64;
        let (a, b, d) = survival_triple(n, params);
        p_class0 += w * (a + b);
        p_class1 += w * d;
    }
    Ok(ClassProbabilities { p_empty, p_class0, p_class1, tail_bound: tail })
}

/// Expected death count and the three outcome intensities at time `t`.
///
/// `expected_deaths` comes from the truncated class enumeration (the death
/// count per record is 0 or 1); the intensities are
/// `nu_k(t) = nu Tr[rho(t) V_k^dag V_k]` with the exact truncated marginal,
/// and satisfy `nu_0 + nu_1 + nu_2 = nu`.
#[derive(Debug, Clone, Copy)]
pub struct CountingMoments {
    pub expected_deaths: f64,
    pub nu0: f64,
    pub nu1: f64,
    pub nu2: f64,
}

pub fn counting_moments(
    t: f64,
    params: &CatModelParams,
    trunc: &TruncationConfig,
) -> Result<CountingMoments> {
    let classes = class_probabilities(t, params, trunc)?;
    let rho = marginal_exact(t, params, trunc)?.density();
    let triple = cat::kraus_triple(params.p).expect("validated p");
    let mut nus = [0.0f64; 3];
    for k in 0..3 {
        let vdv = triple.op(k).dagger().mul(triple.op(k));
        nus[k] = params.nu * rho.mul(&vdv).trace().re;
    }
    Ok(CountingMoments {
        expected_deaths: classes.p_class1,
        nu0: nus[0],
        nu1: nus[1],
        nu2: nus[2],
    })
}

/// Composite Simpson quadrature (exact for cubics).
pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    assert!(panels > 0);
    if a == b {
        return 0.0;
    }
    let n = panels * 2;
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let x = a + h * i as f64;
        acc += f(x) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    acc * h / 3.0
}

/// Validates the sum-integral identity on factorized integrands
/// `f(kappa, sigma) = prod g(t_i) prod h(s_j)` with `kappa` in the past
/// `[0, t_split)` and `sigma` in the future `[t_split, horizon)`.
///
/// The left route integrates the two chains independently (two quadratures,
/// product of truncated exponential series); the right route merges the
/// chains (one quadrature of the piecewise integrand, single series).
/// Returns the worst absolute discrepancy over a small integrand family.
pub fn sum_integral_check(t_split: f64, horizon: f64, trunc: &TruncationConfig) -> Result<f64> {
    if !(0.0 <= t_split && t_split <= horizon) {
        return Err(Error::ParamOutOfRange { name: "t_split", value: t_split });
    }
    let series = |x: f64| -> f64 {
        let mut term = 1.0;
        let mut acc = 1.0;
        for n in 1..=trunc.n_max {
            term *= x / n as f64;
            acc += term;
        }
        acc
    };
    let family: [(fn(f64) -> f64, fn(f64) -> f64); 3] = [
        (|_| 0.8, |_| 0.8),
        (|t| 0.3 + 0.2 * t, |t| 0.9 - 0.1 * t),
        (|t| 0.5 + 0.05 * t * t, |t| 0.4 + 0.1 * t),
    ];
    let mut worst = 0.0f64;
    for (g, h) in family {
        let a = simpson(g, 0.0, t_split, 256);
        let b = simpson(h, t_split, horizon, 256);
        let lhs = series(a) * series(b);
        // Merged piecewise integrand over the full interval, quadrature
        // split only at the discontinuity.
        let merged = simpson(g, 0.0, t_split, 512) + simpson(h, t_split, horizon, 512);
        let rhs = series(merged);
        // The two truncated routes differ by the series tail; fold that
        // certified bound into the comparison.
        let tailed = poisson_tail_bound(trunc.n_max, a + b) * (a + b).exp();
        worst = worst.max(((lhs - rhs).abs() - tailed).max(0.0));
    }
    Ok(worst)
}

/// Norm checks for the coherent apparatus vector at constant intensity:
/// returns `(|norm^2 - 1|, |norm^2 - past_norm^2 * future_norm^2|)` with
/// each factor computed by its own truncated series. Both vanish within
/// the certified tail.
pub fn coherent_norm_check(
    nu: f64,
    t_split: f64,
    horizon: f64,
    trunc: &TruncationConfig,
) -> Result<(f64, f64)> {
    if !(0.0 <= t_split && t_split <= horizon) {
        return Err(Error::ParamOutOfRange { name: "t_split", value: t_split });
    }
    let norm2 = |lambda: f64| -> f64 {
        let mut acc = 0.0;
        let mut w = (-lambda).exp();
        acc += w;
        for n in 1..=trunc.n_max {
            w *= lambda / n as f64;
            acc += w;
        }
        acc
    };
    let full = norm2(nu * horizon);
    let past = norm2(nu * t_split);
    let future = norm2(nu * (horizon - t_split));
    Ok(((full - 1.0).abs(), (full - past * future).abs()))
}

/// Evaluation of the interacting wave-function on a chain of jump times:
/// the tensor `(sqrt(nu) V~(t_n)) .. (sqrt(nu) V~(t_1)) |psi>` on
/// `k^(x)n (x) h` (newest cat factor slowest, atom fastest) together with
/// the scalar coherent amplitude `exp(-nu t / 2)` of the unjumped part.
///
/// The squared norm of `weight * tensor` is `nu^n exp(-nu t)`, so the sum
/// over chain lengths of the simplex integrals is 1.
pub fn evaluate_psi_on_chain(
    chain: &Chain,
    t: f64,
    params: &CatModelParams,
) -> Result<(Vec<C64>, f64)> {
    if let Some(last) = chain.times().last() {
        if *last > t {
            return Err(Error::ParamOutOfRange { name: "chain beyond horizon", value: *last });
        }
    }
    let n = chain.len();
    assert!(n <= 14, "chain evaluation limited to 14 points (3^n blowup)");
    let sqrt_nu = params.nu.sqrt();
    let mut v: Vec<C64> = params.psi0().amp().to_vec();
    for &tj in chain.times() {
        let triple = cat::interaction_picture_kraus(tj, params);
        let dim = v.len();
        let mut next = vec![ZERO; dim * 3];
        for (k, op) in triple.ops().iter().enumerate() {
            // (I (x) V_k) on blocks of 2, prefixed by the new cat index k.
            for r in 0..dim / 2 {
                for a in 0..2 {
                    let mut acc = ZERO;
                    for b in 0..2 {
                        acc += op[(a, b)] * v[r * 2 + b];
                    }
                    next[k * dim + r * 2 + a] = acc * sqrt_nu;
                }
            }
        }
        v = next;
    }
    Ok((v, (-params.nu * t / 2.0).exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::trace_distance;

    fn reference_params(p: f64) -> CatModelParams {
        CatModelParams::reference(p, 1.0).unwrap()
    }

    #[test]
    fn poisson_weight_examples() {
        assert!((poisson_weight(0, 1.3) - (-1.3f64).exp()).abs() <= 1e-15);
        assert_eq!(poisson_weight(0, 0.0), 1.0);
        // Partial sums are monotone to 1.
        let lambda = 2.7;
        let mut acc = 0.0;
        let mut prev = 0.0;
        for n in 0..60 {
            acc += poisson_weight(n, lambda);
            assert!(acc >= prev && acc <= 1.0 + 1e-12);
            prev = acc;
        }
        assert!((acc - 1.0).abs() <= 1e-12);
    }

    #[test]
    fn truncation_config_certifies() {
        let trunc = TruncationConfig::for_accuracy(5.0, 1e-12).unwrap();
        assert!(trunc.tail_bound <= 1e-12);
        // The bound really dominates the true tail.
        let mut true_tail = 1.0;
        for n in 0..=trunc.n_max {
            true_tail -= poisson_weight(n, 5.0);
        }
        assert!(true_tail.abs() <= trunc.tail_bound + 1e-15);
        assert!(matches!(
            TruncationConfig::for_accuracy(380.0, 1e-12),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn marginal_analytic_frozen_point() {
        // p=1, nu=1, t=ln 2, psi=(|g>+|e>)/sqrt(2).
        let params = reference_params(1.0);
        let rho = marginal_analytic(core::f64::consts::LN_2, &params).density();
        let expect = CMatrix::from_real(&[&[0.75, 0.25], &[0.25, 0.25]]);
        assert!(rho.sub(&expect).max_abs() <= 1e-15);
    }

    #[test]
    fn marginal_analytic_trivial_cases() {
        // beta = 0 stays at |g><g|; p = 0 stays at rho0.
        let ground = CatModelParams::new(0.7, 1.0, crate::linalg::ONE, ZERO, 0.0, 0.0).unwrap();
        let gg = cat::ket_g().outer(&cat::ket_g());
        assert!(marginal_analytic(3.0, &ground).density().sub(&gg).max_abs() <= 1e-15);
        let decoupled = reference_params(0.0);
        let rho0 = decoupled.psi0().outer(&decoupled.psi0());
        assert!(marginal_analytic(5.0, &decoupled).density().sub(&rho0).max_abs() <= 1e-15);
    }

    #[test]
    fn marginal_exact_matches_analytic_over_grid() {
        for &p in &[0.0, 0.3, 0.7, 1.0] {
            let params = reference_params(p);
            for i in 0..=10 {
                let t = 0.5 * i as f64;
                let trunc = TruncationConfig::for_accuracy(params.nu * t, 1e-12).unwrap();
                let exact = marginal_exact(t, &params, &trunc).unwrap();
                let analytic = marginal_analytic(t, &params);
                let dist = trace_distance(&exact.density(), &analytic.density());
                assert!(dist <= 1e-10, "p={p} t={t}: {dist}");
            }
        }
    }

    #[test]
    fn marginal_exact_rejects_insufficient_truncation() {
        let params = reference_params(1.0);
        let trunc = TruncationConfig::with_order(3, 5.0);
        assert!(matches!(
            marginal_exact(5.0, &params, &trunc),
            Err(Error::TruncationInsufficient { .. })
        ));
    }

    #[test]
    fn lindblad_rhs_stationary_at_ground() {
        let params = reference_params(0.8);
        let gg = cat::ket_g().outer(&cat::ket_g());
        assert!(lindblad_rhs(&gg, &params, Picture::Schroedinger).max_abs() <= 1e-15);
    }

    #[test]
    fn lindblad_rhs_initial_value() {
        // At t=0: rhs = p nu (|g><g| - rho0) + i[rho0, H].
        let params = CatModelParams::new(
            0.6,
            1.4,
            C64::new(0.6, 0.0),
            C64::new(0.48, 0.64),
            0.2,
            1.0,
        )
        .unwrap();
        let rho0 = params.psi0().outer(&params.psi0());
        let gg = cat::ket_g().outer(&cat::ket_g());
        let expect = gg
            .sub(&rho0)
            .scale_re(params.p * params.nu)
            .add(&rho0.commutator(&params.hamiltonian()).scale(C64::new(0.0, 1.0)));
        let got = lindblad_rhs(&rho0, &params, Picture::Schroedinger);
        assert!(got.sub(&expect).max_abs() <= 1e-14);
    }

    #[test]
    fn lindblad_rhs_traceless_and_two_forms_agree() {
        let mut rng = crate::filter::RngStream::new(77, 0);
        for &p in &[0.0, 0.25, 0.5, 0.75, 1.0] {
            let params = reference_params(p);
            for _ in 0..10 {
                let rho = crate::randmat::random_density(2, &mut rng);
                let a = lindblad_rhs(&rho, &params, Picture::Interaction);
                assert!(a.trace().norm() <= 1e-14);
                let b = lindblad_rhs_dilated(&rho, &params, Picture::Interaction);
                assert!(a.sub(&b).max_abs() <= 1e-12, "two-form defect at p={p}");
            }
        }
    }

    #[test]
    fn lindblad_integrator_matches_analytic() {
        let params = reference_params(1.0);
        let rho0 = NormalState::pure(params.psi0()).unwrap();
        let series = lindblad_integrate(&rho0, 1.0, 1e-3, &params, Picture::Interaction).unwrap();
        let (t_end, rho_end) = series.last().unwrap();
        assert_eq!(*t_end, 1.0);
        let expect = marginal_analytic(1.0, &params);
        assert!(trace_distance(&rho_end.density(), &expect.density()) <= 1e-8);
    }

    #[test]
    fn lindblad_integrator_fourth_order() {
        let params = reference_params(0.7);
        let rho0 = NormalState::pure(params.psi0()).unwrap();
        let err_at = |dt: f64| -> f64 {
            let series = lindblad_integrate(&rho0, 1.0, dt, &params, Picture::Interaction).unwrap();
            let rho = series.last().unwrap().1.density();
            rho.sub(&marginal_analytic(1.0, &params).density()).max_abs()
        };
        let e1 = err_at(0.1);
        let e2 = err_at(0.05);
        let ratio = e1 / e2;
        assert!(ratio > 10.0 && ratio < 24.0, "expected ~16x error reduction, got {ratio}");
    }

    #[test]
    fn lindblad_integrator_zero_horizon() {
        let params = reference_params(0.5);
        let rho0 = NormalState::pure(params.psi0()).unwrap();
        let series = lindblad_integrate(&rho0, 0.0, 1e-3, &params, Picture::Interaction).unwrap();
        assert_eq!(series.len(), 1);
        assert!(series[0].1.density().sub(&rho0.density()).max_abs() == 0.0);
    }

    #[test]
    fn lindblad_integrator_validity_along_path() {
        let params = reference_params(0.4);
        let rho0 = NormalState::pure(params.psi0()).unwrap();
        let series = lindblad_integrate(&rho0, 3.0, 1e-2, &params, Picture::Schroedinger).unwrap();
        for (_, rho) in &series {
            let m = rho.density();
            assert!((m.trace().re - 1.0).abs() <= 1e-9);
            assert!(m.hermiticity_defect() <= 1e-9);
            let eig = crate::linalg::eig_hermitian(&m, 1e-9).unwrap();
            assert!(eig.min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn trajectory_probability_examples() {
        let t = 1.7;
        // Empty chain: exp(-nu t).
        let params = reference_params(1.0);
        let density = trajectory_probability(&OutcomeChain::empty(), t, &params);
        assert!((density - (-t).exp()).abs() <= 1e-15);
        // psi=|e>, p=1, single death: |c|^2 = 1, class weight nu t exp(-nu t).
        let excited = CatModelParams::new(1.0, 1.0, ZERO, crate::linalg::ONE, 0.0, 0.0).unwrap();
        let oc = OutcomeChain::new(Chain::new(vec![0.4], t).unwrap(), vec![1]).unwrap();
        assert!((oc.weight(&excited) - 1.0).abs() <= 1e-15);
        assert!((trajectory_probability(&oc, t, &excited) - 1.0f64 * (-t).exp()).abs() <= 1e-15);
        assert!((sequence_class_probability(&[1], t, &excited) - t * (-t).exp()).abs() <= 1e-15);
        // A second death is impossible.
        let oc2 =
            OutcomeChain::new(Chain::new(vec![0.4, 0.9], t).unwrap(), vec![1, 1]).unwrap();
        assert_eq!(trajectory_probability(&oc2, t, &excited), 0.0);
        assert!(!oc2.possible(&excited));
    }

    #[test]
    fn class_probabilities_closed_forms() {
        let t = 1.3;
        let trunc = TruncationConfig::for_accuracy(t, 1e-13).unwrap();
        // p = 1 reproduces the simple exponential forms.
        let params = reference_params(1.0);
        let c = class_probabilities(t, &params, &trunc).unwrap();
        let a2 = params.alpha.norm_sqr();
        let b2 = params.beta.norm_sqr();
        assert!((c.p_empty - (-t).exp()).abs() <= 1e-12);
        assert!((c.p_class0 - a2 * (1.0 - (-t).exp())).abs() <= 1e-12);
        assert!((c.p_class1 - b2 * (1.0 - (-t).exp())).abs() <= 1e-12);
        // General p: the death class carries the p-dependent exponent.
        for &p in &[0.3, 0.7] {
            let params = reference_params(p);
            let c = class_probabilities(t, &params, &trunc).unwrap();
            let expect1 = b2 * (1.0 - (-p * t).exp());
            assert!((c.p_class1 - expect1).abs() <= 1e-10, "p={p}");
            let total = c.p_empty + c.p_class0 + c.p_class1;
            assert!((total - 1.0).abs() <= c.tail_bound + 1e-12);
        }
        // t = 0 is all-empty.
        let c0 = class_probabilities(0.0, &params, &trunc).unwrap();
        assert_eq!((c0.p_empty, c0.p_class0, c0.p_class1), (1.0, 0.0, 0.0));
    }

    #[test]
    fn death_probability_nondecreasing_and_bounded() {
        let params = reference_params(0.6);
        let trunc = TruncationConfig::for_accuracy(4.0, 1e-12).unwrap();
        let mut prev = 0.0;
        for i in 0..=16 {
            let t = 0.25 * i as f64;
            let c = class_probabilities(t, &params, &trunc).unwrap();
            assert!(c.p_class1 + 1e-12 >= prev);
            assert!(c.p_class1 <= 1.0);
            prev = c.p_class1;
        }
    }

    #[test]
    fn counting_moments_closed_forms() {
        let t = 0.9;
        let trunc = TruncationConfig::for_accuracy(t, 1e-13).unwrap();
        for &p in &[0.3, 0.7, 1.0] {
            let params = reference_params(p);
            let m = counting_moments(t, &params, &trunc).unwrap();
            let b2 = params.beta.norm_sqr();
            // nu_2 = q nu; intensities sum to nu.
            assert!((m.nu2 - params.q * params.nu).abs() <= 1e-12);
            assert!((m.nu0 + m.nu1 + m.nu2 - params.nu).abs() <= 1e-12);
            // Closed intensities.
            let decay = (-p * params.nu * t).exp();
            assert!((m.nu1 - p * params.nu * b2 * decay).abs() <= 1e-11);
            assert!((m.nu0 - p * params.nu * (1.0 - b2 * decay)).abs() <= 1e-11);
            // E[deaths] equals the quadrature of nu_1 over [0, t].
            let integral = simpson(
                |s| {
                    let tr = TruncationConfig::for_accuracy(params.nu * s, 1e-13).unwrap();
                    counting_moments(s, &params, &tr).unwrap().nu1
                },
                0.0,
                t,
                64,
            );
            assert!((m.expected_deaths - integral).abs() <= 1e-10, "p={p}");
            // p = 1 closed form stays below 1.
            if p == 1.0 {
                assert!((m.expected_deaths - b2 * (1.0 - (-t).exp())).abs() <= 1e-12);
                assert!(m.expected_deaths <= 1.0);
            }
        }
    }

    #[test]
    fn sum_integral_identity_and_coherent_norm() {
        let trunc = TruncationConfig::for_accuracy(3.0, 1e-12).unwrap();
        let defect = sum_integral_check(0.8, 2.0, &trunc).unwrap();
        assert!(defect <= 1e-9, "sum-integral defect {defect}");
        let (norm_defect, split_defect) = coherent_norm_check(1.3, 0.7, 2.0, &trunc).unwrap();
        assert!(norm_defect <= 1e-9);
        assert!(split_defect <= 1e-9);
    }

    #[test]
    fn psi_on_chain_vacuum_and_single_point() {
        let params = reference_params(0.6);
        let t = 1.1;
        let (v, w) = evaluate_psi_on_chain(&Chain::empty(), t, &params).unwrap();
        assert_eq!(v.len(), 2);
        assert!((w - (-t / 2.0).exp()).abs() <= 1e-15);
        let psi = params.psi0();
        for (a, b) in v.iter().zip(psi.amp()) {
            assert!((a - b).norm() <= 1e-15);
        }
        // Single point: squared norm of weight * tensor is nu exp(-nu t).
        let chain = Chain::new(vec![0.3], t).unwrap();
        let (v1, w1) = evaluate_psi_on_chain(&chain, t, &params).unwrap();
        assert_eq!(v1.len(), 6);
        let norm2: f64 = v1.iter().map(|z| z.norm_sqr()).sum::<f64>() * w1 * w1;
        assert!((norm2 - params.nu * (-params.nu * t).exp()).abs() <= 1e-14);
    }

    #[test]
    fn psi_on_chain_norm_series_sums_to_one() {
        // sum_n over the simplex of ||psi_t(theta_n)||^2 d theta_n equals
        // sum_n (nu t)^n / n! exp(-nu t) -> 1. The squared norm is constant
        // in the jump times, so one representative chain per n suffices and
        // the simplex contributes its volume t^n / n!.
        let params = CatModelParams::new(
            0.45,
            1.0,
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            0.1,
            0.9,
        )
        .unwrap();
        let t = 2.0;
        let mut series = 0.0;
        for n in 0..=12usize {
            let times: Vec<f64> = (0..n).map(|i| t * (i as f64 + 0.5) / (n as f64 + 1.0)).collect();
            let chain = Chain::new(times, t).unwrap();
            let (v, w) = evaluate_psi_on_chain(&chain, t, &params).unwrap();
            let density: f64 = v.iter().map(|z| z.norm_sqr()).sum::<f64>() * w * w;
            let mut vol = 1.0;
            for i in 1..=n {
                vol *= t / i as f64;
            }
            series += density * vol;
        }
        assert!((series - 1.0).abs() <= 1e-6, "series {series}");
    }
}
