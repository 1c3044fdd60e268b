//! The concrete atom-cat model: parameters, the 6x6 interaction operator,
//! its Kraus triple, the decay channel and the free atomic dynamics.
//!
//! Basis ordering is fixed throughout the crate as atom `{|g>, |e>}` and
//! cat `{|0>, |1>, |2>}`; the composite index on the 6-dimensional coupling
//! space is cat-major, `index = cat * 2 + atom`, so the interaction
//! operator is laid out as a 3x3 grid of 2x2 atom blocks. Outcome labels:
//! `0` infers the atomic ground state, `1` is the death event (`J` acts),
//! `2` is uninformative (identity acts).

use alloc::vec;
use alloc::vec::Vec;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{CMatrix, Ket, C64, ONE, ZERO};

/// Number of outcome types.
pub const N_OUTCOMES: usize = 3;

/// `|g>` (index 0).
pub fn ket_g() -> Ket {
    Ket::basis(2, 0)
}

/// `|e>` (index 1).
pub fn ket_e() -> Ket {
    Ket::basis(2, 1)
}

/// Atomic lowering operator `J = |g><e|`.
pub fn lowering() -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| if (i, j) == (0, 1) { ONE } else { ZERO })
}

pub fn sigma_x() -> CMatrix {
    CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
}

pub fn sigma_y() -> CMatrix {
    CMatrix::from_fn(2, 2, |i, j| match (i, j) {
        (0, 1) => C64::new(0.0, -1.0),
        (1, 0) => C64::new(0.0, 1.0),
        _ => ZERO,
    })
}

/// `sigma_z = |g><g| - |e><e|`.
pub fn sigma_z() -> CMatrix {
    CMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]])
}

/// Model constants: coupling probability `p` (with `q = 1 - p`),
/// observation frequency `nu`, initial atom amplitudes
/// `|psi> = alpha |g> + beta |e>`, and the atomic energies whose difference
/// `eps = eps_e - eps_g` drives the free phase.
#[derive(Debug, Clone)]
pub struct CatModelParams {
    pub p: f64,
    pub q: f64,
    pub nu: f64,
    pub alpha: C64,
    pub beta: C64,
    pub eps_g: f64,
    pub eps_e: f64,
}

impl CatModelParams {
    pub fn new(p: f64, nu: f64, alpha: C64, beta: C64, eps_g: f64, eps_e: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::ParamOutOfRange { name: "p", value: p });
        }
        if !(nu > 0.0) {
            return Err(Error::ParamOutOfRange { name: "nu", value: nu });
        }
        let norm2 = alpha.norm_sqr() + beta.norm_sqr();
        if (norm2 - 1.0).abs() > 1e-12 {
            return Err(Error::NotNormalized { norm: norm2.sqrt() });
        }
        Ok(CatModelParams { p, q: 1.0 - p, nu, alpha, beta, eps_g, eps_e })
    }

    /// Equal superposition at unit rate and p = 1, zero energies.
    pub fn reference(p: f64, nu: f64) -> Result<Self> {
        let amp = C64::new(core::f64::consts::FRAC_1_SQRT_2, 0.0);
        CatModelParams::new(p, nu, amp, amp, 0.0, 0.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps_e - self.eps_g
    }

    pub fn psi0(&self) -> Ket {
        Ket::new(vec![self.alpha, self.beta])
    }

    /// `H = eps_g |g><g| + eps_e |e><e|` on the atom.
    pub fn hamiltonian(&self) -> CMatrix {
        CMatrix::from_real(&[&[self.eps_g, 0.0], &[0.0, self.eps_e]])
    }
}

/// The three per-observation contractions on the atom, indexed by outcome:
/// `V_0 = sqrt(p) |g><g|`, `V_1 = sqrt(p) J`, `V_2 = sqrt(q) 1`.
#[derive(Debug, Clone)]
pub struct KrausTriple {
    ops: [CMatrix; N_OUTCOMES],
}

impl KrausTriple {
    pub fn new(ops: [CMatrix; N_OUTCOMES]) -> Result<Self> {
        let mut sum = CMatrix::zeros(2, 2);
        for v in &ops {
            sum = sum.add(&v.dagger().mul(v));
        }
        let defect = sum.sub(&CMatrix::identity(2)).max_abs();
        if defect > 1e-12 {
            return Err(Error::IncompleteBasis { defect });
        }
        // V_1 is nilpotent: the death event cannot repeat.
        let nilp = ops[1].mul(&ops[1]).max_abs();
        if nilp > 1e-12 {
            return Err(Error::IncompleteBasis { defect: nilp });
        }
        Ok(KrausTriple { ops })
    }

    pub fn op(&self, k: usize) -> &CMatrix {
        &self.ops[k]
    }

    pub fn ops(&self) -> &[CMatrix; N_OUTCOMES] {
        &self.ops
    }

    /// Outcome weights `||V_k psi||^2` for a normalized state; they sum
    /// to 1 by completeness.
    pub fn outcome_weights(&self, psi: &Ket) -> [f64; N_OUTCOMES] {
        let mut w = [0.0; N_OUTCOMES];
        for (k, v) in self.ops.iter().enumerate() {
            let n = v.apply(psi).norm();
            w[k] = n * n;
        }
        w
    }
}

/// The 6x6 unitary, self-adjoint atom-cat interaction operator, cat-major
/// blocks over `J`:
///
/// ```text
///   [ sqrt(p) JJ+      sqrt(p) J+          sqrt(q) 1        ]
///   [ sqrt(p) J        J+J + q JJ+         -sqrt(qp) J      ]
///   [ sqrt(q) 1        -sqrt(qp) J+        p J+J - sqrt(p) JJ+ ]
/// ```
pub fn build_s(p: f64) -> Result<CMatrix> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::ParamOutOfRange { name: "p", value: p });
    }
    let q = 1.0 - p;
    let sp = p.sqrt();
    let sq = q.sqrt();
    let sqp = (q * p).sqrt();
    let j = lowering();
    let jd = j.dagger();
    let jjd = j.mul(&jd); // |g><g|
    let jdj = jd.mul(&j); // |e><e|
    let id = CMatrix::identity(2);

    let blocks: [[CMatrix; 3]; 3] = [
        [jjd.scale_re(sp), jd.scale_re(sp), id.scale_re(sq)],
        [j.scale_re(sp), jdj.add(&jjd.scale_re(q)), j.scale_re(-sqp)],
        [id.scale_re(sq), jd.scale_re(-sqp), jdj.scale_re(p).sub(&jjd.scale_re(sp))],
    ];

    let mut s = CMatrix::zeros(6, 6);
    for (bi, row) in blocks.iter().enumerate() {
        for (bj, block) in row.iter().enumerate() {
            for i in 0..2 {
                for jx in 0..2 {
                    s[(bi * 2 + i, bj * 2 + jx)] = block[(i, jx)];
                }
            }
        }
    }
    Ok(s)
}

/// First block column of `S`: the isometry `S|0>` as the Kraus triple.
pub fn kraus_triple(p: f64) -> Result<KrausTriple> {
    let s = build_s(p)?;
    let mut ops: Vec<CMatrix> = Vec::with_capacity(3);
    for k in 0..3 {
        ops.push(CMatrix::from_fn(2, 2, |i, j| s[(k * 2 + i, j)]));
    }
    let [v0, v1, v2]: [CMatrix; 3] = ops.try_into().expect("three blocks");
    KrausTriple::new([v0, v1, v2])
}

/// Decay channel `phi(rho) = p |g><g| + q rho` on raw qubit densities.
pub fn channel_phi_raw(rho: &CMatrix, p: f64) -> CMatrix {
    assert_eq!(rho.rows(), 2);
    let pop = rho.trace().re;
    let mut out = rho.scale_re(1.0 - p);
    out[(0, 0)] += C64::new(p * pop, 0.0);
    out
}

/// Decay channel on validated states; trace preserving, completely
/// positive (a convex mixture), fixed point `|g><g|`.
pub fn channel_phi(
    rho: &crate::dilation::NormalState,
    p: f64,
) -> Result<crate::dilation::NormalState> {
    if rho.dim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, got: rho.dim() });
    }
    crate::dilation::NormalState::mixed(channel_phi_raw(&rho.density(), p))
}

/// Interaction-picture Kraus triple at time `t`: only `V_1` picks up the
/// phase `u(t) = exp(-i eps t)`; all norms are `t`-independent.
pub fn interaction_picture_kraus(t: f64, params: &CatModelParams) -> KrausTriple {
    let base = kraus_triple(params.p).expect("validated p");
    let phase = C64::new(0.0, -params.eps() * t).exp();
    let [v0, v1, v2] = base.ops().clone();
    KrausTriple::new([v0, v1.scale(phase), v2]).expect("phase preserves completeness")
}

/// Free Heisenberg evolution `X(t) = exp(iHt) X exp(-iHt)` for the diagonal
/// atomic Hamiltonian; entrywise phases, spectrum preserved.
pub fn heisenberg_evolve(x: &CMatrix, t: f64, params: &CatModelParams) -> CMatrix {
    assert_eq!(x.rows(), 2, "heisenberg_evolve acts on atom observables");
    let h = [params.eps_g, params.eps_e];
    CMatrix::from_fn(2, 2, |i, j| x[(i, j)] * C64::new(0.0, (h[i] - h[j]) * t).exp())
}
