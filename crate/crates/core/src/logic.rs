//! Boolean lattices on finite sets, their projector realisation, pair
//! classification, relative negation, and distributivity-failure witnesses.
//!
//! The Boolean side is exact set arithmetic on bit-sets; the projector side
//! reuses [`crate::linalg::meet`]/[`crate::linalg::join`]. Distributivity
//! holds identically for the former and fails for generic projector triples,
//! which is the departure point of the quantum logic.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, Projector};

/// Element of the Boolean algebra of subsets of `{0, .., universe_size-1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoolElement {
    universe_size: u32,
    members: u64,
}

impl BoolElement {
    pub fn new(universe_size: u32, members: u64) -> Result<Self> {
        assert!(universe_size as usize <= 64, "universe limited to 64 points");
        let mask = Self::mask(universe_size);
        if members & !mask != 0 {
            return Err(Error::UniverseMismatch);
        }
        Ok(BoolElement { universe_size, members })
    }

    pub fn empty(universe_size: u32) -> Self {
        BoolElement { universe_size, members: 0 }
    }

    pub fn full(universe_size: u32) -> Self {
        BoolElement { universe_size, members: Self::mask(universe_size) }
    }

    fn mask(universe_size: u32) -> u64 {
        if universe_size == 64 {
            u64::MAX
        } else {
            (1u64 << universe_size) - 1
        }
    }

    pub fn universe_size(&self) -> u32 {
        self.universe_size
    }

    pub fn members(&self) -> u64 {
        self.members
    }

    pub fn le(&self, other: &BoolElement) -> bool {
        self.universe_size == other.universe_size && self.members & !other.members == 0
    }

    pub fn complement(&self) -> BoolElement {
        BoolElement {
            universe_size: self.universe_size,
            members: !self.members & Self::mask(self.universe_size),
        }
    }

    /// Enumerates the whole lattice of the given universe (for exhaustive
    /// checks on small universes).
    pub fn all(universe_size: u32) -> impl Iterator<Item = BoolElement> {
        assert!(universe_size < 32, "exhaustive enumeration only for small universes");
        (0..(1u64 << universe_size)).map(move |m| BoolElement { universe_size, members: m })
    }
}

/// Set-model meet, join and complement of the first argument.
pub fn bool_ops(a: &BoolElement, b: &BoolElement) -> Result<(BoolElement, BoolElement, BoolElement)> {
    if a.universe_size != b.universe_size {
        return Err(Error::UniverseMismatch);
    }
    let meet = BoolElement { universe_size: a.universe_size, members: a.members & b.members };
    let join = BoolElement { universe_size: a.universe_size, members: a.members | b.members };
    Ok((meet, join, a.complement()))
}

/// Negation of `b` relative to the interval `[a, c]`:
/// `b^{a|c} = a v (b^| ^ c)`. Applying it twice returns `b`.
pub fn relative_negation(a: &BoolElement, b: &BoolElement, c: &BoolElement) -> Result<BoolElement> {
    if a.universe_size != b.universe_size || b.universe_size != c.universe_size {
        return Err(Error::UniverseMismatch);
    }
    if !(a.le(b) && b.le(c)) {
        return Err(Error::IntervalViolation);
    }
    Ok(BoolElement {
        universe_size: a.universe_size,
        members: a.members | (!b.members & c.members),
    })
}

/// Relative negation on commuting projectors: `P = P_c - (P_b - P_a)`.
///
/// Requires `P_a <= P_b <= P_c` and mutual commutation.
pub fn projector_relative_negation(
    pa: &Projector,
    pb: &Projector,
    pc: &Projector,
) -> Result<Projector> {
    let tol = linalg::STRUCT_TOL;
    for (x, y) in [(pa, pb), (pb, pc), (pa, pc)] {
        let defect = x.matrix().commutator(y.matrix()).max_abs();
        if defect > 1e-9 {
            return Err(Error::NonCommuting { defect });
        }
    }
    for (lo, hi) in [(pa, pb), (pb, pc)] {
        let diff = hi.matrix().sub(lo.matrix());
        let eig = linalg::eig_hermitian(&diff, tol)?;
        if eig.min_eigenvalue() < -1e-9 {
            return Err(Error::OrderingViolation { min_eigenvalue: eig.min_eigenvalue() });
        }
    }
    let mat = pc.matrix().sub(&pb.matrix().sub(pa.matrix()));
    Projector::new(mat, tol)
}

/// Relation of a projector pair in the lattice sense.
///
/// `disjoint` iff `PQ = 0`; `inconsistent` iff `meet(P, Q) = 0`;
/// `conjoint` iff `join(P, Q) = I`; `commuting` iff `[P, Q] = 0`.
/// A pair that is inconsistent but not disjoint is incompatible, and then
/// necessarily non-commuting.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PairClassification {
    pub disjoint: bool,
    pub inconsistent: bool,
    pub conjoint: bool,
    pub commuting: bool,
}

impl PairClassification {
    pub fn incompatible(&self) -> bool {
        self.inconsistent && !self.disjoint
    }
}

pub fn classify_pair(p: &Projector, q: &Projector) -> Result<PairClassification> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    let tol = 1e-9;
    let disjoint = p.matrix().mul(q.matrix()).max_abs() <= tol;
    let inconsistent = linalg::meet(p, q, linalg::STRUCT_TOL)?.rank() == 0;
    let conjoint = linalg::join(p, q, linalg::STRUCT_TOL)?.complement().rank() == 0;
    let commuting = p.matrix().commutator(q.matrix()).max_abs() <= tol;
    Ok(PairClassification { disjoint, inconsistent, conjoint, commuting })
}

/// Generalized incompatibility: exist nonzero `p' <= P`, `q' <= Q` with
/// `p' ^ q' = 0` and `p'` not below the complement of `q'`.
///
/// The search runs over rank-one sub-projectors built from orthonormal
/// range bases of the two inputs (spectral subspaces only, which keeps the
/// search finite), plus the inputs themselves.
pub fn generalized_incompatible(p: &Projector, q: &Projector) -> Result<bool> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch { expected: p.dim(), got: q.dim() });
    }
    if p.rank() == 0 || q.rank() == 0 {
        return Ok(false);
    }
    let mut p_candidates: Vec<Projector> = p
        .range_basis()
        .iter()
        .map(|v| Projector::onto(v).expect("unit basis vector"))
        .collect();
    p_candidates.push(p.clone());
    let mut q_candidates: Vec<Projector> = q
        .range_basis()
        .iter()
        .map(|v| Projector::onto(v).expect("unit basis vector"))
        .collect();
    q_candidates.push(q.clone());
    for sub_p in &p_candidates {
        for sub_q in &q_candidates {
            let inconsistent = linalg::meet(sub_p, sub_q, linalg::STRUCT_TOL)?.rank() == 0;
            let below_neg = linalg::ordering_le(sub_p, &sub_q.complement(), 1e-9);
            if inconsistent && !below_neg {
                return Ok(true);
            }
        }
    }
    Ok(false)
}

/// Evaluates the distributive law `(P ^ Q) v R = (P v R) ^ (Q v R)` and
/// reports the max-entry norm of the difference. Commuting triples give a
/// zero defect; the defect carries no meaning beyond witnessing failure.
pub fn distributivity_witness(
    p: &Projector,
    q: &Projector,
    r: &Projector,
    tol: f64,
) -> Result<(bool, f64)> {
    let lhs = linalg::join(&linalg::meet(p, q, linalg::STRUCT_TOL)?, r, linalg::STRUCT_TOL)?;
    let rhs = linalg::meet(
        &linalg::join(p, r, linalg::STRUCT_TOL)?,
        &linalg::join(q, r, linalg::STRUCT_TOL)?,
        linalg::STRUCT_TOL,
    )?;
    let defect = lhs.matrix().sub(rhs.matrix()).max_abs();
    Ok((defect <= tol, defect))
}

/// Diagonal embedding of a Boolean element as a projector: member points
/// become unit diagonal entries.
pub fn embed_as_projector(a: &BoolElement) -> Projector {
    let n = a.universe_size() as usize;
    let mut m = CMatrix::zeros(n, n);
    for i in 0..n {
        if a.members() >> i & 1 == 1 {
            m[(i, i)] = linalg::ONE;
        }
    }
    Projector::new(m, linalg::STRUCT_TOL).expect("diagonal 0/1 matrix is a projector")
}

/// Bicommutant basis `{G}''`, as two nested commutant computations.
/// The double null-space solve is O(d^6); restricted to small dimensions.
pub fn bicommutant_basis(generators: &[CMatrix]) -> Vec<CMatrix> {
    assert!(!generators.is_empty());
    assert!(generators[0].rows() <= 12, "bicommutant limited to dimension <= 12");
    let first = linalg::commutant_basis(generators);
    linalg::commutant_basis(&first)
}
