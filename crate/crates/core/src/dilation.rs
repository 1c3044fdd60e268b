//! Conditional expectations, the law of total probability, measurement
//! coupling, and the canonical purification of a pinched density.
//!
//! The purification constructor is the computational heart of this module:
//! given a density `rho` invariant under the pinching by a complete
//! orthogonal resolution `{E_k}`, it builds a dual instrument space, the
//! intertwining map `psi~` with `E_k psi~ = psi~ P_k^T`, and the entangled
//! vector `psi` whose marginal recovers `rho` and whose dual-projector
//! expectations reproduce the pinched expectations on the object side.

use alloc::vec;
use alloc::vec::Vec;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, ket_as_map, kron, partial_trace, CMatrix, Ket, Projector, Subsystem, C64,
    STRUCT_TOL, ZERO,
};

/// Outcome probabilities below this threshold are dropped from
/// conditional-expectation sums.
pub const PROB_FLOOR: f64 = 1e-14;

/// Normal state: pure vector or density matrix.
#[derive(Debug, Clone)]
pub enum NormalState {
    Pure(Ket),
    Mixed(CMatrix),
}

impl NormalState {
    pub fn pure(psi: Ket) -> Result<Self> {
        if !psi.is_normalized(1e-10) {
            return Err(Error::NotNormalized { norm: psi.norm() });
        }
        Ok(NormalState::Pure(psi))
    }

    /// Validates Hermiticity, positivity (eigenvalues >= -1e-10) and unit
    /// trace (within 1e-10).
    pub fn mixed(rho: CMatrix) -> Result<Self> {
        let herm = rho.hermiticity_defect();
        if herm > STRUCT_TOL {
            return Err(Error::NotDensity { detail: "not Hermitian", defect: herm });
        }
        let tr = rho.trace();
        if (tr.re - 1.0).abs() > STRUCT_TOL || tr.im.abs() > STRUCT_TOL {
            return Err(Error::NotDensity { detail: "trace not 1", defect: (tr.re - 1.0).abs() });
        }
        let eig = eig_hermitian(&rho, STRUCT_TOL)?;
        if eig.min_eigenvalue() < -STRUCT_TOL {
            return Err(Error::NotDensity {
                detail: "negative eigenvalue",
                defect: -eig.min_eigenvalue(),
            });
        }
        Ok(NormalState::Mixed(rho))
    }

    pub fn dim(&self) -> usize {
        match self {
            NormalState::Pure(psi) => psi.dim(),
            NormalState::Mixed(rho) => rho.rows(),
        }
    }

    pub fn is_pure(&self) -> bool {
        matches!(self, NormalState::Pure(_))
    }

    pub fn density(&self) -> CMatrix {
        match self {
            NormalState::Pure(psi) => psi.outer(psi),
            NormalState::Mixed(rho) => rho.clone(),
        }
    }

    /// `E[A] = Tr[rho A]` resp. `<psi|A|psi>`.
    pub fn expect(&self, a: &CMatrix) -> C64 {
        match self {
            NormalState::Pure(psi) => psi.expect(a),
            NormalState::Mixed(rho) => rho.mul(a).trace(),
        }
    }
}

/// Complete set of mutually orthogonal projectors (`sum P_k = I`,
/// `P_i P_j = 0`), each tagged with its outcome label.
#[derive(Debug, Clone)]
pub struct OrthoResolution {
    projectors: Vec<Projector>,
    labels: Vec<usize>,
}

impl OrthoResolution {
    pub fn new(projectors: Vec<Projector>, labels: Vec<usize>) -> Result<Self> {
        assert_eq!(projectors.len(), labels.len(), "one label per projector");
        assert!(!projectors.is_empty());
        let dim = projectors[0].dim();
        let mut sum = CMatrix::zeros(dim, dim);
        for p in &projectors {
            if p.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, got: p.dim() });
            }
            sum = sum.add(p.matrix());
        }
        let completeness = sum.sub(&CMatrix::identity(dim)).max_abs();
        if completeness > STRUCT_TOL {
            return Err(Error::IncompleteBasis { defect: completeness });
        }
        for i in 0..projectors.len() {
            for j in 0..projectors.len() {
                if i != j {
                    let cross = projectors[i].matrix().mul(projectors[j].matrix()).max_abs();
                    if cross > STRUCT_TOL {
                        return Err(Error::IncompleteBasis { defect: cross });
                    }
                }
            }
        }
        Ok(OrthoResolution { projectors, labels })
    }

    /// Resolution with labels `0..k`.
    pub fn indexed(projectors: Vec<Projector>) -> Result<Self> {
        let labels = (0..projectors.len()).collect();
        OrthoResolution::new(projectors, labels)
    }

    /// The rank-one resolution of the standard basis.
    pub fn standard_basis(dim: usize) -> Self {
        let projectors = (0..dim)
            .map(|i| Projector::onto(&Ket::basis(dim, i)).expect("basis vector"))
            .collect();
        OrthoResolution::indexed(projectors).expect("standard basis resolves the identity")
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }

    pub fn len(&self) -> usize {
        self.projectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.projectors.is_empty()
    }

    /// `rho -> sum_k P_k rho P_k`.
    pub fn pinch(&self, rho: &CMatrix) -> CMatrix {
        let mut out = CMatrix::zeros(rho.rows(), rho.cols());
        for p in &self.projectors {
            out = out.add(&p.matrix().mul(rho).mul(p.matrix()));
        }
        out
    }
}

/// Conditional expectation onto the commutant of `{P, I-P}`:
/// `w(A) = PAP + QAQ`. Needs no state; idempotent, unital, positive, and
/// the result commutes with `P`.
pub fn cond_exp_commutant(a: &CMatrix, p: &Projector) -> CMatrix {
    assert_eq!(a.rows(), p.dim(), "cond_exp_commutant dimension mismatch");
    let q = p.complement();
    p.matrix().mul(a).mul(p.matrix()).add(&q.matrix().mul(a).mul(q.matrix()))
}

/// Conditional expectation onto the abelian algebra spanned by a complete
/// orthogonal resolution, with respect to a normal state:
/// `e(A) = sum_k (E[P_k A P_k] / E[P_k]) P_k`, the sum running over
/// outcomes with nonzero probability.
pub fn cond_exp_abelian(
    a: &CMatrix,
    res: &OrthoResolution,
    state: &NormalState,
) -> Result<CMatrix> {
    if a.rows() != res.dim() || state.dim() != res.dim() {
        return Err(Error::DimensionMismatch { expected: res.dim(), got: a.rows() });
    }
    let mut out = CMatrix::zeros(res.dim(), res.dim());
    let mut any = false;
    for p in res.projectors() {
        let prob = state.expect(p.matrix()).re;
        if prob <= PROB_FLOOR {
            continue;
        }
        any = true;
        let pinched = p.matrix().mul(a).mul(p.matrix());
        let val = state.expect(&pinched) / prob;
        out = out.add(&p.matrix().scale(val));
    }
    if !any {
        return Err(Error::ZeroProbability);
    }
    Ok(out)
}

/// Law-of-total-probability check: `defect = |E[e(A)] - E[A]|`.
pub fn check_ltp(
    a: &CMatrix,
    res: &OrthoResolution,
    state: &NormalState,
    tol: f64,
) -> Result<(bool, f64)> {
    let eps = cond_exp_abelian(a, res, state)?;
    let defect = (state.expect(&eps) - state.expect(a)).norm();
    Ok((defect <= tol, defect))
}

/// Output of [`purify_pinched`].
#[derive(Debug, Clone)]
pub struct Purification {
    /// Intertwining map `psi~ : k -> h` with `E_k psi~ = psi~ P_k^T`.
    pub psi_tilde: CMatrix,
    /// Entangled unit vector on `h (x) k` (object factor slow) whose
    /// object marginal is the input density.
    pub psi: Ket,
    /// Dual resolution `{P_k}` on the instrument space, labels matching
    /// the input resolution.
    pub dual: OrthoResolution,
}

/// Canonical purification of a density `rho` that is invariant under the
/// pinching by `{E_k}` (equivalently `[rho, E_k] = 0`).
///
/// The instrument space gets one basis vector per retained spectral vector
/// of `rho`, grouped by the unique block `E_k` fixing it; coefficients are
/// the non-negative square roots of the eigenvalues. Outcomes with zero
/// probability contribute one extra instrument dimension carrying a zero
/// column of `psi~`, so their dual projector is nonzero while the
/// correspondence expectations vanish.
pub fn purify_pinched(rho: &NormalState, res: &OrthoResolution) -> Result<Purification> {
    let d = rho.dim();
    if res.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: res.dim() });
    }
    let dens = rho.density();
    let pinch_defect = res.pinch(&dens).sub(&dens).max_abs();
    if pinch_defect > STRUCT_TOL {
        return Err(Error::PinchingViolated { defect: pinch_defect });
    }

    // Joint eigenbasis of rho and the blocks: diagonalize
    // A = rho + sum_k c_k E_k with block offsets far larger than the unit
    // spread of rho's spectrum, so every eigenvector of A lies in exactly
    // one block and is an eigenvector of rho.
    let mut joint = dens.clone();
    for (idx, e) in res.projectors().iter().enumerate() {
        joint = joint.add(&e.matrix().scale_re(4.0 * (idx + 1) as f64));
    }
    let eig = eig_hermitian(&joint, STRUCT_TOL)?;

    // Group eigenvectors by block and keep those carrying weight.
    struct Retained {
        block: usize,
        lambda: f64,
        phi: Ket,
    }
    let mut retained: Vec<Retained> = Vec::new();
    for v in eig.eigenvectors {
        let lambda = v.expect(&dens).re;
        if lambda <= PROB_FLOOR {
            continue;
        }
        let mut block = 0;
        let mut best = -1.0;
        for (idx, e) in res.projectors().iter().enumerate() {
            let w = v.expect(e.matrix()).re;
            if w > best {
                best = w;
                block = idx;
            }
        }
        retained.push(Retained { block, lambda, phi: v });
    }
    // Deterministic ordering: by block, then descending weight.
    retained.sort_by(|a, b| {
        a.block
            .cmp(&b.block)
            .then(b.lambda.partial_cmp(&a.lambda).expect("finite eigenvalues"))
    });

    let zero_prob_blocks: Vec<usize> = (0..res.len())
        .filter(|k| !retained.iter().any(|r| r.block == *k))
        .collect();
    let dim_k = retained.len() + zero_prob_blocks.len();

    let mut psi_tilde = CMatrix::zeros(d, dim_k);
    let mut psi_amp = vec![ZERO; d * dim_k];
    let mut block_columns: Vec<Vec<usize>> = vec![Vec::new(); res.len()];
    for (col, r) in retained.iter().enumerate() {
        let c = r.lambda.sqrt();
        block_columns[r.block].push(col);
        for row in 0..d {
            let amp = r.phi.amp()[row] * c;
            psi_tilde[(row, col)] = amp;
            psi_amp[row * dim_k + col] = amp;
        }
    }
    for (extra, &k) in zero_prob_blocks.iter().enumerate() {
        block_columns[k].push(retained.len() + extra);
    }

    let dual_projectors: Vec<Projector> = block_columns
        .iter()
        .map(|cols| {
            if cols.is_empty() {
                Projector::zero(dim_k)
            } else {
                let frame: Vec<Ket> = cols.iter().map(|&c| Ket::basis(dim_k, c)).collect();
                Projector::from_frame(&frame).expect("standard basis frame")
            }
        })
        .collect();
    let dual = OrthoResolution::new(dual_projectors, res.labels().to_vec())?;

    Ok(Purification { psi_tilde, psi: Ket::new(psi_amp), dual })
}

/// Kraus family `{V_k}` with `sum_k V_k^dag V_k = I`, labels matching the
/// instrument outcomes.
#[derive(Debug, Clone)]
pub struct KrausFamily {
    operators: Vec<CMatrix>,
    labels: Vec<usize>,
}

impl KrausFamily {
    pub fn new(operators: Vec<CMatrix>, labels: Vec<usize>) -> Result<Self> {
        assert_eq!(operators.len(), labels.len());
        assert!(!operators.is_empty());
        let din = operators[0].cols();
        let mut sum = CMatrix::zeros(din, din);
        for v in &operators {
            if v.cols() != din {
                return Err(Error::DimensionMismatch { expected: din, got: v.cols() });
            }
            sum = sum.add(&v.dagger().mul(v));
        }
        let defect = sum.sub(&CMatrix::identity(din)).max_abs();
        if defect > STRUCT_TOL {
            return Err(Error::IncompleteBasis { defect });
        }
        Ok(KrausFamily { operators, labels })
    }

    pub fn operators(&self) -> &[CMatrix] {
        &self.operators
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.operators.len()
    }

    pub fn is_empty(&self) -> bool {
        self.operators.is_empty()
    }

    /// Completeness defect `||sum V^dag V - I||_max`.
    pub fn completeness_defect(&self) -> f64 {
        let din = self.operators[0].cols();
        let mut sum = CMatrix::zeros(din, din);
        for v in &self.operators {
            sum = sum.add(&v.dagger().mul(v));
        }
        sum.sub(&CMatrix::identity(din)).max_abs()
    }
}

/// Extracts the Kraus family of a unitary coupling on a bipartite space:
/// `V_k = (<xi_k| at instrument) U (|prepared> at instrument)`.
///
/// `dims` are the (first, second) factor dimensions of the row-major
/// composite; `instrument` selects which factor carries the prepared
/// vector and readout basis.
pub fn kraus_from_unitary(
    u: &CMatrix,
    dims: (usize, usize),
    instrument: Subsystem,
    prepared: &Ket,
    basis: &[Ket],
) -> Result<KrausFamily> {
    let (d1, d2) = dims;
    if !u.is_square() || u.rows() != d1 * d2 {
        return Err(Error::DimensionMismatch { expected: d1 * d2, got: u.rows() });
    }
    let unit_defect = u.dagger().mul(u).sub(&CMatrix::identity(u.rows())).max_abs();
    if unit_defect > STRUCT_TOL {
        return Err(Error::NotUnitary { defect: unit_defect });
    }
    let (dk, dobj) = match instrument {
        Subsystem::First => (d1, d2),
        Subsystem::Second => (d2, d1),
    };
    if prepared.dim() != dk {
        return Err(Error::DimensionMismatch { expected: dk, got: prepared.dim() });
    }
    if !prepared.is_normalized(STRUCT_TOL) {
        return Err(Error::NotNormalized { norm: prepared.norm() });
    }
    if basis.len() != dk {
        return Err(Error::IncompleteBasis { defect: (basis.len() as f64 - dk as f64).abs() });
    }
    for (i, bi) in basis.iter().enumerate() {
        if bi.dim() != dk {
            return Err(Error::DimensionMismatch { expected: dk, got: bi.dim() });
        }
        for (j, bj) in basis.iter().enumerate() {
            let want = if i == j { 1.0 } else { 0.0 };
            let defect = (bi.inner(bj) - C64::new(want, 0.0)).norm();
            if defect > STRUCT_TOL {
                return Err(Error::IncompleteBasis { defect });
            }
        }
    }
    let idx = |obj_row: usize, k_row: usize| -> usize {
        match instrument {
            Subsystem::First => k_row * dobj + obj_row,
            Subsystem::Second => obj_row * dk + k_row,
        }
    };
    let mut ops = Vec::with_capacity(dk);
    for xi in basis {
        let mut v = CMatrix::zeros(dobj, dobj);
        for a in 0..dobj {
            for b in 0..dobj {
                let mut acc = ZERO;
                for c in 0..dk {
                    let xc = xi.amp()[c].conj();
                    if xc == ZERO {
                        continue;
                    }
                    for dd in 0..dk {
                        let pd = prepared.amp()[dd];
                        if pd == ZERO {
                            continue;
                        }
                        acc += xc * u[(idx(a, c), idx(b, dd))] * pd;
                    }
                }
                v[(a, b)] = acc;
            }
        }
        ops.push(v);
    }
    KrausFamily::new(ops, (0..dk).collect())
}

/// Von Neumann-Lueders projection postulate: `psi -> P psi / ||P psi||`.
/// A vanishing norm signals an impossible observation.
pub fn project_postulate(psi: &Ket, p: &Projector) -> Result<Ket> {
    assert_eq!(psi.dim(), p.dim(), "project_postulate dimension mismatch");
    let projected = p.matrix().apply(psi);
    let norm = projected.norm();
    if norm <= PROB_FLOOR.sqrt() {
        return Err(Error::ImpossibleObservation);
    }
    Ok(projected.scale(C64::new(1.0 / norm, 0.0)))
}

/// Conditional expectation of `x` at time `t = r + s` on the two-outcome
/// resolution `{P, I-P}` observed at time `s`, with the system evolved by
/// `u_r` in between:
/// `e = sum (E_s[P U^dag X U P] / E_s[P]) P` over nonzero-probability
/// branches. Returns the estimate and the law-of-total-probability defect
/// `|E_s[e] - E_s[U^dag X U]|`, which is generically nonzero for a pure
/// state at time `s`.
pub fn two_time_cond_exp(
    x: &CMatrix,
    u_r: &CMatrix,
    p: &Projector,
    state_s: &NormalState,
) -> Result<(CMatrix, f64)> {
    let d = state_s.dim();
    if x.rows() != d || u_r.rows() != d || p.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: x.rows() });
    }
    let evolved = u_r.dagger().mul(x).mul(u_r);
    let mut estimate = CMatrix::zeros(d, d);
    let mut ltp_lhs = ZERO;
    let mut any = false;
    for proj in [p.clone(), p.complement()] {
        let prob = state_s.expect(proj.matrix()).re;
        if prob <= PROB_FLOOR {
            continue;
        }
        any = true;
        let pinched = proj.matrix().mul(&evolved).mul(proj.matrix());
        let val = state_s.expect(&pinched) / prob;
        estimate = estimate.add(&proj.matrix().scale(val));
        ltp_lhs += val * prob;
    }
    if !any {
        return Err(Error::ZeroProbability);
    }
    let defect = (ltp_lhs - state_s.expect(&evolved)).norm();
    Ok((estimate, defect))
}

/// Residuals of a purification round trip, all of which should vanish for
/// a valid construction: marginal recovery, the intertwining relation, and
/// the expectation correspondence `<psi|(X (x) P_k)|psi> = Tr[rho E_k X E_k]`
/// for the supplied test observables.
pub fn purification_residuals(
    rho: &NormalState,
    res: &OrthoResolution,
    pur: &Purification,
    test_observables: &[CMatrix],
) -> Result<(f64, f64, f64)> {
    let d = rho.dim();
    let dim_k = pur.dual.dim();
    let joint = pur.psi.outer(&pur.psi);
    let marginal = partial_trace(&joint, (d, dim_k), Subsystem::First)?;
    let marginal_residual = marginal.sub(&rho.density()).max_abs();

    let mut intertwine_residual = 0.0f64;
    for (e, p) in res.projectors().iter().zip(pur.dual.projectors()) {
        let lhs = e.matrix().mul(&pur.psi_tilde);
        let rhs = pur.psi_tilde.mul(&p.matrix().transpose());
        intertwine_residual = intertwine_residual.max(lhs.sub(&rhs).max_abs());
    }

    // psi reshapes to psi~.
    let reshaped = ket_as_map(&pur.psi, (d, dim_k))?;
    intertwine_residual = intertwine_residual.max(reshaped.sub(&pur.psi_tilde).max_abs());

    let mut corr_residual = 0.0f64;
    let dens = rho.density();
    for x in test_observables {
        for (e, p) in res.projectors().iter().zip(pur.dual.projectors()) {
            let lhs = pur.psi.expect(&kron(x, p.matrix()));
            let rhs = dens.mul(&e.matrix().mul(x).mul(e.matrix())).trace();
            corr_residual = corr_residual.max((lhs - rhs).norm());
        }
    }
    Ok((marginal_residual, intertwine_residual, corr_residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::RngStream;
    use crate::randmat;

    fn sigma_x() -> CMatrix {
        CMatrix::from_real(&[&[0.0, 1.0], &[1.0, 0.0]])
    }

    fn plus_state() -> Ket {
        Ket::from_real(&[core::f64::consts::FRAC_1_SQRT_2, core::f64::consts::FRAC_1_SQRT_2])
    }

    #[test]
    fn commutant_cond_exp_fixes_commuting_operators() {
        let p = Projector::onto(&Ket::basis(2, 0)).unwrap();
        let a = CMatrix::from_real(&[&[0.3, 0.0], &[0.0, 0.9]]);
        assert!(cond_exp_commutant(&a, &p).sub(&a).max_abs() <= 1e-15);
        // Unital.
        let id = CMatrix::identity(2);
        assert!(cond_exp_commutant(&id, &p).sub(&id).max_abs() <= 1e-15);
    }

    #[test]
    fn commutant_cond_exp_kills_off_diagonal() {
        let p = Projector::onto(&Ket::basis(2, 0)).unwrap();
        let out = cond_exp_commutant(&sigma_x(), &p);
        assert!(out.max_abs() <= 1e-15);
    }

    #[test]
    fn commutant_cond_exp_idempotent_and_commutes() {
        let mut rng = RngStream::new(5, 0);
        let p = randmat::random_projector(4, 2, &mut rng);
        let a = randmat::random_hermitian(4, &mut rng);
        let once = cond_exp_commutant(&a, &p);
        let twice = cond_exp_commutant(&once, &p);
        assert!(twice.sub(&once).max_abs() <= 1e-12);
        assert!(once.commutator(p.matrix()).max_abs() <= 1e-12);
    }

    #[test]
    fn abelian_cond_exp_fixes_its_range_and_is_unital() {
        let res = OrthoResolution::standard_basis(3);
        let state = NormalState::mixed(CMatrix::from_real(&[
            &[0.5, 0.0, 0.0],
            &[0.0, 0.3, 0.0],
            &[0.0, 0.0, 0.2],
        ]))
        .unwrap();
        // a in span{P_k} comes back unchanged.
        let a = CMatrix::from_real(&[&[2.0, 0.0, 0.0], &[0.0, -1.0, 0.0], &[0.0, 0.0, 7.0]]);
        let out = cond_exp_abelian(&a, &res, &state).unwrap();
        assert!(out.sub(&a).max_abs() <= 1e-12);
        let id = CMatrix::identity(3);
        assert!(cond_exp_abelian(&id, &res, &state).unwrap().sub(&id).max_abs() <= 1e-12);
    }

    #[test]
    fn abelian_cond_exp_module_property() {
        // e(C1 A C2) = C1 e(A) C2 for C's in the span of the resolution.
        let mut rng = RngStream::new(8, 0);
        let blocks = randmat::random_resolution(4, &[2, 2], &mut rng);
        let res = OrthoResolution::indexed(blocks).unwrap();
        let state = NormalState::pure(randmat::random_ket(4, &mut rng)).unwrap();
        let a = randmat::random_hermitian(4, &mut rng);
        let c1 = res.projectors()[0].matrix().scale_re(0.7).add(&res.projectors()[1].matrix().scale_re(-1.3));
        let c2 = res.projectors()[0].matrix().scale_re(2.1).add(&res.projectors()[1].matrix().scale_re(0.4));
        let lhs = cond_exp_abelian(&c1.mul(&a).mul(&c2), &res, &state).unwrap();
        let rhs = c1.mul(&cond_exp_abelian(&a, &res, &state).unwrap()).mul(&c2);
        assert!(lhs.sub(&rhs).max_abs() <= 1e-10);
    }

    #[test]
    fn abelian_cond_exp_positive_on_psd() {
        let mut rng = RngStream::new(9, 0);
        for _ in 0..20 {
            let blocks = randmat::random_resolution(4, &[1, 3], &mut rng);
            let res = OrthoResolution::indexed(blocks).unwrap();
            let state = NormalState::pure(randmat::random_ket(4, &mut rng)).unwrap();
            let g = randmat::gaussian_matrix(4, 4, &mut rng);
            let psd = g.mul(&g.dagger());
            let out = cond_exp_abelian(&psd, &res, &state).unwrap();
            let eig = eig_hermitian(&out, 1e-9).unwrap();
            assert!(eig.min_eigenvalue() >= -1e-9);
        }
    }

    #[test]
    fn abelian_cond_exp_epce_weights_on_entangled_state() {
        // a = X (x) 1 with the resolution acting on the second factor:
        // coefficients must be E[X (x) P_k] / E[1 (x) P_k].
        let psi = Ket::new(alloc::vec![
            C64::new(0.5, 0.1),
            C64::new(0.2, -0.4),
            C64::new(-0.3, 0.2),
            C64::new(0.6, 0.1),
        ])
        .normalized()
        .unwrap();
        let state = NormalState::pure(psi.clone()).unwrap();
        let x = sigma_x();
        let a = kron(&x, &CMatrix::identity(2));
        let projectors: Vec<Projector> = (0..2)
            .map(|k| {
                Projector::new(
                    kron(&CMatrix::identity(2), Projector::onto(&Ket::basis(2, k)).unwrap().matrix()),
                    1e-10,
                )
                .unwrap()
            })
            .collect();
        let res = OrthoResolution::indexed(projectors.clone()).unwrap();
        let out = cond_exp_abelian(&a, &res, &state).unwrap();
        for k in 0..2 {
            let num = psi.expect(&kron(&x, Projector::onto(&Ket::basis(2, k)).unwrap().matrix()));
            let den = psi.expect(projectors[k].matrix());
            let weight = num / den;
            // Compare against the coefficient of P_k in the output.
            let coeff = out.frobenius_inner(projectors[k].matrix())
                / projectors[k].matrix().frobenius_inner(projectors[k].matrix());
            assert!((coeff.conj() - weight).norm() <= 1e-12);
        }
    }

    #[test]
    fn abelian_cond_exp_zero_probability_errors() {
        let res = OrthoResolution::standard_basis(2);
        // A state supported nowhere is impossible; emulate by a resolution
        // restricted to a zero-weight branch via a doctored 1-outcome check:
        // both outcomes have zero probability only if the state is zero,
        // which NormalState forbids; instead check the single-branch drop.
        let state = NormalState::pure(Ket::basis(2, 0)).unwrap();
        let a = sigma_x();
        let out = cond_exp_abelian(&a, &res, &state).unwrap();
        // Outcome 1 has zero probability and is dropped; e(sigma_x) = 0.
        assert!(out.max_abs() <= 1e-12);
    }

    #[test]
    fn ltp_holds_for_commuting_observable() {
        let res = OrthoResolution::standard_basis(2);
        let state = NormalState::pure(plus_state()).unwrap();
        let a = CMatrix::from_real(&[&[0.7, 0.0], &[0.0, -0.2]]);
        let (holds, defect) = check_ltp(&a, &res, &state, 1e-10).unwrap();
        assert!(holds, "defect {defect}");
    }

    #[test]
    fn ltp_holds_for_pinched_state() {
        let mut rng = RngStream::new(12, 0);
        let blocks = randmat::random_resolution(4, &[2, 2], &mut rng);
        let res = OrthoResolution::indexed(blocks).unwrap();
        let rho = randmat::random_pinched_density(res.projectors(), &mut rng);
        let state = NormalState::mixed(rho).unwrap();
        for _ in 0..100 {
            let a = randmat::random_hermitian(4, &mut rng);
            let (holds, defect) = check_ltp(&a, &res, &state, 1e-9).unwrap();
            assert!(holds, "defect {defect}");
        }
    }

    #[test]
    fn ltp_fails_with_defect_one_on_qubit_witness() {
        let res = OrthoResolution::standard_basis(2);
        let state = NormalState::pure(plus_state()).unwrap();
        let (holds, defect) = check_ltp(&sigma_x(), &res, &state, 1e-10).unwrap();
        assert!(!holds);
        assert!((defect - 1.0).abs() <= 1e-12, "defect {defect}");
    }

    #[test]
    fn ltp_generic_state_has_failing_observable() {
        let mut rng = RngStream::new(14, 0);
        let res = OrthoResolution::standard_basis(4);
        let state = NormalState::pure(randmat::random_ket(4, &mut rng)).unwrap();
        let mut found = false;
        for _ in 0..100 {
            let a = randmat::random_hermitian(4, &mut rng);
            let (holds, _) = check_ltp(&a, &res, &state, 1e-9).unwrap();
            if !holds {
                found = true;
                break;
            }
        }
        assert!(found, "generic pure state should violate LTP for some observable");
    }

    #[test]
    fn purify_maximally_mixed_qubit() {
        let rho = NormalState::mixed(CMatrix::identity(2).scale_re(0.5)).unwrap();
        let res = OrthoResolution::standard_basis(2);
        let pur = purify_pinched(&rho, &res).unwrap();
        assert_eq!(pur.dual.dim(), 2);
        for p in pur.dual.projectors() {
            assert_eq!(p.rank(), 1);
        }
        let x_tests = [CMatrix::identity(2), sigma_x()];
        let (m, i, c) = purification_residuals(&rho, &res, &pur, &x_tests).unwrap();
        assert!(m <= 1e-12 && i <= 1e-12 && c <= 1e-12, "residuals {m} {i} {c}");
        // psi = (|0>|xi0> + |1>|xi1|)/sqrt(2) up to phases: amplitude
        // pattern has exactly two entries of modulus 1/sqrt(2).
        let mags: Vec<f64> = pur.psi.amp().iter().map(|z| z.norm()).collect();
        let big: Vec<_> = mags.iter().filter(|m| **m > 0.5).collect();
        assert_eq!(big.len(), 2);
        for m in big {
            assert!((m - core::f64::consts::FRAC_1_SQRT_2).abs() <= 1e-12);
        }
    }

    #[test]
    fn purify_zero_probability_block_gets_extra_dimension() {
        // rho supported on |0> only; the |1> outcome has zero probability.
        let rho = NormalState::pure(Ket::basis(2, 0)).unwrap();
        let res = OrthoResolution::standard_basis(2);
        let pur = purify_pinched(&rho, &res).unwrap();
        // One retained vector + one extra dimension.
        assert_eq!(pur.dual.dim(), 2);
        assert_eq!(pur.dual.projectors()[1].rank(), 1);
        // The extra column of psi~ is zero.
        let (m, i, c) =
            purification_residuals(&rho, &res, &pur, &[sigma_x(), CMatrix::identity(2)]).unwrap();
        assert!(m <= 1e-12 && i <= 1e-12 && c <= 1e-12);
    }

    #[test]
    fn purify_pure_commuting_case() {
        // Pinched pure state: rho' = sum_k E_k psi psi^dag E_k with
        // E_k |psi> = c_k |phi_k>; the purification columns match E_k psi
        // up to phase.
        let psi = Ket::new(alloc::vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
        ]);
        let res = OrthoResolution::standard_basis(2);
        let pinched = res.pinch(&psi.outer(&psi));
        let rho = NormalState::mixed(pinched).unwrap();
        let pur = purify_pinched(&rho, &res).unwrap();
        for (k, e) in res.projectors().iter().enumerate() {
            let target = e.matrix().apply(&psi);
            let cols = &pur.dual.projectors()[k];
            // Find the column: psi~ restricted to the dual block.
            let block = pur.psi_tilde.mul(&cols.matrix().transpose());
            // Compare |<target, block col>| with ||target||^2 summed.
            let mut overlap = 0.0;
            for col in 0..pur.dual.dim() {
                let colvec = Ket::new((0..2).map(|r| block[(r, col)]).collect());
                overlap += colvec.inner(&target).norm();
            }
            assert!((overlap - target.norm() * target.norm()).abs() <= 1e-10);
        }
    }

    #[test]
    fn purify_rejects_unpinched_state() {
        let rho = NormalState::pure(plus_state()).unwrap();
        let res = OrthoResolution::standard_basis(2);
        assert!(matches!(purify_pinched(&rho, &res), Err(Error::PinchingViolated { .. })));
    }

    #[test]
    fn kraus_from_identity_unitary() {
        let u = CMatrix::identity(4);
        let basis: Vec<Ket> = (0..2).map(|i| Ket::basis(2, i)).collect();
        let fam =
            kraus_from_unitary(&u, (2, 2), Subsystem::Second, &Ket::basis(2, 0), &basis).unwrap();
        assert!(fam.operators()[0].sub(&CMatrix::identity(2)).max_abs() <= 1e-15);
        assert!(fam.operators()[1].max_abs() <= 1e-15);
    }

    #[test]
    fn kraus_from_swap() {
        // SWAP on C2 (x) C2 with prepared |0>: V_k = |0><k|.
        let mut swap = CMatrix::zeros(4, 4);
        for a in 0..2 {
            for b in 0..2 {
                swap[(a * 2 + b, b * 2 + a)] = crate::linalg::ONE;
            }
        }
        let basis: Vec<Ket> = (0..2).map(|i| Ket::basis(2, i)).collect();
        let fam =
            kraus_from_unitary(&swap, (2, 2), Subsystem::Second, &Ket::basis(2, 0), &basis)
                .unwrap();
        for k in 0..2 {
            let expect = Ket::basis(2, 0).outer(&Ket::basis(2, k));
            assert!(fam.operators()[k].sub(&expect).max_abs() <= 1e-15);
        }
    }

    #[test]
    fn kraus_completeness_for_random_unitaries() {
        let mut rng = RngStream::new(21, 0);
        for _ in 0..10 {
            let u = randmat::haar_unitary(6, &mut rng);
            let basis: Vec<Ket> = (0..3).map(|i| Ket::basis(3, i)).collect();
            let fam =
                kraus_from_unitary(&u, (2, 3), Subsystem::Second, &Ket::basis(3, 0), &basis)
                    .unwrap();
            assert!(fam.completeness_defect() <= 1e-12);
        }
    }

    #[test]
    fn kraus_rejects_bad_inputs() {
        let not_unitary = CMatrix::identity(4).scale_re(0.5);
        let basis: Vec<Ket> = (0..2).map(|i| Ket::basis(2, i)).collect();
        assert!(matches!(
            kraus_from_unitary(&not_unitary, (2, 2), Subsystem::Second, &Ket::basis(2, 0), &basis),
            Err(Error::NotUnitary { .. })
        ));
        let incomplete: Vec<Ket> = alloc::vec![Ket::basis(2, 0)];
        assert!(matches!(
            kraus_from_unitary(
                &CMatrix::identity(4),
                (2, 2),
                Subsystem::Second,
                &Ket::basis(2, 0),
                &incomplete
            ),
            Err(Error::IncompleteBasis { .. })
        ));
    }

    #[test]
    fn projection_postulate_examples() {
        let p = Projector::onto(&Ket::basis(2, 0)).unwrap();
        // psi already in range: unchanged.
        let psi0 = Ket::basis(2, 0);
        assert!(project_postulate(&psi0, &p).unwrap().max_abs_diff(&psi0) <= 1e-15);
        // Basis measurement.
        let out = project_postulate(&plus_state(), &p).unwrap();
        assert!(out.max_abs_diff(&Ket::basis(2, 0)) <= 1e-15);
        // Forbidden branch.
        let psi1 = Ket::basis(2, 1);
        assert_eq!(project_postulate(&psi1, &p), Err(Error::ImpossibleObservation));
    }

    #[test]
    fn two_time_trivial_evolution_compatible_observable() {
        // u_r = I and [X (x) 1, P] = 0 gives zero defect.
        let x = CMatrix::from_real(&[&[1.0, 0.0], &[0.0, -1.0]]);
        let big_x = kron(&x, &CMatrix::identity(2));
        let p = Projector::new(
            kron(&CMatrix::identity(2), Projector::onto(&Ket::basis(2, 0)).unwrap().matrix()),
            1e-10,
        )
        .unwrap();
        let mut rng = RngStream::new(23, 0);
        let state = NormalState::pure(randmat::random_ket(4, &mut rng)).unwrap();
        let (_, defect) =
            two_time_cond_exp(&big_x, &CMatrix::identity(4), &p, &state).unwrap();
        assert!(defect <= 1e-12);
    }

    #[test]
    fn two_time_cat_coupling_breaks_ltp_for_generic_state() {
        // The 6-dimensional coupling operator as the evolution between the
        // preparation and a cat-level readout: a generic pure state at the
        // observation time fails the two-time LTP for p < 1.
        let s = crate::cat::build_s(0.6).unwrap();
        // Composite layout is cat-major: observable 1_cat (x) X_atom,
        // readout projector |0><0|_cat (x) 1_atom.
        let x = kron(&CMatrix::identity(3), &crate::cat::sigma_z());
        let p = Projector::new(
            kron(
                Projector::onto(&Ket::basis(3, 0)).unwrap().matrix(),
                &CMatrix::identity(2),
            ),
            1e-10,
        )
        .unwrap();
        let mut rng = RngStream::new(25, 0);
        let state = NormalState::pure(randmat::random_ket(6, &mut rng)).unwrap();
        let (estimate, defect) = two_time_cond_exp(&x, &s, &p, &state).unwrap();
        assert!(defect > 1e-3, "generic state should break LTP, defect {defect}");
        // The estimate lives in span{P, Q}.
        assert!(estimate.commutator(p.matrix()).max_abs() <= 1e-10);
    }

    #[test]
    fn two_time_pinched_state_restores_ltp() {
        let mut rng = RngStream::new(24, 0);
        let p = Projector::new(
            kron(&CMatrix::identity(2), Projector::onto(&Ket::basis(2, 0)).unwrap().matrix()),
            1e-10,
        )
        .unwrap();
        let res = OrthoResolution::indexed(alloc::vec![p.clone(), p.complement()]).unwrap();
        let rho = randmat::random_pinched_density(res.projectors(), &mut rng);
        let state = NormalState::mixed(rho).unwrap();
        let u = randmat::haar_unitary(4, &mut rng);
        let x = kron(&randmat::random_hermitian(2, &mut rng), &CMatrix::identity(2));
        // Evolution inside the commutant of the resolution keeps LTP; here
        // the pinched *state* is what restores it even for entangling u_r
        // only when u_r preserves the pinching. Use the block-diagonal u.
        let blocked = res.pinch(&u);
        // blocked is generally not unitary; orthonormalize by polar-free
        // check: instead take u = exp-free block unitary built from two
        // independent 2x2 unitaries acting on the P and Q ranges.
        let _ = blocked;
        let u1 = randmat::haar_unitary(2, &mut rng);
        let u2 = randmat::haar_unitary(2, &mut rng);
        // P = 1 (x) |0><0| block ordering: columns interleave, build
        // directly: U = u1 (x) |0><0| + u2 (x) |1><1|.
        let e0 = Projector::onto(&Ket::basis(2, 0)).unwrap();
        let e1 = Projector::onto(&Ket::basis(2, 1)).unwrap();
        let u_block = kron(&u1, e0.matrix()).add(&kron(&u2, e1.matrix()));
        let (_, defect) = two_time_cond_exp(&x, &u_block, &p, &state).unwrap();
        assert!(defect <= 1e-10, "defect {defect}");
    }
}
