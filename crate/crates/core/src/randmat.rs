//! Random test-instance generators: Gaussian matrices, Haar-ish unitaries
//! via Gram-Schmidt, random projectors, densities and orthogonal
//! resolutions. Deterministic given the supplied [`RngStream`].

use alloc::vec::Vec;
#[cfg_attr(test, allow(unused_imports))]
use num_traits::Float;

use crate::filter::RngStream;
use crate::linalg::{CMatrix, Ket, Projector, C64};

/// Standard complex Gaussian entry (Box-Muller).
pub fn gaussian_c64(rng: &mut RngStream) -> C64 {
    let u1 = rng.uniform();
    let u2 = rng.uniform();
    let r = (-2.0 * u1.ln()).sqrt();
    let theta = 2.0 * core::f64::consts::PI * u2;
    // Real and imaginary parts each N(0, 1/2) so |z|^2 has mean 1.
    C64::new(r * theta.cos() * core::f64::consts::FRAC_1_SQRT_2, r * theta.sin() * core::f64::consts::FRAC_1_SQRT_2)
}

pub fn gaussian_matrix(rows: usize, cols: usize, rng: &mut RngStream) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| gaussian_c64(rng))
}

/// Random Hermitian matrix `(G + G^dag)/2`.
pub fn random_hermitian(dim: usize, rng: &mut RngStream) -> CMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    g.add(&g.dagger()).scale_re(0.5)
}

/// Haar-ish unitary: modified Gram-Schmidt on a Gaussian matrix.
pub fn haar_unitary(dim: usize, rng: &mut RngStream) -> CMatrix {
    loop {
        let g = gaussian_matrix(dim, dim, rng);
        if let Some(u) = gram_schmidt_columns(&g) {
            return u;
        }
    }
}

fn gram_schmidt_columns(g: &CMatrix) -> Option<CMatrix> {
    let n = g.rows();
    let mut cols: Vec<Ket> = (0..n)
        .map(|j| Ket::new((0..n).map(|i| g[(i, j)]).collect()))
        .collect();
    for j in 0..n {
        for k in 0..j {
            let c = cols[k].inner(&cols[j]);
            cols[j] = cols[j].sub(&cols[k].scale(c));
        }
        // Second pass for numerical orthogonality.
        for k in 0..j {
            let c = cols[k].inner(&cols[j]);
            cols[j] = cols[j].sub(&cols[k].scale(c));
        }
        let norm = cols[j].norm();
        if norm < 1e-8 {
            return None;
        }
        cols[j] = cols[j].scale(C64::new(1.0 / norm, 0.0));
    }
    Some(CMatrix::from_fn(n, n, |i, j| cols[j].amp()[i]))
}

/// Random rank-`rank` projector from a random orthonormal frame.
pub fn random_projector(dim: usize, rank: usize, rng: &mut RngStream) -> Projector {
    assert!(rank <= dim);
    if rank == 0 {
        return Projector::zero(dim);
    }
    let u = haar_unitary(dim, rng);
    let frame: Vec<Ket> = (0..rank)
        .map(|j| Ket::new((0..dim).map(|i| u[(i, j)]).collect()))
        .collect();
    Projector::from_frame(&frame).expect("frame is orthonormal")
}

/// Random density `G G^dag / Tr`.
pub fn random_density(dim: usize, rng: &mut RngStream) -> CMatrix {
    let g = gaussian_matrix(dim, dim, rng);
    let pos = g.mul(&g.dagger());
    let t = pos.trace().re;
    pos.scale_re(1.0 / t)
}

/// Random normalized ket.
pub fn random_ket(dim: usize, rng: &mut RngStream) -> Ket {
    loop {
        let v = Ket::new((0..dim).map(|_| gaussian_c64(rng)).collect());
        if let Ok(n) = v.normalized() {
            return n;
        }
    }
}

/// Random complete orthogonal resolution on `dim` with the given block
/// ranks (ranks must sum to `dim`; zero ranks yield zero projectors).
pub fn random_resolution(dim: usize, ranks: &[usize], rng: &mut RngStream) -> Vec<Projector> {
    assert_eq!(ranks.iter().sum::<usize>(), dim, "ranks must sum to dim");
    let u = haar_unitary(dim, rng);
    let mut start = 0;
    let mut out = Vec::with_capacity(ranks.len());
    for &r in ranks {
        if r == 0 {
            out.push(Projector::zero(dim));
            continue;
        }
        let frame: Vec<Ket> = (start..start + r)
            .map(|j| Ket::new((0..dim).map(|i| u[(i, j)]).collect()))
            .collect();
        out.push(Projector::from_frame(&frame).expect("orthonormal frame"));
        start += r;
    }
    out
}

/// Random density pinched by a resolution: `sum_k E_k M E_k / Tr`, so the
/// result commutes with every block.
pub fn random_pinched_density(blocks: &[Projector], rng: &mut RngStream) -> CMatrix {
    let dim = blocks[0].dim();
    let m = random_density(dim, rng);
    let mut out = CMatrix::zeros(dim, dim);
    for e in blocks {
        out = out.add(&e.matrix().mul(&m).mul(e.matrix()));
    }
    let t = out.trace().re;
    out.scale_re(1.0 / t)
}
