//! Dense and sparse complex helpers shared by the representation modules.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use sprs::{CsMat, TriMat};

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;
pub type SpMat = CsMat<C64>;

pub const I: C64 = C64 { re: 0.0, im: 1.0 };

pub fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

pub fn to_complex(m: &DMatrix<f64>) -> CMat {
    m.map(re)
}

pub fn comm(a: &CMat, b: &CMat) -> CMat {
    a * b - b * a
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Eigen-decomposition of a Hermitian matrix, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let herm = (m + m.adjoint()) * re(0.5);
    let eig = SymmetricEigen::new(herm);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].partial_cmp(&eig.eigenvalues[b]).unwrap());
    let vals = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vecs = CMat::from_fn(m.nrows(), order.len(), |r, c| eig.eigenvectors[(r, order[c])]);
    (vals, vecs)
}

/// `(X_a (x) 1 + 1 (x) X_b) v` with `v` indexed `ia * db + ib`.
pub fn kron_sum_apply(xa: &CMat, xb: &CMat, v: &CVec) -> CVec {
    let (da, db) = (xa.nrows(), xb.nrows());
    let vm = CMat::from_row_slice(da, db, v.as_slice());
    let r = xa * &vm + &vm * xb.transpose();
    CVec::from_iterator(da * db, r.transpose().iter().cloned())
}

pub fn sparse_from_triplets(nrows: usize, ncols: usize, trip: &[(usize, usize, C64)]) -> SpMat {
    let mut t = TriMat::new((nrows, ncols));
    for &(r, c, v) in trip {
        t.add_triplet(r, c, v);
    }
    t.to_csr()
}

pub fn sparse_identity(n: usize) -> SpMat {
    CsMat::eye(n)
}

/// Sparse `a + s * b`.
pub fn axpy(a: &SpMat, s: C64, b: &SpMat) -> SpMat {
    let sb = b.map(|x| x * s);
    a + &sb
}

pub fn scale(a: &SpMat, s: C64) -> SpMat {
    a.map(|x| x * s)
}

pub fn spcomm(a: &SpMat, b: &SpMat) -> SpMat {
    let ab = a * b;
    let ba = b * a;
    axpy(&ab, re(-1.0), &ba)
}

pub fn frob(a: &SpMat) -> f64 {
    a.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius inner product `sum conj(a) b`.
pub fn spdot(a: &SpMat, b: &SpMat) -> C64 {
    let a = if a.is_csr() { a.clone() } else { a.to_csr() };
    let b = if b.is_csr() { b.clone() } else { b.to_csr() };
    let mut acc = C64::new(0.0, 0.0);
    for (ra, rb) in a.outer_iterator().zip(b.outer_iterator()) {
        let (ia, va) = (ra.indices(), ra.data());
        let (ib, vb) = (rb.indices(), rb.data());
        let (mut p, mut q) = (0, 0);
        while p < ia.len() && q < ib.len() {
            match ia[p].cmp(&ib[q]) {
                std::cmp::Ordering::Less => p += 1,
                std::cmp::Ordering::Greater => q += 1,
                std::cmp::Ordering::Equal => {
                    acc += va[p].conj() * vb[q];
                    p += 1;
                    q += 1;
                }
            }
        }
    }
    acc
}

/// Column selector `S` with `A S = A[:, cols]`.
pub fn selector(n: usize, cols: &[usize]) -> SpMat {
    let trip: Vec<_> = cols.iter().enumerate().map(|(k, &c)| (c, k, re(1.0))).collect();
    sparse_from_triplets(n, cols.len(), &trip)
}

/// Diagonal sparse matrix.
pub fn sparse_diag(d: &[C64]) -> SpMat {
    let trip: Vec<_> = d.iter().enumerate().filter(|(_, v)| v.norm() != 0.0).map(|(k, &v)| (k, k, v)).collect();
    sparse_from_triplets(d.len(), d.len(), &trip)
}

/// Drops stored entries below `tol` in magnitude.
pub fn prune(a: &SpMat, tol: f64) -> SpMat {
    let mut trip = Vec::with_capacity(a.nnz());
    for (v, (r, c)) in a.iter() {
        if v.norm() > tol {
            trip.push((r, c, *v));
        }
    }
    sparse_from_triplets(a.rows(), a.cols(), &trip)
}

pub fn to_dense(a: &SpMat) -> CMat {
    let mut m = CMat::zeros(a.rows(), a.cols());
    for (v, (r, c)) in a.iter() {
        m[(r, c)] += *v;
    }
    m
}

/// Hermitian adjoint of a sparse matrix.
pub fn adjoint(a: &SpMat) -> SpMat {
    let trip: Vec<_> = a.iter().map(|(v, (r, c))| (c, r, v.conj())).collect();
    sparse_from_triplets(a.cols(), a.rows(), &trip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kron_sum_matches_dense() {
        let xa = CMat::from_fn(3, 3, |r, c| C64::new(r as f64 + 0.3 * c as f64, c as f64 - r as f64));
        let xb = CMat::from_fn(2, 2, |r, c| C64::new(1.0 + r as f64 * c as f64, 0.5 * r as f64));
        let v = CVec::from_fn(6, |k, _| C64::new(k as f64, 1.0 - k as f64));
        let dense = xa.kronecker(&CMat::identity(2, 2)) + CMat::identity(3, 3).kronecker(&xb);
        assert!((kron_sum_apply(&xa, &xb, &v) - dense * v).norm() < 1e-12);
    }

    #[test]
    fn sparse_helpers() {
        let a = sparse_from_triplets(2, 2, &[(0, 1, re(2.0)), (1, 0, I)]);
        let b = sparse_from_triplets(2, 2, &[(0, 1, re(1.0)), (1, 1, re(3.0))]);
        assert_eq!(spdot(&a, &b), re(2.0));
        let c = spcomm(&a, &b);
        let dense = to_dense(&a) * to_dense(&b) - to_dense(&b) * to_dense(&a);
        assert!((to_dense(&c) - dense).norm() < 1e-15);
        let s = selector(2, &[1]);
        assert_eq!(to_dense(&(&a * &s)), CMat::from_column_slice(2, 1, &[re(2.0), re(0.0)]));
        assert!((to_dense(&adjoint(&a)) - to_dense(&a).adjoint()).norm() == 0.0);
    }

    #[test]
    fn eigh_sorted() {
        let m = CMat::from_row_slice(2, 2, &[re(2.0), I, -I, re(2.0)]);
        let (w, v) = eigh(&m);
        assert!((w[0] - 1.0).abs() < 1e-14 && (w[1] - 3.0).abs() < 1e-14);
        assert!((&m * v.column(0) - v.column(0) * re(w[0])).norm() < 1e-14);
    }
}
