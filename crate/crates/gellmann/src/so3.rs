//! su(2) kernel: Clebsch-Gordan coefficients, Casimir values and spin matrices.

use std::collections::HashMap;
use std::sync::RwLock;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use once_cell::sync::Lazy;

use crate::halfint::{tri, Half};

static CG_CACHE: Lazy<RwLock<HashMap<[i32; 6], f64>>> = Lazy::new(|| RwLock::new(HashMap::new()));

fn factorial(n: i32) -> BigInt {
    let mut acc = BigInt::one();
    for k in 2..=n {
        acc *= k;
    }
    acc
}

/// Exact squared magnitude and sign of a Condon-Shortley coefficient, from the Racah sum.
fn racah(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> (BigRational, i32) {
    // arguments are twice-values; every combination below is even by the selection rules
    let h = |x: i32| x / 2;
    let mut pre = BigRational::from_integer(BigInt::from(j + 1));
    pre *= BigRational::new(
        factorial(h(j + j1 - j2)) * factorial(h(j - j1 + j2)) * factorial(h(j1 + j2 - j)),
        factorial(h(j1 + j2 + j) + 1),
    );
    pre *= BigRational::from_integer(
        factorial(h(j + m))
            * factorial(h(j - m))
            * factorial(h(j1 - m1))
            * factorial(h(j1 + m1))
            * factorial(h(j2 - m2))
            * factorial(h(j2 + m2)),
    );
    let mut sum = BigRational::zero();
    let kmax = h(j1 + j2 - j).min(h(j1 - m1)).min(h(j2 + m2));
    let kmin = 0.max(h(j2 - j - m1)).max(h(j1 + m2 - j));
    for k in kmin..=kmax {
        let den = factorial(k)
            * factorial(h(j1 + j2 - j) - k)
            * factorial(h(j1 - m1) - k)
            * factorial(h(j2 + m2) - k)
            * factorial(h(j - j2 + m1) + k)
            * factorial(h(j - j1 - m2) + k);
        let term = BigRational::new(BigInt::one(), den);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let sign = if sum.is_zero() { 0 } else if sum.is_negative() { -1 } else { 1 };
    (pre * &sum * &sum, sign)
}

fn selection_ok(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> bool {
    m1 + m2 == m
        && tri(Half::from_twice(j1), Half::from_twice(j2), Half::from_twice(j))
        && m1.abs() <= j1
        && m2.abs() <= j2
        && m.abs() <= j
        && (j1 + m1) % 2 == 0
        && (j2 + m2) % 2 == 0
        && (j + m) % 2 == 0
}

/// Clebsch-Gordan coefficient on twice-value arguments.
pub fn cg_twice(j1: i32, m1: i32, j2: i32, m2: i32, j: i32, m: i32) -> f64 {
    if !selection_ok(j1, m1, j2, m2, j, m) {
        return 0.0;
    }
    let key = [j1, m1, j2, m2, j, m];
    if let Some(v) = CG_CACHE.read().unwrap().get(&key) {
        return *v;
    }
    let (sq, sign) = racah(j1, m1, j2, m2, j, m);
    let v = sign as f64 * sq.to_f64().unwrap_or(0.0).sqrt();
    CG_CACHE.write().unwrap().insert(key, v);
    v
}

/// `<j1 m1; j2 m2 | J M>` under Condon-Shortley phases.
pub fn cg_so3(j1: Half, m1: Half, j2: Half, m2: Half, j: Half, m: Half) -> f64 {
    cg_twice(j1.twice, m1.twice, j2.twice, m2.twice, j.twice, m.twice)
}

pub fn casimir_so3(j: Half) -> f64 {
    let x = j.value();
    x * (x + 1.0)
}

/// `J_+`, `J_-`, `J_z` on the basis `m = -j, ..., j`.
pub fn ladder_matrices(j: Half) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let d = (j.twice + 1) as usize;
    let jj = j.value();
    let mut jp = DMatrix::zeros(d, d);
    let mut jz = DMatrix::zeros(d, d);
    for (i, m) in j.projections().into_iter().enumerate() {
        let m = m.value();
        jz[(i, i)] = m;
        if i + 1 < d {
            jp[(i + 1, i)] = (jj * (jj + 1.0) - m * (m + 1.0)).sqrt();
        }
    }
    let jm = jp.transpose();
    (jp, jm, jz)
}

/// `[J_x, J_y, J_z]` on the basis `m = -j, ..., j`.
pub fn so3_generator_matrices(j: Half) -> [DMatrix<Complex64>; 3] {
    let (jp, jm, jz) = ladder_matrices(j);
    let c = |m: &DMatrix<f64>| m.map(|x| Complex64::new(x, 0.0));
    let (p, q) = (c(&jp), c(&jm));
    let jx = (&p + &q) * Complex64::new(0.5, 0.0);
    let jy = (&p - &q) * Complex64::new(0.0, -0.5);
    [jx, jy, c(&jz)]
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::SymmetricEigen;

    fn h(t: i32) -> Half {
        Half::from_twice(t)
    }

    fn comm(a: &DMatrix<Complex64>, b: &DMatrix<Complex64>) -> DMatrix<Complex64> {
        a * b - b * a
    }

    /// Independent oracle: diagonalise J^2 on the product weight space, fix the
    /// stretched phase and lower with J_-. Returns <j1 m1 j2 m2|J M> for all rows.
    fn ladder_oracle(j1: i32, j2: i32, jt: i32) -> HashMap<(i32, i32, i32), f64> {
        let (p1, m1, z1) = ladder_matrices(h(j1));
        let (p2, m2, z2) = ladder_matrices(h(j2));
        let (d1, d2) = (p1.nrows(), p2.nrows());
        let kron = |a: &DMatrix<f64>, b: &DMatrix<f64>| a.kronecker(b);
        let i1 = DMatrix::<f64>::identity(d1, d1);
        let i2 = DMatrix::<f64>::identity(d2, d2);
        let jp = kron(&p1, &i2) + kron(&i1, &p2);
        let jm = kron(&m1, &i2) + kron(&i1, &m2);
        let jz = kron(&z1, &i2) + kron(&i1, &z2);
        let j2op = &jm * &jp + &jz * &jz + &jz;
        let rows: Vec<(i32, i32)> = h(j1)
            .projections()
            .iter()
            .flat_map(|a| h(j2).projections().into_iter().map(move |b| (a.twice, b.twice)))
            .collect();
        let sel: Vec<usize> = (0..rows.len()).filter(|&i| rows[i].0 + rows[i].1 == jt).collect();
        let sub = DMatrix::from_fn(sel.len(), sel.len(), |a, b| j2op[(sel[a], sel[b])]);
        let eig = SymmetricEigen::new(sub);
        let target = h(jt).value() * (h(jt).value() + 1.0);
        let k = (0..sel.len()).find(|&k| (eig.eigenvalues[k] - target).abs() < 1e-8).unwrap();
        let mut v = nalgebra::DVector::zeros(rows.len());
        for (a, &i) in sel.iter().enumerate() {
            v[i] = eig.eigenvectors[(a, k)];
        }
        let top = rows.iter().position(|&r| r == (j1, jt - j1)).unwrap();
        if v[top] < 0.0 {
            v = -v;
        }
        let mut out = HashMap::new();
        let mut m = jt;
        loop {
            for (i, r) in rows.iter().enumerate() {
                if r.0 + r.1 == m {
                    out.insert((r.0, r.1, m), v[i]);
                }
            }
            if m == -jt {
                break;
            }
            let jj = h(jt).value();
            let mm = h(m).value();
            v = &jm * v / (jj * (jj + 1.0) - mm * (mm - 1.0)).sqrt();
            m -= 2;
        }
        out
    }

    #[test]
    fn documented_values() {
        assert!((cg_so3(h(1), h(1), h(1), h(1), h(2), h(2)) - 1.0).abs() < 1e-15);
        assert!((cg_so3(h(1), h(1), h(1), h(-1), h(0), h(0)) - 0.5f64.sqrt()).abs() < 1e-15);
        assert!((cg_so3(h(2), h(0), h(2), h(0), h(4), h(0)) - (2.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn selection_rules_give_zero() {
        assert_eq!(cg_so3(h(2), h(2), h(2), h(0), h(4), h(0)), 0.0);
        assert_eq!(cg_so3(h(2), h(0), h(2), h(0), h(8), h(0)), 0.0);
        assert_eq!(cg_so3(h(1), h(1), h(2), h(0), h(2), h(1)), 0.0);
    }

    #[test]
    fn matches_ladder_oracle() {
        for j1 in 0..=6 {
            for j2 in 0..=6 {
                for jt in ((j1 - j2).abs()..=j1 + j2).step_by(2) {
                    for ((a, b, m), v) in ladder_oracle(j1, j2, jt) {
                        let c = cg_twice(j1, a, j2, b, jt, m);
                        assert!((c - v).abs() < 1e-12, "{j1} {a} {j2} {b} {jt} {m}: {c} vs {v}");
                    }
                }
            }
        }
    }

    #[test]
    fn stretched_component_positive() {
        for j1 in 0..=8 {
            for j2 in 0..=8 {
                for jt in ((j1 - j2).abs()..=j1 + j2).step_by(2) {
                    assert!(cg_twice(j1, j1, j2, jt - j1, jt, jt) > 0.0);
                }
            }
        }
    }

    #[test]
    fn large_spin_finite() {
        let v = cg_twice(100, 0, 100, 0, 100, 0);
        assert!(v.is_finite());
        let norm: f64 = (-100..=100)
            .step_by(2)
            .map(|m| cg_twice(100, m, 100, -m, 0, 0).powi(2))
            .sum();
        assert!((norm - 1.0).abs() < 1e-12);
    }

    #[test]
    fn casimir_values() {
        assert_eq!(casimir_so3(h(0)), 0.0);
        assert_eq!(casimir_so3(h(1)), 0.75);
        assert_eq!(casimir_so3(h(4)), 6.0);
    }

    #[test]
    fn generator_algebra() {
        let z = so3_generator_matrices(h(0));
        assert!(z.iter().all(|m| m.shape() == (1, 1) && m[(0, 0)].norm() == 0.0));
        let half = so3_generator_matrices(h(1));
        let i = Complex64::i();
        let sx = DMatrix::from_row_slice(2, 2, &[0.0, 0.5, 0.5, 0.0]).map(|x| Complex64::new(x, 0.0));
        let sy = DMatrix::from_row_slice(2, 2, &[0.0.into(), i * 0.5, -i * 0.5, 0.0.into()]);
        let sz = DMatrix::from_row_slice(2, 2, &[-0.5, 0.0, 0.0, 0.5]).map(|x| Complex64::new(x, 0.0));
        assert!((&half[0] - sx).norm() < 1e-15);
        assert!((&half[1] - sy).norm() < 1e-15);
        assert!((&half[2] - sz).norm() < 1e-15);
        for t in 0..=8 {
            let [x, y, zz] = so3_generator_matrices(h(t));
            assert!((comm(&x, &y) - &zz * i).norm() < 1e-13);
            assert!((comm(&y, &zz) - &x * i).norm() < 1e-13);
            assert!((comm(&zz, &x) - &y * i).norm() < 1e-13);
        }
    }

    #[test]
    fn ladder_matches_vector_coupling() {
        // <j m+1|J_+|j m> = -sqrt(2 j(j+1)) <j m; 1 1|j m+1>
        for t in 1..=8 {
            let (jp, jm, jz) = ladder_matrices(h(t));
            let jj = h(t).value();
            let red = (jj * (jj + 1.0)).sqrt();
            let ms = h(t).projections();
            for (i, m) in ms.iter().enumerate() {
                for (k, mp) in ms.iter().enumerate() {
                    let plus = -(2.0f64).sqrt() * red * cg_twice(t, m.twice, 2, 2, t, mp.twice);
                    let minus = (2.0f64).sqrt() * red * cg_twice(t, m.twice, 2, -2, t, mp.twice);
                    let zero = red * cg_twice(t, m.twice, 2, 0, t, mp.twice);
                    assert!((jp[(k, i)] - plus).abs() < 1e-12);
                    assert!((jm[(k, i)] - minus).abs() < 1e-12);
                    assert!((jz[(k, i)] - zero).abs() < 1e-12);
                }
            }
        }
    }
}
