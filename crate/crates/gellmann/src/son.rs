//! Index bookkeeping and the defining representation of so(n).

use crate::linalg::{re, CMat, C64, I};

/// Generator pairs `(a, b)`, `a < b < n`, in lexicographic order.
pub fn pairs(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect()
}

/// `M_ab` from a family ordered by [`pairs`]; antisymmetric in `(a, b)`.
pub fn m_of(gens: &[CMat], n: usize, a: usize, b: usize) -> CMat {
    let d = gens[0].nrows();
    if a == b {
        return CMat::zeros(d, d);
    }
    let (x, y, s) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    let k = pairs(n).iter().position(|&p| p == (x, y)).expect("generator index");
    &gens[k] * re(s)
}

fn unit(n: usize, a: usize, b: usize) -> CMat {
    let mut m = CMat::zeros(n, n);
    m[(a, b)] = re(1.0);
    m
}

/// `M_ab = -i (E_ab - E_ba)` on C^n.
pub fn defining_generators(n: usize) -> Vec<CMat> {
    pairs(n).into_iter().map(|(a, b)| (unit(n, a, b) - unit(n, b, a)) * (-I)).collect()
}

/// `T_ab = i (E_ab + E_ba)` on C^n.
pub fn defining_shear(n: usize, a: usize, b: usize) -> CMat {
    (unit(n, a, b) + unit(n, b, a)) * I
}

/// Largest entry of `[M_ab, M_cd] - i(d_ac M_bd + d_ad M_cb - d_bc M_ad - d_bd M_ca)`.
pub fn commutation_residual(n: usize, gens: &[CMat]) -> f64 {
    let d = |x: usize, y: usize| if x == y { re(1.0) } else { C64::new(0.0, 0.0) };
    let ps = pairs(n);
    let mut worst = 0.0f64;
    for &(a, b) in &ps {
        for &(c, e) in &ps {
            let mab = m_of(gens, n, a, b);
            let mce = m_of(gens, n, c, e);
            let lhs = &mab * &mce - &mce * &mab;
            let rhs = (m_of(gens, n, b, e) * d(a, c) + m_of(gens, n, c, b) * d(a, e)
                - m_of(gens, n, a, e) * d(b, c)
                - m_of(gens, n, c, a) * d(b, e))
                * I;
            worst = worst.max(crate::linalg::max_abs(&(lhs - rhs)));
        }
    }
    worst
}

/// `(1/2) sum_ab M_ab M_ab = sum_{a<b} M_ab^2`.
pub fn casimir_matrix(gens: &[CMat]) -> CMat {
    let d = gens[0].nrows();
    gens.iter().fold(CMat::zeros(d, d), |acc, g| acc + g * g)
}
