//! so(4) = su(2) + su(2): product-basis couplings and the Spin(4) > Spin(3) > Spin(2) chain basis.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::halfint::{tri, Half};
use crate::so3::{casimir_so3, cg_so3, ladder_matrices, so3_generator_matrices};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct So4Label {
    pub j1: Half,
    pub j2: Half,
}

impl So4Label {
    pub fn new(j1: Half, j2: Half) -> Self {
        assert!(j1.twice >= 0 && j2.twice >= 0, "so(4) labels must be non-negative");
        So4Label { j1, j2 }
    }

    pub fn from_twice(a: i32, b: i32) -> Self {
        Self::new(Half::from_twice(a), Half::from_twice(b))
    }

    pub fn dim(self) -> usize {
        ((self.j1.twice + 1) * (self.j2.twice + 1)) as usize
    }

    /// `(m1, m2)` rows in lexicographic order.
    pub fn rows(self) -> Vec<(Half, Half)> {
        let b = self.j2.projections();
        self.j1
            .projections()
            .into_iter()
            .flat_map(|m1| b.iter().map(move |&m2| (m1, m2)))
            .collect()
    }

    /// Couplings `J` allowed by the chain, ascending.
    pub fn chain_spins(self) -> Vec<Half> {
        let lo = (self.j1 - self.j2).abs();
        let hi = self.j1 + self.j2;
        (lo.twice..=hi.twice).step_by(2).map(Half::from_twice).collect()
    }

    /// `(J, m)` chain rows in lexicographic order.
    pub fn chain_rows(self) -> Vec<So4ChainState> {
        self.chain_spins()
            .into_iter()
            .flat_map(|j| j.projections().into_iter().map(move |m| So4ChainState { label: self, j, m }))
            .collect()
    }
}

impl std::fmt::Display for So4Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.j1, self.j2)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct So4ChainState {
    pub label: So4Label,
    pub j: Half,
    pub m: Half,
}

/// Product of the two su(2) couplings.
pub fn cg_so4(
    a: So4Label,
    row_a: (Half, Half),
    b: So4Label,
    row_b: (Half, Half),
    c: So4Label,
    row_c: (Half, Half),
) -> f64 {
    cg_so3(a.j1, row_a.0, b.j1, row_b.0, c.j1, row_c.0) * cg_so3(a.j2, row_a.1, b.j2, row_b.1, c.j2, row_c.1)
}

/// Orthogonal map from product rows `(m1, m2)` to chain columns `(J, m)`.
pub fn chain_transform(label: So4Label) -> DMatrix<f64> {
    let rows = label.rows();
    let cols = label.chain_rows();
    DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
        let (m1, m2) = rows[r];
        let s = cols[c];
        cg_so3(label.j1, m1, label.j2, m2, s.j, s.m)
    })
}

/// C2 = (1/2) sum M_ab M_ab = 2 (J1(J1+1) + J2(J2+1)).
pub fn casimir_so4(label: So4Label) -> f64 {
    2.0 * (casimir_so3(label.j1) + casimir_so3(label.j2))
}

/// The two commuting su(2) triples `A`, `B` on the product rows.
pub fn so4_ab_matrices(label: So4Label) -> ([DMatrix<Complex64>; 3], [DMatrix<Complex64>; 3]) {
    let ga = so3_generator_matrices(label.j1);
    let gb = so3_generator_matrices(label.j2);
    let ia = DMatrix::<Complex64>::identity(ga[0].nrows(), ga[0].nrows());
    let ib = DMatrix::<Complex64>::identity(gb[0].nrows(), gb[0].nrows());
    let a = [ga[0].kronecker(&ib), ga[1].kronecker(&ib), ga[2].kronecker(&ib)];
    let b = [ia.kronecker(&gb[0]), ia.kronecker(&gb[1]), ia.kronecker(&gb[2])];
    (a, b)
}

/// Real ladder operators `(A+, A-, A3, B+, B-, B3)` on the product rows.
pub fn so4_ladders(label: So4Label) -> [DMatrix<f64>; 6] {
    let (ap, am, az) = ladder_matrices(label.j1);
    let (bp, bm, bz) = ladder_matrices(label.j2);
    let ia = DMatrix::<f64>::identity(ap.nrows(), ap.nrows());
    let ib = DMatrix::<f64>::identity(bp.nrows(), bp.nrows());
    [
        ap.kronecker(&ib),
        am.kronecker(&ib),
        az.kronecker(&ib),
        ia.kronecker(&bp),
        ia.kronecker(&bm),
        ia.kronecker(&bz),
    ]
}

/// Antisymmetric generators `M_ab`, `a < b < 4`, ordered (01, 02, 03, 12, 13, 23), from
/// `M_jk = eps_ijk (A_i + B_i)` and `M_i3 = A_i - B_i`.
pub fn so4_generator_matrices(label: So4Label) -> Vec<DMatrix<Complex64>> {
    let (a, b) = so4_ab_matrices(label);
    let rot = |i: usize| &a[i] + &b[i];
    let boost = |i: usize| &a[i] - &b[i];
    vec![rot(2), -rot(1), boost(0), rot(0), boost(1), boost(2)]
}

/// Whether `c` occurs in `a (x) b`.
pub fn so4_couples(a: So4Label, b: So4Label, c: So4Label) -> bool {
    tri(a.j1, b.j1, c.j1) && tri(a.j2, b.j2, c.j2)
}
