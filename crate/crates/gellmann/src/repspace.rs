//! Truncated spaces of functions over Spin(n), n = 3, 4, 5, with the right action `M`, the
//! left action `K` and the multiplicative D-function operators.

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfint::Half;
use crate::linalg::{re, sparse_from_triplets, CMat, SpMat, C64, I};
use crate::so3::{casimir_so3, cg_twice, so3_generator_matrices};
use crate::so4::{casimir_so4, chain_transform, so4_generator_matrices, So4Label};
use crate::so5::{build_irrep, casimir2_so5, cg_so5, So5Error, So5Label, So5Row};
use crate::son::pairs;

/// Default cap on the number of basis states.
pub const DEFAULT_STATE_BUDGET: usize = 250_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SpaceError {
    #[error("space with {states} states exceeds the budget of {budget}")]
    Budget { states: usize, budget: usize },
    #[error("unsupported rank n = {0}")]
    Rank(usize),
    #[error("row {row:?} is not a row of {label}")]
    BadRow { label: IrrepLabel, row: Row },
    #[error("chain basis is only defined for n = 4")]
    ChainRank,
    #[error(transparent)]
    So5(#[from] So5Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum IrrepLabel {
    So3(Half),
    So4(So4Label),
    So5(So5Label),
}

impl IrrepLabel {
    pub fn n(self) -> usize {
        match self {
            IrrepLabel::So3(_) => 3,
            IrrepLabel::So4(_) => 4,
            IrrepLabel::So5(_) => 5,
        }
    }

    pub fn dim(self) -> usize {
        match self {
            IrrepLabel::So3(j) => (j.twice + 1) as usize,
            IrrepLabel::So4(l) => l.dim(),
            IrrepLabel::So5(l) => l.dim(),
        }
    }

    /// `(1/2) sum M_ab M_ab` on the irrep.
    pub fn casimir(self) -> f64 {
        match self {
            IrrepLabel::So3(j) => casimir_so3(j),
            IrrepLabel::So4(l) => casimir_so4(l),
            IrrepLabel::So5(l) => casimir2_so5(l),
        }
    }

    pub fn twice(self) -> (i32, i32) {
        match self {
            IrrepLabel::So3(j) => (j.twice, 0),
            IrrepLabel::So4(l) => (l.j1.twice, l.j2.twice),
            IrrepLabel::So5(l) => l.twice(),
        }
    }

    pub fn is_spinorial(self) -> bool {
        match self {
            IrrepLabel::So3(j) => !j.is_integer(),
            IrrepLabel::So4(l) => !(l.j1 + l.j2).is_integer(),
            IrrepLabel::So5(l) => l.is_spinorial(),
        }
    }

    /// The symmetric traceless two-index irrep carrying the shear operators.
    pub fn shear_label(n: usize) -> Result<IrrepLabel, SpaceError> {
        match n {
            3 => Ok(IrrepLabel::So3(Half::from_twice(4))),
            4 => Ok(IrrepLabel::So4(So4Label::from_twice(2, 2))),
            5 => Ok(IrrepLabel::So5(So5Label::from_twice(2, 2))),
            _ => Err(SpaceError::Rank(n)),
        }
    }

    /// The adjoint irrep carrying the generators.
    pub fn adjoint_label(n: usize) -> Result<IrrepLabel, SpaceError> {
        match n {
            3 => Ok(IrrepLabel::So3(Half::ONE)),
            4 => Ok(IrrepLabel::So4(So4Label::from_twice(2, 0))),
            5 => Ok(IrrepLabel::So5(So5Label::from_twice(2, 0))),
            _ => Err(SpaceError::Rank(n)),
        }
    }

    /// Rows in the product (adapted) basis, lexicographic on twice values.
    pub fn rows(self) -> Result<Vec<Row>, SpaceError> {
        Ok(match self {
            IrrepLabel::So3(j) => j.projections().into_iter().map(|m| Row::So3 { m }).collect(),
            IrrepLabel::So4(l) => l.rows().into_iter().map(|(m1, m2)| Row::So4 { m1, m2 }).collect(),
            IrrepLabel::So5(l) => build_irrep(l)?.basis.iter().map(|r| Row::So5(*r)).collect(),
        })
    }

    /// Generators `M_ab` in [`pairs`] order on the product rows.
    pub fn generators(self) -> Result<Vec<CMat>, SpaceError> {
        Ok(match self {
            IrrepLabel::So3(j) => {
                let [jx, jy, jz] = so3_generator_matrices(j);
                // (01, 02, 12) = (Jz, -Jy, Jx)
                vec![jz, -jy, jx]
            }
            IrrepLabel::So4(l) => so4_generator_matrices(l),
            IrrepLabel::So5(l) => build_irrep(l)?.generators().to_vec(),
        })
    }
}

impl std::fmt::Display for IrrepLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            IrrepLabel::So3(j) => write!(f, "{j}"),
            IrrepLabel::So4(l) => write!(f, "{l}"),
            IrrepLabel::So5(l) => write!(f, "{l}"),
        }
    }
}

/// One row of an irrep basis, the left (k-side) or right (m-side) index of a state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Row {
    So3 { m: Half },
    So4 { m1: Half, m2: Half },
    So4Chain { j: Half, m: Half },
    So5(So5Row),
}

impl Row {
    pub fn so3(m: i32) -> Row {
        Row::So3 { m: Half::from_twice(m) }
    }
    pub fn so4(m1: i32, m2: i32) -> Row {
        Row::So4 { m1: Half::from_twice(m1), m2: Half::from_twice(m2) }
    }
    pub fn so4_chain(j: i32, m: i32) -> Row {
        Row::So4Chain { j: Half::from_twice(j), m: Half::from_twice(m) }
    }
    pub fn so5(j1: i32, j2: i32, m1: i32, m2: i32) -> Row {
        Row::So5(So5Row {
            j1: Half::from_twice(j1),
            j2: Half::from_twice(j2),
            m1: Half::from_twice(m1),
            m2: Half::from_twice(m2),
            tag: 0,
        })
    }

    /// First weight: `m` for so(3), `m1` for so(4) and so(5) rows.
    pub fn weight1(&self) -> Option<Half> {
        match self {
            Row::So3 { m } => Some(*m),
            Row::So4 { m1, .. } => Some(*m1),
            Row::So5(r) => Some(r.m1),
            Row::So4Chain { .. } => None,
        }
    }

    pub fn weight2(&self) -> Option<Half> {
        match self {
            Row::So4 { m2, .. } => Some(*m2),
            Row::So5(r) => Some(r.m2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BasisState {
    pub irrep: IrrepLabel,
    pub left: Row,
    pub right: Row,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Parity {
    Both,
    Tensorial,
    Spinorial,
}

impl Parity {
    pub fn admits(self, l: IrrepLabel) -> bool {
        match self {
            Parity::Both => true,
            Parity::Tensorial => !l.is_spinorial(),
            Parity::Spinorial => l.is_spinorial(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum So4Basis {
    Product,
    Chain,
}

#[derive(Debug, Clone, Serialize)]
pub struct IrrepBlock {
    pub label: IrrepLabel,
    pub dim: usize,
    pub offset: usize,
    /// Rows in the space's basis for this block (chain rows in a chain-basis n = 4 space).
    pub rows: Vec<Row>,
    #[serde(skip)]
    product_rows: Vec<Row>,
}

#[derive(Debug, Clone)]
pub struct TruncatedSpace {
    pub n: usize,
    pub cutoff: IrrepLabel,
    pub parity: Parity,
    pub basis: So4Basis,
    pub blocks: Vec<IrrepBlock>,
    pub states: Vec<BasisState>,
    index: HashMap<BasisState, usize>,
    block_of: HashMap<IrrepLabel, usize>,
}

/// Whether `l` lies under `cutoff`.
pub fn within_cutoff(l: IrrepLabel, cutoff: IrrepLabel) -> bool {
    let (a, b) = l.twice();
    let (ca, cb) = cutoff.twice();
    match (l, cutoff) {
        (IrrepLabel::So3(_), IrrepLabel::So3(_)) => a <= ca,
        (IrrepLabel::So4(_), IrrepLabel::So4(_)) => a <= ca && b <= cb,
        (IrrepLabel::So5(_), IrrepLabel::So5(_)) => a <= ca && a + b <= ca + cb,
        _ => false,
    }
}

/// Whether every irrep reached from `l` by one shear-label step stays under `cutoff`.
pub fn one_step_inside(l: IrrepLabel, cutoff: IrrepLabel) -> bool {
    let (a, b) = l.twice();
    let (ca, cb) = cutoff.twice();
    match (l, cutoff) {
        (IrrepLabel::So3(_), IrrepLabel::So3(_)) => a + 4 <= ca,
        (IrrepLabel::So4(_), IrrepLabel::So4(_)) => a + 2 <= ca && b + 2 <= cb,
        (IrrepLabel::So5(_), IrrepLabel::So5(_)) => a + 2 <= ca && a + b + 4 <= ca + cb,
        _ => false,
    }
}

fn labels_under(cutoff: IrrepLabel) -> Vec<IrrepLabel> {
    let (ca, cb) = cutoff.twice();
    match cutoff {
        IrrepLabel::So3(_) => (0..=ca).map(|t| IrrepLabel::So3(Half::from_twice(t))).collect(),
        IrrepLabel::So4(_) => (0..=ca)
            .flat_map(|a| (0..=cb).map(move |b| IrrepLabel::So4(So4Label::from_twice(a, b))))
            .collect(),
        IrrepLabel::So5(_) => (0..=ca)
            .flat_map(|a| (0..=a).map(move |b| IrrepLabel::So5(So5Label::from_twice(a, b))))
            .filter(|l| within_cutoff(*l, cutoff))
            .collect(),
    }
}

pub fn enumerate_space(cutoff: IrrepLabel, parity: Parity) -> Result<TruncatedSpace, SpaceError> {
    enumerate_space_with(cutoff, parity, So4Basis::Product, DEFAULT_STATE_BUDGET)
}

pub fn enumerate_space_with(
    cutoff: IrrepLabel,
    parity: Parity,
    basis: So4Basis,
    budget: usize,
) -> Result<TruncatedSpace, SpaceError> {
    let n = cutoff.n();
    if basis == So4Basis::Chain && n != 4 {
        return Err(SpaceError::ChainRank);
    }
    let labels: Vec<IrrepLabel> = labels_under(cutoff).into_iter().filter(|l| parity.admits(*l)).collect();
    let total: usize = labels.iter().map(|l| l.dim() * l.dim()).sum();
    if total > budget {
        return Err(SpaceError::Budget { states: total, budget });
    }
    let mut blocks = Vec::new();
    let mut states = Vec::with_capacity(total);
    let mut offset = 0;
    for label in labels {
        let product_rows = label.rows()?;
        let rows = match (basis, label) {
            (So4Basis::Chain, IrrepLabel::So4(l)) => {
                l.chain_rows().into_iter().map(|s| Row::So4Chain { j: s.j, m: s.m }).collect()
            }
            _ => product_rows.clone(),
        };
        for lr in &rows {
            for rr in &rows {
                states.push(BasisState { irrep: label, left: *lr, right: *rr });
            }
        }
        let dim = rows.len();
        blocks.push(IrrepBlock { label, dim, offset, rows, product_rows });
        offset += dim * dim;
    }
    let index = states.iter().enumerate().map(|(k, s)| (*s, k)).collect();
    let block_of = blocks.iter().enumerate().map(|(k, b)| (b.label, k)).collect();
    Ok(TruncatedSpace { n, cutoff, parity, basis, blocks, states, index, block_of })
}

impl TruncatedSpace {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn index_of(&self, s: &BasisState) -> Option<usize> {
        self.index.get(s).copied()
    }

    pub fn block(&self, l: IrrepLabel) -> Option<&IrrepBlock> {
        self.block_of.get(&l).map(|&k| &self.blocks[k])
    }

    /// States whose one-step neighbourhood lies inside the cutoff.
    pub fn interior(&self) -> Vec<usize> {
        self.interior_where(|_| true)
    }

    pub fn interior_where(&self, pred: impl Fn(&BasisState) -> bool) -> Vec<usize> {
        (0..self.len())
            .filter(|&k| one_step_inside(self.states[k].irrep, self.cutoff) && pred(&self.states[k]))
            .collect()
    }

    /// Orthogonal change of basis from product rows to the space's rows, `W[p, s]`.
    fn basis_change(&self) -> Option<SpMat> {
        if self.basis != So4Basis::Chain {
            return None;
        }
        let mut trip = Vec::new();
        for b in &self.blocks {
            let IrrepLabel::So4(l) = b.label else { continue };
            let u = chain_transform(l);
            let d = b.dim;
            for lp in 0..d {
                for lc in 0..d {
                    let ul = u[(lp, lc)];
                    if ul == 0.0 {
                        continue;
                    }
                    for rp in 0..d {
                        for rc in 0..d {
                            let ur = u[(rp, rc)];
                            if ur != 0.0 {
                                trip.push((b.offset + lp * d + rp, b.offset + lc * d + rc, re(ul * ur)));
                            }
                        }
                    }
                }
            }
        }
        Some(sparse_from_triplets(self.len(), self.len(), &trip))
    }

    /// Converts a product-basis operator to the space's basis.
    pub fn to_space_basis(&self, op: SpMat) -> SpMat {
        match self.basis_change() {
            None => op,
            Some(w) => {
                let wt = crate::linalg::adjoint(&w);
                let out = &(&wt * &op) * &w;
                let scale = out.iter().map(|(v, _)| v.norm()).fold(0.0, f64::max);
                crate::linalg::prune(&out, 1e-15 * scale)
            }
        }
    }

    fn from_blocks(&self, f: impl Fn(&IrrepBlock) -> Vec<(usize, usize, C64)> + Sync) -> SpMat {
        let parts: Vec<Vec<(usize, usize, C64)>> = self.blocks.par_iter().map(&f).collect();
        let trip: Vec<_> = parts.into_iter().flatten().collect();
        self.to_space_basis(sparse_from_triplets(self.len(), self.len(), &trip))
    }

    /// Diagonal operator from a per-state value on product-basis states.
    fn diag_product(&self, f: impl Fn(&IrrepBlock, usize, usize) -> C64 + Sync) -> SpMat {
        self.from_blocks(|b| {
            let d = b.dim;
            let mut t = Vec::new();
            for l in 0..d {
                for r in 0..d {
                    let v = f(b, l, r);
                    if v != re(0.0) {
                        t.push((b.offset + l * d + r, b.offset + l * d + r, v));
                    }
                }
            }
            t
        })
    }

    /// `C2(so(n))` of each state's irrep.
    pub fn casimir_values(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.irrep.casimir()).collect()
    }

    /// `C2(so(4)_K) = 2 (K1(K1+1) + K2(K2+1))` of each state's left row, n = 5 only.
    pub fn left_so4_casimir_values(&self) -> Vec<f64> {
        self.states
            .iter()
            .map(|s| match s.left {
                Row::So5(r) => casimir_so4(So4Label::new(r.j1, r.j2)),
                _ => 0.0,
            })
            .collect()
    }
}

fn block_generators(b: &IrrepBlock) -> Vec<CMat> {
    b.label.generators().expect("generators of an enumerated irrep")
}

fn push_dense(t: &mut Vec<(usize, usize, C64)>, off: usize, m: &CMat) {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let v = m[(r, c)];
            if v.norm() > 1e-15 {
                t.push((off + r, off + c, v));
            }
        }
    }
}

/// Right-action generators: `M_ab` acting on the right index of every block.
pub fn build_m(space: &TruncatedSpace) -> Vec<SpMat> {
    build_action(space, false)
}

/// Left-action generators: `K_ab` acting on the left index of every block.
pub fn build_k(space: &TruncatedSpace) -> Vec<SpMat> {
    build_action(space, true)
}

fn build_action(space: &TruncatedSpace, left: bool) -> Vec<SpMat> {
    let np = pairs(space.n).len();
    let per_block: Vec<Vec<CMat>> = space.blocks.iter().map(block_generators).collect();
    (0..np)
        .map(|k| {
            let mut trip = Vec::new();
            for (b, g) in space.blocks.iter().zip(&per_block) {
                let id = CMat::identity(b.dim, b.dim);
                let m = if left { g[k].kronecker(&id) } else { id.kronecker(&g[k]) };
                push_dense(&mut trip, b.offset, &m);
            }
            space.to_space_basis(sparse_from_triplets(space.len(), space.len(), &trip))
        })
        .collect()
}

/// The so(4) ladder combinations of a generator family on indices 0..4: `A+, A-, A3, B+, B-, B3`.
pub fn so4_combinations(gens: &[SpMat], n: usize) -> [SpMat; 6] {
    let g = |a: usize, b: usize| {
        let k = pairs(n).iter().position(|&p| p == (a, b)).expect("pair");
        gens[k].clone()
    };
    let half = re(0.5);
    let rot = [g(1, 2), g(0, 2).map(|x| -x), g(0, 1)];
    let boost = [g(0, 3), g(1, 3), g(2, 3)];
    let a: Vec<SpMat> = (0..3).map(|i| (&rot[i] + &boost[i]).map(|x| x * half)).collect();
    let b: Vec<SpMat> = (0..3).map(|i| (&rot[i] - &boost[i]).map(|x| x * half)).collect();
    let lad = |v: &[SpMat], s: f64| &v[0] + &v[1].map(|x| x * I * s);
    [lad(&a, 1.0), lad(&a, -1.0), a[2].clone(), lad(&b, 1.0), lad(&b, -1.0), b[2].clone()]
}

/// Coupling tables `E_rho[(iJ * d_lambda + i_lambda, iJ')]` in product rows.
fn coupling_tables(j: IrrepLabel, lambda: IrrepLabel, jp: IrrepLabel) -> Result<Vec<Arc<DMatrix<f64>>>, SpaceError> {
    let (rj, rl, rp) = (j.rows()?, lambda.rows()?, jp.rows()?);
    let one = |f: &dyn Fn(&Row, &Row, &Row) -> f64| {
        let m = DMatrix::from_fn(rj.len() * rl.len(), rp.len(), |r, c| f(&rj[r / rl.len()], &rl[r % rl.len()], &rp[c]));
        if m.iter().any(|x| *x != 0.0) {
            vec![Arc::new(m)]
        } else {
            vec![]
        }
    };
    Ok(match (j, lambda, jp) {
        (IrrepLabel::So3(a), IrrepLabel::So3(b), IrrepLabel::So3(c)) => one(&|x, y, z| match (x, y, z) {
            (Row::So3 { m: ma }, Row::So3 { m: mb }, Row::So3 { m: mc }) => {
                cg_twice(a.twice, ma.twice, b.twice, mb.twice, c.twice, mc.twice)
            }
            _ => 0.0,
        }),
        (IrrepLabel::So4(a), IrrepLabel::So4(b), IrrepLabel::So4(c)) => one(&|x, y, z| match (x, y, z) {
            (Row::So4 { m1: a1, m2: a2 }, Row::So4 { m1: b1, m2: b2 }, Row::So4 { m1: c1, m2: c2 }) => {
                crate::so4::cg_so4(a, (*a1, *a2), b, (*b1, *b2), c, (*c1, *c2))
            }
            _ => 0.0,
        }),
        (IrrepLabel::So5(a), IrrepLabel::So5(b), IrrepLabel::So5(c)) => {
            cg_so5(a, b, c)?.iter().map(|t| Arc::new(t.values.clone())).collect()
        }
        _ => vec![],
    })
}

fn may_couple(j: IrrepLabel, lambda: IrrepLabel, jp: IrrepLabel) -> bool {
    match (j, lambda, jp) {
        (IrrepLabel::So3(a), IrrepLabel::So3(b), IrrepLabel::So3(c)) => crate::halfint::tri(a, b, c),
        (IrrepLabel::So4(a), IrrepLabel::So4(b), IrrepLabel::So4(c)) => crate::so4::so4_couples(a, b, c),
        (IrrepLabel::So5(_), IrrepLabel::So5(_), IrrepLabel::So5(_)) => {
            // c must be a shift of a by a weight of lambda
            let (a, c) = (j.twice(), jp.twice());
            let w = (c.0 - a.0, c.1 - a.1);
            lambda.rows().map(|rs| rs.iter().any(|r| (r.weight1().unwrap().twice, r.weight2().unwrap().twice) == w)).unwrap_or(false)
        }
        _ => false,
    }
}

/// Row index of `row` within irrep `lambda`'s product rows.
fn row_index(lambda: IrrepLabel, row: &Row) -> Result<usize, SpaceError> {
    lambda.rows()?.iter().position(|r| r == row).ok_or(SpaceError::BadRow { label: lambda, row: *row })
}

/// The D-function operator of `lambda` with left row `left` and right row `right`
/// (both product rows of `lambda`).
///
/// `<J' L' R'| D |J L R> = sqrt(dim J / dim J') sum_rho C_rho(J L, lambda left; J' L') C_rho(J R, lambda right; J' R')`.
pub fn build_d(space: &TruncatedSpace, lambda: IrrepLabel, left: &Row, right: &Row) -> Result<SpMat, SpaceError> {
    build_d_with(space, lambda, left, right, &PhaseAssignment::default())
}

/// Sign flips of so(5) coupling tables: an entry `(J, J', block)` negates the rows of `J'`
/// lying in so(4) block `block` of the table `J (x) lambda -> J'`.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhaseAssignment {
    pub flips: BTreeSet<(So5Label, So5Label, So4Label)>,
}

impl PhaseAssignment {
    pub fn is_identity(&self) -> bool {
        self.flips.is_empty()
    }

    pub fn toggle(&mut self, key: (So5Label, So5Label, So4Label)) {
        if !self.flips.remove(&key) {
            self.flips.insert(key);
        }
    }

    fn row_signs(&self, j: IrrepLabel, jp: IrrepLabel, rows: &[Row]) -> Option<Vec<f64>> {
        let (IrrepLabel::So5(a), IrrepLabel::So5(b)) = (j, jp) else { return None };
        if !self.flips.iter().any(|f| f.0 == a && f.1 == b) {
            return None;
        }
        Some(
            rows.iter()
                .map(|r| match r {
                    Row::So5(x) if self.flips.contains(&(a, b, So4Label::new(x.j1, x.j2))) => -1.0,
                    _ => 1.0,
                })
                .collect(),
        )
    }
}

/// Coupling tables with a phase assignment applied.
pub fn signed_tables(j: IrrepLabel, lambda: IrrepLabel, jp: IrrepLabel, phases: &PhaseAssignment) -> Result<Vec<Arc<DMatrix<f64>>>, SpaceError> {
    let tabs = coupling_tables(j, lambda, jp)?;
    match phases.row_signs(j, jp, &jp.rows()?) {
        None => Ok(tabs),
        Some(s) => Ok(tabs
            .into_iter()
            .map(|t| {
                let mut m = (*t).clone();
                for (c, sc) in s.iter().enumerate() {
                    if *sc < 0.0 {
                        m.column_mut(c).neg_mut();
                    }
                }
                Arc::new(m)
            })
            .collect()),
    }
}

/// Coupled block pairs `(source, target)` of a space under `lambda`.
pub fn coupled_pairs(space: &TruncatedSpace, lambda: IrrepLabel) -> Vec<(usize, usize)> {
    (0..space.blocks.len())
        .flat_map(|a| (0..space.blocks.len()).map(move |b| (a, b)))
        .filter(|&(a, b)| may_couple(space.blocks[a].label, lambda, space.blocks[b].label))
        .collect()
}

/// [`build_d`] with so(5) coupling-table sign flips.
pub fn build_d_with(
    space: &TruncatedSpace,
    lambda: IrrepLabel,
    left: &Row,
    right: &Row,
    phases: &PhaseAssignment,
) -> Result<SpMat, SpaceError> {
    let (il, ir) = (row_index(lambda, left)?, row_index(lambda, right)?);
    let dl = lambda.dim();
    let jobs = coupled_pairs(space, lambda);
    let parts: Result<Vec<Vec<(usize, usize, C64)>>, SpaceError> = jobs
        .par_iter()
        .map(|&(a, b)| {
            let (ba, bb) = (&space.blocks[a], &space.blocks[b]);
            let tabs = signed_tables(ba.label, lambda, bb.label, phases)?;
            let (d, dp) = (ba.dim, bb.dim);
            let s = (d as f64 / dp as f64).sqrt();
            let mut t = Vec::new();
            for e in &tabs {
                let side = |row: usize| -> Vec<(usize, usize, f64)> {
                    let mut v = Vec::new();
                    for x in 0..d {
                        for y in 0..dp {
                            let c = e[(x * dl + row, y)];
                            if c.abs() > 1e-15 {
                                v.push((x, y, c));
                            }
                        }
                    }
                    v
                };
                let (cl, cr) = (side(il), side(ir));
                for &(l, lp, x) in &cl {
                    for &(r, rp, y) in &cr {
                        t.push((bb.offset + lp * dp + rp, ba.offset + l * d + r, re(s * x * y)));
                    }
                }
            }
            Ok(t)
        })
        .collect();
    let trip: Vec<_> = parts?.into_iter().flatten().collect();
    Ok(space.to_space_basis(sparse_from_triplets(space.len(), space.len(), &trip)))
}

/// Shear matrix elements of the n = 5 generalized formula written out per coupling block:
/// label differences in `Jbar(Jbar+2) + Jbar(Jbar+1)` and `K(K+1)` units, weights `k` of the ket.
pub fn sl5_direct(space: &TruncatedSpace, sigma1: C64, sigma2: C64, delta1: C64, delta2: C64) -> Result<Vec<SpMat>, SpaceError> {
    let lambda = IrrepLabel::shear_label(5)?;
    let lrows = lambda.rows()?;
    let dl = lrows.len();
    let li = |r: Row| lrows.iter().position(|x| *x == r).expect("shear row");
    let l00 = li(Row::so5(0, 0, 0, 0));
    let l11 = li(Row::so5(2, 2, 0, 0));
    let lpm = li(Row::so5(2, 2, 2, -2));
    let lmp = li(Row::so5(2, 2, -2, 2));
    let lpp = li(Row::so5(2, 2, 2, 2));
    let lmm = li(Row::so5(2, 2, -2, -2));
    let cas5 = |l: IrrepLabel| {
        let (a, b) = l.twice();
        let (a, b) = (a as f64 / 2.0, b as f64 / 2.0);
        a * (a + 2.0) + b * (b + 1.0)
    };
    let jobs = coupled_pairs(space, lambda);
    let mut trips: Vec<Vec<(usize, usize, C64)>> = vec![Vec::new(); dl];
    for (a, b) in jobs {
        let (ba, bb) = (&space.blocks[a], &space.blocks[b]);
        let tabs = coupling_tables(ba.label, lambda, bb.label)?;
        let (d, dp) = (ba.dim, bb.dim);
        let s = (d as f64 / dp as f64).sqrt();
        let dcas = cas5(bb.label) - cas5(ba.label);
        let so4c = |r: &Row| match r {
            Row::So5(x) => casimir_so3(x.j1) + casimir_so3(x.j2),
            _ => 0.0,
        };
        for e in &tabs {
            // left factor for every (L, L')
            let mut left = vec![C64::new(0.0, 0.0); d * dp];
            for l in 0..d {
                let lr = &ba.product_rows[l];
                let (k1, k2) = (lr.weight1().unwrap().value(), lr.weight2().unwrap().value());
                for lp in 0..dp {
                    let dk = so4c(&bb.product_rows[lp]) - so4c(lr);
                    let at = |row: usize| e[(l * dl + row, lp)];
                    left[l * dp + lp] = (sigma1 + I * (0.8f64).sqrt() * dcas) * at(l00)
                        + I * (sigma2 + dk) * at(l11)
                        - I * (delta1 + k1 - k2) * at(lpm)
                        - I * (delta1 - k1 + k2) * at(lmp)
                        + I * (delta2 + k1 + k2) * at(lpp)
                        + I * (delta2 - k1 - k2) * at(lmm);
                }
            }
            for (rr, trip) in trips.iter_mut().enumerate() {
                for r in 0..d {
                    for rp in 0..dp {
                        let cr = e[(r * dl + rr, rp)];
                        if cr.abs() < 1e-15 {
                            continue;
                        }
                        for l in 0..d {
                            for lp in 0..dp {
                                let v = left[l * dp + lp] * cr * s;
                                if v.norm() > 1e-15 {
                                    trip.push((bb.offset + lp * dp + rp, ba.offset + l * d + r, v));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(trips.into_iter().map(|t| sparse_from_triplets(space.len(), space.len(), &t)).collect())
}

/// Diagonal `C2(so(n))` on the space.
pub fn casimir_operator(space: &TruncatedSpace) -> SpMat {
    space.diag_product(|b, _, _| re(b.label.casimir()))
}

/// Diagonal `C2(so(4)_K)` of the left rows, n = 5 only.
pub fn left_so4_casimir_operator(space: &TruncatedSpace) -> SpMat {
    space.diag_product(|b, l, _| match b.product_rows[l] {
        Row::So5(r) => re(casimir_so4(So4Label::new(r.j1, r.j2))),
        _ => re(0.0),
    })
}

/// Header line for a sparse export.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SparseHeader {
    pub n: usize,
    pub cutoff: String,
    pub parity: Parity,
    pub basis: So4Basis,
    pub ordering: String,
    pub operator: String,
    pub dim: usize,
    pub nnz: usize,
}

/// JSON header line followed by `row col re im` lines in CSR order, 17 significant digits.
pub fn export_sparse(space: &TruncatedSpace, op: &SpMat, name: &str) -> String {
    let op = if op.is_csr() { op.clone() } else { op.to_csr() };
    let header = SparseHeader {
        n: space.n,
        cutoff: space.cutoff.to_string(),
        parity: space.parity,
        basis: space.basis,
        ordering: "irrep, left row, right row; lexicographic on twice values".into(),
        operator: name.into(),
        dim: space.len(),
        nnz: op.nnz(),
    };
    let mut out = serde_json::to_string(&header).expect("header");
    out.push('\n');
    for (r, row) in op.outer_iterator().enumerate() {
        for (c, v) in row.iter() {
            out.push_str(&format!("{r} {c} {:.16e} {:.16e}\n", v.re, v.im));
        }
    }
    out
}

/// Parses the output of [`export_sparse`].
pub fn import_sparse(text: &str) -> Result<(SparseHeader, SpMat), String> {
    let mut lines = text.lines();
    let header: SparseHeader = serde_json::from_str(lines.next().ok_or("empty input")?).map_err(|e| e.to_string())?;
    let mut trip = Vec::new();
    for l in lines {
        let f: Vec<&str> = l.split_whitespace().collect();
        if f.len() != 4 {
            return Err(format!("bad line {l:?}"));
        }
        let p = |s: &str| s.parse::<f64>().map_err(|e| e.to_string());
        let r: usize = f[0].parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
        let c: usize = f[1].parse().map_err(|e: std::num::ParseIntError| e.to_string())?;
        trip.push((r, c, C64::new(p(f[2])?, p(f[3])?)));
    }
    let m = sparse_from_triplets(header.dim, header.dim, &trip);
    Ok((header, m))
}

/// Distinct irrep labels reached from `l` by one application of a `lambda` D-operator.
pub fn neighbours(l: IrrepLabel, lambda: IrrepLabel, candidates: &[IrrepLabel]) -> BTreeSet<IrrepLabel> {
    candidates.iter().cloned().filter(|c| may_couple(l, lambda, *c)).collect()
}
