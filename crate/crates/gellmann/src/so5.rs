//! so(5) irreps in the so(4)-adapted basis, branching, Casimir values and numerical
//! Clebsch-Gordan tables.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::{Arc, OnceLock, RwLock};

use nalgebra::DMatrix;
use once_cell::sync::Lazy;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfint::Half;
use crate::linalg::{comm, eigh, kron_sum_apply, re, CMat, CVec, I};
use crate::so4::So4Label;
use crate::son::{casimir_matrix, defining_generators, m_of, pairs};

/// Largest `2 * Jbar1` accepted by [`build_irrep`].
pub const DEFAULT_MAX_TWICE: i32 = 8;

/// Identifier of the phase and ordering conventions used for CG tables.
pub const CG_CONVENTION: &str = "so5cg/v1: rho basis by projected unit vectors in (rowC,rowA,rowB) order; first nonzero entry positive";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum So5Error {
    #[error("invalid so(5) label ({0},{1}): need Jbar1 >= Jbar2 >= 0")]
    InvalidLabel(Half, Half),
    #[error("label {label} exceeds the configured maximum 2*Jbar1 <= {max}")]
    AboveLimit { label: So5Label, max: i32 },
    #[error("irrep {label} not found in the tensor power {power}")]
    NotFound { label: So5Label, power: String },
    #[error("phase fixing stalled for {0}")]
    Phase(So5Label),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct So5Label {
    pub jbar1: Half,
    pub jbar2: Half,
}

impl So5Label {
    pub fn new(jbar1: Half, jbar2: Half) -> Result<Self, So5Error> {
        if jbar2.twice < 0 || jbar1 < jbar2 {
            return Err(So5Error::InvalidLabel(jbar1, jbar2));
        }
        Ok(So5Label { jbar1, jbar2 })
    }

    pub fn from_twice(t1: i32, t2: i32) -> Self {
        Self::new(Half::from_twice(t1), Half::from_twice(t2)).expect("valid so(5) label")
    }

    pub fn twice(self) -> (i32, i32) {
        (self.jbar1.twice, self.jbar2.twice)
    }

    pub fn dim(self) -> usize {
        dim_so5(self)
    }

    /// Spinorial labels have `Jbar1 + Jbar2` half-odd.
    pub fn is_spinorial(self) -> bool {
        !(self.jbar1 + self.jbar2).is_integer()
    }

    /// Labels with `2 * Jbar1 <= max_twice`.
    pub fn all_up_to(max_twice: i32) -> Vec<So5Label> {
        (0..=max_twice).flat_map(|t1| (0..=t1).map(move |t2| So5Label::from_twice(t1, t2))).collect()
    }
}

impl std::fmt::Display for So5Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({},{})", self.jbar1, self.jbar2)
    }
}

pub fn dim_so5(l: So5Label) -> usize {
    let (t1, t2) = l.twice();
    ((t1 - t2 + 1) * (t1 + t2 + 3) * (t1 + 2) * (t2 + 1) / 6) as usize
}

/// Ratio between `(1/2) sum M_ab M_ab` and `Jbar1(Jbar1+2) + Jbar2(Jbar2+1)`, measured on
/// the adjoint irrep.
pub fn casimir_scale() -> f64 {
    static SCALE: OnceLock<f64> = OnceLock::new();
    *SCALE.get_or_init(|| {
        let adj = build_irrep(So5Label::from_twice(2, 0)).expect("adjoint irrep");
        let c = casimir_matrix(adj.generators());
        let mean = (0..adj.dim).map(|k| c[(k, k)].re).sum::<f64>() / adj.dim as f64;
        mean / 3.0
    })
}

pub fn casimir2_so5(l: So5Label) -> f64 {
    let (a, b) = (l.jbar1.value(), l.jbar2.value());
    casimir_scale() * (a * (a + 2.0) + b * (b + 1.0))
}

/// One adapted basis row `(J1, J2, m1, m2)`; `tag` separates repeated so(4) blocks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct So5Row {
    pub j1: Half,
    pub j2: Half,
    pub m1: Half,
    pub m2: Half,
    pub tag: u32,
}

impl So5Row {
    pub fn block(&self) -> So4Label {
        So4Label::new(self.j1, self.j2)
    }
}

/// Operators derived from the ten generators.
#[derive(Debug, Clone)]
pub struct RepData {
    pub generators: Vec<CMat>,
    /// `A+, A-, A3, B+, B-, B3` of the so(4) = su(2) + su(2) subalgebra on indices 0..4.
    pub ladders: [CMat; 6],
    /// The (1/2,1/2) components `P_{++}, P_{-+}, P_{+-}, P_{--}` built from `M_a4`.
    pub p: [CMat; 4],
}

/// Weight shifts `(2 dA3, 2 dB3)` of the four `P` operators.
pub const P_SHIFTS: [(i32, i32); 4] = [(1, 1), (-1, 1), (1, -1), (-1, -1)];

#[derive(Debug, Clone, Copy)]
pub enum Op {
    Gen(usize),
    Ladder(usize),
    P(usize),
}

const AP: usize = 0;
const AM: usize = 1;
const A3: usize = 2;
const BP: usize = 3;
const BM: usize = 4;
const B3: usize = 5;

impl RepData {
    pub fn from_generators(generators: Vec<CMat>) -> Self {
        let g = |a, b| m_of(&generators, 5, a, b);
        // rotations eps_ijk M_jk (j < k) and boosts M_i3
        let rot = [g(1, 2), g(0, 2) * re(-1.0), g(0, 1)];
        let boost = [g(0, 3), g(1, 3), g(2, 3)];
        let a: Vec<CMat> = (0..3).map(|i| (&rot[i] + &boost[i]) * re(0.5)).collect();
        let b: Vec<CMat> = (0..3).map(|i| (&rot[i] - &boost[i]) * re(0.5)).collect();
        let ap = &a[0] + &a[1] * I;
        let am = &a[0] - &a[1] * I;
        let bp = &b[0] + &b[1] * I;
        let bm = &b[0] - &b[1] * I;
        let ppp = g(0, 4) + g(1, 4) * I;
        let pmp = comm(&am, &ppp);
        let ppm = comm(&bm, &ppp);
        let pmm = comm(&bm, &pmp);
        RepData {
            generators,
            ladders: [ap, am, a[2].clone(), bp, bm, b[2].clone()],
            p: [ppp, pmp, ppm, pmm],
        }
    }

    pub fn dim(&self) -> usize {
        self.generators[0].nrows()
    }

    pub fn op(&self, op: Op) -> &CMat {
        match op {
            Op::Gen(k) => &self.generators[k],
            Op::Ladder(k) => &self.ladders[k],
            Op::P(k) => &self.p[k],
        }
    }
}

/// A linear space carrying an so(5) action.
trait Module {
    fn dim(&self) -> usize;
    fn apply(&self, op: Op, v: &CVec) -> CVec;
    fn casimir(&self, v: &CVec) -> CVec {
        let mut acc = CVec::zeros(v.len());
        for k in 0..10 {
            let w = self.apply(Op::Gen(k), v);
            acc += self.apply(Op::Gen(k), &w);
        }
        acc
    }
}

impl Module for RepData {
    fn dim(&self) -> usize {
        RepData::dim(self)
    }
    fn apply(&self, op: Op, v: &CVec) -> CVec {
        self.op(op) * v
    }
}

struct Product<'a>(&'a RepData, &'a RepData);

impl Module for Product<'_> {
    fn dim(&self) -> usize {
        self.0.dim() * self.1.dim()
    }
    fn apply(&self, op: Op, v: &CVec) -> CVec {
        kron_sum_apply(self.0.op(op), self.1.op(op), v)
    }
}

#[derive(Debug, Clone)]
pub struct So5Irrep {
    pub label: So5Label,
    pub dim: usize,
    pub basis: Vec<So5Row>,
    pub data: RepData,
}

impl So5Irrep {
    pub fn generators(&self) -> &[CMat] {
        &self.data.generators
    }

    pub fn index_of(&self, row: &So5Row) -> Option<usize> {
        self.basis.iter().position(|r| r == row)
    }
}

fn unit(n: usize, k: usize) -> CVec {
    let mut v = CVec::zeros(n);
    v[k] = re(1.0);
    v
}

/// so(4) highest-weight vectors with Casimir `target`, grouped by weight `(2 A3, 2 B3)`.
fn hw_blocks(m: &dyn Module, wts: &[(i32, i32)], target: f64) -> BTreeMap<(i32, i32), Vec<CVec>> {
    let n = m.dim();
    let mut out = BTreeMap::new();
    let keys: BTreeSet<(i32, i32)> = wts.iter().cloned().collect();
    for key in keys {
        if key.0 < 0 || key.1 < 0 {
            continue;
        }
        let sel: Vec<usize> = (0..n).filter(|&i| wts[i] == key).collect();
        let cols: Vec<(CVec, CVec)> = sel
            .iter()
            .map(|&i| {
                let e = unit(n, i);
                (m.apply(Op::Ladder(AP), &e), m.apply(Op::Ladder(BP), &e))
            })
            .collect();
        let k = sel.len();
        let gram = CMat::from_fn(k, k, |r, c| cols[r].0.dotc(&cols[c].0) + cols[r].1.dotc(&cols[c].1));
        let (w, u) = eigh(&gram);
        let null: Vec<usize> = (0..k).filter(|&i| w[i] < 1e-8).collect();
        if null.is_empty() {
            continue;
        }
        let basis: Vec<CVec> = null
            .iter()
            .map(|&c| {
                let mut v = CVec::zeros(n);
                for (a, &i) in sel.iter().enumerate() {
                    v[i] = u[(a, c)];
                }
                v
            })
            .collect();
        let cv: Vec<CVec> = basis.iter().map(|v| m.casimir(v)).collect();
        let cs = CMat::from_fn(basis.len(), basis.len(), |r, c| basis[r].dotc(&cv[c]));
        let (cw, cu) = eigh(&cs);
        let keep: Vec<CVec> = (0..cw.len())
            .filter(|&i| (cw[i] - target).abs() < 1e-6)
            .map(|i| {
                let mut v = CVec::zeros(n);
                for (a, b) in basis.iter().enumerate() {
                    v += b * cu[(a, i)];
                }
                v
            })
            .collect();
        if !keep.is_empty() {
            out.insert(key, keep);
        }
    }
    out
}

/// Lowers a highest-weight vector of block `(j1, j2)` with Condon-Shortley normalisation.
fn descend(m: &dyn Module, v: &CVec, j1: i32, j2: i32) -> BTreeMap<(i32, i32), CVec> {
    let fac = |j: i32, mu: i32| {
        let (j, mu) = (j as f64 / 2.0, mu as f64 / 2.0);
        (j * (j + 1.0) - mu * (mu - 1.0)).sqrt()
    };
    let mut st = BTreeMap::new();
    st.insert((j1, j2), v.clone());
    let mut m1 = j1;
    while m1 >= -j1 {
        if m1 < j1 {
            let prev = &st[&(m1 + 2, j2)];
            let w = m.apply(Op::Ladder(AM), prev) / re(fac(j1, m1 + 2));
            st.insert((m1, j2), w);
        }
        let mut m2 = j2 - 2;
        while m2 >= -j2 {
            let prev = &st[&(m1, m2 + 2)];
            let w = m.apply(Op::Ladder(BM), prev) / re(fac(j2, m2 + 2));
            st.insert((m1, m2), w);
            m2 -= 2;
        }
        m1 -= 2;
    }
    st
}

fn finalize(m: &dyn Module, wts: &[(i32, i32)], label: So5Label, hw_index: usize, power: &str) -> Result<So5Irrep, So5Error> {
    let (t1, t2) = label.twice();
    let (a, b) = (label.jbar1.value(), label.jbar2.value());
    // Casimir in absolute units; the scale is 2 by construction of the basis
    let target = 2.0 * (a * (a + 2.0) + b * (b + 1.0));
    let found = hw_blocks(m, wts, target);
    let mut blocks: BTreeMap<(i32, i32), CVec> = BTreeMap::new();
    for (k, vs) in found {
        if vs.len() != 1 {
            return Err(So5Error::NotFound { label, power: format!("{power} (repeated so(4) block {k:?})") });
        }
        blocks.insert(k, vs.into_iter().next().unwrap());
    }
    let root = (t1, t2);
    let Some(v) = blocks.get(&root).cloned() else {
        return Err(So5Error::NotFound { label, power: power.to_string() });
    };
    let ph = v[hw_index];
    if ph.norm() < 1e-8 {
        return Err(So5Error::NotFound { label, power: power.to_string() });
    }
    blocks.insert(root, v * (ph.conj() / ph.norm()));
    let keys: Vec<(i32, i32)> = blocks.keys().cloned().collect();
    let mut fixed: BTreeSet<(i32, i32)> = [root].into_iter().collect();
    while fixed.len() < keys.len() {
        let mut progress = false;
        for &bk in &keys {
            if fixed.contains(&bk) {
                continue;
            }
            let anchors: Vec<(i32, i32)> = fixed.iter().cloned().collect();
            for b0 in anchors {
                let s = (bk.0 - b0.0, bk.1 - b0.1);
                if let Some(ps) = P_SHIFTS.iter().position(|&x| x == s) {
                    let pv = m.apply(Op::P(ps), &blocks[&b0]);
                    let z = blocks[&bk].dotc(&pv);
                    if z.norm() > 1e-9 {
                        let nb = &blocks[&bk] * (z / z.norm());
                        blocks.insert(bk, nb);
                        fixed.insert(bk);
                        progress = true;
                        break;
                    }
                }
            }
        }
        if !progress {
            return Err(So5Error::Phase(label));
        }
    }
    let mut cols = Vec::new();
    let mut basis = Vec::new();
    for &(j1, j2) in &keys {
        let st = descend(m, &blocks[&(j1, j2)], j1, j2);
        for m1 in (-j1..=j1).step_by(2) {
            for m2 in (-j2..=j2).step_by(2) {
                cols.push(st[&(m1, m2)].clone());
                basis.push(So5Row {
                    j1: Half::from_twice(j1),
                    j2: Half::from_twice(j2),
                    m1: Half::from_twice(m1),
                    m2: Half::from_twice(m2),
                    tag: 0,
                });
            }
        }
    }
    if cols.len() != dim_so5(label) {
        return Err(So5Error::NotFound { label, power: format!("{power} (found dimension {})", cols.len()) });
    }
    let q = CMat::from_columns(&cols);
    let gens: Vec<CMat> = (0..10)
        .map(|k| {
            let gq: Vec<CVec> = cols.iter().map(|c| m.apply(Op::Gen(k), c)).collect();
            q.adjoint() * CMat::from_columns(&gq)
        })
        .collect();
    Ok(So5Irrep { label, dim: cols.len(), basis, data: RepData::from_generators(gens) })
}

fn gamma_matrices() -> Vec<CMat> {
    let s1 = CMat::from_row_slice(2, 2, &[re(0.0), re(1.0), re(1.0), re(0.0)]);
    let s2 = CMat::from_row_slice(2, 2, &[re(0.0), -I, I, re(0.0)]);
    let s3 = CMat::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]);
    let id = CMat::identity(2, 2);
    vec![s1.kronecker(&s1), s1.kronecker(&s2), s1.kronecker(&s3), s2.kronecker(&id), s3.kronecker(&id)]
}

/// Spinor seed `M_ab = -(i/4) [g_a, g_b]`.
pub fn spinor_generators() -> Vec<CMat> {
    let g = gamma_matrices();
    pairs(5).into_iter().map(|(a, b)| comm(&g[a], &g[b]) * (I * re(-0.25))).collect()
}

fn seed_irrep(gens0: Vec<CMat>, label: So5Label, power: &str) -> Result<So5Irrep, So5Error> {
    let d0 = RepData::from_generators(gens0);
    let h = &d0.ladders[A3] + &d0.ladders[B3] * re(std::f64::consts::PI);
    let (_, u) = eigh(&h);
    let gens: Vec<CMat> = d0.generators.iter().map(|g| u.adjoint() * g * &u).collect();
    let d = RepData::from_generators(gens);
    let wts: Vec<(i32, i32)> = (0..d.dim())
        .map(|k| ((2.0 * d.ladders[A3][(k, k)].re).round() as i32, (2.0 * d.ladders[B3][(k, k)].re).round() as i32))
        .collect();
    let hw = wts.iter().position(|&w| w == label.twice()).ok_or(So5Error::NotFound { label, power: power.into() })?;
    finalize(&d, &wts, label, hw, power)
}

static IRREPS: Lazy<RwLock<HashMap<So5Label, Arc<So5Irrep>>>> = Lazy::new(|| RwLock::new(HashMap::new()));

pub fn build_irrep(label: So5Label) -> Result<Arc<So5Irrep>, So5Error> {
    build_irrep_limited(label, DEFAULT_MAX_TWICE)
}

/// Constructs the irrep as the Cartan component of `V(label - w) (x) V(w)`, with `w` the
/// spinor when `Jbar1 > Jbar2` and the vector otherwise.
pub fn build_irrep_limited(label: So5Label, max_twice: i32) -> Result<Arc<So5Irrep>, So5Error> {
    let (t1, t2) = label.twice();
    if t1 > max_twice {
        return Err(So5Error::AboveLimit { label, max: max_twice });
    }
    if let Some(r) = IRREPS.read().unwrap().get(&label) {
        return Ok(r.clone());
    }
    let irrep = match (t1, t2) {
        (0, 0) => So5Irrep {
            label,
            dim: 1,
            basis: vec![So5Row { j1: Half::ZERO, j2: Half::ZERO, m1: Half::ZERO, m2: Half::ZERO, tag: 0 }],
            data: RepData::from_generators(vec![CMat::zeros(1, 1); 10]),
        },
        (1, 0) => seed_irrep(spinor_generators(), label, "gamma-matrix spinor")?,
        (1, 1) => seed_irrep(defining_generators(5), label, "defining vector")?,
        _ => {
            let (base, seed) = if t1 > t2 {
                (So5Label::from_twice(t1 - 1, t2), So5Label::from_twice(1, 0))
            } else {
                (So5Label::from_twice(t1 - 1, t2 - 1), So5Label::from_twice(1, 1))
            };
            let a = build_irrep_limited(base, max_twice)?;
            let b = build_irrep_limited(seed, max_twice)?;
            let prod = Product(&a.data, &b.data);
            let wts: Vec<(i32, i32)> = a
                .basis
                .iter()
                .flat_map(|x| b.basis.iter().map(move |y| (x.m1.twice + y.m1.twice, x.m2.twice + y.m2.twice)))
                .collect();
            let top = |r: &So5Irrep, l: So5Label| {
                r.basis.iter().position(|x| (x.j1.twice, x.j2.twice, x.m1.twice, x.m2.twice) == (l.twice().0, l.twice().1, l.twice().0, l.twice().1)).unwrap()
            };
            let hw = top(&a, base) * b.dim + top(&b, seed);
            finalize(&prod, &wts, label, hw, &format!("{base} x {seed}"))?
        }
    };
    let arc = Arc::new(irrep);
    IRREPS.write().unwrap().insert(label, arc.clone());
    Ok(arc)
}

/// so(4) content read off the adapted basis.
pub fn branching_so4(label: So5Label) -> Result<Vec<So4Label>, So5Error> {
    let r = build_irrep(label)?;
    let mut out: Vec<So4Label> = Vec::new();
    for row in &r.basis {
        if row.m1 == row.j1 && row.m2 == row.j2 {
            out.push(row.block());
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct So5CgTable {
    pub a: So5Label,
    pub b: So5Label,
    pub c: So5Label,
    pub rho: usize,
    /// `values[(ia * dim_b + ib, ic)] = <a ia; b ib | c ic>_rho`.
    pub values: DMatrix<f64>,
    pub convention: String,
    /// Largest imaginary part discarded when storing real values.
    pub imag_residual: f64,
}

impl So5CgTable {
    pub fn get(&self, ia: usize, ib: usize, ic: usize) -> f64 {
        self.values[(ia * dim_so5(self.b) + ib, ic)]
    }
}

static CG_TABLES: Lazy<RwLock<HashMap<(So5Label, So5Label, So5Label), Arc<Vec<So5CgTable>>>>> =
    Lazy::new(|| RwLock::new(HashMap::new()));

/// All CG tables coupling `a (x) b -> c`, one per outer multiplicity; empty if `c` does not occur.
pub fn cg_so5(a: So5Label, b: So5Label, c: So5Label) -> Result<Arc<Vec<So5CgTable>>, So5Error> {
    if let Some(t) = CG_TABLES.read().unwrap().get(&(a, b, c)) {
        return Ok(t.clone());
    }
    let tabs = Arc::new(solve_cg(a, b, c)?);
    CG_TABLES.write().unwrap().insert((a, b, c), tabs.clone());
    Ok(tabs)
}

fn solve_cg(a: So5Label, b: So5Label, c: So5Label) -> Result<Vec<So5CgTable>, So5Error> {
    let ra = build_irrep(a)?;
    let rb = build_irrep(b)?;
    let rc = build_irrep(c)?;
    let prod = Product(&ra.data, &rb.data);
    let dh = prod.dim();
    let dc = rc.dim;
    let wts: Vec<(i32, i32)> = ra
        .basis
        .iter()
        .flat_map(|x| rb.basis.iter().map(move |y| (x.m1.twice + y.m1.twice, x.m2.twice + y.m2.twice)))
        .collect();
    let blocks = hw_blocks(&prod, &wts, casimir2_so5(c) * 2.0 / casimir_scale());
    let cblocks: BTreeSet<(i32, i32)> = rc.basis.iter().map(|r| (r.j1.twice, r.j2.twice)).collect();
    // candidate frames: each a full so(4) block lowered from one highest-weight vector
    let mut frames: Vec<((i32, i32), BTreeMap<(i32, i32), CVec>)> = Vec::new();
    for bl in &cblocks {
        if let Some(ys) = blocks.get(bl) {
            for y in ys {
                frames.push((*bl, descend(&prod, y, bl.0, bl.1)));
            }
        }
    }
    let nunk = frames.len();
    if nunk == 0 {
        return Ok(Vec::new());
    }
    let rows_c: Vec<((i32, i32), (i32, i32))> =
        rc.basis.iter().map(|r| ((r.j1.twice, r.j2.twice), (r.m1.twice, r.m2.twice))).collect();
    let frame_vec = |k: usize, v: usize| -> Option<&CVec> {
        let (bl, f) = &frames[k];
        (rows_c[v].0 == *bl).then(|| &f[&rows_c[v].1])
    };
    let mut gram = CMat::zeros(nunk, nunk);
    for s in 0..4 {
        let pc = &rc.data.p[s];
        for v in 0..dc {
            let mut r = CMat::zeros(dh, nunk);
            for k in 0..nunk {
                let mut col = CVec::zeros(dh);
                if let Some(f) = frame_vec(k, v) {
                    col += prod.apply(Op::P(s), f);
                }
                for v2 in 0..dc {
                    let coef = pc[(v2, v)];
                    if coef.norm() > 1e-14 {
                        if let Some(f) = frame_vec(k, v2) {
                            col -= f * coef;
                        }
                    }
                }
                r.set_column(k, &col);
            }
            gram += r.adjoint() * &r;
        }
    }
    let (w, u) = eigh(&gram);
    let scale = w.iter().cloned().fold(1.0, f64::max);
    let null: Vec<usize> = (0..nunk).filter(|&i| w[i] < 1e-10 * scale).collect();
    if null.is_empty() {
        return Ok(Vec::new());
    }
    // flatten each intertwiner in (rowC, rowA, rowB) order
    let flat: Vec<CVec> = null
        .iter()
        .map(|&j| {
            let mut e = CVec::zeros(dc * dh);
            for v in 0..dc {
                for k in 0..nunk {
                    if let Some(f) = frame_vec(k, v) {
                        let coef = u[(k, j)];
                        for i in 0..dh {
                            e[v * dh + i] += f[i] * coef;
                        }
                    }
                }
            }
            e
        })
        .collect();
    let span = orthonormalize(&flat);
    let mut picked: Vec<CVec> = Vec::new();
    for t in 0..dc * dh {
        if picked.len() == span.len() {
            break;
        }
        let mut v = CVec::zeros(dc * dh);
        for q in &span {
            v += q * q[t].conj();
        }
        for o in &picked {
            let z = o.dotc(&v);
            v -= o * z;
        }
        let nv = v.norm();
        if nv > 1e-6 {
            picked.push(v / re(nv));
        }
    }
    let mut out = Vec::new();
    for (rho, mut v) in picked.into_iter().enumerate() {
        if let Some(first) = v.iter().find(|z| z.norm() > 1e-10).cloned() {
            v *= first.conj() / first.norm();
        }
        let s = (dc as f64).sqrt();
        let mut imag = 0.0f64;
        let values = DMatrix::from_fn(dh, dc, |i, col| {
            let z = v[col * dh + i] * s;
            imag = imag.max(z.im.abs());
            z.re
        });
        out.push(So5CgTable { a, b, c, rho, values, convention: CG_CONVENTION.to_string(), imag_residual: imag });
    }
    Ok(out)
}

fn orthonormalize(vs: &[CVec]) -> Vec<CVec> {
    let mut out: Vec<CVec> = Vec::new();
    for v in vs {
        let mut w = v.clone();
        for _ in 0..2 {
            for o in &out {
                let z = o.dotc(&w);
                w -= o * z;
            }
        }
        let n = w.norm();
        if n > 1e-10 {
            out.push(w / re(n));
        }
    }
    out
}

/// Labels `c` with a nonzero coupling `a (x) b -> c` among `candidates`.
pub fn couplings(a: So5Label, b: So5Label, candidates: &[So5Label]) -> Result<Vec<(So5Label, usize)>, So5Error> {
    let mut out = Vec::new();
    for &c in candidates {
        let n = cg_so5(a, b, c)?.len();
        if n > 0 {
            out.push((c, n));
        }
    }
    Ok(out)
}

#[doc(hidden)]
pub fn product_generator_action(a: &So5Irrep, b: &So5Irrep, k: usize, v: &CVec) -> CVec {
    Product(&a.data, &b.data).apply(Op::Gen(k), v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::son::commutation_residual;

    fn l(a: i32, b: i32) -> So5Label {
        So5Label::from_twice(a, b)
    }

    fn content(label: So5Label) -> Vec<(i32, i32)> {
        branching_so4(label).unwrap().iter().map(|x| (x.j1.twice, x.j2.twice)).collect()
    }

    #[test]
    fn dimensions() {
        assert_eq!(dim_so5(l(0, 0)), 1);
        assert_eq!(dim_so5(l(2, 0)), 10);
        assert_eq!(dim_so5(l(2, 2)), 14);
        assert_eq!(dim_so5(l(1, 0)), 4);
        assert_eq!(dim_so5(l(2, 1)), 16);
        assert_eq!(spinor_generators()[0].nrows(), dim_so5(l(1, 0)));
    }

    #[test]
    fn spinor_seed_relations() {
        assert!(commutation_residual(5, &spinor_generators()) < 1e-15);
        let flipped: Vec<CMat> = spinor_generators().iter().map(|g| -g).collect();
        assert!(commutation_residual(5, &flipped) > 0.1);
    }

    #[test]
    fn p_operators_carry_half_half_weights() {
        let d = RepData::from_generators(defining_generators(5));
        for (s, p) in P_SHIFTS.iter().zip(&d.p) {
            let ra = comm(&d.ladders[A3], p) - p * re(s.0 as f64 / 2.0);
            let rb = comm(&d.ladders[B3], p) - p * re(s.1 as f64 / 2.0);
            assert!(max_abs(&ra) < 1e-15 && max_abs(&rb) < 1e-15);
        }
        let norm: f64 = d.p[0].iter().map(|z| z.norm_sqr()).sum();
        assert!((norm - 4.0).abs() < 1e-14);
    }

    #[test]
    fn small_branchings() {
        assert_eq!(content(l(0, 0)), vec![(0, 0)]);
        assert_eq!(content(l(1, 0)), vec![(0, 1), (1, 0)]);
        assert_eq!(content(l(2, 0)), vec![(0, 2), (1, 1), (2, 0)]);
        assert_eq!(content(l(2, 2)), vec![(0, 0), (1, 1), (2, 2)]);
        let v: usize = branching_so4(l(1, 1)).unwrap().iter().map(|x| x.dim()).sum();
        assert_eq!(v, 5);
    }

    #[test]
    fn constructed_irreps_are_valid() {
        for label in So5Label::all_up_to(3) {
            let r = build_irrep(label).unwrap();
            assert_eq!(r.dim, dim_so5(label));
            assert!(commutation_residual(5, r.generators()) < 1e-11, "{label}");
            for g in r.generators() {
                assert!(max_abs(&(g - g.adjoint())) < 1e-12);
            }
            let c = casimir_matrix(r.generators());
            let want = casimir2_so5(label);
            assert!(max_abs(&(c - CMat::identity(r.dim, r.dim) * re(want))) < 1e-10, "{label}");
            for p in &r.data.p {
                assert!(p.iter().all(|z| z.im.abs() < 1e-12));
            }
            // so(4) sub-block diagonal in (J1, J2, m1, m2)
            for k in 0..r.dim {
                let row = r.basis[k];
                assert!((r.data.ladders[A3][(k, k)].re - row.m1.value()).abs() < 1e-12);
                assert!((r.data.ladders[B3][(k, k)].re - row.m2.value()).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn casimir_normalisation() {
        assert!((casimir_scale() - 2.0).abs() < 1e-12);
        assert_eq!(casimir2_so5(l(0, 0)), 0.0);
        assert!((casimir2_so5(l(2, 0)) / 3.0 - casimir_scale()).abs() < 1e-14);
    }

    #[test]
    fn limit_guard() {
        assert!(matches!(build_irrep_limited(l(5, 1), 4), Err(So5Error::AboveLimit { .. })));
        assert!(So5Label::new(Half::from_twice(1), Half::from_twice(2)).is_err());
    }

    fn check_table(t: &So5CgTable) -> f64 {
        let (ra, rb, rc) = (build_irrep(t.a).unwrap(), build_irrep(t.b).unwrap(), build_irrep(t.c).unwrap());
        let e = t.values.map(re);
        let mut worst = 0.0f64;
        for k in 0..10 {
            let he: Vec<CVec> = (0..rc.dim).map(|c| product_generator_action(&ra, &rb, k, &e.column(c).into_owned())).collect();
            let lhs = CMat::from_columns(&he);
            let rhs = &e * &rc.generators()[k];
            worst = worst.max(max_abs(&(lhs - rhs)));
        }
        worst
    }

    #[test]
    fn singlet_in_adjoint_square() {
        let t = cg_so5(l(2, 0), l(2, 0), l(0, 0)).unwrap();
        assert_eq!(t.len(), 1);
        let s: f64 = t[0].values.iter().map(|x| x * x).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(check_table(&t[0]) < 1e-10);
        // invariant pairing: <a i; a j|0> proportional to the adjoint metric, here diagonal up to sign
        let d = 10;
        for i in 0..d {
            for j in 0..d {
                let v = t[0].get(i, j, 0);
                if v.abs() > 1e-12 {
                    assert!((v.abs() - 1.0 / (d as f64).sqrt()).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn identity_coupling() {
        let t = cg_so5(l(2, 2), l(0, 0), l(2, 2)).unwrap();
        assert_eq!(t.len(), 1);
        assert!((t[0].values.clone() - DMatrix::<f64>::identity(14, 14)).norm() < 1e-12);
    }

    #[test]
    fn spinor_square_contains_vector() {
        let t = cg_so5(l(1, 0), l(1, 0), l(1, 1)).unwrap();
        assert_eq!(t.len(), 1);
        assert!(check_table(&t[0]) < 1e-10);
        assert!(cg_so5(l(1, 0), l(1, 0), l(2, 2)).unwrap().is_empty());
    }

    #[test]
    fn tables_isometric_and_phase_fixed() {
        for (a, b, c) in [(l(2, 0), l(2, 2), l(2, 0)), (l(2, 2), l(2, 2), l(2, 2)), (l(2, 1), l(2, 2), l(2, 1))] {
            let tabs = cg_so5(a, b, c).unwrap();
            assert!(!tabs.is_empty());
            for t in tabs.iter() {
                assert!(check_table(t) < 1e-10);
                assert!(t.imag_residual < 1e-10);
                let first = t.values.transpose().iter().find(|x| x.abs() > 1e-10).cloned().unwrap();
                assert!(first > 0.0);
            }
            for x in tabs.iter() {
                for y in tabs.iter() {
                    let g = (x.values.transpose() * &y.values).map(|v| v);
                    let want = if x.rho == y.rho { DMatrix::identity(g.nrows(), g.ncols()) } else { DMatrix::zeros(g.nrows(), g.ncols()) };
                    assert!((g - want).norm() < 1e-10);
                }
            }
        }
    }
}
