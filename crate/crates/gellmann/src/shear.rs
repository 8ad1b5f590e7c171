//! Shear operators `T` from original and generalized Gell-Mann formulas, held as symbolic term
//! lists and assembled on a truncated space.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::halfint::Half;
use crate::linalg::{axpy, frob, re, scale, selector, sparse_from_triplets, sparse_identity, SpMat, C64, I};
use crate::repspace::{
    build_d_with, build_k, so4_combinations, IrrepLabel, PhaseAssignment, Row, So4Basis, SpaceError, TruncatedSpace,
};
use crate::so3::cg_twice;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ShearError {
    #[error("the original Gell-Mann formula is not applicable for n = 5; use the generalized formula")]
    OriginalNotApplicable,
    #[error("no formula for n = {0}")]
    Rank(usize),
    #[error("formula for n = {formula} cannot be assembled on an n = {space} space")]
    Mismatch { formula: usize, space: usize },
    #[error("unknown parameter {0:?}")]
    UnknownParam(String),
    #[error("cannot parse complex number {0:?}")]
    BadNumber(String),
    #[error("construction of {0} failed: {1}")]
    Coupling(String, SpaceError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Param {
    Sigma1,
    Sigma2,
    Delta1,
    Delta2,
    Gamma1,
    Gamma2,
    Gamma3,
}

impl Param {
    pub fn name(self) -> &'static str {
        match self {
            Param::Sigma1 => "sigma1",
            Param::Sigma2 => "sigma2",
            Param::Delta1 => "delta1",
            Param::Delta2 => "delta2",
            Param::Gamma1 => "gamma1",
            Param::Gamma2 => "gamma2",
            Param::Gamma3 => "gamma3",
        }
    }

    /// Accepts `sigma` and `delta` as aliases of the first members.
    pub fn parse(s: &str) -> Result<Param, ShearError> {
        Ok(match s.trim() {
            "sigma" | "sigma1" => Param::Sigma1,
            "sigma2" => Param::Sigma2,
            "delta" | "delta1" => Param::Delta1,
            "delta2" => Param::Delta2,
            "gamma1" => Param::Gamma1,
            "gamma2" => Param::Gamma2,
            "gamma3" => Param::Gamma3,
            other => return Err(ShearError::UnknownParam(other.to_string())),
        })
    }
}

/// Short name of a shear-label row.
pub fn row_name(r: &Row) -> String {
    match r {
        Row::So3 { m } => format!("mu={m}"),
        Row::So4 { m1, m2 } => format!("mu1={m1},mu2={m2}"),
        Row::So4Chain { j, m } => format!("j={j},mu={m}"),
        Row::So5(x) => format!("j1={},j2={},mu1={},mu2={}", x.j1, x.j2, x.m1, x.m2),
    }
}

/// Representation labels; unused members stay zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ParamSet {
    pub sigma1: C64,
    pub sigma2: C64,
    pub delta1: C64,
    pub delta2: C64,
    pub gamma1: C64,
    pub gamma2: C64,
    pub gamma3: C64,
}

impl ParamSet {
    pub fn get(&self, p: Param) -> C64 {
        match p {
            Param::Sigma1 => self.sigma1,
            Param::Sigma2 => self.sigma2,
            Param::Delta1 => self.delta1,
            Param::Delta2 => self.delta2,
            Param::Gamma1 => self.gamma1,
            Param::Gamma2 => self.gamma2,
            Param::Gamma3 => self.gamma3,
        }
    }

    pub fn set(&mut self, p: Param, v: C64) {
        match p {
            Param::Sigma1 => self.sigma1 = v,
            Param::Sigma2 => self.sigma2 = v,
            Param::Delta1 => self.delta1 = v,
            Param::Delta2 => self.delta2 = v,
            Param::Gamma1 => self.gamma1 = v,
            Param::Gamma2 => self.gamma2 = v,
            Param::Gamma3 => self.gamma3 = v,
        }
    }

    pub fn with(mut self, p: Param, v: C64) -> Self {
        self.set(p, v);
        self
    }

    /// Real and imaginary parts uniform in `[-2, 2]` for each listed parameter.
    pub fn random(params: &[Param], rng: &mut impl Rng) -> Self {
        let mut out = ParamSet::default();
        for &p in params {
            out.set(p, C64::new(rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0)));
        }
        out
    }

    /// Parses `name=value,...` with complex values such as `1.5`, `-2i`, `0.3+0.7i`.
    pub fn parse(s: &str) -> Result<Self, ShearError> {
        let mut out = ParamSet::default();
        for item in s.split(',').filter(|x| !x.trim().is_empty()) {
            let (k, v) = item.split_once('=').ok_or_else(|| ShearError::UnknownParam(item.to_string()))?;
            out.set(Param::parse(k)?, parse_complex(v)?);
        }
        Ok(out)
    }
}

pub fn parse_complex(s: &str) -> Result<C64, ShearError> {
    let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || ShearError::BadNumber(s.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some(body) = t.strip_suffix('i').or_else(|| t.strip_suffix('j')) {
        // split at the last sign that is not an exponent sign
        let bytes = body.as_bytes();
        let mut cut = None;
        for k in (1..bytes.len()).rev() {
            if (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E') {
                cut = Some(k);
                break;
            }
        }
        let im_of = |x: &str| -> Result<f64, ShearError> {
            match x {
                "" | "+" => Ok(1.0),
                "-" => Ok(-1.0),
                _ => x.parse::<f64>().map_err(|_| bad()),
            }
        };
        return match cut {
            Some(k) => Ok(C64::new(body[..k].parse::<f64>().map_err(|_| bad())?, im_of(&body[k..])?)),
            None => Ok(C64::new(0.0, im_of(body)?)),
        };
    }
    t.parse::<f64>().map(re).map_err(|_| bad())
}

/// Constant plus a linear combination of named parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coeff {
    pub constant: C64,
    pub linear: Vec<(Param, C64)>,
}

impl Coeff {
    pub fn num(c: C64) -> Self {
        Coeff { constant: c, linear: vec![] }
    }
    pub fn param(p: Param, c: C64) -> Self {
        Coeff { constant: re(0.0), linear: vec![(p, c)] }
    }
    pub fn eval(&self, p: &ParamSet) -> C64 {
        self.linear.iter().fold(self.constant, |acc, (k, c)| acc + p.get(*k) * c)
    }
}

/// Left-action operators appearing in K factors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KOp {
    /// `K_0` of so(3).
    K0,
    KA3,
    KB3,
    KAPlus,
    KAMinus,
    KBPlus,
    KBMinus,
}

/// `constant + sum c K`, applied to the ket before the D-function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KFactor {
    pub constant: Coeff,
    pub ops: Vec<(KOp, C64)>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CasimirWrap {
    /// `[C2(so(n)), .]`
    Right,
    /// `[C2(so(4)_K), .]` of the left rows, n = 5.
    LeftSo4,
}

/// `coeff * W(D_left * K)` with `W` an optional Casimir commutator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Term {
    pub coeff: Coeff,
    /// Left rows of the shear label, with weights.
    pub left: Vec<(Row, C64)>,
    pub kfactor: Option<KFactor>,
    pub wrap: Option<CasimirWrap>,
}

/// One shear component, a combination of right rows of the shear label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub right: Vec<(Row, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShearFormula {
    pub name: String,
    pub n: usize,
    pub basis: So4Basis,
    pub terms: Vec<Term>,
    pub components: Vec<Component>,
}

impl ShearFormula {
    pub fn params(&self) -> Vec<Param> {
        let mut s = BTreeSet::new();
        for t in &self.terms {
            s.extend(t.coeff.linear.iter().map(|x| x.0));
            if let Some(k) = &t.kfactor {
                s.extend(k.constant.linear.iter().map(|x| x.0));
            }
        }
        s.into_iter().collect()
    }

    pub fn shear_label(&self) -> IrrepLabel {
        IrrepLabel::shear_label(self.n).expect("formula rank")
    }
}

fn one(r: Row) -> Vec<(Row, C64)> {
    vec![(r, re(1.0))]
}

fn pm(a: Row, b: Row, s: f64) -> Vec<(Row, C64)> {
    vec![(a, re(1.0)), (b, re(s))]
}

fn term(coeff: Coeff, left: Vec<(Row, C64)>) -> Term {
    Term { coeff, left, kfactor: None, wrap: None }
}

fn wrapped(coeff: Coeff, left: Vec<(Row, C64)>, w: CasimirWrap) -> Term {
    Term { coeff, left, kfactor: None, wrap: Some(w) }
}

fn with_k(coeff: Coeff, left: Vec<(Row, C64)>, constant: Coeff, ops: Vec<(KOp, C64)>) -> Term {
    Term { coeff, left, kfactor: Some(KFactor { constant, ops }), wrap: None }
}

fn zero() -> Coeff {
    Coeff::num(re(0.0))
}

fn product_components(n: usize) -> Vec<Component> {
    let lambda = IrrepLabel::shear_label(n).expect("rank");
    lambda
        .rows()
        .expect("rows")
        .into_iter()
        .map(|r| Component { name: row_name(&r), right: vec![(r, 1.0)] })
        .collect()
}

/// so(4) (1,1) rows coupled to `(j, mu)` (twice values) through the diagonal so(3).
fn chain_combo(j: i32, mu: i32) -> Vec<(Row, f64)> {
    let mut v = Vec::new();
    for a in [-2, 0, 2] {
        for b in [-2, 0, 2] {
            let c = cg_twice(2, a, 2, b, j, mu);
            if c != 0.0 {
                v.push((Row::so4(a, b), c));
            }
        }
    }
    v
}

fn chain_left(j: i32, mu: i32) -> Vec<(Row, C64)> {
    chain_combo(j, mu).into_iter().map(|(r, c)| (r, re(c))).collect()
}

fn chain_components() -> Vec<Component> {
    let mut out = Vec::new();
    for j in [0, 2, 4] {
        for mu in (-j..=j).step_by(2) {
            out.push(Component {
                name: format!("j={},mu={}", Half::from_twice(j), Half::from_twice(mu)),
                right: chain_combo(j, mu),
            });
        }
    }
    out
}

/// Original Gell-Mann formula: `sigma D + prefactor [C2, D]` with left rows zero.
pub fn formula_original(n: usize, basis: So4Basis) -> Result<ShearFormula, ShearError> {
    let s = Coeff::param(Param::Sigma1, re(1.0));
    match (n, basis) {
        (3, _) => Ok(ShearFormula {
            name: "sl3-original".into(),
            n,
            basis: So4Basis::Product,
            terms: vec![
                term(s, one(Row::so3(0))),
                wrapped(Coeff::num(I / 6f64.sqrt()), one(Row::so3(0)), CasimirWrap::Right),
            ],
            components: product_components(3),
        }),
        (4, So4Basis::Product) => Ok(ShearFormula {
            name: "sl4-original-product".into(),
            n,
            basis,
            terms: vec![
                term(s, one(Row::so4(0, 0))),
                wrapped(Coeff::num(I * 0.5), one(Row::so4(0, 0)), CasimirWrap::Right),
            ],
            components: product_components(4),
        }),
        (4, So4Basis::Chain) => Ok(ShearFormula {
            name: "sl4-original-chain".into(),
            n,
            basis,
            terms: vec![
                term(s, chain_left(0, 0)),
                wrapped(Coeff::num(-I * 3f64.sqrt() / 4.0), chain_left(0, 0), CasimirWrap::Right),
            ],
            components: chain_components(),
        }),
        (5, _) => Err(ShearError::OriginalNotApplicable),
        _ => Err(ShearError::Rank(n)),
    }
}

/// Generalized formulas with K-dependent terms.
pub fn formula_generalized(n: usize, basis: So4Basis) -> Result<ShearFormula, ShearError> {
    let p = |x: Param, c: C64| Coeff::param(x, c);
    let k = |c: C64| Coeff::num(c);
    match (n, basis) {
        (3, _) => Ok(ShearFormula {
            name: "sl3-generalized".into(),
            n,
            basis: So4Basis::Product,
            terms: vec![
                term(p(Param::Sigma1, re(1.0)), one(Row::so3(0))),
                wrapped(k(I / 6f64.sqrt()), one(Row::so3(0)), CasimirWrap::Right),
                with_k(k(I), pm(Row::so3(4), Row::so3(-4), -1.0), zero(), vec![(KOp::K0, re(1.0))]),
                term(p(Param::Delta1, re(1.0)), pm(Row::so3(4), Row::so3(-4), 1.0)),
            ],
            components: product_components(3),
        }),
        (4, So4Basis::Product) => {
            let (dpp, dmm, dmp, dpm) = (Row::so4(2, 2), Row::so4(-2, -2), Row::so4(-2, 2), Row::so4(2, -2));
            Ok(ShearFormula {
                name: "sl4-generalized-product".into(),
                n,
                basis,
                terms: vec![
                    term(p(Param::Sigma1, I), one(Row::so4(0, 0))),
                    wrapped(k(I * 0.5), one(Row::so4(0, 0)), CasimirWrap::Right),
                    term(p(Param::Delta1, I), pm(dpp, dmm, 1.0)),
                    with_k(k(I), pm(dpp, dmm, -1.0), zero(), vec![(KOp::KA3, re(1.0)), (KOp::KB3, re(1.0))]),
                    term(p(Param::Delta2, I), pm(dmp, dpm, 1.0)),
                    with_k(k(I), pm(dmp, dpm, -1.0), zero(), vec![(KOp::KA3, re(1.0)), (KOp::KB3, re(-1.0))]),
                ],
                components: product_components(4),
            })
        }
        (4, So4Basis::Chain) => {
            let s2 = 2f64.sqrt();
            let r2 = 1.0 / s2;
            // spherical components of K_A + K_B
            let l_minus = vec![(KOp::KAMinus, re(r2)), (KOp::KBMinus, re(r2))];
            let l_plus = vec![(KOp::KAPlus, re(-r2)), (KOp::KBPlus, re(-r2))];
            let l_zero = vec![(KOp::KA3, re(1.0)), (KOp::KB3, re(1.0))];
            let combo = |a: Vec<(Row, C64)>, b: Vec<(Row, C64)>, s: f64| {
                let mut v = a;
                v.extend(b.into_iter().map(|(r, c)| (r, c * s)));
                v
            };
            Ok(ShearFormula {
                name: "sl4-generalized-chain".into(),
                n,
                basis,
                terms: vec![
                    term(p(Param::Gamma1, re(1.0)), chain_left(0, 0)),
                    wrapped(k(-I * 3f64.sqrt() / 4.0), chain_left(0, 0), CasimirWrap::Right),
                    term(p(Param::Gamma2, re(1.0)), chain_left(4, 0)),
                    with_k(k(I * s2), chain_left(4, 2), zero(), l_minus),
                    with_k(k(-I * s2), chain_left(4, -2), zero(), l_plus),
                    term(p(Param::Gamma3, re(1.0)), combo(chain_left(4, 4), chain_left(4, -4), 1.0)),
                    with_k(k(I), combo(chain_left(4, 4), chain_left(4, -4), -1.0), zero(), l_zero),
                ],
                components: chain_components(),
            })
        }
        (5, _) => {
            let d = |a, b, c, e| one(Row::so5(a, b, c, e));
            let d00 = || d(0, 0, 0, 0);
            let d11 = || d(2, 2, 0, 0);
            let kd = |s1: f64, s2: f64| vec![(KOp::KA3, re(s1)), (KOp::KB3, re(s2))];
            Ok(ShearFormula {
                name: "sl5-generalized".into(),
                n,
                basis: So4Basis::Product,
                terms: vec![
                    term(p(Param::Sigma1, re(1.0)), d00()),
                    wrapped(k(I * (0.2f64).sqrt()), d00(), CasimirWrap::Right),
                    term(p(Param::Sigma2, I), d11()),
                    wrapped(k(I * 0.5), d11(), CasimirWrap::LeftSo4),
                    with_k(k(-I), d(2, 2, 2, -2), p(Param::Delta1, re(1.0)), kd(1.0, -1.0)),
                    with_k(k(-I), d(2, 2, -2, 2), p(Param::Delta1, re(1.0)), kd(-1.0, 1.0)),
                    with_k(k(I), d(2, 2, 2, 2), p(Param::Delta2, re(1.0)), kd(1.0, 1.0)),
                    with_k(k(I), d(2, 2, -2, -2), p(Param::Delta2, re(1.0)), kd(-1.0, -1.0)),
                ],
                components: product_components(5),
            })
        }
        _ => Err(ShearError::Rank(n)),
    }
}

/// The stated affine map between chain-basis and product-basis labels: `(sigma, delta1, delta2)` from `gamma`.
pub fn parameter_map_sl4(g1: C64, g2: C64, g3: C64) -> (C64, C64, C64) {
    let (s3, s6) = (3f64.sqrt(), 6f64.sqrt());
    let i_sigma = -g1 / s3 + g2 * (2.0f64 / 3.0).sqrt() - I * 2.0;
    let sigma = i_sigma / I;
    let delta1 = g3;
    let delta2 = g1 / s3 + g2 / s6 - I * 2.0;
    (sigma, delta1, delta2)
}

/// The affine map under which the product- and chain-basis generalized formulas coincide:
/// the stated map with `delta1` and `delta2` divided by `i`.
pub fn parameter_map_sl4_closing(g1: C64, g2: C64, g3: C64) -> (C64, C64, C64) {
    let (sigma, d1, d2) = parameter_map_sl4(g1, g2, g3);
    (sigma, d1 / I, d2 / I)
}

#[derive(Debug, Clone, Default)]
pub struct AssembleOptions {
    pub phases: PhaseAssignment,
}

/// Operator parts of a formula on a space, reused across parameter draws.
pub struct Assembler<'a> {
    space: &'a TruncatedSpace,
    formula: &'a ShearFormula,
    options: AssembleOptions,
    d_cache: HashMap<(Row, Row), SpMat>,
    k_ops: HashMap<KOp, SpMat>,
    casimir: Vec<f64>,
    left_casimir: Vec<f64>,
}

impl<'a> Assembler<'a> {
    pub fn new(formula: &'a ShearFormula, space: &'a TruncatedSpace, options: AssembleOptions) -> Result<Self, ShearError> {
        if formula.n != space.n {
            return Err(ShearError::Mismatch { formula: formula.n, space: space.n });
        }
        let mut k_ops = HashMap::new();
        let needs_k = formula.terms.iter().any(|t| t.kfactor.as_ref().is_some_and(|k| !k.ops.is_empty()));
        if needs_k {
            let k = build_k(space);
            if space.n == 3 {
                k_ops.insert(KOp::K0, k[0].clone());
            } else {
                let [ap, am, a3, bp, bm, b3] = so4_combinations(&k, space.n);
                k_ops.insert(KOp::KAPlus, ap);
                k_ops.insert(KOp::KAMinus, am);
                k_ops.insert(KOp::KA3, a3);
                k_ops.insert(KOp::KBPlus, bp);
                k_ops.insert(KOp::KBMinus, bm);
                k_ops.insert(KOp::KB3, b3);
            }
        }
        Ok(Assembler {
            space,
            formula,
            options,
            d_cache: HashMap::new(),
            k_ops,
            casimir: space.casimir_values(),
            left_casimir: space.left_so4_casimir_values(),
        })
    }

    fn d(&mut self, left: Row, right: Row) -> Result<SpMat, ShearError> {
        if let Some(m) = self.d_cache.get(&(left, right)) {
            return Ok(m.clone());
        }
        let lam = self.formula.shear_label();
        let m = build_d_with(self.space, lam, &left, &right, &self.options.phases)
            .map_err(|e| ShearError::Coupling(format!("D{lam}[{left:?};{right:?}]"), e))?;
        self.d_cache.insert((left, right), m.clone());
        Ok(m)
    }

    fn kfactor(&self, k: &KFactor, p: &ParamSet) -> SpMat {
        let n = self.space.len();
        let mut out = scale(&sparse_identity(n), k.constant.eval(p));
        for (op, c) in &k.ops {
            out = axpy(&out, *c, &self.k_ops[op]);
        }
        out
    }

    /// Unscaled operator of one term for one component: `W(D K)`.
    fn term_operator(&mut self, t: &Term, comp: &Component, p: &ParamSet) -> Result<SpMat, ShearError> {
        let n = self.space.len();
        let mut dsum = SpMat::zero((n, n));
        for (l, wl) in &t.left {
            for (r, wr) in &comp.right {
                let d = self.d(*l, *r)?;
                dsum = axpy(&dsum, *wl * *wr, &d);
            }
        }
        if let Some(k) = &t.kfactor {
            dsum = &dsum * &self.kfactor(k, p);
        }
        Ok(match t.wrap {
            None => dsum,
            Some(CasimirWrap::Right) => diag_commutator(&self.casimir, &dsum),
            Some(CasimirWrap::LeftSo4) => diag_commutator(&self.left_casimir, &dsum),
        })
    }

    pub fn assemble(&mut self, p: &ParamSet) -> Result<Vec<SpMat>, ShearError> {
        let n = self.space.len();
        let formula = self.formula.clone();
        let mut out = Vec::with_capacity(formula.components.len());
        for comp in &formula.components {
            let mut acc = SpMat::zero((n, n));
            for t in &formula.terms {
                let c = t.coeff.eval(p);
                if c == re(0.0) {
                    continue;
                }
                let op = self.term_operator(t, comp, p)?;
                acc = axpy(&acc, c, &op);
            }
            out.push(acc);
        }
        Ok(out)
    }

    /// The part of each component linear in `param`, i.e. `T(p + e) - T(p)` at unit step.
    pub fn derivative(&mut self, param: Param, p: &ParamSet) -> Result<Vec<SpMat>, ShearError> {
        let a = self.assemble(p)?;
        let b = self.assemble(&p.with(param, p.get(param) + re(1.0)))?;
        Ok(a.iter().zip(&b).map(|(x, y)| axpy(y, re(-1.0), x)).collect())
    }
}

/// `[diag(v), X]`.
pub fn diag_commutator(v: &[f64], x: &SpMat) -> SpMat {
    let trip: Vec<_> = x.iter().map(|(val, (r, c))| (r, c, *val * (v[r] - v[c]))).collect();
    sparse_from_triplets(x.rows(), x.cols(), &trip)
}

pub fn assemble(formula: &ShearFormula, space: &TruncatedSpace, params: &ParamSet) -> Result<Vec<SpMat>, ShearError> {
    Assembler::new(formula, space, AssembleOptions::default())?.assemble(params)
}

/// `T -> i T`.
pub fn su_wrapper(ts: &[SpMat]) -> Vec<SpMat> {
    ts.iter().map(|t| scale(t, I)).collect()
}

/// The parameter whose coefficient multiplies the leading `D` term.
pub fn leading_param(formula: &ShearFormula) -> Param {
    if formula.params().contains(&Param::Gamma1) {
        Param::Gamma1
    } else {
        Param::Sigma1
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionStep {
    pub epsilon: f64,
    /// Largest `||[eps T_i, eps T_j] P||` over pairs.
    pub commutator_norm: f64,
    /// `||(eps T - sigma0 D) P|| / ||sigma0 D P||`, maximised over components.
    pub distance_to_limit: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ContractionReport {
    pub formula: String,
    pub sigma0: C64,
    pub steps: Vec<ContractionStep>,
    /// Commutator-norm ratios between consecutive steps.
    pub ratios: Vec<f64>,
    /// Largest `||[D_i, D_j] P||` normalised by `||D_i P|| ||D_j P||`.
    pub limit_commutator: f64,
}

/// Contraction with the leading label scaled as `sigma0 / eps`: `eps T -> sigma0 D`.
pub fn contraction_limit(
    formula: &ShearFormula,
    space: &TruncatedSpace,
    params: &ParamSet,
    sigma0: C64,
    ladder: &[f64],
    columns: &[usize],
) -> Result<ContractionReport, ShearError> {
    let lead = leading_param(formula);
    let mut asm = Assembler::new(formula, space, AssembleOptions::default())?;
    let base = params.with(lead, re(0.0));
    let rest = asm.assemble(&base)?;
    let dlead = asm.derivative(lead, &base)?;
    let sel = selector(space.len(), columns);
    let rest_p: Vec<SpMat> = rest.iter().map(|t| t * &sel).collect();
    let d_p: Vec<SpMat> = dlead.iter().map(|t| t * &sel).collect();
    let m = rest.len();
    let mut steps = Vec::new();
    for &eps in ladder {
        // eps T = sigma0 D + eps R
        let et: Vec<SpMat> = (0..m).map(|k| axpy(&scale(&dlead[k], sigma0), re(eps), &rest[k])).collect();
        let et_p: Vec<SpMat> = (0..m).map(|k| axpy(&scale(&d_p[k], sigma0), re(eps), &rest_p[k])).collect();
        let mut worst = 0.0f64;
        for i in 0..m {
            for j in i + 1..m {
                let c = axpy(&(&et[i] * &et_p[j]), re(-1.0), &(&et[j] * &et_p[i]));
                worst = worst.max(frob(&c));
            }
        }
        let mut dist = 0.0f64;
        for k in 0..m {
            let lim = scale(&d_p[k], sigma0);
            let nl = frob(&lim);
            if nl > 0.0 {
                dist = dist.max(frob(&axpy(&et_p[k], re(-1.0), &lim)) / nl);
            }
        }
        steps.push(ContractionStep { epsilon: eps, commutator_norm: worst, distance_to_limit: dist });
    }
    let ratios = steps.windows(2).map(|w| w[0].commutator_norm / w[1].commutator_norm).collect();
    let mut lc = 0.0f64;
    for i in 0..m {
        for j in i + 1..m {
            let c = axpy(&(&dlead[i] * &d_p[j]), re(-1.0), &(&dlead[j] * &d_p[i]));
            let norm = frob(&d_p[i]) * frob(&d_p[j]);
            if norm > 0.0 {
                lc = lc.max(frob(&c) / norm);
            }
        }
    }
    Ok(ContractionReport { formula: formula.name.clone(), sigma0, steps, ratios, limit_commutator: lc })
}

/// Matrix elements of the n = 5 generalized formula computed per block from coupling tables
/// and label differences, without operator products.
pub fn assemble_sl5_direct(space: &TruncatedSpace, params: &ParamSet) -> Result<Vec<SpMat>, ShearError> {
    crate::repspace::sl5_direct(space, params.sigma1, params.sigma2, params.delta1, params.delta2)
        .map_err(|e| ShearError::Coupling("direct sl(5) elements".into(), e))
}
