//! Property tests for the documented invariants.

use proptest::prelude::*;

use gellmann::halfint::{tri, Half};
use gellmann::linalg::{axpy, frob, re, selector, to_dense, SpMat, C64};
use gellmann::repspace::{build_d, build_k, build_m, enumerate_space, IrrepLabel, Parity, Row, So4Basis};
use gellmann::shear::{formula_generalized, formula_original, su_wrapper, Assembler, AssembleOptions, ParamSet};
use gellmann::so3::cg_twice;
use gellmann::so4::{casimir_so4, chain_transform, so4_generator_matrices, So4Label};
use gellmann::so5::{branching_so4, cg_so5, couplings, So5Label};
use gellmann::son::{casimir_matrix, commutation_residual};
use gellmann::verify::{check_closure, check_covariance, component_generators, TOL_EXACT};

fn complex() -> impl Strategy<Value = C64> {
    (-2.0f64..2.0, -2.0f64..2.0).prop_map(|(a, b)| C64::new(a, b))
}

proptest! {
    #[test]
    fn half_twice_exact(t in -1_000_000i32..=1_000_000) {
        let h = Half::from_twice(t);
        prop_assert_eq!(2.0 * h.value(), f64::from(t));
    }

    #[test]
    fn triangle_symmetric(a in 0i32..12, b in 0i32..12, c in 0i32..12) {
        let (x, y, z) = (Half::from_twice(a), Half::from_twice(b), Half::from_twice(c));
        let v = tri(x, y, z);
        for p in [(x, z, y), (y, x, z), (y, z, x), (z, x, y), (z, y, x)] {
            prop_assert_eq!(tri(p.0, p.1, p.2), v);
        }
    }

    #[test]
    fn cg_orthogonal(j1 in 0i32..=8, j2 in 0i32..=8, a in 0usize..9, b in 0usize..9, mi in 0i32..20) {
        let js: Vec<i32> = ((j1 - j2).abs()..=j1 + j2).step_by(2).collect();
        let (j, jp) = (js[a % js.len()], js[b % js.len()]);
        let m = -j.min(jp) + 2 * (mi % (j.min(jp) + 1));
        let mut s = 0.0;
        for m1 in (-j1..=j1).step_by(2) {
            let m2 = m - m1;
            if m2.abs() <= j2 {
                s += cg_twice(j1, m1, j2, m2, j, m) * cg_twice(j1, m1, j2, m2, jp, m);
            }
        }
        let want = if j == jp { 1.0 } else { 0.0 };
        prop_assert!((s - want).abs() < 1e-12);
    }

    #[test]
    fn cg_exchange_symmetry(j1 in 0i32..=6, j2 in 0i32..=6, k in 0usize..7, m1i in 0i32..7, m2i in 0i32..7) {
        let js: Vec<i32> = ((j1 - j2).abs()..=j1 + j2).step_by(2).collect();
        let j = js[k % js.len()];
        let (m1, m2) = (-j1 + 2 * (m1i % (j1 + 1)), -j2 + 2 * (m2i % (j2 + 1)));
        let ph = if (j1 + j2 - j).rem_euclid(4) == 0 { 1.0 } else { -1.0 };
        let m = m1 + m2;
        prop_assume!(m.abs() <= j);
        prop_assert!((cg_twice(j1, m1, j2, m2, j, m) - ph * cg_twice(j2, m2, j1, m1, j, m)).abs() < 1e-13);
    }

    #[test]
    fn so4_chain_casimir_and_completeness(a in 0i32..=6, b in 0i32..=6) {
        let l = So4Label::from_twice(a, b);
        let spins = l.chain_spins();
        let total: usize = spins.iter().map(|j| (j.twice + 1) as usize).sum();
        prop_assert_eq!(total, l.dim());
        let w = chain_transform(l).map(re);
        let g: Vec<_> = so4_generator_matrices(l).iter().map(|x| w.adjoint() * x * &w).collect();
        let c = casimir_matrix(&g);
        let want = casimir_so4(l);
        for k in 0..l.dim() {
            prop_assert!((c[(k, k)] - re(want)).norm() < 1e-10);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(15))]

    #[test]
    fn so5_irreps_hermitian_and_closed(t1 in 0i32..=4, t2 in 0i32..=4) {
        prop_assume!(t2 <= t1);
        let l = IrrepLabel::So5(So5Label::from_twice(t1, t2));
        let g = l.generators().unwrap();
        prop_assert!(commutation_residual(5, &g) <= 1e-11);
        for x in &g {
            prop_assert!((x - x.adjoint()).norm() <= 1e-12);
        }
        let dims: usize = branching_so4(So5Label::from_twice(t1, t2)).unwrap().iter().map(|b| b.dim()).sum();
        prop_assert_eq!(dims, l.dim());
    }

    #[test]
    fn so5_cg_orthonormal(t1 in 0i32..=2, t2 in 0i32..=2) {
        prop_assume!(t2 <= t1);
        let a = So5Label::from_twice(t1, t2);
        let lam = So5Label::from_twice(2, 2);
        for (c, _) in couplings(a, lam, &So5Label::all_up_to(4)).unwrap() {
            let tabs = cg_so5(a, lam, c).unwrap();
            for (r, x) in tabs.iter().enumerate() {
                for (s, y) in tabs.iter().enumerate() {
                    // sum over rows of A and B for each row of C
                    for ic in 0..x.values.ncols() {
                        let d: f64 = x.values.column(ic).dot(&y.values.column(ic));
                        let want = if r == s { 1.0 } else { 0.0 };
                        prop_assert!((d - want).abs() < 1e-10);
                    }
                }
            }
        }
    }
}

fn sl3_space() -> gellmann::repspace::TruncatedSpace {
    enumerate_space(IrrepLabel::So3(Half::from_twice(8)), Parity::Both).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn left_action_commutes_with_right(t in 2i32..=6) {
        let space = enumerate_space(IrrepLabel::So3(Half::from_twice(t)), Parity::Both).unwrap();
        for m in build_m(&space) {
            for k in build_k(&space) {
                let c = axpy(&(&m * &k), re(-1.0), &(&k * &m));
                prop_assert_eq!(frob(&c), 0.0);
            }
        }
    }

    #[test]
    fn k_covariance_of_d(lrow in -2i32..=2, rrow in -2i32..=2) {
        let space = sl3_space();
        let lam = IrrepLabel::So3(Half::from_twice(4));
        let g = lam.generators().unwrap();
        let ks = build_k(&space);
        let (l, r) = (Row::so3(2 * lrow), Row::so3(2 * rrow));
        let d = build_d(&space, lam, &l, &r).unwrap();
        let all: Vec<SpMat> = (-2..=2).map(|x| build_d(&space, lam, &Row::so3(2 * x), &r).unwrap()).collect();
        let sel = selector(space.len(), &space.interior());
        for (a, k) in ks.iter().enumerate() {
            let mut diff = axpy(&(k * &(&d * &sel)), re(-1.0), &(&d * &(k * &sel)));
            for (w, dw) in all.iter().enumerate() {
                let c = g[a][(w, (lrow + 2) as usize)];
                if c.norm() > 0.0 {
                    diff = axpy(&diff, -c, &(dw * &sel));
                }
            }
            prop_assert!(frob(&diff) <= 1e-10, "{}", frob(&diff));
        }
    }

    #[test]
    fn sl3_closure_and_covariance_any_labels(s in complex(), d in complex()) {
        let space = sl3_space();
        let f = formula_generalized(3, So4Basis::Product).unwrap();
        let p = ParamSet { sigma1: s, delta1: d, ..Default::default() };
        let ts = Assembler::new(&f, &space, AssembleOptions::default()).unwrap().assemble(&p).unwrap();
        let ms = build_m(&space);
        let interior = space.interior();
        let r = check_closure(&ts, &ms, &interior, TOL_EXACT);
        prop_assert!(r.pass, "{}", r.max_residual);
        let g = component_generators(&f).unwrap();
        prop_assert!(check_covariance(&ts, &ms, &g, &interior) <= 1e-10);
        let su = check_closure(&su_wrapper(&ts), &ms, &interior, TOL_EXACT);
        prop_assert!(su.pass);
        for (a, b) in r.pairs.iter().zip(&su.pairs) {
            for (x, y) in a.f.iter().zip(&b.f) {
                prop_assert!((x + y).norm() <= 1e-9 * (1.0 + x.norm()));
            }
        }
    }

    #[test]
    fn closure_scales_under_contraction(s in complex(), d in complex(), e in 0.01f64..1.0) {
        let space = sl3_space();
        let f = formula_generalized(3, So4Basis::Product).unwrap();
        let p = ParamSet { sigma1: s, delta1: d, ..Default::default() };
        let ts = Assembler::new(&f, &space, AssembleOptions::default()).unwrap().assemble(&p).unwrap();
        let et: Vec<_> = ts.iter().map(|t| gellmann::linalg::scale(t, re(e))).collect();
        let em: Vec<_> = build_m(&space).iter().map(|m| gellmann::linalg::scale(m, re(e * e))).collect();
        prop_assert!(check_closure(&et, &em, &space.interior(), TOL_EXACT).pass);
    }

    #[test]
    fn generalized_at_k0_is_original(s in complex()) {
        let space = enumerate_space(IrrepLabel::So3(Half::from_twice(8)), Parity::Tensorial).unwrap();
        let g = formula_generalized(3, So4Basis::Product).unwrap();
        let o = formula_original(3, So4Basis::Product).unwrap();
        let p = ParamSet { sigma1: s, ..Default::default() };
        let tg = Assembler::new(&g, &space, AssembleOptions::default()).unwrap().assemble(&p).unwrap();
        let to = Assembler::new(&o, &space, AssembleOptions::default()).unwrap().assemble(&p).unwrap();
        let k0 = space.interior_where(|st| matches!(st.left, Row::So3 { m } if m.twice == 0));
        let sel = selector(space.len(), &k0);
        for (a, b) in tg.iter().zip(&to) {
            let ga = to_dense(&(a * &sel));
            let gb = to_dense(&(b * &sel));
            prop_assert!((ga - gb).norm() <= 1e-12);
        }
    }
}
