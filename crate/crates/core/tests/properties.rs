//! Property tests for the algebraic and geometric invariants.

use std::f64::consts::PI;

use gop_core::crossed::{convolve, involution, CrossedElement, GroupModel};
use gop_core::fredholm::numerical_index;
use gop_core::hamflow::FlowMap;
use gop_core::microlocal::{
    containment_report, kernel_of, wavefront_estimate, PairCell, PairSet, WavefrontSet,
};
use gop_core::phasespace::{
    check_homogeneous_canonical, CosphereGrid, Hamiltonian, HomogeneousSymbol, PhasePoint,
    TorusGrid,
};
use gop_core::quantize::{quantize_symbol, shift_operator, GridOperator};
use gop_core::symbols::SymbolExpr;
use gop_core::Complex;
use proptest::prelude::*;

type C = Complex<f64>;
type Sym = HomogeneousSymbol<f64>;

fn layout(n: usize) -> CosphereGrid {
    CosphereGrid::standard(TorusGrid::new(1, n).unwrap())
}

/// Trigonometric symbol `c0 + c1 cos(x + φ) + i c2 ω`.
fn trig_symbol(lay: CosphereGrid, c: [f64; 4]) -> Sym {
    Sym::from_fn(lay, move |x, w| {
        C::new(c[0] + c[1] * (x[0] + c[3]).cos(), c[2] * w[0])
    })
}

fn coeffs() -> impl Strategy<Value = [f64; 4]> {
    [-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64, 0.0..2.0 * PI]
}

fn element() -> impl Strategy<Value = CrossedElement<f64>> {
    (
        prop::collection::btree_map(-2i64..=2, coeffs(), 1..4),
        -1.0..1.0f64,
    )
        .prop_map(|(terms, u)| {
            let lay = layout(16);
            let terms = terms
                .into_iter()
                .map(|(g, c)| (g, trig_symbol(lay, c)))
                .collect();
            CrossedElement::from_terms(lay, terms, C::new(u, 0.0)).unwrap()
        })
}

fn symbol_expr() -> impl Strategy<Value = SymbolExpr> {
    let leaf = prop_oneof![
        (-2.0..2.0f64, -2.0..2.0f64).prop_map(|(re, im)| SymbolExpr::Const { re, im }),
        (-3i64..3, 0.1..2.0f64).prop_map(|(k, amp)| SymbolExpr::Cos { k: [k, 0], amp }),
        (-3i64..3, 0.1..2.0f64).prop_map(|(k, amp)| SymbolExpr::Mode { k: [k, 0], amp }),
        (0.0..0.9f64, 1i64..3).prop_map(|(r, k)| SymbolExpr::Poisson { r, k: [k, 0] }),
        Just(SymbolExpr::Direction { component: 0 }),
    ];
    leaf.prop_recursive(3, 16, 3, |inner| {
        prop_oneof![
            prop::collection::vec(inner.clone(), 1..3).prop_map(|terms| SymbolExpr::Sum { terms }),
            prop::collection::vec(inner.clone(), 1..3)
                .prop_map(|factors| SymbolExpr::Product { factors }),
            inner
                .clone()
                .prop_map(|e| SymbolExpr::Conj { of: Box::new(e) }),
            (inner.clone(), inner).prop_map(|(p, m)| SymbolExpr::SignSplit {
                axis: [1.0, 0.0],
                plus: Box::new(p),
                minus: Box::new(m),
            }),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn symbols_are_degree_zero(c in coeffs(), cell in 0usize..32, r in 0.1..50.0f64) {
        let lay = layout(16);
        let a = trig_symbol(lay, c);
        let m = lay.cell_point::<f64>(cell);
        let scaled = PhasePoint::new(m.x, [r * m.p[0], r * m.p[1]]);
        prop_assert!((a.eval(&m).unwrap() - a.eval(&scaled).unwrap()).norm() < 1e-12);
    }

    #[test]
    fn symbol_algebra_is_pointwise(c1 in coeffs(), c2 in coeffs()) {
        let lay = layout(16);
        let (a, b) = (trig_symbol(lay, c1), trig_symbol(lay, c2));
        prop_assert!(a.mul(&b).sub(&b.mul(&a)).max_abs() < 1e-15);
        prop_assert!(a.add(&b).sub(&b).sub(&a).max_abs() < 1e-14);
        prop_assert!(a.conj().conj().sub(&a).max_abs() == 0.0);
    }

    #[test]
    fn convolution_is_associative(a in element(), b in element(), c in element(), k in 1i64..16) {
        let g = GroupModel::integer_rotation([2.0 * PI * k as f64 / 16.0, 0.0], 1).unwrap();
        let lhs = convolve(&convolve(&a, &b, &g).unwrap(), &c, &g).unwrap();
        let rhs = convolve(&a, &convolve(&b, &c, &g).unwrap(), &g).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_coeff_norm() < 1e-12);
    }

    #[test]
    fn involution_is_an_anti_automorphism(a in element(), b in element(), alpha in 0.1..6.0f64) {
        let g = GroupModel::integer_rotation([alpha, 0.0], 1).unwrap();
        prop_assert!(involution(&involution(&a, &g), &g).sub(&a).unwrap().max_coeff_norm() < 1e-8);
        let lhs = involution(&convolve(&a, &b, &g).unwrap(), &g);
        let rhs = convolve(&involution(&b, &g), &involution(&a, &g), &g).unwrap();
        prop_assert!(lhs.sub(&rhs).unwrap().max_coeff_norm() < 1e-8);
    }

    #[test]
    fn shifts_are_a_unitary_group(a in -7.0..7.0f64, b in -7.0..7.0f64) {
        let g = TorusGrid::new(1, 32).unwrap();
        let (sa, sb) = (shift_operator([a, 0.0], g), shift_operator([b, 0.0], g));
        let id = GridOperator::identity(g);
        prop_assert!(sa.adjoint().compose(&sa).unwrap().max_abs_diff(&id).unwrap() < 1e-12);
        let sum = shift_operator([a + b, 0.0], g);
        prop_assert!(sa.compose(&sb).unwrap().max_abs_diff(&sum).unwrap() < 1e-12);
    }

    #[test]
    fn hamiltonian_flows_are_homogeneous_canonical(v in [-2.0..2.0f64, -2.0..2.0f64], t in 0.0..gop_core::hamflow::DEFAULT_T_MAX, seed in 0.0..6.0f64) {
        let samples: Vec<PhasePoint<f64>> = (0..6)
            .map(|k| {
                let th = seed + k as f64;
                PhasePoint::new([th.sin(), th.cos()], [(1.0 + 0.2 * k as f64) * th.cos(), th.sin()])
            })
            .collect();
        for h in [Hamiltonian::linear(v, 2), Hamiltonian::abs_p(2)] {
            let flow = FlowMap::new(h, t, 0.01).unwrap();
            prop_assert!(check_homogeneous_canonical(&flow.as_map(), &samples).max() < 1e-8);
        }
    }

    #[test]
    fn symbol_expressions_round_trip(e in symbol_expr()) {
        let text = serde_json::to_string(&e).unwrap();
        let back: SymbolExpr = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(&back, &e);
    }

    #[test]
    fn pair_distance_is_a_metric(cells in prop::collection::vec((0usize..16, 0usize..16, 0usize..2, 0usize..2), 1..12), shift in 0usize..16) {
        let lay = layout(16);
        let mut a = PairSet::new(lay);
        let mut b = PairSet::new(lay);
        for &(x, xp, p, pp) in &cells {
            a.insert(PairCell { x: [x, 0], xp: [xp, 0], p, pp });
            b.insert(PairCell { x: [(x + shift) % 16, 0], xp: [(xp + shift) % 16, 0], p, pp });
        }
        prop_assert_eq!(a.hausdorff(&a), Some(0));
        prop_assert_eq!(a.hausdorff(&b), b.hausdorff(&a));
        prop_assert!(a.hausdorff(&b).unwrap() <= shift.min(16 - shift));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn containment_fraction_is_a_fraction(c in 0.0..2.0 * PI, slack in 0usize..3) {
        let g = TorusGrid::new(1, 64).unwrap();
        let est = wavefront_estimate(&kernel_of(&shift_operator([c, 0.0], g)), 8, 0.1).unwrap();
        let other = wavefront_estimate(&kernel_of(&GridOperator::identity(g)), 8, 0.1).unwrap();
        let rep = containment_report(&est, &other, slack).unwrap();
        prop_assert!((0.0..=1.0).contains(&rep.outside_mass_fraction));
        prop_assert_eq!(containment_report(&est, &est, 0).unwrap().outside_mass_fraction, 0.0);
        let back = WavefrontSet::<f64>::from_bitset(&est.to_bitset()).unwrap();
        prop_assert_eq!(back.mask, est.mask);
    }

    #[test]
    fn index_ignores_unitary_factors(c in -3.0..3.0f64) {
        let ops: Vec<GridOperator<f64>> = [32usize, 64, 128]
            .into_iter()
            .map(|n| {
                let lay = layout(n);
                let w = Sym::from_fn(lay, |x, w| if w[0] > 0.0 { C::from_polar(1.0, x[0]) } else { C::new(1.0, 0.0) });
                let s = shift_operator([c, 0.0], lay.torus());
                s.compose(&quantize_symbol(&w, lay.torus()).unwrap()).unwrap()
            })
            .collect();
        let rep = numerical_index(&ops, 1e-6).unwrap();
        prop_assert!(rep.is_stable(), "{:?}", rep.verdict);
        prop_assert_eq!(rep.index, Some(-1));
    }
}
