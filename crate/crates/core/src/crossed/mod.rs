//! The symbol algebra of G-operators: the crossed product `C(S*M) ⋊ G` with
//! an adjoined unit, twisted convolution, involution, restriction to the
//! transverse cosphere bundle, trajectory symbols and their finite sections.
//!
//! Conventions: `α_h f = f ∘ act(h)⁻¹`,
//! `(a⋆b)_g = Σ_h w a_h α_h(b_{h⁻¹g})` and `(a*)_g = α_g(conj a_{g⁻¹})`,
//! where `w` is the Haar weight of a lattice point. These are the unique
//! rules for which `(δ_g⊗1)⋆(δ_e⊗f)⋆(δ_g⊗1)* = δ_e⊗(f∘g⁻¹)`, mirroring
//! `Φ_g Op(f) Φ_g⁻¹ ≡ Op(f∘g⁻¹)`.

mod element;
mod group;
mod trajectory;

pub use element::{act_on_symbol, convolve, involution, restrict_to_transverse, CrossedElement};
pub use group::{Action, GroupKind, GroupModel};
pub use trajectory::{
    classify, finite_section_invertibility, symbol_inverse, trajectory_symbol, BaseSection,
    InverseOptions, InverseReport, SectionReport, TrajectoryOperator, Verdict,
    DEFAULT_SECTION_THRESHOLD,
};

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;
    use crate::phasespace::{
        transverse_zero_set, CosphereGrid, Hamiltonian, HomogeneousSymbol, PhasePoint, TorusGrid,
    };
    use crate::scalar::Complex;

    type C = Complex<f64>;
    type Sym = HomogeneousSymbol<f64>;

    fn re(v: f64) -> C {
        C::new(v, 0.0)
    }

    fn lay1(n: usize) -> CosphereGrid {
        CosphereGrid::standard(TorusGrid::new(1, n).unwrap())
    }

    fn sym(lay: CosphereGrid, f: impl Fn(f64, f64) -> C + Sync) -> Sym {
        HomogeneousSymbol::from_fn(lay, move |x: &[f64; 2], w: &[f64; 2]| f(x[0], w[0]))
    }

    fn diff(a: &CrossedElement<f64>, b: &CrossedElement<f64>) -> f64 {
        a.sub(b).unwrap().max_coeff_norm()
    }

    fn aligned_rotation(n: usize) -> GroupModel<f64> {
        // 3 grid cells per step: every resampling is exact
        GroupModel::integer_rotation([3.0 * 2.0 * std::f64::consts::PI / n as f64, 0.0], 1).unwrap()
    }

    #[test]
    fn group_models_are_homomorphisms() {
        let samples = [PhasePoint::new1(0.3, 1.0), PhasePoint::new1(5.0, -2.0)];
        let pairs = [(1, 2), (-3, 1), (4, -4), (5, 6)];
        let cyc = GroupModel::<f64>::cyclic_rotation(7, [1.0, 0.0], 1).unwrap();
        assert!(cyc.homomorphism_defect(&samples, &pairs) < 1e-12);
        assert_eq!(cyc.compose(5, 4), 2);
        assert_eq!(cyc.inverse(3), 4);
        let line = GroupModel::new(
            GroupKind::Line {
                tau: 0.05,
                window: 20,
            },
            Action::HamiltonianFlow {
                hamiltonian: Hamiltonian::abs_p(1),
                unit_time: 1.0,
                integrator_step: 0.01,
            },
            1,
        )
        .unwrap();
        assert!(line.homomorphism_defect(&samples, &pairs) < 1e-8);
        let e = line.apply(4, &samples[1]);
        assert!((e.x[0] - (5.0 - 0.2)).abs() < 1e-12);
        let quad = GroupModel::new(
            GroupKind::Integers,
            Action::HamiltonianFlow {
                hamiltonian: Hamiltonian::quadratic_example(),
                unit_time: 0.05,
                integrator_step: 0.01,
            },
            2,
        )
        .unwrap();
        let s2 = [PhasePoint::new([0.5, -0.4], [1.0, 0.3])];
        assert!(quad.homomorphism_defect(&s2, &[(1, 2), (3, -1)]) < 1e-8);
        let o = quad.orbit(&s2[0], &[-2, 0, 3]);
        assert!(o[2].distance(&quad.apply(3, &s2[0])) < 1e-13);
        assert!(o[0].distance(&quad.apply(-2, &s2[0])) < 1e-13);
    }

    #[test]
    fn convolution_examples() {
        let lay = lay1(32);
        let g = GroupModel::integer_rotation([0.4, 0.0], 1).unwrap();
        let f = sym(lay, |x, _| re(2.0 + x.sin()));
        let h = sym(lay, |x, w| C::new(x.cos(), w));
        let fh = convolve(
            &CrossedElement::delta(0, f.clone()),
            &CrossedElement::delta(0, h.clone()),
            &g,
        )
        .unwrap();
        assert!(diff(&fh, &CrossedElement::delta(0, f.mul(&h))) < 1e-15);

        let one = Sym::constant(lay, re(1.0));
        let gh = convolve(
            &CrossedElement::delta(2, one.clone()),
            &CrossedElement::delta(-5, one.clone()),
            &g,
        )
        .unwrap();
        assert_eq!(gh.support(), vec![-3]);
        assert!(diff(&gh, &CrossedElement::delta(-3, one.clone())) < 1e-14);

        // (δ_e⊗f + δ_g⊗u) ⋆ (δ_e⊗v) = δ_e⊗fv + δ_g⊗u·(v∘g⁻¹)
        let u = sym(lay, |x, _| C::new(0.0, x.cos()));
        let v = sym(lay, |x, w| re(1.0 + 0.5 * (x + w).sin()));
        let lhs = CrossedElement::delta(0, f.clone())
            .add(&CrossedElement::delta(1, u.clone()))
            .unwrap();
        let prod = convolve(&lhs, &CrossedElement::delta(0, v.clone()), &g).unwrap();
        let v_moved = sym(lay, |x, w| re(1.0 + 0.5 * (x - 0.4 + w).sin()));
        let expect = CrossedElement::delta(0, f.mul(&v))
            .add(&CrossedElement::delta(1, u.mul(&v_moved)))
            .unwrap();
        assert!(diff(&prod, &expect) < 1e-12);
    }

    #[test]
    fn involution_examples() {
        let lay = lay1(32);
        let g = GroupModel::integer_rotation([0.4, 0.0], 1).unwrap();
        let f = sym(lay, |x, _| C::new(x.sin(), x.cos()));
        let fs = involution(&CrossedElement::delta(0, f.clone()), &g);
        assert!(diff(&fs, &CrossedElement::delta(0, f.conj())) < 1e-15);
        let one = Sym::constant(lay, re(1.0));
        let ds = involution(&CrossedElement::delta(3, one.clone()), &g);
        assert_eq!(ds.support(), vec![-3]);
        // a = δ_g⊗u: a*⋆a = δ_e⊗(|u|²∘g)
        let u = sym(lay, |x, w| C::new(1.0 + x.sin(), 0.3 * w));
        let a = CrossedElement::delta(1, u.clone());
        let asa = convolve(&involution(&a, &g), &a, &g).unwrap();
        let expect = sym(lay, |x, w| {
            re((1.0 + (x + 0.4).sin()).powi(2) + 0.09 * w * w)
        });
        assert_eq!(asa.support(), vec![0]);
        assert!(asa.coeff(0).unwrap().sub(&expect).max_abs() < 1e-12);
    }

    fn random_element(rng: &mut ChaCha8Rng, lay: CosphereGrid) -> CrossedElement<f64> {
        let mut terms = Vec::new();
        let mut used = Vec::new();
        for _ in 0..rng.random_range(1..=3) {
            let g = rng.random_range(-2..=2i64);
            if used.contains(&g) {
                continue;
            }
            used.push(g);
            let (c0, c1, c2, ph) = (
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>(),
                rng.random::<f64>() * 6.0,
            );
            terms.push((
                g,
                sym(lay, move |x, w| {
                    C::new(c0 + c1 * (x + ph).cos(), c2 * w + 0.2 * (2.0 * x).sin())
                }),
            ));
        }
        CrossedElement::from_terms(lay, terms, C::new(rng.random(), rng.random())).unwrap()
    }

    #[test]
    fn algebra_laws() {
        let lay = lay1(32);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let exact = aligned_rotation(32);
        let interp = GroupModel::integer_rotation([0.37, 0.0], 1).unwrap();
        for _ in 0..6 {
            let (a, b, c) = (
                random_element(&mut rng, lay),
                random_element(&mut rng, lay),
                random_element(&mut rng, lay),
            );
            for (g, tol) in [(&exact, 1e-13), (&interp, 1e-8)] {
                let l = convolve(&convolve(&a, &b, g).unwrap(), &c, g).unwrap();
                let r = convolve(&a, &convolve(&b, &c, g).unwrap(), g).unwrap();
                assert!(diff(&l, &r) <= tol);
                assert!(diff(&involution(&involution(&a, g), g), &a) <= tol);
                let ab_s = involution(&convolve(&a, &b, g).unwrap(), g);
                let bs_as = convolve(&involution(&b, g), &involution(&a, g), g).unwrap();
                assert!(diff(&ab_s, &bs_as) <= tol);
            }
        }
    }

    #[test]
    fn covariance_relation() {
        let lay = lay1(64);
        let g = GroupModel::integer_rotation([0.37, 0.0], 1).unwrap();
        let one = Sym::constant(lay, re(1.0));
        let f = sym(lay, |x, w| C::new(1.0 / (2.0 + x.cos()), 0.5 * w));
        let dg = CrossedElement::delta(1, one.clone());
        let lhs = convolve(
            &convolve(&dg, &CrossedElement::delta(0, f.clone()), &g).unwrap(),
            &CrossedElement::delta(-1, one),
            &g,
        )
        .unwrap();
        let moved = sym(lay, |x, w| C::new(1.0 / (2.0 + (x - 0.37).cos()), 0.5 * w));
        assert_eq!(lhs.support(), vec![0]);
        assert!(lhs.coeff(0).unwrap().sub(&moved).max_abs() < 1e-8);
    }

    #[test]
    fn restriction() {
        let lay = CosphereGrid::new(TorusGrid::new(2, 8).unwrap(), 16).unwrap();
        let h = Hamiltonian::linear([0.0, 1.0], 2);
        let ts = transverse_zero_set(&[h.clone()], lay, 1e-9).unwrap();
        let one = HomogeneousSymbol::constant(lay, re(1.0));
        let r = restrict_to_transverse(&CrossedElement::delta(0, one), &ts).unwrap();
        for c in 0..lay.n_cells() {
            let (_, d) = lay.split_cell(c);
            let w = lay.direction::<f64>(d);
            let kept = w[1].abs() < 1e-9;
            assert_eq!(r.coeff(0).unwrap().at_cell(c) == re(1.0), kept);
        }
        let full = crate::phasespace::TransverseSet::full(lay1(16));
        let a = CrossedElement::delta(2, sym(lay1(16), |x, _| re(x.sin())));
        assert_eq!(
            restrict_to_transverse(&a, &full).unwrap().coeff(2),
            a.coeff(2)
        );

        // restriction is an algebra map for the translation flow along x₂
        let g = GroupModel::new(
            GroupKind::Integers,
            Action::Translation {
                velocity: [0.0, 0.3],
            },
            2,
        )
        .unwrap();
        let s1 = HomogeneousSymbol::from_fn(lay, |x: &[f64; 2], w: &[f64; 2]| {
            C::new(x[0].sin() + w[0], x[1].cos())
        });
        let s2 = HomogeneousSymbol::from_fn(lay, |x: &[f64; 2], w: &[f64; 2]| {
            re(1.0 + 0.3 * (x[1] + w[1]).sin())
        });
        let a = CrossedElement::from_terms(lay, vec![(0, s1.clone()), (1, s2.clone())], re(1.0))
            .unwrap();
        let b = CrossedElement::from_terms(lay, vec![(-1, s2), (0, s1)], re(0.5)).unwrap();
        let lhs = restrict_to_transverse(&convolve(&a, &b, &g).unwrap(), &ts).unwrap();
        let rhs = convolve(
            &restrict_to_transverse(&a, &ts).unwrap(),
            &restrict_to_transverse(&b, &ts).unwrap(),
            &g,
        )
        .unwrap();
        assert!(diff(&lhs, &rhs) < 1e-8);
    }

    #[test]
    fn trajectory_examples() {
        let lay = lay1(32);
        let g = GroupModel::integer_rotation([0.618 * 2.0 * std::f64::consts::PI, 0.0], 1).unwrap();
        let base = PhasePoint::new1(0.2, 1.0);
        let one = Sym::constant(lay, re(1.0));
        let id = trajectory_symbol(&CrossedElement::delta(0, one.clone()), &g, &base, 8).unwrap();
        assert_eq!(id.matrix, nalgebra::DMatrix::identity(17, 17));
        let sh = trajectory_symbol(&CrossedElement::delta(1, one.clone()), &g, &base, 8).unwrap();
        let s = sh.singular_values();
        assert!(s[..16].iter().all(|v| (v - 1.0).abs() < 1e-12) && s[16].abs() < 1e-12);
        for c in [0.5, -0.9, 0.3] {
            let a = CrossedElement::delta(1, one.scale(re(c))).with_unit(re(1.0));
            assert!(
                trajectory_symbol(&a, &g, &base, 64).unwrap().sigma_min() >= 1.0 - c.abs() - 1e-12
            );
        }
    }

    #[test]
    fn trajectory_symbols_represent_convolution() {
        let lay = lay1(64);
        let g = GroupModel::integer_rotation([0.41, 0.0], 1).unwrap();
        let a = CrossedElement::from_terms(
            lay,
            vec![
                (0, sym(lay, |x, _| re(2.0 + x.sin()))),
                (1, sym(lay, |x, w| C::new(x.cos(), w))),
            ],
            re(0.5),
        )
        .unwrap();
        let b = CrossedElement::from_terms(
            lay,
            vec![
                (-1, sym(lay, |x, _| re((x.cos()).exp()))),
                (2, sym(lay, |_, w| re(w))),
            ],
            re(1.0),
        )
        .unwrap();
        let ab = convolve(&a, &b, &g).unwrap();
        let base = PhasePoint::new1(1.1, -1.0);
        let w = 16;
        let ta = trajectory_symbol(&a, &g, &base, w).unwrap();
        let tb = trajectory_symbol(&b, &g, &base, w).unwrap();
        let tab = trajectory_symbol(&ab, &g, &base, w).unwrap();
        let prod = &ta.matrix * &tb.matrix;
        let r = 3;
        for i in r..(2 * w + 1 - r) {
            for j in r..(2 * w + 1 - r) {
                assert!((prod[(i, j)] - tab.matrix[(i, j)]).norm() < 1e-8, "{i} {j}");
            }
        }
    }

    fn bases(lay: CosphereGrid) -> Vec<PhasePoint<f64>> {
        (0..16).map(|k| lay.cell_point(2 * k + (k % 2))).collect()
    }

    #[test]
    fn finite_sections() {
        let lay = lay1(16);
        let g = GroupModel::integer_rotation([0.618 * 2.0 * std::f64::consts::PI, 0.0], 1).unwrap();
        let one = Sym::constant(lay, re(1.0));
        let windows = [8, 16, 32, 64];
        let ell = CrossedElement::delta(1, one.scale(re(0.5))).with_unit(re(1.0));
        let rep = finite_section_invertibility(&ell, &g, &bases(lay), &windows, 1e-3).unwrap();
        assert_eq!(rep.verdict, Verdict::Elliptic);
        assert!(rep.min_sigma() >= 0.45);

        let deg = CrossedElement::delta(1, one.scale(re(-1.0))).with_unit(re(1.0));
        let rep = finite_section_invertibility(&deg, &g, &bases(lay), &windows, 1e-3).unwrap();
        assert_eq!(rep.verdict, Verdict::Degenerate);
        assert!(rep.min_sigma_at(64).unwrap() <= 0.5 * rep.min_sigma_at(8).unwrap());

        let unit = CrossedElement::unit(lay, re(1.0));
        let rep = finite_section_invertibility(&unit, &g, &bases(lay), &windows, 1e-3).unwrap();
        assert_eq!(rep.verdict, Verdict::Elliptic);
        assert!((rep.min_sigma() - 1.0).abs() < 1e-12);

        assert!(finite_section_invertibility(&unit, &g, &bases(lay), &[8, 8], 1e-3).is_err());
        assert_eq!(classify(&[0.5, 0.6, 0.4, 0.41], 1e-3), Verdict::Elliptic);
        assert_eq!(classify(&[0.5, 0.8, 0.3, 0.2], 1e-3), Verdict::Inconclusive);
    }

    #[test]
    fn symbol_inverse_examples() {
        let lay = lay1(16);
        let g = GroupModel::integer_rotation([0.9, 0.0], 1).unwrap();
        let opts = InverseOptions::default();
        let zero = CrossedElement::unit(lay, re(1.0));
        let rep = symbol_inverse(&zero, &g, &opts).unwrap();
        assert!(rep.inverse.support().is_empty() && rep.residual() < 1e-14);

        let c = 0.5;
        let one = Sym::constant(lay, re(1.0));
        let a = CrossedElement::delta(1, one.scale(re(c))).with_unit(re(1.0));
        let l = 12;
        let rep = symbol_inverse(
            &a,
            &g,
            &InverseOptions {
                support_cap: Some(l),
                tol: 1e-3,
            },
        )
        .unwrap();
        assert!(rep.residual() <= c.powi(l as i32 + 1) * (1.0 + 1e-9));
        for k in 1..5 {
            let v = rep.inverse.coeff(k).unwrap().at_cell(3);
            assert!((v - re((-c).powi(k as i32))).norm() < 1e-3, "{k} {v}");
        }

        let f = sym(lay, |x, w| C::new(0.5 * x.sin(), 0.2 * w));
        let a = CrossedElement::delta(0, f.clone()).with_unit(re(1.0));
        let rep = symbol_inverse(&a, &g, &opts).unwrap();
        assert!(rep.residual() <= 1e-10);
        let expect = f.zip_with(&f, |z, _| -z / (re(1.0) + z));
        assert!(rep.inverse.coeff(0).unwrap().sub(&expect).max_abs() < 1e-10);

        // non-invertible: 1 − δ_g
        let bad = CrossedElement::delta(1, one.scale(re(-1.0))).with_unit(re(1.0));
        assert!(matches!(
            symbol_inverse(&bad, &g, &opts),
            Err(crate::GopError::InversionFailure { .. })
        ));
    }

    #[test]
    fn line_group_inverse_and_truncation() {
        let lay = lay1(16);
        let g = GroupModel::new(
            GroupKind::Line {
                tau: 0.1,
                window: 12,
            },
            Action::Translation {
                velocity: [1.0, 0.0],
            },
            1,
        )
        .unwrap();
        let bump = |k: i64| crate::quantize::bump(k as f64 / 3.0);
        let terms = (-2..=2)
            .map(|k| (k, Sym::constant(lay, re(0.8 * bump(k)))))
            .collect();
        let a = CrossedElement::from_terms(lay, terms, re(1.0)).unwrap();
        let rep = symbol_inverse(
            &a,
            &g,
            &InverseOptions {
                support_cap: Some(10),
                tol: 1e-2,
            },
        )
        .unwrap();
        assert!(rep.residual() < 1e-2);
        assert!(symbol_inverse(&a.with_unit(re(0.0)), &g, &InverseOptions::default()).is_err());
        let far = CrossedElement::delta(8, Sym::constant(lay, re(1.0)));
        assert!(matches!(
            convolve(&far, &far, &g),
            Err(crate::GopError::Truncation { .. })
        ));
    }

    #[test]
    fn json_round_trip() {
        let lay = lay1(8);
        let a = CrossedElement::from_terms(
            lay,
            vec![
                (0, sym(lay, |x, w| C::new(x, w))),
                (-2, Sym::constant(lay, re(0.25))),
            ],
            C::new(1.0, -1.0),
        )
        .unwrap();
        let back = CrossedElement::<f64>::from_json(&a.to_json().unwrap()).unwrap();
        assert_eq!(back, a);
        assert!(CrossedElement::<f64>::from_json("{\"dim\":1}").is_err());
    }
}
