//! Operators on grid samples of `L²(T^d)`: order-zero pseudodifferential
//! operators, shifts, quantized canonical transformations, Egorov checks
//! and the assembly of G-operators.
//!
//! "Modulo compact operators" is made computable through band norms
//! `‖P_K A P_K‖`, where `P_K` keeps the Fourier modes with `|ξ| ≥ K`.

mod assemble;
mod fio;
mod function;
mod operator;
mod pseudo;

pub use assemble::{assemble_g_operator, assemble_g_operator_with_bound, Representation};
pub use fio::{
    bump, quantize_canonical, unitarity_residual, unitarize, AmplitudeFamily, AmplitudeFn,
};
pub use function::GridFunction;
pub use operator::{GridOperator, SIGMA_FLOOR};
pub use pseudo::{
    egorov_residual, egorov_transport, fourier_multiplier, multiplication, quantize_symbol,
    resample_density, shift_for_map, shift_operator, translation_vector, weighted_shift,
    weighted_unitarity_residual,
};

pub(crate) use operator::min_singular_value;

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use super::*;
    use crate::hamflow::{FlowMap, GeneratingFunction};
    use crate::phasespace::{
        CanonicalMap, CosphereGrid, Hamiltonian, HomogeneousSymbol, TorusGrid,
    };
    use crate::scalar::Complex;

    type C = Complex<f64>;

    fn re(v: f64) -> C {
        C::new(v, 0.0)
    }

    fn grid1(n: usize) -> TorusGrid {
        TorusGrid::new(1, n).unwrap()
    }

    fn layout1(n: usize) -> CosphereGrid {
        CosphereGrid::standard(grid1(n))
    }

    fn split(
        n: usize,
        pos: impl Fn(f64) -> C + Sync,
        neg: impl Fn(f64) -> C + Sync,
    ) -> HomogeneousSymbol<f64> {
        HomogeneousSymbol::from_fn(
            layout1(n),
            |x, w| if w[0] > 0.0 { pos(x[0]) } else { neg(x[0]) },
        )
    }

    fn canonical(
        h: Hamiltonian<f64>,
        t: f64,
        amp: &AmplitudeFamily<f64>,
        grid: TorusGrid,
    ) -> GridOperator<f64> {
        let flow = FlowMap::new(h, t, 0.01).unwrap();
        let s = GeneratingFunction::from_flow(flow.clone());
        quantize_canonical(&flow, &s, amp, grid).unwrap()
    }

    #[test]
    fn constant_symbol_is_identity_and_quantization_is_linear() {
        let lay = layout1(32);
        let one = HomogeneousSymbol::constant(lay, re(1.0));
        let id = quantize_symbol(&one, lay.torus()).unwrap();
        assert_eq!(
            id.max_abs_diff(&GridOperator::identity(lay.torus()))
                .unwrap(),
            0.0
        );

        let a = split(32, |x| re(x.sin()), |x| C::new(0.0, x.cos()));
        let b = split(32, |x| re(1.0 / (2.0 + x.cos())), |_| re(0.5));
        let lhs = quantize_symbol(&a.add(&b.scale(C::new(2.0, -1.0))), lay.torus()).unwrap();
        let rhs = quantize_symbol(&a, lay.torus())
            .unwrap()
            .add(
                &quantize_symbol(&b, lay.torus())
                    .unwrap()
                    .scale(C::new(2.0, -1.0)),
            )
            .unwrap();
        assert!(lhs.max_abs_diff(&rhs).unwrap() < 1e-13);
    }

    #[test]
    fn direction_independent_symbol_is_multiplication() {
        let lay = CosphereGrid::standard(TorusGrid::new(2, 8).unwrap());
        let f = |x: &[f64; 2]| C::new(x[0].sin() + 2.0, x[1].cos());
        let a = HomogeneousSymbol::from_fn(lay, |x, _| f(x));
        let op = quantize_symbol(&a, lay.torus()).unwrap();
        assert!(op.max_abs_diff(&multiplication(lay.torus(), f)).unwrap() < 1e-13);
    }

    #[test]
    fn hardy_projection_matches_direct_dft() {
        let n = 32;
        let a = split(n, |_| re(1.0), |_| re(0.0));
        let op = quantize_symbol(&a, grid1(n)).unwrap();
        let h = 2.0 * PI / n as f64;
        for j in 0..n {
            for k in 0..n {
                let mut acc = C::new(0.0, 0.0);
                for q in 0..n as i64 {
                    let xi = if q < n as i64 / 2 { q } else { q - n as i64 };
                    let w = if xi > 0 {
                        1.0
                    } else if xi == 0 {
                        0.5
                    } else {
                        0.0
                    };
                    acc += C::from_polar(w, xi as f64 * (j as f64 - k as f64) * h);
                }
                acc /= n as f64;
                assert!((op.matrix()[(j, k)] - acc).norm() < 1e-13);
            }
        }
        // P² = P away from the zero mode
        let p2 = op.compose(&op).unwrap();
        assert!(p2.sub(&op).unwrap().band_norm(1) < 1e-13);
    }

    #[test]
    fn shifts() {
        let g = grid1(16);
        let h = g.spacing::<f64>();
        let s = shift_operator([h, 0.0], g);
        for j in 0..16 {
            for k in 0..16 {
                let e = if j == (k + 1) % 16 { 1.0 } else { 0.0 };
                assert!((s.matrix()[(j, k)] - re(e)).norm() < 1e-13);
            }
        }
        assert!(
            shift_operator([0.0, 0.0], g)
                .max_abs_diff(&GridOperator::identity(g))
                .unwrap()
                < 1e-15
        );

        let alpha = PI * (5f64.sqrt() - 1.0);
        let phi = shift_operator([alpha, 0.0], grid1(64));
        assert!(unitarity_residual(&phi) < 1e-12);
        let mut pw = phi.clone();
        for _ in 1..=64 {
            assert!(pw.distance(&GridOperator::identity(grid1(64))).unwrap() >= 0.1);
            pw = pw.compose(&phi).unwrap();
        }
    }

    #[test]
    fn translation_detection() {
        let lay = layout1(16);
        let t = CanonicalMap::<f64>::translation([0.3, 0.0], 1);
        assert!((translation_vector(&t, &lay).unwrap()[0] - 0.3).abs() < 1e-15);
        let flow = FlowMap::new(Hamiltonian::<f64>::abs_p(1), 0.1, 0.01)
            .unwrap()
            .as_map();
        assert!(matches!(
            translation_vector(&flow, &lay),
            Err(crate::GopError::Unsupported(_))
        ));
    }

    #[test]
    fn resampled_density_matches_the_function() {
        let vol = |x: f64| 1.0 + 0.3 * x.cos() + 0.1 * (2.0 * x).sin();
        let coarse = grid1(16);
        let samples: Vec<f64> = (0..16).map(|j| vol(coarse.point::<f64>(j)[0])).collect();
        for n in [16, 64, 128] {
            let g = grid1(n);
            let r = resample_density(&samples, g).unwrap();
            let err = (0..n)
                .map(|j| (r[j] - vol(g.point::<f64>(j)[0])).abs())
                .fold(0.0, f64::max);
            assert!(err < 1e-13, "n = {n}: {err}");
        }
        assert!(resample_density(&samples[..15], grid1(32)).is_err());
    }

    #[test]
    fn weighted_shift_example() {
        let g = grid1(64);
        let vol: Vec<f64> = (0..64).map(|j| 2.0 + g.point::<f64>(j)[0].sin()).collect();
        let c = PI / 2.0;
        let w = weighted_shift([c, 0.0], &vol, g).unwrap();
        let mut expect = shift_operator([c, 0.0], g).into_matrix();
        for j in 0..64 {
            let x = g.point::<f64>(j)[0];
            let f = ((2.0 + (x - c).sin()) / (2.0 + x.sin())).sqrt();
            expect.row_mut(j).iter_mut().for_each(|z| *z *= f);
        }
        let e = GridOperator::new(g, expect, "oracle").unwrap();
        assert!(w.max_abs_diff(&e).unwrap() < 1e-12);
        assert!(weighted_unitarity_residual(&w, &vol).unwrap() <= 1e-10);

        let ones = vec![1.0; 64];
        let plain = weighted_shift([0.37, 0.0], &ones, g).unwrap();
        assert!(plain.max_abs_diff(&shift_operator([0.37, 0.0], g)).unwrap() < 1e-14);
        assert!(
            weighted_shift([0.0, 0.0], &vol, g)
                .unwrap()
                .max_abs_diff(&GridOperator::identity(g))
                .unwrap()
                < 1e-14
        );
        let mut bad = vol.clone();
        bad[3] = 0.0;
        assert!(matches!(
            weighted_shift([c, 0.0], &bad, g),
            Err(crate::GopError::Domain(_))
        ));
    }

    #[test]
    fn canonical_quantization_calibration() {
        let g = grid1(128);
        let one = AmplitudeFamily::constant(re(1.0), 1.0);
        let id = canonical(Hamiltonian::abs_p(1), 0.0, &one, g);
        assert!(id.max_abs_diff(&GridOperator::identity(g)).unwrap() < 1e-10);

        let lin = canonical(Hamiltonian::linear([0.7, 0.0], 1), 0.2, &one, g);
        assert!(lin.max_abs_diff(&shift_operator([0.14, 0.0], g)).unwrap() < 1e-8);

        let g2 = TorusGrid::new(2, 8).unwrap();
        let lin2 = canonical(Hamiltonian::linear([0.5, -1.0], 2), 0.1, &one, g2);
        assert!(
            lin2.max_abs_diff(&shift_operator([0.05, -0.1], g2))
                .unwrap()
                < 1e-8
        );
    }

    #[test]
    fn wave_flow_is_sign_split_shift() {
        let g = grid1(64);
        let t = 0.1;
        let phi = canonical(
            Hamiltonian::abs_p(1),
            t,
            &AmplitudeFamily::constant(re(1.0), 1.0),
            g,
        );
        let mult = fourier_multiplier(g, "e^{-it|xi|}", |xi| {
            C::from_polar(1.0, -t * xi[0].abs() as f64)
        });
        assert!(phi.distance(&mult).unwrap() < 1e-10);
        // on positive frequencies it is the plain shift by t
        let d = phi.sub(&shift_operator([t, 0.0], g)).unwrap().to_fourier();
        let pos: Vec<usize> = (0..64).filter(|&f| g.frequency(f)[0] >= 1).collect();
        let block = d.select_rows(pos.iter()).select_columns(pos.iter());
        assert!(super::operator::spectral_norm(&block) < 1e-10);
    }

    #[test]
    fn unitarize_cases() {
        let g = grid1(64);
        let s = shift_operator([0.3, 0.0], g);
        assert!(unitarize(&s).unwrap().max_abs_diff(&s).unwrap() < 1e-12);
        assert!(
            unitarize(&s.scale(re(2.0)))
                .unwrap()
                .max_abs_diff(&s)
                .unwrap()
                < 1e-12
        );
        let d = multiplication(g, |x| re(1.0 + x[0] / (2.0 * PI) * 63.0));
        let u = unitarize(&d.compose(&s).unwrap()).unwrap();
        assert!(unitarity_residual(&u) <= 1e-10);
        assert!(unitarize(&u).unwrap().max_abs_diff(&u).unwrap() <= 1e-10);
        let sing = GridOperator::<f64>::zeros(g);
        assert!(matches!(
            unitarize(&sing),
            Err(crate::GopError::Conditioning { .. })
        ));
    }

    #[test]
    fn egorov_transport_examples() {
        let lay = layout1(32);
        let a = HomogeneousSymbol::from_fn(lay, |x: &[f64; 2], _: &[f64; 2]| re(x[0].sin()));
        assert!(
            egorov_transport(&a, &CanonicalMap::identity(1))
                .sub(&a)
                .max_abs()
                < 1e-14
        );
        let c = 0.4;
        let moved = egorov_transport(&a, &CanonicalMap::translation([c, 0.0], 1));
        let expect =
            HomogeneousSymbol::from_fn(lay, |x: &[f64; 2], _: &[f64; 2]| re((x[0] - c).sin()));
        assert!(moved.sub(&expect).max_abs() < 1e-12);

        let t = 0.1;
        let b = split(32, |x| C::from_polar(1.0, x), |_| re(1.0));
        let flow = FlowMap::new(Hamiltonian::abs_p(1), t, 0.01)
            .unwrap()
            .as_map();
        let tb = egorov_transport(&b, &flow);
        let expect = split(32, |x| C::from_polar(1.0, x - t), |_| re(1.0));
        assert!(tb.sub(&expect).max_abs() < 1e-12);
    }

    #[test]
    fn egorov_residuals() {
        let n = 128;
        let g = grid1(n);
        let a = split(
            n,
            |x| re(1.0 / (2.0 + x.cos())),
            |x| C::new(0.0, x.sin().exp()),
        );
        // grid-aligned translation: exact for any symbol
        let c = 8.0 * g.spacing::<f64>();
        let shift = shift_operator([c, 0.0], g);
        let tr = CanonicalMap::translation([c, 0.0], 1);
        for k in [1, 4, 16, 32] {
            assert!(egorov_residual(&shift, &a, &tr, k).unwrap() <= 1e-8);
        }
        // off-grid translation: exact when the x-degree of the symbol is below 2K,
        // otherwise the band still sees aliased pairs and the floor is |â(2K)|
        let c = 0.37;
        let shift = shift_operator([c, 0.0], g);
        let tr = CanonicalMap::translation([c, 0.0], 1);
        let trig = split(n, |x| C::new(x.sin(), x.cos()), |x| re(0.5 + x.cos()));
        for k in [1, 4, 16, 32] {
            assert!(egorov_residual(&shift, &trig, &tr, k).unwrap() <= 1e-8);
        }
        assert!(egorov_residual(&shift, &a, &tr, 16).unwrap() <= 1e-8);
        let one = HomogeneousSymbol::constant(layout1(n), re(1.0));
        assert!(egorov_residual(&shift, &one, &tr, 4).unwrap() < 1e-12);

        let flow = FlowMap::new(Hamiltonian::abs_p(1), 0.1, 0.01).unwrap();
        let phi = canonical(
            Hamiltonian::abs_p(1),
            0.1,
            &AmplitudeFamily::constant(re(1.0), 1.0),
            g,
        );
        let r4 = egorov_residual(&phi, &a, &flow.as_map(), 4).unwrap();
        let r16 = egorov_residual(&phi, &a, &flow.as_map(), 16).unwrap();
        assert!(r4 > 1e-8, "residual at K=4 should be visible: {r4}");
        assert!(r16 <= r4 / 3.0, "{r4} {r16}");
    }

    #[test]
    fn composition_calculus_decays() {
        let n = 128;
        let g = grid1(n);
        let a = split(
            n,
            |x| re(1.0 / (2.0 + x.cos())),
            |x| re((0.5 * x.sin()).exp()),
        );
        let b = split(
            n,
            |x| C::new(x.cos().exp(), 0.3),
            |x| re(1.0 / (1.5 + x.sin())),
        );
        let oa = quantize_symbol(&a, g).unwrap();
        let ob = quantize_symbol(&b, g).unwrap();
        let d = oa
            .compose(&ob)
            .unwrap()
            .sub(&quantize_symbol(&a.mul(&b), g).unwrap())
            .unwrap();
        let (r4, r8) = (d.band_norm(4), d.band_norm(8));
        assert!(r4 > 1e-10 && r8 * 1.5 <= r4, "{r4} {r8}");
    }

    #[test]
    fn almost_representation_for_wave_flows() {
        let n = 64;
        let g = grid1(n);
        // cocycle amplitude a_t(x, ω) = exp(F(x) − F(x − tω)), F = 0.3 cos
        let f = |x: f64| 0.3 * x.cos();
        let amp = AmplitudeFamily::new([-1.0, 1.0], "cocycle", move |t, x, w| {
            re((f(x[0]) - f(x[0] - t * w[0])).exp())
        })
        .unwrap();
        let h = Hamiltonian::abs_p(1);
        let a = canonical(h.clone(), 0.1, &amp, g);
        let b = canonical(h.clone(), 0.05, &amp, g);
        let ab = canonical(h, 0.15, &amp, g);
        let d = a.compose(&b).unwrap().sub(&ab).unwrap();
        let (r2, r8) = (d.band_norm(2), d.band_norm(8));
        assert!(r8 < r2, "{r2} {r8}");

        let sa = shift_operator([0.2, 0.0], g);
        let sb = shift_operator([0.5, 0.0], g);
        let sab = shift_operator([0.7, 0.0], g);
        assert!(sa.compose(&sb).unwrap().max_abs_diff(&sab).unwrap() < 1e-13);
    }

    #[test]
    fn g_operator_assembly() {
        use crate::crossed::{CrossedElement, GroupModel};
        let n = 128;
        let g = grid1(n);
        let lay = layout1(n);
        let alpha = PI * (5f64.sqrt() - 1.0);
        let group = GroupModel::integer_rotation([alpha, 0.0], 1).unwrap();
        let rep = Representation::Translations {
            velocity: [alpha, 0.0],
        };
        let one = HomogeneousSymbol::constant(lay, re(1.0));
        let e =
            assemble_g_operator(&CrossedElement::delta(0, one.clone()), &group, &rep, g).unwrap();
        assert!(e.max_abs_diff(&GridOperator::identity(g)).unwrap() < 1e-13);
        let d1 =
            assemble_g_operator(&CrossedElement::delta(1, one.clone()), &group, &rep, g).unwrap();
        assert!(d1.max_abs_diff(&shift_operator([alpha, 0.0], g)).unwrap() < 1e-13);
        let c = C::new(0.3, -0.4);
        let elt =
            CrossedElement::from_terms(lay, vec![(0, one.clone()), (1, one.scale(c))], re(0.0))
                .unwrap();
        let (d, bound) = assemble_g_operator_with_bound(&elt, &group, &rep, g).unwrap();
        let expect = GridOperator::identity(g)
            .add(&shift_operator([alpha, 0.0], g).scale(c))
            .unwrap();
        assert!(d.max_abs_diff(&expect).unwrap() < 1e-13);
        assert!(d.op_norm() <= 1.0 + c.norm() + 1e-12 && (bound - 1.5).abs() < 1e-10);

        // additivity in the element
        let other = CrossedElement::delta(-2, split(n, |x| re(x.sin()), |_| re(0.2)));
        let sum = assemble_g_operator(&elt.add(&other).unwrap(), &group, &rep, g).unwrap();
        let parts = d
            .add(&assemble_g_operator(&other, &group, &rep, g).unwrap())
            .unwrap();
        assert!(sum.max_abs_diff(&parts).unwrap() < 1e-12);

        let missing = Representation::Explicit(std::collections::BTreeMap::new());
        assert!(matches!(
            assemble_g_operator(&elt, &group, &missing, g),
            Err(crate::GopError::Usage(_))
        ));
    }

    #[test]
    fn assembly_intertwines_convolution() {
        use crate::crossed::{convolve, CrossedElement, GroupModel};
        let n = 128;
        let g = grid1(n);
        let alpha = 0.9;
        let group = GroupModel::integer_rotation([alpha, 0.0], 1).unwrap();
        let rep = Representation::Translations {
            velocity: [alpha, 0.0],
        };
        let a = CrossedElement::from_terms(
            layout1(n),
            vec![
                (0, split(n, |x| re(1.0 / (2.0 + x.cos())), |_| re(0.3))),
                (1, split(n, |x| re(x.sin().exp()), |x| re(x.cos()))),
            ],
            re(1.0),
        )
        .unwrap();
        let b = CrossedElement::from_terms(
            layout1(n),
            vec![(-1, split(n, |_| re(0.5), |x| re(1.0 / (1.5 + x.sin()))))],
            re(0.0),
        )
        .unwrap();
        let lhs = assemble_g_operator(&a, &group, &rep, g)
            .unwrap()
            .compose(&assemble_g_operator(&b, &group, &rep, g).unwrap())
            .unwrap();
        let rhs = assemble_g_operator(&convolve(&a, &b, &group).unwrap(), &group, &rep, g).unwrap();
        let d = lhs.sub(&rhs).unwrap();
        let (r4, r16) = (d.band_norm(4), d.band_norm(16));
        assert!(r4 > 1e-12 && r16 * 1.5 <= r4, "{r4} {r16}");
    }

    #[test]
    fn binary_round_trip_and_fourier_basis() {
        let g = grid1(16);
        let op = shift_operator([0.3, 0.0], g)
            .add(&multiplication(g, |x| C::new(x[0], 1.0)))
            .unwrap();
        let mut buf = Vec::new();
        op.write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..8], b"GOPMAT01");
        assert_eq!(buf.len(), 16 + 16 * 256);
        let back = GridOperator::read_binary(g, &buf[..]).unwrap();
        assert_eq!(back.matrix(), op.matrix());
        assert!(GridOperator::<f64>::read_binary(g, &b"GOPMAT02........"[..]).is_err());

        let f = shift_operator([0.3, 0.0], g).to_fourier();
        for i in 0..16 {
            for j in 0..16 {
                let expect = if i == j {
                    C::from_polar(1.0, -0.3 * g.frequency(i)[0] as f64)
                } else {
                    re(0.0)
                };
                assert!((f[(i, j)] - expect).norm() < 1e-13);
            }
        }
        assert!((GridOperator::<f64>::identity(g).band_norm(2) - 1.0).abs() < 1e-13);
    }
}
