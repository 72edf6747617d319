//! Experiment runners: each returns its criteria and one CSV table.

use std::f64::consts::{PI, TAU};
use std::fmt::Write;

use gop_core::crossed::{
    convolve, finite_section_invertibility, involution, Action, CrossedElement, GroupKind,
    GroupModel, InverseOptions,
};
use gop_core::fredholm::{ellipticity_experiment, EllipticityConfig};
use gop_core::hamflow::{verify_hamilton_jacobi, FlowMap, GeneratingFunction};
use gop_core::microlocal::{
    containment_report, kernel_of, predicted_pairs, predicted_wavefront, smoothing_check,
    stationary_phase_support, wavefront_estimate, GeneratingPhase, StationaryOptions, DEFAULT_BINS,
};
use gop_core::phasespace::{
    check_homogeneous_canonical, radial_pairing, transverse_zero_set,
    transverse_zero_set_by_pairing, CanonicalMap, CosphereGrid, Hamiltonian, HomogeneousSymbol,
    PhasePoint, TransverseSet,
};
use gop_core::quantize::{
    assemble_g_operator, egorov_residual, quantize_canonical, shift_for_map, shift_operator,
    AmplitudeFamily, GridOperator,
};
use gop_core::{Complex, GopError, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::report::{num, Criterion, Outcome};
use crate::scenario::{ExperimentSpec, MapSpec, Reference, Scenario, Setup};

type C = Complex<f64>;

/// Runs one experiment. `seed` feeds every random draw, so equal seeds give
/// equal tables.
pub fn run(scenario: &Scenario, exp: &ExperimentSpec, seed: u64) -> Result<Outcome> {
    let s = scenario.setup(exp);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match exp {
        ExperimentSpec::Transverse {
            tol,
            samples,
            euler_tol,
            invariance,
            ..
        } => transverse(
            &s,
            &mut rng,
            *tol,
            *samples,
            *euler_tol,
            invariance.as_ref(),
        ),
        ExperimentSpec::Hamjac {
            times,
            step,
            samples,
            hom4_tol,
            hj_tol,
            order,
            ..
        } => hamjac(
            &s,
            &mut rng,
            times,
            *step,
            *samples,
            *hom4_tol,
            *hj_tol,
            order.as_ref(),
        ),
        ExperimentSpec::Calibration {
            hamiltonian,
            time,
            step,
            reference,
            tol,
            ..
        } => calibration(&s, hamiltonian, *time, *step, *reference, *tol),
        ExperimentSpec::Egorov {
            symbol,
            map,
            cutoffs,
            min_ratio,
            max_residual,
            ..
        } => {
            let lay = s.layout()?;
            egorov(
                &s,
                &symbol.sample(lay)?,
                map,
                cutoffs,
                *min_ratio,
                *max_residual,
            )
        }
        ExperimentSpec::Algebra {
            samples,
            law_tol,
            compose,
            ..
        } => algebra(&s, &mut rng, *samples, *law_tol, compose.as_ref()),
        ExperimentSpec::Trajectory {
            bases,
            windows,
            threshold,
            min_sigma,
            max_decay_ratio,
            ..
        } => trajectory(
            &s,
            *bases,
            windows,
            *threshold,
            *min_sigma,
            *max_decay_ratio,
        ),
        ExperimentSpec::Ellipticity { .. } => ellipticity(&s, exp),
        ExperimentSpec::Wavefront {
            sizes,
            window,
            threshold,
            slack,
            max_fraction,
            ..
        } => wavefront(&s, sizes, *window, *threshold, *slack, *max_fraction),
        ExperimentSpec::Smoothing {
            sizes,
            min_exponent,
            stability,
            ..
        } => smoothing(&s, sizes, *min_exponent, *stability),
        ExperimentSpec::Stationary {
            time_tol,
            floor,
            max_distance,
            ..
        } => stationary(&s, *time_tol, *floor, *max_distance),
    }
}

fn random_cosphere(rng: &mut ChaCha8Rng, dim: usize) -> PhasePoint<f64> {
    let x = [
        rng.random::<f64>() * TAU,
        if dim == 2 {
            rng.random::<f64>() * TAU
        } else {
            0.0
        },
    ];
    if dim == 1 {
        PhasePoint::new(x, [if rng.random::<bool>() { 1.0 } else { -1.0 }, 0.0])
    } else {
        let th = rng.random::<f64>() * TAU;
        PhasePoint::new(x, [th.cos(), th.sin()])
    }
}

/// Coordinate in the centred chart `[−π, π)`.
fn centred(x: f64) -> f64 {
    (x + PI).rem_euclid(TAU) - PI
}

fn transverse(
    s: &Setup,
    rng: &mut ChaCha8Rng,
    tol: f64,
    samples: usize,
    euler_tol: f64,
    invariance: Option<&crate::scenario::InvarianceSpec>,
) -> Result<Outcome> {
    let hams = s.hamiltonian_list()?;
    let lay = s.layout()?;
    let mut euler = 0.0f64;
    for h in &hams {
        for _ in 0..samples {
            let m = random_cosphere(rng, s.dim);
            euler = euler.max((radial_pairing(h, &m)? - h.value(&m)).abs());
        }
    }
    let by_derivative = transverse_zero_set(&hams, lay, tol)?;
    let by_pairing = transverse_zero_set_by_pairing(&hams, lay, tol)?;
    let mismatch = by_derivative
        .mask()
        .iter()
        .zip(by_pairing.mask())
        .filter(|(a, b)| a != b)
        .count();
    let mut criteria = vec![
        Criterion::at_most("euler_defect", euler, euler_tol),
        Criterion::equals("transverse_mismatch_cells", mismatch as f64, 0.0),
    ];
    // per marked cell: (stays invariant, crosses the chart seam)
    let mut status: Vec<Option<(bool, bool)>> = vec![None; lay.n_cells()];
    if let Some(inv) = invariance {
        let bound = tol + inv.slack;
        let (mut checked, mut violations) = (0usize, 0usize);
        for h in &hams {
            let flow = FlowMap::new(h.clone(), inv.time, inv.step)?;
            for c in (0..lay.n_cells()).filter(|&c| by_derivative.contains(c)) {
                let m = lay.cell_point::<f64>(c);
                let img = flow.apply(&m)?;
                let seam = (0..s.dim).any(|i| {
                    centred(m.x[i]) + img.x[i] - m.x[i] >= PI
                        || centred(m.x[i]) + img.x[i] - m.x[i] <= -PI
                });
                let ok = by_derivative.defect(&img)? <= bound;
                let prev = status[c].unwrap_or((true, false));
                status[c] = Some((prev.0 && ok, prev.1 || seam));
                if !(inv.interior_only && seam) {
                    checked += 1;
                    violations += !ok as usize;
                }
            }
        }
        let fraction = if checked == 0 {
            0.0
        } else {
            violations as f64 / checked as f64
        };
        criteria.push(Criterion::at_least(
            "invariance_cells_checked",
            checked as f64,
            1.0,
        ));
        criteria.push(Criterion::at_most(
            "invariance_violation_fraction",
            fraction,
            inv.max_fraction,
        ));
    }
    let mut csv =
        String::from("cell,x0,x1,p0,p1,by_derivative,by_pairing,invariant,crosses_seam\n");
    for c in 0..lay.n_cells() {
        let m = lay.cell_point::<f64>(c);
        let (inv_col, seam_col) = match status[c] {
            Some((ok, seam)) => ((ok as u8).to_string(), (seam as u8).to_string()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            csv,
            "{c},{},{},{},{},{},{},{inv_col},{seam_col}",
            num(m.x[0]),
            num(m.x[1]),
            num(m.p[0]),
            num(m.p[1]),
            by_derivative.contains(c) as u8,
            by_pairing.contains(c) as u8
        );
    }
    Ok(Outcome { criteria, csv })
}

#[allow(clippy::too_many_arguments)]
fn hamjac(
    s: &Setup,
    rng: &mut ChaCha8Rng,
    times: &[f64],
    step: f64,
    samples: usize,
    hom4_tol: f64,
    hj_tol: f64,
    order: Option<&crate::scenario::OrderSpec>,
) -> Result<Outcome> {
    let pts: Vec<PhasePoint<f64>> = (0..samples)
        .map(|_| {
            let r = 0.5 + 2.0 * rng.random::<f64>();
            let x = [
                rng.random_range(-1.0..1.0),
                if s.dim == 2 {
                    rng.random_range(-1.0..1.0)
                } else {
                    0.0
                },
            ];
            if s.dim == 1 {
                PhasePoint::new(x, [if rng.random::<bool>() { r } else { -r }, 0.0])
            } else {
                let th = rng.random::<f64>() * TAU;
                PhasePoint::new(x, [r * th.cos(), r * th.sin()])
            }
        })
        .collect();
    let mut csv = String::from("hamiltonian,time,step,hom4,hamilton_jacobi\n");
    let (mut hom4, mut hj) = (0.0f64, 0.0f64);
    for (name, h) in s.hamiltonians.iter().zip(s.hamiltonian_list()?) {
        for &t in times {
            let flow = FlowMap::new(h.clone(), t, step)?;
            let a = check_homogeneous_canonical(&flow.as_map(), &pts).max();
            let b = verify_hamilton_jacobi(&GeneratingFunction::from_flow(flow), &h, &pts)?;
            hom4 = hom4.max(a);
            hj = hj.max(b);
            let _ = writeln!(csv, "{name},{},{},{},{}", num(t), num(step), num(a), num(b));
        }
    }
    let mut criteria = vec![
        Criterion::at_most("hom4_residual", hom4, hom4_tol),
        Criterion::at_most("hj_residual", hj, hj_tol),
    ];
    if let Some(o) = order {
        let h = Hamiltonian::from_name(&o.hamiltonian, s.dim)?;
        let mut res = [0.0; 2];
        for (k, st) in [o.coarse_step, 0.5 * o.coarse_step].into_iter().enumerate() {
            res[k] =
                check_homogeneous_canonical(&FlowMap::new(h.clone(), o.time, st)?.as_map(), &pts)
                    .max();
            let _ = writeln!(
                csv,
                "{},{},{},{},",
                o.hamiltonian,
                num(o.time),
                num(st),
                num(res[k])
            );
        }
        criteria.push(Criterion::at_least(
            "step_halving_ratio",
            res[0] / res[1],
            o.min_ratio,
        ));
    }
    Ok(Outcome { criteria, csv })
}

fn canonical_operator(
    h: &Hamiltonian<f64>,
    t: f64,
    step: f64,
    grid: gop_core::phasespace::TorusGrid,
) -> Result<(FlowMap<f64>, GridOperator<f64>)> {
    let flow = FlowMap::new(h.clone(), t, step)?;
    let s = GeneratingFunction::from_flow(flow.clone());
    let phi = quantize_canonical(
        &flow,
        &s,
        &AmplitudeFamily::constant(C::new(1.0, 0.0), 1.0),
        grid,
    )?;
    Ok((flow, phi))
}

fn calibration(
    s: &Setup,
    hamiltonian: &str,
    time: f64,
    step: f64,
    reference: Reference,
    tol: f64,
) -> Result<Outcome> {
    let grid = s.grid()?;
    let h = Hamiltonian::from_name(hamiltonian, s.dim)?;
    let (flow, phi) = canonical_operator(&h, time, step, grid)?;
    let target = match reference {
        Reference::Identity => GridOperator::identity(grid),
        Reference::Translation => shift_for_map(&flow.as_map(), grid)?,
    };
    let diff = phi.max_abs_diff(&target)?;
    let csv = format!(
        "hamiltonian,time,n_points,reference,max_abs_diff\n{hamiltonian},{},{},{:?},{}\n",
        num(time),
        grid.n_points(),
        reference,
        num(diff)
    )
    .to_lowercase();
    Ok(Outcome {
        criteria: vec![Criterion::at_most("max_abs_diff", diff, tol)],
        csv,
    })
}

fn egorov(
    s: &Setup,
    a: &HomogeneousSymbol<f64>,
    map: &MapSpec,
    cutoffs: &[usize],
    min_ratio: Option<f64>,
    max_residual: Option<f64>,
) -> Result<Outcome> {
    let grid = s.grid()?;
    let (phi, g) = match map {
        MapSpec::Flow {
            hamiltonian,
            time,
            step,
        } => {
            let (flow, phi) = canonical_operator(
                &Hamiltonian::from_name(hamiltonian, s.dim)?,
                *time,
                *step,
                grid,
            )?;
            (phi, flow.as_map())
        }
        MapSpec::Translation { shift } => (
            shift_operator(*shift, grid),
            CanonicalMap::translation(*shift, s.dim),
        ),
    };
    let mut csv = String::from("cutoff,residual\n");
    let mut res = Vec::with_capacity(cutoffs.len());
    for &k in cutoffs {
        let r = egorov_residual(&phi, a, &g, k)?;
        let _ = writeln!(csv, "{k},{}", num(r));
        res.push(r);
    }
    let mut criteria = Vec::new();
    if let Some(ratio) = min_ratio {
        let (first, last) = (res[0], res[res.len() - 1]);
        criteria.push(Criterion::at_least("residual_ratio", first / last, ratio));
    }
    if let Some(bound) = max_residual {
        criteria.push(Criterion::at_most(
            "max_residual",
            res.iter().copied().fold(0.0, f64::max),
            bound,
        ));
    }
    Ok(Outcome { criteria, csv })
}

fn random_element(rng: &mut ChaCha8Rng, lay: CosphereGrid) -> Result<CrossedElement<f64>> {
    let mut terms: Vec<(i64, HomogeneousSymbol<f64>)> = Vec::new();
    for _ in 0..rng.random_range(1..=3) {
        let g = rng.random_range(-2..=2i64);
        if terms.iter().any(|t| t.0 == g) {
            continue;
        }
        let c: [f64; 4] = [
            rng.random(),
            rng.random(),
            rng.random(),
            rng.random::<f64>() * TAU,
        ];
        terms.push((
            g,
            HomogeneousSymbol::<f64>::from_fn(lay, move |x, w| {
                C::new(
                    c[0] + c[1] * (x[0] + c[3]).cos(),
                    c[2] * w[0] + 0.2 * (2.0 * x[0]).sin(),
                )
            }),
        ));
    }
    CrossedElement::from_terms(lay, terms, C::new(rng.random(), rng.random()))
}

fn algebra(
    s: &Setup,
    rng: &mut ChaCha8Rng,
    samples: usize,
    law_tol: f64,
    compose: Option<&crate::scenario::ComposeSpec>,
) -> Result<Outcome> {
    let group = s.group()?;
    let lay = s.layout()?;
    let dist =
        |a: &CrossedElement<f64>, b: &CrossedElement<f64>| a.sub(b).map(|d| d.max_coeff_norm());
    let (mut assoc, mut invol, mut anti) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..samples {
        let (a, b, c) = (
            random_element(rng, lay)?,
            random_element(rng, lay)?,
            random_element(rng, lay)?,
        );
        assoc = assoc.max(dist(
            &convolve(&convolve(&a, &b, &group)?, &c, &group)?,
            &convolve(&a, &convolve(&b, &c, &group)?, &group)?,
        )?);
        invol = invol.max(dist(&involution(&involution(&a, &group), &group), &a)?);
        anti = anti.max(dist(
            &involution(&convolve(&a, &b, &group)?, &group),
            &convolve(&involution(&b, &group), &involution(&a, &group), &group)?,
        )?);
    }
    // δ_g ⋆ f ⋆ δ_{g⁻¹} against f evaluated directly at g⁻¹·m
    let f_at = |x: &[f64; 2], w: &[f64; 2]| C::new(1.0 / (2.0 + x[0].cos()), 0.5 * w[0]);
    let one = HomogeneousSymbol::constant(lay, C::new(1.0, 0.0));
    let f = HomogeneousSymbol::<f64>::from_fn(lay, f_at);
    let g1 = 1;
    let lhs = convolve(
        &convolve(
            &CrossedElement::delta(g1, one.clone()),
            &CrossedElement::delta(0, f),
            &group,
        )?,
        &CrossedElement::delta(group.inverse(g1), one),
        &group,
    )?;
    let back = |m: &PhasePoint<f64>| -> Result<PhasePoint<f64>> {
        let s = group.parameter(g1);
        Ok(match group.action() {
            Action::Trivial => *m,
            Action::Translation { velocity } => {
                PhasePoint::new([m.x[0] - s * velocity[0], m.x[1] - s * velocity[1]], m.p)
            }
            Action::HamiltonianFlow {
                hamiltonian,
                unit_time,
                integrator_step,
            } => FlowMap::new(hamiltonian.clone(), s * unit_time, *integrator_step)?
                .apply_inverse(m)?,
            Action::Generator(g) => g.inverse().apply(m),
        })
    };
    let cov = match lhs.coeff(0) {
        Some(c) => {
            let mut worst = 0.0f64;
            for cell in 0..lay.n_cells() {
                let m = back(&lay.cell_point::<f64>(cell))?;
                let r = m.p[0].hypot(m.p[1]);
                let expect = f_at(&m.x, &[m.p[0] / r, m.p[1] / r]);
                worst = worst.max((c.at_cell(cell) - expect).norm());
            }
            worst
        }
        None => f64::INFINITY,
    };

    let mut csv = format!(
        "check,value\nassociativity,{}\ninvolution,{}\nanti_automorphism,{}\ncovariance,{}\n",
        num(assoc),
        num(invol),
        num(anti),
        num(cov)
    );
    let mut criteria = vec![
        Criterion::at_most("associativity", assoc, law_tol),
        Criterion::at_most("involution", invol, law_tol),
        Criterion::at_most("anti_automorphism", anti, law_tol),
        Criterion::at_most("covariance", cov, law_tol),
    ];
    if let Some(cs) = compose {
        let grid = s.grid()?;
        let rep = s.representation(&group, grid)?;
        let a = cs.a.build(&group, lay)?;
        let b = cs.b.build(&group, lay)?;
        let lhs = assemble_g_operator(&a, &group, &rep, grid)?
            .compose(&assemble_g_operator(&b, &group, &rep, grid)?)?;
        let d = lhs.sub(&assemble_g_operator(
            &convolve(&a, &b, &group)?,
            &group,
            &rep,
            grid,
        )?)?;
        let (r0, r1) = (d.band_norm(cs.cutoffs[0]), d.band_norm(cs.cutoffs[1]));
        let _ = writeln!(
            csv,
            "compose_band_{},{}\ncompose_band_{},{}",
            cs.cutoffs[0],
            num(r0),
            cs.cutoffs[1],
            num(r1)
        );
        criteria.push(Criterion::at_least("compose_ratio", r0 / r1, cs.min_ratio));
    }
    Ok(Outcome { criteria, csv })
}

/// Base points spread over the cells with alternating directions.
fn section_bases(lay: CosphereGrid, count: usize) -> Vec<PhasePoint<f64>> {
    let n = lay.n_cells();
    let stride = (n / count.max(1)).max(1);
    (0..count.min(n))
        .map(|k| lay.cell_point((k * stride + k % lay.n_dirs()) % n))
        .collect()
}

fn trajectory(
    s: &Setup,
    bases: usize,
    windows: &[usize],
    threshold: f64,
    min_sigma: Option<f64>,
    max_decay_ratio: Option<f64>,
) -> Result<Outcome> {
    let group = s.group()?;
    let elt = s.element_at(&group, s.n_points)?;
    let rep = finite_section_invertibility(
        &elt,
        &group,
        &section_bases(elt.layout(), bases),
        windows,
        threshold,
    )?;
    let mut csv = String::from("base,x0,x1,p0,p1,window,sigma_min,verdict\n");
    for (k, b) in rep.bases.iter().enumerate() {
        for (w, sig) in &b.sigma {
            let m = &b.base;
            let _ = writeln!(
                csv,
                "{k},{},{},{},{},{w},{},{:?}",
                num(m.x[0]),
                num(m.x[1]),
                num(m.p[0]),
                num(m.p[1]),
                num(*sig),
                b.verdict
            );
        }
    }
    let mut criteria = Vec::new();
    if let Some(bound) = min_sigma {
        criteria.push(Criterion::at_least("min_sigma", rep.min_sigma(), bound));
    }
    if let Some(ratio) = max_decay_ratio {
        let (lo, hi) = (
            windows.iter().min().copied().unwrap_or(0),
            windows.iter().max().copied().unwrap_or(0),
        );
        let (a, b) = (
            rep.min_sigma_at(lo).unwrap_or(f64::NAN),
            rep.min_sigma_at(hi).unwrap_or(f64::NAN),
        );
        criteria.push(Criterion::at_most("sigma_decay_ratio", b / a, ratio));
    }
    Ok(Outcome { criteria, csv })
}

fn ellipticity(s: &Setup, exp: &ExperimentSpec) -> Result<Outcome> {
    let ExperimentSpec::Ellipticity {
        sizes,
        bases,
        windows,
        section_threshold,
        inverse_cap,
        inverse_tol,
        band,
        svd_tol,
        expect_index,
        expect_consistent,
        expect_almost_inverse,
        min_gap,
        ..
    } = exp
    else {
        return Err(GopError::Usage("not an ellipticity experiment".into()));
    };
    let group = s.group()?;
    let element = s.element_at(&group, s.n_points)?;
    let cfg = EllipticityConfig {
        representation: s.representation(&group, element.layout().torus())?,
        element,
        group: group.clone(),
        sizes: sizes.clone(),
        section_bases: *bases,
        windows: windows.clone(),
        section_threshold: *section_threshold,
        inverse: InverseOptions {
            support_cap: *inverse_cap,
            tol: *inverse_tol,
        },
        band: *band,
        svd_tol: *svd_tol,
    };
    let rep = ellipticity_experiment(&cfg, |n| s.element_at(&group, n))?;
    let mut csv = String::from("n_points,sigma_min,lower_spectrum,kernel,cokernel,gap_ratio,index,left_k,left_2k,right_k,right_2k\n");
    for (k, z) in rep.index.sizes.iter().enumerate() {
        let ai = rep.almost_inverse.iter().find(|a| a.0 == z.n_points);
        let cell = |v: Option<f64>| v.map(num).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{},{},{},{},{},{},{},{},{},{},{}",
            z.n_points,
            num(rep.sigma_min[k].1),
            num(rep.lower_spectrum[k].1),
            z.kernel,
            z.cokernel,
            num(z.gap_ratio),
            z.index.map(|i| i.to_string()).unwrap_or_default(),
            cell(ai.map(|a| a.1[0])),
            cell(ai.map(|a| a.1[1])),
            cell(ai.map(|a| a.2[0])),
            cell(ai.map(|a| a.2[1])),
        );
    }
    let mut criteria = Vec::new();
    if *expect_consistent == Some(true) {
        criteria.push(Criterion::at_least(
            "section_min_sigma",
            rep.section_min_sigma,
            *section_threshold,
        ));
    }
    if let Some(i) = expect_index {
        criteria.push(Criterion::holds("index_stable", rep.index.is_stable()));
        criteria.push(Criterion::equals(
            "index",
            rep.index.index.map_or(f64::NAN, |v| v as f64),
            *i as f64,
        ));
    }
    if let Some(g) = min_gap {
        let gap = rep
            .index
            .sizes
            .iter()
            .map(|z| z.gap_ratio)
            .fold(f64::INFINITY, f64::min);
        criteria.push(Criterion::at_least("min_gap_ratio", gap, *g));
    }
    if let Some(c) = expect_consistent {
        criteria.push(Criterion::equals(
            "fredholm_consistent",
            rep.fredholm_consistent as u8 as f64,
            *c as u8 as f64,
        ));
    }
    if let Some(c) = expect_almost_inverse {
        criteria.push(Criterion::equals(
            "almost_inverse_non_increasing",
            rep.almost_inverse_ok as u8 as f64,
            *c as u8 as f64,
        ));
    }
    Ok(Outcome { criteria, csv })
}

/// Hamiltonians generating a line action, from the scenario list or the action itself.
fn generators(s: &Setup, group: &GroupModel<f64>) -> Result<Vec<Hamiltonian<f64>>> {
    if !s.hamiltonians.is_empty() {
        return s.hamiltonian_list();
    }
    match group.action() {
        Action::Translation { velocity } => Ok(vec![Hamiltonian::linear(*velocity, s.dim)]),
        Action::HamiltonianFlow { hamiltonian, .. } => Ok(vec![hamiltonian.clone()]),
        Action::Trivial => Ok(vec![Hamiltonian::zero(s.dim)]),
        Action::Generator(_) => Err(GopError::Usage(
            "generator actions have no Hamiltonian".into(),
        )),
    }
}

fn transverse_for(
    s: &Setup,
    group: &GroupModel<f64>,
    lay: CosphereGrid,
) -> Result<Option<TransverseSet<f64>>> {
    match group.kind() {
        GroupKind::Line { .. } => Ok(Some(transverse_zero_set(
            &generators(s, group)?,
            lay,
            1e-9,
        )?)),
        _ => Ok(None),
    }
}

fn assembled(
    s: &Setup,
    group: &GroupModel<f64>,
    n: usize,
) -> Result<(CrossedElement<f64>, GridOperator<f64>)> {
    let elt = s.element_at(group, n)?;
    let grid = elt.layout().torus();
    let d = assemble_g_operator(&elt, group, &s.representation(group, grid)?, grid)?;
    Ok((elt, d))
}

fn wavefront(
    s: &Setup,
    sizes: &[usize],
    window: usize,
    threshold: f64,
    slack: usize,
    max_fraction: f64,
) -> Result<Outcome> {
    let group = s.group()?;
    let mut csv = String::from("n_points,x_block,xp_block,bin,estimated,predicted,energy\n");
    let mut fractions = Vec::new();
    for &n in sizes {
        let (elt, d) = assembled(s, &group, n)?;
        let ts = transverse_for(s, &group, elt.layout())?;
        let est = wavefront_estimate(&kernel_of(&d), window, threshold)?;
        let pred = predicted_wavefront(&elt, &group, ts.as_ref(), 1e-12, window, DEFAULT_BINS)?;
        fractions.push(containment_report(&est, &pred, slack)?.outside_mass_fraction);
        for idx in 0..est.mask.len() {
            if est.mask[idx] || pred.mask[idx] {
                let (i, j, b) = est.split(idx);
                let _ = writeln!(
                    csv,
                    "{n},{i},{j},{b},{},{},{}",
                    est.mask[idx] as u8,
                    pred.mask[idx] as u8,
                    num(est.energy[idx])
                );
            }
        }
    }
    let non_increasing = fractions.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    Ok(Outcome {
        criteria: vec![
            Criterion::at_most("outside_mass_fraction", fractions[0], max_fraction),
            Criterion::holds("fraction_non_increasing", non_increasing),
        ],
        csv,
    })
}

fn smoothing(s: &Setup, sizes: &[usize], min_exponent: f64, stability: f64) -> Result<Outcome> {
    let group = s.group()?;
    let mut csv = String::from("n_points,cutoff,band_norm\n");
    let mut reports = Vec::new();
    for &n in sizes {
        let rep = smoothing_check(&assembled(s, &group, n)?.1)?;
        for (k, v) in rep.cutoffs.iter().zip(&rep.norms) {
            let _ = writeln!(csv, "{n},{k},{}", num(*v));
        }
        reports.push(rep);
    }
    let first = &reports[0];
    let drift = reports
        .iter()
        .map(|r| (r.exponent - first.exponent).abs())
        .fold(0.0, f64::max);
    Ok(Outcome {
        criteria: vec![
            Criterion::holds("norms_decay", first.decays),
            Criterion::at_least("exponent", first.exponent, min_exponent),
            Criterion::at_most("exponent_drift", drift, stability),
        ],
        csv,
    })
}

fn stationary(s: &Setup, time_tol: f64, floor: f64, max_distance: usize) -> Result<Outcome> {
    let group = s.group()?;
    let elt = s.element_at(&group, s.n_points)?;
    let lay = elt.layout();
    let h = s.hamiltonian_list()?.remove(0);
    let ts = transverse_zero_set(std::slice::from_ref(&h), lay, 1e-9)?;
    let pred = predicted_pairs(&elt, &group, Some(&ts), floor)?;
    let times: Vec<f64> = elt.support().iter().map(|&k| group.parameter(k)).collect();
    let masks: Vec<(f64, Vec<bool>)> = elt
        .terms()
        .map(|(k, c)| (group.parameter(k), c.ess_supp_mask(floor)))
        .collect();
    let amp = move |x: &[f64; 2], t: f64, th: &[f64; 2]| {
        let c = lay.nearest_cell(&PhasePoint::new(*x, *th));
        masks.iter().any(|(p, m)| (p - t).abs() < 1e-12 && m[c])
    };
    let step = match group.action() {
        Action::HamiltonianFlow {
            integrator_step, ..
        } => *integrator_step,
        _ => 0.01,
    };
    let phase = GeneratingPhase::from_flow(h, times, step);
    let opts = StationaryOptions {
        time_tol,
        ..StationaryOptions::default()
    };
    let sp = stationary_phase_support(&phase, &amp, lay, opts)?;
    let dist = pred.hausdorff(&sp);
    let mut csv = String::from("source,x0,x1,xp0,xp1,p_dir,pp_dir\n");
    for (label, set) in [("predicted", &pred), ("stationary", &sp)] {
        for c in set.iter() {
            let _ = writeln!(
                csv,
                "{label},{},{},{},{},{},{}",
                c.x[0], c.x[1], c.xp[0], c.xp[1], c.p, c.pp
            );
        }
    }
    Ok(Outcome {
        criteria: vec![
            Criterion::at_most(
                "hausdorff_cells",
                dist.map_or(f64::INFINITY, |d| d as f64),
                max_distance as f64,
            ),
            Criterion::at_least("predicted_pairs", pred.len() as f64, 1.0),
        ],
        csv,
    })
}
