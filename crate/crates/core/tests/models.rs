use std::f64::consts::PI;

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use spectral_shift::models::{
    assemble, build_dirichlet_hole, build_robin, check_symbol, conformal_profile, dominance, export_table,
    pseudo_operator, robin_trace_constant, spectral_quadrature, symbol_dominance, weighted_capacity, ConformalProfile,
    ConformalSpec, FractionalSymbol, FrozenSymbol, HoleSpec, PseudoMask, PseudoSpec, RobinDomain, RobinSpec,
    SymbolFamily, SymbolKind, TabulatedSymbol,
};
use spectral_shift::perturbation::{solve_corrector, PerturbationInstance, RestrictionMap};
use spectral_shift::{
    solve_generalized_eigenpairs, Error, LeadingCoefficient, ModelInstance, ModelKind, ModelSpec, ModelTag,
    PreparedModel, SubspaceSpec,
};

fn robin(domain: RobinDomain, nodes: usize) -> ModelSpec {
    ModelSpec {
        mode_index: 0,
        kind: ModelKind::Robin(RobinSpec { domain, nodes }),
    }
}

fn conformal(dimension: usize, nodes: usize, profile: ConformalProfile) -> ModelSpec {
    ModelSpec {
        mode_index: 0,
        kind: ModelKind::Conformal(ConformalSpec {
            dimension,
            nodes,
            profile,
        }),
    }
}

fn hole(nodes: usize, center: [f64; 2]) -> ModelSpec {
    ModelSpec {
        mode_index: 0,
        kind: ModelKind::DirichletHole(HoleSpec {
            nodes,
            center,
            radius_scale: 0.25,
        }),
    }
}

fn pseudo(lattice: usize, mask: PseudoMask, symbol: SymbolKind) -> ModelSpec {
    ModelSpec {
        mode_index: 0,
        kind: ModelKind::PseudoSymbol(PseudoSpec { lattice, mask, symbol }),
    }
}

fn ambient_eigenvalues(spec: &ModelSpec, eps: f64, k: usize) -> Vec<f64> {
    let model = PreparedModel::<f64>::new(spec).unwrap();
    let mi = model.instance(eps).unwrap();
    let sol = spectral_shift::spectral::solve_on_subspace(
        mi.instance.perturbed(),
        mi.instance.subspace(),
        k,
        model.eigen_options(),
    )
    .unwrap();
    sol.eigenvalues().to_vec()
}

#[test]
fn robin_interior_row_and_boundary_difference() {
    let spec = robin(RobinDomain::Interval, 101);
    let h = 0.01;
    let (a0, sub) = assemble::<f64>(&spec, 0.0).unwrap();
    assert_eq!(sub, SubspaceSpec::Full);
    let a = a0.stiffness();
    assert_relative_eq!(a.get(50, 49), -1.0 / h, max_relative = 1e-12);
    assert_relative_eq!(a.get(50, 50), 2.0 / h + h, max_relative = 1e-12);
    assert_relative_eq!(a.get(50, 51), -1.0 / h, max_relative = 1e-12);
    let (ae, _) = assemble::<f64>(&spec, 0.3).unwrap();
    let diff = ae.stiffness().to_dense() - a.to_dense();
    for i in 0..101 {
        for j in 0..101 {
            let expected = if i == j && (i == 0 || i == 100) { 0.3 } else { 0.0 };
            assert!((diff[(i, j)] - expected).abs() < 1e-12, "({i}, {j})");
        }
    }
    assert_eq!(ae.mass(), a0.mass());
}

#[test]
fn robin_ground_state_is_constant() {
    let sol =
        solve_generalized_eigenpairs(&assemble::<f64>(&robin(RobinDomain::Interval, 51), 0.0).unwrap().0, 2).unwrap();
    assert_relative_eq!(sol.eigenvalue(0), 1.0, epsilon = 1e-12);
}

#[test]
fn robin_eigenvalues_are_sandwiched_and_monotone() {
    for spec in [robin(RobinDomain::Interval, 101), robin(RobinDomain::Square, 17)] {
        let c = robin_trace_constant::<f64>(&spec).unwrap();
        assert!(c > 0.0);
        let base = ambient_eigenvalues(&spec, 0.0, 4);
        let mut prev = base.clone();
        for eps in [0.01, 0.05, 0.1, 0.5, 1.0] {
            let cur = ambient_eigenvalues(&spec, eps, 4);
            for n in 0..4 {
                let tol = 1e-10 * base[n];
                assert!(cur[n] >= base[n] - tol);
                assert!(cur[n] <= (1.0 + eps * c) * base[n] + tol, "{spec:?} {eps} {n}");
                assert!(cur[n] >= prev[n] - tol);
            }
            prev = cur;
        }
    }
}

#[test]
fn robin_trace_constant_matches_quotient_bound() {
    // the constant is attained: no vector exceeds it and the top vector reaches it
    let spec = robin(RobinDomain::Interval, 41);
    let c = robin_trace_constant::<f64>(&spec).unwrap();
    let (form, _) = assemble::<f64>(&spec, 0.0).unwrap();
    let a = form.stiffness().to_dense();
    let mut b = DMatrix::zeros(41, 41);
    b[(0, 0)] = 1.0;
    b[(40, 40)] = 1.0;
    let l = a.clone().cholesky().unwrap().l();
    let li = l.try_inverse().unwrap();
    let g = &li * b * li.transpose();
    let top = SymmetricEigen::new((&g + g.transpose()) * 0.5).eigenvalues.max();
    assert_relative_eq!(c, top, max_relative = 1e-10);
    // continuum value coth(½), attained by cosh(x - ½)
    assert!((c - 1.0 / 0.5f64.tanh()).abs() < 1e-3, "{c}");
}

#[test]
fn square_robin_coefficient_is_perimeter() {
    let model = PreparedModel::<f64>::new(&robin(RobinDomain::Square, 21)).unwrap();
    let c = model.leading_coefficient().unwrap().linear().unwrap();
    assert_relative_eq!(c, 4.0, max_relative = 1e-10);
}

#[test]
fn conformal_with_zero_profile_is_unperturbed() {
    let spec = conformal(3, 9, ConformalProfile::Constant { value: 0.0 });
    let (a0, _) = assemble::<f64>(&spec, 0.0).unwrap();
    let (ae, _) = assemble::<f64>(&spec, 0.4).unwrap();
    assert_eq!(a0.stiffness(), ae.stiffness());
    assert_eq!(a0.mass(), ae.mass());
    let model = PreparedModel::<f64>::new(&spec).unwrap();
    let mi = model.instance(0.4).unwrap();
    assert!(mi.instance.defect().amax() < 1e-14);
    assert!(solve_corrector(&mi.instance).unwrap().v.amax() < 1e-12);
}

#[test]
fn planar_conformal_stiffness_is_invariant() {
    let spec = conformal(2, 17, ConformalProfile::CosineBump { amplitude: 1.0 });
    let (a0, _) = assemble::<f64>(&spec, 0.0).unwrap();
    let (ae, _) = assemble::<f64>(&spec, 0.3).unwrap();
    assert_eq!(a0.stiffness(), ae.stiffness());
    let psi = conformal_profile::<f64>(&spec).unwrap();
    let h = 1.0 / 16.0;
    for i in 0..psi.len() {
        assert_relative_eq!(ae.mass()[i], h * h * (0.6 * psi[i]).exp(), max_relative = 1e-13);
    }
}

#[test]
fn constant_conformal_factor_scales_the_spectrum() {
    let spec = conformal(3, 9, ConformalProfile::Constant { value: 1.0 });
    let base = ambient_eigenvalues(&spec, 0.0, 3);
    for eps in [0.05, 0.2, -0.3] {
        let cur = ambient_eigenvalues(&spec, eps, 3);
        for n in 0..3 {
            assert_relative_eq!(cur[n], (-2.0 * eps).exp() * base[n], max_relative = 1e-10);
        }
    }
    let model = PreparedModel::<f64>::new(&spec).unwrap();
    let c = model.leading_coefficient().unwrap().linear().unwrap();
    assert_relative_eq!(c, -2.0 * base[0], max_relative = 1e-10);
}

#[test]
fn conformal_eigenvalues_are_sandwiched() {
    let profile = ConformalProfile::CosineBump { amplitude: 0.8 };
    let spec = conformal(3, 9, profile);
    let base = ambient_eigenvalues(&spec, 0.0, 4);
    for eps in [0.05, 0.2, 0.5] {
        let s = eps * profile.sup_norm();
        let cur = ambient_eigenvalues(&spec, eps, 4);
        for n in 0..4 {
            // stiffness within e^{±s}, mass within e^{±3s}
            assert!(cur[n] >= (-4.0 * s).exp() * base[n] * (1.0 - 1e-12));
            assert!(cur[n] <= (4.0 * s).exp() * base[n] * (1.0 + 1e-12));
        }
    }
    assert!(matches!(spec.check_eps(0.7), Err(Error::Validation(_))));
}

#[test]
fn empty_hole_leaves_the_problem_unchanged() {
    let spec = hole(24, [0.5, 0.5]);
    let model = PreparedModel::<f64>::new(&spec).unwrap();
    let mi = build_dirichlet_hole::<f64>(&spec, 0.0).unwrap();
    let c = solve_corrector(&mi.instance).unwrap();
    assert!(c.v.amax() < 1e-12);
    let cap = weighted_capacity(&mi, &c).unwrap();
    assert!(cap.capacity.abs() < 1e-20);
    assert_relative_eq!(
        model.perturbed_eigenpairs(&mi).unwrap().eigenvalue(0),
        model.base().eigenvalue,
        max_relative = 1e-12
    );
}

#[test]
fn hole_covering_everything_has_capacity_lambda0() {
    let spec = hole(16, [0.5, 0.5]);
    let model = PreparedModel::<f64>::new(&spec).unwrap();
    let n = model.base_form().dim();
    let base = model.base().clone();
    let instance = PerturbationInstance::new(
        &base,
        model.base_form().clone(),
        SubspaceSpec::ZeroOnIndexSet((0..n).collect()),
        DVector::zeros(n),
        RestrictionMap::Identity,
    )
    .unwrap();
    let mi = ModelInstance {
        tag: ModelTag::DirichletHole,
        eps: 1.0,
        instance,
        defect_discrepancy: 0.0,
        hole: Some((0..n).collect()),
    };
    let c = solve_corrector(&mi.instance).unwrap();
    assert!((&c.v - &base.eigenfunction).amax() < 1e-14);
    let cap = weighted_capacity(&mi, &c).unwrap();
    assert_relative_eq!(cap.capacity, base.eigenvalue, max_relative = 1e-12);
}

#[test]
fn capacity_cross_check_and_nesting() {
    let spec = hole(64, [0.5, 0.5]);
    let model = PreparedModel::<f64>::new(&spec).unwrap();
    let h = 1.0 / 63.0;
    let mut prev = 0.0;
    for k in [2.0, 3.0, 4.0, 6.0] {
        let mi = model.instance(k * h / 0.25).unwrap();
        let c = solve_corrector(&mi.instance).unwrap();
        let cap = weighted_capacity(&mi, &c).unwrap();
        assert!(cap.relative_discrepancy <= 1e-10, "{cap:?}");
        assert!(cap.capacity > prev);
        prev = cap.capacity;
    }
}

#[test]
fn hole_node_set_and_admissibility() {
    let spec = hole(12, [0.5, 0.5]);
    let h = 1.0 / 11.0;
    let mi = build_dirichlet_hole::<f64>(&spec, 1.01 * h / 0.25).unwrap();
    let hole_nodes = mi.hole.unwrap();
    // center (0.5, 0.5) sits between nodes: the four nearest are within h
    assert_eq!(hole_nodes.len(), 4);
    assert!(matches!(spec.check_eps(0.5 / 0.25), Err(Error::Validation(_))));
    assert!(matches!(
        build_dirichlet_hole::<f64>(&spec, 1e-6),
        Err(Error::Validation(_))
    ));
    let off_center = hole(24, [0.1, 0.5]);
    assert!(matches!(off_center.check_eps(0.4), Err(Error::Validation(_))));
    assert!(matches!(hole(24, [1.0, 0.5]).validate(), Err(Error::Validation(_))));
    let table = export_table(&spec, 1.01 * h / 0.25).unwrap();
    assert_eq!(table.lines().filter(|l| l.ends_with(",1")).count(), 4);
}

#[test]
fn capacity_needs_the_hole_model() {
    let spec = robin(RobinDomain::Interval, 21);
    let mi = build_robin::<f64>(&spec, 0.1).unwrap();
    let c = solve_corrector(&mi.instance).unwrap();
    assert!(matches!(weighted_capacity(&mi, &c), Err(Error::Kind(_))));
    assert!(matches!(
        build_robin::<f64>(&hole(16, [0.5, 0.5]), 0.1),
        Err(Error::Kind(_))
    ));
}

#[test]
fn two_point_lattice_operator() {
    let f = TabulatedSymbol(vec![1.0, 3.0]);
    let form = pseudo_operator::<f64>(2, &[0, 1], &f, 0.0).unwrap();
    let a = form.stiffness().to_dense();
    assert_eq!(a, DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]));
    assert_eq!(form.mass(), &DVector::from_element(2, 1.0));
}

#[test]
fn full_mask_spectrum_is_the_symbol() {
    let m = 16;
    let mask: Vec<usize> = (0..m).collect();
    let f = FractionalSymbol;
    let form = pseudo_operator::<f64>(m, &mask, &f, 0.2).unwrap();
    let sol = solve_generalized_eigenpairs(&form, m).unwrap();
    let mut values: Vec<f64> = spectral_shift::models::frequencies(m)
        .into_iter()
        .map(|xi| SymbolFamily::<f64>::value(&f, 0.2, xi))
        .collect();
    values.sort_by(f64::total_cmp);
    for (got, want) in sol.eigenvalues().iter().zip(&values) {
        assert_relative_eq!(*got, *want, max_relative = 1e-10);
    }
}

#[test]
fn fractional_symbol_values_and_derivative() {
    let f = FractionalSymbol;
    let w = 2.0 * PI;
    assert_relative_eq!(
        SymbolFamily::<f64>::value(&f, 0.0, 1),
        1.0 + w * w,
        max_relative = 1e-14
    );
    assert_relative_eq!(SymbolFamily::<f64>::value(&f, 1.0, -3), 2.0, max_relative = 1e-14);
    for xi in [1i64, 2, 5, -7] {
        let d = 1e-6;
        let fd = (SymbolFamily::<f64>::value(&f, d, xi) - SymbolFamily::<f64>::value(&f, -d, xi)) / (2.0 * d);
        let exact = SymbolFamily::<f64>::derivative_at_zero(&f, xi);
        assert_relative_eq!(fd, exact, max_relative = 1e-7);
    }
    assert_relative_eq!(
        SymbolFamily::<f64>::derivative_at_zero(&f, 1),
        -2.0 * w.ln() * w * w,
        max_relative = 1e-14
    );
    assert_eq!(SymbolFamily::<f64>::derivative_at_zero(&f, 0), 0.0);
}

#[test]
fn frozen_symbol_has_zero_defect() {
    let spec = pseudo(32, PseudoMask::LeftHalf, SymbolKind::Frozen);
    let model = PreparedModel::<f64>::new(&spec).unwrap();
    let mi = model.instance(0.3).unwrap();
    assert_eq!(mi.instance.defect().amax(), 0.0);
    assert_eq!(model.leading_coefficient().unwrap(), LeadingCoefficient::Linear(0.0));
    let v = solve_corrector(&mi.instance).unwrap().v;
    assert!(v.amax() < 1e-12);
}

struct OddSymbol;

impl SymbolFamily<f64> for OddSymbol {
    fn value(&self, _eps: f64, xi: i64) -> f64 {
        3.0 + 0.1 * xi as f64
    }

    fn derivative_at_zero(&self, _xi: i64) -> f64 {
        0.0
    }
}

struct SubUnitSymbol;

impl SymbolFamily<f64> for SubUnitSymbol {
    fn value(&self, _eps: f64, xi: i64) -> f64 {
        if xi.abs() == 2 {
            0.9
        } else {
            2.0
        }
    }

    fn derivative_at_zero(&self, _xi: i64) -> f64 {
        0.0
    }
}

#[test]
fn symbol_validation() {
    assert!(matches!(check_symbol(&OddSymbol, 16, 0.0), Err(Error::Validation(_))));
    assert!(matches!(
        check_symbol(&SubUnitSymbol, 16, 0.0),
        Err(Error::Validation(_))
    ));
    assert!(check_symbol(&FrozenSymbol, 16, 0.0).is_ok());
    assert!(matches!(
        pseudo_operator(16, &[0, 1], &OddSymbol, 0.0),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        pseudo_operator(12, &[0, 1], &FrozenSymbol, 0.0),
        Err(Error::Validation(_))
    ));
    let full = pseudo(16, PseudoMask::Range { start: 0, len: 16 }, SymbolKind::Fractional);
    assert!(matches!(full.validate(), Err(Error::Validation(_))));
}

#[test]
fn dominance_constants() {
    for eps in [0.0, 0.1, 0.5, 1.0] {
        let d = dominance::<f64>(&FractionalSymbol, 64, eps);
        assert!(d.c0 <= 1.0 + 1e-14);
        assert!(d.c1 >= 1.0 - 1e-14);
        assert!(d.min_value >= 1.0);
    }
    let spec = pseudo(64, PseudoMask::LeftHalf, SymbolKind::Fractional);
    assert_eq!(
        symbol_dominance(&spec, 0.3).unwrap(),
        dominance::<f64>(&FractionalSymbol, 64, 0.3)
    );
}

#[test]
fn pseudo_eigenvalues_exceed_the_symbol_floor() {
    let spec = pseudo(64, PseudoMask::LeftHalf, SymbolKind::Fractional);
    for eps in [0.0, 0.3, 0.9] {
        let lam = ambient_eigenvalues(&spec, eps, 2);
        assert!(lam[0] > 1.0);
    }
}

#[test]
fn quadrature_ignores_frequencies_where_the_weight_vanishes() {
    let m = 32;
    let mask: Vec<usize> = (0..m).collect();
    let k = 3;
    let phi = DVector::from_fn(m, |j, _| (2.0 * PI * (k * j) as f64 / m as f64).cos());
    let zero_on_k = spectral_quadrature(m, &mask, &phi, |xi| if xi.abs() == k as i64 { 0.0 } else { 5.0 });
    assert!(zero_on_k.abs() < 1e-20);
    let parseval = spectral_quadrature(m, &mask, &phi, |_| 1.0);
    assert_relative_eq!(parseval, phi.norm_squared(), max_relative = 1e-12);
}

#[test]
fn defect_discrepancy_and_eigen_residuals_across_models() {
    for tag in ModelTag::ALL {
        let spec = ModelSpec::default_for(tag).with_grid(match tag {
            ModelTag::Robin => 101,
            ModelTag::Conformal => 9,
            ModelTag::DirichletHole => 32,
            ModelTag::PseudoSymbol => 64,
        });
        let model = PreparedModel::<f64>::new(&spec).unwrap();
        let sol = model.base_solution();
        for j in 0..sol.len() {
            assert!(sol.residuals()[j] <= 1e-10 * (1.0 + sol.eigenvalue(j)), "{tag} {j}");
        }
        for eps in spec.default_schedule().into_iter().take(3) {
            let mi = model.instance(eps).unwrap();
            assert!(mi.defect_discrepancy <= 1e-10, "{tag} {eps} {}", mi.defect_discrepancy);
            assert!(mi.instance.consistency_residual() <= 1e-10);
            let sol = model.perturbed_eigenpairs(&mi).unwrap();
            for j in 0..sol.len() {
                assert!(sol.residuals()[j] <= 1e-10 * (1.0 + sol.eigenvalue(j)));
            }
        }
    }
}

#[test]
fn spec_validation() {
    assert!(matches!(
        robin(RobinDomain::Interval, 5).validate(),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        conformal(4, 9, ConformalProfile::Constant { value: 1.0 }).validate(),
        Err(Error::Validation(_))
    ));
    assert!(matches!(
        robin(RobinDomain::Interval, 21).check_eps(-0.1),
        Err(Error::Validation(_))
    ));
    assert!(pseudo(32, PseudoMask::LeftHalf, SymbolKind::Fractional)
        .check_eps(-0.1)
        .is_ok());
    assert_eq!(ModelTag::parse("dirichlet-hole"), Some(ModelTag::DirichletHole));
    assert_eq!(ModelTag::PseudoSymbol.to_string(), "pseudo-symbol");
}

#[test]
fn single_precision_assembly() {
    let (form, _) = assemble::<f32>(&conformal(3, 9, ConformalProfile::Constant { value: 1.0 }), 0.1f32).unwrap();
    let (reference, _) = assemble::<f64>(&conformal(3, 9, ConformalProfile::Constant { value: 1.0 }), 0.1).unwrap();
    for ((i, j, v), (_, _, r)) in form.stiffness().triplets().zip(reference.stiffness().triplets()) {
        assert!((v as f64 - r).abs() <= 1e-6 * r.abs().max(1.0), "({i}, {j})");
    }
}
