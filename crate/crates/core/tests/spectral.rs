use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spectral_shift::spectral::{
    resolvent_gap_eigenvalue_bound, restrict_to_subspace, solve_generalized_eigenpairs,
    solve_generalized_eigenpairs_with, solve_on_subspace, spectral_distance_bound, CsrMatrix, DiscreteSpace,
    EigenMethod, EigenOptions, FormSystem, SubspaceSpec,
};
use spectral_shift::{Error, FormSystemF32};

/// Dirichlet 5-point Laplacian on an `m × m` interior grid, unit mass.
fn grid_laplacian(m: usize) -> FormSystem<f64> {
    let n = m * m;
    let mut t = Vec::new();
    for idx in 0..n {
        let (i, j) = (idx % m, idx / m);
        t.push((idx, idx, 4.0));
        if i + 1 < m {
            t.push((idx, idx + 1, -1.0));
            t.push((idx + 1, idx, -1.0));
        }
        if j + 1 < m {
            t.push((idx, idx + m, -1.0));
            t.push((idx + m, idx, -1.0));
        }
    }
    FormSystem::new(
        DiscreteSpace::unit(n).unwrap(),
        CsrMatrix::from_triplets(n, n, &t).unwrap(),
    )
    .unwrap()
}

#[test]
fn constraining_a_hole_removes_rows_and_raises_the_ground_state() {
    let form = grid_laplacian(10);
    let hole = vec![44, 45, 54, 55, 34];
    let restricted = restrict_to_subspace(&form, &SubspaceSpec::ZeroOnIndexSet(hole)).unwrap();
    assert_eq!(restricted.dim(), 95);
    assert_eq!(restricted.stiffness().nrows(), 95);
    let before = solve_generalized_eigenpairs(&form, 1).unwrap().eigenvalue(0);
    let after = solve_generalized_eigenpairs(&restricted, 1).unwrap().eigenvalue(0);
    assert!(after > before, "{after} <= {before}");
}

#[test]
fn neumann_second_eigenvalue_of_shifted_laplacian() {
    // -u'' + u on [0, 1], Neumann ends, lumped mass
    let n = 201;
    let h = 1.0 / (n - 1) as f64;
    let mut t = Vec::new();
    let mut mass = DVector::from_element(n, h);
    mass[0] = h / 2.0;
    mass[n - 1] = h / 2.0;
    for i in 0..n {
        t.push((i, i, mass[i]));
        if i + 1 < n {
            t.push((i, i, 1.0 / h));
            t.push((i + 1, i + 1, 1.0 / h));
            t.push((i, i + 1, -1.0 / h));
            t.push((i + 1, i, -1.0 / h));
        }
    }
    let form = FormSystem::new(
        DiscreteSpace::new(mass).unwrap(),
        CsrMatrix::from_triplets(n, n, &t).unwrap(),
    )
    .unwrap();
    let sol = solve_generalized_eigenpairs(&form, 3).unwrap();
    assert_relative_eq!(sol.eigenvalue(0), 1.0, epsilon = 1e-10);
    let exact = 1.0 + std::f64::consts::PI.powi(2);
    // second-order accurate: error below π⁴h²/12 with margin
    assert!((sol.eigenvalue(1) - exact).abs() < 1e-3, "{}", sol.eigenvalue(1));
    assert!((sol.eigenvalue(1) - exact).abs() > 0.0);
}

#[test]
fn similarity_transform_recovers_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 12;
    let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let q = g.qr().q();
    let d: Vec<f64> = (0..n).map(|i| 0.5 + i as f64 * 0.75).collect();
    let a = &q * DMatrix::from_diagonal(&DVector::from_vec(d.clone())) * q.transpose();
    let a = (&a + a.transpose()) * 0.5;
    let form = FormSystem::new(DiscreteSpace::unit(n).unwrap(), CsrMatrix::from_dense(&a)).unwrap();
    let sol = solve_generalized_eigenpairs(&form, n).unwrap();
    for (got, want) in sol.eigenvalues().iter().zip(&d) {
        assert_relative_eq!(*got, *want, epsilon = 1e-12);
    }
}

#[test]
fn eigenvectors_are_mass_orthonormal_and_sign_fixed() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let form = grid_laplacian(7);
    let mass = DVector::from_fn(form.dim(), |_, _| rng.random_range(0.5..2.0));
    let form = FormSystem::new(DiscreteSpace::new(mass).unwrap(), form.stiffness().clone()).unwrap();
    let sol = solve_generalized_eigenpairs(&form, 6).unwrap();
    for i in 0..6 {
        let v = sol.eigenvector(i);
        let imax = v.iamax();
        assert!(v[imax] > 0.0);
        for j in 0..6 {
            let expected = if i == j { 1.0 } else { 0.0 };
            assert!((form.inner(&v, &sol.eigenvector(j)) - expected).abs() < 1e-12);
        }
        assert!(sol.residuals()[i] <= sol.residual_tol() * (1.0 + sol.eigenvalue(i)));
    }
    assert!(sol.eigenvalues().windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn iterative_path_matches_dense_reference() {
    let form = grid_laplacian(30);
    let dense = EigenOptions {
        method: EigenMethod::Dense,
        ..EigenOptions::default()
    };
    let iterative = EigenOptions {
        method: EigenMethod::Iterative,
        ..EigenOptions::default()
    };
    let a = solve_generalized_eigenpairs_with(&form, 4, &dense).unwrap();
    let b = solve_generalized_eigenpairs_with(&form, 4, &iterative).unwrap();
    for i in 0..4 {
        assert_relative_eq!(a.eigenvalue(i), b.eigenvalue(i), max_relative = 1e-8);
    }
    // the ground state is simple; the vectors agree after the sign convention
    let diff = (a.eigenvector(0) - b.eigenvector(0)).amax();
    assert!(diff < 1e-8, "{diff}");
}

#[test]
fn iterative_path_with_constraints() {
    let form = grid_laplacian(24);
    let sub = SubspaceSpec::ZeroOnIndexSet(vec![0, 100, 287, 300]);
    let dense = EigenOptions {
        method: EigenMethod::Dense,
        ..EigenOptions::default()
    };
    let iterative = EigenOptions {
        method: EigenMethod::Iterative,
        ..EigenOptions::default()
    };
    let a = solve_on_subspace(&form, &sub, 3, &dense).unwrap();
    let b = solve_on_subspace(&form, &sub, 3, &iterative).unwrap();
    for i in 0..3 {
        assert_relative_eq!(a.eigenvalue(i), b.eigenvalue(i), max_relative = 1e-8);
    }
    assert_eq!(a.eigenvector(0)[100], 0.0);
    assert_eq!(b.eigenvector(0)[287], 0.0);
}

#[test]
fn asymmetric_or_indefinite_input_is_rejected() {
    let space = DiscreteSpace::unit(2).unwrap();
    let asym = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[1.0, 0.3, 0.0, 1.0]));
    assert!(matches!(
        FormSystem::new(space.clone(), asym),
        Err(Error::Validation(_))
    ));
    let indefinite = CsrMatrix::from_dense(&DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]));
    let form = FormSystem::new(space, indefinite).unwrap();
    assert!(matches!(
        solve_generalized_eigenpairs(&form, 1),
        Err(Error::Validation(_))
    ));
}

#[test]
fn distance_bound_dominates_exact_distance_on_random_spd() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 6;
    let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
    let a = b.transpose() * &b + DMatrix::identity(n, n) * 0.1;
    let form = FormSystem::new(DiscreteSpace::unit(n).unwrap(), CsrMatrix::from_dense(&a)).unwrap();
    let sol = solve_generalized_eigenpairs(&form, n).unwrap();
    for _ in 0..50 {
        let w = DVector::from_fn(n, |_, _| rng.random_range(-1.0..1.0));
        let mu: f64 = rng.random_range(0.0..12.0);
        let exact = sol
            .eigenvalues()
            .iter()
            .map(|l| (1.0 / l - mu).abs())
            .fold(f64::INFINITY, f64::min);
        let bound = spectral_distance_bound(&form, &w, mu).unwrap();
        assert!(bound >= exact * (1.0 - 1e-12), "{bound} < {exact}");
    }
}

#[test]
fn distance_bound_mixture_example() {
    let form = FormSystem::new(
        DiscreteSpace::unit(2).unwrap(),
        CsrMatrix::from_diagonal(&DVector::from_vec(vec![1.0, 2.0])),
    )
    .unwrap();
    let w = DVector::from_vec(vec![1.0, 1.0]);
    // E(Rw - μw) = 0.1875 and E(w) = 3
    let bound = spectral_distance_bound(&form, &w, 0.75).unwrap();
    assert_relative_eq!(bound, (0.1875f64 / 3.0).sqrt(), epsilon = 1e-15);
    assert_relative_eq!(bound, 0.25, epsilon = 1e-15);
}

#[test]
fn resolvent_gap_on_random_pair() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 8;
    let mass = DVector::from_fn(n, |_, _| rng.random_range(0.5..2.0));
    let mk = |rng: &mut ChaCha8Rng| {
        let b = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0..1.0));
        let a = b.transpose() * &b + DMatrix::identity(n, n) * 0.2;
        FormSystem::new(DiscreteSpace::new(mass.clone()).unwrap(), CsrMatrix::from_dense(&a)).unwrap()
    };
    let (f1, f2) = (mk(&mut rng), mk(&mut rng));
    let r = resolvent_gap_eigenvalue_bound(&f1, &f2).unwrap();
    assert!(r.pass);
    assert_eq!(r.gaps.len(), n);
    assert!(r.gaps.iter().all(|g| *g <= r.norm_bound * (1.0 + 1e-10)));
}

#[test]
fn coordinate_text_round_trip_of_assembled_operator() {
    let form = grid_laplacian(5);
    let text = form.stiffness().to_coordinate_text();
    let back = CsrMatrix::from_coordinate_text(&text).unwrap();
    assert_eq!(&back, form.stiffness());
}

#[test]
fn single_precision_solve() {
    let a = CsrMatrix::<f32>::from_diagonal(&DVector::from_vec(vec![3.0, 1.0, 2.0]));
    let form: FormSystemF32 = FormSystem::new(DiscreteSpace::unit(3).unwrap(), a).unwrap();
    let sol = solve_generalized_eigenpairs(&form, 3).unwrap();
    assert_eq!(sol.eigenvalues(), &[1.0f32, 2.0, 3.0]);
}
