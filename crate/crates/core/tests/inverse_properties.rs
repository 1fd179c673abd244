mod support;

use support::{random_instance, Lcg};
use vtomo::forward::{
    build_projection, gradient_field, longitudinal_data, project, solve_potential,
};
use vtomo::geometry::{build_disk_mesh_rings, enumerate_chords, place_electrodes, Point2, TriMesh};
use vtomo::inverse::{
    build_laplacian, build_weights, objective_terms, solve, transverse_profile, InverseProblem,
    SolveOptions,
};
use vtomo::linalg::CsrMatrix;
use vtomo::ray::{assemble_pair, Flavor, RayMatrix};
use vtomo::{DipoleSource, Field};

fn constant(n: usize, c: Point2<f64>) -> Field {
    let mut f = Field::zeros(n);
    for i in 0..n {
        f.set(i, c);
    }
    f
}

#[test]
fn laplacian_annihilates_constants_and_rows_sum_to_zero() {
    let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 9).unwrap();
    let lap = build_laplacian(&mesh).unwrap();
    let n = mesh.num_nodes();
    let de = lap.apply(&constant(n, Point2::new(2.5, -7.0))).unwrap();
    assert!(de.iter().all(|v| v.abs() <= 1e-12));
    for s in lap.csr().row_sums() {
        assert!(s.abs() <= 1e-12, "{s}");
    }
    // Direct summation: every row is 1 on the diagonal, -1/deg on the neighbours.
    let adj = mesh.node_neighbors();
    for i in (0..n).step_by(7) {
        let (cols, vals) = lap.csr().row(i);
        let total: f64 = vals.iter().sum();
        assert!(total.abs() <= 1e-12);
        assert_eq!(cols.len(), adj[i].len() + 1);
        assert_eq!(lap.csr().get(i, i), 1.0);
        assert_eq!(lap.csr().get(i + n, i), 0.0);
    }
}

#[test]
fn laplacian_of_unit_spike() {
    let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 3).unwrap();
    let n = mesh.num_nodes();
    let lap = build_laplacian(&mesh).unwrap();
    let k = 5;
    let mut f = Field::zeros(n);
    f.set(k, Point2::new(1.0, 0.0));
    let de = lap.apply(&f).unwrap();
    assert_eq!(de[k], 1.0);
    for &j in &mesh.node_neighbors()[k] {
        assert!(de[j] < 0.0);
    }
    assert!(de[n..].iter().all(|&v| v == 0.0));
}

#[test]
fn weights_normalization_and_floor() {
    // Columns with equal norms give unit weights.
    let t: Vec<(usize, usize, f64)> = (0..6)
        .map(|c| (c % 3, c, if c % 2 == 0 { 0.6 } else { -0.6 }))
        .collect();
    let r = RayMatrix::from_csr(
        CsrMatrix::from_triplets(3, 6, t).unwrap(),
        Flavor::Longitudinal,
    )
    .unwrap();
    let w = build_weights(&r);
    assert!(w.values().iter().all(|&v| (v - 1.0).abs() <= 1e-12));

    // An empty column gets the large floor-limited weight, still finite after normalization.
    let t: Vec<(usize, usize, f64)> = vec![(0, 0, 1.0), (1, 1, 2.0), (2, 3, 0.5)];
    let r = RayMatrix::from_csr(
        CsrMatrix::from_triplets(3, 4, t).unwrap(),
        Flavor::Longitudinal,
    )
    .unwrap();
    let w = build_weights(&r);
    let raw = [
        1.0 / (1.0 + 1e-6),
        1.0 / (2.0 + 1e-6),
        1e6,
        1.0 / (0.5 + 1e-6),
    ];
    let mean = raw.iter().sum::<f64>() / 4.0;
    for (got, want) in w.values().iter().zip(raw) {
        assert!(got.is_finite());
        assert!((got - want / mean).abs() <= 1e-12 * (want / mean));
    }
    let m = w.values().iter().sum::<f64>() / 4.0;
    assert!((m - 1.0).abs() <= 1e-12);
}

#[test]
fn disk_weights_are_reproducible_and_w_annihilates_constants() {
    let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 8).unwrap();
    let layout = place_electrodes(&mesh, 16).unwrap();
    let chords = enumerate_chords(&layout, &mesh).unwrap();
    let (rl, _) = assemble_pair(&mesh, &chords).unwrap();
    let w1 = build_weights(&rl);
    let w2 = build_weights(&assemble_pair(&mesh, &chords).unwrap().0);
    assert_eq!(w1, w2);
    let (lo, hi) = w1
        .values()
        .iter()
        .fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    assert!(lo.is_finite() && hi.is_finite() && lo >= 1e-6);
    let mean = w1.values().iter().sum::<f64>() / w1.values().len() as f64;
    assert!((mean - 1.0).abs() <= 1e-12);

    let wop = w1.operator(&build_laplacian(&mesh).unwrap()).unwrap();
    let c = constant(mesh.num_nodes(), Point2::new(-0.3, 4.0));
    let we = wop.mul_vec(c.values()).unwrap();
    assert!(we.iter().map(|v| v * v).sum::<f64>().sqrt() <= 1e-12);
}

#[test]
fn zero_data_gives_zero_field() {
    let inst = random_instance(3);
    let zeros = vec![0.0; inst.r_long.rows()];
    let (e, rep) = solve(
        &inst.r_long,
        &inst.r_trans,
        &inst.w,
        &zeros,
        0.06,
        0.016,
        SolveOptions::default(),
    )
    .unwrap();
    assert!(e.values().iter().all(|&v| v == 0.0));
    assert_eq!(rep.objective, 0.0);
}

#[test]
fn unregularized_consistent_system_is_fitted() {
    let inst = random_instance(5);
    let mut rng = Lcg::new(99);
    let truth: Vec<f64> = (0..inst.r_long.cols()).map(|_| rng.sym()).collect();
    let data = inst.r_long.csr().mul_vec(&truth).unwrap();
    let opts = SolveOptions {
        rel_tol: 1e-12,
        abs_tol: 1e-14,
        ..Default::default()
    };
    let (_, rep) = solve(&inst.r_long, &inst.r_trans, &inst.w, &data, 0.0, 0.0, opts).unwrap();
    println!(
        "fidelity {:.3e} after {} iterations",
        rep.fidelity, rep.iterations
    );
    assert!(rep.fidelity < 1e-10);
}

#[test]
fn unregularized_solution_scales_with_data() {
    let inst = random_instance(8);
    let prob = InverseProblem::new(
        &inst.r_long,
        &inst.r_trans,
        &inst.w,
        0.0,
        0.0,
        SolveOptions::default(),
    )
    .unwrap();
    let (e1, _) = prob.solve(&inst.data).unwrap();
    for c in [2.0, 0.25] {
        let scaled: Vec<f64> = inst.data.iter().map(|v| c * v).collect();
        let (ec, _) = prob.solve(&scaled).unwrap();
        for (a, b) in ec.values().iter().zip(e1.values()) {
            assert_eq!(*a, c * b);
        }
    }
}

#[test]
fn objective_terms_scale_termwise() {
    let inst = random_instance(11);
    let mut rng = Lcg::new(4);
    let e: Vec<f64> = (0..inst.r_long.cols()).map(|_| rng.sym()).collect();
    let (a, b) = (0.06, 0.016);
    let (tot, fid, t, l) =
        objective_terms(&inst.r_long, &inst.r_trans, &inst.w, &inst.data, a, b, &e).unwrap();
    assert!((tot - (fid + a * t + b * l)).abs() <= 1e-12 * tot);
    let c = 3.0;
    let data_c: Vec<f64> = inst.data.iter().map(|v| c * v).collect();
    let e_c: Vec<f64> = e.iter().map(|v| c * v).collect();
    let (_, fid_c, t_c, l_c) =
        objective_terms(&inst.r_long, &inst.r_trans, &inst.w, &data_c, a, b, &e_c).unwrap();
    assert!((fid_c - c * c * fid).abs() <= 1e-12 * fid_c);
    assert!((t_c - c * t).abs() <= 1e-12 * t_c);
    assert!((l_c - c * l).abs() <= 1e-12 * l_c);
}

#[test]
fn report_is_consistent_and_history_monotone() {
    for seed in [1, 6, 13] {
        let inst = random_instance(seed);
        let (e, rep) = solve(
            &inst.r_long,
            &inst.r_trans,
            &inst.w,
            &inst.data,
            0.06,
            0.016,
            SolveOptions::default(),
        )
        .unwrap();
        let sum = rep.fidelity + 0.06 * rep.l1_transverse + 0.016 * rep.l1_laplace;
        assert!((rep.objective - sum).abs() <= 1e-10 * rep.objective);
        for pair in rep.objective_history.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-12);
        }
        let last = *rep.objective_history.last().unwrap();
        assert!((last - rep.objective).abs() <= 1e-10 * rep.objective);
        let (again, rep2) = solve(
            &inst.r_long,
            &inst.r_trans,
            &inst.w,
            &inst.data,
            0.06,
            0.016,
            SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(e, again);
        assert_eq!(rep.iterations, rep2.iterations);
    }
}

#[test]
fn invalid_inputs_are_rejected() {
    let inst = random_instance(2);
    let short = vec![1.0; inst.r_long.rows() - 1];
    assert!(solve(
        &inst.r_long,
        &inst.r_trans,
        &inst.w,
        &short,
        0.1,
        0.1,
        SolveOptions::default()
    )
    .is_err());
    assert!(solve(
        &inst.r_long,
        &inst.r_trans,
        &inst.w,
        &inst.data,
        -0.1,
        0.1,
        SolveOptions::default()
    )
    .is_err());
    let opts = SolveOptions {
        max_iters: 3,
        ..Default::default()
    };
    let err = solve(
        &inst.r_long,
        &inst.r_trans,
        &inst.w,
        &inst.data,
        0.06,
        0.016,
        opts,
    )
    .unwrap_err();
    assert!(err.is_numerical());
    assert!(err.to_string().contains("residual"), "{err}");
}

#[test]
fn zero_field_has_zero_profile() {
    let mesh: TriMesh<f64> = build_disk_mesh_rings(1.0, 4).unwrap();
    let chords = enumerate_chords(&place_electrodes(&mesh, 8).unwrap(), &mesh).unwrap();
    let (_, rt) = assemble_pair(&mesh, &chords).unwrap();
    let p = transverse_profile(&rt, &Field::zeros(mesh.num_nodes())).unwrap();
    assert!(p.iter().all(|&v| v == 0.0));
}

#[test]
fn centred_dipole_profile_peaks_on_perpendicular_diameter() {
    let fine: TriMesh<f64> = build_disk_mesh_rings(1.0, 32).unwrap();
    let coarse: TriMesh<f64> = build_disk_mesh_rings(1.0, 16).unwrap();
    let n_el = 32;
    let lf = place_electrodes(&fine, n_el).unwrap();
    let cf = enumerate_chords(&lf, &fine).unwrap();
    let cc = enumerate_chords(&place_electrodes(&coarse, n_el).unwrap(), &coarse).unwrap();
    let src = DipoleSource::new(Point2::new(0.0, 0.0), Point2::new(1.0, 0.0)).unwrap();
    let u = solve_potential(&fine, &src).unwrap();
    let data = longitudinal_data(&u, &lf, &cf).unwrap();
    let (rl, rt) = assemble_pair(&coarse, &cc).unwrap();
    let w = build_weights(&rl)
        .operator(&build_laplacian(&coarse).unwrap())
        .unwrap();
    let (e, _) = solve(&rl, &rt, &w, &data, 0.06, 0.016, SolveOptions::default()).unwrap();
    let profile = transverse_profile(&rt, &e).unwrap();
    let peak = profile.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let argmax = (0..profile.len())
        .find(|&k| profile[k].abs() == peak)
        .unwrap();

    // Electrode 0 sits at angle 0; the diameter perpendicular to q joins electrodes n/4 and 3n/4.
    let perp = cc
        .iter()
        .position(|c| c.endpoints == (n_el / 4, 3 * n_el / 4))
        .unwrap();
    let par = cc
        .iter()
        .position(|c| c.endpoints == (0, n_el / 2))
        .unwrap();
    println!(
        "peak {peak:.4e} at chord {argmax}; perpendicular {:.4e}, parallel {:.4e}",
        profile[perp], profile[par]
    );
    assert_eq!(argmax, perp);
    assert!(profile[par].abs() <= 1e-3 * peak);

    // The projected true field shows the same pattern.
    let truth = project(
        &build_projection(&fine, &coarse).unwrap(),
        &fine,
        &gradient_field(&fine, &u).unwrap(),
    )
    .unwrap();
    let tp = transverse_profile(&rt, &truth).unwrap();
    assert!(tp[par].abs() <= 1e-3 * tp[perp].abs());
}
