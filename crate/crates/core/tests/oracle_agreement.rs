use nalgebra::DMatrix;
use sijc_core::evolution::{self, FdSettings};
use sijc_core::inversion::{self, Method, SeriesOptions};
use sijc_core::oracle::{self, fd_first, fd_second, HeisenbergOracle, Stencil};
use sijc_core::rep::{self, Layout, Phase};
use sijc_core::spectrum::{self, Branch};
use sijc_core::{Coupling, LadderSpectrum, ShapeInvariantModel, C64};

fn catalog() -> Vec<(&'static str, LadderSpectrum)> {
    let unit = Coupling::resonant(1.0).unwrap();
    vec![
        ("harmonic", ShapeInvariantModel::harmonic(1.0, unit).unwrap().build_ladder(12).unwrap()),
        ("morse", ShapeInvariantModel::morse_class(1.0, 0.1, unit).unwrap().build_ladder(6).unwrap()),
        ("morse_long", ShapeInvariantModel::morse_class(1.0, 0.02, unit).unwrap().build_ladder(20).unwrap()),
        ("scaling", ShapeInvariantModel::scaling_class(1.0, 0.5, unit).unwrap().build_ladder(12).unwrap()),
    ]
}

#[test]
fn analytic_spectrum_matches_eigensolver() {
    for (name, ladder) in catalog() {
        for (om, det) in [(1.0, 0.0), (1.0, 3f64.sqrt()), (0.7, 0.3), (0.4, -1.2)] {
            let c = Coupling::new(om, det, 1.0).unwrap();
            let h = rep::build_hamiltonian(&ladder, &c).unwrap().total;
            let eig = oracle::diagonalize(&h).unwrap();
            let table = spectrum::analytic_spectrum(&ladder, &c).unwrap();
            let err = table.pairing_error(&eig.eigenvalues).unwrap();
            assert!(err < 1e-10, "{name} Ω={om} Δ={det}: {err:e}");
            assert!(eig.reconstruction_residual < 1e-11 * h.max_abs());
            assert!(eig.orthonormality_residual() < 1e-12);
        }
    }
}

#[test]
fn assembled_eigenvectors_solve_the_hamiltonian() {
    for (name, ladder) in catalog() {
        let c = Coupling::new(0.7, 0.3, 1.0).unwrap();
        let h = rep::build_hamiltonian(&ladder, &c).unwrap().total;
        let layout = Layout::of(&ladder);
        let table = spectrum::analytic_spectrum(&ladder, &c).unwrap();
        for m in 0..table.rows.len() {
            for b in [Branch::Plus, Branch::Minus] {
                let v = table.eigenvector(layout, m, b);
                let r = h.apply(&v) - &v * C64::new(table.rows[m].energy(b), 0.0);
                assert!(r.norm() < 1e-10, "{name} m={m} {b:?}");
            }
        }
        let s = table.singlet_vector(layout);
        let r = h.apply(&s) - &s * C64::new(table.singlet_energy, 0.0);
        assert!(r.norm() < 1e-15);
    }
}

#[test]
fn morse_row_one_matches_oracle_block() {
    let unit = Coupling::resonant(1.0).unwrap();
    let ladder = ShapeInvariantModel::morse_class(1.0, 0.1, unit).unwrap().build_ladder(6).unwrap();
    let c = Coupling::new(0.7, 0.3, 1.0).unwrap();
    let row = &spectrum::analytic_spectrum(&ladder, &c).unwrap().rows[1];
    // E_2 = 0.9 + 0.7; block [[E + ħΔ, α√E], [α√E, E − ħΔ]]
    let e: f64 = 1.6;
    let a = (0.7f64).sqrt() * e.sqrt();
    let m = DMatrix::from_row_slice(2, 2, &[C64::new(e + 0.3, 0.0), C64::new(a, 0.0), C64::new(a, 0.0), C64::new(e - 0.3, 0.0)]);
    let eig = oracle::diagonalize_matrix(&m).unwrap();
    assert!((row.e_minus - eig.eigenvalues[0]).abs() < 1e-10);
    assert!((row.e_plus - eig.eigenvalues[1]).abs() < 1e-10);
}

#[test]
fn standard_jc_equals_general_path() {
    for omega_o in [1.0, 0.5] {
        for om in [1.0, 2.0] {
            let (jc, _) = spectrum::standard_jc_spectrum(1.0, omega_o, om, 1.0, 18).unwrap();
            let c = Coupling::new(om, 1.0 - omega_o, 1.0).unwrap();
            let ladder = ShapeInvariantModel::harmonic(1.0, c).unwrap().build_ladder(20).unwrap();
            let gen = spectrum::analytic_spectrum(&ladder, &c).unwrap();
            for (a, b) in jc.rows.iter().zip(&gen.rows) {
                for (x, y) in [
                    (a.e_plus, b.e_plus),
                    (a.e_minus, b.e_minus),
                    (a.c_up_plus, b.c_up_plus),
                    (a.c_low_plus, b.c_low_plus),
                    (a.c_up_minus, b.c_up_minus),
                    (a.c_low_minus, b.c_low_minus),
                ] {
                    assert!((x - y).abs() < 1e-12);
                }
            }
        }
    }
}

#[test]
fn resonant_propagator_tracks_exponential_to_t_ten() {
    for (name, ladder) in catalog() {
        let c = Coupling::new(0.8, 0.0, 1.0).unwrap();
        let parts = rep::build_hamiltonian(&ladder, &c).unwrap();
        let exact = oracle::SpectralPropagator::new(&parts.interaction, 1.0).unwrap();
        for k in 0..=100 {
            let t = k as f64 * 0.1;
            let u = evolution::paper_propagator(&ladder, &c, t, Phase::MinusI).unwrap();
            assert!(u.max_abs_diff(&exact.at(t)) < 1e-9, "{name} t={t}");
        }
    }
}

#[test]
fn detuned_propagator_diagnostics() {
    let c = Coupling::new(0.7, 0.3, 1.0).unwrap();
    let unit = Coupling::resonant(1.0).unwrap();
    let grid: Vec<f64> = (1..=10).map(|k| 0.5 * k as f64).collect();
    for ladder in [
        ShapeInvariantModel::harmonic(1.0, unit).unwrap().build_ladder(5).unwrap(),
        ShapeInvariantModel::scaling_class(1.0, 0.5, unit).unwrap().build_ladder(5).unwrap(),
    ] {
        for phase in [Phase::PlusI, Phase::MinusI] {
            let s = evolution::propagator_diagnostics(&ladder, &c, &grid, phase, FdSettings::default()).unwrap();
            for x in &s {
                assert!(x.residual_second_order < 1e-6);
                assert!(x.residual_unitarity < 1e-10);
                assert!(x.residual_first_order > 1e-3);
                assert!(x.ground.deviation >= 0.0);
            }
        }
        let conv = evolution::second_order_convergence(&ladder, &c, &grid, Phase::MinusI, 1e-3).unwrap();
        assert!(conv.ratio > 3.5, "{conv:?}");
    }
}

#[test]
fn blocks_satisfy_unitarity_conditions_at_all_times() {
    let unit = Coupling::resonant(1.0).unwrap();
    let ladder = ShapeInvariantModel::scaling_class(1.0, 0.5, unit).unwrap().build_ladder(8).unwrap();
    let c = Coupling::new(1.3, -0.6, 1.0).unwrap();
    let layout = Layout::of(&ladder);
    for t in [0.0, 0.37, 2.9, 8.1] {
        for phase in [Phase::PlusI, Phase::MinusI] {
            let u = evolution::paper_propagator(&ladder, &c, t, phase).unwrap();
            let (a, b, cc, d) = (u.uu(), u.ul(), u.lu(), u.ll());
            let eye_u = DMatrix::<C64>::identity(layout.upper_dim(), layout.upper_dim());
            let mut eye_l = DMatrix::<C64>::identity(layout.lower_dim(), layout.lower_dim());
            // the ground mode is cos(Δt) on its own; drop it from the lower checks
            eye_l[(0, 0)] = C64::new((c.detuning * t).cos().powi(2), 0.0);
            let conds = [
                &a * a.adjoint() + &b * b.adjoint() - &eye_u,
                a.adjoint() * &a + cc.adjoint() * &cc - &eye_u,
                &cc * cc.adjoint() + &d * d.adjoint() - &eye_l,
                b.adjoint() * &b + d.adjoint() * &d - &eye_l,
                &a * cc.adjoint() + &b * d.adjoint(),
                a.adjoint() * &b + cc.adjoint() * &d,
            ];
            for m in conds {
                let r = m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()));
                assert!(r < 1e-10, "t={t} {phase:?}: {r:e}");
            }
        }
    }
}

#[test]
fn particular_solution_initial_conditions_and_ode() {
    let c = Coupling::new(1.0, 0.2, 1.0).unwrap();
    let ladder = ShapeInvariantModel::harmonic(1.0, c).unwrap().build_ladder(10).unwrap();
    let opts = SeriesOptions {
        order: 30,
        ..Default::default()
    };
    let sp = |t: f64| inversion::particular_solution(&ladder, &c, t, opts).map(|p| p.operator().into_matrix());
    let p0 = sp(0.0).unwrap();
    assert!(p0.iter().all(|z| z.norm() < 1e-14));
    let d0: DMatrix<C64> = fd_first(sp, 0.0, 1e-3, Stencil::FivePoint).unwrap();
    assert!(d0.iter().fold(0.0f64, |a, z| a.max(z.norm())) < 1e-9);

    let nu = inversion::RabiFrequencies::new(&ladder, &c).full();
    for k in 1..=10 {
        let t = 0.1 * k as f64;
        let d2: DMatrix<C64> = fd_second(sp, t, 1e-2, Stencil::FivePoint).unwrap();
        let p = sp(t).unwrap();
        let f = inversion::f_matrix(&ladder, &c, t, Phase::MinusI).unwrap().direct;
        let r = DMatrix::from_fn(p.nrows(), p.ncols(), |i, j| d2[(i, j)] + p[(i, j)] * (nu[i] * nu[i]) - f.matrix()[(i, j)]);
        assert!(r.iter().fold(0.0f64, |a, z| a.max(z.norm())) < 1e-5, "t={t}");
    }
}

#[test]
fn resonant_inversion_matches_heisenberg_oracle() {
    let unit = Coupling::resonant(1.0).unwrap();
    for ladder in [
        ShapeInvariantModel::harmonic(1.0, unit).unwrap().build_ladder(12).unwrap(),
        ShapeInvariantModel::morse_class(1.0, 0.1, unit).unwrap().build_ladder(6).unwrap(),
    ] {
        let c = Coupling::new(0.9, 0.0, 1.0).unwrap();
        let o = HeisenbergOracle::new(&ladder, &c).unwrap();
        for k in 0..=50 {
            let t = 0.2 * k as f64;
            let s = inversion::sigma3(&ladder, &c, t, None, SeriesOptions::default()).unwrap();
            let exact = o.sigma3(t);
            assert!(inversion::paired_distance(&s.operator, &exact) < 1e-8);
            let eig = oracle::diagonalize(&exact).unwrap();
            for l in eig.eigenvalues {
                assert!((l.abs() - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn detuned_expectation_paper_against_oracle_is_data() {
    let c = Coupling::new(1.0, 0.3, 1.0).unwrap();
    let ladder = ShapeInvariantModel::harmonic(1.0, c).unwrap().build_ladder(6).unwrap();
    let psi = inversion::basis_state(Layout::of(&ladder), false, 2).unwrap();
    let grid = [0.0, 0.5, 1.0];
    let p = inversion::inversion_expectation(&psi, &ladder, &c, &grid, Method::Paper, SeriesOptions::default()).unwrap();
    let o = inversion::inversion_expectation(&psi, &ladder, &c, &grid, Method::Oracle, SeriesOptions::default()).unwrap();
    assert_eq!(p[0].w, -1.0);
    assert!((o[0].w + 1.0).abs() < 1e-14);
    for s in p.iter().chain(&o) {
        assert!(s.imag_leakage < 1e-12);
        assert!(s.w.is_finite());
    }
}
