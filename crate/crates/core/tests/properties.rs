use proptest::prelude::*;
use sijc_core::inversion::{self, SeriesKind, SeriesOptions};
use sijc_core::oracle::{self, quadrature, Trig, TrigFactor};
use sijc_core::rep::{self, Layout, Phase};
use sijc_core::spectrum::{self, Branch};
use sijc_core::{evolution, Coupling, LadderSpectrum, ShapeInvariantModel};

fn ladder_strategy() -> impl Strategy<Value = LadderSpectrum> {
    let unit = Coupling::resonant(1.0).unwrap();
    prop_oneof![
        (0.2f64..3.0, 3usize..12).prop_map(move |(w, n)| ShapeInvariantModel::harmonic(w, unit)
            .unwrap()
            .build_ladder(n)
            .unwrap()),
        (0.5f64..2.0, 0.0f64..0.05, 3usize..8).prop_map(move |(c1, c2, n)| {
            ShapeInvariantModel::morse_class(c1, c2, unit).unwrap().build_ladder(n).unwrap()
        }),
        (0.2f64..2.0, 0.2f64..0.95, 3usize..12).prop_map(move |(r, q, n)| {
            ShapeInvariantModel::scaling_class(r, q, unit).unwrap().build_ladder(n).unwrap()
        }),
        prop::collection::vec(0.05f64..3.0, 2..10).prop_map(|r| LadderSpectrum::from_remainders(&r).unwrap()),
    ]
}

fn coupling_strategy() -> impl Strategy<Value = Coupling> {
    (0.1f64..3.0, -2.0f64..2.0, 0.5f64..2.0).prop_map(|(o, d, h)| Coupling::new(o, d, h).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn shift_factorizes_partner_hamiltonians(ladder in ladder_strategy()) {
        let c = Coupling::resonant(1.0).unwrap();
        let r = rep::identity_suite(&ladder, &c).unwrap();
        let scale = ladder.energies().last().unwrap().max(1.0);
        prop_assert!(r.get("shift_factorization_lower").unwrap() < 1e-13 * scale);
        prop_assert!(r.get("shift_factorization_upper").unwrap() < 1e-13 * scale);
        prop_assert!(r.get("s_squared_block_diagonal").unwrap() < 1e-13 * scale);
        prop_assert_eq!(r.get("ground_annihilation").unwrap(), 0.0);
    }

    #[test]
    fn hamiltonian_is_hermitian_with_singlet(ladder in ladder_strategy(), c in coupling_strategy()) {
        let parts = rep::build_hamiltonian(&ladder, &c).unwrap();
        prop_assert!(parts.total.hermitian_residual() < 1e-13 * parts.total.max_abs().max(1.0));
        prop_assert_eq!(parts.total.ground_coupling(), 0.0);
        prop_assert_eq!(parts.total.ground_entry().re, -c.hbar * c.detuning);
    }

    #[test]
    fn identity_suite_holds(ladder in ladder_strategy(), c in coupling_strategy()) {
        let r = rep::identity_suite(&ladder, &c).unwrap();
        let scale = ladder.energies().last().unwrap().max(1.0).powi(2) * (1.0 + c.rabi + c.detuning.abs()).powi(2);
        for check in r.mandatory() {
            prop_assert!(check.residual < 1e-12 * scale, "{} = {:e}", check.name, check.residual);
        }
    }

    #[test]
    fn spectrum_rows_are_consistent(ladder in ladder_strategy(), c in coupling_strategy()) {
        let t = spectrum::analytic_spectrum(&ladder, &c).unwrap();
        prop_assert_eq!(t.singlet_energy, -c.hbar * c.detuning);
        let b = c.beta();
        for r in &t.rows {
            let e = r.level_energy;
            prop_assert!(r.normalization_error(Branch::Plus) < 1e-12);
            prop_assert!(r.normalization_error(Branch::Minus) < 1e-12);
            prop_assert!(r.cross_overlap() < 1e-12);
            let q = (e + b * b).sqrt();
            prop_assert!((r.c_low_plus * e.sqrt() - (q - b) * r.c_up_plus).abs() < 1e-12 * (1.0 + q));
            prop_assert!((r.c_low_minus * e.sqrt() - (q + b) * r.c_up_minus).abs() < 1e-12 * (1.0 + q));
            let split = 2.0 * (c.hbar * c.rabi * e + (c.hbar * c.detuning).powi(2)).sqrt();
            prop_assert!((r.e_plus - r.e_minus - split).abs() < 1e-12 * (1.0 + split));
            prop_assert!((r.lambda_plus - c.alpha() * q).abs() < 1e-12 * (1.0 + q));
        }
    }

    #[test]
    fn spectrum_matches_oracle(ladder in ladder_strategy(), c in coupling_strategy()) {
        let h = rep::build_hamiltonian(&ladder, &c).unwrap().total;
        let eig = oracle::diagonalize(&h).unwrap();
        let table = spectrum::analytic_spectrum(&ladder, &c).unwrap();
        let scale = h.max_abs().max(1.0);
        prop_assert!(table.pairing_error(&eig.eigenvalues).unwrap() < 1e-10 * scale);
    }

    #[test]
    fn paired_unitarity_for_any_detuning(ladder in ladder_strategy(), c in coupling_strategy(), t in 0.0f64..10.0) {
        let layout = Layout::of(&ladder);
        for phase in [Phase::PlusI, Phase::MinusI] {
            let u = evolution::paper_propagator(&ladder, &c, t, phase).unwrap();
            let g = u.adjoint().mul(&u).paired();
            let id = nalgebra::DMatrix::identity(layout.dim() - 1, layout.dim() - 1);
            let r = (g - id).iter().fold(0.0f64, |a, z| a.max(z.norm()));
            prop_assert!(r < 1e-10);
        }
    }

    #[test]
    fn f_matrix_dual_paths(ladder in ladder_strategy(), c in coupling_strategy(), t in 0.0f64..5.0) {
        let f = inversion::f_matrix(&ladder, &c, t, Phase::MinusI).unwrap();
        let scale = c.gamma().abs() * ladder.energies().last().unwrap().sqrt();
        prop_assert!(f.discrepancy < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn product_expansions_hold(ladder in ladder_strategy(), c in coupling_strategy(), t in 0.0f64..5.0) {
        let r = inversion::product_expansion_residual(&ladder, &c, t, Phase::PlusI).unwrap();
        let scale = c.gamma().abs() * ladder.energies().last().unwrap().sqrt();
        prop_assert!(r < 1e-10 * scale.max(1.0));
    }

    #[test]
    fn series_matches_quadrature(x in -5.0f64..5.0, w in -5.0f64..5.0, t in 0.01f64..2.0, k in 0usize..4) {
        let kind = SeriesKind::ALL[k];
        let s = inversion::fxy_scalar(kind, t, x, w, 40).unwrap();
        let (a, b) = kind.factors();
        let q = quadrature(TrigFactor::new(a, x), TrigFactor::new(b, w), t).unwrap();
        prop_assert!((s.value - q).abs() < 1e-8);
    }

    #[test]
    fn k_functions_match_quadrature(p in -3.0f64..3.0, q in -3.0f64..3.0, r in 0.1f64..4.0, t in 0.0f64..3.0) {
        let ks = quadrature(TrigFactor::retarded(Trig::Sin, r, t), TrigFactor::new(Trig::Sin, p + q), t).unwrap();
        let kc = quadrature(TrigFactor::retarded(Trig::Sin, r, t), TrigFactor::new(Trig::Cos, p + q), t).unwrap();
        prop_assert!((inversion::k_s(t, p, q, r) - ks).abs() < 1e-9);
        prop_assert!((inversion::k_c(t, p, q, r) - kc).abs() < 1e-9);
    }

    #[test]
    fn particular_solution_starts_at_rest(ladder in ladder_strategy(), c in coupling_strategy()) {
        let p = inversion::particular_solution(&ladder, &c, 0.0, SeriesOptions::default()).unwrap();
        prop_assert!(p.blocks.max_abs() < 1e-14);
    }

    #[test]
    fn heisenberg_sigma3_is_an_involution(ladder in ladder_strategy(), c in coupling_strategy(), t in 0.0f64..10.0) {
        let s = oracle::heisenberg_sigma3(&ladder, &c, t).unwrap();
        let id = rep::TwoChannelOperator::identity(s.layout());
        prop_assert!(s.mul(&s).max_abs_diff(&id) < 1e-10);
        prop_assert!((s.matrix().trace().re + 1.0).abs() < 1e-10);
        prop_assert!(s.hermitian_residual() < 1e-10);
    }
}
