use eitpt::atom::{bloch_rhs, steady_state, AtomParams, DensityMatrix, Detunings, LocalDrive};
use eitpt::potential::{
    design, nondimensionalize, phase_gauge, pt_residual, pt_symmetrize, redimensionalize, FieldProfiles, Harmonics,
    PotentialCoefficients, PotentialSpec, XiGrid,
};
use eitpt::presets::Preset;
use eitpt::propagate::{split_step, BeamState};
use eitpt::spectrum::{eigenvalues, bloch_matrix, FourierSeries};
use eitpt::C64;
use proptest::prelude::*;

fn c64() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(a, b)| C64::new(a, b))
}

fn atom() -> impl Strategy<Value = AtomParams> {
    (1e6..5e7f64, 1e6..5e7f64, 1e6..5e7f64, 0.0..2e6f64, 0.0..1e4f64).prop_map(|(g13, g23, g24, g31, dph)| {
        let mut a = Preset::design().atom;
        a.gamma13 = g13;
        a.gamma23 = g23;
        a.gamma24 = g24;
        a.gamma31 = g31;
        a.dephasing[0][1] = dph;
        a.dephasing[1][0] = dph;
        a
    })
}

fn drive() -> impl Strategy<Value = LocalDrive> {
    (
        (c64(), c64(), c64()),
        (-1e8..1e8f64, -1e8..1e8f64, -1e8..1e8f64, -1e8..1e8f64),
        0.0..1e5f64,
    )
        .prop_map(|((p, c, a), (d1, d2, d3, d4), es)| {
            LocalDrive::control_only(c * 3e8, Detunings([d1, d2, d3, d4]))
                .with_probe(p * 1e7)
                .with_assisted(a * 1e7)
                .with_stark(es)
        })
}

fn hermitian() -> impl Strategy<Value = DensityMatrix> {
    proptest::collection::vec(c64(), 16).prop_map(|v| {
        let mut m = DensityMatrix::zeros();
        for j in 0..4 {
            for l in 0..4 {
                m.0[j][l] = if j == l { C64::new(v[4 * j + l].re, 0.0) } else if j > l { v[4 * j + l] } else { v[4 * l + j].conj() };
            }
        }
        m
    })
}

fn coefficients() -> impl Strategy<Value = PotentialCoefficients> {
    (c64(), c64(), c64()).prop_map(|(g12, g13, k0)| PotentialCoefficients { g12, g13, k0: k0 * 10.0 })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn bloch_rhs_is_traceless_and_hermitian(sigma in hermitian(), d in drive(), a in atom()) {
        let r = bloch_rhs(&sigma, &d, &a);
        let scale = r.max_abs().max(1.0);
        prop_assert!(r.trace().norm() <= 1e-12 * scale);
        prop_assert!(r.hermiticity_error() <= 1e-12 * scale);
    }

    #[test]
    fn steady_state_is_a_density_matrix(d in drive(), a in atom()) {
        let rho = steady_state(&d, &a).unwrap();
        prop_assert!((rho.trace() - 1.0).norm() < 1e-10);
        prop_assert!(rho.hermiticity_error() < 1e-10);
        for p in rho.eigenvalues() {
            prop_assert!(p > -1e-9 && p < 1.0 + 1e-9);
        }
        prop_assert!(bloch_rhs(&rho, &d, &a).max_abs() <= 1e-6 * (3e8 + 1e8));
    }

    #[test]
    fn pt_part_has_zero_residual(c in coefficients()) {
        let g = XiGrid::new(128, 2).unwrap();
        let v = PotentialSpec::from_coefficients("v", c, g);
        let direct = g.points().iter().map(|&x| (c.value(x) - c.value(-x).conj()).norm()).fold(0.0, f64::max);
        prop_assert!((pt_residual(&v).unwrap() - direct).abs() <= 1e-12 * (1.0 + direct));
        let s = pt_symmetrize(&v).unwrap();
        prop_assert!(pt_residual(&s).unwrap() <= 1e-14 * v.max_abs());
        let twice = pt_symmetrize(&s).unwrap();
        prop_assert_eq!(&twice.values, &s.values);
    }

    #[test]
    fn gauge_is_idempotent(c in coefficients()) {
        let g = XiGrid::new(64, 1).unwrap();
        let v = PotentialSpec::from_coefficients("v", c, g);
        let once = phase_gauge(&v);
        let twice = phase_gauge(&once);
        prop_assert!(once.constant_part().norm() <= 1e-14 * v.max_abs());
        for (a, b) in once.values.iter().zip(&twice.values) {
            prop_assert!((a - b).norm() <= 1e-14 * v.max_abs());
        }
        prop_assert!((twice.offset - once.offset).norm() <= 1e-14 * v.max_abs());
        for (j, x) in once.values.iter().enumerate() {
            prop_assert!((x + once.offset - v.values[j]).norm() <= 1e-13 * v.max_abs());
        }
    }

    #[test]
    fn real_potentials_conserve_power(c in coefficients(), w in 0.8..2.0f64) {
        let g = XiGrid::new(128, 8).unwrap();
        let real = Harmonics::from_trig(C64::new(c.k0.re, 0.0), C64::new(c.g12.re, 0.0), C64::new(c.g13.re, 0.0));
        let v = PotentialSpec::from_harmonics("real", real, g);
        let u0 = BeamState::gaussian(g, w).unwrap();
        let (_, log) = split_step(&u0, &v, 1e-2, 200).unwrap();
        prop_assert!(log.max_power_drift() <= 1e-12 * log.entries[0].power);
    }

    #[test]
    fn pt_potentials_conserve_quasi_power(c in coefficients(), shift in -1.0..1.0f64, k in -1.0..1.0f64) {
        let g = XiGrid::new(128, 8).unwrap();
        let v = pt_symmetrize(&PotentialSpec::from_coefficients("v", c, g)).unwrap();
        let u = g.points().iter().map(|x| C64::from_polar((-(x - shift).powi(2) / 2.0).exp(), k * x)).collect();
        let u0 = BeamState::new(g, u).unwrap();
        let (_, log) = split_step(&u0, &v, 1e-2, 200).unwrap();
        let scale = log.entries.iter().map(|e| e.power).fold(0.0, f64::max);
        prop_assert!(log.max_quasi_power_drift() <= 1e-11 * scale);
    }

    #[test]
    fn pt_bands_are_even_in_q_and_closed_under_conjugation(c in coefficients(), q in 0.0..1.0f64) {
        let h = Harmonics::from_trig(C64::new(c.k0.re, 0.0), C64::new(c.g12.re, 0.0), C64::new(0.0, c.g13.im));
        let s = FourierSeries::from_harmonics(&h, 1);
        let plus = eigenvalues(bloch_matrix(&s, q, 33)).unwrap();
        let minus = eigenvalues(bloch_matrix(&s, -q, 33)).unwrap();
        let conj: Vec<C64> = plus.iter().map(|z| z.conj()).collect();
        for a in &plus {
            let tol = 1e-9 * (1.0 + a.norm());
            prop_assert!(minus.iter().any(|b| (a - b).norm() <= tol));
            prop_assert!(conj.iter().any(|b| (a - b).norm() <= tol));
        }
    }
}

#[test]
fn nondimensionalize_round_trips() {
    let r = design(&Preset::design()).unwrap();
    let back = redimensionalize(&r.spec).unwrap();
    let scale = r.dimensional.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in back.iter().zip(&r.dimensional) {
        assert!((a - b).norm() <= 1e-12 * scale);
    }
}

#[test]
fn doubling_r_quadruples_the_coefficients() {
    let r = design(&Preset::design()).unwrap();
    let atom = &r.preset.atom;
    let p = &r.profiles;
    let wide = FieldProfiles::lattice(p.ea0, p.es0, 2.0 * p.r_cm, p.grid).unwrap();
    let a = r.coefficients();
    let b = nondimensionalize(&r.dimensional, &r.coeffs, r.k, &wide, atom, "wide").unwrap().coefficients.unwrap();
    for (x, y) in [(a.g12, b.g12), (a.g13, b.g13), (a.k0, b.k0)] {
        assert!((y - 4.0 * x).norm() <= 1e-12 * y.norm());
    }
}
