use eitpt::potential::{Harmonics, PotentialSpec, XiGrid};
use eitpt::propagate::{split_step, BeamState};
use eitpt::spectrum::{bloch_bands, bloch_matrix, eigenpairs, standard_q_grid, FourierSeries, ThresholdFamily};
use eitpt::C64;

fn balanced_lattice() -> Harmonics {
    Harmonics::from_trig(C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.4))
}

#[test]
fn top_bands_converge_in_the_basis() {
    let v = PotentialSpec::from_harmonics("balanced", balanced_lattice(), XiGrid::new(256, 1).unwrap());
    let q = standard_q_grid(8);
    let small = bloch_bands(&v, 65, &q).unwrap();
    let large = bloch_bands(&v, 129, &q).unwrap();
    for band in 0..5 {
        for k in 0..q.len() {
            let d = (small.beta[band][k] - large.beta[band][k]).norm();
            assert!(d < 1e-8, "band {band} q {}: {d}", q[k]);
        }
    }
}

#[test]
fn real_potential_has_real_bands() {
    let h = Harmonics::from_trig(C64::new(-0.3, 0.0), C64::new(1.2, 0.0), C64::new(0.7, 0.0));
    let v = PotentialSpec::from_harmonics("real", h, XiGrid::new(128, 1).unwrap());
    let b = bloch_bands(&v, 33, &standard_q_grid(16)).unwrap();
    assert!(b.max_imag() < 1e-10);
    assert!(b.is_real());
}

#[test]
fn broken_mode_grows_like_its_propagation_constant() {
    let family = ThresholdFamily::from_spec(&PotentialSpec::from_harmonics("balanced", balanced_lattice(), XiGrid::new(64, 1).unwrap()))
        .unwrap();
    let h = family.member(1.2);
    let n_pw = 65;
    let pairs = eigenpairs(bloch_matrix(&FourierSeries::from_harmonics(&h, 1), 1.0, n_pw)).unwrap();
    let (beta, mode) = pairs.into_iter().max_by(|a, b| (-a.0.im).total_cmp(&(-b.0.im))).unwrap();
    assert!(beta.im < -1e-3, "W = 1.2 should be above threshold, β = {beta}");

    let g = XiGrid::new(512, 2).unwrap();
    let half = (n_pw / 2) as i64;
    let u: Vec<C64> = g
        .points()
        .iter()
        .map(|&x| (0..n_pw).map(|i| mode[i] * C64::from_polar(1.0, (1.0 + 2.0 * (i as i64 - half) as f64) * x)).sum())
        .collect();
    let u0 = BeamState::new(g, u).unwrap();
    let v = PotentialSpec::from_harmonics("W = 1.2", h, g);
    let (end, _) = split_step(&u0, &v, 1e-3, 1000).unwrap();
    let expect = (C64::new(0.0, 1.0) * beta).exp();
    let peak = u0.u.iter().map(|z| z.norm()).fold(0.0, f64::max) * expect.norm();
    for (a, b) in end.u.iter().zip(&u0.u) {
        assert!((a - b * expect).norm() <= 1e-4 * peak);
    }
}
