use eitpt::potential::{design, Harmonics, PotentialSpec, XiGrid};
use eitpt::presets::Preset;
use eitpt::propagate::{full_mb_propagate, split_step, BeamState};
use eitpt::C64;

fn balanced_lattice() -> Harmonics {
    Harmonics::from_trig(C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.4))
}

fn relative(a: &BeamState, b: &BeamState) -> f64 {
    let num: f64 = a.u.iter().zip(&b.u).map(|(x, y)| (x - y).norm_sqr()).sum();
    let den: f64 = b.u.iter().map(|y| y.norm_sqr()).sum();
    (num / den).sqrt()
}

#[test]
fn strang_error_halves_twice_per_halving() {
    let g = XiGrid::new(256, 8).unwrap();
    let v = PotentialSpec::from_harmonics("balanced", balanced_lattice(), g);
    let u0 = BeamState::gaussian(g, 2.0).unwrap();
    let (reference, _) = split_step(&u0, &v, 1e-4, 5000).unwrap();
    let (a, _) = split_step(&u0, &v, 4e-3, 125).unwrap();
    let (b, _) = split_step(&u0, &v, 2e-3, 250).unwrap();
    let ratio = relative(&a, &reference) / relative(&b, &reference);
    assert!((3.6..4.4).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn balanced_lattice_power_stays_bounded() {
    let g = XiGrid::new(512, 16).unwrap();
    let v = PotentialSpec::from_harmonics("balanced", balanced_lattice(), g);
    let u0 = BeamState::gaussian(g, 3.0).unwrap();
    let (_, log) = split_step(&u0, &v, 5e-3, 4000).unwrap();
    let p0 = log.entries[0].power;
    let peak = log.entries.iter().map(|e| e.power).fold(0.0, f64::max);
    assert!(peak < 10.0 * p0, "P grew to {peak} from {p0}");
}

#[test]
fn pt_residual_does_not_depend_on_resolution() {
    let mut coarse = Preset::design();
    coarse.samples_per_period = 256;
    let mut fine = Preset::design();
    fine.samples_per_period = 1024;
    let a = design(&coarse).unwrap().pt_residual;
    let b = design(&fine).unwrap().pt_residual;
    assert!((a - b).abs() <= 1e-3 * b, "{a} vs {b}");
}

/// Without the lattice fields the medium is uniform and the envelope only
/// picks up exp(i K0 s); the nonlinear correction is O(ε²).
fn uniform_medium() -> Preset {
    let mut p = Preset::design();
    p.atom.polarizability = [0.0, 0.0, eitpt::presets::DESIGN_POLARIZABILITY, eitpt::presets::DESIGN_POLARIZABILITY];
    p.calibrate_re_g13 = None;
    p.ea0 = 0.0;
    p.es0 = 0.0;
    p
}

#[test]
fn full_mb_reduces_to_linear_dispersion() {
    let p = uniform_medium();
    let g = XiGrid::new(64, 1).unwrap();
    let u0 = BeamState::plane_wave(g, 0.0).unwrap();
    let r = full_mb_propagate(&u0, 1e-3 * p.omega_c, &p, 1.0, 1e-2).unwrap();
    let k0 = design(&p).unwrap().coefficients().k0;
    let expect = (C64::new(0.0, 1.0) * k0).exp();
    for u in &r.probe.u {
        assert!((u - expect).norm() <= 1e-3 * expect.norm(), "{u} vs {expect}");
    }
    assert!(r.deviation <= 1e-3);
}

#[test]
fn full_mb_deviation_is_quadratic_in_probe_strength() {
    let p = uniform_medium();
    let g = XiGrid::new(512, 16).unwrap();
    let u0 = BeamState::gaussian(g, 4.0).unwrap();
    let a = full_mb_propagate(&u0, 1e-3 * p.omega_c, &p, 1.0, 4e-3).unwrap().deviation;
    let b = full_mb_propagate(&u0, 2e-3 * p.omega_c, &p, 1.0, 4e-3).unwrap().deviation;
    let ratio = b / a;
    assert!((3.0..=5.0).contains(&ratio), "deviation {a} → {b}, ratio {ratio}");
}
