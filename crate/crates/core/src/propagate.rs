//! Paraxial propagation i∂u/∂s + ∂²u/∂ξ² + V(ξ)u = 0 on a periodic ξ grid.
//!
//! [`split_step`] is the Strang-symmetric spectral integrator. Its quasi-power
//! Q = Σ u(ξ)u*(−ξ)Δξ is an exact invariant of the discrete scheme whenever
//! V*(−ξ) = V(ξ) on the grid.
//!
//! [`full_mb_propagate`] advances the probe Rabi frequency itself,
//! i∂sΩ + ∂ξ²Ω + Ldiff κ13 σ31 = 0, with σ31 taken from the local steady
//! state of the Bloch equations at every grid point and step.

use std::sync::Arc;

use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};

use crate::atom::{steady_state, AtomParams, LocalDrive};
use crate::error::{EitError, Result};
use crate::perturbation::linear_probe_response;
use crate::potential::{design, PotentialSpec, XiGrid};
use crate::presets::Preset;
use crate::C64;

/// Amplitude at the domain edge, relative to the peak, above which a run
/// warns that the beam feels the periodic wrap-around.
pub const EDGE_GUARD: f64 = 1e-8;

/// Envelope samples on a periodic grid whose size is a power of two.
#[derive(Clone, Debug, PartialEq)]
pub struct BeamState {
    pub grid: XiGrid,
    pub u: Vec<C64>,
    pub s: f64,
}

impl BeamState {
    pub fn new(grid: XiGrid, u: Vec<C64>) -> Result<Self> {
        if !grid.n.is_power_of_two() {
            return Err(EitError::GridMismatch(format!("propagation grid size {} is not a power of two", grid.n)));
        }
        if u.len() != grid.n {
            return Err(EitError::GridMismatch(format!("{} samples on a grid of {}", u.len(), grid.n)));
        }
        Ok(BeamState { grid, u, s: 0.0 })
    }

    /// u = exp(−ξ²/(2w²)).
    pub fn gaussian(grid: XiGrid, width: f64) -> Result<Self> {
        if !(width > 0.0) {
            return Err(EitError::InvalidArgument(format!("Gaussian width must be positive, got {width}")));
        }
        let u = grid
            .points()
            .iter()
            .map(|x| C64::new((-x * x / (2.0 * width * width)).exp(), 0.0))
            .collect();
        Self::new(grid, u)
    }

    /// u = e^{ikξ}; k must be a multiple of 2π over the domain length.
    pub fn plane_wave(grid: XiGrid, k: f64) -> Result<Self> {
        let m = k * grid.length() / (2.0 * std::f64::consts::PI);
        if (m - m.round()).abs() > 1e-9 * m.abs().max(1.0) {
            return Err(EitError::InvalidArgument(format!("k = {k} is not periodic on a domain of {} periods", grid.periods)));
        }
        let u = grid.points().iter().map(|x| C64::from_polar(1.0, k * x)).collect();
        Self::new(grid, u)
    }

    pub fn power(&self) -> f64 {
        self.u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.grid.spacing()
    }

    /// Largest |u| at the two grid samples nearest the domain edge, relative
    /// to max |u|.
    pub fn edge_amplitude(&self) -> f64 {
        let peak = self.u.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return 0.0;
        }
        self.u[0].norm().max(self.u[self.grid.n - 1].norm()) / peak
    }

    fn max_abs(&self) -> f64 {
        self.u.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Σ u(ξ) u*(−ξ) Δξ using the exact grid reflection.
pub fn quasi_power(state: &BeamState) -> Result<C64> {
    let g = state.grid;
    if state.u.len() != g.n {
        return Err(EitError::GridMismatch(format!("{} samples on a grid of {}", state.u.len(), g.n)));
    }
    Ok((0..g.n).map(|j| state.u[j] * state.u[g.reflect(j)].conj()).sum::<C64>() * g.spacing())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LogEntry {
    pub s: f64,
    pub power: f64,
    pub quasi_power: C64,
}

/// One entry for the initial state and one after every step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PropagationLog {
    pub entries: Vec<LogEntry>,
}

impl PropagationLog {
    fn record(&mut self, state: &BeamState) -> Result<()> {
        self.entries.push(LogEntry {
            s: state.s,
            power: state.power(),
            quasi_power: quasi_power(state)?,
        });
        Ok(())
    }

    pub fn max_power_drift(&self) -> f64 {
        let p0 = self.entries.first().map_or(0.0, |e| e.power);
        self.entries.iter().map(|e| (e.power - p0).abs()).fold(0.0, f64::max)
    }

    pub fn max_quasi_power_drift(&self) -> f64 {
        let q0 = self.entries.first().map_or(C64::new(0.0, 0.0), |e| e.quasi_power);
        self.entries.iter().map(|e| (e.quasi_power - q0).norm()).fold(0.0, f64::max)
    }
}

/// Spectral free-diffraction step exp(−ik² ds), normalization included.
struct Kinetic {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    factor: Vec<C64>,
    scratch: Vec<C64>,
}

impl Kinetic {
    fn new(grid: XiGrid, ds: f64) -> Self {
        let n = grid.n;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let dk = 2.0 * std::f64::consts::PI / grid.length();
        let factor = (0..n)
            .map(|m| {
                let mm = if m <= n / 2 { m as f64 } else { m as f64 - n as f64 };
                let k = mm * dk;
                C64::from_polar(1.0 / n as f64, -k * k * ds)
            })
            .collect();
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Kinetic { forward, inverse, factor, scratch: vec![C64::new(0.0, 0.0); len] }
    }

    fn apply(&mut self, u: &mut [C64]) {
        self.forward.process_with_scratch(u, &mut self.scratch);
        for (z, f) in u.iter_mut().zip(&self.factor) {
            *z *= f;
        }
        self.inverse.process_with_scratch(u, &mut self.scratch);
    }
}

fn check_finite(u: &[C64], step: usize) -> Result<()> {
    if u.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        Ok(())
    } else {
        Err(EitError::NonFinite { step })
    }
}

fn check_step(ds: f64, n_steps: usize) -> Result<()> {
    if !(ds > 0.0) || !ds.is_finite() {
        return Err(EitError::InvalidArgument(format!("step size must be positive, got {ds}")));
    }
    if n_steps == 0 {
        return Err(EitError::InvalidArgument("at least one step is required".into()));
    }
    Ok(())
}

/// Strang splitting: half potential phase exp(iV ds/2), full kinetic factor
/// exp(−ik² ds), half potential phase.
pub fn split_step(u0: &BeamState, v: &PotentialSpec, ds: f64, n_steps: usize) -> Result<(BeamState, PropagationLog)> {
    check_step(ds, n_steps)?;
    if u0.grid != v.grid || v.values.len() != u0.u.len() {
        return Err(EitError::GridMismatch(format!(
            "beam grid {:?} differs from potential grid {:?}",
            u0.grid, v.grid
        )));
    }
    let vmax = v.max_abs();
    if vmax * ds > 0.5 {
        log::warn!("|V|·ds = {:.3} exceeds 0.5; the potential phase per step is coarse", vmax * ds);
    }
    if u0.edge_amplitude() > EDGE_GUARD {
        log::warn!("input amplitude at the domain edge is {:.2e} of the peak", u0.edge_amplitude());
    }
    let half: Vec<C64> = v.values.iter().map(|x| (C64::new(0.0, 0.5 * ds) * x).exp()).collect();
    let mut kinetic = Kinetic::new(u0.grid, ds);
    let mut state = u0.clone();
    let mut log = PropagationLog::default();
    log.record(&state)?;
    let s0 = state.s;
    for step in 1..=n_steps {
        for (z, h) in state.u.iter_mut().zip(&half) {
            *z *= h;
        }
        kinetic.apply(&mut state.u);
        for (z, h) in state.u.iter_mut().zip(&half) {
            *z *= h;
        }
        check_finite(&state.u, step)?;
        state.s = s0 + step as f64 * ds;
        log.record(&state)?;
    }
    if state.edge_amplitude() > EDGE_GUARD {
        log::warn!("amplitude at the domain edge reached {:.2e} of the peak", state.edge_amplitude());
    }
    Ok((state, log))
}

/// Outcome of the Maxwell-Bloch co-propagation.
#[derive(Clone, Debug)]
pub struct MbReport {
    /// Ω(ξ, s)/Ω_scale.
    pub probe: BeamState,
    /// Solution of the envelope equation in the designed potential.
    pub reference: BeamState,
    /// ‖probe − reference‖₂ / ‖reference‖₂ at the final s.
    pub deviation: f64,
    pub steps: usize,
    /// Grid points treated with the full steady state (the rest use the
    /// weak-probe response).
    pub nonlinear_points: usize,
}

/// Points below this fraction of the initial peak use the weak-probe
/// response instead of the full steady state.
const LINEAR_FRACTION: f64 = 1e-4;

struct LocalMedium {
    drives: Vec<LocalDrive>,
    linear: Vec<C64>,
    xi: Vec<f64>,
}

impl LocalMedium {
    /// Phase rate Ldiff κ13 σ31/Ω at every point.
    fn rates(&self, omega: &[C64], floor: f64, atom: &AtomParams, scale: f64, s: f64) -> Result<Vec<C64>> {
        omega
            .par_iter()
            .enumerate()
            .map(|(j, &w)| {
                if w.norm() < floor {
                    return Ok(scale * self.linear[j]);
                }
                let drive = self.drives[j].with_probe(w);
                let rho = steady_state(&drive, atom).map_err(|e| EitError::SteadyStateAt {
                    xi: self.xi[j],
                    s,
                    source: Box::new(e),
                })?;
                Ok(scale * atom.kappa13 * rho.at(3, 1) / w)
            })
            .collect()
    }
}

/// Co-propagates Ωp(ξ, 0) = `omega_scale`·u0(ξ) through the adiabatically
/// responding medium of `preset` up to `s_total`, and compares with the
/// envelope equation in the designed potential over the same distance.
pub fn full_mb_propagate(
    probe0: &BeamState,
    omega_scale: f64,
    preset: &Preset,
    s_total: f64,
    ds: f64,
) -> Result<MbReport> {
    let steps = (s_total / ds).round() as usize;
    check_step(ds, steps)?;
    let report = design(preset)?;
    let atom = &report.preset.atom;
    let grid = probe0.grid;
    let peak = probe0.max_abs() * omega_scale;
    if peak > 0.1 * preset.omega_c.abs() {
        log::warn!("probe peak {peak:.3e} s⁻¹ exceeds 0.1 Ωc; the weak-probe reference is not expected to hold");
    }

    let xi = grid.points();
    let base = report.preset.base_drive();
    let drives: Vec<LocalDrive> = xi
        .iter()
        .map(|&x| {
            let ea = report.preset.ea0 * (x.cos() + x.sin());
            let es = report.preset.es0 * x.cos();
            base.with_assisted(C64::new(atom.assisted_rabi(ea), 0.0)).with_stark(es)
        })
        .collect();
    let linear = drives
        .par_iter()
        .zip(&xi)
        .map(|(d, &x)| {
            linear_probe_response(d, atom)
                .map(|r| atom.kappa13 * r)
                .map_err(|e| EitError::SteadyStateAt { xi: x, s: 0.0, source: Box::new(e) })
        })
        .collect::<Result<Vec<C64>>>()?;
    let medium = LocalMedium { drives, linear, xi };
    let ldiff = report.spec.ldiff_cm.expect("design potentials carry Ldiff");
    let floor = LINEAR_FRACTION * peak;
    let nonlinear_points = probe0.u.iter().filter(|z| z.norm() * omega_scale >= floor).count();

    let mut omega: Vec<C64> = probe0.u.iter().map(|z| z * omega_scale).collect();
    let mut kinetic = Kinetic::new(grid, ds);
    let apply = |omega: &mut Vec<C64>, fraction: f64, s: f64| -> Result<()> {
        let rates = medium.rates(omega, floor, atom, ldiff, s)?;
        for (w, r) in omega.iter_mut().zip(&rates) {
            *w *= (C64::new(0.0, fraction * ds) * r).exp();
        }
        Ok(())
    };
    apply(&mut omega, 0.5, 0.0)?;
    for step in 1..=steps {
        kinetic.apply(&mut omega);
        check_finite(&omega, step)?;
        let s = step as f64 * ds;
        apply(&mut omega, if step == steps { 0.5 } else { 1.0 }, s)?;
        log::debug!("full MB step {step}/{steps}");
    }

    let probe = BeamState {
        grid,
        u: omega.iter().map(|w| w / omega_scale).collect(),
        s: steps as f64 * ds,
    };
    let coefficients = report.coefficients();
    let spec = PotentialSpec::from_coefficients(&preset.name, coefficients, grid);
    let (reference, _) = split_step(probe0, &spec, ds, steps)?;
    let num: f64 = probe.u.iter().zip(&reference.u).map(|(a, b)| (a - b).norm_sqr()).sum();
    let den: f64 = reference.u.iter().map(|b| b.norm_sqr()).sum();
    Ok(MbReport {
        probe,
        reference,
        deviation: (num / den).sqrt(),
        steps,
        nonlinear_points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::{Harmonics, PotentialCoefficients};

    fn grid() -> XiGrid {
        XiGrid::new(256, 8).unwrap()
    }

    fn zero_potential(g: XiGrid) -> PotentialSpec {
        PotentialSpec::from_samples("zero", g, vec![C64::new(0.0, 0.0); g.n]).unwrap()
    }

    #[test]
    fn free_plane_wave() {
        let g = grid();
        let k = 2.0 * 3.0 / 8.0;
        let u0 = BeamState::plane_wave(g, k).unwrap();
        let (u, log) = split_step(&u0, &zero_potential(g), 1e-2, 100).unwrap();
        for (j, x) in g.points().iter().enumerate() {
            let expect = C64::from_polar(1.0, k * x - k * k * 1.0);
            assert!((u.u[j] - expect).norm() < 1e-12);
        }
        assert!(log.max_power_drift() < 1e-12 * log.entries[0].power);
        assert_eq!(log.entries.len(), 101);
    }

    #[test]
    fn constant_potential_is_a_phase() {
        let g = grid();
        let u0 = BeamState::gaussian(g, 1.5).unwrap();
        let v = PotentialSpec::from_samples("c", g, vec![C64::new(0.7, 0.0); g.n]).unwrap();
        let (a, _) = split_step(&u0, &v, 1e-2, 50).unwrap();
        let (b, _) = split_step(&u0, &zero_potential(g), 1e-2, 50).unwrap();
        let phase = C64::from_polar(1.0, 0.7 * 0.5);
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!((x - y * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn quasi_power_examples() {
        let g = grid();
        let even = BeamState::gaussian(g, 1.0).unwrap();
        let q = quasi_power(&even).unwrap();
        assert!((q.re - even.power()).abs() < 1e-14 && q.im == 0.0);
        let wave = BeamState::plane_wave(g, 0.5).unwrap();
        assert!(quasi_power(&wave).unwrap().norm() < 1e-12);
    }

    #[test]
    fn rejects_bad_input() {
        let g = grid();
        let u0 = BeamState::gaussian(g, 1.0).unwrap();
        assert!(matches!(split_step(&u0, &zero_potential(g), 0.0, 10), Err(EitError::InvalidArgument(_))));
        let other = XiGrid::new(128, 8).unwrap();
        assert!(matches!(split_step(&u0, &zero_potential(other), 1e-3, 10), Err(EitError::GridMismatch(_))));
        assert!(BeamState::gaussian(XiGrid::new(96, 1).unwrap(), 1.0).is_err());
        assert!(BeamState::plane_wave(g, 0.3).is_err());
    }

    #[test]
    fn overflow_is_reported_with_step() {
        let g = XiGrid::new(64, 1).unwrap();
        let u0 = BeamState::gaussian(g, 0.3).unwrap();
        let v = PotentialSpec::from_samples("gain", g, vec![C64::new(0.0, -400.0); g.n]).unwrap();
        match split_step(&u0, &v, 1.0, 10) {
            Err(EitError::NonFinite { step }) => assert!(step > 1 && step <= 10),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn gauged_propagation_differs_by_phase() {
        let g = grid();
        let c = PotentialCoefficients {
            g12: C64::new(0.0, 0.4),
            g13: C64::new(1.0, 0.0),
            k0: C64::new(-11.7, -0.4),
        };
        let v = PotentialSpec::from_coefficients("balanced", c, g);
        let gauged = crate::potential::phase_gauge(&v);
        let u0 = BeamState::gaussian(g, 2.0).unwrap();
        let (a, _) = split_step(&u0, &v, 1e-3, 1000).unwrap();
        let (b, _) = split_step(&u0, &gauged, 1e-3, 1000).unwrap();
        let phase = (C64::new(0.0, 1.0) * gauged.offset).exp();
        for (x, y) in a.u.iter().zip(&b.u) {
            assert!((x - y * phase).norm() < 1e-10);
        }
    }

    #[test]
    fn pt_reflection_equivariance() {
        let g = grid();
        let h = Harmonics::from_trig(C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.4));
        let v = PotentialSpec::from_harmonics("balanced", h, g);
        let u0 = BeamState::new(
            g,
            g.points().iter().map(|x| C64::from_polar((-(x - 1.0) * (x - 1.0)).exp(), 0.3 * x)).collect(),
        )
        .unwrap();
        let (u, _) = split_step(&u0, &v, 1e-3, 500).unwrap();
        // T S = S⁻¹ T with (Tu)(ξ) = u*(−ξ): evolving T u(s) forward returns T u0.
        let reflect = |b: &BeamState| BeamState::new(g, (0..g.n).map(|j| b.u[g.reflect(j)].conj()).collect()).unwrap();
        let (back, _) = split_step(&reflect(&u), &v, 1e-3, 500).unwrap();
        let target = reflect(&u0);
        for (x, y) in back.u.iter().zip(&target.u) {
            assert!((x - y).norm() < 1e-10);
        }
    }
}
