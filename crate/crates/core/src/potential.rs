//! Complex optical potential of the lattice: field profiles, the dimensional
//! and dimensionless potentials, PT diagnostics and gain balancing.
//!
//! The transverse coordinate is ξ = x/R and the propagation coordinate
//! s = z/Ldiff with Ldiff = 2ωpR²/c. With Ea = Ea0(cos ξ + sin ξ) and
//! Es = Es0 cos ξ the dimensionless potential is
//! `V(ξ) = g12(1 + sin 2ξ) + g13 cos²ξ + K0`, period π.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::atom::AtomParams;
use crate::constants::{C_CM, HBAR};
use crate::error::{EitError, Result};
use crate::perturbation::{third_order, ThirdOrderCoeffs};
use crate::presets::Preset;
use crate::C64;

/// Target |gain_balance| for [`tune_pump`].
pub const BALANCE_TOLERANCE: f64 = 1e-4;

/// Uniform periodic grid ξ_j = (j − n/2)Δ, Δ = periods·π/n, j = 0..n.
///
/// The domain [−periods·π/2, periods·π/2) is symmetric about ξ = 0, so the
/// reflection ξ → −ξ maps sample j to sample (n − j) mod n.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct XiGrid {
    pub n: usize,
    pub periods: usize,
}

impl XiGrid {
    pub fn new(n: usize, periods: usize) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(EitError::GridMismatch(format!("grid size must be even and ≥ 2, got {n}")));
        }
        if periods == 0 {
            return Err(EitError::PeriodMismatch("domain must hold at least one period".into()));
        }
        Ok(XiGrid { n, periods })
    }

    /// Recovers the grid from sample positions, checking uniform spacing,
    /// symmetry about ξ = 0 and an integer number of π periods.
    pub fn from_samples(xi: &[f64]) -> Result<Self> {
        let n = xi.len();
        if n < 2 || n % 2 != 0 {
            return Err(EitError::GridMismatch(format!("grid size must be even and ≥ 2, got {n}")));
        }
        let delta = (xi[n - 1] - xi[0]) / (n - 1) as f64;
        if !(delta > 0.0) {
            return Err(EitError::GridMismatch("ξ samples must increase".into()));
        }
        let tol = 1e-9 * delta * n as f64;
        for (j, &x) in xi.iter().enumerate() {
            let expect = (j as f64 - (n / 2) as f64) * delta;
            if (x - expect).abs() > tol {
                return Err(EitError::GridMismatch(format!(
                    "sample {j} at ξ = {x} breaks the uniform grid symmetric about 0 (expected {expect})"
                )));
            }
        }
        let periods = n as f64 * delta / PI;
        let p = periods.round();
        if p < 1.0 || (periods - p).abs() > 1e-9 * periods {
            return Err(EitError::PeriodMismatch(format!("domain length {} is not a multiple of π", n as f64 * delta)));
        }
        XiGrid::new(n, p as usize)
    }

    pub fn spacing(&self) -> f64 {
        self.periods as f64 * PI / self.n as f64
    }

    pub fn length(&self) -> f64 {
        self.periods as f64 * PI
    }

    pub fn xi(&self, j: usize) -> f64 {
        (j as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.xi(j)).collect()
    }

    /// Index of −ξ_j.
    pub fn reflect(&self, j: usize) -> usize {
        (self.n - j) % self.n
    }

    pub fn samples_per_period(&self) -> Option<usize> {
        (self.n % self.periods == 0).then(|| self.n / self.periods)
    }
}

/// Assisted and Stark field amplitudes sampled on the ξ grid.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldProfiles {
    pub ea0: f64,
    pub es0: f64,
    pub r_cm: f64,
    pub grid: XiGrid,
    pub ea: Vec<f64>,
    pub es: Vec<f64>,
}

impl FieldProfiles {
    /// Ea = Ea0[cos ξ + sin ξ], Es = Es0 cos ξ.
    pub fn lattice(ea0: f64, es0: f64, r_cm: f64, grid: XiGrid) -> Result<Self> {
        let xi = grid.points();
        Self::from_samples(
            ea0,
            es0,
            r_cm,
            grid,
            xi.iter().map(|x| ea0 * (x.cos() + x.sin())).collect(),
            xi.iter().map(|x| es0 * x.cos()).collect(),
        )
    }

    pub fn from_samples(ea0: f64, es0: f64, r_cm: f64, grid: XiGrid, ea: Vec<f64>, es: Vec<f64>) -> Result<Self> {
        if !(r_cm > 0.0) {
            return Err(EitError::InvalidArgument(format!("R must be positive, got {r_cm}")));
        }
        if ea.len() != grid.n || es.len() != grid.n {
            return Err(EitError::GridMismatch(format!(
                "profiles have {} and {} samples on a grid of {}",
                ea.len(),
                es.len(),
                grid.n
            )));
        }
        Ok(FieldProfiles { ea0, es0, r_cm, grid, ea, es })
    }

    pub fn from_preset(p: &Preset) -> Result<Self> {
        Self::lattice(p.ea0, p.es0, p.r_cm, p.grid()?)
    }
}

/// Diffraction length 2ωpR²/c (cm).
pub fn ldiff(omega_p: f64, r_cm: f64) -> f64 {
    2.0 * omega_p * r_cm * r_cm / C_CM
}

/// Dimensionless coefficients of V = g12(1 + sin 2ξ) + g13 cos²ξ + K0.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialCoefficients {
    pub g12: C64,
    pub g13: C64,
    #[serde(rename = "K0")]
    pub k0: C64,
}

impl PotentialCoefficients {
    pub fn value(&self, xi: f64) -> C64 {
        let c = xi.cos();
        self.g12 * (1.0 + (2.0 * xi).sin()) + self.g13 * c * c + self.k0
    }

    pub fn harmonics(&self) -> Harmonics {
        let i = C64::new(0.0, 1.0);
        Harmonics {
            c0: self.g12 + self.g13 * 0.5 + self.k0,
            c_plus2: self.g12 / (2.0 * i) + self.g13 * 0.25,
            c_minus2: -self.g12 / (2.0 * i) + self.g13 * 0.25,
        }
    }

    /// 2 Im(g12) + Im(g13) + 2 Im(K0), twice the constant imaginary offset.
    pub fn gain_balance(&self) -> f64 {
        2.0 * self.g12.im + self.g13.im + 2.0 * self.k0.im
    }
}

/// Fourier coefficients of a potential with harmonics 0 and ±2 only:
/// V = c0 + c₊₂ e^{2iξ} + c₋₂ e^{−2iξ}.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Harmonics {
    pub c0: C64,
    pub c_plus2: C64,
    pub c_minus2: C64,
}

impl Harmonics {
    /// V = c0 + a cos 2ξ + b sin 2ξ.
    pub fn from_trig(c0: C64, cos2: C64, sin2: C64) -> Self {
        let i = C64::new(0.0, 1.0);
        Harmonics {
            c0,
            c_plus2: 0.5 * cos2 + sin2 / (2.0 * i),
            c_minus2: 0.5 * cos2 - sin2 / (2.0 * i),
        }
    }

    pub fn cos2(&self) -> C64 {
        self.c_plus2 + self.c_minus2
    }

    pub fn sin2(&self) -> C64 {
        C64::new(0.0, 1.0) * (self.c_plus2 - self.c_minus2)
    }

    pub fn value(&self, xi: f64) -> C64 {
        self.c0 + self.cos2() * (2.0 * xi).cos() + self.sin2() * (2.0 * xi).sin()
    }

    /// Coefficient of e^{2imξ}.
    pub fn coefficient(&self, m: i64) -> C64 {
        match m {
            0 => self.c0,
            1 => self.c_plus2,
            -1 => self.c_minus2,
            _ => C64::new(0.0, 0.0),
        }
    }
}

/// Sampled dimensionless potential with its provenance.
#[derive(Clone, Debug, PartialEq)]
pub struct PotentialSpec {
    pub name: String,
    /// Present for potentials built by the design pipeline or from g12, g13, K0.
    pub coefficients: Option<PotentialCoefficients>,
    /// Exact Fourier content when known; sampled potentials carry none.
    pub harmonics: Option<Harmonics>,
    pub ldiff_cm: Option<f64>,
    pub r_cm: Option<f64>,
    /// Constant removed by [`phase_gauge`].
    pub offset: C64,
    pub grid: XiGrid,
    pub values: Vec<C64>,
}

impl PotentialSpec {
    pub fn from_harmonics(name: &str, harmonics: Harmonics, grid: XiGrid) -> Self {
        PotentialSpec {
            name: name.into(),
            coefficients: None,
            harmonics: Some(harmonics),
            ldiff_cm: None,
            r_cm: None,
            offset: C64::new(0.0, 0.0),
            grid,
            values: grid.points().iter().map(|&x| harmonics.value(x)).collect(),
        }
    }

    pub fn from_coefficients(name: &str, coefficients: PotentialCoefficients, grid: XiGrid) -> Self {
        PotentialSpec {
            coefficients: Some(coefficients),
            values: grid.points().iter().map(|&x| coefficients.value(x)).collect(),
            ..Self::from_harmonics(name, coefficients.harmonics(), grid)
        }
    }

    pub fn from_samples(name: &str, grid: XiGrid, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(EitError::GridMismatch(format!("{} samples on a grid of {}", values.len(), grid.n)));
        }
        Ok(PotentialSpec {
            name: name.into(),
            coefficients: None,
            harmonics: None,
            ldiff_cm: None,
            r_cm: None,
            offset: C64::new(0.0, 0.0),
            grid,
            values,
        })
    }

    /// ξ-independent part: c0 when the harmonics are known, else the grid mean.
    pub fn constant_part(&self) -> C64 {
        match self.harmonics {
            Some(h) => h.c0,
            None => self.values.iter().sum::<C64>() / self.values.len() as f64,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    fn check(&self) -> Result<()> {
        if self.values.len() != self.grid.n {
            return Err(EitError::GridMismatch(format!(
                "{} samples on a grid of {}",
                self.values.len(),
                self.grid.n
            )));
        }
        Ok(())
    }
}

/// Ṽ(x) = α12|p24|²/ħ²·|Ea(x)|² + α13|Es(x)|² + K in cm⁻¹.
pub fn dimensional_potential(
    coeffs: &ThirdOrderCoeffs,
    profiles: &FieldProfiles,
    k: C64,
    atom: &AtomParams,
) -> Result<Vec<C64>> {
    if profiles.ea.len() != profiles.es.len() || profiles.ea.len() != profiles.grid.n {
        return Err(EitError::GridMismatch(format!(
            "assisted profile has {} samples, Stark profile {}, grid {}",
            profiles.ea.len(),
            profiles.es.len(),
            profiles.grid.n
        )));
    }
    let cross = coeffs.alpha12 * (atom.p24 * atom.p24 / (HBAR * HBAR));
    Ok(profiles
        .ea
        .iter()
        .zip(&profiles.es)
        .map(|(ea, es)| cross * (ea * ea) + coeffs.alpha13 * (es * es) + k)
        .collect())
}

/// Scales Ṽ by Ldiff and reports g12 = α12|p24|²Ea0²Ldiff/ħ²,
/// g13 = α13 Es0² Ldiff, K0 = K Ldiff.
pub fn nondimensionalize(
    v_dim: &[C64],
    coeffs: &ThirdOrderCoeffs,
    k: C64,
    profiles: &FieldProfiles,
    atom: &AtomParams,
    name: &str,
) -> Result<PotentialSpec> {
    let l = ldiff(atom.omega_p, profiles.r_cm);
    let coefficients = PotentialCoefficients {
        g12: coeffs.alpha12 * (atom.p24 * atom.p24 * profiles.ea0 * profiles.ea0 * l / (HBAR * HBAR)),
        g13: coeffs.alpha13 * (profiles.es0 * profiles.es0 * l),
        k0: k * l,
    };
    let mut spec = PotentialSpec::from_samples(name, profiles.grid, v_dim.iter().map(|v| v * l).collect())?;
    spec.coefficients = Some(coefficients);
    spec.ldiff_cm = Some(l);
    spec.r_cm = Some(profiles.r_cm);
    // only the lattice profiles have the closed harmonic content
    let lattice = FieldProfiles::lattice(profiles.ea0, profiles.es0, profiles.r_cm, profiles.grid)?;
    if lattice.ea == profiles.ea && lattice.es == profiles.es {
        spec.harmonics = Some(coefficients.harmonics());
    }
    Ok(spec)
}

/// Ṽ = (V + offset)/Ldiff in cm⁻¹.
pub fn redimensionalize(spec: &PotentialSpec) -> Result<Vec<C64>> {
    let l = spec
        .ldiff_cm
        .ok_or_else(|| EitError::InvalidArgument(format!("potential {} carries no diffraction length", spec.name)))?;
    Ok(spec.values.iter().map(|v| (v + spec.offset) / l).collect())
}

/// max_j |V(ξ_j) − V*(−ξ_j)|.
pub fn pt_residual(spec: &PotentialSpec) -> Result<f64> {
    spec.check()?;
    let g = spec.grid;
    Ok((0..g.n)
        .map(|j| (spec.values[j] - spec.values[g.reflect(j)].conj()).norm())
        .fold(0.0, f64::max))
}

/// PT-symmetric part (V(ξ) + V*(−ξ))/2; every Fourier coefficient becomes
/// its real part.
pub fn pt_symmetrize(spec: &PotentialSpec) -> Result<PotentialSpec> {
    spec.check()?;
    let g = spec.grid;
    let mut out = spec.clone();
    out.name = format!("{} (PT part)", spec.name);
    out.coefficients = None;
    out.offset = C64::new(spec.offset.re, 0.0);
    out.values = (0..g.n).map(|j| 0.5 * (spec.values[j] + spec.values[g.reflect(j)].conj())).collect();
    if let Some(h) = &mut out.harmonics {
        h.c0 = C64::new(h.c0.re, 0.0);
        h.c_plus2 = C64::new(h.c_plus2.re, 0.0);
        h.c_minus2 = C64::new(h.c_minus2.re, 0.0);
    }
    Ok(out)
}

/// Twice the imaginary part of the constant term of the ungauged potential,
/// 2 Im(g12) + Im(g13) + 2 Im(K0) for the lattice form.
pub fn gain_balance(spec: &PotentialSpec) -> f64 {
    match spec.coefficients {
        Some(c) => c.gain_balance(),
        None => 2.0 * (spec.constant_part() + spec.offset).im,
    }
}

/// Removes the ξ-independent part of V; the removed constant accumulates in
/// `offset`. Propagation in the gauged potential differs by exp(i·offset·s).
pub fn phase_gauge(spec: &PotentialSpec) -> PotentialSpec {
    let c = spec.constant_part();
    let mut out = spec.clone();
    for v in &mut out.values {
        *v -= c;
    }
    if let Some(h) = &mut out.harmonics {
        h.c0 -= c;
    }
    out.offset += c;
    out
}

#[derive(Clone, Debug, PartialEq)]
pub struct Susceptibility {
    pub chi: Vec<C64>,
    pub index: Vec<C64>,
}

/// χ = 2cṼ/ωp and n = 1 + cṼ/ωp from the dimensional potential.
pub fn susceptibility(v_dim: &[C64], omega_p: f64) -> Susceptibility {
    let f = C_CM / omega_p;
    Susceptibility {
        chi: v_dim.iter().map(|v| v * (2.0 * f)).collect(),
        index: v_dim.iter().map(|v| 1.0 + v * f).collect(),
    }
}

/// Everything produced by one pass of the design pipeline.
#[derive(Clone, Debug)]
pub struct DesignReport {
    pub preset: Preset,
    pub coeffs: ThirdOrderCoeffs,
    pub k: C64,
    pub profiles: FieldProfiles,
    pub dimensional: Vec<C64>,
    pub spec: PotentialSpec,
    pub pt_residual: f64,
    pub gain_balance: f64,
}

impl DesignReport {
    pub fn coefficients(&self) -> PotentialCoefficients {
        self.spec.coefficients.expect("design potentials carry coefficients")
    }
}

/// (α3 − α1) giving Re(g13) = `target` at the preset, with α1 = α2 = 0 and
/// α3 = α4. The closed-form g13 is linear in (α3 − α1).
pub fn calibrate_polarizability(preset: &Preset, target: f64) -> Result<f64> {
    let unit = 1e-35;
    let mut atom = preset.atom.clone();
    atom.polarizability = [0.0, 0.0, unit, unit];
    let coeffs = third_order(&preset.base_drive(), &atom)?;
    let g13 = coeffs.alpha13 * preset.es0 * preset.es0 * ldiff(atom.omega_p, preset.r_cm);
    if !(g13.re.abs() > 0.0) || !g13.re.is_finite() {
        return Err(EitError::InvalidArgument(format!(
            "Re(g13) cannot be calibrated at Es0 = {} (unit response {g13})",
            preset.es0
        )));
    }
    Ok(target * unit / g13.re)
}

/// third_order → dimensional_potential → nondimensionalize → diagnostics.
pub fn design(preset: &Preset) -> Result<DesignReport> {
    preset.validate()?;
    let mut preset = preset.clone();
    if let Some(target) = preset.calibrate_re_g13 {
        let d = calibrate_polarizability(&preset, target)?;
        preset.atom.polarizability = [0.0, 0.0, d, d];
    }
    let atom = &preset.atom;
    let coeffs = third_order(&preset.base_drive(), atom)?;
    let k = coeffs.first.k;
    let profiles = FieldProfiles::from_preset(&preset)?;
    let dimensional = dimensional_potential(&coeffs, &profiles, k, atom)?;
    let spec = nondimensionalize(&dimensional, &coeffs, k, &profiles, atom, &preset.name)?;
    let pt_residual = pt_residual(&spec)?;
    let gain_balance = gain_balance(&spec);
    Ok(DesignReport { preset, coeffs, k, profiles, dimensional, spec, pt_residual, gain_balance })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BalanceKnob {
    Kappa13,
    Gamma31,
    Ea0,
}

impl BalanceKnob {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "kappa13" => Ok(Self::Kappa13),
            "gamma31" => Ok(Self::Gamma31),
            "ea0" => Ok(Self::Ea0),
            _ => Err(EitError::InvalidArgument(format!("unknown balance knob {s} (kappa13, gamma31, ea0)"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Self::Kappa13 => "kappa13",
            Self::Gamma31 => "gamma31",
            Self::Ea0 => "ea0",
        }
    }

    pub fn get(&self, p: &Preset) -> f64 {
        match self {
            Self::Kappa13 => p.atom.kappa13,
            Self::Gamma31 => p.atom.gamma31,
            Self::Ea0 => p.ea0,
        }
    }

    pub fn set(&self, p: &mut Preset, v: f64) {
        match self {
            Self::Kappa13 => p.atom.kappa13 = v,
            Self::Gamma31 => p.atom.gamma31 = v,
            Self::Ea0 => p.ea0 = v,
        }
    }

    /// Search interval as multiples of the nominal value.
    pub fn default_bracket(&self) -> (f64, f64) {
        match self {
            Self::Kappa13 => (0.25, 4.0),
            Self::Gamma31 => (0.5, 1.5),
            Self::Ea0 => (0.5, 2.0),
        }
    }
}

#[derive(Clone, Debug)]
pub struct TuneResult {
    pub knob: BalanceKnob,
    pub value: f64,
    pub iterations: usize,
    pub report: DesignReport,
}

/// Bisects `knob` inside `bracket` (absolute values; default from
/// [`BalanceKnob::default_bracket`]) until |gain_balance| < 10⁻⁴. The Stark
/// calibration, if requested, is done once at the nominal preset and then held
/// fixed with every other parameter.
pub fn tune_pump(preset: &Preset, knob: BalanceKnob, bracket: Option<(f64, f64)>) -> Result<TuneResult> {
    let mut fixed = preset.clone();
    if let Some(target) = fixed.calibrate_re_g13.take() {
        let d = calibrate_polarizability(preset, target)?;
        fixed.atom.polarizability = [0.0, 0.0, d, d];
    }
    let nominal = knob.get(&fixed);
    let (mut lo, mut hi) = bracket.unwrap_or_else(|| {
        let (a, b) = knob.default_bracket();
        (a * nominal, b * nominal)
    });
    let eval = |v: f64| -> Result<DesignReport> {
        let mut p = fixed.clone();
        knob.set(&mut p, v);
        design(&p)
    };
    let r_lo = eval(lo)?;
    let r_hi = eval(hi)?;
    let (mut f_lo, f_hi) = (r_lo.gain_balance, r_hi.gain_balance);
    for (v, r) in [(lo, &r_lo), (hi, &r_hi)] {
        if r.gain_balance.abs() < BALANCE_TOLERANCE {
            return Ok(TuneResult { knob, value: v, iterations: 0, report: r.clone() });
        }
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(EitError::NoBalancePoint { knob: knob.name().into(), lo, hi, f_lo, f_hi });
    }
    for it in 1..=200 {
        let mid = 0.5 * (lo + hi);
        let r = eval(mid)?;
        let f = r.gain_balance;
        log::debug!("tune {}: {mid} -> {f}", knob.name());
        if f.abs() < BALANCE_TOLERANCE || hi - lo <= 1e-15 * mid.abs() {
            return Ok(TuneResult { knob, value: mid, iterations: it, report: r });
        }
        if f.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f;
        } else {
            hi = mid;
        }
    }
    unreachable!("bisection interval exhausted")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> XiGrid {
        XiGrid::new(512, 1).unwrap()
    }

    fn balanced_lattice() -> PotentialCoefficients {
        PotentialCoefficients {
            g12: C64::new(0.0, 0.4),
            g13: C64::new(1.0, 0.0),
            k0: C64::new(-11.7, -0.4),
        }
    }

    #[test]
    fn grid_is_symmetric() {
        let g = XiGrid::new(8, 2).unwrap();
        for j in 0..8 {
            assert!((g.xi(j) + g.xi(g.reflect(j))).abs() < 1e-15 || j == 0);
        }
        assert_eq!(g.xi(4), 0.0);
        assert_eq!(XiGrid::from_samples(&g.points()).unwrap(), g);
        let shifted: Vec<f64> = g.points().iter().map(|x| x + 0.1).collect();
        assert!(matches!(XiGrid::from_samples(&shifted), Err(EitError::GridMismatch(_))));
        let stretched: Vec<f64> = g.points().iter().map(|x| x * 1.1).collect();
        assert!(matches!(XiGrid::from_samples(&stretched), Err(EitError::PeriodMismatch(_))));
    }

    #[test]
    fn assisted_intensity_identity() {
        let p = FieldProfiles::lattice(0.3, 0.0, 1e-3, grid()).unwrap();
        for (x, ea) in grid().points().iter().zip(&p.ea) {
            assert!((ea * ea - 0.09 * (1.0 + (2.0 * x).sin())).abs() < 1e-15);
        }
    }

    #[test]
    fn profile_length_mismatch() {
        assert!(matches!(
            FieldProfiles::from_samples(1.0, 1.0, 1e-3, grid(), vec![0.0; 512], vec![0.0; 511]),
            Err(EitError::GridMismatch(_))
        ));
    }

    #[test]
    fn harmonics_reproduce_values() {
        let c = balanced_lattice();
        let h = c.harmonics();
        for x in grid().points() {
            assert!((h.value(x) - c.value(x)).norm() < 1e-13);
        }
        let t = Harmonics::from_trig(C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.4));
        assert!((h.c0 - C64::new(-11.2, 0.0)).norm() < 1e-14);
        assert!((t.c_plus2 - h.c_plus2).norm() < 1e-15);
        assert!((t.c_minus2 - h.c_minus2).norm() < 1e-15);
    }

    #[test]
    fn gain_balance_examples() {
        let c = PotentialCoefficients {
            g12: C64::new(0.01, 0.4),
            g13: C64::new(1.0, 0.03),
            k0: C64::new(-11.7, -0.4),
        };
        assert!((c.gain_balance() - 0.03).abs() < 1e-15);
        let real = PotentialCoefficients {
            g12: C64::new(0.2, 0.0),
            g13: C64::new(1.0, 0.0),
            k0: C64::new(-3.0, 0.0),
        };
        assert_eq!(real.gain_balance(), 0.0);
        let sampled = PotentialSpec::from_samples("x", grid(), PotentialSpec::from_coefficients("", c, grid()).values).unwrap();
        assert!((gain_balance(&sampled) - 0.03).abs() < 1e-12);
    }

    #[test]
    fn residual_of_exact_pt_form() {
        let h = Harmonics::from_trig(C64::new(0.5, 0.0), C64::new(0.5, 0.0), C64::new(0.0, 0.4));
        let s = PotentialSpec::from_harmonics("balanced", h, grid());
        assert!(pt_residual(&s).unwrap() <= 1e-12);
        let even = PotentialSpec::from_samples("even", grid(), grid().points().iter().map(|x| C64::new(x.cos().powi(4), 0.0)).collect()).unwrap();
        assert_eq!(pt_residual(&even).unwrap(), 0.0);
    }

    #[test]
    fn residual_matches_coefficient_expression() {
        let c = PotentialCoefficients {
            g12: C64::new(0.02, 0.41),
            g13: C64::new(0.95, 0.04),
            k0: C64::new(-11.0, -0.3),
        };
        let s = PotentialSpec::from_coefficients("c", c, grid());
        let i = C64::new(0.0, 1.0);
        let expect = grid()
            .points()
            .iter()
            .map(|&x| {
                (2.0 * i * c.g12.im + i * c.g13.im + 2.0 * i * c.k0.im + 2.0 * c.g12.re * (2.0 * x).sin()
                    + i * c.g13.im * (2.0 * x).cos())
                .norm()
            })
            .fold(0.0, f64::max);
        assert!((pt_residual(&s).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn symmetrized_potential_is_pt() {
        let c = PotentialCoefficients {
            g12: C64::new(0.02, 0.41),
            g13: C64::new(0.95, 0.04),
            k0: C64::new(-11.0, -0.3),
        };
        let s = pt_symmetrize(&PotentialSpec::from_coefficients("c", c, grid())).unwrap();
        assert!(pt_residual(&s).unwrap() < 1e-15);
        let h = s.harmonics.unwrap();
        for x in grid().points() {
            assert!((h.value(x) - s.values[grid().points().iter().position(|y| *y == x).unwrap()]).norm() < 1e-13);
        }
    }

    #[test]
    fn gauge_examples() {
        let g = grid();
        let constant = PotentialSpec::from_samples("c", g, vec![C64::new(2.0, -0.5); g.n]).unwrap();
        let gauged = phase_gauge(&constant);
        assert!(gauged.values.iter().all(|v| v.norm() < 1e-15));
        assert!((gauged.offset - C64::new(2.0, -0.5)).norm() < 1e-15);

        let s = PotentialSpec::from_coefficients("balanced", balanced_lattice(), g);
        let gauged = phase_gauge(&s);
        assert!((gauged.offset - C64::new(-11.2, 0.0)).norm() < 1e-14);
        for (x, v) in g.points().iter().zip(&gauged.values) {
            let expect = C64::new(x.cos().powi(2) - 0.5, 0.4 * (2.0 * x).sin());
            assert!((v - expect).norm() < 1e-13);
        }
        assert_eq!(phase_gauge(&gauged).values, gauged.values);
    }

    #[test]
    fn susceptibility_examples() {
        let s = susceptibility(&[C64::new(0.0, 0.0)], 2.37e15);
        assert_eq!(s.index[0], C64::new(1.0, 0.0));
        assert_eq!(s.chi[0], C64::new(0.0, 0.0));
    }

    #[test]
    fn ldiff_scales_with_r_squared() {
        let a = ldiff(2.37e15, 2.5e-3);
        assert!((a - 0.98818).abs() < 1e-4);
        assert!((ldiff(2.37e15, 5e-3) - 4.0 * a).abs() < 1e-14);
    }
}
