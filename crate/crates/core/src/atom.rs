//! Four-level N-type atom: parameters, Stark-shifted detunings, the Bloch
//! equations with incoherent pumping |1⟩ → |3⟩, and the direct steady-state
//! solver.
//!
//! Level labels are 1-based everywhere in the public API (`at(3, 1)` is σ31),
//! matching the physics notation. Internally the density matrix is a row-major
//! `[[C64; 4]; 4]` and its vectorization puts σ_jl at index `4(j-1) + (l-1)`.
//!
//! Rates and Rabi frequencies are angular frequencies in s⁻¹.

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::constants::HBAR;
use crate::error::{EitError, Result};

/// Vectorized Bloch generator acting on the 16 density-matrix elements.
pub type Liouvillian = SMatrix<C64, 16, 16>;
pub type StateVector = SVector<C64, 16>;

/// Systems whose trace-constrained stationarity matrix exceeds this 1-norm
/// condition number are reported as degenerate.
pub const MAX_CONDITION: f64 = 1e14;

const I: C64 = C64::new(0.0, 1.0);

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomParams {
    /// Spontaneous decay |3⟩ → |1⟩ (s⁻¹).
    pub gamma13: f64,
    /// Spontaneous decay |3⟩ → |2⟩ (s⁻¹).
    pub gamma23: f64,
    /// Spontaneous decay |4⟩ → |2⟩ (s⁻¹).
    pub gamma24: f64,
    /// Incoherent pump rate |1⟩ → |3⟩ (s⁻¹).
    pub gamma31: f64,
    /// Collisional dephasing γ_dph[j-1][l-1] (s⁻¹), symmetric.
    pub dephasing: [[f64; 4]; 4],
    /// Scalar polarizabilities of |1⟩..|4⟩ (J·cm²/V²).
    pub polarizability: [f64; 4],
    /// Dipole matrix element magnitudes (C·cm).
    pub p13: f64,
    pub p24: f64,
    /// Probe coupling constant κ13 (cm⁻¹·s⁻¹).
    pub kappa13: f64,
    /// Probe angular frequency (s⁻¹).
    pub omega_p: f64,
}

impl AtomParams {
    pub fn validate(&self) -> Result<()> {
        let rates = [self.gamma13, self.gamma23, self.gamma24, self.gamma31];
        if rates.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(EitError::InvalidArgument(format!("decay and pump rates must be finite and ≥ 0, got {rates:?}")));
        }
        for j in 0..4 {
            for l in 0..4 {
                let g = self.dephasing[j][l];
                if !g.is_finite() || g < 0.0 {
                    return Err(EitError::InvalidArgument(format!("dephasing γ_dph[{}][{}] = {g} must be ≥ 0", j + 1, l + 1)));
                }
                if g != self.dephasing[l][j] {
                    return Err(EitError::InvalidArgument(format!("dephasing matrix is not symmetric at ({}, {})", j + 1, l + 1)));
                }
            }
        }
        if !(self.kappa13 > 0.0) {
            return Err(EitError::InvalidArgument(format!("κ13 must be positive, got {}", self.kappa13)));
        }
        if !(self.omega_p > 0.0) {
            return Err(EitError::InvalidArgument(format!("ωp must be positive, got {}", self.omega_p)));
        }
        Ok(())
    }

    /// Total population decay out of each level, Γl = Σ_{Ej<El} Γjl.
    pub fn level_decay(&self) -> [f64; 4] {
        [0.0, 0.0, self.gamma13 + self.gamma23, self.gamma24]
    }

    pub fn gamma3(&self) -> f64 {
        self.gamma13 + self.gamma23
    }

    pub fn gamma4(&self) -> f64 {
        self.gamma24
    }

    /// Coherence decay rate γjl (1-based labels).
    ///
    /// γjl = (Γj + Γl)/2 + γ_dph for every pair except (3,1), which also
    /// carries half the pump rate.
    pub fn coherence_decay(&self, j: usize, l: usize) -> f64 {
        if j == l {
            return 0.0;
        }
        let g = self.level_decay();
        let mut rate = 0.5 * (g[j - 1] + g[l - 1]) + self.dephasing[j - 1][l - 1];
        if (j, l) == (3, 1) || (j, l) == (1, 3) {
            rate += 0.5 * self.gamma31;
        }
        rate
    }

    /// Rabi frequency of the assisted field for a field amplitude in V/cm.
    pub fn assisted_rabi(&self, field: f64) -> f64 {
        self.p24 * field / HBAR
    }
}

/// Laser detunings Δ1..Δ4 (s⁻¹) before the Stark shift.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Detunings(pub [f64; 4]);

impl Detunings {
    pub fn new(delta: [f64; 4]) -> Self {
        Detunings(delta)
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j - 1]
    }
}

/// Per-level Stark shift αj Es²/(2ħ) in s⁻¹.
pub fn stark_shift(atom: &AtomParams, es: f64) -> [f64; 4] {
    atom.polarizability.map(|a| a * es * es / (2.0 * HBAR))
}

/// Shifted detunings Δ'j = Δj + αj Es²/(2ħ).
pub fn stark_detunings(det: &Detunings, atom: &AtomParams, es: f64) -> [f64; 4] {
    let shift = stark_shift(atom, es);
    let mut out = det.0;
    for (o, s) in out.iter_mut().zip(shift) {
        *o += s;
    }
    out
}

/// Complex transition denominators d_jl = Δ'j − Δ'l + iγjl.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionDenominators(pub [[C64; 4]; 4]);

impl TransitionDenominators {
    pub fn new(shifted: &[f64; 4], atom: &AtomParams) -> Self {
        let mut d = [[C64::new(0.0, 0.0); 4]; 4];
        for j in 1..=4 {
            for l in 1..=4 {
                d[j - 1][l - 1] = C64::new(shifted[j - 1] - shifted[l - 1], atom.coherence_decay(j, l));
            }
        }
        TransitionDenominators(d)
    }

    /// Unshifted denominators d⁰jl.
    pub fn bare(det: &Detunings, atom: &AtomParams) -> Self {
        Self::new(&det.0, atom)
    }

    pub fn at(&self, j: usize, l: usize) -> C64 {
        self.0[j - 1][l - 1]
    }

    /// Stark increment d²jl = (αj − αl)/(2ħ)·Es², real.
    pub fn stark_increment(atom: &AtomParams, es: f64, j: usize, l: usize) -> f64 {
        let a = &atom.polarizability;
        (a[j - 1] - a[l - 1]) / (2.0 * HBAR) * es * es
    }
}

/// Drive amplitudes and detunings seen by the atoms at one transverse point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LocalDrive {
    pub omega_p: C64,
    pub omega_c: C64,
    pub omega_a: C64,
    /// Stark field amplitude Es (V/cm).
    pub stark_field: f64,
    pub detunings: Detunings,
}

impl LocalDrive {
    pub fn control_only(omega_c: C64, detunings: Detunings) -> Self {
        LocalDrive {
            omega_p: C64::new(0.0, 0.0),
            omega_c,
            omega_a: C64::new(0.0, 0.0),
            stark_field: 0.0,
            detunings,
        }
    }

    pub fn with_probe(mut self, omega_p: C64) -> Self {
        self.omega_p = omega_p;
        self
    }

    pub fn with_assisted(mut self, omega_a: C64) -> Self {
        self.omega_a = omega_a;
        self
    }

    pub fn with_stark(mut self, es: f64) -> Self {
        self.stark_field = es;
        self
    }

    pub fn denominators(&self, atom: &AtomParams) -> TransitionDenominators {
        TransitionDenominators::new(&stark_detunings(&self.detunings, atom, self.stark_field), atom)
    }

    fn is_finite(&self) -> bool {
        [self.omega_p, self.omega_c, self.omega_a].iter().all(|z| z.re.is_finite() && z.im.is_finite())
            && self.stark_field.is_finite()
            && self.detunings.0.iter().all(|d| d.is_finite())
    }
}

/// Drives sampled on a transverse grid: uniform probe and control, assisted
/// Rabi frequency and Stark field given per sample.
#[derive(Clone, Debug, PartialEq)]
pub struct DriveConfig {
    pub omega_p: C64,
    pub omega_c: C64,
    pub assisted: Vec<C64>,
    pub stark: Vec<f64>,
    pub detunings: Detunings,
}

impl DriveConfig {
    pub fn new(omega_p: C64, omega_c: C64, assisted: Vec<C64>, stark: Vec<f64>, detunings: Detunings) -> Result<Self> {
        if assisted.len() != stark.len() {
            return Err(EitError::GridMismatch(format!(
                "assisted profile has {} samples, Stark profile has {}",
                assisted.len(),
                stark.len()
            )));
        }
        Ok(DriveConfig { omega_p, omega_c, assisted, stark, detunings })
    }

    pub fn len(&self) -> usize {
        self.assisted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.assisted.is_empty()
    }

    pub fn local(&self, i: usize) -> LocalDrive {
        LocalDrive {
            omega_p: self.omega_p,
            omega_c: self.omega_c,
            omega_a: self.assisted[i],
            stark_field: self.stark[i],
            detunings: self.detunings,
        }
    }
}

/// 4×4 density matrix of the atomic ensemble.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DensityMatrix(pub [[C64; 4]; 4]);

impl DensityMatrix {
    pub fn zeros() -> Self {
        DensityMatrix([[C64::new(0.0, 0.0); 4]; 4])
    }

    /// All population in level `j`.
    pub fn pure_level(j: usize) -> Self {
        let mut m = Self::zeros();
        m.0[j - 1][j - 1] = C64::new(1.0, 0.0);
        m
    }

    pub fn diagonal(p: [f64; 4]) -> Self {
        let mut m = Self::zeros();
        for (k, v) in p.into_iter().enumerate() {
            m.0[k][k] = C64::new(v, 0.0);
        }
        m
    }

    pub fn at(&self, j: usize, l: usize) -> C64 {
        self.0[j - 1][l - 1]
    }

    pub fn set(&mut self, j: usize, l: usize, v: C64) {
        self.0[j - 1][l - 1] = v;
    }

    pub fn trace(&self) -> C64 {
        (0..4).map(|k| self.0[k][k]).sum()
    }

    pub fn populations(&self) -> [f64; 4] {
        [0, 1, 2, 3].map(|k| self.0[k][k].re)
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Largest deviation from Hermiticity, max |σjl − σlj*|.
    pub fn hermiticity_error(&self) -> f64 {
        let mut err: f64 = 0.0;
        for j in 0..4 {
            for l in 0..4 {
                err = err.max((self.0[j][l] - self.0[l][j].conj()).norm());
            }
        }
        err
    }

    /// (σ + σ†)/2.
    pub fn hermitian_part(&self) -> Self {
        let mut m = *self;
        for j in 0..4 {
            for l in 0..4 {
                m.0[j][l] = 0.5 * (self.0[j][l] + self.0[l][j].conj());
            }
        }
        m
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> [f64; 4] {
        let h = self.hermitian_part();
        let m = SMatrix::<C64, 4, 4>::from_fn(|r, c| h.0[r][c]);
        let mut ev: Vec<f64> = m.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        [ev[0], ev[1], ev[2], ev[3]]
    }

    pub fn to_vector(&self) -> StateVector {
        StateVector::from_fn(|k, _| self.0[k / 4][k % 4])
    }

    pub fn from_vector(v: &StateVector) -> Self {
        let mut m = Self::zeros();
        for k in 0..16 {
            m.0[k / 4][k % 4] = v[k];
        }
        m
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = *self;
        for j in 0..4 {
            for l in 0..4 {
                m.0[j][l] -= other.0[j][l];
            }
        }
        m
    }
}

/// Time derivative dσ/dt of the Bloch equations with incoherent pumping.
///
/// The ten independent equations (populations and the lower-triangle
/// coherences σ21, σ31, σ41, σ32, σ42, σ43) are evaluated as written; the
/// upper-triangle derivatives use the conjugate equations with the transposed
/// elements, so the map is complex-linear in all sixteen entries and its
/// output is Hermitian whenever σ is.
pub fn bloch_rhs(sigma: &DensityMatrix, drive: &LocalDrive, atom: &AtomParams) -> DensityMatrix {
    let s = |j: usize, l: usize| sigma.0[j - 1][l - 1];
    let d = drive.denominators(atom);
    let (op, oc, oa) = (drive.omega_p, drive.omega_c, drive.omega_a);
    let g3 = atom.gamma3();
    let g4 = atom.gamma4();
    let mut out = DensityMatrix::zeros();

    out.set(
        1,
        1,
        -atom.gamma31 * s(1, 1) + atom.gamma13 * s(3, 3) + I * (op.conj() * s(3, 1) - op * s(1, 3)),
    );
    out.set(
        2,
        2,
        atom.gamma23 * s(3, 3)
            + atom.gamma24 * s(4, 4)
            + I * (oc.conj() * s(3, 2) - oc * s(2, 3) + oa.conj() * s(4, 2) - oa * s(2, 4)),
    );
    out.set(
        3,
        3,
        -g3 * s(3, 3) + atom.gamma31 * s(1, 1)
            - I * (op.conj() * s(3, 1) - op * s(1, 3) + oc.conj() * s(3, 2) - oc * s(2, 3)),
    );
    out.set(4, 4, -g4 * s(4, 4) - I * (oa.conj() * s(4, 2) - oa * s(2, 4)));

    // Each coherence equation reads dσjl/dt = i Σ c·σab.
    let mut coherence = |j: usize, l: usize, terms: &[(C64, usize, usize)]| {
        let lower: C64 = terms.iter().map(|&(c, a, b)| c * s(a, b)).sum();
        let upper: C64 = terms.iter().map(|&(c, a, b)| c.conj() * s(b, a)).sum();
        out.set(j, l, I * lower);
        out.set(l, j, -I * upper);
    };

    coherence(2, 1, &[(d.at(2, 1), 2, 1), (oc.conj(), 3, 1), (oa.conj(), 4, 1), (-op, 2, 3)]);
    coherence(3, 1, &[(d.at(3, 1), 3, 1), (op, 1, 1), (-op, 3, 3), (oc, 2, 1)]);
    coherence(4, 1, &[(d.at(4, 1), 4, 1), (oa, 2, 1), (-op, 4, 3)]);
    coherence(3, 2, &[(d.at(3, 2), 3, 2), (oc, 2, 2), (-oc, 3, 3), (op, 1, 2), (-oa, 3, 4)]);
    coherence(4, 2, &[(d.at(4, 2), 4, 2), (oa, 2, 2), (-oa, 4, 4), (-oc, 4, 3)]);
    coherence(4, 3, &[(d.at(4, 3), 4, 3), (oa, 2, 3), (-op.conj(), 4, 1), (-oc.conj(), 4, 2)]);

    out
}

/// Matrix of [`bloch_rhs`] acting on the vectorized density matrix.
pub fn liouvillian(drive: &LocalDrive, atom: &AtomParams) -> Liouvillian {
    let mut m = Liouvillian::zeros();
    for k in 0..16 {
        let mut e = DensityMatrix::zeros();
        e.0[k / 4][k % 4] = C64::new(1.0, 0.0);
        let col = bloch_rhs(&e, drive, atom).to_vector();
        m.set_column(k, &col);
    }
    m
}

fn one_norm(m: &Liouvillian) -> f64 {
    (0..16).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// LU factorization of the stationarity system with the σ11 row replaced by
/// the trace constraint. Solves both the steady state (trace 1) and the
/// traceless higher-order corrections of the perturbation ladder.
pub struct StationarySolver {
    system: Liouvillian,
    lu: nalgebra::LU<C64, nalgebra::Const<16>, nalgebra::Const<16>>,
    condition: f64,
}

impl StationarySolver {
    pub fn new(generator: &Liouvillian) -> Result<Self> {
        let mut system = *generator;
        for c in 0..16 {
            system[(0, c)] = C64::new(0.0, 0.0);
        }
        for k in 0..4 {
            system[(0, 5 * k)] = C64::new(1.0, 0.0);
        }
        let lu = system.lu();
        let condition = match lu.try_inverse() {
            Some(inv) => {
                let c = one_norm(&system) * one_norm(&inv);
                if c.is_finite() {
                    c
                } else {
                    f64::INFINITY
                }
            }
            None => f64::INFINITY,
        };
        if condition > MAX_CONDITION {
            return Err(EitError::DegenerateSteadyState { condition });
        }
        Ok(StationarySolver { system, lu, condition })
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    /// Solves the trace-constrained system: L x = rhs on every row except the
    /// σ11 row, which imposes tr x = `trace`.
    pub fn solve(&self, rhs: &StateVector, trace: C64) -> StateVector {
        let mut b = *rhs;
        b[0] = trace;
        let mut x = self.lu.solve(&b).expect("factorization checked at construction");
        // one step of iterative refinement
        let r = b - self.system * x;
        if let Some(dx) = self.lu.solve(&r) {
            x += dx;
        }
        x
    }
}

/// Stationary density matrix of the Bloch equations.
///
/// With Γ31 = 0 and no probe the prepared ground state |1⟩ is stationary for
/// any control or assisted field and is returned directly; with all drives
/// off this is the only physical choice among the degenerate ground-manifold
/// solutions.
pub fn steady_state(drive: &LocalDrive, atom: &AtomParams) -> Result<DensityMatrix> {
    if !drive.is_finite() {
        return Err(EitError::InvalidArgument("drive amplitudes must be finite".into()));
    }
    if atom.gamma31 == 0.0 && drive.omega_p == C64::new(0.0, 0.0) {
        return Ok(DensityMatrix::pure_level(1));
    }
    let solver = StationarySolver::new(&liouvillian(drive, atom))?;
    let x = solver.solve(&StateVector::zeros(), C64::new(1.0, 0.0));
    Ok(DensityMatrix::from_vector(&x).hermitian_part())
}

/// Largest rate in the problem, used to scale steady-state residuals.
pub fn rate_scale(drive: &LocalDrive, atom: &AtomParams) -> f64 {
    let d = drive.denominators(atom);
    let mut scale = [
        atom.gamma3(),
        atom.gamma4(),
        atom.gamma31,
        drive.omega_p.norm(),
        drive.omega_c.norm(),
        drive.omega_a.norm(),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    for row in d.0.iter() {
        for z in row {
            scale = scale.max(z.norm());
        }
    }
    scale
}
