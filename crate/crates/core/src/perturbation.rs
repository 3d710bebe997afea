//! Perturbative solution of the Maxwell-Bloch system in the weak-probe limit.
//!
//! The ladder runs from the pumped base state (Ωp = Ωa = 0), through the
//! linear response that fixes the dispersion `K`, to the third-order
//! coefficients α12 (cross-phase modulation by the assisted field) and α13
//! (Stark lattice) of the envelope potential.
//!
//! Every closed form here has an independent route: the same corrections are
//! obtained by solving the order-by-order linear stationarity systems
//! `L0 ρ_n = −L1 ρ_{n−1}` built from [`crate::atom::liouvillian`]. The closed
//! forms are reported alongside the oracle values with their discrepancy.

use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::atom::{
    liouvillian, steady_state, AtomParams, DensityMatrix, Detunings, Liouvillian, LocalDrive, StateVector,
    StationarySolver, TransitionDenominators,
};
use crate::constants::HBAR;
use crate::error::{EitError, Result};

/// Agreement required between a closed form and the oracle for an X3 reading
/// to be accepted.
pub const X3_TOLERANCE: f64 = 1e-3;

fn zero() -> C64 {
    C64::new(0.0, 0.0)
}

/// Vector index of σ_jl (1-based labels).
fn idx(j: usize, l: usize) -> usize {
    4 * (j - 1) + (l - 1)
}

/// Drive with the probe, assisted and Stark fields removed.
pub fn base_drive(drive: &LocalDrive) -> LocalDrive {
    LocalDrive::control_only(drive.omega_c, drive.detunings)
}

/// Pumped base state and the auxiliary quantities X1, X2 of its closed form.
#[derive(Clone, Debug, PartialEq)]
pub struct ZerothOrder {
    /// Linear-solve steady state at Ωp = Ωa = 0 (authoritative).
    pub sigma: DensityMatrix,
    /// X1 = Γ23/X3 with X3 = 2 Im(|Ωc|²/d⁰32); `None` without control field.
    pub x1: Option<f64>,
    pub x2: Option<f64>,
}

impl ZerothOrder {
    /// Base state rebuilt from X1 and X2.
    ///
    /// σ11 = 1 − (2 − X1)X2, σ22 = (1 − X1)X2, σ33 = X2 and
    /// σ32 = Ωc X1 X2 / d⁰32 from the stationary σ32 equation. The commonly
    /// quoted form Ωc* X1 X2 / d⁰32* is the conjugate element σ23.
    pub fn closed_form(&self, drive: &LocalDrive, atom: &AtomParams) -> Option<DensityMatrix> {
        let (x1, x2) = (self.x1?, self.x2?);
        let d = TransitionDenominators::bare(&drive.detunings, atom);
        let mut s = DensityMatrix::diagonal([1.0 - (2.0 - x1) * x2, (1.0 - x1) * x2, x2, 0.0]);
        let s32 = drive.omega_c * x1 * x2 / d.at(3, 2);
        s.set(3, 2, s32);
        s.set(2, 3, s32.conj());
        Some(s)
    }
}

/// X3 = 2 Im(|Ωc|²/d⁰32); zero without control field.
pub fn x3_value(drive: &LocalDrive, atom: &AtomParams) -> f64 {
    let d32 = TransitionDenominators::bare(&drive.detunings, atom).at(3, 2);
    2.0 * (drive.omega_c.norm_sqr() / d32).im
}

pub fn zeroth_order(drive: &LocalDrive, atom: &AtomParams) -> Result<ZerothOrder> {
    if drive.omega_c == zero() && atom.gamma31 != 0.0 {
        return Err(EitError::InvalidArgument(
            "the pumped base state needs a control field (Ωc ≠ 0 or Γ31 = 0)".into(),
        ));
    }
    let sigma = steady_state(&base_drive(drive), atom)?;
    let x3 = x3_value(drive, atom);
    let (x1, x2) = if x3 != 0.0 {
        let x1 = atom.gamma23 / x3;
        let x2 = atom.gamma31 / (atom.gamma13 + atom.gamma31 * (2.0 - x1));
        (Some(x1), Some(x2))
    } else {
        (None, None)
    };
    Ok(ZerothOrder { sigma, x1, x2 })
}

/// First-order (linear) response to the probe and assisted fields.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrder {
    /// Linear dispersion K (cm⁻¹).
    pub k: C64,
    pub alpha21: C64,
    pub alpha31: C64,
    pub alpha42: C64,
    pub alpha43: C64,
    /// D1 = |Ωc|² − d⁰21 d⁰31 (s⁻²).
    pub d1: C64,
    /// D2 = |Ωc|² − d⁰42 d⁰43 (s⁻²).
    pub d2: C64,
}

fn check_pole(which: &'static str, value: C64, scale: f64, drive: &LocalDrive) -> Result<()> {
    if value.norm() <= 1e-14 * scale || !value.norm().is_finite() {
        return Err(EitError::PoleAtResonance {
            which,
            detail: format!(
                "Ωc = {}, Δ = {:?}; {which} = {value}",
                drive.omega_c, drive.detunings.0
            ),
        });
    }
    Ok(())
}

fn first_order_from(zeroth: &ZerothOrder, drive: &LocalDrive, atom: &AtomParams) -> Result<FirstOrder> {
    let d = TransitionDenominators::bare(&drive.detunings, atom);
    let oc = drive.omega_c;
    let s = |j, l| zeroth.sigma.at(j, l);
    let omc2 = oc.norm_sqr();

    let d1 = omc2 - d.at(2, 1) * d.at(3, 1);
    check_pole("D1", d1, omc2.max(d.at(2, 1).norm() * d.at(3, 1).norm()), drive)?;
    let d2 = omc2 - d.at(4, 2) * d.at(4, 3);
    check_pole("D2", d2, omc2.max(d.at(4, 2).norm() * d.at(4, 3).norm()), drive)?;

    let alpha31 = (d.at(2, 1) * (s(1, 1) - s(3, 3)) + oc * s(2, 3)) / d1;
    let alpha21 = (oc.conj() * (s(3, 3) - s(1, 1)) - d.at(3, 1) * s(2, 3)) / d1;
    let alpha42 = (d.at(4, 3) * s(2, 2) + oc * s(2, 3)) / d2;
    let alpha43 = (oc.conj() * s(2, 2) + d.at(4, 2) * s(2, 3)) / d2;
    Ok(FirstOrder {
        k: atom.kappa13 * alpha31,
        alpha21,
        alpha31,
        alpha42,
        alpha43,
        d1,
        d2,
    })
}

pub fn first_order(drive: &LocalDrive, atom: &AtomParams) -> Result<FirstOrder> {
    let zeroth = zeroth_order(drive, atom)?;
    first_order_from(&zeroth, drive, atom)
}

/// K = κ13 [d⁰21(σ11 − σ33) + Ωc σ23] / D1 in cm⁻¹.
pub fn dispersion_k(drive: &LocalDrive, atom: &AtomParams) -> Result<C64> {
    let zeroth = zeroth_order(drive, atom)?;
    let d = TransitionDenominators::bare(&drive.detunings, atom);
    let oc = drive.omega_c;
    let s = |j, l| zeroth.sigma.at(j, l);
    let d1 = oc.norm_sqr() - d.at(2, 1) * d.at(3, 1);
    check_pole("D1", d1, oc.norm_sqr().max(d.at(2, 1).norm() * d.at(3, 1).norm()), drive)?;
    Ok(atom.kappa13 * (d.at(2, 1) * (s(1, 1) - s(3, 3)) + oc * s(2, 3)) / d1)
}

/// Second-order corrections. The F branch is quadratic in the probe
/// (σ ∝ |Ωp|²), the G branch quadratic in the assisted field (σ ∝ |Ωa|²);
/// α41 multiplies Ωa Ωp.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondOrderCoefficients {
    pub alpha22f: f64,
    pub alpha33f: f64,
    pub alpha11f: f64,
    pub alpha23f: C64,
    pub alpha22g: f64,
    pub alpha33g: f64,
    pub alpha11g: f64,
    pub alpha23g: C64,
    pub alpha44: f64,
    pub alpha41: C64,
}

impl SecondOrderCoefficients {
    fn entries(&self) -> [(C64, &'static str); 10] {
        let r = |x: f64| C64::new(x, 0.0);
        [
            (r(self.alpha22f), "alpha22F"),
            (r(self.alpha33f), "alpha33F"),
            (r(self.alpha11f), "alpha11F"),
            (self.alpha23f, "alpha23F"),
            (r(self.alpha22g), "alpha22G"),
            (r(self.alpha33g), "alpha33G"),
            (r(self.alpha11g), "alpha11G"),
            (self.alpha23g, "alpha23G"),
            (r(self.alpha44), "alpha44"),
            (self.alpha41, "alpha41"),
        ]
    }

    /// Largest relative deviation from `reference`, each entry scaled by the
    /// largest magnitude within its branch.
    pub fn max_relative_discrepancy(&self, reference: &SecondOrderCoefficients) -> f64 {
        let a = self.entries();
        let b = reference.entries();
        let f_scale = b[..4].iter().map(|e| e.0.norm()).fold(0.0, f64::max);
        let g_scale = b[4..9].iter().map(|e| e.0.norm()).fold(0.0, f64::max);
        let mut worst: f64 = 0.0;
        for (k, ((x, _), (y, _))) in a.iter().zip(b.iter()).enumerate() {
            let branch = if k < 4 {
                f_scale
            } else if k < 9 {
                g_scale
            } else {
                y.norm()
            };
            let denom = y.norm().max(1e-9 * branch).max(f64::MIN_POSITIVE);
            worst = worst.max((x - y).norm() / denom);
        }
        worst
    }
}

/// Which sign convention of the undefined auxiliary X3 the closed forms use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum X3Reading {
    /// X3 = 2 Im(|Ωc|²/d⁰32) = Γ23/X1.
    Direct,
    /// X3 = 2 Im(|Ωc|²/d⁰32*), the opposite sign.
    Conjugate,
}

/// Coefficients obtained from the order-by-order linear solves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleCoefficients {
    pub alpha12: C64,
    pub alpha13: C64,
    pub aux: SecondOrderCoefficients,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThirdOrderCoeffs {
    /// Cross-phase coefficient α12 (cm⁻¹·s²), multiplies Ωp|Ωa|².
    pub alpha12: C64,
    /// Stark coefficient α13 (cm⁻¹·cm²/V²), multiplies Ωp|Es|².
    pub alpha13: C64,
    pub aux: SecondOrderCoefficients,
    pub first: FirstOrder,
    pub x3: f64,
    pub x3_reading: X3Reading,
    pub oracle: OracleCoefficients,
    /// Largest relative closed-form/oracle discrepancy over the second-order
    /// coefficients under the accepted reading.
    pub aux_discrepancy: f64,
    pub alpha12_discrepancy: f64,
    /// Relative difference between the closed-form α13 (which shifts only
    /// d31) and the full Stark response including the shifted base state.
    pub alpha13_discrepancy: f64,
}

fn second_order_closed_form(
    first: &FirstOrder,
    drive: &LocalDrive,
    atom: &AtomParams,
    x3: f64,
) -> SecondOrderCoefficients {
    let d = TransitionDenominators::bare(&drive.detunings, atom);
    let oc = drive.omega_c;
    let g31 = atom.gamma31;
    let g13 = atom.gamma13;
    let g23 = atom.gamma23;
    let g4 = atom.gamma4();
    let big_gamma = g13 + g31;
    let d32 = d.at(3, 2);
    let denom = big_gamma * x3 - g31 * (g23 - x3);

    let alpha22f = (-2.0 * big_gamma * (oc.conj() * first.alpha21.conj() / d32).im
        - 2.0 * (g23 - x3) * first.alpha31.im)
        / denom;
    let alpha33f = (2.0 * first.alpha31.im - g31 * alpha22f) / big_gamma;
    let alpha11f = (g13 * alpha33f - 2.0 * first.alpha31.im) / g31;
    let alpha23f = (-first.alpha21 + oc.conj() * alpha33f - oc.conj() * alpha22f) / d32.conj();

    let alpha44 = 2.0 / g4 * first.alpha42.im;
    let alpha22g = (2.0 * big_gamma * (oc.conj() * first.alpha43.conj() / d32).im
        + 2.0 * g31 * (g23 - x3) * first.alpha42.im / g4)
        / denom;
    let alpha33g = (-g31 * alpha44 - g31 * alpha22g) / big_gamma;
    let alpha11g = g13 * alpha33g / g31;
    let alpha23g = (first.alpha43 + oc.conj() * alpha33g - oc.conj() * alpha22g) / d32.conj();
    let alpha41 = (first.alpha43 - first.alpha21) / d.at(4, 1);

    SecondOrderCoefficients {
        alpha22f,
        alpha33f,
        alpha11f,
        alpha23f,
        alpha22g,
        alpha33g,
        alpha11g,
        alpha23g,
        alpha44,
        alpha41,
    }
}

/// Order-by-order linear solves around the base state.
///
/// Each field enters the generator linearly, `L = L0 + λ Lp + μ La + ν Ls`
/// (probe and assisted amplitudes set to one, Stark term per unit Es²); the
/// coefficient ρ_(i,j,k) of λ^i μ^j ν^k solves
/// `L0 ρ = −Lp ρ_(i−1) − La ρ_(j−1) − Ls ρ_(k−1)` with zero trace.
pub struct PerturbationLadder {
    solver: StationarySolver,
    probe: Liouvillian,
    assisted: Liouvillian,
    stark: Liouvillian,
    rho0: StateVector,
}

impl PerturbationLadder {
    pub fn new(drive: &LocalDrive, atom: &AtomParams) -> Result<Self> {
        let base = base_drive(drive);
        let l0 = liouvillian(&base, atom);
        let solver = StationarySolver::new(&l0)?;
        let rho0 = steady_state(&base, atom)?.to_vector();
        let one = C64::new(1.0, 0.0);
        let probe = liouvillian(&base.with_probe(one), atom) - l0;
        let assisted = liouvillian(&base.with_assisted(one), atom) - l0;
        let mut stark = Liouvillian::zeros();
        for j in 1..=4 {
            for l in 1..=4 {
                if j != l {
                    let shift = TransitionDenominators::stark_increment(atom, 1.0, j, l);
                    // lower triangle carries +i d_jl, upper −i d_lj* = +i (α_row − α_col)/2ħ
                    stark[(idx(j, l), idx(j, l))] = C64::new(0.0, shift);
                }
            }
        }
        Ok(PerturbationLadder { solver, probe, assisted, stark, rho0 })
    }

    pub fn base(&self) -> DensityMatrix {
        DensityMatrix::from_vector(&self.rho0)
    }

    fn next(&self, source: StateVector) -> StateVector {
        self.solver.solve(&(-source), zero())
    }

    /// ρ linear in the probe amplitude (Ωp = 1).
    pub fn probe_linear(&self) -> StateVector {
        self.next(self.probe * self.rho0)
    }

    pub fn oracle(&self, kappa13: f64) -> OracleCoefficients {
        let rp = self.probe_linear();
        let ra = self.next(self.assisted * self.rho0);
        let rs = self.next(self.stark * self.rho0);
        let rpp = self.next(self.probe * rp);
        let raa = self.next(self.assisted * ra);
        let rap = self.next(self.assisted * rp + self.probe * ra);
        let raap = self.next(self.assisted * rap + self.probe * raa);
        let rsp = self.next(self.stark * rp + self.probe * rs);

        let aux = SecondOrderCoefficients {
            alpha22f: rpp[idx(2, 2)].re,
            alpha33f: rpp[idx(3, 3)].re,
            alpha11f: rpp[idx(1, 1)].re,
            alpha23f: rpp[idx(2, 3)],
            alpha22g: raa[idx(2, 2)].re,
            alpha33g: raa[idx(3, 3)].re,
            alpha11g: raa[idx(1, 1)].re,
            alpha23g: raa[idx(2, 3)],
            alpha44: raa[idx(4, 4)].re,
            alpha41: rap[idx(4, 1)],
        };
        OracleCoefficients {
            alpha12: kappa13 * raap[idx(3, 1)],
            alpha13: kappa13 * rsp[idx(3, 1)],
            aux,
        }
    }
}

fn relative(a: C64, b: C64) -> f64 {
    (a - b).norm() / b.norm().max(f64::MIN_POSITIVE)
}

/// Third-order potential coefficients α12 and α13 with the full ledger of
/// second-order auxiliaries.
///
/// The closed forms are evaluated under both readings of X3; the reading that
/// reproduces the linear-solve oracle within [`X3_TOLERANCE`] is accepted.
/// α22G drops the stray `2Γ Im(α42)` numerator term, which the stationary
/// population equations do not produce (the Γ24σ44 and Ωa-coupling terms
/// cancel).
pub fn third_order(drive: &LocalDrive, atom: &AtomParams) -> Result<ThirdOrderCoeffs> {
    if !(atom.gamma31 > 0.0) {
        return Err(EitError::PumpRequired);
    }
    let zeroth = zeroth_order(drive, atom)?;
    let first = first_order_from(&zeroth, drive, atom)?;
    let ladder = PerturbationLadder::new(drive, atom)?;
    let oracle = ladder.oracle(atom.kappa13);

    let x3_direct = x3_value(drive, atom);
    let readings = [(X3Reading::Direct, x3_direct), (X3Reading::Conjugate, -x3_direct)];
    let candidates = readings.map(|(reading, x3)| {
        let aux = second_order_closed_form(&first, drive, atom, x3);
        let disc = aux.max_relative_discrepancy(&oracle.aux);
        (reading, x3, aux, disc)
    });
    let best = candidates
        .iter()
        .filter(|c| c.3.is_finite())
        .min_by(|a, b| a.3.total_cmp(&b.3))
        .copied();
    let (x3_reading, x3, aux, aux_discrepancy) = match best {
        Some(c) if c.3 <= X3_TOLERANCE => c,
        _ => {
            return Err(EitError::AmbiguousClosedForm {
                discrepancy: [candidates[0].3, candidates[1].3],
                oracle: Box::new(oracle),
            })
        }
    };

    let d = TransitionDenominators::bare(&drive.detunings, atom);
    let oc = drive.omega_c;
    let kd1 = atom.kappa13 / first.d1;
    let alpha12 = -kd1 * oc * aux.alpha41 + kd1 * oc * aux.alpha23g + kd1 * d.at(2, 1) * (aux.alpha11g - aux.alpha33g);
    let dalpha = atom.polarizability[2] - atom.polarizability[0];
    let alpha13 = atom.kappa13 * dalpha / (2.0 * HBAR * first.d1) * d.at(2, 1) * first.alpha31;

    Ok(ThirdOrderCoeffs {
        alpha12,
        alpha13,
        aux,
        first,
        x3,
        x3_reading,
        oracle,
        aux_discrepancy,
        alpha12_discrepancy: relative(alpha12, oracle.alpha12),
        alpha13_discrepancy: relative(alpha13, oracle.alpha13),
    })
}

/// σ31 per unit probe Rabi frequency in the weak-probe limit at an arbitrary
/// local drive (assisted and Stark fields kept to all orders).
pub fn linear_probe_response(drive: &LocalDrive, atom: &AtomParams) -> Result<C64> {
    let base = LocalDrive { omega_p: zero(), ..*drive };
    let l0 = liouvillian(&base, atom);
    let solver = StationarySolver::new(&l0)?;
    let rho0 = solver.solve(&StateVector::zeros(), C64::new(1.0, 0.0));
    let probe = liouvillian(&base.with_probe(C64::new(1.0, 0.0)), atom) - l0;
    let rho1 = solver.solve(&(-(probe * rho0)), zero());
    Ok(rho1[idx(3, 1)])
}

/// One curve of the dispersion scan: control Rabi frequency and pump rate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImkVariant {
    pub id: usize,
    pub omega_c: f64,
    pub gamma31: f64,
}

/// The three curves (Ωc, Γ31) = (0, 0), (5×10⁷ s⁻¹, 0), (5×10⁷ s⁻¹, 0.7γ3)
/// with γ3 = Γ3/2.
pub fn standard_variants(atom: &AtomParams) -> Vec<ImkVariant> {
    let gamma3 = 0.5 * atom.gamma3();
    vec![
        ImkVariant { id: 0, omega_c: 0.0, gamma31: 0.0 },
        ImkVariant { id: 1, omega_c: 5e7, gamma31: 0.0 },
        ImkVariant { id: 2, omega_c: 5e7, gamma31: 0.7 * gamma3 },
    ]
}

/// Default scan grid: Δ3/γ3 ∈ [−6, 6] with 481 points.
pub fn standard_grid() -> Vec<f64> {
    (0..481).map(|k| -6.0 + 12.0 * k as f64 / 480.0).collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ImkRow {
    pub delta3_over_gamma3: f64,
    pub variant_id: usize,
    pub k: C64,
}

/// K along a one-photon detuning scan with Δ2 = Δ3, one block of rows per
/// variant in the order given.
pub fn imk_scan(
    detunings: &Detunings,
    atom: &AtomParams,
    delta3_grid: &[f64],
    variants: &[ImkVariant],
) -> Result<Vec<ImkRow>> {
    let gamma3 = 0.5 * atom.gamma3();
    let jobs: Vec<(ImkVariant, f64)> = variants
        .iter()
        .flat_map(|v| delta3_grid.iter().map(move |&x| (*v, x)))
        .collect();
    jobs.par_iter()
        .map(|&(v, x)| {
            let mut det = *detunings;
            det.0[1] = x * gamma3;
            det.0[2] = x * gamma3;
            let a = AtomParams { gamma31: v.gamma31, ..atom.clone() };
            let drive = LocalDrive::control_only(C64::new(v.omega_c, 0.0), det);
            let k = dispersion_k(&drive, &a)?;
            Ok(ImkRow { delta3_over_gamma3: x, variant_id: v.id, k })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn design_atom() -> AtomParams {
        let mut dph = [[0.0; 4]; 4];
        dph[0][1] = 500.0;
        dph[1][0] = 500.0;
        AtomParams {
            gamma13: 1.8e7,
            gamma23: 1.8e7,
            gamma24: 3.6e7,
            gamma31: 7.0e5,
            dephasing: dph,
            polarizability: [0.0, 0.0, 2.8e-35, 2.8e-35],
            p13: 2.5e-27,
            p24: 2.54e-27,
            kappa13: 2.06e11,
            omega_p: 2.37e15,
        }
    }

    fn design_drive() -> LocalDrive {
        LocalDrive::control_only(C64::new(4e8, 0.0), Detunings([0.0, -5e5, 5e8, 0.0]))
    }

    #[test]
    fn base_state_without_pump_is_ground() {
        let a = AtomParams { gamma31: 0.0, ..design_atom() };
        let z = zeroth_order(&LocalDrive::control_only(C64::new(5e7, 0.0), Detunings::default()), &a).unwrap();
        assert_eq!(z.sigma.populations(), [1.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn closed_form_base_state_matches_linear_solve() {
        let a = design_atom();
        let drive = design_drive();
        let z = zeroth_order(&drive, &a).unwrap();
        let closed = z.closed_form(&drive, &a).unwrap();
        let diff = closed.sub(&z.sigma).max_abs();
        assert!(diff < 1e-8 * z.sigma.max_abs(), "{diff}");
        let p = z.sigma.populations();
        assert!(p[1] > p[2] && p[2] > 0.0);
        assert!(p[3].abs() < 1e-15);
        assert!((p[0] + p[1] + p[2] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn base_coherence_shrinks_with_control() {
        let a = design_atom();
        let mut last = f64::INFINITY;
        for oc in [1e8, 2e8, 4e8, 8e8, 1.6e9, 3.2e9] {
            let drive = LocalDrive::control_only(C64::new(oc, 0.0), Detunings([0.0, 0.0, 0.0, 0.0]));
            let s32 = zeroth_order(&drive, &a).unwrap().sigma.at(3, 2).norm();
            assert!(s32 < last);
            last = s32;
        }
    }

    #[test]
    fn two_level_absorption_without_control() {
        let a = AtomParams {
            gamma31: 0.0,
            kappa13: 1e10,
            ..design_atom()
        };
        let drive = LocalDrive::control_only(C64::new(0.0, 0.0), Detunings::default());
        let k = dispersion_k(&drive, &a).unwrap();
        // K = −κ13/d31 with d31 = iγ31
        assert!((k.im - 1e10 / 1.8e7).abs() < 1e-9 * k.im);
        assert!((k.im - 555.6).abs() < 0.1);
        assert!(k.re.abs() < 1e-9);
    }

    #[test]
    fn first_order_identities() {
        let a = design_atom();
        let f = first_order(&design_drive(), &a).unwrap();
        assert!((f.alpha31 * a.kappa13 - f.k).norm() <= 1e-14 * f.k.norm());
        let d = TransitionDenominators::bare(&design_drive().detunings, &a);
        assert_eq!(f.d1, C64::new(1.6e17, 0.0) - d.at(2, 1) * d.at(3, 1));
        assert_eq!(f.d2, C64::new(1.6e17, 0.0) - d.at(4, 2) * d.at(4, 3));
        // α21 is dominated by −Ωc*(σ11 − σ33)/D1 at the design point
        assert!(f.alpha21.norm() > 1e-9 && f.alpha21.norm() < 1e-8);
    }

    #[test]
    fn no_pump_means_no_assisted_response() {
        let a = AtomParams { gamma31: 0.0, ..design_atom() };
        let f = first_order(&design_drive(), &a).unwrap();
        assert_eq!(f.alpha42, zero());
        assert_eq!(f.alpha43, zero());
    }

    #[test]
    fn first_order_matches_linear_solve() {
        let a = design_atom();
        let drive = design_drive();
        let f = first_order(&drive, &a).unwrap();
        let ladder = PerturbationLadder::new(&drive, &a).unwrap();
        let rp = DensityMatrix::from_vector(&ladder.probe_linear());
        assert!((rp.at(3, 1) - f.alpha31).norm() < 1e-8 * f.alpha31.norm());
        assert!((rp.at(2, 1) - f.alpha21).norm() < 1e-8 * f.alpha21.norm());
    }

    #[test]
    fn linear_response_reduces_to_first_order() {
        let a = design_atom();
        let f = first_order(&design_drive(), &a).unwrap();
        let r = linear_probe_response(&design_drive(), &a).unwrap();
        assert!((r - f.alpha31).norm() < 1e-8 * f.alpha31.norm());
    }

    #[test]
    fn third_order_requires_pump() {
        let a = AtomParams { gamma31: 0.0, ..design_atom() };
        assert!(matches!(third_order(&design_drive(), &a), Err(EitError::PumpRequired)));
    }

    #[test]
    fn second_order_closed_forms_match_oracle() {
        let a = design_atom();
        let t = third_order(&design_drive(), &a).unwrap();
        assert_eq!(t.x3_reading, X3Reading::Direct);
        assert!(t.aux_discrepancy < 1e-6, "{}", t.aux_discrepancy);
        assert!(t.alpha12_discrepancy < 1e-6, "{}", t.alpha12_discrepancy);
        // the conjugate reading does not reproduce the oracle
        let wrong = second_order_closed_form(&t.first, &design_drive(), &a, -t.x3);
        assert!(wrong.max_relative_discrepancy(&t.oracle.aux) > 1e-1);
    }

    #[test]
    fn stark_coefficient_phase_is_parameter_free() {
        let a = design_atom();
        let t = third_order(&design_drive(), &a).unwrap();
        let b = AtomParams { polarizability: [0.0, 0.0, 5.0e-35, 5.0e-35], ..design_atom() };
        let u = third_order(&design_drive(), &b).unwrap();
        let r1 = t.alpha13.im / t.alpha13.re;
        let r2 = u.alpha13.im / u.alpha13.re;
        assert!((r1 - r2).abs() < 1e-12);
        assert!((r1 - 0.03).abs() < 0.01, "{r1}");
    }

    #[test]
    fn imk_scan_layout() {
        let a = AtomParams { kappa13: 1e10, ..design_atom() };
        let grid = [-1.0, 0.0, 1.0];
        let rows = imk_scan(&Detunings::default(), &a, &grid, &standard_variants(&a)).unwrap();
        assert_eq!(rows.len(), 9);
        assert_eq!(rows[3].variant_id, 1);
        assert_eq!(rows[4].delta3_over_gamma3, 0.0);
    }
}
