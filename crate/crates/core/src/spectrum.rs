//! Floquet-Bloch propagation constants of a π-periodic complex potential.
//!
//! Substituting u = φ(ξ)e^{iβs} into the envelope equation gives
//! βφ = φ″ + Vφ. In the basis e^{i(q+2m)ξ}, |m| ≤ (n_plane_waves − 1)/2,
//! the operator is the dense matrix A[m′, m] = −(q + 2m)²δ + c_{m′−m}, where
//! c_k is the coefficient of e^{2ikξ} in V.

use nalgebra::linalg::Schur;
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{EitError, Result};
use crate::potential::{Harmonics, PotentialSpec};
use crate::C64;

/// Max |Im β| above which the spectrum counts as broken.
pub const BREAKING_THRESHOLD: f64 = 1e-6;

/// Width of the final bisection bracket of [`pt_threshold`].
pub const THRESHOLD_RESOLUTION: f64 = 1e-3;

#[derive(Clone, Debug, PartialEq)]
pub struct BandStructure {
    pub q: Vec<f64>,
    /// beta[band][q], bands ordered by descending Re β.
    pub beta: Vec<Vec<C64>>,
    pub n_bands: usize,
    pub n_plane_waves: usize,
}

impl BandStructure {
    pub fn max_imag(&self) -> f64 {
        self.beta.iter().flatten().map(|b| b.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_real(&self) -> f64 {
        self.beta.iter().flatten().map(|b| b.re.abs()).fold(0.0, f64::max)
    }

    /// All β at the k-th q sample, in band order.
    pub fn at_q(&self, k: usize) -> Vec<C64> {
        self.beta.iter().map(|band| band[k]).collect()
    }

    /// Real within 10⁻⁸ of max |Re β|.
    pub fn is_real(&self) -> bool {
        self.max_imag() <= 1e-8 * self.max_real().max(1.0)
    }
}

/// q_k = −1 + 2k/n, k = 0..n: the first Brillouin zone [−1, 1).
pub fn standard_q_grid(n: usize) -> Vec<f64> {
    (0..n).map(|k| -1.0 + 2.0 * k as f64 / n as f64).collect()
}

/// Fourier coefficients c_k of e^{2ikξ}, |k| ≤ `max_order`.
#[derive(Clone, Debug, PartialEq)]
pub struct FourierSeries {
    max_order: usize,
    coefficients: Vec<C64>,
}

impl FourierSeries {
    pub fn from_harmonics(h: &Harmonics, max_order: usize) -> Self {
        let coefficients = (-(max_order as i64)..=max_order as i64).map(|m| h.coefficient(m)).collect();
        FourierSeries { max_order, coefficients }
    }

    pub fn get(&self, k: i64) -> C64 {
        if k.unsigned_abs() as usize > self.max_order {
            C64::new(0.0, 0.0)
        } else {
            self.coefficients[(k + self.max_order as i64) as usize]
        }
    }

    /// The constant and ±2 harmonics.
    pub fn harmonics(&self) -> Harmonics {
        Harmonics { c0: self.get(0), c_plus2: self.get(1), c_minus2: self.get(-1) }
    }
}

/// Fourier content of `spec` up to |k| ≤ `max_order`: exact when the
/// harmonics are known, otherwise a DFT over one period of samples.
pub fn fourier_series(spec: &PotentialSpec, max_order: usize) -> Result<FourierSeries> {
    let g = spec.grid;
    let per = g.samples_per_period().ok_or_else(|| {
        EitError::PeriodMismatch(format!("{} samples do not divide into {} periods", g.n, g.periods))
    })?;
    if spec.values.len() != g.n {
        return Err(EitError::GridMismatch(format!("{} samples on a grid of {}", spec.values.len(), g.n)));
    }
    let tol = 1e-10 * spec.max_abs().max(1.0);
    for j in per..g.n {
        if (spec.values[j] - spec.values[j - per]).norm() > tol {
            return Err(EitError::PeriodMismatch(format!(
                "V(ξ + π) ≠ V(ξ) at ξ = {:.6} (difference {:.3e})",
                g.xi(j - per),
                (spec.values[j] - spec.values[j - per]).norm()
            )));
        }
    }
    if let Some(h) = &spec.harmonics {
        return Ok(FourierSeries::from_harmonics(h, max_order));
    }
    let coefficients = (-(max_order as i64)..=max_order as i64)
        .map(|k| {
            if 2 * k.unsigned_abs() as usize >= per {
                return C64::new(0.0, 0.0);
            }
            (0..per)
                .map(|j| spec.values[j] * C64::from_polar(1.0, -2.0 * k as f64 * g.xi(j)))
                .sum::<C64>()
                / per as f64
        })
        .collect();
    Ok(FourierSeries { max_order, coefficients })
}

/// Plane-wave matrix of d²/dξ² + V at quasimomentum q.
pub fn bloch_matrix(series: &FourierSeries, q: f64, n_plane_waves: usize) -> DMatrix<C64> {
    let half = (n_plane_waves / 2) as i64;
    DMatrix::from_fn(n_plane_waves, n_plane_waves, |r, c| {
        let mr = r as i64 - half;
        let mc = c as i64 - half;
        let mut v = series.get(mr - mc);
        if r == c {
            let k = q + 2.0 * mc as f64;
            v -= k * k;
        }
        v
    })
}

fn is_triangular(m: &DMatrix<C64>, upper: bool) -> bool {
    let n = m.nrows();
    (0..n).all(|r| (0..n).all(|c| if upper { r <= c } else { r >= c } || m[(r, c)] == C64::new(0.0, 0.0)))
}

fn schur(m: DMatrix<C64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    if is_triangular(&m, true) {
        return Ok((DMatrix::identity(m.nrows(), m.ncols()), m));
    }
    Schur::try_new(m, 1e-15, 10_000)
        .map(|s| s.unpack())
        .ok_or_else(|| EitError::InvalidArgument("Schur iteration did not converge".into()))
}

pub fn eigenvalues(m: DMatrix<C64>) -> Result<Vec<C64>> {
    if is_triangular(&m, false) {
        return Ok(m.diagonal().iter().copied().collect());
    }
    let (_, t) = schur(m)?;
    Ok((0..t.nrows()).map(|k| t[(k, k)]).collect())
}

/// Eigenpairs by complex Schur decomposition and back-substitution; vectors
/// are unit-normalized.
pub fn eigenpairs(m: DMatrix<C64>) -> Result<Vec<(C64, DVector<C64>)>> {
    let n = m.nrows();
    let scale = m.iter().map(|z| z.norm()).fold(0.0, f64::max).max(1.0);
    let (q, t) = schur(m)?;
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let lambda = t[(k, k)];
        let mut y = DVector::<C64>::zeros(n);
        y[k] = C64::new(1.0, 0.0);
        for i in (0..k).rev() {
            let s: C64 = (i + 1..=k).map(|j| t[(i, j)] * y[j]).sum();
            let mut d = t[(i, i)] - lambda;
            if d.norm() < 1e-14 * scale {
                d = C64::new(1e-14 * scale, 0.0);
            }
            y[i] = -s / d;
        }
        let v = &q * y;
        let norm = v.norm();
        out.push((lambda, v / C64::new(norm, 0.0)));
    }
    Ok(out)
}

fn check_plane_waves(n: usize) -> Result<()> {
    if n % 2 == 0 || n < 33 {
        return Err(EitError::InvalidArgument(format!("the plane-wave count must be odd and ≥ 33, got {n}")));
    }
    Ok(())
}

/// All propagation constants β(q) of `spec`, labelled by descending Re β with
/// near-degenerate groups ordered by eigenvector overlap with the previous q.
pub fn bloch_bands(spec: &PotentialSpec, n_plane_waves: usize, q_grid: &[f64]) -> Result<BandStructure> {
    check_plane_waves(n_plane_waves)?;
    let series = fourier_series(spec, n_plane_waves - 1)?;
    let pairs = q_grid
        .par_iter()
        .map(|&q| eigenpairs(bloch_matrix(&series, q, n_plane_waves)))
        .collect::<Result<Vec<_>>>()?;

    let mut beta = vec![Vec::with_capacity(q_grid.len()); n_plane_waves];
    let mut previous: Option<Vec<DVector<C64>>> = None;
    for mut set in pairs {
        let scale = set.iter().map(|p| p.0.re.abs()).fold(1.0, f64::max);
        set.sort_by(|a, b| b.0.re.total_cmp(&a.0.re).then(b.0.im.total_cmp(&a.0.im)));
        if let Some(prev) = &previous {
            let mut start = 0;
            while start < set.len() {
                let mut end = start + 1;
                while end < set.len() && (set[end - 1].0.re - set[end].0.re).abs() <= 1e-9 * scale {
                    end += 1;
                }
                if end - start > 1 {
                    order_by_overlap(&mut set[start..end], &prev[start..end]);
                }
                start = end;
            }
        }
        for (band, (b, _)) in set.iter().enumerate() {
            beta[band].push(*b);
        }
        previous = Some(set.into_iter().map(|p| p.1).collect());
    }
    Ok(BandStructure { q: q_grid.to_vec(), beta, n_bands: n_plane_waves, n_plane_waves })
}

fn order_by_overlap(group: &mut [(C64, DVector<C64>)], prev: &[DVector<C64>]) {
    let mut taken = vec![false; group.len()];
    let mut order = Vec::with_capacity(group.len());
    for p in prev {
        let best = (0..group.len())
            .filter(|&k| !taken[k])
            .max_by(|&a, &b| p.dotc(&group[a].1).norm().total_cmp(&p.dotc(&group[b].1).norm()))
            .expect("group and previous have equal length");
        taken[best] = true;
        order.push(group[best].clone());
    }
    group.clone_from_slice(&order);
}

/// Potentials V_W = c0 + C cos 2ξ + (Re S + i·W·A) sin 2ξ, where C and S are
/// the cos 2ξ and sin 2ξ amplitudes of the base potential and A = Re C.
/// W = 1 puts the imaginary sin 2ξ amplitude equal to the real cos 2ξ one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdFamily {
    pub base: Harmonics,
    pub amplitude: f64,
}

impl ThresholdFamily {
    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        let h = fourier_series(spec, 1)?.harmonics();
        let amplitude = h.cos2().re;
        if amplitude == 0.0 {
            return Err(EitError::InvalidArgument("the potential has no real cos 2ξ component to scale against".into()));
        }
        Ok(ThresholdFamily { base: h, amplitude })
    }

    /// W of the base potential itself, Im S / A.
    pub fn design_w(&self) -> f64 {
        self.base.sin2().im / self.amplitude
    }

    pub fn member(&self, w: f64) -> Harmonics {
        Harmonics::from_trig(
            self.base.c0,
            self.base.cos2(),
            C64::new(self.base.sin2().re, w * self.amplitude),
        )
    }

    pub fn max_imag(&self, w: f64, n_plane_waves: usize, q_grid: &[f64]) -> Result<f64> {
        let series = FourierSeries::from_harmonics(&self.member(w), 1);
        let values = q_grid
            .par_iter()
            .map(|&q| eigenvalues(bloch_matrix(&series, q, n_plane_waves)))
            .collect::<Result<Vec<_>>>()?;
        Ok(values.iter().flatten().map(|b| b.im.abs()).fold(0.0, f64::max))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdReport {
    pub w_c: f64,
    pub design_w: f64,
    /// (W, max |Im β|) for every grid point and bisection midpoint evaluated.
    pub samples: Vec<(f64, f64)>,
}

/// Smallest W on `w_grid` with max |Im β| > 10⁻⁶, refined by bisection to
/// 10⁻³.
pub fn pt_threshold(spec: &PotentialSpec, w_grid: &[f64], n_plane_waves: usize, q_grid: &[f64]) -> Result<ThresholdReport> {
    check_plane_waves(n_plane_waves)?;
    if w_grid.is_empty() || w_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(EitError::InvalidArgument("the W grid must be non-empty and increasing".into()));
    }
    let family = ThresholdFamily::from_spec(spec)?;
    let mut samples = Vec::new();
    let mut lower = None;
    let mut upper = None;
    for &w in w_grid {
        let m = family.max_imag(w, n_plane_waves, q_grid)?;
        samples.push((w, m));
        if m > BREAKING_THRESHOLD {
            upper = Some(w);
            break;
        }
        lower = Some(w);
    }
    let Some(mut hi) = upper else {
        let (w_max, max_im) = *samples.last().expect("grid is non-empty");
        return Err(EitError::NoThresholdFound { w_max, max_im });
    };
    if let Some(mut lo) = lower {
        while hi - lo > THRESHOLD_RESOLUTION {
            let mid = 0.5 * (lo + hi);
            let m = family.max_imag(mid, n_plane_waves, q_grid)?;
            samples.push((mid, m));
            if m > BREAKING_THRESHOLD {
                hi = mid;
            } else {
                lo = mid;
            }
        }
    }
    Ok(ThresholdReport { w_c: hi, design_w: family.design_w(), samples })
}
