//! Built-in parameter sets and TOML overrides.
//!
//! All physical values are in s⁻¹, cm and V/cm.

use serde::{Deserialize, Serialize};

use crate::atom::{AtomParams, Detunings, LocalDrive};
use crate::error::{EitError, Result};
use crate::potential::XiGrid;
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Preset {
    pub name: String,
    pub atom: AtomParams,
    /// Control Rabi frequency Ωc (s⁻¹, real).
    pub omega_c: f64,
    pub detunings: Detunings,
    /// Assisted field amplitude Ea0 (V/cm).
    pub ea0: f64,
    /// Stark field amplitude Es0 (V/cm).
    pub es0: f64,
    /// Lattice length scale R (cm).
    pub r_cm: f64,
    pub samples_per_period: usize,
    pub periods: usize,
    /// When set, (α3 − α1) is recomputed so that Re(g13) equals this value.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_re_g13: Option<f64>,
}

pub const NAMES: [&str; 2] = ["fig2", "design"];

/// (α3 − α1) reproducing Re(g13) = 1.00 at the design point (J·cm²/V²).
pub const DESIGN_POLARIZABILITY: f64 = 2.8392e-35;

fn shared_atom() -> AtomParams {
    let mut dephasing = [[0.0; 4]; 4];
    // 2γ2 = 10³ s⁻¹ as pure ground-state dephasing of σ21
    dephasing[0][1] = 500.0;
    dephasing[1][0] = 500.0;
    AtomParams {
        gamma13: 1.8e7,
        gamma23: 1.8e7,
        gamma24: 3.6e7,
        gamma31: 0.0,
        dephasing,
        polarizability: [0.0; 4],
        p13: 2.5e-27,
        p24: 2.54e-27,
        kappa13: 1.0e10,
        omega_p: 2.37e15,
    }
}

impl Preset {
    /// Dispersion scan set: Γ3 = 3.6×10⁷ s⁻¹, κ13 = 10¹⁰ cm⁻¹s⁻¹, no fields
    /// beyond the control (Ωc and Γ31 come from the scan variants).
    pub fn fig2() -> Self {
        Preset {
            name: "fig2".into(),
            atom: shared_atom(),
            omega_c: 0.0,
            detunings: Detunings::default(),
            ea0: 0.0,
            es0: 0.0,
            r_cm: 2.5e-3,
            samples_per_period: 512,
            periods: 1,
            calibrate_re_g13: None,
        }
    }

    /// Balanced PT lattice design point.
    pub fn design() -> Self {
        let d = DESIGN_POLARIZABILITY;
        Preset {
            name: "design".into(),
            atom: AtomParams {
                gamma31: 7.0e5,
                kappa13: 2.06e11,
                polarizability: [0.0, 0.0, d, d],
                ..shared_atom()
            },
            omega_c: 4.0e8,
            detunings: Detunings([0.0, -5.0e5, 5.0e8, 0.0]),
            ea0: 0.1,
            es0: 4.51e5,
            r_cm: 2.5e-3,
            samples_per_period: 512,
            periods: 1,
            calibrate_re_g13: Some(1.0),
        }
    }

    pub fn by_name(name: &str) -> Result<Self> {
        let key = name.to_ascii_lowercase();
        match key.strip_prefix("preset-").unwrap_or(&key) {
            "fig2" => Ok(Self::fig2()),
            "design" => Ok(Self::design()),
            _ => Err(EitError::UnknownPreset(name.to_string())),
        }
    }

    /// Applies a TOML document whose tables mirror the preset fields; only the
    /// keys present are replaced.
    pub fn with_overrides(&self, doc: &toml::Table) -> Result<Self> {
        let mut base = toml::Table::try_from(self).map_err(|e| EitError::Parse(e.to_string()))?;
        merge(&mut base, doc);
        let merged: Preset = base.try_into().map_err(|e: toml::de::Error| EitError::Parse(e.to_string()))?;
        merged.validate()?;
        Ok(merged)
    }

    pub fn validate(&self) -> Result<()> {
        self.atom.validate()?;
        let finite = [self.omega_c, self.ea0, self.es0, self.r_cm]
            .iter()
            .chain(self.detunings.0.iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(EitError::InvalidArgument(format!("preset {} has non-finite field values", self.name)));
        }
        if !(self.r_cm > 0.0) {
            return Err(EitError::InvalidArgument(format!("R must be positive, got {}", self.r_cm)));
        }
        self.grid().map(|_| ())
    }

    pub fn grid(&self) -> Result<XiGrid> {
        XiGrid::new(self.samples_per_period * self.periods, self.periods)
    }

    /// Drive with the control field only.
    pub fn base_drive(&self) -> LocalDrive {
        LocalDrive::control_only(C64::new(self.omega_c, 0.0), self.detunings)
    }
}

fn merge(base: &mut toml::Table, over: &toml::Table) {
    for (k, v) in over {
        match (base.get_mut(k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            _ => {
                base.insert(k.clone(), v.clone());
            }
        }
    }
}
