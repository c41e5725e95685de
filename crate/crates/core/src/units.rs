//! Unit conventions.
//!
//! All internal computation uses natural units with hbar^2/(2m) = 1: lengths
//! carry an arbitrary (consistent) unit and energies carry inverse length
//! squared, so the twist rate omega is the only scale in the problem.
//! [`UnitSystem`] converts energies at the boundary and supplies the physical
//! constants needed for thermal estimates.

use crate::error::{Error, Result};

/// SI physical constants used in dimensional mode.
pub mod constants {
    /// Boltzmann constant, J/K (exact, 2019 SI).
    pub const BOLTZMANN: f64 = 1.380649e-23;
    /// Reduced Planck constant, J*s.
    pub const HBAR: f64 = 1.054571817e-34;
    /// Electron mass, kg.
    pub const ELECTRON_MASS: f64 = 9.1093837015e-31;
}

/// Energy/unit convention for inputs and outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum UnitSystem {
    /// hbar^2/(2m) = 1; energies in inverse length squared.
    Natural,
    /// SI quantities; energies in joules, lengths in meters.
    Dimensional { hbar: f64, mass: f64 },
}

impl UnitSystem {
    pub fn natural() -> Self {
        UnitSystem::Natural
    }

    pub fn dimensional(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0) || !(mass > 0.0) {
            return Err(Error::InvalidInput(format!(
                "dimensional units need hbar > 0 and mass > 0, got hbar={hbar}, mass={mass}"
            )));
        }
        Ok(UnitSystem::Dimensional { hbar, mass })
    }

    /// Factor converting a natural-unit energy (inverse length squared) to
    /// this system's energy unit: hbar^2/(2m), or 1 in natural mode.
    pub fn energy_scale(&self) -> f64 {
        match self {
            UnitSystem::Natural => 1.0,
            UnitSystem::Dimensional { hbar, mass } => hbar * hbar / (2.0 * mass),
        }
    }

    pub fn is_dimensional(&self) -> bool {
        matches!(self, UnitSystem::Dimensional { .. })
    }
}

/// Twist rate whose characteristic energy hbar^2 omega^2 / (2m) matches k_B T.
///
/// Requires dimensional units; the natural convention has no temperature map.
pub fn thermal_twist_scale(temperature: f64, units: &UnitSystem) -> Result<f64> {
    let UnitSystem::Dimensional { hbar, mass } = units else {
        return Err(Error::DimensionalUnitsRequired(
            "thermal twist scale needs hbar and mass".into(),
        ));
    };
    if !(temperature > 0.0) {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    Ok((2.0 * mass * constants::BOLTZMANN * temperature).sqrt() / hbar)
}
