//! Elastic-vs-electronic energy balance of the twisted strip.
//!
//! Twisting costs elastic energy (1/2) C* omega^2 per unit length but lowers
//! the occupied single-particle levels; this module fills the N lowest levels
//! at T = 0 with periodic longitudinal quantization k_x = 2 pi j / L and spin
//! degeneracy, and scans the total energy over twist rates.

use crate::error::{Error, Result};
use crate::geometry::{StripGeometry, TransverseMode};
use crate::spectrum::{discretize, run_maybe_parallel, TransverseGrid};
use crate::units::UnitSystem;
use rayon::prelude::*;
use serde::Serialize;

const J_CAP: usize = 4096;
const TRANSVERSE_CAP: usize = 256;

/// Filling scenario: geometry with scanned twist, torsional stiffness,
/// electron count, and optional temperature for thermal-window diagnostics.
/// k_x is quantized periodically, k_x = 2 pi j / L.
#[derive(Debug, Clone, Copy)]
pub struct StabilityScenario {
    pub geometry: StripGeometry,
    /// Torsional constant C*; elastic energy density is (1/2) C* omega^2.
    pub torsional_constant: f64,
    pub electron_count: usize,
    pub spin_degeneracy: usize,
    pub temperature: Option<f64>,
}

impl StabilityScenario {
    pub fn new(
        geometry: StripGeometry,
        torsional_constant: f64,
        electron_count: usize,
    ) -> Result<Self> {
        if !(torsional_constant >= 0.0) || !torsional_constant.is_finite() {
            return Err(Error::InvalidInput(format!(
                "torsional constant must be nonnegative, got {torsional_constant}"
            )));
        }
        Ok(StabilityScenario {
            geometry,
            torsional_constant,
            electron_count,
            spin_degeneracy: 2,
            temperature: None,
        })
    }

    pub fn with_spin_degeneracy(mut self, spin: usize) -> Result<Self> {
        if spin == 0 {
            return Err(Error::InvalidInput("spin degeneracy must be >= 1".into()));
        }
        self.spin_degeneracy = spin;
        Ok(self)
    }

    pub fn with_temperature(mut self, temperature: f64) -> Result<Self> {
        if !(temperature > 0.0) {
            return Err(Error::InvalidInput(format!(
                "temperature must be positive, got {temperature}"
            )));
        }
        self.temperature = Some(temperature);
        Ok(self)
    }

    fn geometry_at(&self, omega: f64) -> Result<StripGeometry> {
        StripGeometry::with_twist_rate(
            omega,
            self.geometry.total_length(),
            self.geometry.width(),
        )
    }
}

/// Elastic cost of twisting the whole strip: (1/2) C* omega^2 L.
pub fn elastic_energy(scenario: &StabilityScenario, omega: f64) -> f64 {
    0.5 * scenario.torsional_constant * omega * omega * scenario.geometry.total_length()
}

/// One occupied single-particle group in the T = 0 filling.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct OccupiedLevel {
    pub energy: f64,
    /// |j| of k_x = 2 pi j / L.
    pub kx_index: usize,
    pub k_x: f64,
    pub transverse_index: usize,
    /// Electrons placed in this (|k_x|, m) group (up to spin x 2 for j > 0).
    pub occupancy: usize,
}

/// Result of the T = 0 filling at one twist rate.
#[derive(Debug, Clone, Serialize)]
pub struct FillingResult {
    pub total_energy: f64,
    pub occupied: Vec<OccupiedLevel>,
    pub fermi_energy: f64,
    pub kx_index_max: usize,
    pub transverse_budget: usize,
}

/// Fill the N lowest levels among { E_m(k_x) : k_x = 2 pi j / L } at twist
/// rate `omega`. Each (j, m) group holds spin electrons for j = 0 and
/// 2 x spin for j > 0 (the +-j degeneracy); ties are broken by (|k_x|, m).
/// The k_x and m budgets grow until every uncomputed candidate level provably
/// lies above the Fermi level by a factor-2 safety margin.
pub fn fill_levels(
    scenario: &StabilityScenario,
    omega: f64,
    grid: &TransverseGrid,
) -> Result<FillingResult> {
    let n_electrons = scenario.electron_count;
    if n_electrons == 0 {
        return Ok(FillingResult {
            total_energy: 0.0,
            occupied: Vec::new(),
            fermi_energy: f64::NEG_INFINITY,
            kx_index_max: 0,
            transverse_budget: 0,
        });
    }
    let geometry = scenario.geometry_at(omega)?;
    let length = geometry.total_length();
    let spin = scenario.spin_degeneracy;

    let unknowns = grid.points() - 2;
    let mut m_budget = 4usize
        .max(n_electrons / spin)
        .min(unknowns)
        .min(TRANSVERSE_CAP);

    'outer: loop {
        // (energy, j, m, multiplicity), grown in j until the budget check holds
        let mut levels: Vec<(f64, usize, usize, usize)> = Vec::new();
        let mut j = 0usize;
        let mut last_ground = f64::NEG_INFINITY;
        loop {
            let k_x = 2.0 * std::f64::consts::PI * j as f64 / length;
            let mode = TransverseMode::from_wavenumber(k_x, &geometry)?;
            let operator = discretize(grid, &geometry, &mode);
            let energies = operator.matrix().lowest_eigenvalues(m_budget);
            let multiplicity = spin * if j == 0 { 1 } else { 2 };
            for (m, &energy) in energies.iter().enumerate() {
                levels.push((energy, j, m, multiplicity));
            }
            last_ground = energies[0];

            let pool: usize = levels.iter().map(|l| l.3).sum();
            if pool >= n_electrons {
                let fermi = fermi_energy(&levels, n_electrons);
                // factor-2 margin: nothing at larger |k_x| can dip below E_F
                if last_ground > fermi + fermi.abs() {
                    // reject silently truncated m: the last computed level at
                    // every included k_x must also clear the margin
                    if m_budget < unknowns.min(TRANSVERSE_CAP) {
                        let mut max_of_last = f64::INFINITY;
                        for jj in 0..=j {
                            let last = levels
                                .iter()
                                .filter(|l| l.1 == jj)
                                .map(|l| l.0)
                                .fold(f64::NEG_INFINITY, f64::max);
                            max_of_last = max_of_last.min(last);
                        }
                        if max_of_last <= fermi + fermi.abs() {
                            m_budget = (m_budget * 2).min(unknowns).min(TRANSVERSE_CAP);
                            continue 'outer;
                        }
                    }
                    break;
                }
            }
            j += 1;
            if j > J_CAP {
                return Err(Error::LevelBudget(format!(
                    "k_x index exceeded {J_CAP} while filling {n_electrons} electrons \
                     (last ground energy {last_ground:.6e})"
                )));
            }
        }

        levels.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
        let mut total = 0.0;
        let mut left = n_electrons;
        let mut occupied = Vec::new();
        let mut fermi = f64::NEG_INFINITY;
        let mut kx_index_max = 0;
        for &(energy, j, m, multiplicity) in &levels {
            if left == 0 {
                break;
            }
            let take = left.min(multiplicity);
            total += take as f64 * energy;
            occupied.push(OccupiedLevel {
                energy,
                kx_index: j,
                k_x: 2.0 * std::f64::consts::PI * j as f64 / length,
                transverse_index: m,
                occupancy: take,
            });
            fermi = energy;
            kx_index_max = kx_index_max.max(j);
            left -= take;
        }
        if left > 0 {
            return Err(Error::LevelBudget(format!(
                "requested {n_electrons} electrons but only {} level slots computed",
                n_electrons - left
            )));
        }
        return Ok(FillingResult {
            total_energy: total,
            occupied,
            fermi_energy: fermi,
            kx_index_max,
            transverse_budget: m_budget,
        });
    }
}

fn fermi_energy(levels: &[(f64, usize, usize, usize)], n_electrons: usize) -> f64 {
    let mut sorted: Vec<&(f64, usize, usize, usize)> = levels.iter().collect();
    sorted.sort_by(|a, b| (a.0, a.1, a.2).partial_cmp(&(b.0, b.1, b.2)).unwrap());
    let mut left = n_electrons;
    for level in sorted {
        let take = left.min(level.3);
        left -= take;
        if left == 0 {
            return level.0;
        }
    }
    f64::INFINITY
}

/// Total electronic energy of the N lowest levels at twist rate `omega`.
pub fn electronic_energy(
    scenario: &StabilityScenario,
    omega: f64,
    grid: &TransverseGrid,
) -> Result<f64> {
    Ok(fill_levels(scenario, omega, grid)?.total_energy)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanRow {
    pub omega: f64,
    pub elastic: f64,
    pub electronic: f64,
    pub total: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanTable {
    pub rows: Vec<ScanRow>,
    /// Twist rate minimizing the total energy.
    pub omega_star: f64,
    pub total_star: f64,
    /// Total energy of the flat baseline omega = 0.
    pub total_flat: f64,
    /// Whether the optimum beats the flat strip.
    pub twist_favored: bool,
}

/// Scan total = elastic + electronic over twist rates. `omega_values` must
/// include the flat baseline 0; rows come back sorted by omega.
pub fn total_energy_scan(
    scenario: &StabilityScenario,
    omega_values: &[f64],
    grid: &TransverseGrid,
    threads: Option<usize>,
) -> Result<ScanTable> {
    if !omega_values.contains(&0.0) {
        return Err(Error::InvalidInput(
            "the scan must include omega = 0 as the flat baseline".into(),
        ));
    }
    if omega_values.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(Error::InvalidInput(
            "twist rates must be finite and nonnegative".into(),
        ));
    }
    let mut omegas = omega_values.to_vec();
    omegas.sort_by(f64::total_cmp);
    omegas.dedup();

    let rows: Vec<ScanRow> = run_maybe_parallel(threads, || {
        omegas
            .par_iter()
            .map(|&omega| -> Result<ScanRow> {
                let elastic = elastic_energy(scenario, omega);
                let electronic = electronic_energy(scenario, omega, grid)?;
                Ok(ScanRow {
                    omega,
                    elastic,
                    electronic,
                    total: elastic + electronic,
                })
            })
            .collect::<Result<_>>()
    })?;

    let best = rows
        .iter()
        .min_by(|a, b| a.total.total_cmp(&b.total))
        .expect("scan has at least the flat row");
    let flat = rows.iter().find(|r| r.omega == 0.0).expect("flat baseline");
    Ok(ScanTable {
        omega_star: best.omega,
        total_star: best.total,
        total_flat: flat.total,
        twist_favored: best.total < flat.total && best.omega > 0.0,
        rows,
    })
}

/// Fraction of occupied electrons with |k_x| <= omega/4, the regime where the
/// net potential keeps an attractive branch. Needs a positive temperature and
/// dimensional units (the thermal window hbar^2 omega^2 / 2m ~ k_B T is what
/// singles out this omega).
pub fn occupied_fraction_below_thermal(
    scenario: &StabilityScenario,
    omega: f64,
    grid: &TransverseGrid,
    units: &UnitSystem,
) -> Result<f64> {
    if !units.is_dimensional() {
        return Err(Error::DimensionalUnitsRequired(
            "the thermal window needs dimensional units".into(),
        ));
    }
    let Some(temperature) = scenario.temperature else {
        return Err(Error::InvalidInput(
            "scenario has no temperature; set one to use the thermal window".into(),
        ));
    };
    if !(temperature > 0.0) {
        return Err(Error::InvalidInput(format!(
            "temperature must be positive, got {temperature}"
        )));
    }
    if scenario.electron_count == 0 {
        return Err(Error::InvalidInput(
            "occupied fraction is undefined for zero electrons".into(),
        ));
    }
    let filling = fill_levels(scenario, omega, grid)?;
    let below: usize = filling
        .occupied
        .iter()
        .filter(|l| l.k_x.abs() <= omega / 4.0 + 1e-15)
        .map(|l| l.occupancy)
        .sum();
    Ok(below as f64 / scenario.electron_count as f64)
}
