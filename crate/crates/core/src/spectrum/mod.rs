//! Transverse eigenproblem on xi in [0, D]: discretization, the k lowest
//! bound states, localization observables, and the dispersion table.

mod numerov;
mod tridiag;

pub use numerov::{shoot, shooting_eigenvalue, ShotDiagnostics};
pub use tridiag::SymmetricTridiagonal;

use crate::error::{Error, Result};
use crate::geometry::{net_potential, StripGeometry, TransverseMode};
use rayon::prelude::*;

/// Wall condition at a strip edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundaryCondition {
    Dirichlet,
    Neumann,
}

/// Uniform grid on [0, D] including both endpoints.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseGrid {
    width: f64,
    points: usize,
    bc_left: BoundaryCondition,
    bc_right: BoundaryCondition,
}

impl TransverseGrid {
    /// Hard-wall (Dirichlet/Dirichlet) grid, the default for strip edges.
    pub fn new(width: f64, points: usize) -> Result<Self> {
        Self::with_boundaries(
            width,
            points,
            BoundaryCondition::Dirichlet,
            BoundaryCondition::Dirichlet,
        )
    }

    pub fn with_boundaries(
        width: f64,
        points: usize,
        bc_left: BoundaryCondition,
        bc_right: BoundaryCondition,
    ) -> Result<Self> {
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "grid width must be positive and finite, got {width}"
            )));
        }
        if points < 3 {
            return Err(Error::InvalidGrid(format!(
                "grid needs at least 3 points, got {points}"
            )));
        }
        Ok(TransverseGrid {
            width,
            points,
            bc_left,
            bc_right,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn points(&self) -> usize {
        self.points
    }

    pub fn spacing(&self) -> f64 {
        self.width / (self.points - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        self.width * i as f64 / (self.points - 1) as f64
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.points).map(|i| self.node(i))
    }

    pub fn bc_left(&self) -> BoundaryCondition {
        self.bc_left
    }

    pub fn bc_right(&self) -> BoundaryCondition {
        self.bc_right
    }

    /// Same interval with intervals doubled (points 2(p-1)+1).
    pub fn refined(&self) -> TransverseGrid {
        TransverseGrid {
            points: 2 * (self.points - 1) + 1,
            ..*self
        }
    }
}

/// Discretized -d^2/dxi^2 + U(xi): a symmetric tridiagonal operator over the
/// unknown nodes (interior for Dirichlet walls; Neumann walls keep their
/// boundary node via a symmetrized ghost-point row).
#[derive(Debug, Clone)]
pub struct TridiagonalOperator {
    matrix: SymmetricTridiagonal,
    grid: TransverseGrid,
    /// Potential at every grid node, boundaries included.
    potential: Vec<f64>,
    first_unknown: usize,
}

impl TridiagonalOperator {
    pub fn matrix(&self) -> &SymmetricTridiagonal {
        &self.matrix
    }

    pub fn grid(&self) -> &TransverseGrid {
        &self.grid
    }

    pub fn potential(&self) -> &[f64] {
        &self.potential
    }

    pub fn potential_min(&self) -> f64 {
        self.potential.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    pub fn unknown_count(&self) -> usize {
        self.matrix.order()
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.matrix.sturm_count(lambda)
    }

    /// Embed an operator-space vector into the full grid, undoing the
    /// Neumann symmetrization scaling at kept boundary nodes.
    fn embed(&self, v: &[f64]) -> Vec<f64> {
        let n = self.grid.points();
        let mut f = vec![0.0; n];
        for (j, &value) in v.iter().enumerate() {
            f[self.first_unknown + j] = value;
        }
        if self.grid.bc_left() == BoundaryCondition::Neumann {
            f[0] *= std::f64::consts::SQRT_2;
        }
        if self.grid.bc_right() == BoundaryCondition::Neumann {
            f[n - 1] *= std::f64::consts::SQRT_2;
        }
        f
    }

    /// Quadrature weight of grid node i for normalization (trapezoid rule;
    /// the half weights matter only for kept Neumann boundary nodes).
    fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.grid.points() - 1 {
            0.5
        } else {
            1.0
        }
    }
}

/// Build the operator for the helicoid net potential U(xi).
pub fn discretize(
    grid: &TransverseGrid,
    geometry: &StripGeometry,
    mode: &TransverseMode,
) -> TridiagonalOperator {
    operator_from_potential(grid, |xi| net_potential(xi, geometry, mode))
}

/// Build the operator for an arbitrary sampled potential.
pub fn operator_from_potential<F: Fn(f64) -> f64>(
    grid: &TransverseGrid,
    potential: F,
) -> TridiagonalOperator {
    let n = grid.points();
    let h = grid.spacing();
    let inv_h2 = 1.0 / (h * h);
    let u: Vec<f64> = grid.nodes().map(&potential).collect();

    let first = match grid.bc_left() {
        BoundaryCondition::Dirichlet => 1,
        BoundaryCondition::Neumann => 0,
    };
    let last = match grid.bc_right() {
        BoundaryCondition::Dirichlet => n - 2,
        BoundaryCondition::Neumann => n - 1,
    };
    let order = last - first + 1;

    let mut diagonal = Vec::with_capacity(order);
    for i in first..=last {
        diagonal.push(2.0 * inv_h2 + u[i]);
    }
    let mut off_diagonal = vec![-inv_h2; order - 1];
    if grid.bc_left() == BoundaryCondition::Neumann {
        off_diagonal[0] = -std::f64::consts::SQRT_2 * inv_h2;
    }
    if grid.bc_right() == BoundaryCondition::Neumann {
        off_diagonal[order - 2] = -std::f64::consts::SQRT_2 * inv_h2;
    }

    TridiagonalOperator {
        matrix: SymmetricTridiagonal {
            diagonal,
            off_diagonal,
        },
        grid: *grid,
        potential: u,
        first_unknown: first,
    }
}

/// Sorted bound-state bundle: energies, normalized full-grid wavefunctions,
/// node counts, and operator residuals.
#[derive(Debug, Clone)]
pub struct EigenSolution {
    pub energies: Vec<f64>,
    pub wavefunctions: Vec<Vec<f64>>,
    pub node_counts: Vec<usize>,
    pub residual_norms: Vec<f64>,
}

impl EigenSolution {
    pub fn states(&self) -> usize {
        self.energies.len()
    }
}

/// The k lowest eigenpairs of the discretized problem.
///
/// Eigenvalues come from Sturm bisection, eigenvectors from inverse
/// iteration; each wavefunction is normalized to sum(f_i^2) h = 1 and signed
/// so its largest-magnitude component is positive.
pub fn eigen_lowest(operator: &TridiagonalOperator, k: usize) -> Result<EigenSolution> {
    if k == 0 || k > operator.unknown_count() {
        return Err(Error::InvalidInput(format!(
            "state count k = {k} out of range 1..={}",
            operator.unknown_count()
        )));
    }
    let grid = operator.grid();
    let h = grid.spacing();
    let sigmas = operator.matrix.lowest_eigenvalues(k);
    let (glo, ghi) = operator.matrix.spectral_bounds();
    let near_degenerate = 1e-10 * (ghi - glo).abs().max(f64::MIN_POSITIVE);

    let mut energies = Vec::with_capacity(k);
    let mut wavefunctions = Vec::with_capacity(k);
    let mut node_counts = Vec::with_capacity(k);
    let mut residual_norms = Vec::with_capacity(k);
    let mut raw_vectors: Vec<Vec<f64>> = Vec::with_capacity(k);

    for (j, &sigma) in sigmas.iter().enumerate() {
        let deflate: Vec<Vec<f64>> = raw_vectors
            .iter()
            .enumerate()
            .filter(|(i, _)| (sigmas[*i] - sigma).abs() <= near_degenerate)
            .map(|(_, v)| v.clone())
            .collect();
        let (vector, energy, residual) = operator.matrix.inverse_iteration(sigma, j, &deflate)?;

        let mut f = operator.embed(&vector);
        let norm2: f64 = f
            .iter()
            .enumerate()
            .map(|(i, v)| operator.weight(i) * v * v)
            .sum::<f64>()
            * h;
        let scale = norm2.sqrt();
        let mut max_abs = 0.0_f64;
        let mut max_idx = 0;
        for (i, v) in f.iter().enumerate() {
            if v.abs() > max_abs {
                max_abs = v.abs();
                max_idx = i;
            }
        }
        let sign = if f[max_idx] < 0.0 { -1.0 } else { 1.0 };
        for v in f.iter_mut() {
            *v *= sign / scale;
        }

        let nodes = interior_node_count(&f);
        energies.push(energy);
        node_counts.push(nodes);
        residual_norms.push(residual);
        wavefunctions.push(f);
        raw_vectors.push(vector);
    }

    for j in 1..k {
        if energies[j] <= energies[j - 1] {
            return Err(Error::Convergence {
                state: j,
                residual: residual_norms[j],
                iterations: 0,
            });
        }
    }
    for (j, &nodes) in node_counts.iter().enumerate() {
        if nodes != j {
            return Err(Error::Convergence {
                state: j,
                residual: residual_norms[j],
                iterations: nodes,
            });
        }
    }

    Ok(EigenSolution {
        energies,
        wavefunctions,
        node_counts,
        residual_norms,
    })
}

/// Sign changes over interior nodes, skipping values at rounding level.
fn interior_node_count(f: &[f64]) -> usize {
    let max_abs = f.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
    let floor = 1e-12 * max_abs;
    let mut count = 0;
    let mut last = 0.0_f64;
    for &v in &f[1..f.len() - 1] {
        if v.abs() > floor {
            let s = v.signum();
            if last != 0.0 && s != last {
                count += 1;
            }
            last = s;
        }
    }
    count
}

/// Solution of [`eigen_lowest`] under automatic grid refinement.
#[derive(Debug, Clone)]
pub struct RefinedSolution {
    pub solution: EigenSolution,
    pub grid: TransverseGrid,
    pub refinements: usize,
    /// Whether the ground energy stabilized within the refinement budget.
    pub converged: bool,
}

/// Refine the grid (doubling intervals, up to `max_refinements`) until the
/// ground energy changes by less than 1e-9 max(omega^2, (pi/D)^2); returns
/// the finest solution computed.
pub fn solve_refined(
    geometry: &StripGeometry,
    mode: &TransverseMode,
    grid: &TransverseGrid,
    k: usize,
    max_refinements: usize,
) -> Result<RefinedSolution> {
    let w = geometry.twist_rate();
    let box_scale = (std::f64::consts::PI / grid.width()).powi(2);
    let tol = 1e-9 * (w * w).max(box_scale);

    let mut current_grid = *grid;
    let mut current = eigen_lowest(&discretize(&current_grid, geometry, mode), k)?;
    for refinements in 0..max_refinements {
        let finer_grid = current_grid.refined();
        let finer = eigen_lowest(&discretize(&finer_grid, geometry, mode), k)?;
        let delta = (finer.energies[0] - current.energies[0]).abs();
        current_grid = finer_grid;
        current = finer;
        if delta < tol {
            return Ok(RefinedSolution {
                solution: current,
                grid: current_grid,
                refinements: refinements + 1,
                converged: true,
            });
        }
    }
    Ok(RefinedSolution {
        solution: current,
        grid: current_grid,
        refinements: max_refinements,
        converged: false,
    })
}

/// Counts of eigenvalues below zero and below the potential's cutoff value.
#[derive(Debug, Clone, Copy)]
pub struct BoundStateCount {
    /// Eigenvalues strictly below 0 (Sturm count at E = 0).
    pub below_zero: usize,
    /// Eigenvalues strictly below U(D), the tail value set by the cutoff.
    pub below_tail: usize,
    /// U(D).
    pub tail_value: f64,
}

pub fn bound_state_count(
    geometry: &StripGeometry,
    mode: &TransverseMode,
    grid: &TransverseGrid,
) -> BoundStateCount {
    let operator = discretize(grid, geometry, mode);
    let tail_value = net_potential(grid.width(), geometry, mode);
    BoundStateCount {
        below_zero: operator.count_below(0.0),
        below_tail: operator.count_below(tail_value),
        tail_value,
    }
}

/// Localization observables of one normalized state.
#[derive(Debug, Clone, Copy)]
pub struct StateObservables {
    pub mean_xi: f64,
    pub rms_xi: f64,
    /// Probability mass beyond the V_eff zero crossing sqrt(2)/omega;
    /// undefined on the flat strip.
    pub outer_mass: Option<f64>,
}

pub fn observables(
    solution: &EigenSolution,
    geometry: &StripGeometry,
    grid: &TransverseGrid,
) -> Vec<StateObservables> {
    let h = grid.spacing();
    let crossing = if geometry.is_flat() {
        None
    } else {
        Some(2.0_f64.sqrt() / geometry.twist_rate())
    };
    solution
        .wavefunctions
        .iter()
        .map(|f| {
            let mut mean = 0.0;
            let mut mean_sq = 0.0;
            let mut outer = 0.0;
            for (i, &v) in f.iter().enumerate() {
                let xi = grid.node(i);
                let p = v * v * h;
                mean += xi * p;
                mean_sq += xi * xi * p;
                if let Some(c) = crossing {
                    if xi > c {
                        outer += p;
                    }
                }
            }
            StateObservables {
                mean_xi: mean,
                rms_xi: mean_sq.sqrt(),
                outer_mass: crossing.map(|_| outer),
            }
        })
        .collect()
}

/// One row of the dispersion table: the lowest transverse energies at k_x.
#[derive(Debug, Clone)]
pub struct DispersionRow {
    pub k_x: f64,
    pub energies: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DispersionTable {
    pub rows: Vec<DispersionRow>,
    /// Whether the ground energy is nondecreasing in |k_x| (diagnostic).
    pub ground_monotone_in_abs_kx: bool,
}

/// E_j(k_x) for each requested wavenumber (eigenvalues only).
pub fn dispersion(
    geometry: &StripGeometry,
    grid: &TransverseGrid,
    kx_values: &[f64],
    states: usize,
    threads: Option<usize>,
) -> Result<DispersionTable> {
    if kx_values.iter().any(|k| !k.is_finite()) {
        return Err(Error::InvalidInput("k_x values must be finite".into()));
    }
    let solve_one = |&k_x: &f64| -> Result<DispersionRow> {
        let mode = TransverseMode::from_wavenumber(k_x, geometry)?;
        let operator = discretize(grid, geometry, &mode);
        if states == 0 || states > operator.unknown_count() {
            return Err(Error::InvalidInput(format!(
                "state count {states} out of range for {} unknowns",
                operator.unknown_count()
            )));
        }
        Ok(DispersionRow {
            k_x,
            energies: operator.matrix().lowest_eigenvalues(states),
        })
    };
    let rows: Vec<DispersionRow> = run_maybe_parallel(threads, || {
        kx_values.par_iter().map(solve_one).collect::<Result<_>>()
    })?;

    let mut by_abs: Vec<&DispersionRow> = rows.iter().collect();
    by_abs.sort_by(|a, b| a.k_x.abs().total_cmp(&b.k_x.abs()));
    let ground_monotone_in_abs_kx = by_abs
        .windows(2)
        .all(|w| w[0].energies[0] <= w[1].energies[0] + 1e-14);

    Ok(DispersionTable {
        rows,
        ground_monotone_in_abs_kx,
    })
}

/// Run `f` inside a dedicated rayon pool of `threads` workers, or in the
/// global pool when unspecified. Results are keyed by input order, so the
/// thread count never affects output contents.
pub(crate) fn run_maybe_parallel<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> T + Send,
) -> T {
    match threads {
        Some(t) if t > 0 => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map(|pool| pool.install(f))
            .unwrap_or_else(|_| f()),
        _ => f(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::StripGeometry;

    fn helicoid(width: f64) -> (StripGeometry, TransverseMode) {
        let g = StripGeometry::with_twist_rate(1.0, 100.0, width).unwrap();
        let mode = TransverseMode::from_twist_ratio(0.0, &g).unwrap();
        (g, mode)
    }

    #[test]
    fn stencil_entries() {
        let g = StripGeometry::new(10.0, 0.0, 1.0).unwrap();
        let mode = TransverseMode::from_wavenumber(0.0, &g).unwrap();
        let grid = TransverseGrid::new(1.0, 11).unwrap();
        let op = discretize(&grid, &g, &mode);
        let h2 = grid.spacing() * grid.spacing();
        assert_eq!(op.unknown_count(), 9);
        for &e in &op.matrix().off_diagonal {
            assert!((e + 1.0 / h2).abs() < 1e-9);
        }
        for (i, &d) in op.matrix().diagonal.iter().enumerate() {
            let xi = grid.node(i + 1);
            assert!((d - (2.0 / h2 + net_potential(xi, &g, &mode))).abs() < 1e-9);
        }
    }

    #[test]
    fn box_spectrum_at_4001_points() {
        let g = StripGeometry::new(10.0, 0.0, 1.0).unwrap();
        let mode = TransverseMode::from_wavenumber(0.0, &g).unwrap();
        let grid = TransverseGrid::new(1.0, 4001).unwrap();
        let solution = eigen_lowest(&discretize(&grid, &g, &mode), 3).unwrap();
        for (j, &e) in solution.energies.iter().enumerate() {
            let exact = ((j + 1) as f64 * std::f64::consts::PI).powi(2);
            assert!(
                (e - exact).abs() / exact < 1e-5,
                "state {j}: {e} vs {exact}"
            );
            assert_eq!(solution.node_counts[j], j);
        }
    }

    #[test]
    fn harmonic_well_regression() {
        // -f'' + xi^2 f = E f on [-20, 20]: E = 2j + 1
        let grid = TransverseGrid::new(40.0, 32001).unwrap();
        let op = operator_from_potential(&grid, |xi| {
            let x = xi - 20.0;
            x * x
        });
        let solution = eigen_lowest(&op, 2).unwrap();
        assert!((solution.energies[0] - 1.0).abs() < 1e-6, "{:?}", solution.energies);
        assert!((solution.energies[1] - 3.0).abs() / 3.0 < 1e-6);
    }

    #[test]
    fn normalization_and_residuals() {
        let (g, mode) = helicoid(40.0);
        let grid = TransverseGrid::new(40.0, 4001).unwrap();
        let solution = eigen_lowest(&discretize(&grid, &g, &mode), 3).unwrap();
        let h = grid.spacing();
        for f in &solution.wavefunctions {
            let norm: f64 = f.iter().map(|v| v * v).sum::<f64>() * h;
            assert!((norm - 1.0).abs() < 1e-12, "norm {norm}");
            assert_eq!(f[0], 0.0);
            assert_eq!(*f.last().unwrap(), 0.0);
        }
        for &r in &solution.residual_norms {
            assert!(r <= 1e-10, "residual {r:e}");
        }
        let umin = discretize(&grid, &g, &mode).potential_min();
        for &e in &solution.energies {
            assert!(e >= umin - 1e-12);
        }
    }

    #[test]
    fn ground_energy_matches_frozen_oracle_value() {
        // matrix eigenvalue at 4001 points, omega=1, C=0, D=40
        let (g, mode) = helicoid(40.0);
        let grid = TransverseGrid::new(40.0, 4001).unwrap();
        let solution = eigen_lowest(&discretize(&grid, &g, &mode), 3).unwrap();
        assert!(
            (solution.energies[0] - 4.969105246958611e-3).abs() < 1e-11,
            "E0 = {:e}",
            solution.energies[0]
        );
        assert!((solution.energies[1] - 2.271082629e-2).abs() < 1e-9);
        assert!((solution.energies[2] - 5.316305919e-2).abs() < 1e-9);
    }

    #[test]
    fn shooting_oracle_agrees_after_richardson() {
        let (g, mode) = helicoid(40.0);
        let coarse = TransverseGrid::new(40.0, 2001).unwrap();
        let fine = TransverseGrid::new(40.0, 4001).unwrap();
        let e_c = eigen_lowest(&discretize(&coarse, &g, &mode), 1).unwrap().energies[0];
        let e_f = eigen_lowest(&discretize(&fine, &g, &mode), 1).unwrap().energies[0];
        let richardson = (4.0 * e_f - e_c) / 3.0;
        let numerov = shooting_eigenvalue(&g, &mode, &fine, 0).unwrap();
        assert!(
            (richardson - numerov).abs() <= (1e-8 * numerov.abs()).max(1e-10),
            "richardson {richardson:e} vs numerov {numerov:e}"
        );
    }

    #[test]
    fn marginal_tail_binds_nothing_at_default_cutoffs() {
        // the C=0 tail is exactly critical (-1/(4 xi^2)); counts stay zero
        for (d, points) in [(20.0, 4001), (40.0, 8001), (80.0, 8001)] {
            let (g, mode) = helicoid(d);
            let grid = TransverseGrid::new(d, points).unwrap();
            let count = bound_state_count(&g, &mode, &grid);
            assert_eq!(count.below_zero, 0, "D={d}");
            assert!(count.tail_value < 0.0);
            assert_eq!(count.below_tail, 0);
        }
    }

    #[test]
    fn bound_count_zero_for_repulsive_and_flat() {
        let g = StripGeometry::with_twist_rate(2.0, 100.0, 10.0).unwrap();
        let mode = TransverseMode::from_twist_ratio(0.6, &g).unwrap();
        let grid = TransverseGrid::new(10.0, 2001).unwrap();
        assert_eq!(bound_state_count(&g, &mode, &grid).below_zero, 0);

        let flat = StripGeometry::new(10.0, 0.0, 1.0).unwrap();
        let mode = TransverseMode::from_wavenumber(0.0, &flat).unwrap();
        let grid = TransverseGrid::new(1.0, 2001).unwrap();
        assert_eq!(bound_state_count(&flat, &mode, &grid).below_zero, 0);
    }

    #[test]
    fn sturm_count_consistent_with_shooting_count() {
        let (g, mode) = helicoid(40.0);
        let grid = TransverseGrid::new(40.0, 2001).unwrap();
        let op = discretize(&grid, &g, &mode);
        for trial in [0.01, 0.03, 0.08] {
            let sturm = op.count_below(trial);
            let mut shots = 0;
            for j in 0..6 {
                if shooting_eigenvalue(&g, &mode, &grid, j).unwrap() < trial {
                    shots += 1;
                }
            }
            assert_eq!(sturm, shots, "trial {trial}");
        }
    }

    #[test]
    fn outer_mass_for_pushed_ground_state() {
        let (g, mode) = helicoid(40.0);
        let grid = TransverseGrid::new(40.0, 4001).unwrap();
        let solution = eigen_lowest(&discretize(&grid, &g, &mode), 1).unwrap();
        let obs = observables(&solution, &g, &grid);
        let outer = obs[0].outer_mass.unwrap();
        assert!(
            (outer - 0.999587513).abs() < 1e-6,
            "outer mass {outer} vs frozen oracle value"
        );
        assert!((obs[0].mean_xi - 19.1).abs() < 0.05);
    }

    #[test]
    fn box_ground_state_centered() {
        let g = StripGeometry::new(10.0, 0.0, 1.0).unwrap();
        let mode = TransverseMode::from_wavenumber(0.0, &g).unwrap();
        let grid = TransverseGrid::new(1.0, 2001).unwrap();
        let solution = eigen_lowest(&discretize(&grid, &g, &mode), 1).unwrap();
        let obs = observables(&solution, &g, &grid);
        assert!((obs[0].mean_xi - 0.5).abs() < 1e-10);
        assert!(obs[0].outer_mass.is_none());
    }

    #[test]
    fn dispersion_even_and_monotone() {
        let (g, _) = helicoid(40.0);
        let grid = TransverseGrid::new(40.0, 1001).unwrap();
        let table = dispersion(&g, &grid, &[-0.25, 0.0, 0.1, 0.25], 2, Some(2)).unwrap();
        assert!(table.ground_monotone_in_abs_kx);
        let at = |k: f64| {
            &table
                .rows
                .iter()
                .find(|r| r.k_x == k)
                .unwrap()
                .energies
        };
        // even in k_x
        for (a, b) in at(-0.25).iter().zip(at(0.25)) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(at(0.0)[0] < at(0.25)[0]);
    }

    #[test]
    fn neumann_box_has_flat_ground_state() {
        let grid = TransverseGrid::with_boundaries(
            1.0,
            2001,
            BoundaryCondition::Neumann,
            BoundaryCondition::Neumann,
        )
        .unwrap();
        let op = operator_from_potential(&grid, |_| 0.0);
        let solution = eigen_lowest(&op, 2).unwrap();
        assert!(solution.energies[0].abs() < 1e-7, "{:?}", solution.energies);
        assert!((solution.energies[1] - std::f64::consts::PI.powi(2)).abs() < 1e-3);
        // constant mode: the embedded wavefunction is flat across the grid
        let f = &solution.wavefunctions[0];
        let spread = f.iter().fold((f64::MAX, f64::MIN), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
        assert!((spread.1 - spread.0).abs() < 1e-6 * spread.1.abs());
    }

    #[test]
    fn mixed_neumann_dirichlet_box() {
        let grid = TransverseGrid::with_boundaries(
            1.0,
            2001,
            BoundaryCondition::Dirichlet,
            BoundaryCondition::Neumann,
        )
        .unwrap();
        let op = operator_from_potential(&grid, |_| 0.0);
        let solution = eigen_lowest(&op, 2).unwrap();
        let expect0 = (std::f64::consts::PI / 2.0).powi(2);
        let expect1 = (3.0 * std::f64::consts::PI / 2.0).powi(2);
        assert!((solution.energies[0] - expect0).abs() / expect0 < 1e-6);
        assert!((solution.energies[1] - expect1).abs() / expect1 < 1e-6);
    }

    #[test]
    fn refinement_stops_when_ground_energy_stabilizes() {
        let (g, mode) = helicoid(40.0);
        let grid = TransverseGrid::new(40.0, 2001).unwrap();
        let refined = solve_refined(&g, &mode, &grid, 1, 3).unwrap();
        assert!(refined.converged);
        assert!(refined.grid.points() >= 4001);
        assert!(
            (refined.solution.energies[0] - 4.9691056e-3).abs() < 1e-9,
            "E0 = {:e}",
            refined.solution.energies[0]
        );
    }

    #[test]
    fn rejects_bad_state_counts() {
        let (g, mode) = helicoid(10.0);
        let grid = TransverseGrid::new(10.0, 11).unwrap();
        let op = discretize(&grid, &g, &mode);
        assert!(eigen_lowest(&op, 0).is_err());
        assert!(eigen_lowest(&op, 10).is_err());
        assert!(eigen_lowest(&op, 9).is_ok());
    }
}
