//! Numerov shooting oracle for the transverse eigenproblem.
//!
//! Integrates f'' = (U - E) f from both walls with the fourth-order Numerov
//! recurrence, matches log-derivatives at the potential minimum, and finds
//! eigenvalues by bisection on the oscillation count of the full left sweep
//! (the count jumps exactly at the discrete Numerov eigenvalues, where the
//! sweep satisfies the far boundary condition).

use super::{BoundaryCondition, TransverseGrid};
use crate::error::{Error, Result};
use crate::geometry::{net_potential, StripGeometry, TransverseMode};

/// Node count and matching defect returned by [`shoot`].
#[derive(Debug, Clone, Copy)]
pub struct ShotDiagnostics {
    /// Interior sign changes of the two-sided matched solution.
    pub node_count: usize,
    /// Scaled Wronskian of the left and right sweeps at the matching point;
    /// zero exactly at eigenvalues, one sign change between consecutive ones.
    pub mismatch: f64,
}

fn require_dirichlet(grid: &TransverseGrid) -> Result<()> {
    if grid.bc_left() != BoundaryCondition::Dirichlet
        || grid.bc_right() != BoundaryCondition::Dirichlet
    {
        return Err(Error::InvalidGrid(
            "the shooting oracle supports Dirichlet walls only".into(),
        ));
    }
    Ok(())
}

fn potential_samples(
    grid: &TransverseGrid,
    geometry: &StripGeometry,
    mode: &TransverseMode,
) -> Vec<f64> {
    (0..grid.points())
        .map(|i| net_potential(grid.node(i), geometry, mode))
        .collect()
}

/// Numerov coefficient c_i = 1 + h^2 (E - U_i) / 12.
#[inline]
fn numerov_c(h2_12: f64, energy: f64, u: f64) -> f64 {
    1.0 + h2_12 * (energy - u)
}

/// Matching index: the deepest point of the potential, ties broken toward the
/// center, clamped so both sides keep two usable neighbours.
fn matching_index(u: &[f64]) -> usize {
    let n = u.len();
    let min = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut best = n / 2;
    let mut best_dist = usize::MAX;
    for (i, &v) in u.iter().enumerate() {
        if v == min {
            let dist = i.abs_diff(n / 2);
            if dist < best_dist {
                best = i;
                best_dist = dist;
            }
        }
    }
    best.clamp(2, n - 3)
}

/// Count the sign changes of the full left sweep over nodes 1..=n-1.
///
/// Because the sweep hits y(D) = 0 exactly at an eigenvalue, this count
/// equals the number of Numerov eigenvalues strictly below `energy`.
fn left_sweep_count(u: &[f64], h: f64, energy: f64) -> Result<usize> {
    let n = u.len();
    let h2_12 = h * h / 12.0;
    let mut c_prev = numerov_c(h2_12, energy, u[0]);
    let mut c_here = numerov_c(h2_12, energy, u[1]);
    let mut y_prev = 0.0_f64;
    let mut y_here = h;
    let mut count = 0usize;
    let mut last_sign = 1.0_f64;
    for i in 1..n - 1 {
        let c_next = numerov_c(h2_12, energy, u[i + 1]);
        let mut y_next = ((12.0 - 10.0 * c_here) * y_here - c_prev * y_prev) / c_next;
        if y_next.abs() > 1e250 {
            y_next *= 1e-250;
            y_here *= 1e-250;
        }
        if !y_next.is_finite() {
            return Err(Error::NumerovOverflow { energy });
        }
        let s = y_next.signum();
        if y_next != 0.0 {
            if s != last_sign {
                count += 1;
            }
            last_sign = s;
        }
        y_prev = y_here;
        y_here = y_next;
        c_prev = c_here;
        c_here = c_next;
    }
    Ok(count)
}

/// Left sweep storing the solution up to and including node `stop`.
fn sweep_left(u: &[f64], h: f64, energy: f64, stop: usize) -> Result<Vec<f64>> {
    let h2_12 = h * h / 12.0;
    let mut y = vec![0.0; stop + 1];
    y[1] = h;
    for i in 1..stop {
        let c_prev = numerov_c(h2_12, energy, u[i - 1]);
        let c_here = numerov_c(h2_12, energy, u[i]);
        let c_next = numerov_c(h2_12, energy, u[i + 1]);
        y[i + 1] = ((12.0 - 10.0 * c_here) * y[i] - c_prev * y[i - 1]) / c_next;
        if y[i + 1].abs() > 1e250 {
            for v in y[..=i + 1].iter_mut() {
                *v *= 1e-250;
            }
        }
        if !y[i + 1].is_finite() {
            return Err(Error::NumerovOverflow { energy });
        }
    }
    Ok(y)
}

/// Right sweep from the far wall, storing nodes `start..n`.
fn sweep_right(u: &[f64], h: f64, energy: f64, start: usize) -> Result<Vec<f64>> {
    let n = u.len();
    let h2_12 = h * h / 12.0;
    let mut y = vec![0.0; n - start];
    let at = |i: usize| i - start;
    y[at(n - 2)] = h;
    for i in (start + 1..n - 1).rev() {
        let c_prev = numerov_c(h2_12, energy, u[i + 1]);
        let c_here = numerov_c(h2_12, energy, u[i]);
        let c_next = numerov_c(h2_12, energy, u[i - 1]);
        y[at(i - 1)] = ((12.0 - 10.0 * c_here) * y[at(i)] - c_prev * y[at(i + 1)]) / c_next;
        if y[at(i - 1)].abs() > 1e250 {
            for v in y[at(i - 1)..].iter_mut() {
                *v *= 1e-250;
            }
        }
        if !y[at(i - 1)].is_finite() {
            return Err(Error::NumerovOverflow { energy });
        }
    }
    Ok(y)
}

fn count_flips(values: impl Iterator<Item = f64>) -> usize {
    let mut count = 0;
    let mut last = 0.0_f64;
    for v in values {
        if v != 0.0 {
            if last != 0.0 && v.signum() != last {
                count += 1;
            }
            last = v.signum();
        }
    }
    count
}

/// Integrate from both walls at `trial_energy` and report the interior node
/// count of the matched solution plus the log-derivative mismatch.
pub fn shoot(
    geometry: &StripGeometry,
    mode: &TransverseMode,
    grid: &TransverseGrid,
    trial_energy: f64,
) -> Result<ShotDiagnostics> {
    require_dirichlet(grid)?;
    let u = potential_samples(grid, geometry, mode);
    let h = grid.spacing();
    let n = u.len();
    let m = matching_index(&u);

    let yl = sweep_left(&u, h, trial_energy, m + 1)?;
    let yr = sweep_right(&u, h, trial_energy, m - 1)?;
    let at = |i: usize| i - (m - 1);

    let sl = yl.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let sr = yr.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);

    let dl = (yl[m + 1] - yl[m - 1]) / (2.0 * h * sl);
    let dr = (yr[at(m + 1)] - yr[at(m - 1)]) / (2.0 * h * sr);
    let vl = yl[m] / sl;
    let vr = yr[at(m)] / sr;
    let mismatch = h * (dl * vr - dr * vl);

    // seam flips between the halves are already visible inside the right
    // segment, so the two partial counts add up to the matched-solution count
    let node_count = count_flips(yl[1..=m].iter().copied())
        + count_flips(yr[at(m)..yr.len() - 1].iter().copied());

    Ok(ShotDiagnostics {
        node_count,
        mismatch,
    })
}

/// The `state_index`-th Numerov eigenvalue (0-indexed), by bisection on the
/// oscillation count of the left sweep.
pub fn shooting_eigenvalue(
    geometry: &StripGeometry,
    mode: &TransverseMode,
    grid: &TransverseGrid,
    state_index: usize,
) -> Result<f64> {
    require_dirichlet(grid)?;
    let u = potential_samples(grid, geometry, mode);
    let h = grid.spacing();
    let umin = u.iter().cloned().fold(f64::INFINITY, f64::min);
    let umax = u.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let span = (umax - umin).max(1e-30);

    let mut lo = umin - 1e-6 * span;
    for _ in 0..60 {
        if left_sweep_count(&u, h, lo)? == 0 {
            break;
        }
        lo -= span;
    }
    let d = grid.width();
    let box_scale = (std::f64::consts::PI * (state_index + 1) as f64 / d).powi(2);
    let mut hi = umax + 4.0 * box_scale;
    let mut expansions = 0;
    while left_sweep_count(&u, h, hi)? <= state_index {
        hi = umin + 2.0 * (hi - umin);
        expansions += 1;
        if expansions > 60 {
            return Err(Error::InvalidInput(format!(
                "failed to bracket shooting eigenvalue {state_index}"
            )));
        }
    }
    for _ in 0..220 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 4.0 * f64::EPSILON * lo.abs().max(hi.abs()).max(f64::MIN_POSITIVE) {
            break;
        }
        if left_sweep_count(&u, h, mid)? <= state_index {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}
