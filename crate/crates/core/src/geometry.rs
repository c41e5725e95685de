//! Helicoid geometry and the closed-form potentials it induces.
//!
//! The strip is ruled by a line sweeping along the x-axis while rotating at
//! twist rate omega = 2*pi*n/L; the transverse coordinate xi in [0, D] runs
//! from the straight edge to the helical edge. The induced metric has Lame
//! coefficients h1 = sqrt(1 + omega^2 xi^2), h2 = 1, and reducing the surface
//! Laplacian produces an attractive effective potential away from the axis.
//! Everything here is a pure function in natural units (hbar^2/2m = 1) unless
//! a [`UnitSystem`] parameter says otherwise.

use crate::error::{Error, Result};
use crate::units::UnitSystem;

/// Helicoidal strip: total length, number of full twists, width.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StripGeometry {
    total_length: f64,
    twist_count: f64,
    width: f64,
    twist_rate: f64,
}

impl StripGeometry {
    /// `total_length` L > 0, `twist_count` n >= 0 (n = 0 is the flat strip),
    /// `width` D > 0. The twist rate omega = 2 pi n / L is derived.
    pub fn new(total_length: f64, twist_count: f64, width: f64) -> Result<Self> {
        if !(total_length > 0.0) || !total_length.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "total length must be positive and finite, got {total_length}"
            )));
        }
        if !(width > 0.0) || !width.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "width must be positive and finite, got {width}"
            )));
        }
        if !(twist_count >= 0.0) || !twist_count.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "twist count must be nonnegative and finite, got {twist_count}"
            )));
        }
        Ok(StripGeometry {
            total_length,
            twist_count,
            width,
            twist_rate: 2.0 * std::f64::consts::PI * twist_count / total_length,
        })
    }

    /// Construct from the twist rate itself; n = omega L / (2 pi) is derived.
    pub fn with_twist_rate(twist_rate: f64, total_length: f64, width: f64) -> Result<Self> {
        if !(twist_rate >= 0.0) || !twist_rate.is_finite() {
            return Err(Error::InvalidGeometry(format!(
                "twist rate must be nonnegative and finite, got {twist_rate}"
            )));
        }
        let mut g = StripGeometry::new(
            total_length,
            twist_rate * total_length / (2.0 * std::f64::consts::PI),
            width,
        )?;
        // keep omega exact rather than round-tripped through n
        g.twist_rate = twist_rate;
        Ok(g)
    }

    pub fn total_length(&self) -> f64 {
        self.total_length
    }

    pub fn twist_count(&self) -> f64 {
        self.twist_count
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// omega = 2 pi n / L.
    pub fn twist_rate(&self) -> f64 {
        self.twist_rate
    }

    pub fn is_flat(&self) -> bool {
        self.twist_rate == 0.0
    }
}

/// Longitudinal mode: wavenumber k_x and, when the strip is twisted, the
/// dimensionless ratio C = k_x / omega. C is undefined on the flat strip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransverseMode {
    wavenumber: f64,
    twist_ratio: Option<f64>,
}

impl TransverseMode {
    pub fn from_wavenumber(k_x: f64, geometry: &StripGeometry) -> Result<Self> {
        if !k_x.is_finite() {
            return Err(Error::InvalidInput(format!(
                "wavenumber must be finite, got {k_x}"
            )));
        }
        let twist_ratio = if geometry.is_flat() {
            None
        } else {
            Some(k_x / geometry.twist_rate())
        };
        Ok(TransverseMode {
            wavenumber: k_x,
            twist_ratio,
        })
    }

    pub fn from_twist_ratio(c: f64, geometry: &StripGeometry) -> Result<Self> {
        if geometry.is_flat() {
            return Err(Error::FlatStrip(
                "C = k_x/omega is undefined for a flat strip; supply k_x instead".into(),
            ));
        }
        if !c.is_finite() {
            return Err(Error::InvalidInput(format!(
                "twist ratio must be finite, got {c}"
            )));
        }
        Ok(TransverseMode {
            wavenumber: c * geometry.twist_rate(),
            twist_ratio: Some(c),
        })
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    /// C = k_x/omega, or None on the flat strip.
    pub fn twist_ratio(&self) -> Option<f64> {
        self.twist_ratio
    }

    /// E0 = k_x^2, the longitudinal kinetic energy in natural units.
    pub fn longitudinal_energy(&self) -> f64 {
        self.wavenumber * self.wavenumber
    }
}

/// Lame coefficient h1(xi) = sqrt(1 + omega^2 xi^2). The other coefficient
/// h2 is identically 1.
pub fn lame_h1(xi: f64, geometry: &StripGeometry) -> f64 {
    let wx = geometry.twist_rate() * xi;
    (1.0 + wx * wx).sqrt()
}

/// Twist-induced effective potential in natural units:
/// V_eff(xi) = (omega^2/2) (1 - omega^2 xi^2 / 2) / (1 + omega^2 xi^2)^2.
pub fn v_eff_natural(xi: f64, geometry: &StripGeometry) -> f64 {
    let w = geometry.twist_rate();
    let u = w * w * xi * xi;
    let s = 1.0 + u;
    0.25 * w * w * (2.0 - u) / (s * s)
}

/// Effective potential in the requested unit system (dimensional mode
/// multiplies by hbar^2/2m, giving the omega^2 hbar^2/4m prefactor form).
pub fn v_eff(xi: f64, geometry: &StripGeometry, units: &UnitSystem) -> f64 {
    units.energy_scale() * v_eff_natural(xi, geometry)
}

/// Effective potential evaluated from the metric alone, by central finite
/// differences of h1. Serves as an independent oracle for [`v_eff`]:
/// V = -[ -h1''/(2 h1) + (h1')^2/(4 h1^2) ] in natural units.
#[derive(Debug, Clone, Copy)]
pub struct MetricPotential {
    pub value: f64,
    /// False when the step is too coarse for the h1 scale (step*omega > 1e-3).
    pub reliable: bool,
}

pub fn v_eff_from_metric(xi: f64, geometry: &StripGeometry, step: f64) -> Result<MetricPotential> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidInput(format!(
            "finite-difference step must be positive, got {step}"
        )));
    }
    let h1 = |x: f64| lame_h1(x, geometry);
    let hm = h1(xi - step);
    let h0 = h1(xi);
    let hp = h1(xi + step);
    let d1 = (hp - hm) / (2.0 * step);
    let d2 = (hp - 2.0 * h0 + hm) / (step * step);
    let value = -(-d2 / (2.0 * h0) + d1 * d1 / (4.0 * h0 * h0));
    Ok(MetricPotential {
        value,
        reliable: step * geometry.twist_rate() <= 1e-3,
    })
}

/// Default step for the metric oracle: max(1e-6/omega, 1e-9 (1 + xi)),
/// balancing truncation against round-off on the h1 scale.
pub fn default_metric_step(xi: f64, geometry: &StripGeometry) -> f64 {
    let w = geometry.twist_rate();
    let roundoff = 1e-9 * (1.0 + xi.abs());
    if w > 0.0 {
        (1e-6 / w).max(roundoff)
    } else {
        // h1 is constant on the flat strip; any step returns exactly zero
        1e-6_f64.max(roundoff)
    }
}

/// Net transverse potential U(xi) = V_eff + k_x^2 / h1^2, natural units.
///
/// For omega > 0 this evaluates the single-fraction form
/// (omega^2/4) [ (4C^2-1)/(1+omega^2 xi^2) + 3/(1+omega^2 xi^2)^2 ];
/// the flat strip falls back to the superposition form through the same
/// entry point (C is undefined there, see [`TransverseMode::twist_ratio`]).
pub fn net_potential(xi: f64, geometry: &StripGeometry, mode: &TransverseMode) -> f64 {
    match mode.twist_ratio() {
        Some(c) => {
            let w = geometry.twist_rate();
            let s = 1.0 + w * w * xi * xi;
            0.25 * w * w * ((4.0 * c * c - 1.0) / s + 3.0 / (s * s))
        }
        None => net_potential_superposition(xi, geometry, mode.wavenumber()),
    }
}

/// The same potential assembled from its two physical contributions,
/// V_eff(xi) + k_x^2/h1(xi)^2. Kept as an independent route for identity
/// checks against [`net_potential`].
pub fn net_potential_superposition(xi: f64, geometry: &StripGeometry, k_x: f64) -> f64 {
    let h1 = lame_h1(xi, geometry);
    v_eff_natural(xi, geometry) + k_x * k_x / (h1 * h1)
}

/// Analytic landmarks of U(xi), confirmed by golden-section minimization.
#[derive(Debug, Clone, Copy)]
pub struct LandmarkReport {
    /// U(0) = (omega^2/4)(4C^2 + 2).
    pub v0: f64,
    /// First zero crossing of U; absent when C^2 >= 1/4 (U > 0 everywhere).
    pub xi_zero: Option<f64>,
    /// Location of the minimum of U, from 1 + omega^2 xi^2 = 6/(1 - 4C^2).
    pub xi_min: Option<f64>,
    /// U(xi_min) = -omega^2 (1 - 4C^2)^2 / 48.
    pub u_min: Option<f64>,
    /// Golden-section confirmation of xi_min on the sampled potential.
    pub xi_min_numeric: Option<f64>,
    /// U at the numerically located minimum.
    pub u_min_numeric: Option<f64>,
    /// The paper's prose value (hbar^2/6m)[k_x^2 - omega^2/16]; agrees with
    /// u_min only at C = 0 and is carried for comparison, never used.
    pub paper_prose_u_min: f64,
    /// False flags "no attractive region" (C^2 >= 1/4).
    pub attractive: bool,
}

pub fn landmarks(geometry: &StripGeometry, mode: &TransverseMode) -> Result<LandmarkReport> {
    let w = geometry.twist_rate();
    let Some(c) = mode.twist_ratio() else {
        return Err(Error::FlatStrip("landmarks need omega > 0".into()));
    };
    let c2 = c * c;
    let v0 = 0.25 * w * w * (4.0 * c2 + 2.0);
    let paper_prose_u_min = (w * w / 3.0) * (c2 - 1.0 / 16.0);
    if c2 >= 0.25 {
        return Ok(LandmarkReport {
            v0,
            xi_zero: None,
            xi_min: None,
            u_min: None,
            xi_min_numeric: None,
            u_min_numeric: None,
            paper_prose_u_min,
            attractive: false,
        });
    }
    let q = 1.0 - 4.0 * c2;
    let xi_zero = ((2.0 + 4.0 * c2) / q).sqrt() / w;
    let xi_min = (6.0 / q - 1.0).sqrt() / w;
    let u_min = -w * w * q * q / 48.0;

    // numerical confirmation: the minimum lies between the zero crossing and
    // the far tail where U has relaxed back toward 0^-
    let u = |x: f64| net_potential(x, geometry, mode);
    let (xi_min_numeric, u_min_numeric) =
        golden_section_min(u, xi_zero, xi_min * 4.0, 1e-13 * xi_min, 400);

    Ok(LandmarkReport {
        v0,
        xi_zero: Some(xi_zero),
        xi_min: Some(xi_min),
        u_min: Some(u_min),
        xi_min_numeric: Some(xi_min_numeric),
        u_min_numeric: Some(u_min_numeric),
        paper_prose_u_min,
        attractive: true,
    })
}

fn golden_section_min<F: Fn(f64) -> f64>(
    f: F,
    mut a: f64,
    mut b: f64,
    tol: f64,
    max_iter: usize,
) -> (f64, f64) {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..max_iter {
        if (b - a).abs() <= tol {
            break;
        }
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// A point of the embedded helicoid surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

/// Sample the surface r = (x, xi cos(omega x), xi sin(omega x)) on an
/// nx-by-nxi mesh, row-major over x then xi.
pub fn sample_surface(geometry: &StripGeometry, nx: usize, nxi: usize) -> Result<Vec<SurfacePoint>> {
    if nx < 2 || nxi < 2 {
        return Err(Error::InvalidInput(format!(
            "surface mesh needs at least 2 samples per direction, got nx={nx}, nxi={nxi}"
        )));
    }
    let w = geometry.twist_rate();
    let mut points = Vec::with_capacity(nx * nxi);
    for ix in 0..nx {
        let x = geometry.total_length() * ix as f64 / (nx - 1) as f64;
        let (sin, cos) = (w * x).sin_cos();
        for ixi in 0..nxi {
            let xi = geometry.width() * ixi as f64 / (nxi - 1) as f64;
            points.push(SurfacePoint {
                x,
                y: xi * cos,
                z: xi * sin,
            });
        }
    }
    Ok(points)
}
