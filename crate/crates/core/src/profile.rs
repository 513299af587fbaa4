//! The radial bump, its normalized mollifier and their continuum Fourier transforms.

use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Representation};
use crate::quadrature::{gauss_legendre, radial_transform, sphere_factor, CompositeRule};

/// `exp(1 − 1/(1 − r²))` for `r < 1`, zero otherwise; equals 1 at the origin.
pub fn bump(r: f64) -> f64 {
    let r2 = r * r;
    if r2 >= 1.0 {
        0.0
    } else {
        (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// Wavenumber beyond which the bump transform is treated as zero (it is below rounding there).
pub const SPECTRUM_CUTOFF: f64 = 2000.0;

const AUX_HALF_WIDTH: f64 = 16.0;
const AUX_POINTS: usize = 1 << 15;
const STENCIL: usize = 12;

/// Continuum Fourier transform `φ̂(k) = ∫ φ(|x|) e^{-iξ·x} dx`, `|ξ| = k`, tabulated once
/// per dimension.
///
/// The radial transform in `ℝ^d` equals the one-dimensional transform of the marginal
/// `P(x₁) = ∫ φ(|x|) dx₂…dx_d`, which is sampled on a fine auxiliary grid and transformed
/// with an FFT. Off-lattice values use local Lagrange interpolation of the (even) table.
#[derive(Debug)]
pub struct RadialSpectrum {
    dim: usize,
    step: f64,
    table: Vec<f64>,
}

fn marginal(dim: usize, x: f64, nodes: &[f64], weights: &[f64]) -> f64 {
    let ax = x.abs();
    if ax >= 1.0 {
        return 0.0;
    }
    match dim {
        1 => bump(ax),
        2 => {
            // P(x) = 2 ∫_0^{√(1−x²)} φ(√(x² + y²)) dy
            let top = (1.0 - ax * ax).sqrt();
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(weights) {
                let y = 0.5 * top * (t + 1.0);
                acc += w * bump((ax * ax + y * y).sqrt());
            }
            top * acc
        }
        3 => {
            // P(x) = 2π ∫_{|x|}^1 φ(r) r dr
            let width = 1.0 - ax;
            let mut acc = 0.0;
            for (t, w) in nodes.iter().zip(weights) {
                let r = ax + 0.5 * width * (t + 1.0);
                acc += w * bump(r) * r;
            }
            PI * width * acc
        }
        _ => panic!("unsupported dimension {dim}"),
    }
}

impl RadialSpectrum {
    fn build(dim: usize) -> Self {
        let grid = GridSpec::new(1, AUX_POINTS, AUX_HALF_WIDTH).expect("auxiliary grid");
        // Composite rule on [-1, 1] mapped per evaluation; panels keep the steep edge
        // of the bump resolved.
        let rule = CompositeRule::new(-1.0, 1.0, 8, 24);
        let f = Field::from_fn(&grid, |x| {
            Complex64::new(marginal(dim, x[0], &rule.nodes, &rule.weights), 0.0)
        });
        let spec = f.into_spectral();
        let scale = (2.0 * AUX_HALF_WIDTH).sqrt();
        let step = grid.wavenumber_step();
        let count = (SPECTRUM_CUTOFF / step).ceil() as usize + STENCIL + 1;
        let table = (0..count).map(|j| scale * spec.values()[j].re).collect();
        Self { dim, step, table }
    }

    /// Shared table for dimension `dim`.
    pub fn for_dim(dim: usize) -> Arc<RadialSpectrum> {
        static CACHE: [OnceLock<Arc<RadialSpectrum>>; 3] =
            [OnceLock::new(), OnceLock::new(), OnceLock::new()];
        assert!((1..=3).contains(&dim), "unsupported dimension {dim}");
        CACHE[dim - 1]
            .get_or_init(|| Arc::new(RadialSpectrum::build(dim)))
            .clone()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `φ̂(k)`; zero beyond [`SPECTRUM_CUTOFF`].
    pub fn eval(&self, k: f64) -> f64 {
        let k = k.abs();
        if k > SPECTRUM_CUTOFF {
            return 0.0;
        }
        let t = k / self.step;
        let base = t.floor() as i64 - (STENCIL as i64 / 2 - 1);
        let mut acc = 0.0;
        for a in 0..STENCIL as i64 {
            let ia = base + a;
            let da = t - ia as f64;
            if da == 0.0 {
                return self.table[ia.unsigned_abs() as usize];
            }
            let mut w = 1.0;
            for b in 0..STENCIL as i64 {
                if b != a {
                    w *= (t - (base + b) as f64) / (a - b) as f64;
                }
            }
            acc += w * self.table[ia.unsigned_abs() as usize];
        }
        acc
    }
}

/// `∫_{ℝ^d} φ(|x|) dx` by composite Gauss–Legendre quadrature.
pub fn bump_integral(dim: usize) -> f64 {
    let rule = CompositeRule::new(0.0, 1.0, 16, 24);
    rule.integrate(|r| sphere_factor(dim, r) * bump(r))
}

/// Direct quadrature of `φ̂(k)`; slow, used for validation.
pub fn bump_transform_direct(dim: usize, k: f64) -> f64 {
    radial_transform(dim, &bump, k, 32)
}

/// The smooth radial cutoff `φ` supported in the closed unit ball, with `φ(0) = 1`.
#[derive(Debug, Clone)]
pub struct CutoffProfile {
    spectrum: Arc<RadialSpectrum>,
}

impl CutoffProfile {
    pub fn new(dim: usize) -> Self {
        Self {
            spectrum: RadialSpectrum::for_dim(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim
    }

    pub fn value(&self, r: f64) -> f64 {
        bump(r)
    }

    pub fn transform(&self, k: f64) -> f64 {
        self.spectrum.eval(k)
    }

    /// `‖φ‖²_{L²(ℝ^d)}`.
    pub fn l2_norm_sq(&self) -> f64 {
        let rule = CompositeRule::new(0.0, 1.0, 16, 24);
        let d = self.dim();
        rule.integrate(|r| sphere_factor(d, r) * bump(r).powi(2))
    }
}

/// `ρ = φ/∫φ`, the unit-mass bump; `ρ_ε(x) = ε^{-d} ρ(x/ε)`.
#[derive(Debug, Clone)]
pub struct Mollifier {
    mass: f64,
    spectrum: Arc<RadialSpectrum>,
}

impl Mollifier {
    pub fn new(dim: usize) -> Self {
        Self {
            mass: bump_integral(dim),
            spectrum: RadialSpectrum::for_dim(dim),
        }
    }

    pub fn dim(&self) -> usize {
        self.spectrum.dim
    }

    pub fn value(&self, r: f64) -> f64 {
        bump(r) / self.mass
    }

    /// `ρ̂(k)` with `ρ̂(0) = 1`.
    pub fn transform(&self, k: f64) -> f64 {
        if k == 0.0 {
            1.0
        } else {
            self.spectrum.eval(k) / self.mass
        }
    }

    /// `ρ_ε ∗ f`, computed as the spectral multiplier `ρ̂(ε|ξ|)`; the result keeps the
    /// representation of `f`.
    pub fn apply(&self, f: &Field, eps: f64) -> Result<Field> {
        if eps.is_nan() || eps < 0.0 {
            return Err(Error::Domain(format!("mollification scale {eps} < 0")));
        }
        if f.grid().dim() != self.dim() {
            return Err(Error::Domain(format!(
                "mollifier built for d = {} applied on a d = {} grid",
                self.dim(),
                f.grid().dim()
            )));
        }
        self.apply_with_symbol_dim(f, eps)
    }

    /// Multiplies by `ρ̂(ε|ξ|)` of this mollifier's dimension on a grid of any dimension.
    /// Used for the one-dimensional reduction of radial profiles.
    pub(crate) fn apply_with_symbol_dim(&self, f: &Field, eps: f64) -> Result<Field> {
        if eps == 0.0 {
            return Ok(f.clone());
        }
        let repr = f.representation();
        let out = f
            .spectral()
            .apply_radial(|k| self.transform(eps * k).into())?;
        Ok(match repr {
            Representation::Physical => out.into_physical(),
            Representation::Spectral => out,
        })
    }
}

/// Samples `f` on the grid in parallel; convenience for radial profiles around a center.
pub fn sample_radial<F>(grid: &GridSpec, center: &[f64; 3], f: F) -> Field
where
    F: Fn(f64) -> f64 + Sync,
{
    let d = grid.dim();
    Field::from_fn(grid, |x| {
        let r2: f64 = (0..d).map(|a| (x[a] - center[a]).powi(2)).sum();
        Complex64::new(f(r2.sqrt()), 0.0)
    })
}

/// Norm of the radial profile's transform in `L²(ℝ^d, w(|ξ|) dξ/(2π)^d)` by quadrature in
/// `|ξ|`; `integrand(k)` returns `w(k)·|ĝ(k)|²`.
pub(crate) fn radial_spectral_integral<F>(
    dim: usize,
    k_max: f64,
    panel_width: f64,
    integrand: F,
) -> f64
where
    F: Fn(f64) -> f64 + Sync,
{
    let panels = ((k_max / panel_width).ceil() as usize).max(8);
    let width = k_max / panels as f64;
    let (x, w) = gauss_legendre(16);
    let parts: Vec<f64> = (0..panels)
        .into_par_iter()
        .map(|p| {
            let mid = (p as f64 + 0.5) * width;
            x.iter()
                .zip(&w)
                .map(|(xi, wi)| {
                    let k = mid + 0.5 * width * xi;
                    0.5 * width * wi * sphere_factor(dim, k) * integrand(k)
                })
                .sum::<f64>()
        })
        .collect();
    parts.iter().sum::<f64>() / (2.0 * PI).powi(dim as i32)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bump_shape() {
        assert_eq!(bump(0.0), 1.0);
        assert_eq!(bump(1.0), 0.0);
        assert_eq!(bump(1.5), 0.0);
        assert!(bump(0.5) > 0.0 && bump(0.5) < 1.0);
    }

    #[test]
    fn mollifier_has_unit_mass() {
        for dim in 1..=3 {
            let rho = Mollifier::new(dim);
            let rule = CompositeRule::new(0.0, 1.0, 64, 16);
            let mass = rule.integrate(|r| sphere_factor(dim, r) * rho.value(r));
            assert!((mass - 1.0).abs() < 1e-10, "dim {dim}: {mass}");
            assert_eq!(rho.transform(0.0), 1.0);
        }
    }

    #[test]
    fn tabulated_transform_matches_direct_quadrature() {
        for dim in 1..=3 {
            let spec = RadialSpectrum::for_dim(dim);
            for k in [0.0, 0.3, 1.7, 5.0, 12.345, 40.0, 117.9, 400.2] {
                let direct = bump_transform_direct(dim, k);
                let tab = spec.eval(k);
                assert!(
                    (direct - tab).abs() < 1e-12,
                    "dim {dim} k {k}: {direct} vs {tab}"
                );
            }
            let tail = spec.eval(SPECTRUM_CUTOFF * 0.999).abs();
            assert!(tail < 1e-14, "dim {dim}: tail {tail:e}");
        }
    }

    #[test]
    fn transform_at_zero_is_mass() {
        for dim in 1..=3 {
            let spec = RadialSpectrum::for_dim(dim);
            assert!((spec.eval(0.0) - bump_integral(dim)).abs() < 1e-12);
        }
    }

    #[test]
    fn plane_wave_is_damped_by_symbol() {
        let g = GridSpec::new(2, 32, PI).unwrap();
        let rho = Mollifier::new(2);
        let f = Field::plane_wave(&g, &[3, -2]).unwrap();
        let eps = 0.4;
        let out = rho.apply(&f, eps).unwrap();
        let factor = rho.transform(eps * 13f64.sqrt());
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b * factor).norm() < 1e-12);
        }
        assert!(rho.apply(&f, -1.0).is_err());
        let same = rho.apply(&f, 0.0).unwrap();
        assert_eq!(same.values(), f.values());
    }
}
