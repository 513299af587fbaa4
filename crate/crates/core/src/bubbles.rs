//! Bubbles: concentrated profiles `κ_n n^{d/2−s} φ(nx)`, their mollified ODE evolution,
//! and the truncated multi-scale superposition ("tanghuru") built from them.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec, Representation};
use crate::profile::{
    radial_spectral_integral, sample_radial, CutoffProfile, Mollifier, SPECTRUM_CUTOFF,
};
use crate::sobolev::weighted_norm;
use crate::solver::free_propagate;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemParams {
    /// Odd power of the nonlinearity.
    pub p: u32,
    /// `+1` focusing, `−1` defocusing.
    pub sigma: f64,
    /// Regularity index of the norms under study.
    pub s: f64,
    pub dim: usize,
}

impl Default for ProblemParams {
    fn default() -> Self {
        Self {
            p: 3,
            sigma: -1.0,
            s: 0.3,
            dim: 3,
        }
    }
}

impl ProblemParams {
    pub fn new(p: u32, sigma: f64, s: f64, dim: usize) -> Result<Self> {
        let pp = Self { p, sigma, s, dim };
        pp.validate()?;
        Ok(pp)
    }

    pub fn validate(&self) -> Result<()> {
        if self.p < 3 || self.p.is_multiple_of(2) {
            return Err(Error::Params(format!(
                "p = {} must be odd and >= 3",
                self.p
            )));
        }
        if self.sigma != 1.0 && self.sigma != -1.0 {
            return Err(Error::Params(format!(
                "sigma = {} must be +1 or -1",
                self.sigma
            )));
        }
        if !(1..=3).contains(&self.dim) {
            return Err(Error::Params(format!(
                "dimension {} not in 1..=3",
                self.dim
            )));
        }
        let half = self.dim as f64 / 2.0;
        if !(self.s > 0.0 && self.s < half) {
            return Err(Error::Params(format!(
                "s = {} must lie in (0, d/2) = (0, {half})",
                self.s
            )));
        }
        Ok(())
    }

    /// Scaling-critical index `s_c = d/2 − 2/(p−1)`.
    pub fn critical_index(&self) -> f64 {
        self.dim as f64 / 2.0 - 2.0 / (self.p as f64 - 1.0)
    }

    pub fn is_supercritical(&self) -> bool {
        self.s < self.critical_index()
    }

    pub fn require_supercritical(&self) -> Result<()> {
        if self.is_supercritical() {
            Ok(())
        } else {
            Err(Error::Params(format!(
                "s = {} is not below the critical index {}",
                self.s,
                self.critical_index()
            )))
        }
    }
}

/// Per-scale schedule. The scale is stored through `log n` so that formula-level work
/// can use scales far beyond floating-point range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BubbleParams {
    pub log_n: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl BubbleParams {
    pub fn new(n: f64, gamma: f64, beta: f64) -> Result<Self> {
        if !(n > 0.0) {
            return Err(Error::Params(format!("scale n = {n} must be positive")));
        }
        Self::from_log_n(n.ln(), gamma, beta)
    }

    pub fn from_log_n(log_n: f64, gamma: f64, beta: f64) -> Result<Self> {
        if !(log_n >= 1.0) {
            return Err(Error::Params(format!(
                "scale n = e^{log_n} must be at least e"
            )));
        }
        if !(0.0 < gamma && gamma < beta && beta < 1.0) {
            return Err(Error::Params(format!(
                "need 0 < gamma < beta < 1, got gamma = {gamma}, beta = {beta}"
            )));
        }
        if !(gamma < 0.5 * beta) {
            return Err(Error::Params(format!(
                "need gamma < beta/2, got gamma = {gamma}, beta = {beta}"
            )));
        }
        Ok(Self { log_n, gamma, beta })
    }

    /// Checks the constraint `(p−1)β < 1/2`, which involves the nonlinearity.
    pub fn validate_for(&self, pp: &ProblemParams) -> Result<()> {
        if (pp.p as f64 - 1.0) * self.beta >= 0.5 {
            return Err(Error::Params(format!(
                "need (p-1) beta < 1/2, got {}",
                (pp.p as f64 - 1.0) * self.beta
            )));
        }
        Ok(())
    }

    pub fn n(&self) -> f64 {
        self.log_n.exp()
    }

    /// `κ_n = (log n)^{−γ}`.
    pub fn kappa(&self) -> f64 {
        self.log_n.powf(-self.gamma)
    }

    /// `log λ_n` with `λ_n = κ_n^{(p−1)/2} n^{(d/2−s)(p−1)/2}`.
    pub fn ln_lambda(&self, pp: &ProblemParams) -> f64 {
        let q = (pp.p as f64 - 1.0) / 2.0;
        q * (-self.gamma * self.log_n.ln() + (pp.dim as f64 / 2.0 - pp.s) * self.log_n)
    }

    pub fn lambda(&self, pp: &ProblemParams) -> f64 {
        self.ln_lambda(pp).exp()
    }

    /// `ε_n = 1/(100 n)`.
    pub fn epsilon(&self) -> f64 {
        (-self.log_n).exp() / 100.0
    }

    /// `λ_n² t_n = (log n)^{(β−γ)(p−1)}`, the phase accumulated by the bubble at `t_n`.
    pub fn phase_scale(&self, pp: &ProblemParams) -> f64 {
        self.log_n
            .powf((self.beta - self.gamma) * (pp.p as f64 - 1.0))
    }

    /// `t_n = λ_n^{−2} (log n)^{(β−γ)(p−1)}`.
    pub fn t_n(&self, pp: &ProblemParams) -> f64 {
        (-2.0 * self.ln_lambda(pp)).exp() * self.phase_scale(pp)
    }

    /// Peak amplitude `κ_n n^{d/2−s}`.
    pub fn amplitude(&self, pp: &ProblemParams) -> f64 {
        self.kappa() * ((pp.dim as f64 / 2.0 - pp.s) * self.log_n).exp()
    }
}

/// `V(t) = e^{iσt}`, the solution of `iV' + σV = 0`, `V(0) = 1`.
pub fn ode_phase(t: f64, sigma: f64) -> Complex64 {
    Complex64::from_polar(1.0, sigma * t)
}

fn check_geometry(grid: &GridSpec, center: &[f64; 3], radius: f64) -> Result<()> {
    let l = grid.half_width();
    for (axis, c) in center.iter().enumerate().take(grid.dim()) {
        if c.abs() + radius > l {
            return Err(Error::Geometry(format!(
                "ball of radius {radius:.3e} around {c} on axis {axis} leaves [-{l}, {l})"
            )));
        }
    }
    Ok(())
}

fn check_resolution(grid: &GridSpec, n: f64) -> Result<()> {
    let required = 1.0 / (8.0 * n);
    if grid.spacing() > required {
        return Err(Error::Resolution {
            scale: 1.0 / n,
            spacing: grid.spacing(),
            required,
        });
    }
    Ok(())
}

/// `v_n(0, x) = κ_n n^{d/2−s} φ(n(x − center))`.
pub fn bubble_initial(
    pp: &ProblemParams,
    bp: &BubbleParams,
    phi: &CutoffProfile,
    grid: &GridSpec,
    center: &[f64; 3],
) -> Result<Field> {
    let n = bp.n();
    check_resolution(grid, n)?;
    check_geometry(grid, center, 1.0 / n)?;
    let amp = bp.amplitude(pp);
    Ok(sample_radial(grid, center, |r| amp * phi.value(n * r)))
}

/// `ρ_ε ∗ f`.
pub fn mollify(f: &Field, rho: &Mollifier, eps: f64) -> Result<Field> {
    rho.apply(f, eps)
}

/// `v_n^ε(t) = v₀·V(t|v₀|^{p−1})` with `v₀ = ρ_ε ∗ v_n(0)`.
#[allow(clippy::too_many_arguments)]
pub fn bubble_ode_evolved(
    pp: &ProblemParams,
    bp: &BubbleParams,
    phi: &CutoffProfile,
    rho: &Mollifier,
    grid: &GridSpec,
    center: &[f64; 3],
    eps: f64,
    t: f64,
) -> Result<Field> {
    check_geometry(grid, center, 1.0 / bp.n() + eps.max(0.0))?;
    let v0 = mollify(&bubble_initial(pp, bp, phi, grid, center)?, rho, eps)?;
    Ok(ode_evolve_pointwise(&v0, pp, t))
}

pub(crate) fn ode_evolve_pointwise(v0: &Field, pp: &ProblemParams, t: f64) -> Field {
    let half = ((pp.p - 1) / 2) as i32;
    v0.physical()
        .map(|u| u * ode_phase(t * u.norm_sqr().powi(half), pp.sigma))
}

/// Scale ladder of the superposition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Ladder {
    /// `n_k = e^{a^k}`.
    DoubleExponential { a: f64 },
    /// `n_k = n₀ r^k`.
    Geometric { n0: f64, r: f64 },
}

impl Ladder {
    pub fn log_n(&self, k: usize) -> f64 {
        match *self {
            Ladder::DoubleExponential { a } => a.powi(k as i32),
            Ladder::Geometric { n0, r } => n0.ln() + k as f64 * r.ln(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Ladder::DoubleExponential { a } if !(a > 4.0) => Err(Error::Params(format!(
                "double-exponential ladder needs a > 4, got {a}"
            ))),
            Ladder::Geometric { n0, r } if !(n0 > 0.0 && r > 1.0) => Err(Error::Params(format!(
                "geometric ladder needs n0 > 0 and r > 1, got n0 = {n0}, r = {r}"
            ))),
            _ => Ok(()),
        }
    }
}

/// Smooth compactly supported background `u₀(x) = amplitude·φ(|x|/radius)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BackgroundSpec {
    pub amplitude: f64,
    pub radius: f64,
}

/// Truncated superposition `u₀ + Σ_{k=k₀}^{K} v_{n_k}(0, · − x_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TanghuruSpec {
    pub k0: usize,
    pub k_max: usize,
    pub ladder: Ladder,
    /// One center per bubble, or empty for all at the origin.
    #[serde(default)]
    pub centers: Vec<[f64; 3]>,
    #[serde(default)]
    pub background: Option<BackgroundSpec>,
    pub gamma: f64,
    pub beta: f64,
}

impl TanghuruSpec {
    pub fn validate(&self, pp: &ProblemParams) -> Result<()> {
        self.ladder.validate()?;
        if self.k_max < self.k0 {
            return Err(Error::Params(format!(
                "truncation index {} below first index {}",
                self.k_max, self.k0
            )));
        }
        if !self.centers.is_empty() && self.centers.len() != self.k_max - self.k0 + 1 {
            return Err(Error::Params(format!(
                "{} centers for {} bubbles",
                self.centers.len(),
                self.k_max - self.k0 + 1
            )));
        }
        for k in self.k0..=self.k_max {
            self.bubble(k)?.validate_for(pp)?;
            if k > self.k0 && self.ladder.log_n(k) <= self.ladder.log_n(k - 1) {
                return Err(Error::Params(
                    "scales must increase along the ladder".into(),
                ));
            }
        }
        if let Some(bg) = &self.background {
            if !(bg.radius > 0.0) {
                return Err(Error::Params("background radius must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn indices(&self) -> std::ops::RangeInclusive<usize> {
        self.k0..=self.k_max
    }

    pub fn bubble(&self, k: usize) -> Result<BubbleParams> {
        BubbleParams::from_log_n(self.ladder.log_n(k), self.gamma, self.beta)
    }

    pub fn center(&self, k: usize) -> [f64; 3] {
        if self.centers.is_empty() {
            [0.0; 3]
        } else {
            self.centers[k - self.k0]
        }
    }

    fn check_index(&self, k: usize) -> Result<()> {
        if k < self.k0 || k > self.k_max {
            return Err(Error::IndexOutOfRange {
                index: k,
                lo: self.k0,
                hi: self.k_max,
            });
        }
        Ok(())
    }
}

/// `u₀` on the grid (zero without a background).
pub fn background_field(spec: &TanghuruSpec, grid: &GridSpec) -> Result<Field> {
    match &spec.background {
        None => Ok(Field::zeros(grid, Representation::Physical)),
        Some(bg) => {
            check_geometry(grid, &[0.0; 3], bg.radius)?;
            let (a, r0) = (bg.amplitude, bg.radius);
            Ok(sample_radial(grid, &[0.0; 3], |r| {
                a * crate::profile::bump(r / r0)
            }))
        }
    }
}

fn sum_bubbles<I>(
    pp: &ProblemParams,
    spec: &TanghuruSpec,
    phi: &CutoffProfile,
    grid: &GridSpec,
    indices: I,
    start: Field,
) -> Result<Field>
where
    I: IntoIterator<Item = usize>,
{
    let mut acc = start;
    for k in indices {
        let bp = spec.bubble(k)?;
        let v = bubble_initial(pp, &bp, phi, grid, &spec.center(k))?;
        acc = acc.add(&v)?;
    }
    Ok(acc)
}

/// `f₀ = u₀ + Σ_{k=k₀}^{K} v_{0,k}`.
pub fn tanghuru(
    pp: &ProblemParams,
    spec: &TanghuruSpec,
    phi: &CutoffProfile,
    grid: &GridSpec,
) -> Result<Field> {
    spec.validate(pp)?;
    let bg = background_field(spec, grid)?;
    sum_bubbles(pp, spec, phi, grid, spec.indices(), bg)
}

/// `u_L = e^{itΔ}(ρ_ε ∗ (u₀ + Σ_{l<k} v_{0,l}))`.
#[allow(clippy::too_many_arguments)]
pub fn linear_correction(
    pp: &ProblemParams,
    spec: &TanghuruSpec,
    phi: &CutoffProfile,
    rho: &Mollifier,
    grid: &GridSpec,
    k: usize,
    eps: f64,
    t: f64,
) -> Result<Field> {
    spec.check_index(k)?;
    let bg = background_field(spec, grid)?;
    let coarse = sum_bubbles(pp, spec, phi, grid, spec.k0..k, bg)?;
    Ok(free_propagate(&mollify(&coarse, rho, eps)?, t).into_physical())
}

/// `Σ_{l>k} ρ_ε ∗ v_{0,l}`, the initial remainder at rung `k`.
pub fn fine_remainder(
    pp: &ProblemParams,
    spec: &TanghuruSpec,
    phi: &CutoffProfile,
    rho: &Mollifier,
    grid: &GridSpec,
    k: usize,
    eps: f64,
) -> Result<Field> {
    spec.check_index(k)?;
    let zero = Field::zeros(grid, Representation::Physical);
    let fine = sum_bubbles(pp, spec, phi, grid, k + 1..=spec.k_max, zero)?;
    mollify(&fine, rho, eps)
}

/// Spectral weight used by the formula-level norms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormWeight {
    /// `⟨ξ⟩^{2m}`.
    Inhomogeneous(f64),
    /// `|ξ|^{2m}`.
    Homogeneous(f64),
}

impl NormWeight {
    fn order(&self) -> f64 {
        match *self {
            NormWeight::Inhomogeneous(m) | NormWeight::Homogeneous(m) => m,
        }
    }

    /// Weight at `ξ = nη` divided by `n^{2m}`: `(n^{−2} + η²)^m` or `|η|^{2m}`.
    fn rescaled(&self, log_n: f64, eta: f64) -> f64 {
        match *self {
            NormWeight::Inhomogeneous(m) => ((-2.0 * log_n).exp() + eta * eta).powf(m),
            NormWeight::Homogeneous(m) => {
                if m == 0.0 {
                    1.0
                } else if eta == 0.0 {
                    0.0
                } else {
                    eta.abs().powf(2.0 * m)
                }
            }
        }
    }
}

/// `log ‖ρ_ε ∗ v_n(0)‖` for the given weight, by quadrature of the continuum spectrum:
/// `κ² n^{2(m−s)} ∫ w(η) |φ̂(η) ρ̂(εnη)|² dη/(2π)^d` with `ξ = nη`.
pub fn mollified_bubble_ln_norm(
    pp: &ProblemParams,
    bp: &BubbleParams,
    phi: &CutoffProfile,
    rho: &Mollifier,
    eps: f64,
    weight: NormWeight,
) -> Result<f64> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::Domain(format!("mollification scale {eps} < 0")));
    }
    if phi.dim() != pp.dim || rho.dim() != pp.dim {
        return Err(Error::Domain("profile dimension does not match".into()));
    }
    // ε n computed in logs so that extreme scales stay finite.
    let en = if eps == 0.0 {
        0.0
    } else {
        (eps.ln() + bp.log_n).exp()
    };
    let eta_max = if en > 1.0 {
        SPECTRUM_CUTOFF / en
    } else {
        SPECTRUM_CUTOFF
    };
    let panel = 0.5 * (1.0f64).min(if en > 0.0 { 1.0 / en } else { 1.0 });
    let integral = radial_spectral_integral(pp.dim, eta_max, panel, |eta| {
        let a = phi.transform(eta) * rho.transform(en * eta);
        weight.rescaled(bp.log_n, eta) * a * a
    });
    if integral <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let m = weight.order();
    Ok(bp.kappa().ln() + (m - pp.s) * bp.log_n + 0.5 * integral.ln())
}

/// Norms of the ODE bubble through the scaling identity
/// `v_n^ε(t, x) = κ_n n^{d/2−s} W(nx)`, `W = ψ·e^{iσθ|ψ|^{p−1}}`, `ψ = φ ∗ ρ_{εn}`,
/// `θ = tλ_n²`. The radial profile is resolved on a one-dimensional grid; in `d = 3` the
/// odd extension `x·W(|x|)` carries the same weighted norms up to a factor `2π`.
#[derive(Debug, Clone)]
pub struct ScaledProfile {
    pp: ProblemParams,
    grid: GridSpec,
    /// `ψ` sampled on the auxiliary grid (times `x` in `d = 3`).
    psi: Field,
}

impl ScaledProfile {
    /// `en` is the product `εn`; `points` the auxiliary resolution (power of two).
    /// The auxiliary box has half-width `16(1 + εn)`.
    pub fn new(pp: &ProblemParams, rho: &Mollifier, en: f64, points: usize) -> Result<Self> {
        Self::with_box(pp, rho, en, points, 16.0 * (1.0 + en.max(0.0)))
    }

    /// As [`ScaledProfile::new`] with an explicit auxiliary half-width. Fractional weights
    /// carry a periodisation error that decays algebraically in the box size.
    pub fn with_box(
        pp: &ProblemParams,
        rho: &Mollifier,
        en: f64,
        points: usize,
        half: f64,
    ) -> Result<Self> {
        if pp.dim == 2 {
            return Err(Error::Domain(
                "scaled profiles are available for d = 1 and d = 3".into(),
            ));
        }
        if rho.dim() != pp.dim {
            return Err(Error::Domain("mollifier dimension does not match".into()));
        }
        if en.is_nan() || en < 0.0 {
            return Err(Error::Domain(format!("εn = {en} < 0")));
        }
        if !(half > 1.0 + en) {
            return Err(Error::Geometry(format!(
                "auxiliary half-width {half} does not contain the support radius {}",
                1.0 + en
            )));
        }
        let grid = GridSpec::new(1, points, half)?;
        let odd = pp.dim == 3;
        let raw = Field::from_fn(&grid, |x| {
            let r = x[0].abs();
            let v = crate::profile::bump(r);
            Complex64::new(if odd { x[0] * v } else { v }, 0.0)
        });
        let psi = rho.apply_with_symbol_dim(&raw, en)?.into_physical();
        Ok(Self { pp: *pp, grid, psi })
    }

    /// `W` for phase parameter `θ` (times `x` in `d = 3`).
    pub fn profile(&self, theta: f64) -> Field {
        let half = ((self.pp.p - 1) / 2) as i32;
        let odd = self.pp.dim == 3;
        let grid = self.grid.clone();
        let mut out = self.psi.clone();
        let sigma = self.pp.sigma;
        out.values_mut().iter_mut().enumerate().for_each(|(i, g)| {
            let x = grid.point(i)[0];
            let psi = if odd {
                if x == 0.0 {
                    Complex64::new(0.0, 0.0)
                } else {
                    *g / x
                }
            } else {
                *g
            };
            *g *= ode_phase(theta * psi.norm_sqr().powi(half), sigma);
        });
        out
    }

    /// `‖v_n^ε(t)‖` for `θ = tλ_n²` in the given weight, via the scaling identity.
    pub fn bubble_norm(&self, bp: &BubbleParams, theta: f64, weight: NormWeight) -> f64 {
        let w = self.profile(theta);
        let log_n = bp.log_n;
        let mut sq = weighted_norm(&w, |k| weight.rescaled(log_n, k)).powi(2);
        if self.pp.dim == 3 {
            sq *= 2.0 * std::f64::consts::PI;
        }
        let m = weight.order();
        bp.kappa() * ((m - self.pp.s) * log_n).exp() * sq.sqrt()
    }

    /// Fraction of `‖W‖²` carried by the top third of the auxiliary spectrum.
    pub fn spectral_tail(&self, theta: f64) -> f64 {
        let w = self.profile(theta).into_spectral();
        let cut = self.grid.nyquist() * 2.0 / 3.0;
        let total: f64 = w.values().iter().map(|v| v.norm_sqr()).sum();
        let tail: f64 = w
            .values()
            .iter()
            .enumerate()
            .filter(|(i, _)| self.grid.k2(*i).sqrt() > cut)
            .map(|(_, v)| v.norm_sqr())
            .sum();
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sobolev::{hs_dot_norm, hs_norm, lp_norm};
    use std::f64::consts::{E, PI};

    fn pp(dim: usize) -> ProblemParams {
        ProblemParams::new(3, -1.0, 0.3, dim).unwrap()
    }

    #[test]
    fn parameter_validation() {
        assert!(ProblemParams::new(4, 1.0, 0.3, 3).is_err());
        assert!(ProblemParams::new(1, 1.0, 0.3, 3).is_err());
        assert!(ProblemParams::new(3, 0.5, 0.3, 3).is_err());
        assert!(ProblemParams::new(3, 1.0, 1.6, 3).is_err());
        let p3 = pp(3);
        assert!((p3.critical_index() - 0.5).abs() < 1e-15);
        assert!(p3.is_supercritical());
        assert!(!pp(1).is_supercritical());
        assert!(BubbleParams::new(2.0, 0.05, 0.12).is_err());
        assert!(BubbleParams::new(10.0, 0.07, 0.12).is_err());
        let bp = BubbleParams::new(10.0, 0.05, 0.3).unwrap();
        assert!(bp.validate_for(&p3).is_err());
    }

    #[test]
    fn schedule_identities() {
        let p3 = pp(3);
        for n in [E, 8.0, 1e3, 1e12] {
            let bp = BubbleParams::new(n, 0.05, 0.12).unwrap();
            assert!((bp.epsilon() * n - 0.01).abs() < 1e-15);
            let lam2t = bp.t_n(&p3) * bp.lambda(&p3).powi(2);
            assert!((lam2t / bp.phase_scale(&p3) - 1.0).abs() < 1e-12);
            assert!(bp.phase_scale(&p3) >= 1.0);
        }
    }

    #[test]
    fn ode_phase_values() {
        assert_eq!(ode_phase(0.0, 1.0), Complex64::new(1.0, 0.0));
        let v = ode_phase(PI / 2.0, 1.0);
        assert!((v - Complex64::i()).norm() < 1e-15);
        assert!((ode_phase(123.4, -1.0).norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bubble_peak_and_errors() {
        let p1 = pp(1);
        let phi = CutoffProfile::new(1);
        let bp = BubbleParams::new(16.0, 0.05, 0.12).unwrap();
        let g = GridSpec::new(1, 512, 1.0).unwrap();
        let v = bubble_initial(&p1, &bp, &phi, &g, &[0.0; 3]).unwrap();
        let peak = lp_norm(&v, f64::INFINITY).unwrap();
        assert!((peak - bp.amplitude(&p1)).abs() < 1e-10 * peak);

        let coarse = GridSpec::new(1, 64, 1.0).unwrap();
        assert!(matches!(
            bubble_initial(&p1, &bp, &phi, &coarse, &[0.0; 3]),
            Err(Error::Resolution { .. })
        ));
        assert!(matches!(
            bubble_initial(&p1, &bp, &phi, &g, &[0.97, 0.0, 0.0]),
            Err(Error::Geometry(_))
        ));
    }

    #[test]
    fn ode_evolution_keeps_modulus() {
        let p1 = pp(1);
        let phi = CutoffProfile::new(1);
        let rho = Mollifier::new(1);
        let bp = BubbleParams::new(16.0, 0.05, 0.12).unwrap();
        let g = GridSpec::new(1, 512, 1.0).unwrap();
        let c = [0.1, 0.0, 0.0];
        let eps = bp.epsilon();
        let v0 = bubble_ode_evolved(&p1, &bp, &phi, &rho, &g, &c, eps, 0.0).unwrap();
        let vt = bubble_ode_evolved(&p1, &bp, &phi, &rho, &g, &c, eps, 0.37).unwrap();
        for (a, b) in v0.values().iter().zip(vt.values()) {
            assert!((a.norm() - b.norm()).abs() <= 1e-15 * a.norm().max(1.0));
        }
        let expected =
            mollify(&bubble_initial(&p1, &bp, &phi, &g, &c).unwrap(), &rho, eps).unwrap();
        for (a, b) in v0.values().iter().zip(expected.values()) {
            assert!((a - b).norm() < 1e-15);
        }
    }

    fn spec(k_max: usize) -> TanghuruSpec {
        TanghuruSpec {
            k0: 1,
            k_max,
            ladder: Ladder::Geometric { n0: 2.0, r: 2.0 },
            centers: vec![],
            background: None,
            gamma: 0.05,
            beta: 0.12,
        }
    }

    #[test]
    fn tanghuru_single_bubble_and_radial() {
        let p2 = pp(2);
        let phi = CutoffProfile::new(2);
        let g = GridSpec::new(2, 256, 1.0).unwrap();
        let one = tanghuru(&p2, &spec(1), &phi, &g).unwrap();
        let bp = spec(1).bubble(1).unwrap();
        let direct = bubble_initial(&p2, &bp, &phi, &g, &[0.0; 3]).unwrap();
        assert_eq!(one.values(), direct.values());

        let three = tanghuru(&p2, &spec(3), &phi, &g).unwrap();
        // Radial: invariant under the reflection x ↦ −x and the swap of axes.
        let n = g.points_per_axis();
        for i in 1..n {
            for j in 1..n {
                let a = three.values()[g.flat_index(&[i, j])];
                let b = three.values()[g.flat_index(&[j, i])];
                let c = three.values()[g.flat_index(&[n - i, j])];
                assert!((a - b).norm() < 1e-12 && (a - c).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn linear_correction_contract() {
        let p1 = pp(1);
        let phi = CutoffProfile::new(1);
        let rho = Mollifier::new(1);
        let g = GridSpec::new(1, 256, 1.0).unwrap();
        let sp = spec(3);
        let z = linear_correction(&p1, &sp, &phi, &rho, &g, 1, 0.01, 0.0).unwrap();
        assert!(z.values().iter().all(|v| v.norm() == 0.0));
        let a = linear_correction(&p1, &sp, &phi, &rho, &g, 3, 0.01, 0.0).unwrap();
        let b = linear_correction(&p1, &sp, &phi, &rho, &g, 3, 0.01, 0.05).unwrap();
        assert!((hs_norm(&a, 0.0) - hs_norm(&b, 0.0)).abs() < 1e-12 * hs_norm(&a, 0.0));
        assert!((hs_norm(&a, 0.7) - hs_norm(&b, 0.7)).abs() < 1e-11 * hs_norm(&a, 0.7));
        assert!(matches!(
            linear_correction(&p1, &sp, &phi, &rho, &g, 4, 0.01, 0.0),
            Err(Error::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn formula_norm_matches_field_norm() {
        for dim in [1usize, 3] {
            let p = pp(dim);
            let phi = CutoffProfile::new(dim);
            let rho = Mollifier::new(dim);
            let (n_pts, half, tol) = if dim == 1 {
                (8192, 1.0, 1e-8)
            } else {
                (128, 0.5, 1e-4)
            };
            let g = GridSpec::new(dim, n_pts, half).unwrap();
            let n = if dim == 1 { 64.0 } else { 8.0 };
            let bp = BubbleParams::new(n, 0.05, 0.12).unwrap();
            let v = bubble_initial(&p, &bp, &phi, &g, &[0.0; 3]).unwrap();
            for eps in [0.0, 0.3 / n, 2.0 / n] {
                let field = if eps == 0.0 {
                    v.clone()
                } else {
                    mollify(&v, &rho, eps).unwrap()
                };
                // Integer orders: the lattice sum equals the integral for data supported
                // inside the box.
                let cases = [
                    (NormWeight::Inhomogeneous(0.0), hs_norm(&field, 0.0)),
                    (NormWeight::Inhomogeneous(1.0), hs_norm(&field, 1.0)),
                    (NormWeight::Homogeneous(1.0), hs_dot_norm(&field, 1.0)),
                ];
                for (w, want) in cases {
                    let got = mollified_bubble_ln_norm(&p, &bp, &phi, &rho, eps, w)
                        .unwrap()
                        .exp();
                    assert!(
                        (got / want - 1.0).abs() < tol,
                        "d {dim} eps {eps} {w:?}: {got} vs {want}"
                    );
                }
            }
        }
    }

    #[test]
    fn scaled_profile_matches_field_norm() {
        for dim in [1usize, 3] {
            let p = pp(dim);
            let phi = CutoffProfile::new(dim);
            let rho = Mollifier::new(dim);
            let (n_pts, half, tol) = if dim == 1 {
                (4096, 1.0, 1e-8)
            } else {
                (128, 0.3, 1e-4)
            };
            let g = GridSpec::new(dim, n_pts, half).unwrap();
            let n = 8.0;
            let bp = BubbleParams::new(n, 0.05, 0.12).unwrap();
            let eps = bp.epsilon();
            let theta = 1.5;
            let t = theta / bp.lambda(&p).powi(2);
            let v = bubble_ode_evolved(&p, &bp, &phi, &rho, &g, &[0.0; 3], eps, t).unwrap();
            // In d = 1 the auxiliary grid is the field grid rescaled, so fractional
            // weights agree as well.
            let (sp, weights) = if dim == 1 {
                let sp = ScaledProfile::with_box(&p, &rho, eps * n, n_pts, n * half).unwrap();
                (
                    sp,
                    vec![NormWeight::Inhomogeneous(0.3), NormWeight::Homogeneous(1.0)],
                )
            } else {
                let sp = ScaledProfile::new(&p, &rho, eps * n, 1 << 14).unwrap();
                (
                    sp,
                    vec![NormWeight::Inhomogeneous(1.0), NormWeight::Homogeneous(1.0)],
                )
            };
            for w in weights {
                let want = match w {
                    NormWeight::Inhomogeneous(s) => hs_norm(&v, s),
                    NormWeight::Homogeneous(m) => hs_dot_norm(&v, m),
                };
                let got = sp.bubble_norm(&bp, theta, w);
                assert!(
                    (got / want - 1.0).abs() < tol,
                    "d {dim} {w:?}: {got} vs {want}"
                );
            }
        }
    }
}
