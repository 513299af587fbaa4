//! Sobolev, Lebesgue and space-time norms.

use std::borrow::Cow;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::{det_sum, radial_table, Field, GridSpec, Representation};

fn spectral_view(f: &Field) -> Cow<'_, Field> {
    match f.representation() {
        Representation::Spectral => Cow::Borrowed(f),
        Representation::Physical => Cow::Owned(f.spectral()),
    }
}

fn physical_view(f: &Field) -> Cow<'_, Field> {
    match f.representation() {
        Representation::Physical => Cow::Borrowed(f),
        Representation::Spectral => Cow::Owned(f.physical()),
    }
}

/// `(Σ_ξ w(|ξ|) |f̂(ξ)|²)^{1/2}` for a radial weight.
pub fn weighted_norm<W>(f: &Field, weight: W) -> f64
where
    W: Fn(f64) -> f64 + Sync,
{
    let spec = spectral_view(f);
    let table: Vec<f64> = radial_table(spec.grid(), |k| weight(k).into())
        .into_iter()
        .map(|c| c.re)
        .collect();
    let slots = spec.grid().radial_slots();
    det_sum(spec.values(), |i, v| {
        table[slots[i] as usize] * v.norm_sqr()
    })
    .sqrt()
}

/// Inhomogeneous Sobolev norm with weight `⟨ξ⟩^{2s}`.
pub fn hs_norm(f: &Field, s: f64) -> f64 {
    weighted_norm(f, |k| (1.0 + k * k).powf(s))
}

/// Homogeneous norm `‖|∇|^m f‖_{L²}`. The zero mode contributes only for `m = 0`,
/// where the norm is the `L²` norm.
pub fn hs_dot_norm(f: &Field, m: f64) -> f64 {
    weighted_norm(f, |k| {
        if m == 0.0 {
            1.0
        } else if k == 0.0 {
            0.0
        } else {
            k.powf(2.0 * m)
        }
    })
}

pub fn l2_norm(f: &Field) -> f64 {
    let spec_sum = |g: &Field| det_sum(g.values(), |_, v| v.norm_sqr());
    match f.representation() {
        Representation::Spectral => spec_sum(f).sqrt(),
        Representation::Physical => (spec_sum(f) * f.grid().cell_volume()).sqrt(),
    }
}

/// Rectangle-rule `L^p` norm over the box; `p = ∞` gives the maximum modulus.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::Domain(format!("L^p exponent {p} < 1")));
    }
    let phys = physical_view(f);
    if p.is_infinite() {
        return Ok(phys
            .values()
            .par_iter()
            .map(|v| v.norm())
            .reduce(|| 0.0, f64::max));
    }
    let sum = if p == 2.0 {
        det_sum(phys.values(), |_, v| v.norm_sqr())
    } else {
        det_sum(phys.values(), |_, v| v.norm().powf(p))
    };
    Ok((sum * phys.grid().cell_volume()).powf(1.0 / p))
}

/// Per-snapshot storage of a trajectory.
#[derive(Debug, Clone)]
pub enum Frames {
    Fields(Vec<Field>),
    /// `values[i][j]` is the `L^{exponents[j]}` norm of snapshot `i`.
    Norms {
        exponents: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

/// Time stamps together with the corresponding snapshots or their norms.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    times: Vec<f64>,
    frames: Frames,
}

fn check_times(times: &[f64]) -> Result<()> {
    if times.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::Domain(
            "time stamps must be strictly increasing".into(),
        ));
    }
    Ok(())
}

impl TrajectoryRecord {
    pub fn from_fields(times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        check_times(&times)?;
        if times.len() != fields.len() {
            return Err(Error::Domain(format!(
                "{} time stamps for {} snapshots",
                times.len(),
                fields.len()
            )));
        }
        if let Some(first) = fields.first() {
            if fields.iter().any(|f| f.grid() != first.grid()) {
                return Err(Error::GridMismatch);
            }
        }
        Ok(Self {
            times,
            frames: Frames::Fields(fields),
        })
    }

    pub fn from_norms(times: Vec<f64>, exponents: Vec<f64>, values: Vec<Vec<f64>>) -> Result<Self> {
        check_times(&times)?;
        if times.len() != values.len() || values.iter().any(|v| v.len() != exponents.len()) {
            return Err(Error::Domain("norm table shape does not match".into()));
        }
        Ok(Self {
            times,
            frames: Frames::Norms { exponents, values },
        })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn frames(&self) -> &Frames {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn fields(&self) -> Option<&[Field]> {
        match &self.frames {
            Frames::Fields(f) => Some(f),
            Frames::Norms { .. } => None,
        }
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.fields().and_then(|f| f.first()).map(Field::grid)
    }

    /// `L^r` norm of every snapshot.
    pub fn lp_series(&self, r: f64) -> Result<Vec<f64>> {
        match &self.frames {
            Frames::Fields(fields) => fields.par_iter().map(|f| lp_norm(f, r)).collect(),
            Frames::Norms { exponents, values } => {
                let j = exponents.iter().position(|&e| e == r).ok_or_else(|| {
                    Error::InsufficientData(format!("L^{r} norms were not recorded"))
                })?;
                Ok(values.iter().map(|row| row[j]).collect())
            }
        }
    }

    /// Applies `op` to every stored snapshot.
    pub fn map_fields<F>(&self, op: F) -> Result<TrajectoryRecord>
    where
        F: Fn(&Field) -> Field + Sync,
    {
        let fields = self
            .fields()
            .ok_or_else(|| Error::InsufficientData("trajectory stores norms only".into()))?;
        Ok(TrajectoryRecord {
            times: self.times.clone(),
            frames: Frames::Fields(fields.par_iter().map(&op).collect()),
        })
    }
}

/// Composite trapezoid of `g(t)^q` in time, then the `q`-th root; `q = ∞` is the maximum.
pub fn time_norm(times: &[f64], g: &[f64], q: f64) -> Result<f64> {
    if times.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "space-time norm needs at least 2 time stamps, got {}",
            times.len()
        )));
    }
    if q.is_nan() || q < 1.0 {
        return Err(Error::Domain(format!("time exponent {q} < 1")));
    }
    if q.is_infinite() {
        return Ok(g.iter().copied().fold(0.0, f64::max));
    }
    let integral: f64 = times
        .windows(2)
        .zip(g.windows(2))
        .map(|(t, v)| 0.5 * (t[1] - t[0]) * (v[0].powf(q) + v[1].powf(q)))
        .sum();
    Ok(integral.powf(1.0 / q))
}

/// `‖u‖_{L^q_t L^r_x}` over the recorded window.
pub fn spacetime_norm(tr: &TrajectoryRecord, q: f64, r: f64) -> Result<f64> {
    if tr.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "space-time norm needs at least 2 time stamps, got {}",
            tr.len()
        )));
    }
    let g = tr.lp_series(r)?;
    time_norm(tr.times(), &g, q)
}

/// Exponents `q = r` of the three terms of the refined Strichartz norm.
pub const STILDE_EXPONENTS: [f64; 3] = [4.0, 5.0, 30.0 / 7.0];

/// Sum of `‖⟨∇⟩^s u‖_{L^q_{t,x}}` over `q ∈ {4, 5, 30/7}`.
pub fn stilde_norm(tr: &TrajectoryRecord, s: f64) -> Result<f64> {
    if tr.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "space-time norm needs at least 2 time stamps, got {}",
            tr.len()
        )));
    }
    let lifted = tr.map_fields(|f| {
        f.spectral()
            .apply_radial(|k| (1.0 + k * k).powf(s / 2.0).into())
            .expect("spectral input")
            .into_physical()
    })?;
    STILDE_EXPONENTS
        .iter()
        .map(|&q| spacetime_norm(&lifted, q, q))
        .sum()
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct InterpolationReport {
    pub s: f64,
    pub h1: f64,
    pub hs: f64,
    pub h2: f64,
    /// `‖f‖_{H¹}^{2−s} / (‖f‖_{H^s} ‖f‖_{H²}^{1−s})`; at most one up to rounding.
    pub ratio: f64,
}

pub fn interpolation_check(f: &Field, s: f64) -> Result<InterpolationReport> {
    if !(0.0..1.0).contains(&s) {
        return Err(Error::Domain(format!(
            "interpolation index {s} outside [0, 1)"
        )));
    }
    let h1 = hs_norm(f, 1.0);
    let hs = hs_norm(f, s);
    let h2 = hs_norm(f, 2.0);
    let ratio = if h1 == 0.0 {
        0.0
    } else {
        // Work with ratios to H¹ so that large norms do not overflow the powers.
        1.0 / ((hs / h1) * (h2 / h1).powf(1.0 - s))
    };
    Ok(InterpolationReport {
        s,
        h1,
        hs,
        h2,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use std::f64::consts::PI;

    fn grid(dim: usize) -> GridSpec {
        GridSpec::new(dim, 16, PI).unwrap()
    }

    #[test]
    fn plane_wave_norms() {
        for dim in 1..=3 {
            let g = grid(dim);
            let j = [2i64, -1, 3];
            let f = Field::plane_wave(&g, &j[..dim]).unwrap();
            let k2: f64 = j[..dim].iter().map(|&x| (x * x) as f64).sum();
            let vol = (2.0 * PI).powf(dim as f64 / 2.0);
            for s in [0.0, 0.3, 1.0, 2.5] {
                let want = vol * (1.0 + k2).powf(s / 2.0);
                assert!((hs_norm(&f, s) - want).abs() < 1e-12 * want);
            }
            let want = vol * k2.powf(0.75);
            assert!((hs_dot_norm(&f, 1.5) - want).abs() < 1e-12 * want);
            assert!((lp_norm(&f, f64::INFINITY).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn two_mode_oracle() {
        let g = grid(2);
        let (a, b) = (Complex64::new(0.3, -1.2), Complex64::new(2.0, 0.5));
        let i1 = g.index_of_lattice(&[1, 2]).unwrap();
        let i2 = g.index_of_lattice(&[-4, 0]).unwrap();
        let mut f = Field::zeros(&g, Representation::Spectral);
        f.values_mut()[i1] = a;
        f.values_mut()[i2] = b;
        let s = 0.7;
        let want = (6f64.powf(s) * a.norm_sqr() + 17f64.powf(s) * b.norm_sqr()).sqrt();
        assert!((hs_norm(&f, s) - want).abs() < 1e-12 * want);
    }

    #[test]
    fn constant_field() {
        let g = grid(3);
        let c = Complex64::new(0.0, -2.5);
        let f = Field::from_fn(&g, |_| c);
        assert!(hs_dot_norm(&f, 1.0) < 1e-12);
        assert!((hs_dot_norm(&f, 0.0) - l2_norm(&f)).abs() < 1e-12 * l2_norm(&f));
        let want = 2.5 * (2.0 * PI).powf(1.5);
        assert!((lp_norm(&f, 2.0).unwrap() - want).abs() < 1e-12 * want);
        assert!(lp_norm(&f, 0.5).is_err());
    }

    #[test]
    fn smooth_bump_lp_against_analytic_integral() {
        // ‖e^{-x²}‖_{L^3(ℝ)} = (π/3)^{1/6}; the tail outside [-8, 8) is below e^{-192}.
        let g = GridSpec::new(1, 256, 8.0).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new((-x[0] * x[0]).exp(), 0.0));
        let want = (PI / 3.0).powf(1.0 / 6.0);
        assert!((lp_norm(&f, 3.0).unwrap() - want).abs() < 1e-6);
    }

    #[test]
    fn spacetime_closed_forms() {
        let g = grid(1);
        let f = Field::plane_wave(&g, &[3]).unwrap();
        let times: Vec<f64> = (0..9).map(|i| 0.25 * i as f64).collect();
        let frames = vec![f.clone(); times.len()];
        let tr = TrajectoryRecord::from_fields(times, frames).unwrap();
        let (q, r) = (4.0, 6.0);
        let want = 2f64.powf(1.0 / q) * (2.0 * PI).powf(1.0 / r);
        assert!((spacetime_norm(&tr, q, r).unwrap() - want).abs() < 1e-12);
        let inf = spacetime_norm(&tr, f64::INFINITY, r).unwrap();
        assert!((inf - (2.0 * PI).powf(1.0 / r)).abs() < 1e-12);

        let one = TrajectoryRecord::from_fields(vec![0.0], vec![f]).unwrap();
        assert!(matches!(
            spacetime_norm(&one, 2.0, 2.0),
            Err(Error::InsufficientData(_))
        ));
        assert!(stilde_norm(&one, 0.5).is_err());
    }

    #[test]
    fn times_must_increase() {
        let g = grid(1);
        let f = Field::zeros(&g, Representation::Physical);
        assert!(TrajectoryRecord::from_fields(vec![0.0, 0.0], vec![f.clone(), f]).is_err());
    }

    #[test]
    fn interpolation_equality_for_single_mode() {
        let g = grid(1);
        let f = Field::plane_wave(&g, &[5]).unwrap();
        let rep = interpolation_check(&f, 0.4).unwrap();
        assert!((rep.ratio - 1.0).abs() < 1e-12);
        assert!(interpolation_check(&f, 1.0).is_err());
        assert!(interpolation_check(&f, -0.1).is_err());
    }
}
