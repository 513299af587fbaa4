//! Wiener randomization over unit frequency blocks, Monte Carlo tails of space-time
//! norms of randomized free evolutions, and the high/low bilinear interaction check.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bubbles::ProblemParams;
use crate::error::{Error, Result};
use crate::fit::{weighted_linear_fit, LinearFit};
use crate::grid::{det_sum, Field, GridSpec, Representation};
use crate::sobolev::{l2_norm, lp_norm, time_norm};

/// Word stride reserved per block in the counter-based stream. A complex Gaussian uses
/// two normal draws, each a few words on average.
const WORDS_PER_BLOCK: u128 = 64;

/// Blocks holding less than this fraction of the base energy count as degenerate. The
/// level sits well above transform rounding (about `1e−32` relative).
pub const DEGENERATE_FRACTION: f64 = 1e-20;

fn window(x: f64) -> f64 {
    if x.abs() >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - x * x)).exp()
    }
}

/// `ψ(x) = b(x)/Σ_j b(x−j)` with `b` supported in `(−1, 1)`.
pub fn partition_window(x: f64) -> f64 {
    let base = x.floor();
    let num = window(x);
    if num == 0.0 {
        return 0.0;
    }
    let den = window(x - base) + window(x - base - 1.0);
    num / den
}

/// Separable partition of unity `Π_a ψ(ξ_a − k_a)` over unit cubes of the wavenumber
/// lattice.
#[derive(Debug, Clone)]
pub struct UnitPartition {
    grid: GridSpec,
    kmin: i64,
    range: usize,
    /// For each FFT index along an axis, the blocks (offset from `kmin`) and weights.
    axis: Vec<Vec<(usize, f64)>>,
    axis_active: Vec<bool>,
}

pub fn build_partition(grid: &GridSpec) -> UnitPartition {
    let n = grid.points_per_axis();
    let dk = grid.wavenumber_step();
    let mut raw: Vec<Vec<(i64, f64)>> = Vec::with_capacity(n);
    for i in 0..n {
        let j = if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        };
        let xi = dk * j as f64;
        let k0 = xi.floor() as i64;
        let entries: Vec<(i64, f64)> = [k0, k0 + 1]
            .into_iter()
            .map(|k| (k, partition_window(xi - k as f64)))
            .filter(|&(_, w)| w > 0.0)
            .collect();
        raw.push(entries);
    }
    let kmin = raw.iter().flatten().map(|e| e.0).min().unwrap_or(0);
    let kmax = raw.iter().flatten().map(|e| e.0).max().unwrap_or(0);
    let range = (kmax - kmin + 1) as usize;
    let mut axis_active = vec![false; range];
    let axis = raw
        .into_iter()
        .map(|entries| {
            entries
                .into_iter()
                .map(|(k, w)| {
                    let o = (k - kmin) as usize;
                    axis_active[o] = true;
                    (o, w)
                })
                .collect()
        })
        .collect();
    UnitPartition {
        grid: grid.clone(),
        kmin,
        range,
        axis,
        axis_active,
    }
}

impl UnitPartition {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Size of the dense block index space `range^d`.
    pub fn block_count(&self) -> usize {
        self.range.pow(self.grid.dim() as u32)
    }

    pub fn block_of(&self, linear: usize) -> [i64; 3] {
        let mut k = [0i64; 3];
        let mut rest = linear;
        for a in (0..self.grid.dim()).rev() {
            k[a] = (rest % self.range) as i64 + self.kmin;
            rest /= self.range;
        }
        k
    }

    pub fn linear_of(&self, block: &[i64]) -> Result<usize> {
        let mut lin = 0usize;
        for &k in block.iter().take(self.grid.dim()) {
            let o = k - self.kmin;
            if o < 0 || o as usize >= self.range {
                return Err(Error::Domain(format!(
                    "block coordinate {k} outside [{}, {}]",
                    self.kmin,
                    self.kmin + self.range as i64 - 1
                )));
            }
            lin = lin * self.range + o as usize;
        }
        Ok(lin)
    }

    /// Blocks whose cube meets the resolved lattice.
    pub fn is_active(&self, linear: usize) -> bool {
        let mut rest = linear;
        for _ in 0..self.grid.dim() {
            if !self.axis_active[rest % self.range] {
                return false;
            }
            rest /= self.range;
        }
        true
    }

    pub fn active_blocks(&self) -> Vec<usize> {
        (0..self.block_count())
            .filter(|&b| self.is_active(b))
            .collect()
    }

    /// Calls `visit(block, weight)` for every block covering lattice point `idx`.
    fn for_each_block<F: FnMut(usize, f64)>(&self, idx: usize, mut visit: F) {
        let m = self.grid.multi_index(idx);
        let d = self.grid.dim();
        let lists: Vec<&Vec<(usize, f64)>> = (0..d).map(|a| &self.axis[m[a]]).collect();
        let counts: Vec<usize> = lists.iter().map(|l| l.len()).collect();
        if counts.contains(&0) {
            return;
        }
        let total: usize = counts.iter().product();
        for c in 0..total {
            let mut rest = c;
            let mut lin = 0usize;
            let mut w = 1.0;
            for a in 0..d {
                let (o, wa) = lists[a][rest % counts[a]];
                rest /= counts[a];
                lin = lin * self.range + o;
                w *= wa;
            }
            visit(lin, w);
        }
    }

    /// `Σ_k ψ(ξ−k)` at lattice point `idx`.
    pub fn total_weight(&self, idx: usize) -> f64 {
        let mut s = 0.0;
        self.for_each_block(idx, |_, w| s += w);
        s
    }

    /// `P_{1,k} f`, returned in the representation of `f`.
    pub fn project(&self, f: &Field, block: &[i64]) -> Result<Field> {
        self.check_grid(f)?;
        let target = self.linear_of(block)?;
        let spec = f.spectral();
        let mut out = spec.clone();
        for (idx, v) in out.values_mut().iter_mut().enumerate() {
            let mut w = 0.0;
            self.for_each_block(idx, |b, wb| {
                if b == target {
                    w = wb;
                }
            });
            *v *= w;
        }
        Ok(match f.representation() {
            Representation::Physical => out.into_physical(),
            Representation::Spectral => out,
        })
    }

    /// `Σ_k c_k P_{1,k} f` for a dense coefficient vector indexed by linear block.
    pub fn synthesize(&self, f: &Field, coeffs: &[Complex64]) -> Result<Field> {
        self.check_grid(f)?;
        if coeffs.len() != self.block_count() {
            return Err(Error::Domain(format!(
                "expected {} block coefficients, got {}",
                self.block_count(),
                coeffs.len()
            )));
        }
        let spec = f.spectral();
        let values: Vec<Complex64> = spec
            .values()
            .par_iter()
            .enumerate()
            .map(|(idx, v)| {
                let mut acc = Complex64::new(0.0, 0.0);
                self.for_each_block(idx, |b, w| acc += coeffs[b] * w);
                acc * v
            })
            .collect();
        Field::from_values(&self.grid, values, Representation::Spectral)
    }

    /// `‖P_{1,k} f‖²_{L²}` for every block.
    pub fn block_norms_sq(&self, f: &Field) -> Result<Vec<f64>> {
        self.check_grid(f)?;
        let spec = f.spectral();
        let mut out = vec![0.0; self.block_count()];
        for (idx, v) in spec.values().iter().enumerate() {
            let a = v.norm_sqr();
            if a == 0.0 {
                continue;
            }
            self.for_each_block(idx, |b, w| out[b] += w * w * a);
        }
        Ok(out)
    }

    fn check_grid(&self, f: &Field) -> Result<()> {
        if f.grid() != &self.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }
}

/// Base datum with independent complex Gaussian block coefficients, `E g = 0`,
/// `E|g|² = 1`.
#[derive(Debug, Clone)]
pub struct RandomEnsemble {
    partition: UnitPartition,
    base: Field,
    seed: u64,
    samples: usize,
    block_norms_sq: Vec<f64>,
    /// Active blocks on which the base has no energy above the degeneracy floor; their
    /// coefficients are unused.
    skipped: Vec<usize>,
    used: Vec<usize>,
}

impl RandomEnsemble {
    pub fn new(base: &Field, seed: u64, samples: usize) -> Result<Self> {
        let partition = build_partition(base.grid());
        let block_norms_sq = partition.block_norms_sq(base)?;
        let total: f64 = block_norms_sq.iter().sum();
        let floor = DEGENERATE_FRACTION * total;
        let (used, skipped): (Vec<usize>, Vec<usize>) = partition
            .active_blocks()
            .into_iter()
            .partition(|&b| block_norms_sq[b] > floor);
        if used.is_empty() {
            return Err(Error::Domain("base datum vanishes on every block".into()));
        }
        Ok(Self {
            partition,
            base: base.spectral(),
            seed,
            samples,
            block_norms_sq,
            skipped,
            used,
        })
    }

    pub fn partition(&self) -> &UnitPartition {
        &self.partition
    }

    pub fn base(&self) -> &Field {
        &self.base
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn samples(&self) -> usize {
        self.samples
    }

    pub fn skipped_blocks(&self) -> &[usize] {
        &self.skipped
    }

    /// Blocks carrying base energy.
    pub fn used_blocks(&self) -> &[usize] {
        &self.used
    }

    pub fn block_norms_sq(&self) -> &[f64] {
        &self.block_norms_sq
    }

    /// `Σ_k ‖P_{1,k} f₀‖²`, the mean of `‖f₀^ω‖²`.
    pub fn expected_l2_sq(&self) -> f64 {
        self.used.iter().map(|&b| self.block_norms_sq[b]).sum()
    }

    /// Dense coefficient vector of sample `i`; a pure function of `(seed, i, block)`.
    pub fn coefficients(&self, i: usize) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(i as u64);
        let mut out = vec![Complex64::new(0.0, 0.0); self.partition.block_count()];
        for &b in &self.used {
            rng.set_word_pos(b as u128 * WORDS_PER_BLOCK);
            let x: f64 = rng.sample(StandardNormal);
            let y: f64 = rng.sample(StandardNormal);
            out[b] = Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2;
        }
        out
    }

    pub fn synthesize(&self, coeffs: &[Complex64]) -> Result<Field> {
        self.partition.synthesize(&self.base, coeffs)
    }
}

/// `f₀^ω = Σ_k g_k^{(i)} P_{1,k} f₀` in physical representation.
pub fn wiener_sample(ens: &RandomEnsemble, i: usize) -> Result<Field> {
    Ok(ens.synthesize(&ens.coefficients(i))?.into_physical())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TailConfig {
    /// Regularity of the multiplier `⟨∇⟩^s`.
    pub s: f64,
    pub q: f64,
    pub r: f64,
    pub t_end: f64,
    /// Time stamps on `[0, T]`, endpoints included.
    pub snapshots: usize,
    /// Thresholds; empty selects 64 equispaced values up to the largest sample norm.
    pub lambdas: Vec<f64>,
    /// Survival window used by the fit.
    pub survival_min: f64,
    pub survival_max: f64,
    /// Thresholds with fewer exceedances are dropped from the fit.
    pub min_exceedances: usize,
}

impl Default for TailConfig {
    fn default() -> Self {
        Self {
            s: 0.3,
            q: 6.0,
            r: 6.0,
            t_end: 1.0,
            snapshots: 64,
            lambdas: Vec::new(),
            survival_min: 1e-3,
            survival_max: 0.5,
            min_exceedances: 5,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailReport {
    pub samples: usize,
    pub lambdas: Vec<f64>,
    pub survival: Vec<f64>,
    pub stderr: Vec<f64>,
    pub exceedances: Vec<usize>,
    /// Weighted fit of `ln S` against `λ²`; absent with fewer than two usable points.
    pub fit: Option<LinearFit>,
    /// Indices into `lambdas` used by the fit.
    pub fitted: Vec<usize>,
    /// Thresholds inside the survival window dropped for too few exceedances.
    pub dropped: Vec<f64>,
    pub norms: Vec<f64>,
}

impl TailReport {
    /// CSV with header `lambda,survival,stderr,exceedances`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(w);
        wr.write_record(["lambda", "survival", "stderr", "exceedances"])?;
        for i in 0..self.lambdas.len() {
            wr.write_record([
                self.lambdas[i].to_string(),
                self.survival[i].to_string(),
                self.stderr[i].to_string(),
                self.exceedances[i].to_string(),
            ])?;
        }
        wr.flush()?;
        Ok(())
    }
}

/// `‖⟨∇⟩^s e^{itΔ} f‖_{L^q_t L^r_x([0,T])}` by trapezoid in time.
pub fn free_spacetime_norm(
    f: &Field,
    s: f64,
    q: f64,
    r: f64,
    t_end: f64,
    snapshots: usize,
) -> Result<f64> {
    if snapshots < 2 {
        return Err(Error::InsufficientData(format!(
            "space-time norm needs at least 2 time stamps, got {snapshots}"
        )));
    }
    let weighted = f
        .spectral()
        .apply_radial(|k| Complex64::new((1.0 + k * k).powf(0.5 * s), 0.0))?;
    let times: Vec<f64> = (0..snapshots)
        .map(|j| t_end * j as f64 / (snapshots - 1) as f64)
        .collect();
    let mut g = Vec::with_capacity(snapshots);
    for &t in &times {
        let ut = weighted
            .apply_radial(|k| Complex64::from_polar(1.0, -k * k * t))?
            .into_physical();
        g.push(lp_norm(&ut, r)?);
    }
    time_norm(&times, &g, q)
}

/// Empirical survival of the randomized space-time norm and its sub-Gaussian fit.
pub fn strichartz_tail(
    ens: &RandomEnsemble,
    pp: &ProblemParams,
    cfg: &TailConfig,
) -> Result<TailReport> {
    if pp.dim != ens.partition.grid().dim() {
        return Err(Error::Domain(
            "problem dimension does not match the grid".into(),
        ));
    }
    for (name, v) in [("q", cfg.q), ("r", cfg.r)] {
        if !(v >= 2.0 && v.is_finite()) {
            return Err(Error::Domain(format!("{name} = {v} must lie in [2, ∞)")));
        }
    }
    if !(cfg.t_end > 0.0) {
        return Err(Error::Domain(format!(
            "window length {} must be positive",
            cfg.t_end
        )));
    }
    if ens.samples < 1000 {
        return Err(Error::InsufficientData(format!(
            "tail estimation needs at least 1000 samples, got {}",
            ens.samples
        )));
    }
    let norms: Vec<f64> = (0..ens.samples)
        .into_par_iter()
        .map(|i| {
            let f = ens.synthesize(&ens.coefficients(i))?;
            free_spacetime_norm(&f, cfg.s, cfg.q, cfg.r, cfg.t_end, cfg.snapshots)
        })
        .collect::<Result<_>>()?;
    let lambdas = if cfg.lambdas.is_empty() {
        let top = norms.iter().copied().fold(0.0, f64::max);
        (0..64).map(|i| top * i as f64 / 63.0).collect()
    } else {
        cfg.lambdas.clone()
    };
    Ok(tail_from_norms(norms, lambdas, cfg))
}

/// Survival table and fit from precomputed sample norms.
pub fn tail_from_norms(norms: Vec<f64>, lambdas: Vec<f64>, cfg: &TailConfig) -> TailReport {
    let n = norms.len() as f64;
    let exceedances: Vec<usize> = lambdas
        .iter()
        .map(|&l| norms.iter().filter(|&&v| v > l).count())
        .collect();
    let survival: Vec<f64> = exceedances.iter().map(|&c| c as f64 / n).collect();
    let stderr: Vec<f64> = survival
        .iter()
        .map(|&s| (s * (1.0 - s) / n).sqrt())
        .collect();
    let mut fitted = Vec::new();
    let mut dropped = Vec::new();
    for (i, &s) in survival.iter().enumerate() {
        if s > cfg.survival_max {
            continue;
        }
        if exceedances[i] < cfg.min_exceedances || s < cfg.survival_min {
            if s <= cfg.survival_max && exceedances[i] < cfg.min_exceedances {
                dropped.push(lambdas[i]);
            }
            continue;
        }
        fitted.push(i);
    }
    let x: Vec<f64> = fitted.iter().map(|&i| lambdas[i] * lambdas[i]).collect();
    let y: Vec<f64> = fitted.iter().map(|&i| survival[i].ln()).collect();
    // Var(ln S) ≈ (1 − S)/(nS).
    let w: Vec<f64> = fitted
        .iter()
        .map(|&i| n * survival[i] / (1.0 - survival[i]))
        .collect();
    let fit = weighted_linear_fit(&x, &y, &w).ok();
    TailReport {
        samples: norms.len(),
        lambdas,
        survival,
        stderr,
        exceedances,
        fit,
        fitted,
        dropped,
        norms,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BilinearConfig {
    /// Low frequency bound `N`.
    pub n_low: f64,
    /// High frequency scale `M`; the high datum lives in `M/2 ≤ |ξ| ≤ 2M`.
    pub m_high: f64,
    /// Window length; `None` selects `16/(MN)`.
    pub t_end: Option<f64>,
    pub samples: usize,
    pub seed: u64,
    /// Wave packets per datum.
    pub packets: usize,
}

impl Default for BilinearConfig {
    fn default() -> Self {
        Self {
            n_low: 1.0,
            m_high: 4.0,
            t_end: None,
            samples: 8,
            seed: 0,
            packets: 3,
        }
    }
}

impl BilinearConfig {
    pub fn window(&self) -> f64 {
        self.t_end.unwrap_or(16.0 / (self.m_high * self.n_low))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BilinearReport {
    pub n_low: f64,
    pub m_high: f64,
    pub t_end: f64,
    /// `‖e^{itΔ}u₀ · e^{itΔ}v₀‖_{L²} / (N^{(d−1)/2} M^{−1/2} ‖u₀‖ ‖v₀‖)` per sample.
    pub ratios: Vec<f64>,
    pub mean: f64,
    pub max: f64,
    pub min: f64,
    pub std: f64,
}

/// `‖e^{itΔ}u₀ · e^{itΔ}v₀‖_{L²([0,T] × box)}` by trapezoid with `time_samples` stamps.
pub fn bilinear_spacetime_norm(
    u0: &Field,
    v0: &Field,
    t_end: f64,
    time_samples: usize,
) -> Result<f64> {
    if u0.grid() != v0.grid() {
        return Err(Error::GridMismatch);
    }
    if time_samples < 2 {
        return Err(Error::InsufficientData(format!(
            "space-time norm needs at least 2 time stamps, got {time_samples}"
        )));
    }
    let grid = u0.grid().clone();
    let us = u0.spectral();
    let vs = v0.spectral();
    let times: Vec<f64> = (0..time_samples)
        .map(|j| t_end * j as f64 / (time_samples - 1) as f64)
        .collect();
    let mut g = Vec::with_capacity(time_samples);
    for &t in &times {
        let prop = |k: f64| Complex64::from_polar(1.0, -k * k * t);
        let ut = us.apply_radial(prop)?.into_physical();
        let vt = vs.apply_radial(prop)?.into_physical();
        let sq = det_sum(ut.values(), |i, a| a.norm_sqr() * vt.values()[i].norm_sqr());
        g.push((sq * grid.cell_volume()).sqrt());
    }
    time_norm(&times, &g, 2.0)
}

fn unit_direction(rng: &mut ChaCha8Rng, dim: usize) -> [f64; 3] {
    loop {
        let mut v = [0.0; 3];
        for c in v.iter_mut().take(dim) {
            *c = rng.sample(StandardNormal);
        }
        let r = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        if r > 1e-12 {
            return v.map(|c| c / r);
        }
    }
}

fn uniform_ball(rng: &mut ChaCha8Rng, dim: usize, radius: f64) -> [f64; 3] {
    let dir = unit_direction(rng, dim);
    let rho = radius * rng.random::<f64>().powf(1.0 / dim as f64);
    dir.map(|c| c * rho)
}

fn complex_gaussian(rng: &mut ChaCha8Rng) -> Complex64 {
    let x: f64 = rng.sample(StandardNormal);
    let y: f64 = rng.sample(StandardNormal);
    Complex64::new(x, y) * std::f64::consts::FRAC_1_SQRT_2
}

/// Sum of Gaussian wave packets `a e^{iζ·x} e^{−|x−y|²/w²}`, then a spectral mask.
fn packet_field<M>(
    grid: &GridSpec,
    packets: &[(Complex64, [f64; 3], [f64; 3])],
    width: f64,
    mask: M,
) -> Result<Field>
where
    M: Fn(f64) -> bool + Sync,
{
    let d = grid.dim();
    let f = Field::from_fn(grid, |x| {
        let mut acc = Complex64::new(0.0, 0.0);
        for (a, zeta, y) in packets {
            let mut phase = 0.0;
            let mut r2 = 0.0;
            for i in 0..d {
                phase += zeta[i] * x[i];
                r2 += (x[i] - y[i]).powi(2);
            }
            acc += a * Complex64::from_polar((-r2 / (width * width)).exp(), phase);
        }
        acc
    });
    Ok(f.into_spectral()
        .apply_radial(|k| if mask(k) { 1.0.into() } else { 0.0.into() })?
        .into_physical())
}

/// Draws of `u₀` localized near the origin with `|ξ| ≤ N`, and `v₀` made of packets
/// in `M/2 ≤ |ξ| ≤ 2M` that cross the origin at mid-window.
pub fn bilinear_data(
    grid: &GridSpec,
    cfg: &BilinearConfig,
    sample: usize,
) -> Result<(Field, Field)> {
    let d = grid.dim();
    let (n, m) = (cfg.n_low, cfg.m_high);
    let t = cfg.window();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(sample as u64);
    let low: Vec<_> = (0..cfg.packets)
        .map(|_| {
            (
                complex_gaussian(&mut rng),
                uniform_ball(&mut rng, d, 0.5 * n),
                [0.0; 3],
            )
        })
        .collect();
    let high: Vec<_> = (0..cfg.packets)
        .map(|_| {
            let a = complex_gaussian(&mut rng);
            let dir = unit_direction(&mut rng, d);
            let speed = m * (0.75 + 0.75 * rng.random::<f64>());
            let zeta = dir.map(|c| c * speed);
            let delta = uniform_ball(&mut rng, d, 1.0 / n);
            let y = [0, 1, 2].map(|i| -zeta[i] * t + delta[i]);
            (a, zeta, y)
        })
        .collect();
    let u0 = packet_field(grid, &low, 2.0 / n, |k| k <= n)?;
    let v0 = packet_field(grid, &high, 8.0 / m, |k| k >= 0.5 * m && k <= 2.0 * m)?;
    Ok((u0, v0))
}

fn bilinear_preconditions(grid: &GridSpec, cfg: &BilinearConfig) -> Result<()> {
    let (n, m) = (cfg.n_low, cfg.m_high);
    if !(n > 0.0 && m >= 4.0 * n) {
        return Err(Error::Params(format!(
            "need M >= 4N > 0, got N = {n}, M = {m}"
        )));
    }
    let required = PI / (2.0 * m + n);
    if grid.spacing() > required {
        return Err(Error::Resolution {
            scale: 1.0 / m,
            spacing: grid.spacing(),
            required,
        });
    }
    let annulus = grid
        .radial_wavenumbers()
        .into_iter()
        .any(|k| k >= 0.5 * m && k <= 2.0 * m);
    if !annulus {
        return Err(Error::Resolution {
            scale: 1.0 / m,
            spacing: grid.spacing(),
            required: grid.wavenumber_step(),
        });
    }
    // Packets start at distance up to 1.5 M T and end symmetrically.
    let reach = 1.5 * m * cfg.window() + 1.0 / n + 3.0 * 8.0 / m;
    if reach > grid.half_width() {
        return Err(Error::Geometry(format!(
            "high-frequency packets travel {reach:.3} beyond the half-width {}",
            grid.half_width()
        )));
    }
    Ok(())
}

/// Time stamps resolving the fastest beat `|ξ|²` differences with 32 samples per period.
fn bilinear_time_samples(cfg: &BilinearConfig) -> usize {
    let omega = 4.0 * cfg.m_high * cfg.m_high + cfg.n_low * cfg.n_low;
    let dt = 2.0 * PI / (32.0 * omega);
    ((cfg.window() / dt).ceil() as usize + 1).max(65)
}

/// Ratio statistics of the bilinear space-time norm against `N^{(d−1)/2} M^{−1/2}`.
pub fn bilinear_check(grid: &GridSpec, cfg: &BilinearConfig) -> Result<BilinearReport> {
    bilinear_preconditions(grid, cfg)?;
    if cfg.samples == 0 || cfg.packets == 0 {
        return Err(Error::InsufficientData(
            "bilinear check needs samples and packets".into(),
        ));
    }
    let d = grid.dim() as f64;
    let scale = cfg.n_low.powf(0.5 * (d - 1.0)) * cfg.m_high.powf(-0.5);
    let nt = bilinear_time_samples(cfg);
    let t = cfg.window();
    let ratios: Vec<f64> = (0..cfg.samples)
        .into_par_iter()
        .map(|i| {
            let (u0, v0) = bilinear_data(grid, cfg, i)?;
            let norm = bilinear_spacetime_norm(&u0, &v0, t, nt)?;
            Ok(norm / (scale * l2_norm(&u0) * l2_norm(&v0)))
        })
        .collect::<Result<_>>()?;
    let k = ratios.len() as f64;
    let mean = ratios.iter().sum::<f64>() / k;
    let var = ratios.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (k - 1.0).max(1.0);
    Ok(BilinearReport {
        n_low: cfg.n_low,
        m_high: cfg.m_high,
        t_end: t,
        max: ratios.iter().copied().fold(f64::MIN, f64::max),
        min: ratios.iter().copied().fold(f64::MAX, f64::min),
        std: var.sqrt(),
        mean,
        ratios,
    })
}
