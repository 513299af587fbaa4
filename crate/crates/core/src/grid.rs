//! Periodic spectral grid on the box `[-L, L)^d` and the complex fields that live on it.
//!
//! The discrete transform is normalized so that the spectral coefficient at `ξ` is
//! `(2L)^{-d/2} ∫ f(x) e^{-iξ·x} dx` evaluated by the rectangle rule. With this choice
//! Parseval is an identity between the physical `L²` quadrature and the plain `ℓ²` sum
//! of coefficients, and a plane wave `e^{ik·x}` has the single coefficient `(2L)^{d/2}`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Representation {
    Physical,
    Spectral,
}

/// Target number of complex values handled by one rayon task in the transform kernels.
const TASK_VALUES: usize = 1 << 13;
/// Lines transformed together along the middle axis of an in-cache plane.
const PENCIL: usize = 16;
/// Lines transformed together along the outermost axis of a 3D grid.
const WIDE_PENCIL: usize = 16;

struct PencilWork {
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    signs: Vec<f64>,
}

/// Raw pointer shared by transform tasks that write disjoint index sets.
#[derive(Clone, Copy)]
struct SharedMut(*mut Complex64);

// SAFETY: used only by `dft_in_place`, whose tasks write disjoint elements.
unsafe impl Send for SharedMut {}
unsafe impl Sync for SharedMut {}

impl SharedMut {
    fn get(self) -> *mut Complex64 {
        self.0
    }
}

struct GridInner {
    dim: usize,
    n: usize,
    half_width: f64,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// `|j|²` for every lattice point, `ξ = (π/L) j`.
    j2: Vec<u64>,
    /// Distinct values of `j2`, sorted, and the position of each point in that list.
    radial_keys: Vec<u64>,
    radial_slot: Vec<u32>,
}

/// A periodic grid with `n` points per axis on `[-L, L)^d`.
///
/// Cloning is cheap; transform plans and lattice tables are shared.
#[derive(Clone)]
pub struct GridSpec {
    inner: Arc<GridInner>,
}

impl fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.inner.dim)
            .field("n", &self.inner.n)
            .field("half_width", &self.inner.half_width)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.inner, &other.inner)
            || (self.inner.dim == other.inner.dim
                && self.inner.n == other.inner.n
                && self.inner.half_width == other.inner.half_width)
    }
}

impl GridSpec {
    pub fn new(dim: usize, n: usize, half_width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n < 8 || !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per axis {n} must be a power of two >= 8"
            )));
        }
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(Error::InvalidGrid(format!(
                "half width {half_width} must be > 0"
            )));
        }
        let len = n
            .checked_pow(dim as u32)
            .filter(|&l| l <= u32::MAX as usize)
            .ok_or_else(|| Error::InvalidGrid("grid too large".into()))?;

        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);

        let j2: Vec<u64> = (0..len)
            .into_par_iter()
            .map(|idx| {
                let mut acc = 0u64;
                let mut rest = idx;
                for _ in 0..dim {
                    let j = signed_index(rest % n, n);
                    acc += (j * j) as u64;
                    rest /= n;
                }
                acc
            })
            .collect();
        let mut radial_keys = j2.clone();
        radial_keys.par_sort_unstable();
        radial_keys.dedup();
        let radial_slot = j2
            .par_iter()
            .map(|k| radial_keys.binary_search(k).expect("key present") as u32)
            .collect();

        Ok(Self {
            inner: Arc::new(GridInner {
                dim,
                n,
                half_width,
                forward,
                inverse,
                j2,
                radial_keys,
                radial_slot,
            }),
        })
    }

    pub fn dim(&self) -> usize {
        self.inner.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.inner.n
    }

    pub fn half_width(&self) -> f64 {
        self.inner.half_width
    }

    pub fn len(&self) -> usize {
        self.inner.j2.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Grid spacing `h = 2L/N`.
    pub fn spacing(&self) -> f64 {
        2.0 * self.inner.half_width / self.inner.n as f64
    }

    /// Quadrature weight `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.inner.dim as i32)
    }

    /// Box volume `(2L)^d`.
    pub fn volume(&self) -> f64 {
        (2.0 * self.inner.half_width).powi(self.inner.dim as i32)
    }

    /// Lattice spacing in frequency, `π/L`.
    pub fn wavenumber_step(&self) -> f64 {
        std::f64::consts::PI / self.inner.half_width
    }

    /// Largest resolved wavenumber magnitude along one axis, `π/h`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI / self.spacing()
    }

    /// Axis indices of a flat (row-major, last axis fastest) index.
    pub fn multi_index(&self, idx: usize) -> [usize; 3] {
        let n = self.inner.n;
        let mut out = [0usize; 3];
        let mut rest = idx;
        for axis in (0..self.inner.dim).rev() {
            out[axis] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .take(self.inner.dim)
            .fold(0, |acc, &i| acc * self.inner.n + i)
    }

    /// Physical coordinates `x_m = -L + m h` (unused axes are zero).
    pub fn point(&self, idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let m = self.multi_index(idx);
        let mut x = [0.0; 3];
        for axis in 0..self.inner.dim {
            x[axis] = -self.inner.half_width + m[axis] as f64 * h;
        }
        x
    }

    /// Signed lattice index `j ∈ [-N/2, N/2)` per axis.
    pub fn lattice_index(&self, idx: usize) -> [i64; 3] {
        let m = self.multi_index(idx);
        let mut j = [0i64; 3];
        for axis in 0..self.inner.dim {
            j[axis] = signed_index(m[axis], self.inner.n);
        }
        j
    }

    /// Wavevector `ξ = (π/L) j`.
    pub fn wavevector(&self, idx: usize) -> [f64; 3] {
        let step = self.wavenumber_step();
        let j = self.lattice_index(idx);
        [j[0] as f64 * step, j[1] as f64 * step, j[2] as f64 * step]
    }

    /// Flat index of the lattice point with signed indices `j`, if it is on the grid.
    pub fn index_of_lattice(&self, j: &[i64]) -> Option<usize> {
        let n = self.inner.n as i64;
        let mut idx = 0usize;
        for axis in 0..self.inner.dim {
            let ja = j.get(axis).copied().unwrap_or(0);
            if ja < -n / 2 || ja >= n / 2 {
                return None;
            }
            idx = idx * self.inner.n + ja.rem_euclid(n) as usize;
        }
        Some(idx)
    }

    pub fn j2(&self) -> &[u64] {
        &self.inner.j2
    }

    /// `|ξ|²` at a flat index.
    pub fn k2(&self, idx: usize) -> f64 {
        let step = self.wavenumber_step();
        step * step * self.inner.j2[idx] as f64
    }

    /// Distinct `|ξ|` values on the lattice, sorted ascending.
    pub fn radial_wavenumbers(&self) -> Vec<f64> {
        let step = self.wavenumber_step();
        self.inner
            .radial_keys
            .iter()
            .map(|&k| step * (k as f64).sqrt())
            .collect()
    }

    /// Position of each lattice point in [`GridSpec::radial_wavenumbers`].
    pub fn radial_slots(&self) -> &[u32] {
        &self.inner.radial_slot
    }

    /// Two-thirds rule: keep modes with `3|j_a| < N` on every axis.
    pub fn dealias_keep(&self, idx: usize) -> bool {
        let n = self.inner.n as i64;
        let j = self.lattice_index(idx);
        j.iter().take(self.inner.dim).all(|&ja| 3 * ja.abs() < n)
    }

    /// `scale·(−1)^{Σ j_a}` at flat index `idx`: the phase that recenters the DFT on
    /// `x = −L`. With `N` even the digit-sum parity is the XOR of the digits' low bits.
    fn parity_factor(&self, idx: usize, scale: f64) -> f64 {
        let bits = self.inner.n.trailing_zeros();
        let mut acc = 0usize;
        let mut rest = idx;
        for _ in 0..self.inner.dim {
            acc ^= rest;
            rest >>= bits;
        }
        if acc & 1 == 0 {
            scale
        } else {
            -scale
        }
    }

    /// Transforms the `tile` lines `base + j·stride + b` (`j < n`, `b < tile`) of `p` along
    /// their axis. With `parity`, the result is multiplied by the parity factor of its
    /// global index `offset + local`.
    ///
    /// # Safety
    /// Every touched offset must lie inside the allocation behind `p` and must not be
    /// accessed concurrently.
    #[allow(clippy::too_many_arguments)]
    unsafe fn pencil(
        &self,
        p: *mut Complex64,
        base: usize,
        stride: usize,
        tile: usize,
        plan: &dyn Fft<f64>,
        work: &mut PencilWork,
        parity: Option<(usize, f64)>,
    ) {
        let n = self.inner.n;
        let PencilWork {
            buf,
            scratch,
            signs,
        } = work;
        for (b, sg) in signs[..tile].iter_mut().enumerate() {
            *sg = parity.map_or(1.0, |(off, scale)| {
                self.parity_factor(off + base + b, scale)
            });
        }
        for j in 0..n {
            let row = p.add(base + j * stride);
            for b in 0..tile {
                buf[b * n + j] = *row.add(b);
            }
        }
        plan.process_with_scratch(&mut buf[..tile * n], scratch);
        for j in 0..n {
            let row = p.add(base + j * stride);
            let flip = if parity.is_some() && j % 2 == 1 {
                -1.0
            } else {
                1.0
            };
            for b in 0..tile {
                *row.add(b) = buf[b * n + j] * (signs[b] * flip);
            }
        }
    }

    /// Multidimensional DFT in place (rustfft sign conventions), multiplied by the parity
    /// factor: before the first pass for the inverse, after the last for the forward.
    /// The two innermost axes are transformed plane by plane while the plane is in cache.
    fn dft_in_place(&self, data: &mut [Complex64], inverse: bool, scale: f64) {
        let n = self.inner.n;
        let dim = self.inner.dim;
        let plan: &dyn Fft<f64> = if inverse {
            &*self.inner.inverse
        } else {
            &*self.inner.forward
        };
        let scratch_len = plan.get_inplace_scratch_len();
        let work = |tile: usize| PencilWork {
            buf: vec![Complex64::new(0.0, 0.0); tile * n],
            scratch: vec![Complex64::new(0.0, 0.0); scratch_len],
            signs: vec![0.0; tile],
        };
        let chunk_len = if dim == 1 {
            n * (TASK_VALUES / n).max(1)
        } else {
            n * n
        };

        // Within a line along an axis the parity alternates with the index on that axis.
        let apply_line_parity = |line: &mut [Complex64], start: usize| {
            let mut f = self.parity_factor(start, scale);
            for v in line.iter_mut() {
                *v *= f;
                f = -f;
            }
        };
        data.par_chunks_mut(chunk_len).enumerate().for_each_init(
            || work(PENCIL.min(n)),
            |w, (c, chunk)| {
                let off = c * chunk_len;
                if inverse {
                    for (l, line) in chunk.chunks_mut(n).enumerate() {
                        apply_line_parity(line, off + l * n);
                    }
                }
                plan.process_with_scratch(chunk, &mut w.scratch);
                if dim == 1 {
                    if !inverse {
                        apply_line_parity(chunk, off);
                    }
                    return;
                }
                let parity = (!inverse && dim == 2).then_some((off, scale));
                let p = chunk.as_mut_ptr();
                let tile = PENCIL.min(n);
                for t in 0..n / tile {
                    // SAFETY: tile `t` covers offsets `t·tile + b + j·n` inside this plane.
                    unsafe { self.pencil(p, t * tile, n, tile, plan, w, parity) };
                }
            },
        );

        if dim == 3 {
            let stride = n * n;
            let tile = WIDE_PENCIL.min(stride);
            let tasks = stride / tile;
            let parity = (!inverse).then_some((0, scale));
            let ptr = SharedMut(data.as_mut_ptr());
            (0..tasks).into_par_iter().for_each_init(
                || work(tile),
                |w, task| {
                    // SAFETY: task `t` touches only offsets `t·tile + b + j·stride` with
                    // `j < n`, `b < tile`; these sets are disjoint across tasks and lie
                    // inside `data`.
                    unsafe { self.pencil(ptr.get(), task * tile, stride, tile, plan, w, parity) };
                },
            );
        }
    }

    pub(crate) fn forward_in_place(&self, data: &mut [Complex64]) {
        let scale = (self.spacing() / self.inner.n as f64).powf(self.inner.dim as f64 / 2.0);
        self.dft_in_place(data, false, scale);
    }

    pub(crate) fn inverse_in_place(&self, data: &mut [Complex64]) {
        self.dft_in_place(data, true, self.volume().powf(-0.5));
    }
}

fn signed_index(i: usize, n: usize) -> i64 {
    if i < n / 2 {
        i as i64
    } else {
        i as i64 - n as i64
    }
}

/// A complex field on a [`GridSpec`], stored either as point values or as spectral
/// coefficients.
#[derive(Clone, Debug)]
pub struct Field {
    grid: GridSpec,
    values: Vec<Complex64>,
    repr: Representation,
}

impl Field {
    pub fn zeros(grid: &GridSpec, repr: Representation) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex64::new(0.0, 0.0); grid.len()],
            repr,
        }
    }

    pub fn from_values(
        grid: &GridSpec,
        values: Vec<Complex64>,
        repr: Representation,
    ) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self {
            grid: grid.clone(),
            values,
            repr,
        })
    }

    /// Samples `f(x)` at every grid point.
    pub fn from_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(&grid.point(idx)))
            .collect();
        Self {
            grid: grid.clone(),
            values,
            repr: Representation::Physical,
        }
    }

    /// Spectral field with coefficient `f(ξ)` at every lattice point.
    pub fn from_spectral_fn<F>(grid: &GridSpec, f: F) -> Self
    where
        F: Fn(&[f64; 3]) -> Complex64 + Sync,
    {
        let values = (0..grid.len())
            .into_par_iter()
            .map(|idx| f(&grid.wavevector(idx)))
            .collect();
        Self {
            grid: grid.clone(),
            values,
            repr: Representation::Spectral,
        }
    }

    /// `e^{i k·x}` for the lattice wavevector with signed indices `j`.
    pub fn plane_wave(grid: &GridSpec, j: &[i64]) -> Result<Self> {
        let idx = grid
            .index_of_lattice(j)
            .ok_or_else(|| Error::Domain(format!("lattice index {j:?} outside the grid")))?;
        let k = grid.wavevector(idx);
        Ok(Self::from_fn(grid, |x| {
            Complex64::from_polar(1.0, k[0] * x[0] + k[1] * x[1] + k[2] * x[2])
        }))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn representation(&self) -> Representation {
        self.repr
    }

    fn expect(&self, expected: Representation) -> Result<()> {
        if self.repr == expected {
            Ok(())
        } else {
            Err(Error::Representation {
                expected,
                found: self.repr,
            })
        }
    }

    pub fn to_spectral(&self) -> Result<Field> {
        self.expect(Representation::Physical)?;
        Ok(self.clone().into_spectral())
    }

    pub fn to_physical(&self) -> Result<Field> {
        self.expect(Representation::Spectral)?;
        Ok(self.clone().into_physical())
    }

    /// Converts to spectral form if needed.
    pub fn into_spectral(mut self) -> Field {
        if self.repr == Representation::Physical {
            self.grid.forward_in_place(&mut self.values);
            self.repr = Representation::Spectral;
        }
        self
    }

    /// Converts to physical form if needed.
    pub fn into_physical(mut self) -> Field {
        if self.repr == Representation::Spectral {
            self.grid.inverse_in_place(&mut self.values);
            self.repr = Representation::Physical;
        }
        self
    }

    /// Spectral copy of the field regardless of the current representation.
    pub fn spectral(&self) -> Field {
        self.clone().into_spectral()
    }

    pub fn physical(&self) -> Field {
        self.clone().into_physical()
    }

    /// Pointwise product of the spectral coefficients with `m(ξ)`.
    pub fn apply_multiplier<M>(&self, m: M) -> Result<Field>
    where
        M: Fn(&[f64; 3]) -> Complex64 + Sync,
    {
        self.expect(Representation::Spectral)?;
        let grid = &self.grid;
        let values = self
            .values
            .par_iter()
            .enumerate()
            .map(|(idx, v)| v * m(&grid.wavevector(idx)))
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            values,
            repr: Representation::Spectral,
        })
    }

    /// Multiplier depending on `|ξ|` only; the symbol is evaluated once per distinct radius.
    pub fn apply_radial<M>(&self, m: M) -> Result<Field>
    where
        M: Fn(f64) -> Complex64 + Sync,
    {
        self.expect(Representation::Spectral)?;
        let table = radial_table(&self.grid, m);
        let slots = self.grid.radial_slots();
        let values = self
            .values
            .par_iter()
            .zip(slots.par_iter())
            .map(|(v, &slot)| v * table[slot as usize])
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            values,
            repr: Representation::Spectral,
        })
    }

    /// Applies `f` to every stored value (in the current representation).
    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(Complex64) -> Complex64 + Sync,
    {
        Field {
            grid: self.grid.clone(),
            values: self.values.par_iter().map(|&v| f(v)).collect(),
            repr: self.repr,
        }
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|v| v * c)
    }

    fn zip_with<F>(&self, other: &Field, f: F) -> Result<Field>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Sync,
    {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let rhs;
        let other = if other.repr == self.repr {
            other
        } else {
            rhs = match self.repr {
                Representation::Physical => other.physical(),
                Representation::Spectral => other.spectral(),
            };
            &rhs
        };
        let values = self
            .values
            .par_iter()
            .zip(other.values.par_iter())
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(Field {
            grid: self.grid.clone(),
            values,
            repr: self.repr,
        })
    }

    /// `self + other` in the representation of `self`.
    pub fn add(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a - b)
    }

    /// Zeroes the modes removed by the two-thirds rule.
    pub fn dealiased(&self) -> Field {
        let mut out = self.spectral();
        let grid = out.grid.clone();
        out.values.par_iter_mut().enumerate().for_each(|(idx, v)| {
            if !grid.dealias_keep(idx) {
                *v = Complex64::new(0.0, 0.0);
            }
        });
        out
    }
}

/// Evaluates a radial symbol on every distinct `|ξ|` of the grid.
pub fn radial_table<M>(grid: &GridSpec, m: M) -> Vec<Complex64>
where
    M: Fn(f64) -> Complex64 + Sync,
{
    grid.radial_wavenumbers()
        .par_iter()
        .map(|&k| m(k))
        .collect()
}

/// Fixed-chunk parallel sum; the result does not depend on the thread count.
pub(crate) fn det_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &T) -> f64 + Sync,
{
    const CHUNK: usize = 4096;
    let partial: Vec<f64> = items
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            chunk
                .iter()
                .enumerate()
                .map(|(i, item)| f(c * CHUNK + i, item))
                .sum::<f64>()
        })
        .collect();
    partial.iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn l2_phys(f: &Field) -> f64 {
        (f.values().iter().map(|v| v.norm_sqr()).sum::<f64>() * f.grid().cell_volume()).sqrt()
    }

    fn l2_spec(f: &Field) -> f64 {
        f.values().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    #[test]
    fn rejects_bad_grids() {
        assert!(GridSpec::new(4, 16, 1.0).is_err());
        assert!(GridSpec::new(1, 12, 1.0).is_err());
        assert!(GridSpec::new(1, 4, 1.0).is_err());
        assert!(GridSpec::new(2, 16, 0.0).is_err());
    }

    #[test]
    fn lattice_is_symmetric_except_nyquist() {
        let g = GridSpec::new(1, 16, PI).unwrap();
        let js: Vec<i64> = (0..16).map(|i| g.lattice_index(i)[0]).collect();
        assert_eq!(js.iter().min(), Some(&-8));
        assert_eq!(js.iter().max(), Some(&7));
        for &j in &js {
            if j != -8 {
                assert!(js.contains(&-j));
            }
        }
    }

    #[test]
    fn constant_has_single_zero_mode() {
        for dim in 1..=3 {
            let g = GridSpec::new(dim, 16, PI).unwrap();
            let f = Field::from_fn(&g, |_| c(1.0)).to_spectral().unwrap();
            let expected = (2.0 * PI).powf(dim as f64 / 2.0);
            assert!((f.values()[0] - c(expected)).norm() < 1e-12 * expected);
            let rest: f64 = f.values()[1..].iter().map(|v| v.norm()).fold(0.0, f64::max);
            assert!(rest < 1e-12, "dim {dim}: stray mode {rest}");
        }
    }

    #[test]
    fn plane_wave_is_one_mode_and_back() {
        let g = GridSpec::new(3, 16, PI).unwrap();
        let j = [2, -3, 1];
        let idx = g.index_of_lattice(&j).unwrap();
        let f = Field::plane_wave(&g, &j).unwrap();
        let s = f.to_spectral().unwrap();
        let amp = (2.0 * PI).powf(1.5);
        for (i, v) in s.values().iter().enumerate() {
            let want = if i == idx { c(amp) } else { c(0.0) };
            assert!((v - want).norm() < 1e-10, "index {i}: {v}");
        }

        let mut spec = Field::zeros(&g, Representation::Spectral);
        spec.values_mut()[idx] = c(amp);
        let back = spec.to_physical().unwrap();
        for (v, w) in back.values().iter().zip(f.values()) {
            assert!((v - w).norm() < 1e-12);
        }
    }

    #[test]
    fn transform_matches_direct_sum_in_3d() {
        let g = GridSpec::new(3, 8, 1.5).unwrap();
        let f = Field::from_fn(&g, |x| {
            Complex64::new((2.0 * x[0] + x[2]).sin() * x[1], (x[0] * x[1]).cos() + x[2])
        });
        let spec = f.spectral();
        let norm = g.cell_volume() / g.volume().sqrt();
        for (m, got) in spec.values().iter().enumerate() {
            let k = g.wavevector(m);
            let want: Complex64 = (0..g.len())
                .map(|i| {
                    let x = g.point(i);
                    let phase = -(k[0] * x[0] + k[1] * x[1] + k[2] * x[2]);
                    f.values()[i] * Complex64::from_polar(1.0, phase)
                })
                .sum::<Complex64>()
                * norm;
            assert!((got - want).norm() < 1e-11, "mode {m}: {got} vs {want}");
        }
    }

    #[test]
    fn zero_spectrum_gives_zero_field() {
        let g = GridSpec::new(2, 16, 1.0).unwrap();
        let f = Field::zeros(&g, Representation::Spectral)
            .to_physical()
            .unwrap();
        assert!(f.values().iter().all(|v| *v == c(0.0)));
    }

    #[test]
    fn wrong_representation_is_rejected() {
        let g = GridSpec::new(1, 16, 1.0).unwrap();
        let f = Field::zeros(&g, Representation::Spectral);
        assert!(matches!(f.to_spectral(), Err(Error::Representation { .. })));
        let p = Field::zeros(&g, Representation::Physical);
        assert!(p.to_physical().is_err());
        assert!(p.apply_multiplier(|_| c(1.0)).is_err());
    }

    #[test]
    fn phase_multiplier_on_plane_wave() {
        let g = GridSpec::new(2, 32, PI).unwrap();
        let j = [3, -1];
        let t = 0.37;
        let f = Field::plane_wave(&g, &j).unwrap();
        let out = f
            .to_spectral()
            .unwrap()
            .apply_multiplier(|k| Complex64::from_polar(1.0, -(k[0] * k[0] + k[1] * k[1]) * t))
            .unwrap()
            .to_physical()
            .unwrap();
        let phase = Complex64::from_polar(1.0, -10.0 * t);
        for (a, b) in out.values().iter().zip(f.values()) {
            assert!((a - b * phase).norm() < 1e-12);
        }
    }

    #[test]
    fn weighted_multiplier_matches_direct_sum() {
        let g = GridSpec::new(2, 32, 2.0).unwrap();
        let noise = Field::from_fn(&g, |x| {
            Complex64::new((13.1 * x[0]).sin() + x[1].cos(), (7.7 * x[0] * x[1]).sin())
        })
        .into_spectral();
        let s = 0.7;
        let out = noise
            .apply_radial(|k| c((1.0 + k * k).powf(s / 2.0)))
            .unwrap();
        let direct: f64 = noise
            .values()
            .iter()
            .enumerate()
            .map(|(i, v)| (1.0 + g.k2(i)).powf(s) * v.norm_sqr())
            .sum();
        assert!((l2_spec(&out) - direct.sqrt()).abs() < 1e-12 * direct.sqrt());
    }

    #[test]
    fn translation_by_one_cell_is_a_phase() {
        let g = GridSpec::new(1, 64, 3.0).unwrap();
        let f = Field::from_fn(&g, |x| {
            c((-(x[0] * x[0]) * 2.0).exp()) + Complex64::i() * x[0].sin()
        });
        let mut shifted = f.values().to_vec();
        shifted.rotate_right(1);
        let shifted = Field::from_values(&g, shifted, Representation::Physical).unwrap();
        let h = g.spacing();
        let via_phase = f
            .spectral()
            .apply_multiplier(|k| Complex64::from_polar(1.0, -k[0] * h))
            .unwrap()
            .into_physical();
        for (a, b) in via_phase.values().iter().zip(shifted.values()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn dealias_removes_nyquist() {
        let g = GridSpec::new(1, 16, PI).unwrap();
        let nyq = g.index_of_lattice(&[-8]).unwrap();
        assert!(!g.dealias_keep(nyq));
        assert!(g.dealias_keep(g.index_of_lattice(&[5]).unwrap()));
        assert!(!g.dealias_keep(g.index_of_lattice(&[6]).unwrap()));
    }

    #[test]
    fn parseval_small_grid() {
        let g = GridSpec::new(3, 8, 0.5).unwrap();
        let f = Field::from_fn(&g, |x| Complex64::new(x[0] + 2.0 * x[2], x[1] * x[1]));
        let s = f.spectral();
        assert!((l2_phys(&f) - l2_spec(&s)).abs() < 1e-12 * l2_phys(&f));
    }
}
