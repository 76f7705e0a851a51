//! Discrete model of `L²(ℝ)` on a uniform cell grid.
//!
//! Cell `i` covers `[x_min + i·dx, x_min + (i+1)·dx)`; the stored value is
//! the sample at the cell midpoint. Indicators of node-aligned intervals are
//! therefore exact, the pairing `dx · Σ f_i conj(g_i)` is the midpoint rule,
//! and node-aligned shifts are exact index translations.
//!
//! The origin is always a node. Cells at or right of the origin form the
//! half-line `x ≥ 0` (the past subspace `H_{0]}`), cells left of it form
//! `x < 0` (the future subspace `H_{[0}`).

use std::fmt;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type C64 = Complex64;

/// Tolerance, in units of `dx`, for treating a coordinate as a node.
const ALIGN_TOL: f64 = 1e-12;

/// Gram-matrix tolerance for [`Subspace`] orthonormality.
pub const SUBSPACE_GRAM_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
    origin: usize,
}

impl GridSpec {
    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) {
            return Err(Error::InvalidGrid("endpoints must be finite".into()));
        }
        if x_max <= x_min {
            return Err(Error::InvalidGrid(format!(
                "x_max = {x_max} must exceed x_min = {x_min}"
            )));
        }
        if n < 8 {
            return Err(Error::InvalidGrid(format!(
                "n = {n} is below the minimum of 8"
            )));
        }
        let dx = (x_max - x_min) / n as f64;
        let k = -x_min / dx;
        let origin = k.round();
        if (k - origin).abs() > 1e-9 * k.abs().max(1.0) || origin < 0.0 || origin > n as f64 {
            return Err(Error::OriginMisaligned { x_min, dx });
        }
        Ok(Self {
            x_min,
            x_max,
            n,
            dx,
            origin: origin as usize,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Index of the first cell of the half-line `x ≥ 0`.
    pub fn origin(&self) -> usize {
        self.origin
    }

    /// Number of cells in `x ≥ 0`.
    pub fn half_len(&self) -> usize {
        self.n - self.origin
    }

    /// Left edge of cell `i`.
    pub fn node(&self, i: usize) -> f64 {
        (i as f64 - self.origin as f64) * self.dx
    }

    pub fn midpoint(&self, i: usize) -> f64 {
        (i as f64 - self.origin as f64 + 0.5) * self.dx
    }

    /// Signed number of cells spanned by `t`; errors unless `t` is node-aligned.
    pub fn steps(&self, t: f64) -> Result<isize> {
        let k = t / self.dx;
        let r = k.round();
        if !t.is_finite() || (k - r).abs() > ALIGN_TOL * k.abs().max(1.0) {
            return Err(Error::Alignment { t, dx: self.dx });
        }
        Ok(r as isize)
    }

    pub fn is_aligned(&self, t: f64) -> bool {
        self.steps(t).is_ok()
    }

    /// Cell index of the node nearest to `x`, clamped to `0..=n`. Infinite
    /// arguments map to the grid ends.
    pub fn snap(&self, x: f64) -> usize {
        if x == f64::NEG_INFINITY {
            return 0;
        }
        if x == f64::INFINITY {
            return self.n;
        }
        let idx = (x / self.dx).round() + self.origin as f64;
        idx.clamp(0.0, self.n as f64) as usize
    }
}

impl fmt::Display for GridSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[{}, {}) with n = {} (dx = {})",
            self.x_min, self.x_max, self.n, self.dx
        )
    }
}

/// Validated constructor matching the `build_grid` operation.
pub fn build_grid(x_min: f64, x_max: f64, n: usize) -> Result<GridSpec> {
    GridSpec::new(x_min, x_max, n)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridFunction {
    grid: GridSpec,
    values: Vec<C64>,
}

/// Result of a truncating shift.
#[derive(Debug, Clone)]
pub struct Shifted {
    pub function: GridFunction,
    /// Squared norm pushed off the grid.
    pub mass_lost: f64,
}

impl GridFunction {
    pub fn new(grid: GridSpec, values: Vec<C64>) -> Result<Self> {
        if values.len() != grid.n {
            return Err(Error::InvalidGrid(format!(
                "{} values for a grid of {} cells",
                values.len(),
                grid.n
            )));
        }
        if values
            .iter()
            .any(|v| !v.re.is_finite() || !v.im.is_finite())
        {
            return Err(Error::InvariantViolation("non-finite sample".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec_unchecked(grid: GridSpec, values: Vec<C64>) -> Self {
        debug_assert_eq!(values.len(), grid.n);
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            values: vec![C64::new(0.0, 0.0); grid.n],
        }
    }

    /// Samples `f` at every cell midpoint.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64) -> C64) -> Self {
        let values = (0..grid.n).map(|i| f(grid.midpoint(i))).collect();
        Self { grid, values }
    }

    pub fn from_real_fn(grid: GridSpec, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| C64::new(f(x), 0.0))
    }

    /// Builds a function from its half-line part (cells with `x ≥ 0`); the
    /// future side is zero.
    pub fn from_half_line(grid: GridSpec, half: &[C64]) -> Self {
        let mut values = vec![C64::new(0.0, 0.0); grid.n];
        let m = half.len().min(grid.half_len());
        values[grid.origin..grid.origin + m].copy_from_slice(&half[..m]);
        Self { grid, values }
    }

    /// `1` on `[a, b)`, endpoints snapped to the nearest node.
    pub fn indicator(grid: GridSpec, a: f64, b: f64) -> Result<Self> {
        if !(a < b) {
            return Err(Error::Precondition(format!(
                "indicator needs a < b, got [{a}, {b})"
            )));
        }
        let lo = grid.node(0);
        let hi = grid.node(grid.n);
        let slack = 0.5 * grid.dx;
        if a < lo - slack || b > hi + slack {
            return Err(Error::Domain(format!(
                "[{a}, {b}) is not inside the grid [{lo}, {hi})"
            )));
        }
        let (i0, i1) = (grid.snap(a), grid.snap(b));
        let mut f = Self::zeros(grid);
        for v in &mut f.values[i0..i1] {
            *v = C64::new(1.0, 0.0);
        }
        Ok(f)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[C64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<C64> {
        self.values
    }

    /// Samples on `x ≥ 0`.
    pub fn past(&self) -> &[C64] {
        &self.values[self.grid.origin..]
    }

    /// Samples on `x < 0`.
    pub fn future(&self) -> &[C64] {
        &self.values[..self.grid.origin]
    }

    fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        Ok(())
    }

    /// `dx · Σ self_i · conj(other_i)`.
    pub fn inner(&self, other: &Self) -> Result<C64> {
        self.check_grid(other)?;
        Ok(inner_slices(&self.values, &other.values, self.grid.dx))
    }

    pub fn norm_sq(&self) -> f64 {
        norm_sq_slice(&self.values, self.grid.dx)
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared norm carried by cells with `x < 0`.
    pub fn mass_on_negative_axis(&self) -> f64 {
        norm_sq_slice(self.future(), self.grid.dx)
    }

    /// Squared norm carried by cells with `x ≥ 0`.
    pub fn mass_on_positive_axis(&self) -> f64 {
        norm_sq_slice(self.past(), self.grid.dx)
    }

    pub fn scale(&self, c: C64) -> Self {
        Self {
            grid: self.grid,
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + b)
                .collect(),
        })
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.check_grid(other)?;
        Ok(Self {
            grid: self.grid,
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a - b)
                .collect(),
        })
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: C64, other: &Self) -> Result<()> {
        self.check_grid(other)?;
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += c * b;
        }
        Ok(())
    }

    /// `‖self − other‖`.
    pub fn distance(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        let d: f64 = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        Ok((d * self.grid.dx).sqrt())
    }

    pub fn max_abs_diff(&self, other: &Self) -> Result<f64> {
        self.check_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    /// `(S_t f)(x) = f(x + t)` for node-aligned `t`, zero-filling the exposed
    /// end and reporting the squared norm pushed off the grid.
    pub fn shift(&self, t: f64) -> Result<Shifted> {
        let k = self.grid.steps(t)?;
        let (values, lost) = shift_slice(&self.values, k);
        Ok(Shifted {
            function: Self {
                grid: self.grid,
                values,
            },
            mass_lost: lost * self.grid.dx,
        })
    }

    /// As [`GridFunction::shift`], but errors when more than `tolerance` of
    /// squared norm leaves the grid.
    pub fn shift_strict(&self, t: f64, tolerance: f64) -> Result<Self> {
        let s = self.shift(t)?;
        if s.mass_lost > tolerance {
            return Err(Error::Truncation {
                mass_lost: s.mass_lost,
                tolerance,
            });
        }
        Ok(s.function)
    }

    /// Zeroes samples outside `[a, b)`; `a` may be `-∞` and `b` may be `+∞`.
    pub fn project_interval(&self, a: f64, b: f64) -> Result<Self> {
        for e in [a, b] {
            if e.is_finite() {
                self.grid.steps(e)?;
            }
        }
        let (i0, i1) = (self.grid.snap(a), self.grid.snap(b));
        let mut out = Self::zeros(self.grid);
        if i0 < i1 {
            out.values[i0..i1].copy_from_slice(&self.values[i0..i1]);
        }
        Ok(out)
    }

    /// `Σ_k ⟨f, g_k⟩ g_k` for the basis of `s`.
    pub fn project_onto(&self, s: &Subspace) -> Result<Self> {
        s.project(self)
    }
}

/// Orthonormal family of grid functions.
#[derive(Debug, Clone)]
pub struct Subspace {
    basis: Vec<GridFunction>,
    label: String,
}

impl Subspace {
    pub fn new(basis: Vec<GridFunction>, label: impl Into<String>) -> Result<Self> {
        Self::with_tolerance(basis, label, SUBSPACE_GRAM_TOL)
    }

    pub fn with_tolerance(
        basis: Vec<GridFunction>,
        label: impl Into<String>,
        tol: f64,
    ) -> Result<Self> {
        let label = label.into();
        if let Some(first) = basis.first() {
            if basis.iter().any(|g| g.grid != first.grid) {
                return Err(Error::GridMismatch);
            }
        }
        let dev = gram_deviation(&basis);
        if dev > tol {
            return Err(Error::InvariantViolation(format!(
                "basis of {label} deviates from orthonormal by {dev:.3e}"
            )));
        }
        Ok(Self { basis, label })
    }

    pub fn empty(label: impl Into<String>) -> Self {
        Self {
            basis: Vec::new(),
            label: label.into(),
        }
    }

    pub fn basis(&self) -> &[GridFunction] {
        &self.basis
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn coefficients(&self, f: &GridFunction) -> Result<Vec<C64>> {
        self.basis.iter().map(|g| f.inner(g)).collect()
    }

    pub fn project(&self, f: &GridFunction) -> Result<GridFunction> {
        let mut out = GridFunction::zeros(f.grid);
        for g in &self.basis {
            let c = f.inner(g)?;
            out.axpy(c, g)?;
        }
        Ok(out)
    }
}

/// Max-entry deviation of the Gram matrix from the identity.
pub fn gram_deviation(basis: &[GridFunction]) -> f64 {
    let mut dev = 0.0f64;
    for (i, a) in basis.iter().enumerate() {
        for (j, b) in basis.iter().enumerate().skip(i) {
            let g = inner_slices(&a.values, &b.values, a.grid.dx);
            let target = if i == j { 1.0 } else { 0.0 };
            dev = dev.max((g - target).norm());
        }
    }
    dev
}

pub(crate) fn inner_slices(a: &[C64], b: &[C64], dx: f64) -> C64 {
    let mut acc = C64::new(0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        acc += x * y.conj();
    }
    acc * dx
}

pub(crate) fn norm_sq_slice(a: &[C64], dx: f64) -> f64 {
    a.iter().map(|v| v.norm_sqr()).sum::<f64>() * dx
}

/// `out[i] = v[i + k]` with zero fill; returns the unscaled squared mass lost.
pub(crate) fn shift_slice(v: &[C64], k: isize) -> (Vec<C64>, f64) {
    let n = v.len();
    let zero = C64::new(0.0, 0.0);
    let mut out = vec![zero; n];
    let mut lost = 0.0;
    for (j, x) in v.iter().enumerate() {
        let dest = j as isize - k;
        if dest >= 0 && (dest as usize) < n {
            out[dest as usize] = *x;
        } else {
            lost += x.norm_sqr();
        }
    }
    (out, lost)
}
