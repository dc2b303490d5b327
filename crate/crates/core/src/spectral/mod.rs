//! Truncated sine–Fourier basis of the divergence-constrained spaces.
//!
//! A mode `ℓ = (l1, l2)` with `l1 ≥ 0` labels `c·cos(l1·x1)·sin(l2·x2)`, a mode
//! with `l1 < 0` labels `c·sin(|l1|·x1)·sin(l2·x2)`, where `c` makes the
//! function unit-norm in `L2(Ω)`. Only modes with `l1 = 0` or even `l2` satisfy
//! the vertical-velocity boundary condition; the other slots are kept in
//! storage so that arbitrary grid data can be analysed before projection.

mod basis;
pub mod random;
pub mod snapshot;

use std::f64::consts::{PI, SQRT_2};
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use ndarray::{Array2, Zip};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use basis::{Basis, GridField, Parity};

/// Basis label `(l1, l2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l1: i32,
    pub l2: i32,
}

impl ModeIndex {
    pub fn new(l1: i32, l2: i32) -> Result<Self> {
        if l2 < 1 {
            return Err(Error::InvalidMode { l1, l2 });
        }
        Ok(Self { l1, l2 })
    }

    /// Membership in the admissible index set: `l1 = 0` or `l2` even.
    pub fn is_admissible(&self) -> bool {
        self.l2 >= 1 && (self.l1 == 0 || self.l2 % 2 == 0)
    }

    /// Eigenvalue `|ℓ|²` of `-Δ`.
    pub fn eigenvalue(&self) -> f64 {
        let (a, b) = (self.l1 as f64, self.l2 as f64);
        a * a + b * b
    }
}

/// Normalization constant making the trigonometric product unit-norm in `L2(Ω)`.
pub fn basis_norm_constant(mode: &ModeIndex) -> Result<f64> {
    if mode.l2 < 1 {
        return Err(Error::InvalidMode {
            l1: mode.l1,
            l2: mode.l2,
        });
    }
    Ok(x1_norm_constant(mode.l1))
}

#[inline]
pub(crate) fn x1_norm_constant(l1: i32) -> f64 {
    if l1 == 0 {
        1.0 / PI
    } else {
        SQRT_2 / PI
    }
}

/// Mode box `|l1| ≤ n1`, `1 ≤ l2 ≤ n2` together with collocation grid sizes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Truncation {
    pub n1: usize,
    pub n2: usize,
    pub grid_m1: usize,
    pub grid_m2: usize,
}

impl Truncation {
    /// Truncation with the default grid: `m1 = 3·n1 + 2` (the 3/2 rule on the
    /// `2·n1 + 1` Fourier modes) and `m2 = 3·(n2 + 1)`.
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        Self::with_grid(n1, n2, Self::min_m1(n1), 3 * (n2 + 1))
    }

    pub fn with_grid(n1: usize, n2: usize, grid_m1: usize, grid_m2: usize) -> Result<Self> {
        if n2 < 1 {
            return Err(Error::config("n2 must be at least 1"));
        }
        if grid_m1 < Self::min_m1(n1) {
            return Err(Error::config(format!(
                "grid_m1 = {grid_m1} below dealiasing capacity {} for n1 = {n1}",
                Self::min_m1(n1)
            )));
        }
        if grid_m2 < Self::min_m2(n2) {
            return Err(Error::config(format!(
                "grid_m2 = {grid_m2} below dealiasing capacity {} for n2 = {n2}",
                Self::min_m2(n2)
            )));
        }
        Ok(Self {
            n1,
            n2,
            grid_m1,
            grid_m2,
        })
    }

    fn min_m1(n1: usize) -> usize {
        (3 * (2 * n1 + 1)).div_ceil(2)
    }

    fn min_m2(n2: usize) -> usize {
        (3 * (n2 + 1)).div_ceil(2)
    }

    /// Number of `l1` values, `2·n1 + 1`.
    pub fn k1(&self) -> usize {
        2 * self.n1 + 1
    }

    /// Total number of coefficient slots, admissible or not.
    pub fn slots(&self) -> usize {
        self.k1() * self.n2
    }

    /// Whether quadratic products are resolved exactly on the grid.
    pub fn resolves_products(&self) -> bool {
        self.grid_m1 > 3 * self.n1 && self.grid_m2 > 2 * self.n2
    }

    pub fn same_modes(&self, other: &Truncation) -> bool {
        self.n1 == other.n1 && self.n2 == other.n2
    }

    pub(crate) fn ensure_same_modes(&self, other: &Truncation) -> Result<()> {
        if self.same_modes(other) {
            Ok(())
        } else {
            Err(Error::TruncationMismatch {
                expected_n1: self.n1,
                expected_n2: self.n2,
                got_n1: other.n1,
                got_n2: other.n2,
            })
        }
    }

    #[inline]
    pub(crate) fn row(&self, l1: i32) -> usize {
        (l1 + self.n1 as i32) as usize
    }

    #[inline]
    pub(crate) fn l1_of_row(&self, row: usize) -> i32 {
        row as i32 - self.n1 as i32
    }

    pub fn contains(&self, mode: &ModeIndex) -> bool {
        mode.l1.unsigned_abs() as usize <= self.n1 && mode.l2 >= 1 && mode.l2 as usize <= self.n2
    }

    /// Every slot in storage order (lexicographic in `(l1, l2)`).
    pub fn all_modes(&self) -> impl Iterator<Item = ModeIndex> + '_ {
        let n1 = self.n1 as i32;
        let n2 = self.n2 as i32;
        (-n1..=n1).flat_map(move |l1| (1..=n2).map(move |l2| ModeIndex { l1, l2 }))
    }
}

/// Admissible modes of the truncation, in canonical (storage) order.
pub fn mode_set(trunc: &Truncation) -> Vec<ModeIndex> {
    trunc.all_modes().filter(ModeIndex::is_admissible).collect()
}

/// Coefficients of `u` over the full mode box. Row `l1 + n1`, column `l2 - 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    trunc: Truncation,
    coeffs: Array2<f64>,
}

impl SpectralField {
    pub fn zeros(trunc: Truncation) -> Self {
        Self {
            trunc,
            coeffs: Array2::zeros((trunc.k1(), trunc.n2)),
        }
    }

    pub fn from_coeffs(trunc: Truncation, coeffs: Array2<f64>) -> Result<Self> {
        if coeffs.dim() != (trunc.k1(), trunc.n2) {
            return Err(Error::config(format!(
                "coefficient array shape {:?} does not match truncation ({}, {})",
                coeffs.dim(),
                trunc.k1(),
                trunc.n2
            )));
        }
        Ok(Self { trunc, coeffs })
    }

    /// Field with the given coefficients on individual modes.
    pub fn from_modes(trunc: Truncation, modes: &[(ModeIndex, f64)]) -> Result<Self> {
        let mut field = Self::zeros(trunc);
        for (mode, value) in modes {
            field.set(*mode, *value)?;
        }
        Ok(field)
    }

    /// Coefficients in canonical storage order.
    pub fn from_flat(trunc: Truncation, values: &[f64]) -> Result<Self> {
        if values.len() != trunc.slots() {
            return Err(Error::Format(format!(
                "expected {} coefficients, got {}",
                trunc.slots(),
                values.len()
            )));
        }
        let coeffs = Array2::from_shape_vec((trunc.k1(), trunc.n2), values.to_vec())
            .map_err(|e| Error::Format(e.to_string()))?;
        Ok(Self { trunc, coeffs })
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.coeffs.iter().copied().collect()
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut Array2<f64> {
        &mut self.coeffs
    }

    pub fn get(&self, mode: ModeIndex) -> f64 {
        if self.trunc.contains(&mode) {
            self.coeffs[[self.trunc.row(mode.l1), mode.l2 as usize - 1]]
        } else {
            0.0
        }
    }

    pub fn set(&mut self, mode: ModeIndex, value: f64) -> Result<()> {
        if mode.l2 < 1 {
            return Err(Error::InvalidMode {
                l1: mode.l1,
                l2: mode.l2,
            });
        }
        if !self.trunc.contains(&mode) {
            return Err(Error::config(format!(
                "mode ({}, {}) outside truncation (n1={}, n2={})",
                mode.l1, mode.l2, self.trunc.n1, self.trunc.n2
            )));
        }
        let row = self.trunc.row(mode.l1);
        self.coeffs[[row, mode.l2 as usize - 1]] = value;
        Ok(())
    }

    /// Iterate `(mode, coefficient)` over every slot.
    pub fn iter(&self) -> impl Iterator<Item = (ModeIndex, f64)> + '_ {
        self.trunc.all_modes().zip(self.coeffs.iter().copied())
    }

    /// Coefficient inner product; equals `⟨·,·⟩₂` by orthonormality.
    pub fn dot(&self, other: &SpectralField) -> f64 {
        Zip::from(&self.coeffs)
            .and(&other.coeffs)
            .fold(0.0, |acc, a, b| acc + a * b)
    }

    pub fn norm_sq(&self) -> f64 {
        self.dot(self)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0f64, |m, c| m.max(c.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.is_finite())
    }

    /// Largest magnitude over inadmissible slots.
    pub fn max_inadmissible(&self) -> f64 {
        self.iter()
            .filter(|(m, _)| !m.is_admissible())
            .fold(0.0f64, |acc, (_, c)| acc.max(c.abs()))
    }

    pub fn is_admissible(&self) -> bool {
        self.max_inadmissible() == 0.0
    }

    /// Largest magnitude over slots with `l1 ≠ 0`.
    pub fn max_x1_dependent(&self) -> f64 {
        self.iter()
            .filter(|(m, _)| m.l1 != 0)
            .fold(0.0f64, |acc, (_, c)| acc.max(c.abs()))
    }

    /// `self += a · other`.
    pub fn add_scaled(&mut self, a: f64, other: &SpectralField) {
        Zip::from(&mut self.coeffs)
            .and(&other.coeffs)
            .for_each(|x, y| *x += a * y);
    }

    pub fn scaled(&self, a: f64) -> SpectralField {
        SpectralField {
            trunc: self.trunc,
            coeffs: &self.coeffs * a,
        }
    }

    /// Multiply each coefficient by `weight(mode)`.
    pub fn map_modes(&self, mut weight: impl FnMut(ModeIndex) -> f64) -> SpectralField {
        let mut out = self.clone();
        for ((row, col), c) in out.coeffs.indexed_iter_mut() {
            let mode = ModeIndex {
                l1: self.trunc.l1_of_row(row),
                l2: col as i32 + 1,
            };
            *c *= weight(mode);
        }
        out
    }

    /// Copy the coefficients into a field over a different grid with the same
    /// mode box.
    pub fn regrid(&self, trunc: Truncation) -> Result<SpectralField> {
        self.trunc.ensure_same_modes(&trunc)?;
        Ok(SpectralField {
            trunc,
            coeffs: self.coeffs.clone(),
        })
    }
}

impl Add for &SpectralField {
    type Output = SpectralField;
    fn add(self, rhs: &SpectralField) -> SpectralField {
        SpectralField {
            trunc: self.trunc,
            coeffs: &self.coeffs + &rhs.coeffs,
        }
    }
}

impl Sub for &SpectralField {
    type Output = SpectralField;
    fn sub(self, rhs: &SpectralField) -> SpectralField {
        SpectralField {
            trunc: self.trunc,
            coeffs: &self.coeffs - &rhs.coeffs,
        }
    }
}

impl Mul<f64> for &SpectralField {
    type Output = SpectralField;
    fn mul(self, rhs: f64) -> SpectralField {
        self.scaled(rhs)
    }
}

impl Neg for &SpectralField {
    type Output = SpectralField;
    fn neg(self) -> SpectralField {
        self.scaled(-1.0)
    }
}

impl AddAssign<&SpectralField> for SpectralField {
    fn add_assign(&mut self, rhs: &SpectralField) {
        self.coeffs += &rhs.coeffs;
    }
}

/// Orthogonal projection onto the admissible span: zero every slot with
/// `l1 ≠ 0` and odd `l2`.
pub fn project_div(u: &SpectralField) -> SpectralField {
    u.map_modes(|m| if m.is_admissible() { 1.0 } else { 0.0 })
}

/// Exact `∂₁`. A cosine mode `(k, l2)` maps to `(-k, l2)` with factor `-k`;
/// a sine mode `(-k, l2)` maps to `(k, l2)` with factor `k`.
pub fn d1(u: &SpectralField) -> SpectralField {
    let trunc = *u.trunc();
    let n1 = trunc.n1 as i32;
    let mut out = SpectralField::zeros(trunc);
    for l1 in 1..=n1 {
        let k = l1 as f64;
        let cos_row = trunc.row(l1);
        let sin_row = trunc.row(-l1);
        for col in 0..trunc.n2 {
            out.coeffs[[sin_row, col]] = -k * u.coeffs[[cos_row, col]];
            out.coeffs[[cos_row, col]] = k * u.coeffs[[sin_row, col]];
        }
    }
    out
}

/// `Δu`: multiply each coefficient by `-(l1² + l2²)`.
pub fn laplacian(u: &SpectralField) -> SpectralField {
    u.map_modes(|m| -m.eigenvalue())
}

/// `∂₂²u`: multiply each coefficient by `-l2²`.
pub fn d2_squared(u: &SpectralField) -> SpectralField {
    u.map_modes(|m| -((m.l2 * m.l2) as f64))
}
