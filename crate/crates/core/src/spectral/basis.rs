//! Coefficient ↔ collocation transforms.
//!
//! x1 nodes are uniform on `[-π, π)`; x2 nodes are the interior sine nodes
//! `j·π/(m2+1)`, `j = 1..=m2`. Every grid function is tagged with its x2
//! parity: `Sine` content is a sine polynomial in x2 (the state space and its
//! x1-derivatives), `Cosine` content a cosine polynomial (x2-derivatives, `v_u`,
//! products of two sine functions). Knowing the parity makes both the
//! projection onto `sin(l·x2)` and the integral over `(0, π)` exact from the
//! interior nodes alone.
//!
//! Exactness limits with `N = m2 + 1`:
//! - sine content up to degree `m2` (discrete sine orthogonality),
//! - cosine content up to degree `m2 - 1` (via `f·sin(x2)`, a sine polynomial),
//! - x1 trigonometric degree below `m1` for integrals.

use std::f64::consts::PI;
use std::ops::Mul;

use ndarray::{Array1, Array2, Axis, Zip};

use super::{d1, x1_norm_constant, SpectralField, Truncation};
use crate::{Error, Result};

/// x2 content of a grid function.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Parity {
    Sine,
    Cosine,
}

impl Mul for Parity {
    type Output = Parity;
    fn mul(self, rhs: Parity) -> Parity {
        if self == rhs {
            Parity::Cosine
        } else {
            Parity::Sine
        }
    }
}

/// Collocation values on the `m1 × m2` grid.
#[derive(Clone, Debug, PartialEq)]
pub struct GridField {
    trunc: Truncation,
    parity: Parity,
    values: Array2<f64>,
}

impl GridField {
    pub fn new(trunc: Truncation, parity: Parity, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (trunc.grid_m1, trunc.grid_m2) {
            return Err(Error::config(format!(
                "grid array shape {:?} does not match ({}, {})",
                values.dim(),
                trunc.grid_m1,
                trunc.grid_m2
            )));
        }
        Ok(Self {
            trunc,
            parity,
            values,
        })
    }

    pub fn zeros(trunc: Truncation, parity: Parity) -> Self {
        Self {
            trunc,
            parity,
            values: Array2::zeros((trunc.grid_m1, trunc.grid_m2)),
        }
    }

    /// Sample `f(x1, x2)` at every node.
    pub fn from_fn(trunc: Truncation, parity: Parity, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = Array2::from_shape_fn((trunc.grid_m1, trunc.grid_m2), |(i, j)| {
            f(x1_node(&trunc, i), x2_node(&trunc, j))
        });
        Self {
            trunc,
            parity,
            values,
        }
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    pub fn parity(&self) -> Parity {
        self.parity
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn x1_nodes(&self) -> Vec<f64> {
        (0..self.trunc.grid_m1).map(|i| x1_node(&self.trunc, i)).collect()
    }

    pub fn x2_nodes(&self) -> Vec<f64> {
        (0..self.trunc.grid_m2).map(|j| x2_node(&self.trunc, j)).collect()
    }

    fn ensure_same_grid(&self, other: &GridField) -> Result<()> {
        if self.values.dim() != other.values.dim() {
            return Err(Error::config(format!(
                "grid shapes differ: {:?} vs {:?}",
                self.values.dim(),
                other.values.dim()
            )));
        }
        Ok(())
    }

    /// Pointwise product; parities multiply like signs.
    pub fn product(&self, other: &GridField) -> Result<GridField> {
        self.ensure_same_grid(other)?;
        Ok(GridField {
            trunc: self.trunc,
            parity: self.parity * other.parity,
            values: &self.values * &other.values,
        })
    }

    /// Pointwise sum of two fields with the same parity.
    pub fn sum(&self, other: &GridField) -> Result<GridField> {
        self.ensure_same_grid(other)?;
        if self.parity != other.parity {
            return Err(Error::config("cannot add grid fields of different x2 parity"));
        }
        Ok(GridField {
            trunc: self.trunc,
            parity: self.parity,
            values: &self.values + &other.values,
        })
    }

    pub fn scaled(&self, a: f64) -> GridField {
        GridField {
            trunc: self.trunc,
            parity: self.parity,
            values: &self.values * a,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Per x1 column, `max_j |f(x1_i, x2_j)|`.
    pub fn column_max_abs(&self) -> Vec<f64> {
        self.values
            .axis_iter(Axis(0))
            .map(|row| row.iter().fold(0.0f64, |m, v| m.max(v.abs())))
            .collect()
    }
}

fn x1_node(trunc: &Truncation, i: usize) -> f64 {
    -PI + 2.0 * PI * i as f64 / trunc.grid_m1 as f64
}

fn x2_node(trunc: &Truncation, j: usize) -> f64 {
    (j + 1) as f64 * PI / (trunc.grid_m2 + 1) as f64
}

/// `∫₀^π sin(k·x)·cos(m·x) dx` for `k ≥ 1`, `m ≥ 0`.
fn sin_cos_integral(k: i64, m: i64) -> f64 {
    if k == m || (k + m) % 2 == 0 {
        0.0
    } else {
        let (kf, mf) = (k as f64, m as f64);
        2.0 * kf / (kf * kf - mf * mf)
    }
}

/// `∫₀^π sin(k·x)·sin(l·x)/sin(x) dx`, using
/// `sin(l·x)/sin(x) = Σ_{r<l} cos((l-1-2r)·x)`.
fn sin_sin_over_sin_integral(k: i64, l: i64) -> f64 {
    (0..l).map(|r| sin_cos_integral(k, (l - 1 - 2 * r).abs())).sum()
}

/// Precomputed transform tables for one truncation.
#[derive(Debug)]
pub struct Basis {
    trunc: Truncation,
    /// `c(l1)·φ_{l1}(x1_i)`, shape `(m1, k1)`.
    x1_synth: Array2<f64>,
    /// Quadrature-weighted `x1_synth`, shape `(m1, k1)`.
    x1_anal: Array2<f64>,
    /// `sin(l·x2_j)`, shape `(m2, n2)`.
    sin_synth: Array2<f64>,
    /// `cos(m·x2_j)` for `m = 0..=n2`, shape `(m2, n2 + 1)`.
    cos_synth: Array2<f64>,
    /// Exact `∫ f·sin(l·x2)` weights for sine content, shape `(m2, n2)`.
    sin_anal: Array2<f64>,
    /// Exact `∫ f·sin(l·x2)` weights for cosine content, shape `(m2, n2)`.
    cos_anal: Array2<f64>,
    /// Exact `∫₀^π f dx2` weights for sine / cosine content.
    sin_int: Array1<f64>,
    cos_int: Array1<f64>,
}

impl Basis {
    pub fn new(trunc: Truncation) -> Self {
        let (m1, m2, k1, n2) = (trunc.grid_m1, trunc.grid_m2, trunc.k1(), trunc.n2);
        let big_n = (m2 + 1) as f64;
        let h1 = 2.0 * PI / m1 as f64;

        let x1_synth = Array2::from_shape_fn((m1, k1), |(i, r)| {
            let l1 = trunc.l1_of_row(r);
            let x = x1_node(&trunc, i);
            let phi = if l1 >= 0 {
                (l1 as f64 * x).cos()
            } else {
                (-l1 as f64 * x).sin()
            };
            x1_norm_constant(l1) * phi
        });
        let x1_anal = &x1_synth * h1;

        let x2: Vec<f64> = (0..m2).map(|j| x2_node(&trunc, j)).collect();
        let sin_synth = Array2::from_shape_fn((m2, n2), |(j, c)| ((c + 1) as f64 * x2[j]).sin());
        let cos_synth = Array2::from_shape_fn((m2, n2 + 1), |(j, m)| (m as f64 * x2[j]).cos());
        let sin_anal = &sin_synth * (PI / big_n);

        // Full discrete sine table sin(k·x2_j), k = 1..=m2.
        let dst = Array2::from_shape_fn((m2, m2), |(j, k)| ((k + 1) as f64 * x2[j]).sin());
        let gram = Array2::from_shape_fn((m2, n2), |(k, l)| {
            sin_sin_over_sin_integral(k as i64 + 1, l as i64 + 1)
        });
        let mut cos_anal = dst.dot(&gram);
        for (j, mut row) in cos_anal.axis_iter_mut(Axis(0)).enumerate() {
            row *= 2.0 / big_n * x2[j].sin();
        }

        let sin_int = Array1::from_shape_fn(m2, |j| {
            (1..=m2)
                .filter(|k| k % 2 == 1)
                .map(|k| 2.0 / k as f64 * dst[[j, k - 1]])
                .sum::<f64>()
                * 2.0
                / big_n
        });
        let cos_int = Array1::from_shape_fn(m2, |j| {
            (1..=m2)
                .filter(|k| k % 2 == 1)
                .map(|k| PI * dst[[j, k - 1]])
                .sum::<f64>()
                * 2.0
                / big_n
                * x2[j].sin()
        });

        Self {
            trunc,
            x1_synth,
            x1_anal,
            sin_synth,
            cos_synth,
            sin_anal,
            cos_anal,
            sin_int,
            cos_int,
        }
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    pub fn check(&self, u: &SpectralField) -> Result<()> {
        self.trunc.ensure_same_modes(u.trunc())
    }

    fn check_grid(&self, g: &GridField) -> Result<()> {
        if g.values.dim() != (self.trunc.grid_m1, self.trunc.grid_m2) {
            return Err(Error::config(format!(
                "grid shape {:?} does not match basis grid ({}, {})",
                g.values.dim(),
                self.trunc.grid_m1,
                self.trunc.grid_m2
            )));
        }
        Ok(())
    }

    /// Values of `Σ coeffs[ℓ]·e_ℓ` at the collocation nodes.
    pub fn synthesize(&self, u: &SpectralField) -> GridField {
        let inner = u.coeffs().dot(&self.sin_synth.t());
        GridField {
            trunc: self.trunc,
            parity: Parity::Sine,
            values: self.x1_synth.dot(&inner),
        }
    }

    /// Synthesize a cosine-in-x2 series with coefficients `a[row, m]`,
    /// `m = 0..=n2`, using the same x1 basis as the state.
    fn synthesize_cosine(&self, a: &Array2<f64>) -> GridField {
        let inner = a.dot(&self.cos_synth.t());
        GridField {
            trunc: self.trunc,
            parity: Parity::Cosine,
            values: self.x1_synth.dot(&inner),
        }
    }

    /// Coefficients `⟨g, e_ℓ⟩₂` for every slot. Exact for band-limited `g`;
    /// no projection is applied.
    pub fn analyze(&self, g: &GridField) -> Result<SpectralField> {
        self.check_grid(g)?;
        let weights = match g.parity {
            Parity::Sine => &self.sin_anal,
            Parity::Cosine => &self.cos_anal,
        };
        let coeffs = self.x1_anal.t().dot(&g.values.dot(weights));
        SpectralField::from_coeffs(self.trunc, coeffs)
    }

    /// `∫_Ω g dx`, exact within the parity capacity.
    pub fn integrate(&self, g: &GridField) -> Result<f64> {
        self.check_grid(g)?;
        let w2 = match g.parity {
            Parity::Sine => &self.sin_int,
            Parity::Cosine => &self.cos_int,
        };
        let h1 = 2.0 * PI / self.trunc.grid_m1 as f64;
        Ok(g.values.dot(w2).sum() * h1)
    }

    /// `⟨f, g⟩₂` by exact quadrature of the pointwise product.
    pub fn inner(&self, f: &GridField, g: &GridField) -> Result<f64> {
        self.integrate(&f.product(g)?)
    }

    /// Values of `∂₂ᵏu`: sine content for even `k`, cosine content for odd `k`.
    pub fn synthesize_d2(&self, u: &SpectralField, order: u32) -> GridField {
        let sign = if (order / 2).is_multiple_of(2) { 1.0 } else { -1.0 };
        let weight = |l2: i32| sign * (l2 as f64).powi(order as i32);
        if order.is_multiple_of(2) {
            self.synthesize(&u.map_modes(|m| weight(m.l2)))
        } else {
            let (k1, n2) = (self.trunc.k1(), self.trunc.n2);
            let mut a = Array2::zeros((k1, n2 + 1));
            for ((row, col), c) in u.coeffs().indexed_iter() {
                a[[row, col + 1]] = weight(col as i32 + 1) * c;
            }
            self.synthesize_cosine(&a)
        }
    }

    /// Values of `∂₂u` (a cosine series in x2).
    pub fn d2_to_grid(&self, u: &SpectralField) -> GridField {
        self.synthesize_d2(u, 1)
    }

    /// Values of `v_u = -∫₀^{x2} ∂₁u`. Each `sin(l2·s)` of `∂₁u` integrates to
    /// `(1 - cos(l2·x2))/l2`.
    pub fn v_from_u(&self, u: &SpectralField) -> GridField {
        let du = d1(u);
        let (k1, n2) = (self.trunc.k1(), self.trunc.n2);
        let mut a = Array2::zeros((k1, n2 + 1));
        for ((row, col), d) in du.coeffs().indexed_iter() {
            let l2 = (col + 1) as f64;
            a[[row, 0]] -= d / l2;
            a[[row, col + 1]] += d / l2;
        }
        self.synthesize_cosine(&a)
    }

    /// `‖u(x1_i, ·)‖_{L2(0,π)}` at every x1 node, exact from the coefficients.
    pub fn column_l2_norms(&self, u: &SpectralField) -> Vec<f64> {
        let columns = self.x1_synth.dot(u.coeffs());
        columns
            .axis_iter(Axis(0))
            .map(|row| (0.5 * PI * row.dot(&row)).sqrt())
            .collect()
    }

    /// `‖f‖₂²` of a grid function by exact quadrature of `f²`.
    pub fn grid_norm_sq(&self, g: &GridField) -> Result<f64> {
        self.inner(g, g)
    }

    /// Sum of squared nodal differences; used only for sanity checks.
    pub fn max_abs_diff(a: &GridField, b: &GridField) -> f64 {
        Zip::from(&a.values)
            .and(&b.values)
            .fold(0.0f64, |m, x, y| m.max((x - y).abs()))
    }
}
