//! The functional inequalities and identities behind the energy estimates,
//! evaluated on concrete fields.
//!
//! Both sides are computed independently: norms of derived quantities
//! (`v_u`, mixed derivatives, column norms, `‖u‖₄`) by exact quadrature on the
//! collocation grid, reference norms by Parseval. An inequality passes when
//! `lhs ≤ rhs·(1 + ε)` with `ε` = [`ROUNDING_ALLOWANCE`]; an identity passes
//! when its normalized defect is below its stated tolerance.

use std::f64::consts::{PI, SQRT_2};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{norms, Norms};
use crate::dynamics::{Nonlinearity, PseudoSpectral};
use crate::spectral::random::{field_rng, smooth_admissible};
use crate::spectral::{d1, d2_squared, project_div, Basis, SpectralField, Truncation};
use crate::{Error, Result};

/// Relative slack granted to inequalities for floating-point rounding.
pub const ROUNDING_ALLOWANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckKind {
    /// `lhs ≤ rhs`.
    Inequality,
    /// `lhs` is a normalized defect, `rhs` the tolerance.
    Identity,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub kind: CheckKind,
    pub lhs: f64,
    pub rhs: f64,
    /// `rhs − lhs`; negative means violated.
    pub slack: f64,
    pub pass: bool,
}

impl Check {
    /// `lhs ≤ rhs` up to [`ROUNDING_ALLOWANCE`].
    pub fn inequality(name: &str, lhs: f64, rhs: f64) -> Self {
        Self {
            name: name.into(),
            kind: CheckKind::Inequality,
            lhs,
            rhs,
            slack: rhs - lhs,
            pass: lhs <= rhs * (1.0 + ROUNDING_ALLOWANCE) + f64::MIN_POSITIVE,
        }
    }

    /// `|defect| ≤ tol`.
    pub fn identity(name: &str, defect: f64, tol: f64) -> Self {
        let lhs = defect.abs();
        Self {
            name: name.into(),
            kind: CheckKind::Identity,
            lhs,
            rhs: tol,
            slack: tol - lhs,
            pass: lhs <= tol,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct InequalityReport {
    pub checks: Vec<Check>,
}

impl InequalityReport {
    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn extend(&mut self, other: InequalityReport) {
        self.checks.extend(other.checks);
    }
}

/// `M''_B = c_L² + √π(1 + √2)`, the constant of the trilinear and regularity
/// bounds.
pub fn trilinear_constant(c_l: f64) -> f64 {
    c_l * c_l + PI.sqrt() * (1.0 + SQRT_2)
}

/// Reusable evaluator for one truncation.
#[derive(Debug)]
pub struct InequalitySuite {
    ps: PseudoSpectral,
    /// Grid fine enough to integrate `u⁴` exactly.
    l4_basis: Basis,
    c_l: Option<f64>,
}

fn l4_truncation(trunc: &Truncation) -> Result<Truncation> {
    Truncation::with_grid(trunc.n1, trunc.n2, 4 * trunc.n1 + 2, 4 * trunc.n2 + 2)
}

fn l4_norm(basis: &Basis, u: &SpectralField) -> Result<f64> {
    let g = basis.synthesize(&u.regrid(*basis.trunc())?);
    let sq = g.product(&g)?;
    Ok(basis.inner(&sq, &sq)?.max(0.0).powf(0.25))
}

impl InequalitySuite {
    pub fn new(trunc: Truncation) -> Result<Self> {
        Self::with_variant(trunc, Nonlinearity::Standard)
    }

    pub fn with_variant(trunc: Truncation, variant: Nonlinearity) -> Result<Self> {
        Ok(Self {
            ps: PseudoSpectral::with_variant(trunc, variant),
            l4_basis: Basis::new(l4_truncation(&trunc)?),
            c_l: None,
        })
    }

    /// Enable the Ladyzhenskaya, trilinear and regularity checks with the
    /// given constant (already including any safety factor).
    pub fn with_ladyzhenskaya(mut self, c_l: f64) -> Self {
        self.c_l = Some(c_l);
        self
    }

    pub fn c_l(&self) -> Option<f64> {
        self.c_l
    }

    fn basis(&self) -> &Basis {
        self.ps.basis()
    }

    /// Single-field checks. `u` must be admissible and nonzero.
    pub fn check_field(&self, u: &SpectralField) -> Result<InequalityReport> {
        let b = self.basis();
        b.check(u)?;
        if u.norm_sq() == 0.0 {
            return Err(Error::Vacuous("inequalities are trivial for u = 0".into()));
        }
        let n = norms(u);
        let mut checks = Vec::new();

        checks.push(Check::inequality("poincare", n.l2, n.grad));
        checks.push(Check::inequality("grad-le-laplacian", n.grad, n.lap));

        // ‖∇∂₁u‖² + ‖∇∂₂u‖² = ‖Δu‖², left side by grid quadrature.
        let du1 = d1(u);
        let d11 = b.synthesize(&d1(&du1));
        let d12 = b.d2_to_grid(&du1);
        let d22 = b.synthesize_d2(u, 2);
        let split = b.grid_norm_sq(&d11)? + 2.0 * b.grid_norm_sq(&d12)? + b.grid_norm_sq(&d22)?;
        let lap_sq = n.lap * n.lap;
        checks.push(Check::identity(
            "laplacian-splitting",
            (split - lap_sq) / lap_sq,
            1e-10,
        ));

        // ‖v_u‖₂ ≤ π‖∂₁u‖₂.
        let v = b.v_from_u(u);
        let v_norm = b.grid_norm_sq(&v)?.max(0.0).sqrt();
        checks.push(Check::inequality("v-l2", v_norm, PI * n.d1));

        // Column-wise sup bound; the grid maximum bounds the true sup from below.
        let v_cols = v.column_max_abs();
        let du_cols = b.column_l2_norms(&du1);
        checks.push(worst_columnwise(
            "v-linfty-column",
            &v_cols,
            &du_cols.iter().map(|c| PI.sqrt() * c).collect::<Vec<_>>(),
        ));

        // Anisotropic column bound.
        let u_cols = b.column_l2_norms(u);
        let bound = n.l2.sqrt() * (n.l2.sqrt() + SQRT_2 * n.d1.sqrt());
        checks.push(worst_columnwise(
            "mixed-space-column",
            &u_cols,
            &vec![bound; u_cols.len()],
        ));

        if let Some(c_l) = self.c_l {
            let l4 = l4_norm(&self.l4_basis, u)?;
            checks.push(Check::inequality(
                "ladyzhenskaya",
                l4,
                c_l * (n.l2 * n.grad).sqrt(),
            ));
        }

        let buu = self.ps.b(u, u)?;
        checks.push(Check::identity(
            "skew-pb-u-u",
            project_div(&buu).dot(u) / n.grad.powi(3),
            1e-9,
        ));
        checks.push(Check::identity(
            "b-d22-orthogonality",
            buu.dot(&d2_squared(u)) / (n.grad * n.grad * n.lap),
            1e-9,
        ));
        Ok(InequalityReport { checks })
    }

    /// Checks involving an admissible `u` and a second field `w`
    /// (admissible for the skew-symmetry identity).
    pub fn check_pair(&self, u: &SpectralField, w: &SpectralField) -> Result<InequalityReport> {
        let b = self.basis();
        b.check(u)?;
        b.check(w)?;
        let (nu, nw) = (norms(u), norms(w));
        let mut checks = Vec::new();

        // ⟨v_u, ∂₂w⟩₂ = ⟨∂₁u, w⟩₂.
        let lhs = b.inner(&b.v_from_u(u), &b.d2_to_grid(w))?;
        let rhs = d1(u).dot(w);
        let scale = (PI * nu.d1 * nw.d2).max(f64::MIN_POSITIVE);
        checks.push(Check::identity(
            "integration-by-parts",
            (lhs - rhs) / scale,
            1e-9,
        ));

        if w.is_admissible() {
            let scale = (nu.grad * nw.grad * nw.grad).max(f64::MIN_POSITIVE);
            checks.push(Check::identity(
                "skew-b-u-w",
                self.ps.b(u, w)?.dot(w) / scale,
                1e-9,
            ));
        }
        Ok(InequalityReport { checks })
    }

    /// Trilinear bound for admissible `u, w, z` and regularity bound (`z`
    /// arbitrary in `L₂`). Requires the Ladyzhenskaya constant.
    pub fn check_triple(
        &self,
        u: &SpectralField,
        w: &SpectralField,
        z: &SpectralField,
    ) -> Result<InequalityReport> {
        let c_l = self.c_l.ok_or_else(|| {
            Error::config("trilinear checks need a calibrated Ladyzhenskaya constant")
        })?;
        let m = trilinear_constant(c_l);
        let (nu, nw, nz): (Norms, Norms, Norms) = (norms(u), norms(w), norms(z));
        let bz = self.ps.b(u, w)?.dot(z).abs();
        let mut checks = Vec::new();
        if z.is_admissible() {
            checks.push(Check::inequality(
                "trilinear-bound",
                bz,
                m * nu.grad * nw.grad * nz.grad,
            ));
        }
        checks.push(Check::inequality(
            "regularity-bound",
            bz,
            m * nu.grad * nw.lap * nz.l2,
        ));
        Ok(InequalityReport { checks })
    }
}

fn worst_columnwise(name: &str, lhs: &[f64], rhs: &[f64]) -> Check {
    let mut worst: Option<Check> = None;
    for (&l, &r) in lhs.iter().zip(rhs) {
        let c = Check::inequality(name, l, r);
        let replace = match &worst {
            None => true,
            Some(w) => (!c.pass && w.pass) || (c.pass == w.pass && c.slack < w.slack),
        };
        if replace {
            worst = Some(c);
        }
    }
    worst.unwrap_or_else(|| Check::inequality(name, 0.0, 0.0))
}

/// Single-field inequality report at the default grid, without the
/// Ladyzhenskaya-dependent checks.
pub fn check_inequalities(u: &SpectralField) -> Result<InequalityReport> {
    InequalitySuite::new(*u.trunc())?.check_field(u)
}

/// Result of the random search for the Ladyzhenskaya constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LadyCalibration {
    /// Largest observed `‖u‖₄ / (‖u‖₂^{1/2}‖∇u‖₂^{1/2})`.
    pub max_ratio: f64,
    pub safety_factor: f64,
    /// `max_ratio · safety_factor`, the constant used in assertions.
    pub c_l: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Estimate `c_L` as the maximum Ladyzhenskaya ratio over `samples` random
/// admissible fields, times `safety_factor`. Fields use streams
/// `0..samples` of `seed`; the maximum is order-independent, so the parallel
/// search is deterministic.
pub fn calibrate_ladyzhenskaya(
    trunc: Truncation,
    seed: u64,
    samples: usize,
    safety_factor: f64,
) -> Result<LadyCalibration> {
    let basis = Basis::new(l4_truncation(&trunc)?);
    let ratios: Result<Vec<f64>> = (0..samples as u64)
        .into_par_iter()
        .map(|stream| {
            let mut rng = field_rng(seed, stream);
            let u = smooth_admissible(trunc, &mut rng);
            let n = norms(&u);
            if n.l2 == 0.0 {
                return Ok(0.0);
            }
            Ok(l4_norm(&basis, &u)? / (n.l2 * n.grad).sqrt())
        })
        .collect();
    let max_ratio = ratios?.into_iter().fold(0.0f64, f64::max);
    Ok(LadyCalibration {
        max_ratio,
        safety_factor,
        c_l: max_ratio * safety_factor,
        samples,
        seed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random::random_admissible;
    use crate::spectral::ModeIndex;

    fn m(l1: i32, l2: i32) -> ModeIndex {
        ModeIndex::new(l1, l2).unwrap()
    }

    #[test]
    fn poincare_equality_on_first_mode() {
        let t = Truncation::new(2, 2).unwrap();
        let u = SpectralField::from_modes(t, &[(m(0, 1), PI)]).unwrap();
        let r = check_inequalities(&u).unwrap();
        let p = r.get("poincare").unwrap();
        assert!(p.pass);
        assert!(p.slack.abs() < 1e-14);
        assert!(r.all_pass(), "{r:?}");
    }

    #[test]
    fn v_ratio_for_single_mode() {
        let t = Truncation::new(2, 4).unwrap();
        let u = SpectralField::from_modes(t, &[(m(-1, 2), PI / SQRT_2)]).unwrap();
        let r = check_inequalities(&u).unwrap();
        let c = r.get("v-l2").unwrap();
        assert!(c.pass && c.slack > 0.1 * c.rhs, "{c:?}");
        // Closed form: v_u = −cos(x1)(1 − cos 2x2)/2, so ‖v_u‖₂² = π·3π/8.
        let v_sq = PI * (PI * 3.0 / 8.0);
        assert!((c.lhs - v_sq.sqrt()).abs() < 1e-12, "{} vs {}", c.lhs, v_sq.sqrt());
    }

    #[test]
    fn zero_field_is_vacuous() {
        let t = Truncation::new(1, 1).unwrap();
        assert!(matches!(
            check_inequalities(&SpectralField::zeros(t)),
            Err(Error::Vacuous(_))
        ));
    }

    #[test]
    fn l4_norm_of_first_mode() {
        let t = Truncation::new(2, 3).unwrap();
        let basis = Basis::new(l4_truncation(&t).unwrap());
        let u = SpectralField::from_modes(t, &[(m(0, 1), 1.0)]).unwrap();
        // ∫∫ (sin x2/π)⁴ = 2π · 3π/8 / π⁴.
        let exact = (2.0 * PI * 3.0 * PI / 8.0 / PI.powi(4)).powf(0.25);
        assert!((l4_norm(&basis, &u).unwrap() - exact).abs() < 1e-14);
    }

    #[test]
    fn random_suite_small() {
        let t = Truncation::new(5, 5).unwrap();
        let cal = calibrate_ladyzhenskaya(t, 9, 200, 1.05).unwrap();
        assert!(cal.max_ratio > 0.3 && cal.max_ratio < 1.0, "{cal:?}");
        let suite = InequalitySuite::new(t).unwrap().with_ladyzhenskaya(cal.c_l);
        for s in 0..20 {
            let u = random_admissible(t, 1, s, 1.0 + s as f64);
            let w = random_admissible(t, 2, s, 0.5);
            let z = random_admissible(t, 3, s, 2.0);
            let mut r = suite.check_field(&u).unwrap();
            r.extend(suite.check_pair(&u, &w).unwrap());
            r.extend(suite.check_triple(&u, &w, &z).unwrap());
            assert!(r.all_pass(), "{:?}", r.checks.iter().filter(|c| !c.pass).collect::<Vec<_>>());
        }
    }

    #[test]
    fn flipped_nonlinearity_is_detected() {
        let t = Truncation::new(4, 4).unwrap();
        let suite = InequalitySuite::with_variant(t, Nonlinearity::FlippedVertical).unwrap();
        let u = random_admissible(t, 5, 0, 1.0);
        let w = random_admissible(t, 5, 1, 1.0);
        assert!(!suite.check_pair(&u, &w).unwrap().all_pass());
        assert!(!suite.check_field(&u).unwrap().get("b-d22-orthogonality").unwrap().pass);
    }
}
