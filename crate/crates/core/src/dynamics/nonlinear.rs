//! Pseudo-spectral nonlinearity and explicit right-hand side.

use ndarray::Zip;

use super::ModelParams;
use crate::spectral::{d1, laplacian, project_div, Basis, GridField, SpectralField, Truncation};
use crate::Result;

/// Which advection operator to evaluate.
///
/// `FlippedVertical` negates the `v_u·∂₂w` term. It exists only to check that
/// the verification suite notices a broken nonlinearity.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Nonlinearity {
    #[default]
    Standard,
    FlippedVertical,
}

/// The explicit part `N(u,t) = −ℙB(u,u) + αu + βℙv_u + K(t)` of the
/// evolution equation, plus the pieces needed for energy bookkeeping.
pub trait ExplicitTerms: Sync {
    fn trunc(&self) -> &Truncation;

    fn explicit(
        &self,
        u: &SpectralField,
        k_t: Option<&SpectralField>,
        p: &ModelParams,
    ) -> Result<SpectralField>;

    /// `⟨v_u, u⟩₂`.
    fn v_inner(&self, u: &SpectralField) -> Result<f64>;
}

/// Full right-hand side `N(u,t) + μΔu`.
pub fn rhs(
    terms: &dyn ExplicitTerms,
    u: &SpectralField,
    k_t: Option<&SpectralField>,
    p: &ModelParams,
) -> Result<SpectralField> {
    let mut out = terms.explicit(u, k_t, p)?;
    out.add_scaled(p.mu, &laplacian(u));
    Ok(out)
}

/// Transform-based evaluation on the dealiased collocation grid.
#[derive(Debug)]
pub struct PseudoSpectral {
    basis: Basis,
    variant: Nonlinearity,
}

impl PseudoSpectral {
    pub fn new(trunc: Truncation) -> Self {
        Self::with_variant(trunc, Nonlinearity::Standard)
    }

    pub fn with_variant(trunc: Truncation, variant: Nonlinearity) -> Self {
        Self {
            basis: Basis::new(trunc),
            variant,
        }
    }

    pub fn basis(&self) -> &Basis {
        &self.basis
    }

    pub fn variant(&self) -> Nonlinearity {
        self.variant
    }

    /// Grid values of `B(u,w)`; cosine content in x2.
    pub fn b_grid(&self, u: &SpectralField, w: &SpectralField) -> Result<GridField> {
        self.basis.check(u)?;
        self.basis.check(w)?;
        let b = &self.basis;
        let ug = b.synthesize(u);
        let dw1 = b.synthesize(&d1(w));
        let v = b.v_from_u(u);
        let dw2 = b.d2_to_grid(w);
        let horizontal = ug.product(&dw1)?;
        let mut vertical = v.product(&dw2)?;
        if self.variant == Nonlinearity::FlippedVertical {
            vertical = vertical.scaled(-1.0);
        }
        horizontal.sum(&vertical)
    }

    /// Coefficients `⟨B(u,w), e_ℓ⟩₂` over the whole mode box, unprojected.
    pub fn b(&self, u: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
        self.basis.analyze(&self.b_grid(u, w)?)
    }

    /// `ℙ` of the analysed vertical velocity.
    pub fn v_projected(&self, u: &SpectralField) -> Result<SpectralField> {
        self.basis.check(u)?;
        Ok(project_div(&self.basis.analyze(&self.basis.v_from_u(u))?))
    }
}

impl ExplicitTerms for PseudoSpectral {
    fn trunc(&self) -> &Truncation {
        self.basis.trunc()
    }

    fn explicit(
        &self,
        u: &SpectralField,
        k_t: Option<&SpectralField>,
        p: &ModelParams,
    ) -> Result<SpectralField> {
        let mut out = project_div(&self.b(u, u)?);
        out.coeffs_mut().mapv_inplace(|c| -c);
        out.add_scaled(p.alpha, u);
        if p.beta != 0.0 {
            out.add_scaled(p.beta, &self.v_projected(u)?);
        }
        if let Some(k) = k_t {
            self.basis.check(k)?;
            Zip::from(out.coeffs_mut())
                .and(k.coeffs())
                .for_each(|o, kk| *o += kk);
        }
        Ok(out)
    }

    fn v_inner(&self, u: &SpectralField) -> Result<f64> {
        self.basis.check(u)?;
        self.basis
            .inner(&self.basis.v_from_u(u), &self.basis.synthesize(u))
    }
}

/// `B(u,w) = u·∂₁w + v_u·∂₂w`, analysed onto the mode box of `u` (no
/// projection applied).
pub fn nonlinearity_b(u: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
    PseudoSpectral::new(*u.trunc()).b(u, w)
}
