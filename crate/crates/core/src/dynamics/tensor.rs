//! Exact Galerkin interaction tensor `T[j,k,ℓ] = ⟨B(e_j, e_k), e_ℓ⟩₂`.
//!
//! Every basis function is a product of an x1 factor and an x2 factor, and so
//! are `∂₁e_k`, `∂₂e_k` and `v_{e_j}`. Each tensor entry therefore splits into
//! sums of products of one-dimensional integrals, which are evaluated by
//! quadrature that does not share any code with the collocation transforms:
//! the periodic trapezoid rule in x1 (exact for the trigonometric degree
//! involved) and Gauss–Legendre in x2.

use std::f64::consts::PI;

use gauss_quad::legendre::GaussLegendre;
use ndarray::{Array2, Array3};
use rayon::prelude::*;

use super::{ExplicitTerms, ModelParams};
use crate::spectral::{laplacian, mode_set, ModeIndex, SpectralField, Truncation};
use crate::{Error, Result};

/// Default cap on the number of admissible modes for tensor construction.
pub const DEFAULT_TENSOR_CAP: usize = 200;

#[derive(Clone, Debug)]
pub struct GalerkinTensor {
    trunc: Truncation,
    modes: Vec<ModeIndex>,
    /// Dense `n × n × n` storage, index `(j·n + k)·n + ℓ`.
    t: Vec<f64>,
    /// `V[j, ℓ] = ⟨v_{e_j}, e_ℓ⟩₂`, dense `n × n`.
    v: Array2<f64>,
}

struct OneDim {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

fn x1_rule(n1: usize) -> OneDim {
    let m = 3 * n1 + 3;
    let h = 2.0 * PI / m as f64;
    OneDim {
        nodes: (0..m).map(|i| -PI + h * i as f64).collect(),
        weights: vec![h; m],
    }
}

fn x2_rule(n2: usize) -> Result<OneDim> {
    let deg = 4 * (3 * n2 + 3) + 16;
    let rule = GaussLegendre::new(deg).map_err(|e| Error::config(e.to_string()))?;
    let (nodes, weights) = rule
        .as_node_weight_pairs()
        .iter()
        .map(|(x, w)| (0.5 * PI * (x + 1.0), 0.5 * PI * w))
        .unzip();
    Ok(OneDim { nodes, weights })
}

/// Triple integrals `Σ_q w_q a(x_q)·b(x_q)·c(x_q)` over all index triples.
fn triple_table(
    rule: &OneDim,
    count: usize,
    a: impl Fn(usize, f64) -> f64 + Sync,
    b: impl Fn(usize, f64) -> f64 + Sync,
    c: impl Fn(usize, f64) -> f64 + Sync,
) -> Array3<f64> {
    let eval = |f: &(dyn Fn(usize, f64) -> f64 + Sync)| -> Array2<f64> {
        Array2::from_shape_fn((count, rule.nodes.len()), |(i, q)| f(i, rule.nodes[q]))
    };
    let (ta, tb, tc) = (eval(&a), eval(&b), eval(&c));
    let mut out = Array3::zeros((count, count, count));
    for i in 0..count {
        for j in 0..count {
            for k in 0..count {
                let mut s = 0.0;
                for (q, w) in rule.weights.iter().enumerate() {
                    s += w * ta[[i, q]] * tb[[j, q]] * tc[[k, q]];
                }
                out[[i, j, k]] = s;
            }
        }
    }
    out
}

fn x1_value(l1: i32, x: f64) -> f64 {
    let c = if l1 == 0 { 1.0 / PI } else { std::f64::consts::SQRT_2 / PI };
    if l1 >= 0 {
        c * (l1 as f64 * x).cos()
    } else {
        c * (-l1 as f64 * x).sin()
    }
}

fn x1_derivative(l1: i32, x: f64) -> f64 {
    let c = if l1 == 0 { 1.0 / PI } else { std::f64::consts::SQRT_2 / PI };
    let k = l1.unsigned_abs() as f64;
    if l1 >= 0 {
        -c * k * (k * x).sin()
    } else {
        c * k * (k * x).cos()
    }
}

impl GalerkinTensor {
    pub fn build(trunc: Truncation) -> Result<Self> {
        Self::build_with_cap(trunc, DEFAULT_TENSOR_CAP)
    }

    pub fn build_with_cap(trunc: Truncation, cap: usize) -> Result<Self> {
        let modes = mode_set(&trunc);
        let n = modes.len();
        if n > cap {
            return Err(Error::config(format!(
                "tensor oracle needs {n} admissible modes, above the cap of {cap}"
            )));
        }
        let n1 = trunc.n1 as i32;
        let k1 = trunc.k1();
        let n2 = trunc.n2;
        let r1 = x1_rule(trunc.n1);
        let r2 = x2_rule(n2)?;
        let l1 = |row: usize| row as i32 - n1;
        let l2 = |col: usize| (col + 1) as f64;

        // x1 factors: e_j·∂₁e_k·e_ℓ and −∂₁e_j·e_k·e_ℓ.
        let e1 = |r: usize, x: f64| x1_value(l1(r), x);
        let de1 = |r: usize, x: f64| x1_derivative(l1(r), x);
        let x1_adv = triple_table(&r1, k1, e1, de1, e1);
        let x1_vert = triple_table(&r1, k1, de1, e1, e1).mapv(|s| -s);
        // x2 factors: sin·sin·sin and ((1 − cos l_j x)/l_j)·(l_k cos l_k x)·sin.
        let s2 = |c: usize, x: f64| (l2(c) * x).sin();
        let prof = |c: usize, x: f64| (1.0 - (l2(c) * x).cos()) / l2(c);
        let dc2 = |c: usize, x: f64| l2(c) * (l2(c) * x).cos();
        let x2_adv = triple_table(&r2, n2, s2, s2, s2);
        let x2_vert = triple_table(&r2, n2, prof, dc2, s2);

        let idx: Vec<(usize, usize)> = modes
            .iter()
            .map(|m| (trunc.row(m.l1), m.l2 as usize - 1))
            .collect();
        let mut t = vec![0.0; n * n * n];
        t.par_chunks_mut(n).enumerate().for_each(|(jk, out)| {
            let (a1, a2) = idx[jk / n];
            let (b1, b2) = idx[jk % n];
            for (l, slot) in out.iter_mut().enumerate() {
                let (c1, c2) = idx[l];
                *slot = x1_adv[[a1, b1, c1]] * x2_adv[[a2, b2, c2]]
                    + x1_vert[[a1, b1, c1]] * x2_vert[[a2, b2, c2]];
            }
        });

        // V[j, ℓ] = ⟨−∂₁e_j ⊗ (1 − cos l_j x2)/l_j, e_ℓ⟩.
        let pair = |rule: &OneDim, f: &dyn Fn(f64) -> f64, g: &dyn Fn(f64) -> f64| -> f64 {
            rule.nodes
                .iter()
                .zip(&rule.weights)
                .map(|(&x, &w)| w * f(x) * g(x))
                .sum()
        };
        let v = Array2::from_shape_fn((n, n), |(j, l)| {
            let (mj, ml) = (modes[j], modes[l]);
            let a = pair(&r1, &|x| x1_derivative(mj.l1, x), &|x| x1_value(ml.l1, x));
            let lj = mj.l2 as f64;
            let b = pair(&r2, &|x| (1.0 - (lj * x).cos()) / lj, &|x| (ml.l2 as f64 * x).sin());
            -a * b
        });

        Ok(Self { trunc, modes, t, v })
    }

    pub fn trunc(&self) -> &Truncation {
        &self.trunc
    }

    /// Admissible modes in tensor index order.
    pub fn modes(&self) -> &[ModeIndex] {
        &self.modes
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn get(&self, j: usize, k: usize, l: usize) -> f64 {
        let n = self.len();
        self.t[(j * n + k) * n + l]
    }

    pub fn v_entry(&self, j: usize, l: usize) -> f64 {
        self.v[[j, l]]
    }

    fn coords(&self, u: &SpectralField) -> Result<Vec<f64>> {
        self.trunc.ensure_same_modes(u.trunc())?;
        Ok(self.modes.iter().map(|m| u.get(*m)).collect())
    }

    fn field(&self, like: &SpectralField, c: &[f64]) -> SpectralField {
        let mut out = SpectralField::zeros(*like.trunc());
        for (m, &x) in self.modes.iter().zip(c) {
            out.set(*m, x).expect("tensor modes lie in the truncation");
        }
        out
    }

    /// `ℙB(u,w)` by contraction `Σ_{j,k} u_j w_k T[j,k,ℓ]`.
    pub fn contract_b(&self, u: &SpectralField, w: &SpectralField) -> Result<SpectralField> {
        let (cu, cw) = (self.coords(u)?, self.coords(w)?);
        let n = self.len();
        let mut out = vec![0.0; n];
        for (j, &uj) in cu.iter().enumerate() {
            if uj == 0.0 {
                continue;
            }
            for (k, &wk) in cw.iter().enumerate() {
                let a = uj * wk;
                if a == 0.0 {
                    continue;
                }
                let row = &self.t[(j * n + k) * n..(j * n + k + 1) * n];
                for (o, t) in out.iter_mut().zip(row) {
                    *o += a * t;
                }
            }
        }
        Ok(self.field(u, &out))
    }

    /// `ℙv_u` by contraction with `V`.
    pub fn contract_v(&self, u: &SpectralField) -> Result<SpectralField> {
        let cu = self.coords(u)?;
        let n = self.len();
        let out: Vec<f64> = (0..n)
            .map(|l| (0..n).map(|j| cu[j] * self.v[[j, l]]).sum())
            .collect();
        Ok(self.field(u, &out))
    }
}

/// Build the interaction tensor with the default mode cap.
pub fn galerkin_tensor(trunc: Truncation) -> Result<GalerkinTensor> {
    GalerkinTensor::build(trunc)
}

/// [`ExplicitTerms`] evaluated by tensor contraction.
#[derive(Clone, Debug)]
pub struct TensorOracle {
    tensor: GalerkinTensor,
}

impl TensorOracle {
    pub fn new(tensor: GalerkinTensor) -> Self {
        Self { tensor }
    }

    pub fn tensor(&self) -> &GalerkinTensor {
        &self.tensor
    }
}

impl ExplicitTerms for TensorOracle {
    fn trunc(&self) -> &Truncation {
        &self.tensor.trunc
    }

    fn explicit(
        &self,
        u: &SpectralField,
        k_t: Option<&SpectralField>,
        p: &ModelParams,
    ) -> Result<SpectralField> {
        explicit_by_contraction(&self.tensor, u, k_t, p)
    }

    fn v_inner(&self, u: &SpectralField) -> Result<f64> {
        Ok(self.tensor.contract_v(u)?.dot(u))
    }
}

fn explicit_by_contraction(
    tensor: &GalerkinTensor,
    u: &SpectralField,
    k_t: Option<&SpectralField>,
    p: &ModelParams,
) -> Result<SpectralField> {
    let mut out = tensor.contract_b(u, u)?.scaled(-1.0);
    out.add_scaled(p.alpha, u);
    if p.beta != 0.0 {
        out.add_scaled(p.beta, &tensor.contract_v(u)?);
    }
    if let Some(k) = k_t {
        tensor.trunc.ensure_same_modes(k.trunc())?;
        out += k;
    }
    Ok(out)
}

/// Galerkin right-hand side by tensor contraction.
pub fn rhs_oracle(
    u: &SpectralField,
    k_t: Option<&SpectralField>,
    p: &ModelParams,
    tensor: &GalerkinTensor,
) -> Result<SpectralField> {
    let mut out = explicit_by_contraction(tensor, u, k_t, p)?;
    out.add_scaled(p.mu, &laplacian(u));
    Ok(out)
}
