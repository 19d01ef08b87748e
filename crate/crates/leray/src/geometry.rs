//! Defining functions of the catalog domains, their holomorphic gradients and
//! complex Hessians, and the kernel denominator Δ(w,z) = ⟨∂ρ(w), w−z⟩.
//!
//! Sign convention, fixed repo-wide: ρ < 0 inside the domain, ρ = 0 on the
//! boundary. All derivative closed forms are hand-derived and locked by the
//! finite-difference tests below; there is no automatic differentiation.

use crate::{Error, Result};
use num_complex::Complex64;

pub const I: Complex64 = Complex64::new(0.0, 1.0);

/// A point of ℂ² as two complex coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CPoint2 {
    pub z1: Complex64,
    pub z2: Complex64,
}

impl CPoint2 {
    pub fn new(z1: Complex64, z2: Complex64) -> Self {
        Self { z1, z2 }
    }

    /// Build from the four real coordinates (x₁, y₁, x₂, y₂).
    pub fn from_reals(x1: f64, y1: f64, x2: f64, y2: f64) -> Self {
        Self::new(Complex64::new(x1, y1), Complex64::new(x2, y2))
    }

    pub fn reals(&self) -> [f64; 4] {
        [self.z1.re, self.z1.im, self.z2.re, self.z2.im]
    }

    pub fn is_finite(&self) -> bool {
        self.z1.is_finite() && self.z2.is_finite()
    }
}

impl std::ops::Add for CPoint2 {
    type Output = CPoint2;
    fn add(self, rhs: CPoint2) -> CPoint2 {
        CPoint2::new(self.z1 + rhs.z1, self.z2 + rhs.z2)
    }
}

impl std::ops::Sub for CPoint2 {
    type Output = CPoint2;
    fn sub(self, rhs: CPoint2) -> CPoint2 {
        CPoint2::new(self.z1 - rhs.z1, self.z2 - rhs.z2)
    }
}

/// A vector of ℂ², used for the holomorphic gradient (∂ρ/∂z₁, ∂ρ/∂z₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CVector2 {
    pub c1: Complex64,
    pub c2: Complex64,
}

impl CVector2 {
    pub fn new(c1: Complex64, c2: Complex64) -> Self {
        Self { c1, c2 }
    }

    /// Pairing ⟨v, w⟩ = v₁w₁ + v₂w₂ (bilinear, no conjugation).
    pub fn pair(&self, w: CVector2) -> Complex64 {
        self.c1 * w.c1 + self.c2 * w.c2
    }
}

/// The complex Hessian H_{jk} = ∂²ρ/∂z̄_j∂z_k; Hermitian for real-valued ρ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CMatrix2 {
    pub h11: Complex64,
    pub h12: Complex64,
    pub h21: Complex64,
    pub h22: Complex64,
}

impl CMatrix2 {
    pub fn is_hermitian(&self, tol: f64) -> bool {
        (self.h11 - self.h11.conj()).norm() <= tol
            && (self.h22 - self.h22.conj()).norm() <= tol
            && (self.h12 - self.h21.conj()).norm() <= tol
    }
}

/// Domain family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    ModelQuad,
    ModelPower,
    BoundedQuad,
    BoundedPower,
    ScaledQuad,
    ScaledPower,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::ModelQuad => "model-quad",
            Family::ModelPower => "model-power",
            Family::BoundedQuad => "bounded-quad",
            Family::BoundedPower => "bounded-power",
            Family::ScaledQuad => "scaled-quad",
            Family::ScaledPower => "scaled-power",
        }
    }
}

/// One of the catalog domains, with its parameters validated at construction.
///
/// * `ModelQuad`:    ρ₀ = x₁² − 2y₂             (unbounded graph domain)
/// * `ModelPower`:   ρ₀ = |x₁|^m − 2y₂,  1 < m < 2
/// * `BoundedQuad`:  ρ  = x₁² + y₁⁴ + x₂² + y₂² − 2y₂
/// * `BoundedPower`: ρ  = |x₁|^m + y₁² + x₂² + y₂² − 2y₂
/// * `ScaledQuad`:   ρ_ε = ε⁻²ρ(τ_ε z) = x₁² − 2y₂ + ε²(y₁⁴ + x₂² + y₂²)
/// * `ScaledPower`:  ρ_ε = ε⁻^m ρ(τ_ε z) = |x₁|^m − 2y₂ + ε^{2−m}y₁² + ε^m(x₂² + y₂²)
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DomainSpec {
    ModelQuad,
    ModelPower { m: f64 },
    BoundedQuad,
    BoundedPower { m: f64 },
    ScaledQuad { eps: f64 },
    ScaledPower { m: f64, eps: f64 },
}

fn check_m(m: f64) -> Result<f64> {
    if m.is_finite() && 1.0 < m && m < 2.0 {
        Ok(m)
    } else {
        Err(Error::InvalidSpec(format!("m = {m} must lie in (1, 2)")))
    }
}

fn check_eps(eps: f64) -> Result<f64> {
    if eps.is_finite() && eps > 0.0 {
        Ok(eps)
    } else {
        Err(Error::InvalidSpec(format!("eps = {eps} must be positive")))
    }
}

impl DomainSpec {
    pub fn model_power(m: f64) -> Result<Self> {
        Ok(DomainSpec::ModelPower { m: check_m(m)? })
    }

    pub fn bounded_power(m: f64) -> Result<Self> {
        Ok(DomainSpec::BoundedPower { m: check_m(m)? })
    }

    pub fn scaled_quad(eps: f64) -> Result<Self> {
        Ok(DomainSpec::ScaledQuad { eps: check_eps(eps)? })
    }

    pub fn scaled_power(m: f64, eps: f64) -> Result<Self> {
        Ok(DomainSpec::ScaledPower { m: check_m(m)?, eps: check_eps(eps)? })
    }

    pub fn family(&self) -> Family {
        match self {
            DomainSpec::ModelQuad => Family::ModelQuad,
            DomainSpec::ModelPower { .. } => Family::ModelPower,
            DomainSpec::BoundedQuad => Family::BoundedQuad,
            DomainSpec::BoundedPower { .. } => Family::BoundedPower,
            DomainSpec::ScaledQuad { .. } => Family::ScaledQuad,
            DomainSpec::ScaledPower { .. } => Family::ScaledPower,
        }
    }

    pub fn m(&self) -> Option<f64> {
        match *self {
            DomainSpec::ModelPower { m }
            | DomainSpec::BoundedPower { m }
            | DomainSpec::ScaledPower { m, .. } => Some(m),
            _ => None,
        }
    }

    pub fn eps(&self) -> Option<f64> {
        match *self {
            DomainSpec::ScaledQuad { eps } | DomainSpec::ScaledPower { eps, .. } => Some(eps),
            _ => None,
        }
    }

    /// True for the |x₁|^m families, whose second derivatives blow up at x₁ = 0.
    pub fn is_power(&self) -> bool {
        self.m().is_some()
    }

    /// Anisotropy exponent of the scaling map τ_ε(z₁, z₂) = (εz₁, ε^κ z₂).
    pub fn kappa(&self) -> f64 {
        match *self {
            DomainSpec::ScaledPower { m, .. } => m,
            _ => 2.0,
        }
    }

    /// The model domain this family scales to (quad or power with the same m).
    pub fn model(&self) -> DomainSpec {
        match *self {
            DomainSpec::ModelQuad | DomainSpec::BoundedQuad | DomainSpec::ScaledQuad { .. } => {
                DomainSpec::ModelQuad
            }
            DomainSpec::ModelPower { m }
            | DomainSpec::BoundedPower { m }
            | DomainSpec::ScaledPower { m, .. } => DomainSpec::ModelPower { m },
        }
    }

    /// The bounded domain a scaled family dilates (quad or power with the same m).
    pub fn bounded(&self) -> DomainSpec {
        match *self {
            DomainSpec::ModelQuad | DomainSpec::BoundedQuad | DomainSpec::ScaledQuad { .. } => {
                DomainSpec::BoundedQuad
            }
            DomainSpec::ModelPower { m }
            | DomainSpec::BoundedPower { m }
            | DomainSpec::ScaledPower { m, .. } => DomainSpec::BoundedPower { m },
        }
    }

    /// The anisotropic dilation τ_ε(z₁, z₂) = (ε z₁, ε^κ z₂) for scaled specs.
    pub fn tau(&self, z: CPoint2) -> CPoint2 {
        let eps = self.eps().expect("tau requires a scaled spec");
        CPoint2::new(eps * z.z1, eps.powf(self.kappa()) * z.z2)
    }
}

/// Odd extension of the power: [u]^q = |u|^q sign u, with [0]^q = 0.
pub fn signed_power(u: f64, q: f64) -> f64 {
    if u == 0.0 {
        0.0
    } else {
        u.signum() * u.abs().powf(q)
    }
}

/// Defining function ρ of the spec at z (negative inside).
pub fn rho(spec: &DomainSpec, z: CPoint2) -> f64 {
    let [x1, y1, x2, y2] = z.reals();
    match *spec {
        DomainSpec::ModelQuad => x1 * x1 - 2.0 * y2,
        DomainSpec::ModelPower { m } => x1.abs().powf(m) - 2.0 * y2,
        DomainSpec::BoundedQuad => x1 * x1 + y1.powi(4) + x2 * x2 + y2 * y2 - 2.0 * y2,
        DomainSpec::BoundedPower { m } => {
            x1.abs().powf(m) + y1 * y1 + x2 * x2 + y2 * y2 - 2.0 * y2
        }
        DomainSpec::ScaledQuad { eps } => {
            x1 * x1 - 2.0 * y2 + eps * eps * (y1.powi(4) + x2 * x2 + y2 * y2)
        }
        DomainSpec::ScaledPower { m, eps } => {
            x1.abs().powf(m) - 2.0 * y2
                + eps.powf(2.0 - m) * y1 * y1
                + eps.powf(m) * (x2 * x2 + y2 * y2)
        }
    }
}

/// Holomorphic gradient ∂ρ = ((∂ρ/∂x₁ − i ∂ρ/∂y₁)/2, (∂ρ/∂x₂ − i ∂ρ/∂y₂)/2).
pub fn holo_gradient(spec: &DomainSpec, z: CPoint2) -> CVector2 {
    let [x1, y1, x2, y2] = z.reals();
    match *spec {
        DomainSpec::ModelQuad => CVector2::new(Complex64::new(x1, 0.0), I),
        DomainSpec::ModelPower { m } => {
            CVector2::new(Complex64::new(0.5 * m * signed_power(x1, m - 1.0), 0.0), I)
        }
        DomainSpec::BoundedQuad => CVector2::new(
            Complex64::new(x1, -2.0 * y1.powi(3)),
            Complex64::new(x2, 1.0 - y2),
        ),
        DomainSpec::BoundedPower { m } => CVector2::new(
            Complex64::new(0.5 * m * signed_power(x1, m - 1.0), -y1),
            Complex64::new(x2, 1.0 - y2),
        ),
        DomainSpec::ScaledQuad { eps } => {
            let e2 = eps * eps;
            CVector2::new(
                Complex64::new(x1, -2.0 * e2 * y1.powi(3)),
                Complex64::new(e2 * x2, 1.0 - e2 * y2),
            )
        }
        DomainSpec::ScaledPower { m, eps } => CVector2::new(
            Complex64::new(0.5 * m * signed_power(x1, m - 1.0), -eps.powf(2.0 - m) * y1),
            Complex64::new(eps.powf(m) * x2, 1.0 - eps.powf(m) * y2),
        ),
    }
}

/// Complex Hessian H_{jk} = ∂²ρ/∂z̄_j∂z_k = ¼(∂²_{x_jx_k} + ∂²_{y_jy_k})ρ + …,
/// in closed form; errors on the singular locus x₁ = 0 of the power families.
pub fn complex_hessian(spec: &DomainSpec, z: CPoint2) -> Result<CMatrix2> {
    let [x1, y1, _x2, _y2] = z.reals();
    let zero = Complex64::new(0.0, 0.0);
    let diag = |h11: f64, h22: f64| CMatrix2 {
        h11: Complex64::new(h11, 0.0),
        h12: zero,
        h21: zero,
        h22: Complex64::new(h22, 0.0),
    };
    let pow_h11 = |m: f64| -> Result<f64> {
        if x1 == 0.0 {
            return Err(Error::SingularLocus);
        }
        Ok(0.25 * m * (m - 1.0) * x1.abs().powf(m - 2.0))
    };
    Ok(match *spec {
        DomainSpec::ModelQuad => diag(0.5, 0.0),
        DomainSpec::ModelPower { m } => diag(pow_h11(m)?, 0.0),
        DomainSpec::BoundedQuad => diag(0.25 * (2.0 + 12.0 * y1 * y1), 1.0),
        DomainSpec::BoundedPower { m } => diag(pow_h11(m)? + 0.5, 1.0),
        DomainSpec::ScaledQuad { eps } => {
            let e2 = eps * eps;
            diag(0.25 * (2.0 + 12.0 * e2 * y1 * y1), e2)
        }
        DomainSpec::ScaledPower { m, eps } => {
            diag(pow_h11(m)? + 0.5 * eps.powf(2.0 - m), eps.powf(m))
        }
    })
}

/// Leray denominator Δ(w, z) = ⟨∂ρ(w), w − z⟩.
pub fn delta(spec: &DomainSpec, w: CPoint2, z: CPoint2) -> Complex64 {
    let g = holo_gradient(spec, w);
    g.pair(CVector2::new(w.z1 - z.z1, w.z2 - z.z2))
}

/// Closed form of Δ₀ on the quadratic model boundary, in chart coordinates:
/// ½((u₁−x₁)² + 2i(u₁(v₁−y₁) + u₂ − x₂)).
pub fn delta0_quad_closed(w_t: crate::boundary::ChartPoint, z_t: crate::boundary::ChartPoint) -> Complex64 {
    let (u1, v1, u2) = (w_t.t1, w_t.t2, w_t.t3);
    let (x1, y1, x2) = (z_t.t1, z_t.t2, z_t.t3);
    let du = u1 - x1;
    0.5 * Complex64::new(du * du, 2.0 * (u1 * (v1 - y1) + u2 - x2))
}

/// Closed form of Δ₀ on the power model boundary (1 < m < 2), in chart
/// coordinates, derived from ρ₀ = |x₁|^m − 2y₂:
/// ½(|x₁|^m − |u₁|^m + m[u₁]^{m−1}(u₁−x₁)) + i(½m[u₁]^{m−1}(v₁−y₁) + u₂−x₂).
pub fn delta0_power_closed(
    w_t: crate::boundary::ChartPoint,
    z_t: crate::boundary::ChartPoint,
    m: f64,
) -> Result<Complex64> {
    check_m(m)?;
    let (u1, v1, u2) = (w_t.t1, w_t.t2, w_t.t3);
    let (x1, y1, x2) = (z_t.t1, z_t.t2, z_t.t3);
    let su = signed_power(u1, m - 1.0);
    let re = 0.5 * (x1.abs().powf(m) - u1.abs().powf(m) + m * su * (u1 - x1));
    let im = 0.5 * m * su * (v1 - y1) + (u2 - x2);
    Ok(Complex64::new(re, im))
}
