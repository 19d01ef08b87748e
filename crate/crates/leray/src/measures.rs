//! Boundary measure densities in chart coordinates: induced Lebesgue σ, the
//! Leray-Levi measure λ via the differential-form pull-back, the μ_a family
//! interpolating between them, and the anisotropically transported measures
//! λ_ε, μ_{a,ε} of the scaling argument.
//!
//! Densities are with respect to dt₁ dt₂ dt₃ in graph-chart coordinates.

use crate::boundary::{Chart, ChartPoint, ChartSide, ParamBox};
use crate::geometry::{complex_hessian, holo_gradient, CVector2, DomainSpec, Family};
use crate::quadrature::{self, QuadRule, Segment};
use crate::{Error, Result};
use num_complex::Complex64;

/// 4π², the Leray-Levi normalization of the quadratic model.
pub const FOUR_PI_SQ: f64 = 39.47841760435743;

/// Selector among the catalog boundary measures.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeasureKind {
    /// induced Lebesgue measure dσ
    Sigma,
    /// Leray-Levi measure dλ
    LerayLevi,
    /// dμ_a = (𝓛/|∇ρ|)^a dσ, normalized so a = 1 gives 4π²·dλ
    MuA(f64),
    /// transported dλ_ε on bD_ε (pushforward of dλ under τ_{ε⁻¹})
    TransportedLL { eps: f64 },
    /// transported dμ_{a,ε} on bD_ε
    TransportedMuA { a: f64, eps: f64 },
}

impl MeasureKind {
    pub fn label(&self) -> String {
        match self {
            MeasureKind::Sigma => "sigma".into(),
            MeasureKind::LerayLevi => "leray-levi".into(),
            MeasureKind::MuA(a) => format!("mu_a(a={a})"),
            MeasureKind::TransportedLL { eps } => format!("lambda_eps(eps={eps})"),
            MeasureKind::TransportedMuA { a, eps } => format!("mu_a_eps(a={a},eps={eps})"),
        }
    }

    /// Exponent of the |t₁| singularity this measure carries on the power
    /// families (0 on quad families and for σ).
    pub fn singular_exponent(&self, spec: &DomainSpec) -> f64 {
        let m = match spec.m() {
            Some(m) => m,
            None => return 0.0,
        };
        match self {
            MeasureKind::Sigma => 0.0,
            MeasureKind::LerayLevi | MeasureKind::TransportedLL { .. } => m - 2.0,
            MeasureKind::MuA(a) | MeasureKind::TransportedMuA { a, .. } => (m - 2.0) * a,
        }
    }

    /// μ_a on the power families needs a < 1/(2−m) for box integrability.
    pub fn validate(&self, spec: &DomainSpec) -> Result<()> {
        if let (Some(m), MeasureKind::MuA(a) | MeasureKind::TransportedMuA { a, .. }) =
            (spec.m(), self)
        {
            if (m - 2.0) * a <= -1.0 {
                return Err(Error::NonIntegrable((m - 2.0) * a));
            }
        }
        if let MeasureKind::TransportedLL { eps } | MeasureKind::TransportedMuA { eps, .. } = self {
            match spec.eps() {
                Some(e) if (e - eps).abs() < 1e-15 => {}
                _ => {
                    return Err(Error::InvalidParam(format!(
                        "transported measure eps = {eps} does not match spec {spec:?}"
                    )))
                }
            }
        }
        Ok(())
    }
}

/// Induced-Lebesgue density √(1 + |∇g|²) of a graph chart.
pub fn sigma_density(chart: &Chart, t: ChartPoint) -> Result<f64> {
    let g = chart.height_grad(t)?;
    Ok((1.0 + g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt())
}

/// Leray-Levi density: (2πi)^{−2} times the pull-back of ∂ρ ∧ ∂̄∂ρ evaluated
/// on the chart frame. The imaginary residue must vanish (asserted < 1e−10
/// relative); the sign is orientation and is dropped.
pub fn leray_levi_density(spec: &DomainSpec, chart: &Chart, t: ChartPoint) -> Result<f64> {
    let w = chart.embed(t)?;
    let grad = holo_gradient(spec, w);
    let hess = complex_hessian(spec, w)?;
    let frame = chart.frame(t)?;

    let alpha = |x: &CVector2| grad.c1 * x.c1 + grad.c2 * x.c2;
    let beta = |x: &CVector2, y: &CVector2| {
        hess.h11 * (x.c1.conj() * y.c1 - y.c1.conj() * x.c1)
            + hess.h12 * (x.c1.conj() * y.c2 - y.c1.conj() * x.c2)
            + hess.h21 * (x.c2.conj() * y.c1 - y.c2.conj() * x.c1)
            + hess.h22 * (x.c2.conj() * y.c2 - y.c2.conj() * x.c2)
    };
    let [x1, x2, x3] = &frame;
    let form = alpha(x1) * beta(x2, x3) - alpha(x2) * beta(x1, x3) + alpha(x3) * beta(x1, x2);
    // (2πi)^{-2} = -1/(4π²)
    let val = -form / FOUR_PI_SQ;
    let scale = val.norm().max(1e-30);
    assert!(
        val.im.abs() <= 1e-10 * scale.max(1.0),
        "Leray-Levi pull-back has imaginary residue {} at {t:?}",
        val.im
    );
    Ok(val.re.abs())
}

/// μ_a density, convention-fixed as (4π² λ/σ)^a · σ so that a = 0 gives σ
/// exactly and a = 1 gives 4π²·λ.
pub fn mu_a_density(spec: &DomainSpec, chart: &Chart, t: ChartPoint, a: f64) -> Result<f64> {
    let sig = sigma_density(chart, t)?;
    if a == 0.0 {
        return Ok(sig);
    }
    let lam = leray_levi_density(spec, chart, t)?;
    Ok((FOUR_PI_SQ * lam / sig).powf(a) * sig)
}

/// Density of a transported measure on the bD_ε chart at t, pulled from the
/// bounded-domain lower chart:
///
/// quad:  Λ_ε(t) = Λ(εt₁, εt₂, ε²t₃)           (and M_{a,ε} likewise),
/// power: Λ_ε(t) = ε^{2−m} Λ(εt₁, εt₂, ε^m t₃),
///        M_{a,ε}(t) = ε^{a(2−m)} M_a(εt₁, εt₂, ε^m t₃).
pub fn transported_density(spec: &DomainSpec, t: ChartPoint, kind: MeasureKind) -> Result<f64> {
    let eps = spec
        .eps()
        .ok_or_else(|| Error::InvalidSpec("transported density requires a scaled spec".into()))?;
    kind.validate(spec)?;
    let bounded = spec.bounded();
    let chart = Chart::new(bounded, ChartSide::Lower)?;
    let ts = ChartPoint::new(eps * t.t1, eps * t.t2, eps.powf(spec.kappa()) * t.t3);
    if chart.base(ts) >= 1.0 {
        return Err(Error::OutsideChart(format!(
            "scaled base point leaves the bounded chart at {t:?}"
        )));
    }
    match (kind, spec.family()) {
        (MeasureKind::TransportedLL { .. }, Family::ScaledQuad) => {
            leray_levi_density(&bounded, &chart, ts)
        }
        (MeasureKind::TransportedLL { .. }, Family::ScaledPower) => {
            let m = spec.m().unwrap();
            Ok(eps.powf(2.0 - m) * leray_levi_density(&bounded, &chart, ts)?)
        }
        (MeasureKind::TransportedMuA { a, .. }, Family::ScaledQuad) => {
            mu_a_density(&bounded, &chart, ts, a)
        }
        (MeasureKind::TransportedMuA { a, .. }, Family::ScaledPower) => {
            let m = spec.m().unwrap();
            Ok(eps.powf(a * (2.0 - m)) * mu_a_density(&bounded, &chart, ts, a)?)
        }
        _ => Err(Error::InvalidParam(format!(
            "transported_density expects a transported kind, got {}",
            kind.label()
        ))),
    }
}

/// Density dispatcher for any measure kind on any chart.
pub fn density(spec: &DomainSpec, chart: &Chart, t: ChartPoint, kind: MeasureKind) -> Result<f64> {
    match kind {
        MeasureKind::Sigma => sigma_density(chart, t),
        MeasureKind::LerayLevi => leray_levi_density(spec, chart, t),
        MeasureKind::MuA(a) => mu_a_density(spec, chart, t, a),
        MeasureKind::TransportedLL { .. } | MeasureKind::TransportedMuA { .. } => {
            transported_density(spec, t, kind)
        }
    }
}

/// How the singular axis of a box integral is handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SingularAxisScheme {
    /// dyadically graded cells toward t₁ = 0 with an analytic tail (default)
    GradedDyadic { levels: usize },
    /// Gauss-Jacobi nodes absorbing the |t₁|^γ weight
    Jacobi,
}

impl Default for SingularAxisScheme {
    fn default() -> Self {
        SingularAxisScheme::GradedDyadic { levels: 12 }
    }
}

/// Axis-1 segments for a box integral of a measure with singular exponent γ.
pub fn t1_segments(
    intervals: &[(f64, f64)],
    gamma: f64,
    order: usize,
    scheme: SingularAxisScheme,
) -> Result<Vec<Segment>> {
    let mut segs = Vec::new();
    for &(lo, hi) in intervals {
        if gamma == 0.0 || lo > 0.0 || hi < 0.0 {
            segs.push(Segment::plain(lo, hi, order)?);
            continue;
        }
        match scheme {
            SingularAxisScheme::GradedDyadic { levels } => {
                segs.extend(quadrature::graded_axis(lo, hi, levels, order, gamma)?)
            }
            SingularAxisScheme::Jacobi => {
                if lo < 0.0 {
                    segs.push(Segment::jacobi_to_zero(-lo, -1.0, order, gamma)?);
                }
                if hi > 0.0 {
                    segs.push(Segment::jacobi_to_zero(hi, 1.0, order, gamma)?);
                }
            }
        }
    }
    Ok(segs)
}

/// Measure of a box: ∫_box density dt by quadrature, graded at t₁ = 0 when
/// the measure is singular there. Bounded specs integrate on the lower chart.
pub fn box_measure(
    pbox: &ParamBox,
    spec: &DomainSpec,
    kind: MeasureKind,
    rule: &QuadRule,
    scheme: SingularAxisScheme,
) -> Result<f64> {
    kind.validate(spec)?;
    let chart = match spec.family() {
        Family::BoundedQuad | Family::BoundedPower => Chart::new(*spec, ChartSide::Lower)?,
        _ => Chart::model(*spec)?,
    };
    let gamma = kind.singular_exponent(spec);
    let ax1 = t1_segments(&pbox.t1_intervals(), gamma, rule.orders[0], scheme)?;
    let (l2, h2) = pbox.t2_interval();
    let (l3, h3) = pbox.t3_interval();
    let ax2 = vec![Segment::plain(l2, h2, rule.orders[1])?];
    let ax3 = vec![Segment::plain(l3, h3, rule.orders[2])?];
    let f = |t: ChartPoint| -> Complex64 {
        Complex64::new(density(spec, &chart, t, kind).unwrap_or(f64::NAN), 0.0)
    };
    let v = quadrature::tensor3(&ax1, &ax2, &ax3, &f)?;
    Ok(v.re)
}
