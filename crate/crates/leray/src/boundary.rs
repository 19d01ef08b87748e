//! Graph-chart parameterizations of the catalog boundaries, lifts of chart
//! points, the two-chart atlas for the bounded domains, and the box families
//! S, S′ used by the blow-up experiments.
//!
//! All boundaries are graphs over the chart coordinates (t₁, t₂, t₃) =
//! (x₁, y₁, x₂); the height is Im z₂.

use crate::geometry::{signed_power, CPoint2, CVector2, DomainSpec, Family, I};
use crate::{Error, Result};
use num_complex::Complex64;

/// A boundary point in graph-chart coordinates (x₁, y₁, x₂).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChartPoint {
    pub t1: f64,
    pub t2: f64,
    pub t3: f64,
}

impl ChartPoint {
    pub fn new(t1: f64, t2: f64, t3: f64) -> Self {
        Self { t1, t2, t3 }
    }

    pub fn array(&self) -> [f64; 3] {
        [self.t1, self.t2, self.t3]
    }
}

/// Which graph a chart parameterizes: the single model/scaled graph, or the
/// lower/upper sheet of a bounded domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChartSide {
    Model,
    Lower,
    Upper,
}

/// A graph chart of one catalog boundary: `embed` maps (t₁,t₂,t₃) to the
/// boundary point (t₁ + i t₂, t₃ + i g(t)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chart {
    pub spec: DomainSpec,
    pub side: ChartSide,
}

impl Chart {
    pub fn new(spec: DomainSpec, side: ChartSide) -> Result<Self> {
        let bounded = matches!(spec.family(), Family::BoundedQuad | Family::BoundedPower);
        match (bounded, side) {
            (true, ChartSide::Lower | ChartSide::Upper) | (false, ChartSide::Model) => {
                Ok(Self { spec, side })
            }
            _ => Err(Error::InvalidSpec(format!(
                "chart side {side:?} does not match family {:?}",
                spec.family()
            ))),
        }
    }

    pub fn model(spec: DomainSpec) -> Result<Self> {
        Self::new(spec, ChartSide::Model)
    }

    /// Base function of a bounded chart: s(t) with the chart defined on s < 1.
    pub fn base(&self, t: ChartPoint) -> f64 {
        match self.spec {
            DomainSpec::BoundedQuad => t.t1 * t.t1 + t.t2.powi(4) + t.t3 * t.t3,
            DomainSpec::BoundedPower { m } => t.t1.abs().powf(m) + t.t2 * t.t2 + t.t3 * t.t3,
            _ => 0.0,
        }
    }

    /// Graph height Im z₂ = g(t).
    pub fn height(&self, t: ChartPoint) -> Result<f64> {
        match self.spec {
            DomainSpec::ModelQuad => Ok(0.5 * t.t1 * t.t1),
            DomainSpec::ModelPower { m } => Ok(0.5 * t.t1.abs().powf(m)),
            DomainSpec::ScaledQuad { .. } | DomainSpec::ScaledPower { .. } => {
                let (c, ek) = self.scaled_c(t);
                let disc = 1.0 - ek * c;
                if disc < 0.0 {
                    return Err(Error::OutsideChart(format!(
                        "scaled chart discriminant negative at {t:?}"
                    )));
                }
                // root of e^k y2^2 - 2 y2 + c = 0 tending to c/2 as eps -> 0,
                // written to avoid cancellation
                Ok(c / (1.0 + disc.sqrt()))
            }
            DomainSpec::BoundedQuad | DomainSpec::BoundedPower { .. } => {
                let s = self.base(t);
                if s >= 1.0 {
                    return Err(Error::OutsideChart(format!(
                        "bounded chart base {s} >= 1 at {t:?}"
                    )));
                }
                let r = (1.0 - s).sqrt();
                Ok(match self.side {
                    ChartSide::Lower => 1.0 - r,
                    ChartSide::Upper => 1.0 + r,
                    ChartSide::Model => unreachable!(),
                })
            }
        }
    }

    /// Gradient (∂g/∂t₁, ∂g/∂t₂, ∂g/∂t₃) of the height.
    pub fn height_grad(&self, t: ChartPoint) -> Result<[f64; 3]> {
        match self.spec {
            DomainSpec::ModelQuad => Ok([t.t1, 0.0, 0.0]),
            DomainSpec::ModelPower { m } => Ok([0.5 * m * signed_power(t.t1, m - 1.0), 0.0, 0.0]),
            DomainSpec::ScaledQuad { .. } | DomainSpec::ScaledPower { .. } => {
                let (c, ek) = self.scaled_c(t);
                let disc = 1.0 - ek * c;
                if disc <= 0.0 {
                    return Err(Error::OutsideChart(format!(
                        "scaled chart discriminant non-positive at {t:?}"
                    )));
                }
                let d = 2.0 * disc.sqrt();
                let cg = self.scaled_c_grad(t);
                Ok([cg[0] / d, cg[1] / d, cg[2] / d])
            }
            DomainSpec::BoundedQuad | DomainSpec::BoundedPower { .. } => {
                let s = self.base(t);
                if s >= 1.0 {
                    return Err(Error::OutsideChart(format!(
                        "bounded chart base {s} >= 1 at {t:?}"
                    )));
                }
                let d = 2.0 * (1.0 - s).sqrt();
                let sg = match self.spec {
                    DomainSpec::BoundedQuad => [2.0 * t.t1, 4.0 * t.t2.powi(3), 2.0 * t.t3],
                    DomainSpec::BoundedPower { m } => {
                        [m * signed_power(t.t1, m - 1.0), 2.0 * t.t2, 2.0 * t.t3]
                    }
                    _ => unreachable!(),
                };
                let sign = if self.side == ChartSide::Lower { 1.0 } else { -1.0 };
                Ok([sign * sg[0] / d, sign * sg[1] / d, sign * sg[2] / d])
            }
        }
    }

    /// c(t) and ε^κ for the scaled-family quadratic height solve.
    fn scaled_c(&self, t: ChartPoint) -> (f64, f64) {
        match self.spec {
            DomainSpec::ScaledQuad { eps } => (
                t.t1 * t.t1 + eps * eps * (t.t2.powi(4) + t.t3 * t.t3),
                eps * eps,
            ),
            DomainSpec::ScaledPower { m, eps } => (
                t.t1.abs().powf(m)
                    + eps.powf(2.0 - m) * t.t2 * t.t2
                    + eps.powf(m) * t.t3 * t.t3,
                eps.powf(m),
            ),
            _ => unreachable!(),
        }
    }

    fn scaled_c_grad(&self, t: ChartPoint) -> [f64; 3] {
        match self.spec {
            DomainSpec::ScaledQuad { eps } => [
                2.0 * t.t1,
                4.0 * eps * eps * t.t2.powi(3),
                2.0 * eps * eps * t.t3,
            ],
            DomainSpec::ScaledPower { m, eps } => [
                m * signed_power(t.t1, m - 1.0),
                2.0 * eps.powf(2.0 - m) * t.t2,
                2.0 * eps.powf(m) * t.t3,
            ],
            _ => unreachable!(),
        }
    }

    /// Embed a chart point on the boundary.
    pub fn embed(&self, t: ChartPoint) -> Result<CPoint2> {
        let g = self.height(t)?;
        Ok(CPoint2::new(
            Complex64::new(t.t1, t.t2),
            Complex64::new(t.t3, g),
        ))
    }

    /// Complexified frame vectors X_k = (∂z₁/∂t_k, ∂z₂/∂t_k) of the embedding.
    pub fn frame(&self, t: ChartPoint) -> Result<[CVector2; 3]> {
        let g = self.height_grad(t)?;
        let one = Complex64::new(1.0, 0.0);
        Ok([
            CVector2::new(one, I * g[0]),
            CVector2::new(I, I * g[1]),
            CVector2::new(Complex64::new(0.0, 0.0), one + I * g[2]),
        ])
    }
}

/// Lift a chart point onto the model boundary: (t₁ + i t₂, t₃ + i φ(t₁)).
pub fn lift_model(spec: &DomainSpec, t: ChartPoint) -> Result<CPoint2> {
    match spec.family() {
        Family::ModelQuad | Family::ModelPower => Chart::model(*spec)?.embed(t),
        f => Err(Error::InvalidSpec(format!("lift_model on family {f:?}"))),
    }
}

/// Lift a chart point onto the scaled boundary bD_ε via the closed-form root.
pub fn lift_scaled(spec: &DomainSpec, t: ChartPoint) -> Result<CPoint2> {
    match spec.family() {
        Family::ScaledQuad | Family::ScaledPower => Chart::model(*spec)?.embed(t),
        f => Err(Error::InvalidSpec(format!("lift_scaled on family {f:?}"))),
    }
}

/// The two-chart atlas (lower and upper graph) of a bounded domain.
pub fn atlas_bounded(spec: &DomainSpec) -> Result<Vec<Chart>> {
    match spec.family() {
        Family::BoundedQuad | Family::BoundedPower => Ok(vec![
            Chart::new(*spec, ChartSide::Lower)?,
            Chart::new(*spec, ChartSide::Upper)?,
        ]),
        f => Err(Error::InvalidSpec(format!("atlas_bounded on family {f:?}"))),
    }
}

/// Box family tag: which model geometry the box sizes follow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxFamily {
    Quad,
    Power,
}

/// Role in the blow-up pair: S carries the test function, S′ the evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoxRole {
    S,
    Sprime,
}

/// Axis-aligned box (or mirrored slab pair, for S′) in chart coordinates.
///
/// Quad:  S  = {|t₁| ≤ aδ², |t₂| ≤ ½, |t₃| ≤ aδ²},
///        S′ = {δ ≤ |t₁| ≤ 2δ, |t₂| ≤ ½, |t₃| ≤ aδ²}.
/// Power: S  = {|t₁| ≤ aδ², |t₂| ≤ δ^{2−m}, |t₃| ≤ aδ^m},
///        S′ = {δ ≤ |t₁| ≤ 2δ, |t₂| ≤ δ^{2−m}, |t₃| ≤ aδ^m}.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ParamBox {
    pub family: BoxFamily,
    pub role: BoxRole,
    pub delta: f64,
    pub a: f64,
    pub m: Option<f64>,
    pub h1: f64,
    pub h2: f64,
    pub h3: f64,
}

impl ParamBox {
    /// Axis-1 intervals: one centered interval for S, two mirrored slabs for S′.
    pub fn t1_intervals(&self) -> Vec<(f64, f64)> {
        match self.role {
            BoxRole::S => vec![(-self.h1, self.h1)],
            BoxRole::Sprime => vec![
                (-2.0 * self.delta, -self.delta),
                (self.delta, 2.0 * self.delta),
            ],
        }
    }

    pub fn t2_interval(&self) -> (f64, f64) {
        (-self.h2, self.h2)
    }

    pub fn t3_interval(&self) -> (f64, f64) {
        (-self.h3, self.h3)
    }

    pub fn contains(&self, t: ChartPoint) -> bool {
        let in1 = self
            .t1_intervals()
            .iter()
            .any(|&(lo, hi)| lo <= t.t1 && t.t1 <= hi);
        in1 && t.t2.abs() <= self.h2 && t.t3.abs() <= self.h3
    }

    /// Lebesgue volume in chart coordinates.
    pub fn volume(&self) -> f64 {
        let len1: f64 = self.t1_intervals().iter().map(|(lo, hi)| hi - lo).sum();
        len1 * 2.0 * self.h2 * 2.0 * self.h3
    }

    pub fn half_widths(&self) -> [f64; 3] {
        [self.h1, self.h2, self.h3]
    }
}

/// Build the box pair (S, S′) for a family at scale δ with small constant a.
///
/// Requires 0 < δ < 1 with 2δ ≤ 1 (the S′ outer slab must stay in the unit
/// chart range where the kernel bounds hold) and 0 < a ≤ 1/12.
pub fn make_boxes(
    family: BoxFamily,
    delta: f64,
    a: f64,
    m: Option<f64>,
) -> Result<(ParamBox, ParamBox)> {
    if !(delta.is_finite() && 0.0 < delta && delta < 1.0) {
        return Err(Error::InvalidBox(format!("delta = {delta} must lie in (0, 1)")));
    }
    if !(a.is_finite() && 0.0 < a && a <= 1.0 / 12.0) {
        return Err(Error::InvalidBox(format!("a = {a} must lie in (0, 1/12]")));
    }
    if 2.0 * delta > 0.5 + 0.5 {
        return Err(Error::InvalidBox(format!(
            "delta = {delta} violates the delta-smallness regime (need 2*delta <= 1)"
        )));
    }
    let (h2, h3) = match family {
        BoxFamily::Quad => (0.5, a * delta * delta),
        BoxFamily::Power => {
            let m = m.ok_or_else(|| Error::InvalidBox("power boxes require m".into()))?;
            if !(1.0 < m && m < 2.0) {
                return Err(Error::InvalidBox(format!("m = {m} must lie in (1, 2)")));
            }
            (delta.powf(2.0 - m), a * delta.powf(m))
        }
    };
    let h1 = a * delta * delta;
    if h1 >= delta {
        return Err(Error::InvalidBox(format!(
            "boxes overlap: a*delta^2 = {h1} >= delta = {delta}"
        )));
    }
    let mk = |role| ParamBox {
        family,
        role,
        delta,
        a,
        m,
        h1,
        h2,
        h3,
    };
    Ok((mk(BoxRole::S), mk(BoxRole::Sprime)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::rho;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lift_model_examples() {
        let p = lift_model(&DomainSpec::ModelQuad, ChartPoint::new(0.1, 0.2, 0.3)).unwrap();
        assert_abs_diff_eq!(p.z1.re, 0.1);
        assert_abs_diff_eq!(p.z1.im, 0.2);
        assert_abs_diff_eq!(p.z2.re, 0.3);
        assert_abs_diff_eq!(p.z2.im, 0.005);

        let o = lift_model(&DomainSpec::ModelQuad, ChartPoint::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(o.reals(), [0.0; 4]);

        let mp = DomainSpec::model_power(1.5).unwrap();
        let q = lift_model(&mp, ChartPoint::new(0.1, 0.0, 0.0)).unwrap();
        assert_abs_diff_eq!(q.z2.im, 0.5 * 0.1f64.powf(1.5), epsilon = 1e-16);
        assert_abs_diff_eq!(q.z2.im, 0.0158114, epsilon = 1e-7);

        assert!(lift_model(&DomainSpec::BoundedQuad, ChartPoint::new(0.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn lift_scaled_examples() {
        let sq = DomainSpec::scaled_quad(0.1).unwrap();
        let p = lift_scaled(&sq, ChartPoint::new(1.0, 0.0, 0.0)).unwrap();
        let hand = (1.0 - (1.0f64 - 0.01).sqrt()) / 0.01;
        assert_abs_diff_eq!(p.z2.im, hand, epsilon = 1e-14);
        assert_abs_diff_eq!(p.z2.im, 0.501256, epsilon = 1e-6);
        assert!(rho(&sq, p).abs() < 1e-12);

        // model limit as eps -> 0
        let tiny = DomainSpec::scaled_quad(1e-8).unwrap();
        let q = lift_scaled(&tiny, ChartPoint::new(1.0, 0.0, 0.0)).unwrap();
        assert!((q.z2.im - 0.5).abs() < 1e-12);

        let o = lift_scaled(&sq, ChartPoint::new(0.0, 0.0, 0.0)).unwrap();
        assert_eq!(o.reals(), [0.0; 4]);

        // point outside chart range: discriminant negative
        let big = DomainSpec::scaled_quad(2.0).unwrap();
        assert!(lift_scaled(&big, ChartPoint::new(1.0, 0.0, 0.0)).is_err());
    }

    #[test]
    fn atlas_examples() {
        let charts = atlas_bounded(&DomainSpec::BoundedQuad).unwrap();
        assert_eq!(charts.len(), 2);
        let orig = ChartPoint::new(0.0, 0.0, 0.0);
        assert_abs_diff_eq!(charts[0].height(orig).unwrap(), 0.0);
        assert_abs_diff_eq!(charts[1].height(orig).unwrap(), 2.0);
        assert!(atlas_bounded(&DomainSpec::ModelQuad).is_err());
    }

    #[test]
    fn chart_points_lie_on_boundary() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let specs: Vec<(DomainSpec, ChartSide)> = vec![
            (DomainSpec::ModelQuad, ChartSide::Model),
            (DomainSpec::model_power(1.5).unwrap(), ChartSide::Model),
            (DomainSpec::scaled_quad(0.2).unwrap(), ChartSide::Model),
            (DomainSpec::scaled_power(1.5, 0.2).unwrap(), ChartSide::Model),
            (DomainSpec::BoundedQuad, ChartSide::Lower),
            (DomainSpec::BoundedQuad, ChartSide::Upper),
            (DomainSpec::bounded_power(1.5).unwrap(), ChartSide::Lower),
            (DomainSpec::bounded_power(1.5).unwrap(), ChartSide::Upper),
        ];
        for (spec, side) in specs {
            let chart = Chart::new(spec, side).unwrap();
            let mut n = 0;
            while n < 10_000 {
                let t = ChartPoint::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                );
                if matches!(side, ChartSide::Lower | ChartSide::Upper) && chart.base(t) >= 0.999 {
                    continue;
                }
                n += 1;
                let p = chart.embed(t).unwrap();
                assert!(
                    rho(&spec, p).abs() < 1e-10,
                    "rho = {} off zero for {spec:?} {side:?} at {t:?}",
                    rho(&spec, p)
                );
            }
        }
    }

    /// Height gradient against central finite differences.
    #[test]
    fn height_grad_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let charts = [
            Chart::model(DomainSpec::ModelQuad).unwrap(),
            Chart::model(DomainSpec::model_power(1.5).unwrap()).unwrap(),
            Chart::model(DomainSpec::scaled_quad(0.2).unwrap()).unwrap(),
            Chart::model(DomainSpec::scaled_power(1.5, 0.2).unwrap()).unwrap(),
            Chart::new(DomainSpec::BoundedQuad, ChartSide::Lower).unwrap(),
            Chart::new(DomainSpec::BoundedQuad, ChartSide::Upper).unwrap(),
            Chart::new(DomainSpec::bounded_power(1.5).unwrap(), ChartSide::Lower).unwrap(),
        ];
        let h = 1e-6;
        for chart in charts {
            for _ in 0..300 {
                let mut t1: f64 = rng.gen_range(-0.6..0.6);
                if chart.spec.is_power() {
                    t1 = t1.signum() * (0.05 + t1.abs() * 0.5);
                }
                let t = ChartPoint::new(t1, rng.gen_range(-0.6..0.6), rng.gen_range(-0.6..0.6));
                if matches!(chart.side, ChartSide::Lower | ChartSide::Upper)
                    && chart.base(t) > 0.9
                {
                    continue;
                }
                let g = chart.height_grad(t).unwrap();
                for i in 0..3 {
                    let mut tp = t.array();
                    let mut tm = t.array();
                    tp[i] += h;
                    tm[i] -= h;
                    let fp = chart.height(ChartPoint::new(tp[0], tp[1], tp[2])).unwrap();
                    let fm = chart.height(ChartPoint::new(tm[0], tm[1], tm[2])).unwrap();
                    let fd = (fp - fm) / (2.0 * h);
                    assert!((g[i] - fd).abs() < 1e-6, "{chart:?} axis {i} at {t:?}");
                }
            }
        }
    }

    /// Φ_ε order: the scaled height tends to the model height at rate ε²
    /// (quad) and ε^{min(m, 2−m)} (power), checked by halving ε.
    #[test]
    fn scaled_height_perturbation_order() {
        let grid: Vec<ChartPoint> = {
            let vals = [-1.0, -0.5, 0.0, 0.5, 1.0];
            let mut g = Vec::new();
            for &a in &vals {
                for &b in &vals {
                    for &c in &vals {
                        g.push(ChartPoint::new(a, b, c));
                    }
                }
            }
            g
        };
        let max_dev = |spec: DomainSpec| -> f64 {
            let chart = Chart::model(spec).unwrap();
            let model = Chart::model(spec.model()).unwrap();
            grid.iter()
                .map(|&t| (chart.height(t).unwrap() - model.height(t).unwrap()).abs())
                .fold(0.0, f64::max)
        };
        // quad: ratio of maxima ~ 4 per eps halving
        let d1 = max_dev(DomainSpec::scaled_quad(0.1).unwrap());
        let d2 = max_dev(DomainSpec::scaled_quad(0.05).unwrap());
        let d3 = max_dev(DomainSpec::scaled_quad(0.025).unwrap());
        assert!((d1 / d2 - 4.0).abs() < 0.2, "ratio {}", d1 / d2);
        assert!((d2 / d3 - 4.0).abs() < 0.2, "ratio {}", d2 / d3);
        // power m = 1.5: ratio ~ 2^{0.5}; subleading corrections are O(eps),
        // so check at smaller eps than the quad family
        let m = 1.5;
        let p1 = max_dev(DomainSpec::scaled_power(m, 0.04).unwrap());
        let p2 = max_dev(DomainSpec::scaled_power(m, 0.02).unwrap());
        let p3 = max_dev(DomainSpec::scaled_power(m, 0.01).unwrap());
        let tgt = 2f64.powf((2.0 - m).min(m));
        assert!((p1 / p2 - tgt).abs() < 0.08, "ratio {}", p1 / p2);
        assert!((p2 / p3 - tgt).abs() < 0.08, "ratio {}", p2 / p3);
    }

    #[test]
    fn make_boxes_examples() {
        let (s, sp) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        assert_abs_diff_eq!(s.h1, 8.3333e-4, epsilon = 1e-8);
        assert_abs_diff_eq!(s.h2, 0.5);
        assert_abs_diff_eq!(s.h3, 8.3333e-4, epsilon = 1e-8);
        assert_eq!(sp.t1_intervals(), vec![(-0.2, -0.1), (0.1, 0.2)]);

        let (ps, _) = make_boxes(BoxFamily::Power, 0.1, 1.0 / 12.0, Some(1.5)).unwrap();
        assert_abs_diff_eq!(ps.h1, 8.3333e-4, epsilon = 1e-8);
        assert_abs_diff_eq!(ps.h2, 0.316228, epsilon = 1e-6);
        assert_abs_diff_eq!(ps.h3, 2.6352e-3, epsilon = 1e-7);

        assert!(make_boxes(BoxFamily::Quad, 0.9, 1.0 / 12.0, None).is_err());
        assert!(make_boxes(BoxFamily::Quad, 0.1, 0.2, None).is_err());
        assert!(make_boxes(BoxFamily::Power, 0.1, 1.0 / 12.0, None).is_err());
    }

    #[test]
    fn boxes_disjoint_across_sweep() {
        for &d in &[0.4, 0.2, 0.1, 0.05, 0.025, 0.0125] {
            for (fam, m) in [(BoxFamily::Quad, None), (BoxFamily::Power, Some(1.5))] {
                let (s, sp) = make_boxes(fam, d, 1.0 / 12.0, m).unwrap();
                // S ∩ S' = ∅: S's t1 range ends strictly before S' begins
                assert!(s.h1 < d);
                assert!(!sp.contains(ChartPoint::new(0.0, 0.0, 0.0)));
                assert!(s.contains(ChartPoint::new(0.0, 0.0, 0.0)));
                assert!(!s.contains(ChartPoint::new(1.5 * d, 0.0, 0.0)));
                assert!(sp.contains(ChartPoint::new(1.5 * d, 0.0, 0.0)));
            }
        }
    }
}
