//! Evaluation of the Cauchy-Leray transform C(f)(z) with the n = 2 kernel
//! Δ(w,z)^{-2}, against any catalog measure; the scaled operators C_ε; L^p
//! norms over boxes; and the star-shaped radial-angular grid that integrates
//! over the full bounded boundaries.
//!
//! Every evaluation tracks the minimum sampled |Δ| and refuses results when
//! the kernel comes within 1e-12 of its singularity.

use crate::boundary::{Chart, ChartPoint, ChartSide, ParamBox};
use crate::geometry::{delta, rho, CPoint2, DomainSpec, Family};
use crate::measures::{self, leray_levi_density, MeasureKind, SingularAxisScheme};
use crate::quadrature::{pairwise_sum, pairwise_sum_f64, QuadRule, Segment};
use crate::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;

/// Kernel singularity guard threshold on |Δ|.
pub const SINGULAR_GUARD: f64 = 1e-12;

/// Identifiers of the lifted holomorphic test polynomials.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PolyId {
    One,
    Z1,
    Z2,
    Z1Z2,
    Z1Sq,
}

impl PolyId {
    pub const ALL: [PolyId; 5] = [PolyId::One, PolyId::Z1, PolyId::Z2, PolyId::Z1Z2, PolyId::Z1Sq];

    pub fn eval(&self, p: CPoint2) -> Complex64 {
        match self {
            PolyId::One => Complex64::new(1.0, 0.0),
            PolyId::Z1 => p.z1,
            PolyId::Z2 => p.z2,
            PolyId::Z1Z2 => p.z1 * p.z2,
            PolyId::Z1Sq => p.z1 * p.z1,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            PolyId::One => "1",
            PolyId::Z1 => "z1",
            PolyId::Z2 => "z2",
            PolyId::Z1Z2 => "z1*z2",
            PolyId::Z1Sq => "z1^2",
        }
    }
}

/// Boundary data fed to the transform.
pub enum BoundaryFunction<'a> {
    /// characteristic function of a chart box
    IndicatorBox(&'a ParamBox),
    /// restriction of a holomorphic polynomial to the full boundary
    LiftedHolomorphic(PolyId),
    /// chart-supported custom function
    Custom {
        support: &'a ParamBox,
        f: &'a (dyn Fn(ChartPoint) -> Complex64 + Sync),
    },
}

/// Quadrature configuration for transform evaluations.
#[derive(Debug, Clone, Copy)]
pub struct TransformRule {
    /// tensor orders for box integrals
    pub inner: QuadRule,
    /// per-axis order of the outer z-integration on S′
    pub outer_order: usize,
    /// treatment of the |t₁|^γ measure axis on power families
    pub singular: SingularAxisScheme,
    /// per-cell order on the singular axis
    pub singular_order: usize,
    /// bounded-boundary grid parameters
    pub atlas: AtlasConfig,
}

impl Default for TransformRule {
    fn default() -> Self {
        Self {
            inner: QuadRule::default(),
            outer_order: 8,
            singular: SingularAxisScheme::default(),
            singular_order: 12,
            atlas: AtlasConfig::default(),
        }
    }
}

/// Star-shaped grid parameters for the bounded boundaries.
#[derive(Debug, Clone, Copy)]
pub struct AtlasConfig {
    /// equator exclusion band: the base region is cut at s ≤ 1 − eta
    pub eta: f64,
    /// dyadic radial levels toward the rim
    pub radial_levels: usize,
    /// Gauss order per radial cell
    pub radial_order: usize,
    /// Gauss order per θ panel (two panels, split at θ = π/2)
    pub n_theta: usize,
    /// φ points (uniform midpoints on quad; per quarter-panel order on power)
    pub n_phi: usize,
    /// clustering exponent of the power-family angular substitution
    pub subst_q: f64,
}

impl Default for AtlasConfig {
    fn default() -> Self {
        Self {
            eta: 1e-3,
            radial_levels: 16,
            radial_order: 8,
            n_theta: 24,
            n_phi: 32,
            subst_q: 4.0,
        }
    }
}

/// Precomputed integration nodes over a full bounded boundary (both sheets,
/// equator band excluded): boundary points with packaged Leray-Levi weights.
pub struct BoundedGrid {
    /// bounded spec whose boundary the points lie on
    pub spec: DomainSpec,
    /// (boundary point, λ-weight) per node; the weight already contains the
    /// density, the star-map jacobian and the quadrature weight
    pub nodes: Vec<(CPoint2, f64)>,
    /// crude upper estimate of the λ-mass of the excluded equator band
    pub excluded_band_estimate: f64,
}

struct Direction {
    w: [f64; 3],
    weight: f64, // includes sinθ and both angular weights
}

/// Angular directions: Gauss in θ split at π/2, φ uniform midpoints (quad) or
/// power-substituted quarter panels clustering at the singular plane t₁ = 0
/// (power; θ likewise clusters at the poles, which lie in that plane).
fn directions(power: bool, cfg: &AtlasConfig) -> Result<Vec<Direction>> {
    use std::f64::consts::PI;
    let g = crate::quadrature::gauss_rule(cfg.n_theta)?;
    let q = cfg.subst_q;
    let mut thetas: Vec<(f64, f64)> = Vec::new();
    if power {
        // θ = (π/2) u^q from each pole, u ∈ (0, 1]
        for (&x, &wx) in g.nodes.iter().zip(g.weights.iter()) {
            let u = 0.5 * (x + 1.0);
            let wu = 0.5 * wx;
            let d = 0.5 * PI * u.powf(q);
            let wd = 0.5 * PI * q * u.powf(q - 1.0) * wu;
            thetas.push((d, wd));
            thetas.push((PI - d, wd));
        }
    } else {
        for (a, b) in [(0.0, 0.5 * PI), (0.5 * PI, PI)] {
            let c = 0.5 * (b - a);
            let m = 0.5 * (b + a);
            for (&x, &wx) in g.nodes.iter().zip(g.weights.iter()) {
                thetas.push((m + c * x, c * wx));
            }
        }
    }
    let mut phis: Vec<(f64, f64)> = Vec::new();
    if power {
        let gp = crate::quadrature::gauss_rule(cfg.n_phi)?;
        for center in [0.5 * PI, 1.5 * PI] {
            for side in [-1.0, 1.0] {
                for (&x, &wx) in gp.nodes.iter().zip(gp.weights.iter()) {
                    let u = 0.5 * (x + 1.0);
                    let wu = 0.5 * wx;
                    let d = 0.5 * PI * u.powf(q);
                    let wd = 0.5 * PI * q * u.powf(q - 1.0) * wu;
                    phis.push((center + side * d, wd));
                }
            }
        }
    } else {
        let n = cfg.n_phi;
        for j in 0..n {
            phis.push(((j as f64 + 0.5) * 2.0 * PI / n as f64, 2.0 * PI / n as f64));
        }
    }
    let mut dirs = Vec::with_capacity(thetas.len() * phis.len());
    for &(th, wt) in &thetas {
        let (st, ct) = th.sin_cos();
        for &(ph, wp) in &phis {
            let (sp, cp) = ph.sin_cos();
            dirs.push(Direction {
                w: [st * cp, st * sp, ct],
                weight: st * wt * wp,
            });
        }
    }
    Ok(dirs)
}

/// Radial nodes on [0, 1]: a substituted base cell [0, ½] (r = ½v², taming
/// the fractional r^m radial factor of the power densities) and dyadic cells
/// toward the rim where the chart gradient steepens.
fn radial_nodes(cfg: &AtlasConfig) -> Result<Vec<(f64, f64)>> {
    let g = crate::quadrature::gauss_rule(cfg.radial_order)?;
    let mut out = Vec::new();
    for (&x, &wx) in g.nodes.iter().zip(g.weights.iter()) {
        let v = 0.5 * (x + 1.0);
        let wv = 0.5 * wx;
        out.push((0.5 * v * v, wv * v)); // dr = v dv
    }
    let lmax = cfg.radial_levels;
    for l in 1..=lmax {
        let lo = 1.0 - 0.5f64.powi(l as i32);
        let hi = if l == lmax { 1.0 } else { 1.0 - 0.5f64.powi(l as i32 + 1) };
        let c = 0.5 * (hi - lo);
        let m = 0.5 * (hi + lo);
        for (&x, &wx) in g.nodes.iter().zip(g.weights.iter()) {
            out.push((m + c * x, c * wx));
        }
    }
    Ok(out)
}

/// Rim radius along direction ω: solves s(diag(scale)·rω) = 1 − η with s the
/// bounded base function (scale is the chart dilation; identity for bD).
fn rim_radius(spec: &DomainSpec, scale: [f64; 3], w: [f64; 3], eta: f64) -> f64 {
    let tgt = 1.0 - eta;
    match spec {
        DomainSpec::BoundedQuad => {
            let a = (scale[0] * w[0]).powi(2) + (scale[2] * w[2]).powi(2);
            let b = (scale[1] * w[1]).powi(4);
            if b < 1e-280 {
                (tgt / a).sqrt()
            } else {
                (2.0 * tgt / (a + (a * a + 4.0 * b * tgt).sqrt())).sqrt()
            }
        }
        DomainSpec::BoundedPower { m } => {
            let a = (scale[0] * w[0]).abs().powf(*m);
            let b = (scale[1] * w[1]).powi(2) + (scale[2] * w[2]).powi(2);
            // A r^m + B r² = tgt, increasing in r: safeguarded Newton from an
            // upper bracket
            let mut hi = f64::INFINITY;
            if a > 0.0 {
                hi = hi.min((tgt / a).powf(1.0 / m));
            }
            if b > 0.0 {
                hi = hi.min((tgt / b).sqrt());
            }
            let mut r = hi;
            for _ in 0..60 {
                let f = a * r.powf(*m) + b * r * r - tgt;
                let df = m * a * r.powf(m - 1.0) + 2.0 * b * r;
                let step = f / df;
                r -= step;
                if step.abs() < 1e-15 * r {
                    break;
                }
            }
            r
        }
        _ => unreachable!("rim_radius is for bounded specs"),
    }
}

/// Shared builder: integrates over the base region {s(diag(scale)·x) ≤ 1−η}
/// in the x-coordinates, storing the bD point embed(diag(scale)·x) and the
/// weight density_prefactor · Λ(diag(scale)·x) · jacobian.
fn build_grid(
    bounded: &DomainSpec,
    scale: [f64; 3],
    density_prefactor: f64,
    cfg: &AtlasConfig,
) -> Result<BoundedGrid> {
    let power = bounded.is_power();
    let dirs = directions(power, cfg)?;
    let radial = radial_nodes(cfg)?;
    let charts = [
        Chart::new(*bounded, ChartSide::Lower)?,
        Chart::new(*bounded, ChartSide::Upper)?,
    ];
    let rims: Vec<f64> = dirs
        .iter()
        .map(|d| rim_radius(bounded, scale, d.w, cfg.eta))
        .collect();

    let cells: Vec<(usize, usize)> = (0..charts.len())
        .flat_map(|ci| (0..radial.len()).map(move |ri| (ci, ri)))
        .collect();
    let chunks: Vec<Result<Vec<(CPoint2, f64)>>> = cells
        .par_iter()
        .map(|&(ci, ri)| {
            let chart = &charts[ci];
            let (r, wr) = radial[ri];
            let mut out = Vec::with_capacity(dirs.len());
            for (d, &rim) in dirs.iter().zip(rims.iter()) {
                let t = ChartPoint::new(
                    scale[0] * r * rim * d.w[0],
                    scale[1] * r * rim * d.w[1],
                    scale[2] * r * rim * d.w[2],
                );
                let p = chart.embed(t)?;
                let lam = leray_levi_density(bounded, chart, t)?;
                let jac = r * r * rim * rim * rim;
                out.push((p, density_prefactor * lam * jac * d.weight * wr));
            }
            Ok(out)
        })
        .collect();
    let mut nodes = Vec::with_capacity(cells.len() * dirs.len());
    for c in chunks {
        nodes.extend(c?);
    }
    // crude band estimate: the density grows like (1−s)^{-1/2} into the band,
    // whose λ-mass is then about 2·density(rim)·η/|ds/dr| per unit rim area
    let band: f64 = {
        let vals: Vec<f64> = dirs
            .iter()
            .zip(rims.iter())
            .map(|(d, &rim)| {
                let r = 1.0 - 1e-9;
                let t = ChartPoint::new(
                    scale[0] * r * rim * d.w[0],
                    scale[1] * r * rim * d.w[1],
                    scale[2] * r * rim * d.w[2],
                );
                let lam = leray_levi_density(bounded, &charts[0], t).unwrap_or(0.0);
                let dsdr = 2.0 * (1.0 - cfg.eta) / rim;
                2.0 * lam * cfg.eta / dsdr * rim * rim * rim * d.weight
            })
            .collect();
        2.0 * density_prefactor * pairwise_sum_f64(&vals)
    };
    Ok(BoundedGrid {
        spec: *bounded,
        nodes,
        excluded_band_estimate: band,
    })
}

/// Integration grid over the full boundary of a bounded domain with
/// Leray-Levi weights.
pub fn bounded_grid(spec: &DomainSpec, cfg: &AtlasConfig) -> Result<BoundedGrid> {
    match spec.family() {
        Family::BoundedQuad | Family::BoundedPower => build_grid(spec, [1.0; 3], 1.0, cfg),
        f => Err(Error::InvalidSpec(format!("bounded_grid on family {f:?}"))),
    }
}

/// Integration grid over bD_ε with the transported measure λ_ε. Nodes are
/// stored through their images τ_ε(·) on bD, which is what the isometry and
/// the scaled norms consume; the weight carries the chart density
/// Λ_ε(x) = [ε^{2−m}] Λ(εx₁, εx₂, ε^κ x₃) times the star-map jacobian in x.
pub fn scaled_grid(spec: &DomainSpec, cfg: &AtlasConfig) -> Result<BoundedGrid> {
    let eps = spec
        .eps()
        .ok_or_else(|| Error::InvalidSpec("scaled_grid requires a scaled spec".into()))?;
    let bounded = spec.bounded();
    // the star map runs over the stretched egg base of bD_ε, so the node
    // layout is independent of the bD grid the isometry compares against
    let scale = [eps, eps, eps.powf(spec.kappa())];
    let prefactor = match spec.family() {
        Family::ScaledQuad => 1.0,
        Family::ScaledPower => eps.powf(2.0 - spec.m().unwrap()),
        _ => unreachable!(),
    };
    build_grid(&bounded, scale, prefactor, cfg)
}

/// λ_ε-weighted p-th power sum over a grid: Σ w · |F(p)|^p.
pub fn grid_norm_p(grid: &BoundedGrid, f: &(dyn Fn(CPoint2) -> Complex64 + Sync), p: f64) -> f64 {
    let vals: Vec<f64> = grid
        .nodes
        .par_iter()
        .map(|&(pt, w)| w * f(pt).norm().powf(p))
        .collect();
    pairwise_sum_f64(&vals)
}

/// Transform over a bounded grid: Σ w · Δ(p, z)^{-2} F(p), with the kernel
/// singularity guard.
pub fn grid_transform(
    grid: &BoundedGrid,
    f: &(dyn Fn(CPoint2) -> Complex64 + Sync),
    z: CPoint2,
) -> Result<Complex64> {
    let spec = grid.spec;
    let vals: Vec<(Complex64, f64)> = grid
        .nodes
        .par_iter()
        .map(|&(pt, w)| {
            let d = delta(&spec, pt, z);
            (w * f(pt) * d.powi(-2), d.norm())
        })
        .collect();
    let min_d = vals.iter().map(|v| v.1).fold(f64::INFINITY, f64::min);
    if min_d < SINGULAR_GUARD {
        return Err(Error::KernelSingular(min_d));
    }
    let terms: Vec<Complex64> = vals.iter().map(|v| v.0).collect();
    Ok(pairwise_sum(&terms))
}

/// Inner box axes for a measure integral on the chart of `spec`.
fn box_axes(
    pbox: &ParamBox,
    spec: &DomainSpec,
    kind: MeasureKind,
    rule: &TransformRule,
) -> Result<[Vec<Segment>; 3]> {
    let gamma = kind.singular_exponent(spec);
    let ax1 = if gamma == 0.0 {
        pbox.t1_intervals()
            .iter()
            .map(|&(lo, hi)| Segment::plain(lo, hi, rule.inner.orders[0]))
            .collect::<Result<Vec<_>>>()?
    } else {
        measures::t1_segments(
            &pbox.t1_intervals(),
            gamma,
            rule.singular_order,
            rule.singular,
        )?
    };
    let (l2, h2) = pbox.t2_interval();
    let (l3, h3) = pbox.t3_interval();
    Ok([
        ax1,
        vec![Segment::plain(l2, h2, rule.inner.orders[1])?],
        vec![Segment::plain(l3, h3, rule.inner.orders[2])?],
    ])
}

/// Box-mode transform core: ∫_box Δ(w, z)^{-2} g(t) dμ(t) on a graph chart,
/// tracking min |Δ|.
fn box_transform(
    spec: &DomainSpec,
    chart: &Chart,
    axes: &[Vec<Segment>; 3],
    g: &(dyn Fn(ChartPoint) -> Complex64 + Sync),
    kind: MeasureKind,
    z: CPoint2,
) -> Result<Complex64> {
    use std::cell::Cell;
    let min_d = Cell::new(f64::INFINITY);
    let f = |t: ChartPoint| -> Complex64 {
        let w = match chart.embed(t) {
            Ok(w) => w,
            Err(_) => return Complex64::new(f64::NAN, f64::NAN),
        };
        let den = match measures::density(spec, chart, t, kind) {
            Ok(d) => d,
            Err(_) => return Complex64::new(f64::NAN, f64::NAN),
        };
        let d = delta(spec, w, z);
        if d.norm() < min_d.get() {
            min_d.set(d.norm());
        }
        if d.norm() < SINGULAR_GUARD {
            // placeholder keeps the sweep finite; the guard below rejects it
            return Complex64::new(0.0, 0.0);
        }
        g(t) * den * d.powi(-2)
    };
    let v = crate::quadrature::tensor3(&axes[0], &axes[1], &axes[2], &f)?;
    if min_d.get() < SINGULAR_GUARD {
        return Err(Error::KernelSingular(min_d.get()));
    }
    Ok(v)
}

fn chart_for(spec: &DomainSpec) -> Result<Chart> {
    match spec.family() {
        Family::BoundedQuad | Family::BoundedPower => Chart::new(*spec, ChartSide::Lower),
        _ => Chart::model(*spec),
    }
}

/// The Cauchy-Leray transform C(f)(z) = ∫ Δ(w,z)^{-2} f(w) dμ(w).
///
/// Box-supported f integrates over its support on the graph chart of `spec`
/// (the lower chart, for bounded specs); `LiftedHolomorphic` f on a bounded
/// spec integrates over the full two-sheet atlas. When z is on the boundary
/// it must lie outside the support of f.
pub fn cauchy_leray(
    spec: &DomainSpec,
    f: &BoundaryFunction,
    z: CPoint2,
    kind: MeasureKind,
    rule: &TransformRule,
) -> Result<Complex64> {
    kind.validate(spec)?;
    match f {
        BoundaryFunction::LiftedHolomorphic(id) => {
            if !matches!(spec.family(), Family::BoundedQuad | Family::BoundedPower) {
                return Err(Error::InvalidSpec(
                    "global transforms need a bounded spec".into(),
                ));
            }
            if !matches!(kind, MeasureKind::LerayLevi) {
                return Err(Error::InvalidParam(
                    "the reproducing transform uses the Leray-Levi measure".into(),
                ));
            }
            let grid = bounded_grid(spec, &rule.atlas)?;
            grid_transform(&grid, &|p| id.eval(p), z)
        }
        BoundaryFunction::IndicatorBox(b) => {
            check_support(spec, b, z)?;
            if b.volume() == 0.0 {
                return Ok(Complex64::new(0.0, 0.0));
            }
            let chart = chart_for(spec)?;
            let axes = box_axes(b, spec, kind, rule)?;
            box_transform(spec, &chart, &axes, &|_| Complex64::new(1.0, 0.0), kind, z)
        }
        BoundaryFunction::Custom { support, f } => {
            check_support(spec, support, z)?;
            let chart = chart_for(spec)?;
            let axes = box_axes(support, spec, kind, rule)?;
            box_transform(spec, &chart, &axes, f, kind, z)
        }
    }
}

/// Reject boundary evaluation points inside the support box.
fn check_support(spec: &DomainSpec, b: &ParamBox, z: CPoint2) -> Result<()> {
    if rho(spec, z).abs() < 1e-9 {
        let t = ChartPoint::new(z.z1.re, z.z1.im, z.z2.re);
        if b.contains(t) {
            return Err(Error::SupportOverlap);
        }
    }
    Ok(())
}

/// (∫_box |g|^p dμ)^{1/p} on the graph chart of `spec`, p ∈ [1, ∞).
pub fn lp_norm(
    g: &(dyn Fn(ChartPoint) -> Complex64 + Sync),
    pbox: &ParamBox,
    p: f64,
    spec: &DomainSpec,
    kind: MeasureKind,
    rule: &TransformRule,
) -> Result<f64> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParam(format!("p = {p} must lie in [1, inf)")));
    }
    kind.validate(spec)?;
    let chart = chart_for(spec)?;
    let axes = box_axes(pbox, spec, kind, rule)?;
    let f = |t: ChartPoint| -> Complex64 {
        let den = match measures::density(spec, &chart, t, kind) {
            Ok(d) => d,
            Err(_) => return Complex64::new(f64::NAN, f64::NAN),
        };
        Complex64::new(g(t).norm().powf(p) * den, 0.0)
    };
    let v = crate::quadrature::tensor3(&axes[0], &axes[1], &axes[2], &f)?;
    Ok(v.re.powf(1.0 / p))
}

/// One blow-up measurement: the operator ratio and its ingredients at scale δ.
#[derive(Debug, Clone, Copy)]
pub struct BlowupPoint {
    pub delta: f64,
    /// R_p(δ) = ‖C(χ_S)‖_{L^p(S′, dμ_a)} / ‖χ_S‖_{L^p(dμ_a)}
    pub ratio: f64,
    pub lognorm_num: f64,
    pub lognorm_den: f64,
    /// min over the outer nodes of Re C(χ_S)(z)
    pub min_re: f64,
}

/// Outer z-nodes with weights on the S′ slabs.
fn outer_nodes(sprime: &ParamBox, order: usize) -> Result<Vec<(ChartPoint, f64)>> {
    let mut segs1 = Vec::new();
    for (lo, hi) in sprime.t1_intervals() {
        segs1.push(Segment::plain(lo, hi, order)?);
    }
    let (l2, h2) = sprime.t2_interval();
    let (l3, h3) = sprime.t3_interval();
    let s2 = Segment::plain(l2, h2, order)?;
    let s3 = Segment::plain(l3, h3, order)?;
    let mut out = Vec::new();
    for s1 in &segs1 {
        for (&t1, &w1) in s1.nodes.iter().zip(s1.weights.iter()) {
            for (&t2, &w2) in s2.nodes.iter().zip(s2.weights.iter()) {
                for (&t3, &w3) in s3.nodes.iter().zip(s3.weights.iter()) {
                    out.push((ChartPoint::new(t1, t2, t3), w1 * w2 * w3));
                }
            }
        }
    }
    Ok(out)
}

/// Blow-up ratios R_p(δ) for several norm measures μ_a at once; the transform
/// values, which do not depend on a, are computed once per outer node.
///
/// The operator itself always integrates against the Leray-Levi measure of
/// the spec; `a_list` selects the μ_a norms on both sides of the ratio.
pub fn blowup_points(
    spec: &DomainSpec,
    s: &ParamBox,
    sprime: &ParamBox,
    p: f64,
    a_list: &[f64],
    rule: &TransformRule,
) -> Result<Vec<BlowupPoint>> {
    if !(p.is_finite() && p >= 1.0) {
        return Err(Error::InvalidParam(format!("p = {p} must lie in [1, inf)")));
    }
    let chart = chart_for(spec)?;
    let op_kind = MeasureKind::LerayLevi;
    let axes = box_axes(s, spec, op_kind, rule)?;
    let outer = outer_nodes(sprime, rule.outer_order)?;
    let cvals: Vec<Result<Complex64>> = outer
        .par_iter()
        .map(|&(t, _)| {
            let z = chart.embed(t)?;
            box_transform(spec, &chart, &axes, &|_| Complex64::new(1.0, 0.0), op_kind, z)
        })
        .collect();
    let mut c = Vec::with_capacity(cvals.len());
    for v in cvals {
        c.push(v?);
    }
    let min_re = c.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);

    let mut out = Vec::new();
    for &a in a_list {
        let norm_kind = MeasureKind::MuA(a);
        norm_kind.validate(spec)?;
        let terms: Vec<f64> = outer
            .iter()
            .zip(c.iter())
            .map(|(&(t, w), cv)| {
                let den = measures::density(spec, &chart, t, norm_kind)?;
                Ok(w * cv.norm().powf(p) * den)
            })
            .collect::<Result<Vec<f64>>>()?;
        let num = pairwise_sum_f64(&terms).powf(1.0 / p);
        let den = measures::box_measure(s, spec, norm_kind, &rule.inner, rule.singular)?
            .powf(1.0 / p);
        out.push(BlowupPoint {
            delta: s.delta,
            ratio: num / den,
            lognorm_num: num.ln(),
            lognorm_den: den.ln(),
            min_re,
        });
    }
    Ok(out)
}

/// R_p(δ) against a single μ_a norm.
pub fn blowup_ratio(
    spec: &DomainSpec,
    s: &ParamBox,
    sprime: &ParamBox,
    p: f64,
    a_measure: f64,
    rule: &TransformRule,
) -> Result<BlowupPoint> {
    Ok(blowup_points(spec, s, sprime, p, &[a_measure], rule)?[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary::{lift_model, make_boxes, BoxFamily};
    use crate::measures::FOUR_PI_SQ;
    use approx::assert_abs_diff_eq;

    #[test]
    fn transform_empty_support_is_zero() {
        let (mut s, _) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        s.h1 = 0.0;
        let z = lift_model(&DomainSpec::ModelQuad, ChartPoint::new(0.15, 0.0, 0.0)).unwrap();
        let v = cauchy_leray(
            &DomainSpec::ModelQuad,
            &BoundaryFunction::IndicatorBox(&s),
            z,
            MeasureKind::LerayLevi,
            &TransformRule::default(),
        )
        .unwrap();
        assert_eq!(v, Complex64::new(0.0, 0.0));
    }

    /// Independent dense midpoint-Riemann oracle at 128³ for the transform of
    /// χ_S at z = lift(0.1, 0, 0), δ = 0.1.
    #[test]
    fn transform_matches_riemann_oracle() {
        let spec = DomainSpec::ModelQuad;
        let (s, _) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        let z = lift_model(&spec, ChartPoint::new(0.1, 0.0, 0.0)).unwrap();
        let v = cauchy_leray(
            &spec,
            &BoundaryFunction::IndicatorBox(&s),
            z,
            MeasureKind::LerayLevi,
            &TransformRule::default(),
        )
        .unwrap();
        assert!(v.re > 0.0);

        let n = 128;
        let (lo1, hi1) = s.t1_intervals()[0];
        let (lo2, hi2) = s.t2_interval();
        let (lo3, hi3) = s.t3_interval();
        let (d1, d2, d3) = (
            (hi1 - lo1) / n as f64,
            (hi2 - lo2) / n as f64,
            (hi3 - lo3) / n as f64,
        );
        let mut acc = Complex64::new(0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let t = ChartPoint::new(
                        lo1 + (i as f64 + 0.5) * d1,
                        lo2 + (j as f64 + 0.5) * d2,
                        lo3 + (k as f64 + 0.5) * d3,
                    );
                    let w = lift_model(&spec, t).unwrap();
                    acc += delta(&spec, w, z).powi(-2);
                }
            }
        }
        let oracle = acc * (d1 * d2 * d3 / FOUR_PI_SQ);
        assert!(
            (v - oracle).norm() <= 2e-4 * oracle.norm(),
            "gauss {v} vs riemann {oracle}"
        );
    }

    /// Far z: crude bound |C| ≤ λ(S) / min|Δ|² and near-constant-kernel value.
    #[test]
    fn transform_far_field_bound() {
        let spec = DomainSpec::ModelQuad;
        let (s, _) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        let z = lift_model(&spec, ChartPoint::new(10.0, 0.0, 0.0)).unwrap();
        let rule = TransformRule::default();
        let v = cauchy_leray(
            &spec,
            &BoundaryFunction::IndicatorBox(&s),
            z,
            MeasureKind::LerayLevi,
            &rule,
        )
        .unwrap();
        let lam = measures::box_measure(
            &s,
            &spec,
            MeasureKind::LerayLevi,
            &rule.inner,
            rule.singular,
        )
        .unwrap();
        // min |Δ| ≥ Re Δ = (u1-x1)²/2 ≥ (10 − aδ²)²/2
        let bound = lam / (0.5 * (10.0 - s.h1) * (10.0 - s.h1)).powi(2);
        assert!(v.norm() <= bound * 1.0001);
        let w0 = lift_model(&spec, ChartPoint::new(0.0, 0.0, 0.0)).unwrap();
        let approx_v = (lam * delta(&spec, w0, z).powi(-2)).norm();
        assert!((v.norm() - approx_v).abs() < 0.01 * approx_v);
    }

    #[test]
    fn transform_guards() {
        let spec = DomainSpec::ModelQuad;
        let (s, _) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        // z on the boundary inside the support: rejected
        let z_in = lift_model(&spec, ChartPoint::new(0.0, 0.1, 0.0)).unwrap();
        let err = cauchy_leray(
            &spec,
            &BoundaryFunction::IndicatorBox(&s),
            z_in,
            MeasureKind::LerayLevi,
            &TransformRule::default(),
        );
        assert!(matches!(err, Err(Error::SupportOverlap)));
        // z on the degenerate variety u1 = 0, u2 = x2: with odd axis orders a
        // node lands exactly on it and the sampled-|Δ| guard fires
        let z_var = lift_model(&spec, ChartPoint::new(0.0, 0.9, 0.0)).unwrap();
        let odd = TransformRule {
            inner: QuadRule::new(1, 8, 1),
            ..TransformRule::default()
        };
        let err = cauchy_leray(
            &spec,
            &BoundaryFunction::IndicatorBox(&s),
            z_var,
            MeasureKind::LerayLevi,
            &odd,
        );
        assert!(matches!(err, Err(Error::KernelSingular(_))), "{err:?}");
    }

    #[test]
    fn lp_norm_examples() {
        let spec = DomainSpec::ModelQuad;
        let (s, _) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        let rule = TransformRule::default();
        let one = |_: ChartPoint| Complex64::new(1.0, 0.0);
        let n2 = lp_norm(&one, &s, 2.0, &spec, MeasureKind::Sigma, &rule).unwrap();
        let sig = measures::box_measure(&s, &spec, MeasureKind::Sigma, &rule.inner, rule.singular)
            .unwrap();
        assert_abs_diff_eq!(n2, sig.sqrt(), epsilon = 1e-14);

        // homogeneity: |c|·μ(box)^{1/p}
        let c = Complex64::new(-2.5, 1.0);
        for &p in &[1.0, 2.0, 4.0] {
            let np = lp_norm(&|_| c, &s, p, &spec, MeasureKind::Sigma, &rule).unwrap();
            assert_abs_diff_eq!(np, c.norm() * sig.powf(1.0 / p), epsilon = 1e-12);
        }
        assert!(lp_norm(&one, &s, 0.5, &spec, MeasureKind::Sigma, &rule).is_err());
    }

    /// Lower bound chain: the L^p(S′) norm of the transform values dominates
    /// min Re C · σ(S′)^{1/p}.
    #[test]
    fn lp_norm_of_transform_values_dominates_positivity_bound() {
        let spec = DomainSpec::ModelQuad;
        let (s, sp) = make_boxes(BoxFamily::Quad, 0.1, 1.0 / 12.0, None).unwrap();
        let rule = TransformRule {
            inner: QuadRule::uniform(8),
            outer_order: 4,
            ..TransformRule::default()
        };
        let chart = Chart::model(spec).unwrap();
        let g = |t: ChartPoint| {
            let z = chart.embed(t).unwrap();
            cauchy_leray(
                &spec,
                &BoundaryFunction::IndicatorBox(&s),
                z,
                MeasureKind::LerayLevi,
                &rule,
            )
            .unwrap()
        };
        let pt = blowup_ratio(&spec, &s, &sp, 2.0, 0.0, &rule).unwrap();
        assert!(pt.min_re > 0.0);
        let sig = measures::box_measure(&sp, &spec, MeasureKind::Sigma, &rule.inner, rule.singular)
            .unwrap();
        for &p in &[1.0, 2.0] {
            let norm = lp_norm(&g, &sp, p, &spec, MeasureKind::Sigma, &rule).unwrap();
            assert!(
                norm >= pt.min_re * sig.powf(1.0 / p),
                "p = {p}: {norm} vs {}",
                pt.min_re * sig.powf(1.0 / p)
            );
        }
    }

    /// Kernel scaling identity: Δ_ε(w, z) = ε^{-κ} Δ(τ_ε w, τ_ε z).
    #[test]
    fn kernel_scaling_identity() {
        use rand::prelude::*;
        use rand_chacha::ChaCha8Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..200 {
            let eps = rng.gen_range(0.05..0.8);
            let w = CPoint2::from_reals(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let z = CPoint2::from_reals(
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-1.0..1.0),
            );
            let sq = DomainSpec::scaled_quad(eps).unwrap();
            let lhs = delta(&sq, w, z);
            let rhs = eps.powf(-2.0) * delta(&DomainSpec::BoundedQuad, sq.tau(w), sq.tau(z));
            assert!((lhs - rhs).norm() <= 1e-13 * lhs.norm().max(1.0));

            let m = 1.5;
            let sp = DomainSpec::scaled_power(m, eps).unwrap();
            let lhs = delta(&sp, w, z);
            let rhs =
                eps.powf(-m) * delta(&DomainSpec::bounded_power(m).unwrap(), sp.tau(w), sp.tau(z));
            assert!((lhs - rhs).norm() <= 1e-13 * lhs.norm().max(1.0));
        }
    }

    /// Blow-up ratio at p = 2 on the quad model: R·δ^{1/2} stable and the
    /// halving ratio near √2.
    #[test]
    fn blowup_ratio_quad_band() {
        let spec = DomainSpec::ModelQuad;
        let rule = TransformRule {
            inner: QuadRule::uniform(12),
            outer_order: 6,
            ..TransformRule::default()
        };
        let r_at = |d: f64| {
            let (s, sp) = make_boxes(BoxFamily::Quad, d, 1.0 / 12.0, None).unwrap();
            blowup_ratio(&spec, &s, &sp, 2.0, 0.0, &rule).unwrap()
        };
        let r1 = r_at(0.1);
        let r05 = r_at(0.05);
        let halving = r05.ratio / r1.ratio;
        assert!(
            (halving - 2f64.sqrt()).abs() < 0.15 * 2f64.sqrt(),
            "halving {halving}"
        );
        let band1 = r1.ratio * 0.1f64.sqrt();
        let band2 = r05.ratio * 0.05f64.sqrt();
        assert!((band1 / band2 - 1.0).abs() < 0.1, "{band1} vs {band2}");
        assert!(r1.min_re > 0.0);
    }

    /// Same halving law for the power family with σ norms (a = 0).
    #[test]
    fn blowup_ratio_power_band() {
        let m = 1.5;
        let spec = DomainSpec::model_power(m).unwrap();
        let rule = TransformRule {
            inner: QuadRule::uniform(12),
            outer_order: 5,
            singular_order: 10,
            ..TransformRule::default()
        };
        let r_at = |d: f64| {
            let (s, sp) = make_boxes(BoxFamily::Power, d, 1.0 / 48.0, Some(m)).unwrap();
            blowup_ratio(&spec, &s, &sp, 2.0, 0.0, &rule).unwrap()
        };
        let halving = r_at(0.05).ratio / r_at(0.1).ratio;
        assert!(
            (halving - 2f64.sqrt()).abs() < 0.2 * 2f64.sqrt(),
            "halving {halving}"
        );
    }

    /// Reproducing smoke test on a coarse atlas: C(1)(center) ≈ 1.
    #[test]
    fn reproducing_smoke() {
        let spec = DomainSpec::BoundedQuad;
        let rule = TransformRule {
            atlas: AtlasConfig {
                eta: 1e-5,
                radial_levels: 18,
                radial_order: 6,
                n_theta: 16,
                n_phi: 24,
                subst_q: 4.0,
            },
            ..TransformRule::default()
        };
        let z = CPoint2::from_reals(0.0, 0.0, 0.0, 1.0);
        let v = cauchy_leray(
            &spec,
            &BoundaryFunction::LiftedHolomorphic(PolyId::One),
            z,
            MeasureKind::LerayLevi,
            &rule,
        )
        .unwrap();
        assert!((v - Complex64::new(1.0, 0.0)).norm() < 5e-2, "C(1) = {v}");
    }
}
