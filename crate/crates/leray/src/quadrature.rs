//! Deterministic tensor-product Gauss rules, graded and Jacobi-weighted
//! schemes for the |t₁|^{m−2} density singularity, and box integration with
//! rule-pair error estimates.
//!
//! All reductions are fixed-order pairwise sums, so results do not depend on
//! thread count.

use crate::boundary::ChartPoint;
use crate::{Error, Result};
use num_complex::Complex64;
use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

pub const MAX_ORDER: usize = 64;

/// One-dimensional Gauss-Legendre rule on [−1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    pub order: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Legendre P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

fn compute_gauss(order: usize) -> GaussRule {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Newton from the Chebyshev-like initial guess, to full precision
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (_, dp) = legendre(n, x);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x.abs();
        nodes[n - 1 - i] = x.abs();
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, dp) = legendre(n, 0.0);
        weights[n / 2] = 2.0 / (dp * dp);
    }
    GaussRule { order, nodes, weights }
}

/// Gauss-Legendre nodes/weights on [−1, 1], cached per order.
pub fn gauss_rule(order: usize) -> Result<Arc<GaussRule>> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GaussRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut map = cache.lock().unwrap();
    Ok(map
        .entry(order)
        .or_insert_with(|| Arc::new(compute_gauss(order)))
        .clone())
}

/// Symmetric tridiagonal QL with implicit shifts; `z` accumulates the first
/// row of the eigenvector matrix (all that Golub-Welsch needs).
fn tql_first_row(d: &mut [f64], e: &mut [f64], z: &mut [f64]) {
    let n = d.len();
    if n == 1 {
        return;
    }
    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m < n - 1 {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            assert!(iter <= 50, "tql failed to converge");
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let mut s = 1.0;
            let mut c = 1.0;
            let mut p = 0.0;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                let f = z[i + 1];
                z[i + 1] = s * z[i] + c * f;
                z[i] = c * z[i] - s * f;
            }
            if r == 0.0 && i > l {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
}

/// Gauss-Jacobi rule for ∫₀¹ t^γ f(t) dt, γ > −1, by Golub-Welsch on the
/// monic Jacobi recurrence with α = 0, β = γ.
pub fn jacobi_rule(order: usize, gamma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::InvalidOrder(order));
    }
    if gamma <= -1.0 {
        return Err(Error::NonIntegrable(gamma));
    }
    let (a, b) = (0.0f64, gamma);
    let n = order;
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n];
    diag[0] = (b - a) / (a + b + 2.0);
    for k in 1..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        diag[k] = (b * b - a * a) / (s * (s + 2.0));
        let num = 4.0 * kf * (kf + a) * (kf + b) * (kf + a + b);
        let den = s * s * (s + 1.0) * (s - 1.0);
        off[k - 1] = (num / den).sqrt();
    }
    let mu0 = 2f64.powf(gamma + 1.0) / (gamma + 1.0); // ∫(1+x)^γ dx over [−1,1]
    let mut z = vec![0.0; n];
    z[0] = 1.0;
    tql_first_row(&mut diag, &mut off, &mut z);
    let mut pairs: Vec<(f64, f64)> = diag
        .iter()
        .zip(z.iter())
        .map(|(&x, &q)| (x, mu0 * q * q))
        .collect();
    pairs.sort_by(|p, q| p.0.partial_cmp(&q.0).unwrap());
    // map [−1,1] with weight (1+x)^γ onto [0,1] with weight t^γ
    let nodes = pairs.iter().map(|p| 0.5 * (p.0 + 1.0)).collect();
    let weights = pairs.iter().map(|p| p.1 * 0.5f64.powf(gamma + 1.0)).collect();
    Ok((nodes, weights))
}

/// Fixed-order pairwise sum; deterministic for a given slice order.
pub fn pairwise_sum(v: &[Complex64]) -> Complex64 {
    if v.len() <= 16 {
        let mut acc = Complex64::new(0.0, 0.0);
        for x in v {
            acc += x;
        }
        return acc;
    }
    let mid = v.len() / 2;
    pairwise_sum(&v[..mid]) + pairwise_sum(&v[mid..])
}

pub fn pairwise_sum_f64(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        return v.iter().sum();
    }
    let mid = v.len() / 2;
    pairwise_sum_f64(&v[..mid]) + pairwise_sum_f64(&v[mid..])
}

/// Analytic tail of a graded axis: the integrand carries a |t|^γ factor on
/// the uncovered sliver next to t = 0.
#[derive(Debug, Clone)]
struct Tail {
    gamma: f64,
    /// sliver length; the sliver is [0, h] (side = +1) or [−h, 0] (side = −1)
    h: f64,
    side: f64,
    /// indices of the innermost cell's nodes, used to fit the smooth factor
    fit: std::ops::Range<usize>,
}

/// Nodes and weights on one interval, Lebesgue semantics: Σ wᵢ f(tᵢ) ≈ ∫ f.
#[derive(Debug, Clone)]
pub struct Segment {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    tail: Option<Tail>,
}

impl Segment {
    /// Plain Gauss on [lo, hi].
    pub fn plain(lo: f64, hi: f64, order: usize) -> Result<Segment> {
        let g = gauss_rule(order)?;
        let c = 0.5 * (hi - lo);
        let m = 0.5 * (hi + lo);
        Ok(Segment {
            nodes: g.nodes.iter().map(|&x| m + c * x).collect(),
            weights: g.weights.iter().map(|&w| c * w).collect(),
            tail: None,
        })
    }

    /// Dyadically graded toward 0 on [0, c] (side = +1) or [−c, 0] (side = −1),
    /// with an analytic |t|^γ tail on the innermost sliver.
    pub fn graded_to_zero(c: f64, side: f64, levels: usize, order: usize, gamma: f64) -> Result<Segment> {
        if gamma <= -1.0 {
            return Err(Error::NonIntegrable(gamma));
        }
        assert!(levels >= 1 && c > 0.0);
        let g = gauss_rule(order)?;
        let mut nodes = Vec::with_capacity(levels * order);
        let mut weights = Vec::with_capacity(levels * order);
        let mut fit = 0..0;
        for l in 0..levels {
            let hi = c * 0.5f64.powi(l as i32);
            let lo = hi * 0.5;
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            let start = nodes.len();
            for (&x, &w) in g.nodes.iter().zip(g.weights.iter()) {
                nodes.push(side * (mid + half * x));
                weights.push(half * w);
            }
            if l + 1 == levels {
                fit = start..nodes.len();
            }
        }
        let h = c * 0.5f64.powi(levels as i32);
        Ok(Segment {
            nodes,
            weights,
            tail: Some(Tail { gamma, h, side, fit }),
        })
    }

    /// Jacobi-weighted nodes for ∫ over [0, c]·side of |t|^γ · (smooth);
    /// weights are pre-divided by |t|^γ so the caller passes the full
    /// integrand unchanged.
    pub fn jacobi_to_zero(c: f64, side: f64, order: usize, gamma: f64) -> Result<Segment> {
        let (n01, w01) = jacobi_rule(order, gamma)?;
        let scale = c.powf(gamma + 1.0);
        let nodes: Vec<f64> = n01.iter().map(|&t| side * c * t).collect();
        let weights = n01
            .iter()
            .zip(w01.iter())
            .map(|(&t, &w)| scale * w / (c * t).powf(gamma))
            .collect();
        Ok(Segment {
            nodes,
            weights,
            tail: None,
        })
    }

    /// Integrate a 1-d function over this segment (tail included).
    pub fn integrate<F: FnMut(f64) -> Complex64>(&self, mut f: F) -> Complex64 {
        let vals: Vec<Complex64> = self
            .nodes
            .iter()
            .zip(self.weights.iter())
            .map(|(&t, &w)| w * f(t))
            .collect();
        let mut total = pairwise_sum(&vals);
        if let Some(tail) = &self.tail {
            let mut pts: Vec<(f64, Complex64)> = Vec::with_capacity(tail.fit.len());
            for i in tail.fit.clone() {
                let t = self.nodes[i];
                pts.push((t, f(t) / t.abs().powf(tail.gamma)));
            }
            total += tail_value(tail, &pts);
        }
        total
    }
}

/// ∫ over the sliver of |t|^γ (s₀ + s₁ t) dt with (s₀, s₁) the least-squares
/// linear fit of the smooth factor at the innermost cell's nodes.
fn tail_value(tail: &Tail, pts: &[(f64, Complex64)]) -> Complex64 {
    let n = pts.len() as f64;
    let sx: f64 = pts.iter().map(|p| p.0).sum();
    let sxx: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sy: Complex64 = pts.iter().map(|p| p.1).sum();
    let sxy: Complex64 = pts.iter().map(|p| p.0 * p.1).sum();
    let det = n * sxx - sx * sx;
    let (s0, s1) = if det.abs() < 1e-300 {
        (sy / n, Complex64::new(0.0, 0.0))
    } else {
        ((sxx * sy - sx * sxy) / det, (n * sxy - sx * sy) / det)
    };
    let g = tail.gamma;
    let h = tail.h;
    s0 * h.powf(g + 1.0) / (g + 1.0) + tail.side * s1 * h.powf(g + 2.0) / (g + 2.0)
}

/// Tensor orders of a 3-axis box rule (Gauss-Legendre per axis).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadRule {
    pub orders: [usize; 3],
}

impl QuadRule {
    pub fn new(o1: usize, o2: usize, o3: usize) -> Self {
        Self { orders: [o1, o2, o3] }
    }

    pub fn uniform(o: usize) -> Self {
        Self { orders: [o, o, o] }
    }
}

impl Default for QuadRule {
    fn default() -> Self {
        QuadRule::uniform(16)
    }
}

/// Tensor integration over segment lists per axis. Axis 1 segments may carry
/// graded tails; axes 2 and 3 must be plain.
pub fn tensor3<F>(ax1: &[Segment], ax2: &[Segment], ax3: &[Segment], f: &F) -> Result<Complex64>
where
    F: Fn(ChartPoint) -> Complex64,
{
    let mut outer: Vec<Complex64> = Vec::new();
    for s3 in ax3 {
        for (&t3, &w3) in s3.nodes.iter().zip(s3.weights.iter()) {
            for s2 in ax2 {
                for (&t2, &w2) in s2.nodes.iter().zip(s2.weights.iter()) {
                    let mut bad = None;
                    let inner = {
                        let mut eval = |t1: f64| {
                            let v = f(ChartPoint::new(t1, t2, t3));
                            if !v.is_finite() {
                                bad = Some([t1, t2, t3]);
                            }
                            v
                        };
                        let vals: Vec<Complex64> =
                            ax1.iter().map(|s1| s1.integrate(&mut eval)).collect();
                        pairwise_sum(&vals)
                    };
                    if let Some(p) = bad {
                        return Err(Error::NonFiniteSample(p));
                    }
                    outer.push(inner * (w2 * w3));
                }
            }
        }
    }
    Ok(pairwise_sum(&outer))
}

fn plain_axes(bounds: &[(f64, f64); 3], orders: [usize; 3]) -> Result<[Vec<Segment>; 3]> {
    Ok([
        vec![Segment::plain(bounds[0].0, bounds[0].1, orders[0])?],
        vec![Segment::plain(bounds[1].0, bounds[1].1, orders[1])?],
        vec![Segment::plain(bounds[2].0, bounds[2].1, orders[2])?],
    ])
}

/// Tensor Gauss over an axis-aligned box, with an error estimate from the
/// comparison rule of order + 4 per axis.
pub fn integrate_box<F>(
    bounds: [(f64, f64); 3],
    f: &F,
    rule: &QuadRule,
) -> Result<(Complex64, f64)>
where
    F: Fn(ChartPoint) -> Complex64,
{
    let ax = plain_axes(&bounds, rule.orders)?;
    let v = tensor3(&ax[0], &ax[1], &ax[2], f)?;
    let hi_orders = [
        (rule.orders[0] + 4).min(MAX_ORDER),
        (rule.orders[1] + 4).min(MAX_ORDER),
        (rule.orders[2] + 4).min(MAX_ORDER),
    ];
    let axh = plain_axes(&bounds, hi_orders)?;
    let vh = tensor3(&axh[0], &axh[1], &axh[2], f)?;
    Ok((v, (v - vh).norm()))
}

/// Graded scheme for a box whose integrand carries a |t_axis|^γ factor.
#[derive(Debug, Clone, Copy)]
pub struct GradedScheme {
    /// singular axis id (0-based; the catalog singularity sits on axis 0)
    pub axis: usize,
    pub levels: usize,
    pub order: usize,
    /// weight exponent γ = m − 2 of the singular factor
    pub gamma: f64,
}

impl GradedScheme {
    pub fn new(axis: usize, levels: usize, order: usize, gamma: f64) -> Self {
        Self { axis, levels, order, gamma }
    }
}

/// Graded axis segments covering [lo, hi] with dyadic refinement toward 0.
pub fn graded_axis(lo: f64, hi: f64, levels: usize, order: usize, gamma: f64) -> Result<Vec<Segment>> {
    assert!(lo < hi);
    let mut segs = Vec::new();
    if lo < 0.0 {
        segs.push(Segment::graded_to_zero(-lo, -1.0, levels, order, gamma)?);
    } else if lo > 0.0 {
        return Ok(vec![Segment::plain(lo, hi, order)?]);
    }
    if hi > 0.0 {
        segs.push(Segment::graded_to_zero(hi, 1.0, levels, order, gamma)?);
    }
    if segs.is_empty() {
        segs.push(Segment::plain(lo, hi, order)?);
    }
    Ok(segs)
}

/// Integrate over a box whose integrand has a |t|^γ factor on the scheme's
/// axis (γ > −1); err_est is the last-level increment of the graded axis.
pub fn integrate_graded<F>(
    bounds: [(f64, f64); 3],
    f: &F,
    scheme: &GradedScheme,
    rule: &QuadRule,
) -> Result<(Complex64, f64)>
where
    F: Fn(ChartPoint) -> Complex64,
{
    if scheme.gamma <= -1.0 {
        return Err(Error::NonIntegrable(scheme.gamma));
    }
    assert!(scheme.axis == 0, "catalog singularities sit on axis 0");
    let run = |levels: usize| -> Result<Complex64> {
        let ax1 = graded_axis(bounds[0].0, bounds[0].1, levels, scheme.order, scheme.gamma)?;
        let ax2 = vec![Segment::plain(bounds[1].0, bounds[1].1, rule.orders[1])?];
        let ax3 = vec![Segment::plain(bounds[2].0, bounds[2].1, rule.orders[2])?];
        tensor3(&ax1, &ax2, &ax3, f)
    };
    let v = run(scheme.levels)?;
    let v_prev = run(scheme.levels.saturating_sub(1).max(1))?;
    Ok((v, (v - v_prev).norm()))
}

/// One-dimensional graded integration of f with a |t|^γ factor over [lo, hi]
/// (0 must be an endpoint or interior); returns (value, last-level increment).
pub fn integrate_graded_1d<F>(
    lo: f64,
    hi: f64,
    f: &F,
    gamma: f64,
    levels: usize,
    order: usize,
) -> Result<(f64, f64)>
where
    F: Fn(f64) -> f64,
{
    if gamma <= -1.0 {
        return Err(Error::NonIntegrable(gamma));
    }
    let run = |levels: usize| -> Result<f64> {
        let segs = graded_axis(lo, hi, levels, order, gamma)?;
        let vals: Vec<Complex64> = segs
            .iter()
            .map(|s| s.integrate(|t| Complex64::new(f(t), 0.0)))
            .collect();
        Ok(pairwise_sum(&vals).re)
    };
    let v = run(levels)?;
    let vp = run(levels.saturating_sub(1).max(1))?;
    Ok((v, (v - vp).abs()))
}
