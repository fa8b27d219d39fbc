//! Global invariants of closed transversal curves: Maslov winding, lift
//! monodromy, push-offs and Gauss linking numbers.

use crate::curves::{
    cr_trihedron, natural_reparametrize, normalize_wilczynski, strain_density, wilczynski_frame,
    CurveError, DerivativeScheme, SampledCurve, Trihedron,
};
use crate::hermitian::{PseudoVector, C64};
use crate::isoparametric::{Anomaly, Spin};
use crate::sphere::HeisenbergPoint;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KnotError {
    #[error("chi = z1 - i z3 vanishes (min |chi| = {0:.3e})")]
    ChiVanishes(f64),
    #[error("winding is not an integer (total phase / 2pi = {0:.6})")]
    NonIntegerWinding(f64),
    #[error("phase jumps by {0:.3} rad between samples; resample more finely")]
    Undersampled(f64),
    #[error("monodromy is not a cube root of unity (|eps^3 - 1| = {0:.3e})")]
    NotCubeRoot(f64),
    #[error("componentwise ratios disagree by {0:.3e}")]
    InconsistentRatio(f64),
    #[error("push-off meets the curve (distance {0:.3e})")]
    SelfIntersecting(f64),
    #[error("curves intersect (min distance {0:.3e})")]
    CurvesIntersect(f64),
    #[error("epsilon {eps} too large: strands are {separation:.4} apart, limit {limit:.4}")]
    EpsilonTooLarge { eps: f64, separation: f64, limit: f64 },
    #[error("linking number unstable: {first} at epsilon {eps:.4e} vs {second} at {half:.4e}")]
    Unstable { first: LinkingResult, second: LinkingResult, eps: f64, half: f64 },
    #[error("curve is not closed")]
    NotClosed,
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Result of one Gauss linking quadrature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinkingResult {
    pub raw_integral: f64,
    pub rounded: i64,
    pub residual: f64,
    pub quadrature_points: usize,
    pub epsilon: f64,
}

impl std::fmt::Display for LinkingResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} (raw {:.6}, residual {:.2e})", self.rounded, self.raw_integral, self.residual)
    }
}

impl LinkingResult {
    /// Rounding is only meaningful for small residuals.
    pub fn is_reliable(&self) -> bool {
        self.residual < 0.1
    }
}

fn phase_total(chi: &[C64], closing: C64) -> Result<f64, KnotError> {
    let mut total = 0.0;
    let mut worst: f64 = 0.0;
    for k in 0..chi.len() {
        let next = if k + 1 < chi.len() { chi[k + 1] } else { closing };
        let d = (next / chi[k]).arg();
        worst = worst.max(d.abs());
        total += d;
    }
    if worst > 2.0 * PI / 3.0 {
        return Err(KnotError::Undersampled(worst));
    }
    Ok(total)
}

/// Maslov index `(i/2π)∮ dχ/χ` with `χ = Γ₁ − iΓ₃`, over the full period of
/// the lift. For a lift with monodromy `ε` over the sampled period, the
/// winding over one sampled period is multiplied by the order of `ε`.
pub fn maslov_numeric(curve: &SampledCurve) -> Result<i64, KnotError> {
    let w = maslov_winding(curve)?;
    if (w - w.round()).abs() > 0.01 {
        return Err(KnotError::NonIntegerWinding(w));
    }
    Ok(w.round() as i64)
}

/// Unrounded winding behind [`maslov_numeric`].
pub fn maslov_winding(curve: &SampledCurve) -> Result<f64, KnotError> {
    if !curve.periodic {
        return Err(KnotError::NotClosed);
    }
    let lift = curve.lift();
    let chi: Vec<C64> = lift.iter().map(|g| g[0] - crate::hermitian::I * g[2]).collect();
    let scale = lift.iter().map(|g| g.norm()).fold(0.0, f64::max);
    let min = chi.iter().map(|z| z.norm()).fold(f64::INFINITY, f64::min);
    if min < 1e-10 * scale {
        return Err(KnotError::ChiVanishes(min));
    }
    let (root, dist) = crate::curves::nearest_cube_root(curve.monodromy);
    if dist > 1e-6 {
        return Err(KnotError::NotCubeRoot((curve.monodromy.powi(3) - 1.0).norm()));
    }
    let order = if (root - 1.0).norm() < 1e-9 { 1.0 } else { 3.0 };
    let total = order * phase_total(&chi, chi[0] * curve.monodromy)?;
    // (i/2π)·(i·Δarg) = −Δarg/2π
    Ok(-total / (2.0 * PI))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Monodromy {
    pub factor: [f64; 2],
    pub spin: Spin,
    pub anomaly: Anomaly,
}

/// Spin and phase anomaly from `Γ(T)/Γ(0)`.
pub fn monodromy(start: &PseudoVector, end: &PseudoVector) -> Result<Monodromy, KnotError> {
    let scale = start.norm();
    let ratios: Vec<C64> = (0..3)
        .filter(|&k| start[k].norm() > 1e-6 * scale)
        .map(|k| end[k] / start[k])
        .collect();
    let eps = ratios[0];
    let spread = ratios.iter().map(|r| (r - eps).norm()).fold(0.0, f64::max);
    if spread > 1e-7 {
        return Err(KnotError::InconsistentRatio(spread));
    }
    let defect = (eps.powi(3) - 1.0).norm();
    if defect > 1e-7 {
        return Err(KnotError::NotCubeRoot(defect));
    }
    let spin = if (eps - 1.0).norm() < 1e-7 { Spin::One } else { Spin::Third };
    Ok(Monodromy {
        factor: [eps.re, eps.im],
        spin,
        anomaly: Anomaly::from_radians(eps.arg().rem_euclid(2.0 * PI)),
    })
}

/// Monodromy of a closed curve's Wilczynski lift over its sampled period.
pub fn curve_monodromy(curve: &SampledCurve) -> Result<Monodromy, KnotError> {
    if !curve.periodic {
        return Err(KnotError::NotClosed);
    }
    let normalized = normalize_wilczynski(curve)?;
    let g0 = normalized.lift()[0];
    monodromy(&g0, &(g0 * normalized.monodromy))
}

fn sub(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn norm3(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: [f64; 3], b: [f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn points_of(curve: &SampledCurve) -> Result<Vec<[f64; 3]>, KnotError> {
    Ok(curve.heisenberg_points()?.iter().map(|p| p.to_array()).collect())
}

/// Largest distance between two samples.
pub fn diameter(points: &[[f64; 3]]) -> f64 {
    let mut d: f64 = 0.0;
    for (i, a) in points.iter().enumerate() {
        for b in &points[i + 1..] {
            d = d.max(norm3(sub(*a, *b)));
        }
    }
    d
}

/// Smallest distance between samples on different strands. Around every
/// sample the neighbourhood along which the distance keeps growing is
/// treated as the same strand.
pub fn strand_separation(points: &[[f64; 3]]) -> f64 {
    let n = points.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let d = |m: usize| norm3(sub(points[i], points[(i + m) % n]));
            let mut fwd = 1;
            while fwd + 1 < n && d(fwd + 1) >= d(fwd) {
                fwd += 1;
            }
            let mut back = 1;
            while back + 1 < n && d(n - back - 1) >= d(n - back) {
                back += 1;
            }
            let mut best = f64::INFINITY;
            if fwd + back < n {
                for m in fwd + 1..n - back {
                    best = best.min(d(m));
                }
            }
            best
        })
        .reduce(|| f64::INFINITY, f64::min)
}

/// The default push-off distance: small against the curve size and well
/// inside the gap between strands.
pub fn default_epsilon(points: &[[f64; 3]]) -> f64 {
    (0.05 * diameter(points)).min(0.15 * strand_separation(points))
}

fn check_gate(points: &[[f64; 3]], eps: f64) -> Result<(), KnotError> {
    let separation = strand_separation(points);
    let limit = 0.2 * separation;
    if !(eps > 0.0) || eps >= limit {
        return Err(KnotError::EpsilonTooLarge { eps, separation, limit });
    }
    Ok(())
}

fn pushoff_from(
    curve: &SampledCurve,
    points: &[[f64; 3]],
    dirs: &[[f64; 3]],
    eps: f64,
) -> Result<SampledCurve, KnotError> {
    check_gate(points, eps)?;
    let moved: Vec<HeisenbergPoint> = points
        .iter()
        .zip(dirs)
        .map(|(p, v)| {
            let n = norm3(*v);
            HeisenbergPoint::new(p[0] + eps * v[0] / n, p[1] + eps * v[1] / n, p[2] + eps * v[2] / n)
        })
        .collect();
    let gap = moved
        .par_iter()
        .map(|q| points.iter().map(|p| norm3(sub(q.to_array(), *p))).fold(f64::INFINITY, f64::min))
        .reduce(|| f64::INFINITY, f64::min);
    if gap < 0.01 * eps {
        return Err(KnotError::SelfIntersecting(gap));
    }
    let period = curve.period.ok_or(KnotError::NotClosed)?;
    let mut out = SampledCurve::periodic_heisenberg(moved, period);
    out.params = curve.params.clone();
    Ok(out)
}

/// Unit vector along `ξ = ∂x + y∂z`.
pub fn contact_direction(p: [f64; 3]) -> [f64; 3] {
    let n = (1.0 + p[1] * p[1]).sqrt();
    [1.0 / n, 0.0, p[1] / n]
}

pub fn contact_pushoff(curve: &SampledCurve, eps: f64) -> Result<SampledCurve, KnotError> {
    if !curve.periodic {
        return Err(KnotError::NotClosed);
    }
    let points = points_of(curve)?;
    let dirs: Vec<[f64; 3]> = points.iter().map(|p| contact_direction(*p)).collect();
    pushoff_from(curve, &points, &dirs, eps)
}

/// A closed curve in natural parametrization with its CR trihedra.
#[derive(Debug, Clone)]
pub struct FramedCurve {
    pub curve: SampledCurve,
    pub trihedra: Vec<Trihedron>,
}

/// Trihedra along a closed curve, reparametrizing it naturally first if needed.
pub fn framed_curve(curve: &SampledCurve) -> Result<FramedCurve, KnotError> {
    if !curve.periodic {
        return Err(KnotError::NotClosed);
    }
    let mut w = normalize_wilczynski(curve)?;
    let defect = strain_density(&w)?.iter().map(|a| (a - 1.0).abs()).fold(0.0, f64::max);
    if defect > 1e-8 {
        w = natural_reparametrize(&w)?;
    }
    let data = wilczynski_frame(&w)?;
    let trihedra = (0..data.frames.len())
        .map(|k| cr_trihedron(&data, k))
        .collect::<Result<Vec<_>, _>>()?;
    let points: Vec<HeisenbergPoint> = trihedra.iter().map(|t| t.base).collect();
    let mut base = SampledCurve::periodic_heisenberg(points, w.period.ok_or(KnotError::NotClosed)?);
    base.params = w.params.clone();
    Ok(FramedCurve { curve: base, trihedra })
}

pub fn cr_pushoff(framed: &FramedCurve, eps: f64) -> Result<SampledCurve, KnotError> {
    let points: Vec<[f64; 3]> = framed.trihedra.iter().map(|t| t.base.to_array()).collect();
    let dirs: Vec<[f64; 3]> = framed.trihedra.iter().map(|t| t.n_vec).collect();
    pushoff_from(&framed.curve, &points, &dirs, eps)
}

/// Whether `ζ(γ′)` keeps one sign along a closed Heisenberg curve.
pub fn contact_sign(curve: &SampledCurve) -> Result<Option<f64>, KnotError> {
    let pts = points_of(curve)?;
    let h = curve.step()?;
    let n = pts.len();
    let mut sign = 0.0;
    for k in 0..n {
        let at = |m: isize| pts[((k as isize + m).rem_euclid(n as isize)) as usize];
        let v: Vec<f64> = (0..3)
            .map(|c| (-at(2)[c] + 8.0 * at(1)[c] - 8.0 * at(-1)[c] + at(-2)[c]) / (12.0 * h))
            .collect();
        let p = HeisenbergPoint::from_array(pts[k]);
        let z = crate::sphere::contact_form(&p, [v[0], v[1], v[2]]);
        if z == 0.0 || (sign != 0.0 && z.signum() != sign) {
            return Ok(None);
        }
        sign = z.signum();
    }
    Ok(Some(sign))
}

/// Real trigonometric interpolant of periodic samples.
struct TrigSeries {
    coeffs: Vec<C64>,
    m: usize,
    omega: f64,
}

impl TrigSeries {
    fn fit(vals: &[f64], period: f64) -> Self {
        let m = vals.len();
        let mut buf: Vec<C64> = vals.iter().map(|&v| C64::new(v, 0.0)).collect();
        FftPlanner::new().plan_fft_forward(m).process(&mut buf);
        let coeffs = buf[..=m / 2].iter().map(|z| z / m as f64).collect();
        TrigSeries { coeffs, m, omega: 2.0 * PI / period }
    }

    /// Value of the `d`-th derivative (or of the antiderivative without its
    /// linear part when `d = -1`).
    fn eval(&self, t: f64, d: i32) -> f64 {
        let rot = C64::from_polar(1.0, self.omega * t);
        let mut z = C64::new(1.0, 0.0);
        let mut out = 0.0;
        for (j, c) in self.coeffs.iter().enumerate() {
            if j > 0 {
                z *= rot;
            }
            let nyquist = 2 * j == self.m;
            let weight = if j == 0 || nyquist {
                if d == 0 { 1.0 } else { 0.0 }
            } else {
                2.0
            };
            if weight == 0.0 {
                continue;
            }
            let factor = C64::new(0.0, j as f64 * self.omega).powi(d);
            out += weight * (c * factor * z).re;
        }
        out
    }
}

/// A closed curve resampled uniformly in arc length, with unit tangents.
#[derive(Debug, Clone)]
pub struct ArcGrid {
    pub points: Vec<[f64; 3]>,
    pub tangents: Vec<[f64; 3]>,
    pub length: f64,
}

/// Resamples a closed curve at `n` points equally spaced in arc length,
/// using its trigonometric interpolant.
pub fn arc_length_grid(curve: &SampledCurve, n: usize) -> Result<ArcGrid, KnotError> {
    if !curve.periodic {
        return Err(KnotError::NotClosed);
    }
    let period = curve.period.ok_or(KnotError::NotClosed)?;
    let pts = points_of(curve)?;
    let coords: Vec<TrigSeries> = (0..3)
        .map(|c| TrigSeries::fit(&pts.iter().map(|p| p[c]).collect::<Vec<_>>(), period))
        .collect();
    let h = period / pts.len() as f64;
    let speed_samples: Vec<f64> = (0..pts.len())
        .into_par_iter()
        .map(|k| {
            let t = k as f64 * h;
            norm3([coords[0].eval(t, 1), coords[1].eval(t, 1), coords[2].eval(t, 1)])
        })
        .collect();
    let speed = TrigSeries::fit(&speed_samples, period);
    let mean = speed.coeffs[0].re;
    let length = mean * period;
    let arc = |t: f64| mean * t + speed.eval(t, -1) - speed.eval(0.0, -1);
    let target_step = length / n as f64;
    // Newton with bisection safeguard per target, seeded by the mean speed
    let params: Vec<f64> = (0..n)
        .into_par_iter()
        .map(|k| {
            let goal = k as f64 * target_step;
            let (mut lo, mut hi) = (0.0, period);
            let mut t = goal / mean;
            for _ in 0..100 {
                let f = arc(t) - goal;
                if f > 0.0 {
                    hi = t;
                } else {
                    lo = t;
                }
                let v = speed.eval(t, 0);
                let mut next = if v > 0.0 { t - f / v } else { 0.5 * (lo + hi) };
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - t).abs() <= 1e-14 * period {
                    t = next;
                    break;
                }
                t = next;
            }
            t
        })
        .collect();
    let (points, tangents): (Vec<[f64; 3]>, Vec<[f64; 3]>) = params
        .par_iter()
        .map(|&t| {
            let p = [coords[0].eval(t, 0), coords[1].eval(t, 0), coords[2].eval(t, 0)];
            let v = speed.eval(t, 0);
            let d = [coords[0].eval(t, 1) / v, coords[1].eval(t, 1) / v, coords[2].eval(t, 1) / v];
            (p, d)
        })
        .unzip();
    Ok(ArcGrid { points, tangents, length })
}

/// Worker count from `CR3_WORKERS`, if set to a positive integer.
pub fn configured_workers() -> Option<usize> {
    std::env::var("CR3_WORKERS").ok()?.trim().parse().ok().filter(|&n: &usize| n > 0)
}

fn neumaier(acc: &mut (f64, f64), x: f64) {
    let t = acc.0 + x;
    if acc.0.abs() >= x.abs() {
        acc.1 += (acc.0 - t) + x;
    } else {
        acc.1 += (x - t) + acc.0;
    }
    acc.0 = t;
}

const BLOCK: usize = 32;

/// `(1/4π)∬ det(A − B, A′, B′)/|A − B|³` on arc-length grids, and the
/// smallest distance met.
pub fn linking_quadrature(a: &ArcGrid, b: &ArcGrid) -> (f64, f64) {
    let blocks: Vec<(usize, usize)> = (0..a.points.len())
        .step_by(BLOCK)
        .map(|s| (s, (s + BLOCK).min(a.points.len())))
        .collect();
    let run = || -> Vec<((f64, f64), f64)> {
        blocks
            .par_iter()
            .map(|&(lo, hi)| {
                let mut acc = (0.0, 0.0);
                let mut closest = f64::INFINITY;
                for i in lo..hi {
                    for j in 0..b.points.len() {
                        let d = sub(a.points[i], b.points[j]);
                        let r = norm3(d);
                        closest = closest.min(r);
                        neumaier(&mut acc, dot(d, cross(a.tangents[i], b.tangents[j])) / (r * r * r));
                    }
                }
                (acc, closest)
            })
            .collect()
    };
    let parts = match configured_workers() {
        // inside a pool already (e.g. a parallel sweep): use it
        Some(w) if rayon::current_thread_index().is_none() => match rayon::ThreadPoolBuilder::new().num_threads(w).build() {
            Ok(pool) => pool.install(run),
            Err(_) => run(),
        },
        _ => run(),
    };
    let mut total = (0.0, 0.0);
    let mut closest = f64::INFINITY;
    for ((s, c), m) in parts {
        neumaier(&mut total, s);
        neumaier(&mut total, c);
        closest = closest.min(m);
    }
    let ha = a.length / a.points.len() as f64;
    let hb = b.length / b.points.len() as f64;
    ((total.0 + total.1) * ha * hb / (4.0 * PI), closest)
}

fn to_result(raw: f64, n: usize, eps: f64) -> LinkingResult {
    let rounded = raw.round();
    LinkingResult {
        raw_integral: raw,
        rounded: rounded as i64,
        residual: (raw - rounded).abs(),
        quadrature_points: n,
        epsilon: eps,
    }
}

/// Gauss linking number of two disjoint closed curves with `n` quadrature
/// points on each. Both curves are traversed by increasing parameter.
pub fn gauss_linking(a: &SampledCurve, b: &SampledCurve, n: usize) -> Result<LinkingResult, KnotError> {
    let ga = arc_length_grid(a, n)?;
    let gb = arc_length_grid(b, n)?;
    let (raw, closest) = linking_quadrature(&ga, &gb);
    if closest < 1e-6 {
        return Err(KnotError::CurvesIntersect(closest));
    }
    Ok(to_result(raw, n, 0.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkOptions {
    pub quadrature: usize,
    pub epsilon: Option<f64>,
    /// Raise the quadrature so that the grid spacing stays below ε/2.
    pub refine: bool,
}

impl Default for LinkOptions {
    fn default() -> Self {
        LinkOptions { quadrature: 1024, epsilon: None, refine: true }
    }
}

/// A linking number with its ε-halving check.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StableLinking {
    pub result: LinkingResult,
    pub half_epsilon: LinkingResult,
}

fn quadrature_for(length: f64, eps: f64, opts: &LinkOptions) -> usize {
    if !opts.refine {
        return opts.quadrature;
    }
    let needed = (2.0 * length / eps).ceil() as usize;
    opts.quadrature.max(needed.div_ceil(64) * 64)
}

fn stable_linking(
    curve: &SampledCurve,
    pushoff: impl Fn(f64) -> Result<SampledCurve, KnotError>,
    opts: &LinkOptions,
) -> Result<StableLinking, KnotError> {
    let points = points_of(curve)?;
    let eps = match opts.epsilon {
        Some(e) => e,
        None => default_epsilon(&points),
    };
    let base_len = arc_length_grid(curve, opts.quadrature)?.length;
    let mut results = Vec::with_capacity(2);
    for e in [eps, 0.5 * eps] {
        let other = pushoff(e)?;
        let n = quadrature_for(base_len, e, opts);
        let ga = arc_length_grid(curve, n)?;
        let gb = arc_length_grid(&other, n)?;
        let (raw, closest) = linking_quadrature(&ga, &gb);
        if closest < 1e-6 {
            return Err(KnotError::CurvesIntersect(closest));
        }
        results.push(to_result(raw, n, e));
    }
    let (first, second) = (results[0], results[1]);
    if first.rounded != second.rounded {
        return Err(KnotError::Unstable { first, second, eps, half: 0.5 * eps });
    }
    Ok(StableLinking { result: first, half_epsilon: second })
}

/// Linking number of a closed curve with its contact push-off.
pub fn bennequin_estimate(curve: &SampledCurve, opts: &LinkOptions) -> Result<StableLinking, KnotError> {
    stable_linking(curve, |e| contact_pushoff(curve, e), opts)
}

/// Linking number of a closed curve with its push-off along the CR normal.
pub fn self_linking_estimate(framed: &FramedCurve, opts: &LinkOptions) -> Result<StableLinking, KnotError> {
    stable_linking(&framed.curve, |e| cr_pushoff(framed, e), opts)
}

/// The same closed curve traversed backwards.
pub fn reversed(curve: &SampledCurve) -> SampledCurve {
    let mut out = curve.clone();
    let n = curve.len();
    let reorder = |k: usize| (n - k) % n;
    out.samples = match &curve.samples {
        crate::curves::Samples::Lift(v) => crate::curves::Samples::Lift((0..n).map(|k| v[reorder(k)]).collect()),
        crate::curves::Samples::Heisenberg(v) => {
            crate::curves::Samples::Heisenberg((0..n).map(|k| v[reorder(k)]).collect())
        }
    };
    out.monodromy = curve.monodromy.inv();
    out.scheme = DerivativeScheme::CentralFd4;
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn circle(center: [f64; 3], u: [f64; 3], v: [f64; 3], n: usize) -> SampledCurve {
        let pts = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                HeisenbergPoint::new(
                    center[0] + t.cos() * u[0] + t.sin() * v[0],
                    center[1] + t.cos() * u[1] + t.sin() * v[1],
                    center[2] + t.cos() * u[2] + t.sin() * v[2],
                )
            })
            .collect();
        SampledCurve::periodic_heisenberg(pts, 2.0 * PI)
    }

    #[test]
    fn unlinked_circles() {
        let a = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 256);
        let b = circle([0.0, 0.0, 5.0], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 256);
        let r = gauss_linking(&a, &b, 256).unwrap();
        assert_eq!(r.rounded, 0);
        assert!(r.residual < 1e-6);
    }

    #[test]
    fn hopf_pair_sign() {
        // unit circle in z = 0 and unit circle in the xz-plane through (1,0,0)
        let a = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 512);
        let b = circle([1.0, 0.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 1.0], 512);
        let r = gauss_linking(&a, &b, 512).unwrap();
        assert_eq!(r.rounded, -1);
        assert!(r.residual < 1e-8);
        let s = gauss_linking(&b, &a, 512).unwrap();
        assert!((r.raw_integral - s.raw_integral).abs() < 1e-8);
        let t = gauss_linking(&reversed(&a), &b, 512).unwrap();
        assert!((r.raw_integral + t.raw_integral).abs() < 1e-8);
    }

    #[test]
    fn intersecting_curves_rejected() {
        let a = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 64);
        assert!(matches!(gauss_linking(&a, &a, 64), Err(KnotError::CurvesIntersect(_))));
    }

    #[test]
    fn contact_direction_is_horizontal() {
        for p in [[0.3, -1.2, 4.0], [0.0, 2.0, -1.0]] {
            let v = contact_direction(p);
            let z = crate::sphere::contact_form(&HeisenbergPoint::from_array(p), v);
            assert!(z.abs() < 1e-15);
        }
    }

    #[test]
    fn transverse_circle_pushoff() {
        // circle in the plane x = 0; the push direction leaves that plane
        let c = circle([0.0; 3], [0.0, 0.5, 0.0], [0.0, 0.0, 1.0], 128);
        let p = contact_pushoff(&c, 0.05).unwrap();
        let base = points_of(&c).unwrap();
        let moved = points_of(&p).unwrap();
        for (q, r) in moved.iter().zip(&base) {
            let d = contact_direction(*r);
            for k in 0..3 {
                assert!((q[k] - r[k] - 0.05 * d[k]).abs() < 1e-15);
            }
        }
        let gap = moved
            .iter()
            .flat_map(|q| base.iter().map(move |r| norm3(sub(*q, *r))))
            .fold(f64::INFINITY, f64::min);
        assert!(gap >= 0.8 * 0.05);
        assert!(matches!(contact_pushoff(&c, 1.0), Err(KnotError::EpsilonTooLarge { .. })));
    }

    #[test]
    fn arc_grid_of_ellipse() {
        let a = circle([0.0; 3], [2.0, 0.0, 0.0], [0.0, 1.0, 0.0], 256);
        let g = arc_length_grid(&a, 200).unwrap();
        // perimeter of the ellipse with semi-axes 2 and 1
        assert!((g.length - 9.688448220547675).abs() < 1e-10);
        for k in 0..200 {
            let next = g.points[(k + 1) % 200];
            let chord = norm3(sub(next, g.points[k]));
            assert!((chord - g.length / 200.0).abs() < 1e-3 * g.length / 200.0);
            assert!((norm3(g.tangents[k]) - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn strand_separation_of_two_loops() {
        let round = circle([0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], 200);
        assert!(strand_separation(&points_of(&round).unwrap()).is_infinite());
        // stadium: straight strands one apart joined by half circles
        let (len, r) = (10.0, 0.5);
        let total = 2.0 * len + 2.0 * PI * r;
        let stadium: Vec<[f64; 3]> = (0..800)
            .map(|k| {
                let u = total * k as f64 / 800.0;
                if u < len {
                    [u, -r, 0.0]
                } else if u < len + PI * r {
                    let a = (u - len) / r - PI / 2.0;
                    [len + r * a.cos(), r * a.sin(), 0.0]
                } else if u < 2.0 * len + PI * r {
                    [len - (u - len - PI * r), r, 0.0]
                } else {
                    let a = (u - 2.0 * len - PI * r) / r + PI / 2.0;
                    [r * a.cos(), r * a.sin(), 0.0]
                }
            })
            .collect();
        let sep = strand_separation(&stadium);
        assert!((sep - 1.0).abs() < 1e-3, "{sep}");
    }

    #[test]
    fn monodromy_of_vectors() {
        let g = PseudoVector::new(C64::new(1.0, 0.5), C64::new(0.2, 0.0), C64::new(-0.3, 1.0));
        let eps = C64::from_polar(1.0, 4.0 * PI / 3.0);
        let m = monodromy(&g, &(g * eps)).unwrap();
        assert_eq!(m.spin, Spin::Third);
        assert_eq!(m.anomaly, Anomaly::FourThirdsPi);
        let m = monodromy(&g, &g).unwrap();
        assert_eq!((m.spin, m.anomaly), (Spin::One, Anomaly::Zero));
        assert!(matches!(monodromy(&g, &(g * C64::new(0.0, 1.0))), Err(KnotError::NotCubeRoot(_))));
    }
}
