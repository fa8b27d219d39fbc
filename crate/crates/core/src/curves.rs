//! Transversal curves: sampled lifts, strain, Wilczynski normalization,
//! natural parameter, bending and twist, frames, trihedra, osculating chains.

use crate::hermitian::{
    c, det_columns, h_orthogonal_complement, herm_product, AlgebraError, PseudoMatrix,
    PseudoVector, C64, I,
};
use crate::sphere::{chart_vector, contact_form, project, ChainSpec, HeisenbergPoint, SphereError};
use nalgebra::Matrix3;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

/// Scale-normalized determinant below which a sample counts as a CR
/// inflection point.
pub const DEFAULT_TOL_DET: f64 = 1e-6;

/// Lifts with `|det(Γ,Γ′,Γ″) + 1|` below this everywhere count as normalized.
pub const NORMALIZED_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("need at least 5 samples, got {0}")]
    TooFewSamples(usize),
    #[error("curve is not transversal near sample {0}")]
    NonTransversal(usize),
    #[error("CR inflection points detected ({0} samples)")]
    InflectionPresent(usize),
    #[error("parameter grid is not uniform")]
    NonUniformGrid,
    #[error("curve is not closed")]
    NotClosed,
    #[error("curve is not naturally parametrized (max |a - 1| = {0:.3e})")]
    NotNatural(f64),
    #[error("curve runs through the point at infinity near sample {0}")]
    NearInfinity(usize),
    #[error("frame unavailable: {0}")]
    FrameUnavailable(String),
    #[error("parameter {0} outside the sampled range")]
    OutOfRange(f64),
    #[error(transparent)]
    Sphere(#[from] SphereError),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DerivativeScheme {
    /// Fourth-order finite differences; central on periodic grids, one-sided
    /// at the ends of arcs.
    CentralFd4,
    /// Fourier differentiation; periodic grids only.
    Spectral,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Samples {
    Lift(Vec<PseudoVector>),
    Heisenberg(Vec<HeisenbergPoint>),
}

/// A curve sampled on a uniform grid. Periodic curves store the half-open
/// period `[0, T)`; a lift sample continues as `Γ(s + T) = monodromy·Γ(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledCurve {
    pub params: Vec<f64>,
    pub samples: Samples,
    pub periodic: bool,
    pub period: Option<f64>,
    pub monodromy: C64,
    pub scheme: DerivativeScheme,
}

impl SampledCurve {
    pub fn periodic_lift(lift: Vec<PseudoVector>, period: f64) -> Self {
        let n = lift.len();
        SampledCurve {
            params: (0..n).map(|k| k as f64 * period / n as f64).collect(),
            samples: Samples::Lift(lift),
            periodic: true,
            period: Some(period),
            monodromy: c(1.0, 0.0),
            scheme: DerivativeScheme::CentralFd4,
        }
    }

    pub fn periodic_heisenberg(points: Vec<HeisenbergPoint>, period: f64) -> Self {
        let n = points.len();
        SampledCurve {
            params: (0..n).map(|k| k as f64 * period / n as f64).collect(),
            samples: Samples::Heisenberg(points),
            periodic: true,
            period: Some(period),
            monodromy: c(1.0, 0.0),
            scheme: DerivativeScheme::CentralFd4,
        }
    }

    /// Arc on `[t0, t1]` including both ends.
    pub fn arc_lift(lift: Vec<PseudoVector>, t0: f64, t1: f64) -> Self {
        let n = lift.len();
        let h = (t1 - t0) / (n.max(2) - 1) as f64;
        SampledCurve {
            params: (0..n).map(|k| t0 + k as f64 * h).collect(),
            samples: Samples::Lift(lift),
            periodic: false,
            period: None,
            monodromy: c(1.0, 0.0),
            scheme: DerivativeScheme::CentralFd4,
        }
    }

    pub fn with_scheme(mut self, scheme: DerivativeScheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn step(&self) -> Result<f64, CurveError> {
        let n = self.len();
        if n < 5 {
            return Err(CurveError::TooFewSamples(n));
        }
        let h = if self.periodic {
            self.period.ok_or(CurveError::NotClosed)? / n as f64
        } else {
            (self.params[n - 1] - self.params[0]) / (n - 1) as f64
        };
        let uniform = self
            .params
            .iter()
            .enumerate()
            .all(|(k, &t)| (t - self.params[0] - k as f64 * h).abs() <= 1e-9 * h.abs().max(1.0) * (k as f64 + 1.0));
        if !uniform || h <= 0.0 {
            return Err(CurveError::NonUniformGrid);
        }
        Ok(h)
    }

    /// Lift samples; Heisenberg samples are lifted through the chart.
    pub fn lift(&self) -> Vec<PseudoVector> {
        match &self.samples {
            Samples::Lift(v) => v.clone(),
            Samples::Heisenberg(p) => p.iter().map(chart_vector).collect(),
        }
    }

    pub fn heisenberg_points(&self) -> Result<Vec<HeisenbergPoint>, CurveError> {
        match &self.samples {
            Samples::Heisenberg(p) => Ok(p.clone()),
            Samples::Lift(v) => v
                .iter()
                .enumerate()
                .map(|(k, g)| project(g).map_err(|_| CurveError::NearInfinity(k)))
                .collect(),
        }
    }

    fn lift_monodromy(&self) -> C64 {
        match self.samples {
            Samples::Lift(_) => self.monodromy,
            Samples::Heisenberg(_) => c(1.0, 0.0),
        }
    }

    /// Lift and its derivatives up to `order` (at most 3) at every sample.
    pub fn lift_jets(&self, order: usize) -> Result<Vec<[PseudoVector; 4]>, CurveError> {
        let h = self.step()?;
        let lift = self.lift();
        let n = lift.len();
        let mut out = vec![[PseudoVector::zeros(); 4]; n];
        for (k, g) in lift.iter().enumerate() {
            out[k][0] = *g;
        }
        for comp in 0..3 {
            let vals: Vec<C64> = lift.iter().map(|g| g[comp]).collect();
            for d in 1..=order.min(3) {
                let der = derivative(&vals, h, d, self.periodic, self.lift_monodromy(), self.scheme);
                for k in 0..n {
                    out[k][d][comp] = der[k];
                }
            }
        }
        Ok(out)
    }

    /// Derivative of a real sequence sampled on this grid.
    pub fn differentiate_real(&self, vals: &[f64], order: usize) -> Result<Vec<f64>, CurveError> {
        let h = self.step()?;
        let z: Vec<C64> = vals.iter().map(|&v| c(v, 0.0)).collect();
        Ok(derivative(&z, h, order, self.periodic, c(1.0, 0.0), self.scheme)
            .iter()
            .map(|v| v.re)
            .collect())
    }
}

/// Finite-difference weights for the `order`-th derivative at `x0` from
/// values at `nodes`.
pub fn fd_weights(x0: f64, nodes: &[f64], order: usize) -> Vec<f64> {
    let n = nodes.len();
    let mut w = vec![vec![0.0; order + 1]; n];
    w[0][0] = 1.0;
    let mut c1 = 1.0;
    let mut c4 = nodes[0] - x0;
    for i in 1..n {
        let mn = i.min(order);
        let mut c2 = 1.0;
        let c5 = c4;
        c4 = nodes[i] - x0;
        for j in 0..i {
            let c3 = nodes[i] - nodes[j];
            c2 *= c3;
            if j == i - 1 {
                for k in (1..=mn).rev() {
                    w[i][k] = c1 * (k as f64 * w[i - 1][k - 1] - c5 * w[i - 1][k]) / c2;
                }
                w[i][0] = -c1 * c5 * w[i - 1][0] / c2;
            }
            for k in (1..=mn).rev() {
                w[j][k] = (c4 * w[j][k] - k as f64 * w[j][k - 1]) / c3;
            }
            w[j][0] = c4 * w[j][0] / c3;
        }
        c1 = c2;
    }
    w.iter().map(|row| row[order]).collect()
}

fn derivative(vals: &[C64], h: f64, order: usize, periodic: bool, twist: C64, scheme: DerivativeScheme) -> Vec<C64> {
    if order == 0 {
        return vals.to_vec();
    }
    match (scheme, periodic) {
        (DerivativeScheme::Spectral, true) => spectral_derivative(vals, h, order, twist),
        (_, true) => periodic_fd(vals, h, order, twist),
        (_, false) => arc_fd(vals, h, order),
    }
}

fn periodic_fd(vals: &[C64], h: f64, order: usize, twist: C64) -> Vec<C64> {
    let n = vals.len() as i64;
    let r: i64 = if order >= 3 { 3 } else { 2 };
    let nodes: Vec<f64> = (-r..=r).map(|j| j as f64).collect();
    let w = fd_weights(0.0, &nodes, order);
    let scale = h.powi(order as i32);
    let twist_inv = twist.inv();
    (0..n)
        .map(|k| {
            let mut acc = c(0.0, 0.0);
            for (j, wj) in (-r..=r).zip(&w) {
                let idx = k + j;
                let (base, f) = if idx < 0 {
                    (idx + n, twist_inv)
                } else if idx >= n {
                    (idx - n, twist)
                } else {
                    (idx, c(1.0, 0.0))
                };
                acc += vals[base as usize] * f * *wj;
            }
            acc / scale
        })
        .collect()
}

fn arc_fd(vals: &[C64], h: f64, order: usize) -> Vec<C64> {
    let n = vals.len();
    let width = (order + 4).max(5).min(n);
    let interior_r = if order >= 3 { 3 } else { 2 };
    let scale = h.powi(order as i32);
    (0..n)
        .map(|k| {
            let (lo, hi) = if k >= interior_r && k + interior_r < n {
                (k - interior_r, k + interior_r + 1)
            } else {
                let lo = k.saturating_sub(width / 2).min(n - width);
                (lo, lo + width)
            };
            let nodes: Vec<f64> = (lo..hi).map(|j| j as f64).collect();
            let w = fd_weights(k as f64, &nodes, order);
            let mut acc = c(0.0, 0.0);
            for (j, wj) in (lo..hi).zip(&w) {
                acc += vals[j] * *wj;
            }
            acc / scale
        })
        .collect()
}

/// Fourier derivative of a sequence with `v(s + T) = twist·v(s)`.
pub fn spectral_derivative(vals: &[C64], h: f64, order: usize, twist: C64) -> Vec<C64> {
    let n = vals.len();
    let period = h * n as f64;
    let phi = twist.arg();
    let shift = phi / period;
    let mut buf: Vec<C64> = vals
        .iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(1.0, -shift * k as f64 * h))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    for (k, b) in buf.iter_mut().enumerate() {
        let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
        let mut factor = I * (2.0 * PI * kk / period + shift);
        if n.is_multiple_of(2) && k == n / 2 && order % 2 == 1 && phi == 0.0 {
            factor = c(0.0, 0.0);
        }
        *b *= factor.powi(order as i32);
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(k, v)| v / n as f64 * C64::from_polar(1.0, shift * k as f64 * h))
        .collect()
}

/// Scale-normalized `|det(Γ,Γ′,Γ″)|`.
fn normalized_det(j: &[PseudoVector; 4]) -> f64 {
    let d = det_columns(&j[0], &j[1], &j[2]).norm();
    d / (j[0].norm() * j[1].norm() * j[2].norm()).max(1e-300)
}

pub fn transversality_check(curve: &SampledCurve) -> Result<bool, CurveError> {
    let jets = curve.lift_jets(1)?;
    let mut sign = 0.0;
    for j in &jets {
        let im = herm_product(&j[0], &j[1]).im;
        if im.abs() <= 1e-12 * j[0].norm() * j[1].norm() {
            return Ok(false);
        }
        if sign == 0.0 {
            sign = im.signum();
        } else if im.signum() != sign {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Strain density of the Wilczynski-normalized lift at every sample.
pub fn strain_density(curve: &SampledCurve) -> Result<Vec<f64>, CurveError> {
    let jets = curve.lift_jets(2)?;
    jets.iter()
        .enumerate()
        .map(|(k, j)| {
            let p = herm_product(&j[0], &j[1]);
            if p.im.abs() <= 1e-12 * j[0].norm() * j[1].norm() {
                return Err(CurveError::NonTransversal(k));
            }
            let det = det_columns(&j[0], &j[1], &j[2]).norm();
            if det == 0.0 {
                return Err(CurveError::InflectionPresent(1));
            }
            // the Wilczynski rescaling multiplies <Γ,Γ'> by |det|^(-2/3)
            Ok((I / (p * det.powf(-2.0 / 3.0))).re)
        })
        .collect()
}

/// Parameters of samples whose scale-normalized determinant is below `tol_det`.
pub fn inflection_scan(curve: &SampledCurve, tol_det: f64) -> Result<Vec<f64>, CurveError> {
    let jets = curve.lift_jets(2)?;
    Ok(jets
        .iter()
        .zip(&curve.params)
        .filter(|(j, _)| normalized_det(j) < tol_det)
        .map(|(_, &t)| t)
        .collect())
}

/// Rescales the lift so that `det(Γ,Γ′,Γ″) = −1`, following a continuous
/// cube-root branch. For closed curves the output monodromy is the cube root
/// of unity picked up around the loop.
pub fn normalize_wilczynski(curve: &SampledCurve) -> Result<SampledCurve, CurveError> {
    normalize_wilczynski_with(curve, DEFAULT_TOL_DET)
}

pub fn normalize_wilczynski_with(curve: &SampledCurve, tol_det: f64) -> Result<SampledCurve, CurveError> {
    let jets = curve.lift_jets(2)?;
    let flagged = jets.iter().filter(|j| normalized_det(j) < tol_det).count();
    if flagged > 0 {
        return Err(CurveError::InflectionPresent(flagged));
    }
    let dets: Vec<C64> = jets.iter().map(|j| det_columns(&j[0], &j[1], &j[2])).collect();
    if dets.iter().all(|d| (d + 1.0).norm() <= NORMALIZED_TOL) {
        // rescaling by a factor this close to 1 would only feed derivative
        // noise back into the lift
        return Ok(SampledCurve {
            params: curve.params.clone(),
            samples: Samples::Lift(curve.lift()),
            periodic: curve.periodic,
            period: curve.period,
            monodromy: curve.lift_monodromy(),
            scheme: curve.scheme,
        });
    }
    // f³ = −1/det along an unwrapped branch, starting near 1
    let target = |d: C64| -d.inv();
    let mut arg = target(dets[0]).arg();
    let mut prev = target(dets[0]);
    let mut factors = Vec::with_capacity(dets.len());
    let start = pick_near_one(C64::from_polar(target(dets[0]).norm().cbrt(), arg / 3.0));
    let offset = start.arg() - arg / 3.0;
    for d in &dets {
        let t = target(*d);
        arg += (t / prev).arg();
        prev = t;
        factors.push(C64::from_polar(t.norm().cbrt(), arg / 3.0 + offset));
    }
    let lift = curve.lift();
    let mut monodromy = c(1.0, 0.0);
    if curve.periodic {
        let m_in = curve.lift_monodromy();
        let t_end = target(dets[0] * m_in.powi(3));
        let arg_end = arg + (t_end / prev).arg();
        let f_end = C64::from_polar(t_end.norm().cbrt(), arg_end / 3.0 + offset);
        monodromy = m_in * f_end / factors[0];
        if curve.scheme == DerivativeScheme::Spectral {
            factors = spectral_denoise(&factors, f_end / factors[0]);
        }
    }
    let out: Vec<PseudoVector> = lift.iter().zip(&factors).map(|(g, f)| g * *f).collect();
    Ok(SampledCurve {
        params: curve.params.clone(),
        samples: Samples::Lift(out),
        periodic: curve.periodic,
        period: curve.period,
        monodromy,
        scheme: curve.scheme,
    })
}

fn pick_near_one(z: C64) -> C64 {
    (0..3)
        .map(|k| z * C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0))
        .max_by(|a, b| a.re.total_cmp(&b.re))
        .unwrap()
}

/// The cube root of unity closest to `z`, with its distance.
pub fn nearest_cube_root(z: C64) -> (C64, f64) {
    (0..3)
        .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0))
        .map(|r| (r, (z - r).norm()))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .unwrap()
}

fn hermite_cubic(t: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64) -> (f64, f64) {
    let u = t / h;
    let h00 = 2.0 * u.powi(3) - 3.0 * u * u + 1.0;
    let h10 = u.powi(3) - 2.0 * u * u + u;
    let h01 = -2.0 * u.powi(3) + 3.0 * u * u;
    let h11 = u.powi(3) - u * u;
    let val = h00 * y0 + h10 * h * d0 + h01 * y1 + h11 * h * d1;
    let dval = ((6.0 * u * u - 6.0 * u) * y0 + (6.0 * u - 6.0 * u * u) * y1) / h
        + (3.0 * u * u - 4.0 * u + 1.0) * d0
        + (3.0 * u * u - 2.0 * u) * d1;
    (val, dval)
}

/// Quintic Hermite interpolation from values, first and second derivatives.
fn hermite_quintic(u: f64, h: f64, a: &[PseudoVector; 3], b: &[PseudoVector; 3]) -> PseudoVector {
    let u2 = u * u;
    let u3 = u2 * u;
    let u4 = u3 * u;
    let u5 = u4 * u;
    let h0 = 1.0 - 10.0 * u3 + 15.0 * u4 - 6.0 * u5;
    let h1 = u - 6.0 * u3 + 8.0 * u4 - 3.0 * u5;
    let h2 = 0.5 * (u2 - 3.0 * u3 + 3.0 * u4 - u5);
    let g0 = 10.0 * u3 - 15.0 * u4 + 6.0 * u5;
    let g1 = -4.0 * u3 + 7.0 * u4 - 3.0 * u5;
    let g2 = 0.5 * (u3 - 2.0 * u4 + u5);
    a[0] * c(h0, 0.0)
        + a[1] * c(h1 * h, 0.0)
        + a[2] * c(h2 * h * h, 0.0)
        + b[0] * c(g0, 0.0)
        + b[1] * c(g1 * h, 0.0)
        + b[2] * c(g2 * h * h, 0.0)
}

/// Resamples a Wilczynski lift on a uniform grid of its natural parameter
/// and rescales it so that the result is again a Wilczynski lift.
pub fn natural_reparametrize(curve: &SampledCurve) -> Result<SampledCurve, CurveError> {
    let h = curve.step()?;
    let jets = curve.lift_jets(2)?;
    let n = jets.len();
    let a: Vec<f64> = jets
        .iter()
        .enumerate()
        .map(|(k, j)| {
            let p = herm_product(&j[0], &j[1]);
            if p.im.abs() <= 1e-12 * j[0].norm() * j[1].norm() {
                return Err(CurveError::NonTransversal(k));
            }
            Ok((I / p).re)
        })
        .collect::<Result<_, _>>()?;
    if let Some(k) = a.iter().position(|&v| v <= 0.0) {
        return Err(CurveError::NonTransversal(k));
    }
    if curve.periodic && curve.scheme == DerivativeScheme::Spectral {
        let smooth: Vec<f64> = spectral_denoise(&a.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>(), c(1.0, 0.0))
            .iter()
            .map(|z| z.re)
            .collect();
        return Ok(spectral_reparametrize(curve, &smooth, h));
    }
    let da = curve.differentiate_real(&a, 1)?;
    let intervals = if curve.periodic { n } else { n - 1 };
    let mut cum = vec![0.0; intervals + 1];
    for k in 0..intervals {
        let k1 = (k + 1) % n;
        cum[k + 1] = cum[k] + 0.5 * h * (a[k] + a[k1]) + h * h / 12.0 * (da[k] - da[k1]);
    }
    let total = cum[intervals];
    let m = n;
    let targets: Vec<f64> = if curve.periodic {
        (0..m).map(|j| j as f64 * total / m as f64).collect()
    } else {
        (0..m).map(|j| j as f64 * total / (m - 1) as f64).collect()
    };
    let mut lift = Vec::with_capacity(m);
    let mono = curve.lift_monodromy();
    let mut k = 0usize;
    for &sig in &targets {
        while k + 1 < intervals && cum[k + 1] <= sig {
            k += 1;
        }
        let k1 = (k + 1) % n;
        let (y0, y1) = (cum[k], cum[k + 1]);
        // safeguarded Newton on the cubic Hermite model of the strain integral
        let (mut lo, mut hi) = (0.0, h);
        let mut t = h * (sig - y0) / (y1 - y0).max(1e-300);
        for _ in 0..60 {
            let (v, dv) = hermite_cubic(t, h, y0, y1, a[k], a[k1]);
            let f = v - sig;
            if f > 0.0 {
                hi = t;
            } else {
                lo = t;
            }
            let mut next = t - f / dv;
            if !(next > lo && next < hi) || dv <= 0.0 {
                next = 0.5 * (lo + hi);
            }
            if (next - t).abs() <= 1e-15 * h {
                t = next;
                break;
            }
            t = next;
        }
        let wrap = if k1 == 0 && curve.periodic { mono } else { c(1.0, 0.0) };
        let ja = [jets[k][0], jets[k][1], jets[k][2]];
        let jb = [jets[k1][0] * wrap, jets[k1][1] * wrap, jets[k1][2] * wrap];
        let g = hermite_quintic(t / h, h, &ja, &jb);
        let (av, _) = hermite_cubic(t, h, a[k], a[k1], da[k], da[k1]);
        lift.push(g * c(av, 0.0));
    }
    Ok(SampledCurve {
        params: targets,
        samples: Samples::Lift(lift),
        periodic: curve.periodic,
        period: if curve.periodic { Some(total) } else { None },
        monodromy: mono,
        scheme: curve.scheme,
    })
}

/// Drops the Fourier modes of a twisted-periodic sequence beyond the last
/// one standing clear of the roundoff floor. The floor is read off the top
/// quarter of the spectrum, so under-resolved data comes back unchanged.
pub fn spectral_denoise(vals: &[C64], twist: C64) -> Vec<C64> {
    let n = vals.len();
    if n < 16 {
        return vals.to_vec();
    }
    let shift = twist.arg() / n as f64;
    let mut buf: Vec<C64> = vals
        .iter()
        .enumerate()
        .map(|(k, v)| v * C64::from_polar(1.0, -shift * k as f64))
        .collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(n).process(&mut buf);
    let freq = |k: usize| k.min(n - k);
    let mut band: Vec<f64> = (0..n).filter(|&k| 8 * freq(k) >= 3 * n).map(|k| buf[k].norm()).collect();
    band.sort_by(f64::total_cmp);
    let floor = band[band.len() / 2];
    let peak = buf.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let threshold = (50.0 * floor).max(1e-15 * peak);
    let cutoff = (0..n).filter(|&k| buf[k].norm() > threshold).map(freq).max().unwrap_or(0);
    for (k, b) in buf.iter_mut().enumerate() {
        if freq(k) > cutoff {
            *b = c(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(n).process(&mut buf);
    buf.iter()
        .enumerate()
        .map(|(k, v)| v / n as f64 * C64::from_polar(1.0, shift * k as f64))
        .collect()
}

/// Trigonometric interpolant of samples with `v(t + T) = twist·v(t)`.
struct FourierInterpolant {
    /// `(frequency, coefficient)` pairs.
    terms: Vec<(f64, C64)>,
}

impl FourierInterpolant {
    fn fit(vals: &[C64], period: f64, twist: C64) -> Self {
        let n = vals.len();
        let h = period / n as f64;
        let shift = twist.arg() / period;
        let mut buf: Vec<C64> = vals
            .iter()
            .enumerate()
            .map(|(k, v)| v * C64::from_polar(1.0, -shift * k as f64 * h))
            .collect();
        FftPlanner::new().plan_fft_forward(n).process(&mut buf);
        let omega = 2.0 * PI / period;
        let mut terms = Vec::with_capacity(n + 1);
        for (k, b) in buf.iter().enumerate() {
            let b = b / n as f64;
            if n.is_multiple_of(2) && k == n / 2 {
                // split the Nyquist mode symmetrically
                let f = omega * (n / 2) as f64;
                terms.push((f + shift, b * 0.5));
                terms.push((-f + shift, b * 0.5));
                continue;
            }
            let kk = if k <= n / 2 { k as f64 } else { k as f64 - n as f64 };
            terms.push((omega * kk + shift, b));
        }
        FourierInterpolant { terms }
    }

    fn eval(&self, t: f64) -> C64 {
        self.terms.iter().map(|&(f, b)| b * C64::from_polar(1.0, f * t)).sum()
    }

    /// `∫₀ᵗ`, for untwisted series.
    fn integral(&self, t: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(f, b)| {
                if f == 0.0 {
                    (b * t).re
                } else {
                    (b * (C64::from_polar(1.0, f * t) - 1.0) / (I * f)).re
                }
            })
            .sum()
    }
}

fn spectral_reparametrize(curve: &SampledCurve, a: &[f64], h: f64) -> SampledCurve {
    use rayon::prelude::*;
    let n = a.len();
    let period = h * n as f64;
    let mono = curve.lift_monodromy();
    let lift = curve.lift();
    let comps: Vec<FourierInterpolant> = (0..3)
        .map(|c| FourierInterpolant::fit(&lift.iter().map(|g| g[c]).collect::<Vec<_>>(), period, mono))
        .collect();
    let strain = FourierInterpolant::fit(&a.iter().map(|&v| c(v, 0.0)).collect::<Vec<_>>(), period, c(1.0, 0.0));
    let total = strain.integral(period);
    let mean = total / period;
    let samples: Vec<PseudoVector> = (0..n)
        .into_par_iter()
        .map(|j| {
            let goal = j as f64 * total / n as f64;
            let (mut lo, mut hi) = (0.0, period);
            let mut t = goal / mean;
            for _ in 0..100 {
                let f = strain.integral(t) - goal;
                if f > 0.0 {
                    hi = t;
                } else {
                    lo = t;
                }
                let mut next = t - f / strain.eval(t).re;
                if !(next > lo && next < hi) {
                    next = 0.5 * (lo + hi);
                }
                if (next - t).abs() <= 1e-15 * period {
                    t = next;
                    break;
                }
                t = next;
            }
            let g = PseudoVector::new(comps[0].eval(t), comps[1].eval(t), comps[2].eval(t));
            g * c(strain.eval(t).re, 0.0)
        })
        .collect();
    SampledCurve {
        params: (0..n).map(|j| j as f64 * total / n as f64).collect(),
        samples: Samples::Lift(samples),
        periodic: true,
        period: Some(total),
        monodromy: mono,
        scheme: curve.scheme,
    }
}

/// Integral of the strain density over the sampled range.
pub fn total_strain_of(curve: &SampledCurve) -> Result<f64, CurveError> {
    let h = curve.step()?;
    let a = strain_density(curve)?;
    let da = curve.differentiate_real(&a, 1)?;
    let n = a.len();
    let intervals = if curve.periodic { n } else { n - 1 };
    let mut sum = 0.0;
    for k in 0..intervals {
        let k1 = (k + 1) % n;
        sum += 0.5 * h * (a[k] + a[k1]) + h * h / 12.0 * (da[k] - da[k1]);
    }
    Ok(sum)
}

/// Bending and twist of a natural Wilczynski lift.
pub fn bending_twist(curve: &SampledCurve) -> Result<(Vec<f64>, Vec<f64>), CurveError> {
    let jets = curve.lift_jets(2)?;
    let mut kappa = Vec::with_capacity(jets.len());
    let mut tau = Vec::with_capacity(jets.len());
    for j in &jets {
        let k = 0.5 * herm_product(&j[1], &j[1]).re;
        kappa.push(k);
        tau.push(herm_product(&j[2], &j[1]).im + 3.0 * k * k);
    }
    Ok((kappa, tau))
}

/// Per-sample Wilczynski data of a natural Wilczynski lift.
#[derive(Debug, Clone)]
pub struct WilczynskiData {
    pub params: Vec<f64>,
    pub lift: Vec<PseudoVector>,
    pub frames: Vec<PseudoMatrix>,
    pub kappa: Vec<f64>,
    pub tau: Vec<f64>,
    pub periodic: bool,
    pub period: Option<f64>,
    pub monodromy: C64,
}

/// Wilczynski frame `(F1, F2, F3)` from a lift jet and the invariants.
pub fn frame_from_jet(j: &[PseudoVector; 4], kappa: f64, tau: f64, dkappa: f64) -> PseudoMatrix {
    let f1 = j[0];
    let f3 = j[1] - j[0] * (I * kappa);
    let f2 = j[2] - j[1] * (I * 2.0 * kappa) - j[0] * c(tau + kappa * kappa, dkappa);
    Matrix3::from_columns(&[f1, f2, f3])
}

pub fn wilczynski_frame(curve: &SampledCurve) -> Result<WilczynskiData, CurveError> {
    let jets = curve.lift_jets(2)?;
    let (kappa, tau) = bending_twist(curve)?;
    let dk = curve.differentiate_real(&kappa, 1)?;
    let frames = jets
        .iter()
        .enumerate()
        .map(|(k, j)| frame_from_jet(j, kappa[k], tau[k], dk[k]))
        .collect();
    Ok(WilczynskiData {
        params: curve.params.clone(),
        lift: curve.lift(),
        frames,
        kappa,
        tau,
        periodic: curve.periodic,
        period: curve.period,
        monodromy: curve.monodromy,
    })
}

/// The normal of the chain tangent to the curve at the sample nearest `s`.
pub fn osculating_chain(curve: &SampledCurve, s: f64) -> Result<ChainSpec, CurveError> {
    let (lo, hi) = (curve.params[0], *curve.params.last().unwrap());
    let span_end = if curve.periodic { lo + curve.period.unwrap_or(0.0) } else { hi };
    if s < lo - 1e-12 || s > span_end + 1e-12 {
        return Err(CurveError::OutOfRange(s));
    }
    let jets = curve.lift_jets(2)?;
    let k = curve
        .params
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - s).abs().total_cmp(&(b.1 - s).abs()))
        .map(|(k, _)| k)
        .unwrap();
    if normalized_det(&jets[k]) < DEFAULT_TOL_DET {
        return Err(CurveError::InflectionPresent(1));
    }
    let n = h_orthogonal_complement(&jets[k][0], &jets[k][1])?;
    Ok(ChainSpec::new(n)?)
}

/// CR tangent, normal and `J` normal at a point, in Heisenberg coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Trihedron {
    pub base: HeisenbergPoint,
    pub t_vec: [f64; 3],
    pub n_vec: [f64; 3],
    pub jn_vec: [f64; 3],
}

/// Trihedron dual to the coframe of `F` pulled back to Heisenberg space.
pub fn trihedron_from_frame(f: &PseudoMatrix) -> Result<Trihedron, CurveError> {
    let a1: PseudoVector = f.column(0).into_owned();
    let a2: PseudoVector = f.column(1).into_owned();
    let lam = a1[0];
    if lam.norm() <= 1e-12 * a1.norm() {
        return Err(CurveError::NearInfinity(0));
    }
    let base = project(&a1)?;
    let mut m = nalgebra::Matrix3::<f64>::zeros();
    for j in 0..3 {
        let mut v = [0.0; 3];
        v[j] = 1.0;
        let dj = PseudoVector::new(
            c(0.0, 0.0),
            c(v[0], v[1]) * lam,
            c(v[2], base.x * v[0] + base.y * v[1]) * lam,
        );
        let a13 = (-I * herm_product(&a1, &dj)).re;
        let z = herm_product(&a2, &dj);
        m[(0, j)] = a13;
        m[(1, j)] = z.re;
        m[(2, j)] = z.im;
    }
    let inv = m
        .try_inverse()
        .ok_or_else(|| CurveError::FrameUnavailable("singular coframe".into()))?;
    let col = |j: usize| [inv[(0, j)], inv[(1, j)], inv[(2, j)]];
    Ok(Trihedron { base, t_vec: col(0), n_vec: col(1), jn_vec: col(2) })
}

pub fn cr_trihedron(data: &WilczynskiData, index: usize) -> Result<Trihedron, CurveError> {
    let f = data
        .frames
        .get(index)
        .ok_or_else(|| CurveError::FrameUnavailable(format!("no sample {index}")))?;
    trihedron_from_frame(f).map_err(|e| match e {
        CurveError::NearInfinity(_) => CurveError::NearInfinity(index),
        other => other,
    })
}

/// Whether the dual curve is Legendrian, i.e. the twist vanishes.
pub fn dual_is_legendrian(tau: &[f64], tol: f64) -> bool {
    tau.iter().all(|t| t.abs() <= tol)
}

/// `ζ` of a vector at a trihedron's base point.
pub fn contact_component(t: &Trihedron, v: [f64; 3]) -> f64 {
    contact_form(&t.base, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{frame_generator, is_group_element, one_parameter_exp};
    use crate::sphere::{chain_from_normal, chain_through, ChainSpec};

    fn orbit(kappa: f64, tau: f64, n: usize, len: f64, periodic: bool) -> SampledCurve {
        let k = frame_generator(kappa, tau);
        let pts: Vec<PseudoVector> = (0..n)
            .map(|j| {
                let s = if periodic { j as f64 * len / n as f64 } else { j as f64 * len / (n - 1) as f64 };
                one_parameter_exp(&k, s).unwrap().column(0).into_owned()
            })
            .collect();
        if periodic {
            SampledCurve::periodic_lift(pts, len)
        } else {
            SampledCurve::arc_lift(pts, 0.0, len)
        }
    }

    #[test]
    fn fd_weights_match_textbook() {
        let w = fd_weights(0.0, &[-2.0, -1.0, 0.0, 1.0, 2.0], 1);
        let expect = [1.0 / 12.0, -2.0 / 3.0, 0.0, 2.0 / 3.0, -1.0 / 12.0];
        for (a, b) in w.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn spectral_derivative_with_twist() {
        let n = 32;
        let t = 2.0 * PI;
        let h = t / n as f64;
        let w = 1.0 / 3.0;
        let vals: Vec<C64> = (0..n).map(|k| C64::from_polar(1.0, w * k as f64 * h)).collect();
        let twist = C64::from_polar(1.0, w * t);
        let d = spectral_derivative(&vals, h, 1, twist);
        for (k, v) in d.iter().enumerate() {
            assert!((v - I * w * vals[k]).norm() < 1e-12);
        }
    }

    #[test]
    fn orbit_invariants_and_frames() {
        let (kappa, tau) = (0.3, -1.2);
        let curve = orbit(kappa, tau, 400, 6.0, false);
        assert!(transversality_check(&curve).unwrap());
        let a = strain_density(&curve).unwrap();
        assert!(a.iter().all(|v| (v - 1.0).abs() < 1e-7));
        assert!(a[5..395].iter().all(|v| (v - 1.0).abs() < 1e-8));
        let (k, t) = bending_twist(&curve).unwrap();
        assert!(k.iter().all(|v| (v - kappa).abs() < 1e-7));
        assert!(t.iter().all(|v| (v - tau).abs() < 1e-6));
        let data = wilczynski_frame(&curve).unwrap();
        // one-sided stencils at the two ends of an arc are less accurate
        for (j, f) in data.frames.iter().enumerate().take(395).skip(5) {
            assert!(is_group_element(f, 1e-7), "frame {j}");
            let expect = one_parameter_exp(&frame_generator(kappa, tau), data.params[j]).unwrap();
            let err = crate::hermitian::max_abs(&(f - expect));
            assert!(err < 1e-7 * crate::hermitian::max_abs(&expect), "frame {j}: {err:e}");
        }
    }

    #[test]
    fn normalization_recovers_wilczynski_lift() {
        let base = orbit(0.3, -1.2, 300, 5.0, false);
        let lift = base.lift();
        let scaled: Vec<PseudoVector> = lift
            .iter()
            .zip(&base.params)
            .map(|(g, &s)| g * C64::from_polar(1.0 + 0.3 * s.sin(), 0.7 * s))
            .collect();
        let curve = SampledCurve::arc_lift(scaled, 0.0, 5.0);
        let w = normalize_wilczynski(&curve).unwrap();
        let (root, _) = nearest_cube_root(w.lift()[0][0] / lift[0][0]);
        for (a, b) in w.lift().iter().zip(&lift).take(295).skip(5) {
            assert!((a - b * root).norm() < 1e-7);
        }
        let again = normalize_wilczynski(&w).unwrap();
        // finite differences leave an O(h^4) determinant defect
        for (a, b) in again.lift().iter().zip(w.lift().iter()).take(295).skip(5) {
            assert!((a - b).norm() < 1e-7);
        }
    }

    #[test]
    fn natural_reparametrization_of_doubled_speed() {
        let base = orbit(0.3, -1.2, 400, 6.0, false);
        // same orbit sampled at t with s = 2t, rescaled to a Wilczynski lift
        let lift: Vec<PseudoVector> = base.lift().iter().map(|g| g * c(0.5, 0.0)).collect();
        let curve = SampledCurve::arc_lift(lift, 0.0, 3.0);
        let w = normalize_wilczynski(&curve).unwrap();
        let a = strain_density(&w).unwrap();
        assert!(a.iter().all(|v| (v - 2.0).abs() < 1e-6));
        assert!((total_strain_of(&w).unwrap() - 6.0).abs() < 1e-7);
        let nat = natural_reparametrize(&w).unwrap();
        assert!((nat.params.last().unwrap() - 6.0).abs() < 1e-7);
        let a = strain_density(&nat).unwrap();
        assert!(a.iter().all(|v| (v - 1.0).abs() < 1e-6));
    }

    #[test]
    fn chains_are_inflectional() {
        let s = PseudoVector::new(c(0.9, 0.0), C64::from_polar(1.0, PI / 4.0), c(0.0, -1.0));
        let spec = ChainSpec::new(s).unwrap();
        let chain = chain_from_normal(&spec, 128).unwrap();
        assert!(transversality_check(&chain).unwrap());
        assert_eq!(inflection_scan(&chain, DEFAULT_TOL_DET).unwrap().len(), 128);
        assert!(matches!(normalize_wilczynski(&chain), Err(CurveError::InflectionPresent(128))));
        let through = chain_through(HeisenbergPoint::new(0.2, 0.1, 0.0), [1.0, 0.3, 2.0], 64).unwrap();
        assert!(transversality_check(&through).unwrap());
    }

    #[test]
    fn osculating_chain_of_a_chain_is_itself() {
        let s = PseudoVector::new(c(0.9, 0.0), C64::from_polar(1.0, PI / 4.0), c(0.0, -1.0));
        let spec = ChainSpec::new(s).unwrap();
        let chain = chain_from_normal(&spec, 256).unwrap();
        // a chain is inflectional everywhere, so only the complement is defined
        let jets = chain.lift_jets(1).unwrap();
        let n = h_orthogonal_complement(&jets[10][0], &jets[10][1]).unwrap();
        assert!(ChainSpec::new(n).unwrap().same_as(&spec, 1e-8));
    }

    #[test]
    fn crossing_the_contact_plane_is_not_transversal() {
        // z' = cos t changes sign while x, y stay fixed near the origin
        let n = 200;
        let pts: Vec<HeisenbergPoint> = (0..n)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / n as f64;
                HeisenbergPoint::new(0.0, 0.0, t.sin())
            })
            .collect();
        let curve = SampledCurve::periodic_heisenberg(pts, 2.0 * PI);
        assert!(!transversality_check(&curve).unwrap());
    }

    #[test]
    fn trihedron_on_an_orbit() {
        let curve = orbit(0.3, -1.2, 200, 4.0, false);
        let data = wilczynski_frame(&curve).unwrap();
        let jets = curve.lift_jets(1).unwrap();
        for idx in [20, 100, 180] {
            let t = cr_trihedron(&data, idx).unwrap();
            assert!(contact_component(&t, t.n_vec).abs() < 1e-8);
            assert!(contact_component(&t, t.jn_vec).abs() < 1e-8);
            assert!(contact_component(&t, t.t_vec) > 0.0);
            let v = crate::sphere::project_velocity(&jets[idx][0], &jets[idx][1]);
            for k in 0..3 {
                assert!((t.t_vec[k] - v[k]).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn too_few_samples() {
        let c5 = orbit(0.1, 0.1, 4, 1.0, false);
        assert_eq!(transversality_check(&c5), Err(CurveError::TooFewSamples(4)));
    }
}
