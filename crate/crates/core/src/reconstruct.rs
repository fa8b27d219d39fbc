//! Reconstruction of a Wilczynski frame from prescribed bending and twist,
//! and congruence of closed curves.

use crate::curves::{
    normalize_wilczynski, strain_density, wilczynski_frame, CurveError, DerivativeScheme,
    SampledCurve, Samples,
};
use crate::hermitian::{
    c, form, frame_generator, group_inverse, group_residual, is_group_element, AlgebraError,
    PseudoMatrix, PseudoVector, C64,
};
use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReconError {
    #[error("step rejected at s = {at}: local error estimate {estimate:.3e} exceeds budget {budget:.3e}")]
    StepRejected { at: f64, estimate: f64, budget: f64 },
    #[error("step must be positive and the range non-empty (step {0})")]
    InvalidStep(f64),
    #[error("profile evaluated outside its range at s = {0}")]
    OutOfRange(f64),
    #[error("curve is not closed")]
    NotClosed,
    #[error("curve is not naturally parametrized (max |a - 1| = {0:.3e})")]
    NotNatural(f64),
    #[error("curves are sampled differently ({0} vs {1} samples)")]
    GridMismatch(usize, usize),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// Bending and twist as functions of the natural parameter.
#[derive(Clone)]
pub enum InvariantProfile {
    Constant { kappa: f64, tau: f64 },
    Function(Arc<dyn Fn(f64) -> (f64, f64) + Send + Sync>),
    /// Uniformly sampled values, interpolated by local cubics.
    Sampled { start: f64, step: f64, kappa: Vec<f64>, tau: Vec<f64> },
}

impl fmt::Debug for InvariantProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InvariantProfile::Constant { kappa, tau } => write!(f, "Constant({kappa}, {tau})"),
            InvariantProfile::Function(_) => f.write_str("Function"),
            InvariantProfile::Sampled { kappa, .. } => write!(f, "Sampled({} values)", kappa.len()),
        }
    }
}

fn cubic_interp(vals: &[f64], start: f64, step: f64, s: f64) -> Option<f64> {
    let n = vals.len();
    let x = (s - start) / step;
    if n == 0 || x < -1e-9 || x > (n - 1) as f64 + 1e-9 {
        return None;
    }
    if n < 4 {
        let k = (x.floor().max(0.0) as usize).min(n.saturating_sub(2));
        if n == 1 {
            return Some(vals[0]);
        }
        let u = x - k as f64;
        return Some(vals[k] * (1.0 - u) + vals[k + 1] * u);
    }
    let k = (x.floor() as isize - 1).clamp(0, n as isize - 4) as usize;
    let u = x - k as f64;
    let mut out = 0.0;
    for i in 0..4 {
        let mut w = 1.0;
        for j in 0..4 {
            if j != i {
                w *= (u - j as f64) / (i as f64 - j as f64);
            }
        }
        out += w * vals[k + i];
    }
    Some(out)
}

impl InvariantProfile {
    pub fn constant(kappa: f64, tau: f64) -> Self {
        InvariantProfile::Constant { kappa, tau }
    }

    pub fn function(f: impl Fn(f64) -> (f64, f64) + Send + Sync + 'static) -> Self {
        InvariantProfile::Function(Arc::new(f))
    }

    pub fn eval(&self, s: f64) -> Result<(f64, f64), ReconError> {
        match self {
            InvariantProfile::Constant { kappa, tau } => Ok((*kappa, *tau)),
            InvariantProfile::Function(f) => Ok(f(s)),
            InvariantProfile::Sampled { start, step, kappa, tau } => {
                let k = cubic_interp(kappa, *start, *step, s).ok_or(ReconError::OutOfRange(s))?;
                let t = cubic_interp(tau, *start, *step, s).ok_or(ReconError::OutOfRange(s))?;
                Ok((k, t))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReconOptions {
    /// Largest accepted per-step error estimate, relative to the frame size.
    pub error_budget: f64,
    /// Re-impose the group relations after every step.
    pub project: bool,
}

impl Default for ReconOptions {
    fn default() -> Self {
        ReconOptions { error_budget: 1e-6, project: true }
    }
}

#[derive(Debug, Clone)]
pub struct Reconstruction {
    pub params: Vec<f64>,
    pub frames: Vec<PseudoMatrix>,
    /// Largest `‖conj(F)^T h F − h‖` along the run.
    pub max_drift: f64,
    /// Largest Richardson estimate of the local error.
    pub max_error_estimate: f64,
}

/// Scale-relative group defect above which frames are corrected.
pub const PROJECTION_TRIGGER: f64 = 1e-11;

/// One symmetric correction towards the group, `F(I + ½(I − h F^H h F))`,
/// repeated until converged, followed by the determinant fix.
pub fn project_to_group(f: &PseudoMatrix) -> PseudoMatrix {
    let h = form();
    let id = PseudoMatrix::identity();
    let mut g = *f;
    // the correction is amplified by the conditioning of F, so it only runs
    // once the defect is well above rounding level
    let floor = PROJECTION_TRIGGER * crate::hermitian::max_abs(f).max(1.0).powi(2);
    if crate::hermitian::max_abs(&(id - h * g.adjoint() * h * g)) <= floor
        && (g.determinant() - c(1.0, 0.0)).norm() <= floor
    {
        return g;
    }
    for _ in 0..4 {
        let defect = id - h * g.adjoint() * h * g;
        if crate::hermitian::max_abs(&defect) <= 1e-3 * floor {
            break;
        }
        g *= id + defect * c(0.5, 0.0);
    }
    let d = g.determinant();
    g / d.powf(1.0 / 3.0)
}

fn rk4_step(profile: &InvariantProfile, f: &PseudoMatrix, s: f64, h: f64) -> Result<PseudoMatrix, ReconError> {
    let gen = |t: f64| -> Result<PseudoMatrix, ReconError> {
        let (k, tau) = profile.eval(t)?;
        Ok(frame_generator(k, tau))
    };
    let hc = c(h, 0.0);
    let half = c(0.5 * h, 0.0);
    let k1 = f * gen(s)?;
    let k2 = (f + k1 * half) * gen(s + 0.5 * h)?;
    let k3 = (f + k2 * half) * gen(s + 0.5 * h)?;
    let k4 = (f + k3 * hc) * gen(s + h)?;
    Ok(f + (k1 + k2 * c(2.0, 0.0) + k3 * c(2.0, 0.0) + k4) * (hc / c(6.0, 0.0)))
}

/// Integrates `F′ = F·K(s)` from `f0` over `[s0, s1]` with a step no larger
/// than `step`.
pub fn reconstruct(
    profile: &InvariantProfile,
    f0: &PseudoMatrix,
    s0: f64,
    s1: f64,
    step: f64,
    options: ReconOptions,
) -> Result<Reconstruction, ReconError> {
    if !(step > 0.0) || !(s1 > s0) {
        return Err(ReconError::InvalidStep(step));
    }
    if !is_group_element(f0, 1e-10) {
        return Err(AlgebraError::AlgebraViolation { residual: group_residual(f0) }.into());
    }
    let n = ((s1 - s0) / step - 1e-9).ceil().max(1.0) as usize;
    let h = (s1 - s0) / n as f64;
    let mut params = Vec::with_capacity(n + 1);
    let mut frames = Vec::with_capacity(n + 1);
    params.push(s0);
    frames.push(*f0);
    let mut f = *f0;
    let mut max_drift = group_residual(f0);
    let mut max_err: f64 = 0.0;
    for k in 0..n {
        let s = s0 + k as f64 * h;
        let full = rk4_step(profile, &f, s, h)?;
        let mid = rk4_step(profile, &f, s, 0.5 * h)?;
        let fine = rk4_step(profile, &mid, s + 0.5 * h, 0.5 * h)?;
        let estimate = crate::hermitian::max_abs(&(fine - full)) / 15.0 / crate::hermitian::max_abs(&f).max(1.0);
        if estimate > options.error_budget {
            return Err(ReconError::StepRejected { at: s, estimate, budget: options.error_budget });
        }
        max_err = max_err.max(estimate);
        f = if options.project { project_to_group(&fine) } else { fine };
        max_drift = max_drift.max(group_residual(&f));
        params.push(s0 + (k + 1) as f64 * h);
        frames.push(f);
    }
    Ok(Reconstruction { params, frames, max_drift, max_error_estimate: max_err })
}

impl Reconstruction {
    /// The curve `F1` as an arc including both ends.
    pub fn curve(&self) -> SampledCurve {
        let lift: Vec<PseudoVector> = self.frames.iter().map(|f| f.column(0).into_owned()).collect();
        SampledCurve::arc_lift(lift, self.params[0], *self.params.last().unwrap())
    }

    /// The cube root of unity `ε` with `F(end) = ε F(start)`, if the frame closes.
    pub fn closing_factor(&self, tol: f64) -> Option<C64> {
        let a = self.frames[0];
        let b = *self.frames.last().unwrap();
        (0..3)
            .map(|k| C64::from_polar(1.0, 2.0 * PI * k as f64 / 3.0))
            .find(|e| crate::hermitian::max_abs(&(b - a * *e)) <= tol * crate::hermitian::max_abs(&a).max(1.0))
    }

    /// The reconstructed curve over one period, as a closed lift.
    pub fn periodic_curve(&self, tol: f64) -> Result<SampledCurve, ReconError> {
        let eps = self.closing_factor(tol).ok_or(ReconError::NotClosed)?;
        let n = self.frames.len() - 1;
        // spread the closing defect linearly so that the samples close exactly;
        // a jump at the seam would be amplified by every derivative
        let first = self.frames[0].column(0).into_owned();
        let defect = first * eps - self.frames[n].column(0);
        let lift: Vec<PseudoVector> = self.frames[..n]
            .iter()
            .enumerate()
            .map(|(k, f)| f.column(0) + defect * c(k as f64 / n as f64, 0.0))
            .collect();
        let period = self.params[n] - self.params[0];
        let mut curve = SampledCurve::periodic_lift(lift, period).with_scheme(DerivativeScheme::Spectral);
        curve.params = self.params[..n].to_vec();
        curve.monodromy = eps;
        Ok(curve)
    }
}

#[derive(Debug, Clone)]
pub struct Congruence {
    pub congruent: bool,
    /// Parameter shift `s₀` aligning the profiles.
    pub shift: f64,
    /// Largest bending/twist mismatch at the best shift.
    pub profile_mismatch: f64,
    /// `F_B(0)·F_A(s₀)⁻¹`, when the profiles align.
    pub element: Option<PseudoMatrix>,
    pub cube_root: Option<C64>,
    /// Largest relative `‖A·Γ_A(s+s₀) − εΓ_B(s)‖`.
    pub transport_residual: f64,
}

fn natural_defect(curve: &SampledCurve) -> Result<f64, ReconError> {
    Ok(strain_density(curve)?.iter().map(|a| (a - 1.0).abs()).fold(0.0, f64::max))
}

/// Whether two closed natural curves on equal grids differ by a group element
/// and a parameter shift.
pub fn congruence_test(a: &SampledCurve, b: &SampledCurve, tol: f64) -> Result<Congruence, ReconError> {
    if !a.periodic || !b.periodic {
        return Err(ReconError::NotClosed);
    }
    if a.len() != b.len() {
        return Err(ReconError::GridMismatch(a.len(), b.len()));
    }
    for curve in [a, b] {
        let d = natural_defect(curve)?;
        if d > 1e-6 {
            return Err(ReconError::NotNatural(d));
        }
    }
    let da = wilczynski_frame(&normalize_wilczynski(a)?)?;
    let db = wilczynski_frame(&normalize_wilczynski(b)?)?;
    let n = da.kappa.len();
    let (ta, tb) = (a.period.unwrap_or(0.0), b.period.unwrap_or(0.0));
    let mut best = (0usize, f64::INFINITY);
    if (ta - tb).abs() <= tol * ta.abs().max(1.0) {
        for k in 0..n {
            let mut worst: f64 = 0.0;
            for j in 0..n {
                let i = (j + k) % n;
                worst = worst
                    .max((da.kappa[i] - db.kappa[j]).abs())
                    .max((da.tau[i] - db.tau[j]).abs());
                if worst >= best.1 {
                    break;
                }
            }
            if worst < best.1 {
                best = (k, worst);
            }
        }
    }
    let (k, mismatch) = best;
    let step = ta / n as f64;
    let mut out = Congruence {
        congruent: false,
        shift: k as f64 * step,
        profile_mismatch: mismatch,
        element: None,
        cube_root: None,
        transport_residual: f64::INFINITY,
    };
    if !(mismatch <= tol) {
        return Ok(out);
    }
    let elem = db.frames[0] * group_inverse(&da.frames[k]);
    let lift_a = |i: usize| {
        if i >= n {
            da.lift[i - n] * da.monodromy
        } else {
            da.lift[i]
        }
    };
    let first = elem * lift_a(k);
    let m = (0..3).max_by(|&i, &j| db.lift[0][i].norm().total_cmp(&db.lift[0][j].norm())).unwrap();
    let (eps, _) = crate::curves::nearest_cube_root(first[m] / db.lift[0][m]);
    let mut residual: f64 = 0.0;
    for j in 0..n {
        let moved = elem * lift_a(j + k);
        residual = residual.max((moved - db.lift[j] * eps).norm() / db.lift[j].norm());
    }
    out.element = Some(elem);
    out.cube_root = Some(eps);
    out.transport_residual = residual;
    out.congruent = residual <= tol.max(1e-6);
    Ok(out)
}

/// A closed lift sample set from an explicit natural parametrization.
pub fn sample_closed(lift: impl Fn(f64) -> PseudoVector, period: f64, n: usize) -> SampledCurve {
    let pts = (0..n).map(|k| lift(k as f64 * period / n as f64)).collect();
    SampledCurve {
        params: (0..n).map(|k| k as f64 * period / n as f64).collect(),
        samples: Samples::Lift(pts),
        periodic: true,
        period: Some(period),
        monodromy: c(1.0, 0.0),
        scheme: DerivativeScheme::CentralFd4,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curves::bending_twist;
    use crate::hermitian::{det_columns, herm_product, max_abs, one_parameter_exp};

    #[test]
    fn constant_zero_profile_matches_exponential() {
        let rec = reconstruct(&InvariantProfile::constant(0.0, 0.0), &PseudoMatrix::identity(), 0.0, 10.0, 0.01, ReconOptions::default()).unwrap();
        let k = frame_generator(0.0, 0.0);
        for (s, f) in rec.params.iter().zip(&rec.frames).step_by(97) {
            let e = one_parameter_exp(&k, *s).unwrap();
            assert!(max_abs(&(f - e)) <= 1e-8 * max_abs(&e).max(1.0), "s = {s} err {}", max_abs(&(f - e)) / max_abs(&e));
        }
        // frames grow to ~2e3 here, so the defect is at its rounding floor
        let last = rec.frames.last().unwrap();
        assert!(group_residual(last) <= 1e-9 * max_abs(last).powi(2));
    }

    #[test]
    fn long_run_stays_on_group() {
        let (kappa, tau) = (-0.6425434254563303, -3.4925519611566256);
        let k = frame_generator(kappa, tau);
        let f0 = one_parameter_exp(&k, 0.3).unwrap();
        let rec = reconstruct(&InvariantProfile::constant(kappa, tau), &f0, 0.0, 1000.0, 0.01, ReconOptions::default()).unwrap();
        assert_eq!(rec.frames.len(), 100_001);
        assert!(rec.max_drift <= 1e-9);
        for f in &rec.frames {
            assert!((f.determinant() - c(1.0, 0.0)).norm() <= 1e-9);
        }
        let raw = reconstruct(&InvariantProfile::constant(kappa, tau), &f0, 0.0, 1000.0, 0.01, ReconOptions { project: false, ..Default::default() }).unwrap();
        assert!(raw.max_drift > rec.max_drift);
    }

    #[test]
    fn rejects_bad_initial_frame() {
        let bad = PseudoMatrix::identity() * c(2.0, 0.0);
        let r = reconstruct(&InvariantProfile::constant(0.0, 0.0), &bad, 0.0, 1.0, 0.1, ReconOptions::default());
        assert!(matches!(r, Err(ReconError::Algebra(_))));
    }

    #[test]
    fn step_budget() {
        let opts = ReconOptions { error_budget: 1e-14, project: true };
        let r = reconstruct(&InvariantProfile::constant(1.0, 2.0), &PseudoMatrix::identity(), 0.0, 1.0, 0.5, opts);
        assert!(matches!(r, Err(ReconError::StepRejected { .. })));
    }

    #[test]
    fn projection_restores_group() {
        let k = frame_generator(0.3, -1.2);
        let f = one_parameter_exp(&k, 0.7).unwrap();
        let noisy = f + PseudoMatrix::from_fn(|i, j| c(1e-6 * (i as f64 - j as f64), 1e-6 * (i * j) as f64));
        let p = project_to_group(&noisy);
        assert!(is_group_element(&p, 1e-13));
        assert!(max_abs(&(p - f)) < 1e-5);
    }

    #[test]
    fn sine_profile_round_trip() {
        let profile = InvariantProfile::function(|s: f64| (s.sin(), 0.0));
        let rec = reconstruct(&profile, &PseudoMatrix::identity(), 0.0, 6.0, 0.005, ReconOptions::default()).unwrap();
        let curve = rec.curve();
        let jets = curve.lift_jets(2).unwrap();
        for j in &jets {
            assert!((det_columns(&j[0], &j[1], &j[2]) + 1.0).norm() < 1e-6);
            assert!((herm_product(&j[0], &j[1]) - c(0.0, 1.0)).norm() < 1e-6);
        }
        let (kappa, tau) = bending_twist(&curve).unwrap();
        for (i, s) in curve.params.iter().enumerate().skip(5).take(curve.len() - 10) {
            assert!((kappa[i] - s.sin()).abs() < 1e-5);
            assert!(tau[i].abs() < 1e-5);
        }
    }

    #[test]
    fn sampled_profile_interpolates() {
        let start = 0.0;
        let step = 0.1;
        let kappa: Vec<f64> = (0..50).map(|k| (k as f64 * step).powi(3)).collect();
        let p = InvariantProfile::Sampled { start, step, kappa: kappa.clone(), tau: kappa };
        let (k, t) = p.eval(1.234).unwrap();
        assert!((k - 1.234f64.powi(3)).abs() < 1e-12);
        assert_eq!(k, t);
        assert!(matches!(p.eval(10.0), Err(ReconError::OutOfRange(_))));
    }
}
