//! The sphere as null lines of C^{2,1}, the Heisenberg chart, the maximal
//! torus and its cyclides, and chains.

use crate::curves::SampledCurve;
use crate::hermitian::{
    c, causal_character, herm_product, CausalCharacter, PseudoMatrix, PseudoVector, C64, I,
};
use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SphereError {
    #[error("point at infinity has no Heisenberg coordinates")]
    PointAtInfinity,
    #[error("vector is not null (|<v,v>| = {0:.3e})")]
    NotNull(f64),
    #[error("Clifford parameter {0} outside (0, sqrt 2)")]
    DomainError(f64),
    #[error("chain passes through the point at infinity")]
    ThroughInfinity,
    #[error("chain normal is not spacelike")]
    NotSpacelike,
    #[error("direction has no horizontal component")]
    DegenerateDirection,
    #[error("direction lies in the contact plane")]
    LegendrianDirection,
    #[error("need at least 3 samples")]
    TooFewSamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HeisenbergPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl HeisenbergPoint {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        HeisenbergPoint { x, y, z }
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Self {
        HeisenbergPoint { x: a[0], y: a[1], z: a[2] }
    }

    pub fn distance(&self, o: &HeisenbergPoint) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

/// Contact form `dz + x dy − y dx` evaluated on `v` at `p`.
pub fn contact_form(p: &HeisenbergPoint, v: [f64; 3]) -> f64 {
    v[2] + p.x * v[1] - p.y * v[0]
}

/// A null line, stored with unit Euclidean norm and first nonzero component
/// real and positive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpherePoint {
    rep: PseudoVector,
}

impl SpherePoint {
    pub fn new(v: PseudoVector) -> Result<Self, SphereError> {
        let n2 = v.norm_squared();
        let q = herm_product(&v, &v).re;
        if n2 == 0.0 || q.abs() > 1e-10 * n2 {
            return Err(SphereError::NotNull(q));
        }
        let k = (0..3).find(|&k| v[k].norm() > 1e-14 * n2.sqrt()).unwrap_or(0);
        let phase = v[k] / c(v[k].norm(), 0.0);
        let rep = v / (phase * n2.sqrt());
        Ok(SpherePoint { rep })
    }

    pub fn representative(&self) -> PseudoVector {
        self.rep
    }

    pub fn same_as(&self, o: &SpherePoint, tol: f64) -> bool {
        (1.0 - self.rep.dotc(&o.rep).norm()).abs() <= tol
    }
}

/// `(1, x+iy, z + i(x²+y²)/2)`.
pub fn chart_vector(p: &HeisenbergPoint) -> PseudoVector {
    PseudoVector::new(
        c(1.0, 0.0),
        c(p.x, p.y),
        c(p.z, 0.5 * (p.x * p.x + p.y * p.y)),
    )
}

pub fn heisenberg_chart(p: &HeisenbergPoint) -> SpherePoint {
    SpherePoint::new(chart_vector(p)).expect("chart image is null")
}

/// Heisenberg coordinates of the line through `v`.
pub fn project(v: &PseudoVector) -> Result<HeisenbergPoint, SphereError> {
    if v[0].norm() <= 1e-12 * v.norm() {
        return Err(SphereError::PointAtInfinity);
    }
    let w = v[1] / v[0];
    Ok(HeisenbergPoint::new(w.re, w.im, (v[2] / v[0]).re))
}

pub fn heisenberg_projection(p: &SpherePoint) -> Result<HeisenbergPoint, SphereError> {
    project(&p.rep)
}

/// Velocity of the projection of a lift, from `Γ` and `Γ′`.
pub fn project_velocity(v: &PseudoVector, dv: &PseudoVector) -> [f64; 3] {
    let z2 = (dv[1] * v[0] - v[1] * dv[0]) / (v[0] * v[0]);
    let z3 = (dv[2] * v[0] - v[2] * dv[0]) / (v[0] * v[0]);
    [z2.re, z2.im, z3.re]
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CliffordAngles {
    pub theta1: f64,
    pub theta2: f64,
}

impl CliffordAngles {
    pub fn new(theta1: f64, theta2: f64) -> Self {
        CliffordAngles { theta1, theta2 }
    }
}

pub fn torus_rotation(a: CliffordAngles) -> PseudoMatrix {
    let ph = C64::from_polar(1.0, -(a.theta1 + 2.0 * a.theta2) / 6.0);
    let (s, co) = (0.5 * a.theta1).sin_cos();
    let z = c(0.0, 0.0);
    Matrix3::new(
        ph * co,
        z,
        ph * s,
        z,
        C64::from_polar(1.0, (a.theta1 + 2.0 * a.theta2) / 3.0),
        z,
        -ph * s,
        z,
        ph * co,
    )
}

/// Point of the standard cyclide with parameter `rho`.
pub fn cyclide_point(rho: f64, a: CliffordAngles) -> Result<HeisenbergPoint, SphereError> {
    if !(rho > 0.0 && rho < 2f64.sqrt()) {
        return Err(SphereError::DomainError(rho));
    }
    let (s, co) = a.theta1.sin_cos();
    let r2 = rho * rho;
    let r4 = r2 * r2;
    let den = 4.0 + r4 + (4.0 - r4) * co;
    let x = 2.0 * rho * (2.0 + r2 + (2.0 - r2) * co) / den;
    let y = -2.0 * rho * (r2 - 2.0) * s / den;
    let z = (r4 - 4.0) * s / den;
    let (s2, c2) = a.theta2.sin_cos();
    Ok(HeisenbergPoint::new(c2 * x - s2 * y, s2 * x + c2 * y, z))
}

/// The slice point `(1, ρ, iρ²/2)`.
pub fn slice_point(rho: f64) -> PseudoVector {
    PseudoVector::new(c(1.0, 0.0), c(rho, 0.0), I * (0.5 * rho * rho))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainSpec {
    normal: PseudoVector,
}

impl ChainSpec {
    pub fn new(normal: PseudoVector) -> Result<Self, SphereError> {
        if causal_character(&normal, 1e-12) != CausalCharacter::Spacelike {
            return Err(SphereError::NotSpacelike);
        }
        Ok(ChainSpec { normal })
    }

    pub fn normal(&self) -> PseudoVector {
        self.normal
    }

    /// Projective equality of normals.
    pub fn same_as(&self, o: &ChainSpec, tol: f64) -> bool {
        let a = self.normal / c(self.normal.norm(), 0.0);
        let b = o.normal / c(o.normal.norm(), 0.0);
        (1.0 - a.dotc(&b).norm()).abs() <= tol
    }

    /// Center, radius and height data of the projected ellipse.
    pub fn ellipse(&self) -> Result<(f64, f64, f64, f64), SphereError> {
        let s = self.normal;
        if s[0].norm() <= 1e-12 * s.norm() {
            return Err(SphereError::ThroughInfinity);
        }
        let radius = herm_product(&s, &s).re.sqrt() / s[0].norm();
        let w = s[1] / s[0];
        let z0 = (s[2] / s[0]).re;
        Ok((radius, w.re, w.im, z0))
    }

    pub fn point(&self, t: f64) -> Result<HeisenbergPoint, SphereError> {
        let (rad, a, b, z0) = self.ellipse()?;
        let (s, co) = t.sin_cos();
        Ok(HeisenbergPoint::new(
            rad * co + a,
            rad * s + b,
            rad * (b * co - a * s) + z0,
        ))
    }
}

/// Samples of the chain `⟨S, z⟩ = 0` over one period `2π`.
pub fn chain_from_normal(spec: &ChainSpec, samples: usize) -> Result<SampledCurve, SphereError> {
    if samples < 3 {
        return Err(SphereError::TooFewSamples);
    }
    spec.ellipse()?;
    let period = 2.0 * PI;
    let pts = (0..samples)
        .map(|k| spec.point(k as f64 * period / samples as f64))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(SampledCurve::periodic_heisenberg(pts, period))
}

/// The chain through `p` with velocity `v` at parameter zero.
#[derive(Debug, Clone, Copy)]
pub struct ChainThrough {
    pub point: HeisenbergPoint,
    pub velocity: [f64; 3],
    /// Half the angular frequency of the horizontal circle.
    pub c1: f64,
}

impl ChainThrough {
    pub fn new(point: HeisenbergPoint, velocity: [f64; 3]) -> Result<Self, SphereError> {
        let [x1, y1, z1] = velocity;
        let horiz = x1 * x1 + y1 * y1;
        if horiz <= 1e-300 {
            return Err(SphereError::DegenerateDirection);
        }
        let den = x1 * point.y - point.x * y1 - z1;
        if den.abs() <= 1e-12 * (horiz.sqrt() + z1.abs()) {
            return Err(SphereError::LegendrianDirection);
        }
        Ok(ChainThrough { point, velocity, c1: horiz / (2.0 * den) })
    }

    pub fn period(&self) -> f64 {
        PI / self.c1.abs()
    }

    pub fn point_at(&self, t: f64) -> HeisenbergPoint {
        let HeisenbergPoint { x: x0, y: y0, z: z0 } = self.point;
        let [x1, y1, z1] = self.velocity;
        let c1 = self.c1;
        let (s, co) = (2.0 * c1 * t).sin_cos();
        let x = (y1 + 2.0 * c1 * x0 - y1 * co + x1 * s) / (2.0 * c1);
        let y = (-x1 + 2.0 * c1 * y0 + x1 * co + y1 * s) / (2.0 * c1);
        let m = x0 * x1 + y0 * y1;
        let z = z0 + m / (2.0 * c1) * (1.0 - co) + z1 / (2.0 * c1) * s;
        HeisenbergPoint::new(x, y, z)
    }

    pub fn velocity_at(&self, t: f64) -> [f64; 3] {
        let HeisenbergPoint { x: x0, y: y0, .. } = self.point;
        let [x1, y1, z1] = self.velocity;
        let (s, co) = (2.0 * self.c1 * t).sin_cos();
        let m = x0 * x1 + y0 * y1;
        [y1 * s + x1 * co, -x1 * s + y1 * co, m * s + z1 * co]
    }
}

pub fn chain_through(
    point: HeisenbergPoint,
    velocity: [f64; 3],
    samples: usize,
) -> Result<SampledCurve, SphereError> {
    if samples < 3 {
        return Err(SphereError::TooFewSamples);
    }
    let ch = ChainThrough::new(point, velocity)?;
    let period = ch.period();
    let pts = (0..samples)
        .map(|k| ch.point_at(k as f64 * period / samples as f64))
        .collect();
    Ok(SampledCurve::periodic_heisenberg(pts, period))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::{is_group_element, max_abs};

    #[test]
    fn chart_and_projection() {
        let p = heisenberg_chart(&HeisenbergPoint::default());
        assert!((p.representative() - PseudoVector::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0))).norm() < 1e-15);
        let v = chart_vector(&HeisenbergPoint::new(0.7, 0.0, 0.0));
        assert!((v - slice_point(0.7)).norm() < 1e-15);
        let q = HeisenbergPoint::new(-3.0, 2.5, 9.0);
        let back = heisenberg_projection(&heisenberg_chart(&q)).unwrap();
        assert!(back.distance(&q) < 1e-12);
        let inf = SpherePoint::new(PseudoVector::new(c(0.0, 0.0), c(0.0, 0.0), c(1.0, 0.0))).unwrap();
        assert_eq!(heisenberg_projection(&inf), Err(SphereError::PointAtInfinity));
    }

    #[test]
    fn torus_examples() {
        assert!(max_abs(&(torus_rotation(CliffordAngles::new(0.0, 0.0)) - PseudoMatrix::identity())) < 1e-15);
        let r = torus_rotation(CliffordAngles::new(0.0, PI / 2.0));
        let p = project(&(r * chart_vector(&HeisenbergPoint::new(1.0, 0.0, 0.0)))).unwrap();
        assert!(p.distance(&HeisenbergPoint::new(0.0, 1.0, 0.0)) < 1e-12);
        let a = CliffordAngles::new(1.1, -0.4);
        let full = torus_rotation(a);
        assert!(is_group_element(&full, 1e-12));
        let fact = torus_rotation(CliffordAngles::new(1.1, 0.0)) * torus_rotation(CliffordAngles::new(0.0, -0.4));
        assert!(max_abs(&(full - fact)) < 1e-12);
    }

    #[test]
    fn cyclide_examples() {
        let p = cyclide_point(0.6, CliffordAngles::default()).unwrap();
        assert!(p.distance(&HeisenbergPoint::new(0.6, 0.0, 0.0)) < 1e-15);
        // direct substitution at θ1 = π: (2·2/2, 0, 0)
        let p = cyclide_point(1.0, CliffordAngles::new(PI, 0.0)).unwrap();
        assert!(p.distance(&HeisenbergPoint::new(2.0, 0.0, 0.0)) < 1e-12);
        assert!(cyclide_point(1.5, CliffordAngles::default()).is_err());
        assert!(cyclide_point(0.0, CliffordAngles::default()).is_err());
    }

    #[test]
    fn cyclide_is_torus_orbit() {
        for &rho in &[0.3, 0.7, 1.2] {
            for k in 0..7 {
                let a = CliffordAngles::new(0.9 * k as f64, -0.35 * k as f64);
                let orbit = project(&(torus_rotation(a) * slice_point(rho))).unwrap();
                let p = cyclide_point(rho, a).unwrap();
                assert!(orbit.distance(&p) < 1e-12, "{rho} {k}");
            }
        }
    }

    #[test]
    fn chain_from_normal_examples() {
        let s = PseudoVector::new(c(0.9, 0.0), C64::from_polar(1.0, PI / 4.0), c(0.0, -1.0));
        let spec = ChainSpec::new(s).unwrap();
        let curve = chain_from_normal(&spec, 64).unwrap();
        let (rad, a, b, _) = spec.ellipse().unwrap();
        for p in curve.heisenberg_points().unwrap() {
            let v = chart_vector(&p);
            assert!(herm_product(&s, &v).norm() <= 1e-9 * v.norm());
            assert!((((p.x - a).powi(2) + (p.y - b).powi(2)).sqrt() - rad).abs() < 1e-9);
        }
        let e2 = PseudoVector::new(c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0));
        assert_eq!(chain_from_normal(&ChainSpec::new(e2).unwrap(), 8).err(), Some(SphereError::ThroughInfinity));
        let timelike = PseudoVector::new(c(1.0, 0.0), c(0.0, 0.0), c(0.0, 1.0));
        assert_eq!(ChainSpec::new(timelike).err(), Some(SphereError::NotSpacelike));
    }

    #[test]
    fn chain_through_examples() {
        let ch = ChainThrough::new(HeisenbergPoint::default(), [1.0, 0.0, 1.0]).unwrap();
        assert!((ch.c1 + 0.5).abs() < 1e-15);
        assert!(ch.point_at(0.0).distance(&HeisenbergPoint::default()) < 1e-15);
        let hstep = 1e-4;
        let (a, b) = (ch.point_at(hstep), ch.point_at(-hstep));
        let fd = [(a.x - b.x) / (2.0 * hstep), (a.y - b.y) / (2.0 * hstep), (a.z - b.z) / (2.0 * hstep)];
        for k in 0..3 {
            assert!((fd[k] - [1.0, 0.0, 1.0][k]).abs() < 1e-7);
        }
        assert_eq!(
            ChainThrough::new(HeisenbergPoint::default(), [1.0, 0.0, 0.0]).err(),
            Some(SphereError::LegendrianDirection)
        );
        assert_eq!(
            ChainThrough::new(HeisenbergPoint::default(), [0.0, 0.0, 1.0]).err(),
            Some(SphereError::DegenerateDirection)
        );
    }

    #[test]
    fn chain_through_lies_on_a_chain() {
        let p = HeisenbergPoint::new(0.4, -1.2, 0.3);
        let v = [0.5, 0.8, 2.0];
        let ch = ChainThrough::new(p, v).unwrap();
        for k in 0..20 {
            let t = k as f64 * ch.period() / 20.0;
            let q = ch.point_at(t);
            let w = ch.velocity_at(t);
            let hh = 1e-5;
            let (a, b) = (ch.point_at(t + hh), ch.point_at(t - hh));
            assert!(((a.z - b.z) / (2.0 * hh) - w[2]).abs() < 1e-6);
            // chains have constant contact speed
            assert!((contact_form(&q, w) - contact_form(&p, v)).abs() < 1e-12);
        }
        let end = ch.point_at(ch.period());
        assert!(end.distance(&p) < 1e-12);
    }
}
