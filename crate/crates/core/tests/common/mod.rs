#![allow(dead_code)]

use cr3::curves::{SampledCurve, Samples};
use cr3::hermitian::{c, form, one_parameter_exp, PseudoMatrix, PseudoVector, C64};
use cr3::isoparametric::{Configuration, IsoparametricSpec, Kind, RationalRatio};
use rand::Rng;

/// `exp(X)` for a random Lie algebra element `X` with entries of size about `scale`.
pub fn random_group_element<R: Rng>(rng: &mut R, scale: f64) -> PseudoMatrix {
    let mut a = PseudoMatrix::zeros();
    for i in 0..3 {
        for j in 0..3 {
            a[(i, j)] = c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)) * scale;
        }
    }
    // h⁻¹ = h, and h·(anti-Hermitian) lies in the algebra
    let anti = (a - a.adjoint()) * c(0.5, 0.0);
    let mut x = form() * anti;
    let tr = x.trace() / c(3.0, 0.0);
    for i in 0..3 {
        x[(i, i)] -= tr;
    }
    one_parameter_exp(&x, 1.0).expect("algebra element")
}

pub fn config(kind: Kind, m: i64, n: i64, rho: f64) -> Configuration {
    Configuration::new(IsoparametricSpec::new(kind, RationalRatio::new(m, n).unwrap(), rho).unwrap()).unwrap()
}

pub fn second_34() -> Configuration {
    config(Kind::Second, -5, 7, 0.7)
}

pub fn transform_lift(curve: &SampledCurve, a: &PseudoMatrix) -> SampledCurve {
    let mut out = curve.clone();
    out.samples = Samples::Lift(curve.lift().iter().map(|g| a * g).collect());
    out
}

pub fn scale_lift(curve: &SampledCurve, z: C64) -> SampledCurve {
    let mut out = curve.clone();
    out.samples = Samples::Lift(curve.lift().iter().map(|g| g * z).collect());
    out
}

pub fn cube_roots() -> [C64; 3] {
    [0, 1, 2].map(|k| C64::from_polar(1.0, 2.0 * std::f64::consts::PI * k as f64 / 3.0))
}

pub fn max_dev(values: &[f64], target: f64) -> f64 {
    values.iter().map(|v| (v - target).abs()).fold(0.0, f64::max)
}

pub fn vec_dist(a: &PseudoVector, b: &PseudoVector) -> f64 {
    (a - b).norm()
}
