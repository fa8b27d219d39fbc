//! Curves with constant bending and twist: spectral analysis of the
//! Hamiltonian, and the two families of symmetrical configurations.

use crate::curves::{frame_from_jet, SampledCurve, Samples};
use crate::hermitian::{
    c, det_columns, frame_generator, herm_product, solve_characteristic_cubic,
    unitary_change, CausalCharacter, CubicStatus, PseudoMatrix, PseudoVector, C64, I,
};
use crate::sphere::{project, project_velocity, slice_point, HeisenbergPoint, SphereError};
use num_integer::Integer;
use serde::Serialize;
use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IsoError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("normalization did not converge (residual {0:.3e})")]
    NoConvergence(f64),
    #[error("cannot parse ratio '{0}': expected M/N with integers")]
    BadRatio(String),
    #[error(transparent)]
    Sphere(#[from] SphereError),
}

/// A reduced fraction `m/n` with `n > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct RationalRatio {
    m: i64,
    n: i64,
}

impl RationalRatio {
    pub fn new(m: i64, n: i64) -> Result<Self, IsoError> {
        if n == 0 {
            return Err(IsoError::BadRatio(format!("{m}/{n}")));
        }
        let g = m.gcd(&n);
        let s = n.signum();
        Ok(RationalRatio { m: s * m / g, n: s * n / g })
    }

    pub fn m(&self) -> i64 {
        self.m
    }

    pub fn n(&self) -> i64 {
        self.n
    }

    pub fn value(&self) -> f64 {
        self.m as f64 / self.n as f64
    }

    /// Whether `−2 < m/n < −1/2`.
    pub fn in_spectral_range(&self) -> bool {
        -2 * self.n < self.m && 2 * self.m < -self.n
    }
}

impl fmt::Display for RationalRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.m, self.n)
    }
}

impl FromStr for RationalRatio {
    type Err = IsoError;

    /// Accepts `M/N` or a bare integer; decimals are rejected.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || IsoError::BadRatio(s.to_string());
        let t = s.trim();
        let (a, b) = match t.split_once('/') {
            Some((a, b)) => (a.trim(), b.trim()),
            None => (t, "1"),
        };
        let m: i64 = a.parse().map_err(|_| bad())?;
        let n: i64 = b.parse().map_err(|_| bad())?;
        RationalRatio::new(m, n).map_err(|_| bad())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    First,
    Second,
}

impl FromStr for Kind {
    type Err = IsoError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" | "1" => Ok(Kind::First),
            "second" | "2" => Ok(Kind::Second),
            _ => Err(IsoError::DomainError(format!("unknown kind '{s}'"))),
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Kind::First => "first",
            Kind::Second => "second",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IsoparametricSpec {
    pub kind: Kind,
    pub r: RationalRatio,
    pub rho: f64,
}

/// Upper bound on `ρ²` for first-kind configurations.
pub fn first_kind_rho_sq_bound(r: f64) -> f64 {
    2.0 * (-3.0 + 2.0 * (2.0 - r - r * r).sqrt()) / (1.0 + 2.0 * r)
}

impl IsoparametricSpec {
    pub fn new(kind: Kind, r: RationalRatio, rho: f64) -> Result<Self, IsoError> {
        let spec = IsoparametricSpec { kind, r, rho };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<(), IsoError> {
        if !self.r.in_spectral_range() {
            return Err(IsoError::DomainError(format!(
                "r = {} outside (-2,-1/2) of the rectangle B",
                self.r
            )));
        }
        if !(self.rho > 0.0 && self.rho < 2f64.sqrt()) {
            return Err(IsoError::DomainError(format!(
                "rho = {} outside (0,sqrt 2) of the rectangle B",
                self.rho
            )));
        }
        if self.kind == Kind::First {
            let bound = first_kind_rho_sq_bound(self.r.value());
            if !(self.rho * self.rho < bound) {
                return Err(IsoError::DomainError(format!(
                    "rho = {} violates the first-kind bound A: rho^2 < {bound:.6}",
                    self.rho
                )));
            }
        }
        Ok(())
    }

    /// Eigenvalue pattern of the diagonal generator, in display order.
    pub fn pattern(&self) -> [f64; 3] {
        let r = self.r.value();
        match self.kind {
            Kind::First => [-(1.0 + r), 1.0, r],
            Kind::Second => [1.0, -(1.0 + r), r],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ClosureClass {
    FirstClass,
    SecondClass,
    NotClosable,
}

#[derive(Debug, Clone)]
pub struct SpectralAnalysis {
    pub discriminant: f64,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<PseudoVector>,
    pub characters: Vec<CausalCharacter>,
    pub spectral_ratio: Option<f64>,
    pub class: ClosureClass,
}

/// `(λ² − κλ − 2κ², −1, −2iκ + iλ)`.
pub fn hamiltonian_eigenvector(kappa: f64, lambda: f64) -> PseudoVector {
    PseudoVector::new(
        c(lambda * lambda - kappa * lambda - 2.0 * kappa * kappa, 0.0),
        c(-1.0, 0.0),
        I * (lambda - 2.0 * kappa),
    )
}

/// `⟨V, V⟩` of the eigenvector for eigenvalue `e`.
pub fn eigenvector_square(kappa: f64, e: f64) -> f64 {
    1.0 - 8.0 * kappa.powi(3) + 6.0 * kappa * e * e - 2.0 * e.powi(3)
}

pub fn hamiltonian(kappa: f64, tau: f64) -> PseudoMatrix {
    frame_generator(kappa, tau) * I
}

pub fn analyze(kappa: f64, tau: f64) -> SpectralAnalysis {
    let cubic = solve_characteristic_cubic(kappa, tau);
    let eigenvectors: Vec<PseudoVector> =
        cubic.roots.iter().map(|&e| hamiltonian_eigenvector(kappa, e)).collect();
    let characters = cubic
        .roots
        .iter()
        .map(|&e| {
            if eigenvector_square(kappa, e) > 0.0 {
                CausalCharacter::Spacelike
            } else if eigenvector_square(kappa, e) < 0.0 {
                CausalCharacter::Timelike
            } else {
                CausalCharacter::Lightlike
            }
        })
        .collect();
    let (ratio, class) = if cubic.status == CubicStatus::Separated {
        let cls = if 3.0 * kappa - tau.abs().sqrt() > 0.0 {
            ClosureClass::FirstClass
        } else {
            ClosureClass::SecondClass
        };
        (Some(cubic.roots[0] / cubic.roots[2]), cls)
    } else {
        (None, ClosureClass::NotClosable)
    };
    SpectralAnalysis {
        discriminant: cubic.discriminant,
        eigenvalues: cubic.roots,
        eigenvectors,
        characters,
        spectral_ratio: ratio,
        class,
    }
}

fn cubic_poly(r: f64) -> f64 {
    2.0 + 3.0 * r - 3.0 * r * r - 2.0 * r.powi(3)
}

/// `x^{2/3}` on the real line.
fn two_thirds(x: f64) -> f64 {
    x.cbrt().powi(2)
}

/// Time scale `μ` as printed for the first or second family.
pub fn printed_mu(kind: Kind, r: f64, rho: f64) -> f64 {
    let a = match kind {
        Kind::First => 4.0 + 8.0 * r + 12.0 * rho * rho + (1.0 + 2.0 * r) * rho.powi(4),
        Kind::Second => {
            -4.0 + 4.0 * r - 12.0 * rho * rho * (1.0 + 2.0 * r) + (r - 1.0) * rho.powi(4)
        }
    };
    a / (a - 2.0 * two_thirds(cubic_poly(r) * (-4.0 * rho + rho.powi(5))))
}

/// Printed scale `σ` for a given `μ`.
pub fn printed_sigma(mu: f64, r: f64, rho: f64) -> f64 {
    2.0 * (1.0 - mu) / (mu * (rho * (-cubic_poly(r)) * (4.0 - rho.powi(4))).cbrt())
}

fn printed_denominator(r: f64, rho: f64) -> f64 {
    (cubic_poly(r) * rho * (-4.0 + rho.powi(4))).cbrt()
}

/// Printed bending and twist of the configuration.
pub fn printed_kappa_tau(kind: Kind, r: f64, rho: f64) -> (f64, f64) {
    let d = printed_denominator(r, rho);
    let r2 = rho * rho;
    let r4 = r2 * r2;
    let w = 1.0 + r + r * r;
    match kind {
        Kind::First => {
            let num = -8.0 * r * r * r2 - (r2 - 2.0).powi(2) - 2.0 * r * (2.0 + r2).powi(2);
            let kappa = num / (4.0 * d * d);
            let tau = (9.0 * num * num
                - 4.0 * w * (4.0 + 12.0 * r2 + r4 + 2.0 * r * (4.0 + r4)).powi(2))
                / (16.0 * d.powi(4));
            (kappa, tau)
        }
        Kind::Second => {
            let num = 16.0 * r * r2 - (r2 - 2.0).powi(2) + r * r * (2.0 + r2).powi(2);
            let kappa = num / (4.0 * d * d);
            let tau = (3.0 * num * num
                - 4.0 * w * (4.0 + 12.0 * r2 + r4 - r * (4.0 - 12.0 * r2 + r4)).powi(2))
                / (16.0 * d.powi(4));
            (kappa, tau)
        }
    }
}

/// Lift jet `Γ^{(d)}(0)` for scale `sigma`, speed `c` and pattern `e`.
fn jet_at_zero(w: &PseudoVector, pattern: [f64; 3], cs: f64, sigma: C64) -> [PseudoVector; 3] {
    let u = unitary_change();
    let mut out = [PseudoVector::zeros(); 3];
    for (d, slot) in out.iter_mut().enumerate() {
        let mut v = PseudoVector::zeros();
        for j in 0..3 {
            v[j] = w[j] * (-I * cs * pattern[j]).powi(d as i32);
        }
        *slot = u * v * sigma;
    }
    out
}

fn normalization_residual(w: &PseudoVector, pattern: [f64; 3], x: [f64; 3]) -> [f64; 3] {
    let cs = x[0].exp();
    let sigma = C64::from_polar(x[1].exp(), x[2]);
    let j = jet_at_zero(w, pattern, cs, sigma);
    let det = det_columns(&j[0], &j[1], &j[2]);
    let p = herm_product(&j[0], &j[1]);
    [det.re + 1.0, det.im, p.im - 1.0]
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let m = nalgebra::Matrix3::from_fn(|i, j| a[i][j]);
    let v = m.lu().solve(&nalgebra::Vector3::new(b[0], b[1], b[2]))?;
    Some([v[0], v[1], v[2]])
}

fn newton(w: &PseudoVector, pattern: [f64; 3], mut x: [f64; 3]) -> Result<[f64; 3], f64> {
    let norm = |r: [f64; 3]| r.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut res = normalization_residual(w, pattern, x);
    for _ in 0..100 {
        if norm(res) <= 1e-13 {
            return Ok(x);
        }
        let mut jac = [[0.0; 3]; 3];
        for k in 0..3 {
            let hstep = 1e-7 * x[k].abs().max(1.0);
            let mut xp = x;
            let mut xm = x;
            xp[k] += hstep;
            xm[k] -= hstep;
            let (rp, rm) = (normalization_residual(w, pattern, xp), normalization_residual(w, pattern, xm));
            for i in 0..3 {
                jac[i][k] = (rp[i] - rm[i]) / (2.0 * hstep);
            }
        }
        let step = solve3(jac, res).ok_or(norm(res))?;
        let mut lambda = 1.0;
        loop {
            let trial = [x[0] - lambda * step[0], x[1] - lambda * step[1], x[2] - lambda * step[2]];
            let tr = normalization_residual(w, pattern, trial);
            if norm(tr) < norm(res) || lambda < 1e-4 {
                x = trial;
                res = tr;
                break;
            }
            lambda *= 0.5;
        }
    }
    if norm(res) <= 1e-11 {
        Ok(x)
    } else {
        Err(norm(res))
    }
}

/// Exact solution of the normalization equations, used to reseed Newton.
pub fn closed_normalization(kind: Kind, r: f64, rho: f64) -> (f64, C64) {
    let spec_pattern = match kind {
        Kind::First => [-(1.0 + r), 1.0, r],
        Kind::Second => [1.0, -(1.0 + r), r],
    };
    let u = unitary_change();
    let w = u.try_inverse().unwrap() * slice_point(rho);
    let eps = [-1.0, 1.0, 1.0];
    let y: f64 = -(0..3).map(|j| spec_pattern[j] * w[j].norm_sqr() * eps[j]).sum::<f64>();
    let lam: Vec<C64> = spec_pattern.iter().map(|e| -I * *e).collect();
    let vdm = (lam[1] - lam[0]) * (lam[2] - lam[0]) * (lam[2] - lam[1]);
    let x = u.determinant() * w[0] * w[1] * w[2] * vdm;
    let cs = y / x.norm().powf(2.0 / 3.0);
    let sigma = C64::from_polar(x.norm().cbrt() / y, (-x.inv()).arg() / 3.0);
    (cs, sigma)
}

/// Solves for the speed `c` and complex scale `σ` that make the orbit lift a
/// Wilczynski lift in natural parametrization.
pub fn normalization_oracle(spec: &IsoparametricSpec) -> Result<(f64, C64), IsoError> {
    spec.validate()?;
    let r = spec.r.value();
    let pattern = spec.pattern();
    let w = unitary_change().try_inverse().unwrap() * slice_point(spec.rho);
    let mu = printed_mu(spec.kind, r, spec.rho);
    let sig = printed_sigma(mu, r, spec.rho);
    let sign = if spec.kind == Kind::First { -1.0 } else { 1.0 };
    let printed_seed = (mu > 0.0 && mu < 1.0 && sig.is_finite() && sig != 0.0).then(|| {
        let s = C64::new(sign * sig, 0.0);
        [(mu / (1.0 - mu)).ln(), s.norm().ln(), s.arg()]
    });
    let (cs, sg) = closed_normalization(spec.kind, r, spec.rho);
    let exact_seed = [cs.ln(), sg.norm().ln(), sg.arg()];
    let mut last = f64::INFINITY;
    for seed in printed_seed.into_iter().chain([exact_seed]) {
        match newton(&w, pattern, seed) {
            Ok(x) if x[0].is_finite() => return Ok((x[0].exp(), C64::from_polar(x[1].exp(), x[2]))),
            Ok(_) => {}
            Err(res) => last = res,
        }
    }
    Err(IsoError::NoConvergence(last))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spin {
    One,
    Third,
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Spin::One => "1",
            Spin::Third => "1/3",
        })
    }
}

/// Phase anomaly as a multiple of `2π/3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anomaly {
    Zero,
    TwoThirdsPi,
    FourThirdsPi,
}

impl Anomaly {
    pub fn radians(&self) -> f64 {
        match self {
            Anomaly::Zero => 0.0,
            Anomaly::TwoThirdsPi => 2.0 * PI / 3.0,
            Anomaly::FourThirdsPi => 4.0 * PI / 3.0,
        }
    }

    pub fn from_radians(a: f64) -> Anomaly {
        match ((a.rem_euclid(2.0 * PI)) / (2.0 * PI / 3.0)).round() as i64 % 3 {
            1 => Anomaly::TwoThirdsPi,
            2 => Anomaly::FourThirdsPi,
            _ => Anomaly::Zero,
        }
    }
}

impl fmt::Display for Anomaly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Anomaly::Zero => "0",
            Anomaly::TwoThirdsPi => "2pi/3",
            Anomaly::FourThirdsPi => "4pi/3",
        })
    }
}

impl Serialize for Spin {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl Serialize for Anomaly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

pub fn knot_type(kind: Kind, r: RationalRatio) -> (i64, i64) {
    let (m, n) = (r.m(), r.n());
    let (num, den) = match kind {
        Kind::First => (2 * n + m, n + 2 * m),
        Kind::Second => (2 * n + m, n - m),
    };
    let g = num.gcd(&den);
    let (p, q) = (num / g, den / g);
    match kind {
        Kind::First => (p.abs(), -q.abs()),
        Kind::Second => (p.abs(), q.abs()),
    }
}

pub fn spin_anomaly(r: RationalRatio) -> (Spin, Anomaly) {
    match (r.m().rem_euclid(3), r.n().rem_euclid(3)) {
        (1, 1) => (Spin::Third, Anomaly::FourThirdsPi),
        (2, 2) => (Spin::Third, Anomaly::TwoThirdsPi),
        _ => (Spin::One, Anomaly::Zero),
    }
}

pub fn maslov_closed(kind: Kind, r: RationalRatio) -> i64 {
    match kind {
        Kind::First => -(r.n() + r.m()),
        Kind::Second => {
            let (p, q) = knot_type(kind, r);
            p + q
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigClosedForms {
    pub mu: f64,
    pub sigma: [f64; 2],
    pub kappa: f64,
    pub tau: f64,
    pub omega_lift: f64,
    pub knot: (i64, i64),
    pub spin: Spin,
    pub anomaly: Anomaly,
    pub maslov: i64,
}

pub fn curve_minimal_period(forms: &ConfigClosedForms) -> f64 {
    match forms.spin {
        Spin::One => forms.omega_lift,
        Spin::Third => forms.omega_lift / 3.0,
    }
}

/// A symmetrical configuration with its normalized lift in closed form,
/// optionally moved by a group element.
#[derive(Debug, Clone)]
pub struct Configuration {
    pub spec: IsoparametricSpec,
    pub speed: f64,
    pub sigma: C64,
    pub kappa: f64,
    pub tau: f64,
    pub forms: ConfigClosedForms,
    transform: PseudoMatrix,
    base: PseudoVector,
}

impl Configuration {
    pub fn new(spec: IsoparametricSpec) -> Result<Self, IsoError> {
        let (speed, sigma) = normalization_oracle(&spec)?;
        let base = unitary_change().try_inverse().unwrap() * slice_point(spec.rho);
        let mut cfg = Configuration {
            spec,
            speed,
            sigma,
            kappa: 0.0,
            tau: 0.0,
            forms: ConfigClosedForms {
                mu: speed / (1.0 + speed),
                sigma: [sigma.re, sigma.im],
                kappa: 0.0,
                tau: 0.0,
                omega_lift: 2.0 * PI * spec.r.n() as f64 / speed,
                knot: knot_type(spec.kind, spec.r),
                spin: spin_anomaly(spec.r).0,
                anomaly: spin_anomaly(spec.r).1,
                maslov: maslov_closed(spec.kind, spec.r),
            },
            transform: PseudoMatrix::identity(),
            base,
        };
        let j = cfg.jet(0.0);
        cfg.kappa = 0.5 * herm_product(&j[1], &j[1]).re;
        cfg.tau = herm_product(&j[2], &j[1]).im + 3.0 * cfg.kappa * cfg.kappa;
        cfg.forms.kappa = cfg.kappa;
        cfg.forms.tau = cfg.tau;
        Ok(cfg)
    }

    /// The same configuration moved by `a` (applied after the current one).
    pub fn transformed(&self, a: &PseudoMatrix) -> Configuration {
        let mut out = self.clone();
        out.transform = a * self.transform;
        out
    }

    /// Lift rescaled by a constant, e.g. a cube root of unity.
    pub fn rescaled(&self, z: C64) -> Configuration {
        let mut out = self.clone();
        out.sigma *= z;
        out
    }

    pub fn transform(&self) -> PseudoMatrix {
        self.transform
    }

    pub fn omega_lift(&self) -> f64 {
        self.forms.omega_lift
    }

    pub fn curve_period(&self) -> f64 {
        curve_minimal_period(&self.forms)
    }

    /// `Γ, Γ′, Γ″, Γ‴` at natural parameter `s`.
    pub fn jet(&self, s: f64) -> [PseudoVector; 4] {
        let u = unitary_change();
        let pattern = self.spec.pattern();
        let mut out = [PseudoVector::zeros(); 4];
        for (d, slot) in out.iter_mut().enumerate() {
            let mut v = PseudoVector::zeros();
            for j in 0..3 {
                let lam = -I * self.speed * pattern[j];
                v[j] = self.base[j] * lam.powi(d as i32) * (lam * s).exp();
            }
            *slot = self.transform * (u * v) * self.sigma;
        }
        out
    }

    pub fn lift(&self, s: f64) -> PseudoVector {
        self.jet(s)[0]
    }

    pub fn frame(&self, s: f64) -> PseudoMatrix {
        frame_from_jet(&self.jet(s), self.kappa, self.tau, 0.0)
    }

    pub fn heisenberg(&self, s: f64) -> Result<HeisenbergPoint, SphereError> {
        project(&self.lift(s))
    }

    pub fn heisenberg_velocity(&self, s: f64) -> [f64; 3] {
        let j = self.jet(s);
        project_velocity(&j[0], &j[1])
    }

    /// Lift monodromy `Γ(T)/Γ(0)` over the curve period.
    pub fn monodromy(&self) -> C64 {
        let a = self.lift(0.0);
        let b = self.lift(self.curve_period());
        let k = (0..3).max_by(|&i, &j| a[i].norm().total_cmp(&a[j].norm())).unwrap();
        b[k] / a[k]
    }

    /// Lift samples over one curve period, with the monodromy recorded.
    pub fn sampled_lift(&self, samples: usize) -> SampledCurve {
        let t = self.curve_period();
        let lift = (0..samples).map(|k| self.lift(k as f64 * t / samples as f64)).collect();
        let mut curve = SampledCurve::periodic_lift(lift, t);
        curve.monodromy = self.monodromy();
        curve
    }

    /// Lift samples over one full lift period, where the lift is periodic.
    pub fn sampled_full_lift(&self, samples: usize) -> SampledCurve {
        let t = self.omega_lift();
        let lift = (0..samples).map(|k| self.lift(k as f64 * t / samples as f64)).collect();
        SampledCurve::periodic_lift(lift, t)
    }

    pub fn sampled_heisenberg(&self, samples: usize) -> Result<SampledCurve, IsoError> {
        let t = self.curve_period();
        let pts = (0..samples)
            .map(|k| self.heisenberg(k as f64 * t / samples as f64))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(SampledCurve {
            params: (0..samples).map(|k| k as f64 * t / samples as f64).collect(),
            samples: Samples::Heisenberg(pts),
            periodic: true,
            period: Some(t),
            monodromy: c(1.0, 0.0),
            scheme: crate::curves::DerivativeScheme::CentralFd4,
        })
    }

    /// The Hamiltonian of the configuration's own frame.
    pub fn analysis(&self) -> SpectralAnalysis {
        analyze(self.kappa, self.tau)
    }
}

pub fn build_configuration(
    spec: &IsoparametricSpec,
    samples: usize,
) -> Result<(SampledCurve, ConfigClosedForms, Configuration), IsoError> {
    let cfg = Configuration::new(*spec)?;
    Ok((cfg.sampled_lift(samples), cfg.forms.clone(), cfg))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    #[serde(rename = "PASS")]
    Pass,
    #[serde(rename = "FLAG")]
    Flag,
}

#[derive(Debug, Clone, Serialize)]
pub struct Discrepancy {
    pub quantity: String,
    pub printed: f64,
    pub computed: f64,
    pub relative_difference: f64,
    pub verdict: Verdict,
}

impl Discrepancy {
    /// Relative comparison against the computed value.
    pub fn new(quantity: impl Into<String>, printed: f64, computed: f64, tol: f64) -> Self {
        Discrepancy::with_scale(quantity, printed, computed, computed.abs(), tol)
    }

    /// Difference measured against an explicit scale.
    pub fn with_scale(quantity: impl Into<String>, printed: f64, computed: f64, scale: f64, tol: f64) -> Self {
        let rel = (printed - computed).abs() / scale.max(1e-300);
        Discrepancy {
            quantity: quantity.into(),
            printed,
            computed,
            relative_difference: rel,
            verdict: if rel <= tol { Verdict::Pass } else { Verdict::Flag },
        }
    }
}

/// Compares the printed closed forms against the oracle for one configuration.
pub fn discrepancy_report(cfg: &Configuration) -> Vec<Discrepancy> {
    let spec = cfg.spec;
    let r = spec.r.value();
    let tag = format!("{} kind r={} rho={}", spec.kind, spec.r, spec.rho);
    let mu = printed_mu(spec.kind, r, spec.rho);
    let sig = printed_sigma(mu, r, spec.rho);
    let (k, t) = printed_kappa_tau(spec.kind, r, spec.rho);
    let sign = if spec.kind == Kind::First { -1.0 } else { 1.0 };
    // the scale is only determined up to a cube root of unity
    let printed_scale = C64::new(sign * sig, 0.0);
    let (root, _) = crate::curves::nearest_cube_root(cfg.sigma / printed_scale);
    let sigma_aligned = (cfg.sigma / root).re;
    let oracle_with_printed_mu = printed_sigma(cfg.forms.mu, r, spec.rho) * sign;
    vec![
        Discrepancy::new(format!("mu [{tag}]"), mu, cfg.forms.mu, 1e-6),
        Discrepancy::new(format!("sigma with printed mu [{tag}]"), sign * sig, sigma_aligned, 1e-6),
        Discrepancy::new(format!("sigma formula at oracle mu [{tag}]"), oracle_with_printed_mu, sigma_aligned, 1e-6),
        Discrepancy::new(format!("kappa [{tag}]"), k, cfg.kappa, 1e-6),
        Discrepancy::new(format!("tau [{tag}]"), t, cfg.tau, 1e-6),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::is_group_element;

    fn spec(kind: Kind, m: i64, n: i64, rho: f64) -> IsoparametricSpec {
        IsoparametricSpec::new(kind, RationalRatio::new(m, n).unwrap(), rho).unwrap()
    }

    #[test]
    fn ratio_parsing() {
        let r: RationalRatio = "-10/14".parse().unwrap();
        assert_eq!((r.m(), r.n()), (-5, 7));
        assert!("0.5".parse::<RationalRatio>().is_err());
        assert!("-5/0".parse::<RationalRatio>().is_err());
        let r: RationalRatio = "5/-7".parse().unwrap();
        assert_eq!((r.m(), r.n()), (-5, 7));
        assert!(r.in_spectral_range());
        assert!(!RationalRatio::new(-1, 3).unwrap().in_spectral_range());
        assert!(!RationalRatio::new(-2, 1).unwrap().in_spectral_range());
    }

    #[test]
    fn domain_gates() {
        let r = RationalRatio::new(-5, 6).unwrap();
        assert!(IsoparametricSpec::new(Kind::First, r, 0.47343).is_ok());
        assert!(IsoparametricSpec::new(Kind::First, r, 0.48).is_err());
        assert!(IsoparametricSpec::new(Kind::Second, r, 0.48).is_ok());
        let bad = RationalRatio::new(-1, 3).unwrap();
        assert!(IsoparametricSpec::new(Kind::Second, bad, 0.5).is_err());
    }

    #[test]
    fn analyze_examples() {
        let a = analyze(1.0, 0.0);
        assert!((a.discriminant - 81.0).abs() < 1e-12);
        assert_eq!(a.class, ClosureClass::FirstClass);
        assert_eq!(a.characters[1], CausalCharacter::Timelike);
        assert_eq!(a.characters[0], CausalCharacter::Spacelike);
        assert_eq!(a.characters[2], CausalCharacter::Spacelike);
        let tau = -3.0;
        let b = analyze(0.0, tau);
        assert_eq!(b.class, ClosureClass::SecondClass);
        assert_eq!(b.characters[2], CausalCharacter::Timelike);
        assert_eq!(b.characters[1], CausalCharacter::Spacelike);
        assert_eq!(analyze(0.0, 0.0).class, ClosureClass::NotClosable);
        for (kappa, tau, an) in [(1.0, 0.0, a), (0.0, tau, b)] {
            let h = hamiltonian(kappa, tau);
            for (e, v) in an.eigenvalues.iter().zip(&an.eigenvectors) {
                assert!((h * v - v * c(*e, 0.0)).norm() < 1e-10);
                let sq = herm_product(v, v).re;
                assert!((sq - eigenvector_square(kappa, *e)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn oracle_second_kind() {
        let s = spec(Kind::Second, -5, 7, 0.7);
        let (cs, sigma) = normalization_oracle(&s).unwrap();
        assert!((cs - 2.4380833580723076).abs() < 1e-10);
        assert!((sigma - C64::new(0.6055356324471638, 0.0)).norm() < 1e-10);
        let cfg = Configuration::new(s).unwrap();
        assert!((cfg.kappa + 0.6425434254563303).abs() < 1e-10);
        assert!((cfg.tau + 3.4925519611566256).abs() < 1e-9);
        assert!((cfg.omega_lift() - 18.0397019669713).abs() < 1e-9);
        assert!((cfg.curve_period() - 6.013233988990447).abs() < 1e-9);
        for s in [0.0, 1.3, 4.0] {
            let j = cfg.jet(s);
            assert!((det_columns(&j[0], &j[1], &j[2]) + 1.0).norm() < 1e-10);
            assert!((herm_product(&j[0], &j[1]) - I).norm() < 1e-10);
            assert!(is_group_element(&cfg.frame(s), 1e-10));
        }
    }

    #[test]
    fn oracle_first_kind() {
        let s = spec(Kind::First, -5, 6, 0.47343);
        let cfg = Configuration::new(s).unwrap();
        assert!(cfg.speed > 0.0);
        let j = cfg.jet(0.7);
        assert!((det_columns(&j[0], &j[1], &j[2]) + 1.0).norm() < 1e-10);
        assert!((herm_product(&j[0], &j[1]) - I).norm() < 1e-10);
        let inner = Configuration::new(spec(Kind::First, -5, 6, 0.2)).unwrap();
        assert_eq!(inner.analysis().class, ClosureClass::FirstClass);
        assert_eq!(Configuration::new(spec(Kind::Second, -5, 7, 0.7)).unwrap().analysis().class, ClosureClass::SecondClass);
    }

    #[test]
    fn frames_follow_the_generator() {
        let cfg = Configuration::new(spec(Kind::Second, -5, 7, 0.7)).unwrap();
        let k = frame_generator(cfg.kappa, cfg.tau);
        let f0 = cfg.frame(0.0);
        for s in [0.5, 2.0] {
            let expect = f0 * crate::hermitian::one_parameter_exp(&k, s).unwrap();
            assert!(crate::hermitian::max_abs(&(cfg.frame(s) - expect)) < 1e-10);
        }
    }

    #[test]
    fn closed_integer_forms() {
        let r = |m, n| RationalRatio::new(m, n).unwrap();
        assert_eq!(knot_type(Kind::First, r(-5, 6)), (7, -4));
        assert_eq!(knot_type(Kind::Second, r(-5, 7)), (3, 4));
        assert_eq!(knot_type(Kind::Second, r(-1, 1)), (1, 2));
        assert_eq!(spin_anomaly(r(-5, 7)), (Spin::Third, Anomaly::FourThirdsPi));
        assert_eq!(spin_anomaly(r(-5, 6)), (Spin::One, Anomaly::Zero));
        assert_eq!(spin_anomaly(r(-4, 5)), (Spin::Third, Anomaly::TwoThirdsPi));
        assert_eq!(maslov_closed(Kind::First, r(-5, 6)), -1);
        assert_eq!(maslov_closed(Kind::Second, r(-5, 7)), 7);
        assert_eq!(maslov_closed(Kind::Second, r(-1, 1)), 3);
    }

    #[test]
    fn monodromy_matches_anomaly() {
        for (kind, m, n, rho) in [(Kind::Second, -5, 7, 0.7), (Kind::First, -5, 6, 0.47343), (Kind::Second, -4, 5, 0.9)] {
            let cfg = Configuration::new(spec(kind, m, n, rho)).unwrap();
            let eps = cfg.monodromy();
            let expect = C64::from_polar(1.0, cfg.forms.anomaly.radians());
            assert!((eps - expect).norm() < 1e-7, "{kind} {m}/{n}: {eps}");
        }
    }

    #[test]
    fn printed_forms_report() {
        let cfg = Configuration::new(spec(Kind::Second, -5, 7, 0.7)).unwrap();
        let rep = discrepancy_report(&cfg);
        let get = |q: &str| rep.iter().find(|d| d.quantity.starts_with(q)).unwrap().verdict;
        assert_eq!(get("mu "), Verdict::Flag);
        assert_eq!(get("kappa"), Verdict::Pass);
        assert_eq!(get("tau"), Verdict::Pass);
        assert_eq!(get("sigma formula"), Verdict::Pass);
        let cfg = Configuration::new(spec(Kind::First, -5, 6, 0.47343)).unwrap();
        let rep = discrepancy_report(&cfg);
        let get = |q: &str| rep.iter().find(|d| d.quantity.starts_with(q)).unwrap().verdict;
        assert_eq!(get("mu "), Verdict::Pass);
        assert_eq!(get("kappa"), Verdict::Pass);
        assert_eq!(get("tau"), Verdict::Flag);
    }
}
