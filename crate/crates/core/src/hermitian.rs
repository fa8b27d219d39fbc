//! Linear algebra over C^{2,1}: the Hermitian form, the group test,
//! causal characters, the characteristic cubic and one-parameter subgroups.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;
use std::f64::consts::PI;
use thiserror::Error;

pub type C64 = Complex64;
pub type PseudoVector = Vector3<C64>;
pub type PseudoMatrix = Matrix3<C64>;

pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AlgebraError {
    #[error("matrix is not in the Lie algebra (residual {residual:.3e})")]
    AlgebraViolation { residual: f64 },
    #[error("the two vectors span less than a plane")]
    DegenerateSpan,
}

pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn vector(z1: C64, z2: C64, z3: C64) -> PseudoVector {
    Vector3::new(z1, z2, z3)
}

/// Standard basis vector `E_{k+1}`.
pub fn basis(k: usize) -> PseudoVector {
    let mut v = PseudoVector::zeros();
    v[k] = C64::new(1.0, 0.0);
    v
}

/// The form matrix `h`; it squares to the identity.
pub fn form() -> PseudoMatrix {
    let o = C64::new(0.0, 0.0);
    Matrix3::new(o, o, I, o, C64::new(1.0, 0.0), o, -I, o, o)
}

/// `conj(z)^T h w`, conjugate-linear in the first slot.
pub fn herm_product(z: &PseudoVector, w: &PseudoVector) -> C64 {
    z[0].conj() * I * w[2] + z[1].conj() * w[1] - z[2].conj() * I * w[0]
}

pub fn max_abs(m: &PseudoMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `‖conj(A)^T h A − h‖_max`.
pub fn group_residual(a: &PseudoMatrix) -> f64 {
    let h = form();
    max_abs(&(a.adjoint() * h * a - h))
}

pub fn is_group_element(a: &PseudoMatrix, tol: f64) -> bool {
    group_residual(a) <= tol && (a.determinant() - C64::new(1.0, 0.0)).norm() <= tol
}

/// Inverse of a group element, `h conj(A)^T h`.
pub fn group_inverse(a: &PseudoMatrix) -> PseudoMatrix {
    let h = form();
    h * a.adjoint() * h
}

pub fn det_columns(a: &PseudoVector, b: &PseudoVector, c: &PseudoVector) -> C64 {
    Matrix3::from_columns(&[*a, *b, *c]).determinant()
}

/// Residual of the Lie algebra conditions `conj(K)^T h + h K = 0`, `tr K = 0`.
pub fn algebra_residual(k: &PseudoMatrix) -> f64 {
    let h = form();
    max_abs(&(k.adjoint() * h + h * k)).max(k.trace().norm())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CausalCharacter {
    Spacelike,
    Timelike,
    Lightlike,
}

/// Sign of `⟨v,v⟩` with dead-band `tol·‖v‖²`.
pub fn causal_character(v: &PseudoVector, tol: f64) -> CausalCharacter {
    let q = herm_product(v, v).re;
    if q.abs() <= tol * v.norm_squared() {
        CausalCharacter::Lightlike
    } else if q > 0.0 {
        CausalCharacter::Spacelike
    } else {
        CausalCharacter::Timelike
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum CubicStatus {
    Separated,
    NonSeparated,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CubicRoots {
    pub status: CubicStatus,
    pub discriminant: f64,
    /// Real roots in increasing order.
    pub roots: Vec<f64>,
}

pub fn discriminant(kappa: f64, tau: f64) -> f64 {
    let (k, t) = (kappa, tau);
    -27.0 + 108.0 * k * (k * k + t) - 324.0 * k.powi(4) * t - 72.0 * k * k * t * t - 4.0 * t.powi(3)
}

/// Coefficients `(a, b)` of `P(t) = −t³ + a t + b`.
pub fn cubic_coefficients(kappa: f64, tau: f64) -> (f64, f64) {
    (
        3.0 * kappa * kappa - tau,
        2.0 * kappa.powi(3) + 2.0 * kappa * tau - 1.0,
    )
}

/// Closed trigonometric roots of `−t³ + a t + b` for `a > 0`, `b ≠ 0`,
/// `4a³ > 27b²`.
pub fn trig_roots(a: f64, b: f64) -> Option<[f64; 3]> {
    if !(a > 0.0) || b == 0.0 || 4.0 * a.powi(3) - 27.0 * b * b <= 0.0 {
        return None;
    }
    let sb = b.signum();
    let w = (12.0 * a.powi(3) - 81.0 * b * b).sqrt() / (9.0 * b);
    let amp = 2.0 * (a / 3.0).sqrt();
    let th = w.atan() / 3.0;
    let l1 = -amp * (-th + PI / 6.0 * (1.0 + sb)).cos();
    let l2 = -amp * (-th - PI / 6.0 * (3.0 - sb)).cos();
    let l3 = amp * (th - PI / 6.0 * (1.0 + sb)).cos() - amp * (th - PI / 6.0 * sb).sin();
    Some([l1, l2, l3])
}

fn cubic_value(a: f64, b: f64, t: f64) -> (f64, f64) {
    (-t * t * t + a * t + b, -3.0 * t * t + a)
}

fn polish(a: f64, b: f64, mut t: f64) -> f64 {
    for _ in 0..8 {
        let (f, df) = cubic_value(a, b, t);
        if df == 0.0 {
            break;
        }
        let step = f / df;
        t -= step;
        if step.abs() <= 1e-16 * t.abs().max(1.0) {
            break;
        }
    }
    t
}

/// Real roots of `t³ − a t − b = 0` without the trigonometric shortcut.
fn general_real_roots(a: f64, b: f64) -> Vec<f64> {
    // depressed cubic t³ + p t + q with p = −a, q = −b
    let p = -a;
    let q = -b;
    let disc = -(4.0 * p.powi(3) + 27.0 * q * q);
    let mut roots = if disc > 0.0 {
        let m = 2.0 * (-p / 3.0).sqrt();
        let arg = ((3.0 * q) / (p * m)).clamp(-1.0, 1.0);
        let th = arg.acos() / 3.0;
        (0..3)
            .map(|k| m * (th - 2.0 * PI * k as f64 / 3.0).cos())
            .collect::<Vec<_>>()
    } else if p == 0.0 && q == 0.0 {
        vec![0.0, 0.0, 0.0]
    } else if disc == 0.0 {
        let t = 3.0 * q / p;
        vec![t, -t / 2.0, -t / 2.0]
    } else {
        let s = (q * q / 4.0 + p.powi(3) / 27.0).sqrt();
        vec![(-q / 2.0 + s).cbrt() + (-q / 2.0 - s).cbrt()]
    };
    for r in roots.iter_mut() {
        *r = polish(a, b, *r);
    }
    roots.sort_by(|x, y| x.total_cmp(y));
    roots
}

/// Roots of the characteristic cubic of the Hamiltonian with bending `kappa`
/// and twist `tau`.
pub fn solve_characteristic_cubic(kappa: f64, tau: f64) -> CubicRoots {
    let d = discriminant(kappa, tau);
    let (a, b) = cubic_coefficients(kappa, tau);
    let guarded = (1.0 - 2.0 * kappa * kappa - 2.0 * kappa * tau).abs() > 1e-12;
    let mut roots: Vec<f64> = match (guarded, trig_roots(a, b)) {
        (true, Some(r)) if d > 0.0 => r.iter().map(|&t| polish(a, b, t)).collect(),
        _ => general_real_roots(a, b),
    };
    roots.sort_by(|x, y| x.total_cmp(y));
    if d > 0.0 && roots.len() == 3 {
        let mean = roots.iter().sum::<f64>() / 3.0;
        for r in roots.iter_mut() {
            *r -= mean;
        }
        CubicRoots { status: CubicStatus::Separated, discriminant: d, roots }
    } else {
        CubicRoots { status: CubicStatus::NonSeparated, discriminant: d, roots }
    }
}

/// The frame derivative matrix `F⁻¹F′` of a natural Wilczynski frame.
pub fn frame_generator(kappa: f64, tau: f64) -> PseudoMatrix {
    let z = C64::new(0.0, 0.0);
    let one = C64::new(1.0, 0.0);
    Matrix3::new(
        I * kappa,
        -I,
        C64::new(tau, 0.0),
        z,
        I * (-2.0 * kappa),
        one,
        one,
        z,
        I * kappa,
    )
}

/// Null direction of two rows: the bilinear cross product.
fn cross(u: &PseudoVector, v: &PseudoVector) -> PseudoVector {
    Vector3::new(
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    )
}

fn eigenvector(k: &PseudoMatrix, lambda: C64) -> PseudoVector {
    let m = k - PseudoMatrix::identity() * lambda;
    let rows: Vec<PseudoVector> = (0..3).map(|i| m.row(i).transpose()).collect();
    let mut best = PseudoVector::zeros();
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        let cand = cross(&rows[i], &rows[j]);
        if cand.norm() > best.norm() {
            best = cand;
        }
    }
    best / C64::new(best.norm(), 0.0)
}

fn pade6(a: &PseudoMatrix) -> PseudoMatrix {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as i32 } else { 0 };
    let x = a / C64::new(2f64.powi(squarings), 0.0);
    let q = 6;
    let mut coef = 1.0;
    let mut term = PseudoMatrix::identity();
    let mut num = PseudoMatrix::identity();
    let mut den = PseudoMatrix::identity();
    for k in 1..=q {
        coef *= (q - k + 1) as f64 / (k * (2 * q - k + 1)) as f64;
        term *= x;
        let t = term * C64::new(coef, 0.0);
        num += t;
        if k % 2 == 0 {
            den += t;
        } else {
            den -= t;
        }
    }
    let mut e = den.try_inverse().expect("Pade denominator is invertible") * num;
    for _ in 0..squarings {
        e = e * e;
    }
    e
}

/// `Exp(sK)` for `K` in the Lie algebra.
pub fn one_parameter_exp(k: &PseudoMatrix, s: f64) -> Result<PseudoMatrix, AlgebraError> {
    let scale = max_abs(k).max(1.0);
    let residual = algebra_residual(k);
    if residual > 1e-8 * scale {
        return Err(AlgebraError::AlgebraViolation { residual });
    }
    if s == 0.0 {
        return Ok(PseudoMatrix::identity());
    }
    let eig = k.schur().eigenvalues();
    if let Some(ev) = eig {
        let sep = [(0, 1), (0, 2), (1, 2)]
            .iter()
            .map(|&(i, j)| (ev[i] - ev[j]).norm())
            .fold(f64::INFINITY, f64::min);
        if sep > 1e-6 * scale {
            let v = Matrix3::from_columns(&[
                eigenvector(k, ev[0]),
                eigenvector(k, ev[1]),
                eigenvector(k, ev[2]),
            ]);
            if let Some(vinv) = v.try_inverse() {
                let d = Matrix3::from_diagonal(&ev.map(|l| (l * s).exp()));
                return Ok(v * d * vinv);
            }
        }
    }
    Ok(pade6(&(k * C64::new(s, 0.0))))
}

/// A nonzero `S` with `⟨S,u⟩ = ⟨S,v⟩ = 0`.
pub fn h_orthogonal_complement(u: &PseudoVector, v: &PseudoVector) -> Result<PseudoVector, AlgebraError> {
    let h = form();
    let a = (h * u).map(|z| z.conj());
    let b = (h * v).map(|z| z.conj());
    let s = cross(&a, &b);
    if s.norm() <= 1e-12 * a.norm() * b.norm() {
        return Err(AlgebraError::DegenerateSpan);
    }
    Ok(s / C64::new(s.norm(), 0.0))
}

/// The diagonalizing matrix of the symmetric configurations. It is not a
/// group element: its columns have Hermitian squares `(−1, 1, 1)`.
pub fn unitary_change() -> PseudoMatrix {
    let a = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
    let b = I * std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    Matrix3::new(a, z, b, z, C64::new(1.0, 0.0), z, b, z, a)
}

/// `diag(ρ e^{iθ}, e^{−2iθ}, e^{iθ}/ρ)` with unipotent part `(v, r)`.
pub fn structure_element(rho: f64, theta: f64, v: C64, r: f64) -> PseudoMatrix {
    let e = C64::from_polar(1.0, theta);
    let z = C64::new(0.0, 0.0);
    Matrix3::new(
        e * rho,
        -I * rho * e.conj() * v.conj(),
        e * (C64::new(r, 0.0) - I * 0.5 * rho * v.norm_sqr()),
        z,
        C64::from_polar(1.0, -2.0 * theta),
        v,
        z,
        z,
        e / rho,
    )
}
