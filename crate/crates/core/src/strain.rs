//! The total strain functional and its closed critical curves.

use crate::curves::{bending_twist, total_strain_of, CurveError, DerivativeScheme, SampledCurve};
use crate::isoparametric::{
    Configuration, Discrepancy, IsoError, IsoparametricSpec, Kind, RationalRatio,
};
use num_integer::Integer;
use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StrainError {
    #[error("no sign change of tau + 9 kappa^2 for r = {r}; residual profile: {profile}")]
    NoRoot { r: String, profile: String },
    #[error("({0},{1}) is not a coprime pair with 0 < p/q < 1")]
    InvalidType(i64, i64),
    #[error("curve is not closed")]
    NotClosed,
    #[error(transparent)]
    Iso(#[from] IsoError),
    #[error(transparent)]
    Curve(#[from] CurveError),
}

/// `∮ a dt` over one period of a closed curve.
pub fn total_strain(curve: &SampledCurve) -> Result<f64, StrainError> {
    if !curve.periodic {
        return Err(StrainError::NotClosed);
    }
    Ok(total_strain_of(curve)?)
}

/// `τ + 9κ²`; closed critical curves have it identically zero.
pub fn criticality_residual(kappa: f64, tau: f64) -> f64 {
    tau + 9.0 * kappa * kappa
}

/// Criticality residual of the second-kind configuration `(r, ρ)`.
pub fn configuration_residual(r: RationalRatio, rho: f64) -> Result<f64, StrainError> {
    let cfg = Configuration::new(IsoparametricSpec::new(Kind::Second, r, rho)?)?;
    Ok(criticality_residual(cfg.kappa, cfg.tau))
}

/// `16 − 96ρ² − 40ρ⁴ − 24ρ⁶ + ρ⁸ − r(16 + 96ρ² − 40ρ⁴ + 24ρ⁶ + ρ⁸)`.
pub fn criticality_quartic(r: f64, rho: f64) -> f64 {
    let x = rho * rho;
    let a = 16.0 - 96.0 * x - 40.0 * x * x - 24.0 * x.powi(3) + x.powi(4);
    let b = 16.0 + 96.0 * x - 40.0 * x * x + 24.0 * x.powi(3) + x.powi(4);
    a - r * b
}

fn quartic_scale(r: f64, rho: f64) -> f64 {
    let x = rho * rho;
    (1.0 + r.abs()) * (16.0 + 96.0 * x + 40.0 * x * x + 24.0 * x.powi(3) + x.powi(4))
}

/// Candidate values of `ρ²` in the printed closed form, indexed as
/// `(inner sign, outer sign)` = `(−,−), (−,+), (+,−), (+,+)`. With
/// `literal_root` the radical is a fourth root; otherwise `4·√`.
pub fn printed_rho_sq_candidates(r: f64, literal_root: bool) -> [f64; 4] {
    let s = 3f64.sqrt() * (1.0 + r + r * r).sqrt();
    let mut out = [f64::NAN; 4];
    for (k, (a, b)) in [(-1.0, -1.0), (-1.0, 1.0), (1.0, -1.0), (1.0, 1.0)].iter().enumerate() {
        let inner = 5.0 + 5.0 * r * r + a * 3.0 * s + r * (8.0 + a * 3.0 * s);
        let rad = if literal_root { inner.powf(0.25) } else { 4.0 * inner.sqrt() };
        out[k] = (6.0 + 6.0 * r + a * 4.0 * s + b * rad) / (1.0 - r);
    }
    out
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalRho {
    pub r: String,
    pub rho_star: f64,
    pub residual: f64,
    /// Every root found by the bracket scan.
    pub roots: Vec<f64>,
    pub quartic_at_root: f64,
    pub candidates_literal: [f64; 4],
    pub candidates_corrected: [f64; 4],
    /// Whether the third candidate lies in `(6 − 4√2, 2)`.
    pub third_in_bound: bool,
    pub report: Vec<Discrepancy>,
}

const SCAN_INTERVALS: usize = 200;

/// Clifford parameter of the critical second-kind configuration with
/// spectral ratio `r`.
pub fn critical_rho(r: RationalRatio) -> Result<CriticalRho, StrainError> {
    if !r.in_spectral_range() {
        return Err(IsoError::DomainError(format!("r = {r} outside (-2,-1/2)")).into());
    }
    let (lo, hi) = (0.01, 2f64.sqrt() - 0.01);
    let grid: Vec<f64> = (0..=SCAN_INTERVALS)
        .map(|k| lo + (hi - lo) * k as f64 / SCAN_INTERVALS as f64)
        .collect();
    let vals = grid
        .iter()
        .map(|&x| configuration_residual(r, x))
        .collect::<Result<Vec<_>, _>>()?;
    let mut roots = Vec::new();
    let mut residuals = Vec::new();
    for k in 0..SCAN_INTERVALS {
        if vals[k] == 0.0 {
            roots.push(grid[k]);
            residuals.push(0.0);
            continue;
        }
        if vals[k].signum() == vals[k + 1].signum() {
            continue;
        }
        let (mut a, mut b, mut fa) = (grid[k], grid[k + 1], vals[k]);
        let mut mid = 0.5 * (a + b);
        let mut fm = configuration_residual(r, mid)?;
        for _ in 0..200 {
            if fm.abs() <= 1e-13 || b - a <= 1e-15 {
                break;
            }
            if fm.signum() == fa.signum() {
                a = mid;
                fa = fm;
            } else {
                b = mid;
            }
            mid = 0.5 * (a + b);
            fm = configuration_residual(r, mid)?;
        }
        roots.push(mid);
        residuals.push(fm);
    }
    if roots.is_empty() {
        let profile = grid
            .iter()
            .zip(&vals)
            .step_by(20)
            .map(|(x, v)| format!("{x:.3}:{v:.3e}"))
            .collect::<Vec<_>>()
            .join(" ");
        return Err(StrainError::NoRoot { r: r.to_string(), profile });
    }
    let rho_star = roots[0];
    let residual = residuals[0];
    let rv = r.value();
    let literal = printed_rho_sq_candidates(rv, true);
    let corrected = printed_rho_sq_candidates(rv, false);
    let bound = 6.0 - 4.0 * 2f64.sqrt();
    let quartic = criticality_quartic(rv, rho_star);
    let tag = format!("r={r}");
    let report = vec![
        Discrepancy::new(format!("rho closed form as printed [{tag}]"), literal[2].max(0.0).sqrt(), rho_star, 1e-6),
        Discrepancy::new(format!("rho closed form, radical read as 4*sqrt [{tag}]"), corrected[2].max(0.0).sqrt(), rho_star, 1e-6),
        Discrepancy::with_scale(format!("quartic at root, relative to coefficients [{tag}]"), quartic, 0.0, quartic_scale(rv, rho_star), 1e-6),
    ];
    Ok(CriticalRho {
        r: r.to_string(),
        rho_star,
        residual,
        roots,
        quartic_at_root: quartic,
        candidates_literal: literal,
        candidates_corrected: corrected,
        third_in_bound: corrected[2] > bound && corrected[2] < 2.0,
        report,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalitySolution {
    pub p: i64,
    pub q: i64,
    pub r: String,
    pub rho_star: f64,
    pub kappa: f64,
    pub tau: f64,
    pub residual: f64,
    /// `max |τ + 9κ²|` recomputed from the sampled lift.
    pub end_to_end_residual: f64,
}

/// Spectral ratio `(p − 2q)/(p + q)` of the critical curve of type `(p, q)`.
pub fn critical_ratio(p: i64, q: i64) -> Result<RationalRatio, StrainError> {
    if p <= 0 || q <= p || p.gcd(&q) != 1 {
        return Err(StrainError::InvalidType(p, q));
    }
    Ok(RationalRatio::new(p - 2 * q, p + q)?)
}

/// The critical second-kind configuration of positive torus type `(p, q)`.
pub fn critical_config(p: i64, q: i64) -> Result<(CriticalitySolution, Configuration, CriticalRho), StrainError> {
    let r = critical_ratio(p, q)?;
    let found = critical_rho(r)?;
    let cfg = Configuration::new(IsoparametricSpec::new(Kind::Second, r, found.rho_star)?)?;
    let curve = cfg.sampled_lift(256).with_scheme(DerivativeScheme::Spectral);
    let (kappa, tau) = bending_twist(&curve)?;
    let end_to_end = kappa
        .iter()
        .zip(&tau)
        .map(|(k, t)| criticality_residual(*k, *t).abs())
        .fold(0.0, f64::max);
    let sol = CriticalitySolution {
        p,
        q,
        r: r.to_string(),
        rho_star: found.rho_star,
        kappa: cfg.kappa,
        tau: cfg.tau,
        residual: criticality_residual(cfg.kappa, cfg.tau),
        end_to_end_residual: end_to_end,
    };
    Ok((sol, cfg, found))
}

/// Total strain of the second-kind configuration `(−5/7, 0.7)` against the
/// printed caption value.
pub fn caption_strain_report(samples: usize) -> Result<Discrepancy, StrainError> {
    let spec = IsoparametricSpec::new(Kind::Second, RationalRatio::new(-5, 7)?, 0.7)?;
    let cfg = Configuration::new(spec)?;
    let strain = total_strain(&cfg.sampled_lift(samples).with_scheme(DerivativeScheme::Spectral))?;
    Ok(Discrepancy::new("total strain (informational) [second kind r=-5/7 rho=0.7]", 6.01323, strain, 1e-6))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hermitian::discriminant;
    use crate::isoparametric::Verdict;

    #[test]
    fn residual_examples() {
        assert_eq!(criticality_residual(0.0, 0.0), 0.0);
        assert_eq!(criticality_residual(-1.0, -9.0), 0.0);
        for k in [-1.0, -0.4, 0.2] {
            let d = discriminant(k, -9.0 * k * k);
            assert!((d + 27.0 * (1.0 + 32.0 * k * k * k)).abs() < 1e-9 * d.abs().max(1.0));
        }
        let edge = -(2f64).powf(-5.0 / 3.0);
        assert!(discriminant(edge - 0.01, -9.0 * (edge - 0.01f64).powi(2)) > 0.0);
        assert!(discriminant(edge + 0.01, -9.0 * (edge + 0.01f64).powi(2)) < 0.0);
    }

    #[test]
    fn critical_three_four() {
        let (sol, _, found) = critical_config(3, 4).unwrap();
        assert_eq!(sol.r, "-5/7");
        assert_eq!(found.roots.len(), 1);
        assert!((sol.rho_star - 0.6759620472778803).abs() < 1e-9);
        assert!(sol.residual.abs() <= 1e-9);
        assert!(sol.end_to_end_residual <= 1e-8);
        assert!(found.third_in_bound);
        let verdicts: Vec<Verdict> = found.report.iter().map(|d| d.verdict).collect();
        assert_eq!(verdicts, vec![Verdict::Flag, Verdict::Pass, Verdict::Pass]);
    }

    #[test]
    fn critical_ratio_arithmetic() {
        assert_eq!(critical_ratio(1, 2).unwrap(), RationalRatio::new(-1, 1).unwrap());
        assert_eq!(critical_ratio(3, 4).unwrap(), RationalRatio::new(-5, 7).unwrap());
        assert!(critical_ratio(2, 4).is_err());
        assert!(critical_ratio(4, 3).is_err());
    }

    #[test]
    fn caption_strain_is_informational() {
        let d = caption_strain_report(512).unwrap();
        assert!((d.computed - 6.013233988990447).abs() < 1e-9, "{}", d.computed);
    }
}
