//! Invariant and linking reports for sampled curves.

use crate::curves::{
    bending_twist, inflection_scan, natural_reparametrize, normalize_wilczynski, strain_density, total_strain_of,
    transversality_check, CurveError, DerivativeScheme, SampledCurve, DEFAULT_TOL_DET,
};
use crate::hermitian::C64;
use crate::isoparametric::{knot_type, maslov_closed, spin_anomaly, Anomaly, IsoError, Kind, RationalRatio, Spin};
use crate::knots::{
    bennequin_estimate, curve_monodromy, framed_curve, maslov_winding, self_linking_estimate,
    KnotError, LinkOptions, LinkingResult,
};
use rustfft::FftPlanner;
use serde::Serialize;
use serde_json::{Map, Value};
use thiserror::Error;

pub const TOOL: &str = "cr3";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative spread below which a profile is reported as constant.
pub const CONSTANT_TOL: f64 = 1e-6;
/// Largest relative Fourier tail for which spectral derivatives are used.
pub const SPECTRAL_TAIL_TOL: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ReportError {
    #[error("curve is not transversal")]
    NonTransversal,
    #[error("CR inflection points detected at {count} samples (first at s = {first:.6})")]
    Inflection { count: usize, first: f64 },
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Knot(#[from] KnotError),
    #[error(transparent)]
    Iso(#[from] IsoError),
}

/// Largest Fourier coefficient in the top quarter of the spectrum of the
/// Heisenberg coordinates, relative to the largest overall.
pub fn spectral_tail(curve: &SampledCurve) -> Result<f64, CurveError> {
    if !curve.periodic {
        return Ok(f64::INFINITY);
    }
    let pts = curve.heisenberg_points()?;
    let n = pts.len();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let (mut tail, mut peak) = (0.0f64, 0.0f64);
    for coord in 0..3 {
        let mut buf: Vec<C64> = pts.iter().map(|p| C64::new(p.to_array()[coord], 0.0)).collect();
        fft.process(&mut buf);
        for (k, z) in buf.iter().enumerate() {
            let freq = k.min(n - k);
            peak = peak.max(z.norm());
            if 8 * freq >= 3 * n {
                tail = tail.max(z.norm());
            }
        }
    }
    Ok(if peak > 0.0 { tail / peak } else { 0.0 })
}

/// Spectral derivatives for well-resolved closed curves, finite differences otherwise.
pub fn choose_scheme(curve: &SampledCurve) -> Result<DerivativeScheme, CurveError> {
    Ok(if spectral_tail(curve)? <= SPECTRAL_TAIL_TOL {
        DerivativeScheme::Spectral
    } else {
        DerivativeScheme::CentralFd4
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileSummary {
    pub constant: bool,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    /// `max − min`, the residual of the constancy claim.
    pub spread: f64,
}

impl ProfileSummary {
    pub fn of(values: &[f64]) -> Self {
        let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        let spread = max - min;
        ProfileSummary { constant: spread <= CONSTANT_TOL * mean.abs().max(1.0), mean, min, max, spread }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntegerClaim {
    pub value: i64,
    pub raw: f64,
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonodromyClaim {
    pub factor: [f64; 2],
    pub spin: Spin,
    pub anomaly: Anomaly,
    /// `|ε − e^{i·anomaly}|`.
    pub residual: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Periods {
    /// Period of the curve in its natural parameter.
    pub curve: f64,
    /// Period of its Wilczynski lift.
    pub lift: f64,
}

/// Values predicted by the configuration recorded in the file metadata.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClosedFormValues {
    pub kind: Kind,
    pub r: String,
    pub knot: String,
    pub maslov: i64,
    pub spin: Spin,
    pub anomaly: Anomaly,
    pub maslov_agrees: Option<bool>,
    pub spin_agrees: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub transversality: f64,
    pub inflection_det: f64,
    pub constant_profile: f64,
    pub spectral_tail: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            transversality: 1e-12,
            inflection_det: DEFAULT_TOL_DET,
            constant_profile: CONSTANT_TOL,
            spectral_tail: SPECTRAL_TAIL_TOL,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Provenance {
    pub tool: String,
    pub version: String,
    pub samples: usize,
    pub derivative_scheme: DerivativeScheme,
    pub tolerances: Tolerances,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvariantReport {
    pub closed: bool,
    pub inflection_points: usize,
    pub kappa: ProfileSummary,
    pub tau: ProfileSummary,
    pub total_strain: Option<f64>,
    pub periods: Option<Periods>,
    pub maslov: Option<IntegerClaim>,
    pub monodromy: Option<MonodromyClaim>,
    pub closed_form: Option<ClosedFormValues>,
    pub provenance: Provenance,
}

fn integer_claim(raw: f64) -> IntegerClaim {
    IntegerClaim { value: raw.round() as i64, raw, residual: (raw - raw.round()).abs() }
}

/// Parses `kind` and `r` out of curve-file metadata when both are present.
pub fn configuration_of(meta: &Map<String, Value>) -> Option<(Kind, RationalRatio)> {
    let kind: Kind = meta.get("kind")?.as_str()?.parse().ok()?;
    let r: RationalRatio = meta.get("r")?.as_str()?.parse().ok()?;
    r.in_spectral_range().then_some((kind, r))
}

/// Local invariants of any transversal curve, plus the global ones when it is closed.
pub fn invariant_report(curve: &SampledCurve, meta: &Map<String, Value>) -> Result<InvariantReport, ReportError> {
    let scheme = choose_scheme(curve)?;
    let curve = curve.clone().with_scheme(scheme);
    if !transversality_check(&curve)? {
        return Err(ReportError::NonTransversal);
    }
    let flagged = inflection_scan(&curve, DEFAULT_TOL_DET)?;
    if let Some(&first) = flagged.first() {
        return Err(ReportError::Inflection { count: flagged.len(), first });
    }
    let w = normalize_wilczynski(&curve)?;
    let defect = strain_density(&w)?.iter().map(|a| (a - 1.0).abs()).fold(0.0, f64::max);
    let natural = if defect > 1e-8 { natural_reparametrize(&w)? } else { w.clone() };
    let (kappa, tau) = bending_twist(&natural)?;
    let mut report = InvariantReport {
        closed: curve.periodic,
        inflection_points: 0,
        kappa: ProfileSummary::of(&kappa),
        tau: ProfileSummary::of(&tau),
        total_strain: None,
        periods: None,
        maslov: None,
        monodromy: None,
        closed_form: None,
        provenance: Provenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            samples: curve.len(),
            derivative_scheme: scheme,
            tolerances: Tolerances::default(),
        },
    };
    if curve.periodic {
        let strain = total_strain_of(&w)?;
        let mono = curve_monodromy(&curve)?;
        let eps = C64::new(mono.factor[0], mono.factor[1]);
        let order = match mono.spin {
            Spin::One => 1.0,
            Spin::Third => 3.0,
        };
        report.total_strain = Some(strain);
        report.periods = Some(Periods { curve: strain, lift: order * strain });
        report.monodromy = Some(MonodromyClaim {
            factor: mono.factor,
            spin: mono.spin,
            anomaly: mono.anomaly,
            residual: (eps - C64::from_polar(1.0, mono.anomaly.radians())).norm(),
        });
        report.maslov = Some(integer_claim(maslov_winding(&w)?));
    }
    if let Some((kind, r)) = configuration_of(meta) {
        let (p, q) = knot_type(kind, r);
        let (spin, anomaly) = spin_anomaly(r);
        let maslov = maslov_closed(kind, r);
        report.closed_form = Some(ClosedFormValues {
            kind,
            r: r.to_string(),
            knot: format!("({p},{q})"),
            maslov,
            spin,
            anomaly,
            maslov_agrees: report.maslov.map(|m| m.value == maslov),
            spin_agrees: report.monodromy.map(|m| m.spin == spin && m.anomaly == anomaly),
        });
    }
    Ok(report)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Pushoff {
    Contact,
    CrNormal,
}

impl std::str::FromStr for Pushoff {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "contact" => Ok(Pushoff::Contact),
            "crnormal" => Ok(Pushoff::CrNormal),
            _ => Err(format!("unknown push-off '{s}' (expected contact or crnormal)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkReport {
    pub pushoff: Pushoff,
    pub result: LinkingResult,
    pub half_epsilon: LinkingResult,
    pub stable: bool,
    pub reliable: bool,
    pub provenance: LinkProvenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LinkProvenance {
    pub tool: String,
    pub version: String,
    pub samples: usize,
    pub requested_quadrature: usize,
    pub refine: bool,
    pub workers: Option<usize>,
    pub reliable_residual: f64,
}

/// Linking number of a closed curve with one of its push-offs, checked under ε halving.
pub fn link_report(curve: &SampledCurve, pushoff: Pushoff, opts: &LinkOptions) -> Result<LinkReport, ReportError> {
    let scheme = choose_scheme(curve)?;
    let curve = curve.clone().with_scheme(scheme);
    let stable = match pushoff {
        Pushoff::Contact => bennequin_estimate(&curve, opts)?,
        Pushoff::CrNormal => self_linking_estimate(&framed_curve(&curve)?, opts)?,
    };
    Ok(LinkReport {
        pushoff,
        result: stable.result,
        half_epsilon: stable.half_epsilon,
        stable: true,
        reliable: stable.result.is_reliable() && stable.half_epsilon.is_reliable(),
        provenance: LinkProvenance {
            tool: TOOL.into(),
            version: VERSION.into(),
            samples: curve.len(),
            requested_quadrature: opts.quadrature,
            refine: opts.refine,
            workers: crate::knots::configured_workers(),
            reliable_residual: 0.1,
        },
    })
}
