//! Certification of reducing pairs `(f, ω)`.
//!
//! The five reduction conditions are evaluated either from the catalog's
//! analytic derivatives or from the finite-difference oracle. On top of that
//! sit the structural checks: profile recovery in the basis fixed by `N`,
//! the polynomial `θ` with `T = θ'/θ` for the time branch, level-set
//! constancy of the reduced expression, and invariance under rotations,
//! translations and Galilei boosts.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{equivalence_transform, AnsatzSpec, EquivalenceTransform, Family, Jet};
use crate::error::{Error, Result};
use crate::lstsq;
use crate::nonlinearity::Nonlinearity;
use crate::numerics::{
    fd_gradient, fd_laplacian, fd_time_derivative, nls_residual, ComplexField, GridSpec,
    ScalarField, SpaceTimePoint,
};
use crate::profile::ReductionProfile;

pub const ANALYTIC_TOLERANCE: f64 = 1e-10;
pub const ORACLE_TOLERANCE_FLOOR: f64 = 1e-5;
pub const THETA_TOLERANCE: f64 = 1e-9;
pub const LEVEL_SET_TOLERANCE: f64 = 1e-5;

/// `max(1e-5, 10·h²)`
pub fn oracle_tolerance(h: f64) -> f64 {
    ORACLE_TOLERANCE_FLOOR.max(10.0 * h * h)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Analytic,
    Oracle,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Analytic => "analytic",
            Method::Oracle => "oracle",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionRecord {
    pub condition: String,
    pub max_abs: f64,
    pub rms: f64,
    pub tolerance: f64,
    pub verdict: Verdict,
    pub n_points: usize,
    pub method: Method,
}

/// Per-condition residual statistics over a sample set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResidualReport {
    pub subject: String,
    pub method: Method,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    pub points_sampled: usize,
    pub points_excluded: usize,
    pub conditions: Vec<ConditionRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
}

impl ResidualReport {
    /// Assemble from one residual row per point (row order = `names`).
    pub fn from_rows(
        subject: impl Into<String>,
        method: Method,
        h: Option<f64>,
        names: &[&str],
        rows: &[Vec<f64>],
        excluded: usize,
        tolerance: f64,
    ) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::EmptySample);
        }
        let conditions = names
            .iter()
            .enumerate()
            .map(|(i, name)| {
                let (mut max_abs, mut ss) = (0.0f64, 0.0);
                for row in rows {
                    let r = row[i].abs();
                    // NaN must not pass silently
                    max_abs = if r.is_nan() { f64::NAN } else { max_abs.max(r) };
                    ss += r * r;
                }
                let rms = (ss / rows.len() as f64).sqrt();
                ConditionRecord {
                    condition: name.to_string(),
                    max_abs,
                    rms,
                    tolerance,
                    verdict: if max_abs <= tolerance {
                        Verdict::Pass
                    } else {
                        Verdict::Fail
                    },
                    n_points: rows.len(),
                    method,
                }
            })
            .collect();
        Ok(Self {
            subject: subject.into(),
            method,
            h,
            points_sampled: rows.len(),
            points_excluded: excluded,
            conditions,
            notes: Vec::new(),
        })
    }

    pub fn passed(&self) -> bool {
        self.conditions.iter().all(|c| c.verdict == Verdict::Pass)
    }

    /// Largest max-abs residual over all conditions.
    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .map(|c| c.max_abs)
            .fold(0.0, |a, b| if b.is_nan() { f64::NAN } else { a.max(b) })
    }

    pub fn condition(&self, name: &str) -> Option<&ConditionRecord> {
        self.conditions.iter().find(|c| c.condition == name)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Aligned plain-text table.
    pub fn to_text(&self) -> String {
        let width = self
            .conditions
            .iter()
            .map(|c| c.condition.chars().count())
            .max()
            .unwrap_or(9)
            .max(9);
        let mut out = format!(
            "{} [{}{}] points={} excluded={}\n",
            self.subject,
            self.method,
            self.h.map(|h| format!(", h={h:e}")).unwrap_or_default(),
            self.points_sampled,
            self.points_excluded
        );
        out += &format!(
            "{:<width$}  {:>12}  {:>12}  {:>10}  verdict\n",
            "condition", "max_abs", "rms", "tolerance"
        );
        for c in &self.conditions {
            let pad = width - c.condition.chars().count();
            out += &format!(
                "{}{}  {:>12.4e}  {:>12.4e}  {:>10.1e}  {}\n",
                c.condition,
                " ".repeat(pad),
                c.max_abs,
                c.rms,
                c.tolerance,
                if c.verdict == Verdict::Pass { "pass" } else { "FAIL" }
            );
        }
        for n in &self.notes {
            out += &format!("note: {n}\n");
        }
        out
    }
}

pub const CONDITION_NAMES: [&str; 5] = [
    "2f_t + f_a f_a - S",
    "lap f - T",
    "w_t + f_a w_a - X",
    "lap w - Y",
    "w_a w_a - Z",
];

fn oracle_jet(field: &ScalarField, p: &SpaceTimePoint, h: f64) -> Result<Jet> {
    Ok(Jet {
        value: field.eval(p),
        dt: fd_time_derivative(field, p, h)?,
        grad: fd_gradient(field, p, h)?,
        lap: fd_laplacian(field, p, h)?,
    })
}

fn condition_row(profile: &ReductionProfile, fj: &Jet, wj: &Jet) -> Vec<f64> {
    let w = wj.value;
    let grad_f2: f64 = fj.grad.iter().map(|g| g * g).sum();
    let grad_w2: f64 = wj.grad.iter().map(|g| g * g).sum();
    let cross: f64 = fj.grad.iter().zip(&wj.grad).map(|(a, b)| a * b).sum();
    vec![
        2.0 * fj.dt + grad_f2 - profile.eval_s(w),
        fj.lap - profile.eval_t(w),
        wj.dt + cross - profile.eval_x(w),
        wj.lap - profile.eval_y(w),
        grad_w2 - profile.z_value(),
    ]
}

/// Evaluate the five conditions at the retained points of `grid`.
pub fn check_conditions(spec: &AnsatzSpec, grid: &GridSpec, method: Method) -> Result<ResidualReport> {
    if grid.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            got: grid.dim(),
        });
    }
    let (points, excluded) = grid.sample(spec.surfaces())?;
    let tolerance = match method {
        Method::Analytic => ANALYTIC_TOLERANCE,
        Method::Oracle => oracle_tolerance(grid.h),
    };
    check_conditions_at(spec, &points, excluded, method, grid.h, tolerance)
}

/// As [`check_conditions`] on an explicit point set.
pub fn check_conditions_at(
    spec: &AnsatzSpec,
    points: &[SpaceTimePoint],
    excluded: usize,
    method: Method,
    h: f64,
    tolerance: f64,
) -> Result<ResidualReport> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let profile = spec.profile();
    let rows: Vec<Vec<f64>> = match method {
        Method::Analytic => points
            .par_iter()
            .map(|p| condition_row(profile, &spec.phase_jet(p), &spec.variable_jet(p)))
            .collect(),
        Method::Oracle => {
            let (ff, wf) = (spec.phase_field(), spec.variable_field());
            points
                .par_iter()
                .map(|p| Ok(condition_row(profile, &oracle_jet(&ff, p, h)?, &oracle_jet(&wf, p, h)?)))
                .collect::<Result<_>>()?
        }
    };
    let mut report = ResidualReport::from_rows(
        subject_name(spec),
        method,
        (method == Method::Oracle).then_some(h),
        &CONDITION_NAMES,
        &rows,
        excluded,
        tolerance,
    )?;
    report.notes.push(format!("profile: {profile}"));
    report.notes.extend(spec.notes().iter().cloned());
    Ok(report)
}

fn subject_name(spec: &AnsatzSpec) -> String {
    let params: Vec<String> = spec
        .params()
        .0
        .iter()
        .map(|(k, v)| format!("{k}={v}"))
        .collect();
    format!("{} (n={}; {})", spec.family(), spec.dim(), params.join(", "))
}

/// Basis in which the recovered profile is expanded.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "basis", rename_all = "snake_case")]
pub enum ProfileBasis {
    /// `{1, ω}` (N = 0)
    Affine,
    /// `{1, ω⁻²}` (N = 1)
    InverseSquare,
    /// `{1}` (N = 2, or a time branch without poles)
    Constant,
    /// `{1/(t + p_i)}` for the time branch
    PartialFractions { poles: Vec<f64> },
}

impl ProfileBasis {
    pub fn for_profile(profile: &ReductionProfile) -> Self {
        if profile.z == 0 {
            return match &profile.t {
                crate::profile::ProfileFn::PoleSum { poles } if !poles.is_empty() => {
                    ProfileBasis::PartialFractions {
                        poles: poles.clone(),
                    }
                }
                _ => ProfileBasis::Constant,
            };
        }
        match profile.radial {
            0 => ProfileBasis::Affine,
            1 => ProfileBasis::InverseSquare,
            _ => ProfileBasis::Constant,
        }
    }

    pub fn size(&self) -> usize {
        match self {
            ProfileBasis::Affine | ProfileBasis::InverseSquare => 2,
            ProfileBasis::Constant => 1,
            ProfileBasis::PartialFractions { poles } => poles.len(),
        }
    }

    pub fn eval(&self, w: f64) -> Vec<f64> {
        match self {
            ProfileBasis::Affine => vec![1.0, w],
            ProfileBasis::InverseSquare => vec![1.0, 1.0 / (w * w)],
            ProfileBasis::Constant => vec![1.0],
            ProfileBasis::PartialFractions { poles } => poles.iter().map(|p| 1.0 / (w + p)).collect(),
        }
    }

    /// Same basis shape; pole locations are not compared.
    pub fn same_form(&self, other: &ProfileBasis) -> bool {
        std::mem::discriminant(self) == std::mem::discriminant(other) && self.size() == other.size()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileFit {
    #[serde(flatten)]
    pub basis: ProfileBasis,
    pub coefficients: Vec<f64>,
    pub residual: f64,
    /// `S` for the unit branch, `T` for the time branch.
    pub target: String,
}

/// `(ω, S)` with `S = 2f_t + f_af_a` for the unit branch, `(t, T)` with
/// `T = Δf` for the time branch, from analytic derivatives.
pub fn profile_samples(spec: &AnsatzSpec, points: &[SpaceTimePoint]) -> Vec<(f64, f64)> {
    let time_branch = spec.profile().z == 0;
    points
        .iter()
        .map(|p| {
            let j = spec.phase_jet(p);
            let w = spec.omega(p);
            if time_branch {
                (w, j.lap)
            } else {
                (w, 2.0 * j.dt + j.grad.iter().map(|g| g * g).sum::<f64>())
            }
        })
        .collect()
}

/// Least-squares fit of recovered samples in the basis fixed by the profile.
pub fn fit_profile(spec: &AnsatzSpec, samples: &[(f64, f64)]) -> Result<ProfileFit> {
    let basis = ProfileBasis::for_profile(spec.profile());
    let size = basis.size();
    if samples.len() < 2 * size {
        return Err(Error::InsufficientSamples {
            needed: 2 * size,
            got: samples.len(),
        });
    }
    let mut distinct: Vec<f64> = samples.iter().map(|s| s.0).collect();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs().max(1.0));
    if distinct.len() < size {
        return Err(Error::DegenerateSamples);
    }
    let design: Vec<Vec<f64>> = samples.iter().map(|s| basis.eval(s.0)).collect();
    let y: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let coefficients = lstsq::solve(&design, &y)?;
    let residual = lstsq::rms_residual(&design, &y, &coefficients);
    Ok(ProfileFit {
        basis,
        coefficients,
        residual,
        target: if spec.profile().z == 0 { "T" } else { "S" }.into(),
    })
}

/// Closed-form coefficients the fit should recover: unit weights on the
/// poles for the time branch, `(2b, −4a)`, `(2α, c²)` and `(2β)` for II.1–3.
pub fn expected_coefficients(spec: &AnsatzSpec) -> Vec<f64> {
    let p = |k: &str| spec.params().get(k).unwrap_or(f64::NAN);
    match spec.family() {
        Family::I1 => vec![1.0; 3],
        Family::I2 => vec![1.0; 2],
        Family::I3 => vec![1.0],
        Family::I4 => vec![0.0],
        Family::II1 => vec![2.0 * p("b"), -4.0 * p("a")],
        Family::II2 => vec![2.0 * p("alpha"), p("c") * p("c")],
        Family::II3 => vec![2.0 * p("beta")],
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThetaCheck {
    /// Which reading of the θ condition is tested.
    pub reading: String,
    pub degree: usize,
    /// Ascending coefficients of the monic θ (last entry is 1).
    pub coefficients: Vec<f64>,
    pub defect: f64,
    pub tolerance: f64,
    pub satisfied: bool,
}

/// Find the lowest-degree monic `θ` (degree ≤ n) minimizing the rms of
/// `θ(t)·T(t) − θ'(t)` over the samples.
pub fn check_theta(samples: &[(f64, f64)], n: usize, tolerance: f64) -> Result<ThetaCheck> {
    let mut times: Vec<f64> = samples.iter().map(|s| s.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    if times.len() < n + 2 {
        return Err(Error::InsufficientSamples {
            needed: n + 2,
            got: times.len(),
        });
    }
    if samples.iter().any(|(t, v)| !t.is_finite() || !v.is_finite()) {
        return Err(Error::Precondition("T sampled at a pole".into()));
    }

    let mut best: Option<ThetaCheck> = None;
    for degree in 0..=n {
        // unknowns a_0..a_{d−1}; θ = t^d + Σ a_j t^j
        let lead = |t: f64, v: f64| {
            let deriv = if degree == 0 { 0.0 } else { degree as f64 * t.powi(degree as i32 - 1) };
            t.powi(degree as i32) * v - deriv
        };
        let y: Vec<f64> = samples.iter().map(|&(t, v)| -lead(t, v)).collect();
        let (coefficients, defect) = if degree == 0 {
            let defect = (y.iter().map(|r| r * r).sum::<f64>() / y.len() as f64).sqrt();
            (vec![1.0], defect)
        } else {
            let design: Vec<Vec<f64>> = samples
                .iter()
                .map(|&(t, v)| {
                    (0..degree)
                        .map(|j| {
                            let deriv = if j == 0 { 0.0 } else { j as f64 * t.powi(j as i32 - 1) };
                            t.powi(j as i32) * v - deriv
                        })
                        .collect()
                })
                .collect();
            let a = lstsq::solve(&design, &y)?;
            let defect = lstsq::rms_residual(&design, &y, &a);
            let mut c = a;
            c.push(1.0);
            (c, defect)
        };
        let check = ThetaCheck {
            reading: "T = θ'/θ (defect θ·T − θ')".into(),
            degree,
            coefficients,
            defect,
            tolerance,
            satisfied: defect <= tolerance,
        };
        if check.satisfied {
            return Ok(check);
        }
        if best.as_ref().map_or(true, |b| check.defect < b.defect) {
            best = Some(check);
        }
    }
    Ok(best.expect("at least degree 0 is tried"))
}

/// `(t, T(t))` along the lattice times, from the analytic Laplacian of f.
pub fn theta_samples(spec: &AnsatzSpec, times: &[f64]) -> Vec<(f64, f64)> {
    let x = vec![1.0; spec.dim()];
    times
        .iter()
        .map(|&t| (t, spec.phase_jet(&SpaceTimePoint::new(t, x.clone())).lap))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelSetCheck {
    pub omega: f64,
    pub points: usize,
    pub deviation: f64,
    pub tolerance: f64,
    pub passed: bool,
}

/// Evaluate `E = (2iu_t + Δu − uF(|u|))·exp(−if)` with `u = exp(if)·φ(ω)` at
/// points of one level set and return the largest pairwise spread.
pub fn check_level_set_constancy(
    spec: &AnsatzSpec,
    nonlinearity: &Nonlinearity,
    test_profile: Arc<dyn Fn(f64) -> Complex64 + Send + Sync>,
    omega_value: f64,
    points: &[SpaceTimePoint],
    h: f64,
) -> Result<LevelSetCheck> {
    if points.len() < 2 {
        return Err(Error::InsufficientSamples {
            needed: 2,
            got: points.len(),
        });
    }
    for p in points {
        let w = spec.omega(p);
        if (w - omega_value).abs() > 1e-12 {
            return Err(Error::Precondition(format!(
                "point {p} has ω = {w}, not on the level set ω = {omega_value}"
            )));
        }
    }
    let (ff, wf) = (spec.phase_field(), spec.variable_field());
    let u = ComplexField::new(spec.dim(), move |p| {
        Complex64::from_polar(1.0, ff.eval(p)) * test_profile(wf.eval(p))
    })
    .with_surfaces(spec.surfaces().to_vec());
    let values: Vec<Complex64> = points
        .iter()
        .map(|p| Ok(nls_residual(&u, p, nonlinearity, h)? * Complex64::from_polar(1.0, -spec.f(p))))
        .collect::<Result<_>>()?;
    let mut deviation: f64 = 0.0;
    for (i, a) in values.iter().enumerate() {
        for b in &values[i + 1..] {
            deviation = deviation.max((a - b).norm());
        }
    }
    Ok(LevelSetCheck {
        omega: omega_value,
        points: points.len(),
        deviation,
        tolerance: LEVEL_SET_TOLERANCE,
        passed: deviation <= LEVEL_SET_TOLERANCE,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InvarianceReport {
    pub transform: EquivalenceTransform,
    pub report: ResidualReport,
    pub baseline_fit: ProfileFit,
    pub transformed_fit: ProfileFit,
    pub same_basis: bool,
    pub same_radial: bool,
    pub max_coefficient_shift: f64,
}

impl InvarianceReport {
    pub fn passed(&self) -> bool {
        self.report.passed() && self.same_basis && self.same_radial
    }
}

/// Transform `spec`, then re-verify it on the images of the baseline grid
/// points and refit its profile.
pub fn check_transform_invariance(
    spec: &AnsatzSpec,
    transform: &EquivalenceTransform,
    grid: &GridSpec,
    method: Method,
) -> Result<InvarianceReport> {
    let moved = equivalence_transform(spec, transform)?;
    let (base_points, excluded) = grid.sample(spec.surfaces())?;
    let points: Vec<SpaceTimePoint> = base_points.iter().map(|q| transform.backward(q)).collect();
    let tolerance = match method {
        Method::Analytic => ANALYTIC_TOLERANCE,
        Method::Oracle => oracle_tolerance(grid.h),
    };
    let report = check_conditions_at(&moved, &points, excluded, method, grid.h, tolerance)?;
    let baseline_fit = fit_profile(spec, &profile_samples(spec, &base_points))?;
    let transformed_fit = fit_profile(&moved, &profile_samples(&moved, &points))?;
    let max_coefficient_shift = baseline_fit
        .coefficients
        .iter()
        .zip(&transformed_fit.coefficients)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    Ok(InvarianceReport {
        transform: transform.clone(),
        same_basis: baseline_fit.basis.same_form(&transformed_fit.basis),
        same_radial: spec.profile().radial == moved.profile().radial,
        report,
        baseline_fit,
        transformed_fit,
        max_coefficient_shift,
    })
}
