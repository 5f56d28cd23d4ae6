//! The reduced ODE for `φ(ω)`, its closed-form solutions and the lift back
//! to `u(t, x) = exp(i f)·φ(ω)`.
//!
//! Unit branch (`Z = 1`): `φ'' = φF(|φ|) + Sφ − (N/ω)φ'`.
//! Time branch (`Z = 0`, `ω = t`): `2φ' = −Tφ − iφF(|φ|)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::catalog::AnsatzSpec;
use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;
use crate::numerics::{ComplexField, SingularSurface, SpaceTimePoint};
use crate::profile::{ProfileFn, ReductionProfile};

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

/// Beyond this modulus an integration is treated as blown up.
const BLOW_UP_MODULUS: f64 = 1e150;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Branch {
    /// `Z = 1`, second order in `ω`.
    Unit,
    /// `Z = 0`, first order in `t`.
    Time,
}

#[derive(Clone, Debug)]
pub struct ReducedOde {
    profile: ReductionProfile,
    nonlinearity: Nonlinearity,
    singular_points: Vec<f64>,
}

pub fn build_reduced_ode(profile: &ReductionProfile, nonlinearity: Nonlinearity) -> Result<ReducedOde> {
    profile.validate()?;
    let singular_points = if profile.z == 0 {
        match &profile.t {
            ProfileFn::PoleSum { poles } => poles.iter().map(|p| -p).collect(),
            _ => Vec::new(),
        }
    } else if profile.radial >= 1 {
        vec![0.0]
    } else {
        Vec::new()
    };
    Ok(ReducedOde {
        profile: profile.clone(),
        nonlinearity,
        singular_points,
    })
}

impl ReducedOde {
    pub fn branch(&self) -> Branch {
        if self.profile.z == 0 {
            Branch::Time
        } else {
            Branch::Unit
        }
    }

    pub fn profile(&self) -> &ReductionProfile {
        &self.profile
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    /// Values of the independent variable where the coefficients blow up.
    pub fn singular_points(&self) -> &[f64] {
        &self.singular_points
    }

    /// `φ''` for the unit branch.
    pub fn second_order_rhs(&self, w: f64, phi: Complex64, dphi: Complex64) -> Complex64 {
        let n = self.profile.radial as f64;
        let damping = if n == 0.0 { Complex64::new(0.0, 0.0) } else { dphi * (n / w) };
        phi * self.nonlinearity.eval(phi.norm()) + phi * self.profile.eval_s(w) - damping
    }

    /// `φ'` for the time branch.
    pub fn first_order_rhs(&self, t: f64, phi: Complex64) -> Complex64 {
        (-phi * self.profile.eval_t(t) - I * phi * self.nonlinearity.eval(phi.norm())) * 0.5
    }

    pub fn describe(&self) -> String {
        let p = &self.profile;
        let f = &self.nonlinearity;
        match self.branch() {
            Branch::Time => format!("2φ' = −T(t)φ − iφF(|φ|), T = {}, {f}", p.t),
            Branch::Unit => {
                let damping = match p.radial {
                    0 => String::new(),
                    n => format!(" − ({n}/ω)φ'"),
                };
                format!("φ'' = φF(|φ|) + S(ω)φ{damping}, S = {}, {f}", p.s)
            }
        }
    }
}

impl fmt::Display for ReducedOde {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.describe())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    PlaneWave,
    #[serde(rename = "caseI-quadrature")]
    CaseIQuadrature,
    #[serde(rename = "caseII-integrated")]
    CaseIIIntegrated,
    User,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::PlaneWave => "plane-wave",
            Provenance::CaseIQuadrature => "caseI-quadrature",
            Provenance::CaseIIIntegrated => "caseII-integrated",
            Provenance::User => "user",
        })
    }
}

type PointFn = Arc<dyn Fn(&SpaceTimePoint) -> Result<Complex64> + Send + Sync>;

/// A candidate solution `u(t, x)` of the NLS equation.
#[derive(Clone)]
pub struct SolutionHandle {
    dim: usize,
    eval: PointFn,
    provenance: Provenance,
    source: String,
    surfaces: Vec<SingularSurface>,
    interpolation_error: Option<f64>,
    notes: Vec<String>,
}

impl fmt::Debug for SolutionHandle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SolutionHandle")
            .field("dim", &self.dim)
            .field("provenance", &self.provenance)
            .field("source", &self.source)
            .finish_non_exhaustive()
    }
}

impl SolutionHandle {
    pub fn user(
        dim: usize,
        source: impl Into<String>,
        eval: impl Fn(&SpaceTimePoint) -> Complex64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            dim,
            eval: Arc::new(move |p| Ok(eval(p))),
            provenance: Provenance::User,
            source: source.into(),
            surfaces: Vec::new(),
            interpolation_error: None,
            notes: Vec::new(),
        }
    }

    pub fn with_surfaces(mut self, surfaces: Vec<SingularSurface>) -> Self {
        self.surfaces = surfaces;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn surfaces(&self) -> &[SingularSurface] {
        &self.surfaces
    }

    /// Bound on the error introduced by interpolating a sampled `φ`.
    pub fn interpolation_error(&self) -> Option<f64> {
        self.interpolation_error
    }

    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn try_eval(&self, p: &SpaceTimePoint) -> Result<Complex64> {
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        (self.eval)(p)
    }

    /// Field view for the differencing oracle; points outside the domain
    /// evaluate to NaN so the oracle reports them as non-finite.
    pub fn field(&self) -> ComplexField {
        let eval = self.eval.clone();
        ComplexField::new(self.dim, move |p| {
            eval(p).unwrap_or(Complex64::new(f64::NAN, f64::NAN))
        })
        .with_surfaces(self.surfaces.clone())
    }
}

/// `φ(t) = r(t)·exp(−(i/2)∫F(r)dt)` with `r = C·Π(t+B_i)^{−1/2}`.
#[derive(Clone, Debug)]
pub struct CaseIProfile {
    poles: Vec<f64>,
    c: f64,
    nonlinearity: Nonlinearity,
    closed_form: bool,
    anchor: f64,
}

impl CaseIProfile {
    pub fn new(poles: &[f64], c: f64, nonlinearity: &Nonlinearity) -> Result<Self> {
        if poles.is_empty() {
            return Err(Error::Precondition(
                "at least one pole is required; use the plane wave for m = 0".into(),
            ));
        }
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidParameter(format!("amplitude C = {c} must be positive")));
        }
        if poles.iter().any(|b| !b.is_finite()) {
            return Err(Error::InvalidParameter("poles must be finite".into()));
        }
        let m = poles.len();
        let closed_form = match nonlinearity {
            Nonlinearity::Zero | Nonlinearity::Log { .. } => true,
            Nonlinearity::Power { p, .. } => *p == 0.0 || m == 1 || (m == 2 && *p == 2.0 && poles[0] != poles[1]),
            Nonlinearity::Custom { .. } => false,
        };
        let min_b = poles.iter().cloned().fold(f64::INFINITY, f64::min);
        Ok(Self {
            poles: poles.to_vec(),
            c,
            nonlinearity: nonlinearity.clone(),
            closed_form,
            anchor: 1.0 - min_b,
        })
    }

    pub fn poles(&self) -> &[f64] {
        &self.poles
    }

    pub fn is_closed_form(&self) -> bool {
        self.closed_form
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        for b in &self.poles {
            if !(t + b > 0.0) {
                return Err(Error::OutOfDomain {
                    value: t,
                    lo: -b,
                    hi: f64::INFINITY,
                });
            }
        }
        Ok(())
    }

    pub fn amplitude(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.c / self.poles.iter().map(|b| t + b).product::<f64>().sqrt())
    }

    /// An antiderivative of `F(r(t))`, fixed up to an additive constant.
    pub fn phase_integral(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        let c = self.c;
        let p = &self.poles;
        let value = match &self.nonlinearity {
            Nonlinearity::Zero => 0.0,
            Nonlinearity::Power { g, p: q } if *q == 0.0 => g * t,
            Nonlinearity::Power { g, p: q } if p.len() == 1 => {
                let e = -q / 2.0 + 1.0;
                let s = t + p[0];
                let base = if e == 0.0 { s.ln() } else { s.powf(e) / e };
                g * c.powf(*q) * base
            }
            Nonlinearity::Power { g, p: q } if self.closed_form => {
                debug_assert!(*q == 2.0 && p.len() == 2);
                g * c * c / (p[1] - p[0]) * ((t + p[0]) / (t + p[1])).ln()
            }
            Nonlinearity::Log { s } => {
                let sum: f64 = p.iter().map(|b| (t + b) * (t + b).ln() - (t + b)).sum();
                s * (t * c.ln() - 0.5 * sum)
            }
            f => {
                let (a, b) = (self.anchor, t);
                let integrand = |tau: f64| f.eval(self.c / p.iter().map(|b| tau + b).product::<f64>().sqrt());
                let v = if a == b {
                    0.0
                } else if a < b {
                    quadrature::integrate(integrand, a, b, 1e-10).integral
                } else {
                    -quadrature::integrate(integrand, b, a, 1e-10).integral
                };
                if !v.is_finite() {
                    return Err(Error::NonlinearityUndefined(t));
                }
                v
            }
        };
        Ok(value)
    }

    pub fn phi(&self, t: f64) -> Result<Complex64> {
        Ok(Complex64::from_polar(self.amplitude(t)?, -0.5 * self.phase_integral(t)?))
    }
}

/// `u = r(t)·exp((i/2)(Σ_{l≤m} x_l²/(t+B_l) − ∫F(r)dt))` in `n` space
/// dimensions.
pub fn case_i_quadrature(n: usize, poles: &[f64], c: f64, nonlinearity: &Nonlinearity) -> Result<SolutionHandle> {
    if poles.len() > n {
        return Err(Error::InvalidParameter(format!(
            "{} poles need at least {} space dimensions, got {n}",
            poles.len(),
            poles.len()
        )));
    }
    let profile = Arc::new(CaseIProfile::new(poles, c, nonlinearity)?);
    let mut notes = vec![
        "amplitude C·Π(t+B_i)^(−1/2): the exponent −1/2 is forced by 2r' + Tr = 0".to_string(),
    ];
    if !profile.is_closed_form() {
        notes.push(format!("∫F(r)dt by adaptive quadrature from t = {}", profile.anchor));
    }
    let source = format!("poles {poles:?}, C = {c}, {nonlinearity}");
    let prof = profile.clone();
    let eval: PointFn = Arc::new(move |p: &SpaceTimePoint| {
        let t = p.t;
        let quad: f64 = prof
            .poles
            .iter()
            .zip(&p.x)
            .map(|(b, x)| x * x / (t + b))
            .sum();
        Ok(prof.phi(t)? * Complex64::from_polar(1.0, 0.5 * quad))
    });
    Ok(SolutionHandle {
        dim: n,
        eval,
        provenance: Provenance::CaseIQuadrature,
        source,
        surfaces: poles.iter().map(|b| SingularSurface::time(-b)).collect(),
        interpolation_error: None,
        notes,
    })
}

/// `u = c·exp(i(c₁x₁ − ½F(c)t + c₂ − c₁²t/2))`.
pub fn plane_wave_solution(n: usize, c: f64, c1: f64, c2: f64, nonlinearity: &Nonlinearity) -> Result<SolutionHandle> {
    if n == 0 {
        return Err(Error::InvalidParameter("dimension must be at least 1".into()));
    }
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::InvalidParameter(format!("amplitude c = {c} must be positive")));
    }
    let fc = nonlinearity.eval(c);
    if !fc.is_finite() {
        return Err(Error::NonlinearityUndefined(c));
    }
    let eval: PointFn = Arc::new(move |p: &SpaceTimePoint| {
        let phase = c1 * p.x[0] - 0.5 * fc * p.t + c2 - 0.5 * c1 * c1 * p.t;
        Ok(Complex64::from_polar(c, phase))
    });
    Ok(SolutionHandle {
        dim: n,
        eval,
        provenance: Provenance::PlaneWave,
        source: format!("c = {c}, c1 = {c1}, c2 = {c2}, {nonlinearity}"),
        surfaces: Vec::new(),
        interpolation_error: None,
        notes: Vec::new(),
    })
}

/// `φ` and `φ'` on a uniform `ω` lattice, interpolated by cubic Hermite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledProfile {
    pub omega: Vec<f64>,
    pub phi: Vec<Complex64>,
    pub dphi: Vec<Complex64>,
    pub step: f64,
}

impl SampledProfile {
    pub fn domain(&self) -> (f64, f64) {
        (self.omega[0], *self.omega.last().unwrap())
    }

    fn locate(&self, w: f64) -> Result<(usize, f64)> {
        let (lo, hi) = self.domain();
        let slack = 1e-12 * (hi - lo);
        if !(w >= lo - slack && w <= hi + slack) {
            return Err(Error::OutOfDomain { value: w, lo, hi });
        }
        let last = self.omega.len() - 2;
        let i = (((w - lo) / self.step).floor().max(0.0) as usize).min(last);
        Ok((i, (w - self.omega[i]) / self.step))
    }

    pub fn eval(&self, w: f64) -> Result<Complex64> {
        let (i, s) = self.locate(w)?;
        let h = self.step;
        let (s2, s3) = (s * s, s * s * s);
        let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
        let h10 = s3 - 2.0 * s2 + s;
        let h01 = -2.0 * s3 + 3.0 * s2;
        let h11 = s3 - s2;
        Ok(self.phi[i] * h00 + self.dphi[i] * (h10 * h) + self.phi[i + 1] * h01 + self.dphi[i + 1] * (h11 * h))
    }

    /// `max|φ''''|·step⁴/384`, with `φ''''` estimated by fourth differences.
    pub fn interpolation_error_bound(&self) -> Option<f64> {
        if self.phi.len() < 5 {
            return None;
        }
        let v = &self.phi;
        let max_d4 = (0..v.len() - 4)
            .map(|i| (v[i] - v[i + 1] * 4.0 + v[i + 2] * 6.0 - v[i + 3] * 4.0 + v[i + 4]).norm())
            .fold(0.0, f64::max);
        // Δ⁴φ ≈ step⁴·φ''''
        Some(max_d4 / 384.0)
    }
}

/// Classical RK4 for the unit-branch ODE as a first-order system in
/// `(φ, φ')`.
pub fn integrate_case_ii(
    ode: &ReducedOde,
    phi0: Complex64,
    dphi0: Complex64,
    range: (f64, f64),
    step: f64,
) -> Result<SampledProfile> {
    if ode.branch() != Branch::Unit {
        return Err(Error::Precondition("integrate_case_ii needs a Z = 1 profile".into()));
    }
    let (a, b) = range;
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::InvalidParameter(format!("ω-range [{a}, {b}] is empty")));
    }
    if ode.profile.radial >= 1 && a <= 0.0 {
        return Err(Error::Precondition(format!(
            "ω-range must stay in ω > 0 for N = {}",
            ode.profile.radial
        )));
    }
    if !(step > 0.0) || step > (b - a) / 10.0 {
        return Err(Error::InvalidParameter(format!(
            "step {step} must be positive and at most (ω_b − ω_a)/10"
        )));
    }
    let ratio = (b - a) / step;
    let steps = if (ratio - ratio.round()).abs() < 1e-9 * ratio {
        ratio.round()
    } else {
        ratio.ceil()
    } as usize;
    let h = (b - a) / steps as f64;

    let rhs = |w: f64, y: [Complex64; 2]| [y[1], ode.second_order_rhs(w, y[0], y[1])];
    let mut out = SampledProfile {
        omega: Vec::with_capacity(steps + 1),
        phi: Vec::with_capacity(steps + 1),
        dphi: Vec::with_capacity(steps + 1),
        step: h,
    };
    let mut y = [phi0, dphi0];
    out.omega.push(a);
    out.phi.push(phi0);
    out.dphi.push(dphi0);
    for k in 0..steps {
        let w = a + k as f64 * h;
        let k1 = rhs(w, y);
        let k2 = rhs(w + h / 2.0, [y[0] + k1[0] * (h / 2.0), y[1] + k1[1] * (h / 2.0)]);
        let k3 = rhs(w + h / 2.0, [y[0] + k2[0] * (h / 2.0), y[1] + k2[1] * (h / 2.0)]);
        let k4 = rhs(w + h, [y[0] + k3[0] * h, y[1] + k3[1] * h]);
        for j in 0..2 {
            y[j] += (k1[j] + k2[j] * 2.0 + k3[j] * 2.0 + k4[j]) * (h / 6.0);
        }
        if y.iter().any(|v| !v.is_finite() || v.norm() > BLOW_UP_MODULUS) {
            return Err(Error::BlowUp { last_good: w });
        }
        out.omega.push(if k + 1 == steps { b } else { a + (k + 1) as f64 * h });
        out.phi.push(y[0]);
        out.dphi.push(y[1]);
    }
    Ok(out)
}

/// The profile `φ(ω)` handed to [`lift`].
#[derive(Clone)]
pub enum PhiProfile {
    Closed {
        eval: Arc<dyn Fn(f64) -> Result<Complex64> + Send + Sync>,
        provenance: Provenance,
    },
    Sampled(SampledProfile),
}

impl PhiProfile {
    pub fn closed(eval: impl Fn(f64) -> Complex64 + Send + Sync + 'static) -> Self {
        PhiProfile::Closed {
            eval: Arc::new(move |w| Ok(eval(w))),
            provenance: Provenance::User,
        }
    }

    pub fn case_i(profile: CaseIProfile) -> Self {
        PhiProfile::Closed {
            eval: Arc::new(move |t| profile.phi(t)),
            provenance: Provenance::CaseIQuadrature,
        }
    }
}

/// `u(t, x) = exp(i f(t, x))·φ(ω(t, x))`.
pub fn lift(spec: &AnsatzSpec, phi: PhiProfile) -> Result<SolutionHandle> {
    let (ff, wf) = (spec.phase_field(), spec.variable_field());
    let (profile_eval, provenance, interpolation_error): (Arc<dyn Fn(f64) -> Result<Complex64> + Send + Sync>, _, _) =
        match phi {
            PhiProfile::Closed { eval, provenance } => (eval, provenance, None),
            PhiProfile::Sampled(s) => {
                let bound = s.interpolation_error_bound();
                (Arc::new(move |w| s.eval(w)), Provenance::CaseIIIntegrated, bound)
            }
        };
    let eval: PointFn = Arc::new(move |p: &SpaceTimePoint| {
        Ok(Complex64::from_polar(1.0, ff.eval(p)) * profile_eval(wf.eval(p))?)
    });
    let mut notes = vec![format!("lifted through {}", spec.family())];
    if let Some(e) = interpolation_error {
        notes.push(format!("cubic interpolation error bound {e:.3e}"));
    }
    Ok(SolutionHandle {
        dim: spec.dim(),
        eval,
        provenance,
        source: format!("{} {:?}", spec.family(), spec.params().0),
        surfaces: spec.surfaces().to_vec(),
        interpolation_error,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{make_family, Family, Params};
    use crate::numerics::{nls_residual, order_check};

    fn sech(x: f64) -> f64 {
        1.0 / x.cosh()
    }

    fn unit_ode(radial: u8, s: f64, f: Nonlinearity) -> ReducedOde {
        let s = if s == 0.0 { ProfileFn::Zero } else { ProfileFn::Constant { value: s } };
        build_reduced_ode(&ReductionProfile::unit_branch(3, radial, s), f).unwrap()
    }

    #[test]
    fn rhs_forms() {
        let flat = unit_ode(0, 0.0, Nonlinearity::Zero);
        assert_eq!(flat.second_order_rhs(0.3, Complex64::new(2.0, 1.0), Complex64::new(5.0, 0.0)), Complex64::new(0.0, 0.0));

        let radial = unit_ode(2, 0.7, Nonlinearity::power(1.0, 2.0));
        let (w, phi, dphi) = (2.0, Complex64::new(0.5, 0.5), Complex64::new(1.0, -1.0));
        let want = phi * phi.norm_sqr() + phi * 0.7 - dphi * (2.0 / w);
        assert!((radial.second_order_rhs(w, phi, dphi) - want).norm() < 1e-15);
        assert_eq!(radial.singular_points(), &[0.0]);

        let time = build_reduced_ode(&ReductionProfile::time_branch(3, vec![1.0]), Nonlinearity::power(1.0, 2.0)).unwrap();
        let (t, phi) = (0.5, Complex64::new(1.0, 2.0));
        let want = (-phi / (t + 1.0) - I * phi * phi.norm_sqr()) / 2.0;
        assert!((time.first_order_rhs(t, phi) - want).norm() < 1e-15);
        assert_eq!(time.singular_points(), &[-1.0]);
    }

    #[test]
    fn inconsistent_profile_rejected() {
        let mut p = ReductionProfile::unit_branch(3, 2, ProfileFn::Zero);
        p.t = ProfileFn::Constant { value: 1.0 };
        assert!(build_reduced_ode(&p, Nonlinearity::Zero).is_err());
    }

    #[test]
    fn linear_solution_is_exact() {
        let ode = unit_ode(0, 0.0, Nonlinearity::Zero);
        let s = integrate_case_ii(&ode, Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0), (0.0, 3.0), 0.01).unwrap();
        for (w, v) in s.omega.iter().zip(&s.phi) {
            assert!((v.re - (1.0 + 2.0 * w)).abs() < 1e-12 && v.im.abs() < 1e-15);
        }
    }

    #[test]
    fn sech_tracked() {
        let ode = unit_ode(0, 1.0, Nonlinearity::power(-1.0, 2.0));
        let r2 = 2f64.sqrt();
        let s = integrate_case_ii(&ode, Complex64::new(r2, 0.0), Complex64::new(0.0, 0.0), (0.0, 5.0), 1e-3).unwrap();
        let err = s
            .omega
            .iter()
            .zip(&s.phi)
            .map(|(w, v)| (v - r2 * sech(*w)).norm())
            .fold(0.0, f64::max);
        assert!(err <= 1e-6, "{err}");
    }

    #[test]
    fn fourth_order_on_radial_problem() {
        // φ = sin(kω)/ω solves φ'' + (2/ω)φ' + k²φ = 0
        let k: f64 = 1.3;
        let ode = unit_ode(2, -k * k, Nonlinearity::Zero);
        let exact = |w: f64| (k * w).sin() / w;
        let dexact = |w: f64| (k * w).cos() * k / w - (k * w).sin() / (w * w);
        let run = |h: f64| {
            let s = integrate_case_ii(&ode, exact(1.0).into(), dexact(1.0).into(), (1.0, 4.0), h).unwrap();
            (s.phi.last().unwrap() - exact(4.0)).norm()
        };
        let ratio = run(0.1) / run(0.05);
        assert!((11.2..=20.8).contains(&ratio), "{ratio}");
    }

    #[test]
    fn blow_up_reports_last_good() {
        // φ'' = φ³ from φ = 1, φ' = 1 blows up near ω = √2
        let ode = unit_ode(0, 0.0, Nonlinearity::power(1.0, 2.0));
        match integrate_case_ii(&ode, 1.0.into(), 1.0.into(), (0.0, 10.0), 1e-3) {
            Err(Error::BlowUp { last_good }) => assert!(last_good > 0.5 && last_good < 2.0),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn integrator_preconditions() {
        let radial = unit_ode(1, 0.0, Nonlinearity::Zero);
        assert!(integrate_case_ii(&radial, 1.0.into(), 0.0.into(), (0.0, 1.0), 0.01).is_err());
        assert!(integrate_case_ii(&radial, 1.0.into(), 0.0.into(), (1.0, 2.0), 0.5).is_err());
    }

    #[test]
    fn hermite_interpolation_is_cubic_exact() {
        let f = |w: f64| Complex64::new(w * w * w - w, 2.0 * w * w);
        let df = |w: f64| Complex64::new(3.0 * w * w - 1.0, 4.0 * w);
        let omega: Vec<f64> = (0..11).map(|i| i as f64 * 0.1).collect();
        let s = SampledProfile {
            phi: omega.iter().map(|w| f(*w)).collect(),
            dphi: omega.iter().map(|w| df(*w)).collect(),
            omega,
            step: 0.1,
        };
        for w in [0.0, 0.33, 0.777, 1.0] {
            assert!((s.eval(w).unwrap() - f(w)).norm() < 1e-13);
        }
        assert!(s.interpolation_error_bound().unwrap() < 1e-13);
        assert!(matches!(s.eval(1.5), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn plane_wave_examples() {
        let cubic = Nonlinearity::power(1.0, 2.0);
        let u = plane_wave_solution(3, 1.0, 1.0, 0.0, &cubic).unwrap();
        let p = SpaceTimePoint::new(0.4, [0.3, 0.1, 0.2]);
        assert!((u.try_eval(&p).unwrap() - Complex64::from_polar(1.0, 0.3 - 0.4)).norm() < 1e-15);
        assert!(nls_residual(&u.field(), &p, &cubic, 1e-3).unwrap().norm() < 1e-5);

        let flat = plane_wave_solution(2, 1.5, 0.0, 0.3, &Nonlinearity::Zero).unwrap();
        assert!((flat.try_eval(&SpaceTimePoint::new(2.0, [1.0, 1.0])).unwrap() - Complex64::from_polar(1.5, 0.3)).norm() < 1e-15);

        let two = plane_wave_solution(1, 2.0, 0.0, 0.0, &cubic).unwrap();
        assert!((two.try_eval(&SpaceTimePoint::new(0.25, [0.0])).unwrap() - Complex64::from_polar(2.0, -0.5)).norm() < 1e-15);
        assert!(plane_wave_solution(1, 0.0, 0.0, 0.0, &cubic).is_err());
    }

    #[test]
    fn case_i_single_pole_closed_form() {
        let u = case_i_quadrature(1, &[0.0], 1.0, &Nonlinearity::power(1.0, 2.0)).unwrap();
        for (t, x) in [(0.5f64, 0.2f64), (1.0, -0.7), (2.5, 1.1)] {
            let want = Complex64::from_polar(t.powf(-0.5), 0.5 * (x * x / t - t.ln()));
            let got = u.try_eval(&SpaceTimePoint::new(t, [x])).unwrap();
            assert!((got - want).norm() < 1e-14);
        }
        assert!(matches!(
            u.try_eval(&SpaceTimePoint::new(-0.1, [0.0])),
            Err(Error::OutOfDomain { .. })
        ));
    }

    #[test]
    fn case_i_rejects_bad_input() {
        assert!(case_i_quadrature(1, &[], 1.0, &Nonlinearity::Zero).is_err());
        assert!(case_i_quadrature(1, &[1.0], 0.0, &Nonlinearity::Zero).is_err());
        assert!(case_i_quadrature(1, &[1.0, 2.0], 1.0, &Nonlinearity::Zero).is_err());
    }

    #[test]
    fn case_i_residual_converges() {
        for f in [Nonlinearity::Zero, Nonlinearity::power(1.0, 2.0), Nonlinearity::log(0.5)] {
            let u = case_i_quadrature(2, &[1.0, 2.0], 1.0, &f).unwrap();
            let p = SpaceTimePoint::new(0.7, [0.4, -0.3]);
            let r = |h| nls_residual(&u.field(), &p, &f, h).unwrap().norm();
            let chk = order_check(r(1e-2), r(5e-3), 4.0, 0.2);
            assert!(chk.passed, "{f}: {chk:?}");
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let pole_sets: [&[f64]; 2] = [&[0.5], &[1.0, 2.0]];
        for poles in pole_sets {
            for f in [Nonlinearity::power(0.7, 2.0), Nonlinearity::power(1.3, 3.0), Nonlinearity::log(0.4), Nonlinearity::power(2.0, 0.0)] {
                let closed = CaseIProfile::new(poles, 1.2, &f).unwrap();
                let label = f.to_string();
                let g = f.clone();
                let numeric = CaseIProfile::new(poles, 1.2, &Nonlinearity::custom(label, move |r| g.eval(r))).unwrap();
                assert!(!numeric.is_closed_form());
                let d = |p: &CaseIProfile| p.phase_integral(2.0).unwrap() - p.phase_integral(0.5).unwrap();
                assert!((d(&closed) - d(&numeric)).abs() < 1e-9, "{f} {poles:?}");
            }
        }
    }

    #[test]
    fn amplitude_law_and_decoupling() {
        let poles = [1.0, 2.0, 3.0];
        let a = CaseIProfile::new(&poles, 0.8, &Nonlinearity::power(1.0, 2.0)).unwrap();
        let b = CaseIProfile::new(&poles, 0.8, &Nonlinearity::log(-2.0)).unwrap();
        for t in [0.0, 0.3, 1.7, 9.0] {
            let pa = a.phi(t).unwrap();
            let inv = pa.norm_sqr() * poles.iter().map(|p| t + p).product::<f64>();
            assert!((inv - 0.64).abs() < 1e-12);
            assert!((pa.norm() - b.phi(t).unwrap().norm()).abs() < 1e-15);
        }
    }

    #[test]
    fn lift_reproduces_quadrature() {
        let poles = [1.0, 2.0, 3.0];
        let f = Nonlinearity::power(1.0, 2.0);
        let spec = make_family(Family::I1, 3, &Params::new().with("A1", 1.0).with("A2", 2.0).with("A3", 3.0)).unwrap();
        let lifted = lift(&spec, PhiProfile::case_i(CaseIProfile::new(&poles, 1.0, &f).unwrap())).unwrap();
        let direct = case_i_quadrature(3, &poles, 1.0, &f).unwrap();
        for p in [SpaceTimePoint::new(0.2, [0.1, 0.5, -0.4]), SpaceTimePoint::new(1.3, [1.0, -1.0, 0.7])] {
            assert!((lifted.try_eval(&p).unwrap() - direct.try_eval(&p).unwrap()).norm() < 1e-12);
        }
    }

    #[test]
    fn lift_constant_on_trivial_phase() {
        let spec = make_family(Family::I4, 3, &Params::new().with("c2", 0.0).with("c3", 0.0)).unwrap();
        let u = lift(&spec, PhiProfile::closed(|_| Complex64::new(1.0, 0.0))).unwrap();
        assert_eq!(u.try_eval(&SpaceTimePoint::new(0.3, [1.0, 2.0, 3.0])).unwrap(), Complex64::new(1.0, 0.0));
    }

    #[test]
    fn lifted_integrated_profile_on_spheres() {
        // II.3 with β = ½ gives S = 1; F = −r²
        let spec = make_family(Family::II3, 3, &Params::new().with("beta", 0.5)).unwrap();
        let f = Nonlinearity::power(-1.0, 2.0);
        let ode = build_reduced_ode(spec.profile(), f.clone()).unwrap();
        let s = integrate_case_ii(&ode, Complex64::new(0.3, 0.1), Complex64::new(0.2, 0.0), (0.5, 2.0), 1e-4).unwrap();
        let u = lift(&spec, PhiProfile::Sampled(s)).unwrap();
        assert_eq!(u.provenance(), Provenance::CaseIIIntegrated);
        assert!(u.interpolation_error().unwrap() < 1e-12);
        let p = SpaceTimePoint::new(0.4, [0.6, 0.5, 0.4]);
        let r = |h| nls_residual(&u.field(), &p, &f, h).unwrap().norm();
        let chk = order_check(r(1e-2), r(5e-3), 4.0, 0.2);
        assert!(chk.passed, "{chk:?}");
    }
}
