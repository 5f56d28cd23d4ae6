//! Sampling grids, central-difference derivative oracles and PDE residuals.
//!
//! Everything here is independent of the analytic layers: derivatives come
//! from second-order central differences applied to plain evaluation handles,
//! so the residuals can certify closed-form claims made elsewhere.

use std::fmt;
use std::ops::{Add, Mul, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nonlinearity::Nonlinearity;

/// Complex field value.
pub type ComplexSample = Complex64;

/// Default finite-difference step.
pub const DEFAULT_H: f64 = 1e-3;

/// Residuals below this level are treated as round-off when comparing
/// successive step sizes.
pub const ROUNDOFF_FLOOR: f64 = 1e-8;

/// A point `(t, x₁..x_n)`. The wave-equation module reuses it with
/// `t = x₀` and `x = (x₁, x₂, x₃)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimePoint {
    pub t: f64,
    pub x: Vec<f64>,
}

impl SpaceTimePoint {
    pub fn new(t: f64, x: impl Into<Vec<f64>>) -> Self {
        Self { t, x: x.into() }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    pub fn is_finite(&self) -> bool {
        self.t.is_finite() && self.x.iter().all(|v| v.is_finite())
    }

    pub fn shift_t(&self, dt: f64) -> Self {
        Self {
            t: self.t + dt,
            x: self.x.clone(),
        }
    }

    pub fn shift_x(&self, axis: usize, dx: f64) -> Self {
        let mut x = self.x.clone();
        x[axis] += dx;
        Self { t: self.t, x }
    }
}

impl fmt::Display for SpaceTimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(t={}, x={:?})", self.t, self.x)
    }
}

type DistanceFn = dyn Fn(&SpaceTimePoint) -> f64 + Send + Sync;

/// A surface on which a field is not smooth, given by a distance estimate.
#[derive(Clone)]
pub struct SingularSurface {
    label: String,
    distance: Arc<DistanceFn>,
}

impl fmt::Debug for SingularSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_tuple("SingularSurface").field(&self.label).finish()
    }
}

impl SingularSurface {
    pub fn new(
        label: impl Into<String>,
        distance: impl Fn(&SpaceTimePoint) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            distance: Arc::new(distance),
        }
    }

    /// The time slice `t = at`.
    pub fn time(at: f64) -> Self {
        Self::new(format!("t = {at}"), move |p| (p.t - at).abs())
    }

    /// The axis `x₁ = x₂ = 0`.
    pub fn axis() -> Self {
        Self::new("x1 = x2 = 0", |p| p.x[0].hypot(p.x[1]))
    }

    /// The spatial origin `x = 0`.
    pub fn origin() -> Self {
        Self::new("x = 0", |p| p.x.iter().map(|v| v * v).sum::<f64>().sqrt())
    }

    /// Branch cut of `atan2(x₁, x₂)`: the half-plane `x₁ = 0, x₂ ≤ 0`.
    pub fn atan2_cut() -> Self {
        Self::new("x1 = 0, x2 <= 0", |p| {
            if p.x[1] <= 0.0 {
                p.x[0].abs()
            } else {
                p.x[0].hypot(p.x[1])
            }
        })
    }

    /// Zero set of `g`, with distance estimated as `|g| / |∇g|`.
    pub fn level(
        label: impl Into<String>,
        value_and_grad_norm: impl Fn(&SpaceTimePoint) -> (f64, f64) + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, move |p| {
            let (g, norm) = value_and_grad_norm(p);
            if norm > 0.0 {
                g.abs() / norm
            } else {
                g.abs()
            }
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn distance(&self, p: &SpaceTimePoint) -> f64 {
        (self.distance)(p)
    }

    /// Re-express the surface through a coordinate map `p ↦ map(p)` into the
    /// frame where the surface was declared.
    pub fn pull_back(
        &self,
        map: Arc<dyn Fn(&SpaceTimePoint) -> SpaceTimePoint + Send + Sync>,
    ) -> Self {
        let inner = self.distance.clone();
        Self {
            label: self.label.clone(),
            distance: Arc::new(move |p| inner(&map(p))),
        }
    }
}

/// Nearest declared surface and its distance, if any surfaces exist.
pub fn nearest_surface<'a>(
    surfaces: &'a [SingularSurface],
    p: &SpaceTimePoint,
) -> Option<(&'a SingularSurface, f64)> {
    surfaces
        .iter()
        .map(|s| (s, s.distance(p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
}

/// Values that can be differenced: `f64` and complex samples.
pub trait FieldValue:
    Copy + Send + Sync + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self>
{
    fn zero() -> Self;
    fn finite(&self) -> bool;
}

impl FieldValue for f64 {
    fn zero() -> Self {
        0.0
    }
    fn finite(&self) -> bool {
        self.is_finite()
    }
}

impl FieldValue for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// An evaluation handle together with its dimension and singular surfaces.
#[derive(Clone)]
pub struct Field<T> {
    dim: usize,
    eval: Arc<dyn Fn(&SpaceTimePoint) -> T + Send + Sync>,
    surfaces: Vec<SingularSurface>,
}

pub type ScalarField = Field<f64>;
pub type ComplexField = Field<Complex64>;

impl<T: FieldValue> Field<T> {
    pub fn new(dim: usize, eval: impl Fn(&SpaceTimePoint) -> T + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(eval),
            surfaces: Vec::new(),
        }
    }

    pub fn from_arc(dim: usize, eval: Arc<dyn Fn(&SpaceTimePoint) -> T + Send + Sync>) -> Self {
        Self {
            dim,
            eval,
            surfaces: Vec::new(),
        }
    }

    pub fn with_surfaces(mut self, surfaces: Vec<SingularSurface>) -> Self {
        self.surfaces = surfaces;
        self
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn surfaces(&self) -> &[SingularSurface] {
        &self.surfaces
    }

    pub fn eval(&self, p: &SpaceTimePoint) -> T {
        (self.eval)(p)
    }

    fn sample(&self, p: &SpaceTimePoint) -> Result<T> {
        let v = (self.eval)(p);
        if v.finite() {
            Ok(v)
        } else {
            Err(Error::NonFinite {
                t: p.t,
                x: p.x.clone(),
            })
        }
    }

    fn guard(&self, p: &SpaceTimePoint, h: f64) -> Result<()> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidGrid(format!("step h = {h} must be positive")));
        }
        if p.dim() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: p.dim(),
            });
        }
        if let Some((s, d)) = nearest_surface(&self.surfaces, p) {
            if d <= h {
                return Err(Error::PoleProximity {
                    surface: s.label().to_string(),
                    distance: d,
                    h,
                });
            }
        }
        Ok(())
    }
}

/// Central-difference spatial gradient, one entry per axis.
pub fn fd_gradient<T: FieldValue>(field: &Field<T>, p: &SpaceTimePoint, h: f64) -> Result<Vec<T>> {
    field.guard(p, h)?;
    (0..field.dim)
        .map(|a| {
            let fwd = field.sample(&p.shift_x(a, h))?;
            let bwd = field.sample(&p.shift_x(a, -h))?;
            Ok((fwd - bwd) * (0.5 / h))
        })
        .collect()
}

/// Sum of 3-point second differences over the spatial axes.
pub fn fd_laplacian<T: FieldValue>(field: &Field<T>, p: &SpaceTimePoint, h: f64) -> Result<T> {
    field.guard(p, h)?;
    let centre = field.sample(p)?;
    let mut acc = T::zero();
    for a in 0..field.dim {
        let fwd = field.sample(&p.shift_x(a, h))?;
        let bwd = field.sample(&p.shift_x(a, -h))?;
        acc = acc + (fwd + bwd - centre * 2.0) * (1.0 / (h * h));
    }
    Ok(acc)
}

pub fn fd_time_derivative<T: FieldValue>(field: &Field<T>, p: &SpaceTimePoint, h: f64) -> Result<T> {
    field.guard(p, h)?;
    let fwd = field.sample(&p.shift_t(h))?;
    let bwd = field.sample(&p.shift_t(-h))?;
    Ok((fwd - bwd) * (0.5 / h))
}

pub fn fd_second_time_derivative<T: FieldValue>(
    field: &Field<T>,
    p: &SpaceTimePoint,
    h: f64,
) -> Result<T> {
    field.guard(p, h)?;
    let centre = field.sample(p)?;
    let fwd = field.sample(&p.shift_t(h))?;
    let bwd = field.sample(&p.shift_t(-h))?;
    Ok((fwd + bwd - centre * 2.0) * (1.0 / (h * h)))
}

/// `2i·u_t + Δu − u·F(|u|)` with every derivative taken by differencing.
pub fn nls_residual(
    u: &ComplexField,
    p: &SpaceTimePoint,
    nonlinearity: &Nonlinearity,
    h: f64,
) -> Result<ComplexSample> {
    let u_t = fd_time_derivative(u, p, h)?;
    let lap = fd_laplacian(u, p, h)?;
    let value = u.sample(p)?;
    let modulus = value.norm();
    let fv = nonlinearity.eval(modulus);
    if !fv.is_finite() {
        return Err(Error::NonlinearityUndefined(modulus));
    }
    Ok(Complex64::i() * 2.0 * u_t + lap - value * fv)
}

/// `u^k` on the principal real branch.
pub fn real_power(base: f64, k: f64) -> Result<f64> {
    if k.fract() == 0.0 && k.abs() < i32::MAX as f64 {
        let v = base.powi(k as i32);
        if v.is_finite() {
            return Ok(v);
        }
        return Err(Error::NonpositiveBase { base, k });
    }
    if base > 0.0 {
        Ok(base.powf(k))
    } else {
        Err(Error::NonpositiveBase { base, k })
    }
}

/// `u₀₀ − u₁₁ − u₂₂ − u₃₃ − λu^k` for a field over `(x₀; x₁, x₂, x₃)`.
pub fn wave_residual(u: &ScalarField, p: &SpaceTimePoint, lambda: f64, k: f64, h: f64) -> Result<f64> {
    let u_00 = fd_second_time_derivative(u, p, h)?;
    let lap = fd_laplacian(u, p, h)?;
    let value = u.sample(p)?;
    let source = if lambda == 0.0 {
        0.0
    } else {
        lambda * real_power(value, k)?
    };
    Ok(u_00 - lap - source)
}

/// Uniform sampling lattice over `t` and each spatial axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub t_range: (f64, f64),
    pub x_ranges: Vec<(f64, f64)>,
    /// Point counts: time axis first, then one per spatial axis.
    pub counts: Vec<usize>,
    pub h: f64,
    pub exclusion_radius: f64,
}

impl GridSpec {
    /// Same interval and count on every spatial axis; exclusion radius `10·h`.
    pub fn uniform(
        n: usize,
        t_range: (f64, f64),
        t_count: usize,
        x_range: (f64, f64),
        x_count: usize,
        h: f64,
    ) -> Self {
        let mut counts = vec![t_count];
        counts.extend(std::iter::repeat(x_count).take(n));
        Self {
            t_range,
            x_ranges: vec![x_range; n],
            counts,
            h,
            exclusion_radius: 10.0 * h,
        }
    }

    pub fn dim(&self) -> usize {
        self.x_ranges.len()
    }

    /// Copy with a new step; the exclusion radius keeps its ratio to `h`.
    pub fn with_h(&self, h: f64) -> Self {
        let mut g = self.clone();
        g.exclusion_radius = self.exclusion_radius * h / self.h;
        g.h = h;
        g
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidGrid(m));
        if self.counts.len() != self.x_ranges.len() + 1 {
            return bad(format!(
                "{} counts for {} axes",
                self.counts.len(),
                self.x_ranges.len() + 1
            ));
        }
        let ranges = std::iter::once(&self.t_range).chain(self.x_ranges.iter());
        for (r, &c) in ranges.zip(&self.counts) {
            if !(r.0.is_finite() && r.1.is_finite() && r.0 <= r.1) {
                return bad(format!("empty or non-finite range {r:?}"));
            }
            if c == 0 {
                return bad("axis count must be positive".into());
            }
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return bad(format!("h = {} must be positive", self.h));
        }
        if !(self.exclusion_radius > 0.0) {
            return bad(format!(
                "exclusion radius {} must be positive",
                self.exclusion_radius
            ));
        }
        Ok(())
    }

    fn axis(range: (f64, f64), count: usize) -> Vec<f64> {
        if count == 1 {
            return vec![0.5 * (range.0 + range.1)];
        }
        let step = (range.1 - range.0) / (count - 1) as f64;
        (0..count).map(|i| range.0 + step * i as f64).collect()
    }

    /// Every lattice point, time-major.
    pub fn points(&self) -> Result<Vec<SpaceTimePoint>> {
        self.validate()?;
        let ts = Self::axis(self.t_range, self.counts[0]);
        let axes: Vec<Vec<f64>> = self
            .x_ranges
            .iter()
            .zip(&self.counts[1..])
            .map(|(&r, &c)| Self::axis(r, c))
            .collect();
        let mut out = Vec::with_capacity(self.counts.iter().product());
        let mut idx = vec![0usize; axes.len()];
        for &t in &ts {
            loop {
                let x: Vec<f64> = idx.iter().zip(&axes).map(|(&i, a)| a[i]).collect();
                out.push(SpaceTimePoint::new(t, x));
                // odometer increment, last axis fastest
                let mut carry = true;
                for d in (0..idx.len()).rev() {
                    if !carry {
                        break;
                    }
                    idx[d] += 1;
                    if idx[d] == axes[d].len() {
                        idx[d] = 0;
                    } else {
                        carry = false;
                    }
                }
                if carry {
                    break;
                }
            }
        }
        Ok(out)
    }

    /// Lattice points farther than the exclusion radius from every surface,
    /// plus the number of rejected points.
    pub fn sample(&self, surfaces: &[SingularSurface]) -> Result<(Vec<SpaceTimePoint>, usize)> {
        let all = self.points()?;
        let total = all.len();
        let kept: Vec<_> = all
            .into_iter()
            .filter(|p| surfaces.iter().all(|s| s.distance(p) > self.exclusion_radius))
            .collect();
        let excluded = total - kept.len();
        Ok((kept, excluded))
    }
}

/// Outcome of comparing a residual at `h` and `h/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderCheck {
    pub coarse: f64,
    pub fine: f64,
    /// `coarse / fine`, absent when both residuals are at round-off.
    pub ratio: Option<f64>,
    pub expected: f64,
    pub rel_tolerance: f64,
    pub passed: bool,
}

/// Accept when `coarse/fine` is within `rel_tolerance` of `expected`, or when
/// both residuals sit below [`ROUNDOFF_FLOOR`] (differencing is exact).
pub fn order_check(coarse: f64, fine: f64, expected: f64, rel_tolerance: f64) -> OrderCheck {
    if coarse <= ROUNDOFF_FLOOR && fine <= ROUNDOFF_FLOOR {
        return OrderCheck {
            coarse,
            fine,
            ratio: None,
            expected,
            rel_tolerance,
            passed: true,
        };
    }
    let ratio = coarse / fine;
    let passed = ratio.is_finite() && (ratio - expected).abs() <= rel_tolerance * expected;
    OrderCheck {
        coarse,
        fine,
        ratio: Some(ratio),
        expected,
        rel_tolerance,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quad3() -> ScalarField {
        Field::new(3, |p| p.x.iter().map(|v| v * v).sum())
    }

    #[test]
    fn gradient_exact_on_quadratic() {
        let g = fd_gradient(&quad3(), &SpaceTimePoint::new(0.0, [1.0, 2.0, 3.0]), 0.01).unwrap();
        for (got, want) in g.iter().zip([2.0, 4.0, 6.0]) {
            assert!((got - want).abs() < 1e-12, "{got} vs {want}");
        }
    }

    #[test]
    fn gradient_of_constant_vanishes() {
        let c: ScalarField = Field::new(3, |_| 4.2);
        let g = fd_gradient(&c, &SpaceTimePoint::new(0.3, [0.1, -0.2, 5.0]), 1e-3).unwrap();
        assert!(g.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn gradient_of_sine_within_taylor_bound() {
        let s: ScalarField = Field::new(2, |p| p.x[0].sin());
        let g = fd_gradient(&s, &SpaceTimePoint::new(0.0, [0.0, 0.5]), 1e-3).unwrap();
        // remainder h²/6 ≈ 1.7e-7
        assert!((g[0] - 1.0).abs() < 1e-6);
        assert!(g[1].abs() < 1e-15);
    }

    #[test]
    fn laplacian_exact_on_quadratic() {
        let l = fd_laplacian(&quad3(), &SpaceTimePoint::new(0.0, [0.4, -1.0, 2.5]), 1e-2).unwrap();
        assert!((l - 6.0).abs() < 1e-9);
        let c: ScalarField = Field::new(3, |_| 1.0);
        assert_eq!(fd_laplacian(&c, &SpaceTimePoint::new(0.0, [0.0; 3]), 1e-3).unwrap(), 0.0);
    }

    #[test]
    fn harmonic_angle_has_small_laplacian_with_order_two() {
        let f: ScalarField = Field::new(2, |p| 1.3 * p.x[0].atan2(p.x[1]))
            .with_surfaces(vec![SingularSurface::axis(), SingularSurface::atan2_cut()]);
        let p = SpaceTimePoint::new(0.0, [0.7, 0.9]);
        let coarse = fd_laplacian(&f, &p, 1e-2).unwrap().abs();
        let fine = fd_laplacian(&f, &p, 5e-3).unwrap().abs();
        assert!(coarse < 1e-3);
        assert!(fine < coarse / 3.0);
    }

    #[test]
    fn time_derivatives() {
        let sq: ScalarField = Field::new(1, |p| p.t * p.t);
        let d = fd_time_derivative(&sq, &SpaceTimePoint::new(1.0, [0.0]), 1e-3).unwrap();
        assert!((d - 2.0).abs() < 1e-10);
        let lin: ScalarField = Field::new(1, |p| 2.5 * p.t);
        let d = fd_time_derivative(&lin, &SpaceTimePoint::new(-3.0, [0.0]), 1e-3).unwrap();
        assert!((d - 2.5).abs() < 1e-10);
        let inv: ScalarField =
            Field::new(1, |p| 1.0 / (p.t + 1.0)).with_surfaces(vec![SingularSurface::time(-1.0)]);
        let d = fd_time_derivative(&inv, &SpaceTimePoint::new(0.0, [0.0]), 1e-3).unwrap();
        assert!((d + 1.0).abs() < 1e-5);
    }

    #[test]
    fn stencil_near_pole_is_rejected() {
        let inv: ScalarField =
            Field::new(1, |p| 1.0 / (p.t + 1.0)).with_surfaces(vec![SingularSurface::time(-1.0)]);
        let err = fd_time_derivative(&inv, &SpaceTimePoint::new(-0.9995, [0.0]), 1e-3).unwrap_err();
        assert!(matches!(err, Error::PoleProximity { .. }));
        assert!(matches!(
            fd_gradient(&inv, &SpaceTimePoint::new(-0.9995, [0.0]), 1e-3),
            Err(Error::PoleProximity { .. })
        ));
    }

    #[test]
    fn plane_wave_residual_cancels() {
        let u: ComplexField =
            Field::new(3, |p| Complex64::from_polar(1.0, p.x[0] - p.t));
        let r = nls_residual(&u, &SpaceTimePoint::new(0.2, [0.3, 0.1, -0.4]), &Nonlinearity::power(1.0, 2.0), 1e-3)
            .unwrap();
        assert!(r.norm() < 1e-6, "{r}");
    }

    #[test]
    fn constant_field_residual_is_zero() {
        let u: ComplexField = Field::new(2, |_| Complex64::new(0.3, -0.7));
        let r = nls_residual(&u, &SpaceTimePoint::new(0.0, [1.0, 1.0]), &Nonlinearity::Zero, 1e-3).unwrap();
        assert_eq!(r.norm(), 0.0);
    }

    #[test]
    fn undefined_nonlinearity_is_reported() {
        let u: ComplexField = Field::new(2, |_| Complex64::new(0.0, 0.0));
        let err = nls_residual(&u, &SpaceTimePoint::new(0.0, [1.0, 1.0]), &Nonlinearity::log(1.0), 1e-3)
            .unwrap_err();
        assert!(matches!(err, Error::NonlinearityUndefined(_)));
    }

    #[test]
    fn wave_residual_of_quadratics() {
        let zero: ScalarField = Field::new(3, |_| 0.0);
        let p = SpaceTimePoint::new(1.0, [0.2, 0.3, 0.4]);
        assert_eq!(wave_residual(&zero, &p, 2.0, 3.0, 1e-3).unwrap(), 0.0);
        // x₀² + x₁² is annihilated by □; x₀² − x₁² is not (□ = 2 + 2)
        let null: ScalarField = Field::new(3, |p| p.t * p.t + p.x[0] * p.x[0]);
        assert!(wave_residual(&null, &p, 0.0, 2.0, 1e-3).unwrap().abs() < 1e-6);
        let q: ScalarField = Field::new(3, |p| p.t * p.t - p.x[0] * p.x[0]);
        assert!((wave_residual(&q, &p, 0.0, 2.0, 1e-3).unwrap() - 4.0).abs() < 1e-6);
    }

    #[test]
    fn fractional_power_of_negative_base_is_an_error() {
        let neg: ScalarField = Field::new(3, |_| -1.0);
        let p = SpaceTimePoint::new(1.0, [0.0; 3]);
        assert!(matches!(
            wave_residual(&neg, &p, 1.0, 1.5, 1e-3),
            Err(Error::NonpositiveBase { .. })
        ));
        assert!(wave_residual(&neg, &p, 1.0, 2.0, 1e-3).is_ok());
    }

    #[test]
    fn grid_lattice_and_exclusion() {
        let g = GridSpec::uniform(2, (0.0, 1.0), 3, (-1.0, 1.0), 3, 1e-3);
        let pts = g.points().unwrap();
        assert_eq!(pts.len(), 27);
        assert_eq!(pts[0], SpaceTimePoint::new(0.0, [-1.0, -1.0]));
        assert_eq!(pts[1], SpaceTimePoint::new(0.0, [-1.0, 0.0]));
        let (kept, excluded) = g.sample(&[SingularSurface::axis()]).unwrap();
        assert_eq!(excluded, 3);
        assert_eq!(kept.len(), 24);
    }

    #[test]
    fn grid_validation() {
        let mut g = GridSpec::uniform(2, (0.0, 1.0), 3, (-1.0, 1.0), 3, 1e-3);
        g.h = 0.0;
        assert!(g.validate().is_err());
        let mut g = GridSpec::uniform(2, (1.0, 0.0), 3, (-1.0, 1.0), 3, 1e-3);
        assert!(g.validate().is_err());
        g.t_range = (0.0, 1.0);
        g.counts[1] = 0;
        assert!(g.validate().is_err());
    }

    #[test]
    fn order_check_classifies() {
        assert!(order_check(4e-6, 1e-6, 4.0, 0.2).passed);
        assert!(!order_check(2e-6, 1e-6, 4.0, 0.2).passed);
        let exact = order_check(1e-13, 3e-13, 4.0, 0.2);
        assert!(exact.passed && exact.ratio.is_none());
    }
}
