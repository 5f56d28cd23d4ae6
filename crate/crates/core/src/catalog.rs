//! The seven inequivalent reducing ansatz families `u = exp(i f)·φ(ω)`.
//!
//! | family | n    | ω                  | f                                         |
//! |--------|------|--------------------|-------------------------------------------|
//! | I.1    | 3    | t                  | ½ Σ_{i≤3} x_i²/(t+A_i)                    |
//! | I.2    | 2, 3 | t                  | ½ Σ_{i≤2} x_i²/(t+B_i)                    |
//! | I.3    | 2, 3 | t                  | x₁²/(2t+c₁)                               |
//! | I.4    | 2, 3 | t                  | c₂x₁ + c₃ − ½c₂²t                         |
//! | II.1   | 2, 3 | x₁ + at²           | −2atx₁ − (4/3)a²t³ + bt                   |
//! | II.2   | 2, 3 | (x₁² + x₂²)^½      | c·atan2(x₁, x₂) + αt                      |
//! | II.3   | 3    | \|x\|              | βt                                        |
//!
//! Every spec carries analytic derivatives, its declared reduction profile,
//! its singular surfaces and a generator for points on level sets of ω.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{ScalarField, SingularSurface, SpaceTimePoint};
use crate::profile::{ProfileFn, ReductionProfile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Family {
    #[serde(rename = "I.1")]
    I1,
    #[serde(rename = "I.2")]
    I2,
    #[serde(rename = "I.3")]
    I3,
    #[serde(rename = "I.4")]
    I4,
    #[serde(rename = "II.1")]
    II1,
    #[serde(rename = "II.2")]
    II2,
    #[serde(rename = "II.3")]
    II3,
}

impl Family {
    pub const ALL: [Family; 7] = [
        Family::I1,
        Family::I2,
        Family::I3,
        Family::I4,
        Family::II1,
        Family::II2,
        Family::II3,
    ];

    pub fn id(self) -> &'static str {
        match self {
            Family::I1 => "I.1",
            Family::I2 => "I.2",
            Family::I3 => "I.3",
            Family::I4 => "I.4",
            Family::II1 => "II.1",
            Family::II2 => "II.2",
            Family::II3 => "II.3",
        }
    }

    pub fn dims(self) -> &'static [usize] {
        match self {
            Family::I1 | Family::II3 => &[3],
            _ => &[2, 3],
        }
    }

    /// Default dimension used by demos: the largest allowed.
    pub fn default_dim(self) -> usize {
        *self.dims().last().unwrap()
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Family::I1 => &["A1", "A2", "A3"],
            Family::I2 => &["B1", "B2"],
            Family::I3 => &["c1"],
            Family::I4 => &["c2", "c3"],
            Family::II1 => &["a", "b"],
            Family::II2 => &["c", "alpha"],
            Family::II3 => &["beta"],
        }
    }

    /// Time branch (`Z = 0`, `ω = t`) or unit branch (`Z = 1`).
    pub fn is_time_branch(self) -> bool {
        matches!(self, Family::I1 | Family::I2 | Family::I3 | Family::I4)
    }

    pub fn default_params(self) -> Params {
        let values: &[f64] = match self {
            Family::I1 => &[1.0, 2.0, 3.0],
            Family::I2 => &[1.0, 2.0],
            Family::I3 => &[1.0],
            Family::I4 => &[1.0, 1.0],
            Family::II1 => &[1.0, 1.0],
            Family::II2 => &[1.0, 1.0],
            Family::II3 => &[1.0],
        };
        Params(
            self.param_names()
                .iter()
                .zip(values)
                .map(|(k, v)| (k.to_string(), *v))
                .collect(),
        )
    }

    pub fn phase_formula(self) -> &'static str {
        match self {
            Family::I1 => "f = ½(x1²/(t+A1) + x2²/(t+A2) + x3²/(t+A3))",
            Family::I2 => "f = ½(x1²/(t+B1) + x2²/(t+B2))",
            Family::I3 => "f = x1²/(2t+c1)",
            Family::I4 => "f = c2·x1 + c3 − ½c2²·t",
            Family::II1 => "f = −2a·t·x1 − (4/3)a²t³ + b·t",
            Family::II2 => "f = c·atan2(x1, x2) + α·t",
            Family::II3 => "f = β·t",
        }
    }

    pub fn variable_formula(self) -> &'static str {
        match self {
            Family::I1 | Family::I2 | Family::I3 | Family::I4 => "ω = t",
            Family::II1 => "ω = x1 + a·t²",
            Family::II2 => "ω = (x1² + x2²)^½",
            Family::II3 => "ω = (x1² + x2² + x3²)^½",
        }
    }

    pub fn profile_formula(self) -> &'static str {
        match self {
            Family::I1 => "Z=0, S=0, T=Σ_{i≤3} 1/(t+A_i)",
            Family::I2 => "Z=0, S=0, T=1/(t+B1) + 1/(t+B2)",
            Family::I3 => "Z=0, S=0, T=1/(t+c1/2)",
            Family::I4 => "Z=0, S=0, T=0",
            Family::II1 => "Z=1, N=0, T=0, S=2b − 4a·ω",
            Family::II2 => "Z=1, N=1, T=0, S=2α + c²·ω^-2",
            Family::II3 => "Z=1, N=2, T=0, S=2β",
        }
    }

    pub fn surfaces_formula(self) -> &'static str {
        match self {
            Family::I1 => "t = −A_i",
            Family::I2 => "t = −B_i",
            Family::I3 => "t = −c1/2",
            Family::I4 | Family::II1 => "none",
            Family::II2 => "axis x1 = x2 = 0; branch half-plane x1 = 0, x2 ≤ 0",
            Family::II3 => "origin x = 0",
        }
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.id().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownFamily(s.to_string()))
    }
}

/// Named real parameters of a family.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Params(pub BTreeMap<String, f64>);

impl Params {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, name: &str, value: f64) -> Self {
        self.0.insert(name.to_string(), value);
        self
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.0.get(name).copied()
    }

    /// Fill every name of `family` that is not already present with its default.
    pub fn or_defaults(mut self, family: Family) -> Self {
        for (k, v) in family.default_params().0 {
            self.0.entry(k).or_insert(v);
        }
        self
    }

    /// Parse `k=v,k=v`.
    pub fn parse_list(s: &str) -> Result<Self> {
        let mut out = Params::new();
        for item in s.split(',').map(str::trim).filter(|i| !i.is_empty()) {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("expected key=value, got `{item}`")))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("`{v}` is not a number")))?;
            out.0.insert(k.trim().to_string(), v);
        }
        Ok(out)
    }
}

/// JSON form `{family, n, params}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyDescriptor {
    pub family: Family,
    pub n: usize,
    #[serde(default)]
    pub params: Params,
}

impl FamilyDescriptor {
    pub fn defaults(family: Family) -> Self {
        Self {
            family,
            n: family.default_dim(),
            params: family.default_params(),
        }
    }

    pub fn build(&self) -> Result<AnsatzSpec> {
        make_family(self.family, self.n, &self.params)
    }
}

/// Value and first/second derivatives of a real function of `(t, x)`.
#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub dt: f64,
    pub grad: Vec<f64>,
    pub lap: f64,
}

type JetFn = Arc<dyn Fn(&SpaceTimePoint) -> Jet + Send + Sync>;
type PointMap = Arc<dyn Fn(&SpaceTimePoint) -> SpaceTimePoint + Send + Sync>;
type LevelSetFn = Arc<dyn Fn(f64, usize, u64) -> Vec<SpaceTimePoint> + Send + Sync>;

/// One ansatz family instance.
#[derive(Clone)]
pub struct AnsatzSpec {
    family: Family,
    dim: usize,
    params: Params,
    phase: JetFn,
    variable: JetFn,
    profile: ReductionProfile,
    surfaces: Vec<SingularSurface>,
    level_set: LevelSetFn,
    notes: Vec<String>,
}

impl fmt::Debug for AnsatzSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("AnsatzSpec")
            .field("family", &self.family)
            .field("dim", &self.dim)
            .field("params", &self.params)
            .field("profile", &self.profile)
            .field("notes", &self.notes)
            .finish()
    }
}

impl AnsatzSpec {
    pub fn family(&self) -> Family {
        self.family
    }
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn params(&self) -> &Params {
        &self.params
    }
    pub fn profile(&self) -> &ReductionProfile {
        &self.profile
    }
    pub fn surfaces(&self) -> &[SingularSurface] {
        &self.surfaces
    }
    /// Provenance remarks: applied transforms and perturbations.
    pub fn notes(&self) -> &[String] {
        &self.notes
    }

    pub fn descriptor(&self) -> FamilyDescriptor {
        FamilyDescriptor {
            family: self.family,
            n: self.dim,
            params: self.params.clone(),
        }
    }

    pub fn f(&self, p: &SpaceTimePoint) -> f64 {
        (self.phase)(p).value
    }

    pub fn omega(&self, p: &SpaceTimePoint) -> f64 {
        (self.variable)(p).value
    }

    pub fn phase_jet(&self, p: &SpaceTimePoint) -> Jet {
        (self.phase)(p)
    }

    pub fn variable_jet(&self, p: &SpaceTimePoint) -> Jet {
        (self.variable)(p)
    }

    /// `f` as a plain evaluable field (no derivative information).
    pub fn phase_field(&self) -> ScalarField {
        let phase = self.phase.clone();
        ScalarField::new(self.dim, move |p| phase(p).value).with_surfaces(self.surfaces.clone())
    }

    pub fn variable_field(&self) -> ScalarField {
        let variable = self.variable.clone();
        ScalarField::new(self.dim, move |p| variable(p).value).with_surfaces(self.surfaces.clone())
    }

    /// `count` points with `ω = omega`, drawn deterministically from `seed`.
    pub fn level_set_points(&self, omega: f64, count: usize, seed: u64) -> Vec<SpaceTimePoint> {
        (self.level_set)(omega, count, seed)
    }

    /// Copy with a documented perturbation injected; the declared profile is
    /// kept so the verifier can detect the damage.
    pub fn perturbed(&self, perturbation: Perturbation) -> AnsatzSpec {
        let mut out = self.clone();
        out.notes.push(format!("perturbed: {perturbation}"));
        match perturbation {
            Perturbation::PhaseCrossTerm { eps } => {
                let inner = self.phase.clone();
                out.phase = Arc::new(move |p| {
                    let mut j = inner(p);
                    j.value += eps * p.x[0] * p.x[1];
                    j.grad[0] += eps * p.x[1];
                    j.grad[1] += eps * p.x[0];
                    j
                });
            }
            Perturbation::BrokenVariable { eps } => {
                let dim = self.dim;
                out.variable = Arc::new(move |p| {
                    let mut grad = vec![0.0; dim];
                    grad[0] = 1.0;
                    grad[1] = 2.0 * eps * p.x[1];
                    Jet {
                        value: p.x[0] + eps * p.x[1] * p.x[1],
                        dt: 0.0,
                        grad,
                        lap: 2.0 * eps,
                    }
                });
                out.level_set = Arc::new(move |w, count, seed| {
                    let mut rng = ChaCha8Rng::seed_from_u64(seed);
                    (0..count)
                        .map(|_| {
                            let t = rng.gen_range(0.0..1.0);
                            let mut x: Vec<f64> =
                                (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
                            x[0] = w - eps * x[1] * x[1];
                            SpaceTimePoint::new(t, x)
                        })
                        .collect()
                });
            }
        }
        out
    }
}

/// Negative controls: deliberate damage to a valid ansatz.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Perturbation {
    /// `f → f + eps·x₁x₂`
    PhaseCrossTerm { eps: f64 },
    /// `ω → x₁ + eps·x₂²`
    BrokenVariable { eps: f64 },
}

impl fmt::Display for Perturbation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Perturbation::PhaseCrossTerm { eps } => write!(f, "f + {eps}·x1·x2"),
            Perturbation::BrokenVariable { eps } => write!(f, "ω = x1 + {eps}·x2²"),
        }
    }
}

fn check_params(family: Family, params: &Params) -> Result<Vec<f64>> {
    for name in params.0.keys() {
        if !family.param_names().contains(&name.as_str()) {
            return Err(Error::UnknownParameter {
                family: family.id().into(),
                name: name.clone(),
            });
        }
    }
    family
        .param_names()
        .iter()
        .map(|&name| {
            let v = params.get(name).ok_or_else(|| Error::MissingParameter {
                family: family.id().into(),
                name: name.into(),
            })?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::InvalidParameter(format!("{name} = {v}")))
            }
        })
        .collect()
}

fn check_distinct(poles: &[f64]) -> Result<()> {
    for (i, a) in poles.iter().enumerate() {
        for b in &poles[i + 1..] {
            if (a - b).abs() <= 1e-12 * a.abs().max(b.abs()).max(1.0) {
                return Err(Error::CoincidentPoles(poles.to_vec()));
            }
        }
    }
    Ok(())
}

fn time_variable(dim: usize) -> JetFn {
    Arc::new(move |p| Jet {
        value: p.t,
        dt: 1.0,
        grad: vec![0.0; dim],
        lap: 0.0,
    })
}

fn quadratic_phase(dim: usize, poles: Vec<f64>) -> JetFn {
    Arc::new(move |p| {
        let mut j = Jet {
            value: 0.0,
            dt: 0.0,
            grad: vec![0.0; dim],
            lap: 0.0,
        };
        for (i, pole) in poles.iter().enumerate() {
            let s = 1.0 / (p.t + pole);
            let xi = p.x[i];
            j.value += 0.5 * xi * xi * s;
            j.dt -= 0.5 * xi * xi * s * s;
            j.grad[i] = xi * s;
            j.lap += s;
        }
        j
    })
}

fn uniform_box(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.gen_range(0.5..1.5)).collect()
}

/// Build one family instance.
pub fn make_family(family: Family, n: usize, params: &Params) -> Result<AnsatzSpec> {
    if !family.dims().contains(&n) {
        return Err(Error::WrongDimension {
            family: family.id().into(),
            n,
        });
    }
    let v = check_params(family, params)?;
    let dim = n;

    let (phase, variable, profile, surfaces, level_set): (
        JetFn,
        JetFn,
        ReductionProfile,
        Vec<SingularSurface>,
        LevelSetFn,
    ) = match family {
        Family::I1 | Family::I2 | Family::I3 => {
            let poles = match family {
                Family::I3 => vec![0.5 * v[0]],
                _ => v.clone(),
            };
            check_distinct(&poles)?;
            let surfaces = poles.iter().map(|p| SingularSurface::time(-p)).collect();
            (
                quadratic_phase(dim, poles.clone()),
                time_variable(dim),
                ReductionProfile::time_branch(dim, poles),
                surfaces,
                time_slice(dim),
            )
        }
        Family::I4 => {
            let (c2, c3) = (v[0], v[1]);
            let phase: JetFn = Arc::new(move |p| {
                let mut grad = vec![0.0; dim];
                grad[0] = c2;
                Jet {
                    value: c2 * p.x[0] + c3 - 0.5 * c2 * c2 * p.t,
                    dt: -0.5 * c2 * c2,
                    grad,
                    lap: 0.0,
                }
            });
            (
                phase,
                time_variable(dim),
                ReductionProfile::time_branch(dim, vec![]),
                vec![],
                time_slice(dim),
            )
        }
        Family::II1 => {
            let (a, b) = (v[0], v[1]);
            let variable: JetFn = Arc::new(move |p| {
                let mut grad = vec![0.0; dim];
                grad[0] = 1.0;
                Jet {
                    value: p.x[0] + a * p.t * p.t,
                    dt: 2.0 * a * p.t,
                    grad,
                    lap: 0.0,
                }
            });
            let phase: JetFn = Arc::new(move |p| {
                let (t, x1) = (p.t, p.x[0]);
                let mut grad = vec![0.0; dim];
                grad[0] = -2.0 * a * t;
                Jet {
                    value: -2.0 * a * t * x1 - 4.0 / 3.0 * a * a * t * t * t + b * t,
                    dt: -2.0 * a * x1 - 4.0 * a * a * t * t + b,
                    grad,
                    lap: 0.0,
                }
            });
            let level_set: LevelSetFn = Arc::new(move |w, count, seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let t = rng.gen_range(0.0..1.0);
                        let mut x = uniform_box(&mut rng, dim);
                        x[0] = w - a * t * t;
                        SpaceTimePoint::new(t, x)
                    })
                    .collect()
            });
            (
                phase,
                variable,
                ReductionProfile::unit_branch(
                    dim,
                    0,
                    ProfileFn::Affine {
                        c0: 2.0 * b,
                        c1: -4.0 * a,
                    },
                ),
                vec![],
                level_set,
            )
        }
        Family::II2 => {
            let (c, alpha) = (v[0], v[1]);
            let variable: JetFn = Arc::new(move |p| {
                let (x1, x2) = (p.x[0], p.x[1]);
                let rho = x1.hypot(x2);
                let mut grad = vec![0.0; dim];
                grad[0] = x1 / rho;
                grad[1] = x2 / rho;
                Jet {
                    value: rho,
                    dt: 0.0,
                    grad,
                    lap: 1.0 / rho,
                }
            });
            let phase: JetFn = Arc::new(move |p| {
                let (x1, x2) = (p.x[0], p.x[1]);
                let rho2 = x1 * x1 + x2 * x2;
                let mut grad = vec![0.0; dim];
                grad[0] = c * x2 / rho2;
                grad[1] = -c * x1 / rho2;
                Jet {
                    value: c * x1.atan2(x2) + alpha * p.t,
                    dt: alpha,
                    grad,
                    lap: 0.0,
                }
            });
            let level_set: LevelSetFn = Arc::new(move |w, count, seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let t = rng.gen_range(0.0..1.0);
                        let angle: f64 = rng.gen_range(-2.5..2.5);
                        let mut x = uniform_box(&mut rng, dim);
                        x[0] = w * angle.sin();
                        x[1] = w * angle.cos();
                        SpaceTimePoint::new(t, x)
                    })
                    .collect()
            });
            (
                phase,
                variable,
                ReductionProfile::unit_branch(
                    dim,
                    1,
                    ProfileFn::InverseSquare {
                        c0: 2.0 * alpha,
                        c2: c * c,
                    },
                ),
                vec![SingularSurface::axis(), SingularSurface::atan2_cut()],
                level_set,
            )
        }
        Family::II3 => {
            let beta = v[0];
            let variable: JetFn = Arc::new(move |p| {
                let r = p.x.iter().map(|v| v * v).sum::<f64>().sqrt();
                Jet {
                    value: r,
                    dt: 0.0,
                    grad: p.x.iter().map(|v| v / r).collect(),
                    lap: 2.0 / r,
                }
            });
            let phase: JetFn = Arc::new(move |p| Jet {
                value: beta * p.t,
                dt: beta,
                grad: vec![0.0; dim],
                lap: 0.0,
            });
            let level_set: LevelSetFn = Arc::new(move |w, count, seed| {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                (0..count)
                    .map(|_| {
                        let z: f64 = rng.gen_range(-1.0..1.0);
                        let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                        let s = (1.0 - z * z).sqrt();
                        SpaceTimePoint::new(0.5, vec![w * s * phi.cos(), w * s * phi.sin(), w * z])
                    })
                    .collect()
            });
            (
                phase,
                variable,
                ReductionProfile::unit_branch(dim, 2, ProfileFn::Constant { value: 2.0 * beta }),
                vec![SingularSurface::origin()],
                level_set,
            )
        }
    };

    Ok(AnsatzSpec {
        family,
        dim,
        params: params.clone(),
        phase,
        variable,
        profile,
        surfaces,
        level_set,
        notes: Vec::new(),
    })
}

fn time_slice(dim: usize) -> LevelSetFn {
    Arc::new(move |w, count, seed| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..count)
            .map(|_| SpaceTimePoint::new(w, uniform_box(&mut rng, dim)))
            .collect()
    })
}

/// The profile implied by the family and its parameters.
pub fn reduction_profile(spec: &AnsatzSpec) -> ReductionProfile {
    spec.profile.clone()
}

/// `x → R(x − g t) + β` together with the Galilei phase shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquivalenceTransform {
    pub rotation: Vec<Vec<f64>>,
    pub boost: Vec<f64>,
    pub translation: Vec<f64>,
}

impl EquivalenceTransform {
    pub fn identity(n: usize) -> Self {
        Self {
            rotation: (0..n)
                .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
                .collect(),
            boost: vec![0.0; n],
            translation: vec![0.0; n],
        }
    }

    pub fn rotation(rotation: Vec<Vec<f64>>) -> Self {
        let n = rotation.len();
        Self {
            rotation,
            boost: vec![0.0; n],
            translation: vec![0.0; n],
        }
    }

    /// Rotation by `angle` in the `(x_i, x_j)` plane.
    pub fn plane_rotation(n: usize, i: usize, j: usize, angle: f64) -> Self {
        let mut t = Self::identity(n);
        let (s, c) = angle.sin_cos();
        t.rotation[i][i] = c;
        t.rotation[i][j] = -s;
        t.rotation[j][i] = s;
        t.rotation[j][j] = c;
        t
    }

    /// Seeded random rotation, boost and translation (components in [−1, 1]).
    pub fn random(n: usize, rng: &mut impl Rng) -> Self {
        let rotation = if n == 3 {
            // Rodrigues formula about a random unit axis
            let z: f64 = rng.gen_range(-1.0..1.0);
            let phi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let s = (1.0 - z * z).sqrt();
            let k = [s * phi.cos(), s * phi.sin(), z];
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (st, ct) = theta.sin_cos();
            let mut r = vec![vec![0.0; 3]; 3];
            let cross = [[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]];
            for i in 0..3 {
                for j in 0..3 {
                    let delta = if i == j { 1.0 } else { 0.0 };
                    r[i][j] = ct * delta + st * cross[i][j] + (1.0 - ct) * k[i] * k[j];
                }
            }
            r
        } else {
            let theta: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            let (s, c) = theta.sin_cos();
            let mut r = vec![vec![0.0; n]; n];
            r[0][0] = c;
            r[0][1] = -s;
            r[1][0] = s;
            r[1][1] = c;
            for (i, row) in r.iter_mut().enumerate().skip(2) {
                row[i] = 1.0;
            }
            r
        };
        Self {
            rotation,
            boost: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            translation: (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect(),
        }
    }

    pub fn seeded(n: usize, seed: u64) -> Self {
        Self::random(n, &mut ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn dim(&self) -> usize {
        self.rotation.len()
    }

    /// Orthogonality defect `max |RᵀR − I|`.
    pub fn orthogonality_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                let dot: f64 = (0..n).map(|c| self.rotation[c][i] * self.rotation[c][j]).sum();
                let delta = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - delta).abs());
            }
        }
        worst
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        let dims_ok = self.rotation.len() == n
            && self.rotation.iter().all(|r| r.len() == n)
            && self.boost.len() == n
            && self.translation.len() == n;
        if !dims_ok {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: self.rotation.len(),
            });
        }
        let defect = self.orthogonality_defect();
        if defect.is_nan() || defect > 1e-12 {
            return Err(Error::NonOrthogonal(defect));
        }
        Ok(())
    }

    /// Current-frame point to the frame where the original spec lives.
    pub fn forward(&self, p: &SpaceTimePoint) -> SpaceTimePoint {
        let n = self.dim();
        let shifted: Vec<f64> = (0..n).map(|a| p.x[a] - self.boost[a] * p.t).collect();
        let y = (0..n)
            .map(|a| {
                (0..n).map(|b| self.rotation[a][b] * shifted[b]).sum::<f64>() + self.translation[a]
            })
            .collect::<Vec<f64>>();
        SpaceTimePoint::new(p.t, y)
    }

    /// Inverse of [`forward`](Self::forward).
    pub fn backward(&self, q: &SpaceTimePoint) -> SpaceTimePoint {
        let n = self.dim();
        let d: Vec<f64> = (0..n).map(|a| q.x[a] - self.translation[a]).collect();
        let x = (0..n)
            .map(|a| {
                (0..n).map(|b| self.rotation[b][a] * d[b]).sum::<f64>() + self.boost[a] * q.t
            })
            .collect::<Vec<f64>>();
        SpaceTimePoint::new(q.t, x)
    }

    fn rotate_back(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|a| (0..n).map(|b| self.rotation[b][a] * v[b]).sum())
            .collect()
    }
}

/// Pull `spec` back along the transform. The result satisfies the reduction
/// conditions with the same profile.
pub fn equivalence_transform(spec: &AnsatzSpec, tr: &EquivalenceTransform) -> Result<AnsatzSpec> {
    tr.validate(spec.dim)?;
    let tr = Arc::new(tr.clone());
    let g2: f64 = tr.boost.iter().map(|v| v * v).sum();

    let phase = {
        let (inner, tr) = (spec.phase.clone(), tr.clone());
        Arc::new(move |p: &SpaceTimePoint| {
            let j = inner(&tr.forward(p));
            let grad_back = tr.rotate_back(&j.grad);
            let g_dot_grad: f64 = grad_back.iter().zip(&tr.boost).map(|(a, b)| a * b).sum();
            let g_dot_x: f64 = p.x.iter().zip(&tr.boost).map(|(a, b)| a * b).sum();
            Jet {
                value: j.value + g_dot_x - 0.5 * g2 * p.t,
                dt: j.dt - g_dot_grad - 0.5 * g2,
                grad: grad_back.iter().zip(&tr.boost).map(|(a, b)| a + b).collect(),
                lap: j.lap,
            }
        }) as JetFn
    };
    let variable = {
        let (inner, tr) = (spec.variable.clone(), tr.clone());
        Arc::new(move |p: &SpaceTimePoint| {
            let j = inner(&tr.forward(p));
            let grad = tr.rotate_back(&j.grad);
            let g_dot_grad: f64 = grad.iter().zip(&tr.boost).map(|(a, b)| a * b).sum();
            Jet {
                value: j.value,
                dt: j.dt - g_dot_grad,
                grad,
                lap: j.lap,
            }
        }) as JetFn
    };
    let forward: PointMap = {
        let tr = tr.clone();
        Arc::new(move |p| tr.forward(p))
    };
    let level_set: LevelSetFn = {
        let (inner, tr) = (spec.level_set.clone(), tr.clone());
        Arc::new(move |w, count, seed| inner(w, count, seed).iter().map(|q| tr.backward(q)).collect())
    };

    let mut out = spec.clone();
    out.phase = phase;
    out.variable = variable;
    out.surfaces = spec
        .surfaces
        .iter()
        .map(|s| s.pull_back(forward.clone()))
        .collect();
    out.level_set = level_set;
    out.notes.push(format!(
        "transformed: R={:?} g={:?} β={:?}",
        tr.rotation, tr.boost, tr.translation
    ));
    Ok(out)
}

/// Machine-readable catalog entry.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FamilyInfo {
    pub family: Family,
    pub dims: Vec<usize>,
    pub params: Vec<String>,
    pub phase: String,
    pub variable: String,
    pub profile: String,
    pub singular_surfaces: String,
    /// Default instance, accepted by [`make_family`].
    pub default: FamilyDescriptor,
}

pub fn family_info(family: Family) -> FamilyInfo {
    FamilyInfo {
        family,
        dims: family.dims().to_vec(),
        params: family.param_names().iter().map(|s| s.to_string()).collect(),
        phase: family.phase_formula().into(),
        variable: family.variable_formula().into(),
        profile: family.profile_formula().into(),
        singular_surfaces: family.surfaces_formula().into(),
        default: FamilyDescriptor::defaults(family),
    }
}

/// Default verification lattice: `t ∈ [0.5, 1.5]`, `x_a ∈ [0.5, 1.5]`, at
/// least 1000 points, at distance ≥ 1 from every default pole.
pub fn default_grid(n: usize, h: f64) -> crate::numerics::GridSpec {
    let x_count = if n == 3 { 5 } else { 10 };
    crate::numerics::GridSpec::uniform(n, (0.5, 1.5), 10, (0.5, 1.5), x_count, h)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(t: f64, x: &[f64]) -> SpaceTimePoint {
        SpaceTimePoint::new(t, x.to_vec())
    }

    #[test]
    fn i1_phase_value() {
        let s = make_family(Family::I1, 3, &Family::I1.default_params()).unwrap();
        assert!((s.f(&p(0.0, &[1.0, 1.0, 1.0])) - 11.0 / 12.0).abs() < 1e-15);
        assert_eq!(s.omega(&p(0.7, &[1.0, 2.0, 3.0])), 0.7);
    }

    #[test]
    fn ii3_radius_and_phase() {
        let s = make_family(Family::II3, 3, &Params::new().with("beta", 2.0)).unwrap();
        let q = p(1.5, &[3.0, 0.0, 4.0]);
        assert_eq!(s.omega(&q), 5.0);
        assert_eq!(s.f(&q), 3.0);
    }

    #[test]
    fn i4_degenerates_to_constant() {
        let s = make_family(Family::I4, 3, &Params::new().with("c2", 0.0).with("c3", 7.0)).unwrap();
        let j = s.phase_jet(&p(0.4, &[1.0, -2.0, 3.0]));
        assert_eq!(j.value, 7.0);
        assert_eq!(j.dt, 0.0);
        assert!(j.grad.iter().all(|g| *g == 0.0));
        assert_eq!(j.lap, 0.0);
    }

    #[test]
    fn dimension_and_parameter_errors() {
        assert!(matches!(
            make_family(Family::I1, 2, &Family::I1.default_params()),
            Err(Error::WrongDimension { .. })
        ));
        assert!(matches!(
            make_family(Family::II3, 2, &Family::II3.default_params()),
            Err(Error::WrongDimension { .. })
        ));
        assert!(matches!(
            make_family(Family::II1, 3, &Params::new().with("a", 1.0)),
            Err(Error::MissingParameter { .. })
        ));
        assert!(matches!(
            make_family(Family::II1, 3, &Family::II1.default_params().with("zeta", 1.0)),
            Err(Error::UnknownParameter { .. })
        ));
        let coincident = Params::new().with("A1", 1.0).with("A2", 1.0).with("A3", 3.0);
        assert!(matches!(
            make_family(Family::I1, 3, &coincident),
            Err(Error::CoincidentPoles(_))
        ));
    }

    #[test]
    fn profiles_match_closed_forms() {
        let ii1 = make_family(Family::II1, 3, &Params::new().with("a", 1.0).with("b", 0.0)).unwrap();
        assert_eq!(reduction_profile(&ii1).s, ProfileFn::Affine { c0: 0.0, c1: -4.0 });
        let ii3 = make_family(Family::II3, 3, &Params::new().with("beta", 3.0)).unwrap();
        assert_eq!(reduction_profile(&ii3).s, ProfileFn::Constant { value: 6.0 });
        assert_eq!(reduction_profile(&ii3).radial, 2);
        let i1 = make_family(Family::I1, 3, &Family::I1.default_params()).unwrap();
        let prof = reduction_profile(&i1);
        assert_eq!(prof.t, ProfileFn::PoleSum { poles: vec![1.0, 2.0, 3.0] });
        assert!(prof.s.is_zero());
        for f in Family::ALL {
            reduction_profile(&FamilyDescriptor::defaults(f).build().unwrap())
                .validate()
                .unwrap();
        }
    }

    #[test]
    fn hamilton_identity_holds_analytically() {
        // S(ω) = 2f_t + |∇f|² at sampled points, every family
        for f in Family::ALL {
            let spec = FamilyDescriptor::defaults(f).build().unwrap();
            for q in default_grid(spec.dim(), 1e-3).points().unwrap().iter().step_by(37) {
                let j = spec.phase_jet(q);
                let lhs = 2.0 * j.dt + j.grad.iter().map(|g| g * g).sum::<f64>();
                let rhs = spec.profile().eval_s(spec.omega(q));
                assert!((lhs - rhs).abs() <= 1e-10, "{f}: {lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn unit_branch_eikonal_and_radial_laplacian() {
        for f in [Family::II1, Family::II2, Family::II3] {
            let spec = FamilyDescriptor::defaults(f).build().unwrap();
            let n_rad = spec.profile().radial as f64;
            for q in default_grid(spec.dim(), 1e-3).points().unwrap().iter().step_by(11) {
                let j = spec.variable_jet(q);
                let e: f64 = j.grad.iter().map(|g| g * g).sum();
                assert!((e - 1.0).abs() <= 1e-10);
                assert!((j.lap - n_rad / j.value).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn identity_transform_changes_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for f in Family::ALL {
            let spec = FamilyDescriptor::defaults(f).build().unwrap();
            let same = equivalence_transform(&spec, &EquivalenceTransform::identity(spec.dim())).unwrap();
            for _ in 0..100 {
                let x: Vec<f64> = (0..spec.dim()).map(|_| rng.gen_range(0.5..1.5)).collect();
                let q = SpaceTimePoint::new(rng.gen_range(0.0..1.0), x);
                assert!((spec.f(&q) - same.f(&q)).abs() <= 1e-14);
                assert!((spec.omega(&q) - same.omega(&q)).abs() <= 1e-14);
            }
        }
    }

    #[test]
    fn rotation_keeps_radius() {
        let spec = FamilyDescriptor::defaults(Family::II3).build().unwrap();
        let rot = EquivalenceTransform::seeded(3, 11);
        let rot = EquivalenceTransform::rotation(rot.rotation);
        let turned = equivalence_transform(&spec, &rot).unwrap();
        let q = p(0.3, &[0.4, -1.2, 0.9]);
        assert!((turned.omega(&q) - spec.omega(&q)).abs() < 1e-14);
        assert_eq!(reduction_profile(&turned), reduction_profile(&spec));
    }

    #[test]
    fn transform_round_trips_points() {
        let tr = EquivalenceTransform::seeded(3, 3);
        let q = p(0.25, &[0.1, 0.2, 0.3]);
        let back = tr.backward(&tr.forward(&q));
        for (a, b) in back.x.iter().zip(&q.x) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn non_orthogonal_rejected() {
        let spec = FamilyDescriptor::defaults(Family::II1).build().unwrap();
        let mut tr = EquivalenceTransform::identity(3);
        tr.rotation[0][1] = 1e-6;
        assert!(matches!(
            equivalence_transform(&spec, &tr),
            Err(Error::NonOrthogonal(_))
        ));
    }

    #[test]
    fn level_sets_lie_on_level() {
        for f in Family::ALL {
            let spec = FamilyDescriptor::defaults(f).build().unwrap();
            for q in spec.level_set_points(1.7, 20, 5) {
                assert!((spec.omega(&q) - 1.7).abs() <= 1e-12, "{f}");
            }
            let moved = equivalence_transform(&spec, &EquivalenceTransform::seeded(spec.dim(), 9)).unwrap();
            for q in moved.level_set_points(1.7, 20, 5) {
                assert!((moved.omega(&q) - 1.7).abs() <= 1e-12, "{f} transformed");
            }
        }
    }

    #[test]
    fn family_parsing() {
        assert_eq!("ii.2".parse::<Family>().unwrap(), Family::II2);
        assert!("III.1".parse::<Family>().is_err());
        let d: FamilyDescriptor =
            serde_json::from_str(r#"{"family":"II.2","n":2,"params":{"c":1,"alpha":0}}"#).unwrap();
        assert_eq!(d.build().unwrap().profile().radial, 1);
    }
}
