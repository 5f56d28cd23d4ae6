//! Command-line driver: `catalog`, `verify`, `solve`, `wave`, `export`.
//!
//! Every run is described by a [`RunConfig`], loaded from `--config` and then
//! overridden by flags. Reports contain no timestamps or host data, so the
//! same configuration always produces the same bytes.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::catalog::{
    default_grid, equivalence_transform, family_info, make_family, AnsatzSpec, EquivalenceTransform, Family,
    FamilyInfo, Params, Perturbation,
};
use crate::error::{Error, Result};
use crate::export::{
    json_bytes, profile_csv, profile_rows, solution_csv, solution_rows, wave_csv, wave_rows, write_atomic,
};
use crate::nonlinearity::{Nonlinearity, NonlinearityDescriptor, NonlinearityKind};
use crate::numerics::{
    nls_residual, order_check, wave_residual, GridSpec, OrderCheck, DEFAULT_H,
};
use crate::reduced_ode::{
    build_reduced_ode, case_i_quadrature, integrate_case_ii, lift, plane_wave_solution, PhiProfile, Provenance,
    SampledProfile, SolutionHandle,
};
use crate::verifier::{
    check_conditions_at, check_level_set_constancy, check_theta, expected_coefficients, fit_profile,
    oracle_tolerance, profile_samples, theta_samples, LevelSetCheck, Method, ProfileFit, ResidualReport,
    ThetaCheck, ANALYTIC_TOLERANCE, THETA_TOLERANCE,
};
use crate::wave::{
    check_wave_conditions, default_wave_grid, make_wave_ansatz, solve_wave_ode, wave_solution, WaveAnsatz,
    WaveFamily, WavePhi,
};

pub const SCHEMA_VERSION: u32 = 1;

pub const EXIT_PASS: u8 = 0;
pub const EXIT_FAIL: u8 = 1;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_BLOW_UP: u8 = 3;

/// Coefficient agreement required of a profile fit.
const FIT_TOLERANCE: f64 = 1e-8;

#[derive(Parser, Debug)]
#[command(
    name = "nls-reduce",
    version,
    about = "Reducing ansatzes, exact solutions and residual certification for NLS and wave equations"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// List the ansatz families.
    Catalog {
        #[arg(long)]
        family: Option<String>,
        #[arg(long)]
        json: bool,
    },
    /// Certify the reduction conditions of one family or all of them.
    Verify(RunArgs),
    /// Build an exact NLS solution and check its residual.
    Solve(RunArgs),
    /// Wave-equation ansatz, reduced ODE and lifted solution.
    Wave(RunArgs),
    /// Write solution samples as CSV and JSON without certification.
    Export(RunArgs),
}

#[derive(Args, Debug, Default, Clone)]
pub struct RunArgs {
    /// JSON run configuration (`"schema": 1`); flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Family id (I.1 … II.3, or `all`), or a wave family for `wave`.
    #[arg(long)]
    pub family: Option<String>,
    /// Parameters as `k=v,k=v`.
    #[arg(long)]
    pub params: Option<String>,
    /// Space dimension.
    #[arg(long)]
    pub n: Option<usize>,
    /// `tmin,tmax,x1min,x1max,…,nt,nx1,…`
    #[arg(long)]
    pub grid: Option<String>,
    /// Differencing step.
    #[arg(long)]
    pub h: Option<f64>,
    /// Residual tolerance override.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long, value_parser = parse_method)]
    pub method: Option<Method>,
    /// Output directory for reports and data.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Negative control: `phase:EPS` (f + EPS·x1x2) or `omega:EPS` (ω + EPS·x2²).
    #[arg(long)]
    pub perturb: Option<String>,
    /// Compose the family with a seeded random rotation, boost and translation.
    #[arg(long)]
    pub transform: bool,
    /// Repeat the oracle at h/2 and record the residual ratio.
    #[arg(long)]
    pub order: bool,
    /// `none`, `power:g=G,p=P` or `log:s=S`.
    #[arg(long)]
    pub nonlinearity: Option<String>,
    /// Solution kind: plane-wave, case-i, case-ii (export also accepts wave).
    #[arg(long)]
    pub kind: Option<String>,
    /// φ(ω_a) as `re,im`.
    #[arg(long)]
    pub phi0: Option<String>,
    /// φ'(ω_a) as `re,im`.
    #[arg(long)]
    pub dphi0: Option<String>,
    /// ω-range `a,b` for integration.
    #[arg(long)]
    pub range: Option<String>,
    /// Integration step.
    #[arg(long)]
    pub step: Option<f64>,
    /// Wave exponent k.
    #[arg(long)]
    pub k: Option<f64>,
    /// Wave coupling λ.
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Integration constant of the wave quadrature.
    #[arg(long)]
    pub constant: Option<f64>,
}

fn parse_method(s: &str) -> std::result::Result<Method, String> {
    match s {
        "analytic" => Ok(Method::Analytic),
        "oracle" => Ok(Method::Oracle),
        _ => Err(format!("unknown method `{s}` (analytic|oracle)")),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommandKind {
    Verify,
    Solve,
    Wave,
    Export,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolveKind {
    PlaneWave,
    CaseI,
    CaseIi,
    Wave,
}

impl std::str::FromStr for SolveKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        serde_json::from_value(serde_json::Value::String(s.to_string()))
            .map_err(|_| Error::Config(format!("unknown kind `{s}` (plane-wave|case-i|case-ii|wave)")))
    }
}

/// Complete description of one run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub schema: u32,
    pub command: CommandKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub method: Option<Method>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearityDescriptor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tolerance: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    #[serde(default)]
    pub transform: bool,
    #[serde(default)]
    pub order: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<SolveKind>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dphi0: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub range: Option<(f64, f64)>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constant: Option<f64>,
}

impl RunConfig {
    pub fn new(command: CommandKind) -> Self {
        Self {
            schema: SCHEMA_VERSION,
            command,
            family: None,
            n: None,
            params: Params::new(),
            grid: None,
            h: None,
            method: None,
            nonlinearity: None,
            tolerance: None,
            out: None,
            seed: None,
            perturbation: None,
            transform: false,
            order: false,
            kind: None,
            phi0: None,
            dphi0: None,
            range: None,
            step: None,
            k: None,
            lambda: None,
            constant: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.schema != SCHEMA_VERSION {
            return bad(format!("schema {} is not supported (expected {SCHEMA_VERSION})", self.schema));
        }
        for (name, v) in [("h", self.h), ("tolerance", self.tolerance), ("step", self.step)] {
            if let Some(v) = v {
                if !(v > 0.0 && v.is_finite()) {
                    return bad(format!("{name} = {v} must be positive"));
                }
            }
        }
        if let Some(g) = &self.grid {
            g.validate().map_err(|e| Error::Config(e.to_string()))?;
        }
        if let Some(d) = &self.nonlinearity {
            Nonlinearity::try_from(d)?;
        }
        if let Some(f) = &self.family {
            let known = match self.command {
                CommandKind::Verify => f == "all" || f.parse::<Family>().is_ok(),
                CommandKind::Wave => WaveFamily::NAMES.contains(&f.as_str()),
                _ => f.parse::<Family>().is_ok() || WaveFamily::NAMES.contains(&f.as_str()),
            };
            if !known {
                return Err(Error::UnknownFamily(f.clone()));
            }
        }
        Ok(())
    }

    /// Apply flag overrides on top of this configuration.
    pub fn merge_args(mut self, args: &RunArgs) -> Result<Self> {
        if let Some(f) = &args.family {
            self.family = Some(f.clone());
        }
        if let Some(p) = &args.params {
            self.params = Params::parse_list(p)?;
        }
        if args.n.is_some() {
            self.n = args.n;
        }
        if let Some(h) = args.h {
            self.h = Some(h);
        }
        if let Some(g) = &args.grid {
            self.grid = Some(parse_grid(g, self.h.unwrap_or(DEFAULT_H))?);
        }
        if args.tol.is_some() {
            self.tolerance = args.tol;
        }
        if args.method.is_some() {
            self.method = args.method;
        }
        if args.out.is_some() {
            self.out = args.out.clone();
        }
        if args.seed.is_some() {
            self.seed = args.seed;
        }
        if let Some(p) = &args.perturb {
            self.perturbation = Some(parse_perturbation(p)?);
        }
        self.transform |= args.transform;
        self.order |= args.order;
        if let Some(f) = &args.nonlinearity {
            self.nonlinearity = Some(parse_nonlinearity(f)?);
        }
        if let Some(k) = &args.kind {
            self.kind = Some(k.parse()?);
        }
        if let Some(v) = &args.phi0 {
            let (a, b) = parse_pair(v, "phi0")?;
            self.phi0 = Some([a, b]);
        }
        if let Some(v) = &args.dphi0 {
            let (a, b) = parse_pair(v, "dphi0")?;
            self.dphi0 = Some([a, b]);
        }
        if let Some(v) = &args.range {
            self.range = Some(parse_pair(v, "range")?);
        }
        if args.step.is_some() {
            self.step = args.step;
        }
        if args.k.is_some() {
            self.k = args.k;
        }
        if args.lambda.is_some() {
            self.lambda = args.lambda;
        }
        if args.constant.is_some() {
            self.constant = args.constant;
        }
        self.validate()?;
        Ok(self)
    }

    fn h(&self) -> f64 {
        self.h.or(self.grid.as_ref().map(|g| g.h)).unwrap_or(DEFAULT_H)
    }

    fn grid_or(&self, default: GridSpec) -> GridSpec {
        match &self.grid {
            Some(g) if self.h.is_some() => g.with_h(self.h()),
            Some(g) => g.clone(),
            None => default,
        }
    }

    fn nonlinearity(&self) -> Result<Nonlinearity> {
        match &self.nonlinearity {
            Some(d) => Nonlinearity::try_from(d),
            None => Ok(Nonlinearity::power(1.0, 2.0)),
        }
    }
}

fn parse_pair(s: &str, what: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |x: &str| x.parse::<f64>().map_err(|_| Error::Config(format!("{what}: `{x}` is not a number")));
    match parts.as_slice() {
        [a, b] => Ok((num(a)?, num(b)?)),
        _ => Err(Error::Config(format!("{what} expects two comma-separated numbers"))),
    }
}

/// `tmin,tmax,x1min,x1max,…,nt,nx1,…`: `2(d+1)` bounds then `d+1` counts.
pub fn parse_grid(s: &str, h: f64) -> Result<GridSpec> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() < 6 || parts.len() % 3 != 0 {
        return Err(Error::Config(format!(
            "grid needs 3(d+1) values (bounds then counts), got {}",
            parts.len()
        )));
    }
    let axes = parts.len() / 3;
    let bounds: Vec<f64> = parts[..2 * axes]
        .iter()
        .map(|x| x.parse().map_err(|_| Error::Config(format!("grid: `{x}` is not a number"))))
        .collect::<Result<_>>()?;
    let counts: Vec<usize> = parts[2 * axes..]
        .iter()
        .map(|x| x.parse().map_err(|_| Error::Config(format!("grid: `{x}` is not a count"))))
        .collect::<Result<_>>()?;
    let g = GridSpec {
        t_range: (bounds[0], bounds[1]),
        x_ranges: bounds[2..].chunks(2).map(|c| (c[0], c[1])).collect(),
        counts,
        h,
        exclusion_radius: 10.0 * h,
    };
    g.validate().map_err(|e| Error::Config(e.to_string()))?;
    Ok(g)
}

pub fn parse_perturbation(s: &str) -> Result<Perturbation> {
    let (kind, eps) = s.split_once(':').unwrap_or((s, "0.1"));
    let eps: f64 = eps
        .parse()
        .map_err(|_| Error::Config(format!("perturbation size `{eps}` is not a number")))?;
    match kind {
        "phase" => Ok(Perturbation::PhaseCrossTerm { eps }),
        "omega" => Ok(Perturbation::BrokenVariable { eps }),
        _ => Err(Error::Config(format!("unknown perturbation `{kind}` (phase|omega)"))),
    }
}

pub fn parse_nonlinearity(s: &str) -> Result<NonlinearityDescriptor> {
    let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
    let kind = match kind {
        "none" => NonlinearityKind::None,
        "power" => NonlinearityKind::Power,
        "log" => NonlinearityKind::Log,
        _ => return Err(Error::Config(format!("unknown nonlinearity `{kind}` (none|power|log)"))),
    };
    let p = Params::parse_list(rest)?;
    if let Some(k) = p.0.keys().find(|k| !["g", "p", "s"].contains(&k.as_str())) {
        return Err(Error::Config(format!("unknown nonlinearity parameter `{k}`")));
    }
    let d = NonlinearityDescriptor {
        kind,
        g: p.get("g"),
        p: p.get("p"),
        s: p.get("s"),
    };
    Nonlinearity::try_from(&d)?;
    Ok(d)
}

/// Exit status for an error that aborted a run.
pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::BlowUp { .. } | Error::NonFinite { .. } => EXIT_BLOW_UP,
        _ => EXIT_CONFIG,
    }
}

/// Text printed to stdout plus the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub code: u8,
    pub stdout: String,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    match &cli.command {
        Command::Catalog { family, json } => cmd_catalog(family.as_deref(), *json),
        Command::Verify(a) => run_with(CommandKind::Verify, a),
        Command::Solve(a) => run_with(CommandKind::Solve, a),
        Command::Wave(a) => run_with(CommandKind::Wave, a),
        Command::Export(a) => run_with(CommandKind::Export, a),
    }
}

fn run_with(kind: CommandKind, args: &RunArgs) -> Result<Outcome> {
    let base = match &args.config {
        Some(path) => {
            let cfg = RunConfig::load(path)?;
            if cfg.command != kind {
                return Err(Error::Config(format!(
                    "config is for `{:?}`, not `{kind:?}`",
                    cfg.command
                )));
            }
            cfg
        }
        None => RunConfig::new(kind),
    };
    let cfg = base.merge_args(args)?;
    let json = args.json;
    match kind {
        CommandKind::Verify => cmd_verify(&cfg, json),
        CommandKind::Solve => cmd_solve(&cfg, json),
        CommandKind::Wave => cmd_wave(&cfg, json),
        CommandKind::Export => cmd_export(&cfg),
    }
}

pub fn cmd_catalog(family: Option<&str>, json: bool) -> Result<Outcome> {
    let families: Vec<Family> = match family {
        Some(f) => vec![f.parse()?],
        None => Family::ALL.to_vec(),
    };
    let infos: Vec<FamilyInfo> = families.into_iter().map(family_info).collect();
    let stdout = if json {
        String::from_utf8(json_bytes(&infos)?).expect("JSON is UTF-8")
    } else {
        let mut s = String::new();
        for i in &infos {
            let dims: Vec<String> = i.dims.iter().map(|d| d.to_string()).collect();
            let _ = writeln!(
                s,
                "{}  n ∈ {{{}}}  parameters: {}",
                i.family,
                dims.join(","),
                i.params.join(", ")
            );
            let _ = writeln!(s, "    {}", i.phase);
            let _ = writeln!(s, "    {}", i.variable);
            let _ = writeln!(s, "    profile: {}", i.profile);
            let _ = writeln!(s, "    singular: {}", i.singular_surfaces);
        }
        s
    };
    Ok(Outcome {
        code: EXIT_PASS,
        stdout,
    })
}

/// Everything `verify` establishes about one family instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutcome {
    pub family: Family,
    pub n: usize,
    pub params: Params,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub transform: Option<EquivalenceTransform>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub perturbation: Option<Perturbation>,
    pub report: ResidualReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<OrderCheck>,
    pub profile_fit: ProfileFit,
    pub expected_coefficients: Vec<f64>,
    pub fit_passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<ThetaCheck>,
    pub level_set: LevelSetCheck,
    pub passed: bool,
}

impl VerifyOutcome {
    pub fn to_text(&self) -> String {
        let mut s = self.report.to_text();
        let coeffs = |c: &[f64]| c.iter().map(|v| format!("{v:.6}")).collect::<Vec<_>>().join(", ");
        let _ = writeln!(
            s,
            "fit {} [{}] residual {:.3e}, expected [{}]: {}",
            self.profile_fit.target,
            coeffs(&self.profile_fit.coefficients),
            self.profile_fit.residual,
            coeffs(&self.expected_coefficients),
            verdict(self.fit_passed)
        );
        if let Some(o) = &self.order {
            let _ = writeln!(
                s,
                "order: {:.3e} → {:.3e} ratio {}: {}",
                o.coarse,
                o.fine,
                o.ratio.map_or("exact".into(), |r| format!("{r:.3}")),
                verdict(o.passed)
            );
        }
        if let Some(t) = &self.theta {
            let _ = writeln!(
                s,
                "theta degree {} defect {:.3e}: {}",
                t.degree,
                t.defect,
                verdict(t.satisfied)
            );
        }
        let _ = writeln!(
            s,
            "level set ω = {}: deviation {:.3e}: {}",
            self.level_set.omega,
            self.level_set.deviation,
            verdict(self.level_set.passed)
        );
        let _ = writeln!(s, "{}: {}", self.family, verdict(self.passed));
        s
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

fn level_set_omega(family: Family) -> f64 {
    if family.is_time_branch() {
        0.5
    } else {
        2.0
    }
}

fn level_set_profile() -> std::sync::Arc<dyn Fn(f64) -> Complex64 + Send + Sync> {
    std::sync::Arc::new(|w: f64| Complex64::new(w * (-w * w).exp(), 0.0))
}

fn tolerance_for(cfg: &RunConfig, method: Method, h: f64) -> f64 {
    cfg.tolerance.unwrap_or(match method {
        Method::Analytic => ANALYTIC_TOLERANCE,
        Method::Oracle => oracle_tolerance(h),
    })
}

pub fn verify_family(cfg: &RunConfig, family: Family) -> Result<VerifyOutcome> {
    let n = cfg.n.unwrap_or(family.default_dim());
    let params = cfg.params.clone().or_defaults(family);
    let base = make_family(family, n, &params)?;
    let seed = cfg.seed.unwrap_or(0);
    let transform = cfg.transform.then(|| EquivalenceTransform::seeded(n, seed));
    let mut spec: AnsatzSpec = match &transform {
        Some(tr) => equivalence_transform(&base, tr)?,
        None => base.clone(),
    };
    if let Some(p) = cfg.perturbation {
        spec = spec.perturbed(p);
    }
    let h = cfg.h();
    let method = cfg.method.unwrap_or(Method::Analytic);
    let grid = cfg.grid_or(default_grid(n, h));
    let (points, excluded) = grid.sample(spec.surfaces())?;
    let tolerance = tolerance_for(cfg, method, h);
    let report = check_conditions_at(&spec, &points, excluded, method, h, tolerance)?;
    let order = if cfg.order && method == Method::Oracle {
        let fine = check_conditions_at(&spec, &points, excluded, method, h / 2.0, tolerance)?;
        Some(order_check(report.max_residual(), fine.max_residual(), 4.0, 0.2))
    } else {
        None
    };

    let profile_fit = fit_profile(&spec, &profile_samples(&spec, &points))?;
    let expected = expected_coefficients(&base);
    let fit_passed = profile_fit.residual <= FIT_TOLERANCE
        && profile_fit.coefficients.len() == expected.len()
        && profile_fit
            .coefficients
            .iter()
            .zip(&expected)
            .all(|(c, e)| (c - e).abs() <= FIT_TOLERANCE * e.abs().max(1.0));

    let theta = if family.is_time_branch() {
        let mut times: Vec<f64> = points.iter().map(|p| p.t).collect();
        times.dedup();
        let check = check_theta(&theta_samples(&spec, &times), n, THETA_TOLERANCE)?;
        Some(check)
    } else {
        None
    };
    let theta_ok = theta.as_ref().map_or(true, |t| {
        t.satisfied && t.degree == expected.iter().filter(|c| **c != 0.0).count()
    });

    let omega0 = level_set_omega(family);
    let ls_points = spec.level_set_points(omega0, 12, seed);
    let level_set = check_level_set_constancy(
        &spec,
        &cfg.nonlinearity()?,
        level_set_profile(),
        omega0,
        &ls_points,
        h,
    )?;

    let passed = report.passed() && order.as_ref().map_or(true, |o| o.passed) && fit_passed && theta_ok && level_set.passed;
    Ok(VerifyOutcome {
        family,
        n,
        params,
        transform,
        perturbation: cfg.perturbation,
        report,
        order,
        profile_fit,
        expected_coefficients: expected,
        fit_passed,
        theta,
        level_set,
        passed,
    })
}

fn report_file_stem(family: Family) -> String {
    format!("verify_{}", family.id().replace('.', "_"))
}

pub fn cmd_verify(cfg: &RunConfig, json: bool) -> Result<Outcome> {
    let families: Vec<Family> = match cfg.family.as_deref() {
        None | Some("all") => {
            if !cfg.params.0.is_empty() {
                return Err(Error::Config("--params needs a single --family".into()));
            }
            Family::ALL.to_vec()
        }
        Some(f) => vec![f.parse()?],
    };
    let outcomes: Vec<VerifyOutcome> = families
        .iter()
        .map(|f| verify_family(cfg, *f))
        .collect::<Result<_>>()?;
    if let Some(dir) = &cfg.out {
        for o in &outcomes {
            let stem = report_file_stem(o.family);
            write_atomic(&dir.join(format!("{stem}.json")), &json_bytes(o)?)?;
            write_atomic(&dir.join(format!("{stem}.txt")), o.to_text().as_bytes())?;
        }
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let stdout = if json {
        String::from_utf8(json_bytes(&outcomes)?).expect("JSON is UTF-8")
    } else {
        let mut s: String = outcomes.iter().map(|o| o.to_text() + "\n").collect();
        let _ = writeln!(
            s,
            "{} of {} families pass",
            outcomes.iter().filter(|o| o.passed).count(),
            outcomes.len()
        );
        s
    };
    Ok(Outcome {
        code: if passed { EXIT_PASS } else { EXIT_FAIL },
        stdout,
    })
}

/// Residual summary written by `solve`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveSummary {
    pub kind: SolveKind,
    pub provenance: Provenance,
    pub source: String,
    pub nonlinearity: String,
    pub n: usize,
    pub h: f64,
    pub points: usize,
    pub excluded: usize,
    pub max_residual: f64,
    pub order: OrderCheck,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub interpolation_error: Option<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub notes: Vec<String>,
    pub passed: bool,
}

struct Built {
    handle: SolutionHandle,
    profile: Option<SampledProfile>,
    grid: GridSpec,
    nonlinearity: Nonlinearity,
}

fn only_params(cfg: &RunConfig, allowed: &[&str], what: &str) -> Result<()> {
    match cfg.params.0.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::UnknownParameter {
            family: what.to_string(),
            name: k.clone(),
        }),
        None => Ok(()),
    }
}

fn build_solution(cfg: &RunConfig, kind: SolveKind) -> Result<Built> {
    let f = cfg.nonlinearity()?;
    let h = cfg.h();
    let p = |k: &str, d: f64| cfg.params.get(k).unwrap_or(d);
    match kind {
        SolveKind::PlaneWave => {
            only_params(cfg, &["c", "c1", "c2"], "plane-wave")?;
            let n = cfg.n.unwrap_or(3);
            Ok(Built {
                handle: plane_wave_solution(n, p("c", 1.0), p("c1", 1.0), p("c2", 0.0), &f)?,
                profile: None,
                grid: cfg.grid_or(default_grid(n, h)),
                nonlinearity: f,
            })
        }
        SolveKind::CaseI => {
            only_params(cfg, &["B1", "B2", "B3", "C"], "case-i")?;
            let mut poles: Vec<f64> = ["B1", "B2", "B3"].iter().map_while(|k| cfg.params.get(k)).collect();
            if poles.is_empty() {
                poles.push(1.0);
            }
            let n = cfg.n.unwrap_or(3).max(poles.len());
            Ok(Built {
                handle: case_i_quadrature(n, &poles, p("C", 1.0), &f)?,
                profile: None,
                grid: cfg.grid_or(default_grid(n, h)),
                nonlinearity: f,
            })
        }
        SolveKind::CaseIi => {
            let family: Family = cfg
                .family
                .as_deref()
                .ok_or_else(|| Error::Config("case-ii needs --family II.1, II.2 or II.3".into()))?
                .parse()?;
            if family.is_time_branch() {
                return Err(Error::Config(format!("{family} is a Z = 0 family; use case-i")));
            }
            let n = cfg.n.unwrap_or(family.default_dim());
            let spec = make_family(family, n, &cfg.params.clone().or_defaults(family))?;
            let grid = cfg.grid_or(default_grid(n, h));
            let (pts, _) = grid.sample(spec.surfaces())?;
            if pts.is_empty() {
                return Err(Error::EmptySample);
            }
            let ws = pts.iter().map(|q| spec.omega(q));
            let (lo, hi) = ws.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), w| (a.min(w), b.max(w)));
            // the stencil reaches |∇ω|·h = h beyond the lattice (h/2 for the order check)
            let pad = 2.0 * h;
            let range = match cfg.range {
                Some(r) if r.0 > lo - pad || r.1 < hi + pad => {
                    return Err(Error::Config(format!(
                        "range [{}, {}] does not cover ω ∈ [{:.4}, {:.4}] on the grid (plus {pad:e} for the stencil)",
                        r.0, r.1, lo, hi
                    )))
                }
                Some(r) => r,
                None => (lo - pad, hi + pad),
            };
            let ode = build_reduced_ode(spec.profile(), f.clone())?;
            let phi0 = cfg.phi0.unwrap_or([1.0, 0.0]);
            let dphi0 = cfg.dphi0.unwrap_or([0.0, 0.0]);
            let step = cfg.step.unwrap_or(1e-4).min((range.1 - range.0) / 10.0);
            let sampled = integrate_case_ii(
                &ode,
                Complex64::new(phi0[0], phi0[1]),
                Complex64::new(dphi0[0], dphi0[1]),
                range,
                step,
            )?;
            Ok(Built {
                handle: lift(&spec, PhiProfile::Sampled(sampled.clone()))?,
                profile: Some(sampled),
                grid,
                nonlinearity: f,
            })
        }
        SolveKind::Wave => Err(Error::Config("use the `wave` command for wave solutions".into())),
    }
}

fn max_abs(values: impl Iterator<Item = f64>) -> f64 {
    values.fold(0.0, |m, v| if v.is_nan() { f64::NAN } else { m.max(v) })
}

pub fn cmd_solve(cfg: &RunConfig, json: bool) -> Result<Outcome> {
    let kind = cfg
        .kind
        .ok_or_else(|| Error::Config("solve needs --kind plane-wave|case-i|case-ii".into()))?;
    let built = build_solution(cfg, kind)?;
    let h = cfg.h();
    let (points, excluded) = built.grid.sample(built.handle.surfaces())?;
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let field = built.handle.field();
    let residuals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| {
            Ok((
                nls_residual(&field, p, &built.nonlinearity, h)?.norm(),
                nls_residual(&field, p, &built.nonlinearity, h / 2.0)?.norm(),
            ))
        })
        .collect::<Result<_>>()?;
    let coarse = max_abs(residuals.iter().map(|r| r.0));
    let fine = max_abs(residuals.iter().map(|r| r.1));
    let order = order_check(coarse, fine, 4.0, 0.2);
    let tolerance = cfg.tolerance.unwrap_or(oracle_tolerance(h));
    let summary = SolveSummary {
        kind,
        provenance: built.handle.provenance(),
        source: built.handle.source().to_string(),
        nonlinearity: built.nonlinearity.to_string(),
        n: built.handle.dim(),
        h,
        points: points.len(),
        excluded,
        max_residual: coarse,
        passed: coarse <= tolerance && order.passed,
        order,
        tolerance,
        interpolation_error: built.handle.interpolation_error(),
        notes: built.handle.notes().to_vec(),
    };
    if let Some(dir) = &cfg.out {
        write_atomic(&dir.join("u.csv"), &solution_csv(&solution_rows(&built.handle, &points)?)?)?;
        if let Some(s) = &built.profile {
            write_atomic(&dir.join("phi.csv"), &profile_csv(&profile_rows(s))?)?;
        }
        write_atomic(&dir.join("summary.json"), &json_bytes(&summary)?)?;
    }
    let stdout = if json {
        String::from_utf8(json_bytes(&summary)?).expect("JSON is UTF-8")
    } else {
        format!(
            "{} [{}] {}\npoints={} excluded={} h={:e}\nmax residual {:.3e} (tolerance {:.1e}), h/2 {:.3e}, ratio {}\n{}\n",
            kind_name(kind),
            summary.provenance,
            summary.source,
            summary.points,
            summary.excluded,
            h,
            summary.max_residual,
            summary.tolerance,
            summary.order.fine,
            summary.order.ratio.map_or("exact".into(), |r| format!("{r:.3}")),
            verdict(summary.passed)
        )
    };
    Ok(Outcome {
        code: if summary.passed { EXIT_PASS } else { EXIT_FAIL },
        stdout,
    })
}

fn kind_name(kind: SolveKind) -> String {
    serde_json::to_value(kind)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

/// Result of the `wave` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WaveSummary {
    pub ansatz: WaveAnsatz,
    pub report: ResidualReport,
    pub phi: WavePhi,
    pub h: f64,
    pub points: usize,
    pub max_residual: f64,
    pub order: OrderCheck,
    pub tolerance: f64,
    pub passed: bool,
}

struct WaveBuilt {
    ansatz: WaveAnsatz,
    phi: WavePhi,
    grid: GridSpec,
}

fn build_wave(cfg: &RunConfig) -> Result<WaveBuilt> {
    let name = cfg.family.as_deref().unwrap_or("linear");
    let family = WaveFamily::from_params(name, &cfg.params)?;
    let k = cfg.k.unwrap_or(2.0);
    let lambda = cfg.lambda.unwrap_or(1.0);
    let ansatz = make_wave_ansatz(k, lambda, family)?;
    let grid = cfg.grid_or(default_wave_grid(cfg.h()));
    if grid.dim() != 3 {
        return Err(Error::Config("wave grids are over (x0; x1, x2, x3)".into()));
    }
    let domain = match cfg.range {
        Some(r) => r,
        None => {
            let pad = 2.0 * grid.h;
            (
                grid.t_range.0 + grid.x_ranges[2].0 - pad,
                grid.t_range.1 + grid.x_ranges[2].1 + pad,
            )
        }
    };
    let phi = solve_wave_ode(&ansatz.t_profile(), lambda, k, cfg.constant.unwrap_or(1.0), domain)?;
    Ok(WaveBuilt { ansatz, phi, grid })
}

pub fn cmd_wave(cfg: &RunConfig, json: bool) -> Result<Outcome> {
    let WaveBuilt { ansatz, phi, grid } = build_wave(cfg)?;
    let method = cfg.method.unwrap_or(Method::Analytic);
    let h = grid.h;
    let mut report = check_wave_conditions(&ansatz, &grid, method)?;
    if let Some(tol) = cfg.tolerance {
        for c in &mut report.conditions {
            c.tolerance = tol;
            c.verdict = if c.max_abs <= tol {
                crate::verifier::Verdict::Pass
            } else {
                crate::verifier::Verdict::Fail
            };
        }
    }
    let u = wave_solution(&ansatz, &phi)?;
    let (points, _) = grid.sample(u.surfaces())?;
    let residuals: Vec<(f64, f64)> = points
        .par_iter()
        .map(|p| {
            Ok((
                wave_residual(&u, p, ansatz.lambda, ansatz.k, h)?.abs(),
                wave_residual(&u, p, ansatz.lambda, ansatz.k, h / 2.0)?.abs(),
            ))
        })
        .collect::<Result<_>>()?;
    let coarse = max_abs(residuals.iter().map(|r| r.0));
    let fine = max_abs(residuals.iter().map(|r| r.1));
    let order = order_check(coarse, fine, 4.0, 0.2);
    let tolerance = cfg.tolerance.unwrap_or(oracle_tolerance(h));
    let summary = WaveSummary {
        passed: report.passed() && coarse <= tolerance && order.passed,
        ansatz,
        report,
        phi,
        h,
        points: points.len(),
        max_residual: coarse,
        order,
        tolerance,
    };
    if let Some(dir) = &cfg.out {
        write_atomic(&dir.join("wave_report.json"), &json_bytes(&summary.report)?)?;
        write_atomic(&dir.join("wave_report.txt"), summary.report.to_text().as_bytes())?;
        write_atomic(&dir.join("u.csv"), &wave_csv(&wave_rows(&u, &points)?)?)?;
        write_atomic(&dir.join("summary.json"), &json_bytes(&summary)?)?;
    }
    let stdout = if json {
        String::from_utf8(json_bytes(&summary)?).expect("JSON is UTF-8")
    } else {
        format!(
            "{}φ ODE residual {:.3e}\nlifted u: max |□u − λu^k| {:.3e} (tolerance {:.1e}), h/2 {:.3e}, ratio {}\n{}\n",
            summary.report.to_text(),
            summary.phi.ode_residual,
            summary.max_residual,
            summary.tolerance,
            summary.order.fine,
            summary.order.ratio.map_or("exact".into(), |r| format!("{r:.3}")),
            verdict(summary.passed)
        )
    };
    Ok(Outcome {
        code: if summary.passed { EXIT_PASS } else { EXIT_FAIL },
        stdout,
    })
}

pub fn cmd_export(cfg: &RunConfig) -> Result<Outcome> {
    let dir = cfg
        .out
        .as_ref()
        .ok_or_else(|| Error::Config("export needs --out DIR".into()))?;
    let kind = cfg.kind.ok_or_else(|| {
        Error::Config("export needs --kind plane-wave|case-i|case-ii|wave".into())
    })?;
    let mut written = Vec::new();
    if kind == SolveKind::Wave {
        let WaveBuilt { ansatz, phi, grid } = build_wave(cfg)?;
        let u = wave_solution(&ansatz, &phi)?;
        let (points, _) = grid.sample(u.surfaces())?;
        let rows = wave_rows(&u, &points)?;
        write_atomic(&dir.join("u.csv"), &wave_csv(&rows)?)?;
        write_atomic(&dir.join("u.json"), &json_bytes(&rows)?)?;
        written.extend(["u.csv", "u.json"]);
    } else {
        let built = build_solution(cfg, kind)?;
        let (points, _) = built.grid.sample(built.handle.surfaces())?;
        let rows = solution_rows(&built.handle, &points)?;
        write_atomic(&dir.join("u.csv"), &solution_csv(&rows)?)?;
        write_atomic(&dir.join("u.json"), &json_bytes(&rows)?)?;
        written.extend(["u.csv", "u.json"]);
        if let Some(s) = &built.profile {
            let rows = profile_rows(s);
            write_atomic(&dir.join("phi.csv"), &profile_csv(&rows)?)?;
            write_atomic(&dir.join("phi.json"), &json_bytes(&rows)?)?;
            written.extend(["phi.csv", "phi.json"]);
        }
    }
    let stdout = written
        .iter()
        .map(|f| format!("{}\n", dir.join(f).display()))
        .collect();
    Ok(Outcome {
        code: EXIT_PASS,
        stdout,
    })
}
