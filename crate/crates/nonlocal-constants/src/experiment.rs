//! Experiment runner behind the `nlc` command-line tool: a TOML-configured
//! system + family + window produces a CSV time series, a JSON summary with
//! drift reports and hypothesis checks, and a deterministic exit code.
//!
//! Exit codes: 0 all budgets and checks met, 1 a budget or check failed,
//! 2 configuration problem, 3 integration failure (blow-up, stiffness or
//! step budget), with the last valid time in the summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::constants::{
    self, check_mu_constancy, check_rho_condition, monotonicity_check, MonotonicityReport,
    RhoParams,
};
use crate::error::{Error, Result};
use crate::families::PerturbationFamily;
use crate::integrate::{attach_quadrature, integrate, Direction, IntegratorConfig};
use crate::jet::{drift_report, DriftReport, JetState};
use crate::lagrangian::LagrangianSpec;
use crate::systems::{self, Potential};
use crate::trajectory::Trajectory;

/// Environment variable providing the default output directory.
pub const OUTPUT_DIR_ENV: &str = "NLC_OUT_DIR";

pub const SYSTEM_NAMES: &[&str] = &["harmonic", "central_force", "viscous", "pais_uhlenbeck"];
pub const FAMILY_NAMES: &[&str] = &["rotation", "time_shift", "exp_time_shift"];
pub const CONSTANT_NAMES: &[&str] = &[
    "nonlocal_2nd",
    "nonlocal_higher",
    "energy",
    "k1_timeshift",
    "k2_space",
    "k3_mu",
    "viscous_constant",
    "pu_k1",
    "pu_k2",
    "pu_k3",
];
pub const POTENTIAL_NAMES: &[&str] = &["zero", "harmonic_well", "quartic_hill"];

fn default_m() -> f64 {
    1.0
}
fn default_w1() -> f64 {
    1.0
}
fn default_w2() -> f64 {
    2.0
}
fn default_potential() -> String {
    "harmonic_well".to_string()
}
fn default_budget() -> f64 {
    1e-6
}
fn default_format() -> String {
    "csv".to_string()
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub name: String,
    #[serde(default = "default_m")]
    pub m: f64,
    #[serde(default)]
    pub k: f64,
    #[serde(default = "default_w1")]
    pub w1: f64,
    #[serde(default = "default_w2")]
    pub w2: f64,
    #[serde(default = "default_potential")]
    pub potential: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub name: String,
    /// Rate of the exponential time-shift family.
    #[serde(default)]
    pub a: Option<f64>,
    /// Declared constant value of dL/dlambda, when known.
    #[serde(default)]
    pub mu: Option<f64>,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct IntegratorSettings {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub initial_step: f64,
    pub max_steps: usize,
}

impl Default for IntegratorSettings {
    fn default() -> Self {
        let d = IntegratorConfig::default();
        IntegratorSettings {
            rel_tol: d.rel_tol,
            abs_tol: d.abs_tol,
            initial_step: d.initial_step,
            max_steps: d.max_steps,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Budgets {
    /// Relative drift allowed for every constant unless overridden.
    #[serde(default = "default_budget")]
    pub max_rel_drift: f64,
    #[serde(default)]
    pub per_constant: BTreeMap<String, f64>,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            max_rel_drift: default_budget(),
            per_constant: BTreeMap::new(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub dir: Option<String>,
    #[serde(default = "default_format")]
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: None,
            format: default_format(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: Option<String>,
    pub system: SystemConfig,
    #[serde(default)]
    pub family: Option<FamilyConfig>,
    /// Initial jet vectors (q, q', ..., q^(2N-1)).
    pub initial: Vec<Vec<f64>>,
    /// (t0, t_end); t_end < t0 integrates backward.
    pub t_span: (f64, f64),
    #[serde(default)]
    pub integrator: IntegratorSettings,
    /// Constant evaluators to run, by registry name.
    #[serde(default)]
    pub constants: Vec<String>,
    #[serde(default)]
    pub budgets: Budgets,
    /// Space-change parameters for `k2_space`; defaults to the
    /// Pais-Uhlenbeck values when that system is selected.
    #[serde(default)]
    pub rho: Option<Vec<f64>>,
    #[serde(default)]
    pub output: OutputConfig,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            toml::from_str(text).map_err(|e| Error::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::config(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    fn validate(&self) -> Result<()> {
        if !SYSTEM_NAMES.contains(&self.system.name.as_str()) {
            return Err(Error::config(format!(
                "unknown system '{}'; see `nlc list`",
                self.system.name
            )));
        }
        if let Some(f) = &self.family {
            if !FAMILY_NAMES.contains(&f.name.as_str()) {
                return Err(Error::config(format!(
                    "unknown family '{}'; see `nlc list`",
                    f.name
                )));
            }
        }
        for c in &self.constants {
            if !CONSTANT_NAMES.contains(&c.as_str()) {
                return Err(Error::config(format!(
                    "unknown constant '{c}'; see `nlc list`"
                )));
            }
        }
        if !POTENTIAL_NAMES.contains(&self.system.potential.as_str()) {
            return Err(Error::config(format!(
                "unknown potential '{}'; see `nlc list`",
                self.system.potential
            )));
        }
        if self.output.format != "csv" {
            return Err(Error::config(format!(
                "unsupported output format '{}' (only csv)",
                self.output.format
            )));
        }
        if self.t_span.0 == self.t_span.1 {
            return Err(Error::config("t_span must be nondegenerate"));
        }
        if self.initial.is_empty() {
            return Err(Error::config("initial jets are required"));
        }
        Ok(())
    }

    pub fn label(&self) -> String {
        self.name.clone().unwrap_or_else(|| "experiment".to_string())
    }
}

struct ResolvedSystem {
    spec: LagrangianSpec,
    potential: Option<Potential>,
}

fn resolve_potential(name: &str) -> Result<Potential> {
    match name {
        "zero" => Ok(Potential::zero()),
        "harmonic_well" => Ok(Potential::harmonic_well()),
        "quartic_hill" => Ok(Potential::quartic_hill()),
        other => Err(Error::config(format!("unknown potential '{other}'"))),
    }
}

fn resolve_system(cfg: &ExperimentConfig) -> Result<ResolvedSystem> {
    let dim = cfg.initial[0].len();
    let sys = &cfg.system;
    match sys.name.as_str() {
        "harmonic" => Ok(ResolvedSystem {
            spec: systems::make_harmonic(),
            potential: None,
        }),
        "central_force" => Ok(ResolvedSystem {
            spec: systems::make_central_force(sys.m, systems::RadialPotential::harmonic())?,
            potential: None,
        }),
        "viscous" => {
            let potential = resolve_potential(&sys.potential)?;
            Ok(ResolvedSystem {
                spec: systems::make_viscous(sys.m, sys.k, dim, potential.clone())?,
                potential: Some(potential),
            })
        }
        "pais_uhlenbeck" => Ok(ResolvedSystem {
            spec: systems::make_pais_uhlenbeck(sys.w1, sys.w2, dim)?,
            potential: None,
        }),
        other => Err(Error::config(format!("unknown system '{other}'"))),
    }
}

fn resolve_family(cfg: &ExperimentConfig) -> Result<Option<PerturbationFamily>> {
    let Some(f) = &cfg.family else {
        return Ok(None);
    };
    let fam = match f.name.as_str() {
        "rotation" => PerturbationFamily::rotation(),
        "time_shift" => PerturbationFamily::time_shift(),
        "exp_time_shift" => PerturbationFamily::exp_time_shift(f.a.unwrap_or(0.0)),
        other => return Err(Error::config(format!("unknown family '{other}'"))),
    };
    Ok(match f.mu {
        Some(mu) => Some(fam.with_mu(mu)),
        None => Some(fam),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct ConstantSummary {
    #[serde(flatten)]
    pub drift: DriftReport,
    pub budget: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckSummary {
    pub passed: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub monotonicity: Option<MonotonicityReport>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub name: String,
    pub system: String,
    pub family: Option<String>,
    pub t_span: (f64, f64),
    pub status: String,
    pub exit_code: i32,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub last_valid_time: Option<f64>,
    pub steps_accepted: usize,
    pub constants: BTreeMap<String, ConstantSummary>,
    pub checks: BTreeMap<String, CheckSummary>,
}

pub struct ExperimentReport {
    pub summary: Summary,
    pub csv_path: Option<PathBuf>,
    pub summary_path: PathBuf,
}

impl ExperimentReport {
    pub fn exit_code(&self) -> i32 {
        self.summary.exit_code
    }
}

struct EvalContext {
    spec: LagrangianSpec,
    family: Option<PerturbationFamily>,
    fam_traj: Option<Trajectory>,
    viscous_traj: Option<Trajectory>,
    plain_traj: Trajectory,
    potential: Option<Potential>,
    rho: RhoParams,
    m: f64,
    k: f64,
    w1: f64,
    w2: f64,
}

impl EvalContext {
    fn family_traj(&self) -> Result<&Trajectory> {
        self.fam_traj
            .as_ref()
            .ok_or_else(|| Error::config("constant requires a [family] section"))
    }

    fn family(&self) -> Result<&PerturbationFamily> {
        self.family
            .as_ref()
            .ok_or_else(|| Error::config("constant requires a [family] section"))
    }

    fn eval(&self, name: &str, t: f64) -> Result<f64> {
        match name {
            "nonlocal_2nd" => Ok(constants::nonlocal_constant_2nd(
                &self.spec,
                self.family()?,
                self.family_traj()?,
                t,
            )?
            .value),
            "nonlocal_higher" => Ok(constants::nonlocal_constant_higher(
                &self.spec,
                self.family()?,
                self.family_traj()?,
                t,
            )?
            .value),
            "energy" => constants::energy(&self.spec, &self.plain_traj.sample_jets(t)?),
            "k1_timeshift" => constants::k1_timeshift(&self.spec, &self.plain_traj, t),
            "k2_space" => {
                constants::k2_space_unchecked(&self.spec, &self.rho, &self.plain_traj, t)
            }
            "k3_mu" => {
                constants::k3_mu_unchecked(&self.spec, self.family()?, &self.plain_traj, t)
            }
            "viscous_constant" => {
                let pot = self
                    .potential
                    .as_ref()
                    .ok_or_else(|| Error::config("viscous_constant needs a potential"))?;
                let traj = self
                    .viscous_traj
                    .as_ref()
                    .ok_or(Error::QuadratureMissing)?;
                constants::viscous_constant(self.m, self.k, pot, traj, t)
            }
            "pu_k1" => systems::pu_k1(&self.plain_traj.sample_jets(t)?, self.w1, self.w2),
            "pu_k2" => systems::pu_k2(&self.plain_traj.sample_jets(t)?, self.w1, self.w2),
            "pu_k3" => systems::pu_k3(&self.plain_traj.sample_jets(t)?, self.w1, self.w2),
            other => Err(Error::config(format!("unknown constant '{other}'"))),
        }
    }
}

/// Run one experiment: integrate, evaluate the requested constants at every
/// accepted node, write the CSV time series and JSON summary into `out_dir`.
pub fn run_experiment(cfg: &ExperimentConfig, out_dir: &Path) -> Result<ExperimentReport> {
    let name = cfg.label();
    fs::create_dir_all(out_dir)?;
    let summary_path = out_dir.join(format!("{name}.summary.json"));

    let resolved = resolve_system(cfg)?;
    let spec = resolved.spec;
    let family = resolve_family(cfg)?;
    let channels = 2 * spec.order();
    if cfg.initial.len() != channels {
        return Err(Error::config(format!(
            "system '{}' needs {channels} initial jet vectors, got {}",
            cfg.system.name,
            cfg.initial.len()
        )));
    }
    let initial = JetState::new(cfg.t_span.0, cfg.initial.clone())
        .map_err(|e| Error::config(format!("initial jets: {e}")))?;
    if initial.dim() != spec.dim() {
        return Err(Error::config(format!(
            "system '{}' has dimension {}, initial jets have {}",
            cfg.system.name,
            spec.dim(),
            initial.dim()
        )));
    }

    let mut icfg = IntegratorConfig {
        rel_tol: cfg.integrator.rel_tol,
        abs_tol: cfg.integrator.abs_tol,
        initial_step: cfg.integrator.initial_step,
        max_steps: cfg.integrator.max_steps,
        direction: Direction::Forward,
    };
    if cfg.t_span.1 < cfg.t_span.0 {
        icfg.direction = Direction::Backward;
    }

    let traj = match integrate(&spec, &initial, cfg.t_span.1, &icfg) {
        Ok(traj) => traj,
        Err(err @ (Error::BlowUp { .. } | Error::Stiffness { .. } | Error::MaxSteps { .. })) => {
            let (status, last_valid_time) = match &err {
                Error::BlowUp { last_valid_time } => ("blow_up", Some(*last_valid_time)),
                Error::Stiffness { t } => ("stiffness", Some(*t)),
                Error::MaxSteps { t, .. } => ("max_steps", Some(*t)),
                _ => unreachable!(),
            };
            let summary = Summary {
                name: name.clone(),
                system: cfg.system.name.clone(),
                family: cfg.family.as_ref().map(|f| f.name.clone()),
                t_span: cfg.t_span,
                status: status.to_string(),
                exit_code: 3,
                last_valid_time,
                steps_accepted: 0,
                constants: BTreeMap::new(),
                checks: BTreeMap::new(),
            };
            fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap())?;
            return Ok(ExperimentReport {
                summary,
                csv_path: None,
                summary_path,
            });
        }
        Err(other) => return Err(other),
    };

    // Quadrature channels: one per consumer kind.
    let needs_family_quadrature = cfg
        .constants
        .iter()
        .any(|c| c == "nonlocal_2nd" || c == "nonlocal_higher");
    let fam_traj = if needs_family_quadrature {
        let fam = family
            .as_ref()
            .ok_or_else(|| Error::config("nonlocal constants require a [family] section"))?;
        Some(attach_quadrature(&traj, &spec, fam)?)
    } else {
        None
    };
    let needs_viscous = cfg.constants.iter().any(|c| c == "viscous_constant");
    let viscous_traj = if needs_viscous {
        let pot = resolved
            .potential
            .as_ref()
            .ok_or_else(|| Error::config("viscous_constant requires the viscous system"))?;
        Some(constants::attach_viscous_quadrature(
            &traj,
            cfg.system.m,
            cfg.system.k,
            pot,
        )?)
    } else {
        None
    };

    let rho = match &cfg.rho {
        Some(r) => RhoParams::new(r.clone())?,
        None => RhoParams::pais_uhlenbeck(cfg.system.w1, cfg.system.w2),
    };

    let ctx = EvalContext {
        spec,
        family,
        fam_traj,
        viscous_traj,
        plain_traj: traj,
        potential: resolved.potential,
        rho,
        m: cfg.system.m,
        k: cfg.system.k,
        w1: cfg.system.w1,
        w2: cfg.system.w2,
    };

    // Hypothesis checks.
    let mut checks = BTreeMap::new();
    if cfg.constants.iter().any(|c| c == "k2_space") {
        let residual = check_rho_condition(&ctx.spec, &ctx.rho, &ctx.plain_traj)?;
        checks.insert(
            "rho_condition".to_string(),
            CheckSummary {
                passed: residual <= constants::RHO_CHECK_TOL,
                residual: Some(residual),
                threshold: Some(constants::RHO_CHECK_TOL),
                monotonicity: None,
            },
        );
    }
    if cfg.constants.iter().any(|c| c == "k3_mu") {
        let fam = ctx.family()?;
        let residual = check_mu_constancy(&ctx.spec, fam, &ctx.plain_traj)?;
        checks.insert(
            "mu_constancy".to_string(),
            CheckSummary {
                passed: residual <= constants::MU_CHECK_TOL,
                residual: Some(residual),
                threshold: Some(constants::MU_CHECK_TOL),
                monotonicity: None,
            },
        );
    }
    if cfg.system.name == "viscous" && ctx.plain_traj.is_backward() {
        if let Some(pot) = &ctx.potential {
            let rep = monotonicity_check(cfg.system.m, cfg.system.k, pot, &ctx.plain_traj)?;
            checks.insert(
                "monotonicity".to_string(),
                CheckSummary {
                    passed: rep.passed(),
                    residual: None,
                    threshold: None,
                    monotonicity: Some(rep),
                },
            );
        }
    }

    // Evaluate every requested constant at every accepted node. Nodes where
    // a stencil would leave the span yield NaN cells.
    let times = ctx.plain_traj.times().to_vec();
    let mut columns: Vec<Vec<f64>> = Vec::with_capacity(cfg.constants.len());
    for cname in &cfg.constants {
        let mut col = Vec::with_capacity(times.len());
        for &t in &times {
            let v = match ctx.eval(cname, t) {
                Ok(v) => v,
                Err(Error::OutOfSpan { .. }) => f64::NAN,
                Err(e) => return Err(e),
            };
            col.push(v);
        }
        columns.push(col);
    }

    // Drift reports and budgets.
    let mut constants_summary = BTreeMap::new();
    let mut all_pass = checks.values().all(|c| c.passed);
    for (cname, col) in cfg.constants.iter().zip(&columns) {
        let series: Vec<(f64, f64)> = times
            .iter()
            .zip(col)
            .filter(|(_, v)| v.is_finite())
            .map(|(&t, &v)| (t, v))
            .collect();
        let budget = cfg
            .budgets
            .per_constant
            .get(cname)
            .copied()
            .unwrap_or(cfg.budgets.max_rel_drift);
        let (drift, passed) = match drift_report(&series) {
            Ok(d) => {
                let ok = d.max_rel_drift <= budget;
                (d, ok)
            }
            Err(_) => (
                DriftReport {
                    reference_value: f64::NAN,
                    max_abs_drift: f64::NAN,
                    max_rel_drift: f64::NAN,
                    sample_count: series.len(),
                },
                false,
            ),
        };
        all_pass &= passed;
        constants_summary.insert(
            cname.clone(),
            ConstantSummary {
                drift,
                budget,
                passed,
            },
        );
    }

    // Time-series CSV: t, jet columns, one column per requested constant.
    let csv_path = out_dir.join(format!("{name}.csv"));
    let csv = render_csv(&ctx.plain_traj, &cfg.constants, &columns);
    fs::write(&csv_path, csv)?;

    let summary = Summary {
        name: name.clone(),
        system: cfg.system.name.clone(),
        family: cfg.family.as_ref().map(|f| f.name.clone()),
        t_span: cfg.t_span,
        status: if all_pass { "ok" } else { "budget_exceeded" }.to_string(),
        exit_code: if all_pass { 0 } else { 1 },
        last_valid_time: None,
        steps_accepted: times.len() - 1,
        constants: constants_summary,
        checks,
    };
    fs::write(&summary_path, serde_json::to_string_pretty(&summary).unwrap())?;

    Ok(ExperimentReport {
        summary,
        csv_path: Some(csv_path),
        summary_path,
    })
}

/// CSV column headers for a trajectory: t, q[i], q1[i], ..., q{2N-1}[i].
pub fn csv_header(order: usize, dim: usize, constants: &[String]) -> String {
    let mut header = String::from("t");
    for j in 0..2 * order {
        for i in 0..dim {
            if j == 0 {
                let _ = write!(header, ",q[{i}]");
            } else {
                let _ = write!(header, ",q{j}[{i}]");
            }
        }
    }
    for c in constants {
        let _ = write!(header, ",{c}");
    }
    header
}

fn render_csv(traj: &Trajectory, constants: &[String], columns: &[Vec<f64>]) -> String {
    let mut out = csv_header(traj.order(), traj.dim(), constants);
    out.push('\n');
    for (i, &t) in traj.times().iter().enumerate() {
        let _ = write!(out, "{t:.16e}");
        let state = traj.node_state(i);
        for jet in &state.jets {
            for &x in jet {
                let _ = write!(out, ",{x:.16e}");
            }
        }
        for col in columns {
            let _ = write!(out, ",{:.16e}", col[i]);
        }
        out.push('\n');
    }
    out
}

/// Hypothesis checks only, on a short probe trajectory (a cheap validation
/// pass before committing to a long run).
pub fn run_checks(cfg: &ExperimentConfig) -> Result<BTreeMap<String, CheckSummary>> {
    let resolved = resolve_system(cfg)?;
    let spec = resolved.spec;
    let family = resolve_family(cfg)?;
    let channels = 2 * spec.order();
    if cfg.initial.len() != channels {
        return Err(Error::config(format!(
            "system '{}' needs {channels} initial jet vectors, got {}",
            cfg.system.name,
            cfg.initial.len()
        )));
    }
    let initial = JetState::new(cfg.t_span.0, cfg.initial.clone())
        .map_err(|e| Error::config(format!("initial jets: {e}")))?;
    let span = (cfg.t_span.1 - cfg.t_span.0).abs().min(2.0);
    let dir = if cfg.t_span.1 >= cfg.t_span.0 { 1.0 } else { -1.0 };
    let t_probe = cfg.t_span.0 + dir * span;
    let mut icfg = IntegratorConfig::default().with_tolerances(1e-9, 1e-9);
    if dir < 0.0 {
        icfg.direction = Direction::Backward;
    }
    let traj = integrate(&spec, &initial, t_probe, &icfg)?;

    let mut checks = BTreeMap::new();
    let rho = match &cfg.rho {
        Some(r) => RhoParams::new(r.clone())?,
        None => RhoParams::pais_uhlenbeck(cfg.system.w1, cfg.system.w2),
    };
    if rho.rho.len() == spec.order() {
        let residual = check_rho_condition(&spec, &rho, &traj)?;
        checks.insert(
            "rho_condition".to_string(),
            CheckSummary {
                passed: residual <= constants::RHO_CHECK_TOL,
                residual: Some(residual),
                threshold: Some(constants::RHO_CHECK_TOL),
                monotonicity: None,
            },
        );
    }
    if let Some(fam) = &family {
        if fam.mu().is_some() {
            let residual = check_mu_constancy(&spec, fam, &traj)?;
            checks.insert(
                "mu_constancy".to_string(),
                CheckSummary {
                    passed: residual <= constants::MU_CHECK_TOL,
                    residual: Some(residual),
                    threshold: Some(constants::MU_CHECK_TOL),
                    monotonicity: None,
                },
            );
        }
    }
    if cfg.system.name == "viscous" {
        if let Some(pot) = &resolved.potential {
            // Bounded-below hypothesis at the probe samples.
            let mut u_min = f64::INFINITY;
            for i in 0..traj.len() {
                let st = traj.node_state(i);
                u_min = u_min.min(pot.value(&st.jets[0]));
            }
            checks.insert(
                "potential_nonnegative".to_string(),
                CheckSummary {
                    passed: u_min >= 0.0,
                    residual: Some(u_min),
                    threshold: Some(0.0),
                    monotonicity: None,
                },
            );
            if traj.is_backward() {
                let rep = monotonicity_check(cfg.system.m, cfg.system.k, pot, &traj)?;
                checks.insert(
                    "monotonicity".to_string(),
                    CheckSummary {
                        passed: rep.passed(),
                        residual: None,
                        threshold: None,
                        monotonicity: Some(rep),
                    },
                );
            }
        }
    }
    Ok(checks)
}

/// Text listing of the built-in registries.
pub fn list_catalog() -> String {
    let mut out = String::new();
    out.push_str("systems:\n");
    out.push_str("  harmonic          L = q'^2/2 - q^2/2 (n = 1)\n");
    out.push_str("  central_force     planar particle, radial harmonic well (params: m)\n");
    out.push_str("  viscous           linear drag in a potential (params: m, k, potential)\n");
    out.push_str("  pais_uhlenbeck    fourth-order oscillator (params: w1, w2)\n");
    out.push_str("families:\n");
    out.push_str("  rotation          planar rotation generator (systems with n = 2)\n");
    out.push_str("  time_shift        q_lambda(t) = q(t + lambda)\n");
    out.push_str("  exp_time_shift    q_lambda(t) = q(t + lambda e^{at}) (param: a)\n");
    out.push_str("constants:\n");
    out.push_str("  nonlocal_2nd      boundary - integral term, first-order Lagrangians\n");
    out.push_str("  nonlocal_higher   boundary - integral term, any order\n");
    out.push_str("  energy            dL/dq' . q' - L (autonomous, N = 1)\n");
    out.push_str("  k1_timeshift      time-shift first integral (autonomous)\n");
    out.push_str("  k2_space          space-change first integral (needs rho)\n");
    out.push_str("  k3_mu             constant-integrand first integral (needs mu)\n");
    out.push_str("  viscous_constant  dissipative constant of motion\n");
    out.push_str("  pu_k1, pu_k2, pu_k3  Pais-Uhlenbeck closed forms\n");
    out.push_str("potentials:\n");
    out.push_str("  zero, harmonic_well, quartic_hill\n");
    out
}
