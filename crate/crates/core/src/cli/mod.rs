//! Command-line front end: `flow`, `elliptic`, `check` and `sweep`.
//!
//! Runs are configured by a preset (code-defined, so every run can be
//! reproduced without external files) with an optional TOML file merged on top.
//! The fully resolved configuration is echoed in every output header.
//!
//! Exit status: 0 success, 1 failed check or elliptic solve, 2 usage or
//! configuration error, 3 convexity lost, 4 step-size underflow, 5 origin
//! trouble (graph lost, equator reached, recentering failed).

pub mod suites;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::to_csv;
use crate::elliptic::{
    hypothesis_check, soliton_solve, sphere_gamma, sphere_soliton_beta, weingarten_solve, CurvatureFunction,
    EllipticReport, Equation, Params,
};
use crate::error::{Error, Result};
use crate::flow::{run, write_ndjson_with, RunConfig, Trajectory};
use crate::origin::ShiftPolicy;
use crate::spaceform::SpaceForm;
use crate::surface::Profile;
pub use suites::{run_suite, LibraryTrig, PropertyResult, Suite, TrigKernel};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "qflow", version, about = "Quermassintegral-preserving curvature flow lab")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evolve an initial profile and write its trajectory.
    Flow(CommonArgs),
    /// Solve the Weingarten or soliton equation from random perturbations of a sphere.
    Elliptic(CommonArgs),
    /// Run property suites with fixed seeds.
    Check {
        #[arg(value_enum, default_value = "all")]
        suite: SuiteArg,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Multiplier for the random sample counts.
        #[arg(long, default_value_t = 1)]
        samples: usize,
    },
    /// Run a grid of flows concurrently and join their final records.
    Sweep(CommonArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    All,
    Spaceform,
    Integrals,
    Elliptic,
    FlowShort,
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    /// TOML file merged over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Built-in run (default `perturbed-sphere`); wins over `preset` in the file.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    /// Output directory (created if missing).
    #[arg(long, default_value = "qflow-out")]
    pub out: PathBuf,
    /// Seed of the random perturbations (elliptic); overrides `[elliptic] seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// flow: number of recorded samples over `t_end`; elliptic: number of perturbations.
    #[arg(long)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Centred geodesic sphere, `K = 1`, `n = 2`, `R = 0.8`, `l = 0`.
    Sphere,
    /// `rho = R + delta cos(2 phi)` with `R = 0.8`, `delta = 0.05`, run to convergence.
    PerturbedSphere,
    /// The perturbed sphere re-expressed about an origin moved `0.15` along the
    /// axis, with event-driven origin shifts.
    OffCenter,
}

/// Initial profile source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    /// Profile text file; overrides the preset shape and fixes `k`, `n`, `cells`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub profile: Option<PathBuf>,
    pub radius: f64,
    /// Amplitude of the `cos(mode phi)` perturbation.
    pub delta: f64,
    pub mode: u32,
    /// Distance the origin is moved along the axis before the run.
    pub offset: f64,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec { profile: None, radius: 0.8, delta: 0.05, mode: 2, offset: 0.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EllipticSpec {
    pub equation: Equation,
    /// `mean`, `norm` or `harmonic`.
    pub function: String,
    pub k: f64,
    pub n: usize,
    pub cells: usize,
    pub alpha: f64,
    /// Defaults to the value making the `radius`-sphere a solution.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    /// Defaults to the value making the `radius`-sphere a soliton.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    pub radius: f64,
    /// Largest relative deviation of the initial guesses from the sphere.
    pub amplitude: f64,
    pub samples: usize,
    pub seed: u64,
}

impl Default for EllipticSpec {
    fn default() -> Self {
        EllipticSpec {
            equation: Equation::Weingarten,
            function: "mean".into(),
            k: 1.0,
            n: 2,
            cells: 64,
            alpha: 1.0,
            gamma: None,
            beta: None,
            radius: 0.6,
            amplitude: 0.05,
            samples: 5,
            seed: 1,
        }
    }
}

/// Axes of a sweep; an absent axis keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<Vec<usize>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub cells: Option<Vec<usize>>,
    /// Multiplies the base `cfl`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_scale: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub delta: Option<Vec<f64>>,
}

/// Fully resolved run description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSpec {
    pub preset: Preset,
    pub flow: RunConfig,
    pub initial: InitialSpec,
    pub elliptic: EllipticSpec,
    pub sweep: SweepGrid,
}

impl Default for RunSpec {
    fn default() -> Self {
        RunSpec::preset(Preset::PerturbedSphere)
    }
}

impl RunSpec {
    pub fn preset(preset: Preset) -> Self {
        let base = RunSpec {
            preset,
            flow: RunConfig { cfl: 0.5, ..RunConfig::default() },
            initial: InitialSpec::default(),
            elliptic: EllipticSpec::default(),
            sweep: SweepGrid::default(),
        };
        match preset {
            Preset::Sphere => RunSpec {
                flow: RunConfig { converge: None, ..base.flow.clone() },
                initial: InitialSpec { delta: 0.0, ..base.initial.clone() },
                ..base
            },
            Preset::PerturbedSphere => RunSpec { flow: RunConfig { t_end: 5.0, ..base.flow.clone() }, ..base },
            Preset::OffCenter => RunSpec {
                flow: RunConfig {
                    t_end: 5.0,
                    shift_policy: ShiftPolicy::EventDriven { u_ratio: 0.95, margin: 0.05, freeze_omega: None },
                    ..base.flow.clone()
                },
                initial: InitialSpec { offset: 0.15, ..base.initial.clone() },
                ..base
            },
        }
    }

    /// Preset (from the flag, else from the file, else `perturbed-sphere`)
    /// with the TOML text merged over it.
    pub fn resolve(preset: Option<Preset>, toml_text: Option<&str>) -> Result<Self> {
        let user: toml::Table = match toml_text {
            Some(text) => {
                // typed pass over the user text alone, so errors keep their line numbers;
                // fields the file leaves out are filled from the preset below
                if let Err(e) = toml::from_str::<RunSpec>(text) {
                    if !e.message().starts_with("missing field") {
                        return Err(Error::Config(e.to_string()));
                    }
                }
                text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?
            }
            None => toml::Table::new(),
        };
        let from_file = match user.get("preset") {
            Some(v) => Some(
                Preset::deserialize(v.clone()).map_err(|e| Error::Config(format!("preset: {e}")))?,
            ),
            None => None,
        };
        let preset = preset.or(from_file).unwrap_or(Preset::PerturbedSphere);
        let mut merged = toml::Table::try_from(RunSpec::preset(preset)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut merged, user);
        merged.insert("preset".into(), toml::Value::try_from(preset).map_err(|e| Error::Config(e.to_string()))?);
        let spec = RunSpec::deserialize(merged).map_err(|e| Error::Config(e.to_string()))?;
        spec.flow.validate()?;
        Ok(spec)
    }

    /// Initial profile described by `initial` and the flow grid.
    pub fn initial_profile(&mut self) -> Result<Profile> {
        if let Some(path) = &self.initial.profile {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let p = Profile::from_text(&text)?;
            let sf = p.space_form();
            (self.flow.k, self.flow.n, self.flow.cells) = (sf.k(), sf.n(), p.cells());
            return Ok(p);
        }
        let sf = self.flow.space_form()?;
        let InitialSpec { radius, delta, mode, offset, .. } = self.initial;
        let p = Profile::from_fn(sf, self.flow.cells, |phi| radius + delta * (mode as f64 * phi).cos())?;
        if offset != 0.0 {
            p.recenter(offset)
        } else {
            Ok(p)
        }
    }
}

fn merge(base: &mut toml::Table, over: toml::Table) {
    for (k, v) in over {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(o)) => merge(b, o),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn main_with(args: &[String], out: &mut dyn Write, err: &mut dyn Write, trig: &dyn TrigKernel) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = if e.use_stderr() { write!(err, "{e}") } else { write!(out, "{e}") };
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Flow(a) => cmd_flow(&a, out),
        Command::Elliptic(a) => cmd_elliptic(&a, out),
        Command::Check { suite, seed, samples } => Ok(cmd_check(suite, seed, samples, trig, out)),
        Command::Sweep(a) => cmd_sweep(&a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "qflow: {e}");
            EXIT_USAGE
        }
    }
}

fn load(a: &CommonArgs) -> Result<RunSpec> {
    let text = match &a.config {
        Some(path) => Some(fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?),
        None => None,
    };
    let mut spec = RunSpec::resolve(a.preset, text.as_deref())?;
    if let Some(seed) = a.seed {
        spec.elliptic.seed = seed;
    }
    Ok(spec)
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::Config(format!("{}: {e}", dir.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    fs::write(path, bytes).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

fn trajectory_ndjson(traj: &Trajectory, spec: &RunSpec) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    let spec = serde_json::to_value(spec).map_err(|e| Error::Config(e.to_string()))?;
    write_ndjson_with(traj, Some(spec), &mut buf)?;
    Ok(buf)
}

pub fn cmd_flow(a: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let mut spec = load(a)?;
    let p0 = spec.initial_profile()?;
    if let Some(m) = a.samples {
        if m == 0 {
            return Err(Error::Config("--samples must be positive".into()));
        }
        spec.flow.sample_dt = spec.flow.t_end / m as f64;
    }
    let traj = run(&p0, &spec.flow)?;
    create_dir(&a.out)?;
    write_file(&a.out.join("trajectory.ndjson"), &trajectory_ndjson(&traj, &spec)?)?;
    write_file(&a.out.join("summary.csv"), to_csv(&traj.records()).as_bytes())?;
    write_file(&a.out.join("final_profile.txt"), traj.final_profile.to_text().as_bytes())?;
    let last = serde_json::json!({
        "terminal": traj.terminal.name(),
        "steps": traj.steps,
        "shifts": traj.shifts.len(),
        "W_target": traj.w_target,
        "record": traj.last(),
    });
    writeln!(out, "{last}")?;
    Ok(traj.terminal.exit_code())
}

/// Initial guess `R (1 + amplitude g)`, where `g` is a random combination of
/// `cos(m phi)`, `m = 1..3`, with `max |g| <= 1`.
pub fn perturbed_sphere(sf: SpaceForm, cells: usize, radius: f64, amplitude: f64, rng: &mut impl Rng) -> Result<Profile> {
    let a: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let total: f64 = a.iter().map(|x: &f64| x.abs()).sum::<f64>().max(1e-12);
    Profile::from_fn(sf, cells, |phi| {
        let g: f64 = a.iter().enumerate().map(|(m, c)| c * ((m + 1) as f64 * phi).cos()).sum();
        radius * (1.0 + amplitude * g / total)
    })
}

/// One elliptic job per perturbation; each report is one NDJSON line.
pub fn elliptic_jobs(spec: &EllipticSpec) -> Result<Vec<std::result::Result<EllipticReport, String>>> {
    let sf = SpaceForm::new(spec.k, spec.n)?;
    let f = CurvatureFunction::from_name(&spec.function)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut reports = Vec::new();
    for _ in 0..spec.samples {
        let init = perturbed_sphere(sf, spec.cells, spec.radius, spec.amplitude, &mut rng)?;
        let rep = match spec.equation {
            Equation::Weingarten => {
                let gamma = spec.gamma.unwrap_or_else(|| sphere_gamma(sf, &f, spec.radius, spec.alpha));
                weingarten_solve(&f, gamma, spec.alpha, sf, &init).and_then(|mut r| {
                    r.flags = Some(hypothesis_check(&r.profile, &f, Params::Weingarten { alpha: spec.alpha })?);
                    Ok(r)
                })
            }
            Equation::Soliton => {
                let beta = spec.beta.unwrap_or_else(|| sphere_soliton_beta(sf, spec.radius));
                soliton_solve(&f, beta, &init).and_then(|mut r| {
                    r.flags = Some(hypothesis_check(&r.profile, &f, Params::Soliton { beta })?);
                    Ok(r)
                })
            }
        };
        reports.push(rep.map_err(|e| e.to_string()));
    }
    Ok(reports)
}

pub fn cmd_elliptic(a: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let mut spec = load(a)?;
    if let Some(m) = a.samples {
        spec.elliptic.samples = m;
    }
    let reports = elliptic_jobs(&spec.elliptic)?;
    let mut buf = Vec::new();
    writeln!(buf, "{}", serde_json::json!({ "header": { "elliptic": &spec.elliptic } }))?;
    let mut failed = 0;
    for (i, r) in reports.iter().enumerate() {
        let line = match r {
            Ok(rep) => serde_json::json!({ "job": i, "report": rep }),
            Err(e) => {
                failed += 1;
                serde_json::json!({ "job": i, "error": e })
            }
        };
        writeln!(buf, "{line}")?;
    }
    create_dir(&a.out)?;
    write_file(&a.out.join("elliptic.ndjson"), &buf)?;
    for (i, r) in reports.iter().enumerate() {
        match r {
            Ok(rep) => writeln!(
                out,
                "job {i}: residual {:.2e}, {} iterations, sphere fit R = {:.12} (residual {:.2e}, centre {:.2e}), relation root {}",
                rep.residual,
                rep.iterations,
                rep.sphere_fit.radius,
                rep.sphere_fit.residual,
                rep.sphere_fit.center,
                rep.radius_root.map_or("none".into(), |r| format!("{r:.12}")),
            )?,
            Err(e) => writeln!(out, "job {i}: failed: {e}")?,
        }
    }
    Ok(if failed == 0 { EXIT_OK } else { EXIT_FAILED })
}

pub fn cmd_check(suite: SuiteArg, seed: u64, samples: usize, trig: &dyn TrigKernel, out: &mut dyn Write) -> i32 {
    let suites: Vec<Suite> = match suite {
        SuiteArg::All => Suite::ALL.to_vec(),
        SuiteArg::Spaceform => vec![Suite::SpaceForm],
        SuiteArg::Integrals => vec![Suite::Integrals],
        SuiteArg::Elliptic => vec![Suite::Elliptic],
        SuiteArg::FlowShort => vec![Suite::FlowShort],
    };
    let results: Vec<PropertyResult> = suites.iter().flat_map(|&s| run_suite(s, trig, seed, samples)).collect();
    let _ = writeln!(out, "{:<11} {:<52} {:>12} {:>12}  result", "suite", "property", "worst", "tolerance");
    for r in &results {
        let _ = writeln!(
            out,
            "{:<11} {:<52} {:>12.3e} {:>12.1e}  {}",
            r.suite,
            r.name,
            r.worst,
            r.tol,
            if r.pass { "pass" } else { "FAIL" }
        );
    }
    let failed: Vec<&PropertyResult> = results.iter().filter(|r| !r.pass).collect();
    if failed.is_empty() {
        let _ = writeln!(out, "all {} properties pass", results.len());
        EXIT_OK
    } else {
        for r in &failed {
            let _ = writeln!(out, "failed: {} / {} (worst {:e}, tolerance {:e})", r.suite, r.name, r.worst, r.tol);
        }
        EXIT_FAILED
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepJob {
    pub ell: usize,
    pub cells: usize,
    pub dt_scale: f64,
    pub delta: f64,
}

/// Cartesian product of the grid axes; empty when no axis is given or any axis is empty.
pub fn sweep_jobs(spec: &RunSpec) -> Vec<SweepJob> {
    let g = &spec.sweep;
    if g.ell.is_none() && g.cells.is_none() && g.dt_scale.is_none() && g.delta.is_none() {
        return Vec::new();
    }
    let ells = g.ell.clone().unwrap_or_else(|| vec![spec.flow.ell]);
    let cells = g.cells.clone().unwrap_or_else(|| vec![spec.flow.cells]);
    let scales = g.dt_scale.clone().unwrap_or_else(|| vec![1.0]);
    let deltas = g.delta.clone().unwrap_or_else(|| vec![spec.initial.delta]);
    let mut jobs = Vec::new();
    for &ell in &ells {
        for &c in &cells {
            for &dt_scale in &scales {
                for &delta in &deltas {
                    jobs.push(SweepJob { ell, cells: c, dt_scale, delta });
                }
            }
        }
    }
    jobs
}

fn job_spec(spec: &RunSpec, job: SweepJob) -> RunSpec {
    let mut s = spec.clone();
    s.flow.ell = job.ell;
    s.flow.cells = job.cells;
    s.flow.cfl *= job.dt_scale;
    s.initial.delta = job.delta;
    s.sweep = SweepGrid::default();
    s
}

fn sweep_one(spec: &RunSpec, job: SweepJob) -> Result<Trajectory> {
    let mut s = job_spec(spec, job);
    s.flow.validate()?;
    let p0 = s.initial_profile()?;
    run(&p0, &s.flow)
}

pub const SWEEP_CSV_HEADER: &str =
    "job,ell,cells,dt_scale,delta,status,steps,t,W_target,conservationDefect,omega,tracelessSup,sphereFitRadius,sphereFitResidual";

pub fn cmd_sweep(a: &CommonArgs, out: &mut dyn Write) -> Result<i32> {
    let spec = load(a)?;
    let jobs = sweep_jobs(&spec);
    if jobs.is_empty() {
        return Err(Error::Config("sweep grid is empty: give at least one non-empty axis under [sweep]".into()));
    }
    create_dir(&a.out)?;
    let results: Vec<Result<Trajectory>> = jobs.par_iter().map(|&job| sweep_one(&spec, job)).collect();
    let mut csv = String::from(SWEEP_CSV_HEADER);
    csv.push('\n');
    for (i, (job, res)) in jobs.iter().zip(&results).enumerate() {
        let prefix = format!("{i},{},{},{},{}", job.ell, job.cells, job.dt_scale, job.delta);
        match res {
            Ok(traj) => {
                write_file(&a.out.join(format!("job-{i:03}.ndjson")), &trajectory_ndjson(traj, &job_spec(&spec, *job))?)?;
                let r = traj.last();
                csv.push_str(&format!(
                    "{prefix},{},{},{},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                    traj.terminal.name(),
                    traj.steps,
                    r.t,
                    traj.w_target,
                    traj.max_conservation_defect,
                    r.omega,
                    r.traceless_sup,
                    r.sphere_fit_radius,
                    r.sphere_fit_residual
                ));
            }
            Err(e) => {
                let msg = e.to_string().replace([',', '\n'], ";");
                csv.push_str(&format!("{prefix},error: {msg},,,,,,,,\n"));
            }
        }
    }
    write_file(&a.out.join("sweep.csv"), csv.as_bytes())?;
    let failed = results.iter().filter(|r| r.is_err()).count();
    writeln!(out, "{} jobs, {} failed; joined records in {}", jobs.len(), failed, a.out.join("sweep.csv").display())?;
    for line in refinement_orders(&jobs, &results) {
        writeln!(out, "{line}")?;
    }
    Ok(EXIT_OK)
}

const ROUNDING_DRIFT: f64 = 1e-13;

/// Observed conservation-drift order between successive grid sizes of otherwise equal jobs.
fn refinement_orders(jobs: &[SweepJob], results: &[Result<Trajectory>]) -> Vec<String> {
    let mut lines = Vec::new();
    let mut seen: Vec<(usize, u64, u64)> = Vec::new();
    for job in jobs {
        let key = (job.ell, job.dt_scale.to_bits(), job.delta.to_bits());
        if seen.contains(&key) {
            continue;
        }
        seen.push(key);
        let mut series: Vec<(usize, f64)> = jobs
            .iter()
            .zip(results)
            .filter(|(j, _)| (j.ell, j.dt_scale.to_bits(), j.delta.to_bits()) == key)
            .filter_map(|(j, r)| r.as_ref().ok().map(|t| (j.cells, t.max_conservation_defect)))
            .collect();
        series.sort_by_key(|(c, _)| *c);
        for w in series.windows(2) {
            let ((c0, d0), (c1, d1)) = (w[0], w[1]);
            // drifts at rounding level carry no order information
            let order = if d0.max(d1) <= ROUNDING_DRIFT {
                "n/a (rounding level)".to_string()
            } else {
                format!("{:.2}", (d0 / d1).ln() / (c1 as f64 / c0 as f64).ln())
            };
            lines.push(format!(
                "ell {} dt_scale {} delta {}: drift {d0:.2e} (N={c0}) -> {d1:.2e} (N={c1}), order {order}",
                job.ell, job.dt_scale, job.delta
            ));
        }
    }
    lines
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn presets_resolve_and_validate() {
        for p in [Preset::Sphere, Preset::PerturbedSphere, Preset::OffCenter] {
            let mut spec = RunSpec::resolve(Some(p), None).unwrap();
            assert_eq!(spec.preset, p);
            assert!(curve_is_convex(&spec.initial_profile().unwrap()));
        }
    }

    fn curve_is_convex(p: &Profile) -> bool {
        crate::surface::curvature(p).unwrap().is_strictly_convex()
    }

    #[test]
    fn file_overrides_merge_over_the_preset() {
        let text = "preset = \"off-center\"\n[flow]\nell = 1\n[flow.shift_policy]\nu_ratio = 0.9\n";
        let spec = RunSpec::resolve(None, Some(text)).unwrap();
        assert_eq!(spec.preset, Preset::OffCenter);
        assert_eq!(spec.flow.ell, 1);
        assert_eq!(
            spec.flow.shift_policy,
            ShiftPolicy::EventDriven { u_ratio: 0.9, margin: 0.05, freeze_omega: None }
        );
        assert_eq!(spec.initial.offset, 0.15);
        // the flag wins over the file
        assert_eq!(RunSpec::resolve(Some(Preset::Sphere), Some(text)).unwrap().preset, Preset::Sphere);
    }

    #[test]
    fn malformed_config_names_line_and_field() {
        let e = RunSpec::resolve(None, Some("[flow]\nell = 1\ncfl = \"fast\"\n")).unwrap_err().to_string();
        assert!(e.contains("line 3") && e.contains("cfl"), "{e}");
        let e = RunSpec::resolve(None, Some("[flow]\nbogus = 1\n")).unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
        assert!(RunSpec::resolve(None, Some("[flow]\ncfl = 0.9\n")).is_err());
    }

    #[test]
    fn sweep_grid_expansion() {
        let mut spec = RunSpec::default();
        assert!(sweep_jobs(&spec).is_empty());
        spec.sweep.ell = Some(vec![0, 1, 2]);
        spec.sweep.cells = Some(vec![64, 128]);
        assert_eq!(sweep_jobs(&spec).len(), 6);
        spec.sweep.delta = Some(vec![]);
        assert!(sweep_jobs(&spec).is_empty());
    }

    #[test]
    fn perturbations_stay_within_amplitude() {
        let sf = SpaceForm::new(1.0, 2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..20 {
            let p = perturbed_sphere(sf, 64, 0.6, 0.05, &mut rng).unwrap();
            assert!(p.rho().iter().all(|r| (r / 0.6 - 1.0).abs() <= 0.05 + 1e-12));
            assert!(curve_is_convex(&p));
        }
    }
}
