//! The scenario registry and runners.

use super::config::{Config, ConfigError};
use crate::bubble_decomposition::{extract_bubbles_with, ExtractionConfig};
use crate::core_fields::{make_grid, ChannelRegion, GridScheme, RadialGrid, RadialProfile, StatePair};
use crate::elliptic;
use crate::estimates_lab::{
    bootstrap_recursion_check, verify_scaling, BootstrapConstants, EstimatesError, LemmaId,
    ALL_LEMMAS,
};
use crate::ground_state::{eval_w, Bubble};
use crate::linear_radiation::{
    concentration_tau, data_from_profile, free_wave_from_profile, maximal_function,
    profile_from_data, read_profile_csv, write_profile_csv, MaximalDirection, RadiationProfile,
};
use crate::nonlinear_evolution::{evolve, type_one_data, write_trajectory, EvolveParams};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RunError {
    #[error("validation: {0}")]
    Validation(String),
    #[error("computation: {0}")]
    Computation(String),
}

impl From<ConfigError> for RunError {
    fn from(e: ConfigError) -> Self {
        RunError::Validation(e.to_string())
    }
}

macro_rules! computation_from {
    ($($t:ty),*) => {
        $(impl From<$t> for RunError {
            fn from(e: $t) -> Self {
                RunError::Computation(e.to_string())
            }
        })*
    };
}
computation_from!(
    crate::core_fields::FieldError,
    crate::ground_state::GroundStateError,
    crate::linear_radiation::RadiationError,
    crate::nonlinear_evolution::EvolveError,
    crate::elliptic::EllipticError,
    crate::bubble_decomposition::DecompositionError,
    std::io::Error
);

impl From<EstimatesError> for RunError {
    fn from(e: EstimatesError) -> Self {
        match e {
            EstimatesError::Inadmissible { .. }
            | EstimatesError::UnknownLemma(_)
            | EstimatesError::SweepTooNarrow { .. }
            | EstimatesError::SweepTooShort(_) => RunError::Validation(e.to_string()),
            other => RunError::Computation(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ExitReport {
    pub scenario: String,
    pub checks: Vec<CheckResult>,
    pub artifacts: Vec<String>,
}

impl ExitReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

pub struct ScenarioSpec {
    pub name: &'static str,
    /// the verified claim this scenario exercises
    pub claim: &'static str,
    pub required: &'static [(&'static str, &'static str)],
    pub optional: &'static [(&'static str, &'static str, &'static str)],
}

pub const SCENARIOS: &[ScenarioSpec] = &[
    ScenarioSpec {
        name: "bootstrap",
        claim: "envelope recursion check: the B/A inequality system contracts to M = 0 at rate 2/5 under the admissibility conditions",
        required: &[],
        optional: &[
            ("c0_star", "1.0", "absolute Strichartz-side constant"),
            ("c1_star", "1.0", "absolute capped-channel constant"),
            ("c2_star", "1.0", "nonlinear-terms constant"),
            ("c3_star", "1.0", "a-priori envelope constant"),
            ("gamma", "25.0", "envelope amplification factor (> 20 c0_star)"),
            ("c1", "1e-7", "small geometric constant in (0,1)"),
            ("c2", "100.0", "large geometric constant (> 1)"),
            ("k", "10", "number of dyadic channel shells"),
            ("tau", "1e-3", "smallness parameter"),
        ],
    },
    ScenarioSpec {
        name: "decompose",
        claim: "instantaneous multi-bubble extraction via the r^(1/2)|remainder| level crossings, with residuals and scale ratios",
        required: &[("state", "synthetic | file")],
        optional: &[
            ("bubbles", "+1:1.0", "sign:scale pairs for the synthetic state"),
            ("file", "-", "CSV path with r,u0,u1 when state = file"),
            ("vl_file", "-", "optional radiation-trace CSV r,u0,u1"),
            ("c2", "100.0", "matching radius parameter"),
            ("n_max", "8", "maximal bubble count"),
            ("refine_sweeps", "4", "self-consistent refinement sweeps (0 = plain inductive pass)"),
            ("r_min", "1e-7", "grid start"),
            ("r_max", "1e4", "grid end"),
            ("n", "1409", "grid nodes"),
        ],
    },
    ScenarioSpec {
        name: "elliptic",
        claim: "the corrector phi = (w* + beta v)/r: decaying solution, mu0 = w*(0) != 0, phi(c) = 0, |beta| c band, r phi / mu0 band",
        required: &[],
        optional: &[
            ("c", "100.0", "matching radius (phi(c) = 0)"),
            ("r_infinity", "1e4", "asymptotic start radius (>= 1e4)"),
            ("tol", "1e-12", "integrator tolerance (>= 1e-12)"),
            ("c_sweep", "100,1000,10000", "matching radii for the band checks"),
        ],
    },
    ScenarioSpec {
        name: "radiation",
        claim: "radiation profile <-> data bijection: explicit formulas, the exterior energy identity 8 pi ||G||^2 + 4 pi R u0(R)^2, round trip",
        required: &[("profile", "gaussian | indicator | random | file")],
        optional: &[
            ("file", "-", "profile CSV when profile = file"),
            ("seed", "42", "random profile seed"),
            ("radius", "0.0", "exterior radius R for the recovery"),
            ("s_span", "6.0", "profile half-range"),
            ("n_s", "4001", "profile nodes"),
            ("r_min", "1e-3", "data grid start"),
            ("r_max", "50.0", "data grid end"),
            ("n_r", "50001", "data grid nodes"),
            ("isometry_tol", "1e-6", "relative tolerance on the energy identity"),
        ],
    },
    ScenarioSpec {
        name: "simulate",
        claim: "radial evolution of the focusing quintic equation via psi = r u leapfrog, with energy tracking and blow-up detection",
        required: &[("initial", "ground_state | type_one | bump | file")],
        optional: &[
            ("lambda", "1.0", "ground-state scale"),
            ("sign", "1", "ground-state sign"),
            ("t_plus", "1.0", "type-one blow-up time"),
            ("r0", "1.2", "type-one constant-core radius"),
            ("cut_width", "0.4", "type-one cutoff ramp width"),
            ("amplitude", "1e-3", "bump amplitude"),
            ("bump_width", "1.0", "bump support radius"),
            ("file", "-", "initial data CSV r,u0,u1"),
            ("domain_radius", "20.0", "outer boundary"),
            ("spatial_step", "0.01", "grid step"),
            ("cfl", "0.9", "time step over space step"),
            ("t_end", "10.0", "final time"),
            ("snapshot_interval", "0.5", "snapshot cadence"),
            ("nonlinearity", "true", "quintic term on/off"),
            ("blowup_ceiling", "1e6", "max |u| before truncation"),
            ("theta", "-", "amplitude step refinement dt <= theta/max|u|^2"),
            ("labels", "-", "outgoing labels s for the characteristic accumulator"),
            ("r_eval", "-", "energy evaluation radius (default domain - t_end - 1)"),
            ("energy_drift_tol", "-", "optional relative drift check"),
        ],
    },
    ScenarioSpec {
        name: "tau-diagnostic",
        claim: "radiation concentration: the three-term tau functional and the weak (1,1) bound of the one-sided maximal functions",
        required: &[("profile", "gaussian | indicator | random | file")],
        optional: &[
            ("file", "-", "profile CSV when profile = file"),
            ("seed", "42", "random profile seed"),
            ("s_span", "6.0", "profile half-range"),
            ("n_s", "4001", "profile nodes"),
            ("lambda", "1.0", "concentration scale"),
            ("y_norm_vl", "0.0", "precomputed Strichartz norm of the radiation part"),
            ("compute_y_norm", "false", "compute the Strichartz term from the free wave instead"),
            ("t_window", "1e3", "time window when computing the Strichartz term"),
            ("kappa_decades", "3", "weak (1,1) ladder span"),
        ],
    },
    ScenarioSpec {
        name: "verify-estimate",
        claim: "scaling-law suite: each registry entry's channel norm is swept and its log-log slope compared with the claimed exponent",
        required: &[("lemma", "all | one of the registry ids")],
        optional: &[("sweep", "-", "override sweep values (single lemma only)")],
    },
];

fn spec_for(name: &str) -> Result<&'static ScenarioSpec, RunError> {
    SCENARIOS
        .iter()
        .find(|s| s.name == name)
        .ok_or_else(|| RunError::Validation(ConfigError::UnknownScenario(name.into()).to_string()))
}

/// Stable, sorted registry listing.
pub fn list_scenarios() -> String {
    let mut out = String::new();
    for s in SCENARIOS {
        out.push_str(&format!("{}\n  claim: {}\n", s.name, s.claim));
        if !s.required.is_empty() {
            out.push_str("  required:\n");
            for (k, d) in s.required {
                out.push_str(&format!("    {k} = {d}\n"));
            }
        }
        if !s.optional.is_empty() {
            out.push_str("  optional (default):\n");
            for (k, v, d) in s.optional {
                out.push_str(&format!("    {k} = {v}  ({d})\n"));
            }
        }
    }
    out
}

#[derive(serde::Serialize)]
struct Manifest<'a> {
    scenario: &'a str,
    version: &'a str,
    seed: u64,
    parameters: BTreeMap<String, String>,
    checks: &'a [CheckResult],
    artifacts: &'a [String],
}

fn write_manifest(
    out_dir: &Path,
    scenario: &str,
    config: &Config,
    seed: u64,
    checks: &[CheckResult],
    artifacts: &[String],
) -> Result<(), RunError> {
    let mut parameters = BTreeMap::new();
    for ((section, key), value) in config.entries() {
        parameters.insert(format!("{section}.{key}"), value.clone());
    }
    // record the defaults that were in force
    if let Ok(spec) = spec_for(scenario) {
        for (k, v, _) in spec.optional {
            parameters
                .entry(format!("{scenario}.{k}"))
                .or_insert_with(|| v.to_string());
        }
    }
    let manifest = Manifest {
        scenario,
        version: env!("CARGO_PKG_VERSION"),
        seed,
        parameters,
        checks,
        artifacts,
    };
    let f = std::fs::File::create(out_dir.join("manifest.json")).map_err(RunError::from)?;
    serde_json::to_writer_pretty(f, &manifest)
        .map_err(|e| RunError::Computation(e.to_string()))?;
    Ok(())
}

/// Executes the named scenario; artifacts land in `out_dir`.
pub fn run_scenario(config: &Config, out_dir: &Path, quiet: bool) -> Result<ExitReport, RunError> {
    let name = config.require("scenario", "name")?.to_string();
    spec_for(&name)?;
    std::fs::create_dir_all(out_dir).map_err(RunError::from)?;
    let seed = config.u64_or("scenario", "seed", 42)?;

    let (checks, artifacts) = match name.as_str() {
        "simulate" => run_simulate(config, out_dir)?,
        "decompose" => run_decompose(config, out_dir)?,
        "elliptic" => run_elliptic(config, out_dir)?,
        "verify-estimate" => run_verify_estimate(config, out_dir, quiet)?,
        "bootstrap" => run_bootstrap(config, out_dir)?,
        "radiation" => run_radiation(config, out_dir, seed)?,
        "tau-diagnostic" => run_tau(config, out_dir, seed)?,
        other => {
            return Err(RunError::Validation(
                ConfigError::UnknownScenario(other.into()).to_string(),
            ))
        }
    };

    write_manifest(out_dir, &name, config, seed, &checks, &artifacts)?;
    if !quiet {
        for c in &checks {
            println!(
                "[{}] {} {}",
                if c.passed { "pass" } else { "FAIL" },
                c.name,
                c.detail
            );
        }
    }
    Ok(ExitReport {
        scenario: name,
        checks,
        artifacts,
    })
}

type ScenarioOutput = (Vec<CheckResult>, Vec<String>);

fn csv_file(path: &Path) -> Result<std::io::BufWriter<std::fs::File>, RunError> {
    Ok(std::io::BufWriter::new(
        std::fs::File::create(path).map_err(RunError::from)?,
    ))
}

fn state_from_csv(path: &str) -> Result<StatePair, RunError> {
    let text = std::fs::read_to_string(path).map_err(RunError::from)?;
    let mut rs = Vec::new();
    let mut u0 = Vec::new();
    let mut u1 = Vec::new();
    for line in text.lines().skip(1) {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split(',');
        let bad = || RunError::Validation(format!("bad state CSV row: {line}"));
        rs.push(it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?);
        u0.push(it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?);
        u1.push(it.next().and_then(|v| v.trim().parse().ok()).ok_or_else(bad)?);
    }
    let grid = RadialGrid::from_nodes(rs, GridScheme::Uniform)
        .or_else(|_| {
            let text = std::fs::read_to_string(path).unwrap_or_default();
            let rs: Vec<f64> = text
                .lines()
                .skip(1)
                .filter_map(|l| l.split(',').next().and_then(|v| v.trim().parse().ok()))
                .collect();
            RadialGrid::from_nodes(rs, GridScheme::Logarithmic)
        })
        .map_err(|e| RunError::Validation(format!("state CSV grid: {e}")))?;
    let u0p = RadialProfile::new(grid.clone(), u0, Some(1.0)).map_err(RunError::from)?;
    let u1p = RadialProfile::new(grid, u1, None).map_err(RunError::from)?;
    Ok(StatePair::new(u0p, u1p).map_err(RunError::from)?)
}

fn load_profile(config: &Config, section: &str, seed: u64) -> Result<RadiationProfile, RunError> {
    let kind = config.require(section, "profile")?;
    let span = config.f64_or(section, "s_span", 6.0)?;
    let n = config.usize_or(section, "n_s", 4001)?;
    Ok(match kind {
        "gaussian" => RadiationProfile::sample(-span, span, n, |s| (-s * s).exp())
            .map_err(RunError::from)?,
        "indicator" => RadiationProfile::indicator(0.0, 1.0, span).map_err(RunError::from)?,
        "random" => {
            let mut rng: ChaCha8Rng = rand::SeedableRng::seed_from_u64(seed);
            let k = 4;
            let centers: Vec<f64> = (0..k).map(|_| rng.gen_range(-span / 2.0..span / 2.0)).collect();
            let widths: Vec<f64> = (0..k).map(|_| rng.gen_range(0.3..1.5)).collect();
            let amps: Vec<f64> = (0..k).map(|_| rng.gen_range(-1.0..1.0)).collect();
            RadiationProfile::sample(-span, span, n, move |s| {
                (0..k)
                    .map(|i| amps[i] * (-((s - centers[i]) / widths[i]).powi(2)).exp())
                    .sum()
            })
            .map_err(RunError::from)?
        }
        "file" => {
            let path = config.require(section, "file")?;
            let f = std::fs::File::open(path).map_err(RunError::from)?;
            read_profile_csv(std::io::BufReader::new(f)).map_err(RunError::from)?
        }
        other => {
            return Err(RunError::Validation(format!(
                "unknown profile kind {other} (gaussian | indicator | random | file)"
            )))
        }
    })
}

// ---------------------------------------------------------------------------

fn run_simulate(config: &Config, out: &Path) -> Result<ScenarioOutput, RunError> {
    let sec = "simulate";
    let initial = config.require(sec, "initial")?.to_string();
    let params = EvolveParams {
        domain_radius: config.f64_or(sec, "domain_radius", 20.0)?,
        spatial_step: config.f64_or(sec, "spatial_step", 0.01)?,
        cfl: config.f64_or(sec, "cfl", 0.9)?,
        t_end: config.f64_or(sec, "t_end", 10.0)?,
        snapshot_interval: config.f64_or(sec, "snapshot_interval", 0.5)?,
        nonlinearity_on: config.bool_or(sec, "nonlinearity", true)?,
        blowup_ceiling: config.f64_or(sec, "blowup_ceiling", 1e6)?,
        amplitude_dt_theta: match config.raw(sec, "theta") {
            Some(_) => Some(config.f64(sec, "theta")?),
            None => None,
        },
        characteristic_labels: match config.raw(sec, "labels") {
            Some(_) => Some(config.list_f64(sec, "labels")?),
            None => None,
        },
    };

    let traj = match initial.as_str() {
        "ground_state" => {
            let b = Bubble::new(
                config.f64_or(sec, "sign", 1.0)? as i8,
                config.f64_or(sec, "lambda", 1.0)?,
            )
            .map_err(RunError::from)?;
            evolve(move |r| eval_w(r, &b), |_| 0.0, &params)?
        }
        "type_one" => {
            let (u0, u1) = type_one_data(
                config.f64_or(sec, "t_plus", 1.0)?,
                config.f64_or(sec, "r0", 1.2)?,
                config.f64_or(sec, "cut_width", 0.4)?,
            );
            evolve(u0, u1, &params)?
        }
        "bump" => {
            let amp = config.f64_or(sec, "amplitude", 1e-3)?;
            let w = config.f64_or(sec, "bump_width", 1.0)?;
            evolve(
                move |r| {
                    if r < w {
                        amp * (1.0 - (r / w).powi(2)).powi(3)
                    } else {
                        0.0
                    }
                },
                |_| 0.0,
                &params,
            )?
        }
        "file" => {
            let state = state_from_csv(config.require(sec, "file")?)?;
            let u0 = state.u0().clone();
            let u1 = state.u1().clone();
            evolve(move |r| u0.value_at(r), move |r| u1.value_at(r), &params)?
        }
        other => {
            return Err(RunError::Validation(format!(
                "unknown initial data kind {other}"
            )))
        }
    };

    let traj_dir = out.join("trajectory");
    write_trajectory(&traj_dir, &traj)?;
    let mut artifacts = vec!["trajectory/trajectory.json".to_string()];

    let r_eval = config.f64_or(
        sec,
        "r_eval",
        (params.domain_radius - params.t_end - 1.0).max(params.domain_radius / 2.0),
    )?;
    let energies = crate::nonlinear_evolution::energy_drift(&traj, r_eval)?;
    let mut f = csv_file(&out.join("energy.csv"))?;
    writeln!(f, "t,energy").map_err(RunError::from)?;
    for (t, e) in &energies {
        writeln!(f, "{:.16e},{:.16e}", t, e).map_err(RunError::from)?;
    }
    artifacts.push("energy.csv".into());

    let mut f = csv_file(&out.join("center.csv"))?;
    writeln!(f, "t,u_center").map_err(RunError::from)?;
    for (t, u) in &traj.center_history {
        writeln!(f, "{:.16e},{:.16e}", t, u).map_err(RunError::from)?;
    }
    artifacts.push("center.csv".into());

    let mut checks = Vec::new();
    if let Some(tol) = match config.raw(sec, "energy_drift_tol") {
        Some(_) => Some(config.f64(sec, "energy_drift_tol")?),
        None => None,
    } {
        let e0 = energies.first().map(|(_, e)| *e).unwrap_or(0.0);
        let drift = energies
            .iter()
            .map(|(_, e)| (e - e0).abs())
            .fold(0.0f64, f64::max);
        let rel = drift / e0.abs().max(1e-300);
        checks.push(CheckResult {
            name: "energy drift".into(),
            passed: rel <= tol,
            detail: format!("relative drift {rel:.3e} vs tolerance {tol:.1e}"),
        });
    }
    if let Some(b) = &traj.blowup {
        checks.push(CheckResult {
            name: "blow-up flag".into(),
            passed: true,
            detail: format!(
                "ceiling crossed at t = {:.6}; estimated collapse time {:.6}",
                b.t_detected, b.estimated_t_plus
            ),
        });
    }
    Ok((checks, artifacts))
}

fn run_decompose(config: &Config, out: &Path) -> Result<ScenarioOutput, RunError> {
    let sec = "decompose";
    let state = match config.require(sec, "state")? {
        "synthetic" => {
            let bubbles = config.bubble_list(sec, "bubbles")?;
            let grid = make_grid(
                config.f64_or(sec, "r_min", 1e-7)?,
                config.f64_or(sec, "r_max", 1e4)?,
                config.usize_or(sec, "n", 1409)?,
                GridScheme::Logarithmic,
            )
            .map_err(RunError::from)?;
            let list: Vec<Bubble> = bubbles
                .iter()
                .map(|&(s, l)| Bubble::new(s, l))
                .collect::<Result<_, _>>()
                .map_err(RunError::from)?;
            let u0 = RadialProfile::sample(
                grid.clone(),
                |r| list.iter().map(|b| eval_w(r, b)).sum::<f64>(),
                Some(1.0),
            )
            .map_err(RunError::from)?;
            StatePair::new(u0, RadialProfile::zeros(grid)).map_err(RunError::from)?
        }
        "file" => state_from_csv(config.require(sec, "file")?)?,
        other => {
            return Err(RunError::Validation(format!(
                "unknown state kind {other} (synthetic | file)"
            )))
        }
    };
    let vl = match config.raw(sec, "vl_file") {
        Some(path) => Some(state_from_csv(path)?),
        None => None,
    };
    let extraction = ExtractionConfig {
        c2: config.f64_or(sec, "c2", 100.0)?,
        n_max: config.usize_or(sec, "n_max", 8)?,
        refine_sweeps: config.usize_or(sec, "refine_sweeps", 4)?,
        ..Default::default()
    };
    let result = extract_bubbles_with(&state, vl.as_ref(), &extraction)?;
    let f = std::fs::File::create(out.join("decomposition.json")).map_err(RunError::from)?;
    serde_json::to_writer_pretty(f, &result).map_err(|e| RunError::Computation(e.to_string()))?;
    let checks = vec![CheckResult {
        name: "extraction".into(),
        passed: true,
        detail: format!(
            "J = {}, case {:?}, residual {:.3e}",
            result.bubbles.len(),
            result.case_tag,
            result
                .residual_full
                .or(result.residual_exterior)
                .unwrap_or(0.0)
        ),
    }];
    Ok((checks, vec!["decomposition.json".into()]))
}

fn run_elliptic(config: &Config, out: &Path) -> Result<ScenarioOutput, RunError> {
    let sec = "elliptic";
    let c = config.f64_or(sec, "c", 100.0)?;
    let r_inf = config.f64_or(sec, "r_infinity", 1e4)?;
    let tol = config.f64_or(sec, "tol", 1e-12)?;
    let c_sweep = config.list_f64_or(sec, "c_sweep", &[100.0, 1000.0, 10000.0])?;

    let w_star = elliptic::solve_w_star(r_inf, tol)?;
    let mu0_fixed = elliptic::mu0_by_fixed_step(r_inf, 200_000)?;
    let sol = elliptic::build_phi(c, elliptic::solve_w_star(r_inf, tol)?)?;
    let consts = elliptic::empirical_constants(&w_star, &c_sweep)?;

    let mut f = csv_file(&out.join("elliptic.csv"))?;
    elliptic::write_solution_csv(&sol, &mut f)?;
    let header = serde_json::json!({
        "c": sol.c(),
        "beta": sol.beta(),
        "mu0": sol.mu0(),
        "c5": consts.c5,
        "r4": consts.r4,
        "beta_c_products": consts.beta_c_products,
    });
    let f = std::fs::File::create(out.join("elliptic.json")).map_err(RunError::from)?;
    serde_json::to_writer_pretty(f, &header).map_err(|e| RunError::Computation(e.to_string()))?;

    let mut checks = Vec::new();
    let phi_c = sol.phi(c).abs();
    checks.push(CheckResult {
        name: "phi(c) = 0".into(),
        passed: phi_c <= 1e-10,
        detail: format!("|phi(c)| = {phi_c:.3e}"),
    });
    let mu_rel = (w_star.mu0() - mu0_fixed).abs() / w_star.mu0().abs().max(1e-300);
    checks.push(CheckResult {
        name: "mu0 cross-integrator".into(),
        passed: mu_rel <= 1e-6 && w_star.mu0().abs() > 10.0 * tol,
        detail: format!("mu0 = {:.9}, integrators differ by {mu_rel:.3e}", w_star.mu0()),
    });
    let band_ok = consts
        .beta_c_products
        .iter()
        .all(|(_, p)| *p > 1.25 && *p < 5.0);
    checks.push(CheckResult {
        name: "|beta| c band".into(),
        passed: band_ok,
        detail: format!("{:?}", consts.beta_c_products),
    });
    let mut worst_defect = 0.0f64;
    for (_, d) in w_star.residual_samples(1e-6, 50.0) {
        worst_defect = worst_defect.max(d);
    }
    checks.push(CheckResult {
        name: "equation defect".into(),
        passed: worst_defect <= 1e-10,
        detail: format!("max derivative defect {worst_defect:.3e}"),
    });
    Ok((checks, vec!["elliptic.csv".into(), "elliptic.json".into()]))
}

fn run_verify_estimate(config: &Config, out: &Path, quiet: bool) -> Result<ScenarioOutput, RunError> {
    let sec = "verify-estimate";
    let which = config.require(sec, "lemma")?;
    let ids: Vec<LemmaId> = if which == "all" {
        ALL_LEMMAS.to_vec()
    } else {
        vec![LemmaId::parse(which)?]
    };
    let sweep = match config.raw(sec, "sweep") {
        Some(_) if ids.len() == 1 => Some(config.list_f64(sec, "sweep")?),
        Some(_) => {
            return Err(RunError::Validation(
                "sweep override only applies to a single lemma".into(),
            ))
        }
        None => None,
    };

    use rayon::prelude::*;
    let reports: Vec<_> = ids
        .par_iter()
        .map(|&id| verify_scaling(id, sweep.as_deref()))
        .collect::<Result<Vec<_>, _>>()?;

    let mut checks = Vec::new();
    let mut artifacts = Vec::new();
    if !quiet {
        println!("{:<7} {:>9} {:>9} {:>10}  status", "lemma", "claimed", "fitted", "stderr");
    }
    for r in &reports {
        let fname = format!("scaling_{}.json", r.lemma_id.replace('.', "_"));
        let f = std::fs::File::create(out.join(&fname)).map_err(RunError::from)?;
        serde_json::to_writer_pretty(f, &r).map_err(|e| RunError::Computation(e.to_string()))?;
        artifacts.push(fname);
        let cname = format!("scaling_{}_samples.csv", r.lemma_id.replace('.', "_"));
        let mut f = csv_file(&out.join(&cname))?;
        writeln!(f, "parameter,norm").map_err(RunError::from)?;
        for (p, v) in &r.samples {
            writeln!(f, "{:.16e},{:.16e}", p, v).map_err(RunError::from)?;
        }
        artifacts.push(cname);
        if !quiet {
            println!(
                "{:<7} {:>9.3} {:>9.4} {:>10.2e}  {}",
                r.lemma_id,
                r.claimed_exponent,
                r.fitted_slope,
                r.slope_std_error,
                if r.passed { "pass" } else { "FAIL" }
            );
        }
        checks.push(CheckResult {
            name: format!("slope {}", r.lemma_id),
            passed: r.passed,
            detail: format!(
                "claimed {:.3}, fitted {:.4} +- {:.2e}",
                r.claimed_exponent, r.fitted_slope, r.slope_std_error
            ),
        });
    }
    Ok((checks, artifacts))
}

fn run_bootstrap(config: &Config, out: &Path) -> Result<ScenarioOutput, RunError> {
    let sec = "bootstrap";
    let constants = BootstrapConstants {
        c0_star: config.f64_or(sec, "c0_star", 1.0)?,
        c1_star: config.f64_or(sec, "c1_star", 1.0)?,
        c2_star: config.f64_or(sec, "c2_star", 1.0)?,
        c3_star: config.f64_or(sec, "c3_star", 1.0)?,
        gamma: config.f64_or(sec, "gamma", 25.0)?,
        c1: config.f64_or(sec, "c1", 1e-7)?,
        c2: config.f64_or(sec, "c2", 100.0)?,
    };
    let k = config.usize_or(sec, "k", 10)?;
    let tau = config.f64_or(sec, "tau", 1e-3)?;
    let outcome = bootstrap_recursion_check(&constants, k, tau)?;

    let f = std::fs::File::create(out.join("bootstrap.json")).map_err(RunError::from)?;
    serde_json::to_writer_pretty(f, &outcome).map_err(|e| RunError::Computation(e.to_string()))?;
    let mut f = csv_file(&out.join("bootstrap_history.csv"))?;
    writeln!(f, "iteration,M").map_err(RunError::from)?;
    for (i, m) in outcome.history.iter().enumerate() {
        writeln!(f, "{},{:.16e}", i, m).map_err(RunError::from)?;
    }
    let checks = vec![
        CheckResult {
            name: "M contracts to zero".into(),
            passed: outcome.m_final <= 1e-12,
            detail: format!(
                "M = {:.3e} after {} iterations",
                outcome.m_final, outcome.iterations
            ),
        },
        CheckResult {
            name: "contraction ratio".into(),
            passed: outcome.max_ratio <= 0.4 + 1e-9,
            detail: format!("max per-iteration ratio {:.6}", outcome.max_ratio),
        },
    ];
    Ok((checks, vec!["bootstrap.json".into(), "bootstrap_history.csv".into()]))
}

fn run_radiation(config: &Config, out: &Path, seed: u64) -> Result<ScenarioOutput, RunError> {
    let sec = "radiation";
    let profile = load_profile(config, sec, seed)?;
    let radius = config.f64_or(sec, "radius", 0.0)?;
    let grid = make_grid(
        config.f64_or(sec, "r_min", 1e-3)?,
        config.f64_or(sec, "r_max", 50.0)?,
        config.usize_or(sec, "n_r", 50001)?,
        GridScheme::Uniform,
    )
    .map_err(RunError::from)?;
    let state = data_from_profile(&profile, &grid)?;
    let recovered = profile_from_data(&state, radius)?;

    let mut f = csv_file(&out.join("profile.csv"))?;
    write_profile_csv(&profile, &mut f)?;
    let mut f = csv_file(&out.join("data.csv"))?;
    writeln!(f, "r,u0,u1").map_err(RunError::from)?;
    for (i, &r) in grid.nodes().iter().enumerate() {
        writeln!(
            f,
            "{:.16e},{:.16e},{:.16e}",
            r,
            state.u0().values()[i],
            state.u1().values()[i]
        )
        .map_err(RunError::from)?;
    }
    let mut f = csv_file(&out.join("recovered_profile.csv"))?;
    write_profile_csv(&recovered, &mut f)?;

    // the exterior energy identity
    let lhs = crate::core_fields::h_norm(&state, radius).map_err(RunError::from)?;
    let u0_at = if radius > 0.0 {
        crate::numerics::interp::cubic(grid.nodes(), state.u0().values(), radius)
    } else {
        0.0
    };
    let rhs = (8.0 * std::f64::consts::PI * profile.l2_mass_outside(radius)
        + 4.0 * std::f64::consts::PI * radius * u0_at * u0_at)
        .sqrt();
    let tol = config.f64_or(sec, "isometry_tol", 1e-6)?;
    let rel = ((lhs * lhs - rhs * rhs) / (rhs * rhs).max(1e-300)).abs();
    let report = serde_json::json!({
        "h_norm": lhs,
        "identity_rhs": rhs,
        "relative_error": rel,
        "residue": recovered.residue(),
    });
    let f = std::fs::File::create(out.join("radiation.json")).map_err(RunError::from)?;
    serde_json::to_writer_pretty(f, &report).map_err(|e| RunError::Computation(e.to_string()))?;

    let mut worst = 0.0f64;
    for &sv in recovered.s_grid() {
        if sv.abs() <= radius.max(grid.r_min()) || sv.abs() > profile.s_max() {
            continue;
        }
        let a = recovered.value_at(sv).map_err(RunError::from)?;
        let b = profile.value_at(sv).map_err(RunError::from)?;
        worst = worst.max((a - b).abs());
    }
    let checks = vec![
        CheckResult {
            name: "exterior energy identity".into(),
            passed: rel <= tol,
            detail: format!("relative error {rel:.3e} vs tolerance {tol:.1e}"),
        },
        CheckResult {
            name: "round trip".into(),
            passed: worst <= 1e-6,
            detail: format!("max profile mismatch {worst:.3e}"),
        },
    ];
    Ok((
        checks,
        vec![
            "profile.csv".into(),
            "data.csv".into(),
            "recovered_profile.csv".into(),
            "radiation.json".into(),
        ],
    ))
}

fn run_tau(config: &Config, out: &Path, seed: u64) -> Result<ScenarioOutput, RunError> {
    let sec = "tau-diagnostic";
    let profile = load_profile(config, sec, seed)?;
    let lambda = config.f64_or(sec, "lambda", 1.0)?;
    let y_vl = if config.bool_or(sec, "compute_y_norm", false)? {
        let wave = free_wave_from_profile(&profile);
        crate::core_fields::y_norm(
            &wave,
            &ChannelRegion::exterior(0.0).map_err(RunError::from)?,
            config.f64_or(sec, "t_window", 1e3)?,
        )
        .map_err(RunError::from)?
        .value
    } else {
        config.f64_or(sec, "y_norm_vl", 0.0)?
    };
    let report = concentration_tau(&profile, y_vl, lambda)?;
    let f = std::fs::File::create(out.join("tau.json")).map_err(RunError::from)?;
    serde_json::to_writer_pretty(f, &report).map_err(|e| RunError::Computation(e.to_string()))?;

    let g_minus = maximal_function(&profile, MaximalDirection::Minus);
    let g_plus = maximal_function(&profile, MaximalDirection::Plus);
    let span = profile.s_max().max(-profile.s_min());
    let ts: Vec<f64> = (0..2001)
        .map(|i| -1.5 * span + 3.0 * span * i as f64 / 2000.0)
        .collect();
    let mut f = csv_file(&out.join("maximal.csv"))?;
    writeln!(f, "t,g_minus,g_plus_of_minus_t").map_err(RunError::from)?;
    let mut gs = Vec::with_capacity(ts.len());
    for &t in &ts {
        let gm = g_minus.eval(t);
        let gp = g_plus.eval(t);
        writeln!(f, "{:.16e},{:.16e},{:.16e}", t, gm, gp).map_err(RunError::from)?;
        gs.push(gm + gp);
    }
    // weak (1,1) ladder
    let l1 = profile.l2_mass_outside(0.0);
    let decades = config.usize_or(sec, "kappa_decades", 3)?;
    let g_max = gs.iter().cloned().fold(0.0f64, f64::max);
    let dt = ts[1] - ts[0];
    let mut fitted_c = 0.0f64;
    let mut rows = Vec::new();
    for k in 0..=(10 * decades) {
        let kappa = g_max * 10f64.powf(-(k as f64) / 10.0);
        let measure = gs.iter().filter(|&&v| v > kappa).count() as f64 * dt;
        fitted_c = fitted_c.max(kappa * measure);
        rows.push((kappa, measure));
    }
    let mut f = csv_file(&out.join("weak11.csv"))?;
    writeln!(f, "kappa,measure,kappa_times_measure").map_err(RunError::from)?;
    for (kappa, measure) in &rows {
        writeln!(f, "{:.16e},{:.16e},{:.16e}", kappa, measure, kappa * measure)
            .map_err(RunError::from)?;
    }
    let checks = vec![
        CheckResult {
            name: "tau total".into(),
            passed: report.total.is_finite() && report.total >= 0.0,
            detail: format!(
                "tau = {:.6} (window {:.6}, strichartz {:.6}, l1 {:.6})",
                report.total, report.term_sup_window, report.term_y_norm, report.term_l1_sup
            ),
        },
        CheckResult {
            name: "weak (1,1) bound".into(),
            // both one-sided pieces are bounded by the same density mass
            passed: fitted_c <= 2.0 * (1.05 * l1) + 1e-12,
            detail: format!("fitted C = {fitted_c:.4e} vs 2||G||^2 = {:.4e}", 2.0 * l1),
        },
    ];
    Ok((
        checks,
        vec!["tau.json".into(), "maximal.csv".into(), "weak11.csv".into()],
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_in_temp(cfg_text: &str) -> (ExitReport, PathBuf) {
        let dir = std::env::temp_dir().join(format!(
            "critwave-test-{}-{:x}",
            std::process::id(),
            rand::random::<u64>()
        ));
        let cfg = Config::parse(cfg_text).unwrap();
        let report = run_scenario(&cfg, &dir, true).unwrap();
        (report, dir)
    }

    #[test]
    fn bootstrap_scenario_zero_tau() {
        let (report, dir) = run_in_temp("[scenario]\nname = bootstrap\n[bootstrap]\ntau = 0\n");
        assert!(report.all_passed());
        assert!(dir.join("manifest.json").exists());
        assert!(dir.join("bootstrap_history.csv").exists());
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn decompose_scenario_two_bubbles() {
        let (report, dir) = run_in_temp(
            "[scenario]\nname = decompose\n[decompose]\nstate = synthetic\nbubbles = +1:1.0,+1:1e-4\n",
        );
        assert!(report.all_passed());
        let text = std::fs::read_to_string(dir.join("decomposition.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["bubbles"]["bubbles"].as_array().unwrap().len(), 2);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn unknown_scenario_is_validation_error() {
        let cfg = Config::parse("[scenario]\nname = nonsense\n").unwrap();
        let dir = std::env::temp_dir().join("critwave-test-unknown");
        match run_scenario(&cfg, &dir, true) {
            Err(RunError::Validation(_)) => {}
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn inadmissible_bootstrap_is_validation_error() {
        let cfg =
            Config::parse("[scenario]\nname = bootstrap\n[bootstrap]\nc1 = 0.9\n").unwrap();
        let dir = std::env::temp_dir().join("critwave-test-inadm");
        match run_scenario(&cfg, &dir, true) {
            Err(RunError::Validation(msg)) => assert!(msg.contains("c1^(2/5)"), "{msg}"),
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn radiation_scenario_random_profile_deterministic() {
        let cfg_text = "[scenario]\nname = radiation\nseed = 9\n[radiation]\nprofile = random\nn_r = 20001\nr_max = 30.0\n";
        let (r1, d1) = run_in_temp(cfg_text);
        let (r2, d2) = run_in_temp(cfg_text);
        assert!(r1.all_passed() && r2.all_passed());
        let a = std::fs::read(d1.join("data.csv")).unwrap();
        let b = std::fs::read(d2.join("data.csv")).unwrap();
        assert_eq!(a, b, "byte-identical artifacts for identical config");
        std::fs::remove_dir_all(d1).ok();
        std::fs::remove_dir_all(d2).ok();
    }

    #[test]
    fn tau_scenario_indicator() {
        let (report, dir) = run_in_temp(
            "[scenario]\nname = tau-diagnostic\n[tau-diagnostic]\nprofile = indicator\nlambda = 1.0\n",
        );
        assert!(report.all_passed());
        let text = std::fs::read_to_string(dir.join("tau.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert!((v["term_sup_window"].as_f64().unwrap() - 1.0).abs() < 1e-5);
        assert!((v["term_l1_sup"].as_f64().unwrap() - 1.0).abs() < 1e-5);
        std::fs::remove_dir_all(dir).ok();
    }

    #[test]
    fn listing_is_stable() {
        let a = list_scenarios();
        let b = list_scenarios();
        assert_eq!(a, b);
        assert_eq!(SCENARIOS.len(), 7);
        // sorted by name
        let names: Vec<_> = SCENARIOS.iter().map(|s| s.name).collect();
        let mut sorted = names.clone();
        sorted.sort();
        assert_eq!(names, sorted);
    }

    #[test]
    fn verify_estimate_single_lemma() {
        let (report, dir) = run_in_temp(
            "[scenario]\nname = verify-estimate\n[verify-estimate]\nlemma = C2.7\n",
        );
        assert!(report.all_passed(), "{:?}", report.checks);
        assert!(dir.join("scaling_C2_7.json").exists());
        std::fs::remove_dir_all(dir).ok();
    }
}
