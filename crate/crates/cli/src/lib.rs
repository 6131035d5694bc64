//! Scenario runner: one verification suite (or a fixed group of them) per
//! invocation, configured from a TOML file, writing `results.csv` and
//! `manifest.json`.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::ValueEnum;
use rqed::coulomb::{self, ClassicalFieldSet, DensityPreset, SpatialGrid};
use rqed::suite::{self, Check, SuiteReport, Table};
use rqed::PhysicalConstants;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const EXIT_OK: u8 = 0;
pub const EXIT_CONFIG: u8 = 2;
pub const EXIT_FAILED: u8 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    AlgebraCheck,
    Spinors,
    GaussCheck,
    PhotonEnergy,
    Gauge,
    Boundstate,
    Longwave,
    Coulomb,
}

impl Scenario {
    pub const ALL: [Scenario; 8] = [
        Scenario::AlgebraCheck,
        Scenario::Spinors,
        Scenario::GaussCheck,
        Scenario::PhotonEnergy,
        Scenario::Gauge,
        Scenario::Boundstate,
        Scenario::Longwave,
        Scenario::Coulomb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::AlgebraCheck => "algebra-check",
            Scenario::Spinors => "spinors",
            Scenario::GaussCheck => "gauss-check",
            Scenario::PhotonEnergy => "photon-energy",
            Scenario::Gauge => "gauge",
            Scenario::Boundstate => "boundstate",
            Scenario::Longwave => "longwave",
            Scenario::Coulomb => "coulomb",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Which scenario carries each acceptance criterion, and the checks (by
/// full name as they appear in the manifest) that criterion is judged on.
pub const COVERAGE: [(u32, Scenario, &[&str]); 10] = [
    (1, Scenario::Boundstate, &["boundstate.profile0.identity", "boundstate.profile1.identity", "boundstate.profile2.identity"]),
    (2, Scenario::Longwave, &["longwave.direction0.slope", "longwave.parallel.u_perp_sq"]),
    (3, Scenario::Spinors, &["spinors.eigen", "spinors.orthonormal", "spinors.cross", "spinors.charge_conjugate"]),
    (
        4,
        Scenario::AlgebraCheck,
        &["algebra.clifford.car", "algebra.gamma.anticommutator", "algebra.oscillator.ccr", "algebra.scalar.commutator", "algebra.photon.commutator"],
    ),
    (5, Scenario::GaussCheck, &["gauss.transversality", "gauss.gauss"]),
    (6, Scenario::AlgebraCheck, &["charge.total_charge.identity"]),
    (7, Scenario::Gauge, &["gauge.admissible.relative", "gauge.longitudinal.absolute"]),
    (8, Scenario::PhotonEnergy, &["energy.scalar.relative", "energy.photon.relative"]),
    (9, Scenario::Coulomb, &["coulomb.gauss.relative", "coulomb.gauss.order", "coulomb.roundtrip"]),
    (10, Scenario::Spinors, &["continuity.profile0.order", "continuity.profile1.order"]),
];

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(String),
    #[error("{0}")]
    Physics(#[from] rqed::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> u8 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            _ => EXIT_FAILED,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    /// coulomb only: also write the corrected field as a binary volume and a
    /// mid-plane CSV slice.
    pub fields: bool,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Config<P> {
    scenario: Option<String>,
    #[serde(default)]
    constants: PhysicalConstants,
    #[serde(default)]
    output: OutputSection,
    #[serde(default)]
    params: P,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct AlgebraCheckParams {
    pub algebra: suite::AlgebraParams,
    pub charge: suite::ChargeParams,
}

#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpinorScenarioParams {
    pub spinors: suite::SpinorParams,
    pub continuity: suite::ContinuityParams,
}

/// Key paths of tolerance-like entries that are not strictly positive.
fn nonpositive_tolerances(v: &serde_json::Value, path: &str, out: &mut Vec<String>) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m {
                let p = if path.is_empty() { k.clone() } else { format!("{path}.{k}") };
                let is_tol = k.ends_with("tol") || k.contains("_tol") || k.ends_with("threshold");
                match x {
                    serde_json::Value::Number(n) if is_tol => {
                        if !n.as_f64().is_some_and(|t| t > 0.0 && t.is_finite()) {
                            out.push(p);
                        }
                    }
                    _ => nonpositive_tolerances(x, &p, out),
                }
            }
        }
        serde_json::Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                nonpositive_tolerances(x, &format!("{path}[{i}]"), out);
            }
        }
        _ => {}
    }
}

fn override_seeds(v: &mut serde_json::Value, seed: u64) {
    match v {
        serde_json::Value::Object(m) => {
            for (k, x) in m.iter_mut() {
                if k == "seed" && x.is_u64() {
                    *x = seed.into();
                } else {
                    override_seeds(x, seed);
                }
            }
        }
        serde_json::Value::Array(a) => a.iter_mut().for_each(|x| override_seeds(x, seed)),
        _ => {}
    }
}

/// A fully validated scenario configuration.
pub struct Loaded<P> {
    pub constants: PhysicalConstants,
    pub output: OutputSection,
    pub params: P,
}

pub fn parse_config<P>(scenario: Scenario, text: &str, seed: Option<u64>) -> Result<Loaded<P>, RunError>
where
    P: DeserializeOwned + Serialize + Default,
{
    let value: toml::Table = text.parse().map_err(|e: toml::de::Error| RunError::Config(e.to_string()))?;
    let cfg: Config<P> = serde_path_to_error::deserialize(toml::Value::Table(value))
        .map_err(|e| RunError::Config(format!("at `{}`: {}", e.path(), e.inner().message())))?;
    if let Some(name) = &cfg.scenario {
        if name != scenario.name() {
            return Err(RunError::Config(format!("at `scenario`: config is for `{name}`, not `{scenario}`")));
        }
    }
    cfg.constants.validate().map_err(|e| RunError::Config(format!("at `constants`: {e}")))?;
    if cfg.output.fields && scenario != Scenario::Coulomb {
        return Err(RunError::Config("at `output.fields`: only the coulomb scenario writes fields".into()));
    }
    let mut json = serde_json::to_value(&cfg.params).map_err(|e| RunError::Config(e.to_string()))?;
    let mut bad = Vec::new();
    nonpositive_tolerances(&json, "params", &mut bad);
    if let Some(p) = bad.first() {
        return Err(RunError::Config(format!("at `{p}`: tolerances must be positive and finite")));
    }
    let params = match seed {
        Some(s) => {
            override_seeds(&mut json, s);
            serde_json::from_value(json).map_err(|e| RunError::Config(e.to_string()))?
        }
        None => cfg.params,
    };
    Ok(Loaded { constants: cfg.constants, output: cfg.output, params })
}

/// Stacks the tables of several suites under a leading `suite` column; the
/// header is the union of all headers in order of first appearance.
pub fn stack_tables(parts: &[(&str, &Table)]) -> Table {
    let mut cols: Vec<String> = Vec::new();
    for (_, t) in parts {
        for h in &t.header {
            if !cols.contains(h) {
                cols.push(h.clone());
            }
        }
    }
    let mut header = vec!["suite".to_string()];
    header.extend(cols.iter().cloned());
    let mut out = Table { header, rows: Vec::new() };
    for (name, t) in parts {
        for r in &t.rows {
            let mut row = vec![name.to_string()];
            row.extend(cols.iter().map(|c| t.header.iter().position(|h| h == c).map(|i| r[i].clone()).unwrap_or_default()));
            out.rows.push(row);
        }
    }
    out
}

fn prefixed(mut rep: SuiteReport, prefix: &str) -> SuiteReport {
    for c in &mut rep.checks {
        c.name = format!("{prefix}.{}", c.name);
    }
    for t in &mut rep.timings {
        t.0 = format!("{prefix}.{}", t.0);
    }
    rep
}

/// Everything a scenario produced, before it is written out.
pub struct ScenarioOutput {
    pub checks: Vec<Check>,
    pub table: Table,
    pub timings: Vec<(String, f64)>,
    /// Extra files (name, bytes) placed next to results.csv.
    pub extra: Vec<(String, Vec<u8>)>,
}

fn coulomb_fields(p: &suite::CoulombParams, c: &PhysicalConstants) -> Result<Vec<(String, Vec<u8>)>, RunError> {
    let n = *p.sizes.last().ok_or_else(|| RunError::Config("at `params.sizes`: empty".into()))?;
    let g = SpatialGrid::new(n, p.extent_sigmas * p.sigma, p.boundary)?;
    let rho = DensityPreset::Gaussian { charge: 1.0, sigma: p.sigma, center: [0.0; 3] }.sample(&g, 0.0);
    let cor = coulomb::add_coulomb(&ClassicalFieldSet::with_density(g, rho), c)?;
    let comps: [&[f64]; 4] = [&cor.j0, &cor.e[0], &cor.e[1], &cor.e[2]];
    let mut vol = Vec::new();
    coulomb::write_volume(&mut vol, &g, &comps)?;
    let mut slice = Vec::new();
    coulomb::write_slice_csv(&mut slice, &g, &comps, 2, n / 2)?;
    Ok(vec![("fields.vol".into(), vol), ("slice.csv".into(), slice)])
}

fn combine(parts: Vec<(&str, SuiteReport)>) -> ScenarioOutput {
    let table = if parts.len() == 1 {
        parts[0].1.table.clone()
    } else {
        stack_tables(&parts.iter().map(|(n, r)| (*n, &r.table)).collect::<Vec<_>>())
    };
    let mut out = ScenarioOutput { checks: Vec::new(), table, timings: Vec::new(), extra: Vec::new() };
    for (name, r) in parts {
        let r = prefixed(r, name);
        out.checks.extend(r.checks);
        out.timings.extend(r.timings);
    }
    out
}

/// Parses the config for `scenario` and runs it. Config problems come back as
/// [`RunError::Config`]; everything else is a failure of the run itself.
/// Check names are prefixed with the suite that produced them.
pub fn execute(scenario: Scenario, text: &str, seed: Option<u64>) -> Result<(ScenarioOutput, OutputSection), RunError> {
    macro_rules! single {
        ($p:ty, $name:literal, $f:path) => {{
            let l = parse_config::<$p>(scenario, text, seed)?;
            (combine(vec![($name, $f(&l.params, &l.constants)?)]), l.output)
        }};
    }
    Ok(match scenario {
        Scenario::AlgebraCheck => {
            let l = parse_config::<AlgebraCheckParams>(scenario, text, seed)?;
            let a = suite::algebra_suite(&l.params.algebra, &l.constants)?;
            let q = suite::total_charge_suite(&l.params.charge, &l.constants)?;
            (combine(vec![("algebra", a), ("charge", q)]), l.output)
        }
        Scenario::Spinors => {
            let l = parse_config::<SpinorScenarioParams>(scenario, text, seed)?;
            let s = suite::spinor_suite(&l.params.spinors, &l.constants)?;
            let k = suite::continuity_suite(&l.params.continuity, &l.constants)?;
            (combine(vec![("spinors", s), ("continuity", k)]), l.output)
        }
        Scenario::GaussCheck => single!(suite::GaussParams, "gauss", suite::gauss_suite),
        Scenario::PhotonEnergy => single!(suite::EnergyParams, "energy", suite::energy_suite),
        Scenario::Gauge => single!(suite::GaugeParams, "gauge", suite::gauge_suite),
        Scenario::Boundstate => single!(suite::BoundStateParams, "boundstate", suite::bound_state),
        Scenario::Longwave => single!(suite::LongWaveParams, "longwave", suite::long_wave),
        Scenario::Coulomb => {
            let l = parse_config::<suite::CoulombParams>(scenario, text, seed)?;
            let mut out = combine(vec![("coulomb", suite::coulomb_suite(&l.params, &l.constants)?)]);
            if l.output.fields {
                out.extra = coulomb_fields(&l.params, &l.constants)?;
            }
            (out, l.output)
        }
    })
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub kind: &'static str,
    pub message: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub scenario: Scenario,
    pub config_path: String,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub threads: usize,
    pub started_at: String,
    pub finished_at: String,
    pub elapsed_seconds: f64,
    /// "passed", "failed" (some check failed) or "error" (the run aborted).
    pub status: &'static str,
    pub error: Option<ErrorRecord>,
    pub checks: Vec<Check>,
    pub timings: Vec<(String, f64)>,
    pub outputs: Vec<String>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn write_csv(path: &Path, t: &Table) -> Result<(), RunError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| RunError::Physics(e.into()))?;
    w.write_record(&t.header).map_err(|e| RunError::Physics(e.into()))?;
    for r in &t.rows {
        w.write_record(r).map_err(|e| RunError::Physics(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

pub struct RunRequest<'a> {
    pub scenario: Scenario,
    pub config_path: &'a Path,
    pub out: Option<&'a Path>,
    pub threads: usize,
    pub seed: Option<u64>,
}

/// Runs one scenario end to end and returns the process exit code. Config
/// errors are reported on stderr without touching the output directory.
pub fn run(req: &RunRequest) -> u8 {
    let text = match fs::read_to_string(req.config_path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("config error: cannot read {}: {e}", req.config_path.display());
            return EXIT_CONFIG;
        }
    };
    let started = chrono::Utc::now();
    let clock = Instant::now();
    let result = execute(req.scenario, &text, req.seed);
    let (output, section, error) = match result {
        Ok((o, s)) => (Some(o), s, None),
        Err(RunError::Config(m)) => {
            eprintln!("config error: {m}");
            return EXIT_CONFIG;
        }
        Err(e) => {
            // The run failed after a valid config; the output directory still
            // comes from the config, so re-read just that section.
            let section = parse_output_section(&text);
            let kind = match &e {
                RunError::Physics(rqed::Error::Infeasible { .. }) => "infeasible",
                RunError::Physics(_) => "physics",
                _ => "io",
            };
            (None, section, Some(ErrorRecord { kind, message: e.to_string() }))
        }
    };
    let dir = req
        .out
        .map(Path::to_path_buf)
        .or(section.dir)
        .unwrap_or_else(|| PathBuf::from("out").join(req.scenario.name()));
    if let Err(e) = fs::create_dir_all(&dir) {
        eprintln!("cannot create {}: {e}", dir.display());
        return EXIT_FAILED;
    }
    let mut outputs = Vec::new();
    let mut error = error;
    let (checks, timings) = match output {
        Some(o) => {
            let written = write_csv(&dir.join("results.csv"), &o.table).and_then(|_| {
                for (name, bytes) in &o.extra {
                    fs::write(dir.join(name), bytes)?;
                }
                Ok(())
            });
            match written {
                Ok(()) => {
                    outputs.push("results.csv".to_string());
                    outputs.extend(o.extra.iter().map(|(n, _)| n.clone()));
                }
                Err(e) => error = Some(ErrorRecord { kind: "io", message: e.to_string() }),
            }
            (o.checks, o.timings)
        }
        None => (Vec::new(), Vec::new()),
    };
    let all_passed = checks.iter().all(|c| c.passed);
    let status = match (&error, all_passed) {
        (Some(_), _) => "error",
        (None, true) => "passed",
        (None, false) => "failed",
    };
    for c in &checks {
        println!("{} {} = {:e} (threshold {:e})", if c.passed { "PASS" } else { "FAIL" }, c.name, c.value, c.threshold);
    }
    if let Some(e) = &error {
        eprintln!("{} error: {}", e.kind, e.message);
    }
    let manifest = Manifest {
        tool: "rqed",
        version: env!("CARGO_PKG_VERSION"),
        scenario: req.scenario,
        config_path: req.config_path.display().to_string(),
        config_sha256: sha256_hex(text.as_bytes()),
        seed: req.seed,
        threads: req.threads,
        started_at: started.to_rfc3339(),
        finished_at: chrono::Utc::now().to_rfc3339(),
        elapsed_seconds: clock.elapsed().as_secs_f64(),
        status,
        error,
        checks,
        timings,
        outputs,
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    if let Err(e) = fs::write(dir.join("manifest.json"), json + "\n") {
        eprintln!("cannot write manifest: {e}");
        return EXIT_FAILED;
    }
    println!("{status}: {} -> {}", req.scenario, dir.display());
    if status == "passed" {
        EXIT_OK
    } else {
        EXIT_FAILED
    }
}

fn parse_output_section(text: &str) -> OutputSection {
    text.parse::<toml::Table>()
        .ok()
        .and_then(|t| t.get("output").cloned())
        .and_then(|v| v.try_into().ok())
        .unwrap_or_default()
}
