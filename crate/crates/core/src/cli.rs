//! Config-driven check orchestration with CSV/JSON reports and CI-friendly
//! exit codes.
//!
//! Configs are line-based `key = value` text with `#` comments; command-line
//! flags mirror the config keys and override them. Reports are written
//! atomically (temp file + rename) and are byte-identical for identical
//! config + seed: random draws are seeded, sweeps run in fixed order, and
//! floats are printed with a fixed format.
//!
//! Exit codes: 0 all checks pass, 1 at least one assertion failed (reports
//! written), 2 configuration error, 3 weight outside the integrable scope.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::carleson::{verify_bd_inequality, CarlesonTree, MeasureTable};
use crate::goodlambda::{
    chain_bound_check, containment_check, lambda_grid, layer_cake_check, measure_decay_check,
    norm_domination_estimate, synthetic_tree, GoodLambdaParams,
};
use crate::harness::{
    degree_stability, delta_norm_probe, deriv_bound_margin, DerivBoundConfig, OpKind, TestFamily,
};
use crate::quad::{NormSpec, PolarGrid};
use crate::series::{taylor_remainder_residual, HarmonicFunction, PowerSeries};
use crate::weights::{bb_constant, bb_quotient, boundary_disc_family, essential_constancy, WeightSpec};
use crate::{Error, Result};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG_ERROR: i32 = 2;
pub const EXIT_DIVERGENT_WEIGHT: i32 = 3;

/// Environment variable consulted for the output directory when neither the
/// config file nor the flags set one.
pub const OUTPUT_DIR_ENV: &str = "CONJLAB_OUT_DIR";

const ETA_RANGE: (f64, f64) = (0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    CheckWeight,
    VerifyLemmas,
    VerifyGoodLambda,
    EstimateConstants,
    FullReport,
}

impl Command {
    fn parse(text: &str) -> Option<Command> {
        match text {
            "check-weight" => Some(Command::CheckWeight),
            "verify-lemmas" => Some(Command::VerifyLemmas),
            "verify-goodlambda" => Some(Command::VerifyGoodLambda),
            "estimate-constants" => Some(Command::EstimateConstants),
            "full-report" => Some(Command::FullReport),
            _ => None,
        }
    }
}

/// One configuration problem, with the 1-based line it came from (line 0 for
/// missing keys and flag-level problems).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "line {}: {}", self.line, self.message)
    }
}

/// A fully validated run configuration.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub command: Command,
    pub p: f64,
    pub q: f64,
    pub weight: WeightSpec,
    pub tree_depth: u32,
    pub grid_radial: usize,
    pub grid_angular: usize,
    pub eta: Vec<f64>,
    pub seed: Option<u64>,
    pub max_degree: usize,
    pub family_count: usize,
    pub samples: usize,
    pub tree_table: Option<PathBuf>,
    pub output: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            command: Command::FullReport,
            p: 2.0,
            q: 2.0,
            weight: WeightSpec::Unit,
            tree_depth: 8,
            grid_radial: 128,
            grid_angular: 512,
            eta: vec![0.25],
            seed: None,
            max_degree: 12,
            family_count: 16,
            samples: 600,
            tree_table: None,
            output: None,
        }
    }
}

fn parse_weight(value: &str, line: usize, errors: &mut Vec<ConfigError>) -> Option<WeightSpec> {
    let mut fail = |message: String| {
        errors.push(ConfigError { line, message });
        None
    };
    let parts: Vec<&str> = value.split(':').collect();
    match parts.as_slice() {
        ["unit"] => Some(WeightSpec::Unit),
        ["power", alpha] => match alpha.parse() {
            Ok(a) => Some(WeightSpec::Power(a)),
            Err(_) => fail(format!("bad power exponent `{alpha}`")),
        },
        ["radial-table", path] => match std::fs::read_to_string(path) {
            Ok(text) => match WeightSpec::radial_table_from_str(&text) {
                Ok(w) => Some(w),
                Err(e) => fail(format!("radial table `{path}`: {e}")),
            },
            Err(e) => fail(format!("cannot read radial table `{path}`: {e}")),
        },
        ["angular", eps, k] | ["angular", eps, k, _] => {
            let base = if parts.len() == 4 {
                match parts[3].parse() {
                    Ok(a) => WeightSpec::Power(a),
                    Err(_) => return fail(format!("bad base exponent `{}`", parts[3])),
                }
            } else {
                WeightSpec::Unit
            };
            let eps: f64 = match eps.parse() {
                Ok(e) => e,
                Err(_) => return fail(format!("bad perturbation amplitude `{eps}`")),
            };
            let k: u32 = match k.parse() {
                Ok(k) => k,
                Err(_) => return fail(format!("bad perturbation frequency `{k}`")),
            };
            match WeightSpec::angular_perturbed(base, eps, k) {
                Ok(w) => Some(w),
                Err(e) => fail(format!("{e}")),
            }
        }
        _ => fail(format!(
            "unknown weight `{value}` (expected unit, power:A, radial-table:PATH, angular:EPS:K[:A])"
        )),
    }
}

/// Applies one `key = value` pair onto the config under construction.
fn apply_pair(
    config: &mut RunConfig,
    key: &str,
    value: &str,
    line: usize,
    errors: &mut Vec<ConfigError>,
    saw_command: &mut bool,
) {
    let mut bad = |message: String| errors.push(ConfigError { line, message });
    match key {
        "command" => match Command::parse(value) {
            Some(command) => {
                config.command = command;
                *saw_command = true;
            }
            None => bad(format!("unknown command `{value}`")),
        },
        "p" => match value.parse::<f64>() {
            Ok(p) if p > 0.0 && p.is_finite() => config.p = p,
            _ => bad("p must be > 0".into()),
        },
        "q" => match value.parse::<f64>() {
            Ok(q) if q > 1.0 && q.is_finite() => config.q = q,
            _ => bad("q must be > 1".into()),
        },
        "weight" => {
            if let Some(w) = parse_weight(value, line, errors) {
                config.weight = w;
            }
        }
        "tree_depth" => match value.parse::<u32>() {
            Ok(d) if (1..=14).contains(&d) => config.tree_depth = d,
            _ => bad("tree_depth must be in 1..=14".into()),
        },
        "grid_radial" => match value.parse::<usize>() {
            Ok(n) if (8..=16384).contains(&n) => config.grid_radial = n,
            _ => bad("grid_radial must be in 8..=16384".into()),
        },
        "grid_angular" => match value.parse::<usize>() {
            Ok(n) if (8..=16384).contains(&n) => config.grid_angular = n,
            _ => bad("grid_angular must be in 8..=16384".into()),
        },
        "eta" => {
            let mut etas = Vec::new();
            for item in value.split(',') {
                match item.trim().parse::<f64>() {
                    Ok(e) if e > ETA_RANGE.0 && e < ETA_RANGE.1 => etas.push(e),
                    _ => {
                        bad(format!("eta entry `{}` must lie in (0, 1)", item.trim()));
                        return;
                    }
                }
            }
            if etas.is_empty() {
                bad("eta list must be nonempty".into());
            } else {
                config.eta = etas;
            }
        }
        "seed" => match value.parse::<u64>() {
            Ok(s) => config.seed = Some(s),
            _ => bad("seed must be a nonnegative integer".into()),
        },
        "max_degree" => match value.parse::<usize>() {
            Ok(d) if (1..=64).contains(&d) => config.max_degree = d,
            _ => bad("max_degree must be in 1..=64".into()),
        },
        "family_count" => match value.parse::<usize>() {
            Ok(n) if (1..=200).contains(&n) => config.family_count = n,
            _ => bad("family_count must be in 1..=200".into()),
        },
        "samples" => match value.parse::<usize>() {
            Ok(s) if (16..=200_000).contains(&s) => config.samples = s,
            _ => bad("samples must be in 16..=200000".into()),
        },
        "tree_table" => config.tree_table = Some(PathBuf::from(value)),
        "output" => config.output = Some(PathBuf::from(value)),
        other => bad(format!("unknown key: {other}")),
    }
}

fn finalize(
    mut config: RunConfig,
    saw_command: bool,
    mut errors: Vec<ConfigError>,
) -> std::result::Result<RunConfig, Vec<ConfigError>> {
    if !saw_command {
        errors.push(ConfigError { line: 0, message: "missing required key: command".into() });
    }
    let needs_seed = match config.command {
        Command::CheckWeight => false,
        Command::VerifyGoodLambda => config.tree_table.is_none(),
        _ => true,
    };
    if saw_command && needs_seed && config.seed.is_none() {
        errors.push(ConfigError {
            line: 0,
            message: "missing required key: seed (randomized families must be seeded)".into(),
        });
    }
    if !errors.is_empty() {
        return Err(errors);
    }
    if config.output.is_none() {
        config.output = std::env::var_os(OUTPUT_DIR_ENV).map(PathBuf::from);
    }
    Ok(config)
}

fn apply_config_text(
    config: &mut RunConfig,
    text: &str,
    errors: &mut Vec<ConfigError>,
    saw_command: &mut bool,
) {
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let Some((key, value)) = stripped.split_once('=') else {
            errors.push(ConfigError {
                line,
                message: format!("expected `key = value`, got `{stripped}`"),
            });
            continue;
        };
        apply_pair(config, key.trim(), value.trim(), line, errors, saw_command);
    }
}

/// Parses the `key = value` config format; returns the validated config or
/// every problem found, each tagged with its line number.
pub fn parse_config(text: &str) -> std::result::Result<RunConfig, Vec<ConfigError>> {
    let mut config = RunConfig::default();
    let mut errors = Vec::new();
    let mut saw_command = false;
    apply_config_text(&mut config, text, &mut errors, &mut saw_command);
    finalize(config, saw_command, errors)
}

/// Parses command-line arguments: an optional leading command name, an
/// optional `--config FILE` (loaded first), and `--key=value` / `--key value`
/// flags mirroring the config keys (flags override the file).
pub fn parse_args(args: &[String]) -> std::result::Result<RunConfig, Vec<ConfigError>> {
    let mut pairs: Vec<(String, String)> = Vec::new();
    let mut config_text: Option<String> = None;
    let mut i = 0;
    let mut errors = Vec::new();
    while i < args.len() {
        let arg = &args[i];
        if let Some(flag) = arg.strip_prefix("--") {
            let (key, value) = if let Some((k, v)) = flag.split_once('=') {
                (k.to_string(), v.to_string())
            } else if i + 1 < args.len() {
                i += 1;
                (flag.to_string(), args[i].clone())
            } else {
                errors.push(ConfigError { line: 0, message: format!("flag --{flag} needs a value") });
                i += 1;
                continue;
            };
            if key == "config" {
                match std::fs::read_to_string(&value) {
                    Ok(text) => config_text = Some(text),
                    Err(e) => errors
                        .push(ConfigError { line: 0, message: format!("cannot read config `{value}`: {e}") }),
                }
            } else {
                pairs.push((key, value));
            }
        } else if Command::parse(arg).is_some() {
            pairs.push(("command".into(), arg.clone()));
        } else {
            errors.push(ConfigError { line: 0, message: format!("unexpected argument `{arg}`") });
        }
        i += 1;
    }
    if !errors.is_empty() {
        return Err(errors);
    }

    let mut config = RunConfig::default();
    let mut saw_command = false;
    let mut file_errors = Vec::new();
    if let Some(text) = &config_text {
        apply_config_text(&mut config, text, &mut file_errors, &mut saw_command);
    }
    for (key, value) in &pairs {
        apply_pair(&mut config, key, value, 0, &mut file_errors, &mut saw_command);
    }
    finalize(config, saw_command, file_errors)
}

/// One check-result row of the generic CSV schema
/// `check,node,lambda,alpha,gamma,lhs,rhs,margin`. Margin is headroom:
/// nonnegative means the check clears its threshold.
#[derive(Debug, Clone)]
pub struct CheckRow {
    pub check: String,
    pub node: String,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub gamma: Option<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
}

/// One row of the operator-constant CSV
/// `op_kind,p,weight_family,weight_param,eta,degree,ratio_max,drift`.
#[derive(Debug, Clone)]
pub struct BoundsRow {
    pub op_kind: String,
    pub p: f64,
    pub weight_family: String,
    pub weight_param: String,
    pub eta: f64,
    pub degree: usize,
    pub ratio_max: f64,
    pub drift: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckSummary {
    pub pass: bool,
    pub worst_margin: f64,
    pub params: BTreeMap<String, String>,
}

/// Collects rows and per-check summaries during a run.
#[derive(Debug, Default)]
pub struct ReportBuilder {
    pub checks: Vec<CheckRow>,
    pub goodlambda: Vec<CheckRow>,
    pub bounds: Vec<BoundsRow>,
    pub summary: BTreeMap<String, CheckSummary>,
}

// `+ 0.0` turns negative zero into plain zero before printing.
fn fmt_field(value: f64) -> String {
    format!("{:.12e}", value + 0.0)
}

fn fmt_opt(value: Option<f64>) -> String {
    value.map(fmt_field).unwrap_or_default()
}

impl ReportBuilder {
    /// Records a summary entry; `worst_margin ≥ 0` means pass.
    fn summarize(&mut self, name: &str, worst_margin: f64, params: BTreeMap<String, String>) {
        let entry = CheckSummary { pass: worst_margin >= 0.0, worst_margin, params };
        self.summary.insert(name.to_string(), entry);
    }

    fn any_failure(&self) -> bool {
        self.summary.values().any(|s| !s.pass)
    }

    fn checks_csv(rows: &[CheckRow]) -> String {
        let mut out = String::from("check,node,lambda,alpha,gamma,lhs,rhs,margin\n");
        for r in rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.check,
                r.node,
                fmt_opt(r.lambda),
                fmt_opt(r.alpha),
                fmt_opt(r.gamma),
                fmt_field(r.lhs),
                fmt_field(r.rhs),
                fmt_field(r.margin)
            )
            .unwrap();
        }
        out
    }

    fn bounds_csv(&self) -> String {
        let mut out = String::from("op_kind,p,weight_family,weight_param,eta,degree,ratio_max,drift\n");
        for r in &self.bounds {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                r.op_kind,
                r.p,
                r.weight_family,
                r.weight_param,
                r.eta,
                r.degree,
                fmt_field(r.ratio_max),
                fmt_field(r.drift)
            )
            .unwrap();
        }
        out
    }

    /// Writes all non-empty reports atomically and returns the exit code.
    fn finish(&self, out_dir: &Path) -> std::io::Result<i32> {
        std::fs::create_dir_all(out_dir)?;
        if !self.checks.is_empty() {
            write_atomic(&out_dir.join("checks.csv"), &Self::checks_csv(&self.checks))?;
        }
        if !self.goodlambda.is_empty() {
            write_atomic(&out_dir.join("goodlambda.csv"), &Self::checks_csv(&self.goodlambda))?;
        }
        if !self.bounds.is_empty() {
            write_atomic(&out_dir.join("bounds.csv"), &self.bounds_csv())?;
        }
        let json = serde_json::to_string_pretty(&self.summary).expect("summary serializes");
        write_atomic(&out_dir.join("summary.json"), &json)?;
        Ok(if self.any_failure() { EXIT_CHECK_FAILED } else { EXIT_OK })
    }
}

fn write_atomic(path: &Path, content: &str) -> std::io::Result<()> {
    let tmp = path.with_extension("tmp");
    std::fs::write(&tmp, content)?;
    std::fs::rename(&tmp, path)
}

fn weight_params(config: &RunConfig) -> BTreeMap<String, String> {
    let mut params = BTreeMap::new();
    params.insert("weight".into(), config.weight.family_name().to_string());
    let param = config.weight.param_string();
    if !param.is_empty() {
        params.insert("weight_param".into(), param);
    }
    params.insert("p".into(), format!("{}", config.p));
    params.insert("q".into(), format!("{}", config.q));
    if let Some(seed) = config.seed {
        params.insert("seed".into(), format!("{seed}"));
    }
    params
}

/// Runs the configured command, writes reports, and returns the exit code.
pub fn run(config: &RunConfig) -> i32 {
    let out_dir = config.output.clone().unwrap_or_else(|| PathBuf::from("reports"));
    let mut builder = ReportBuilder::default();

    let sections: Result<()> = (|| {
        match config.command {
            Command::CheckWeight => run_weight_section(config, &mut builder)?,
            Command::VerifyLemmas => run_lemma_section(config, &mut builder)?,
            Command::VerifyGoodLambda => run_goodlambda_section(config, &mut builder)?,
            Command::EstimateConstants => run_estimate_section(config, &mut builder)?,
            Command::FullReport => {
                run_weight_section(config, &mut builder)?;
                run_lemma_section(config, &mut builder)?;
                run_goodlambda_section(config, &mut builder)?;
                run_estimate_section(config, &mut builder)?;
            }
        }
        Ok(())
    })();

    match sections {
        Ok(()) => match builder.finish(&out_dir) {
            Ok(code) => code,
            Err(e) => {
                eprintln!("failed to write reports to {}: {e}", out_dir.display());
                EXIT_CONFIG_ERROR
            }
        },
        Err(Error::DivergentWeight(message)) => {
            eprintln!("divergent weight: {message}");
            builder.summarize("weight_scope", f64::NEG_INFINITY, weight_params(config));
            let _ = builder.finish(&out_dir);
            EXIT_DIVERGENT_WEIGHT
        }
        Err(e) => {
            eprintln!("run failed: {e}");
            let _ = builder.finish(&out_dir);
            EXIT_CONFIG_ERROR
        }
    }
}

fn run_weight_section(config: &RunConfig, builder: &mut ReportBuilder) -> Result<()> {
    let depth = 6.min(config.tree_depth);
    let resolution = 12;
    let family = boundary_disc_family(depth);
    let mut worst = f64::INFINITY;
    let mut constant: f64 = 1.0;
    for (i, disc) in family.iter().enumerate() {
        let quotient = bb_quotient(&config.weight, config.q, disc, resolution)?;
        constant = constant.max(quotient);
        let margin = quotient - 1.0 + 1e-9;
        worst = worst.min(margin);
        builder.checks.push(CheckRow {
            check: "bb_quotient".into(),
            node: format!("disc{i}"),
            lambda: None,
            alpha: None,
            gamma: None,
            lhs: quotient,
            rhs: 1.0,
            margin,
        });
    }
    builder.summarize("bb_quotient_jensen", worst, weight_params(config));

    let mut params = weight_params(config);
    params.insert("family_depth".into(), format!("{depth}"));
    params.insert("bb_constant".into(), format!("{constant:.12e}"));
    builder.checks.push(CheckRow {
        check: "bb_constant".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: constant,
        rhs: 1.0,
        margin: constant - 1.0 + 1e-9,
    });
    builder.summarize("bb_constant", constant - 1.0 + 1e-9, params);

    let ratio = essential_constancy(&config.weight, depth);
    let mut params = weight_params(config);
    params.insert("sup_inf_ratio".into(), format!("{ratio:.12e}"));
    builder.checks.push(CheckRow {
        check: "essential_constancy".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: ratio,
        rhs: f64::INFINITY,
        margin: if ratio.is_finite() && ratio >= 1.0 { 0.0 } else { -1.0 },
    });
    builder.summarize(
        "essential_constancy",
        if ratio.is_finite() && ratio >= 1.0 { 0.0 } else { -1.0 },
        params,
    );
    Ok(())
}

fn run_lemma_section(config: &RunConfig, builder: &mut ReportBuilder) -> Result<()> {
    let seed = config.seed.expect("validated");
    let grid = PolarGrid::new(config.grid_radial, config.grid_angular);

    // Taylor identity sweep: the 1e-10 threshold is calibrated for
    // degree ≤ 12 with a 64-point rule on |z|, |w| ≤ 0.9.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7461_796c);
    let degree = config.max_degree.min(12);
    let family = TestFamily::RandomPoly { max_degree: degree, count: config.family_count, seed };
    let mut worst_residual: f64 = 0.0;
    for f in family.members() {
        for _ in 0..8 {
            let z = Complex64::from_polar(
                rng.gen_range(0.0..0.9),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            let w = Complex64::from_polar(
                rng.gen_range(0.0..0.9),
                rng.gen_range(0.0..std::f64::consts::TAU),
            );
            worst_residual = worst_residual.max(taylor_remainder_residual(&f, z, w, 64)?);
        }
    }
    builder.checks.push(CheckRow {
        check: "taylor_identity".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: worst_residual,
        rhs: 1e-10,
        margin: 1e-10 - worst_residual,
    });
    builder.summarize("taylor_identity", 1e-10 - worst_residual, weight_params(config));

    // Pointwise derivative bound sweep over the configured η list.
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6c65_6d32);
    let members =
        TestFamily::RandomPoly { max_degree: config.max_degree.min(10), count: config.family_count, seed }
            .members();
    let mut min_margin = f64::INFINITY;
    for f in &members {
        for &eta in &config.eta {
            for _ in 0..8 {
                let a = Complex64::from_polar(
                    rng.gen_range(0.0..0.5),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                );
                let sigma = rng.gen_range(0.05..0.9 * (1.0 - a.norm()));
                let h = Complex64::from_polar(eta * sigma, rng.gen_range(0.0..std::f64::consts::TAU));
                let z = a
                    + Complex64::from_polar(
                        rng.gen_range(0.0..0.999) * h.norm(),
                        rng.gen_range(0.0..std::f64::consts::TAU),
                    );
                let cfg = DerivBoundConfig::new(a, sigma, eta, z, h)?;
                min_margin = min_margin.min(deriv_bound_margin(f, &cfg, 4096));
            }
        }
    }
    builder.checks.push(CheckRow {
        check: "deriv_bound_margin".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: min_margin,
        rhs: -1e-9,
        margin: min_margin + 1e-9,
    });
    builder.summarize("deriv_bound_margin", min_margin + 1e-9, weight_params(config));

    // Delta-norm probe at the configured p.
    let probe = delta_norm_probe(config.p, &members, &grid)?;
    let cap = 1.0f64.max(2.0f64.powf(1.0 / config.p - 1.0));
    let triangle_margin = cap + 1e-9 - probe.triangle_constant;
    let scale_margin = 1e-9
        - (probe.scale_exp_low - 1.0).abs().max((probe.scale_exp_high - 1.0).abs());
    builder.checks.push(CheckRow {
        check: "delta_norm_triangle".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: probe.triangle_constant,
        rhs: cap,
        margin: triangle_margin,
    });
    builder.checks.push(CheckRow {
        check: "delta_norm_scaling".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: probe.scale_exp_low,
        rhs: probe.scale_exp_high,
        margin: scale_margin,
    });
    builder.summarize("delta_norm", triangle_margin.min(scale_margin), weight_params(config));
    Ok(())
}

fn load_or_build_trees(config: &RunConfig) -> Result<Vec<(String, CarlesonTree, f64)>> {
    // (label, tree, bd slack): sampled sups get a small slack, exact tables
    // and synthetic trees get none.
    if let Some(path) = &config.tree_table {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Domain(format!("cannot read tree table: {e}")))?;
        return Ok(vec![("table".into(), CarlesonTree::load(&text)?, 0.0)]);
    }
    let seed = config.seed.expect("validated");
    let mut trees = Vec::new();
    trees.push((
        "identity".into(),
        CarlesonTree::from_function(&PowerSeries::identity(), config.tree_depth, config.samples)?,
        1e-12,
    ));
    let family =
        TestFamily::RandomPoly { max_degree: config.max_degree, count: config.family_count, seed };
    for (i, f) in family.members_recentered().into_iter().enumerate() {
        trees.push((
            format!("poly{i}"),
            CarlesonTree::from_function(&f, config.tree_depth, config.samples)?,
            1e-6,
        ));
    }
    for i in 0..config.family_count {
        trees.push((
            format!("synthetic{i}"),
            synthetic_tree(config.tree_depth, seed.wrapping_add(i as u64)),
            0.0,
        ));
    }
    Ok(trees)
}

fn run_goodlambda_section(config: &RunConfig, builder: &mut ReportBuilder) -> Result<()> {
    // Divergent weights make μ meaningless; the scope check aborts first.
    bb_constant(&config.weight, config.q, 3, 8)?;

    let table = MeasureTable::new(&config.weight, config.tree_depth)?;
    let tau = table.tau();
    let trees = load_or_build_trees(config)?;

    let mut params = weight_params(config);
    params.insert("tau".into(), format!("{tau:.12e}"));
    params.insert("tree_depth".into(), format!("{}", config.tree_depth));
    builder.goodlambda.push(CheckRow {
        check: "tau_ratio".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: tau,
        rhs: 0.0,
        margin: if tau > 0.0 && tau < 1.0 { tau } else { -1.0 },
    });
    builder.summarize("tau_ratio", if tau > 0.0 && tau < 1.0 { tau } else { -1.0 }, params);

    let mut bd_worst = f64::INFINITY;
    let mut chain_worst = f64::INFINITY;
    let mut containment_worst = f64::INFINITY;
    let mut decay_worst = f64::INFINITY;
    let mut cake_worst = f64::INFINITY;
    let mut domination_worst = f64::INFINITY;

    for (label, tree, slack) in &trees {
        let bd = verify_bd_inequality(tree, *slack);
        for (id, violation) in &bd.violations {
            builder.goodlambda.push(CheckRow {
                check: "bd_inequality".into(),
                node: format!("{label}:{}:{}", id.level(), id.index()),
                lambda: None,
                alpha: None,
                gamma: None,
                lhs: *violation,
                rhs: *slack,
                margin: slack - violation,
            });
        }
        let bd_margin = slack - bd.max_violation;
        bd_worst = bd_worst.min(bd_margin);
        builder.goodlambda.push(CheckRow {
            check: "bd_inequality".into(),
            node: label.clone(),
            lambda: None,
            alpha: None,
            gamma: None,
            lhs: bd.max_violation,
            rhs: *slack,
            margin: bd_margin,
        });

        let chain = chain_bound_check(tree, tree.depth());
        chain_worst = chain_worst.min(-chain.max_violation);
        builder.goodlambda.push(CheckRow {
            check: "chain_bound".into(),
            node: label.clone(),
            lambda: None,
            alpha: None,
            gamma: None,
            lhs: chain.max_violation,
            rhs: 0.0,
            margin: -chain.max_violation,
        });

        for &alpha in &[1.5, 2.0, 4.0] {
            for &gamma in &[0.1, 0.25, 0.5] {
                for lambda in lambda_grid(tree) {
                    let gl = GoodLambdaParams::new(alpha, gamma, lambda, tau);
                    let containment = containment_check(tree, &gl);
                    for (id, hit) in &containment.violations {
                        builder.goodlambda.push(CheckRow {
                            check: "containment".into(),
                            node: format!("{label}:{}:{} (hit {hit})", id.level(), id.index()),
                            lambda: Some(lambda),
                            alpha: Some(alpha),
                            gamma: Some(gamma),
                            lhs: 0.0,
                            rhs: 0.0,
                            margin: -1.0,
                        });
                        containment_worst = containment_worst.min(-1.0);
                    }
                    if let Some(margin) = containment.min_margin {
                        containment_worst = containment_worst.min(margin as f64);
                    }
                    let decay = measure_decay_check(tree, &gl, &table);
                    if let Some(ratio) = decay.worst_ratio {
                        let margin = 1.01 - ratio;
                        decay_worst = decay_worst.min(margin);
                        if margin < 0.0 {
                            builder.goodlambda.push(CheckRow {
                                check: "measure_decay".into(),
                                node: label.clone(),
                                lambda: Some(lambda),
                                alpha: Some(alpha),
                                gamma: Some(gamma),
                                lhs: ratio,
                                rhs: 1.01,
                                margin,
                            });
                        }
                    }
                }
            }
        }

        let cake = layer_cake_check(tree, config.p, &table);
        let cake_margin = (cake.rhs_integral - tau * cake.lhs_integral)
            .min(-cake.worst_lambda_margin)
            + 1e-12 * cake.rhs_integral.max(1.0);
        cake_worst = cake_worst.min(cake_margin);
        builder.goodlambda.push(CheckRow {
            check: "layer_cake".into(),
            node: label.clone(),
            lambda: None,
            alpha: None,
            gamma: None,
            lhs: tau * cake.lhs_integral,
            rhs: cake.rhs_integral,
            margin: cake_margin,
        });

        match norm_domination_estimate(tree, config.p, &table) {
            Ok(est) => {
                let ok = est.k_cumulative.is_finite() && est.k_raw.is_finite();
                domination_worst = domination_worst.min(if ok { 0.0 } else { -1.0 });
                builder.goodlambda.push(CheckRow {
                    check: "norm_domination".into(),
                    node: label.clone(),
                    lambda: None,
                    alpha: None,
                    gamma: None,
                    lhs: est.k_cumulative,
                    rhs: est.k_raw,
                    margin: if ok { 0.0 } else { -1.0 },
                });
            }
            Err(_) => {
                domination_worst = domination_worst.min(-1.0);
                builder.goodlambda.push(CheckRow {
                    check: "norm_domination".into(),
                    node: label.clone(),
                    lambda: None,
                    alpha: None,
                    gamma: None,
                    lhs: f64::NAN,
                    rhs: f64::NAN,
                    margin: -1.0,
                });
            }
        }
    }

    builder.summarize("bd_inequality", bd_worst, weight_params(config));
    builder.summarize("chain_bound", chain_worst, weight_params(config));
    builder.summarize("containment", containment_worst, weight_params(config));
    builder.summarize("measure_decay", decay_worst, weight_params(config));
    builder.summarize("layer_cake", cake_worst, weight_params(config));
    builder.summarize("norm_domination", domination_worst, weight_params(config));
    Ok(())
}

fn run_estimate_section(config: &RunConfig, builder: &mut ReportBuilder) -> Result<()> {
    let seed = config.seed.expect("validated");
    let grid = PolarGrid::new(config.grid_radial, config.grid_angular);
    let spec = NormSpec::new(config.p, config.weight.clone());
    let family =
        TestFamily::RandomPoly { max_degree: config.max_degree, count: config.family_count, seed };
    let degrees = [config.max_degree, config.max_degree * 2];

    let mut stability_worst = f64::INFINITY;
    for op in OpKind::ALL {
        for &eta in &config.eta {
            let ratios = degree_stability(op, &family, &degrees, &spec, &grid, eta)?;
            let drift = (ratios[1] - ratios[0]).abs() / ratios[0].max(1e-30);
            let margin = if ratios.iter().all(|r| r.is_finite()) { 0.2 - drift } else { -1.0 };
            stability_worst = stability_worst.min(margin);
            for (ratio, &degree) in ratios.iter().zip(&degrees) {
                builder.bounds.push(BoundsRow {
                    op_kind: op.as_str().into(),
                    p: config.p,
                    weight_family: config.weight.family_name().into(),
                    weight_param: config.weight.param_string(),
                    eta,
                    degree,
                    ratio_max: *ratio,
                    drift,
                });
            }
        }
    }
    builder.summarize("operator_stability", stability_worst, weight_params(config));

    // Two-step route vs. direct conjugation constant.
    let members = family.members();
    let eta = config.eta[0];
    let pipeline = crate::harness::theorem_pipeline_report(
        &members, &spec, &grid, eta, config.q, 3, 8,
    )?;
    let margin = pipeline.product() * (1.0 + 1e-9) - pipeline.c_direct;
    builder.checks.push(CheckRow {
        check: "pipeline_consistency".into(),
        node: String::new(),
        lambda: None,
        alpha: None,
        gamma: None,
        lhs: pipeline.c_direct,
        rhs: pipeline.product(),
        margin,
    });
    let mut params = weight_params(config);
    params.insert("bb_constant".into(), format!("{:.12e}", pipeline.bb_constant));
    params.insert("c_u_to_deriv".into(), format!("{:.12e}", pipeline.c_u_to_deriv));
    params.insert("c_deriv_to_f".into(), format!("{:.12e}", pipeline.c_deriv_to_f));
    params.insert("c_direct".into(), format!("{:.12e}", pipeline.c_direct));
    builder.summarize("pipeline_consistency", margin, params);

    // Conjugation isometry oracle applies to the unweighted p = 2 norm.
    if config.p == 2.0 && config.weight == WeightSpec::Unit {
        let mut worst = f64::INFINITY;
        for f in &members {
            let u = HarmonicFunction::from_completion(f.clone());
            let u0 = u.eval(Complex64::new(0.0, 0.0));
            let v_norm =
                crate::quad::weighted_p_norm(|z| u.conjugate_value(z), &spec, &grid)?;
            let u_norm = crate::quad::weighted_p_norm(|z| u.eval(z) - u0, &spec, &grid)?;
            if u_norm <= 1e-14 {
                continue;
            }
            worst = worst.min(1e-6 - (v_norm / u_norm - 1.0).abs());
        }
        builder.checks.push(CheckRow {
            check: "conjugation_isometry".into(),
            node: String::new(),
            lambda: None,
            alpha: None,
            gamma: None,
            lhs: 1.0,
            rhs: 1.0,
            margin: worst,
        });
        builder.summarize("conjugation_isometry", worst, weight_params(config));
    }
    Ok(())
}

/// Convenience for tests and `main`: parse argv-style arguments and run.
pub fn run_from_args(args: &[String]) -> i32 {
    match parse_args(args) {
        Ok(config) => run(&config),
        Err(errors) => {
            for e in &errors {
                eprintln!("config error: {e}");
            }
            EXIT_CONFIG_ERROR
        }
    }
}
