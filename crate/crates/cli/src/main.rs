//! otkit: solvers, transport surgery, bound verification, and the full
//! deterministic check suite behind one binary.
//!
//! Exit codes: 0 = all verdicts pass, 1 = a mathematical verdict failed,
//! 2 = usage or IO error.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use otkit_core::bounds::{
    chain_condition, dyadic_thresholds, rho_estimate, verify_main_bound, verify_plan_bound,
    RhoProfile,
};
use otkit_core::convergence::{winf_verdict, MeasureSequence, SplitScenario};
use otkit_core::cost::CostFunction;
use otkit_core::instances::{generate_instance, GenParams, InstanceKind};
use otkit_core::json::{parse_measure, parse_plan, parse_space, render_measure, render_space};
use otkit_core::measure::DiscreteMeasure;
use otkit_core::monotone::check_cyclical_monotonicity;
use otkit_core::solver::{solve_cost, solve_winf};
use otkit_core::space::MetricSpace;
use otkit_core::suite::{run_selected, render_bundle, RunConfig, CHECK_NAMES};
use otkit_core::surgery::{surgery_transport, SurgeryParams};

#[derive(Parser)]
#[command(name = "otkit", version, about = "Optimal transport toolkit on finite metric spaces")]
struct Cli {
    /// Numerical tolerance for comparisons and validation.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    /// Seed for every randomized battery.
    #[arg(long, global = true, default_value_t = 2024)]
    seed: u64,
    /// Write the primary output here instead of stdout (for `generate`,
    /// a file prefix).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Output format where a command supports both.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, PartialEq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct InstanceFiles {
    /// Metric space JSON ({"n", "dist", "labels"?}).
    #[arg(long)]
    metric: PathBuf,
    /// Source measure JSON ({"weights", "total"}).
    #[arg(long)]
    mu: PathBuf,
}

#[derive(Subcommand)]
enum Cmd {
    /// Optimal transport cost (or W-infinity with --winf) between two measures.
    Solve {
        #[command(flatten)]
        files: InstanceFiles,
        /// Target measure JSON.
        #[arg(long)]
        nu: PathBuf,
        /// Cost spec: `p:<real>` or a cost-function JSON object.
        #[arg(long)]
        cost: Option<String>,
        /// Minimize the sup displacement instead of an integrated cost.
        #[arg(long)]
        winf: bool,
    },
    /// Re-route a coupling so every displacement obeys the surgery bounds.
    Surgery {
        #[command(flatten)]
        files: InstanceFiles,
        #[arg(long)]
        nu: PathBuf,
        /// Transport plan JSON ({"entries": [[i, j, mass], ...]}).
        #[arg(long)]
        plan: PathBuf,
        /// Net scale.
        #[arg(long)]
        r: f64,
        /// Support spread of the target.
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        /// Connectivity scale of the source support.
        #[arg(long)]
        delta: f64,
    },
    /// Verify a transport-cost lower bound on a concrete instance.
    VerifyBound {
        #[command(flatten)]
        files: InstanceFiles,
        #[arg(long)]
        nu: PathBuf,
        #[arg(long)]
        cost: String,
        /// Check cost >= m(r) h(r) / 2 at r = (Winf - delta) / 17.
        #[arg(long, conflicts_with = "plan")]
        main: bool,
        /// Check the optimal plan's sup displacement against the slack profile.
        #[arg(long)]
        plan: bool,
        /// Connectivity scale (required by --main).
        #[arg(long)]
        delta: Option<f64>,
        /// Slack profile JSON produced by `rho` (for --plan; estimated on
        /// the fly from --levels when absent).
        #[arg(long)]
        rho: Option<PathBuf>,
        /// Dyadic threshold depth for the on-the-fly estimate.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Per-pair strict chain inequality table for a support.
    ChainCheck {
        #[command(flatten)]
        files: InstanceFiles,
        #[arg(long)]
        cost: String,
        /// Verdict scale: pairs closer than this are not required to pass.
        #[arg(long)]
        scale: Option<f64>,
    },
    /// Estimate the chain-slack profile over dyadic thresholds.
    Rho {
        #[command(flatten)]
        files: InstanceFiles,
        #[arg(long)]
        cost: String,
        /// Explicit descending thresholds, comma-separated.
        #[arg(long, value_delimiter = ',')]
        thresholds: Option<Vec<f64>>,
        /// Dyadic depth when no explicit thresholds are given.
        #[arg(long, default_value_t = 3)]
        levels: usize,
    },
    /// Search a plan for finite cyclic reshuffles that lower its cost.
    MonotoneCheck {
        /// Metric space JSON (distances drive the cycle costs).
        #[arg(long)]
        metric: PathBuf,
        #[arg(long)]
        plan: PathBuf,
        #[arg(long)]
        cost: String,
        /// Longest cycle length to search.
        #[arg(long, default_value_t = 4)]
        k: usize,
    },
    /// Convergence diagnostics for a sequence of measures against a limit.
    Converge {
        /// Metric space JSON shared by every term.
        #[arg(long)]
        metric: PathBuf,
        /// Per-term measure files, in order.
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        seq: Vec<PathBuf>,
        /// Limit measure file.
        #[arg(long)]
        limit: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        /// Split file: {"parts": [[indices...], ...]}.
        #[arg(long)]
        split: Option<PathBuf>,
        /// Auto-split scale (delta-components of the limit support).
        #[arg(long)]
        scale: Option<f64>,
        /// Trend threshold for "tends to zero".
        #[arg(long, default_value_t = 1e-3)]
        threshold: f64,
    },
    /// Write a generated instance (space + uniform measure) to files.
    Generate {
        /// line | grid | snowflake | clusters | cantor
        #[arg(long)]
        kind: String,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        spacing: Option<f64>,
        #[arg(long)]
        ny: Option<usize>,
        #[arg(long)]
        s: Option<f64>,
        #[arg(long)]
        clusters: Option<usize>,
        #[arg(long)]
        per_cluster: Option<usize>,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        jitter: Option<f64>,
        #[arg(long)]
        level: Option<u32>,
    },
    /// Run the deterministic verification suite and print the bundle.
    Suite {
        /// Comma-separated check names; empty string runs nothing.
        #[arg(long)]
        only: Option<String>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn read(path: &PathBuf) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            if let Err(e) = writeln!(stdout, "{text}") {
                if e.kind() == std::io::ErrorKind::BrokenPipe {
                    return Ok(());
                }
                return Err(e.into());
            }
        }
    }
    Ok(())
}

fn parse_cost(spec: &str) -> Result<CostFunction> {
    if let Some(p) = spec.strip_prefix("p:") {
        let p: f64 = p.parse().context("cost exponent")?;
        return Ok(CostFunction::power(p)?);
    }
    let h: CostFunction = serde_json::from_str(spec).context("cost function JSON")?;
    h.validate()?;
    Ok(h)
}

fn load_space(files: &InstanceFiles, tol: f64) -> Result<(MetricSpace, DiscreteMeasure)> {
    let space = parse_space(&read(&files.metric)?, tol)
        .with_context(|| format!("parsing metric file {}", files.metric.display()))?;
    let mu = parse_measure(&read(&files.mu)?, tol)
        .with_context(|| format!("parsing measure file {}", files.mu.display()))?;
    if mu.len() != space.len() {
        bail!("measure has {} weights on a {}-point space", mu.len(), space.len());
    }
    Ok((space, mu))
}

fn want(format: Option<Format>, default: Format) -> Format {
    format.unwrap_or(default)
}

fn run(cli: Cli) -> Result<u8> {
    let tol = cli.tol;
    match cli.cmd {
        Cmd::Solve { files, nu, cost, winf } => {
            let (space, mu) = load_space(&files, tol)?;
            let nu = parse_measure(&read(&nu)?, tol).context("parsing target measure")?;
            let res = if winf {
                solve_winf(&space, &mu, &nu, tol)?
            } else {
                let spec = cost.as_deref().unwrap_or("p:1");
                let h = parse_cost(spec)?;
                solve_cost(&space, &mu, &nu, &h, tol)?
            };
            let plan_json: serde_json::Value =
                serde_json::from_str(&otkit_core::json::render_plan(&res.plan))?;
            let doc = json!({
                "value": res.value,
                "plan": plan_json,
                "diagnostics": res.diagnostics,
            });
            emit(&cli.out, &serde_json::to_string_pretty(&doc)?)?;
            Ok(0)
        }
        Cmd::Surgery { files, nu, plan, r, eps, delta } => {
            let (space, mu) = load_space(&files, tol)?;
            let nu = parse_measure(&read(&nu)?, tol).context("parsing target measure")?;
            let lambda = parse_plan(&read(&plan)?, space.len()).context("parsing plan")?;
            lambda
                .validate_coupling(&mu, &nu, tol * 4.0 + 1e-12)
                .context("plan is not a coupling of the given measures")?;
            match surgery_transport(&space, &mu, &nu, &lambda, SurgeryParams { r, eps, delta }, tol)
            {
                Ok(out) => {
                    emit(&cli.out, &serde_json::to_string_pretty(&out)?)?;
                    Ok(0)
                }
                Err(e) => {
                    // the construction's assumption failed on valid inputs:
                    // a mathematical no, not a usage error
                    let doc = json!({ "pass": false, "reason": e.to_string() });
                    emit(&cli.out, &serde_json::to_string_pretty(&doc)?)?;
                    Ok(1)
                }
            }
        }
        Cmd::VerifyBound { files, nu, cost, main, plan, delta, rho, levels } => {
            let (space, mu) = load_space(&files, tol)?;
            let nu = parse_measure(&read(&nu)?, tol).context("parsing target measure")?;
            let h = parse_cost(&cost)?;
            if main == plan {
                bail!("pass exactly one of --main / --plan");
            }
            if main {
                let delta = delta.context("--main requires --delta")?;
                let rep = verify_main_bound(&space, &mu, &nu, &h, delta, tol)?;
                let pass = rep.pass;
                emit(&cli.out, &serde_json::to_string_pretty(&rep)?)?;
                Ok(u8::from(!pass))
            } else {
                let profile = match rho {
                    Some(path) => serde_json::from_str::<RhoProfile>(&read(&path)?)
                        .context("parsing slack profile")?,
                    None => {
                        let support = mu.support(0.0);
                        let diam = space.diameter_of(&support);
                        match rho_estimate(&space, &mu, &h, &dyadic_thresholds(diam, levels), tol)
                        {
                            Ok(p) => p,
                            Err(e) => {
                                let doc = json!({ "pass": false, "reason": e.to_string() });
                                emit(&cli.out, &serde_json::to_string_pretty(&doc)?)?;
                                return Ok(1);
                            }
                        }
                    }
                };
                let rep = verify_plan_bound(&space, &mu, &nu, &h, &profile, tol)?;
                let pass = rep.pass;
                emit(&cli.out, &serde_json::to_string_pretty(&rep)?)?;
                Ok(u8::from(!pass))
            }
        }
        Cmd::ChainCheck { files, cost, scale } => {
            let (space, mu) = load_space(&files, tol)?;
            let h = parse_cost(&cost)?;
            let rep = chain_condition(&space, &mu, &h, tol);
            let pass = match scale {
                Some(s) => rep.holds_at_scale(s),
                None => rep.holds_globally,
            };
            match want(cli.format, Format::Csv) {
                Format::Csv => {
                    let mut table = String::from("x,y,d,h_d,best_chain,slack\n");
                    for p in &rep.pairs {
                        table.push_str(&format!(
                            "{},{},{},{},{},{}\n",
                            p.x,
                            p.y,
                            p.distance,
                            p.direct_cost,
                            p.best_chain,
                            p.direct_cost - p.best_chain
                        ));
                    }
                    emit(&cli.out, table.trim_end())?;
                }
                Format::Json => emit(&cli.out, &serde_json::to_string_pretty(&rep)?)?,
            }
            Ok(u8::from(!pass))
        }
        Cmd::Rho { files, cost, thresholds, levels } => {
            let (space, mu) = load_space(&files, tol)?;
            let h = parse_cost(&cost)?;
            let thresholds = match thresholds {
                Some(ts) => {
                    if ts.is_empty() || ts.windows(2).any(|w| w[1] >= w[0]) || ts[ts.len() - 1] <= 0.0
                    {
                        bail!("--thresholds must be positive and strictly descending");
                    }
                    ts
                }
                None => {
                    let support = mu.support(0.0);
                    dyadic_thresholds(space.diameter_of(&support), levels)
                }
            };
            match rho_estimate(&space, &mu, &h, &thresholds, tol) {
                Ok(profile) => {
                    emit(&cli.out, &serde_json::to_string_pretty(&profile)?)?;
                    Ok(0)
                }
                Err(e) => {
                    let doc = json!({ "pass": false, "reason": e.to_string() });
                    emit(&cli.out, &serde_json::to_string_pretty(&doc)?)?;
                    Ok(1)
                }
            }
        }
        Cmd::MonotoneCheck { metric, plan, cost, k } => {
            let space = parse_space(&read(&metric)?, tol).context("parsing metric file")?;
            let lambda = parse_plan(&read(&plan)?, space.len()).context("parsing plan")?;
            let h = parse_cost(&cost)?;
            let violation = check_cyclical_monotonicity(&space, &lambda, &h, k, cli.seed, tol)?;
            let monotone = violation.is_none();
            let doc = json!({ "monotone": monotone, "violation": violation });
            emit(&cli.out, &serde_json::to_string_pretty(&doc)?)?;
            Ok(u8::from(!monotone))
        }
        Cmd::Converge { metric, seq, limit, p, split, scale, threshold } => {
            let space = parse_space(&read(&metric)?, tol).context("parsing metric file")?;
            let terms: Vec<DiscreteMeasure> = seq
                .iter()
                .map(|f| parse_measure(&read(f)?, tol).context("parsing sequence term"))
                .collect::<Result<_>>()?;
            let limit = parse_measure(&read(&limit)?, tol).context("parsing limit measure")?;
            let sequence = MeasureSequence::new(space, terms, limit, tol)?;
            let scenario = match split {
                Some(path) => Some(parse_split(&read(&path)?, &sequence, tol)?),
                None => None,
            };
            let rep = winf_verdict(&sequence, p, scenario.as_ref(), scale, threshold, tol)?;
            match want(cli.format, Format::Json) {
                Format::Json => emit(&cli.out, &serde_json::to_string_pretty(&rep)?)?,
                Format::Csv => {
                    let mut table = String::from("term,wp,hausdorff,winf\n");
                    for i in 0..rep.winf.values.len() {
                        table.push_str(&format!(
                            "{},{},{},{}\n",
                            i + 1,
                            rep.wp.values[i],
                            rep.hausdorff.values[i],
                            rep.winf.values[i]
                        ));
                    }
                    emit(&cli.out, table.trim_end())?;
                }
            }
            Ok(u8::from(!rep.matches))
        }
        Cmd::Generate {
            kind,
            n,
            spacing,
            ny,
            s,
            clusters,
            per_cluster,
            gap,
            jitter,
            level,
        } => {
            let kind: InstanceKind = kind.parse()?;
            let mut params = GenParams::default();
            if let Some(v) = n {
                params.n = v;
            }
            if let Some(v) = spacing {
                params.spacing = v;
            }
            if let Some(v) = ny {
                params.ny = v;
            }
            if let Some(v) = s {
                params.s = v;
            }
            if let Some(v) = clusters {
                params.clusters = v;
            }
            if let Some(v) = per_cluster {
                params.per_cluster = v;
            }
            if let Some(v) = gap {
                params.gap = v;
            }
            if let Some(v) = jitter {
                params.jitter = v;
            }
            if let Some(v) = level {
                params.level = v;
            }
            let prefix = cli.out.clone().context("generate needs --out as a file prefix")?;
            let inst = generate_instance(kind, &params, cli.seed)?;
            let space_path = prefix.with_extension("space.json");
            let mu_path = prefix.with_extension("mu.json");
            fs::write(&space_path, render_space(&inst.space))
                .with_context(|| format!("writing {}", space_path.display()))?;
            fs::write(&mu_path, render_measure(&inst.mu))
                .with_context(|| format!("writing {}", mu_path.display()))?;
            println!("{}", space_path.display());
            println!("{}", mu_path.display());
            Ok(0)
        }
        Cmd::Suite { only } => {
            let cfg = RunConfig { tol, seed: cli.seed, ..RunConfig::default() };
            let selection: Vec<&str> = match &only {
                None => CHECK_NAMES.to_vec(),
                Some(names) => names.split(',').filter(|s| !s.is_empty()).collect(),
            };
            let bundle = run_selected(&cfg, &selection)?;
            let all_pass = bundle.all_pass;
            emit(&cli.out, &render_bundle(&bundle))?;
            Ok(u8::from(!all_pass))
        }
    }
}

/// {"parts": [[indices...], ...]}: restrict every term and the limit to the
/// given index sets.
fn parse_split(text: &str, seq: &MeasureSequence, tol: f64) -> Result<SplitScenario> {
    #[derive(serde::Deserialize)]
    struct SplitFile {
        parts: Vec<Vec<usize>>,
    }
    let file: SplitFile = serde_json::from_str(text).context("parsing split file")?;
    if file.parts.len() < 2 {
        bail!("a split needs at least two parts");
    }
    let restrict = |m: &DiscreteMeasure, part: &[usize]| -> Result<DiscreteMeasure> {
        let mut w = vec![0.0; m.len()];
        for &i in part {
            if i >= m.len() {
                bail!("split index {i} out of range");
            }
            w[i] = m.weight(i);
        }
        Ok(DiscreteMeasure::from_weights(w, tol)?)
    };
    let term_parts = seq
        .terms
        .iter()
        .map(|t| file.parts.iter().map(|p| restrict(t, p)).collect::<Result<Vec<_>>>())
        .collect::<Result<Vec<_>>>()?;
    let limit_parts = file
        .parts
        .iter()
        .map(|p| restrict(&seq.limit, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitScenario { term_parts, limit_parts })
}
