//! Experiment runner: each subcommand writes one table as CSV or JSON,
//! headed by the library version and the full configuration.

mod output;

use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use lpcomp::cocycles::{random_elements, schoenberg_psd_check, zwrz_assembly, zwrz_lower_bound_streamed, Cocycle};
use lpcomp::embeddings::{bourgain_row, check_cp, lacunar_modulus, CompressionModulus, TreeEmbedding};
use lpcomp::isoperimetry::{
    folner_from_pair, lamplighter_folner_pair, pair_test_function, profile_growth_certificate,
    profile_heuristic_max, HeuristicOptions, ProfileCertificate,
};
use lpcomp::walks::{return_probabilities, simulate_return_frequency, walk_profile_certificate, WalkMeasure};
use lpcomp::{Ball, Error, Family, MarkedGroup};
use output::{emit, num, render, Format, Table};

#[derive(Parser, Debug)]
#[command(name = "lpcomp", version, about = "Finite-scale certificates for compression and isoperimetry on groups")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Worker threads; results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Subcommand, Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
enum Command {
    /// Ball dump. Columns: index, length, element.
    Ball(BallArgs),
    /// Profile certificates for n = 1..N. Columns: n, t_support, ratio, method.
    Profile(ProfileArgs),
    /// Følner pairs of C_m wr Z for n = 1..N.
    /// Columns: n, alpha, cond1, sizeRatio, C3, maxLength, boundaryRatio.
    Folner(FolnerArgs),
    /// Tree embedding compression. Columns: t, rho, f, ratio.
    TreeEmbed(TreeArgs),
    /// Integral obstruction over a range of depths. Columns: J, integral, minRatio, bound.
    BourgainCheck(BourgainArgs),
    /// Condition (C_p) classifier. Columns: f, p, verdict, partialIntegral, tailEstimate.
    CpCheck(CpArgs),
    /// Z wr Z lower bound. Columns: t, infMax, certifiedC.
    Zwrz(ZwrzArgs),
    /// Dyadic cocycle assembly on Z wr Z. Columns: k, guaranteed, measured.
    Assemble(AssembleArgs),
    /// Return probabilities and walk certificate.
    /// Columns: n, returnProb, psi, selectedQ, certRatio[, simReturn].
    Walk(WalkArgs),
    /// Gaussian kernel of the lamp cocycle. Columns: t, minEigenvalue, norm, psd.
    Schoenberg(SchoenbergArgs),
    /// Runs a JSON experiment configuration.
    #[serde(skip)]
    Run(RunArgs),
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BallArgs {
    #[arg(long)]
    group: String,
    #[arg(long)]
    n: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProfileArgs {
    #[arg(long)]
    group: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// pair, growth or heuristic.
    #[arg(long, default_value = "pair")]
    method: String,
    #[arg(long)]
    n: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct FolnerArgs {
    #[arg(long, default_value = "C2wrZ")]
    group: String,
    #[arg(long)]
    n: u32,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TreeArgs {
    #[arg(long = "J")]
    #[serde(rename = "J")]
    j: u32,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value = "pow:0.7")]
    f: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BourgainArgs {
    /// Depth range `a..b` or a single depth.
    #[arg(long = "J")]
    #[serde(rename = "J")]
    j: String,
    #[arg(long, default_value_t = 2.0)]
    q: f64,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    #[arg(long, default_value = "pow:0.7")]
    f: String,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CpArgs {
    #[arg(long)]
    f: String,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Classify the lacunar step modulus built from f instead.
    #[arg(long)]
    #[serde(default)]
    lacunar: bool,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ZwrzArgs {
    #[arg(long)]
    radius: u32,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AssembleArgs {
    #[arg(long, default_value = "pow:0.6")]
    f: String,
    #[arg(long = "K", default_value_t = 3)]
    #[serde(rename = "K")]
    k: usize,
    #[arg(long, default_value_t = 16)]
    radius: u32,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct WalkArgs {
    #[arg(long)]
    group: String,
    #[arg(long)]
    n: u32,
    /// Monte-Carlo trials per time step (not certified).
    #[arg(long)]
    simulate: Option<u64>,
}

#[derive(Args, Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SchoenbergArgs {
    #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 4.0, 16.0])]
    t: Vec<f64>,
    #[arg(long, default_value_t = 50)]
    sample: usize,
    #[arg(long, default_value_t = 12)]
    max_len: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
}

#[derive(Args, Debug, Clone)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Everything that determines an output file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    experiment: Command,
    #[serde(default)]
    seed: u64,
    #[serde(default)]
    format: Format,
}

fn wreath_m(group: &MarkedGroup) -> Result<u32> {
    match group.family() {
        Family::WreathFinite(m) => Ok(m),
        _ => Err(Error::usage(format!("{} is not of the form CmwrZ", group.name())).into()),
    }
}

fn parse_range(s: &str) -> Result<(u32, u32)> {
    let bad = || Error::usage(format!("bad range {s:?}, expected a..b or a single integer"));
    let (a, b) = match s.split_once("..") {
        Some((a, b)) => (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?),
        None => {
            let v = s.trim().parse().map_err(|_| bad())?;
            (v, v)
        }
    };
    if a > b {
        return Err(bad().into());
    }
    Ok((a, b))
}

fn cert_row(t: &mut Table, n: u32, cert: &ProfileCertificate, group: &MarkedGroup) -> Result<()> {
    let sound = cert.is_sound(group, 1e-10)?;
    t.check(sound, "certificate soundness", || format!("n = {n}: witness does not reproduce {}", cert.ratio));
    t.push(vec![json!(n), json!(cert.t), num(cert.ratio), json!(cert.method)]);
    Ok(())
}

fn run(config: &ExperimentConfig) -> Result<Table> {
    Ok(match &config.experiment {
        Command::Ball(a) => {
            let g = MarkedGroup::parse(&a.group)?;
            let ball = Ball::enumerate(&g, a.n)?;
            let mut t = Table::new(&["index", "length", "element"]);
            for (i, x) in ball.elements().enumerate() {
                t.push(vec![json!(i), json!(ball.length(i)), json!(x.to_string())]);
            }
            t
        }
        Command::Profile(a) => {
            let g = MarkedGroup::parse(&a.group)?;
            let mut t = Table::new(&["n", "t_support", "ratio", "method"]);
            match a.method.as_str() {
                "pair" => {
                    let m = wreath_m(&g)?;
                    for n in 1..=a.n {
                        let cert = pair_test_function(&lamplighter_folner_pair(m, n)?, a.p)?;
                        cert_row(&mut t, n, &cert, &g)?;
                    }
                }
                "growth" => {
                    let ball = Arc::new(Ball::enumerate(&g, a.n)?);
                    for n in 1..=a.n {
                        let gc = profile_growth_certificate(ball.clone(), n, a.p)?;
                        cert_row(&mut t, n, &gc.certificate, &g)?;
                    }
                }
                "heuristic" => {
                    let ball = Arc::new(Ball::enumerate(&g, a.n + 1)?);
                    let opts = HeuristicOptions { seed: config.seed, ..Default::default() };
                    for n in 1..=a.n {
                        let cert = profile_heuristic_max(ball.clone(), n, a.p, opts)?;
                        cert_row(&mut t, n, &cert, &g)?;
                    }
                }
                other => bail!(Error::usage(format!("unknown method {other:?}; use pair, growth or heuristic"))),
            }
            t
        }
        Command::Folner(a) => {
            let g = MarkedGroup::parse(&a.group)?;
            let m = wreath_m(&g)?;
            let control = Ball::enumerate(&g, a.n)?;
            let mut t =
                Table::new(&["n", "alpha", "cond1", "sizeRatio", "C3", "maxLength", "boundaryRatio"]);
            for n in 1..=a.n {
                let pair = lamplighter_folner_pair(m, n)?;
                let r = pair.verify(Some(&control))?;
                let set = folner_from_pair(&pair)?;
                t.check(r.cond1, "S^alpha H inside H'", || format!("n = {n}"));
                t.push(vec![
                    json!(n),
                    json!(pair.alpha),
                    json!(r.cond1),
                    num(r.c2),
                    num(r.c3),
                    json!(r.max_length),
                    num(set.boundary_ratio),
                ]);
            }
            t
        }
        Command::TreeEmbed(a) => {
            let f = CompressionModulus::parse(&a.f)?;
            let emb = TreeEmbedding::binary_from_modulus(a.j, &f, a.p)?;
            let tc = emb.compression_curve()?;
            let mut t = Table::new(&["t", "rho", "f", "ratio"]);
            t.note(format!("lipschitz = {}", tc.lipschitz));
            t.note(format!("min distance ratio = {}", tc.min_ratio));
            for &(s, rho) in &tc.curve.samples {
                let fv = f.eval(s as f64);
                t.push(vec![json!(s), num(rho), num(fv), num(rho / fv)]);
            }
            t
        }
        Command::BourgainCheck(a) => {
            let f = CompressionModulus::parse(&a.f)?;
            let (lo, hi) = parse_range(&a.j)?;
            let mut t = Table::new(&["J", "integral", "minRatio", "bound"]);
            for j in lo..=hi {
                let r = bourgain_row(&f, a.p, a.q, j)?;
                t.check(r.min_ratio <= r.bound * (1.0 + 1e-12), "integral corollary", || {
                    format!("J = {j}: min ratio {} above {}", r.min_ratio, r.bound)
                });
                t.push(vec![json!(j), num(r.integral), num(r.min_ratio), num(r.bound)]);
            }
            t
        }
        Command::CpCheck(a) => {
            let h = CompressionModulus::parse(&a.f)?;
            let mut t = Table::new(&["f", "p", "verdict", "partialIntegral", "tailEstimate"]);
            let f = if a.lacunar {
                let lm = lacunar_modulus(&h, a.p)?;
                t.note(format!("breakpoints = {:?}", lm.breakpoints));
                lm.f
            } else {
                h
            };
            let r = check_cp(&f, a.p)?;
            t.push(vec![
                json!(f.to_string()),
                num(a.p),
                json!(r.verdict.to_string()),
                num(r.partial_integral),
                num(r.tail_estimate),
            ]);
            t
        }
        Command::Zwrz(a) => {
            let r = zwrz_lower_bound_streamed(a.radius, a.p)?;
            let mut t = Table::new(&["t", "infMax", "certifiedC"]);
            t.note(format!("elements = {}", r.elements));
            t.note(format!("fitted exponent = {} (target {})", r.fitted_exponent, r.exponent()));
            t.note(format!(
                "tour-case failures = {}, lamp-case failures = {}, Holder failures = {}",
                r.tour_case_failures, r.lamp_case_failures, r.holder_failures
            ));
            t.check(r.holder_failures == 0, "Holder inequality", || format!("{} violations", r.holder_failures));
            for &(s, v) in &r.per_sphere_inf {
                t.push(vec![json!(s), num(v), num(r.c)]);
            }
            t
        }
        Command::Assemble(a) => {
            let f = CompressionModulus::parse(&a.f)?;
            let z = zwrz_assembly(&f, a.p, a.k, a.radius)?;
            let mut t = Table::new(&["k", "guaranteed", "measured"]);
            t.note(format!("weights = {:?}", z.assembly.weights));
            t.note(format!(
                "generator sum = {}, integral = {}",
                z.assembly.generator_norm_pow, z.assembly.integral
            ));
            t.check(z.all_hold(), "assembled compression", || "rho(2^(k+1)) < f(2^k)".into());
            t.check(z.assembly.generator_bound_holds(0.1), "generator bound", || {
                format!("{} > 2 * {} + 0.1", z.assembly.generator_norm_pow, z.assembly.integral)
            });
            for r in &z.rows {
                t.push(vec![json!(r.k), num(r.guaranteed), num(r.measured)]);
            }
            t
        }
        Command::Walk(a) => {
            let g = MarkedGroup::parse(&a.group)?;
            if a.n == 0 {
                bail!(Error::usage("walk needs n >= 1"));
            }
            let ball = Arc::new(Ball::enumerate(&g, 2 * a.n)?);
            let nu = WalkMeasure::lazy_uniform(ball)?;
            let cert = walk_profile_certificate(&nu, a.n)?;
            let ret = return_probabilities(&nu, 2 * a.n)?;
            let mut cols = vec!["n", "returnProb", "psi", "selectedQ", "certRatio"];
            if a.simulate.is_some() {
                cols.push("simReturn");
            }
            let mut t = Table::new(&cols);
            t.note(format!("selection: ratio {} <= bound {}", cert.selection.ratio, cert.selection.bound));
            t.note(format!("energy identity relative error = {}", cert.energy_error));
            if a.simulate.is_some() {
                t.note("simReturn is a Monte-Carlo estimate and is not certified");
            }
            t.check(cert.selection.holds, "scale selection", || format!("n = {}", a.n));
            for q in 0..=2 * a.n {
                let mut row = vec![
                    json!(q),
                    num(ret[q as usize]),
                    num(cert.psi[q as usize]),
                    json!(cert.selection.q_star),
                    num(cert.certificate.ratio),
                ];
                if let Some(trials) = a.simulate {
                    row.push(num(simulate_return_frequency(&g, true, q, trials, config.seed.wrapping_add(q as u64))));
                }
                t.push(row);
            }
            t
        }
        Command::Schoenberg(a) => {
            let z = MarkedGroup::wreath_z();
            let sample = random_elements(&z, a.sample, a.max_len, config.seed);
            let mut t = Table::new(&["t", "minEigenvalue", "norm", "psd"]);
            t.note(format!("sample of {} elements", sample.len()));
            for &s in &a.t {
                let r = schoenberg_psd_check(&Cocycle::LampConfig, &sample, s, a.p)?;
                let psd = r.is_psd(1e-8);
                t.check(psd, "positive kernel", || format!("t = {s}: min eigenvalue {}", r.min_eigenvalue));
                t.push(vec![num(s), num(r.min_eigenvalue), num(r.norm), json!(psd)]);
            }
            t
        }
        Command::Run(_) => bail!(Error::usage("run configurations cannot nest")),
    })
}

fn execute(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let config = match cli.command {
        Command::Run(r) => {
            let text = std::fs::read_to_string(&r.config).with_context(|| format!("reading {}", r.config.display()))?;
            serde_json::from_str::<ExperimentConfig>(&text)
                .map_err(|e| Error::usage(format!("invalid configuration: {e}")))?
        }
        command => ExperimentConfig { experiment: command, seed: cli.seed, format: cli.format },
    };
    let stamp: Value = serde_json::to_value(&config)?;
    let table = run(&config)?;
    let bytes = render(&table, &stamp, config.format)?;
    emit(&bytes, cli.output.as_deref())?;
    if let Some((invariant, detail)) = table.failures.first() {
        bail!(Error::assertion(invariant.clone(), detail.clone()));
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            let code = match e.downcast_ref::<Error>() {
                Some(Error::Usage(_)) => 2,
                Some(Error::Resource(_)) => 3,
                _ => 1,
            };
            ExitCode::from(code)
        }
    }
}
