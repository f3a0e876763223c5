//! `robustpr` command-line front end.
//!
//! Key scalars go to stdout as `RESULT key=value` lines. Failures print one
//! JSON object to stderr and exit with 1 (bad input) or 2 (runtime failure).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand, ValueEnum};
use robustpr::harness::{fmt_float, run_grid, write_results, ExperimentConfig};
use robustpr::props::{
    e_curve_scan, estimate_agp_band, estimate_arp_psi, quotient_grid_min, sharpness_scan, sweep_rank2, sweep_sum_diff,
    write_e_curve_csv,
};
use robustpr::solvers::{solve, spectral_init, FStar, Method, SolverConfig};
use robustpr::{
    dist_to_sign_pair, plant_instance, CorruptionSpec, Error, MeasurementModel, NoiseModel, ProblemInstance,
};
use serde_json::{json, Value};

const DEFAULT_OUT: &str = "robustpr-out";

#[derive(Debug, Parser)]
#[command(name = "robustpr", version, about = "Robust phase retrieval laboratory")]
struct Cli {
    /// Master seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output directory [default: robustpr-out; `phase` falls back to the config's output_dir first].
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Measurement exponent: 1 for |Ax|, 2 for |Ax|^2 [default: 2; `solve` uses the instance's].
    #[arg(long, global = true, value_parser = clap::value_parser!(u8).range(1..=2))]
    p: Option<u8>,
    /// Print only RESULT lines.
    #[arg(short, long, global = true)]
    quiet: bool,
    /// Worker threads for parallel sections [default: all cores].
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Plant a corrupted instance and write it as JSON.
    Gen(GenArgs),
    /// Run a solver on an instance from spectral initialization.
    Solve(SolveArgs),
    /// Estimate growth, range and sharpness constants of an instance.
    Props(PropsArgs),
    /// Tabulate the e(s) curve and both normalized ratios.
    Ecurve(EcurveArgs),
    /// Run a phase-transition grid from a JSON config.
    Phase(PhaseArgs),
    /// Sweep the deterministic vector inequalities.
    Lemmas(LemmasArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum NoiseKind {
    Zero,
    Gaussian,
    Adversarial,
}

#[derive(Debug, Args)]
struct PlantArgs {
    /// Number of measurements.
    #[arg(long, default_value_t = 200)]
    m: usize,
    /// Signal dimension.
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Corrupted fraction s; floor(s m) measurements are rewritten.
    #[arg(long, default_value_t = 0.02)]
    s: f64,
    /// How corrupted entries are rewritten.
    #[arg(long, value_enum, default_value_t = NoiseKind::Adversarial)]
    noise: NoiseKind,
    /// Scale of the gaussian or adversarial corruption.
    #[arg(long, default_value_t = 10.0)]
    noise_scale: f64,
}

impl PlantArgs {
    fn spec(&self) -> CorruptionSpec {
        let noise = match self.noise {
            NoiseKind::Zero => NoiseModel::ReplaceZero,
            NoiseKind::Gaussian => NoiseModel::AdditiveGaussian {
                scale: self.noise_scale,
            },
            NoiseKind::Adversarial => NoiseModel::AdversarialLarge {
                scale: self.noise_scale,
            },
        };
        CorruptionSpec::uniform(self.s, noise)
    }

    fn plant(&self, model: MeasurementModel, seed: u64) -> robustpr::Result<ProblemInstance> {
        if self.m == 0 || self.n == 0 {
            return Err(Error::InvalidParameter("m and n must be positive".into()));
        }
        plant_instance(self.m, self.n, model, &self.spec(), seed)
    }
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    plant: PlantArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MethodArg {
    Polyak,
    Geometric,
    ProxLinear,
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Instance JSON written by `gen`.
    #[arg(long)]
    instance: PathBuf,
    #[arg(long, value_enum, default_value_t = MethodArg::Polyak)]
    method: MethodArg,
    #[arg(long, default_value_t = 1000)]
    max_iters: usize,
    /// Stop when dist(x, {x*, -x*}) <= tol_dist |x*|.
    #[arg(long, default_value_t = 1e-10)]
    tol_dist: f64,
    /// Also stop when f(x) - f* <= tol_obj.
    #[arg(long)]
    tol_obj: Option<f64>,
    /// Optimal value for Polyak steps: `planted`, `zero`, or a number.
    #[arg(long, default_value = "planted")]
    fstar: String,
    /// Geometric initial step [default: 0.5 |x0|].
    #[arg(long)]
    lambda0: Option<f64>,
    /// Geometric decay factor.
    #[arg(long, default_value_t = 0.98)]
    q: f64,
    /// Prox-linear proximal weight [default: 1 / (2 |A|_2^2)].
    #[arg(long)]
    prox_t: Option<f64>,
    /// Prox-linear inner gap tolerance.
    #[arg(long, default_value_t = 1e-13)]
    inner_tol: f64,
    /// Success threshold on dist(x, {x*, -x*}) / |x*|.
    #[arg(long, default_value_t = 1e-5)]
    tau: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Property {
    Agp,
    Arp,
    Sharpness,
}

#[derive(Debug, Args)]
struct PropsArgs {
    /// Instance JSON; planted from the sizing flags when absent.
    #[arg(long)]
    instance: Option<PathBuf>,
    #[command(flatten)]
    plant: PlantArgs,
    /// Properties to estimate (repeat or comma-separate).
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Property::Agp, Property::Arp, Property::Sharpness])]
    what: Vec<Property>,
    /// Sampled pairs for AGP and ARP.
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    /// Coordinate ascent steps per ARP pair.
    #[arg(long, default_value_t = 100)]
    ascent_steps: usize,
    /// ARP order [default: planted corruption count, at least 1].
    #[arg(long)]
    l: Option<usize>,
    /// Accuracy parameter used in the predicted constants.
    #[arg(long, default_value_t = 0.1)]
    epsilon: f64,
    /// Sharpness probes.
    #[arg(long, default_value_t = 900)]
    probes: usize,
}

#[derive(Debug, Args)]
struct EcurveArgs {
    /// Grid points on [-1, 1].
    #[arg(long, default_value_t = 201)]
    points: usize,
    /// Absolute quadrature tolerance per point.
    #[arg(long, default_value_t = 1e-8)]
    tol: f64,
}

#[derive(Debug, Args)]
struct PhaseArgs {
    /// Experiment config JSON.
    #[arg(long)]
    config: PathBuf,
}

#[derive(Debug, Args)]
struct LemmasArgs {
    /// Random pairs per inequality.
    #[arg(long, default_value_t = 1_000_000)]
    pairs: usize,
    /// Dimension of the random pairs.
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Grid step for the quotient minimum on [0, 1]^2.
    #[arg(long, default_value_t = 1e-3)]
    grid_step: f64,
}

struct Ctx {
    seed: u64,
    out: PathBuf,
    p: Option<u8>,
    quiet: bool,
    outputs: Vec<PathBuf>,
}

impl Ctx {
    fn model(&self) -> robustpr::Result<MeasurementModel> {
        MeasurementModel::from_exponent(self.p.unwrap_or(2))
    }

    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn write(&mut self, name: &str, contents: &str) -> robustpr::Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| io_error(&self.out, e))?;
        let path = self.out.join(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))?;
        self.info(format!("wrote {}", path.display()));
        self.outputs.push(path);
        Ok(())
    }

    fn write_json(&mut self, name: &str, value: &Value) -> robustpr::Result<()> {
        let text = serde_json::to_string_pretty(value)?;
        self.write(name, &text)
    }
}

fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn result(key: &str, value: impl std::fmt::Display) {
    println!("RESULT {key}={value}");
}

fn read_instance(path: &Path) -> robustpr::Result<ProblemInstance> {
    ProblemInstance::read(path)
}

fn cmd_gen(ctx: &mut Ctx, args: &GenArgs) -> robustpr::Result<()> {
    let inst = args.plant.plant(ctx.model()?, ctx.seed)?;
    ctx.write("instance.json", &inst.to_json()?)?;
    result("m", inst.m());
    result("n", inst.n());
    result("corrupted", inst.support.len());
    result("planted_objective", fmt_float(inst.planted_objective()));
    Ok(())
}

fn parse_fstar(text: &str) -> robustpr::Result<FStar> {
    match text {
        "planted" => Ok(FStar::Planted),
        "zero" => Ok(FStar::Zero),
        other => other
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .map(|value| FStar::Known { value })
            .ok_or_else(|| {
                Error::InvalidParameter(format!("--fstar must be planted, zero or a finite number, got {other}"))
            }),
    }
}

fn cmd_solve(ctx: &mut Ctx, args: &SolveArgs) -> robustpr::Result<()> {
    let inst = read_instance(&args.instance)?;
    if let Some(p) = ctx.p {
        if p != inst.model.exponent() {
            return Err(Error::InvalidParameter(format!(
                "--p {p} disagrees with the instance's p = {}",
                inst.model.exponent()
            )));
        }
    }
    if !(args.tau > 0.0 && args.tau.is_finite()) {
        return Err(Error::InvalidParameter(format!("--tau must be > 0, got {}", args.tau)));
    }
    let method = match args.method {
        MethodArg::Polyak => Method::Polyak,
        MethodArg::Geometric => Method::Geometric,
        MethodArg::ProxLinear => Method::ProxLinear,
    };
    let mut cfg = SolverConfig::new(method, args.max_iters);
    cfg.tol_dist = Some(args.tol_dist);
    cfg.tol_obj = args.tol_obj;
    cfg.fstar = parse_fstar(&args.fstar)?;
    cfg.geometric.lambda0 = args.lambda0;
    cfg.geometric.q = args.q;
    cfg.prox.t = args.prox_t;
    cfg.prox.inner_tol = args.inner_tol;
    cfg.validate()?;

    let x0 = spectral_init(&inst.matrix, &inst.b, inst.model)?;
    let trace = solve(&inst.problem(), &cfg, &x0)?;
    let rel = dist_to_sign_pair(&trace.x, &inst.xstar)? / inst.xstar.norm();
    let success = rel <= args.tau;

    let mut csv = String::from("k,objective,dist\n");
    for (k, f) in trace.objective.iter().enumerate() {
        csv.push_str(&format!("{k},{},{}\n", fmt_float(*f), fmt_float(trace.dist[k])));
    }
    ctx.write("trace.csv", &csv)?;
    ctx.write_json(
        "solve_summary.json",
        &json!({
            "instance": args.instance,
            "solver": cfg,
            "tau": args.tau,
            "success": success,
            "termination": trace.termination,
            "iterations": trace.iterations,
            "initial_dist": dist_to_sign_pair(&x0, &inst.xstar)? / inst.xstar.norm(),
            "final_dist": rel,
            "final_objective": trace.final_objective(),
            "fstar": trace.fstar,
            "x": trace.x,
        }),
    )?;
    result("success", success);
    result("final_dist", fmt_float(rel));
    result("final_objective", fmt_float(trace.final_objective()));
    result("iterations", trace.iterations);
    Ok(())
}

fn cmd_props(ctx: &mut Ctx, args: &PropsArgs) -> robustpr::Result<()> {
    let inst = match &args.instance {
        Some(path) => {
            let inst = read_instance(path)?;
            if ctx.p.is_some_and(|p| p != inst.model.exponent()) {
                return Err(Error::InvalidParameter("--p disagrees with the instance".into()));
            }
            inst
        }
        None => args.plant.plant(ctx.model()?, ctx.seed)?,
    };
    let model = inst.model;
    let l = args.l.unwrap_or_else(|| inst.support.len().max(1));
    let mut psi = None;
    if args.what.contains(&Property::Agp) {
        let band = estimate_agp_band(&inst.matrix, model, args.pairs, ctx.seed, args.epsilon)?;
        ctx.write_json("agp.json", &serde_json::to_value(&band)?)?;
        result("mu1_hat", fmt_float(band.mu1_hat));
        result("mu2_hat", fmt_float(band.mu2_hat));
        result("mu1_pred", fmt_float(band.mu1_pred));
        result("mu2_pred", fmt_float(band.mu2_pred));
    }
    if args.what.contains(&Property::Arp) {
        let rep = estimate_arp_psi(
            &inst.matrix,
            l,
            model,
            args.pairs,
            args.ascent_steps,
            ctx.seed,
            Some(args.epsilon),
        )?;
        ctx.write_json("arp.json", &serde_json::to_value(&rep)?)?;
        result("l", l);
        result("psi_hat", fmt_float(rep.psi_hat));
        match rep.psi_pred {
            Some(v) => result("psi_pred", fmt_float(v)),
            None => result("psi_pred", "none"),
        }
        psi = Some(rep.psi_hat);
    }
    if args.what.contains(&Property::Sharpness) {
        let rep = sharpness_scan(&inst, psi, args.epsilon, args.probes, ctx.seed)?;
        ctx.write_json("sharpness.json", &serde_json::to_value(&rep)?)?;
        result("mu_hat", fmt_float(rep.mu_hat));
        match rep.mu_pred {
            Some(v) => result("mu_pred", fmt_float(v)),
            None => result("mu_pred", "none"),
        }
        result("certified_probes", format!("{}/{}", rep.certified, rep.probes));
    }
    Ok(())
}

fn cmd_ecurve(ctx: &mut Ctx, args: &EcurveArgs) -> robustpr::Result<()> {
    let scan = e_curve_scan(args.points, args.tol)?;
    fs::create_dir_all(&ctx.out).map_err(|e| io_error(&ctx.out, e))?;
    let (a, b) = write_e_curve_csv(&scan, &ctx.out)?;
    ctx.info(format!("wrote {}\nwrote {}", a.display(), b.display()));
    ctx.outputs.extend([a, b]);
    ctx.write_json("ecurve.json", &serde_json::to_value(&scan)?)?;
    let verdict = if scan.min_ratio_sqrt_f >= 0.77 {
        "holds"
    } else {
        "fails"
    };
    println!(
        "RESULT min ratio_sqrtF >= 0.77 {verdict}: min ratio_sqrtF={} at s={}",
        fmt_float(scan.min_ratio_sqrt_f),
        fmt_float(scan.argmin_ratio_sqrt_f)
    );
    println!(
        "RESULT min ratio_F={} at s={}",
        fmt_float(scan.min_ratio_f),
        fmt_float(scan.argmin_ratio_f)
    );
    Ok(())
}

fn cmd_phase(ctx: &mut Ctx, args: &PhaseArgs, out_flag: bool, threads: Option<u64>) -> robustpr::Result<()> {
    let mut cfg = ExperimentConfig::read(&args.config)?;
    if let Some(p) = ctx.p {
        if p != cfg.p {
            return Err(Error::InvalidParameter(format!(
                "--p {p} disagrees with the config's p = {}",
                cfg.p
            )));
        }
    }
    if let Some(t) = threads {
        cfg.threads = Some(t as usize);
    }
    if !out_flag {
        if let Some(dir) = &cfg.output_dir {
            ctx.out = dir.clone();
        }
    }
    let grid = run_grid(&cfg)?;
    let paths = write_results(&grid, &ctx.out)?;
    ctx.info(format!("wrote {}", paths.results.display()));
    for c in &grid.cells {
        result(
            "cell",
            format!("n={} m={} s={} rate={}", c.n, c.m, fmt_float(c.s), fmt_float(c.rate)),
        );
    }
    result("results", paths.results.display());
    Ok(())
}

fn cmd_lemmas(ctx: &mut Ctx, args: &LemmasArgs) -> robustpr::Result<()> {
    let sd = sweep_sum_diff(args.pairs, args.n, ctx.seed)?;
    let r2 = sweep_rank2(args.pairs, args.n, ctx.seed)?;
    let q = quotient_grid_min(args.grid_step)?;
    ctx.write_json(
        "lemmas.json",
        &json!({ "sum_diff": sd, "rank2": r2, "quotient_grid": q, "n": args.n }),
    )?;
    result("sum_diff_pass", sd.passed);
    result("sum_diff_fail", sd.failed);
    result("rank2_pass", r2.passed);
    result("rank2_fail", r2.failed);
    result("quotient_min", fmt_float(q.min));
    result(
        "quotient_argmin",
        format!("({},{})", fmt_float(q.argmin_t), fmt_float(q.argmin_rho)),
    );
    Ok(())
}

fn write_manifest(ctx: &mut Ctx, command: &str) -> robustpr::Result<()> {
    let argv: Vec<String> = std::env::args().collect();
    let manifest = json!({
        "command": command,
        "argv": argv,
        "seed": ctx.seed,
        "p": ctx.p,
        "version": robustpr::VERSION,
        "outputs": ctx.outputs,
        "timestamp": SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()),
    });
    ctx.write_json("run_manifest.json", &manifest)
}

fn run(cli: Cli) -> robustpr::Result<()> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t as usize)
            .build_global()
            .map_err(|e| Error::InvalidParameter(format!("cannot size the worker pool: {e}")))?;
    }
    let mut ctx = Ctx {
        seed: cli.seed,
        out: cli.out.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_OUT)),
        p: cli.p,
        quiet: cli.quiet,
        outputs: Vec::new(),
    };
    let name = match &cli.command {
        Command::Gen(a) => cmd_gen(&mut ctx, a).map(|_| "gen"),
        Command::Solve(a) => cmd_solve(&mut ctx, a).map(|_| "solve"),
        Command::Props(a) => cmd_props(&mut ctx, a).map(|_| "props"),
        Command::Ecurve(a) => cmd_ecurve(&mut ctx, a).map(|_| "ecurve"),
        Command::Phase(a) => cmd_phase(&mut ctx, a, cli.out.is_some(), cli.threads).map(|_| "phase"),
        Command::Lemmas(a) => cmd_lemmas(&mut ctx, a).map(|_| "lemmas"),
    }?;
    write_manifest(&mut ctx, name)
}

fn fail(kind: &str, code: u8, message: &str) -> ExitCode {
    eprintln!("{}", json!({ "error": kind, "code": code, "message": message }));
    ExitCode::from(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let text = e.to_string();
            let first = text
                .lines()
                .next()
                .unwrap_or("invalid arguments")
                .trim_start_matches("error: ");
            return fail("validation", 1, first);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is_validation() => fail("validation", 1, &e.to_string()),
        Err(e) => fail("runtime", 2, &e.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn fstar_parsing() {
        assert_eq!(parse_fstar("planted").unwrap(), FStar::Planted);
        assert_eq!(parse_fstar("zero").unwrap(), FStar::Zero);
        assert_eq!(parse_fstar("1.5").unwrap(), FStar::Known { value: 1.5 });
        assert!(parse_fstar("inf").is_err());
        assert!(parse_fstar("abc").is_err());
    }
}
