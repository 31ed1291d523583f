//! `lpcmv`: bands, discriminants, spectral densities, Gordon audits,
//! gap-opening constructions and the acceptance suite from the command
//! line.
//!
//! Exit codes: 0 on success, 1 when a criterion or construction stage
//! fails, 2 on invalid input (nothing is written in that case).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use lpcmv::construct::{self, ConstructionRun, StageReport};
use lpcmv::floquet;
use lpcmv::gordon;
use lpcmv::io;
use lpcmv::specmeasure::{self, FiniteVector};
use lpcmv::transfer;
use lpcmv::verify;
use lpcmv::{PeriodicSeq, SamplingFn};

#[derive(Parser)]
#[command(name = "lpcmv", version, about = "Spectral computations for periodic and limit-periodic CMV operators")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Bands, open gaps, discriminant samples and a band diagram.
    Bands(BandsArgs),
    /// Laurent coefficients of the discriminant.
    Discriminant(DiscriminantArgs),
    /// Spectral density of a finitely supported vector.
    Density(DensityArgs),
    /// Gordon certificate of a sequence, or of a constructed approximant.
    GordonCheck(GordonArgs),
    /// Gap-opening construction (Cantor or AC mode).
    Construct(ConstructArgs),
    /// The Gordon modulus γ(k, q, r).
    Gamma(GammaArgs),
    /// Run the acceptance suite.
    Verify(VerifyArgs),
}

#[derive(Args)]
struct InputArgs {
    /// JSON file holding a periodic sequence `{period, values, r}` or a
    /// sampling function `{level, table, r}`; values are `[re, im]` pairs.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct BandsArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Number of discriminant samples in `discriminant.csv`.
    #[arg(long, default_value_t = 1024)]
    grid: usize,
}

#[derive(Args)]
struct DiscriminantArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 1024)]
    grid: usize,
    /// Print the discriminant as JSON on stdout.
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct DensityArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    /// Source vector: an integer `n` for `δ_n`, or JSON `{start, values}`.
    #[arg(long, default_value = "0")]
    u: String,
}

#[derive(Args)]
struct GordonArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Number of scheduled scales `k = 1..=depth`.
    #[arg(long, default_value_t = 3)]
    depth: u32,
    /// Build an approximant within `eps` of the input and certify it.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum Mode {
    Cantor,
    Ac,
}

#[derive(Args)]
struct ConstructArgs {
    /// A sampling function, a periodic sequence of power-of-two period, or
    /// a run config `{f, eps, K, mode, u, t, seed}`; flags override it.
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long = "stages")]
    stages: Option<u32>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    u: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct GammaArgs {
    #[arg(long)]
    k: u32,
    #[arg(long)]
    q: u32,
    #[arg(long)]
    r: f64,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// Run only criteria whose group or name contains this string.
    #[arg(long)]
    filter: Option<String>,
    #[arg(long)]
    json: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Bad input: reported with exit code 2 before any output is produced.
#[derive(Debug)]
struct InputError(String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

fn input_err(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

/// A criterion or construction stage failed after outputs were written.
#[derive(Debug)]
struct Failed(String);

impl std::fmt::Display for Failed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Failed {}

enum Input {
    Periodic(PeriodicSeq),
    Sampling(SamplingFn),
}

impl Input {
    fn periodic(&self) -> PeriodicSeq {
        match self {
            Input::Periodic(s) => s.clone(),
            Input::Sampling(f) => f.to_periodic(),
        }
    }

    fn sampling(&self) -> Result<SamplingFn> {
        match self {
            Input::Sampling(f) => Ok(f.clone()),
            Input::Periodic(s) => {
                let p = s.period();
                if !p.is_power_of_two() {
                    return Err(input_err(format!("period {p} is not a power of two; no sampling function")));
                }
                SamplingFn::new(p.trailing_zeros(), s.values().to_vec(), s.r()).map_err(|e| input_err(e.to_string()))
            }
        }
    }
}

fn read_json(path: &Path) -> Result<Value> {
    let text = fs::read_to_string(path).map_err(|e| input_err(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| input_err(format!("{} is not valid JSON: {e}", path.display())))
}

fn parse_input(v: &Value) -> Result<Input> {
    if v.get("table").is_some() {
        serde_json::from_value(v.clone())
            .map(Input::Sampling)
            .map_err(|e| input_err(format!("invalid sampling function: {e}")))
    } else if v.get("values").is_some() {
        serde_json::from_value(v.clone())
            .map(Input::Periodic)
            .map_err(|e| input_err(format!("invalid periodic sequence: {e}")))
    } else {
        Err(input_err("input must be a periodic sequence {period, values, r} or a sampling function {level, table, r}"))
    }
}

fn load(args: &InputArgs) -> Result<Input> {
    parse_input(&read_json(&args.input)?)
}

fn parse_u(s: &str) -> Result<FiniteVector> {
    if let Ok(n) = s.trim().parse::<i64>() {
        return Ok(FiniteVector::delta(n));
    }
    let u: FiniteVector = serde_json::from_str(s).map_err(|e| input_err(format!("invalid --u: {e}")))?;
    if u.values.is_empty() || u.norm_sqr() == 0.0 {
        return Err(input_err("--u must be a nonzero vector"));
    }
    Ok(u)
}

fn write(dir: &Path, name: &str, contents: &str) -> Result<()> {
    io::write_atomic(&dir.join(name), contents.as_bytes()).with_context(|| format!("writing {name}"))
}

fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<()> {
    io::write_json(&dir.join(name), value).with_context(|| format!("writing {name}"))
}

fn require_grid(grid: usize) -> Result<()> {
    if grid < 2 {
        return Err(input_err("--grid must be at least 2"));
    }
    Ok(())
}

fn cmd_bands(a: BandsArgs) -> Result<()> {
    let seq = load(&a.input)?.periodic();
    require_grid(a.grid)?;
    let bs = floquet::band_structure(&seq)?;
    write(&a.out, "bands.csv", &io::bands_csv(&bs))?;
    write(&a.out, "gaps.csv", &io::gaps_csv(&bs))?;
    write(&a.out, "discriminant.csv", &io::discriminant_csv(&bs, a.grid))?;
    write(&a.out, "bands.svg", &io::band_structure_svg(&bs))?;
    println!(
        "{} bands, {} open gaps, total band measure {:.12}",
        bs.bands.len(),
        bs.open_gap_count(),
        bs.total_measure()
    );
    Ok(())
}

fn cmd_discriminant(a: DiscriminantArgs) -> Result<()> {
    let seq = load(&a.input)?.periodic();
    require_grid(a.grid)?;
    let disc = floquet::discriminant(&seq)?;
    if let Some(dir) = &a.out {
        let bs = floquet::band_structure(&seq)?;
        write_json(dir, "discriminant.json", &disc)?;
        write(dir, "discriminant.csv", &io::discriminant_csv(&bs, a.grid))?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&disc)?);
    } else {
        let h = (disc.q / 2) as i64;
        for (k, d) in disc.laurent_coeffs.iter().enumerate() {
            println!("z^{:<4} {:+.15e} {:+.15e}i", k as i64 - h, d.re, d.im);
        }
    }
    Ok(())
}

fn cmd_density(a: DensityArgs) -> Result<()> {
    let seq = load(&a.input)?.periodic();
    let u = parse_u(&a.u)?;
    let d = specmeasure::density(&seq, &u)?;
    write(&a.out, "density.csv", &io::density_csv(&d))?;
    write_json(&a.out, "density.json", &d)?;
    write(&a.out, "density.svg", &io::density_svg(&d))?;
    println!(
        "total mass {:.12} (‖u‖² = {:.12}, quadrature error {:.3e})",
        d.total_mass,
        u.norm_sqr(),
        d.tolerance
    );
    Ok(())
}

#[derive(Serialize)]
struct GordonReport {
    certificate: gordon::GordonCertificate,
    approximant: Option<gordon::GordonApproximant>,
    passed: bool,
}

fn cmd_gordon(a: GordonArgs) -> Result<()> {
    let input = load(&a.input)?;
    if a.depth == 0 {
        return Err(input_err("--depth must be at least 1"));
    }
    if let Some(eps) = a.eps {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(input_err("--eps must be positive"));
        }
    }
    let report = match a.eps {
        Some(eps) => {
            let f = input.sampling()?;
            let approx = gordon::construct_gordon_approximant(&f, eps, a.depth, a.seed)?;
            GordonReport {
                certificate: approx.certificate.clone(),
                passed: approx.certificate.passed(),
                approximant: Some(approx),
            }
        }
        None => {
            let seq = input.periodic();
            let p = seq.period();
            let schedule: Vec<(u32, usize)> = (1..=a.depth).map(|k| (k, p * k as usize)).collect();
            let qmax = (p * a.depth as usize) as i64;
            let cert = gordon::check_gordon(&seq.window(-2 * qmax, 2 * qmax + 2), &schedule)?;
            GordonReport {
                passed: cert.passed(),
                certificate: cert,
                approximant: None,
            }
        }
    };
    if let Some(dir) = &a.out {
        write_json(dir, "gordon.json", &report)?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report)?);
    } else {
        for e in &report.certificate.entries {
            println!(
                "k={} q_k={} lhs={:e} rhs={:e} {}",
                e.k,
                e.q_k,
                e.lhs,
                e.rhs,
                if e.pass { "pass" } else { "fail" }
            );
        }
    }
    if report.passed {
        Ok(())
    } else {
        Err(Failed("Gordon certificate failed".into()).into())
    }
}

/// The JSON run config accepted by `construct`.
#[derive(Deserialize)]
struct RunConfig {
    f: Value,
    eps: Option<f64>,
    #[serde(rename = "K")]
    k: Option<u32>,
    mode: Option<Mode>,
    u: Option<Value>,
    t: Option<f64>,
    seed: Option<u64>,
}

struct ConstructPlan {
    f: SamplingFn,
    eps: f64,
    stages: u32,
    mode: Mode,
    t: f64,
    u: FiniteVector,
    seed: u64,
}

fn plan_construct(a: &ConstructArgs) -> Result<ConstructPlan> {
    let v = read_json(&a.input.input)?;
    let (f, cfg) = if v.get("f").is_some() {
        let cfg: RunConfig = serde_json::from_value(v).map_err(|e| input_err(format!("invalid run config: {e}")))?;
        (parse_input(&cfg.f)?.sampling()?, Some(cfg))
    } else {
        (parse_input(&v)?.sampling()?, None)
    };
    let cfg_u = match cfg.as_ref().and_then(|c| c.u.clone()) {
        Some(Value::Number(n)) => Some(parse_u(&n.to_string())?),
        Some(other) => Some(parse_u(&other.to_string())?),
        None => None,
    };
    let eps = a.eps.or(cfg.as_ref().and_then(|c| c.eps)).ok_or_else(|| input_err("--eps is required"))?;
    let stages = a.stages.or(cfg.as_ref().and_then(|c| c.k)).unwrap_or(1);
    let mode = a.mode.or(cfg.as_ref().and_then(|c| c.mode)).unwrap_or(Mode::Cantor);
    let t = a.t.or(cfg.as_ref().and_then(|c| c.t)).unwrap_or(1.5);
    let u = match &a.u {
        Some(s) => parse_u(s)?,
        None => cfg_u.unwrap_or_else(|| FiniteVector::delta(0)),
    };
    let seed = a.seed.or(cfg.as_ref().and_then(|c| c.seed)).unwrap_or(0);
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(input_err("eps must be positive"));
    }
    if mode == Mode::Ac && !(t > 1.0 && t < 2.0) {
        return Err(input_err("t must lie in (1, 2)"));
    }
    if f.level() + stages > lpcmv::odometer::MAX_LEVEL {
        return Err(input_err(format!(
            "level {} plus {stages} stages exceeds the supported level {}",
            f.level(),
            lpcmv::odometer::MAX_LEVEL
        )));
    }
    Ok(ConstructPlan {
        f,
        eps,
        stages,
        mode,
        t,
        u,
        seed,
    })
}

#[derive(Serialize)]
struct Trail<'a> {
    mode: Mode,
    eps: f64,
    seed: u64,
    stages_requested: u32,
    completed: bool,
    stages: &'a [StageReport],
    error: Option<String>,
    failed_stage: Option<u32>,
    closed_gaps: Vec<usize>,
    run: Option<&'a ConstructionRun>,
}

/// Gaps of the last ring of band edges, for the overlay diagram.
fn ring_gaps(edges: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let n = edges.len();
    (0..n)
        .filter_map(|i| {
            let hi = edges[i][1];
            let mut lo_next = edges[(i + 1) % n][0];
            while lo_next < hi {
                lo_next += std::f64::consts::TAU;
            }
            (lo_next - hi > 1e-12).then_some([hi, lo_next])
        })
        .collect()
}

fn cmd_construct(a: ConstructArgs) -> Result<()> {
    let p = plan_construct(&a)?;
    let result = match p.mode {
        Mode::Cantor => construct::cantor_iterate(&p.f, p.eps, p.stages, p.seed),
        Mode::Ac => construct::ac_iterate(&p.f, p.eps, p.stages, &p.u, p.t, p.seed),
    };
    let (stages, trail) = match &result {
        Ok(run) => (
            run.stages.clone(),
            Trail {
                mode: p.mode,
                eps: p.eps,
                seed: p.seed,
                stages_requested: p.stages,
                completed: true,
                stages: &run.stages,
                error: None,
                failed_stage: None,
                closed_gaps: Vec::new(),
                run: Some(run),
            },
        ),
        Err(e) => (
            e.trail.clone(),
            Trail {
                mode: p.mode,
                eps: p.eps,
                seed: p.seed,
                stages_requested: p.stages,
                completed: false,
                stages: &e.trail,
                error: Some(e.to_string()),
                failed_stage: Some(e.stage),
                closed_gaps: e.closed_gaps.clone(),
                run: None,
            },
        ),
    };
    write_json(&a.out, "trail.json", &trail)?;
    write(&a.out, "stages.csv", &io::stages_csv(&stages))?;
    let rings: Vec<Vec<[f64; 2]>> = stages.iter().map(|s| s.band_edges.clone()).collect();
    let gaps = rings.last().map(|r| ring_gaps(r)).unwrap_or_default();
    write(&a.out, "bands.svg", &io::bands_svg(&rings, &gaps))?;
    for s in &stages {
        println!(
            "stage {} level {} period {} ‖s‖={:.3e} budget={:.3e} min_gap={:.3e} open {}/{}",
            s.stage,
            s.level,
            s.period,
            s.perturbation_norm,
            s.budget(),
            s.min_gap,
            s.open_gaps,
            s.total_gaps
        );
    }
    match result {
        Ok(run) => {
            println!("sup distance to input {:.3e} < {:.3e}", run.total_drift, run.drift_bound);
            Ok(())
        }
        Err(e) => Err(Failed(e.to_string()).into()),
    }
}

fn cmd_gamma(a: GammaArgs) -> Result<()> {
    if a.k == 0 {
        return Err(input_err("--k must be at least 1"));
    }
    if !(a.r > 0.0 && a.r < 1.0) {
        return Err(input_err("--r must lie in (0, 1)"));
    }
    let g = transfer::gamma(a.k, a.q, a.r)?;
    let l = transfer::lipschitz(a.r)?;
    if a.json {
        let v = serde_json::json!({ "k": a.k, "q": a.q, "r": a.r, "gamma": g, "lipschitz": l.l });
        println!("{}", serde_json::to_string_pretty(&v)?);
    } else {
        println!("gamma({}, {}, {}) = {:e}  (L = {:e})", a.k, a.q, a.r, g, l.l);
    }
    Ok(())
}

fn cmd_verify(a: VerifyArgs) -> Result<()> {
    let results = verify::run_all(a.filter.as_deref());
    if results.is_empty() {
        return Err(input_err(format!("no criterion matches {:?}", a.filter.unwrap_or_default())));
    }
    if let Some(dir) = &a.out {
        write_json(dir, "verify.json", &results)?;
    }
    if a.json {
        println!("{}", serde_json::to_string_pretty(&results)?);
    } else {
        for r in &results {
            println!("{}", r.line());
        }
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failed(format!("{failed} of {} criteria failed", results.len())).into())
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Bands(a) => cmd_bands(a),
        Command::Discriminant(a) => cmd_discriminant(a),
        Command::Density(a) => cmd_density(a),
        Command::GordonCheck(a) => cmd_gordon(a),
        Command::Construct(a) => cmd_construct(a),
        Command::Gamma(a) => cmd_gamma(a),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<InputError>() => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(e) if e.is::<Failed>() => {
            eprintln!("failed: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u_parsing() {
        assert_eq!(parse_u("3").unwrap(), FiniteVector::delta(3));
        let u = parse_u(r#"{"start": -1, "values": [[1, 0], [0, 2]]}"#).unwrap();
        assert_eq!(u.start, -1);
        assert_eq!(u.norm_sqr(), 5.0);
        assert!(parse_u("nope").is_err());
        assert!(parse_u(r#"{"start": 0, "values": [[0, 0]]}"#).is_err());
    }

    #[test]
    fn ring_gaps_wrap() {
        let g = ring_gaps(&[[1.0, 2.0], [3.0, 6.0]]);
        assert_eq!(g.len(), 2);
        assert_eq!(g[0], [2.0, 3.0]);
        assert!((g[1][1] - (1.0 + std::f64::consts::TAU)).abs() < 1e-15);
        assert!(ring_gaps(&[[0.0, std::f64::consts::TAU]]).is_empty());
    }
}
