//! Command-line front end for the betaenc library: one-shot encode/decode,
//! beta estimation, Markov bitstream analysis, the Kalman chain embedding,
//! config-driven sweeps, and canned figure reproductions.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use betaenc::decoder::{decode, decode_bits, error_bound, DecodeMode};
use betaenc::encoder::{bit_stream, encode, encode_pair, make_threshold_sequence};
use betaenc::estimation::{estimate_beta, estimate_beta_negative, BetaEstimate};
use betaenc::harness::output::{write_csv, write_sidecar, RunMetadata};
use betaenc::harness::recipes::{recipe, RECIPE_NAMES};
use betaenc::harness::{run_experiment, ExperimentSpec, ResultRow};
use betaenc::maps::{MapFlavor, MapSpec};
use betaenc::markov::{
    analytic_transition, empirical_transition, kalman_embed_oriented, kalman_verify,
    TransitionMatrix2,
};

#[derive(Parser)]
#[command(
    name = "betaenc",
    version,
    about = "Beta-encoder family A/D-D/A toolkit",
    long_about = "Encode samples through beta-expansion quantisers with flaky thresholds, \
decode them by interval contraction, recover the amplification factor from paired \
bitstreams, analyse bitstreams as two-state Markov chains, and run seeded Monte Carlo \
MSE sweeps."
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Encode one sample into L bits
    Encode(EncodeArgs),
    /// Decode a bit string back to a value
    Decode(DecodeArgs),
    /// Estimate beta from the paired expansions of x and 1 - x
    EstimateBeta(EstimateArgs),
    /// Run a Monte Carlo sweep described by a config file
    Sweep(SweepArgs),
    /// Analytic chain for (beta, nu), optionally checked against encoder bits
    Markov(MarkovArgs),
    /// Embed a 2-state chain into a piecewise-linear map and verify its spectrum
    Kalman(KalmanArgs),
    /// Re-run a canned figure sweep and write its CSV plus metadata sidecar
    Reproduce(ReproduceArgs),
}

#[derive(Args)]
struct EncodeArgs {
    /// bernoulli, cautious, scale_adjusted, or negative
    #[arg(long, default_value = "cautious")]
    flavor: String,
    /// Amplification factor; ignored for bernoulli (fixed at 2)
    #[arg(long)]
    beta: Option<f64>,
    /// Quantiser threshold nu*; ignored for bernoulli (fixed at 1 + rho)
    #[arg(long)]
    nu: Option<f64>,
    /// Scale s, required for scale_adjusted and negative
    #[arg(long)]
    scale: Option<f64>,
    /// Bernoulli threshold shift
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
    /// Sample to encode
    #[arg(long)]
    x: f64,
    /// Word length L
    #[arg(long, default_value_t = 16)]
    bits: usize,
    /// Per-bit threshold fluctuation amplitude in [0, 1)
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    /// Seed for the threshold fluctuations
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct DecodeArgs {
    #[arg(long, default_value = "cautious")]
    flavor: String,
    #[arg(long)]
    beta: Option<f64>,
    /// Scale s; defaults to (beta - 1)^-1 for cautious, 1 for bernoulli
    #[arg(long)]
    scale: Option<f64>,
    /// The bit string, e.g. 0110100
    #[arg(long)]
    bits: String,
    /// Decode mode p_L: 0 left, 1 midpoint, 2 right
    #[arg(long, default_value_t = 1)]
    mode: u8,
}

#[derive(Args)]
struct EstimateArgs {
    /// cautious or negative
    #[arg(long, default_value = "cautious")]
    flavor: String,
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    nu: f64,
    #[arg(long)]
    scale: Option<f64>,
    /// Sample in [0, 1); its mirror 1 - x is encoded with the same thresholds
    #[arg(long)]
    x: f64,
    #[arg(long, default_value_t = 32)]
    bits: usize,
    #[arg(long, default_value_t = 0.0)]
    epsilon: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Tail mode p_L used by the characteristic equation
    #[arg(long, default_value_t = 1)]
    mode: u8,
}

#[derive(Args)]
struct SweepArgs {
    /// TOML file mirroring the experiment schema
    #[arg(long)]
    config: PathBuf,
    /// Output CSV path; a .meta.json sidecar lands next to it
    #[arg(long)]
    out: PathBuf,
    /// Override samples per cell
    #[arg(long)]
    samples: Option<usize>,
    /// Override the master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Override the nu grid resolution
    #[arg(long)]
    nu_points: Option<usize>,
    /// Shrink to CI scale (1,000 samples x 20 nu points)
    #[arg(long)]
    quick: bool,
}

#[derive(Args)]
struct MarkovArgs {
    #[arg(long)]
    beta: f64,
    #[arg(long)]
    nu: f64,
    /// Initial point for an empirical bitstream check
    #[arg(long)]
    x: Option<f64>,
    /// Number of encoder bits to generate for the empirical check
    #[arg(long)]
    bits: Option<usize>,
}

#[derive(Args)]
struct KalmanArgs {
    #[arg(long)]
    p11: f64,
    #[arg(long)]
    p12: f64,
    #[arg(long)]
    p21: f64,
    #[arg(long)]
    p22: f64,
    /// Outer breakpoint d_1 strictly inside (0, 1)
    #[arg(long, default_value_t = 0.5)]
    d1: f64,
    /// Branch orientations tau(d_1),tau(d_2), e.g. 1,0 (1 climbs, 0 falls)
    #[arg(long, default_value = "1,1")]
    orientation: String,
}

#[derive(Args)]
struct ReproduceArgs {
    /// Recipe name, fig4 through fig18
    name: String,
    /// Override the recipe's master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Shrink every spec to CI scale
    #[arg(long)]
    quick: bool,
    /// Output CSV path, default <name>.csv
    #[arg(long)]
    out: Option<PathBuf>,
}

fn parse_flavor(name: &str) -> Result<MapFlavor> {
    name.to_ascii_lowercase()
        .parse()
        .context("flavors: bernoulli, cautious, scale_adjusted, negative")
}

fn build_spec(
    flavor: MapFlavor,
    beta: Option<f64>,
    nu: Option<f64>,
    scale: Option<f64>,
    rho: f64,
) -> Result<MapSpec> {
    let need = |v: Option<f64>, what: &str| {
        v.with_context(|| format!("--{what} is required for the {flavor} flavor"))
    };
    let spec = match flavor {
        MapFlavor::Bernoulli => MapSpec::bernoulli(rho)?,
        MapFlavor::Cautious => MapSpec::cautious(need(beta, "beta")?, need(nu, "nu")?)?,
        MapFlavor::ScaleAdjusted => {
            MapSpec::scale_adjusted(need(beta, "beta")?, need(nu, "nu")?, need(scale, "scale")?)?
        }
        MapFlavor::NegativeBeta => {
            MapSpec::negative(need(beta, "beta")?, need(nu, "nu")?, need(scale, "scale")?)?
        }
    };
    Ok(spec)
}

fn parse_bits(s: &str) -> Result<Vec<u8>> {
    s.chars()
        .map(|c| match c {
            '0' => Ok(0),
            '1' => Ok(1),
            other => bail!("bit string may only contain 0 and 1, found '{other}'"),
        })
        .collect()
}

fn estimate_json(est: &BetaEstimate) -> serde_json::Value {
    json!({
        "gamma_hat": est.gamma_hat,
        "beta_hat": est.beta_hat,
        "residual": est.residual,
        "bracket_width": est.bracket_width,
        "implied_scale": est.implied_scale(),
    })
}

fn print_json(value: &serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn run_encode(args: &EncodeArgs) -> Result<()> {
    let flavor = parse_flavor(&args.flavor)?;
    let spec = build_spec(flavor, args.beta, args.nu, args.scale, args.rho)?;
    let thresholds = make_threshold_sequence(
        spec.threshold_band(),
        spec.nu,
        args.epsilon,
        args.bits,
        args.seed,
    )?;
    let record = encode(&spec, args.x, &thresholds)?;
    let decoded: Vec<f64> = [DecodeMode::Left, DecodeMode::Midpoint, DecodeMode::Right]
        .iter()
        .map(|&m| decode(&record, m))
        .collect::<betaenc::Result<_>>()?;
    print_json(&json!({
        "flavor": flavor,
        "beta": spec.beta,
        "nu": spec.nu,
        "s": spec.s,
        "x": args.x,
        "epsilon": args.epsilon,
        "bits": record.bits,
        "residue": record.residue,
        "thresholds": record.thresholds.values,
        "decoded": {
            "left": decoded[0],
            "midpoint": decoded[1],
            "right": decoded[2],
        },
        "error_bound_midpoint": error_bound(&spec, args.bits, DecodeMode::Midpoint),
    }))
}

fn run_decode(args: &DecodeArgs) -> Result<()> {
    let flavor = parse_flavor(&args.flavor)?;
    let bits = parse_bits(&args.bits)?;
    let mode = DecodeMode::from_p(args.mode)?;
    let (beta, s) = match flavor {
        MapFlavor::Bernoulli => (2.0, args.scale.unwrap_or(1.0)),
        MapFlavor::Cautious => {
            let beta = args.beta.context("--beta is required")?;
            (beta, args.scale.unwrap_or((beta - 1.0).recip()))
        }
        _ => (
            args.beta.context("--beta is required")?,
            args.scale
                .with_context(|| format!("--scale is required for the {flavor} flavor"))?,
        ),
    };
    let x_hat = decode_bits(flavor, &bits, beta, s, mode)?;
    print_json(&json!({
        "flavor": flavor,
        "beta": beta,
        "s": s,
        "mode": args.mode,
        "bits": bits.len(),
        "x_hat": x_hat,
    }))
}

fn run_estimate(args: &EstimateArgs) -> Result<()> {
    let flavor = parse_flavor(&args.flavor)?;
    let spec = build_spec(flavor, Some(args.beta), Some(args.nu), args.scale, 0.0)?;
    let thresholds = make_threshold_sequence(
        spec.threshold_band(),
        spec.nu,
        args.epsilon,
        args.bits,
        args.seed,
    )?;
    let (bx, by) = encode_pair(&spec, args.x, &thresholds)?;
    let mode = DecodeMode::from_p(args.mode)?;
    let estimates = match flavor {
        MapFlavor::Cautious => vec![estimate_beta(&bx, &by, mode)?],
        MapFlavor::NegativeBeta => estimate_beta_negative(&bx, &by)?,
        _ => bail!("estimation runs on the cautious and negative flavors"),
    };
    print_json(&json!({
        "flavor": flavor,
        "beta_true": args.beta,
        "x": args.x,
        "bits": args.bits,
        "epsilon": args.epsilon,
        "estimates": estimates.iter().map(estimate_json).collect::<Vec<_>>(),
    }))
}

fn write_outputs(
    out: &Path,
    rows: &[ResultRow],
    seed: u64,
    recipe_name: Option<String>,
    focus: Option<&'static str>,
) -> Result<()> {
    write_csv(out, rows).with_context(|| format!("writing {}", out.display()))?;
    let mut meta = RunMetadata::new(seed);
    meta.recipe = recipe_name;
    meta.focus = focus;
    write_sidecar(out, &meta)?;
    eprintln!("wrote {} rows to {}", rows.len(), out.display());
    Ok(())
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let text = std::fs::read_to_string(&args.config)
        .with_context(|| format!("reading {}", args.config.display()))?;
    let mut spec: ExperimentSpec = toml::from_str(&text).context("parsing sweep config")?;
    if args.quick {
        spec.quicken();
    }
    if let Some(samples) = args.samples {
        spec.samples = samples;
    }
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    if let Some(nu_points) = args.nu_points {
        spec.nu_points = nu_points;
    }
    let rows = run_experiment(&spec)?;
    write_outputs(&args.out, &rows, spec.seed, None, None)
}

fn run_markov(args: &MarkovArgs) -> Result<()> {
    let chain = analytic_transition(args.beta, args.nu)?;
    let mut out = json!({ "analytic": chain });
    match (args.x, args.bits) {
        (Some(x), Some(n)) => {
            let spec = MapSpec::cautious(args.beta, args.nu)?;
            let bits = bit_stream(&spec, x, n)?;
            let (counts, matrix, lambda2) = empirical_transition(&bits)?;
            out["empirical"] = json!({
                "counts": counts,
                "matrix": matrix,
                "lambda2": lambda2,
            });
        }
        (None, None) => {}
        _ => bail!("--x and --bits must be given together"),
    }
    print_json(&out)
}

fn run_kalman(args: &KalmanArgs) -> Result<()> {
    let matrix = TransitionMatrix2::new([[args.p11, args.p12], [args.p21, args.p22]])?;
    let orientation: Vec<u8> = args
        .orientation
        .split(',')
        .map(|t| t.trim().parse::<u8>().context("orientation flags must be 0 or 1"))
        .collect::<Result<_>>()?;
    let [o1, o2] = orientation[..] else {
        bail!("--orientation takes exactly two comma-separated flags, e.g. 1,0");
    };
    let map = kalman_embed_oriented(&matrix, args.d1, [o1, o2])?;
    let (spectrum, matches) = kalman_verify(&map);
    print_json(&json!({
        "map": map,
        "spectrum": spectrum,
        "matches": matches,
    }))
}

fn run_reproduce(args: &ReproduceArgs) -> Result<()> {
    let r = recipe(&args.name)
        .map_err(|e| anyhow::anyhow!("{e}; known recipes: {}", RECIPE_NAMES.join(", ")))?;
    let mut rows = Vec::new();
    let mut seed_used = 0;
    for mut spec in r.specs {
        if args.quick {
            spec.quicken();
        }
        if let Some(seed) = args.seed {
            spec.seed = seed;
        }
        seed_used = spec.seed;
        rows.extend(run_experiment(&spec)?);
    }
    let out = args
        .out
        .clone()
        .unwrap_or_else(|| PathBuf::from(format!("{}.csv", r.name)));
    write_outputs(&out, &rows, seed_used, Some(r.name.to_string()), Some(r.focus))
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Encode(args) => run_encode(&args),
        Cmd::Decode(args) => run_decode(&args),
        Cmd::EstimateBeta(args) => run_estimate(&args),
        Cmd::Sweep(args) => run_sweep(&args),
        Cmd::Markov(args) => run_markov(&args),
        Cmd::Kalman(args) => run_kalman(&args),
        Cmd::Reproduce(args) => run_reproduce(&args),
    }
}
