//! Command-line front end: decide the representation property, solve for g,
//! probe the operators, reproduce the negative example and the mixing
//! estimates, and run the particle calibration harness.

use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num::rational::BigRational;
use num::{Signed, Zero};

use condrep::counterexample::{
    mu_measure, represent_indicator, sample_xy, AtlasEvaluator,
};
use condrep::intervals::IntervalSet;
use condrep::measures::DiscreteJoint;
use condrep::mixing::{mixing_check, DigitScheme};
use condrep::operators::{
    apply_t, bernoulli_mixture_g, operator_norm_bounds, xi_criterion, BernoulliMixture,
};
use condrep::pdvcalib::{
    run_calibration, CalibConfig, CallSurface, FeatureSpec, SurfaceModel, SurfaceSource,
};
use condrep::representation::{decide_rplus, solve_nonneg, FeasibilityResult};
use condrep::rngutil::stream;
use condrep::scalar::{format_rational, parse_rational, Scalar};
use condrep::CondrepError;

#[derive(Parser)]
#[command(name = "condrep", version, about = "inverse conditional expectation toolkit")]
struct Cli {
    /// Output format for reports that support both (mixing defaults to csv).
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Mode {
    Rational,
    Float,
}

#[derive(Subcommand)]
enum Cmd {
    /// Decide the representation property for a joint law.
    Check {
        joint: PathBuf,
        #[arg(long, value_enum, default_value_t = Mode::Rational)]
        mode: Mode,
    },
    /// Solve M g = f with g >= 0, or produce a refutation certificate.
    Solve {
        joint: PathBuf,
        /// Comma-separated target values, one per x-atom.
        #[arg(long)]
        f: String,
        /// Per-coordinate tolerance (0 = exact).
        #[arg(long, default_value = "0")]
        tol: String,
        #[arg(long, value_enum, default_value_t = Mode::Rational)]
        mode: Mode,
    },
    /// Operator norm bounds and the xi surjectivity criterion.
    Operators {
        joint: PathBuf,
        #[arg(long)]
        xi: bool,
        #[arg(long, default_value_t = 200)]
        trials: usize,
        #[arg(long, default_value_t = 12)]
        max_i: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Bernoulli-mixture closed form: g, its negative part, infeasibility.
    Example3 {
        #[arg(long)]
        p: String,
        /// Marginal, e.g. `uniform:4`.
        #[arg(long)]
        mu: String,
        /// Target, e.g. `indicator:0,2` (atom indices).
        #[arg(long)]
        f: String,
    },
    /// Represent an indicator under the counterexample law; optional MC audit.
    Counterexample {
        /// Interval `lo:hi`, e.g. `0.3:0.4`.
        #[arg(long = "A")]
        a: String,
        /// Target residual mass.
        #[arg(long, default_value_t = 1e-3)]
        resid: f64,
        /// Monte Carlo samples for the verification CSV (0 = skip).
        #[arg(long, default_value_t = 0)]
        mc: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Monte Carlo estimates for the digit-mixing family.
    Mixing {
        #[arg(long)]
        a: String,
        /// Comma-separated list of m values.
        #[arg(long)]
        m: String,
        #[arg(long = "N", default_value_t = 1_000_000)]
        n: usize,
        #[arg(long, default_value = "uniform")]
        eta: String,
        /// Optional fixed set `lo:hi` intersected with each A_m.
        #[arg(long)]
        ahat: Option<String>,
        /// Truncation depth of the digit expansion.
        #[arg(long, default_value_t = 12)]
        digits: u32,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Per-step particle calibration against a call surface.
    Calibrate(CalibrateArgs),
}

#[derive(Args)]
struct CalibrateArgs {
    /// CSV surface with columns t,x,C.
    #[arg(long)]
    surface: Option<PathBuf>,
    /// Synthetic surface instead: `flat:0.2`, `term:0.5=0.15,10=0.25`,
    /// or `skew:w,mean1,vol1,vol2`.
    #[arg(long)]
    synth: Option<String>,
    /// JSON file with lambdas/thetas/betas.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 100_000)]
    particles: usize,
    #[arg(long, default_value_t = 50)]
    steps: usize,
    #[arg(long, default_value_t = 0.02)]
    h: f64,
    #[arg(long, default_value_t = 40)]
    xbins: usize,
    /// Feature bins, `N1xN2`.
    #[arg(long, default_value = "20x20")]
    ybins: String,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long, default_value_t = 2e-3)]
    tol: f64,
    /// Replace the empirical joint by the product of its marginals.
    #[arg(long)]
    independent: bool,
    /// Additive Euler update X <- X + sigma dW instead of multiplicative.
    #[arg(long)]
    literal_additive: bool,
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

enum CliError {
    Usage(String),
    Domain(CondrepError),
}

impl From<CondrepError> for CliError {
    fn from(e: CondrepError) -> Self {
        match e {
            CondrepError::Parse(_) => CliError::Usage(e.to_string()),
            other => CliError::Domain(other),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn main() {
    if let Ok(v) = std::env::var("CONDREP_THREADS") {
        if let Ok(n) = v.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => {}
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            std::process::exit(2);
        }
        Err(CliError::Domain(e)) => {
            eprintln!("error: {e}");
            std::process::exit(1);
        }
    }
}

fn load_joint(path: &Path) -> Result<DiscreteJoint<BigRational>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("{}: {e}", path.display())))?;
    let v: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    Ok(DiscreteJoint::from_json(&v)?)
}

fn parse_rat(s: &str) -> Result<BigRational, CliError> {
    parse_rational(s).ok_or_else(|| usage(format!("bad rational '{s}'")))
}

fn print_json(v: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    match cli.cmd {
        Cmd::Check { joint, mode } => check(&joint, mode),
        Cmd::Solve { joint, f, tol, mode } => solve(&joint, &f, &tol, mode),
        Cmd::Operators {
            joint,
            xi,
            trials,
            max_i,
            seed,
        } => operators(&joint, xi, trials, max_i, seed),
        Cmd::Example3 { p, mu, f } => example3(&p, &mu, &f),
        Cmd::Counterexample {
            a,
            resid,
            mc,
            seed,
            out,
        } => counterexample(&a, resid, mc, seed, &out),
        Cmd::Mixing {
            a,
            m,
            n,
            eta,
            ahat,
            digits,
            seed,
        } => mixing(
            &a,
            &m,
            n,
            &eta,
            ahat.as_deref(),
            digits,
            seed,
            cli.format.unwrap_or(Format::Csv),
        ),
        Cmd::Calibrate(args) => calibrate(&args),
    }
}

fn check(path: &Path, mode: Mode) -> Result<(), CliError> {
    let dj = load_joint(path)?;
    let (report, certs) = match mode {
        Mode::Rational => {
            let report = decide_rplus(&dj)?;
            let mut certs = serde_json::Map::new();
            for (i, &ok) in report.indicator_feasible.iter().enumerate() {
                if !ok {
                    let mut f = vec![BigRational::zero(); dj.nrows()];
                    f[i] = num::One::one();
                    if let FeasibilityResult::Infeasible(c) = solve_nonneg(&dj, &f, &BigRational::zero())? {
                        certs.insert(
                            i.to_string(),
                            c.iter().map(|v| format_rational(v).into()).collect::<Vec<serde_json::Value>>().into(),
                        );
                    }
                }
            }
            (report, certs)
        }
        Mode::Float => {
            let djf = dj.to_f64();
            let report = decide_rplus(&djf)?;
            let mut certs = serde_json::Map::new();
            for (i, &ok) in report.indicator_feasible.iter().enumerate() {
                if !ok {
                    let mut f = vec![0.0; djf.nrows()];
                    f[i] = 1.0;
                    if let FeasibilityResult::Infeasible(c) = solve_nonneg(&djf, &f, &f64::tol())? {
                        certs.insert(i.to_string(), serde_json::json!(c));
                    }
                }
            }
            (report, certs)
        }
    };
    print_json(&serde_json::json!({
        "Rplus": report.rplus,
        "tau": report.tau,
        "D": dj.dirac_set(1e-12),
        "indicator_feasible": report.indicator_feasible,
        "routes_agree": report.routes_agree,
        "certificates": certs,
    }));
    Ok(())
}

fn solve(path: &Path, f_arg: &str, tol_arg: &str, mode: Mode) -> Result<(), CliError> {
    let dj = load_joint(path)?;
    let out = match mode {
        Mode::Rational => {
            let f: Vec<BigRational> = f_arg
                .split(',')
                .map(parse_rat)
                .collect::<Result<_, _>>()?;
            let tol = parse_rat(tol_arg)?;
            match solve_nonneg(&dj, &f, &tol)? {
                FeasibilityResult::Feasible(g) => serde_json::json!({
                    "feasible": true,
                    "g": g.iter().map(format_rational).collect::<Vec<_>>(),
                }),
                FeasibilityResult::Infeasible(c) => serde_json::json!({
                    "feasible": false,
                    "certificate": c.iter().map(format_rational).collect::<Vec<_>>(),
                }),
            }
        }
        Mode::Float => {
            let djf = dj.to_f64();
            let f: Vec<f64> = f_arg
                .split(',')
                .map(|s| s.trim().parse::<f64>().map_err(|e| usage(format!("bad f entry '{s}': {e}"))))
                .collect::<Result<_, _>>()?;
            let tol: f64 = tol_arg
                .parse()
                .map_err(|e| usage(format!("bad tol '{tol_arg}': {e}")))?;
            match solve_nonneg(&djf, &f, &tol)? {
                FeasibilityResult::Feasible(g) => serde_json::json!({"feasible": true, "g": g}),
                FeasibilityResult::Infeasible(c) => {
                    serde_json::json!({"feasible": false, "certificate": c})
                }
            }
        }
    };
    print_json(&out);
    Ok(())
}

fn operators(path: &Path, xi: bool, trials: usize, max_i: usize, seed: u64) -> Result<(), CliError> {
    let dj = load_joint(path)?.to_f64();
    let norms = operator_norm_bounds(&dj, trials, seed);
    let mut out = serde_json::json!({ "norms": norms });
    if xi {
        let report = xi_criterion(&dj, max_i)?;
        out["xi"] = serde_json::to_value(&report).expect("serializable");
    }
    print_json(&out);
    Ok(())
}

fn example3(p_arg: &str, mu_arg: &str, f_arg: &str) -> Result<(), CliError> {
    let p = parse_rat(p_arg)?;
    let k: usize = mu_arg
        .strip_prefix("uniform:")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| usage(format!("bad --mu '{mu_arg}', expected uniform:K")))?;
    let atoms: Vec<usize> = f_arg
        .strip_prefix("indicator:")
        .ok_or_else(|| usage(format!("bad --f '{f_arg}', expected indicator:i,j,...")))?
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| usage(format!("bad atom index '{s}'"))))
        .collect::<Result<_, _>>()?;
    if atoms.iter().any(|&i| i >= k) {
        return Err(usage("indicator atom out of range"));
    }
    let bm = BernoulliMixture::uniform(p, k);
    let f: Vec<BigRational> = (0..k)
        .map(|i| {
            if atoms.contains(&i) {
                num::One::one()
            } else {
                BigRational::zero()
            }
        })
        .collect();
    let (g, has_negative) = bernoulli_mixture_g(&bm, &f)?;
    let dj = bm.to_joint();
    let tg = apply_t(&dj, &g)?;
    let exact = tg == f;
    let negative_set: Vec<usize> = g
        .iter()
        .enumerate()
        .filter(|(_, v)| v.is_negative())
        .map(|(i, _)| i)
        .collect();
    let nonneg_solvable = solve_nonneg(&dj, &f, &BigRational::zero())?.is_feasible();
    print_json(&serde_json::json!({
        "g": g.iter().map(format_rational).collect::<Vec<_>>(),
        "Tg_equals_f": exact,
        "has_negative_part": has_negative,
        "negative_set": negative_set,
        "nonneg_solvable": nonneg_solvable,
    }));
    Ok(())
}

fn parse_interval(arg: &str) -> Result<IntervalSet, CliError> {
    let (lo, hi) = arg
        .split_once(':')
        .ok_or_else(|| usage(format!("bad interval '{arg}', expected lo:hi")))?;
    let lo = parse_rat(lo)?;
    let hi = parse_rat(hi)?;
    Ok(IntervalSet::new(vec![(lo, hi)])?)
}

fn counterexample(a_arg: &str, resid: f64, mc: usize, seed: u64, out: &Path) -> Result<(), CliError> {
    if !(resid > 0.0) {
        return Err(usage("--resid must be positive"));
    }
    let a = parse_interval(a_arg)?;
    let target: BigRational = Scalar::from_f64(resid);
    let rep = represent_indicator(&a, &target);
    std::fs::create_dir_all(out).map_err(CondrepError::from)?;
    let atlas_path = out.join("atlas.json");
    let mut fh = std::fs::File::create(&atlas_path).map_err(CondrepError::from)?;
    let atlas_json = rep.atlas.to_json();
    writeln!(
        fh,
        "{}",
        serde_json::to_string_pretty(&atlas_json).expect("serializable")
    )
    .map_err(CondrepError::from)?;

    let covered = a.difference(&rep.remainder);
    let mut summary = serde_json::json!({
        "iterations": rep.iterations,
        "remainder_length": rep.remainder.length().to_f64(),
        "covered_mu_mass": mu_measure(&covered).to_f64(),
        "atlas_pieces": rep.atlas.pieces.len(),
        "atlas": atlas_path.display().to_string(),
    });

    if mc > 0 {
        // Per-bin audit of E[g(Y)|X in bin] against the exact covered mass.
        let eval = AtlasEvaluator::new(&rep.atlas);
        let nb = 64usize;
        let mut count = vec![0u64; nb];
        let mut sum = vec![0.0; nb];
        let mut sumsq = vec![0.0; nb];
        let mut rng = stream(seed, 0);
        for _ in 0..mc {
            let (x, y, m) = sample_xy(&mut rng);
            let b = ((x * nb as f64) as usize).min(nb - 1);
            let v = eval.eval(m, y);
            count[b] += 1;
            sum[b] += v;
            sumsq[b] += v * v;
        }
        let csv_path = out.join("verification.csv");
        let mut w = csv::Writer::from_path(&csv_path).map_err(CondrepError::from)?;
        w.write_record(["bin_lo", "bin_hi", "count", "estimate", "truth", "std_error"])
            .map_err(CondrepError::from)?;
        for b in 0..nb {
            if count[b] == 0 {
                continue;
            }
            let bin = IntervalSet::interval((b as i64, nb as i64), (b as i64 + 1, nb as i64))?;
            let mb = mu_measure(&bin);
            let truth = if mb.is_zero() {
                0.0
            } else {
                (mu_measure(&covered.intersection(&bin)) / mb).to_f64()
            };
            let n = count[b] as f64;
            let mean = sum[b] / n;
            let var = (sumsq[b] / n - mean * mean).max(0.0);
            let se = (var / n).sqrt();
            w.write_record([
                format!("{}", b as f64 / nb as f64),
                format!("{}", (b + 1) as f64 / nb as f64),
                format!("{}", count[b]),
                format!("{mean}"),
                format!("{truth}"),
                format!("{se}"),
            ])
            .map_err(CondrepError::from)?;
        }
        w.flush().map_err(CondrepError::from)?;
        summary["verification"] = serde_json::json!(csv_path.display().to_string());
        summary["mc_samples"] = serde_json::json!(mc);
    }
    print_json(&summary);
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn mixing(
    a_arg: &str,
    m_arg: &str,
    n: usize,
    eta: &str,
    ahat: Option<&str>,
    digits: u32,
    seed: u64,
    format: Format,
) -> Result<(), CliError> {
    if eta != "uniform" {
        return Err(usage("only --eta uniform is supported"));
    }
    let a = parse_rat(a_arg)?;
    if a <= BigRational::zero() || a >= num::One::one() {
        return Err(usage("--a must lie strictly between 0 and 1"));
    }
    let ms: Vec<u32> = m_arg
        .split(',')
        .map(|s| s.trim().parse().map_err(|_| usage(format!("bad m '{s}'"))))
        .collect::<Result<_, _>>()?;
    let ahat_set = ahat.map(parse_interval).transpose()?;
    let scheme = DigitScheme::new(a, digits);
    let report = mixing_check(&scheme, ahat_set.as_ref(), &ms, n, seed);
    match format {
        Format::Json => print_json(&serde_json::to_value(&report).expect("serializable")),
        Format::Csv => {
            let mut w = csv::Writer::from_writer(std::io::stdout());
            w.write_record(["m", "estimate", "std_error", "target"])
                .map_err(CondrepError::from)?;
            for row in &report.rows {
                w.write_record([
                    row.m.to_string(),
                    row.estimate.to_string(),
                    row.std_error.to_string(),
                    row.target.to_string(),
                ])
                .map_err(CondrepError::from)?;
            }
            w.flush().map_err(CondrepError::from)?;
        }
    }
    Ok(())
}

fn parse_synth(arg: &str) -> Result<SurfaceModel, CliError> {
    let (kind, rest) = arg
        .split_once(':')
        .ok_or_else(|| usage(format!("bad --synth '{arg}'")))?;
    let nums = |s: &str| -> Result<Vec<f64>, CliError> {
        s.split(',')
            .map(|v| v.trim().parse().map_err(|_| usage(format!("bad number '{v}'"))))
            .collect()
    };
    match kind {
        "flat" => {
            let v = nums(rest)?;
            if v.len() != 1 || v[0] <= 0.0 {
                return Err(usage("flat surface needs one positive vol"));
            }
            Ok(SurfaceModel::Flat { vol: v[0] })
        }
        "term" => {
            let segments = rest
                .split(',')
                .map(|seg| {
                    let (t, v) = seg
                        .split_once('=')
                        .ok_or_else(|| usage(format!("bad segment '{seg}', expected t=vol")))?;
                    Ok((
                        t.trim().parse().map_err(|_| usage(format!("bad time '{t}'")))?,
                        v.trim().parse().map_err(|_| usage(format!("bad vol '{v}'")))?,
                    ))
                })
                .collect::<Result<Vec<(f64, f64)>, CliError>>()?;
            if segments.is_empty() {
                return Err(usage("term surface needs segments"));
            }
            Ok(SurfaceModel::TermStructure { segments })
        }
        "skew" => {
            let v = nums(rest)?;
            if v.len() != 4 {
                return Err(usage("skew surface needs w,mean1,vol1,vol2"));
            }
            Ok(SurfaceModel::SkewedMixture {
                w: v[0],
                mean1: v[1],
                vol1: v[2],
                vol2: v[3],
            })
        }
        other => Err(usage(format!("unknown synthetic surface '{other}'"))),
    }
}

fn load_surface_csv(path: &Path) -> Result<CallSurface, CliError> {
    let mut rdr = csv::Reader::from_path(path).map_err(CondrepError::from)?;
    let mut rows: Vec<(f64, f64, f64)> = vec![];
    for rec in rdr.records() {
        let rec = rec.map_err(CondrepError::from)?;
        if rec.len() != 3 {
            return Err(usage("surface CSV needs columns t,x,C"));
        }
        let p = |i: usize| -> Result<f64, CliError> {
            rec[i]
                .trim()
                .parse()
                .map_err(|_| usage(format!("bad surface value '{}'", &rec[i])))
        };
        rows.push((p(0)?, p(1)?, p(2)?));
    }
    let mut times: Vec<f64> = rows.iter().map(|r| r.0).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut strikes: Vec<f64> = rows.iter().map(|r| r.1).collect();
    strikes.sort_by(f64::total_cmp);
    strikes.dedup();
    let mut prices = vec![vec![f64::NAN; strikes.len()]; times.len()];
    for (t, x, c) in rows {
        let j = times.partition_point(|&a| a < t);
        let i = strikes.partition_point(|&a| a < x);
        prices[j][i] = c;
    }
    if prices.iter().flatten().any(|v| v.is_nan()) {
        return Err(usage("surface CSV must cover the full time x strike grid"));
    }
    Ok(CallSurface {
        times,
        strikes,
        prices,
    })
}

fn calibrate(args: &CalibrateArgs) -> Result<(), CliError> {
    let surface = match (&args.surface, &args.synth) {
        (Some(_), Some(_)) => return Err(usage("--surface and --synth are mutually exclusive")),
        (Some(path), None) => SurfaceSource::Grid(load_surface_csv(path)?),
        (None, Some(s)) => SurfaceSource::Analytic(parse_synth(s)?),
        (None, None) => return Err(usage("one of --surface or --synth is required")),
    };
    let spec: FeatureSpec = match &args.features {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| usage(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => CalibConfig::flat_default().spec,
    };
    if spec.lambdas.iter().any(|&l| l <= 0.0) {
        return Err(usage("feature lambdas must be positive"));
    }
    let (y1, y2) = args
        .ybins
        .split_once('x')
        .and_then(|(a, b)| Some((a.parse().ok()?, b.parse().ok()?)))
        .ok_or_else(|| usage(format!("bad --ybins '{}', expected N1xN2", args.ybins)))?;
    let mut cfg = CalibConfig::flat_default();
    cfg.surface = surface;
    cfg.spec = spec;
    cfg.particles = args.particles;
    cfg.steps = args.steps;
    cfg.h = args.h;
    cfg.xbins = args.xbins;
    cfg.ybins = (y1, y2);
    cfg.seed = args.seed;
    cfg.tol = args.tol;
    cfg.independent = args.independent;
    cfg.literal_additive = args.literal_additive;
    let report = run_calibration(&cfg)?;

    std::fs::create_dir_all(&args.out).map_err(CondrepError::from)?;
    let steps_path = args.out.join("steps.csv");
    let mut w = csv::Writer::from_path(&steps_path).map_err(CondrepError::from)?;
    w.write_record(["k", "residual", "feasibility"])
        .map_err(CondrepError::from)?;
    for s in &report.steps {
        w.write_record([
            s.k.to_string(),
            s.residual.to_string(),
            format!("{:?}", s.feasibility),
        ])
        .map_err(CondrepError::from)?;
    }
    w.flush().map_err(CondrepError::from)?;

    let reprice_path = args.out.join("reprice.csv");
    let mut w = csv::Writer::from_path(&reprice_path).map_err(CondrepError::from)?;
    w.write_record(["t", "x", "model_price", "market_price", "mc_se"])
        .map_err(CondrepError::from)?;
    for r in &report.reprice {
        w.write_record([
            r.t.to_string(),
            r.strike.to_string(),
            r.model_price.to_string(),
            r.market_price.to_string(),
            r.mc_se.to_string(),
        ])
        .map_err(CondrepError::from)?;
    }
    w.flush().map_err(CondrepError::from)?;

    print_json(&serde_json::json!({
        "steps": report.steps.len(),
        "clip_count": report.clip_count,
        "steps_csv": steps_path.display().to_string(),
        "reprice_csv": reprice_path.display().to_string(),
    }));
    Ok(())
}
