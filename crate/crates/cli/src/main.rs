use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use shrinking_beta::algebra::{beta_root, Extended, Precision};
use shrinking_beta::dynamics::{
    derive_seed, orbit, sample_return_times, write_orbit_csv, CoinStream, PointState,
};
use shrinking_beta::markov::{
    check_inequality, entropy_constants_in, sample_chain, EntropyConstants, MarkovChain,
    MarkovReport,
};
use shrinking_beta::measures::{empirical_entropy, uniform_sample, InducedMeasureSpec};
use shrinking_beta::report::{round_sig, sig12};
use shrinking_beta::symbolic::alphabet_size;
use shrinking_beta::verify::{self, Fault, Suite, VerifyOptions};
use shrinking_beta::{AlgebraicBeta, Error};

/// Shrinking random β-transformation toolkit.
#[derive(Debug, Parser)]
#[command(name = "shrinking-beta", version, about)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Family index, or an inclusive range `A..B`.
    #[arg(long, global = true, default_value = "3", value_parser = parse_n)]
    n: NSpec,
    /// Inclusive range `A..B`; overrides `--n`.
    #[arg(long = "n-range", global = true, value_parser = parse_range)]
    n_range: Option<NSpec>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Sample size for the Monte Carlo parts of a command.
    #[arg(long, global = true)]
    samples: Option<usize>,
    #[arg(long, global = true, value_enum, default_value_t = PrecisionArg::Double)]
    precision: PrecisionArg,
    /// Output format; each command has its own default.
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(long = "log-base", global = true, value_enum, default_value_t = LogBase::E)]
    log_base: LogBase,
    /// Write the artifact here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// β, a, b, λ, cd and the entropy constants.
    Constants,
    /// Orbit of K as CSV, with a return-time histogram on stderr.
    Simulate {
        /// Steps of K in the orbit dump.
        #[arg(long, default_value_t = 100)]
        steps: usize,
        /// Starting point; defaults to a seeded uniform point of [a, b].
        #[arg(long)]
        x0: Option<f64>,
    },
    /// Markov partition, adjacency matrix and Perron data (json), or the
    /// entropy-margin table (csv).
    Markov,
    /// Parry measure of the Markov chain, with an optional sampled estimate
    /// of its entropy.
    Parry,
    /// Run verification suites; exit status 1 if any check fails.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        #[arg(long, hide = true)]
        inject_fault: Option<String>,
    },
    /// Entropy constants, with sampled estimates when `--samples` is set.
    Entropy,
}

#[derive(Debug, Clone, Copy)]
struct NSpec {
    lo: usize,
    hi: usize,
}

impl NSpec {
    fn range(self) -> RangeInclusive<usize> {
        self.lo..=self.hi
    }

    fn is_single(self) -> bool {
        self.lo == self.hi
    }
}

fn parse_index(s: &str) -> Result<usize, String> {
    let n: usize = s
        .trim()
        .parse()
        .map_err(|_| format!("`{s}` is not an integer"))?;
    if n < 3 {
        return Err(format!("n must be at least 3, got {n}"));
    }
    Ok(n)
}

fn parse_range(s: &str) -> Result<NSpec, String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("`{s}` is not a range A..B"))?;
    let (lo, hi) = (parse_index(a)?, parse_index(b.trim_start_matches('='))?);
    if hi < lo {
        return Err(format!("empty range {lo}..{hi}"));
    }
    Ok(NSpec { lo, hi })
}

fn parse_n(s: &str) -> Result<NSpec, String> {
    if s.contains("..") {
        parse_range(s)
    } else {
        let n = parse_index(s)?;
        Ok(NSpec { lo: n, hi: n })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PrecisionArg {
    Double,
    Extended,
}

impl From<PrecisionArg> for Precision {
    fn from(p: PrecisionArg) -> Self {
        match p {
            PrecisionArg::Double => Precision::Double,
            PrecisionArg::Extended => Precision::Extended,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum LogBase {
    #[value(name = "e", alias = "natural")]
    E,
    #[value(name = "2", alias = "bits")]
    Two,
}

impl LogBase {
    fn scale(self, h: f64) -> f64 {
        match self {
            LogBase::E => h,
            LogBase::Two => h / std::f64::consts::LN_2,
        }
    }

    fn name(self) -> &'static str {
        match self {
            LogBase::E => "e",
            LogBase::Two => "2",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SuiteArg {
    Gls,
    Symbolic,
    Markov,
    Measures,
    All,
}

impl From<SuiteArg> for Suite {
    fn from(s: SuiteArg) -> Self {
        match s {
            SuiteArg::Gls => Suite::Gls,
            SuiteArg::Symbolic => Suite::Symbolic,
            SuiteArg::Markov => Suite::Markov,
            SuiteArg::Measures => Suite::Measures,
            SuiteArg::All => Suite::All,
        }
    }
}

/// Why a run did not succeed.
enum Failure {
    /// Some verification check failed.
    Checks,
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<io::Error> for Failure {
    fn from(e: io::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<csv::Error> for Failure {
    fn from(e: csv::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(e: serde_json::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => Cli::command().error(ErrorKind::ValueValidation, msg).exit(),
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let c = &cli.common;
    let ns = c.n_range.unwrap_or(c.n);
    match &cli.command {
        Command::Constants => constants(c, ns),
        Command::Simulate { steps, x0 } => simulate(c, ns, *steps, *x0),
        Command::Markov => markov(c, ns),
        Command::Parry => parry(c, ns),
        Command::Verify {
            suite,
            inject_fault,
        } => verify_cmd(c, ns, (*suite).into(), inject_fault.as_deref()),
        Command::Entropy => entropy(c, ns),
    }
}

fn sink(out: &Option<PathBuf>) -> io::Result<Box<dyn Write>> {
    Ok(match out {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn write_json<T: Serialize>(c: &Common, value: &T) -> Outcome {
    let mut w = sink(&c.out)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

/// Rows of already formatted cells under a header.
fn write_csv(c: &Common, header: &[&str], rows: &[Vec<String>]) -> Outcome {
    let mut w = csv::Writer::from_writer(sink(&c.out)?);
    w.write_record(header)?;
    for r in rows {
        w.write_record(r)?;
    }
    w.flush()?;
    Ok(())
}

/// A single object for one `n`, an array for a range.
fn one_or_many(ns: NSpec, mut items: Vec<Value>) -> Value {
    if ns.is_single() {
        items.pop().unwrap_or(Value::Null)
    } else {
        Value::Array(items)
    }
}

fn constants_for(
    n: usize,
    precision: Precision,
) -> Result<(AlgebraicBeta, f64, EntropyConstants<f64>), Error> {
    let ctx = AlgebraicBeta::new(n)?;
    let beta = if precision == Precision::Extended {
        f64::from(beta_root::<Extended>(n)?)
    } else {
        ctx.beta
    };
    Ok((ctx, beta, entropy_constants_in(n, precision)?))
}

fn constants(c: &Common, ns: NSpec) -> Outcome {
    let lb = c.log_base;
    let mut rows = Vec::new();
    for n in ns.range() {
        let (ctx, beta, e) = constants_for(n, c.precision.into())?;
        rows.push([
            n as f64,
            beta,
            ctx.a,
            ctx.b,
            e.lambda,
            e.cd,
            lb.scale(e.h_k),
            lb.scale(e.h_i_max),
            lb.scale(e.h_i_induced),
            lb.scale(e.margin),
        ]);
    }
    const HEADER: [&str; 10] = [
        "n",
        "beta",
        "a",
        "b",
        "lambda",
        "cd",
        "h_K",
        "h_I_max",
        "h_I_induced",
        "margin",
    ];
    match c.format.unwrap_or(Format::Json) {
        Format::Csv => write_csv(
            c,
            &HEADER,
            &rows.iter().map(|r| fmt_row(r)).collect::<Vec<_>>(),
        ),
        Format::Json => {
            let items = rows
                .iter()
                .map(|r| {
                    let mut m = serde_json::Map::new();
                    m.insert("n".into(), json!(r[0] as usize));
                    for (k, v) in HEADER.iter().zip(r).skip(1) {
                        m.insert((*k).into(), json!(round_sig(*v)));
                    }
                    m.insert("log_base".into(), json!(lb.name()));
                    Value::Object(m)
                })
                .collect();
            write_json(c, &one_or_many(ns, items))
        }
    }
}

fn fmt_row(r: &[f64]) -> Vec<String> {
    r.iter()
        .enumerate()
        .map(|(i, &x)| {
            if i == 0 {
                (x as usize).to_string()
            } else {
                sig12(x)
            }
        })
        .collect()
}

fn single(ns: NSpec, command: &str) -> Result<usize, Failure> {
    if ns.is_single() {
        Ok(ns.lo)
    } else {
        Err(Failure::Usage(format!("`{command}` takes a single --n")))
    }
}

fn simulate(c: &Common, ns: NSpec, steps: usize, x0: Option<f64>) -> Outcome {
    let n = single(ns, "simulate")?;
    let ctx = AlgebraicBeta::new(n)?;
    let x = match x0 {
        Some(x) if !(0.0..=ctx.domain_max).contains(&x) => {
            return Err(Failure::Usage(format!(
                "--x0 {x} outside the domain [0, {}]",
                ctx.domain_max
            )))
        }
        Some(x) => x,
        None => {
            let u = (derive_seed(c.seed, 0) >> 11) as f64 / (1u64 << 53) as f64;
            ctx.a + u * ctx.switch_len()
        }
    };
    let state = PointState::new(CoinStream::seeded(derive_seed(c.seed, 1)), x);
    let records = orbit(&state, steps, &ctx).map_err(|e| {
        Error::InvariantViolation(format!(
            "orbit from x0 = {x} (n = {n}, seed = {}): {e}",
            c.seed
        ))
    })?;

    // return-time law from Lebesgue-random starts, 100 induced steps each
    let samples = c.samples.unwrap_or(100_000);
    let per_start = 100;
    let hist = sample_return_times(&ctx, c.seed, samples.div_ceil(per_start), per_start)?;
    let law: Vec<Value> = (2..=n)
        .map(|t| {
            let expected = 1.0 / ctx.pow(t);
            json!({
                "t": t,
                "count": hist.counts[t],
                "freq": round_sig(hist.freq(t)),
                "expected": round_sig(expected),
                "z": round_sig(hist.z_score(t, expected)),
            })
        })
        .collect();

    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let mut w = sink(&c.out)?;
            write_orbit_csv(&mut w, &records)?;
            w.flush()?;
            let mut e = io::stderr().lock();
            writeln!(e, "t,count,freq,expected,z")?;
            for row in &law {
                writeln!(
                    e,
                    "{},{},{},{},{}",
                    row["t"], row["count"], row["freq"], row["expected"], row["z"]
                )?;
            }
            writeln!(
                e,
                "# induced steps {}, out of range {}",
                hist.total,
                hist.out_of_range()
            )?;
            Ok(())
        }
        Format::Json => {
            let orbit: Vec<Value> = records
                .iter()
                .map(|r| {
                    json!({
                        "step": r.step,
                        "x": round_sig(r.x),
                        "digit": r.digit,
                        "in_switch": u8::from(r.in_switch),
                        "coin_cursor": r.coin_cursor,
                    })
                })
                .collect();
            write_json(
                c,
                &json!({
                    "n": n,
                    "seed": c.seed,
                    "x0": round_sig(x),
                    "orbit": orbit,
                    "return_times": law,
                    "induced_steps": hist.total,
                    "out_of_range": hist.out_of_range(),
                }),
            )
        }
    }
}

fn markov_report(n: usize, c: &Common) -> Result<MarkovReport, Error> {
    let ctx = AlgebraicBeta::new(n)?;
    let mut r = MarkovChain::build(&ctx)?.report();
    let e = entropy_constants_in(n, c.precision.into())?;
    let lb = c.log_base;
    r.lambda = round_sig(e.lambda);
    r.cd = round_sig(e.cd);
    r.h_k = round_sig(lb.scale(e.h_k));
    r.h_i_induced = round_sig(lb.scale(e.h_i_induced));
    r.h_i_max = round_sig(lb.scale(e.h_i_max));
    r.margin = round_sig(lb.scale(e.margin));
    Ok(r)
}

fn markov(c: &Common, ns: NSpec) -> Outcome {
    match c.format.unwrap_or(Format::Json) {
        Format::Json => {
            let items = ns
                .range()
                .map(|n| Ok(serde_json::to_value(markov_report(n, c)?)?))
                .collect::<Result<Vec<_>, Failure>>()?;
            write_json(c, &one_or_many(ns, items))
        }
        Format::Csv => {
            let lb = c.log_base;
            let rows = check_inequality(ns.range(), c.precision.into())?
                .iter()
                .map(|r| {
                    fmt_row(&[
                        r.n as f64,
                        r.lambda,
                        lb.scale(r.h_max),
                        lb.scale(r.h_induced),
                        lb.scale(r.margin),
                    ])
                })
                .collect::<Vec<_>>();
            write_csv(c, &["n", "lambda", "h_max", "h_induced", "margin"], &rows)
        }
    }
}

fn parry(c: &Common, ns: NSpec) -> Outcome {
    let n = single(ns, "parry")?;
    let ctx = AlgebraicBeta::new(n)?;
    let chain = MarkovChain::build(&ctx)?;
    let lb = c.log_base;
    match c.format.unwrap_or(Format::Json) {
        Format::Csv => {
            let rows = chain
                .cells
                .iter()
                .zip(&chain.p)
                .map(|(cell, p)| {
                    vec![
                        cell.label.clone(),
                        sig12(cell.lo),
                        sig12(cell.hi),
                        sig12(*p),
                    ]
                })
                .collect::<Vec<_>>();
            write_csv(c, &["label", "lo", "hi", "p"], &rows)
        }
        Format::Json => {
            let mut doc = json!({
                "n": n,
                "labels": chain.cells.iter().map(|x| x.label.clone()).collect::<Vec<_>>(),
                "p": chain.p.iter().map(|&x| round_sig(x)).collect::<Vec<_>>(),
                "P_trans": chain.transition.iter()
                    .map(|r| r.iter().map(|&x| round_sig(x)).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "entropy_rate": round_sig(lb.scale(chain.entropy_rate())),
                "log_lambda": round_sig(lb.scale(chain.lambda.ln())),
                "log_base": lb.name(),
            });
            if let Some(samples) = c.samples {
                let path = sample_chain(&chain, samples, c.seed)?;
                let h = empirical_entropy(&path, 2, chain.p.len())?;
                doc["samples"] = json!(samples);
                doc["seed"] = json!(c.seed);
                doc["empirical_entropy_block2"] = json!(round_sig(lb.scale(h)));
            }
            write_json(c, &doc)
        }
    }
}

fn verify_cmd(c: &Common, ns: NSpec, suite: Suite, fault: Option<&str>) -> Outcome {
    let fault = fault
        .map(|f| f.parse::<Fault>())
        .transpose()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let opts = VerifyOptions {
        seed: c.seed,
        precision: c.precision.into(),
        samples: c.samples.unwrap_or(10_000),
        fault,
    };
    let report = verify::run(suite, ns.range(), &opts)?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => write_json(c, &report)?,
        Format::Csv => {
            let rows = report
                .checks
                .iter()
                .map(|r| {
                    vec![
                        r.n.to_string(),
                        r.suite.clone(),
                        r.check.clone(),
                        r.params.to_string(),
                        sig12(r.lhs),
                        sig12(r.rhs),
                        sig12(r.deviation),
                        sig12(r.tolerance),
                        r.pass.to_string(),
                    ]
                })
                .collect::<Vec<_>>();
            write_csv(
                c,
                &[
                    "n",
                    "suite",
                    "check",
                    "params",
                    "lhs",
                    "rhs",
                    "deviation",
                    "tolerance",
                    "pass",
                ],
                &rows,
            )?;
        }
    }
    for f in report.failures() {
        eprintln!(
            "FAIL n={} {}/{}: lhs {} rhs {} deviation {} tolerance {}",
            f.n,
            f.suite,
            f.check,
            sig12(f.lhs),
            sig12(f.rhs),
            sig12(f.deviation),
            sig12(f.tolerance)
        );
    }
    if report.pass {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

fn entropy(c: &Common, ns: NSpec) -> Outcome {
    let lb = c.log_base;
    let mut header = vec![
        "n",
        "h_K",
        "h_I_induced",
        "h_I_max",
        "margin",
        "h_K_mme_lift",
    ];
    if c.samples.is_some() {
        header.extend(["empirical_parry_block2", "empirical_uniform_block1"]);
    }
    let mut rows = Vec::new();
    for n in ns.range() {
        let ctx = AlgebraicBeta::new(n)?;
        let e = entropy_constants_in(n, c.precision.into())?;
        let mme = InducedMeasureSpec::mme(n)?;
        let lift = mme.induced_entropy(&ctx)? / mme.expected_return_time(&ctx)?;
        let mut row = vec![
            n as f64,
            lb.scale(e.h_k),
            lb.scale(e.h_i_induced),
            lb.scale(e.h_i_max),
            lb.scale(e.margin),
            lb.scale(lift),
        ];
        if let Some(samples) = c.samples {
            let chain = MarkovChain::build(&ctx)?;
            let path = sample_chain(&chain, samples, derive_seed(c.seed, n as u64))?;
            row.push(lb.scale(empirical_entropy(&path, 2, chain.p.len())?));
            let k = alphabet_size(n);
            let u = uniform_sample(k, samples, derive_seed(c.seed ^ 0x5eed, n as u64));
            row.push(lb.scale(empirical_entropy(&u, 1, k)?));
        }
        rows.push(row);
    }
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => write_csv(
            c,
            &header,
            &rows.iter().map(|r| fmt_row(r)).collect::<Vec<_>>(),
        ),
        Format::Json => {
            let items = rows
                .iter()
                .map(|r| {
                    let mut m = serde_json::Map::new();
                    m.insert("n".into(), json!(r[0] as usize));
                    for (k, v) in header.iter().zip(r).skip(1) {
                        m.insert((*k).into(), json!(round_sig(*v)));
                    }
                    m.insert("log_base".into(), json!(lb.name()));
                    Value::Object(m)
                })
                .collect();
            write_json(c, &one_or_many(ns, items))
        }
    }
}
