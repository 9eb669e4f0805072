use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use serde::Serialize;

use vwd_core::eta_hilb::hilb_euler_table;
use vwd_core::lattice::{gauss_sum, GaussSumProvider, OrderFilter, ProviderMode};
use vwd_core::modular::{check_s_rules_all, check_sduality_prefactor, parse_complex, CheckReport};
use vwd_core::ntheory::{divisors, is_prime};
use vwd_core::partitions::{
    multiple_cover, rank4_display_comb, z_ess_comb, z_ess_shifted_comb, z_opt_comb, z_opt_twisted_comb,
    z_prime_assembled_comb, z_prime_closed_comb, z_total_rho_comb, z_trivial_comb, GCombination, GerbeKind, TermDiff,
};
use vwd_core::qseries::{format_rational64, parse_rational64};
use vwd_core::{Error, Execution, PuiseuxSeries};

const FALLBACK_PREC: &str = "10";

#[derive(Parser, Debug)]
#[command(name = "vwd", version, about = "Exact SU(r)/Z_r Vafa-Witten partition functions of K3 surfaces")]
struct Cli {
    /// Write to this file instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    /// Run everything on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// chi(Hilb^n K3) for n = 0..=max, as CSV.
    Hilb {
        #[arg(long)]
        max: usize,
    },
    /// The Gauss sum over (Z_o)^22 with phase zeta_o^(-s g.g/2).
    Gauss {
        #[arg(long)]
        order: u64,
        #[arg(long)]
        twist: i64,
        /// Only sum over elements of exact order `order`.
        #[arg(long)]
        exact: bool,
    },
    /// Expand a partition function.
    Zfun(ZfunArgs),
    #[command(subcommand)]
    Verify(Verify),
    #[command(subcommand)]
    Modcheck(Modcheck),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Kind {
    Trivial,
    Ess,
    Opt,
    OptTwisted,
    ZprimeClosed,
    ZprimeAssembled,
    Ztotal,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Provider {
    /// `o^11` in place of each exact-order sum.
    Paper,
    Lattice,
}

impl From<Provider> for ProviderMode {
    fn from(p: Provider) -> Self {
        match p {
            Provider::Paper => ProviderMode::Asserted,
            Provider::Lattice => ProviderMode::Lattice,
        }
    }
}

#[derive(Args, Debug)]
struct PrecArg {
    /// Series order, exclusive; a rational such as 7 or 15/2.
    #[arg(long, env = "VWD_PREC_DEFAULT", default_value = FALLBACK_PREC)]
    prec: String,
}

impl PrecArg {
    fn value(&self) -> Result<Rational64, Error> {
        let p = parse_rational64(&self.prec)?;
        if p < Rational64::from(1) {
            return Err(Error::OutOfRange(format!("precision {} is below 1", self.prec)));
        }
        Ok(p)
    }
}

#[derive(Args, Debug)]
struct ZfunArgs {
    #[arg(long, value_enum)]
    kind: Kind,
    #[arg(long)]
    rank: u64,
    /// Brauer order, for opt and opt-twisted.
    #[arg(long)]
    order: Option<u64>,
    /// |g_ess|, for ess.
    #[arg(long)]
    ess_order: Option<u64>,
    /// Twist s of e^(2 pi i s c_2), for opt-twisted.
    #[arg(long)]
    twist: Option<i64>,
    /// Picard number, for ztotal.
    #[arg(long)]
    rho: Option<u32>,
    #[arg(long, value_enum, default_value = "lattice")]
    provider: Provider,
    /// Keep the shift dropped by the closed form of ess.
    #[arg(long)]
    shifted: bool,
    #[command(flatten)]
    prec: PrecArg,
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    #[arg(long)]
    csv: bool,
}

#[derive(Subcommand, Debug)]
enum Verify {
    /// Compare the assembled sum over gerbes with its closed form.
    MainIdentity {
        #[arg(long)]
        rank: u64,
        #[command(flatten)]
        prec: PrecArg,
        #[arg(long, value_enum, default_value = "lattice")]
        provider: Provider,
        /// Fail on mismatch at every rank, not only where equality is forced.
        #[arg(long)]
        strict: bool,
    },
    /// The rank-4 closed form against its five-term display and the assembled sum.
    Rank4Example {
        #[command(flatten)]
        prec: PrecArg,
    },
    /// Closed forms against direct multiple-cover summation.
    Oracle {
        #[arg(long)]
        rank: u64,
        #[command(flatten)]
        prec: PrecArg,
    },
}

#[derive(Subcommand, Debug)]
enum Modcheck {
    /// The three S-transformation rules at the standard sample points.
    SRules {
        #[arg(long)]
        rank: u64,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
    /// Z(SU(r); -1/tau) against the prefactor times Z'(tau).
    SDuality {
        #[arg(long)]
        rank: u64,
        #[arg(long, allow_hyphen_values = true)]
        tau: String,
        #[arg(long, default_value_t = 1e-6)]
        tol: f64,
    },
}

/// A normal result, or a verification that came out negative.
enum Status {
    Ok,
    Mismatch,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(Status::Ok) => ExitCode::SUCCESS,
        Ok(Status::Mismatch) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            let usage = e.downcast_ref::<Error>().is_some_and(is_usage_error);
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}

fn is_usage_error(e: &Error) -> bool {
    matches!(
        e,
        Error::OrderDoesNotDivide { .. }
            | Error::EvenModulus(_)
            | Error::OutOfRange(_)
            | Error::InvalidSubstitution { .. }
            | Error::NotInvertible { .. }
            | Error::ImaginaryTooSmall(_)
            | Error::Parse(_)
    )
}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    Error::OutOfRange(msg.into()).into()
}

fn run(cli: &Cli) -> anyhow::Result<Status> {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    let mut out: Box<dyn Write> = match &cli.output {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    let status = match &cli.command {
        Command::Hilb { max } => {
            let table = hilb_euler_table(*max);
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record(["n", "chi"])?;
            for (n, c) in table.values.iter().enumerate() {
                w.write_record([n.to_string(), c.to_string()])?;
            }
            w.flush()?;
            Status::Ok
        }
        Command::Gauss { order, twist, exact } => {
            if *order == 0 {
                return Err(usage("order must be positive"));
            }
            let filter = if *exact { OrderFilter::Exact } else { OrderFilter::All };
            let value = gauss_sum(*order, *twist, filter);
            writeln!(out, "{}", serde_json::to_string(&value)?)?;
            if let Some(q) = value.as_rational() {
                writeln!(out, "{}", vwd_core::cyclotomic::format_rational(&q))?;
            }
            Status::Ok
        }
        Command::Zfun(args) => zfun(args, exec, &mut out)?,
        Command::Verify(v) => verify(v, exec, &mut out)?,
        Command::Modcheck(m) => modcheck(m, exec, &mut out)?,
    };
    out.flush()?;
    Ok(status)
}

fn required<T: Copy>(value: Option<T>, flag: &str, kind: &str) -> anyhow::Result<T> {
    value.ok_or_else(|| usage(format!("--kind {kind} needs --{flag}")))
}

fn zfun_comb(args: &ZfunArgs, exec: Execution) -> anyhow::Result<GCombination> {
    let r = args.rank;
    let comb = match args.kind {
        Kind::Trivial => z_trivial_comb(r)?,
        Kind::Ess => {
            let s = required(args.ess_order, "ess-order", "ess")?;
            if args.shifted {
                z_ess_shifted_comb(r, s)?
            } else {
                z_ess_comb(r, s)?
            }
        }
        Kind::Opt => z_opt_comb(r, required(args.order, "order", "opt")?)?,
        Kind::OptTwisted => z_opt_twisted_comb(
            r,
            required(args.order, "order", "opt-twisted")?,
            required(args.twist, "twist", "opt-twisted")?,
        )?,
        Kind::ZprimeClosed => z_prime_closed_comb(r)?,
        Kind::ZprimeAssembled => {
            let provider = GaussSumProvider::new(args.provider.into());
            vwd_core::partitions::z_prime_assembled_comb_with(r, &provider, exec)?
        }
        Kind::Ztotal => z_total_rho_comb(r, required(args.rho, "rho", "ztotal")?)?,
    };
    Ok(comb)
}

fn zfun(args: &ZfunArgs, exec: Execution, out: &mut dyn Write) -> anyhow::Result<Status> {
    let prec = args.prec.value()?;
    let comb = zfun_comb(args, exec)?;
    let series = comb.to_series(prec)?;
    if args.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&series)?)?;
    } else if args.csv {
        write_series_csv(&series, out)?;
    } else {
        writeln!(out, "{comb}")?;
        writeln!(out, "= {series}")?;
    }
    Ok(Status::Ok)
}

fn write_series_csv(series: &PuiseuxSeries, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["exp", "coeff"])?;
    for (x, c) in series.terms() {
        w.write_record([format_rational64(x), c.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct CoefficientDiff {
    exp: String,
    left: String,
    right: String,
}

fn coefficient_diff(a: &PuiseuxSeries, b: &PuiseuxSeries) -> Vec<CoefficientDiff> {
    a.differences(b)
        .into_iter()
        .map(|(x, l, r)| CoefficientDiff {
            exp: format_rational64(&x),
            left: l.to_string(),
            right: r.to_string(),
        })
        .collect()
}

#[derive(Serialize)]
struct IdentityReport {
    check: &'static str,
    rank: u64,
    prec: String,
    provider: Option<&'static str>,
    /// Whether a mismatch fails the command without `--strict`.
    forced: bool,
    equal: bool,
    left: &'static str,
    right: &'static str,
    families: Vec<TermDiff>,
    coefficients: Vec<CoefficientDiff>,
}

fn compare(
    check: &'static str,
    rank: u64,
    prec: Rational64,
    sides: [(&'static str, &GCombination); 2],
    forced: bool,
) -> anyhow::Result<IdentityReport> {
    let [(left, a), (right, b)] = sides;
    let (sa, sb) = (a.to_series(prec)?, b.to_series(prec)?);
    let families = a.term_differences(b);
    let coefficients = coefficient_diff(&sa, &sb);
    Ok(IdentityReport {
        check,
        rank,
        prec: format_rational64(&prec),
        provider: None,
        forced,
        equal: families.is_empty() && coefficients.is_empty(),
        left,
        right,
        families,
        coefficients,
    })
}

fn emit<T: Serialize>(value: &T, out: &mut dyn Write) -> anyhow::Result<()> {
    writeln!(out, "{}", serde_json::to_string_pretty(value)?)?;
    Ok(())
}

fn verify(v: &Verify, exec: Execution, out: &mut dyn Write) -> anyhow::Result<Status> {
    match v {
        Verify::MainIdentity { rank, prec, provider, strict } => {
            let prec = prec.value()?;
            let p = GaussSumProvider::new((*provider).into());
            let assembled = vwd_core::partitions::z_prime_assembled_comb_with(*rank, &p, exec)?;
            let closed = z_prime_closed_comb(*rank)?;
            let forced = *rank == 1 || *rank == 4 || is_prime(*rank);
            let mut rep = compare(
                "main-identity",
                *rank,
                prec,
                [("assembled", &assembled), ("closed", &closed)],
                forced,
            )?;
            rep.provider = Some(match provider {
                Provider::Paper => "paper",
                Provider::Lattice => "lattice",
            });
            emit(&rep, out)?;
            Ok(if rep.equal || !(forced || *strict) { Status::Ok } else { Status::Mismatch })
        }
        Verify::Rank4Example { prec } => {
            let prec = prec.value()?;
            let closed = z_prime_closed_comb(4)?;
            let display = rank4_display_comb();
            let assembled = z_prime_assembled_comb(4, &GaussSumProvider::new(ProviderMode::Lattice))?;
            let reps = [
                compare("rank4-display", 4, prec, [("closed", &closed), ("display", &display)], true)?,
                compare("rank4-assembled", 4, prec, [("assembled", &assembled), ("closed", &closed)], true)?,
            ];
            emit(&reps, out)?;
            Ok(if reps.iter().all(|r| r.equal) { Status::Ok } else { Status::Mismatch })
        }
        Verify::Oracle { rank, prec } => {
            let prec = prec.value()?;
            let rows = oracle_rows(*rank, prec)?;
            emit(&rows, out)?;
            Ok(if rows.iter().all(|r| r.equal) { Status::Ok } else { Status::Mismatch })
        }
    }
}

#[derive(Serialize)]
struct OracleRow {
    kind: String,
    equal: bool,
    coefficients: Vec<CoefficientDiff>,
}

fn oracle_rows(r: u64, prec: Rational64) -> anyhow::Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    let mut push = |kind: String, comb: GCombination, gerbe: GerbeKind| -> anyhow::Result<()> {
        let closed = comb.to_series(prec)?;
        let oracle = multiple_cover(r, gerbe, prec)?;
        let coefficients = coefficient_diff(&closed, &oracle);
        rows.push(OracleRow {
            kind,
            equal: coefficients.is_empty(),
            coefficients,
        });
        Ok(())
    };
    push("trivial".into(), z_trivial_comb(r)?, GerbeKind::Trivial)?;
    for s in 1..=r {
        push(format!("ess s={s}"), z_ess_comb(r, s)?, GerbeKind::Essential { s })?;
    }
    for o in divisors(r).into_iter().filter(|&o| o > 1) {
        for s in 0..o as i64 {
            push(format!("opt o={o} s={s}"), z_opt_twisted_comb(r, o, s)?, GerbeKind::Optimal { o, twist: s })?;
        }
    }
    Ok(rows)
}

fn modcheck(m: &Modcheck, exec: Execution, out: &mut dyn Write) -> anyhow::Result<Status> {
    let reports: Vec<CheckReport> = match m {
        Modcheck::SRules { rank, tol } => check_s_rules_all(*rank, *tol, exec)?,
        Modcheck::SDuality { rank, tau, tol } => {
            // Only the literal comparison decides the status; the fit is informational.
            let reps = check_sduality_prefactor(*rank, parse_complex(tau)?, *tol)?;
            emit(&reps, out)?;
            return Ok(if reps[0].pass { Status::Ok } else { Status::Mismatch });
        }
    };
    emit(&reports, out)?;
    Ok(if reports.iter().all(|r| r.pass) { Status::Ok } else { Status::Mismatch })
}
