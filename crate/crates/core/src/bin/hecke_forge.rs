use clap::{Parser, Subcommand, ValueEnum};
use hecke_forge::cli::{run, Command, OutputFormat, RSpec, SuiteConfig};
use hecke_forge::localfield::FieldMode;

#[derive(Parser)]
#[command(
    name = "hecke-forge",
    about = "Exact verification suites for Hecke operators on compact inductions for GL(2) of a local field",
    version
)]
struct Args {
    #[command(subcommand)]
    command: Cli,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    /// Laurent polynomials over the residue field
    EqualChar,
    /// exact p-power rationals (f = 1)
    Qp,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputArg {
    Text,
    Json,
}

#[derive(clap::Args)]
struct Common {
    /// residue characteristic
    #[arg(long, default_value_t = 3)]
    p: u32,
    /// residue degree
    #[arg(long, default_value_t = 2)]
    f: usize,
    /// weight digits, comma separated (or "zero" / "q-1")
    #[arg(long, default_value = "9,13")]
    r: String,
    /// truncation depth for coset enumerations
    #[arg(long, default_value_t = 2)]
    depth: u32,
    /// extra depth for membership searches
    #[arg(long, default_value_t = 2)]
    buffer: u32,
    /// local field mode
    #[arg(long, value_enum, default_value_t = ModeArg::EqualChar)]
    mode: ModeArg,
    /// report format
    #[arg(long, value_enum, default_value_t = OutputArg::Text)]
    output: OutputArg,
    /// treat inconclusive verdicts as failures
    #[arg(long)]
    strict: bool,
    /// enable the data-parallel map phases
    #[arg(long)]
    parallel: bool,
}

#[derive(Subcommand)]
enum Cli {
    /// Digit-wise binomials against exact ones
    Lucas(Common),
    /// The binomial-sum lemma via two independent routes
    BinomLemma(Common),
    /// Surjectivity and kernel of the evaluation map
    Psi(Common),
    /// The two-summand decomposition of the theta quotient
    P1(Common),
    /// The involution, three-term and factorization relations
    Relations(Common),
    /// The comparison map between the two inductions
    Comparison(Common),
    /// Self-extension presentations and invariance certificates
    Selfext(Common),
    /// Every applicable suite
    All(Common),
}

fn parse_r(s: &str) -> Result<RSpec, String> {
    match s {
        "zero" | "0" => Ok(RSpec::Zero),
        "q-1" | "q1" => Ok(RSpec::QMinus1),
        _ => {
            let digits: Result<Vec<u32>, _> = s.split(',').map(|t| t.trim().parse()).collect();
            digits
                .map(RSpec::Profile)
                .map_err(|e| format!("bad weight digits {s:?}: {e}"))
        }
    }
}

fn to_config(c: &Common) -> Result<SuiteConfig, String> {
    Ok(SuiteConfig {
        p: c.p,
        f: c.f,
        r: parse_r(&c.r)?,
        depth: c.depth,
        buffer: c.buffer,
        mode: match c.mode {
            ModeArg::EqualChar => FieldMode::EqualChar,
            ModeArg::Qp => FieldMode::MixedChar,
        },
        output: match c.output {
            OutputArg::Text => OutputFormat::Text,
            OutputArg::Json => OutputFormat::Json,
        },
        strict: c.strict,
        parallel: c.parallel,
        ..SuiteConfig::default()
    })
}

fn main() {
    let args = Args::parse();
    let (command, common) = match &args.command {
        Cli::Lucas(c) => (Command::Lucas, c),
        Cli::BinomLemma(c) => (Command::BinomLemma, c),
        Cli::Psi(c) => (Command::Psi, c),
        Cli::P1(c) => (Command::P1, c),
        Cli::Relations(c) => (Command::Relations, c),
        Cli::Comparison(c) => (Command::Comparison, c),
        Cli::Selfext(c) => (Command::Selfext, c),
        Cli::All(c) => (Command::All, c),
    };
    let config = match to_config(common) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    };
    match run(command, &config) {
        Ok((report, code)) => {
            match config.output {
                OutputFormat::Text => print!("{}", report.to_text()),
                OutputFormat::Json => println!("{}", report.to_json()),
            }
            std::process::exit(code);
        }
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(2);
        }
    }
}
