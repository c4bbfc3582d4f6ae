//! Command-line front end: parse a PD file, list smoothings or generators,
//! verify the degeneration, or run the homology oracle.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;

use redgreen::cobordism::Theory;
use redgreen::{braid, lee, oracle, Error, TangleDiagram};

#[derive(Parser)]
#[command(name = "redgreen", version, about = "Khovanov-Lee complexes, red/green splitting, and an exact homology oracle")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Clone, Copy, ValueEnum)]
enum TheoryArg {
    Lee,
    Khovanov,
}

impl From<TheoryArg> for Theory {
    fn from(t: TheoryArg) -> Theory {
        match t {
            TheoryArg::Lee => Theory::Lee,
            TheoryArg::Khovanov => Theory::Khovanov,
        }
    }
}

#[derive(Clone, Copy, ValueEnum, PartialEq)]
enum Format {
    Json,
    Text,
}

#[derive(Args)]
struct CommonArgs {
    /// PD-code input file
    #[arg(long)]
    input: PathBuf,
    /// Which double-dot relation to use where it matters
    #[arg(long, value_enum, default_value_t = TheoryArg::Lee)]
    theory: TheoryArg,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 6)]
    max_crossings: usize,
    #[arg(long, default_value_t = 3)]
    max_components: usize,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    format: Format,
}

#[derive(Subcommand)]
enum Cmd {
    /// List all alternately coloured smoothings with their heights
    Smoothings(CommonArgs),
    /// Run the splitting pipeline and list the surviving generators
    Generators(CommonArgs),
    /// Cross-check pipeline, enumeration and (closed diagrams) the oracle
    Verify(CommonArgs),
    /// Homology ranks of a closed diagram by the brute-force oracle
    Homology(CommonArgs),
    /// Emit a random closed diagram as a PD document
    Random(RandomArgs),
}

fn load(path: &PathBuf) -> Result<TangleDiagram, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse {
        line: 0,
        msg: format!("cannot read {}: {e}", path.display()),
    })?;
    TangleDiagram::parse(&text)
}

fn listing_output(gens: &[lee::LeeGenerator], format: Format) -> String {
    match format {
        Format::Json => {
            let items: Vec<_> = gens.iter().map(|g| g.to_json()).collect();
            serde_json::to_string_pretty(&serde_json::Value::Array(items)).unwrap()
        }
        Format::Text => {
            let mut s = String::new();
            for g in gens {
                let cols: String = g.coloured.colours.iter().map(|c| c.letter()).collect();
                let choices: Vec<String> =
                    g.coloured.choices.iter().map(|c| c.to_string()).collect();
                s.push_str(&format!(
                    "h={:+} choices=[{}] colours={}\n",
                    g.height,
                    choices.join(""),
                    cols
                ));
            }
            s.push_str(&format!("total: {}\n", gens.len()));
            s
        }
    }
}

fn run() -> Result<u8, Error> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Smoothings(args) => {
            let d = load(&args.input)?;
            let gens = lee::smoothing_listing(&d);
            println!("{}", listing_output(&gens, args.format));
            Ok(0)
        }
        Cmd::Generators(args) => {
            let d = load(&args.input)?;
            let gens = lee::lee_generators(&d)?;
            println!("{}", listing_output(&gens, args.format));
            Ok(0)
        }
        Cmd::Verify(args) => {
            let d = load(&args.input)?;
            let report = lee::verify(&d)?;
            match args.format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&report.to_json()).unwrap())
                }
                Format::Text => print!("{}", report.to_text()),
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
        Cmd::Homology(args) => {
            let d = load(&args.input)?;
            let theory: Theory = args.theory.into();
            let ranks = oracle::homology_of_theory(&d, theory)?;
            match args.format {
                Format::Json => println!(
                    "{}",
                    serde_json::to_string_pretty(&oracle::ranks_to_json(theory.delta(), &ranks))
                        .unwrap()
                ),
                Format::Text => {
                    for (h, r) in &ranks {
                        println!("h={h:+}: rank {r}");
                    }
                    println!("total: {}", ranks.values().sum::<usize>());
                }
            }
            Ok(0)
        }
        Cmd::Random(args) => {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            let (pd, _) =
                braid::random_closed_diagram(&mut rng, args.max_crossings, args.max_components)?;
            match args.format {
                Format::Json => {
                    println!("{}", serde_json::to_string_pretty(&serde_json::json!({"pd": pd})).unwrap())
                }
                Format::Text => print!("{pd}"),
            }
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
