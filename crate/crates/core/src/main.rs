use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nilpiece::census::{self, CensusOptions};
use nilpiece::formspace::{FormedSpace, SpaceKind};
use nilpiece::gradings::{GradedEndo, GradedSpace, PieceLabel};
use nilpiece::matrix::Matrix;
use nilpiece::pieces::{commuting_witness, in_bang_set, BangQuery};
use nilpiece::recovery::{classify_nilpotent, classify_unipotent};
use nilpiece::{element_budget, DEFAULT_ORACLE_BUDGET};

/// Exact classification and census of nilpotent and unipotent elements of
/// classical groups over small finite fields.
#[derive(Parser)]
#[command(name = "nilpiece", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// List the piece labels (partitions) for a kind and dimension.
    Labels { kind: String, dim: usize },
    /// Classify a nilpotent (or unipotent) element into its piece.
    Classify {
        /// Space descriptor file: `kind dim p k` plus optional form blocks.
        #[arg(long)]
        space: PathBuf,
        /// Element in the matrix text format.
        #[arg(long)]
        elem: PathBuf,
        /// Treat the element as a unipotent group element.
        #[arg(long)]
        unipotent: bool,
    },
    /// Test distinguished-set membership of a graded element and produce a
    /// commuting witness when it fails.
    Witness {
        #[arg(long)]
        space: PathBuf,
        /// Grading file: `kind dim p k` plus `i:d_i` pairs.
        #[arg(long)]
        grading: PathBuf,
        #[arg(long)]
        elem: PathBuf,
    },
    /// Exhaustive census of all nilpotent and unipotent elements over F_q.
    Census {
        kind: String,
        dim: usize,
        q: usize,
        /// Write the JSON report here (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-label CSV table.
        #[arg(long)]
        csv: Option<PathBuf>,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Fit per-label counts across field sizes to integer polynomials.
    Poly {
        kind: String,
        dim: usize,
        /// Comma-separated field sizes, e.g. 2,3,4,5.
        #[arg(long, value_delimiter = ',', required = true)]
        q: Vec<usize>,
    },
    /// Conjugation orbits of the distinguished set under the Levi subgroup.
    Orbits {
        kind: String,
        /// Comma-separated partition, e.g. 3,1,1.
        #[arg(long, value_delimiter = ',', required = true)]
        partition: Vec<usize>,
        #[arg(long)]
        q: usize,
    },
}

fn run() -> nilpiece::Result<bool> {
    let cli = Cli::parse();
    match cli.cmd {
        Cmd::Labels { kind, dim } => {
            let kind = SpaceKind::parse(&kind)?;
            for label in PieceLabel::enumerate(kind, dim) {
                println!("{label}");
            }
            Ok(true)
        }
        Cmd::Classify { space, elem, unipotent } => {
            let space = FormedSpace::from_descriptor(&read(&space)?)?;
            let elem = Matrix::from_text(&read(&elem)?)?;
            let classified = if unipotent {
                classify_unipotent(&space, &elem)?
            } else {
                classify_nilpotent(&space, &elem)?
            };
            println!("{}", serde_json::to_string_pretty(&classified.to_json()).unwrap());
            Ok(true)
        }
        Cmd::Witness { space, grading, elem } => {
            let space = FormedSpace::from_descriptor(&read(&space)?)?;
            let gs = GradedSpace::from_text(&read(&grading)?)?;
            if gs.space.kind != space.kind || gs.dim() != space.dim || gs.field() != &space.field {
                return Err(nilpiece::Error::InvalidArgument(
                    "grading and space descriptors disagree".into(),
                ));
            }
            let elem = Matrix::from_text(&read(&elem)?)?;
            let endo = GradedEndo::new(&gs, elem)?;
            let query = BangQuery::new(&gs, &endo)?;
            if in_bang_set(&query)? {
                println!("{}", serde_json::json!({ "in_bang_set": true }));
            } else {
                let w = commuting_witness(&query)?;
                println!(
                    "{}",
                    serde_json::json!({
                        "in_bang_set": false,
                        "witness": {
                            "case": w.case,
                            "extension_degree": w.extension_degree,
                            "matrix": w.b.to_text(),
                        }
                    })
                );
            }
            Ok(true)
        }
        Cmd::Census { kind, dim, q, out, csv, workers } => {
            let kind = SpaceKind::parse(&kind)?;
            let opts = CensusOptions { workers, budget: element_budget() };
            let report = census::run_census(kind, dim, q, opts)?;
            let json = serde_json::to_string_pretty(&report).unwrap();
            match out {
                Some(path) => std::fs::write(path, &json)
                    .map_err(|e| nilpiece::Error::InvalidArgument(e.to_string()))?,
                None => println!("{json}"),
            }
            if let Some(path) = csv {
                std::fs::write(path, report.to_csv())
                    .map_err(|e| nilpiece::Error::InvalidArgument(e.to_string()))?;
            }
            for l in &report.labels {
                eprintln!(
                    "label {:?}: nil={} uni={} filtrations={} bang={} ok={}",
                    l.partition,
                    l.nilpotent_count,
                    l.unipotent_count,
                    l.filtration_count,
                    l.bang_set_count,
                    l.factorization_ok && l.match_ok
                );
            }
            Ok(report.all_ok())
        }
        Cmd::Poly { kind, dim, q } => {
            let kind = SpaceKind::parse(&kind)?;
            let report = census::verify_polynomiality(kind, dim, &q, element_budget())?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(report.all_ok)
        }
        Cmd::Orbits { kind, partition, q } => {
            let kind = SpaceKind::parse(&kind)?;
            let label = PieceLabel::new(kind, partition)?;
            let field = census::field_for_order(q)?;
            let gs = GradedSpace::from_label(&label, field)?;
            let report = census::orbit_oracle(&gs, element_budget(), DEFAULT_ORACLE_BUDGET)?;
            println!("{}", serde_json::to_string_pretty(&report).unwrap());
            Ok(report.f_constant_on_orbits && report.f_classes_match_x)
        }
    }
}

fn read(path: &PathBuf) -> nilpiece::Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| nilpiece::Error::InvalidArgument(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("verdict failure");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
