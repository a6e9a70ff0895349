//! `entrocone`: exact entropy-vector checks from the command line.
//!
//! Every command prints one JSON report on stdout. Exit codes: 0 for a
//! positive verdict, 1 for a negative one, 2 when a search runs out of
//! budget, 64 for usage errors and 65 for unreadable or invalid input.

use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use entrocone::bounds::{omega_in, theta_in};
use entrocone::polycone::{
    cone_membership, cone_membership_all, face_catalogue, face_obstructions, in_gamma_n, parse_generators,
    strict_in_face, FacePosition, FaceSpec,
};
use entrocone::qusearch::{
    check_feasibility_necessary, search, spec_from_vector, structural_hints, SearchConfig, SearchStatus, SupportSpec,
};
use entrocone::{EntropyVector, Error, JointPMF};
use serde_json::{json, Value};

const EXIT_TRUE: u8 = 0;
const EXIT_FALSE: u8 = 1;
const EXIT_INCONCLUSIVE: u8 = 2;
const EXIT_USAGE: u8 = 64;
const EXIT_DATA: u8 = 65;

#[derive(Parser)]
#[command(name = "entrocone", version, about = "Exact entropy vectors, Γ3 faces and quasi-uniform search")]
struct Cli {
    /// Accepted for compatibility; JSON is the only output format.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Entropy vector of a distribution file.
    Entropy { pmf: PathBuf },
    /// Whether a distribution is quasi-uniform.
    QuCheck { pmf: PathBuf },
    /// Membership of a vector in the polymatroid cone.
    Gamma { vector: PathBuf },
    /// Conic decomposition over a face (`theta`, `omega` or e.g. `1,2,123p`).
    Decompose {
        vector: PathBuf,
        face: String,
        /// List every certificate rather than the first.
        #[arg(long)]
        all: bool,
    },
    /// Position of a vector relative to a face of Γ3.
    Face { vector: PathBuf, face: String },
    /// Membership in an inner bound.
    Inner { vector: PathBuf, bound: Bound },
    /// Support sizes a quasi-uniform realization would need.
    Spec { vector: PathBuf },
    /// Search for a quasi-uniform distribution with given support sizes.
    Search {
        spec: PathBuf,
        /// Node budget.
        #[arg(long, default_value_t = 10_000_000)]
        budget: u64,
        /// Wall-clock limit in seconds; ignored with --deterministic.
        #[arg(long, default_value_t = 60)]
        time_limit: u64,
        /// Single-threaded, node budget only, no timing in the report.
        #[arg(long, conflicts_with = "parallel")]
        deterministic: bool,
        /// Explore subtrees on all cores.
        #[arg(long)]
        parallel: bool,
        #[arg(long)]
        no_hints: bool,
        #[arg(long)]
        no_symmetry_breaking: bool,
    },
    /// The listed faces of Γ3 with their relabeling orbits.
    Catalog,
}

#[derive(Clone, Copy, ValueEnum)]
enum Bound {
    Theta,
    Omega,
}

/// A failed command: exit code and message.
struct Failure {
    code: u8,
    message: String,
}

fn data(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_DATA, message: e.to_string() }
}

fn usage(e: impl std::fmt::Display) -> Failure {
    Failure { code: EXIT_USAGE, message: e.to_string() }
}

type Outcome = Result<(Value, u8), Failure>;

fn read_input(path: &Path) -> Result<String, Failure> {
    if path == Path::new("-") {
        let mut text = String::new();
        std::io::stdin().read_to_string(&mut text).map_err(|e| data(format!("stdin: {e}")))?;
        return Ok(text);
    }
    std::fs::read_to_string(path).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn read_pmf(path: &Path) -> Result<JointPMF, Failure> {
    JointPMF::parse(&read_input(path)?).map_err(|e| data(format!("{}: {e}", path.display())))
}

/// Reads a vector file, or the `vector` field of a report from `entropy`.
fn read_vector(path: &Path) -> Result<EntropyVector, Failure> {
    let text = read_input(path)?;
    let value: Value = serde_json::from_str(&text).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let value = value.get("vector").unwrap_or(&value);
    EntropyVector::from_json_value(value).map_err(|e| data(format!("{}: {e}", path.display())))
}

fn read_face(name: &str) -> Result<FaceSpec, Failure> {
    parse_generators(name).map_err(usage)
}

/// Library errors raised while evaluating a command on valid arguments.
fn eval_error(e: Error) -> Failure {
    match e {
        Error::UnknownFace(_) => usage(e),
        other => data(other),
    }
}

fn verdict(flag: bool) -> u8 {
    if flag {
        EXIT_TRUE
    } else {
        EXIT_FALSE
    }
}

fn to_value(x: impl serde::Serialize) -> Value {
    serde_json::to_value(x).expect("reports serialize")
}

fn cmd_entropy(pmf: &Path) -> Outcome {
    let p = read_pmf(pmf)?;
    let h = p.entropy_vector();
    let bits = h.coords().iter().map(|c| c.approx_bits(6).map_err(data)).collect::<Result<Vec<_>, _>>()?;
    Ok((json!({"n": p.n(), "support": p.support_len(), "vector": h, "bits": bits}), EXIT_TRUE))
}

fn cmd_qu_check(pmf: &Path) -> Outcome {
    let p = read_pmf(pmf)?;
    let v = p.is_quasi_uniform();
    let mut report = v.to_json();
    report["vector"] = to_value(p.entropy_vector());
    Ok((report, verdict(v.is_qu)))
}

fn cmd_gamma(vector: &Path) -> Outcome {
    let h = read_vector(vector)?;
    let v = in_gamma_n(&h).map_err(eval_error)?;
    Ok((to_value(&v), verdict(v.member)))
}

fn cmd_decompose(vector: &Path, face: &str, all: bool) -> Outcome {
    let h = read_vector(vector)?;
    let face = read_face(face)?;
    let certificates = if all {
        cone_membership_all(&h, &face.generators).map_err(eval_error)?
    } else {
        cone_membership(&h, &face.generators).map_err(eval_error)?.into_iter().collect()
    };
    let member = !certificates.is_empty();
    let mut report = json!({"face": face, "member": member});
    if all {
        report["certificates"] = to_value(&certificates);
    } else {
        report["certificate"] = to_value(certificates.first());
    }
    if !member {
        let obs: Vec<Value> = face_obstructions(&h, &face.generators)
            .map_err(eval_error)?
            .into_iter()
            .map(|(ineq, v)| json!({"required": format!("equality in {}", ineq.describe()), "value": v}))
            .collect();
        report["obstructions"] = Value::Array(obs);
    }
    Ok((report, verdict(member)))
}

fn cmd_face(vector: &Path, face: &str) -> Outcome {
    let h = read_vector(vector)?;
    let face = read_face(face)?;
    let position = strict_in_face(&h, &face).map_err(eval_error)?;
    let mut report = position.to_json();
    report["face"] = to_value(&face);
    Ok((report, verdict(matches!(position, FacePosition::StrictlyInside(_)))))
}

fn cmd_inner(vector: &Path, bound: Bound) -> Outcome {
    let h = read_vector(vector)?;
    let (name, v) = match bound {
        Bound::Theta => ("theta", theta_in(&h)),
        Bound::Omega => ("omega", omega_in(&h)),
    };
    let v = v.map_err(eval_error)?;
    let mut report = to_value(&v);
    report["bound"] = json!(name);
    Ok((report, verdict(v.member)))
}

fn cmd_spec(vector: &Path) -> Outcome {
    let h = read_vector(vector)?;
    let hints: Vec<String> = structural_hints(&h).iter().map(|x| x.to_string()).collect();
    let report = match spec_from_vector(&h) {
        Some(spec) => json!({
            "qu_possible": true,
            "spec": spec.to_json(),
            "feasibility": check_feasibility_necessary(&spec).to_json(),
            "hints": hints,
        }),
        None => {
            let sizes = entrocone::bounds::qu_necessary(&h);
            let reason = match sizes {
                None => "some coordinate is not the logarithm of a natural number".to_string(),
                Some(m) => match SupportSpec::new(h.n(), m) {
                    Ok(spec) => {
                        let f = check_feasibility_necessary(&spec);
                        f.violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
                    }
                    Err(e) => e.to_string(),
                },
            };
            json!({"qu_possible": false, "spec": null, "reason": reason, "hints": hints})
        }
    };
    let ok = report["qu_possible"] == json!(true);
    Ok((report, verdict(ok)))
}

struct SearchArgs {
    budget: u64,
    time_limit: u64,
    deterministic: bool,
    parallel: bool,
    no_hints: bool,
    no_symmetry_breaking: bool,
}

fn cmd_search(path: &Path, args: SearchArgs) -> Outcome {
    let spec = SupportSpec::from_json(&read_input(path)?).map_err(|e| data(format!("{}: {e}", path.display())))?;
    let config = SearchConfig {
        max_nodes: args.budget,
        max_time: if args.deterministic { Duration::MAX } else { Duration::from_secs(args.time_limit) },
        parallel: args.parallel,
        use_hints: !args.no_hints,
        symmetry_breaking: !args.no_symmetry_breaking,
    };
    let out = search(&spec, &config).map_err(data)?;
    let mut report = json!({
        "spec": spec.to_json(),
        "status": out.status.name(),
        "nodes_explored": out.nodes_explored,
        "witness": out.status.witness().map(|w| w.serialize()),
    });
    if let Some(w) = out.status.witness() {
        report["vector"] = to_value(w.entropy_vector());
    }
    if !args.deterministic {
        report["elapsed_ms"] = json!(out.elapsed.as_millis() as u64);
    }
    let code = match out.status {
        SearchStatus::Found(_) => EXIT_TRUE,
        SearchStatus::ExhaustedInfeasible => EXIT_FALSE,
        SearchStatus::BudgetExceeded => EXIT_INCONCLUSIVE,
    };
    Ok((report, code))
}

fn cmd_catalog() -> Outcome {
    let faces: Vec<Value> = face_catalogue()
        .iter()
        .map(|f| json!({"generators": f, "dim": f.dim, "orbit": f.orbit.iter().map(|g| FaceSpec::from_generators(g.clone())).collect::<Vec<_>>()}))
        .collect();
    Ok((json!({"count": faces.len(), "faces": faces}), EXIT_TRUE))
}

fn run(command: Command) -> Outcome {
    match command {
        Command::Entropy { pmf } => cmd_entropy(&pmf),
        Command::QuCheck { pmf } => cmd_qu_check(&pmf),
        Command::Gamma { vector } => cmd_gamma(&vector),
        Command::Decompose { vector, face, all } => cmd_decompose(&vector, &face, all),
        Command::Face { vector, face } => cmd_face(&vector, &face),
        Command::Inner { vector, bound } => cmd_inner(&vector, bound),
        Command::Spec { vector } => cmd_spec(&vector),
        Command::Search { spec, budget, time_limit, deterministic, parallel, no_hints, no_symmetry_breaking } => {
            cmd_search(
                &spec,
                SearchArgs { budget, time_limit, deterministic, parallel, no_hints, no_symmetry_breaking },
            )
        }
        Command::Catalog => cmd_catalog(),
    }
}

fn print(value: &Value) {
    use std::io::Write;
    let text = serde_json::to_string_pretty(value).expect("JSON values print");
    let _ = writeln!(std::io::stdout().lock(), "{text}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let _ = e.print();
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let _ = cli.json;
    match run(cli.command) {
        Ok((report, code)) => {
            print(&report);
            ExitCode::from(code)
        }
        Err(f) => {
            print(&json!({"error": f.message, "exit_code": f.code}));
            eprintln!("entrocone: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
