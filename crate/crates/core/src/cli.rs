//! The `k3n` command-line front end.
//!
//! Exit codes: 0 success, 1 domain error (error name on stderr), 2 parse or
//! usage error, 3 a verification run with `k <= 5` reported failures.
//!
//! Vectors are JSON: a full coordinate array, `{"a":..,"b":..,"m":..}` for
//! `a (1, m) + b e`, or `{"lattice":..,"coords":[..]}`. An omitted vector
//! argument is read from standard input.

use std::ffi::OsString;
use std::io::{Read, Write};
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;
use serde_json::{json, Value};

use crate::error::LatticeError;
use crate::lattice::{
    divisibility, make_lambda_n, make_reduced_lambda_n, pairing, rank2_definiteness, square,
    LatVec, LatVecJson, LatticeSpec,
};
use crate::mbm::{
    classify_curve_class, curve_from_linear_system, enumerate_walls, mbm_table, same_chamber,
    CurveClass, MbmType, WallSet,
};
use crate::orbit::{
    compact_vector, orbit_invariant, orbit_representative_in, same_orbit_monodromy,
    same_orbit_stable, OrbitInvariant,
};
use crate::verify::{analyze_boundary, verify_main_theorem_with, BoundaryReport, VerifyReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_DOMAIN: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_VERIFY_FAILED: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "k3n", about = "Lattice computations for K3[n]-type hyperkähler manifolds")]
struct Cli {
    /// Emit JSON instead of a text table (table, walls, verify, k6).
    #[arg(long, global = true)]
    json: bool,
    /// JSON file with a user lattice {"name": .., "gram": [[..]]}.
    #[arg(long, global = true)]
    lattice: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct LatticeArgs {
    /// n of the K3[n]-type lattice.
    #[arg(long)]
    n: Option<i64>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Bilinear form q(x, y).
    Pair {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long)]
        x: String,
        #[arg(long)]
        y: String,
    },
    /// Square q(x).
    Square {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long)]
        vec: Option<String>,
    },
    /// Divisibility d(x).
    Div {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long)]
        vec: Option<String>,
    },
    /// Orbit invariant (square, divisibility, discriminant image).
    Invariants {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long)]
        vec: Option<String>,
    },
    /// Whether two primitive vectors lie in the same orbit.
    OrbitEq {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long)]
        z1: String,
        #[arg(long)]
        z2: String,
    },
    /// Canonical orbit representative a(1,m) + b e of a vector or invariant.
    Conjugate {
        #[command(flatten)]
        lat: LatticeArgs,
        #[arg(long, conflicts_with = "inv")]
        vec: Option<String>,
        /// {"square": .., "div": .., "delta": [..]}
        #[arg(long)]
        inv: Option<String>,
    },
    /// MBM type table for n = 2 or 3.
    Table {
        #[arg(long)]
        n: i64,
    },
    /// Numerical MBM type of a class primitive_part / denominator.
    Classify {
        #[arg(long)]
        n: i64,
        /// {"primitive_part": VEC, "denominator": D}
        #[arg(long)]
        class: Option<String>,
    },
    /// Curve class from a g^1_k on a curve of genus g.
    Pencil {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        g: u32,
        #[arg(long)]
        k: u32,
        /// Square of the curve class, realized as (1, s/2) in the first U.
        #[arg(long, conflicts_with = "fiber")]
        fiber_square: Option<i64>,
        #[arg(long)]
        fiber: Option<String>,
    },
    /// Walls of MBM type in a Picard lattice spanned by a basis.
    Walls {
        #[arg(long)]
        n: i64,
        /// JSON list of vectors.
        #[arg(long)]
        basis: String,
        #[arg(long, default_value_t = 6)]
        bound: i64,
    },
    /// Whether two positive classes lie in the same chamber.
    Chamber {
        #[arg(long)]
        n: i64,
        #[arg(long)]
        basis: String,
        #[arg(long, default_value_t = 6)]
        bound: i64,
        #[arg(long)]
        h1: String,
        #[arg(long)]
        h2: String,
    },
    /// Bounded verification of negative (semi)definite conjugates of e.
    Verify {
        #[arg(long, visible_alias = "n")]
        k: i64,
        #[arg(long, default_value_t = 6)]
        bound: i64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
    /// Failing orbits for k = 6.
    K6 {
        #[arg(long, default_value_t = 6)]
        bound: i64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Parse(String),
    Domain(LatticeError),
    VerifyFailed,
}

impl From<LatticeError> for CliError {
    fn from(e: LatticeError) -> Self {
        CliError::Domain(e)
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdin = std::io::stdin();
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_io(args, &mut stdin.lock(), &mut stdout.lock(), &mut stderr.lock())
}

pub fn run_with_io<I, T>(
    args: I,
    stdin: &mut dyn Read,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            let code = if err.use_stderr() { EXIT_PARSE } else { EXIT_OK };
            let out: &mut dyn Write = if err.use_stderr() { stderr } else { stdout };
            let _ = write!(out, "{}", err.render());
            return code;
        }
    };
    let mut ctx = Context { stdin, stdout, lattice_file: cli.lattice.clone(), json: cli.json };
    match ctx.dispatch(cli.command) {
        Ok(()) => EXIT_OK,
        Err(CliError::Parse(msg)) => {
            let _ = writeln!(stderr, "error: PARSE_ERROR: {msg}");
            EXIT_PARSE
        }
        Err(CliError::Domain(e)) => {
            let _ = writeln!(stderr, "error: {}: {e}", e.name());
            EXIT_DOMAIN
        }
        Err(CliError::VerifyFailed) => {
            let _ = writeln!(stderr, "error: VERIFY_FAILED: failures for k <= 5");
            EXIT_VERIFY_FAILED
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum VecInput {
    Full(Vec<i64>),
    Named(LatVecJson),
    Compact { a: i64, b: i64, m: i64 },
}

fn parse_err(e: impl std::fmt::Display) -> CliError {
    CliError::Parse(e.to_string())
}

struct Context<'a> {
    stdin: &'a mut dyn Read,
    stdout: &'a mut dyn Write,
    lattice_file: Option<PathBuf>,
    json: bool,
}

impl Context<'_> {
    fn lattice(&self, n: Option<i64>) -> CliResult<Arc<LatticeSpec>> {
        if let Some(path) = &self.lattice_file {
            let text = std::fs::read_to_string(path).map_err(parse_err)?;
            let spec: LatticeSpec = serde_json::from_str(&text).map_err(parse_err)?;
            return Ok(Arc::new(spec));
        }
        match n {
            Some(n) => Ok(make_lambda_n(n)?),
            None => Err(CliError::Parse("either --n or --lattice is required".into())),
        }
    }

    fn text_or_stdin(&mut self, arg: Option<String>) -> CliResult<String> {
        match arg {
            Some(s) if s != "-" => Ok(s),
            _ => {
                let mut s = String::new();
                self.stdin.read_to_string(&mut s).map_err(parse_err)?;
                Ok(s)
            }
        }
    }

    fn vector(&mut self, lattice: &Arc<LatticeSpec>, arg: Option<String>) -> CliResult<LatVec> {
        let text = self.text_or_stdin(arg)?;
        let value: Value = serde_json::from_str(&text).map_err(parse_err)?;
        vector_from_value(lattice, value)
    }

    fn emit(&mut self, value: &impl serde::Serialize) -> CliResult<()> {
        let s = serde_json::to_string(value).map_err(parse_err)?;
        writeln!(self.stdout, "{s}").map_err(parse_err)
    }

    fn text(&mut self, s: &str) -> CliResult<()> {
        write!(self.stdout, "{s}").map_err(parse_err)
    }

    fn dispatch(&mut self, command: Command) -> CliResult<()> {
        match command {
            Command::Pair { lat, x, y } => {
                let l = self.lattice(lat.n)?;
                let x = self.vector(&l, Some(x))?;
                let y = self.vector(&l, Some(y))?;
                self.emit(&json!({ "pairing": pairing(&x, &y)? }))
            }
            Command::Square { lat, vec } => {
                let l = self.lattice(lat.n)?;
                let x = self.vector(&l, vec)?;
                self.emit(&json!({ "square": square(&x)? }))
            }
            Command::Div { lat, vec } => {
                let l = self.lattice(lat.n)?;
                let x = self.vector(&l, vec)?;
                self.emit(&json!({ "div": divisibility(&x)? }))
            }
            Command::Invariants { lat, vec } => {
                let l = self.lattice(lat.n)?;
                let x = self.vector(&l, vec)?;
                self.emit(&orbit_invariant(&x)?)
            }
            Command::OrbitEq { lat, z1, z2 } => {
                let l = self.lattice(lat.n)?;
                let z1 = self.vector(&l, Some(z1))?;
                let z2 = self.vector(&l, Some(z2))?;
                let stable = same_orbit_stable(&z1, &z2)?;
                let monodromy = same_orbit_monodromy(&z1, &z2)?;
                self.emit(&json!({ "stable": stable, "monodromy": monodromy }))
            }
            Command::Conjugate { lat, vec, inv } => {
                let l = self.lattice(lat.n)?;
                let inv: OrbitInvariant = match inv {
                    Some(text) => serde_json::from_str(&text).map_err(parse_err)?,
                    None => orbit_invariant(&self.vector(&l, vec)?)?,
                };
                let rep = orbit_representative_in(&inv, &l)?;
                let e = LatVec::last_basis(&l);
                let class = rank2_definiteness(&rep.vector, &e)?;
                let mut out = serde_json::to_value(rep.to_json()).map_err(parse_err)?;
                out["invariant"] = serde_json::to_value(&inv).map_err(parse_err)?;
                out["definiteness_with_e"] = serde_json::to_value(class).map_err(parse_err)?;
                self.emit(&out)
            }
            Command::Table { n } => {
                let rows = mbm_table(n)?;
                if self.json {
                    self.emit(&rows)
                } else {
                    self.text(&format_table(&rows))
                }
            }
            Command::Classify { n, class } => {
                let l = make_lambda_n(n)?;
                let text = self.text_or_stdin(class)?;
                let raw: Value = serde_json::from_str(&text).map_err(parse_err)?;
                let alpha = curve_class_from_value(&l, raw)?;
                let row = classify_curve_class(n, &alpha)?;
                self.emit(&json!({
                    "curve_square": alpha.square()?.to_string(),
                    "denominator": alpha.denominator,
                    "type": row,
                }))
            }
            Command::Pencil { n, g, k, fiber_square, fiber } => {
                let l = make_lambda_n(n)?;
                let c = match (fiber_square, fiber) {
                    (Some(s), _) => {
                        if s % 2 != 0 {
                            return Err(CliError::Parse(format!("fiber square {s} is odd")));
                        }
                        compact_vector(&l, 1, s / 2, 0)?
                    }
                    (None, Some(v)) => self.vector(&l, Some(v))?,
                    (None, None) => {
                        return Err(CliError::Parse("--fiber-square or --fiber is required".into()))
                    }
                };
                let alpha = curve_from_linear_system(n, g, k, &c)?;
                let mut out = serde_json::to_value(alpha.to_json()).map_err(parse_err)?;
                out["curve_square"] = Value::String(alpha.square()?.to_string());
                out["primitive_square"] = json!(square(&alpha.primitive_part)?);
                out["primitive_div"] = json!(divisibility(&alpha.primitive_part)?);
                self.emit(&out)
            }
            Command::Walls { n, basis, bound } => {
                check_bound(bound)?;
                let l = make_lambda_n(n)?;
                let basis = basis_from_str(&l, &basis)?;
                let walls = enumerate_walls(n, &basis, bound)?;
                if self.json {
                    self.emit(&walls)
                } else {
                    self.text(&format_walls(&walls))
                }
            }
            Command::Chamber { n, basis, bound, h1, h2 } => {
                check_bound(bound)?;
                let l = make_lambda_n(n)?;
                let basis = basis_from_str(&l, &basis)?;
                let walls = enumerate_walls(n, &basis, bound)?;
                let h1 = self.vector(&l, Some(h1))?;
                let h2 = self.vector(&l, Some(h2))?;
                let same = same_chamber(&h1, &h2, &walls)?;
                self.emit(&json!({ "same_chamber": same, "bound": bound, "walls": walls.walls.len() }))
            }
            Command::Verify { k, bound, workers } => {
                check_bound(bound)?;
                let report = verify_main_theorem_with(k, bound, workers)?;
                if self.json {
                    self.emit(&report)?;
                } else {
                    self.text(&format_verify(&report))?;
                }
                if k <= 5 && !report.failures.is_empty() {
                    return Err(CliError::VerifyFailed);
                }
                Ok(())
            }
            Command::K6 { bound, workers } => {
                check_bound(bound)?;
                let report = analyze_boundary(6, bound, workers)?;
                if self.json {
                    self.emit(&report)
                } else {
                    self.text(&format_boundary(&report))
                }
            }
        }
    }
}

fn check_bound(bound: i64) -> CliResult<()> {
    if bound < 3 {
        return Err(CliError::Parse(format!("bound must be at least 3, got {bound}")));
    }
    Ok(())
}

fn resolve_named(lattice: &Arc<LatticeSpec>, json: &LatVecJson) -> CliResult<Arc<LatticeSpec>> {
    if json.lattice == lattice.name() {
        return Ok(Arc::clone(lattice));
    }
    // vectors printed by `verify` live in the rank 5 piece
    if let Some(n) = lattice.bbf_n() {
        let reduced = make_reduced_lambda_n(n)?;
        if json.lattice == reduced.name() {
            return Ok(reduced);
        }
    }
    Err(LatticeError::LatticeMismatch(json.lattice.clone(), lattice.name().to_owned()).into())
}

fn vector_from_value(lattice: &Arc<LatticeSpec>, value: Value) -> CliResult<LatVec> {
    let input: VecInput = serde_json::from_value(value).map_err(|_| {
        CliError::Parse("vector must be [ints], {\"a\",\"b\",\"m\"}, or {\"lattice\",\"coords\"}".into())
    })?;
    Ok(match input {
        VecInput::Full(coords) => LatVec::new(lattice, coords)?,
        VecInput::Named(json) => LatVec::from_json(&json, &resolve_named(lattice, &json)?)?,
        VecInput::Compact { a, b, m } => compact_vector(lattice, a, m, b)?,
    })
}

fn curve_class_from_value(lattice: &Arc<LatticeSpec>, value: Value) -> CliResult<CurveClass> {
    #[derive(Deserialize)]
    struct Raw {
        primitive_part: Value,
        denominator: i128,
    }
    let raw: Raw = serde_json::from_value(value).map_err(parse_err)?;
    Ok(CurveClass::new(vector_from_value(lattice, raw.primitive_part)?, raw.denominator)?)
}

fn basis_from_str(lattice: &Arc<LatticeSpec>, text: &str) -> CliResult<Vec<LatVec>> {
    let values: Vec<Value> = serde_json::from_str(text).map_err(parse_err)?;
    values.into_iter().map(|v| vector_from_value(lattice, v)).collect()
}

fn format_table(rows: &[MbmType]) -> String {
    let mut s = format!("{:<4}{:<10}{:<4}{:<12}{:<5}{}\n", "tag", "q(alpha)", "D", "q(D alpha)", "div", "locus");
    for r in rows {
        s += &format!(
            "{:<4}{:<10}{:<4}{:<12}{:<5}{}\n",
            r.tag,
            r.curve_square.to_string(),
            r.denominator,
            r.primitive_square,
            r.primitive_div,
            r.locus_label
        );
    }
    s
}

fn format_walls(w: &WallSet) -> String {
    let mut s = format!("n={} bound={} walls={}\n", w.n, w.bound, w.walls.len());
    for wall in &w.walls {
        s += &format!("{}  {:?}\n", wall.tag, wall.coefficients);
    }
    s
}

fn format_verify(r: &VerifyReport) -> String {
    let mut s = format!(
        "{:<4}{:<7}{:<10}{:<10}{}\n{:<4}{:<7}{:<10}{:<10}{}\n",
        "k", "bound", "checked", "passed", "failures", r.k, r.bound, r.checked, r.passed, r.failures.len()
    );
    s += &format!(
        "sublattice {}  definite {}  e-orbit {}  oracle disagreements {}  congruence violations {}/{}  {} ms\n",
        r.sublattice,
        r.definite,
        r.e_orbit,
        r.oracle_disagreements.len(),
        r.congruence_violations.len(),
        r.congruence_checked,
        r.runtime_ms
    );
    for inv in r.failing_invariants() {
        s += &format!(
            "failing orbit: square {} div {} delta {:?}\n",
            inv.square, inv.divisibility, inv.disc_image.residues
        );
    }
    s
}

fn format_boundary(r: &BoundaryReport) -> String {
    let mut s = format!("k={} bound={} failing orbits={}\n", r.k, r.bound, r.failing.len());
    for inv in &r.failing {
        s += &format!(
            "  square {} div {} delta {:?}\n",
            inv.square, inv.divisibility, inv.disc_image.residues
        );
    }
    s += &format!(
        "witnesses {}  max det <z',e> {}  violations {}\n",
        r.witnesses,
        r.max_witness_det.map_or("-".to_owned(), |d| d.to_string()),
        r.witness_violations.len()
    );
    s
}
