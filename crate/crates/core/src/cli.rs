//! Command-line front end. Every subcommand is a thin wrapper over one or
//! two library calls, reading and writing line-delimited JSON documents so
//! the numerics stay byte-identical to the library's. Value fidelity needs
//! both directions exact: numbers print in shortest-round-trip form and
//! parse with serde_json's `float_roundtrip` feature, since the default
//! parser can land one ulp off.
//!
//! Exit codes: 0 success, 1 usage, 2 document parse error, 3 domain error.
//! Failures print a machine-readable `{"error":{"kind","message"}}` object
//! on the error stream. A reader that closes standard output early (a
//! pipeline into `head`, say) ends the run quietly with exit 0.

use std::collections::BTreeMap;
use std::fs;
use std::io::{Read, Write};

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::algebra::{ComplexMatrix2, ComplexMatrix4};
use crate::bases::self_test;
use crate::decomposition::{
    check_trace_preserving, cloude_decompose, kraus_from_decomposition, DecompositionError,
};
use crate::mueller::{
    c_from_mueller, h_from_mueller_entries, is_mueller_jones, is_physical, mueller_from_jones,
    JonesMatrix, MuellerError, MuellerMatrix, DEFAULT_MUELLER_JONES_TOL, DEFAULT_PHYSICALITY_TOL,
};
use crate::polarization::{
    convert_mueller, convert_stokes, PolarizationError, StokesConvention, StokesVector,
};
use crate::quantum::{
    bell_state, mems_target, reconstruct_mueller, werner_target, DensityMatrix4, QuantumError,
};

/// One self-describing matrix on one line: a kind tag, an optional Stokes
/// convention, the payload with complex entries as [re, im] pairs and reals
/// as bare numbers, and a free-form string map.
#[derive(Clone, Debug, Serialize, Deserialize)]
struct MatrixDocument {
    kind: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    convention: Option<String>,
    data: Value,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    meta: BTreeMap<String, String>,
}

#[derive(Parser)]
#[command(
    name = "mueller-stokes",
    version,
    about = "Mueller-Stokes polarization calculus on JSON matrix documents"
)]
struct Cli {
    /// Overrides the physicality and Mueller-Jones tolerances where a
    /// subcommand checks them.
    #[arg(long, global = true)]
    tol: Option<f64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Re-expresses a stokes or mueller document in another convention.
    Convert {
        /// Convention of the input; defaults to the document's own tag,
        /// then to internal.
        #[arg(long, value_parser = parse_convention)]
        from: Option<StokesConvention>,
        /// Convention to convert to.
        #[arg(long, value_parser = parse_convention)]
        to: StokesConvention,
    },
    /// Expands a jones document into its mueller, h, and c companions.
    FromJones,
    /// Decomposes a mueller document into weighted Mueller-Jones factors
    /// and the Kraus operators they induce.
    Decompose,
    /// Reports Mueller-Jones and complete-positivity verdicts for a
    /// mueller document, with the H spectrum and trace-preservation defect.
    Check,
    /// Recovers the Mueller matrix relating a probe state to an outcome
    /// state, both density4 documents.
    Probe {
        /// Probe state file, or - for the standard input.
        #[arg(long = "in")]
        input: String,
        /// Outcome state file, or - for the standard input.
        #[arg(long = "out")]
        output: String,
    },
    /// Emits a reference two-photon state as a density4 document.
    Targets {
        #[command(subcommand)]
        family: TargetFamily,
    },
    /// Rebuilds the constant tables from their defining formulas and
    /// reruns the golden checks, printing one line per check.
    Selftest,
}

#[derive(Subcommand)]
enum TargetFamily {
    /// Maximally entangled mixed state with concurrence gamma.
    Mems {
        #[arg(long, allow_negative_numbers = true)]
        gamma: f64,
    },
    /// Werner state with singlet weight p.
    Werner {
        #[arg(long, allow_negative_numbers = true)]
        p: f64,
    },
    /// Bell state by coefficient-matrix row; row 3 is the singlet.
    Bell {
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=3))]
        index: u8,
    },
}

fn parse_convention(name: &str) -> Result<StokesConvention, String> {
    StokesConvention::from_name(name).ok_or_else(|| {
        format!("unknown convention '{name}' (expected internal, iquv, born-wolf, or van-de-hulst)")
    })
}

/// A failed subcommand: the exit code plus the error object to print.
struct Failure {
    code: i32,
    kind: String,
    message: String,
}

impl Failure {
    fn parse(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "parse".into(),
            message: message.into(),
        }
    }

    fn io(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            kind: "io".into(),
            message: message.into(),
        }
    }

    fn domain(kind: &str, message: impl Into<String>) -> Self {
        Failure {
            code: 3,
            kind: kind.into(),
            message: message.into(),
        }
    }

    /// The reader on the other end of standard output went away. Not an
    /// error on our side: stop writing and exit clean, the way a pipeline
    /// into `head` expects.
    fn pipe() -> Self {
        Failure {
            code: 0,
            kind: "pipe".into(),
            message: String::new(),
        }
    }

    fn to_json(&self) -> String {
        json!({"error": {"kind": self.kind, "message": self.message}}).to_string()
    }
}

impl From<MuellerError> for Failure {
    fn from(e: MuellerError) -> Self {
        let kind = match e {
            MuellerError::NotHermitian { .. } => "not-hermitian",
        };
        Failure::domain(kind, e.to_string())
    }
}

impl From<PolarizationError> for Failure {
    fn from(e: PolarizationError) -> Self {
        let kind = match e {
            PolarizationError::NotHermitian { .. } => "not-hermitian",
            PolarizationError::EmptyEnsemble => "empty-ensemble",
        };
        Failure::domain(kind, e.to_string())
    }
}

impl From<DecompositionError> for Failure {
    fn from(e: DecompositionError) -> Self {
        let kind = match e {
            DecompositionError::NonphysicalMatrix { .. } => "nonphysical-matrix",
            DecompositionError::NonpositiveIntensity { .. } => "nonpositive-intensity",
        };
        Failure::domain(kind, e.to_string())
    }
}

impl From<QuantumError> for Failure {
    fn from(e: QuantumError) -> Self {
        let kind = match e {
            QuantumError::NotHermitian { .. } => "not-hermitian",
            QuantumError::TraceNotOne { .. } => "trace-not-one",
            QuantumError::NotPositive { .. } => "not-positive",
            QuantumError::ParameterOutOfRange { .. } => "parameter-out-of-range",
            QuantumError::SingularProbe { .. } => "singular-probe",
            QuantumError::NonpositiveTrace { .. } => "nonpositive-trace",
            QuantumError::ResidueNotReal { .. } => "residue-not-real",
        };
        Failure::domain(kind, e.to_string())
    }
}

/// Entry point behind `main`; returns the process exit code.
pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(f) => {
            if f.code != 0 {
                let _ = writeln!(std::io::stderr(), "{}", f.to_json());
            }
            f.code
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Convert { from, to } => cmd_convert(from, to),
        Command::FromJones => cmd_from_jones(),
        Command::Decompose => cmd_decompose(),
        Command::Check => cmd_check(cli.tol),
        Command::Probe { input, output } => cmd_probe(&input, &output),
        Command::Targets { family } => cmd_targets(family),
        Command::Selftest => cmd_selftest(),
    }
}

// Document reading.

fn stdin_lines() -> Result<Vec<String>, Failure> {
    let mut text = String::new();
    std::io::stdin()
        .read_to_string(&mut text)
        .map_err(|e| Failure::io(format!("reading standard input: {e}")))?;
    Ok(text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .map(str::to_owned)
        .collect())
}

fn parse_document(line: &str) -> Result<MatrixDocument, Failure> {
    serde_json::from_str(line).map_err(|e| Failure::parse(format!("invalid document: {e}")))
}

fn read_single_stdin_document() -> Result<MatrixDocument, Failure> {
    let lines = stdin_lines()?;
    match lines.as_slice() {
        [line] => parse_document(line),
        [] => Err(Failure::parse("expected one document on standard input")),
        more => Err(Failure::parse(format!(
            "expected one document on standard input, found {}",
            more.len()
        ))),
    }
}

fn read_file_document(path: &str) -> Result<MatrixDocument, Failure> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::io(format!("reading {path}: {e}")))?;
    let lines: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty())
        .collect();
    match lines.as_slice() {
        [line] => parse_document(line),
        [] => Err(Failure::parse(format!("{path} holds no document"))),
        more => Err(Failure::parse(format!(
            "{path} holds {} documents, expected one",
            more.len()
        ))),
    }
}

fn expect_kind(doc: &MatrixDocument, expected: &[&str]) -> Result<(), Failure> {
    if expected.contains(&doc.kind.as_str()) {
        Ok(())
    } else {
        Err(Failure::parse(format!(
            "document kind '{}' not usable here, expected one of {}",
            doc.kind,
            expected.join(", ")
        )))
    }
}

// Payload parsing.

fn parse_real(v: &Value) -> Result<f64, Failure> {
    v.as_f64()
        .ok_or_else(|| Failure::parse(format!("expected a real number, found {v}")))
}

fn parse_complex(v: &Value) -> Result<Complex64, Failure> {
    if let Some(x) = v.as_f64() {
        return Ok(Complex64::new(x, 0.0));
    }
    match v.as_array().map(Vec::as_slice) {
        Some([re, im]) => Ok(Complex64::new(parse_real(re)?, parse_real(im)?)),
        _ => Err(Failure::parse(format!(
            "expected a complex entry as [re, im] or a bare real, found {v}"
        ))),
    }
}

fn rows(data: &Value, n: usize) -> Result<&Vec<Value>, Failure> {
    let arr = data
        .as_array()
        .ok_or_else(|| Failure::parse("data must be an array"))?;
    if arr.len() != n {
        return Err(Failure::parse(format!(
            "data has {} rows, expected {n}",
            arr.len()
        )));
    }
    Ok(arr)
}

fn parse_real_matrix4(data: &Value) -> Result<[[f64; 4]; 4], Failure> {
    let mut m = [[0.0; 4]; 4];
    for (i, row) in rows(data, 4)?.iter().enumerate() {
        for (j, entry) in rows(row, 4)?.iter().enumerate() {
            m[i][j] = parse_real(entry)?;
        }
    }
    Ok(m)
}

fn parse_stokes_components(data: &Value) -> Result<[f64; 4], Failure> {
    let mut s = [0.0; 4];
    for (i, entry) in rows(data, 4)?.iter().enumerate() {
        s[i] = parse_real(entry)?;
    }
    Ok(s)
}

fn parse_complex_matrix2(data: &Value) -> Result<ComplexMatrix2, Failure> {
    let mut m = ComplexMatrix2::zeros();
    for (i, row) in rows(data, 2)?.iter().enumerate() {
        for (j, entry) in rows(row, 2)?.iter().enumerate() {
            m.0[i][j] = parse_complex(entry)?;
        }
    }
    Ok(m)
}

fn parse_complex_matrix4(data: &Value) -> Result<ComplexMatrix4, Failure> {
    let mut m = ComplexMatrix4::zeros();
    for (i, row) in rows(data, 4)?.iter().enumerate() {
        for (j, entry) in rows(row, 4)?.iter().enumerate() {
            m.0[i][j] = parse_complex(entry)?;
        }
    }
    Ok(m)
}

// Payload emission. serde_json prints the shortest decimal that parses back
// to the same double, so emitted documents are value-exact and byte-stable.

fn complex_entry(z: Complex64) -> Value {
    json!([z.re, z.im])
}

fn real_matrix_value(m: &[[f64; 4]; 4]) -> Value {
    Value::Array(
        m.iter()
            .map(|row| Value::Array(row.iter().map(|&x| json!(x)).collect()))
            .collect(),
    )
}

fn stokes_value(s: &[f64; 4]) -> Value {
    Value::Array(s.iter().map(|&x| json!(x)).collect())
}

fn complex_matrix2_value(m: &ComplexMatrix2) -> Value {
    Value::Array(
        m.0.iter()
            .map(|row| Value::Array(row.iter().map(|&z| complex_entry(z)).collect()))
            .collect(),
    )
}

fn complex_matrix4_value(m: &ComplexMatrix4) -> Value {
    Value::Array(
        m.0.iter()
            .map(|row| Value::Array(row.iter().map(|&z| complex_entry(z)).collect()))
            .collect(),
    )
}

fn document(kind: &str, convention: Option<StokesConvention>, data: Value) -> MatrixDocument {
    MatrixDocument {
        kind: kind.into(),
        convention: convention.map(|c| c.name().into()),
        data,
        meta: BTreeMap::new(),
    }
}

fn print_line(line: &str) -> Result<(), Failure> {
    let mut out = std::io::stdout().lock();
    match writeln!(out, "{line}") {
        Ok(()) => Ok(()),
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Err(Failure::pipe()),
        Err(e) => Err(Failure::io(format!("writing standard output: {e}"))),
    }
}

fn print_document(doc: &MatrixDocument) -> Result<(), Failure> {
    print_line(
        &serde_json::to_string(doc).expect("documents hold only finite numbers and strings"),
    )
}

// Subcommands.

fn cmd_convert(from: Option<StokesConvention>, to: StokesConvention) -> Result<(), Failure> {
    let doc = read_single_stdin_document()?;
    expect_kind(&doc, &["stokes", "mueller"])?;

    let tagged = doc
        .convention
        .as_deref()
        .map(|name| {
            parse_convention(name).map_err(|e| Failure::parse(format!("convention field: {e}")))
        })
        .transpose()?;
    let from = match (from, tagged) {
        (Some(f), Some(t)) if f != t => {
            return Err(Failure::parse(format!(
                "--from {} contradicts the document's convention {}",
                f.name(),
                t.name()
            )));
        }
        (Some(f), _) => f,
        (None, Some(t)) => t,
        (None, None) => StokesConvention::Internal,
    };

    let mut out = match doc.kind.as_str() {
        "stokes" => {
            let s = StokesVector::new(parse_stokes_components(&doc.data)?, from);
            document("stokes", Some(to), stokes_value(&convert_stokes(&s, to).s))
        }
        _ => {
            let m = parse_real_matrix4(&doc.data)?;
            document(
                "mueller",
                Some(to),
                real_matrix_value(&convert_mueller(m, from, to)),
            )
        }
    };
    out.meta = doc.meta;
    print_document(&out)?;
    Ok(())
}

fn cmd_from_jones() -> Result<(), Failure> {
    let doc = read_single_stdin_document()?;
    expect_kind(&doc, &["jones"])?;
    let t = JonesMatrix(parse_complex_matrix2(&doc.data)?);

    let m = mueller_from_jones(&t);
    let h = h_from_mueller_entries(&m);
    let c = c_from_mueller(&m);

    print_document(&document(
        "mueller",
        Some(StokesConvention::Internal),
        real_matrix_value(&m.0),
    ))?;
    print_document(&document("h", None, complex_matrix4_value(&h.0)))?;
    print_document(&document("c", None, complex_matrix4_value(&c.0)))?;
    Ok(())
}

fn cmd_decompose() -> Result<(), Failure> {
    let doc = read_single_stdin_document()?;
    expect_kind(&doc, &["mueller"])?;
    let m = MuellerMatrix(parse_real_matrix4(&doc.data)?);

    let d = cloude_decompose(&m);
    let kraus = kraus_from_decomposition(&d, m.m00())?;

    for alpha in 0..4 {
        let mut jones = document("jones", None, complex_matrix2_value(&d.jones_factors[alpha].0));
        jones.meta.insert("role".into(), "jones-factor".into());
        jones.meta.insert("index".into(), alpha.to_string());
        jones
            .meta
            .insert("lambda".into(), d.lambdas[alpha].to_string());
        jones.meta.insert(
            "probability".into(),
            (d.lambdas[alpha] / (2.0 * m.m00())).to_string(),
        );
        print_document(&jones)?;

        let mut factor = document(
            "mueller",
            Some(StokesConvention::Internal),
            real_matrix_value(&d.mj_factors[alpha].0),
        );
        factor.meta.insert("role".into(), "mueller-jones-factor".into());
        factor.meta.insert("index".into(), alpha.to_string());
        factor
            .meta
            .insert("lambda".into(), d.lambdas[alpha].to_string());
        print_document(&factor)?;
    }
    for (i, op) in kraus.ops.iter().enumerate() {
        let mut kdoc = document("jones", None, complex_matrix2_value(&op.0));
        kdoc.meta.insert("role".into(), "kraus-operator".into());
        kdoc.meta.insert("index".into(), i.to_string());
        kdoc.meta
            .insert("probability".into(), kraus.probabilities[i].to_string());
        print_document(&kdoc)?;
    }
    Ok(())
}

/// Physicality report; field order is fixed, so output is byte-stable.
#[derive(Serialize)]
struct CheckReport {
    is_mueller_jones: bool,
    cp: bool,
    eigenvalues: [f64; 4],
    trace_preserving: Option<bool>,
    trace_preservation_defect: Option<f64>,
}

fn cmd_check(tol: Option<f64>) -> Result<(), Failure> {
    let doc = read_single_stdin_document()?;
    expect_kind(&doc, &["mueller"])?;
    let m = MuellerMatrix(parse_real_matrix4(&doc.data)?);

    let mj_tol = tol.unwrap_or(DEFAULT_MUELLER_JONES_TOL);
    let physicality_tol = tol.unwrap_or(DEFAULT_PHYSICALITY_TOL);
    let physical = is_physical(&m, physicality_tol);

    // The trace verdict needs the Kraus operators, which only exist for a
    // completely positive matrix with positive intensity.
    let trace = kraus_from_decomposition(&cloude_decompose(&m), m.m00())
        .ok()
        .map(|k| check_trace_preserving(&k));

    let report = CheckReport {
        is_mueller_jones: is_mueller_jones(&m, mj_tol),
        cp: physical.cp,
        eigenvalues: physical.eigenvalues,
        trace_preserving: trace.map(|t| t.preserving),
        trace_preservation_defect: trace.map(|t| t.defect.inf_norm()),
    };
    print_line(&serde_json::to_string(&report).expect("report holds only finite numbers"))?;
    Ok(())
}

fn cmd_probe(input: &str, output: &str) -> Result<(), Failure> {
    let (in_doc, out_doc) = match (input, output) {
        ("-", "-") => {
            let lines = stdin_lines()?;
            match lines.as_slice() {
                [a, b] => (parse_document(a)?, parse_document(b)?),
                other => {
                    return Err(Failure::parse(format!(
                        "expected the probe and outcome documents on standard input, found {}",
                        other.len()
                    )));
                }
            }
        }
        ("-", path) => (read_single_stdin_document()?, read_file_document(path)?),
        (path, "-") => (read_file_document(path)?, read_single_stdin_document()?),
        (a, b) => (read_file_document(a)?, read_file_document(b)?),
    };
    expect_kind(&in_doc, &["density4"])?;
    expect_kind(&out_doc, &["density4"])?;

    let probe = DensityMatrix4::new(parse_complex_matrix4(&in_doc.data)?)?;
    // The outcome stays a raw matrix: a lossy channel leaves it with trace
    // below one, which is information the reconstruction needs.
    let outcome = parse_complex_matrix4(&out_doc.data)?;

    let m = reconstruct_mueller(&probe, &outcome)?;
    print_document(&document(
        "mueller",
        Some(StokesConvention::Internal),
        real_matrix_value(&m.0),
    ))?;
    Ok(())
}

fn cmd_targets(family: TargetFamily) -> Result<(), Failure> {
    let (state, meta): (DensityMatrix4, Vec<(&str, String)>) = match family {
        TargetFamily::Mems { gamma } => (
            mems_target(gamma)?,
            vec![("family", "mems".into()), ("gamma", gamma.to_string())],
        ),
        TargetFamily::Werner { p } => (
            werner_target(p)?,
            vec![("family", "werner".into()), ("p", p.to_string())],
        ),
        TargetFamily::Bell { index } => (
            bell_state(index as usize),
            vec![("family", "bell".into()), ("index", index.to_string())],
        ),
    };
    let mut doc = document("density4", None, complex_matrix4_value(state.matrix()));
    for (k, v) in meta {
        doc.meta.insert(k.into(), v);
    }
    print_document(&doc)?;
    Ok(())
}

fn cmd_selftest() -> Result<(), Failure> {
    let mut all_passed = true;
    for r in self_test() {
        let verdict = if r.passed { "ok" } else { "FAIL" };
        print_line(&format!("{verdict} {}: {}", r.name, r.detail))?;
        all_passed &= r.passed;
    }
    if all_passed {
        Ok(())
    } else {
        Err(Failure::domain(
            "selftest-failed",
            "one or more constant-table checks failed",
        ))
    }
}
