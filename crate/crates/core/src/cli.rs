//! Batch front end: one subcommand per checker or constructor.
//!
//! Every command reads UTF-8 JSON documents, prints a short text report and,
//! with `--json PATH`, writes a report document with the input digests.
//! Exit codes: 0 pass, 2 violation or counterexample, 3 inconclusive,
//! 64 usage, 65 malformed input.

use std::collections::BTreeMap;
use std::io::Write;

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::bruhat::{certify_free_bt, matrix_preset, valuation, MatrixGroupDoc, SCHOTTKY_RADIUS};
use crate::devissage::{
    centralizer_extension, check_acylindricity, check_betti_bounds, check_structure, n3_surface, principal_splitting_case,
    GraphOfGroups, DEFAULT_RADIUS, DEFAULT_WINDOW,
};
use crate::gluing::{
    check_free_criterion, dual_distance, dual_tree, glue_point, glue_subtree, skeleton, transverse_check,
    validate_candidate_action, Attestation, CoveringDoc, DualPoint, GraphOfActions, GraphOfActionsDoc, LabelMap, Verdict,
};
use crate::groups::{Alphabet, WordOracle};
use crate::isometry::{certify_free_on_ball, ActionWindow, CertStatus, PartialIsometry, WindowLengths};
use crate::lambdatree::{median, validate_tree_metric, FiniteLambdaMetric, MetricTree, PointDoc, SubtreeSpec, TreeDoc, TreePoint};
use crate::markedgroups::{relations_up_to, same_ball, MarkedGroupDoc, OracleDoc, SequenceDoc, Side};
use crate::ordgroup::LexValue;

pub const SCHEMA: &str = "lambda-forest/1";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_INCONCLUSIVE: i32 = 3;
pub const EXIT_USAGE: i32 = 64;
pub const EXIT_INPUT: i32 = 65;

#[derive(Debug, Parser)]
#[command(name = "lambda-forest", version, about = "Exact Λ-tree, gluing, Bruhat–Tits and dévissage checks")]
struct Cli {
    /// Write the report document here.
    #[arg(long, global = true, value_name = "PATH")]
    json: Option<String>,
    /// Worker threads.
    #[arg(long, global = true, value_name = "K")]
    threads: Option<usize>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Debug, Args)]
struct Input {
    #[arg(long, value_name = "PATH")]
    input: String,
}

#[derive(Debug, Subcommand)]
enum Cmd {
    /// Four-point check of a tree, metric table or candidate action.
    ValidateTree {
        #[command(flatten)]
        input: Input,
        #[arg(long, value_name = "N")]
        ball: Option<usize>,
    },
    /// Distances, medians and projections in a tree document
    Tree {
        #[command(subcommand)]
        op: TreeOp,
    },
    /// Classify words acting on a tree window, certify freeness on a ball
    Isom {
        #[command(subcommand)]
        op: IsomOp,
    },
    /// Valuations and Bruhat-Tits translation lengths for SL2 matrix groups
    Bt {
        #[command(subcommand)]
        op: BtOp,
    },
    /// Graphs of actions: point and subtree gluing, dual tree, free-gluing check
    Glue {
        #[command(subcommand)]
        op: GlueOp,
    },
    /// Transverse coverings of a rank-1 tree
    Cover {
        #[command(subcommand)]
        op: CoverOp,
    },
    /// Verify a graph-of-groups decomposition
    Gog {
        #[command(subcommand)]
        op: GogOp,
    },
    /// Relation balls of marked groups
    Marked {
        #[command(subcommand)]
        op: MarkedOp,
    },
    /// List or emit shipped input documents
    Preset {
        #[command(subcommand)]
        op: PresetOp,
    },
}

#[derive(Debug, Subcommand)]
enum TreeOp {
    Distance {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
    },
    Median {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        c: String,
    },
    /// Nearest point of the hull of `--onto` (points separated by `;`).
    Project {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        a: String,
        #[arg(long)]
        onto: String,
    },
}

#[derive(Debug, Subcommand)]
enum IsomOp {
    Classify {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        word: String,
        #[arg(long)]
        at: Option<String>,
    },
    Certify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = 4)]
        ball: usize,
    },
}

#[derive(Debug, Subcommand)]
enum BtOp {
    /// Valuation of a field element.
    Valuation {
        #[command(flatten)]
        input: Input,
    },
    Length {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        word: String,
    },
    Certify {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = SCHOTTKY_RADIUS)]
        ball: usize,
    },
}

#[derive(Debug, Subcommand)]
enum GlueOp {
    Point {
        #[command(flatten)]
        input: Input,
    },
    Subtree {
        #[command(flatten)]
        input: Input,
    },
    /// Dual tree of a graph of actions; points are `label:point`.
    Dual {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        a: Option<String>,
        #[arg(long)]
        b: Option<String>,
    },
    CheckFree {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Debug, Subcommand)]
enum CoverOp {
    Check {
        #[command(flatten)]
        input: Input,
    },
    Skeleton {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Debug, Subcommand)]
enum GogOp {
    Structure {
        #[command(flatten)]
        input: Input,
    },
    Acyl {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_RADIUS)]
        radius: usize,
        #[arg(long, default_value_t = DEFAULT_WINDOW)]
        window: usize,
    },
    Betti {
        #[command(flatten)]
        input: Input,
    },
    Principal {
        #[command(flatten)]
        input: Input,
    },
}

#[derive(Debug, Subcommand)]
enum MarkedOp {
    Ball {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        radius: usize,
    },
    Compare {
        #[arg(long)]
        a: String,
        #[arg(long)]
        b: String,
        #[arg(long)]
        radius: usize,
    },
    Profile {
        #[command(flatten)]
        input: Input,
        /// Overrides the document's `r_max`.
        #[arg(long)]
        radius: Option<usize>,
    },
}

#[derive(Debug, Subcommand)]
enum PresetOp {
    List,
    Emit { name: String },
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
}

impl CliError {
    fn input(path: &str, e: impl std::fmt::Display) -> Self {
        CliError::Input(format!("{path}: {e}"))
    }
}

/// Result of one command.
struct Outcome {
    status: Verdict,
    lines: Vec<String>,
    report: Value,
    parameters: BTreeMap<String, Value>,
}

impl Outcome {
    fn new(status: Verdict, report: impl Serialize) -> Self {
        Outcome { status, lines: Vec::new(), report: serde_json::to_value(report).expect("reports serialize"), parameters: BTreeMap::new() }
    }

    fn line(mut self, s: impl Into<String>) -> Self {
        self.lines.push(s.into());
        self
    }

    fn param(mut self, k: &str, v: impl Serialize) -> Self {
        self.parameters.insert(k.into(), serde_json::to_value(v).expect("parameters serialize"));
        self
    }
}

fn exit_code(v: Verdict) -> i32 {
    match v {
        Verdict::Pass => EXIT_PASS,
        Verdict::Fail => EXIT_VIOLATION,
        Verdict::Inconclusive => EXIT_INCONCLUSIVE,
    }
}

fn status_name(v: Verdict) -> &'static str {
    match v {
        Verdict::Pass => "PASS",
        Verdict::Fail => "FAIL",
        Verdict::Inconclusive => "INCONCLUSIVE",
    }
}

#[derive(Default)]
struct Inputs {
    digests: Vec<(String, String)>,
}

impl Inputs {
    fn load<T: DeserializeOwned>(&mut self, path: &str) -> Result<T, CliError> {
        let bytes = std::fs::read(path).map_err(|e| CliError::input(path, e))?;
        self.digests.push((path.to_string(), hex::encode(Sha256::digest(&bytes))));
        let v: Value = serde_json::from_slice(&bytes).map_err(|e| CliError::input(path, e))?;
        if let Some(s) = v.get("schema") {
            if s != SCHEMA {
                return Err(CliError::input(path, format!("unsupported schema {s}, expected {SCHEMA:?}")));
            }
        }
        serde_json::from_slice(&bytes).map_err(|e| CliError::input(path, e))
    }
}

/// Runs the command line `argv` (program name first), printing to standard output.
pub fn run(argv: &[String]) -> i32 {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    run_with(argv, &mut out)
}

pub fn run_with(argv: &[String], out: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_PASS };
            let _ = write!(out, "{}", e.render());
            return code;
        }
    };
    let mut inputs = Inputs::default();
    let mut listing = String::new();
    let result = match cli.threads {
        Some(k) => match rayon::ThreadPoolBuilder::new().num_threads(k).build() {
            Ok(pool) => pool.install(|| dispatch(&cli.cmd, &mut inputs, &mut listing)),
            Err(e) => Err(CliError::Usage(e.to_string())),
        },
        None => dispatch(&cli.cmd, &mut inputs, &mut listing),
    };
    let _ = write!(out, "{listing}");
    let outcome = match result {
        Ok(Some(o)) => o,
        Ok(None) => return EXIT_PASS,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(out, "usage error: {m}");
            return EXIT_USAGE;
        }
        Err(CliError::Input(m)) => {
            let _ = writeln!(out, "malformed input: {m}");
            return EXIT_INPUT;
        }
    };
    let _ = writeln!(out, "{} {}", status_name(outcome.status), command_name(&cli.cmd));
    for l in &outcome.lines {
        let _ = writeln!(out, "  {l}");
    }
    if let Some(path) = &cli.json {
        let mut params = outcome.parameters.clone();
        if let Some(k) = cli.threads {
            params.insert("threads".into(), json!(k));
        }
        let doc = json!({
            "schema": SCHEMA,
            "command": command_name(&cli.cmd),
            "status": outcome.status,
            "report": outcome.report,
            "provenance": {
                "version": env!("CARGO_PKG_VERSION"),
                "inputs": inputs.digests.iter().map(|(p, d)| json!({"path": p, "sha256": d})).collect::<Vec<_>>(),
                "parameters": params,
            },
        });
        let text = serde_json::to_string_pretty(&doc).expect("report serializes") + "\n";
        if let Err(e) = std::fs::write(path, text) {
            let _ = writeln!(out, "usage error: cannot write {path}: {e}");
            return EXIT_USAGE;
        }
    }
    exit_code(outcome.status)
}

fn command_name(c: &Cmd) -> String {
    let sub = match c {
        Cmd::ValidateTree { .. } => return "validate-tree".into(),
        Cmd::Tree { op } => match op {
            TreeOp::Distance { .. } => "tree distance",
            TreeOp::Median { .. } => "tree median",
            TreeOp::Project { .. } => "tree project",
        },
        Cmd::Isom { op } => match op {
            IsomOp::Classify { .. } => "isom classify",
            IsomOp::Certify { .. } => "isom certify",
        },
        Cmd::Bt { op } => match op {
            BtOp::Valuation { .. } => "bt valuation",
            BtOp::Length { .. } => "bt length",
            BtOp::Certify { .. } => "bt certify",
        },
        Cmd::Glue { op } => match op {
            GlueOp::Point { .. } => "glue point",
            GlueOp::Subtree { .. } => "glue subtree",
            GlueOp::Dual { .. } => "glue dual",
            GlueOp::CheckFree { .. } => "glue check-free",
        },
        Cmd::Cover { op } => match op {
            CoverOp::Check { .. } => "cover check",
            CoverOp::Skeleton { .. } => "cover skeleton",
        },
        Cmd::Gog { op } => match op {
            GogOp::Structure { .. } => "gog structure",
            GogOp::Acyl { .. } => "gog acyl",
            GogOp::Betti { .. } => "gog betti",
            GogOp::Principal { .. } => "gog principal",
        },
        Cmd::Marked { op } => match op {
            MarkedOp::Ball { .. } => "marked ball",
            MarkedOp::Compare { .. } => "marked compare",
            MarkedOp::Profile { .. } => "marked profile",
        },
        Cmd::Preset { op } => match op {
            PresetOp::List => "preset list",
            PresetOp::Emit { .. } => "preset emit",
        },
    };
    sub.into()
}

fn dispatch(cmd: &Cmd, inputs: &mut Inputs, out: &mut String) -> Result<Option<Outcome>, CliError> {
    Ok(Some(match cmd {
        Cmd::ValidateTree { input, ball } => validate_tree(inputs, &input.input, *ball)?,
        Cmd::Tree { op } => tree(inputs, op)?,
        Cmd::Isom { op } => isom(inputs, op)?,
        Cmd::Bt { op } => bt(inputs, op)?,
        Cmd::Glue { op } => glue(inputs, op)?,
        Cmd::Cover { op } => cover(inputs, op)?,
        Cmd::Gog { op } => gog(inputs, op)?,
        Cmd::Marked { op } => marked(inputs, op)?,
        Cmd::Preset { op } => {
            match op {
                PresetOp::List => {
                    for (name, target) in PRESETS {
                        out.push_str(&format!("{name:<28} {target}\n"));
                    }
                }
                PresetOp::Emit { name } => {
                    let doc = preset_emit(name).ok_or_else(|| CliError::Usage(format!("unknown preset {name:?}")))?;
                    out.push_str(&(serde_json::to_string_pretty(&doc).expect("presets serialize") + "\n"));
                }
            }
            return Ok(None);
        }
    }))
}

fn point(t: &MetricTree, s: &str) -> Result<TreePoint, CliError> {
    t.parse_point(s).map_err(|e| CliError::Usage(format!("point {s:?}: {e}")))
}

/// Metric table, optionally with generators given as partial label maps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    #[serde(flatten)]
    pub metric: FiniteLambdaMetric,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub generators: BTreeMap<String, BTreeMap<String, String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDoc>,
}

fn validate_tree(inputs: &mut Inputs, path: &str, ball: Option<usize>) -> Result<Outcome, CliError> {
    let v: Value = inputs.load(path)?;
    let metric_doc: CandidateDoc = if v.get("dist").is_some() {
        serde_json::from_value(v).map_err(|e| CliError::input(path, e))?
    } else {
        let t: TreeDoc = serde_json::from_value(v).map_err(|e| CliError::input(path, e))?;
        let t = t.build().map_err(|e| CliError::input(path, e))?;
        CandidateDoc { schema: None, metric: t.distance_table(), generators: BTreeMap::new(), oracle: None }
    };
    let m = &metric_doc.metric;
    m.check_shape().map_err(|e| CliError::input(path, e))?;
    if metric_doc.generators.is_empty() {
        let verdict = validate_tree_metric(m).map_err(|e| CliError::input(path, e))?;
        let status = if verdict.is_ok() { Verdict::Pass } else { Verdict::Fail };
        let line = match &verdict {
            crate::lambdatree::TreeMetricVerdict::Ok { points, quadruples_checked, .. } => {
                format!("{points} points, {quadruples_checked} quadruples satisfy the four-point condition")
            }
            crate::lambdatree::TreeMetricVerdict::Violation { witness, lhs, rhs } => {
                format!("four-point violation at ({}): {lhs} > {rhs}", witness.join(", "))
            }
        };
        return Ok(Outcome::new(status, &verdict).line(line));
    }
    let index = |l: &String| m.labels.iter().position(|x| x == l).ok_or_else(|| CliError::input(path, format!("unknown label {l:?}")));
    let mut gens = Vec::new();
    for (name, map) in &metric_doc.generators {
        let mut image = vec![None; m.len()];
        for (k, v) in map {
            image[index(k)?] = Some(index(v)?);
        }
        gens.push(LabelMap { name: name.clone(), image });
    }
    let names: Vec<&str> = metric_doc.generators.keys().map(String::as_str).collect();
    let alphabet = Alphabet::from_strs(&names).map_err(|e| CliError::input(path, e))?;
    let oracle = match &metric_doc.oracle {
        Some(o) => o.build().map_err(|e| CliError::input(path, e))?,
        None => WordOracle::Free(alphabet),
    };
    let n = ball.unwrap_or(3);
    let r = validate_candidate_action(m, &gens, &oracle, n).map_err(|e| CliError::input(path, e))?;
    let mut o = Outcome::new(r.status, &r).param("ball", n).line(format!("metric: {}", if r.metric.is_ok() { "tree" } else { "violation" }));
    for g in &r.generators {
        o = o.line(match &g.witness {
            None => format!("generator {}: isometric", g.generator),
            Some((x, y)) => format!("generator {}: not isometric at ({x}, {y})", g.generator),
        });
    }
    if let Some(c) = &r.certificate {
        o = o.line(format!("certificate at N = {}: {:?}", c.n, c.status));
    }
    Ok(o)
}

fn tree(inputs: &mut Inputs, op: &TreeOp) -> Result<Outcome, CliError> {
    let path = match op {
        TreeOp::Distance { input, .. } | TreeOp::Median { input, .. } | TreeOp::Project { input, .. } => &input.input,
    };
    let doc: TreeDoc = inputs.load(path)?;
    let t = doc.build().map_err(|e| CliError::input(path, e))?;
    Ok(match op {
        TreeOp::Distance { a, b, .. } => {
            let d = t.dist(&point(&t, a)?, &point(&t, b)?);
            Outcome::new(Verdict::Pass, json!({"a": a, "b": b, "distance": d})).line(format!("d({a}, {b}) = {d}"))
        }
        TreeOp::Median { a, b, c, .. } => {
            let m = median(&t, &point(&t, a)?, &point(&t, b)?, &point(&t, c)?);
            let name = t.point_name(&m);
            Outcome::new(Verdict::Pass, json!({"median": name})).line(format!("median({a}, {b}, {c}) = {name}"))
        }
        TreeOp::Project { a, onto, .. } => {
            let gens = onto.split(';').map(|s| point(&t, s)).collect::<Result<Vec<_>, _>>()?;
            let hull = SubtreeSpec::hull(gens).map_err(|e| CliError::Usage(e.to_string()))?;
            let x = point(&t, a)?;
            let p = hull.project(&t, &x);
            let d = t.dist(&x, &p);
            let name = t.point_name(&p);
            Outcome::new(Verdict::Pass, json!({"projection": name, "distance": d})).line(format!("projection of {a} = {name} at distance {d}"))
        }
    })
}

/// One window of an action: generators as partial isometries from anchor pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub tree: TreeDoc,
    pub generators: BTreeMap<String, Vec<(PointDoc, PointDoc)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub basepoint: Option<PointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleDoc>,
}

impl WindowDoc {
    pub fn build(&self) -> Result<(ActionWindow, TreePoint), String> {
        let t = self.tree.build().map_err(|e| e.to_string())?;
        let names: Vec<&str> = self.generators.keys().map(String::as_str).collect();
        let alphabet = Alphabet::from_strs(&names).map_err(|e| e.to_string())?;
        let mut gens = Vec::new();
        for (name, anchors) in &self.generators {
            let pairs = anchors
                .iter()
                .map(|(a, b)| Ok((a.resolve(&t)?, b.resolve(&t)?)))
                .collect::<Result<Vec<_>, crate::lambdatree::TreeError>>()
                .map_err(|e| format!("generator {name}: {e}"))?;
            gens.push(PartialIsometry::new(&t, &t, pairs).map_err(|e| format!("generator {name}: {e}"))?);
        }
        let base = match &self.basepoint {
            Some(p) => p.resolve(&t).map_err(|e| e.to_string())?,
            None => TreePoint::Vertex(crate::lambdatree::VertexId(0)),
        };
        let mut w = ActionWindow::new(t, alphabet, gens).map_err(|e| e.to_string())?;
        if let Some(o) = &self.oracle {
            w = w.with_oracle(o.build().map_err(|e| e.to_string())?);
        }
        Ok((w, base))
    }
}

fn cert_verdict(s: CertStatus) -> Verdict {
    match s {
        CertStatus::FreeOnBall => Verdict::Pass,
        CertStatus::Counterexample => Verdict::Fail,
        CertStatus::Inconclusive => Verdict::Inconclusive,
    }
}

fn isom(inputs: &mut Inputs, op: &IsomOp) -> Result<Outcome, CliError> {
    let path = match op {
        IsomOp::Classify { input, .. } | IsomOp::Certify { input, .. } => &input.input,
    };
    let doc: WindowDoc = inputs.load(path)?;
    let (w, base) = doc.build().map_err(|e| CliError::input(path, e))?;
    Ok(match op {
        IsomOp::Classify { word, at, .. } => {
            let x = match at {
                Some(a) => point(&w.tree, a)?,
                None => base,
            };
            let wd = w.parse(word).map_err(|e| CliError::Usage(e.to_string()))?;
            let c = w.classify(&wd, &x).map_err(|e| CliError::input(path, e))?;
            match w.describe(&c) {
                Some(d) => {
                    let line = format!("{word}: {}", serde_json::to_string(&d).expect("serializes"));
                    Outcome::new(Verdict::Pass, &d).param("word", word).line(line)
                }
                None => {
                    let reason = match &c {
                        crate::isometry::Classification::Inconclusive(r) => r.clone(),
                        _ => String::new(),
                    };
                    Outcome::new(Verdict::Inconclusive, json!({"type": "inconclusive", "reason": reason}))
                        .param("word", word)
                        .line(format!("{word}: inconclusive ({reason})"))
                }
            }
        }
        IsomOp::Certify { ball, .. } => {
            let lengths = WindowLengths { window: &w, basepoint: base };
            let oracle = w.oracle.clone().unwrap_or_else(|| WordOracle::Free(w.alphabet.clone()));
            let c = certify_free_on_ball(&lengths, &oracle, &w.alphabet, *ball);
            let line = format!("{} words checked at N = {}", c.words_checked, c.n);
            Outcome::new(cert_verdict(c.status), &c).param("ball", ball).line(line)
        }
    })
}

/// A field element: `{"field": .., "p": .., "value": ..}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElementDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub field: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub p: Option<u64>,
    pub value: Value,
}

fn bt(inputs: &mut Inputs, op: &BtOp) -> Result<Outcome, CliError> {
    match op {
        BtOp::Valuation { input } => {
            let path = &input.input;
            let doc: ElementDoc = inputs.load(path)?;
            let field = MatrixGroupDoc { schema: None, field: doc.field.clone(), p: doc.p, generators: BTreeMap::new() }
                .field()
                .map_err(|e| CliError::input(path, e))?;
            let x = crate::bruhat::Frac::from_json(&doc.value).map_err(|e| CliError::input(path, e))?;
            let el = crate::bruhat::ValuedElement::new(field, x).map_err(|e| CliError::input(path, e))?;
            let v = el.valuation();
            Ok(Outcome::new(Verdict::Pass, json!({"valuation": v.finite(), "infinite": v.finite().is_none()}))
                .line(format!("v({}) = {v}", el.value)))
        }
        BtOp::Length { input, word } => {
            let path = &input.input;
            let doc: MatrixGroupDoc = inputs.load(path)?;
            let g = doc.build().map_err(|e| CliError::input(path, e))?;
            let w = g.alphabet().parse(word).map_err(|e| CliError::Usage(e.to_string()))?;
            let m = g.evaluate(&w);
            let tr = m.trace();
            let v = valuation(g.field(), &tr);
            let l = g.length(&w);
            Ok(Outcome::new(Verdict::Pass, json!({"word": word, "trace": tr.to_string(), "trace_valuation": v.finite(), "length": l}))
                .param("word", word)
                .line(format!("Tr = {tr}, v(Tr) = {v}, l = {l}")))
        }
        BtOp::Certify { input, ball } => {
            let path = &input.input;
            let doc: MatrixGroupDoc = inputs.load(path)?;
            let g = doc.build().map_err(|e| CliError::input(path, e))?;
            let c = certify_free_bt(&g, *ball);
            let mut o = Outcome::new(cert_verdict(c.certificate.status), &c)
                .param("ball", ball)
                .line(format!("{} words checked at N = {}", c.certificate.words_checked, c.certificate.n));
            if let Some(w) = &c.certificate.counterexample {
                o = o.line(format!("counterexample {w}"));
            }
            if let Some(l) = &c.certificate.min_positive_length {
                o = o.line(format!("least positive length {l}"));
            }
            Ok(o)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AttachmentDoc {
    pub tree: TreeDoc,
    /// Point of the base tree.
    pub at: PointDoc,
    /// Point of the attached tree identified with `at`.
    pub point: PointDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluePointDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub base: TreeDoc,
    pub attachments: Vec<AttachmentDoc>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GlueSubtreeDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schema: Option<String>,
    pub y1: TreeDoc,
    pub y2: TreeDoc,
    pub phi: Vec<(PointDoc, PointDoc)>,
}

/// Graph of actions with freeness attestations keyed by orbit.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeCheckDoc {
    #[serde(flatten)]
    pub graph: GraphOfActionsDoc,
    #[serde(default)]
    pub attestations: BTreeMap<String, Attestation>,
}

fn dual_point(g: &GraphOfActions, s: &str) -> Result<DualPoint, CliError> {
    let (label, p) = s.split_once(':').unwrap_or(("", s));
    let v = g.vertex(label).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(DualPoint::new(v, point(g.tree(v), p)?))
}

fn tree_outcome(t: &MetricTree) -> Outcome {
    let doc = TreeDoc::from(t);
    let verdict = validate_tree_metric(&t.distance_table()).ok();
    let ok = verdict.as_ref().is_some_and(|v| v.is_ok());
    Outcome::new(if ok { Verdict::Pass } else { Verdict::Fail }, json!({"tree": doc, "validator": verdict}))
        .line(format!("{} vertices, {} edges", t.vertex_count(), t.edges().len()))
}

fn glue(inputs: &mut Inputs, op: &GlueOp) -> Result<Outcome, CliError> {
    match op {
        GlueOp::Point { input } => {
            let path = &input.input;
            let doc: GluePointDoc = inputs.load(path)?;
            let bad = |e: crate::lambdatree::TreeError| CliError::input(path, e);
            let y = doc.base.build().map_err(bad)?;
            let mut att = Vec::new();
            for a in &doc.attachments {
                let yi = a.tree.build().map_err(bad)?;
                let x = a.at.resolve(&y).map_err(bad)?;
                let p = a.point.resolve(&yi).map_err(bad)?;
                att.push((yi, x, p));
            }
            let g = glue_point(&y, &att).map_err(|e| CliError::input(path, e))?;
            Ok(tree_outcome(&g.tree))
        }
        GlueOp::Subtree { input } => {
            let path = &input.input;
            let doc: GlueSubtreeDoc = inputs.load(path)?;
            let bad = |e: crate::lambdatree::TreeError| CliError::input(path, e);
            let y1 = doc.y1.build().map_err(bad)?;
            let y2 = doc.y2.build().map_err(bad)?;
            let anchors = doc.phi.iter().map(|(a, b)| Ok((a.resolve(&y1)?, b.resolve(&y2)?))).collect::<Result<Vec<_>, _>>().map_err(bad)?;
            let phi = PartialIsometry::new(&y1, &y2, anchors).map_err(|e| CliError::input(path, e))?;
            let g = glue_subtree(&y1, &y2, &phi).map_err(|e| CliError::input(path, e))?;
            Ok(tree_outcome(&g.tree))
        }
        GlueOp::Dual { input, a, b } => {
            let path = &input.input;
            let doc: GraphOfActionsDoc = inputs.load(path)?;
            let g = doc.build().map_err(|e| CliError::input(path, e))?;
            let dual = dual_tree(&g).map_err(|e| CliError::input(path, e))?;
            let mut o = tree_outcome(&dual.tree);
            if let (Some(a), Some(b)) = (a, b) {
                let (pa, pb) = (dual_point(&g, a)?, dual_point(&g, b)?);
                let d = dual_distance(&g, &pa, &pb).map_err(|e| CliError::Usage(e.to_string()))?;
                o.report["distance"] = serde_json::to_value(&d).expect("serializes");
                o = o.param("a", a).param("b", b).line(format!("d({a}, {b}) = {d}"));
            }
            Ok(o)
        }
        GlueOp::CheckFree { input } => {
            let path = &input.input;
            let doc: FreeCheckDoc = inputs.load(path)?;
            let g = doc.graph.build().map_err(|e| CliError::input(path, e))?;
            let samples: Vec<DualPoint> = (0..g.vertices().len())
                .flat_map(|v| g.tree(v).vertices().map(move |x| DualPoint::new(v, TreePoint::Vertex(x))))
                .collect();
            let r = check_free_criterion(&g, &doc.attestations, &samples).map_err(|e| CliError::input(path, e))?;
            let mut o = Outcome::new(r.status, &r).line(format!("{} sampled classes", r.classes.len()));
            if !r.missing_attestations.is_empty() {
                o = o.line(format!("missing attestations: {}", r.missing_attestations.join(", ")));
            }
            if let Some(w) = &r.witness {
                o = o.line(format!("translation {} -> {} moves {} to {} by {}", w.from, w.to, w.point, w.image, w.shift));
            }
            Ok(o)
        }
    }
}

fn cover(inputs: &mut Inputs, op: &CoverOp) -> Result<Outcome, CliError> {
    let path = match op {
        CoverOp::Check { input } | CoverOp::Skeleton { input } => &input.input,
    };
    let doc: CoveringDoc = inputs.load(path)?;
    let c = doc.build().map_err(|e| CliError::input(path, e))?;
    Ok(match op {
        CoverOp::Check { .. } => {
            let v = transverse_check(&c);
            let mut o = Outcome::new(if v.is_empty() { Verdict::Pass } else { Verdict::Fail }, json!({"violations": v}))
                .line(format!("{} violation(s)", v.len()));
            for x in &v {
                o = o.line(serde_json::to_string(x).expect("serializes"));
            }
            o
        }
        CoverOp::Skeleton { .. } => {
            let s = skeleton(&c);
            let ok = s.connected && s.acyclic;
            let line = format!("{} points, {} subtrees, {} edges, tree: {ok}", s.points.len(), s.subtrees.len(), s.edges.len());
            Outcome::new(if ok { Verdict::Pass } else { Verdict::Fail }, &s).line(line)
        }
    })
}

fn gog(inputs: &mut Inputs, op: &GogOp) -> Result<Outcome, CliError> {
    let path = match op {
        GogOp::Structure { input } | GogOp::Acyl { input, .. } | GogOp::Betti { input } | GogOp::Principal { input } => &input.input,
    };
    let g: GraphOfGroups = inputs.load(path)?;
    let bad = |e: crate::devissage::DevissageError| CliError::input(path, e);
    Ok(match op {
        GogOp::Structure { .. } => {
            let r = check_structure(&g).map_err(bad)?;
            let mut o = Outcome::new(r.status, &r);
            for c in &r.clauses {
                o = o.line(format!("{:<20} {:<24} {:?} {}", c.clause, c.subject, c.verdict, c.detail));
            }
            for rem in &r.remarks {
                o = o.line(format!("remark: {rem}"));
            }
            o
        }
        GogOp::Acyl { radius, window, .. } => {
            let r = check_acylindricity(&g, *radius, *window).map_err(bad)?;
            let mut o = Outcome::new(r.status, &r)
                .param("radius", radius)
                .param("window", window)
                .line(format!("{} path prefixes explored", r.paths_explored));
            if let Some(w) = &r.witness {
                let steps: Vec<String> = w.steps.iter().map(|s| format!("{}[{}]", s.edge, s.coset)).collect();
                o = o.line(format!("path {} fixed by {} at {}", steps.join(" "), w.element, w.end));
            }
            o
        }
        GogOp::Betti { .. } => {
            let ambient = g.ambient().map_err(bad)?.ok_or_else(|| CliError::input(path, "missing \"ambient\" presentation"))?;
            let r = check_betti_bounds(&g, &ambient, &g.max_abelian).map_err(bad)?;
            let slack = r.slack.map_or("unknown".to_string(), |s| s.to_string());
            Outcome::new(r.status, &r)
                .line(format!("b1 = {}, lower bound slack = {slack}", r.b1))
                .line(format!("sum (Rk A - 1) = {}, slack = {}", r.abelian_sum, r.abelian_slack))
        }
        GogOp::Principal { .. } => match principal_splitting_case(&g) {
            Ok(c) => {
                let line = serde_json::to_string(&c).expect("serializes");
                Outcome::new(Verdict::Pass, &c).line(line)
            }
            Err(crate::devissage::DevissageError::StructureNotVerified) => {
                Outcome::new(Verdict::Fail, json!({"error": "structure check failed"})).line("structure check failed; no case analysis")
            }
            Err(e) => return Err(bad(e)),
        },
    })
}

fn marked(inputs: &mut Inputs, op: &MarkedOp) -> Result<Outcome, CliError> {
    let budget = |e: crate::markedgroups::MarkedError| match e {
        crate::markedgroups::MarkedError::Budget { .. } | crate::markedgroups::MarkedError::SizeMismatch(..) => CliError::Usage(e.to_string()),
        e => CliError::Input(e.to_string()),
    };
    Ok(match op {
        MarkedOp::Ball { input, radius } => {
            let doc: MarkedGroupDoc = inputs.load(&input.input)?;
            let m = doc.build().map_err(|e| CliError::input(&input.input, e))?;
            let b = relations_up_to(&m, *radius).map_err(budget)?;
            let words = b.format();
            let shown: Vec<&str> = words.iter().take(8).map(String::as_str).collect();
            Outcome::new(Verdict::Pass, json!({"radius": radius, "relations": words}))
                .param("radius", radius)
                .line(format!("{} relations of length <= {radius}", words.len()))
                .line(shown.join(" "))
        }
        MarkedOp::Compare { a, b, radius } => {
            let da: MarkedGroupDoc = inputs.load(a)?;
            let db: MarkedGroupDoc = inputs.load(b)?;
            let ma = da.build().map_err(|e| CliError::input(a, e))?;
            let mb = db.build().map_err(|e| CliError::input(b, e))?;
            let c = same_ball(&ma, &mb, *radius).map_err(budget)?;
            let alpha = Alphabet::standard(ma.size());
            let witness = c.witness.as_ref().map(|(w, s)| json!({"word": alpha.format(w), "relation_of": s}));
            let mut o = Outcome::new(if c.same { Verdict::Pass } else { Verdict::Fail }, json!({"same": c.same, "witness": witness}))
                .param("radius", radius)
                .line(format!("same relations up to length {radius}: {}", c.same));
            if let Some((w, s)) = &c.witness {
                let side = if *s == Side::First { a } else { b };
                o = o.line(format!("first divergent relation {} (relation of {side})", alpha.format(w)));
            }
            o
        }
        MarkedOp::Profile { input, radius } => {
            let mut doc: SequenceDoc = inputs.load(&input.input)?;
            if let Some(r) = radius {
                doc.r_max = *r;
            }
            let rows = doc.profile().map_err(budget)?;
            let status = if rows.iter().all(|r| r.index.is_some()) { Verdict::Pass } else { Verdict::Inconclusive };
            let mut o = Outcome::new(status, json!({"rows": rows})).param("r_max", doc.r_max).line(format!("{:>3}  {:>5}", "R", "index"));
            for r in &rows {
                o = o.line(format!("{:>3}  {:>5}", r.radius, r.index.map_or("inf".to_string(), |i| i.to_string())));
            }
            o
        }
    })
}

/// Preset names and the subcommand that consumes each.
pub const PRESETS: [(&str, &str); 8] = [
    ("schottky-qt", "bt certify"),
    ("z2-diagonal", "bt certify"),
    ("unipotent-fail", "bt certify"),
    ("centralizer-extension-gog", "gog structure|acyl|betti|principal"),
    ("n3-surface-gog", "gog structure|acyl|betti|principal"),
    ("z-to-z2-sequence", "marked profile"),
    ("square-cycle", "validate-tree"),
    ("tripod", "validate-tree, tree"),
];

/// The 4-cycle with unit edges, as a metric table.
pub fn square_cycle() -> CandidateDoc {
    let one = LexValue::ints(&[1]);
    let two = LexValue::ints(&[2]);
    let zero = LexValue::zero(1);
    let labels: Vec<String> = ["a", "b", "c", "d"].iter().map(|s| s.to_string()).collect();
    let dist = (0..4)
        .map(|i: usize| {
            (0..4)
                .map(|j: usize| match (i + 4 - j) % 4 {
                    0 => zero.clone(),
                    2 => two.clone(),
                    _ => one.clone(),
                })
                .collect()
        })
        .collect();
    CandidateDoc {
        schema: Some(SCHEMA.into()),
        metric: FiniteLambdaMetric { rank: 1, labels, dist },
        generators: BTreeMap::new(),
        oracle: None,
    }
}

/// Three legs of lengths `(1, 0)`, `(0, 1)`, `(1, 1)` in `ℚ²`.
pub fn tripod() -> TreeDoc {
    let edge = |v: &str, len: &[i64]| crate::lambdatree::EdgeDoc { u: "o".into(), v: v.into(), len: LexValue::ints(len) };
    TreeDoc {
        schema: Some(SCHEMA.into()),
        rank: 2,
        vertices: ["o", "x", "y", "z"].iter().map(|s| s.to_string()).collect(),
        edges: vec![edge("x", &[1, 0]), edge("y", &[0, 1]), edge("z", &[1, 1])],
    }
}

/// The input document of a preset, with a provenance block.
pub fn preset_emit(name: &str) -> Option<Value> {
    let mut doc = match name {
        "schottky-qt" | "z2-diagonal" | "unipotent-fail" => serde_json::to_value(matrix_preset(name)?.to_doc()),
        "centralizer-extension-gog" => serde_json::to_value(centralizer_extension()),
        "n3-surface-gog" => serde_json::to_value(n3_surface()),
        "z-to-z2-sequence" => serde_json::to_value(SequenceDoc::z_to_z2()),
        "square-cycle" => serde_json::to_value(square_cycle()),
        "tripod" => serde_json::to_value(tripod()),
        _ => return None,
    }
    .expect("presets serialize");
    doc["schema"] = json!(SCHEMA);
    doc["provenance"] = json!({"preset": name, "version": env!("CARGO_PKG_VERSION")});
    Some(doc)
}
