//! Batch dispatcher behind the command-line tool.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde_json::{json, Map, Value};

use crate::approx::epsilon_approximate;
use crate::error::{Error, Result};
use crate::generate::GeneratorSpec;
use crate::io::{self, format_rational, trace_string};
use crate::measure::{average, dirac, sobczyk_hammer_decompose, strong_continuity_deficit, KeislerMeasure};
use crate::morley::evaluation_grid;
use crate::order::{order_array_search, theta_ladder_check};
use crate::relation::{AmbientRelation, Side};
use crate::stability::{double_limit_estimate, ladder_index, vc_dimension};
use crate::two_tree::build_two_tree;
use crate::types::{chi_eval, compute_type_space, Definability, TypeSpace};
use crate::Rational;

pub const TOOL: &str = "locstab";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_CAP: i32 = 3;
pub const EXIT_APPROX: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Analyze,
    Decompose,
    Morley,
    Approx,
    SearchOrder,
    DoubleLimit,
    TwoTree,
    Generate,
}

impl Command {
    pub const ALL: [Command; 8] = [
        Command::Analyze,
        Command::Decompose,
        Command::Morley,
        Command::Approx,
        Command::SearchOrder,
        Command::DoubleLimit,
        Command::TwoTree,
        Command::Generate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Analyze => "analyze",
            Command::Decompose => "decompose",
            Command::Morley => "morley",
            Command::Approx => "approx",
            Command::SearchOrder => "search-order",
            Command::DoubleLimit => "double-limit",
            Command::TwoTree => "two-tree",
            Command::Generate => "generate",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Command::ALL
            .into_iter()
            .find(|c| c.name() == s)
            .ok_or_else(|| Error::Parse(format!("unknown command {s:?}")))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Input {
    File(PathBuf),
    Generator(GeneratorSpec),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            _ => Err(Error::Parse(format!("unknown format {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub input: Input,
    /// Ladder cap, order-array size bound and two-tree depth.
    pub cap: usize,
    pub eps: Rational,
    pub r: Rational,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
    /// Measure document for decompose, approx and two-tree.
    pub measure: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(command: Command, input: Input) -> RunConfig {
        RunConfig {
            command,
            input,
            cap: 12,
            eps: Rational::new(1.into(), 8.into()),
            r: Rational::new(0.into(), 1.into()),
            seed: 0,
            out: None,
            format: Format::Json,
            measure: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cap == 0 {
            return Err(Error::InvalidParameter("--cap must be at least 1".into()));
        }
        let zero = Rational::new(0.into(), 1.into());
        let one = Rational::new(1.into(), 1.into());
        if self.eps <= zero || self.eps > one {
            return Err(Error::InvalidParameter("--eps must lie in (0, 1]".into()));
        }
        if self.r < zero || self.r >= one {
            return Err(Error::InvalidParameter("--r must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn echo(&self) -> Value {
        json!({
            "input": match &self.input {
                Input::File(p) => json!({"file": p.display().to_string()}),
                Input::Generator(g) => json!({"gen": g.to_string()}),
            },
            "cap": self.cap,
            "eps": format_rational(&self.eps),
            "r": format_rational(&self.r),
            "seed": self.seed,
            "format": match self.format { Format::Json => "json", Format::Csv => "csv" },
            "measure": self.measure.as_ref().map(|p| p.display().to_string()),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Report {
    pub document: Value,
    pub exit_code: i32,
}

impl Report {
    /// Text in the requested format.
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.document).expect("plain JSON");
                s.push('\n');
                s
            }
            Format::Csv => to_csv(&self.document),
        }
    }
}

/// Exit status for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::ApproximationExhausted { .. } => EXIT_APPROX,
        _ => EXIT_VALIDATION,
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<(String, String)>) {
    let key = |k: &str| {
        if prefix.is_empty() {
            k.to_string()
        } else {
            format!("{prefix}.{k}")
        }
    };
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                flatten(&key(k), x, out);
            }
        }
        Value::Array(a) => {
            for (i, x) in a.iter().enumerate() {
                flatten(&key(&i.to_string()), x, out);
            }
        }
        Value::String(s) => out.push((prefix.to_string(), s.clone())),
        Value::Null => out.push((prefix.to_string(), String::new())),
        other => out.push((prefix.to_string(), other.to_string())),
    }
}

/// `key,value` lines with dotted paths.
pub fn to_csv(v: &Value) -> String {
    let mut rows = Vec::new();
    flatten("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["key", "value"]).expect("in-memory write");
    for (k, x) in rows {
        w.write_record([k, x]).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 input")
}

fn q(v: &Rational) -> Value {
    Value::String(format_rational(v))
}

fn load_input(input: &Input) -> Result<AmbientRelation> {
    match input {
        Input::File(p) => io::load_relation(p),
        Input::Generator(g) => g.build(),
    }
}

struct Context {
    rel: Arc<AmbientRelation>,
    phi: Arc<TypeSpace>,
    opp: Arc<TypeSpace>,
}

impl Context {
    fn new(rel: AmbientRelation) -> Context {
        let rel = Arc::new(rel);
        Context {
            phi: Arc::new(compute_type_space(&rel, Side::Phi).with_definitions()),
            opp: Arc::new(compute_type_space(&rel, Side::Opp).with_definitions()),
            rel,
        }
    }

    fn space(&self, side: Side) -> &Arc<TypeSpace> {
        match side {
            Side::Phi => &self.phi,
            Side::Opp => &self.opp,
        }
    }

    /// The measure file, or the average of the model rows.
    fn measure(&self, cfg: &RunConfig) -> Result<KeislerMeasure<Rational>> {
        match &cfg.measure {
            Some(path) => {
                let text = std::fs::read_to_string(path)?;
                io::parse_measure(&text, self.space(io::measure_side(&text)?))
            }
            None => average(&self.phi, self.rel.model_rows()),
        }
    }

    fn point_masses(&self, side: Side) -> Vec<KeislerMeasure<Rational>> {
        let sp = self.space(side);
        sp.types()
            .iter()
            .filter(|t| t.realized_in_m)
            .map(|t| dirac(sp, t.id).expect("type of its own space"))
            .collect()
    }
}

fn type_json(sp: &TypeSpace, id: usize) -> Value {
    let t = &sp.types()[id];
    let len = sp.relation().params(sp.side()).len();
    json!({
        "type": id,
        "trace": trace_string(&t.trace, len),
        "realizer": t.realizers.first(),
    })
}

fn measure_json(mu: &KeislerMeasure<Rational>) -> Value {
    let sp = mu.space();
    Value::Array(
        mu.weights()
            .iter()
            .map(|(&id, w)| {
                let mut v = type_json(sp, id);
                v["weight"] = q(w);
                v
            })
            .collect(),
    )
}

/// Runs one command. Errors surface as `Err`; a search that stops at the cap
/// still yields a report with [`EXIT_CAP`].
pub fn run(cfg: &RunConfig) -> Result<Report> {
    cfg.validate()?;
    let rel = load_input(&cfg.input)?;
    let mut exit_code = EXIT_OK;
    let result = match cfg.command {
        Command::Generate => json!({
            "relation": serde_json::to_value(io::RelationDoc::from_relation(&rel))?,
        }),
        Command::Analyze => {
            let ctx = Context::new(rel);
            let (ladder, witness) = ladder_index(&ctx.rel, cfg.cap)?;
            if ladder == cfg.cap && cfg.cap < ctx.rel.rows().min(ctx.rel.cols()) {
                exit_code = EXIT_CAP;
            }
            let (vc, shattered) = vc_dimension(&ctx.rel);
            let census = |sp: &TypeSpace| {
                let undefinable = sp
                    .types()
                    .iter()
                    .filter(|t| matches!(t.definability, Some(Definability::Undefinable { .. })))
                    .count();
                json!({
                    "types": sp.len(),
                    "realized_in_model": sp.types().iter().filter(|t| t.realized_in_m).count(),
                    "definable": sp.len() - undefinable,
                    "undefinable": undefinable,
                })
            };
            let (mut symmetric, mut asymmetric) = (0usize, 0usize);
            for p in ctx.phi.types().iter().filter(|t| t.is_definable()) {
                for qt in ctx.opp.types().iter().filter(|t| t.is_definable()) {
                    if chi_eval(&ctx.rel, p, qt)?.symmetric {
                        symmetric += 1;
                    } else {
                        asymmetric += 1;
                    }
                }
            }
            json!({
                "rows": ctx.rel.rows(),
                "cols": ctx.rel.cols(),
                "ladder_index": ladder,
                "ladder_cap_reached": exit_code == EXIT_CAP,
                "ladder_witness": witness,
                "vc_dim": vc,
                "shattered": shattered,
                "phi_types": ctx.phi.len(),
                "opp_types": ctx.opp.len(),
                "definability": {"phi": census(&ctx.phi), "opp": census(&ctx.opp)},
                "chi": {"symmetric": symmetric, "asymmetric": asymmetric},
            })
        }
        Command::Decompose => {
            let ctx = Context::new(rel);
            let mu = ctx.measure(cfg)?;
            let sp = mu.space().clone();
            let raw: Vec<Rational> = (0..sp.len()).map(|id| mu.weight(id)).collect();
            let d = sobczyk_hammer_decompose(&sp, &raw)?;
            json!({
                "side": sp.side(),
                "types": sp.len(),
                "components": d.components.iter().map(|(id, w)| {
                    let mut v = type_json(&sp, *id);
                    v["weight"] = q(w);
                    v
                }).collect::<Vec<_>>(),
                "total": q(&d.atomic.total()),
                "residual": q(&d.residual),
                "strong_continuity_deficit": q(&strong_continuity_deficit(&mu)),
            })
        }
        Command::Morley => {
            let ctx = Context::new(rel);
            let mus = ctx.point_masses(Side::Phi);
            let nus = ctx.point_masses(Side::Opp);
            let grid = evaluation_grid(&mus, &nus)?;
            let cell = |v: &Option<Rational>| v.as_ref().map(q).unwrap_or(Value::Null);
            let all_commute = grid.iter().flatten().all(|c| c.commutes);
            json!({
                "mus": mus.iter().map(|m| type_json(&ctx.phi, m.support().next().expect("dirac"))).collect::<Vec<_>>(),
                "nus": nus.iter().map(|m| type_json(&ctx.opp, m.support().next().expect("dirac"))).collect::<Vec<_>>(),
                "forward": grid.iter().map(|r| r.iter().map(|c| cell(&c.value_forward)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "backward": grid.iter().map(|r| r.iter().map(|c| cell(&c.value_backward)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                "commutes": all_commute,
            })
        }
        Command::Approx => {
            let ctx = Context::new(rel);
            let mu = ctx.measure(cfg)?;
            if cfg.eps >= Rational::new(1.into(), 1.into()) {
                return Err(Error::InvalidParameter("approx needs --eps below 1".into()));
            }
            let a = epsilon_approximate(&mu, &cfg.eps, cfg.seed)?;
            json!({
                "measure": measure_json(&mu),
                "vc_dim": a.vc_dimension,
                "sample_size": a.elements.len(),
                "attempts": a.attempts,
                "deviation": q(&a.deviation),
                "elements": a.elements,
            })
        }
        Command::SearchOrder => {
            let ctx = Context::new(rel);
            let mus = ctx.point_masses(Side::Phi);
            let nus = ctx.point_masses(Side::Opp);
            let found = order_array_search(&mus, &nus, &cfg.r, &cfg.eps, cfg.cap)?;
            match found {
                None => json!({"size": 0, "witness": null}),
                Some(w) => {
                    if w.len() == cfg.cap && cfg.cap < mus.len().min(nus.len()) {
                        exit_code = EXIT_CAP;
                    }
                    let theta = theta_ladder_check(&w, cfg.seed)?;
                    json!({
                        "size": w.len(),
                        "cap_reached": exit_code == EXIT_CAP,
                        "witness": {
                            "mus": w.mus.iter().map(measure_json).collect::<Vec<_>>(),
                            "nus": w.nus.iter().map(measure_json).collect::<Vec<_>>(),
                            "grid": w.grid.iter().map(|r| r.iter().map(q).collect::<Vec<_>>()).collect::<Vec<_>>(),
                        },
                        "theta": {
                            "arity": theta.arity,
                            "exact_tuples": theta.exact_tuples,
                            "grid": theta.theta_grid.iter().map(|r| r.iter().map(|&b| u8::from(b)).collect::<Vec<_>>()).collect::<Vec<_>>(),
                            "dichotomy_violations": theta.dichotomy_violations,
                            "chain_violations": theta.chain_violations,
                            "boundary_cells": theta.boundary_cells,
                            "induced_ladder_index": theta.induced_ladder_index,
                            "success": theta.success,
                        },
                    })
                }
            }
        }
        Command::DoubleLimit => {
            let n = rel.rows().min(rel.cols());
            let grid: Vec<Vec<Rational>> = (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| Rational::from_integer(i64::from(rel.entry(i, j)).into()))
                        .collect()
                })
                .collect();
            let r = double_limit_estimate(&grid, &cfg.eps)?;
            json!({
                "n": n,
                "tolerance": q(&cfg.eps),
                "inner_outer": q(&r.inner_outer),
                "outer_inner": q(&r.outer_inner),
                "inner_outer_converged": r.inner_outer_converged,
                "outer_inner_converged": r.outer_inner_converged,
                "gap": r.gap.as_ref().map(q),
            })
        }
        Command::TwoTree => {
            let ctx = Context::new(rel);
            let mu = ctx.measure(cfg)?;
            let tree = build_two_tree(&mu, cfg.cap);
            tree.verify().map_err(Error::InvalidParameter)?;
            json!({
                "depth": tree.depth(),
                "complete": tree.is_complete(tree.depth()),
                "stages": tree.stages.iter().map(|s| json!({
                    "epsilon": q(&s.epsilon),
                    "fine_partition": s.fine_partition,
                })).collect::<Vec<_>>(),
                "nodes": tree.nodes.iter().map(|n| json!({
                    "depth": n.depth,
                    "parent": n.parent,
                    "children": n.children.map(|(l, r)| vec![l, r]),
                    "types": n.atoms,
                    "measure": q(&n.measure),
                    "stop": n.stop.map(|s| format!("{s:?}")),
                })).collect::<Vec<_>>(),
            })
        }
    };
    let mut doc = Map::new();
    doc.insert("tool".into(), json!(TOOL));
    doc.insert("version".into(), json!(VERSION));
    doc.insert("command".into(), json!(cfg.command.name()));
    doc.insert("config".into(), cfg.echo());
    doc.insert("result".into(), result);
    Ok(Report {
        document: Value::Object(doc),
        exit_code,
    })
}
