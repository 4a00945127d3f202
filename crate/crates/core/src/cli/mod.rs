//! The `irw` command line: subcommand dispatch with text or JSON reports.

mod corpus;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use crate::boehm::{boehm_tree, DEFAULT_FUEL};
use crate::develop::{build_paths, complete_development, descendants, descendants_via_labels, OccurrenceSet};
use crate::error::{Error, Result};
use crate::reduction::{
    analyze, run, Certificate, Mode, Reduction, Stop, Strategy, Verdict, DEFAULT_BUDGET, DEFAULT_DEPTH,
};
use crate::term::{fmt_pos, truncate, Depth, Term};
use crate::trs::TrsFile;

pub use corpus::{run_corpus, CaseResult};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_INCONCLUSIVE: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "irw", version, about = "Partial-order infinitary term rewriting")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct Input {
    /// Rule file.
    pub file: PathBuf,
    /// A term declared in the file or a term literal; defaults to `t`, or
    /// else the first declared term.
    #[arg(long)]
    pub term: Option<String>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug, Clone)]
pub struct RunArgs {
    /// outermost, innermost, parallel-outermost, alternating[:p,q],
    /// script:p[@rule],... or once:p[@rule],...
    #[arg(long, default_value = "outermost")]
    pub strategy: String,
    /// Step budget.
    #[arg(long, default_value_t = DEFAULT_BUDGET)]
    pub steps: usize,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Report left-linearity and orthogonality.
    Check {
        file: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Run a strategy and list the steps.
    Reduce {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Limit of a run in one mode, or in all of them.
    Limit {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// strong-p, weak-p, strong-m, weak-m or all.
        #[arg(long, default_value = "strong-p")]
        mode: String,
    },
    /// Complete development of a set of redexes.
    Develop {
        #[command(flatten)]
        input: Input,
        /// `{0,1.0}`, `@node:f`, `@f` or `@all`.
        #[arg(long, default_value = "@all")]
        redexes: String,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        /// Print the path automaton in Graphviz format instead.
        #[arg(long)]
        dot: bool,
    },
    /// Descendants of a set of redexes along a run.
    Residuals {
        #[command(flatten)]
        input: Input,
        #[command(flatten)]
        run: RunArgs,
        #[arg(long)]
        redexes: String,
    },
    /// Böhm tree with respect to the root-active terms.
    Boehm {
        #[command(flatten)]
        input: Input,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
        /// Root-active term standing in for `_|_`.
        #[arg(long)]
        witness: Option<String>,
    },
    /// Whether the limits of two strategies have a common reduct.
    Join {
        #[command(flatten)]
        input: Input,
        /// Given twice; the second defaults to parallel-outermost.
        #[arg(long, num_args = 1, default_values_t = ["outermost".to_string()])]
        strategy: Vec<String>,
        #[arg(long, default_value_t = DEFAULT_BUDGET)]
        steps: usize,
        #[arg(long, default_value_t = DEFAULT_DEPTH)]
        depth: usize,
        #[arg(long, default_value_t = DEFAULT_FUEL)]
        fuel: usize,
    },
    /// Run the golden cases of a corpus directory.
    Corpus {
        /// Defaults to the bundled corpus.
        dir: Option<PathBuf>,
        /// Shuffles the order in which cases run.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
}

/// A finished command: the text form, whose first line is the headline
/// result, the JSON form, and the exit code.
#[derive(Clone, Debug)]
pub struct Report {
    pub text: String,
    pub json: Value,
    pub exit: i32,
}

impl Report {
    fn new(text: String, json: Value, exit: i32) -> Report {
        Report { text, json, exit }
    }

    pub fn headline(&self) -> &str {
        self.text.lines().next().unwrap_or("")
    }
}

fn load(path: &Path) -> Result<TrsFile> {
    let src = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    TrsFile::parse(&src)
}

fn select(file: &TrsFile, sel: Option<&str>) -> Result<Term> {
    match sel {
        Some(s) => file.select(s),
        None => file
            .term("t")
            .cloned()
            .or_else(|_| file.terms.first().map(|(_, t)| t.clone()).ok_or_else(|| Error::UnknownTerm("t".into()))),
    }
}

fn open(input: &Input) -> Result<(Arc<crate::trs::Trs>, Term)> {
    let file = load(&input.file)?;
    let t = select(&file, input.term.as_deref())?;
    Ok((Arc::new(file.trs), t))
}

fn stop_name(stop: &Stop) -> String {
    match stop {
        Stop::NormalForm => "normal-form".into(),
        Stop::Exhausted => "exhausted".into(),
        Stop::Budget => "budget".into(),
        Stop::Cycle { start, period } => format!("cycle(start {start}, period {period})"),
    }
}

fn stop_json(stop: &Stop) -> Value {
    match stop {
        Stop::Cycle { start, period } => json!({"kind": "cycle", "start": start, "period": period}),
        s => json!({"kind": stop_name(s)}),
    }
}

fn steps_json(red: &Reduction) -> Value {
    red.steps.iter().map(|(p, r)| json!({"position": fmt_pos(p), "rule": red.trs.rules[*r].name})).collect()
}

fn volatile_text(out: &crate::reduction::LimitOutcome) -> String {
    out.volatile
        .iter()
        .map(|v| {
            let verdict = match v.verdict {
                Verdict::Certified => "certified",
                Verdict::Suspected => "suspected",
            };
            let outer = if v.outermost { ", outermost" } else { "" };
            format!("{} ({verdict}{outer})", fmt_pos(&v.position))
        })
        .collect::<Vec<_>>()
        .join(", ")
}

fn yes(b: bool) -> &'static str {
    if b {
        "yes"
    } else {
        "no"
    }
}

fn check(file: &Path) -> Result<Report> {
    let f = load(file)?;
    let orth = f.trs.check_orthogonal();
    let lin = f.trs.check_left_linear();
    let mut text = match &orth {
        None => "orthogonal: yes\n".to_string(),
        Some(w) => format!("orthogonal: no ({w})\n"),
    };
    text.push_str(&match &lin {
        None => "left-linear: yes\n".to_string(),
        Some((r, v)) => format!("left-linear: no (rule {r}, {v})\n"),
    });
    text.push_str(&format!("rules: {}\nterms: {}\n", f.trs.rules.len(), f.terms.len()));
    let json = json!({
        "orthogonal": orth.is_none(),
        "orthogonality_witness": orth,
        "left_linear": lin.is_none(),
        "linearity_witness": lin.map(|(r, v)| json!({"rule": r, "variable": v})),
        "rules": f.trs.rules.iter().map(|r| r.name.clone()).collect::<Vec<_>>(),
        "terms": f.terms.iter().map(|(n, t)| json!({"name": n, "term": t.to_string()})).collect::<Vec<_>>(),
    });
    Ok(Report::new(text, json, EXIT_OK))
}

fn reduce(input: &Input, args: &RunArgs) -> Result<Report> {
    let (trs, t) = open(input)?;
    let strategy: Strategy = args.strategy.parse()?;
    let red = run(&trs, &t, &strategy, args.steps)?;
    let mut text = format!("{}\nstop: {}\nsteps: {}\n", red.last(), stop_name(&red.stop), red.len());
    text.push_str(&red.render_steps());
    let json = json!({
        "last": red.last().to_string(),
        "stop": stop_json(&red.stop),
        "steps": steps_json(&red),
        "terms": red.terms.iter().map(|t| t.to_string()).collect::<Vec<_>>(),
    });
    Ok(Report::new(text, json, EXIT_OK))
}

fn limit(input: &Input, args: &RunArgs, depth: usize, mode: &str) -> Result<Report> {
    let (trs, t) = open(input)?;
    let strategy: Strategy = args.strategy.parse()?;
    let modes: Vec<Mode> = if mode == "all" { Mode::ALL.to_vec() } else { vec![mode.parse()?] };
    let red = run(&trs, &t, &strategy, args.steps)?;
    let a = analyze(&red, depth);
    let outcomes: Vec<_> = modes.iter().map(|&m| a.outcome(m)).collect();
    let show = |o: &crate::reduction::LimitOutcome| o.limit.as_ref().map_or("diverges".to_string(), |t| t.to_string());
    let mut text = String::new();
    if let [o] = outcomes.as_slice() {
        text.push_str(&format!("{}\n", show(o)));
    } else {
        for o in &outcomes {
            text.push_str(&format!("{}: {}\n", o.mode, show(o)));
        }
    }
    text.push_str(&format!("certificate: {}\n", a.certificate));
    if modes.iter().any(|m| m.is_partial_order()) {
        text.push_str(&format!("volatile: {}\n", volatile_text(&a.outcome(Mode::StrongP))));
        text.push_str(&format!("destructive: {}\n", yes(a.is_destructive())));
    }
    text.push_str(&format!("steps: {} ({})\n", red.len(), stop_name(&red.stop)));
    let mut json = if let [o] = outcomes.as_slice() {
        o.to_json()
    } else {
        json!({"outcomes": outcomes.iter().map(|o| o.to_json()).collect::<Vec<_>>()})
    };
    json["steps"] = json!(red.len());
    json["stop"] = stop_json(&red.stop);
    let exit = if a.certificate == Certificate::BudgetExhausted { EXIT_INCONCLUSIVE } else { EXIT_OK };
    Ok(Report::new(text, json, exit))
}

fn develop(input: &Input, redexes: &str, depth: usize, dot: bool) -> Result<Report> {
    let (trs, t) = open(input)?;
    let u = OccurrenceSet::parse(redexes, &trs, &t)?;
    if dot {
        let auto = build_paths(&trs, &t, &u)?;
        return Ok(Report::new(auto.to_dot(), json!({"dot": auto.to_dot()}), EXIT_OK));
    }
    let (red, out) = complete_development(&trs, &t, &u, depth)?;
    let limit = out.limit.clone().unwrap_or_else(Term::bot);
    let text = format!(
        "{limit}\ncertificate: {}\nvolatile: {}\ndestructive: {}\nrecorded steps: {} ({})\n",
        out.certificate,
        volatile_text(&out),
        yes(out.destructive),
        red.len(),
        stop_name(&red.stop),
    );
    let mut json = out.to_json();
    json["redexes"] = json!(u.to_string());
    json["steps"] = steps_json(&red);
    json["stop"] = stop_json(&red.stop);
    Ok(Report::new(text, json, EXIT_OK))
}

fn residuals(input: &Input, args: &RunArgs, redexes: &str) -> Result<Report> {
    let (trs, t) = open(input)?;
    let strategy: Strategy = args.strategy.parse()?;
    let u = OccurrenceSet::parse(redexes, &trs, &t)?;
    let red = run(&trs, &t, &strategy, args.steps)?;
    let d = descendants(&u, &red)?;
    let labelled = if trs.is_left_linear() { Some(descendants_via_labels(&u, &red)?) } else { None };
    let mut text = format!("{d}\nsteps: {} ({})\n", red.len(), stop_name(&red.stop));
    if let Some(l) = &labelled {
        text.push_str(&format!("agrees with labelling: {}\n", yes(*l == d)));
    }
    let json = json!({
        "redexes": u.to_string(),
        "descendants": d.positions.iter().map(|p| fmt_pos(p)).collect::<Vec<_>>(),
        "via_labels": labelled.map(|l| l.positions.iter().map(|p| fmt_pos(p)).collect::<Vec<_>>()),
        "steps": red.len(),
        "stop": stop_json(&red.stop),
    });
    Ok(Report::new(text, json, EXIT_OK))
}

fn boehm(input: &Input, depth: usize, fuel: usize, witness: Option<&str>) -> Result<Report> {
    let file = load(&input.file)?;
    let t = select(&file, input.term.as_deref())?;
    let witness = witness.map(|w| file.select(w)).transpose()?;
    let trs = Arc::new(file.trs);
    let bt = boehm_tree(&trs, &t, depth, fuel, witness.as_ref())?;
    let unknown: Vec<String> = bt.positions_unknown.iter().map(|p| fmt_pos(p)).collect();
    let text = format!(
        "{}\nexact: {}\nunknown: {{{}}}\nfuel used: {}\n",
        bt.tree,
        yes(bt.exact),
        unknown.join(", "),
        bt.fuel_used
    );
    let exit = if bt.is_certified() { EXIT_OK } else { EXIT_INCONCLUSIVE };
    Ok(Report::new(text, bt.to_json(), exit))
}

fn join(input: &Input, strategies: &[String], steps: usize, depth: usize, fuel: usize) -> Result<Report> {
    let (trs, t) = open(input)?;
    let (a, b) = match strategies {
        [a] => (a.parse::<Strategy>()?, Strategy::ParallelOutermost),
        [a, b] => (a.parse()?, b.parse()?),
        _ => return Err(Error::InvalidArgument("give one or two strategies".into())),
    };
    let limit_of = |s: &Strategy| -> Result<Option<Term>> {
        let out = analyze(&run(&trs, &t, s, steps)?, depth).outcome(Mode::StrongP);
        Ok(out.limit.filter(|_| out.certificate != Certificate::BudgetExhausted))
    };
    let (la, lb) = (limit_of(&a)?, limit_of(&b)?);
    let cut = |t: &Term| truncate(t, Depth::Fin(depth));
    let (verdict, joined, detail) = match (&la, &lb) {
        (Some(x), Some(y)) if cut(x) == cut(y) => ("yes", Some(x.clone()), "equal limits".to_string()),
        (Some(x), Some(y)) => {
            let bx = boehm_tree(&trs, x, depth, fuel, None)?;
            let by = boehm_tree(&trs, y, depth, fuel, None)?;
            if !bx.is_certified() || !by.is_certified() {
                ("unknown", None, "undecided root-activeness".to_string())
            } else if cut(&bx.tree) == cut(&by.tree) {
                ("yes", Some(bx.tree), "common Böhm tree".to_string())
            } else {
                ("no", None, format!("Böhm trees {} and {} differ", bx.tree, by.tree))
            }
        }
        _ => ("unknown", None, "limit not certified".to_string()),
    };
    let show = |t: &Option<Term>| t.as_ref().map_or("unknown".to_string(), |t| t.to_string());
    let text = format!(
        "joinable: {verdict}\nleft ({a}): {}\nright ({b}): {}\njoin: {}\n{detail}\n",
        show(&la),
        show(&lb),
        show(&joined)
    );
    let json = json!({
        "joinable": verdict,
        "left": {"strategy": a.to_string(), "limit": la.as_ref().map(|t| t.to_string())},
        "right": {"strategy": b.to_string(), "limit": lb.as_ref().map(|t| t.to_string())},
        "join": joined.as_ref().map(|t| t.to_string()),
        "detail": detail,
    });
    let exit = if verdict == "unknown" { EXIT_INCONCLUSIVE } else { EXIT_OK };
    Ok(Report::new(text, json, exit))
}

fn corpus(dir: Option<&Path>, seed: Option<u64>) -> Result<Report> {
    let dir = dir.map_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("corpus"), Path::to_path_buf);
    let results = run_corpus(&dir, seed)?;
    let failed = results.iter().filter(|r| !r.passed).count();
    let mut text = format!("{} cases, {failed} failed\n", results.len());
    for r in &results {
        if r.passed {
            text.push_str(&format!("pass {}\n", r.name));
        } else {
            text.push_str(&format!("FAIL {}: expected `{}`, got `{}`\n", r.name, r.expected, r.got));
        }
    }
    let json = json!({
        "cases": results.iter().map(|r| json!({
            "name": r.name, "passed": r.passed, "expected": r.expected, "got": r.got,
        })).collect::<Vec<_>>(),
        "failed": failed,
    });
    Ok(Report::new(text, json, if failed == 0 { EXIT_OK } else { EXIT_ERROR }))
}

pub fn execute(cmd: &Command) -> Result<Report> {
    match cmd {
        Command::Check { file, .. } => check(file),
        Command::Reduce { input, run } => reduce(input, run),
        Command::Limit { input, run, depth, mode } => limit(input, run, *depth, mode),
        Command::Develop { input, redexes, depth, dot } => develop(input, redexes, *depth, *dot),
        Command::Residuals { input, run, redexes } => residuals(input, run, redexes),
        Command::Boehm { input, depth, fuel, witness } => boehm(input, *depth, *fuel, witness.as_deref()),
        Command::Join { input, strategy, steps, depth, fuel } => join(input, strategy, *steps, *depth, *fuel),
        Command::Corpus { dir, seed, .. } => corpus(dir.as_deref(), *seed),
    }
}

fn command_name(cmd: &Command) -> &'static str {
    match cmd {
        Command::Check { .. } => "check",
        Command::Reduce { .. } => "reduce",
        Command::Limit { .. } => "limit",
        Command::Develop { .. } => "develop",
        Command::Residuals { .. } => "residuals",
        Command::Boehm { .. } => "boehm",
        Command::Join { .. } => "join",
        Command::Corpus { .. } => "corpus",
    }
}

fn wants_json(cmd: &Command) -> bool {
    match cmd {
        Command::Check { json, .. } | Command::Corpus { json, .. } => *json,
        Command::Reduce { input, .. }
        | Command::Limit { input, .. }
        | Command::Develop { input, .. }
        | Command::Residuals { input, .. }
        | Command::Boehm { input, .. }
        | Command::Join { input, .. } => input.json,
    }
}

/// Parses `args` (including the program name), runs the command and
/// writes its report to `out`. Returns the exit code.
pub fn main_with<I, S>(args: I, out: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
            let _ = write!(out, "{e}");
            return code;
        }
    };
    let as_json = wants_json(&cli.command);
    let name = command_name(&cli.command);
    let (body, exit) = match execute(&cli.command) {
        Ok(r) if as_json => {
            let mut v = json!({"schema": 1, "command": name});
            if let (Value::Object(m), Value::Object(extra)) = (&mut v, r.json) {
                m.extend(extra);
            }
            (format!("{}\n", serde_json::to_string_pretty(&v).expect("json")), r.exit)
        }
        Ok(r) => (r.text, r.exit),
        Err(e) if as_json => {
            let v = json!({"schema": 1, "command": name, "error": {"code": e.code(), "message": e.to_string()}});
            (format!("{}\n", serde_json::to_string_pretty(&v).expect("json")), EXIT_ERROR)
        }
        Err(e) => (format!("error[{}]: {e}\n", e.code()), EXIT_ERROR),
    };
    let _ = out.write_all(body.as_bytes());
    exit
}
