use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use dynrat::analysis::{identified_set, IdentifyOptions, Sweep, Tag};
use dynrat::deviation::{count_pure_rules, enumerate_pure_rules, DeviationRule, DEFAULT_RULE_CAP};
use dynrat::model::rational::{approx, format_rational, parse_rational, Rational};
use dynrat::model::{DecisionProblem, JointDistribution, MarginalDistribution};
use dynrat::oracle::{
    induced_joint, optimal_strategy_dp, simulate, total_variation, verify_obedient_optimality, verify_witness,
    InformationStructure, Strategy,
};
use dynrat::rationalize::{Analyzer, ObedientTriple, Observation, SolverStats, Verdict, Witness};
use dynrat::Error;

/// Exact rationalizability tests for finite dynamic decision problems.
#[derive(Parser)]
#[command(name = "dynrat", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Problem file (JSON).
    problem: PathBuf,
    /// Parameter value `name=p/q`; decimals are read exactly. Repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    params: Vec<String>,
    /// Also print a human-readable summary to stderr.
    #[arg(long)]
    pretty: bool,
    /// Refuse to enumerate more adapted pure deviation rules than this.
    #[arg(long, default_value_t = DEFAULT_RULE_CAP)]
    cap: u64,
}

#[derive(Args)]
struct Dist {
    /// Inline distribution, e.g. `x:1/4,w,x:3/4` or `a@state:p,...` for joints.
    #[arg(long)]
    dist: Option<String>,
    /// Distribution as a JSON file.
    #[arg(long, value_name = "FILE", conflicts_with = "dist")]
    dist_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Can this action sequence be chosen by a Bayesian agent?
    CheckSeq {
        #[command(flatten)]
        common: Common,
        /// Action sequence, e.g. `invest,pull_back`.
        #[arg(long)]
        seq: String,
    },
    /// Can this joint action–state distribution be generated?
    CheckJoint {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dist: Dist,
    },
    /// Can this distribution over action sequences be generated?
    CheckMarginal {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        dist: Dist,
    },
    /// Largest probability with which a sequence can be chosen.
    Maxprob {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        seq: String,
    },
    /// Parameter values under which an observation can be rationalized.
    Identify {
        #[command(flatten)]
        common: Common,
        /// Observed sequence; otherwise the distribution given by --dist.
        #[arg(long, conflicts_with_all = ["dist", "dist_file"])]
        seq: Option<String>,
        #[command(flatten)]
        dist: Dist,
        /// Read the distribution as a joint action–state distribution.
        #[arg(long)]
        joint: bool,
        /// Parameter to sweep; defaults to the only one not fixed by --param.
        #[arg(long, value_name = "NAME")]
        over: Option<String>,
        /// Range `lo:hi` of the swept parameter.
        #[arg(long, default_value = "0:1")]
        range: String,
        /// Number of grid points.
        #[arg(long, default_value_t = 33)]
        grid: usize,
        /// Width of the undecided gaps; defaults to 2^-10 of the range.
        #[arg(long)]
        tol: Option<String>,
    },
    /// List the adapted pure deviation rules.
    EnumerateRules {
        #[command(flatten)]
        common: Common,
        /// Only count them.
        #[arg(long)]
        count_only: bool,
    },
    /// Re-check the witness in a report and re-run its query.
    VerifyWitness {
        /// Report produced by check-seq, check-joint, check-marginal or maxprob.
        report: PathBuf,
        #[arg(long)]
        pretty: bool,
    },
    /// Sample outcomes of a strategy under an information structure.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Information structure (JSON).
        #[arg(long, value_name = "FILE")]
        info: PathBuf,
        /// Strategy (JSON); defaults to an optimal strategy.
        #[arg(long, value_name = "FILE")]
        strategy: Option<PathBuf>,
        #[arg(long, default_value_t = 100_000)]
        n: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

impl Command {
    fn pretty(&self) -> bool {
        match self {
            Command::CheckSeq { common, .. }
            | Command::CheckJoint { common, .. }
            | Command::CheckMarginal { common, .. }
            | Command::Maxprob { common, .. }
            | Command::Identify { common, .. }
            | Command::EnumerateRules { common, .. }
            | Command::Simulate { common, .. } => common.pretty,
            Command::VerifyWitness { pretty, .. } => *pretty,
        }
    }
}

struct Outcome {
    report: Value,
    summary: String,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let pretty = cli.command.pretty();
    match run(cli.command) {
        Ok(out) => {
            println!("{}", serde_json::to_string_pretty(&out.report).expect("serializable"));
            if pretty {
                eprint!("{}", out.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::SizeGuard { .. } => 3,
        Error::Inconsistent(_) => 4,
        _ => 2,
    }
}

fn run(command: Command) -> Result<Outcome, Error> {
    let start = Instant::now();
    let mut out = match command {
        Command::CheckSeq { common, seq } => {
            let (family, params) = load(&common)?;
            let p = family.instantiate(&params)?;
            let a = p.leaf_id(&seq)?;
            check(&common, &p, &params, Observation::Sequence(a), "check-seq")?
        }
        Command::CheckJoint { common, dist } => {
            let (family, params) = load(&common)?;
            let p = family.instantiate(&params)?;
            let joint = read_joint(&p, &dist)?;
            check(&common, &p, &params, Observation::Joint(joint), "check-joint")?
        }
        Command::CheckMarginal { common, dist } => {
            let (family, params) = load(&common)?;
            let p = family.instantiate(&params)?;
            let marginal = read_marginal(&p, &dist)?;
            check(&common, &p, &params, Observation::Marginal(marginal), "check-marginal")?
        }
        Command::Maxprob { common, seq } => maxprob(&common, &seq)?,
        Command::Identify {
            common,
            seq,
            dist,
            joint,
            over,
            range,
            grid,
            tol,
        } => identify(&common, seq, &dist, joint, over, &range, grid, tol)?,
        Command::EnumerateRules { common, count_only } => enumerate(&common, count_only)?,
        Command::VerifyWitness { report, .. } => verify(&report)?,
        Command::Simulate {
            common,
            info,
            strategy,
            n,
            seed,
        } => sim(&common, &info, strategy.as_deref(), n, seed)?,
    };
    let ms = start.elapsed().as_secs_f64() * 1000.0;
    out.report["elapsed_ms"] = json!((ms * 1000.0).round() / 1000.0);
    Ok(out)
}

fn read_json(path: &Path) -> Result<Value, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

fn load(common: &Common) -> Result<(DecisionProblem, BTreeMap<String, Rational>), Error> {
    let family = DecisionProblem::from_json(&read_json(&common.problem)?)?;
    let mut params = BTreeMap::new();
    for entry in &common.params {
        let (name, value) = entry
            .split_once('=')
            .ok_or_else(|| Error::Parse(format!("--param `{entry}` must be NAME=VALUE")))?;
        if params.insert(name.trim().to_string(), parse_rational(value.trim())?).is_some() {
            return Err(Error::Validation(format!("parameter `{name}` given twice")));
        }
    }
    Ok((family, params))
}

fn dist_source(dist: &Dist) -> Result<Result<&str, Value>, Error> {
    match (&dist.dist, &dist.dist_file) {
        (Some(text), _) => Ok(Ok(text)),
        (None, Some(path)) => Ok(Err(read_json(path)?)),
        (None, None) => Err(Error::Validation("a distribution is required (--dist or --dist-file)".into())),
    }
}

fn read_joint(p: &DecisionProblem, dist: &Dist) -> Result<JointDistribution, Error> {
    match dist_source(dist)? {
        Ok(text) => JointDistribution::parse_inline(p, text),
        Err(value) => JointDistribution::from_json(p, &value),
    }
}

fn read_marginal(p: &DecisionProblem, dist: &Dist) -> Result<MarginalDistribution, Error> {
    match dist_source(dist)? {
        Ok(text) => MarginalDistribution::parse_inline(p, text),
        Err(value) => MarginalDistribution::from_json(p, &value),
    }
}

fn params_json(params: &BTreeMap<String, Rational>) -> Value {
    Value::Object(
        params
            .iter()
            .map(|(k, v)| (k.clone(), json!(format_rational(v))))
            .collect(),
    )
}

fn stats_json(stats: SolverStats) -> Value {
    json!({ "lp_solves": stats.lp_solves, "pivots": stats.pivots, "rules_enumerated": stats.rules_enumerated })
}

fn report(command: &str, problem: Value, params: &BTreeMap<String, Rational>, query: Value, result: Value) -> Value {
    let mut obj = Map::new();
    obj.insert("command".into(), json!(command));
    obj.insert("problem".into(), problem);
    if !params.is_empty() {
        obj.insert("params".into(), params_json(params));
    }
    obj.insert("query".into(), query);
    obj.insert("result".into(), result);
    Value::Object(obj)
}

fn exact(q: &Rational) -> String {
    format!("{} (≈ {:.6})", format_rational(q), approx(q))
}

fn check(
    common: &Common,
    p: &DecisionProblem,
    params: &BTreeMap<String, Rational>,
    observation: Observation,
    command: &str,
) -> Result<Outcome, Error> {
    let an = Analyzer::with_cap(p, common.cap)?;
    let verdict = an.check(&observation)?;
    let mut result = verdict.to_json(p);
    let mut summary = String::new();
    let what = match &observation {
        Observation::Sequence(a) => format!("sequence {}", p.leaf_label(*a)),
        Observation::Joint(_) => "joint distribution".to_string(),
        Observation::Marginal(_) => "distribution over sequences".to_string(),
    };
    let _ = writeln!(
        summary,
        "{what}: {}",
        if verdict.rationalizable { "rationalizable" } else { "not rationalizable" }
    );
    if let Observation::Sequence(a) = observation {
        let apparent = an.apparently_dominated(a)?;
        if let Some(w) = &apparent {
            let _ = writeln!(summary, "apparently dominated, margin {}", exact(&w.margin));
        }
        result["apparent_dominance"] = apparent.map_or(Value::Null, |w| w.to_json(p));
    }
    describe_witness(&mut summary, p, &verdict);
    let mut query = observation.to_json(p);
    query["cap"] = json!(common.cap);
    let mut rep = report(command, p.to_json(), params, query, result);
    rep["stats"] = stats_json(an.stats());
    Ok(Outcome { report: rep, summary })
}

fn describe_witness(summary: &mut String, p: &DecisionProblem, verdict: &Verdict) {
    match &verdict.witness {
        Witness::ObedientTriple(t) => {
            let _ = writeln!(summary, "witness: obedient recommendations");
            for (s, state) in p.states().iter().enumerate() {
                let _ = writeln!(summary, "  prior {state}: {}", exact(&t.prior[s]));
                for (a, w) in t.recommendation[s].iter().enumerate() {
                    if *w != Rational::from_integer(0.into()) {
                        let _ = writeln!(summary, "    recommend {}: {}", p.leaf_label(a), exact(w));
                    }
                }
            }
        }
        Witness::DeviationRule(rule) => {
            let _ = writeln!(summary, "witness: dominating deviation rule");
            describe_rule(summary, p, rule);
        }
    }
}

fn describe_rule(summary: &mut String, p: &DecisionProblem, rule: &DeviationRule) {
    for a in 0..p.n_leaves() {
        let row = rule.row(a);
        if row[a] == Rational::from_integer(1.into()) {
            continue;
        }
        let targets: Vec<String> = row
            .iter()
            .enumerate()
            .filter(|(_, w)| **w != Rational::from_integer(0.into()))
            .map(|(b, w)| format!("{} w.p. {}", p.leaf_label(b), exact(w)))
            .collect();
        let _ = writeln!(summary, "  {} -> {}", p.leaf_label(a), targets.join(", "));
    }
}

fn maxprob(common: &Common, seq: &str) -> Result<Outcome, Error> {
    let (family, params) = load(common)?;
    let p = family.instantiate(&params)?;
    let a = p.leaf_id(seq)?;
    let an = Analyzer::with_cap(&p, common.cap)?;
    let (value, joint) = an.max_marginal(a)?;
    let result = json!({
        "value": format_rational(&value),
        "decimal": approx(&value),
        "joint": joint.to_json(&p),
    });
    let summary = format!("max probability of {}: {}\n", p.leaf_label(a), exact(&value));
    let query = json!({ "sequence": p.leaf_label(a), "cap": common.cap });
    let mut rep = report("maxprob", p.to_json(), &params, query, result);
    rep["stats"] = stats_json(an.stats());
    Ok(Outcome { report: rep, summary })
}

#[allow(clippy::too_many_arguments)]
fn identify(
    common: &Common,
    seq: Option<String>,
    dist: &Dist,
    joint: bool,
    over: Option<String>,
    range: &str,
    grid: usize,
    tol: Option<String>,
) -> Result<Outcome, Error> {
    let (family, params) = load(common)?;
    let over = match over {
        Some(name) => name,
        None => {
            let free: Vec<&String> = family.params().iter().filter(|p| !params.contains_key(*p)).collect();
            match free.as_slice() {
                [one] => (*one).clone(),
                [] => return Err(Error::Validation("no free parameter to sweep".into())),
                _ => return Err(Error::Validation(format!("several free parameters {free:?}; pick one with --over"))),
            }
        }
    };
    let (lo, hi) = range
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("--range `{range}` must be lo:hi")))?;
    let (lo, hi) = (parse_rational(lo.trim())?, parse_rational(hi.trim())?);
    let sweep = Sweep::new(&family, &over, lo.clone(), hi.clone(), params.clone())?;
    let observation = match seq {
        Some(s) => Observation::Sequence(family.leaf_id(&s)?),
        None if joint => Observation::Joint(read_joint(&family, dist)?),
        None => Observation::Marginal(read_marginal(&family, dist)?),
    };
    let tol = tol.as_deref().map(parse_rational).transpose()?;
    if grid < 2 {
        return Err(Error::Validation("--grid needs at least 2 points".into()));
    }
    let options = IdentifyOptions {
        grid,
        tol: tol.clone(),
        cap: common.cap,
    };
    let set = identified_set(&family, &sweep, &observation, &options)?;

    let mut summary = format!("identified set for {} over [{}, {}]:\n", over, format_rational(&lo), format_rational(&hi));
    for i in &set.intervals {
        let tag = match i.tag {
            Tag::In => "in ",
            Tag::Out => "out",
            Tag::Gap => "gap",
        };
        let _ = writeln!(summary, "  {tag} [{}, {}]", exact(&i.lo), exact(&i.hi));
    }
    let _ = writeln!(summary, "{} exact tests", set.tests);

    let mut result = set.to_json();
    result["tests"] = json!(set.tests);
    let query = json!({
        "observation": observation.to_json(&family),
        "param": over,
        "range": [format_rational(&lo), format_rational(&hi)],
        "grid": grid,
        "tol": tol.as_ref().map(format_rational),
        "cap": common.cap,
    });
    Ok(Outcome {
        report: report("identify", family.to_json(), &params, query, result),
        summary,
    })
}

fn enumerate(common: &Common, count_only: bool) -> Result<Outcome, Error> {
    let (family, params) = load(common)?;
    let count = count_pure_rules(&family);
    let mut result = json!({ "count": count.to_string() });
    if !count_only {
        let rules = enumerate_pure_rules(&family, common.cap)?;
        result["rules"] = Value::Array(rules.iter().map(|r| r.to_json(&family)).collect());
    }
    let summary = format!("{count} adapted pure deviation rules\n");
    let query = json!({ "count_only": count_only, "cap": common.cap });
    Ok(Outcome {
        report: report("enumerate-rules", family.to_json(), &params, query, result),
        summary,
    })
}

fn field<'a>(value: &'a Value, key: &str) -> Result<&'a Value, Error> {
    value
        .get(key)
        .ok_or_else(|| Error::Parse(format!("report has no `{key}` field")))
}

fn verify(path: &Path) -> Result<Outcome, Error> {
    let rep = read_json(path)?;
    let command = field(&rep, "command")?
        .as_str()
        .ok_or_else(|| Error::Parse("`command` must be a string".into()))?
        .to_string();
    let p = DecisionProblem::from_json(field(&rep, "problem")?)?;
    let query = field(&rep, "query")?;
    let result = field(&rep, "result")?;
    let cap = query.get("cap").and_then(Value::as_u64).unwrap_or(DEFAULT_RULE_CAP);
    let an = Analyzer::with_cap(&p, cap)?;
    let (witness_valid, reproduced) = match command.as_str() {
        "check-seq" | "check-joint" | "check-marginal" => {
            let observation = Observation::from_json(&p, query)?;
            let verdict = Verdict::from_json(&p, result)?;
            let valid = verify_witness(&p, &observation, &verdict)?;
            (valid, an.check(&observation)? == verdict)
        }
        "maxprob" => {
            let a = p.leaf_id(
                field(query, "sequence")?
                    .as_str()
                    .ok_or_else(|| Error::Parse("`sequence` must be a string".into()))?,
            )?;
            let value = parse_rational(
                field(result, "value")?
                    .as_str()
                    .ok_or_else(|| Error::Parse("`value` must be a string".into()))?,
            )?;
            let joint = JointDistribution::from_json(&p, field(result, "joint")?)?;
            let attained = joint.mass_on(a) == value;
            let valid = attained && verify_obedient_optimality(&p, &ObedientTriple::from_joint(&joint))?;
            (valid, an.max_marginal(a)?.0 == value)
        }
        other => return Err(Error::Unsupported(format!("reports of `{other}` carry no witness"))),
    };
    let summary = format!(
        "{command} report: witness {}, verdict {}\n",
        if witness_valid { "valid" } else { "INVALID" },
        if reproduced { "reproduced" } else { "NOT reproduced" }
    );
    let result = json!({ "checked": command, "witness_valid": witness_valid, "verdict_reproduced": reproduced });
    let query = json!({ "report": path.display().to_string() });
    let mut out = report("verify-witness", p.to_json(), &BTreeMap::new(), query, result);
    out["stats"] = stats_json(an.stats());
    Ok(Outcome { report: out, summary })
}

fn sim(common: &Common, info_path: &Path, strategy_path: Option<&Path>, n: u64, seed: u64) -> Result<Outcome, Error> {
    let (family, params) = load(common)?;
    let p = family.instantiate(&params)?;
    let info_json = read_json(info_path)?;
    let info = InformationStructure::from_json(&p, &info_json)?;
    let (strategy, strategy_json) = match strategy_path {
        Some(path) => {
            let value = read_json(path)?;
            (Strategy::from_json(&p, &info, &value)?, value)
        }
        None => (optimal_strategy_dp(&p, &info)?, json!("optimal")),
    };
    let empirical = simulate(&p, &strategy, &info, n, seed)?;
    let expected = induced_joint(&p, &strategy, &info)?;
    let tv = total_variation(&empirical, &expected);

    let mut summary = format!("{n} draws, seed {seed}; total variation {tv:.6}\n");
    let (em, ex) = (empirical.marginal(), expected.marginal());
    for a in 0..p.n_leaves() {
        let _ = writeln!(
            summary,
            "  {}: empirical {:.6}, exact {}",
            p.leaf_label(a),
            approx(em.weight(a)),
            exact(ex.weight(a))
        );
    }
    let result = json!({
        "empirical": empirical.to_json(&p),
        "empirical_marginal": em.to_json(&p),
        "exact": expected.to_json(&p),
        "exact_marginal": ex.to_json(&p),
        "total_variation": tv,
    });
    let query = json!({ "info": info_json, "strategy": strategy_json, "n": n, "seed": seed });
    Ok(Outcome {
        report: report("simulate", p.to_json(), &params, query, result),
        summary,
    })
}
