use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Value};

use nullcore::annotation::{annotation_minimize, ocwa_multicore};
use nullcore::cores::{canrep, core, enumerate_subminimal, multicore};
use nullcore::io::{answers_json, instance_json, parse_document, serialize_instance, Document};
use nullcore::model::{Instance, RawInstance};
use nullcore::oracle::{brute_implies, brute_member, random_pair, sample_member, GenParams};
use nullcore::query::certain_pcwa;
use nullcore::semantics::{
    equiv, implies, implies_ls_raw, ls_expand, member, member_ls, normalize_ls, Decision, SemanticsId,
};
use nullcore::{Error, Limits};

#[derive(Parser)]
#[command(name = "nullcore", version, about = "Incomplete instances with open and closed nulls")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Print JSON instead of text.
    #[arg(long, global = true)]
    json: bool,
    /// Cap on homomorphisms materialized by one enumeration.
    #[arg(long, global = true, value_name = "N")]
    cap_homs: Option<usize>,
    /// Cap on closed-null assignments tried by an RCN-cover search.
    #[arg(long, global = true, value_name = "N")]
    cap_sigma: Option<usize>,
    /// Cap on subsets visited by subset enumerations.
    #[arg(long, global = true, value_name = "N")]
    cap_subsets: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Put an occurrence-annotated instance into normal form.
    Normalize { file: PathBuf, name: String },
    /// Normal form followed by the linear-size expansion.
    LsExpand { file: PathBuf, name: String },
    /// Does Rep(A) ⊆ Rep(B) hold?
    Implies {
        #[arg(long, short)]
        semantics: SemanticsId,
        file: PathBuf,
        a: String,
        b: String,
    },
    /// Does Rep(A) = Rep(B) hold?
    Equiv {
        #[arg(long, short)]
        semantics: SemanticsId,
        file: PathBuf,
        a: String,
        b: String,
    },
    /// Is the complete instance I in Rep(A)?
    Member {
        #[arg(long, short)]
        semantics: SemanticsId,
        file: PathBuf,
        a: String,
        i: String,
    },
    Core { file: PathBuf, name: String },
    /// PCWA multicore, or the OCWA* multicore if A has closed nulls.
    Multicore { file: PathBuf, name: String },
    /// Canonical representative: disjoint union of the multicore members.
    Canrep { file: PathBuf, name: String },
    /// Re-annotate redundant closed nulls as open.
    MinAnnotations { file: PathBuf, name: String },
    /// Equivalent instances with no proper equivalent subinstance.
    Minimals {
        file: PathBuf,
        name: String,
        #[arg(long, value_name = "N")]
        max_partitions: Option<usize>,
    },
    /// Certain answers under PCWA.
    Certain {
        #[arg(long, value_names = ["QFILE", "QNAME"], num_args = 2)]
        query: Vec<String>,
        file: PathBuf,
        name: String,
    },
    /// Compare the deciders with brute force on random inputs.
    Selftest {
        #[arg(long, env = "NULLCORE_SEED", default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 100)]
        cases: u64,
    },
}

enum Failure {
    Usage(String),
    Lib(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

type Outcome = Result<bool, Failure>;

fn load(path: &Path) -> Result<Document, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    parse_document(&text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn raw(doc: &Document, name: &str) -> Result<RawInstance, Failure> {
    Ok(doc.entry(name)?.raw())
}

fn print_instances(g: &Global, named: &[(String, &Instance)], extra: Option<(&str, Value)>) {
    if g.json {
        let mut v = if named.len() == 1 {
            json!({ "instance": instance_json(named[0].1) })
        } else {
            json!({ "members": named.iter().map(|(_, i)| instance_json(i)).collect::<Vec<_>>() })
        };
        if let Some((k, x)) = extra {
            v[k] = x;
        }
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        for (n, i) in named {
            print!("{}", serialize_instance(n, i));
        }
    }
}

fn print_decision(g: &Global, d: &Decision) -> Outcome {
    if g.json {
        println!("{}", serde_json::to_string_pretty(&d.to_json()).expect("json"));
    } else {
        println!("{}", if d.verdict { "yes" } else { "no" });
    }
    Ok(d.verdict)
}

fn ls_both(a: &RawInstance, b: &RawInstance, limits: &Limits) -> Result<Decision, Error> {
    let fwd = implies_ls_raw(a, b, limits)?;
    if !fwd.verdict {
        return Ok(fwd);
    }
    let back = implies_ls_raw(b, a, limits)?;
    Ok(Decision {
        verdict: back.verdict,
        witness: match (fwd.witness, back.witness) {
            (Some(x), Some(y)) => Some(nullcore::semantics::Witness::Both(Box::new(x), Box::new(y))),
            _ => None,
        },
        method: back.method,
    })
}

fn selftest(g: &Global, seed: u64, cases: u64, limits: &Limits) -> Outcome {
    let consts: Vec<_> = ["a", "b", "c"].iter().map(|s| (*s).into()).collect();
    let mut checked = 0u64;
    let mut skipped = 0u64;
    let mut failures = Vec::new();
    for case in 0..cases {
        let s = seed.wrapping_add(case);
        for sem in SemanticsId::ALL {
            let p = GenParams::with_seed(s);
            let p = if sem.accepts_closed() { p } else { p.unannotated() };
            let (a, b) = random_pair(&p);
            let i = sample_member(&mut p.rng(), &b, &consts, 2);
            let runs = [
                implies(sem, &a, &b, limits).map(|d| d.verdict).and_then(|x| {
                    brute_implies(sem, &a, &b, limits).map(|y| (x, y, format!("implies {a} / {b}")))
                }),
                member(sem, &a, &i, limits).map(|d| d.verdict).and_then(|x| {
                    brute_member(sem, &a, &i, limits).map(|y| (x, y, format!("member {i} in {a}")))
                }),
            ];
            for r in runs {
                match r {
                    Ok((x, y, what)) => {
                        checked += 1;
                        if x != y {
                            failures.push(format!("seed {s} {sem}: {what}: engine {x}, oracle {y}"));
                        }
                    }
                    Err(Error::ResourceLimit { .. }) => skipped += 1,
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    if g.json {
        let v = json!({ "checked": checked, "skipped": skipped, "failures": failures, "seed": seed });
        println!("{}", serde_json::to_string_pretty(&v).expect("json"));
    } else {
        for f in &failures {
            println!("{f}");
        }
        println!("checked {checked}, skipped {skipped}, failures {}", failures.len());
    }
    Ok(failures.is_empty())
}

fn run(cli: Cli) -> Outcome {
    let g = &cli.global;
    let mut limits = Limits::default();
    if let Some(n) = g.cap_homs {
        limits.homs = n;
    }
    if let Some(n) = g.cap_sigma {
        limits.sigma = n;
    }
    if let Some(n) = g.cap_subsets {
        limits.subsets = n;
    }
    match &cli.command {
        Command::Normalize { file, name } => {
            let a = normalize_ls(&raw(&load(file)?, name)?);
            print_instances(g, &[(name.clone(), &a)], None);
            Ok(true)
        }
        Command::LsExpand { file, name } => {
            let a = ls_expand(&normalize_ls(&raw(&load(file)?, name)?));
            print_instances(g, &[(name.clone(), &a)], None);
            Ok(true)
        }
        Command::Implies { semantics, file, a, b } => {
            let doc = load(file)?;
            let d = if *semantics == SemanticsId::OcwaLs {
                implies_ls_raw(&raw(&doc, a)?, &raw(&doc, b)?, &limits)?
            } else {
                implies(*semantics, &doc.instance(a)?, &doc.instance(b)?, &limits)?
            };
            print_decision(g, &d)
        }
        Command::Equiv { semantics, file, a, b } => {
            let doc = load(file)?;
            let d = if *semantics == SemanticsId::OcwaLs {
                ls_both(&raw(&doc, a)?, &raw(&doc, b)?, &limits)?
            } else {
                equiv(*semantics, &doc.instance(a)?, &doc.instance(b)?, &limits)?
            };
            print_decision(g, &d)
        }
        Command::Member { semantics, file, a, i } => {
            let doc = load(file)?;
            let cand = doc.instance(i)?;
            let d = if *semantics == SemanticsId::OcwaLs {
                member_ls(&raw(&doc, a)?, &cand, &limits)?
            } else {
                member(*semantics, &doc.instance(a)?, &cand, &limits)?
            };
            print_decision(g, &d)
        }
        Command::Core { file, name } => {
            let c = core(&load(file)?.instance(name)?);
            print_instances(g, &[(format!("{name}_core"), &c)], None);
            Ok(true)
        }
        Command::Multicore { file, name } => {
            let a = load(file)?.instance(name)?;
            let (members, closed) = if a.closed_nulls().is_empty() {
                (multicore(&a).members, None)
            } else {
                let m = ocwa_multicore(&a, &limits)?;
                let closed = m.to_json()["closed_nulls"].clone();
                (m.members, Some(closed))
            };
            if g.json {
                let mut v = json!({ "members": members.iter().map(instance_json).collect::<Vec<_>>() });
                if let Some(c) = closed {
                    v["closed_nulls"] = c;
                }
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                for (k, m) in members.iter().enumerate() {
                    print!("{}", serialize_instance(&format!("{name}_m{}", k + 1), m));
                }
            }
            Ok(true)
        }
        Command::Canrep { file, name } => {
            let c = canrep(&load(file)?.instance(name)?);
            print_instances(g, &[(format!("{name}_canrep"), &c)], None);
            Ok(true)
        }
        Command::MinAnnotations { file, name } => {
            let r = annotation_minimize(&load(file)?.instance(name)?, &limits)?;
            if g.json {
                println!("{}", serde_json::to_string_pretty(&r.to_json()).expect("json"));
            } else {
                print!("{}", serialize_instance(name, &r.instance));
            }
            if !r.minimal {
                return Err(Error::ResourceLimit { what: "annotation subsets", cap: limits.subsets }.into());
            }
            Ok(true)
        }
        Command::Minimals { file, name, max_partitions } => {
            if let Some(n) = max_partitions {
                limits.partitions = *n;
            }
            let s = enumerate_subminimal(&load(file)?.instance(name)?, &limits)?;
            let named: Vec<(String, &Instance)> = s
                .instances
                .iter()
                .enumerate()
                .map(|(k, i)| (format!("{name}_min{}", k + 1), i))
                .collect();
            if g.json {
                let v = json!({
                    "complete": s.complete,
                    "instances": s.instances.iter().map(instance_json).collect::<Vec<_>>(),
                });
                println!("{}", serde_json::to_string_pretty(&v).expect("json"));
            } else {
                print_instances(g, &named, None);
            }
            if !s.complete {
                return Err(Error::ResourceLimit { what: "null partitions", cap: limits.partitions }.into());
            }
            Ok(true)
        }
        Command::Certain { query, file, name } => {
            let qdoc = load(Path::new(&query[0]))?;
            let q = qdoc.query(&query[1])?;
            let ans = certain_pcwa(q, &load(file)?.instance(name)?)?;
            if g.json {
                println!("{}", serde_json::to_string_pretty(&json!({ "answers": answers_json(&ans) })).expect("json"));
            } else {
                for t in &ans {
                    println!("{}", t.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "));
                }
            }
            Ok(true)
        }
        Command::Selftest { seed, cases } => selftest(g, *seed, *cases, &limits),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::ResourceLimit { .. }) { 3 } else { 2 })
        }
    }
}
