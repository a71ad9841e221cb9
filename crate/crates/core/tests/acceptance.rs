//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{BTreeMap, BTreeSet};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;

use nullcore::annotation::{annotation_minimize, canonicalize_keeping_closed, ocwa_multicore};
use nullcore::cores::{core, core_at, glue, is_pcwa_core, maximal_atoms, multicore};
use nullcore::fixtures;
use nullcore::hom::{
    collapse, exists_cover, find_strong_surjection, is_isomorphic, is_reflective_subinstance, quotient, Hom,
};
use nullcore::io::parse_instance;
use nullcore::model::{canonicalize, make_instance, union_disjoint, Atom, Instance, Null, Symbol, Term};
use nullcore::oracle::{
    brute_implies, complete_instances, random_instance, random_instance_in, random_pair, random_query,
    sample_member, GenParams, Schema,
};
use nullcore::query::{certain_pcwa, naive_eval};
use nullcore::semantics::{equiv, implies, implies_method_v, implies_method_vi, member, member_ls, SemanticsId};
use nullcore::{Error, Limits};

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn inst(s: &str) -> Instance {
    parse_instance(s).expect("instance literal")
}

fn lim() -> Limits {
    Limits::default()
}

fn pcwa_equiv(a: &Instance, b: &Instance) -> bool {
    equiv(SemanticsId::Pcwa, a, b, &lim()).expect("pcwa equivalence").verdict
}

/// Proper subsets of the atoms of `a`, as instances.
fn proper_subsets(a: &Instance) -> Vec<Instance> {
    let atoms: Vec<&Atom> = a.atoms().iter().collect();
    let n = atoms.len();
    (0..(1u64 << n) - 1)
        .map(|m| make_instance((0..n).filter(|i| m >> i & 1 == 1).map(|i| atoms[i].clone())).unwrap())
        .collect()
}

/// Set partitions of `0..n` in restricted-growth form.
fn partitions(n: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    fn go(rgs: &mut Vec<usize>, n: usize, max: usize, out: &mut Vec<Vec<usize>>) {
        if rgs.len() == n {
            out.push(rgs.clone());
            return;
        }
        for b in 0..=max {
            rgs.push(b);
            go(rgs, n, max.max(b + 1), out);
            rgs.pop();
        }
    }
    go(&mut Vec::new(), n, 0, &mut out);
    out
}

fn quotients(a: &Instance) -> Vec<Instance> {
    let nulls: Vec<Null> = a.nulls().into_iter().collect();
    partitions(nulls.len())
        .into_iter()
        .filter(|rgs| rgs.iter().max().map_or(0, |m| m + 1) < nulls.len())
        .map(|rgs| {
            let mut blocks: BTreeMap<usize, Vec<Null>> = BTreeMap::new();
            for (i, b) in rgs.into_iter().enumerate() {
                blocks.entry(b).or_default().push(nulls[i].clone());
            }
            let blocks: Vec<Vec<Null>> = blocks.into_values().collect();
            quotient(a, &blocks, false).expect("open nulls").0
        })
        .collect()
}

fn no_proper_equivalent_subinstance(a: &Instance) -> bool {
    proper_subsets(a).iter().all(|s| !pcwa_equiv(s, a))
}

fn criterion_1() -> Outcome {
    let [a1, b1, c1] = ["A1", "B1", "C1"].map(fixtures::get);
    for (x, y) in [(&a1, &b1), (&a1, &c1), (&b1, &c1)] {
        check(pcwa_equiv(x, y), || format!("{x} and {y} not equivalent"))?;
    }
    check(!is_isomorphic(&b1, &c1), || "B1 and C1 isomorphic".into())?;
    check(no_proper_equivalent_subinstance(&b1), || "B1 has an equivalent proper subset".into())?;
    check(no_proper_equivalent_subinstance(&c1), || "C1 has an equivalent proper subset".into())?;
    Ok(format!(
        "{} + {} proper subsets checked",
        proper_subsets(&b1).len(),
        proper_subsets(&c1).len()
    ))
}

fn criterion_2() -> Outcome {
    let a2 = fixtures::get("A2");
    let atoms: Vec<&Atom> = a2.atoms().iter().collect();
    // atoms in file order
    let k: Vec<Atom> = [
        "R(?x, ?x, ?u, ?y, ?z)",
        "R(?x, ?x, ?x, ?x, ?z)",
        "R(?x, ?x, ?x, ?y, ?x)",
        "R(?x, ?x, ?x, ?x, ?x)",
        "R(?v, ?p, ?p, ?r, ?s)",
        "R(?p, ?p, ?p, ?p, ?s)",
        "R(?p, ?p, ?p, ?r, ?p)",
        "R(?p, ?p, ?p, ?p, ?p)",
    ]
    .iter()
    .map(|s| inst(s).atoms().iter().next().unwrap().clone())
    .collect();
    check(atoms.len() == 8 && k.iter().all(|x| a2.contains(x)), || "A2 atoms".into())?;
    let max: BTreeSet<Atom> = maximal_atoms(&a2).into_iter().collect();
    let want: BTreeSet<Atom> = [k[0].clone(), k[4].clone()].into_iter().collect();
    check(max == want, || format!("maximal atoms {max:?}"))?;
    let ck1 = core_at(&a2, &k[0]).unwrap().core;
    let ck5 = core_at(&a2, &k[4]).unwrap().core;
    check(ck1 == fixtures::get("Ck1"), || format!("core at k1 is {ck1}"))?;
    check(ck5 == fixtures::get("Ck5"), || format!("core at k5 is {ck5}"))?;
    let mc = multicore(&a2);
    let mut want_mc = vec![canonicalize(&ck1), canonicalize(&ck5)];
    want_mc.sort();
    check(mc.members == want_mc, || "multicore members".into())?;

    let pair = |x: &str, y: &str| vec![Null::open(x), Null::open(y)];
    let (b2, _) = quotient(&a2, &[pair("x", "p"), pair("y", "r")], false).unwrap();
    let (c2, _) = quotient(&a2, &[pair("x", "p"), pair("z", "s")], false).unwrap();
    check(b2 == fixtures::get("B2"), || format!("quotient is {b2}"))?;
    check(c2 == fixtures::get("C2"), || format!("quotient is {c2}"))?;
    check(pcwa_equiv(&b2, &a2) && pcwa_equiv(&c2, &a2), || "images not equivalent to A2".into())?;
    check(!is_isomorphic(&b2, &c2), || "B2 and C2 isomorphic".into())?;
    let mut seen = 0;
    for x in [&b2, &c2] {
        for q in quotients(x) {
            seen += 1;
            check(!pcwa_equiv(&q, x), || format!("{x} has the equivalent image {q}"))?;
        }
    }
    Ok(format!("{seen} proper null quotients of B2 and C2 checked"))
}

fn criterion_3() -> Outcome {
    let [a3, b3, c3] = ["A3", "B3", "C3"].map(fixtures::get);
    check(pcwa_equiv(&a3, &b3) && pcwa_equiv(&b3, &c3) && pcwa_equiv(&a3, &c3), || {
        "A3, B3, C3 not equivalent".into()
    })?;
    check(b3.atoms().is_subset(a3.atoms()) && b3.len() < a3.len(), || "B3 not a proper subinstance".into())?;
    check(no_proper_equivalent_subinstance(&b3), || "B3 not minimal".into())?;
    check(find_strong_surjection(&a3, &c3).is_some(), || "C3 not an image of A3".into())?;
    check(find_strong_surjection(&b3, &c3).is_some(), || "C3 not an image of B3".into())?;
    let mut reflective = 0;
    for s in proper_subsets(&a3) {
        if is_reflective_subinstance(&s, &a3, false).is_some() {
            reflective += 1;
            check(!pcwa_equiv(&s, &a3), || format!("{s} is an equivalent reflective subinstance"))?;
        }
    }
    Ok(format!("{reflective} proper reflective subinstances of A3, none equivalent"))
}

fn criterion_4() -> Outcome {
    let d = fixtures::get("D");
    let c = core(&d);
    check(c == inst("R(?z, ?z, ?z)"), || format!("core(D) = {c}"))?;
    check(is_pcwa_core(&d), || "D is not a PCWA-core".into())?;
    check(!is_pcwa_core(&fixtures::get("C1")), || "C1 is a PCWA-core".into())?;
    Ok(format!("core(D) = {c}"))
}

fn criterion_5() -> Outcome {
    let cs = ["a", "b", "c"];
    let mut cands = Vec::new();
    for x in cs {
        for y in cs {
            for z in cs {
                cands.push(Atom::new("R", vec![Term::constant(x), Term::constant(y), Term::constant(z)]));
            }
        }
    }
    let ls1 = fixtures::get("LS1");
    let a = Term::constant("a");
    let all = complete_instances(&cands, 2);
    for i in &all {
        let expected = i.atoms().iter().all(|t| t.args[0] == a && t.args[1] == t.args[2]);
        let got = member(SemanticsId::OcwaStar, &ls1, i, &lim()).map_err(|e| e.to_string())?.verdict;
        check(got == expected, || format!("member(OCWA*, LS1, {i}) = {got}"))?;
    }
    let witness = inst("R(a, b, b) R(a, b, c)");
    let ls = member_ls(&fixtures::raw("LS1"), &witness, &lim()).map_err(|e| e.to_string())?;
    check(ls.verdict, || "OCWA^LS member example rejected".into())?;
    Ok(format!("{} instances checked", all.len()))
}

fn criterion_6() -> Outcome {
    let names = ["RED_AVW", "RED_AVw", "RED_Avw", "RED_AvW", "RED_B"];
    let red: Vec<Instance> = names.iter().map(|n| fixtures::get(n)).collect();
    for (i, x) in red.iter().enumerate() {
        for (j, y) in red.iter().enumerate() {
            let d = equiv(SemanticsId::OcwaStar, x, y, &lim()).map_err(|e| e.to_string())?;
            check(d.verdict, || format!("{} and {} not equivalent", names[i], names[j]))?;
        }
    }
    let report = annotation_minimize(&red[0], &lim()).map_err(|e| e.to_string())?;
    check(report.minimal && report.opened.len() == 2 && report.instance.closed_nulls().is_empty(), || {
        format!("minimize opened {:?}", report.opened)
    })?;
    let mc = ocwa_multicore(&red[0], &lim()).map_err(|e| e.to_string())?;
    check(mc.closed_nulls.is_empty(), || "closed nulls remain".into())?;
    check(mc.members.len() == 1 && is_isomorphic(&mc.members[0], &inst("R(?x, ?y)")), || {
        format!("members {:?}", mc.members)
    })?;
    Ok(format!("multicore member {}", mc.members[0]))
}

fn criterion_7() -> Outcome {
    let mut settled = 0;
    let mut skipped = 0;
    for seed in 0..500u64 {
        let (a, b) = random_pair(&GenParams::with_seed(seed));
        let v = implies_method_v(&a, &b, &lim()).map_err(|e| format!("seed {seed}: {e}"))?;
        let vi = implies_method_vi(&a, &b, &lim()).map_err(|e| format!("seed {seed}: {e}"))?;
        check(v.verdict == vi.verdict, || format!("seed {seed}: (v) {} (vi) {}", v.verdict, vi.verdict))?;
        match brute_implies(SemanticsId::OcwaStar, &a, &b, &lim()) {
            Ok(t) => {
                settled += 1;
                check(t == v.verdict, || format!("seed {seed}: engine {} oracle {t}", v.verdict))?;
            }
            Err(Error::ResourceLimit { .. }) => skipped += 1,
            Err(e) => return Err(format!("seed {seed}: {e}")),
        }
    }
    check(skipped == 0, || format!("oracle gave up on {skipped} pairs"))?;
    Ok(format!("500 pairs, {settled} confirmed by the oracle"))
}

fn graph(edges: &[(usize, usize)]) -> Instance {
    let v = |i: usize| Term::open(&format!("n{i}"));
    make_instance(
        edges
            .iter()
            .flat_map(|&(x, y)| [Atom::new("E", vec![v(x), v(y)]), Atom::new("E", vec![v(y), v(x)])]),
    )
    .unwrap()
}

fn criterion_8() -> Outcome {
    let g = |n: &str| fixtures::get(n);
    check(exists_cover(&g("EDGE"), &g("K3")).is_some(), || "EDGE -> K3".into())?;
    check(exists_cover(&g("C5"), &g("K3")).is_some(), || "C5 -> K3".into())?;
    check(exists_cover(&g("C4"), &g("K3")).is_some(), || "C4 -> K3".into())?;
    check(exists_cover(&g("K3"), &g("EDGE")).is_none(), || "K3 -> EDGE".into())?;
    let mut rng = GenParams::with_seed(8).rng();
    let mut timings = Vec::new();
    for n in 3..=6 {
        let k: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
        let kn = graph(&k);
        let edges: Vec<(usize, usize)> = (0..8)
            .flat_map(|i| (i + 1..8).map(move |j| (i, j)))
            .filter(|_| rng.gen_bool(0.5))
            .collect();
        let gr = graph(&edges);
        for (dir, x, y) in [("<=", &kn, &gr), (">=", &gr, &kn)] {
            let t = Instant::now();
            let d = implies(SemanticsId::Pcwa, x, y, &lim()).map_err(|e| e.to_string())?;
            timings.push(format!("K{n}{dir}G:{}:{:.1}ms", d.verdict, t.elapsed().as_secs_f64() * 1e3));
        }
    }
    Ok(format!("PCWA implication against G(8, 1/2): {}", timings.join(" ")))
}

/// Answers of `q` on each member, intersected. `None` for no members.
fn intersect_over(q: &nullcore::query::Query, members: &[Instance]) -> Option<BTreeSet<Vec<Term>>> {
    let mut acc: Option<BTreeSet<Vec<Term>>> = None;
    for m in members {
        let ans = naive_eval(q, m).expect("query in class");
        acc = Some(match acc {
            None => ans,
            Some(a) => a.intersection(&ans).cloned().collect(),
        });
    }
    acc
}

fn criterion_9() -> Outcome {
    let consts: Vec<Symbol> = ["a", "b", "c"].iter().map(|s| Symbol::from(*s)).collect();
    let mut done = 0;
    let mut seed = 0u64;
    let mut nonempty = 0;
    while done < 100 {
        let p = GenParams::with_seed(seed).unannotated();
        seed += 1;
        let mut rng = p.rng();
        let schema = Schema::random(&mut rng, &p);
        let a = random_instance_in(&mut rng, &schema, &p);
        let q = random_query(&mut rng, &schema, &consts);
        if a.is_empty() {
            continue;
        }
        done += 1;
        let certain = certain_pcwa(&q, &a).map_err(|e| format!("{q}: {e}"))?;
        let naive = naive_eval(&q, &a).map_err(|e| format!("{q}: {e}"))?;
        let meet = intersect_over(&q, &multicore(&a).members).expect("non-empty multicore");
        check(certain == naive && naive == meet, || format!("{q} on {a}"))?;
        if !certain.is_empty() {
            nonempty += 1;
        }
    }
    Ok(format!("100 pairs, {nonempty} with non-empty answers"))
}

fn rename_nulls(a: &Instance, suffix: &str, open_only: bool) -> Instance {
    a.map_terms(|t| match t {
        Term::Null(n) if !(open_only && n.is_closed()) => {
            Term::Null(Null { name: format!("{}{suffix}", n.name).as_str().into(), ann: n.ann })
        }
        _ => t.clone(),
    })
    .unwrap()
}

/// Instances PCWA-equivalent to `a` built by renaming, adding copies and
/// gluing.
fn mutations(a: &Instance) -> Vec<(&'static str, Instance)> {
    let mut out = vec![("renaming", rename_nulls(a, "1", false))];
    let mc = multicore(a);
    if let Some(m) = mc.members.first() {
        out.push(("member copy", union_disjoint(a, m, false).unwrap()));
    }
    for k in a.atoms() {
        let private = k.nulls().all(|n| a.atoms().iter().filter(|x| x.nulls().any(|y| y == n)).count() == 1);
        if private && k.nulls().next().is_some() {
            let extra = Instance::empty()
                .union(&rename_nulls(&make_instance([k.clone()]).unwrap(), "2", false))
                .unwrap();
            out.push(("atom copy", a.union(&extra).unwrap()));
            break;
        }
    }
    let c = core(a);
    let copy = rename_nulls(a, "3", false);
    let c_copy = rename_nulls(&c, "3", false);
    let map: BTreeMap<Term, Term> = c
        .nulls()
        .into_iter()
        .map(|n| {
            let t = Term::Null(n.clone());
            let u = Term::Null(Null { name: format!("{}3", n.name).as_str().into(), ann: n.ann });
            (t, u)
        })
        .collect();
    let iso = Hom::new(Arc::new(c), Arc::new(c_copy), map).unwrap();
    out.push(("gluing", glue(a, &copy, &iso).unwrap().0));
    out
}

fn criterion_10() -> Outcome {
    let mut compared = 0;
    for seed in 0..100u64 {
        let a = random_instance(&GenParams::with_seed(seed).unannotated());
        let mc = multicore(&a);
        for (what, b) in mutations(&a) {
            check(pcwa_equiv(&a, &b), || format!("seed {seed}: {what} changed the semantics"))?;
            compared += 1;
            check(mc.same_as(&multicore(&b)), || format!("seed {seed}: {what} changed the multicore of {a}"))?;
        }
    }
    let mut annotated = 0;
    for seed in 0..100u64 {
        let a = random_instance(&GenParams::with_seed(seed));
        let key = |x: &Instance| -> Result<(Vec<Instance>, Vec<Null>), String> {
            let m = ocwa_multicore(x, &lim()).map_err(|e| format!("seed {seed}: {e}"))?;
            let mut members: Vec<Instance> = m.members.iter().map(canonicalize_keeping_closed).collect();
            members.sort();
            Ok((members, m.closed_nulls))
        };
        let renamed = rename_nulls(&a, "1", true);
        let copy = match ocwa_multicore(&a, &lim()) {
            Ok(m) => m.members.first().map(|m| union_disjoint(&a, m, true).unwrap()),
            Err(e) => return Err(format!("seed {seed}: {e}")),
        };
        for b in std::iter::once(renamed).chain(copy) {
            let same = equiv(SemanticsId::OcwaStar, &a, &b, &lim()).map_err(|e| e.to_string())?;
            check(same.verdict, || format!("seed {seed}: mutation {b} not equivalent to {a}"))?;
            check(key(&a)? == key(&b)?, || format!("seed {seed}: OCWA* multicore of {a} and {b} differ"))?;
            annotated += 1;
        }
    }
    Ok(format!("{compared} PCWA and {annotated} OCWA* mutations"))
}

fn criterion_11() -> Outcome {
    let pool: Vec<Symbol> = ["a", "b", "c", "d", "e"].iter().map(|s| Symbol::from(*s)).collect();
    let mut collapsed = 0;
    for seed in 0..50u64 {
        let p = GenParams::with_seed(seed);
        let a = random_instance(&p);
        let mut rng = p.rng();
        let i = sample_member(&mut rng, &a, &pool, 1 + (seed % 3) as usize);
        check(member(SemanticsId::OcwaStar, &a, &i, &lim()).map_err(|e| e.to_string())?.verdict, || {
            format!("seed {seed}: {i} not a member of {a}")
        })?;
        let fixed = a.constants();
        let movable: Vec<Symbol> = i.constants().into_iter().filter(|c| !fixed.contains(c)).collect();
        let map: BTreeMap<Term, Term> = movable
            .iter()
            .map(|c| (Term::Const(c.clone()), Term::Const(pool[rng.gen_range(0..pool.len())].clone())))
            .collect();
        let (j, _) = collapse(&i, &map).map_err(|e| e.to_string())?;
        if j != i {
            collapsed += 1;
        }
        check(member(SemanticsId::OcwaStar, &a, &j, &lim()).map_err(|e| e.to_string())?.verdict, || {
            format!("seed {seed}: {j} (from {i}) not a member of {a}")
        })?;
    }
    Ok(format!("50 pairs, {collapsed} proper collapses"))
}

fn main() -> ExitCode {
    let criteria: [(u32, fn() -> Outcome); 11] = [
        (1, criterion_1),
        (2, criterion_2),
        (3, criterion_3),
        (4, criterion_4),
        (5, criterion_5),
        (6, criterion_6),
        (7, criterion_7),
        (8, criterion_8),
        (9, criterion_9),
        (10, criterion_10),
        (11, criterion_11),
    ];
    let mut failed = 0;
    for (n, f) in criteria {
        let t = Instant::now();
        let r = f();
        let secs = t.elapsed().as_secs_f64();
        match r {
            Ok(detail) => println!("criterion {n}: PASS ({secs:.2}s) {detail}"),
            Err(why) => {
                failed += 1;
                println!("criterion {n}: FAIL ({secs:.2}s) {why}");
            }
        }
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
