use std::collections::{BTreeMap, BTreeSet};
use std::sync::Arc;

use super::Hom;
use crate::error::{Error, Result};
use crate::limits::Limits;
use crate::model::{make_instance, Ann, Instance, NameSupply, Null, Term};

/// `base^n`: `n` copies of `base` sharing constants and closed nulls, with
/// the open nulls renamed apart per copy. Copy 1 keeps the original names.
#[derive(Clone, Debug)]
pub struct Power {
    pub base: Instance,
    pub n: usize,
    pub instance: Instance,
    /// `injections[m]` embeds copy `m + 1`.
    pub injections: Vec<Hom>,
}

pub fn power(a: &Instance, n: usize, limits: &Limits) -> Result<Power> {
    if n == 0 {
        return Err(Error::Precondition("power needs n >= 1".into()));
    }
    Limits::check(a.len().saturating_mul(n), limits.power_atoms, "power atoms")?;
    let mut names = NameSupply::new();
    names.reserve_instance(a);
    let open = a.open_nulls();
    let mut renamings: Vec<BTreeMap<Term, Term>> = Vec::with_capacity(n);
    renamings.push(BTreeMap::new());
    for _ in 1..n {
        renamings.push(
            open.iter()
                .map(|x| {
                    let fresh = Null::open(names.fresh(x.name.as_str()).as_str());
                    (Term::Null(x.clone()), Term::Null(fresh))
                })
                .collect(),
        );
    }
    let atoms = renamings.iter().flat_map(|r| {
        a.atoms()
            .iter()
            .map(move |atom| atom.map_terms(|t| r.get(t).cloned().unwrap_or_else(|| t.clone())))
    });
    let instance = Instance::from_checked(atoms.collect());
    let base = Arc::new(a.clone());
    let whole = Arc::new(instance.clone());
    let injections = renamings
        .into_iter()
        .map(|r| Hom::unchecked(base.clone(), whole.clone(), r))
        .collect();
    Ok(Power {
        base: a.clone(),
        n,
        instance,
        injections,
    })
}

/// The fold `∇ : A^n → A` sending every copy of a null back to it.
pub fn fold(p: &Power) -> Hom {
    let mut map = BTreeMap::new();
    for inj in &p.injections {
        for (from, to) in inj.map() {
            map.insert(to.clone(), from.clone());
        }
    }
    Hom::unchecked(Arc::new(p.instance.clone()), Arc::new(p.base.clone()), map)
}

/// Identifies the nulls in each block with the block's least member. A block
/// mixing open and closed nulls is rejected unless `allow_mixed`, in which
/// case the merged null is closed. Returns the quotient and the strongly
/// surjective map onto it.
pub fn quotient(a: &Instance, blocks: &[Vec<Null>], allow_mixed: bool) -> Result<(Instance, Hom)> {
    let nulls = a.nulls();
    let mut seen = BTreeSet::new();
    let mut map: BTreeMap<Term, Term> = BTreeMap::new();
    for block in blocks {
        let Some(rep) = block.iter().min() else {
            continue;
        };
        for n in block {
            if !nulls.contains(n) {
                return Err(Error::Precondition(format!(
                    "{} is not a null of the instance",
                    Term::Null(n.clone())
                )));
            }
            if !seen.insert(n.clone()) {
                return Err(Error::Precondition(format!(
                    "{} occurs in two blocks",
                    Term::Null(n.clone())
                )));
            }
        }
        let mixed = block.iter().any(|n| n.ann != block[0].ann);
        if mixed && !allow_mixed {
            return Err(Error::NormalFormViolation(format!(
                "block merges open and closed nulls around {}",
                Term::Null(rep.clone())
            )));
        }
        let ann = if mixed { Ann::Closed } else { rep.ann };
        let target = Term::Null(Null {
            name: rep.name.clone(),
            ann,
        });
        for n in block {
            map.insert(Term::Null(n.clone()), target.clone());
        }
    }
    collapse(a, &map)
}

/// Image of `a` under an arbitrary term map (identity where unmapped),
/// together with the strongly surjective structure map onto it. Used for
/// quotients that may also merge constants.
pub fn collapse(a: &Instance, map: &BTreeMap<Term, Term>) -> Result<(Instance, Hom)> {
    let image = make_instance(
        a.atoms()
            .iter()
            .map(|atom| atom.map_terms(|t| map.get(t).cloned().unwrap_or_else(|| t.clone()))),
    )?;
    let h = Hom::unchecked(Arc::new(a.clone()), Arc::new(image.clone()), map.clone());
    Ok((image, h))
}
