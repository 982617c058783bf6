//! Randomized soundness checks for the rule engine.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::facts::{FactBase, Predicate, Provenance, RuleCtx};
use super::rules::derive;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FuzzSummary {
    pub runs: usize,
    /// runs whose random facts were jointly inconsistent
    pub contradictory: usize,
    pub derived_facts: usize,
    pub certificates_replayed: usize,
}

fn random_predicate(rng: &mut ChaCha8Rng, ctx: &RuleCtx) -> Predicate {
    let name = Predicate::NAMES[rng.gen_range(0..Predicate::NAMES.len())];
    let h = rng.gen_range(1..=ctx.h_limit);
    let g = rng.gen_range(1..=ctx.n);
    Predicate::from_name(name, h, g).expect("known name")
}

/// `Ok(sorted closure)`, or `Err(())` if the facts are inconsistent.
fn closure(ctx: RuleCtx, facts: &[Predicate], summary: &mut FuzzSummary) -> Result<Result<Vec<Predicate>, ()>, String> {
    let mut base = FactBase::new(ctx);
    for p in facts {
        if base.assert_fact(*p, Provenance::assumption("fuzz")).is_err() {
            return Ok(Err(()));
        }
    }
    let start = base.len();
    if derive(&mut base).is_err() {
        return Ok(Err(()));
    }
    for f in &base.facts()[start..] {
        let Provenance::Rule { rule, premises } = &f.provenance else {
            return Err(format!("derived {} without a rule", f.predicate));
        };
        if premises.iter().any(|&i| i >= f.id) {
            return Err(format!("{} uses a later premise", f.predicate));
        }
        let prem: Vec<Predicate> = premises.iter().map(|&i| base.get(i).expect("premise").predicate).collect();
        if rule.fire(&ctx, &prem) != Some(f.predicate) {
            return Err(format!("{} fired with unsatisfied premises for {}", rule.as_str(), f.predicate));
        }
        base.certificate(f.id).replay(&ctx).map_err(|e| format!("{}: {e}", f.predicate))?;
        summary.certificates_replayed += 1;
    }
    summary.derived_facts += base.len() - start;
    Ok(Ok(base.predicates().copied().collect()))
}

/// Random fact bases: every derived fact must replay, and three insertion
/// orders must give the same closure.
pub fn fuzz_rules(runs: usize, seed: u64) -> Result<FuzzSummary, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut summary = FuzzSummary { runs, ..Default::default() };
    for run in 0..runs {
        let n = rng.gen_range(1..=4);
        let ambient = n + rng.gen_range(1..=60);
        let ctx = RuleCtx::new(n, ambient, rng.gen_range(2..=14));
        let count = rng.gen_range(0..=10);
        let mut facts: Vec<Predicate> = (0..count).map(|_| random_predicate(&mut rng, &ctx)).collect();
        let first = closure(ctx, &facts, &mut summary)?;
        if first.is_err() {
            summary.contradictory += 1;
        }
        for _ in 0..2 {
            facts.shuffle(&mut rng);
            let again = closure(ctx, &facts, &mut summary)?;
            if again != first {
                return Err(format!("run {run}: closure depends on insertion order"));
            }
        }
    }
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fuzz_passes_and_exercises_rules() {
        let s = fuzz_rules(150, 1).unwrap();
        assert!(s.derived_facts > 150);
        assert!(s.contradictory > 0 && s.contradictory < s.runs);
    }
}
