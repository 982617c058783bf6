//! Forward chaining over facts about one variety, with replayable
//! certificates for every derived fact.

mod catalog;
mod expr;
mod facts;
mod fuzz;
mod range;
mod rules;

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;
use thiserror::Error;

use crate::bound::FailureBound;

pub use catalog::{catalog_facts, pattern_variables, PATTERN_FUNCTIONS, PATTERN_VARIABLES, EntryFact, KnowledgeBase, KnowledgeEntry, DEFAULT_KNOWLEDGE_BASE};
pub use expr::{Expr, ExprError, Vars};
pub use fuzz::{fuzz_rules, FuzzSummary};
pub use facts::{Fact, FactBase, Predicate, Provenance, RuleCtx};
pub use range::{
    formula_facts, identifiability_range, probe_facts, Budget, Mode, Promotion, RangeOptions, RangeReport,
    SecantEntry, TwdEntry, TwdOutcome, DEFAULT_H_WINDOW,
};
pub use rules::{derive, RuleId, ALL_RULES};

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("invalid fact: {0}")]
    InvalidFact(String),
    #[error("absurd fact: {0}")]
    Absurd(String),
    #[error("contradiction: {} ({}) conflicts with {} ({})", existing.predicate, existing.provenance, incoming.predicate, incoming.provenance)]
    Contradiction { existing: Box<Fact>, incoming: Box<Fact> },
    #[error("contradiction during closure: {} conflicts with {}", first.goal, second.goal)]
    DerivedContradiction { first: Box<Certificate>, second: Box<Certificate> },
    #[error("closure derived an absurd fact {}: {reason}", certificate.goal)]
    DerivedAbsurd { reason: String, certificate: Box<Certificate> },
    #[error("knowledge base: {0}")]
    KnowledgeBase(String),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
    #[error(transparent)]
    Probe(#[from] crate::secantprobe::ProbeError),
}

/// One node of a certificate trace. Rule premises are indices of earlier
/// steps.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TraceStep {
    pub step: usize,
    #[serde(flatten)]
    pub predicate: Predicate,
    pub provenance: Provenance,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExternalHypothesis {
    #[serde(flatten)]
    pub predicate: Predicate,
    pub citation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Certificate {
    pub goal: Predicate,
    pub trace: Vec<TraceStep>,
    pub hypotheses_external: Vec<ExternalHypothesis>,
    /// Union bound over the probe leaves. Zero when no leaf is randomized.
    pub failure_bound: FailureBound,
}

impl Certificate {
    /// Re-applies every rule to its recorded premises.
    pub fn replay(&self, ctx: &RuleCtx) -> Result<(), String> {
        for (i, step) in self.trace.iter().enumerate() {
            if step.step != i {
                return Err(format!("step {i} is numbered {}", step.step));
            }
            if let Provenance::Rule { rule, premises } = &step.provenance {
                if premises.iter().any(|&j| j >= i) {
                    return Err(format!("step {i} uses a premise that does not come earlier"));
                }
                let prem: Vec<Predicate> = premises.iter().map(|&j| self.trace[j].predicate).collect();
                match rule.fire(ctx, &prem) {
                    Some(c) if c == step.predicate => {}
                    Some(c) => {
                        return Err(format!("step {i}: {} yields {c}, recorded {}", rule.as_str(), step.predicate))
                    }
                    None => return Err(format!("step {i}: {} does not apply to its premises", rule.as_str())),
                }
            }
        }
        match self.trace.last() {
            Some(last) if last.predicate == self.goal => Ok(()),
            _ => Err("trace does not end at the goal".into()),
        }
    }

    pub fn leaves(&self) -> impl Iterator<Item = &TraceStep> {
        self.trace.iter().filter(|s| !matches!(s.provenance, Provenance::Rule { .. }))
    }

    pub fn rules_used(&self) -> BTreeSet<RuleId> {
        self.trace
            .iter()
            .filter_map(|s| match &s.provenance {
                Provenance::Rule { rule, .. } => Some(*rule),
                _ => None,
            })
            .collect()
    }
}

impl FactBase {
    /// Certificate for a fact already in the base.
    pub fn certificate(&self, id: usize) -> Certificate {
        self.build_certificate(self.get(id).expect("fact id").clone())
    }

    /// Certificate for a fact that would be derived from premises already in
    /// the base.
    pub fn certificate_for_candidate(&self, fact: &Fact) -> Certificate {
        self.build_certificate(fact.clone())
    }

    fn build_certificate(&self, goal: Fact) -> Certificate {
        // post-order over premise ids, iterative to survive long chains
        let mut order: Vec<Fact> = Vec::new();
        let mut done: BTreeMap<usize, usize> = BTreeMap::new();
        let premises_of = |f: &Fact| match &f.provenance {
            Provenance::Rule { premises, .. } => premises.clone(),
            _ => Vec::new(),
        };
        let mut stack: Vec<(Fact, bool)> = vec![(goal.clone(), false)];
        let goal_is_new = self.get(goal.id).map(|f| f.predicate != goal.predicate).unwrap_or(true);
        while let Some((f, expanded)) = stack.pop() {
            let is_goal = f.predicate == goal.predicate;
            let key = if is_goal && goal_is_new { usize::MAX } else { f.id };
            if done.contains_key(&key) {
                continue;
            }
            if expanded {
                done.insert(key, order.len());
                order.push(f);
                continue;
            }
            let prem = premises_of(&f);
            stack.push((f, true));
            for &p in prem.iter().rev() {
                if !done.contains_key(&p) {
                    let pf = self.get(p).expect("premise id").clone();
                    stack.push((pf, false));
                }
            }
        }
        let mut trace = Vec::with_capacity(order.len());
        let mut bound = FailureBound::zero();
        let mut external = Vec::new();
        for (i, f) in order.iter().enumerate() {
            let provenance = match &f.provenance {
                Provenance::Rule { rule, premises } => Provenance::Rule {
                    rule: *rule,
                    premises: premises.iter().map(|p| done[p]).collect(),
                },
                Provenance::Probe { failure_bound, .. } => {
                    bound = bound + failure_bound.clone();
                    f.provenance.clone()
                }
                Provenance::Literature { citation, .. } => {
                    external.push(ExternalHypothesis { predicate: f.predicate, citation: citation.clone() });
                    f.provenance.clone()
                }
                other => other.clone(),
            };
            let note = match &provenance {
                Provenance::Rule { rule, .. } => rule.note().map(str::to_string),
                _ => None,
            };
            trace.push(TraceStep { step: i, predicate: f.predicate, provenance, note });
        }
        Certificate { goal: goal.predicate, trace, hypotheses_external: external, failure_bound: bound }
    }
}
