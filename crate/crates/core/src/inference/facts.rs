use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::rules::RuleId;
use super::InferenceError;
use crate::bound::FailureBound;

/// Statements about a single variety. `h` is always at least 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "predicate", rename_all = "snake_case")]
pub enum Predicate {
    NotDefective { h: u64 },
    Defective { h: u64 },
    /// A prime-field probe saw a rank drop in every trial. Not yet a proof.
    ObservedDefective { h: u64 },
    GenericallyFinite { h: u64 },
    FiberType { h: u64 },
    SecProper { h: u64 },
    Dominant { h: u64 },
    NotTwd { h: u64 },
    Twd { h: u64 },
    Not1Twd,
    Identifiable { h: u64 },
    NotIdentifiable { h: u64 },
    /// The tangential contact locus at `h` general points has dimension `>= g`.
    ContactDimAtLeast { h: u64, g: u64 },
}

impl Predicate {
    pub fn h(&self) -> Option<u64> {
        use Predicate::*;
        match *self {
            NotDefective { h }
            | Defective { h }
            | ObservedDefective { h }
            | GenericallyFinite { h }
            | FiberType { h }
            | SecProper { h }
            | Dominant { h }
            | NotTwd { h }
            | Twd { h }
            | Identifiable { h }
            | NotIdentifiable { h }
            | ContactDimAtLeast { h, .. } => Some(h),
            Not1Twd => None,
        }
    }

    pub fn name(&self) -> &'static str {
        use Predicate::*;
        match self {
            NotDefective { .. } => "not_defective",
            Defective { .. } => "defective",
            ObservedDefective { .. } => "observed_defective",
            GenericallyFinite { .. } => "generically_finite",
            FiberType { .. } => "fiber_type",
            SecProper { .. } => "sec_proper",
            Dominant { .. } => "dominant",
            NotTwd { .. } => "not_twd",
            Twd { .. } => "twd",
            Not1Twd => "not_1_twd",
            Identifiable { .. } => "identifiable",
            NotIdentifiable { .. } => "not_identifiable",
            ContactDimAtLeast { .. } => "contact_dim_at_least",
        }
    }

    /// Builds a predicate from its snake_case name; `g` is only read by
    /// `contact_dim_at_least`.
    pub fn from_name(name: &str, h: u64, g: u64) -> Option<Self> {
        use Predicate::*;
        Some(match name {
            "not_defective" => NotDefective { h },
            "defective" => Defective { h },
            "observed_defective" => ObservedDefective { h },
            "generically_finite" => GenericallyFinite { h },
            "fiber_type" => FiberType { h },
            "sec_proper" => SecProper { h },
            "dominant" => Dominant { h },
            "not_twd" => NotTwd { h },
            "twd" => Twd { h },
            "not_1_twd" => Not1Twd,
            "identifiable" => Identifiable { h },
            "not_identifiable" => NotIdentifiable { h },
            "contact_dim_at_least" => ContactDimAtLeast { h, g },
            _ => return None,
        })
    }

    pub const NAMES: [&'static str; 13] = [
        "not_defective",
        "defective",
        "observed_defective",
        "generically_finite",
        "fiber_type",
        "sec_proper",
        "dominant",
        "not_twd",
        "twd",
        "not_1_twd",
        "identifiable",
        "not_identifiable",
        "contact_dim_at_least",
    ];

    /// Smallest and largest predicate sharing this variant, for range scans.
    pub(crate) fn variant_bounds(&self) -> (Predicate, Predicate) {
        use Predicate::*;
        match self {
            ContactDimAtLeast { .. } => (
                ContactDimAtLeast { h: 0, g: 0 },
                ContactDimAtLeast { h: u64::MAX, g: u64::MAX },
            ),
            Not1Twd => (Not1Twd, Not1Twd),
            p => {
                let lo = Predicate::from_name(p.name(), 0, 0).unwrap();
                let hi = Predicate::from_name(p.name(), u64::MAX, 0).unwrap();
                (lo, hi)
            }
        }
    }

    /// Pairs that cannot hold together.
    pub fn incompatible(&self, other: &Predicate) -> bool {
        fn one_way(a: &Predicate, b: &Predicate) -> bool {
            use Predicate::*;
            match (*a, *b) {
                (NotDefective { h }, Defective { h: k }) => h == k,
                (NotDefective { h }, ObservedDefective { h: k }) => h == k,
                (GenericallyFinite { h }, FiberType { h: k }) => h == k,
                (SecProper { h }, Dominant { h: k }) => h == k,
                (NotTwd { h }, Twd { h: k }) => h == k,
                (NotTwd { h }, ContactDimAtLeast { h: k, g }) => h == k && g >= 1,
                (Not1Twd, Twd { h }) => h == 1,
                (Not1Twd, ContactDimAtLeast { h, g }) => h == 1 && g >= 1,
                (Identifiable { h }, NotIdentifiable { h: k }) => h == k,
                (Identifiable { h }, FiberType { h: k }) => h == k,
                _ => false,
            }
        }
        one_way(self, other) || one_way(other, self)
    }
}

impl fmt::Display for Predicate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Predicate::*;
        let label = match self {
            NotDefective { .. } => "NotDefective",
            Defective { .. } => "Defective",
            ObservedDefective { .. } => "ObservedDefective",
            GenericallyFinite { .. } => "GenericallyFinite",
            FiberType { .. } => "FiberType",
            SecProper { .. } => "SecProper",
            Dominant { .. } => "Dominant",
            NotTwd { .. } => "NotTwd",
            Twd { .. } => "Twd",
            Not1Twd => return f.write_str("Not1Twd"),
            Identifiable { .. } => "Identifiable",
            NotIdentifiable { .. } => "NotIdentifiable",
            ContactDimAtLeast { h, g } => return write!(f, "ContactDimAtLeast({h}, {g})"),
        };
        write!(f, "{label}({})", self.h().unwrap())
    }
}

/// Where a fact came from. Inside a fact base `premises` are fact ids; inside
/// a certificate trace they are step indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Probe { report: String, failure_bound: FailureBound },
    Formula { name: String },
    Literature { citation: String, entry: String },
    Assumption { note: String },
    Rule { rule: RuleId, premises: Vec<usize> },
}

impl Provenance {
    pub fn probe(report: impl Into<String>, failure_bound: FailureBound) -> Self {
        Provenance::Probe { report: report.into(), failure_bound }
    }

    pub fn formula(name: impl Into<String>) -> Self {
        Provenance::Formula { name: name.into() }
    }

    pub fn literature(citation: impl Into<String>, entry: impl Into<String>) -> Self {
        Provenance::Literature { citation: citation.into(), entry: entry.into() }
    }

    pub fn assumption(note: impl Into<String>) -> Self {
        Provenance::Assumption { note: note.into() }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Provenance::Probe { .. } => "probe",
            Provenance::Formula { .. } => "formula",
            Provenance::Literature { .. } => "literature",
            Provenance::Assumption { .. } => "assumption",
            Provenance::Rule { .. } => "rule",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Probe { report, failure_bound } => write!(f, "probe {report} (failure <= {failure_bound})"),
            Provenance::Formula { name } => write!(f, "formula {name}"),
            Provenance::Literature { citation, .. } => write!(f, "literature {citation}"),
            Provenance::Assumption { note } => write!(f, "assumption: {note}"),
            Provenance::Rule { rule, premises } => write!(f, "rule {} from {:?}", rule.as_str(), premises),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Fact {
    pub id: usize,
    #[serde(flatten)]
    pub predicate: Predicate,
    pub provenance: Provenance,
}

/// Numeric data about the variety that rule side conditions refer to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RuleCtx {
    /// dim X
    pub n: u64,
    /// X lives in P^N
    #[serde(rename = "N")]
    pub ambient: u64,
    /// facts with `h > h_limit` are never derived
    pub h_limit: u64,
}

impl RuleCtx {
    pub fn new(n: u64, ambient: u64, h_limit: u64) -> Self {
        Self { n, ambient, h_limit }
    }

    /// `h(n+1) - 1`, saturating.
    pub fn abstract_dim(&self, h: u64) -> u128 {
        (h as u128) * (self.n as u128 + 1) - 1
    }

    pub fn ambient_dim(&self) -> u128 {
        self.ambient as u128
    }
}

/// Facts about one variety. Insertion never runs the rules; see
/// [`super::derive`].
#[derive(Debug, Clone)]
pub struct FactBase {
    ctx: RuleCtx,
    facts: Vec<Fact>,
    index: BTreeMap<Predicate, usize>,
}

impl FactBase {
    pub fn new(ctx: RuleCtx) -> Self {
        Self { ctx, facts: Vec::new(), index: BTreeMap::new() }
    }

    pub fn ctx(&self) -> &RuleCtx {
        &self.ctx
    }

    pub fn len(&self) -> usize {
        self.facts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.facts.is_empty()
    }

    pub fn facts(&self) -> &[Fact] {
        &self.facts
    }

    pub fn get(&self, id: usize) -> Option<&Fact> {
        self.facts.get(id)
    }

    pub fn contains(&self, p: &Predicate) -> bool {
        self.index.contains_key(p)
    }

    pub fn lookup(&self, p: &Predicate) -> Option<&Fact> {
        self.index.get(p).map(|&i| &self.facts[i])
    }

    /// Predicates in canonical order.
    pub fn predicates(&self) -> impl Iterator<Item = &Predicate> {
        self.index.keys()
    }

    /// All facts of the same variant as `p`, in canonical order.
    pub fn of_variant<'a>(&'a self, p: &Predicate) -> impl Iterator<Item = &'a Fact> + 'a {
        let (lo, hi) = p.variant_bounds();
        self.index.range(lo..=hi).map(|(_, &i)| &self.facts[i])
    }

    /// Adds a fact. A predicate already present keeps its first provenance.
    pub fn assert_fact(&mut self, predicate: Predicate, provenance: Provenance) -> Result<usize, InferenceError> {
        self.check(&predicate)?;
        if let Some(&id) = self.index.get(&predicate) {
            return Ok(id);
        }
        if let Some(existing) = self.conflict_with(&predicate) {
            return Err(InferenceError::Contradiction {
                existing: Box::new(existing.clone()),
                incoming: Box::new(Fact { id: self.facts.len(), predicate, provenance }),
            });
        }
        let id = self.facts.len();
        self.facts.push(Fact { id, predicate, provenance });
        self.index.insert(predicate, id);
        Ok(id)
    }

    pub(crate) fn check(&self, p: &Predicate) -> Result<(), InferenceError> {
        if p.h() == Some(0) {
            return Err(InferenceError::InvalidFact(format!("{p}: h must be at least 1")));
        }
        if let Predicate::ContactDimAtLeast { g, .. } = p {
            if *g > self.ctx.n {
                return Err(InferenceError::Absurd(format!(
                    "{p}: a contact locus inside X has dimension at most {}",
                    self.ctx.n
                )));
            }
        }
        Ok(())
    }

    pub(crate) fn conflict_with(&self, p: &Predicate) -> Option<&Fact> {
        // candidates share h, or involve Not1Twd at h = 1
        let h = p.h().unwrap_or(1);
        let same_h = Predicate::NAMES
            .iter()
            .filter_map(|name| Predicate::from_name(name, h, 0))
            .filter(|q| !matches!(q, Predicate::ContactDimAtLeast { .. }));
        let contact = self
            .index
            .range(Predicate::ContactDimAtLeast { h, g: 0 }..=Predicate::ContactDimAtLeast { h, g: u64::MAX })
            .map(|(q, _)| *q)
            .collect::<Vec<_>>();
        same_h
            .chain(contact)
            .filter(|q| p.incompatible(q))
            .find_map(|q| self.lookup(&q))
    }
}
