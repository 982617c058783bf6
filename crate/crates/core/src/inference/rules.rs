//! Inference rules. Each rule has one key premise; the remaining premises
//! and every side condition are functions of the key. [`RuleId::fire`] is the
//! single place a conclusion is computed, used both for forward chaining and
//! for replaying certificates.

use std::collections::VecDeque;

use serde::{Serialize, Serializer};

use super::facts::{FactBase, Predicate, Provenance, RuleCtx};
use super::InferenceError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum RuleId {
    DefectiveFiberType,
    FiberTypeNotIdentifiable,
    FiberTypeUp,
    TwdUp,
    NotTwdDown,
    Not1TwdAtOne,
    NotTwdAtOne,
    FiniteDown,
    NotDefectiveFinite,
    FiniteProper,
    FiniteDominant,
    NotDefectiveDominant,
    TwdContact,
    NotTwdIdentifiable,
    ContactChain,
    ContactChainProper,
    TwdDefectChain,
    TwdDefectChainProper,
    IdentifiableFromNextNonDefect,
    TwdStep,
    ContactGrowth,
}

use Predicate as P;
use RuleId::*;

/// Fixed firing order.
pub const ALL_RULES: [RuleId; 21] = [
    DefectiveFiberType,
    FiberTypeNotIdentifiable,
    FiberTypeUp,
    TwdUp,
    NotTwdDown,
    Not1TwdAtOne,
    NotTwdAtOne,
    FiniteDown,
    NotDefectiveFinite,
    FiniteProper,
    FiniteDominant,
    NotDefectiveDominant,
    TwdContact,
    NotTwdIdentifiable,
    ContactChain,
    ContactChainProper,
    TwdDefectChain,
    TwdDefectChainProper,
    IdentifiableFromNextNonDefect,
    TwdStep,
    ContactGrowth,
];

/// How a non-key premise locates candidate key facts.
enum Trigger {
    Keys(Vec<Predicate>),
    ScanKeys,
}

impl RuleId {
    pub fn as_str(&self) -> &'static str {
        match self {
            DefectiveFiberType => "defective-fiber-type",
            FiberTypeNotIdentifiable => "fiber-type-not-identifiable",
            FiberTypeUp => "fiber-type-up",
            TwdUp => "twd-up",
            NotTwdDown => "not-twd-down",
            Not1TwdAtOne => "not-1-twd-at-one",
            NotTwdAtOne => "not-twd-at-one",
            FiniteDown => "finite-down",
            NotDefectiveFinite => "not-defective-finite",
            FiniteProper => "finite-proper",
            FiniteDominant => "finite-dominant",
            NotDefectiveDominant => "not-defective-dominant",
            TwdContact => "twd-contact",
            NotTwdIdentifiable => "not-twd-identifiable",
            ContactChain => "contact-chain",
            ContactChainProper => "contact-chain-proper",
            TwdDefectChain => "twd-defect-chain",
            TwdDefectChainProper => "twd-defect-chain-proper",
            IdentifiableFromNextNonDefect => "identifiable-from-next-nondefect",
            TwdStep => "twd-step",
            ContactGrowth => "contact-growth",
        }
    }

    pub fn parse(s: &str) -> Option<RuleId> {
        ALL_RULES.iter().copied().find(|r| r.as_str() == s)
    }

    /// Plain statement of the rule, for reports.
    pub fn statement(&self) -> &'static str {
        match self {
            DefectiveFiberType => "Defective(h) => FiberType(h)",
            FiberTypeNotIdentifiable => "FiberType(h) => NotIdentifiable(h)",
            FiberTypeUp => "FiberType(h) => FiberType(h+1)",
            TwdUp => "Twd(h) => Twd(h+1)",
            NotTwdDown => "NotTwd(h) => NotTwd(h-1)",
            Not1TwdAtOne => "Not1Twd => NotTwd(1)",
            NotTwdAtOne => "NotTwd(1) => Not1Twd",
            FiniteDown => "GenericallyFinite(h) => GenericallyFinite(h-1)",
            NotDefectiveFinite => "NotDefective(h), h(n+1)-1 <= N => GenericallyFinite(h)",
            FiniteProper => "GenericallyFinite(h), h(n+1)-1 < N => SecProper(h)",
            FiniteDominant => "GenericallyFinite(h), h(n+1)-1 = N => Dominant(h)",
            NotDefectiveDominant => "NotDefective(h), h(n+1)-1 >= N => Dominant(h)",
            TwdContact => "Twd(h) => ContactDimAtLeast(h, 1)",
            NotTwdIdentifiable => "NotTwd(h), and SecProper(h) when h(n+1)-1 > N => Identifiable(h)",
            ContactChain => "Not1Twd, GenericallyFinite(k), k >= n, k-n >= 1 => NotTwd(k-n)",
            ContactChainProper => "Not1Twd, GenericallyFinite(k), SecProper(k), k >= n => NotTwd(k-n+1)",
            TwdDefectChain => "Not1Twd, GenericallyFinite(k), k > 2n => NotTwd(k-1)",
            TwdDefectChainProper => "Not1Twd, GenericallyFinite(k), SecProper(k), k >= 2n => NotTwd(k-1)",
            IdentifiableFromNextNonDefect => {
                "NotTwd(h-1), NotDefective(h+1), h > n, N >= (h+1)(n+1)-1 => Identifiable(h)"
            }
            TwdStep => "NotTwd(k-1), GenericallyFinite(k+1), k > n, N >= (k+1)(n+1)-1 => NotTwd(k)",
            ContactGrowth => {
                "ContactDimAtLeast(k, g), Not1Twd, GenericallyFinite(k+1) => ContactDimAtLeast(k+1, g+1)"
            }
        }
    }

    /// Extra hypotheses this implementation adds to the published statement.
    pub fn note(&self) -> Option<&'static str> {
        match self {
            NotTwdIdentifiable => Some("applied only when Sec_h is proper or the abstract secant fits in P^N"),
            IdentifiableFromNextNonDefect => Some("applied only when N >= (h+1)(n+1)-1"),
            _ => None,
        }
    }

    fn is_key(&self, p: &Predicate) -> bool {
        matches!(
            (self, p),
            (DefectiveFiberType, P::Defective { .. })
                | (FiberTypeNotIdentifiable | FiberTypeUp, P::FiberType { .. })
                | (TwdUp | TwdContact, P::Twd { .. })
                | (NotTwdDown | NotTwdAtOne | NotTwdIdentifiable, P::NotTwd { .. })
                | (Not1TwdAtOne, P::Not1Twd)
                | (
                    FiniteDown
                        | FiniteProper
                        | FiniteDominant
                        | ContactChain
                        | ContactChainProper
                        | TwdDefectChain
                        | TwdDefectChainProper
                        | TwdStep,
                    P::GenericallyFinite { .. }
                )
                | (NotDefectiveFinite | NotDefectiveDominant | IdentifiableFromNextNonDefect, P::NotDefective { .. })
                | (ContactGrowth, P::ContactDimAtLeast { .. })
        )
    }

    /// Premise list for key `key`, or `None` when the key does not satisfy the
    /// side conditions.
    pub fn premises(&self, ctx: &RuleCtx, key: &Predicate) -> Option<Vec<Predicate>> {
        if !self.is_key(key) {
            return None;
        }
        let n = ctx.n;
        let nn = ctx.ambient_dim();
        let k = key.h().unwrap_or(1);
        let ok = |c: bool, v: Vec<Predicate>| if c { Some(v) } else { None };
        match self {
            DefectiveFiberType | FiberTypeNotIdentifiable | TwdContact | NotTwdAtOne | Not1TwdAtOne => {
                ok(*self != NotTwdAtOne || k == 1, vec![*key])
            }
            FiberTypeUp | TwdUp => ok(k < ctx.h_limit, vec![*key]),
            NotTwdDown | FiniteDown => ok(k >= 2, vec![*key]),
            NotDefectiveFinite => ok(ctx.abstract_dim(k) <= nn, vec![*key]),
            FiniteProper => ok(ctx.abstract_dim(k) < nn, vec![*key]),
            FiniteDominant => ok(ctx.abstract_dim(k) == nn, vec![*key]),
            NotDefectiveDominant => ok(ctx.abstract_dim(k) >= nn, vec![*key]),
            NotTwdIdentifiable => {
                if ctx.abstract_dim(k) <= nn {
                    Some(vec![*key])
                } else {
                    Some(vec![*key, P::SecProper { h: k }])
                }
            }
            ContactChain => ok(k >= n && k - n >= 1, vec![P::Not1Twd, *key]),
            ContactChainProper => ok(k >= n, vec![P::Not1Twd, *key, P::SecProper { h: k }]),
            TwdDefectChain => ok(k > 2 * n, vec![P::Not1Twd, *key]),
            TwdDefectChainProper => ok(k >= 2 * n, vec![P::Not1Twd, *key, P::SecProper { h: k }]),
            IdentifiableFromNextNonDefect => {
                // key is NotDefective(h+1)
                if k < 3 {
                    return None;
                }
                let h = k - 1;
                ok(h > n && nn >= ctx.abstract_dim(h + 1), vec![P::NotTwd { h: h - 1 }, *key])
            }
            TwdStep => {
                // key is GenericallyFinite(k+1)
                if k < 3 {
                    return None;
                }
                let j = k - 1;
                ok(j > n && nn >= ctx.abstract_dim(j + 1), vec![P::NotTwd { h: j - 1 }, *key])
            }
            ContactGrowth => {
                let P::ContactDimAtLeast { h, .. } = *key else { return None };
                ok(h < ctx.h_limit, vec![*key, P::Not1Twd, P::GenericallyFinite { h: h + 1 }])
            }
        }
    }

    /// Conclusion from a complete premise list; `None` unless `premises` is
    /// exactly what the rule requires.
    pub fn fire(&self, ctx: &RuleCtx, premises: &[Predicate]) -> Option<Predicate> {
        let key = premises.iter().find(|p| self.is_key(p))?;
        let expected = self.premises(ctx, key)?;
        if expected != premises {
            return None;
        }
        let k = key.h().unwrap_or(1);
        let n = ctx.n;
        Some(match self {
            DefectiveFiberType => P::FiberType { h: k },
            FiberTypeNotIdentifiable => P::NotIdentifiable { h: k },
            FiberTypeUp => P::FiberType { h: k + 1 },
            TwdUp => P::Twd { h: k + 1 },
            NotTwdDown => P::NotTwd { h: k - 1 },
            Not1TwdAtOne => P::NotTwd { h: 1 },
            NotTwdAtOne => P::Not1Twd,
            FiniteDown => P::GenericallyFinite { h: k - 1 },
            NotDefectiveFinite => P::GenericallyFinite { h: k },
            FiniteProper => P::SecProper { h: k },
            FiniteDominant | NotDefectiveDominant => P::Dominant { h: k },
            TwdContact => P::ContactDimAtLeast { h: k, g: 1 },
            NotTwdIdentifiable => P::Identifiable { h: k },
            ContactChain => P::NotTwd { h: k - n },
            ContactChainProper => P::NotTwd { h: k - n + 1 },
            TwdDefectChain | TwdDefectChainProper => P::NotTwd { h: k - 1 },
            IdentifiableFromNextNonDefect => P::Identifiable { h: k - 1 },
            TwdStep => P::NotTwd { h: k - 1 },
            ContactGrowth => {
                let P::ContactDimAtLeast { h, g } = *key else { return None };
                P::ContactDimAtLeast { h: h + 1, g: g + 1 }
            }
        })
    }

    /// Keys whose premise lists may contain the non-key fact `p`.
    fn trigger(&self, p: &Predicate) -> Trigger {
        let none = Trigger::Keys(Vec::new());
        match (self, *p) {
            (NotTwdIdentifiable, P::SecProper { h }) => Trigger::Keys(vec![P::NotTwd { h }]),
            (ContactChain | TwdDefectChain | ContactChainProper | TwdDefectChainProper, P::Not1Twd) => Trigger::ScanKeys,
            (ContactChainProper | TwdDefectChainProper, P::SecProper { h }) => {
                Trigger::Keys(vec![P::GenericallyFinite { h }])
            }
            (IdentifiableFromNextNonDefect, P::NotTwd { h }) => Trigger::Keys(vec![P::NotDefective { h: h + 2 }]),
            (TwdStep, P::NotTwd { h }) => Trigger::Keys(vec![P::GenericallyFinite { h: h + 2 }]),
            (ContactGrowth, P::Not1Twd) => Trigger::ScanKeys,
            (ContactGrowth, P::GenericallyFinite { h }) if h >= 2 => Trigger::ScanKeys,
            _ => none,
        }
    }

    fn key_template(&self) -> Predicate {
        match self {
            DefectiveFiberType => P::Defective { h: 1 },
            FiberTypeNotIdentifiable | FiberTypeUp => P::FiberType { h: 1 },
            TwdUp | TwdContact => P::Twd { h: 1 },
            NotTwdDown | NotTwdAtOne | NotTwdIdentifiable => P::NotTwd { h: 1 },
            Not1TwdAtOne => P::Not1Twd,
            NotDefectiveFinite | NotDefectiveDominant | IdentifiableFromNextNonDefect => P::NotDefective { h: 1 },
            ContactGrowth => P::ContactDimAtLeast { h: 1, g: 1 },
            _ => P::GenericallyFinite { h: 1 },
        }
    }

    /// Key facts present in `base` that `p` may complete.
    fn candidate_keys(&self, base: &FactBase, p: &Predicate) -> Vec<Predicate> {
        if self.is_key(p) {
            return vec![*p];
        }
        match self.trigger(p) {
            Trigger::Keys(v) => v.into_iter().filter(|k| base.contains(k)).collect(),
            Trigger::ScanKeys => base.of_variant(&self.key_template()).map(|f| f.predicate).collect(),
        }
    }
}

impl Serialize for RuleId {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

/// Runs every rule to a fixed point. Returns the ids of the new facts in
/// the order they were derived.
pub fn derive(base: &mut FactBase) -> Result<Vec<usize>, InferenceError> {
    let ctx = *base.ctx();
    let start = base.len();
    // seed in canonical order so the result does not depend on insertion order
    let mut agenda: VecDeque<Predicate> = base.predicates().copied().collect();
    while let Some(p) = agenda.pop_front() {
        for rule in ALL_RULES {
            for key in rule.candidate_keys(base, &p) {
                let Some(prem) = rule.premises(&ctx, &key) else { continue };
                if !prem.iter().all(|q| base.contains(q)) {
                    continue;
                }
                let Some(concl) = rule.fire(&ctx, &prem) else { continue };
                if concl.h().is_some_and(|h| h > ctx.h_limit) || base.contains(&concl) {
                    continue;
                }
                let ids = ids_of(base, &prem);
                match base.assert_fact(concl, Provenance::Rule { rule, premises: ids }) {
                    Ok(_) => agenda.push_back(concl),
                    Err(InferenceError::Contradiction { existing, incoming }) => {
                        let first = base.certificate(existing.id);
                        let second = base.certificate_for_candidate(&incoming);
                        return Err(InferenceError::DerivedContradiction {
                            first: Box::new(first),
                            second: Box::new(second),
                        });
                    }
                    Err(InferenceError::Absurd(reason)) => {
                        let incoming = super::facts::Fact {
                            id: base.len(),
                            predicate: concl,
                            provenance: Provenance::Rule { rule, premises: ids_of(base, &prem) },
                        };
                        return Err(InferenceError::DerivedAbsurd {
                            reason,
                            certificate: Box::new(base.certificate_for_candidate(&incoming)),
                        });
                    }
                    Err(e) => return Err(e),
                }
            }
        }
    }
    Ok((start..base.len()).collect())
}

fn ids_of(base: &FactBase, prem: &[Predicate]) -> Vec<usize> {
    prem.iter().map(|q| base.lookup(q).expect("premise present").id).collect()
}
