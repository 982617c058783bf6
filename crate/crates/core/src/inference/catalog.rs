//! Literature facts matched against a variety through arithmetic patterns.

use std::collections::BTreeSet;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::expr::{is_builtin, Env, Expr, ExprError, Vars};
use super::facts::{Predicate, Provenance};
use super::InferenceError;
use crate::geometry::{is_special, rank_stats, sv12_r, VarietyModel, VarietySpec};

/// The shipped knowledge base.
pub const DEFAULT_KNOWLEDGE_BASE: &str = include_str!("../../data/knowledge_base.json");

/// A fact template over an `h` range.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EntryFact {
    pub predicate: String,
    /// first `h`, default `1`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub from: Option<String>,
    /// last `h`, default equal to `from`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub to: Option<String>,
    /// per-`h` filter; the variable `h` is bound
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub when: Option<String>,
    /// lower bound `g` for `contact_dim_at_least`
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeEntry {
    pub id: String,
    pub citation: String,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub summary: String,
    /// pattern over the variety, see [`pattern_variables`]
    #[serde(rename = "where")]
    pub pattern: String,
    pub facts: Vec<EntryFact>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KnowledgeBase {
    pub version: u32,
    pub entries: Vec<KnowledgeEntry>,
}

/// Variables bound when evaluating patterns. Every variable is defined for
/// every variety; those that do not apply are 0.
pub const PATTERN_VARIABLES: [&str; 33] = [
    "product", "grassmann", "gaussian", "n", "N", "gr", "s", "perfect", "linear", "r", "nmin", "nmax", "nsum", "dsum",
    "dmin", "dmax", "n1", "n2", "d1", "d2", "segre", "diag", "delta", "alpha", "xkn_k", "xkn_n", "sv12_r", "bcc_s",
    "gk", "gn", "gd", "h_limit", "h",
];

/// Variety-dependent functions available to patterns.
pub const PATTERN_FUNCTIONS: [&str; 2] = ["special_at", "ah_exception"];

struct SpecEnv<'a> {
    vars: Vars,
    spec: &'a VarietySpec,
}

impl Env for SpecEnv<'_> {
    fn var(&self, name: &str) -> Option<BigRational> {
        self.vars.var(name)
    }

    fn call(&self, name: &str, args: &[BigRational]) -> Option<Result<BigRational, ExprError>> {
        let h = || -> Result<u64, ExprError> {
            if args.len() != 1 {
                return Err(ExprError::Domain(format!("{name} takes 1 argument")));
            }
            args[0].to_integer().to_u64().ok_or_else(|| ExprError::Domain(format!("{name} needs h >= 0")))
        };
        let truth = |b: bool| Ok(BigRational::from_integer(BigInt::from(b as u8)));
        match name {
            "special_at" => Some(h().and_then(|h| {
                let degrees: Vec<u32> = self.spec.factors().unwrap_or_default().iter().map(|f| f.degree).collect();
                // the list is stated for products of P^1
                let binary = self.spec.factors().is_some_and(|f| f.iter().all(|x| x.dim == 1));
                truth(binary && is_special(&degrees, h))
            })),
            "ah_exception" => Some(h().and_then(|h| truth(ah_exception(self.spec, h)))),
            _ => None,
        }
    }
}

/// Defective cases of the Veronese varieties `(d; n; h)`.
fn ah_exception(spec: &VarietySpec, h: u64) -> bool {
    let (d, n) = match spec.factors().as_deref() {
        Some([f]) => (f.degree, f.dim as u64),
        _ => return false,
    };
    match d {
        2 => 2 <= h && h <= n,
        3 => (n, h) == (4, 7),
        4 => matches!((n, h), (2, 5) | (3, 9) | (4, 14)),
        _ => false,
    }
}

/// `Some((k, n))` when the Segre variety is `P^k x (P^n)^{k+1}`.
fn xkn_shape(dims: &[u32]) -> Option<(u32, u32)> {
    let r = dims.len() as u32;
    let distinct: BTreeSet<u32> = dims.iter().copied().collect();
    let count = |v: u32| dims.iter().filter(|&&x| x == v).count() as u32;
    match distinct.len() {
        1 => {
            let n = dims[0];
            (r == n + 2).then_some((n, n))
        }
        2 => {
            let mut it = distinct.iter().copied();
            let (a, b) = (it.next()?, it.next()?);
            [(a, b), (b, a)].into_iter().find(|&(k, n)| count(k) == 1 && count(n) == k + 1 && r == k + 2)
        }
        _ => None,
    }
}

/// Binds [`PATTERN_VARIABLES`] (except `h`) for `spec`.
pub fn pattern_variables(spec: &VarietySpec, h_limit: u64) -> Result<Vars, InferenceError> {
    let model = VarietyModel::new(spec.clone())?;
    let stats = rank_stats(spec)?;
    let mut v = Vars::new();
    let mut set = |k: &str, x: BigInt| {
        v.insert(k.to_string(), BigRational::from_integer(x));
    };
    for k in PATTERN_VARIABLES {
        set(k, BigInt::zero());
    }
    let b = |x: bool| BigInt::from(x as u8);
    set("n", model.n.into());
    set("N", model.ambient.into());
    set("gr", stats.gr.into());
    set("s", stats.s.into());
    set("perfect", b(stats.perfect));
    set("linear", b(model.ambient == model.n as u64));
    set("h_limit", h_limit.into());
    match spec {
        VarietySpec::Grassmann { k, n } => {
            set("grassmann", 1.into());
            set("gk", (*k).into());
            set("gn", (*n).into());
        }
        VarietySpec::GaussianMoments { d } => {
            set("gaussian", 1.into());
            set("gd", (*d).into());
        }
        _ => {
            let f = spec.factors().expect("product family");
            let dims: Vec<u32> = f.iter().map(|x| x.dim).collect();
            let degs: Vec<u32> = f.iter().map(|x| x.degree).collect();
            set("product", 1.into());
            set("r", f.len().into());
            set("nmin", (*dims.iter().min().unwrap()).into());
            set("nmax", (*dims.iter().max().unwrap()).into());
            set("nsum", dims.iter().map(|&x| x as u64).sum::<u64>().into());
            set("dsum", degs.iter().map(|&x| x as u64).sum::<u64>().into());
            set("dmin", (*degs.iter().min().unwrap()).into());
            set("dmax", (*degs.iter().max().unwrap()).into());
            set("n1", dims[0].into());
            set("d1", degs[0].into());
            if f.len() >= 2 {
                set("n2", dims[1].into());
                set("d2", degs[1].into());
            }
            let segre = spec.is_segre();
            set("segre", b(segre));
            let diag = dims.iter().all(|&x| x == dims[0]);
            set("diag", b(diag));
            if let Some(d) = stats.delta {
                set("delta", d.into());
            }
            set("alpha", (31 - (dims[0] + 1).leading_zeros()).into());
            if segre {
                if let Some((k, n)) = xkn_shape(&dims) {
                    set("xkn_k", k.into());
                    set("xkn_n", n.into());
                }
            }
            if f.len() == 2 {
                if degs == [1, 2] {
                    set("sv12_r", sv12_r(dims[0] as u64, dims[1] as u64));
                }
                let m1 = dims[0] as u64 + 1;
                set("bcc_s", (stats.s - stats.s % m1).into());
            }
        }
    }
    Ok(v)
}

impl KnowledgeBase {
    pub fn builtin() -> Self {
        Self::from_json(DEFAULT_KNOWLEDGE_BASE).expect("shipped knowledge base is valid")
    }

    /// Parses and validates: every expression must parse and use only known
    /// variables, functions and predicate names.
    pub fn from_json(src: &str) -> Result<Self, InferenceError> {
        let kb: KnowledgeBase =
            serde_json::from_str(src).map_err(|e| InferenceError::KnowledgeBase(format!("schema error: {e}")))?;
        kb.validate()?;
        Ok(kb)
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let err = |id: &str, msg: String| InferenceError::KnowledgeBase(format!("entry `{id}`: {msg}"));
        if self.version != 1 {
            return Err(InferenceError::KnowledgeBase(format!("unsupported version {}", self.version)));
        }
        let mut ids = BTreeSet::new();
        for e in &self.entries {
            if !ids.insert(e.id.as_str()) {
                return Err(err(&e.id, "duplicate id".into()));
            }
            if e.citation.trim().is_empty() {
                return Err(err(&e.id, "missing citation".into()));
            }
            if e.facts.is_empty() {
                return Err(err(&e.id, "no facts".into()));
            }
            let mut exprs = vec![e.pattern.as_str()];
            for f in &e.facts {
                if Predicate::from_name(&f.predicate, 1, 0).is_none() {
                    return Err(err(&e.id, format!("unknown predicate `{}`", f.predicate)));
                }
                exprs.extend([&f.from, &f.to, &f.when, &f.g].into_iter().flatten().map(String::as_str));
            }
            for src in exprs {
                let x = Expr::parse(src).map_err(|x| err(&e.id, x.to_string()))?;
                let (mut vars, mut funcs) = (Vec::new(), Vec::new());
                x.variables(&mut vars);
                x.functions(&mut funcs);
                if let Some(v) = vars.iter().find(|v| !PATTERN_VARIABLES.contains(&v.as_str())) {
                    return Err(err(&e.id, format!("unknown variable `{v}` in `{src}`")));
                }
                if let Some(f) = funcs.iter().find(|f| !is_builtin(f) && !PATTERN_FUNCTIONS.contains(&f.as_str())) {
                    return Err(err(&e.id, format!("unknown function `{f}` in `{src}`")));
                }
            }
        }
        Ok(())
    }

    /// Entries whose pattern holds for `spec`.
    pub fn matching(&self, spec: &VarietySpec, h_limit: u64) -> Result<Vec<&KnowledgeEntry>, InferenceError> {
        let env = SpecEnv { vars: pattern_variables(spec, h_limit)?, spec };
        let mut out = Vec::new();
        for e in &self.entries {
            if eval_bool(&e.pattern, &env, &e.id)? {
                out.push(e);
            }
        }
        Ok(out)
    }

    /// Instantiates every matching entry for `h` in `1..=h_limit`.
    pub fn facts_for(&self, spec: &VarietySpec, h_limit: u64) -> Result<Vec<(Predicate, Provenance)>, InferenceError> {
        let mut env = SpecEnv { vars: pattern_variables(spec, h_limit)?, spec };
        let mut out = Vec::new();
        for e in self.matching(spec, h_limit)? {
            for f in &e.facts {
                let prov = Provenance::literature(&e.citation, &e.id);
                if f.predicate == "not_1_twd" {
                    out.push((Predicate::Not1Twd, prov));
                    continue;
                }
                let from = match &f.from {
                    Some(x) => eval_int(x, &env, &e.id)?,
                    None => BigInt::from(1),
                };
                let to = match &f.to {
                    Some(x) => eval_int(x, &env, &e.id)?,
                    None => from.clone(),
                };
                let lo = from.max(BigInt::from(1));
                let hi = to.min(BigInt::from(h_limit));
                let (Some(lo), Some(hi)) = (lo.to_u64(), hi.to_u64()) else { continue };
                for h in lo..=hi {
                    env.vars.insert("h".into(), BigRational::from_integer(h.into()));
                    if let Some(w) = &f.when {
                        if !eval_bool(w, &env, &e.id)? {
                            continue;
                        }
                    }
                    let g = match &f.g {
                        Some(x) => eval_int(x, &env, &e.id)?.to_u64().unwrap_or(0),
                        None => 0,
                    };
                    let p = Predicate::from_name(&f.predicate, h, g).expect("validated predicate");
                    out.push((p, prov.clone()));
                }
                env.vars.insert("h".into(), BigRational::zero());
            }
        }
        Ok(out)
    }
}

fn eval_bool(src: &str, env: &SpecEnv, id: &str) -> Result<bool, InferenceError> {
    Expr::parse(src)
        .and_then(|x| x.eval_bool(env))
        .map_err(|e| InferenceError::KnowledgeBase(format!("entry `{id}`: {e}")))
}

fn eval_int(src: &str, env: &SpecEnv, id: &str) -> Result<BigInt, InferenceError> {
    Expr::parse(src)
        .and_then(|x| x.eval(env))
        .map(|v| v.floor().to_integer())
        .map_err(|e| InferenceError::KnowledgeBase(format!("entry `{id}`: {e}")))
}

/// Facts from the shipped knowledge base.
pub fn catalog_facts(spec: &VarietySpec, h_limit: u64) -> Result<Vec<(Predicate, Provenance)>, InferenceError> {
    KnowledgeBase::builtin().facts_for(spec, h_limit)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(s: &str) -> VarietySpec {
        s.parse().unwrap()
    }

    fn preds(s: &str, limit: u64) -> Vec<Predicate> {
        catalog_facts(&spec(s), limit).unwrap().into_iter().map(|(p, _)| p).collect()
    }

    #[test]
    fn shipped_base_validates() {
        let kb = KnowledgeBase::builtin();
        assert!(kb.entries.len() >= 10);
        assert!(kb.entries.iter().all(|e| !e.citation.is_empty()));
    }

    #[test]
    fn binary_segre_is_never_defective() {
        let p = preds("segre:1,1,1,1,1,1,1", 100);
        for h in 1..=16 {
            assert!(p.contains(&Predicate::NotDefective { h }), "h={h}");
        }
        assert!(p.contains(&Predicate::Not1Twd));
        // the exception at four factors
        let p = preds("segre:1,1,1,1", 100);
        assert!(p.contains(&Predicate::Defective { h: 3 }));
        assert!(!p.contains(&Predicate::NotDefective { h: 3 }));
        assert!(p.contains(&Predicate::NotDefective { h: 4 }));
    }

    #[test]
    fn gaussian_moments_not_1_twd() {
        let facts = catalog_facts(&spec("gm:d=14"), 10).unwrap();
        let (_, prov) = facts.iter().find(|(p, _)| *p == Predicate::Not1Twd).unwrap();
        let Provenance::Literature { citation, .. } = prov else { panic!() };
        assert!(citation.contains("BBC"));
    }

    #[test]
    fn linear_spaces_are_not_claimed_smooth_non_degenerate() {
        assert!(!preds("veronese:d=1,n=3", 10).contains(&Predicate::Not1Twd));
        assert!(!preds("grass:k=0,n=4", 10).contains(&Predicate::Not1Twd));
        assert!(preds("grass:k=1,n=4", 10).contains(&Predicate::Not1Twd));
    }

    #[test]
    fn ranges_are_clipped_to_the_window() {
        let p = preds("grass:k=4,n=250", 3000);
        assert!(p.contains(&Predicate::NotDefective { h: 2520 }));
        assert!(!p.contains(&Predicate::NotDefective { h: 2521 }));
        let p = preds("grass:k=4,n=250", 100);
        assert!(p.iter().all(|q| q.h().unwrap_or(1) <= 100));
    }

    #[test]
    fn veronese_exceptions() {
        let p = preds("veronese:d=2,n=2", 10);
        assert!(p.contains(&Predicate::Defective { h: 2 }));
        assert!(p.contains(&Predicate::NotDefective { h: 1 }));
        let p = preds("veronese:d=4,n=2", 10);
        assert!(p.contains(&Predicate::Defective { h: 5 }));
        assert!(p.contains(&Predicate::NotDefective { h: 4 }));
    }

    #[test]
    fn xkn_detection() {
        assert_eq!(xkn_shape(&[2, 3, 3, 3]), Some((2, 3)));
        assert_eq!(xkn_shape(&[3, 3, 2, 3]), Some((2, 3)));
        assert_eq!(xkn_shape(&[1, 1, 1]), Some((1, 1)));
        assert_eq!(xkn_shape(&[2, 3, 3]), None);
    }

    #[test]
    fn variables_cover_the_families() {
        let v = pattern_variables(&spec("sv:d=1,2;n=4,57"), 10).unwrap();
        assert_eq!(v["sv12_r"], BigRational::from_integer(56.into()));
        let v = pattern_variables(&spec("segre:2,2,2,2,2"), 10).unwrap();
        assert_eq!(v["delta"], BigRational::from_integer(1.into()));
        assert_eq!(v["alpha"], BigRational::from_integer(1.into()));
        assert_eq!(v["s"], BigRational::from_integer(22.into()));
    }

    #[test]
    fn corrupt_bases_are_rejected() {
        for bad in [
            "{",
            r#"{"version": 1}"#,
            r#"{"version": 2, "entries": []}"#,
            r#"{"version": 1, "entries": [{"id": "a", "citation": "c", "where": "n >", "facts": [{"predicate": "twd"}]}]}"#,
            r#"{"version": 1, "entries": [{"id": "a", "citation": "c", "where": "q", "facts": [{"predicate": "twd"}]}]}"#,
            r#"{"version": 1, "entries": [{"id": "a", "citation": "c", "where": "1", "facts": [{"predicate": "odd"}]}]}"#,
            r#"{"version": 1, "entries": [{"id": "a", "citation": "c", "where": "1", "facts": [{"predicate": "twd"}], "x": 1}]}"#,
        ] {
            assert!(KnowledgeBase::from_json(bad).is_err(), "{bad}");
        }
    }
}
