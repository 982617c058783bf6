use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::Serialize;

use super::catalog::KnowledgeBase;
use super::facts::{Fact, FactBase, Predicate, Provenance, RuleCtx};
use super::rules::derive;
use super::{Certificate, InferenceError};
use crate::bound::FailureBound;
use crate::exactla::{PrimeField, Rationals};
use crate::geometry::{closed_form_bound, rank_stats, BoundRecord, RankStats, VarietyModel, VarietySpec};
use crate::secantprobe::{secant_profile, terracini_dimension, ProbeConfig, ProbeError, SecantReport, DEFAULT_CAP};
use crate::twdprobe::{certify_not_twd, TwdReport};

/// Largest `h` the engine instantiates facts for.
pub const DEFAULT_H_WINDOW: u64 = 4096;

/// Reports list every fact and certificate up to these sizes.
const FACT_LISTING_LIMIT: usize = 2000;
const CERTIFICATE_LISTING_LIMIT: usize = 32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ProbeOnly,
    CatalogOnly,
    Hybrid,
}

impl Mode {
    fn probes(self) -> bool {
        self != Mode::CatalogOnly
    }

    fn catalog(self) -> bool {
        self != Mode::ProbeOnly
    }
}

impl FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "probe-only" => Ok(Mode::ProbeOnly),
            "catalog-only" => Ok(Mode::CatalogOnly),
            "hybrid" => Ok(Mode::Hybrid),
            _ => Err(format!("unknown mode `{s}` (expected probe-only, catalog-only or hybrid)")),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::ProbeOnly => "probe-only",
            Mode::CatalogOnly => "catalog-only",
            Mode::Hybrid => "hybrid",
        })
    }
}

/// What to do with a rank drop seen in every prime-field trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Promotion {
    /// keep it as ObservedDefective
    #[default]
    Never,
    /// assert Defective when an exact rational rerun also drops rank
    RationalConfirm,
    /// assert Defective directly
    Always,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Budget {
    /// matrix-entry cap per probe, see [`ProbeConfig::cap`]
    pub cap: u64,
    /// facts are instantiated for `h <= min(gr + 1, h_window)`
    pub h_window: u64,
    /// probes run only for `h <= probe_h_max`
    pub probe_h_max: Option<u64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { cap: DEFAULT_CAP, h_window: DEFAULT_H_WINDOW, probe_h_max: None }
    }
}

#[derive(Debug, Clone)]
pub struct RangeOptions {
    pub mode: Mode,
    pub budget: Budget,
    pub trials: usize,
    pub seed: u64,
    pub promotion: Promotion,
    pub field: PrimeField,
    /// `None` uses the shipped knowledge base
    pub knowledge_base: Option<KnowledgeBase>,
}

impl Default for RangeOptions {
    fn default() -> Self {
        Self {
            mode: Mode::Hybrid,
            budget: Budget::default(),
            trials: 3,
            seed: 0,
            promotion: Promotion::Never,
            field: PrimeField::default(),
            knowledge_base: None,
        }
    }
}

impl RangeOptions {
    pub fn new(mode: Mode) -> Self {
        Self { mode, ..Self::default() }
    }

    /// Seeds for the secant profile: trial `t` uses `seed + t` for every `h`,
    /// so the points of smaller configurations are shared.
    pub fn secant_config(&self) -> ProbeConfig {
        ProbeConfig { trials: self.trials, seed: self.seed, cap: self.budget.cap }
    }

    /// Seeds for the twd probe at `h`: `seed + 1000 h + t`.
    pub fn twd_config(&self, h: u64) -> ProbeConfig {
        ProbeConfig { trials: self.trials, seed: self.seed.wrapping_add(1000u64.wrapping_mul(h)), cap: self.budget.cap }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecantEntry {
    pub id: String,
    pub report: SecantReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rational_confirmation: Option<SecantReport>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum TwdOutcome {
    Report(TwdReport),
    Inapplicable { reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TwdEntry {
    pub id: String,
    pub h: u64,
    #[serde(flatten)]
    pub outcome: TwdOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct RangeReport {
    pub spec: String,
    pub mode: Mode,
    pub n: u64,
    #[serde(rename = "N")]
    pub ambient: u64,
    pub stats: RankStats,
    pub h_limit: u64,
    /// largest `h` with Identifiable(1..=h) all derived; 0 when none
    pub h_ident_max: u64,
    pub identifiable: Vec<u64>,
    pub not_identifiable: Vec<u64>,
    pub closed_form_claim: Option<BoundRecord>,
    /// `h_ident_max >= closed_form_claim.h_max` when the claim exists
    pub agreement: Option<bool>,
    pub complete: bool,
    pub incomplete_reasons: Vec<String>,
    pub secant: Vec<SecantEntry>,
    pub twd: Vec<TwdEntry>,
    pub fact_count: usize,
    pub facts: Vec<Fact>,
    pub facts_truncated: bool,
    pub certificates: Vec<Certificate>,
    pub certificates_truncated: bool,
    /// union bound over the probe facts the certificates rely on
    pub total_failure_bound: FailureBound,
}

/// Dimension-count facts for `h = 1..=h_limit`.
pub fn formula_facts(ctx: &RuleCtx) -> Vec<(Predicate, Provenance)> {
    let mut out = Vec::new();
    for h in 1..=ctx.h_limit {
        let a = ctx.abstract_dim(h);
        if a < ctx.ambient_dim() {
            out.push((Predicate::SecProper { h }, Provenance::formula("abstract secant below ambient")));
        } else if a > ctx.ambient_dim() {
            out.push((Predicate::FiberType { h }, Provenance::formula("abstract secant exceeds ambient")));
        }
    }
    out
}

/// Facts read off probe reports.
pub fn probe_facts(secant: &[SecantEntry], twd: &[TwdEntry], promotion: Promotion) -> Vec<(Predicate, Provenance)> {
    let mut out = Vec::new();
    for e in secant {
        let r = &e.report;
        let h = r.h;
        let prov = || Provenance::probe(&e.id, r.failure_bound.clone());
        if r.dim_computed == r.dim_abstract {
            out.push((Predicate::GenericallyFinite { h }, prov()));
        }
        if r.dim_computed == r.dim_expected {
            out.push((Predicate::NotDefective { h }, prov()));
            continue;
        }
        out.push((Predicate::ObservedDefective { h }, prov()));
        match (promotion, &e.rational_confirmation) {
            (Promotion::Always, _) => out.push((Predicate::Defective { h }, prov())),
            (Promotion::RationalConfirm, Some(q)) if q.dim_computed < q.dim_expected => out.push((
                Predicate::Defective { h },
                Provenance::probe(format!("{}/rational", e.id), r.failure_bound.clone().min(q.failure_bound.clone())),
            )),
            _ => {}
        }
    }
    for e in twd {
        if let TwdOutcome::Report(r) = &e.outcome {
            if r.certified_not_twd {
                out.push((Predicate::NotTwd { h: e.h }, Provenance::probe(&e.id, r.failure_bound.clone())));
            }
        }
    }
    out
}

struct Probed {
    secant: Vec<SecantEntry>,
    twd: Vec<TwdEntry>,
    reasons: Vec<String>,
}

fn run_probes(model: &VarietyModel, h_limit: u64, opts: &RangeOptions) -> Result<Probed, InferenceError> {
    let field = &opts.field;
    let mut reasons = Vec::new();
    let mut h_max = h_limit;
    if let Some(p) = opts.budget.probe_h_max.filter(|&p| p < h_limit) {
        reasons.push(format!("probes limited to h<={p} by request"));
        h_max = p;
    }
    let per_point = model.param_arity as u128 * model.coords() as u128;
    let within_cap = (opts.budget.cap as u128 / per_point) as u64;
    if within_cap < h_max {
        reasons.push(format!(
            "probes stop at h={within_cap}: h={} needs {} matrix entries, cap is {}",
            within_cap + 1,
            (within_cap as u128 + 1) * per_point,
            opts.budget.cap
        ));
        h_max = within_cap;
    }
    let mut out = Probed { secant: Vec::new(), twd: Vec::new(), reasons };
    if h_max == 0 {
        return Ok(out);
    }
    let scfg = opts.secant_config();
    for r in secant_profile(model, field, h_max, &scfg)? {
        let id = format!("secant/h={}", r.h);
        let rational_confirmation = if opts.promotion == Promotion::RationalConfirm && r.defect > 0 {
            Some(terracini_dimension(model, &Rationals::default(), r.h, &scfg)?)
        } else {
            None
        };
        out.secant.push(SecantEntry { id, report: r, rational_confirmation });
    }
    for h in 1..=h_max {
        let fills = out.secant[h as usize - 1].report.fills_ambient;
        let id = format!("twd/h={h}");
        if fills {
            // Sec_h = P^N leaves no tangent hyperplanes to work with
            out.twd.push(TwdEntry {
                id,
                h,
                outcome: TwdOutcome::Inapplicable { reason: format!("Sec_{h} fills the ambient space") },
            });
            continue;
        }
        match certify_not_twd(model, field, h, &opts.twd_config(h)) {
            Ok(r) => out.twd.push(TwdEntry { id, h, outcome: TwdOutcome::Report(r) }),
            Err(ProbeError::Inapplicable(reason)) => {
                out.twd.push(TwdEntry { id, h, outcome: TwdOutcome::Inapplicable { reason } })
            }
            Err(ProbeError::Capacity { needed, cap }) => {
                out.reasons.push(format!("twd probe stops at h={h}: needs {needed} matrix entries, cap is {cap}"));
                break;
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(out)
}

fn spec_ctx(spec: &VarietySpec, stats: &RankStats, window: u64) -> Result<(VarietyModel, RuleCtx), InferenceError> {
    let model = VarietyModel::new(spec.clone())?;
    let h_limit = (stats.gr + 1).min(window.max(1));
    Ok((model.clone(), RuleCtx::new(model.n as u64, model.ambient, h_limit)))
}

/// Probes (in the probe modes), merges the catalog (in the catalog modes),
/// closes under the rules and reports the identifiable range.
pub fn identifiability_range(spec: &VarietySpec, opts: &RangeOptions) -> Result<RangeReport, InferenceError> {
    let stats = rank_stats(spec)?;
    let (model, ctx) = spec_ctx(spec, &stats, opts.budget.h_window)?;
    let mut reasons = Vec::new();
    if stats.gr + 1 > ctx.h_limit {
        reasons.push(format!("facts limited to h<={} (generic rank {})", ctx.h_limit, stats.gr));
    }

    let mut base = FactBase::new(ctx);
    for (p, prov) in formula_facts(&ctx) {
        base.assert_fact(p, prov)?;
    }
    let (secant, twd) = if opts.mode.probes() {
        let probed = run_probes(&model, ctx.h_limit, opts)?;
        reasons.extend(probed.reasons);
        (probed.secant, probed.twd)
    } else {
        (Vec::new(), Vec::new())
    };
    for (p, prov) in probe_facts(&secant, &twd, opts.promotion) {
        base.assert_fact(p, prov)?;
    }
    if opts.mode.catalog() {
        let builtin;
        let kb = match &opts.knowledge_base {
            Some(kb) => kb,
            None => {
                builtin = KnowledgeBase::builtin();
                &builtin
            }
        };
        for (p, prov) in kb.facts_for(spec, ctx.h_limit)? {
            base.assert_fact(p, prov)?;
        }
    }
    derive(&mut base)?;

    let collect = |f: fn(&Predicate) -> Option<u64>| base.facts().iter().filter_map(|x| f(&x.predicate)).collect();
    let mut identifiable: Vec<u64> = collect(|p| match p {
        Predicate::Identifiable { h } => Some(*h),
        _ => None,
    });
    let mut not_identifiable: Vec<u64> = collect(|p| match p {
        Predicate::NotIdentifiable { h } => Some(*h),
        _ => None,
    });
    identifiable.sort_unstable();
    not_identifiable.sort_unstable();
    let h_ident_max = identifiable.iter().enumerate().take_while(|&(i, &h)| h == i as u64 + 1).count() as u64;

    let goals: Vec<usize> = base
        .facts()
        .iter()
        .filter(|f| matches!(f.predicate, Predicate::Identifiable { .. } | Predicate::NotIdentifiable { .. }))
        .map(|f| f.id)
        .collect();
    let total_failure_bound = ancestors(&base, &goals)
        .into_iter()
        .filter_map(|id| match &base.get(id).unwrap().provenance {
            Provenance::Probe { failure_bound, .. } => Some(failure_bound.clone()),
            _ => None,
        })
        .sum();

    let mut cert_goals: Vec<Predicate> =
        goals.iter().map(|&id| base.get(id).unwrap().predicate).collect::<BTreeSet<_>>().into_iter().collect();
    let certificates_truncated = cert_goals.len() > CERTIFICATE_LISTING_LIMIT;
    if certificates_truncated {
        // the boundary of the identifiable range
        let first_not = not_identifiable.iter().copied().find(|&h| h > h_ident_max);
        cert_goals.retain(|p| {
            *p == Predicate::Identifiable { h: h_ident_max }
                || first_not.is_some_and(|h| *p == Predicate::NotIdentifiable { h })
        });
    }
    let certificates = cert_goals.iter().map(|p| base.certificate(base.lookup(p).unwrap().id)).collect();

    let closed_form_claim = closed_form_bound(spec).ok();
    let agreement = closed_form_claim.as_ref().and_then(|c| c.h_max).map(|c| h_ident_max >= c);
    let fact_count = base.len();
    let facts_truncated = fact_count > FACT_LISTING_LIMIT;
    let facts = if facts_truncated { Vec::new() } else { base.facts().to_vec() };

    Ok(RangeReport {
        spec: spec.to_string(),
        mode: opts.mode,
        n: ctx.n,
        ambient: ctx.ambient,
        stats,
        h_limit: ctx.h_limit,
        h_ident_max,
        identifiable,
        not_identifiable,
        closed_form_claim,
        agreement,
        complete: reasons.is_empty(),
        incomplete_reasons: reasons,
        secant,
        twd,
        fact_count,
        facts,
        facts_truncated,
        certificates,
        certificates_truncated,
        total_failure_bound,
    })
}

fn ancestors(base: &FactBase, roots: &[usize]) -> BTreeSet<usize> {
    let mut seen = BTreeSet::new();
    let mut stack = roots.to_vec();
    while let Some(id) = stack.pop() {
        if !seen.insert(id) {
            continue;
        }
        if let Provenance::Rule { premises, .. } = &base.get(id).unwrap().provenance {
            stack.extend(premises.iter().copied());
        }
    }
    seen
}
