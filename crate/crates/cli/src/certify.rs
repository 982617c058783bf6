use std::io::Write;
use std::path::PathBuf;

use identcert_core::exactla::{PrimeField, DEFAULT_MODULUS};
use identcert_core::geometry::VarietySpec;
use identcert_core::inference::{identifiability_range, Budget, Mode, Promotion, RangeOptions, RangeReport};
use serde_json::{json, Map, Value};

use crate::doc::{entries, render, with_provenance};
use crate::{check_common, emit, exit, load_kb, parse_spec, Common, Failure, PromoteArg};

#[derive(Debug, Clone)]
pub(crate) struct CertifyArgs {
    pub spec: String,
    pub mode: Mode,
    pub h: Option<u64>,
    pub promote: PromoteArg,
    pub window: u64,
    pub modulus: Option<u64>,
    pub kb: Option<PathBuf>,
    pub common: Common,
}

pub(crate) fn promotion(p: PromoteArg) -> Promotion {
    match p {
        PromoteArg::Never => Promotion::Never,
        PromoteArg::RationalConfirm => Promotion::RationalConfirm,
        PromoteArg::Always => Promotion::Always,
    }
}

pub(crate) fn options(args: &CertifyArgs) -> Result<RangeOptions, Failure> {
    check_common(&args.common)?;
    if args.window == 0 {
        return Err(Failure::usage("--window must be >= 1"));
    }
    if args.h == Some(0) {
        return Err(Failure::usage("--h must be >= 1"));
    }
    let field = PrimeField::new(args.modulus.unwrap_or(DEFAULT_MODULUS)).map_err(|e| Failure::usage(e.to_string()))?;
    Ok(RangeOptions {
        mode: args.mode,
        budget: Budget { cap: args.common.cap, h_window: args.window, probe_h_max: args.h },
        trials: args.common.trials,
        seed: args.common.seed,
        promotion: promotion(args.promote),
        field,
        knowledge_base: load_kb(args.kb.as_deref())?,
    })
}

pub(crate) fn run(args: &CertifyArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let spec = parse_spec(&args.spec)?;
    let opts = options(args)?;
    let report = identifiability_range(&spec, &opts)?;
    let doc = document(&spec, args, &opts, &report);
    emit(&render(&doc), args.common.out.as_deref(), out)?;
    Ok(if report.agreement == Some(false) { exit::DISAGREEMENT } else { exit::OK })
}

fn take(m: &mut Map<String, Value>, keys: &[&str]) -> Value {
    Value::Object(keys.iter().filter_map(|k| m.remove(*k).map(|v| (k.to_string(), v))).collect())
}

fn array(m: &mut Map<String, Value>, key: &str) -> Vec<Value> {
    match m.remove(key) {
        Some(Value::Array(a)) => a,
        _ => Vec::new(),
    }
}

/// The range report split into provenance-tagged sections.
pub fn report_sections(report: &RangeReport) -> Map<String, Value> {
    let Value::Object(mut m) = serde_json::to_value(report).expect("report serializes") else {
        unreachable!("reports are objects")
    };
    let mut doc = Map::new();
    doc.insert("model".into(), with_provenance(take(&mut m, &["spec", "n", "N"]), "formula"));
    doc.insert("stats".into(), with_provenance(m.remove("stats").unwrap_or_default(), "formula"));
    let claim = m.remove("closed_form_claim").unwrap_or_default();
    doc.insert(
        "closed_form_claim".into(),
        if claim.is_null() { Value::Null } else { with_provenance(claim, "formula") },
    );
    doc.insert("secant".into(), entries(array(&mut m, "secant"), "probe"));
    doc.insert("twd".into(), entries(array(&mut m, "twd"), "probe"));
    doc.insert("facts".into(), entries(array(&mut m, "facts"), "rule"));
    let certs = array(&mut m, "certificates")
        .into_iter()
        .map(|c| {
            let kind = c["trace"]
                .as_array()
                .and_then(|t| t.last())
                .and_then(|s| s["provenance"]["kind"].as_str())
                .unwrap_or("rule")
                .to_string();
            with_provenance(c, &kind)
        })
        .collect();
    doc.insert("certificates".into(), Value::Array(certs));
    doc.insert("total_failure_bound".into(), with_provenance(m.remove("total_failure_bound").unwrap_or_default(), "probe"));
    m.remove("mode");
    doc.insert("result".into(), with_provenance(Value::Object(m), "rule"));
    doc
}

pub fn document(spec: &VarietySpec, args: &CertifyArgs, opts: &RangeOptions, report: &RangeReport) -> Value {
    let config = json!({
        "spec": spec.to_string(),
        "mode": opts.mode.to_string(),
        "probe_h_max": opts.budget.probe_h_max,
        "promotion": serde_json::to_value(opts.promotion).expect("promotion serializes"),
        "window": opts.budget.h_window,
        "modulus": opts.field.modulus(),
        "trials": opts.trials,
        "seed": opts.seed,
        "cap": opts.budget.cap,
        "knowledge_base": args.kb.as_ref().map(|p| p.display().to_string()),
    });
    let mut doc = report_sections(report);
    doc.insert("command".into(), "certify".into());
    doc.insert("config".into(), with_provenance(config, "input"));
    Value::Object(doc)
}
