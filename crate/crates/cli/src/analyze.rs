use std::io::Write;

use identcert_core::bound::FailureBound;
use identcert_core::exactla::{Field, PrimeField, Rationals, DEFAULT_MODULUS};
use identcert_core::geometry::{rank_stats, VarietyModel, VarietySpec};
use identcert_core::inference::{TwdEntry, TwdOutcome};
use identcert_core::secantprobe::{secant_profile, ProbeConfig, ProbeError, SecantReport};
use identcert_core::twdprobe::certify_not_twd;
use serde_json::{json, Value};

use crate::doc::{entries, render, tagged, with_provenance};
use crate::{check_common, emit, exit, parse_spec, Common, Failure, FieldArg};

pub(crate) fn run(
    spec: &str,
    h_max: Option<u64>,
    field: FieldArg,
    modulus: Option<u64>,
    common: &Common,
    out: &mut dyn Write,
) -> Result<i32, Failure> {
    check_common(common)?;
    let spec = parse_spec(spec)?;
    let doc = document(&spec, h_max, field, modulus, common)?;
    emit(&render(&doc), common.out.as_deref(), out)?;
    Ok(exit::OK)
}

struct Probed {
    secant: Vec<SecantReport>,
    twd: Vec<TwdEntry>,
    total: FailureBound,
}

fn probe<F: Field>(model: &VarietyModel, field: &F, h_max: u64, common: &Common) -> Result<Probed, Failure> {
    let cfg = ProbeConfig { trials: common.trials, seed: common.seed, cap: common.cap };
    let secant = secant_profile(model, field, h_max, &cfg)?;
    let mut total: FailureBound = secant.iter().map(|r| r.failure_bound.clone()).sum();
    let mut twd = Vec::new();
    for r in &secant {
        let h = r.h;
        let outcome = if r.fills_ambient {
            TwdOutcome::Inapplicable { reason: "secant variety fills the ambient space".into() }
        } else {
            let cfg_h = ProbeConfig { seed: common.seed.wrapping_add(1000u64.wrapping_mul(h)), ..cfg };
            match certify_not_twd(model, field, h, &cfg_h) {
                Ok(rep) => {
                    if rep.certified_not_twd {
                        total = total + rep.failure_bound.clone();
                    }
                    TwdOutcome::Report(rep)
                }
                Err(ProbeError::Inapplicable(reason)) => TwdOutcome::Inapplicable { reason },
                Err(e) => return Err(e.into()),
            }
        };
        twd.push(TwdEntry { id: format!("twd/h={h}"), h, outcome });
    }
    Ok(Probed { secant, twd, total })
}

pub fn document(
    spec: &VarietySpec,
    h_max: Option<u64>,
    field: FieldArg,
    modulus: Option<u64>,
    common: &Common,
) -> Result<Value, Failure> {
    let stats = rank_stats(spec)?;
    let model = VarietyModel::new(spec.clone())?;
    let h_max = h_max.unwrap_or(stats.gr);
    if h_max == 0 {
        return Err(Failure::usage("--h-max must be >= 1"));
    }
    let probed = match field {
        FieldArg::Prime => {
            let p = modulus.unwrap_or(DEFAULT_MODULUS);
            let f = PrimeField::new(p).map_err(|e| Failure::usage(e.to_string()))?;
            probe(&model, &f, h_max, common)?
        }
        FieldArg::Rational => {
            if modulus.is_some() {
                return Err(Failure::usage("--modulus only applies to --field prime"));
            }
            probe(&model, &Rationals::default(), h_max, common)?
        }
    };
    let config = json!({
        "spec": spec.to_string(),
        "h_max": h_max,
        "field": match field { FieldArg::Prime => "prime", FieldArg::Rational => "rational" },
        "modulus": match field { FieldArg::Prime => Some(modulus.unwrap_or(DEFAULT_MODULUS)), FieldArg::Rational => None },
        "trials": common.trials,
        "seed": common.seed,
        "cap": common.cap,
    });
    let mut model_v = tagged(&model, "formula");
    model_v["spec_text"] = spec.to_string().into();
    Ok(json!({
        "command": "analyze",
        "config": with_provenance(config, "input"),
        "model": model_v,
        "stats": tagged(&stats, "formula"),
        "secant": entries(probed.secant.iter().map(|r| serde_json::to_value(r).expect("report")).collect(), "probe"),
        "twd": entries(probed.twd.iter().map(|r| serde_json::to_value(r).expect("report")).collect(), "probe"),
        "total_failure_bound": tagged(&probed.total, "probe"),
    }))
}
