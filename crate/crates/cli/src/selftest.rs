use std::io::Write;
use std::path::Path;

use identcert_core::exactla::{PrimeField, Rationals};
use identcert_core::geometry::{closed_form_bound, is_special, rank_stats, sv12_r, VarietyModel, VarietySpec};
use identcert_core::inference::{fuzz_rules, identifiability_range, KnowledgeBase, Mode, RangeOptions};
use identcert_core::secantprobe::{addition_map_dimension, secant_profile, terracini_dimension, ProbeConfig};
use identcert_core::twdprobe::certify_not_twd;

use crate::certify::{document, CertifyArgs};
use crate::doc::{lint, render};
use crate::{check_common, exit, load_kb, Common, Failure, PromoteArg};

type Check = Result<String, String>;

fn spec(s: &str) -> VarietySpec {
    s.parse().expect("fixture spec")
}

fn model(s: &str) -> VarietyModel {
    VarietyModel::new(spec(s)).expect("fixture model")
}

fn e<E: std::fmt::Display>(x: E) -> String {
    x.to_string()
}

fn expect(cond: bool, ok: String, bad: String) -> Check {
    if cond {
        Ok(ok)
    } else {
        Err(bad)
    }
}

struct Ctx {
    cfg: ProbeConfig,
    kb: Option<KnowledgeBase>,
    common: Common,
}

impl Ctx {
    fn range(&self, s: &str, mode: Mode) -> Result<u64, String> {
        let opts = RangeOptions {
            trials: self.cfg.trials,
            seed: self.cfg.seed,
            knowledge_base: self.kb.clone(),
            ..RangeOptions::new(mode)
        };
        identifiability_range(&spec(s), &opts).map(|r| r.h_ident_max).map_err(e)
    }
}

fn quadric_veronese(c: &Ctx) -> Check {
    let m = model("veronese:d=2,n=2");
    let p = terracini_dimension(&m, &PrimeField::default(), 2, &c.cfg).map_err(e)?;
    let q = terracini_dimension(&m, &Rationals::default(), 2, &c.cfg).map_err(e)?;
    let got = (p.dim_computed, p.dim_expected, p.defect, q.defect);
    expect(got == (4, 5, 1, 1), "dim 4, expected 5, defect 1 in both fields".into(), format!("got {got:?}"))
}

fn terracini_vs_addition(c: &Ctx) -> Check {
    let cases = [
        ("segre:1,1,1", 2),
        ("segre:1,2", 2),
        ("segre:2,2", 3),
        ("veronese:d=2,n=2", 2),
        ("veronese:d=3,n=1", 2),
        ("sv:d=1,2;n=1,1", 2),
        ("grass:k=1,n=3", 1),
        ("grass:k=1,n=4", 2),
        ("gm:d=6", 3),
        ("segre:1,1,1,1", 3),
    ];
    let f = PrimeField::default();
    for (i, (s, h)) in cases.iter().enumerate() {
        let m = model(s);
        let seed = c.cfg.seed.wrapping_add(i as u64);
        let cfg = ProbeConfig { trials: 1, seed, ..c.cfg };
        let t = terracini_dimension(&m, &f, *h, &cfg).map_err(e)?.dim_computed;
        let a = addition_map_dimension(&m, &f, *h, seed, c.cfg.cap).map_err(e)?;
        if t != a {
            return Err(format!("{s} h={h}: terracini {t}, addition map {a}"));
        }
    }
    Ok(format!("{} instances agree", cases.len()))
}

fn two_factor_segre(c: &Ctx) -> Check {
    let f = PrimeField::default();
    let mut count = 0;
    for a in 1..=3u64 {
        for b in a..=3u64 {
            let m = model(&format!("segre:{a},{b}"));
            let profile = secant_profile(&m, &f, a.min(b) + 1, &c.cfg).map_err(e)?;
            for r in profile {
                let want = r.h * (a + b + 2 - r.h) - 1;
                if r.dim_computed != want {
                    return Err(format!("segre:{a},{b} h={}: {} != {want}", r.h, r.dim_computed));
                }
                count += 1;
            }
        }
    }
    Ok(format!("h(a+b+2-h)-1 on {count} cells"))
}

fn binary_segre(c: &Ctx) -> Check {
    let want = [1, 2, 2, 4];
    let mut got = Vec::new();
    for k in 2..=5usize {
        got.push(c.range(&format!("segre:{}", vec!["1"; k].join(",")), Mode::Hybrid)?);
    }
    let probe_only = c.range("segre:1,1,1,1,1", Mode::ProbeOnly)?;
    expect(
        got == want && probe_only == 4,
        "k=2..5 gives 1,2,2,4; k=5 probe-only gives 4".into(),
        format!("got {got:?}, probe-only k=5 {probe_only}"),
    )
}

fn not_twd(c: &Ctx) -> Check {
    let f = PrimeField::default();
    let yes = certify_not_twd(&model("segre:1,1,1,1,1"), &f, 4, &c.cfg).map_err(e)?;
    let no = certify_not_twd(&model("veronese:d=2,n=2"), &f, 2, &c.cfg).map_err(e)?;
    expect(
        yes.certified_not_twd && yes.min_kernel == 0 && !no.certified_not_twd && no.min_kernel >= 1,
        format!("(P^1)^5 h=4 certified; quadric Veronese h=2 inconclusive, kernel {}", no.min_kernel),
        format!("(P^1)^5 kernel {}, Veronese kernel {}", yes.min_kernel, no.min_kernel),
    )
}

fn gaussian(c: &Ctx) -> Check {
    let profile = secant_profile(&model("gm:d=14"), &PrimeField::default(), 5, &c.cfg).map_err(e)?;
    let defects: Vec<u64> = profile.iter().map(|r| r.defect).collect();
    let h = c.range("gm:d=14", Mode::Hybrid)?;
    expect(
        defects.iter().all(|&d| d == 0) && h == 4,
        "no defect for h<=5; identifiable up to 4".into(),
        format!("defects {defects:?}, h_ident_max {h}"),
    )
}

fn rule_fuzz(c: &Ctx) -> Check {
    let s = fuzz_rules(100, c.cfg.seed)?;
    Ok(format!("{} runs, {} certificates replayed", s.runs, s.certificates_replayed))
}

fn formula_layer(_: &Ctx) -> Check {
    let st = |s: &str| rank_stats(&spec(s)).map_err(e);
    let p16 = st("segre:1,1,1,1,1,1")?;
    let x23 = st("segre:2,3,3,3")?;
    let x25 = st("segre:2,2,2,2,2")?;
    let grass = closed_form_bound(&spec("grass:k=4,n=250")).map_err(e)?;
    let ok = (p16.gr, p16.s) == (10, 9)
        && x23.gr == 16
        && x23.perfect
        && (x25.s, x25.delta) == (22, Some(1))
        && is_special(&[2, 2, 2], 7)
        && sv12_r(4, 3) == 56.into()
        && grass.h_max == Some(2519);
    expect(ok, "rank statistics and closed-form bounds match".into(), "a formula value differs".into())
}

fn knowledge_base(c: &Ctx) -> Check {
    let kb = c.kb.clone().unwrap_or_else(KnowledgeBase::builtin);
    kb.validate().map_err(e)?;
    Ok(format!("{} entries", kb.entries.len()))
}

fn determinism(c: &Ctx) -> Check {
    let args = CertifyArgs {
        spec: "segre:1,1,1,1".into(),
        mode: Mode::Hybrid,
        h: None,
        promote: PromoteArg::Never,
        window: identcert_core::inference::DEFAULT_H_WINDOW,
        modulus: None,
        kb: None,
        common: c.common.clone(),
    };
    let opts = crate::certify::options(&args).map_err(|f| f.message)?;
    let s = spec(&args.spec);
    let mut docs = Vec::new();
    for _ in 0..2 {
        let r = identifiability_range(&s, &RangeOptions { knowledge_base: c.kb.clone(), ..opts.clone() }).map_err(e)?;
        docs.push(document(&s, &args, &opts, &r));
    }
    let bad = lint(&docs[0]);
    expect(
        render(&docs[0]) == render(&docs[1]) && bad.is_empty(),
        "certify output is byte-identical and fully tagged".into(),
        format!("outputs differ or untagged numbers at {bad:?}"),
    )
}

const CHECKS: [(&str, fn(&Ctx) -> Check); 10] = [
    ("quadric-veronese-defect", quadric_veronese),
    ("terracini-equals-addition-map", terracini_vs_addition),
    ("two-factor-segre", two_factor_segre),
    ("binary-segre-table", binary_segre),
    ("not-twd", not_twd),
    ("gaussian-moments", gaussian),
    ("rule-fuzz", rule_fuzz),
    ("formula-layer", formula_layer),
    ("knowledge-base", knowledge_base),
    ("determinism", determinism),
];

pub(crate) fn run(kb: Option<&Path>, common: &Common, out: &mut dyn Write) -> Result<i32, Failure> {
    check_common(common)?;
    let kb = load_kb(kb)?;
    let c = Ctx { cfg: ProbeConfig { trials: common.trials, seed: common.seed, cap: common.cap }, kb, common: common.clone() };
    let mut failed = Vec::new();
    let mut report = String::new();
    for (name, check) in CHECKS {
        match check(&c) {
            Ok(detail) => report.push_str(&format!("PASS {name}: {detail}\n")),
            Err(detail) => {
                report.push_str(&format!("FAIL {name}: {detail}\n"));
                failed.push(name);
            }
        }
    }
    if failed.is_empty() {
        report.push_str(&format!("selftest: all {} checks passed\n", CHECKS.len()));
    } else {
        report.push_str(&format!("selftest: {} failed: {}\n", failed.len(), failed.join(", ")));
    }
    crate::emit(&report, common.out.as_deref(), out)?;
    Ok(if failed.is_empty() { exit::OK } else { exit::SELFTEST_FAILED })
}
