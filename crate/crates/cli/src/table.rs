use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use identcert_core::geometry::{closed_form_bound, closed_form_candidates, rank_stats, BoundRecord, RankStats, VarietySpec};
use identcert_core::inference::{identifiability_range, Mode, RangeOptions, RangeReport};
use serde_json::{json, Value};

use crate::certify::{options, CertifyArgs};
use crate::doc::{render, tagged, with_provenance};
use crate::{check_common, emit, exit, Common, Failure, PromoteArg};

pub const TABLE_NAMES: [&str; 9] =
    ["binary-segre", "diagonal-segre", "xkn", "sv-binary", "sv-general", "sv-12", "sv-1d", "grassmann", "gaussian"];

/// Parameter-grid bounds; each table reads the ones it needs.
#[derive(Debug, Clone, Default, Args)]
pub struct Grid {
    /// binary-segre: k = 2..=max-k (7); diagonal-segre: k = 3..=max-k (5)
    #[arg(long)]
    pub max_k: Option<u32>,
    /// diagonal-segre (3), sv-general (2), sv-12 (6), sv-1d (3), grassmann (8)
    #[arg(long)]
    pub max_n: Option<u32>,
    /// grassmann: n = min-n..=max-n (3)
    #[arg(long)]
    pub min_n: Option<u32>,
    /// xkn: k = 2..=max and odd n <= max (3)
    #[arg(long)]
    pub max: Option<u32>,
    /// sv-12 (3), sv-1d (2)
    #[arg(long)]
    pub max_m: Option<u32>,
    /// sv-binary (2), sv-general (3), sv-1d (4)
    #[arg(long)]
    pub max_d: Option<u32>,
    /// sv-binary: number of factors 2..=max-r (6)
    #[arg(long)]
    pub max_r: Option<u32>,
    /// grassmann: only this k
    #[arg(long)]
    pub k: Option<u32>,
    /// gaussian: degree range a..b, inclusive (14..20)
    #[arg(long = "d")]
    pub d: Option<String>,
}

#[derive(Debug, Clone)]
pub(crate) struct TableArgs {
    pub name: String,
    pub grid: Grid,
    pub tsv: Option<PathBuf>,
    pub desk_cap: u64,
    pub window: u64,
    pub kb: Option<PathBuf>,
    pub common: Common,
}

struct Cell {
    params: BTreeMap<&'static str, u32>,
    spec: VarietySpec,
}

fn cell(params: &[(&'static str, u32)], spec: VarietySpec) -> Cell {
    Cell { params: params.iter().copied().collect(), spec }
}

fn segre(dims: Vec<u32>) -> VarietySpec {
    VarietySpec::Segre { dims }
}

fn sv(degrees: Vec<u32>, dims: Vec<u32>) -> VarietySpec {
    VarietySpec::SegreVeronese { degrees, dims }
}

fn parse_range(s: &str) -> Result<(u32, u32), Failure> {
    let bad = || Failure::usage(format!("bad range `{s}` (expected a..b)"));
    let (a, b) = s.split_once("..").ok_or_else(bad)?;
    let b = b.strip_prefix('=').unwrap_or(b);
    let (a, b): (u32, u32) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
    if a > b {
        return Err(bad());
    }
    Ok((a, b))
}

/// Nondecreasing sequences of length `r` over `1..=max`.
fn multisets(r: u32, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![Vec::new()];
    for _ in 0..r {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                let lo = v.last().copied().unwrap_or(1);
                (lo..=max).map(move |x| {
                    let mut w = v.clone();
                    w.push(x);
                    w
                })
            })
            .collect();
    }
    out
}

/// Grid cells and the theorems the table reports.
fn cells(name: &str, g: &Grid) -> Result<(Vec<Cell>, &'static [&'static str]), Failure> {
    let mut out = Vec::new();
    let theorems: &'static [&'static str] = match name {
        "binary-segre" => {
            for k in 2..=g.max_k.unwrap_or(7) {
                out.push(cell(&[("k", k)], segre(vec![1; k as usize])));
            }
            &["binary-segre"]
        }
        "diagonal-segre" => {
            for n in 2..=g.max_n.unwrap_or(3) {
                for k in 3..=g.max_k.unwrap_or(5) {
                    out.push(cell(&[("n", n), ("k", k)], segre(vec![n; k as usize])));
                }
            }
            &["three-factor-segre", "diagonal-segre"]
        }
        "xkn" => {
            let max = g.max.unwrap_or(3);
            for k in 2..=max {
                for n in (1..=max).filter(|n| n % 2 == 1) {
                    let mut dims = vec![k];
                    dims.extend(std::iter::repeat_n(n, k as usize + 1));
                    out.push(cell(&[("k", k), ("n", n)], segre(dims)));
                }
            }
            &["xkn"]
        }
        "sv-binary" => {
            for r in 2..=g.max_r.unwrap_or(6) {
                for degrees in multisets(r, g.max_d.unwrap_or(2)) {
                    out.push(cell(&[("r", r)], sv(degrees, vec![1; r as usize])));
                }
            }
            &["binary-segre-veronese"]
        }
        "sv-general" => {
            let (max_n, max_d) = (g.max_n.unwrap_or(2), g.max_d.unwrap_or(3));
            for n1 in 1..=max_n {
                for n2 in 1..=max_n {
                    for d1 in 1..=max_d {
                        for d2 in (1..=max_d).filter(|d2| d1 + d2 >= 3) {
                            out.push(cell(
                                &[("n1", n1), ("n2", n2), ("d1", d1), ("d2", d2)],
                                sv(vec![d1, d2], vec![n1, n2]),
                            ));
                        }
                    }
                }
            }
            &["general-segre-veronese"]
        }
        "sv-12" => {
            for m in 1..=g.max_m.unwrap_or(3) {
                for n in 1..=g.max_n.unwrap_or(6) {
                    out.push(cell(&[("m", m), ("n", n)], sv(vec![1, 2], vec![m, n])));
                }
            }
            &["sv-1-2"]
        }
        "sv-1d" => {
            for d in 3..=g.max_d.unwrap_or(4) {
                for m in 1..=g.max_m.unwrap_or(2) {
                    for n in 1..=g.max_n.unwrap_or(3) {
                        out.push(cell(&[("d", d), ("m", m), ("n", n)], sv(vec![1, d], vec![m, n])));
                    }
                }
            }
            &["sv-1-d"]
        }
        "grassmann" => {
            for n in g.min_n.unwrap_or(3)..=g.max_n.unwrap_or(8) {
                let ks: Vec<u32> = match g.k {
                    Some(k) => vec![k],
                    None => (1..).take_while(|k| 2 * k < n).collect(),
                };
                for k in ks.into_iter().filter(|&k| k < n) {
                    out.push(cell(&[("k", k), ("n", n)], VarietySpec::Grassmann { k, n }));
                }
            }
            &["grassmann"]
        }
        "gaussian" => {
            let (a, b) = match &g.d {
                Some(s) => parse_range(s)?,
                None => (14, 20),
            };
            for d in a.max(3)..=b {
                out.push(cell(&[("d", d)], VarietySpec::GaussianMoments { d }));
            }
            &["gaussian-moments"]
        }
        other => {
            return Err(Failure::usage(format!("unknown table `{other}` (expected one of {})", TABLE_NAMES.join(", "))))
        }
    };
    Ok((out, theorems))
}

struct Row {
    cell: Cell,
    stats: RankStats,
    claim: BoundRecord,
    certified: Option<(RangeReport, Option<bool>)>,
    skipped: Option<String>,
}

fn claim_for(spec: &VarietySpec, theorems: &[&str]) -> Result<BoundRecord, Failure> {
    let found = closed_form_candidates(spec)?.into_iter().find(|c| theorems.contains(&c.theorem.as_str()));
    match found {
        Some(c) => Ok(c),
        None => Ok(closed_form_bound(spec)?),
    }
}

/// `h_limit * (n + 1) * (N + 1)` for the probes a hybrid run would start.
fn probe_cost(report_stats: &RankStats, spec: &VarietySpec, window: u64) -> Option<u128> {
    let model = identcert_core::geometry::VarietyModel::new(spec.clone()).ok()?;
    let h = (report_stats.gr + 1).min(window) as u128;
    Some(h * model.param_arity as u128 * model.coords() as u128)
}

fn build_rows(args: &TableArgs) -> Result<Vec<Row>, Failure> {
    check_common(&args.common)?;
    let (grid, theorems) = cells(&args.name, &args.grid)?;
    let base = CertifyArgs {
        spec: String::new(),
        mode: Mode::Hybrid,
        h: None,
        promote: PromoteArg::Never,
        window: args.window,
        modulus: None,
        kb: args.kb.clone(),
        common: args.common.clone(),
    };
    let opts = options(&base)?;
    let mut rows = Vec::new();
    for c in grid {
        let stats = rank_stats(&c.spec)?;
        let claim = claim_for(&c.spec, theorems)?;
        let (certified, skipped) = match probe_cost(&stats, &c.spec, args.window) {
            None => (None, Some("too many ambient coordinates".to_string())),
            Some(cost) => {
                let mode = if cost <= args.desk_cap as u128 { Mode::Hybrid } else { Mode::CatalogOnly };
                let report = identifiability_range(&c.spec, &RangeOptions { mode, ..opts.clone() })?;
                let agree = claim.h_max.map(|m| report.h_ident_max >= m);
                (Some((report, agree)), None)
            }
        };
        rows.push(Row { cell: c, stats, claim, certified, skipped });
    }
    Ok(rows)
}

fn params_text(p: &BTreeMap<&str, u32>) -> String {
    p.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(",")
}

const COLUMNS: [&str; 10] = ["params", "spec", "gr", "s", "perfect", "theorem", "claim", "certified", "mode", "agree"];

fn columns(r: &Row) -> [String; 10] {
    let dash = || "-".to_string();
    let (certified, mode, agree) = match &r.certified {
        Some((rep, agree)) => (
            rep.h_ident_max.to_string(),
            rep.mode.to_string(),
            match agree {
                Some(true) => "yes".into(),
                Some(false) => "NO".into(),
                None => dash(),
            },
        ),
        None => (dash(), dash(), dash()),
    };
    [
        params_text(&r.cell.params),
        r.cell.spec.to_string(),
        r.stats.gr.to_string(),
        r.stats.s.to_string(),
        r.stats.perfect.to_string(),
        r.claim.theorem.clone(),
        r.claim.h_max.map(|h| h.to_string()).unwrap_or_else(dash),
        certified,
        mode,
        agree,
    ]
}

fn text(name: &str, rows: &[Row]) -> String {
    let cells: Vec<[String; 10]> = rows.iter().map(columns).collect();
    let mut width = COLUMNS.map(str::len);
    for c in &cells {
        for (w, x) in width.iter_mut().zip(c) {
            *w = (*w).max(x.len());
        }
    }
    let mut s = format!("table {name}: {} rows\n", rows.len());
    let line = |s: &mut String, xs: &[&str]| {
        let cols: Vec<String> = xs.iter().zip(width).map(|(x, w)| format!("{x:<w$}")).collect();
        let _ = writeln!(s, "{}", cols.join("  ").trim_end());
    };
    line(&mut s, &COLUMNS);
    for c in &cells {
        line(&mut s, &c.iter().map(String::as_str).collect::<Vec<_>>());
    }
    let claimed = rows.iter().filter(|r| matches!(r.certified, Some((_, Some(_))))).count();
    let agreed = rows.iter().filter(|r| matches!(r.certified, Some((_, Some(true))))).count();
    let _ = writeln!(s, "agreement: {agreed}/{claimed} rows with a closed-form claim");
    s
}

fn tsv(rows: &[Row]) -> String {
    let mut s = COLUMNS.join("\t");
    s.push('\n');
    for r in rows {
        s.push_str(&columns(r).join("\t"));
        s.push('\n');
    }
    s
}

fn json_doc(args: &TableArgs, rows: &[Row]) -> Value {
    let rows: Vec<Value> = rows
        .iter()
        .map(|r| {
            let certified = match &r.certified {
                Some((rep, agree)) => with_provenance(
                    json!({
                        "mode": rep.mode.to_string(),
                        "h_limit": rep.h_limit,
                        "h_ident_max": rep.h_ident_max,
                        "not_identifiable": rep.not_identifiable,
                        "complete": rep.complete,
                        "incomplete_reasons": rep.incomplete_reasons,
                        "agreement": agree,
                        "total_failure_bound": rep.total_failure_bound,
                    }),
                    "rule",
                ),
                None => Value::Null,
            };
            with_provenance(
                json!({
                    "params": r.cell.params,
                    "spec": r.cell.spec.to_string(),
                    "stats": tagged(&r.stats, "formula"),
                    "claim": tagged(&r.claim, "formula"),
                    "certified": certified,
                    "skipped": r.skipped,
                }),
                "formula",
            )
        })
        .collect();
    let config = json!({
        "table": args.name,
        "desk_cap": args.desk_cap,
        "window": args.window,
        "trials": args.common.trials,
        "seed": args.common.seed,
        "cap": args.common.cap,
        "knowledge_base": args.kb.as_ref().map(|p| p.display().to_string()),
    });
    json!({"command": "table", "config": with_provenance(config, "input"), "rows": rows})
}

fn is_tsv(p: &Path) -> bool {
    p.extension().is_some_and(|e| e == "tsv")
}

pub(crate) fn run(args: &TableArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let rows = build_rows(args)?;
    emit(&text(&args.name, &rows), None, out)?;
    if let Some(p) = &args.common.out {
        let body = if is_tsv(p) { tsv(&rows) } else { render(&json_doc(args, &rows)) };
        emit(&body, Some(p), out)?;
    }
    if let Some(p) = &args.tsv {
        emit(&tsv(&rows), Some(p), out)?;
    }
    let disagree = rows.iter().any(|r| matches!(r.certified, Some((_, Some(false)))));
    Ok(if disagree { exit::DISAGREEMENT } else { exit::OK })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_and_multisets() {
        assert_eq!(parse_range("14..20").unwrap(), (14, 20));
        assert_eq!(parse_range("3..=5").unwrap(), (3, 5));
        assert!(parse_range("5..3").is_err());
        assert!(parse_range("x").is_err());
        assert_eq!(multisets(2, 2), vec![vec![1, 1], vec![1, 2], vec![2, 2]]);
        assert_eq!(multisets(3, 3).len(), 10);
    }

    #[test]
    fn every_table_has_cells() {
        for name in TABLE_NAMES {
            let (cells, theorems) = cells(name, &Grid::default()).unwrap();
            assert!(!cells.is_empty(), "{name}");
            assert!(!theorems.is_empty());
        }
        assert_eq!(cells("nope", &Grid::default()).err().unwrap().code, exit::USAGE);
    }
}
