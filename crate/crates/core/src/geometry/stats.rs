use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Pow, ToPrimitive, Zero};
use serde::Serialize;

use super::model::dims_of;
use super::{GeometryError, VarietySpec};

/// Closed-form rank statistics of a variety.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankStats {
    /// Expected generic rank, `ceil((N+1)/(n+1))`.
    pub gr: u64,
    /// `floor((N+1)/(n+1))`.
    pub s: u64,
    /// `s mod (n+1)` in `[0, n]`, for diagonal Segre `(P^n)^k` only.
    pub delta: Option<u64>,
    pub perfect: bool,
}

fn to_u64(v: &BigUint, spec: &VarietySpec) -> Result<u64, GeometryError> {
    v.to_u64().ok_or_else(|| GeometryError::Overflow(spec.to_string()))
}

pub fn rank_stats(spec: &VarietySpec) -> Result<RankStats, GeometryError> {
    spec.validate()?;
    let (n, coords) = dims_of(spec);
    let (q, r) = coords.div_rem(&BigUint::from(n + 1));
    let s = to_u64(&q, spec)?;
    let perfect = r.is_zero();
    let gr = if perfect { s } else { s + 1 };
    let delta = spec.diagonal_segre().map(|(nf, _)| s % (nf as u64 + 1));
    Ok(RankStats {
        gr,
        s,
        delta,
        perfect,
    })
}

/// A named predicate evaluated while checking a theorem's hypotheses.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Hypothesis {
    pub name: String,
    pub holds: bool,
    pub detail: String,
}

/// Outcome of checking one closed-form identifiability theorem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundRecord {
    pub theorem: String,
    /// Largest `h` claimed identifiable; `None` unless every hypothesis holds.
    pub h_max: Option<u64>,
    pub hypotheses: Vec<Hypothesis>,
    pub values: BTreeMap<String, String>,
}

struct Builder {
    rec: BoundRecord,
}

impl Builder {
    fn new(theorem: &str) -> Self {
        Self {
            rec: BoundRecord {
                theorem: theorem.to_string(),
                h_max: None,
                hypotheses: Vec::new(),
                values: BTreeMap::new(),
            },
        }
    }

    fn check(&mut self, name: &str, holds: bool, detail: impl Into<String>) -> &mut Self {
        self.rec.hypotheses.push(Hypothesis {
            name: name.to_string(),
            holds,
            detail: detail.into(),
        });
        self
    }

    fn value(&mut self, key: &str, v: impl ToString) -> &mut Self {
        self.rec.values.insert(key.to_string(), v.to_string());
        self
    }

    fn finish(&mut self, h_max: impl Into<Option<u64>>) -> BoundRecord {
        let mut rec = self.rec.clone();
        if rec.hypotheses.iter().all(|h| h.holds) {
            rec.h_max = h_max.into();
        }
        rec
    }
}

/// Membership in the exceptional list `(2,2a;2a+1)`, `(1,1,2a;2a+1)`,
/// `(2,2,2;7)`, `(1,1,1,1;3)` (the last entry is the secant index).
pub fn is_special(degrees: &[u32], h: u64) -> bool {
    let mut d = degrees.to_vec();
    d.sort_unstable();
    match d.as_slice() {
        [2, e] if e % 2 == 0 => h == *e as u64 + 1,
        [1, 1, e] if *e >= 2 && e % 2 == 0 => h == *e as u64 + 1,
        [2, 2, 2] => h == 7,
        [1, 1, 1, 1] => h == 3,
        _ => false,
    }
}

/// `r(m, n)` for `P^m x P^n` embedded by `O(1, 2)`.
pub fn sv12_r(m: u64, n: u64) -> BigInt {
    let m = BigInt::from(m);
    if m.is_even() && n % 2 == 1 {
        &m * &m * &m - BigInt::from(2) * &m
    } else {
        let mp1 = &m + 1;
        (m - 2) * &mp1 * &mp1 / 2
    }
}

fn floor_log2(x: u64) -> u32 {
    63 - x.leading_zeros()
}

fn binary_segre(k: u32, s: u64) -> BoundRecord {
    let mut b = Builder::new("binary-segre");
    b.value("k", k).value("s", s);
    const TABLE: [u64; 5] = [1, 2, 2, 4, 9];
    if (2..=6).contains(&k) {
        let h = TABLE[k as usize - 2];
        b.check("k <= 6 with tabulated range", true, format!("k={k}, h<={h}"));
        return b.finish(h);
    }
    let two_k = BigRational::from_integer(BigInt::from(2u32).pow(k));
    let ratio = two_k / BigRational::from_integer(BigInt::from(k + 1));
    let lhs = BigRational::from_integer(BigInt::from(2 * k));
    let mid = &ratio - BigRational::one();
    b.check("k >= 7", k >= 7, format!("k={k}"));
    b.check(
        "2k < 2^k/(k+1) - 1",
        lhs < mid,
        format!("{} < {}", lhs, mid),
    );
    b.check(
        "2^k/(k+1) - 1 < s",
        mid < BigRational::from_integer(BigInt::from(s)),
        format!("{} < {s}", mid),
    );
    b.finish(s.checked_sub(1))
}

fn three_factor_segre(n: u32, s: u64) -> BoundRecord {
    let mut b = Builder::new("three-factor-segre");
    b.value("n", n).value("s", s);
    b.check("n >= 2", n >= 2, format!("n={n}"));
    b.value("branch", if n <= 7 { "n<=7 tabulated" } else { "n>7 recursive" });
    b.finish(s.checked_sub(1))
}

fn diagonal_segre(n: u32, k: u32, s: u64, delta: u64) -> BoundRecord {
    let mut b = Builder::new("diagonal-segre");
    b.value("n", n).value("k", k).value("s", s).value("delta", delta);
    b.check("n >= 2", n >= 2, format!("n={n}"));
    b.check("k >= 4", k >= 4, format!("k={k}"));
    b.check("n >= delta", n as u64 >= delta, format!("{n} >= {delta}"));
    b.finish((s - delta).checked_sub(1))
}

/// `Some((k, n))` when the Segre factor dimensions are `{k} + (k+1) x {n}`.
fn xkn_shape(dims: &[u32]) -> Option<(u32, u32)> {
    let r = dims.len() as u32;
    if r < 3 {
        return None;
    }
    let k = r - 2;
    let pos = dims.iter().position(|&d| d == k)?;
    let rest: Vec<u32> = dims
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != pos)
        .map(|(_, &d)| d)
        .collect();
    if rest.iter().all(|&d| d == rest[0]) {
        Some((k, rest[0]))
    } else {
        None
    }
}

fn xkn(k: u32, n: u32, gr: u64) -> BoundRecord {
    let mut b = Builder::new("xkn");
    b.value("k", k).value("n", n).value("gr", gr);
    b.check("n odd", n % 2 == 1, format!("n={n}"));
    b.check("k > 1", k > 1, format!("k={k}"));
    b.finish(gr.checked_sub(1))
}

fn binary_segre_veronese(degrees: &[u32], gr: u64, s: u64) -> BoundRecord {
    let mut b = Builder::new("binary-segre-veronese");
    let r = degrees.len();
    b.value("r", r).value("s", s).value("gr", gr);
    b.check("r >= 6", r >= 6, format!("r={r}"));
    let special_at = (1..=gr).find(|&h| is_special(degrees, h));
    b.check(
        "not special",
        special_at.is_none(),
        match special_at {
            Some(h) => format!("special at h={h}"),
            None => format!("no special index h<={gr}"),
        },
    );
    b.finish(s.checked_sub(1))
}

fn general_segre_veronese(degrees: &[u32], dims: &[u32]) -> BoundRecord {
    let mut b = Builder::new("general-segre-veronese");
    let d: u64 = degrees.iter().map(|&x| x as u64).sum();
    let sum_n: u64 = dims.iter().map(|&x| x as u64).sum();
    let n1 = dims[0] as u64;
    b.check("r >= 2", dims.len() >= 2, format!("r={}", dims.len()));
    let e = floor_log2(d.saturating_sub(1).max(1));
    let v = BigUint::from(n1).pow(e);
    b.value("d", d).value("n1", n1).value("exponent", e).value("v", &v);
    let rhs = BigUint::from(2 * sum_n);
    b.check(
        "n1^floor(log2(d-1)) >= 2(n1+...+nr)",
        d >= 2 && v >= rhs,
        format!("{v} >= {rhs}"),
    );
    let h = v.to_u64().and_then(|x| x.checked_sub(1));
    b.finish(h)
}

fn sv12(m: u32, n: u32, s: u64) -> BoundRecord {
    let mut b = Builder::new("sv-1-2");
    let r = sv12_r(m as u64, n as u64);
    b.value("m", m).value("n", n).value("r", &r).value("s", s);
    b.check("n > r(m,n)", BigInt::from(n) > r, format!("{n} > {r}"));
    let rhs = 2 * (m as u64 + n as u64);
    b.check("s >= 2(m+n)", s >= rhs, format!("{s} >= {rhs}"));
    b.finish(s.checked_sub(1))
}

fn sv1d(d: u32, m: u32, n: u32, s: u64) -> BoundRecord {
    let mut b = Builder::new("sv-1-d");
    let sp = s - s % (m as u64 + 1);
    b.value("d", d).value("m", m).value("n", n).value("s", s).value("s_multiple", sp);
    b.check("d >= 3", d >= 3, format!("d={d}"));
    let rhs = 2 * (m as u64 + n as u64);
    b.check("s' > 2(m+n)", sp > rhs, format!("{sp} > {rhs}"));
    b.finish(sp.checked_sub(1))
}

fn grassmann(k: u32, n: u32) -> BoundRecord {
    let mut b = Builder::new("grassmann");
    b.value("k", k).value("n", n);
    b.check("2k+1 <= n", 2 * k < n, format!("{} <= {n}", 2 * k + 1));
    b.check("k >= 1", k >= 1, format!("k={k}"));
    if k == 0 {
        return b.finish(None);
    }
    let e = floor_log2(k as u64);
    let base = BigRational::new(BigInt::from(n + 1), BigInt::from(k + 1));
    let v: BigRational = Pow::pow(&base, e);
    let fl: BigInt = v.floor().to_integer();
    let fl_minus: BigInt = (&v - BigRational::one()).floor().to_integer();
    let rhs = BigInt::from(2u64 * (n - k) as u64 * (k + 1) as u64);
    b.value("exponent", e)
        .value("value", &v)
        .value("floor(value)-1", &fl - 1)
        .value("floor(value-1)", &fl_minus);
    b.check(
        "floor(((n+1)/(k+1))^floor(log2 k)) >= 2(n-k)(k+1)",
        fl >= rhs,
        format!("{fl} >= {rhs}"),
    );
    let safe: BigInt = (&fl - BigInt::one()).min(fl_minus);
    b.finish(safe.to_u64())
}

fn gaussian(d: u32, s: u64) -> BoundRecord {
    let mut b = Builder::new("gaussian-moments");
    b.value("d", d).value("s", s);
    b.check("d >= 14", d >= 14, format!("d={d}"));
    b.finish(s.checked_sub(1))
}

/// Every closed-form theorem whose shape matches `spec`, with its hypotheses
/// evaluated.
pub fn closed_form_candidates(spec: &VarietySpec) -> Result<Vec<BoundRecord>, GeometryError> {
    let st = rank_stats(spec)?;
    let mut out = Vec::new();
    match spec {
        VarietySpec::Grassmann { k, n } => out.push(grassmann(*k, *n)),
        VarietySpec::GaussianMoments { d } => out.push(gaussian(*d, st.s)),
        _ => {
            let factors = spec.factors().expect("product family");
            let degrees: Vec<u32> = factors.iter().map(|f| f.degree).collect();
            let dims: Vec<u32> = factors.iter().map(|f| f.dim).collect();
            if let Some((nf, k)) = spec.diagonal_segre() {
                let delta = st.delta.expect("diagonal segre has delta");
                if nf == 1 {
                    out.push(binary_segre(k, st.s));
                } else if k == 3 {
                    out.push(three_factor_segre(nf, st.s));
                } else {
                    out.push(diagonal_segre(nf, k, st.s, delta));
                }
            }
            if spec.is_segre() {
                if let Some((k, n)) = xkn_shape(&dims) {
                    out.push(xkn(k, n, st.gr));
                }
            }
            if dims.iter().all(|&x| x == 1) && dims.len() >= 2 {
                out.push(binary_segre_veronese(&degrees, st.gr, st.s));
            }
            if dims.len() == 2 && degrees[0] == 1 && degrees[1] == 2 {
                out.push(sv12(dims[0], dims[1], st.s));
            }
            if dims.len() == 2 && degrees[0] == 1 && degrees[1] >= 3 {
                out.push(sv1d(degrees[1], dims[0], dims[1], st.s));
            }
            if dims.len() >= 2 {
                out.push(general_segre_veronese(&degrees, &dims));
            }
        }
    }
    Ok(out)
}

/// The strongest closed-form identifiability bound available for `spec`:
/// the candidate with the largest `h_max` among those whose hypotheses all
/// hold, else the first candidate checked (with `h_max = None`).
pub fn closed_form_bound(spec: &VarietySpec) -> Result<BoundRecord, GeometryError> {
    let cands = closed_form_candidates(spec)?;
    let best = cands
        .iter()
        .filter(|c| c.h_max.is_some())
        .max_by_key(|c| c.h_max)
        .cloned();
    Ok(best.unwrap_or_else(|| {
        cands.into_iter().next().unwrap_or_else(|| BoundRecord {
            theorem: "none".to_string(),
            h_max: None,
            hypotheses: Vec::new(),
            values: BTreeMap::new(),
        })
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn spec(s: &str) -> VarietySpec {
        s.parse().unwrap()
    }

    #[test]
    fn binary_segre_six_factors() {
        let st = rank_stats(&spec("segre:1,1,1,1,1,1")).unwrap();
        assert_eq!((st.gr, st.s, st.perfect), (10, 9, false));
    }

    #[test]
    fn xkn_is_perfect() {
        let st = rank_stats(&spec("segre:2,3,3,3")).unwrap();
        assert_eq!((st.gr, st.s, st.perfect), (16, 16, true));
        assert_eq!(st.delta, None);
    }

    #[test]
    fn diagonal_segre_delta() {
        let st = rank_stats(&spec("segre:2,2,2,2,2")).unwrap();
        // independent: 3^5 = 243, kn + 1 = 11
        let s = 243u64 / 11;
        assert_eq!(st.s, s);
        assert_eq!(st.delta, Some(s % 3));
        assert_eq!((st.s, st.delta), (22, Some(1)));
    }

    #[test]
    fn gaussian_stats() {
        let st = rank_stats(&spec("gm:d=14")).unwrap();
        assert_eq!((st.s, st.gr, st.perfect), (5, 5, true));
    }

    #[test]
    fn binary_segre_bounds() {
        let want = [(2, 1), (3, 2), (4, 2), (5, 4), (6, 9), (7, 15)];
        for (k, h) in want {
            let dims = vec!["1"; k].join(",");
            let b = closed_form_bound(&spec(&format!("segre:{dims}"))).unwrap();
            assert_eq!(b.h_max, Some(h), "k={k}: {b:?}");
        }
    }

    #[test]
    fn special_tuples() {
        assert!(is_special(&[2, 2, 2], 7));
        assert!(is_special(&[2, 4], 5));
        assert!(is_special(&[4, 2], 5));
        assert!(is_special(&[1, 2, 1], 3));
        assert!(is_special(&[1, 1, 1, 1], 3));
        assert!(!is_special(&[2, 3], 4));
        assert!(!is_special(&[2, 2, 2], 6));
        assert!(!is_special(&[1, 1, 1, 1, 1, 1], 3));
        let b = closed_form_candidates(&spec("sv:d=2,2,2;n=1,1,1")).unwrap();
        let bsv = b.iter().find(|c| c.theorem == "binary-segre-veronese").unwrap();
        assert_eq!(bsv.h_max, None);
        let ns = bsv.hypotheses.iter().find(|h| h.name == "not special").unwrap();
        assert!(!ns.holds);
    }

    #[test]
    fn grassmann_large() {
        let b = closed_form_bound(&spec("grass:k=4,n=250")).unwrap();
        assert_eq!(b.theorem, "grassmann");
        // independent: (251/5)^2 = 63001/25
        assert_eq!(63001 / 25, 2520);
        assert_eq!(2 * 246 * 5, 2460);
        assert!(b.hypotheses.iter().all(|h| h.holds));
        assert_eq!(b.h_max, Some(2519));
        assert_eq!(b.values["floor(value)-1"], "2519");
        assert_eq!(b.values["floor(value-1)"], "2519");
    }

    #[test]
    fn r_of_m_n() {
        assert_eq!(sv12_r(4, 3), BigInt::from(56));
        assert_eq!(sv12_r(3, 3), BigInt::from(8));
        assert_eq!(sv12_r(1, 5), BigInt::from(-2));
        assert_eq!(sv12_r(2, 4), BigInt::from(0));
    }

    #[test]
    fn veronese_has_no_bound() {
        let b = closed_form_bound(&spec("veronese:d=3,n=2")).unwrap();
        assert_eq!(b.h_max, None);
    }

    #[test]
    fn gaussian_bound_needs_large_d() {
        assert_eq!(closed_form_bound(&spec("gm:d=14")).unwrap().h_max, Some(4));
        assert_eq!(closed_form_bound(&spec("gm:d=13")).unwrap().h_max, None);
    }

    #[test]
    fn xkn_and_diagonal_both_checked() {
        let c = closed_form_candidates(&spec("segre:3,3,3,3,3")).unwrap();
        let names: Vec<_> = c.iter().map(|x| x.theorem.as_str()).collect();
        assert_eq!(names, ["diagonal-segre", "xkn", "general-segre-veronese"]);
        let b = closed_form_bound(&spec("segre:2,3,3,3")).unwrap();
        assert_eq!((b.theorem.as_str(), b.h_max), ("xkn", Some(15)));
    }

    fn any_spec() -> impl Strategy<Value = VarietySpec> {
        prop_oneof![
            proptest::collection::vec(1u32..4, 2..6).prop_map(|dims| VarietySpec::Segre { dims }),
            (1u32..5, 1u32..4).prop_map(|(degree, dim)| VarietySpec::Veronese { degree, dim }),
            proptest::collection::vec((1u32..4, 1u32..3), 1..4).prop_map(|v| VarietySpec::SegreVeronese {
                degrees: v.iter().map(|x| x.0).collect(),
                dims: v.iter().map(|x| x.1).collect(),
            }),
            (0u32..5, 1u32..30)
                .prop_filter("k < n", |(k, n)| k < n)
                .prop_map(|(k, n)| VarietySpec::Grassmann { k, n }),
            (3u32..40).prop_map(|d| VarietySpec::GaussianMoments { d }),
        ]
    }

    proptest! {
        #[test]
        fn stats_invariants(s in any_spec()) {
            let st = rank_stats(&s).unwrap();
            prop_assert!(st.s + 1 >= st.gr);
            prop_assert_eq!(st.perfect, st.s == st.gr);
            if let (Some(d), Some((nf, _))) = (st.delta, s.diagonal_segre()) {
                prop_assert!(d <= nf as u64);
                prop_assert_eq!(d, st.s % (nf as u64 + 1));
            }
        }

        #[test]
        fn no_bound_with_false_hypothesis(s in any_spec()) {
            for c in closed_form_candidates(&s).unwrap() {
                if c.hypotheses.iter().any(|h| !h.holds) {
                    prop_assert_eq!(c.h_max, None);
                }
            }
            let b = closed_form_bound(&s).unwrap();
            if b.h_max.is_some() {
                prop_assert!(b.hypotheses.iter().all(|h| h.holds));
            }
        }
    }
}
