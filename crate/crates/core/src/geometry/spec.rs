use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::GeometryError;

/// One of the classical varieties handled by the engine.
///
/// Textual form (used by the CLI and in reports):
/// `segre:1,1,1`, `veronese:d=2,n=2`, `sv:d=1,2;n=1,3`, `grass:k=1,n=4`, `gm:d=6`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum VarietySpec {
    /// `P^{n_1} x ... x P^{n_r}` in its Segre embedding.
    Segre { dims: Vec<u32> },
    /// `P^n` embedded by degree-`d` forms.
    Veronese { degree: u32, dim: u32 },
    /// `P^{n_1} x ... x P^{n_r}` embedded by `O(d_1, ..., d_r)`.
    SegreVeronese { degrees: Vec<u32>, dims: Vec<u32> },
    /// `G(k, n)`: `k`-planes in `P^n`, Plücker embedded.
    Grassmann { k: u32, n: u32 },
    /// Moment surface of univariate Gaussians, moments of degree `<= d`.
    GaussianMoments { d: u32 },
}

/// A projective factor `P^dim` carrying degree `degree`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Factor {
    pub degree: u32,
    pub dim: u32,
}

impl VarietySpec {
    pub fn validate(&self) -> Result<(), GeometryError> {
        let bad = |msg: String| Err(GeometryError::InvalidSpec(msg));
        match self {
            VarietySpec::Segre { dims } => {
                if dims.len() < 2 {
                    return bad(format!("segre needs at least 2 factors, got {}", dims.len()));
                }
                if dims.contains(&0) {
                    return bad("segre factor dimensions must be positive".into());
                }
            }
            VarietySpec::Veronese { degree, dim } => {
                if *degree == 0 {
                    return bad("veronese degree d must be >= 1".into());
                }
                if *dim == 0 {
                    return bad("veronese dimension n must be positive".into());
                }
            }
            VarietySpec::SegreVeronese { degrees, dims } => {
                if degrees.len() != dims.len() {
                    return bad(format!(
                        "segre-veronese needs equal-length lists, got {} degrees and {} dims",
                        degrees.len(),
                        dims.len()
                    ));
                }
                if dims.is_empty() {
                    return bad("segre-veronese needs at least one factor".into());
                }
                if degrees.contains(&0) {
                    return bad("segre-veronese degrees must be >= 1".into());
                }
                if dims.contains(&0) {
                    return bad("segre-veronese factor dimensions must be positive".into());
                }
            }
            VarietySpec::Grassmann { k, n } => {
                if k >= n {
                    return bad(format!("grassmann needs 0 <= k < n, got k={k}, n={n}"));
                }
            }
            VarietySpec::GaussianMoments { d } => {
                if *d < 3 {
                    return bad(format!("gaussian moments need d >= 3, got d={d}"));
                }
            }
        }
        Ok(())
    }

    /// Factor list for the product families (Segre, Veronese, Segre–Veronese).
    pub fn factors(&self) -> Option<Vec<Factor>> {
        match self {
            VarietySpec::Segre { dims } => {
                Some(dims.iter().map(|&dim| Factor { degree: 1, dim }).collect())
            }
            VarietySpec::Veronese { degree, dim } => Some(vec![Factor {
                degree: *degree,
                dim: *dim,
            }]),
            VarietySpec::SegreVeronese { degrees, dims } => Some(
                degrees
                    .iter()
                    .zip(dims)
                    .map(|(&degree, &dim)| Factor { degree, dim })
                    .collect(),
            ),
            _ => None,
        }
    }

    /// `true` for a product of at least two factors all of degree one.
    pub fn is_segre(&self) -> bool {
        self.factors()
            .is_some_and(|f| f.len() >= 2 && f.iter().all(|x| x.degree == 1))
    }

    /// `Some((n, k))` when the variety is the diagonal Segre `(P^n)^k`.
    pub fn diagonal_segre(&self) -> Option<(u32, u32)> {
        let f = self.factors()?;
        if !self.is_segre() || f.iter().any(|x| x.dim != f[0].dim) {
            return None;
        }
        Some((f[0].dim, f.len() as u32))
    }
}

impl fmt::Display for VarietySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[u32]| {
            v.iter()
                .map(|x| x.to_string())
                .collect::<Vec<_>>()
                .join(",")
        };
        match self {
            VarietySpec::Segre { dims } => write!(f, "segre:{}", join(dims)),
            VarietySpec::Veronese { degree, dim } => write!(f, "veronese:d={degree},n={dim}"),
            VarietySpec::SegreVeronese { degrees, dims } => {
                write!(f, "sv:d={};n={}", join(degrees), join(dims))
            }
            VarietySpec::Grassmann { k, n } => write!(f, "grass:k={k},n={n}"),
            VarietySpec::GaussianMoments { d } => write!(f, "gm:d={d}"),
        }
    }
}

fn parse_list(s: &str) -> Result<Vec<u32>, GeometryError> {
    s.split(',')
        .map(|x| {
            x.trim()
                .parse::<u32>()
                .map_err(|_| GeometryError::Parse(format!("expected a nonnegative integer, got {x:?}")))
        })
        .collect()
}

/// Parses `key=value` pairs separated by `sep`, each key exactly once.
fn parse_keyed<'a>(body: &'a str, sep: char, keys: &[&str]) -> Result<Vec<&'a str>, GeometryError> {
    let mut out = vec![None; keys.len()];
    for part in body.split(sep) {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| GeometryError::Parse(format!("expected key=value, got {part:?}")))?;
        let idx = keys
            .iter()
            .position(|&key| key == k.trim())
            .ok_or_else(|| GeometryError::Parse(format!("unknown key {k:?}")))?;
        if out[idx].replace(v.trim()).is_some() {
            return Err(GeometryError::Parse(format!("duplicate key {k:?}")));
        }
    }
    out.into_iter()
        .zip(keys)
        .map(|(v, k)| v.ok_or_else(|| GeometryError::Parse(format!("missing key {k:?}"))))
        .collect()
}

fn parse_u32(s: &str) -> Result<u32, GeometryError> {
    s.parse()
        .map_err(|_| GeometryError::Parse(format!("expected a nonnegative integer, got {s:?}")))
}

impl FromStr for VarietySpec {
    type Err = GeometryError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, body) = s
            .trim()
            .split_once(':')
            .ok_or_else(|| GeometryError::Parse(format!("expected <kind>:<params>, got {s:?}")))?;
        let spec = match kind.trim() {
            "segre" => VarietySpec::Segre {
                dims: parse_list(body)?,
            },
            "veronese" => {
                // d and n separated by ','
                let v = parse_keyed(body, ',', &["d", "n"])?;
                VarietySpec::Veronese {
                    degree: parse_u32(v[0])?,
                    dim: parse_u32(v[1])?,
                }
            }
            "sv" => {
                let v = parse_keyed(body, ';', &["d", "n"])?;
                VarietySpec::SegreVeronese {
                    degrees: parse_list(v[0])?,
                    dims: parse_list(v[1])?,
                }
            }
            "grass" => {
                let v = parse_keyed(body, ',', &["k", "n"])?;
                VarietySpec::Grassmann {
                    k: parse_u32(v[0])?,
                    n: parse_u32(v[1])?,
                }
            }
            "gm" => {
                let v = parse_keyed(body, ',', &["d"])?;
                VarietySpec::GaussianMoments { d: parse_u32(v[0])? }
            }
            other => return Err(GeometryError::Parse(format!("unknown variety kind {other:?}"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_every_kind() {
        for s in [
            "segre:1,1,1,1,1",
            "veronese:d=2,n=2",
            "sv:d=1,2;n=1,3",
            "grass:k=1,n=4",
            "gm:d=6",
        ] {
            let spec: VarietySpec = s.parse().unwrap();
            assert_eq!(spec.to_string(), s);
        }
    }

    #[test]
    fn rejects_invalid_parameters() {
        let cases = [
            ("segre:2", "at least 2"),
            ("segre:1,0", "positive"),
            ("sv:d=1,2;n=1", "equal-length"),
            ("sv:d=0,2;n=1,1", ">= 1"),
            ("grass:k=4,n=4", "0 <= k < n"),
            ("gm:d=2", "d >= 3"),
            ("veronese:d=0,n=2", ">= 1"),
        ];
        for (s, needle) in cases {
            let err = s.parse::<VarietySpec>().unwrap_err().to_string();
            assert!(err.contains(needle), "{s}: {err}");
        }
        assert!(matches!("cubic:3".parse::<VarietySpec>(), Err(GeometryError::Parse(_))));
        assert!(matches!("veronese:d=2".parse::<VarietySpec>(), Err(GeometryError::Parse(_))));
        assert!(matches!("grass:k=1,k=2".parse::<VarietySpec>(), Err(GeometryError::Parse(_))));
    }

    #[test]
    fn diagonal_detection() {
        let s: VarietySpec = "segre:2,2,2,2".parse().unwrap();
        assert_eq!(s.diagonal_segre(), Some((2, 4)));
        let s: VarietySpec = "sv:d=1,1;n=3,3".parse().unwrap();
        assert_eq!(s.diagonal_segre(), Some((3, 2)));
        let s: VarietySpec = "segre:1,2".parse().unwrap();
        assert_eq!(s.diagonal_segre(), None);
    }
}
