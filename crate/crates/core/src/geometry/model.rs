use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use super::spec::{Factor, VarietySpec};
use super::GeometryError;
use crate::exactla::Ring;

/// Largest ambient space a model will be built for (`N + 1` coordinates).
pub const MAX_AMBIENT_COORDS: u64 = 1 << 40;

/// A variety together with its derived dimensions.
///
/// Parameters are laid out as the chart coordinates of each factor (first
/// homogeneous coordinate pinned to 1), then one cone-scale coordinate last,
/// so `param_arity = n + 1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct VarietyModel {
    pub spec: VarietySpec,
    /// Projective dimension `n` of the variety.
    pub n: usize,
    /// Projective dimension `N` of the ambient space.
    #[serde(rename = "N")]
    pub ambient: u64,
    pub param_arity: usize,
    /// Total degree of the affine-cone parameterization.
    pub degree_bound: u32,
}

pub fn binomial(n: u64, k: u64) -> BigUint {
    if k > n {
        return BigUint::from(0u32);
    }
    let k = k.min(n - k);
    let mut acc = BigUint::one();
    for i in 0..k {
        acc = acc * BigUint::from(n - i) / BigUint::from(i + 1);
    }
    acc
}

/// `(n, N + 1)` for a spec, with `N + 1` as a big integer.
pub(crate) fn dims_of(spec: &VarietySpec) -> (u64, BigUint) {
    match spec {
        VarietySpec::Grassmann { k, n } => {
            let (k, n) = (*k as u64, *n as u64);
            ((k + 1) * (n - k), binomial(n + 1, k + 1))
        }
        VarietySpec::GaussianMoments { d } => (2, BigUint::from(*d as u64 + 1)),
        _ => {
            let factors = spec.factors().expect("product family");
            let n = factors.iter().map(|f| f.dim as u64).sum();
            let coords = factors.iter().fold(BigUint::one(), |acc, f| {
                acc * binomial((f.dim + f.degree) as u64, f.dim as u64)
            });
            (n, coords)
        }
    }
}

impl VarietyModel {
    pub fn new(spec: VarietySpec) -> Result<Self, GeometryError> {
        spec.validate()?;
        let (n, coords) = dims_of(&spec);
        let coords = coords
            .to_u64()
            .filter(|&c| c <= MAX_AMBIENT_COORDS)
            .ok_or_else(|| GeometryError::TooLarge(spec.to_string()))?;
        let degree_bound = match &spec {
            VarietySpec::Grassmann { k, n } => (k + 1).min(n - k) + 1,
            VarietySpec::GaussianMoments { d } => d + 1,
            _ => spec.factors().unwrap().iter().map(|f| f.degree).sum::<u32>() + 1,
        };
        Ok(Self {
            spec,
            n: n as usize,
            ambient: coords - 1,
            param_arity: n as usize + 1,
            degree_bound,
        })
    }

    /// Number of ambient coordinates, `N + 1`.
    pub fn coords(&self) -> usize {
        self.ambient as usize + 1
    }

    /// Index of the cone-scale parameter.
    pub fn scale_index(&self) -> usize {
        self.n
    }

    /// Abstract secant dimension `h(n + 1) - 1`.
    pub fn abstract_secant_dim(&self, h: u64) -> u64 {
        h * (self.n as u64 + 1) - 1
    }

    /// Upper bound on the degree of the parameterization in each single
    /// parameter; used by the finite-difference oracle.
    pub fn param_degree(&self, index: usize) -> u32 {
        if index == self.scale_index() {
            return 1;
        }
        match &self.spec {
            VarietySpec::Grassmann { .. } => 1,
            VarietySpec::GaussianMoments { d } => {
                if index == 0 {
                    *d
                } else {
                    d / 2
                }
            }
            _ => {
                let mut offset = 0usize;
                for f in self.spec.factors().unwrap() {
                    offset += f.dim as usize;
                    if index < offset {
                        return f.degree;
                    }
                }
                unreachable!("index below scale index lies in some factor")
            }
        }
    }

    /// Evaluates the affine-cone parameterization over any ring. `vars` has
    /// `param_arity` entries, the cone scale last.
    pub fn evaluate<R: Ring>(&self, ring: &R, vars: &[R::Elem]) -> Result<Vec<R::Elem>, GeometryError> {
        if vars.len() != self.param_arity {
            return Err(GeometryError::Arity {
                expected: self.param_arity,
                got: vars.len(),
            });
        }
        let scale = &vars[self.scale_index()];
        let chart = &vars[..self.n];
        let out = match &self.spec {
            VarietySpec::Grassmann { k, n } => {
                plucker_coordinates(ring, *k as usize, *n as usize, chart, scale)
            }
            VarietySpec::GaussianMoments { d } => gaussian_moments(ring, *d as usize, chart, scale),
            _ => segre_veronese(ring, &self.spec.factors().unwrap(), chart, scale),
        };
        debug_assert_eq!(out.len(), self.coords());
        Ok(out)
    }
}

/// Monomials of degree `degree` in `1, t_1, ..., t_m`, exponent vectors in
/// lexicographically decreasing order (so `1, x, y, x^2, xy, y^2` for
/// degree 2 in two chart variables).
fn factor_monomials<R: Ring>(ring: &R, degree: u32, t: &[R::Elem]) -> Vec<R::Elem> {
    let mut homog = Vec::with_capacity(t.len() + 1);
    homog.push(ring.one());
    homog.extend(t.iter().cloned());
    let powers: Vec<Vec<R::Elem>> = homog
        .iter()
        .map(|x| {
            let mut p = vec![ring.one()];
            for e in 1..=degree as usize {
                p.push(ring.mul(&p[e - 1], x));
            }
            p
        })
        .collect();
    let mut out = Vec::new();
    fn rec<R: Ring>(ring: &R, powers: &[Vec<R::Elem>], var: usize, left: usize, acc: R::Elem, out: &mut Vec<R::Elem>) {
        if var + 1 == powers.len() {
            out.push(ring.mul(&acc, &powers[var][left]));
            return;
        }
        for e in (0..=left).rev() {
            rec(ring, powers, var + 1, left - e, ring.mul(&acc, &powers[var][e]), out);
        }
    }
    rec(ring, &powers, 0, degree as usize, ring.one(), &mut out);
    out
}

fn segre_veronese<R: Ring>(ring: &R, factors: &[Factor], chart: &[R::Elem], scale: &R::Elem) -> Vec<R::Elem> {
    let mut offset = 0;
    let mut acc: Vec<R::Elem> = vec![scale.clone()];
    for f in factors {
        let t = &chart[offset..offset + f.dim as usize];
        offset += f.dim as usize;
        let mons = factor_monomials(ring, f.degree, t);
        // first factor outermost
        let mut next = Vec::with_capacity(acc.len() * mons.len());
        for a in &acc {
            for m in &mons {
                next.push(ring.mul(a, m));
            }
        }
        acc = next;
    }
    acc
}

/// Maximal minors of `[I_{k+1} | T]` with `T` the `(k+1) x (n-k)` chart
/// matrix (row-major in `chart`), columns subsets in lexicographic order.
fn plucker_coordinates<R: Ring>(ring: &R, k: usize, n: usize, chart: &[R::Elem], scale: &R::Elem) -> Vec<R::Elem> {
    let rows = k + 1;
    let tcols = n - k;
    let mut memo: HashMap<(u64, u64), R::Elem> = HashMap::new();
    let mut out = Vec::new();
    let mut subset: Vec<usize> = (0..rows).collect();
    loop {
        let mut row_mask = (1u64 << rows) - 1;
        let mut col_mask = 0u64;
        let mut parity = 0usize;
        for (pos, &c) in subset.iter().enumerate() {
            if c < rows {
                row_mask &= !(1u64 << c);
                parity += c - pos;
            } else {
                col_mask |= 1u64 << (c - rows);
            }
        }
        let minor = t_minor(ring, tcols, chart, row_mask, col_mask, &mut memo);
        let signed = if parity % 2 == 1 { ring.neg(&minor) } else { minor };
        out.push(ring.mul(scale, &signed));

        // next subset of {0..=n} of size rows, lexicographic
        let mut i = rows;
        loop {
            if i == 0 {
                return out;
            }
            i -= 1;
            if subset[i] < n + 1 - rows + i {
                break;
            }
        }
        subset[i] += 1;
        for j in i + 1..rows {
            subset[j] = subset[j - 1] + 1;
        }
    }
}

/// Minor of `T` on the row and column bitmasks (equal popcount), by
/// expansion along the lowest selected column.
fn t_minor<R: Ring>(
    ring: &R,
    tcols: usize,
    chart: &[R::Elem],
    row_mask: u64,
    col_mask: u64,
    memo: &mut HashMap<(u64, u64), R::Elem>,
) -> R::Elem {
    if col_mask == 0 {
        return ring.one();
    }
    if let Some(v) = memo.get(&(row_mask, col_mask)) {
        return v.clone();
    }
    let c = col_mask.trailing_zeros() as usize;
    let rest_cols = col_mask & !(1u64 << c);
    let mut acc = ring.zero();
    let mut sign_pos = 0;
    let mut rm = row_mask;
    while rm != 0 {
        let r = rm.trailing_zeros() as usize;
        rm &= rm - 1;
        let sub = t_minor(ring, tcols, chart, row_mask & !(1u64 << r), rest_cols, memo);
        let term = ring.mul(&chart[r * tcols + c], &sub);
        acc = if sign_pos % 2 == 0 {
            ring.add(&acc, &term)
        } else {
            ring.sub(&acc, &term)
        };
        sign_pos += 1;
    }
    memo.insert((row_mask, col_mask), acc.clone());
    acc
}

/// `lambda * (m_0, ..., m_d)` with `m_0 = 1`, `m_1 = mu`,
/// `m_j = mu m_{j-1} + (j-1) sigma^2 m_{j-2}`; chart is `(mu, sigma^2)`.
fn gaussian_moments<R: Ring>(ring: &R, d: usize, chart: &[R::Elem], scale: &R::Elem) -> Vec<R::Elem> {
    let mu = &chart[0];
    let var = &chart[1];
    let mut m = vec![ring.one(), mu.clone()];
    for j in 2..=d {
        let a = ring.mul(mu, &m[j - 1]);
        let b = ring.mul(&ring.mul(&ring.from_i64(j as i64 - 1), var), &m[j - 2]);
        m.push(ring.add(&a, &b));
    }
    m.iter().map(|x| ring.mul(scale, x)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{PrimeField, Rationals};

    fn model(s: &str) -> VarietyModel {
        VarietyModel::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn dimensions() {
        let m = model("segre:1,1,1,1,1");
        assert_eq!((m.n, m.ambient), (5, 31));
        let m = model("grass:k=1,n=4");
        assert_eq!((m.n, m.ambient), (6, 9));
        let m = model("gm:d=6");
        assert_eq!((m.n, m.ambient, m.param_arity), (2, 6, 3));
        let m = model("sv:d=1,2;n=1,3");
        assert_eq!((m.n, m.ambient), (4, 19));
        let m = model("veronese:d=3,n=2");
        assert_eq!((m.n, m.ambient, m.degree_bound), (2, 9, 4));
    }

    #[test]
    fn segre_embedding_order() {
        let f = PrimeField::default();
        let m = model("segre:1,1");
        let (a, b, l) = (3u64, 5u64, 7u64);
        let v = m.evaluate(&f, &[a, b, l]).unwrap();
        assert_eq!(v, vec![7, 7 * 5, 7 * 3, 7 * 15]);
    }

    #[test]
    fn veronese_embedding_order() {
        let q = Rationals::default();
        let m = model("veronese:d=2,n=2");
        let v = m
            .evaluate(&q, &[q.from_i64(2), q.from_i64(3), q.from_i64(1)])
            .unwrap();
        let want: Vec<_> = [1, 2, 3, 4, 6, 9].iter().map(|&x| q.from_i64(x)).collect();
        assert_eq!(v, want);
    }

    #[test]
    fn standard_normal_moments() {
        let q = Rationals::default();
        let m = model("gm:d=4");
        let v = m
            .evaluate(&q, &[q.from_i64(0), q.from_i64(1), q.from_i64(1)])
            .unwrap();
        let want: Vec<_> = [1, 0, 1, 0, 3].iter().map(|&x| q.from_i64(x)).collect();
        assert_eq!(v, want);
    }

    #[test]
    fn plucker_coordinates_of_a_line() {
        // G(1,3): rows (1,0,a,b), (0,1,c,d); minors 01,02,03,12,13,23
        let q = Rationals::default();
        let m = model("grass:k=1,n=3");
        let (a, b, c, d) = (2, 3, 5, 7);
        let vars: Vec<_> = [a, b, c, d, 1].iter().map(|&x| q.from_i64(x)).collect();
        let v = m.evaluate(&q, &vars).unwrap();
        let want: Vec<_> = [1, c, d, -a, -b, a * d - b * c]
            .iter()
            .map(|&x| q.from_i64(x))
            .collect();
        assert_eq!(v, want);
    }

    #[test]
    fn arity_is_checked() {
        let f = PrimeField::default();
        let m = model("segre:1,1");
        assert!(matches!(
            m.evaluate(&f, &[1, 2]),
            Err(GeometryError::Arity { expected: 3, got: 2 })
        ));
    }
}
