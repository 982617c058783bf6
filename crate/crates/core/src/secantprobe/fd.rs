//! Exact derivatives from function values: a polynomial of degree `<= D` in
//! one variable is determined by its values at `x, x+1, ..., x+D`, so the
//! derivative of its Lagrange interpolant at `x` is exact.

use super::ProbeError;
use crate::exactla::{Field, Matrix};
use crate::geometry::{embed, ParamPoint, VarietyModel};

/// Weights `c_k = L_k'(0)` for nodes `0..=degree`.
pub(crate) fn derivative_weights<F: Field>(field: &F, degree: u32) -> Vec<F::Elem> {
    let nodes: Vec<i64> = (0..=degree as i64).collect();
    nodes
        .iter()
        .map(|&k| {
            if k == 0 {
                // -(1 + 1/2 + ... + 1/D)
                let mut acc = field.zero();
                for &m in &nodes[1..] {
                    let inv = field.inv(&field.from_i64(m)).expect("small node");
                    acc = field.sub(&acc, &inv);
                }
                acc
            } else {
                let mut num = field.one();
                let mut den = field.one();
                for &m in &nodes {
                    if m == k {
                        continue;
                    }
                    if m != 0 {
                        num = field.mul(&num, &field.from_i64(-m));
                    }
                    den = field.mul(&den, &field.from_i64(k - m));
                }
                field.mul(&num, &field.inv(&den).expect("distinct nodes"))
            }
        })
        .collect()
}

/// `d embed / d x_index` at `coords`, from values of `embed` only.
pub fn partial_derivative<F: Field>(
    model: &VarietyModel,
    field: &F,
    coords: &[F::Elem],
    index: usize,
) -> Result<Vec<F::Elem>, ProbeError> {
    let degree = model.param_degree(index);
    let weights = derivative_weights(field, degree);
    let mut out = vec![field.zero(); model.coords()];
    for (k, w) in weights.iter().enumerate() {
        let mut shifted = coords.to_vec();
        shifted[index] = field.add(&shifted[index], &field.from_i64(k as i64));
        // scale may pass through zero; evaluation does not care
        let vals = model.evaluate(field, &shifted)?;
        for (o, v) in out.iter_mut().zip(&vals) {
            *o = field.add(o, &field.mul(w, v));
        }
    }
    Ok(out)
}

/// Jacobian of `(p_1, ..., p_h) -> sum_i embed(p_i)`, one row per parameter.
pub fn addition_map_jacobian<F: Field>(
    model: &VarietyModel,
    field: &F,
    points: &[ParamPoint<F::Elem>],
) -> Result<Matrix<F::Elem>, ProbeError> {
    let mut jac = Matrix::empty(model.coords());
    for p in points {
        // arity check through embed
        embed(model, field, p)?;
        for j in 0..model.param_arity {
            jac.push_row(&partial_derivative(model, field, p.coordinates(), j)?)?;
        }
    }
    Ok(jac)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{PrimeField, Rationals, Ring};
    use crate::geometry::{sample_point, tangent_frame};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn weights_differentiate_cubics() {
        let q = Rationals::default();
        let w = derivative_weights(&q, 3);
        // f(x) = (x + 2)^3 has f'(0) = 12
        let f = |x: i64| q.from_i64((x + 2).pow(3));
        let d = w
            .iter()
            .enumerate()
            .fold(q.zero(), |acc, (k, c)| q.add(&acc, &q.mul(c, &f(k as i64))));
        assert_eq!(d, q.from_i64(12));
    }

    #[test]
    fn finite_differences_reproduce_jet_frames() {
        let f = PrimeField::default();
        for s in ["segre:1,2", "veronese:d=3,n=2", "sv:d=2,1;n=1,2", "grass:k=1,n=4", "gm:d=7"] {
            let m = VarietyModel::new(s.parse().unwrap()).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(3);
            let p = sample_point(&m, &f, &mut rng);
            let jac = addition_map_jacobian(&m, &f, std::slice::from_ref(&p)).unwrap();
            assert_eq!(jac, tangent_frame(&m, &f, &p).unwrap().matrix, "{s}");
        }
    }
}
