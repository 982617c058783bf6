use rand::Rng;

use super::jet::{Jet, JetRing};
use super::{GeometryError, VarietyModel};
use crate::exactla::{Field, Matrix};

/// A point of the abstract parameter space: chart coordinates followed by
/// the cone scale. Chart-pinned homogeneous coordinates (all equal to 1) are
/// implicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamPoint<E> {
    coords: Vec<E>,
}

impl<E: Clone> ParamPoint<E> {
    pub fn new<F: Field<Elem = E>>(field: &F, coords: Vec<E>) -> Result<Self, GeometryError> {
        match coords.last() {
            None => Err(GeometryError::Arity {
                expected: 1,
                got: 0,
            }),
            Some(s) if field.is_zero(s) => Err(GeometryError::ZeroScale),
            _ => Ok(Self { coords }),
        }
    }

    pub fn coordinates(&self) -> &[E] {
        &self.coords
    }

    pub fn chart(&self) -> &[E] {
        &self.coords[..self.coords.len() - 1]
    }

    pub fn scale(&self) -> &E {
        self.coords.last().expect("nonempty")
    }

    pub fn arity(&self) -> usize {
        self.coords.len()
    }
}

/// Rows are the partial derivatives of the cone parameterization,
/// chart directions first, cone scale last.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentFrame<E> {
    pub matrix: Matrix<E>,
}

/// Draws a parameter point with every coordinate sampled from the field and
/// a nonzero cone scale.
pub fn sample_point<F: Field, R: Rng + ?Sized>(model: &VarietyModel, field: &F, rng: &mut R) -> ParamPoint<F::Elem> {
    let mut coords: Vec<F::Elem> = (0..model.n).map(|_| field.sample(rng)).collect();
    let scale = loop {
        let s = field.sample(rng);
        if !field.is_zero(&s) {
            break s;
        }
    };
    coords.push(scale);
    ParamPoint { coords }
}

fn check_arity<E>(model: &VarietyModel, p: &ParamPoint<E>) -> Result<(), GeometryError> {
    if p.coords.len() != model.param_arity {
        return Err(GeometryError::Arity {
            expected: model.param_arity,
            got: p.coords.len(),
        });
    }
    Ok(())
}

/// The embedded point (affine cone representative), `N + 1` scalars.
pub fn embed<F: Field>(model: &VarietyModel, field: &F, p: &ParamPoint<F::Elem>) -> Result<Vec<F::Elem>, GeometryError> {
    check_arity(model, p)?;
    model.evaluate(field, &p.coords)
}

fn jets<F: Field>(
    model: &VarietyModel,
    ring: &JetRing<'_, F>,
    p: &ParamPoint<F::Elem>,
) -> Result<Vec<Jet<F::Elem>>, GeometryError> {
    check_arity(model, p)?;
    let vars: Vec<_> = p
        .coords
        .iter()
        .enumerate()
        .map(|(i, v)| ring.variable(i, v.clone()))
        .collect();
    model.evaluate(ring, &vars)
}

fn frame_from_jets<F: Field>(model: &VarietyModel, jets: &[Jet<F::Elem>]) -> TangentFrame<F::Elem> {
    let m = model.param_arity;
    let cols = model.coords();
    let mut data = Vec::with_capacity(m * cols);
    for i in 0..m {
        for j in jets {
            data.push(j.grad[i].clone());
        }
    }
    TangentFrame {
        matrix: Matrix::new(m, cols, data).expect("frame shape"),
    }
}

pub fn tangent_frame<F: Field>(
    model: &VarietyModel,
    field: &F,
    p: &ParamPoint<F::Elem>,
) -> Result<TangentFrame<F::Elem>, GeometryError> {
    let ring = JetRing::new(field, model.param_arity, false);
    let jets = jets(model, &ring, p)?;
    Ok(frame_from_jets::<F>(model, &jets))
}

/// Second-order data of the parameterization at one point, reusable for
/// contracting against many functionals.
#[derive(Debug, Clone)]
pub struct PointJets<'a, F: Field> {
    ring: JetRing<'a, F>,
    arity: usize,
    jets: Vec<Jet<F::Elem>>,
    frame: TangentFrame<F::Elem>,
}

impl<'a, F: Field> PointJets<'a, F> {
    pub fn new(model: &VarietyModel, field: &'a F, p: &ParamPoint<F::Elem>) -> Result<Self, GeometryError> {
        let ring = JetRing::new(field, model.param_arity, true);
        let jets = jets(model, &ring, p)?;
        let frame = frame_from_jets::<F>(model, &jets);
        Ok(Self {
            ring,
            arity: model.param_arity,
            jets,
            frame,
        })
    }

    pub fn frame(&self) -> &TangentFrame<F::Elem> {
        &self.frame
    }

    pub fn point(&self) -> Vec<F::Elem> {
        self.jets.iter().map(|j| j.value.clone()).collect()
    }

    /// `H[i][j] = d^2 (ell . embed) / dx_i dx_j`, after checking that `ell`
    /// annihilates every row of the tangent frame.
    pub fn contract(&self, field: &F, ell: &[F::Elem]) -> Result<Matrix<F::Elem>, GeometryError> {
        if ell.len() != self.jets.len() {
            return Err(GeometryError::Arity {
                expected: self.jets.len(),
                got: ell.len(),
            });
        }
        for row in self.frame.matrix.row_iter() {
            let dot = row
                .iter()
                .zip(ell)
                .fold(field.zero(), |acc, (a, b)| field.add(&acc, &field.mul(a, b)));
            if !field.is_zero(&dot) {
                return Err(GeometryError::NotTangent);
            }
        }
        let m = self.arity;
        let mut h = Matrix::zeros(field, m, m);
        for (c, l) in ell.iter().enumerate() {
            if field.is_zero(l) {
                continue;
            }
            let jet = &self.jets[c];
            for i in 0..m {
                for j in i..m {
                    let e = self.ring.hessian_entry(jet, i, j);
                    if field.is_zero(e) {
                        continue;
                    }
                    let v = field.add(h.get(i, j), &field.mul(l, e));
                    h.set(i, j, v.clone());
                    if i != j {
                        h.set(j, i, v);
                    }
                }
            }
        }
        Ok(h)
    }
}

/// Hessian of `ell . embed` at `p`; `ell` must annihilate the tangent frame.
pub fn contracted_hessian<F: Field>(
    model: &VarietyModel,
    field: &F,
    p: &ParamPoint<F::Elem>,
    ell: &[F::Elem],
) -> Result<Matrix<F::Elem>, GeometryError> {
    PointJets::new(model, field, p)?.contract(field, ell)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::{kernel_basis, rank, PrimeField, Rationals, Ring};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const FIXTURES: [&str; 9] = [
        "segre:1,1",
        "segre:1,1,1",
        "segre:1,2,2",
        "veronese:d=2,n=2",
        "veronese:d=3,n=2",
        "sv:d=1,2;n=1,2",
        "grass:k=1,n=4",
        "grass:k=2,n=5",
        "gm:d=6",
    ];

    fn model(s: &str) -> VarietyModel {
        VarietyModel::new(s.parse().unwrap()).unwrap()
    }

    #[test]
    fn frame_has_full_rank_and_contains_point() {
        let f = PrimeField::default();
        for s in FIXTURES {
            let m = model(s);
            for seed in 0..5 {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let p = sample_point(&m, &f, &mut rng);
                let frame = tangent_frame(&m, &f, &p).unwrap().matrix;
                assert_eq!(rank(&f, &frame), m.n + 1, "{s} seed {seed}");
                let mut with_point = frame.clone();
                with_point.push_row(&embed(&m, &f, &p).unwrap()).unwrap();
                assert_eq!(rank(&f, &with_point), m.n + 1, "{s}: Euler relation");
            }
        }
    }

    #[test]
    fn scale_row_is_point_direction() {
        let f = PrimeField::default();
        let m = model("veronese:d=2,n=2");
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = sample_point(&m, &f, &mut rng);
        let frame = tangent_frame(&m, &f, &p).unwrap().matrix;
        let point = embed(&m, &f, &p).unwrap();
        let inv = f.inv(p.scale()).unwrap();
        let scaled: Vec<u64> = point.iter().map(|x| f.mul(x, &inv)).collect();
        assert_eq!(frame.row(m.scale_index()), scaled.as_slice());
    }

    #[test]
    fn hessians_are_symmetric_and_scale_direction_is_in_kernel() {
        let f = PrimeField::default();
        for s in FIXTURES {
            let m = model(s);
            let mut rng = ChaCha8Rng::seed_from_u64(21);
            let p = sample_point(&m, &f, &mut rng);
            let pj = PointJets::new(&m, &f, &p).unwrap();
            let normals = kernel_basis(&f, &pj.frame().matrix);
            for ell in normals.row_iter() {
                let h = pj.contract(&f, ell).unwrap();
                assert!(h.is_symmetric(), "{s}");
                let sc = m.scale_index();
                for j in 0..m.param_arity {
                    assert_eq!(*h.get(sc, j), 0, "{s}: scale row must vanish");
                }
            }
        }
    }

    #[test]
    fn zero_functional_gives_zero_hessian() {
        let f = PrimeField::default();
        let m = model("grass:k=1,n=4");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = sample_point(&m, &f, &mut rng);
        let h = contracted_hessian(&m, &f, &p, &vec![0; m.coords()]).unwrap();
        assert!(h.is_zero(&f));
    }

    #[test]
    fn non_tangent_functional_is_rejected() {
        let f = PrimeField::default();
        let m = model("segre:1,1");
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = sample_point(&m, &f, &mut rng);
        let err = contracted_hessian(&m, &f, &p, &[1, 0, 0, 0]).unwrap_err();
        assert_eq!(err, GeometryError::NotTangent);
    }

    #[test]
    fn quadric_surface_second_fundamental_form_is_nondegenerate() {
        let f = PrimeField::default();
        let m = model("segre:1,1");
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = sample_point(&m, &f, &mut rng);
        let pj = PointJets::new(&m, &f, &p).unwrap();
        let normals = kernel_basis(&f, &pj.frame().matrix);
        assert_eq!(normals.rows(), 1);
        let h = pj.contract(&f, normals.row(0)).unwrap();
        let chart = h.select(&[0, 1], &[0, 1]);
        assert_eq!(rank(&f, &chart), 2);
    }

    #[test]
    fn quadric_veronese_hessian_is_nonzero() {
        let f = PrimeField::default();
        let m = model("veronese:d=2,n=2");
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let p = sample_point(&m, &f, &mut rng);
        let pj = PointJets::new(&m, &f, &p).unwrap();
        let normals = kernel_basis(&f, &pj.frame().matrix);
        assert_eq!(normals.rows(), 3);
        let h = pj.contract(&f, normals.row(0)).unwrap();
        assert!(!h.is_zero(&f));
    }

    #[test]
    fn gaussian_at_zero_variance_is_rational_normal_curve() {
        let q = Rationals::default();
        let m = model("gm:d=7");
        let mu = q.from_i64(3);
        let p = ParamPoint::new(&q, vec![mu.clone(), q.zero(), q.from_i64(2)]).unwrap();
        let v = embed(&m, &q, &p).unwrap();
        for (j, x) in v.iter().enumerate() {
            assert_eq!(*x, q.mul(&q.from_i64(2), &q.pow(&mu, j as u32)));
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let f = PrimeField::default();
        let m = model("segre:1,1");
        let a = sample_point(&m, &f, &mut ChaCha8Rng::seed_from_u64(42));
        let b = sample_point(&m, &f, &mut ChaCha8Rng::seed_from_u64(42));
        let c = sample_point(&m, &f, &mut ChaCha8Rng::seed_from_u64(43));
        assert_eq!(a, b);
        assert_eq!(a.arity(), 3);
        assert_ne!(a, c);
        let q = Rationals::new(1000).unwrap();
        let r = sample_point(&m, &q, &mut ChaCha8Rng::seed_from_u64(42));
        for x in r.coordinates() {
            let v = crate::exactla::rational_to_i128(x).unwrap();
            assert!((-1000..=1000).contains(&v));
        }
    }
}
