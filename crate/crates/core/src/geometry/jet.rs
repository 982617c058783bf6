//! Truncated Taylor expansions (value, gradient, Hessian) over a field.
//!
//! Evaluating a polynomial map on jets seeded with the coordinate variables
//! yields its exact first and second partial derivatives at a point.

use crate::exactla::{Field, Ring};

#[derive(Debug, Clone, PartialEq)]
pub struct Jet<E> {
    pub value: E,
    pub grad: Vec<E>,
    /// Upper triangle of the Hessian, row-major; empty for first-order jets.
    pub hess: Vec<E>,
    constant: bool,
}

#[derive(Debug, Clone)]
pub struct JetRing<'a, F> {
    field: &'a F,
    vars: usize,
    second_order: bool,
}

impl<'a, F: Field> JetRing<'a, F> {
    pub fn new(field: &'a F, vars: usize, second_order: bool) -> Self {
        Self {
            field,
            vars,
            second_order,
        }
    }

    fn tri_len(&self) -> usize {
        if self.second_order {
            self.vars * (self.vars + 1) / 2
        } else {
            0
        }
    }

    pub fn tri_index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i <= j { (i, j) } else { (j, i) };
        i * self.vars - i * (i + 1) / 2 + j
    }

    pub fn constant(&self, value: F::Elem) -> Jet<F::Elem> {
        let z = self.field.zero();
        Jet {
            value,
            grad: vec![z.clone(); self.vars],
            hess: vec![z; self.tri_len()],
            constant: true,
        }
    }

    /// The coordinate function `x_index`, evaluated at `value`.
    pub fn variable(&self, index: usize, value: F::Elem) -> Jet<F::Elem> {
        let mut j = self.constant(value);
        j.grad[index] = self.field.one();
        j.constant = false;
        j
    }

    pub fn hessian_entry<'j>(&self, jet: &'j Jet<F::Elem>, i: usize, j: usize) -> &'j F::Elem {
        &jet.hess[self.tri_index(i, j)]
    }

    fn scale(&self, c: &F::Elem, b: &Jet<F::Elem>) -> Jet<F::Elem> {
        let f = self.field;
        Jet {
            value: f.mul(c, &b.value),
            grad: b.grad.iter().map(|x| f.mul(c, x)).collect(),
            hess: b.hess.iter().map(|x| f.mul(c, x)).collect(),
            constant: b.constant,
        }
    }
}

impl<F: Field> Ring for JetRing<'_, F> {
    type Elem = Jet<F::Elem>;

    fn zero(&self) -> Self::Elem {
        self.constant(self.field.zero())
    }

    fn one(&self) -> Self::Elem {
        self.constant(self.field.one())
    }

    fn from_i64(&self, v: i64) -> Self::Elem {
        self.constant(self.field.from_i64(v))
    }

    fn add(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let f = self.field;
        Jet {
            value: f.add(&a.value, &b.value),
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| f.add(x, y)).collect(),
            hess: a.hess.iter().zip(&b.hess).map(|(x, y)| f.add(x, y)).collect(),
            constant: a.constant && b.constant,
        }
    }

    fn sub(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        let f = self.field;
        Jet {
            value: f.sub(&a.value, &b.value),
            grad: a.grad.iter().zip(&b.grad).map(|(x, y)| f.sub(x, y)).collect(),
            hess: a.hess.iter().zip(&b.hess).map(|(x, y)| f.sub(x, y)).collect(),
            constant: a.constant && b.constant,
        }
    }

    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem {
        if a.constant {
            return self.scale(&a.value, b);
        }
        if b.constant {
            return self.scale(&b.value, a);
        }
        let f = self.field;
        let value = f.mul(&a.value, &b.value);
        let grad: Vec<_> = a
            .grad
            .iter()
            .zip(&b.grad)
            .map(|(ga, gb)| f.add(&f.mul(&a.value, gb), &f.mul(&b.value, ga)))
            .collect();
        let mut hess = Vec::with_capacity(a.hess.len());
        if self.second_order {
            let m = self.vars;
            for i in 0..m {
                for j in i..m {
                    let k = hess.len();
                    let mut h = f.add(&f.mul(&a.value, &b.hess[k]), &f.mul(&b.value, &a.hess[k]));
                    if !(f.is_zero(&a.grad[i]) || f.is_zero(&b.grad[j])) {
                        h = f.add(&h, &f.mul(&a.grad[i], &b.grad[j]));
                    }
                    if !(f.is_zero(&a.grad[j]) || f.is_zero(&b.grad[i])) {
                        h = f.add(&h, &f.mul(&a.grad[j], &b.grad[i]));
                    }
                    hess.push(h);
                }
            }
        }
        Jet {
            value,
            grad,
            hess,
            constant: false,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::PrimeField;

    #[test]
    fn product_rule_on_monomial() {
        // f = x^2 y at (3, 5): grad (30, 9), hess [[10, 6], [6, 0]]
        let f = PrimeField::default();
        let r = JetRing::new(&f, 2, true);
        let x = r.variable(0, 3);
        let y = r.variable(1, 5);
        let p = r.mul(&r.mul(&x, &x), &y);
        assert_eq!(p.value, 45);
        assert_eq!(p.grad, vec![30, 9]);
        assert_eq!(*r.hessian_entry(&p, 0, 0), 10);
        assert_eq!(*r.hessian_entry(&p, 0, 1), 6);
        assert_eq!(*r.hessian_entry(&p, 1, 0), 6);
        assert_eq!(*r.hessian_entry(&p, 1, 1), 0);
    }

    #[test]
    fn first_order_ring_skips_hessian() {
        let f = PrimeField::default();
        let r = JetRing::new(&f, 3, false);
        let x = r.variable(2, 4);
        let p = r.mul(&x, &r.add(&x, &r.one()));
        assert_eq!(p.value, 20);
        assert_eq!(p.grad, vec![0, 0, 9]);
        assert!(p.hess.is_empty());
    }
}
