//! Homogeneous polynomials in up to three variables with exact derivatives.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// One term `coef * x^p0 * y^p1 * z^p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Monomial {
    pub coef: f64,
    pub powers: [u32; 3],
}

impl Monomial {
    pub fn new(coef: f64, powers: [u32; 3]) -> Self {
        Self { coef, powers }
    }

    pub fn degree(&self) -> u32 {
        self.powers.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Polynomial {
    terms: Vec<Monomial>,
}

#[inline]
fn ipow(x: f64, p: u32) -> f64 {
    match p {
        0 => 1.0,
        1 => x,
        2 => x * x,
        _ => x.powi(p as i32),
    }
}

impl Polynomial {
    pub fn new(terms: impl IntoIterator<Item = Monomial>) -> Self {
        let mut p = Self { terms: terms.into_iter().collect() };
        p.simplify();
        p
    }

    pub fn terms(&self) -> &[Monomial] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    /// Degree if every term has the same total degree.
    pub fn homogeneous_degree(&self) -> Option<u32> {
        let d = self.terms.first()?.degree();
        self.terms.iter().all(|t| t.degree() == d).then_some(d)
    }

    /// Highest variable index that appears with a nonzero power, plus one.
    pub fn variables_used(&self) -> usize {
        self.terms
            .iter()
            .map(|t| t.powers.iter().rposition(|&p| p > 0).map_or(0, |i| i + 1))
            .max()
            .unwrap_or(0)
    }

    fn simplify(&mut self) {
        self.terms.sort_by_key(|t| std::cmp::Reverse(t.powers));
        let mut out: Vec<Monomial> = Vec::with_capacity(self.terms.len());
        for t in self.terms.drain(..) {
            match out.last_mut() {
                Some(last) if last.powers == t.powers => last.coef += t.coef,
                _ => out.push(t),
            }
        }
        out.retain(|t| t.coef != 0.0);
        self.terms = out;
    }

    pub fn add(&self, other: &Polynomial) -> Polynomial {
        Polynomial::new(self.terms.iter().chain(other.terms.iter()).copied())
    }

    pub fn mul(&self, other: &Polynomial) -> Polynomial {
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for a in &self.terms {
            for b in &other.terms {
                terms.push(Monomial::new(
                    a.coef * b.coef,
                    [a.powers[0] + b.powers[0], a.powers[1] + b.powers[1], a.powers[2] + b.powers[2]],
                ));
            }
        }
        Polynomial::new(terms)
    }

    pub fn pow(&self, k: u32) -> Polynomial {
        let mut acc = Polynomial::new([Monomial::new(1.0, [0, 0, 0])]);
        for _ in 0..k {
            acc = acc.mul(self);
        }
        acc
    }

    pub fn scale(&self, c: f64) -> Polynomial {
        Polynomial::new(self.terms.iter().map(|t| Monomial::new(t.coef * c, t.powers)))
    }

    pub fn eval(&self, x: &Vector3<f64>) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coef * ipow(x[0], t.powers[0]) * ipow(x[1], t.powers[1]) * ipow(x[2], t.powers[2]))
            .sum()
    }

    pub fn gradient(&self, x: &Vector3<f64>) -> Vector3<f64> {
        let mut g = Vector3::zeros();
        for t in &self.terms {
            let p = t.powers;
            for i in 0..3 {
                if p[i] == 0 {
                    continue;
                }
                let mut v = t.coef * p[i] as f64;
                for (j, &pj) in p.iter().enumerate() {
                    v *= if j == i { ipow(x[j], pj - 1) } else { ipow(x[j], pj) };
                }
                g[i] += v;
            }
        }
        g
    }

    pub fn hessian(&self, x: &Vector3<f64>) -> Matrix3<f64> {
        let mut h = Matrix3::zeros();
        for t in &self.terms {
            for i in 0..3 {
                for k in i..3 {
                    let mut p = t.powers;
                    let mut c = t.coef;
                    if p[i] == 0 {
                        continue;
                    }
                    c *= p[i] as f64;
                    p[i] -= 1;
                    if p[k] == 0 {
                        continue;
                    }
                    c *= p[k] as f64;
                    p[k] -= 1;
                    let v = c * ipow(x[0], p[0]) * ipow(x[1], p[1]) * ipow(x[2], p[2]);
                    h[(i, k)] += v;
                    if i != k {
                        h[(k, i)] += v;
                    }
                }
            }
        }
        h
    }

    /// Rotational lift of a profile polynomial in (horizontal, vertical)
    /// variables: `u^(2k) w^m` becomes `(x^2 + y^2)^k z^m`.
    ///
    /// Returns `None` if some term has an odd power of the horizontal variable.
    pub fn rotational_lift(&self) -> Option<Polynomial> {
        let radial = Polynomial::new([Monomial::new(1.0, [2, 0, 0]), Monomial::new(1.0, [0, 2, 0])]);
        let mut out = Polynomial::default();
        for t in &self.terms {
            if t.powers[0] % 2 != 0 || t.powers[2] != 0 {
                return None;
            }
            let vertical = Polynomial::new([Monomial::new(t.coef, [0, 0, t.powers[1]])]);
            out = out.add(&radial.pow(t.powers[0] / 2).mul(&vertical));
        }
        Some(out)
    }
}
