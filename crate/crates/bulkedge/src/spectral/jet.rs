//! Truncated Taylor series `Σ c_k t^k` used to get exact derivatives of the
//! switch profiles and their primitives (`f^(k)(x0) = k! c_k`).

use std::ops::{Add, Mul, Neg, Sub};

#[derive(Clone, Debug, PartialEq)]
pub struct Jet {
    pub coeffs: Vec<f64>,
}

impl Jet {
    pub fn constant(c: f64, order: usize) -> Self {
        let mut coeffs = vec![0.0; order + 1];
        coeffs[0] = c;
        Jet { coeffs }
    }

    /// The identity map expanded at `x0`.
    pub fn variable(x0: f64, order: usize) -> Self {
        let mut j = Jet::constant(x0, order);
        if order > 0 {
            j.coeffs[1] = 1.0;
        }
        j
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    pub fn value(&self) -> f64 {
        self.coeffs[0]
    }

    /// `k`-th derivative at the expansion point.
    pub fn derivative(&self, k: usize) -> f64 {
        if k > self.order() {
            return 0.0;
        }
        let fact: f64 = (1..=k).map(|i| i as f64).product();
        self.coeffs[k] * fact
    }

    pub fn derivatives(&self) -> Vec<f64> {
        (0..=self.order()).map(|k| self.derivative(k)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        Jet { coeffs: self.coeffs.iter().map(|c| c * s).collect() }
    }

    pub fn offset(&self, s: f64) -> Self {
        let mut j = self.clone();
        j.coeffs[0] += s;
        j
    }

    pub fn exp(&self) -> Self {
        let n = self.coeffs.len();
        let b = &self.coeffs;
        let mut a = vec![0.0; n];
        a[0] = b[0].exp();
        for k in 1..n {
            let s: f64 = (1..=k).map(|j| j as f64 * b[j] * a[k - j]).sum();
            a[k] = s / k as f64;
        }
        Jet { coeffs: a }
    }

    /// Antiderivative with the given constant term; the top coefficient is
    /// dropped so the order is preserved.
    pub fn integrate(&self, c0: f64) -> Self {
        let n = self.coeffs.len();
        let mut a = vec![0.0; n];
        a[0] = c0;
        for k in 1..n {
            a[k] = self.coeffs[k - 1] / k as f64;
        }
        Jet { coeffs: a }
    }

    /// Evaluates the polynomial `Σ p_k y^k` on this jet (Horner).
    pub fn polynomial(&self, p: &[f64]) -> Self {
        let order = self.order();
        let mut acc = Jet::constant(0.0, order);
        for &pk in p.iter().rev() {
            acc = (&acc * self).offset(pk);
        }
        acc
    }
}

impl Add for &Jet {
    type Output = Jet;
    fn add(self, rhs: &Jet) -> Jet {
        Jet { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a + b).collect() }
    }
}

impl Sub for &Jet {
    type Output = Jet;
    fn sub(self, rhs: &Jet) -> Jet {
        Jet { coeffs: self.coeffs.iter().zip(&rhs.coeffs).map(|(a, b)| a - b).collect() }
    }
}

impl Neg for &Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for &Jet {
    type Output = Jet;
    fn mul(self, rhs: &Jet) -> Jet {
        let n = self.coeffs.len().min(rhs.coeffs.len());
        let mut c = vec![0.0; n];
        for (k, ck) in c.iter_mut().enumerate() {
            *ck = (0..=k).map(|j| self.coeffs[j] * rhs.coeffs[k - j]).sum();
        }
        Jet { coeffs: c }
    }
}
