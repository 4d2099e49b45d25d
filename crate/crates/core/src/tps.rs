//! Truncated power series in a single complex variable.
//!
//! A `Tps` of length `n` holds the coefficients `c_0 .. c_{n-1}` of
//! `c_0 + c_1 ε + ... + c_{n-1} ε^{n-1}`; every operation truncates at the
//! length of its operands. Taylor chains in ω are carried as `Tps` values
//! with `ε = ω − ω₀`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::C64;

#[derive(Debug, Clone, PartialEq)]
pub struct Tps {
    c: Vec<C64>,
}

impl Tps {
    pub fn zero(len: usize) -> Self {
        assert!(len >= 1, "series length must be at least one");
        Tps {
            c: vec![C64::new(0.0, 0.0); len],
        }
    }

    pub fn constant(value: C64, len: usize) -> Self {
        let mut t = Self::zero(len);
        t.c[0] = value;
        t
    }

    /// `value + slope·ε`.
    pub fn linear(value: C64, slope: C64, len: usize) -> Self {
        let mut t = Self::constant(value, len);
        if len > 1 {
            t.c[1] = slope;
        }
        t
    }

    pub fn from_coeffs(c: Vec<C64>) -> Self {
        assert!(!c.is_empty(), "series length must be at least one");
        Tps { c }
    }

    /// Taylor series of `exp(value + slope·ε)`.
    pub fn exp_linear(value: C64, slope: C64, len: usize) -> Self {
        let mut c = Vec::with_capacity(len);
        let mut term = value.exp();
        for n in 0..len {
            c.push(term);
            term = term * slope / (n as f64 + 1.0);
        }
        Tps { c }
    }

    pub fn len(&self) -> usize {
        self.c.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coeffs(&self) -> &[C64] {
        &self.c
    }

    pub fn into_coeffs(self) -> Vec<C64> {
        self.c
    }

    pub fn value(&self) -> C64 {
        self.c[0]
    }

    /// Keep the first `len` coefficients (padding with zeros if longer).
    pub fn truncated(&self, len: usize) -> Self {
        let mut c: Vec<C64> = self.c.iter().take(len).copied().collect();
        c.resize(len, C64::new(0.0, 0.0));
        Tps { c }
    }

    pub fn scale(&self, k: C64) -> Self {
        Tps {
            c: self.c.iter().map(|&x| x * k).collect(),
        }
    }

    pub fn scale_real(&self, k: f64) -> Self {
        Tps {
            c: self.c.iter().map(|&x| x * k).collect(),
        }
    }

    /// Coefficients with index shifted up by one (multiplication by ε).
    pub fn shift_up(&self) -> Self {
        let mut c = vec![C64::new(0.0, 0.0); self.c.len()];
        let len = c.len();
        if len > 0 {
            c[1..].copy_from_slice(&self.c[..len - 1]);
        }
        Tps { c }
    }

    /// Drop the first `k` coefficients (division by ε^k of a series known
    /// to vanish to that order). The result is `k` entries shorter.
    pub fn shift_down(&self, k: usize) -> Self {
        assert!(k < self.c.len());
        Tps {
            c: self.c[k..].to_vec(),
        }
    }

    /// Evaluate the polynomial at ε.
    pub fn eval(&self, eps: C64) -> C64 {
        self.c
            .iter()
            .rev()
            .fold(C64::new(0.0, 0.0), |acc, &x| acc * eps + x)
    }

    pub fn recip(&self) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        assert!(a0.norm() > 0.0, "reciprocal of a series with zero constant term");
        let mut r = vec![C64::new(0.0, 0.0); n];
        r[0] = a0.inv();
        for k in 1..n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                s += self.c[j] * r[k - j];
            }
            r[k] = -s * r[0];
        }
        Tps { c: r }
    }

    pub fn div(&self, other: &Tps) -> Self {
        self * &other.recip()
    }

    /// `self^p` for a series with constant term 1 (binomial series).
    ///
    /// Uses the recurrence `a_0 b_k = (1/k) Σ_{j=1}^{k} (p·j − k + j) a_j b_{k−j}`
    /// for `b = a^p`.
    pub fn powf_unit(&self, p: f64) -> Self {
        let n = self.c.len();
        let a0 = self.c[0];
        assert!(
            (a0 - C64::new(1.0, 0.0)).norm() < 1e-12,
            "powf_unit requires unit constant term"
        );
        let mut b = vec![C64::new(0.0, 0.0); n];
        b[0] = C64::new(1.0, 0.0);
        for k in 1..n {
            let mut s = C64::new(0.0, 0.0);
            for j in 1..=k {
                let w = p * j as f64 - (k - j) as f64;
                s += self.c[j] * b[k - j] * w;
            }
            b[k] = s / (k as f64);
        }
        Tps { c: b }
    }

    /// Evaluate `Σ_m coeffs[m]·(self − self_0)^m` (composition with a
    /// function given by its Taylor coefficients about `self_0`).
    pub fn compose(&self, coeffs: &[C64]) -> Self {
        let n = self.c.len();
        let mut delta = self.clone();
        delta.c[0] = C64::new(0.0, 0.0);
        let mut out = Tps::zero(n);
        let mut power = Tps::constant(C64::new(1.0, 0.0), n);
        for (m, &cm) in coeffs.iter().enumerate().take(n) {
            if m > 0 {
                power = &power * &delta;
            }
            for k in 0..n {
                out.c[k] += cm * power.c[k];
            }
        }
        out
    }

    pub fn max_norm(&self) -> f64 {
        self.c.iter().map(|x| x.norm()).fold(0.0, f64::max)
    }
}

impl Index<usize> for Tps {
    type Output = C64;
    fn index(&self, i: usize) -> &C64 {
        &self.c[i]
    }
}

impl IndexMut<usize> for Tps {
    fn index_mut(&mut self, i: usize) -> &mut C64 {
        &mut self.c[i]
    }
}

impl<'a> Add<&'a Tps> for &'a Tps {
    type Output = Tps;
    fn add(self, rhs: &Tps) -> Tps {
        let n = self.c.len().min(rhs.c.len());
        Tps {
            c: (0..n).map(|i| self.c[i] + rhs.c[i]).collect(),
        }
    }
}

impl Add for Tps {
    type Output = Tps;
    fn add(self, rhs: Tps) -> Tps {
        &self + &rhs
    }
}

impl<'a> Sub<&'a Tps> for &'a Tps {
    type Output = Tps;
    fn sub(self, rhs: &Tps) -> Tps {
        let n = self.c.len().min(rhs.c.len());
        Tps {
            c: (0..n).map(|i| self.c[i] - rhs.c[i]).collect(),
        }
    }
}

impl Sub for Tps {
    type Output = Tps;
    fn sub(self, rhs: Tps) -> Tps {
        &self - &rhs
    }
}

impl<'a> Mul<&'a Tps> for &'a Tps {
    type Output = Tps;
    fn mul(self, rhs: &Tps) -> Tps {
        let n = self.c.len().min(rhs.c.len());
        let mut c = vec![Complex64::new(0.0, 0.0); n];
        for i in 0..n {
            let a = self.c[i];
            if a == Complex64::new(0.0, 0.0) {
                continue;
            }
            for j in 0..n - i {
                c[i + j] += a * rhs.c[j];
            }
        }
        Tps { c }
    }
}

impl Mul for Tps {
    type Output = Tps;
    fn mul(self, rhs: Tps) -> Tps {
        &self * &rhs
    }
}

impl Neg for Tps {
    type Output = Tps;
    fn neg(self) -> Tps {
        Tps {
            c: self.c.into_iter().map(|x| -x).collect(),
        }
    }
}

impl AddAssign<&Tps> for Tps {
    fn add_assign(&mut self, rhs: &Tps) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a += *b;
        }
    }
}

impl SubAssign<&Tps> for Tps {
    fn sub_assign(&mut self, rhs: &Tps) {
        for (a, b) in self.c.iter_mut().zip(rhs.c.iter()) {
            *a -= *b;
        }
    }
}
