//! Compensated (Kahan–Neumaier) summation for long running means.

use std::ops::AddAssign;

use num_complex::Complex64 as C64;

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    s: f64,
    c: f64,
}

impl NeumaierSum {
    pub fn new(value: f64) -> Self {
        Self { s: value, c: 0.0 }
    }

    pub fn sum(&self) -> f64 {
        self.s + self.c
    }

    /// Combines two partial sums, carrying both compensation terms.
    pub fn merge(&self, other: &NeumaierSum) -> NeumaierSum {
        let mut out = *self;
        out += other.s;
        out += other.c;
        out
    }
}

impl AddAssign<f64> for NeumaierSum {
    #[inline]
    fn add_assign(&mut self, rhs: f64) {
        let t = self.s + rhs;
        if self.s.abs() >= rhs.abs() {
            self.c += (self.s - t) + rhs;
        } else {
            self.c += (rhs - t) + self.s;
        }
        self.s = t;
    }
}

/// Compensated sum of complex numbers, real and imaginary parts kept separately.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ComplexSum {
    re: NeumaierSum,
    im: NeumaierSum,
}

impl ComplexSum {
    pub fn new(value: C64) -> Self {
        Self { re: NeumaierSum::new(value.re), im: NeumaierSum::new(value.im) }
    }

    pub fn sum(&self) -> C64 {
        C64::new(self.re.sum(), self.im.sum())
    }

    pub fn merge(&self, other: &ComplexSum) -> ComplexSum {
        ComplexSum { re: self.re.merge(&other.re), im: self.im.merge(&other.im) }
    }
}

impl AddAssign<C64> for ComplexSum {
    #[inline]
    fn add_assign(&mut self, rhs: C64) {
        self.re += rhs.re;
        self.im += rhs.im;
    }
}
