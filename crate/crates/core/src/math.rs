//! Float math shims (`libm`-backed, usable without `std`) and compensated
//! summation used by every inner product in the crate.

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn log2(x: f64) -> f64 {
    libm::log2(x)
}

#[inline]
pub fn sin(x: f64) -> f64 {
    libm::sin(x)
}

#[inline]
pub fn cos(x: f64) -> f64 {
    libm::cos(x)
}

#[inline]
pub fn pow(x: f64, y: f64) -> f64 {
    libm::pow(x, y)
}

#[inline]
pub fn round(x: f64) -> f64 {
    libm::round(x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

pub const PI: f64 = core::f64::consts::PI;

/// Neumaier-compensated accumulator. Keeps reductions accurate to a few ulps
/// independently of length, which the exactness contracts on summation by
/// parts rely on, and makes reduction order irrelevant in practice.
#[derive(Clone, Copy, Debug, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, v: f64) {
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Compensated dot product of equal-length slices.
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = KahanSum::new();
    for (x, y) in a.iter().zip(b) {
        acc.add(x * y);
    }
    acc.value()
}

/// Compensated sum of squares.
pub fn sum_sq(a: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for x in a {
        acc.add(x * x);
    }
    acc.value()
}

/// Compensated sum of absolute values.
pub fn sum_abs(a: &[f64]) -> f64 {
    let mut acc = KahanSum::new();
    for x in a {
        acc.add(x.abs());
    }
    acc.value()
}

/// Euclidean norm of a short vector (dimension ≤ 2 in this crate).
#[inline]
pub fn norm2(v: &[f64]) -> f64 {
    sqrt(v.iter().map(|x| x * x).sum())
}

/// Sample mean and standard error of the mean. Returns `None` for the
/// standard error when fewer than two samples are available.
pub fn mean_se(samples: &[f64]) -> (f64, Option<f64>) {
    let n = samples.len();
    if n == 0 {
        return (0.0, None);
    }
    let mut acc = KahanSum::new();
    for s in samples {
        acc.add(*s);
    }
    let mean = acc.value() / n as f64;
    if n < 2 {
        return (mean, None);
    }
    let mut var = KahanSum::new();
    for s in samples {
        let d = s - mean;
        var.add(d * d);
    }
    let sd = sqrt(var.value() / (n - 1) as f64);
    (mean, Some(sd / sqrt(n as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kahan_recovers_cancellation() {
        let mut acc = KahanSum::new();
        acc.add(1e16);
        for _ in 0..10 {
            acc.add(1.0);
        }
        acc.add(-1e16);
        assert_eq!(acc.value(), 10.0);
    }

    #[test]
    fn mean_se_basics() {
        let (m, se) = mean_se(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se.unwrap() - 1.0).abs() < 1e-15);
        let (m1, se1) = mean_se(&[5.0]);
        assert_eq!(m1, 5.0);
        assert!(se1.is_none());
    }
}
