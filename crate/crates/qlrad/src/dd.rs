//! Minimal double-double arithmetic.
//!
//! The exponent maps of this crate involve cancellations of the form
//! `alpha - p*beta + N + a*beta` whose result can be orders of magnitude
//! smaller than the summands, divided by a denominator `N - p + a` that is
//! allowed to approach zero. Evaluating these in plain f64 loses enough
//! digits near the boundary of the parameter domain to break the exact
//! algebraic identities the verification suite audits at 1e-12. The handful
//! of error-free transformations below (Knuth two-sum, FMA two-product)
//! keep those identities tight across the whole domain.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Dd {
    pub hi: f64,
    pub lo: f64,
}

#[inline]
fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    (s, err)
}

#[inline]
fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let err = b - (s - a);
    (s, err)
}

#[inline]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let err = a.mul_add(b, -p);
    (p, err)
}

impl Dd {
    pub fn from_f64(x: f64) -> Self {
        Dd { hi: x, lo: 0.0 }
    }

    /// Exact product of two f64 values.
    pub fn prod(a: f64, b: f64) -> Self {
        let (hi, lo) = two_prod(a, b);
        Dd { hi, lo }
    }

    pub fn add(self, other: Dd) -> Dd {
        let (s1, s2) = two_sum(self.hi, other.hi);
        let s2 = s2 + self.lo + other.lo;
        let (hi, lo) = quick_two_sum(s1, s2);
        Dd { hi, lo }
    }

    pub fn add_f64(self, x: f64) -> Dd {
        self.add(Dd::from_f64(x))
    }

    pub fn sub(self, other: Dd) -> Dd {
        self.add(other.neg())
    }

    pub fn neg(self) -> Dd {
        Dd {
            hi: -self.hi,
            lo: -self.lo,
        }
    }

    pub fn mul_f64(self, x: f64) -> Dd {
        let (p1, p2) = two_prod(self.hi, x);
        let p2 = p2 + self.lo * x;
        let (hi, lo) = quick_two_sum(p1, p2);
        Dd { hi, lo }
    }

    pub fn div(self, other: Dd) -> Dd {
        let q1 = self.hi / other.hi;
        let r = self.sub(other.mul_f64(q1));
        let q2 = r.hi / other.hi;
        let r = r.sub(other.mul_f64(q2));
        let q3 = r.hi / other.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        let (hi, lo2) = quick_two_sum(hi, lo + q3);
        Dd { hi, lo: lo2 }
    }

    pub fn max(self, other: Dd) -> Dd {
        if self.to_f64() >= other.to_f64() {
            self
        } else {
            other
        }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_is_exact() {
        let a = 1.0 + f64::EPSILON;
        let p = Dd::prod(a, a);
        // (1+e)^2 = 1 + 2e + e^2; f64 rounds away the e^2 term
        assert_eq!(p.hi, a * a);
        assert!(p.lo != 0.0 || a * a == 1.0 + 2.0 * f64::EPSILON + f64::EPSILON * f64::EPSILON);
    }

    #[test]
    fn cancellation_survives() {
        // (1e16 + 1) - 1e16 in f64 is 2; in dd it is exactly 1
        let x = Dd::from_f64(1e16).add_f64(1.0).add_f64(-1e16);
        assert_eq!(x.to_f64(), 1.0);
    }

    #[test]
    fn division_roundtrip() {
        let a = Dd::prod(3.0, 1.0 / 7.0);
        let b = a.div(Dd::from_f64(3.0)).mul_f64(7.0);
        assert!((b.to_f64() - 1.0).abs() < 1e-30);
    }
}
