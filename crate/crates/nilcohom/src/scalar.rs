//! Exact scalars: elements of the Gaussian rationals Q(i).
//!
//! Every quantity in the engine is either one of these or a polynomial with
//! these as coefficients, so equality tests throughout the crate are exact.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, MulAssign, Neg, Sub, SubAssign};

/// An element `re + im*i` of Q(i), with both parts reduced big rationals.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GaussRational {
    pub re: BigRational,
    pub im: BigRational,
}

impl GaussRational {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        GaussRational { re, im }
    }

    pub fn zero() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::zero(),
        }
    }

    pub fn one() -> Self {
        GaussRational {
            re: BigRational::one(),
            im: BigRational::zero(),
        }
    }

    /// The imaginary unit.
    pub fn i() -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        GaussRational {
            re: BigRational::from_integer(BigInt::from(n)),
            im: BigRational::zero(),
        }
    }

    /// `a/b` as a real rational. Panics if `b == 0`.
    pub fn from_ratio(a: i64, b: i64) -> Self {
        GaussRational {
            re: BigRational::new(BigInt::from(a), BigInt::from(b)),
            im: BigRational::zero(),
        }
    }

    /// `(a/b) * i`.
    pub fn from_ratio_i(a: i64, b: i64) -> Self {
        GaussRational {
            re: BigRational::zero(),
            im: BigRational::new(BigInt::from(a), BigInt::from(b)),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.re.is_one() && self.im.is_zero()
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    pub fn conj(&self) -> Self {
        GaussRational {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    /// `re^2 + im^2`, a nonnegative rational.
    pub fn norm_sq(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    pub fn inv(&self) -> Self {
        let n = self.norm_sq();
        assert!(!n.is_zero(), "division by zero in Q(i)");
        GaussRational {
            re: &self.re / &n,
            im: -(&self.im / &n),
        }
    }

    /// Sign of a real element; panics if the imaginary part is nonzero.
    pub fn real_sign(&self) -> i8 {
        assert!(self.im.is_zero(), "real_sign on non-real scalar");
        if self.re.is_zero() {
            0
        } else if self.re.is_positive() {
            1
        } else {
            -1
        }
    }
}

impl Add for &GaussRational {
    type Output = GaussRational;
    fn add(self, rhs: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re + &rhs.re,
            im: &self.im + &rhs.im,
        }
    }
}

impl Sub for &GaussRational {
    type Output = GaussRational;
    fn sub(self, rhs: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re - &rhs.re,
            im: &self.im - &rhs.im,
        }
    }
}

impl Mul for &GaussRational {
    type Output = GaussRational;
    fn mul(self, rhs: &GaussRational) -> GaussRational {
        GaussRational {
            re: &self.re * &rhs.re - &self.im * &rhs.im,
            im: &self.re * &rhs.im + &self.im * &rhs.re,
        }
    }
}

impl Div for &GaussRational {
    type Output = GaussRational;
    fn div(self, rhs: &GaussRational) -> GaussRational {
        self * &rhs.inv()
    }
}

impl Neg for &GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        GaussRational {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
}

impl Neg for GaussRational {
    type Output = GaussRational;
    fn neg(self) -> GaussRational {
        GaussRational {
            re: -self.re,
            im: -self.im,
        }
    }
}

impl Add for GaussRational {
    type Output = GaussRational;
    fn add(self, rhs: GaussRational) -> GaussRational {
        &self + &rhs
    }
}

impl Sub for GaussRational {
    type Output = GaussRational;
    fn sub(self, rhs: GaussRational) -> GaussRational {
        &self - &rhs
    }
}

impl Mul for GaussRational {
    type Output = GaussRational;
    fn mul(self, rhs: GaussRational) -> GaussRational {
        &self * &rhs
    }
}

impl AddAssign<&GaussRational> for GaussRational {
    fn add_assign(&mut self, rhs: &GaussRational) {
        self.re += &rhs.re;
        self.im += &rhs.im;
    }
}

impl SubAssign<&GaussRational> for GaussRational {
    fn sub_assign(&mut self, rhs: &GaussRational) {
        self.re -= &rhs.re;
        self.im -= &rhs.im;
    }
}

impl MulAssign<&GaussRational> for GaussRational {
    fn mul_assign(&mut self, rhs: &GaussRational) {
        *self = &*self * rhs;
    }
}

fn fmt_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

impl fmt::Display for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.im.is_zero() {
            return write!(f, "{}", fmt_rational(&self.re));
        }
        let im_part = if self.im.is_one() {
            "i".to_string()
        } else if (-self.im.clone()).is_one() {
            "-i".to_string()
        } else {
            format!("{}i", fmt_rational(&self.im))
        };
        if self.re.is_zero() {
            return write!(f, "{im_part}");
        }
        if self.im.is_positive() {
            write!(f, "{}+{}", fmt_rational(&self.re), im_part)
        } else {
            write!(f, "{}{}", fmt_rational(&self.re), im_part)
        }
    }
}

impl fmt::Debug for GaussRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_ops() {
        let a = GaussRational::from_ratio(1, 2);
        let b = GaussRational::from_ratio_i(3, 4);
        let c = &a + &b;
        assert_eq!((&c * &c.inv()), GaussRational::one());
        assert_eq!(&c * &c.conj(), {
            let n = c.norm_sq();
            GaussRational::new(n, BigRational::zero())
        });
        assert_eq!(&GaussRational::i() * &GaussRational::i(), -GaussRational::one());
    }

    #[test]
    fn display_forms() {
        assert_eq!(GaussRational::zero().to_string(), "0");
        assert_eq!(GaussRational::from_ratio(-3, 6).to_string(), "-1/2");
        assert_eq!(GaussRational::i().to_string(), "i");
        let z = &GaussRational::from_ratio(1, 2) + &GaussRational::from_ratio_i(-2, 3);
        assert_eq!(z.to_string(), "1/2-2/3i");
    }

    #[test]
    fn sign_of_real() {
        assert_eq!(GaussRational::from_ratio(-2, 7).real_sign(), -1);
        assert_eq!(GaussRational::zero().real_sign(), 0);
    }
}
