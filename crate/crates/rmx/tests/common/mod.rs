//! Arbitrary-precision oracles shared by the integration tests. Nothing here
//! calls into `rmx`.

#![allow(dead_code)]

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{Float, One, Signed, ToPrimitive, Zero};

/// Fractional bits of the fixed-point format.
pub const BITS: u64 = 640;

/// Complex fixed-point number `(re + i im) / 2^BITS`.
#[derive(Clone, Debug)]
pub struct Fix {
    pub re: BigInt,
    pub im: BigInt,
}

fn real_to_fix(x: f64) -> BigInt {
    if x == 0.0 {
        return BigInt::zero();
    }
    let (m, e, s) = x.integer_decode();
    let m = BigInt::from(m) * BigInt::from(s);
    let shift = BITS as i64 + e as i64;
    if shift >= 0 {
        m << shift as usize
    } else {
        m >> (-shift) as usize
    }
}

/// `x / 2^BITS` rounded to the nearest double (up to the last bit).
pub fn fix_to_f64(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 62 {
        return x.to_f64().unwrap() * 2f64.powi(-(BITS as i32));
    }
    let drop = bits - 62;
    (x >> drop as usize).to_f64().unwrap() * 2f64.powi(drop as i32 - BITS as i32)
}

impl Fix {
    pub fn from_c64(z: Complex64) -> Self {
        Fix { re: real_to_fix(z.re), im: real_to_fix(z.im) }
    }

    pub fn from_int(k: i64) -> Self {
        Fix { re: BigInt::from(k) << BITS as usize, im: BigInt::zero() }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(fix_to_f64(&self.re), fix_to_f64(&self.im))
    }

    pub fn add(&self, o: &Fix) -> Fix {
        Fix { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn sub(&self, o: &Fix) -> Fix {
        Fix { re: &self.re - &o.re, im: &self.im - &o.im }
    }

    pub fn mul(&self, o: &Fix) -> Fix {
        let re = (&self.re * &o.re - &self.im * &o.im) >> BITS as usize;
        let im = (&self.re * &o.im + &self.im * &o.re) >> BITS as usize;
        Fix { re, im }
    }

    pub fn div_int(&self, k: i64) -> Fix {
        Fix { re: &self.re / k, im: &self.im / k }
    }

    pub fn neg(&self) -> Fix {
        Fix { re: -&self.re, im: -&self.im }
    }

    fn negligible(&self) -> bool {
        self.re.abs().bits() < 8 && self.im.abs().bits() < 8
    }
}

// atan(1/x) * 2^(BITS + guard) by its Taylor series
fn atan_inv(x: i64, guard: u64) -> BigInt {
    let one = BigInt::one() << (BITS + guard) as usize;
    let x2 = BigInt::from(x * x);
    let mut power = one / x;
    let mut sum = power.clone();
    let mut k = 1i64;
    while !power.is_zero() {
        power = power / &x2;
        let term = &power / (2 * k + 1);
        if k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        k += 1;
    }
    sum
}

/// `pi * 2^BITS` by Machin's formula.
pub fn pi_fix() -> BigInt {
    let guard = 32;
    let v = atan_inv(5, guard) * 16 - atan_inv(239, guard) * 4;
    v >> guard as usize
}

/// `2^BITS / sqrt(pi)`.
pub fn inv_sqrt_pi_fix() -> BigInt {
    let num = BigInt::one() << (3 * BITS) as usize;
    (num / pi_fix()).sqrt()
}

/// `erfc(z)` from the Maclaurin series of `erf` in 640-bit fixed point.
/// Good to full double precision for `|z| <= 10`.
pub fn erfc_oracle(z: Complex64) -> Complex64 {
    let zf = Fix::from_c64(z);
    let z2 = zf.mul(&zf);
    let mut term = zf.clone();
    let mut sum = zf.clone();
    let floor = 2 * (z.norm_sqr().ceil() as i64) + 10;
    let mut n = 0i64;
    loop {
        term = term.mul(&z2).div_int(n + 1).neg();
        n += 1;
        sum = sum.add(&term.div_int(2 * n + 1));
        if n > floor && term.negligible() {
            break;
        }
    }
    let c = Fix { re: inv_sqrt_pi_fix() * 2, im: BigInt::zero() };
    Fix::from_int(1).sub(&c.mul(&sum)).to_c64()
}

/// Complex rational number.
#[derive(Clone, Debug, PartialEq)]
pub struct CRat {
    pub re: BigRational,
    pub im: BigRational,
}

pub fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl CRat {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        CRat { re, im }
    }

    pub fn zero() -> Self {
        CRat { re: BigRational::zero(), im: BigRational::zero() }
    }

    pub fn real(x: BigRational) -> Self {
        CRat { re: x, im: BigRational::zero() }
    }

    pub fn add(&self, o: &CRat) -> CRat {
        CRat { re: &self.re + &o.re, im: &self.im + &o.im }
    }

    pub fn mul(&self, o: &CRat) -> CRat {
        CRat { re: &self.re * &o.re - &self.im * &o.im, im: &self.re * &o.im + &self.im * &o.re }
    }

    pub fn scale(&self, x: &BigRational) -> CRat {
        CRat { re: &self.re * x, im: &self.im * x }
    }

    pub fn conj(&self) -> CRat {
        CRat { re: self.re.clone(), im: -&self.im }
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64().unwrap(), self.im.to_f64().unwrap())
    }
}

pub fn factorial(n: u64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * k)
}

fn binomial(n: u64, k: u64) -> BigInt {
    factorial(n) / (factorial(k) * factorial(n - k))
}

/// `L_j^nu(z)` for integer `nu >= 0` as an exact sum of its monomials.
pub fn laguerre_exact(j: u64, nu: u64, z: &CRat) -> CRat {
    let mut total = CRat::zero();
    let mut power = CRat::real(BigRational::one());
    for k in 0..=j {
        let coef = BigRational::new(binomial(j + nu, j - k), factorial(k));
        let signed = if k % 2 == 0 { coef } else { -coef };
        total = total.add(&power.scale(&signed));
        power = power.mul(z);
    }
    total
}

/// Natural log of a positive big integer to double precision.
pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive());
    let bits = x.bits();
    if bits <= 62 {
        return x.to_f64().unwrap().ln();
    }
    let drop = bits - 62;
    (x >> drop as usize).to_f64().unwrap().ln() + drop as f64 * std::f64::consts::LN_2
}

pub fn ln_rational(x: &BigRational) -> f64 {
    ln_bigint(x.numer()) - ln_bigint(x.denom())
}

pub fn pow_rat(x: &BigRational, k: u64) -> BigRational {
    (0..k).fold(BigRational::one(), |acc, _| acc * x)
}

/// `ln h_j^nu` for rational `tau = p/q` and integer `nu`, from
/// `h = (2A/(A^2-B^2))^{nu+1} Gamma(j+nu+1) (A/B)^{2j} / (A N^{nu+2} j!)`.
pub fn log_norm_oracle(j: u64, n: u64, nu: u64, tau: &BigRational) -> f64 {
    let one = BigRational::one();
    let s = &one - tau * tau;
    let a = rat(2, 1) / &s;
    let b = rat(2, 1) * tau / &s;
    let first = pow_rat(&(rat(2, 1) * &a / (&a * &a - &b * &b)), nu + 1);
    let gammas = BigRational::new(factorial(j + nu), factorial(j));
    let ratio = pow_rat(&(&a / &b), 2 * j);
    let denom = &a * pow_rat(&rat(n as i64, 1), nu + 2);
    ln_rational(&(first * gammas * ratio / denom))
}

/// `ln Gamma(k + 1/2) = ln sqrt(pi) + ln((2k-1)!!) - k ln 2`.
pub fn lgamma_half_integer(k: u64) -> f64 {
    let double_fact = (1..=k).fold(BigInt::one(), |acc, i| acc * (2 * i - 1));
    0.5 * std::f64::consts::PI.ln() + ln_bigint(&double_fact) - k as f64 * std::f64::consts::LN_2
}

pub fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm()
}
