//! Scalar types shared by every numeric module.
//!
//! Three complex scalars are used:
//!
//! * [`CRational`]: exact Gaussian rationals, used for map coefficients and
//!   exact polynomial expansion.
//! * [`XComplex`]: an `f64` complex mantissa with a separate binary exponent.
//!   It never overflows, which lets the first root-finding stage evaluate
//!   `(f^n)^(m)` far out in the basin of infinity at hardware speed.
//! * [`MpComplex`]: a pair of MPFR floats at an explicit [`Precision`].

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Working precision in bits for multiprecision arithmetic.
///
/// Immutable once chosen for a computation; rounding is always to nearest.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Precision(u32);

impl Precision {
    pub const MIN_BITS: u32 = 53;
    pub const DEFAULT: Precision = Precision(128);
    /// Top of the adaptive ladder 128 -> 256 -> 512 -> 1024.
    pub const MAX: Precision = Precision(1024);

    pub fn new(bits: u32) -> Result<Self> {
        if bits < Self::MIN_BITS {
            return Err(Error::InvalidInput(format!(
                "precision must be at least {} bits, got {bits}",
                Self::MIN_BITS
            )));
        }
        Ok(Precision(bits))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    /// Next rung of the precision ladder, or `None` at the top.
    pub fn next_rung(self) -> Option<Precision> {
        if self.0 >= Self::MAX.0 {
            None
        } else {
            Some(Precision((self.0 * 2).min(Self::MAX.0)))
        }
    }

    pub fn doubled(self) -> Precision {
        Precision(self.0 * 2)
    }

    /// log2 of the unit roundoff.
    pub fn roundoff_log2(self) -> f64 {
        -(self.0 as f64)
    }
}

impl Default for Precision {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} bits", self.0)
    }
}

/// Commutative ring operations needed by dense polynomial arithmetic.
///
/// Constructors are relative to an existing element so that multiprecision
/// values inherit their precision.
pub trait Ring: Clone + fmt::Debug + Send + Sync {
    fn zero_like(&self) -> Self;
    fn one_like(&self) -> Self;
    fn is_zero(&self) -> bool;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn mul_u64(&self, k: u64) -> Self;

    fn add_assign(&mut self, other: &Self) {
        *self = Ring::add(self, other);
    }
}

impl Ring for Integer {
    fn zero_like(&self) -> Self {
        Integer::new()
    }
    fn one_like(&self) -> Self {
        Integer::from(1)
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn add(&self, other: &Self) -> Self {
        Integer::from(self + other)
    }
    fn sub(&self, other: &Self) -> Self {
        Integer::from(self - other)
    }
    fn mul(&self, other: &Self) -> Self {
        Integer::from(self * other)
    }
    fn neg(&self) -> Self {
        Integer::from(-self)
    }
    fn mul_u64(&self, k: u64) -> Self {
        Integer::from(self * k)
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

impl Ring for Rational {
    fn zero_like(&self) -> Self {
        Rational::new()
    }
    fn one_like(&self) -> Self {
        Rational::from(1)
    }
    fn is_zero(&self) -> bool {
        self.cmp0() == std::cmp::Ordering::Equal
    }
    fn add(&self, other: &Self) -> Self {
        Rational::from(self + other)
    }
    fn sub(&self, other: &Self) -> Self {
        Rational::from(self - other)
    }
    fn mul(&self, other: &Self) -> Self {
        Rational::from(self * other)
    }
    fn neg(&self) -> Self {
        Rational::from(-self)
    }
    fn mul_u64(&self, k: u64) -> Self {
        Rational::from(self * Integer::from(k))
    }
    fn add_assign(&mut self, other: &Self) {
        *self += other;
    }
}

/// Exact complex rational `re + i*im`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct CRational {
    pub re: Rational,
    pub im: Rational,
}

impl CRational {
    pub fn new(re: Rational, im: Rational) -> Self {
        CRational { re, im }
    }

    pub fn real(re: impl Into<Rational>) -> Self {
        CRational {
            re: re.into(),
            im: Rational::new(),
        }
    }

    pub fn from_integer(x: &Integer) -> Self {
        CRational::real(Rational::from(x))
    }

    pub fn is_real(&self) -> bool {
        self.im.cmp0() == std::cmp::Ordering::Equal
    }

    /// Exact conversion of an `f64` complex (binary floats are dyadic rationals).
    pub fn from_c64(z: Complex64) -> Result<Self> {
        let re = Rational::from_f64(z.re)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite value {}", z.re)))?;
        let im = Rational::from_f64(z.im)
            .ok_or_else(|| Error::InvalidInput(format!("non-finite value {}", z.im)))?;
        Ok(CRational { re, im })
    }

    pub fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }

    pub fn abs_f64(&self) -> f64 {
        self.to_c64().norm()
    }

    pub fn inv(&self) -> Result<Self> {
        if Ring::is_zero(self) {
            return Err(Error::InvalidInput("division by zero".into()));
        }
        let n = Rational::from(self.re.square_ref()) + Rational::from(self.im.square_ref());
        Ok(CRational {
            re: Rational::from(&self.re / &n),
            im: -Rational::from(&self.im / &n),
        })
    }

    pub fn pow_u32(&self, k: u32) -> Self {
        let mut acc = self.one_like();
        for _ in 0..k {
            acc = Ring::mul(&acc, self);
        }
        acc
    }
}

impl Ring for CRational {
    fn zero_like(&self) -> Self {
        CRational::default()
    }
    fn one_like(&self) -> Self {
        CRational::real(1)
    }
    fn is_zero(&self) -> bool {
        self.re.cmp0() == std::cmp::Ordering::Equal && self.im.cmp0() == std::cmp::Ordering::Equal
    }
    fn add(&self, other: &Self) -> Self {
        CRational {
            re: Rational::from(&self.re + &other.re),
            im: Rational::from(&self.im + &other.im),
        }
    }
    fn sub(&self, other: &Self) -> Self {
        CRational {
            re: Rational::from(&self.re - &other.re),
            im: Rational::from(&self.im - &other.im),
        }
    }
    fn mul(&self, other: &Self) -> Self {
        if self.is_real() && other.is_real() {
            return CRational::real(Rational::from(&self.re * &other.re));
        }
        let re = Rational::from(&self.re * &other.re) - Rational::from(&self.im * &other.im);
        let im = Rational::from(&self.re * &other.im) + Rational::from(&self.im * &other.re);
        CRational { re, im }
    }
    fn neg(&self) -> Self {
        CRational {
            re: Rational::from(-&self.re),
            im: Rational::from(-&self.im),
        }
    }
    fn mul_u64(&self, k: u64) -> Self {
        CRational {
            re: Ring::mul_u64(&self.re, k),
            im: Ring::mul_u64(&self.im, k),
        }
    }
}

impl fmt::Display for CRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_real() {
            write!(f, "{}", self.re)
        } else if self.im.cmp0() == std::cmp::Ordering::Less {
            write!(f, "{}-{}i", self.re, Rational::from(-&self.im))
        } else {
            write!(f, "{}+{}i", self.re, self.im)
        }
    }
}

/// Parses `"3/10"`, `"-1.1"`, `"2.5e-3"`, `"0.3+0.2i"`, `"-i"`.
impl FromStr for CRational {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if t.is_empty() {
            return Err(Error::Parse(format!("empty number in {s:?}")));
        }
        if let Some(body) = t.strip_suffix('i') {
            // split at the last sign that is not part of an exponent
            let bytes = body.as_bytes();
            let mut split = None;
            for k in (1..bytes.len()).rev() {
                let c = bytes[k] as char;
                if (c == '+' || c == '-') && !matches!(bytes[k - 1] as char, 'e' | 'E') {
                    split = Some(k);
                    break;
                }
            }
            let (re, im) = match split {
                Some(k) => (parse_rational(&body[..k])?, parse_imag_coeff(&body[k..])?),
                None => (Rational::new(), parse_imag_coeff(body)?),
            };
            Ok(CRational { re, im })
        } else {
            Ok(CRational::real(parse_rational(&t)?))
        }
    }
}

fn parse_imag_coeff(s: &str) -> Result<Rational> {
    match s {
        "" | "+" => Ok(Rational::from(1)),
        "-" => Ok(Rational::from(-1)),
        _ => parse_rational(s),
    }
}

/// Exact decimal or integer-ratio literal.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not an exact decimal or ratio: {s:?}"));
    if let Some((num, den)) = s.split_once('/') {
        let num = parse_rational(num)?;
        let den = parse_rational(den)?;
        if den.cmp0() == std::cmp::Ordering::Equal {
            return Err(Error::Parse(format!("zero denominator in {s:?}")));
        }
        return Ok(num / den);
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(k) => (&s[..k], s[k + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, digits) = match mantissa.as_bytes().first() {
        Some(b'-') => (true, &mantissa[1..]),
        Some(b'+') => (false, &mantissa[1..]),
        _ => (false, mantissa),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let all: String = format!("{int_part}{frac_part}");
    let num = Integer::from_str(if all.is_empty() { "0" } else { &all }).map_err(|_| bad())?;
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from(10);
    let factor = if scale >= 0 {
        ten.pow(scale as u32)
    } else {
        Rational::from(1) / ten.pow((-scale) as u32)
    };
    let r = Rational::from(num) * factor;
    Ok(if neg { -r } else { r })
}

/// Complex scalar usable in jets and root finding.
pub trait CScalar: Ring {
    /// Construction context: `()` for [`XComplex`], [`Precision`] for [`MpComplex`].
    type Ctx: Copy + Send + Sync + fmt::Debug;

    fn ctx(&self) -> Self::Ctx;
    fn from_c64(z: Complex64, ctx: Self::Ctx) -> Self;
    fn from_exact(z: &CRational, ctx: Self::Ctx) -> Self;
    fn div(&self, other: &Self) -> Self;
    fn inv(&self) -> Self;
    /// log2 |z|, `-inf` for zero.
    fn log2_abs(&self) -> f64;
    /// Nearest `f64` complex; may saturate to infinity or zero.
    fn to_c64(&self) -> Complex64;
    fn is_finite(&self) -> bool;
    fn roundoff_log2(ctx: Self::Ctx) -> f64;

    fn zero(ctx: Self::Ctx) -> Self {
        Self::from_c64(Complex64::new(0.0, 0.0), ctx)
    }
    fn one(ctx: Self::Ctx) -> Self {
        Self::from_c64(Complex64::new(1.0, 0.0), ctx)
    }
    fn ln_abs(&self) -> f64 {
        self.log2_abs() * std::f64::consts::LN_2
    }
}

/// `f64` complex mantissa times `2^exp`, normalized so that the larger
/// component of the mantissa lies in `[1, 2)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct XComplex {
    m: Complex64,
    e: i64,
}

const X_ALIGN_LIMIT: i64 = 1100;

fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((1023 + k) as u64) << 52)
}

fn scale_pow2(x: f64, k: i64) -> f64 {
    if k > 1023 {
        x * pow2(1023) * pow2((k - 1023).min(1023))
    } else if k < -1022 {
        x * pow2(-1022) * pow2((k + 1022).max(-1022))
    } else {
        x * pow2(k)
    }
}

fn exponent_of(x: f64) -> i64 {
    let bits = x.abs().to_bits();
    let raw = ((bits >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal
        let lz = (bits << 12).leading_zeros() as i64;
        -1023 - lz
    } else {
        raw - 1023
    }
}

impl XComplex {
    pub const ZERO: XComplex = XComplex {
        m: Complex64::new(0.0, 0.0),
        e: 0,
    };

    pub fn new(z: Complex64) -> Self {
        XComplex { m: z, e: 0 }.normalized()
    }

    fn normalized(self) -> Self {
        let big = self.m.re.abs().max(self.m.im.abs());
        if big == 0.0 || !big.is_finite() {
            return XComplex {
                m: if big == 0.0 { Complex64::new(0.0, 0.0) } else { self.m },
                e: if big == 0.0 { 0 } else { self.e },
            };
        }
        let k = exponent_of(big);
        if k == 0 {
            return self;
        }
        XComplex {
            m: Complex64::new(scale_pow2(self.m.re, -k), scale_pow2(self.m.im, -k)),
            e: self.e + k,
        }
    }

    pub fn mantissa(&self) -> Complex64 {
        self.m
    }

    pub fn exponent(&self) -> i64 {
        self.e
    }
}

impl Ring for XComplex {
    fn zero_like(&self) -> Self {
        XComplex::ZERO
    }
    fn one_like(&self) -> Self {
        XComplex::new(Complex64::new(1.0, 0.0))
    }
    fn is_zero(&self) -> bool {
        self.m.re == 0.0 && self.m.im == 0.0
    }
    fn add(&self, o: &Self) -> Self {
        if Ring::is_zero(self) {
            return *o;
        }
        if Ring::is_zero(o) {
            return *self;
        }
        let (hi, lo) = if self.e >= o.e { (self, o) } else { (o, self) };
        let diff = hi.e - lo.e;
        if diff > X_ALIGN_LIMIT {
            return *hi;
        }
        let f = scale_pow2(1.0, -diff);
        XComplex {
            m: hi.m + lo.m * f,
            e: hi.e,
        }
        .normalized()
    }
    fn sub(&self, o: &Self) -> Self {
        Ring::add(self, &Ring::neg(o))
    }
    fn mul(&self, o: &Self) -> Self {
        XComplex {
            m: self.m * o.m,
            e: self.e + o.e,
        }
        .normalized()
    }
    fn neg(&self) -> Self {
        XComplex {
            m: -self.m,
            e: self.e,
        }
    }
    fn mul_u64(&self, k: u64) -> Self {
        XComplex {
            m: self.m * k as f64,
            e: self.e,
        }
        .normalized()
    }
}

impl CScalar for XComplex {
    type Ctx = ();

    fn ctx(&self) {}
    fn from_c64(z: Complex64, _: ()) -> Self {
        XComplex::new(z)
    }
    fn from_exact(z: &CRational, _: ()) -> Self {
        // Rational -> f64 overflows only beyond 2^1024, far outside any map coefficient
        XComplex::new(z.to_c64())
    }
    fn div(&self, o: &Self) -> Self {
        XComplex {
            m: self.m / o.m,
            e: self.e - o.e,
        }
        .normalized()
    }
    fn inv(&self) -> Self {
        XComplex {
            m: self.m.inv(),
            e: -self.e,
        }
        .normalized()
    }
    fn log2_abs(&self) -> f64 {
        if Ring::is_zero(self) {
            f64::NEG_INFINITY
        } else {
            self.m.norm().log2() + self.e as f64
        }
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(scale_pow2(self.m.re, self.e), scale_pow2(self.m.im, self.e))
    }
    fn is_finite(&self) -> bool {
        self.m.re.is_finite() && self.m.im.is_finite()
    }
    fn roundoff_log2(_: ()) -> f64 {
        -53.0
    }
}

/// Multiprecision complex number backed by two MPFR floats.
#[derive(Clone, Debug, PartialEq)]
pub struct MpComplex {
    pub re: Float,
    pub im: Float,
}

impl MpComplex {
    pub fn with_prec(prec: Precision) -> Self {
        MpComplex {
            re: Float::new(prec.bits()),
            im: Float::new(prec.bits()),
        }
    }

    pub fn from_floats(re: Float, im: Float) -> Self {
        MpComplex { re, im }
    }

    pub fn prec(&self) -> Precision {
        Precision(self.re.prec())
    }

    /// Same value rounded to another precision.
    pub fn to_prec(&self, prec: Precision) -> Self {
        MpComplex {
            re: Float::with_val(prec.bits(), &self.re),
            im: Float::with_val(prec.bits(), &self.im),
        }
    }

    pub fn abs(&self) -> Float {
        Float::with_val(self.re.prec(), self.re.hypot_ref(&self.im))
    }

    pub fn norm_sqr(&self) -> Float {
        let p = self.re.prec();
        Float::with_val(p, self.re.square_ref()) + Float::with_val(p, self.im.square_ref())
    }

    pub fn scale_f64(&self, k: f64) -> Self {
        MpComplex {
            re: Float::with_val(self.re.prec(), &self.re * k),
            im: Float::with_val(self.re.prec(), &self.im * k),
        }
    }

    pub fn sub_c64(&self, z: Complex64) -> Self {
        let p = self.re.prec();
        MpComplex {
            re: Float::with_val(p, &self.re - z.re),
            im: Float::with_val(p, &self.im - z.im),
        }
    }
}

impl Ring for MpComplex {
    fn zero_like(&self) -> Self {
        MpComplex::with_prec(self.prec())
    }
    fn one_like(&self) -> Self {
        let mut z = MpComplex::with_prec(self.prec());
        z.re += 1;
        z
    }
    fn is_zero(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }
    fn add(&self, o: &Self) -> Self {
        let p = self.re.prec();
        MpComplex {
            re: Float::with_val(p, &self.re + &o.re),
            im: Float::with_val(p, &self.im + &o.im),
        }
    }
    fn sub(&self, o: &Self) -> Self {
        let p = self.re.prec();
        MpComplex {
            re: Float::with_val(p, &self.re - &o.re),
            im: Float::with_val(p, &self.im - &o.im),
        }
    }
    fn mul(&self, o: &Self) -> Self {
        let p = self.re.prec();
        let ac = Float::with_val(p, &self.re * &o.re);
        let bd = Float::with_val(p, &self.im * &o.im);
        let ad = Float::with_val(p, &self.re * &o.im);
        let bc = Float::with_val(p, &self.im * &o.re);
        MpComplex {
            re: ac - bd,
            im: ad + bc,
        }
    }
    fn neg(&self) -> Self {
        MpComplex {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }
    fn mul_u64(&self, k: u64) -> Self {
        let p = self.re.prec();
        MpComplex {
            re: Float::with_val(p, &self.re * k),
            im: Float::with_val(p, &self.im * k),
        }
    }
    fn add_assign(&mut self, o: &Self) {
        self.re += &o.re;
        self.im += &o.im;
    }
}

impl CScalar for MpComplex {
    type Ctx = Precision;

    fn ctx(&self) -> Precision {
        self.prec()
    }
    fn from_c64(z: Complex64, prec: Precision) -> Self {
        MpComplex {
            re: Float::with_val(prec.bits(), z.re),
            im: Float::with_val(prec.bits(), z.im),
        }
    }
    fn from_exact(z: &CRational, prec: Precision) -> Self {
        MpComplex {
            re: Float::with_val(prec.bits(), &z.re),
            im: Float::with_val(prec.bits(), &z.im),
        }
    }
    fn div(&self, o: &Self) -> Self {
        Ring::mul(self, &o.inv())
    }
    fn inv(&self) -> Self {
        let n = self.norm_sqr();
        let p = self.re.prec();
        MpComplex {
            re: Float::with_val(p, &self.re / &n),
            im: -Float::with_val(p, &self.im / &n),
        }
    }
    fn log2_abs(&self) -> f64 {
        self.abs().log2().to_f64()
    }
    fn to_c64(&self) -> Complex64 {
        Complex64::new(self.re.to_f64(), self.im.to_f64())
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
    fn roundoff_log2(prec: Precision) -> f64 {
        prec.roundoff_log2()
    }
}

/// Nonnegative real stored as its base-2 logarithm; used for running error
/// bounds whose magnitudes can exceed the `f64` range.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd)]
pub struct LogMag(pub f64);

impl LogMag {
    pub const ZERO: LogMag = LogMag(f64::NEG_INFINITY);

    pub fn from_f64(x: f64) -> Self {
        LogMag(x.abs().log2())
    }

    pub fn add(self, o: LogMag) -> LogMag {
        let (hi, lo) = if self.0 >= o.0 { (self.0, o.0) } else { (o.0, self.0) };
        if lo == f64::NEG_INFINITY {
            return LogMag(hi);
        }
        LogMag(hi + (1.0 + (lo - hi).exp2()).log2())
    }

    pub fn mul(self, o: LogMag) -> LogMag {
        if self.0 == f64::NEG_INFINITY || o.0 == f64::NEG_INFINITY {
            return LogMag::ZERO;
        }
        LogMag(self.0 + o.0)
    }

    pub fn scale(self, k: f64) -> LogMag {
        self.mul(LogMag::from_f64(k))
    }
}
