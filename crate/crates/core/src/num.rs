//! Numeric scalar types: an ergonomic MPFR wrapper and an exact
//! wide-exponent f64.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use rug::float::Round;
use rug::ops::AssignRound;
use rug::Float;

/// Multiple-precision real backed by MPFR.
///
/// Binary operators allocate the result at the larger operand precision;
/// f64 operands adopt the other side's precision. This keeps formula code
/// free of explicit `with_val` plumbing while still carrying per-value
/// precision through every computation.
#[derive(Clone, PartialEq, PartialOrd)]
pub struct Mp(pub Float);

impl Mp {
    pub fn new(prec: u32, x: f64) -> Self {
        Mp(Float::with_val(prec, x))
    }

    pub fn zero(prec: u32) -> Self {
        Mp(Float::new(prec))
    }

    /// Exact small rational n/d rounded once to `prec`.
    pub fn ratio(prec: u32, n: i64, d: i64) -> Self {
        let mut f = Float::new(prec);
        f.assign_round(rug::Rational::from((n, d)), Round::Nearest);
        Mp(f)
    }

    pub fn from_rational(prec: u32, q: &rug::Rational) -> Self {
        let mut f = Float::new(prec);
        f.assign_round(q, Round::Nearest);
        Mp(f)
    }

    pub fn pi(prec: u32) -> Self {
        Mp(Float::with_val(prec, rug::float::Constant::Pi))
    }

    pub fn prec(&self) -> u32 {
        self.0.prec()
    }

    pub fn to_f64(&self) -> f64 {
        self.0.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.0.is_zero()
    }

    pub fn is_finite(&self) -> bool {
        self.0.is_finite()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.0.is_sign_negative() && !self.0.is_zero()
    }

    pub fn sqrt(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.sqrt_ref()))
    }

    pub fn abs(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.abs_ref()))
    }

    pub fn square(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.square_ref()))
    }

    pub fn recip(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.recip_ref()))
    }

    pub fn powi(&self, k: i32) -> Self {
        use rug::ops::Pow;
        Mp(Float::with_val(self.prec(), (&self.0).pow(k)))
    }

    pub fn ln(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.ln_ref()))
    }

    pub fn exp(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.exp_ref()))
    }

    pub fn log2(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.log2_ref()))
    }

    pub fn cos(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.cos_ref()))
    }

    pub fn acos(&self) -> Self {
        Mp(Float::with_val(self.prec(), self.0.acos_ref()))
    }

    pub fn max(&self, o: &Self) -> Self {
        if self.0 > o.0 {
            self.clone()
        } else {
            o.clone()
        }
    }

    pub fn min(&self, o: &Self) -> Self {
        if self.0 < o.0 {
            self.clone()
        } else {
            o.clone()
        }
    }

    /// Same value at a different precision (rounded once when shrinking).
    pub fn with_prec(&self, prec: u32) -> Self {
        Mp(Float::with_val(prec, &self.0))
    }

    /// Decimal string long enough to round-trip at this precision.
    pub fn to_decimal_string(&self) -> String {
        self.0.to_string_radix(10, None)
    }

    pub fn signum_i(&self) -> i32 {
        if self.0.is_zero() {
            0
        } else if self.0.is_sign_negative() {
            -1
        } else {
            1
        }
    }
}

impl fmt::Debug for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:e}", self.to_f64())
    }
}

impl fmt::Display for Mp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(&self.0, f)
    }
}

impl From<Float> for Mp {
    fn from(f: Float) -> Self {
        Mp(f)
    }
}

impl PartialEq<f64> for Mp {
    fn eq(&self, o: &f64) -> bool {
        self.0 == *o
    }
}

impl PartialOrd<f64> for Mp {
    fn partial_cmp(&self, o: &f64) -> Option<Ordering> {
        self.0.partial_cmp(o)
    }
}

macro_rules! binop_mp {
    ($trait:ident, $m:ident, $op:tt) => {
        impl $trait<&Mp> for &Mp {
            type Output = Mp;
            fn $m(self, o: &Mp) -> Mp {
                let prec = self.prec().max(o.prec());
                Mp(Float::with_val(prec, &self.0 $op &o.0))
            }
        }
        impl $trait<Mp> for &Mp {
            type Output = Mp;
            fn $m(self, o: Mp) -> Mp {
                self $op &o
            }
        }
        impl $trait<&Mp> for Mp {
            type Output = Mp;
            fn $m(self, o: &Mp) -> Mp {
                &self $op o
            }
        }
        impl $trait<Mp> for Mp {
            type Output = Mp;
            fn $m(self, o: Mp) -> Mp {
                &self $op &o
            }
        }
        impl $trait<f64> for &Mp {
            type Output = Mp;
            fn $m(self, o: f64) -> Mp {
                Mp(Float::with_val(self.prec(), &self.0 $op o))
            }
        }
        impl $trait<f64> for Mp {
            type Output = Mp;
            fn $m(self, o: f64) -> Mp {
                &self $op o
            }
        }
        impl $trait<&Mp> for f64 {
            type Output = Mp;
            fn $m(self, o: &Mp) -> Mp {
                Mp(Float::with_val(o.prec(), self $op &o.0))
            }
        }
        impl $trait<Mp> for f64 {
            type Output = Mp;
            fn $m(self, o: Mp) -> Mp {
                self $op &o
            }
        }
    };
}

binop_mp!(Add, add, +);
binop_mp!(Sub, sub, -);
binop_mp!(Mul, mul, *);
binop_mp!(Div, div, /);

macro_rules! assignop_mp {
    ($trait:ident, $m:ident, $op:tt) => {
        impl $trait<&Mp> for Mp {
            fn $m(&mut self, o: &Mp) {
                self.0 $op &o.0;
            }
        }
        impl $trait<Mp> for Mp {
            fn $m(&mut self, o: Mp) {
                self.0 $op &o.0;
            }
        }
        impl $trait<f64> for Mp {
            fn $m(&mut self, o: f64) {
                self.0 $op o;
            }
        }
    };
}

assignop_mp!(AddAssign, add_assign, +=);
assignop_mp!(SubAssign, sub_assign, -=);
assignop_mp!(MulAssign, mul_assign, *=);
assignop_mp!(DivAssign, div_assign, /=);

impl Neg for &Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        Mp(Float::with_val(self.prec(), -&self.0))
    }
}

impl Neg for Mp {
    type Output = Mp;
    fn neg(self) -> Mp {
        -&self
    }
}

/// Relative difference |a − b| / max(|a|, |b|, floor).
pub fn rel_diff(a: &Mp, b: &Mp, floor: f64) -> f64 {
    let diff = (a - b).abs();
    let scale = a.abs().max(&b.abs());
    let scale = if scale < floor { Mp::new(a.prec(), floor) } else { scale };
    (diff / scale).to_f64()
}

/// A nonzero f64 mantissa in [1, 2) paired with an unbounded binary exponent.
///
/// All operations are exact f64 arithmetic plus integer exponent bookkeeping,
/// so results are deterministic bit-for-bit regardless of evaluation context.
/// The type exists because the limiting coefficient sequence grows like
/// sqrt(Gamma(c + n)), overflowing the f64 exponent long before its 53-bit
/// mantissa stops being adequate.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WideF64 {
    m: f64,
    e: i64,
}

/// Exponent gap beyond which the smaller addend cannot affect the sum.
const ADD_CUTOFF: i64 = 120;

fn pow2(k: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&k));
    f64::from_bits(((1023 + k) as u64) << 52)
}

fn split(x: f64) -> (f64, i64) {
    debug_assert!(x.is_finite() && x != 0.0);
    let b = x.to_bits();
    let raw = ((b >> 52) & 0x7ff) as i64;
    if raw == 0 {
        // subnormal: rescale into the normal range first (exact)
        let (m, e) = split(x * pow2(200));
        return (m, e - 200);
    }
    let m = f64::from_bits((b & !(0x7ffu64 << 52)) | (1023u64 << 52));
    (m, raw - 1023)
}

impl WideF64 {
    pub const ZERO: WideF64 = WideF64 { m: 0.0, e: 0 };

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            let (m, e) = split(x);
            WideF64 { m, e }
        }
    }

    /// Reconstruct `m · 2^(e + shift)`, saturating outside the f64 range.
    pub fn to_f64_shifted(self, shift: i64) -> f64 {
        if self.m == 0.0 {
            return 0.0;
        }
        let e = self.e + shift;
        if e > 1023 {
            f64::INFINITY * self.m.signum()
        } else if e < -1060 {
            0.0
        } else if e < -1000 {
            self.m * pow2(-900) * pow2(e + 900)
        } else {
            self.m * pow2(e)
        }
    }

    pub fn to_f64(self) -> f64 {
        self.to_f64_shifted(0)
    }

    pub fn is_zero(self) -> bool {
        self.m == 0.0
    }

    pub fn exp2(self) -> i64 {
        self.e
    }

    /// log2 |self| as f64 (diagnostics only).
    pub fn log2_abs(self) -> f64 {
        if self.m == 0.0 {
            f64::NEG_INFINITY
        } else {
            self.e as f64 + self.m.abs().log2()
        }
    }

    pub fn neg(self) -> Self {
        WideF64 { m: -self.m, e: self.e }
    }

    pub fn abs(self) -> Self {
        WideF64 { m: self.m.abs(), e: self.e }
    }

    pub fn mul(self, o: Self) -> Self {
        if self.m == 0.0 || o.m == 0.0 {
            return Self::ZERO;
        }
        let mut m = self.m * o.m; // in [1, 4)
        let mut e = self.e + o.e;
        if m.abs() >= 2.0 {
            m *= 0.5;
            e += 1;
        }
        WideF64 { m, e }
    }

    pub fn mul_f64(self, x: f64) -> Self {
        self.mul(Self::from_f64(x))
    }

    pub fn div(self, o: Self) -> Self {
        debug_assert!(o.m != 0.0);
        if self.m == 0.0 {
            return Self::ZERO;
        }
        let m = self.m / o.m; // in (1/2, 2)
        let e = self.e - o.e;
        let (mm, de) = split(m);
        WideF64 { m: mm, e: e + de }
    }

    pub fn add(self, o: Self) -> Self {
        if self.m == 0.0 {
            return o;
        }
        if o.m == 0.0 {
            return self;
        }
        let d = self.e - o.e;
        if d >= ADD_CUTOFF {
            return self;
        }
        if d <= -ADD_CUTOFF {
            return o;
        }
        let (hi, lo, gap) = if d >= 0 { (self, o, d) } else { (o, self, -d) };
        let s = hi.m + lo.m * pow2(-gap);
        if s == 0.0 {
            return Self::ZERO;
        }
        let (m, de) = split(s);
        WideF64 { m, e: hi.e + de }
    }

    pub fn sub(self, o: Self) -> Self {
        self.add(o.neg())
    }

    /// Compare |self| against |other| by (exponent, mantissa).
    pub fn abs_gt(self, o: Self) -> bool {
        if self.m == 0.0 {
            return false;
        }
        if o.m == 0.0 {
            return true;
        }
        match self.e.cmp(&o.e) {
            Ordering::Greater => true,
            Ordering::Less => false,
            Ordering::Equal => self.m.abs() > o.m.abs(),
        }
    }

    pub fn is_sign_negative(self) -> bool {
        self.m < 0.0
    }

    /// Bit-exact round trip through a hex encoding (for checkpoints).
    pub fn encode(self) -> String {
        format!("{:016x}:{}", self.m.to_bits(), self.e)
    }

    pub fn decode(s: &str) -> Option<Self> {
        let (mb, eb) = s.split_once(':')?;
        let m = f64::from_bits(u64::from_str_radix(mb, 16).ok()?);
        let e = eb.parse().ok()?;
        Some(WideF64 { m, e })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mp_precision_propagation() {
        let a = Mp::new(200, 1.0) / 3.0;
        let b = Mp::new(64, 2.0);
        assert_eq!((&a + &b).prec(), 200);
        assert_eq!((3.0 * &b).prec(), 64);
        let third = a.to_decimal_string();
        assert!(third.starts_with("3.3333333333333333333333333333333333333333333333333333333"));
    }

    #[test]
    fn mp_ratio_and_ops() {
        let x = Mp::ratio(128, 65, 9);
        let y = (&x * 9.0 - 65.0).abs();
        assert!(y.to_f64() < 1e-35);
        assert!(Mp::new(64, 2.0).sqrt().square().to_f64() - 2.0 < 1e-15);
        let mut z = Mp::new(64, 1.5);
        z += 0.25;
        z *= &Mp::new(64, 2.0);
        assert_eq!(z.to_f64(), 3.5);
    }

    #[test]
    fn wide_round_trip_and_exact_products() {
        let a = WideF64::from_f64(1.5);
        let b = WideF64::from_f64(-3.25);
        assert_eq!(a.mul(b).to_f64(), 1.5 * -3.25);
        assert_eq!(a.add(b).to_f64(), 1.5 - 3.25);
        assert_eq!(a.sub(b).to_f64(), 1.5 + 3.25);
        assert_eq!(a.div(b).to_f64(), 1.5 / -3.25);
    }

    #[test]
    fn wide_huge_exponents_survive() {
        let mut x = WideF64::from_f64(1.75);
        for _ in 0..100_000 {
            x = x.mul(WideF64::from_f64(2.5));
        }
        let expect = 1.75f64.log2() + 100_000.0 * 2.5f64.log2();
        assert!((x.log2_abs() - expect).abs() < 1e-6 * expect.abs());
        assert_eq!(x.to_f64(), f64::INFINITY);
    }

    #[test]
    fn wide_addition_matches_f64_when_in_range() {
        let xs = [1.0, -0.0625, std::f64::consts::PI, 255.00000000001, -1e-12];
        for &x in &xs {
            for &y in &xs {
                let s = WideF64::from_f64(x).add(WideF64::from_f64(y)).to_f64();
                assert_eq!(s, x + y, "x = {x}, y = {y}");
            }
        }
    }

    #[test]
    fn wide_subnormal_and_zero_paths() {
        let tiny = f64::MIN_POSITIVE / 1024.0; // subnormal
        let w = WideF64::from_f64(tiny);
        assert_eq!(w.to_f64(), tiny);
        assert!(WideF64::ZERO.add(w).to_f64() == tiny);
        assert!(w.sub(w).is_zero());
    }

    #[test]
    fn wide_encode_decode_bit_exact() {
        let x = WideF64::from_f64(-1.2345678901234567).mul(WideF64 { m: 1.0, e: 4_000_000 });
        let y = WideF64::decode(&x.encode()).unwrap();
        assert_eq!(x, y);
    }
}
