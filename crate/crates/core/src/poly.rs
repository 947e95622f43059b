//! Dense polynomials and truncated power series over `Mp`.
//!
//! Coefficient vectors are low-order first: `c[k]` multiplies `t^k`.

use crate::num::Mp;

/// Horner evaluation at `t`.
pub fn eval(c: &[Mp], t: &Mp) -> Mp {
    let mut acc = Mp::zero(t.prec().max(c.first().map_or(53, Mp::prec)));
    for ck in c.iter().rev() {
        acc = acc * t + ck;
    }
    acc
}

/// Coefficients of the derivative.
pub fn deriv(c: &[Mp]) -> Vec<Mp> {
    c.iter().enumerate().skip(1).map(|(k, ck)| ck * k as f64).collect()
}

/// Antiderivative with zero constant term.
pub fn integ(c: &[Mp], prec: u32) -> Vec<Mp> {
    let mut out = Vec::with_capacity(c.len() + 1);
    out.push(Mp::zero(prec));
    for (k, ck) in c.iter().enumerate() {
        out.push(ck / (k + 1) as f64);
    }
    out
}

/// Full product, or truncated to `len` coefficients when `len` is smaller.
pub fn mul(a: &[Mp], b: &[Mp], len: usize, prec: u32) -> Vec<Mp> {
    let n = len.min(a.len() + b.len() - 1);
    let mut out = vec![Mp::zero(prec); n];
    for (i, ai) in a.iter().enumerate() {
        if i >= n {
            break;
        }
        for (j, bj) in b.iter().enumerate() {
            if i + j >= n {
                break;
            }
            out[i + j] += ai * bj;
        }
    }
    out
}

pub fn add(a: &[Mp], b: &[Mp], prec: u32) -> Vec<Mp> {
    let n = a.len().max(b.len());
    let mut out = vec![Mp::zero(prec); n];
    for (i, ai) in a.iter().enumerate() {
        out[i] += ai;
    }
    for (i, bi) in b.iter().enumerate() {
        out[i] += bi;
    }
    out
}

pub fn scale(a: &[Mp], s: &Mp) -> Vec<Mp> {
    a.iter().map(|ai| ai * s).collect()
}

/// Series quotient to `len` terms; requires `b[0] != 0`.
pub fn div_series(a: &[Mp], b: &[Mp], len: usize, prec: u32) -> Vec<Mp> {
    assert!(!b.is_empty() && !b[0].is_zero(), "series division by zero constant term");
    let mut q: Vec<Mp> = Vec::with_capacity(len);
    for k in 0..len {
        let mut s = if k < a.len() { a[k].clone() } else { Mp::zero(prec) };
        for j in 1..=k.min(b.len() - 1) {
            s -= &b[j] * &q[k - j];
        }
        q.push(s / &b[0]);
    }
    q
}

/// Series square root to `len` terms; requires `a[0] > 0`.
pub fn sqrt_series(a: &[Mp], len: usize, prec: u32) -> Vec<Mp> {
    assert!(!a.is_empty() && a[0] > 0.0, "series sqrt needs positive constant term");
    let mut s: Vec<Mp> = Vec::with_capacity(len);
    s.push(a[0].sqrt());
    let two_s0 = 2.0 * &s[0];
    for k in 1..len {
        let mut acc = if k < a.len() { a[k].clone() } else { Mp::zero(prec) };
        for j in 1..k {
            acc -= &s[j] * &s[k - j];
        }
        s.push(acc / &two_s0);
    }
    s
}

/// Recenter: coefficients of p(t0 + t) given those of p(t).
pub fn shift(c: &[Mp], t0: &Mp) -> Vec<Mp> {
    let mut work: Vec<Mp> = c.to_vec();
    let n = work.len();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        for i in (k..n - 1).rev() {
            let t = &work[i + 1] * t0;
            work[i] += t;
        }
        out.push(work[k].clone());
    }
    out
}

/// Largest |coefficient| as f64 (diagnostics).
pub fn max_coeff_abs(c: &[Mp]) -> f64 {
    c.iter().map(|x| x.to_f64().abs()).fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fv(prec: u32, xs: &[f64]) -> Vec<Mp> {
        xs.iter().map(|&x| Mp::new(prec, x)).collect()
    }

    #[test]
    fn mul_div_round_trip() {
        let prec = 128;
        let a = fv(prec, &[1.0, -2.0, 0.5, 3.0]);
        let b = fv(prec, &[2.0, 1.0, -1.0]);
        let p = mul(&a, &b, usize::MAX, prec);
        let q = div_series(&p, &b, a.len(), prec);
        for (x, y) in a.iter().zip(&q) {
            assert!((x - y).abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn sqrt_squares_back() {
        let prec = 128;
        let a = fv(prec, &[4.0, 1.0, -0.25, 0.125]);
        let s = sqrt_series(&a, 8, prec);
        let sq = mul(&s, &s, 8, prec);
        for k in 0..4 {
            assert!((&sq[k] - &a[k]).abs().to_f64() < 1e-30);
        }
        for k in 4..8 {
            assert!(sq[k].to_f64().abs() < 1e-30);
        }
    }

    #[test]
    fn shift_matches_direct_eval() {
        let prec = 128;
        let c = fv(prec, &[1.0, 2.0, -1.5, 0.75]);
        let t0 = Mp::new(prec, 0.3125);
        let sh = shift(&c, &t0);
        for &t in &[0.0, 0.25, -0.5] {
            let tt = Mp::new(prec, t);
            let direct = eval(&c, &(&tt + &t0));
            let shifted = eval(&sh, &tt);
            assert!((direct - shifted).abs().to_f64() < 1e-30);
        }
    }

    #[test]
    fn derivative_and_antiderivative() {
        let prec = 96;
        let c = fv(prec, &[3.0, 1.0, 4.0]);
        let d = deriv(&c);
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].to_f64(), 1.0);
        assert_eq!(d[1].to_f64(), 8.0);
        let i = integ(&d, prec);
        assert_eq!(i[1].to_f64(), 1.0);
        assert_eq!(i[2].to_f64(), 4.0);
    }
}
