//! The local analytic solution at the sonic point: coefficient recurrence,
//! its four-term reformulation, and the comparison sequences that model
//! coefficient growth.
//!
//! With u(τ) = Σ a_n τⁿ, a₀ = 1 and a₁ = (2√α+4)/(3√α), the remaining
//! coefficients obey
//!   δ(R−n)·a_n = [(α−2)(n−1) − (4/3)(α−4)]a_{n−1} − (n − 16/3)a_{n−2}
//!                − (3/2)α(n+1)·Σ_{j=2}^{n−1} a_j a_{n+1−j}
//!                + ((3/2)n − 2)·Σ_{j=1}^{n−1} a_j a_{n−j},
//! a relation that degenerates whenever R approaches an integer index.

pub mod limiting;

use crate::error::{Error, Result};
use crate::num::Mp;
use crate::params::ParamSet;

/// Knobs for the coefficient recurrence.
#[derive(Debug, Clone)]
pub struct SeriesOpts {
    /// Hard floor on |R − n| before the division by γ_n is refused.
    pub resonance_guard: f64,
    /// Minimum mantissa bits that must survive the observed cancellation.
    pub min_guard_bits: u32,
}

impl Default for SeriesOpts {
    fn default() -> Self {
        SeriesOpts { resonance_guard: 1e-6, min_guard_bits: 32 }
    }
}

/// Coefficients of the local analytic solution, with precision metadata.
#[derive(Debug, Clone)]
pub struct SonicSeries {
    pub params: ParamSet,
    /// a₀ ..= a_K.
    pub coeffs: Vec<Mp>,
    pub precision_bits: u32,
    /// Worst log2(Σ|terms| / |Σ terms|) observed across the recurrence.
    pub worst_cancellation_bits: f64,
    /// Smallest |R − n| encountered.
    pub min_resonance_gap: f64,
}

/// log2 |x| without leaving the wide MPFR exponent range.
fn log2_mp(x: &Mp) -> f64 {
    if x.is_zero() {
        return f64::NEG_INFINITY;
    }
    x.abs().log2().to_f64()
}

/// Run the recurrence to order `k`.
pub fn compute_sonic_series(p: &ParamSet, k: usize, opts: &SeriesOpts) -> Result<SonicSeries> {
    let prec = p.prec;
    let al = &p.alpha;
    let r_f = p.eigen_ratio.to_f64();
    let mut a: Vec<Mp> = Vec::with_capacity(k + 1);
    a.push(Mp::new(prec, 1.0));
    if k >= 1 {
        a.push(p.a1());
    }
    let mut worst_cancel = 0.0f64;
    let mut min_gap = f64::INFINITY;
    for n in 2..=k {
        let gap = (r_f - n as f64).abs();
        if gap < opts.resonance_guard {
            return Err(Error::IntegerResonance {
                n: n as u32,
                dist: gap,
                guard: opts.resonance_guard,
            });
        }
        min_gap = min_gap.min(gap);
        let nf = n as f64;
        let mut s1 = Mp::zero(prec);
        let mut s1_abs = Mp::zero(prec);
        for j in 2..n {
            let t = &a[j] * &a[n + 1 - j];
            s1_abs += t.abs();
            s1 += t;
        }
        let mut s0 = Mp::zero(prec);
        let mut s0_abs = Mp::zero(prec);
        for j in 1..n {
            let t = &a[j] * &a[n - j];
            s0_abs += t.abs();
            s0 += t;
        }
        let c1 = (al - 2.0) * (nf - 1.0) - 4.0 * (al - 4.0) / 3.0;
        let t1 = c1 * &a[n - 1];
        let t2 = -(3.0 * nf - 16.0) * &a[n - 2] / 3.0;
        let t3 = -3.0 * al * (nf + 1.0) * &s1 / 2.0;
        let t4 = (3.0 * nf - 4.0) * &s0 / 2.0;
        let e = &t1 + &t2 + &t3 + &t4;
        let abs_sum =
            t1.abs() + t2.abs() + 3.0 * al * (nf + 1.0) * &s1_abs / 2.0 + (3.0 * nf - 4.0) * &s0_abs / 2.0;
        if !e.is_zero() {
            let lost = (abs_sum / e.abs()).log2().to_f64().max(0.0);
            worst_cancel = worst_cancel.max(lost);
            if prec as f64 - lost < opts.min_guard_bits as f64 {
                return Err(Error::PrecisionExhausted(format!(
                    "cancellation of {lost:.1} bits at n = {n} leaves fewer than {} guard bits",
                    opts.min_guard_bits
                )));
            }
        }
        a.push(e / p.gamma_at(nf));
    }
    Ok(SonicSeries {
        params: p.clone(),
        coeffs: a,
        precision_bits: prec,
        worst_cancellation_bits: worst_cancel,
        min_resonance_gap: min_gap,
    })
}

impl SonicSeries {
    pub fn order(&self) -> usize {
        self.coeffs.len() - 1
    }

    /// Partial sum Σ_{n≤order} a_n τⁿ by Horner.
    pub fn eval_truncated(&self, tau: &Mp, order: usize) -> Mp {
        crate::poly::eval(&self.coeffs[..=order.min(self.order())], tau)
    }

    pub fn eval(&self, tau: &Mp) -> Mp {
        self.eval_truncated(tau, self.order())
    }

    pub fn eval_deriv(&self, tau: &Mp) -> Mp {
        crate::poly::eval(&crate::poly::deriv(&self.coeffs), tau)
    }

    /// Asymptotic growth rate of the coefficient tail from the two-point
    /// log-slope (log₂|a_{n2}| − log₂|a_{n1}|)/(n2 − n1). Its reciprocal
    /// estimates the convergence radius; the two-point form is insensitive
    /// to the isolated magnitude bump around the resonance index and to the
    /// even/odd oscillation of consecutive ratios.
    pub fn tail_growth(&self) -> f64 {
        let k = self.order();
        let n2 = k - (k % 2);
        let n1 = {
            let t = (3 * k) / 5;
            t - (t % 2)
        };
        if n2 <= n1 + 1 {
            return f64::INFINITY;
        }
        let l2 = log2_mp(&self.coeffs[n2]);
        let l1 = log2_mp(&self.coeffs[n1]);
        if !(l2.is_finite() && l1.is_finite()) {
            return f64::INFINITY;
        }
        2f64.powf((l2 - l1) / (n2 - n1) as f64)
    }

    /// Series/ODE handoff radius τ₀ = 1/(2·K_c) from the fitted growth.
    pub fn tau0(&self) -> f64 {
        0.5 / self.tail_growth()
    }

    /// Geometric bound on the dropped tail |Σ_{n>K} a_n τⁿ|, evaluated in
    /// log space (the last coefficient and τ^K separately overflow f64).
    pub fn tail_bound(&self, tau_abs: f64) -> f64 {
        let k = self.order();
        let q = self.tail_growth() * tau_abs;
        if q >= 0.95 {
            return f64::INFINITY;
        }
        let l = log2_mp(&self.coeffs[k])
            + k as f64 * tau_abs.log2()
            + (q / (1.0 - q)).log2();
        2f64.powf(l)
    }

    /// Fitted constant K for the envelope |a_n| ≤ C_{n−1}·K^{n−3/2}
    /// (C the Catalan numbers), over `window`.
    pub fn catalan_fit(&self, window: std::ops::Range<usize>) -> f64 {
        let mut log2_cat = 0.0f64; // log2 of Catalan(m) built incrementally
        let mut fit: f64 = 0.0;
        for m in 0..self.order() {
            // entering iteration m, log2_cat = log2 Catalan(m)
            let n = m + 1;
            if window.contains(&n) {
                let la = self.coeffs[n].to_f64().abs().log2();
                if la.is_finite() {
                    fit = fit.max((la - log2_cat) / (n as f64 - 1.5));
                }
            }
            log2_cat += (2.0 * (2.0 * m as f64 + 1.0) / (m as f64 + 2.0)).log2();
        }
        2f64.powf(fit)
    }

    /// Check |a_n| ≤ C_{n−1}·K^{n−3/2} for all computed n ≥ 2 with the
    /// supplied K; returns the worst excess factor (≤ 1 means the
    /// envelope holds).
    pub fn catalan_excess(&self, kc: f64) -> f64 {
        let mut log2_cat = 0.0f64;
        let mut worst: f64 = 0.0;
        let lk = kc.log2();
        for m in 0..self.order() {
            let n = m + 1;
            if n >= 2 {
                let la = self.coeffs[n].to_f64().abs().log2();
                if la.is_finite() {
                    worst = worst.max(la - log2_cat - (n as f64 - 1.5) * lk);
                }
            }
            log2_cat += (2.0 * (2.0 * m as f64 + 1.0) / (m as f64 + 2.0)).log2();
        }
        2f64.powf(worst)
    }
}

/// The reformulated recurrence and its comparison sequences, aligned by
/// index over n ∈ [0, ⌈R⌉−1].
///
/// γ_n, p_n, q_n are linear in n (and extend to real t); the scalars
/// k₁, k₂ fold the third and fourth back-terms into n-independent s₁, s₂.
#[derive(Debug, Clone)]
pub struct ComparisonTables {
    /// A₁..A₄ from the shifted-recurrence combination.
    pub coef_a: [Mp; 4],
    /// B₁..B₄.
    pub coef_b: [Mp; 4],
    pub k1: Mp,
    pub k2: Mp,
    pub s1: Mp,
    pub s2: Mp,
    /// (γ₍₁₎, γ₍₂₎): γ_t = γ₍₁₎t + γ₍₂₎.
    pub gamma_lin: (Mp, Mp),
    pub p_lin: (Mp, Mp),
    pub q_lin: (Mp, Mp),
    /// Largest relative residual of the reformulated identity over computed n.
    pub reformulation_residual: f64,
    /// M₀..M_{len−1}.
    pub m: Vec<Mp>,
    /// μ*_n where the discriminant admits it.
    pub mu_star: Vec<Option<Mp>>,
    pub mu: Vec<Option<Mp>>,
    pub lambda_n: Vec<Option<Mp>>,
    /// M̂ chain; seeded at `mhat_start` (with a₁ when the chain starts at 1).
    pub mhat: Vec<Option<Mp>>,
    pub mhat_start: usize,
    pub m_all_positive: bool,
    pub mu_star_monotone: bool,
}

impl ComparisonTables {
    pub fn gamma_t(&self, t: f64) -> Mp {
        &self.gamma_lin.0 * t + &self.gamma_lin.1
    }
    pub fn p_t(&self, t: f64) -> Mp {
        &self.p_lin.0 * t + &self.p_lin.1
    }
    pub fn q_t(&self, t: f64) -> Mp {
        &self.q_lin.0 * t + &self.q_lin.1
    }
}

/// Derive k₁, k₂, s₁, s₂ and the linear coefficient forms, and verify the
/// reformulated recurrence against the computed coefficients.
pub fn reformulate(p: &ParamSet, s: &SonicSeries) -> Result<ComparisonTables> {
    if s.order() < 5 {
        return Err(Error::OutOfRange(
            "reformulation needs coefficients through a_5".into(),
        ));
    }
    let prec = p.prec;
    let al = &p.alpha;
    let a = &s.coeffs;
    let ca = [
        3.0 * al * &a[2] - 3.0 * &a[1] - al + 2.0,
        3.0 * al * &a[3] - 3.0 * &a[2] + 1.0,
        3.0 * al * &a[4] - 3.0 * &a[3],
        3.0 * al * &a[5] - 3.0 * &a[4],
    ];
    let cb = [
        3.0 * al * &a[2] + 4.0 * &a[1] + (7.0 * al - 22.0) / 3.0,
        3.0 * al * &a[3] + 4.0 * &a[2] - Mp::ratio(prec, 16, 3),
        3.0 * al * &a[4] + 4.0 * &a[3],
        3.0 * al * &a[5] + 4.0 * &a[4],
    ];
    let den = ca[1].square() - &ca[0] * &ca[2];
    if den.abs().to_f64() < 2f64.powi(-((prec / 2) as i32)) {
        return Err(Error::DegenerateK);
    }
    let k1 = (&ca[0] * &ca[3] - &ca[1] * &ca[2]) / &den;
    let k2 = (ca[2].square() - &ca[3] * &ca[1]) / &den;
    let s1 = -&cb[2] + (&ca[1] - &cb[1]) * &k1 + (2.0 * &ca[0] - &cb[0]) * &k2;
    let s2 = -&cb[3] + (&ca[2] - &cb[2]) * &k1 + (2.0 * &ca[1] - &cb[1]) * &k2;

    let ap1_sq = (&p.a_root + 1.0).square();
    let gamma_lin = (-8.0 / &ap1_sq, 8.0 * p.eigen_ratio.clone() / &ap1_sq);
    let p_lin = (
        -&ca[0] / 2.0 + 4.0 * &k1 / &ap1_sq,
        -&cb[0] / 2.0 - 4.0 * &k1 * (&p.eigen_ratio + 1.0) / &ap1_sq,
    );
    let q_lin = (
        -&ca[1] - &ca[0] * &k1 + 8.0 * &k2 / &ap1_sq,
        -&cb[1] + (&ca[0] - &cb[0]) * &k1 - 8.0 * &k2 * (&p.eigen_ratio + 2.0) / &ap1_sq,
    );

    // residual of the reformulated identity against the raw coefficients
    let mut worst = 0.0f64;
    for n in 10..=s.order() {
        let nf = n as f64;
        let mut c_s1 = Mp::zero(prec);
        for j in 6..=n - 5 {
            c_s1 += &a[j] * &a[n + 1 - j];
        }
        let mut c_s0 = Mp::zero(prec);
        for j in 5..=n - 5 {
            c_s0 += &a[j] * &a[n - j];
        }
        let mut c_m1 = Mp::zero(prec);
        for j in 4..=n - 5 {
            c_m1 += &a[j] * &a[n - 1 - j];
        }
        let mut c_m2 = Mp::zero(prec);
        for j in 3..=n - 5 {
            c_m2 += &a[j] * &a[n - 2 - j];
        }
        let eps = -3.0 * al * (nf + 1.0) * &c_s1 / 2.0
            + ((3.0 * nf - 4.0) / 2.0 - 3.0 * al * &k1 * nf / 2.0) * &c_s0
            + ((3.0 * nf - 7.0) * &k1 / 2.0 - 3.0 * al * &k2 * (nf - 1.0) / 2.0) * &c_m1
            + (3.0 * nf - 10.0) * &k2 * &c_m2 / 2.0;
        let gamma_n = &gamma_lin.0 * nf + &gamma_lin.1;
        let p_n = &p_lin.0 * nf + &p_lin.1;
        let q_n = &q_lin.0 * nf + &q_lin.1;
        let lhs = &gamma_n * &a[n];
        let rhs = 2.0 * p_n * &a[n - 1] + q_n * &a[n - 2] + &s1 * &a[n - 3] + &s2 * &a[n - 4] + eps;
        let rel = crate::num::rel_diff(&lhs, &rhs, 1e-280);
        worst = worst.max(rel);
    }

    Ok(ComparisonTables {
        coef_a: ca,
        coef_b: cb,
        k1,
        k2,
        s1,
        s2,
        gamma_lin,
        p_lin,
        q_lin,
        reformulation_residual: worst,
        m: Vec::new(),
        mu_star: Vec::new(),
        mu: Vec::new(),
        lambda_n: Vec::new(),
        mhat: Vec::new(),
        mhat_start: 0,
        m_all_positive: true,
        mu_star_monotone: true,
    })
}

/// Fill M_n, μ*_n, μ_n, λ_n, M̂_n over n ∈ [0, ⌈R⌉−1].
///
/// For moderate R the μ* discriminant γ_{n+1/2}q_{n+3/2} + p_{n+1}² dips
/// negative at small n (the validated regime is large R); entries are then
/// absent and the M̂ chain is seeded at the first usable index. With
/// `strict` set, a negative discriminant is an error instead.
pub fn comparison_sequences(
    p: &ParamSet,
    t: &mut ComparisonTables,
    strict: bool,
) -> Result<()> {
    let prec = p.prec;
    let len = p.eigen_ratio.to_f64().ceil() as usize;
    let a1 = p.a1();
    let mut m = Vec::with_capacity(len);
    m.push(Mp::new(prec, 1.0));
    if len > 1 {
        m.push(a1.clone());
    }
    for n in 2..len {
        let nf = n as f64;
        let v = (2.0 * t.p_t(nf) * &m[n - 1] + t.q_t(nf) * &m[n - 2]) / t.gamma_t(nf);
        m.push(v);
    }
    let m_all_positive = m.iter().all(|x| *x > 0.0);

    let mut mu_star: Vec<Option<Mp>> = Vec::with_capacity(len);
    let mut mu: Vec<Option<Mp>> = Vec::with_capacity(len);
    let mut lambda_n: Vec<Option<Mp>> = Vec::with_capacity(len);
    for n in 0..len {
        let nf = n as f64;
        let disc = t.gamma_t(nf + 0.5) * t.q_t(nf + 1.5) + t.p_t(nf + 1.0).square();
        if disc < 0.0 {
            if strict {
                return Err(Error::NegativeDiscriminant { n, value: disc.to_f64() });
            }
            mu_star.push(None);
            mu.push(None);
            lambda_n.push(None);
            continue;
        }
        let ms = disc.sqrt();
        let mm = &ms + t.p_t(nf + 0.5);
        let ln = if mm.is_zero() { None } else { Some(t.q_t(nf + 1.0) / &mm) };
        mu_star.push(Some(ms));
        mu.push(Some(mm));
        lambda_n.push(ln);
    }
    let mut mu_star_monotone = true;
    for n in 1..len {
        if let (Some(a), Some(b)) = (&mu_star[n - 1], &mu_star[n]) {
            if b <= a {
                mu_star_monotone = false;
            }
        }
    }

    // M̂ chain: M̂₁ = a₁ when μ₀ exists, otherwise seeded with M at the first
    // index whose predecessor μ is available (ratios are then still exact).
    let mut mhat: Vec<Option<Mp>> = vec![None; len];
    let start = (1..len).find(|&n| mu[n - 1].is_some());
    if let Some(n0) = start {
        mhat[n0] = Some(if n0 == 1 { a1 } else { m[n0].clone() });
        for n in n0 + 1..len {
            mhat[n] = match (&mhat[n - 1], &mu[n - 1]) {
                (Some(prev), Some(mu_prev)) => Some(mu_prev * prev / t.gamma_t(n as f64)),
                _ => None,
            };
        }
    }
    t.m = m;
    t.mu_star = mu_star;
    t.mu = mu;
    t.lambda_n = lambda_n;
    t.mhat = mhat;
    t.mhat_start = start.unwrap_or(0);
    t.m_all_positive = m_all_positive;
    t.mu_star_monotone = mu_star_monotone;
    Ok(())
}

/// Sign and scale of the first coefficient past the resonance index.
#[derive(Debug, Clone)]
pub struct ANextReport {
    /// N = ⌊R⌋.
    pub n: usize,
    pub a_next: f64,
    pub negative: bool,
    /// |a_{N+1}|·(N+1−R) / (A³·M_N), expected to sit in an O(1) band.
    pub scale_diagnostic: f64,
}

/// Evaluate a_{N+1} for R ∈ (N, N+1) together with its expected-scale
/// diagnostic |a_{N+1}|(N+1−R)/(A³M_N).
pub fn a_next_after_resonance(
    p: &ParamSet,
    s: &SonicSeries,
    t: &ComparisonTables,
) -> Result<ANextReport> {
    let n = p.eigen_ratio.to_f64().floor() as usize;
    if s.order() < n + 1 {
        return Err(Error::OutOfRange(format!(
            "series order {} below N+1 = {}",
            s.order(),
            n + 1
        )));
    }
    let a_next = &s.coeffs[n + 1];
    let gap = (n as f64 + 1.0) - &p.eigen_ratio;
    let scale = a_next.abs() * gap / (p.a_root.powi(3) * &t.m[n].abs());
    Ok(ANextReport {
        n,
        a_next: a_next.to_f64(),
        negative: a_next.is_sign_negative(),
        scale_diagnostic: scale.to_f64(),
    })
}

/// Exact-rational evaluation of the coefficient recurrence.
///
/// Valid whenever A = √R is rational (so α, δ, a₁ are all rational) and no
/// integer n ≤ k collides with R. Serves as the independent oracle for the
/// floating recurrence.
pub fn rational_sonic_series(a_root: &rug::Rational, k: usize) -> Result<Vec<rug::Rational>> {
    use rug::Rational;
    if *a_root <= 1u32 {
        return Err(Error::OutOfRange("rational oracle needs A > 1".into()));
    }
    let big_r = Rational::from(a_root * a_root);
    for n in 2..=k {
        if big_r == n as u32 {
            return Err(Error::IntegerResonance { n: n as u32, dist: 0.0, guard: 0.0 });
        }
    }
    let one = Rational::from(1u32);
    let lambda = Rational::from(a_root - &one) / Rational::from(a_root + &one);
    let alpha = Rational::from(&lambda * &lambda);
    let delta = {
        let d = Rational::from(&one - &lambda);
        Rational::from(&d * &d) * Rational::from(2u32)
    };
    let mut a: Vec<Rational> = Vec::with_capacity(k + 1);
    a.push(one.clone());
    if k >= 1 {
        let a1 = (Rational::from(2u32) * &lambda + Rational::from(4u32))
            / (Rational::from(3u32) * &lambda);
        a.push(a1);
    }
    for n in 2..=k {
        let nf = Rational::from(n as u32);
        let mut s1 = Rational::new();
        for j in 2..n {
            s1 += Rational::from(&a[j] * &a[n + 1 - j]);
        }
        let mut s0 = Rational::new();
        for j in 1..n {
            s0 += Rational::from(&a[j] * &a[n - j]);
        }
        let c1 = Rational::from(&alpha - &Rational::from(2u32))
            * Rational::from(&nf - &one)
            - Rational::from((4u32, 3u32)) * (Rational::from(&alpha - &Rational::from(4u32)));
        let mut e = Rational::from(&c1 * &a[n - 1]);
        e -= (Rational::from(&nf - &Rational::from((16u32, 3u32)))) * &a[n - 2];
        e -= Rational::from((3u32, 2u32)) * &alpha * (Rational::from(&nf + &one)) * &s1;
        e += (Rational::from((3u32, 2u32)) * &nf - Rational::from(2u32)) * &s0;
        let gamma_n = Rational::from(&delta * &(Rational::from(&big_r - &nf)));
        a.push(e / gamma_n);
    }
    Ok(a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rug::Rational;

    fn series_at(ratio: f64, k: usize, prec: u32) -> (ParamSet, SonicSeries) {
        let p = ParamSet::from_eigen_ratio(prec, ratio).unwrap();
        let s = compute_sonic_series(&p, k, &SeriesOpts::default()).unwrap();
        (p, s)
    }

    /// At R = 9 (α = 1/4) the first coefficients are exactly rational:
    /// a₁ = 10/3, a₂ = 65/9, a₃ = 1640/81.
    #[test]
    fn alpha_quarter_coefficients() {
        let (_, s) = series_at(9.0, 3, 192);
        let expect = [
            Rational::from(1u32),
            Rational::from((10u32, 3u32)),
            Rational::from((65u32, 9u32)),
            Rational::from((1640u32, 81u32)),
        ];
        for (n, e) in expect.iter().enumerate() {
            let em = Mp::from_rational(192, e);
            assert!(
                crate::num::rel_diff(&s.coeffs[n], &em, 1e-200) < 1e-50,
                "a_{n}"
            );
        }
    }

    #[test]
    fn a1_limit_is_two() {
        let p = ParamSet::from_eigen_ratio(192, 1e12).unwrap();
        assert!((p.a1().to_f64() - 2.0).abs() < 1e-5);
    }

    #[test]
    fn normalization_always_one() {
        for ratio in [2.5, 12.25, 25.5] {
            let (_, s) = series_at(ratio, 2, 128);
            assert_eq!(s.coeffs[0].to_f64(), 1.0);
        }
    }

    #[test]
    fn resonance_guard_fires() {
        let p = ParamSet::from_eigen_ratio(192, 9.0 + 1e-9).unwrap();
        let err = compute_sonic_series(&p, 12, &SeriesOpts::default());
        assert!(matches!(err, Err(Error::IntegerResonance { n: 9, .. })));
    }

    /// Extended-precision coefficients agree with the exact-rational oracle
    /// at A = 7/2 (R = 12.25) to within the guard-bit budget.
    #[test]
    fn rational_oracle_match() {
        let prec = 256;
        let a_root = Rational::from((7u32, 2u32));
        let oracle = rational_sonic_series(&a_root, 30).unwrap();
        let p = ParamSet::from_eigen_ratio(prec, 12.25).unwrap();
        let s = compute_sonic_series(&p, 30, &SeriesOpts::default()).unwrap();
        let tol = 2f64.powi(32 - prec as i32);
        for n in 0..=30 {
            let om = Mp::from_rational(prec, &oracle[n]);
            let rel = crate::num::rel_diff(&s.coeffs[n], &om, 1e-280);
            assert!(rel < tol, "n = {n}: rel = {rel:e}");
        }
    }

    #[test]
    fn rational_oracle_rejects_integer_ratio() {
        let a_root = Rational::from(3u32); // R = 9 resonates at n = 9
        assert!(matches!(
            rational_sonic_series(&a_root, 12),
            Err(Error::IntegerResonance { n: 9, .. })
        ));
    }

    /// The reformulated recurrence reproduces the raw one to roundoff.
    #[test]
    fn reformulation_identity() {
        let prec = 256;
        let (p, s) = series_at(25.5, 60, prec);
        let t = reformulate(&p, &s).unwrap();
        assert!(
            t.reformulation_residual < 2f64.powi(-(prec as i32 - 32)),
            "residual {:e}",
            t.reformulation_residual
        );
    }

    /// Large-A limits: s₁ → −17/3 with first correction 34/(3A);
    /// s₂ → −5/4 with −131/(12A); q₍₁₎ → 1, q₍₂₎ → −4/3.
    #[test]
    fn reformulation_asymptotics() {
        let a_big = 1000.0;
        let (p, s) = series_at(a_big * a_big, 6, 256);
        let t = reformulate(&p, &s).unwrap();
        let s1 = t.s1.to_f64();
        let s2 = t.s2.to_f64();
        // relative error against the limit matches the first-order term
        assert!(((s1 + 17.0 / 3.0) / (17.0 / 3.0)).abs() < 2.2 / a_big, "s1 = {s1}");
        assert!(
            (s1 - (-17.0 / 3.0 + 34.0 / (3.0 * a_big))).abs() < 500.0 / (a_big * a_big),
            "s1 first-order"
        );
        assert!(((s2 + 5.0 / 4.0) / (5.0 / 4.0)).abs() < 12.0 / a_big, "s2 = {s2}");
        assert!(
            (s2 - (-5.0 / 4.0 - 131.0 / (12.0 * a_big))).abs() < 500.0 / (a_big * a_big),
            "s2 first-order"
        );
        assert!((t.q_lin.0.to_f64() - 1.0).abs() < 10.0 / a_big);
        assert!((t.q_lin.1.to_f64() + 4.0 / 3.0).abs() < 40.0 / a_big);
        // p coefficients vanish like 1/A
        assert!((t.p_lin.0.to_f64() * a_big - 3.0).abs() < 30.0 / a_big);
    }

    #[test]
    fn m_sequence_and_lambda_band() {
        // λ_n ≍ √n over the table at R = 10^4 + 1/2
        let (p, s) = series_at(1e4 + 0.5, 6, 192);
        let mut t = reformulate(&p, &s).unwrap();
        comparison_sequences(&p, &mut t, false).unwrap();
        assert_eq!(t.m[0].to_f64(), 1.0);
        assert!((t.m[1].to_f64() - p.a1().to_f64()).abs() < 1e-40);
        let mut lo = f64::INFINITY;
        let mut hi = 0.0f64;
        for n in 1..t.lambda_n.len() {
            if let Some(l) = &t.lambda_n[n] {
                let v = l.to_f64() / (n as f64).sqrt();
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
        assert!(hi / lo < 10.0, "lambda_n/sqrt(n) band [{lo}, {hi}]");
        // M̂ ratio identity by construction
        for n in t.mhat_start + 1..t.mhat.len() {
            if let (Some(a), Some(b), Some(mu)) = (&t.mhat[n], &t.mhat[n - 1], &t.mu[n - 1]) {
                let lhs = a / b;
                let rhs = mu / t.gamma_t(n as f64);
                assert!(crate::num::rel_diff(&lhs, &rhs, 1e-200) < 1e-40);
            }
        }
    }

    #[test]
    fn strict_mode_raises_negative_discriminant() {
        let (p, s) = series_at(25.5, 6, 192);
        let mut t = reformulate(&p, &s).unwrap();
        let err = comparison_sequences(&p, &mut t, true);
        assert!(matches!(err, Err(Error::NegativeDiscriminant { .. })));
    }

    #[test]
    fn a_next_is_negative_across_interval() {
        for frac in [0.1, 0.5, 0.9] {
            let (p, s) = series_at(25.0 + frac, 26, 256);
            let mut t = reformulate(&p, &s).unwrap();
            comparison_sequences(&p, &mut t, false).unwrap();
            let rep = a_next_after_resonance(&p, &s, &t).unwrap();
            assert_eq!(rep.n, 25);
            assert!(rep.negative, "a_26 at R = 25+{frac}");
            assert!(rep.scale_diagnostic.is_finite() && rep.scale_diagnostic.abs() > 0.0);
        }
    }

    #[test]
    fn positivity_window() {
        let (p, s) = series_at(25.5, 25, 256);
        let lo = (p.eigen_ratio.to_f64().sqrt().ceil() as usize) + 1;
        for n in lo..=25 {
            assert!(s.coeffs[n] > 0.0, "a_{n} positive in the window");
        }
    }

    #[test]
    fn catalan_envelope() {
        let (_, s) = series_at(25.5, 120, 256);
        // the per-index envelope constant saturates from below, so the fit
        // must span the full range; a half-range fit should already be close
        let kc = s.catalan_fit(2..121);
        let kc_half = s.catalan_fit(2..60);
        assert!(s.catalan_excess(kc * (1.0 + 1e-12)) <= 1.0);
        assert!(kc > 1.0 && kc < 100.0, "fitted K_c = {kc}");
        assert!(kc / kc_half < 1.5, "fit saturation: {kc} vs half-range {kc_half}");
    }
}
