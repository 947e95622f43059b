//! Phase-plane fields of the autonomous system in both coordinate frames,
//! the renormalization map Ψ between them, the root curves of the fields,
//! the ℒ comparison operator, and the closed-form barrier catalogue.
//!
//! σ–w frame: Δ = (w−1)² − σ²,
//!            Δ₁ = w(w−1)(w−r) − (d·w − ℓ(r−1))σ²,
//!            Δ₂ = (σ/ℓ)[(ℓ+d−1)w² − (ℓ+d+ℓr−r)w + ℓr − ℓσ²].
//! τ–u frame: Δ_u = −2u² + 2u − (4/3)(α−4)τu + (10/3)τ²u,
//!            Δ_τ = 3(α−τ)u − 3α − (4α−1)τ − (α−2)τ² + τ³.
//! The conjugacy under Ψ(σ, w) = (−(1+a)(w−w₋), (1+a)²σ²) is
//! Δ_τ∘Ψ = −(1+a)³Δ₁ and Δ_u∘Ψ = 2(1+a)⁴σΔ₂.

use crate::error::{Error, Result};
use crate::num::Mp;
use crate::params::{ParamSet, DIM, ELL};
use crate::poly;

#[derive(Debug, Clone)]
pub struct SwFields {
    pub delta: Mp,
    pub delta1: Mp,
    pub delta2: Mp,
}

#[derive(Debug, Clone)]
pub struct TuFields {
    pub delta_u: Mp,
    pub delta_tau: Mp,
}

/// Δ, Δ₁, Δ₂ at (σ, w). Plain polynomial evaluation at working precision.
pub fn sw_fields(p: &ParamSet, sigma: &Mp, w: &Mp) -> SwFields {
    let d = DIM as f64;
    let l = ELL as f64;
    let s2 = sigma.square();
    let delta = (w - 1.0).square() - &s2;
    let delta1 = w * (w - 1.0) * (w - &p.r) - (d * w - l * (&p.r - 1.0)) * &s2;
    let q = (l + d - 1.0) * w.square() - ((l + d) + (l - 1.0) * &p.r) * w + l * &p.r - l * &s2;
    let delta2 = sigma * q / l;
    SwFields { delta, delta1, delta2 }
}

/// Δ_u, Δ_τ at (τ, u).
pub fn tu_fields(p: &ParamSet, tau: &Mp, u: &Mp) -> TuFields {
    let al = &p.alpha;
    let t2 = tau.square();
    let delta_u = u * (2.0 - 2.0 * u - 4.0 * (al - 4.0) * tau / 3.0 + 10.0 * &t2 / 3.0);
    let delta_tau =
        3.0 * (al - tau) * u - 3.0 * al - (4.0 * al - 1.0) * tau - (al - 2.0) * &t2 + &t2 * tau;
    TuFields { delta_u, delta_tau }
}

/// Ψ: (σ, w) ↦ (τ, u) = (−(1+a)(w − w₋), (1+a)²σ²).
pub fn psi(p: &ParamSet, sigma: &Mp, w: &Mp) -> (Mp, Mp) {
    let ap1 = 1.0 + &p.a;
    let tau = -(&ap1 * (w - &p.w_minus));
    let u = ap1.square() * sigma.square();
    (tau, u)
}

/// Ψ⁻¹ on the σ ≥ 0 sheet; rejects u < 0.
pub fn psi_inverse(p: &ParamSet, tau: &Mp, u: &Mp) -> Result<(Mp, Mp)> {
    if u.is_sign_negative() {
        return Err(Error::NegativeU(u.to_f64()));
    }
    let ap1 = 1.0 + &p.a;
    let sigma = u.sqrt() / &ap1;
    let w = &p.w_minus - tau / &ap1;
    Ok((sigma, w))
}

/// The three real roots of w ↦ Δ₁(σ, w) for σ > 0, ascending.
///
/// The cubic is w³ − (1+r)w² + (r − dσ²)w + ℓ(r−1)σ²; the phase portrait
/// guarantees three real roots, so the trigonometric form applies.
pub fn root_curves_w(p: &ParamSet, sigma: &Mp) -> Result<(Mp, Mp, Mp)> {
    let prec = p.prec;
    if !(*sigma > 0.0) {
        return Err(Error::OutOfRange("root_curves_w needs sigma > 0".into()));
    }
    let s2 = sigma.square();
    let b = -(1.0 + &p.r);
    let c = &p.r - DIM as f64 * &s2;
    let d = ELL as f64 * (&p.r - 1.0) * &s2;

    // depressed cubic t^3 + p t + q with w = t - b/3
    let pp = &c - b.square() / 3.0;
    let q = 2.0 * b.powi(3) / 27.0 - &b * &c / 3.0 + &d;
    if !(pp < 0.0) {
        return Err(Error::RootFailure(format!(
            "depressed cubic has p = {:e} >= 0 at sigma = {:e}",
            pp.to_f64(),
            sigma.to_f64()
        )));
    }
    let m = 2.0 * (-(&pp) / 3.0).sqrt();
    let mut arg = 3.0 * &q / (&pp * &m);
    if arg > 1.0 {
        if arg.to_f64() > 1.0 + 1e-20 {
            return Err(Error::RootFailure("cosine argument exceeds 1".into()));
        }
        arg = Mp::new(prec, 1.0);
    } else if arg < -1.0 {
        if arg.to_f64() < -1.0 - 1e-20 {
            return Err(Error::RootFailure("cosine argument below -1".into()));
        }
        arg = Mp::new(prec, -1.0);
    }
    let theta = arg.acos() / 3.0;
    let two_pi_3 = Mp::pi(prec) * 2.0 / 3.0;
    let shift = -(&b) / 3.0;
    let mut roots: Vec<Mp> = (0..3)
        .map(|k| (&theta - k as f64 * &two_pi_3).cos() * &m + &shift)
        .collect();
    roots.sort_by(|x, y| x.partial_cmp(y).unwrap());
    let w3 = roots.pop().unwrap();
    let w2 = roots.pop().unwrap();
    let w1 = roots.pop().unwrap();
    Ok((w1, w2, w3))
}

/// Threshold σ₂⁽⁰⁾ below which Δ₂ = 0 has no real branches.
pub fn sigma2_zero(p: &ParamSet) -> Mp {
    let disc0 = p.r.square() - 9.0 * &p.r + 9.0;
    if disc0 < 0.0 {
        (-(disc0) / 15.0).sqrt()
    } else {
        Mp::zero(p.prec)
    }
}

/// Both branches w₂∓ of Δ₂ = 0 at σ, when the discriminant allows them.
pub fn delta2_curves(p: &ParamSet, sigma: &Mp) -> Option<(Mp, Mp)> {
    let mut disc = p.r.square() - 9.0 * &p.r + 9.0 + 15.0 * sigma.square();
    if disc < 0.0 {
        // a roundoff-sized negative means sigma sits on the threshold itself
        if disc.to_f64() < -2f64.powi(-(p.prec as i32) / 2) {
            return None;
        }
        disc = Mp::zero(p.prec);
    }
    let sq = disc.sqrt();
    let base = &p.r + 3.0;
    Some(((&base - &sq) / 5.0, (&base + &sq) / 5.0))
}

/// ℒ[u](τ) = Δ_τ(τ, u)·u′ − Δ_u(τ, u) for a curve with value `u`, slope `du`.
pub fn l_operator(p: &ParamSet, tau: &Mp, u: &Mp, du: &Mp) -> Mp {
    let f = tu_fields(p, tau, u);
    f.delta_tau * du - f.delta_u
}

/// ℒ applied to the quadratic truncation 1 + a₁τ + a₂τ² collapses to
/// 𝒱τ³ + 𝒲τ⁴ with 𝒱 = −δ(R−3)·a₃ and 𝒲 = −4a₂² − 4a₂/3.
pub fn l_quadratic_truncation_coeffs(p: &ParamSet, a2: &Mp, a3: &Mp) -> (Mp, Mp) {
    let v = -(p.gamma_at(3.0)) * a3;
    let w = -4.0 * a2.square() - 4.0 * a2 / 3.0;
    (v, w)
}

/// A ratio of dense polynomials with analytic derivative.
#[derive(Debug, Clone)]
pub struct RationalFn {
    pub num: Vec<Mp>,
    pub den: Vec<Mp>,
}

impl RationalFn {
    fn from_poly(num: Vec<Mp>) -> Self {
        let prec = num[0].prec();
        RationalFn { num, den: vec![Mp::new(prec, 1.0)] }
    }

    pub fn eval(&self, t: &Mp) -> Mp {
        let n = poly::eval(&self.num, t);
        if self.den.len() == 1 {
            return n / &self.den[0];
        }
        n / poly::eval(&self.den, t)
    }

    /// Analytic derivative value (n′d − nd′)/d².
    pub fn eval_deriv(&self, t: &Mp) -> Mp {
        let np = poly::eval(&poly::deriv(&self.num), t);
        if self.den.len() == 1 {
            return np / &self.den[0];
        }
        let n = poly::eval(&self.num, t);
        let d = poly::eval(&self.den, t);
        let dp = poly::eval(&poly::deriv(&self.den), t);
        (np * &d - n * dp) / d.square()
    }
}

/// The closed-form curves used as comparison barriers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curve {
    /// u_g, the zero curve of Δ_u.
    Ug,
    /// u_b, the zero curve of Δ_τ (pole at τ = α).
    Ub,
    /// U_O, the chord 1 − τ/a joining Q₂ to Q₄.
    UO,
    /// U_σ₁, the lower confinement barrier on (0, α).
    USigma1,
    /// U_σ₂, the upper confinement barrier left of the sonic point.
    USigma2,
}

impl Curve {
    pub const CATALOG: [Curve; 5] =
        [Curve::Ug, Curve::Ub, Curve::UO, Curve::USigma1, Curve::USigma2];

    pub fn name(self) -> &'static str {
        match self {
            Curve::Ug => "u_g",
            Curve::Ub => "u_b",
            Curve::UO => "U_O",
            Curve::USigma1 => "U_sigma1",
            Curve::USigma2 => "U_sigma2",
        }
    }

    /// Pole of the curve itself, if any.
    pub fn pole(self, p: &ParamSet) -> Option<Mp> {
        match self {
            Curve::Ub => Some(p.alpha.clone()),
            Curve::USigma1 | Curve::USigma2 => Some((3.0 * &p.alpha + 1.0) / 2.0),
            _ => None,
        }
    }

    /// The curve as a rational function of τ.
    pub fn value_fn(self, p: &ParamSet) -> RationalFn {
        let prec = p.prec;
        let al = &p.alpha;
        let one = || Mp::new(prec, 1.0);
        match self {
            Curve::Ug => RationalFn::from_poly(vec![
                one(),
                2.0 * (4.0 - al) / 3.0,
                Mp::ratio(prec, 5, 3),
            ]),
            Curve::Ub => RationalFn {
                num: vec![3.0 * al, 4.0 * al - 1.0, al - 2.0, Mp::new(prec, -1.0)],
                den: vec![3.0 * al, Mp::new(prec, -3.0)],
            },
            Curve::UO => RationalFn::from_poly(vec![one(), -(1.0 / &p.a)]),
            Curve::USigma1 => {
                // (1/9) [ (2(α+1)τ + 2(3α+1) + (1+τ)D) / D ]², D = 3α+1 − 2τ
                let d = big_d(p);
                let mut pn = poly::mul(&[one(), one()], &d, usize::MAX, prec);
                pn = poly::add(&pn, &[2.0 * (3.0 * al + 1.0), 2.0 * (al + 1.0)], prec);
                let num = poly::scale(
                    &poly::mul(&pn, &pn, usize::MAX, prec),
                    &Mp::ratio(prec, 1, 9),
                );
                RationalFn { num, den: poly::mul(&d, &d, usize::MAX, prec) }
            }
            Curve::USigma2 => {
                // [4(1+τ)((α+1)τ + 3α+1) − (1+τ)² D] / (3D)
                let d = big_d(p);
                let one_t = [one(), one()];
                let lin = [3.0 * al + 1.0, al + 1.0];
                let t1 = poly::scale(
                    &poly::mul(&one_t, &lin, usize::MAX, prec),
                    &Mp::new(prec, 4.0),
                );
                let t2 = poly::mul(
                    &poly::mul(&one_t, &one_t, usize::MAX, prec),
                    &d,
                    usize::MAX,
                    prec,
                );
                let num = poly::add(&t1, &poly::scale(&t2, &Mp::new(prec, -1.0)), prec);
                RationalFn { num, den: poly::scale(&d, &Mp::new(prec, 3.0)) }
            }
        }
    }

    /// Value with pole detection.
    pub fn value(self, p: &ParamSet, tau: &Mp) -> Result<Mp> {
        self.guard_pole(p, tau)?;
        Ok(self.value_fn(p).eval(tau))
    }

    /// Analytic slope with pole detection.
    pub fn slope(self, p: &ParamSet, tau: &Mp) -> Result<Mp> {
        self.guard_pole(p, tau)?;
        Ok(self.value_fn(p).eval_deriv(tau))
    }

    fn guard_pole(self, p: &ParamSet, tau: &Mp) -> Result<()> {
        if let Some(pole) = self.pole(p) {
            if (tau - pole).abs().to_f64() < 1e-14 {
                return Err(Error::Pole { curve: self.name(), tau: tau.to_f64() });
            }
        }
        Ok(())
    }

    /// The closed form of ℒ[curve], where one exists.
    ///
    /// ℒ[u_g]  = −(4/3)τ(τ+1−α)(2τ+1−α)(5τ+4−α),
    /// ℒ[U_O]  = τ(τ−a)(7a(a+3)τ − 4a³ + 27a − 9)/(3a²(a+3)),
    /// ℒ[U_σ₁] = −16τ(τ+1−α)·P(τ)·φ₁(τ)/(81·D⁵),
    /// ℒ[U_σ₂] = 16τ(τ+1)(α−1−2τ)(α−1−τ)[−(1+α)τ² + (3α+1)(α−1−2τ)]/(3D³),
    /// with D = 3α+1−2τ, P the numerator polynomial of 3√U_σ₁, and φ₁ the
    /// quintic from the confinement computation.
    pub fn l_closed_form(self, p: &ParamSet) -> Option<RationalFn> {
        let prec = p.prec;
        let al = &p.alpha;
        let one = || Mp::new(prec, 1.0);
        let tau_factor = [Mp::zero(prec), one()];
        match self {
            Curve::Ug => {
                let f1 = [1.0 - al, one()];
                let f2 = [1.0 - al, Mp::new(prec, 2.0)];
                let f3 = [4.0 - al, Mp::new(prec, 5.0)];
                let mut num = poly::mul(&f1, &f2, usize::MAX, prec);
                num = poly::mul(&num, &f3, usize::MAX, prec);
                num = poly::mul(&num, &tau_factor, usize::MAX, prec);
                Some(RationalFn::from_poly(poly::scale(&num, &Mp::ratio(prec, -4, 3))))
            }
            Curve::UO => {
                let a = &p.a;
                let f1 = [-a.clone(), one()];
                let f2 = [-4.0 * a.powi(3) + 27.0 * a - 9.0, 7.0 * a * (a + 3.0)];
                let mut num = poly::mul(&f1, &f2, usize::MAX, prec);
                num = poly::mul(&num, &tau_factor, usize::MAX, prec);
                let den = 3.0 * a.square() * (a + 3.0);
                Some(RationalFn { num, den: vec![den] })
            }
            Curve::USigma1 => {
                let d = big_d(p);
                let mut pn = poly::mul(&[one(), one()], &d, usize::MAX, prec);
                pn = poly::add(&pn, &[2.0 * (3.0 * al + 1.0), 2.0 * (al + 1.0)], prec);
                let a1m = 1.0 - al;
                let a3p = 3.0 * al + 1.0;
                let phi1 = vec![
                    9.0 * a1m.square() * a3p.square(),
                    6.0 * &a1m * &a3p * (2.0 + 11.0 * al - 5.0 * al.square()),
                    &a3p * (19.0 + 112.0 * al - 83.0 * al.square()),
                    4.0 * (-9.0 + 2.0 * al + 67.0 * al.square()),
                    -4.0 * (9.0 + 29.0 * al),
                    Mp::new(prec, 16.0),
                ];
                let lead = poly::mul(&tau_factor, &[a1m, one()], usize::MAX, prec);
                let mut num = poly::mul(&lead, &pn, usize::MAX, prec);
                num = poly::mul(&num, &phi1, usize::MAX, prec);
                let num = poly::scale(&num, &Mp::ratio(prec, -16, 81));
                let mut den = d.clone();
                for _ in 0..4 {
                    den = poly::mul(&den, &d, usize::MAX, prec);
                }
                Some(RationalFn { num, den })
            }
            Curve::USigma2 => {
                let d = big_d(p);
                let am1 = al - 1.0;
                let f2 = [one(), one()];
                let f3 = [am1.clone(), Mp::new(prec, -2.0)];
                let f4 = [am1.clone(), Mp::new(prec, -1.0)];
                let a3p = 3.0 * al + 1.0;
                let f5 = vec![&a3p * &am1, -2.0 * &a3p, -(1.0 + al)];
                let mut num = poly::mul(&tau_factor, &f2, usize::MAX, prec);
                num = poly::mul(&num, &f3, usize::MAX, prec);
                num = poly::mul(&num, &f4, usize::MAX, prec);
                num = poly::mul(&num, &f5, usize::MAX, prec);
                let num = poly::scale(&num, &Mp::ratio(prec, 16, 3));
                let mut den = poly::mul(&d, &d, usize::MAX, prec);
                den = poly::mul(&den, &d, usize::MAX, prec);
                Some(RationalFn { num, den })
            }
            Curve::Ub => None,
        }
    }
}

fn big_d(p: &ParamSet) -> Vec<Mp> {
    vec![3.0 * &p.alpha + 1.0, Mp::new(p.prec, -2.0)]
}

/// Result of a sampled sign certificate with derivative-bounded gap control.
#[derive(Debug, Clone)]
pub struct SignCertificate {
    pub name: String,
    pub lo: f64,
    pub hi: f64,
    pub want_negative: bool,
    pub samples: usize,
    /// Smallest |value| seen across the sample grid.
    pub min_abs_margin: f64,
    pub worst_abscissa: f64,
    /// Every sample had the requested sign.
    pub sign_uniform: bool,
    /// The inter-sample Lipschitz bound kept the sign pinned between samples.
    pub gap_controlled: bool,
}

impl SignCertificate {
    pub fn certified(&self) -> bool {
        self.sign_uniform && self.gap_controlled
    }
}

/// Certify a one-signed rational function on [lo, hi] by dense sampling.
///
/// Endpoints where the function vanishes structurally are excluded by
/// shrinking the interval by `endpoint_shrink` of its length on each side.
/// Between samples the sign is pinned by the analytic derivative: on each
/// cell the possible excursion is bounded by h·max(|f′|) with a factor-2
/// safety margin on the derivative.
pub fn certify_sign(
    name: &str,
    f: &RationalFn,
    lo: &Mp,
    hi: &Mp,
    want_negative: bool,
    samples: usize,
    endpoint_shrink: f64,
) -> SignCertificate {
    // structural zeros at the interval ends defeat a pointwise Lipschitz
    // bound within a few cells of them, so the certified interval always
    // stays at least six cells clear of the supplied endpoints
    let endpoint_shrink = endpoint_shrink.max(6.0 / samples as f64);
    let len = hi - lo;
    let a = lo + &len * endpoint_shrink;
    let b = hi - &len * endpoint_shrink;
    let h = (&b - &a) / (samples as f64 - 1.0);
    let hf = h.to_f64().abs();

    let flip = if want_negative { -1.0 } else { 1.0 };
    let mut sign_uniform = true;
    let mut gap_controlled = true;
    let mut min_abs = f64::INFINITY;
    let mut worst = a.to_f64();

    let mut prev: Option<(f64, f64)> = None;
    for i in 0..samples {
        let t = &a + i as f64 * &h;
        let v = f.eval(&t).to_f64() * flip;
        let dv = f.eval_deriv(&t).to_f64().abs();
        if !(v > 0.0) {
            sign_uniform = false;
        }
        if v.abs() < min_abs {
            min_abs = v.abs();
            worst = t.to_f64();
        }
        if let Some((pv, pd)) = prev {
            let lip = 2.0 * pd.max(dv);
            if pv.min(v) - lip * hf <= 0.0 {
                gap_controlled = false;
            }
        }
        prev = Some((v, dv));
    }
    SignCertificate {
        name: name.to_string(),
        lo: a.to_f64(),
        hi: b.to_f64(),
        want_negative,
        samples,
        min_abs_margin: min_abs,
        worst_abscissa: worst,
        sign_uniform,
        gap_controlled,
    }
}

/// The standing sign certificates on their stated domains:
/// ℒ[U_σ₁] < 0 on (0, α); ℒ[U_σ₂] > 0 on (τ(Q₅), 0); ℒ[U_O] < 0 on (0, a)
/// when R > 5.
pub fn standing_certificates(p: &ParamSet, samples: usize) -> Vec<SignCertificate> {
    let prec = p.prec;
    let mut out = Vec::new();
    let f1 = Curve::USigma1.l_closed_form(p).unwrap();
    out.push(certify_sign(
        "L[U_sigma1] < 0 on (0, alpha)",
        &f1,
        &Mp::zero(prec),
        &p.alpha,
        true,
        samples,
        1e-4,
    ));
    let f2 = Curve::USigma2.l_closed_form(p).unwrap();
    let q5 = crate::params::special_points(p).q5.0;
    out.push(certify_sign(
        "L[U_sigma2] > 0 on (tau(Q5), 0)",
        &f2,
        &q5,
        &Mp::zero(prec),
        false,
        samples,
        1e-4,
    ));
    if p.eigen_ratio > 5.0 {
        let f3 = Curve::UO.l_closed_form(p).unwrap();
        out.push(certify_sign(
            "L[U_O] < 0 on (0, a)",
            &f3,
            &Mp::zero(prec),
            &p.a,
            true,
            samples,
            1e-4,
        ));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::num::rel_diff;
    use crate::params::special_points;

    fn p25() -> ParamSet {
        ParamSet::from_eigen_ratio(192, 25.5).unwrap()
    }

    #[test]
    fn sonic_point_annihilates_all_fields() {
        let p = p25();
        let sp = special_points(&p);
        let f = sw_fields(&p, &sp.p2.0, &sp.p2.1);
        assert!(f.delta.to_f64().abs() < 1e-50);
        assert!(f.delta1.to_f64().abs() < 1e-50);
        assert!(f.delta2.to_f64().abs() < 1e-50);
        let g = tu_fields(&p, &Mp::zero(192), &Mp::new(192, 1.0));
        assert!(g.delta_u.to_f64().abs() < 1e-50);
        assert!(g.delta_tau.to_f64().abs() < 1e-50);
    }

    #[test]
    fn sonic_line_and_origin() {
        let p = p25();
        for s in [0.3, 0.9, 2.0] {
            let sigma = Mp::new(192, s);
            let f = sw_fields(&p, &sigma, &(1.0 - &sigma));
            assert!(f.delta.to_f64().abs() < 1e-50, "sonic line w = 1 - sigma");
        }
        let f0 = sw_fields(&p, &Mp::zero(192), &Mp::zero(192));
        assert!((f0.delta.to_f64() - 1.0).abs() < 1e-50);
        assert!(f0.delta1.to_f64().abs() < 1e-50);
        assert!(f0.delta2.to_f64().abs() < 1e-50);
    }

    #[test]
    fn psi_conjugacy_on_samples() {
        let p = p25();
        let ap1 = 1.0 + &p.a;
        for (s, w) in [(0.4, 0.3), (1.3, 0.8), (0.05, 0.61), (2.5, 1.4)] {
            let sigma = Mp::new(192, s);
            let ww = Mp::new(192, w);
            let (tau, u) = psi(&p, &sigma, &ww);
            let swf = sw_fields(&p, &sigma, &ww);
            let tuf = tu_fields(&p, &tau, &u);
            let rhs_t = -(ap1.powi(3) * &swf.delta1);
            assert!(rel_diff(&tuf.delta_tau, &rhs_t, 1e-30) < 1e-45);
            let rhs_u = 2.0 * ap1.powi(4) * &sigma * &swf.delta2;
            assert!(rel_diff(&tuf.delta_u, &rhs_u, 1e-30) < 1e-45);
            let (s2, w2) = psi_inverse(&p, &tau, &u).unwrap();
            assert!(rel_diff(&s2, &sigma, 1e-30) < 1e-50);
            assert!(rel_diff(&w2, &ww, 1e-30) < 1e-50);
        }
        assert!(matches!(
            psi_inverse(&p, &Mp::new(192, 0.1), &Mp::new(192, -0.5)),
            Err(Error::NegativeU(_))
        ));
    }

    #[test]
    fn psi_maps_origin_to_q4() {
        let p = p25();
        let (tau, u) = psi(&p, &Mp::zero(192), &Mp::zero(192));
        assert!(rel_diff(&tau, &p.a, 1e-30) < 1e-50);
        assert!(u.to_f64() == 0.0);
    }

    #[test]
    fn cubic_roots_annihilate_delta1_and_obey_order() {
        let p = p25();
        for s in [1e-3, 0.2, 0.9, 4.0, 50.0] {
            let sigma = Mp::new(192, s);
            let (w1, w2, w3) = root_curves_w(&p, &sigma).unwrap();
            for w in [&w1, &w2, &w3] {
                let f = sw_fields(&p, &sigma, w);
                let scale = 1.0 + s * s * s;
                assert!(
                    f.delta1.to_f64().abs() / scale < 1e-40,
                    "Delta1 at root, sigma = {s}"
                );
            }
            let r = p.r.to_f64();
            assert!(w1.to_f64() <= 1e-12);
            assert!(w2.to_f64() > r - 1.0 && w2.to_f64() <= 1.0 + 1e-12);
            assert!(w3.to_f64() >= r - 1e-12);
        }
        let (w1, w2, w3) = root_curves_w(&p, &Mp::new(192, 1e-8)).unwrap();
        assert!(w1.to_f64().abs() < 1e-14);
        assert!((w2.to_f64() - 1.0).abs() < 1e-14);
        assert!((w3.to_f64() - p.r.to_f64()).abs() < 1e-14);
    }

    #[test]
    fn delta2_branches() {
        let p = p25();
        let s20 = sigma2_zero(&p);
        if s20.to_f64() > 0.0 {
            let (lo, hi) = delta2_curves(&p, &s20).unwrap();
            let mid = (&p.r + 3.0) / 5.0;
            // disc vanishes only to working precision, so its sqrt is ~2^-96
            assert!((lo - &mid).abs().to_f64() < 1e-25);
            assert!((hi - &mid).abs().to_f64() < 1e-25);
        }
        for s in [0.5, 1.0, 3.0] {
            let sigma = Mp::new(192, s);
            if let Some((lo, hi)) = delta2_curves(&p, &sigma) {
                for w in [&lo, &hi] {
                    let f = sw_fields(&p, &sigma, w);
                    assert!(f.delta2.to_f64().abs() < 1e-40);
                }
            }
        }
        // P5 solves Delta_1 = Delta_2 = 0
        let sp = special_points(&p);
        let f = sw_fields(&p, &sp.p5.0, &sp.p5.1);
        assert!(f.delta1.to_f64().abs() < 1e-45);
        assert!(f.delta2.to_f64().abs() < 1e-45);
    }

    #[test]
    fn tu_zero_curves_match_fields() {
        let p = p25();
        for t in [-0.2, -0.05, 0.1, 0.3] {
            let tau = Mp::new(192, t);
            let ug = Curve::Ug.value(&p, &tau).unwrap();
            let f = tu_fields(&p, &tau, &ug);
            assert!(f.delta_u.to_f64().abs() < 1e-45);
            let ub = Curve::Ub.value(&p, &tau).unwrap();
            let g = tu_fields(&p, &tau, &ub);
            assert!(g.delta_tau.to_f64().abs() < 1e-45);
        }
        assert!(matches!(
            Curve::Ub.value(&p, &p.alpha),
            Err(Error::Pole { curve: "u_b", .. })
        ));
    }

    #[test]
    fn slope_sandwich_at_origin() {
        for ratio in [2.5, 9.0, 25.5, 900.0] {
            let p = ParamSet::from_eigen_ratio(192, ratio).unwrap();
            let zero = Mp::zero(192);
            let g = Curve::Ug.slope(&p, &zero).unwrap().to_f64();
            let b = Curve::Ub.slope(&p, &zero).unwrap().to_f64();
            let a1 = p.a1().to_f64();
            assert!(g < a1 && a1 < b, "slope sandwich at R = {ratio}");
            let al = p.alpha.to_f64();
            assert!((g - 2.0 / 3.0 * (4.0 - al)).abs() < 1e-12);
            assert!((b - (4.0 * al + 2.0) / (3.0 * al)).abs() < 1e-12);
        }
    }

    #[test]
    fn closed_form_l_matches_generic_l() {
        let p = p25();
        for curve in [Curve::Ug, Curve::UO, Curve::USigma1, Curve::USigma2] {
            let vf = curve.value_fn(&p);
            let lf = curve.l_closed_form(&p).unwrap();
            for i in 1..40 {
                let t = -0.21 + 0.01 * i as f64;
                if let Some(pole) = curve.pole(&p) {
                    if (pole.to_f64() - t).abs() < 1e-3 {
                        continue;
                    }
                }
                let tau = Mp::new(192, t);
                let u = vf.eval(&tau);
                let du = vf.eval_deriv(&tau);
                let generic = l_operator(&p, &tau, &u, &du);
                let closed = lf.eval(&tau);
                assert!(
                    rel_diff(&generic, &closed, 1e-25) < 1e-40,
                    "{} at tau = {t}",
                    curve.name()
                );
            }
        }
    }

    #[test]
    fn standing_certificates_hold_at_moderate_ratio() {
        let p = p25();
        for cert in standing_certificates(&p, 512) {
            assert!(cert.sign_uniform, "{}: sign violated at {}", cert.name, cert.worst_abscissa);
        }
    }

    #[test]
    fn u_sigma2_minus_u_b_identity() {
        // U_σ2 − u_b = −2τ(1+τ)(α−1−2τ)(α−1−τ)/(3D(α−τ))
        let p = p25();
        let al = p.alpha.to_f64();
        for t in [-0.22, -0.1, -0.02, 0.05] {
            let tau = Mp::new(192, t);
            let lhs = Curve::USigma2.value(&p, &tau).unwrap() - Curve::Ub.value(&p, &tau).unwrap();
            let d = 3.0 * (al - t) * (3.0 * al + 1.0 - 2.0 * t);
            let rhs = -2.0 * t * (1.0 + t) * (al - 1.0 - 2.0 * t) * (al - 1.0 - t) / d;
            assert!((lhs.to_f64() - rhs).abs() < 1e-13, "tau = {t}");
        }
    }
}
