//! Parameter algebra linking the similitude exponent r, the sonic roots
//! w±, the renormalization constants a and α, and the eigenvalue ratio R.
//!
//! All maps in the chain r ↦ w₋ ↦ a ↦ α ↦ R are strictly increasing
//! bijections on their domains, so any entry point determines the rest.
//! R is the canonical entry point here because the shooting search
//! bisects on it.

use crate::error::{Error, Result};
use crate::num::Mp;

/// Physical dimension; fixed by the monatomic degenerate case.
pub const DIM: u32 = 3;
/// ℓ = 2/(γ−1); equal to the dimension in the degenerate case γ = 5/3.
pub const ELL: u32 = 3;

/// The full parameter cluster at working precision.
///
/// Invariants maintained by the constructors:
/// - `w_minus`, `w_plus` are the roots of w² − r·w + 3(r−1)/2, both in (r−1, 1),
/// - `a = w_minus / (1 − w_minus)`, `alpha = a(a+1)/(a+3)`, `lambda = √alpha`,
/// - `a_root = √eigen_ratio = (1+lambda)/(1−lambda)`,
/// - `delta = 2(1−lambda)²`, so `delta·(R−t) = 8(a_root²−t)/(a_root+1)²`.
#[derive(Debug, Clone)]
pub struct ParamSet {
    pub prec: u32,
    pub r: Mp,
    pub w_minus: Mp,
    pub w_plus: Mp,
    pub a: Mp,
    pub alpha: Mp,
    pub lambda: Mp,
    /// A = √R.
    pub a_root: Mp,
    /// R = λ₋/λ₊, the eigenvalue ratio at the sonic point.
    pub eigen_ratio: Mp,
    pub delta: Mp,
}

/// Upper end of the admissible similitude exponent range, 3 − √3.
pub fn r_max(prec: u32) -> Mp {
    3.0 - Mp::new(prec, 3.0).sqrt()
}

impl ParamSet {
    /// Build from the similitude exponent r ∈ (1, 3 − √3).
    pub fn from_r(prec: u32, r: f64) -> Result<Self> {
        Self::from_r_mp(Mp::new(prec, r))
    }

    pub fn from_r_mp(r: Mp) -> Result<Self> {
        let prec = r.prec();
        if !(r > 1.0) || !(r < r_max(prec)) {
            return Err(Error::OutOfRange(format!(
                "r = {} outside the open interval (1, 3 - sqrt(3))",
                r.to_f64()
            )));
        }
        let disc = r.square() - 6.0 * &r + 6.0;
        if !(disc > 0.0) {
            return Err(Error::OutOfRange(format!(
                "r = {}: r^2 - 6r + 6 = {:e} not positive",
                r.to_f64(),
                disc.to_f64()
            )));
        }
        let w_plus = (&r + disc.sqrt()) / 2.0;
        // roots multiply to 3(r-1)/2; this form avoids cancellation in r - sqrt
        let w_minus = 1.5 * (&r - 1.0) / &w_plus;
        let a = &w_minus / (1.0 - &w_minus);
        Self::from_parts(prec, a, Some((r, w_minus, w_plus)))
    }

    /// Build from the sonic root w₋ ∈ (0, (3 − √3)/2).
    pub fn from_w_minus(prec: u32, w_minus: f64) -> Result<Self> {
        let hi = (3.0 - 3.0f64.sqrt()) / 2.0;
        if !(w_minus > 0.0 && w_minus < hi) {
            return Err(Error::OutOfRange(format!(
                "w_minus = {w_minus} outside (0, (3 - sqrt(3))/2)"
            )));
        }
        let w = Mp::new(prec, w_minus);
        Self::from_parts(prec, &w / (1.0 - &w), None)
    }

    /// Build from the renormalization parameter a ∈ (0, √3).
    pub fn from_a(prec: u32, a: f64) -> Result<Self> {
        if !(a > 0.0 && a < 3.0f64.sqrt()) {
            return Err(Error::OutOfRange(format!("a = {a} outside (0, sqrt(3))")));
        }
        Self::from_parts(prec, Mp::new(prec, a), None)
    }

    /// Build from α ∈ (0, 1).
    pub fn from_alpha(prec: u32, alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::OutOfRange(format!("alpha = {alpha} outside (0, 1)")));
        }
        Self::from_alpha_mp(Mp::new(prec, alpha))
    }

    /// Build from λ = √α ∈ (0, 1).
    pub fn from_lambda(prec: u32, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::OutOfRange(format!("lambda = {lambda} outside (0, 1)")));
        }
        let l = Mp::new(prec, lambda);
        Self::from_alpha_mp(l.square())
    }

    /// Build from the eigenvalue ratio R > 1.
    pub fn from_eigen_ratio(prec: u32, eigen_ratio: f64) -> Result<Self> {
        Self::from_eigen_ratio_mp(Mp::new(prec, eigen_ratio))
    }

    pub fn from_eigen_ratio_mp(eigen_ratio: Mp) -> Result<Self> {
        if !(eigen_ratio > 1.0) {
            return Err(Error::OutOfRange(format!(
                "R = {} must exceed 1 (alpha -> 0 degenerates the map)",
                eigen_ratio.to_f64()
            )));
        }
        let a_root = eigen_ratio.sqrt();
        let lambda = (&a_root - 1.0) / (&a_root + 1.0);
        Self::from_alpha_mp(lambda.square())
    }

    fn from_alpha_mp(alpha: Mp) -> Result<Self> {
        let prec = alpha.prec();
        if !(alpha > 0.0) || !(alpha < 1.0) {
            return Err(Error::OutOfRange(format!(
                "alpha = {} outside (0, 1)",
                alpha.to_f64()
            )));
        }
        // positive root of a^2 + (1 - alpha) a - 3 alpha = 0, cancellation-free
        let b = 1.0 - &alpha;
        let disc = (b.square() + 12.0 * &alpha).sqrt();
        let a = 6.0 * &alpha / (b + disc);
        Self::from_parts(prec, a, None)
    }

    fn from_parts(prec: u32, a: Mp, rw: Option<(Mp, Mp, Mp)>) -> Result<Self> {
        let a1 = &a + 1.0;
        let a3 = &a + 3.0;
        let alpha = &a * &a1 / &a3;
        let lambda = alpha.sqrt();
        let one_m = 1.0 - &lambda;
        let a_root = (1.0 + &lambda) / &one_m;
        let eigen_ratio = a_root.square();
        let delta = 2.0 * one_m.square();
        let (r, w_minus, w_plus) = match rw {
            Some(t) => t,
            None => {
                let r = (a.square() + 6.0 * &a + 3.0) / (&a1 * &a3);
                let w_minus = &a / &a1;
                let w_plus = &r - &w_minus;
                (r, w_minus, w_plus)
            }
        };
        Ok(ParamSet {
            prec,
            r,
            w_minus,
            w_plus,
            a,
            alpha,
            lambda,
            a_root,
            eigen_ratio,
            delta,
        })
    }

    /// σ(P₂) = 1 − w₋, the sonic-point abscissa.
    pub fn sigma2(&self) -> Mp {
        1.0 - &self.w_minus
    }

    /// γ_t = δ(R − t) = 8(A² − t)/(A + 1)², valid for real t.
    pub fn gamma(&self, t: &Mp) -> Mp {
        &self.delta * (&self.eigen_ratio - t)
    }

    pub fn gamma_at(&self, t: f64) -> Mp {
        &self.delta * (&self.eigen_ratio - t)
    }

    /// Sonic eigenvalues (λ₋, λ₊) = (−2(√α+1)², −2(√α−1)²); λ₋/λ₊ = R.
    pub fn eigenvalues(&self) -> (Mp, Mp) {
        let lm = -2.0 * (&self.lambda + 1.0).square();
        let lp = -2.0 * (&self.lambda - 1.0).square();
        (lm, lp)
    }

    /// Residual of λ² + 4(α+1)λ + 4(α−1)² at λ (vanishes at λ±).
    pub fn eigen_residual(&self, lam: &Mp) -> Mp {
        lam.square() + 4.0 * (&self.alpha + 1.0) * lam + 4.0 * (&self.alpha - 1.0).square()
    }

    /// Slope of the local analytic solution at the sonic point,
    /// a₁ = (2√α + 4)/(3√α).
    pub fn a1(&self) -> Mp {
        (2.0 * &self.lambda + 4.0) / (3.0 * &self.lambda)
    }
}

/// The catalogue of special points in both phase planes.
///
/// P₆ sits at σ = +∞ on w = r − 1 and Q₆ at u = +∞ over τ = α, so only the
/// finite coordinate of each is stored.
#[derive(Debug, Clone)]
pub struct SpecialPoints {
    pub p1: (Mp, Mp),
    pub p2: (Mp, Mp),
    pub p3: (Mp, Mp),
    pub p4: (Mp, Mp),
    pub p5: (Mp, Mp),
    /// The companion root point (0, r) on the σ = 0 axis.
    pub p5_prime: (Mp, Mp),
    /// w-limit of P₆ as σ → ∞.
    pub p6_w: Mp,
    pub q2: (Mp, Mp),
    pub q4: (Mp, Mp),
    pub q5: (Mp, Mp),
    /// τ(Q₆) = α; u diverges there.
    pub tau_q6: Mp,
    /// σ(P₂) = 1 − w₋.
    pub sigma2: Mp,
}

/// All special points of the σ–w and τ–u planes for one parameter set.
pub fn special_points(p: &ParamSet) -> SpecialPoints {
    let pr = p.prec;
    let z = || Mp::zero(pr);
    let sigma2 = p.sigma2();
    let p5_s = Mp::new(pr, 3.0).sqrt() * &p.r / 6.0;
    let a3 = &p.a + 3.0;
    let q5_tau = (p.a.square() - 3.0) / (2.0 * &a3);
    let q5_u = (p.a.square() + 6.0 * &p.a + 3.0).square() / (12.0 * a3.square());
    SpecialPoints {
        p1: (z(), Mp::new(pr, 1.0)),
        p2: (sigma2.clone(), p.w_minus.clone()),
        p3: (1.0 - &p.w_plus, p.w_plus.clone()),
        p4: (z(), z()),
        p5: (p5_s, &p.r / 2.0),
        p5_prime: (z(), p.r.clone()),
        p6_w: &p.r - 1.0,
        q2: (z(), Mp::new(pr, 1.0)),
        q4: (p.a.clone(), z()),
        q5: (q5_tau, q5_u),
        tau_q6: p.alpha.clone(),
        sigma2,
    }
}
