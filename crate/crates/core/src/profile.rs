//! Assembly of the full global profile at a matched eigenvalue ratio,
//! the Emden and radial transforms, and the repulsivity verification.
//!
//! The profile is stitched from three pieces: the far-field branch
//! integrated down to the series handoff, the local analytic series across
//! the sonic point, and the post-sonic descent to the origin. The abscissa
//! x is carried alongside: analytically through the sonic neighbourhood
//! (Δ/Δ₁ is a ratio of series with simple zeros there) and by quadrature
//! dx/dσ = −Δ/Δ₂ elsewhere.

use crate::error::{Error, Result};
use crate::fields::{self, certify_sign, Curve, RationalFn, SignCertificate};
use crate::integrate::{
    far_field_start, run_sw_leg, OdeOpts, SwLegConfig, SwStop,
};
use crate::num::Mp;
use crate::params::{ParamSet, DIM, ELL};
use crate::poly;
use crate::series::{compute_sonic_series, SeriesOpts, SonicSeries};
use crate::shoot::ShootResult;

#[derive(Debug, Clone)]
pub struct ProfileConfig {
    pub prec: u32,
    pub ode_rel_tol: f64,
    pub sigma_max: f64,
    pub sigma_floor: f64,
    /// Grid points per side, geometric in σ.
    pub grid_per_side: usize,
    pub series_extra: usize,
    /// Stitch agreement budget, in units of the integration tolerance.
    pub stitch_factor: f64,
}

impl Default for ProfileConfig {
    fn default() -> Self {
        ProfileConfig {
            prec: 256,
            ode_rel_tol: 1e-24,
            sigma_max: 1e3,
            sigma_floor: 1e-6,
            grid_per_side: 4096,
            series_extra: 200,
            stitch_factor: 10.0,
        }
    }
}

/// One profile sample; everything downstream of construction is f64.
#[derive(Debug, Clone, Copy)]
pub struct ProfileSample {
    pub x: f64,
    pub sigma: f64,
    pub w: f64,
    pub sigma_prime: f64,
    pub w_prime: f64,
    pub delta: f64,
    pub delta1: f64,
    pub delta2: f64,
    /// Z = eˣ, U_E = −Zw, S_E = ℓZσ.
    pub z: f64,
    pub u_e: f64,
    pub s_e: f64,
    /// 1 − (w + w′) − |σ + σ′|.
    pub margin_ii: f64,
    /// 1 − w − |σ + σ′|.
    pub margin_iii: f64,
    /// Relative residual of the radial system at this sample.
    pub radial_residual: f64,
    /// |σ+σ′ − closed form| relative to scale.
    pub f_identity_residual: f64,
}

#[derive(Debug, Clone)]
pub struct GlobalProfile {
    pub eigen_ratio: f64,
    pub r: f64,
    pub n: u32,
    /// Samples ordered by strictly increasing x.
    pub samples: Vec<ProfileSample>,
    /// Sonic slopes at x = 0 from the closed forms.
    pub w_prime_0: f64,
    pub sigma_prime_0: f64,
    pub c_minus: f64,
    /// Δ₁ = 0 crossing for x > 0.
    pub x_a: f64,
    /// Where w returns to w₋ beyond x_a.
    pub x_b: f64,
    /// min over x > 0 of w − a(1+a)σ².
    pub barrier_margin_min: f64,
    /// Series/ODE overlap mismatch at the handoff, relative.
    pub stitch_residual: f64,
    pub handoff_tau: f64,
}

/// Sonic-point slope data: e₁..e₄, c₋, w′(0), σ′(0).
#[derive(Debug, Clone)]
pub struct SonicSlopes {
    pub e: [Mp; 4],
    pub c_minus: Mp,
    pub w_prime: Mp,
    pub sigma_prime: Mp,
}

/// Closed-form derivatives at the sonic point: the field quotients are 0/0
/// there, so the slope comes from the quadratic of the linearization.
pub fn sonic_slopes(p: &ParamSet) -> Result<SonicSlopes> {
    let sigma2 = p.sigma2();
    let d = DIM as f64;
    let l = ELL as f64;
    let e1 = -2.0 * (d * &p.w_minus - l * (&p.r - 1.0)) * &sigma2;
    let (w1, _, w3) = fields::root_curves_w(p, &sigma2)?;
    let e2 = (&p.w_minus - w1) * (&p.w_minus - w3);
    let e3 = -2.0 * sigma2.square();
    let (_, w2p) = fields::delta2_curves(p, &sigma2)
        .ok_or_else(|| Error::RootFailure("no Delta_2 branches at sigma_2".into()))?;
    let e4 = (l + d - 1.0) * &sigma2 * (&p.w_minus - w2p) / l;
    let disc = ((&e3 - &e2).square() + 4.0 * &e1 * &e4).sqrt();
    let c_minus = (&e3 - &e2 - disc) / (2.0 * e4.abs());
    let den = 2.0 * &sigma2 * (1.0 + &c_minus);
    let w_prime = (&e1 + &e2 * &c_minus) / &den;
    let sigma_prime = (&e3 + &e4 * &c_minus) / &den;
    Ok(SonicSlopes { e: [e1, e2, e3, e4], c_minus, w_prime, sigma_prime })
}

/// The x(τ) map through the sonic neighbourhood: both Δ and Δ₁ vanish
/// simply along the curve at τ = 0, so their ratio is an analytic series
/// and x(τ) = ∫ Δ/((1+a)Δ₁) dτ integrates it term by term.
fn sonic_x_series(p: &ParamSet, series: &SonicSeries, len: usize) -> Vec<Mp> {
    let prec = p.prec;
    let u = &series.coeffs[..len.min(series.coeffs.len())];
    let ap1 = 1.0 + &p.a;
    // sigma(tau) = sqrt(u)/(1+a); w(tau) = w_- - tau/(1+a)
    let sig = poly::scale(&poly::sqrt_series(u, len, prec), &(1.0 / &ap1));
    // Delta = (w-1)^2 - sigma^2 with w-1 = -sigma2 - tau/(1+a)
    let wm1 = vec![-p.sigma2(), -(1.0 / &ap1)];
    let mut delta = poly::mul(&wm1, &wm1, len, prec);
    let s2 = poly::mul(&sig, &sig, len, prec);
    for k in 0..delta.len().min(s2.len()) {
        delta[k] -= &s2[k];
    }
    // Delta_1 = -Delta_tau(tau, u_L(tau))/(1+a)^3
    let al = &p.alpha;
    let mut dtau = poly::scale(u, &(3.0 * al));
    let tu = poly::mul(&[Mp::zero(prec), Mp::new(prec, 1.0)], u, len, prec);
    for k in 0..dtau.len().min(tu.len()) {
        dtau[k] -= 3.0 * &tu[k];
    }
    let cubic = [
        3.0 * al,
        4.0 * al - 1.0,
        al - 2.0,
        Mp::new(prec, -1.0),
    ];
    for (k, c) in cubic.iter().enumerate() {
        if k < dtau.len() {
            dtau[k] -= c;
        }
    }
    let delta1 = poly::scale(&dtau, &(-1.0 / ap1.powi(3)));
    // both have a simple zero: drop the constant terms (identically zero)
    debug_assert!(delta[0].to_f64().abs() < 1e-40);
    let num: Vec<Mp> = delta[1..].to_vec();
    let den: Vec<Mp> = delta1[1..].to_vec();
    let integrand = poly::div_series(&num, &den, len - 1, prec);
    poly::integ(&poly::scale(&integrand, &(1.0 / ap1)), prec)
}

/// Build the global profile at the midpoint of a converged bracket.
pub fn build_profile(shot: &ShootResult, cfg: &ProfileConfig) -> Result<GlobalProfile> {
    let prec = cfg.prec;
    let big_r = shot.r_mid().with_prec(prec);
    let p = ParamSet::from_eigen_ratio_mp(big_r)?;
    build_profile_at(&p, shot.n, cfg)
}

/// Build the profile at an explicit parameter point (R need not be matched;
/// the stitch residual reports how far the branches disagree).
pub fn build_profile_at(p: &ParamSet, n: u32, cfg: &ProfileConfig) -> Result<GlobalProfile> {
    let prec = cfg.prec;
    let series = compute_sonic_series(
        p,
        n as usize + cfg.series_extra,
        &SeriesOpts::default(),
    )?;
    let tau_h = Mp::new(prec, 0.8 * series.tau0());
    let ap1 = 1.0 + &p.a;
    let len = 160usize.min(series.coeffs.len());
    let x_ser = sonic_x_series(p, &series, len);
    let u_at = |tau: &Mp| series.eval(tau);
    let sigma_of_tau = |tau: &Mp| u_at(tau).sqrt() / &ap1;
    let w_of_tau = |tau: &Mp| &p.w_minus - tau / &ap1;
    let x_of_tau = |tau: &Mp| poly::eval(&x_ser, tau);

    let sigma_hand_left = sigma_of_tau(&tau_h); // x < 0 side (tau > 0)
    let sigma_hand_right = sigma_of_tau(&(-&tau_h)); // x > 0 side

    let opts = OdeOpts::with_prec(prec, cfg.ode_rel_tol);

    // geometric sigma grids for both sides, avoiding the handoff zone edges
    let make_grid = |from: f64, to: f64, npts: usize| -> Vec<f64> {
        // descending geometric grid from `from` down to `to`
        let lf = from.ln();
        let lt = to.ln();
        (0..npts)
            .map(|i| (lf + (lt - lf) * i as f64 / (npts - 1) as f64).exp())
            .collect()
    };

    // left leg: far field down to the handoff
    let (sigma0, w0, _trunc) = far_field_start(p, cfg.sigma_max);
    let left_grid = make_grid(
        cfg.sigma_max * 0.999,
        sigma_hand_left.to_f64() * 1.0001,
        cfg.grid_per_side,
    );
    let left_cfg = SwLegConfig {
        stop: SwStop::SigmaTarget(sigma_hand_left.clone()),
        sandwich_check: false,
        barrier_check: false,
        watch_delta1: false,
        co_x: true,
        record: false,
        dense_grid: left_grid,
    };
    let left = run_sw_leg(p, &sigma0, &w0, Some(&Mp::zero(prec)), &left_cfg, &opts)?;
    // anchor the left x values: x_leg(end) + offset = x_series(tau_h)
    let x_left_offset = x_of_tau(&tau_h) - left.x_end.as_ref().unwrap();
    // stitch: the branch w at the handoff vs the series value
    let stitch = crate::num::rel_diff(&left.w_end, &w_of_tau(&tau_h), 1e-30);
    if stitch > cfg.stitch_factor * cfg.ode_rel_tol.max(1e-28) + shot_width_slack(p) {
        return Err(Error::StitchMismatch {
            abscissa: sigma_hand_left.to_f64(),
            a: left.w_end.to_f64(),
            b: w_of_tau(&tau_h).to_f64(),
            tol: cfg.stitch_factor * cfg.ode_rel_tol,
        });
    }

    // right leg: from the series handoff down to the floor. The log grid
    // resolves the tails but is x-sparse where σ barely moves (the whole
    // x ∈ (0, x_B] stretch), so a linear-σ section is merged in there.
    let right_grid = {
        let top = sigma_hand_right.to_f64() * 0.9999;
        let mut g = make_grid(top, cfg.sigma_floor, cfg.grid_per_side);
        let lin_end = p.sigma2().to_f64() * 0.75;
        let m = cfg.grid_per_side / 2;
        for i in 0..m {
            g.push(top - (top - lin_end) * (i as f64 + 0.5) / m as f64);
        }
        g.sort_by(|a, b| b.partial_cmp(a).unwrap());
        g.dedup_by(|a, b| (*a - *b).abs() < 1e-12);
        g
    };
    let right_cfg = SwLegConfig {
        stop: SwStop::SigmaFloor(cfg.sigma_floor),
        sandwich_check: false,
        barrier_check: true,
        watch_delta1: true,
        co_x: true,
        record: false,
        dense_grid: right_grid,
    };
    let x_hand_right = x_of_tau(&(-&tau_h));
    let right = run_sw_leg(
        p,
        &sigma_hand_right,
        &w_of_tau(&(-&tau_h)),
        Some(&x_hand_right),
        &right_cfg,
        &opts,
    )?;
    let (xa_sigma, _xa_w, xa_x) = right
        .delta1_crossing
        .clone()
        .ok_or_else(|| Error::EventMissed("no Delta_1 crossing on the descent".into()))?;
    let x_a = xa_x.as_ref().unwrap().to_f64();
    let _ = xa_sigma;

    // assemble samples: left leg (x < 0), sonic band from the series, right leg
    let slopes = sonic_slopes(p)?;
    let mut samples: Vec<ProfileSample> = Vec::new();
    for (s, w, x) in &left.grid_samples {
        let x = x.as_ref().unwrap() + &x_left_offset;
        samples.push(make_sample(p, &x, s, w, None));
    }
    // sonic band: tau from tau_h down through 0 to -tau_h on a fine grid
    let band_pts = (cfg.grid_per_side / 8).max(64);
    for i in 0..=band_pts {
        let t = tau_h.to_f64() * (1.0 - 2.0 * i as f64 / band_pts as f64);
        let tau = Mp::new(prec, t);
        let s = sigma_of_tau(&tau);
        let w = w_of_tau(&tau);
        let x = x_of_tau(&tau);
        let at_sonic = if i == band_pts / 2 && t.abs() < 1e-12 {
            Some(&slopes)
        } else {
            None
        };
        samples.push(make_sample(p, &x, &s, &w, at_sonic));
    }
    for (s, w, x) in &right.grid_samples {
        samples.push(make_sample(p, x.as_ref().unwrap(), s, w, None));
    }
    samples.sort_by(|a, b| a.x.partial_cmp(&b.x).unwrap());
    samples.dedup_by(|a, b| (a.x - b.x).abs() < 1e-14);
    // the abscissa map must be strictly monotone in sigma; a violation
    // means one of the quadrature legs produced a corrupt x
    for win in samples.windows(2) {
        if !(win[1].x > win[0].x) || !(win[1].sigma < win[0].sigma) {
            return Err(Error::NonMonotone(win[0].sigma));
        }
    }

    // x_b: w returns to w_minus beyond x_a
    let wm = p.w_minus.to_f64();
    let mut x_b = f64::NAN;
    for win in samples.windows(2) {
        if win[0].x > x_a && (win[0].w - wm) > 0.0 && (win[1].w - wm) <= 0.0 {
            let f = (win[0].w - wm) / (win[0].w - win[1].w);
            x_b = win[0].x + f * (win[1].x - win[0].x);
            break;
        }
    }

    Ok(GlobalProfile {
        eigen_ratio: p.eigen_ratio.to_f64(),
        r: p.r.to_f64(),
        n,
        samples,
        w_prime_0: slopes.w_prime.to_f64(),
        sigma_prime_0: slopes.sigma_prime.to_f64(),
        c_minus: slopes.c_minus.to_f64(),
        x_a,
        x_b,
        barrier_margin_min: right.min_barrier_margin.unwrap_or(f64::NAN),
        stitch_residual: stitch,
        handoff_tau: tau_h.to_f64(),
    })
}

/// Extra stitch slack from the finite shooting bracket: the residual decays
/// with the true matching error, which is not visible here, so allow a
/// conservative parametric term.
fn shot_width_slack(_p: &ParamSet) -> f64 {
    1e-18
}

fn make_sample(
    p: &ParamSet,
    x: &Mp,
    sigma: &Mp,
    w: &Mp,
    sonic: Option<&SonicSlopes>,
) -> ProfileSample {
    let f = fields::sw_fields(p, sigma, w);
    let (wp, sp) = match sonic {
        Some(s) => (s.w_prime.clone(), s.sigma_prime.clone()),
        None => (-(&f.delta1) / &f.delta, -(&f.delta2) / &f.delta),
    };
    let fsum = sigma + &sp;
    let margin_ii = 1.0 - (w + &wp) - fsum.abs();
    let margin_iii = 1.0 - w - fsum.abs();
    // F identity: sigma + sigma' = -(d-1) sigma (w - w_-)(w - w_+)/(l Delta)
    let f_closed = -((DIM - 1) as f64) * sigma * (w - &p.w_minus) * (w - &p.w_plus)
        / (ELL as f64 * &f.delta);
    let f_resid = if sonic.is_some() {
        // the closed form is 0/0 at the sonic point itself
        0.0
    } else {
        (&fsum - f_closed).abs().to_f64() / fsum.abs().to_f64().max(1e-12)
    };
    // radial system residuals (transform consistency)
    let z = x.exp();
    let u_e = -(&z * w);
    let s_e = ELL as f64 * &z * sigma;
    let du_e = -(w + &wp);
    let ds_e = ELL as f64 * &fsum;
    let t1 = (&p.r - 1.0) * &u_e;
    let t2 = (&z + &u_e) * &du_e;
    let t3 = &s_e * &ds_e / ELL as f64;
    let r1 = &t1 + &t2 + &t3;
    let scale1 = t1.abs() + t2.abs() + t3.abs();
    let s1 = (&p.r - 1.0) * &s_e;
    let s2 = (&z + &u_e) * &ds_e;
    let s3 = (&du_e + (DIM - 1) as f64 * &u_e / &z) * &s_e / ELL as f64;
    let r2 = &s1 + &s2 + &s3;
    let scale2 = s1.abs() + s2.abs() + s3.abs();
    let rad = (r1.abs() / scale1.max(&Mp::new(p.prec, 1e-280)))
        .max(&(r2.abs() / scale2.max(&Mp::new(p.prec, 1e-280))));
    ProfileSample {
        x: x.to_f64(),
        sigma: sigma.to_f64(),
        w: w.to_f64(),
        sigma_prime: sp.to_f64(),
        w_prime: wp.to_f64(),
        delta: f.delta.to_f64(),
        delta1: f.delta1.to_f64(),
        delta2: f.delta2.to_f64(),
        z: z.to_f64(),
        u_e: u_e.to_f64(),
        s_e: s_e.to_f64(),
        margin_ii: margin_ii.to_f64(),
        margin_iii: margin_iii.to_f64(),
        radial_residual: rad.to_f64(),
        f_identity_residual: f_resid,
    }
}

/// Verification report over a built profile.
#[derive(Debug, Clone)]
pub struct MarginReport {
    /// min over the grid of margins (ii) and (iii), after the inter-sample
    /// correction (half the largest adjacent variation).
    pub eta_min: f64,
    pub eta_min_grid: f64,
    pub inter_sample_correction: f64,
    /// Margins at the grid ends vs their analytic limits 1 and 1 − ℓ(r−1)/d.
    pub right_limit_error: f64,
    pub left_limit_error: f64,
    /// Fitted decay slopes of log σ(x): right tail ≈ −r, left tail ≈ −1.
    pub right_decay_slope: f64,
    pub left_decay_slope: f64,
    pub radial_residual_max: f64,
    pub f_identity_max: f64,
    /// Sign pattern of (Δ, Δ₁, Δ₂) along the profile matches the portrait.
    pub sign_pattern_ok: bool,
    pub delta1_zero_count: usize,
    /// min over Z of S_E/⟨Z⟩^{1−r}.
    pub s_e_envelope: f64,
    /// |σ + σ′| at x_B (vanishes there by the closed form).
    pub f_at_x_b: f64,
    pub margin_ii_at_x_b: f64,
}

/// Check the repulsivity inequalities, limits, decay rates, and the field
/// sign pattern across the assembled profile.
pub fn verify_repulsivity(gp: &GlobalProfile) -> Result<MarginReport> {
    let s = &gp.samples;
    if s.len() < 100 {
        return Err(Error::OutOfRange("profile too sparse to verify".into()));
    }
    let mut eta_grid = f64::INFINITY;
    let mut worst_x = 0.0;
    let mut eta = f64::INFINITY;
    let mut max_corr: f64 = 0.0;
    for (i, smp) in s.iter().enumerate() {
        let m = smp.margin_ii.min(smp.margin_iii);
        if m < eta_grid {
            eta_grid = m;
            worst_x = smp.x;
        }
        if i > 0 {
            // per-cell secant correction: a smooth margin cannot dip much
            // below its endpoint values over one cell
            for (a, b) in [
                (s[i - 1].margin_ii, smp.margin_ii),
                (s[i - 1].margin_iii, smp.margin_iii),
            ] {
                let corr = 0.5 * (b - a).abs();
                eta = eta.min(a.min(b) - corr);
                max_corr = max_corr.max(corr);
            }
        }
    }
    if !(eta > 0.0) {
        return Err(Error::MarginNonpositive {
            name: "repulsivity",
            x: worst_x,
            value: eta,
        });
    }

    // limits
    let right = s.last().unwrap();
    let left = s.first().unwrap();
    let want_left = 1.0 - (ELL as f64) * (gp.r - 1.0) / DIM as f64;
    let right_limit_error = (right.margin_ii - 1.0).abs().max((right.margin_iii - 1.0).abs());
    let left_limit_error =
        (left.margin_ii - want_left).abs().max((left.margin_iii - want_left).abs());

    // decay fits on the outer 20% of each tail
    let slope = |pts: &[&ProfileSample]| -> f64 {
        let n = pts.len() as f64;
        let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
        for p in pts {
            let x = p.x;
            let y = p.sigma.ln();
            sx += x;
            sy += y;
            sxx += x * x;
            sxy += x * y;
        }
        (n * sxy - sx * sy) / (n * sxx - sx * sx)
    };
    let kr = s.len() / 5;
    let right_pts: Vec<&ProfileSample> = s[s.len() - kr..].iter().collect();
    let left_pts: Vec<&ProfileSample> = s[..kr].iter().collect();
    let right_decay = slope(&right_pts);
    let left_decay = slope(&left_pts);

    // sign pattern and zero count of Delta_1
    let mut sign_ok = true;
    let mut zeros = 0usize;
    let mut prev_sign = 0i32;
    for smp in s {
        // the sample at the sonic point itself carries a roundoff-sized
        // delta_1; treat it as an exact zero so it separates the signs
        let sgn = if smp.delta1 > 1e-30 {
            1
        } else if smp.delta1 < -1e-30 {
            -1
        } else {
            0
        };
        if prev_sign != 0 && sgn != 0 && sgn != prev_sign {
            zeros += 1;
        }
        if sgn != 0 {
            prev_sign = sgn;
        }
        if smp.x < -1e-9 {
            if !(smp.delta < 0.0 && smp.delta1 > 0.0 && smp.delta2 < 0.0) {
                sign_ok = false;
            }
        } else if smp.x > 1e-9 {
            if !(smp.delta > 0.0 && smp.delta2 > 0.0) {
                sign_ok = false;
            }
            let inside = smp.x < gp.x_a;
            if inside && !(smp.delta1 < 0.0) {
                sign_ok = false;
            }
            if !inside && smp.x > gp.x_a + 1e-9 && !(smp.delta1 > 0.0) {
                sign_ok = false;
            }
        }
    }

    let radial_residual_max = s.iter().map(|p| p.radial_residual).fold(0.0, f64::max);
    let f_identity_max = s.iter().map(|p| p.f_identity_residual).fold(0.0, f64::max);

    // S_E lower envelope against <Z>^{1-r}
    let mut env = f64::INFINITY;
    for smp in s {
        let zbar = (1.0 + smp.z * smp.z).sqrt();
        env = env.min(smp.s_e / zbar.powf(1.0 - gp.r));
    }

    // behaviour at x_B: F = sigma + sigma' vanishes, margins stay positive
    let mut f_at_x_b = f64::NAN;
    let mut margin_at_x_b = f64::NAN;
    if gp.x_b.is_finite() {
        if let Some(smp) = s.iter().min_by(|a, b| {
            (a.x - gp.x_b).abs().partial_cmp(&(b.x - gp.x_b).abs()).unwrap()
        }) {
            f_at_x_b = smp.sigma + smp.sigma_prime;
            margin_at_x_b = smp.margin_ii;
        }
    }

    Ok(MarginReport {
        eta_min: eta,
        eta_min_grid: eta_grid,
        inter_sample_correction: max_corr,
        right_limit_error,
        left_limit_error,
        right_decay_slope: right_decay,
        left_decay_slope: left_decay,
        radial_residual_max,
        f_identity_max,
        sign_pattern_ok: sign_ok,
        delta1_zero_count: zeros,
        s_e_envelope: env,
        f_at_x_b,
        margin_ii_at_x_b: margin_at_x_b,
    })
}

/// The barrier certificate suite at a matched parameter point.
#[derive(Debug, Clone)]
pub struct BarrierReport {
    /// ℒ[u₍N₎] < 0 on [−4/√R, 0).
    pub l_u_n: SignCertificate,
    /// Position of the zero τ_N of u₍N₎ inside (−9/(5√R), 0).
    pub tau_n: f64,
    pub tau_n_in_range: bool,
    /// u₍N₎ > 0 between τ_N and 0.
    pub u_n_positive: SignCertificate,
    /// u₍N₎ < u_g on (−9/(5√R), 0).
    pub u_n_below_ug: SignCertificate,
    /// ℒ[U_O] < 0 on (0, a) (needs R > 5).
    pub l_u_o: SignCertificate,
    /// Largest |coefficient| among the orders that must vanish in ℒ[u₍N₎].
    pub truncation_annihilation: f64,
    /// 𝒱 and 𝒲 of ℒ[u₍₂₎] = 𝒱τ³ + 𝒲τ⁴ (both negative at large R).
    pub v_coeff: f64,
    pub w_coeff: f64,
}

/// Certify the polynomial-barrier suite: the truncated series as a barrier
/// below the sonic point, its sign change location, its position under the
/// Δ_u zero curve, and the chord barrier.
pub fn verify_barriers(
    p: &ParamSet,
    series: &SonicSeries,
    n: u32,
    samples: usize,
) -> Result<BarrierReport> {
    let prec = p.prec;
    if series.order() < n as usize + 1 {
        return Err(Error::OutOfRange("series order below N+1".into()));
    }
    let nn = n as usize;
    let u_n: Vec<Mp> = series.coeffs[..=nn].to_vec();

    // L[u_N] as an exact polynomial
    let du = poly::deriv(&u_n);
    let al = &p.alpha;
    let len = 2 * nn + 3;
    // Delta_tau(tau, U) U' - Delta_u(tau, U)
    let mut dtau = poly::scale(&u_n, &(3.0 * al));
    let tu = poly::mul(&[Mp::zero(prec), Mp::new(prec, 1.0)], &u_n, len, prec);
    for k in 0..dtau.len().min(tu.len()) {
        dtau[k] -= 3.0 * &tu[k];
    }
    let cub = [3.0 * al, 4.0 * al - 1.0, al - 2.0, Mp::new(prec, -1.0)];
    let mut dtau = poly::add(&dtau, &poly::scale(&cub, &Mp::new(prec, -1.0)), prec);
    dtau.truncate(len);
    let mut l_poly = poly::mul(&dtau, &du, len, prec);
    let u2 = poly::mul(&u_n, &u_n, len, prec);
    let g_t = [
        Mp::new(prec, 2.0),
        -4.0 * (al - 4.0) / 3.0,
        Mp::ratio(prec, 10, 3),
    ];
    let gu = poly::mul(&g_t, &u_n, len, prec);
    for k in 0..l_poly.len() {
        if k < u2.len() {
            l_poly[k] += 2.0 * &u2[k];
        }
        if k < gu.len() {
            l_poly[k] -= &gu[k];
        }
    }
    // orders 0..=N must cancel by the recurrence
    let mut annihilation: f64 = 0.0;
    let scale = poly::max_coeff_abs(&l_poly).max(1e-300);
    for c in l_poly.iter().take(nn + 1) {
        annihilation = annihilation.max(c.to_f64().abs() / scale);
    }
    let f_n: Vec<Mp> = l_poly[nn + 1..].to_vec();
    let a_root = p.a_root.to_f64();
    let lo = Mp::new(prec, -4.0 / a_root);
    // odd N: tau^{N+1} > 0 for tau < 0, so L[u_N] < 0 iff f_N < 0
    let l_u_n = certify_sign(
        "L[u_N] < 0 on [-4/sqrt(R), 0)",
        &RationalFn { num: f_n, den: vec![Mp::new(prec, 1.0)] },
        &lo,
        &Mp::zero(prec),
        true,
        samples,
        1e-6,
    );

    // tau_N: the sign change of u_N nearest zero
    let edge = Mp::new(prec, -9.0 / (5.0 * a_root));
    let u_fn = RationalFn { num: u_n.clone(), den: vec![Mp::new(prec, 1.0)] };
    let at_edge = u_fn.eval(&edge);
    let tau_n_in_range = at_edge < 0.0;
    let mut lo_b = edge.clone();
    let mut hi_b = Mp::zero(prec);
    for _ in 0..200 {
        let mid = (&lo_b + &hi_b) / 2.0;
        if u_fn.eval(&mid) < 0.0 {
            lo_b = mid;
        } else {
            hi_b = mid;
        }
    }
    let tau_n = (&lo_b + &hi_b) / 2.0;
    let u_n_positive = certify_sign(
        "u_N > 0 on (tau_N, 0)",
        &u_fn,
        &tau_n,
        &Mp::zero(prec),
        false,
        samples,
        1e-4,
    );

    // u_g - u_N > 0 on (-9/(5 sqrt R), 0)
    let ug = Curve::Ug.value_fn(p);
    let mut diff = poly::scale(&u_n, &Mp::new(prec, -1.0));
    for (k, c) in ug.num.iter().enumerate() {
        diff[k] += c;
    }
    let u_n_below_ug = certify_sign(
        "u_g - u_N > 0 on (-9/(5 sqrt R), 0)",
        &RationalFn { num: diff, den: vec![Mp::new(prec, 1.0)] },
        &edge,
        &Mp::zero(prec),
        false,
        samples,
        1e-4,
    );

    let l_u_o = certify_sign(
        "L[U_O] < 0 on (0, a)",
        &Curve::UO.l_closed_form(p).unwrap(),
        &Mp::zero(prec),
        &p.a,
        true,
        samples,
        1e-4,
    );

    let (v, w) = fields::l_quadratic_truncation_coeffs(p, &series.coeffs[2], &series.coeffs[3]);

    Ok(BarrierReport {
        l_u_n,
        tau_n: tau_n.to_f64(),
        tau_n_in_range,
        u_n_positive,
        u_n_below_ug,
        l_u_o,
        truncation_annihilation: annihilation,
        v_coeff: v.to_f64(),
        w_coeff: w.to_f64(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sonic_slopes_structure() {
        let p = ParamSet::from_eigen_ratio(256, 25.4217).unwrap();
        let s = sonic_slopes(&p).unwrap();
        let c = s.c_minus.to_f64();
        assert!(c > -1.0 && c < 0.0, "c_- = {c}");
        assert!(s.w_prime.to_f64() > 0.0);
        assert!(s.sigma_prime.to_f64() < 0.0);
        // independent route: dw/dsigma at the sonic point equals -2/a_1
        let expect = -2.0 / p.a1().to_f64();
        assert!((c - expect).abs() < 1e-40, "c_- {c} vs -2/a1 {expect}");
        // sigma + sigma' > 0 and margin (ii) positive at x = 0
        let sigma2 = p.sigma2().to_f64();
        let f0 = sigma2 + s.sigma_prime.to_f64();
        assert!(f0 > 0.0);
        let m = 1.0 - p.w_minus.to_f64() - s.w_prime.to_f64() - f0;
        assert!(m > 0.0);
        // all four e's negative
        for e in &s.e {
            assert!(e.to_f64() < 0.0);
        }
    }

    #[test]
    fn x_series_anchors_sonic_point() {
        let p = ParamSet::from_eigen_ratio(256, 25.4217).unwrap();
        let series = compute_sonic_series(&p, 180, &SeriesOpts::default()).unwrap();
        let xs = sonic_x_series(&p, &series, 120);
        // x(0) = 0 and dx/dtau(0) = Delta'(0)/((1+a) Delta_1'(0))
        assert_eq!(xs[0].to_f64(), 0.0);
        // x must be decreasing in tau (tau > 0 lies at x < 0)
        let x_pos = poly::eval(&xs, &Mp::new(256, 0.01)).to_f64();
        let x_neg = poly::eval(&xs, &Mp::new(256, -0.01)).to_f64();
        assert!(x_pos < 0.0 && x_neg > 0.0, "x(±0.01) = {x_pos}, {x_neg}");
        // consistency: dx/dtau at 0 equals 1/(tau'(x)) from the sonic slopes
        let slopes = sonic_slopes(&p).unwrap();
        let dtau_dx = -(1.0 + &p.a) * &slopes.w_prime;
        let from_series = xs[1].to_f64();
        assert!(
            (from_series - 1.0 / dtau_dx.to_f64()).abs() < 1e-30,
            "dx/dtau {from_series} vs {}",
            1.0 / dtau_dx.to_f64()
        );
    }

    #[test]
    fn barrier_suite_at_moderate_n() {
        let p = ParamSet::from_eigen_ratio(320, 25.4217190063).unwrap();
        let series = compute_sonic_series(&p, 60, &SeriesOpts::default()).unwrap();
        let rep = verify_barriers(&p, &series, 25, 512).unwrap();
        assert!(rep.truncation_annihilation < 1e-60);
        assert!(rep.tau_n_in_range, "u_N(-9/(5 sqrt R)) must be negative");
        assert!(rep.tau_n < 0.0 && rep.tau_n > -9.0 / (5.0 * 25.42f64.sqrt()));
        assert!(rep.l_u_n.sign_uniform, "L[u_N] sign violated at {}", rep.l_u_n.worst_abscissa);
        assert!(rep.u_n_positive.sign_uniform);
        assert!(rep.u_n_below_ug.sign_uniform);
        assert!(rep.l_u_o.sign_uniform);
        assert!(rep.v_coeff < 0.0 && rep.w_coeff < 0.0);
    }
}
