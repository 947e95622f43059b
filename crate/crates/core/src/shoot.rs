//! Locating the discrete eigenvalue ratios R_N ∈ (N, N+1) where the local
//! analytic solution at the sonic point coincides with the branch arriving
//! from the far field.
//!
//! The two curves agree to order |τ|^R near the sonic point, so the
//! matching gap u_L(τ*) − u_F(τ*) is exponentially small in R and the
//! whole comparison runs in extended precision: series evaluation on one
//! side, deep-tolerance Taylor integration on the other. Bisection is the
//! right root finder here — the gap is expensive, its magnitude spans many
//! decades across the interval, and only the sign is trusted.

use crate::error::{Error, Result};
use crate::integrate::{integrate_p6_branch, OdeOpts};
use crate::num::Mp;
use crate::params::ParamSet;
use crate::series::{compute_sonic_series, SeriesOpts, SonicSeries};

#[derive(Debug, Clone)]
pub struct ShootConfig {
    /// Working precision for the series and the branch integration.
    pub prec: u32,
    /// Local tolerance of the branch integration.
    pub ode_rel_tol: f64,
    pub sigma_max: f64,
    /// Probe offset from the interval ends.
    pub bracket_margin: f64,
    /// R is never evaluated within this distance of an integer.
    pub integer_guard: f64,
    /// Series truncation is N + this many orders.
    pub series_extra: usize,
    /// Precision doublings allowed when the gap falls below its noise.
    pub max_escalations: u32,
}

impl Default for ShootConfig {
    fn default() -> Self {
        ShootConfig {
            prec: 320,
            ode_rel_tol: 1e-38,
            sigma_max: 1e4,
            bracket_margin: 1e-3,
            integer_guard: 1e-6,
            series_extra: 200,
            max_escalations: 2,
        }
    }
}

/// One evaluation of the matching gap with its combined error estimate.
#[derive(Debug, Clone)]
pub struct GapValue {
    pub gap: Mp,
    pub u_l: Mp,
    pub u_f: Mp,
    /// Series tail at τ* plus integration tolerance plus far-field start.
    pub err_estimate: f64,
}

/// u_L(τ*; R) − u_F(τ*; R) at fixed τ*.
///
/// Fails with `GapBelowNoise` when the value is smaller than its own error
/// estimate; the caller escalates precision or accepts the bracket.
pub fn matching_gap(
    p: &ParamSet,
    series: &SonicSeries,
    tau_star: &Mp,
    cfg: &ShootConfig,
) -> Result<GapValue> {
    let tau0 = series.tau0();
    let lim = tau0.min(p.alpha.to_f64() / 2.0);
    if !(*tau_star > 0.0) || tau_star.to_f64() >= lim {
        return Err(Error::OutOfRange(format!(
            "tau* = {} outside (0, min(tau0 = {tau0:.4}, alpha/2))",
            tau_star.to_f64()
        )));
    }
    let u_l = series.eval(tau_star);
    let tail = series.tail_bound(tau_star.to_f64());
    let opts = OdeOpts::with_prec(cfg.prec, cfg.ode_rel_tol);
    let branch = integrate_p6_branch(p, tau_star, cfg.sigma_max, &opts, false)?;
    let gap = &u_l - &branch.u_f;
    let err = tail + branch.err_estimate;
    let out = GapValue { gap, u_l, u_f: branch.u_f, err_estimate: err };
    if out.gap.abs().to_f64() < err {
        return Err(Error::GapBelowNoise { gap: out.gap.to_f64(), noise: err });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ShootStatus {
    Converged,
    /// The probe signs did not match the predicted (+, −) pattern —
    /// expected below the (unquantified) validity floor.
    NoBracket,
    /// The gap stayed under its noise estimate after all escalations.
    PrecisionLimit,
}

#[derive(Debug, Clone)]
pub struct ShootResult {
    pub n: u32,
    pub status: ShootStatus,
    /// Final bracket (lo, hi) as f64 mirrors of the working values.
    pub lo: f64,
    pub hi: f64,
    pub lo_mp: Mp,
    pub hi_mp: Mp,
    pub width: f64,
    pub tau_star: Mp,
    /// Every evaluated (R, gap) pair in evaluation order.
    pub gap_history: Vec<(f64, f64)>,
    /// Gap values at the retained bracket ends.
    pub gap_lo: f64,
    pub gap_hi: f64,
    /// Combined error estimate of the last gap evaluation.
    pub noise_floor: f64,
    pub evaluations: usize,
    pub prec_used: u32,
}

fn gap_at(
    big_r: &Mp,
    n: u32,
    tau_star: &Mp,
    cfg: &ShootConfig,
) -> Result<GapValue> {
    let dist = {
        let r = big_r.to_f64();
        (r - r.round()).abs()
    };
    if dist < cfg.integer_guard {
        return Err(Error::IntegerResonance {
            n: big_r.to_f64().round() as u32,
            dist,
            guard: cfg.integer_guard,
        });
    }
    let p = ParamSet::from_eigen_ratio_mp(big_r.clone())?;
    let series = compute_sonic_series(
        &p,
        n as usize + cfg.series_extra,
        &SeriesOpts { resonance_guard: cfg.integer_guard, ..Default::default() },
    )?;
    matching_gap(&p, &series, tau_star, cfg)
}

/// Choose the matching abscissa once for the whole bisection: the largest
/// τ* that stays inside the series radius across the interval (probed at
/// both ends and the midpoint) and inside the funnel, with headroom. A
/// larger τ* is better — the gap scales like τ*^R.
pub fn choose_tau_star(n: u32, cfg: &ShootConfig) -> Result<Mp> {
    let mut t = f64::INFINITY;
    for frac in [cfg.bracket_margin, 0.5, 1.0 - cfg.bracket_margin] {
        let p = ParamSet::from_eigen_ratio(cfg.prec, n as f64 + frac)?;
        let series = compute_sonic_series(
            &p,
            n as usize + cfg.series_extra,
            &SeriesOpts { resonance_guard: cfg.integer_guard, ..Default::default() },
        )?;
        t = t.min(0.8 * series.tau0()).min(0.45 * p.alpha.to_f64());
    }
    Ok(Mp::new(cfg.prec, t))
}

/// Bisect for R_N in (N, N+1).
///
/// Probes at N+margin and N+1−margin must show the predicted signs
/// (gap > 0 near N, gap < 0 near N+1); τ* is held fixed across the whole
/// search. A gap below its noise estimate triggers precision escalation
/// (doubled mantissa, deepened integration tolerance) before giving up.
pub fn find_r_n(n: u32, tol: f64, cfg: &ShootConfig) -> Result<ShootResult> {
    let mut cfg_now = cfg.clone();
    let tau_star = choose_tau_star(n, cfg)?;
    let mut evals = 0usize;
    let mut history: Vec<(f64, f64)> = Vec::new();

    let mut eval = |big_r: &Mp, cfg_now: &ShootConfig, evals: &mut usize| -> Result<GapValue> {
        *evals += 1;
        let g = gap_at(big_r, n, &tau_star.with_prec(cfg_now.prec), cfg_now);
        if let Ok(v) = &g {
            history.push((big_r.to_f64(), v.gap.to_f64()));
        }
        g
    };

    let mut lo = Mp::new(cfg.prec, n as f64) + cfg.bracket_margin;
    let mut hi = Mp::new(cfg.prec, (n + 1) as f64) - cfg.bracket_margin;
    let g_lo = eval(&lo, &cfg_now, &mut evals)?;
    let g_hi = eval(&hi, &cfg_now, &mut evals)?;
    let mut gap_lo = g_lo.gap.to_f64();
    let mut gap_hi = g_hi.gap.to_f64();
    let mut noise = g_lo.err_estimate.max(g_hi.err_estimate);
    if !(gap_lo > 0.0 && gap_hi < 0.0) {
        return Ok(ShootResult {
            n,
            status: ShootStatus::NoBracket,
            lo: lo.to_f64(),
            hi: hi.to_f64(),
            lo_mp: lo,
            hi_mp: hi,
            width: 1.0 - 2.0 * cfg.bracket_margin,
            tau_star,
            gap_history: history,
            gap_lo,
            gap_hi,
            noise_floor: noise,
            evaluations: evals,
            prec_used: cfg_now.prec,
        });
    }

    while (&hi - &lo).to_f64() > tol {
        let mid = (&lo + &hi) / 2.0;
        let mut escalations = 0u32;
        let g = loop {
            match eval(&mid, &cfg_now, &mut evals) {
                Ok(v) => break Some(v),
                Err(Error::GapBelowNoise { noise: nz, .. }) => {
                    if escalations >= cfg_now.max_escalations {
                        break None;
                    }
                    escalations += 1;
                    cfg_now.prec *= 2;
                    cfg_now.ode_rel_tol = cfg_now.ode_rel_tol.powf(1.5);
                    // the far-field start error falls like sigma_max^-7
                    cfg_now.sigma_max = (cfg_now.sigma_max * 10.0).min(1e7);
                    noise = nz;
                }
                Err(e) => return Err(e),
            }
        };
        match g {
            Some(v) => {
                noise = v.err_estimate;
                if v.gap > 0.0 {
                    lo = mid;
                    gap_lo = v.gap.to_f64();
                } else {
                    hi = mid;
                    gap_hi = v.gap.to_f64();
                }
            }
            None => {
                return Ok(ShootResult {
                    n,
                    status: ShootStatus::PrecisionLimit,
                    lo: lo.to_f64(),
                    hi: hi.to_f64(),
                    lo_mp: lo,
                    hi_mp: hi,
                    width: f64::NAN,
                    tau_star,
                    gap_history: history,
                    gap_lo,
                    gap_hi,
                    noise_floor: noise,
                    evaluations: evals,
                    prec_used: cfg_now.prec,
                });
            }
        }
    }
    let width = (&hi - &lo).to_f64();
    Ok(ShootResult {
        n,
        status: ShootStatus::Converged,
        lo: lo.to_f64(),
        hi: hi.to_f64(),
        lo_mp: lo,
        hi_mp: hi,
        width,
        tau_star,
        gap_history: history,
        gap_lo,
        gap_hi,
        noise_floor: noise,
        evaluations: evals,
        prec_used: cfg_now.prec,
    })
}

impl ShootResult {
    /// Midpoint of the final bracket at working precision.
    pub fn r_mid(&self) -> Mp {
        (&self.lo_mp + &self.hi_mp) / 2.0
    }

    /// At the converged bracket the midpoint gap cannot exceed the spread
    /// of the endpoint gaps plus the evaluation noise.
    pub fn converged_gap_budget(&self) -> f64 {
        self.gap_lo.abs() + self.gap_hi.abs() + self.noise_floor
    }
}

/// Agreement of the two branches along a τ-grid in (0, τ*] at fixed R:
/// returns |u_L − u_F| at each grid point.
pub fn grid_agreement(
    big_r: &Mp,
    n: u32,
    tau_star: &Mp,
    points: usize,
    cfg: &ShootConfig,
) -> Result<Vec<(f64, f64)>> {
    let p = ParamSet::from_eigen_ratio_mp(big_r.clone())?;
    let series = compute_sonic_series(
        &p,
        n as usize + cfg.series_extra,
        &SeriesOpts { resonance_guard: cfg.integer_guard, ..Default::default() },
    )?;
    let opts = OdeOpts::with_prec(cfg.prec, cfg.ode_rel_tol);
    let mut out = Vec::with_capacity(points);
    for i in 1..=points {
        let tau = tau_star * (i as f64 / points as f64);
        let u_l = series.eval(&tau);
        let branch = integrate_p6_branch(&p, &tau, cfg.sigma_max, &opts, false)?;
        out.push((tau.to_f64(), (&u_l - &branch.u_f).to_f64()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Fast configuration for tests: lighter precision, looser tolerance.
    fn test_cfg() -> ShootConfig {
        ShootConfig {
            prec: 192,
            ode_rel_tol: 1e-24,
            series_extra: 120,
            ..Default::default()
        }
    }

    #[test]
    fn probe_signs_at_25() {
        let cfg = test_cfg();
        let tau_star = choose_tau_star(25, &cfg).unwrap();
        let lo = Mp::new(cfg.prec, 25.001);
        let hi = Mp::new(cfg.prec, 25.999);
        let g_lo = gap_at(&lo, 25, &tau_star, &cfg).unwrap();
        let g_hi = gap_at(&hi, 25, &tau_star, &cfg).unwrap();
        assert!(g_lo.gap > 0.0, "gap at N+ = {:e}", g_lo.gap.to_f64());
        assert!(g_hi.gap < 0.0, "gap at (N+1)- = {:e}", g_hi.gap.to_f64());
    }

    #[test]
    fn integer_guard_respected() {
        let cfg = test_cfg();
        let tau_star = Mp::new(cfg.prec, 0.01);
        let bad = Mp::new(cfg.prec, 25.0 + 1e-8);
        assert!(matches!(
            gap_at(&bad, 25, &tau_star, &cfg),
            Err(Error::IntegerResonance { .. })
        ));
    }

    #[test]
    fn bisection_converges_at_25() {
        let cfg = test_cfg();
        let res = find_r_n(25, 1e-6, &cfg).unwrap();
        assert_eq!(res.status, ShootStatus::Converged);
        assert!(res.width <= 1e-6);
        assert!(res.lo > 25.0 && res.hi < 26.0);
        assert!(res.gap_lo > 0.0 && res.gap_hi < 0.0);
        // widths halve per iteration: ~21 extra evals from width ~1
        assert!(res.evaluations < 30, "{} evaluations", res.evaluations);
    }
}
