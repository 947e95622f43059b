//! The concrete integration legs of the profile pipeline: the far-field
//! start, the descent from P₆ toward the sonic point, continuation off the
//! local series, the post-sonic run to the origin, and the abscissa map.

use crate::error::{Error, Result};
use crate::fields;
use crate::num::Mp;
use crate::params::ParamSet;
use crate::poly;
use crate::series::SonicSeries;

use super::{OdeOpts, Poly2, TaylorStepper};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    SigmaW,
    TauU,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    ReachedTarget,
    /// Δ₁ = 0 crossing at positive σ (recorded abscissa).
    CrossedDelta1(f64),
    /// Δ_τ = 0 crossing (the exit event toward the origin).
    CrossedDeltaTau(f64),
    SigmaFloor,
    FieldDegenerate(f64),
}

/// One recorded point along a trajectory, stored at f64 for reporting.
/// `fields` is (Δ, Δ₁, Δ₂) in the σ–w frame and (Δ_u, Δ_τ, 0) in τ–u.
#[derive(Debug, Clone, Copy)]
pub struct CurveSample {
    pub abscissa: f64,
    pub ordinate: f64,
    pub fields: [f64; 3],
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct SolutionCurve {
    pub frame: Frame,
    pub samples: Vec<CurveSample>,
    pub decreasing: bool,
    pub termination: Termination,
}

/// Δ₁ and Δ₂ as bivariate polynomials in (σ, w).
pub fn sw_polys(p: &ParamSet) -> (Poly2, Poly2) {
    let prec = p.prec;
    let z = || Mp::zero(prec);
    let d1 = Poly2 {
        c: vec![
            vec![z(), p.r.clone(), -(1.0 + &p.r), Mp::new(prec, 1.0)],
            vec![],
            vec![3.0 * (&p.r - 1.0), Mp::new(prec, -3.0)],
        ],
    };
    let d2 = Poly2 {
        c: vec![
            vec![],
            vec![p.r.clone(), -(6.0 + 2.0 * &p.r) / 3.0, Mp::ratio(prec, 5, 3)],
            vec![],
            vec![Mp::new(prec, -1.0)],
        ],
    };
    (d1, d2)
}

/// Δ_u and Δ_τ as bivariate polynomials in (τ, u).
pub fn tu_polys(p: &ParamSet) -> (Poly2, Poly2) {
    let prec = p.prec;
    let al = &p.alpha;
    let z = || Mp::zero(prec);
    let du = Poly2 {
        c: vec![
            vec![z(), Mp::new(prec, 2.0), Mp::new(prec, -2.0)],
            vec![z(), -4.0 * (al - 4.0) / 3.0],
            vec![z(), Mp::ratio(prec, 10, 3)],
        ],
    };
    let dt = Poly2 {
        c: vec![
            vec![-3.0 * al, 3.0 * al],
            vec![1.0 - 4.0 * al, Mp::new(prec, -3.0)],
            vec![2.0 - al],
            vec![Mp::new(prec, 1.0)],
        ],
    };
    (du, dt)
}

/// Δ as a bivariate polynomial in (σ, w).
pub fn delta_poly(p: &ParamSet) -> Poly2 {
    let prec = p.prec;
    Poly2 {
        c: vec![
            vec![Mp::new(prec, 1.0), Mp::new(prec, -2.0), Mp::new(prec, 1.0)],
            vec![],
            vec![Mp::new(prec, -1.0)],
        ],
    }
}

/// Far-field entry point on the P₆ branch:
/// w = r − 1 + (r−1)(2−r)/(5σ²) + O(σ⁻⁴).
///
/// Returns the start point and the size estimate of the dropped O(σ⁻⁴)
/// term; the branch contracts start errors like (σ/σ_max)³ on the way in.
pub fn far_field_start(p: &ParamSet, sigma_max: f64) -> (Mp, Mp, f64) {
    let sigma = Mp::new(p.prec, sigma_max);
    let corr = (&p.r - 1.0) * (2.0 - &p.r) / (5.0 * sigma.square());
    let w = &p.r - 1.0 + &corr;
    let trunc = corr.to_f64().abs() / (sigma_max * sigma_max);
    (sigma, w, trunc)
}

/// Stop rules for the σ–w Taylor driver.
pub enum SwStop {
    /// Stop when w reaches this value (monotone approach assumed).
    WTarget(Mp),
    /// Stop when σ reaches this value.
    SigmaTarget(Mp),
    /// Descend until σ < floor.
    SigmaFloor(f64),
}

pub struct SwLegConfig {
    pub stop: SwStop,
    /// Verify u_g < u < u_b in the τ–u image at every accepted step.
    pub sandwich_check: bool,
    /// Verify w > a(1+a)σ² at every accepted step and record the margin.
    pub barrier_check: bool,
    /// Locate a Δ₁ sign change (at most one expected).
    pub watch_delta1: bool,
    /// Co-integrate the abscissa map dx/dσ = −Δ/Δ₂ alongside w.
    pub co_x: bool,
    pub record: bool,
    /// σ values (ordered along the direction of travel) at which the step
    /// series is evaluated as dense output.
    pub dense_grid: Vec<f64>,
}

pub struct SwLegOut {
    pub curve: SolutionCurve,
    pub sigma_end: Mp,
    pub w_end: Mp,
    /// Co-integrated x at the end (offset by the supplied x0).
    pub x_end: Option<Mp>,
    /// Δ₁ crossing (σ₁, w, x-at-crossing) when watched and found.
    pub delta1_crossing: Option<(Mp, Mp, Option<Mp>)>,
    /// Smallest w − a(1+a)σ² seen, when checked.
    pub min_barrier_margin: Option<f64>,
    /// Dense-output values (σ, w, x) at the requested grid points.
    pub grid_samples: Vec<(Mp, Mp, Option<Mp>)>,
    pub steps: usize,
}

/// Taylor-series driver for dw/dσ = Δ₁/Δ₂ with optional x quadrature.
pub fn run_sw_leg(
    p: &ParamSet,
    sigma0: &Mp,
    w0: &Mp,
    x0: Option<&Mp>,
    cfg: &SwLegConfig,
    opts: &OdeOpts,
) -> Result<SwLegOut> {
    let prec = opts.prec;
    let (d1, d2) = sw_polys(p);
    let dpoly = delta_poly(p);
    let stepper = TaylorStepper {
        p_num: &d1,
        q_den: &d2,
        degree: TaylorStepper::degree_for(opts.rel_tol),
        opts: opts.clone(),
    };
    let dir = match &cfg.stop {
        SwStop::SigmaTarget(t)
            if t > sigma0 => {
                1.0
            }
        _ => -1.0,
    };
    let mut sigma = sigma0.clone();
    let mut w = w0.clone();
    let mut x = x0.cloned();
    let mut samples = Vec::new();
    let mut steps = 0usize;
    let mut crossing: Option<(Mp, Mp, Option<Mp>)> = None;
    let mut min_margin = f64::INFINITY;
    let mut grid_samples: Vec<(Mp, Mp, Option<Mp>)> = Vec::new();
    let mut grid_idx = 0usize;
    let ap1 = 1.0 + &p.a;

    let push_sample = |samples: &mut Vec<CurveSample>, s: &Mp, wv: &Mp, resid: f64| {
        let f = fields::sw_fields(p, s, wv);
        samples.push(CurveSample {
            abscissa: s.to_f64(),
            ordinate: wv.to_f64(),
            fields: [f.delta.to_f64(), f.delta1.to_f64(), f.delta2.to_f64()],
            residual: resid,
        });
    };
    if cfg.record {
        push_sample(&mut samples, &sigma, &w, 0.0);
    }

    let termination;
    loop {
        if steps > opts.max_steps {
            return Err(Error::NotConverged(format!(
                "sigma-w leg exceeded {} steps at sigma = {}",
                opts.max_steps,
                sigma.to_f64()
            )));
        }
        let mut st = match stepper.expand(&sigma, &w) {
            Ok(st) => st,
            Err(Error::StepUnderflow { abscissa, .. }) => {
                return Err(Error::SonicEscapeFailed { sigma: abscissa });
            }
            Err(e) => return Err(e),
        };
        let scale = w.to_f64().abs().max(0.1);
        let mut h = stepper.pick_h(&st, scale, dir);
        // the co-integrated abscissa map has a pole at sigma = 0, so its
        // series only converges for |h| < sigma; keep the factor at 1/2
        if x.is_some() && h.to_f64().abs() > 0.5 * sigma.to_f64().abs() {
            h = Mp::new(prec, dir * 0.5 * sigma.to_f64().abs());
        }
        // never step past the sonic abscissa into degenerate territory
        if h.to_f64().abs() < sigma.to_f64().abs() * 1e-26 && !matches!(cfg.stop, SwStop::WTarget(_))
        {
            return Err(Error::StepUnderflow {
                abscissa: sigma.to_f64(),
                step: h.to_f64(),
            });
        }
        // clamp to the stop rule
        let mut done = false;
        match &cfg.stop {
            SwStop::SigmaTarget(t) => {
                if (dir > 0.0 && (&sigma + &h) > *t) || (dir < 0.0 && (&sigma + &h) < *t) {
                    h = t - &sigma;
                    done = true;
                }
            }
            SwStop::SigmaFloor(fl) => {
                if (&sigma + &h).to_f64() < *fl {
                    h = Mp::new(prec, *fl) - &sigma;
                    done = true;
                }
            }
            SwStop::WTarget(wt) => {
                let w_end = st.eval(&h);
                let going_up = w_end > w;
                let crossed = if going_up { &w_end >= wt } else { &w_end <= wt };
                if crossed {
                    // refine t: w(t) = wt by bisection on the step series
                    let mut lo = Mp::zero(prec);
                    let mut hi = h.clone();
                    for _ in 0..(prec as usize + 8) {
                        let mid = (&lo + &hi) / 2.0;
                        let wm = st.eval(&mid);
                        let below = if going_up { &wm < wt } else { &wm > wt };
                        if below {
                            lo = mid;
                        } else {
                            hi = mid;
                        }
                    }
                    h = (&lo + &hi) / 2.0;
                    done = true;
                }
            }
        }
        st.h = h.clone();
        // x-quadrature series over this step, shared by dense output,
        // crossing refinement, and the endpoint advance
        let x_int = if x.is_some() {
            let neg_delta = compose_neg(&dpoly, &sigma, &st.coeffs, prec);
            let integrand = poly::div_series(&neg_delta, &st.q_series, st.coeffs.len(), prec);
            Some(poly::integ(&integrand, prec))
        } else {
            None
        };

        // dense output at grid points inside [sigma, sigma + h]
        while grid_idx < cfg.dense_grid.len() {
            let g = cfg.dense_grid[grid_idx];
            let inside = if dir < 0.0 {
                g <= sigma.to_f64() && g >= (&sigma + &h).to_f64()
            } else {
                g >= sigma.to_f64() && g <= (&sigma + &h).to_f64()
            };
            if !inside {
                break;
            }
            let t = Mp::new(prec, g) - &sigma;
            let wg = st.eval(&t);
            let xg = match (&x, &x_int) {
                (Some(xv), Some(xi)) => Some(xv + poly::eval(xi, &t)),
                _ => None,
            };
            grid_samples.push((Mp::new(prec, g), wg, xg));
            grid_idx += 1;
        }

        // delta_1 crossing inside the step
        if cfg.watch_delta1 && crossing.is_none() {
            let f0 = d1.eval(&sigma, &w);
            let s1 = st.x1();
            let w1 = st.y1();
            let f1 = d1.eval(&s1, &w1);
            if f0.signum_i() != 0 && f1.signum_i() != 0 && f0.signum_i() != f1.signum_i() {
                let mut lo = Mp::zero(prec);
                let mut hi = h.clone();
                let s_lo = f0.signum_i();
                for _ in 0..(prec as usize + 8) {
                    let mid = (&lo + &hi) / 2.0;
                    let sm = &sigma + &mid;
                    let wm = st.eval(&mid);
                    if d1.eval(&sm, &wm).signum_i() == s_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let tc = (&lo + &hi) / 2.0;
                let sc = &sigma + &tc;
                let wc = st.eval(&tc);
                let xc = match (&x, &x_int) {
                    (Some(xv), Some(xi)) => Some(xv + poly::eval(xi, &tc)),
                    _ => None,
                };
                crossing = Some((sc, wc, xc));
            }
        }

        // advance, including the x quadrature over the step
        if let (Some(xv), Some(xi)) = (&mut x, &x_int) {
            *xv += poly::eval(xi, &h);
        }
        let resid = {
            // |Q y' - P| at the step end relative to |P|
            let s1 = st.x1();
            let w1 = st.y1();
            let dw = st.eval_deriv(&h);
            let q = d2.eval(&s1, &w1);
            let pv = d1.eval(&s1, &w1);
            let num = (q * dw - &pv).abs().to_f64();
            num / pv.abs().to_f64().max(opts.abs_tol)
        };
        sigma = st.x1();
        w = st.y1();
        steps += 1;

        if cfg.record {
            push_sample(&mut samples, &sigma, &w, resid);
        }
        if cfg.barrier_check {
            let margin = (&w - &p.a * (1.0 + &p.a) * sigma.square()).to_f64();
            min_margin = min_margin.min(margin);
            if margin <= 0.0 {
                return Err(Error::BarrierViolation {
                    sigma: sigma.to_f64(),
                    w: w.to_f64(),
                    bound: (&p.a * (1.0 + &p.a) * sigma.square()).to_f64(),
                });
            }
        }
        if cfg.sandwich_check {
            let tau = -(&ap1 * (&w - &p.w_minus));
            let u = ap1.square() * sigma.square();
            let ug = fields::Curve::Ug.value_fn(p).eval(&tau);
            let ub = fields::Curve::Ub.value_fn(p).eval(&tau);
            let slack = 1e-10 * u.to_f64().abs().max(1.0);
            if (&u - &ug).to_f64() < -slack || (&ub - &u).to_f64() < -slack {
                return Err(Error::SandwichViolation {
                    tau: tau.to_f64(),
                    u: u.to_f64(),
                    lo: ug.to_f64(),
                    hi: ub.to_f64(),
                });
            }
        }
        if done {
            termination = match &cfg.stop {
                SwStop::SigmaFloor(_) => Termination::SigmaFloor,
                _ => Termination::ReachedTarget,
            };
            break;
        }
    }
    Ok(SwLegOut {
        curve: SolutionCurve {
            frame: Frame::SigmaW,
            samples,
            decreasing: dir < 0.0,
            termination,
        },
        sigma_end: sigma,
        w_end: w,
        x_end: x,
        delta1_crossing: crossing,
        min_barrier_margin: if cfg.barrier_check { Some(min_margin) } else { None },
        grid_samples,
        steps,
    })
}

/// Series of −Δ(x0 + t, Y(t)) given the solution series Y.
fn compose_neg(delta: &Poly2, x0: &Mp, yser: &[Mp], prec: u32) -> Vec<Mp> {
    // Δ = (y−1)² − x²: compose directly from the y-series
    let _ = delta;
    let len = yser.len();
    let mut ym1 = yser.to_vec();
    ym1[0] = &ym1[0] - 1.0;
    let mut out = poly::mul(&ym1, &ym1, len, prec);
    // subtract (x0 + t)^2 = x0² + 2x0 t + t²
    out[0] -= x0.square();
    if len > 1 {
        out[1] -= 2.0 * x0;
    }
    if len > 2 {
        out[2] -= 1.0;
    }
    for c in out.iter_mut() {
        *c = -&*c;
    }
    out
}

/// Result of descending the P₆ branch to the matching abscissa τ*.
pub struct P6Branch {
    pub curve: SolutionCurve,
    pub sigma_at_target: Mp,
    /// u_F(τ*) = (1+a)²σ².
    pub u_f: Mp,
    /// Combined error estimate: far-field truncation (contracted on the way
    /// in) plus the integration tolerance.
    pub err_estimate: f64,
}

/// Integrate from the far field down to the point where τ = τ*.
pub fn integrate_p6_branch(
    p: &ParamSet,
    tau_star: &Mp,
    sigma_max: f64,
    opts: &OdeOpts,
    record: bool,
) -> Result<P6Branch> {
    if !(*tau_star > 0.0) || !(tau_star < &p.alpha) {
        return Err(Error::OutOfRange(format!(
            "tau* = {} must lie in (0, alpha = {})",
            tau_star.to_f64(),
            p.alpha.to_f64()
        )));
    }
    let (sigma0, w0, trunc) = far_field_start(p, sigma_max);
    let w_target = &p.w_minus - tau_star / (1.0 + &p.a);
    let cfg = SwLegConfig {
        stop: SwStop::WTarget(w_target),
        sandwich_check: true,
        barrier_check: false,
        watch_delta1: false,
        co_x: false,
        record,
        dense_grid: Vec::new(),
    };
    let out = run_sw_leg(p, &sigma0, &w0, None, &cfg, opts)?;
    let u_f = (1.0 + &p.a).square() * out.sigma_end.square();
    // start error contracts like (sigma/sigma_max)^3 along the branch;
    // the factor 8 covers the unknown constant of the dropped expansion term
    let contraction = (out.sigma_end.to_f64() / sigma_max).powi(3).abs();
    let err = 8.0 * trunc * contraction + opts.rel_tol * u_f.to_f64().abs();
    Ok(P6Branch {
        curve: out.curve,
        sigma_at_target: out.sigma_end,
        u_f,
        err_estimate: err,
    })
}

/// Stop rules for the τ–u Taylor driver.
pub enum TuStop {
    TauTarget(Mp),
    /// Stop at the Δ_τ = 0 crossing (the exit event from the sonic funnel).
    DeltaTauZero,
}

pub struct TuLegOut {
    pub curve: SolutionCurve,
    pub tau_end: Mp,
    pub u_end: Mp,
    pub steps: usize,
}

/// Taylor-series driver for du/dτ = Δ_u/Δ_τ.
pub fn run_tu_leg(
    p: &ParamSet,
    tau0: &Mp,
    u0: &Mp,
    dir: f64,
    stop: &TuStop,
    opts: &OdeOpts,
    record: bool,
) -> Result<TuLegOut> {
    let prec = opts.prec;
    let (du, dt) = tu_polys(p);
    let stepper = TaylorStepper {
        p_num: &du,
        q_den: &dt,
        degree: TaylorStepper::degree_for(opts.rel_tol),
        opts: opts.clone(),
    };
    let mut tau = tau0.clone();
    let mut u = u0.clone();
    let mut samples = Vec::new();
    let mut steps = 0usize;
    let push_sample = |samples: &mut Vec<CurveSample>, t: &Mp, uv: &Mp, resid: f64| {
        let f = fields::tu_fields(p, t, uv);
        samples.push(CurveSample {
            abscissa: t.to_f64(),
            ordinate: uv.to_f64(),
            fields: [f.delta_u.to_f64(), f.delta_tau.to_f64(), 0.0],
            residual: resid,
        });
    };
    if record {
        push_sample(&mut samples, &tau, &u, 0.0);
    }
    let termination;
    loop {
        if steps > opts.max_steps {
            return Err(Error::NotConverged(format!(
                "tau-u leg exceeded {} steps at tau = {}",
                opts.max_steps,
                tau.to_f64()
            )));
        }
        let mut st = match stepper.expand(&tau, &u) {
            Ok(st) => st,
            Err(Error::StepUnderflow { .. }) => match stop {
                // the Δ_τ denominator degenerated: that is the watched event
                TuStop::DeltaTauZero => {
                    termination = Termination::CrossedDeltaTau(tau.to_f64());
                    break;
                }
                _ => {
                    return Err(Error::EventMissed(format!(
                        "Delta_tau vanished at tau = {} before the target",
                        tau.to_f64()
                    )))
                }
            },
            Err(e) => return Err(e),
        };
        let scale = u.to_f64().abs().max(0.1);
        let mut h = stepper.pick_h(&st, scale, dir);
        let mut done = false;
        if let TuStop::TauTarget(t) = stop {
            if (dir > 0.0 && (&tau + &h) > *t) || (dir < 0.0 && (&tau + &h) < *t) {
                h = t - &tau;
                done = true;
            }
        }
        if let TuStop::DeltaTauZero = stop {
            // shrink the step if Δ_τ changes sign inside it, then bisect
            let t1 = &tau + &h;
            let u1 = st.eval(&h);
            let f0 = dt.eval(&tau, &u);
            let f1 = dt.eval(&t1, &u1);
            if f0.signum_i() != f1.signum_i() && f1.signum_i() != 0 {
                let mut lo = Mp::zero(prec);
                let mut hi = h.clone();
                let s_lo = f0.signum_i();
                for _ in 0..(prec as usize + 8) {
                    let mid = (&lo + &hi) / 2.0;
                    let tm = &tau + &mid;
                    let um = st.eval(&mid);
                    if dt.eval(&tm, &um).signum_i() == s_lo {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                h = (&lo + &hi) / 2.0;
                st.h = h.clone();
                tau = st.x1();
                u = st.y1();
                steps += 1;
                if record {
                    push_sample(&mut samples, &tau, &u, 0.0);
                }
                termination = Termination::CrossedDeltaTau(tau.to_f64());
                break;
            }
        }
        st.h = h.clone();
        let resid = {
            let t1 = st.x1();
            let u1 = st.y1();
            let dv = st.eval_deriv(&h);
            let q = dt.eval(&t1, &u1);
            let pv = du.eval(&t1, &u1);
            (q * dv - &pv).abs().to_f64() / pv.abs().to_f64().max(opts.abs_tol)
        };
        tau = st.x1();
        u = st.y1();
        steps += 1;
        if record {
            push_sample(&mut samples, &tau, &u, resid);
        }
        if done {
            termination = Termination::ReachedTarget;
            break;
        }
    }
    Ok(TuLegOut {
        curve: SolutionCurve {
            frame: Frame::TauU,
            samples,
            decreasing: dir < 0.0,
            termination,
        },
        tau_end: tau,
        u_end: u,
        steps,
    })
}

/// Continue the local analytic solution by ODE from ±τ_h.
///
/// The initial condition is the series value and slope at `tau_from`; the
/// series tail there must sit below `tail_budget` (relative to u ≈ 1).
/// Toward negative τ the leg terminates at the Δ_τ = 0 crossing, refined to
/// the step series; toward positive τ it runs to `tau_target`.
pub fn integrate_from_series(
    p: &ParamSet,
    series: &SonicSeries,
    tau_from: &Mp,
    stop: &TuStop,
    tail_budget: f64,
    opts: &OdeOpts,
    record: bool,
) -> Result<TuLegOut> {
    let tail = series.tail_bound(tau_from.to_f64().abs());
    if !(tail <= tail_budget) {
        return Err(Error::TailTooLarge { tail, budget: tail_budget });
    }
    let u0 = series.eval(tau_from);
    let dir = match stop {
        TuStop::DeltaTauZero => -1.0,
        TuStop::TauTarget(t) => {
            if t > tau_from {
                1.0
            } else {
                -1.0
            }
        }
    };
    run_tu_leg(p, tau_from, &u0, dir, stop, opts, record)
}

/// Post-sonic descent to the origin: dw/dσ = Δ₁/Δ₂ with σ ↓ σ_floor.
pub struct OriginLeg {
    pub out: SwLegOut,
    /// w/σ at the floor — the approach slope toward the origin.
    pub w_over_sigma_at_floor: f64,
}

/// Run from a point inside {Δ₂ > 0} down to σ_floor, recording the single
/// Δ₁ sign change at σ₁, guarding w > a(1+a)σ², and co-integrating x when
/// an offset is supplied.
pub fn integrate_sw_to_origin(
    p: &ParamSet,
    sigma0: &Mp,
    w0: &Mp,
    x0: Option<&Mp>,
    sigma_floor: f64,
    opts: &OdeOpts,
    record: bool,
) -> Result<OriginLeg> {
    let f0 = fields::sw_fields(p, sigma0, w0);
    if !(f0.delta2 > 0.0) {
        return Err(Error::OutOfRange(format!(
            "start ({}, {}) not inside the Delta_2 > 0 region",
            sigma0.to_f64(),
            w0.to_f64()
        )));
    }
    let cfg = SwLegConfig {
        stop: SwStop::SigmaFloor(sigma_floor),
        sandwich_check: false,
        barrier_check: true,
        watch_delta1: true,
        co_x: x0.is_some(),
        record,
        dense_grid: Vec::new(),
    };
    let out = run_sw_leg(p, sigma0, w0, x0, &cfg, opts)?;
    let slope = out.w_end.to_f64() / out.sigma_end.to_f64();
    Ok(OriginLeg { out, w_over_sigma_at_floor: slope })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::series::{compute_sonic_series, SeriesOpts};

    fn p25() -> ParamSet {
        ParamSet::from_eigen_ratio(256, 25.5).unwrap()
    }

    #[test]
    fn far_field_limits() {
        let p = p25();
        let (_, w, trunc) = far_field_start(&p, 1e6);
        assert!((w.to_f64() - (p.r.to_f64() - 1.0)).abs() < 1e-11);
        assert!(trunc < 1e-24);
    }

    #[test]
    fn p6_branch_reaches_target_with_sandwich() {
        let p = p25();
        let opts = OdeOpts::with_prec(256, 1e-28);
        let tau_star = Mp::new(256, 0.02);
        let b = integrate_p6_branch(&p, &tau_star, 1e3, &opts, true).unwrap();
        // terminal sandwich
        let ug = fields::Curve::Ug.value(&p, &tau_star).unwrap();
        let ub = fields::Curve::Ub.value(&p, &tau_star).unwrap();
        assert!(b.u_f > ug && b.u_f < ub, "u_F = {}", b.u_f.to_f64());
        assert!(b.curve.termination == Termination::ReachedTarget);
        // residuals recorded and small
        for s in &b.curve.samples {
            assert!(s.residual < 1e-18, "residual {} at {}", s.residual, s.abscissa);
        }
    }

    #[test]
    fn sigma_max_doubling_study() {
        // doubling sigma_max moves u_F(tau*) by less than the tolerance
        let p = p25();
        let opts = OdeOpts::with_prec(256, 1e-30);
        let tau_star = Mp::new(256, 0.02);
        let b1 = integrate_p6_branch(&p, &tau_star, 1e3, &opts, false).unwrap();
        let b2 = integrate_p6_branch(&p, &tau_star, 2e3, &opts, false).unwrap();
        let d = (&b1.u_f - &b2.u_f).abs().to_f64();
        assert!(d < 1e-24, "u_F shift {d:e}");
    }

    #[test]
    fn u_f_grows_toward_the_corner() {
        // integrating to tau* closer to alpha gives larger u_F
        let p = p25();
        let opts = OdeOpts::with_prec(192, 1e-20);
        let al = p.alpha.to_f64();
        let b1 =
            integrate_p6_branch(&p, &Mp::new(192, 0.5 * al), 1e3, &opts, false).unwrap();
        let b2 =
            integrate_p6_branch(&p, &Mp::new(192, 0.9 * al), 1e3, &opts, false).unwrap();
        assert!(b2.u_f > b1.u_f);
        assert!(b2.u_f.to_f64() > 2.0);
    }

    #[test]
    fn series_handoff_consistency() {
        // integrating from tau0/2 to tau0 reproduces the series value
        let p = p25();
        let s = compute_sonic_series(&p, 220, &SeriesOpts::default()).unwrap();
        let tau0 = s.tau0();
        let from = Mp::new(256, tau0 / 2.0);
        let to = Mp::new(256, tau0);
        let opts = OdeOpts::with_prec(256, 1e-30);
        let leg = integrate_from_series(
            &p,
            &s,
            &from,
            &TuStop::TauTarget(to.clone()),
            1e-20,
            &opts,
            false,
        )
        .unwrap();
        let direct = s.eval(&to);
        let rel = crate::num::rel_diff(&leg.u_end, &direct, 1e-30);
        assert!(rel < 1e-26, "handoff mismatch {rel:e}");
    }

    #[test]
    fn tail_budget_guard() {
        let p = p25();
        let s = compute_sonic_series(&p, 60, &SeriesOpts::default()).unwrap();
        let too_far = Mp::new(256, 3.0 * s.tau0());
        let opts = OdeOpts::with_prec(256, 1e-20);
        let err = integrate_from_series(
            &p,
            &s,
            &too_far,
            &TuStop::TauTarget(Mp::new(256, 0.9 * s.tau0())),
            1e-20,
            &opts,
            false,
        );
        assert!(matches!(err, Err(Error::TailTooLarge { .. })));
    }
}
