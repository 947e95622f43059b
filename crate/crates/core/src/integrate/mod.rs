//! ODE integration away from the sonic point.
//!
//! Two engines share the work. An embedded Dormand–Prince 5(4) pair with
//! dense output handles ordinary tolerances and event location, and a
//! Taylor-series stepper (power-series recursion on the rational right-hand
//! sides, with the series itself as dense output) reaches the extreme local
//! tolerances the shooting comparison needs, where a fifth-order pair would
//! require millions of steps.

pub mod legs;

pub use legs::*;

use crate::error::{Error, Result};
use crate::num::Mp;
use crate::poly;

/// Integration knobs. `rel_tol` is a local (per unit step) target.
#[derive(Debug, Clone)]
pub struct OdeOpts {
    pub prec: u32,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_steps: usize,
}

impl OdeOpts {
    pub fn with_prec(prec: u32, rel_tol: f64) -> Self {
        OdeOpts { prec, rel_tol, abs_tol: rel_tol * 1e-2, max_steps: 2_000_000 }
    }
}

/// A single accepted Dormand–Prince step with its dense-output data.
#[derive(Debug, Clone)]
pub struct DenseStep {
    pub x0: Mp,
    pub h: Mp,
    pub y0: Vec<Mp>,
    pub y1: Vec<Mp>,
    rcont: [Vec<Mp>; 5],
}

impl DenseStep {
    /// Fourth-order continuous extension at θ ∈ [0, 1].
    pub fn eval(&self, theta: &Mp) -> Vec<Mp> {
        let om = 1.0 - theta;
        (0..self.y0.len())
            .map(|i| {
                &self.rcont[0][i]
                    + theta
                        * (&self.rcont[1][i]
                            + &om
                                * (&self.rcont[2][i]
                                    + theta * (&self.rcont[3][i] + &om * &self.rcont[4][i])))
            })
            .collect()
    }

    pub fn x1(&self) -> Mp {
        &self.x0 + &self.h
    }
}

/// An event to watch along the integration.
pub struct Event<'a> {
    pub name: &'a str,
    /// Sign-change detector g(x, y).
    pub g: Box<dyn Fn(&Mp, &[Mp]) -> Mp + 'a>,
    /// Stop at the refined crossing.
    pub terminal: bool,
}

/// Outcome of one integrator run.
pub struct OdeRun {
    pub x_end: Mp,
    pub y_end: Vec<Mp>,
    pub steps: usize,
    pub rejected: usize,
    /// Name + location of the terminal event, if one fired.
    pub event_hit: Option<(String, Mp)>,
    /// Dense steps, kept only when requested.
    pub dense: Vec<DenseStep>,
}

const STAGES: usize = 7;

fn dp_coeffs(prec: u32) -> ([[Mp; 6]; STAGES], [Mp; STAGES], [Mp; STAGES], [Mp; STAGES]) {
    let q = |n: i64, d: i64| Mp::ratio(prec, n, d);
    let z = || Mp::zero(prec);
    let a = [
        [z(), z(), z(), z(), z(), z()],
        [q(1, 5), z(), z(), z(), z(), z()],
        [q(3, 40), q(9, 40), z(), z(), z(), z()],
        [q(44, 45), q(-56, 15), q(32, 9), z(), z(), z()],
        [q(19372, 6561), q(-25360, 2187), q(64448, 6561), q(-212, 729), z(), z()],
        [q(9017, 3168), q(-355, 33), q(46732, 5247), q(49, 176), q(-5103, 18656), z()],
        [q(35, 384), z(), q(500, 1113), q(125, 192), q(-2187, 6784), q(11, 84)],
    ];
    let c = [z(), q(1, 5), q(3, 10), q(4, 5), q(8, 9), q(1, 1), q(1, 1)];
    let b5 = [
        q(35, 384),
        z(),
        q(500, 1113),
        q(125, 192),
        q(-2187, 6784),
        q(11, 84),
        z(),
    ];
    let b4 = [
        q(5179, 57600),
        z(),
        q(7571, 16695),
        q(393, 640),
        q(-92097, 339200),
        q(187, 2100),
        q(1, 40),
    ];
    (a, c, b5, b4)
}

fn dense_d(prec: u32) -> [Mp; STAGES] {
    let q = |n: i64, d: i64| Mp::ratio(prec, n, d);
    [
        q(-12715105075, 11282082432),
        Mp::zero(prec),
        q(87487479700, 32700410799),
        q(-10690763975, 1880347072),
        q(701980252875, 199316789632),
        q(-1453857185, 822651844),
        q(69997945, 29380423),
    ]
}

/// Integrate y' = f(x, y) from (x0, y0) to x_end with the 5(4) pair.
///
/// `events` are checked on every accepted step and refined on the dense
/// output by bisection; a terminal event truncates the run at its crossing.
pub fn dopri5<F>(
    f: F,
    x0: &Mp,
    y0: &[Mp],
    x_end: &Mp,
    opts: &OdeOpts,
    events: &[Event<'_>],
    keep_dense: bool,
    mut on_step: impl FnMut(&DenseStep),
) -> Result<OdeRun>
where
    F: Fn(&Mp, &[Mp]) -> Vec<Mp>,
{
    let prec = opts.prec;
    let dim = y0.len();
    let (a, c, b5, b4) = dp_coeffs(prec);
    let dd = dense_d(prec);
    let dir = if x_end > x0 { 1.0 } else { -1.0 };
    let span = (x_end - x0).abs();
    if span.is_zero() {
        return Ok(OdeRun {
            x_end: x0.clone(),
            y_end: y0.to_vec(),
            steps: 0,
            rejected: 0,
            event_hit: None,
            dense: Vec::new(),
        });
    }
    let mut x = x0.clone();
    let mut y = y0.to_vec();
    let mut k1 = f(&x, &y);
    // initial step from the first derivative scale
    let mut h = {
        let scale = y.iter().map(|v| v.to_f64().abs()).fold(opts.abs_tol, f64::max);
        let d0 = k1.iter().map(|v| v.to_f64().abs()).fold(1e-30, f64::max);
        let guess = (opts.rel_tol.powf(0.2) * scale / d0).min(span.to_f64() / 10.0);
        Mp::new(prec, dir * guess.max(1e-290))
    };
    let mut steps = 0usize;
    let mut rejected = 0usize;
    let mut dense = Vec::new();
    let mut ev_prev: Vec<Mp> = events.iter().map(|e| (e.g)(&x, &y)).collect();

    loop {
        if steps + rejected > opts.max_steps {
            return Err(Error::NotConverged(format!(
                "step budget {} exhausted at x = {}",
                opts.max_steps,
                x.to_f64()
            )));
        }
        // clamp to the endpoint
        let remaining = x_end - &x;
        if (h.abs() + 0.0) > remaining.abs() {
            h = remaining.clone();
        }
        if h.to_f64().abs() < 1e-280 {
            break;
        }
        let mut k = vec![k1.clone()];
        for s in 1..STAGES {
            let xs = &x + &c[s] * &h;
            let mut ys = y.clone();
            for (i, yi) in ys.iter_mut().enumerate() {
                let mut acc = Mp::zero(prec);
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += &a[s][j] * &kj[i];
                }
                *yi += &h * acc;
            }
            k.push(f(&xs, &ys));
        }
        // 5th-order solution and embedded error
        let mut y1 = y.clone();
        let mut err: f64 = 0.0;
        for i in 0..dim {
            let mut acc5 = Mp::zero(prec);
            let mut acc4 = Mp::zero(prec);
            for s in 0..STAGES {
                acc5 += &b5[s] * &k[s][i];
                acc4 += &b4[s] * &k[s][i];
            }
            y1[i] += &h * &acc5;
            let e = (&h * (acc5 - acc4)).to_f64().abs();
            let sc = opts.abs_tol + opts.rel_tol * y[i].to_f64().abs().max(y1[i].to_f64().abs());
            err = err.max(e / sc);
        }
        if !err.is_finite() {
            return Err(Error::NotConverged(format!(
                "non-finite error estimate at x = {}",
                x.to_f64()
            )));
        }
        if err > 1.0 {
            rejected += 1;
            let fac = (0.9 * err.powf(-0.2)).max(0.2);
            h = &h * fac;
            continue;
        }
        // accept
        steps += 1;
        let dy: Vec<Mp> = (0..dim).map(|i| &y1[i] - &y[i]).collect();
        let rcont1 = y.clone();
        let rcont2 = dy.clone();
        let rcont3: Vec<Mp> = (0..dim).map(|i| &h * &k[0][i] - &dy[i]).collect();
        let rcont4: Vec<Mp> = (0..dim).map(|i| &dy[i] - &h * &k[STAGES - 1][i] - &rcont3[i]).collect();
        let rcont5: Vec<Mp> = (0..dim)
            .map(|i| {
                let mut acc = Mp::zero(prec);
                for s in 0..STAGES {
                    acc += &dd[s] * &k[s][i];
                }
                &h * acc
            })
            .collect();
        let step = DenseStep {
            x0: x.clone(),
            h: h.clone(),
            y0: y.clone(),
            y1: y1.clone(),
            rcont: [rcont1, rcont2, rcont3, rcont4, rcont5],
        };
        let x1 = step.x1();

        // events on this step
        let ev_now: Vec<Mp> = events.iter().map(|e| (e.g)(&x1, &y1)).collect();
        let mut hit: Option<(usize, Mp, Vec<Mp>)> = None;
        for (idx, ev) in events.iter().enumerate() {
            let s0 = ev_prev[idx].signum_i();
            let s1 = ev_now[idx].signum_i();
            if s0 != 0 && s1 != 0 && s0 != s1 {
                // bisection on the dense output
                let mut lo = Mp::zero(prec);
                let mut hi = Mp::new(prec, 1.0);
                let mut glo = ev_prev[idx].clone();
                for _ in 0..(prec as usize + 8) {
                    let mid = (&lo + &hi) / 2.0;
                    let ym = step.eval(&mid);
                    let gm = (ev.g)(&(&x + &mid * &h), &ym);
                    if gm.signum_i() == glo.signum_i() && gm.signum_i() != 0 {
                        lo = mid;
                        glo = gm;
                    } else {
                        hi = mid;
                    }
                }
                let theta = (&lo + &hi) / 2.0;
                let yc = step.eval(&theta);
                let xc = &x + &theta * &h;
                if ev.terminal {
                    hit = Some((idx, xc, yc));
                    break;
                }
            }
        }

        on_step(&step);
        if keep_dense {
            dense.push(step);
        }
        if let Some((idx, xc, yc)) = hit {
            return Ok(OdeRun {
                x_end: xc.clone(),
                y_end: yc,
                steps,
                rejected,
                event_hit: Some((events[idx].name.to_string(), xc)),
                dense,
            });
        }

        x = x1;
        y = y1;
        k1 = k[STAGES - 1].clone(); // FSAL
        ev_prev = ev_now;
        let done = (x_end - &x).abs().to_f64() < 1e-280;
        if done {
            break;
        }
        let fac = (0.9 * err.max(1e-10).powf(-0.2)).clamp(0.2, 5.0);
        h = &h * fac;
    }
    Ok(OdeRun {
        x_end: x,
        y_end: y,
        steps,
        rejected,
        event_hit: None,
        dense,
    })
}

/// A bivariate polynomial Σ c[i][j] xⁱ yʲ with small degrees.
#[derive(Debug, Clone)]
pub struct Poly2 {
    /// c[i][j] multiplies xⁱ yʲ.
    pub c: Vec<Vec<Mp>>,
}

impl Poly2 {
    pub fn eval(&self, x: &Mp, y: &Mp) -> Mp {
        let prec = x.prec();
        let mut acc = Mp::zero(prec);
        let mut xi = Mp::new(prec, 1.0);
        for row in &self.c {
            let mut yi = Mp::new(prec, 1.0);
            let mut rfac = Mp::zero(prec);
            for cij in row {
                rfac += cij * &yi;
                yi *= y;
            }
            acc += &xi * rfac;
            xi *= x;
        }
        acc
    }

    /// Max power of y carried by any term.
    fn ydeg(&self) -> usize {
        self.c.iter().map(|r| r.len().saturating_sub(1)).max().unwrap_or(0)
    }

    /// Coefficient polynomials β_j(t) of yʲ after recentering x ← x0 + t.
    fn shifted_rows(&self, x0: &Mp, prec: u32) -> Vec<Vec<Mp>> {
        let ydeg = self.ydeg();
        let xdeg = self.c.len() - 1;
        let mut rows = vec![vec![Mp::zero(prec); xdeg + 1]; ydeg + 1];
        for (i, row) in self.c.iter().enumerate() {
            for (j, cij) in row.iter().enumerate() {
                rows[j][i] = cij.clone();
            }
        }
        rows.into_iter().map(|r| poly::shift(&r, x0)).collect()
    }
}

/// Taylor-series stepper for y' = P(x, y)/Q(x, y).
///
/// Each step recenters both polynomials at (x0, y0), builds the solution
/// series by the standard coefficient recursion (Q₀ must stay away from 0 —
/// sonic neighbourhoods belong to the series module, not to this stepper),
/// picks h from the coefficient tail, and advances. The series doubles as
/// dense output; `watch` may inspect every accepted step and shorten it.
pub struct TaylorStepper<'p> {
    pub p_num: &'p Poly2,
    pub q_den: &'p Poly2,
    pub degree: usize,
    pub opts: OdeOpts,
}

/// One accepted Taylor step: y(x0 + t) = Σ coeffs[k] t^k, valid |t| ≤ |h|.
pub struct TaylorStep {
    pub x0: Mp,
    pub h: Mp,
    pub coeffs: Vec<Mp>,
    /// Series of Q(x0+t, y(t)) — shared with co-integrated quadratures.
    pub q_series: Vec<Mp>,
}

impl TaylorStep {
    pub fn eval(&self, t: &Mp) -> Mp {
        poly::eval(&self.coeffs, t)
    }
    pub fn eval_deriv(&self, t: &Mp) -> Mp {
        poly::eval(&poly::deriv(&self.coeffs), t)
    }
    pub fn x1(&self) -> Mp {
        &self.x0 + &self.h
    }
    pub fn y1(&self) -> Mp {
        self.eval(&self.h)
    }
}

impl<'p> TaylorStepper<'p> {
    pub fn degree_for(tol: f64) -> usize {
        // geometric decay at h/rho ~ 0.35 per order
        ((-tol.ln() / 1.05).ceil() as usize + 8).max(16)
    }

    /// Build the solution series at (x0, y0) to the configured degree.
    pub fn expand(&self, x0: &Mp, y0: &Mp) -> Result<TaylorStep> {
        let prec = self.opts.prec;
        let d = self.degree;
        let p_rows = self.p_num.shifted_rows(x0, prec);
        let q_rows = self.q_den.shifted_rows(x0, prec);
        let ydeg = p_rows.len().max(q_rows.len()) - 1;

        let mut y = Vec::with_capacity(d + 1);
        y.push(y0.clone());
        // y-power series, extended alongside y
        let mut ypow: Vec<Vec<Mp>> = Vec::with_capacity(ydeg + 1);
        ypow.push(vec![Mp::new(prec, 1.0)]);
        for j in 1..=ydeg {
            ypow.push(vec![if j == 1 { y0.clone() } else { &ypow[j - 1][0] * y0 }]);
        }
        let series_coeff = |rows: &Vec<Vec<Mp>>, ypow: &Vec<Vec<Mp>>, k: usize| -> Mp {
            let mut acc = Mp::zero(prec);
            for (j, beta) in rows.iter().enumerate() {
                for (i, bi) in beta.iter().enumerate() {
                    if i > k {
                        break;
                    }
                    if bi.is_zero() {
                        continue;
                    }
                    acc += bi * &ypow[j][k - i];
                }
            }
            acc
        };
        let q0 = series_coeff(&q_rows, &ypow, 0);
        if q0.abs().to_f64() < 1e-260 {
            return Err(Error::StepUnderflow { abscissa: x0.to_f64(), step: 0.0 });
        }
        let mut q_series = vec![q0];
        for k in 0..d {
            let p_k = series_coeff(&p_rows, &ypow, k);
            // q coefficients up to k are already available (y known to k)
            let mut rhs = p_k;
            for i in 1..=k {
                rhs -= &q_series[i] * ((k + 1 - i) as f64 * &y[k + 1 - i]);
            }
            let y_next = rhs / ((k + 1) as f64 * &q_series[0]);
            y.push(y_next);
            // extend y powers to index k+1
            let kk = k + 1;
            ypow[0].push(Mp::zero(prec));
            for j in 1..=ydeg {
                let c = if j == 1 {
                    y[kk].clone()
                } else {
                    let mut acc = Mp::zero(prec);
                    for m in 0..=kk {
                        acc += &ypow[j - 1][m] * &y[kk - m];
                    }
                    acc
                };
                ypow[j].push(c);
            }
            if kk < d {
                q_series.push(series_coeff(&q_rows, &ypow, kk));
            }
        }
        Ok(TaylorStep {
            x0: x0.clone(),
            h: Mp::zero(prec),
            coeffs: y,
            q_series,
        })
    }

    /// Choose a step from the coefficient tail: the last two terms at h must
    /// sit below tol·scale. All magnitude comparisons run on log2 values so
    /// coefficients outside the f64 range (huge σ, deep tolerances) still
    /// steer the step correctly.
    pub fn pick_h(&self, step: &TaylorStep, scale: f64, dir: f64) -> Mp {
        let d = step.coeffs.len() - 1;
        let log2_c = |k: usize| -> f64 {
            let c = &step.coeffs[k];
            if c.is_zero() {
                f64::NEG_INFINITY
            } else {
                c.abs().log2().to_f64()
            }
        };
        let l_tol = (self.opts.rel_tol * scale.max(self.opts.abs_tol)).log2();
        let mut lh: f64 = f64::INFINITY;
        for k in [d - 1, d] {
            let lc = log2_c(k);
            if lc.is_finite() {
                lh = lh.min((l_tol - 1.0 - lc) / k as f64);
            }
        }
        // radius guard from the mid coefficients
        let l0 = log2_c(0).max(scale.log2());
        for k in (d / 2)..d {
            let lc = log2_c(k);
            if lc.is_finite() {
                let l_rho = (l0 - lc) / k as f64;
                lh = lh.min(l_rho - 1.152); // 0.45·rho
            }
        }
        if !lh.is_finite() {
            return Mp::new(self.opts.prec, dir * 0.1);
        }
        Mp::new(self.opts.prec, dir * 2f64.powf(lh))
    }
}
