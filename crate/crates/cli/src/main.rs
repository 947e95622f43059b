//! Command-line surface: parameter algebra, series tables, the 𝒮∞ run,
//! shooting, profile assembly, verification, and portrait export.
//!
//! Exit codes: 0 success, 1 domain/usage errors, 2 verification failures.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde::Serialize;

use guderley::fields::{self, Curve};
use guderley::num::Mp;
use guderley::params::{special_points, ParamSet};
use guderley::profile::{build_profile, verify_barriers, verify_repulsivity, ProfileConfig};
use guderley::series::{
    comparison_sequences, compute_sonic_series, limiting, reformulate, SeriesOpts,
};
use guderley::shoot::{find_r_n, ShootConfig, ShootStatus};
use guderley::Error;

#[derive(Parser)]
#[command(name = "guderley", version, about = "Self-similar imploding flow profiles for a monatomic gas")]
struct Cli {
    /// Working precision in bits (env: GUDERLEY_PREC_BITS).
    #[arg(long, global = true)]
    prec: Option<u32>,
    /// Worker threads for verification sweeps (env: GUDERLEY_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Output directory for CSV/JSON artifacts.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Print the parameter cluster from any entry point.
    Params {
        #[arg(long = "R", conflicts_with_all = ["r", "alpha"])]
        big_r: Option<f64>,
        #[arg(long)]
        r: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Sonic series coefficients and comparison tables at a ratio R.
    Series {
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value_t = 64)]
        k: usize,
    },
    /// The limiting-sequence ratio run and its extrapolated limit.
    Sinfty {
        #[arg(long, default_value_t = 100_000)]
        k: usize,
        #[arg(long, default_value_t = 64)]
        k_rat: usize,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// Checkpoint write stride (coefficient count).
        #[arg(long, default_value_t = 20_000)]
        stride: usize,
    },
    /// Bracket the matched ratio R_N by sign bisection.
    Shoot {
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Build and export the global profile at the matched ratio.
    Profile {
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
    },
    /// Run every certificate at a matched ratio: barriers, standing sign
    /// certificates, repulsivity margins.
    Verify {
        #[arg(long = "N")]
        n: u32,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
        #[arg(long, default_value_t = 4096)]
        samples: usize,
    },
    /// Export phase-portrait data: zero curves, special points, barriers.
    Export {
        #[arg(long = "R")]
        big_r: f64,
        #[arg(long, default_value_t = 512)]
        points: usize,
    },
}

#[derive(Serialize)]
struct Meta {
    version: String,
    precision_bits: u32,
    threads: usize,
    command: String,
}

fn version_string() -> String {
    let git = std::process::Command::new("git")
        .args(["describe", "--always", "--dirty", "--tags"])
        .output()
        .ok()
        .filter(|o| o.status.success())
        .map(|o| String::from_utf8_lossy(&o.stdout).trim().to_string());
    match git {
        Some(g) if !g.is_empty() => format!("{} ({g})", env!("CARGO_PKG_VERSION")),
        _ => env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let prec = cli
        .prec
        .or_else(|| std::env::var("GUDERLEY_PREC_BITS").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(256);
    let threads = cli
        .threads
        .or_else(|| std::env::var("GUDERLEY_THREADS").ok().and_then(|s| s.parse().ok()))
        .unwrap_or(1)
        .max(1);
    if prec < 64 {
        eprintln!("error: precision_bits must be at least 64");
        return ExitCode::from(1);
    }
    match run(&cli, prec, threads) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn write_meta(dir: &Path, prec: u32, threads: usize, command: &str, extra: serde_json::Value) -> Result<(), Error> {
    fs::create_dir_all(dir)?;
    let meta = serde_json::json!({
        "meta": Meta {
            version: version_string(),
            precision_bits: prec,
            threads,
            command: command.to_string(),
        },
        "data": extra,
    });
    fs::write(dir.join(format!("{command}.json")), serde_json::to_string_pretty(&meta).unwrap())?;
    Ok(())
}

fn param_json(p: &ParamSet) -> serde_json::Value {
    serde_json::json!({
        "r": p.r.to_f64(), "r_decimal": p.r.to_decimal_string(),
        "w_minus": p.w_minus.to_f64(), "w_minus_decimal": p.w_minus.to_decimal_string(),
        "w_plus": p.w_plus.to_f64(),
        "a": p.a.to_f64(), "a_decimal": p.a.to_decimal_string(),
        "alpha": p.alpha.to_f64(), "alpha_decimal": p.alpha.to_decimal_string(),
        "lambda": p.lambda.to_f64(),
        "A": p.a_root.to_f64(),
        "R": p.eigen_ratio.to_f64(), "R_decimal": p.eigen_ratio.to_decimal_string(),
        "delta": p.delta.to_f64(),
        "d": 3, "ell": 3,
    })
}

fn run(cli: &Cli, prec: u32, threads: usize) -> Result<ExitCode, Error> {
    match &cli.cmd {
        Cmd::Params { big_r, r, alpha } => {
            let p = match (big_r, r, alpha) {
                (Some(v), _, _) => ParamSet::from_eigen_ratio(prec, *v)?,
                (_, Some(v), _) => ParamSet::from_r(prec, *v)?,
                (_, _, Some(v)) => ParamSet::from_alpha(prec, *v)?,
                _ => {
                    eprintln!("error: one of --R, --r, --alpha is required");
                    return Ok(ExitCode::from(1));
                }
            };
            println!("r       = {}", p.r.to_f64());
            println!("w_minus = {}", p.w_minus.to_f64());
            println!("w_plus  = {}", p.w_plus.to_f64());
            println!("a       = {}", p.a.to_f64());
            println!("alpha   = {}", p.alpha.to_f64());
            println!("lambda  = {}", p.lambda.to_f64());
            println!("A       = {}", p.a_root.to_f64());
            println!("R       = {}", p.eigen_ratio.to_f64());
            println!("delta   = {}", p.delta.to_f64());
            write_meta(&cli.out, prec, threads, "params", param_json(&p))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Series { big_r, k } => {
            let p = ParamSet::from_eigen_ratio(prec, *big_r)?;
            let s = compute_sonic_series(&p, *k, &SeriesOpts::default())?;
            let mut t = reformulate(&p, &s)?;
            comparison_sequences(&p, &mut t, false)?;
            fs::create_dir_all(&cli.out)?;
            let mut csv = String::from("n,a_n,a_n_decimal\n");
            for (n, c) in s.coeffs.iter().enumerate() {
                csv.push_str(&format!("{n},{:e},{}\n", c.to_f64(), c.to_decimal_string()));
            }
            fs::write(cli.out.join("series_coefficients.csv"), csv)?;
            let mut csv = String::from("n,gamma_n,p_n,q_n,M_n,mu_star_n,mu_n,lambda_n,Mhat_n\n");
            let opt = |v: &Option<Mp>| v.as_ref().map_or(String::from(""), |x| format!("{:e}", x.to_f64()));
            for n in 0..t.m.len() {
                csv.push_str(&format!(
                    "{n},{:e},{:e},{:e},{:e},{},{},{},{}\n",
                    t.gamma_t(n as f64).to_f64(),
                    t.p_t(n as f64).to_f64(),
                    t.q_t(n as f64).to_f64(),
                    t.m[n].to_f64(),
                    opt(&t.mu_star[n]),
                    opt(&t.mu[n]),
                    opt(&t.lambda_n[n]),
                    opt(&t.mhat[n]),
                ));
            }
            fs::write(cli.out.join("comparison_tables.csv"), csv)?;
            println!("series at R = {big_r}: K = {k}, tail growth {:.4}, tau0 {:.5}", s.tail_growth(), s.tau0());
            println!("k1 = {:.8}, k2 = {:.8}, s1 = {:.8}, s2 = {:.8}", t.k1.to_f64(), t.k2.to_f64(), t.s1.to_f64(), t.s2.to_f64());
            println!("reformulation residual = {:.3e}", t.reformulation_residual);
            write_meta(&cli.out, prec, threads, "series", serde_json::json!({
                "params": param_json(&p),
                "K": k,
                "k1": t.k1.to_f64(), "k2": t.k2.to_f64(),
                "s1": t.s1.to_f64(), "s2": t.s2.to_f64(),
                "reformulation_residual": t.reformulation_residual,
                "tau0": s.tau0(),
                "worst_cancellation_bits": s.worst_cancellation_bits,
                "m_all_positive": t.m_all_positive,
                "mu_star_monotone": t.mu_star_monotone,
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Sinfty { k, k_rat, checkpoint, stride } => {
            let tables = limiting::limiting_tables_checkpointed(
                *k,
                *k_rat,
                checkpoint.as_deref(),
                *stride,
            )?;
            let rep = limiting::s_infinity(&tables)?;
            fs::create_dir_all(&cli.out)?;
            let mut csv = String::from("n,ratio\n");
            for (n, r) in &rep.trace {
                csv.push_str(&format!("{n},{r:e}\n"));
            }
            fs::write(cli.out.join("sinfty_trace.csv"), csv)?;
            println!("S_infty estimate  = {:.8}", rep.value);
            println!("error bar         = {:.2e}", rep.error_estimate);
            println!("last ratio (n=K)  = {:.8}", rep.last_ratio);
            println!("envelope constant = {:.4} (excess {:.4})", rep.envelope_c, rep.envelope_excess);
            println!(
                "claim: estimate - error = {:.6} > 1/2  ->  {}",
                rep.value - rep.error_estimate,
                if rep.claim_holds { "PASS" } else { "FAIL" }
            );
            write_meta(&cli.out, prec, threads, "sinfty", serde_json::json!({
                "K": rep.k,
                "value": rep.value,
                "error_estimate": rep.error_estimate,
                "envelope_c": rep.envelope_c,
                "envelope_excess": rep.envelope_excess,
                "last_ratio": rep.last_ratio,
                "claim_holds": rep.claim_holds,
            }))?;
            Ok(if rep.claim_holds { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Shoot { n, tol } => {
            let cfg = ShootConfig { prec: prec.max(320), ..Default::default() };
            let res = find_r_n(*n, *tol, &cfg)?;
            fs::create_dir_all(&cli.out)?;
            let mut csv = String::from("R,gap\n");
            for (r, g) in &res.gap_history {
                csv.push_str(&format!("{r:.17e},{g:e}\n"));
            }
            fs::write(cli.out.join("gap_history.csv"), csv)?;
            println!("N = {n}: {:?}", res.status);
            println!("bracket = [{:.15}, {:.15}] (width {:.3e})", res.lo, res.hi, res.width);
            println!("gaps at ends = ({:+.3e}, {:+.3e}), noise floor {:.3e}", res.gap_lo, res.gap_hi, res.noise_floor);
            println!("tau* = {:.6}, evaluations = {}, precision = {} bits", res.tau_star.to_f64(), res.evaluations, res.prec_used);
            write_meta(&cli.out, prec, threads, "shoot", serde_json::json!({
                "N": n,
                "status": format!("{:?}", res.status),
                "lo": res.lo, "hi": res.hi, "width": res.width,
                "lo_decimal": res.lo_mp.to_decimal_string(),
                "hi_decimal": res.hi_mp.to_decimal_string(),
                "gap_lo": res.gap_lo, "gap_hi": res.gap_hi,
                "noise_floor": res.noise_floor,
                "tau_star": res.tau_star.to_f64(),
                "evaluations": res.evaluations,
                "precision_used": res.prec_used,
            }))?;
            Ok(match res.status {
                ShootStatus::Converged | ShootStatus::NoBracket => ExitCode::SUCCESS,
                ShootStatus::PrecisionLimit => ExitCode::from(2),
            })
        }
        Cmd::Profile { n, tol, grid } => {
            let cfg = ShootConfig { prec: prec.max(320), ..Default::default() };
            let res = find_r_n(*n, *tol, &cfg)?;
            if res.status != ShootStatus::Converged {
                eprintln!("shoot did not converge: {:?} (see `guderley shoot`)", res.status);
                return Ok(ExitCode::from(2));
            }
            let pcfg = ProfileConfig { prec, grid_per_side: *grid, ..Default::default() };
            let gp = build_profile(&res, &pcfg)?;
            let rep = verify_repulsivity(&gp)?;
            fs::create_dir_all(&cli.out)?;
            let mut csv = String::from(
                "x,sigma,w,sigma_prime,w_prime,Z,U_E,S_E,margin_ii,margin_iii\n",
            );
            for s in &gp.samples {
                csv.push_str(&format!(
                    "{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
                    s.x, s.sigma, s.w, s.sigma_prime, s.w_prime, s.z, s.u_e, s.s_e,
                    s.margin_ii, s.margin_iii
                ));
            }
            fs::write(cli.out.join("profile.csv"), csv)?;
            println!("R_{n} = {:.15} (bracket width {:.2e})", (res.lo + res.hi) / 2.0, res.width);
            println!("samples = {}, x in [{:.3}, {:.3}]", gp.samples.len(), gp.samples.first().unwrap().x, gp.samples.last().unwrap().x);
            println!("x_A = {:.8}, x_B = {:.8}", gp.x_a, gp.x_b);
            println!("eta_min = {:.6}", rep.eta_min);
            write_meta(&cli.out, prec, threads, "profile", serde_json::json!({
                "N": n,
                "R": gp.eigen_ratio, "r": gp.r,
                "x_a": gp.x_a, "x_b": gp.x_b,
                "eta_min": rep.eta_min,
                "barrier_margin_min": gp.barrier_margin_min,
                "stitch_residual": gp.stitch_residual,
                "decay_right": rep.right_decay_slope,
                "decay_left": rep.left_decay_slope,
                "radial_residual_max": rep.radial_residual_max,
                "samples": gp.samples.len(),
            }))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Verify { n, tol, samples } => {
            let mut failures = 0usize;
            let mut check = |name: &str, ok: bool, detail: String| {
                println!("{}  {name}  {detail}", if ok { "PASS" } else { "FAIL" });
                if !ok {
                    failures += 1;
                }
            };
            let cfg = ShootConfig { prec: prec.max(320), ..Default::default() };
            let res = find_r_n(*n, *tol, &cfg)?;
            if res.status != ShootStatus::Converged {
                println!("NO_BRACKET  N = {n}: gaps ({:+.3e}, {:+.3e})", res.gap_lo, res.gap_hi);
                println!("(existence is only guaranteed above an unquantified floor; this report is the honest outcome)");
                return Ok(ExitCode::from(2));
            }
            check(
                "shoot.bracket",
                res.width <= *tol,
                format!("width {:.2e} <= {tol:.2e}", res.width),
            );
            let p = ParamSet::from_eigen_ratio_mp(res.r_mid().with_prec(prec.max(320)))?;
            let series = compute_sonic_series(&p, *n as usize + 40, &SeriesOpts::default())?;
            let bar = verify_barriers(&p, &series, *n, *samples)?;
            check("barrier.L_u_N", bar.l_u_n.certified(), format!("min margin {:.3e}", bar.l_u_n.min_abs_margin));
            check(
                "barrier.tau_N",
                bar.tau_n_in_range && bar.tau_n < 0.0,
                format!("tau_N = {:.6} in (-9/(5 sqrt R), 0)", bar.tau_n),
            );
            check("barrier.u_N_positive", bar.u_n_positive.certified(), String::new());
            check("barrier.u_N_below_u_g", bar.u_n_below_ug.certified(), String::new());
            check("barrier.L_U_O", bar.l_u_o.certified(), String::new());
            check(
                "barrier.quadratic_truncation",
                bar.v_coeff < 0.0 && bar.w_coeff < 0.0,
                format!("V = {:.4e}, W = {:.4e}", bar.v_coeff, bar.w_coeff),
            );
            // standing certificates, parallel across threads when asked
            let certs = run_certs(&p, *samples, threads);
            for c in &certs {
                check(&format!("certificate.{}", c.name), c.certified(), format!("min |margin| {:.3e}", c.min_abs_margin));
            }
            let pcfg = ProfileConfig { prec, ..Default::default() };
            let gp = build_profile(&res, &pcfg)?;
            match verify_repulsivity(&gp) {
                Ok(rep) => {
                    check("repulsivity.eta", rep.eta_min > 0.0, format!("eta_min = {:.6}", rep.eta_min));
                    check("repulsivity.signs", rep.sign_pattern_ok, String::new());
                    check(
                        "repulsivity.delta1_zeros",
                        rep.delta1_zero_count == 2,
                        format!("{} crossings", rep.delta1_zero_count),
                    );
                    check(
                        "repulsivity.limits",
                        rep.right_limit_error < 1e-3 && rep.left_limit_error < 1e-3,
                        format!("right {:.1e}, left {:.1e}", rep.right_limit_error, rep.left_limit_error),
                    );
                    check(
                        "repulsivity.decay",
                        (rep.right_decay_slope + gp.r).abs() < 0.01 * gp.r
                            && (rep.left_decay_slope + 1.0).abs() < 0.01,
                        format!("slopes {:.5}, {:.5}", rep.right_decay_slope, rep.left_decay_slope),
                    );
                    check(
                        "profile.barrier_margin",
                        gp.barrier_margin_min > 0.0,
                        format!("min w - a(1+a)sigma^2 = {:.3e}", gp.barrier_margin_min),
                    );
                    check(
                        "profile.radial_residual",
                        rep.radial_residual_max < 1e-8,
                        format!("max {:.2e}", rep.radial_residual_max),
                    );
                }
                Err(e) => check("repulsivity", false, format!("{e}")),
            }
            write_meta(&cli.out, prec, threads, "verify", serde_json::json!({
                "N": n, "failures": failures,
            }))?;
            Ok(if failures == 0 { ExitCode::SUCCESS } else { ExitCode::from(2) })
        }
        Cmd::Export { big_r, points } => {
            let p = ParamSet::from_eigen_ratio(prec, *big_r)?;
            let sp = special_points(&p);
            fs::create_dir_all(&cli.out)?;
            // special points with labels
            let mut csv = String::from("label,sigma_or_tau,w_or_u,frame\n");
            for (label, pt) in [
                ("P1", &sp.p1),
                ("P2", &sp.p2),
                ("P3", &sp.p3),
                ("P4", &sp.p4),
                ("P5", &sp.p5),
                ("P5'", &sp.p5_prime),
            ] {
                csv.push_str(&format!("{label},{:e},{:e},sigma-w\n", pt.0.to_f64(), pt.1.to_f64()));
            }
            csv.push_str(&format!("P6,inf,{:e},sigma-w\n", sp.p6_w.to_f64()));
            for (label, pt) in [("Q2", &sp.q2), ("Q4", &sp.q4), ("Q5", &sp.q5)] {
                csv.push_str(&format!("{label},{:e},{:e},tau-u\n", pt.0.to_f64(), pt.1.to_f64()));
            }
            csv.push_str(&format!("Q6,{:e},inf,tau-u\n", sp.tau_q6.to_f64()));
            fs::write(cli.out.join("special_points.csv"), csv)?;

            // sigma-w zero curves
            let mut csv = String::from("sigma,w1,w2,w3,w2_minus,w2_plus,sonic_lo,sonic_hi\n");
            for i in 1..=*points {
                let s = 2.5 * i as f64 / *points as f64;
                let sigma = Mp::new(prec, s);
                let (w1, w2, w3) = fields::root_curves_w(&p, &sigma)?;
                let branches = fields::delta2_curves(&p, &sigma);
                let (bm, bp) = branches
                    .map(|(a, b)| (format!("{:e}", a.to_f64()), format!("{:e}", b.to_f64())))
                    .unwrap_or_default();
                csv.push_str(&format!(
                    "{s:e},{:e},{:e},{:e},{bm},{bp},{:e},{:e}\n",
                    w1.to_f64(),
                    w2.to_f64(),
                    w3.to_f64(),
                    1.0 - s,
                    1.0 + s
                ));
            }
            fs::write(cli.out.join("portrait_sigma_w.csv"), csv)?;

            // tau-u curves
            let al = p.alpha.to_f64();
            let mut csv = String::from("tau,u_g,u_b,U_O,U_sigma1,U_sigma2\n");
            let q5 = sp.q5.0.to_f64();
            for i in 0..=*points {
                let t = q5 + (0.98 * al - q5) * i as f64 / *points as f64;
                let tau = Mp::new(prec, t);
                let val = |c: Curve| {
                    c.value(&p, &tau)
                        .map(|v| format!("{:e}", v.to_f64()))
                        .unwrap_or_default()
                };
                csv.push_str(&format!(
                    "{t:e},{},{},{},{},{}\n",
                    val(Curve::Ug),
                    val(Curve::Ub),
                    val(Curve::UO),
                    val(Curve::USigma1),
                    val(Curve::USigma2)
                ));
            }
            fs::write(cli.out.join("portrait_tau_u.csv"), csv)?;
            println!("portrait data written to {}", cli.out.display());
            write_meta(&cli.out, prec, threads, "export", param_json(&p))?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Standing sign certificates, optionally spread across worker threads.
fn run_certs(p: &ParamSet, samples: usize, threads: usize) -> Vec<fields::SignCertificate> {
    if threads <= 1 {
        return fields::standing_certificates(p, samples);
    }
    // each certificate is independent; give each its own thread slot
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..threads.min(3))
            .map(|i| {
                let p = p.clone();
                scope.spawn(move || {
                    fields::standing_certificates(&p, samples)
                        .into_iter()
                        .enumerate()
                        .filter(move |(j, _)| j % threads.min(3) == i)
                        .map(|(_, c)| c)
                        .collect::<Vec<_>>()
                })
            })
            .collect();
        let mut out: Vec<_> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    })
}
