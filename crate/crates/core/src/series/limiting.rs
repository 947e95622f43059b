//! The parameter-free limiting sequences reached as R → ∞ and the limit
//! 𝒮∞ of the weighted coefficient ratio.
//!
//! The limiting recurrence is
//!   8a_n = (5−n)a_{n−1} − (n − 16/3)a_{n−2}
//!          − (3/2)(n+1)·Σ_{j=2}^{n−1} a_j a_{n+1−j}
//!          + ((3/2)n − 2)·Σ_{j=1}^{n−1} a_j a_{n−j},
//! with a₀ = 1, a₁ = 2; companion closed forms μ_n = √(8n + 4/3),
//! λ_n = (n − 1/3)/μ_n, and M̂₁ = 2, M̂_n = (μ_{n−1}/8)M̂_{n−1}.
//!
//! Terms grow like √Γ(c+n); with coefficients held as mantissa/exponent
//! pairs the convolutions are evaluated exactly to f64 precision while
//! skipping sub-roundoff middle products, which keeps the K = 10⁵ run in
//! fractions of a second. First terms are duplicated in exact rational
//! arithmetic as the oracle route.

use std::io::{BufRead, BufWriter, Write};
use std::path::Path;

use rug::Rational;

use crate::error::{Error, Result};
use crate::num::WideF64;

/// Terms this far (in bits) under the running maximum cannot move the sum.
const WINDOW_BITS: i64 = 130;
/// Consecutive sub-window terms tolerated before the convolution fold stops.
const WINDOW_MISSES: usize = 16;

/// Symmetric folded convolution Σ_{j=lo}^{s−lo} a_j·a_{s−j}.
///
/// The fold walks j upward from `lo`; the product magnitudes are governed by
/// a log-convex profile, so once terms fall `WINDOW_BITS` below the largest
/// one seen they stay irrelevant (a run of `WINDOW_MISSES` ends the scan).
fn conv_sym(a: &[WideF64], s: usize, lo: usize) -> WideF64 {
    let mut acc = WideF64::ZERO;
    let mut max_e = i64::MIN;
    let mut misses = 0usize;
    let mut j = lo;
    while 2 * j <= s {
        let k = s - j;
        let t = a[j].mul(a[k]);
        let term = if j == k { t } else { t.add(t) };
        if !term.is_zero() {
            let e = term.exp2();
            if e >= max_e {
                max_e = e;
                misses = 0;
            } else if e < max_e - WINDOW_BITS {
                misses += 1;
                if misses > WINDOW_MISSES {
                    break;
                }
            } else {
                misses = 0;
            }
            acc = acc.add(term);
        }
        j += 1;
    }
    acc
}

/// One step of the limiting recurrence given a₀..a_{n−1}.
fn next_coeff(a: &[WideF64], n: usize) -> WideF64 {
    let nf = n as f64;
    let s1 = conv_sym(a, n + 1, 2);
    let s0 = conv_sym(a, n, 1);
    let mut rhs = a[n - 1].mul_f64(5.0 - nf);
    rhs = rhs.sub(a[n - 2].mul_f64((3.0 * nf - 16.0) / 3.0));
    rhs = rhs.sub(s1.mul_f64(1.5 * (nf + 1.0)));
    rhs = rhs.add(s0.mul_f64(1.5 * nf - 2.0));
    rhs.mul_f64(0.125)
}

/// μ_n^∞ = √(8n + 4/3).
pub fn mu_inf(n: usize) -> f64 {
    (8.0 * n as f64 + 4.0 / 3.0).sqrt()
}

/// λ_n^∞ = (n − 1/3)/√(8n + 4/3).
pub fn lambda_inf(n: usize) -> f64 {
    (n as f64 - 1.0 / 3.0) / mu_inf(n)
}

/// Limiting coefficient tables up to order `k`.
#[derive(Debug, Clone)]
pub struct LimitTables {
    /// a_n^∞ as exact rationals for n ≤ k_rat.
    pub rational: Vec<Rational>,
    /// a_n^∞ for all n ≤ k in the wide-exponent engine.
    pub coeffs: Vec<WideF64>,
    /// M̂_n^∞ (index 0 unused).
    pub mhat: Vec<WideF64>,
    /// Ratio (a_n^∞ + λ_n^∞·a_{n−1}^∞)/M̂_n^∞ for n ≥ 1 (index 0 unused).
    pub ratios: Vec<f64>,
}

/// Compute the limiting tables; first `k_rat` coefficients also in exact
/// rational arithmetic.
pub fn limiting_tables(k: usize, k_rat: usize) -> LimitTables {
    let coeffs = run_engine(k, &[]);
    let rational = rational_limit_coeffs(k_rat.min(k));
    finish_tables(coeffs, rational)
}

fn finish_tables(coeffs: Vec<WideF64>, rational: Vec<Rational>) -> LimitTables {
    let k = coeffs.len() - 1;
    let mut mhat = vec![WideF64::ZERO; k + 1];
    if k >= 1 {
        mhat[1] = WideF64::from_f64(2.0);
        for n in 2..=k {
            mhat[n] = mhat[n - 1].mul_f64(mu_inf(n - 1) / 8.0);
        }
    }
    let mut ratios = vec![0.0f64; k + 1];
    for n in 1..=k {
        let ahat = coeffs[n].add(coeffs[n - 1].mul_f64(lambda_inf(n)));
        ratios[n] = ahat.div(mhat[n]).to_f64();
    }
    LimitTables { rational, coeffs, mhat, ratios }
}

fn run_engine(k: usize, seed: &[WideF64]) -> Vec<WideF64> {
    let mut a: Vec<WideF64> = Vec::with_capacity(k + 1);
    if seed.is_empty() {
        a.push(WideF64::from_f64(1.0));
        if k >= 1 {
            a.push(WideF64::from_f64(2.0));
        }
    } else {
        a.extend_from_slice(seed);
    }
    for n in a.len()..=k {
        let v = next_coeff(&a, n);
        a.push(v);
    }
    a
}

/// Exact-rational route for the first coefficients of the limiting sequence.
pub fn rational_limit_coeffs(k: usize) -> Vec<Rational> {
    let mut a: Vec<Rational> = Vec::with_capacity(k + 1);
    a.push(Rational::from(1u32));
    if k >= 1 {
        a.push(Rational::from(2u32));
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
        let mut rhs = (Rational::from(5u32) - &nf) * &a[n - 1];
        rhs -= (Rational::from(&nf - &Rational::from((16u32, 3u32)))) * &a[n - 2];
        rhs -= Rational::from((3u32, 2u32)) * (Rational::from(&nf + &Rational::from(1u32))) * &s1;
        rhs += (Rational::from((3u32, 2u32)) * &nf - Rational::from(2u32)) * &s0;
        a.push(rhs / Rational::from(8u32));
    }
    a
}

/// Outcome of the 𝒮∞ extrapolation.
#[derive(Debug, Clone)]
pub struct SInftyReport {
    pub k: usize,
    /// Extrapolated limit of the ratio sequence.
    pub value: f64,
    /// Honest bound: fitted Cauchy tail 2C/√K plus the distance between the
    /// extrapolant and the last ratio, plus the last per-step variation.
    pub error_estimate: f64,
    /// Fitted envelope constant for |r_n − r_{n−1}| ≤ C·n^{−3/2}.
    pub envelope_c: f64,
    /// Largest ratio |r_n − r_{n−1}|·n^{3/2}/C on the verification range.
    pub envelope_excess: f64,
    pub last_ratio: f64,
    /// value − error_estimate > 1/2, the positivity claim.
    pub claim_holds: bool,
    /// Decimated (n, ratio) trace for reporting.
    pub trace: Vec<(usize, f64)>,
}

/// Extrapolate 𝒮∞ from the ratio sequence of `tables`.
///
/// The envelope constant is fitted on n ∈ [100, K/8] and then *verified* on
/// (K/8, K]; the tail bound 2C/√K controls |𝒮∞ − r_K| through the Cauchy
/// property, and a two-parameter fit r_n ≈ S + c·n^{−1/2} on the final half
/// refines the central value.
pub fn s_infinity(tables: &LimitTables) -> Result<SInftyReport> {
    let k = tables.ratios.len() - 1;
    if k < 1000 {
        return Err(Error::OutOfRange("s_infinity needs K >= 1000".into()));
    }
    let r = &tables.ratios;
    let fit_hi = (k / 8).max(200);
    let mut c_fit = 0.0f64;
    for n in 100..=fit_hi {
        c_fit = c_fit.max((r[n] - r[n - 1]).abs() * (n as f64).powf(1.5));
    }
    let mut excess = 0.0f64;
    for n in fit_hi + 1..=k {
        let bound = c_fit * (n as f64).powf(-1.5);
        let d = (r[n] - r[n - 1]).abs();
        excess = excess.max(d / bound);
        if d > bound * (1.0 + 1e-9) {
            return Err(Error::NotConverged(format!(
                "ratio difference {d:e} at n = {n} breaks the fitted envelope {bound:e}"
            )));
        }
    }
    // least squares r_n = S + c x, x = n^{-1/2}, over the final half
    let lo = k / 2;
    let (mut sx, mut sy, mut sxx, mut sxy, mut m) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for n in lo..=k {
        let x = (n as f64).powf(-0.5);
        let y = r[n];
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        m += 1.0;
    }
    let det = m * sxx - sx * sx;
    let c_lin = (m * sxy - sx * sy) / det;
    let s_fit = (sy * sxx - sx * sxy) / det;

    let tail = 2.0 * c_fit / (k as f64).sqrt();
    let err = tail + (s_fit - r[k]).abs() + (r[k] - r[k - 1]).abs();
    let _ = c_lin;

    let mut trace = Vec::new();
    let mut n = 1usize;
    while n <= k {
        trace.push((n, r[n]));
        n = (n * 5 / 4).max(n + 1);
    }
    if trace.last().map(|t| t.0) != Some(k) {
        trace.push((k, r[k]));
    }

    Ok(SInftyReport {
        k,
        value: s_fit,
        error_estimate: err,
        envelope_c: c_fit,
        envelope_excess: excess,
        last_ratio: r[k],
        claim_holds: s_fit - err > 0.5,
        trace,
    })
}

/// Resumable engine state: the full coefficient prefix is required because
/// the convolutions reach all the way back.
pub fn write_checkpoint(path: &Path, k_target: usize, coeffs: &[WideF64]) -> Result<()> {
    let f = std::fs::File::create(path)?;
    let mut w = BufWriter::new(f);
    writeln!(w, "sinfty-checkpoint v1")?;
    writeln!(w, "k_target {k_target}")?;
    writeln!(w, "n_done {}", coeffs.len() - 1)?;
    for c in coeffs {
        writeln!(w, "{}", c.encode())?;
    }
    Ok(())
}

pub fn read_checkpoint(path: &Path) -> Result<(usize, Vec<WideF64>)> {
    let f = std::fs::File::open(path)?;
    let mut lines = std::io::BufReader::new(f).lines();
    let hdr = lines.next().transpose()?.unwrap_or_default();
    if hdr != "sinfty-checkpoint v1" {
        return Err(Error::Checkpoint(format!("unrecognized header {hdr:?}")));
    }
    let k_line = lines.next().transpose()?.unwrap_or_default();
    let k_target: usize = k_line
        .strip_prefix("k_target ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Checkpoint("bad k_target line".into()))?;
    let n_line = lines.next().transpose()?.unwrap_or_default();
    let n_done: usize = n_line
        .strip_prefix("n_done ")
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::Checkpoint("bad n_done line".into()))?;
    let mut coeffs = Vec::with_capacity(n_done + 1);
    for line in lines {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        coeffs.push(
            WideF64::decode(&line)
                .ok_or_else(|| Error::Checkpoint(format!("bad coefficient line {line:?}")))?,
        );
    }
    if coeffs.len() != n_done + 1 {
        return Err(Error::Checkpoint(format!(
            "expected {} coefficients, found {}",
            n_done + 1,
            coeffs.len()
        )));
    }
    Ok((k_target, coeffs))
}

/// Run to order `k`, optionally resuming from / writing to a checkpoint.
pub fn limiting_tables_checkpointed(
    k: usize,
    k_rat: usize,
    checkpoint: Option<&Path>,
    stride: usize,
) -> Result<LimitTables> {
    let mut seed: Vec<WideF64> = Vec::new();
    if let Some(path) = checkpoint {
        if path.exists() {
            let (k_stored, coeffs) = read_checkpoint(path)?;
            if k_stored != k {
                return Err(Error::Checkpoint(format!(
                    "checkpoint targets K = {k_stored}, run asked for K = {k}"
                )));
            }
            seed = coeffs;
        }
    }
    let mut a = if seed.is_empty() {
        let mut v = Vec::with_capacity(k + 1);
        v.push(WideF64::from_f64(1.0));
        v.push(WideF64::from_f64(2.0));
        v
    } else {
        seed
    };
    while a.len() <= k {
        let n = a.len();
        let v = next_coeff(&a, n);
        a.push(v);
        if let Some(path) = checkpoint {
            if stride > 0 && n % stride == 0 {
                write_checkpoint(path, k, &a)?;
            }
        }
    }
    if let Some(path) = checkpoint {
        write_checkpoint(path, k, &a)?;
    }
    Ok(finish_tables(a, rational_limit_coeffs(k_rat.min(k))))
}

#[cfg(test)]
mod tests {
    use super::*;

    /// The tabulated limiting coefficients a₀..a₁₀ as exact rationals.
    pub const LIMIT_TABLE: [(i64, i64); 11] = [
        (1, 1),
        (2, 1),
        (5, 3),
        (1, 1),
        (2, 3),
        (13, 24),
        (17, 36),
        (11, 24),
        (97, 216),
        (6683, 13824),
        (10547, 20736),
    ];

    #[test]
    fn rational_table_matches() {
        let a = rational_limit_coeffs(10);
        for (n, (num, den)) in LIMIT_TABLE.iter().enumerate() {
            assert_eq!(a[n], Rational::from((*num, *den)), "a_{n}");
        }
    }

    #[test]
    fn engine_matches_rationals_deep() {
        let k = 64;
        let t = limiting_tables(k, k);
        for n in 0..=k {
            let exact = t.rational[n].to_f64();
            let got = t.coeffs[n].to_f64();
            let rel = (got - exact).abs() / exact.abs().max(1e-300);
            assert!(rel < 1e-12, "n = {n}: engine {got:e} vs exact {exact:e}");
        }
    }

    #[test]
    fn lambda_closed_form() {
        // λ₁ = (2/3)/√(28/3)
        let expect = (2.0 / 3.0) / (28.0f64 / 3.0).sqrt();
        assert!((lambda_inf(1) - expect).abs() < 1e-15);
        // M̂₂ = √(28/3)/4 and the n = 2 ratio from the exact table
        let t = limiting_tables(4, 4);
        let mhat2 = (28.0f64 / 3.0).sqrt() / 4.0;
        assert!((t.mhat[2].to_f64() - mhat2).abs() < 1e-14);
        let ahat2 = 5.0 / 3.0 + lambda_inf(2) * 2.0;
        assert!((t.ratios[2] - ahat2 / mhat2).abs() < 1e-13);
    }

    #[test]
    fn ratio_trend_and_s_infinity_smoke() {
        let t = limiting_tables(2000, 10);
        // reference values computed independently at 60-bit precision
        assert!((t.ratios[100] - 1.12183927576).abs() < 1e-9);
        assert!((t.ratios[2000] - 0.692242195983).abs() < 1e-9);
        let rep = s_infinity(&t).unwrap();
        assert!(rep.envelope_c > 0.0 && rep.envelope_c < 20.0);
        assert!(rep.value > 0.5 && rep.value < 0.7, "extrapolated {}", rep.value);
    }

    #[test]
    fn checkpoint_resume_bit_exact() {
        let dir = std::env::temp_dir().join("guderley-ckpt-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sinfty.ckpt");
        let _ = std::fs::remove_file(&path);
        // run 1: stop early by writing a checkpoint at stride, then resume
        let full = limiting_tables_checkpointed(500, 8, None, 0).unwrap();
        // simulate interruption: write a checkpoint holding only 300 terms
        write_checkpoint(&path, 500, &full.coeffs[..=300]).unwrap();
        let resumed = limiting_tables_checkpointed(500, 8, Some(&path), 0).unwrap();
        for n in 0..=500 {
            assert_eq!(full.coeffs[n], resumed.coeffs[n], "coefficient {n}");
        }
        assert_eq!(full.ratios, resumed.ratios);
        let _ = std::fs::remove_file(&path);
    }

    #[test]
    fn checkpoint_mismatched_target_rejected() {
        let dir = std::env::temp_dir().join("guderley-ckpt-test2");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("sinfty.ckpt");
        let t = limiting_tables(50, 4);
        write_checkpoint(&path, 50, &t.coeffs).unwrap();
        let err = limiting_tables_checkpointed(60, 4, Some(&path), 0);
        assert!(matches!(err, Err(Error::Checkpoint(_))));
        let _ = std::fs::remove_file(&path);
    }
}
