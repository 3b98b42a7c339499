//! Lower bounds for p-frame energies.
//!
//! Most bounds reduce to the auxiliary problem
//!
//! ```text
//! M(c, p, N) = min { Σ f(t_i) : Σ t_i = 1, 0 <= t_i < c },   f(t) = (t / (c − t))^{p/2}
//! ```
//!
//! which [`mstar`] solves by enumerating the two candidate families of
//! minimizers (equal split over k coordinates, or k equal coordinates plus a
//! small remainder). [`mstar_oracle`] solves the same problem by multi-start
//! projected gradient and is kept independent of the family enumeration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::configs::GramMatrix;
use crate::error::{Error, Result};
use crate::gale::{verify_gale, GaleDual};

/// Grid size for the one-dimensional search inside the remainder family.
const FAMILY_GRID: usize = 10_000;
/// Candidates closer than this (relative) count as ties.
const TIE_TOL: f64 = 1e-12;
/// Kernel residual above which a dual is considered unrelated to the matrix.
const DUAL_MISMATCH_TOL: f64 = 1e-6;

const ORACLE_MAX_N: usize = 8;
const ORACLE_STARTS: usize = 200;
const ORACLE_SEED: u64 = 0x6d73_7461_725f_6f72;
const ORACLE_MAX_ITERS: usize = 20_000;

/// f_{c,p}(t) = (t/(c−t))^{p/2}; infinite at and beyond t = c.
pub fn f_cp(c: f64, p: f64, t: f64) -> f64 {
    if t >= c {
        f64::INFINITY
    } else if t <= 0.0 {
        0.0
    } else {
        (t / (c - t)).powf(0.5 * p)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MStarFamily {
    /// t_1 = … = t_k = 1/k, rest 0.
    EqualSplit { k: usize },
    /// t_1 = … = t_k = x, t_{k+1} = 1 − kx, rest 0.
    SplitWithRemainder { k: usize, x: f64 },
    /// Numerical minimizer from the oracle, used when it beats both families
    /// outside the range where the family enumeration is proven exact.
    Numerical,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MStarSolution {
    pub value: f64,
    pub weights: Vec<f64>,
    pub family: MStarFamily,
    pub c: f64,
    pub p: f64,
    pub n: usize,
    /// False when p lies outside [1, 2]; the value is then only an upper
    /// estimate from the families (cross-checked by the oracle when N <= 8).
    pub exact: bool,
}

fn sum_f(c: f64, p: f64, t: &[f64]) -> f64 {
    t.iter().map(|&v| f_cp(c, p, v)).sum()
}

/// k·f(x) + f(1 − kx).
fn remainder_family_value(c: f64, p: f64, k: usize, x: f64) -> f64 {
    k as f64 * f_cp(c, p, x) + f_cp(c, p, (1.0 - k as f64 * x).max(0.0))
}

/// Minimizes the remainder family for fixed k over its feasible x-interval.
fn best_remainder(c: f64, p: f64, k: usize) -> Option<(f64, f64)> {
    let kf = k as f64;
    let alpha = c * (2.0 - p) / 4.0;
    let lo = alpha.max((1.0 - alpha) / kf).max((1.0 - c) / kf).max(0.0);
    let hi = (1.0 / kf).min(c);
    if !(lo < hi) {
        return None;
    }
    let g = |x: f64| remainder_family_value(c, p, k, x);
    let step = (hi - lo) / (FAMILY_GRID - 1) as f64;
    let (mut best_i, mut best_v) = (0usize, f64::INFINITY);
    for i in 0..FAMILY_GRID {
        let v = g(lo + step * i as f64);
        if v < best_v {
            best_i = i;
            best_v = v;
        }
    }
    if !best_v.is_finite() {
        return None;
    }
    // golden-section refinement on the neighbouring cells
    let mut a = lo + step * best_i.saturating_sub(1) as f64;
    let mut b = (lo + step * (best_i + 1) as f64).min(hi);
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let (mut f1, mut f2) = (g(x1), g(x2));
    while b - a > 1e-12 {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = g(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = g(x2);
        }
    }
    let mut best = (lo + step * best_i as f64, best_v);
    for x in [a, b, x1, x2] {
        let v = g(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    Some(best)
}

/// Solves M(c, p, N) by enumerating both candidate families.
///
/// For p in [1, 2] the minimum is attained in one of the families. For p > 2
/// the objective is convex and only equal splits are searched. For p < 1 the
/// families are still enumerated and, when N <= 8, the oracle is consulted
/// and the smaller value reported.
pub fn mstar(c: f64, p: f64, n: usize) -> Result<MStarSolution> {
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::BadExponent {
            p,
            range: "(0, inf)",
        });
    }
    if n == 0 || !(c * n as f64 > 1.0) {
        return Err(Error::InfeasibleC { c, n });
    }
    let mut best: Option<(f64, MStarFamily)> = None;
    let mut offer = |value: f64, family: MStarFamily| {
        if !value.is_finite() {
            return;
        }
        match best {
            Some((b, _)) if value >= b - TIE_TOL * b.abs().max(1.0) => {}
            _ => best = Some((value, family)),
        }
    };
    for k in 1..=n {
        let kf = k as f64;
        if 1.0 / kf < c {
            offer(kf * f_cp(c, p, 1.0 / kf), MStarFamily::EqualSplit { k });
        }
        if p <= 2.0 && k < n {
            if let Some((x, v)) = best_remainder(c, p, k) {
                offer(v, MStarFamily::SplitWithRemainder { k, x });
            }
        }
    }
    let (mut value, mut family) = best.ok_or(Error::InfeasibleC { c, n })?;
    let mut weights = family_weights(family, n);
    let exact = (1.0..=2.0).contains(&p) || p > 2.0;
    if p < 1.0 && n <= ORACLE_MAX_N {
        let (ov, ow) = oracle_minimize(c, p, n);
        if ov < value - TIE_TOL * value.max(1.0) {
            value = ov;
            weights = ow;
            family = MStarFamily::Numerical;
        }
    }
    Ok(MStarSolution {
        value,
        weights,
        family,
        c,
        p,
        n,
        exact,
    })
}

fn family_weights(family: MStarFamily, n: usize) -> Vec<f64> {
    let mut w = vec![0.0; n];
    match family {
        MStarFamily::EqualSplit { k } => w[..k].iter_mut().for_each(|t| *t = 1.0 / k as f64),
        MStarFamily::SplitWithRemainder { k, x } => {
            w[..k].iter_mut().for_each(|t| *t = x);
            w[k] = 1.0 - k as f64 * x;
        }
        MStarFamily::Numerical => {}
    }
    w
}

/// Independent numerical solution of M(c, p, N) for N <= 8.
pub fn mstar_oracle(c: f64, p: f64, n: usize) -> Result<f64> {
    if n > ORACLE_MAX_N {
        return Err(Error::TooLarge { n });
    }
    if !(p.is_finite() && p > 0.0) {
        return Err(Error::BadExponent {
            p,
            range: "(0, inf)",
        });
    }
    if n == 0 || !(c * n as f64 > 1.0) {
        return Err(Error::InfeasibleC { c, n });
    }
    Ok(oracle_minimize(c, p, n).0)
}

/// Multi-start projected gradient over every support size s (s·c > 1).
fn oracle_minimize(c: f64, p: f64, n: usize) -> (f64, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(ORACLE_SEED);
    let mut best = (f64::INFINITY, vec![0.0; n]);
    for s in 1..=n {
        if !(c * s as f64 > 1.0) {
            continue;
        }
        for _ in 0..ORACLE_STARTS {
            let start = random_capped_point(s, c, &mut rng);
            let (v, t) = projected_descent(start, c, p);
            if v < best.0 {
                let mut w = t;
                w.resize(n, 0.0);
                best = (v, w);
            }
        }
    }
    best
}

/// Random point of {Σt = 1, 0 < t_i < c} in R^s.
fn random_capped_point(s: usize, c: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let raw: Vec<f64> = (0..s).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    let dir: Vec<f64> = raw.iter().map(|r| r / total).collect();
    let uniform = 1.0 / s as f64;
    // pull towards the barycenter until the cap holds with some margin
    let cap = uniform + 0.999 * (c - uniform);
    let max = dir.iter().cloned().fold(0.0, f64::max);
    let lambda = if max <= cap {
        1.0
    } else {
        (cap - uniform) / (max - uniform)
    };
    dir.iter()
        .map(|d| uniform + lambda * (d - uniform))
        .collect()
}

/// Euclidean projection onto {Σ_{active} t = 1, 0 <= t <= cap}, inactive
/// coordinates pinned at zero.
fn project_capped(v: &[f64], active: &[bool], cap: f64) -> Vec<f64> {
    let clamp = |tau: f64| -> Vec<f64> {
        v.iter()
            .zip(active)
            .map(|(&x, &a)| if a { (x - tau).clamp(0.0, cap) } else { 0.0 })
            .collect()
    };
    let sum_at = |tau: f64| clamp(tau).iter().sum::<f64>();
    let (mut lo, mut hi) = (
        v.iter().cloned().fold(f64::INFINITY, f64::min) - cap - 1.0,
        v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if sum_at(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-17 * (1.0 + mid.abs()) {
            break;
        }
    }
    let mut t = clamp(0.5 * (lo + hi));
    // remove the residual bisection error on the free coordinates
    let free: Vec<usize> = (0..t.len())
        .filter(|&i| active[i] && t[i] > 0.0 && t[i] < cap)
        .collect();
    if !free.is_empty() {
        let shift = (1.0 - t.iter().sum::<f64>()) / free.len() as f64;
        for i in free {
            t[i] = (t[i] + shift).clamp(0.0, cap);
        }
    }
    t
}

fn objective_gradient(c: f64, p: f64, t: &[f64], active: &[bool]) -> Vec<f64> {
    t.iter()
        .zip(active)
        .map(|(&x, &a)| {
            if !a || x <= 0.0 {
                0.0
            } else {
                0.5 * p * (x / (c - x)).powf(0.5 * p - 1.0) * c / ((c - x) * (c - x))
            }
        })
        .collect()
}

/// Projected gradient with Armijo backtracking. Coordinates that reach zero
/// are frozen there; smaller supports are searched separately.
fn projected_descent(mut t: Vec<f64>, c: f64, p: f64) -> (f64, Vec<f64>) {
    let s = t.len();
    let cap = c * (1.0 - 1e-12);
    let mut active = vec![true; s];
    let mut value = sum_f(c, p, &t);
    let mut step = 1e-2 * c;
    for _ in 0..ORACLE_MAX_ITERS {
        for (a, &x) in active.iter_mut().zip(&t) {
            if x <= 0.0 {
                *a = false;
            }
        }
        let g = objective_gradient(c, p, &t, &active);
        step = (step * 2.0).min(c);
        let mut accepted = None;
        while step > 1e-20 {
            let trial: Vec<f64> = t.iter().zip(&g).map(|(x, gi)| x - step * gi).collect();
            let cand = project_capped(&trial, &active, cap);
            let decrease: f64 = g
                .iter()
                .zip(t.iter().zip(&cand))
                .map(|(gi, (x, y))| gi * (x - y))
                .sum();
            let v = sum_f(c, p, &cand);
            if v.is_finite() && v <= value - 1e-4 * decrease {
                accepted = Some((cand, v));
                break;
            }
            step *= 0.5;
        }
        let Some((cand, v)) = accepted else { break };
        let moved: f64 = t.iter().zip(&cand).map(|(a, b)| (a - b).abs()).sum();
        t = cand;
        let improvement = value - v;
        value = v;
        if moved < 1e-15 || improvement <= 1e-16 * value.max(1.0) {
            break;
        }
    }
    (value, t)
}

/// Lower bound on E_p for an N×N unit-diagonal matrix of rank d (p >= 1):
/// M(1/(N−d), p, N) for p <= 2 and (N−1)^{1−p/2} M(1/(N−d), p, N) for p > 2.
pub fn lemma2_bound(n: usize, d: usize, p: f64) -> Result<f64> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadExponent {
            p,
            range: "[1, inf)",
        });
    }
    if n <= d {
        return Err(Error::NotApplicable(format!("N = {n} <= d = {d}")));
    }
    let m = mstar(1.0 / (n - d) as f64, p, n)?.value;
    Ok(if p <= 2.0 {
        m
    } else {
        ((n - 1) as f64).powf(1.0 - 0.5 * p) * m
    })
}

/// 2(N−d)/(p^{p/2}(2−p)^{(2−p)/2}) for p in [1, 2); 2(N−d) for p in (0, 1).
pub fn bound_theorem2(n: usize, d: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 2.0) {
        return Err(Error::BadExponent { p, range: "(0, 2)" });
    }
    let excess = n.saturating_sub(d) as f64;
    if p < 1.0 {
        return Ok(2.0 * excess);
    }
    Ok(2.0 * excess / (p.powf(0.5 * p) * (2.0 - p).powf(0.5 * (2.0 - p))))
}

/// N(N−1)((N−d)/(d(N−1)))^{p/2} for p >= 2; zero when N <= d.
pub fn bound_proposition1(n: usize, d: usize, p: f64) -> Result<f64> {
    if !(p >= 2.0 && p.is_finite()) {
        return Err(Error::BadExponent {
            p,
            range: "[2, inf)",
        });
    }
    if n <= d || n < 2 {
        return Ok(0.0);
    }
    let (nf, df) = (n as f64, d as f64);
    Ok(nf * (nf - 1.0) * ((nf - df) / (df * (nf - 1.0))).powf(0.5 * p))
}

/// Welch lower bound √((N−d)/(d(N−1))) on the coherence.
pub fn welch_bound(n: usize, d: usize) -> f64 {
    if n <= d || n < 2 {
        return 0.0;
    }
    let (nf, df) = (n as f64, d as f64);
    ((nf - df) / (df * (nf - 1.0))).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Real,
    Complex,
}

/// Largest possible ETF size: d(d+1)/2 (real) or d² (complex).
pub fn gerzon_bound(d: usize, field: Field) -> usize {
    match field {
        Field::Real => d * (d + 1) / 2,
        Field::Complex => d * d,
    }
}

/// p_m = 2 log((2m+1)/(2m)) / log((m+1)/m).
pub fn p_threshold(m: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidArgument("p_threshold needs m >= 1".into()));
    }
    let mf = m as f64;
    Ok(2.0 * ((2.0 * mf + 1.0) / (2.0 * mf)).ln() / ((mf + 1.0) / mf).ln())
}

/// F_m(x) = x (m/(x−m))^{p/2} for x > m.
pub fn f_m(m: usize, x: f64, p: f64) -> Result<f64> {
    let mf = m as f64;
    if !(x > mf) {
        return Err(Error::Domain(format!(
            "F_m needs x > m, got x = {x}, m = {m}"
        )));
    }
    Ok(x * (mf / (x - mf)).powf(0.5 * p))
}

/// Planar bound for p in (0, 1.3]: N(N−2)/2 (N even), (N−1)²/2 (N odd).
pub fn bound_theorem5(n: usize, p: f64) -> Result<f64> {
    if !(p > 0.0 && p <= 1.3) {
        return Err(Error::BadExponent {
            p,
            range: "(0, 1.3]",
        });
    }
    let nf = n as f64;
    Ok(if n % 2 == 0 {
        nf * (nf - 2.0) / 2.0
    } else {
        (nf - 1.0) * (nf - 1.0) / 2.0
    })
}

/// Per-row certificate from the Gale dual: residual_i = LHS_i − RHS_i with
/// LHS_i = (Σ_{j≠i} |A_ij|^p)^{1/p} and RHS_i = (t_i/(c − t_i))^{1/2}, the
/// latter multiplied by (N−1)^{1/p−1/2} when p > 2.
pub fn per_row_certificate(a: &GramMatrix, g: &GaleDual, p: f64) -> Result<Vec<f64>> {
    if !(p >= 1.0 && p.is_finite()) {
        return Err(Error::BadExponent {
            p,
            range: "[1, inf)",
        });
    }
    let n = a.n();
    let report = verify_gale(a, g, DUAL_MISMATCH_TOL);
    if !(report.kernel_residual <= DUAL_MISMATCH_TOL) {
        return Err(Error::MismatchedDual {
            residual: report.kernel_residual,
        });
    }
    let c = g.frame_constant;
    let factor = if p > 2.0 {
        ((n - 1) as f64).powf(1.0 / p - 0.5)
    } else {
        1.0
    };
    Ok((0..n)
        .map(|i| {
            let lhs = (0..n)
                .filter(|&j| j != i)
                .map(|j| a.get(i, j).abs().powf(p))
                .sum::<f64>()
                .powf(1.0 / p);
            let t = g.weights[i].max(0.0);
            let rhs = if t >= c {
                f64::INFINITY
            } else {
                factor * (t / (c - t)).sqrt()
            };
            lhs - rhs
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NamedBound {
    pub name: &'static str,
    pub value: f64,
}

/// Every closed-form p-frame lower bound that applies to (N, d, p).
pub fn pframe_bounds(n: usize, d: usize, p: f64) -> Vec<NamedBound> {
    let mut out = Vec::new();
    if p > 0.0 && p < 2.0 {
        if let Ok(v) = bound_theorem2(n, d, p) {
            out.push(NamedBound {
                name: "bound_theorem2",
                value: v,
            });
        }
    }
    if p >= 2.0 {
        if let Ok(v) = bound_proposition1(n, d, p) {
            out.push(NamedBound {
                name: "bound_proposition1",
                value: v,
            });
        }
    }
    if p >= 1.0 && n > d {
        if let Ok(v) = lemma2_bound(n, d, p) {
            out.push(NamedBound {
                name: "lemma2_bound",
                value: v,
            });
        }
    }
    if d == 2 && p > 0.0 && p <= 1.3 {
        if let Ok(v) = bound_theorem5(n, p) {
            out.push(NamedBound {
                name: "bound_theorem5",
                value: v,
            });
        }
    }
    out
}

/// Largest applicable closed-form bound (zero when none applies).
pub fn best_pframe_bound(n: usize, d: usize, p: f64) -> f64 {
    pframe_bounds(n, d, p)
        .iter()
        .map(|b| b.value)
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::configs::{gram, random_configuration, simplex, Configuration};
    use crate::energies::{energy, Potential};
    use crate::gale::gale_dual;
    use crate::linalg::DEFAULT_RANK_TOL;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn mstar_at_first_threshold() {
        let p1 = p_threshold(1).unwrap();
        for n in 3..=7 {
            let s = mstar(1.0, p1, n).unwrap();
            assert!(close(s.value, 2.0, 1e-12), "N={n}: {}", s.value);
            assert_eq!(s.family, MStarFamily::EqualSplit { k: 2 });
            assert!(close(s.weights.iter().sum::<f64>(), 1.0, 1e-12));
        }
    }

    #[test]
    fn mstar_examples() {
        let s = mstar(0.5, 1.0, 5).unwrap();
        assert!(close(s.value, 4.0, 1e-12));
        assert_eq!(s.family, MStarFamily::EqualSplit { k: 4 });

        for (c, n) in [(1.0, 3), (0.5, 4), (1.0 / 3.0, 6), (0.25, 7)] {
            let s = mstar(c, 2.0, n).unwrap();
            let want = n as f64 / (n as f64 * c - 1.0);
            assert!(close(s.value, want, 1e-12), "c={c} N={n}");
            assert_eq!(s.family, MStarFamily::EqualSplit { k: n });
        }
        assert_eq!(mstar(0.5, 1.0, 2), Err(Error::InfeasibleC { c: 0.5, n: 2 }));
    }

    #[test]
    fn mstar_solution_invariants() {
        for &(c, p, n) in &[
            (1.0, 1.3, 5),
            (0.5, 1.8, 6),
            (1.0 / 3.0, 1.0, 6),
            (1.0, 0.6, 4),
        ] {
            let s = mstar(c, p, n).unwrap();
            assert!(close(s.weights.iter().sum::<f64>(), 1.0, 1e-12));
            assert!(s.weights.iter().all(|&t| (0.0..c).contains(&t)));
            assert!(close(s.value, sum_f(c, p, &s.weights), 1e-10));
        }
    }

    #[test]
    fn oracle_examples() {
        assert!(close(mstar_oracle(0.5, 2.0, 4).unwrap(), 4.0, 1e-6));
        assert!(close(mstar_oracle(1.0, 1.0, 2).unwrap(), 2.0, 1e-6));
        let o = mstar_oracle(1.0, 1.5, 4).unwrap();
        assert!(close(o, mstar(1.0, 1.5, 4).unwrap().value, 1e-6));
        assert_eq!(mstar_oracle(1.0, 1.0, 9), Err(Error::TooLarge { n: 9 }));
    }

    #[test]
    fn gale_dual_bound_examples() {
        let p1 = p_threshold(1).unwrap();
        for d in 2..6 {
            assert!(close(lemma2_bound(d + 1, d, p1).unwrap(), 2.0, 1e-10));
        }
        let p2 = p_threshold(2).unwrap();
        assert!(close(lemma2_bound(5, 3, p2).unwrap(), 4.0, 1e-10));
        assert!(close(lemma2_bound(6, 3, 2.0).unwrap(), 6.0, 1e-12));
        assert!(close(bound_proposition1(6, 3, 2.0).unwrap(), 6.0, 1e-12));
        assert!(matches!(
            lemma2_bound(3, 3, 1.0),
            Err(Error::NotApplicable(_))
        ));
        assert!(matches!(
            lemma2_bound(5, 3, 0.5),
            Err(Error::BadExponent { .. })
        ));
    }

    /// min over t in (0, c) of f_{c,p}(t)/t by dense grid, c = 1/(N−d).
    fn pframe_constant_oracle(n: usize, d: usize, p: f64) -> f64 {
        let c = 1.0 / (n - d) as f64;
        (1..200_000)
            .map(|i| {
                let t = c * i as f64 / 200_000.0;
                f_cp(c, p, t) / t
            })
            .fold(f64::INFINITY, f64::min)
    }

    #[test]
    fn pframe_constant_examples() {
        assert!(close(bound_theorem2(7, 4, 1.0).unwrap(), 6.0, 1e-12));
        assert_eq!(bound_theorem2(4, 4, 1.5).unwrap(), 0.0);
        let v = bound_theorem2(5, 3, 1.5).unwrap();
        assert!(close(v, 3.509_530_701_206_647, 1e-12), "{v}");
        assert!(close(v, pframe_constant_oracle(5, 3, 1.5), 1e-6));
        assert_eq!(bound_theorem2(5, 3, 0.5).unwrap(), 4.0);
    }

    #[test]
    fn coherence_bound_examples() {
        assert!(close(bound_proposition1(3, 2, 2.0).unwrap(), 1.5, 1e-14));
        assert!(close(
            bound_proposition1(28, 7, 4.0).unwrap(),
            756.0 / 81.0,
            1e-12
        ));
        assert_eq!(bound_proposition1(3, 3, 3.0).unwrap(), 0.0);
        assert!(matches!(
            bound_proposition1(3, 2, 1.9),
            Err(Error::BadExponent { .. })
        ));
    }

    #[test]
    fn welch_and_gerzon() {
        assert!(close(welch_bound(3, 2), 0.5, 1e-15));
        assert!(close(welch_bound(6, 3), 1.0 / 5f64.sqrt(), 1e-15));
        assert_eq!(welch_bound(4, 4), 0.0);
        assert_eq!(gerzon_bound(3, Field::Real), 6);
        assert_eq!(gerzon_bound(7, Field::Real), 28);
        assert_eq!(gerzon_bound(2, Field::Complex), 4);
    }

    #[test]
    fn thresholds() {
        let p1 = p_threshold(1).unwrap();
        assert!(close(p1, 1.16993, 5e-6));
        assert!(close(p1, 2.0 * (3f64.ln() / 2f64.ln() - 1.0), 1e-12));
        assert!(close(
            p_threshold(2).unwrap(),
            2.0 * (1.25f64).ln() / 1.5f64.ln(),
            1e-15
        ));
        assert!(close(p_threshold(2).unwrap(), 1.100_68, 1e-5));
        assert!(p_threshold(0).is_err());
    }

    #[test]
    fn f_m_values() {
        for m in 1..=3 {
            let p = p_threshold(m).unwrap();
            let two_m = 2.0 * m as f64;
            assert!(close(f_m(m, two_m, p).unwrap(), two_m, 1e-10));
            assert!(close(f_m(m, two_m + 1.0, p).unwrap(), two_m, 1e-10));
            // ternary search for the local minimum on (m, 4m+1)
            let (mut lo, mut hi) = (m as f64 + 1e-9, 4.0 * m as f64 + 1.0);
            for _ in 0..200 {
                let a = lo + (hi - lo) / 3.0;
                let b = hi - (hi - lo) / 3.0;
                if f_m(m, a, p).unwrap() < f_m(m, b, p).unwrap() {
                    hi = b;
                } else {
                    lo = a;
                }
            }
            assert!(
                lo >= two_m - 1e-9 && lo <= two_m + 1.0 + 1e-9,
                "m={m}: argmin {lo}"
            );
        }
        assert!(matches!(f_m(1, 1.0, 1.0), Err(Error::Domain(_))));
    }

    #[test]
    fn planar_bound_values() {
        assert_eq!(bound_theorem5(4, 1.0).unwrap(), 4.0);
        assert_eq!(bound_theorem5(5, 1.3).unwrap(), 8.0);
        assert_eq!(bound_theorem5(1, 0.5).unwrap(), 0.0);
        assert!(bound_theorem5(5, 1.31).is_err());
    }

    #[test]
    fn certificate_examples() {
        let x =
            Configuration::new(2, vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let a = gram(&x);
        let g = gale_dual(&a, 2, DEFAULT_RANK_TOL).unwrap();
        let r = per_row_certificate(&a, &g, 1.0).unwrap();
        for v in &r {
            assert!(v.abs() < 1e-10, "{r:?}");
        }

        let a = gram(&simplex(2).unwrap());
        let g = gale_dual(&a, 2, DEFAULT_RANK_TOL).unwrap();
        let r = per_row_certificate(&a, &g, 1.0).unwrap();
        for v in &r {
            assert!(close(*v, 1.0 - 0.5f64.sqrt(), 1e-10));
        }
    }

    #[test]
    fn certificate_rejects_foreign_dual() {
        let a = gram(&simplex(2).unwrap());
        let x =
            Configuration::new(2, vec![vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let g = gale_dual(&gram(&x), 2, DEFAULT_RANK_TOL).unwrap();
        assert!(matches!(
            per_row_certificate(&a, &g, 1.0),
            Err(Error::MismatchedDual { .. })
        ));
    }

    #[test]
    fn pframe_bound_selection() {
        let names: Vec<_> = pframe_bounds(5, 2, 1.3).iter().map(|b| b.name).collect();
        assert_eq!(names, ["bound_theorem2", "lemma2_bound", "bound_theorem5"]);
        let names: Vec<_> = pframe_bounds(4, 3, 3.0).iter().map(|b| b.name).collect();
        assert_eq!(names, ["bound_proposition1", "lemma2_bound"]);
        assert_eq!(best_pframe_bound(5, 2, 1.3), 8.0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn energy_dominates_bounds(seed in any::<u64>(), d in 1usize..5, extra in 1usize..6, p in 1.0f64..1.999) {
            use rand::SeedableRng;
            let n = d + extra;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_configuration(d, n, &mut rng);
            let e = energy(&gram(&x), &Potential::pframe(p).unwrap()).value;
            let t2 = bound_theorem2(n, d, p).unwrap();
            let l2 = lemma2_bound(n, d, p).unwrap();
            prop_assert!(e >= t2 - 1e-8);
            prop_assert!(e >= l2 - 1e-8);
            prop_assert!(l2 >= t2 - 1e-10);
        }

        #[test]
        fn energy_dominates_coherence_bound(seed in any::<u64>(), d in 1usize..5, n in 2usize..9, p in 2.0f64..5.0) {
            use rand::SeedableRng;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = random_configuration(d, n, &mut rng);
            let e = energy(&gram(&x), &Potential::pframe(p).unwrap()).value;
            prop_assert!(e >= bound_proposition1(n, d, p).unwrap() - 1e-8);
            prop_assert!(crate::configs::coherence(&x) >= welch_bound(n, d) - 1e-10);
        }

        #[test]
        fn certificates_hold(seed in any::<u64>(), d in 1usize..5, extra in 1usize..6) {
            use rand::SeedableRng;
            let n = d + extra;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let a = gram(&random_configuration(d, n, &mut rng));
            let g = gale_dual(&a, d, DEFAULT_RANK_TOL).unwrap();
            for p in [1.0, 1.5, 2.0, 3.0] {
                let r = per_row_certificate(&a, &g, p).unwrap();
                prop_assert!(r.iter().all(|&v| v >= -1e-8), "p={} {:?}", p, r);
            }
        }
    }
}
