//! Polynomial potentials on [−1, 1] in exact rational arithmetic, their
//! expansion in the monic orthogonal (Gegenbauer) basis for the sphere
//! S^{d−1}, and continuous energies of uniform measures on configurations.

use std::fmt;
use std::ops::{Add, Mul, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::configs::Configuration;
use crate::energies::{Potential, PotentialKind};
use crate::error::{Error, Result};

pub const MAX_DEGREE: usize = 6;

/// Polynomial with exact rational coefficients, index = degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PolyRational {
    coeffs: Vec<BigRational>,
}

fn rat(num: i64, den: i64) -> BigRational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

impl PolyRational {
    pub fn new(mut coeffs: Vec<BigRational>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        Self { coeffs }
    }

    pub fn zero() -> Self {
        Self { coeffs: Vec::new() }
    }

    pub fn constant(c: BigRational) -> Self {
        Self::new(vec![c])
    }

    pub fn monomial(k: usize) -> Self {
        let mut coeffs = vec![BigRational::zero(); k + 1];
        coeffs[k] = BigRational::one();
        Self { coeffs }
    }

    /// Parses coefficients such as `"-1/9, 0, 1"` (constant term first).
    pub fn parse(text: &str) -> Result<Self> {
        let coeffs = text
            .split(',')
            .map(str::trim)
            .enumerate()
            .map(|(i, s)| {
                s.parse::<BigRational>().map_err(|e| Error::Parse {
                    line: 1,
                    message: format!("coefficient {i} ({s:?}): {e}"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::new(coeffs))
    }

    /// Degree; the zero polynomial reports 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn coeff(&self, k: usize) -> BigRational {
        self.coeffs
            .get(k)
            .cloned()
            .unwrap_or_else(BigRational::zero)
    }

    pub fn coeffs(&self) -> &[BigRational] {
        &self.coeffs
    }

    pub fn scale(&self, s: &BigRational) -> Self {
        Self::new(self.coeffs.iter().map(|c| c * s).collect())
    }

    pub fn eval(&self, t: f64) -> f64 {
        self.coeffs
            .iter()
            .rev()
            .fold(0.0, |acc, c| acc * t + c.to_f64().unwrap_or(f64::NAN))
    }
}

impl Add for &PolyRational {
    type Output = PolyRational;
    fn add(self, rhs: &PolyRational) -> PolyRational {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolyRational::new((0..n).map(|k| self.coeff(k) + rhs.coeff(k)).collect())
    }
}

impl Sub for &PolyRational {
    type Output = PolyRational;
    fn sub(self, rhs: &PolyRational) -> PolyRational {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        PolyRational::new((0..n).map(|k| self.coeff(k) - rhs.coeff(k)).collect())
    }
}

impl Mul for &PolyRational {
    type Output = PolyRational;
    fn mul(self, rhs: &PolyRational) -> PolyRational {
        if self.is_zero() || rhs.is_zero() {
            return PolyRational::zero();
        }
        let mut out = vec![BigRational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        PolyRational::new(out)
    }
}

impl fmt::Display for PolyRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let a = c.abs();
            let show_coeff = k == 0 || !a.is_one();
            if show_coeff {
                write!(f, "{a}")?;
            }
            match k {
                0 => {}
                1 => write!(f, "{}t", if show_coeff { "*" } else { "" })?,
                _ => write!(f, "{}t^{k}", if show_coeff { "*" } else { "" })?,
            }
        }
        Ok(())
    }
}

/// E[t^k] for t = ⟨x, e⟩ with x uniform on S^{d−1}: zero for odd k,
/// (k−1)!!/(d(d+2)⋯(d+k−2)) for even k.
pub fn sphere_moment(k: usize, d: usize) -> BigRational {
    if k % 2 == 1 {
        return BigRational::zero();
    }
    (0..k / 2).fold(BigRational::one(), |acc, i| {
        acc * rat(2 * i as i64 + 1, (d + 2 * i) as i64)
    })
}

/// ∫ f g dσ for the projected sphere measure.
pub fn inner_product(f: &PolyRational, g: &PolyRational, d: usize) -> BigRational {
    let mut acc = BigRational::zero();
    for (a, fa) in f.coeffs.iter().enumerate() {
        for (b, gb) in g.coeffs.iter().enumerate() {
            if (a + b) % 2 == 0 {
                acc += fa * gb * sphere_moment(a + b, d);
            }
        }
    }
    acc
}

fn check_dimension(d: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "sphere dimension d = {d} must be >= 2"
        )));
    }
    Ok(())
}

fn gegenbauer_basis(k: usize, d: usize) -> Vec<PolyRational> {
    let mut basis: Vec<PolyRational> = Vec::with_capacity(k + 1);
    for deg in 0..=k {
        let mut g = PolyRational::monomial(deg);
        for prev in &basis {
            let num = inner_product(&PolyRational::monomial(deg), prev, d);
            if num.is_zero() {
                continue;
            }
            let coef = num / inner_product(prev, prev, d);
            g = &g - &prev.scale(&coef);
        }
        basis.push(g);
    }
    basis
}

/// Monic degree-k polynomial orthogonal to all lower degrees under the
/// weight (1 − t²)^{(d−3)/2} on [−1, 1].
pub fn gegenbauer_monic(k: usize, d: usize) -> Result<PolyRational> {
    if k > MAX_DEGREE {
        return Err(Error::UnsupportedDegree { degree: k });
    }
    check_dimension(d)?;
    Ok(gegenbauer_basis(k, d).pop().expect("k + 1 basis elements"))
}

/// Coefficients c_0..c_deg with f = Σ c_k G_k, G_k = gegenbauer_monic(k, d).
pub fn expand(f: &PolyRational, d: usize) -> Result<Vec<BigRational>> {
    if f.degree() > MAX_DEGREE {
        return Err(Error::UnsupportedDegree { degree: f.degree() });
    }
    check_dimension(d)?;
    let deg = f.degree();
    let basis = gegenbauer_basis(deg, d);
    let mut rest = f.clone();
    let mut out = vec![BigRational::zero(); deg + 1];
    for k in (0..=deg).rev() {
        let c = rest.coeff(k);
        if !c.is_zero() {
            rest = &rest - &basis[k].scale(&c);
        }
        out[k] = c;
    }
    debug_assert!(rest.is_zero());
    Ok(out)
}

/// Σ c_k G_k.
pub fn resum(coeffs: &[BigRational], d: usize) -> Result<PolyRational> {
    if coeffs.len() > MAX_DEGREE + 1 {
        return Err(Error::UnsupportedDegree {
            degree: coeffs.len() - 1,
        });
    }
    check_dimension(d)?;
    let basis = gegenbauer_basis(coeffs.len().saturating_sub(1), d);
    Ok(coeffs
        .iter()
        .zip(&basis)
        .fold(PolyRational::zero(), |acc, (c, g)| &acc + &g.scale(c)))
}

/// Sufficient certificate: every expansion coefficient is nonnegative.
pub fn is_positive_definite(f: &PolyRational, d: usize) -> Result<bool> {
    Ok(expand(f, d)?.iter().all(|c| !c.is_negative()))
}

/// Constant coefficient of the expansion, which bounds I_f(μ) from below for
/// every probability measure μ when all other coefficients are nonnegative.
pub fn energy_lower_bound_gegenbauer(f: &PolyRational, d: usize) -> Result<BigRational> {
    let c = expand(f, d)?;
    if c.iter().skip(1).any(Signed::is_negative) {
        return Err(Error::NotCertifiable);
    }
    Ok(c.into_iter().next().unwrap_or_else(BigRational::zero))
}

/// (t + 1/d)².
pub fn simplex_shift_square(d: usize) -> PolyRational {
    let inv = rat(1, d as i64);
    PolyRational::new(vec![&inv * &inv, inv * rat(2, 1), BigRational::one()])
}

/// (t² − 1/(d+2))².
pub fn etf_dev_square(d: usize) -> PolyRational {
    let a = rat(1, d as i64 + 2);
    PolyRational::new(vec![
        &a * &a,
        BigRational::zero(),
        -a * rat(2, 1),
        BigRational::zero(),
        BigRational::one(),
    ])
}

/// (1/N²) Σ over all ordered pairs (diagonal included) of f(⟨x_i, x_j⟩).
pub fn continuous_energy(x: &Configuration, f: &Potential) -> f64 {
    let n = x.n();
    let mut off = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            off += f.value_clamped(x.inner(i, j));
        }
    }
    let diag: f64 = (0..n).map(|i| f.value_clamped(x.inner(i, i))).sum();
    (diag + 2.0 * off) / (n * n) as f64
}

/// Lower bound on the continuous energy of `f` over probability measures on
/// S^{d−1}, for the two shifted families with p <= 2 (α² = 1/(d+2) for the
/// ETF family). Uses |u|^p >= u² on the normalized argument and the exact
/// bounds for the squared potentials.
pub fn continuous_lower_bound(f: &Potential, d: usize) -> Option<f64> {
    if d < 2 || f.epsilon != 0.0 || !(f.p > 0.0 && f.p <= 2.0) {
        return None;
    }
    let (norm, base) = match f.kind {
        PotentialKind::SimplexShift { d: dd } if dd == d => (
            1.0 + 1.0 / d as f64,
            energy_lower_bound_gegenbauer(&simplex_shift_square(d), d).ok()?,
        ),
        PotentialKind::EtfDev { alpha_sq }
            if (alpha_sq - 1.0 / (d as f64 + 2.0)).abs() <= 1e-15 =>
        {
            (
                1.0 - 1.0 / (d as f64 + 2.0),
                energy_lower_bound_gegenbauer(&etf_dev_square(d), d).ok()?,
            )
        }
        _ => return None,
    };
    Some(norm.powf(f.p - 2.0) * base.to_f64()?)
}

/// Checks |u|^p >= u² at every grid point for both normalized arguments
/// u = (t + 1/d)/(1 + 1/d) and u = (t² − α²)/(1 − α²), α² = 1/(d+2).
pub fn check_inequality_eq6(t_grid: &[f64], d: usize, p: f64) -> Result<bool> {
    if !(p > 0.0 && p <= 2.0) {
        return Err(Error::BadExponent { p, range: "(0, 2]" });
    }
    check_dimension(d)?;
    let inv_d = 1.0 / d as f64;
    let a2 = 1.0 / (d as f64 + 2.0);
    let holds = |u: f64| u.abs().powf(p) >= u * u - 1e-12;
    Ok(t_grid.iter().all(|&t| {
        (-1.0..=1.0).contains(&t)
            && holds((t + inv_d) / (1.0 + inv_d))
            && holds((t * t - a2) / (1.0 - a2))
    }))
}
