//! Pair potentials, discrete energies and their tangential gradients, and the
//! planar angle sums of Fejes Tóth.

use std::f64::consts::PI;

use serde::Serialize;

use crate::configs::{dot, Configuration, GramMatrix};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Inner products may overshoot ±1 by this much before they are rejected.
pub const DOMAIN_SLACK: f64 = 1e-9;

/// Below this |u| an unsmoothed potential with p < 2 has no usable derivative.
pub const NONSMOOTH_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "camelCase")]
pub enum PotentialKind {
    /// |t|^p
    Pframe,
    /// |t + 1/d|^p
    SimplexShift { d: usize },
    /// |t² − α²|^p
    EtfDev { alpha_sq: f64 },
}

/// A pair potential f(t) of the inner product t, optionally smoothed as
/// (u² + ε²)^{p/2} − ε^p where u is the shifted argument.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Potential {
    #[serde(flatten)]
    pub kind: PotentialKind,
    pub p: f64,
    pub epsilon: f64,
}

impl Potential {
    pub fn new(kind: PotentialKind, p: f64, epsilon: f64) -> Result<Self> {
        if !(p.is_finite() && p > 0.0) {
            return Err(Error::BadExponent {
                p,
                range: "(0, inf)",
            });
        }
        if !(epsilon.is_finite() && epsilon >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "smoothing width {epsilon} must be >= 0"
            )));
        }
        match kind {
            PotentialKind::SimplexShift { d: 0 } => {
                return Err(Error::InvalidArgument("simplex shift needs d >= 1".into()))
            }
            PotentialKind::EtfDev { alpha_sq } if !(0.0..1.0).contains(&alpha_sq) => {
                return Err(Error::InvalidArgument(format!(
                    "alpha^2 = {alpha_sq} outside [0, 1)"
                )))
            }
            _ => {}
        }
        Ok(Self { kind, p, epsilon })
    }

    pub fn pframe(p: f64) -> Result<Self> {
        Self::new(PotentialKind::Pframe, p, 0.0)
    }

    pub fn simplex_shift(d: usize, p: f64) -> Result<Self> {
        Self::new(PotentialKind::SimplexShift { d }, p, 0.0)
    }

    /// |t² − α²|^p given the squared coherence α².
    pub fn etf_dev(alpha_sq: f64, p: f64) -> Result<Self> {
        Self::new(PotentialKind::EtfDev { alpha_sq }, p, 0.0)
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(self.kind, self.p, epsilon)
    }

    pub fn with_p(self, p: f64) -> Result<Self> {
        Self::new(self.kind, p, self.epsilon)
    }

    /// True when f(−t) = f(t), so energies ignore sign flips.
    pub fn is_even(&self) -> bool {
        !matches!(self.kind, PotentialKind::SimplexShift { .. })
    }

    fn shifted(&self, t: f64) -> f64 {
        match self.kind {
            PotentialKind::Pframe => t,
            PotentialKind::SimplexShift { d } => t + 1.0 / d as f64,
            PotentialKind::EtfDev { alpha_sq } => t * t - alpha_sq,
        }
    }

    fn shifted_slope(&self, t: f64) -> f64 {
        match self.kind {
            PotentialKind::EtfDev { .. } => 2.0 * t,
            _ => 1.0,
        }
    }

    fn outer(&self, u: f64) -> f64 {
        if self.epsilon == 0.0 {
            u.abs().powf(self.p)
        } else {
            let e2 = self.epsilon * self.epsilon;
            (u * u + e2).powf(0.5 * self.p) - self.epsilon.powf(self.p)
        }
    }

    fn outer_slope(&self, u: f64) -> f64 {
        let p = self.p;
        if self.epsilon == 0.0 {
            if u == 0.0 {
                0.0
            } else {
                p * u.abs().powf(p - 1.0) * u.signum()
            }
        } else {
            p * u * (u * u + self.epsilon * self.epsilon).powf(0.5 * p - 1.0)
        }
    }

    /// f(t) with t clamped to [−1, 1] when it overshoots by rounding only.
    pub(crate) fn value_clamped(&self, t: f64) -> f64 {
        let t = if t.abs() <= 1.0 + DOMAIN_SLACK {
            t.clamp(-1.0, 1.0)
        } else {
            t
        };
        self.outer(self.shifted(t))
    }

    /// df/dt.
    pub(crate) fn slope(&self, t: f64) -> f64 {
        let t = t.clamp(-1.0, 1.0);
        self.outer_slope(self.shifted(t)) * self.shifted_slope(t)
    }

    fn is_nonsmooth_at(&self, t: f64) -> bool {
        self.epsilon == 0.0
            && self.p < 2.0
            && self.shifted(t.clamp(-1.0, 1.0)).abs() < NONSMOOTH_EPS
    }
}

/// Evaluates f at an inner product t ∈ [−1, 1].
pub fn eval_potential(f: &Potential, t: f64) -> Result<f64> {
    if !(t.abs() <= 1.0 + DOMAIN_SLACK) {
        return Err(Error::Domain(format!("inner product {t} outside [-1, 1]")));
    }
    Ok(f.value_clamped(t))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyReport {
    pub value: f64,
    pub pair_count: usize,
    pub max_term: f64,
    pub potential: Potential,
}

/// Σ over ordered pairs i ≠ j of f(A_ij).
pub fn energy(a: &GramMatrix, f: &Potential) -> EnergyReport {
    pair_energy(a.n(), |i, j| a.get(i, j), f)
}

/// Same as [`energy`] on the Gram matrix of `x`, without materializing it.
pub fn config_energy(x: &Configuration, f: &Potential) -> EnergyReport {
    pair_energy(x.n(), |i, j| x.inner(i, j), f)
}

fn pair_energy(n: usize, entry: impl Fn(usize, usize) -> f64, f: &Potential) -> EnergyReport {
    let mut sum = 0.0;
    let mut max_term = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            let v = f.value_clamped(entry(i, j));
            sum += v;
            max_term = max_term.max(v);
        }
    }
    EnergyReport {
        value: 2.0 * sum,
        pair_count: n * n.saturating_sub(1),
        max_term,
        potential: *f,
    }
}

/// Energy and tangential gradient in one pass. The gradient is returned in
/// the configuration's storage layout (vector after vector).
pub(crate) fn energy_and_gradient(x: &Configuration, f: &Potential) -> (f64, Vec<f64>) {
    let (d, n) = (x.d(), x.n());
    let mut grad = vec![0.0; d * n];
    let mut sum = 0.0;
    for i in 0..n {
        let xi = x.vector(i);
        for j in (i + 1)..n {
            let xj = x.vector(j);
            let t = dot(xi, xj);
            sum += f.value_clamped(t);
            let w = 2.0 * f.slope(t);
            if w != 0.0 {
                for k in 0..d {
                    grad[i * d + k] += w * xj[k];
                    grad[j * d + k] += w * xi[k];
                }
            }
        }
    }
    for i in 0..n {
        let xi = x.vector(i);
        let gi = &mut grad[i * d..(i + 1) * d];
        let radial = dot(gi, xi);
        gi.iter_mut().zip(xi).for_each(|(g, a)| *g -= radial * a);
    }
    (2.0 * sum, grad)
}

/// d×N matrix whose column i is P_i Σ_{j≠i} 2 f′(⟨x_i, x_j⟩) x_j with
/// P_i = I − x_i x_iᵀ.
pub fn energy_gradient(x: &Configuration, f: &Potential) -> Result<Matrix> {
    for i in 0..x.n() {
        for j in (i + 1)..x.n() {
            if f.is_nonsmooth_at(x.inner(i, j)) {
                return Err(Error::NonSmoothPoint { i, j });
            }
        }
    }
    let (_, g) = energy_and_gradient(x, f);
    let (d, n) = (x.d(), x.n());
    let mut m = Matrix::zeros(d, n);
    for i in 0..n {
        for k in 0..d {
            m[(k, i)] = g[i * d + k];
        }
    }
    Ok(m)
}

/// Σ over all ordered pairs (diagonal included) of arccos|⟨x_i, x_j⟩|.
pub fn angle_sum(x: &Configuration) -> f64 {
    let mut sum = 0.0;
    for i in 0..x.n() {
        for j in (i + 1)..x.n() {
            sum += x.inner(i, j).abs().min(1.0).acos();
        }
    }
    2.0 * sum
}

/// πN²/4 for even N, π(N²−1)/4 for odd N.
pub fn fejes_toth_bound(n: usize) -> f64 {
    let n2 = (n * n) as f64;
    if n % 2 == 0 {
        PI * n2 / 4.0
    } else {
        PI * (n2 - 1.0) / 4.0
    }
}
