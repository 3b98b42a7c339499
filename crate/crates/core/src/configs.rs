//! Unit-vector configurations, their Gram matrices, and the extremal
//! constructions: repeated orthonormal bases, regular simplices and the
//! catalog of real equiangular tight frames.

use std::cmp::Ordering;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::ser::SerializeStruct;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Vectors are accepted as unit vectors inside this band and renormalized.
pub const LOAD_NORM_BAND: f64 = 1e-6;

/// Entries below this magnitude are skipped when fixing signs.
const SIGN_EPS: f64 = 1e-9;

/// N unit vectors in R^d, stored contiguously vector after vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Configuration {
    d: usize,
    n: usize,
    data: Vec<f64>,
}

impl Serialize for Configuration {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut st = serializer.serialize_struct("Configuration", 3)?;
        st.serialize_field("d", &self.d)?;
        st.serialize_field("n", &self.n)?;
        st.serialize_field("vectors", &self.to_vecs())?;
        st.end()
    }
}

impl Configuration {
    /// Builds a configuration, renormalizing vectors whose norm lies within
    /// [`LOAD_NORM_BAND`] of 1 and rejecting anything else.
    pub fn new(d: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidArgument(
                "dimension must be at least 1".into(),
            ));
        }
        if vectors.is_empty() {
            return Err(Error::InvalidArgument(
                "configuration needs at least one vector".into(),
            ));
        }
        let mut data = Vec::with_capacity(d * vectors.len());
        for (index, v) in vectors.iter().enumerate() {
            if v.len() != d {
                return Err(Error::DimensionMismatch(format!(
                    "vector {index} has {} coordinates, expected {d}",
                    v.len()
                )));
            }
            let norm = dot(v, v).sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > LOAD_NORM_BAND {
                return Err(Error::NonUnitVector { index, norm });
            }
            data.extend(v.iter().map(|x| x / norm));
        }
        Ok(Self {
            d,
            n: vectors.len(),
            data,
        })
    }

    /// Normalizes arbitrary nonzero vectors onto the sphere.
    pub fn from_directions(d: usize, vectors: Vec<Vec<f64>>) -> Result<Self> {
        let unit = vectors
            .into_iter()
            .enumerate()
            .map(|(index, v)| {
                let norm = dot(&v, &v).sqrt();
                if norm == 0.0 || !norm.is_finite() {
                    return Err(Error::NonUnitVector { index, norm });
                }
                Ok(v.into_iter().map(|x| x / norm).collect())
            })
            .collect::<Result<Vec<Vec<f64>>>>()?;
        Self::new(d, unit)
    }

    /// Builds from contiguous storage that is already normalized.
    pub(crate) fn from_raw(d: usize, data: Vec<f64>) -> Self {
        debug_assert!(d > 0 && data.len() % d == 0);
        let n = data.len() / d;
        Self { d, n, data }
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn vector(&self, i: usize) -> &[f64] {
        &self.data[i * self.d..(i + 1) * self.d]
    }

    pub fn vectors(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.d)
    }

    pub fn to_vecs(&self) -> Vec<Vec<f64>> {
        self.vectors().map(<[f64]>::to_vec).collect()
    }

    pub(crate) fn raw(&self) -> &[f64] {
        &self.data
    }

    pub fn inner(&self, i: usize, j: usize) -> f64 {
        dot(self.vector(i), self.vector(j))
    }

    /// d×N matrix with the vectors as columns.
    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_columns(&self.to_vecs()).expect("rectangular by construction")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Symmetric unit-diagonal N×N matrix of inner products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    entries: Matrix,
}

impl GramMatrix {
    /// Wraps a matrix after checking symmetry and the unit diagonal.
    pub fn new(entries: Matrix) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::NotSquare {
                rows: entries.rows(),
                cols: entries.cols(),
            });
        }
        let asym = entries.asymmetry();
        if asym > 1e-10 {
            return Err(Error::NotSymmetric {
                asymmetry: asym,
                tol: 1e-10,
            });
        }
        for i in 0..entries.rows() {
            if (entries[(i, i)] - 1.0).abs() > 1e-10 {
                return Err(Error::Domain(format!(
                    "diagonal entry {i} is {}, expected 1",
                    entries[(i, i)]
                )));
            }
        }
        Ok(Self { entries })
    }

    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn matrix(&self) -> &Matrix {
        &self.entries
    }

    /// Same matrix with rows and columns permuted: entry (i, j) of the result
    /// is entry (perm[i], perm[j]) of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        let n = self.n();
        if perm.len() != n {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        let mut m = Matrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                m[(i, j)] = self.entries[(perm[i], perm[j])];
            }
        }
        Ok(Self { entries: m })
    }
}

pub fn gram(x: &Configuration) -> GramMatrix {
    let n = x.n();
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = 1.0;
        for j in (i + 1)..n {
            let v = x.inner(i, j);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    GramMatrix { entries: m }
}

/// Vector j is e_{(j mod d)+1}.
pub fn repeated_onb(d: usize, n: usize) -> Result<Configuration> {
    if d == 0 || n == 0 {
        return Err(Error::InvalidArgument(
            "repeated_onb needs d, N >= 1".into(),
        ));
    }
    let mut data = vec![0.0; d * n];
    for j in 0..n {
        data[j * d + j % d] = 1.0;
    }
    Ok(Configuration::from_raw(d, data))
}

/// Orthonormal (Helmert) basis of the hyperplane {x ∈ R^m : Σx = 0}, as m−1
/// vectors of length m.
fn sum_zero_basis(m: usize) -> Vec<Vec<f64>> {
    (1..m)
        .map(|k| {
            let s = ((k * (k + 1)) as f64).sqrt();
            let mut b = vec![0.0; m];
            b[..k].iter_mut().for_each(|x| *x = 1.0 / s);
            b[k] = -(k as f64) / s;
            b
        })
        .collect()
}

/// Expresses points of the sum-zero hyperplane of R^m in coordinates of R^{m−1}
/// and normalizes them.
fn project_sum_zero(points: &[Vec<f64>]) -> Result<Configuration> {
    let m = points[0].len();
    let basis = sum_zero_basis(m);
    let coords = points
        .iter()
        .map(|p| basis.iter().map(|b| dot(p, b)).collect())
        .collect();
    Configuration::from_directions(m - 1, coords)
}

/// d+1 unit vectors with pairwise inner product −1/d.
pub fn simplex(d: usize) -> Result<Configuration> {
    if d == 0 {
        return Err(Error::InvalidArgument("simplex needs d >= 1".into()));
    }
    let m = d + 1;
    let inv = 1.0 / m as f64;
    let centered: Vec<Vec<f64>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|k| if k == i { 1.0 - inv } else { -inv })
                .collect()
        })
        .collect();
    project_sum_zero(&centered)
}

fn icosahedral_lines() -> Result<Configuration> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vs = Vec::with_capacity(6);
    for sign in [1.0, -1.0] {
        let base = [0.0, sign, phi];
        for shift in 0..3 {
            // cyclic shift (a, b, c) -> (c, a, b), applied `shift` times
            let v: Vec<f64> = (0..3).map(|k| base[(k + 3 - shift) % 3]).collect();
            vs.push(v);
        }
    }
    Configuration::from_directions(3, vs)
}

fn pair_etf_7_28() -> Result<Configuration> {
    let mut points = Vec::with_capacity(28);
    for a in 0..8 {
        for b in (a + 1)..8 {
            let p: Vec<f64> = (0..8)
                .map(|k| if k == a || k == b { 3.0 } else { -1.0 })
                .collect();
            points.push(p);
        }
    }
    project_sum_zero(&points)
}

/// Catalog equiangular tight frame for (d, N): orthonormal bases (N = d),
/// simplices (N = d+1), and the maximal real ETFs (3, 6) and (7, 28).
pub fn etf(d: usize, n: usize) -> Result<Configuration> {
    match (d, n) {
        (0, _) => Err(Error::UnknownEtf { d, n }),
        (d, n) if n == d => repeated_onb(d, d),
        (d, n) if n == d + 1 => simplex(d),
        (3, 6) => icosahedral_lines(),
        (7, 28) => pair_etf_7_28(),
        _ => Err(Error::UnknownEtf { d, n }),
    }
}

/// Cycles through the vectors of `base` until `n` vectors are placed.
pub fn repeat_config(base: &Configuration, n: usize) -> Result<Configuration> {
    if n == 0 {
        return Err(Error::InvalidArgument("repeat_config needs N >= 1".into()));
    }
    let l = base.n();
    let data = (0..n)
        .flat_map(|j| base.vector(j % l).iter().copied())
        .collect();
    Ok(Configuration::from_raw(base.d(), data))
}

/// max over i ≠ j of |⟨x_i, x_j⟩|; zero for a single vector.
pub fn coherence(x: &Configuration) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.n() {
        for j in (i + 1)..x.n() {
            worst = worst.max(x.inner(i, j).abs());
        }
    }
    worst
}

/// Frame operator Σ x_i x_iᵀ.
pub fn frame_operator(x: &Configuration) -> Matrix {
    let d = x.d();
    let mut s = Matrix::zeros(d, d);
    for v in x.vectors() {
        for a in 0..d {
            for b in 0..d {
                s[(a, b)] += v[a] * v[b];
            }
        }
    }
    s
}

/// Whether the frame operator is c·I within `tol`, with c = Σ‖x_i‖²/d.
pub fn is_tight_frame(x: &Configuration, tol: f64) -> (bool, f64) {
    let s = frame_operator(x);
    let d = x.d();
    let c = x.vectors().map(|v| dot(v, v)).sum::<f64>() / d as f64;
    let dev = s
        .sub(&Matrix::identity(d).scale(c))
        .expect("same shape")
        .max_abs();
    (dev <= tol, c)
}

pub fn is_etf(x: &Configuration, tol: f64) -> bool {
    if !is_tight_frame(x, tol).0 {
        return false;
    }
    let mut lo = f64::INFINITY;
    let mut hi = 0.0f64;
    for i in 0..x.n() {
        for j in (i + 1)..x.n() {
            let a = x.inner(i, j).abs();
            lo = lo.min(a);
            hi = hi.max(a);
        }
    }
    x.n() < 2 || hi - lo <= tol
}

fn canonical_sign(v: &mut [f64]) {
    if let Some(lead) = v.iter().find(|x| x.abs() > SIGN_EPS) {
        if *lead < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    // collapse -0.0 so bitwise comparisons are stable
    v.iter_mut().for_each(|x| *x += 0.0);
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Projective canonical form: every vector signed so that its first entry of
/// magnitude above 1e−9 is nonnegative, then vectors sorted lexicographically.
pub fn canonicalize(x: &Configuration) -> Configuration {
    let mut vs = x.to_vecs();
    vs.iter_mut().for_each(|v| canonical_sign(v));
    vs.sort_by(|a, b| lex_cmp(a, b));
    Configuration::from_raw(x.d(), vs.concat())
}

/// Lexicographic comparison of two configurations' canonical forms.
pub fn canonical_cmp(a: &Configuration, b: &Configuration) -> Ordering {
    lex_cmp(canonicalize(a).raw(), canonicalize(b).raw())
}

/// Groups vectors into lines: i and j share a line when |⟨x_i, x_j⟩| ≥ 1 − tol.
pub fn line_classes(x: &Configuration, tol: f64) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..x.n() {
        match classes
            .iter_mut()
            .find(|c| x.inner(c[0], i).abs() >= 1.0 - tol)
        {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

/// Whether `x` is a repeated orthonormal basis up to an orthogonal transform
/// and sign flips: its lines are mutually orthogonal within `tol`, there are
/// min(d, N) of them, and their multiplicities are the balanced split of N.
pub fn is_repeated_onb(x: &Configuration, tol: f64) -> bool {
    let classes = line_classes(x, tol);
    let (d, n) = (x.d(), x.n());
    if classes.len() != d.min(n) {
        return false;
    }
    for (a, ca) in classes.iter().enumerate() {
        for cb in &classes[a + 1..] {
            for &i in ca {
                for &j in cb {
                    if x.inner(i, j).abs() > tol {
                        return false;
                    }
                }
            }
        }
    }
    let (k, m) = (n / d, n % d);
    let mut sizes: Vec<usize> = classes.iter().map(Vec::len).collect();
    sizes.sort_unstable_by(|a, b| b.cmp(a));
    let mut expected: Vec<usize> = (0..d.min(n))
        .map(|c| if c < m { k + 1 } else { k })
        .collect();
    expected.sort_unstable_by(|a, b| b.cmp(a));
    sizes == expected
}

/// N independent points from the rotation-invariant distribution on S^{d−1}.
pub fn random_configuration<R: Rng + ?Sized>(d: usize, n: usize, rng: &mut R) -> Configuration {
    let mut data = Vec::with_capacity(d * n);
    for _ in 0..n {
        loop {
            let v: Vec<f64> = (0..d)
                .map(|_| rng.sample::<f64, _>(StandardNormal))
                .collect();
            let norm = dot(&v, &v).sqrt();
            if norm > 1e-12 {
                data.extend(v.iter().map(|x| x / norm));
                break;
            }
        }
    }
    Configuration::from_raw(d, data)
}

/// Parses the plain-text vector format: `#` comment lines, blank lines
/// ignored, otherwise one vector per line as whitespace-separated reals.
pub fn parse_vectors(text: &str) -> Result<Configuration> {
    let rows = parse_rows(text)?;
    let d = rows.first().map(|(_, r)| r.len()).ok_or(Error::Parse {
        line: 0,
        message: "no vectors found".into(),
    })?;
    let vectors = rows.into_iter().map(|(_, r)| r).collect();
    Configuration::new(d, vectors)
}

/// Parses rows of reals with equal field counts, keeping 1-based line numbers.
pub fn parse_rows(text: &str) -> Result<Vec<(usize, Vec<f64>)>> {
    let mut rows = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let row = trimmed
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| Error::Parse {
                        line,
                        message: format!("not a finite real: {tok:?}"),
                    })
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} fields, found {}", row.len()),
                })
            }
            _ => {}
        }
        rows.push((line, row));
    }
    Ok(rows)
}

pub fn read_vector_file(path: &Path) -> Result<Configuration> {
    let text = std::fs::read_to_string(path)?;
    parse_vectors(&text)
}

/// Formats rows in the vector file format with shortest round-trip reals.
pub fn format_rows<'a>(header: &str, rows: impl IntoIterator<Item = &'a [f64]>) -> String {
    let mut out = String::new();
    for line in header.lines() {
        let _ = writeln!(out, "# {line}");
    }
    for row in rows {
        let fields: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", fields.join(" "));
    }
    out
}

pub fn format_vectors(x: &Configuration) -> String {
    format_rows(&format!("d={} N={}", x.d(), x.n()), x.vectors())
}

/// Builds a configuration from the constructor mini-language:
/// `onb:DxN`, `simplex:D`, `etf:D,N`, `repeat:(SPEC)xN`, `file:PATH`.
pub fn construct(spec: &str) -> Result<Configuration> {
    let bad = |msg: &str| Error::Parse {
        line: 0,
        message: format!("{msg} in constructor {spec:?}"),
    };
    let num = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| bad("expected a count"))
    };
    let (kind, rest) = spec.split_once(':').ok_or_else(|| bad("missing ':'"))?;
    match kind.trim() {
        "onb" => {
            let (d, n) = rest.split_once('x').ok_or_else(|| bad("expected DxN"))?;
            repeated_onb(num(d)?, num(n)?)
        }
        "simplex" => simplex(num(rest)?),
        "etf" => {
            let (d, n) = rest.split_once(',').ok_or_else(|| bad("expected D,N"))?;
            etf(num(d)?, num(n)?)
        }
        "repeat" => {
            let inner = rest.trim();
            let close = inner.rfind(')').ok_or_else(|| bad("expected (SPEC)xN"))?;
            if !inner.starts_with('(') {
                return Err(bad("expected (SPEC)xN"));
            }
            let base = construct(&inner[1..close])?;
            let n = inner[close + 1..]
                .strip_prefix('x')
                .ok_or_else(|| bad("expected xN after ')'"))?;
            repeat_config(&base, num(n)?)
        }
        "file" => read_vector_file(Path::new(rest.trim())),
        _ => Err(bad("unknown constructor")),
    }
}
