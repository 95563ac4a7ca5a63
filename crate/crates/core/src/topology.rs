//! Leader-follower communication graph, the matrix `H` derived from it, and
//! the admissible observer gains.
//!
//! Node 0 is the leader. `a[i][j] > 0` means agent `i` receives information
//! from agent `j`, so the leader's row is identically zero.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, kron, Complex64, Matrix, Spectrum};
use crate::tol;

/// Weighted digraph over the leader (node 0) and `N` followers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Digraph {
    adjacency: Matrix,
}

impl Digraph {
    pub fn new(adjacency: Matrix) -> Result<Self> {
        let n = adjacency.rows();
        if !adjacency.is_square() || n < 2 {
            return Err(Error::Dimension(format!(
                "adjacency must be (N+1)x(N+1) with N >= 1, got {}x{}",
                adjacency.rows(),
                adjacency.cols()
            )));
        }
        for i in 0..n {
            for j in 0..n {
                let w = adjacency[(i, j)];
                if !w.is_finite() || w < 0.0 {
                    return Err(Error::Precondition(format!(
                        "weight a[{i}][{j}] = {w} is not a finite nonnegative number"
                    )));
                }
                if i == j && w != 0.0 {
                    return Err(Error::Precondition(format!("self-loop at node {i}")));
                }
                if i == 0 && w != 0.0 {
                    return Err(Error::Precondition(format!(
                        "the leader cannot receive information (a[0][{j}] = {w})"
                    )));
                }
            }
        }
        Ok(Self { adjacency })
    }

    /// Builds a graph from `(from, to, weight)` triples: agent `to` hears `from`.
    pub fn from_edges(n_followers: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut a = Matrix::zeros(n_followers + 1, n_followers + 1);
        for &(from, to, w) in edges {
            if from > n_followers || to > n_followers {
                return Err(Error::Dimension(format!(
                    "edge {from}->{to} references a node outside 0..={n_followers}"
                )));
            }
            a[(to, from)] = w;
        }
        Self::new(a)
    }

    /// Reconstructs the graph from `H` and the leader weights `a_i0`.
    pub fn from_h(h: &Matrix, leader_weights: &[f64]) -> Result<Self> {
        let n = h.rows();
        if !h.is_square() || leader_weights.len() != n {
            return Err(Error::Dimension("H and leader weights disagree".into()));
        }
        let mut a = Matrix::zeros(n + 1, n + 1);
        for i in 0..n {
            a[(i + 1, 0)] = leader_weights[i];
            for j in 0..n {
                if i != j {
                    a[(i + 1, j + 1)] = -h[(i, j)];
                }
            }
        }
        Self::new(a)
    }

    pub fn n_followers(&self) -> usize {
        self.adjacency.rows() - 1
    }

    pub fn adjacency(&self) -> &Matrix {
        &self.adjacency
    }

    /// `a_ij`, indices over `0..=N`.
    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adjacency[(i, j)]
    }

    /// Weights `a_i0`, `i = 1..=N`.
    pub fn leader_weights(&self) -> Vec<f64> {
        (1..=self.n_followers())
            .map(|i| self.adjacency[(i, 0)])
            .collect()
    }

    /// In-neighbours of node `i` as `(j, a_ij)`, including the leader.
    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.adjacency.cols())
            .map(move |j| (j, self.adjacency[(i, j)]))
            .filter(|&(_, w)| w > 0.0)
    }
}

/// An eigenvalue `a ± jb` of `H`; `b >= 0`, and a complex pair appears once.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub a: f64,
    pub b: f64,
}

impl EigenPair {
    pub fn modulus_sqr(&self) -> f64 {
        self.a * self.a + self.b * self.b
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HMatrix {
    pub h: Matrix,
    pub spectrum: Spectrum,
    /// Real eigenvalues first (`b = 0`), then one entry per complex pair.
    pub summary: Vec<EigenPair>,
    /// Number of real eigenvalues.
    pub n_real: usize,
    /// Number of entries in `summary`: real eigenvalues plus complex pairs.
    pub n_summary: usize,
}

impl HMatrix {
    pub fn n(&self) -> usize {
        self.h.rows()
    }

    pub fn all_real_parts_positive(&self) -> bool {
        self.spectrum.eigenvalues().iter().all(|z| z.re > 0.0)
    }

    fn require_positive_real_parts(&self) -> Result<()> {
        match self.spectrum.eigenvalues().iter().find(|z| z.re <= 0.0) {
            Some(z) => Err(Error::AssumptionViolation(format!(
                "H has eigenvalue {:.6}{:+.6}i with non-positive real part \
                 (no spanning tree rooted at the leader)",
                z.re, z.im
            ))),
            None => Ok(()),
        }
    }
}

/// `h_ii = Σ_{j=0..N} a_ij`, `h_ij = -a_ij` for `i != j`.
pub fn build_h(g: &Digraph) -> Result<HMatrix> {
    let n = g.n_followers();
    let mut h = Matrix::zeros(n, n);
    for i in 1..=n {
        let degree: f64 = (0..=n).map(|j| g.weight(i, j)).sum();
        for j in 1..=n {
            h[(i - 1, j - 1)] = if i == j { degree } else { -g.weight(i, j) };
        }
    }
    let spectrum = linalg::spectrum(&h)?;
    let (summary, n_real) = summarize(&spectrum);
    Ok(HMatrix {
        n_summary: summary.len(),
        h,
        spectrum,
        summary,
        n_real,
    })
}

fn summarize(sp: &Spectrum) -> (Vec<EigenPair>, usize) {
    let is_real = |z: &Complex64| z.im.abs() <= 1e-12 * z.norm().max(1.0);
    let mut out: Vec<EigenPair> = sp
        .eigenvalues()
        .iter()
        .filter(|z| is_real(z))
        .map(|z| EigenPair { a: z.re, b: 0.0 })
        .collect();
    let n_real = out.len();
    out.extend(
        sp.eigenvalues()
            .iter()
            .filter(|z| !is_real(z) && z.im > 0.0)
            .map(|z| EigenPair { a: z.re, b: z.im }),
    );
    (out, n_real)
}

/// Every follower is reachable from node 0 along edges `j -> i` with `a_ij > 0`.
pub fn has_leader_rooted_spanning_tree(g: &Digraph) -> bool {
    unreachable_followers(g).is_empty()
}

/// Followers with no directed path from the leader.
pub fn unreachable_followers(g: &Digraph) -> Vec<usize> {
    let n = g.n_followers();
    let mut seen = vec![false; n + 1];
    seen[0] = true;
    let mut queue = VecDeque::from([0usize]);
    while let Some(j) = queue.pop_front() {
        for (i, visited) in seen.iter_mut().enumerate().skip(1) {
            if !*visited && g.weight(i, j) > 0.0 {
                *visited = true;
                queue.push_back(i);
            }
        }
    }
    (1..=n).filter(|&i| !seen[i]).collect()
}

/// Admissible `μ1` range `(0, 2/ρ(H))`.
pub fn mu1_interval(h: &HMatrix) -> Result<(f64, f64)> {
    h.require_positive_real_parts()?;
    Ok((0.0, 2.0 / linalg::rho_of(&h.spectrum)?))
}

/// Closed-form `μ2` range from the spectra of `H` and `S`.
///
/// Each eigenvalue `a ± jb` of `H` contributes
/// `((a - √Δ)/(a²+b²), (a + √Δ)/(a²+b²))` with `Δ = (a²+b²)/|λ|² - b²`,
/// where `|λ|` is the largest eigenvalue modulus of `S`. The result is the
/// intersection. With a unit-modulus leader the lower end is 0 and the
/// upper end is `min 2a/(a²+b²)`.
pub fn mu2_interval(h: &HMatrix, s_spectrum: &Spectrum) -> Result<(f64, f64)> {
    h.require_positive_real_parts()?;
    let r = s_spectrum.spectral_radius();
    if r == 0.0 {
        return Ok((f64::NEG_INFINITY, f64::INFINITY));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    for p in &h.summary {
        let m2 = p.modulus_sqr();
        let delta = m2 / (r * r) - p.b * p.b;
        if delta < 0.0 {
            return Err(Error::EmptyInterval(format!(
                "Δ = {delta:.6e} < 0 for eigenvalue {:.6}{:+.6}i of H",
                p.a, p.b
            )));
        }
        let root = delta.sqrt();
        lo = lo.max((p.a - root) / m2);
        hi = hi.min((p.a + root) / m2);
    }
    if lo >= hi {
        return Err(Error::EmptyInterval(format!("lower {lo} >= upper {hi}")));
    }
    Ok((lo, hi))
}

/// `I_N ⊗ S - μ (H ⊗ S)`, the error matrix of the distributed observer.
pub fn observer_error_matrix(h: &Matrix, s: &Matrix, mu: f64) -> Matrix {
    let n = h.rows();
    let left = kron(&Matrix::identity(n), s);
    let right = kron(h, s).scale(mu);
    &left - &right
}

/// Direct Schur test of `I_N ⊗ S - μ2 (H ⊗ S)`.
pub fn verify_mu2(h: &HMatrix, s: &Matrix, mu2: f64) -> Result<bool> {
    linalg::is_schur(&observer_error_matrix(&h.h, s, mu2), tol::SCHUR_MARGIN)
}

const CERTIFY_GRID: usize = 2000;

/// Interval of `μ2 >= 0` for which [`verify_mu2`] holds, located by a grid
/// scan and refined by bisection on both ends. `None` when no grid point is
/// stable.
///
/// The stable set is an interval: for each eigenvalue of `H` and of `S` it is
/// the set where a convex quadratic in `μ` is negative, and the
/// intersection of intervals is an interval.
pub fn certified_mu2_interval(h: &HMatrix, s: &Matrix) -> Result<Option<(f64, f64)>> {
    let s_sp = linalg::spectrum(s)?;
    let r = s_sp.spectral_radius();
    let h_min = h.spectrum.min_modulus();
    if h_min == 0.0 {
        return Ok(None);
    }
    if r == 0.0 {
        return Ok(Some((0.0, f64::INFINITY)));
    }
    // Beyond this, |1 - μλ_H| >= μ|λ_H| - 1 > 1/r for every λ_H.
    let mu_max = 2.0 * (1.0 + 1.0 / r) / h_min;
    let stable = |mu: f64| verify_mu2(h, s, mu);
    let mut first = None;
    for k in 1..=CERTIFY_GRID {
        let mu = mu_max * k as f64 / CERTIFY_GRID as f64;
        if stable(mu)? {
            first = Some(mu);
            break;
        }
    }
    let Some(inside) = first else {
        return Ok(None);
    };
    let lower = if stable(0.0)? {
        0.0
    } else {
        bisect_edge(0.0, inside, &stable)?
    };
    let upper = bisect_edge(mu_max, inside, &stable)?;
    Ok(Some((lower, upper)))
}

/// Shrinks `[outside, inside]` to the stability boundary; returns the
/// boundary estimate on the unstable side.
fn bisect_edge(
    mut outside: f64,
    mut inside: f64,
    stable: &impl Fn(f64) -> Result<bool>,
) -> Result<f64> {
    while (outside - inside).abs() > tol::BISECTION_WIDTH {
        let mid = 0.5 * (outside + inside);
        if stable(mid)? {
            inside = mid;
        } else {
            outside = mid;
        }
    }
    Ok(outside)
}
