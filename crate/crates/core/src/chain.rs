//! Probability distributions and row-stochastic matrices over a finite state
//! space, with the structural checks (irreducibility, aperiodicity, detailed
//! balance) the rest of the crate relies on.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Tolerance used when validating user-facing distributions and matrices.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Tolerance used for fixed-point residuals such as `πP = π`.
pub const RESIDUAL_TOL: f64 = 1e-10;

/// Entries in `(-CLAMP_TOL, 0)` are treated as rounding noise and set to zero.
pub const CLAMP_TOL: f64 = 1e-12;

/// A nonnegative weight vector summing to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityDistribution {
    weights: Vec<f64>,
}

impl ProbabilityDistribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, VALIDATION_TOL)
    }

    /// Validates `weights` with a caller-chosen tolerance on the total mass.
    ///
    /// Slightly negative entries (above `-CLAMP_TOL`) are clamped to zero and
    /// the vector is renormalized; anything more negative is rejected.
    pub fn with_tolerance(mut weights: Vec<f64>, tol: f64) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        let mut clamped = false;
        for (i, w) in weights.iter_mut().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { row: 0, col: i });
            }
            if *w < 0.0 {
                if *w > -CLAMP_TOL {
                    *w = 0.0;
                    clamped = true;
                } else {
                    return Err(Error::NegativeEntry {
                        row: 0,
                        col: i,
                        value: *w,
                    });
                }
            }
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::NotNormalized { sum });
        }
        if clamped {
            weights.iter_mut().for_each(|w| *w /= sum);
        }
        Ok(Self { weights })
    }

    /// Wraps the output of a computation, allowing the residual tolerance.
    pub(crate) fn from_computed(weights: Vec<f64>) -> Result<Self> {
        Self::with_tolerance(weights, RESIDUAL_TOL)
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::Empty);
        }
        Ok(Self {
            weights: vec![1.0 / n as f64; n],
        })
    }

    /// The point mass `δ_state` on `n` states.
    pub fn point_mass(n: usize, state: usize) -> Result<Self> {
        if state >= n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: state + 1,
            });
        }
        let mut weights = vec![0.0; n];
        weights[state] = 1.0;
        Ok(Self { weights })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn into_weights(self) -> Vec<f64> {
        self.weights
    }

    pub fn min(&self) -> f64 {
        self.weights.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn get(&self, state: usize) -> f64 {
        self.weights[state]
    }
}

/// Half the L1 distance between two weight vectors of equal length.
///
/// This is the unchecked kernel behind [`tv_distance`]; it is exposed for
/// hot loops that already hold validated rows.
pub fn tv_distance_slices(mu: &[f64], nu: &[f64]) -> f64 {
    0.5 * mu.iter().zip(nu).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

pub fn tv_distance(mu: &ProbabilityDistribution, nu: &ProbabilityDistribution) -> Result<f64> {
    check_dim(mu.len(), nu.len())?;
    Ok(tv_distance_slices(mu.weights(), nu.weights()).min(1.0))
}

/// A dense square matrix with nonnegative entries and unit row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct StochasticMatrix {
    entries: DMatrix<f64>,
}

impl StochasticMatrix {
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, VALIDATION_TOL)
    }

    /// Validates row sums against `tol`, clamps negative entries above
    /// `-CLAMP_TOL` to zero, and renormalizes every row not summing to 1.
    pub fn with_tolerance(mut entries: DMatrix<f64>, tol: f64) -> Result<Self> {
        check_square(&entries)?;
        let n = entries.nrows();
        for i in 0..n {
            let mut clamped = false;
            for j in 0..n {
                let v = entries[(i, j)];
                if !v.is_finite() {
                    return Err(Error::NonFinite { row: i, col: j });
                }
                if v < 0.0 {
                    if v > -CLAMP_TOL {
                        entries[(i, j)] = 0.0;
                        clamped = true;
                    } else {
                        return Err(Error::NegativeEntry {
                            row: i,
                            col: j,
                            value: v,
                        });
                    }
                }
            }
            let sum: f64 = entries.row(i).sum();
            if (sum - 1.0).abs() > tol {
                return Err(Error::RowSum {
                    row: i,
                    sum,
                    expected: 1.0,
                });
            }
            if clamped || sum != 1.0 {
                entries.row_mut(i).scale_mut(1.0 / sum);
            }
        }
        Ok(Self { entries })
    }

    pub(crate) fn from_computed(entries: DMatrix<f64>) -> Result<Self> {
        Self::with_tolerance(entries, RESIDUAL_TOL)
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(matrix_from_rows(rows)?)
    }

    pub fn identity(n: usize) -> Self {
        Self {
            entries: DMatrix::identity(n, n),
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<f64> {
        self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    /// One step of the chain from `nu`: the row vector `ν·P`.
    pub fn step(&self, nu: &ProbabilityDistribution) -> Result<ProbabilityDistribution> {
        check_dim(self.dim(), nu.len())?;
        let v = row_times(nu.weights(), &self.entries);
        ProbabilityDistribution::from_computed(v)
    }

    /// Matrix product `self · other`.
    pub fn then(&self, other: &StochasticMatrix) -> Result<StochasticMatrix> {
        check_dim(self.dim(), other.dim())?;
        Self::from_computed(&self.entries * &other.entries)
    }

    /// Convex combination `(1 - s)·self + s·other`.
    pub fn mix_with(&self, other: &StochasticMatrix, s: f64) -> Result<StochasticMatrix> {
        check_dim(self.dim(), other.dim())?;
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::out_of_range("s", s, "[0, 1]"));
        }
        Ok(Self {
            entries: &self.entries * (1.0 - s) + &other.entries * s,
        })
    }

    pub fn power(&self, t: usize) -> StochasticMatrix {
        let mut result = DMatrix::identity(self.dim(), self.dim());
        let mut base = self.entries.clone();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                result = &result * &base;
            }
            e >>= 1;
            if e > 0 {
                base = &base * &base;
            }
        }
        Self { entries: result }
    }
}

/// The lazy chain `(I + P) / 2`.
pub fn lazy(p: &StochasticMatrix) -> StochasticMatrix {
    let n = p.dim();
    StochasticMatrix {
        entries: (DMatrix::identity(n, n) + &p.entries) * 0.5,
    }
}

/// Solves `πP = π` together with `Σπ = 1`.
///
/// `P` must be irreducible and aperiodic; the error names the failed check.
pub fn stationary_distribution(p: &StochasticMatrix) -> Result<ProbabilityDistribution> {
    match structure(p.entries())? {
        Structure::Primitive => {}
        Structure::Reducible { from, to } => return Err(Error::Reducible { from, to }),
        Structure::Periodic { state, period } => return Err(Error::Periodic { state, period }),
    }
    let n = p.dim();
    let shifted = p.entries() - DMatrix::<f64>::identity(n, n);
    let pi = left_null_distribution(&shifted, "stationary distribution")?;
    let residual = (row_times(pi.weights(), p.entries()).iter())
        .zip(pi.weights())
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if residual > RESIDUAL_TOL {
        return Err(Error::Numerical {
            context: "stationary distribution",
            residual,
        });
    }
    Ok(pi)
}

/// Solves `x·M = 0` with `Σx = 1` through the overdetermined system
/// `[Mᵀ; 1ᵀ] x = e_{n+1}` in the least-squares sense.
pub(crate) fn left_null_distribution(
    m: &DMatrix<f64>,
    context: &'static str,
) -> Result<ProbabilityDistribution> {
    let n = m.nrows();
    let mut system = DMatrix::<f64>::zeros(n + 1, n);
    system.view_mut((0, 0), (n, n)).copy_from(&m.transpose());
    system.row_mut(n).fill(1.0);
    let mut rhs = DVector::<f64>::zeros(n + 1);
    rhs[n] = 1.0;
    let svd = system.svd(true, true);
    let x = svd.solve(&rhs, 1e-14).map_err(|_| Error::Numerical {
        context,
        residual: f64::NAN,
    })?;
    let mut weights: Vec<f64> = x.iter().copied().collect();
    for w in weights.iter_mut() {
        if *w < 0.0 && *w > -1e-10 {
            *w = 0.0;
        }
    }
    let sum: f64 = weights.iter().sum();
    if !(sum.is_finite() && sum > 0.0) {
        return Err(Error::Numerical {
            context,
            residual: sum,
        });
    }
    weights.iter_mut().for_each(|w| *w /= sum);
    ProbabilityDistribution::from_computed(weights).map_err(|_| Error::Numerical {
        context,
        residual: sum - 1.0,
    })
}

/// Largest detailed-balance violation `|π(x)p(x,y) − π(y)p(y,x)|` and where
/// it occurs.
pub fn detailed_balance_violation(
    p: &StochasticMatrix,
    pi: &ProbabilityDistribution,
) -> Result<(f64, usize, usize)> {
    check_dim(p.dim(), pi.len())?;
    let n = p.dim();
    let mut worst = (0.0, 0, 0);
    for x in 0..n {
        for y in (x + 1)..n {
            let v = (pi.get(x) * p.get(x, y) - pi.get(y) * p.get(y, x)).abs();
            if v > worst.0 {
                worst = (v, x, y);
            }
        }
    }
    Ok(worst)
}

pub fn is_reversible(p: &StochasticMatrix, pi: &ProbabilityDistribution, tol: f64) -> Result<bool> {
    Ok(detailed_balance_violation(p, pi)?.0 <= tol)
}

pub(crate) fn require_reversible(
    p: &StochasticMatrix,
    pi: &ProbabilityDistribution,
    tol: f64,
) -> Result<()> {
    let (violation, row, col) = detailed_balance_violation(p, pi)?;
    if violation > tol {
        return Err(Error::NotReversible {
            row,
            col,
            violation,
        });
    }
    Ok(())
}

/// Whether `M^k` is entrywise positive for some `k ≤ (n−1)² + 1`.
///
/// The positivity pattern is squared until the exponent passes the Wielandt
/// bound; a primitive pattern stays positive for every larger power, so the
/// final pattern decides the question exactly.
pub fn is_irreducible_aperiodic(m: &DMatrix<f64>) -> Result<bool> {
    check_square(m)?;
    check_nonnegative(m)?;
    let n = m.nrows();
    let wielandt = (n - 1) * (n - 1) + 1;
    let mut pattern = BitPattern::of(m);
    let mut exponent = 1usize;
    while exponent < wielandt {
        pattern = pattern.square();
        exponent *= 2;
    }
    Ok(pattern.all_set())
}

/// Diagnosis of a nonnegative matrix's positivity pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Structure {
    Primitive,
    Reducible { from: usize, to: usize },
    Periodic { state: usize, period: usize },
}

/// Classifies `m` by graph search: strong connectivity, then the period as the
/// gcd of `level(u) + 1 − level(v)` over all edges of a BFS layering.
pub fn structure(m: &DMatrix<f64>) -> Result<Structure> {
    check_square(m)?;
    check_nonnegative(m)?;
    let n = m.nrows();
    let forward = bfs_levels(n, |u, v| m[(u, v)] > 0.0);
    if let Some(to) = forward.iter().position(Option::is_none) {
        return Ok(Structure::Reducible { from: 0, to });
    }
    let backward = bfs_levels(n, |u, v| m[(v, u)] > 0.0);
    if let Some(from) = backward.iter().position(Option::is_none) {
        return Ok(Structure::Reducible { from, to: 0 });
    }
    let mut period = 0usize;
    for u in 0..n {
        for v in 0..n {
            if m[(u, v)] > 0.0 {
                let (lu, lv) = (forward[u].unwrap() as i64, forward[v].unwrap() as i64);
                period = gcd(period, (lu + 1 - lv).unsigned_abs() as usize);
            }
        }
    }
    if period == 1 {
        Ok(Structure::Primitive)
    } else {
        Ok(Structure::Periodic { state: 0, period })
    }
}

fn bfs_levels(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Option<usize>> {
    let mut level = vec![None; n];
    level[0] = Some(0);
    let mut queue = VecDeque::from([0usize]);
    while let Some(u) = queue.pop_front() {
        let next = level[u].unwrap() + 1;
        for v in 0..n {
            if level[v].is_none() && edge(u, v) {
                level[v] = Some(next);
                queue.push_back(v);
            }
        }
    }
    level
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// Boolean positivity pattern stored as one bitset per row.
struct BitPattern {
    n: usize,
    words: usize,
    bits: Vec<u64>,
}

impl BitPattern {
    fn of(m: &DMatrix<f64>) -> Self {
        let n = m.nrows();
        let words = n.div_ceil(64);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if m[(i, j)] > 0.0 {
                    bits[i * words + j / 64] |= 1 << (j % 64);
                }
            }
        }
        Self { n, words, bits }
    }

    fn square(&self) -> Self {
        let (n, words) = (self.n, self.words);
        let mut bits = vec![0u64; n * words];
        for i in 0..n {
            for j in 0..n {
                if self.bits[i * words + j / 64] >> (j % 64) & 1 == 1 {
                    for w in 0..words {
                        bits[i * words + w] |= self.bits[j * words + w];
                    }
                }
            }
        }
        Self { n, words, bits }
    }

    fn all_set(&self) -> bool {
        (0..self.n)
            .all(|i| (0..self.n).all(|j| self.bits[i * self.words + j / 64] >> (j % 64) & 1 == 1))
    }
}

/// Row vector times matrix: `(v·M)_j = Σ_i v_i M_ij`.
pub(crate) fn row_times(v: &[f64], m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.ncols();
    let mut out = vec![0.0; n];
    for (i, &vi) in v.iter().enumerate() {
        if vi == 0.0 {
            continue;
        }
        for (j, o) in out.iter_mut().enumerate() {
            *o += vi * m[(i, j)];
        }
    }
    out
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<DMatrix<f64>> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Empty);
    }
    for row in rows {
        check_dim(n, row.len())?;
    }
    Ok(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}

pub(crate) fn check_square(m: &DMatrix<f64>) -> Result<()> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Empty);
    }
    Ok(())
}

fn check_nonnegative(m: &DMatrix<f64>) -> Result<()> {
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let v = m[(i, j)];
            if !v.is_finite() {
                return Err(Error::NonFinite { row: i, col: j });
            }
            if v < 0.0 {
                return Err(Error::NegativeEntry {
                    row: i,
                    col: j,
                    value: v,
                });
            }
        }
    }
    Ok(())
}
