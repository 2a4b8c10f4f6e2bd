//! Systematic [n, k] MDS codes over prime fields.
//!
//! The default construction is a systematic Reed-Solomon code: evaluation
//! points `0, 1, ..., n-1` and generator row `i` equal to the Lagrange basis
//! polynomial of the `i`-th point among the first `k`, evaluated at all `n`
//! points. Codewords are evaluations of polynomials of degree `< k`, so any
//! `k` positions determine the message.
//!
//! Positions in this module are 0-based column indices.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::field::{FieldElement, FieldError, PrimeField};

/// Above this many maximal minors the MDS check samples instead of
/// enumerating.
pub const EXHAUSTIVE_MINOR_LIMIT: u64 = 100_000;
/// Number of random column sets checked when enumeration is too large.
pub const SAMPLED_MINOR_COUNT: usize = 20_000;
const SAMPLING_SEED: u64 = 0x4d44_535f_6368_6b;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CodeError {
    #[error("code length {n} exceeds field order {q}")]
    FieldTooSmall { n: usize, q: u64 },
    #[error("invalid dimensions n={n}, k={k} (need 1 <= k < n)")]
    BadDimensions { n: usize, k: usize },
    #[error("matrix is not in systematic form: entry ({row}, {col}) should be {expected}")]
    NotSystematic { row: usize, col: usize, expected: u64 },
    #[error("matrix is not MDS: columns {columns:?} are linearly dependent")]
    NotMds { columns: Vec<usize> },
    #[error("ragged matrix: row {row} has {got} entries, expected {expected}")]
    RaggedMatrix { row: usize, expected: usize, got: usize },
    #[error("expected a vector of length {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("position {position} is out of range for length {n}")]
    PositionOutOfRange { position: usize, n: usize },
    #[error("position {0} appears more than once")]
    DuplicatePosition(usize),
    #[error("columns {positions:?} form a singular submatrix")]
    SingularSubmatrix { positions: Vec<usize> },
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// A `k x n` generator matrix in systematic form `[I_k | P]` with the MDS
/// property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Generator {
    field: PrimeField,
    n: usize,
    k: usize,
    rows: Vec<Vec<FieldElement>>,
}

impl Generator {
    /// Systematic Reed-Solomon generator over `field`. Deterministic in
    /// `(n, k, q)`.
    pub fn systematic_rs(n: usize, k: usize, field: PrimeField) -> Result<Self, CodeError> {
        check_dimensions(n, k)?;
        if n as u64 > field.order() {
            return Err(CodeError::FieldTooSmall { n, q: field.order() });
        }
        let points: Vec<FieldElement> = (0..n as u64).map(|x| field.reduce(x)).collect();
        let rows = (0..k)
            .map(|i| {
                let mut denom = field.one();
                for m in (0..k).filter(|&m| m != i) {
                    denom = denom * (points[i] - points[m]);
                }
                let denom_inv = denom.inverse().expect("evaluation points are distinct");
                points
                    .iter()
                    .map(|&x| {
                        let mut num = field.one();
                        for m in (0..k).filter(|&m| m != i) {
                            num = num * (x - points[m]);
                        }
                        num * denom_inv
                    })
                    .collect()
            })
            .collect();
        let g = Self { field, n, k, rows };
        debug_assert!(g.check_systematic().is_ok());
        Ok(g)
    }

    /// Accepts an explicit row-major matrix after checking systematic form
    /// and the MDS property.
    pub fn from_explicit(rows: &[Vec<u64>], field: PrimeField) -> Result<Self, CodeError> {
        let k = rows.len();
        let n = rows.first().map_or(0, Vec::len);
        check_dimensions(n, k)?;
        let rows = rows
            .iter()
            .enumerate()
            .map(|(r, row)| {
                if row.len() != n {
                    return Err(CodeError::RaggedMatrix { row: r, expected: n, got: row.len() });
                }
                Ok(field.vector(row)?)
            })
            .collect::<Result<Vec<_>, CodeError>>()?;
        let g = Self { field, n, k, rows };
        g.check_systematic()?;
        g.verify_mds()?;
        Ok(g)
    }

    pub fn field(&self) -> PrimeField {
        self.field
    }

    /// Codeword length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Message length.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn parity_count(&self) -> usize {
        self.n - self.k
    }

    pub fn rows(&self) -> &[Vec<FieldElement>] {
        &self.rows
    }

    pub fn to_values(&self) -> Vec<Vec<u64>> {
        self.rows.iter().map(|r| r.iter().map(FieldElement::value).collect()).collect()
    }

    fn check_systematic(&self) -> Result<(), CodeError> {
        for (r, row) in self.rows.iter().enumerate() {
            for (c, x) in row.iter().take(self.k).enumerate() {
                let expected = u64::from(r == c);
                if x.value() != expected {
                    return Err(CodeError::NotSystematic { row: r, col: c, expected });
                }
            }
        }
        Ok(())
    }

    /// Checks that every `k x k` column submatrix is invertible. Exhaustive
    /// when there are at most [`EXHAUSTIVE_MINOR_LIMIT`] of them, otherwise
    /// [`SAMPLED_MINOR_COUNT`] column sets drawn with a fixed seed.
    pub fn verify_mds(&self) -> Result<(), CodeError> {
        if binomial(self.n as u64, self.k as u64) <= EXHAUSTIVE_MINOR_LIMIT {
            for cols in Combinations::new(self.n, self.k) {
                if invert(&self.submatrix(&cols)).is_none() {
                    return Err(CodeError::NotMds { columns: cols });
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(SAMPLING_SEED);
            for _ in 0..SAMPLED_MINOR_COUNT {
                let mut cols = sample(&mut rng, self.n, self.k).into_vec();
                cols.sort_unstable();
                if invert(&self.submatrix(&cols)).is_none() {
                    return Err(CodeError::NotMds { columns: cols });
                }
            }
        }
        Ok(())
    }

    fn submatrix(&self, cols: &[usize]) -> Vec<Vec<FieldElement>> {
        self.rows.iter().map(|row| cols.iter().map(|&c| row[c]).collect()).collect()
    }

    /// `message x G`. The first `k` symbols of the result are the message.
    pub fn encode(&self, message: &[FieldElement]) -> Result<Codeword, CodeError> {
        if message.len() != self.k {
            return Err(CodeError::LengthMismatch { expected: self.k, got: message.len() });
        }
        let mut out = vec![self.field.zero(); self.n];
        for (m, row) in message.iter().zip(&self.rows) {
            if m.field() != self.field {
                return Err(FieldError::FieldMismatch { left: self.field.order(), right: m.field().order() }.into());
            }
            if m.is_zero() {
                continue;
            }
            for (acc, &g) in out.iter_mut().zip(row) {
                *acc = *acc + *m * g;
            }
        }
        Ok(Codeword(out))
    }

    /// Prepares an erasure decoder for a fixed set of `k` known positions.
    pub fn erasure_decoder(&self, positions: &[usize]) -> Result<ErasureDecoder, CodeError> {
        if positions.len() != self.k {
            return Err(CodeError::LengthMismatch { expected: self.k, got: positions.len() });
        }
        let mut seen = vec![false; self.n];
        for &p in positions {
            if p >= self.n {
                return Err(CodeError::PositionOutOfRange { position: p, n: self.n });
            }
            if std::mem::replace(&mut seen[p], true) {
                return Err(CodeError::DuplicatePosition(p));
            }
        }
        let inverse = invert(&self.submatrix(positions))
            .ok_or_else(|| CodeError::SingularSubmatrix { positions: positions.to_vec() })?;
        Ok(ErasureDecoder { field: self.field, positions: positions.to_vec(), inverse })
    }

    /// Recovers the message from its codeword symbols at `positions`.
    pub fn decode_from_positions(
        &self,
        positions: &[usize],
        values: &[FieldElement],
    ) -> Result<Vec<FieldElement>, CodeError> {
        self.erasure_decoder(positions)?.decode(values)
    }
}

fn check_dimensions(n: usize, k: usize) -> Result<(), CodeError> {
    if k < 1 || k >= n {
        return Err(CodeError::BadDimensions { n, k });
    }
    Ok(())
}

/// A codeword `m x G` of length `n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Codeword(Vec<FieldElement>);

impl Codeword {
    pub fn symbols(&self) -> &[FieldElement] {
        &self.0
    }

    /// The trailing `n - k` parity symbols.
    pub fn parity(&self, k: usize) -> &[FieldElement] {
        &self.0[k..]
    }

    pub fn values(&self) -> Vec<u64> {
        self.0.iter().map(FieldElement::value).collect()
    }

    pub fn into_inner(self) -> Vec<FieldElement> {
        self.0
    }
}

/// Inverse of a `k x k` column submatrix, reusable across every symbol
/// position that shares the same known positions.
#[derive(Debug, Clone)]
pub struct ErasureDecoder {
    field: PrimeField,
    positions: Vec<usize>,
    inverse: Vec<Vec<FieldElement>>,
}

impl ErasureDecoder {
    pub fn positions(&self) -> &[usize] {
        &self.positions
    }

    /// Solves `m x G_P = values` as `m = values x G_P^{-1}`.
    pub fn decode(&self, values: &[FieldElement]) -> Result<Vec<FieldElement>, CodeError> {
        let k = self.positions.len();
        if values.len() != k {
            return Err(CodeError::LengthMismatch { expected: k, got: values.len() });
        }
        let mut out = vec![self.field.zero(); k];
        for (v, row) in values.iter().zip(&self.inverse) {
            for (acc, &x) in out.iter_mut().zip(row) {
                *acc = (*v).checked_mul(x).and_then(|p| acc.checked_add(p))?;
            }
        }
        Ok(out)
    }
}

/// Gauss-Jordan inversion of a square matrix. `None` if singular.
pub fn invert(matrix: &[Vec<FieldElement>]) -> Option<Vec<Vec<FieldElement>>> {
    let k = matrix.len();
    let field = matrix.first()?.first()?.field();
    let mut aug: Vec<Vec<FieldElement>> = matrix
        .iter()
        .enumerate()
        .map(|(r, row)| {
            let mut out = row.clone();
            out.extend((0..k).map(|c| if c == r { field.one() } else { field.zero() }));
            out
        })
        .collect();

    for col in 0..k {
        let pivot = (col..k).find(|&r| !aug[r][col].is_zero())?;
        aug.swap(col, pivot);
        let inv = aug[col][col].inverse().ok()?;
        for x in aug[col].iter_mut() {
            *x = *x * inv;
        }
        for r in 0..k {
            if r == col || aug[r][col].is_zero() {
                continue;
            }
            let factor = aug[r][col];
            for c in col..2 * k {
                let delta = factor * aug[col][c];
                aug[r][c] = aug[r][c] - delta;
            }
        }
    }
    Some(aug.into_iter().map(|row| row[k..].to_vec()).collect())
}

/// `C(n, k)`, saturating at `u64::MAX`.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Lexicographic `k`-subsets of `0..n`.
#[derive(Debug, Clone)]
pub struct Combinations {
    n: usize,
    current: Option<Vec<usize>>,
}

impl Combinations {
    pub fn new(n: usize, k: usize) -> Self {
        let current = (k <= n).then(|| (0..k).collect());
        Self { n, current }
    }
}

impl Iterator for Combinations {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.clone()?;
        let k = out.len();
        let mut next = out.clone();
        let mut i = k;
        loop {
            if i == 0 {
                self.current = None;
                break;
            }
            i -= 1;
            if next[i] < self.n - k + i {
                next[i] += 1;
                for j in i + 1..k {
                    next[j] = next[j - 1] + 1;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}
