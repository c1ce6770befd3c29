//! Dense Hermitian matrices with a cyclic Jacobi eigensolver, used as an
//! independent floating-point path for spectral measures, projections and
//! type distances.

use num_complex::Complex;
use num_traits::Float;

use crate::model::{Multiplicity, OperatorModel, StepVector};
use crate::scalar::Scalar;

pub const MAX_DIMENSION: usize = 64;
pub const SWEEP_BUDGET: usize = 100;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum OracleError {
    #[error("dimension {0} exceeds the oracle limit")]
    TooLarge(usize),
    #[error("entries ({i}, {j}) and ({j}, {i}) are not conjugate")]
    NotHermitian { i: usize, j: usize },
    #[error("vector of length {found} for a matrix of dimension {expected}")]
    Dimension { expected: usize, found: usize },
    #[error("no convergence after {0} sweeps")]
    NoConvergence(usize),
    #[error("model is not purely atomic")]
    NotAtomic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct HermitianMatrix<F> {
    n: usize,
    data: Vec<Complex<F>>,
}

impl<F: Float> HermitianMatrix<F> {
    pub fn from_rows(rows: Vec<Vec<Complex<F>>>) -> Result<Self, OracleError> {
        let n = rows.len();
        if n > MAX_DIMENSION {
            return Err(OracleError::TooLarge(n));
        }
        for r in &rows {
            if r.len() != n {
                return Err(OracleError::Dimension {
                    expected: n,
                    found: r.len(),
                });
            }
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, other) in rows.iter().enumerate().skip(i) {
                if row[j] != other[i].conj() {
                    return Err(OracleError::NotHermitian { i, j });
                }
            }
        }
        Ok(HermitianMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn from_real(rows: Vec<Vec<F>>) -> Result<Self, OracleError> {
        Self::from_rows(
            rows.into_iter()
                .map(|r| r.into_iter().map(|x| Complex::new(x, F::zero())).collect())
                .collect(),
        )
    }

    pub fn diagonal(values: &[F]) -> Result<Self, OracleError> {
        let n = values.len();
        if n > MAX_DIMENSION {
            return Err(OracleError::TooLarge(n));
        }
        let mut data = vec![Complex::new(F::zero(), F::zero()); n * n];
        for (i, &x) in values.iter().enumerate() {
            data[i * n + i] = Complex::new(x, F::zero());
        }
        Ok(HermitianMatrix { n, data })
    }

    /// Filled from the upper triangle; the diagonal is taken real.
    pub fn from_upper(n: usize, f: impl Fn(usize, usize) -> Complex<F>) -> Result<Self, OracleError> {
        if n > MAX_DIMENSION {
            return Err(OracleError::TooLarge(n));
        }
        let mut data = vec![Complex::new(F::zero(), F::zero()); n * n];
        for i in 0..n {
            data[i * n + i] = Complex::new(f(i, i).re, F::zero());
            for j in i + 1..n {
                let z = f(i, j);
                data[i * n + j] = z;
                data[j * n + i] = z.conj();
            }
        }
        Ok(HermitianMatrix { n, data })
    }

    pub fn dimension(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Complex<F> {
        self.data[i * self.n + j]
    }

    pub fn trace(&self) -> F {
        (0..self.n).fold(F::zero(), |acc, i| acc + self.get(i, i).re)
    }

    pub fn frobenius(&self) -> F {
        self.data.iter().fold(F::zero(), |acc, z| acc + z.norm_sqr()).sqrt()
    }

    /// `A + c · u u*`.
    pub fn plus_rank_one(&self, c: F, u: &[Complex<F>]) -> Result<Self, OracleError> {
        self.check(u)?;
        Self::from_upper(self.n, |i, j| self.get(i, j) + u[i] * u[j].conj() * c)
    }

    pub fn apply(&self, v: &[Complex<F>]) -> Result<Vec<Complex<F>>, OracleError> {
        self.check(v)?;
        Ok((0..self.n)
            .map(|i| {
                (0..self.n).fold(Complex::new(F::zero(), F::zero()), |acc, j| acc + self.get(i, j) * v[j])
            })
            .collect())
    }

    fn check(&self, v: &[Complex<F>]) -> Result<(), OracleError> {
        if v.len() != self.n {
            return Err(OracleError::Dimension {
                expected: self.n,
                found: v.len(),
            });
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigenDecomposition<F> {
    /// Ascending.
    pub eigenvalues: Vec<F>,
    /// `vectors[k]` belongs to `eigenvalues[k]`.
    pub vectors: Vec<Vec<Complex<F>>>,
    /// `‖AV − VΛ‖_max`.
    pub residual: F,
    /// `‖V*V − I‖_max`.
    pub orthonormality: F,
    pub sweeps: usize,
}

fn zero<F: Float>() -> Complex<F> {
    Complex::new(F::zero(), F::zero())
}

fn dot<F: Float>(a: &[Complex<F>], b: &[Complex<F>]) -> Complex<F> {
    a.iter().zip(b).fold(zero(), |acc, (x, y)| acc + x.conj() * y)
}

fn off_diagonal<F: Float>(a: &[Complex<F>], n: usize) -> F {
    let mut s = F::zero();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                s = s + a[i * n + j].norm_sqr();
            }
        }
    }
    s.sqrt()
}

/// Cyclic Jacobi with row-major sweep order, until the off-diagonal
/// Frobenius mass drops below `1e−14 · max(1, ‖A‖_F)`.
pub fn jacobi_eigensolve<F: Float>(m: &HermitianMatrix<F>) -> Result<EigenDecomposition<F>, OracleError> {
    let n = m.n;
    let mut a = m.data.clone();
    let mut v = vec![zero::<F>(); n * n];
    for i in 0..n {
        v[i * n + i] = Complex::new(F::one(), F::zero());
    }
    let tol = F::from(1e-14).expect("float") * F::one().max(m.frobenius());
    let mut sweeps = 0;
    while off_diagonal(&a, n) >= tol {
        if sweeps == SWEEP_BUDGET {
            return Err(OracleError::NoConvergence(SWEEP_BUDGET));
        }
        sweeps += 1;
        for p in 0..n {
            for q in p + 1..n {
                rotate(&mut a, &mut v, n, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[i * n + i].re.partial_cmp(&a[j * n + j].re).expect("finite"));
    let eigenvalues: Vec<F> = order.iter().map(|&i| a[i * n + i].re).collect();
    let vectors: Vec<Vec<Complex<F>>> = order
        .iter()
        .map(|&k| (0..n).map(|i| v[i * n + k]).collect())
        .collect();
    let mut residual = F::zero();
    let mut orthonormality = F::zero();
    for (k, x) in vectors.iter().enumerate() {
        let ax = m.apply(x)?;
        for i in 0..n {
            residual = residual.max((ax[i] - x[i] * eigenvalues[k]).norm());
        }
        for (l, y) in vectors.iter().enumerate() {
            let target = if k == l { F::one() } else { F::zero() };
            orthonormality = orthonormality.max((dot(x, y) - Complex::new(target, F::zero())).norm());
        }
    }
    Ok(EigenDecomposition {
        eigenvalues,
        vectors,
        residual,
        orthonormality,
        sweeps,
    })
}

fn rotate<F: Float>(a: &mut [Complex<F>], v: &mut [Complex<F>], n: usize, p: usize, q: usize) {
    let apq = a[p * n + q];
    let r = apq.norm();
    if r == F::zero() {
        return;
    }
    let e = apq / r;
    let app = a[p * n + p].re;
    let aqq = a[q * n + q].re;
    let two = F::one() + F::one();
    let theta = (aqq - app) / (two * r);
    let t = if theta >= F::zero() {
        F::one() / (theta + (theta * theta + F::one()).sqrt())
    } else {
        -F::one() / (-theta + (theta * theta + F::one()).sqrt())
    };
    let c = F::one() / (t * t + F::one()).sqrt();
    let s = t * c;
    let ec = e.conj();
    // columns: A ← A W, V ← V W with W = [[c, s], [−s ē, c ē]]
    for k in 0..n {
        let (xp, xq) = (a[k * n + p], a[k * n + q]);
        a[k * n + p] = xp * c - xq * ec * s;
        a[k * n + q] = xp * s + xq * ec * c;
        let (yp, yq) = (v[k * n + p], v[k * n + q]);
        v[k * n + p] = yp * c - yq * ec * s;
        v[k * n + q] = yp * s + yq * ec * c;
    }
    // rows: A ← W* A
    for k in 0..n {
        let (xp, xq) = (a[p * n + k], a[q * n + k]);
        a[p * n + k] = xp * c - xq * e * s;
        a[q * n + k] = xp * s + xq * e * c;
    }
    a[p * n + q] = zero();
    a[q * n + p] = zero();
    a[p * n + p] = Complex::new(a[p * n + p].re, F::zero());
    a[q * n + q] = Complex::new(a[q * n + q].re, F::zero());
}

impl<F: Float> EigenDecomposition<F> {
    /// Eigenvalues grouped when consecutive ones differ by at most `tol`;
    /// each cluster carries its mean and member indices.
    pub fn clusters(&self, tol: F) -> Vec<(F, Vec<usize>)> {
        let mut out: Vec<(F, Vec<usize>)> = Vec::new();
        for (k, &x) in self.eigenvalues.iter().enumerate() {
            match out.last_mut() {
                Some((_, members)) if x - self.eigenvalues[*members.last().expect("non-empty")] <= tol => {
                    members.push(k)
                }
                _ => out.push((x, vec![k])),
            }
        }
        for (mean, members) in &mut out {
            let sum = members.iter().fold(F::zero(), |acc, &k| acc + self.eigenvalues[k]);
            *mean = sum / F::from(members.len()).expect("count");
        }
        out
    }

    fn default_clusters(&self) -> Vec<(F, Vec<usize>)> {
        let scale = self
            .eigenvalues
            .iter()
            .fold(F::one(), |acc, x| acc.max(x.abs()));
        self.clusters(F::from(1e-9).expect("float") * scale)
    }

    /// `P_λ v` for the cluster `members`.
    fn project_cluster(&self, members: &[usize], v: &[Complex<F>]) -> Vec<Complex<F>> {
        let mut out = vec![zero(); v.len()];
        for &k in members {
            let c = dot(&self.vectors[k], v);
            for (o, x) in out.iter_mut().zip(&self.vectors[k]) {
                *o = *o + *x * c;
            }
        }
        out
    }
}

/// Atoms `(λ, ‖P_λ v‖²)` over the eigenvalue clusters, ascending.
pub fn oracle_spectral_measure<F: Float>(
    m: &HermitianMatrix<F>,
    v: &[Complex<F>],
) -> Result<Vec<(F, F)>, OracleError> {
    m.check(v)?;
    let d = jacobi_eigensolve(m)?;
    Ok(d.default_clusters()
        .into_iter()
        .map(|(x, members)| {
            let mass = members
                .iter()
                .fold(F::zero(), |acc, &k| acc + dot(&d.vectors[k], v).norm_sqr());
            (x, mass)
        })
        .collect())
}

/// Orthogonal projection of `v` onto `span{P_λ g : λ, g ∈ generators}`.
pub fn oracle_subspace_projection<F: Float>(
    m: &HermitianMatrix<F>,
    generators: &[Vec<Complex<F>>],
    v: &[Complex<F>],
) -> Result<Vec<Complex<F>>, OracleError> {
    m.check(v)?;
    for g in generators {
        m.check(g)?;
    }
    let d = jacobi_eigensolve(m)?;
    let drop = F::from(1e-10).expect("float");
    let mut basis: Vec<Vec<Complex<F>>> = Vec::new();
    for (_, members) in d.default_clusters() {
        for g in generators {
            let mut w = d.project_cluster(&members, g);
            let start = dot(&w, &w).re.sqrt();
            if start <= drop {
                continue;
            }
            for _ in 0..2 {
                for b in &basis {
                    let c = dot(b, &w);
                    for (x, y) in w.iter_mut().zip(b) {
                        *x = *x - *y * c;
                    }
                }
            }
            let norm = dot(&w, &w).re.sqrt();
            if norm > drop * start.max(F::one()) {
                basis.push(w.into_iter().map(|x| x / norm).collect());
            }
        }
    }
    let mut out = vec![zero(); v.len()];
    for b in &basis {
        let c = dot(b, v);
        for (o, x) in out.iter_mut().zip(b) {
            *o = *o + *x * c;
        }
    }
    Ok(out)
}

/// Per-atom amplitudes of two atomic measures over their shared support;
/// locations closer than `1e−12` are identified.
fn aligned<F: Float>(mu1: &[(F, F)], mu2: &[(F, F)]) -> Vec<(F, F)> {
    let mut all: Vec<(F, usize, F)> = mu1
        .iter()
        .map(|&(x, m)| (x, 0, m))
        .chain(mu2.iter().map(|&(x, m)| (x, 1, m)))
        .collect();
    all.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite"));
    let tol = F::from(1e-12).expect("float");
    let mut out: Vec<(F, [F; 2])> = Vec::new();
    for (x, side, m) in all {
        match out.last_mut() {
            Some((y, masses)) if x - *y <= tol => masses[side] = masses[side] + m,
            _ => {
                let mut masses = [F::zero(); 2];
                masses[side] = m;
                out.push((x, masses));
            }
        }
    }
    out.into_iter()
        .map(|(_, [a, b])| (a.max(F::zero()).sqrt(), b.max(F::zero()).sqrt()))
        .collect()
}

/// `min Σ_λ |a_λ − e^{iθ_λ} b_λ|²` over per-atom phases, in closed form.
pub fn oracle_type_distance<F: Float>(mu1: &[(F, F)], mu2: &[(F, F)]) -> F {
    aligned(mu1, mu2)
        .into_iter()
        .fold(F::zero(), |acc, (a, b)| acc + (a - b) * (a - b))
        .sqrt()
}

/// The same minimum by search over the phase grid `θ = k · 10⁻³`.
pub fn oracle_type_distance_grid<F: Float>(mu1: &[(F, F)], mu2: &[(F, F)]) -> F {
    let step = F::from(1e-3).expect("float");
    let tau = F::from(std::f64::consts::TAU).expect("float");
    let steps = (tau / step).ceil().to_usize().expect("grid size");
    let two = F::one() + F::one();
    aligned(mu1, mu2)
        .into_iter()
        .fold(F::zero(), |acc, (a, b)| {
            let best = (0..steps)
                .map(|k| {
                    let theta = step * F::from(k).expect("index");
                    a * a + b * b - two * a * b * theta.cos()
                })
                .fold(F::infinity(), F::min);
            acc + best.max(F::zero())
        })
        .sqrt()
}

/// Distance of the types of `v1`, `v2` over the span generated by
/// `generators`: projections compared directly, residual spectral measures
/// through the Hellinger form.
pub fn oracle_realization_distance<F: Float>(
    m: &HermitianMatrix<F>,
    generators: &[Vec<Complex<F>>],
    v1: &[Complex<F>],
    v2: &[Complex<F>],
) -> Result<F, OracleError> {
    let p1 = oracle_subspace_projection(m, generators, v1)?;
    let p2 = oracle_subspace_projection(m, generators, v2)?;
    let r1: Vec<Complex<F>> = v1.iter().zip(&p1).map(|(a, b)| *a - *b).collect();
    let r2: Vec<Complex<F>> = v2.iter().zip(&p2).map(|(a, b)| *a - *b).collect();
    let mu1 = oracle_spectral_measure(m, &r1)?;
    let mu2 = oracle_spectral_measure(m, &r2)?;
    let base = p1
        .iter()
        .zip(&p2)
        .fold(F::zero(), |acc, (a, b)| acc + (*a - *b).norm_sqr());
    let h = oracle_type_distance(&mu1, &mu2);
    Ok((base + h * h).sqrt())
}

/// Orthonormal coordinates for a purely atomic model: slot copies first,
/// then for every summand one coordinate per atom, scaled by `√mass`.
#[derive(Clone, Debug)]
pub struct AtomicCoordinates {
    eigenvalues: Vec<f64>,
    slot_offsets: Vec<usize>,
    summand_atoms: Vec<Vec<f64>>,
    summand_offsets: Vec<usize>,
    sqrt_mass: Vec<Vec<f64>>,
}

impl AtomicCoordinates {
    pub fn new<T: Scalar>(m: &OperatorModel<T>) -> Result<Self, OracleError> {
        let mut eigenvalues = Vec::new();
        let mut slot_offsets = Vec::new();
        for s in m.slots() {
            let Multiplicity::Finite(k) = s.multiplicity else {
                return Err(OracleError::NotAtomic);
            };
            slot_offsets.push(eigenvalues.len());
            for _ in 0..k {
                eigenvalues.push(s.eigenvalue.to_real());
            }
        }
        let mut summand_atoms = Vec::new();
        let mut summand_offsets = Vec::new();
        let mut sqrt_mass = Vec::new();
        for mu in m.summands() {
            if !mu.density().pieces().is_empty() {
                return Err(OracleError::NotAtomic);
            }
            summand_offsets.push(eigenvalues.len());
            summand_atoms.push(mu.atoms().iter().map(|(x, _)| x.to_real()).collect());
            sqrt_mass.push(mu.atoms().iter().map(|(_, w)| w.to_real().sqrt()).collect());
            eigenvalues.extend(mu.atoms().iter().map(|(x, _)| x.to_real()));
        }
        if eigenvalues.len() > MAX_DIMENSION {
            return Err(OracleError::TooLarge(eigenvalues.len()));
        }
        Ok(AtomicCoordinates {
            eigenvalues,
            slot_offsets,
            summand_atoms,
            summand_offsets,
            sqrt_mass,
        })
    }

    pub fn dimension(&self) -> usize {
        self.eigenvalues.len()
    }

    /// The operator as a diagonal matrix.
    pub fn matrix(&self) -> HermitianMatrix<f64> {
        HermitianMatrix::diagonal(&self.eigenvalues).expect("bounded dimension")
    }

    /// The operator conjugated by a unitary `u` (rows are images of the
    /// coordinate basis), so that its eigenbasis is no longer standard.
    pub fn rotated_matrix(&self, u: &[Vec<Complex<f64>>]) -> HermitianMatrix<f64> {
        let n = self.dimension();
        HermitianMatrix::from_upper(n, |i, j| {
            (0..n).fold(Complex::new(0.0, 0.0), |acc, k| {
                acc + u[k][i] * u[k][j].conj() * self.eigenvalues[k]
            })
        })
        .expect("bounded dimension")
    }

    pub fn coordinates<T: Scalar>(&self, v: &StepVector<T>) -> Vec<Complex<f64>> {
        let mut out = vec![Complex::new(0.0, 0.0); self.dimension()];
        for ((slot, copy), z) in v.slot_coords() {
            out[self.slot_offsets[*slot] + *copy as usize] = Complex::new(z.re.to_real(), z.im.to_real());
        }
        for (s, part) in v.parts().iter().enumerate() {
            for (x, z) in part.atoms() {
                let xf = x.to_real();
                if let Some(k) = self.summand_atoms[s].iter().position(|&y| y == xf) {
                    let r = self.sqrt_mass[s][k];
                    out[self.summand_offsets[s] + k] = Complex::new(z.re.to_real() * r, z.im.to_real() * r);
                }
            }
        }
        out
    }

    /// Coordinates in the basis of `rotated_matrix(u)`.
    pub fn rotated_coordinates<T: Scalar>(&self, u: &[Vec<Complex<f64>>], v: &StepVector<T>) -> Vec<Complex<f64>> {
        rotate_into(u, &self.coordinates(v))
    }
}

/// `Σ_k c_k u_k` for coordinates `c` against the rows of `u`.
pub fn rotate_into(u: &[Vec<Complex<f64>>], c: &[Complex<f64>]) -> Vec<Complex<f64>> {
    let n = c.len();
    (0..n)
        .map(|i| (0..n).fold(Complex::new(0.0, 0.0), |acc, k| acc + u[k][i] * c[k]))
        .collect()
}
