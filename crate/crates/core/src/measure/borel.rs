use std::fmt;

use super::function::PiecewiseFunction;
use super::partition::{layer_from_pieces, Ext, Interval, IntervalSet, Partitioned, StepLayer};
use super::MeasureError;
use crate::scalar::{sort_dedup, Scalar};

/// Finite positive measure on the line: finitely many atoms plus a
/// piecewise-constant density on bounded half-open pieces.
///
/// Atom locations are strictly increasing with positive masses; density
/// pieces are disjoint, sorted, positive, and merged when adjacent with
/// equal heights. Structural equality is measure equality.
#[derive(Clone, Debug, PartialEq)]
pub struct BorelMeasure<T> {
    atoms: Vec<(T, T)>,
    density: StepLayer<T, T>,
}

impl<T: Scalar> BorelMeasure<T> {
    /// Atoms `(location, mass)` and pieces `(a, b, height)`. Repeated
    /// locations and overlapping pieces add up.
    pub fn new(atoms: Vec<(T, T)>, pieces: Vec<(T, T, T)>) -> Result<Self, MeasureError> {
        for (_, m) in &atoms {
            if m.is_negative() {
                return Err(MeasureError::NegativeMass);
            }
        }
        for (a, b, h) in &pieces {
            if a >= b {
                return Err(MeasureError::EmptyInterval);
            }
            if h.is_negative() {
                return Err(MeasureError::NegativeMass);
            }
        }
        let density = layer_from_pieces(&pieces, T::zero(), |x, y| x.clone() + y.clone());
        Ok(Self::from_parts(merge_atoms(atoms), density))
    }

    pub(crate) fn from_parts(atoms: Vec<(T, T)>, density: StepLayer<T, T>) -> Self {
        debug_assert!(density.background().is_zero());
        BorelMeasure {
            atoms: atoms.into_iter().filter(|(_, m)| !m.is_zero()).collect(),
            density,
        }
    }

    pub fn zero() -> Self {
        BorelMeasure {
            atoms: Vec::new(),
            density: StepLayer::constant(T::zero()),
        }
    }

    pub fn atom(location: T, mass: T) -> Result<Self, MeasureError> {
        Self::new(vec![(location, mass)], Vec::new())
    }

    pub fn uniform(a: T, b: T, height: T) -> Result<Self, MeasureError> {
        Self::new(Vec::new(), vec![(a, b, height)])
    }

    pub fn atoms(&self) -> &[(T, T)] {
        &self.atoms
    }

    pub fn density(&self) -> &StepLayer<T, T> {
        &self.density
    }

    /// Density pieces as `(a, b, height)`.
    pub fn pieces(&self) -> Vec<(T, T, T)> {
        self.density
            .pieces()
            .iter()
            .map(|(iv, h)| {
                let (a, b) = iv.bounds().expect("density pieces are bounded");
                (a.clone(), b.clone(), h.clone())
            })
            .collect()
    }

    pub fn is_zero(&self) -> bool {
        self.atoms.is_empty() && self.density.pieces().is_empty()
    }

    pub fn mass_at(&self, x: &T) -> T {
        match self
            .atoms
            .binary_search_by(|(p, _)| p.partial_cmp(x).expect("ordered"))
        {
            Ok(i) => self.atoms[i].1.clone(),
            Err(_) => T::zero(),
        }
    }

    pub fn has_atom_at(&self, x: &T) -> bool {
        !self.mass_at(x).is_zero()
    }

    /// Density height at `x` (ignores atoms).
    pub fn height_at(&self, x: &T) -> T {
        self.density.value_at(x).clone()
    }

    /// μ(ℝ).
    pub fn total_mass(&self) -> T {
        let atoms = self
            .atoms
            .iter()
            .fold(T::zero(), |acc, (_, m)| acc + m.clone());
        self.density.pieces().iter().fold(atoms, |acc, (iv, h)| {
            acc + h.clone() * iv.length().expect("bounded")
        })
    }

    /// μ(S), exact.
    pub fn measure_of(&self, set: &IntervalSet<T>) -> T {
        let atoms = self
            .atoms
            .iter()
            .filter(|(p, _)| set.contains(p))
            .fold(T::zero(), |acc, (_, m)| acc + m.clone());
        let mut total = atoms;
        for (piece, h) in self.density.pieces() {
            for iv in set.intervals() {
                if let Some(c) = piece.intersect(iv) {
                    total = total + h.clone() * c.length().expect("bounded");
                }
            }
        }
        total
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut atoms = self.atoms.clone();
        atoms.extend(other.atoms.iter().cloned());
        let density = self.density.zip(&other.density, |a, b| a.clone() + b.clone());
        Self::from_parts(merge_atoms(atoms), density)
    }

    /// `c · μ` for `c >= 0`.
    pub fn scale(&self, c: &T) -> Self {
        assert!(!c.is_negative(), "measures scale by non-negative factors");
        let atoms = self
            .atoms
            .iter()
            .map(|(p, m)| (p.clone(), m.clone() * c.clone()))
            .collect();
        Self::from_parts(atoms, self.density.map(|h| h.clone() * c.clone()))
    }

    /// μ restricted to `S`: atoms in `S`, density on the intervals of `S`.
    pub fn restrict(&self, set: &IntervalSet<T>) -> Self {
        let atoms = self
            .atoms
            .iter()
            .filter(|(p, _)| set.contains(p))
            .cloned()
            .collect();
        let mask = StepLayer::from_sorted_cells(
            set.intervals().iter().map(|iv| (iv.clone(), true)),
            false,
        );
        let density = self
            .density
            .zip(&mask, |h, inside| if *inside { h.clone() } else { T::zero() });
        Self::from_parts(atoms, density)
    }

    /// Drops the atoms at the given locations.
    pub fn without_atoms_at(&self, locations: &[T]) -> Self {
        let atoms = self
            .atoms
            .iter()
            .filter(|(p, _)| !locations.contains(p))
            .cloned()
            .collect();
        Self::from_parts(atoms, self.density.clone())
    }

    /// Support as atoms plus half-open density pieces.
    pub fn support(&self) -> IntervalSet<T> {
        IntervalSet::new(
            self.density.pieces().iter().map(|(iv, _)| iv.clone()).collect(),
            self.atoms.iter().map(|(p, _)| p.clone()).collect(),
        )
    }

    /// Closed support: atoms plus closures of density pieces.
    pub fn closed_support(&self) -> IntervalSet<T> {
        let mut pts: Vec<T> = self.atoms.iter().map(|(p, _)| p.clone()).collect();
        for (iv, _) in self.density.pieces() {
            if let Some(b) = iv.hi().finite() {
                pts.push(b.clone());
            }
        }
        IntervalSet::new(
            self.density.pieces().iter().map(|(iv, _)| iv.clone()).collect(),
            pts,
        )
    }

    /// `dν = f dμ` for a non-negative step function `f`.
    pub fn weighted_by(&self, f: &PiecewiseFunction<T, T>) -> Result<Self, MeasureError> {
        if f.values().any(|v| v.is_negative()) {
            return Err(MeasureError::NegativeMass);
        }
        let atoms = self
            .atoms
            .iter()
            .map(|(p, m)| (p.clone(), m.clone() * f.value_at(p)))
            .collect();
        let density = self.density.zip(f.layer(), |h, v| h.clone() * v.clone());
        if density.pieces().iter().any(|(iv, _)| !iv.is_bounded()) {
            return Err(MeasureError::Unbounded);
        }
        Ok(Self::from_parts(atoms, density))
    }
}

impl<T: Scalar> Partitioned<T> for BorelMeasure<T> {
    fn collect_breaks(&self, out: &mut Vec<T>) {
        self.density.collect_breaks(out);
    }

    fn collect_points(&self, out: &mut Vec<T>) {
        out.extend(self.atoms.iter().map(|(p, _)| p.clone()));
    }
}

impl<T: Scalar + fmt::Display> fmt::Display for BorelMeasure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .atoms
            .iter()
            .map(|(p, m)| format!("{m}·δ({p})"))
            .collect();
        parts.extend(
            self.density
                .pieces()
                .iter()
                .map(|(iv, h)| format!("{h}·λ|{iv}")),
        );
        if parts.is_empty() {
            write!(f, "0")
        } else {
            write!(f, "{}", parts.join(" + "))
        }
    }
}

fn merge_atoms<T: Scalar>(mut atoms: Vec<(T, T)>) -> Vec<(T, T)> {
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("ordered"));
    let mut out: Vec<(T, T)> = Vec::with_capacity(atoms.len());
    for (p, m) in atoms {
        match out.last_mut() {
            Some((q, acc)) if *q == p => *acc = acc.clone() + m,
            _ => out.push((p, m)),
        }
    }
    out.retain(|(_, m)| !m.is_zero());
    out
}

/// Union of atom locations of both measures, sorted.
fn atom_locations<T: Scalar>(mu: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> Vec<T> {
    let mut locs: Vec<T> = mu.atoms.iter().map(|(p, _)| p.clone()).collect();
    locs.extend(nu.atoms.iter().map(|(p, _)| p.clone()));
    sort_dedup(&mut locs);
    locs
}

/// ‖μ − ν‖, the total variation norm of the signed difference.
pub fn tv_distance<T: Scalar>(mu: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> T {
    let atoms = atom_locations(mu, nu)
        .iter()
        .fold(T::zero(), |acc, p| acc + (mu.mass_at(p) - nu.mass_at(p)).abs());
    let diff = mu.density.zip(&nu.density, |a, b| (a.clone() - b.clone()).abs());
    diff.pieces().iter().fold(atoms, |acc, (iv, h)| {
        acc + h.clone() * iv.length().expect("bounded")
    })
}

/// `(√a − √b)²` without cancellation.
fn sqrt_gap_sq(a: f64, b: f64) -> f64 {
    let s = a.sqrt() + b.sqrt();
    if s == 0.0 {
        0.0
    } else {
        let d = (a - b) / s;
        d * d
    }
}

/// Unnormalised Hellinger distance √(Σ (√m_μ − √m_ν)² + ∫ (√h_μ − √h_ν)²).
pub fn hellinger_distance<T: Scalar>(mu: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> f64 {
    let mut total = 0.0;
    for p in atom_locations(mu, nu) {
        total += sqrt_gap_sq(mu.mass_at(&p).to_real(), nu.mass_at(&p).to_real());
    }
    let cells = mu.density.zip(&nu.density, |a, b| (a.clone(), b.clone()));
    for (iv, (a, b)) in cells.pieces() {
        let len = iv.length().expect("bounded").to_real();
        total += len * sqrt_gap_sq(a.to_real(), b.to_real());
    }
    total.sqrt()
}

/// Lebesgue decomposition `μ = μ_par + μ_perp` with `μ_par ≪ ν`, `μ_perp ⊥ ν`.
pub fn lebesgue_decompose<T: Scalar>(
    mu: &BorelMeasure<T>,
    nu: &BorelMeasure<T>,
) -> (BorelMeasure<T>, BorelMeasure<T>) {
    let (par_atoms, perp_atoms): (Vec<_>, Vec<_>) =
        mu.atoms.iter().cloned().partition(|(p, _)| nu.has_atom_at(p));
    let par = mu.density.zip(&nu.density, |h, g| {
        if g.is_zero() {
            T::zero()
        } else {
            h.clone()
        }
    });
    let perp = mu.density.zip(&nu.density, |h, g| {
        if g.is_zero() {
            h.clone()
        } else {
            T::zero()
        }
    });
    (
        BorelMeasure::from_parts(par_atoms, par),
        BorelMeasure::from_parts(perp_atoms, perp),
    )
}

/// μ ≪ ν.
pub fn is_abs_continuous<T: Scalar>(mu: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> bool {
    lebesgue_decompose(mu, nu).1.is_zero()
}

/// μ ⊥ ν.
pub fn is_mutually_singular<T: Scalar>(mu: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> bool {
    lebesgue_decompose(mu, nu).0.is_zero()
}

/// Failure of absolute continuity, with a set `S` such that `ν(S) = 0 < μ(S)`.
#[derive(Clone, Debug, PartialEq, thiserror::Error)]
#[error("measure is not absolutely continuous with respect to the reference measure")]
pub struct NotAbsolutelyContinuous<T: Scalar> {
    pub witness: IntervalSet<T>,
}

/// Density `f` with `dμ = f dν`.
pub fn radon_nikodym<T: Scalar>(
    mu: &BorelMeasure<T>,
    nu: &BorelMeasure<T>,
) -> Result<PiecewiseFunction<T, T>, NotAbsolutelyContinuous<T>> {
    let (_, perp) = lebesgue_decompose(mu, nu);
    if !perp.is_zero() {
        return Err(NotAbsolutelyContinuous {
            witness: singular_witness(&perp, nu),
        });
    }
    let layer = mu.density.zip(&nu.density, |h, g| {
        if g.is_zero() {
            T::zero()
        } else {
            h.clone() / g.clone()
        }
    });
    let points = nu
        .atoms
        .iter()
        .map(|(p, m)| (p.clone(), mu.mass_at(p) / m.clone()))
        .collect();
    Ok(PiecewiseFunction::from_parts(layer, points))
}

/// A set carrying positive `perp`-mass and no `nu`-mass.
fn singular_witness<T: Scalar>(perp: &BorelMeasure<T>, nu: &BorelMeasure<T>) -> IntervalSet<T> {
    if let Some((p, _)) = perp.atoms.first() {
        return IntervalSet::point(p.clone());
    }
    let (iv, _) = perp
        .density
        .pieces()
        .first()
        .expect("non-zero measure has an atom or a piece");
    let (a, b) = iv.bounds().expect("bounded");
    // dodge the atoms of nu inside [a, b)
    let inside: Vec<&T> = nu
        .atoms
        .iter()
        .map(|(p, _)| p)
        .filter(|p| a <= *p && *p < b)
        .collect();
    let lo = if inside.first() == Some(&a) {
        let next = inside.get(1).copied().unwrap_or(b);
        (a.clone() + next.clone()) * T::half()
    } else {
        a.clone()
    };
    let hi = inside
        .iter()
        .find(|p| ***p > lo)
        .map(|p| (*p).clone())
        .unwrap_or_else(|| b.clone());
    IntervalSet::interval(Interval::new(Ext::Fin(lo), Ext::Fin(hi)).expect("non-empty"))
}
