//! Lattice Hamiltonians as Pauli sums, and reference-state folding.
//!
//! Sites are numbered in snake order: row `r` runs left to right when `r` is even and
//! right to left when odd. With this numbering the alternating string `0101…` is a
//! checkerboard Néel pattern on any rectangular lattice.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString, PauliSum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LatticeSpec {
    rows: usize,
    cols: usize,
    boundary: Boundary,
}

impl LatticeSpec {
    /// Periodic boundaries wrap every dimension of length ≥ 3; a periodic dimension of
    /// length 2 would double its bonds and is rejected.
    pub fn new(rows: usize, cols: usize, boundary: Boundary) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidLattice(format!("{rows}x{cols} has no sites")));
        }
        if boundary == Boundary::Periodic && (rows == 2 || cols == 2) {
            return Err(Error::InvalidLattice(format!(
                "{rows}x{cols}: a periodic dimension of length 2 duplicates bonds"
            )));
        }
        Ok(LatticeSpec {
            rows,
            cols,
            boundary,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn boundary(&self) -> Boundary {
        self.boundary
    }

    pub fn n_sites(&self) -> usize {
        self.rows * self.cols
    }

    /// Snake-order index of site `(row, col)`.
    pub fn site_index(&self, row: usize, col: usize) -> usize {
        let c = if row.is_multiple_of(2) {
            col
        } else {
            self.cols - 1 - col
        };
        row * self.cols + c
    }

    /// Nearest-neighbour pairs `(i, j)` with `i < j`, each undirected bond once, sorted.
    pub fn bonds(&self) -> Vec<(usize, usize)> {
        let wrap = |len: usize| self.boundary == Boundary::Periodic && len >= 3;
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                let a = self.site_index(r, c);
                if c + 1 < self.cols {
                    out.push(ordered(a, self.site_index(r, c + 1)));
                } else if wrap(self.cols) {
                    out.push(ordered(a, self.site_index(r, 0)));
                }
                if r + 1 < self.rows {
                    out.push(ordered(a, self.site_index(r + 1, c)));
                } else if wrap(self.rows) {
                    out.push(ordered(a, self.site_index(0, c)));
                }
            }
        }
        out.sort_unstable();
        out
    }

    /// `0101…` in snake order.
    pub fn neel_occupation(&self) -> Vec<bool> {
        (0..self.n_sites()).map(|i| i % 2 == 1).collect()
    }
}

fn ordered(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ModelKind {
    /// `Σ c S_i·S_j`.
    Heisenberg { coupling: f64 },
    /// `−t Σ a†a + U Σ n↑n↓`, two qubits per site.
    Hubbard { t: f64, u: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelSpec {
    pub kind: ModelKind,
    pub lattice: LatticeSpec,
    /// One entry per qubit; `None` means the model default (Néel for Heisenberg).
    pub reference_occupation: Option<Vec<bool>>,
}

impl ModelSpec {
    pub fn n_qubits(&self) -> usize {
        match self.kind {
            ModelKind::Heisenberg { .. } => self.lattice.n_sites(),
            ModelKind::Hubbard { .. } => 2 * self.lattice.n_sites(),
        }
    }

    pub fn n_sites(&self) -> usize {
        self.lattice.n_sites()
    }

    pub fn hamiltonian(&self) -> Result<PauliSum> {
        match self.kind {
            ModelKind::Heisenberg { coupling } => build_heisenberg(&self.lattice, coupling),
            ModelKind::Hubbard { t, u } => build_hubbard(&self.lattice, t, u),
        }
    }

    /// The reference occupation; Hubbard models have no default filling.
    pub fn reference(&self) -> Result<Vec<bool>> {
        let occ = match (&self.reference_occupation, self.kind) {
            (Some(o), _) => o.clone(),
            (None, ModelKind::Heisenberg { .. }) => self.lattice.neel_occupation(),
            (None, ModelKind::Hubbard { .. }) => {
                return Err(Error::InvalidModel(
                    "reference_occupation is required for Hubbard models".into(),
                ))
            }
        };
        if occ.len() != self.n_qubits() {
            return Err(Error::InvalidModel(format!(
                "reference_occupation has {} entries, model has {} qubits",
                occ.len(),
                self.n_qubits()
            )));
        }
        Ok(occ)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = match self.kind {
            ModelKind::Heisenberg { coupling } => coupling.is_finite(),
            ModelKind::Hubbard { t, u } => t.is_finite() && u.is_finite(),
        };
        if !finite {
            return Err(Error::InvalidModel("couplings must be finite".into()));
        }
        self.reference().map(|_| ())
    }
}

/// Parses a `0`/`1` occupation string.
pub fn parse_occupation(s: &str) -> Result<Vec<bool>> {
    s.trim()
        .chars()
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            _ => Err(Error::Parse(format!("occupation must be 0/1, found {c:?}"))),
        })
        .collect()
}

pub fn format_occupation(occ: &[bool]) -> String {
    occ.iter().map(|&b| if b { '1' } else { '0' }).collect()
}

fn real(c: f64) -> Complex64 {
    Complex64::new(c, 0.0)
}

/// `(c/4)(XX + YY + ZZ)` on sites `i`, `j`; for `i == j` this is `(3c/4) I`.
pub fn spin_dot(n: usize, i: usize, j: usize, c: f64) -> Result<PauliSum> {
    let mut out = PauliSum::new(n)?;
    for op in [Pauli::X, Pauli::Y, Pauli::Z] {
        let a = PauliString::single(n, i, op)?;
        let b = PauliString::single(n, j, op)?;
        let (ph, prod) = a.multiply(&b)?;
        out.add_term(prod, ph.apply(real(c / 4.0)))?;
    }
    Ok(out)
}

/// Antiferromagnetic Heisenberg model `Σ_⟨ij⟩ c S_i·S_j` with `S = σ/2`.
pub fn build_heisenberg(lattice: &LatticeSpec, c: f64) -> Result<PauliSum> {
    let n = lattice.n_sites();
    let mut h = PauliSum::new(n)?;
    for (i, j) in lattice.bonds() {
        h.add_sum(&spin_dot(n, i, j, c)?)?;
    }
    Ok(h)
}

/// Qubit of spin-orbital `(site, spin)`; spin 0 is ↑, 1 is ↓.
pub fn hubbard_qubit(site: usize, spin: usize) -> usize {
    2 * site + spin
}

/// Half filling with one electron per site and spins alternating on the checkerboard.
pub fn hubbard_neel_occupation(lattice: &LatticeSpec) -> Vec<bool> {
    let mut occ = vec![false; 2 * lattice.n_sites()];
    for (site, down) in lattice.neel_occupation().into_iter().enumerate() {
        occ[hubbard_qubit(site, usize::from(down))] = true;
    }
    occ
}

/// Fermi–Hubbard model under Jordan–Wigner with interleaved spin orbitals.
///
/// Hopping between orbitals `p < q` is `−(t/2)(X_p Z…Z X_q + Y_p Z…Z Y_q)`; the onsite
/// term is `(U/4)(I − Z↑)(I − Z↓)`. The identity component is kept.
pub fn build_hubbard(lattice: &LatticeSpec, t: f64, u: f64) -> Result<PauliSum> {
    let n = 2 * lattice.n_sites();
    let mut h = PauliSum::new(n)?;
    for (i, j) in lattice.bonds() {
        for spin in 0..2 {
            let (p, q) = ordered(hubbard_qubit(i, spin), hubbard_qubit(j, spin));
            for end in [Pauli::X, Pauli::Y] {
                let mut s = PauliString::identity(n)?;
                s.set(p, end)?;
                s.set(q, end)?;
                for k in p + 1..q {
                    s.set(k, Pauli::Z)?;
                }
                h.add_term(s, real(-t / 2.0))?;
            }
        }
    }
    for site in 0..lattice.n_sites() {
        let up = hubbard_qubit(site, 0);
        let dn = hubbard_qubit(site, 1);
        h.add_term(PauliString::identity(n)?, real(u / 4.0))?;
        h.add_term(PauliString::single(n, up, Pauli::Z)?, real(-u / 4.0))?;
        h.add_term(PauliString::single(n, dn, Pauli::Z)?, real(-u / 4.0))?;
        h.add_term(PauliString::z_string(n, &[up, dn])?, real(u / 4.0))?;
    }
    Ok(h)
}

/// Hamiltonian with a computational-basis reference folded into `|0…0⟩`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceFolding {
    pub flipped_sites: Vec<usize>,
    pub h0: PauliSum,
}

/// Conjugates `H` by X on every occupied qubit, so ⟨0|H0|0⟩ = ⟨occ|H|occ⟩.
pub fn fold_reference(h: &PauliSum, occupation: &[bool]) -> Result<ReferenceFolding> {
    if occupation.len() != h.n() {
        return Err(Error::DimensionMismatch {
            left: h.n(),
            right: occupation.len(),
        });
    }
    let flipped_sites: Vec<usize> = occupation
        .iter()
        .enumerate()
        .filter(|(_, &o)| o)
        .map(|(k, _)| k)
        .collect();
    let h0 = h.conjugate_by_x(&flipped_sites)?;
    Ok(ReferenceFolding { flipped_sites, h0 })
}

/// `Σᵢ Zᵢ`.
pub fn total_z(n: usize) -> Result<PauliSum> {
    let mut s = PauliSum::new(n)?;
    for k in 0..n {
        s.add_term(PauliString::single(n, k, Pauli::Z)?, real(1.0))?;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::ground_energy;

    #[test]
    fn bond_counts() {
        assert_eq!(
            LatticeSpec::new(6, 6, Boundary::Open)
                .unwrap()
                .bonds()
                .len(),
            60
        );
        assert_eq!(
            LatticeSpec::new(1, 100, Boundary::Periodic)
                .unwrap()
                .bonds()
                .len(),
            100
        );
        assert_eq!(
            LatticeSpec::new(3, 4, Boundary::Periodic)
                .unwrap()
                .bonds()
                .len(),
            24
        );
        assert_eq!(
            LatticeSpec::new(1, 1, Boundary::Open)
                .unwrap()
                .bonds()
                .len(),
            0
        );
    }

    #[test]
    fn invalid_lattices() {
        assert!(LatticeSpec::new(0, 3, Boundary::Open).is_err());
        assert!(LatticeSpec::new(2, 4, Boundary::Periodic).is_err());
        assert!(LatticeSpec::new(1, 2, Boundary::Periodic).is_err());
        assert!(LatticeSpec::new(1, 2, Boundary::Open).is_ok());
    }

    #[test]
    fn snake_neel_is_checkerboard() {
        for (rows, cols) in [(4, 4), (3, 5), (6, 6)] {
            let l = LatticeSpec::new(rows, cols, Boundary::Open).unwrap();
            let occ = l.neel_occupation();
            for r in 0..rows {
                for c in 0..cols {
                    assert_eq!(occ[l.site_index(r, c)], (r + c) % 2 == 1);
                }
            }
            // every bond joins opposite sublattices
            for (i, j) in l.bonds() {
                assert_ne!(occ[i], occ[j]);
            }
        }
    }

    #[test]
    fn heisenberg_dimer() {
        let h = build_heisenberg(&LatticeSpec::new(1, 2, Boundary::Open).unwrap(), 1.0).unwrap();
        assert_eq!(h.len(), 3);
        assert!((ground_energy(&h).unwrap() + 0.75).abs() < 1e-12);
    }

    #[test]
    fn hubbard_single_site() {
        let h = build_hubbard(&LatticeSpec::new(1, 1, Boundary::Open).unwrap(), 1.0, 1.0).unwrap();
        for (occ, want) in [
            ([false, false], 0.0),
            ([true, false], 0.0),
            ([false, true], 0.0),
            ([true, true], 1.0),
        ] {
            let e = fold_reference(&h, &occ)
                .unwrap()
                .h0
                .expectation_zero()
                .unwrap();
            assert!((e - want).abs() < 1e-15, "{occ:?}");
        }
    }

    #[test]
    fn neel_folding_energy() {
        let l = LatticeSpec::new(1, 6, Boundary::Periodic).unwrap();
        let h = build_heisenberg(&l, 1.0).unwrap();
        let f = fold_reference(&h, &l.neel_occupation()).unwrap();
        assert_eq!(f.flipped_sites, vec![1, 3, 5]);
        assert!((f.h0.expectation_zero().unwrap() + 6.0 / 4.0).abs() < 1e-15);
        assert_eq!(f.h0.len(), h.len());
    }

    #[test]
    fn folding_twice_is_identity() {
        let l = LatticeSpec::new(2, 3, Boundary::Open).unwrap();
        let h = build_hubbard(&l, 1.0, 2.0).unwrap();
        let occ: Vec<bool> = (0..12).map(|k| k % 3 == 0).collect();
        let once = fold_reference(&h, &occ).unwrap().h0;
        assert_eq!(fold_reference(&once, &occ).unwrap().h0, h);
        assert!(fold_reference(&h, &[true]).is_err());
        let zero = fold_reference(&h, &[false; 12]).unwrap();
        assert_eq!(zero.h0, h);
    }

    #[test]
    fn hubbard_requires_reference() {
        let spec = ModelSpec {
            kind: ModelKind::Hubbard { t: 1.0, u: 1.0 },
            lattice: LatticeSpec::new(1, 4, Boundary::Open).unwrap(),
            reference_occupation: None,
        };
        assert!(matches!(spec.validate(), Err(Error::InvalidModel(_))));
        let heis = ModelSpec {
            kind: ModelKind::Heisenberg { coupling: 1.0 },
            ..spec.clone()
        };
        assert_eq!(heis.reference().unwrap(), parse_occupation("0101").unwrap());
        let bad = ModelSpec {
            reference_occupation: Some(vec![true; 3]),
            ..spec
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn spin_dot_self_pair() {
        let s = spin_dot(3, 1, 1, 1.0).unwrap();
        assert_eq!(s.len(), 1);
        assert_eq!(s.coeff(&PauliString::identity(3).unwrap()), real(0.75));
    }

    #[test]
    fn occupation_parsing() {
        assert_eq!(
            parse_occupation("0110").unwrap(),
            vec![false, true, true, false]
        );
        assert!(parse_occupation("01a").is_err());
        assert_eq!(format_occupation(&[true, false]), "10");
    }
}
