//! Local spin form of `h(s)`:
//! `H = sum_i h_ii s+_i s-_i + sum_{i<j} h_ij (s+_i s-_j + s+_j s-_i)`.
//!
//! The one-excitation states `|down ... up_i ... down>` are in bijection with the
//! site basis `|i>`, and `H` restricted to them is `h`. Qubit `i` is bit `i` of
//! the computational-basis index, with bit set meaning spin up.

use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::{AdiabaticError, HermitianOperator};

/// Largest qubit count for which the full `2^n` operator is built.
pub const FULL_SPACE_CAP: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct SpinHamiltonianTerms {
    pub n: usize,
    /// `(i, h_ii)` coefficients of `s+_i s-_i`; exact zeros omitted.
    pub diagonal: Vec<(usize, f64)>,
    /// `(i, j, h_ij)` with `i < j`, coefficients of the hopping pair; exact zeros omitted.
    pub hopping: Vec<(usize, usize, f64)>,
}

impl SpinHamiltonianTerms {
    pub fn term_count(&self) -> usize {
        self.diagonal.len() + self.hopping.len()
    }
}

pub fn spin_terms(h: &HermitianOperator) -> SpinHamiltonianTerms {
    let m = h.matrix();
    let n = h.n();
    let diagonal = (0..n).map(|i| (i, m[(i, i)])).filter(|&(_, c)| c != 0.0).collect();
    let hopping = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .map(|(i, j)| (i, j, m[(i, j)]))
        .filter(|&(_, _, c)| c != 0.0)
        .collect();
    SpinHamiltonianTerms { n, diagonal, hopping }
}

/// Rebuild the `n x n` operator on the one-excitation basis directly from the terms.
pub fn single_excitation_block(terms: &SpinHamiltonianTerms) -> HermitianOperator {
    let mut m = DMatrix::zeros(terms.n, terms.n);
    for &(i, c) in &terms.diagonal {
        m[(i, i)] = c;
    }
    for &(i, j, c) in &terms.hopping {
        m[(i, j)] = c;
        m[(j, i)] = c;
    }
    HermitianOperator(m)
}

/// `s-` on qubit `q`: `|up> -> |down>`, annihilates `|down>`.
fn lower(q: usize, state: usize) -> Option<usize> {
    (state >> q & 1 == 1).then_some(state & !(1 << q))
}

/// `s+` on qubit `q`: `|down> -> |up>`, annihilates `|up>`.
fn raise(q: usize, state: usize) -> Option<usize> {
    (state >> q & 1 == 0).then_some(state | (1 << q))
}

/// `s+_i s-_j |state>`.
fn hop(i: usize, j: usize, state: usize) -> Option<usize> {
    lower(j, state).and_then(|s| raise(i, s))
}

/// The spin Hamiltonian on the full `2^n`-dimensional qubit space, stored sparsely.
#[derive(Debug, Clone, PartialEq)]
pub struct FullSpaceOperator {
    pub qubits: usize,
    /// Nonzero entries keyed by `(row, col)`.
    pub entries: BTreeMap<(usize, usize), f64>,
}

pub fn full_space_operator(terms: &SpinHamiltonianTerms) -> Result<FullSpaceOperator, AdiabaticError> {
    let n = terms.n;
    if n > FULL_SPACE_CAP {
        return Err(AdiabaticError::SizeCap { n, cap: FULL_SPACE_CAP });
    }
    let mut entries: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    let mut add = |row: usize, col: usize, c: f64| *entries.entry((row, col)).or_insert(0.0) += c;
    for state in 0..1usize << n {
        for &(i, c) in &terms.diagonal {
            if let Some(out) = hop(i, i, state) {
                add(out, state, c);
            }
        }
        for &(i, j, c) in &terms.hopping {
            if let Some(out) = hop(i, j, state) {
                add(out, state, c);
            }
            if let Some(out) = hop(j, i, state) {
                add(out, state, c);
            }
        }
    }
    entries.retain(|_, c| *c != 0.0);
    Ok(FullSpaceOperator { qubits: n, entries })
}

impl FullSpaceOperator {
    pub fn dim(&self) -> usize {
        1 << self.qubits
    }

    /// Number of nonzero entries coupling states with different excitation counts.
    pub fn cross_sector_entries(&self) -> usize {
        self.entries.keys().filter(|&&(r, c)| r.count_ones() != c.count_ones()).count()
    }

    /// Basis states with `k` excitations, ascending.
    pub fn sector_basis(&self, k: u32) -> Vec<usize> {
        (0..self.dim()).filter(|s| s.count_ones() == k).collect()
    }

    pub fn sector_block(&self, k: u32) -> DMatrix<f64> {
        let basis = self.sector_basis(k);
        let index: BTreeMap<usize, usize> = basis.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut block = DMatrix::zeros(basis.len(), basis.len());
        for (&(r, c), &v) in &self.entries {
            if let (Some(&i), Some(&j)) = (index.get(&r), index.get(&c)) {
                block[(i, j)] = v;
            }
        }
        block
    }

    /// One-excitation block in the site order `|up_0>, |up_1>, ...`.
    pub fn one_excitation_block(&self) -> Result<HermitianOperator, AdiabaticError> {
        HermitianOperator::new(self.sector_block(1))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim(), self.dim());
        for (&(r, c), &v) in &self.entries {
            m[(r, c)] = v;
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adiabatic::{uniform_initial_hamiltonian, CompleteGraphConvention};
    use rand::Rng;

    fn random_symmetric(n: usize, seed: u64) -> HermitianOperator {
        let mut rng = crate::seed::rng(seed);
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in i..n {
                let x: f64 = rng.random_range(-1.0..1.0);
                m[(i, j)] = x;
                m[(j, i)] = x;
            }
        }
        HermitianOperator::new(m).unwrap()
    }

    #[test]
    fn read_off_initial_hamiltonian() {
        let h = uniform_initial_hamiltonian(2, 0.85, CompleteGraphConvention::WithSelfLoops).unwrap();
        let t = spin_terms(&h);
        assert_eq!(t.diagonal.len(), 2);
        for &(_, c) in &t.diagonal {
            assert!((c - 0.5).abs() < 1e-15);
        }
        assert_eq!(t.hopping.len(), 1);
        assert_eq!((t.hopping[0].0, t.hopping[0].1), (0, 1));
        assert!((t.hopping[0].2 + 0.5).abs() < 1e-15);
    }

    #[test]
    fn zero_matrix_has_no_terms() {
        let t = spin_terms(&HermitianOperator::new(DMatrix::zeros(4, 4)).unwrap());
        assert_eq!(t.term_count(), 0);
    }

    #[test]
    fn block_round_trip_is_exact() {
        let h = random_symmetric(9, 4);
        assert_eq!(single_excitation_block(&spin_terms(&h)), h);
        let full = full_space_operator(&spin_terms(&h)).unwrap();
        assert_eq!(full.one_excitation_block().unwrap(), h);
    }

    #[test]
    fn full_space_contains_the_spectrum_of_h() {
        // Oracle: diagonalize the whole 256 x 256 operator.
        let h = random_symmetric(8, 11);
        let full = full_space_operator(&spin_terms(&h)).unwrap();
        assert_eq!(full.cross_sector_entries(), 0);
        let dense = full.to_dense();
        assert!((&dense - dense.transpose()).abs().max() == 0.0);
        let all = dense.symmetric_eigenvalues();
        let block = HermitianOperator::new(full.sector_block(1)).unwrap().eigenvalues().unwrap();
        let reference = h.eigenvalues().unwrap();
        for (a, b) in block.iter().zip(&reference) {
            assert!((a - b).abs() < 1e-10);
        }
        for e in reference {
            assert!(all.iter().any(|x| (x - e).abs() < 1e-10), "eigenvalue {e} missing from full space");
        }
        // Vacuum is annihilated by every term.
        assert!(full.entries.keys().all(|&(r, c)| r != 0 && c != 0));
    }

    #[test]
    fn full_space_cap() {
        let t = SpinHamiltonianTerms { n: 15, diagonal: vec![], hopping: vec![] };
        assert!(matches!(full_space_operator(&t), Err(AdiabaticError::SizeCap { n: 15, cap: 14 })));
    }

    #[test]
    fn ladder_operators() {
        assert_eq!(raise(1, 0b001), Some(0b011));
        assert_eq!(raise(0, 0b001), None);
        assert_eq!(lower(0, 0b001), Some(0));
        assert_eq!(lower(2, 0b001), None);
        assert_eq!(hop(2, 0, 0b001), Some(0b100));
        assert_eq!(hop(1, 1, 0b010), Some(0b010));
    }
}
