use std::collections::HashMap;

use num_complex::Complex64;
use rustc_hash::{FxBuildHasher, FxHashMap};

use super::string::{PauliString, Phase, MAX_QUBITS, WORDS};
use crate::error::{Error, Result};

/// Tolerance on imaginary parts when a sum is required to be Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-10;

type TermMap = HashMap<PauliString, Complex64, FxBuildHasher>;

/// Sparse linear combination of Pauli strings on a fixed number of qubits.
///
/// No stored coefficient is exactly zero.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct PauliSum {
    n: usize,
    terms: TermMap,
}

/// What a [`PauliSum::clip`] threw away.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub struct ClipReport {
    /// Σ|c|² over deleted terms.
    pub removed_norm_sq: f64,
    /// ⟨0|deleted|0⟩.
    pub removed_energy: f64,
    pub removed_count: usize,
}

impl ClipReport {
    pub fn is_empty(&self) -> bool {
        self.removed_count == 0
    }
}

impl PauliSum {
    pub fn new(n: usize) -> Result<Self> {
        if n > MAX_QUBITS {
            return Err(Error::TooManyQubits(n));
        }
        Ok(PauliSum {
            n,
            terms: TermMap::default(),
        })
    }

    pub fn from_terms<I>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliString, Complex64)>,
    {
        let mut s = Self::new(n)?;
        for (p, c) in terms {
            s.add_term(p, c)?;
        }
        Ok(s)
    }

    /// Convenience constructor from `(text, real coefficient)` pairs.
    pub fn from_real(terms: &[(&str, f64)]) -> Result<Self> {
        let first = terms
            .first()
            .ok_or_else(|| Error::Parse("empty term list; use PauliSum::new".into()))?;
        let n = first.0.trim().chars().count();
        let mut s = Self::new(n)?;
        for (t, c) in terms {
            s.add_term(t.parse()?, Complex64::new(*c, 0.0))?;
        }
        Ok(s)
    }

    pub fn single(p: PauliString, c: Complex64) -> Self {
        let mut s = PauliSum {
            n: p.n(),
            terms: TermMap::default(),
        };
        s.add_unchecked(p, c);
        s
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliString, &Complex64)> {
        self.terms.iter()
    }

    pub fn coeff(&self, p: &PauliString) -> Complex64 {
        self.terms.get(p).copied().unwrap_or_default()
    }

    /// Terms sorted by `(x, z)` bits, for deterministic output.
    pub fn sorted_terms(&self) -> Vec<(PauliString, Complex64)> {
        let mut v: Vec<_> = self.terms.iter().map(|(p, c)| (*p, *c)).collect();
        v.sort_by_key(|a| a.0);
        v
    }

    pub fn add_term(&mut self, p: PauliString, c: Complex64) -> Result<()> {
        if p.n() != self.n {
            return Err(Error::DimensionMismatch {
                left: self.n,
                right: p.n(),
            });
        }
        self.add_unchecked(p, c);
        Ok(())
    }

    #[inline]
    pub(crate) fn add_unchecked(&mut self, p: PauliString, c: Complex64) {
        use std::collections::hash_map::Entry;
        if c == Complex64::default() {
            return;
        }
        match self.terms.entry(p) {
            Entry::Occupied(mut e) => {
                let v = *e.get() + c;
                if v == Complex64::default() {
                    e.remove();
                } else {
                    *e.get_mut() = v;
                }
            }
            Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    pub fn add_sum(&mut self, other: &PauliSum) -> Result<()> {
        self.check_dim(other.n)?;
        for (p, c) in other.iter() {
            self.add_unchecked(*p, *c);
        }
        Ok(())
    }

    pub fn scale(&mut self, s: Complex64) {
        if s == Complex64::default() {
            self.terms.clear();
            return;
        }
        for c in self.terms.values_mut() {
            *c *= s;
        }
        self.terms.retain(|_, c| *c != Complex64::default());
    }

    /// Operator product `self · other`.
    pub fn multiply(&self, other: &PauliSum) -> Result<PauliSum> {
        self.check_dim(other.n)?;
        let mut out = PauliSum::new(self.n)?;
        for (a, ca) in self.iter() {
            for (b, cb) in other.iter() {
                let (ph, prod) = a.mul_unchecked(b);
                out.add_unchecked(prod, ph.apply(ca * cb));
            }
        }
        Ok(out)
    }

    fn check_dim(&self, other: usize) -> Result<()> {
        if other != self.n {
            Err(Error::DimensionMismatch {
                left: self.n,
                right: other,
            })
        } else {
            Ok(())
        }
    }

    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    pub fn max_real(&self) -> f64 {
        self.terms.values().map(|c| c.re.abs()).fold(0.0, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    pub fn is_anti_hermitian(&self, tol: f64) -> bool {
        self.max_real() <= tol
    }

    fn require_hermitian(&self) -> Result<()> {
        let m = self.max_imag();
        if m > HERMITIAN_TOL {
            Err(Error::NotHermitian { max_imag: m })
        } else {
            Ok(())
        }
    }

    /// Trace-normalized squared Frobenius norm, Σ|c|².
    pub fn frobenius_sq(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum()
    }

    /// ⟨0…0|H|0…0⟩ without the Hermiticity check.
    pub(crate) fn diagonal_sum(&self) -> f64 {
        self.terms
            .iter()
            .filter(|(p, _)| p.is_diagonal())
            .map(|(_, c)| c.re)
            .sum()
    }

    /// ⟨0…0|H|0…0⟩ for Hermitian `H`: the sum of coefficients of Z-only strings.
    pub fn expectation_zero(&self) -> Result<f64> {
        self.require_hermitian()?;
        Ok(self.diagonal_sum())
    }

    /// Components of `H|0…0⟩`, keyed by the basis state's bit pattern (the X-bits of the
    /// contributing strings). Zero amplitudes may appear after cancellation.
    pub fn zero_amplitudes(&self) -> FxHashMap<[u64; WORDS], Complex64> {
        let mut amps: FxHashMap<[u64; WORDS], Complex64> = FxHashMap::default();
        for (p, c) in self.iter() {
            *amps.entry(*p.x_words()).or_default() += p.zero_state_phase().apply(*c);
        }
        amps
    }

    /// ⟨0|H²|0⟩ − ⟨0|H|0⟩² for Hermitian `H`.
    ///
    /// Terms sharing X-bits map |0⟩ to the same basis state, so ⟨0|H²|0⟩ = ‖H|0⟩‖² is a sum
    /// over X-buckets of the squared bucket amplitude; cost is linear in the term count.
    pub fn variance_zero(&self) -> Result<f64> {
        self.require_hermitian()?;
        Ok(variance_from_amplitudes(&self.zero_amplitudes()))
    }

    /// `Var(self + removed) − Var(self)`, where `self` is the post-clip operator.
    pub fn variance_delta(&self, removed: &PauliSum) -> Result<f64> {
        self.check_dim(removed.n)?;
        if removed.is_empty() {
            return Ok(0.0);
        }
        let amp_r = removed.zero_amplitudes();
        let mut amp_h: FxHashMap<[u64; WORDS], Complex64> =
            amp_r.keys().map(|k| (*k, Complex64::default())).collect();
        for (p, c) in self.iter() {
            if let Some(a) = amp_h.get_mut(p.x_words()) {
                *a += p.zero_state_phase().apply(*c);
            }
        }
        let zero = [0u64; WORDS];
        let mut delta = 0.0;
        for (x, ar) in &amp_r {
            if *x == zero {
                continue;
            }
            let ah = amp_h[x];
            delta += (ah + ar).norm_sqr() - ah.norm_sqr();
        }
        // The |0⟩ component enters ⟨H²⟩ as |a₀|² and ⟨H⟩² as Re(a₀)²; for Hermitian
        // input these differ only by Im(a₀)², kept for consistency with `variance_zero`.
        if let Some(ar0) = amp_r.get(&zero) {
            let ah0 = amp_h[&zero];
            let tot = ah0 + ar0;
            delta += (tot.im * tot.im) - (ah0.im * ah0.im);
        }
        Ok(delta)
    }

    /// Deletes every term with |c| < ε; the identity term is always kept.
    pub fn clip(&self, eps: f64) -> (PauliSum, ClipReport) {
        let mut kept = self.clone();
        let (report, _) = kept.clip_in_place(eps);
        (kept, report)
    }

    /// In-place [`clip`](Self::clip); also returns the deleted terms.
    pub fn clip_in_place(&mut self, eps: f64) -> (ClipReport, PauliSum) {
        let mut removed = PauliSum {
            n: self.n,
            terms: TermMap::default(),
        };
        if eps <= 0.0 {
            return (ClipReport::default(), removed);
        }
        self.terms.retain(|p, c| {
            if c.norm() < eps && !p.is_identity() {
                removed.terms.insert(*p, *c);
                false
            } else {
                true
            }
        });
        (removed.report(), removed)
    }

    /// Clip restricted to `keys`; valid when all other terms are already at or above ε.
    pub(crate) fn clip_keys(&mut self, keys: &[PauliString], eps: f64) -> (ClipReport, PauliSum) {
        let mut removed = PauliSum {
            n: self.n,
            terms: TermMap::default(),
        };
        if eps <= 0.0 {
            return (ClipReport::default(), removed);
        }
        for k in keys {
            if let Some(c) = self.terms.get(k) {
                if c.norm() < eps && !k.is_identity() {
                    removed.terms.insert(*k, *c);
                    self.terms.remove(k);
                }
            }
        }
        (removed.report(), removed)
    }

    fn report(&self) -> ClipReport {
        ClipReport {
            removed_norm_sq: self.frobenius_sq(),
            removed_energy: self.diagonal_sum(),
            removed_count: self.len(),
        }
    }

    /// Terms anticommuting with `p`, with their current coefficients.
    pub(crate) fn collect_anticommuting(
        &self,
        p: &PauliString,
        out: &mut Vec<(PauliString, Complex64)>,
    ) {
        out.clear();
        out.extend(
            self.terms
                .iter()
                .filter(|(k, _)| p.anticommutes_unchecked(k))
                .map(|(k, c)| (*k, *c)),
        );
    }

    /// Applies `U†HU`, `U = exp(-iθ/2 P)`, given the anticommuting terms of `H`.
    /// Every key whose coefficient changed is appended to `touched`.
    pub(crate) fn apply_rotation(
        &mut self,
        p: &PauliString,
        theta: f64,
        anti: &[(PauliString, Complex64)],
        touched: &mut Vec<PauliString>,
    ) {
        if anti.is_empty() {
            return;
        }
        let (s, c) = theta.sin_cos();
        for (k, coef) in anti {
            let v = coef * c;
            if v == Complex64::default() {
                self.terms.remove(k);
            } else {
                self.terms.insert(*k, v);
            }
            touched.push(*k);
        }
        for (k, coef) in anti {
            let (ph, prod) = p.mul_unchecked(k);
            self.add_unchecked(prod, (Phase::I * ph).apply(coef * s));
            touched.push(prod);
        }
    }

    pub fn evolve_in_place(&mut self, p: &PauliString, theta: f64) -> Result<()> {
        self.check_dim(p.n())?;
        let mut anti = Vec::new();
        let mut touched = Vec::new();
        self.collect_anticommuting(p, &mut anti);
        self.apply_rotation(p, theta, &anti, &mut touched);
        Ok(())
    }

    /// Heisenberg-picture rotation `U†HU` with `U = exp(-iθ/2 P)`.
    ///
    /// Each term anticommuting with `P` becomes `cos θ · P_k + i sin θ · P P_k`.
    pub fn evolve(&self, p: &PauliString, theta: f64) -> Result<PauliSum> {
        let mut out = self.clone();
        out.evolve_in_place(p, theta)?;
        Ok(out)
    }

    /// `[H, P] = HP − PH`.
    pub fn commutator(&self, p: &PauliString) -> Result<PauliSum> {
        self.check_dim(p.n())?;
        let mut out = PauliSum::new(self.n)?;
        for (k, c) in self.iter() {
            if k.anticommutes_unchecked(p) {
                let (ph, prod) = k.mul_unchecked(p);
                out.add_unchecked(prod, ph.apply(2.0 * c));
            }
        }
        Ok(out)
    }

    /// `(Π X_s) H (Π X_s)` for the given 0-based sites.
    pub fn conjugate_by_x(&self, sites: &[usize]) -> Result<PauliSum> {
        let mut mask = [0u64; WORDS];
        for &s in sites {
            if s >= self.n {
                return Err(Error::SiteOutOfRange { site: s, n: self.n });
            }
            mask[s / 64] |= 1 << (s % 64);
        }
        let mut out = self.clone();
        for (p, c) in out.terms.iter_mut() {
            let flips: u32 = (0..WORDS)
                .map(|k| (p.z_words()[k] & mask[k]).count_ones())
                .sum();
            if flips % 2 == 1 {
                *c = -*c;
            }
        }
        Ok(out)
    }
}

pub(crate) fn variance_from_amplitudes(amps: &FxHashMap<[u64; WORDS], Complex64>) -> f64 {
    let zero = [0u64; WORDS];
    let mut second = 0.0;
    for a in amps.values() {
        second += a.norm_sqr();
    }
    let e = amps.get(&zero).map(|a| a.re).unwrap_or(0.0);
    second - e * e
}
