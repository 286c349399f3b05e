use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Number of 64-bit words per bit vector.
pub const WORDS: usize = 4;
/// Largest supported qubit count.
pub const MAX_QUBITS: usize = WORDS * 64;

/// Single-qubit Pauli letter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    /// Symplectic `(x, z)` bits.
    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' | 'i' | '_' => Some(Pauli::I),
            'X' | 'x' => Some(Pauli::X),
            'Y' | 'y' => Some(Pauli::Y),
            'Z' | 'z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// A power of `i`: one of `+1, +i, -1, -i`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Phase(u8);

impl Phase {
    pub const ONE: Phase = Phase(0);
    pub const I: Phase = Phase(1);
    pub const MINUS_ONE: Phase = Phase(2);
    pub const MINUS_I: Phase = Phase(3);

    /// `i^k` for any integer `k`.
    pub fn i_pow(k: i64) -> Self {
        Phase(k.rem_euclid(4) as u8)
    }

    pub fn exponent(self) -> u8 {
        self.0
    }

    pub fn to_complex(self) -> Complex64 {
        match self.0 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        }
    }

    /// Multiplies `c` by this phase without rounding.
    #[inline]
    pub fn apply(self, c: Complex64) -> Complex64 {
        match self.0 {
            0 => c,
            1 => Complex64::new(-c.im, c.re),
            2 => -c,
            _ => Complex64::new(c.im, -c.re),
        }
    }

    pub fn conj(self) -> Self {
        Phase((4 - self.0) % 4)
    }
}

impl std::ops::Mul for Phase {
    type Output = Phase;
    fn mul(self, rhs: Phase) -> Phase {
        Phase((self.0 + rhs.0) % 4)
    }
}

/// A canonical Hermitian Pauli word in symplectic form.
///
/// Qubit `k` (0-based) lives in bit `k % 64` of word `k / 64`. Bits at or above `n` are
/// always zero, so equality and ordering on the raw words are well defined.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct PauliString {
    n: u16,
    x: [u64; WORDS],
    z: [u64; WORDS],
}

impl Hash for PauliString {
    fn hash<H: Hasher>(&self, state: &mut H) {
        let w = words_for(self.n as usize);
        for k in 0..w {
            state.write_u64(self.x[k]);
            state.write_u64(self.z[k]);
        }
    }
}

#[inline]
fn words_for(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

fn check_n(n: usize) -> Result<()> {
    if n > MAX_QUBITS {
        Err(Error::TooManyQubits(n))
    } else {
        Ok(())
    }
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_n(n)?;
        Ok(PauliString {
            n: n as u16,
            x: [0; WORDS],
            z: [0; WORDS],
        })
    }

    /// `op` on qubit `site`, identity elsewhere.
    pub fn single(n: usize, site: usize, op: Pauli) -> Result<Self> {
        let mut p = Self::identity(n)?;
        p.set(site, op)?;
        Ok(p)
    }

    pub fn from_ops(ops: &[Pauli]) -> Result<Self> {
        let mut p = Self::identity(ops.len())?;
        for (k, &op) in ops.iter().enumerate() {
            p.set_unchecked(k, op);
        }
        Ok(p)
    }

    /// Builds a string from raw words; bits beyond `n` must be clear.
    pub fn from_words(n: usize, x: [u64; WORDS], z: [u64; WORDS]) -> Result<Self> {
        check_n(n)?;
        let p = PauliString { n: n as u16, x, z };
        for k in 0..WORDS {
            let mask = valid_mask(n, k);
            if (x[k] | z[k]) & !mask != 0 {
                return Err(Error::Parse(format!("bits set beyond qubit count {n}")));
            }
        }
        Ok(p)
    }

    /// Z on every qubit in `sites`.
    pub fn z_string(n: usize, sites: &[usize]) -> Result<Self> {
        let mut p = Self::identity(n)?;
        for &s in sites {
            p.set(s, Pauli::Z)?;
        }
        Ok(p)
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    pub fn x_words(&self) -> &[u64; WORDS] {
        &self.x
    }

    #[inline]
    pub fn z_words(&self) -> &[u64; WORDS] {
        &self.z
    }

    pub fn get(&self, site: usize) -> Pauli {
        let (w, b) = (site / 64, site % 64);
        Pauli::from_bits((self.x[w] >> b) & 1 == 1, (self.z[w] >> b) & 1 == 1)
    }

    pub fn set(&mut self, site: usize, op: Pauli) -> Result<()> {
        if site >= self.n() {
            return Err(Error::SiteOutOfRange { site, n: self.n() });
        }
        self.set_unchecked(site, op);
        Ok(())
    }

    fn set_unchecked(&mut self, site: usize, op: Pauli) {
        let (w, b) = (site / 64, site % 64);
        let (x, z) = op.bits();
        self.x[w] = (self.x[w] & !(1 << b)) | ((x as u64) << b);
        self.z[w] = (self.z[w] & !(1 << b)) | ((z as u64) << b);
    }

    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(self.z.iter()).all(|&w| w == 0)
    }

    /// True when the string has no X or Y factor, i.e. it is diagonal in the computational basis.
    #[inline]
    pub fn is_diagonal(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    pub fn weight(&self) -> usize {
        (0..WORDS)
            .map(|k| (self.x[k] | self.z[k]).count_ones() as usize)
            .sum()
    }

    /// Number of Y factors.
    #[inline]
    pub fn y_count(&self) -> u32 {
        (0..WORDS)
            .map(|k| (self.x[k] & self.z[k]).count_ones())
            .sum()
    }

    /// Phase `φ` such that `self |0…0⟩ = φ |x⟩`.
    #[inline]
    pub fn zero_state_phase(&self) -> Phase {
        Phase::i_pow(self.y_count() as i64)
    }

    /// Non-checking product; callers guarantee equal qubit counts.
    #[inline]
    pub fn mul_unchecked(&self, other: &PauliString) -> (Phase, PauliString) {
        let mut x = [0u64; WORDS];
        let mut z = [0u64; WORDS];
        // P = i^{x·z} X^x Z^z, and Z^z1 X^x2 = (-1)^{z1·x2} X^x2 Z^z1.
        let mut e: u32 = 0;
        for k in 0..WORDS {
            x[k] = self.x[k] ^ other.x[k];
            z[k] = self.z[k] ^ other.z[k];
            e += (self.x[k] & self.z[k]).count_ones();
            e += (other.x[k] & other.z[k]).count_ones();
            e += 2 * (self.z[k] & other.x[k]).count_ones();
            e += 3 * (x[k] & z[k]).count_ones();
        }
        (Phase((e % 4) as u8), PauliString { n: self.n, x, z })
    }

    /// Matrix product `self · other = phase · product`.
    pub fn multiply(&self, other: &PauliString) -> Result<(Phase, PauliString)> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    #[inline]
    pub fn anticommutes_unchecked(&self, other: &PauliString) -> bool {
        let mut acc = 0u64;
        for k in 0..WORDS {
            acc ^= (self.x[k] & other.z[k]) ^ (self.z[k] & other.x[k]);
        }
        acc.count_ones() & 1 == 1
    }

    pub fn commutes(&self, other: &PauliString) -> Result<bool> {
        self.check_same(other)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    fn check_same(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            Err(Error::DimensionMismatch {
                left: self.n(),
                right: other.n(),
            })
        } else {
            Ok(())
        }
    }

    /// Compact form `x:<hex>;z:<hex>`, most significant digit first, bit 0 = first qubit.
    pub fn to_hex(&self) -> String {
        format!(
            "x:{};z:{}",
            words_to_hex(&self.x, self.n()),
            words_to_hex(&self.z, self.n())
        )
    }

    pub fn from_hex(n: usize, s: &str) -> Result<Self> {
        check_n(n)?;
        let bad = || Error::Parse(format!("bad hex Pauli string {s:?}"));
        let (xs, zs) = s.trim().split_once(';').ok_or_else(bad)?;
        let xs = xs.strip_prefix("x:").ok_or_else(bad)?;
        let zs = zs.strip_prefix("z:").ok_or_else(bad)?;
        Self::from_words(
            n,
            hex_to_words(xs).ok_or_else(bad)?,
            hex_to_words(zs).ok_or_else(bad)?,
        )
    }
}

fn valid_mask(n: usize, word: usize) -> u64 {
    let lo = word * 64;
    if n >= lo + 64 {
        u64::MAX
    } else if n <= lo {
        0
    } else {
        (1u64 << (n - lo)) - 1
    }
}

fn words_to_hex(w: &[u64; WORDS], n: usize) -> String {
    let digits = n.div_ceil(4).max(1);
    (0..digits)
        .rev()
        .map(|d| {
            let nib = (w[d / 16] >> ((d % 16) * 4)) & 0xf;
            char::from_digit(nib as u32, 16).unwrap()
        })
        .collect()
}

fn hex_to_words(s: &str) -> Option<[u64; WORDS]> {
    let mut w = [0u64; WORDS];
    for (d, c) in s.chars().rev().enumerate() {
        let v = c.to_digit(16)? as u64;
        if v != 0 && d >= WORDS * 16 {
            return None;
        }
        if d < WORDS * 16 {
            w[d / 16] |= v << ((d % 16) * 4);
        }
    }
    Some(w)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for k in 0..self.n() {
            write!(f, "{}", self.get(k).letter())?;
        }
        Ok(())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let ops = s
            .trim()
            .chars()
            .map(|c| {
                Pauli::from_letter(c)
                    .ok_or_else(|| Error::Parse(format!("bad letter {c:?} in {s:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        if ops.is_empty() {
            return Err(Error::Parse("empty Pauli string".into()));
        }
        Self::from_ops(&ops)
    }
}
