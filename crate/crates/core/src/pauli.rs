//! Pauli words and Pauli sums.
//!
//! A word on `n` qubits is stored as two bit masks. Bit `q` of `x` is set when
//! qubit `q` carries X or Y, bit `q` of `z` when it carries Z or Y. Qubit 0 is
//! the lowest mask bit and the leftmost letter of the string form, so `XZYI`
//! has `x = 0b0101`, `z = 0b0110`.
//!
//! Words carry no phase. Every phase produced by multiplication is folded into
//! the coefficients of a [`PauliSum`].

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};

/// Prune tolerance for algebraic passes.
pub const DEFAULT_PRUNE_TOL: f64 = 1e-12;

/// Absolute tolerance used when comparing coefficients.
pub const COEFF_EQ_TOL: f64 = 1e-10;

pub const MAX_QUBITS: usize = 64;

/// Powers of `i`, indexed by exponent mod 4.
const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

#[inline]
pub(crate) fn i_pow(exp: u32) -> Complex64 {
    I_POW[(exp & 3) as usize]
}

#[inline]
fn parity(v: u64) -> u32 {
    v.count_ones() & 1
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Letter {
    I,
    X,
    Y,
    Z,
}

impl Letter {
    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Letter::I,
            (true, false) => Letter::X,
            (true, true) => Letter::Y,
            (false, true) => Letter::Z,
        }
    }

    fn bits(self) -> (bool, bool) {
        match self {
            Letter::I => (false, false),
            Letter::X => (true, false),
            Letter::Y => (true, true),
            Letter::Z => (false, true),
        }
    }

    fn rank(self) -> u8 {
        match self {
            Letter::I => 0,
            Letter::X => 1,
            Letter::Y => 2,
            Letter::Z => 3,
        }
    }

    pub fn as_char(self) -> char {
        match self {
            Letter::I => 'I',
            Letter::X => 'X',
            Letter::Y => 'Y',
            Letter::Z => 'Z',
        }
    }

    pub fn from_char(c: char) -> Option<Self> {
        match c {
            'I' => Some(Letter::I),
            'X' => Some(Letter::X),
            'Y' => Some(Letter::Y),
            'Z' => Some(Letter::Z),
            _ => None,
        }
    }
}

/// Tensor product of single-qubit Paulis.
///
/// Ordering is lexicographic on the letter string (qubit 0 first) with
/// `I < X < Y < Z`; words on fewer qubits sort first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(into = "String", try_from = "String")]
pub struct PauliWord {
    n: usize,
    x: u64,
    z: u64,
}

impl PauliWord {
    pub fn new(n: usize, x: u64, z: u64) -> Result<Self> {
        if n == 0 || n > MAX_QUBITS {
            return Err(Error::invalid(format!(
                "qubit count {n} outside 1..={MAX_QUBITS}"
            )));
        }
        let mask = low_mask(n);
        if x & !mask != 0 || z & !mask != 0 {
            return Err(Error::invalid(format!(
                "mask has bits beyond {n} qubits"
            )));
        }
        Ok(Self { n, x, z })
    }

    #[inline]
    pub(crate) fn from_masks(n: usize, x: u64, z: u64) -> Self {
        debug_assert!(n >= 1 && n <= MAX_QUBITS);
        debug_assert!(x & !low_mask(n) == 0 && z & !low_mask(n) == 0);
        Self { n, x, z }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_masks(n, 0, 0)
    }

    /// Single non-identity letter on qubit `q`.
    pub fn single(n: usize, q: usize, letter: Letter) -> Result<Self> {
        if q >= n {
            return Err(Error::IndexOutOfRange { index: q, len: n });
        }
        let (xb, zb) = letter.bits();
        Self::new(n, (xb as u64) << q, (zb as u64) << q)
    }

    pub fn from_letters(s: &str) -> Result<Self> {
        let n = s.chars().count();
        let mut x = 0u64;
        let mut z = 0u64;
        for (q, c) in s.chars().enumerate() {
            let l = Letter::from_char(c)
                .ok_or_else(|| Error::invalid(format!("bad Pauli letter {c:?} in {s:?}")))?;
            let (xb, zb) = l.bits();
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Self::new(n, x, z)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn x_mask(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn z_mask(&self) -> u64 {
        self.z
    }

    /// Positions carrying X or Y.
    #[inline]
    pub fn flip_mask(&self) -> u64 {
        self.x
    }

    #[inline]
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn weight(&self) -> usize {
        self.support().count_ones() as usize
    }

    pub fn y_count(&self) -> usize {
        (self.x & self.z).count_ones() as usize
    }

    pub fn letter(&self, q: usize) -> Letter {
        Letter::from_bits((self.x >> q) & 1 == 1, (self.z >> q) & 1 == 1)
    }

    /// Word product without the size check: `self · other = i^k · word`.
    #[inline]
    pub(crate) fn mul_exp(&self, other: &PauliWord) -> (PauliWord, u32) {
        // P = i^{|x&z|} X^x Z^z, so moving Z^{z1} past X^{x2} costs (-1)^{|z1&x2|}.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let k = (self.x & self.z).count_ones() + (other.x & other.z).count_ones()
            + 2 * (self.z & other.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        (PauliWord { n: self.n, x, z }, k & 3)
    }

    /// Returns `(c, φ)` with `self · other = φ·c`, `φ ∈ {±1, ±i}`.
    pub fn multiply(&self, other: &PauliWord) -> Result<(PauliWord, Complex64)> {
        check_dim(self.n, other.n)?;
        let (w, k) = self.mul_exp(other);
        Ok((w, i_pow(k)))
    }

    #[inline]
    pub(crate) fn commutes_unchecked(&self, other: &PauliWord) -> bool {
        parity(self.x & other.z) == parity(self.z & other.x)
    }

    pub fn commutes(&self, other: &PauliWord) -> Result<bool> {
        check_dim(self.n, other.n)?;
        Ok(self.commutes_unchecked(other))
    }

    /// Gathers the letters at `qubits` (in the listed order) into a word on
    /// `qubits.len()` qubits.
    pub fn restrict(&self, qubits: &[usize]) -> Result<PauliWord> {
        if qubits.is_empty() {
            return Err(Error::invalid("cannot restrict to an empty qubit list"));
        }
        let mut x = 0u64;
        let mut z = 0u64;
        for (local, &q) in qubits.iter().enumerate() {
            if q >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: q,
                    len: self.n,
                });
            }
            x |= ((self.x >> q) & 1) << local;
            z |= ((self.z >> q) & 1) << local;
        }
        PauliWord::new(qubits.len(), x, z)
    }

    /// Inverse of [`restrict`](Self::restrict): places this word's letters at
    /// `qubits` of an `n`-qubit register.
    pub fn embed(&self, n: usize, qubits: &[usize]) -> Result<PauliWord> {
        check_dim(self.n, qubits.len())?;
        let mut x = 0u64;
        let mut z = 0u64;
        for (local, &q) in qubits.iter().enumerate() {
            if q >= n {
                return Err(Error::IndexOutOfRange { index: q, len: n });
            }
            x |= ((self.x >> local) & 1) << q;
            z |= ((self.z >> local) & 1) << q;
        }
        PauliWord::new(n, x, z)
    }
}

pub(crate) fn low_mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

impl Ord for PauliWord {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.n.cmp(&other.n) {
            Ordering::Equal => {}
            ord => return ord,
        }
        let diff = (self.x ^ other.x) | (self.z ^ other.z);
        if diff == 0 {
            return Ordering::Equal;
        }
        let q = diff.trailing_zeros() as usize;
        self.letter(q).rank().cmp(&other.letter(q).rank())
    }
}

impl PartialOrd for PauliWord {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for PauliWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            write!(f, "{}", self.letter(q).as_char())?;
        }
        Ok(())
    }
}

impl From<PauliWord> for String {
    fn from(w: PauliWord) -> String {
        w.to_string()
    }
}

impl TryFrom<String> for PauliWord {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl FromStr for PauliWord {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        PauliWord::from_letters(s.trim())
    }
}

/// Linear combination of Pauli words with complex coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct PauliSum {
    n: usize,
    terms: BTreeMap<PauliWord, Complex64>,
}

impl PauliSum {
    pub fn new(n: usize) -> Self {
        assert!((1..=MAX_QUBITS).contains(&n), "qubit count {n} out of range");
        Self {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_word(word: PauliWord, coeff: impl Into<Complex64>) -> Self {
        let mut s = Self::new(word.n_qubits());
        s.add_term(word, coeff.into());
        s
    }

    pub fn identity(n: usize, coeff: f64) -> Self {
        Self::from_word(PauliWord::identity(n), coeff)
    }

    pub fn from_terms<I, C>(n: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (PauliWord, C)>,
        C: Into<Complex64>,
    {
        let mut s = Self::new(n);
        for (w, c) in terms {
            check_dim(n, w.n_qubits())?;
            s.add_term(w, c.into());
        }
        Ok(s)
    }

    #[inline]
    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&PauliWord, &Complex64)> {
        self.terms.iter()
    }

    pub fn words(&self) -> impl Iterator<Item = &PauliWord> {
        self.terms.keys()
    }

    pub fn coefficient(&self, w: &PauliWord) -> Complex64 {
        self.terms.get(w).copied().unwrap_or_default()
    }

    /// Accumulates `coeff` onto `word`. Panics on a qubit-count mismatch.
    pub fn add_term(&mut self, word: PauliWord, coeff: Complex64) {
        assert_eq!(word.n_qubits(), self.n, "word size mismatch");
        *self.terms.entry(word).or_default() += coeff;
    }

    pub fn add_assign_sum(&mut self, other: &PauliSum) -> Result<()> {
        check_dim(self.n, other.n)?;
        for (w, c) in other.iter() {
            self.add_term(*w, *c);
        }
        Ok(())
    }

    pub fn scaled(&self, factor: Complex64) -> PauliSum {
        PauliSum {
            n: self.n,
            terms: self.terms.iter().map(|(w, c)| (*w, c * factor)).collect(),
        }
    }

    /// Product of two sums, term by term.
    pub fn mul(&self, other: &PauliSum) -> Result<PauliSum> {
        check_dim(self.n, other.n)?;
        let mut out = PauliSum::new(self.n);
        for (a, ca) in self.iter() {
            for (b, cb) in other.iter() {
                let (w, k) = a.mul_exp(b);
                out.add_term(w, ca * cb * i_pow(k));
            }
        }
        Ok(out)
    }

    /// Drops every term with `|c| < tol`, and exact zeros.
    pub fn prune(&self, tol: f64) -> PauliSum {
        let mut out = self.clone();
        out.prune_in_place(tol);
        out
    }

    pub fn prune_in_place(&mut self, tol: f64) {
        assert!(tol >= 0.0, "negative prune tolerance");
        self.terms.retain(|_, c| *c != Complex64::default() && c.norm() >= tol);
    }

    /// Coefficient 2-norm.
    pub fn norm(&self) -> f64 {
        self.terms.values().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest absolute imaginary part among the coefficients.
    pub fn max_imag(&self) -> f64 {
        self.terms.values().map(|c| c.im.abs()).fold(0.0, f64::max)
    }

    /// A sum of Pauli words is Hermitian iff every coefficient is real.
    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_imag() <= tol
    }

    /// Coefficient-wise equality within `tol`.
    pub fn approx_eq(&self, other: &PauliSum, tol: f64) -> bool {
        if self.n != other.n {
            return false;
        }
        let mut diff = self.clone();
        for (w, c) in other.iter() {
            diff.add_term(*w, -c);
        }
        diff.terms.values().all(|c| c.norm() <= tol)
    }

    /// `[H, P] = Σ_{A: {A,P}=0} 2 α_A · A P`.
    pub fn commutator_with_word(&self, p: &PauliWord) -> Result<PauliSum> {
        check_dim(self.n, p.n_qubits())?;
        let mut out = PauliSum::new(self.n);
        for (a, c) in self.iter() {
            if !a.commutes_unchecked(p) {
                let (w, k) = a.mul_exp(p);
                out.add_term(w, c * 2.0 * i_pow(k));
            }
        }
        out.prune_in_place(0.0);
        Ok(out)
    }

    /// `e^{-iθP} H e^{iθP}` pruned at [`DEFAULT_PRUNE_TOL`].
    pub fn conjugate_by_rotation(&self, p: &PauliWord, theta: f64) -> Result<PauliSum> {
        self.conjugate_by_rotation_with_tol(p, theta, DEFAULT_PRUNE_TOL)
    }

    pub fn conjugate_by_rotation_with_tol(
        &self,
        p: &PauliWord,
        theta: f64,
        tol: f64,
    ) -> Result<PauliSum> {
        check_dim(self.n, p.n_qubits())?;
        let (s, c) = (2.0 * theta).sin_cos();
        let mut out = PauliSum::new(self.n);
        for (a, coeff) in self.iter() {
            if a.commutes_unchecked(p) {
                out.add_term(*a, *coeff);
            } else {
                // A e^{2iθP} = cos2θ A + i sin2θ AP for {A,P} = 0
                out.add_term(*a, coeff * c);
                let (w, k) = a.mul_exp(p);
                out.add_term(w, coeff * Complex64::new(0.0, s) * i_pow(k));
            }
        }
        out.prune_in_place(tol);
        Ok(out)
    }

    /// Parses the one-term-per-line text format (`0.5 XXYZ`, `(0.1,-0.2) XZ`).
    /// Blank lines and `#` comments are ignored; repeated words accumulate.
    pub fn parse_text(text: &str) -> Result<PauliSum> {
        let mut n = None;
        let mut terms = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let (Some(cs), Some(ws), None) = (parts.next(), parts.next(), parts.next()) else {
                return Err(Error::parse(line_no, "expected `<coefficient> <letters>`"));
            };
            let coeff = parse_coeff(cs).ok_or_else(|| {
                Error::parse(line_no, format!("bad coefficient {cs:?}"))
            })?;
            let word = PauliWord::from_letters(ws)
                .map_err(|e| Error::parse(line_no, e.to_string()))?;
            match n {
                None => n = Some(word.n_qubits()),
                Some(m) if m != word.n_qubits() => {
                    return Err(Error::parse(
                        line_no,
                        format!("word has {} qubits, expected {m}", word.n_qubits()),
                    ))
                }
                _ => {}
            }
            terms.push((word, coeff));
        }
        let n = n.ok_or_else(|| Error::parse(0, "no terms"))?;
        PauliSum::from_terms(n, terms)
    }

    pub fn to_text(&self) -> String {
        self.to_string()
    }
}

fn parse_coeff(s: &str) -> Option<Complex64> {
    if let Some(inner) = s.strip_prefix('(').and_then(|r| r.strip_suffix(')')) {
        let (re, im) = inner.split_once(',')?;
        Some(Complex64::new(re.trim().parse().ok()?, im.trim().parse().ok()?))
    } else {
        Some(Complex64::new(s.parse().ok()?, 0.0))
    }
}

impl fmt::Display for PauliSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (w, c) in self.iter() {
            if c.im == 0.0 {
                writeln!(f, "{:?} {}", c.re, w)?;
            } else {
                writeln!(f, "({:?},{:?}) {}", c.re, c.im, w)?;
            }
        }
        Ok(())
    }
}
