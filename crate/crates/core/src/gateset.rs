//! The 24-gate alphabet, its Clifford group structure and gate sequences.
//!
//! Gates 1..=23 are the non-identity elements of the single-qubit Clifford
//! group (modulo phase), written as products of `H`, `X`, `Z`, `S`, `S†`.
//! Gate 24 is `T = diag(1, e^{iπ/4})`. A product such as `HS` is operator
//! notation: `S` acts first.
//!
//! Sequences are stored in reading order. The last stored gate acts first,
//! so `evaluate([g0, g1, .., gn])` is the matrix product `g0·g1·…·gn`.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_4};
use std::fmt;
use std::str::FromStr;
use std::sync::OnceLock;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::unitary::{distance, Unitary2, UNIQUENESS_EPS};

/// Size of the alphabet.
pub const NUM_GATES: usize = 24;
/// Order of the Clifford group modulo phase (identity included).
pub const CLIFFORD_ORDER: usize = 24;

const NAMES: [&str; NUM_GATES + 1] = [
    "I", "H", "X", "Z", "S", "Sd", "XH", "ZH", "SH", "SdH", "ZX", "SX", "SdX", "HS", "HSd", "ZXH",
    "SXH", "SdXH", "HSH", "HSdH", "HSX", "HSdX", "SdHS", "SHSd", "T",
];

/// One symbol of the alphabet, numbered 1..=24. Gate 24 is `T`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GateId(u8);

impl GateId {
    pub const H: GateId = GateId(1);
    pub const X: GateId = GateId(2);
    pub const Z: GateId = GateId(3);
    pub const S: GateId = GateId(4);
    pub const SD: GateId = GateId(5);
    pub const T: GateId = GateId(24);

    pub fn new(index: u32) -> Result<GateId> {
        if (1..=NUM_GATES as u32).contains(&index) {
            Ok(GateId(index as u8))
        } else {
            Err(Error::InvalidGate(index))
        }
    }

    /// Gate from a zero-based digit `0..24` (digit 0 is G1).
    #[inline]
    pub(crate) fn from_digit(d: u8) -> GateId {
        debug_assert!((d as usize) < NUM_GATES);
        GateId(d + 1)
    }

    #[inline]
    pub fn index(self) -> u8 {
        self.0
    }

    #[inline]
    pub(crate) fn digit(self) -> u8 {
        self.0 - 1
    }

    #[inline]
    pub fn is_t(self) -> bool {
        self.0 == 24
    }

    pub fn name(self) -> &'static str {
        NAMES[self.0 as usize]
    }

    pub fn all() -> impl Iterator<Item = GateId> {
        (1..=NUM_GATES as u8).map(GateId)
    }

    pub fn matrix(self) -> &'static Unitary2 {
        &gate_matrices()[self.0 as usize]
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Matrix of gate `g`.
pub fn gate_matrix(g: GateId) -> Unitary2 {
    *g.matrix()
}

fn factor_matrix(f: &str) -> Unitary2 {
    let s = FRAC_1_SQRT_2;
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    let i = Complex64::new(0.0, 1.0);
    match f {
        "H" => Unitary2::from_raw([one * s, one * s, one * s, -one * s]),
        "X" => Unitary2::from_raw([zero, one, one, zero]),
        "Z" => Unitary2::from_raw([one, zero, zero, -one]),
        "S" => Unitary2::from_raw([one, zero, zero, i]),
        "Sd" => Unitary2::from_raw([one, zero, zero, -i]),
        "T" => Unitary2::from_raw([one, zero, zero, Complex64::from_polar(1.0, FRAC_PI_4)]),
        _ => unreachable!("unknown factor {f}"),
    }
}

/// Splits a product like `SdXH` into its factor names. `S†` is accepted as
/// a spelling of `Sd`.
fn split_factors(token: &str) -> Option<Vec<&'static str>> {
    let mut out = Vec::new();
    let mut chars = token.chars().peekable();
    while let Some(ch) = chars.next() {
        let f = match ch {
            'H' => "H",
            'X' => "X",
            'Z' => "Z",
            'T' => "T",
            'I' => "I",
            'S' => match chars.peek() {
                Some('d') | Some('†') => {
                    chars.next();
                    "Sd"
                }
                _ => "S",
            },
            _ => return None,
        };
        out.push(f);
    }
    if out.is_empty() {
        None
    } else {
        Some(out)
    }
}

fn product_of(factors: &[&str]) -> Unitary2 {
    factors
        .iter()
        .filter(|f| **f != "I")
        .fold(Unitary2::IDENTITY, |acc, f| acc * factor_matrix(f))
}

/// Matrices indexed 0..=24, index 0 being the identity.
fn gate_matrices() -> &'static [Unitary2; NUM_GATES + 1] {
    static TABLE: OnceLock<[Unitary2; NUM_GATES + 1]> = OnceLock::new();
    TABLE.get_or_init(|| {
        std::array::from_fn(|i| {
            if i == 0 {
                Unitary2::IDENTITY
            } else {
                product_of(&split_factors(NAMES[i]).expect("static gate names parse"))
            }
        })
    })
}

/// Clifford element by group index 0..24 (0 = identity, k = Gk).
pub fn clifford_matrix(k: usize) -> &'static Unitary2 {
    assert!(k < CLIFFORD_ORDER);
    &gate_matrices()[k]
}

impl FromStr for GateId {
    type Err = Error;

    /// Accepts `G1`..`G24`, the names used in the alphabet table (`H`,
    /// `SdXH`, `HSd`, `T`, ...), and those names wrapped in parentheses.
    fn from_str(token: &str) -> Result<GateId> {
        let t = token.trim().trim_start_matches('(').trim_end_matches(')');
        if let Some(num) = t.strip_prefix('G') {
            let n: u32 = num
                .parse()
                .map_err(|_| Error::UnknownToken(token.to_string()))?;
            return GateId::new(n);
        }
        let factors = split_factors(t).ok_or_else(|| Error::UnknownToken(token.to_string()))?;
        let normalized: String = factors.concat();
        NAMES[1..]
            .iter()
            .position(|n| *n == normalized)
            .map(|i| GateId(i as u8 + 1))
            .ok_or_else(|| Error::UnknownToken(token.to_string()))
    }
}

/// Ordered gate sequence in reading order (last element acts first).
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GateSeq(Vec<GateId>);

impl GateSeq {
    pub fn new(gates: Vec<GateId>) -> Self {
        GateSeq(gates)
    }

    pub fn empty() -> Self {
        GateSeq(Vec::new())
    }

    /// Sequence from zero-based digits (digit 0 is G1).
    pub(crate) fn from_digits(digits: &[u8]) -> Self {
        GateSeq(digits.iter().map(|&d| GateId::from_digit(d)).collect())
    }

    pub(crate) fn digits(&self) -> Vec<u8> {
        self.0.iter().map(|g| g.digit()).collect()
    }

    pub fn gates(&self) -> &[GateId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn t_count(&self) -> usize {
        self.0.iter().filter(|g| g.is_t()).count()
    }

    /// True when no two neighbours are both Clifford and no two are both `T`.
    pub fn is_alternating(&self) -> bool {
        self.0.windows(2).all(|w| w[0].is_t() != w[1].is_t())
    }
}

impl From<Vec<GateId>> for GateSeq {
    fn from(v: Vec<GateId>) -> Self {
        GateSeq(v)
    }
}

impl fmt::Display for GateSeq {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, g) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            f.write_str(g.name())?;
        }
        Ok(())
    }
}

impl FromStr for GateSeq {
    type Err = Error;

    fn from_str(s: &str) -> Result<GateSeq> {
        // "(SH)T(SH)" style transcriptions: split parenthesised groups apart
        let spaced = s.replace('(', " (").replace(')', ") ");
        let mut out = Vec::new();
        for tok in spaced.split_whitespace() {
            if tok.starts_with('(') || tok.starts_with('G') {
                out.push(tok.parse()?);
                continue;
            }
            // run of single-letter gates written without spaces, e.g. "HTHT"
            match tok.parse::<GateId>() {
                Ok(g) => out.push(g),
                Err(e) => {
                    let factors = split_factors(tok).ok_or(e)?;
                    for f in factors {
                        out.push(f.parse()?);
                    }
                }
            }
        }
        Ok(GateSeq(out))
    }
}

/// Matrix of the sequence; the last stored gate acts first.
pub fn evaluate(seq: &GateSeq) -> Unitary2 {
    seq.0
        .iter()
        .fold(Unitary2::IDENTITY, |acc, g| acc * *g.matrix())
}

/// Multiplication and inverse tables of `{I, G1, .., G23}` modulo phase.
#[derive(Clone, Debug)]
pub struct GroupTable {
    product: [[u8; CLIFFORD_ORDER]; CLIFFORD_ORDER],
    inverse: [u8; CLIFFORD_ORDER],
}

impl GroupTable {
    /// Index of `Gi·Gj` (group indices, 0 = identity).
    #[inline]
    pub fn product(&self, i: usize, j: usize) -> usize {
        self.product[i][j] as usize
    }

    #[inline]
    pub fn inverse(&self, i: usize) -> usize {
        self.inverse[i] as usize
    }
}

/// Multiplies out every pair of Clifford elements and matches the result
/// against the set, modulo phase.
pub fn build_group_table() -> Result<GroupTable> {
    build_table_from(|k| *clifford_matrix(k))
}

fn build_table_from(elem: impl Fn(usize) -> Unitary2) -> Result<GroupTable> {
    let elems: Vec<Unitary2> = (0..CLIFFORD_ORDER).map(elem).collect();
    let mut product = [[0u8; CLIFFORD_ORDER]; CLIFFORD_ORDER];
    for i in 0..CLIFFORD_ORDER {
        for j in 0..CLIFFORD_ORDER {
            let p = elems[i] * elems[j];
            let matches: Vec<usize> = (0..CLIFFORD_ORDER)
                .filter(|&k| distance(&p, &elems[k]).value() < UNIQUENESS_EPS)
                .collect();
            if matches.len() != 1 {
                return Err(Error::ClosureViolation {
                    left: i,
                    right: j,
                    matches: matches.len(),
                });
            }
            product[i][j] = matches[0] as u8;
        }
    }
    let mut inverse = [0u8; CLIFFORD_ORDER];
    for (i, row) in product.iter().enumerate() {
        inverse[i] = row
            .iter()
            .position(|&k| k == 0)
            .expect("closed group has inverses") as u8;
    }
    Ok(GroupTable { product, inverse })
}

/// Shared instance of the Clifford table.
pub fn group_table() -> &'static GroupTable {
    static TABLE: OnceLock<GroupTable> = OnceLock::new();
    TABLE.get_or_init(|| build_group_table().expect("alphabet Clifford part is closed"))
}

#[derive(Clone, Copy, PartialEq)]
enum Sym {
    Cliff(usize),
    T,
}

/// Collapses every run of Clifford gates to at most one gate and every `TT`
/// to `S`, absorbing the result into neighbouring Clifford gates. The output
/// alternates between Clifford gates and `T` and equals the input modulo
/// phase.
pub fn reduce_clifford_run(seq: &GateSeq) -> GateSeq {
    let table = group_table();
    let mut out: Vec<Sym> = Vec::with_capacity(seq.len());

    fn push(out: &mut Vec<Sym>, table: &GroupTable, sym: Sym) {
        match sym {
            Sym::Cliff(0) => {}
            Sym::Cliff(k) => match out.last().copied() {
                Some(Sym::Cliff(prev)) => {
                    out.pop();
                    push(out, table, Sym::Cliff(table.product(prev, k)));
                }
                _ => out.push(sym),
            },
            Sym::T => match out.last() {
                Some(Sym::T) => {
                    out.pop();
                    push(out, table, Sym::Cliff(GateId::S.index() as usize));
                }
                _ => out.push(sym),
            },
        }
    }

    for g in seq.gates() {
        let sym = if g.is_t() {
            Sym::T
        } else {
            Sym::Cliff(g.index() as usize)
        };
        push(&mut out, table, sym);
    }
    GateSeq(
        out.into_iter()
            .map(|s| match s {
                Sym::T => GateId::T,
                Sym::Cliff(k) => GateId(k as u8),
            })
            .collect(),
    )
}
