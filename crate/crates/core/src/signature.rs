//! Exact structural signatures of types.
//!
//! A signature records the normalisation constant `λ_x` and the set of
//! cells `L_b` whose direct sum is the traceless subspace `Δ_x` along which
//! deterministic events may vary. A cell is a bit string over the
//! non-trivial factors: bit 1 selects the identity on that factor, bit 0 its
//! traceless operators. The all-ones cell (the span of the identity) is
//! implicit and never stored.
//!
//! Bit strings are keyed by label. Internally the non-trivial factors are
//! sorted by name and a cell is a bitmask over that order, so tensor
//! commutativity and associativity hold without any reordering step.

use std::collections::BTreeMap;
use std::fmt;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::typelang::{desugar, SystemLabel, TypeExpr};

/// Upper bound on non-trivial factors of a single signature.
pub const MAX_FACTORS: usize = 24;

pub type Lambda = Ratio<u128>;

/// An assignment of identity (`true`) or traceless (`false`) to each
/// non-trivial factor, keyed by label name.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitString {
    bits: BTreeMap<String, bool>,
}

impl BitString {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_pairs<I, S>(pairs: I) -> Self
    where
        I: IntoIterator<Item = (S, bool)>,
        S: Into<String>,
    {
        Self {
            bits: pairs.into_iter().map(|(k, v)| (k.into(), v)).collect(),
        }
    }

    /// Reads a `0`/`1` string whose characters follow `order`.
    pub fn parse(text: &str, order: &[SystemLabel]) -> Result<Self> {
        let order: Vec<&SystemLabel> = order.iter().filter(|l| !l.is_trivial()).collect();
        if text.chars().count() != order.len() {
            return Err(Error::KeyMismatch);
        }
        let mut bits = BTreeMap::new();
        for (c, l) in text.chars().zip(order) {
            let v = match c {
                '0' => false,
                '1' => true,
                _ => return Err(Error::InvalidArgument(format!("bad bit `{c}`"))),
            };
            bits.insert(l.name.clone(), v);
        }
        Ok(Self { bits })
    }

    pub fn get(&self, label: &str) -> Option<bool> {
        self.bits.get(label).copied()
    }

    pub fn set(&mut self, label: impl Into<String>, bit: bool) {
        self.bits.insert(label.into(), bit);
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, bool)> {
        self.bits.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn is_all_ones(&self) -> bool {
        self.bits.values().all(|b| *b)
    }

    /// Renders the string with characters in `order`, skipping trivial
    /// factors and labels the string does not carry.
    pub fn render(&self, order: &[SystemLabel]) -> String {
        order
            .iter()
            .filter_map(|l| self.bits.get(&l.name))
            .map(|b| if *b { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self
            .bits
            .iter()
            .map(|(k, v)| format!("{k}={}", u8::from(*v)))
            .collect();
        write!(f, "{{{}}}", parts.join(" "))
    }
}

/// Serialised as its display form, so it can key a JSON object.
impl Serialize for BitString {
    fn serialize<S: serde::Serializer>(
        &self,
        serializer: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Dense set of cells over `k` factors, one bit per mask.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct CellSet {
    k: usize,
    words: Vec<u64>,
}

impl CellSet {
    pub(crate) fn empty(k: usize) -> Self {
        let n = 1usize << k;
        Self {
            k,
            words: vec![0; n.div_ceil(64)],
        }
    }

    fn universe_mask(&self) -> impl Iterator<Item = u64> + '_ {
        let n = 1usize << self.k;
        (0..self.words.len()).map(move |w| {
            let lo = w * 64;
            let hi = (lo + 64).min(n);
            if hi - lo == 64 {
                u64::MAX
            } else {
                (1u64 << (hi - lo)) - 1
            }
        })
    }

    pub(crate) fn all_ones(&self) -> u64 {
        (1u64 << self.k) - 1
    }

    pub(crate) fn contains(&self, mask: u64) -> bool {
        let m = mask as usize;
        self.words[m / 64] >> (m % 64) & 1 == 1
    }

    pub(crate) fn insert(&mut self, mask: u64) {
        let m = mask as usize;
        self.words[m / 64] |= 1 << (m % 64);
    }

    pub(crate) fn remove(&mut self, mask: u64) {
        let m = mask as usize;
        self.words[m / 64] &= !(1 << (m % 64));
    }

    pub(crate) fn len(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub(crate) fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.words.iter().enumerate().flat_map(|(i, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let t = w.trailing_zeros() as u64;
                w &= w - 1;
                Some(i as u64 * 64 + t)
            })
        })
    }

    /// All cells except the all-ones cell and those in `self`.
    pub(crate) fn complement(&self) -> Self {
        let words = self
            .words
            .iter()
            .zip(self.universe_mask())
            .map(|(w, u)| !w & u)
            .collect();
        let mut out = Self { k: self.k, words };
        out.remove(self.all_ones());
        out
    }

    pub(crate) fn intersection(&self, other: &Self) -> Self {
        debug_assert_eq!(self.k, other.k);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a & b)
            .collect();
        Self { k: self.k, words }
    }

    pub(crate) fn union(&self, other: &Self) -> Self {
        debug_assert_eq!(self.k, other.k);
        let words = self
            .words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| a | b)
            .collect();
        Self { k: self.k, words }
    }

    pub(crate) fn is_subset(&self, other: &Self) -> bool {
        self.words
            .iter()
            .zip(&other.words)
            .all(|(a, b)| a & !b == 0)
    }

    fn first_difference(&self, other: &Self) -> Option<u64> {
        self.words
            .iter()
            .zip(&other.words)
            .enumerate()
            .find_map(|(i, (a, b))| {
                let x = a ^ b;
                (x != 0).then(|| i as u64 * 64 + x.trailing_zeros() as u64)
            })
    }
}

/// Exact descriptor of a type: factor list, `λ_x`, and the cells of `Δ_x`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Signature {
    factors: Vec<SystemLabel>,
    keys: Vec<SystemLabel>,
    lambda: Lambda,
    total_dim: u128,
    cells: CellSet,
}

fn sorted_keys(factors: &[SystemLabel]) -> Vec<SystemLabel> {
    let mut keys: Vec<SystemLabel> = factors
        .iter()
        .filter(|l| !l.is_trivial())
        .cloned()
        .collect();
    keys.sort();
    keys
}

fn total_dim(factors: &[SystemLabel]) -> Result<u128> {
    let mut d: u128 = 1;
    for l in factors {
        d = d
            .checked_mul(l.dim as u128)
            .ok_or(Error::DimensionOverflow)?;
    }
    if d > u64::MAX as u128 {
        return Err(Error::DimensionOverflow);
    }
    Ok(d)
}

/// Position of each of `part`'s keys inside `whole`'s keys.
fn key_positions(part: &[SystemLabel], whole: &[SystemLabel]) -> Vec<u32> {
    part.iter()
        .map(|l| whole.binary_search(l).expect("key present in merged set") as u32)
        .collect()
}

fn deposit(mask: u64, positions: &[u32]) -> u64 {
    let mut out = 0u64;
    for (i, &p) in positions.iter().enumerate() {
        if mask >> i & 1 == 1 {
            out |= 1 << p;
        }
    }
    out
}

fn check_disjoint(x: &Signature, y: &Signature) -> Result<()> {
    let clash: Vec<String> = x
        .factors
        .iter()
        .filter(|a| y.factors.iter().any(|b| b.name == a.name))
        .map(|a| a.name.clone())
        .collect();
    if clash.is_empty() {
        Ok(())
    } else {
        Err(Error::LabelClash(clash))
    }
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Cell {
    Gamma,
    Delta,
    DeltaBar,
}

impl Signature {
    fn build(factors: Vec<SystemLabel>, lambda: Lambda, cells: CellSet) -> Result<Self> {
        let keys = sorted_keys(&factors);
        if keys.len() > MAX_FACTORS {
            return Err(Error::TooManyFactors(keys.len()));
        }
        let total_dim = total_dim(&factors)?;
        debug_assert_eq!(cells.k, keys.len());
        Ok(Self {
            factors,
            keys,
            lambda,
            total_dim,
            cells,
        })
    }

    /// Signature of a single elementary system: a state space.
    pub fn elementary(label: SystemLabel) -> Result<Self> {
        if label.dim < 1 {
            return Err(Error::BadDimension {
                name: label.name,
                dim: label.dim,
            });
        }
        if label.is_trivial() {
            return Self::build(vec![label], Lambda::from_integer(1), CellSet::empty(0));
        }
        let lambda = Lambda::new(1, label.dim as u128);
        let mut cells = CellSet::empty(1);
        cells.insert(0);
        Self::build(vec![label], lambda, cells)
    }

    /// Builds a signature from explicit strings. Strings must be keyed on
    /// exactly the non-trivial factors; the all-ones string is dropped.
    pub fn from_strings<I>(factors: Vec<SystemLabel>, lambda: Lambda, strings: I) -> Result<Self>
    where
        I: IntoIterator<Item = BitString>,
    {
        let keys = sorted_keys(&factors);
        if keys.len() > MAX_FACTORS {
            return Err(Error::TooManyFactors(keys.len()));
        }
        let mut cells = CellSet::empty(keys.len());
        for s in strings {
            if s.len() != keys.len() {
                return Err(Error::KeyMismatch);
            }
            let mut mask = 0u64;
            for (i, k) in keys.iter().enumerate() {
                match s.get(&k.name) {
                    Some(true) => mask |= 1 << i,
                    Some(false) => {}
                    None => return Err(Error::KeyMismatch),
                }
            }
            cells.insert(mask);
        }
        cells.remove(cells.all_ones());
        Self::build(factors, lambda, cells)
    }

    /// Factors in canonical display order, trivial ones included.
    pub fn factors(&self) -> &[SystemLabel] {
        &self.factors
    }

    /// Non-trivial factors sorted by name; bit `i` of a cell mask refers to
    /// `keys()[i]`.
    pub fn keys(&self) -> &[SystemLabel] {
        &self.keys
    }

    pub fn lambda(&self) -> Lambda {
        self.lambda
    }

    pub fn lambda_f64(&self) -> f64 {
        *self.lambda.numer() as f64 / *self.lambda.denom() as f64
    }

    pub fn total_dim(&self) -> u128 {
        self.total_dim
    }

    /// Number of stored cells (the all-ones cell excluded).
    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.len() == 0
    }

    pub(crate) fn cells(&self) -> &CellSet {
        &self.cells
    }

    pub fn contains_mask(&self, mask: u64) -> bool {
        mask < (1u64 << self.keys.len()) && self.cells.contains(mask)
    }

    pub fn masks(&self) -> impl Iterator<Item = u64> + '_ {
        self.cells.iter()
    }

    pub fn mask_to_bits(&self, mask: u64) -> BitString {
        BitString {
            bits: self
                .keys
                .iter()
                .enumerate()
                .map(|(i, k)| (k.name.clone(), mask >> i & 1 == 1))
                .collect(),
        }
    }

    pub fn bits_to_mask(&self, bits: &BitString) -> Result<u64> {
        if bits.len() != self.keys.len() {
            return Err(Error::KeyMismatch);
        }
        let mut mask = 0u64;
        for (i, k) in self.keys.iter().enumerate() {
            match bits.get(&k.name) {
                Some(true) => mask |= 1 << i,
                Some(false) => {}
                None => return Err(Error::KeyMismatch),
            }
        }
        Ok(mask)
    }

    pub fn strings(&self) -> Vec<BitString> {
        self.cells.iter().map(|m| self.mask_to_bits(m)).collect()
    }

    pub fn contains(&self, bits: &BitString) -> bool {
        self.bits_to_mask(bits)
            .map(|m| self.cells.contains(m))
            .unwrap_or(false)
    }

    /// Renders a cell in display order.
    pub fn render_mask(&self, mask: u64) -> String {
        self.factors
            .iter()
            .filter(|l| !l.is_trivial())
            .map(|l| {
                let i = self.keys.binary_search(l).expect("factor is a key");
                if mask >> i & 1 == 1 {
                    '1'
                } else {
                    '0'
                }
            })
            .collect()
    }

    /// Strings in display order, sorted lexicographically.
    pub fn rendered_strings(&self) -> Vec<String> {
        let mut v: Vec<String> = self.cells.iter().map(|m| self.render_mask(m)).collect();
        v.sort();
        v
    }

    /// Same type with factors listed in a different display order.
    pub fn with_display_order(&self, factors: Vec<SystemLabel>) -> Result<Self> {
        let mut a = factors.clone();
        let mut b = self.factors.clone();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::SpaceMismatch);
        }
        Ok(Self {
            factors,
            ..self.clone()
        })
    }

    /// Real dimension of `Δ_x`: each cell contributes `∏_{b_i = 0} (d_i² − 1)`.
    pub fn delta_dim(&self) -> u128 {
        let weights: Vec<u128> = self
            .keys
            .iter()
            .map(|l| (l.dim as u128).pow(2) - 1)
            .collect();
        self.cells
            .iter()
            .map(|m| {
                weights
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| m >> i & 1 == 0)
                    .map(|(_, w)| *w)
                    .product::<u128>()
            })
            .sum()
    }

    pub fn to_json(&self) -> SignatureJson {
        SignatureJson {
            factors: self.factors.clone(),
            lambda: LambdaJson {
                num: *self.lambda.numer() as u64,
                den: *self.lambda.denom() as u64,
            },
            strings: self.rendered_strings(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LambdaJson {
    pub num: u64,
    pub den: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureJson {
    pub factors: Vec<SystemLabel>,
    pub lambda: LambdaJson,
    pub strings: Vec<String>,
}

impl SignatureJson {
    pub fn into_signature(self) -> Result<Signature> {
        if self.lambda.den == 0 || self.lambda.num == 0 {
            return Err(Error::Format("lambda must be a positive fraction".into()));
        }
        let lambda = Lambda::new(self.lambda.num as u128, self.lambda.den as u128);
        let strings = self
            .strings
            .iter()
            .map(|s| BitString::parse(s, &self.factors))
            .collect::<Result<Vec<_>>>()?;
        Signature::from_strings(self.factors, lambda, strings)
    }
}

/// Recursive signature of a type expression.
pub fn signature_of(expr: &TypeExpr) -> Result<Signature> {
    match expr {
        TypeExpr::Elementary(l) => Signature::elementary(l.clone()),
        TypeExpr::Arrow(x, y) => arrow_sig(&signature_of(x)?, &signature_of(y)?),
        TypeExpr::Tensor(x, y) => tensor_sig(&signature_of(x)?, &signature_of(y)?),
        TypeExpr::Bar(x) => Ok(bar_sig(&signature_of(x)?)),
        TypeExpr::Cap(x, y) => cap_sig(&signature_of(x)?, &signature_of(y)?),
        TypeExpr::Comb { .. } => signature_of(&desugar(expr)?),
    }
}

/// `x̄ = x -> I`: complementary cells, `λ' = 1 / (λ d)`.
pub fn bar_sig(s: &Signature) -> Signature {
    let lambda = (s.lambda * Lambda::from_integer(s.total_dim)).recip();
    Signature {
        lambda,
        cells: s.cells.complement(),
        ..s.clone()
    }
}

struct Merge {
    factors: Vec<SystemLabel>,
    kx: usize,
    ky: usize,
    px: Vec<u32>,
    py: Vec<u32>,
    k: usize,
}

fn merge(x: &Signature, y: &Signature) -> Result<Merge> {
    check_disjoint(x, y)?;
    let factors: Vec<SystemLabel> = y.factors.iter().chain(&x.factors).cloned().collect();
    let keys = sorted_keys(&factors);
    if keys.len() > MAX_FACTORS {
        return Err(Error::TooManyFactors(keys.len()));
    }
    Ok(Merge {
        kx: x.keys.len(),
        ky: y.keys.len(),
        px: key_positions(&x.keys, &keys),
        py: key_positions(&y.keys, &keys),
        k: keys.len(),
        factors,
    })
}

/// `x ⊗ y`: cells `(Δ_x, Γ_y)`, `(Γ_x, Δ_y)`, `(Δ_x, Δ_y)`; `λ = λ_x λ_y`.
pub fn tensor_sig(x: &Signature, y: &Signature) -> Result<Signature> {
    let m = merge(x, y)?;
    let mut cells = CellSet::empty(m.k);
    let ones_x = deposit(x.cells.all_ones(), &m.px);
    let ones_y = deposit(y.cells.all_ones(), &m.py);
    let ys: Vec<u64> = y.cells.iter().map(|b| deposit(b, &m.py)).collect();
    for bx in x.cells.iter() {
        let ex = deposit(bx, &m.px);
        cells.insert(ex | ones_y);
        for &ey in &ys {
            cells.insert(ex | ey);
        }
    }
    for &ey in &ys {
        cells.insert(ones_x | ey);
    }
    debug_assert_eq!(m.kx + m.ky, m.k);
    Signature::build(m.factors, x.lambda * y.lambda, cells)
}

/// `x -> y`. A pair `(b_x, b_y)` is excluded exactly when `b_x` is the
/// identity cell or in `Δ_x` while `b_y` is the identity cell or in `Δ̄_y`.
/// `λ = λ_y / (λ_x d_x)`.
pub fn arrow_sig(x: &Signature, y: &Signature) -> Result<Signature> {
    let m = merge(x, y)?;
    let mut cells = CellSet::empty(m.k);
    let classify = |s: &Signature, b: u64| {
        if b == s.cells.all_ones() {
            Cell::Gamma
        } else if s.cells.contains(b) {
            Cell::Delta
        } else {
            Cell::DeltaBar
        }
    };
    let all_y: Vec<u64> = (0..1u64 << m.ky).map(|b| deposit(b, &m.py)).collect();
    let delta_y: Vec<u64> = y.cells.iter().map(|b| deposit(b, &m.py)).collect();
    for bx in 0..1u64 << m.kx {
        let ex = deposit(bx, &m.px);
        let partners = match classify(x, bx) {
            Cell::DeltaBar => &all_y,
            Cell::Gamma | Cell::Delta => &delta_y,
        };
        for &ey in partners {
            cells.insert(ex | ey);
        }
    }
    let lambda = y.lambda / (x.lambda * Lambda::from_integer(x.total_dim));
    Signature::build(m.factors, lambda, cells)
}

/// Intersection of two types on the same space with equal `λ`.
pub fn cap_sig(x: &Signature, y: &Signature) -> Result<Signature> {
    same_space(x, y)?;
    if x.lambda != y.lambda {
        return Err(Error::LambdaMismatch(
            x.lambda.to_string(),
            y.lambda.to_string(),
        ));
    }
    Ok(Signature {
        cells: x.cells.intersection(&y.cells),
        ..x.clone()
    })
}

/// The type whose `Δ` is the span of both operands' cells, i.e. the bar
/// of the intersection of the bars.
pub fn span_union(x: &Signature, y: &Signature) -> Result<Signature> {
    same_space(x, y)?;
    if x.lambda != y.lambda {
        return Err(Error::LambdaMismatch(
            x.lambda.to_string(),
            y.lambda.to_string(),
        ));
    }
    Ok(Signature {
        cells: x.cells.union(&y.cells),
        ..x.clone()
    })
}

fn same_space(x: &Signature, y: &Signature) -> Result<()> {
    let mut a = x.factors.clone();
    let mut b = y.factors.clone();
    a.sort();
    b.sort();
    if a != b {
        return Err(Error::SpaceMismatch);
    }
    Ok(())
}

fn factor_set(s: &Signature) -> Vec<SystemLabel> {
    let mut v = s.factors.clone();
    v.sort();
    v
}

/// Exact equality: same labelled factors, same `λ`, same cells.
pub fn types_equal(a: &Signature, b: &Signature) -> bool {
    difference(a, b).is_none()
}

/// First observed difference between two signatures, if any.
pub fn difference(a: &Signature, b: &Signature) -> Option<String> {
    if factor_set(a) != factor_set(b) {
        return Some("factor sets differ".to_string());
    }
    if a.lambda != b.lambda {
        return Some(format!("lambda differs: {} vs {}", a.lambda, b.lambda));
    }
    a.cells.first_difference(&b.cells).map(|m| {
        let side = if a.cells.contains(m) {
            "first"
        } else {
            "second"
        };
        format!(
            "string {} {} only in {side} type",
            a.render_mask(m),
            a.mask_to_bits(m)
        )
    })
}

pub fn bar_equivalent(a: &Signature, b: &Signature) -> bool {
    types_equal(a, b) || types_equal(a, &bar_sig(b))
}

pub fn delta_dim(s: &Signature) -> u128 {
    s.delta_dim()
}
