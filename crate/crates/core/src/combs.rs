//! Combs: the even-leading-run characterisation of comb cells, riffle
//! interleavings of teeth, and exact checks of the interleaving and
//! comb-to-comb structure theorems on bit-string sets.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::signature::{
    arrow_sig, cap_sig, difference, signature_of, span_union, tensor_sig, types_equal, BitString,
    Lambda, Signature,
};
use crate::typelang::{desugar_comb, SystemLabel, TypeExpr};

/// Default bound on `m + n` for the theorem checks.
pub const DEFAULT_SIZE_LIMIT: usize = 6;

/// An `n`-comb on `A_0 … A_{2n-1}` whose teeth `(A_{2j}, A_{2j+1})` are
/// visited in the order `perm[0], perm[1], …`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CombSpec {
    pub n: usize,
    pub labels: Vec<SystemLabel>,
    pub perm: Vec<usize>,
}

impl CombSpec {
    pub fn new(n: usize, labels: Vec<SystemLabel>) -> Result<Self> {
        Self::with_perm(n, labels, (0..n).collect())
    }

    pub fn with_perm(n: usize, labels: Vec<SystemLabel>, perm: Vec<usize>) -> Result<Self> {
        if n < 1 {
            return Err(Error::EmptyComb);
        }
        if labels.len() != 2 * n {
            return Err(Error::CombArity {
                n,
                expected: 2 * n,
                got: labels.len(),
            });
        }
        let mut seen = vec![false; n];
        if perm.len() != n {
            return Err(Error::InvalidArgument(format!(
                "permutation of length {} for {n} teeth",
                perm.len()
            )));
        }
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::InvalidArgument(format!(
                    "{perm:?} is not a permutation"
                )));
            }
            seen[p] = true;
        }
        Ok(Self { n, labels, perm })
    }

    /// Labels in visiting order.
    pub fn ordered_labels(&self) -> Vec<SystemLabel> {
        self.perm
            .iter()
            .flat_map(|&t| [self.labels[2 * t].clone(), self.labels[2 * t + 1].clone()])
            .collect()
    }
}

/// Cells of the `n`-comb on `labels`, read with `A_{2n-1}` as the leading
/// position: the leading run of ones has even length and some bit is zero.
pub fn comb_strings(n: usize, labels: &[SystemLabel]) -> Result<BTreeSet<BitString>> {
    if labels.len() != 2 * n || n < 1 {
        return Err(Error::CombArity {
            n,
            expected: 2 * n,
            got: labels.len(),
        });
    }
    let width = 2 * n;
    let mut out = BTreeSet::new();
    for mask in 0..1u64 << width {
        if in_even_run_set(mask, width) {
            let bits = labels
                .iter()
                .enumerate()
                .map(|(i, l)| (l.name.clone(), mask >> i & 1 == 1));
            out.insert(BitString::from_pairs(bits));
        }
    }
    Ok(out)
}

/// `mask` bit `i` is the bit of `A_i`.
fn in_even_run_set(mask: u64, width: usize) -> bool {
    let mut run = 0;
    for i in (0..width).rev() {
        if mask >> i & 1 == 1 {
            run += 1;
        } else {
            return run % 2 == 0;
        }
    }
    false
}

/// Signature of the comb described by `spec`, built from the even-run
/// cells of the relabelled comb. Trivial systems must carry bit 1 and are
/// then dropped.
pub fn permuted_comb_sig(spec: &CombSpec) -> Result<Signature> {
    let ordered = spec.ordered_labels();
    let factors = desugar_comb(spec.n, &ordered)?.factors();
    let out_dims: u128 = ordered
        .iter()
        .skip(1)
        .step_by(2)
        .map(|l| l.dim as u128)
        .product();
    let lambda = Lambda::new(1, out_dims);
    let strings = comb_strings(spec.n, &ordered)?.into_iter().filter_map(|b| {
        let keep = ordered
            .iter()
            .filter(|l| l.is_trivial())
            .all(|l| b.get(&l.name) == Some(true));
        keep.then(|| {
            BitString::from_pairs(
                b.iter()
                    .filter(|(k, _)| ordered.iter().any(|l| l.name == *k && !l.is_trivial())),
            )
        })
    });
    Signature::from_strings(factors, lambda, strings)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum Slot {
    First,
    Second,
}

/// An order-preserving merge of the teeth of two combs.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct Interleaving {
    slots: Vec<Slot>,
}

impl Interleaving {
    pub fn new(slots: Vec<Slot>) -> Self {
        Self { slots }
    }

    pub fn slots(&self) -> &[Slot] {
        &self.slots
    }

    /// All teeth of the first comb, then all of the second.
    pub fn identity(m: usize, n: usize) -> Self {
        let mut slots = vec![Slot::First; m];
        slots.extend(std::iter::repeat_n(Slot::Second, n));
        Self { slots }
    }

    /// All teeth of the second comb first.
    pub fn swapped(m: usize, n: usize) -> Self {
        let mut slots = vec![Slot::Second; n];
        slots.extend(std::iter::repeat_n(Slot::First, m));
        Self { slots }
    }

    /// Tooth visited at each position; the first comb owns teeth `0..m`,
    /// the second `m..m+n`.
    pub fn teeth_order(&self) -> Vec<usize> {
        let m = self.slots.iter().filter(|s| **s == Slot::First).count();
        let (mut a, mut b) = (0, m);
        self.slots
            .iter()
            .map(|s| match s {
                Slot::First => {
                    a += 1;
                    a - 1
                }
                Slot::Second => {
                    b += 1;
                    b - 1
                }
            })
            .collect()
    }
}

impl fmt::Display for Interleaving {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.slots {
            f.write_str(match s {
                Slot::First => "m",
                Slot::Second => "n",
            })?;
        }
        Ok(())
    }
}

/// All `C(m+n, n)` merges in lexicographic order (`First < Second`).
pub fn interleavings(m: usize, n: usize) -> Vec<Interleaving> {
    fn go(m: usize, n: usize, prefix: &mut Vec<Slot>, out: &mut Vec<Interleaving>) {
        if m == 0 && n == 0 {
            out.push(Interleaving {
                slots: prefix.clone(),
            });
            return;
        }
        if m > 0 {
            prefix.push(Slot::First);
            go(m - 1, n, prefix, out);
            prefix.pop();
        }
        if n > 0 {
            prefix.push(Slot::Second);
            go(m, n - 1, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    go(m, n, &mut Vec::with_capacity(m + n), &mut out);
    out
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SubCheck {
    pub name: String,
    pub equal: bool,
}

/// Outcome of an exact set identity check.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TheoremReport {
    pub claim: String,
    pub params: BTreeMap<String, usize>,
    pub equal: bool,
    pub lhs_size: usize,
    pub rhs_size: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub checks: Vec<SubCheck>,
}

fn check_limit(m: usize, n: usize, limit: usize) -> Result<()> {
    if m < 1 || n < 1 {
        return Err(Error::InvalidArgument(
            "comb sizes must be at least 1".into(),
        ));
    }
    if m + n > limit {
        return Err(Error::SizeLimit { got: m + n, limit });
    }
    Ok(())
}

fn wires(prefix: &str, count: usize) -> Vec<SystemLabel> {
    (0..count)
        .map(|i| SystemLabel::new(format!("{prefix}{i}"), 2))
        .collect()
}

/// The tensor product of an `m`-comb and an `n`-comb against the
/// intersection of all `(m+n)`-combs whose tooth order interleaves theirs,
/// and against the intersection of just the two block orders.
pub fn verify_interleaving_intersection(m: usize, n: usize, limit: usize) -> Result<TheoremReport> {
    check_limit(m, n, limit)?;
    let p = m + n;
    let labels = wires("A", 2 * p);
    let first = permuted_comb_sig(&CombSpec::new(m, labels[..2 * m].to_vec())?)?;
    let second = permuted_comb_sig(&CombSpec::new(n, labels[2 * m..].to_vec())?)?;
    let product = tensor_sig(&first, &second)?;

    let ordered = |il: &Interleaving| -> Result<Signature> {
        permuted_comb_sig(&CombSpec::with_perm(p, labels.clone(), il.teeth_order())?)
    };
    let mut contained = true;
    let mut full: Option<Signature> = None;
    for il in interleavings(m, n) {
        let s = ordered(&il)?;
        contained &= product.cells().is_subset(s.cells());
        full = Some(match full {
            None => s,
            Some(acc) => cap_sig(&acc, &s)?,
        });
    }
    let full = full.expect("at least one interleaving");
    let two = cap_sig(
        &ordered(&Interleaving::identity(m, n))?,
        &ordered(&Interleaving::swapped(m, n))?,
    )?;

    let product_is_full = types_equal(&product, &full);
    let full_is_two = types_equal(&full, &two);
    let witness = difference(&product, &full).or_else(|| difference(&full, &two));
    Ok(TheoremReport {
        claim: "interst".into(),
        params: BTreeMap::from([("m".into(), m), ("n".into(), n)]),
        equal: product_is_full && full_is_two && contained,
        lhs_size: product.len(),
        rhs_size: full.len(),
        witness,
        checks: vec![
            SubCheck {
                name: "product contained in every ordering".into(),
                equal: contained,
            },
            SubCheck {
                name: "product equals intersection over all orderings".into(),
                equal: product_is_full,
            },
            SubCheck {
                name: "all orderings equal identity and block swap".into(),
                equal: full_is_two,
            },
        ],
    })
}

/// Cells of `m -> n` against the span of the two block orders of the
/// `(m+n-1)`-comb feeding the output comb's outer tooth.
pub fn verify_tombstone(m: usize, n: usize, limit: usize) -> Result<TheoremReport> {
    check_limit(m, n, limit)?;
    let input = wires("M", 2 * m);
    let output = wires("N", 2 * n);
    let lhs = arrow_sig(
        &permuted_comb_sig(&CombSpec::new(m, input.clone())?)?,
        &permuted_comb_sig(&CombSpec::new(n, output.clone())?)?,
    )?;

    let (orders, rhs) = tombstone_orders(m, n, &input, &output)?;
    let single: Vec<bool> = orders.iter().map(|s| types_equal(&lhs, s)).collect();
    let witness = difference(&lhs, &rhs);
    let mut checks = vec![SubCheck {
        name: "span of both block orders".into(),
        equal: witness.is_none(),
    }];
    if n > 1 {
        checks.push(SubCheck {
            name: "input comb first alone".into(),
            equal: single[0],
        });
        checks.push(SubCheck {
            name: "output comb's inner teeth first alone".into(),
            equal: single[1],
        });
    }
    Ok(TheoremReport {
        claim: "tombstone".into(),
        params: BTreeMap::from([("m".into(), m), ("n".into(), n)]),
        equal: witness.is_none(),
        lhs_size: lhs.len(),
        rhs_size: rhs.len(),
        witness,
        checks,
    })
}

/// The two fixed-order types `(m+n-1) -> 1` and `(m+n-1)_swap -> 1`, plus
/// their span. `input` holds the `m`-comb wires, `output` the `n`-comb
/// wires; the output's outer tooth `(N_0, N_{2n-1})` stays outermost.
pub fn tombstone_orders(
    m: usize,
    n: usize,
    input: &[SystemLabel],
    output: &[SystemLabel],
) -> Result<([Signature; 2], Signature)> {
    let mut inner = input.to_vec();
    inner.extend_from_slice(&output[1..2 * n - 1]);
    let p = m + n - 1;
    let outer = signature_of(&TypeExpr::arrow(
        TypeExpr::Elementary(output[0].clone()),
        TypeExpr::Elementary(output[2 * n - 1].clone()),
    ))?;
    let straight: Vec<usize> = (0..p).collect();
    let swapped: Vec<usize> = (m..p).chain(0..m).collect();
    let a = arrow_sig(
        &permuted_comb_sig(&CombSpec::with_perm(p, inner.clone(), straight)?)?,
        &outer,
    )?;
    let b = arrow_sig(
        &permuted_comb_sig(&CombSpec::with_perm(p, inner, swapped)?)?,
        &outer,
    )?;
    let both = span_union(&a, &b)?;
    Ok(([a, b], both))
}

/// Even-run cells against the recursive comb signature for `1..=n` teeth.
pub fn verify_comb_strings(n: usize) -> Result<TheoremReport> {
    let mut equal = true;
    let mut witness = None;
    let (mut lhs_size, mut rhs_size) = (0, 0);
    let mut checks = Vec::new();
    for k in 1..=n {
        let labels = wires("A", 2 * k);
        let from_rule = comb_strings(k, &labels)?;
        let recursive = signature_of(&desugar_comb(k, &labels)?)?;
        let rec_set: BTreeSet<BitString> = recursive.strings().into_iter().collect();
        let same = from_rule == rec_set;
        if !same && witness.is_none() {
            witness = from_rule
                .symmetric_difference(&rec_set)
                .next()
                .map(|b| b.to_string());
        }
        equal &= same;
        lhs_size = from_rule.len();
        rhs_size = rec_set.len();
        checks.push(SubCheck {
            name: format!("n = {k}"),
            equal: same,
        });
    }
    Ok(TheoremReport {
        claim: "comb-strings".into(),
        params: BTreeMap::from([("n".into(), n)]),
        equal,
        lhs_size,
        rhs_size,
        witness,
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signature::delta_dim;

    fn qubits(prefix: &str, count: usize) -> Vec<SystemLabel> {
        wires(prefix, count)
    }

    fn render_strings(set: &BTreeSet<BitString>, labels: &[SystemLabel]) -> Vec<String> {
        let order: Vec<SystemLabel> = labels.iter().rev().cloned().collect();
        let mut v: Vec<String> = set.iter().map(|b| b.render(&order)).collect();
        v.sort();
        v
    }

    #[test]
    fn one_comb_strings() {
        let l = qubits("A", 2);
        assert_eq!(
            render_strings(&comb_strings(1, &l).unwrap(), &l),
            vec!["00", "01"]
        );
    }

    #[test]
    fn two_comb_strings() {
        let l = qubits("A", 4);
        let got = render_strings(&comb_strings(2, &l).unwrap(), &l);
        assert_eq!(got.len(), 10);
        assert_eq!(got.iter().filter(|s| s.starts_with('0')).count(), 8);
        assert!(got.contains(&"1100".to_string()));
        assert!(got.contains(&"1101".to_string()));
        assert!(!got.contains(&"1000".to_string()));
    }

    #[test]
    fn odd_leading_run_excluded() {
        assert!(!in_even_run_set(0b10, 2));
        assert!(!in_even_run_set(0b11, 2));
    }

    #[test]
    fn interleaving_orders_for_two_two() {
        let got: Vec<String> = interleavings(2, 2)
            .iter()
            .map(|i| i.teeth_order().iter().map(|t| t.to_string()).collect())
            .collect();
        assert_eq!(got, vec!["0123", "0213", "0231", "2013", "2031", "2301"]);
    }

    #[test]
    fn interleaving_slots_for_two_three() {
        let got: Vec<String> = interleavings(2, 3).iter().map(|i| i.to_string()).collect();
        assert_eq!(got.len(), 10);
        assert_eq!(&got[..3], &["mmnnn", "mnmnn", "mnnmn"]);
        assert_eq!(got.last().unwrap(), "nnnmm");
        assert_eq!(interleavings(1, 1).len(), 2);
    }

    #[test]
    fn identity_perm_matches_recursive_definition() {
        for n in 1..=4 {
            let l = qubits("A", 2 * n);
            let a = permuted_comb_sig(&CombSpec::new(n, l.clone()).unwrap()).unwrap();
            let b = signature_of(&desugar_comb(n, &l).unwrap()).unwrap();
            assert!(types_equal(&a, &b), "n = {n}");
        }
    }

    #[test]
    fn swap_perm_is_relabelling() {
        let l = qubits("A", 4);
        let swapped =
            permuted_comb_sig(&CombSpec::with_perm(2, l.clone(), vec![1, 0]).unwrap()).unwrap();
        let relabelled = vec![l[2].clone(), l[3].clone(), l[0].clone(), l[1].clone()];
        let direct = permuted_comb_sig(&CombSpec::new(2, relabelled).unwrap()).unwrap();
        assert!(types_equal(&swapped, &direct));
    }

    #[test]
    fn delta_dim_is_perm_invariant_for_equal_dims() {
        let l: Vec<SystemLabel> = (0..6)
            .map(|i| SystemLabel::new(format!("A{i}"), 3))
            .collect();
        let base = delta_dim(&permuted_comb_sig(&CombSpec::new(3, l.clone()).unwrap()).unwrap());
        for perm in [[0, 2, 1], [1, 0, 2], [2, 1, 0], [1, 2, 0], [2, 0, 1]] {
            let s = permuted_comb_sig(&CombSpec::with_perm(3, l.clone(), perm.to_vec()).unwrap())
                .unwrap();
            assert_eq!(delta_dim(&s), base);
        }
    }

    #[test]
    fn trivial_wires_match_recursive_signature() {
        let dims = [
            [1, 2, 2, 2],
            [2, 1, 2, 2],
            [2, 2, 1, 2],
            [2, 2, 2, 1],
            [1, 2, 1, 3],
        ];
        for d in dims {
            let l: Vec<SystemLabel> = d
                .iter()
                .enumerate()
                .map(|(i, &di)| SystemLabel::new(format!("A{i}"), di))
                .collect();
            let a = permuted_comb_sig(&CombSpec::new(2, l.clone()).unwrap()).unwrap();
            let b = signature_of(&desugar_comb(2, &l).unwrap()).unwrap();
            assert!(types_equal(&a, &b), "{d:?}: {:?}", difference(&a, &b));
        }
    }

    #[test]
    fn bad_specs() {
        let l = qubits("A", 4);
        assert!(CombSpec::with_perm(2, l.clone(), vec![0, 0]).is_err());
        assert!(CombSpec::with_perm(2, l.clone(), vec![0]).is_err());
        assert!(CombSpec::new(3, l).is_err());
    }

    #[test]
    fn interleaving_theorem_small_cases() {
        for (m, n) in [(1, 1), (2, 2), (2, 3)] {
            let r = verify_interleaving_intersection(m, n, DEFAULT_SIZE_LIMIT).unwrap();
            assert!(r.equal, "{r:?}");
        }
    }

    #[test]
    fn tombstone_small_cases() {
        for (m, n) in [(1, 1), (2, 3), (3, 2)] {
            let r = verify_tombstone(m, n, DEFAULT_SIZE_LIMIT).unwrap();
            assert!(r.equal, "{r:?}");
        }
    }

    /// Dropping either block order loses cells, so both diagrams are needed.
    #[test]
    fn tombstone_needs_both_orders() {
        let r = verify_tombstone(2, 3, DEFAULT_SIZE_LIMIT).unwrap();
        assert!(r.checks.iter().skip(1).all(|c| !c.equal), "{r:?}");
    }

    #[test]
    fn size_limit_enforced() {
        assert_eq!(
            verify_tombstone(4, 3, 6),
            Err(Error::SizeLimit { got: 7, limit: 6 })
        );
        assert!(verify_interleaving_intersection(0, 2, 6).is_err());
    }

    #[test]
    fn comb_strings_report() {
        let r = verify_comb_strings(4).unwrap();
        assert!(r.equal);
        assert_eq!(r.checks.len(), 4);
    }
}
