//! Front end for the type language.
//!
//! Grammar (whitespace-insensitive, UTF-8):
//!
//! ```text
//! expr   := capx ( '->' expr )?            right associative, loosest
//! capx   := tensx ( '&' tensx )*
//! tensx  := atom ( '*' atom )*
//! atom   := NAME ':' INT
//!         | 'bar' '(' expr ')'
//!         | 'comb' INT '(' NAME ':' INT ( ',' NAME ':' INT )* ')'
//!         | '(' expr ')'
//! ```
//!
//! `comb2(...)` and `comb 2(...)` are both accepted. Every elementary
//! occurrence is a distinct wire, so a label may appear only once, except
//! across the two operands of `&`, which must range over the same systems.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemLabel {
    #[serde(rename = "label")]
    pub name: String,
    pub dim: usize,
}

impl SystemLabel {
    pub fn new(name: impl Into<String>, dim: usize) -> Self {
        Self {
            name: name.into(),
            dim,
        }
    }

    pub fn is_trivial(&self) -> bool {
        self.dim == 1
    }
}

impl fmt::Display for SystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.name, self.dim)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum TypeExpr {
    Elementary(SystemLabel),
    Arrow(Box<TypeExpr>, Box<TypeExpr>),
    Tensor(Box<TypeExpr>, Box<TypeExpr>),
    Bar(Box<TypeExpr>),
    Cap(Box<TypeExpr>, Box<TypeExpr>),
    /// Comb sugar, kept as written until [`desugar`] runs.
    Comb {
        n: usize,
        labels: Vec<SystemLabel>,
    },
}

impl TypeExpr {
    pub fn elem(name: impl Into<String>, dim: usize) -> Self {
        TypeExpr::Elementary(SystemLabel::new(name, dim))
    }

    pub fn arrow(x: TypeExpr, y: TypeExpr) -> Self {
        TypeExpr::Arrow(Box::new(x), Box::new(y))
    }

    pub fn tensor(x: TypeExpr, y: TypeExpr) -> Self {
        TypeExpr::Tensor(Box::new(x), Box::new(y))
    }

    pub fn bar(x: TypeExpr) -> Self {
        TypeExpr::Bar(Box::new(x))
    }

    pub fn cap(x: TypeExpr, y: TypeExpr) -> Self {
        TypeExpr::Cap(Box::new(x), Box::new(y))
    }

    /// Elementary leaves in canonical display order: the right operand of
    /// `->` and `*` comes first, matching `H_{x->y} = H_y (x) H_x`.
    /// For `&` the left operand's order is used.
    pub fn factors(&self) -> Vec<SystemLabel> {
        let mut out = Vec::new();
        self.collect_factors(&mut out);
        out
    }

    fn collect_factors(&self, out: &mut Vec<SystemLabel>) {
        match self {
            TypeExpr::Elementary(l) => out.push(l.clone()),
            TypeExpr::Arrow(x, y) | TypeExpr::Tensor(x, y) => {
                y.collect_factors(out);
                x.collect_factors(out);
            }
            TypeExpr::Bar(x) => x.collect_factors(out),
            TypeExpr::Cap(x, _) => x.collect_factors(out),
            TypeExpr::Comb { .. } => match desugar(self) {
                Ok(e) => e.collect_factors(out),
                Err(_) => {
                    if let TypeExpr::Comb { labels, .. } = self {
                        out.extend(labels.iter().rev().cloned());
                    }
                }
            },
        }
    }

    /// Number of elementary leaves, counting both operands of `&`.
    pub fn leaf_count(&self) -> usize {
        match self {
            TypeExpr::Elementary(_) => 1,
            TypeExpr::Arrow(x, y) | TypeExpr::Tensor(x, y) | TypeExpr::Cap(x, y) => {
                x.leaf_count() + y.leaf_count()
            }
            TypeExpr::Bar(x) => x.leaf_count(),
            TypeExpr::Comb { labels, .. } => labels.len(),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            TypeExpr::Elementary(_) | TypeExpr::Comb { .. } => 0,
            TypeExpr::Arrow(x, y) | TypeExpr::Tensor(x, y) | TypeExpr::Cap(x, y) => {
                1 + x.depth().max(y.depth())
            }
            TypeExpr::Bar(x) => 1 + x.depth(),
        }
    }

    /// Checks label uniqueness, dimensions and comb arities.
    pub fn validate(&self) -> Result<()> {
        self.validated_labels().map(|_| ())
    }

    fn validated_labels(&self) -> Result<BTreeMap<String, usize>> {
        let disjoint = |a: BTreeMap<String, usize>, b: BTreeMap<String, usize>| {
            let mut merged = a;
            for (k, v) in b {
                if merged.insert(k.clone(), v).is_some() {
                    return Err(Error::DuplicateLabel(k));
                }
            }
            Ok(merged)
        };
        match self {
            TypeExpr::Elementary(l) => {
                if l.dim < 1 {
                    return Err(Error::BadDimension {
                        name: l.name.clone(),
                        dim: l.dim,
                    });
                }
                Ok(BTreeMap::from([(l.name.clone(), l.dim)]))
            }
            TypeExpr::Arrow(x, y) | TypeExpr::Tensor(x, y) => {
                disjoint(x.validated_labels()?, y.validated_labels()?)
            }
            TypeExpr::Bar(x) => x.validated_labels(),
            TypeExpr::Cap(x, y) => {
                let lx = x.validated_labels()?;
                let ly = y.validated_labels()?;
                if lx != ly {
                    return Err(Error::SpaceMismatch);
                }
                Ok(lx)
            }
            TypeExpr::Comb { n, labels } => {
                check_comb_arity(*n, labels)?;
                let mut acc = BTreeMap::new();
                for l in labels {
                    acc = disjoint(acc, TypeExpr::Elementary(l.clone()).validated_labels()?)?;
                }
                Ok(acc)
            }
        }
    }
}

fn check_comb_arity(n: usize, labels: &[SystemLabel]) -> Result<()> {
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
    Ok(())
}

impl fmt::Display for TypeExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

/// The comb on `A_0 … A_{2n-1}`: `A_0 -> A_1` for one tooth, otherwise
/// `comb(n-1; A_1 … A_{2n-2}) -> (A_0 -> A_{2n-1})`.
pub fn desugar_comb(n: usize, labels: &[SystemLabel]) -> Result<TypeExpr> {
    check_comb_arity(n, labels)?;
    let first = TypeExpr::Elementary(labels[0].clone());
    let last = TypeExpr::Elementary(labels[2 * n - 1].clone());
    if n == 1 {
        return Ok(TypeExpr::arrow(first, last));
    }
    let inner = desugar_comb(n - 1, &labels[1..2 * n - 1])?;
    Ok(TypeExpr::arrow(inner, TypeExpr::arrow(first, last)))
}

/// Expands every comb node.
pub fn desugar(expr: &TypeExpr) -> Result<TypeExpr> {
    Ok(match expr {
        TypeExpr::Elementary(_) => expr.clone(),
        TypeExpr::Arrow(x, y) => TypeExpr::arrow(desugar(x)?, desugar(y)?),
        TypeExpr::Tensor(x, y) => TypeExpr::tensor(desugar(x)?, desugar(y)?),
        TypeExpr::Cap(x, y) => TypeExpr::cap(desugar(x)?, desugar(y)?),
        TypeExpr::Bar(x) => TypeExpr::bar(desugar(x)?),
        TypeExpr::Comb { n, labels } => desugar_comb(*n, labels)?,
    })
}

pub fn render(expr: &TypeExpr) -> String {
    match expr {
        TypeExpr::Elementary(l) => l.to_string(),
        TypeExpr::Arrow(x, y) => {
            let lhs = match **x {
                TypeExpr::Arrow(..) => format!("({})", render(x)),
                _ => render(x),
            };
            format!("{lhs} -> {}", render(y))
        }
        TypeExpr::Tensor(x, y) => format!("({}) * ({})", render(x), render(y)),
        TypeExpr::Cap(x, y) => format!("({}) & ({})", render(x), render(y)),
        TypeExpr::Bar(x) => format!("bar({})", render(x)),
        TypeExpr::Comb { n, labels } => {
            let list: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
            format!("comb{n}({})", list.join(", "))
        }
    }
}

/// Parses and validates a type expression. Comb sugar is preserved.
pub fn parse(text: &str) -> Result<TypeExpr> {
    let tokens = lex(text)?;
    let mut parser = Parser { tokens, pos: 0 };
    let expr = parser.expr()?;
    let tok = parser.peek();
    if tok.kind != Tok::Eof {
        return Err(Error::Syntax {
            pos: tok.pos,
            msg: format!("unexpected {}", tok.kind),
        });
    }
    expr.validate()?;
    Ok(expr)
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Tok {
    Ident(String),
    Int(String),
    Colon,
    Comma,
    LParen,
    RParen,
    Arrow,
    Star,
    Amp,
    Eof,
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Ident(s) => write!(f, "identifier `{s}`"),
            Tok::Int(s) => write!(f, "integer `{s}`"),
            Tok::Colon => f.write_str("`:`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Arrow => f.write_str("`->`"),
            Tok::Star => f.write_str("`*`"),
            Tok::Amp => f.write_str("`&`"),
            Tok::Eof => f.write_str("end of input"),
        }
    }
}

#[derive(Clone, Debug)]
struct Token {
    kind: Tok,
    pos: usize,
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let mut out = Vec::new();
    let mut chars = text.char_indices().peekable();
    while let Some(&(pos, c)) = chars.peek() {
        if c.is_whitespace() {
            chars.next();
            continue;
        }
        let single = match c {
            ':' => Some(Tok::Colon),
            ',' => Some(Tok::Comma),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            '*' => Some(Tok::Star),
            '&' => Some(Tok::Amp),
            _ => None,
        };
        if let Some(kind) = single {
            chars.next();
            out.push(Token { kind, pos });
            continue;
        }
        if c == '-' {
            chars.next();
            match chars.next() {
                Some((_, '>')) => out.push(Token {
                    kind: Tok::Arrow,
                    pos,
                }),
                _ => {
                    return Err(Error::Syntax {
                        pos,
                        msg: "expected `->`".into(),
                    })
                }
            }
            continue;
        }
        if c.is_ascii_digit() {
            let mut s = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if !d.is_ascii_digit() {
                    break;
                }
                s.push(d);
                chars.next();
            }
            out.push(Token {
                kind: Tok::Int(s),
                pos,
            });
            continue;
        }
        if c.is_alphabetic() || c == '_' {
            let mut s = String::new();
            while let Some(&(_, d)) = chars.peek() {
                if !(d.is_alphanumeric() || d == '_' || d == '\'') {
                    break;
                }
                s.push(d);
                chars.next();
            }
            out.push(Token {
                kind: Tok::Ident(s),
                pos,
            });
            continue;
        }
        return Err(Error::Syntax {
            pos,
            msg: format!("unexpected character `{c}`"),
        });
    }
    out.push(Token {
        kind: Tok::Eof,
        pos: text.len(),
    });
    Ok(out)
}

struct Parser {
    tokens: Vec<Token>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.tokens[self.pos]
    }

    fn peek_kind_at(&self, offset: usize) -> &Tok {
        let i = (self.pos + offset).min(self.tokens.len() - 1);
        &self.tokens[i].kind
    }

    fn bump(&mut self) -> Token {
        let t = self.tokens[self.pos].clone();
        if self.pos + 1 < self.tokens.len() {
            self.pos += 1;
        }
        t
    }

    fn expect(&mut self, kind: Tok) -> Result<Token> {
        let t = self.bump();
        if t.kind == kind {
            Ok(t)
        } else {
            Err(Error::Syntax {
                pos: t.pos,
                msg: format!("expected {kind}, found {}", t.kind),
            })
        }
    }

    fn expr(&mut self) -> Result<TypeExpr> {
        let lhs = self.cap_expr()?;
        if self.peek().kind == Tok::Arrow {
            self.bump();
            let rhs = self.expr()?;
            return Ok(TypeExpr::arrow(lhs, rhs));
        }
        Ok(lhs)
    }

    fn cap_expr(&mut self) -> Result<TypeExpr> {
        let mut lhs = self.tensor_expr()?;
        while self.peek().kind == Tok::Amp {
            self.bump();
            let rhs = self.tensor_expr()?;
            lhs = TypeExpr::cap(lhs, rhs);
        }
        Ok(lhs)
    }

    fn tensor_expr(&mut self) -> Result<TypeExpr> {
        let mut lhs = self.atom()?;
        while self.peek().kind == Tok::Star {
            self.bump();
            let rhs = self.atom()?;
            lhs = TypeExpr::tensor(lhs, rhs);
        }
        Ok(lhs)
    }

    fn atom(&mut self) -> Result<TypeExpr> {
        let tok = self.peek().clone();
        match &tok.kind {
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) if name == "bar" && *self.peek_kind_at(1) == Tok::LParen => {
                self.bump();
                self.bump();
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(TypeExpr::bar(e))
            }
            Tok::Ident(name) if name == "comb" && matches!(self.peek_kind_at(1), Tok::Int(_)) => {
                self.bump();
                let n = self.int()?;
                self.comb_body(n, tok.pos)
            }
            Tok::Ident(name)
                if comb_suffix(name).is_some() && *self.peek_kind_at(1) == Tok::LParen =>
            {
                let n = comb_suffix(name)
                    .unwrap()
                    .parse::<usize>()
                    .map_err(|_| Error::Syntax {
                        pos: tok.pos,
                        msg: "comb size too large".into(),
                    })?;
                self.bump();
                self.comb_body(n, tok.pos)
            }
            Tok::Ident(_) => Ok(TypeExpr::Elementary(self.elem()?)),
            other => Err(Error::Syntax {
                pos: tok.pos,
                msg: format!("unexpected {other}"),
            }),
        }
    }

    fn comb_body(&mut self, n: usize, _pos: usize) -> Result<TypeExpr> {
        self.expect(Tok::LParen)?;
        let mut labels = vec![self.elem()?];
        while self.peek().kind == Tok::Comma {
            self.bump();
            labels.push(self.elem()?);
        }
        self.expect(Tok::RParen)?;
        check_comb_arity(n, &labels)?;
        Ok(TypeExpr::Comb { n, labels })
    }

    fn elem(&mut self) -> Result<SystemLabel> {
        let t = self.bump();
        let name = match t.kind {
            Tok::Ident(s) => s,
            other => {
                return Err(Error::Syntax {
                    pos: t.pos,
                    msg: format!("expected a system name, found {other}"),
                })
            }
        };
        self.expect(Tok::Colon)?;
        let dim = self.int()?;
        if dim < 1 {
            return Err(Error::BadDimension { name, dim });
        }
        Ok(SystemLabel { name, dim })
    }

    fn int(&mut self) -> Result<usize> {
        let t = self.bump();
        match t.kind {
            Tok::Int(s) => s.parse::<usize>().map_err(|_| Error::Syntax {
                pos: t.pos,
                msg: format!("integer `{s}` out of range"),
            }),
            other => Err(Error::Syntax {
                pos: t.pos,
                msg: format!("expected an integer, found {other}"),
            }),
        }
    }
}

fn comb_suffix(name: &str) -> Option<&str> {
    let rest = name.strip_prefix("comb")?;
    (!rest.is_empty() && rest.bytes().all(|b| b.is_ascii_digit())).then_some(rest)
}

/// Knobs for [`random_type`].
#[derive(Clone, Debug)]
pub struct RandomTypeOptions {
    pub max_depth: usize,
    pub max_leaves: usize,
    pub dims: Vec<usize>,
    pub allow_cap: bool,
}

impl Default for RandomTypeOptions {
    fn default() -> Self {
        Self {
            max_depth: 5,
            max_leaves: 7,
            dims: vec![1, 2, 3],
            allow_cap: true,
        }
    }
}

/// Draws a random valid type. Labels are `S0, S1, …`. Intersections pair a
/// subtree with a copy whose labels are shuffled among equal-dimension
/// leaves, which keeps both operands on the same space with equal λ.
pub fn random_type<R: Rng + ?Sized>(rng: &mut R, opts: &RandomTypeOptions) -> TypeExpr {
    let max_leaves = opts.max_leaves.clamp(1, 1 << opts.max_depth.min(16));
    let leaves = rng.random_range(1..=max_leaves);
    let mut counter = 0usize;
    gen_node(rng, opts, opts.max_depth, leaves, &mut counter)
}

fn gen_node<R: Rng + ?Sized>(
    rng: &mut R,
    opts: &RandomTypeOptions,
    depth: usize,
    leaves: usize,
    counter: &mut usize,
) -> TypeExpr {
    let fits = |l: usize, d: usize| d >= 64 || l <= (1usize << d);
    if leaves == 1 && (depth == 0 || rng.random_bool(0.6)) {
        let dim = opts.dims[rng.random_range(0..opts.dims.len())];
        let name = format!("S{}", *counter);
        *counter += 1;
        return TypeExpr::elem(name, dim);
    }
    let sub = depth - 1;
    let mut choices: Vec<u8> = Vec::new();
    if fits(leaves, sub) {
        choices.push(0); // bar
        if opts.allow_cap {
            choices.push(3);
        }
    }
    if leaves >= 2 {
        choices.extend([1, 1, 2, 2]);
    }
    match choices[rng.random_range(0..choices.len())] {
        0 => TypeExpr::bar(gen_node(rng, opts, sub, leaves, counter)),
        3 => {
            let x = gen_node(rng, opts, sub, leaves, counter);
            let y = shuffled_copy(rng, &x);
            TypeExpr::cap(x, y)
        }
        kind => {
            // split so that both halves fit under the remaining depth
            let cap = if sub >= 64 { usize::MAX } else { 1usize << sub };
            let lo = leaves.saturating_sub(cap).max(1);
            let hi = (leaves - 1).min(cap);
            let left = rng.random_range(lo..=hi);
            let x = gen_node(rng, opts, sub, left, counter);
            let y = gen_node(rng, opts, sub, leaves - left, counter);
            if kind == 1 {
                TypeExpr::arrow(x, y)
            } else {
                TypeExpr::tensor(x, y)
            }
        }
    }
}

fn shuffled_copy<R: Rng + ?Sized>(rng: &mut R, x: &TypeExpr) -> TypeExpr {
    let mut by_dim: BTreeMap<usize, Vec<String>> = BTreeMap::new();
    let mut seen = BTreeSet::new();
    for l in x.factors() {
        if seen.insert(l.name.clone()) {
            by_dim.entry(l.dim).or_default().push(l.name);
        }
    }
    let mut map = HashMap::new();
    for names in by_dim.values() {
        let mut shuffled = names.clone();
        shuffled.shuffle(rng);
        for (a, b) in names.iter().zip(shuffled) {
            map.insert(a.clone(), b);
        }
    }
    relabel(x, &map)
}

/// Renames leaves according to `map`; unmapped names are kept.
pub fn relabel(expr: &TypeExpr, map: &HashMap<String, String>) -> TypeExpr {
    let rename = |l: &SystemLabel| SystemLabel {
        name: map.get(&l.name).cloned().unwrap_or_else(|| l.name.clone()),
        dim: l.dim,
    };
    match expr {
        TypeExpr::Elementary(l) => TypeExpr::Elementary(rename(l)),
        TypeExpr::Arrow(x, y) => TypeExpr::arrow(relabel(x, map), relabel(y, map)),
        TypeExpr::Tensor(x, y) => TypeExpr::tensor(relabel(x, map), relabel(y, map)),
        TypeExpr::Cap(x, y) => TypeExpr::cap(relabel(x, map), relabel(y, map)),
        TypeExpr::Bar(x) => TypeExpr::bar(relabel(x, map)),
        TypeExpr::Comb { n, labels } => TypeExpr::Comb {
            n: *n,
            labels: labels.iter().map(rename).collect(),
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn e(n: &str, d: usize) -> TypeExpr {
        TypeExpr::elem(n, d)
    }

    #[test]
    fn parses_arrow() {
        assert_eq!(
            parse("A:2 -> B:2").unwrap(),
            TypeExpr::arrow(e("A", 2), e("B", 2))
        );
    }

    #[test]
    fn parses_bar() {
        assert_eq!(parse("bar(A:2)").unwrap(), TypeExpr::bar(e("A", 2)));
    }

    #[test]
    fn arrow_is_right_associative() {
        let got = parse("A:2 -> B:2 -> C:2").unwrap();
        assert_eq!(
            got,
            TypeExpr::arrow(e("A", 2), TypeExpr::arrow(e("B", 2), e("C", 2)))
        );
    }

    #[test]
    fn tensor_binds_tighter_than_arrow() {
        let got = parse("A:2 * B:2 -> C:2").unwrap();
        assert_eq!(
            got,
            TypeExpr::arrow(TypeExpr::tensor(e("A", 2), e("B", 2)), e("C", 2))
        );
    }

    #[test]
    fn cap_between_tensor_and_arrow() {
        let got = parse("A:2 * B:2 & B:2 * A:2 -> C:3").unwrap();
        let lhs = TypeExpr::cap(
            TypeExpr::tensor(e("A", 2), e("B", 2)),
            TypeExpr::tensor(e("B", 2), e("A", 2)),
        );
        assert_eq!(got, TypeExpr::arrow(lhs, e("C", 3)));
    }

    #[test]
    fn comb_sugar_survives_parse_and_desugars() {
        let got = parse("comb2(A0:2,A1:2,A2:2,A3:2)").unwrap();
        assert!(matches!(got, TypeExpr::Comb { n: 2, .. }));
        let want = TypeExpr::arrow(
            TypeExpr::arrow(e("A1", 2), e("A2", 2)),
            TypeExpr::arrow(e("A0", 2), e("A3", 2)),
        );
        assert_eq!(desugar(&got).unwrap(), want);
        assert_eq!(parse("comb 2(A0:2,A1:2,A2:2,A3:2)").unwrap(), got);
    }

    #[test]
    fn desugar_comb_unfolds() {
        let labels: Vec<_> = (0..6)
            .map(|i| SystemLabel::new(format!("A{i}"), 2))
            .collect();
        assert_eq!(
            desugar_comb(1, &labels[..2]).unwrap(),
            TypeExpr::arrow(e("A0", 2), e("A1", 2))
        );
        let want = TypeExpr::arrow(
            TypeExpr::arrow(
                TypeExpr::arrow(e("A2", 2), e("A3", 2)),
                TypeExpr::arrow(e("A1", 2), e("A4", 2)),
            ),
            TypeExpr::arrow(e("A0", 2), e("A5", 2)),
        );
        assert_eq!(desugar_comb(3, &labels).unwrap(), want);
        assert_eq!(desugar_comb(0, &[]), Err(Error::EmptyComb));
    }

    #[test]
    fn desugared_comb_uses_each_label_once() {
        for n in 1..=6 {
            let labels: Vec<_> = (0..2 * n)
                .map(|i| SystemLabel::new(format!("A{i}"), 2))
                .collect();
            let d = desugar_comb(n, &labels).unwrap();
            let mut f = d.factors();
            assert_eq!(f.len(), 2 * n);
            f.sort();
            f.dedup();
            assert_eq!(f.len(), 2 * n);
        }
    }

    #[test]
    fn render_examples() {
        assert_eq!(render(&TypeExpr::arrow(e("A", 2), e("B", 2))), "A:2 -> B:2");
        assert_eq!(
            render(&TypeExpr::bar(TypeExpr::bar(e("A", 2)))),
            "bar(bar(A:2))"
        );
        assert_eq!(
            render(&TypeExpr::tensor(e("A", 2), e("B", 3))),
            "(A:2) * (B:3)"
        );
        let nested = TypeExpr::arrow(TypeExpr::arrow(e("A", 2), e("B", 2)), e("C", 2));
        assert_eq!(render(&nested), "(A:2 -> B:2) -> C:2");
    }

    #[test]
    fn syntax_errors_report_position() {
        match parse("A:2 -> ") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 7),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            parse("A:2 B:2"),
            Err(Error::Syntax { pos: 4, .. })
        ));
        assert!(matches!(parse("A 2"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("A:2 - B:2"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("bar(A:2"), Err(Error::Syntax { .. })));
    }

    #[test]
    fn semantic_errors() {
        assert_eq!(parse("A:2 -> A:2"), Err(Error::DuplicateLabel("A".into())));
        assert!(matches!(parse("A:0"), Err(Error::BadDimension { .. })));
        assert!(matches!(
            parse("comb2(A:2,B:2,C:2)"),
            Err(Error::CombArity {
                n: 2,
                expected: 4,
                got: 3
            })
        ));
        assert!(matches!(parse("comb0(A:2)"), Err(Error::EmptyComb)));
        assert_eq!(parse("A:2 & B:2"), Err(Error::SpaceMismatch));
        assert!(parse("(A:2 * B:2) & (B:2 * A:2)").is_ok());
    }

    #[test]
    fn trivial_system_allowed() {
        assert_eq!(
            parse("I:1 -> A:2").unwrap(),
            TypeExpr::arrow(e("I", 1), e("A", 2))
        );
    }

    #[test]
    fn random_types_are_valid_and_bounded() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let opts = RandomTypeOptions::default();
        for _ in 0..300 {
            let t = random_type(&mut rng, &opts);
            t.validate().unwrap();
            assert!(t.depth() <= opts.max_depth, "{t}");
            assert_eq!(parse(&render(&t)).unwrap(), t);
        }
    }
}
