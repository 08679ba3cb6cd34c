//! The quantum switch: two channels applied in an order set by a control
//! qubit that travels with the system.

use serde::Serialize;

use super::{check_deterministic, forbidden_mass, MembershipReport};
use crate::combs::{permuted_comb_sig, CombSpec};
use crate::error::{Error, Result};
use crate::linops::{supermap_choi, DenseOp, C64};
use crate::signature::{signature_of, span_union, types_equal, Signature};
use crate::typelang::{SystemLabel, TypeExpr};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OrderResidual {
    pub order: String,
    pub forbidden_mass: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SwitchReport {
    pub d: usize,
    pub total_dim: usize,
    pub deterministic: MembershipReport,
    pub single_orders: Vec<OrderResidual>,
    pub union_forbidden_mass: f64,
    /// The span of the two orders coincides with the higher-order type.
    pub union_is_product_type: bool,
}

struct Wires {
    a: SystemLabel,
    b: SystemLabel,
    c: SystemLabel,
    d: SystemLabel,
    e: SystemLabel,
    f: SystemLabel,
}

impl Wires {
    fn new(d: usize) -> Self {
        let l = |n: &str, k| SystemLabel::new(n, k);
        Self {
            a: l("A", d),
            b: l("B", d),
            c: l("C", d),
            d: l("D", d),
            e: l("E", 2 * d),
            f: l("F", 2 * d),
        }
    }

    fn elem(l: &SystemLabel) -> TypeExpr {
        TypeExpr::Elementary(l.clone())
    }

    /// `((A→B) ⊗ (C→D)) → (E→F)`.
    fn product_type(&self) -> TypeExpr {
        TypeExpr::arrow(
            TypeExpr::tensor(
                TypeExpr::arrow(Self::elem(&self.a), Self::elem(&self.b)),
                TypeExpr::arrow(Self::elem(&self.c), Self::elem(&self.d)),
            ),
            TypeExpr::arrow(Self::elem(&self.e), Self::elem(&self.f)),
        )
    }

    /// The slot teeth visited in a fixed order, feeding the output tooth.
    fn fixed_order(&self, first_then_second: bool) -> Result<Signature> {
        let teeth = if first_then_second {
            vec![
                self.a.clone(),
                self.b.clone(),
                self.c.clone(),
                self.d.clone(),
            ]
        } else {
            vec![
                self.c.clone(),
                self.d.clone(),
                self.a.clone(),
                self.b.clone(),
            ]
        };
        let inner = permuted_comb_sig(&CombSpec::new(2, teeth)?)?;
        let outer = signature_of(&TypeExpr::arrow(Self::elem(&self.e), Self::elem(&self.f)))?;
        crate::signature::arrow_sig(&inner, &outer)
    }
}

/// `x ↦ (x / d, x % d)` for a Choi index with factors `[out, in]`.
fn split(x: usize, d: usize) -> (usize, usize) {
    (x / d, x % d)
}

/// Output vector `|W⟩⟩` (factors `[F, E]`) for the Kraus pair
/// `K = |o₁⟩⟨n₁|` on `A→B` and `L = |o₂⟩⟨n₂|` on `C→D`:
/// `W = KL ⊗ |0⟩⟨0| + LK ⊗ |1⟩⟨1|` on system ⊗ control.
fn switched_vector(d: usize, k: (usize, usize), l: (usize, usize)) -> Vec<(usize, f64)> {
    let dd = 2 * d;
    let mut out = Vec::with_capacity(2);
    // |o₁⟩⟨n₁| |o₂⟩⟨n₂| = δ(n₁, o₂) |o₁⟩⟨n₂|
    if k.1 == l.0 {
        out.push(((k.0 * 2) * dd + l.1 * 2, 1.0));
    }
    if l.1 == k.0 {
        out.push(((l.0 * 2 + 1) * dd + k.1 * 2 + 1, 1.0));
    }
    out
}

/// Choi operator of the switch on factors `[F, E, B, A, D, C]`.
pub fn switch_choi(d: usize) -> Result<DenseOp> {
    if d < 2 {
        return Err(Error::InvalidArgument(format!(
            "switch needs d >= 2, got {d}"
        )));
    }
    let w = Wires::new(d);
    let slots = vec![
        vec![w.b.clone(), w.a.clone()],
        vec![w.d.clone(), w.c.clone()],
    ];
    let output = vec![w.f.clone(), w.e.clone()];
    let out_dim = 4 * d * d;
    let evaluator = |args: &[DenseOp]| -> Result<DenseOp> {
        let mut data = nalgebra::DMatrix::<C64>::zeros(out_dim, out_dim);
        let (x, y) = (args[0].data(), args[1].data());
        for ((u1, v1), a) in x.iter_indexed() {
            for ((u2, v2), b) in y.iter_indexed() {
                let amp = a * b;
                for (r, wr) in switched_vector(d, split(u1, d), split(u2, d)) {
                    for (c, wc) in switched_vector(d, split(v1, d), split(v2, d)) {
                        data[(r, c)] += amp * wr * wc;
                    }
                }
            }
        }
        DenseOp::new(output.clone(), data)
    };
    supermap_choi(evaluator, &slots, &[w.f.clone(), w.e.clone()])
}

trait IndexedNonzero {
    fn iter_indexed(&self) -> Vec<((usize, usize), C64)>;
}

impl IndexedNonzero for nalgebra::DMatrix<C64> {
    fn iter_indexed(&self) -> Vec<((usize, usize), C64)> {
        let mut v = Vec::new();
        for i in 0..self.nrows() {
            for j in 0..self.ncols() {
                let z = self[(i, j)];
                if z != C64::new(0.0, 0.0) {
                    v.push(((i, j), z));
                }
            }
        }
        v
    }
}

/// Builds the switch for qudits of dimension `d`, checks it against the
/// higher-order type, and measures how far it sits from each fixed causal
/// order and from their span.
pub fn switch_demo(d: usize, tol: f64) -> Result<SwitchReport> {
    let choi = switch_choi(d)?;
    let w = Wires::new(d);
    let product = signature_of(&w.product_type())?;
    let deterministic = check_deterministic(&choi, &product, tol)?;
    let first = w.fixed_order(true)?;
    let second = w.fixed_order(false)?;
    let union = span_union(&first, &second)?;
    Ok(SwitchReport {
        d,
        total_dim: choi.dim(),
        deterministic,
        single_orders: vec![
            OrderResidual {
                order: "A->B then C->D".into(),
                forbidden_mass: forbidden_mass(&choi, &first)?,
            },
            OrderResidual {
                order: "C->D then A->B".into(),
                forbidden_mass: forbidden_mass(&choi, &second)?,
            },
        ],
        union_forbidden_mass: forbidden_mass(&choi, &union)?,
        union_is_product_type: types_equal(&union, &product),
    })
}
