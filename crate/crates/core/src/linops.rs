//! Dense complex operators on labelled tensor factors.
//!
//! Index convention: row-major, leftmost factor most significant. The Choi
//! operator of a map with Kraus operators `K_k` is
//! `Σ_k |K_k⟩⟩⟨⟨K_k|` with factors `[out…, in…]`, i.e. the canonical
//! `|Ω⟩ = Σ_n |n⟩|n⟩` convention, and all transposes are taken in the
//! computational basis.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signature::{BitString, Signature};
use crate::typelang::SystemLabel;

pub type C64 = Complex64;

/// Largest total dimension accepted by the matrix file format.
pub const MAX_FILE_DIM: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct DenseOp {
    factors: Vec<SystemLabel>,
    data: DMatrix<C64>,
}

fn product(dims: impl IntoIterator<Item = usize>) -> usize {
    dims.into_iter().product()
}

/// Offsets inside the full index of every joint value of `subset`.
fn offsets(factors: &[SystemLabel], subset: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; factors.len()];
    for i in (0..factors.len().saturating_sub(1)).rev() {
        strides[i] = strides[i + 1] * factors[i + 1].dim;
    }
    let mut out = vec![0usize];
    for &f in subset {
        let d = factors[f].dim;
        out = out
            .iter()
            .flat_map(|&base| {
                let stride = strides[f];
                (0..d).map(move |v| base + v * stride)
            })
            .collect();
    }
    out
}

impl DenseOp {
    pub fn new(factors: Vec<SystemLabel>, data: DMatrix<C64>) -> Result<Self> {
        for (i, f) in factors.iter().enumerate() {
            if f.dim < 1 {
                return Err(Error::BadDimension {
                    name: f.name.clone(),
                    dim: f.dim,
                });
            }
            if factors[..i].iter().any(|g| g.name == f.name) {
                return Err(Error::DuplicateLabel(f.name.clone()));
            }
        }
        let n = product(factors.iter().map(|f| f.dim));
        if data.nrows() != n || data.ncols() != n {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} matrix for factors of total dimension {n}",
                data.nrows(),
                data.ncols()
            )));
        }
        Ok(Self { factors, data })
    }

    pub fn zeros(factors: Vec<SystemLabel>) -> Result<Self> {
        let n = product(factors.iter().map(|f| f.dim));
        Self::new(factors, DMatrix::zeros(n, n))
    }

    pub fn identity(factors: Vec<SystemLabel>) -> Result<Self> {
        let n = product(factors.iter().map(|f| f.dim));
        Self::new(factors, DMatrix::identity(n, n))
    }

    pub fn factors(&self) -> &[SystemLabel] {
        &self.factors
    }

    pub fn data(&self) -> &DMatrix<C64> {
        &self.data
    }

    pub fn into_data(self) -> DMatrix<C64> {
        self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.factors.iter().position(|f| f.name == name)
    }

    pub fn trace(&self) -> C64 {
        self.data.trace()
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self {
            factors: self.factors.clone(),
            data: &self.data * C64::new(c, 0.0),
        }
    }

    pub fn adjoint(&self) -> Self {
        Self {
            factors: self.factors.clone(),
            data: self.data.adjoint(),
        }
    }

    /// `X + c·Y` after aligning `Y` to `X`'s factor order.
    pub fn add_scaled(&self, other: &DenseOp, c: f64) -> Result<Self> {
        let other = other.aligned_to(self)?;
        Ok(Self {
            factors: self.factors.clone(),
            data: &self.data + &other.data * C64::new(c, 0.0),
        })
    }

    /// Hilbert–Schmidt (Frobenius) norm.
    pub fn hs_norm(&self) -> f64 {
        self.data.norm()
    }

    /// `‖X − X†‖_max`.
    pub fn hermiticity_error(&self) -> f64 {
        let n = self.dim();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.data[(i, j)] - self.data[(j, i)].conj()).norm());
            }
        }
        worst
    }

    pub fn hermitian_part(&self) -> Self {
        let data = (&self.data + self.data.adjoint()) * C64::new(0.5, 0.0);
        Self {
            factors: self.factors.clone(),
            data,
        }
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.hermitian_part().data)
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }

    /// Drops dimension-one factors; the matrix is unchanged.
    pub fn squeezed(&self) -> Self {
        Self {
            factors: self
                .factors
                .iter()
                .filter(|f| !f.is_trivial())
                .cloned()
                .collect(),
            data: self.data.clone(),
        }
    }

    /// Reorders the tensor factors to `order` (names).
    pub fn permuted<S: AsRef<str>>(&self, order: &[S]) -> Result<Self> {
        if order.len() != self.factors.len() {
            return Err(Error::DimensionMismatch(format!(
                "reordering {} factors into {}",
                self.factors.len(),
                order.len()
            )));
        }
        let mut pos = Vec::with_capacity(order.len());
        for name in order {
            let name = name.as_ref();
            let p = self
                .position(name)
                .ok_or_else(|| Error::UnknownLabel(name.into()))?;
            if pos.contains(&p) {
                return Err(Error::DuplicateLabel(name.into()));
            }
            pos.push(p);
        }
        if pos.iter().enumerate().all(|(i, &p)| i == p) {
            return Ok(self.clone());
        }
        let map = offsets(&self.factors, &pos);
        let n = self.dim();
        let data = DMatrix::from_fn(n, n, |i, j| self.data[(map[i], map[j])]);
        let factors = pos.iter().map(|&p| self.factors[p].clone()).collect();
        Ok(Self { factors, data })
    }

    /// `other` reordered to this operator's factors; trivial factors may
    /// differ between the two.
    pub fn aligned_to(&self, target: &DenseOp) -> Result<Self> {
        let mine = self.squeezed();
        let theirs = target.squeezed();
        let mut a: Vec<&SystemLabel> = mine.factors.iter().collect();
        let mut b: Vec<&SystemLabel> = theirs.factors.iter().collect();
        a.sort();
        b.sort();
        if a != b {
            return Err(Error::DimensionMismatch(format!(
                "factors {} vs {}",
                list(&self.factors),
                list(&target.factors)
            )));
        }
        let order: Vec<&str> = theirs.factors.iter().map(|f| f.name.as_str()).collect();
        let data = mine.permuted(&order)?.data;
        Ok(Self {
            factors: target.factors.clone(),
            data,
        })
    }

    pub fn to_json(&self) -> MatrixJson {
        MatrixJson {
            factors: self.factors.clone(),
            data: self.data.transpose().iter().map(|z| [z.re, z.im]).collect(),
        }
    }
}

fn list(f: &[SystemLabel]) -> String {
    let v: Vec<String> = f.iter().map(|l| l.to_string()).collect();
    format!("[{}]", v.join(", "))
}

/// Matrix file format: factor list plus `N²` `[re, im]` pairs, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub factors: Vec<SystemLabel>,
    pub data: Vec<[f64; 2]>,
}

impl MatrixJson {
    pub fn into_op(self) -> Result<DenseOp> {
        let mut n: usize = 1;
        for f in &self.factors {
            if f.dim < 1 {
                return Err(Error::Format(format!(
                    "factor `{}` has dimension 0",
                    f.name
                )));
            }
            n = n
                .checked_mul(f.dim)
                .filter(|&n| n <= MAX_FILE_DIM)
                .ok_or_else(|| Error::Format(format!("total dimension exceeds {MAX_FILE_DIM}")))?;
        }
        if self.data.len() != n * n {
            return Err(Error::Format(format!(
                "expected {} entries, found {}",
                n * n,
                self.data.len()
            )));
        }
        if self.data.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Format("non-finite entry".into()));
        }
        let data =
            DMatrix::from_row_iterator(n, n, self.data.iter().map(|[re, im]| C64::new(*re, *im)));
        DenseOp::new(self.factors, data).map_err(|e| Error::Format(e.to_string()))
    }
}

pub fn read_matrix_json(text: &str) -> Result<DenseOp> {
    let parsed: MatrixJson =
        serde_json::from_str(text).map_err(|e| Error::Format(e.to_string()))?;
    parsed.into_op()
}

pub fn write_matrix_json(op: &DenseOp) -> String {
    serde_json::to_string(&op.to_json()).expect("matrix serialises")
}

pub fn kron(a: &DenseOp, b: &DenseOp) -> Result<DenseOp> {
    let clash: Vec<String> = a
        .factors
        .iter()
        .filter(|f| b.factors.iter().any(|g| g.name == f.name))
        .map(|f| f.name.clone())
        .collect();
    if !clash.is_empty() {
        return Err(Error::LabelClash(clash));
    }
    let mut factors = a.factors.clone();
    factors.extend(b.factors.iter().cloned());
    DenseOp::new(factors, a.data.kronecker(&b.data))
}

fn resolve(x: &DenseOp, names: &[&str]) -> Result<Vec<usize>> {
    let mut pos = Vec::with_capacity(names.len());
    for name in names {
        let p = x
            .position(name)
            .ok_or_else(|| Error::UnknownLabel((*name).into()))?;
        if !pos.contains(&p) {
            pos.push(p);
        }
    }
    Ok(pos)
}

/// Traces out the named factors; the remaining order is preserved.
pub fn partial_trace(x: &DenseOp, drop: &[&str]) -> Result<DenseOp> {
    let dropped = resolve(x, drop)?;
    let kept: Vec<usize> = (0..x.factors.len())
        .filter(|i| !dropped.contains(i))
        .collect();
    let ko = offsets(&x.factors, &kept);
    let to = offsets(&x.factors, &dropped);
    let m = ko.len();
    let data = DMatrix::from_fn(m, m, |i, j| {
        to.iter().map(|t| x.data[(ko[i] + t, ko[j] + t)]).sum()
    });
    let factors = kept.iter().map(|&i| x.factors[i].clone()).collect();
    DenseOp::new(factors, data)
}

/// `(I/d)_f ⊗ Tr_f X` for the factor at position `f`.
fn reduce_to_identity(factors: &[SystemLabel], data: &DMatrix<C64>, f: usize) -> DMatrix<C64> {
    let kept: Vec<usize> = (0..factors.len()).filter(|&i| i != f).collect();
    let ko = offsets(factors, &kept);
    let to = offsets(factors, &[f]);
    let scale = 1.0 / factors[f].dim as f64;
    let n = data.nrows();
    let mut out = DMatrix::zeros(n, n);
    for &ki in &ko {
        for &kj in &ko {
            let s: C64 = to.iter().map(|t| data[(ki + t, kj + t)]).sum::<C64>() * scale;
            for t in &to {
                out[(ki + t, kj + t)] = s;
            }
        }
    }
    out
}

/// Position in `x` of each signature key; bit `i` of a cell mask refers to
/// factor `positions[i]`.
fn key_positions(x: &DenseOp, sig: &Signature) -> Result<Vec<usize>> {
    let nontrivial = x.factors.iter().filter(|f| !f.is_trivial()).count();
    if nontrivial != sig.keys().len() {
        return Err(Error::KeyMismatch);
    }
    sig.keys()
        .iter()
        .map(|k| match x.position(&k.name) {
            Some(p) if x.factors[p].dim == k.dim => Ok(p),
            _ => Err(Error::KeyMismatch),
        })
        .collect()
}

/// Calls `visit(mask, Π_mask X)` for every cell, the all-ones cell included.
/// Factors are split one at a time, so the cost is `2^k` matrix passes.
fn for_each_cell<F: FnMut(u64, &DMatrix<C64>)>(x: &DenseOp, positions: &[usize], visit: &mut F) {
    fn go<F: FnMut(u64, &DMatrix<C64>)>(
        factors: &[SystemLabel],
        positions: &[usize],
        level: usize,
        mask: u64,
        data: &DMatrix<C64>,
        visit: &mut F,
    ) {
        if level == positions.len() {
            visit(mask, data);
            return;
        }
        let one = reduce_to_identity(factors, data, positions[level]);
        let zero = data - &one;
        go(factors, positions, level + 1, mask, &zero, visit);
        go(
            factors,
            positions,
            level + 1,
            mask | 1 << level,
            &one,
            visit,
        );
    }
    go(&x.factors, positions, 0, 0, &x.data, visit);
}

/// Sum of `Π_b X` over the cells accepted by `keep`.
pub fn project_cells<F: Fn(u64) -> bool>(x: &DenseOp, sig: &Signature, keep: F) -> Result<DenseOp> {
    let positions = key_positions(x, sig)?;
    let mut acc = DMatrix::zeros(x.dim(), x.dim());
    for_each_cell(x, &positions, &mut |mask, part| {
        if keep(mask) {
            acc += part;
        }
    });
    DenseOp::new(x.factors.clone(), acc)
}

/// Projection onto the span of the signature's cells (identity excluded).
pub fn project_allowed(x: &DenseOp, sig: &Signature) -> Result<DenseOp> {
    project_cells(x, sig, |m| sig.contains_mask(m))
}

/// `Π_b X`: `P₁ = (I/d)·Tr` on factors with bit 1, `P₀ = id − P₁` on bit 0.
pub fn project_component(x: &DenseOp, b: &BitString) -> Result<DenseOp> {
    let nontrivial: Vec<usize> = (0..x.factors.len())
        .filter(|&i| !x.factors[i].is_trivial())
        .collect();
    if b.len() != nontrivial.len() {
        return Err(Error::KeyMismatch);
    }
    let mut data = x.data.clone();
    for &f in &nontrivial {
        let bit = b.get(&x.factors[f].name).ok_or(Error::KeyMismatch)?;
        let one = reduce_to_identity(&x.factors, &data, f);
        data = if bit { one } else { data - one };
    }
    DenseOp::new(x.factors.clone(), data)
}

/// Hilbert–Schmidt masses of an operator per cell.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Decomposition {
    /// `‖Π_b X‖²` for every cell other than all-ones.
    pub coefficients: BTreeMap<BitString, f64>,
    /// `Tr X / d`, the coefficient of the identity.
    pub identity_coeff: f64,
    /// `‖Π_{1…1} X‖² = |Tr X|² / d`.
    pub identity_mass: f64,
}

impl Decomposition {
    pub fn total_mass(&self) -> f64 {
        self.identity_mass + self.coefficients.values().sum::<f64>()
    }

    /// `‖Π X‖` over cells outside the signature and the identity cell.
    pub fn forbidden_mass(&self, sig: &Signature) -> f64 {
        self.coefficients
            .iter()
            .filter(|(b, _)| !sig.contains(b))
            .map(|(_, m)| m)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn decompose(x: &DenseOp, sig: &Signature) -> Result<Decomposition> {
    let positions = key_positions(x, sig)?;
    let all_ones = (1u64 << positions.len()) - 1;
    let mut coefficients = BTreeMap::new();
    let mut identity_mass = 0.0;
    for_each_cell(x, &positions, &mut |mask, part| {
        let mass = part.norm_squared();
        if mask == all_ones {
            identity_mass = mass;
        } else {
            coefficients.insert(sig.mask_to_bits(mask), mass);
        }
    });
    Ok(Decomposition {
        coefficients,
        identity_coeff: x.trace().re / x.dim() as f64,
        identity_mass,
    })
}

/// `‖Σ_{b ∉ S ∪ {1…1}} Π_b X‖`.
pub fn forbidden_norm(x: &DenseOp, sig: &Signature) -> Result<f64> {
    let positions = key_positions(x, sig)?;
    let all_ones = (1u64 << positions.len()) - 1;
    let mut sq = 0.0;
    for_each_cell(x, &positions, &mut |mask, part| {
        if mask != all_ones && !sig.contains_mask(mask) {
            sq += part.norm_squared();
        }
    });
    Ok(sq.sqrt())
}

/// Choi operator `Σ_k |K_k⟩⟩⟨⟨K_k|` with factors `output ⧺ input`.
pub fn choi_from_kraus(
    kraus: &[DMatrix<C64>],
    input: &[SystemLabel],
    output: &[SystemLabel],
) -> Result<DenseOp> {
    let din = product(input.iter().map(|l| l.dim));
    let dout = product(output.iter().map(|l| l.dim));
    let n = din * dout;
    let mut data = DMatrix::zeros(n, n);
    for k in kraus {
        if k.nrows() != dout || k.ncols() != din {
            return Err(Error::ShapeMismatch(format!(
                "Kraus operator is {}x{}, expected {dout}x{din}",
                k.nrows(),
                k.ncols()
            )));
        }
        let v = DMatrix::from_row_iterator(n, 1, k.transpose().iter().copied());
        data += &v * v.adjoint();
    }
    let mut factors = output.to_vec();
    factors.extend_from_slice(input);
    DenseOp::new(factors, data)
}

/// `Tr_in[(I_out ⊗ ρ^T) R]`, where the input factors are those of `rho`
/// and the output factors are the rest of `R`'s, in `R`'s order.
pub fn apply_choi(r: &DenseOp, rho: &DenseOp) -> Result<DenseOp> {
    let rho = rho.squeezed();
    for f in &rho.factors {
        match r.position(&f.name) {
            Some(p) if r.factors[p].dim == f.dim => {}
            Some(_) => {
                return Err(Error::DimensionMismatch(format!(
                    "input factor `{}`",
                    f.name
                )))
            }
            None => return Err(Error::UnknownLabel(f.name.clone())),
        }
    }
    let out: Vec<SystemLabel> = r
        .factors
        .iter()
        .filter(|f| rho.position(&f.name).is_none())
        .cloned()
        .collect();
    let order: Vec<&str> = out
        .iter()
        .chain(&rho.factors)
        .map(|f| f.name.as_str())
        .collect();
    let r = r.permuted(&order)?;
    let dout = product(out.iter().map(|l| l.dim));
    let din = rho.dim();
    let data = DMatrix::from_fn(dout, dout, |o, o2| {
        let mut s = C64::new(0.0, 0.0);
        for i in 0..din {
            for i2 in 0..din {
                s += rho.data[(i2, i)] * r.data[(o * din + i2, o2 * din + i)];
            }
        }
        s
    });
    DenseOp::new(out, data)
}

/// `|i⟩⟨j|` on the given factors.
pub fn matrix_unit(factors: &[SystemLabel], i: usize, j: usize) -> Result<DenseOp> {
    let mut op = DenseOp::zeros(factors.to_vec())?;
    op.data[(i, j)] = C64::new(1.0, 0.0);
    Ok(op)
}

/// Choi operator of a multilinear supermap, obtained by evaluating it on
/// every tuple of matrix units of the slot spaces:
/// `C = Σ T(E_{i₁j₁}, …) ⊗ E_{i₁j₁} ⊗ …` with factors `output ⧺ slots…`.
pub fn supermap_choi<F>(
    mut evaluator: F,
    slots: &[Vec<SystemLabel>],
    output: &[SystemLabel],
) -> Result<DenseOp>
where
    F: FnMut(&[DenseOp]) -> Result<DenseOp>,
{
    let slot_dims: Vec<usize> = slots
        .iter()
        .map(|s| product(s.iter().map(|l| l.dim)))
        .collect();
    let dout = product(output.iter().map(|l| l.dim));
    let dslots: usize = slot_dims.iter().product();
    let mut factors = output.to_vec();
    for s in slots {
        factors.extend(s.iter().cloned());
    }
    let n = dout * dslots;
    let mut data = DMatrix::zeros(n, n);
    let pairs: usize = slot_dims.iter().map(|d| d * d).product();
    let mut units = Vec::with_capacity(slots.len());
    for mut code in 0..pairs {
        units.clear();
        let mut row = 0;
        let mut col = 0;
        for &d in &slot_dims {
            let ij = code % (d * d);
            code /= d * d;
            units.push((ij / d, ij % d));
        }
        // Slot indices are little-endian in `code`; assemble big-endian.
        let mut args = Vec::with_capacity(slots.len());
        for ((s, &d), &(i, j)) in slots.iter().zip(&slot_dims).zip(&units) {
            row = row * d + i;
            col = col * d + j;
            args.push(matrix_unit(s, i, j)?);
        }
        let value = evaluator(&args)?;
        let value = if value
            .factors
            .iter()
            .map(|f| &f.name)
            .eq(output.iter().map(|f| &f.name))
        {
            value
        } else {
            let order: Vec<&str> = output.iter().map(|f| f.name.as_str()).collect();
            value.permuted(&order)?
        };
        if value.dim() != dout {
            return Err(Error::ShapeMismatch(format!(
                "evaluator returned dimension {}, expected {dout}",
                value.dim()
            )));
        }
        for a in 0..dout {
            for b in 0..dout {
                let z = value.data[(a, b)];
                if z != C64::new(0.0, 0.0) {
                    data[(a * dslots + row, b * dslots + col)] += z;
                }
            }
        }
    }
    DenseOp::new(factors, data)
}

/// `Tr[XY]` after aligning `Y` to `X`. The imaginary part must vanish for
/// Hermitian inputs and is returned for the caller to inspect.
pub fn trace_product(x: &DenseOp, y: &DenseOp) -> Result<C64> {
    let y = y.aligned_to(x)?;
    Ok(x.data
        .iter()
        .zip(y.data.transpose().iter())
        .map(|(a, b)| a * b)
        .sum())
}
