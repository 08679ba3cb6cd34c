//! Seeded batch checks shared by the command line and the test suites.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use super::{check_cascade, check_deterministic, pairing, random_comb_choi, random_deterministic};
use crate::error::{Error, Result};
use crate::linops::{project_cells, DenseOp, C64};
use crate::signature::{bar_sig, signature_of, Signature};
use crate::typelang::{desugar_comb, random_type, RandomTypeOptions, SystemLabel, TypeExpr};

/// Largest total dimension drawn by [`random_small_type`].
pub const SMALL_TYPE_DIM: u128 = 64;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SuiteReport {
    pub claim: String,
    pub params: BTreeMap<String, usize>,
    pub samples: usize,
    pub failures: usize,
    /// Largest deviation seen (meaning depends on the claim).
    pub worst: f64,
    pub passed: bool,
}

/// A random type whose operators stay at most [`SMALL_TYPE_DIM`] wide.
pub fn random_small_type<R: Rng + ?Sized>(rng: &mut R) -> (TypeExpr, Signature) {
    let opts = RandomTypeOptions {
        max_leaves: 5,
        ..RandomTypeOptions::default()
    };
    loop {
        let t = random_type(rng, &opts);
        if let Ok(s) = signature_of(&t) {
            if s.total_dim() <= SMALL_TYPE_DIM {
                return (t, s);
            }
        }
    }
}

/// `Tr[XY] = 1` for deterministic `X` of a type and `Y` of its dual.
pub fn duality_suite<R: Rng + ?Sized>(
    rng: &mut R,
    types: usize,
    samples: usize,
    tol: f64,
) -> Result<SuiteReport> {
    let mut worst = 0.0f64;
    let mut failures = 0;
    for _ in 0..types {
        let (_, sig) = random_small_type(rng);
        let dual = bar_sig(&sig);
        for _ in 0..samples {
            let x = random_deterministic(&sig, rng)?;
            let y = random_deterministic(&dual, rng)?;
            let dev = (pairing(&x, &y)? - 1.0).abs();
            worst = worst.max(dev);
            failures += usize::from(dev > tol);
        }
    }
    Ok(SuiteReport {
        claim: "duality".into(),
        params: BTreeMap::from([("types".into(), types), ("samples".into(), samples)]),
        samples: types * samples,
        failures,
        worst,
        passed: failures == 0,
    })
}

/// Qubit wires `A0 … A{2n-1}`.
pub fn comb_wires(n: usize) -> Vec<SystemLabel> {
    (0..2 * n)
        .map(|i| SystemLabel::new(format!("A{i}"), 2))
        .collect()
}

fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    (rng.random_range(lo.ln()..hi.ln())).exp()
}

fn random_hermitian<R: Rng + ?Sized>(rng: &mut R, factors: &[SystemLabel]) -> Result<DenseOp> {
    let n: usize = factors.iter().map(|l| l.dim).product();
    let g = nalgebra::DMatrix::from_fn(n, n, |_, _| {
        C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
    });
    DenseOp::new(factors.to_vec(), (&g + g.adjoint()) * C64::new(0.5, 0.0))
}

/// Operators around the comb set: realised combs, sampled deterministic
/// events, and versions pushed off the set by a small forbidden component,
/// a trace error, or a generic positive operator. Perturbations are at
/// least `1e-6` in size.
pub fn cascade_sample<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    sig: &Signature,
    kind: usize,
) -> Result<DenseOp> {
    let wires = comb_wires(n);
    let order: Vec<&str> = wires.iter().map(|l| l.name.as_str()).collect();
    let mut base = || -> Result<DenseOp> { random_deterministic(sig, rng)?.permuted(&order) };
    match kind % 5 {
        0 => random_comb_choi(rng, &wires, n, 2),
        1 => base(),
        2 => {
            let x = base()?;
            let h = random_hermitian(rng, &wires)?;
            let all_ones = (1u64 << sig.keys().len()) - 1;
            let bad = project_cells(&h, sig, |m| m != all_ones && !sig.contains_mask(m))?;
            let eps = log_uniform(rng, 1e-6, 1e-2);
            x.add_scaled(&bad, eps / bad.hs_norm())
        }
        3 => {
            let x = base()?;
            let sign = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            Ok(x.scaled(1.0 + sign * log_uniform(rng, 1e-6, 1e-2)))
        }
        _ => {
            let h = random_hermitian(rng, &wires)?;
            let shifted =
                h.add_scaled(&DenseOp::identity(wires.clone())?, 1.0 - h.min_eigenvalue())?;
            let target = sig.lambda_f64() * sig.total_dim() as f64;
            Ok(shifted.scaled(target / shifted.trace().re))
        }
    }
}

/// The cascade test and the signature test give the same verdict.
pub fn cascade_agreement<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    samples: usize,
    tol: f64,
) -> Result<SuiteReport> {
    if n < 1 {
        return Err(Error::InvalidArgument(
            "comb size must be at least 1".into(),
        ));
    }
    let wires = comb_wires(n);
    let sig = signature_of(&desugar_comb(n, &wires)?)?;
    let mut failures = 0;
    for i in 0..samples {
        let x = cascade_sample(rng, n, &sig, i)?;
        let a = check_cascade(&x, &wires, n, tol)?.verdict;
        let b = check_deterministic(&x, &sig, tol)?.verdict;
        failures += usize::from(a != b);
    }
    Ok(SuiteReport {
        claim: "cascade-agreement".into(),
        params: BTreeMap::from([("n".into(), n), ("samples".into(), samples)]),
        samples,
        failures,
        worst: failures as f64,
        passed: failures == 0,
    })
}
