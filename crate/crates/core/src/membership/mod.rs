//! Numeric membership of concrete operators in the deterministic and event
//! sets of a type.

mod sample;
pub mod suites;
mod switch;

pub use sample::{
    haar_isometry, random_channel_choi, random_channel_kraus, random_comb_choi,
    random_deterministic,
};
pub use switch::{switch_choi, switch_demo, SwitchReport};

use nalgebra::{DMatrix, SymmetricEigen};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linops::{forbidden_norm, partial_trace, project_allowed, trace_product, DenseOp, C64};
use crate::signature::Signature;
use crate::typelang::SystemLabel;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 5000;

/// Sweeps over which the event gap must move before it is called a plateau.
const PLATEAU_WINDOW: usize = 100;
const PLATEAU_REL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MembershipReport {
    pub verdict: bool,
    pub psd_deficit: f64,
    pub trace_deviation: f64,
    pub forbidden_mass: f64,
    pub tolerance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gap: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
}

impl MembershipReport {
    fn new(psd_deficit: f64, trace_deviation: f64, forbidden_mass: f64, tolerance: f64) -> Self {
        let verdict =
            psd_deficit <= tolerance && trace_deviation <= tolerance && forbidden_mass <= tolerance;
        Self {
            verdict,
            psd_deficit,
            trace_deviation,
            forbidden_mass,
            tolerance,
            gap: None,
            iterations: None,
        }
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol.is_finite() && tol > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "tolerance must be positive, got {tol}"
        )))
    }
}

fn psd_deficit(x: &DenseOp) -> f64 {
    (-x.min_eigenvalue()).max(0.0)
}

/// HS norm of the forbidden cells plus the anti-Hermitian part, which lies
/// outside every real span of Hermitian cells.
fn forbidden_mass(x: &DenseOp, sig: &Signature) -> Result<f64> {
    let herm = x.hermitian_part();
    let anti = x.add_scaled(&herm, -1.0)?.hs_norm();
    Ok(forbidden_norm(&herm, sig)?.hypot(anti))
}

/// Is `X` in `T₁(x)`: positive, trace `λ·d`, and no weight outside `Δ`?
pub fn check_deterministic(x: &DenseOp, sig: &Signature, tol: f64) -> Result<MembershipReport> {
    check_tol(tol)?;
    let expected = sig.lambda_f64() * sig.total_dim() as f64;
    let trace_deviation = (x.trace() - C64::new(expected, 0.0)).norm();
    let forbidden = forbidden_mass(x, sig)?;
    Ok(MembershipReport::new(
        psd_deficit(x),
        trace_deviation,
        forbidden,
        tol,
    ))
}

/// Comb membership through the partial-trace cascade on
/// `labels = A_0 … A_{2n-1}`: `Tr_{A_{2j+1}} R^{(j)} = I_{A_{2j}} ⊗ R^{(j-1)}`
/// down to a scalar that must equal one. The chain residual is reported
/// as `forbidden_mass` and the final trace error as `trace_deviation`.
pub fn check_cascade(
    x: &DenseOp,
    labels: &[SystemLabel],
    n: usize,
    tol: f64,
) -> Result<MembershipReport> {
    check_tol(tol)?;
    if n < 1 || labels.len() != 2 * n {
        return Err(Error::CombArity {
            n,
            expected: 2 * n,
            got: labels.len(),
        });
    }
    let mine = x.squeezed();
    let wanted: Vec<&SystemLabel> = labels.iter().filter(|l| !l.is_trivial()).collect();
    if mine.factors().len() != wanted.len() || wanted.iter().any(|l| !mine.factors().contains(l)) {
        return Err(Error::DimensionMismatch(format!(
            "operator factors do not match the {} comb wires",
            labels.len()
        )));
    }
    let present = |l: &SystemLabel| !l.is_trivial();
    let mut r = mine.hermitian_part();
    let mut residual_sq = 0.0;
    for j in (0..n).rev() {
        let (input, output) = (&labels[2 * j], &labels[2 * j + 1]);
        let drop_out: Vec<&str> = [output]
            .into_iter()
            .filter(|l| present(l))
            .map(|l| l.name.as_str())
            .collect();
        let t = partial_trace(&r, &drop_out)?;
        let drop_in: Vec<&str> = [input]
            .into_iter()
            .filter(|l| present(l))
            .map(|l| l.name.as_str())
            .collect();
        let next = partial_trace(&t, &drop_in)?.scaled(1.0 / input.dim as f64);
        if present(input) {
            let rebuilt = crate::linops::kron(&DenseOp::identity(vec![input.clone()])?, &next)?;
            residual_sq += t.add_scaled(&rebuilt, -1.0)?.hs_norm().powi(2);
        } else {
            residual_sq += t.add_scaled(&next, -1.0)?.hs_norm().powi(2);
        }
        r = next;
    }
    let scalar = r.trace();
    let in_dims: f64 = labels.iter().step_by(2).map(|l| l.dim as f64).product();
    let trace_deviation = (scalar - C64::new(1.0, 0.0)).norm() * in_dims;
    let anti = x.add_scaled(&x.hermitian_part(), -1.0)?.hs_norm();
    Ok(MembershipReport::new(
        psd_deficit(x),
        trace_deviation,
        residual_sq.sqrt().hypot(anti),
        tol,
    ))
}

/// `Tr[XY]`, real part. Errors if the imaginary part exceeds `1e-10` while
/// both inputs are Hermitian.
pub fn pairing(x: &DenseOp, y: &DenseOp) -> Result<f64> {
    if x.dim() != y.dim() {
        return Err(Error::DimensionMismatch(format!(
            "dimensions {} and {}",
            x.dim(),
            y.dim()
        )));
    }
    let v = trace_product(x, y)?;
    if v.im.abs() > 1e-10 && x.hermiticity_error() <= 1e-12 && y.hermiticity_error() <= 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "pairing of Hermitian operators has imaginary part {}",
            v.im
        )));
    }
    Ok(v.re)
}

fn project_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let eig = SymmetricEigen::new((m + m.adjoint()) * C64::new(0.5, 0.0));
    let vals = eig.eigenvalues.map(|v| C64::new(v.max(0.0), 0.0));
    let v = &eig.eigenvectors;
    v * DMatrix::from_diagonal(&vals) * v.adjoint()
}

/// Is `X` an event of the type, i.e. dominated by some deterministic
/// event? Searches for `P ⪰ 0` with `X + P ∈ λI + span Δ` by Dykstra
/// alternation between the cone and the affine set. Feasible once the gap
/// between the two iterates drops to `tol`; infeasible on a gap plateau or
/// when `max_iter` sweeps run out.
pub fn check_event(
    x: &DenseOp,
    sig: &Signature,
    tol: f64,
    max_iter: usize,
) -> Result<MembershipReport> {
    check_tol(tol)?;
    if max_iter < 1 {
        return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
    }
    let h = x.hermitian_part();
    let deficit = psd_deficit(x);
    let lambda = sig.lambda_f64();
    let expected = lambda * sig.total_dim() as f64;
    let trace_excess = (x.trace().re - expected).max(0.0);
    let anti = x.add_scaled(&h, -1.0)?.hs_norm();

    let n = x.dim();
    let shift = DMatrix::<C64>::identity(n, n) * C64::new(lambda, 0.0) - h.data();
    let affine = |p: &DMatrix<C64>| -> Result<DMatrix<C64>> {
        let z = DenseOp::new(h.factors().to_vec(), h.data() + p)?;
        Ok(project_allowed(&z, sig)?.into_data() + &shift)
    };

    let mut a = affine(&DMatrix::zeros(n, n))?;
    let mut correction = DMatrix::<C64>::zeros(n, n);
    let mut gap = f64::INFINITY;
    let mut history = Vec::new();
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        let shifted = &a + &correction;
        let c = project_psd(&shifted);
        correction = shifted - &c;
        a = affine(&c)?;
        gap = (&c - &a).norm();
        if gap <= tol {
            break;
        }
        history.push(gap);
        if history.len() > PLATEAU_WINDOW {
            let old = history[history.len() - 1 - PLATEAU_WINDOW];
            if (old - gap).abs() <= PLATEAU_REL * gap {
                break;
            }
        }
    }
    let mut report = MembershipReport::new(deficit, trace_excess, gap.hypot(anti), tol);
    report.gap = Some(gap);
    report.iterations = Some(iterations);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linops::{choi_from_kraus, kron};
    use crate::signature::{bar_sig, signature_of};
    use crate::typelang::{desugar_comb, parse};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn q(name: &str) -> SystemLabel {
        SystemLabel::new(name, 2)
    }

    fn sig(text: &str) -> Signature {
        signature_of(&parse(text).unwrap()).unwrap()
    }

    fn identity_channel() -> DenseOp {
        choi_from_kraus(&[DMatrix::identity(2, 2)], &[q("A")], &[q("B")]).unwrap()
    }

    #[test]
    fn lambda_identity_is_deterministic() {
        for text in [
            "A:2",
            "A:2 -> B:3",
            "comb2(A:2, B:2, C:2, D:2)",
            "bar(A:2 * B:2)",
        ] {
            let s = sig(text);
            let x = DenseOp::identity(s.factors().to_vec())
                .unwrap()
                .scaled(s.lambda_f64());
            assert!(
                check_deterministic(&x, &s, 1e-12).unwrap().verdict,
                "{text}"
            );
        }
    }

    #[test]
    fn scaled_channel_fails_on_trace() {
        let r =
            check_deterministic(&identity_channel().scaled(0.9), &sig("A:2 -> B:2"), 1e-9).unwrap();
        assert!(!r.verdict);
        assert!((r.trace_deviation - 0.2).abs() < 1e-12);
    }

    #[test]
    fn complement_rejects_channel() {
        let r =
            check_deterministic(&identity_channel(), &bar_sig(&sig("A:2 -> B:2")), 1e-9).unwrap();
        assert!(!r.verdict);
        assert!(r.forbidden_mass > 0.1);
    }

    #[test]
    fn non_hermitian_is_forbidden() {
        let mut data = identity_channel().into_data();
        data[(0, 1)] += C64::new(0.0, 0.1);
        let x = DenseOp::new(vec![q("B"), q("A")], data).unwrap();
        assert!(
            !check_deterministic(&x, &sig("A:2 -> B:2"), 1e-9)
                .unwrap()
                .verdict
        );
    }

    #[test]
    fn cascade_small_cases() {
        let l1 = [q("A"), q("B")];
        let w = identity_channel().permuted(&["A", "B"]).unwrap();
        assert!(check_cascade(&w, &l1, 1, 1e-9).unwrap().verdict);

        let l2: Vec<SystemLabel> = ["A0", "A1", "A2", "A3"].iter().map(|n| q(n)).collect();
        let id = DenseOp::identity(l2.clone()).unwrap().scaled(0.25);
        assert!(check_cascade(&id, &l2, 2, 1e-9).unwrap().verdict);
        assert!(
            !check_cascade(&id.scaled(1.1), &l2, 2, 1e-9)
                .unwrap()
                .verdict
        );
        assert!(check_cascade(&id, &l2, 1, 1e-9).is_err());
    }

    #[test]
    fn cascade_rejects_signalling_backwards() {
        // Output A1 prepared in the state later fed in at A2: wrong causal order.
        let l: Vec<SystemLabel> = ["A0", "A1", "A2", "A3"].iter().map(|n| q(n)).collect();
        let w = choi_from_kraus(&[DMatrix::identity(2, 2)], &[q("A2")], &[q("A1")]).unwrap();
        let rest = kron(
            &DenseOp::identity(vec![q("A0")]).unwrap().scaled(0.5),
            &DenseOp::identity(vec![q("A3")]).unwrap().scaled(0.5),
        )
        .unwrap();
        let x = kron(&w, &rest)
            .unwrap()
            .permuted(&["A0", "A1", "A2", "A3"])
            .unwrap()
            .scaled(2.0);
        let det = check_deterministic(
            &x,
            &signature_of(&desugar_comb(2, &l).unwrap()).unwrap(),
            1e-9,
        )
        .unwrap();
        let cas = check_cascade(&x, &l, 2, 1e-9).unwrap();
        assert!(!cas.verdict);
        assert_eq!(det.verdict, cas.verdict);
    }

    #[test]
    fn pairing_of_identities() {
        let s = sig("(A:2 -> B:3) * C:2");
        let b = bar_sig(&s);
        let x = DenseOp::identity(s.factors().to_vec())
            .unwrap()
            .scaled(s.lambda_f64());
        let y = DenseOp::identity(b.factors().to_vec())
            .unwrap()
            .scaled(b.lambda_f64());
        assert!((pairing(&x, &y).unwrap() - 1.0).abs() < 1e-12);
        let rho = DenseOp::identity(vec![q("A")]).unwrap().scaled(0.5);
        let two = DenseOp::identity(vec![q("A")]).unwrap().scaled(2.0);
        assert!((pairing(&rho, &two).unwrap() - 2.0).abs() < 1e-12);
        assert!(pairing(
            &rho,
            &DenseOp::identity(vec![SystemLabel::new("A", 3)]).unwrap()
        )
        .is_err());
    }

    #[test]
    fn event_checks() {
        let s = sig("A:2 -> B:2");
        let w = identity_channel();
        let det = check_event(&w, &s, 1e-7, 5000).unwrap();
        assert!(det.verdict);
        assert_eq!(det.iterations, Some(1));
        assert!(check_event(&w.scaled(0.5), &s, 1e-7, 5000).unwrap().verdict);
        let over = check_event(&w.scaled(2.0), &s, 1e-7, 5000).unwrap();
        assert!(!over.verdict);
        assert!(over.gap.unwrap() > 1e-3);
    }

    #[test]
    fn non_positive_event_is_reported() {
        let s = sig("A:2 -> B:2");
        let x = identity_channel().scaled(-0.1);
        let r = check_event(&x, &s, 1e-7, 100).unwrap();
        assert!(!r.verdict);
        assert!(r.psd_deficit > 0.1);
    }

    #[test]
    fn random_deterministic_passes() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for text in [
            "A:2",
            "A:2 -> B:2",
            "comb2(A:2, B:2, C:2, D:2)",
            "(A:2 -> B:3) & (A:2 -> B:3)",
            "bar(A:3) * B:2",
        ] {
            let s = sig(text);
            for _ in 0..5 {
                let x = random_deterministic(&s, &mut rng).unwrap();
                let r = check_deterministic(&x, &s, 1e-10).unwrap();
                assert!(r.verdict, "{text}: {r:?}");
                assert!(r.forbidden_mass <= 1e-12);
            }
        }
    }

    #[test]
    fn random_state_is_density_matrix() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random_deterministic(&sig("A:2"), &mut rng).unwrap();
        assert!((x.trace().re - 1.0).abs() < 1e-12);
        assert!(x.min_eigenvalue() > 0.0);
        assert!(x.hermiticity_error() < 1e-14);
    }

    #[test]
    fn effect_sample_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = sig("bar(A:3)");
        assert!(s.is_empty());
        let x = random_deterministic(&s, &mut rng).unwrap();
        assert_eq!(x, DenseOp::identity(s.factors().to_vec()).unwrap());
    }

    #[test]
    fn bad_tolerance() {
        let s = sig("A:2");
        let x = DenseOp::identity(vec![q("A")]).unwrap();
        assert!(check_deterministic(&x, &s, 0.0).is_err());
        assert!(check_event(&x, &s, 1e-9, 0).is_err());
    }
}
