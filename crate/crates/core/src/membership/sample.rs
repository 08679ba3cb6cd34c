use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linops::{choi_from_kraus, project_allowed, DenseOp, C64};
use crate::signature::Signature;
use crate::typelang::SystemLabel;

fn gaussian<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> DMatrix<C64> {
    DMatrix::from_fn(rows, cols, |_, _| {
        C64::new(
            rng.sample::<f64, _>(StandardNormal),
            rng.sample::<f64, _>(StandardNormal),
        )
    })
}

/// Haar-random isometry `rows × cols` (`rows ≥ cols`): QR of a complex
/// Gaussian matrix with the phases of `R`'s diagonal moved into `Q`.
pub fn haar_isometry<R: Rng + ?Sized>(
    rng: &mut R,
    rows: usize,
    cols: usize,
) -> Result<DMatrix<C64>> {
    if rows < cols {
        return Err(Error::InvalidArgument(format!(
            "isometry {rows}x{cols} needs rows >= cols"
        )));
    }
    let qr = gaussian(rng, rows, cols).qr();
    let r = qr.r();
    let mut q = qr.q();
    for j in 0..cols {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        for i in 0..rows {
            q[(i, j)] *= phase;
        }
    }
    Ok(q)
}

/// Kraus operators of a Stinespring-random channel with an `env`-dimensional
/// environment: `K_k[o, n] = V[(o, k), n]`.
pub fn random_channel_kraus<R: Rng + ?Sized>(
    rng: &mut R,
    din: usize,
    dout: usize,
    env: usize,
) -> Result<Vec<DMatrix<C64>>> {
    let v = haar_isometry(rng, dout * env, din)?;
    Ok((0..env)
        .map(|k| DMatrix::from_fn(dout, din, |o, n| v[(o * env + k, n)]))
        .collect())
}

/// Choi operator `[output, input]` of a random channel whose environment is
/// large enough to reach every channel.
pub fn random_channel_choi<R: Rng + ?Sized>(
    rng: &mut R,
    input: &SystemLabel,
    output: &SystemLabel,
) -> Result<DenseOp> {
    let kraus = random_channel_kraus(rng, input.dim, output.dim, input.dim * output.dim)?;
    choi_from_kraus(
        &kraus,
        std::slice::from_ref(input),
        std::slice::from_ref(output),
    )
}

/// Choi operator of an `n`-comb on `labels` realised as a chain of random
/// isometries `A_{2j} ⊗ M_j → A_{2j+1} ⊗ M_{j+1}` through a memory of
/// dimension `memory`; the last memory is discarded. Factors come back in
/// wire order `A_0 … A_{2n-1}`.
pub fn random_comb_choi<R: Rng + ?Sized>(
    rng: &mut R,
    labels: &[SystemLabel],
    n: usize,
    memory: usize,
) -> Result<DenseOp> {
    if n < 1 || labels.len() != 2 * n {
        return Err(Error::CombArity {
            n,
            expected: 2 * n,
            got: labels.len(),
        });
    }
    if memory < 1 {
        return Err(Error::InvalidArgument(
            "memory dimension must be at least 1".into(),
        ));
    }
    // `s` maps (inputs so far) to (outputs so far) ⊗ memory, memory last.
    let mut s = DMatrix::from_element(1, 1, C64::new(1.0, 0.0));
    let (mut din, mut dout, mut dmem) = (1usize, 1usize, 1usize);
    for j in 0..n {
        let a_in = labels[2 * j].dim;
        let a_out = labels[2 * j + 1].dim;
        let v = haar_isometry(rng, a_out * memory, a_in * dmem)?;
        let mut next = DMatrix::zeros(dout * a_out * memory, din * a_in);
        for outs in 0..dout {
            for ins in 0..din {
                for m in 0..dmem {
                    let amp = s[(outs * dmem + m, ins)];
                    if amp == C64::new(0.0, 0.0) {
                        continue;
                    }
                    for ai in 0..a_in {
                        for ao in 0..a_out {
                            for m2 in 0..memory {
                                let val = v[(ao * memory + m2, ai * dmem + m)] * amp;
                                next[((outs * a_out + ao) * memory + m2, ins * a_in + ai)] += val;
                            }
                        }
                    }
                }
            }
        }
        s = next;
        din *= a_in;
        dout *= a_out;
        dmem = memory;
    }
    let kraus: Vec<DMatrix<C64>> = (0..dmem)
        .map(|k| DMatrix::from_fn(dout, din, |o, i| s[(o * dmem + k, i)]))
        .collect();
    let inputs: Vec<SystemLabel> = labels.iter().step_by(2).cloned().collect();
    let outputs: Vec<SystemLabel> = labels.iter().skip(1).step_by(2).cloned().collect();
    let choi = choi_from_kraus(&kraus, &inputs, &outputs)?;
    let order: Vec<&str> = labels.iter().map(|l| l.name.as_str()).collect();
    choi.permuted(&order)
}

/// A deterministic event `λI + μT`, where `T` is a Gaussian Hermitian
/// operator projected onto the allowed cells and `μ = 0.9λ / |min eig T|`
/// keeps the spectrum positive. Returns exactly `λI` when no cell is
/// allowed.
pub fn random_deterministic<R: Rng + ?Sized>(sig: &Signature, rng: &mut R) -> Result<DenseOp> {
    let factors = sig.factors().to_vec();
    let lambda = sig.lambda_f64();
    let base = DenseOp::identity(factors.clone())?.scaled(lambda);
    if sig.is_empty() {
        return Ok(base);
    }
    let n = base.dim();
    let g = gaussian(rng, n, n);
    let herm = DenseOp::new(factors, (&g + g.adjoint()) * C64::new(0.5, 0.0))?;
    let t = project_allowed(&herm, sig)?.hermitian_part();
    let low = t.min_eigenvalue();
    if low >= 0.0 {
        return Ok(base);
    }
    let mu = 0.9 * lambda / low.abs();
    base.add_scaled(&t, mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn isometry_is_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = haar_isometry(&mut rng, 6, 3).unwrap();
        let g = v.adjoint() * &v;
        assert!((g - DMatrix::<C64>::identity(3, 3)).norm() < 1e-12);
        assert!(haar_isometry(&mut rng, 2, 3).is_err());
    }

    #[test]
    fn kraus_are_trace_preserving() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let k = random_channel_kraus(&mut rng, 3, 2, 4).unwrap();
        let s: DMatrix<C64> = k.iter().map(|kk| kk.adjoint() * kk).sum();
        assert!((s - DMatrix::<C64>::identity(3, 3)).norm() < 1e-12);
    }

    #[test]
    fn same_seed_same_sample() {
        let a = SystemLabel::new("A", 2);
        let b = SystemLabel::new("B", 2);
        let x = random_channel_choi(&mut ChaCha8Rng::seed_from_u64(9), &a, &b).unwrap();
        let y = random_channel_choi(&mut ChaCha8Rng::seed_from_u64(9), &a, &b).unwrap();
        assert_eq!(x, y);
    }

    #[test]
    fn comb_choi_has_unit_normalisation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let labels: Vec<SystemLabel> = (0..6)
            .map(|i| SystemLabel::new(format!("A{i}"), 2))
            .collect();
        let c = random_comb_choi(&mut rng, &labels, 3, 2).unwrap();
        assert_eq!(c.factors(), labels.as_slice());
        assert!((c.trace().re - 8.0).abs() < 1e-10);
        assert!(c.min_eigenvalue() > -1e-12);
    }
}
