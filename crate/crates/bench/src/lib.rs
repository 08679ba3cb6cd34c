//! Shared fixtures for the criterion benches.

use hoqc_core::{desugar_comb, SystemLabel, TypeExpr};

/// Qubit wires `prefix0 … prefix{count-1}`.
pub fn qubits(prefix: &str, count: usize) -> Vec<SystemLabel> {
    (0..count)
        .map(|i| SystemLabel::new(format!("{prefix}{i}"), 2))
        .collect()
}

/// The `n`-comb on qubit wires `A0 … A{2n-1}`.
pub fn qubit_comb(n: usize) -> TypeExpr {
    desugar_comb(n, &qubits("A", 2 * n)).expect("valid comb")
}
