//! Basis-index convention shared by the dense oracle and the MPS contraction.
//!
//! Amplitude index `idx` of an `n`-qubit vector carries qubit `k` in bit `k`:
//! qubit 0 is the least significant bit. For cluster states qubit `k` is the
//! `k`-th site in column-major order.

/// Value (0 or 1) of qubit `qubit` in basis index `idx`.
#[inline]
pub fn qubit_bit(idx: usize, qubit: usize) -> usize {
    (idx >> qubit) & 1
}

/// Basis index whose qubit `k` takes the value `bits[k]`.
pub fn basis_index(bits: &[u8]) -> usize {
    bits.iter()
        .enumerate()
        .fold(0, |acc, (k, &b)| acc | ((b as usize & 1) << k))
}

/// Removes qubit `qubit` from `idx`, shifting the higher qubits down by one.
#[inline]
pub fn remove_qubit(idx: usize, qubit: usize) -> usize {
    let low = idx & ((1 << qubit) - 1);
    let high = idx >> (qubit + 1);
    low | (high << qubit)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        let bits = [1u8, 0, 1, 1];
        let idx = basis_index(&bits);
        assert_eq!(idx, 0b1101);
        for (k, &b) in bits.iter().enumerate() {
            assert_eq!(qubit_bit(idx, k), b as usize);
        }
    }

    #[test]
    fn removing_a_qubit_shifts_higher_bits() {
        assert_eq!(remove_qubit(0b1101, 1), 0b111);
        assert_eq!(remove_qubit(0b1101, 0), 0b110);
        assert_eq!(remove_qubit(0b1101, 3), 0b101);
    }
}
