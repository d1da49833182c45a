//! Binary state snapshots: little-endian `n: u64`, `p: f64`, `τ: f64`,
//! followed by the `4n` values of `φ₁, φ₂, ν₁, ν₂` in that order.

use std::io::{self, Read, Write};

use super::FieldState;

pub fn write_snapshot<W: Write>(mut out: W, p: f64, state: &FieldState) -> io::Result<()> {
    out.write_all(&(state.len() as u64).to_le_bytes())?;
    out.write_all(&p.to_le_bytes())?;
    out.write_all(&state.tau.to_le_bytes())?;
    for comp in &state.comps {
        for v in comp {
            out.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Returns `(p, state)`.
pub fn read_snapshot<R: Read>(mut input: R) -> io::Result<(f64, FieldState)> {
    let mut buf = [0u8; 8];
    input.read_exact(&mut buf)?;
    let n = u64::from_le_bytes(buf) as usize;
    if n > 1 << 24 {
        return Err(io::Error::new(io::ErrorKind::InvalidData, "snapshot node count out of range"));
    }
    input.read_exact(&mut buf)?;
    let p = f64::from_le_bytes(buf);
    input.read_exact(&mut buf)?;
    let tau = f64::from_le_bytes(buf);
    let mut state = FieldState::zeros(tau, n);
    for comp in state.comps.iter_mut() {
        for v in comp.iter_mut() {
            input.read_exact(&mut buf)?;
            *v = f64::from_le_bytes(buf);
        }
    }
    Ok((p, state))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut st = FieldState::zeros(1.25, 5);
        for (i, v) in st.comps.iter_mut().flatten().enumerate() {
            *v = (i as f64).sin() * 1e-3 + f64::EPSILON * i as f64;
        }
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, 7.0, &st).unwrap();
        assert_eq!(bytes.len(), 24 + 4 * 5 * 8);
        let (p, back) = read_snapshot(bytes.as_slice()).unwrap();
        assert_eq!(p, 7.0);
        assert_eq!(back, st);
    }

    #[test]
    fn truncated_input_fails() {
        let st = FieldState::zeros(0.0, 3);
        let mut bytes = Vec::new();
        write_snapshot(&mut bytes, 3.0, &st).unwrap();
        bytes.pop();
        assert!(read_snapshot(bytes.as_slice()).is_err());
    }
}
