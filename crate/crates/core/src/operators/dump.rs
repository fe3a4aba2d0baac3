//! Debug dumps of operators.
//!
//! JSON: `{"space": <HilbertSpace>, "dim": d, "entries": [[re, im], ...]}` with
//! d² pairs in row-major order.
//!
//! Binary: the 8 ASCII bytes `SYMPOP01`, the dimension as a little-endian u64,
//! then d² (re, im) pairs of little-endian f64 in row-major order. The space
//! label is not stored; the reader supplies it.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::operators::{HilbertSpace, Operator};
use crate::{Complex, Error, Matrix, Result};

const MAGIC: &[u8; 8] = b"SYMPOP01";

#[derive(Serialize, Deserialize)]
struct OperatorDump {
    space: HilbertSpace,
    dim: usize,
    entries: Vec<[f64; 2]>,
}

pub fn to_json(op: &Operator) -> Result<String> {
    let d = op.dim();
    let mut entries = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            let z = op.get(i, j);
            entries.push([z.re, z.im]);
        }
    }
    let dump = OperatorDump {
        space: op.space().clone(),
        dim: d,
        entries,
    };
    Ok(serde_json::to_string(&dump)?)
}

pub fn from_json(text: &str) -> Result<Operator> {
    let dump: OperatorDump = serde_json::from_str(text)?;
    if dump.entries.len() != dump.dim * dump.dim {
        return Err(Error::InvalidArgument(format!(
            "expected {} entries, found {}",
            dump.dim * dump.dim,
            dump.entries.len()
        )));
    }
    let d = dump.dim;
    let m = Matrix::from_fn(d, d, |i, j| {
        let [re, im] = dump.entries[i * d + j];
        Complex::new(re, im)
    });
    Operator::new(dump.space, m)
}

pub fn write_binary(op: &Operator, mut out: impl Write) -> Result<()> {
    let d = op.dim();
    out.write_all(MAGIC)?;
    out.write_all(&(d as u64).to_le_bytes())?;
    for i in 0..d {
        for j in 0..d {
            let z = op.get(i, j);
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

pub fn read_binary(space: HilbertSpace, mut input: impl Read) -> Result<Operator> {
    let mut magic = [0u8; 8];
    input.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::InvalidArgument("not an operator dump".into()));
    }
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let d = u64::from_le_bytes(word) as usize;
    if d != space.dim() {
        return Err(Error::ShapeMismatch { rows: d, cols: d, dim: space.dim() });
    }
    let mut m = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            input.read_exact(&mut word)?;
            let re = f64::from_le_bytes(word);
            input.read_exact(&mut word)?;
            let im = f64::from_le_bytes(word);
            m[(i, j)] = Complex::new(re, im);
        }
    }
    Operator::new(space, m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::random_hermitian;
    use proptest::prelude::*;

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn dumps_round_trip_exactly(seed in any::<u64>(), spins in 1usize..4) {
            let space = HilbertSpace::spin_register(spins).unwrap();
            let op = random_hermitian(space.clone(), seed);
            let back = from_json(&to_json(&op).unwrap()).unwrap();
            prop_assert_eq!(back.space(), op.space());
            prop_assert_eq!(back.distance(&op).unwrap(), 0.0);
            let mut bytes = Vec::new();
            write_binary(&op, &mut bytes).unwrap();
            prop_assert_eq!(bytes.len(), 16 + 16 * op.dim() * op.dim());
            let back = read_binary(space, bytes.as_slice()).unwrap();
            prop_assert_eq!(back.distance(&op).unwrap(), 0.0);
        }
    }

    #[test]
    fn rejects_garbage() {
        let space = HilbertSpace::spin_register(1).unwrap();
        assert!(read_binary(space, &b"NOTADUMP________"[..]).is_err());
        assert!(from_json("{\"space\":{\"kind\":\"spin-register\",\"spins\":1},\"dim\":2,\"entries\":[]}").is_err());
    }
}
