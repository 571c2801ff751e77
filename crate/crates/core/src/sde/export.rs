use std::io::{Read, Write};

use ndarray::{Array3, ArrayView3};

use crate::error::{Error, Result};
use crate::model::TimeGrid;
use crate::scalar::Scalar;

/// CSV with one row per path and knot: `path,step,t,<prefix>0,<prefix>1,…`.
pub fn write_csv<S: Scalar, W: Write>(
    mut out: W,
    values: ArrayView3<'_, S>,
    grid: &TimeGrid<S>,
    prefix: &str,
) -> Result<()> {
    let (paths, knots, width) = values.dim();
    let mut header = String::from("path,step,t");
    for i in 0..width {
        header.push_str(&format!(",{prefix}{i}"));
    }
    writeln!(out, "{header}")?;
    for p in 0..paths {
        for j in 0..knots {
            let mut line = format!("{p},{j},{}", grid.t(j).as_f64());
            for i in 0..width {
                line.push_str(&format!(",{:e}", values[[p, j, i]].as_f64()));
            }
            writeln!(out, "{line}")?;
        }
    }
    Ok(())
}

/// Layout of the binary dump: four little-endian `u64` words `{M, N, n, seed}`
/// followed by `M·(N+1)·n` little-endian `f64` values in row-major order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BinaryHeader {
    pub paths: u64,
    pub steps: u64,
    pub width: u64,
    pub seed: u64,
}

pub fn write_binary<S: Scalar, W: Write>(mut out: W, values: ArrayView3<'_, S>, seed: u64) -> Result<()> {
    let (paths, knots, width) = values.dim();
    for word in [paths as u64, knots as u64 - 1, width as u64, seed] {
        out.write_all(&word.to_le_bytes())?;
    }
    let mut buf = Vec::with_capacity(values.len() * 8);
    for v in values.iter() {
        buf.extend_from_slice(&v.as_f64().to_le_bytes());
    }
    out.write_all(&buf)?;
    Ok(())
}

pub fn read_binary<R: Read>(mut input: R) -> Result<(BinaryHeader, Array3<f64>)> {
    let mut word = [0u8; 8];
    let mut words = [0u64; 4];
    for w in words.iter_mut() {
        input.read_exact(&mut word)?;
        *w = u64::from_le_bytes(word);
    }
    let header = BinaryHeader {
        paths: words[0],
        steps: words[1],
        width: words[2],
        seed: words[3],
    };
    let shape = (header.paths as usize, header.steps as usize + 1, header.width as usize);
    let mut bytes = Vec::new();
    input.read_to_end(&mut bytes)?;
    if bytes.len() != shape.0 * shape.1 * shape.2 * 8 {
        return Err(Error::Config(format!(
            "binary payload has {} bytes, header implies {}",
            bytes.len(),
            shape.0 * shape.1 * shape.2 * 8
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
        .collect();
    Ok((header, Array3::from_shape_vec(shape, data).expect("checked length")))
}
