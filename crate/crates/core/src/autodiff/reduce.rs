//! Order-fixed summation.
//!
//! Values are cut into consecutive blocks of [`BLOCK`] entries, each block is
//! summed left to right, and the block sums are combined by a balanced binary
//! tree over the block index range (split at `mid = lo + (hi - lo) / 2`). The
//! tree depends only on the input length, so serial and parallel evaluation
//! produce the same bits.

use rayon::prelude::*;

use crate::error::{Error, Result};

pub const BLOCK: usize = 256;

fn block_sum(xs: &[f64]) -> f64 {
    let mut acc = 0.0;
    for &x in xs {
        acc += x;
    }
    acc
}

fn tree(partials: &[f64]) -> f64 {
    match partials.len() {
        0 => 0.0,
        1 => partials[0],
        n => {
            let mid = n / 2;
            tree(&partials[..mid]) + tree(&partials[mid..])
        }
    }
}

/// Fixed-order sum without finiteness checks.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return block_sum(xs);
    }
    let partials: Vec<f64> = xs.chunks(BLOCK).map(block_sum).collect();
    tree(&partials)
}

fn check_finite(xs: &[f64]) -> Result<()> {
    if let Some(i) = xs.iter().position(|x| !x.is_finite()) {
        return Err(Error::numeric(
            "reduce",
            format!("element {i} is {}", xs[i]),
        ));
    }
    Ok(())
}

/// Fixed-order sum; rejects non-finite input.
pub fn deterministic_reduce(xs: &[f64]) -> Result<f64> {
    check_finite(xs)?;
    Ok(pairwise_sum(xs))
}

/// Same result as [`deterministic_reduce`], with block sums computed on the
/// rayon pool.
pub fn deterministic_reduce_par(xs: &[f64]) -> Result<f64> {
    check_finite(xs)?;
    if xs.len() <= BLOCK {
        return Ok(block_sum(xs));
    }
    let partials: Vec<f64> = xs.par_chunks(BLOCK).map(block_sum).collect();
    Ok(tree(&partials))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_sums() {
        assert_eq!(deterministic_reduce(&[1.0, 2.0, 3.0]).unwrap(), 6.0);
        assert_eq!(deterministic_reduce(&[]).unwrap(), 0.0);
    }

    #[test]
    fn reports_offending_index() {
        let err = deterministic_reduce(&[1.0, f64::NAN, 2.0]).unwrap_err();
        assert!(err.to_string().contains("element 1"), "{err}");
    }

    #[test]
    fn tree_shape_matches_manual_split() {
        let xs: Vec<f64> = (0..3 * BLOCK).map(|i| (i as f64).sqrt()).collect();
        let b: Vec<f64> = xs.chunks(BLOCK).map(block_sum).collect();
        let expected = b[0] + (b[1] + b[2]);
        assert_eq!(pairwise_sum(&xs), expected);
    }
}
