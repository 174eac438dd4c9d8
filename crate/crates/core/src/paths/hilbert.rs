use super::{Path, PathMethod};
use crate::dataset::{squared_distance, Covariates};
use crate::error::{input_err, Result};

pub const DEFAULT_HILBERT_BITS: u32 = 10;

/// Transposed Hilbert index of a point on a `bits`-per-axis grid (Skilling's
/// axes-to-transpose transform). Entry `i` holds the bits contributed by axis `i`.
fn axes_to_transpose(coords: &mut [u32], bits: u32) {
    let n = coords.len();
    let m = 1u32 << (bits - 1);
    let mut q = m;
    while q > 1 {
        let p = q - 1;
        for i in 0..n {
            if coords[i] & q != 0 {
                coords[0] ^= p;
            } else {
                let t = (coords[0] ^ coords[i]) & p;
                coords[0] ^= t;
                coords[i] ^= t;
            }
        }
        q >>= 1;
    }
    for i in 1..n {
        coords[i] ^= coords[i - 1];
    }
    let mut t = 0;
    q = m;
    while q > 1 {
        if coords[n - 1] & q != 0 {
            t ^= q - 1;
        }
        q >>= 1;
    }
    for c in coords.iter_mut() {
        *c ^= t;
    }
}

/// Hilbert key packed MSB-first: bit level `bits-1` of every axis, then the next level, ...
///
/// Keys are compared as bit strings, so d·bits may exceed 64.
pub fn hilbert_key(grid_coords: &[u32], bits: u32) -> Vec<u64> {
    let mut t = grid_coords.to_vec();
    axes_to_transpose(&mut t, bits);
    let total = t.len() * bits as usize;
    let mut key = vec![0u64; total.div_ceil(64)];
    let mut pos = 0usize;
    for level in (0..bits).rev() {
        for &c in &t {
            if (c >> level) & 1 == 1 {
                key[pos / 64] |= 1u64 << (63 - pos % 64);
            }
            pos += 1;
        }
    }
    key
}

/// Order points along a discretized Hilbert curve.
///
/// Each coordinate is min-max scaled onto `0..2^bits`; constant columns map
/// to 0. Equal keys keep their original index order.
pub fn hilbert_path(points: &Covariates, bits: u32) -> Result<Path> {
    let n = points.rows();
    if n < 2 {
        return input_err("a path needs at least two units");
    }
    if !(1..=31).contains(&bits) {
        return input_err(format!("bits_per_dim = {bits} outside 1..=31"));
    }
    let d = points.cols();
    let top = (1u64 << bits) - 1;
    let ranges: Vec<(f64, f64)> = (0..d)
        .map(|j| {
            points
                .column(j)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        })
        .collect();

    let mut keyed: Vec<(Vec<u64>, usize)> = (0..n)
        .map(|i| {
            let grid: Vec<u32> = points
                .row(i)
                .iter()
                .zip(&ranges)
                .map(|(&v, &(lo, hi))| {
                    if hi > lo {
                        let s = ((v - lo) / (hi - lo) * (top + 1) as f64).floor();
                        (s.max(0.0) as u64).min(top) as u32
                    } else {
                        0
                    }
                })
                .collect();
            (hilbert_key(&grid, bits), i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let order: Vec<usize> = keyed.into_iter().map(|(_, i)| i).collect();
    let total = order
        .windows(2)
        .map(|w| squared_distance(points.row(w[0]), points.row(w[1])).sqrt())
        .sum();
    Ok(Path::new_unchecked(order, PathMethod::Hilbert, total))
}
