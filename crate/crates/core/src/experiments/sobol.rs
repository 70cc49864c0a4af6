//! Sobol′ points from the Joe–Kuo `new-joe-kuo-6` direction numbers.
//!
//! Points are generated in Gray-code order and the leading all-zero point is
//! skipped.

use std::sync::OnceLock;

const TABLE: &str = include_str!("../../data/new-joe-kuo-6.1024.txt");
const BITS: u32 = 32;

/// Largest supported dimension.
pub const MAX_DIM: usize = 1024;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SobolError {
    #[error("Sobol′ table supports at most {max} dimensions, {requested} requested; use uniform random points instead")]
    DimensionTooLarge { requested: usize, max: usize },
    #[error("point index overflow")]
    IndexOverflow,
}

fn directions() -> &'static Vec<[u32; BITS as usize]> {
    static DIRS: OnceLock<Vec<[u32; BITS as usize]>> = OnceLock::new();
    DIRS.get_or_init(|| {
        let mut out = Vec::with_capacity(MAX_DIM);
        let mut first = [0u32; BITS as usize];
        for (k, v) in first.iter_mut().enumerate() {
            *v = 1 << (BITS - 1 - k as u32);
        }
        out.push(first);
        for line in TABLE.lines().skip(1) {
            let nums: Vec<u32> = line.split_whitespace().map(|t| t.parse().expect("direction table")).collect();
            let (s, a) = (nums[1] as usize, nums[2]);
            let m = &nums[3..];
            let mut v = [0u32; BITS as usize];
            for k in 0..BITS as usize {
                v[k] = if k < s {
                    m[k] << (BITS - 1 - k as u32)
                } else {
                    let mut x = v[k - s] ^ (v[k - s] >> s);
                    for i in 1..s {
                        if (a >> (s - 1 - i)) & 1 == 1 {
                            x ^= v[k - i];
                        }
                    }
                    x
                };
            }
            out.push(v);
        }
        out
    })
}

/// Points `offset + 1 ..= offset + count` of the sequence (index 0 is the origin).
pub fn sobol_points(s: usize, count: usize, offset: u64) -> Result<Vec<Vec<f64>>, SobolError> {
    if s > MAX_DIM {
        return Err(SobolError::DimensionTooLarge { requested: s, max: MAX_DIM });
    }
    let end = offset.checked_add(count as u64).ok_or(SobolError::IndexOverflow)?;
    if end >= 1u64 << BITS {
        return Err(SobolError::IndexOverflow);
    }
    let dirs = directions();
    let scale = 1.0 / (1u64 << BITS) as f64;
    // Gray-code index g(i) = i ^ (i >> 1); start directly at `offset`
    let mut x = vec![0u32; s];
    let g = offset ^ (offset >> 1);
    for (j, xj) in x.iter_mut().enumerate() {
        for b in 0..BITS {
            if (g >> b) & 1 == 1 {
                *xj ^= dirs[j][b as usize];
            }
        }
    }
    let mut out = Vec::with_capacity(count);
    for i in offset..end {
        let c = (!i).trailing_zeros() as usize;
        for (j, xj) in x.iter_mut().enumerate() {
            *xj ^= dirs[j][c];
        }
        out.push(x.iter().map(|&v| v as f64 * scale).collect());
    }
    Ok(out)
}
