//! Sobol sequence in up to 36 dimensions (Joe–Kuo direction numbers),
//! unscrambled, in Gray-code order with the all-zero first point skipped.

use crate::error::{Error, Result};

pub const MAX_DIM: usize = 36;
const BITS: usize = 32;

/// `(s, a, m_1..m_s)` for dimensions 2..=36 of new-joe-kuo-6.21201; unused
/// trailing `m` entries are zero.
const JOE_KUO: [(u32, u32, [u32; 7]); MAX_DIM - 1] = [
    (1, 0, [1, 0, 0, 0, 0, 0, 0]), // 2
    (2, 1, [1, 3, 0, 0, 0, 0, 0]), // 3
    (3, 1, [1, 3, 1, 0, 0, 0, 0]), // 4
    (3, 2, [1, 1, 1, 0, 0, 0, 0]), // 5
    (4, 1, [1, 1, 3, 3, 0, 0, 0]), // 6
    (4, 4, [1, 3, 5, 13, 0, 0, 0]), // 7
    (5, 2, [1, 1, 5, 5, 17, 0, 0]), // 8
    (5, 4, [1, 1, 5, 5, 5, 0, 0]), // 9
    (5, 7, [1, 1, 7, 11, 19, 0, 0]), // 10
    (5, 11, [1, 1, 5, 1, 1, 0, 0]), // 11
    (5, 13, [1, 1, 1, 3, 11, 0, 0]), // 12
    (5, 14, [1, 3, 5, 5, 31, 0, 0]), // 13
    (6, 1, [1, 3, 3, 9, 7, 49, 0]), // 14
    (6, 13, [1, 1, 1, 15, 21, 21, 0]), // 15
    (6, 16, [1, 3, 1, 13, 27, 49, 0]), // 16
    (6, 19, [1, 1, 1, 15, 7, 5, 0]), // 17
    (6, 22, [1, 3, 1, 15, 13, 25, 0]), // 18
    (6, 25, [1, 1, 5, 5, 19, 61, 0]), // 19
    (7, 1, [1, 3, 7, 11, 23, 15, 103]), // 20
    (7, 4, [1, 3, 7, 13, 13, 15, 69]), // 21
    (7, 7, [1, 1, 3, 13, 7, 35, 63]), // 22
    (7, 8, [1, 3, 5, 9, 1, 25, 53]), // 23
    (7, 14, [1, 3, 1, 13, 9, 35, 107]), // 24
    (7, 19, [1, 3, 1, 5, 27, 61, 31]), // 25
    (7, 21, [1, 1, 5, 11, 19, 41, 61]), // 26
    (7, 28, [1, 3, 5, 3, 3, 13, 69]), // 27
    (7, 31, [1, 1, 7, 13, 1, 19, 1]), // 28
    (7, 32, [1, 3, 7, 5, 13, 19, 59]), // 29
    (7, 37, [1, 1, 3, 9, 25, 29, 41]), // 30
    (7, 41, [1, 3, 5, 13, 23, 1, 55]), // 31
    (7, 42, [1, 3, 7, 3, 13, 59, 17]), // 32
    (7, 50, [1, 3, 1, 3, 5, 53, 69]), // 33
    (7, 55, [1, 1, 5, 5, 23, 33, 13]), // 34
    (7, 56, [1, 1, 7, 7, 1, 61, 123]), // 35
    (7, 59, [1, 1, 7, 9, 13, 61, 49]), // 36
];

fn directions(dim: usize) -> Vec<[u32; BITS]> {
    let mut out = Vec::with_capacity(dim);
    let mut first = [0u32; BITS];
    for (i, v) in first.iter_mut().enumerate() {
        *v = 1 << (31 - i);
    }
    out.push(first);
    for &(s, a, m) in JOE_KUO.iter().take(dim.saturating_sub(1)) {
        let s = s as usize;
        let mut v = [0u32; BITS];
        for i in 0..s.min(BITS) {
            v[i] = m[i] << (31 - i);
        }
        for i in s..BITS {
            let mut x = v[i - s] ^ (v[i - s] >> s);
            for k in 1..s {
                if (a >> (s - 1 - k)) & 1 == 1 {
                    x ^= v[i - k];
                }
            }
            v[i] = x;
        }
        out.push(v);
    }
    out
}

/// Iterator over Sobol points in `[0, 1)^d`.
#[derive(Debug, Clone)]
pub struct Sobol {
    v: Vec<[u32; BITS]>,
    state: Vec<u32>,
    index: u64,
}

impl Sobol {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 || dim > MAX_DIM {
            return Err(Error::InvalidInput(format!("Sobol dimension must be in 1..={MAX_DIM}, got {dim}")));
        }
        Ok(Self {
            v: directions(dim),
            state: vec![0; dim],
            index: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.state.len()
    }

    /// First `n` points after the origin.
    pub fn take_points(dim: usize, n: usize) -> Result<Vec<Vec<f64>>> {
        Ok(Self::new(dim)?.take(n).collect())
    }
}

impl Iterator for Sobol {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        // the point with Gray-code index i+1 differs from i's in the
        // direction number of the lowest zero bit of i
        let c = self.index.trailing_ones() as usize;
        if c >= BITS {
            return None;
        }
        for (x, v) in self.state.iter_mut().zip(&self.v) {
            *x ^= v[c];
        }
        self.index += 1;
        Some(self.state.iter().map(|&x| x as f64 / 4_294_967_296.0).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_points_in_two_dims() {
        let p = Sobol::take_points(2, 4).unwrap();
        assert_eq!(p, vec![vec![0.5, 0.5], vec![0.75, 0.25], vec![0.25, 0.75], vec![0.375, 0.375]]);
    }

    #[test]
    fn dimension_limits() {
        assert!(Sobol::new(0).is_err());
        assert!(Sobol::new(37).is_err());
        assert!(Sobol::new(36).is_ok());
    }

    #[test]
    fn points_are_distinct_and_in_unit_cube() {
        let p = Sobol::take_points(5, 1000).unwrap();
        for (i, a) in p.iter().enumerate() {
            assert!(a.iter().all(|x| (0.0..1.0).contains(x)));
            for b in &p[..i] {
                assert_ne!(a, b);
            }
        }
    }
}
