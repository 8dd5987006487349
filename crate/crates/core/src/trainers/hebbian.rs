use crate::linalg::Matrix;
use crate::patterns::PatternSet;

use super::{Rule, WeightMatrix};

/// `W = (1/N) XᵀX` with the diagonal zeroed.
pub fn train_hebbian(set: &PatternSet) -> WeightMatrix {
    let n = set.dim();
    let mut w = Matrix::zeros(n, n);
    // Integer accumulation keeps W exactly symmetric.
    let mut acc = vec![0i64; n * n];
    for xi in set.patterns() {
        let v = xi.values();
        for i in 0..n {
            let row = &mut acc[i * n..(i + 1) * n];
            let vi = i64::from(v[i]);
            for (a, &vj) in row.iter_mut().zip(v) {
                *a += vi * i64::from(vj);
            }
        }
    }
    let scale = n as f64;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                w.set(i, j, acc[i * n + j] as f64 / scale);
            }
        }
    }
    WeightMatrix { weights: w, rule: Rule::Hebbian }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::patterns::{generate_patterns, Pattern};
    use proptest::prelude::*;

    #[test]
    fn single_pattern_outer_product() {
        let set = generate_patterns(7, 1, 5).unwrap();
        let xi = set.patterns()[0].to_f64();
        let w = train_hebbian(&set);
        for i in 0..7 {
            for j in 0..7 {
                let expect = if i == j { 0.0 } else { xi[i] * xi[j] / 7.0 };
                assert_eq!(w.get(i, j), expect);
            }
        }
    }

    #[test]
    fn two_by_two_cancels() {
        let set = PatternSet::new(
            vec![Pattern::new(vec![1, 1]).unwrap(), Pattern::new(vec![1, -1]).unwrap()],
            0,
        )
        .unwrap();
        let w = train_hebbian(&set);
        assert_eq!(w.matrix().as_slice(), &[0.0, 0.0, 0.0, 0.0]);
        assert_eq!(w.rule(), Rule::Hebbian);
    }

    proptest! {
        #[test]
        fn symmetric_zero_diagonal_sign_invariant(n in 1usize..30, p in 1usize..15, seed: u64) {
            let set = generate_patterns(n, p, seed).unwrap();
            let w = train_hebbian(&set);
            for i in 0..n {
                prop_assert_eq!(w.get(i, i), 0.0);
                for j in 0..n {
                    prop_assert_eq!(w.get(i, j), w.get(j, i));
                }
            }
            prop_assert_eq!(&w, &train_hebbian(&set.negated()));
        }
    }
}
