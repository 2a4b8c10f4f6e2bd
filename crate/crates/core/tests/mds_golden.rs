mod common;

use ppir_core::field::PrimeField;
use ppir_core::mds::{Combinations, Generator};
use proptest::prelude::*;

fn gf11() -> PrimeField {
    PrimeField::new(11).unwrap()
}

fn ex2() -> Generator {
    Generator::from_explicit(&common::ex2_generator(), gf11()).unwrap()
}

/// Determinant by permutation expansion, reduced mod q at the end.
fn leibniz_det(m: &[Vec<i64>], q: i64) -> i64 {
    fn perms(n: usize) -> Vec<Vec<usize>> {
        if n == 0 {
            return vec![vec![]];
        }
        let mut out = Vec::new();
        for p in perms(n - 1) {
            for pos in 0..=p.len() {
                let mut x = p.clone();
                x.insert(pos, n - 1);
                out.push(x);
            }
        }
        out
    }
    let n = m.len();
    let mut total = 0i64;
    for p in perms(n) {
        let inversions = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).filter(|&(a, b)| p[a] > p[b]).count();
        let sign = if inversions % 2 == 0 { 1 } else { -1 };
        total += sign * (0..n).map(|r| m[r][p[r]]).product::<i64>();
    }
    total.rem_euclid(q)
}

#[test]
fn example_generator_minors_all_nonzero() {
    let g = common::ex2_generator();
    let mut count = 0;
    for cols in Combinations::new(8, 5) {
        let sub: Vec<Vec<i64>> = g.iter().map(|row| cols.iter().map(|&c| row[c] as i64).collect()).collect();
        assert_ne!(leibniz_det(&sub, 11), 0, "columns {cols:?}");
        count += 1;
    }
    assert_eq!(count, 56);
    assert!(ex2().verify_mds().is_ok());
}

#[test]
fn example_encode_golden() {
    let g = ex2();
    let f = gf11();
    let c1 = g.encode(&f.vector(&[0, 1, 9, 6, 8]).unwrap()).unwrap();
    assert_eq!(c1.values(), vec![0, 1, 9, 6, 8, 10, 8, 10]);
    let c2 = g.encode(&f.vector(&[1, 7, 4, 1, 3]).unwrap()).unwrap();
    assert_eq!(c2.values(), vec![1, 7, 4, 1, 3, 0, 0, 7]);
    assert_eq!(c1.parity(5).iter().map(|x| x.value()).collect::<Vec<_>>(), vec![10, 8, 10]);
}

#[test]
fn example_decode_golden() {
    let g = ex2();
    let f = gf11();
    let m1 = g.decode_from_positions(&[0, 1, 5, 6, 7], &f.vector(&[0, 1, 10, 8, 10]).unwrap()).unwrap();
    assert_eq!(m1.iter().map(|x| x.value()).collect::<Vec<_>>(), vec![0, 1, 9, 6, 8]);
    let m2 = g.decode_from_positions(&[0, 1, 5, 6, 7], &f.vector(&[1, 7, 0, 0, 7]).unwrap()).unwrap();
    assert_eq!(m2.iter().map(|x| x.value()).collect::<Vec<_>>(), vec![1, 7, 4, 1, 3]);
    // third coordinates of m1 and m2
    assert_eq!((m1[2].value(), m2[2].value()), (9, 4));
}

#[test]
fn example_inverse_matches_reference() {
    let f = gf11();
    let g = common::ex2_generator();
    let sub: Vec<Vec<_>> =
        g.iter().map(|row| [0, 1, 5, 6, 7].iter().map(|&c| f.element(row[c]).unwrap()).collect()).collect();
    let inv = ppir_core::mds::invert(&sub).unwrap();
    let expected = [[1, 0, 6, 7, 4], [0, 1, 1, 5, 9], [0, 0, 1, 4, 4], [0, 0, 10, 5, 1], [0, 0, 5, 2, 5]];
    let got: Vec<Vec<u64>> = inv.iter().map(|r| r.iter().map(|x| x.value()).collect()).collect();
    assert_eq!(got, expected.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
}

#[test]
fn reed_solomon_minors_match_leibniz() {
    let f = PrimeField::new(7).unwrap();
    let g = Generator::systematic_rs(6, 3, f).unwrap();
    for cols in Combinations::new(6, 3) {
        let sub: Vec<Vec<i64>> = g.rows().iter().map(|row| cols.iter().map(|&c| row[c].value() as i64).collect()).collect();
        assert_ne!(leibniz_det(&sub, 7), 0);
    }
}

proptest! {
    #[test]
    fn round_trip_any_positions(
        (q, n, k) in prop_oneof![Just((5u64, 4usize, 2usize)), Just((7, 6, 3)), Just((11, 8, 5)), Just((13, 12, 7))],
        seed in any::<u64>(),
        pick in any::<u64>(),
    ) {
        let f = PrimeField::new(q).unwrap();
        let g = Generator::systematic_rs(n, k, f).unwrap();
        let msg: Vec<_> = (0..k).map(|i| f.reduce(seed.rotate_left(7 * i as u32) ^ i as u64)).collect();
        let word = g.encode(&msg).unwrap();
        prop_assert_eq!(&word.symbols()[..k], &msg[..]);
        let all: Vec<Vec<usize>> = Combinations::new(n, k).collect();
        let positions = &all[(pick % all.len() as u64) as usize];
        let values: Vec<_> = positions.iter().map(|&p| word.symbols()[p]).collect();
        prop_assert_eq!(g.decode_from_positions(positions, &values).unwrap(), msg);
    }
}
