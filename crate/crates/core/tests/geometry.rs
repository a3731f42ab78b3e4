use proptest::prelude::*;
use spploc::geometry::{consistent, distance, multilaterate, position_in_subspace, Anchor, AnchorSet, Point};

/// Determinant of the `k x k` matrix of anchor differences, by cofactors.
fn det(rows: &[Vec<f64>]) -> f64 {
    match rows.len() {
        0 => 1.0,
        1 => rows[0][0],
        m => (0..m)
            .map(|c| {
                let minor: Vec<Vec<f64>> = rows[1..]
                    .iter()
                    .map(|r| r.iter().enumerate().filter(|&(j, _)| j != c).map(|(_, &x)| x).collect())
                    .collect();
                let sign = if c % 2 == 0 { 1.0 } else { -1.0 };
                sign * rows[0][c] * det(&minor)
            })
            .sum(),
    }
}

fn well_spread(points: &[Vec<f64>]) -> bool {
    let diffs: Vec<Vec<f64>> = points[1..]
        .iter()
        .map(|p| p.iter().zip(&points[0]).map(|(a, b)| a - b).collect())
        .collect();
    det(&diffs).abs() > 0.5
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn points(k: usize, count: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0..10.0f64, k), count)
}

fn instance() -> impl Strategy<Value = (usize, Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|k| (Just(k), points(k, k + 1), prop::collection::vec(-10.0..10.0f64, k)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn multilateration_recovers_the_point((k, anchors, target) in instance()) {
        prop_assume!(well_spread(&anchors));
        let set: AnchorSet = anchors
            .iter()
            .map(|a| Anchor::new(Point::from_slice(a), dist(a, &target)))
            .collect();
        let x = multilaterate(&set, k, 1e-9).unwrap();
        prop_assert!(dist(x.coords(), &target) < 1e-8, "{:?} vs {:?}", x, target);
    }

    #[test]
    fn consistency_is_symmetric(a in prop::collection::vec(-5.0..5.0f64, 2), b in prop::collection::vec(-5.0..5.0f64, 2), d in 0.0..15.0f64) {
        let (p, q) = (Point::from_slice(&a), Point::from_slice(&b));
        prop_assert_eq!(consistent(&p, &q, d, 1e-9), consistent(&q, &p, d, 1e-9));
        let exact = distance(&p, &q).unwrap();
        prop_assert!(consistent(&p, &q, exact, 1e-12));
    }

    #[test]
    fn incremental_frame_is_isometric(
        (k, pts) in (1usize..=3).prop_flat_map(|k| (Just(k), points(k, k + 4)))
    ) {
        prop_assume!(well_spread(&pts[..=k]));
        let mut frame = vec![Point::origin(k)];
        for i in 1..=k {
            let set: AnchorSet = (0..i)
                .map(|j| Anchor::new(frame[j].clone(), dist(&pts[i], &pts[j])))
                .collect();
            frame.push(position_in_subspace(&set, i - 1, k, 1e-9).unwrap());
        }
        for p in &pts[k + 1..] {
            let set: AnchorSet = (0..=k)
                .map(|j| Anchor::new(frame[j].clone(), dist(p, &pts[j])))
                .collect();
            frame.push(multilaterate(&set, k, 1e-7).unwrap());
        }
        for i in 0..pts.len() {
            for j in 0..i {
                let image = distance(&frame[i], &frame[j]).unwrap();
                prop_assert!((image - dist(&pts[i], &pts[j])).abs() < 1e-6);
            }
        }
    }
}
