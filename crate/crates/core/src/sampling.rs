//! Regular grids, Latin hypercubes and uniform random designs.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::seed::rng_from;
use crate::space::ParameterSpace;

/// `g^p` points on a regular grid with endpoints included. A single edge
/// point sits at the axis midpoint. Ordered lexicographically, first axis
/// slowest. `g = 0` yields no points.
pub fn grid(g: usize, space: &ParameterSpace) -> Vec<Vec<f64>> {
    if g == 0 {
        return Vec::new();
    }
    let p = space.dim();
    let axis_values: Vec<Vec<f64>> = (0..p)
        .map(|i| {
            let (lo, hi) = (space.lower()[i], space.upper()[i]);
            if g == 1 {
                vec![0.5 * (lo + hi)]
            } else {
                (0..g)
                    .map(|k| {
                        if k == g - 1 {
                            hi
                        } else {
                            lo + (hi - lo) * k as f64 / (g - 1) as f64
                        }
                    })
                    .collect()
            }
        })
        .collect();

    let total = g.pow(p as u32);
    let mut points = Vec::with_capacity(total);
    let mut index = vec![0usize; p];
    for _ in 0..total {
        points.push((0..p).map(|i| axis_values[i][index[i]]).collect());
        for axis in (0..p).rev() {
            index[axis] += 1;
            if index[axis] < g {
                break;
            }
            index[axis] = 0;
        }
    }
    points
}

/// Classic Latin hypercube: each axis is cut into `n` equal strata, each
/// stratum holds exactly one point, jittered uniformly inside it.
pub fn latin_hypercube(n: usize, space: &ParameterSpace, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed);
    let p = space.dim();
    let mut points = vec![vec![0.0; p]; n];
    for axis in 0..p {
        let mut strata: Vec<usize> = (0..n).collect();
        strata.shuffle(&mut rng);
        let (lo, width) = (space.lower()[axis], space.width(axis));
        for (point, stratum) in points.iter_mut().zip(strata) {
            let u: f64 = rng.random();
            let v = lo + width * (stratum as f64 + u) / n as f64;
            point[axis] = v.min(space.upper()[axis]);
        }
    }
    points
}

/// Independent uniform draws over the hyperrectangle.
pub fn uniform_random(n: usize, space: &ParameterSpace, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_from(seed);
    (0..n).map(|_| uniform_point(&mut rng, space)).collect()
}

pub(crate) fn uniform_point<R: Rng + ?Sized>(rng: &mut R, space: &ParameterSpace) -> Vec<f64> {
    (0..space.dim())
        .map(|i| space.lower()[i] + space.width(i) * rng.random::<f64>())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn unit(p: usize) -> ParameterSpace {
        ParameterSpace::cube(0.0, 1.0, p).unwrap()
    }

    fn stratum(v: f64, lo: f64, width: f64, n: usize) -> usize {
        (((v - lo) / width * n as f64).floor() as usize).min(n - 1)
    }

    #[test]
    fn grid_of_unit_square() {
        let g = grid(2, &unit(2));
        assert_eq!(
            g,
            vec![vec![0.0, 0.0], vec![0.0, 1.0], vec![1.0, 0.0], vec![1.0, 1.0]]
        );
    }

    #[test]
    fn grid_includes_center_and_corners() {
        let g = grid(3, &ParameterSpace::cube(-2.0, 2.0, 2).unwrap());
        assert_eq!(g.len(), 9);
        assert!(g.contains(&vec![0.0, 0.0]));
        for c in [[-2.0, -2.0], [-2.0, 2.0], [2.0, -2.0], [2.0, 2.0]] {
            assert!(g.contains(&c.to_vec()));
        }
    }

    #[test]
    fn single_edge_grid_is_midpoint() {
        let s = ParameterSpace::new(vec![0.0], vec![4.0]).unwrap();
        assert_eq!(grid(1, &s), vec![vec![2.0]]);
        assert!(grid(0, &s).is_empty());
    }

    #[test]
    fn lhs_four_points_one_per_quarter() {
        let pts = latin_hypercube(4, &unit(2), 7);
        for axis in 0..2 {
            let mut seen = [false; 4];
            for p in &pts {
                seen[stratum(p[axis], 0.0, 1.0, 4)] = true;
            }
            assert!(seen.iter().all(|&s| s));
        }
        let one = latin_hypercube(1, &unit(3), 1);
        assert_eq!(one.len(), 1);
        assert!(unit(3).contains(&one[0]));
    }

    #[test]
    fn lhs_stratified_in_four_dimensions() {
        let space = ParameterSpace::new(vec![0.1, 0.8, 5.0, 5.0], vec![1.0, 1.0, 35.0, 35.0]).unwrap();
        let n = 256;
        let pts = latin_hypercube(n, &space, 2024);
        for axis in 0..4 {
            let mut counts = vec![0usize; n];
            for p in &pts {
                counts[stratum(p[axis], space.lower()[axis], space.width(axis), n)] += 1;
            }
            assert!(counts.iter().all(|&c| c == 1), "axis {axis}");
        }
    }

    #[test]
    fn uniform_mean_is_centered() {
        let n = 10_000;
        let pts = uniform_random(n, &ParameterSpace::cube(-2.0, 2.0, 2).unwrap(), 11);
        // CLT: 3 standard errors of U(-2, 2), stddev 4/sqrt(12).
        let bound = 3.0 * (4.0 / 12f64.sqrt()) / (n as f64).sqrt();
        for axis in 0..2 {
            let mean = pts.iter().map(|p| p[axis]).sum::<f64>() / n as f64;
            assert!(mean.abs() < bound, "axis {axis}: {mean} vs {bound}");
        }
    }

    #[test]
    fn uniform_is_reproducible() {
        let s = unit(3);
        assert_eq!(uniform_random(5, &s, 3), uniform_random(5, &s, 3));
        assert_ne!(uniform_random(5, &s, 3), uniform_random(5, &s, 4));
        let one = uniform_random(1, &s, 0);
        assert!(s.contains(&one[0]));
    }

    proptest! {
        #[test]
        fn grid_count_and_bounds(g in 1usize..=5, p in 1usize..=4) {
            let s = ParameterSpace::cube(-1.5, 3.0, p).unwrap();
            let pts = grid(g, &s);
            prop_assert_eq!(pts.len(), g.pow(p as u32));
            prop_assert!(pts.iter().all(|x| s.contains(x)));
        }

        #[test]
        fn lhs_is_stratified(n in 1usize..60, p in 1usize..5, seed in any::<u64>()) {
            let s = ParameterSpace::new((0..p).map(|i| i as f64).collect(), (0..p).map(|i| 2.0 * i as f64 + 1.0).collect()).unwrap();
            let pts = latin_hypercube(n, &s, seed);
            prop_assert_eq!(pts.len(), n);
            for axis in 0..p {
                let mut counts = vec![0usize; n];
                for x in &pts {
                    prop_assert!(s.contains(x));
                    counts[stratum(x[axis], s.lower()[axis], s.width(axis), n)] += 1;
                }
                prop_assert!(counts.iter().all(|&c| c == 1));
            }
            prop_assert_eq!(latin_hypercube(n, &s, seed), pts);
        }
    }
}
