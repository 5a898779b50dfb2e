//! Randomized algebra checks for trajectories, slices and overrides.

use proptest::prelude::*;

use cpscause_core::trajectory::{
    is_alternative, TimeGrid, TimeInterval, Trajectory, TrajectorySlice,
};

const NAMES: [&str; 4] = ["a", "b", "c", "d"];

#[derive(Debug, Clone)]
struct Raw {
    count: usize,
    cols: Vec<Vec<f64>>,
}

impl Raw {
    fn build(&self) -> Trajectory {
        let grid = TimeGrid::new(0.0, 0.01, self.count).unwrap();
        let columns = self
            .cols
            .iter()
            .enumerate()
            .map(|(i, col)| (NAMES[i].to_string(), col.clone()))
            .collect();
        Trajectory::new(grid, columns).unwrap()
    }
}

/// Up to four named columns of finite values on a dt = 0.01 grid.
fn raw_trajectory() -> impl Strategy<Value = Raw> {
    (2usize..40, 1usize..=4).prop_flat_map(|(count, nvars)| {
        prop::collection::vec(
            prop::collection::vec(-100.0f64..100.0, count),
            nvars,
        )
        .prop_map(move |cols| Raw { count, cols })
    })
}

/// A grid-aligned subinterval of `count` samples, by index pair.
fn aligned_interval(count: usize) -> impl Strategy<Value = (usize, usize)> {
    (0..count).prop_flat_map(move |lo| (Just(lo), lo + 1..=count))
}

fn interval_of(t: &Trajectory, lo_k: usize, hi_k: usize) -> TimeInterval {
    let grid = t.grid();
    let hi = if hi_k == grid.count {
        grid.end()
    } else {
        grid.time(hi_k)
    };
    TimeInterval::new(grid.time(lo_k), hi).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn projection_commutes_with_slicing(
        raw in raw_trajectory(),
        pick in prop::collection::vec(any::<bool>(), 4),
        cut in (2usize..40).prop_flat_map(aligned_interval),
    ) {
        let t = raw.build();
        let mut vars: Vec<&str> = t
            .names()
            .iter()
            .enumerate()
            .filter(|(i, _)| pick[*i])
            .map(|(_, n)| n.as_str())
            .collect();
        if vars.is_empty() {
            vars.push(t.names()[0].as_str());
        }
        let (lo_k, hi_k) = (cut.0.min(t.grid().count - 1), cut.1.min(t.grid().count));
        prop_assume!(lo_k < hi_k);
        let iv = interval_of(&t, lo_k, hi_k);

        let project_then_slice = t.project(&vars).unwrap().slice(iv).unwrap();
        let slice_then_project = t.slice(iv).unwrap().trajectory().project(&vars).unwrap();
        prop_assert_eq!(project_then_slice.trajectory(), &slice_then_project);
        // The stored interval is the requested one up to grid snapping.
        let step = t.grid().step;
        prop_assert!((project_then_slice.interval().lo - iv.lo).abs() <= step / 2.0);
        prop_assert!((project_then_slice.interval().hi - iv.hi).abs() <= step / 2.0);

        let once = t.project(&vars).unwrap();
        let twice = once.project(&vars).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn equality_on_intervals_is_reflexive_symmetric_and_tol_monotone(
        raw in raw_trajectory(),
        noise in prop::collection::vec(-0.5f64..0.5, 40),
        cut in (2usize..40).prop_flat_map(aligned_interval),
        tol_lo in 0.0f64..0.3,
        tol_gap in 0.0f64..0.3,
    ) {
        let t = raw.build();
        let (lo_k, hi_k) = (cut.0.min(t.grid().count - 1), cut.1.min(t.grid().count));
        prop_assume!(lo_k < hi_k);
        let iv = interval_of(&t, lo_k, hi_k);

        prop_assert!(t.equals_on(&t, iv, 0.0).unwrap());

        let shifted = Trajectory::new(
            *t.grid(),
            t.names()
                .iter()
                .map(|n| {
                    let col = t
                        .column(n)
                        .unwrap()
                        .iter()
                        .enumerate()
                        .map(|(k, v)| v + noise[k % noise.len()])
                        .collect();
                    (n.clone(), col)
                })
                .collect(),
        )
        .unwrap();
        let ab = t.equals_on(&shifted, iv, tol_lo).unwrap();
        let ba = shifted.equals_on(&t, iv, tol_lo).unwrap();
        prop_assert_eq!(ab, ba);
        if ab {
            prop_assert!(t.equals_on(&shifted, iv, tol_lo + tol_gap).unwrap());
        }
    }

    #[test]
    fn override_is_idempotent_and_self_override_is_identity(
        raw in raw_trajectory(),
        cut in (2usize..40).prop_flat_map(aligned_interval),
        replacement in prop::collection::vec(-100.0f64..100.0, 40),
    ) {
        let t = raw.build();
        let (lo_k, hi_k) = (cut.0.min(t.grid().count - 1), cut.1.min(t.grid().count));
        prop_assume!(lo_k < hi_k);
        let iv = interval_of(&t, lo_k, hi_k);
        let var = t.names()[0].clone();

        let own = t.project(&[var.as_str()]).unwrap().slice(iv).unwrap();
        prop_assert_eq!(&t.override_with(std::slice::from_ref(&own)).unwrap(), &t);
        prop_assert_eq!(&t.override_with(&[]).unwrap(), &t);

        let sub = own.trajectory().grid();
        let fresh = Trajectory::new(
            *sub,
            vec![(var.clone(), replacement[..sub.count].to_vec())],
        )
        .unwrap();
        let slice = TrajectorySlice::new(iv, fresh).unwrap();
        let once = t.override_with(std::slice::from_ref(&slice)).unwrap();
        let twice = once.override_with(std::slice::from_ref(&slice)).unwrap();
        prop_assert_eq!(&once, &twice);

        // Outside the interval the override must not have touched anything.
        for k in 0..t.grid().count {
            let time = t.grid().time(k);
            if !iv.contains(time) {
                for n in t.names() {
                    prop_assert_eq!(t.column(n).unwrap()[k], once.column(n).unwrap()[k]);
                }
            }
        }
    }

    #[test]
    fn alternative_sets_are_symmetric_and_irreflexive(
        raw in raw_trajectory(),
        cut in (2usize..40).prop_flat_map(aligned_interval),
        offsets in prop::collection::vec(-1.0f64..1.0, 4),
        nudge in -1e-3f64..1e-3,
    ) {
        let t = raw.build();
        let (lo_k, hi_k) = (cut.0.min(t.grid().count - 1), cut.1.min(t.grid().count));
        prop_assume!(lo_k < hi_k);
        let iv = interval_of(&t, lo_k, hi_k);

        let xs: Vec<TrajectorySlice> = t
            .names()
            .iter()
            .map(|n| t.project(&[n.as_str()]).unwrap().slice(iv).unwrap())
            .collect();
        // Sometimes a genuine alternative, sometimes within tolerance.
        let ys: Vec<TrajectorySlice> = xs
            .iter()
            .enumerate()
            .map(|(i, s)| {
                let var = s.vars()[0].clone();
                let col: Vec<f64> = s
                    .trajectory()
                    .column(&var)
                    .unwrap()
                    .iter()
                    .map(|v| v + offsets[i] + nudge)
                    .collect();
                let traj = Trajectory::new(*s.trajectory().grid(), vec![(var, col)]).unwrap();
                TrajectorySlice::new(iv, traj).unwrap()
            })
            .collect();

        let tol = 0.5;
        prop_assert_eq!(is_alternative(&xs, &ys, tol), is_alternative(&ys, &xs, tol));
        prop_assert!(!is_alternative(&xs, &xs, tol));
        prop_assert!(!is_alternative(&xs, &ys[..ys.len() - 1], tol));
    }
}
