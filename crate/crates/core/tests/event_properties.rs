//! Randomized Boolean-law checks for the event grammar and its semantics.

use proptest::prelude::*;

use cpscause_core::event_logic::{holds, parse};
use cpscause_core::trajectory::{TimeGrid, Trajectory};
use cpscause_core::DEFAULT_TOL;

const NAMES: [&str; 3] = ["x", "y", "z"];
const COUNT: usize = 30;

fn trajectory(cols: &[Vec<f64>]) -> Trajectory {
    let grid = TimeGrid::new(0.0, 0.01, COUNT).unwrap();
    let columns = cols
        .iter()
        .enumerate()
        .map(|(i, col)| (NAMES[i].to_string(), col.clone()))
        .collect();
    Trajectory::new(grid, columns).unwrap()
}

fn columns() -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-10.0f64..10.0, COUNT), 3)
}

#[derive(Debug, Clone)]
struct Atom {
    var: usize,
    op: &'static str,
    lo_k: usize,
    hi_k: usize,
    rhs: f64,
}

impl Atom {
    fn text(&self) -> String {
        let lo = self.lo_k as f64 * 0.01;
        let hi = self.hi_k as f64 * 0.01;
        format!("{} {}_[{},{}) {}", NAMES[self.var], self.op, lo, hi, self.rhs)
    }
}

fn atom() -> impl Strategy<Value = Atom> {
    (
        0usize..3,
        prop::sample::select(vec!["=", "<", ">", "<=", ">="]),
        0usize..COUNT - 1,
    )
        .prop_flat_map(|(var, op, lo_k)| {
            (
                Just(var),
                Just(op),
                Just(lo_k),
                lo_k + 1..COUNT,
                -10.0f64..10.0,
            )
        })
        .prop_map(|(var, op, lo_k, hi_k, rhs)| Atom {
            var,
            op,
            lo_k,
            hi_k,
            rhs,
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn negation_flips_primitive_events(cols in columns(), a in atom()) {
        let t = trajectory(&cols);
        let p = parse(&a.text()).unwrap();
        let n = parse(&format!("!{}", a.text())).unwrap();
        let direct = holds(&p, &t, DEFAULT_TOL).unwrap();
        prop_assert_eq!(holds(&n, &t, DEFAULT_TOL).unwrap(), !direct);
        prop_assert_eq!(holds(&p.negated(), &t, DEFAULT_TOL).unwrap(), !direct);
    }

    #[test]
    fn connectives_evaluate_compositionally(cols in columns(), a in atom(), b in atom()) {
        let t = trajectory(&cols);
        let pa = holds(&parse(&a.text()).unwrap(), &t, DEFAULT_TOL).unwrap();
        let pb = holds(&parse(&b.text()).unwrap(), &t, DEFAULT_TOL).unwrap();
        let and = parse(&format!("{} && {}", a.text(), b.text())).unwrap();
        let or = parse(&format!("{} || {}", a.text(), b.text())).unwrap();
        prop_assert_eq!(holds(&and, &t, DEFAULT_TOL).unwrap(), pa && pb);
        prop_assert_eq!(holds(&or, &t, DEFAULT_TOL).unwrap(), pa || pb);
        // De Morgan through the negation normal form.
        prop_assert_eq!(holds(&and.negated(), &t, DEFAULT_TOL).unwrap(), !(pa && pb));
        prop_assert_eq!(holds(&or.negated(), &t, DEFAULT_TOL).unwrap(), !(pa || pb));
    }

    #[test]
    fn shrinking_the_interval_preserves_satisfaction(
        cols in columns(),
        a in atom(),
        shrink in (0usize..5, 0usize..5),
    ) {
        let t = trajectory(&cols);
        prop_assume!(a.hi_k - a.lo_k > shrink.0 + shrink.1);
        let wide = parse(&a.text()).unwrap();
        let narrow = Atom {
            lo_k: a.lo_k + shrink.0,
            hi_k: a.hi_k - shrink.1,
            ..a.clone()
        };
        let narrow = parse(&narrow.text()).unwrap();
        if holds(&wide, &t, DEFAULT_TOL).unwrap() {
            prop_assert!(holds(&narrow, &t, DEFAULT_TOL).unwrap());
        }
    }
}
