use crate::mdp::{argmax_random_tie, LearningRateSchedule, QTable, StateId, Transition};
use crate::rng::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Estimator {
    A,
    B,
}

/// Two independent estimators; each update modifies exactly one of them.
#[derive(Debug, Clone, PartialEq)]
pub struct DoubleQState {
    pub table_a: QTable,
    pub table_b: QTable,
}

impl DoubleQState {
    pub fn new(num_states: usize, num_actions: usize) -> Self {
        Self {
            table_a: QTable::new(num_states, num_actions),
            table_b: QTable::new(num_states, num_actions),
        }
    }

    /// `(A(s,·) + B(s,·)) / 2` written into `out`.
    pub fn mean_row_into(&self, s: StateId, out: &mut Vec<f64>) {
        out.clear();
        out.extend(
            self.table_a
                .row(s)
                .iter()
                .zip(self.table_b.row(s))
                .map(|(a, b)| 0.5 * (a + b)),
        );
    }

    pub fn mean_row(&self, s: StateId) -> Vec<f64> {
        let mut out = Vec::new();
        self.mean_row_into(s, &mut out);
        out
    }

    /// Updates `which`: it picks the maximizing successor action, the other
    /// table supplies that action's value.
    pub fn update(
        &mut self,
        which: Estimator,
        t: &Transition,
        lr: &LearningRateSchedule,
        gamma: f64,
        rng: &mut RngStream,
    ) -> f64 {
        let (chooser, evaluator) = match which {
            Estimator::A => (&mut self.table_a, &self.table_b),
            Estimator::B => (&mut self.table_b, &self.table_a),
        };
        let target = if t.terminal {
            t.r
        } else {
            let best = argmax_random_tie(chooser.row(t.s_next), rng);
            t.r + gamma * evaluator.row(t.s_next)[best]
        };
        let alpha = lr.rate(chooser.record_visit(t.s, t.a));
        let entry = chooser.get_mut(t.s, t.a);
        *entry += alpha * (target - *entry);
        *entry
    }
}

/// Flips a fair coin for the table to update, then applies
/// [`DoubleQState::update`].
pub fn double_q_update(
    dq: &mut DoubleQState,
    t: &Transition,
    lr: &LearningRateSchedule,
    gamma: f64,
    rng: &mut RngStream,
) -> (Estimator, f64) {
    let which = if rng.coin() {
        Estimator::A
    } else {
        Estimator::B
    };
    let v = dq.update(which, t, lr, gamma, rng);
    (which, v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::ActionId;
    use crate::tabular::q_learning_update;
    use proptest::prelude::*;

    fn t(r: f64, terminal: bool) -> Transition {
        Transition {
            s: StateId(0),
            a: ActionId(0),
            r,
            s_next: StateId(1),
            terminal,
            truncated: false,
        }
    }

    #[test]
    fn a_branch_evaluates_with_b() {
        let mut dq = DoubleQState::new(2, 2);
        dq.table_a.set(StateId(1), ActionId(1), 5.0).unwrap();
        dq.table_b.set(StateId(1), ActionId(0), 7.0).unwrap();
        dq.table_b.set(StateId(1), ActionId(1), -3.0).unwrap();
        let lr = LearningRateSchedule::Constant { alpha: 0.5 };
        let v = dq.update(Estimator::A, &t(1.0, false), &lr, 1.0, &mut RngStream::new(0));
        assert_eq!(v, -1.0);
        assert_eq!(dq.table_a.get(StateId(0), ActionId(0)), -1.0);
        assert_eq!(dq.table_b.get(StateId(0), ActionId(0)), 0.0);
        assert_eq!(dq.table_b.visits(StateId(0), ActionId(0)), 0);
    }

    #[test]
    fn b_branch_evaluates_with_a() {
        let mut dq = DoubleQState::new(2, 2);
        dq.table_b.set(StateId(1), ActionId(0), 7.0).unwrap();
        dq.table_a.set(StateId(1), ActionId(0), 2.0).unwrap();
        dq.table_a.set(StateId(1), ActionId(1), 50.0).unwrap();
        let lr = LearningRateSchedule::Constant { alpha: 1.0 };
        let v = dq.update(Estimator::B, &t(0.0, false), &lr, 1.0, &mut RngStream::new(0));
        assert_eq!(v, 2.0);
    }

    #[test]
    fn terminal_targets_reward() {
        let mut dq = DoubleQState::new(2, 2);
        let lr = LearningRateSchedule::Constant { alpha: 1.0 };
        let mut rng = RngStream::new(3);
        let (which, v) = double_q_update(&mut dq, &t(-1.0, true), &lr, 0.9, &mut rng);
        assert_eq!(v, -1.0);
        let (touched, other) = match which {
            Estimator::A => (&dq.table_a, &dq.table_b),
            Estimator::B => (&dq.table_b, &dq.table_a),
        };
        assert_eq!(touched.get(StateId(0), ActionId(0)), -1.0);
        assert_eq!(other.get(StateId(0), ActionId(0)), 0.0);
    }

    #[test]
    fn coin_is_fair() {
        let mut dq = DoubleQState::new(2, 2);
        let lr = LearningRateSchedule::DYNAMIC;
        let mut rng = RngStream::new(4);
        let n = 100_000;
        let a = (0..n)
            .filter(|_| double_q_update(&mut dq, &t(0.0, true), &lr, 0.9, &mut rng).0 == Estimator::A)
            .count();
        assert!((a as f64 - 0.5 * n as f64).abs() < 3.0 * (0.25 * n as f64).sqrt());
    }

    #[test]
    fn mean_row_averages_tables() {
        let mut dq = DoubleQState::new(1, 2);
        dq.table_a.set(StateId(0), ActionId(0), 2.0).unwrap();
        dq.table_b.set(StateId(0), ActionId(1), 4.0).unwrap();
        assert_eq!(dq.mean_row(StateId(0)), vec![1.0, 2.0]);
    }

    proptest! {
        #[test]
        fn identical_tables_match_q_learning_target(
            row in proptest::collection::vec(-10.0f64..10.0, 3),
            r in -5.0f64..5.0, gamma in 0.0f64..=1.0,
        ) {
            let mut single = QTable::new(2, 3);
            for (a, v) in row.iter().enumerate() {
                single.set(StateId(1), ActionId(a), *v).unwrap();
            }
            let mut dq = DoubleQState { table_a: single.clone(), table_b: single.clone() };
            let lr = LearningRateSchedule::Constant { alpha: 1.0 };
            let expected = q_learning_update(&mut single, &t(r, false), &lr, gamma);
            let got = dq.update(Estimator::A, &t(r, false), &lr, gamma, &mut RngStream::new(1));
            prop_assert_eq!(expected, got);
        }
    }
}
