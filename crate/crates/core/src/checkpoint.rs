//! Reverse mode over a composite `f = f_L o ... o f_1` with bounded tape size.
//!
//! The stages are split into segments at the plan's split indices. Segments
//! are processed last to first: the state at the segment start is recovered by
//! an unrecorded forward run from the nearest stored state, the segment alone
//! is recorded on a cleared tape, and one reverse sweep maps the incoming
//! cotangent to the segment start. Only one segment's graph is ever held, so
//! the tape high-water mark is that of the longest segment.

use crate::dual::check_finite;
use crate::error::{AdError, Result};
use crate::scalar::VectorFunction;
use crate::tape::{Tape, VarRef};

/// One stage `f_l : R^n_in -> R^n_out`, callable both plain and on a tape.
pub trait Stage {
    fn n_in(&self) -> usize;
    fn n_out(&self) -> usize;
    fn eval_plain(&self, x: &[f64]) -> Vec<f64>;
    fn eval_taped<'t>(&self, x: &[VarRef<'t>]) -> Vec<VarRef<'t>>;
}

/// Adapts a [`VectorFunction`] with fixed dimensions into a [`Stage`].
#[derive(Debug, Clone)]
pub struct FnStage<F> {
    pub f: F,
    pub n_in: usize,
    pub n_out: usize,
}

impl<F: VectorFunction> FnStage<F> {
    pub fn new(f: F, n_in: usize, n_out: usize) -> Self {
        FnStage { f, n_in, n_out }
    }
}

impl<F: VectorFunction> Stage for FnStage<F> {
    fn n_in(&self) -> usize {
        self.n_in
    }
    fn n_out(&self) -> usize {
        self.n_out
    }
    fn eval_plain(&self, x: &[f64]) -> Vec<f64> {
        self.f.eval(x)
    }
    fn eval_taped<'t>(&self, x: &[VarRef<'t>]) -> Vec<VarRef<'t>> {
        self.f.eval(x)
    }
}

pub struct SegmentedProgram {
    stages: Vec<Box<dyn Stage>>,
}

impl SegmentedProgram {
    pub fn new(stages: Vec<Box<dyn Stage>>) -> Result<Self> {
        if stages.is_empty() {
            return Err(AdError::EmptyProgram);
        }
        for pair in stages.windows(2) {
            if pair[0].n_out() != pair[1].n_in() {
                return Err(AdError::Dimension {
                    expected: pair[0].n_out(),
                    found: pair[1].n_in(),
                });
            }
        }
        Ok(SegmentedProgram { stages })
    }

    pub fn len(&self) -> usize {
        self.stages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stages.is_empty()
    }

    pub fn n_in(&self) -> usize {
        self.stages[0].n_in()
    }

    pub fn n_out(&self) -> usize {
        self.stages[self.stages.len() - 1].n_out()
    }

    fn run_stage(&self, l: usize, x: &[f64]) -> Result<Vec<f64>> {
        let y = self.stages[l].eval_plain(x);
        if y.len() != self.stages[l].n_out() {
            return Err(AdError::Dimension {
                expected: self.stages[l].n_out(),
                found: y.len(),
            });
        }
        Ok(y)
    }

    /// Plain evaluation of the whole composite.
    pub fn eval(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_input(x)?;
        let mut state = x.to_vec();
        for l in 0..self.len() {
            state = self.run_stage(l, &state)?;
        }
        Ok(state)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n_in() {
            return Err(AdError::Dimension {
                expected: self.n_in(),
                found: x.len(),
            });
        }
        Ok(())
    }
}

/// Split positions (stage boundaries, `0 < split < L`) and the subset of
/// them whose boundary states are kept under [`Strategy::Snapshots`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CheckpointPlan {
    pub splits: Vec<usize>,
    pub snapshots: Vec<usize>,
}

impl CheckpointPlan {
    pub fn new(splits: Vec<usize>, snapshots: Vec<usize>) -> Self {
        CheckpointPlan { splits, snapshots }
    }

    /// A plan with every split also a snapshot.
    pub fn all_snapshots(splits: Vec<usize>) -> Self {
        CheckpointPlan {
            snapshots: splits.clone(),
            splits,
        }
    }

    pub fn validate(&self, n_stages: usize) -> Result<()> {
        if self.splits.windows(2).any(|w| w[0] >= w[1]) {
            return Err(AdError::InvalidPlan(
                "splits must be strictly increasing".into(),
            ));
        }
        if let Some(&s) = self.splits.iter().find(|&&s| s == 0 || s >= n_stages) {
            return Err(AdError::InvalidPlan(format!(
                "split {s} outside 1..{}",
                n_stages.saturating_sub(1)
            )));
        }
        if let Some(&s) = self.snapshots.iter().find(|s| !self.splits.contains(s)) {
            return Err(AdError::InvalidPlan(format!("snapshot {s} is not a split")));
        }
        Ok(())
    }

    /// `(start, end)` stage ranges of the segments, in forward order.
    pub fn segments(&self, n_stages: usize) -> Vec<(usize, usize)> {
        let mut bounds = vec![0];
        bounds.extend(&self.splits);
        bounds.push(n_stages);
        bounds.windows(2).map(|w| (w[0], w[1])).collect()
    }
}

/// `K` segments of near-equal length; split `i` sits at `floor(i L / K)`.
pub fn equispaced_plan(n_stages: usize, n_segments: usize) -> Result<CheckpointPlan> {
    if n_segments == 0 || n_segments > n_stages {
        return Err(AdError::InvalidPlan(format!(
            "cannot cut {n_stages} stages into {n_segments} segments"
        )));
    }
    let splits = (1..n_segments).map(|i| i * n_stages / n_segments).collect();
    Ok(CheckpointPlan::all_snapshots(splits))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    /// Keep only `x`; every segment re-runs from the input.
    RecomputeAll,
    /// Keep the state at every split.
    StoreAll,
    /// Keep the states at the plan's snapshots.
    Snapshots,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckpointResult {
    pub value: Vec<f64>,
    pub gradient: Vec<f64>,
    /// Tape high-water mark over the whole computation.
    pub peak_nodes: usize,
    /// Stage executions, recorded and unrecorded.
    pub stage_evals: usize,
}

/// `f(x)` and `J(x)^T w` for the segmented program.
pub fn grad_checkpointed(
    program: &SegmentedProgram,
    x: &[f64],
    w: &[f64],
    plan: &CheckpointPlan,
    strategy: Strategy,
) -> Result<CheckpointResult> {
    let n_stages = program.len();
    program.check_input(x)?;
    if w.len() != program.n_out() {
        return Err(AdError::Dimension {
            expected: program.n_out(),
            found: w.len(),
        });
    }
    check_finite("input", x)?;
    check_finite("cotangent", w)?;
    plan.validate(n_stages)?;

    let keep = |boundary: usize| match strategy {
        Strategy::RecomputeAll => false,
        Strategy::StoreAll => plan.splits.contains(&boundary),
        Strategy::Snapshots => plan.snapshots.contains(&boundary),
    };

    // stored boundary states, sorted by boundary index
    let mut stored: Vec<(usize, Vec<f64>)> = vec![(0, x.to_vec())];
    let mut tape = Tape::new();
    let mut cotangent = w.to_vec();
    let mut value = None;
    let mut stage_evals = 0;

    for (start, end) in plan.segments(n_stages).into_iter().rev() {
        let (mut at, mut state) = stored
            .iter()
            .rev()
            .find(|(b, _)| *b <= start)
            .cloned()
            .expect("input state is always stored");
        while at < start {
            state = program.run_stage(at, &state)?;
            stage_evals += 1;
            at += 1;
            if keep(at) && !stored.iter().any(|(b, _)| *b == at) {
                let pos = stored.partition_point(|(b, _)| *b < at);
                stored.insert(pos, (at, state.clone()));
            }
        }

        tape.clear();
        let t = &tape;
        let inputs = state
            .iter()
            .map(|&v| t.new_input(v))
            .collect::<Result<Vec<_>>>()?;
        let mut vars = inputs.clone();
        for l in start..end {
            vars = program.stages[l].eval_taped(&vars);
            stage_evals += 1;
            if vars.len() != program.stages[l].n_out() {
                return Err(AdError::Dimension {
                    expected: program.stages[l].n_out(),
                    found: vars.len(),
                });
            }
        }
        t.check()?;
        if value.is_none() {
            value = Some(vars.iter().map(|v| v.primal()).collect::<Vec<_>>());
        }
        let adj = t.reverse_sweep_multi(&vars, &cotangent)?;
        cotangent = inputs.iter().map(|&v| adj.get(v)).collect();
    }

    Ok(CheckpointResult {
        value: value.expect("at least one segment"),
        gradient: cotangent,
        peak_nodes: tape.high_water_mark(),
        stage_evals,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jacobian::gradient;
    use crate::scalar::Scalar;

    struct Bump;
    impl VectorFunction for Bump {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            vec![x[0] + x[0].sin()]
        }
    }

    struct Composed(usize);
    impl VectorFunction for Composed {
        fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
            let mut v = x[0];
            for _ in 0..self.0 {
                v = v + v.sin();
            }
            vec![v]
        }
    }

    fn chain(n: usize) -> SegmentedProgram {
        let stages = (0..n)
            .map(|_| Box::new(FnStage::new(Bump, 1, 1)) as Box<dyn Stage>)
            .collect();
        SegmentedProgram::new(stages).unwrap()
    }

    const ALL: [Strategy; 3] = [
        Strategy::RecomputeAll,
        Strategy::StoreAll,
        Strategy::Snapshots,
    ];

    #[test]
    fn single_stage_is_plain_reverse() {
        let p = chain(1);
        let r = grad_checkpointed(
            &p,
            &[0.4],
            &[1.0],
            &CheckpointPlan::default(),
            Strategy::StoreAll,
        )
        .unwrap();
        let (v, g) = gradient(&Composed(1), &[0.4]).unwrap();
        assert_eq!(r.value, vec![v]);
        assert_eq!(r.gradient, g);
    }

    #[test]
    fn eight_stage_chain_matches_unsegmented() {
        let p = chain(8);
        let (v, g) = gradient(&Composed(8), &[0.3]).unwrap();
        let plan = CheckpointPlan::new(vec![2, 4, 6], vec![4]);
        for s in ALL {
            let r = grad_checkpointed(&p, &[0.3], &[1.0], &plan, s).unwrap();
            assert!((r.gradient[0] - g[0]).abs() <= 1e-12 * g[0].abs(), "{s:?}");
            assert_eq!(r.value, vec![v]);
        }
    }

    #[test]
    fn peak_nodes_shrink_with_splits() {
        let p = chain(8);
        let none = grad_checkpointed(
            &p,
            &[0.3],
            &[1.0],
            &CheckpointPlan::default(),
            Strategy::RecomputeAll,
        )
        .unwrap();
        let three = grad_checkpointed(
            &p,
            &[0.3],
            &[1.0],
            &CheckpointPlan::new(vec![2, 4, 6], vec![]),
            Strategy::RecomputeAll,
        )
        .unwrap();
        // 1 input + 2 nodes per stage
        assert_eq!((none.peak_nodes, three.peak_nodes), (17, 5));
    }

    #[test]
    fn stage_counts() {
        let p = chain(8);
        let plan = CheckpointPlan::new(vec![2, 4, 6], vec![4]);
        let count = |s| {
            grad_checkpointed(&p, &[0.3], &[1.0], &plan, s)
                .unwrap()
                .stage_evals
        };
        assert_eq!(count(Strategy::RecomputeAll), 8 + 6 + 4 + 2);
        assert_eq!(count(Strategy::StoreAll), 8 + 6);
        // last segment runs 0..6 storing 4; then 4..6 recorded, 2..4 from x, 0..2
        assert_eq!(count(Strategy::Snapshots), 8 + 6 + 2);
    }

    #[test]
    fn vector_stages_and_cotangent() {
        struct Rot;
        impl VectorFunction for Rot {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0] * x[1], x[0] - x[1].exp(), x[1].cos()]
            }
        }
        struct Fold;
        impl VectorFunction for Fold {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                vec![x[0] * x[2] + x[1], x[1].square()]
            }
        }
        struct Whole;
        impl VectorFunction for Whole {
            fn eval<S: Scalar>(&self, x: &[S]) -> Vec<S> {
                let y = Rot.eval(x);
                let z = Fold.eval(&y);
                vec![z[0] * 0.5 - z[1] * 2.0]
            }
        }
        let p = SegmentedProgram::new(vec![
            Box::new(FnStage::new(Rot, 2, 3)),
            Box::new(FnStage::new(Fold, 3, 2)),
        ])
        .unwrap();
        let x = [0.7, -0.4];
        let (_, g) = gradient(&Whole, &x).unwrap();
        for s in ALL {
            let r = grad_checkpointed(
                &p,
                &x,
                &[0.5, -2.0],
                &CheckpointPlan::all_snapshots(vec![1]),
                s,
            )
            .unwrap();
            for i in 0..2 {
                assert!((r.gradient[i] - g[i]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn errors() {
        assert!(matches!(
            SegmentedProgram::new(vec![]),
            Err(AdError::EmptyProgram)
        ));
        let bad = SegmentedProgram::new(vec![
            Box::new(FnStage::new(Bump, 1, 1)),
            Box::new(FnStage::new(Bump, 2, 1)),
        ]);
        assert!(matches!(bad, Err(AdError::Dimension { .. })));
        let p = chain(4);
        let none = CheckpointPlan::default();
        assert!(matches!(
            grad_checkpointed(&p, &[1.0], &[1.0, 1.0], &none, Strategy::StoreAll),
            Err(AdError::Dimension { .. })
        ));
        assert!(matches!(
            grad_checkpointed(&p, &[1.0, 2.0], &[1.0], &none, Strategy::StoreAll),
            Err(AdError::Dimension { .. })
        ));
        for plan in [
            CheckpointPlan::new(vec![2, 2], vec![]),
            CheckpointPlan::new(vec![4], vec![]),
            CheckpointPlan::new(vec![0], vec![]),
            CheckpointPlan::new(vec![2], vec![3]),
        ] {
            assert!(matches!(
                grad_checkpointed(&p, &[1.0], &[1.0], &plan, Strategy::Snapshots),
                Err(AdError::InvalidPlan(_))
            ));
        }
    }

    #[test]
    fn equispaced() {
        assert_eq!(equispaced_plan(8, 4).unwrap().splits, vec![2, 4, 6]);
        assert!(equispaced_plan(8, 1).unwrap().splits.is_empty());
        assert_eq!(equispaced_plan(7, 3).unwrap().splits, vec![2, 4]);
        assert!(equispaced_plan(3, 4).is_err());
        assert!(equispaced_plan(3, 0).is_err());
        let p = equispaced_plan(16, 5).unwrap();
        assert_eq!(p.splits, p.snapshots);
    }
}
