//! Reverse-mode tape.
//!
//! The tape is an append-only arena of nodes stored in recording order, so node
//! ids are already a topological order: one ascending pass evaluates, one
//! descending pass accumulates adjoints. Each node keeps its value, up to two
//! parent links, the local partials evaluated at record time, and its adjoint
//! slot. [`Tape::clear`] drops every node at once and keeps the allocation.
//!
//! [`VarRef`] is the overloaded-operator handle. Operators cannot return
//! errors, so a failing operator records the first error on the tape and
//! yields a NaN node; [`Tape::check`] (and every sweep) reports it.

use std::cell::{Cell, RefCell};
use std::fmt::{self, Write as _};
use std::ops::{Add, Div, Index, Mul, Neg, Sub};

use crate::error::{AdError, Result};
use crate::prim::{self, Prim};
use crate::scalar::{Real, Scalar};

/// Position of a node in recording order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct NodeId(pub(crate) u32);

impl NodeId {
    pub fn from_index(index: usize) -> Self {
        NodeId(index as u32)
    }

    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    Input,
    Constant,
    Prim(Prim),
}

impl Op {
    pub fn arity(self) -> usize {
        match self {
            Op::Input | Op::Constant => 0,
            Op::Prim(p) => p.arity(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Op::Input => "input",
            Op::Constant => "const",
            Op::Prim(p) => p.name(),
        }
    }
}

#[derive(Debug, Clone)]
struct Node<T> {
    op: Op,
    parents: [u32; 2],
    partials: [T; 2],
    value: T,
    adjoint: T,
}

/// Read-only copy of a recorded node.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeInfo<T> {
    pub op: Op,
    pub parents: Vec<NodeId>,
    pub partials: Vec<T>,
    pub value: T,
    pub adjoint: T,
}

/// Operation counts for the current recording.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OpCounter {
    pub n_nodes: usize,
    /// Primal evaluation plus every derivative operation (local partials and
    /// reverse-sweep multiply-accumulates).
    pub n_fma_equivalent: u64,
    /// Primal evaluation alone.
    pub n_fma_primal: u64,
}

pub struct Tape<T: Real = f64> {
    nodes: RefCell<Vec<Node<T>>>,
    high_water: Cell<usize>,
    primal_ops: Cell<u64>,
    derivative_ops: Cell<u64>,
    error: RefCell<Option<AdError>>,
}

/// Handle to one node of a [`Tape`].
pub struct VarRef<'t, T: Real = f64> {
    tape: &'t Tape<T>,
    id: NodeId,
}

impl<T: Real> Clone for VarRef<'_, T> {
    fn clone(&self) -> Self {
        *self
    }
}

impl<T: Real> Copy for VarRef<'_, T> {}

impl<T: Real> fmt::Debug for VarRef<'_, T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VarRef")
            .field("id", &self.id.0)
            .field("value", &self.primal())
            .finish()
    }
}

/// Adjoints of every node after a reverse sweep, indexed by [`NodeId`].
#[derive(Debug, Clone, PartialEq)]
pub struct Adjoints<T>(Vec<T>);

impl<T: Copy> Adjoints<T> {
    pub fn get(&self, v: VarRef<'_, T>) -> T
    where
        T: Real,
    {
        self.0[v.id.index()]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<T> {
        self.0
    }
}

impl<T> Index<NodeId> for Adjoints<T> {
    type Output = T;
    fn index(&self, id: NodeId) -> &T {
        &self.0[id.index()]
    }
}

impl<T: Real> Default for Tape<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Real> fmt::Debug for Tape<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape")
            .field("len", &self.len())
            .field("high_water_mark", &self.high_water_mark())
            .finish()
    }
}

impl<T: Real> Tape<T> {
    pub fn new() -> Self {
        Self::with_capacity(0)
    }

    pub fn with_capacity(capacity: usize) -> Self {
        Tape {
            nodes: RefCell::new(Vec::with_capacity(capacity)),
            high_water: Cell::new(0),
            primal_ops: Cell::new(0),
            derivative_ops: Cell::new(0),
            error: RefCell::new(None),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Peak node count ever held, across clears.
    pub fn high_water_mark(&self) -> usize {
        self.high_water.get()
    }

    pub fn capacity(&self) -> usize {
        self.nodes.borrow().capacity()
    }

    pub fn op_counter(&self) -> OpCounter {
        OpCounter {
            n_nodes: self.len(),
            n_fma_equivalent: self.primal_ops.get() + self.derivative_ops.get(),
            n_fma_primal: self.primal_ops.get(),
        }
    }

    /// Drops every node in one step. Capacity and the high-water mark survive.
    pub fn clear(&mut self) {
        self.nodes.get_mut().clear();
        self.primal_ops.set(0);
        self.derivative_ops.set(0);
        *self.error.get_mut() = None;
    }

    /// First error raised by an overloaded operator since the last clear.
    pub fn check(&self) -> Result<()> {
        match &*self.error.borrow() {
            Some(e) => Err(e.clone()),
            None => Ok(()),
        }
    }

    pub fn node(&self, id: NodeId) -> Option<NodeInfo<T>> {
        let nodes = self.nodes.borrow();
        let n = nodes.get(id.index())?;
        let arity = n.op.arity();
        Some(NodeInfo {
            op: n.op,
            parents: n.parents[..arity].iter().map(|&p| NodeId(p)).collect(),
            partials: n.partials[..arity].to_vec(),
            value: n.value,
            adjoint: n.adjoint,
        })
    }

    pub fn new_input(&self, value: T) -> Result<VarRef<'_, T>> {
        if !value.is_finite() {
            return Err(AdError::NonFinite {
                what: "input",
                value: value.value(),
            });
        }
        Ok(self.push_leaf(Op::Input, value))
    }

    pub fn constant(&self, value: T) -> Result<VarRef<'_, T>> {
        if !value.is_finite() {
            return Err(AdError::NonFinite {
                what: "constant",
                value: value.value(),
            });
        }
        Ok(self.push_leaf(Op::Constant, value))
    }

    /// Records one primitive applied to `args`.
    pub fn apply<'t>(&'t self, prim: Prim, args: &[VarRef<'t, T>]) -> Result<VarRef<'t, T>> {
        if args.len() != prim.arity() {
            return Err(AdError::Arity {
                op: prim.name(),
                expected: prim.arity(),
                found: args.len(),
            });
        }
        if args.iter().any(|a| !std::ptr::eq(a.tape, self)) {
            return Err(AdError::TapeMismatch);
        }
        let a = args[0].id;
        let b = args.get(1).map_or(a, |v| v.id);
        self.push_prim(prim, a, b)
    }

    fn push_leaf(&self, op: Op, value: T) -> VarRef<'_, T> {
        let id = self.push(Node {
            op,
            parents: [0, 0],
            partials: [T::zero(), T::zero()],
            value,
            adjoint: T::zero(),
        });
        VarRef { tape: self, id }
    }

    fn push_prim(&self, prim: Prim, a: NodeId, b: NodeId) -> Result<VarRef<'_, T>> {
        let (va, vb) = {
            let nodes = self.nodes.borrow();
            (nodes[a.index()].value, nodes[b.index()].value)
        };
        let local = prim::local(prim, va, vb)?;
        let cost = prim.cost();
        self.primal_ops.set(self.primal_ops.get() + cost.eval);
        self.derivative_ops
            .set(self.derivative_ops.get() + cost.partials);
        let id = self.push(Node {
            op: Op::Prim(prim),
            parents: [a.0, b.0],
            partials: local.partials,
            value: local.value,
            adjoint: T::zero(),
        });
        Ok(VarRef { tape: self, id })
    }

    fn push(&self, node: Node<T>) -> NodeId {
        let mut nodes = self.nodes.borrow_mut();
        let id = u32::try_from(nodes.len()).expect("tape exceeds u32::MAX nodes");
        nodes.push(node);
        if nodes.len() > self.high_water.get() {
            self.high_water.set(nodes.len());
        }
        NodeId(id)
    }

    fn poison(&self, err: AdError) {
        let mut slot = self.error.borrow_mut();
        if slot.is_none() {
            *slot = Some(err);
        }
    }

    fn nan(&self) -> VarRef<'_, T> {
        self.push_leaf(Op::Constant, T::from_f64(f64::NAN))
    }

    /// Operator path: like [`Tape::apply`] but reports failures through the
    /// sticky error slot.
    fn record<'t>(
        &'t self,
        prim: Prim,
        a: VarRef<'t, T>,
        b: Option<VarRef<'t, T>>,
    ) -> VarRef<'t, T> {
        let b_id = match b {
            Some(b) if !std::ptr::eq(a.tape, b.tape) => {
                self.poison(AdError::TapeMismatch);
                return self.nan();
            }
            Some(b) => b.id,
            None => a.id,
        };
        match self.push_prim(prim, a.id, b_id) {
            Ok(v) => v,
            Err(e) => {
                self.poison(e);
                self.nan()
            }
        }
    }

    /// Single reverse sweep seeded at one output.
    pub fn reverse_sweep(&self, output: VarRef<'_, T>, seed: T) -> Result<Adjoints<T>> {
        self.reverse_sweep_multi(&[output], &[seed])
    }

    /// Reverse sweep for a cotangent spread over several outputs. Seeds of
    /// repeated outputs accumulate. All adjoint slots are zeroed first.
    pub fn reverse_sweep_multi(
        &self,
        outputs: &[VarRef<'_, T>],
        seeds: &[T],
    ) -> Result<Adjoints<T>> {
        if outputs.len() != seeds.len() {
            return Err(AdError::Dimension {
                expected: outputs.len(),
                found: seeds.len(),
            });
        }
        if outputs.iter().any(|o| !std::ptr::eq(o.tape, self)) {
            return Err(AdError::TapeMismatch);
        }
        if let Some(s) = seeds.iter().find(|s| !s.is_finite()) {
            return Err(AdError::NonFinite {
                what: "seed",
                value: s.value(),
            });
        }
        self.check()?;

        let mut nodes = self.nodes.borrow_mut();
        for n in nodes.iter_mut() {
            n.adjoint = T::zero();
        }
        for (o, &s) in outputs.iter().zip(seeds) {
            let slot = &mut nodes[o.id.index()].adjoint;
            *slot = *slot + s;
        }
        let Some(last) = outputs.iter().map(|o| o.id.index()).max() else {
            return Ok(Adjoints(nodes.iter().map(|n| n.adjoint).collect()));
        };

        let mut ops = 0u64;
        for i in (0..=last).rev() {
            let node = &nodes[i];
            let arity = node.op.arity();
            if arity == 0 {
                continue;
            }
            let adj = node.adjoint;
            let [p0, p1] = node.parents;
            let [d0, d1] = node.partials;
            let slot = &mut nodes[p0 as usize].adjoint;
            *slot = *slot + d0 * adj;
            if arity == 2 {
                let slot = &mut nodes[p1 as usize].adjoint;
                *slot = *slot + d1 * adj;
            }
            ops += arity as u64;
        }
        self.derivative_ops.set(self.derivative_ops.get() + ops);
        Ok(Adjoints(nodes.iter().map(|n| n.adjoint).collect()))
    }

    /// Recomputes every value and local partial from new input values,
    /// keeping the recorded graph. Inputs are consumed in recording order.
    pub(crate) fn replay(&self, inputs: &[T]) -> Result<()> {
        let mut nodes = self.nodes.borrow_mut();
        let n_inputs = nodes.iter().filter(|n| n.op == Op::Input).count();
        if n_inputs != inputs.len() {
            return Err(AdError::Dimension {
                expected: n_inputs,
                found: inputs.len(),
            });
        }
        let mut next = inputs.iter();
        for i in 0..nodes.len() {
            match nodes[i].op {
                Op::Input => nodes[i].value = *next.next().expect("counted above"),
                Op::Constant => {}
                Op::Prim(p) => {
                    let [a, b] = nodes[i].parents;
                    let l = prim::local(p, nodes[a as usize].value, nodes[b as usize].value)?;
                    nodes[i].value = l.value;
                    nodes[i].partials = l.partials;
                }
            }
        }
        Ok(())
    }

    /// Graphviz description of the subgraph feeding `output`. Nodes are
    /// labelled `v1, v2, ...` (one-based, in recording order); edges point
    /// from parent to child.
    pub fn export_dot(&self, output: VarRef<'_, T>) -> Result<String> {
        if !std::ptr::eq(output.tape, self) {
            return Err(AdError::TapeMismatch);
        }
        let nodes = self.nodes.borrow();
        let last = output.id.index();
        let mut live = vec![false; last + 1];
        live[last] = true;
        for i in (0..=last).rev() {
            if live[i] {
                let n = &nodes[i];
                for &p in &n.parents[..n.op.arity()] {
                    live[p as usize] = true;
                }
            }
        }
        let mut out = String::from("digraph expression_graph {\n");
        for (i, _) in live.iter().enumerate().filter(|(_, l)| **l) {
            let _ = writeln!(out, "v{0} [label=\"v{0}: {1}\"]", i + 1, nodes[i].op.name());
        }
        for (i, _) in live.iter().enumerate().filter(|(_, l)| **l) {
            let n = &nodes[i];
            for &p in &n.parents[..n.op.arity()] {
                let _ = writeln!(out, "v{} -> v{}", p + 1, i + 1);
            }
        }
        out.push_str("}\n");
        Ok(out)
    }
}

impl<'t, T: Real> VarRef<'t, T> {
    pub fn id(&self) -> NodeId {
        self.id
    }

    pub fn tape(&self) -> &'t Tape<T> {
        self.tape
    }

    /// Stored node value.
    pub fn primal(&self) -> T {
        self.tape.nodes.borrow()[self.id.index()].value
    }

    fn unary(self, prim: Prim) -> Self {
        self.tape.record(prim, self, None)
    }

    fn binary(self, prim: Prim, rhs: Self) -> Self {
        self.tape.record(prim, self, Some(rhs))
    }
}

macro_rules! binary_ops {
    ($($trait:ident $method:ident $prim:expr;)*) => {$(
        impl<'t, T: Real> $trait for VarRef<'t, T> {
            type Output = VarRef<'t, T>;
            fn $method(self, rhs: Self) -> Self {
                self.binary($prim, rhs)
            }
        }
    )*};
}

binary_ops! {
    Add add Prim::Add;
    Sub sub Prim::Sub;
    Mul mul Prim::Mul;
    Div div Prim::Div;
}

impl<'t, T: Real> Neg for VarRef<'t, T> {
    type Output = VarRef<'t, T>;
    fn neg(self) -> Self {
        self.unary(Prim::Neg)
    }
}

impl<'t, T: Real> Add<f64> for VarRef<'t, T> {
    type Output = VarRef<'t, T>;
    fn add(self, c: f64) -> Self {
        self.unary(Prim::AddConst(c))
    }
}

impl<'t, T: Real> Sub<f64> for VarRef<'t, T> {
    type Output = VarRef<'t, T>;
    fn sub(self, c: f64) -> Self {
        self.unary(Prim::AddConst(-c))
    }
}

impl<'t, T: Real> Mul<f64> for VarRef<'t, T> {
    type Output = VarRef<'t, T>;
    fn mul(self, c: f64) -> Self {
        self.unary(Prim::Scale(c))
    }
}

impl<'t, T: Real> Div<f64> for VarRef<'t, T> {
    type Output = VarRef<'t, T>;
    fn div(self, c: f64) -> Self {
        if c == 0.0 {
            self.tape.poison(AdError::DivisionByZero);
            return self.tape.nan();
        }
        self.unary(Prim::Scale(1.0 / c))
    }
}

impl<'t, T: Real> Add<VarRef<'t, T>> for f64 {
    type Output = VarRef<'t, T>;
    fn add(self, v: VarRef<'t, T>) -> VarRef<'t, T> {
        v + self
    }
}

impl<'t, T: Real> Sub<VarRef<'t, T>> for f64 {
    type Output = VarRef<'t, T>;
    fn sub(self, v: VarRef<'t, T>) -> VarRef<'t, T> {
        -v + self
    }
}

impl<'t, T: Real> Mul<VarRef<'t, T>> for f64 {
    type Output = VarRef<'t, T>;
    fn mul(self, v: VarRef<'t, T>) -> VarRef<'t, T> {
        v * self
    }
}

impl<'t, T: Real> Div<VarRef<'t, T>> for f64 {
    type Output = VarRef<'t, T>;
    fn div(self, v: VarRef<'t, T>) -> VarRef<'t, T> {
        v.lift(self) / v
    }
}

impl<'t, T: Real> Scalar for VarRef<'t, T> {
    fn value(&self) -> f64 {
        self.primal().value()
    }

    fn lift(&self, c: f64) -> Self {
        match self.tape.constant(T::from_f64(c)) {
            Ok(v) => v,
            Err(e) => {
                self.tape.poison(e);
                self.tape.nan()
            }
        }
    }

    fn ln(self) -> Self {
        self.unary(Prim::Log)
    }

    fn exp(self) -> Self {
        self.unary(Prim::Exp)
    }

    fn sqrt(self) -> Self {
        self.unary(Prim::Sqrt)
    }

    fn square(self) -> Self {
        self.unary(Prim::Square)
    }

    fn powf(self, p: f64) -> Self {
        self.unary(Prim::Pow(p))
    }

    fn cosh(self) -> Self {
        self.unary(Prim::Cosh)
    }

    fn sinh(self) -> Self {
        self.unary(Prim::Sinh)
    }

    fn sin(self) -> Self {
        self.unary(Prim::Sin)
    }

    fn cos(self) -> Self {
        self.unary(Prim::Cos)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::LogNormal;
    use crate::scalar::VectorFunction;

    fn log_normal_tape(t: &Tape) -> (VarRef<'_>, [VarRef<'_>; 3]) {
        let ins = [
            t.new_input(10.0).unwrap(),
            t.new_input(5.0).unwrap(),
            t.new_input(2.0).unwrap(),
        ];
        let out = LogNormal.eval(&ins)[0];
        (out, ins)
    }

    #[test]
    fn inputs_are_numbered_in_order() {
        let t = Tape::new();
        let ids: Vec<_> = [10.0, 5.0, 2.0]
            .iter()
            .map(|&v| t.new_input(v).unwrap().id().index())
            .collect();
        assert_eq!(ids, [0, 1, 2]);
    }

    #[test]
    fn non_finite_input_rejected() {
        let t = Tape::new();
        assert!(matches!(
            t.new_input(f64::NAN),
            Err(AdError::NonFinite { .. })
        ));
        assert!(matches!(
            t.new_input(f64::INFINITY),
            Err(AdError::NonFinite { .. })
        ));
        assert!(t.is_empty());
    }

    #[test]
    fn sub_and_div_partials() {
        let t = Tape::new();
        let v1 = t.new_input(10.0).unwrap();
        let v2 = t.new_input(5.0).unwrap();
        let v3 = t.new_input(2.0).unwrap();
        let v4 = t.apply(Prim::Sub, &[v1, v2]).unwrap();
        let n4 = t.node(v4.id()).unwrap();
        assert_eq!(n4.value, 5.0);
        assert_eq!(n4.partials, vec![1.0, -1.0]);
        let v5 = t.apply(Prim::Div, &[v4, v3]).unwrap();
        let n5 = t.node(v5.id()).unwrap();
        assert_eq!(n5.value, 2.5);
        assert_eq!(n5.partials, vec![0.5, -1.25]);
        assert_eq!(n5.parents, vec![v4.id(), v3.id()]);
    }

    #[test]
    fn apply_errors() {
        let t = Tape::new();
        let u = Tape::new();
        let a = t.new_input(0.0).unwrap();
        let b = u.new_input(1.0).unwrap();
        assert_eq!(
            t.apply(Prim::Add, &[a, b]).unwrap_err(),
            AdError::TapeMismatch
        );
        assert!(matches!(
            t.apply(Prim::Log, &[a]),
            Err(AdError::Domain { .. })
        ));
        let one = t.new_input(1.0).unwrap();
        assert_eq!(
            t.apply(Prim::Div, &[one, a]).unwrap_err(),
            AdError::DivisionByZero
        );
        assert!(matches!(
            t.apply(Prim::Mul, &[a]),
            Err(AdError::Arity { .. })
        ));
        let l = t.apply(Prim::Log, &[one]).unwrap();
        assert_eq!(l.primal(), 0.0);
        assert_eq!(t.node(l.id()).unwrap().partials, vec![1.0]);
    }

    #[test]
    fn operator_errors_are_sticky() {
        let t = Tape::new();
        let u = Tape::new();
        let a = t.new_input(-1.0).unwrap();
        let y = a.ln() * 2.0 + a;
        assert!(y.primal().is_nan());
        assert!(matches!(t.check(), Err(AdError::Domain { op: "log", .. })));
        assert!(matches!(
            t.reverse_sweep(y, 1.0),
            Err(AdError::Domain { .. })
        ));

        let t2 = Tape::new();
        let x = t2.new_input(1.0).unwrap();
        let z = u.new_input(1.0).unwrap();
        let _ = x + z;
        assert_eq!(t2.check().unwrap_err(), AdError::TapeMismatch);
    }

    #[test]
    fn log_normal_adjoints() {
        let t = Tape::new();
        let (out, [_, mu, sigma]) = log_normal_tape(&t);
        let adj = t.reverse_sweep(out, 1.0).unwrap();
        assert!((adj.get(mu) - 1.25).abs() < 1e-15);
        assert!((adj.get(sigma) - 2.625).abs() < 1e-15);
        // intermediate adjoints of the reverse trace
        let expect = [
            (9, 1.0),
            (8, 1.0),
            (7, -1.0),
            (6, 1.0),
            (5, -0.5),
            (4, -2.5),
            (3, -1.25),
        ];
        for (id, v) in expect {
            assert_eq!(adj[NodeId(id)], v, "v{}", id + 1);
        }
    }

    #[test]
    fn zero_seed_gives_zero_adjoints() {
        let t = Tape::new();
        let (out, _) = log_normal_tape(&t);
        let adj = t.reverse_sweep(out, 0.0).unwrap();
        assert!(adj.as_slice().iter().all(|&a| a == 0.0));
    }

    #[test]
    fn sweep_leaves_values_untouched() {
        let t = Tape::new();
        let (out, _) = log_normal_tape(&t);
        let before: Vec<_> = (0..t.len())
            .map(|i| t.node(NodeId(i as u32)).unwrap().value)
            .collect();
        t.reverse_sweep(out, 3.0).unwrap();
        let after: Vec<_> = (0..t.len())
            .map(|i| t.node(NodeId(i as u32)).unwrap().value)
            .collect();
        assert_eq!(before, after);
    }

    #[test]
    fn clear_keeps_high_water_mark() {
        let mut t = Tape::new();
        let mut counted = 0usize;
        {
            let mut x = t.new_input(1.0).unwrap();
            counted += 1;
            for _ in 0..9 {
                x = x + 1.0;
                counted += 1;
            }
        }
        assert_eq!(t.len(), 10);
        assert_eq!(counted, 10);
        let cap = t.capacity();
        t.clear();
        assert_eq!(t.len(), 0);
        assert_eq!(t.capacity(), cap);
        t.clear();
        assert_eq!(t.len(), 0);
        {
            let x = t.new_input(1.0).unwrap();
            let _ = x * x + 1.0;
        }
        assert_eq!(t.len(), 3);
        assert_eq!(t.high_water_mark(), counted.max(3));
    }

    #[test]
    fn rerecording_after_clear_is_identical() {
        let mut t = Tape::new();
        let snapshot = |t: &Tape| -> Vec<NodeInfo<f64>> {
            (0..t.len())
                .map(|i| t.node(NodeId(i as u32)).unwrap())
                .collect()
        };
        log_normal_tape(&t);
        let first = snapshot(&t);
        t.clear();
        log_normal_tape(&t);
        assert_eq!(first, snapshot(&t));
    }

    #[test]
    fn dot_single_input() {
        let t = Tape::new();
        let x = t.new_input(1.0).unwrap();
        let dot = t.export_dot(x).unwrap();
        assert_eq!(
            dot,
            "digraph expression_graph {\nv1 [label=\"v1: input\"]\n}\n"
        );
    }

    #[test]
    fn dot_sub_has_two_incoming_edges() {
        let t = Tape::new();
        let a = t.new_input(1.0).unwrap();
        let b = t.new_input(2.0).unwrap();
        let _unused = t.new_input(3.0).unwrap();
        let d = a - b;
        let dot = t.export_dot(d).unwrap();
        assert_eq!(dot.lines().filter(|l| l.ends_with("-> v4")).count(), 2);
        assert!(!dot.contains("v3"));
    }

    #[test]
    fn dot_log_normal_golden() {
        let t = Tape::new();
        let (out, _) = log_normal_tape(&t);
        let expected = "\
digraph expression_graph {
v1 [label=\"v1: input\"]
v2 [label=\"v2: input\"]
v3 [label=\"v3: input\"]
v4 [label=\"v4: sub\"]
v5 [label=\"v5: div\"]
v6 [label=\"v6: square\"]
v7 [label=\"v7: scale\"]
v8 [label=\"v8: log\"]
v9 [label=\"v9: sub\"]
v10 [label=\"v10: add_const\"]
v1 -> v4
v2 -> v4
v4 -> v5
v3 -> v5
v5 -> v6
v6 -> v7
v3 -> v8
v7 -> v9
v8 -> v9
v9 -> v10
}
";
        assert_eq!(t.export_dot(out).unwrap(), expected);
    }

    #[test]
    fn op_counter_tracks_len() {
        let t = Tape::new();
        let (out, _) = log_normal_tape(&t);
        let c = t.op_counter();
        assert_eq!(c.n_nodes, 10);
        assert_eq!(c.n_fma_primal, 7);
        t.reverse_sweep(out, 1.0).unwrap();
        assert!(t.op_counter().n_fma_equivalent > c.n_fma_equivalent);
    }
}
