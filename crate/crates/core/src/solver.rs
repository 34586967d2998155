//! One-way constraint propagation with transactional commits.
//!
//! A transaction stages new source values, marks everything downstream,
//! re-evaluates each marked constraint once in component order, then checks
//! the guards that read marked variables. Either every staged value commits
//! or none does.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::analysis::{CompiledModule, ExprIR, FunctionTable, Instr, VariableId, VariableKind};
use crate::value::{Value, ValueType};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Accepted,
    Rejected,
}

/// Why a transaction was rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Violation {
    /// Index of the failing inequality.
    Inequality(usize),
    /// A view geometry property would have become NaN.
    NanGeometry(VariableId),
}

impl Violation {
    /// The guard index as reported to hosts; NaN geometry reports -1.
    pub fn index(self) -> i64 {
        match self {
            Violation::Inequality(i) => i as i64,
            Violation::NanGeometry(_) => -1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Change {
    pub var: VariableId,
    pub old: Value,
    pub new: Value,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UpdateResult {
    pub status: Status,
    /// Actually-changed variables in index order; empty when rejected.
    pub changed: Vec<Change>,
    /// Empty when accepted.
    pub violated: Vec<Violation>,
}

impl UpdateResult {
    pub fn accepted(&self) -> bool {
        self.status == Status::Accepted
    }

    fn nothing() -> Self {
        UpdateResult {
            status: Status::Accepted,
            changed: Vec::new(),
            violated: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("unknown variable {0}")]
    UnknownVariable(String),
    #[error("'{0}' is computed by a constraint and cannot be set")]
    NotASource(String),
    #[error("'{name}' holds {expected} values, got {found}")]
    TypeMismatch {
        name: String,
        expected: ValueType,
        found: ValueType,
    },
    #[error("initial values violate guard(s) {}", fmt_indices(.0))]
    InitGuardViolated(Vec<i64>),
}

fn fmt_indices(v: &[i64]) -> String {
    v.iter().map(i64::to_string).collect::<Vec<_>>().join(", ")
}

/// Evaluation counters for the most recent transaction.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Stats {
    pub constraint_evals: Vec<u32>,
    pub guard_evals: Vec<u32>,
}

impl Stats {
    fn reset(&mut self, constraints: usize, guards: usize) {
        self.constraint_evals.clear();
        self.constraint_evals.resize(constraints, 0);
        self.guard_evals.clear();
        self.guard_evals.resize(guards, 0);
    }
}

/// Which store `Load` reads in [`Solver::evaluate_expr`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueSource {
    Committed,
    /// The staged value if present, else the committed one.
    Staged,
}

pub type Listener = Box<dyn FnMut(&Change)>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ListenerHandle {
    var: VariableId,
    id: u64,
}

pub struct Solver {
    module: Arc<CompiledModule>,
    committed: Vec<Value>,
    staged: Vec<Option<Value>>,
    marked: Vec<bool>,
    touched: Vec<usize>,
    generation: u64,
    listeners: Vec<Vec<(u64, Listener)>>,
    next_listener: u64,
    stats: Stats,
    dependents: Vec<Vec<usize>>,
    guards_reading: Vec<Vec<usize>>,
    component_of: Vec<usize>,
}

impl fmt::Debug for Solver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Solver")
            .field("module", &self.module.name)
            .field("generation", &self.generation)
            .field("committed", &self.committed)
            .finish_non_exhaustive()
    }
}

/// Stack evaluation of a postfix program. `load` supplies variable values.
pub fn evaluate(expr: &ExprIR, functions: &FunctionTable, load: impl Fn(VariableId) -> Value) -> Value {
    let mut stack: Vec<Value> = Vec::with_capacity(expr.postfix.len());
    let num = |v: Value| v.as_number().unwrap_or(f64::NAN);
    for instr in &expr.postfix {
        match instr {
            Instr::PushNum(n) => stack.push(Value::Number(*n)),
            Instr::PushText(t) => stack.push(Value::Text(t.clone())),
            Instr::Load(v) => stack.push(load(*v)),
            Instr::Neg => {
                let a = num(stack.pop().expect("stack underflow"));
                stack.push(Value::Number(-a));
            }
            Instr::Add | Instr::Sub | Instr::Mul | Instr::Div => {
                let b = num(stack.pop().expect("stack underflow"));
                let a = num(stack.pop().expect("stack underflow"));
                stack.push(Value::Number(match instr {
                    Instr::Add => a + b,
                    Instr::Sub => a - b,
                    Instr::Mul => a * b,
                    _ => a / b,
                }));
            }
            Instr::Call { function, arity } => {
                let args = stack.split_off(stack.len() - arity);
                let f = functions.get(*function).expect("function id in table");
                stack.push((f.implementation)(&args));
            }
        }
    }
    debug_assert_eq!(stack.len(), 1, "unbalanced expression");
    stack.pop().expect("empty expression")
}

fn validate_sources(module: &CompiledModule, assignments: &[(VariableId, Value)]) -> Result<(), SolverError> {
    for (var, value) in assignments {
        let info = module
            .variables
            .get(var.index())
            .ok_or_else(|| SolverError::UnknownVariable(var.to_string()))?;
        if info.writer.is_some() || info.kind == VariableKind::ViewProperty {
            return Err(SolverError::NotASource(info.name.clone()));
        }
        if value.value_type() != info.value_type {
            return Err(SolverError::TypeMismatch {
                name: info.name.clone(),
                expected: info.value_type,
                found: value.value_type(),
            });
        }
    }
    Ok(())
}

impl Solver {
    /// Starts from defaults and evaluates every constraint once in component
    /// order, then checks every guard.
    pub fn new(module: Arc<CompiledModule>) -> Result<Solver, SolverError> {
        Self::with_initial(module, &[])
    }

    /// Like [`Solver::new`], but the given sources replace their defaults
    /// before the first evaluation, so init guards see them.
    pub fn with_initial(module: Arc<CompiledModule>, initial: &[(VariableId, Value)]) -> Result<Solver, SolverError> {
        validate_sources(&module, initial)?;
        let n = module.variables.len();
        let mut dependents = vec![Vec::new(); n];
        for &(from, to) in &module.edges {
            dependents[from.index()].push(to.index());
        }
        let mut guards_reading = vec![Vec::new(); n];
        for (gi, g) in module.inequalities.iter().enumerate() {
            for v in g.loads() {
                let list: &mut Vec<usize> = &mut guards_reading[v.index()];
                if list.last() != Some(&gi) {
                    list.push(gi);
                }
            }
        }
        let mut component_of = vec![0; n];
        for (ci, comp) in module.scc_order.iter().enumerate() {
            for v in comp {
                component_of[v.index()] = ci;
            }
        }

        let mut solver = Solver {
            committed: module.variables.iter().map(|v| v.default.clone()).collect(),
            staged: vec![None; n],
            marked: vec![false; n],
            touched: Vec::new(),
            generation: 0,
            listeners: (0..n).map(|_| Vec::new()).collect(),
            next_listener: 0,
            stats: Stats::default(),
            dependents,
            guards_reading,
            component_of,
            module,
        };
        solver
            .stats
            .reset(solver.module.constraints.len(), solver.module.inequalities.len());
        for (var, value) in initial {
            solver.committed[var.index()] = value.clone();
        }

        let module = Arc::clone(&solver.module);
        for comp in &module.scc_order {
            for v in comp {
                if let Some(ci) = module.variable(*v).writer {
                    let value = solver.eval_constraint(ci, ValueSource::Committed);
                    solver.committed[v.index()] = value;
                }
            }
        }
        let mut violated: Vec<i64> = Vec::new();
        let nan_geometry =
            (0..n).any(|vi| is_view_geometry(&module, vi) && solver.committed[vi].as_number().is_some_and(f64::is_nan));
        if nan_geometry {
            violated.push(-1);
        }
        for gi in 0..module.inequalities.len() {
            if !solver.eval_guard(gi, ValueSource::Committed) {
                violated.push(gi as i64);
            }
        }
        if !violated.is_empty() {
            return Err(SolverError::InitGuardViolated(violated));
        }
        Ok(solver)
    }

    pub fn module(&self) -> &Arc<CompiledModule> {
        &self.module
    }

    pub fn generation(&self) -> u64 {
        self.generation
    }

    /// Counters of the last transaction (or of initialization).
    pub fn stats(&self) -> &Stats {
        &self.stats
    }

    /// The committed store, indexed by variable.
    pub fn values(&self) -> &[Value] {
        &self.committed
    }

    pub fn get(&self, var: VariableId) -> Result<&Value, SolverError> {
        self.committed
            .get(var.index())
            .ok_or_else(|| SolverError::UnknownVariable(var.to_string()))
    }

    pub fn get_by_name(&self, name: &str) -> Result<&Value, SolverError> {
        let id = self.lookup(name)?;
        Ok(&self.committed[id.index()])
    }

    pub fn lookup(&self, name: &str) -> Result<VariableId, SolverError> {
        self.module
            .variable_by_name(name)
            .ok_or_else(|| SolverError::UnknownVariable(name.to_string()))
    }

    pub fn subscribe(
        &mut self,
        var: VariableId,
        listener: impl FnMut(&Change) + 'static,
    ) -> Result<ListenerHandle, SolverError> {
        let slot = self
            .listeners
            .get_mut(var.index())
            .ok_or_else(|| SolverError::UnknownVariable(var.to_string()))?;
        let id = self.next_listener;
        self.next_listener += 1;
        slot.push((id, Box::new(listener)));
        Ok(ListenerHandle { var, id })
    }

    /// Returns false if the handle was already removed.
    pub fn unsubscribe(&mut self, handle: ListenerHandle) -> bool {
        let Some(slot) = self.listeners.get_mut(handle.var.index()) else {
            return false;
        };
        let before = slot.len();
        slot.retain(|(id, _)| *id != handle.id);
        slot.len() != before
    }

    pub fn set(&mut self, var: VariableId, value: Value) -> Result<UpdateResult, SolverError> {
        self.set_many(&[(var, value)])
    }

    /// Runs one transaction. Validation errors leave the state untouched.
    pub fn set_many(&mut self, assignments: &[(VariableId, Value)]) -> Result<UpdateResult, SolverError> {
        let module = Arc::clone(&self.module);
        validate_sources(&module, assignments)?;
        self.stats.reset(module.constraints.len(), module.inequalities.len());
        if assignments.is_empty() {
            return Ok(UpdateResult::nothing());
        }

        // Stage (last assignment to a variable wins) and mark.
        let mut frontier = Vec::new();
        for (var, value) in assignments {
            let i = var.index();
            if self.staged[i].is_none() {
                self.touched.push(i);
            }
            self.staged[i] = Some(value.clone());
            if !self.marked[i] {
                self.marked[i] = true;
                frontier.push(i);
            }
        }
        let mut marked_list = frontier.clone();
        while let Some(v) = frontier.pop() {
            for &d in &self.dependents[v] {
                if !self.marked[d] {
                    self.marked[d] = true;
                    frontier.push(d);
                    marked_list.push(d);
                }
            }
        }

        // Sweep marked components in topological order.
        let components: BTreeSet<usize> = marked_list.iter().map(|&v| self.component_of[v]).collect();
        for c in components {
            for &v in &module.scc_order[c] {
                let i = v.index();
                if !self.marked[i] {
                    continue;
                }
                if let Some(ci) = module.variable(v).writer {
                    let value = self.eval_constraint(ci, ValueSource::Staged);
                    if self.staged[i].is_none() {
                        self.touched.push(i);
                    }
                    self.staged[i] = Some(value);
                }
            }
        }

        // Guards: NaN geometry first, then outdated inequalities.
        let mut violated = Vec::new();
        marked_list.sort_unstable();
        for &v in &marked_list {
            if is_view_geometry(&module, v)
                && self.staged[v]
                    .as_ref()
                    .and_then(Value::as_number)
                    .is_some_and(f64::is_nan)
            {
                violated.push(Violation::NanGeometry(VariableId(v as u32)));
            }
        }
        let outdated: BTreeSet<usize> = marked_list
            .iter()
            .flat_map(|&v| self.guards_reading[v].iter().copied())
            .collect();
        for gi in outdated {
            if !self.eval_guard(gi, ValueSource::Staged) {
                violated.push(Violation::Inequality(gi));
            }
        }

        for &v in &marked_list {
            self.marked[v] = false;
        }
        if !violated.is_empty() {
            self.discard();
            return Ok(UpdateResult {
                status: Status::Rejected,
                changed: Vec::new(),
                violated,
            });
        }

        let mut touched = std::mem::take(&mut self.touched);
        touched.sort_unstable();
        let mut changed = Vec::new();
        for i in touched {
            let new = self.staged[i].take().expect("touched implies staged");
            if !new.same(&self.committed[i]) {
                let old = std::mem::replace(&mut self.committed[i], new.clone());
                changed.push(Change {
                    var: VariableId(i as u32),
                    old,
                    new,
                });
            }
        }
        self.generation += 1;
        #[cfg(debug_assertions)]
        self.assert_fixed_point();

        for change in &changed {
            for (_, listener) in &mut self.listeners[change.var.index()] {
                listener(change);
            }
        }
        Ok(UpdateResult {
            status: Status::Accepted,
            changed,
            violated: Vec::new(),
        })
    }

    fn discard(&mut self) {
        for i in self.touched.drain(..) {
            self.staged[i] = None;
        }
    }

    pub fn evaluate_expr(&self, expr: &ExprIR, source: ValueSource) -> Value {
        evaluate(expr, &self.module.functions, |v| self.load(v, source))
    }

    fn load(&self, v: VariableId, source: ValueSource) -> Value {
        let i = v.index();
        match (source, &self.staged[i]) {
            (ValueSource::Staged, Some(s)) => s.clone(),
            _ => self.committed[i].clone(),
        }
    }

    fn eval_constraint(&mut self, ci: usize, source: ValueSource) -> Value {
        self.stats.constraint_evals[ci] += 1;
        let module = Arc::clone(&self.module);
        self.evaluate_expr(&module.constraints[ci].expr, source)
    }

    fn eval_guard(&mut self, gi: usize, source: ValueSource) -> bool {
        self.stats.guard_evals[gi] += 1;
        let module = Arc::clone(&self.module);
        guard_holds(&module, gi, |e| self.evaluate_expr(e, source))
    }

    /// Every constraint already holds over the committed store.
    #[cfg(debug_assertions)]
    fn assert_fixed_point(&self) {
        if self.module.has_cycles() {
            return;
        }
        for c in &self.module.constraints {
            let v = self.evaluate_expr(&c.expr, ValueSource::Committed);
            debug_assert!(
                v.same(&self.committed[c.target.index()]),
                "fixed point broken at {}",
                self.module.variable(c.target).name
            );
        }
    }
}

/// Evaluates inequality `gi` with `eval`. Non-numbers never satisfy a guard.
pub fn guard_holds(module: &CompiledModule, gi: usize, mut eval: impl FnMut(&ExprIR) -> Value) -> bool {
    let g = &module.inequalities[gi];
    let l = eval(&g.lhs).as_number().unwrap_or(f64::NAN);
    let r = eval(&g.rhs).as_number().unwrap_or(f64::NAN);
    g.op.holds(l, r)
}

fn is_view_geometry(module: &CompiledModule, var: usize) -> bool {
    module.variables[var].property.is_some_and(|(_, p)| p.is_geometry())
}
