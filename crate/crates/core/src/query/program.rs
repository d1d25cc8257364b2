//! Postfix query programs and the stack machine that runs them.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{EntityId, KnowledgeGraph, RelationId};

use super::expr::QueryExpr;
use super::fuzzy::{inverse_project, project, FuzzySet, ProjectionMode};

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Instruction {
    Push(Vec<EntityId>),
    Project(RelationId),
    InverseProject(RelationId),
    And,
    Or,
    Not,
}

impl Instruction {
    /// Number of operands popped; every instruction pushes one result.
    fn arity(&self) -> usize {
        match self {
            Instruction::Push(_) => 0,
            Instruction::Project(_) | Instruction::InverseProject(_) | Instruction::Not => 1,
            Instruction::And | Instruction::Or => 2,
        }
    }

    fn kind(&self) -> u8 {
        match self {
            Instruction::Push(_) => 0,
            Instruction::Project(_) => 1,
            Instruction::InverseProject(_) => 2,
            Instruction::And => 3,
            Instruction::Or => 4,
            Instruction::Not => 5,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryProgram {
    pub instructions: Vec<Instruction>,
    pub max_depth: usize,
}

impl QueryProgram {
    /// Checks stack balance: no underflow and exactly one value at the end.
    pub fn from_instructions(instructions: Vec<Instruction>) -> Result<Self> {
        let mut depth = 0usize;
        let mut max_depth = 0;
        for ins in &instructions {
            depth = depth
                .checked_sub(ins.arity())
                .ok_or(Error::Stack("underflow"))?
                + 1;
            max_depth = max_depth.max(depth);
        }
        if depth != 1 {
            return Err(Error::Stack(if depth == 0 { "underflow" } else { "overflow" }));
        }
        Ok(QueryProgram {
            instructions,
            max_depth,
        })
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }
}

/// Post-order walk of a validated expression.
pub fn compile(expr: &QueryExpr) -> Result<QueryProgram> {
    expr.validate()?;
    let mut out = Vec::new();
    emit(expr, &mut out);
    QueryProgram::from_instructions(out)
}

fn emit(expr: &QueryExpr, out: &mut Vec<Instruction>) {
    for c in expr.children() {
        emit(c, out);
    }
    out.push(match expr {
        QueryExpr::Anchor(es) => Instruction::Push(es.clone()),
        QueryExpr::Project(r, _) => Instruction::Project(*r),
        QueryExpr::InverseProject(r, _) => Instruction::InverseProject(*r),
        QueryExpr::And(..) => Instruction::And,
        QueryExpr::Or(..) => Instruction::Or,
        QueryExpr::Not(_) => Instruction::Not,
    });
}

/// Applies one instruction to its popped operands (in push order).
fn apply(
    g: &KnowledgeGraph,
    ins: &Instruction,
    args: &[FuzzySet],
    mode: ProjectionMode,
) -> Result<FuzzySet> {
    match ins {
        Instruction::Push(es) => FuzzySet::indicator(g.entity_count(), es),
        Instruction::Project(r) => project(g, &args[0], *r, mode),
        Instruction::InverseProject(r) => inverse_project(g, &args[0], *r, mode),
        Instruction::And => args[0].conj(&args[1]),
        Instruction::Or => args[0].disj(&args[1]),
        Instruction::Not => args[0].neg(),
    }
}

fn pop_args(stack: &mut Vec<FuzzySet>, n: usize) -> Result<Vec<FuzzySet>> {
    if stack.len() < n {
        return Err(Error::Stack("underflow"));
    }
    Ok(stack.split_off(stack.len() - n))
}

pub fn execute(g: &KnowledgeGraph, prog: &QueryProgram, mode: ProjectionMode) -> Result<FuzzySet> {
    let mut stack: Vec<FuzzySet> = Vec::with_capacity(prog.max_depth);
    for ins in &prog.instructions {
        let args = pop_args(&mut stack, ins.arity())?;
        stack.push(apply(g, ins, &args, mode)?);
    }
    finish(stack)
}

fn finish(mut stack: Vec<FuzzySet>) -> Result<FuzzySet> {
    match stack.len() {
        1 => Ok(stack.pop().expect("one element")),
        0 => Err(Error::Stack("underflow")),
        _ => Err(Error::Stack("overflow")),
    }
}

/// Runs many programs in lockstep. At step `i`, the `i`-th instructions of
/// all programs still running are grouped by operator kind and each group
/// is evaluated in parallel. Results equal per-program [`execute`].
pub fn execute_batch(
    g: &KnowledgeGraph,
    progs: &[QueryProgram],
    mode: ProjectionMode,
) -> Result<Vec<FuzzySet>> {
    let mut stacks: Vec<Vec<FuzzySet>> = progs
        .iter()
        .map(|p| Vec::with_capacity(p.max_depth))
        .collect();
    let steps = progs.iter().map(QueryProgram::len).max().unwrap_or(0);
    for step in 0..steps {
        let mut active: Vec<usize> = (0..progs.len())
            .filter(|&q| step < progs[q].len())
            .collect();
        active.sort_by_key(|&q| progs[q].instructions[step].kind());
        for group in active.chunk_by(|&a, &b| {
            progs[a].instructions[step].kind() == progs[b].instructions[step].kind()
        }) {
            let work: Vec<(usize, Vec<FuzzySet>)> = group
                .iter()
                .map(|&q| {
                    let n = progs[q].instructions[step].arity();
                    pop_args(&mut stacks[q], n).map(|args| (q, args))
                })
                .collect::<Result<_>>()?;
            let results: Vec<(usize, FuzzySet)> = work
                .par_iter()
                .map(|(q, args)| {
                    apply(g, &progs[*q].instructions[step], args, mode).map(|x| (*q, x))
                })
                .collect::<Result<_>>()?;
            for (q, x) in results {
                stacks[q].push(x);
            }
        }
    }
    stacks.into_iter().map(finish).collect()
}
