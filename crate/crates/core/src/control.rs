//! Control points shared by the concrete and abstract machines.
//!
//! Machine states refer to syntax through these handles. They compare,
//! order and print by label only, which is sound because labels are unique
//! within a program and states of different programs are never mixed.

use alloc::sync::Arc;
use core::cmp::Ordering;
use core::fmt;

use crate::syntax::{AExp, AExpKind, CExp, Expr, ExprKind, Label, Lambda};

/// The expression a thread context is evaluating.
#[derive(Clone, Debug)]
pub enum Focus {
    Let(Arc<Expr>),
    Call(Arc<CExp>),
    Atom(AExp),
}

impl Focus {
    /// Focus for an expression. Calls in expression position are focused on
    /// the call itself, so a call has the same label whether it is reached
    /// as an expression, a `let` binding or an `if` branch.
    pub fn of(e: &Arc<Expr>) -> Focus {
        match &e.kind {
            ExprKind::Let { .. } => Focus::Let(e.clone()),
            ExprKind::Call(c) => Focus::Call(c.clone()),
            ExprKind::Atom(a) => Focus::Atom(a.clone()),
        }
    }

    pub fn label(&self) -> Label {
        match self {
            Focus::Let(e) => e.label,
            Focus::Call(c) => c.label,
            Focus::Atom(a) => a.label,
        }
    }

    /// Label recorded into the thread history when this focus is stepped.
    pub fn recorded_site(&self) -> Option<Label> {
        match self {
            Focus::Call(c) if c.is_recorded() => Some(c.label),
            _ => None,
        }
    }
}

impl PartialEq for Focus {
    fn eq(&self, other: &Self) -> bool {
        self.label() == other.label()
    }
}

impl Eq for Focus {}

impl PartialOrd for Focus {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Focus {
    fn cmp(&self, other: &Self) -> Ordering {
        self.label().cmp(&other.label())
    }
}

impl core::hash::Hash for Focus {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.label().hash(state)
    }
}

impl fmt::Display for Focus {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{}", self.label())
    }
}

/// A lambda term identified by the label of its `lambda` form.
#[derive(Clone, Debug)]
pub struct LamRef {
    pub label: Label,
    pub lam: Arc<Lambda>,
}

impl LamRef {
    pub fn from_atom(a: &AExp) -> Option<LamRef> {
        match &a.kind {
            AExpKind::Lam(lam) => Some(LamRef { label: a.label, lam: lam.clone() }),
            _ => None,
        }
    }
}

impl PartialEq for LamRef {
    fn eq(&self, other: &Self) -> bool {
        self.label == other.label
    }
}

impl Eq for LamRef {}

impl PartialOrd for LamRef {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for LamRef {
    fn cmp(&self, other: &Self) -> Ordering {
        self.label.cmp(&other.label)
    }
}

impl core::hash::Hash for LamRef {
    fn hash<H: core::hash::Hasher>(&self, state: &mut H) {
        self.label.hash(state)
    }
}

/// Where a continuation or thread was created: a program label, or the
/// distinguished root used for the halt continuation and the initial thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Site {
    Root,
    At(Label),
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Site::Root => f.write_str("root"),
            Site::At(l) => write!(f, "{l}"),
        }
    }
}
