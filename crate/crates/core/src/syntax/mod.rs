//! Labeled abstract syntax for the ANF concurrent lambda calculus.
//!
//! ```text
//! e    ::= (let ((v cexp)) e) | cexp | ae
//! cexp ::= (f ae ...) | (callcc ae) | (set! v ae) | (if ae cexp cexp)
//!        | (cas v ae ae) | (spawn e) | (join ae)
//! ae   ::= (lambda (v ...) e) | v | n | #t | #f
//! ```
//!
//! Labeling scheme: labels are handed out in pre-order. A `let` expression
//! and a call in expression position each get their own label, and the call
//! they wrap gets the next one. An atomic expression in expression position
//! shares its label with the atom, so `42` on its own has exactly one label
//! and `((lambda (x) x) 42)` has five.

mod parse;
mod query;

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

pub use parse::{parse, parse_program, ParseError};
pub use query::{check_grammar, free_vars, free_vars_of_atom, free_vars_of_call, subexpressions, Node};

/// Pre-order position of a syntax node within one program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label(pub u32);

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Variable name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Var(Arc<str>);

impl Var {
    pub fn new(name: &str) -> Self {
        Var(Arc::from(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Debug for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for Var {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Line and column (both 1-based) where a node starts in the source.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Default)]
pub struct Span {
    pub line: u32,
    pub column: u32,
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.column)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Expr {
    pub label: Label,
    pub kind: ExprKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ExprKind {
    Let {
        var: Var,
        binding: Arc<CExp>,
        body: Arc<Expr>,
    },
    Call(Arc<CExp>),
    /// Shares its label with the wrapped atom.
    Atom(AExp),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CExp {
    pub label: Label,
    pub kind: CExpKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CExpKind {
    App { func: AExp, args: Vec<AExp> },
    CallCC(AExp),
    SetBang { var: Var, value: AExp },
    If { cond: AExp, then: Arc<CExp>, els: Arc<CExp> },
    Cas { var: Var, old: AExp, new: AExp },
    Spawn(Arc<Expr>),
    Join(AExp),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AExp {
    pub label: Label,
    pub kind: AExpKind,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum AExpKind {
    Lam(Arc<Lambda>),
    Var(Var),
    Num(i64),
    Bool(bool),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Lambda {
    pub params: Vec<Var>,
    pub body: Arc<Expr>,
    /// Free variables of the whole lambda, sorted.
    pub free: Vec<Var>,
}

impl CExp {
    /// Calls that extend a thread history: applications, `callcc`, `spawn` and `join`.
    pub fn is_recorded(&self) -> bool {
        matches!(
            self.kind,
            CExpKind::App { .. } | CExpKind::CallCC(_) | CExpKind::Spawn(_) | CExpKind::Join(_)
        )
    }
}

/// A parsed program together with the source position of every label.
#[derive(Clone, Debug)]
pub struct Program {
    pub root: Arc<Expr>,
    spans: Vec<Span>,
}

impl Program {
    pub fn new(root: Arc<Expr>, spans: Vec<Span>) -> Self {
        Program { root, spans }
    }

    pub fn span(&self, label: Label) -> Option<Span> {
        self.spans.get(label.0 as usize).copied()
    }

    /// Number of labels handed out, i.e. the node count.
    pub fn label_count(&self) -> usize {
        self.spans.len()
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ExprKind::Let { var, binding, body } => write!(f, "(let (({var} {binding})) {body})"),
            ExprKind::Call(call) => write!(f, "{call}"),
            ExprKind::Atom(ae) => write!(f, "{ae}"),
        }
    }
}

impl fmt::Display for CExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            CExpKind::App { func, args } => {
                write!(f, "({func}")?;
                for arg in args {
                    write!(f, " {arg}")?;
                }
                f.write_str(")")
            }
            CExpKind::CallCC(ae) => write!(f, "(callcc {ae})"),
            CExpKind::SetBang { var, value } => write!(f, "(set! {var} {value})"),
            CExpKind::If { cond, then, els } => write!(f, "(if {cond} {then} {els})"),
            CExpKind::Cas { var, old, new } => write!(f, "(cas {var} {old} {new})"),
            CExpKind::Spawn(body) => write!(f, "(spawn {body})"),
            CExpKind::Join(ae) => write!(f, "(join {ae})"),
        }
    }
}

impl fmt::Display for AExp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            AExpKind::Lam(lam) => {
                f.write_str("(lambda (")?;
                for (i, p) in lam.params.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    write!(f, "{p}")?;
                }
                write!(f, ") {})", lam.body)
            }
            AExpKind::Var(v) => write!(f, "{v}"),
            AExpKind::Num(n) => write!(f, "{n}"),
            AExpKind::Bool(true) => f.write_str("#t"),
            AExpKind::Bool(false) => f.write_str("#f"),
        }
    }
}
