use alloc::collections::{BTreeMap, BTreeSet};

use super::{AExp, AExpKind, CExp, CExpKind, Expr, ExprKind, Label, Var};

pub fn free_vars(e: &Expr) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    expr_fv(e, &mut out);
    out
}

pub fn free_vars_of_call(c: &CExp) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    call_fv(c, &mut out);
    out
}

pub fn free_vars_of_atom(a: &AExp) -> BTreeSet<Var> {
    let mut out = BTreeSet::new();
    atom_fv(a, &mut out);
    out
}

fn expr_fv(e: &Expr, out: &mut BTreeSet<Var>) {
    match &e.kind {
        ExprKind::Let { var, binding, body } => {
            call_fv(binding, out);
            let mut inner = free_vars(body);
            inner.remove(var);
            out.extend(inner);
        }
        ExprKind::Call(c) => call_fv(c, out),
        ExprKind::Atom(a) => atom_fv(a, out),
    }
}

fn call_fv(c: &CExp, out: &mut BTreeSet<Var>) {
    match &c.kind {
        CExpKind::App { func, args } => {
            atom_fv(func, out);
            args.iter().for_each(|a| atom_fv(a, out));
        }
        CExpKind::CallCC(a) | CExpKind::Join(a) => atom_fv(a, out),
        CExpKind::SetBang { var, value } => {
            out.insert(var.clone());
            atom_fv(value, out);
        }
        CExpKind::If { cond, then, els } => {
            atom_fv(cond, out);
            call_fv(then, out);
            call_fv(els, out);
        }
        CExpKind::Cas { var, old, new } => {
            out.insert(var.clone());
            atom_fv(old, out);
            atom_fv(new, out);
        }
        CExpKind::Spawn(body) => expr_fv(body, out),
    }
}

fn atom_fv(a: &AExp, out: &mut BTreeSet<Var>) {
    match &a.kind {
        AExpKind::Var(v) => {
            out.insert(v.clone());
        }
        AExpKind::Lam(lam) => out.extend(lam.free.iter().cloned()),
        AExpKind::Num(_) | AExpKind::Bool(_) => {}
    }
}

/// A borrowed syntax node addressed by its label.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node<'a> {
    Expr(&'a Expr),
    CExp(&'a CExp),
    AExp(&'a AExp),
}

/// Every label in `e` mapped to the node carrying it. Atoms in expression
/// position share their label, and the map points at the atom.
pub fn subexpressions(e: &Expr) -> BTreeMap<Label, Node<'_>> {
    let mut out = BTreeMap::new();
    visit_expr(e, &mut |label, node| {
        out.insert(label, node);
    });
    out
}

fn visit_expr<'a>(e: &'a Expr, f: &mut impl FnMut(Label, Node<'a>)) {
    match &e.kind {
        ExprKind::Let { binding, body, .. } => {
            f(e.label, Node::Expr(e));
            visit_call(binding, f);
            visit_expr(body, f);
        }
        ExprKind::Call(c) => {
            f(e.label, Node::Expr(e));
            visit_call(c, f);
        }
        ExprKind::Atom(a) => visit_atom(a, f),
    }
}

fn visit_call<'a>(c: &'a CExp, f: &mut impl FnMut(Label, Node<'a>)) {
    f(c.label, Node::CExp(c));
    match &c.kind {
        CExpKind::App { func, args } => {
            visit_atom(func, f);
            args.iter().for_each(|a| visit_atom(a, f));
        }
        CExpKind::CallCC(a) | CExpKind::Join(a) => visit_atom(a, f),
        CExpKind::SetBang { value, .. } => visit_atom(value, f),
        CExpKind::If { cond, then, els } => {
            visit_atom(cond, f);
            visit_call(then, f);
            visit_call(els, f);
        }
        CExpKind::Cas { old, new, .. } => {
            visit_atom(old, f);
            visit_atom(new, f);
        }
        CExpKind::Spawn(body) => visit_expr(body, f),
    }
}

fn visit_atom<'a>(a: &'a AExp, f: &mut impl FnMut(Label, Node<'a>)) {
    f(a.label, Node::AExp(a));
    if let AExpKind::Lam(lam) = &a.kind {
        visit_expr(&lam.body, f);
    }
}

/// Checks the structural invariants a parsed program must satisfy: labels
/// are exactly `0..n` in pre-order, atoms in expression position share
/// their label, and lambda parameters are distinct.
pub fn check_grammar(e: &Expr) -> bool {
    let mut next = 0u32;
    let mut ok = true;
    visit_expr(e, &mut |label, node| {
        ok &= label.0 == next;
        next += 1;
        if let Node::AExp(AExp { kind: AExpKind::Lam(lam), .. }) = node {
            let distinct: BTreeSet<_> = lam.params.iter().collect();
            ok &= distinct.len() == lam.params.len();
        }
    });
    ok && atoms_share_labels(e)
}

fn atoms_share_labels(e: &Expr) -> bool {
    let mut ok = true;
    visit_expr(e, &mut |_, node| {
        if let Node::AExp(AExp { kind: AExpKind::Lam(lam), .. }) = node {
            ok &= expr_atom_shares(&lam.body);
        }
        if let Node::Expr(Expr { kind: ExprKind::Let { body, .. }, .. }) = node {
            ok &= expr_atom_shares(body);
        }
        if let Node::CExp(CExp { kind: CExpKind::Spawn(body), .. }) = node {
            ok &= expr_atom_shares(body);
        }
    });
    ok && expr_atom_shares(e)
}

fn expr_atom_shares(e: &Expr) -> bool {
    match &e.kind {
        ExprKind::Atom(a) => a.label == e.label,
        _ => true,
    }
}
