//! The structural abstraction map: truncate histories, forget integers,
//! partition thread ids, and join colliding store cells.

use alloc::collections::BTreeSet;

use super::{AAddr, AContext, AEnv, AHist, AKont, AState, ATid, AValue, Policy};
use crate::concrete::{Addr, CState, Context, Env, Hist, Kont, Tid, Value};
use crate::control::Site;

impl Policy {
    pub fn abstract_hist(&self, h: &Hist) -> AHist {
        self.truncate(h.sites())
    }

    pub fn abstract_tid(&self, t: &Tid) -> ATid {
        match t.site {
            Site::Root => self.root_tid(),
            Site::At(site) => {
                let slot = (t.seq % u64::from(self.slots())) as u32;
                self.newtid(site, &self.abstract_hist(&t.birth), slot)
            }
        }
    }

    pub fn abstract_addr(&self, a: &Addr) -> AAddr {
        match a {
            Addr::Var { var, birth, .. } => AAddr::Var(var.clone(), self.abstract_hist(birth)),
            Addr::Kont { site, birth, .. } => AAddr::Kont(*site, self.abstract_hist(birth)),
            Addr::Tid(t) => AAddr::Tid(self.abstract_tid(t)),
        }
    }

    pub fn abstract_env(&self, env: &Env) -> AEnv {
        AEnv::from_map(env.iter().map(|(v, a)| (v.clone(), self.abstract_addr(a))).collect())
    }

    pub fn abstract_kont(&self, k: &Kont) -> AKont {
        match k {
            Kont::Frame { var, body, env, next } => AKont::Frame {
                var: var.clone(),
                body: body.clone(),
                env: self.abstract_env(env),
                next: self.abstract_addr(next),
            },
            Kont::Halt => AKont::Halt,
        }
    }

    pub fn abstract_value(&self, v: &Value) -> AValue {
        match v {
            Value::Clo { lam, env } => AValue::Clo(lam.clone(), self.abstract_env(env)),
            Value::Bool(b) => AValue::Bool(*b),
            Value::Num(_) => AValue::Num,
            Value::Kont(k) => AValue::Kont(self.abstract_kont(k)),
            Value::Tid(t) => AValue::Tid(self.abstract_tid(t)),
            Value::Addr(a) => AValue::Addr(self.abstract_addr(a)),
        }
    }

    pub fn abstract_context(&self, c: &Context) -> AContext {
        AContext {
            focus: c.focus.clone(),
            env: self.abstract_env(&c.env),
            kont: self.abstract_addr(&c.kont),
            hist: self.abstract_hist(&c.hist),
        }
    }

    pub fn abstract_cursor(&self, next_tid: u64) -> u32 {
        (next_tid % u64::from(self.slots())) as u32
    }
}

/// `α(ς)`: the least abstract state describing `s`.
pub fn abstract_state(s: &CState, policy: &Policy) -> AState {
    let mut out = AState::bottom();
    for (tid, ctx) in &s.threads {
        out.add_context(policy.abstract_tid(tid), policy.abstract_context(ctx));
    }
    for (addr, value) in &s.store.cells {
        out.join_cell(policy.abstract_addr(addr), [policy.abstract_value(value)]);
    }
    out.cursor = BTreeSet::from([policy.abstract_cursor(s.next_tid)]);
    out
}
