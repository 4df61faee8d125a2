#include "clf/checker.hpp"

#include <algorithm>
#include <functional>

#include "clf/printer.hpp"
#include "clf/subst.hpp"

namespace clf {

namespace {

// ---------------------------------------------------------------------------
// Context matching
// ---------------------------------------------------------------------------

// Bijectively matches the entries of `want` (processed in declaration order,
// which is a dependency order for well-formed contexts) against `pool`.
// `required[k]` marks pool entries that must be matched; optional entries may
// stay behind. On success, `usedOut` records which pool entries were taken
// and `m` holds the name correspondence want -> pool.
bool match_context(const std::vector<const Decl*>& want, const std::vector<const Decl*>& pool,
                   const std::vector<bool>& required, AlphaMap& m, std::vector<bool>& usedOut) {
  size_t requiredCount = 0;
  for (bool r : required) requiredCount += r ? 1 : 0;
  if (want.size() < requiredCount || want.size() > pool.size()) return false;

  std::vector<bool> used(pool.size(), false);
  std::function<bool(size_t, size_t, AlphaMap&)> go = [&](size_t i, size_t requiredLeft,
                                                          AlphaMap& cur) -> bool {
    if (i == want.size()) {
      if (requiredLeft != 0) return false;
      usedOut = used;
      m = cur;
      return true;
    }
    if (want.size() - i < requiredLeft) return false;
    for (size_t j = 0; j < pool.size(); ++j) {
      if (used[j]) continue;
      if (want[i]->mod != pool[j]->mod) continue;
      AlphaMap next = cur;
      if (!alpha_eq(want[i]->type, pool[j]->type, next)) continue;
      next.bind(want[i]->name.id, pool[j]->name.id);
      used[j] = true;
      if (go(i + 1, requiredLeft - (required[j] ? 1 : 0), next)) return true;
      used[j] = false;
    }
    return false;
  };
  AlphaMap start = m;
  return go(0, requiredCount, start);
}

std::vector<const Decl*> decl_ptrs(const Context& c) {
  std::vector<const Decl*> out;
  for (const auto& e : c.entries) {
    if (const auto* d = std::get_if<Decl>(&e)) out.push_back(d);
  }
  return out;
}

// ---------------------------------------------------------------------------
// The checker
// ---------------------------------------------------------------------------

struct Checker {
  const Signature& sig;
  CheckReport rep;
  Printer pr;
  std::string where = "input";
  // Entries at index >= limit are invisible (signature self-checking).
  size_t limit;
  std::unordered_map<std::string, size_t> indexOf;

  explicit Checker(const Signature& s, size_t lim = SIZE_MAX) : sig(s), pr(s), limit(lim) {
    size_t i = 0;
    for (const auto& e : sig.entries()) indexOf.emplace(e.name, i++);
  }

  const SigEntry* find_const(const std::string& name) {
    auto it = indexOf.find(name);
    if (it == indexOf.end() || it->second >= limit) return nullptr;
    return sig.find(name);
  }

  void reject(const std::string& msg) { rep.reject(where, msg); }

  // --- formation -----------------------------------------------------------

  void kind_wf(Context& ctx, const KindPtr& k) {
    if (std::holds_alternative<KType>(k->node)) return;
    const auto& pi = std::get<KPi>(k->node);
    type_wf(ctx, pi.arg);
    ctx.push(Decl{Mod::Persistent, pi.binder, pi.arg});
    kind_wf(ctx, pi.body);
    ctx.entries.pop_back();
  }

  void type_wf(Context& ctx, const TypePtr& t) {
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      type_wf(ctx, pi->arg);
      if (pi->mod == Mod::Linear) {
        IdSet fv;
        free_vars(pi->body, fv);
        if (fv.count(pi->binder.id)) {
          reject("linear function types cannot be dependent, but '" + pi->binder.text +
                 "' occurs in the result");
        }
        type_wf(ctx, pi->body);
      } else {
        ctx.push(Decl{Mod::Persistent, pi->binder, pi->arg});
        type_wf(ctx, pi->body);
        ctx.entries.pop_back();
      }
      return;
    }
    if (const auto* a = std::get_if<TAtom>(&t->node)) {
      const SigEntry* e = find_const(a->head);
      if (!e) {
        reject("undeclared type family '" + a->head + "'");
        return;
      }
      if (!e->is_kind()) {
        reject("'" + a->head + "' is a term constant, not a type family");
        return;
      }
      KindPtr k = e->kind();
      LinearityState st{ctx, {}};
      IdSet promoted;
      for (uint32_t id : ctx.dom()) promoted.insert(id);
      for (const auto& el : a->spine.elems) {
        const auto* kp = std::get_if<KPi>(&k->node);
        if (!kp) {
          reject("too many arguments to type family '" + a->head + "'");
          return;
        }
        if (el.mod != Mod::Persistent) {
          reject("type-level arguments must be persistent");
          return;
        }
        term_check(st, el.term, kp->arg, promoted);
        k = hsubst(kp->body, kp->binder.id, el.term, erase(kp->arg));
      }
      if (!std::holds_alternative<KType>(k->node)) {
        reject("type family '" + a->head + "' is missing arguments");
      }
      return;
    }
    const auto& mon = std::get<TMonad>(t->node);
    context_wf(ctx, mon.ctx);
  }

  // Each entry's type is checked under the base context extended with all
  // earlier entries (every name in scope is usable there, whatever its
  // modality).
  void context_wf(Context& ctx, const Context& entries) {
    size_t pushed = 0;
    for (const auto& e : entries.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) {
        type_wf(ctx, d->type);
        ctx.push(*d);
        ++pushed;
      } else {
        reject("context variables only occur in the meta layer");
      }
    }
    while (pushed--) ctx.entries.pop_back();
  }

  // --- terms and spines ------------------------------------------------------
  // `promoted` holds ids usable without consumption (names a type-level term
  // may mention freely). Binders introduced below keep strict discipline.

  void term_check(LinearityState& st, const TermPtr& term, const TypePtr& type,
                  const IdSet& promoted) {
    if (const auto* l = std::get_if<Lam>(&term->node)) {
      const auto* pi = std::get_if<TPi>(&type->node);
      if (!pi) {
        reject("lambda checked against non-function type " + pr.str(type));
        return;
      }
      if (pi->mod != l->mod) {
        reject(std::string("lambda binder '") + l->binder.text + "' is marked " +
               mod_name(l->mod) + " but the type wants " + mod_name(pi->mod));
        return;
      }
      if (st.ctx.find(l->binder.id)) {
        reject("binder '" + l->binder.text + "' rebinds a name already in scope");
        return;
      }
      st.ctx.push(Decl{l->mod, l->binder, pi->arg});
      TypePtr bodyType = pi->body;
      if (pi->binder.id != l->binder.id) {
        bodyType = rename(bodyType, Renaming{{pi->binder.id, l->binder}});
      }
      term_check(st, l->body, bodyType, promoted);
      if (l->mod == Mod::Linear && !st.is_consumed(l->binder.id)) {
        reject("unconsumed linear variable '" + l->binder.text + "'");
      }
      st.consumed.erase(l->binder.id);
      st.ctx.entries.pop_back();
      return;
    }

    if (const auto* b = std::get_if<Braces>(&term->node)) {
      const auto* mon = std::get_if<TMonad>(&type->node);
      if (!mon) {
        reject("trace term checked against non-monadic type " + pr.str(type));
        return;
      }
      braces_check(st, b->trace, mon->ctx, promoted);
      return;
    }

    const auto& a = std::get<Atom>(term->node);
    TypePtr headType;
    if (head_is_var(a.head)) {
      const Name& x = std::get<Name>(a.head);
      const Decl* d = st.ctx.find(x.id);
      if (!d) {
        reject("variable '" + x.text + "' is not in scope");
        return;
      }
      if (d->mod == Mod::Linear && !promoted.count(x.id)) {
        if (st.is_consumed(x.id)) {
          reject("linear variable '" + x.text + "' is consumed twice");
          return;
        }
        st.consumed.insert(x.id);
      }
      headType = d->type;
    } else {
      const std::string& c = std::get<ConstRef>(a.head).name;
      const SigEntry* e = find_const(c);
      if (!e) {
        reject("undeclared constant '" + c + "'");
        return;
      }
      if (e->is_kind()) {
        reject("type family '" + c + "' used as a term");
        return;
      }
      headType = e->type();
    }

    TypePtr residual = spine_check(st, a.spine, headType, promoted);
    if (!residual) return;
    if (std::holds_alternative<TPi>(residual->node)) {
      reject("head applied to too few arguments for type " + pr.str(residual) +
             " (canonical terms are fully applied)");
      return;
    }
    if (!alpha_eq(residual, type)) {
      reject("term has type " + pr.str(residual) + " but " + pr.str(type) + " was expected");
    }
  }

  TypePtr spine_check(LinearityState& st, const Spine& spine, const TypePtr& headType,
                      const IdSet& promoted) {
    TypePtr cur = headType;
    for (const auto& el : spine.elems) {
      const auto* pi = std::get_if<TPi>(&cur->node);
      if (!pi) {
        reject("spine applies an argument to the non-function type " + pr.str(cur));
        return nullptr;
      }
      if (pi->mod != el.mod) {
        reject(std::string("spine argument is marked ") + mod_name(el.mod) + " but the type " +
               pr.str(cur) + " wants a " + mod_name(pi->mod) + " argument");
        return nullptr;
      }
      if (el.mod == Mod::Persistent) {
        IdSet before = st.consumed;
        term_check(st, el.term, pi->arg, promoted);
        if (st.consumed.size() != before.size()) {
          for (uint32_t id : st.consumed) {
            if (!before.count(id)) {
              const Decl* d = st.ctx.find(id);
              reject("persistent argument consumes the linear variable '" +
                     (d ? d->name.text : "?") + "'");
            }
          }
          return nullptr;
        }
      } else {
        term_check(st, el.term, pi->arg, promoted);
      }
      cur = hsubst(pi->body, pi->binder.id, el.term, erase(pi->arg));
    }
    return cur;
  }

  // --- traces ----------------------------------------------------------------

  // Runs the trace on `st`: consumes linear spine inputs lazily and appends
  // each step's declared outputs to the context.
  void trace_check(LinearityState& st, const Trace& trace, const IdSet& promoted) {
    int stepNo = 0;
    for (const auto& s : trace.steps) {
      ++stepNo;
      const auto* ls = std::get_if<LetStep>(&s);
      if (!ls) {
        reject("trace variables cannot be checked at the object level");
        return;
      }
      const SigEntry* e = find_const(ls->rule);
      if (!e) {
        reject("step " + std::to_string(stepNo) + " uses undeclared rule '" + ls->rule + "'");
        return;
      }
      if (e->is_kind()) {
        reject("step " + std::to_string(stepNo) + " uses type family '" + ls->rule +
               "' as a rule");
        return;
      }
      TypePtr residual = spine_check(st, ls->spine, e->type(), promoted);
      if (!residual) return;
      const auto* mon = std::get_if<TMonad>(&residual->node);
      if (!mon) {
        reject("step " + std::to_string(stepNo) + ": rule '" + ls->rule +
               "' does not reach a monadic type here (got " + pr.str(residual) + ")");
        return;
      }
      // Declared outputs must form the computed context, up to reordering
      // and renaming.
      if (!context_equiv(ls->outs, mon->ctx)) {
        reject("step " + std::to_string(stepNo) + ": declared outputs {" + pr.str(ls->outs) +
               "} do not match the rule's result {" + pr.str(mon->ctx) + "}");
        return;
      }
      for (const auto& oe : ls->outs.entries) {
        const auto& d = std::get<Decl>(oe);
        if (st.ctx.find(d.name.id)) {
          reject("step " + std::to_string(stepNo) + " rebinds the name '" + d.name.text + "'");
          return;
        }
        st.ctx.push(d);
      }
    }
  }

  Context residual_context(const LinearityState& st) const {
    Context out;
    for (const auto& e : st.ctx.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) {
        if (d->mod == Mod::Linear && st.is_consumed(d->name.id)) continue;
        out.push(*d);
      } else {
        out.push(std::get<CtxVar>(e));
      }
    }
    return out;
  }

  // {trace} checked against {want}: the trace runs on the shared state, and
  // the full resulting context must match `want` exactly: all step outputs
  // and all visible persistent declarations must appear in it, and whatever
  // unconsumed linear names it mentions are consumed from the outer state
  // (they belonged to this term's slice of the context).
  void braces_check(LinearityState& st, const Trace& trace, const Context& want,
                    const IdSet& promoted) {
    size_t poolSize = st.ctx.size();
    size_t diagsBefore = rep.diagnostics.size();
    trace_check(st, trace, promoted);
    if (rep.diagnostics.size() > diagsBefore) {
      // The trace itself failed; drop its outputs from scope and stop.
      st.ctx.entries.resize(poolSize);
      return;
    }

    std::vector<const Decl*> pool;
    std::vector<bool> required;
    for (size_t i = 0; i < st.ctx.entries.size(); ++i) {
      const auto* d = std::get_if<Decl>(&st.ctx.entries[i]);
      if (!d) continue;
      bool isOut = i >= poolSize;
      if (d->mod == Mod::Linear) {
        if (st.is_consumed(d->name.id)) continue;
        pool.push_back(d);
        required.push_back(isOut);  // leftover outer linear names may stay
      } else {
        pool.push_back(d);
        required.push_back(true);  // persistent names are in every split
      }
    }
    std::vector<const Decl*> wantPtrs = decl_ptrs(want);
    AlphaMap m;
    std::vector<bool> used;
    if (!match_context(wantPtrs, pool, required, m, used)) {
      reject("trace produces {" + pr.str(residual_context(st)) + "} but {" + pr.str(want) +
             "} was expected");
      st.ctx.entries.resize(poolSize);
      return;
    }
    // Outer linear names matched into `want` belong to this term: consume.
    for (size_t j = 0; j < pool.size(); ++j) {
      if (used[j] && !required[j]) st.consumed.insert(pool[j]->name.id);
    }
    for (size_t i = poolSize; i < st.ctx.entries.size(); ++i) {
      st.consumed.erase(std::get<Decl>(st.ctx.entries[i]).name.id);
    }
    st.ctx.entries.resize(poolSize);
  }
};

}  // namespace

// ---------------------------------------------------------------------------
// Public entry points
// ---------------------------------------------------------------------------

CheckReport check_signature(const Signature& sig) {
  CheckReport out;
  size_t idx = 0;
  for (const auto& e : sig.entries()) {
    Checker ck(sig, idx);  // an entry sees only its predecessors
    ck.where = e.name;
    Context empty;
    if (e.is_kind()) {
      ck.kind_wf(empty, e.kind());
    } else {
      ck.type_wf(empty, e.type());
    }
    out.absorb(ck.rep);
    ++idx;
  }
  return out;
}

CheckReport check_kind_wf(const Context& ctx, const KindPtr& k, const Signature& sig) {
  Checker ck(sig);
  Context c = ctx;
  ck.kind_wf(c, k);
  return ck.rep;
}

CheckReport check_type_wf(const Context& ctx, const TypePtr& t, const Signature& sig) {
  Checker ck(sig);
  Context c = ctx;
  ck.type_wf(c, t);
  return ck.rep;
}

CheckReport check_context_wf(const Context& base, const Context& entries, const Signature& sig) {
  Checker ck(sig);
  Context c = base;
  ck.context_wf(c, entries);
  return ck.rep;
}

CheckReport check_term(LinearityState& state, const TermPtr& term, const TypePtr& type,
                       const Signature& sig) {
  Checker ck(sig);
  ck.where = "term";
  ck.term_check(state, term, type, {});
  return ck.rep;
}

CheckReport check_term(const Context& ctx, const TermPtr& term, const TypePtr& type,
                       const Signature& sig) {
  LinearityState st{ctx, {}};
  CheckReport rep = check_term(st, term, type, sig);
  for (const auto& e : ctx.entries) {
    if (const auto* d = std::get_if<Decl>(&e)) {
      if (d->mod == Mod::Linear && !st.is_consumed(d->name.id)) {
        rep.reject("term", "unconsumed linear variable '" + d->name.text + "'");
      }
    }
  }
  return rep;
}

SpineResult check_spine(LinearityState& state, const Spine& spine, const TypePtr& headType,
                        const Signature& sig) {
  Checker ck(sig);
  ck.where = "spine";
  TypePtr residual = ck.spine_check(state, spine, headType, {});
  return {residual, ck.rep};
}

TraceResult check_trace(LinearityState& state, const Trace& trace, const Signature& sig) {
  Checker ck(sig);
  ck.where = "trace";
  ck.trace_check(state, trace, {});
  return {ck.residual_context(state), ck.rep};
}

TraceResult check_trace(const Context& pre, const Trace& trace, const Signature& sig) {
  LinearityState st{pre, {}};
  return check_trace(st, trace, sig);
}

bool context_equiv(const Context& a, const Context& b) {
  std::vector<const Decl*> as = decl_ptrs(a);
  std::vector<const Decl*> bs = decl_ptrs(b);
  if (as.size() != bs.size()) return false;
  if (as.size() != a.entries.size() || bs.size() != b.entries.size()) {
    return false;  // context variables are not ground
  }
  AlphaMap m;
  std::vector<bool> used;
  return match_context(as, bs, std::vector<bool>(bs.size(), true), m, used);
}

bool frame_check(const Context& extra, const Trace& trace, const Context& pre,
                 const Context& post, const Signature& sig) {
  IdSet taken;
  for (uint32_t id : pre.dom()) taken.insert(id);
  for (const auto& s : trace.steps) {
    if (const auto* ls = std::get_if<LetStep>(&s)) {
      for (uint32_t id : ls->outs.dom()) taken.insert(id);
    }
  }
  Context joined;
  for (const auto& e : extra.entries) {
    const auto* d = std::get_if<Decl>(&e);
    if (!d) throw CheckError("frame contexts must be ground");
    if (taken.count(d->name.id)) {
      throw CheckError("frame declaration '" + d->name.text +
                       "' clashes with a name bound by the trace or its context");
    }
    joined.push(*d);
  }
  for (const auto& e : pre.entries) {
    const auto* d = std::get_if<Decl>(&e);
    if (!d) throw CheckError("frame property needs a ground pre-context");
    joined.push(*d);
  }

  TraceResult res = check_trace(joined, trace, sig);
  if (!res.report.ok) return false;

  Context wanted = extra;
  for (const auto& e : post.entries) {
    const auto* d = std::get_if<Decl>(&e);
    if (!d) throw CheckError("frame property needs a ground post-context");
    wanted.push(*d);
  }
  return context_equiv(res.result, wanted);
}

}  // namespace clf
