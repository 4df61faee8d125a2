#include "clf/engine.hpp"

#include <algorithm>
#include <functional>
#include <optional>

#include "clf/subst.hpp"
#include "clf/unify.hpp"

namespace clf {

namespace {

// ---------------------------------------------------------------------------
// Sizes (for default chaining budgets)
// ---------------------------------------------------------------------------

size_t term_size(const TermPtr& t);

size_t spine_size(const Spine& s) {
  size_t n = 0;
  for (const auto& el : s.elems) n += term_size(el.term);
  return n;
}

size_t term_size(const TermPtr& t) {
  if (const auto* l = std::get_if<Lam>(&t->node)) return 1 + term_size(l->body);
  if (const auto* a = std::get_if<Atom>(&t->node)) return 1 + spine_size(a->spine);
  return 1;  // brace terms never appear in chaining goals
}

size_t type_size(const TypePtr& t) {
  if (const auto* pi = std::get_if<TPi>(&t->node)) {
    return 1 + type_size(pi->arg) + type_size(pi->body);
  }
  if (const auto* a = std::get_if<TAtom>(&t->node)) return 1 + spine_size(a->spine);
  return 1;
}

int64_t budget_for(const TypePtr& goal, int64_t requested) {
  if (requested >= 0) return requested;
  return 4 * static_cast<int64_t>(type_size(goal)) + 8;
}

// ---------------------------------------------------------------------------
// Rule telescopes
// ---------------------------------------------------------------------------

bool shape_of(const TypePtr& ty, RuleView& out) {
  TypePtr cur = ty;
  for (;;) {
    if (const auto* pi = std::get_if<TPi>(&cur->node)) {
      RuleItem it;
      it.binder = pi->binder;
      it.original = pi->binder;
      it.type = pi->arg;
      if (pi->mod == Mod::Linear) {
        it.kind = RuleItem::Kind::LinearPremise;
      } else {
        IdSet fv;
        free_vars(pi->body, fv);
        it.kind = fv.count(pi->binder.id) ? RuleItem::Kind::Arg : RuleItem::Kind::PersistentPremise;
      }
      out.items.push_back(std::move(it));
      cur = pi->body;
      continue;
    }
    if (std::holds_alternative<TMonad>(cur->node) || std::holds_alternative<TAtom>(cur->node)) {
      out.tail = cur;
      return true;
    }
    return false;
  }
}

// A fully freshened copy of a rule's telescope; `original` keeps the binders
// as written in the signature so matches remain keyed to them. Signature
// types carry fixed binder ids, so instantiating a rule twice without the
// freshening would bind the same id twice in one term.
RuleView fresh_shape(const TypePtr& ruleType, const RuleView& original) {
  RuleView fr;
  shape_of(alpha_fresh(ruleType), fr);
  for (size_t i = 0; i < fr.items.size(); ++i) fr.items[i].original = original.items[i].binder;
  return fr;
}

bool ground_wrt(const TermPtr& t, const MetaSet& metas) {
  IdSet fv;
  free_vars(t, fv);
  for (uint32_t id : fv)
    if (metas.is_meta(id)) return false;
  return true;
}

bool ground_wrt(const TypePtr& t, const MetaSet& metas) {
  IdSet fv;
  free_vars(t, fv);
  for (uint32_t id : fv)
    if (metas.is_meta(id)) return false;
  return true;
}

template <class T>
void shuffle_vec(std::vector<T>& v, std::mt19937_64& rng) {
  for (size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[bounded(rng, i)]);
}

// ---------------------------------------------------------------------------
// Backward chaining
// ---------------------------------------------------------------------------

struct Solver {
  const Signature& sig;
  const State& state;
  MetaSet& metas;
  std::mt19937_64* rng = nullptr;
  int64_t budget = 0;
  bool ranOut = false;
  bool synthesizeOpen = true;
  std::vector<std::pair<Name, TypePtr>> hyps;

  // signature clauses usable for chaining: all-persistent telescopes ending
  // in an atom (typing rules, value rules, term constructors)
  std::vector<std::pair<const SigEntry*, RuleView>> clauses;

  Solver(const Signature& s, const State& st, MetaSet& m, std::mt19937_64* r)
      : sig(s), state(st), metas(m), rng(r) {
    for (const auto& e : sig.entries()) {
      if (e.is_kind()) continue;
      RuleView rs;
      if (!shape_of(e.type(), rs) || rs.monadic()) continue;
      bool linearFree = true;
      for (const auto& it : rs.items)
        if (it.kind == RuleItem::Kind::LinearPremise) linearFree = false;
      if (linearFree) clauses.emplace_back(&e, std::move(rs));
    }
  }

  struct Cand {
    Name var;                    // hypothesis / state fact (when entry == null)
    TypePtr varType;
    const SigEntry* entry = nullptr;
    const RuleView* shape = nullptr;
  };

  std::optional<TermPtr> atom(const TypePtr& goal, MetaSubst& s) {
    if (budget <= 0) {
      ranOut = true;
      return std::nullopt;
    }
    --budget;
    const auto* ga = std::get_if<TAtom>(&goal->node);
    if (!ga) return std::nullopt;

    std::vector<Cand> cands;
    for (auto it = hyps.rbegin(); it != hyps.rend(); ++it) {
      const auto* ha = std::get_if<TAtom>(&it->second->node);
      if (ha && ha->head == ga->head) cands.push_back(Cand{it->first, it->second, nullptr, nullptr});
    }
    for (const auto& entry : state.facts.entries) {
      const auto* d = std::get_if<Decl>(&entry);
      if (!d || d->mod != Mod::Persistent) continue;
      const auto* ha = std::get_if<TAtom>(&d->type->node);
      if (ha && ha->head == ga->head) cands.push_back(Cand{d->name, d->type, nullptr, nullptr});
    }
    for (const auto& [entry, shape] : clauses) {
      const auto* ha = std::get_if<TAtom>(&shape.tail->node);
      if (ha && ha->head == ga->head) cands.push_back(Cand{Name{}, nullptr, entry, &shape});
    }
    if (rng) shuffle_vec(cands, *rng);

    for (const auto& cand : cands) {
      MetaSubst s2 = s;
      if (!cand.entry) {
        if (unify_type(goal, cand.varType, metas, s2)) {
          s = std::move(s2);
          return m_var(cand.var);
        }
        continue;
      }
      RuleView fr = fresh_shape(cand.entry->type(), *cand.shape);
      // Raise the clause's argument metavariables over the in-scope
      // eigenvariables: a meta introduced under hypotheses may depend on
      // them, and a bare meta could never record that dependency (its later
      // solutions would smuggle the variables out of scope).
      std::vector<TermPtr> argTerm(fr.items.size());
      for (size_t i = 0; i < fr.items.size(); ++i) {
        RuleItem& it = fr.items[i];
        if (it.kind != RuleItem::Kind::Arg) continue;
        if (hyps.empty()) {
          metas.declare(it.binder, it.type);
          argTerm[i] = m_var(it.binder);
          continue;
        }
        TypePtr rty = it.type;
        for (auto h = hyps.rbegin(); h != hyps.rend(); ++h) {
          rty = t_pi(Mod::Persistent, h->first, h->second, rty);
        }
        Name m = fresh_name(it.binder.text);
        metas.declare(m, rty);
        Spine esp;
        for (const auto& h : hyps) esp.elems.push_back(SpineElem{Mod::Persistent, m_var(h.first)});
        TermPtr repl = m_atom(m, std::move(esp));
        ShapePtr osh = erase(it.type);
        for (size_t j = i + 1; j < fr.items.size(); ++j) {
          fr.items[j].type = hsubst(fr.items[j].type, it.binder.id, repl, osh);
        }
        fr.tail = hsubst(fr.tail, it.binder.id, repl, osh);
        it.binder = m;
        it.type = rty;
        argTerm[i] = repl;
      }
      if (!unify_type(goal, fr.tail, metas, s2)) continue;

      Spine sp;
      bool ok = true;
      for (size_t i = 0; i < fr.items.size(); ++i) {
        const RuleItem& it = fr.items[i];
        if (it.kind == RuleItem::Kind::Arg) {
          // placeholder; meta_apply resolves it once the argument is solved
          sp.elems.push_back(SpineElem{Mod::Persistent, argTerm[i]});
          continue;
        }
        auto sub = goal_type(it.type, s2);
        if (!sub) {
          ok = false;
          break;
        }
        sp.elems.push_back(SpineElem{Mod::Persistent, *sub});
      }
      if (ok && synthesizeOpen) {
        // synthesize quantified arguments no premise determined
        for (const auto& it : fr.items) {
          if (it.kind != RuleItem::Kind::Arg || s2.find(it.binder.id)) continue;
          auto syn = goal_type(it.type, s2);
          if (!syn) {
            ok = false;
            break;
          }
          s2.map[it.binder.id] = MetaSubst::Entry{*syn, erase(it.type)};
        }
      }
      if (!ok) continue;
      s = std::move(s2);
      return m_const(cand.entry->name, std::move(sp));
    }
    return std::nullopt;
  }

  // Chaining goal for a full classifier: hypothetical premises introduce a
  // fresh assumption and wrap the subproof in a lambda.
  std::optional<TermPtr> goal_type(const TypePtr& goal, MetaSubst& s) {
    if (const auto* pi = std::get_if<TPi>(&goal->node)) {
      if (pi->mod == Mod::Linear) return std::nullopt;
      Name nx = fresh_name(pi->binder.text.empty() ? "x" : pi->binder.text);
      TypePtr body = rename(pi->body, Renaming{{pi->binder.id, nx}});
      hyps.emplace_back(nx, pi->arg);
      auto sub = goal_type(body, s);
      hyps.pop_back();
      if (!sub) return std::nullopt;
      return m_lam(Mod::Persistent, nx, *sub);
    }
    if (std::holds_alternative<TAtom>(goal->node)) return atom(goal, s);
    return std::nullopt;
  }
};

struct FactView {
  Name name;
  TypePtr type;
};

}  // namespace

// ---------------------------------------------------------------------------
// Public operations
// ---------------------------------------------------------------------------

uint64_t bounded(std::mt19937_64& rng, uint64_t n) {
  if (n == 0) throw EngineError("bounded: empty range");
  uint64_t x, r;
  do {
    x = rng();
    r = x % n;
  } while (x - r > uint64_t(0) - n);
  return r;
}

std::optional<RuleView> rule_view(const TypePtr& ruleType) {
  RuleView orig;
  if (!shape_of(ruleType, orig)) return std::nullopt;
  return fresh_shape(ruleType, orig);
}

State make_state(const Context& facts) {
  IdSet seen;
  for (const auto& entry : facts.entries) {
    const auto* d = std::get_if<Decl>(&entry);
    if (!d) throw EngineError("state contexts cannot contain context variables");
    if (!std::holds_alternative<TAtom>(d->type->node)) {
      throw EngineError("fact '" + d->name.text + "' does not have an atomic type");
    }
    IdSet fv;
    free_vars(d->type, fv);
    for (uint32_t id : fv) {
      if (!seen.count(id)) {
        throw EngineError("fact '" + d->name.text + "' mentions a name outside the state");
      }
    }
    seen.insert(d->name.id);
  }
  return State{facts, 0};
}

std::vector<Match> enumerate_matches(const State& state, const Signature& sig) {
  return enumerate_matches(state, sig, MatchOptions{});
}

std::vector<Match> enumerate_matches(const State& state, const Signature& sig,
                                     const MatchOptions& opts) {
  std::vector<Match> out;

  std::vector<FactView> linear;
  for (const auto& entry : state.facts.entries) {
    if (const auto* d = std::get_if<Decl>(&entry)) {
      if (d->mod == Mod::Linear) linear.push_back(FactView{d->name, d->type});
    }
  }

  for (const auto& se : sig.entries()) {
    if (se.is_kind()) continue;
    RuleView rs;
    if (!shape_of(se.type(), rs) || !rs.monadic()) continue;

    RuleView fr = fresh_shape(se.type(), rs);
    MetaSet metas;
    std::vector<const RuleItem*> linItems;
    for (size_t i = 0; i < fr.items.size(); ++i) {
      const RuleItem& it = fr.items[i];
      if (it.kind == RuleItem::Kind::Arg) metas.declare(it.binder, it.type);
      if (it.kind == RuleItem::Kind::LinearPremise) linItems.push_back(&it);
    }

    auto finish = [&](const std::vector<size_t>& chosen, MetaSubst s) {
      if (opts.onlyConsuming && chosen.empty()) return;

      Solver solver(sig, state, metas, opts.rng);
      std::vector<std::pair<TypePtr, TermPtr>> proofs;
      for (const auto& it : fr.items) {
        if (it.kind != RuleItem::Kind::PersistentPremise) continue;
        solver.budget = budget_for(it.type, opts.chainBudget);
        auto pf = solver.goal_type(it.type, s);
        if (!pf) return;
        proofs.emplace_back(it.type, *pf);
      }
      for (const auto& it : fr.items) {
        if (it.kind != RuleItem::Kind::Arg || s.find(it.binder.id)) continue;
        solver.budget = budget_for(it.type, opts.chainBudget);
        auto syn = solver.goal_type(it.type, s);
        if (!syn) return;
        s.map[it.binder.id] = MetaSubst::Entry{*syn, erase(it.type)};
      }

      Match m;
      m.rule = se.name;
      for (size_t fi : chosen) m.consumedLinear.push_back(linear[fi].name);
      for (const auto& it : fr.items) {
        if (it.kind != RuleItem::Kind::Arg) continue;
        TermPtr v = meta_apply(m_var(it.binder), s);
        if (!ground_wrt(v, metas)) return;
        // solutions share subtrees across occurrences; fresh copies keep
        // every bound name unique inside each stored value
        m.instantiation[it.original.id] = alpha_fresh(v);
      }
      for (auto& [premise, proof] : proofs) {
        TypePtr pg = meta_apply(premise, s);
        TermPtr pf = meta_apply(proof, s);
        if (!ground_wrt(pg, metas) || !ground_wrt(pf, metas)) return;
        m.persistentSolutions.emplace_back(alpha_fresh(pg), alpha_fresh(pf));
      }
      for (const auto& entry : meta_apply(fr.outs(), s).entries) {
        const auto* d = std::get_if<Decl>(&entry);
        if (!d || !ground_wrt(d->type, metas)) return;
      }
      out.push_back(std::move(m));
    };

    std::vector<size_t> chosen;
    std::function<void(size_t, MetaSubst)> go = [&](size_t li, MetaSubst s) {
      if (li == linItems.size()) {
        finish(chosen, std::move(s));
        return;
      }
      for (size_t fi = 0; fi < linear.size(); ++fi) {
        if (std::find(chosen.begin(), chosen.end(), fi) != chosen.end()) continue;
        MetaSubst s2 = s;
        if (!unify_type(linItems[li]->type, linear[fi].type, metas, s2)) continue;
        chosen.push_back(fi);
        go(li + 1, std::move(s2));
        chosen.pop_back();
      }
    };
    go(0, MetaSubst{});
  }
  return out;
}

SolveResult solve_persistent(const TypePtr& goal, const Signature& sig, const State& state,
                             int64_t depthBudget) {
  MetaSet metas;
  MetaSubst s;
  return solve_constrained(goal, sig, state, metas, s, depthBudget, nullptr);
}

SolveResult solve_constrained(const TypePtr& goal, const Signature& sig, const State& state,
                              MetaSet& metas, MetaSubst& subst, int64_t depthBudget,
                              std::mt19937_64* rng, bool synthesizeOpen) {
  Solver solver(sig, state, metas, rng);
  solver.budget = budget_for(goal, depthBudget);
  solver.synthesizeOpen = synthesizeOpen;
  auto pf = solver.goal_type(goal, subst);
  if (pf) return SolveResult{SolveStatus::Solved, meta_apply(*pf, subst)};
  return SolveResult{solver.ranOut ? SolveStatus::OutOfBudget : SolveStatus::Failed, nullptr};
}

std::pair<State, LetStep> apply_step(const State& state, const Match& match,
                                     const Signature& sig) {
  const SigEntry* se = sig.find(match.rule);
  if (!se || se->is_kind()) throw EngineError("unknown rule '" + match.rule + "'");
  RuleView rs;
  if (!shape_of(se->type(), rs) || !rs.monadic()) {
    throw EngineError("rule '" + match.rule + "' does not end in a monadic type");
  }

  MetaSubst s;
  size_t li = 0;
  size_t pi = 0;
  Spine sp;
  for (const auto& it : rs.items) {
    switch (it.kind) {
      case RuleItem::Kind::Arg: {
        auto found = match.instantiation.find(it.original.id);
        if (found == match.instantiation.end()) {
          throw EngineError("match does not instantiate '" + it.original.text + "'");
        }
        s.map[it.original.id] = MetaSubst::Entry{found->second, erase(it.type)};
        sp.elems.push_back(SpineElem{Mod::Persistent, found->second});
        break;
      }
      case RuleItem::Kind::LinearPremise: {
        if (li >= match.consumedLinear.size()) throw EngineError("malformed match: missing fact");
        sp.elems.push_back(SpineElem{Mod::Linear, m_var(match.consumedLinear[li++])});
        break;
      }
      case RuleItem::Kind::PersistentPremise: {
        if (pi >= match.persistentSolutions.size()) {
          throw EngineError("malformed match: missing premise proof");
        }
        sp.elems.push_back(SpineElem{Mod::Persistent, match.persistentSolutions[pi++].second});
        break;
      }
    }
  }
  if (li != match.consumedLinear.size() || pi != match.persistentSolutions.size()) {
    throw EngineError("malformed match: extra solutions");
  }

  State next = state;
  for (const Name& n : match.consumedLinear) {
    bool found = false;
    for (size_t i = 0; i < next.facts.entries.size(); ++i) {
      const auto* d = std::get_if<Decl>(&next.facts.entries[i]);
      if (d && d->name.id == n.id && d->mod == Mod::Linear) {
        next.facts.entries.erase(next.facts.entries.begin() + static_cast<long>(i));
        found = true;
        break;
      }
    }
    if (!found) throw EngineError("stale match: fact '" + n.text + "' is no longer available");
  }

  Context instantiated = meta_apply(rs.outs(), s);
  Renaming r;
  Context freshOuts;
  for (const auto& entry : instantiated.entries) {
    const auto* d = std::get_if<Decl>(&entry);
    if (!d) throw EngineError("rule '" + match.rule + "' has a non-ground codomain");
    TypePtr ty = alpha_fresh(r.empty() ? d->type : rename(d->type, r));
    Name nn = fresh_name(d->name.text + "#" + std::to_string(next.freshCounter++));
    r[d->name.id] = nn;
    freshOuts.push(Decl{d->mod, nn, ty});
  }
  for (const auto& entry : freshOuts.entries) next.facts.entries.push_back(entry);

  return {std::move(next), LetStep{freshOuts, match.rule, std::move(sp)}};
}

RunResult run(const State& state, const Signature& sig, const Scheduler& sched,
              size_t maxSteps) {
  return run(state, sig, sched, maxSteps, MatchOptions{});
}

RunResult run(const State& state, const Signature& sig, const Scheduler& sched, size_t maxSteps,
              const MatchOptions& optsIn) {
  RunResult rr;
  rr.state = state;
  std::mt19937_64 rng(sched.seed);
  MatchOptions opts = optsIn;
  if (!opts.rng) opts.rng = &rng;

  for (;;) {
    if (rr.trace.size() >= maxSteps) {
      rr.reason = StopReason::Budget;
      break;
    }
    std::vector<Match> ms = enumerate_matches(rr.state, sig, opts);
    if (ms.empty()) {
      rr.reason = StopReason::Maximal;
      break;
    }
    size_t pick = sched.policy == Scheduler::Policy::FirstMatch ? 0 : bounded(rng, ms.size());
    auto [nextState, step] = apply_step(rr.state, ms[pick], sig);
    rr.state = std::move(nextState);
    rr.trace.steps.emplace_back(std::move(step));
  }
  return rr;
}

}  // namespace clf
