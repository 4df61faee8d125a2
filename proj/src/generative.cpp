#include "clf/generative.hpp"

#include <algorithm>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "clf/checker.hpp"
#include "clf/subst.hpp"
#include "clf/unify.hpp"

namespace clf {

namespace {

const std::string* atom_family(const TypePtr& t) {
  const auto* a = std::get_if<TAtom>(&t->node);
  return a ? &a->head : nullptr;
}

// The name of a bare variable occurrence, if `t` is one.
const Name* bare_var(const TermPtr& t) {
  const auto* a = std::get_if<Atom>(&t->node);
  if (!a || !a->spine.empty()) return nullptr;
  return std::get_if<Name>(&a->head);
}

// The unique linear fact of a seed context. Throws unless there is exactly one
// and its family is a nonterminal: a seed rewrites one open symbol, and any
// destination its type mentions must be declared persistently alongside it.
const Decl* seed_fact(const Context& seed, const GrammarInfo& info) {
  const Decl* fact = nullptr;
  for (const auto& entry : seed.entries) {
    const auto* d = std::get_if<Decl>(&entry);
    if (!d) throw GenerativeError("seed context may not contain context variables");
    if (d->mod != Mod::Linear) continue;
    if (fact) throw GenerativeError("seed declares more than one linear fact");
    const std::string* fam = atom_family(d->type);
    if (!fam || !info.is_nonterminal(*fam)) {
      throw GenerativeError("seed fact '" + d->name.text + "' is not a nonterminal");
    }
    fact = d;
  }
  if (!fact) throw GenerativeError("seed declares no linear nonterminal fact");
  return fact;
}

}  // namespace

GrammarInfo classify_symbols(const Signature& grammar) {
  std::set<std::string> consumed;
  std::set<std::string> produced;
  std::set<std::string> producedPersistent;

  for (const auto& se : grammar.entries()) {
    if (se.is_kind()) continue;
    auto rv = rule_view(se.type());
    if (!rv || !rv->monadic()) continue;

    size_t linearPremises = 0;
    for (const auto& it : rv->items) {
      if (it.kind != RuleItem::Kind::LinearPremise) continue;
      ++linearPremises;
      const std::string* fam = atom_family(it.type);
      if (!fam) {
        throw GenerativeError("rule '" + se.name +
                              "' consumes a non-atomic fact; not a generative production");
      }
      consumed.insert(*fam);
    }
    if (linearPremises > 1) {
      throw GenerativeError("rule '" + se.name + "' consumes " + std::to_string(linearPremises) +
                            " linear facts; a generative production rewrites at most one "
                            "nonterminal");
    }

    for (const auto& entry : rv->outs().entries) {
      const auto* d = std::get_if<Decl>(&entry);
      if (!d) {
        throw GenerativeError("rule '" + se.name + "' has a context variable in its output");
      }
      const std::string* fam = atom_family(d->type);
      if (!fam) {
        throw GenerativeError("rule '" + se.name +
                              "' produces a non-atomic fact; not a generative production");
      }
      produced.insert(*fam);
      if (d->mod == Mod::Persistent) producedPersistent.insert(*fam);
    }
  }

  for (const auto& fam : producedPersistent) {
    if (consumed.count(fam)) {
      throw GenerativeError("family '" + fam +
                            "' is produced persistently and consumed linearly; outside the "
                            "generative fragment");
    }
  }

  GrammarInfo info;
  info.nonterminals = std::move(consumed);
  for (const auto& fam : produced) {
    if (!info.nonterminals.count(fam)) info.terminals.insert(fam);
  }
  return info;
}

GenResult generate_state(const Signature& grammar, const Context& seed, const Scheduler& sched,
                         size_t maxSteps) {
  GrammarInfo info = classify_symbols(grammar);
  seed_fact(seed, info);

  MatchOptions opts;
  // Premise-free rules (gen/dest-style axioms) match every state, so a run
  // that may fire them never becomes maximal; restrict firing to productions
  // that rewrite a nonterminal.
  opts.onlyConsuming = true;
  RunResult rr = run(make_state(seed), grammar, sched, maxSteps, opts);

  GenResult res;
  res.state = std::move(rr.state);
  res.trace = std::move(rr.trace);
  if (rr.reason == StopReason::Budget) {
    res.status = GenStatus::Budget;
    return res;
  }
  res.status = GenStatus::Complete;
  for (const auto& entry : res.state.facts.entries) {
    const auto* d = std::get_if<Decl>(&entry);
    if (!d || d->mod != Mod::Linear) continue;
    const std::string* fam = atom_family(d->type);
    if (fam && info.is_nonterminal(*fam)) {
      res.status = GenStatus::Stuck;
      break;
    }
  }
  return res;
}

namespace {

struct FactSlot {
  Name name;
  TypePtr type;
  std::string family;
  bool used = false;
};

struct Production {
  const SigEntry* rule;
  std::string premiseFamily;
};

// Goal-directed reconstruction of a generation derivation. A demand (the type
// of a nonterminal fact to derive) is resolved either by an unused fact of the
// state carrying that type (the symbol was left unexpanded) or by a production
// whose linear premise unifies with it. A production application matches its
// terminal outputs against unused facts before recursing into nonterminal
// children, so destination arguments are bound early and child demands stay
// discriminating; persistent premises are proved afterwards against the seed's
// persistent facts, which are in scope at every step of the replayed trace.
struct Search {
  Search(const Signature& s, const GrammarInfo& i) : sig(s), info(i) {}

  const Signature& sig;
  const GrammarInfo& info;
  State premiseScope;          // the seed's persistent facts
  std::vector<FactSlot> lin;   // the state's linear facts
  std::vector<FactSlot> per;   // the state's persistent facts beyond the seed
  std::vector<Production> prods;
  MetaSet metas;
  MetaSubst subst;
  int64_t budget = 0;
  bool ranOut = false;

  // Runs at every complete root derivation; a false verdict resumes the
  // search with the next alternative.
  using Gate = std::function<bool(Trace&)>;

  struct Snap {
    MetaSubst subst;
    std::vector<char> linUsed, perUsed;
  };
  Snap save() const {
    Snap s;
    s.subst = subst;
    s.linUsed.reserve(lin.size());
    for (const auto& f : lin) s.linUsed.push_back(f.used ? 1 : 0);
    s.perUsed.reserve(per.size());
    for (const auto& f : per) s.perUsed.push_back(f.used ? 1 : 0);
    return s;
  }
  void restore(const Snap& s) {
    subst = s.subst;
    for (size_t i = 0; i < lin.size(); ++i) lin[i].used = s.linUsed[i] != 0;
    for (size_t i = 0; i < per.size(); ++i) per[i].used = s.perUsed[i] != 0;
  }

  struct Attempt {
    RuleView rv;
    std::string ruleName;
    Name consumed;
    std::vector<const RuleItem*> args;
    std::vector<const RuleItem*> premises;
    std::vector<const Decl*> terminalOuts;
    std::vector<const Decl*> childOuts;
    std::map<uint32_t, Name> outName;  // out binder id -> declared name
    std::vector<TermPtr> proofs;       // one per persistent premise, in order
    std::vector<Trace> childTraces;
  };

  bool expand(const TypePtr& demand, const Name* fixedConsumed, Name& nameOut, Trace& out,
              const Gate* gate) {
    if (budget == 0) {
      ranOut = true;
      return false;
    }
    if (budget > 0) --budget;

    const std::string* fam = atom_family(demand);
    if (!fam) return false;

    // The symbol may be left unexpanded when the state still carries it.
    for (auto& slot : lin) {
      if (slot.used || slot.family != *fam) continue;
      Snap snap = save();
      if (unify_type(demand, slot.type, metas, subst)) {
        slot.used = true;
        Trace none;
        if (!gate || (*gate)(none)) {
          nameOut = slot.name;
          out = std::move(none);
          return true;
        }
      }
      restore(snap);
    }

    for (const auto& p : prods) {
      if (p.premiseFamily != *fam) continue;
      Snap snap = save();
      Name consumed = fixedConsumed ? *fixedConsumed : fresh_name(*fam);
      Trace steps;
      if (apply(*p.rule, demand, consumed, steps) && (!gate || (*gate)(steps))) {
        nameOut = consumed;
        out = std::move(steps);
        return true;
      }
      restore(snap);
    }
    return false;
  }

  bool apply(const SigEntry& rule, const TypePtr& demand, const Name& consumed, Trace& out) {
    auto rv = rule_view(rule.type());
    if (!rv) return false;
    Attempt a;
    a.rv = std::move(*rv);
    a.ruleName = rule.name;
    a.consumed = consumed;

    const RuleItem* premise = nullptr;
    for (const auto& it : a.rv.items) {
      switch (it.kind) {
        case RuleItem::Kind::Arg:
          metas.declare(it.binder, it.type);
          a.args.push_back(&it);
          break;
        case RuleItem::Kind::LinearPremise:
          premise = &it;
          break;
        case RuleItem::Kind::PersistentPremise:
          a.premises.push_back(&it);
          break;
      }
    }
    if (!premise || !unify_type(premise->type, demand, metas, subst)) return false;

    for (const auto& entry : a.rv.outs().entries) {
      const auto* d = std::get_if<Decl>(&entry);
      if (!d) return false;
      const std::string* fam = atom_family(d->type);
      if (!fam) return false;
      // Each output binder stands for whichever state fact realizes it; once
      // matched or claimed it is bound to that fact's name, so occurrences in
      // later output types and child demands resolve through the
      // substitution.
      metas.declare(d->name, d->type);
      if (d->mod == Mod::Persistent) continue;
      if (info.is_nonterminal(*fam)) {
        a.childOuts.push_back(d);
      } else {
        a.terminalOuts.push_back(d);
      }
    }
    return match_terminals(a, 0, out);
  }

  bool match_terminals(Attempt& a, size_t i, Trace& out) {
    if (i == a.terminalOuts.size()) return finish(a, out);
    const Decl* d = a.terminalOuts[i];
    const std::string& fam = *atom_family(d->type);
    for (auto& slot : lin) {
      if (slot.used || slot.family != fam) continue;
      Snap snap = save();
      if (unify_type(d->type, slot.type, metas, subst) &&
          unify_term(m_var(d->name), m_var(slot.name), metas, subst)) {
        slot.used = true;
        a.outName[d->name.id] = slot.name;
        if (match_terminals(a, i + 1, out)) return true;
      }
      restore(snap);
    }
    return false;
  }

  bool finish(Attempt& a, Trace& out) {
    a.childTraces.clear();
    a.proofs.clear();

    for (const Decl* d : a.childOuts) {
      TypePtr demand = meta_apply(d->type, subst);
      Name childName;
      Trace childSteps;
      if (!expand(demand, nullptr, childName, childSteps, nullptr)) return false;
      if (!unify_term(m_var(d->name), m_var(childName), metas, subst)) return false;
      a.outName[d->name.id] = childName;
      a.childTraces.push_back(std::move(childSteps));
    }

    for (const RuleItem* it : a.premises) {
      // Leave variables the proof does not determine open: a sibling subtree
      // parsed later may still constrain them, and the gate grounds whatever
      // remains free once the whole derivation is assembled.
      SolveResult r =
          solve_constrained(it->type, sig, premiseScope, metas, subst, -1, nullptr, false);
      if (r.status == SolveStatus::OutOfBudget) ranOut = true;
      if (r.status != SolveStatus::Solved) return false;
      a.proofs.push_back(r.proof);
    }

    // Resolve every persistent output to a distinct unused persistent fact:
    // solved outputs must map onto an available fact by name, unconstrained
    // ones claim the first fact of matching type.
    for (const auto& entry : a.rv.outs().entries) {
      const auto* d = std::get_if<Decl>(&entry);
      if (d->mod != Mod::Persistent) continue;
      TermPtr v = meta_apply(m_var(d->name), subst);
      const Name* n = bare_var(v);
      if (n && !metas.is_meta(n->id)) {
        FactSlot* slot = nullptr;
        for (auto& s : per) {
          if (!s.used && s.name.id == n->id) {
            slot = &s;
            break;
          }
        }
        if (!slot || !unify_type(d->type, slot->type, metas, subst)) return false;
        slot->used = true;
        a.outName[d->name.id] = slot->name;
      } else {
        const std::string& fam = *atom_family(d->type);
        bool found = false;
        for (auto& s : per) {
          if (s.used || s.family != fam) continue;
          Snap snap = save();
          if (unify_term(m_var(d->name), m_var(s.name), metas, subst) &&
              unify_type(d->type, s.type, metas, subst)) {
            s.used = true;
            a.outName[d->name.id] = s.name;
            found = true;
            break;
          }
          restore(snap);
        }
        if (!found) return false;
      }
    }

    // Quantified arguments neither the subtree nor a claim determined are
    // free choices; synthesize an inhabitant of the classifier.
    for (const RuleItem* it : a.args) {
      if (subst.find(it->binder.id)) continue;
      SolveResult r = solve_constrained(it->type, sig, premiseScope, metas, subst, -1, nullptr);
      if (r.status == SolveStatus::OutOfBudget) ranOut = true;
      if (r.status != SolveStatus::Solved) return false;
      subst.map[it->binder.id] = MetaSubst::Entry{r.proof, erase(it->type)};
    }

    return build(a, out);
  }

  // Assembles the step as a template: spine terms and output types may still
  // mention metavariables the wider derivation has not determined yet, and
  // those are only resolved (and checked ground) once the whole tree is
  // parsed. Deciding them here would be premature: a sibling subtree parsed
  // later can still constrain an argument this rule shares with it.
  bool build(Attempt& a, Trace& out) {
    Spine sp;
    size_t pi = 0;
    for (const auto& it : a.rv.items) {
      switch (it.kind) {
        case RuleItem::Kind::Arg:
          sp.elems.push_back(SpineElem{Mod::Persistent, m_var(it.binder)});
          break;
        case RuleItem::Kind::LinearPremise:
          sp.elems.push_back(SpineElem{Mod::Linear, m_var(a.consumed)});
          break;
        case RuleItem::Kind::PersistentPremise:
          sp.elems.push_back(SpineElem{Mod::Persistent, a.proofs[pi++]});
          break;
      }
    }

    Context outs;
    for (const auto& entry : a.rv.outs().entries) {
      const auto* d = std::get_if<Decl>(&entry);
      auto named = a.outName.find(d->name.id);
      if (named == a.outName.end()) return false;
      outs.push(Decl{d->mod, named->second, d->type});
    }

    out.steps.clear();
    out.steps.emplace_back(LetStep{std::move(outs), a.ruleName, std::move(sp)});
    for (auto& ct : a.childTraces) {
      for (auto& st : ct.steps) out.steps.push_back(std::move(st));
    }
    return true;
  }

  // --- Finalization, run once per complete root derivation -----------------

  void pending_metas(const TermPtr& t, std::set<uint32_t>& out) const {
    if (const auto* l = std::get_if<Lam>(&t->node)) {
      pending_metas(l->body, out);
    } else if (const auto* at = std::get_if<Atom>(&t->node)) {
      if (const auto* n = std::get_if<Name>(&at->head)) {
        if (metas.is_meta(n->id)) out.insert(n->id);
      }
      for (const auto& el : at->spine.elems) pending_metas(el.term, out);
    } else if (const auto* br = std::get_if<Braces>(&t->node)) {
      pending_metas(br->trace, out);
    }
  }

  void pending_metas(const TypePtr& t, std::set<uint32_t>& out) const {
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      pending_metas(pi->arg, out);
      pending_metas(pi->body, out);
    } else if (const auto* at = std::get_if<TAtom>(&t->node)) {
      for (const auto& el : at->spine.elems) pending_metas(el.term, out);
    } else if (const auto* mo = std::get_if<TMonad>(&t->node)) {
      for (const auto& entry : mo->ctx.entries) {
        if (const auto* d = std::get_if<Decl>(&entry)) pending_metas(d->type, out);
      }
    }
  }

  void pending_metas(const Trace& tr, std::set<uint32_t>& out) const {
    for (const auto& st : tr.steps) {
      const auto* ls = std::get_if<LetStep>(&st);
      if (!ls) continue;
      for (const auto& el : ls->spine.elems) pending_metas(meta_apply(el.term, subst), out);
      for (const auto& entry : ls->outs.entries) {
        if (const auto* d = std::get_if<Decl>(&entry)) {
          pending_metas(meta_apply(d->type, subst), out);
        }
      }
    }
  }

  // Solves every metavariable the derivation left open to an inhabitant of
  // its classifier. Such leftovers are genuinely unconstrained (no fact or
  // premise mentions them once the parse is complete), so any well-typed
  // instantiation yields a correct trace; the replay check confirms it.
  bool ground_residuals(const Trace& steps) {
    for (int round = 0; round < 100; ++round) {
      std::set<uint32_t> open;
      pending_metas(steps, open);
      if (open.empty()) return true;
      uint32_t id = *open.begin();
      auto cls = metas.classifiers.find(id);
      if (cls == metas.classifiers.end()) return false;
      TypePtr goal = meta_apply(cls->second, subst);
      SolveResult r = solve_constrained(goal, sig, premiseScope, metas, subst, -1, nullptr);
      if (r.status == SolveStatus::OutOfBudget) ranOut = true;
      if (r.status != SolveStatus::Solved) return false;
      subst.map[id] = MetaSubst::Entry{r.proof, metas.shapes.at(id)};
    }
    return false;
  }

  bool materialize(const Trace& steps, Trace& out) const {
    out.steps.clear();
    for (const auto& st : steps.steps) {
      const auto* ls = std::get_if<LetStep>(&st);
      if (!ls) return false;
      Spine sp;
      for (const auto& el : ls->spine.elems) {
        TermPtr v = meta_apply(el.term, subst);
        if (!meta_ground(v, metas, subst)) return false;
        sp.elems.push_back(SpineElem{el.mod, alpha_fresh(v)});
      }
      Context outs;
      for (const auto& entry : ls->outs.entries) {
        const auto* d = std::get_if<Decl>(&entry);
        TypePtr ty = meta_apply(d->type, subst);
        if (!meta_ground(ty, metas, subst)) return false;
        outs.push(Decl{d->mod, d->name, alpha_fresh(ty)});
      }
      out.steps.emplace_back(LetStep{std::move(outs), ls->rule, std::move(sp)});
    }
    return true;
  }
};

}  // namespace

ValidateResult validate_state(const State& state, const Signature& grammar, const Context& seed,
                              int64_t searchBudget) {
  GrammarInfo info = classify_symbols(grammar);
  const Decl* root = seed_fact(seed, info);

  Context seedPersistent;
  std::map<uint32_t, const Decl*> seedById;
  for (const auto& entry : seed.entries) {
    const auto* d = std::get_if<Decl>(&entry);
    if (d->mod != Mod::Persistent) continue;
    seedPersistent.push(*d);
    seedById[d->name.id] = d;
  }

  Search search(grammar, info);
  search.premiseScope = State{seedPersistent, 0};
  search.budget = searchBudget >= 0
                      ? searchBudget
                      : static_cast<int64_t>(1000 + 200 * state.facts.entries.size());

  size_t seedSeen = 0;
  for (const auto& entry : state.facts.entries) {
    const auto* d = std::get_if<Decl>(&entry);
    if (!d) throw GenerativeError("state may not contain context variables");
    const std::string* fam = atom_family(d->type);
    if (!fam) {
      return {ValidateStatus::Invalid, {},
              "fact '" + d->name.text + "' does not have an atomic type"};
    }
    if (d->mod == Mod::Linear) {
      search.lin.push_back(FactSlot{d->name, d->type, *fam, false});
    } else if (auto sp = seedById.find(d->name.id); sp != seedById.end()) {
      if (!alpha_eq(d->type, sp->second->type)) {
        return {ValidateStatus::Invalid, {},
                "persistent seed fact '" + d->name.text + "' changed type"};
      }
      ++seedSeen;
    } else {
      search.per.push_back(FactSlot{d->name, d->type, *fam, false});
    }
  }
  if (seedSeen != seedById.size()) {
    return {ValidateStatus::Invalid, {}, "a persistent seed fact is missing from the state"};
  }

  // Premise-free rules whose outputs are all persistent can absorb leftover
  // support facts; rules rewriting one nonterminal are the productions.
  std::vector<const SigEntry*> axioms;
  for (const auto& se : grammar.entries()) {
    if (se.is_kind()) continue;
    auto rv = rule_view(se.type());
    if (!rv || !rv->monadic()) continue;
    const RuleItem* premise = nullptr;
    for (const auto& it : rv->items) {
      if (it.kind == RuleItem::Kind::LinearPremise) premise = &it;
    }
    if (premise) {
      search.prods.push_back(Production{&se, *atom_family(premise->type)});
    } else if (rv->items.empty() && !rv->outs().entries.empty()) {
      bool allPersistent = true;
      for (const auto& entry : rv->outs().entries) {
        const auto* d = std::get_if<Decl>(&entry);
        if (!d || d->mod != Mod::Persistent) allPersistent = false;
      }
      if (allPersistent) axioms.push_back(&se);
    }
  }

  std::optional<ValidateResult> accepted;
  Search::Gate gate = [&](Trace& steps) -> bool {
    for (const auto& f : search.lin) {
      if (!f.used) return false;
    }
    Trace full;
    if (!search.ground_residuals(steps) || !search.materialize(steps, full)) return false;

    // Absorb persistent facts no production accounted for.
    std::vector<char> claimed(search.per.size());
    for (size_t i = 0; i < search.per.size(); ++i) claimed[i] = search.per[i].used ? 1 : 0;
    std::vector<Step> extra;
    for (;;) {
      bool left = false;
      for (char c : claimed) {
        if (!c) left = true;
      }
      if (!left) break;
      bool progressed = false;
      for (const SigEntry* ax : axioms) {
        auto rv = rule_view(ax->type());
        Renaming r;
        std::vector<size_t> picks;
        Context outs;
        bool fits = true;
        for (const auto& entry : rv->outs().entries) {
          const auto* d = std::get_if<Decl>(&entry);
          TypePtr ty = r.empty() ? d->type : rename(d->type, r);
          bool hit = false;
          for (size_t i = 0; i < search.per.size(); ++i) {
            if (claimed[i] || std::find(picks.begin(), picks.end(), i) != picks.end()) continue;
            if (!alpha_eq(ty, search.per[i].type)) continue;
            picks.push_back(i);
            r[d->name.id] = search.per[i].name;
            outs.push(Decl{d->mod, search.per[i].name, alpha_fresh(ty)});
            hit = true;
            break;
          }
          if (!hit) {
            fits = false;
            break;
          }
        }
        if (!fits || picks.empty()) continue;
        for (size_t i : picks) claimed[i] = 1;
        extra.emplace_back(LetStep{std::move(outs), ax->name, Spine{}});
        progressed = true;
        break;
      }
      if (!progressed) return false;
    }

    for (auto& st : extra) full.steps.push_back(std::move(st));

    TraceResult tr = check_trace(seed, full, grammar);
    if (!tr.report.ok) return false;
    if (!context_equiv(tr.result, state.facts)) return false;
    accepted = ValidateResult{ValidateStatus::Valid, std::move(full), ""};
    return true;
  };

  Name rootName;
  Trace rootSteps;
  if (search.expand(root->type, &root->name, rootName, rootSteps, &gate) && accepted) {
    return std::move(*accepted);
  }

  ValidateResult res;
  if (search.ranOut) {
    res.status = ValidateStatus::OutOfBudget;
    res.reason = "search budget exceeded";
  } else {
    res.status = ValidateStatus::Invalid;
    res.reason = "no grammar derivation from the seed reproduces the state";
  }
  return res;
}

}  // namespace clf
