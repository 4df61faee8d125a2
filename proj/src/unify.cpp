#include "clf/unify.hpp"

#include <algorithm>
#include <vector>

namespace clf {

namespace {

constexpr int kResolveLimit = 10000;

// -----------------------------------------------------------------------
// Full application of a substitution, with a step limit so cyclic solution
// chains surface as errors instead of hanging.
// -----------------------------------------------------------------------

struct Applier {
  const MetaSubst& subst;
  int steps = 0;

  void tick() {
    if (++steps > kResolveLimit) {
      throw UnifyError("metavariable solution chain does not terminate");
    }
  }

  TermPtr term(const TermPtr& t) {
    tick();
    if (const auto* l = std::get_if<Lam>(&t->node)) {
      return m_lam(l->mod, l->binder, term(l->body));
    }
    if (const auto* a = std::get_if<Atom>(&t->node)) {
      Spine sp = spine(a->spine);
      if (head_is_var(a->head)) {
        const Name& x = std::get<Name>(a->head);
        if (const auto* e = subst.find(x.id)) {
          // hereditary: the solution replaces the head, the spine re-applies
          return term(apply_spine(e->value, sp, e->shape));
        }
      }
      return m_atom(a->head, std::move(sp));
    }
    const auto& br = std::get<Braces>(t->node);
    Trace tr;
    for (const auto& st : br.trace.steps) {
      if (const auto* ls = std::get_if<LetStep>(&st)) {
        LetStep out;
        out.rule = ls->rule;
        out.outs = ctx(ls->outs);
        out.spine = spine(ls->spine);
        tr.steps.emplace_back(std::move(out));
      } else {
        tr.steps.push_back(st);  // meta-layer steps carry no object solutions
      }
    }
    return m_braces(std::move(tr));
  }

  TypePtr type(const TypePtr& t) {
    tick();
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      return t_pi(pi->mod, pi->binder, type(pi->arg), type(pi->body));
    }
    if (const auto* a = std::get_if<TAtom>(&t->node)) {
      return t_atom(a->head, spine(a->spine));
    }
    return t_monad(ctx(std::get<TMonad>(t->node).ctx));
  }

  Spine spine(const Spine& s) {
    Spine out;
    out.elems.reserve(s.elems.size());
    for (const auto& el : s.elems) out.elems.push_back(SpineElem{el.mod, term(el.term)});
    return out;
  }

  Context ctx(const Context& c) {
    Context out;
    for (const auto& e : c.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) {
        out.push(Decl{d->mod, d->name, type(d->type)});
      } else {
        out.push(std::get<CtxVar>(e));
      }
    }
    return out;
  }
};

// -----------------------------------------------------------------------
// Unifier
// -----------------------------------------------------------------------

struct Unifier {
  const MetaSet& metas;
  MetaSubst& subst;
  // lambda binders paired positionally while descending both sides
  std::vector<std::pair<uint32_t, uint32_t>> bound;

  bool bound_left(uint32_t id) const {
    for (const auto& p : bound)
      if (p.first == id) return true;
    return false;
  }
  bool bound_right(uint32_t id) const {
    for (const auto& p : bound)
      if (p.second == id) return true;
    return false;
  }
  bool paired(uint32_t l, uint32_t r) const {
    for (const auto& p : bound)
      if (p.first == l) return p.second == r;
    return false;
  }

  // Chase solved metavariable heads so flexibility is judged on the current
  // substitution.
  TermPtr resolve(TermPtr t) const {
    for (;;) {
      const auto* a = std::get_if<Atom>(&t->node);
      if (!a || !head_is_var(a->head)) return t;
      const auto* e = subst.find(std::get<Name>(a->head).id);
      if (!e) return t;
      t = apply_spine(e->value, a->spine, e->shape);
    }
  }

  // A flexible occurrence: unsolved metavariable head that is not shadowed by
  // a lambda binder of the comparison.
  const Atom* flex(const TermPtr& t, bool leftSide) const {
    const auto* a = std::get_if<Atom>(&t->node);
    if (!a || !head_is_var(a->head)) return nullptr;
    uint32_t id = std::get<Name>(a->head).id;
    if (!metas.is_meta(id)) return nullptr;
    if (leftSide ? bound_left(id) : bound_right(id)) return nullptr;
    return a;
  }

  bool term(TermPtr a, TermPtr b) {
    a = resolve(a);
    b = resolve(b);

    const Atom* fa = flex(a, true);
    const Atom* fb = flex(b, false);
    if (fa && fb && std::get<Name>(fa->head).id == std::get<Name>(fb->head).id) {
      return spine(fa->spine, fb->spine);
    }
    if (fa) return bind(*fa, b, /*metaOnLeft=*/true);
    if (fb) return bind(*fb, a, /*metaOnLeft=*/false);

    if (const auto* la = std::get_if<Lam>(&a->node)) {
      const auto* lb = std::get_if<Lam>(&b->node);
      if (!lb || la->mod != lb->mod) return false;
      bound.emplace_back(la->binder.id, lb->binder.id);
      bool ok = term(la->body, lb->body);
      bound.pop_back();
      return ok;
    }
    if (const auto* aa = std::get_if<Atom>(&a->node)) {
      const auto* ab = std::get_if<Atom>(&b->node);
      if (!ab) return false;
      if (head_is_var(aa->head) != head_is_var(ab->head)) return false;
      if (head_is_var(aa->head)) {
        uint32_t l = std::get<Name>(aa->head).id;
        uint32_t r = std::get<Name>(ab->head).id;
        bool lb2 = bound_left(l), rb2 = bound_right(r);
        if (lb2 || rb2) {
          if (!(lb2 && rb2) || !paired(l, r)) return false;
        } else if (l != r) {
          return false;
        }
      } else if (std::get<ConstRef>(aa->head).name != std::get<ConstRef>(ab->head).name) {
        return false;
      }
      return spine(aa->spine, ab->spine);
    }
    return false;  // brace terms are not unified
  }

  bool spine(const Spine& a, const Spine& b) {
    if (a.elems.size() != b.elems.size()) return false;
    for (size_t i = 0; i < a.elems.size(); ++i) {
      if (a.elems[i].mod != b.elems[i].mod) return false;
      if (!term(a.elems[i].term, b.elems[i].term)) return false;
    }
    return true;
  }

  bool type(TypePtr a, TypePtr b) {
    if (const auto* pa = std::get_if<TPi>(&a->node)) {
      const auto* pb = std::get_if<TPi>(&b->node);
      if (!pb || pa->mod != pb->mod) return false;
      if (!type(pa->arg, pb->arg)) return false;
      bound.emplace_back(pa->binder.id, pb->binder.id);
      bool ok = type(pa->body, pb->body);
      bound.pop_back();
      return ok;
    }
    if (const auto* aa = std::get_if<TAtom>(&a->node)) {
      const auto* ab = std::get_if<TAtom>(&b->node);
      if (!ab || aa->head != ab->head) return false;
      return spine(aa->spine, ab->spine);
    }
    return false;  // monadic types never need unification here
  }

  // Solve `meta · args ≐ rhs`. Bare metas bind directly; metas applied to
  // distinct variables bind to the abstraction over those variables.
  bool bind(const Atom& meta, const TermPtr& rhsRaw, bool metaOnLeft) {
    uint32_t id = std::get<Name>(meta.head).id;

    // pattern condition: arguments are distinct variables
    std::vector<Name> args;
    for (const auto& el : meta.spine.elems) {
      const auto* at = std::get_if<Atom>(&el.term->node);
      if (!at || !head_is_var(at->head) || !at->spine.elems.empty()) return false;
      const Name& n = std::get<Name>(at->head);
      for (const auto& seen : args)
        if (seen.id == n.id) return false;
      args.push_back(n);
    }

    TermPtr rhs = meta_apply(rhsRaw, subst);

    // translate rhs-side lambda binders into meta-side names where paired
    for (const auto& p : bound) {
      uint32_t from = metaOnLeft ? p.second : p.first;
      uint32_t to = metaOnLeft ? p.first : p.second;
      if (from != to) {
        rhs = rename(rhs, Renaming{{from, Name{to, ""}}});
      }
    }

    IdSet fv;
    free_vars(rhs, fv);
    if (fv.count(id) != 0) return false;  // occurs check
    for (const auto& p : bound) {
      uint32_t local = metaOnLeft ? p.first : p.second;
      if (fv.count(local) == 0) continue;
      bool isArg = false;
      for (const auto& a : args)
        if (a.id == local) isArg = true;
      if (!isArg) return false;  // a comparison-local variable would escape
    }

    // abstract the arguments; fresh binder names keep the solution closed
    TermPtr value = rhs;
    for (auto it = args.rbegin(); it != args.rend(); ++it) {
      Name binder = fresh_name(it->text.empty() ? "v" : it->text);
      value = m_lam(Mod::Persistent, binder, rename(value, Renaming{{it->id, binder}}));
    }
    subst.map[id] = MetaSubst::Entry{value, metas.shapes.at(id)};
    return true;
  }
};

struct GroundScan {
  const MetaSet& metas;
  const MetaSubst& subst;

  bool term(const TermPtr& t) const {
    IdSet fv;
    free_vars(meta_apply(t, subst), fv);
    for (uint32_t id : fv)
      if (metas.is_meta(id)) return false;
    return true;
  }
  bool type(const TypePtr& t) const {
    IdSet fv;
    free_vars(meta_apply(t, subst), fv);
    for (uint32_t id : fv)
      if (metas.is_meta(id)) return false;
    return true;
  }
};

}  // namespace

bool unify_term(const TermPtr& a, const TermPtr& b, const MetaSet& metas, MetaSubst& subst) {
  Unifier u{metas, subst, {}};
  return u.term(a, b);
}

bool unify_type(const TypePtr& a, const TypePtr& b, const MetaSet& metas, MetaSubst& subst) {
  Unifier u{metas, subst, {}};
  return u.type(a, b);
}

TermPtr meta_apply(const TermPtr& t, const MetaSubst& subst) {
  Applier ap{subst};
  return ap.term(t);
}

TypePtr meta_apply(const TypePtr& t, const MetaSubst& subst) {
  Applier ap{subst};
  return ap.type(t);
}

Spine meta_apply(const Spine& s, const MetaSubst& subst) {
  Applier ap{subst};
  return ap.spine(s);
}

Context meta_apply(const Context& c, const MetaSubst& subst) {
  Applier ap{subst};
  return ap.ctx(c);
}

bool meta_ground(const TermPtr& t, const MetaSet& metas, const MetaSubst& subst) {
  return GroundScan{metas, subst}.term(t);
}

bool meta_ground(const TypePtr& t, const MetaSet& metas, const MetaSubst& subst) {
  return GroundScan{metas, subst}.type(t);
}

}  // namespace clf
