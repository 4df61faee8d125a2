#include "clf/subst.hpp"

#include <sstream>

namespace clf {

ShapePtr Shape::base() {
  static ShapePtr b = std::make_shared<Shape>(Shape{K::Base, nullptr, nullptr});
  return b;
}

ShapePtr Shape::monad() {
  static ShapePtr m = std::make_shared<Shape>(Shape{K::Monad, nullptr, nullptr});
  return m;
}

ShapePtr Shape::arrow(ShapePtr l, ShapePtr r) {
  return std::make_shared<Shape>(Shape{K::Arrow, std::move(l), std::move(r)});
}

ShapePtr erase(const TypePtr& t) {
  if (auto* pi = std::get_if<TPi>(&t->node)) {
    return Shape::arrow(erase(pi->arg), erase(pi->body));
  }
  if (std::holds_alternative<TMonad>(t->node)) return Shape::monad();
  return Shape::base();
}

bool shape_eq(const ShapePtr& a, const ShapePtr& b) {
  if (a->k != b->k) return false;
  if (a->k != Shape::K::Arrow) return true;
  return shape_eq(a->left, b->left) && shape_eq(a->right, b->right);
}

std::string shape_str(const ShapePtr& s) {
  switch (s->k) {
    case Shape::K::Base: return "*";
    case Shape::K::Monad: return "{*}";
    case Shape::K::Arrow: {
      std::ostringstream os;
      os << "(" << shape_str(s->left) << " -> " << shape_str(s->right) << ")";
      return os.str();
    }
  }
  return "?";
}

namespace {

struct Subst {
  uint32_t x;
  const TermPtr& value;
  const ShapePtr& sh;

  TermPtr term(const TermPtr& t) {
    if (auto* l = std::get_if<Lam>(&t->node)) {
      return m_lam(l->mod, l->binder, term(l->body));
    }
    if (auto* a = std::get_if<Atom>(&t->node)) {
      Spine sp = spine(a->spine);
      if (auto* nm = std::get_if<Name>(&a->head)) {
        if (nm->id == x) return apply_spine(value, sp, sh);
      }
      return m_atom(a->head, std::move(sp));
    }
    const auto& b = std::get<Braces>(t->node);
    return m_braces(trace(b.trace));
  }

  Spine spine(const Spine& s) {
    Spine out;
    out.elems.reserve(s.elems.size());
    for (const auto& e : s.elems) out.elems.push_back({e.mod, term(e.term)});
    return out;
  }

  TypePtr type(const TypePtr& t) {
    if (auto* pi = std::get_if<TPi>(&t->node)) {
      return t_pi(pi->mod, pi->binder, type(pi->arg), type(pi->body));
    }
    if (auto* at = std::get_if<TAtom>(&t->node)) {
      return t_atom(at->head, spine(at->spine));
    }
    return t_monad(context(std::get<TMonad>(t->node).ctx));
  }

  KindPtr kind(const KindPtr& k) {
    if (std::holds_alternative<KType>(k->node)) return k;
    const auto& pi = std::get<KPi>(k->node);
    return k_pi(pi.binder, type(pi.arg), kind(pi.body));
  }

  Context context(const Context& c) {
    Context out;
    out.entries.reserve(c.entries.size());
    for (const auto& e : c.entries) {
      if (auto* d = std::get_if<Decl>(&e)) {
        out.push(Decl{d->mod, d->name, type(d->type)});
      } else {
        out.entries.push_back(e);
      }
    }
    return out;
  }

  Trace trace(const Trace& tr) {
    Trace out;
    out.steps.reserve(tr.steps.size());
    for (const auto& st : tr.steps) {
      if (auto* ls = std::get_if<LetStep>(&st)) {
        out.steps.push_back(LetStep{context(ls->outs), ls->rule, spine(ls->spine)});
      } else {
        const auto& vs = std::get<VarStep>(st);
        if (vs.var.id == x) {
          throw SubstError("term substitution hit a trace variable in step position");
        }
        MSpinePtr args = vs.args;
        if (args) args = std::make_shared<MSpine>(mspine(*args));
        out.steps.push_back(VarStep{vs.var, std::move(args)});
      }
    }
    return out;
  }

  MSpine mspine(const MSpine& s) {
    MSpine out;
    out.elems.reserve(s.elems.size());
    for (const auto& a : s.elems) {
      if (auto* mt = std::get_if<MTermPtr>(&a)) {
        out.elems.push_back(mterm(*mt));
      } else if (auto* cx = std::get_if<Context>(&a)) {
        out.elems.push_back(context(*cx));
      } else {
        out.elems.push_back(a);
      }
    }
    return out;
  }

  MTermPtr mterm(const MTermPtr& t) {
    if (auto* l = std::get_if<MLamTm>(&t->node)) {
      return mm_lam(l->mod, l->binder, mterm(l->body));
    }
    if (auto* a = std::get_if<MAtomTm>(&t->node)) {
      MSpine sp = mspine(a->spine);
      if (auto* nm = std::get_if<Name>(&a->head)) {
        if (nm->id == x) {
          // The variable stands for an object-level term: rebuild the redex
          // at the object level, reduce, and re-embed the result.
          Spine objArgs;
          objArgs.elems.reserve(sp.elems.size());
          for (const auto& arg : sp.elems) {
            const auto* mt = std::get_if<MTermPtr>(&arg);
            if (!mt) throw SubstError("term variable applied to a non-term argument");
            TermPtr obj = extract_term(*mt);
            if (!obj) throw SubstError("term variable applied to a meta-only argument");
            objArgs.elems.push_back({Mod::Persistent, std::move(obj)});
          }
          return embed_term(apply_spine(value, objArgs, sh));
        }
      }
      return mm_atom(a->head, std::move(sp));
    }
    return mm_trace(trace(std::get<MTraceTm>(t->node).trace));
  }

  MTypePtr mtype(const MTypePtr& t) {
    if (auto* pi = std::get_if<MTPi>(&t->node)) {
      MBinder b = pi->binder;
      if (b.mtype) b.mtype = mtype(b.mtype);
      if (b.ctype) b.ctype = type(b.ctype);
      return mt_pi(std::move(b), mtype(pi->body));
    }
    if (auto* at = std::get_if<MTAtom>(&t->node)) {
      return mt_atom(at->head, mspine(at->spine));
    }
    const auto& tt = std::get<MTTrace>(t->node);
    return mt_trace(context(tt.pre), tt.sig, tt.exactly_one, context(tt.post));
  }

  MKindPtr mkind(const MKindPtr& k) {
    if (std::holds_alternative<MKType>(k->node)) return k;
    const auto& pi = std::get<MKPi>(k->node);
    MBinder b = pi.binder;
    if (b.mtype) b.mtype = mtype(b.mtype);
    if (b.ctype) b.ctype = type(b.ctype);
    return mk_pi(std::move(b), mkind(pi.body));
  }
};

}  // namespace

TermPtr hsubst(const TermPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.term(target);
}
TypePtr hsubst(const TypePtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.type(target);
}
KindPtr hsubst(const KindPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.kind(target);
}
Spine hsubst(const Spine& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.spine(target);
}
Context hsubst(const Context& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.context(target);
}
Trace hsubst(const Trace& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.trace(target);
}
MTypePtr hsubst(const MTypePtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.mtype(target);
}
MKindPtr hsubst(const MKindPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.mkind(target);
}
MTermPtr hsubst(const MTermPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.mterm(target);
}
MSpine hsubst(const MSpine& target, uint32_t x, const TermPtr& value, const ShapePtr& sh) {
  return Subst{x, value, sh}.mspine(target);
}

TermPtr apply_spine(TermPtr fn, const Spine& args, ShapePtr sh) {
  size_t i = 0;
  while (i < args.elems.size()) {
    if (auto* l = std::get_if<Lam>(&fn->node)) {
      if (sh->k != Shape::K::Arrow) {
        throw SubstError("application of a function at non-arrow shape " + shape_str(sh));
      }
      fn = hsubst(l->body, l->binder.id, args.elems[i].term, sh->left);
      sh = sh->right;
      ++i;
      continue;
    }
    if (auto* a = std::get_if<Atom>(&fn->node)) {
      // A neutral head absorbs the rest of the spine unreduced.
      Spine sp = a->spine;
      for (; i < args.elems.size(); ++i) {
        if (sh->k != Shape::K::Arrow) {
          throw SubstError("spine overflow at shape " + shape_str(sh));
        }
        sp.elems.push_back(args.elems[i]);
        sh = sh->right;
      }
      return m_atom(a->head, std::move(sp));
    }
    throw SubstError("a monadic value cannot be applied to arguments");
  }
  return fn;
}

namespace {

struct AlphaFresh {
  Renaming map;

  Name rn(const Name& n) const {
    auto it = map.find(n.id);
    return it == map.end() ? n : it->second;
  }
  TermPtr term(const TermPtr& t) {
    if (const auto* l = std::get_if<Lam>(&t->node)) {
      Name nb = fresh_name(l->binder.text);
      map[l->binder.id] = nb;
      return m_lam(l->mod, nb, term(l->body));
    }
    if (const auto* a = std::get_if<Atom>(&t->node)) {
      Spine sp;
      sp.elems.reserve(a->spine.elems.size());
      for (const auto& el : a->spine.elems) sp.elems.push_back(SpineElem{el.mod, term(el.term)});
      Head h = a->head;
      if (head_is_var(h)) h = Head{rn(std::get<Name>(h))};
      return m_atom(std::move(h), std::move(sp));
    }
    return t;  // brace terms never occur inside classifiers
  }
  TypePtr type(const TypePtr& t) {
    if (const auto* pi = std::get_if<TPi>(&t->node)) {
      TypePtr arg = type(pi->arg);
      Name nb = fresh_name(pi->binder.text);
      map[pi->binder.id] = nb;
      return t_pi(pi->mod, nb, std::move(arg), type(pi->body));
    }
    if (const auto* a = std::get_if<TAtom>(&t->node)) {
      Spine sp;
      sp.elems.reserve(a->spine.elems.size());
      for (const auto& el : a->spine.elems) sp.elems.push_back(SpineElem{el.mod, term(el.term)});
      return t_atom(a->head, std::move(sp));
    }
    const auto& m = std::get<TMonad>(t->node);
    Context out;
    for (const auto& e : m.ctx.entries) {
      const auto& d = std::get<Decl>(e);
      TypePtr ty = type(d.type);
      Name nb = fresh_name(d.name.text);
      map[d.name.id] = nb;
      out.push(Decl{d.mod, nb, std::move(ty)});
    }
    return t_monad(std::move(out));
  }
};

}  // namespace

TermPtr alpha_fresh(const TermPtr& t) {
  AlphaFresh af;
  return af.term(t);
}

TypePtr alpha_fresh(const TypePtr& t) {
  AlphaFresh af;
  return af.type(t);
}

TermPtr eta_expand(Head h, Spine sp, const TypePtr& ty) {
  if (auto* pi = std::get_if<TPi>(&ty->node)) {
    Name z = fresh_name(pi->binder.text.empty() ? "z" : pi->binder.text);
    TermPtr zEta = eta_expand(Head{z}, Spine{}, pi->arg);
    Spine sp2 = sp;
    sp2.elems.push_back({pi->mod, std::move(zEta)});
    Renaming ren;
    ren.emplace(pi->binder.id, z);
    TermPtr body = eta_expand(std::move(h), std::move(sp2), rename(pi->body, ren));
    return m_lam(pi->mod, z, std::move(body));
  }
  return m_atom(std::move(h), std::move(sp));
}

MTermPtr embed_term(const TermPtr& t) {
  if (auto* l = std::get_if<Lam>(&t->node)) {
    return mm_lam(l->mod, l->binder, embed_term(l->body));
  }
  if (auto* a = std::get_if<Atom>(&t->node)) {
    MSpine sp;
    sp.elems.reserve(a->spine.elems.size());
    for (const auto& e : a->spine.elems) {
      if (e.mod == Mod::Linear) {
        throw SubstError("linear argument has no meta-level counterpart");
      }
      sp.elems.push_back(embed_term(e.term));
    }
    return mm_atom(a->head, std::move(sp));
  }
  return mm_trace(std::get<Braces>(t->node).trace);
}

TermPtr extract_term(const MTermPtr& t) {
  if (auto* l = std::get_if<MLamTm>(&t->node)) {
    TermPtr body = extract_term(l->body);
    if (!body) return nullptr;
    return m_lam(l->mod, l->binder, std::move(body));
  }
  if (auto* a = std::get_if<MAtomTm>(&t->node)) {
    Spine sp;
    sp.elems.reserve(a->spine.elems.size());
    for (const auto& arg : a->spine.elems) {
      const auto* mt = std::get_if<MTermPtr>(&arg);
      if (!mt) return nullptr;
      TermPtr obj = extract_term(*mt);
      if (!obj) return nullptr;
      sp.elems.push_back({Mod::Persistent, std::move(obj)});
    }
    return m_atom(a->head, std::move(sp));
  }
  return m_braces(std::get<MTraceTm>(t->node).trace);
}

}  // namespace clf
