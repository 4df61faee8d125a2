#include "clf/ast.hpp"

#include <atomic>
#include <stdexcept>

namespace clf {

namespace {
std::atomic<uint32_t> g_name_supply{1};
}  // namespace

Name fresh_name(std::string text) {
  return Name{g_name_supply.fetch_add(1), std::move(text)};
}

// ---------------------------------------------------------------------------
// Context helpers
// ---------------------------------------------------------------------------

const Decl* Context::find(uint32_t id) const {
  for (const auto& e : entries) {
    if (const Decl* d = std::get_if<Decl>(&e)) {
      if (d->name.id == id) return d;
    }
  }
  return nullptr;
}

bool Context::has_ctx_vars() const {
  for (const auto& e : entries) {
    if (std::holds_alternative<CtxVar>(e)) return true;
  }
  return false;
}

std::vector<uint32_t> Context::dom() const {
  std::vector<uint32_t> ids;
  for (const auto& e : entries) {
    if (const Decl* d = std::get_if<Decl>(&e)) ids.push_back(d->name.id);
  }
  return ids;
}

// ---------------------------------------------------------------------------
// Constructors
// ---------------------------------------------------------------------------

TypePtr t_pi(Mod mod, Name binder, TypePtr arg, TypePtr body) {
  return std::make_shared<Type>(Type{TPi{mod, std::move(binder), std::move(arg), std::move(body)}});
}
TypePtr t_atom(std::string head, Spine spine) {
  return std::make_shared<Type>(Type{TAtom{std::move(head), std::move(spine)}});
}
TypePtr t_monad(Context ctx) {
  return std::make_shared<Type>(Type{TMonad{std::move(ctx)}});
}
TermPtr m_lam(Mod mod, Name binder, TermPtr body) {
  return std::make_shared<Term>(Term{Lam{mod, std::move(binder), std::move(body)}});
}
TermPtr m_atom(Head head, Spine spine) {
  return std::make_shared<Term>(Term{Atom{std::move(head), std::move(spine)}});
}
TermPtr m_var(Name n) { return m_atom(Head{std::move(n)}); }
TermPtr m_const(std::string c, Spine spine) {
  return m_atom(Head{ConstRef{std::move(c)}}, std::move(spine));
}
TermPtr m_braces(Trace tr) { return std::make_shared<Term>(Term{Braces{std::move(tr)}}); }
KindPtr k_type() { return std::make_shared<Kind>(Kind{KType{}}); }
KindPtr k_pi(Name binder, TypePtr arg, KindPtr body) {
  return std::make_shared<Kind>(Kind{KPi{std::move(binder), std::move(arg), std::move(body)}});
}

MTypePtr mt_pi(MBinder b, MTypePtr body) {
  return std::make_shared<MType>(MType{MTPi{std::move(b), std::move(body)}});
}
MTypePtr mt_atom(std::string head, MSpine spine) {
  return std::make_shared<MType>(MType{MTAtom{std::move(head), std::move(spine)}});
}
MTypePtr mt_trace(Context pre, std::string sig, bool exactly_one, Context post) {
  return std::make_shared<MType>(MType{MTTrace{std::move(pre), std::move(sig), exactly_one, std::move(post)}});
}
MKindPtr mk_type() { return std::make_shared<MKind>(MKind{MKType{}}); }
MKindPtr mk_pi(MBinder b, MKindPtr body) {
  return std::make_shared<MKind>(MKind{MKPi{std::move(b), std::move(body)}});
}
MTermPtr mm_lam(Mod mod, Name binder, MTermPtr body) {
  return std::make_shared<MTerm>(MTerm{MLamTm{mod, std::move(binder), std::move(body)}});
}
MTermPtr mm_atom(Head head, MSpine spine) {
  return std::make_shared<MTerm>(MTerm{MAtomTm{std::move(head), std::move(spine)}});
}
MTermPtr mm_var(Name n) { return mm_atom(Head{std::move(n)}); }
MTermPtr mm_trace(Trace tr) { return std::make_shared<MTerm>(MTerm{MTraceTm{std::move(tr)}}); }

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

const SigEntry* Signature::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

void Signature::add(SigEntry entry) {
  if (index_.count(entry.name))
    throw std::invalid_argument("duplicate constant: " + entry.name);
  index_.emplace(entry.name, entries_.size());
  entries_.push_back(std::move(entry));
}

const MetaEntry* MetaSignature::find(const std::string& name) const {
  auto it = index_.find(name);
  return it == index_.end() ? nullptr : &entries_[it->second];
}

void MetaSignature::add(MetaEntry entry) {
  if (index_.count(entry.name))
    throw std::invalid_argument("duplicate constant: " + entry.name);
  index_.emplace(entry.name, entries_.size());
  entries_.push_back(std::move(entry));
}

// ---------------------------------------------------------------------------
// Free variables
// ---------------------------------------------------------------------------

namespace {

// Free-variable collection with an explicit bound set. Ids are globally
// unique, so the bound set never needs to be popped on scope exit as long as
// sibling scopes cannot share binder ids (they cannot, by construction).
struct FvWalk {
  IdSet& out;
  IdSet bound = {};

  void var(const Name& n) {
    if (!bound.count(n.id)) out.insert(n.id);
  }

  void walk(const TermPtr& t) {
    if (!t) return;
    if (const auto* l = std::get_if<Lam>(&t->node)) {
      bound.insert(l->binder.id);
      walk(l->body);
    } else if (const auto* a = std::get_if<Atom>(&t->node)) {
      if (const Name* v = std::get_if<Name>(&a->head)) var(*v);
      walk(a->spine);
    } else {
      walk(std::get<Braces>(t->node).trace);
    }
  }

  void walk(const Spine& s) {
    for (const auto& e : s.elems) walk(e.term);
  }

  void walk(const TypePtr& t) {
    if (!t) return;
    if (const auto* p = std::get_if<TPi>(&t->node)) {
      walk(p->arg);
      bound.insert(p->binder.id);
      walk(p->body);
    } else if (const auto* a = std::get_if<TAtom>(&t->node)) {
      walk(a->spine);
    } else {
      walk(std::get<TMonad>(t->node).ctx);
    }
  }

  void walk(const KindPtr& k) {
    if (!k) return;
    if (const auto* p = std::get_if<KPi>(&k->node)) {
      walk(p->arg);
      bound.insert(p->binder.id);
      walk(p->body);
    }
  }

  // Binder reading: a declaration's name scopes over the remaining entries.
  void walk(const Context& c) {
    for (const auto& e : c.entries) {
      if (const Decl* d = std::get_if<Decl>(&e)) {
        walk(d->type);
        bound.insert(d->name.id);
      } else {
        var(std::get<CtxVar>(e).name);
      }
    }
  }

  void walk(const Trace& tr) {
    for (const auto& s : tr.steps) {
      if (const auto* ls = std::get_if<LetStep>(&s)) {
        walk(ls->spine);
        walk(ls->outs);  // also marks outputs bound for later steps
      } else {
        const auto& vs = std::get<VarStep>(s);
        var(vs.var);
        if (vs.args) walk(*vs.args);
      }
    }
  }

  void walk(const MSpine& s) {
    for (const auto& a : s.elems) {
      if (const auto* t = std::get_if<MTermPtr>(&a)) {
        walk(*t);
      } else if (const auto* c = std::get_if<Context>(&a)) {
        walk_interface(*c);
      }
    }
  }

  // Reference reading: declared names are nominal references, not binders.
  // Used for trace-type interfaces and context arguments.
  void walk_interface(const Context& c) {
    for (const auto& e : c.entries) {
      if (const Decl* d = std::get_if<Decl>(&e)) {
        var(d->name);
        walk(d->type);
      } else {
        var(std::get<CtxVar>(e).name);
      }
    }
  }

  void walk(const MTermPtr& t) {
    if (!t) return;
    if (const auto* l = std::get_if<MLamTm>(&t->node)) {
      bound.insert(l->binder.id);
      walk(l->body);
    } else if (const auto* a = std::get_if<MAtomTm>(&t->node)) {
      if (const Name* v = std::get_if<Name>(&a->head)) var(*v);
      walk(a->spine);
    } else {
      walk(std::get<MTraceTm>(t->node).trace);
    }
  }

  void walk(const MTypePtr& t) {
    if (!t) return;
    if (const auto* p = std::get_if<MTPi>(&t->node)) {
      if (p->binder.mtype) walk(p->binder.mtype);
      if (p->binder.ctype) walk(p->binder.ctype);
      bound.insert(p->binder.var.id);
      walk(p->body);
    } else if (const auto* a = std::get_if<MTAtom>(&t->node)) {
      walk(a->spine);
    } else {
      const auto& tt = std::get<MTTrace>(t->node);
      walk_interface(tt.pre);
      walk_interface(tt.post);
    }
  }

  void walk(const MKindPtr& k) {
    if (!k) return;
    if (const auto* p = std::get_if<MKPi>(&k->node)) {
      if (p->binder.mtype) walk(p->binder.mtype);
      if (p->binder.ctype) walk(p->binder.ctype);
      bound.insert(p->binder.var.id);
      walk(p->body);
    }
  }
};

}  // namespace

void free_vars(const TermPtr& t, IdSet& out) { FvWalk{out}.walk(t); }
void free_vars(const TypePtr& t, IdSet& out) { FvWalk{out}.walk(t); }
void free_vars(const KindPtr& k, IdSet& out) { FvWalk{out}.walk(k); }
void free_vars(const Spine& s, IdSet& out) { FvWalk{out}.walk(s); }
void free_vars(const Context& c, IdSet& out) { FvWalk{out}.walk(c); }
void free_vars(const Trace& tr, IdSet& out) { FvWalk{out}.walk(tr); }
void free_vars(const MTypePtr& t, IdSet& out) { FvWalk{out}.walk(t); }
void free_vars(const MKindPtr& k, IdSet& out) { FvWalk{out}.walk(k); }
void free_vars(const MTermPtr& t, IdSet& out) { FvWalk{out}.walk(t); }
void free_vars(const MSpine& s, IdSet& out) { FvWalk{out}.walk(s); }

// ---------------------------------------------------------------------------
// Renaming
// ---------------------------------------------------------------------------

namespace {

Name ren(const Name& n, const Renaming& r) {
  auto it = r.find(n.id);
  return it == r.end() ? n : it->second;
}

Head ren_head(const Head& h, const Renaming& r) {
  if (const Name* v = std::get_if<Name>(&h)) return Head{ren(*v, r)};
  return h;
}

}  // namespace

Spine rename(const Spine& s, const Renaming& r) {
  Spine out;
  out.elems.reserve(s.elems.size());
  for (const auto& e : s.elems) out.elems.push_back({e.mod, rename(e.term, r)});
  return out;
}

Context rename(const Context& c, const Renaming& r) {
  Context out;
  out.entries.reserve(c.entries.size());
  for (const auto& e : c.entries) {
    if (const Decl* d = std::get_if<Decl>(&e)) {
      out.push(Decl{d->mod, ren(d->name, r), rename(d->type, r)});
    } else {
      out.push(CtxVar{ren(std::get<CtxVar>(e).name, r)});
    }
  }
  return out;
}

Trace rename(const Trace& tr, const Renaming& r) {
  Trace out;
  out.steps.reserve(tr.steps.size());
  for (const auto& s : tr.steps) {
    if (const auto* ls = std::get_if<LetStep>(&s)) {
      out.steps.push_back(LetStep{rename(ls->outs, r), ls->rule, rename(ls->spine, r)});
    } else {
      const auto& vs = std::get<VarStep>(s);
      MSpinePtr args = vs.args ? std::make_shared<MSpine>(rename(*vs.args, r)) : nullptr;
      out.steps.push_back(VarStep{ren(vs.var, r), std::move(args)});
    }
  }
  return out;
}

TermPtr rename(const TermPtr& t, const Renaming& r) {
  if (!t) return t;
  if (const auto* l = std::get_if<Lam>(&t->node))
    return m_lam(l->mod, ren(l->binder, r), rename(l->body, r));
  if (const auto* a = std::get_if<Atom>(&t->node))
    return m_atom(ren_head(a->head, r), rename(a->spine, r));
  return m_braces(rename(std::get<Braces>(t->node).trace, r));
}

TypePtr rename(const TypePtr& t, const Renaming& r) {
  if (!t) return t;
  if (const auto* p = std::get_if<TPi>(&t->node))
    return t_pi(p->mod, ren(p->binder, r), rename(p->arg, r), rename(p->body, r));
  if (const auto* a = std::get_if<TAtom>(&t->node))
    return t_atom(a->head, rename(a->spine, r));
  return t_monad(rename(std::get<TMonad>(t->node).ctx, r));
}

KindPtr rename(const KindPtr& k, const Renaming& r) {
  if (!k) return k;
  if (const auto* p = std::get_if<KPi>(&k->node))
    return k_pi(ren(p->binder, r), rename(p->arg, r), rename(p->body, r));
  return k_type();
}

MSpine rename(const MSpine& s, const Renaming& r) {
  MSpine out;
  out.elems.reserve(s.elems.size());
  for (const auto& a : s.elems) {
    if (const auto* t = std::get_if<MTermPtr>(&a)) {
      out.elems.emplace_back(rename(*t, r));
    } else if (const auto* c = std::get_if<Context>(&a)) {
      out.elems.emplace_back(rename(*c, r));
    } else {
      out.elems.emplace_back(MFresh{});
    }
  }
  return out;
}

MTermPtr rename(const MTermPtr& t, const Renaming& r) {
  if (!t) return t;
  if (const auto* l = std::get_if<MLamTm>(&t->node))
    return mm_lam(l->mod, ren(l->binder, r), rename(l->body, r));
  if (const auto* a = std::get_if<MAtomTm>(&t->node))
    return mm_atom(ren_head(a->head, r), rename(a->spine, r));
  return mm_trace(rename(std::get<MTraceTm>(t->node).trace, r));
}

namespace {
MBinder ren_binder(const MBinder& b, const Renaming& r) {
  MBinder out = b;
  out.var = ren(b.var, r);
  if (b.mtype) out.mtype = rename(b.mtype, r);
  if (b.ctype) out.ctype = rename(b.ctype, r);
  return out;
}
}  // namespace

MTypePtr rename(const MTypePtr& t, const Renaming& r) {
  if (!t) return t;
  if (const auto* p = std::get_if<MTPi>(&t->node))
    return mt_pi(ren_binder(p->binder, r), rename(p->body, r));
  if (const auto* a = std::get_if<MTAtom>(&t->node))
    return mt_atom(a->head, rename(a->spine, r));
  const auto& tt = std::get<MTTrace>(t->node);
  return mt_trace(rename(tt.pre, r), tt.sig, tt.exactly_one, rename(tt.post, r));
}

MKindPtr rename(const MKindPtr& k, const Renaming& r) {
  if (!k) return k;
  if (const auto* p = std::get_if<MKPi>(&k->node))
    return mk_pi(ren_binder(p->binder, r), rename(p->body, r));
  return mk_type();
}

// ---------------------------------------------------------------------------
// Alpha equality
// ---------------------------------------------------------------------------

void AlphaMap::bind(uint32_t a, uint32_t b) {
  fwd[a] = b;
  bwd[b] = a;
}

bool AlphaMap::matches(uint32_t a, uint32_t b) const {
  auto fit = fwd.find(a);
  auto bit = bwd.find(b);
  if (fit == fwd.end() && bit == bwd.end()) return a == b;  // both free
  if (fit == fwd.end() || bit == bwd.end()) return false;   // bound vs free
  return fit->second == b && bit->second == a;
}

namespace {

bool head_eq(const Head& a, const Head& b, const AlphaMap& m) {
  if (a.index() != b.index()) return false;
  if (const Name* va = std::get_if<Name>(&a))
    return m.matches(va->id, std::get<Name>(b).id);
  return std::get<ConstRef>(a).name == std::get<ConstRef>(b).name;
}

// Interface contexts: declared names are references (compared through the
// map, not rebound).
bool ctx_eq_interface(const Context& a, const Context& b, AlphaMap& m) {
  if (a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const auto& ea = a.entries[i];
    const auto& eb = b.entries[i];
    if (ea.index() != eb.index()) return false;
    if (const Decl* da = std::get_if<Decl>(&ea)) {
      const Decl& db = std::get<Decl>(eb);
      if (da->mod != db.mod) return false;
      if (!m.matches(da->name.id, db.name.id)) return false;
      if (!alpha_eq(da->type, db.type, m)) return false;
    } else {
      if (!m.matches(std::get<CtxVar>(ea).name.id, std::get<CtxVar>(eb).name.id)) return false;
    }
  }
  return true;
}

bool mspine_eq(const MSpinePtr& a, const MSpinePtr& b, AlphaMap& m) {
  const bool ea = !a || a->empty();
  const bool eb = !b || b->empty();
  if (ea || eb) return ea == eb;
  return alpha_eq(*a, *b, m);
}

}  // namespace

bool alpha_eq(const Spine& a, const Spine& b, AlphaMap& m) {
  if (a.elems.size() != b.elems.size()) return false;
  for (size_t i = 0; i < a.elems.size(); ++i) {
    if (a.elems[i].mod != b.elems[i].mod) return false;
    if (!alpha_eq(a.elems[i].term, b.elems[i].term, m)) return false;
  }
  return true;
}

bool alpha_eq(const TermPtr& a, const TermPtr& b, AlphaMap& m) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* la = std::get_if<Lam>(&a->node)) {
    const Lam& lb = std::get<Lam>(b->node);
    if (la->mod != lb.mod) return false;
    m.bind(la->binder.id, lb.binder.id);
    return alpha_eq(la->body, lb.body, m);
  }
  if (const auto* aa = std::get_if<Atom>(&a->node)) {
    const Atom& ab = std::get<Atom>(b->node);
    return head_eq(aa->head, ab.head, m) && alpha_eq(aa->spine, ab.spine, m);
  }
  return alpha_eq(std::get<Braces>(a->node).trace, std::get<Braces>(b->node).trace, m);
}

bool alpha_eq(const TypePtr& a, const TypePtr& b, AlphaMap& m) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* pa = std::get_if<TPi>(&a->node)) {
    const TPi& pb = std::get<TPi>(b->node);
    if (pa->mod != pb.mod) return false;
    if (!alpha_eq(pa->arg, pb.arg, m)) return false;
    m.bind(pa->binder.id, pb.binder.id);
    return alpha_eq(pa->body, pb.body, m);
  }
  if (const auto* aa = std::get_if<TAtom>(&a->node)) {
    const TAtom& ab = std::get<TAtom>(b->node);
    return aa->head == ab.head && alpha_eq(aa->spine, ab.spine, m);
  }
  return alpha_eq(std::get<TMonad>(a->node).ctx, std::get<TMonad>(b->node).ctx, m);
}

bool alpha_eq(const KindPtr& a, const KindPtr& b, AlphaMap& m) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* pa = std::get_if<KPi>(&a->node)) {
    const KPi& pb = std::get<KPi>(b->node);
    if (!alpha_eq(pa->arg, pb.arg, m)) return false;
    m.bind(pa->binder.id, pb.binder.id);
    return alpha_eq(pa->body, pb.body, m);
  }
  return true;
}

bool alpha_eq(const Context& a, const Context& b, AlphaMap& m) {
  if (a.entries.size() != b.entries.size()) return false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const auto& ea = a.entries[i];
    const auto& eb = b.entries[i];
    if (ea.index() != eb.index()) return false;
    if (const Decl* da = std::get_if<Decl>(&ea)) {
      const Decl& db = std::get<Decl>(eb);
      if (da->mod != db.mod) return false;
      if (!alpha_eq(da->type, db.type, m)) return false;
      m.bind(da->name.id, db.name.id);
    } else {
      if (!m.matches(std::get<CtxVar>(ea).name.id, std::get<CtxVar>(eb).name.id)) return false;
    }
  }
  return true;
}

bool alpha_eq(const Trace& a, const Trace& b, AlphaMap& m) {
  if (a.steps.size() != b.steps.size()) return false;
  for (size_t i = 0; i < a.steps.size(); ++i) {
    const auto& sa = a.steps[i];
    const auto& sb = b.steps[i];
    if (sa.index() != sb.index()) return false;
    if (const auto* la = std::get_if<LetStep>(&sa)) {
      const LetStep& lb = std::get<LetStep>(sb);
      if (la->rule != lb.rule) return false;
      if (!alpha_eq(la->spine, lb.spine, m)) return false;
      if (!alpha_eq(la->outs, lb.outs, m)) return false;  // binds outputs
    } else {
      const VarStep& va = std::get<VarStep>(sa);
      const VarStep& vb = std::get<VarStep>(sb);
      if (!m.matches(va.var.id, vb.var.id)) return false;
      if (!mspine_eq(va.args, vb.args, m)) return false;
    }
  }
  return true;
}

bool alpha_eq(const MSpine& a, const MSpine& b, AlphaMap& m) {
  if (a.elems.size() != b.elems.size()) return false;
  for (size_t i = 0; i < a.elems.size(); ++i) {
    const auto& ea = a.elems[i];
    const auto& eb = b.elems[i];
    if (ea.index() != eb.index()) return false;
    if (const auto* ta = std::get_if<MTermPtr>(&ea)) {
      if (!alpha_eq(*ta, std::get<MTermPtr>(eb), m)) return false;
    } else if (const auto* ca = std::get_if<Context>(&ea)) {
      if (!ctx_eq_interface(*ca, std::get<Context>(eb), m)) return false;
    }
  }
  return true;
}

bool alpha_eq(const MTermPtr& a, const MTermPtr& b, AlphaMap& m) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* la = std::get_if<MLamTm>(&a->node)) {
    const MLamTm& lb = std::get<MLamTm>(b->node);
    if (la->mod != lb.mod) return false;
    m.bind(la->binder.id, lb.binder.id);
    return alpha_eq(la->body, lb.body, m);
  }
  if (const auto* aa = std::get_if<MAtomTm>(&a->node)) {
    const MAtomTm& ab = std::get<MAtomTm>(b->node);
    return head_eq(aa->head, ab.head, m) && alpha_eq(aa->spine, ab.spine, m);
  }
  return alpha_eq(std::get<MTraceTm>(a->node).trace, std::get<MTraceTm>(b->node).trace, m);
}

bool alpha_eq(const MTypePtr& a, const MTypePtr& b, AlphaMap& m) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* pa = std::get_if<MTPi>(&a->node)) {
    const MTPi& pb = std::get<MTPi>(b->node);
    if (pa->binder.sort != pb.binder.sort) return false;
    if (pa->binder.sort == MBinderSort::MetaTm &&
        !alpha_eq(pa->binder.mtype, pb.binder.mtype, m))
      return false;
    if (pa->binder.sort == MBinderSort::ClfTm &&
        !alpha_eq(pa->binder.ctype, pb.binder.ctype, m))
      return false;
    m.bind(pa->binder.var.id, pb.binder.var.id);
    return alpha_eq(pa->body, pb.body, m);
  }
  if (const auto* aa = std::get_if<MTAtom>(&a->node)) {
    const MTAtom& ab = std::get<MTAtom>(b->node);
    return aa->head == ab.head && alpha_eq(aa->spine, ab.spine, m);
  }
  const MTTrace& ta = std::get<MTTrace>(a->node);
  const MTTrace& tb = std::get<MTTrace>(b->node);
  return ta.sig == tb.sig && ta.exactly_one == tb.exactly_one &&
         ctx_eq_interface(ta.pre, tb.pre, m) && ctx_eq_interface(ta.post, tb.post, m);
}

bool alpha_eq(const MKindPtr& a, const MKindPtr& b, AlphaMap& m) {
  if (!a || !b) return a == b;
  if (a->node.index() != b->node.index()) return false;
  if (const auto* pa = std::get_if<MKPi>(&a->node)) {
    const MKPi& pb = std::get<MKPi>(b->node);
    if (pa->binder.sort != pb.binder.sort) return false;
    if (pa->binder.sort == MBinderSort::MetaTm &&
        !alpha_eq(pa->binder.mtype, pb.binder.mtype, m))
      return false;
    if (pa->binder.sort == MBinderSort::ClfTm &&
        !alpha_eq(pa->binder.ctype, pb.binder.ctype, m))
      return false;
    m.bind(pa->binder.var.id, pb.binder.var.id);
    return alpha_eq(pa->body, pb.body, m);
  }
  return true;
}

}  // namespace clf
