#include "clf/printer.hpp"

namespace clf {

namespace {
const char* kKeywords[] = {"Pi", "Nabla", "type", "ctx", "let", "context", "trace"};
}

Printer::Printer(const Signature& sig) {
  for (const char* k : kKeywords) taken_.insert(k);
  for (const auto& e : sig.entries()) taken_.insert(e.name);
}

std::string Printer::display(const Name& n) {
  auto it = names_.find(n.id);
  if (it != names_.end()) return it->second;
  std::string base = n.text.empty() ? "x" : n.text;
  std::string candidate = base;
  while (taken_.count(candidate)) candidate += "'";
  names_.emplace(n.id, candidate);
  taken_.insert(candidate);
  return candidate;
}

// ---------------------------------------------------------------------------
// Object level
// ---------------------------------------------------------------------------

std::string Printer::decl(const Decl& d) {
  std::string mark = d.mod == Mod::Linear ? "^" : "!";
  return mark + display(d.name) + " : " + type(d.type, false);
}

std::string Printer::str(const Context& c) {
  std::string out;
  for (size_t i = 0; i < c.entries.size(); ++i) {
    if (i) out += ", ";
    if (const Decl* d = std::get_if<Decl>(&c.entries[i]))
      out += decl(*d);
    else
      out += display(std::get<CtxVar>(c.entries[i]).name);
  }
  return out;
}

std::string Printer::spine_elem(const SpineElem& e) {
  std::string body = term(e.term, true);
  return e.mod == Mod::Linear ? "^" + body : body;
}

std::string Printer::str(const Spine& s) {
  std::string out;
  for (const auto& e : s.elems) out += " " + spine_elem(e);
  return out;
}

std::string Printer::term(const TermPtr& t, bool atomic) {
  if (!t) return "?";
  if (const auto* l = std::get_if<Lam>(&t->node)) {
    std::string mark = l->mod == Mod::Linear ? "^" : "";
    std::string body = "\\" + mark + display(l->binder) + ". " + term(l->body, false);
    return atomic ? "(" + body + ")" : body;
  }
  if (const auto* a = std::get_if<Atom>(&t->node)) {
    std::string head = head_is_var(a->head) ? display(std::get<Name>(a->head))
                                            : std::get<ConstRef>(a->head).name;
    if (a->spine.empty()) return head;
    std::string body = head + str(a->spine);
    return atomic ? "(" + body + ")" : body;
  }
  const auto& tr = std::get<Braces>(t->node).trace;
  return "{ " + str(tr) + " }";
}

std::string Printer::type(const TypePtr& t, bool atomic) {
  if (!t) return "?";
  if (const auto* p = std::get_if<TPi>(&t->node)) {
    std::string body;
    if (p->mod == Mod::Linear) {
      body = type(p->arg, true) + " -o " + type(p->body, false);
    } else {
      IdSet fv;
      free_vars(p->body, fv);
      if (fv.count(p->binder.id)) {
        body = "Pi " + display(p->binder) + " : " + type(p->arg, false) + ". " +
               type(p->body, false);
      } else {
        body = type(p->arg, true) + " -> " + type(p->body, false);
      }
    }
    return atomic ? "(" + body + ")" : body;
  }
  if (const auto* a = std::get_if<TAtom>(&t->node)) {
    if (a->spine.empty()) return a->head;
    std::string body = a->head + str(a->spine);
    return atomic ? "(" + body + ")" : body;
  }
  const auto& m = std::get<TMonad>(t->node);
  if (m.ctx.empty()) return "{ }";
  return "{ " + str(m.ctx) + " }";
}

std::string Printer::kind(const KindPtr& k) {
  if (!k) return "?";
  if (const auto* p = std::get_if<KPi>(&k->node)) {
    IdSet fv;
    free_vars(p->body, fv);
    if (fv.count(p->binder.id))
      return "Pi " + display(p->binder) + " : " + type(p->arg, false) + ". " + kind(p->body);
    return type(p->arg, true) + " -> " + kind(p->body);
  }
  return "type";
}

std::string Printer::step(const Step& s) {
  if (const auto* ls = std::get_if<LetStep>(&s)) {
    std::string outs = ls->outs.empty() ? "{ }" : "{" + str(ls->outs) + "}";
    return "let " + outs + " = " + ls->rule + str(ls->spine);
  }
  const auto& vs = std::get<VarStep>(s);
  std::string out = display(vs.var);
  if (vs.args) {
    for (const auto& a : vs.args->elems) out += " " + marg(a);
  }
  return out;
}

std::string Printer::str(const Trace& tr) {
  std::string out;
  for (size_t i = 0; i < tr.steps.size(); ++i) {
    if (i) out += " ; ";
    out += step(tr.steps[i]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Meta level
// ---------------------------------------------------------------------------

std::string Printer::marg(const MArg& a) {
  if (const auto* t = std::get_if<MTermPtr>(&a)) return mterm(*t, true);
  if (const auto* c = std::get_if<Context>(&a)) return "[" + str(*c) + "]";
  return "#";
}

std::string Printer::mterm(const MTermPtr& t, bool atomic) {
  if (!t) return "?";
  if (const auto* l = std::get_if<MLamTm>(&t->node)) {
    std::string mark = l->mod == Mod::Linear ? "^" : "";
    std::string body = "\\" + mark + display(l->binder) + ". " + mterm(l->body, false);
    return atomic ? "(" + body + ")" : body;
  }
  if (const auto* a = std::get_if<MAtomTm>(&t->node)) {
    std::string head = head_is_var(a->head) ? display(std::get<Name>(a->head))
                                            : std::get<ConstRef>(a->head).name;
    if (a->spine.empty()) return head;
    std::string body = head;
    for (const auto& e : a->spine.elems) body += " " + marg(e);
    return atomic ? "(" + body + ")" : body;
  }
  const auto& tr = std::get<MTraceTm>(t->node).trace;
  return "{ " + str(tr) + " }";
}

std::string Printer::mbinder_prefix(const MBinder& b) {
  switch (b.sort) {
    case MBinderSort::MetaTm:
      return "Pi " + display(b.var) + " : " + mtype(b.mtype, false) + ". ";
    case MBinderSort::Ctx:
      return "Pi " + display(b.var) + " : ctx. ";
    case MBinderSort::ClfTm:
      return "Pi^ " + display(b.var) + " : " + type(b.ctype, false) + ". ";
    case MBinderSort::NameQ:
      return "Nabla " + display(b.var) + ". ";
  }
  return "?";
}

std::string Printer::mtype(const MTypePtr& t, bool atomic) {
  if (!t) return "?";
  if (const auto* p = std::get_if<MTPi>(&t->node)) {
    std::string body;
    if (p->binder.sort == MBinderSort::MetaTm) {
      IdSet fv;
      free_vars(p->body, fv);
      if (!fv.count(p->binder.var.id)) {
        body = mtype(p->binder.mtype, true) + " -> " + mtype(p->body, false);
        return atomic ? "(" + body + ")" : body;
      }
    }
    body = mbinder_prefix(p->binder) + mtype(p->body, false);
    return atomic ? "(" + body + ")" : body;
  }
  if (const auto* a = std::get_if<MTAtom>(&t->node)) {
    if (a->spine.empty()) return a->head;
    std::string body = a->head;
    for (const auto& e : a->spine.elems) body += " " + marg(e);
    return atomic ? "(" + body + ")" : body;
  }
  const auto& tt = std::get<MTTrace>(t->node);
  std::string body = "[" + str(tt.pre) + "] " + tt.sig + (tt.exactly_one ? " ^1 " : " * ") +
                     "[" + str(tt.post) + "]";
  return atomic ? "(" + body + ")" : body;
}

std::string Printer::mkind(const MKindPtr& k) {
  if (!k) return "?";
  if (const auto* p = std::get_if<MKPi>(&k->node)) {
    if (p->binder.sort == MBinderSort::MetaTm) {
      IdSet fv;
      free_vars(p->body, fv);
      if (!fv.count(p->binder.var.id))
        return mtype(p->binder.mtype, true) + " -> " + mkind(p->body);
    }
    return mbinder_prefix(p->binder) + mkind(p->body);
  }
  return "type";
}

// ---------------------------------------------------------------------------
// Entry points
// ---------------------------------------------------------------------------

std::string Printer::str(const TermPtr& t) { return term(t, false); }
std::string Printer::str(const TypePtr& t) { return type(t, false); }
std::string Printer::str(const KindPtr& k) { return kind(k); }
std::string Printer::str(const MTermPtr& t) { return mterm(t, false); }
std::string Printer::str(const MTypePtr& t) { return mtype(t, false); }
std::string Printer::str(const MKindPtr& k) { return mkind(k); }

std::string Printer::entry(const SigEntry& e) {
  if (e.is_kind()) return e.name + " : " + kind(e.kind()) + ".";
  return e.name + " : " + type(e.type(), false) + ".";
}

std::string Printer::entry(const MetaEntry& e) {
  if (e.is_kind()) return e.name + " : " + mkind(e.kind()) + ".";
  return e.name + " : " + mtype(e.type(), false) + ".";
}

std::string Printer::context_block(const Context& c) {
  return "context { " + str(c) + " }.";
}

std::string Printer::trace_block(const Trace& tr) {
  return "trace { " + str(tr) + " }.";
}

namespace {
Printer make_printer(const Signature* sig) { return sig ? Printer(*sig) : Printer(); }
}  // namespace

std::string to_string(const TermPtr& t, const Signature* sig) { return make_printer(sig).str(t); }
std::string to_string(const TypePtr& t, const Signature* sig) { return make_printer(sig).str(t); }
std::string to_string(const KindPtr& k, const Signature* sig) { return make_printer(sig).str(k); }
std::string to_string(const Context& c, const Signature* sig) { return make_printer(sig).str(c); }
std::string to_string(const Trace& tr, const Signature* sig) { return make_printer(sig).str(tr); }
std::string to_string(const MTypePtr& t, const Signature* sig) { return make_printer(sig).str(t); }
std::string to_string(const MKindPtr& k, const Signature* sig) { return make_printer(sig).str(k); }
std::string to_string(const MTermPtr& t, const Signature* sig) { return make_printer(sig).str(t); }

}  // namespace clf
