#pragma once
// Independent lambda-calculus oracle for the evaluation tests: a native
// de Bruijn simply-typed lambda calculus with call-by-value big-step
// evaluation, a well-typed-by-construction sampler, and encoders between
// de Bruijn terms and the kernel's higher-order abstract syntax. Nothing
// here touches the rewrite engine, so agreement between the two evaluators
// is meaningful evidence.

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "clf/ast.hpp"
#include "clf/engine.hpp"

namespace clf::support {

// ---------------------------------------------------------------------------
// Types: base | arrow
// ---------------------------------------------------------------------------

struct STy;
using STyPtr = std::shared_ptr<const STy>;

struct STy {
  STyPtr l, r;  // both null for the base type
  bool base() const { return !l; }
};

inline STyPtr sty_base() {
  static const STyPtr b = std::make_shared<STy>();
  return b;
}

inline STyPtr sty_arrow(STyPtr a, STyPtr b) {
  auto t = std::make_shared<STy>();
  t->l = std::move(a);
  t->r = std::move(b);
  return t;
}

inline bool sty_eq(const STyPtr& a, const STyPtr& b) {
  if (a->base() || b->base()) return a->base() && b->base();
  return sty_eq(a->l, b->l) && sty_eq(a->r, b->r);
}

// ---------------------------------------------------------------------------
// Terms: de Bruijn indices, so equality is plain structural equality
// ---------------------------------------------------------------------------

struct SExp;
using SExpPtr = std::shared_ptr<const SExp>;

struct SExp {
  enum class K { Var, Lam, App };
  K k = K::Var;
  size_t idx = 0;  // Var
  SExpPtr a, b;    // Lam: a = body; App: a = function, b = argument
};

inline SExpPtr s_var(size_t i) {
  auto e = std::make_shared<SExp>();
  e->k = SExp::K::Var;
  e->idx = i;
  return e;
}

inline SExpPtr s_lam(SExpPtr body) {
  auto e = std::make_shared<SExp>();
  e->k = SExp::K::Lam;
  e->a = std::move(body);
  return e;
}

inline SExpPtr s_app(SExpPtr f, SExpPtr a) {
  auto e = std::make_shared<SExp>();
  e->k = SExp::K::App;
  e->a = std::move(f);
  e->b = std::move(a);
  return e;
}

inline bool sexp_eq(const SExpPtr& a, const SExpPtr& b) {
  if (a->k != b->k) return false;
  switch (a->k) {
    case SExp::K::Var: return a->idx == b->idx;
    case SExp::K::Lam: return sexp_eq(a->a, b->a);
    case SExp::K::App: return sexp_eq(a->a, b->a) && sexp_eq(a->b, b->b);
  }
  return false;
}

inline size_t sexp_size(const SExpPtr& e) {
  switch (e->k) {
    case SExp::K::Var: return 1;
    case SExp::K::Lam: return 1 + sexp_size(e->a);
    case SExp::K::App: return 1 + sexp_size(e->a) + sexp_size(e->b);
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Substitution-based call-by-value evaluation
// ---------------------------------------------------------------------------

inline SExpPtr sexp_shift(const SExpPtr& e, long d, size_t cutoff = 0) {
  switch (e->k) {
    case SExp::K::Var:
      return e->idx < cutoff ? e : s_var(static_cast<size_t>(static_cast<long>(e->idx) + d));
    case SExp::K::Lam:
      return s_lam(sexp_shift(e->a, d, cutoff + 1));
    case SExp::K::App:
      return s_app(sexp_shift(e->a, d, cutoff), sexp_shift(e->b, d, cutoff));
  }
  return e;
}

inline SExpPtr sexp_subst(const SExpPtr& e, size_t j, const SExpPtr& v) {
  switch (e->k) {
    case SExp::K::Var:
      return e->idx == j ? v : e;
    case SExp::K::Lam:
      return s_lam(sexp_subst(e->a, j + 1, sexp_shift(v, 1)));
    case SExp::K::App:
      return s_app(sexp_subst(e->a, j, v), sexp_subst(e->b, j, v));
  }
  return e;
}

// Big-step CBV: function first, then argument, then the beta contractum.
// Returns nothing when fuel runs out or the term is stuck (never the case
// for closed well-typed input).
inline std::optional<SExpPtr> sexp_eval(const SExpPtr& e, long& fuel) {
  if (--fuel < 0) return std::nullopt;
  switch (e->k) {
    case SExp::K::Var: return std::nullopt;  // open terms are not evaluated
    case SExp::K::Lam: return e;
    case SExp::K::App: {
      auto f = sexp_eval(e->a, fuel);
      if (!f || (*f)->k != SExp::K::Lam) return std::nullopt;
      auto a = sexp_eval(e->b, fuel);
      if (!a) return std::nullopt;
      SExpPtr contractum = sexp_shift(sexp_subst((*f)->a, 0, sexp_shift(*a, 1)), -1);
      return sexp_eval(contractum, fuel);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Sampling closed well-typed terms
//
// Sampled top-level types have the shape base -> V, so the first lambda
// always brings a base-typed variable into scope; from then on every type
// has a lambda-chain inhabitant and the generator can never paint itself
// into an uninhabited corner. Redexes are introduced by applying a freshly
// built lambda to an independently sampled argument.
// ---------------------------------------------------------------------------

inline STyPtr sample_sty(std::mt19937_64& rng, int depth) {
  if (depth <= 0 || bounded(rng, 2) == 0) return sty_base();
  return sty_arrow(sample_sty(rng, depth - 1), sample_sty(rng, depth - 1));
}

inline bool has_base_var(const std::vector<STyPtr>& env) {
  for (const auto& t : env)
    if (t->base()) return true;
  return false;
}

inline SExpPtr sample_sexp(std::mt19937_64& rng, const STyPtr& ty, long fuel,
                           std::vector<STyPtr>& env) {
  std::vector<size_t> vars;  // de Bruijn indices of env entries matching ty
  for (size_t i = 0; i < env.size(); ++i) {
    if (sty_eq(env[env.size() - 1 - i], ty)) vars.push_back(i);
  }

  enum { PickVar, PickLam, PickRedex };
  std::vector<int> options;
  if (!vars.empty()) options.insert(options.end(), {PickVar, PickVar});
  if (!ty->base()) options.insert(options.end(), {PickLam, PickLam});
  if (fuel > 0) options.insert(options.end(), {PickRedex, PickRedex, PickRedex});

  int choice;
  if (options.empty()) {
    choice = ty->base() ? PickVar : PickLam;  // base demands only arise with a base var
  } else {
    choice = options[bounded(rng, options.size())];
  }

  switch (choice) {
    case PickVar:
      return s_var(vars[bounded(rng, vars.size())]);
    case PickLam: {
      env.push_back(ty->l);
      SExpPtr body = sample_sexp(rng, ty->r, fuel - 1, env);
      env.pop_back();
      return s_lam(std::move(body));
    }
    default: {
      // argument type: base once a base variable exists, else base -> base
      STyPtr argTy = (has_base_var(env) && bounded(rng, 2) == 0)
                         ? sty_base()
                         : sty_arrow(sty_base(), sty_base());
      env.push_back(argTy);
      SExpPtr body = sample_sexp(rng, ty, fuel / 2, env);
      env.pop_back();
      SExpPtr arg = sample_sexp(rng, argTy, fuel / 2, env);
      return s_app(s_lam(std::move(body)), std::move(arg));
    }
  }
}

struct SampledProgram {
  SExpPtr exp;
  STyPtr ty;
};

inline SampledProgram sample_program(std::mt19937_64& rng, long fuel) {
  STyPtr ty = sty_arrow(sty_base(), sample_sty(rng, 2));
  std::vector<STyPtr> env;
  return SampledProgram{sample_sexp(rng, ty, fuel, env), ty};
}

// ---------------------------------------------------------------------------
// Encoding into / decoding from the kernel's term language
// ---------------------------------------------------------------------------

inline TermPtr encode_sexp(const SExpPtr& e, std::vector<Name>& env) {
  switch (e->k) {
    case SExp::K::Var:
      return m_var(env[env.size() - 1 - e->idx]);
    case SExp::K::Lam: {
      Name x = fresh_name("x");
      env.push_back(x);
      TermPtr body = encode_sexp(e->a, env);
      env.pop_back();
      Spine sp;
      sp.elems.push_back(SpineElem{Mod::Persistent, m_lam(Mod::Persistent, x, std::move(body))});
      return m_atom(ConstRef{"lam"}, std::move(sp));
    }
    case SExp::K::App: {
      Spine sp;
      sp.elems.push_back(SpineElem{Mod::Persistent, encode_sexp(e->a, env)});
      sp.elems.push_back(SpineElem{Mod::Persistent, encode_sexp(e->b, env)});
      return m_atom(ConstRef{"app"}, std::move(sp));
    }
  }
  return nullptr;
}

inline TermPtr encode_sexp(const SExpPtr& e) {
  std::vector<Name> env;
  return encode_sexp(e, env);
}

inline std::optional<SExpPtr> decode_sexp(const TermPtr& t, std::vector<uint32_t>& env) {
  const auto* a = std::get_if<Atom>(&t->node);
  if (!a) return std::nullopt;
  if (head_is_var(a->head)) {
    if (!a->spine.elems.empty()) return std::nullopt;
    uint32_t id = std::get<Name>(a->head).id;
    for (size_t i = 0; i < env.size(); ++i) {
      if (env[env.size() - 1 - i] == id) return s_var(i);
    }
    return std::nullopt;
  }
  const std::string& c = std::get<ConstRef>(a->head).name;
  if (c == "lam" && a->spine.elems.size() == 1) {
    const auto* l = std::get_if<Lam>(&a->spine.elems[0].term->node);
    if (!l) return std::nullopt;
    env.push_back(l->binder.id);
    auto body = decode_sexp(l->body, env);
    env.pop_back();
    if (!body) return std::nullopt;
    return s_lam(std::move(*body));
  }
  if (c == "app" && a->spine.elems.size() == 2) {
    auto f = decode_sexp(a->spine.elems[0].term, env);
    if (!f) return std::nullopt;
    auto x = decode_sexp(a->spine.elems[1].term, env);
    if (!x) return std::nullopt;
    return s_app(std::move(*f), std::move(*x));
  }
  return std::nullopt;
}

inline std::optional<SExpPtr> decode_sexp(const TermPtr& t) {
  std::vector<uint32_t> env;
  return decode_sexp(t, env);
}

}  // namespace clf::support
