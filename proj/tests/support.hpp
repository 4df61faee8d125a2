#pragma once
// Shared helpers for the test binaries: corpus loading, a random ground-trace
// generator, and a brute-force permutation oracle for trace equivalence.
// Deliberately free of any test-framework dependency so both the doctest
// suites and the standalone acceptance runner can include it.

#include <algorithm>
#include <fstream>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "clf/ast.hpp"
#include "clf/parser.hpp"
#include "clf/trace_algebra.hpp"

namespace clf::support {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in.good()) throw std::runtime_error("cannot open " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Corpus {
  Signature sig;
  std::vector<NamedContext> contexts;
  std::vector<NamedTrace> traces;

  const Context& ctx(const std::string& name) const {
    for (const auto& c : contexts) {
      if (c.name == name) return c.ctx;
    }
    throw std::runtime_error("no context named " + name);
  }

  const NamedTrace& trace(const std::string& name) const {
    for (const auto& t : traces) {
      if (t.name == name) return t;
    }
    throw std::runtime_error("no trace named " + name);
  }
};

inline Corpus load_corpus(const std::string& dir = CORPUS_DIR) {
  Corpus c;
  for (const char* f : {"stlc.clf", "step.clf", "gen.clf", "traces.clf"}) {
    ParsedFile pf = parse_clf(slurp(dir + "/" + f), f, c.sig, &c.contexts);
    for (auto& nc : pf.contexts) c.contexts.push_back(std::move(nc));
    for (auto& nt : pf.traces) c.traces.push_back(std::move(nt));
  }
  return c;
}

// ---------------------------------------------------------------------------
// Random ground traces
// ---------------------------------------------------------------------------
// Generates well-scoped traces over a throwaway vocabulary: every name has the
// trivial atomic type A, rules are r0..r3, and each step consumes a random
// subset of the currently unconsumed linear names, mentions a random subset of
// persistent names, and binds 0..3 fresh outputs of random modality. The
// trace algebra never consults a signature, so none is needed.

struct RandomTrace {
  Context ambient;
  Trace trace;
};

inline RandomTrace random_trace(std::mt19937& rng, int steps, int ambientLinear = 4,
                                int ambientPersistent = 2) {
  auto atomA = t_atom("A");
  RandomTrace rt;
  std::vector<Name> linearPool;      // unconsumed linear names
  std::vector<Name> persistentPool;  // all persistent names in scope
  for (int i = 0; i < ambientLinear; ++i) {
    Name n = fresh_name("l" + std::to_string(i));
    rt.ambient.push(Decl{Mod::Linear, n, atomA});
    linearPool.push_back(n);
  }
  for (int i = 0; i < ambientPersistent; ++i) {
    Name n = fresh_name("p" + std::to_string(i));
    rt.ambient.push(Decl{Mod::Persistent, n, atomA});
    persistentPool.push_back(n);
  }

  auto pick_subset = [&](std::vector<Name>& pool, int maxTake, bool remove) {
    std::vector<Name> taken;
    int take = std::uniform_int_distribution<int>(0, std::min<int>(maxTake, pool.size()))(rng);
    for (int i = 0; i < take; ++i) {
      size_t k = std::uniform_int_distribution<size_t>(0, pool.size() - 1)(rng);
      taken.push_back(pool[k]);
      if (remove) {
        pool.erase(pool.begin() + k);
      } else {
        // avoid mentioning the same persistent name twice in one spine
        std::swap(pool[k], pool.back());
        Name moved = pool.back();
        pool.pop_back();
        taken.back() = moved;
      }
    }
    return taken;
  };

  for (int s = 0; s < steps; ++s) {
    LetStep st;
    st.rule = "r" + std::to_string(std::uniform_int_distribution<int>(0, 3)(rng));
    std::vector<Name> eat = pick_subset(linearPool, 2, true);
    std::vector<Name> mention = pick_subset(persistentPool, 2, false);
    std::vector<SpineElem> elems;
    for (const Name& n : eat) elems.push_back({Mod::Linear, m_var(n)});
    for (const Name& n : mention) {
      elems.push_back({Mod::Persistent, m_var(n)});
      persistentPool.push_back(n);  // put back; persistent names are reusable
    }
    st.spine = Spine{std::move(elems)};
    int outs = std::uniform_int_distribution<int>(0, 3)(rng);
    for (int k = 0; k < outs; ++k) {
      bool linear = std::uniform_int_distribution<int>(0, 1)(rng) == 0;
      Name n = fresh_name((linear ? "x" : "d") + std::to_string(s) + std::to_string(k));
      st.outs.push(Decl{linear ? Mod::Linear : Mod::Persistent, n, atomA});
      if (linear) {
        linearPool.push_back(n);
      } else {
        persistentPool.push_back(n);
      }
    }
    rt.trace.steps.push_back(std::move(st));
  }
  return rt;
}

// Renames every step-output binder of `tr` to a fresh name (alpha-variant that
// shares only ambient names with the original).
inline Trace rename_outputs(const Trace& tr, const std::string& tag = "v") {
  Renaming r;
  int k = 0;
  for (const auto& st : tr.steps) {
    const auto* ls = std::get_if<LetStep>(&st);
    if (!ls) continue;
    for (const auto& e : ls->outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) {
        r.emplace(d->name.id, fresh_name(tag + std::to_string(k++)));
      }
    }
  }
  return rename(tr, r);
}

// ---------------------------------------------------------------------------
// Brute-force permutation oracle
// ---------------------------------------------------------------------------

inline Trace apply_perm(const Trace& tr, const std::vector<size_t>& perm) {
  Trace out;
  for (size_t k : perm) out.steps.push_back(tr.steps[k]);
  return out;
}

inline bool scope_valid(const Trace& tr, const Context& ambient) {
  IdSet bound;
  for (const auto& e : ambient.entries) {
    if (const auto* d = std::get_if<Decl>(&e)) bound.insert(d->name.id);
  }
  for (const auto& st : tr.steps) {
    const auto* ls = std::get_if<LetStep>(&st);
    if (!ls) return false;
    IdSet used;
    free_vars(ls->spine, used);
    for (const auto& e : ls->outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) free_vars(d->type, used);
    }
    for (const auto& e : ls->outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) used.erase(d->name.id);
    }
    for (uint32_t id : used) {
      if (!bound.count(id)) return false;
    }
    for (const auto& e : ls->outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) bound.insert(d->name.id);
    }
  }
  return true;
}

// All permutations of tr's steps reachable by repeatedly swapping adjacent
// independent steps. Each permutation is the index vector into the ORIGINAL
// trace. Feasible for traces of <= ~7 steps.
inline std::set<std::vector<size_t>> perm_closure(const Trace& tr, const Context& ambient) {
  std::vector<size_t> ident(tr.steps.size());
  for (size_t i = 0; i < ident.size(); ++i) ident[i] = i;
  std::set<std::vector<size_t>> seen{ident};
  std::vector<std::vector<size_t>> work{ident};
  while (!work.empty()) {
    std::vector<size_t> cur = std::move(work.back());
    work.pop_back();
    Trace curTrace = apply_perm(tr, cur);
    for (size_t i = 0; i + 1 < cur.size(); ++i) {
      // The two candidate steps may refer to names bound by steps 0..i-1 of
      // the current order, so extend the ambient context with those outputs.
      Context amb = ambient;
      for (size_t j = 0; j < i; ++j) {
        const auto& ls = std::get<LetStep>(curTrace.steps[j]);
        for (const auto& e : ls.outs.entries) amb.push(std::get<Decl>(e));
      }
      Trace a{{curTrace.steps[i]}};
      Trace b{{curTrace.steps[i + 1]}};
      try {
        if (!independent(a, b, amb)) continue;
      } catch (const TraceAlgebraError&) {
        continue;  // the later step uses a name the earlier one binds
      }
      std::vector<size_t> next = cur;
      std::swap(next[i], next[i + 1]);
      if (seen.insert(next).second) work.push_back(next);
    }
  }
  return seen;
}

inline std::vector<std::vector<size_t>> all_perms(size_t n) {
  std::vector<size_t> ident(n);
  for (size_t i = 0; i < n; ++i) ident[i] = i;
  std::vector<std::vector<size_t>> out;
  do {
    out.push_back(ident);
  } while (std::next_permutation(ident.begin(), ident.end()));
  return out;
}

}  // namespace clf::support
