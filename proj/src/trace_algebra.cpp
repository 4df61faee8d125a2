#include "clf/trace_algebra.hpp"

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <tuple>

namespace clf {

IdSet Interface::all() const {
  IdSet s = linear;
  s.insert(persistent.begin(), persistent.end());
  return s;
}

bool Interface::operator==(const Interface& o) const {
  return linear == o.linear && persistent == o.persistent;
}

namespace {

struct StepView {
  std::string rule;
  const LetStep* step = nullptr;
  IdSet used;      // free names of the spine and of the output types
  IdSet produced;  // output declaration ids
};

std::vector<StepView> view_steps(const Trace& tr) {
  std::vector<StepView> out;
  out.reserve(tr.steps.size());
  for (const auto& st : tr.steps) {
    const auto* ls = std::get_if<LetStep>(&st);
    if (!ls) {
      throw TraceAlgebraError(
          "trace variables are opaque to the ground trace algebra");
    }
    StepView v;
    v.rule = ls->rule;
    v.step = ls;
    free_vars(ls->spine, v.used);
    // Output types may mention surrounding names: those are uses for scoping
    // and dependence purposes (they can never consume, but types only depend
    // on persistent names in well-typed traces anyway).
    IdSet tyUses;
    for (const auto& e : ls->outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) {
        free_vars(d->type, tyUses);
        v.produced.insert(d->name.id);
      } else {
        throw TraceAlgebraError("context variables cannot appear in step outputs");
      }
    }
    for (uint32_t id : v.produced) tyUses.erase(id);
    v.used.insert(tyUses.begin(), tyUses.end());
    out.push_back(std::move(v));
  }
  return out;
}

// Modality of every binder in scope: ambient declarations plus step outputs.
std::unordered_map<uint32_t, Mod> modality_table(const std::vector<StepView>& steps,
                                                 const Context& ambient) {
  std::unordered_map<uint32_t, Mod> mods;
  for (const auto& e : ambient.entries) {
    if (const auto* d = std::get_if<Decl>(&e)) mods.emplace(d->name.id, d->mod);
  }
  for (const auto& v : steps) {
    for (const auto& e : v.step->outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) mods.emplace(d->name.id, d->mod);
    }
  }
  return mods;
}

void insert_by_mod(Interface& i, uint32_t id, const std::unordered_map<uint32_t, Mod>& mods) {
  auto it = mods.find(id);
  if (it == mods.end()) {
    throw TraceAlgebraError("name with id " + std::to_string(id) +
                            " is not bound by the trace or its ambient context");
  }
  (it->second == Mod::Linear ? i.linear : i.persistent).insert(id);
}

struct Interfaces {
  Interface in, out;
};

Interfaces interfaces(const Trace& tr, const Context& ambient) {
  auto steps = view_steps(tr);
  auto mods = modality_table(steps, ambient);
  Interface in, out;
  IdSet avail;  // running output set
  for (const auto& v : steps) {
    for (uint32_t id : v.used) {
      if (!avail.count(id)) insert_by_mod(in, id, mods);
    }
    // avail := produced u (avail \ used) u persistent(avail)
    IdSet survivors;
    for (uint32_t id : avail) {
      if (!v.used.count(id) || mods.at(id) == Mod::Persistent) survivors.insert(id);
    }
    survivors.insert(v.produced.begin(), v.produced.end());
    avail = std::move(survivors);
  }
  for (uint32_t id : avail) insert_by_mod(out, id, mods);
  return {std::move(in), std::move(out)};
}

bool disjoint(const IdSet& a, const IdSet& b) {
  const IdSet& small = a.size() <= b.size() ? a : b;
  const IdSet& large = a.size() <= b.size() ? b : a;
  for (uint32_t id : small) {
    if (large.count(id)) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------
// Deterministic rendering
// ---------------------------------------------------------------------------
// Every name is printed as a positional token: ambient entries as a0, a1, ...
// in context order, outputs of step i as si.0, si.1, ... in declaration
// order, lambda binders as b<depth>. The rendering is therefore invariant
// under renaming of bound names.

using NameTokens = std::unordered_map<uint32_t, std::string>;

struct Renderer {
  NameTokens& names;
  int lamDepth = 0;

  std::string tok(const Name& n) {
    auto it = names.find(n.id);
    if (it != names.end()) return it->second;
    return "?" + std::to_string(n.id);
  }

  std::string term(const TermPtr& t) {
    if (const auto* l = std::get_if<Lam>(&t->node)) {
      std::string b = "b" + std::to_string(lamDepth);
      names[l->binder.id] = b;
      ++lamDepth;
      std::string body = term(l->body);
      --lamDepth;
      names.erase(l->binder.id);
      return std::string("(\\") + (l->mod == Mod::Linear ? "^" : "") + b + " " + body + ")";
    }
    if (const auto* a = std::get_if<Atom>(&t->node)) {
      std::string head = head_is_var(a->head) ? tok(std::get<Name>(a->head))
                                              : std::get<ConstRef>(a->head).name;
      if (a->spine.empty()) return head;
      std::string out = "(" + head;
      for (const auto& e : a->spine.elems) {
        out += e.mod == Mod::Linear ? " ^" : " ";
        out += term(e.term);
      }
      return out + ")";
    }
    const Trace& tr = std::get<Braces>(t->node).trace;
    std::string out = "{";
    int k = 0;
    for (const auto& st : tr.steps) {
      const auto* ls = std::get_if<LetStep>(&st);
      if (!ls) return out + "<trace-var>}";
      out += step(*ls, "i" + std::to_string(k++));
    }
    return out + "}";
  }

  std::string type(const TypePtr& t) {
    if (const auto* p = std::get_if<TPi>(&t->node)) {
      std::string b = "b" + std::to_string(lamDepth);
      names[p->binder.id] = b;
      ++lamDepth;
      std::string out = std::string("(pi") + (p->mod == Mod::Linear ? "^ " : " ") + b + " " +
                        type(p->arg) + " " + type(p->body) + ")";
      --lamDepth;
      names.erase(p->binder.id);
      return out;
    }
    if (const auto* a = std::get_if<TAtom>(&t->node)) {
      if (a->spine.empty()) return a->head;
      std::string out = "(" + a->head;
      for (const auto& e : a->spine.elems) out += " " + term(e.term);
      return out + ")";
    }
    return "{" + ctx(std::get<TMonad>(t->node).ctx, "m") + "}";
  }

  std::string ctx(const Context& c, const std::string& prefix) {
    std::string out;
    int k = 0;
    for (const auto& e : c.entries) {
      if (k) out += ",";
      if (const auto* d = std::get_if<Decl>(&e)) {
        std::string b = prefix + std::to_string(k);
        names[d->name.id] = b;
        out += (d->mod == Mod::Linear ? "^" : "!") + b + ":" + type(d->type);
      } else {
        out += tok(std::get<CtxVar>(e).name);
      }
      ++k;
    }
    return out;
  }

  std::string step(const LetStep& ls, const std::string& selfPrefix) {
    std::string out = "(" + ls.rule;
    int k = 0;
    for (const auto& e : ls.outs.entries) {
      if (const auto* d = std::get_if<Decl>(&e)) {
        names[d->name.id] = selfPrefix + "." + std::to_string(k);
      }
      ++k;
    }
    for (const auto& e : ls.spine.elems) {
      out += e.mod == Mod::Linear ? " ^" : " ";
      out += term(e.term);
    }
    out += " =>";
    for (const auto& e : ls.outs.entries) {
      const auto* d = std::get_if<Decl>(&e);
      out += std::string(" ") + (d->mod == Mod::Linear ? "^" : "!") + tok(d->name) + ":" +
             type(d->type);
    }
    return out + ")";
  }
};

}  // namespace

Interface input_interface(const Trace& tr, const Context& ambient) {
  return interfaces(tr, ambient).in;
}

Interface output_interface(const Trace& tr, const Context& ambient) {
  return interfaces(tr, ambient).out;
}

bool independent(const Trace& t1, const Trace& t2, const Context& ambient) {
  Interfaces a = interfaces(t1, ambient);
  Interfaces b = interfaces(t2, ambient);
  return disjoint(a.in.all(), b.out.all()) && disjoint(a.out.all(), b.in.all());
}

DependenceDag to_dag(const Trace& tr, const Context& ambient) {
  auto steps = view_steps(tr);
  auto mods = modality_table(steps, ambient);

  NameTokens names;
  std::unordered_map<uint32_t, size_t> ambientPos;
  {
    size_t pos = 0;
    for (const auto& e : ambient.entries) {
      uint32_t id = std::holds_alternative<Decl>(e) ? std::get<Decl>(e).name.id
                                                    : std::get<CtxVar>(e).name.id;
      names.emplace(id, "a" + std::to_string(pos));
      ambientPos.emplace(id, pos);
      ++pos;
    }
  }
  std::unordered_map<uint32_t, size_t> producer;
  for (size_t i = 0; i < steps.size(); ++i) {
    size_t k = 0;
    for (const auto& e : steps[i].step->outs.entries) {
      const auto& d = std::get<Decl>(e);
      names[d.name.id] = "s" + std::to_string(i) + "." + std::to_string(k++);
      producer.emplace(d.name.id, i);
    }
  }

  DependenceDag dag;
  IdSet rootSet;
  for (size_t i = 0; i < steps.size(); ++i) {
    for (uint32_t id : steps[i].used) {
      auto it = producer.find(id);
      if (it != producer.end()) {
        if (it->second >= i) {
          throw TraceAlgebraError("name with id " + std::to_string(id) +
                                  " is used before the step that binds it");
        }
        dag.edges.push_back({it->second, i, id, mods.at(id) == Mod::Linear});
      } else if (ambientPos.count(id)) {
        rootSet.insert(id);
      } else {
        throw TraceAlgebraError("name with id " + std::to_string(id) +
                                " is not bound by the trace or its ambient context");
      }
    }
    Renderer r{names};
    DependenceDag::Node node;
    node.rule = steps[i].rule;
    node.skeleton = r.step(*steps[i].step, "s" + std::to_string(i));
    for (const auto& e : steps[i].step->outs.entries) {
      node.outs.push_back(std::get<Decl>(e).name.id);
    }
    dag.nodes.push_back(std::move(node));
  }

  for (uint32_t id : rootSet) dag.roots.push_back({id, names.at(id)});
  std::sort(dag.roots.begin(), dag.roots.end(), [&](const auto& a, const auto& b) {
    return ambientPos.at(a.name) < ambientPos.at(b.name);
  });
  std::sort(dag.edges.begin(), dag.edges.end(), [](const auto& a, const auto& b) {
    return std::tie(a.from, a.to, a.name) < std::tie(b.from, b.to, b.name);
  });
  dag.edges.erase(std::unique(dag.edges.begin(), dag.edges.end(),
                              [](const auto& a, const auto& b) {
                                return a.from == b.from && a.to == b.to && a.name == b.name;
                              }),
                  dag.edges.end());
  return dag;
}

std::string dag_sexp(const DependenceDag& dag) {
  std::ostringstream os;
  os << "(dag";
  os << " (roots";
  for (const auto& r : dag.roots) os << " " << r.token;
  os << ")";
  for (size_t i = 0; i < dag.nodes.size(); ++i) {
    os << " (node " << i << " " << dag.nodes[i].skeleton << ")";
  }
  for (const auto& e : dag.edges) {
    size_t slot = 0;
    const auto& outs = dag.nodes[e.from].outs;
    for (size_t k = 0; k < outs.size(); ++k) {
      if (outs[k] == e.name) slot = k;
    }
    os << " (" << (e.linear ? "consume" : "use") << " s" << e.from << "." << slot << " by "
       << e.to << ")";
  }
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------
// Equality
// ---------------------------------------------------------------------------

namespace {

struct StepInfo {
  const LetStep* step = nullptr;
  IdSet used;
  IdSet produced;
  std::vector<size_t> preds;  // steps this one depends on
};

// Extracts steps with their def-use predecessors; nullopt when the trace is
// ill-scoped or mentions trace variables.
std::optional<std::vector<StepInfo>> analyze(const Trace& tr, const IdSet& ambientIds) {
  std::vector<StepInfo> infos;
  std::unordered_map<uint32_t, size_t> producer;
  for (size_t i = 0; i < tr.steps.size(); ++i) {
    const auto* ls = std::get_if<LetStep>(&tr.steps[i]);
    if (!ls) return std::nullopt;
    StepInfo info;
    info.step = ls;
    free_vars(ls->spine, info.used);
    IdSet tyUses;
    for (const auto& e : ls->outs.entries) {
      const auto* d = std::get_if<Decl>(&e);
      if (!d) return std::nullopt;
      free_vars(d->type, tyUses);
      info.produced.insert(d->name.id);
    }
    for (uint32_t id : info.produced) tyUses.erase(id);
    info.used.insert(tyUses.begin(), tyUses.end());
    std::set<size_t> predSet;
    for (uint32_t id : info.used) {
      auto it = producer.find(id);
      if (it != producer.end()) {
        predSet.insert(it->second);
      } else if (!ambientIds.count(id)) {
        return std::nullopt;  // unbound or used before bound
      }
    }
    info.preds.assign(predSet.begin(), predSet.end());
    for (uint32_t id : info.produced) {
      if (producer.count(id) || ambientIds.count(id)) return std::nullopt;  // rebinding
      producer.emplace(id, i);
    }
    infos.push_back(std::move(info));
  }
  return infos;
}

bool outs_match(const Context& a, const Context& b, AlphaMap& m) {
  if (a.entries.size() != b.entries.size()) return false;
  // Outputs may depend on earlier outputs of the same step, so extend the
  // correspondence entry by entry.
  for (size_t i = 0; i < a.entries.size(); ++i) {
    const auto& da = std::get<Decl>(a.entries[i]);
    const auto& db = std::get<Decl>(b.entries[i]);
    if (da.mod != db.mod) return false;
    if (!alpha_eq(da.type, db.type, m)) return false;
    m.bind(da.name.id, db.name.id);
  }
  return true;
}

struct Matcher {
  const std::vector<StepInfo>& as;
  const std::vector<StepInfo>& bs;
  std::vector<bool> bUsed;

  bool ready(size_t j) const {
    for (size_t p : bs[j].preds) {
      if (!bUsed[p]) return false;
    }
    return true;
  }

  bool run(size_t i, AlphaMap& m) {
    if (i == as.size()) return true;
    const StepInfo& a = as[i];
    for (size_t j = 0; j < bs.size(); ++j) {
      if (bUsed[j] || !ready(j)) continue;
      const StepInfo& b = bs[j];
      if (a.step->rule != b.step->rule) continue;
      AlphaMap m2 = m;
      if (!alpha_eq(a.step->spine, b.step->spine, m2)) continue;
      if (!outs_match(a.step->outs, b.step->outs, m2)) continue;
      bUsed[j] = true;
      if (run(i + 1, m2)) {
        m = std::move(m2);
        return true;
      }
      bUsed[j] = false;
    }
    return false;
  }
};

bool has_var_step(const Trace& t) {
  for (const auto& s : t.steps) {
    if (std::holds_alternative<VarStep>(s)) return true;
  }
  return false;
}

}  // namespace

bool trace_equal(const Trace& a, const Trace& b, const Context& ambient) {
  if (a.steps.size() != b.steps.size()) return false;
  if (has_var_step(a) || has_var_step(b)) {
    // Traces over step variables are compared positionally.
    return alpha_eq(a, b);
  }
  IdSet ambientIds;
  for (const auto& e : ambient.entries) {
    if (const auto* d = std::get_if<Decl>(&e)) {
      ambientIds.insert(d->name.id);
    } else {
      ambientIds.insert(std::get<CtxVar>(e).name.id);
    }
  }
  auto ia = analyze(a, ambientIds);
  auto ib = analyze(b, ambientIds);
  if (!ia || !ib) return false;

  // Quick screen: the multiset of rule names must agree.
  std::map<std::string, int> ra, rb;
  for (const auto& s : *ia) ++ra[s.step->rule];
  for (const auto& s : *ib) ++rb[s.step->rule];
  if (ra != rb) return false;

  Matcher mm{*ia, *ib, std::vector<bool>(ib->size(), false)};
  AlphaMap m;
  return mm.run(0, m);
}

}  // namespace clf
