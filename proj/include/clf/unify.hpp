#pragma once

#include <map>
#include <stdexcept>

#include "clf/ast.hpp"
#include "clf/subst.hpp"

namespace clf {

struct UnifyError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Declares which names act as solvable variables during unification, keyed by
// id, each with the erased shape of its type (needed to apply solutions
// hereditarily). The full classifier is kept as well, so callers can
// synthesize an inhabitant for a metavariable no constraint ever determined.
struct MetaSet {
  std::map<uint32_t, ShapePtr> shapes;
  std::map<uint32_t, TypePtr> classifiers;

  bool is_meta(uint32_t id) const { return shapes.count(id) != 0; }
  void declare(const Name& n, const TypePtr& ty) {
    shapes[n.id] = erase(ty);
    classifiers[n.id] = ty;
  }
};

// An idempotent-on-read assignment of solution terms to metavariables.
// Values may mention metavariables that were still unsolved when the entry
// was created; readers resolve through the map.
struct MetaSubst {
  struct Entry {
    TermPtr value;
    ShapePtr shape;
  };
  std::map<uint32_t, Entry> map;

  const Entry* find(uint32_t id) const {
    auto it = map.find(id);
    return it == map.end() ? nullptr : &it->second;
  }
};

// Structural unification of canonical terms. Metavariables are solved
// first-order; a metavariable applied to distinct variables is solved by
// abstraction (pattern inversion). Non-pattern flexible spines, clashes, and
// occurrences of the metavariable inside its own solution fail. `subst` grows
// monotonically even on failure, so callers that backtrack pass a copy.
bool unify_term(const TermPtr& a, const TermPtr& b, const MetaSet& metas, MetaSubst& subst);
bool unify_type(const TypePtr& a, const TypePtr& b, const MetaSet& metas, MetaSubst& subst);

// Applies `subst` everywhere in the target, reducing redexes hereditarily.
// Throws UnifyError if resolution does not terminate (cyclic solutions).
TermPtr meta_apply(const TermPtr& t, const MetaSubst& subst);
TypePtr meta_apply(const TypePtr& t, const MetaSubst& subst);
Spine meta_apply(const Spine& s, const MetaSubst& subst);
Context meta_apply(const Context& c, const MetaSubst& subst);

// True when no declared metavariable remains free in the target once `subst`
// has been applied.
bool meta_ground(const TermPtr& t, const MetaSet& metas, const MetaSubst& subst);
bool meta_ground(const TypePtr& t, const MetaSet& metas, const MetaSubst& subst);

}  // namespace clf
