#pragma once

#include <stdexcept>

#include "clf/ast.hpp"

namespace clf {

// Modality-erased simple shape of a type. Substitution is directed by shapes
// rather than full types, which keeps termination obvious: every hereditary
// application step strictly shrinks the shape.
struct Shape;
using ShapePtr = std::shared_ptr<const Shape>;

struct Shape {
  enum class K { Base, Arrow, Monad } k = K::Base;
  ShapePtr left, right;  // set iff k == Arrow

  static ShapePtr base();
  static ShapePtr monad();
  static ShapePtr arrow(ShapePtr l, ShapePtr r);
};

ShapePtr erase(const TypePtr& t);
bool shape_eq(const ShapePtr& a, const ShapePtr& b);
std::string shape_str(const ShapePtr& s);

// Raised on shape mismatches (applying a base-shaped value, spilling a spine
// into a monadic value, ...). Substitution never mis-normalizes silently.
struct SubstError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// target[value/x]; `sh` is the erased shape of x's type. Redexes created at
// occurrences of x in head position are resolved hereditarily.
TermPtr hsubst(const TermPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
TypePtr hsubst(const TypePtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
KindPtr hsubst(const KindPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
Spine hsubst(const Spine& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
Context hsubst(const Context& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
Trace hsubst(const Trace& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
MTypePtr hsubst(const MTypePtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
MKindPtr hsubst(const MKindPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
MTermPtr hsubst(const MTermPtr& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);
MSpine hsubst(const MSpine& target, uint32_t x, const TermPtr& value, const ShapePtr& sh);

// Applies `fn` to `args` hereditarily. `sh` is the erased shape of fn's type.
// When fn is (or reduces to) an atom, remaining arguments extend its spine.
TermPtr apply_spine(TermPtr fn, const Spine& args, ShapePtr sh);

// Deep alpha-freshening: every bound name (Pi and lambda binders, monadic
// output names) is renamed to a fresh one. Parsed signature types carry fixed
// binder ids, so any value instantiated from them twice would otherwise bind
// the same id twice within one term.
TermPtr alpha_fresh(const TermPtr& t);
TypePtr alpha_fresh(const TypePtr& t);

// Builds the eta-long term with head `h` applied to the (already eta-long)
// spine `sp` at type `ty`.
TermPtr eta_expand(Head h, Spine sp, const TypePtr& ty);

// Embedding of object-level terms into meta terms. Fails (throws SubstError)
// on linear spine positions, which have no meta-term counterpart.
MTermPtr embed_term(const TermPtr& t);

// Partial inverse of embed_term: null when the meta term uses context,
// fresh-name, or other meta-only arguments.
TermPtr extract_term(const MTermPtr& t);

}  // namespace clf
