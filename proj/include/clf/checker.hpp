#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "clf/ast.hpp"

namespace clf {

struct CheckError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Diagnostic {
  std::string where;  // constant, trace, or judgment the message refers to
  std::string message;
};

struct CheckReport {
  bool ok = true;
  std::vector<Diagnostic> diagnostics;

  void reject(const std::string& where, const std::string& message) {
    ok = false;
    diagnostics.push_back({where, message});
  }
  void absorb(const CheckReport& other) {
    if (!other.ok) ok = false;
    diagnostics.insert(diagnostics.end(), other.diagnostics.begin(), other.diagnostics.end());
  }
};

// Algorithmic replacement for nondeterministic context splitting: one shared
// context plus the set of linear names already consumed. Splits are decided
// lazily by whoever consumes first; exactness is enforced where a split's
// scope closes (binders, persistent arguments, monadic terms, top level).
struct LinearityState {
  Context ctx;     // every declaration in scope, in dependency order
  IdSet consumed;  // linear names already used

  bool is_consumed(uint32_t id) const { return consumed.count(id) > 0; }
};

// Checks every entry under its predecessors; diagnostics accumulate so one
// bad entry does not hide later ones.
CheckReport check_signature(const Signature& sig);

// Formation judgments. Terms occurring inside types may mention any name in
// scope without consuming it (the context is promoted), but lambda binders
// introduced inside such terms keep their own linearity discipline.
CheckReport check_kind_wf(const Context& ctx, const KindPtr& k, const Signature& sig);
CheckReport check_type_wf(const Context& ctx, const TypePtr& t, const Signature& sig);
CheckReport check_context_wf(const Context& base, const Context& entries, const Signature& sig);

// Bidirectional term checking; consumption threads through `state`.
CheckReport check_term(LinearityState& state, const TermPtr& term, const TypePtr& type,
                       const Signature& sig);
// Convenience form that additionally requires every linear declaration of
// `ctx` to be consumed exactly once.
CheckReport check_term(const Context& ctx, const TermPtr& term, const TypePtr& type,
                       const Signature& sig);

struct SpineResult {
  TypePtr residual;  // null when checking failed
  CheckReport report;
};
SpineResult check_spine(LinearityState& state, const Spine& spine, const TypePtr& headType,
                        const Signature& sig);

struct TraceResult {
  Context result;  // context the trace transforms its input into
  CheckReport report;
};
TraceResult check_trace(LinearityState& state, const Trace& trace, const Signature& sig);
TraceResult check_trace(const Context& pre, const Trace& trace, const Signature& sig);

// Equivalence of ground contexts: a modality- and type-respecting bijection
// between declarations, up to renaming of the declared names themselves.
// Free names inside types must coincide. Reordering is implicitly
// dependency-respecting, since declaration order is a topological order of
// any well-formed context.
bool context_equiv(const Context& a, const Context& b);

// Frame property runner: given an accepted pre |- trace :: post, checks the
// same trace under pre extended with `extra` and verifies the result is post
// extended with `extra`. Throws CheckError if `extra` clashes with names
// bound by pre or by the trace.
bool frame_check(const Context& extra, const Trace& trace, const Context& pre,
                 const Context& post, const Signature& sig);

}  // namespace clf
