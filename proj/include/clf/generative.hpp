#pragma once

#include <cstdint>
#include <set>
#include <stdexcept>
#include <string>

#include "clf/ast.hpp"
#include "clf/engine.hpp"

namespace clf {

struct GenerativeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Symbol classification of a grammar signature. Nonterminals are the families
// a production consumes; terminals are the families productions produce but
// never consume, including any persistent support families.
struct GrammarInfo {
  std::set<std::string> nonterminals;
  std::set<std::string> terminals;

  bool is_nonterminal(const std::string& family) const { return nonterminals.count(family) != 0; }
};

// Scans every monadic rule of `grammar`. Throws GenerativeError when the
// signature lies outside the generative fragment: a rule consuming more than
// one linear fact (a production rewrites at most the one nonterminal), or a
// family that is both produced persistently and consumed linearly.
GrammarInfo classify_symbols(const Signature& grammar);

enum class GenStatus {
  Complete,  // maximal and free of nonterminal facts
  Budget,    // step budget exhausted first
  Stuck      // maximal, but a nonterminal fact has no production left
};

struct GenResult {
  State state;
  Trace trace;
  GenStatus status = GenStatus::Complete;
};

// Runs the grammar from `seed`, which must declare exactly one linear
// nonterminal fact plus the persistent declarations its type needs. Premise
// solving is randomized by the scheduler seed, so distinct seeds sample
// distinct states; premise-free productions never fire on their own.
GenResult generate_state(const Signature& grammar, const Context& seed, const Scheduler& sched,
                         size_t maxSteps);

enum class ValidateStatus { Valid, Invalid, OutOfBudget };

struct ValidateResult {
  ValidateStatus status = ValidateStatus::Invalid;
  Trace trace;         // set iff status == Valid
  std::string reason;  // set iff status != Valid
};

// Decides whether `state` is derivable from `seed` by the grammar, returning
// a derivation that replays through the trace checker and reproduces `state`
// up to reordering (declared names are reused verbatim). Grammars whose facts
// are linked into a tree by a destination-like family are parsed goal-directed
// from the seed destination in near-linear time; other grammars fall back to
// bounded search, whose exhaustion is reported as OutOfBudget, distinct from
// definite failure.
ValidateResult validate_state(const State& state, const Signature& grammar, const Context& seed,
                              int64_t searchBudget = -1);

}  // namespace clf
