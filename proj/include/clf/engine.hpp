#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "clf/ast.hpp"
#include "clf/unify.hpp"

namespace clf {

struct EngineError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One telescope entry of a rule or clause classifier, classified by role:
// a quantified argument (the binder occurs later in the classifier), a
// linear premise, or a persistent premise.
struct RuleItem {
  enum class Kind { Arg, LinearPremise, PersistentPremise };
  Kind kind = Kind::Arg;
  Name binder;    // fresh per instantiation
  Name original;  // binder as written in the signature (Arg only)
  TypePtr type;
};

// Structural view of a classifier: its telescope plus the tail, which is
// monadic for rewriting rules and atomic for backward-chaining clauses.
struct RuleView {
  std::vector<RuleItem> items;
  TypePtr tail;

  bool monadic() const { return tail && std::holds_alternative<TMonad>(tail->node); }
  const Context& outs() const { return std::get<TMonad>(tail->node).ctx; }
};

// Alpha-fresh structural view of `ruleType`; every bound name is renamed so
// repeated instantiations never collide. `original` binders keep the names as
// written. Returns nothing for classifiers outside the rule fragment.
std::optional<RuleView> rule_view(const TypePtr& ruleType);

// A multiset rewriting state: ground atomic facts plus a counter backing
// fresh-name generation. Facts are kept in dependency order, so the context
// is usable directly as the pre-context of an emitted trace.
struct State {
  Context facts;
  uint64_t freshCounter = 0;
};

// Validates that `facts` is a ground context of atomic, well-scoped fact
// types and wraps it in a State. Throws EngineError otherwise.
State make_state(const Context& facts);

// One way of firing one rule on a state: which linear facts it consumes, how
// its quantified variables are instantiated, and proofs for its persistent
// premises.
struct Match {
  std::string rule;
  std::vector<Name> consumedLinear;                         // in premise order
  std::vector<std::pair<TypePtr, TermPtr>> persistentSolutions;  // premise, proof
  std::map<uint32_t, TermPtr> instantiation;                // rule binder id -> term
};

struct Scheduler {
  enum class Policy { Random, FirstMatch };
  uint64_t seed = 0;
  Policy policy = Policy::Random;
};

// Knobs threaded through match enumeration.
//  - chainBudget: total backward-chaining attempts allowed per premise; < 0
//    picks a small default proportional to the goal size.
//  - rng: when set, backward chaining shuffles its candidate order, which
//    turns the solving of underdetermined premises into random well-typed
//    term synthesis (grammar generation relies on this).
//  - onlyConsuming: drop matches that consume no linear fact, so rules with
//    no linear premise cannot fire unboundedly during generation.
struct MatchOptions {
  int64_t chainBudget = -1;
  std::mt19937_64* rng = nullptr;
  bool onlyConsuming = false;
};

// Every way to fire some rule of `sig` on `state`: linear premises are
// matched against distinct linear facts (rule-major, then lexicographic in
// fact order), persistent premises are discharged by backward chaining.
// Deterministic for fixed inputs when no rng is supplied.
std::vector<Match> enumerate_matches(const State& state, const Signature& sig);
std::vector<Match> enumerate_matches(const State& state, const Signature& sig,
                                     const MatchOptions& opts);

enum class SolveStatus { Solved, Failed, OutOfBudget };
struct SolveResult {
  SolveStatus status = SolveStatus::Failed;
  TermPtr proof;  // set iff status == Solved
};

// Depth-first backward chaining for an atomic goal over the signature's
// persistent constants, the state's persistent facts, and hypotheses
// introduced for embedded implications. OutOfBudget is reported only when the
// budget ran out somewhere and no proof was found otherwise.
SolveResult solve_persistent(const TypePtr& goal, const Signature& sig, const State& state,
                             int64_t depthBudget);

// Like solve_persistent, but the goal may mention metavariables declared in
// `metas`; bindings discovered during search accumulate in `subst` (on
// success they are consistent with the returned proof, which has `subst`
// applied). Newly created metavariables are added to `metas`. By default,
// clause arguments no subgoal determined are synthesized so the proof comes
// back ground; passing `synthesizeOpen = false` leaves them open instead,
// for callers that gather constraints across several goals before deciding
// genuinely free variables.
SolveResult solve_constrained(const TypePtr& goal, const Signature& sig, const State& state,
                              MetaSet& metas, MetaSubst& subst, int64_t depthBudget,
                              std::mt19937_64* rng = nullptr, bool synthesizeOpen = true);

// Fires `match` on `state`: consumed facts leave, instantiated rule outputs
// enter under fresh names, and the corresponding trace step is returned.
// Throws EngineError when the match is stale (a consumed fact is gone).
std::pair<State, LetStep> apply_step(const State& state, const Match& match,
                                     const Signature& sig);

enum class StopReason { Maximal, Budget };
struct RunResult {
  State state;
  Trace trace;
  StopReason reason = StopReason::Maximal;
};

// Repeatedly fires scheduler-picked matches until none exist or the step
// budget runs out. Identical (state, sig, seed, policy, maxSteps, options)
// produce identical runs.
RunResult run(const State& state, const Signature& sig, const Scheduler& sched, size_t maxSteps);
RunResult run(const State& state, const Signature& sig, const Scheduler& sched, size_t maxSteps,
              const MatchOptions& opts);

// Uniform integer in [0, n) from hand-rolled rejection sampling, so runs are
// reproducible across standard-library implementations. n must be positive.
uint64_t bounded(std::mt19937_64& rng, uint64_t n);

}  // namespace clf
