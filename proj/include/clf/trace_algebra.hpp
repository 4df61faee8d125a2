#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "clf/ast.hpp"

namespace clf {

struct TraceAlgebraError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An interface is a set of names split by the modality recorded at each
// name's binding site (an ambient declaration or a step output).
struct Interface {
  IdSet linear;
  IdSet persistent;

  IdSet all() const;
  bool operator==(const Interface& o) const;
};

// Input interface: the names a trace requires from its surroundings.
//   in(empty)        = {}
//   in(let D = c S)  = FV(S)
//   in(e1 ; e2)      = in(e1) u (in(e2) \ out(e1))
Interface input_interface(const Trace& tr, const Context& ambient);

// Output interface: the names a trace leaves available afterwards.
//   out(empty)       = {}
//   out(let D = c S) = dom(D)
//   out(e1 ; e2)     = out(e2) u (out(e1) \ in(e2)) u persistent(out(e1))
// Persistent outputs are never consumed away; linear outputs survive only
// while unconsumed.
Interface output_interface(const Trace& tr, const Context& ambient);

// True iff in(t1) # out(t2) and out(t1) # in(t2), with modalities pooled.
bool independent(const Trace& t1, const Trace& t2, const Context& ambient);

// Dependence structure of a trace: one node per step, a def-use edge from the
// step (or ambient context, for roots) that binds a name to each step using
// it. Topological orders of the DAG are exactly the step orders equal to the
// input trace.
struct DependenceDag {
  struct Node {
    std::string rule;
    std::string skeleton;        // deterministic rendering of spine and outputs
    std::vector<uint32_t> outs;  // bound names, in declaration order
  };
  std::vector<Node> nodes;  // in source order
  struct Edge {
    size_t from = 0;    // producer step
    size_t to = 0;      // consumer step
    uint32_t name = 0;  // the produced name the consumer mentions
    bool linear = false;
  };
  std::vector<Edge> edges;
  struct Root {
    uint32_t name = 0;  // ambient name the trace uses
    std::string token;  // positional token matching the skeleton rendering
  };
  std::vector<Root> roots;  // ordered by ambient position
};

DependenceDag to_dag(const Trace& tr, const Context& ambient);

// Deterministic S-expression dump of a DAG (stable across runs for the same
// input trace).
std::string dag_sexp(const DependenceDag& dag);

// Decides trace equality: same steps up to a bijection of bound output names
// and reordering compatible with the def-use dependencies (the congruence
// generated by the monoid laws and permutation of independent steps).
// Free names must coincide, so both traces must be read over the same
// ambient context. Ill-scoped input is never equal to anything.
bool trace_equal(const Trace& a, const Trace& b, const Context& ambient);

}  // namespace clf
