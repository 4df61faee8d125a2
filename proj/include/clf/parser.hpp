#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "clf/ast.hpp"

namespace clf {

struct ParseError : std::runtime_error {
  std::string file;
  int line = 0;
  int col = 0;

  ParseError(const std::string& file, int line, int col, const std::string& msg);
};

struct NamedContext {
  std::string name;
  Context ctx;
};

// A named trace block together with the named context it starts from.
struct NamedTrace {
  std::string name;
  std::string from;
  Trace trace;
};

struct ParsedFile {
  std::vector<std::string> newConstants;  // declaration order within the file
  std::vector<NamedContext> contexts;
  std::vector<NamedTrace> traces;
};

// Parses object-level source, appending declarations to `sig`. Elaboration is
// type-directed: spines are checked against telescopes and under-applied
// heads are eta-expanded, so every term built here is beta-normal eta-long.
// `outerContexts` supplies named contexts from previously loaded files that
// trace blocks may start `from`.
ParsedFile parse_clf(const std::string& text, const std::string& filename, Signature& sig,
                     const std::vector<NamedContext>* outerContexts = nullptr);

// Parses meta-level source. Declarations go to `msig`; object constants and
// families referenced inside must already be present in `sig`.
ParsedFile parse_mclf(const std::string& text, const std::string& filename, Signature& sig,
                      MetaSignature& msig);

// Single-construct entry points for tests and tools. Each consumes the whole
// input string.
TypePtr parse_type(const std::string& text, const Signature& sig);
TermPtr parse_term(const std::string& text, const Signature& sig, const TypePtr& expected);
Context parse_context(const std::string& text, const Signature& sig);
// `scope` provides the declarations the trace's steps may reference.
Trace parse_trace(const std::string& text, const Signature& sig, const Context& scope);
MTypePtr parse_mtype(const std::string& text, const Signature& sig, const MetaSignature& msig);

}  // namespace clf
