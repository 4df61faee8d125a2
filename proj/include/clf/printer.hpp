#pragma once

#include <string>

#include "clf/ast.hpp"

namespace clf {

// Renders syntax back to concrete form. Output reparses to an alpha-equal
// tree: binders whose display text collides with another visible name (or a
// signature constant) are disambiguated with prime suffixes.
class Printer {
 public:
  Printer() = default;
  // Seeds the taken-name set so binders never shadow signature constants.
  explicit Printer(const Signature& sig);

  std::string str(const TermPtr& t);
  std::string str(const TypePtr& t);
  std::string str(const KindPtr& k);
  std::string str(const Spine& s);      // leading space before each element
  std::string str(const Context& c);    // comma-separated declarations
  std::string str(const Trace& tr);     // `;`-separated steps, no braces
  std::string str(const MTermPtr& t);
  std::string str(const MTypePtr& t);
  std::string str(const MKindPtr& k);

  std::string entry(const SigEntry& e);    // "name : value."
  std::string entry(const MetaEntry& e);

  // File-level blocks for states and traces.
  std::string context_block(const Context& c);
  std::string trace_block(const Trace& tr);

  std::string display(const Name& n);

 private:
  std::unordered_map<uint32_t, std::string> names_;
  std::unordered_set<std::string> taken_;

  std::string term(const TermPtr& t, bool atomic);
  std::string type(const TypePtr& t, bool atomic);
  std::string kind(const KindPtr& k);
  std::string spine_elem(const SpineElem& e);
  std::string decl(const Decl& d);
  std::string step(const Step& s);
  std::string marg(const MArg& a);
  std::string mterm(const MTermPtr& t, bool atomic);
  std::string mtype(const MTypePtr& t, bool atomic);
  std::string mkind(const MKindPtr& k);
  std::string mbinder_prefix(const MBinder& b);
};

// One-shot helpers (fresh Printer per call).
std::string to_string(const TermPtr& t, const Signature* sig = nullptr);
std::string to_string(const TypePtr& t, const Signature* sig = nullptr);
std::string to_string(const KindPtr& k, const Signature* sig = nullptr);
std::string to_string(const Context& c, const Signature* sig = nullptr);
std::string to_string(const Trace& tr, const Signature* sig = nullptr);
std::string to_string(const MTypePtr& t, const Signature* sig = nullptr);
std::string to_string(const MKindPtr& k, const Signature* sig = nullptr);
std::string to_string(const MTermPtr& t, const Signature* sig = nullptr);

}  // namespace clf
