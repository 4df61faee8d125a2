#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <variant>
#include <vector>

namespace clf {

// Binding discipline of a hypothesis, binder, or spine position.
// Linear resources are consumed exactly once; persistent ones are reusable.
enum class Mod : uint8_t { Linear, Persistent };

inline const char* mod_name(Mod m) {
  return m == Mod::Linear ? "linear" : "persistent";
}

// A variable or nominal constant. `id` is globally unique at creation time;
// `text` is retained for display only. Two names denote the same variable
// iff their ids are equal, so alpha-conversion never rewrites strings.
struct Name {
  uint32_t id = 0;
  std::string text;
};

inline bool operator==(const Name& a, const Name& b) { return a.id == b.id; }
inline bool operator!=(const Name& a, const Name& b) { return a.id != b.id; }

// Draws a fresh id from a process-wide supply.
Name fresh_name(std::string text);

struct Type;
struct Term;
struct Kind;
struct MSpine;

using TypePtr = std::shared_ptr<const Type>;
using TermPtr = std::shared_ptr<const Term>;
using KindPtr = std::shared_ptr<const Kind>;
using MSpinePtr = std::shared_ptr<const MSpine>;

// ---------------------------------------------------------------------------
// Contexts
// ---------------------------------------------------------------------------

// mod name : type. Later declarations of the same context may mention `name`.
struct Decl {
  Mod mod = Mod::Persistent;
  Name name;
  TypePtr type;
};

// A context variable standing for an unknown context suffix/segment.
// Only the meta layer introduces these; object-level contexts are concrete.
struct CtxVar {
  Name name;
};

using CtxEntry = std::variant<Decl, CtxVar>;

struct Context {
  std::vector<CtxEntry> entries;

  bool empty() const { return entries.empty(); }
  size_t size() const { return entries.size(); }
  void push(Decl d) { entries.emplace_back(std::move(d)); }
  void push(CtxVar v) { entries.emplace_back(std::move(v)); }

  const Decl* find(uint32_t id) const;
  bool has_ctx_vars() const;
  // Ids of all declared names (context variables excluded).
  std::vector<uint32_t> dom() const;
};

// ---------------------------------------------------------------------------
// Spines and heads
// ---------------------------------------------------------------------------

struct SpineElem {
  Mod mod = Mod::Persistent;
  TermPtr term;
};

struct Spine {
  std::vector<SpineElem> elems;
  bool empty() const { return elems.empty(); }
  size_t size() const { return elems.size(); }
};

// Reference to a signature constant (by name; signatures are keyed maps).
struct ConstRef {
  std::string name;
};

using Head = std::variant<Name, ConstRef>;

inline bool head_is_var(const Head& h) { return std::holds_alternative<Name>(h); }

// ---------------------------------------------------------------------------
// Traces
// ---------------------------------------------------------------------------

// let {outs} = rule S1 .. Sn
// Consumes the linear arguments referenced by the spine and binds the
// declarations of `outs` for the remainder of the enclosing trace.
struct LetStep {
  Context outs;
  std::string rule;
  Spine spine;
};

// x S1 .. Sn — a trace variable spliced into a trace (meta layer only).
// Arguments use the meta spine grammar; `args` may be null for a bare
// variable occurrence.
struct VarStep {
  Name var;
  MSpinePtr args;
};

using Step = std::variant<LetStep, VarStep>;

struct Trace {
  std::vector<Step> steps;
  bool empty() const { return steps.empty(); }
  size_t size() const { return steps.size(); }
};

// ---------------------------------------------------------------------------
// Types, terms, kinds
// ---------------------------------------------------------------------------

struct TPi {
  Mod mod = Mod::Persistent;  // with Mod::Linear the binder never occurs in body
  Name binder;
  TypePtr arg;
  TypePtr body;
};

// a M1 .. Mn — every argument of a type-level spine is persistent.
struct TAtom {
  std::string head;
  Spine spine;
};

// {ctx} — the monad of traces producing `ctx`.
struct TMonad {
  Context ctx;
};

struct Type {
  std::variant<TPi, TAtom, TMonad> node;
};

struct Lam {
  Mod mod = Mod::Persistent;
  Name binder;
  TermPtr body;
};

struct Atom {
  Head head;
  Spine spine;
};

struct Braces {
  Trace trace;
};

struct Term {
  std::variant<Lam, Atom, Braces> node;
};

struct KType {};

struct KPi {
  Name binder;  // kind-level binders are always persistent
  TypePtr arg;
  KindPtr body;
};

struct Kind {
  std::variant<KType, KPi> node;
};

// Node constructors.
TypePtr t_pi(Mod mod, Name binder, TypePtr arg, TypePtr body);
TypePtr t_atom(std::string head, Spine spine = {});
TypePtr t_monad(Context ctx);
TermPtr m_lam(Mod mod, Name binder, TermPtr body);
TermPtr m_atom(Head head, Spine spine = {});
TermPtr m_var(Name n);
TermPtr m_const(std::string c, Spine spine = {});
TermPtr m_braces(Trace tr);
KindPtr k_type();
KindPtr k_pi(Name binder, TypePtr arg, KindPtr body);

// ---------------------------------------------------------------------------
// Signatures
// ---------------------------------------------------------------------------

struct SigEntry {
  std::string name;
  std::variant<KindPtr, TypePtr> value;
  int line = 0;

  bool is_kind() const { return std::holds_alternative<KindPtr>(value); }
  const KindPtr& kind() const { return std::get<KindPtr>(value); }
  const TypePtr& type() const { return std::get<TypePtr>(value); }
};

class Signature {
 public:
  bool declares(const std::string& name) const { return index_.count(name) != 0; }
  const SigEntry* find(const std::string& name) const;
  // Throws std::invalid_argument on redeclaration.
  void add(SigEntry entry);
  const std::vector<SigEntry>& entries() const { return entries_; }
  size_t size() const { return entries_.size(); }

 private:
  std::vector<SigEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// A named subset of a signature's constants; used to restrict which rules a
// trace may step with while types still elaborate against the full signature.
struct SigSlice {
  std::string name;
  std::unordered_set<std::string> constants;

  bool contains(const std::string& c) const { return constants.count(c) != 0; }
};

// ---------------------------------------------------------------------------
// Meta layer
// ---------------------------------------------------------------------------

struct MType;
struct MKind;
struct MTerm;
using MTypePtr = std::shared_ptr<const MType>;
using MKindPtr = std::shared_ptr<const MKind>;
using MTermPtr = std::shared_ptr<const MTerm>;

// The four binder sorts of the meta layer:
//   MetaTm  x : A        (meta term of meta type A)
//   Ctx     psi : ctx    (context variable)
//   ClfTm   x :^ T       (object-level term of object type T)
//   NameQ   Nabla x      (nominal quantifier; no lambda form exists)
enum class MBinderSort : uint8_t { MetaTm, Ctx, ClfTm, NameQ };

struct MBinder {
  MBinderSort sort = MBinderSort::MetaTm;
  Name var;
  MTypePtr mtype;  // set iff sort == MetaTm
  TypePtr ctype;   // set iff sort == ClfTm
};

// Fresh-name argument `#`.
struct MFresh {};

// Spine argument: a meta term, a context, or a fresh-name request. A bare
// variable argument against a Nabla position is re-read as a name reference
// during checking.
using MArg = std::variant<MTermPtr, Context, MFresh>;

struct MSpine {
  std::vector<MArg> elems;
  bool empty() const { return elems.empty(); }
  size_t size() const { return elems.size(); }
};

struct MTPi {
  MBinder binder;
  MTypePtr body;
};

// a S — meta-level atomic type (family applied to a meta spine).
struct MTAtom {
  std::string head;
  MSpine spine;
};

// [pre] sig * [post]   or   [pre] sig ^1 [post]
// The type of traces rewriting `pre` to `post` using rules drawn from the
// named signature slice; `exactly_one` selects the single-step form.
struct MTTrace {
  Context pre;
  std::string sig;
  bool exactly_one = false;
  Context post;
};

struct MType {
  std::variant<MTPi, MTAtom, MTTrace> node;
};

struct MKType {};

struct MKPi {
  MBinder binder;
  MKindPtr body;
};

struct MKind {
  std::variant<MKType, MKPi> node;
};

// Meta terms: lambdas (binder sort resolved against the expected type),
// atoms (variable or meta constant applied to a meta spine), and trace
// literals.
struct MLamTm {
  Mod mod = Mod::Persistent;  // modality mark, relevant when coerced to an object term
  Name binder;
  MTermPtr body;
};

struct MAtomTm {
  Head head;
  MSpine spine;
};

struct MTraceTm {
  Trace trace;
};

struct MTerm {
  std::variant<MLamTm, MAtomTm, MTraceTm> node;
};

MTypePtr mt_pi(MBinder b, MTypePtr body);
MTypePtr mt_atom(std::string head, MSpine spine = {});
MTypePtr mt_trace(Context pre, std::string sig, bool exactly_one, Context post);
MKindPtr mk_type();
MKindPtr mk_pi(MBinder b, MKindPtr body);
MTermPtr mm_lam(Mod mod, Name binder, MTermPtr body);
MTermPtr mm_atom(Head head, MSpine spine = {});
MTermPtr mm_var(Name n);
MTermPtr mm_trace(Trace tr);

struct MetaEntry {
  std::string name;
  std::variant<MKindPtr, MTypePtr> value;
  int line = 0;

  bool is_kind() const { return std::holds_alternative<MKindPtr>(value); }
  const MKindPtr& kind() const { return std::get<MKindPtr>(value); }
  const MTypePtr& type() const { return std::get<MTypePtr>(value); }
};

class MetaSignature {
 public:
  bool declares(const std::string& name) const { return index_.count(name) != 0; }
  const MetaEntry* find(const std::string& name) const;
  void add(MetaEntry entry);
  const std::vector<MetaEntry>& entries() const { return entries_; }

 private:
  std::vector<MetaEntry> entries_;
  std::unordered_map<std::string, size_t> index_;
};

// ---------------------------------------------------------------------------
// Free variables and renaming
// ---------------------------------------------------------------------------

using IdSet = std::unordered_set<uint32_t>;

// Collects ids of free variable occurrences. Binders (lambda binders, context
// declarations in scope positions, trace step outputs) are subtracted.
void free_vars(const TermPtr& t, IdSet& out);
void free_vars(const TypePtr& t, IdSet& out);
void free_vars(const KindPtr& k, IdSet& out);
void free_vars(const Spine& s, IdSet& out);
void free_vars(const Context& c, IdSet& out);
void free_vars(const Trace& tr, IdSet& out);
void free_vars(const MTypePtr& t, IdSet& out);
void free_vars(const MKindPtr& k, IdSet& out);
void free_vars(const MTermPtr& t, IdSet& out);
void free_vars(const MSpine& s, IdSet& out);

// Nominal renaming: replaces *every* occurrence of a mapped id — binding and
// use positions alike. Used for nominal instantiation and binder refreshing;
// callers are responsible for avoiding capture (fresh targets are always safe).
using Renaming = std::unordered_map<uint32_t, Name>;

TermPtr rename(const TermPtr& t, const Renaming& r);
TypePtr rename(const TypePtr& t, const Renaming& r);
KindPtr rename(const KindPtr& k, const Renaming& r);
Spine rename(const Spine& s, const Renaming& r);
Context rename(const Context& c, const Renaming& r);
Trace rename(const Trace& tr, const Renaming& r);
MTypePtr rename(const MTypePtr& t, const Renaming& r);
MKindPtr rename(const MKindPtr& k, const Renaming& r);
MTermPtr rename(const MTermPtr& t, const Renaming& r);
MSpine rename(const MSpine& s, const Renaming& r);

// ---------------------------------------------------------------------------
// Alpha equality
// ---------------------------------------------------------------------------

// Bound-variable correspondence built up during comparison. Free names must
// match exactly; bound names must correspond bijectively.
struct AlphaMap {
  std::unordered_map<uint32_t, uint32_t> fwd;
  std::unordered_map<uint32_t, uint32_t> bwd;

  void bind(uint32_t a, uint32_t b);
  bool matches(uint32_t a, uint32_t b) const;
};

bool alpha_eq(const TermPtr& a, const TermPtr& b, AlphaMap& m);
bool alpha_eq(const TypePtr& a, const TypePtr& b, AlphaMap& m);
bool alpha_eq(const KindPtr& a, const KindPtr& b, AlphaMap& m);
bool alpha_eq(const Spine& a, const Spine& b, AlphaMap& m);
// Positional comparison; binders of corresponding declarations are matched up.
bool alpha_eq(const Context& a, const Context& b, AlphaMap& m);
bool alpha_eq(const Trace& a, const Trace& b, AlphaMap& m);
bool alpha_eq(const MTypePtr& a, const MTypePtr& b, AlphaMap& m);
bool alpha_eq(const MKindPtr& a, const MKindPtr& b, AlphaMap& m);
bool alpha_eq(const MTermPtr& a, const MTermPtr& b, AlphaMap& m);
bool alpha_eq(const MSpine& a, const MSpine& b, AlphaMap& m);

template <typename T>
bool alpha_eq(const T& a, const T& b) {
  AlphaMap m;
  return alpha_eq(a, b, m);
}

}  // namespace clf
