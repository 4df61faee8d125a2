#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fstream>
#include <sstream>

#include "clf/parser.hpp"
#include "clf/printer.hpp"
#include "clf/subst.hpp"

using namespace clf;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE_MESSAGE(in.good(), "cannot open ", path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

struct Corpus {
  Signature sig;
  std::vector<NamedContext> contexts;
  std::vector<NamedTrace> traces;

  const Context& ctx(const std::string& name) const {
    for (const auto& c : contexts) {
      if (c.name == name) return c.ctx;
    }
    REQUIRE_MESSAGE(false, "no context named ", name);
    static Context none;
    return none;
  }

  const Trace& trace(const std::string& name) const {
    for (const auto& t : traces) {
      if (t.name == name) return t.trace;
    }
    REQUIRE_MESSAGE(false, "no trace named ", name);
    static Trace none;
    return none;
  }
};

Corpus load_corpus() {
  Corpus c;
  for (const char* f : {"stlc.clf", "step.clf", "gen.clf", "traces.clf"}) {
    std::string path = std::string(CORPUS_DIR) + "/" + f;
    ParsedFile pf = parse_clf(slurp(path), f, c.sig, &c.contexts);
    for (auto& nc : pf.contexts) c.contexts.push_back(std::move(nc));
    for (auto& nt : pf.traces) c.traces.push_back(std::move(nt));
  }
  return c;
}

}  // namespace

TEST_CASE("corpus parses and every entry round-trips through the printer") {
  Corpus c = load_corpus();
  CHECK(c.sig.size() == 23);
  CHECK(c.contexts.size() == 3);
  CHECK(c.traces.size() == 3);

  for (const auto& e : c.sig.entries()) {
    Printer pr(c.sig);
    std::string text = pr.entry(e);
    CAPTURE(text);
    Signature sig2;
    // Re-parse against a signature that already holds everything declared
    // before this entry.
    for (const auto& prev : c.sig.entries()) {
      if (prev.name == e.name) break;
      sig2.add(prev);
    }
    ParsedFile pf = parse_clf(text, "<reprint>", sig2);
    REQUIRE(pf.newConstants.size() == 1);
    const SigEntry* back = sig2.find(e.name);
    REQUIRE(back != nullptr);
    REQUIRE(back->is_kind() == e.is_kind());
    if (e.is_kind()) {
      CHECK(alpha_eq(back->kind(), e.kind()));
    } else {
      CHECK(alpha_eq(back->type(), e.type()));
    }
  }
}

TEST_CASE("context and trace blocks round-trip through the printer") {
  Corpus c = load_corpus();
  for (const auto& nc : c.contexts) {
    Printer pr(c.sig);
    std::string text = pr.str(nc.ctx);
    CAPTURE(text);
    Context back = parse_context(text, c.sig);
    CHECK(alpha_eq(back, nc.ctx));
  }
  for (const auto& nt : c.traces) {
    Printer pr(c.sig);
    std::string text = pr.str(nt.trace);
    CAPTURE(text);
    const Context& scope = c.ctx(nt.from);
    Trace back = parse_trace(text, c.sig, scope);
    CHECK(alpha_eq(back, nt.trace));
  }
}

TEST_CASE("under-applied heads are eta-expanded during elaboration") {
  Corpus c = load_corpus();
  const SigEntry* vl = c.sig.find("value/lam");
  REQUIRE(vl != nullptr);
  // The conclusion's argument `lam e` must have become `lam (\x. e x)`.
  Signature sig2;
  for (const auto& e : c.sig.entries()) {
    if (e.name == "value/lam") break;
    sig2.add(e);
  }
  ParsedFile pf = parse_clf("value/lam : Pi e : exp -> exp. value (lam (\\x. e x)).",
                            "<explicit>", sig2);
  REQUIRE(pf.newConstants.size() == 1);
  CHECK(alpha_eq(sig2.find("value/lam")->type(), vl->type()));

  // A bare constant in a synthesizing position expands fully.
  TermPtr t = parse_term("lam", c.sig, nullptr);
  TermPtr expl = parse_term("\\f. lam (\\x. f x)", c.sig,
                            parse_type("(exp -> exp) -> exp", c.sig));
  CHECK(alpha_eq(t, expl));
}

TEST_CASE("eta expansion is not used to paper over shape errors") {
  Corpus c = load_corpus();
  TypePtr expT = parse_type("exp", c.sig);
  // `lam` alone is not an expression.
  CHECK_THROWS_AS(parse_term("lam", c.sig, expT), ParseError);
  // A function-typed argument cannot sit where a base type is required.
  CHECK_THROWS_AS(parse_term("lam (lam (\\x. x))", c.sig,
                             parse_type("(exp -> exp) -> exp", c.sig)),
                  ParseError);
}

TEST_CASE("malformed declarations are rejected") {
  Corpus c = load_corpus();
  auto bad = [&](const std::string& text) {
    Signature sig2;
    for (const auto& e : c.sig.entries()) sig2.add(e);
    CHECK_THROWS_AS(parse_clf(text, "<bad>", sig2), ParseError);
  };
  bad("z1 : exp -> mystery.");                   // undeclared family
  bad("z2 : of.");                               // family underapplied
  bad("z3 : of (lam (\\x. x)).");                // still underapplied
  bad("z4 : lam -> exp.");                       // term constant as a type
  bad("z5 : eval ^(lam (\\x. x)) -> type.");     // linear mark on a type argument
  bad("exp : type.");                            // duplicate declaration
  bad("type : exp -> exp.");                     // reserved word as a name
  bad("z6 : Pi x : exp. of x.");                 // underapplied under a binder
  bad("z7 : exp -o type.");                      // kinds take persistent arguments
}

TEST_CASE("malformed terms are rejected") {
  Corpus c = load_corpus();
  TypePtr expT = parse_type("exp", c.sig);
  CHECK_THROWS_AS(parse_term("lam \\x. x", c.sig, expT), ParseError);
  CHECK_THROWS_AS(parse_term("(lam (\\x. x)) (lam (\\y. y))", c.sig, expT), ParseError);
  CHECK_THROWS_AS(parse_term("app (lam (\\x. x))", c.sig, expT), ParseError);
  CHECK_THROWS_AS(parse_term("unknown", c.sig, expT), ParseError);
  CHECK_THROWS_AS(parse_term("\\x. x", c.sig, expT), ParseError);
}

TEST_CASE("trace steps check argument marks against the rule") {
  Corpus c = load_corpus();
  const Context& lam0 = c.ctx("lam0");
  // Missing the linear mark on the consumed fact.
  CHECK_THROWS_AS(
      parse_trace("let { ^r : ret (lam (\\x. x)) d0 } = "
                  "step/eval (lam (\\x. x)) d0 e0 (value/lam (\\x. x))",
                  c.sig, lam0),
      ParseError);
  // Underapplied rule.
  CHECK_THROWS_AS(
      parse_trace("let { ^r : ret (lam (\\x. x)) d0 } = step/eval (lam (\\x. x)) d0 ^e0",
                  c.sig, lam0),
      ParseError);
  // Variable steps are a meta-level construct.
  CHECK_THROWS_AS(parse_trace("e0", c.sig, lam0), ParseError);
}

TEST_CASE("lexing details: arrows split identifiers, dashes do not") {
  Signature sig;
  ParsedFile pf = parse_clf("exp : type. ev-lam' : exp->exp -> type.", "<lex>", sig);
  CHECK(pf.newConstants == std::vector<std::string>{"exp", "ev-lam'"});
  const SigEntry* e = sig.find("ev-lam'");
  REQUIRE(e != nullptr);
  REQUIRE(e->is_kind());
  // exp->exp -> type == exp -> exp -> type
  const auto* k1 = std::get_if<KPi>(&e->kind()->node);
  REQUIRE(k1 != nullptr);
  const auto* k2 = std::get_if<KPi>(&k1->body->node);
  REQUIRE(k2 != nullptr);
  CHECK(std::holds_alternative<KType>(k2->body->node));

  CHECK_THROWS_AS(parse_clf("bad : exp - exp.", "<lex>", sig), ParseError);
}

TEST_CASE("meta declarations parse and round-trip") {
  Corpus c = load_corpus();
  MetaSignature msig;
  std::string text =
      "res-final : Pi^ t : tp. Nabla d. Pi psi : ctx. "
      "Pi s : [!d : dest, psi] step * [!d : dest, psi]. type.\n"
      "claim : Pi^ t : tp. Nabla d. Pi psi : ctx. "
      "Pi s : [!d : dest, psi] step ^1 [psi]. res-final t d [psi] s.";
  parse_mclf(text, "<meta>", c.sig, msig);
  const MetaEntry* rf = msig.find("res-final");
  REQUIRE(rf != nullptr);
  REQUIRE(rf->is_kind());
  const MetaEntry* cl = msig.find("claim");
  REQUIRE(cl != nullptr);
  REQUIRE(!cl->is_kind());

  // binder sort spot checks
  const auto* p1 = std::get_if<MKPi>(&rf->kind()->node);
  REQUIRE(p1 != nullptr);
  CHECK(p1->binder.sort == MBinderSort::ClfTm);
  const auto* p2 = std::get_if<MKPi>(&p1->body->node);
  REQUIRE(p2 != nullptr);
  CHECK(p2->binder.sort == MBinderSort::NameQ);
  const auto* p3 = std::get_if<MKPi>(&p2->body->node);
  REQUIRE(p3 != nullptr);
  CHECK(p3->binder.sort == MBinderSort::Ctx);
  const auto* p4 = std::get_if<MKPi>(&p3->body->node);
  REQUIRE(p4 != nullptr);
  CHECK(p4->binder.sort == MBinderSort::MetaTm);
  REQUIRE(p4->binder.mtype != nullptr);
  const auto* tt = std::get_if<MTTrace>(&p4->binder.mtype->node);
  REQUIRE(tt != nullptr);
  CHECK(tt->sig == "step");
  CHECK(!tt->exactly_one);

  // print -> reparse -> compare
  for (const auto& e : msig.entries()) {
    Printer pr(c.sig);
    std::string printed = pr.entry(e);
    CAPTURE(printed);
    MetaSignature msig2;
    for (const auto& prev : msig.entries()) {
      if (prev.name == e.name) break;
      msig2.add(prev);
    }
    parse_mclf(printed, "<reprint>", c.sig, msig2);
    const MetaEntry* back = msig2.find(e.name);
    REQUIRE(back != nullptr);
    if (e.is_kind()) {
      CHECK(alpha_eq(back->kind(), e.kind()));
    } else {
      CHECK(alpha_eq(back->type(), e.type()));
    }
  }

  CHECK_THROWS_AS(
      parse_mtype("[!d : dest] step ^2 [!d : dest]", c.sig, msig), ParseError);
}

TEST_CASE("hereditary substitution agrees with a redex-free reading") {
  Corpus c = load_corpus();
  // ((\x. app x x) e) under substitution of e for the bound variable.
  TypePtr expT = parse_type("exp", c.sig);
  TermPtr e = parse_term("lam (\\y. y)", c.sig, expT);
  Name x = fresh_name("x");
  TermPtr body = [&] {
    // app x x with x free
    Spine sp;
    sp.elems.push_back({Mod::Persistent, m_var(x)});
    sp.elems.push_back({Mod::Persistent, m_var(x)});
    return m_const("app", sp);
  }();
  TermPtr r = hsubst(body, x.id, e, erase(expT));
  TermPtr expect = parse_term("app (lam (\\y. y)) (lam (\\y. y))", c.sig, expT);
  CHECK(alpha_eq(r, expect));

  // Hereditary collapse: substituting \z. z for f in (f e) yields e.
  Name f = fresh_name("f");
  Spine sp;
  sp.elems.push_back({Mod::Persistent, e});
  TermPtr fe = m_atom(Head{f}, sp);
  TypePtr fT = parse_type("exp -> exp", c.sig);
  Name z = fresh_name("z");
  TermPtr idf = m_lam(Mod::Persistent, z, m_var(z));
  TermPtr r2 = hsubst(fe, f.id, idf, erase(fT));
  CHECK(alpha_eq(r2, e));
}
