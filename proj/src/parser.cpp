#include "clf/parser.hpp"

#include <cctype>
#include <sstream>

#include "clf/printer.hpp"
#include "clf/subst.hpp"

namespace clf {

namespace {

std::string locate(const std::string& file, int line, int col, const std::string& msg) {
  std::ostringstream os;
  os << file << ":" << line << ":" << col << ": " << msg;
  return os.str();
}

}  // namespace

ParseError::ParseError(const std::string& file, int line, int col, const std::string& msg)
    : std::runtime_error(locate(file, line, col, msg)), file(file), line(line), col(col) {}

namespace {

enum class Tok {
  Ident,
  Number,
  Colon,
  Dot,
  Comma,
  Semi,
  LParen,
  RParen,
  LBrace,
  RBrace,
  LBracket,
  RBracket,
  Eq,
  Backslash,
  Caret,
  Bang,
  Star,
  Hash,
  Arrow,  // ->
  Lolli,  // -o
  End,
};

struct Token {
  Tok kind = Tok::End;
  std::string text;
  int line = 1;
  int col = 1;
};

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }

bool ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '\'' || c == '/' ||
         c == '#';
}

class Lexer {
 public:
  Lexer(const std::string& text, std::string file) : s_(text), file_(std::move(file)) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_space();
      Token t;
      t.line = line_;
      t.col = col_;
      if (eof()) {
        t.kind = Tok::End;
        out.push_back(t);
        return out;
      }
      char c = peek();
      if (ident_start(c)) {
        t.kind = Tok::Ident;
        t.text = lex_ident();
      } else if (std::isdigit(static_cast<unsigned char>(c))) {
        t.kind = Tok::Number;
        while (!eof() && std::isdigit(static_cast<unsigned char>(peek()))) t.text += take();
      } else if (c == '-') {
        take();
        if (!eof() && peek() == '>') {
          take();
          t.kind = Tok::Arrow;
        } else if (!eof() && peek() == 'o' && (pos_ + 1 >= s_.size() || !ident_char(s_[pos_ + 1]))) {
          take();
          t.kind = Tok::Lolli;
        } else {
          fail(t, "stray '-' (write '->' or a space-separated '-o')");
        }
      } else {
        take();
        switch (c) {
          case ':': t.kind = Tok::Colon; break;
          case '.': t.kind = Tok::Dot; break;
          case ',': t.kind = Tok::Comma; break;
          case ';': t.kind = Tok::Semi; break;
          case '(': t.kind = Tok::LParen; break;
          case ')': t.kind = Tok::RParen; break;
          case '{': t.kind = Tok::LBrace; break;
          case '}': t.kind = Tok::RBrace; break;
          case '[': t.kind = Tok::LBracket; break;
          case ']': t.kind = Tok::RBracket; break;
          case '=': t.kind = Tok::Eq; break;
          case '\\': t.kind = Tok::Backslash; break;
          case '^': t.kind = Tok::Caret; break;
          case '!': t.kind = Tok::Bang; break;
          case '*': t.kind = Tok::Star; break;
          case '#': t.kind = Tok::Hash; break;
          default: fail(t, std::string("unexpected character '") + c + "'");
        }
      }
      out.push_back(std::move(t));
    }
  }

 private:
  [[noreturn]] void fail(const Token& t, const std::string& msg) {
    throw ParseError(file_, t.line, t.col, msg);
  }

  bool eof() const { return pos_ >= s_.size(); }
  char peek() const { return s_[pos_]; }

  char take() {
    char c = s_[pos_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_space() {
    for (;;) {
      while (!eof() && std::isspace(static_cast<unsigned char>(peek()))) take();
      if (!eof() && peek() == '%') {
        while (!eof() && peek() != '\n') take();
        continue;
      }
      return;
    }
  }

  // Identifiers may contain interior dashes (p/ev-lam) but '->' always ends
  // the token, so `exp->exp` lexes as three tokens.
  std::string lex_ident() {
    std::string out;
    out += take();
    for (;;) {
      if (eof()) break;
      char c = peek();
      if (ident_char(c)) {
        out += take();
        continue;
      }
      if (c == '-' && pos_ + 1 < s_.size() && ident_char(s_[pos_ + 1]) && s_[pos_ + 1] != '#') {
        out += take();
        continue;
      }
      break;
    }
    return out;
  }

  const std::string& s_;
  std::string file_;
  size_t pos_ = 0;
  int line_ = 1;
  int col_ = 1;
};

bool is_reserved(const std::string& s) {
  return s == "Pi" || s == "Nabla" || s == "type" || s == "ctx" || s == "let" || s == "context" ||
         s == "trace" || s == "from";
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class P {
 public:
  P(const std::string& text, std::string file, Signature& sig, MetaSignature* msig, bool meta)
      : file_(std::move(file)), sig_(sig), msig_(msig), meta_(meta) {
    toks_ = Lexer(text, file_).run();
  }

  ParsedFile file(const std::vector<NamedContext>* outer) {
    outer_ = outer;
    ParsedFile out;
    while (!at(Tok::End)) {
      if (!meta_ && at_word("context") && peek(1).kind == Tok::Ident) {
        out.contexts.push_back(context_block());
        continue;
      }
      if (!meta_ && at_word("trace") && peek(1).kind == Tok::Ident) {
        out.traces.push_back(trace_block(out.contexts));
        continue;
      }
      declaration(out);
    }
    return out;
  }

  TypePtr only_type() {
    TypePtr t = p_type();
    expect(Tok::End, "end of input");
    return t;
  }

  TermPtr only_term(const TypePtr& expected) {
    TermPtr t = p_term(expected);
    expect(Tok::End, "end of input");
    return t;
  }

  Context only_context() {
    size_t m = mark();
    Context c = p_ctx_entries(Tok::End);
    pop_to(m);
    expect(Tok::End, "end of input");
    return c;
  }

  Trace only_trace(const Context& scope) {
    size_t m = mark();
    push_context_decls(scope);
    Trace t = p_trace(Tok::End);
    pop_to(m);
    expect(Tok::End, "end of input");
    return t;
  }

  MTypePtr only_mtype() {
    auto cls = p_mclassifier();
    if (std::holds_alternative<MKindPtr>(cls)) {
      fail(peek(), "expected a classifier, found a kind");
    }
    expect(Tok::End, "end of input");
    return std::get<MTypePtr>(cls);
  }

 private:
  // -- token plumbing --------------------------------------------------------

  const Token& peek(size_t k = 0) const {
    size_t i = pos_ + k;
    if (i >= toks_.size()) i = toks_.size() - 1;
    return toks_[i];
  }

  const Token& next() {
    const Token& t = toks_[pos_];
    if (pos_ + 1 < toks_.size()) ++pos_;
    return t;
  }

  bool at(Tok k) const { return peek().kind == k; }
  bool at_word(const char* w) const { return at(Tok::Ident) && peek().text == w; }

  Token expect(Tok k, const char* what) {
    if (!at(k)) fail(peek(), std::string("expected ") + what);
    return next();
  }

  Token expect_word(const char* w) {
    if (!at_word(w)) fail(peek(), std::string("expected '") + w + "'");
    return next();
  }

  [[noreturn]] void fail(const Token& t, const std::string& msg) const {
    std::string shown = msg;
    if (t.kind == Tok::Ident) shown += " (at '" + t.text + "')";
    throw ParseError(file_, t.line, t.col, shown);
  }

  // -- scope ----------------------------------------------------------------

  struct Binding {
    enum class K { Obj, Ctx, Meta, NameQ } kind = K::Obj;
    Name name;
    TypePtr ctype;   // Obj; also cached for embeddable Meta binders
    MTypePtr mtype;  // Meta
  };

  size_t mark() const { return scope_.size(); }
  void pop_to(size_t m) { scope_.resize(m); }

  const Binding* lookup(const std::string& text) const {
    for (auto it = scope_.rbegin(); it != scope_.rend(); ++it) {
      if (it->first == text) return &it->second;
    }
    return nullptr;
  }

  void bind(std::string text, Binding b) { scope_.emplace_back(std::move(text), std::move(b)); }

  void bind_obj(const Name& n, TypePtr t) {
    bind(n.text, Binding{Binding::K::Obj, n, std::move(t), nullptr});
  }

  void push_context_decls(const Context& c) {
    for (const auto& e : c.entries) {
      if (auto* d = std::get_if<Decl>(&e)) bind_obj(d->name, d->type);
    }
  }

  // A meta type built entirely from object material can serve as an object
  // type for occurrences of its variable inside embedded object terms.
  TypePtr mtype_as_ctype(const MTypePtr& t) const {
    if (auto* at = std::get_if<MTAtom>(&t->node)) {
      Spine sp;
      for (const auto& a : at->spine.elems) {
        const auto* mt = std::get_if<MTermPtr>(&a);
        if (!mt) return nullptr;
        TermPtr obj = extract_term(*mt);
        if (!obj) return nullptr;
        sp.elems.push_back({Mod::Persistent, std::move(obj)});
      }
      if (!sig_.declares(at->head)) return nullptr;
      return t_atom(at->head, std::move(sp));
    }
    if (auto* pi = std::get_if<MTPi>(&t->node)) {
      if (pi->binder.sort == MBinderSort::ClfTm) {
        TypePtr body = mtype_as_ctype(pi->body);
        if (!body) return nullptr;
        return t_pi(Mod::Persistent, pi->binder.var, pi->binder.ctype, body);
      }
      if (pi->binder.sort == MBinderSort::MetaTm) {
        TypePtr arg = mtype_as_ctype(pi->binder.mtype);
        TypePtr body = mtype_as_ctype(pi->body);
        if (!arg || !body) return nullptr;
        return t_pi(Mod::Persistent, pi->binder.var, arg, body);
      }
      return nullptr;
    }
    return nullptr;
  }

  // -- declarations and blocks -----------------------------------------------

  void declaration(ParsedFile& out) {
    Token nameTok = expect(Tok::Ident, "a declaration name");
    if (is_reserved(nameTok.text)) fail(nameTok, "'" + nameTok.text + "' is reserved");
    expect(Tok::Colon, "':'");
    size_t m = mark();
    if (meta_) {
      auto cls = p_mclassifier();
      pop_to(m);
      MetaEntry e;
      e.name = nameTok.text;
      e.line = nameTok.line;
      if (std::holds_alternative<MKindPtr>(cls)) {
        e.value = std::get<MKindPtr>(cls);
      } else {
        e.value = std::get<MTypePtr>(cls);
      }
      try {
        msig_->add(std::move(e));
      } catch (const std::invalid_argument& ex) {
        fail(nameTok, ex.what());
      }
    } else {
      auto cls = p_classifier();
      pop_to(m);
      SigEntry e;
      e.name = nameTok.text;
      e.line = nameTok.line;
      if (std::holds_alternative<KindPtr>(cls)) {
        e.value = std::get<KindPtr>(cls);
      } else {
        e.value = std::get<TypePtr>(cls);
      }
      try {
        sig_.add(std::move(e));
      } catch (const std::invalid_argument& ex) {
        fail(nameTok, ex.what());
      }
    }
    out.newConstants.push_back(nameTok.text);
    expect(Tok::Dot, "'.' after the declaration");
  }

  NamedContext context_block() {
    expect_word("context");
    Token nameTok = expect(Tok::Ident, "a context name");
    expect(Tok::LBrace, "'{'");
    size_t m = mark();
    Context c = p_ctx_entries(Tok::RBrace);
    pop_to(m);
    expect(Tok::RBrace, "'}'");
    expect(Tok::Dot, "'.' after the context block");
    return NamedContext{nameTok.text, std::move(c)};
  }

  NamedTrace trace_block(const std::vector<NamedContext>& own) {
    expect_word("trace");
    Token nameTok = expect(Tok::Ident, "a trace name");
    expect_word("from");
    Token fromTok = expect(Tok::Ident, "a context name");
    const Context* from = nullptr;
    for (const auto& nc : own) {
      if (nc.name == fromTok.text) from = &nc.ctx;
    }
    if (!from && outer_) {
      for (const auto& nc : *outer_) {
        if (nc.name == fromTok.text) from = &nc.ctx;
      }
    }
    if (!from) fail(fromTok, "unknown context '" + fromTok.text + "'");
    expect(Tok::LBrace, "'{'");
    size_t m = mark();
    push_context_decls(*from);
    Trace t = p_trace(Tok::RBrace);
    pop_to(m);
    expect(Tok::RBrace, "'}'");
    expect(Tok::Dot, "'.' after the trace block");
    return NamedTrace{nameTok.text, fromTok.text, std::move(t)};
  }

  // -- object-level classifiers ----------------------------------------------

  std::variant<KindPtr, TypePtr> p_classifier() {
    if (at_word("Pi")) {
      Token pi = next();
      if (at(Tok::Caret)) fail(pi, "'Pi^' binders belong to the meta layer");
      Token x = expect(Tok::Ident, "a binder name");
      if (is_reserved(x.text)) fail(x, "'" + x.text + "' is reserved");
      expect(Tok::Colon, "':'");
      TypePtr a = p_type();
      expect(Tok::Dot, "'.'");
      Name xn = fresh_name(x.text);
      size_t m = mark();
      bind_obj(xn, a);
      auto body = p_classifier();
      pop_to(m);
      if (std::holds_alternative<KindPtr>(body)) {
        return k_pi(xn, a, std::get<KindPtr>(body));
      }
      return t_pi(Mod::Persistent, xn, a, std::get<TypePtr>(body));
    }
    if (at_word("type")) {
      next();
      return k_type();
    }
    TypePtr lhs = p_tfactor();
    if (at(Tok::Arrow)) {
      next();
      auto rhs = p_classifier();
      if (std::holds_alternative<KindPtr>(rhs)) {
        return k_pi(fresh_name("_"), lhs, std::get<KindPtr>(rhs));
      }
      return t_pi(Mod::Persistent, fresh_name("_"), lhs, std::get<TypePtr>(rhs));
    }
    if (at(Tok::Lolli)) {
      Token l = next();
      auto rhs = p_classifier();
      if (std::holds_alternative<KindPtr>(rhs)) {
        fail(l, "kinds take persistent arguments only");
      }
      return t_pi(Mod::Linear, fresh_name("_"), lhs, std::get<TypePtr>(rhs));
    }
    return lhs;
  }

  TypePtr p_type() {
    auto cls = p_classifier();
    if (std::holds_alternative<KindPtr>(cls)) {
      fail(peek(), "'type' cannot appear inside a type");
    }
    return std::get<TypePtr>(cls);
  }

  TypePtr p_tfactor() {
    if (at(Tok::LBrace)) {
      next();
      size_t m = mark();
      Context c = p_ctx_entries(Tok::RBrace);
      pop_to(m);
      expect(Tok::RBrace, "'}'");
      return t_monad(std::move(c));
    }
    if (at(Tok::LParen)) {
      next();
      TypePtr t = p_type();
      expect(Tok::RParen, "')'");
      return t;
    }
    Token h = expect(Tok::Ident, "a type");
    if (is_reserved(h.text)) fail(h, "'" + h.text + "' is reserved");
    if (lookup(h.text)) fail(h, "variable '" + h.text + "' used as a type family");
    const SigEntry* e = sig_.find(h.text);
    if (!e) fail(h, "undeclared type family '" + h.text + "'");
    if (!e->is_kind()) fail(h, "term constant '" + h.text + "' used in type position");
    KindPtr k = e->kind();
    Spine args;
    while (at_arg_start()) {
      if (at(Tok::Caret)) fail(peek(), "type-level arguments are persistent");
      auto* kp = std::get_if<KPi>(&k->node);
      if (!kp) fail(peek(), "too many arguments to type family '" + h.text + "'");
      TermPtr a = p_term_atom(kp->arg);
      k = hsubst(kp->body, kp->binder.id, a, erase(kp->arg));
      args.elems.push_back({Mod::Persistent, std::move(a)});
    }
    if (std::holds_alternative<KPi>(k->node)) {
      fail(h, "type family '" + h.text + "' is underapplied");
    }
    return t_atom(h.text, std::move(args));
  }

  // -- contexts ---------------------------------------------------------------

  // Entries up to (not consuming) `closer`. New declaration names are bound
  // for the remainder of the literal; names already in scope are reused, so a
  // literal can re-declare an outer name (the meta layer's trace interfaces
  // rely on this).
  Context p_ctx_entries(Tok closer, bool allowCtxVars = false) {
    Context c;
    if (at(closer)) return c;
    for (;;) {
      if (at(Tok::Bang) || at(Tok::Caret) ||
          (at(Tok::Ident) && peek(1).kind == Tok::Colon)) {
        Mod mod = Mod::Linear;
        if (at(Tok::Bang)) {
          next();
          mod = Mod::Persistent;
        } else if (at(Tok::Caret)) {
          next();
        }
        Token x = expect(Tok::Ident, "a declaration name");
        if (is_reserved(x.text)) fail(x, "'" + x.text + "' is reserved");
        expect(Tok::Colon, "':'");
        Name n;
        const Binding* b = lookup(x.text);
        if (b) {
          if (b->kind == Binding::K::Ctx) {
            fail(x, "context variable '" + x.text + "' redeclared as an object");
          }
          n = b->name;
        } else {
          n = fresh_name(x.text);
        }
        TypePtr t = p_type();
        bind_obj(n, t);
        c.push(Decl{mod, n, std::move(t)});
      } else if (at(Tok::Ident)) {
        Token x = next();
        const Binding* b = lookup(x.text);
        if (!allowCtxVars || !b || b->kind != Binding::K::Ctx) {
          fail(x, "unknown context variable '" + x.text + "'");
        }
        c.push(CtxVar{b->name});
      } else {
        fail(peek(), "expected a context entry");
      }
      if (at(Tok::Comma)) {
        next();
        continue;
      }
      return c;
    }
  }

  // -- terms ------------------------------------------------------------------

  bool at_arg_start() const {
    switch (peek().kind) {
      case Tok::LParen:
      case Tok::LBrace:
      case Tok::Caret:
        return true;
      case Tok::Ident:
        return !is_reserved(peek().text);
      default:
        return false;
    }
  }

  bool at_marg_start() const {
    return at_arg_start() || at(Tok::LBracket) || at(Tok::Hash);
  }

  struct Resolved {
    Head head;
    TypePtr type;  // null when unknown (pure names)
  };

  Resolved resolve_head(const Token& h) {
    if (is_reserved(h.text)) fail(h, "'" + h.text + "' is reserved");
    if (const Binding* b = lookup(h.text)) {
      switch (b->kind) {
        case Binding::K::Obj: return {Head{b->name}, b->ctype};
        case Binding::K::NameQ: return {Head{b->name}, nullptr};
        case Binding::K::Meta: {
          TypePtr t = b->ctype ? b->ctype : mtype_as_ctype(b->mtype);
          return {Head{b->name}, t};
        }
        case Binding::K::Ctx: fail(h, "context variable '" + h.text + "' used as a term");
      }
    }
    const SigEntry* e = sig_.find(h.text);
    if (!e) fail(h, "undeclared constant '" + h.text + "'");
    if (e->is_kind()) fail(h, "type family '" + h.text + "' used in term position");
    return {Head{ConstRef{h.text}}, e->type()};
  }

  void check_result(const Token& where, const TypePtr& got, const TypePtr& expected) {
    if (!expected || !got) return;
    auto* ga = std::get_if<TAtom>(&got->node);
    auto* ea = std::get_if<TAtom>(&expected->node);
    if (ga && ea) {
      if (ga->head != ea->head) {
        fail(where, "term of type '" + ga->head + "' where '" + ea->head + "' is required");
      }
      return;
    }
    bool gm = std::holds_alternative<TMonad>(got->node);
    bool em = std::holds_alternative<TMonad>(expected->node);
    if (gm != em || (ga != nullptr) != (ea != nullptr)) {
      fail(where, "term does not fit the required type");
    }
  }

  TermPtr p_term(const TypePtr& expected) {
    if (at(Tok::Backslash)) {
      Token l = next();
      Mod mod = Mod::Persistent;
      if (at(Tok::Caret)) {
        next();
        mod = Mod::Linear;
      }
      Token x = expect(Tok::Ident, "a binder name");
      if (is_reserved(x.text)) fail(x, "'" + x.text + "' is reserved");
      expect(Tok::Dot, "'.'");
      if (!expected) fail(l, "cannot infer the type of a lambda here");
      auto* pi = std::get_if<TPi>(&expected->node);
      if (!pi) fail(l, "lambda written against a non-function type");
      if (pi->mod != mod) {
        fail(l, std::string("binder is marked ") + mod_name(mod) + " but the type wants " +
                    mod_name(pi->mod));
      }
      Name xn = fresh_name(x.text);
      Renaming ren;
      ren.emplace(pi->binder.id, xn);
      TypePtr bodyT = rename(pi->body, ren);
      size_t m = mark();
      bind_obj(xn, pi->arg);
      TermPtr body = p_term(bodyT);
      pop_to(m);
      return m_lam(mod, xn, std::move(body));
    }
    if (at(Tok::LBrace)) {
      next();
      size_t m = mark();
      Trace tr = p_trace(Tok::RBrace);
      pop_to(m);
      expect(Tok::RBrace, "'}'");
      return m_braces(std::move(tr));
    }
    if (at(Tok::LParen)) {
      next();
      TermPtr t = p_term(expected);
      expect(Tok::RParen, "')'");
      if (at_arg_start()) fail(peek(), "a parenthesized term cannot be applied");
      return t;
    }
    Token h = expect(Tok::Ident, "a term");
    Resolved r = resolve_head(h);
    Spine args;
    TypePtr cur = r.type;
    while (at_arg_start()) {
      Mod am = Mod::Persistent;
      if (at(Tok::Caret)) {
        next();
        am = Mod::Linear;
      }
      if (!cur) fail(h, "cannot apply '" + h.text + "', whose type is not known here");
      auto* pi = std::get_if<TPi>(&cur->node);
      if (!pi) fail(peek(), "too many arguments to '" + h.text + "'");
      if (pi->mod != am) {
        fail(peek(), std::string("argument is marked ") + mod_name(am) + " but '" + h.text +
                         "' wants a " + mod_name(pi->mod) + " argument here");
      }
      TermPtr a = p_term_atom(pi->arg);
      cur = hsubst(pi->body, pi->binder.id, a, erase(pi->arg));
      args.elems.push_back({am, std::move(a)});
    }
    if (!cur && expected) cur = expected;
    if (cur && expected && !shape_eq(erase(cur), erase(expected))) {
      fail(h, "term headed by '" + h.text + "' does not have the required shape");
    }
    if (cur && std::holds_alternative<TPi>(cur->node)) {
      return eta_expand(r.head, std::move(args), cur);
    }
    check_result(h, cur, expected);
    return m_atom(std::move(r.head), std::move(args));
  }

  TermPtr p_term_atom(const TypePtr& expected) {
    if (at(Tok::LParen)) {
      next();
      TermPtr t = p_term(expected);
      expect(Tok::RParen, "')'");
      return t;
    }
    if (at(Tok::LBrace)) {
      next();
      size_t m = mark();
      Trace tr = p_trace(Tok::RBrace);
      pop_to(m);
      expect(Tok::RBrace, "'}'");
      return m_braces(std::move(tr));
    }
    if (at(Tok::Backslash)) fail(peek(), "parenthesize lambda arguments");
    Token h = expect(Tok::Ident, "a term");
    Resolved r = resolve_head(h);
    TypePtr t = r.type ? r.type : expected;
    if (t && expected && !shape_eq(erase(t), erase(expected))) {
      fail(h, "'" + h.text + "' does not have the required shape here");
    }
    if (t && std::holds_alternative<TPi>(t->node)) {
      return eta_expand(r.head, Spine{}, t);
    }
    check_result(h, t, expected);
    return m_atom(std::move(r.head));
  }

  // -- traces -----------------------------------------------------------------

  Trace p_trace(Tok closer) {
    Trace tr;
    if (at(closer)) return tr;
    for (;;) {
      tr.steps.push_back(p_step());
      if (at(Tok::Semi)) {
        next();
        continue;
      }
      return tr;
    }
  }

  Step p_step() {
    if (at_word("let")) {
      next();
      expect(Tok::LBrace, "'{'");
      Context outs = p_let_outs();
      expect(Tok::RBrace, "'}'");
      expect(Tok::Eq, "'='");
      Token rule = expect(Tok::Ident, "a rule name");
      const SigEntry* e = sig_.find(rule.text);
      if (!e) fail(rule, "undeclared rule '" + rule.text + "'");
      if (e->is_kind()) fail(rule, "'" + rule.text + "' is a type family, not a rule");
      TypePtr cur = e->type();
      Spine args;
      while (at_marg_start()) {
        if (at(Tok::LBracket) || at(Tok::Hash)) {
          fail(peek(), "rule arguments are object-level terms");
        }
        Mod am = Mod::Persistent;
        if (at(Tok::Caret)) {
          next();
          am = Mod::Linear;
        }
        auto* pi = std::get_if<TPi>(&cur->node);
        if (!pi) fail(peek(), "too many arguments to rule '" + rule.text + "'");
        if (pi->mod != am) {
          fail(peek(), std::string("argument is marked ") + mod_name(am) + " but rule '" +
                           rule.text + "' wants a " + mod_name(pi->mod) + " argument here");
        }
        TermPtr a = p_term_atom(pi->arg);
        cur = hsubst(pi->body, pi->binder.id, a, erase(pi->arg));
        args.elems.push_back({am, std::move(a)});
      }
      if (std::holds_alternative<TPi>(cur->node)) {
        fail(rule, "rule '" + rule.text + "' is underapplied in this step");
      }
      if (!std::holds_alternative<TMonad>(cur->node)) {
        fail(rule, "'" + rule.text + "' does not end in a monadic type");
      }
      return LetStep{std::move(outs), rule.text, std::move(args)};
    }
    Token h = expect(Tok::Ident, "a trace step");
    if (!meta_) fail(h, "expected 'let' (variable steps belong to the meta layer)");
    const Binding* b = lookup(h.text);
    if (!b || b->kind != Binding::K::Meta || !mtype_is_trace(b->mtype)) {
      fail(h, "'" + h.text + "' is not a trace variable");
    }
    MSpine sp;
    const MTypePtr* tele = &b->mtype;
    while (at_marg_start()) {
      auto* pi = std::get_if<MTPi>(&(*tele)->node);
      if (!pi) fail(peek(), "too many arguments to trace variable '" + h.text + "'");
      sp.elems.push_back(p_marg_for(pi->binder));
      tele = &pi->body;
    }
    MSpinePtr args;
    if (!sp.empty()) args = std::make_shared<MSpine>(std::move(sp));
    return VarStep{b->name, std::move(args)};
  }

  // Output declarations of a let step always bind fresh names; they scope to
  // the end of the enclosing trace (the caller pops).
  Context p_let_outs() {
    Context c;
    if (at(Tok::RBrace)) return c;
    for (;;) {
      Mod mod = Mod::Linear;
      if (at(Tok::Bang)) {
        next();
        mod = Mod::Persistent;
      } else if (at(Tok::Caret)) {
        next();
      }
      Token x = expect(Tok::Ident, "an output name");
      if (is_reserved(x.text)) fail(x, "'" + x.text + "' is reserved");
      expect(Tok::Colon, "':'");
      TypePtr t = p_type();
      Name n = fresh_name(x.text);
      bind_obj(n, t);
      c.push(Decl{mod, n, std::move(t)});
      if (at(Tok::Comma)) {
        next();
        continue;
      }
      return c;
    }
  }

  // -- meta layer --------------------------------------------------------------

  static bool mtype_is_trace(const MTypePtr& t) {
    if (!t) return false;
    if (std::holds_alternative<MTTrace>(t->node)) return true;
    if (auto* pi = std::get_if<MTPi>(&t->node)) return mtype_is_trace(pi->body);
    return false;
  }

  std::variant<MKindPtr, MTypePtr> p_mclassifier() {
    if (at_word("Pi")) {
      next();
      MBinder b;
      if (at(Tok::Caret)) {
        next();
        b.sort = MBinderSort::ClfTm;
      }
      Token x = expect(Tok::Ident, "a binder name");
      if (is_reserved(x.text)) fail(x, "'" + x.text + "' is reserved");
      expect(Tok::Colon, "':'");
      size_t m = mark();
      Name xn = fresh_name(x.text);
      b.var = xn;
      if (b.sort == MBinderSort::ClfTm) {
        b.ctype = p_type();
        bind_obj(xn, b.ctype);
      } else if (at_word("ctx")) {
        next();
        b.sort = MBinderSort::Ctx;
        bind(x.text, Binding{Binding::K::Ctx, xn, nullptr, nullptr});
      } else {
        b.mtype = p_mtype();
        Binding bd{Binding::K::Meta, xn, nullptr, b.mtype};
        bd.ctype = mtype_as_ctype(b.mtype);
        bind(x.text, std::move(bd));
      }
      expect(Tok::Dot, "'.'");
      auto body = p_mclassifier();
      pop_to(m);
      if (std::holds_alternative<MKindPtr>(body)) {
        return mk_pi(std::move(b), std::get<MKindPtr>(body));
      }
      return mt_pi(std::move(b), std::get<MTypePtr>(body));
    }
    if (at_word("Nabla")) {
      next();
      Token x = expect(Tok::Ident, "a binder name");
      if (is_reserved(x.text)) fail(x, "'" + x.text + "' is reserved");
      expect(Tok::Dot, "'.'");
      MBinder b;
      b.sort = MBinderSort::NameQ;
      Name xn = fresh_name(x.text);
      b.var = xn;
      size_t m = mark();
      bind(x.text, Binding{Binding::K::NameQ, xn, nullptr, nullptr});
      auto body = p_mclassifier();
      pop_to(m);
      if (std::holds_alternative<MKindPtr>(body)) {
        return mk_pi(std::move(b), std::get<MKindPtr>(body));
      }
      return mt_pi(std::move(b), std::get<MTypePtr>(body));
    }
    if (at_word("type")) {
      next();
      return mk_type();
    }
    MTypePtr lhs = p_mtype_factor();
    if (at(Tok::Arrow)) {
      next();
      auto rhs = p_mclassifier();
      MBinder b;
      b.sort = MBinderSort::MetaTm;
      b.var = fresh_name("_");
      b.mtype = lhs;
      if (std::holds_alternative<MKindPtr>(rhs)) {
        return mk_pi(std::move(b), std::get<MKindPtr>(rhs));
      }
      return mt_pi(std::move(b), std::get<MTypePtr>(rhs));
    }
    return lhs;
  }

  MTypePtr p_mtype() {
    auto cls = p_mclassifier();
    if (std::holds_alternative<MKindPtr>(cls)) {
      fail(peek(), "'type' cannot appear inside a classifier");
    }
    return std::get<MTypePtr>(cls);
  }

  MTypePtr p_mtype_factor() {
    if (at(Tok::LBracket)) {
      next();
      size_t m = mark();
      Context pre = p_ctx_entries(Tok::RBracket, /*allowCtxVars=*/true);
      expect(Tok::RBracket, "']'");
      Token slice = expect(Tok::Ident, "a signature name");
      bool one = false;
      if (at(Tok::Star)) {
        next();
      } else if (at(Tok::Caret)) {
        next();
        Token n = expect(Tok::Number, "'1' after '^'");
        if (n.text != "1") fail(n, "only '^1' single-step trace types exist");
        one = true;
      } else {
        fail(peek(), "expected '*' or '^1' after the signature name");
      }
      expect(Tok::LBracket, "'['");
      // Names introduced by the pre-context stay visible in the post-context.
      Context post = p_ctx_entries(Tok::RBracket, /*allowCtxVars=*/true);
      pop_to(m);
      expect(Tok::RBracket, "']'");
      return mt_trace(std::move(pre), slice.text, one, std::move(post));
    }
    if (at(Tok::LParen)) {
      next();
      MTypePtr t = p_mtype();
      expect(Tok::RParen, "')'");
      return t;
    }
    Token h = expect(Tok::Ident, "a classifier");
    if (is_reserved(h.text)) fail(h, "'" + h.text + "' is reserved");
    if (lookup(h.text)) fail(h, "variable '" + h.text + "' used as a type family");
    if (msig_ && msig_->declares(h.text)) {
      const MetaEntry* e = msig_->find(h.text);
      if (!e->is_kind()) fail(h, "'" + h.text + "' is a claim, not a family");
      MSpine sp;
      const MKindPtr* k = &e->kind();
      while (at_marg_start()) {
        auto* kp = std::get_if<MKPi>(&(*k)->node);
        if (!kp) fail(peek(), "too many arguments to '" + h.text + "'");
        sp.elems.push_back(p_marg_for(kp->binder));
        k = &kp->body;
      }
      if (!std::holds_alternative<MKType>((*k)->node)) {
        fail(h, "family '" + h.text + "' is underapplied");
      }
      return mt_atom(h.text, std::move(sp));
    }
    const SigEntry* e = sig_.find(h.text);
    if (!e) fail(h, "undeclared family '" + h.text + "'");
    if (!e->is_kind()) fail(h, "term constant '" + h.text + "' used in type position");
    // An object-level family used as a meta-level atomic type; its arguments
    // are object terms.
    MSpine sp;
    KindPtr k = e->kind();
    while (at_marg_start()) {
      auto* kp = std::get_if<KPi>(&k->node);
      if (!kp) fail(peek(), "too many arguments to type family '" + h.text + "'");
      TermPtr a = p_term_atom(kp->arg);
      k = hsubst(kp->body, kp->binder.id, a, erase(kp->arg));
      sp.elems.push_back(embed_term(a));
    }
    if (std::holds_alternative<KPi>(k->node)) {
      fail(h, "type family '" + h.text + "' is underapplied");
    }
    return mt_atom(h.text, std::move(sp));
  }

  MArg p_marg_for(const MBinder& b) {
    switch (b.sort) {
      case MBinderSort::Ctx: {
        expect(Tok::LBracket, "'[' (a context argument)");
        size_t m = mark();
        Context c = p_ctx_entries(Tok::RBracket, /*allowCtxVars=*/true);
        pop_to(m);
        expect(Tok::RBracket, "']'");
        return c;
      }
      case MBinderSort::NameQ: {
        if (at(Tok::Hash)) {
          next();
          return MFresh{};
        }
        Token x = expect(Tok::Ident, "a name");
        const Binding* bd = lookup(x.text);
        if (!bd || (bd->kind != Binding::K::NameQ && bd->kind != Binding::K::Obj)) {
          fail(x, "'" + x.text + "' is not a name in scope");
        }
        return MTermPtr(mm_var(bd->name));
      }
      case MBinderSort::ClfTm: {
        TermPtr t = p_term_atom(b.ctype);
        return embed_term(t);
      }
      case MBinderSort::MetaTm:
        return p_mterm_atom(b.mtype);
    }
    fail(peek(), "unsupported argument position");
  }

  MTermPtr p_mterm_atom(const MTypePtr& expected) {
    if (at(Tok::LBrace)) {
      next();
      size_t m = mark();
      Trace tr = p_trace(Tok::RBrace);
      pop_to(m);
      expect(Tok::RBrace, "'}'");
      return mm_trace(std::move(tr));
    }
    if (at(Tok::LParen)) {
      next();
      MTermPtr t = p_mterm(expected);
      expect(Tok::RParen, "')'");
      return t;
    }
    if (at(Tok::Backslash)) {
      // A lambda in a meta position: parse at the object level when the
      // expected classifier embeds an object type.
      TypePtr ct = expected ? mtype_as_ctype(expected) : nullptr;
      if (!ct) fail(peek(), "cannot infer an object type for this lambda");
      return embed_term(p_term(ct));
    }
    Token h = expect(Tok::Ident, "a term");
    Resolved r = resolve_head(h);
    TypePtr t = r.type;
    if (!t && expected) t = mtype_as_ctype(expected);
    if (t && std::holds_alternative<TPi>(t->node)) {
      return embed_term(eta_expand(r.head, Spine{}, t));
    }
    return mm_atom(std::move(r.head));
  }

  MTermPtr p_mterm(const MTypePtr& expected) {
    if (at(Tok::LBrace) || at(Tok::Backslash)) return p_mterm_atom(expected);
    if (at(Tok::LParen)) {
      next();
      MTermPtr t = p_mterm(expected);
      expect(Tok::RParen, "')'");
      return t;
    }
    Token h = expect(Tok::Ident, "a term");
    const Binding* b = lookup(h.text);
    if (b && b->kind == Binding::K::Meta && !b->ctype && at_marg_start()) {
      // A meta variable applied to arguments, e.g. a name-quantified trace
      // variable applied to a name.
      MSpine sp;
      const MTypePtr* tele = &b->mtype;
      while (at_marg_start()) {
        auto* pi = std::get_if<MTPi>(&(*tele)->node);
        if (!pi) fail(peek(), "too many arguments to '" + h.text + "'");
        sp.elems.push_back(p_marg_for(pi->binder));
        tele = &pi->body;
      }
      return mm_atom(Head{b->name}, std::move(sp));
    }
    // Otherwise re-parse as an object-flavored application.
    --pos_;
    TypePtr ct = expected ? mtype_as_ctype(expected) : nullptr;
    TermPtr t = p_term(ct);
    return embed_term(t);
  }

  const std::string file_;
  std::vector<Token> toks_;
  size_t pos_ = 0;
  Signature& sig_;
  MetaSignature* msig_ = nullptr;
  bool meta_ = false;
  const std::vector<NamedContext>* outer_ = nullptr;
  std::vector<std::pair<std::string, Binding>> scope_;
};

}  // namespace

ParsedFile parse_clf(const std::string& text, const std::string& filename, Signature& sig,
                     const std::vector<NamedContext>* outerContexts) {
  P p(text, filename, sig, nullptr, /*meta=*/false);
  return p.file(outerContexts);
}

ParsedFile parse_mclf(const std::string& text, const std::string& filename, Signature& sig,
                      MetaSignature& msig) {
  P p(text, filename, sig, &msig, /*meta=*/true);
  return p.file(nullptr);
}

TypePtr parse_type(const std::string& text, const Signature& sig) {
  P p(text, "<type>", const_cast<Signature&>(sig), nullptr, false);
  return p.only_type();
}

TermPtr parse_term(const std::string& text, const Signature& sig, const TypePtr& expected) {
  P p(text, "<term>", const_cast<Signature&>(sig), nullptr, false);
  return p.only_term(expected);
}

Context parse_context(const std::string& text, const Signature& sig) {
  P p(text, "<context>", const_cast<Signature&>(sig), nullptr, false);
  return p.only_context();
}

Trace parse_trace(const std::string& text, const Signature& sig, const Context& scope) {
  P p(text, "<trace>", const_cast<Signature&>(sig), nullptr, false);
  return p.only_trace(scope);
}

MTypePtr parse_mtype(const std::string& text, const Signature& sig, const MetaSignature& msig) {
  P p(text, "<classifier>", const_cast<Signature&>(sig),
    const_cast<MetaSignature*>(&msig), true);
  return p.only_mtype();
}

}  // namespace clf
