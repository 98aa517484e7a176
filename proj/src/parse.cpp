#include "boltzgen/parse.hpp"

#include <algorithm>
#include <cctype>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

namespace boltzgen {
namespace {

enum class Tok {
  Ident,     // class names, Z, Z_x, Seq/Cycle/Set/MSet
  Nat,
  Header,    // @labelled / @unlabelled
  Equals,
  Plus,
  Star,
  Semicolon,
  LParen,
  RParen,
  Prime,
  End,
};

struct Token {
  Tok kind;
  std::string text;
  SourceSpan span;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) {}

  std::vector<Token> run() {
    std::vector<Token> out;
    for (;;) {
      skip_blank();
      if (pos_ >= src_.size()) break;
      char c = src_[pos_];
      SourceSpan at{line_, col_, 1};
      if (c == '@') {
        std::size_t start = pos_;
        advance();
        while (pos_ < src_.size() && std::isalpha((unsigned char)src_[pos_])) advance();
        at.length = pos_ - start;
        out.push_back({Tok::Header, std::string(src_.substr(start, pos_ - start)), at});
      } else if (std::isdigit((unsigned char)c)) {
        std::size_t start = pos_;
        while (pos_ < src_.size() && std::isdigit((unsigned char)src_[pos_])) advance();
        at.length = pos_ - start;
        out.push_back({Tok::Nat, std::string(src_.substr(start, pos_ - start)), at});
      } else if (std::isalpha((unsigned char)c) || c == '_') {
        std::size_t start = pos_;
        while (pos_ < src_.size() &&
               (std::isalnum((unsigned char)src_[pos_]) || src_[pos_] == '_'))
          advance();
        at.length = pos_ - start;
        out.push_back({Tok::Ident, std::string(src_.substr(start, pos_ - start)), at});
      } else {
        Tok k;
        switch (c) {
          case '=': k = Tok::Equals; break;
          case '+': k = Tok::Plus; break;
          case '*': k = Tok::Star; break;
          case ';': k = Tok::Semicolon; break;
          case '(': k = Tok::LParen; break;
          case ')': k = Tok::RParen; break;
          case '\'': k = Tok::Prime; break;
          default:
            throw ParseError(at, std::string("unexpected character '") + c + "'");
        }
        advance();
        out.push_back({k, std::string(1, c), at});
      }
    }
    out.push_back({Tok::End, "", {line_, col_, 0}});
    return out;
  }

 private:
  void advance() {
    if (src_[pos_] == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    ++pos_;
  }
  void skip_blank() {
    while (pos_ < src_.size()) {
      char c = src_[pos_];
      if (c == '#') {
        while (pos_ < src_.size() && src_[pos_] != '\n') advance();
      } else if (std::isspace((unsigned char)c)) {
        advance();
      } else {
        break;
      }
    }
  }

  std::string_view src_;
  std::size_t pos_ = 0;
  std::size_t line_ = 1, col_ = 1;
};

bool is_construction(const std::string& s) {
  return s == "Seq" || s == "Cycle" || s == "Set" || s == "MSet";
}

class Parser {
 public:
  explicit Parser(std::vector<Token> toks) : toks_(std::move(toks)) {}

  Spec run() {
    Spec spec;
    if (peek().kind == Tok::Header) {
      const std::string& h = peek().text;
      if (h == "@labelled")
        spec.mode = Mode::Labelled;
      else if (h == "@unlabelled")
        spec.mode = Mode::Unlabelled;
      else
        throw ParseError(peek().span, "unknown header " + h + " (expected @labelled or @unlabelled)");
      next();
    }
    // Differential pieces collected separately, then paired up.
    struct PrimedDecl { ClassExpr rhs; SourceSpan at; };
    std::map<std::string, PrimedDecl> primed;
    std::map<std::string, std::pair<std::uint64_t, SourceSpan>> initials;
    std::vector<std::string> order;

    while (peek().kind != Tok::End) {
      Token name = expect(Tok::Ident, "class name");
      if (is_construction(name.text) || name.text == "Z" ||
          name.text.rfind("Z_", 0) == 0)
        throw ParseError(name.span, "'" + name.text + "' is reserved and cannot name a class");
      if (peek().kind == Tok::Prime) {
        next();
        expect(Tok::Equals, "'='");
        ClassExpr rhs = parse_expr();
        expect(Tok::Semicolon, "';'");
        if (!primed.emplace(name.text, PrimedDecl{std::move(rhs), name.span}).second)
          throw ParseError(name.span, "duplicate definition of " + name.text + "'");
        if (std::find(order.begin(), order.end(), name.text) == order.end())
          order.push_back(name.text);
      } else if (peek().kind == Tok::LParen) {
        next();
        Token zero = expect(Tok::Nat, "'0'");
        if (zero.text != "0")
          throw ParseError(zero.span, "expected '(0)' in initial-count declaration");
        expect(Tok::RParen, "')'");
        expect(Tok::Equals, "'='");
        Token nat = expect(Tok::Nat, "a natural number");
        expect(Tok::Semicolon, "';'");
        std::uint64_t v = 0;
        try {
          v = std::stoull(nat.text);
        } catch (const std::exception&) {
          throw ParseError(nat.span, "initial count out of range");
        }
        if (!initials.emplace(name.text, std::make_pair(v, name.span)).second)
          throw ParseError(name.span, "duplicate initial count for " + name.text);
        if (std::find(order.begin(), order.end(), name.text) == order.end())
          order.push_back(name.text);
      } else {
        expect(Tok::Equals, "'='");
        ClassExpr body = parse_expr();
        expect(Tok::Semicolon, "';'");
        for (const auto& d : plain_)
          if (d.name == name.text)
            throw ParseError(name.span, "duplicate definition of " + name.text);
        plain_.push_back({name.text, std::move(body), false, 0});
        order.push_back(name.text);
      }
    }

    for (auto& [nm, pd] : primed) {
      auto it = initials.find(nm);
      if (it == initials.end())
        throw ParseError(pd.at, "primed declaration of " + nm + " lacks a '" + nm + "(0) = ...' line");
      for (const auto& d : plain_)
        if (d.name == nm) throw ParseError(pd.at, "duplicate definition of " + nm);
    }
    for (auto& [nm, init] : initials)
      if (!primed.count(nm))
        throw ParseError(init.second, "'" + nm + "(0)' declaration lacks a '" + nm + "' = ...' primed line");

    // Emit definitions in first-appearance order.
    for (const auto& nm : order) {
      auto pit = primed.find(nm);
      if (pit != primed.end()) {
        if (spec.find(nm)) continue;  // already emitted via the other piece
        ClassDef def;
        def.name = nm;
        def.body = std::move(pit->second.rhs);
        def.differential = true;
        def.initial_count = initials.at(nm).first;
        spec.defs.push_back(std::move(def));
      } else if (!initials.count(nm)) {
        for (auto& d : plain_)
          if (d.name == nm && !spec.find(nm)) spec.defs.push_back(d);
      } else if (!spec.find(nm)) {
        ClassDef def;
        def.name = nm;
        def.body = std::move(primed.at(nm).rhs);
        def.differential = true;
        def.initial_count = initials.at(nm).first;
        spec.defs.push_back(std::move(def));
      }
    }

    // Register atom types.
    std::function<void(const ClassExpr&)> collect = [&](const ClassExpr& e) {
      if (e.kind == ExprKind::Atom && !spec.atom_weights.count(e.name))
        spec.atom_weights.emplace(e.name, 1.0);
      for (const auto& c : e.children) collect(c);
    };
    for (const auto& d : spec.defs) collect(d.body);
    return spec;
  }

 private:
  ClassExpr parse_expr() {
    ClassExpr e = parse_term();
    while (peek().kind == Tok::Plus) {
      next();
      e = ClassExpr::join(ExprKind::Union, std::move(e), parse_term());
    }
    return e;
  }

  ClassExpr parse_term() {
    ClassExpr e = parse_factor();
    while (peek().kind == Tok::Star) {
      next();
      e = ClassExpr::join(ExprKind::Product, std::move(e), parse_factor());
    }
    return e;
  }

  ClassExpr parse_factor() {
    const Token& t = peek();
    switch (t.kind) {
      case Tok::Nat:
        if (t.text == "1") {
          next();
          return ClassExpr::empty();
        }
        throw ParseError(t.span, "unexpected number '" + t.text + "' (only '1' denotes a class)");
      case Tok::LParen: {
        next();
        ClassExpr e = parse_expr();
        expect(Tok::RParen, "')'");
        return e;
      }
      case Tok::Ident: {
        next();
        if (t.text == "Z") return ClassExpr::atom();
        if (t.text.rfind("Z_", 0) == 0) {
          if (t.text.size() == 2)
            throw ParseError(t.span, "atom type missing after 'Z_'");
          return ClassExpr::atom(t.text.substr(2));
        }
        if (is_construction(t.text)) {
          expect(Tok::LParen, "'('");
          ClassExpr arg = parse_expr();
          expect(Tok::RParen, "')'");
          ExprKind k = t.text == "Seq"     ? ExprKind::Seq
                       : t.text == "Cycle" ? ExprKind::Cycle
                       : t.text == "Set"   ? ExprKind::Set
                                           : ExprKind::MSet;
          return ClassExpr::wrap(k, std::move(arg));
        }
        return ClassExpr::ref(t.text);
      }
      default:
        throw ParseError(t.span, "expected a class expression");
    }
  }

  const Token& peek() const { return toks_[pos_]; }
  const Token& next() { return toks_[pos_++]; }
  Token expect(Tok kind, const std::string& what) {
    if (peek().kind != kind)
      throw ParseError(peek().span, "expected " + what);
    return next();
  }

  std::vector<Token> toks_;
  std::size_t pos_ = 0;
  std::vector<ClassDef> plain_;
};

void format_expr(const ClassExpr& e, std::ostream& os, int parent_prec);

// prec: 0 union context, 1 product context, 2 atom context
void format_expr(const ClassExpr& e, std::ostream& os, int parent_prec) {
  switch (e.kind) {
    case ExprKind::Empty:
      os << "1";
      break;
    case ExprKind::Atom:
      os << (e.name == "Z" ? "Z" : "Z_" + e.name);
      break;
    case ExprKind::Ref:
      os << e.name;
      break;
    case ExprKind::Union: {
      bool paren = parent_prec > 0;
      if (paren) os << "(";
      format_expr(e.children[0], os, 0);
      os << " + ";
      // Only left spines flatten; a right-nested union keeps its parentheses
      // so the reparse reproduces the same tree.
      format_expr(e.children[1], os, e.children[1].kind == ExprKind::Union ? 1 : 0);
      if (paren) os << ")";
      break;
    }
    case ExprKind::Product: {
      bool paren = parent_prec > 1;
      if (paren) os << "(";
      format_expr(e.children[0], os, 1);
      os << " * ";
      format_expr(e.children[1], os, e.children[1].kind == ExprKind::Product ? 2 : 1);
      if (paren) os << ")";
      break;
    }
    case ExprKind::Seq:
    case ExprKind::Cycle:
    case ExprKind::Set:
    case ExprKind::MSet: {
      static const char* names[] = {"Seq", "Cycle", "Set", "MSet"};
      os << names[static_cast<int>(e.kind) - static_cast<int>(ExprKind::Seq)] << "(";
      format_expr(e.children[0], os, 0);
      os << ")";
      break;
    }
  }
}

}  // namespace

ParseError::ParseError(SourceSpan s, const std::string& message)
    : Error("parse error at " + std::to_string(s.line) + ":" +
            std::to_string(s.column) + ": " + message),
      span(s) {}

Spec parse_spec(std::string_view text) {
  return Parser(Lexer(text).run()).run();
}

std::string format_spec(const Spec& spec) {
  std::ostringstream os;
  os << (spec.mode == Mode::Labelled ? "@labelled" : "@unlabelled") << "\n";
  for (const auto& def : spec.defs) {
    if (def.differential) {
      os << def.name << "' = ";
      format_expr(def.body, os, 0);
      os << ";\n";
      os << def.name << "(0) = " << def.initial_count << ";\n";
    } else {
      os << def.name << " = ";
      format_expr(def.body, os, 0);
      os << ";\n";
    }
  }
  return os.str();
}

}  // namespace boltzgen
