#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <set>

#include "lutloc/stl.hpp"

namespace lutloc::stl {

namespace {

ExprPtr make_const(double c) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Constant;
  e->constant = c;
  return e;
}

ExprPtr make_channel(std::string name) {
  auto e = std::make_shared<Expr>();
  e->kind = Expr::Kind::Channel;
  e->channel = std::move(name);
  return e;
}

ExprPtr make_unary(Expr::Kind k, ExprPtr a) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->lhs = std::move(a);
  return e;
}

ExprPtr make_binary(Expr::Kind k, ExprPtr a, ExprPtr b) {
  auto e = std::make_shared<Expr>();
  e->kind = k;
  e->lhs = std::move(a);
  e->rhs = std::move(b);
  return e;
}

FormulaNodePtr make_atom(ExprPtr margin) {
  auto f = std::make_shared<FormulaNode>();
  f->kind = FormulaNode::Kind::Atom;
  f->atom = std::move(margin);
  return f;
}

FormulaNodePtr make_not(FormulaNodePtr a) {
  auto f = std::make_shared<FormulaNode>();
  f->kind = FormulaNode::Kind::Not;
  f->lhs = std::move(a);
  return f;
}

FormulaNodePtr make_binary_f(FormulaNode::Kind k, FormulaNodePtr a, FormulaNodePtr b) {
  auto f = std::make_shared<FormulaNode>();
  f->kind = k;
  f->lhs = std::move(a);
  f->rhs = std::move(b);
  return f;
}

struct Token {
  enum class Kind { Number, Ident, Symbol, End };
  Kind kind = Kind::End;
  double number = 0.0;
  std::string text;
  size_t pos = 0;
};

class Lexer {
 public:
  explicit Lexer(std::string_view src) : src_(src) { tokenize(); }
  const std::vector<Token>& tokens() const { return tokens_; }

 private:
  void tokenize() {
    size_t i = 0;
    while (i < src_.size()) {
      const char c = src_[i];
      if (std::isspace(static_cast<unsigned char>(c))) {
        ++i;
        continue;
      }
      if (std::isdigit(static_cast<unsigned char>(c)) ||
          (c == '.' && i + 1 < src_.size() &&
           std::isdigit(static_cast<unsigned char>(src_[i + 1])))) {
        size_t j = i;
        while (j < src_.size() &&
               (std::isdigit(static_cast<unsigned char>(src_[j])) || src_[j] == '.'))
          ++j;
        if (j < src_.size() && (src_[j] == 'e' || src_[j] == 'E')) {
          size_t k = j + 1;
          if (k < src_.size() && (src_[k] == '+' || src_[k] == '-')) ++k;
          if (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) {
            ++k;
            while (k < src_.size() && std::isdigit(static_cast<unsigned char>(src_[k]))) ++k;
            j = k;
          }
        }
        Token t;
        t.kind = Token::Kind::Number;
        t.text = std::string(src_.substr(i, j - i));
        t.number = std::stod(t.text);
        t.pos = i;
        tokens_.push_back(std::move(t));
        i = j;
        continue;
      }
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
        size_t j = i;
        while (j < src_.size() && (std::isalnum(static_cast<unsigned char>(src_[j])) ||
                                   src_[j] == '_'))
          ++j;
        Token t;
        t.kind = Token::Kind::Ident;
        t.text = std::string(src_.substr(i, j - i));
        t.pos = i;
        tokens_.push_back(std::move(t));
        i = j;
        continue;
      }
      static const char* two_char[] = {"<=", ">=", "==", "->", "&&", "||"};
      std::string sym(1, c);
      for (const char* tc : two_char) {
        if (src_.substr(i, 2) == tc) {
          sym = tc;
          break;
        }
      }
      static const std::string singles = "()[],<>+-*/!&|";
      if (sym.size() == 1 && singles.find(c) == std::string::npos)
        throw DataError("formula syntax error at position " + std::to_string(i) +
                        ": unexpected character '" + std::string(1, c) + "'");
      Token t;
      t.kind = Token::Kind::Symbol;
      t.text = sym;
      t.pos = i;
      tokens_.push_back(std::move(t));
      i += sym.size();
    }
    Token end;
    end.kind = Token::Kind::End;
    end.pos = src_.size();
    tokens_.push_back(end);
  }

  std::string_view src_;
  std::vector<Token> tokens_;
};

class Parser {
 public:
  Parser(std::string_view src, const std::vector<std::string>* known)
      : lexer_(src), known_(known) {}

  Formula parse() {
    FormulaNodePtr f = parse_formula_node();
    expect_end();
    return Formula(std::move(f));
  }

 private:
  [[noreturn]] void fail(const std::string& what) const {
    throw DataError("formula syntax error at position " +
                    std::to_string(peek().pos) + ": " + what);
  }

  const Token& peek(int ahead = 0) const {
    const size_t i = std::min(pos_ + static_cast<size_t>(ahead),
                              lexer_.tokens().size() - 1);
    return lexer_.tokens()[i];
  }
  const Token& advance() { return lexer_.tokens()[pos_++]; }

  bool at_symbol(const std::string& s) const {
    return peek().kind == Token::Kind::Symbol && peek().text == s;
  }
  bool at_ident(const std::string& s) const {
    return peek().kind == Token::Kind::Ident && peek().text == s;
  }
  bool eat_symbol(const std::string& s) {
    if (!at_symbol(s)) return false;
    ++pos_;
    return true;
  }
  bool eat_ident(const std::string& s) {
    if (!at_ident(s)) return false;
    ++pos_;
    return true;
  }
  void expect_symbol(const std::string& s) {
    if (!eat_symbol(s)) fail("expected '" + s + "'");
  }
  void expect_end() {
    if (peek().kind != Token::Kind::End) fail("unexpected trailing input");
  }

  // formula := until_or ('->' formula)?   with a -> b == !a | b
  FormulaNodePtr parse_formula_node() {
    FormulaNodePtr lhs = parse_until();
    if (eat_symbol("->")) {
      FormulaNodePtr rhs = parse_formula_node();
      return make_binary_f(FormulaNode::Kind::Or, make_not(std::move(lhs)),
                           std::move(rhs));
    }
    return lhs;
  }

  FormulaNodePtr parse_until() {
    FormulaNodePtr lhs = parse_or();
    while (at_ident("until")) {
      advance();
      TimeInterval iv = parse_interval_opt();
      FormulaNodePtr rhs = parse_or();
      auto f = std::make_shared<FormulaNode>();
      f->kind = FormulaNode::Kind::Until;
      f->lhs = std::move(lhs);
      f->rhs = std::move(rhs);
      f->interval = iv;
      lhs = f;
    }
    return lhs;
  }

  FormulaNodePtr parse_or() {
    FormulaNodePtr lhs = parse_and();
    while (at_ident("or") || at_symbol("||") || at_symbol("|")) {
      advance();
      lhs = make_binary_f(FormulaNode::Kind::Or, std::move(lhs), parse_and());
    }
    return lhs;
  }

  FormulaNodePtr parse_and() {
    FormulaNodePtr lhs = parse_unary();
    while (at_ident("and") || at_symbol("&&") || at_symbol("&")) {
      advance();
      lhs = make_binary_f(FormulaNode::Kind::And, std::move(lhs), parse_unary());
    }
    return lhs;
  }

  FormulaNodePtr parse_unary() {
    if (eat_ident("not") || eat_symbol("!")) return make_not(parse_unary());
    if (at_ident("alw") || at_ident("always") || at_ident("ev") ||
        at_ident("eventually")) {
      const bool always = peek().text[0] == 'a';
      advance();
      TimeInterval iv = parse_interval_opt();
      expect_symbol("(");
      FormulaNodePtr child = parse_formula_node();
      expect_symbol(")");
      auto f = std::make_shared<FormulaNode>();
      f->kind = always ? FormulaNode::Kind::Always : FormulaNode::Kind::Eventually;
      f->lhs = std::move(child);
      f->interval = iv;
      return f;
    }
    if (at_ident("step")) {
      advance();
      expect_symbol("(");
      if (peek().kind != Token::Kind::Ident) fail("expected channel name in step()");
      auto f = std::make_shared<FormulaNode>();
      f->kind = FormulaNode::Kind::Step;
      f->channel = advance().text;
      note_channel(f->channel);
      f->threshold = 0.5;
      if (eat_symbol(",")) {
        if (peek().kind != Token::Kind::Number) fail("expected step threshold");
        f->threshold = advance().number;
      }
      expect_symbol(")");
      return f;
    }
    if (at_symbol("(")) {
      // Could open a sub-formula or a parenthesized arithmetic expression;
      // try the formula reading and fall back on failure.
      const size_t saved = pos_;
      try {
        advance();
        FormulaNodePtr f = parse_formula_node();
        expect_symbol(")");
        if (at_arith_or_cmp()) throw DataError("arith");
        return f;
      } catch (const DataError&) {
        pos_ = saved;
      }
    }
    return parse_comparison();
  }

  bool at_arith_or_cmp() const {
    if (peek().kind != Token::Kind::Symbol) return false;
    static const std::set<std::string> ops = {"+", "-", "*", "/",
                                              "<", "<=", ">", ">=", "=="};
    return ops.count(peek().text) > 0;
  }

  FormulaNodePtr parse_comparison() {
    ExprPtr lhs = parse_expr();
    if (peek().kind != Token::Kind::Symbol) fail("expected comparison operator");
    const std::string op = peek().text;
    if (op != "<" && op != "<=" && op != ">" && op != ">=" && op != "==")
      fail("expected comparison operator, got '" + op + "'");
    advance();
    ExprPtr rhs = parse_expr();
    // Normalize to a single margin expression that must be >= 0.
    if (op == ">" || op == ">=")
      return make_atom(make_binary(Expr::Kind::Sub, lhs, rhs));
    if (op == "<" || op == "<=")
      return make_atom(make_binary(Expr::Kind::Sub, rhs, lhs));
    return make_atom(make_unary(
        Expr::Kind::Neg,
        make_unary(Expr::Kind::Abs, make_binary(Expr::Kind::Sub, lhs, rhs))));
  }

  TimeInterval parse_interval_opt() {
    TimeInterval iv;
    if (!eat_symbol("[")) return iv;  // defaults to [0, inf)
    iv.lo = parse_bound(false);
    expect_symbol(",");
    iv.hi = parse_bound(true);
    expect_symbol("]");
    if (iv.lo < 0.0) fail("interval bounds must be non-negative");
    if (!(iv.lo <= iv.hi)) fail("interval bounds must satisfy lo <= hi");
    return iv;
  }

  double parse_bound(bool allow_inf) {
    if (allow_inf && eat_ident("inf")) return kInf;
    if (peek().kind != Token::Kind::Number) fail("expected interval bound");
    return advance().number;
  }

  ExprPtr parse_expr() {
    ExprPtr lhs = parse_term();
    while (at_symbol("+") || at_symbol("-")) {
      const bool add = peek().text == "+";
      advance();
      lhs = make_binary(add ? Expr::Kind::Add : Expr::Kind::Sub, std::move(lhs),
                        parse_term());
    }
    return lhs;
  }

  ExprPtr parse_term() {
    ExprPtr lhs = parse_factor();
    while (at_symbol("*") || at_symbol("/")) {
      const bool mul = peek().text == "*";
      advance();
      lhs = make_binary(mul ? Expr::Kind::Mul : Expr::Kind::Div, std::move(lhs),
                        parse_factor());
    }
    return lhs;
  }

  ExprPtr parse_factor() {
    if (eat_symbol("-")) return make_unary(Expr::Kind::Neg, parse_factor());
    if (peek().kind == Token::Kind::Number) return make_const(advance().number);
    if (at_ident("abs")) {
      advance();
      expect_symbol("(");
      ExprPtr inner = parse_expr();
      expect_symbol(")");
      return make_unary(Expr::Kind::Abs, std::move(inner));
    }
    if (peek().kind == Token::Kind::Ident) {
      const std::string name = advance().text;
      note_channel(name);
      return make_channel(name);
    }
    if (eat_symbol("(")) {
      ExprPtr inner = parse_expr();
      expect_symbol(")");
      return inner;
    }
    fail("expected a number, channel, abs(), or parenthesized expression");
  }

  void note_channel(const std::string& name) {
    if (known_ != nullptr &&
        std::find(known_->begin(), known_->end(), name) == known_->end())
      throw DataError("unknown channel '" + name + "' in formula");
  }

  Lexer lexer_;
  size_t pos_ = 0;
  const std::vector<std::string>* known_;
};

void collect_channels(const ExprPtr& e, std::set<std::string>& out) {
  if (!e) return;
  if (e->kind == Expr::Kind::Channel) out.insert(e->channel);
  collect_channels(e->lhs, out);
  collect_channels(e->rhs, out);
}

void collect_channels(const FormulaNode& f, std::set<std::string>& out) {
  if (f.kind == FormulaNode::Kind::Atom) collect_channels(f.atom, out);
  if (f.kind == FormulaNode::Kind::Step) out.insert(f.channel);
  if (f.lhs) collect_channels(*f.lhs, out);
  if (f.rhs) collect_channels(*f.rhs, out);
}

double node_horizon(const FormulaNode& f) {
  switch (f.kind) {
    case FormulaNode::Kind::Atom:
    case FormulaNode::Kind::Step:
      return 0.0;
    case FormulaNode::Kind::Not:
      return node_horizon(*f.lhs);
    case FormulaNode::Kind::And:
    case FormulaNode::Kind::Or:
      return std::max(node_horizon(*f.lhs), node_horizon(*f.rhs));
    case FormulaNode::Kind::Always:
    case FormulaNode::Kind::Eventually:
      return f.interval.hi + node_horizon(*f.lhs);
    case FormulaNode::Kind::Until:
      return f.interval.hi +
             std::max(node_horizon(*f.lhs), node_horizon(*f.rhs));
  }
  return 0.0;
}

}  // namespace

std::vector<std::string> Formula::channels() const {
  std::set<std::string> s;
  collect_channels(root(), s);
  return {s.begin(), s.end()};
}

double Formula::horizon() const { return node_horizon(root()); }

Formula parse_formula(std::string_view text,
                      const std::vector<std::string>* known_channels) {
  Parser p(text, known_channels);
  return p.parse();
}

}  // namespace lutloc::stl
