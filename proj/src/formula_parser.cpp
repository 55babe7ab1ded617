#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>

#include "unistore/error.hpp"
#include "unistore/formula.hpp"

namespace unistore {

namespace {

enum class Tok { Ident, String, Integer, Decimal, Date, Op, LParen, RParen, Dot, Colon, End };

struct Token {
  Tok type = Tok::End;
  std::string text;
  std::size_t pos = 0;
};

constexpr int kMaxRecursion = 64;

bool is_keyword(std::string_view s) {
  return s == "and" || s == "or" || s == "not" || s == "exists" || s == "in";
}

std::string describe(const Token& t) {
  if (t.type == Tok::End) return "end of input";
  return "'" + t.text + "'";
}

std::vector<Token> tokenize(std::string_view text) {
  std::vector<Token> out;
  std::size_t i = 0;
  const std::size_t n = text.size();
  auto digit = [&](std::size_t k) { return k < n && std::isdigit(static_cast<unsigned char>(text[k])); };
  while (i < n) {
    const char c = text[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
      continue;
    }
    const std::size_t start = i;
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      while (i < n && (std::isalnum(static_cast<unsigned char>(text[i])) || text[i] == '_')) ++i;
      out.push_back({Tok::Ident, std::string(text.substr(start, i - start)), start});
      continue;
    }
    if (c == '\'') {
      std::string s;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '\\' && i + 1 < n) {
          s.push_back(text[i + 1]);
          i += 2;
        } else if (text[i] == '\'') {
          ++i;
          closed = true;
          break;
        } else {
          s.push_back(text[i++]);
        }
      }
      if (!closed) throw ParseError(n, "closing quote", "end of input");
      out.push_back({Tok::String, std::move(s), start});
      continue;
    }
    // YYYY-MM-DD
    if (digit(i) && digit(i + 1) && digit(i + 2) && digit(i + 3) && i + 4 < n && text[i + 4] == '-' && digit(i + 5) &&
        digit(i + 6) && i + 7 < n && text[i + 7] == '-' && digit(i + 8) && digit(i + 9) && !digit(i + 10)) {
      out.push_back({Tok::Date, std::string(text.substr(i, 10)), start});
      i += 10;
      continue;
    }
    if (digit(i) || (c == '-' && digit(i + 1))) {
      if (c == '-') ++i;
      while (digit(i)) ++i;
      bool decimal = false;
      if (i < n && text[i] == '.' && digit(i + 1)) {
        decimal = true;
        ++i;
        while (digit(i)) ++i;
      }
      if (i < n && (text[i] == 'e' || text[i] == 'E')) {
        std::size_t k = i + 1;
        if (k < n && (text[k] == '+' || text[k] == '-')) ++k;
        if (digit(k)) {
          decimal = true;
          i = k;
          while (digit(i)) ++i;
        }
      }
      out.push_back({decimal ? Tok::Decimal : Tok::Integer, std::string(text.substr(start, i - start)), start});
      continue;
    }
    switch (c) {
      case '(': out.push_back({Tok::LParen, "(", start}); ++i; continue;
      case ')': out.push_back({Tok::RParen, ")", start}); ++i; continue;
      case '.': out.push_back({Tok::Dot, ".", start}); ++i; continue;
      case ':': out.push_back({Tok::Colon, ":", start}); ++i; continue;
      case '=': out.push_back({Tok::Op, "=", start}); ++i; continue;
      case '!':
        if (i + 1 < n && text[i + 1] == '=') {
          out.push_back({Tok::Op, "!=", start});
          i += 2;
          continue;
        }
        break;
      case '<':
      case '>':
        if (i + 1 < n && text[i + 1] == '=') {
          out.push_back({Tok::Op, std::string{c, '='}, start});
          i += 2;
        } else {
          out.push_back({Tok::Op, std::string{c}, start});
          ++i;
        }
        continue;
      default:
        break;
    }
    throw ParseError(start, "token", "'" + std::string(1, c) + "'");
  }
  out.push_back({Tok::End, "", n});
  return out;
}

CompareOp to_op(const std::string& s) {
  if (s == "=") return CompareOp::Eq;
  if (s == "!=") return CompareOp::Ne;
  if (s == "<") return CompareOp::Lt;
  if (s == "<=") return CompareOp::Le;
  if (s == ">") return CompareOp::Gt;
  return CompareOp::Ge;
}

NodePtr make(auto&& alt) { return std::make_shared<const Node>(Node{std::forward<decltype(alt)>(alt)}); }

class Parser {
 public:
  explicit Parser(std::string_view text) : toks_(tokenize(text)) {}

  NodePtr parse() {
    auto root = parse_or();
    if (peek().type != Tok::End) throw ParseError(peek().pos, "'and', 'or' or end of input", describe(peek()));
    return root;
  }

  std::set<std::string> domains;

 private:
  struct Guard {
    explicit Guard(Parser& p) : p(p) {
      if (++p.recursion_ > kMaxRecursion)
        throw Error(ErrorKind::DepthExceeded, "formula nesting exceeds parser limit",
                    {{"position", p.peek().pos}});
    }
    ~Guard() { --p.recursion_; }
    Parser& p;
  };

  const Token& peek() const { return toks_[i_]; }
  const Token& take() { return toks_[i_++]; }
  bool at_keyword(std::string_view kw) const { return peek().type == Tok::Ident && peek().text == kw; }

  const Token& expect(Tok type, const char* what) {
    if (peek().type != type) throw ParseError(peek().pos, what, describe(peek()));
    return take();
  }

  std::string expect_name(const char* what) {
    const auto& t = expect(Tok::Ident, what);
    if (is_keyword(t.text)) throw ParseError(t.pos, what, describe(t));
    return t.text;
  }

  NodePtr parse_or() {
    Guard g(*this);
    std::vector<NodePtr> terms{parse_and()};
    while (at_keyword("or")) {
      take();
      terms.push_back(parse_and());
    }
    if (terms.size() == 1) return terms.front();
    return make(OrNode{std::move(terms)});
  }

  NodePtr parse_and() {
    std::vector<NodePtr> terms{parse_unary()};
    while (at_keyword("and")) {
      take();
      terms.push_back(parse_unary());
    }
    if (terms.size() == 1) return terms.front();
    return make(AndNode{std::move(terms)});
  }

  NodePtr parse_unary() {
    Guard g(*this);
    if (at_keyword("not")) {
      take();
      return make(NotNode{parse_unary()});
    }
    return parse_atom();
  }

  NodePtr parse_atom() {
    if (peek().type == Tok::LParen) {
      take();
      auto inner = parse_or();
      expect(Tok::RParen, "')'");
      return inner;
    }
    if (at_keyword("exists")) {
      take();
      std::string var = expect_name("variable name");
      if (var == "self") throw ParseError(toks_[i_ - 1].pos, "variable name", "'self'");
      if (!at_keyword("in")) throw ParseError(peek().pos, "'in'", describe(peek()));
      take();
      std::string domain = expect_name("domain name");
      expect(Tok::Colon, "':'");
      bound_.push_back(var);
      auto body = parse_or();
      bound_.pop_back();
      domains.insert(domain);
      return make(ExistsNode{std::move(var), std::move(domain), std::move(body)});
    }
    const std::size_t path_pos = peek().pos;
    Path path = parse_path();
    if (at_keyword("in")) {
      take();
      std::string domain = expect_name("domain name");
      domains.insert(domain);
      return make(InConceptNode{std::move(path), std::move(domain)});
    }
    (void)path_pos;
    const auto& op_tok = expect(Tok::Op, "comparison operator or 'in'");
    CompareOp op = to_op(op_tok.text);
    Literal lit = parse_literal();
    if (lit.kind == Literal::Kind::Null && op != CompareOp::Eq && op != CompareOp::Ne)
      throw ParseError(op_tok.pos, "'=' or '!=' before null", "'" + op_tok.text + "'");
    return make(CompareNode{std::move(path), op, std::move(lit)});
  }

  bool is_root(const std::string& s) const {
    return s == "self" || std::find(bound_.begin(), bound_.end(), s) != bound_.end();
  }

  Path parse_path() {
    Path path;
    const std::size_t start = peek().pos;
    path.segments.push_back(expect_name("path, 'not', 'exists' or '('"));
    while (peek().type == Tok::Dot) {
      take();
      auto seg = expect_name("attribute name");
      if (seg == "self") throw ParseError(toks_[i_ - 1].pos, "attribute name", "'self'");
      path.segments.push_back(std::move(seg));
    }
    const std::size_t attrs = path.segments.size() - (is_root(path.segments.front()) ? 1 : 0);
    if (attrs > static_cast<std::size_t>(kMaxPathHops) + 1)
      throw ParseError(start, "path of at most 4 reference hops", std::to_string(attrs - 1) + " hops");
    return path;
  }

  Literal parse_literal() {
    const Token& t = peek();
    Literal lit;
    switch (t.type) {
      case Tok::String:
        take();
        lit.kind = Literal::Kind::Text;
        lit.value = t.text;
        return lit;
      case Tok::Integer: {
        take();
        std::int64_t v = 0;
        auto [p, ec] = std::from_chars(t.text.data(), t.text.data() + t.text.size(), v);
        if (ec != std::errc{} || p != t.text.data() + t.text.size())
          throw ParseError(t.pos, "integer literal in range", describe(t));
        lit.kind = Literal::Kind::Integer;
        lit.value = v;
        return lit;
      }
      case Tok::Decimal: {
        take();
        lit.kind = Literal::Kind::Decimal;
        lit.value = std::strtod(t.text.c_str(), nullptr);
        return lit;
      }
      case Tok::Date: {
        take();
        auto d = Date::parse(t.text);
        if (!d) throw ParseError(t.pos, "valid date", describe(t));
        lit.kind = Literal::Kind::Date;
        lit.value = *d;
        return lit;
      }
      case Tok::Ident: {
        if (t.text == "true" || t.text == "false") {
          take();
          lit.kind = Literal::Kind::Boolean;
          lit.value = t.text == "true";
          return lit;
        }
        if (t.text == "null") {
          take();
          lit.kind = Literal::Kind::Null;
          return lit;
        }
        if (t.text == "date" && toks_[i_ + 1].type == Tok::String) {
          take();
          const Token& s = take();
          auto d = Date::parse(s.text);
          if (!d) throw ParseError(s.pos, "date 'YYYY-MM-DD'", describe(s));
          lit.kind = Literal::Kind::Date;
          lit.value = *d;
          return lit;
        }
        if (is_root(t.text)) {
          take();
          lit.kind = Literal::Kind::Variable;
          lit.variable = t.text;
          return lit;
        }
        break;
      }
      default:
        break;
    }
    throw ParseError(t.pos, "literal", describe(t));
  }

  std::vector<Token> toks_;
  std::size_t i_ = 0;
  int recursion_ = 0;
  std::vector<std::string> bound_;
};

int node_depth(const Node& n) {
  return std::visit(
      [](const auto& v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AndNode> || std::is_same_v<T, OrNode>) {
          int d = 0;
          for (const auto& t : v.terms) d = std::max(d, node_depth(*t));
          return d + 1;
        } else if constexpr (std::is_same_v<T, NotNode>) {
          return node_depth(*v.operand) + 1;
        } else if constexpr (std::is_same_v<T, ExistsNode>) {
          return node_depth(*v.body) + 1;
        } else {
          return 1;
        }
      },
      n.v);
}

void collect_domains(const Node& n, std::set<std::string>& out) {
  std::visit(
      [&](const auto& v) {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, AndNode> || std::is_same_v<T, OrNode>) {
          for (const auto& t : v.terms) collect_domains(*t, out);
        } else if constexpr (std::is_same_v<T, NotNode>) {
          collect_domains(*v.operand, out);
        } else if constexpr (std::is_same_v<T, ExistsNode>) {
          out.insert(v.domain);
          collect_domains(*v.body, out);
        } else if constexpr (std::is_same_v<T, InConceptNode>) {
          out.insert(v.domain);
        }
      },
      n.v);
}

std::string print_literal(const Literal& lit) {
  switch (lit.kind) {
    case Literal::Kind::Text: {
      std::string out = "'";
      for (char c : std::get<std::string>(lit.value)) {
        if (c == '\'' || c == '\\') out.push_back('\\');
        out.push_back(c);
      }
      return out + "'";
    }
    case Literal::Kind::Integer: return std::to_string(std::get<std::int64_t>(lit.value));
    case Literal::Kind::Decimal: {
      std::string s = nlohmann::json(std::get<double>(lit.value)).dump();
      if (s.find_first_of(".eE") == std::string::npos) s += ".0";
      return s;
    }
    case Literal::Kind::Boolean: return std::get<bool>(lit.value) ? "true" : "false";
    case Literal::Kind::Date: return "date '" + std::get<Date>(lit.value).str() + "'";
    case Literal::Kind::Null: return "null";
    case Literal::Kind::Variable: return lit.variable;
  }
  return "null";
}

std::string print_path(const Path& p) {
  std::string out;
  for (std::size_t i = 0; i < p.segments.size(); ++i) {
    if (i) out.push_back('.');
    out += p.segments[i];
  }
  return out;
}

template <class... T>
bool holds(const Node& n) {
  return (std::holds_alternative<T>(n.v) || ...);
}

}  // namespace

std::string_view op_symbol(CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return "=";
    case CompareOp::Ne: return "!=";
    case CompareOp::Lt: return "<";
    case CompareOp::Le: return "<=";
    case CompareOp::Gt: return ">";
    case CompareOp::Ge: return ">=";
  }
  return "=";
}

std::string print_node(const Node& node) {
  auto wrap = [](const Node& child, bool parens) {
    auto s = print_node(child);
    return parens ? "(" + s + ")" : s;
  };
  return std::visit(
      [&](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, CompareNode>) {
          return print_path(v.path) + " " + std::string(op_symbol(v.op)) + " " + print_literal(v.literal);
        } else if constexpr (std::is_same_v<T, InConceptNode>) {
          return print_path(v.path) + " in " + v.domain;
        } else if constexpr (std::is_same_v<T, AndNode>) {
          std::string out;
          for (std::size_t i = 0; i < v.terms.size(); ++i) {
            if (i) out += " and ";
            out += wrap(*v.terms[i], holds<AndNode, OrNode, ExistsNode>(*v.terms[i]));
          }
          return out;
        } else if constexpr (std::is_same_v<T, OrNode>) {
          std::string out;
          for (std::size_t i = 0; i < v.terms.size(); ++i) {
            if (i) out += " or ";
            out += wrap(*v.terms[i], holds<OrNode, ExistsNode>(*v.terms[i]));
          }
          return out;
        } else if constexpr (std::is_same_v<T, NotNode>) {
          return "not " + wrap(*v.operand, holds<AndNode, OrNode, ExistsNode>(*v.operand));
        } else {
          return "exists " + v.variable + " in " + v.domain + ": " + print_node(*v.body);
        }
      },
      node.v);
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.v.index() != b.v.index()) return false;
  auto terms_equal = [](const std::vector<NodePtr>& x, const std::vector<NodePtr>& y) {
    if (x.size() != y.size()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
      if (!structurally_equal(*x[i], *y[i])) return false;
    return true;
  };
  return std::visit(
      [&](const auto& va) -> bool {
        using T = std::decay_t<decltype(va)>;
        const auto& vb = std::get<T>(b.v);
        if constexpr (std::is_same_v<T, CompareNode>) {
          return va.path == vb.path && va.op == vb.op && va.literal == vb.literal;
        } else if constexpr (std::is_same_v<T, InConceptNode>) {
          return va.path == vb.path && va.domain == vb.domain;
        } else if constexpr (std::is_same_v<T, AndNode> || std::is_same_v<T, OrNode>) {
          return terms_equal(va.terms, vb.terms);
        } else if constexpr (std::is_same_v<T, NotNode>) {
          return structurally_equal(*va.operand, *vb.operand);
        } else {
          return va.variable == vb.variable && va.domain == vb.domain && structurally_equal(*va.body, *vb.body);
        }
      },
      a.v);
}

Formula Formula::parse(std::string_view text) {
  Parser p(text);
  Formula f;
  f.root_ = p.parse();
  f.domains_ = std::move(p.domains);
  if (f.depth() > kMaxFormulaDepth)
    throw Error(ErrorKind::DepthExceeded,
                "formula nesting depth " + std::to_string(f.depth()) + " exceeds " + std::to_string(kMaxFormulaDepth),
                {{"depth", f.depth()}});
  return f;
}

Formula Formula::from_root(NodePtr root) {
  Formula f;
  f.root_ = std::move(root);
  collect_domains(*f.root_, f.domains_);
  return f;
}

std::string Formula::print() const { return root_ ? print_node(*root_) : std::string{}; }

int Formula::depth() const { return root_ ? node_depth(*root_) : 0; }

}  // namespace unistore
