#pragma once

#include <memory>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "unistore/value.hpp"

namespace unistore {

// Predicate language used for individuation, comprehension, rule guards and
// mandatory-field conditions.
//
//   Formula   := Or
//   Or        := And ('or' And)*
//   And       := Unary ('and' Unary)*
//   Unary     := 'not' Unary | Atom
//   Atom      := Compare | InConcept | Exists | '(' Formula ')'
//   Compare   := Path Op Literal
//   InConcept := Path 'in' ident
//   Exists    := 'exists' ident 'in' ident ':' Formula
//   Path      := ident ('.' ident)*
//   Literal   := 'text' | integer | decimal | true | false
//              | date 'YYYY-MM-DD' | YYYY-MM-DD | null | self | <bound variable>

inline constexpr int kMaxFormulaDepth = 16;
inline constexpr int kMaxPathHops = 4;

enum class CompareOp { Eq, Ne, Lt, Le, Gt, Ge };

std::string_view op_symbol(CompareOp op);

// Path segments. A leading "self" or bound variable name is kept as the root;
// a path without one is implicitly rooted at self.
struct Path {
  std::vector<std::string> segments;
  bool operator==(const Path&) const = default;
};

struct Literal {
  enum class Kind { Text, Integer, Decimal, Boolean, Date, Null, Variable };
  Kind kind = Kind::Null;
  Value value;
  std::string variable;  // for Kind::Variable ("self" or a bound name)

  bool operator==(const Literal&) const = default;
};

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct CompareNode {
  Path path;
  CompareOp op = CompareOp::Eq;
  Literal literal;
};

struct InConceptNode {
  Path path;
  std::string domain;
};

struct AndNode {
  std::vector<NodePtr> terms;
};

struct OrNode {
  std::vector<NodePtr> terms;
};

struct NotNode {
  NodePtr operand;
};

struct ExistsNode {
  std::string variable;
  std::string domain;
  NodePtr body;
};

struct Node {
  std::variant<CompareNode, InConceptNode, AndNode, OrNode, NotNode, ExistsNode> v;
};

bool structurally_equal(const Node& a, const Node& b);

class Formula {
 public:
  Formula() = default;

  static Formula parse(std::string_view text);

  const Node& root() const { return *root_; }
  bool empty() const { return root_ == nullptr; }

  // Canonical text; parse(print()) is structurally identical to *this.
  std::string print() const;

  const std::set<std::string>& referenced_domains() const { return domains_; }
  int depth() const;

  friend bool operator==(const Formula& a, const Formula& b) {
    if (a.empty() || b.empty()) return a.empty() == b.empty();
    return structurally_equal(*a.root_, *b.root_);
  }

  // Builders, mostly for tests and generators.
  static Formula from_root(NodePtr root);

 private:
  NodePtr root_;
  std::set<std::string> domains_;
};

std::string print_node(const Node& node);

}  // namespace unistore
