#include <algorithm>

#include "unistore/error.hpp"
#include "unistore/eval.hpp"

namespace unistore {

namespace {

using LitKind = Literal::Kind;

bool ordering(CompareOp op) { return op != CompareOp::Eq && op != CompareOp::Ne; }

[[noreturn]] void mismatch(const std::string& what) { throw Error(ErrorKind::TypeMismatch, what); }

// Static compatibility of an attribute type with a literal under an operator.
void check_literal(ValueType type, const Literal& lit, CompareOp op, const std::string& path) {
  if (lit.kind == LitKind::Null) return;
  auto fail = [&]() {
    mismatch("cannot compare " + std::string(type_name(type)) + " path '" + path + "' with " +
             print_node(Node{CompareNode{Path{}, op, lit}}).substr(std::string(op_symbol(op)).size() + 2));
  };
  switch (type) {
    case ValueType::Text:
      if (lit.kind != LitKind::Text) fail();
      return;
    case ValueType::Integer:
    case ValueType::Decimal:
      if (lit.kind != LitKind::Integer && lit.kind != LitKind::Decimal) fail();
      return;
    case ValueType::Boolean:
      if (lit.kind != LitKind::Boolean || ordering(op)) fail();
      return;
    case ValueType::Date:
      if (lit.kind != LitKind::Date) fail();
      return;
    case ValueType::Reference:
      if ((lit.kind != LitKind::Integer && lit.kind != LitKind::Variable) || ordering(op)) fail();
      return;
  }
}

template <class T>
bool apply_op(const T& a, const T& b, CompareOp op) {
  switch (op) {
    case CompareOp::Eq: return a == b;
    case CompareOp::Ne: return a != b;
    case CompareOp::Lt: return a < b;
    case CompareOp::Le: return a <= b;
    case CompareOp::Gt: return a > b;
    case CompareOp::Ge: return a >= b;
  }
  return false;
}

std::string join(const Path& p) {
  std::string s;
  for (const auto& seg : p.segments) s += (s.empty() ? "" : ".") + seg;
  return s;
}

class Evaluator {
 public:
  Evaluator(const Snapshot& snap, const Binding& binding) : snap_(snap), self_(binding.self), vars_(binding.vars) {}

  bool eval(const Node& node) {
    return std::visit([&](const auto& v) { return eval_node(v); }, node.v);
  }

 private:
  // Where a path walk currently stands: a stored object or the draft subject.
  struct Cursor {
    ObjectId id = 0;
    ObjectId concept_id = 0;
    const ValueMap* values = nullptr;
    bool valid = false;
  };

  struct PathValue {
    Value value;            // absent when a hop or the attribute is missing
    ValueType type = ValueType::Reference;
  };

  Cursor cursor_for_object(ObjectId id) const {
    const auto* rec = snap_.alive(id);
    if (!rec) return {};
    return Cursor{id, rec->concept_id, &rec->values, true};
  }

  Cursor cursor_for_self() const {
    if (self_.draft) return Cursor{0, self_.concept_id, self_.draft, true};
    return cursor_for_object(self_.id);
  }

  ObjectId variable_id(const std::string& name) const {
    if (name == "self") return self_.draft ? 0 : self_.id;
    auto it = vars_.find(name);
    return it == vars_.end() ? 0 : it->second;
  }

  bool is_root(const std::string& s) const { return s == "self" || vars_.count(s) > 0; }

  PathValue resolve(const Path& path) {
    const auto& segs = path.segments;
    std::size_t k = 0;
    Cursor cur;
    if (is_root(segs.front())) {
      const ObjectId root = variable_id(segs.front());
      k = 1;
      if (segs.size() == 1) {
        if (root == 0) return {};
        return {Ref{root}, ValueType::Reference};
      }
      cur = segs.front() == "self" ? cursor_for_self() : cursor_for_object(root);
    } else {
      cur = cursor_for_self();
    }
    // After an absent or dead hop the walk continues over schemas only, so
    // the result keeps the static type of the final attribute.
    ObjectId concept_id = cur.concept_id;
    for (; k < segs.size(); ++k) {
      if (concept_id == 0) return {};
      const auto& schema = snap_.schema_or_throw(concept_id);
      const auto* spec = schema.attribute(segs[k]);
      if (!spec)
        throw Error(ErrorKind::UnknownAttribute, "concept '" + schema.name + "' has no attribute '" + segs[k] + "'",
                    {{"concept", schema.name}, {"attribute", segs[k]}});
      Value v;
      if (cur.valid) {
        auto it = cur.values->find(segs[k]);
        if (it != cur.values->end()) v = it->second;
      }
      if (k + 1 == segs.size()) return {v, spec->type};
      if (spec->type != ValueType::Reference) mismatch("path '" + join(path) + "' traverses non-reference '" + segs[k] + "'");
      cur = is_absent(v) ? Cursor{} : cursor_for_object(std::get<Ref>(v).id);
      concept_id = cur.valid ? cur.concept_id : spec->target;
    }
    return {};
  }

  bool eval_node(const CompareNode& n) {
    PathValue pv = resolve(n.path);
    check_literal(pv.type, n.literal, n.op, join(n.path));
    const auto& lit = n.literal;
    if (lit.kind == LitKind::Null) return n.op == CompareOp::Eq ? is_absent(pv.value) : !is_absent(pv.value);
    if (is_absent(pv.value)) return false;
    switch (pv.type) {
      case ValueType::Text:
        return apply_op(std::get<std::string>(pv.value), std::get<std::string>(lit.value), n.op);
      case ValueType::Integer:
      case ValueType::Decimal: {
        const bool lhs_int = std::holds_alternative<std::int64_t>(pv.value);
        const bool rhs_int = lit.kind == LitKind::Integer;
        if (lhs_int && rhs_int)
          return apply_op(std::get<std::int64_t>(pv.value), std::get<std::int64_t>(lit.value), n.op);
        const double a = lhs_int ? static_cast<double>(std::get<std::int64_t>(pv.value)) : std::get<double>(pv.value);
        const double b = rhs_int ? static_cast<double>(std::get<std::int64_t>(lit.value)) : std::get<double>(lit.value);
        return apply_op(a, b, n.op);
      }
      case ValueType::Boolean:
        return apply_op(std::get<bool>(pv.value), std::get<bool>(lit.value), n.op);
      case ValueType::Date:
        return apply_op(std::get<Date>(pv.value), std::get<Date>(lit.value), n.op);
      case ValueType::Reference: {
        const ObjectId lhs = std::get<Ref>(pv.value).id;
        const ObjectId rhs = lit.kind == LitKind::Variable ? variable_id(lit.variable) : std::get<std::int64_t>(lit.value);
        if (lit.kind == LitKind::Variable && rhs == 0) return false;
        return apply_op(lhs, rhs, n.op);
      }
    }
    return false;
  }

  bool eval_node(const InConceptNode& n) {
    const ObjectId domain = snap_.resolve_domain(n.domain);
    PathValue pv = resolve(n.path);
    if (pv.type != ValueType::Reference) mismatch("'in' needs a reference path, '" + join(n.path) + "' is not");
    if (is_absent(pv.value)) return false;
    return snap_.is_member(std::get<Ref>(pv.value).id, domain);
  }

  bool eval_node(const AndNode& n) {
    for (const auto& t : n.terms)
      if (!eval(*t)) return false;
    return true;
  }

  bool eval_node(const OrNode& n) {
    for (const auto& t : n.terms)
      if (eval(*t)) return true;
    return false;
  }

  bool eval_node(const NotNode& n) { return !eval(*n.operand); }

  bool eval_node(const ExistsNode& n) {
    const ObjectId domain = snap_.resolve_domain(n.domain);
    auto saved = vars_.find(n.variable) != vars_.end() ? std::optional<ObjectId>(vars_[n.variable]) : std::nullopt;
    bool found = false;
    for (ObjectId m : snap_.members(domain)) {
      vars_[n.variable] = m;
      if (eval(*n.body)) {
        found = true;
        break;
      }
    }
    if (saved) {
      vars_[n.variable] = *saved;
    } else {
      vars_.erase(n.variable);
    }
    return found;
  }

  const Snapshot& snap_;
  Subject self_;
  std::map<std::string, ObjectId> vars_;
};

class TypeChecker {
 public:
  TypeChecker(const Snapshot& snap, ObjectId self_concept) : snap_(snap) { vars_["self"] = self_concept; }

  void check(const Node& node) {
    std::visit([&](const auto& v) { check_node(v); }, node.v);
  }

 private:
  // Type of the value a path denotes.
  ValueType path_type(const Path& path) {
    const auto& segs = path.segments;
    std::size_t k = 0;
    ObjectId concept_id = vars_["self"];
    if (auto it = vars_.find(segs.front()); it != vars_.end()) {
      concept_id = it->second;
      k = 1;
      if (segs.size() == 1) return ValueType::Reference;
    }
    for (; k < segs.size(); ++k) {
      const auto& schema = snap_.schema_or_throw(concept_id);
      const auto* spec = schema.attribute(segs[k]);
      if (!spec)
        throw Error(ErrorKind::UnknownAttribute, "concept '" + schema.name + "' has no attribute '" + segs[k] + "'",
                    {{"concept", schema.name}, {"attribute", segs[k]}});
      if (k + 1 == segs.size()) return spec->type;
      if (spec->type != ValueType::Reference || spec->target == 0)
        mismatch("path '" + join(path) + "' traverses non-reference '" + segs[k] + "'");
      concept_id = spec->target;
    }
    return ValueType::Reference;
  }

  void check_node(const CompareNode& n) {
    const ValueType t = path_type(n.path);
    check_literal(t, n.literal, n.op, join(n.path));
  }

  void check_node(const InConceptNode& n) {
    snap_.resolve_domain(n.domain);
    if (path_type(n.path) != ValueType::Reference)
      mismatch("'in' needs a reference path, '" + join(n.path) + "' is not");
  }

  void check_node(const AndNode& n) {
    for (const auto& t : n.terms) check(*t);
  }
  void check_node(const OrNode& n) {
    for (const auto& t : n.terms) check(*t);
  }
  void check_node(const NotNode& n) { check(*n.operand); }

  void check_node(const ExistsNode& n) {
    const ObjectId domain = snap_.resolve_domain(n.domain);
    auto saved = vars_.find(n.variable) != vars_.end() ? std::optional<ObjectId>(vars_[n.variable]) : std::nullopt;
    vars_[n.variable] = snap_.member_concept(domain);
    check(*n.body);
    if (saved) {
      vars_[n.variable] = *saved;
    } else {
      vars_.erase(n.variable);
    }
  }

  const Snapshot& snap_;
  std::map<std::string, ObjectId> vars_;
};

}  // namespace

bool evaluate(const Formula& formula, const Binding& binding, const Snapshot& snap) {
  if (formula.empty()) return true;
  Evaluator ev(snap, binding);
  return ev.eval(formula.root());
}

bool evaluate(const Formula& formula, ObjectId self, const Snapshot& snap) {
  return evaluate(formula, Binding{Subject::object(self), {}}, snap);
}

void typecheck(const Formula& formula, ObjectId subject_concept, const Snapshot& snap) {
  if (formula.empty()) return;
  TypeChecker tc(snap, subject_concept);
  tc.check(formula.root());
}

int level_of(const Formula& formula, const Snapshot& snap) {
  int level = 0;
  for (const auto& name : formula.referenced_domains()) level = std::max(level, snap.level(snap.resolve_domain(name)));
  return level;
}

}  // namespace unistore
