#include "unistore/value.hpp"

#include <cmath>
#include <cstdio>

#include "unistore/error.hpp"

namespace unistore {

namespace {

bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int days_in_month(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && leap(y) ? 29 : kDays[m - 1];
}

}  // namespace

std::string Date::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", year, month, day);
  return buf;
}

std::optional<Date> Date::parse(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto digits = [&](std::size_t from, std::size_t n) -> std::optional<int> {
    int v = 0;
    for (std::size_t i = from; i < from + n; ++i) {
      if (text[i] < '0' || text[i] > '9') return std::nullopt;
      v = v * 10 + (text[i] - '0');
    }
    return v;
  };
  auto y = digits(0, 4), m = digits(5, 2), d = digits(8, 2);
  if (!y || !m || !d) return std::nullopt;
  if (*m < 1 || *m > 12 || *d < 1 || *d > days_in_month(*y, *m)) return std::nullopt;
  return Date{*y, *m, *d};
}

std::string_view type_name(ValueType type) {
  switch (type) {
    case ValueType::Text: return "text";
    case ValueType::Integer: return "integer";
    case ValueType::Decimal: return "decimal";
    case ValueType::Boolean: return "boolean";
    case ValueType::Date: return "date";
    case ValueType::Reference: return "reference";
  }
  return "text";
}

std::optional<ValueType> parse_type_name(std::string_view name) {
  if (name == "text") return ValueType::Text;
  if (name == "integer") return ValueType::Integer;
  if (name == "decimal") return ValueType::Decimal;
  if (name == "boolean") return ValueType::Boolean;
  if (name == "date") return ValueType::Date;
  if (name == "reference") return ValueType::Reference;
  return std::nullopt;
}

bool conforms(const Value& value, ValueType type) {
  switch (type) {
    case ValueType::Text: return std::holds_alternative<std::string>(value);
    case ValueType::Integer: return std::holds_alternative<std::int64_t>(value);
    case ValueType::Decimal: return std::holds_alternative<double>(value);
    case ValueType::Boolean: return std::holds_alternative<bool>(value);
    case ValueType::Date: return std::holds_alternative<Date>(value);
    case ValueType::Reference: return std::holds_alternative<Ref>(value);
  }
  return false;
}

nlohmann::json to_json(const Value& value) {
  return std::visit(
      [](const auto& v) -> nlohmann::json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, Date>) {
          return v.str();
        } else if constexpr (std::is_same_v<T, Ref>) {
          return v.id;
        } else {
          return v;
        }
      },
      value);
}

nlohmann::json to_json(const ValueMap& values) {
  nlohmann::json out = nlohmann::json::object();
  for (const auto& [k, v] : values) out[k] = to_json(v);
  return out;
}

Value value_from_json(const nlohmann::json& j, const AttributeSpec& spec) {
  if (j.is_null()) return std::monostate{};
  auto mismatch = [&]() {
    return Error(ErrorKind::TypeMismatch,
                 "attribute '" + spec.name + "' expects " + std::string(type_name(spec.type)) + ", got " + j.dump(),
                 {{"attribute", spec.name}, {"expected", std::string(type_name(spec.type))}});
  };
  switch (spec.type) {
    case ValueType::Text:
      if (!j.is_string()) throw mismatch();
      return j.get<std::string>();
    case ValueType::Integer:
      if (!j.is_number_integer()) throw mismatch();
      return j.get<std::int64_t>();
    case ValueType::Decimal:
      if (!j.is_number()) throw mismatch();
      if (!std::isfinite(j.get<double>())) throw mismatch();
      return j.get<double>();
    case ValueType::Boolean:
      if (!j.is_boolean()) throw mismatch();
      return j.get<bool>();
    case ValueType::Date: {
      if (!j.is_string()) throw mismatch();
      auto d = Date::parse(j.get<std::string>());
      if (!d) throw mismatch();
      return *d;
    }
    case ValueType::Reference:
      if (!j.is_number_integer()) throw mismatch();
      return Ref{j.get<ObjectId>()};
  }
  throw mismatch();
}

std::string to_display(const Value& value) {
  return std::visit(
      [](const auto& v) -> std::string {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, std::monostate>) {
          return "";
        } else if constexpr (std::is_same_v<T, std::string>) {
          return v;
        } else if constexpr (std::is_same_v<T, bool>) {
          return v ? "true" : "false";
        } else if constexpr (std::is_same_v<T, Date>) {
          return v.str();
        } else if constexpr (std::is_same_v<T, Ref>) {
          return std::to_string(v.id);
        } else if constexpr (std::is_same_v<T, double>) {
          return nlohmann::json(v).dump();
        } else {
          return std::to_string(v);
        }
      },
      value);
}

}  // namespace unistore
