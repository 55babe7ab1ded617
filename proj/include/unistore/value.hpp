#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"
#include "unistore/types.hpp"

namespace unistore {

struct Date {
  int year = 1970;
  int month = 1;
  int day = 1;

  auto operator<=>(const Date&) const = default;

  std::string str() const;
  static std::optional<Date> parse(std::string_view text);
};

struct Ref {
  ObjectId id = 0;
  auto operator<=>(const Ref&) const = default;
};

// monostate is the absent value.
using Value = std::variant<std::monostate, std::string, std::int64_t, double, bool, Date, Ref>;
using ValueMap = std::map<std::string, Value>;

enum class ValueType { Text, Integer, Decimal, Boolean, Date, Reference };

struct AttributeSpec {
  std::string name;
  ValueType type = ValueType::Text;
  // Concept id for references; 0 for other types.
  ObjectId target = 0;
  bool required = false;

  bool operator==(const AttributeSpec&) const = default;
};

std::string_view type_name(ValueType type);
std::optional<ValueType> parse_type_name(std::string_view name);

inline bool is_absent(const Value& v) { return std::holds_alternative<std::monostate>(v); }

bool conforms(const Value& value, ValueType type);

// Canonical JSON: text/number/bool, dates as "YYYY-MM-DD", references as ids.
nlohmann::json to_json(const Value& value);
nlohmann::json to_json(const ValueMap& values);

// Decodes a JSON value against an attribute spec; null decodes to absent.
// Throws Error(TypeMismatch) when the JSON shape does not fit the type.
Value value_from_json(const nlohmann::json& j, const AttributeSpec& spec);

std::string to_display(const Value& value);

}  // namespace unistore
