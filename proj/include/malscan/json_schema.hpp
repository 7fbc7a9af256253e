#pragma once

#include "malscan/common.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <regex>
#include <string>
#include <vector>

namespace malscan {

/// Validator for the JSON Schema subset used by the shipped schemas:
/// type, enum, const, properties, required, additionalProperties (boolean),
/// items, minItems, minLength, minimum, maximum, pattern, anyOf and local
/// "#/$defs/..." references. Annotation keywords are ignored.
class JsonSchema {
public:
  explicit JsonSchema(nlohmann::json schema) : root_(std::move(schema)) {}

  static JsonSchema parse(std::string_view text) {
    return JsonSchema(nlohmann::json::parse(text));
  }

  /// Error messages of the form "<json pointer>: <reason>"; empty when valid.
  [[nodiscard]] std::vector<std::string> validate(const nlohmann::json &doc) const {
    std::vector<std::string> errors;
    check(root_, doc, "", errors);
    return errors;
  }

  [[nodiscard]] bool valid(const nlohmann::json &doc) const {
    return validate(doc).empty();
  }

private:
  const nlohmann::json &resolve(const std::string &ref) const {
    static constexpr std::string_view kPrefix = "#/$defs/";
    if (ref.rfind(kPrefix, 0) != 0)
      throw Error("unsupported $ref: " + ref);
    const auto &defs = root_.at("$defs");
    return defs.at(ref.substr(kPrefix.size()));
  }

  static bool type_matches(const std::string &type, const nlohmann::json &v) {
    if (type == "object") return v.is_object();
    if (type == "array") return v.is_array();
    if (type == "string") return v.is_string();
    if (type == "boolean") return v.is_boolean();
    if (type == "null") return v.is_null();
    if (type == "number") return v.is_number();
    if (type == "integer") {
      if (v.is_number_integer())
        return true;
      if (v.is_number_float()) {
        double d = v.get<double>();
        return std::floor(d) == d;
      }
      return false;
    }
    return false;
  }

  static std::string escape_pointer(const std::string &key) {
    std::string out;
    for (char c : key) {
      if (c == '~') out += "~0";
      else if (c == '/') out += "~1";
      else out += c;
    }
    return out;
  }

  void check(const nlohmann::json &schema, const nlohmann::json &v,
             const std::string &at, std::vector<std::string> &errors) const {
    if (schema.is_boolean()) {
      if (!schema.get<bool>())
        errors.push_back(at + ": not allowed");
      return;
    }
    if (auto it = schema.find("$ref"); it != schema.end()) {
      check(resolve(it->get<std::string>()), v, at, errors);
    }
    if (auto it = schema.find("type"); it != schema.end()) {
      bool ok = false;
      if (it->is_string()) {
        ok = type_matches(it->get<std::string>(), v);
      } else {
        for (const auto &t : *it)
          ok = ok || type_matches(t.get<std::string>(), v);
      }
      if (!ok) {
        errors.push_back(at + ": expected type " + it->dump());
        return;
      }
    }
    if (auto it = schema.find("const"); it != schema.end() && *it != v)
      errors.push_back(at + ": expected constant " + it->dump());
    if (auto it = schema.find("enum"); it != schema.end()) {
      bool ok = false;
      for (const auto &e : *it)
        ok = ok || e == v;
      if (!ok)
        errors.push_back(at + ": value " + v.dump() + " not in enum");
    }
    if (auto it = schema.find("anyOf"); it != schema.end()) {
      bool ok = false;
      for (const auto &alt : *it) {
        std::vector<std::string> sub;
        check(alt, v, at, sub);
        if (sub.empty()) {
          ok = true;
          break;
        }
      }
      if (!ok)
        errors.push_back(at + ": matches none of anyOf");
    }
    if (v.is_string()) {
      const auto &s = v.get_ref<const std::string &>();
      if (auto it = schema.find("minLength"); it != schema.end() &&
                                              s.size() < it->get<std::size_t>())
        errors.push_back(at + ": string shorter than " + it->dump());
      if (auto it = schema.find("pattern"); it != schema.end()) {
        std::regex re(it->get<std::string>(), std::regex::ECMAScript);
        if (!std::regex_search(s, re))
          errors.push_back(at + ": does not match pattern " + it->dump());
      }
    }
    if (v.is_number()) {
      double d = v.get<double>();
      if (auto it = schema.find("minimum"); it != schema.end() && d < it->get<double>())
        errors.push_back(at + ": below minimum " + it->dump());
      if (auto it = schema.find("maximum"); it != schema.end() && d > it->get<double>())
        errors.push_back(at + ": above maximum " + it->dump());
    }
    if (v.is_array()) {
      if (auto it = schema.find("minItems"); it != schema.end() &&
                                             v.size() < it->get<std::size_t>())
        errors.push_back(at + ": fewer than " + it->dump() + " items");
      if (auto it = schema.find("items"); it != schema.end())
        for (std::size_t i = 0; i < v.size(); ++i)
          check(*it, v[i], at + "/" + std::to_string(i), errors);
    }
    if (v.is_object()) {
      if (auto it = schema.find("required"); it != schema.end())
        for (const auto &key : *it)
          if (!v.contains(key.get<std::string>()))
            errors.push_back(at + ": missing required property " + key.dump());
      const auto props = schema.find("properties");
      for (const auto &[key, value] : v.items()) {
        const auto child = at + "/" + escape_pointer(key);
        if (props != schema.end() && props->contains(key)) {
          check(props->at(key), value, child, errors);
        } else if (auto ap = schema.find("additionalProperties"); ap != schema.end()) {
          if (ap->is_boolean() && !ap->get<bool>())
            errors.push_back(child + ": unexpected property");
          else if (ap->is_object())
            check(*ap, value, child, errors);
        }
      }
    }
  }

  nlohmann::json root_;
};

} // namespace malscan
