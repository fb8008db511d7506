#pragma once

// Minimal JSON-schema checker covering the subset used by the shipped result
// schema: type, enum, required, properties, items, and local $ref into
// #/definitions. Test-support code only.

#include <json.hpp>
#include <string>

namespace gma::test {

class SchemaChecker {
public:
    explicit SchemaChecker(nlohmann::json schema) : root_(std::move(schema)) {}

    /// Validates instance against the named definition; returns an empty
    /// string on success, else a description of the first violation.
    std::string check_definition(const std::string& name, const nlohmann::json& instance) const {
        return check(root_.at("definitions").at(name), instance, "$");
    }

private:
    nlohmann::json root_;

    static bool type_matches(const std::string& type, const nlohmann::json& v) {
        if (type == "object") return v.is_object();
        if (type == "array") return v.is_array();
        if (type == "string") return v.is_string();
        if (type == "number") return v.is_number();
        if (type == "integer") return v.is_number_integer() || v.is_number_unsigned();
        if (type == "boolean") return v.is_boolean();
        if (type == "null") return v.is_null();
        return false;
    }

    const nlohmann::json& resolve(const nlohmann::json& schema) const {
        if (schema.contains("$ref")) {
            std::string ref = schema["$ref"].get<std::string>();
            const std::string prefix = "#/definitions/";
            return root_.at("definitions").at(ref.substr(prefix.size()));
        }
        return schema;
    }

    std::string check(const nlohmann::json& schema_in, const nlohmann::json& v,
                      const std::string& path) const {
        const nlohmann::json& schema = resolve(schema_in);
        if (schema.contains("type") &&
            !type_matches(schema["type"].get<std::string>(), v))
            return path + ": expected type " + schema["type"].get<std::string>();
        if (schema.contains("enum")) {
            bool ok = false;
            for (const auto& cand : schema["enum"]) ok |= (cand == v);
            if (!ok) return path + ": value not in enum";
        }
        if (schema.contains("required")) {
            for (const auto& key : schema["required"])
                if (!v.contains(key.get<std::string>()))
                    return path + ": missing required key '" + key.get<std::string>() + "'";
        }
        if (schema.contains("properties") && v.is_object()) {
            for (const auto& [key, sub] : schema["properties"].items()) {
                if (!v.contains(key)) continue;
                std::string err = check(sub, v.at(key), path + "." + key);
                if (!err.empty()) return err;
            }
        }
        if (schema.contains("items") && v.is_array()) {
            int i = 0;
            for (const auto& elem : v) {
                std::string err =
                    check(schema["items"], elem, path + "[" + std::to_string(i++) + "]");
                if (!err.empty()) return err;
            }
        }
        return "";
    }
};

}  // namespace gma::test
