#pragma once

#include <json.hpp>
#include <string>

namespace gma {

/// Command invocation echoed into every result file, so a run can be
/// reproduced from its own output. Keys appear in insertion order and values
/// are plain JSON scalars; the mapping is lossless by construction.
struct RunConfig {
    std::string command;
    nlohmann::ordered_json options = nlohmann::ordered_json::object();

    nlohmann::ordered_json to_json() const {
        nlohmann::ordered_json j;
        j["command"] = command;
        j["options"] = options;
        return j;
    }

    static RunConfig from_json(const nlohmann::ordered_json& j) {
        RunConfig cfg;
        cfg.command = j.at("command").get<std::string>();
        cfg.options = j.at("options");
        return cfg;
    }

    bool operator==(const RunConfig& other) const {
        return command == other.command && options == other.options;
    }
};

}  // namespace gma
