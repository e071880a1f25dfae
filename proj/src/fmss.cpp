#include "ursa/fmss.hpp"

#include "ursa/error.hpp"

namespace ursa {

std::string to_string(const FmssId& id) {
    return id.file + ":" + id.model + ":" + std::to_string(id.shader) + ":" +
           std::to_string(id.sampler);
}

void to_json(nlohmann::json& j, const FmssId& id) {
    j = nlohmann::json{{"file", id.file}, {"model", id.model}, {"shader", id.shader},
                       {"sampler", id.sampler}};
}

void from_json(const nlohmann::json& j, FmssId& id) {
    if (!j.is_object()) throw Error(ErrorCode::parse_error, "FMSS identifier must be an object");
    try {
        id.file = j.at("file").get<std::string>();
        id.model = j.at("model").get<std::string>();
        id.shader = j.at("shader").get<std::int32_t>();
        id.sampler = j.at("sampler").get<std::int32_t>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::parse_error, std::string("bad FMSS identifier: ") + e.what());
    }
}

}  // namespace ursa
