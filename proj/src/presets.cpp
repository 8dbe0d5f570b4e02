#include "mlat/io.hpp"

#include "mlat/presets_embedded.hpp"

namespace mlat {

std::vector<std::string> preset_names()
{
    std::vector<std::string> out;
    for (const auto& [name, body] : detail::embedded_presets) {
        out.emplace_back(name);
    }
    return out;
}

json preset_document(const std::string& name)
{
    for (const auto& [key, body] : detail::embedded_presets) {
        if (key == name) {
            return json::parse(body);
        }
    }
    throw ValidationError("unknown preset '" + name + "'");
}

}  // namespace mlat
