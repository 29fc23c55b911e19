#pragma once

#include <string>

#include "gar/paramstore.hpp"

#include "json.hpp"

namespace gar {

// Flat named-tensor container: one JSON header line (meta + tensor table),
// then raw little-endian float64 payloads in table order.
void save_named_tensors(const std::string& path, const nlohmann::json& meta,
                        const ParamStore& params);
nlohmann::json load_named_tensors(const std::string& path, ParamStore& params);

}  // namespace gar
