#include "gar/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace gar {

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload assumes a little-endian host");

std::uint64_t ParamStore::checksum() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    auto mixin = [&h](std::uint64_t v) {
        h ^= v;
        h *= 0x100000001b3ULL;
    };
    for (const auto& [name, t] : items_) {
        for (char c : name) mixin(static_cast<std::uint64_t>(static_cast<unsigned char>(c)));
        for (double x : t.data) {
            std::uint64_t bits;
            std::memcpy(&bits, &x, sizeof bits);
            mixin(bits);
        }
    }
    return h;
}

void save_named_tensors(const std::string& path, const nlohmann::json& meta,
                        const ParamStore& params) {
    nlohmann::json header;
    header["meta"] = meta;
    auto& table = header["tensors"] = nlohmann::json::array();
    for (const auto& [name, t] : params) {
        table.push_back({{"name", name}, {"shape", t.shape}});
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out << header.dump() << '\n';
    for (const auto& [name, t] : params)
        out.write(reinterpret_cast<const char*>(t.data.data()),
                  static_cast<std::streamsize>(t.data.size() * sizeof(double)));
    if (!out) throw std::runtime_error("write failed: " + path);
}

nlohmann::json load_named_tensors(const std::string& path, ParamStore& params) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("truncated checkpoint header: " + path);
    nlohmann::json header = nlohmann::json::parse(line);
    for (const auto& entry : header.at("tensors")) {
        std::vector<std::size_t> shape = entry.at("shape").get<std::vector<std::size_t>>();
        Tensor t(shape, std::vector<double>(Tensor::numel_of(shape), 0.0));
        in.read(reinterpret_cast<char*>(t.data.data()),
                static_cast<std::streamsize>(t.data.size() * sizeof(double)));
        if (!in) throw std::runtime_error("truncated tensor payload in " + path);
        params.add(entry.at("name").get<std::string>(), std::move(t));
    }
    return header.at("meta");
}

}  // namespace gar
