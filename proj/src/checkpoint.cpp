#include "tdformer/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace tdf {

namespace {

constexpr const char* kFormat = "tdformer-checkpoint";
constexpr int kVersion = 1;

void write_f64(std::ostream& out, double v) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
    unsigned char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<unsigned char>(bits >> (8 * i));
    out.write(reinterpret_cast<const char*>(bytes), 8);
}

double read_f64(std::istream& in, const std::string& path) {
    unsigned char bytes[8];
    if (!in.read(reinterpret_cast<char*>(bytes), 8)) {
        throw Error(ErrorKind::parse, path + ": parameter data is truncated");
    }
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[i]) << (8 * i);
    return std::bit_cast<double>(bits);
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
    nlohmann::json blocks = nlohmann::json::array();
    for_each_block(ckpt.params, [&](const std::string& name, const RealMatrix& b) {
        blocks.push_back({{"name", name}, {"rows", b.rows()}, {"cols", b.cols()}});
    });
    const nlohmann::json header{{"format", kFormat},        {"version", kVersion},
                                {"config", to_json(ckpt.config)}, {"seed", ckpt.seed},
                                {"epoch", ckpt.epoch},      {"blocks", blocks}};
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::io, "cannot write '" + path + "'");
    out << header.dump() << '\n';
    for_each_block(ckpt.params, [&](const std::string&, const RealMatrix& b) {
        for (double v : b.values()) write_f64(out, v);
    });
    if (!out) throw Error(ErrorKind::io, "failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "cannot open '" + path + "'");
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::parse, path + ": missing header");
    nlohmann::json header;
    try {
        header = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::parse, path + ": bad header: " + e.what());
    }
    if (header.value("format", "") != kFormat || header.value("version", 0) != kVersion) {
        throw Error(ErrorKind::parse, path + ": not a version-1 checkpoint");
    }
    Checkpoint ckpt;
    ckpt.config = model_config_from_json(header.at("config"));
    ckpt.seed = header.value("seed", std::uint64_t{0});
    ckpt.epoch = header.value("epoch", std::size_t{0});
    ckpt.params = init_params(ckpt.config, 0);
    const auto& blocks = header.at("blocks");
    std::size_t index = 0;
    for_each_block(ckpt.params, [&](const std::string& name, RealMatrix& b) {
        if (index >= blocks.size() || blocks[index].value("name", "") != name ||
            blocks[index].value("rows", std::size_t{0}) != b.rows() ||
            blocks[index].value("cols", std::size_t{0}) != b.cols()) {
            throw Error(ErrorKind::parse, path + ": block " + std::to_string(index) + " ('" + name +
                                              "') does not match the configured model");
        }
        for (double& v : b.values()) v = read_f64(in, path);
        ++index;
    });
    if (index != blocks.size()) throw Error(ErrorKind::parse, path + ": extra blocks in header");
    if (in.peek() != std::char_traits<char>::eof()) {
        throw Error(ErrorKind::parse, path + ": trailing bytes after parameter data");
    }
    return ckpt;
}

}  // namespace tdf
