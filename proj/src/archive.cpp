#include "vlstm/archive.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace vlstm::archive {

namespace {

constexpr char kMagic[6] = {'N', 'T', 'A', 'R', '1', '\n'};

static_assert(std::endian::native == std::endian::little,
              "archive writer assumes a little-endian host");

template <typename T>
void write_pod(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    if (!in) throw std::runtime_error("archive: truncated file");
    return v;
}

}  // namespace

void save(const std::filesystem::path& path, const nd::NamedTensors& tensors) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("archive: cannot open " + path.string() + " for writing");
    out.write(kMagic, sizeof(kMagic));
    write_pod<uint32_t>(out, static_cast<uint32_t>(tensors.size()));
    for (const auto& [name, t] : tensors) {  // std::map iterates in name order
        if (name.size() > 0xFFFF) throw std::invalid_argument("archive: tensor name too long");
        write_pod<uint16_t>(out, static_cast<uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(t.rows()));
        write_pod<uint32_t>(out, static_cast<uint32_t>(t.cols()));
        out.write(reinterpret_cast<const char*>(t.data()),
                  static_cast<std::streamsize>(t.numel() * sizeof(double)));
    }
    if (!out) throw std::runtime_error("archive: write failed for " + path.string());
}

nd::NamedTensors load(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("archive: cannot open " + path.string());
    char magic[sizeof(kMagic)];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
        throw std::runtime_error("archive: bad magic in " + path.string());

    nd::NamedTensors tensors;
    const uint32_t count = read_pod<uint32_t>(in);
    for (uint32_t e = 0; e < count; ++e) {
        const uint16_t name_len = read_pod<uint16_t>(in);
        std::string name(name_len, '\0');
        in.read(name.data(), name_len);
        const uint32_t rows = read_pod<uint32_t>(in);
        const uint32_t cols = read_pod<uint32_t>(in);
        if (!in) throw std::runtime_error("archive: truncated file");
        nd::Tensor t(static_cast<int>(rows), static_cast<int>(cols));
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(t.numel() * sizeof(double)));
        if (!in) throw std::runtime_error("archive: truncated tensor data for '" + name + "'");
        tensors.emplace(std::move(name), std::move(t));
    }
    return tensors;
}

}  // namespace vlstm::archive
