#include "rfad/nn/checkpoint.hpp"

#include <fstream>

#include "rfad/core/binio.hpp"
#include "rfad/core/error.hpp"

namespace rfad::nn {

namespace {
constexpr char kMagic[4] = {'R', 'F', 'A', '1'};
constexpr uint32_t kMaxDim = 1u << 24;  // sanity bound against corrupt headers
}  // namespace

void write_checkpoint(std::ostream& out, const Checkpoint& ck) {
    io::write_bytes(out, kMagic, 4);
    io::write_u16(out, ck.version);
    io::write_u32(out, static_cast<uint32_t>(ck.blocks.size()));
    for (const auto& b : ck.blocks) {
        io::write_u32(out, static_cast<uint32_t>(b.name.size()));
        io::write_bytes(out, b.name.data(), b.name.size());
        io::write_u32(out, static_cast<uint32_t>(b.shape.size()));
        uint64_t n = 1;
        for (int d : b.shape) {
            io::write_u32(out, static_cast<uint32_t>(d));
            n *= static_cast<uint64_t>(d);
        }
        if (n != b.data.size()) throw std::invalid_argument("checkpoint block size mismatch: " + b.name);
        for (float v : b.data) io::write_f32(out, v);
    }
}

Checkpoint read_checkpoint(std::istream& in) {
    char magic[4];
    io::read_bytes(in, magic, 4);
    if (!std::equal(magic, magic + 4, kMagic)) throw FormatError("bad checkpoint magic");
    Checkpoint ck;
    ck.version = io::read_u16(in);
    if (ck.version != 1) throw FormatError("unsupported checkpoint version " + std::to_string(ck.version));
    const uint32_t count = io::read_u32(in);
    ck.blocks.reserve(count);
    for (uint32_t i = 0; i < count; ++i) {
        ParamBlock b;
        const uint32_t name_len = io::read_u32(in);
        if (name_len > 4096) throw FormatError("checkpoint block name too long");
        b.name = io::read_string(in, name_len);
        const uint32_t rank = io::read_u32(in);
        if (rank > 8) throw FormatError("checkpoint block rank too large: " + b.name);
        uint64_t n = 1;
        for (uint32_t d = 0; d < rank; ++d) {
            const uint32_t dim = io::read_u32(in);
            if (dim == 0 || dim > kMaxDim) throw FormatError("checkpoint block dim invalid: " + b.name);
            b.shape.push_back(static_cast<int>(dim));
            n *= dim;
        }
        if (n > (1ull << 30)) throw FormatError("checkpoint block too large: " + b.name);
        b.data.resize(n);
        for (uint64_t j = 0; j < n; ++j) b.data[j] = io::read_f32(in);
        ck.blocks.push_back(std::move(b));
    }
    // trailing bytes mean the file was not produced by this writer
    if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes after checkpoint data");
    return ck;
}

void save_checkpoint_file(const std::string& path, const Checkpoint& ck) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    write_checkpoint(out, ck);
    if (!out) throw std::runtime_error("write failed: " + path);
}

Checkpoint load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError("cannot open checkpoint: " + path);
    return read_checkpoint(in);
}

Checkpoint checkpoint_from_store(const ParamStore& params) {
    Checkpoint ck;
    for (const auto& name : params.names()) {
        const Tensor& t = params.get(name)->value;
        ParamBlock b;
        b.name = name;
        b.shape = t.shape();
        b.data.resize(static_cast<size_t>(t.size()));
        for (int64_t i = 0; i < t.size(); ++i) b.data[static_cast<size_t>(i)] = static_cast<float>(t[i]);
        ck.blocks.push_back(std::move(b));
    }
    return ck;
}

void checkpoint_into_store(const Checkpoint& ck, ParamStore& params) {
    if (ck.blocks.size() != params.names().size())
        throw FormatError("checkpoint block count does not match model");
    for (const auto& b : ck.blocks) {
        if (!params.has(b.name)) throw FormatError("checkpoint has unknown parameter: " + b.name);
        Tensor& t = params.get(b.name)->value;
        if (t.shape() != b.shape) throw FormatError("checkpoint shape mismatch for: " + b.name);
        for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<double>(b.data[static_cast<size_t>(i)]);
    }
}

}  // namespace rfad::nn
