#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "rfad/nn/params.hpp"

namespace rfad::nn {

// Checkpoint container: magic "RFA1", u16 version, u32 block count, then per
// block u32 name length, name bytes, u32 rank, rank x u32 dims, row-major
// little-endian f32 payload.
struct ParamBlock {
    std::string name;
    std::vector<int> shape;
    std::vector<float> data;

    bool operator==(const ParamBlock&) const = default;
};

struct Checkpoint {
    uint16_t version = 1;
    std::vector<ParamBlock> blocks;

    bool operator==(const Checkpoint&) const = default;
};

void write_checkpoint(std::ostream& out, const Checkpoint& ck);
Checkpoint read_checkpoint(std::istream& in);  // throws FormatError

void save_checkpoint_file(const std::string& path, const Checkpoint& ck);
Checkpoint load_checkpoint_file(const std::string& path);

// Parameter values are stored in f32; loading restores them as doubles.
Checkpoint checkpoint_from_store(const ParamStore& params);
void checkpoint_into_store(const Checkpoint& ck, ParamStore& params);  // names+shapes must match

}  // namespace rfad::nn
