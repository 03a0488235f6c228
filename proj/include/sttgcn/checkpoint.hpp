#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "sttgcn/data_io.hpp"
#include "sttgcn/model.hpp"
#include "sttgcn/train.hpp"

namespace sttgcn {

inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ModelParams params;
  TrainConfig config;
  Scaler scaler;
  std::uint64_t seed = 0;
};

/// JSON text; doubles are written in shortest round-trip form so loading is bit-exact.
std::string checkpoint_to_json(const Checkpoint& c);
Checkpoint checkpoint_from_json(const std::string& text);

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sttgcn
