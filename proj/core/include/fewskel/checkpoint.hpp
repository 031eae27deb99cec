#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "fewskel/gam.hpp"

namespace fewskel {

inline constexpr int kCheckpointFormatVersion = 1;

struct Checkpoint {
  GamModel model;
  LossConfig loss;
};

/// JSON header (architecture, seed, loss weights) with the flat parameter
/// array embedded as base64 of little-endian float64 values.
std::string serialize_checkpoint(const GamModel& model, const LossConfig& loss);
Checkpoint parse_checkpoint(std::string_view text);

void save_checkpoint(const std::filesystem::path& path, const GamModel& model,
                     const LossConfig& loss);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// CSV with header `epoch,mean_loss,mean_rot,mean_rec`.
std::string loss_history_csv(const std::vector<EpochStats>& history);

std::string base64_encode(std::string_view bytes);
std::string base64_decode(std::string_view text);

}  // namespace fewskel
