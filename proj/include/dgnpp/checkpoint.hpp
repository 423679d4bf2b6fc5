#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

#include "dgnpp/model_params.hpp"
#include "dgnpp/train.hpp"

namespace dgnpp {

inline constexpr int kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Checkpoint {
  TrainConfig config;
  ModelParams params;
  std::size_t epochs_completed = 0;
  // Every random draw in training derives from (seed, epoch, event index),
  // so the seed and the epoch counter are the whole generator state.
  std::uint64_t rng_seed = 0;
  std::uint64_t rng_epoch = 0;
};

void save_checkpoint(const Checkpoint& ckpt, std::ostream& out);
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(std::istream& in);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace dgnpp
