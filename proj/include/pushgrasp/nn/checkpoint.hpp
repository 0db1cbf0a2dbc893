#ifndef PUSHGRASP_NN_CHECKPOINT_HPP_
#define PUSHGRASP_NN_CHECKPOINT_HPP_

#include <string>

#include "pushgrasp/nn/optim.hpp"

namespace pushgrasp::nn {

// Checkpoint byte layout (all integers little-endian):
//   magic "PGCKPT01" (8 bytes)
//   u32 version = 1
//   u32 tensor count
//   per tensor: u32 name_len, name bytes, u32 ndim, u32 dims[ndim], u8 dtype (1 = f64)
//   u8 has_optimizer_state
//   if set: u64 step_count
//   payload: raw little-endian f64 values per tensor, in header order
//   if optimizer state: first moments then second moments, same order
void save_checkpoint(const ParamStore& store, const std::string& path, bool with_optimizer_state = true);
ParamStore load_checkpoint(const std::string& path);

std::string checkpoint_to_bytes(const ParamStore& store, bool with_optimizer_state = true);
ParamStore checkpoint_from_bytes(const std::string& bytes);

}  // namespace pushgrasp::nn

#endif  // PUSHGRASP_NN_CHECKPOINT_HPP_
