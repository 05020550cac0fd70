#pragma once

#include <string>
#include <utility>
#include <vector>

#include "vabal/tensor.hpp"

namespace vabal {

/// Flat parameter manifest: JSON object mapping each parameter name to its
/// shape and row-major values. Shared by classifier, preprocessor, and VAE
/// checkpoints.
void save_manifest(const std::string& path,
                   const std::vector<std::pair<std::string, Tensor*>>& params);

/// Load into existing tensors; names and shapes must match exactly.
void load_manifest(const std::string& path,
                   const std::vector<std::pair<std::string, Tensor*>>& params);

}  // namespace vabal
