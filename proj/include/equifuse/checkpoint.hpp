#pragma once

#include <string>
#include <vector>

#include "equifuse/optim.hpp"

namespace equifuse {

// Checkpoint container: one JSON document with a manifest per tensor
// (group name, tensor name, shape, frozen flag) followed by the row-major
// values. Doubles are serialized with shortest round-trip formatting, so
// save/load is value-exact.
void save_checkpoint(const std::string& path,
                     const std::vector<ParamGroup>& groups);

// Loads values into an existing group structure. Group/tensor names,
// shapes, and frozen flags must match the manifest; mismatches raise
// DataError.
void load_checkpoint(const std::string& path, std::vector<ParamGroup>& groups);

}  // namespace equifuse
