#pragma once

#include <string>

#include "multibin/binning.hpp"
#include "multibin/net.hpp"

namespace multibin {

struct Checkpoint {
  MultiHeadNetwork net;
  DiscretizationEnsemble ensemble;  // empty member list for direct regression
};

// Versioned binary checkpoint ("MBCK", see README for the layout). Parameters
// are stored as raw little-endian 64-bit floats, so save/load round-trips
// bit-exactly.
void save_checkpoint(const std::string& path, const MultiHeadNetwork& net,
                     const DiscretizationEnsemble& ensemble);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace multibin
