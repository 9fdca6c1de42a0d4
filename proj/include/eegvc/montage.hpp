#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace eegvc {

// Canonical 17-channel 10-20 montage. Row order of every 17-row matrix in the
// pipeline. The four frontal source channels are the network input; the
// remaining 13 are synthesized.
struct Montage {
  std::vector<std::string> canonical;
  std::vector<std::string> source;        // Fp1, Fp2, F7, F8
  std::vector<std::size_t> source_idx;    // positions within canonical
  std::vector<std::size_t> virtual_idx;   // the other 13 positions
  // Scalp-row hops from the nearest source channel (0 for sources themselves);
  // used by the synthetic generator's distance-dependent mixing.
  std::vector<int> hops;

  int index_of(const std::string& name) const;  // -1 when absent
};

const Montage& montage();

}  // namespace eegvc
