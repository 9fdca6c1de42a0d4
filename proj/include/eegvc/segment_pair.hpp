#pragma once

#include <cstdint>
#include <string>

#include "eegvc/types.hpp"

namespace eegvc {

// One training example: a source block in source-channel order plus the full
// target block in canonical montage order. The source rows are also rows of
// the target block.
struct SegmentPair {
  Mat source;  // source channels x seg_len
  Mat target;  // montage channels x seg_len
  std::string subject_id;
  std::uint32_t subject_hash = 0;
  std::uint32_t index = 0;
};

}  // namespace eegvc
