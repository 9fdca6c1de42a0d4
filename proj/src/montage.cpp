#include "eegvc/montage.hpp"

namespace eegvc {

namespace {

Montage build() {
  Montage m;
  m.canonical = {"Fp1", "Fp2", "F7", "F3", "Fz", "F4", "F8", "T3", "C3",
                 "Cz",  "C4",  "T4", "T5", "P3", "Pz", "P4", "T6"};
  m.source = {"Fp1", "Fp2", "F7", "F8"};
  for (const std::string& s : m.source) {
    for (std::size_t i = 0; i < m.canonical.size(); ++i) {
      if (m.canonical[i] == s) m.source_idx.push_back(i);
    }
  }
  for (std::size_t i = 0; i < m.canonical.size(); ++i) {
    bool is_source = false;
    for (std::size_t s : m.source_idx) is_source |= (s == i);
    if (!is_source) m.virtual_idx.push_back(i);
  }
  // front row 0, F row 1, central/temporal row 2, parietal row 3
  m.hops = {0, 0, 0, 1, 1, 1, 0, 2, 2, 2, 2, 2, 3, 3, 3, 3, 3};
  return m;
}

}  // namespace

const Montage& montage() {
  static const Montage m = build();
  return m;
}

int Montage::index_of(const std::string& name) const {
  for (std::size_t i = 0; i < canonical.size(); ++i) {
    if (canonical[i] == name) return static_cast<int>(i);
  }
  return -1;
}

}  // namespace eegvc
