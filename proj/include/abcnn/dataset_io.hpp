#pragma once

#include "abcnn/types.hpp"

#include <string>

namespace abcnn {

// One-line JSON header followed by N binary records, each
//   [u8 split][q doubles theta][p doubles x]   (little-endian, f64).
// The round trip load(save(ds)) == ds is bit-exact.
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace abcnn
