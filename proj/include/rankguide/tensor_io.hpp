#pragma once

#include <string>

#include "rankguide/tensor.hpp"

namespace rankguide {

/// Binary tensor container (".rgt"): magic "RGT1", u32-LE ndims,
/// ndims x u32-LE mode sizes, then product(dims) float64-LE values,
/// row-major. Malformed input is rejected with the offending byte offset.
[[nodiscard]] Tensor read_rgt(const std::string& path);
void write_rgt(const Tensor& t, const std::string& path);

}  // namespace rankguide
