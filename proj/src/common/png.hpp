// Copyright 2026 The Chartforge Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "common/digest.hpp"

namespace chartforge {

// 8-bit RGB raster. Pixel (x, y) starts at 3 * (y * width + x).
struct RgbImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;
};

// Decodes any PNG libpng understands into RGB8; alpha is dropped and
// palette/gray/16-bit inputs are expanded. Throws Error(kInvalidInput).
RgbImage decode_png(std::span<const std::uint8_t> png);

// Encodes an RGB8 image. Text chunks are written uncompressed, in key order.
Bytes encode_png(const RgbImage& image, const std::map<std::string, std::string>& text = {});

bool looks_like_png(std::span<const std::uint8_t> data);

}  // namespace chartforge
