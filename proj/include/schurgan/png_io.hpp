#pragma once

#include <string>

#include "schurgan/matrix.hpp"

namespace schurgan::io {

// Grayscale 8-bit PNG, min-max normalized; for visual inspection only.
void write_png_gray(const std::string& path, const Matrix& m);

}  // namespace schurgan::io
