#pragma once

#include <filesystem>

#include "loopcompat/matrix.hpp"

namespace loopcompat::store {

/// Binary matrix file: magic "LCMAT\0\0\1", u64 rows, u64 cols, float64 data.
void save_matrix(const std::filesystem::path& path, const Matrix& m);
Matrix load_matrix(const std::filesystem::path& path);

}  // namespace loopcompat::store
