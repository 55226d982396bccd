#include "loopcompat/store/matrix_io.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>

#include "loopcompat/error.hpp"

namespace loopcompat::store {

static_assert(std::endian::native == std::endian::little, "matrix I/O assumes a little-endian host");

namespace {
constexpr std::array<char, 8> kMagic = {'L', 'C', 'M', 'A', 'T', '\0', '\0', '\1'};
}

void save_matrix(const std::filesystem::path& path, const Matrix& m) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    require(out.good(), ErrorKind::InvalidInput, "cannot write " + tmp.string());
    const std::uint64_t dims[2] = {m.rows, m.cols};
    out.write(kMagic.data(), kMagic.size());
    out.write(reinterpret_cast<const char*>(dims), sizeof dims);
    out.write(reinterpret_cast<const char*>(m.data.data()), static_cast<std::streamsize>(m.data.size() * sizeof(double)));
    require(out.good(), ErrorKind::InvalidInput, "failed writing " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

Matrix load_matrix(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), ErrorKind::InvalidInput, "cannot read " + path.string());
  std::array<char, 8> magic{};
  std::uint64_t dims[2] = {0, 0};
  in.read(magic.data(), magic.size());
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  require(in.good() && magic == kMagic, ErrorKind::InvalidInput, path.string() + " is not a matrix file");
  require(dims[0] <= (1u << 24) && dims[1] <= (1u << 24), ErrorKind::InvalidInput, path.string() + ": bad dimensions");
  Matrix m(dims[0], dims[1]);
  const auto bytes = static_cast<std::streamsize>(m.data.size() * sizeof(double));
  in.read(reinterpret_cast<char*>(m.data.data()), bytes);
  require(in.gcount() == bytes, ErrorKind::InvalidInput, path.string() + " is truncated");
  return m;
}

}  // namespace loopcompat::store
