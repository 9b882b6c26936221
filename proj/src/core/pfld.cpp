#include "core/pfld.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "core/errors.hpp"

static_assert(std::endian::native == std::endian::little, "PFLD I/O assumes a little-endian host");

namespace patchflow {

BinaryWriter::BinaryWriter(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "wb");
  if (!file_) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
}

void BinaryWriter::bytes(const void* p, std::size_t n) {
  if (n && std::fwrite(p, 1, n, file_) != n) fail(ErrorCode::io, "write failed for '" + path_ + "'");
}

void BinaryWriter::close() {
  if (!file_) return;
  const int rc = std::fclose(file_);
  file_ = nullptr;
  if (rc != 0) fail(ErrorCode::io, "close failed for '" + path_ + "'");
}

BinaryWriter::~BinaryWriter() {
  if (file_) std::fclose(file_);
}

BinaryReader::BinaryReader(const std::string& path) : path_(path) {
  file_ = std::fopen(path.c_str(), "rb");
  if (!file_) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
}

void BinaryReader::bytes(void* p, std::size_t n) {
  if (n && std::fread(p, 1, n, file_) != n) fail(ErrorCode::io, "unexpected end of file in '" + path_ + "'");
}

std::uint32_t BinaryReader::u32() {
  std::uint32_t v;
  bytes(&v, sizeof v);
  return v;
}

std::uint64_t BinaryReader::u64() {
  std::uint64_t v;
  bytes(&v, sizeof v);
  return v;
}

double BinaryReader::f64() {
  double v;
  bytes(&v, sizeof v);
  return v;
}

std::vector<double> BinaryReader::f64s(std::size_t count) {
  std::vector<double> v(count);
  bytes(v.data(), count * sizeof(double));
  return v;
}

bool BinaryReader::expect_magic(const char* m) {
  char buf[4];
  if (std::fread(buf, 1, 4, file_) != 4) return false;
  return std::memcmp(buf, m, 4) == 0;
}

bool BinaryReader::at_end() {
  const int c = std::fgetc(file_);
  if (c == EOF) return true;
  std::ungetc(c, file_);
  return false;
}

BinaryReader::~BinaryReader() {
  if (file_) std::fclose(file_);
}

double infer_spacing(int n, const std::vector<double>& points) {
  const std::size_t count = points.size() / n;
  double best = 0.0;
  std::vector<double> axis(count);
  for (int d = 0; d < n; ++d) {
    for (std::size_t i = 0; i < count; ++i) axis[i] = points[i * n + d];
    std::sort(axis.begin(), axis.end());
    for (std::size_t i = 1; i < count; ++i) {
      const double gap = axis[i] - axis[i - 1];
      if (gap > 1e-12 * (1.0 + std::abs(axis[i])) && (best == 0.0 || gap < best)) best = gap;
    }
  }
  return best;
}

void write_field_pfld(const std::string& path, const ScalarField& f) {
  BinaryWriter w(path);
  w.magic("PFLD");
  w.u32(static_cast<std::uint32_t>(f.n));
  w.u64(f.size());
  w.f64s(f.points);
  w.f64s(f.values);
  w.close();
}

ScalarField read_field_pfld(const std::string& path) {
  BinaryReader r(path);
  if (!r.expect_magic("PFLD")) fail(ErrorCode::io, "'" + path + "' is not a PFLD file");
  ScalarField f;
  f.n = static_cast<int>(r.u32());
  const std::uint64_t count = r.u64();
  if (f.n < 1 || f.n > 16 || count == 0 || count > (1ULL << 34)) fail(ErrorCode::io, "bad PFLD header in '" + path + "'");
  f.points = r.f64s(count * f.n);
  f.values = r.f64s(count);
  f.h = infer_spacing(f.n, f.points);
  f.update_support_box();
  return f;
}

void write_field_csv(const std::string& path, const ScalarField& f) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot open '" + path + "' for writing");
  for (int d = 0; d < f.n; ++d) out << 'x' << (d + 1) << ',';
  out << "value\n";
  char buf[32];
  for (std::size_t i = 0; i < f.size(); ++i) {
    for (int d = 0; d < f.n; ++d) {
      std::snprintf(buf, sizeof buf, "%.17g,", f.points[i * f.n + d]);
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", f.values[i]);
    out << buf;
  }
  if (!out) fail(ErrorCode::io, "write failed for '" + path + "'");
}

ScalarField read_field_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
  std::string line;
  if (!std::getline(in, line)) fail(ErrorCode::io, "'" + path + "' is empty");
  const int columns = static_cast<int>(std::count(line.begin(), line.end(), ',')) + 1;
  if (columns < 2) fail(ErrorCode::io, "'" + path + "' needs at least one coordinate column");
  ScalarField f;
  f.n = columns - 1;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    int c = 0;
    while (std::getline(ss, cell, ',')) {
      double v;
      try {
        v = std::stod(cell);
      } catch (const std::exception&) {
        fail(ErrorCode::io, "bad number '" + cell + "' in '" + path + "'");
      }
      if (c < f.n) f.points.push_back(v);
      else f.values.push_back(v);
      ++c;
    }
    if (c != columns) fail(ErrorCode::io, "ragged row in '" + path + "'");
  }
  if (f.values.empty()) fail(ErrorCode::io, "'" + path + "' has no samples");
  f.h = infer_spacing(f.n, f.points);
  f.update_support_box();
  return f;
}

ScalarField read_field(const std::string& path) {
  {
    std::ifstream probe(path, std::ios::binary);
    if (!probe) fail(ErrorCode::io, "cannot open '" + path + "' for reading");
    char m[4] = {0, 0, 0, 0};
    probe.read(m, 4);
    if (probe.gcount() == 4 && std::memcmp(m, "PFLD", 4) == 0) return read_field_pfld(path);
  }
  return read_field_csv(path);
}

}  // namespace patchflow
