#pragma once

#include <cstdint>
#include <cstdio>
#include <string>
#include <vector>

#include "core/fields.hpp"

namespace patchflow {

/// Binary field format: "PFLD", u32 n, u64 count, count*n coordinates, then
/// count values, all little-endian float64. Extra blocks may follow the
/// values (flow snapshots append DX, detDX, rho0 and a resume trailer).
void write_field_pfld(const std::string& path, const ScalarField& f);
ScalarField read_field_pfld(const std::string& path);

/// CSV with header x1,...,xn,value.
void write_field_csv(const std::string& path, const ScalarField& f);
ScalarField read_field_csv(const std::string& path);

/// Reads either format, chosen by the magic bytes.
ScalarField read_field(const std::string& path);

/// Smallest positive gap between distinct coordinates along any axis.
double infer_spacing(int n, const std::vector<double>& points);

class BinaryWriter {
 public:
  explicit BinaryWriter(const std::string& path);
  void bytes(const void* p, std::size_t n);
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void f64(double v) { bytes(&v, sizeof v); }
  void f64s(const std::vector<double>& v) { bytes(v.data(), v.size() * sizeof(double)); }
  void magic(const char* m) { bytes(m, 4); }
  void close();
  ~BinaryWriter();

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

class BinaryReader {
 public:
  explicit BinaryReader(const std::string& path);
  void bytes(void* p, std::size_t n);
  std::uint32_t u32();
  std::uint64_t u64();
  double f64();
  std::vector<double> f64s(std::size_t count);
  bool expect_magic(const char* m);
  bool at_end();
  ~BinaryReader();

 private:
  std::string path_;
  std::FILE* file_ = nullptr;
};

}  // namespace patchflow
