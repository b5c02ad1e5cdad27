#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

// Minimal pickle reader for the planetoid dataset distribution: enough of
// protocols 0-5 to decode scipy CSR matrices, numpy arrays and the adjacency
// defaultdict, whether the files were written by python 2 (the published
// datasets) or python 3 (regenerated copies). Anything outside that closed
// world fails with a ParseError naming the unsupported construct.

namespace ulv::pickle {

struct NdArray {
  char kind = 0;  // 'f' float, 'i' signed, 'u' unsigned, 'b' bool
  int itemsize = 0;
  bool big_endian = false;
  bool fortran = false;
  std::vector<size_t> shape;
  std::string raw;

  size_t count() const;
  size_t ndim() const { return shape.size(); }
  double get_double(size_t flat) const;
  int64_t get_int(size_t flat) const;
  // 2-d access honoring fortran order
  double at(size_t i, size_t j) const;
};

struct Value;
using ValuePtr = std::shared_ptr<Value>;

struct Value {
  enum class Kind { None, Bool, Int, Float, Str, Tuple, List, Dict, Global, Reduced, Array, Dtype };
  Kind kind = Kind::None;

  bool b = false;
  int64_t i = 0;
  double f = 0.0;
  std::string s;                                     // Str payload (raw bytes)
  std::vector<ValuePtr> seq;                         // Tuple / List
  std::vector<std::pair<ValuePtr, ValuePtr>> items;  // Dict, insertion order
  std::string module, name;                          // Global
  ValuePtr cls;                                      // Reduced
  ValuePtr state;                                    // Reduced, after BUILD
  NdArray array;                                     // Array
  char dtype_kind = 0;                               // Dtype
  int dtype_itemsize = 0;
  bool dtype_big = false;
};

ValuePtr parse(std::string_view data);
ValuePtr parse_file(const std::filesystem::path& path);

struct CsrMatrix {
  size_t rows = 0, cols = 0;
  std::vector<int64_t> indptr, indices;
  std::vector<double> data;
};

/// Interprets a parsed scipy csr_matrix object.
CsrMatrix as_csr(const ValuePtr& v);

/// Interprets a parsed numpy array object.
const NdArray& as_array(const ValuePtr& v);

/// Interprets a parsed {int: [int]} dict (plain or defaultdict).
std::map<int64_t, std::vector<int64_t>> as_int_adjacency(const ValuePtr& v);

}  // namespace ulv::pickle
