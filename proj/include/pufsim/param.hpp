#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace pufsim {

// Shape mismatches between parameter vectors, gradients, and batches.
class ShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LayerSpec {
  std::string name;
  std::vector<std::size_t> shape;

  std::size_t size() const {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
  }
  bool operator==(const LayerSpec&) const = default;
};

using Schema = std::vector<LayerSpec>;

std::size_t schema_size(const Schema& schema);

// Flat model parameters plus the layer schema mapping the flat vector back to
// layers. All protocol-level arithmetic (deltas, aggregation, server steps)
// operates on this representation.
struct ParameterVector {
  std::vector<double> values;
  Schema schema;

  ParameterVector() = default;
  ParameterVector(std::vector<double> v, Schema s);

  std::size_t size() const { return values.size(); }

  // Offset of a layer's first entry in the flat vector.
  std::size_t layer_offset(std::size_t layer_index) const;

  bool same_schema(const ParameterVector& other) const { return schema == other.schema; }
  void require_same_schema(const ParameterVector& other, const char* where) const;

  // Throws if any entry is NaN or infinite.
  void require_finite(const char* where) const;

  bool operator==(const ParameterVector&) const = default;
};

// Elementwise helpers; all check schema compatibility.
ParameterVector operator+(const ParameterVector& a, const ParameterVector& b);
ParameterVector operator-(const ParameterVector& a, const ParameterVector& b);
ParameterVector operator*(double s, const ParameterVector& v);
ParameterVector zeros_like(const ParameterVector& v);
double l2_norm(const ParameterVector& v);
void axpy(double a, const ParameterVector& x, ParameterVector& y);  // y += a*x

}  // namespace pufsim
