#include "pufsim/param.hpp"

#include <cmath>

namespace pufsim {

std::size_t schema_size(const Schema& schema) {
  std::size_t n = 0;
  for (const auto& layer : schema) n += layer.size();
  return n;
}

ParameterVector::ParameterVector(std::vector<double> v, Schema s)
    : values(std::move(v)), schema(std::move(s)) {
  if (values.size() != schema_size(schema)) {
    throw ShapeError("ParameterVector: flat length " + std::to_string(values.size()) +
                     " does not match schema size " + std::to_string(schema_size(schema)));
  }
}

std::size_t ParameterVector::layer_offset(std::size_t layer_index) const {
  if (layer_index >= schema.size()) {
    throw ShapeError("ParameterVector::layer_offset: no layer " + std::to_string(layer_index));
  }
  std::size_t off = 0;
  for (std::size_t i = 0; i < layer_index; ++i) off += schema[i].size();
  return off;
}

void ParameterVector::require_same_schema(const ParameterVector& other, const char* where) const {
  if (!same_schema(other)) {
    throw ShapeError(std::string(where) + ": parameter schemas differ");
  }
}

void ParameterVector::require_finite(const char* where) const {
  for (double v : values) {
    if (!std::isfinite(v)) {
      throw std::runtime_error(std::string(where) + ": non-finite parameter entry");
    }
  }
}

ParameterVector operator+(const ParameterVector& a, const ParameterVector& b) {
  a.require_same_schema(b, "operator+");
  ParameterVector out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += b.values[i];
  return out;
}

ParameterVector operator-(const ParameterVector& a, const ParameterVector& b) {
  a.require_same_schema(b, "operator-");
  ParameterVector out = a;
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= b.values[i];
  return out;
}

ParameterVector operator*(double s, const ParameterVector& v) {
  ParameterVector out = v;
  for (double& x : out.values) x *= s;
  return out;
}

ParameterVector zeros_like(const ParameterVector& v) {
  ParameterVector out = v;
  std::fill(out.values.begin(), out.values.end(), 0.0);
  return out;
}

double l2_norm(const ParameterVector& v) {
  double s = 0.0;
  for (double x : v.values) s += x * x;
  return std::sqrt(s);
}

void axpy(double a, const ParameterVector& x, ParameterVector& y) {
  x.require_same_schema(y, "axpy");
  for (std::size_t i = 0; i < y.values.size(); ++i) y.values[i] += a * x.values[i];
}

}  // namespace pufsim
