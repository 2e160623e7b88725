#pragma once

#include <mcst2/core.hpp>
#include <mcst2/ct_system.hpp>
#include <mcst2/mcst2.hpp>

#include <string>
#include <vector>

namespace mcst2::io {

// File formats are documented byte-for-byte in docs/FORMATS.md. All binary
// payloads are little-endian; all I/O errors throw std::runtime_error with a
// "path: reason" message.

// Image raster: RASTER64 text header (rows, cols, units) + row-major float64.
struct RasterFile {
  Matrix data;
  std::string units;
};

void write_raster(const std::string& path, const Matrix& data, const std::string& units = "HU");
RasterFile read_raster(const std::string& path);

// Sinogram-shaped vector (ray index = view * detectors + det) with the
// producing geometry in the header. kind is "sinogram" or "weights".
struct SinogramFile {
  Vector data;
  CtGeometry geometry;
  std::string kind;
};

void write_sinogram(const std::string& path, const Vector& data, const CtGeometry& geometry,
                    const std::string& kind);
SinogramFile read_sinogram(const std::string& path);

// Transform banks in a flat binary container; the training configuration and
// patch grid travel in a JSON sidecar at path + ".json".
struct ModelFile {
  Mcst2Model model;
  TrainConfig config;
  Index patch_side = 0;
  Index stride = 1;
};

void write_model(const std::string& path, const Mcst2Model& model, const TrainConfig& config,
                 Index patch_side, Index stride);
ModelFile read_model(const std::string& path);

// Per-patch labels and codes. The residual matrix is derived data and is not
// stored; read_coding returns it zeroed, so refresh the state against the
// image before evaluating objectives.
void write_coding(const std::string& path, const CodingState& state, Index num_clusters1,
                  Index num_clusters2);
CodingState read_coding(const std::string& path);

// Binary 16-bit PGM, values mapped linearly from [lo, hi] and clamped.
void write_pgm16(const std::string& path, const Matrix& data, double lo, double hi);

// Binary 8- or 16-bit PGM; returns the raw gray levels as doubles.
Matrix read_pgm(const std::string& path);

// Comma-separated table with a header row; numeric cells should be formatted
// with csv_number so they round-trip exactly.
std::string csv_number(double v);
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<std::string>>& rows);

// Convenience for single-series traces: columns (index_name, value_name),
// one row per entry starting at index 0.
void write_trace_csv(const std::string& path, const std::string& index_name,
                     const std::string& value_name, const std::vector<double>& values);

}  // namespace mcst2::io
