#pragma once

// On-disk formats. CSV dialect everywhere: comma separator, '.' decimal,
// no header row, LF line endings, doubles rendered with 17 significant
// digits (lossless round trip), missing cells as empty fields.
//
// An echogram bundle is a directory holding a `meta` key-value text file
// plus one CSV per (frequency, day) named f<kHz>_d<ISO-date>.csv with
// depth bins as rows (shallow to deep) and within-day time bins as columns.

#include <echodec/echogram.hpp>
#include <echodec/types.hpp>

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace echodec::io {

using KeyValues = std::vector<std::pair<std::string, std::string>>;

std::string format_double(double v);
std::string format_frequency(double khz);

void write_matrix_csv(const std::filesystem::path& path, const Matrixd& m);
Matrixd read_matrix_csv(const std::filesystem::path& path);

void write_vector_csv(const std::filesystem::path& path, const std::vector<double>& v);
void write_vector_csv(const std::filesystem::path& path, const std::vector<int>& v);
std::vector<double> read_vector_csv(const std::filesystem::path& path);

void write_key_values(const std::filesystem::path& path, const KeyValues& kv);
KeyValues read_key_values(const std::filesystem::path& path);

void write_bundle(const std::filesystem::path& dir, const EchogramCube<double>& cube);
EchogramCube<double> read_bundle(const std::filesystem::path& dir);

}  // namespace echodec::io
