#include <echodec/io.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace echodec::io {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string format_frequency(double khz) {
  if (khz == std::floor(khz) && std::abs(khz) < 1e15) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(khz));
    return buf;
  }
  return format_double(khz);
}

namespace {

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path.string());
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open for reading: " + path.string());
  return in;
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = line.find(',', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      return fields;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
}

double parse_field(const std::string& field, const fs::path& path) {
  if (field.empty()) return std::numeric_limits<double>::quiet_NaN();
  errno = 0;
  char* end = nullptr;
  const double v = std::strtod(field.c_str(), &end);
  if (end == field.c_str() || (end && *end != '\0' && *end != '\r'))
    throw DataError("malformed numeric field '" + field + "' in " + path.string());
  return v;
}

std::vector<std::string> read_lines(const fs::path& path) {
  auto in = open_in(path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

}  // namespace

void write_matrix_csv(const fs::path& path, const Matrixd& m) {
  auto out = open_out(path);
  std::string line;
  for (Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Index j = 0; j < m.cols(); ++j) {
      if (j > 0) line += ',';
      const double v = m(i, j);
      if (!std::isnan(v)) line += format_double(v);
    }
    line += '\n';
    out << line;
  }
}

Matrixd read_matrix_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  if (lines.empty()) throw DataError("empty CSV: " + path.string());
  const auto first = split_fields(lines[0]);
  const auto rows = static_cast<Index>(lines.size());
  const auto cols = static_cast<Index>(first.size());
  Matrixd m(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const auto fields = split_fields(lines[static_cast<std::size_t>(i)]);
    if (static_cast<Index>(fields.size()) != cols)
      throw DataError("ragged CSV row " + std::to_string(i) + " in " + path.string());
    for (Index j = 0; j < cols; ++j)
      m(i, j) = parse_field(fields[static_cast<std::size_t>(j)], path);
  }
  return m;
}

void write_vector_csv(const fs::path& path, const std::vector<double>& v) {
  auto out = open_out(path);
  for (double x : v) out << format_double(x) << '\n';
}

void write_vector_csv(const fs::path& path, const std::vector<int>& v) {
  auto out = open_out(path);
  for (int x : v) out << x << '\n';
}

std::vector<double> read_vector_csv(const fs::path& path) {
  const auto lines = read_lines(path);
  std::vector<double> v;
  v.reserve(lines.size());
  for (const auto& line : lines) v.push_back(parse_field(line, path));
  return v;
}

void write_key_values(const fs::path& path, const KeyValues& kv) {
  auto out = open_out(path);
  for (const auto& [key, value] : kv) out << key << ' ' << value << '\n';
}

KeyValues read_key_values(const fs::path& path) {
  KeyValues kv;
  for (const auto& line : read_lines(path)) {
    if (line.empty()) continue;
    const std::size_t pos = line.find(' ');
    if (pos == std::string::npos)
      kv.emplace_back(line, "");
    else
      kv.emplace_back(line.substr(0, pos), line.substr(pos + 1));
  }
  return kv;
}

namespace {

std::string lookup(const KeyValues& kv, const std::string& key, const fs::path& where) {
  for (const auto& [k, v] : kv)
    if (k == key) return v;
  throw DataError("missing key '" + key + "' in " + where.string());
}

std::vector<std::string> split_list(const std::string& s) {
  if (s.empty()) return {};
  return split_fields(s);
}

std::string join_list(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i > 0) out += ',';
    out += items[i];
  }
  return out;
}

}  // namespace

void write_bundle(const fs::path& dir, const EchogramCube<double>& cube) {
  cube.validate();
  fs::create_directories(dir);

  KeyValues meta;
  meta.emplace_back("format", "echodec-bundle-1");
  meta.emplace_back("depth_bin_m", format_double(cube.depth_bin_m));
  meta.emplace_back("time_bin_s", format_double(cube.time_bin_s));
  meta.emplace_back("n_depth", std::to_string(cube.n_depth()));
  meta.emplace_back("n_ping", std::to_string(cube.n_ping()));
  meta.emplace_back("n_freq", std::to_string(cube.n_freq()));
  meta.emplace_back("n_day", std::to_string(cube.n_day()));
  std::vector<std::string> items;
  for (Index i = 0; i < cube.n_depth(); ++i) items.push_back(format_double(cube.depth_axis[i]));
  meta.emplace_back("depth_axis_m", join_list(items));
  items.clear();
  for (Index i = 0; i < cube.n_ping(); ++i) items.push_back(format_double(cube.time_axis[i]));
  meta.emplace_back("time_axis_s", join_list(items));
  items.clear();
  for (Index i = 0; i < cube.n_freq(); ++i) items.push_back(format_frequency(cube.freq_axis[i]));
  meta.emplace_back("freqs_khz", join_list(items));
  meta.emplace_back("days", join_list(cube.day_axis));
  write_key_values(dir / "meta", meta);

  for (Index f = 0; f < cube.n_freq(); ++f)
    for (Index t = 0; t < cube.n_day(); ++t) {
      Matrixd slice(cube.n_depth(), cube.n_ping());
      for (Index p = 0; p < cube.n_ping(); ++p)
        for (Index d = 0; d < cube.n_depth(); ++d)
          slice(d, p) = cube.is_missing(d, p, f, t) ? std::numeric_limits<double>::quiet_NaN()
                                                    : cube.at(d, p, f, t);
      const std::string name = "f" + format_frequency(cube.freq_axis[f]) + "_d" +
                               cube.day_axis[static_cast<std::size_t>(t)] + ".csv";
      write_matrix_csv(dir / name, slice);
    }
}

EchogramCube<double> read_bundle(const fs::path& dir) {
  const fs::path meta_path = dir / "meta";
  if (!fs::exists(meta_path)) throw DataError("not an echogram bundle (no meta file): " + dir.string());
  const auto meta = read_key_values(meta_path);

  const auto nd = static_cast<Index>(std::stoll(lookup(meta, "n_depth", meta_path)));
  const auto np = static_cast<Index>(std::stoll(lookup(meta, "n_ping", meta_path)));
  const auto nf = static_cast<Index>(std::stoll(lookup(meta, "n_freq", meta_path)));
  const auto nt = static_cast<Index>(std::stoll(lookup(meta, "n_day", meta_path)));
  if (nd < 1 || np < 1 || nf < 1 || nt < 1) throw DataError("bundle meta: bad axis lengths");

  auto cube = EchogramCube<double>::zeros(nd, np, nf, nt);
  cube.depth_bin_m = std::stod(lookup(meta, "depth_bin_m", meta_path));
  cube.time_bin_s = std::stod(lookup(meta, "time_bin_s", meta_path));

  const auto depth_items = split_list(lookup(meta, "depth_axis_m", meta_path));
  const auto time_items = split_list(lookup(meta, "time_axis_s", meta_path));
  const auto freq_items = split_list(lookup(meta, "freqs_khz", meta_path));
  const auto day_items = split_list(lookup(meta, "days", meta_path));
  if (static_cast<Index>(depth_items.size()) != nd || static_cast<Index>(time_items.size()) != np ||
      static_cast<Index>(freq_items.size()) != nf || static_cast<Index>(day_items.size()) != nt)
    throw DataError("bundle meta: axis lists do not match axis lengths");
  for (Index i = 0; i < nd; ++i) cube.depth_axis[i] = std::stod(depth_items[static_cast<std::size_t>(i)]);
  for (Index i = 0; i < np; ++i) cube.time_axis[i] = std::stod(time_items[static_cast<std::size_t>(i)]);
  for (Index i = 0; i < nf; ++i) cube.freq_axis[i] = std::stod(freq_items[static_cast<std::size_t>(i)]);
  cube.day_axis = day_items;

  for (Index f = 0; f < nf; ++f)
    for (Index t = 0; t < nt; ++t) {
      const std::string name = "f" + format_frequency(cube.freq_axis[f]) + "_d" +
                               cube.day_axis[static_cast<std::size_t>(t)] + ".csv";
      const Matrixd slice = read_matrix_csv(dir / name);
      if (slice.rows() != nd || slice.cols() != np)
        throw DataError("bundle slice shape mismatch: " + name);
      for (Index p = 0; p < np; ++p)
        for (Index d = 0; d < nd; ++d) {
          const double v = slice(d, p);
          cube.at(d, p, f, t) = v;
          cube.set_missing(d, p, f, t, std::isnan(v));
        }
    }
  cube.validate();
  return cube;
}

}  // namespace echodec::io
