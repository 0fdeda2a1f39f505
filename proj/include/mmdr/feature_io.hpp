#pragma once

// Plain-text feature and label files.
//
//   MMFEAT v1 modality=<v|a> samples=<N> segments=<L> dim=<d>
//   N*L lines of d space-separated reals, sample-major then segment-major
//
//   MMLAB v1 samples=<N>
//   N lines: <sample_id> <y_reg> <y_aux>
//
// Reals are written in shortest round-trip form so save/load is bit-exact.

#include <cmath>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mmdr/dataset.hpp"
#include "mmdr/keyvalue.hpp"

namespace mmdr {

struct FeatureFile {
  Modality modality = Modality::kVisual;
  std::size_t samples = 0;
  std::size_t segments = 0;
  std::size_t dim = 0;
  Matrix rows;  // (samples * segments) x dim
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

/// Parses `MAGIC v1 key=value ...`, requiring exactly the given keys.
inline std::map<std::string, std::string> parse_header(std::string_view line, std::string_view magic,
                                                       const std::vector<std::string>& keys) {
  const auto tokens = split_ws(line);
  if (tokens.size() < 2 || tokens[0] != magic || tokens[1] != "v1")
    throw ParseError("expected header '" + std::string(magic) + " v1 ...'", 1);
  std::map<std::string, std::string> fields;
  for (std::size_t i = 2; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos)
      throw ParseError("malformed header field '" + std::string(tokens[i]) + "'", 1);
    fields[std::string(tokens[i].substr(0, eq))] = std::string(tokens[i].substr(eq + 1));
  }
  for (const auto& k : keys)
    if (!fields.count(k)) throw ParseError("header is missing '" + k + "'", 1);
  if (fields.size() != keys.size()) throw ParseError("header has unexpected fields", 1);
  return fields;
}

inline double parse_finite(std::string_view token, std::size_t line) {
  const double v = parse_double(token, line);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + std::string(token) + "'", line);
  return v;
}

inline std::ifstream open_for_read(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

inline std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

}  // namespace detail

inline FeatureFile read_feature_file(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError("missing header", 1);
  const auto h = detail::parse_header(line, "MMFEAT", {"modality", "samples", "segments", "dim"});
  FeatureFile f;
  try {
    f.modality = parse_modality(h.at("modality"));
  } catch (const std::invalid_argument& e) {
    throw ParseError(e.what(), 1);
  }
  f.samples = parse_uint(h.at("samples"), 1);
  f.segments = parse_uint(h.at("segments"), 1);
  f.dim = parse_uint(h.at("dim"), 1);
  if (f.samples == 0 || f.segments == 0 || f.dim == 0)
    throw ParseError("samples, segments and dim must be positive", 1);

  const std::size_t expected = f.samples * f.segments;
  f.rows = Matrix(expected, f.dim);
  std::size_t r = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    if (r == expected) throw ParseError("more data rows than samples*segments", lineno);
    if (tokens.size() != f.dim)
      throw ParseError("expected " + std::to_string(f.dim) + " values, found " +
                           std::to_string(tokens.size()),
                       lineno);
    for (std::size_t c = 0; c < f.dim; ++c) f.rows(r, c) = detail::parse_finite(tokens[c], lineno);
    ++r;
  }
  if (r != expected)
    throw ParseError("expected " + std::to_string(expected) + " data rows, found " + std::to_string(r),
                     lineno);
  return f;
}

inline void write_feature_file(std::ostream& out, Modality m, const Matrix& rows,
                               std::size_t segments) {
  if (segments == 0 || rows.rows() % segments != 0)
    throw std::invalid_argument("write_feature_file: rows not a multiple of segments");
  out << "MMFEAT v1 modality=" << modality_tag(m) << " samples=" << rows.rows() / segments
      << " segments=" << segments << " dim=" << rows.cols() << '\n';
  for (std::size_t r = 0; r < rows.rows(); ++r) {
    for (std::size_t c = 0; c < rows.cols(); ++c) {
      if (c) out << ' ';
      out << format_double(rows(r, c));
    }
    out << '\n';
  }
}

inline std::vector<SampleLabels> read_label_file(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || trim(line).empty()) throw ParseError("missing header", 1);
  const auto h = detail::parse_header(line, "MMLAB", {"samples"});
  const std::size_t n = parse_uint(h.at("samples"), 1);
  std::vector<SampleLabels> out(n);
  std::vector<bool> seen(n, false);
  std::size_t count = 0, lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tokens = detail::split_ws(line);
    if (tokens.empty()) continue;
    if (tokens.size() != 3) throw ParseError("expected '<sample_id> <y_reg> <y_aux>'", lineno);
    const std::size_t id = parse_uint(tokens[0], lineno);
    if (id >= n) throw ParseError("sample id out of range", lineno);
    if (seen[id]) throw ParseError("duplicate sample id", lineno);
    const double y = detail::parse_finite(tokens[1], lineno);
    const std::uint64_t aux = parse_uint(tokens[2], lineno);
    if (aux > 1) throw ParseError("y_aux must be 0 or 1", lineno);
    out[id] = SampleLabels{y, static_cast<int>(aux)};
    seen[id] = true;
    ++count;
  }
  if (count != n)
    throw ParseError("expected " + std::to_string(n) + " label rows, found " + std::to_string(count),
                     lineno);
  return out;
}

inline void write_label_file(std::ostream& out, const std::vector<SampleLabels>& labels) {
  out << "MMLAB v1 samples=" << labels.size() << '\n';
  for (std::size_t i = 0; i < labels.size(); ++i)
    out << i << ' ' << format_double(labels[i].y_reg) << ' ' << labels[i].y_aux << '\n';
}

inline std::filesystem::path feature_path(const std::filesystem::path& dir, Modality m) {
  return dir / (std::string("features_") + modality_tag(m) + ".txt");
}
inline std::filesystem::path label_path(const std::filesystem::path& dir) { return dir / "labels.txt"; }

inline void save_dataset(const Dataset& data, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (Modality m : kModalities) {
    auto out = detail::open_for_write(feature_path(dir, m));
    write_feature_file(out, m, data.segment_features[index_of(m)], data.segments);
  }
  auto out = detail::open_for_write(label_path(dir));
  write_label_file(out, data.labels);
}

inline FeatureFile load_features(const std::filesystem::path& path) {
  auto in = detail::open_for_read(path);
  try {
    return read_feature_file(in);
  } catch (const ParseError& e) {
    throw e.in(path.string());
  }
}

/// Reads features_v.txt, features_a.txt and labels.txt from `dir`.
inline Dataset load_dataset(const std::filesystem::path& dir) {
  Dataset data;
  std::size_t samples = 0;
  for (Modality m : kModalities) {
    FeatureFile f = load_features(feature_path(dir, m));
    if (f.modality != m)
      throw ParseError("header modality does not match file name", 1, feature_path(dir, m).string());
    if (m == Modality::kVisual) {
      samples = f.samples;
      data.segments = f.segments;
    } else if (f.samples != samples || f.segments != data.segments) {
      throw ParseError("modalities disagree on samples or segments", 1);
    }
    data.pooled[index_of(m)] = pool_segments(f.rows, f.segments);
    data.segment_features[index_of(m)] = std::move(f.rows);
  }
  auto in = detail::open_for_read(label_path(dir));
  try {
    data.labels = read_label_file(in);
  } catch (const ParseError& e) {
    throw e.in(label_path(dir).string());
  }
  if (data.labels.size() != samples)
    throw ParseError("label count does not match feature sample count", 1);
  data.validate();
  return data;
}

}  // namespace mmdr
