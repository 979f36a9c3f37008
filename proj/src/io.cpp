#include "lematch/io.hpp"

#include <algorithm>
#include <bit>
#include <climits>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <vector>

#include "lematch/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "volume payloads are written by memcpy and require a little-endian host");

namespace lematch::io {

namespace fs = std::filesystem;

void RunConfig::validate() const {
  match.validate();
  if (!(jacobian_clip_min > 0.0) || !(jacobian_clip_max >= jacobian_clip_min))
    throw ConfigError("jacobian clip range must satisfy 0 < min <= max");
  if (!(distance_threshold_mm > 0.0)) throw ConfigError("distance_threshold_mm must be > 0");
  if (!(normdist_threshold > 0.0)) throw ConfigError("normdist_threshold must be > 0");
}

std::string format_double(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

namespace {

[[noreturn]] void fail(bool as_config, const std::string& msg) {
  if (as_config) throw ConfigError(msg);
  throw InputError(msg);
}

std::string read_text(const fs::path& path, bool as_config) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(as_config, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw InputError("write failed for " + path.string());
}

struct Line {
  int number = 0;  // 1-based
  std::vector<std::string> tokens;
};

// Every non-comment line, tokenized; blank lines keep an empty token list.
std::vector<Line> parse_lines(const std::string& text) {
  std::vector<Line> lines;
  int number = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    const bool last = end == std::string::npos;
    if (last) end = text.size();
    ++number;
    std::string raw = text.substr(pos, end - pos);
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    pos = last ? text.size() : end + 1;
    if (!raw.empty() && raw[0] == '#') continue;
    Line line;
    line.number = number;
    std::istringstream ss(raw);
    std::string tok;
    while (ss >> tok) line.tokens.push_back(std::move(tok));
    lines.push_back(std::move(line));
  }
  return lines;
}

std::string where(const fs::path& path, int line_no) {
  return path.string() + ":" + std::to_string(line_no);
}

double to_double(const std::string& tok, const fs::path& path, int line_no, bool as_config) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const double value = std::strtod(begin, &end);
  if (end != begin + tok.size() || tok.empty())
    fail(as_config, where(path, line_no) + ": expected a number, got '" + tok + "'");
  return value;
}

int to_int(const std::string& tok, const fs::path& path, int line_no, bool as_config) {
  const char* begin = tok.c_str();
  char* end = nullptr;
  const long value = std::strtol(begin, &end, 10);
  if (end != begin + tok.size() || tok.empty() || value < INT_MIN || value > INT_MAX)
    fail(as_config, where(path, line_no) + ": expected an integer, got '" + tok + "'");
  return static_cast<int>(value);
}

void require_tokens(const Line& line, std::size_t count, const fs::path& path, bool as_config) {
  if (line.tokens.size() != count)
    fail(as_config, where(path, line.number) + ": expected " + std::to_string(count) +
                        " tokens, got " + std::to_string(line.tokens.size()));
}

std::string vec3_text(const Eigen::Vector3d& v) {
  return format_double(v[0]) + " " + format_double(v[1]) + " " + format_double(v[2]);
}

}  // namespace

// ---------------------------------------------------------------------------
// lesion tables

void write_lesion_table(const fs::path& path, const LesionSet& set) {
  std::ostringstream out;
  out << "# lesion table, one blank-line-separated record per lesion\n";
  for (const LesionInstance& lesion : set.lesions) {
    out << "id " << lesion.id << "\n";
    out << "centroid " << vec3_text(lesion.centroid) << "\n";
    out << "volume " << format_double(lesion.volume) << "\n";
    if (lesion.trust) out << "trust " << format_double(*lesion.trust) << "\n";
    if (lesion.appearance) out << "appearance " << format_double(*lesion.appearance) << "\n";
    out << "\n";
  }
  write_text(path, out.str());
}

LesionSet read_lesion_table(const fs::path& path, Timepoint timepoint) {
  const std::vector<Line> lines = parse_lines(read_text(path, false));
  std::vector<LesionInstance> lesions;

  std::optional<int> id;
  std::optional<Vector3d> centroid;
  std::optional<double> volume, trust, appearance;
  int record_line = 0;

  auto flush = [&]() {
    if (!id && !centroid && !volume && !trust && !appearance) return;
    if (!id || !centroid || !volume)
      throw InputError(where(path, record_line) +
                       ": lesion record needs id, centroid, and volume");
    lesions.push_back(make_lesion(*id, *centroid, *volume, trust, appearance));
    id.reset();
    centroid.reset();
    volume.reset();
    trust.reset();
    appearance.reset();
  };

  for (const Line& line : lines) {
    if (line.tokens.empty()) {
      flush();
      continue;
    }
    const std::string& key = line.tokens[0];
    if (key == "id") {
      flush();
      require_tokens(line, 2, path, false);
      id = to_int(line.tokens[1], path, line.number, false);
      record_line = line.number;
      continue;
    }
    if (!id) throw InputError(where(path, line.number) + ": '" + key + "' outside a lesion record");
    auto one_value = [&]() {
      require_tokens(line, 2, path, false);
      return to_double(line.tokens[1], path, line.number, false);
    };
    if (key == "centroid") {
      require_tokens(line, 4, path, false);
      if (centroid) throw InputError(where(path, line.number) + ": duplicate centroid");
      centroid = Vector3d{to_double(line.tokens[1], path, line.number, false),
                          to_double(line.tokens[2], path, line.number, false),
                          to_double(line.tokens[3], path, line.number, false)};
    } else if (key == "volume") {
      if (volume) throw InputError(where(path, line.number) + ": duplicate volume");
      volume = one_value();
    } else if (key == "trust") {
      if (trust) throw InputError(where(path, line.number) + ": duplicate trust");
      trust = one_value();
    } else if (key == "appearance") {
      if (appearance) throw InputError(where(path, line.number) + ": duplicate appearance");
      appearance = one_value();
    } else {
      throw InputError(where(path, line.number) + ": unknown lesion key '" + key + "'");
    }
  }
  flush();
  return make_lesion_set(timepoint, std::move(lesions));
}

// ---------------------------------------------------------------------------
// volumes

namespace {

const char* dtype_name(VolumeDType dtype) {
  switch (dtype) {
    case VolumeDType::UInt8: return "uint8";
    case VolumeDType::Float32: return "float32";
    case VolumeDType::Float64: return "float64";
  }
  throw ConfigError("unknown volume dtype");
}

std::optional<VolumeDType> dtype_from_name(const std::string& name) {
  if (name == "uint8") return VolumeDType::UInt8;
  if (name == "float32") return VolumeDType::Float32;
  if (name == "float64") return VolumeDType::Float64;
  return std::nullopt;
}

std::size_t dtype_size(VolumeDType dtype) {
  switch (dtype) {
    case VolumeDType::UInt8: return 1;
    case VolumeDType::Float32: return 4;
    case VolumeDType::Float64: return 8;
  }
  throw ConfigError("unknown volume dtype");
}

fs::path payload_path_for(const fs::path& header_path) {
  fs::path payload = header_path;
  payload.replace_extension(".raw");
  return payload;
}

struct VolumeHeader {
  std::array<int, 3> dims{0, 0, 0};
  Eigen::Vector3d spacing = Eigen::Vector3d::Ones();
  Eigen::Vector3d origin = Eigen::Vector3d::Zero();
  VolumeDType dtype = VolumeDType::Float64;
  int components = 1;
  std::string data_name;
};

void write_header(const fs::path& header_path, const VolumeHeader& h) {
  std::ostringstream out;
  out << "dims " << h.dims[0] << " " << h.dims[1] << " " << h.dims[2] << "\n";
  out << "spacing " << vec3_text(h.spacing) << "\n";
  out << "origin " << vec3_text(h.origin) << "\n";
  out << "dtype " << dtype_name(h.dtype) << "\n";
  out << "components " << h.components << "\n";
  out << "data " << h.data_name << "\n";
  write_text(header_path, out.str());
}

VolumeHeader read_header(const fs::path& header_path) {
  const std::vector<Line> lines = parse_lines(read_text(header_path, false));
  VolumeHeader h;
  bool saw_dims = false, saw_dtype = false, saw_components = false, saw_data = false;
  for (const Line& line : lines) {
    if (line.tokens.empty()) continue;
    const std::string& key = line.tokens[0];
    if (key == "dims") {
      require_tokens(line, 4, header_path, false);
      for (int k = 0; k < 3; ++k)
        h.dims[k] = to_int(line.tokens[1 + k], header_path, line.number, false);
      saw_dims = true;
    } else if (key == "spacing" || key == "origin") {
      require_tokens(line, 4, header_path, false);
      Eigen::Vector3d v{to_double(line.tokens[1], header_path, line.number, false),
                        to_double(line.tokens[2], header_path, line.number, false),
                        to_double(line.tokens[3], header_path, line.number, false)};
      (key == "spacing" ? h.spacing : h.origin) = v;
    } else if (key == "dtype") {
      require_tokens(line, 2, header_path, false);
      const auto dtype = dtype_from_name(line.tokens[1]);
      if (!dtype)
        throw InputError(where(header_path, line.number) + ": unknown dtype '" + line.tokens[1] +
                         "'");
      h.dtype = *dtype;
      saw_dtype = true;
    } else if (key == "components") {
      require_tokens(line, 2, header_path, false);
      h.components = to_int(line.tokens[1], header_path, line.number, false);
      saw_components = true;
    } else if (key == "data") {
      require_tokens(line, 2, header_path, false);
      h.data_name = line.tokens[1];
      if (h.data_name.find('/') != std::string::npos ||
          h.data_name.find('\\') != std::string::npos)
        throw InputError(where(header_path, line.number) +
                         ": data must name a sibling file, got '" + h.data_name + "'");
      saw_data = true;
    } else {
      throw InputError(where(header_path, line.number) + ": unknown header key '" + key + "'");
    }
  }
  if (!saw_dims || !saw_dtype || !saw_components || !saw_data)
    throw InputError(header_path.string() + ": header needs dims, dtype, components, data");
  for (int k = 0; k < 3; ++k)
    if (h.dims[k] <= 0) throw InputError(header_path.string() + ": dims must be positive");
  if ((h.spacing.array() <= 0.0).any())
    throw InputError(header_path.string() + ": spacing must be positive");
  if (h.components != 1 && h.components != 3)
    throw InputError(header_path.string() + ": components must be 1 or 3");
  return h;
}

void write_payload(const fs::path& payload, const double* values, Eigen::Index count,
                   VolumeDType dtype) {
  std::string bytes;
  bytes.reserve(static_cast<std::size_t>(count) * dtype_size(dtype));
  switch (dtype) {
    case VolumeDType::UInt8:
      for (Eigen::Index i = 0; i < count; ++i) {
        const double v = values[i];
        if (!(v >= 0.0 && v <= 255.0) || v != std::floor(v))
          throw InputError("uint8 payload needs integral values in [0, 255], got " +
                           format_double(v));
        bytes.push_back(static_cast<char>(static_cast<std::uint8_t>(v)));
      }
      break;
    case VolumeDType::Float32:
      for (Eigen::Index i = 0; i < count; ++i) {
        const float v = static_cast<float>(values[i]);
        char buf[4];
        std::memcpy(buf, &v, 4);
        bytes.append(buf, 4);
      }
      break;
    case VolumeDType::Float64:
      bytes.append(reinterpret_cast<const char*>(values),
                   static_cast<std::size_t>(count) * 8);
      break;
  }
  write_text(payload, bytes);
}

std::vector<double> read_payload(const fs::path& payload, Eigen::Index count, VolumeDType dtype) {
  const std::string bytes = read_text(payload, false);
  const std::size_t expected = static_cast<std::size_t>(count) * dtype_size(dtype);
  if (bytes.size() != expected)
    throw InputError(payload.string() + ": payload holds " + std::to_string(bytes.size()) +
                     " bytes, expected " + std::to_string(expected));
  std::vector<double> values(static_cast<std::size_t>(count));
  switch (dtype) {
    case VolumeDType::UInt8:
      for (Eigen::Index i = 0; i < count; ++i)
        values[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(bytes[static_cast<std::size_t>(i)]);
      break;
    case VolumeDType::Float32:
      for (Eigen::Index i = 0; i < count; ++i) {
        float v;
        std::memcpy(&v, bytes.data() + static_cast<std::size_t>(i) * 4, 4);
        values[static_cast<std::size_t>(i)] = v;
      }
      break;
    case VolumeDType::Float64:
      std::memcpy(values.data(), bytes.data(), bytes.size());
      break;
  }
  return values;
}

}  // namespace

void write_volume(const fs::path& header_path, const Volume3D& volume, VolumeDType dtype) {
  if (volume.data.size() != volume.voxel_count())
    throw InputError("volume data size does not match dims");
  const fs::path payload = payload_path_for(header_path);
  VolumeHeader h;
  h.dims = volume.dims;
  h.spacing = volume.spacing;
  h.origin = volume.origin;
  h.dtype = dtype;
  h.components = 1;
  h.data_name = payload.filename().string();
  write_header(header_path, h);
  write_payload(payload, volume.data.data(), volume.data.size(), dtype);
}

Volume3D read_volume(const fs::path& header_path) {
  const VolumeHeader h = read_header(header_path);
  if (h.components != 1)
    throw InputError(header_path.string() + ": expected a scalar volume, components is " +
                     std::to_string(h.components));
  Volume3D volume = make_volume(h.dims, h.spacing, h.origin);
  const std::vector<double> values =
      read_payload(header_path.parent_path() / h.data_name, volume.voxel_count(), h.dtype);
  volume.data = Eigen::Map<const Eigen::ArrayXd>(values.data(),
                                                 static_cast<Eigen::Index>(values.size()));
  return volume;
}

void write_field(const fs::path& header_path, const DeformationField& field) {
  if (field.data.cols() != field.voxel_count())
    throw InputError("field data size does not match dims");
  const fs::path payload = payload_path_for(header_path);
  VolumeHeader h;
  h.dims = field.dims;
  h.spacing = field.spacing;
  h.origin = field.origin;
  h.dtype = VolumeDType::Float64;
  h.components = 3;
  h.data_name = payload.filename().string();
  write_header(header_path, h);
  // column-major Matrix3X lays out one 3-vector per voxel, already interleaved
  write_payload(payload, field.data.data(), field.data.size(), VolumeDType::Float64);
}

DeformationField read_field(const fs::path& header_path) {
  const VolumeHeader h = read_header(header_path);
  if (h.components != 3)
    throw InputError(header_path.string() + ": expected a 3-component field, components is " +
                     std::to_string(h.components));
  if (h.dtype != VolumeDType::Float64)
    throw InputError(header_path.string() + ": deformation fields must be float64");
  DeformationField field = make_field(h.dims, h.spacing, h.origin);
  const std::vector<double> values =
      read_payload(header_path.parent_path() / h.data_name, field.voxel_count() * 3,
                   VolumeDType::Float64);
  field.data = Eigen::Map<const Eigen::Matrix3Xd>(values.data(), 3, field.voxel_count());
  return field;
}

// ---------------------------------------------------------------------------
// graphs

void write_graph(const fs::path& path, const EvolutionGraph& graph) {
  std::vector<GraphEdge> edges = graph.edges;
  std::sort(edges.begin(), edges.end(), [](const GraphEdge& a, const GraphEdge& b) {
    return std::pair{a.baseline, a.followup} < std::pair{b.baseline, b.followup};
  });
  std::ostringstream out;
  out << "n0 " << graph.n0 << "\n";
  out << "n1 " << graph.n1 << "\n";
  for (const GraphEdge& edge : edges) {
    out << "edge " << edge.baseline << " " << edge.followup;
    if (edge.mass) out << " " << format_double(*edge.mass);
    out << "\n";
  }
  for (int i = 0; i < graph.n0; ++i)
    out << "state baseline " << i << " " << to_string(graph.baseline_states[static_cast<std::size_t>(i)]) << "\n";
  for (int j = 0; j < graph.n1; ++j)
    out << "state followup " << j << " " << to_string(graph.followup_states[static_cast<std::size_t>(j)]) << "\n";
  write_text(path, out.str());
}

EvolutionGraph read_graph(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, false));
  EvolutionGraph graph;
  graph.n0 = -1;
  graph.n1 = -1;
  std::vector<std::optional<EventLabel>> baseline_states, followup_states;

  for (const Line& line : lines) {
    if (line.tokens.empty()) continue;
    const std::string& key = line.tokens[0];
    if (key == "n0" || key == "n1") {
      require_tokens(line, 2, path, false);
      const int n = to_int(line.tokens[1], path, line.number, false);
      if (n < 0) throw InputError(where(path, line.number) + ": lesion count must be >= 0");
      if (key == "n0") {
        graph.n0 = n;
        baseline_states.assign(static_cast<std::size_t>(n), std::nullopt);
      } else {
        graph.n1 = n;
        followup_states.assign(static_cast<std::size_t>(n), std::nullopt);
      }
    } else if (key == "edge") {
      if (line.tokens.size() != 3 && line.tokens.size() != 4)
        throw InputError(where(path, line.number) + ": edge needs 2 indices and optional mass");
      if (graph.n0 < 0 || graph.n1 < 0)
        throw InputError(where(path, line.number) + ": edge before n0/n1");
      GraphEdge edge;
      edge.baseline = to_int(line.tokens[1], path, line.number, false);
      edge.followup = to_int(line.tokens[2], path, line.number, false);
      if (line.tokens.size() == 4)
        edge.mass = to_double(line.tokens[3], path, line.number, false);
      if (edge.baseline < 0 || edge.baseline >= graph.n0 || edge.followup < 0 ||
          edge.followup >= graph.n1)
        throw InputError(where(path, line.number) + ": edge index out of range");
      graph.edges.push_back(edge);
    } else if (key == "state") {
      require_tokens(line, 4, path, false);
      if (graph.n0 < 0 || graph.n1 < 0)
        throw InputError(where(path, line.number) + ": state before n0/n1");
      const auto label = event_label_from_string(line.tokens[3]);
      if (!label)
        throw InputError(where(path, line.number) + ": unknown state '" + line.tokens[3] + "'");
      const int index = to_int(line.tokens[2], path, line.number, false);
      auto assign = [&](std::vector<std::optional<EventLabel>>& states, int n) {
        if (index < 0 || index >= n)
          throw InputError(where(path, line.number) + ": state index out of range");
        if (states[static_cast<std::size_t>(index)])
          throw InputError(where(path, line.number) + ": duplicate state for index " +
                           std::to_string(index));
        states[static_cast<std::size_t>(index)] = *label;
      };
      if (line.tokens[1] == "baseline") {
        assign(baseline_states, graph.n0);
      } else if (line.tokens[1] == "followup") {
        assign(followup_states, graph.n1);
      } else {
        throw InputError(where(path, line.number) + ": state side must be baseline or followup");
      }
    } else {
      throw InputError(where(path, line.number) + ": unknown graph key '" + key + "'");
    }
  }
  if (graph.n0 < 0 || graph.n1 < 0) throw InputError(path.string() + ": missing n0 or n1");

  std::sort(graph.edges.begin(), graph.edges.end(),
            [](const GraphEdge& a, const GraphEdge& b) {
              return std::pair{a.baseline, a.followup} < std::pair{b.baseline, b.followup};
            });
  for (std::size_t k = 1; k < graph.edges.size(); ++k)
    if (graph.edges[k].baseline == graph.edges[k - 1].baseline &&
        graph.edges[k].followup == graph.edges[k - 1].followup)
      throw InputError(path.string() + ": duplicate edge " +
                       std::to_string(graph.edges[k].baseline) + " " +
                       std::to_string(graph.edges[k].followup));

  graph.baseline_states.reserve(baseline_states.size());
  for (std::size_t i = 0; i < baseline_states.size(); ++i) {
    if (!baseline_states[i])
      throw InputError(path.string() + ": missing state for baseline " + std::to_string(i));
    graph.baseline_states.push_back(*baseline_states[i]);
  }
  graph.followup_states.reserve(followup_states.size());
  for (std::size_t j = 0; j < followup_states.size(); ++j) {
    if (!followup_states[j])
      throw InputError(path.string() + ": missing state for followup " + std::to_string(j));
    graph.followup_states.push_back(*followup_states[j]);
  }
  return graph;
}

// ---------------------------------------------------------------------------
// matrices, plans, cost breakdowns

namespace {

void write_matrix_rows(std::ostringstream& out, const MatrixXd& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    out << "row " << i;
    for (Eigen::Index j = 0; j < m.cols(); ++j) out << " " << format_double(m(i, j));
    out << "\n";
  }
}

// Consumes rows*[cols-wide "row i ..."] lines starting at lines[pos].
MatrixXd read_matrix_rows(const std::vector<Line>& lines, std::size_t& pos, int rows, int cols,
                          const fs::path& path) {
  MatrixXd m(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (pos >= lines.size())
      throw InputError(path.string() + ": expected " + std::to_string(rows) + " matrix rows");
    const Line& line = lines[pos++];
    if (line.tokens.size() != static_cast<std::size_t>(cols) + 2 || line.tokens[0] != "row")
      throw InputError(where(path, line.number) + ": expected 'row i v...' with " +
                       std::to_string(cols) + " values");
    if (to_int(line.tokens[1], path, line.number, false) != i)
      throw InputError(where(path, line.number) + ": rows must appear in order");
    for (int j = 0; j < cols; ++j)
      m(i, j) = to_double(line.tokens[static_cast<std::size_t>(j) + 2], path, line.number, false);
  }
  return m;
}

std::pair<int, int> read_shape(const std::vector<Line>& lines, std::size_t& pos,
                               const fs::path& path) {
  int rows = -1, cols = -1;
  while (pos < lines.size() && (rows < 0 || cols < 0)) {
    const Line& line = lines[pos];
    if (line.tokens.empty()) {
      ++pos;
      continue;
    }
    if (line.tokens[0] == "rows") {
      require_tokens(line, 2, path, false);
      rows = to_int(line.tokens[1], path, line.number, false);
    } else if (line.tokens[0] == "cols") {
      require_tokens(line, 2, path, false);
      cols = to_int(line.tokens[1], path, line.number, false);
    } else {
      break;
    }
    ++pos;
  }
  if (rows < 0 || cols < 0) throw InputError(path.string() + ": missing rows/cols");
  return {rows, cols};
}

}  // namespace

void write_plan(const fs::path& path, const TransportPlan& plan) {
  std::ostringstream out;
  out << "rows " << plan.gamma.rows() << "\n";
  out << "cols " << plan.gamma.cols() << "\n";
  write_matrix_rows(out, plan.gamma);
  out << "iterations " << plan.iterations << "\n";
  out << "converged " << (plan.converged ? 1 : 0) << "\n";
  out << "final_residual " << format_double(plan.final_residual) << "\n";
  out << "objective " << format_double(plan.objective) << "\n";
  write_text(path, out.str());
}

TransportPlan read_plan(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, false));
  std::size_t pos = 0;
  const auto [rows, cols] = read_shape(lines, pos, path);
  TransportPlan plan;
  plan.gamma = read_matrix_rows(lines, pos, rows, cols, path);
  bool saw_iterations = false, saw_converged = false, saw_residual = false, saw_objective = false;
  for (; pos < lines.size(); ++pos) {
    const Line& line = lines[pos];
    if (line.tokens.empty()) continue;
    const std::string& key = line.tokens[0];
    require_tokens(line, 2, path, false);
    if (key == "iterations") {
      plan.iterations = to_int(line.tokens[1], path, line.number, false);
      saw_iterations = true;
    } else if (key == "converged") {
      plan.converged = to_int(line.tokens[1], path, line.number, false) != 0;
      saw_converged = true;
    } else if (key == "final_residual") {
      plan.final_residual = to_double(line.tokens[1], path, line.number, false);
      saw_residual = true;
    } else if (key == "objective") {
      plan.objective = to_double(line.tokens[1], path, line.number, false);
      saw_objective = true;
    } else {
      throw InputError(where(path, line.number) + ": unknown plan key '" + key + "'");
    }
  }
  if (!saw_iterations || !saw_converged || !saw_residual || !saw_objective)
    throw InputError(path.string() + ": plan needs iterations, converged, final_residual, objective");
  return plan;
}

void write_cost(const fs::path& path, const CostBreakdown& cost) {
  std::ostringstream out;
  out << "rows " << cost.combined.rows() << "\n";
  out << "cols " << cost.combined.cols() << "\n";
  for (const auto& [name, matrix] :
       std::initializer_list<std::pair<const char*, const MatrixXd*>>{
           {"c_geom", &cost.c_geom}, {"tau", &cost.tau}, {"s_bar", &cost.s_bar},
           {"combined", &cost.combined}}) {
    out << "matrix " << name << "\n";
    write_matrix_rows(out, *matrix);
  }
  write_text(path, out.str());
}

CostBreakdown read_cost(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, false));
  std::size_t pos = 0;
  const auto [rows, cols] = read_shape(lines, pos, path);
  CostBreakdown cost;
  for (const auto& [name, matrix] :
       std::initializer_list<std::pair<const char*, MatrixXd*>>{
           {"c_geom", &cost.c_geom}, {"tau", &cost.tau}, {"s_bar", &cost.s_bar},
           {"combined", &cost.combined}}) {
    if (pos >= lines.size() || lines[pos].tokens.empty())
      throw InputError(path.string() + ": expected 'matrix " + std::string(name) + "'");
    const Line& line = lines[pos];
    if (line.tokens.size() != 2 || line.tokens[0] != "matrix" || line.tokens[1] != name)
      throw InputError(where(path, line.number) + ": expected 'matrix " + std::string(name) + "'");
    ++pos;
    *matrix = read_matrix_rows(lines, pos, rows, cols, path);
  }
  return cost;
}

void write_prior(const fs::path& path, const AsymmetryPrior& prior) {
  std::ostringstream out;
  out << "rho " << format_double(prior.rho) << "\n";
  out << "lambda_eff " << format_double(prior.lambda_eff) << "\n";
  out << "mu_eff " << format_double(prior.mu_eff) << "\n";
  write_text(path, out.str());
}

AsymmetryPrior read_prior(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, false));
  AsymmetryPrior prior;
  bool saw_rho = false, saw_lambda = false, saw_mu = false;
  for (const Line& line : lines) {
    if (line.tokens.empty()) continue;
    require_tokens(line, 2, path, false);
    const std::string& key = line.tokens[0];
    const double value = to_double(line.tokens[1], path, line.number, false);
    if (key == "rho") {
      prior.rho = value;
      saw_rho = true;
    } else if (key == "lambda_eff") {
      prior.lambda_eff = value;
      saw_lambda = true;
    } else if (key == "mu_eff") {
      prior.mu_eff = value;
      saw_mu = true;
    } else {
      throw InputError(where(path, line.number) + ": unknown prior key '" + key + "'");
    }
  }
  if (!saw_rho || !saw_lambda || !saw_mu)
    throw InputError(path.string() + ": prior needs rho, lambda_eff, mu_eff");
  return prior;
}

// ---------------------------------------------------------------------------
// reports

namespace {

constexpr std::array<EventLabel, kNumEventLabels> kLabelOrder{
    EventLabel::Persistent, EventLabel::Disappearing, EventLabel::New, EventLabel::Merging,
    EventLabel::Splitting};

}  // namespace

void write_report(const fs::path& path, const EvalReport& report) {
  std::ostringstream out;
  out << "# confusion rows are reference states over baseline lesions plus new-state"
         " follow-ups; components match on exact node and edge sets\n";
  out << "edge_precision " << format_double(report.edge_precision) << "\n";
  out << "edge_recall " << format_double(report.edge_recall) << "\n";
  out << "edge_f1 " << format_double(report.edge_f1) << "\n";
  out << "state_weighted_precision " << format_double(report.state_weighted_precision) << "\n";
  out << "state_weighted_recall " << format_double(report.state_weighted_recall) << "\n";
  out << "component_f1 " << format_double(report.component_f1) << "\n";
  for (int r = 0; r < kNumEventLabels; ++r) {
    out << "confusion " << to_string(kLabelOrder[static_cast<std::size_t>(r)]);
    for (int c = 0; c < kNumEventLabels; ++c) out << " " << report.state_confusion(r, c);
    out << "\n";
  }
  write_text(path, out.str());
}

EvalReport read_report(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, false));
  EvalReport report;
  std::map<std::string, bool> seen;
  int confusion_rows = 0;
  for (const Line& line : lines) {
    if (line.tokens.empty()) continue;
    const std::string& key = line.tokens[0];
    if (key == "confusion") {
      require_tokens(line, 2 + kNumEventLabels, path, false);
      const auto label = event_label_from_string(line.tokens[1]);
      if (!label)
        throw InputError(where(path, line.number) + ": unknown state '" + line.tokens[1] + "'");
      const int r = static_cast<int>(*label);
      for (int c = 0; c < kNumEventLabels; ++c)
        report.state_confusion(r, c) =
            to_int(line.tokens[static_cast<std::size_t>(c) + 2], path, line.number, false);
      ++confusion_rows;
      continue;
    }
    require_tokens(line, 2, path, false);
    const double value = to_double(line.tokens[1], path, line.number, false);
    if (key == "edge_precision") report.edge_precision = value;
    else if (key == "edge_recall") report.edge_recall = value;
    else if (key == "edge_f1") report.edge_f1 = value;
    else if (key == "state_weighted_precision") report.state_weighted_precision = value;
    else if (key == "state_weighted_recall") report.state_weighted_recall = value;
    else if (key == "component_f1") report.component_f1 = value;
    else throw InputError(where(path, line.number) + ": unknown report key '" + key + "'");
    if (seen[key]) throw InputError(where(path, line.number) + ": duplicate key '" + key + "'");
    seen[key] = true;
  }
  if (seen.size() != 6 || confusion_rows != kNumEventLabels)
    throw InputError(path.string() + ": report needs 6 scalar metrics and 5 confusion rows");
  return report;
}

// ---------------------------------------------------------------------------
// run configuration

namespace {

struct ConfigField {
  const char* key;
  enum class Kind { Double, Int } kind;
  void* target;
};

std::vector<ConfigField> config_fields(RunConfig& config) {
  using Kind = ConfigField::Kind;
  return {
      {"epsilon", Kind::Double, &config.match.epsilon},
      {"lambda_base", Kind::Double, &config.match.lambda_base},
      {"mu_base", Kind::Double, &config.match.mu_base},
      {"w_jacobian", Kind::Double, &config.match.w_jacobian},
      {"w_appearance", Kind::Double, &config.match.w_appearance},
      {"beta", Kind::Double, &config.match.beta},
      {"distance_cap", Kind::Double, &config.match.distance_cap},
      {"tau_row", Kind::Double, &config.match.tau_row},
      {"tau_col", Kind::Double, &config.match.tau_col},
      {"prune_floor", Kind::Double, &config.match.prune_floor},
      {"rho_gamma", Kind::Double, &config.match.rho_gamma},
      {"max_iters", Kind::Int, &config.match.max_iters},
      {"tol", Kind::Double, &config.match.tol},
      {"patch_radius", Kind::Int, &config.match.patch_radius},
      {"dilation_radius", Kind::Int, &config.match.dilation_radius},
      {"jacobian_clip_min", Kind::Double, &config.jacobian_clip_min},
      {"jacobian_clip_max", Kind::Double, &config.jacobian_clip_max},
      {"distance_threshold_mm", Kind::Double, &config.distance_threshold_mm},
      {"normdist_threshold", Kind::Double, &config.normdist_threshold},
  };
}

}  // namespace

RunConfig read_run_config(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, true));
  RunConfig config;
  std::vector<ConfigField> fields = config_fields(config);
  std::map<std::string, bool> seen;
  for (const Line& line : lines) {
    if (line.tokens.empty()) continue;
    require_tokens(line, 2, path, true);
    const std::string& key = line.tokens[0];
    const auto it = std::find_if(fields.begin(), fields.end(),
                                 [&](const ConfigField& f) { return key == f.key; });
    if (it == fields.end())
      throw ConfigError(where(path, line.number) + ": unknown config key '" + key + "'");
    if (seen[key]) throw ConfigError(where(path, line.number) + ": duplicate key '" + key + "'");
    seen[key] = true;
    if (it->kind == ConfigField::Kind::Double)
      *static_cast<double*>(it->target) = to_double(line.tokens[1], path, line.number, true);
    else
      *static_cast<int*>(it->target) = to_int(line.tokens[1], path, line.number, true);
  }
  config.validate();
  return config;
}

void write_run_config(const fs::path& path, const RunConfig& config) {
  RunConfig copy = config;
  std::ostringstream out;
  for (const ConfigField& field : config_fields(copy)) {
    out << field.key << " ";
    if (field.kind == ConfigField::Kind::Double)
      out << format_double(*static_cast<const double*>(field.target));
    else
      out << *static_cast<const int*>(field.target);
    out << "\n";
  }
  write_text(path, out.str());
}

// ---------------------------------------------------------------------------
// synth specs

namespace {

std::uint64_t to_seed(const std::string& tok, const fs::path& path, int line_no) {
  if (tok.empty() || tok[0] == '-' ||
      tok.find_first_not_of("0123456789") != std::string::npos)
    throw ConfigError(where(path, line_no) + ": expected an unsigned integer, got '" + tok + "'");
  try {
    return std::stoull(tok);
  } catch (const std::exception&) {
    throw ConfigError(where(path, line_no) + ": seed out of range: '" + tok + "'");
  }
}

}  // namespace

SynthSpec read_synth_spec(const fs::path& path) {
  const std::vector<Line> lines = parse_lines(read_text(path, true));
  SynthSpec spec;
  std::map<std::string, bool> seen;
  for (const Line& line : lines) {
    if (line.tokens.empty()) continue;
    const std::string& key = line.tokens[0];
    if (seen[key]) throw ConfigError(where(path, line.number) + ": duplicate key '" + key + "'");
    seen[key] = true;
    int* int_field = nullptr;
    if (key == "n_initial") int_field = &spec.n_initial;
    else if (key == "merge_pairs") int_field = &spec.events.merge_pairs;
    else if (key == "split_sources") int_field = &spec.events.split_sources;
    else if (key == "disappear") int_field = &spec.events.disappear;
    else if (key == "appear") int_field = &spec.events.appear;
    if (int_field) {
      require_tokens(line, 2, path, true);
      *int_field = to_int(line.tokens[1], path, line.number, true);
    } else if (key == "seed") {
      require_tokens(line, 2, path, true);
      spec.seed = to_seed(line.tokens[1], path, line.number);
    } else if (key == "volume_dims") {
      require_tokens(line, 4, path, true);
      for (std::size_t k = 0; k < 3; ++k)
        spec.volume_dims[k] = to_int(line.tokens[k + 1], path, line.number, true);
    } else if (key == "spacing") {
      require_tokens(line, 4, path, true);
      for (std::size_t k = 0; k < 3; ++k)
        spec.spacing[static_cast<Eigen::Index>(k)] =
            to_double(line.tokens[k + 1], path, line.number, true);
    } else if (key == "radius_range" || key == "growth_range") {
      require_tokens(line, 3, path, true);
      auto& range = key == "radius_range" ? spec.radius_range : spec.growth_range;
      range.first = to_double(line.tokens[1], path, line.number, true);
      range.second = to_double(line.tokens[2], path, line.number, true);
    } else if (key == "confusable_events") {
      require_tokens(line, 2, path, true);
      const int value = to_int(line.tokens[1], path, line.number, true);
      if (value != 0 && value != 1)
        throw ConfigError(where(path, line.number) + ": confusable_events must be 0 or 1");
      spec.confusable_events = value == 1;
    } else {
      throw ConfigError(where(path, line.number) + ": unknown spec key '" + key + "'");
    }
  }
  spec.validate();
  return spec;
}

void write_synth_spec(const fs::path& path, const SynthSpec& spec) {
  std::ostringstream out;
  out << "seed " << spec.seed << "\n";
  out << "n_initial " << spec.n_initial << "\n";
  out << "volume_dims " << spec.volume_dims[0] << " " << spec.volume_dims[1] << " "
      << spec.volume_dims[2] << "\n";
  out << "spacing " << format_double(spec.spacing[0]) << " " << format_double(spec.spacing[1])
      << " " << format_double(spec.spacing[2]) << "\n";
  out << "merge_pairs " << spec.events.merge_pairs << "\n";
  out << "split_sources " << spec.events.split_sources << "\n";
  out << "disappear " << spec.events.disappear << "\n";
  out << "appear " << spec.events.appear << "\n";
  out << "radius_range " << format_double(spec.radius_range.first) << " "
      << format_double(spec.radius_range.second) << "\n";
  out << "growth_range " << format_double(spec.growth_range.first) << " "
      << format_double(spec.growth_range.second) << "\n";
  out << "confusable_events " << (spec.confusable_events ? 1 : 0) << "\n";
  write_text(path, out.str());
}

}  // namespace lematch::io
