#pragma once

// Stacks of binary undirected networks: validation, vectorization of the
// strict lower triangle, and file I/O.
//
// Vectorization order: pairs (u,v) with u > v, column-major over the lower
// triangle (v outer from 0, u inner). Node indices are 0-based in memory and
// 1-based in all file formats.
//
// File formats
//   matrix    one whitespace/comma-separated V x V matrix per file; a file
//             may hold n matrices separated by blank lines; a directory is
//             read as one matrix file per network in lexicographic order.
//   edgelist  header "V=<int>", then one "u v" pair (1-based) per line.
//   labels    CSV "id,label"; id matches the network id (file stem, or block
//             index within a multi-block file).
// Matrix-format input must already be symmetric and hollow: asymmetric input
// is rejected, not symmetrized. Edge lists describe undirected edges and set
// both directions.

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "mgraf/types.hpp"

namespace mgraf {

// ---------------------------------------------------------------------------
// Lower-triangle indexing

inline std::int64_t tri_length(int nodes) {
  return static_cast<std::int64_t>(nodes) * (nodes - 1) / 2;
}

// Linear index of pair (u,v), u > v, in the fixed order.
inline std::int64_t tri_index(int u, int v, int nodes) {
  require(u > v && v >= 0 && u < nodes, "tri_index: need 0 <= v < u < V");
  const std::int64_t col_offset =
      static_cast<std::int64_t>(v) * (2 * nodes - v - 1) / 2;
  return col_offset + (u - v - 1);
}

// Inverse of tri_index: (u, v) for linear index l.
inline std::pair<int, int> tri_pair(std::int64_t l, int nodes) {
  require(l >= 0 && l < tri_length(nodes), "tri_pair: index out of range");
  int v = 0;
  std::int64_t offset = 0;
  while (offset + (nodes - 1 - v) <= l) {
    offset += nodes - 1 - v;
    ++v;
  }
  return {static_cast<int>(l - offset) + v + 1, v};
}

// Strict lower triangle of a square matrix as a length-V(V-1)/2 vector.
inline Vector vectorize_lower(const Matrix& m) {
  require(m.rows() == m.cols(), "vectorize_lower: matrix must be square");
  require(m.rows() >= 2, "vectorize_lower: need V >= 2");
  const int V = static_cast<int>(m.rows());
  Vector out(tri_length(V));
  std::int64_t l = 0;
  for (int v = 0; v < V - 1; ++v) {
    for (int u = v + 1; u < V; ++u) {
      out[l++] = m(u, v);
    }
  }
  return out;
}

// Symmetric hollow matrix from a lower-triangle vector.
inline Matrix devectorize(const Vector& tri, int nodes) {
  require(nodes >= 2, "devectorize: need V >= 2");
  require(tri.size() == tri_length(nodes), "devectorize: length != V(V-1)/2");
  Matrix m = Matrix::Zero(nodes, nodes);
  std::int64_t l = 0;
  for (int v = 0; v < nodes - 1; ++v) {
    for (int u = v + 1; u < nodes; ++u) {
      m(u, v) = tri[l];
      m(v, u) = tri[l];
      ++l;
    }
  }
  return m;
}

struct TriVector {
  Vector values;
  int nodes = 0;
};

// ---------------------------------------------------------------------------
// Stack type and validation

inline void validate_adjacency(const Matrix& a, const std::string& what) {
  ensure(a.rows() == a.cols(), what + ": matrix is not square");
  ensure(a.rows() >= 2, what + ": need at least 2 nodes");
  const int V = static_cast<int>(a.rows());
  for (int v = 0; v < V; ++v) {
    ensure(a(v, v) == 0.0, what + ": nonzero diagonal entry at node " + std::to_string(v + 1));
    for (int u = 0; u < V; ++u) {
      const double x = a(u, v);
      ensure(x == 0.0 || x == 1.0, what + ": non-binary entry at (" + std::to_string(u + 1) +
                                       "," + std::to_string(v + 1) + ")");
      ensure(x == a(v, u), what + ": asymmetric entry at (" + std::to_string(u + 1) + "," +
                               std::to_string(v + 1) + ")");
    }
  }
}

struct NetworkStack {
  std::vector<Matrix> nets;
  std::vector<std::string> ids;     // size n
  std::vector<std::string> labels;  // empty, or size n

  int size() const { return static_cast<int>(nets.size()); }
  int nodes() const { return nets.empty() ? 0 : static_cast<int>(nets[0].rows()); }
  const Matrix& operator[](int i) const { return nets[static_cast<std::size_t>(i)]; }

  static NetworkStack create(std::vector<Matrix> nets, std::vector<std::string> ids = {},
                             std::vector<std::string> labels = {}) {
    ensure(!nets.empty(), "NetworkStack: need at least one network");
    const auto V = nets[0].rows();
    for (std::size_t i = 0; i < nets.size(); ++i) {
      ensure(nets[i].rows() == V && nets[i].cols() == V,
             "NetworkStack: dimension mismatch at network " + std::to_string(i + 1));
      validate_adjacency(nets[i], "network " + std::to_string(i + 1));
    }
    if (ids.empty()) {
      for (std::size_t i = 0; i < nets.size(); ++i) ids.push_back(std::to_string(i));
    }
    ensure(ids.size() == nets.size(), "NetworkStack: ids length != n");
    ensure(labels.empty() || labels.size() == nets.size(), "NetworkStack: labels length != n");
    NetworkStack s;
    s.nets = std::move(nets);
    s.ids = std::move(ids);
    s.labels = std::move(labels);
    return s;
  }
};

// Entrywise mean adjacency matrix.
inline Matrix mean_adjacency(const NetworkStack& stack) {
  Matrix m = Matrix::Zero(stack.nodes(), stack.nodes());
  for (const auto& a : stack.nets) m += a;
  return m / static_cast<double>(stack.size());
}

// ---------------------------------------------------------------------------
// Parsing

enum class StackFormat { Matrix, EdgeList };

namespace detail {

inline std::vector<double> parse_numbers(const std::string& line, const std::string& what) {
  std::string cleaned = line;
  std::replace(cleaned.begin(), cleaned.end(), ',', ' ');
  std::istringstream ss(cleaned);
  std::vector<double> out;
  std::string tok;
  while (ss >> tok) {
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(tok, &used);
    } catch (const std::exception&) {
      throw std::runtime_error(what + ": unparsable value '" + tok + "'");
    }
    ensure(used == tok.size(), what + ": unparsable value '" + tok + "'");
    out.push_back(v);
  }
  return out;
}

inline bool blank_line(const std::string& s) {
  return std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isspace(c); });
}

// Parses one or more square matrices separated by blank lines.
inline std::vector<Matrix> parse_matrix_blocks(std::istream& in, const std::string& what) {
  std::vector<Matrix> blocks;
  std::vector<std::vector<double>> rows;
  std::string line;
  auto flush = [&]() {
    if (rows.empty()) return;
    const std::size_t V = rows.size();
    for (const auto& r : rows) {
      ensure(r.size() == V, what + ": ragged matrix block (" + std::to_string(rows.size()) +
                                " rows, row of width " + std::to_string(r.size()) + ")");
    }
    Matrix m(V, V);
    for (std::size_t i = 0; i < V; ++i)
      for (std::size_t j = 0; j < V; ++j) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    blocks.push_back(std::move(m));
    rows.clear();
  };
  while (std::getline(in, line)) {
    if (blank_line(line)) {
      flush();
      continue;
    }
    rows.push_back(parse_numbers(line, what));
  }
  flush();
  ensure(!blocks.empty(), what + ": no matrix data found");
  return blocks;
}

inline Matrix parse_edge_list(std::istream& in, const std::string& what) {
  std::string line;
  int V = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (blank_line(line)) continue;
    auto pos = line.find("V=");
    ensure(pos != std::string::npos, what + ": edge list must start with 'V=<int>'");
    V = std::stoi(line.substr(pos + 2));
    have_header = true;
    break;
  }
  ensure(have_header, what + ": missing 'V=' header");
  ensure(V >= 2, what + ": V must be >= 2");
  Matrix m = Matrix::Zero(V, V);
  while (std::getline(in, line)) {
    if (blank_line(line)) continue;
    const auto nums = parse_numbers(line, what);
    ensure(nums.size() == 2, what + ": expected 'u v' pair");
    const int u = static_cast<int>(nums[0]);
    const int v = static_cast<int>(nums[1]);
    ensure(nums[0] == u && nums[1] == v, what + ": non-integer node index");
    ensure(u >= 1 && u <= V && v >= 1 && v <= V, what + ": node index out of range [1,V]");
    ensure(u != v, what + ": self-loop " + std::to_string(u) + "-" + std::to_string(v));
    m(u - 1, v - 1) = 1.0;
    m(v - 1, u - 1) = 1.0;
  }
  return m;
}

inline std::string file_stem(const std::filesystem::path& p) { return p.stem().string(); }

}  // namespace detail

// ---------------------------------------------------------------------------
// Loading and saving

inline NetworkStack load_stack(const std::string& source, StackFormat format) {
  namespace fs = std::filesystem;
  const fs::path path(source);
  ensure(fs::exists(path), "load_stack: no such file or directory: " + source);

  std::vector<fs::path> files;
  if (fs::is_directory(path)) {
    for (const auto& e : fs::directory_iterator(path)) {
      if (e.is_regular_file()) files.push_back(e.path());
    }
    ensure(!files.empty(), "load_stack: directory is empty: " + source);
    std::sort(files.begin(), files.end(),
              [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  } else {
    files.push_back(path);
  }

  std::vector<Matrix> nets;
  std::vector<std::string> ids;
  for (const auto& f : files) {
    std::ifstream in(f);
    ensure(in.good(), "load_stack: unreadable file: " + f.string());
    if (format == StackFormat::Matrix) {
      auto blocks = detail::parse_matrix_blocks(in, f.string());
      const bool single = blocks.size() == 1;
      for (std::size_t b = 0; b < blocks.size(); ++b) {
        const std::string id = files.size() == 1 && !single ? std::to_string(b)
                               : single                     ? detail::file_stem(f)
                                       : detail::file_stem(f) + "#" + std::to_string(b);
        nets.push_back(std::move(blocks[b]));
        ids.push_back(id);
      }
    } else {
      nets.push_back(detail::parse_edge_list(in, f.string()));
      ids.push_back(detail::file_stem(f));
    }
  }
  return NetworkStack::create(std::move(nets), std::move(ids));
}

// Writes a stack as blank-line separated 0/1 matrix blocks in one file.
inline void save_stack(const NetworkStack& stack, const std::string& file) {
  std::ofstream out(file);
  ensure(out.good(), "save_stack: cannot open " + file);
  const int V = stack.nodes();
  for (int i = 0; i < stack.size(); ++i) {
    if (i > 0) out << "\n";
    for (int r = 0; r < V; ++r) {
      for (int c = 0; c < V; ++c) {
        out << (stack[i](r, c) != 0.0 ? 1 : 0) << (c + 1 < V ? " " : "");
      }
      out << "\n";
    }
  }
  ensure(out.good(), "save_stack: write failed for " + file);
}

// Real-valued stacks share the matrix layout but skip the binary checks; used
// to exchange probability matrices with external methods.
inline std::vector<Matrix> load_real_stack(const std::string& file) {
  std::ifstream in(file);
  ensure(in.good(), "load_real_stack: unreadable file: " + file);
  auto blocks = detail::parse_matrix_blocks(in, file);
  for (std::size_t i = 1; i < blocks.size(); ++i) {
    ensure(blocks[i].rows() == blocks[0].rows(),
           "load_real_stack: dimension mismatch at block " + std::to_string(i + 1));
  }
  return blocks;
}

inline void save_real_stack(const std::vector<Matrix>& mats, const std::string& file) {
  std::ofstream out(file);
  ensure(out.good(), "save_real_stack: cannot open " + file);
  out.precision(17);
  for (std::size_t i = 0; i < mats.size(); ++i) {
    if (i > 0) out << "\n";
    for (Eigen::Index r = 0; r < mats[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < mats[i].cols(); ++c) {
        out << mats[i](r, c) << (c + 1 < mats[i].cols() ? " " : "");
      }
      out << "\n";
    }
  }
}

// Labels CSV: "id,label" per line; a leading "id,label" header is skipped.
inline std::vector<std::pair<std::string, std::string>> load_labels(const std::string& file) {
  std::ifstream in(file);
  ensure(in.good(), "load_labels: unreadable file: " + file);
  std::vector<std::pair<std::string, std::string>> out;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (detail::blank_line(line)) continue;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (first && line == "id,label") {
      first = false;
      continue;
    }
    first = false;
    const auto comma = line.find(',');
    ensure(comma != std::string::npos, "load_labels: expected 'id,label' in: " + line);
    out.emplace_back(line.substr(0, comma), line.substr(comma + 1));
  }
  ensure(!out.empty(), "load_labels: no labels found in " + file);
  return out;
}

inline void attach_labels(NetworkStack& stack,
                          const std::vector<std::pair<std::string, std::string>>& labels) {
  std::vector<std::string> assigned(stack.nets.size());
  for (std::size_t i = 0; i < stack.nets.size(); ++i) {
    const auto it = std::find_if(labels.begin(), labels.end(),
                                 [&](const auto& kv) { return kv.first == stack.ids[i]; });
    ensure(it != labels.end(), "attach_labels: no label for network id '" + stack.ids[i] + "'");
    assigned[i] = it->second;
  }
  stack.labels = std::move(assigned);
}

}  // namespace mgraf
