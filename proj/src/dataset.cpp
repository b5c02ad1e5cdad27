#include "ulv/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "ulv/errors.hpp"
#include "ulv/pickle.hpp"

namespace ulv {

namespace {

std::vector<std::string> read_lines(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw IoError("cannot open " + p.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // ignore a single trailing blank line from a final newline
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

[[noreturn]] void parse_fail(const std::filesystem::path& p, size_t lineno, const std::string& msg) {
  throw ParseError(p.string() + ":" + std::to_string(lineno) + ": " + msg);
}

int64_t parse_int_token(std::string_view tok, const std::filesystem::path& p, size_t lineno) {
  int64_t v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    parse_fail(p, lineno, "expected integer, got '" + std::string(tok) + "'");
  return v;
}

double parse_real_token(const std::string& tok, const std::filesystem::path& p, size_t lineno) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(tok.c_str(), &end);
  if (errno != 0 || end != tok.c_str() + tok.size() || tok.empty())
    parse_fail(p, lineno, "expected real number, got '" + tok + "'");
  return v;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

std::vector<std::string> split_commas(const std::string& s) {
  std::vector<std::string> out;
  size_t start = 0;
  for (;;) {
    size_t comma = s.find(',', start);
    std::string tok = s.substr(start, comma == std::string::npos ? std::string::npos : comma - start);
    // trim surrounding spaces
    size_t a = tok.find_first_not_of(" \t");
    size_t b = tok.find_last_not_of(" \t");
    out.push_back(a == std::string::npos ? std::string() : tok.substr(a, b - a + 1));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

Graph load_edge_list_dir(const std::filesystem::path& dir) {
  const auto features_path = dir / "features.csv";
  const auto labels_path = dir / "labels.txt";
  const auto edges_path = dir / "edges.txt";
  const auto masks_path = dir / "masks.txt";

  Graph g;

  auto feat_lines = read_lines(features_path);
  if (feat_lines.empty()) throw IntegrityError(features_path.string() + ": no feature rows");
  g.n = feat_lines.size();
  for (size_t i = 0; i < feat_lines.size(); ++i) {
    auto toks = split_commas(feat_lines[i]);
    if (i == 0) {
      g.dim = toks.size();
      g.features = Mat(g.n, g.dim);
    } else if (toks.size() != g.dim) {
      throw IntegrityError(features_path.string() + ":" + std::to_string(i + 1) +
                           ": dimension mismatch, expected " + std::to_string(g.dim) +
                           " values, got " + std::to_string(toks.size()));
    }
    for (size_t j = 0; j < toks.size(); ++j)
      g.features(i, j) = parse_real_token(toks[j], features_path, i + 1);
  }

  auto label_lines = read_lines(labels_path);
  if (label_lines.size() != g.n)
    throw IntegrityError(labels_path.string() + ": " + std::to_string(label_lines.size()) +
                         " labels for " + std::to_string(g.n) + " feature rows");
  g.labels.resize(g.n);
  int max_label = -1;
  for (size_t i = 0; i < label_lines.size(); ++i) {
    int64_t v = parse_int_token(label_lines[i], labels_path, i + 1);
    if (v < 0) parse_fail(labels_path, i + 1, "negative class id");
    g.labels[i] = static_cast<int>(v);
    max_label = std::max(max_label, static_cast<int>(v));
  }
  g.num_classes = max_label + 1;

  // no masks file means everything is trainable
  g.masks.assign(g.n, Mask::Train);
  if (std::filesystem::exists(masks_path)) {
    g.masks.assign(g.n, Mask::None);
    auto mask_lines = read_lines(masks_path);
    if (mask_lines.size() != g.n)
      throw IntegrityError(masks_path.string() + ": " + std::to_string(mask_lines.size()) +
                           " mask rows for " + std::to_string(g.n) + " nodes");
    for (size_t i = 0; i < mask_lines.size(); ++i) {
      const std::string& m = mask_lines[i];
      if (m == "train") g.masks[i] = Mask::Train;
      else if (m == "val") g.masks[i] = Mask::Val;
      else if (m == "test") g.masks[i] = Mask::Test;
      else if (m == "none") g.masks[i] = Mask::None;
      else parse_fail(masks_path, i + 1, "expected one of train/val/test/none, got '" + m + "'");
    }
  }

  g.present.assign(g.n, 1);

  auto edge_lines = read_lines(edges_path);
  std::vector<Edge> pairs;
  pairs.reserve(edge_lines.size());
  for (size_t i = 0; i < edge_lines.size(); ++i) {
    if (edge_lines[i].empty()) continue;
    auto toks = split_ws(edge_lines[i]);
    if (toks.size() != 2)
      parse_fail(edges_path, i + 1, "expected 'u v', got " + std::to_string(toks.size()) + " tokens");
    int64_t u = parse_int_token(toks[0], edges_path, i + 1);
    int64_t v = parse_int_token(toks[1], edges_path, i + 1);
    if (u == v)
      throw IntegrityError(edges_path.string() + ":" + std::to_string(i + 1) + ": self-loop on node " +
                           std::to_string(u));
    if (u < 0 || v < 0 || u >= static_cast<int64_t>(g.n) || v >= static_cast<int64_t>(g.n))
      throw IntegrityError(edges_path.string() + ":" + std::to_string(i + 1) +
                           ": edge endpoint outside [0, " + std::to_string(g.n) + ")");
    pairs.push_back(make_edge(static_cast<NodeId>(u), static_cast<NodeId>(v)));
  }
  g.edges = EdgeSet::from_pairs(std::move(pairs));

  g.validate();
  return g;
}

namespace {

struct PlanetoidFiles {
  pickle::CsrMatrix x, tx, allx;
  pickle::NdArray y, ty, ally;
  std::map<int64_t, std::vector<int64_t>> graph;
  std::vector<int64_t> test_index;
};

std::string find_prefix(const std::filesystem::path& dir) {
  // files are named ind.<name>.<part>
  std::string found;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    const std::string fn = entry.path().filename().string();
    if (fn.size() > 10 && fn.substr(0, 4) == "ind." &&
        fn.substr(fn.size() - 6) == ".graph") {
      std::string name = fn.substr(4, fn.size() - 10);
      if (!found.empty() && found != name)
        throw IntegrityError(dir.string() + ": multiple datasets present (" + found + ", " + name + ")");
      found = name;
    }
  }
  if (found.empty())
    throw IoError(dir.string() + ": no ind.<name>.graph file found");
  return found;
}

std::vector<int64_t> read_test_index(const std::filesystem::path& p) {
  auto lines = read_lines(p);
  std::vector<int64_t> idx;
  idx.reserve(lines.size());
  for (size_t i = 0; i < lines.size(); ++i) {
    if (lines[i].empty()) continue;
    idx.push_back(parse_int_token(lines[i], p, i + 1));
  }
  if (idx.empty()) throw IntegrityError(p.string() + ": empty test index");
  return idx;
}

size_t onehot_cols(const pickle::NdArray& a, const char* what) {
  if (a.ndim() != 2) throw IntegrityError(std::string(what) + ": label array is not 2-d");
  return a.shape[1];
}

}  // namespace

Graph load_planetoid_raw(const std::filesystem::path& dir) {
  const std::string name = find_prefix(dir);
  auto part = [&](const char* suffix) { return dir / ("ind." + name + "." + suffix); };

  PlanetoidFiles f;
  f.x = pickle::as_csr(pickle::parse_file(part("x")));
  f.tx = pickle::as_csr(pickle::parse_file(part("tx")));
  f.allx = pickle::as_csr(pickle::parse_file(part("allx")));
  f.y = pickle::as_array(pickle::parse_file(part("y")));
  f.ty = pickle::as_array(pickle::parse_file(part("ty")));
  f.ally = pickle::as_array(pickle::parse_file(part("ally")));
  f.graph = pickle::as_int_adjacency(pickle::parse_file(part("graph")));
  f.test_index = read_test_index(part("test.index"));

  const size_t n_allx = f.allx.rows;
  const size_t n_tx = f.tx.rows;
  const size_t d = f.allx.cols;
  if (f.tx.cols != d)
    throw IntegrityError(dir.string() + ": allx and tx feature dimensions differ");
  const size_t classes = onehot_cols(f.ally, "ally");
  if (onehot_cols(f.ty, "ty") != classes)
    throw IntegrityError(dir.string() + ": ally and ty class counts differ");
  if (f.ally.shape[0] != n_allx || f.ty.shape[0] != n_tx)
    throw IntegrityError(dir.string() + ": label row counts do not match feature row counts");
  if (f.test_index.size() != n_tx)
    throw IntegrityError(dir.string() + ": test index count does not match tx rows");

  auto [min_it, max_it] = std::minmax_element(f.test_index.begin(), f.test_index.end());
  const int64_t lo = *min_it, hi = *max_it;
  if (lo < static_cast<int64_t>(n_allx))
    throw IntegrityError(dir.string() + ": test indices overlap the allx block");
  // citeseer has unindexed gap nodes inside the test range; they become
  // zero-feature, unmasked nodes so ids keep matching the adjacency dict
  const size_t n = n_allx + static_cast<size_t>(hi - lo + 1);

  Graph g;
  g.n = n;
  g.dim = d;
  g.num_classes = static_cast<int32_t>(classes);
  g.features = Mat(n, d);
  g.labels.assign(n, 0);
  g.masks.assign(n, Mask::None);
  g.present.assign(n, 1);

  auto scatter_csr_row = [&](const pickle::CsrMatrix& m, size_t src_row, size_t dst_row) {
    for (int64_t p = m.indptr[src_row]; p < m.indptr[src_row + 1]; ++p)
      g.features(dst_row, static_cast<size_t>(m.indices[static_cast<size_t>(p)])) =
          m.data[static_cast<size_t>(p)];
  };
  auto argmax_row = [](const pickle::NdArray& a, size_t row) {
    size_t best = 0;
    double best_v = a.at(row, 0);
    for (size_t j = 1; j < a.shape[1]; ++j) {
      double v = a.at(row, j);
      if (v > best_v) { best_v = v; best = j; }
    }
    return static_cast<int>(best);
  };

  for (size_t i = 0; i < n_allx; ++i) {
    scatter_csr_row(f.allx, i, i);
    g.labels[i] = argmax_row(f.ally, i);
  }
  std::vector<bool> seen(n, false);
  for (size_t j = 0; j < f.test_index.size(); ++j) {
    auto dst = static_cast<size_t>(f.test_index[j]);
    if (dst >= n) throw IntegrityError(dir.string() + ": test index out of range");
    if (seen[dst]) throw IntegrityError(dir.string() + ": duplicate test index " + std::to_string(dst));
    seen[dst] = true;
    scatter_csr_row(f.tx, j, dst);
    g.labels[dst] = argmax_row(f.ty, j);
    g.masks[dst] = Mask::Test;
  }

  // standard split: train = labeled head (y rows), val = next 500
  const size_t n_train = f.y.ndim() == 2 ? f.y.shape[0] : f.y.count();
  if (n_train > n_allx) throw IntegrityError(dir.string() + ": y block larger than allx");
  for (size_t i = 0; i < n_train; ++i) g.masks[i] = Mask::Train;
  const size_t val_end = std::min(n_train + 500, n_allx);
  for (size_t i = n_train; i < val_end; ++i) g.masks[i] = Mask::Val;

  std::vector<Edge> pairs;
  for (const auto& [u, nbrs] : f.graph) {
    if (u < 0 || u >= static_cast<int64_t>(n))
      throw IntegrityError(dir.string() + ": adjacency key " + std::to_string(u) + " out of range");
    for (int64_t v : nbrs) {
      if (v < 0 || v >= static_cast<int64_t>(n))
        throw IntegrityError(dir.string() + ": adjacency entry " + std::to_string(v) + " out of range");
      if (u == v) continue;  // published dicts contain occasional self references
      pairs.push_back(make_edge(static_cast<NodeId>(u), static_cast<NodeId>(v)));
    }
  }
  g.edges = EdgeSet::from_pairs(std::move(pairs));

  g.validate();
  return g;
}

Graph load_dataset(const std::filesystem::path& path, const std::string& format) {
  if (format == "edge-list") return load_edge_list_dir(path);
  if (format == "planetoid-raw") return load_planetoid_raw(path);
  throw ArgumentError("unknown dataset format '" + format + "' (expected edge-list or planetoid-raw)");
}

}  // namespace ulv
