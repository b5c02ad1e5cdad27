#pragma once

#include <filesystem>
#include <string>

#include "ulv/graph.hpp"

namespace ulv {

/// Loads a graph from a directory containing edges.txt, features.csv,
/// labels.txt and optionally masks.txt. Undirected; duplicate edges are
/// merged silently, self loops and dangling endpoints are rejected.
Graph load_edge_list_dir(const std::filesystem::path& dir);

/// Loads a citation dataset from the standard pickled binary split
/// (ind.<name>.x / .y / .tx / .ty / .allx / .ally / .graph / .test.index).
/// Node ordering follows the file layout; test rows are scattered to their
/// published indices and index gaps become zero feature rows without a mask.
Graph load_planetoid_raw(const std::filesystem::path& dir);

/// Dispatches on format name: "edge-list" or "planetoid-raw".
Graph load_dataset(const std::filesystem::path& path, const std::string& format);

}  // namespace ulv
