#pragma once

#include <iosfwd>
#include <string>

#include "wavesync/pose_graph.h"

namespace wavesync {

// Line-oriented pose-graph exchange text format:
//   VERTEX_SE3:QUAT id x y z qx qy qz qw
//   EDGE_SE3:QUAT from to x y z qx qy qz qw <21 upper-triangular info entries>
// Robot/submap/timestamp metadata and edge kinds ride in '#'-prefixed sidecar
// records (# NODE_INFO, # EDGE_INFO) so foreign parsers treat them as
// comments. Floats are printed at 17 significant digits.
std::string serialize_graph(const PoseGraph& graph);
void serialize_graph(const PoseGraph& graph, std::ostream& out);

// Throws ParseError (with line number) on malformed records.
PoseGraph parse_graph(const std::string& text);
PoseGraph parse_graph(std::istream& in);

void save_graph(const PoseGraph& graph, const std::string& path);
PoseGraph load_graph(const std::string& path);

}  // namespace wavesync
