#include "wavesync/posegraph_io.h"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "wavesync/error.h"

namespace wavesync {
namespace {

void append_double(std::string& out, double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  out += ' ';
  out += buf;
}

double parse_double(const std::string& token, int line) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(token, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected a number, got '" + token + "'");
  }
  if (pos != token.size()) {
    throw ParseError(line, "trailing characters in number '" + token + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& token, int line) {
  std::size_t pos = 0;
  std::int64_t v = 0;
  try {
    v = std::stoll(token, &pos);
  } catch (const std::exception&) {
    throw ParseError(line, "expected an integer, got '" + token + "'");
  }
  if (pos != token.size()) {
    throw ParseError(line, "trailing characters in integer '" + token + "'");
  }
  return v;
}

std::vector<std::string> tokenize(const std::string& line) {
  std::vector<std::string> tokens;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) tokens.push_back(tok);
  return tokens;
}

}  // namespace

std::string serialize_graph(const PoseGraph& graph) {
  std::string out;
  out += "# .posegraph 1\n";
  out += "# FRAME " + graph.frame_id() + "\n";

  for (const PoseNode& n : graph.nodes()) {
    const Eigen::Vector3d& t = n.pose.translation();
    const Eigen::Quaterniond& q = n.pose.rotation();
    std::string line = "VERTEX_SE3:QUAT " + std::to_string(n.node_id);
    append_double(line, t.x());
    append_double(line, t.y());
    append_double(line, t.z());
    append_double(line, q.x());
    append_double(line, q.y());
    append_double(line, q.z());
    append_double(line, q.w());
    out += line + "\n";
    char meta[160];
    std::snprintf(meta, sizeof(meta), "# NODE_INFO %" PRId64 " %d %d %" PRId64 "\n",
                  n.node_id, n.robot_id, n.submap_id, n.timestamp_ns);
    out += meta;
  }

  int edge_index = 0;
  for (const RelativeConstraint& e : graph.edges()) {
    const Eigen::Vector3d& t = e.measurement.translation();
    const Eigen::Quaterniond& q = e.measurement.rotation();
    std::string line =
        "EDGE_SE3:QUAT " + std::to_string(e.from_id) + " " + std::to_string(e.to_id);
    append_double(line, t.x());
    append_double(line, t.y());
    append_double(line, t.z());
    append_double(line, q.x());
    append_double(line, q.y());
    append_double(line, q.z());
    append_double(line, q.w());
    for (int i = 0; i < 6; ++i) {
      for (int j = i; j < 6; ++j) {
        append_double(line, e.information(i, j));
      }
    }
    out += line + "\n";
    out += "# EDGE_INFO " + std::to_string(edge_index) + " " +
           std::string(to_string(e.kind)) + "\n";
    ++edge_index;
  }
  return out;
}

void serialize_graph(const PoseGraph& graph, std::ostream& out) {
  out << serialize_graph(graph);
}

PoseGraph parse_graph(std::istream& in) {
  PoseGraph graph;
  std::string line;
  int line_no = 0;
  std::vector<int> edge_lines;

  std::vector<RelativeConstraint> edges;

  while (std::getline(in, line)) {
    ++line_no;
    const std::vector<std::string> tok = tokenize(line);
    if (tok.empty()) continue;

    if (tok[0] == "#") {
      if (tok.size() >= 2 && tok[1] == "FRAME") {
        const auto pos = line.find("FRAME ");
        graph.set_frame_id(pos == std::string::npos ? "map" : line.substr(pos + 6));
      } else if (tok.size() >= 2 && tok[1] == "NODE_INFO") {
        if (tok.size() != 6) throw ParseError(line_no, "NODE_INFO needs 4 fields");
        const std::int64_t id = parse_int(tok[2], line_no);
        if (!graph.has_node(id)) {
          throw ParseError(line_no, "NODE_INFO for unknown vertex " + tok[2]);
        }
        PoseNode& n = graph.mutable_node(id);
        n.robot_id = static_cast<int>(parse_int(tok[3], line_no));
        n.submap_id = static_cast<int>(parse_int(tok[4], line_no));
        n.timestamp_ns = parse_int(tok[5], line_no);
      } else if (tok.size() >= 2 && tok[1] == "EDGE_INFO") {
        if (tok.size() != 4) throw ParseError(line_no, "EDGE_INFO needs 2 fields");
        const std::int64_t idx = parse_int(tok[2], line_no);
        if (idx < 0 || idx >= static_cast<std::int64_t>(edges.size())) {
          throw ParseError(line_no, "EDGE_INFO index out of range");
        }
        const auto kind = constraint_kind_from_string(tok[3]);
        if (!kind) throw ParseError(line_no, "unknown edge kind '" + tok[3] + "'");
        edges[idx].kind = *kind;
      }
      continue;
    }

    if (tok[0] == "VERTEX_SE3:QUAT") {
      if (tok.size() != 9) {
        throw ParseError(line_no, "VERTEX_SE3:QUAT needs 8 fields, got " +
                                      std::to_string(tok.size() - 1));
      }
      PoseNode n;
      n.node_id = parse_int(tok[1], line_no);
      const double x = parse_double(tok[2], line_no);
      const double y = parse_double(tok[3], line_no);
      const double z = parse_double(tok[4], line_no);
      const double qx = parse_double(tok[5], line_no);
      const double qy = parse_double(tok[6], line_no);
      const double qz = parse_double(tok[7], line_no);
      const double qw = parse_double(tok[8], line_no);
      n.pose = Pose(Eigen::Vector3d(x, y, z), Eigen::Quaterniond(qw, qx, qy, qz));
      if (graph.has_node(n.node_id)) {
        throw ParseError(line_no, "duplicate vertex " + tok[1]);
      }
      graph.add_node(n);
      continue;
    }

    if (tok[0] == "EDGE_SE3:QUAT") {
      if (tok.size() != 31) {
        throw ParseError(line_no, "EDGE_SE3:QUAT needs 30 fields, got " +
                                      std::to_string(tok.size() - 1));
      }
      RelativeConstraint e;
      e.from_id = parse_int(tok[1], line_no);
      e.to_id = parse_int(tok[2], line_no);
      if (e.from_id == e.to_id) throw ParseError(line_no, "self edge");
      const double x = parse_double(tok[3], line_no);
      const double y = parse_double(tok[4], line_no);
      const double z = parse_double(tok[5], line_no);
      const double qx = parse_double(tok[6], line_no);
      const double qy = parse_double(tok[7], line_no);
      const double qz = parse_double(tok[8], line_no);
      const double qw = parse_double(tok[9], line_no);
      e.measurement = Pose(Eigen::Vector3d(x, y, z), Eigen::Quaterniond(qw, qx, qy, qz));
      int k = 10;
      for (int i = 0; i < 6; ++i) {
        for (int j = i; j < 6; ++j) {
          const double v = parse_double(tok[k++], line_no);
          e.information(i, j) = v;
          e.information(j, i) = v;
        }
      }
      edges.push_back(e);
      edge_lines.push_back(line_no);
      continue;
    }

    throw ParseError(line_no, "unknown record '" + tok[0] + "'");
  }

  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!graph.has_node(edges[i].from_id) || !graph.has_node(edges[i].to_id)) {
      throw ParseError(edge_lines[i], "edge references unknown vertex");
    }
    graph.add_edge(edges[i]);
  }
  return graph;
}

PoseGraph parse_graph(const std::string& text) {
  std::istringstream ss(text);
  return parse_graph(ss);
}

void save_graph(const PoseGraph& graph, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path + " for writing");
  out << serialize_graph(graph);
}

PoseGraph load_graph(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  return parse_graph(in);
}

}  // namespace wavesync
