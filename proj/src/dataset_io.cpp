#include "equifuse/dataset_io.hpp"

#include <fstream>

#include <json.hpp>

namespace equifuse {

using nlohmann::json;

namespace {

json matrix_to_json(const Mat& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat matrix_from_json(const json& j, Eigen::Index expect_cols = -1) {
  if (!j.is_array()) throw json::type_error::create(302, "matrix expected", &j);
  const Eigen::Index n = static_cast<Eigen::Index>(j.size());
  Eigen::Index cols = expect_cols;
  if (n > 0 && cols < 0) cols = static_cast<Eigen::Index>(j[0].size());
  if (cols < 0) cols = 0;
  Mat m(n, cols);
  for (Eigen::Index r = 0; r < n; ++r) {
    const json& row = j[r];
    if (static_cast<Eigen::Index>(row.size()) != cols)
      throw json::type_error::create(302, "ragged matrix", &j);
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[c].get<double>();
  }
  return m;
}

void write_lines(const std::string& path, const std::string& kind,
                 const std::vector<json>& records) {
  std::ofstream out(path);
  if (!out) throw DataError("dataset: cannot write " + path);
  json header;
  header["format"] = kind;
  header["version"] = 1;
  out << header.dump() << "\n";
  for (const json& rec : records) out << rec.dump() << "\n";
}

std::vector<json> read_lines(const std::string& path, const std::string& kind) {
  std::ifstream in(path);
  if (!in) throw DataError("dataset: cannot read " + path);
  std::string line;
  int line_no = 0;
  std::vector<json> records;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw DataError("dataset: parse error at " + path + ":" +
                      std::to_string(line_no) + ": " + e.what());
    }
    if (line_no == 1) {
      if (j.value("format", "") != kind)
        throw DataError("dataset: " + path + " is not a " + kind + " file");
      continue;
    }
    records.push_back(std::move(j));
  }
  if (line_no == 0) throw DataError("dataset: " + path + " is empty (no header)");
  return records;
}

}  // namespace

void save_trajectories(const std::string& path,
                       const std::vector<Trajectory>& trajs) {
  std::vector<json> records;
  records.reserve(trajs.size());
  for (const Trajectory& traj : trajs) {
    traj.validate();
    json rec;
    rec["n_nodes"] = traj.skeleton.n_nodes();
    rec["features"] = matrix_to_json(traj.skeleton.features);
    json edges = json::array();
    for (const auto& [i, j] : traj.skeleton.edges)
      edges.push_back(json::array({i, j}));
    rec["edges"] = std::move(edges);
    json frames = json::array();
    for (const MatX3& f : traj.frames) frames.push_back(matrix_to_json(f));
    rec["frames"] = std::move(frames);
    records.push_back(std::move(rec));
  }
  write_lines(path, "traj.jsonl", records);
}

std::vector<Trajectory> load_trajectories(const std::string& path) {
  std::vector<Trajectory> out;
  int rec_no = 0;
  for (const json& rec : read_lines(path, "traj.jsonl")) {
    ++rec_no;
    try {
      Trajectory traj;
      const int n = rec.at("n_nodes").get<int>();
      traj.skeleton.features = matrix_from_json(rec.at("features"));
      for (const json& e : rec.at("edges"))
        traj.skeleton.edges.emplace_back(e.at(0).get<int>(), e.at(1).get<int>());
      for (const json& f : rec.at("frames"))
        traj.frames.push_back(MatX3(matrix_from_json(f, 3)));
      if (traj.frames.empty() || traj.frames.front().rows() != n)
        throw DataError("frame node count disagrees with n_nodes");
      traj.skeleton.coords = traj.frames.front();
      traj.validate();
      out.push_back(std::move(traj));
    } catch (const json::exception& e) {
      throw DataError("dataset: bad trajectory record " +
                      std::to_string(rec_no) + " in " + path + ": " + e.what());
    }
  }
  return out;
}

void save_residues(const std::string& path,
                   const std::vector<ResidueStructure>& samples) {
  std::vector<json> records;
  records.reserve(samples.size());
  for (const ResidueStructure& rs : samples) {
    rs.validate();
    json rec;
    rec["categories"] = rs.categories;
    json bb = json::array();
    for (const Mat43& atoms : rs.backbone) bb.push_back(matrix_to_json(atoms));
    rec["backbone"] = std::move(bb);
    records.push_back(std::move(rec));
  }
  write_lines(path, "res.jsonl", records);
}

std::vector<ResidueStructure> load_residues(const std::string& path) {
  std::vector<ResidueStructure> out;
  int rec_no = 0;
  for (const json& rec : read_lines(path, "res.jsonl")) {
    ++rec_no;
    try {
      ResidueStructure rs;
      rs.categories = rec.at("categories").get<std::vector<int>>();
      for (const json& atoms : rec.at("backbone")) {
        Mat m = matrix_from_json(atoms, 3);
        if (m.rows() != kAtomsPerResidue)
          throw DataError("backbone residue must have 4 atoms");
        rs.backbone.push_back(Mat43(m));
      }
      rs.validate();
      out.push_back(std::move(rs));
    } catch (const json::exception& e) {
      throw DataError("dataset: bad residue record " + std::to_string(rec_no) +
                      " in " + path + ": " + e.what());
    }
  }
  return out;
}

}  // namespace equifuse
