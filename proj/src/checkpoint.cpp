#include "equifuse/checkpoint.hpp"

#include <fstream>

#include <json.hpp>

namespace equifuse {

using nlohmann::json;

void save_checkpoint(const std::string& path,
                     const std::vector<ParamGroup>& groups) {
  json doc;
  doc["format"] = "equifuse-checkpoint";
  doc["version"] = 1;
  doc["groups"] = json::array();
  for (const ParamGroup& g : groups) {
    json jg;
    jg["name"] = g.name;
    jg["frozen"] = g.frozen;
    jg["tensors"] = json::array();
    for (const NamedTensor& p : g.tensors) {
      json jt;
      jt["name"] = p.name;
      jt["shape"] = p.tensor.shape();
      const Vec& v = p.tensor.value();
      jt["data"] = std::vector<double>(v.data(), v.data() + v.size());
      jg["tensors"].push_back(std::move(jt));
    }
    doc["groups"].push_back(std::move(jg));
  }
  std::ofstream out(path);
  if (!out) throw DataError("checkpoint: cannot write " + path);
  out << doc.dump() << "\n";
}

void load_checkpoint(const std::string& path,
                     std::vector<ParamGroup>& groups) {
  std::ifstream in(path);
  if (!in) throw DataError("checkpoint: cannot read " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::exception& e) {
    throw DataError("checkpoint: malformed JSON in " + path + ": " + e.what());
  }
  if (doc.value("format", "") != "equifuse-checkpoint")
    throw DataError("checkpoint: " + path + " is not a checkpoint file");
  const json& jgroups = doc.at("groups");
  if (jgroups.size() != groups.size())
    throw DataError("checkpoint: expected " + std::to_string(groups.size()) +
                    " groups, file has " + std::to_string(jgroups.size()));
  for (size_t g = 0; g < groups.size(); ++g) {
    const json& jg = jgroups[g];
    if (jg.at("name") != groups[g].name ||
        jg.at("frozen") != groups[g].frozen)
      throw DataError("checkpoint: group manifest mismatch for '" +
                      groups[g].name + "'");
    const json& jts = jg.at("tensors");
    if (jts.size() != groups[g].tensors.size())
      throw DataError("checkpoint: tensor count mismatch in group '" +
                      groups[g].name + "'");
    for (size_t i = 0; i < groups[g].tensors.size(); ++i) {
      NamedTensor& p = groups[g].tensors[i];
      const json& jt = jts[i];
      if (jt.at("name") != p.name)
        throw DataError("checkpoint: tensor name mismatch: expected '" +
                        p.name + "', file has '" +
                        jt.at("name").get<std::string>() + "'");
      Shape shape = jt.at("shape").get<Shape>();
      if (shape != p.tensor.shape())
        throw DataError("checkpoint: shape mismatch for " + groups[g].name +
                        "/" + p.name + ": expected " +
                        shape_str(p.tensor.shape()) + ", file has " +
                        shape_str(shape));
      std::vector<double> data = jt.at("data").get<std::vector<double>>();
      if (static_cast<Eigen::Index>(data.size()) != p.tensor.size())
        throw DataError("checkpoint: data length mismatch for " +
                        groups[g].name + "/" + p.name);
      p.tensor.value_mut() = Eigen::Map<const Vec>(data.data(), data.size());
    }
  }
}

}  // namespace equifuse
