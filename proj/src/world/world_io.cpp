#include <fstream>
#include <sstream>

#include <json.hpp>

#include "anav/world.hpp"

namespace anav::world {

using nlohmann::json;

namespace {

double number_at(const json& j, const std::string& where) {
  if (!j.is_number()) throw WorldError(where + ": expected a number");
  return j.get<double>();
}

int integer_at(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw WorldError(where + ": expected an integer");
  return j.get<int>();
}

const json& field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object()) throw WorldError(where + ": expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw WorldError(where + "." + key + ": missing");
  return *it;
}

}  // namespace

std::string environment_to_json(const Environment& env) {
  json root;
  root["viewpoints"] = json::array();
  for (const Viewpoint& v : env.viewpoints()) {
    json jv;
    jv["id"] = v.id;
    jv["pos"] = {v.position.x, v.position.y, v.position.z};
    jv["landmark"] = v.landmark;
    root["viewpoints"].push_back(std::move(jv));
  }
  root["edges"] = json::array();
  for (const Edge& e : env.edges()) root["edges"].push_back({e.a, e.b});
  // nlohmann writes the shortest decimal that round-trips each double.
  return root.dump(1);
}

Environment environment_from_json(const std::string& text, int k_max) {
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw WorldError(std::string("parse error: ") + e.what());
  }
  const json& vps = field(root, "viewpoints", "root");
  if (!vps.is_array()) throw WorldError("viewpoints: expected an array");
  std::vector<Viewpoint> viewpoints;
  for (std::size_t i = 0; i < vps.size(); ++i) {
    const std::string where = "viewpoints[" + std::to_string(i) + "]";
    const json& jv = vps[i];
    Viewpoint v;
    v.id = integer_at(field(jv, "id", where), where + ".id");
    const json& pos = field(jv, "pos", where);
    if (!pos.is_array() || pos.size() != 3) throw WorldError(where + ".pos: expected [x, y, z]");
    v.position = {number_at(pos[0], where + ".pos[0]"), number_at(pos[1], where + ".pos[1]"),
                  number_at(pos[2], where + ".pos[2]")};
    const json& lm = field(jv, "landmark", where);
    if (!lm.is_array()) throw WorldError(where + ".landmark: expected an array");
    for (std::size_t j = 0; j < lm.size(); ++j) {
      v.landmark.push_back(number_at(lm[j], where + ".landmark[" + std::to_string(j) + "]"));
    }
    viewpoints.push_back(std::move(v));
  }
  const json& jedges = field(root, "edges", "root");
  if (!jedges.is_array()) throw WorldError("edges: expected an array");
  std::vector<std::pair<int, int>> edges;
  for (std::size_t e = 0; e < jedges.size(); ++e) {
    const std::string where = "edges[" + std::to_string(e) + "]";
    const json& je = jedges[e];
    if (!je.is_array() || je.size() != 2) throw WorldError(where + ": expected [a, b]");
    edges.emplace_back(integer_at(je[0], where + "[0]"), integer_at(je[1], where + "[1]"));
  }
  Environment env = Environment::build(std::move(viewpoints), edges);
  if (k_max > 0) validate_generator_contract(env, k_max);
  return env;
}

void save_environment(const Environment& env, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << environment_to_json(env) << '\n';
}

Environment load_environment(const std::string& path, int k_max) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return environment_from_json(buf.str(), k_max);
  } catch (const WorldError& e) {
    throw WorldError(path + ": " + e.what());
  }
}

}  // namespace anav::world
