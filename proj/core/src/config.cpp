#include "ddhinf/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "ddhinf/errors.hpp"
#include "json_util.hpp"

namespace ddhinf {

namespace {

const std::set<std::string> kControllerNames = {"baseline", "static", "moving-horizon"};

void reject_unknown(const nlohmann::json& obj, const std::set<std::string>& allowed,
                    const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key()))
      throw InputError("config: unknown key \"" + it.key() + "\" in " + where);
  }
}

double num(const nlohmann::json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number()) throw InputError(std::string("config: ") + key + " must be a number");
  return obj[key].get<double>();
}

std::uint64_t uint_of(const nlohmann::json& obj, const char* key, std::uint64_t fallback) {
  if (!obj.contains(key)) return fallback;
  if (!obj[key].is_number_unsigned() && !obj[key].is_number_integer())
    throw InputError(std::string("config: ") + key + " must be a non-negative integer");
  const auto v = obj[key].get<std::int64_t>();
  if (v < 0) throw InputError(std::string("config: ") + key + " must be non-negative");
  return static_cast<std::uint64_t>(v);
}

}  // namespace

void ScenarioConfig::validate() const {
  plant.validate();
  if (data.J < 1) throw InputError("config: data.J must be >= 1");
  if (!(data.eps >= 0.0) || !std::isfinite(data.eps))
    throw InputError("config: data.eps must be finite and >= 0");
  if (!(data.input_bound > 0.0)) throw InputError("config: data.input_bound must be positive");
  if (!(data.state_bound > 0.0)) throw InputError("config: data.state_bound must be positive");
  if (noise != "pointwise")
    throw InputError("config: unsupported noise model \"" + noise + "\" (expected \"pointwise\")");
  if (!(synthesis.sigma0 > 0.0)) throw InputError("config: synthesis.sigma0 must be positive");
  if (!synthesis.auto_r0 && !(synthesis.r0 > 0.0))
    throw InputError("config: synthesis.r0 must be positive");
  if (controllers.empty()) throw InputError("config: controllers must be non-empty");
  std::set<std::string> seen;
  for (const auto& c : controllers) {
    if (!kControllerNames.count(c)) throw InputError("config: unknown controller \"" + c + "\"");
    if (!seen.insert(c).second) throw InputError("config: duplicate controller \"" + c + "\"");
  }
  if (simulation.x0.size() != plant.n())
    throw InputError("config: simulation.x0 must match the plant state dimension");
  if (!simulation.x0.allFinite()) throw InputError("config: simulation.x0 must be finite");
  if (simulation.T < 1) throw InputError("config: simulation.T must be >= 1");
  if (simulation.disturbance != "decaying" && simulation.disturbance != "zero")
    throw InputError("config: simulation.disturbance must be \"decaying\" or \"zero\"");
  if (!(simulation.rho > 0.0) || !(simulation.rho < 1.0))
    throw InputError("config: simulation.rho must lie in (0, 1)");
  if (!(simulation.headroom > 0.0) || !std::isfinite(simulation.headroom))
    throw InputError("config: simulation.headroom must be positive");
  if (outputs.dir.empty()) throw InputError("config: outputs.dir must be non-empty");
}

std::string ScenarioConfig::to_json() const {
  nlohmann::json doc;
  if (plant_is_example) {
    doc["plant"] = "example44";
  } else {
    doc["plant"] = {{"A", detail::matrix_json(plant.A)},     {"B", detail::matrix_json(plant.B)},
                    {"C1", detail::matrix_json(plant.C1)},   {"D1", detail::matrix_json(plant.D1)},
                    {"C2", detail::matrix_json(plant.C2)},   {"D2", detail::matrix_json(plant.D2)},
                    {"y2max", detail::vector_json(plant.y2max)}};
  }
  doc["data"] = {{"J", data.J},
                 {"eps", data.eps},
                 {"input_bound", data.input_bound},
                 {"state_bound", data.state_bound},
                 {"seed", data.seed}};
  doc["noise"] = noise;
  doc["synthesis"] = {{"sigma0", synthesis.sigma0},
                      {"r0", synthesis.r0},
                      {"auto_r0", synthesis.auto_r0}};
  doc["controllers"] = controllers;
  doc["simulation"] = {{"x0", detail::vector_json(simulation.x0)},
                       {"T", simulation.T},
                       {"disturbance", simulation.disturbance},
                       {"rho", simulation.rho},
                       {"headroom", simulation.headroom},
                       {"seed", simulation.seed}};
  doc["outputs"] = {{"dir", outputs.dir}, {"plot_data", outputs.plot_data}};
  return doc.dump(2);
}

ScenarioConfig ScenarioConfig::from_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw InputError("config: top level must be an object");
  reject_unknown(doc, {"plant", "data", "noise", "synthesis", "controllers", "simulation",
                       "outputs"},
                 "top level");

  ScenarioConfig cfg;
  if (!doc.contains("plant")) throw InputError("config: missing plant");
  if (doc["plant"].is_string()) {
    const std::string name = doc["plant"].get<std::string>();
    if (name != "example44") throw InputError("config: unknown plant name \"" + name + "\"");
    cfg.plant = PlantModel::example44();
    cfg.plant_is_example = true;
  } else if (doc["plant"].is_object()) {
    const auto& p = doc["plant"];
    reject_unknown(p, {"A", "B", "C1", "D1", "C2", "D2", "y2max"}, "plant");
    for (const char* key : {"A", "B", "C1", "D1", "C2", "D2", "y2max"})
      if (!p.contains(key)) throw InputError(std::string("config: plant missing ") + key);
    cfg.plant.A = detail::json_matrix(p["A"], "plant.A");
    cfg.plant.B = detail::json_matrix(p["B"], "plant.B");
    cfg.plant.C1 = detail::json_matrix(p["C1"], "plant.C1");
    cfg.plant.D1 = detail::json_matrix(p["D1"], "plant.D1");
    cfg.plant.C2 = detail::json_matrix(p["C2"], "plant.C2");
    cfg.plant.D2 = detail::json_matrix(p["D2"], "plant.D2");
    cfg.plant.y2max = detail::json_vector(p["y2max"], "plant.y2max");
  } else {
    throw InputError("config: plant must be a name or a matrix object");
  }

  if (doc.contains("data")) {
    const auto& d = doc["data"];
    if (!d.is_object()) throw InputError("config: data must be an object");
    reject_unknown(d, {"J", "eps", "input_bound", "state_bound", "seed"}, "data");
    cfg.data.J = static_cast<int>(num(d, "J", cfg.data.J));
    cfg.data.eps = num(d, "eps", cfg.data.eps);
    cfg.data.input_bound = num(d, "input_bound", cfg.data.input_bound);
    cfg.data.state_bound = num(d, "state_bound", cfg.data.state_bound);
    cfg.data.seed = uint_of(d, "seed", cfg.data.seed);
  }
  if (doc.contains("noise")) {
    if (!doc["noise"].is_string()) throw InputError("config: noise must be a string");
    cfg.noise = doc["noise"].get<std::string>();
  }
  if (doc.contains("synthesis")) {
    const auto& s = doc["synthesis"];
    if (!s.is_object()) throw InputError("config: synthesis must be an object");
    reject_unknown(s, {"sigma0", "r0", "auto_r0"}, "synthesis");
    cfg.synthesis.sigma0 = num(s, "sigma0", cfg.synthesis.sigma0);
    cfg.synthesis.r0 = num(s, "r0", cfg.synthesis.r0);
    if (s.contains("auto_r0")) {
      if (!s["auto_r0"].is_boolean()) throw InputError("config: synthesis.auto_r0 must be boolean");
      cfg.synthesis.auto_r0 = s["auto_r0"].get<bool>();
    }
  }
  if (doc.contains("controllers")) {
    if (!doc["controllers"].is_array()) throw InputError("config: controllers must be an array");
    cfg.controllers.clear();
    for (const auto& c : doc["controllers"]) {
      if (!c.is_string()) throw InputError("config: controllers entries must be strings");
      cfg.controllers.push_back(c.get<std::string>());
    }
  }
  if (doc.contains("simulation")) {
    const auto& s = doc["simulation"];
    if (!s.is_object()) throw InputError("config: simulation must be an object");
    reject_unknown(s, {"x0", "T", "disturbance", "rho", "headroom", "seed"}, "simulation");
    if (s.contains("x0")) cfg.simulation.x0 = detail::json_vector(s["x0"], "simulation.x0");
    cfg.simulation.T = static_cast<int>(num(s, "T", cfg.simulation.T));
    if (s.contains("disturbance")) {
      if (!s["disturbance"].is_string())
        throw InputError("config: simulation.disturbance must be a string");
      cfg.simulation.disturbance = s["disturbance"].get<std::string>();
    }
    cfg.simulation.rho = num(s, "rho", cfg.simulation.rho);
    cfg.simulation.headroom = num(s, "headroom", cfg.simulation.headroom);
    cfg.simulation.seed = uint_of(s, "seed", cfg.simulation.seed);
  }
  if (doc.contains("outputs")) {
    const auto& o = doc["outputs"];
    if (!o.is_object()) throw InputError("config: outputs must be an object");
    reject_unknown(o, {"dir", "plot_data"}, "outputs");
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw InputError("config: outputs.dir must be a string");
      cfg.outputs.dir = o["dir"].get<std::string>();
    }
    if (o.contains("plot_data")) {
      if (!o["plot_data"].is_boolean()) throw InputError("config: outputs.plot_data must be boolean");
      cfg.outputs.plot_data = o["plot_data"].get<bool>();
    }
  }
  if (cfg.simulation.x0.size() == 0) cfg.simulation.x0 = Vector::Zero(cfg.plant.n());
  cfg.validate();
  return cfg;
}

ScenarioConfig ScenarioConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("config: cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

ScenarioConfig ScenarioConfig::example44_defaults() {
  ScenarioConfig cfg;
  cfg.plant = PlantModel::example44();
  cfg.plant_is_example = true;
  cfg.data.J = 100;
  cfg.data.eps = 1e-2;
  cfg.data.input_bound = 1.0;
  cfg.data.state_bound = 5.0;
  cfg.data.seed = 7;
  cfg.synthesis.sigma0 = 1e-2;
  cfg.synthesis.r0 = 10.0;
  cfg.simulation.x0 = Vector::Zero(3);
  cfg.simulation.x0 << 0.95, 0.0, 0.0;
  cfg.simulation.T = 200;
  cfg.simulation.seed = 7017;
  cfg.outputs.dir = "out";
  cfg.validate();
  return cfg;
}

}  // namespace ddhinf
