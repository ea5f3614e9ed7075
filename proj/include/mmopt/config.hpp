#pragma once

#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "experiment.hpp"

namespace mmopt {

struct RunConfig {
  ExperimentConfig experiment = paper_preset();
  std::string out;
  std::string format = "csv";  // csv | json-lines
};

// Strict schema: every key must be known, pairs like true_theta/group_sizes
// must stay consistent. Values not present keep the benchmark defaults.
inline RunConfig parse_config_json(const nlohmann::json& j) {
  if (!j.is_object())
    throw std::invalid_argument("config: top level must be an object");
  RunConfig cfg;
  std::vector<double> theta;
  std::vector<Index> sizes = cfg.experiment.true_theta.group_sizes;
  bool theta_set = false, sizes_set = false;

  auto as_number = [](const nlohmann::json& v, const std::string& key) {
    if (!v.is_number())
      throw std::invalid_argument("config: key \"" + key +
                                  "\" must be a number");
    return v.get<double>();
  };

  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& key = it.key();
    const nlohmann::json& v = it.value();
    if (key == "preset") {
      if (!v.is_string() || v.get<std::string>() != "paper")
        throw std::invalid_argument(
            "config: key \"preset\" only supports \"paper\"");
    } else if (key == "n_measurements") {
      cfg.experiment.n_measurements = static_cast<Index>(as_number(v, key));
    } else if (key == "true_theta") {
      if (!v.is_array() || v.empty())
        throw std::invalid_argument(
            "config: key \"true_theta\" must be a non-empty array");
      theta.clear();
      for (const auto& x : v) theta.push_back(as_number(x, key));
      theta_set = true;
    } else if (key == "group_sizes") {
      if (!v.is_array() || v.empty())
        throw std::invalid_argument(
            "config: key \"group_sizes\" must be a non-empty array");
      sizes.clear();
      for (const auto& x : v) sizes.push_back(static_cast<Index>(as_number(x, key)));
      sizes_set = true;
    } else if (key == "q") {
      cfg.experiment.q = as_number(v, key);
    } else if (key == "tau") {
      cfg.experiment.tau = as_number(v, key);
    } else if (key == "gamma") {
      cfg.experiment.gamma = as_number(v, key);
    } else if (key == "noise_variance") {
      cfg.experiment.noise_variance = as_number(v, key);
    } else if (key == "n_monte_carlo") {
      cfg.experiment.n_monte_carlo = static_cast<int>(as_number(v, key));
    } else if (key == "seed") {
      if (!v.is_number_unsigned())
        throw std::invalid_argument(
            "config: key \"seed\" must be a non-negative integer");
      cfg.experiment.seed = v.get<std::uint64_t>();
    } else if (key == "max_iterations") {
      cfg.experiment.solver.max_iterations = static_cast<int>(as_number(v, key));
    } else if (key == "objective_tolerance") {
      cfg.experiment.solver.objective_tolerance = as_number(v, key);
    } else if (key == "constraint_feasibility_tolerance") {
      cfg.experiment.solver.constraint_feasibility_tolerance = as_number(v, key);
    } else if (key == "inner_multiplier_tolerance") {
      cfg.experiment.solver.inner_multiplier_tolerance = as_number(v, key);
    } else if (key == "singularity_floor") {
      cfg.experiment.solver.singularity_floor = as_number(v, key);
    } else if (key == "out") {
      if (!v.is_string())
        throw std::invalid_argument("config: key \"out\" must be a string");
      cfg.out = v.get<std::string>();
    } else if (key == "format") {
      if (!v.is_string() ||
          (v.get<std::string>() != "csv" && v.get<std::string>() != "json-lines"))
        throw std::invalid_argument(
            "config: key \"format\" must be \"csv\" or \"json-lines\"");
      cfg.format = v.get<std::string>();
    } else {
      throw std::invalid_argument("config: unknown key \"" + key + "\"");
    }
  }

  if (theta_set || sizes_set) {
    VectorXd th;
    if (theta_set) {
      th.resize(static_cast<Index>(theta.size()));
      for (std::size_t i = 0; i < theta.size(); ++i)
        th[static_cast<Index>(i)] = theta[i];
    } else {
      th = cfg.experiment.true_theta.values;
    }
    cfg.experiment.true_theta = GroupedVector(th, sizes);  // validates fit
  }
  cfg.experiment.validate();
  return cfg;
}

inline RunConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::invalid_argument("config: cannot open file: " + path);
  nlohmann::json j;
  try {
    is >> j;
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument("config: parse error in " + path + ": " +
                                e.what());
  }
  return parse_config_json(j);
}

}  // namespace mmopt
