#include "forgevqe/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fvqe {

namespace {

[[noreturn]] void bad(int line, const std::string& msg) {
  throw std::invalid_argument("config line " + std::to_string(line) + ": " + msg);
}

std::string trim(std::string s) {
  const auto notspace = [](unsigned char c) { return !std::isspace(c); };
  s.erase(s.begin(), std::find_if(s.begin(), s.end(), notspace));
  s.erase(std::find_if(s.rbegin(), s.rend(), notspace).base(), s.end());
  return s;
}

double to_double(const std::string& v, int line) {
  try {
    std::size_t pos = 0;
    const double d = std::stod(v, &pos);
    if (pos != v.size()) bad(line, "trailing characters in number '" + v + "'");
    return d;
  } catch (const std::invalid_argument&) {
    bad(line, "expected a number, got '" + v + "'");
  }
}

int to_int(const std::string& v, int line) {
  const double d = to_double(v, line);
  const int i = int(d);
  if (double(i) != d) bad(line, "expected an integer, got '" + v + "'");
  return i;
}

bool to_bool(const std::string& v, int line) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad(line, "expected a boolean, got '" + v + "'");
}

}  // namespace

ExperimentConfig parse_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::string section;
  int line_no = 0;
  bool saw_model = false;

  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') bad(line_no, "malformed section header");
      section = line.substr(1, line.size() - 2);
      if (section != "model" && section != "engine" && section != "sweep" && section != "output")
        bad(line_no, "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) bad(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (section.empty()) bad(line_no, "key outside any section");

    if (section == "model") {
      saw_model = true;
      if (key == "type") {
        if (value != "fh" && value != "nsm") bad(line_no, "model type must be fh or nsm");
        cfg.model_type = value;
      } else if (key == "n_sites")
        cfg.fh.n_sites = to_int(value, line_no);
      else if (key == "t")
        cfg.fh.t = to_double(value, line_no);
      else if (key == "t_m")
        cfg.fh.t_m = to_double(value, line_no);
      else if (key == "u")
        cfg.fh.u = to_double(value, line_no);
      else if (key == "n_up")
        cfg.fh_n_up = to_int(value, line_no);
      else if (key == "n_down")
        cfg.fh_n_down = to_int(value, line_no);
      else if (key == "interaction_file")
        cfg.nsm_interaction_file = value;
      else if (key == "z_valence")
        cfg.nsm_z_valence = to_int(value, line_no);
      else if (key == "n_valence")
        cfg.nsm_n_valence = to_int(value, line_no);
      else if (key == "twice_jz")
        cfg.twice_jz = to_int(value, line_no);
      else
        bad(line_no, "unknown model key '" + key + "'");
    } else if (section == "engine") {
      if (key == "cuts")
        cfg.engine.cuts = to_int(value, line_no);
      else if (key == "max_iterations")
        cfg.engine.max_iterations = to_int(value, line_no);
      else if (key == "grad_tolerance")
        cfg.engine.grad_stop = to_double(value, line_no);
      else if (key == "infidelity_stop")
        cfg.engine.infidelity_stop = to_double(value, line_no);
      else if (key == "bound_tolerance")
        cfg.engine.bound_tolerance = to_double(value, line_no);
      else if (key == "chi_cut")
        cfg.engine.chi_cut = to_int(value, line_no);
      else if (key == "lambda_mode") {
        if (value == "fixed")
          cfg.engine.lambda_variational = false;
        else if (value == "variational")
          cfg.engine.lambda_variational = true;
        else
          bad(line_no, "lambda_mode must be fixed or variational");
      } else if (key == "lazy_update_interval")
        cfg.engine.lazy_full_update_interval = to_int(value, line_no);
      else if (key == "circuit_exclusion_period")
        cfg.engine.circuit_exclusion_period = to_int(value, line_no);
      else if (key == "threads")
        cfg.engine.threads = to_int(value, line_no);
      else if (key == "inner_max_iterations")
        cfg.engine.inner.max_iterations = to_int(value, line_no);
      else if (key == "inner_grad_tolerance")
        cfg.engine.inner.grad_tolerance = to_double(value, line_no);
      else if (key == "inner_energy_rel_tolerance")
        cfg.engine.inner.energy_rel_tolerance = to_double(value, line_no);
      else if (key == "dense_cutoff")
        cfg.engine.oracle.dense_cutoff = std::size_t(to_int(value, line_no));
      else if (key == "lambda_variational")
        cfg.engine.lambda_variational = to_bool(value, line_no);
      else
        bad(line_no, "unknown engine key '" + key + "'");
    } else if (section == "sweep") {
      if (key == "t_m_values") {
        std::istringstream vs(value);
        std::string item;
        while (std::getline(vs, item, ',')) cfg.t_m_values.push_back(to_double(trim(item), line_no));
      } else
        bad(line_no, "unknown sweep key '" + key + "'");
    } else if (section == "output") {
      if (key == "directory")
        cfg.output_dir = value;
      else if (key == "checkpoint_path")
        cfg.checkpoint_path = value;
      else if (key == "checkpoint_every")
        cfg.checkpoint_every = to_int(value, line_no);
      else
        bad(line_no, "unknown output key '" + key + "'");
    }
  }

  if (!saw_model || cfg.model_type.empty())
    throw std::invalid_argument("config: [model] section with a type is required");
  if (cfg.model_type == "fh") {
    if (cfg.fh.n_sites < 2 || cfg.fh.n_sites % 2)
      throw std::invalid_argument("config: n_sites must be even and at least 2");
    if (cfg.fh_n_up <= 0 && cfg.fh_n_down <= 0)
      throw std::invalid_argument("config: fh model needs n_up / n_down");
  } else {
    if (cfg.nsm_interaction_file.empty())
      throw std::invalid_argument("config: nsm model needs interaction_file");
    if (cfg.nsm_z_valence < 0 || cfg.nsm_n_valence < 0 ||
        cfg.nsm_z_valence + cfg.nsm_n_valence == 0)
      throw std::invalid_argument("config: nsm model needs z_valence / n_valence");
  }
  if (cfg.engine.cuts < 0 || cfg.engine.cuts > 2)
    throw std::invalid_argument("config: cuts must be 0, 1, or 2");
  if (cfg.engine.max_iterations < 0)
    throw std::invalid_argument("config: max_iterations must be non-negative");
  if (cfg.engine.threads < 1) throw std::invalid_argument("config: threads must be positive");
  if (cfg.engine.lazy_full_update_interval < 1)
    throw std::invalid_argument("config: lazy_update_interval must be at least 1");
  return cfg;
}

ExperimentConfig parse_config_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

Model build_model(const ExperimentConfig& config) {
  if (config.model_type == "fh") return build_fh(config.fh);
  return build_nsm_file(config.nsm_interaction_file);
}

GlobalSector config_sector(const ExperimentConfig& config) {
  if (config.model_type == "fh") {
    GlobalSector s = fh_sector(config.fh_n_up, config.fh_n_down);
    return s;
  }
  return nsm_sector(config.nsm_z_valence, config.nsm_n_valence, config.twice_jz);
}

}  // namespace fvqe
