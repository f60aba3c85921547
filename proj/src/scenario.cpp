#include "piplus/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

namespace piplus {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string unquote(const std::string& s, int line) {
  if (s.size() >= 2 && ((s.front() == '"' && s.back() == '"') ||
                        (s.front() == '\'' && s.back() == '\''))) {
    return s.substr(1, s.size() - 2);
  }
  if (!s.empty() && (s.front() == '"' || s.front() == '\'')) {
    throw ConfigError("unterminated string", line);
  }
  return s;
}

double parse_number(const std::string& s, int line) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw ConfigError("trailing characters after number", line);
    return v;
  } catch (const ConfigError&) {
    throw;
  } catch (...) {
    throw ConfigError("expected a number, got '" + s + "'", line);
  }
}

int parse_int(const std::string& s, int line) {
  const double v = parse_number(s, line);
  if (v != std::floor(v)) throw ConfigError("expected an integer, got '" + s + "'", line);
  return static_cast<int>(v);
}

}  // namespace

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");

  Scenario sc;
  std::string section;
  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("malformed section header", line);
      section = trim(s.substr(1, s.size() - 2));
      if (section != "model" && section != "grid" && section != "certificate" &&
          section != "tolerances" && section != "run") {
        throw ConfigError("unknown section [" + section + "]", line);
      }
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("expected key = value", line);
    const std::string key = trim(s.substr(0, eq));
    const std::string value = unquote(trim(s.substr(eq + 1)), line);
    if (section.empty()) throw ConfigError("key outside any section", line);

    if (section == "model") {
      if (key == "id") sc.model_id = value;
      else if (key == "a") sc.a = parse_number(value, line);
      else if (key == "b") sc.b = parse_number(value, line);
      else if (key == "q") sc.q = parse_number(value, line);
      else if (key == "r") sc.r = parse_number(value, line);
      else if (key == "h0_gain") sc.h0_gain = parse_number(value, line);
      else if (key == "u_min") sc.u_min = parse_number(value, line);
      else if (key == "u_max") sc.u_max = parse_number(value, line);
      else if (key == "delta") sc.delta = parse_number(value, line);
      else if (key == "table_path") sc.table_path = value;
      else throw ConfigError("unknown key '" + key + "' in [model]", line);
    } else if (section == "grid") {
      if (key == "x_min") sc.x_min = parse_number(value, line);
      else if (key == "x_max") sc.x_max = parse_number(value, line);
      else if (key == "nodes") sc.nodes = parse_int(value, line);
      else if (key == "input_samples") sc.input_samples = parse_int(value, line);
      else if (key == "sigma_abs") sc.sigma_abs = parse_number(value, line);
      else throw ConfigError("unknown key '" + key + "' in [grid]", line);
    } else if (section == "certificate") {
      if (key == "case") sc.cert_case = value;
      else throw ConfigError("unknown key '" + key + "' in [certificate]", line);
    } else if (section == "tolerances") {
      if (key == "tie_tol") sc.tie_tol = parse_number(value, line);
      else if (key == "eval_tol") sc.eval_tol = parse_number(value, line);
      else if (key == "eps_check") sc.eps_check = parse_number(value, line);
      else throw ConfigError("unknown key '" + key + "' in [tolerances]", line);
    } else if (section == "run") {
      if (key == "algo") sc.algo = value;
      else if (key == "iterations") sc.iterations = parse_int(value, line);
      else if (key == "select") sc.select = value;
      else if (key == "seed") sc.seed = static_cast<std::uint64_t>(parse_number(value, line));
      else throw ConfigError("unknown key '" + key + "' in [run]", line);
    }
  }

  if (sc.model_id != "lq" && sc.model_id != "counterexample" && sc.model_id != "custom-table") {
    throw ConfigError("unknown model id '" + sc.model_id + "'");
  }
  if (sc.algo != "pi" && sc.algo != "piplus") {
    throw ConfigError("unknown algorithm '" + sc.algo + "'");
  }
  if (sc.select != "lowest" && sc.select != "adversarial" && sc.select != "random") {
    throw ConfigError("unknown selection rule '" + sc.select + "'");
  }
  if (!sc.cert_case.empty() && sc.cert_case != "general" &&
      sc.cert_case != "chi_leq_identity" && sc.cert_case != "exponential") {
    throw ConfigError("unknown certificate case '" + sc.cert_case + "'");
  }
  return sc;
}

std::vector<TableEntry> load_table_csv(const std::string& path, int* n_states, int* n_inputs) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open table file '" + path + "'");
  std::vector<TableEntry> entries;
  std::string raw;
  int line = 0;
  int max_state = 0, max_input = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(raw);
    if (s.empty() || s.front() == '#') continue;
    if (line == 1 && s.find_first_not_of("stateinpux_,cost") == std::string::npos) {
      continue;  // header row
    }
    std::stringstream ss(s);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(trim(field));
    if (fields.size() != 4) throw ConfigError("expected state,input,next_state,cost", line);
    TableEntry e;
    e.state = parse_int(fields[0], line);
    e.input = parse_int(fields[1], line);
    e.next_state = parse_int(fields[2], line);
    e.cost = parse_number(fields[3], line);
    max_state = std::max({max_state, e.state, e.next_state});
    max_input = std::max(max_input, e.input);
    entries.push_back(e);
  }
  *n_states = max_state + 1;
  *n_inputs = max_input + 1;
  return entries;
}

Instance make_instance(const Scenario& sc) {
  Instance inst = [&] {
    if (sc.model_id == "counterexample") {
      CounterexampleOptions opts;
      opts.delta = sc.delta;
      if (sc.x_max > 0) opts.x_max = sc.x_max;
      if (sc.nodes > 0) opts.nodes = sc.nodes;
      if (sc.input_samples > 0) opts.input_samples = sc.input_samples;
      if (sc.sigma_abs >= 0) opts.sigma_abs = sc.sigma_abs;
      return counterexample_instance(opts);
    }
    if (sc.model_id == "lq") {
      LqOptions opts;
      opts.a = sc.a;
      opts.b = sc.b;
      opts.q = sc.q;
      opts.r = sc.r;
      opts.h0_gain = sc.h0_gain;
      opts.u_min = sc.u_min;
      opts.u_max = sc.u_max;
      if (sc.x_max > 0) opts.x_max = sc.x_max;
      if (sc.nodes > 0) opts.nodes = sc.nodes;
      if (sc.input_samples > 0) opts.input_samples = sc.input_samples;
      if (sc.sigma_abs >= 0) opts.sigma_abs = sc.sigma_abs;
      return lq_instance(opts);
    }
    int n_states = 0, n_inputs = 0;
    auto entries = load_table_csv(sc.table_path, &n_states, &n_inputs);
    const double sigma_abs = sc.sigma_abs >= 0 ? sc.sigma_abs : 0.25;
    return table_instance(n_states, n_inputs, std::move(entries), sigma_abs);
  }();

  if (!sc.cert_case.empty()) {
    if (sc.cert_case == "general") inst.cert.declared_case = Certificate::Case::kGeneral;
    if (sc.cert_case == "chi_leq_identity") {
      inst.cert.declared_case = Certificate::Case::kChiLeqIdentity;
    }
    if (sc.cert_case == "exponential") inst.cert.declared_case = Certificate::Case::kExponential;
  }
  return inst;
}

void echo_scenario(const Scenario& sc, std::ostream& os) {
  os << "[model]\n";
  os << "id = \"" << sc.model_id << "\"\n";
  if (sc.model_id == "lq") {
    os << "a = " << sc.a << "\nb = " << sc.b << "\nq = " << sc.q << "\nr = " << sc.r << "\n";
    os << "h0_gain = " << sc.h0_gain << "\nu_min = " << sc.u_min << "\nu_max = " << sc.u_max
       << "\n";
  } else if (sc.model_id == "counterexample") {
    os << "delta = " << sc.delta << "\n";
  } else {
    os << "table_path = \"" << sc.table_path << "\"\n";
  }
  os << "\n[grid]\n";
  if (sc.x_max > 0) os << "x_max = " << sc.x_max << "\n";
  if (sc.nodes > 0) os << "nodes = " << sc.nodes << "\n";
  if (sc.input_samples > 0) os << "input_samples = " << sc.input_samples << "\n";
  if (sc.sigma_abs >= 0) os << "sigma_abs = " << sc.sigma_abs << "\n";
  if (!sc.cert_case.empty()) {
    os << "\n[certificate]\ncase = \"" << sc.cert_case << "\"\n";
  }
  os << "\n[tolerances]\n";
  os << "tie_tol = " << sc.tie_tol << "\neval_tol = " << sc.eval_tol << "\neps_check = "
     << sc.eps_check << "\n";
  os << "\n[run]\n";
  os << "algo = \"" << sc.algo << "\"\niterations = " << sc.iterations << "\nselect = \""
     << sc.select << "\"\nseed = " << sc.seed << "\n";
}

}  // namespace piplus
