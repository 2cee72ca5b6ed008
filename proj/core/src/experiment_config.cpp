#include "stratflow/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace stratflow {

namespace {

using json = nlohmann::json;

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
  std::set<std::string> names(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    (void)value;
    if (!names.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& ex) {
    throw ConfigError("bad value for '" + std::string(key) + "' in " + where + ": " + ex.what());
  }
}

template <typename Fn>
auto convert(const std::string& key, Fn fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const std::invalid_argument& ex) {
    throw ConfigError("bad value for '" + key + "': " + ex.what());
  }
}

Vec read_vec(const json& j, const std::string& what) {
  if (!j.is_array()) throw ConfigError(what + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw ConfigError(what + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

Vec read_vec_dim(const json& j, const std::string& what, Eigen::Index n) {
  Vec v = read_vec(j, what);
  if (v.size() != n) throw ConfigError(what + " must have " + std::to_string(n) + " entries");
  return v;
}

void position_of(const std::string& text, std::size_t byte, std::size_t& line, std::size_t& column) {
  line = 1;
  column = 1;
  const std::size_t end = std::min(byte == 0 ? 0 : byte - 1, text.size());
  for (std::size_t i = 0; i < end; ++i) {
    if (text[i] == '\n') {
      ++line;
      column = 1;
    } else {
      ++column;
    }
  }
}

json parse_json(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& ex) {
    std::size_t line = 0, column = 0;
    position_of(text, ex.byte, line, column);
    std::ostringstream msg;
    msg << "JSON syntax error at line " << line << ", column " << column << ": " << ex.what();
    throw ConfigError(msg.str(), line, column);
  }
}

Stratum parse_stratum(const json& j, Eigen::Index n, std::size_t index) {
  const std::string where = "strata entry " + std::to_string(index);
  check_keys(j, where,
             {"name", "kind", "region", "point", "directions", "center", "radius", "normal", "offset", "signs",
              "inner", "outer", "beta", "gamma", "c"});
  std::string name = "M" + std::to_string(index);
  std::string kind = "affine";
  std::string region = "whole";
  read(j, "name", name, where);
  read(j, "kind", kind, where);
  read(j, "region", region, where);
  const auto skind = convert("kind", [&] { return stratum_kind_from_string(kind); });

  Stratum m;
  switch (skind) {
    case StratumKind::affine: {
      if (!j.contains("point")) throw ConfigError(where + ": affine stratum needs 'point'");
      const Vec point = read_vec_dim(j["point"], where + " point", n);
      Eigen::MatrixXd dirs(n, 0);
      if (j.contains("directions")) {
        const auto& d = j["directions"];
        if (!d.is_array()) throw ConfigError(where + ": 'directions' must be an array of vectors");
        dirs.resize(n, static_cast<Eigen::Index>(d.size()));
        for (std::size_t c = 0; c < d.size(); ++c)
          dirs.col(static_cast<Eigen::Index>(c)) = read_vec_dim(d[c], where + " direction", n);
      }
      m = convert("directions", [&] { return Stratum::affine(name, point, dirs); });
      break;
    }
    case StratumKind::sphere: {
      if (!j.contains("center")) throw ConfigError(where + ": sphere stratum needs 'center'");
      double radius = 1.0;
      read(j, "radius", radius, where);
      const Vec center = read_vec_dim(j["center"], where + " center", n);
      m = convert("radius", [&] { return Stratum::sphere(name, center, radius); });
      break;
    }
    case StratumKind::open_region: {
      const auto rkind = convert("region", [&] { return region_kind_from_string(region); });
      switch (rkind) {
        case RegionKind::whole:
          m = Stratum::whole(name, n);
          break;
        case RegionKind::halfspace: {
          if (!j.contains("normal")) throw ConfigError(where + ": halfspace needs 'normal'");
          double offset = 0.0;
          read(j, "offset", offset, where);
          const Vec normal = read_vec_dim(j["normal"], where + " normal", n);
          m = convert("normal", [&] { return Stratum::halfspace(name, normal, offset); });
          break;
        }
        case RegionKind::orthant: {
          if (!j.contains("signs")) throw ConfigError(where + ": orthant needs 'signs'");
          const Vec signs = read_vec_dim(j["signs"], where + " signs", n);
          m = convert("signs", [&] { return Stratum::orthant(name, signs); });
          break;
        }
        case RegionKind::shell: {
          double inner = 0.0, outer = 0.0;
          read(j, "inner", inner, where);
          read(j, "outer", outer, where);
          const Vec center = j.contains("center") ? read_vec_dim(j["center"], where + " center", n) : Vec::Zero(n);
          m = convert("inner", [&] { return Stratum::shell(name, center, inner, outer); });
          break;
        }
      }
      break;
    }
  }
  read(j, "beta", m.beta, where);
  read(j, "gamma", m.gamma, where);
  read(j, "c", m.c, where);
  return m;
}

Stratification stratification_from_json(const json& j, Eigen::Index n) {
  check_keys(j, "strata", {"pairs", "strata", "frontier", "theta", "tau", "c_d", "iota"});
  Stratification s;
  s.function = "custom";
  read(j, "theta", s.theta, "strata");
  read(j, "tau", s.tau, "strata");
  read(j, "c_d", s.c_d, "strata");
  read(j, "iota", s.iota, "strata");
  const auto& list = j.at("strata");
  if (!list.is_array() || list.empty()) throw ConfigError("'strata' must be a non-empty array");
  bool explicit_exponents = false;
  for (std::size_t i = 0; i < list.size(); ++i) {
    s.strata.push_back(parse_stratum(list[i], n, i));
    explicit_exponents = explicit_exponents || list[i].contains("beta") || list[i].contains("gamma");
  }
  s.frontier.assign(s.strata.size(), {});
  if (j.contains("frontier")) {
    const auto& fr = j["frontier"];
    if (!fr.is_array() || fr.size() != s.strata.size())
      throw ConfigError("'frontier' must hold one index list per stratum");
    for (std::size_t i = 0; i < fr.size(); ++i) {
      try {
        s.frontier[i] = fr[i].get<std::vector<std::size_t>>();
      } catch (const json::exception&) {
        throw ConfigError("'frontier' entries must be arrays of stratum indices");
      }
      for (auto idx : s.frontier[i])
        if (idx >= s.strata.size()) throw ConfigError("'frontier' index out of range");
    }
  }
  try {
    if (explicit_exponents) {
      s.derive();
      s.validate();
    } else {
      assign_exponents(s);
    }
  } catch (const std::invalid_argument& ex) {
    throw ConfigError(std::string("invalid stratification: ") + ex.what());
  }
  return s;
}

}  // namespace

StepSchedule ScheduleConfig::build() const {
  switch (kind) {
    case ScheduleKind::harmonic:
      return StepSchedule::harmonic(c, k0);
    case ScheduleKind::power:
      return StepSchedule::power(c, p, k0);
    case ScheduleKind::constant:
      return StepSchedule::constant(c);
    case ScheduleKind::table:
      return StepSchedule::table(values);
  }
  throw std::logic_error("unhandled schedule kind");
}

void ExperimentConfig::validate() const {
  const auto wrap = [](const std::string& key, auto&& fn) {
    try {
      fn();
    } catch (const std::invalid_argument& ex) {
      throw ConfigError("invalid '" + key + "': " + ex.what());
    }
  };
  const auto fn = function;
  wrap("function", [&] { find_function(fn, dimension()); });
  if (method != "inexact" && method != "stochastic" && method != "momentum")
    throw ConfigError("invalid 'method': expected inexact, stochastic or momentum, got '" + method + "'");
  if (method == "inexact") wrap("method constants", [&] { inexact.validate(); });
  if (method == "stochastic") wrap("method constants", [&] { stochastic.validate(); });
  if (method == "momentum") wrap("method constants", [&] { momentum.validate(); });
  wrap("schedule", [&] {
    const auto s = schedule.build();
    for (std::size_t k : {std::size_t{0}, K / 2, K})
      if (!(s(k) > 0.0) || !std::isfinite(s(k))) throw std::invalid_argument("step sizes must be positive");
  });
  if (K < 1) throw ConfigError("invalid 'K': must be >= 1");
  if (seeds.empty()) throw ConfigError("invalid 'seeds': at least one seed is required");
  {
    std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
    if (unique.size() != seeds.size()) throw ConfigError("invalid 'seeds': duplicates");
  }
  if (x0 && static_cast<Eigen::Index>(x0->size()) != dimension())
    throw ConfigError("invalid 'x0': expected " + std::to_string(dimension()) + " entries");
  if (!(init_radius > 0.0)) throw ConfigError("invalid 'init_radius': must be > 0");
  if (!(blowup_radius > 0.0)) throw ConfigError("invalid 'blowup_radius': must be > 0");
  if (!(criticality_r >= 0.0)) throw ConfigError("invalid 'criticality.r': must be >= 0");
  if (criticality_m < 1) throw ConfigError("invalid 'criticality.m': must be >= 1");
  if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("invalid 'windows.zeta': must lie in (0, 1)");
  if (!(gamma > zeta && gamma < 0.5)) throw ConfigError("invalid 'windows.gamma': must lie in (zeta, 1/2)");
  if (!(theta >= 0.0 && theta < 1.0)) throw ConfigError("invalid 'bounds.theta': must lie in [0, 1)");
  if (!(bound_beta > 0.0)) throw ConfigError("invalid 'bounds.beta': must be > 0");
  if (thin_every < 1) throw ConfigError("invalid 'thin_every': must be >= 1");
  if (strata && strata->strata.front().ambient != dimension())
    throw ConfigError("invalid 'strata': dimension does not match the function");
}

ExperimentConfig parse_config(const std::string& text) {
  const json j = parse_json(text);
  check_keys(j, "config",
             {"function", "dim", "method", "c_b", "xi", "tau", "noise", "samples", "tie", "sigma", "law", "kappa",
              "iota_m", "schedule", "K", "seeds", "x0", "init_radius", "blowup_radius", "diagnostics", "criticality",
              "windows", "bounds", "strata", "output", "thin_every", "dense_tail"});
  ExperimentConfig cfg;
  const std::string top = "config";
  read(j, "function", cfg.function, top);
  read(j, "dim", cfg.dim, top);
  read(j, "method", cfg.method, top);

  std::string tie = "first";
  read(j, "tie", tie, top);
  const auto tie_rule = convert("tie", [&] { return tie_rule_from_string(tie); });
  read(j, "c_b", cfg.inexact.c_b, top);
  read(j, "xi", cfg.inexact.xi, top);
  read(j, "tau", cfg.inexact.tau, top);
  std::string noise = "none";
  read(j, "noise", noise, top);
  cfg.inexact.noise = convert("noise", [&] { return noise_mode_from_string(noise); });
  if (cfg.inexact.noise == NoiseMode::custom) throw ConfigError("bad value for 'noise': custom needs code");
  read(j, "samples", cfg.inexact.samples, top);
  cfg.inexact.tie = tie_rule;
  read(j, "sigma", cfg.stochastic.sigma, top);
  std::string law = "gaussian";
  read(j, "law", law, top);
  cfg.stochastic.law = convert("law", [&] { return noise_law_from_string(law); });
  cfg.stochastic.tie = tie_rule;
  read(j, "kappa", cfg.momentum.kappa, top);
  read(j, "iota_m", cfg.momentum.iota_m, top);
  cfg.momentum.tie = tie_rule;

  if (j.contains("schedule")) {
    const auto& s = j["schedule"];
    check_keys(s, "schedule", {"kind", "c", "p", "k0", "values"});
    std::string kind = "harmonic";
    read(s, "kind", kind, "schedule");
    cfg.schedule.kind = convert("schedule.kind", [&] { return schedule_kind_from_string(kind); });
    read(s, "c", cfg.schedule.c, "schedule");
    read(s, "p", cfg.schedule.p, "schedule");
    read(s, "k0", cfg.schedule.k0, "schedule");
    read(s, "values", cfg.schedule.values, "schedule");
  }
  read(j, "K", cfg.K, top);
  read(j, "seeds", cfg.seeds, top);
  if (j.contains("x0")) {
    std::vector<double> x0;
    read(j, "x0", x0, top);
    cfg.x0 = x0;
  }
  read(j, "init_radius", cfg.init_radius, top);
  read(j, "blowup_radius", cfg.blowup_radius, top);

  if (j.contains("diagnostics")) {
    const auto& d = j["diagnostics"];
    check_keys(d, "diagnostics", {"criterion", "criticality", "bounds", "windows", "momentum_decomp", "strata"});
    read(d, "criterion", cfg.diagnostics.criterion, "diagnostics");
    read(d, "criticality", cfg.diagnostics.criticality, "diagnostics");
    read(d, "bounds", cfg.diagnostics.bounds, "diagnostics");
    read(d, "windows", cfg.diagnostics.windows, "diagnostics");
    read(d, "momentum_decomp", cfg.diagnostics.momentum_decomp, "diagnostics");
    read(d, "strata", cfg.diagnostics.strata, "diagnostics");
  }
  if (j.contains("criticality")) {
    const auto& c = j["criticality"];
    check_keys(c, "criticality", {"r", "m"});
    read(c, "r", cfg.criticality_r, "criticality");
    read(c, "m", cfg.criticality_m, "criticality");
  }
  if (j.contains("windows")) {
    const auto& w = j["windows"];
    check_keys(w, "windows", {"zeta", "gamma"});
    read(w, "zeta", cfg.zeta, "windows");
    read(w, "gamma", cfg.gamma, "windows");
  }
  if (j.contains("bounds")) {
    const auto& b = j["bounds"];
    check_keys(b, "bounds", {"mode", "theta", "beta", "level"});
    std::string mode = "inexact";
    read(b, "mode", mode, "bounds");
    cfg.bound_mode = convert("bounds.mode", [&] { return bound_mode_from_string(mode); });
    read(b, "theta", cfg.theta, "bounds");
    read(b, "beta", cfg.bound_beta, "bounds");
    read(b, "level", cfg.level, "bounds");
  }
  if (j.contains("strata")) {
    const auto& s = j["strata"];
    check_keys(s, "strata", {"pairs", "strata", "frontier", "theta", "tau", "c_d", "iota"});
    read(s, "pairs", cfg.strata_pairs, "strata");
    if (s.contains("strata")) cfg.strata = stratification_from_json(s, cfg.dimension());
  }
  std::string output = cfg.output.string();
  read(j, "output", output, top);
  cfg.output = output;
  read(j, "thin_every", cfg.thin_every, top);
  read(j, "dense_tail", cfg.dense_tail, top);

  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

Stratification parse_stratification(const std::string& json_text, Eigen::Index n) {
  return stratification_from_json(parse_json(json_text), n);
}

}  // namespace stratflow
