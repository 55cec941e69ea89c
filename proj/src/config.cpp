#include "gpslam/config.hpp"

#include "gpslam/error.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace gpslam {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::InvalidArgument, "option '" + key + "': not a number: '" + v + "'");
}

long to_long(const std::string& key, const std::string& v) {
  long out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw Error(ErrorCode::InvalidArgument, "option '" + key + "': not an integer: '" + v + "'");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
  if (v == "0" || v == "false" || v == "off" || v == "no") return false;
  throw Error(ErrorCode::InvalidArgument, "option '" + key + "': not a boolean: '" + v + "'");
}

}  // namespace

void PipelineConfig::validate() const {
  if (refine_batch < 1) throw Error(ErrorCode::InvalidArgument, "refine_batch must be >= 1");
  if (core_outer_iters < 1 || refine_outer_iters < 1)
    throw Error(ErrorCode::InvalidArgument, "outer iteration counts must be >= 1");
  if (refine_queue_capacity < 1)
    throw Error(ErrorCode::InvalidArgument, "refine_queue_capacity must be >= 1");
}

void SlamConfig::validate() const {
  grid.validate();
  kernel.validate();
  match.validate();
  pipeline.validate();
}

void SlamConfig::set(const std::string& key, const std::string& value) {
  using Setter = std::function<void(const std::string&)>;
  const std::map<std::string, Setter> setters = {
      {"cell_side_a", [&](const std::string& v) { grid.cell_side = to_double(key, v); }},
      {"test_interval_r", [&](const std::string& v) { grid.test_interval = to_double(key, v); }},
      {"min_points", [&](const std::string& v) { grid.min_points = static_cast<int>(to_long(key, v)); }},
      {"planarity_ratio", [&](const std::string& v) { grid.planarity_ratio = to_double(key, v); }},
      {"normal_threshold", [&](const std::string& v) { grid.normal_threshold = to_double(key, v); }},
      {"kappa", [&](const std::string& v) { kernel.kappa = to_double(key, v); }},
      {"sigma", [&](const std::string& v) { kernel.sigma = to_double(key, v); }},
      {"jitter", [&](const std::string& v) { kernel.jitter = to_double(key, v); }},
      {"variance_includes_noise",
       [&](const std::string& v) { kernel.variance_includes_noise = to_bool(key, v); }},
      {"sigma2_thr", [&](const std::string& v) { match.sigma2_thr = to_double(key, v); }},
      {"max_outer_iters",
       [&](const std::string& v) { match.max_outer_iters = static_cast<int>(to_long(key, v)); }},
      {"max_inner_iters",
       [&](const std::string& v) { match.max_inner_iters = static_cast<int>(to_long(key, v)); }},
      {"pose_epsilon_trans", [&](const std::string& v) { match.pose_epsilon_trans = to_double(key, v); }},
      {"pose_epsilon_rot", [&](const std::string& v) { match.pose_epsilon_rot = to_double(key, v); }},
      {"huber_delta", [&](const std::string& v) { match.huber_delta = to_double(key, v); }},
      {"degeneracy_ratio", [&](const std::string& v) { match.degeneracy_ratio = to_double(key, v); }},
      {"variance_floor", [&](const std::string& v) { map.variance_floor = to_double(key, v); }},
      {"max_residue",
       [&](const std::string& v) { map.max_residue = static_cast<std::size_t>(to_long(key, v)); }},
      {"refine_enabled", [&](const std::string& v) { pipeline.refine_enabled = to_bool(key, v); }},
      {"refine_async", [&](const std::string& v) { pipeline.refine_async = to_bool(key, v); }},
      {"refine_batch",
       [&](const std::string& v) { pipeline.refine_batch = static_cast<int>(to_long(key, v)); }},
      {"core_outer_iters",
       [&](const std::string& v) { pipeline.core_outer_iters = static_cast<int>(to_long(key, v)); }},
      {"refine_outer_iters",
       [&](const std::string& v) { pipeline.refine_outer_iters = static_cast<int>(to_long(key, v)); }},
      {"refine_queue_capacity",
       [&](const std::string& v) {
         pipeline.refine_queue_capacity = static_cast<std::size_t>(to_long(key, v));
       }},
      {"initial_guess_mode",
       [&](const std::string& v) {
         if (v == "identity")
           pipeline.initial_guess_mode = InitialGuessMode::Identity;
         else if (v == "constant_velocity")
           pipeline.initial_guess_mode = InitialGuessMode::ConstantVelocity;
         else
           throw Error(ErrorCode::InvalidArgument, "initial_guess_mode: unknown value '" + v + "'");
       }},
  };
  const auto it = setters.find(key);
  if (it == setters.end()) throw Error(ErrorCode::InvalidArgument, "unknown option '" + key + "'");
  it->second(trim(value));
}

SlamConfig parse_config(const std::string& text, const std::string& source) {
  SlamConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto sep = line.find('=');
    if (sep == std::string::npos) sep = line.find_first_of(" \t");
    if (sep == std::string::npos) throw ParseError(source, line_no, "expected 'key = value'");
    try {
      cfg.set(trim(line.substr(0, sep)), trim(line.substr(sep + 1)));
    } catch (const ParseError&) {
      throw;
    } catch (const Error& e) {
      throw ParseError(source, line_no, e.what());
    }
  }
  cfg.validate();
  return cfg;
}

SlamConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), path);
}

}  // namespace gpslam
